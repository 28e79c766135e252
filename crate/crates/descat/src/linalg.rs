//! Small dense kernels: complex LU with partial pivoting (for the per-degree
//! resolvent blocks) and a Jacobi eigensolver for real symmetric matrices
//! (used by the discrete oracles).

use num_complex::Complex64;

/// LU factorization of a dense n x n complex matrix, row-major.
pub struct LuFactor {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl LuFactor {
    pub fn new(mut a: Vec<Complex64>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm_sqr();
            for i in k + 1..n {
                let v = a[i * n + k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= factor * akj;
                }
            }
        }
        Some(Self { n, lu: a, piv })
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x = vec![Complex64::default(); n];
        for (i, &pi) in self.piv.iter().enumerate() {
            x[i] = b[pi];
        }
        for i in 0..n {
            for j in 0..i {
                let xj = x[j];
                x[i] -= self.lu[i * n + j] * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let xj = x[j];
                x[i] -= self.lu[i * n + j] * xj;
            }
            x[i] /= self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi
/// rotations. Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted
/// ascending and eigenvector `k` stored in column `k` (row-major layout).
/// Intended for modest sizes.
pub fn sym_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let off = |a: &Vec<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s
    };
    for _sweep in 0..100 {
        if off(&a) < 1e-24 * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let ev: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vecs[row * n + new_col] = v[row * n + old_col];
        }
    }
    (ev, vecs)
}

/// Eigenvalues only; see [`sym_eigen`].
pub fn sym_eigenvalues(a: Vec<f64>, n: usize) -> Vec<f64> {
    sym_eigen(a, n).0
}

/// Least-squares solve of an overdetermined real system with two unknowns,
/// via the normal equations. Returns `(x0, x1, residual_norm)`.
pub fn lstsq2(rows: &[([f64; 2], f64)]) -> (f64, f64, f64) {
    let (mut a00, mut a01, mut a11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ([r0, r1], y) in rows {
        a00 += r0 * r0;
        a01 += r0 * r1;
        a11 += r1 * r1;
        b0 += r0 * y;
        b1 += r1 * y;
    }
    let det = a00 * a11 - a01 * a01;
    let x0 = (b0 * a11 - b1 * a01) / det;
    let x1 = (a00 * b1 - a01 * b0) / det;
    let mut res = 0.0;
    for ([r0, r1], y) in rows {
        let e = r0 * x0 + r1 * x1 - y;
        res += e * e;
    }
    (x0, x1, res.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn lu_solves_random_system() {
        let n = 6;
        let mut a = Vec::with_capacity(n * n);
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..n * n {
            a.push(C::new(next(), next()));
        }
        let x_true: Vec<C> = (0..n)
            .map(|i| C::new(i as f64 + 0.5, -(i as f64)))
            .collect();
        let mut b = vec![C::default(); n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[i * n + j] * x_true[j];
            }
        }
        let lu = LuFactor::new(a, n).unwrap();
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn jacobi_finds_known_spectrum() {
        // diag(1,2,3) conjugated by a rotation in the (0,2) plane
        let (c, s) = (0.6f64, 0.8f64);
        let d = [1.0, 2.0, 3.0];
        let mut a = vec![0.0; 9];
        let r = [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    a[i * 3 + j] += r[i][k] * d[k] * r[j][k];
                }
            }
        }
        let ev = sym_eigenvalues(a, 3);
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
