//! Preconditioned conjugate-gradient solve of the screened Poisson problem
//! `(-Lap + V) u = s` on `S^3`, with `V >= 0`. For `V = 0` the operator is
//! only semidefinite and the solve is restricted to mean-zero data.

use num_complex::Complex64 as C;

use super::basis::Basis;
use super::field::ScalarField;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug)]
pub struct EllipticOutcome {
    pub coeffs: Vec<C>,
    pub rel_residual: f64,
    pub iterations: usize,
}

fn dot_re(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Operator<'a> {
    basis: &'a Basis,
    v_grid: Option<&'a [f64]>,
    v_mean: f64,
}

impl Operator<'_> {
    fn apply(&self, u: &[C]) -> Vec<C> {
        let mut out = match self.v_grid {
            Some(v) => {
                let grid = self.basis.inverse(u);
                let prod: Vec<C> = grid.iter().zip(v.iter()).map(|(g, w)| g * w).collect();
                self.basis.forward(&prod)
            }
            None => vec![C::default(); u.len()],
        };
        for (twoj, offset) in self.basis.blocks_iter() {
            let lam_pos = -self.basis.laplacian_eigenvalue(twoj);
            let n = (twoj + 1) * (twoj + 1);
            for (o, x) in out[offset..offset + n]
                .iter_mut()
                .zip(u[offset..offset + n].iter())
            {
                *o += lam_pos * x;
            }
        }
        out
    }

    fn precondition(&self, r: &[C]) -> Vec<C> {
        let mut z = r.to_vec();
        for (twoj, offset) in self.basis.blocks_iter() {
            let lam_pos = -self.basis.laplacian_eigenvalue(twoj);
            let d = lam_pos + self.v_mean;
            let n = (twoj + 1) * (twoj + 1);
            if d <= 0.0 {
                // V = 0 branch: project out the constant mode
                for v in &mut z[offset..offset + n] {
                    *v = C::default();
                }
            } else {
                for v in &mut z[offset..offset + n] {
                    *v /= d;
                }
            }
        }
        z
    }
}

/// PCG on coefficient vectors. `v_grid` holds the (real, nonnegative) grid
/// samples of V, or `None` for the mean-zero branch.
pub(crate) fn screened_solve_raw(
    basis: &Basis,
    v_grid: Option<&[f64]>,
    v_mean: f64,
    rhs: &[C],
    tol: f64,
    max_iter: usize,
    guess: Option<&[C]>,
) -> Result<EllipticOutcome> {
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(EllipticOutcome {
            coeffs: vec![C::default(); rhs.len()],
            rel_residual: 0.0,
            iterations: 0,
        });
    }
    let mut rhs = rhs.to_vec();
    if v_grid.is_none() {
        // solvability: zero-mean right-hand side, then stay on that subspace
        let mean_mag = rhs[0].norm();
        if mean_mag > tol.max(1e-12) * b_norm {
            return Err(Error::Solvability(format!(
                "mean-zero branch with |mean(s)| = {:.3e} (|s| = {:.3e})",
                mean_mag / crate::VOL_S3.sqrt(),
                b_norm
            )));
        }
        rhs[0] = C::default();
    }

    let op = Operator {
        basis,
        v_grid,
        v_mean,
    };
    let mut u = match guess {
        Some(g) => g.to_vec(),
        None => vec![C::default(); rhs.len()],
    };
    if v_grid.is_none() {
        u[0] = C::default();
    }

    let au = op.apply(&u);
    let mut r: Vec<C> = rhs.iter().zip(au.iter()).map(|(b, a)| b - a).collect();
    if v_grid.is_none() {
        r[0] = C::default();
    }
    let mut z = op.precondition(&r);
    let mut p = z.clone();
    let mut rho = dot_re(&r, &z);
    let mut iterations = 0;

    while iterations < max_iter {
        if norm(&r) <= tol * b_norm {
            break;
        }
        let q = op.apply(&p);
        let alpha = rho / dot_re(&p, &q);
        for i in 0..u.len() {
            u[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if v_grid.is_none() {
            u[0] = C::default();
            r[0] = C::default();
        }
        iterations += 1;
        z = op.precondition(&r);
        let rho_next = dot_re(&r, &z);
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }

    // certify with a true residual
    let au = op.apply(&u);
    let mut true_r: Vec<C> = rhs.iter().zip(au.iter()).map(|(b, a)| b - a).collect();
    if v_grid.is_none() {
        true_r[0] = C::default();
    }
    let rel = norm(&true_r) / b_norm;
    if rel > 10.0 * tol {
        return Err(Error::SolverStalled {
            residual: rel,
            iterations,
        });
    }
    Ok(EllipticOutcome {
        coeffs: u,
        rel_residual: rel,
        iterations,
    })
}

/// Solve `(-Lap + V) u = s` with `V >= 0` real. Returns the solution together
/// with the certified relative residual and iteration count. For `V = 0` the
/// right-hand side must have zero mean (to tolerance) and the unique
/// mean-zero solution is returned.
pub fn solve_screened_poisson(
    v: &ScalarField,
    s: &ScalarField,
    tol: f64,
) -> Result<(ScalarField, f64, usize)> {
    v.check_same_basis(s)?;
    let basis = s.basis().clone();
    let v_im = v.max_imag();
    let scale = v.sup_norm();
    if v_im > 1e-10 * (1.0 + scale) {
        return Err(Error::Domain("screening potential must be real".into()));
    }
    let v_min = v
        .values()
        .iter()
        .map(|x| x.re)
        .fold(f64::INFINITY, f64::min);
    if v_min < -1e-10 * (1.0 + scale) {
        return Err(Error::Domain(format!(
            "screening potential negative somewhere (min {v_min:.3e})"
        )));
    }
    let zero_v = scale < 1e-30;
    let v_real: Vec<f64>;
    let (v_grid, v_mean) = if zero_v {
        (None, 0.0)
    } else {
        v_real = v.values().iter().map(|x| x.re.max(0.0)).collect();
        (Some(&v_real[..]), v.mean().re.max(0.0))
    };
    let out = screened_solve_raw(
        &basis,
        v_grid,
        v_mean,
        s.coeffs(),
        tol,
        DEFAULT_MAX_ITER,
        None,
    )?;
    Ok((
        ScalarField::from_coeffs(basis, out.coeffs),
        out.rel_residual,
        out.iterations,
    ))
}
