//! Wigner rotation matrices for SU(2) irreducibles, built by exponentiating
//! the angular-momentum generator itself so that every convention in the
//! crate (Euler angles, frame derivatives, Laplacian eigenvalues) is tied to
//! one set of matrices.
//!
//! Basis ordering inside a block of spin `j = twoj/2`: index `a = 0..=twoj`
//! labels `m = (twoj - 2a)/2`, i.e. descending m.

/// Ladder coefficient `sqrt(j(j+1) - m(m+1))` with `m = (twom)/2`.
fn c_plus(twoj: usize, twom: i64) -> f64 {
    let j = twoj as f64 / 2.0;
    let m = twom as f64 / 2.0;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// The real antisymmetric generator `W` with `exp(beta W) = d^j(beta)`,
/// i.e. `W = (J_- - J_+)/2` in the descending-m basis.
pub fn w_generator(twoj: usize) -> Vec<f64> {
    let n = twoj + 1;
    let mut w = vec![0.0; n * n];
    for b in 0..n {
        let twom = twoj as i64 - 2 * b as i64;
        // J_+ maps column b (m) into row b-1 (m+1)
        if b >= 1 {
            w[(b - 1) * n + b] -= 0.5 * c_plus(twoj, twom);
        }
        // J_- maps column b (m) into row b+1 (m-1)
        if b + 1 < n {
            w[(b + 1) * n + b] += 0.5 * c_plus(twoj, twom - 2);
        }
    }
    w
}

/// `d^j(beta) = exp(beta W)` by scaling and squaring with a Taylor core.
pub fn d_matrix(twoj: usize, beta: f64) -> Vec<f64> {
    let n = twoj + 1;
    let w = w_generator(twoj);
    // max column sum bounds the spectral norm
    let mut norm: f64 = 0.0;
    for b in 0..n {
        let mut s = 0.0;
        for a in 0..n {
            s += (w[a * n + b] * beta).abs();
        }
        norm = norm.max(s);
    }
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = beta / f64::powi(2.0, squarings as i32);

    let mut result = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
    }
    let mut term = result.clone();
    let mut k = 1.0;
    loop {
        // term <- term * (scale W) / k
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let t = term[i * n + l];
                if t == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i * n + j] += t * scale * w[l * n + j] / k;
                }
            }
        }
        let mut mx: f64 = 0.0;
        for v in &next {
            mx = mx.max(v.abs());
        }
        for (r, t) in result.iter_mut().zip(next.iter()) {
            *r += t;
        }
        term = next;
        k += 1.0;
        if mx < 1e-300 || (mx < 1e-18 && k > 4.0) {
            break;
        }
    }
    for _ in 0..squarings {
        let mut sq = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let t = result[i * n + l];
                if t == 0.0 {
                    continue;
                }
                for j in 0..n {
                    sq[i * n + j] += t * result[l * n + j];
                }
            }
        }
        result = sq;
    }
    result
}

/// Ladder coefficients for the frame-derivative action on the second
/// (right) index of a coefficient block; see `Basis::frame_derivative`.
pub fn ladder_coeffs(twoj: usize) -> (Vec<f64>, Vec<f64>) {
    let n = twoj + 1;
    // cp[b] = sqrt(j(j+1) - m_b(m_b+1)), cm[b] = sqrt(j(j+1) - m_b(m_b-1))
    let mut cp = vec![0.0; n];
    let mut cm = vec![0.0; n];
    for b in 0..n {
        let twom = twoj as i64 - 2 * b as i64;
        cp[b] = c_plus(twoj, twom);
        cm[b] = c_plus(twoj, twom - 2);
    }
    (cp, cm)
}
