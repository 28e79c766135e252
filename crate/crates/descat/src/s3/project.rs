//! Projection onto divergence-free 1-forms.
//!
//! The projector is the resolvent form `P A = (Delta - c0)^{-1} s0 curl(curl A)`
//! with the connection Laplacian on 1-forms. The pair `(c0, s0)` is not hard
//! coded: it is calibrated at basis construction by least squares on the
//! coframe element `sigma^1` and on a random exactly divergence-free form
//! (built through the Hodge split `A - grad(Lap^{-1} div A)`, which uses only
//! scalar operators). With this crate's conventions the calibration lands on
//! `(2, -1)` to round-off.

use num_complex::Complex64 as C;

use super::basis::{Axis, Basis};
use super::field::{ScalarField, TangentOneForm};
use crate::error::{Error, Result};
use crate::linalg::{lstsq2, LuFactor};
use crate::VOL_S3;

pub(crate) type RawForm = [Vec<C>; 3];

const EPS: [(usize, usize, usize, f64); 6] = [
    (0, 1, 2, 1.0),
    (0, 2, 1, -1.0),
    (1, 2, 0, 1.0),
    (1, 0, 2, -1.0),
    (2, 0, 1, 1.0),
    (2, 1, 0, -1.0),
];

pub(crate) fn curl_frame_raw(basis: &Basis, a: &RawForm) -> RawForm {
    let n = basis.n_coeffs();
    let mut out = [
        vec![C::default(); n],
        vec![C::default(); n],
        vec![C::default(); n],
    ];
    let mut tmp = vec![C::default(); n];
    for &(i, j, k, sign) in &EPS {
        tmp.iter_mut().for_each(|v| *v = C::default());
        basis.frame_derivative_into(&a[k], Axis::ALL[j], &mut tmp);
        for (o, v) in out[i].iter_mut().zip(tmp.iter()) {
            *o += sign * v;
        }
    }
    out
}

pub(crate) fn div_raw(basis: &Basis, a: &RawForm) -> Vec<C> {
    let n = basis.n_coeffs();
    let mut out = vec![C::default(); n];
    let mut tmp = vec![C::default(); n];
    for (i, axis) in Axis::ALL.iter().enumerate() {
        tmp.iter_mut().for_each(|v| *v = C::default());
        basis.frame_derivative_into(&a[i], *axis, &mut tmp);
        for (o, v) in out.iter_mut().zip(tmp.iter()) {
            *o += v;
        }
    }
    out
}

pub(crate) fn grad_raw(basis: &Basis, f: &[C]) -> RawForm {
    [
        basis.frame_derivative_coeffs(f, Axis::X1),
        basis.frame_derivative_coeffs(f, Axis::X2),
        basis.frame_derivative_coeffs(f, Axis::X3),
    ]
}

/// Hodge curl on raw coefficients (orientation applied).
pub(crate) fn curl_raw(basis: &Basis, a: &RawForm) -> RawForm {
    let or = basis.spec.orientation.sign();
    let cf = basis.spec.frame_normalization;
    let mut out = curl_frame_raw(basis, a);
    for i in 0..3 {
        for (o, v) in out[i].iter_mut().zip(a[i].iter()) {
            *o = or * (*o - cf * v);
        }
    }
    out
}

/// `curl(curl A)`; orientation-independent.
pub(crate) fn curl_curl_raw(basis: &Basis, a: &RawForm) -> RawForm {
    let cf = basis.spec.frame_normalization;
    let mut u = curl_frame_raw(basis, a);
    for i in 0..3 {
        for (o, v) in u[i].iter_mut().zip(a[i].iter()) {
            *o -= cf * v;
        }
    }
    let mut w = curl_frame_raw(basis, &u);
    for i in 0..3 {
        for (o, v) in w[i].iter_mut().zip(u[i].iter()) {
            *o -= cf * v;
        }
    }
    w
}

/// Connection Laplacian `Delta_f + c_f curl_f - c_f^2/2` on raw coefficients.
pub(crate) fn conn_laplacian_raw(basis: &Basis, a: &RawForm) -> RawForm {
    let cf = basis.spec.frame_normalization;
    let cfc = curl_frame_raw(basis, a);
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        let mut c = basis.laplacian_coeffs(&a[i]);
        for ((x, y), z) in c.iter_mut().zip(cfc[i].iter()).zip(a[i].iter()) {
            *x += cf * y - 0.5 * cf * cf * z;
        }
        out[i] = c;
    }
    out
}

/// The calibrated divergence-free projector.
pub struct DivFreeProjector {
    pub c0: f64,
    pub s0: f64,
    /// LU factors of the per-degree resolvent blocks (component x column).
    lus: Vec<LuFactor>,
}

fn lcg_form(basis: &Basis, seed: u64) -> RawForm {
    let mut s = seed;
    let mut next = move || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let n = basis.n_coeffs();
    let mut make = |_: usize| (0..n).map(|_| C::new(next(), next())).collect::<Vec<C>>();
    [make(0), make(1), make(2)]
}

fn hodge_divfree_part(basis: &Basis, a: &RawForm) -> RawForm {
    let d = div_raw(basis, a);
    // psi = Lap^{-1} div a on the mean-zero complement
    let mut psi = d;
    for (twoj, offset) in basis.blocks_iter() {
        let n = (twoj + 1) * (twoj + 1);
        let lam = basis.laplacian_eigenvalue(twoj);
        for v in &mut psi[offset..offset + n] {
            *v = if twoj == 0 { C::default() } else { *v / lam };
        }
    }
    let g = grad_raw(basis, &psi);
    let mut out = a.clone();
    for i in 0..3 {
        for (o, v) in out[i].iter_mut().zip(g[i].iter()) {
            *o -= v;
        }
    }
    out
}

impl DivFreeProjector {
    pub(crate) fn calibrate(basis: &Basis) -> Result<DivFreeProjector> {
        // coframe element sigma^1 as raw coefficients
        let n = basis.n_coeffs();
        let mut sigma: RawForm = [
            vec![C::default(); n],
            vec![C::default(); n],
            vec![C::default(); n],
        ];
        sigma[0][0] = C::new(VOL_S3.sqrt(), 0.0);
        let random_df = hodge_divfree_part(basis, &lcg_form(basis, 0x5eed_cafe));

        let mut rows: Vec<([f64; 2], f64)> = Vec::new();
        let mut scale = 0.0f64;
        for form in [&sigma, &random_df] {
            let cc = curl_curl_raw(basis, form);
            let lap = conn_laplacian_raw(basis, form);
            for i in 0..3 {
                for s in 0..n {
                    let (t, c, l) = (form[i][s], cc[i][s], lap[i][s]);
                    rows.push(([t.re, c.re], l.re));
                    rows.push(([t.im, c.im], l.im));
                    scale = scale.max(l.norm());
                }
            }
        }
        let (c0, s0, residual) = lstsq2(&rows);
        if !(residual <= 1e-8 * scale.max(1.0) * (rows.len() as f64).sqrt()) {
            return Err(Error::Config(format!(
                "divergence-free projector calibration failed: residual {residual:.3e}"
            )));
        }

        // per-degree resolvent blocks of (Delta_conn - c0) on the
        // (component, column) space; identical for every row index.
        let cf = basis.spec.frame_normalization;
        let mut lus = Vec::new();
        for (twoj, _) in basis.blocks_iter() {
            let nb = twoj + 1;
            let dim = 3 * nb;
            // column-action matrices of the frame derivatives
            let mut ax = [
                vec![C::default(); nb * nb],
                vec![C::default(); nb * nb],
                vec![C::default(); nb * nb],
            ];
            for b in 0..nb {
                let mut unit = vec![C::default(); nb];
                unit[b] = C::new(1.0, 0.0);
                // embed the single-row block into a full coefficient vector
                for (axis_i, axis) in Axis::ALL.iter().enumerate() {
                    let mut row_in = vec![C::default(); basis.n_coeffs()];
                    let off = basis.block_offset(twoj);
                    row_in[off..off + nb].copy_from_slice(&unit);
                    let out = basis.frame_derivative_coeffs(&row_in, *axis);
                    for bb in 0..nb {
                        // A[b'][bb] entry with b' = b
                        ax[axis_i][b * nb + bb] = out[off + bb];
                    }
                }
            }
            let base = basis.laplacian_eigenvalue(twoj) - 0.5 * cf * cf - c0;
            let mut m = vec![C::default(); dim * dim];
            for i in 0..3 {
                for b in 0..nb {
                    m[(i * nb + b) * dim + (i * nb + b)] += C::new(base, 0.0);
                }
            }
            for &(i, j, k, sign) in &EPS {
                for bp in 0..nb {
                    for b in 0..nb {
                        // contribution of component k, column b' to row (i, b)
                        m[(i * nb + b) * dim + (k * nb + bp)] += cf * sign * ax[j][bp * nb + b];
                    }
                }
            }
            let lu = LuFactor::new(m, dim)
                .ok_or_else(|| Error::Config(format!("resolvent block 2j={twoj} singular")))?;
            lus.push(lu);
        }

        let projector = DivFreeProjector { c0, s0, lus };

        // calibration acceptance: fixes sigma^1, annihilates gradients
        let p_sigma = projector.apply_raw(basis, &sigma);
        let mut err = 0.0f64;
        for i in 0..3 {
            for (x, y) in p_sigma[i].iter().zip(sigma[i].iter()) {
                err += (x - y).norm_sqr();
            }
        }
        if err.sqrt() > 1e-11 * VOL_S3.sqrt() {
            return Err(Error::Config(format!(
                "projector does not fix sigma^1 after calibration: err {:.3e}",
                err.sqrt()
            )));
        }
        Ok(projector)
    }

    pub(crate) fn apply_raw(&self, basis: &Basis, a: &RawForm) -> RawForm {
        let mut w = curl_curl_raw(basis, a);
        for comp in w.iter_mut() {
            for v in comp.iter_mut() {
                *v *= self.s0;
            }
        }
        // solve (Delta_conn - c0) out = w blockwise
        let n = basis.n_coeffs();
        let mut out = [
            vec![C::default(); n],
            vec![C::default(); n],
            vec![C::default(); n],
        ];
        for (twoj, offset) in basis.blocks_iter() {
            let nb = twoj + 1;
            let dim = 3 * nb;
            let lu = &self.lus[twoj];
            let mut v = vec![C::default(); dim];
            for a_row in 0..nb {
                for i in 0..3 {
                    for b in 0..nb {
                        v[i * nb + b] = w[i][offset + a_row * nb + b];
                    }
                }
                lu.solve(&mut v);
                for i in 0..3 {
                    for b in 0..nb {
                        out[i][offset + a_row * nb + b] = v[i * nb + b];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, basis: &Basis, a: &TangentOneForm) -> TangentOneForm {
        let raw = [
            a.comp[0].coeffs().to_vec(),
            a.comp[1].coeffs().to_vec(),
            a.comp[2].coeffs().to_vec(),
        ];
        let out = self.apply_raw(basis, &raw);
        let arc = a.basis().clone();
        let [c1, c2, c3] = out;
        TangentOneForm::from_components([
            ScalarField::from_coeffs(arc.clone(), c1),
            ScalarField::from_coeffs(arc.clone(), c2),
            ScalarField::from_coeffs(arc, c3),
        ])
    }
}
