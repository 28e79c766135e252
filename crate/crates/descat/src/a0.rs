//! The non-dynamical sector: per-slice elliptic solves for the temporal
//! potential `A0` and its time derivative.
//!
//! `A0` solves `(-Lap + |phi|^2) A0 = -Im(conj(phi) phi_dot)`. Its time
//! derivative is obtained by eliminating `phi_ddot` between the
//! tau-differentiated elliptic equation and the scalar field equation; the
//! `|phi|^2 A0_dot` and `A0 Re(conj(phi) phi_dot)` terms cancel exactly and
//! leave one constant-coefficient Poisson problem
//! `-Lap A0_dot = -div Im(conj(phi) grad phi) - 2 A . Re(conj(phi) grad phi)`.
//! The right-hand side has zero mean whenever `div A = 0`.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::s3::basis::Axis;
use crate::s3::elliptic::{screened_solve_raw, DEFAULT_MAX_ITER};
use crate::s3::field::{ScalarField, TangentOneForm};
use crate::s3::ops;

/// Outcome of the `A0` slice solve.
#[derive(Debug, Clone)]
pub struct A0Solve {
    pub raw: ScalarField,
    pub mean_zero: ScalarField,
    /// Measured constant of the energy bound
    /// `(|grad A0|^2 + |phi A0|^2 + |A0|^2) / |phi_dot|^2`.
    pub bound_ratio: f64,
    pub rel_residual: f64,
    pub iterations: usize,
}

/// Exact quadrature of `int w |f|^2` for a nonnegative grid weight.
fn weighted_l2_sq(f: &ScalarField, w: &[f64]) -> f64 {
    let vals: Vec<num_complex::Complex64> = f
        .values()
        .iter()
        .zip(w.iter())
        .map(|(v, &wt)| num_complex::Complex64::new(wt * v.norm_sqr(), 0.0))
        .collect();
    f.basis().integrate_grid(&vals).re
}

pub fn solve_a0(phi: &ScalarField, phi_dot: &ScalarField, tol: f64) -> Result<A0Solve> {
    phi.check_same_basis(phi_dot)?;
    let basis = phi.basis().clone();
    let v: Vec<f64> = phi.values().iter().map(|p| p.norm_sqr()).collect();
    let rhs_vals: Vec<C> = phi
        .values()
        .iter()
        .zip(phi_dot.values().iter())
        .map(|(p, pd)| C::new(-(p.conj() * pd).im, 0.0))
        .collect();
    let rhs = basis.forward(&rhs_vals);
    let v_max = v.iter().fold(0.0f64, |a, &b| a.max(b));
    let zero_v = v_max < 1e-30;
    let v_mean = if zero_v {
        0.0
    } else {
        let vals: Vec<C> = v.iter().map(|&x| C::new(x, 0.0)).collect();
        basis.integrate_grid(&vals).re / crate::VOL_S3
    };
    let out = screened_solve_raw(
        &basis,
        if zero_v { None } else { Some(&v) },
        v_mean,
        &rhs,
        tol,
        DEFAULT_MAX_ITER,
        None,
    )?;
    let raw = ScalarField::from_coeffs(basis.clone(), out.coeffs);
    let mean_zero = raw.mean_subtracted();

    let pd_sq = phi_dot.l2_norm_sq();
    let bound_ratio = if pd_sq > 0.0 {
        let grad_sq = ops::grad(&raw).l2_norm_sq();
        let phi_a0 = weighted_l2_sq(&raw, &v);
        (grad_sq + phi_a0 + raw.l2_norm_sq()) / pd_sq
    } else {
        0.0
    };
    Ok(A0Solve {
        raw,
        mean_zero,
        bound_ratio,
        rel_residual: out.rel_residual,
        iterations: out.iterations,
    })
}

/// Relative solvability threshold for the mean of the `A0_dot` source.
pub const SOLVABILITY_REL: f64 = 1e-9;

/// Mean-zero solution of the eliminated `A0_dot` equation. Errors if the
/// source mean exceeds `SOLVABILITY_REL` times its norm (constraint drift).
pub fn solve_a0_dot(phi: &ScalarField, a_vec: &TangentOneForm, tol: f64) -> Result<ScalarField> {
    let basis = phi.basis().clone();
    // grad phi in frame components, on the grid
    let grads: Vec<Vec<C>> = Axis::ALL
        .iter()
        .map(|&ax| basis.inverse(&basis.frame_derivative_coeffs(phi.coeffs(), ax)))
        .collect();
    let n_grid = basis.n_grid();
    let mut div_src = vec![C::default(); basis.n_coeffs()];
    let mut a_dot_re = vec![C::default(); n_grid];
    for (i, g) in grads.iter().enumerate() {
        let mut im_cur = vec![C::default(); n_grid];
        for idx in 0..n_grid {
            let p = phi.values()[idx];
            let d = g[idx];
            let cur = p.conj() * d;
            im_cur[idx] = C::new(cur.im, 0.0);
            a_dot_re[idx] += a_vec.comp[i].values()[idx] * cur.re;
        }
        let cur_coeffs = basis.forward(&im_cur);
        let derived = basis.frame_derivative_coeffs(&cur_coeffs, Axis::ALL[i]);
        for (o, v) in div_src.iter_mut().zip(derived.iter()) {
            *o += v;
        }
    }
    let a_term = basis.forward(&a_dot_re);
    let mut rhs = div_src;
    for (o, v) in rhs.iter_mut().zip(a_term.iter()) {
        *o = -(*o + 2.0 * v);
    }

    let rhs_norm: f64 = rhs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mean_mag = rhs[0].norm();
    if rhs_norm > 0.0 && mean_mag > SOLVABILITY_REL * rhs_norm {
        return Err(Error::Solvability(format!(
            "A0_dot source has relative mean {:.3e} (constraint drift)",
            mean_mag / rhs_norm
        )));
    }
    rhs[0] = C::default();
    let out = screened_solve_raw(&basis, None, 0.0, &rhs, tol, DEFAULT_MAX_ITER, None)?;
    Ok(ScalarField::from_coeffs(basis, out.coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::basis::{Basis, BasisSpec};
    use crate::state;
    use std::sync::Arc;

    fn basis(k: usize) -> Arc<Basis> {
        Basis::new(BasisSpec::with_band_limit(k)).unwrap()
    }

    #[test]
    fn constant_data_closed_form() {
        let b = basis(3);
        let eps = 0.3;
        let c = 1.1;
        let phi = ScalarField::constant(b.clone(), C::new(eps, 0.0));
        let phi_dot = ScalarField::constant(b.clone(), C::new(0.0, c * eps));
        let s = solve_a0(&phi, &phi_dot, 1e-12).unwrap();
        let want = ScalarField::constant(b, C::new(-c, 0.0));
        assert!(s.raw.sub(&want).l2_norm_sq().sqrt() < 1e-10);
        assert!(s.mean_zero.l2_norm_sq().sqrt() < 1e-10);
    }

    #[test]
    fn real_data_gives_zero() {
        let b = basis(4);
        let raw = state::random_raw_data(&b, 0.1, 2);
        let phi_re = ScalarField::from_grid(
            b.clone(),
            raw.phi0
                .values()
                .iter()
                .map(|v| C::new(v.re, 0.0))
                .collect(),
        );
        let phi_dot_re = ScalarField::from_grid(
            b,
            raw.phi1
                .values()
                .iter()
                .map(|v| C::new(v.re, 0.0))
                .collect(),
        );
        let s = solve_a0(&phi_re, &phi_dot_re, 1e-12).unwrap();
        assert!(s.raw.l2_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn zero_phi_gives_zero() {
        let b = basis(3);
        let z = ScalarField::zero(b.clone());
        let s = solve_a0(&z, &z, 1e-12).unwrap();
        assert_eq!(s.raw.l2_norm_sq(), 0.0);
        assert_eq!(s.bound_ratio, 0.0);
    }

    #[test]
    fn energy_bound_holds_with_young_constant() {
        let b = basis(6);
        for seed in [1u64, 2, 3] {
            let raw = state::random_raw_data(&b, 0.15, seed);
            let s = solve_a0(&raw.phi0, &raw.phi1, 1e-12).unwrap();
            // L2-only combination obeys the 1/2-1/2 Young bound
            let grad_sq = ops::grad(&s.raw).l2_norm_sq();
            let v: Vec<f64> = raw.phi0.values().iter().map(|p| p.norm_sqr()).collect();
            let phi_a0 = weighted_l2_sq(&s.raw, &v);
            let ratio = (grad_sq + phi_a0) / raw.phi1.l2_norm_sq();
            assert!(ratio <= 1.0 + 1e-6, "Young bound violated: {ratio}");
        }
    }

    #[test]
    fn poincare_on_mean_zero_a0() {
        let b = basis(5);
        let raw = state::random_raw_data(&b, 0.1, 8);
        let s = solve_a0(&raw.phi0, &raw.phi1, 1e-12).unwrap();
        let mz = &s.mean_zero;
        let l2 = mz.l2_norm_sq().sqrt();
        let grad = ops::grad(mz).l2_norm_sq().sqrt();
        assert!(l2 <= grad / 3f64.sqrt() + 1e-12);
    }

    #[test]
    fn a0_dot_vanishes_for_real_homogeneous_data() {
        let b = basis(4);
        let phi = ScalarField::constant(b.clone(), C::new(0.2, 0.0));
        let a = TangentOneForm::sigma(b.clone(), 0, 0.1);
        let out = solve_a0_dot(&phi, &a, 1e-12).unwrap();
        assert!(out.l2_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn a0_dot_solvability_violation_detected() {
        // a non-divergence-free A produces a source with nonzero mean
        let b = basis(4);
        let raw = state::random_raw_data(&b, 0.6, 4);
        let bad_a = TangentOneForm::from_components([
            ops::grad(&raw.phi1.scale(C::new(40.0, 0.0))).comp[0].clone(),
            ops::grad(&raw.phi1.scale(C::new(40.0, 0.0))).comp[1].clone(),
            ops::grad(&raw.phi1.scale(C::new(40.0, 0.0))).comp[2].clone(),
        ]);
        let r = solve_a0_dot(&raw.phi0, &bad_a, 1e-12);
        assert!(matches!(r, Err(Error::Solvability(_))), "got {r:?}");
    }
}
