//! Geometric and Sobolev energy functionals, commuted frame-derivative
//! energies and equivalence diagnostics.
//!
//! The scalar-sector energy is
//! `E[psi] = 1/2 |D0 psi|^2 + 1/2 |D psi|^2 + 1/2 |psi|^2` with the
//! gauge-covariant derivatives of the slice. The form-sector energy is used
//! in the integrated-by-parts gauge-fixed shape
//! `1/2 |A_dot|^2 + 1/2 |grad A0|^2 + 1/2 |nabla A|^2 + |A|^2`,
//! which equals the field-strength form `1/2 |E|^2 + 1/2 |B|^2` when
//! `div A = 0`. Commuted energies feed plain frame derivatives of the fields
//! back into the same functionals.

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::s3::basis::Axis;
use crate::s3::field::{ScalarField, TangentOneForm};
use crate::s3::ops;
use crate::state::{ConstraintReport, FieldState};

/// Sobolev energy of one order, split by sector.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevSplit {
    pub phi: f64,
    pub a_vec: f64,
    pub a0: f64,
    pub total: f64,
}

/// All monitored functionals of one slice.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub tau: f64,
    pub e_phi: f64,
    pub e_a: f64,
    pub e_total: f64,
    /// Commuted-energy sums of order 1 and 2 (scalar + form sectors).
    pub e_comm: [f64; 2],
    /// Sobolev energies S_1, S_2, S_3.
    pub s: [SobolevSplit; 3],
}

impl EnergyReport {
    pub fn compute(state: &FieldState) -> Result<EnergyReport> {
        Self::compute_with(state, true)
    }

    /// With `with_commuted = false` the commuted entries are left NaN; used
    /// by inner verification loops that only monitor `E`, `S_m` and the
    /// constraints.
    pub fn compute_with(state: &FieldState, with_commuted: bool) -> Result<EnergyReport> {
        let e_phi = energy_phi(state);
        let e_a = energy_a(state);
        let e_comm = if with_commuted {
            [commuted_energy(state, 1)?, commuted_energy(state, 2)?]
        } else {
            [f64::NAN; 2]
        };
        let s = [
            sobolev_energy(state, 1)?,
            sobolev_energy(state, 2)?,
            sobolev_energy(state, 3)?,
        ];
        Ok(EnergyReport {
            tau: state.tau,
            e_phi,
            e_a,
            e_total: e_phi + e_a,
            e_comm,
            s,
        })
    }
}

/// Scalar-sector geometric energy.
pub fn energy_phi(s: &FieldState) -> f64 {
    scalar_sector_energy(&s.phi, &s.phi_dot, s)
}

fn scalar_sector_energy(psi: &ScalarField, psi_dot: &ScalarField, s: &FieldState) -> f64 {
    // exact quadrature of the pointwise density; the covariant products are
    // not band-limited, so projected norms would drop their high-degree tail
    let basis = psi.basis().clone();
    let i_unit = C::new(0.0, 1.0);
    let n_grid = basis.n_grid();
    let dpsi: [Vec<C>; 3] = [
        basis.inverse(&basis.frame_derivative_coeffs(psi.coeffs(), Axis::X1)),
        basis.inverse(&basis.frame_derivative_coeffs(psi.coeffs(), Axis::X2)),
        basis.inverse(&basis.frame_derivative_coeffs(psi.coeffs(), Axis::X3)),
    ];
    let mut density = vec![C::default(); n_grid];
    for idx in 0..n_grid {
        let p = psi.values()[idx];
        let d0 = psi_dot.values()[idx] + i_unit * s.a0.values()[idx].re * p;
        let mut dsq = 0.0;
        for i in 0..3 {
            let di = dpsi[i][idx] + i_unit * s.a_vec.comp[i].values()[idx] * p;
            dsq += di.norm_sqr();
        }
        density[idx] = C::new(0.5 * (d0.norm_sqr() + dsq + p.norm_sqr()), 0.0);
    }
    basis.integrate_grid(&density).re
}

/// Form-sector geometric energy in the integrated-by-parts gauge-fixed form.
pub fn energy_a(s: &FieldState) -> f64 {
    let grad_a0 = ops::grad(&s.a0);
    0.5 * s.a_vec_dot.l2_norm_sq()
        + 0.5 * grad_a0.l2_norm_sq()
        + 0.5 * ops::covariant_gradient_norm_sq(&s.a_vec)
        + s.a_vec.l2_norm_sq()
}

/// Field-strength form of the Maxwell energy, `1/2 |E|^2 + 1/2 |B|^2`;
/// agrees with [`energy_a`] on divergence-free states (cross-check route).
pub fn energy_a_field_strength(s: &FieldState) -> f64 {
    let e = ops::grad(&s.a0).sub(&s.a_vec_dot);
    let b = ops::curl(&s.a_vec);
    0.5 * e.l2_norm_sq() + 0.5 * b.l2_norm_sq()
}

/// Covariant frame derivative of a 1-form: `(nabla_i A)_j = X_i a_j -
/// (c_f/2) eps_ijk a_k`.
fn covariant_frame_derivative(a: &TangentOneForm, i: usize) -> TangentOneForm {
    let basis = a.basis().clone();
    let half_cf = 0.5 * basis.spec.frame_normalization;
    const EPS: [(usize, usize, usize, f64); 6] = [
        (0, 1, 2, 1.0),
        (0, 2, 1, -1.0),
        (1, 2, 0, 1.0),
        (1, 0, 2, -1.0),
        (2, 0, 1, 1.0),
        (2, 1, 0, -1.0),
    ];
    let comps: Vec<ScalarField> = (0..3)
        .map(|j| {
            let mut c = basis.frame_derivative_coeffs(a.comp[j].coeffs(), Axis::ALL[i]);
            for &(ii, jj, k, sign) in &EPS {
                if ii == i && jj == j {
                    for (x, y) in c.iter_mut().zip(a.comp[k].coeffs().iter()) {
                        *x -= sign * half_cf * y;
                    }
                }
            }
            ScalarField::from_coeffs(basis.clone(), c)
        })
        .collect();
    let mut it = comps.into_iter();
    TangentOneForm::from_components([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

/// Maxwell-sector energy of a commuted 1-form written through its field
/// strengths (pointwise nonnegative):
/// `1/2 |alpha_dot - grad alpha_0|^2 + 1/2 |curl alpha|^2`.
fn commuted_maxwell_energy(
    alpha: &TangentOneForm,
    alpha_dot: &TangentOneForm,
    alpha0: &ScalarField,
) -> f64 {
    let e = ops::grad(alpha0).sub(alpha_dot);
    let b = ops::curl(alpha);
    0.5 * e.l2_norm_sq() + 0.5 * b.l2_norm_sq()
}

/// Commuted energy of order `m in {1, 2}`: the geometric functionals applied
/// to all m-fold frame derivatives of the fields (scalar and form sectors),
/// with gauge-covariant derivatives of the commuted fields.
pub fn commuted_energy(s: &FieldState, m: usize) -> Result<f64> {
    if !(1..=2).contains(&m) {
        return Err(Error::Domain(format!(
            "commuted order {m} unsupported (1 or 2)"
        )));
    }
    let mut scalars = vec![(s.phi.clone(), s.phi_dot.clone())];
    let mut forms = vec![(s.a_vec.clone(), s.a_vec_dot.clone(), s.a0.clone())];
    for _ in 0..m {
        let mut next_scalars = Vec::with_capacity(scalars.len() * 3);
        for (psi, psi_dot) in &scalars {
            for i in 1..=3 {
                next_scalars.push((
                    ops::frame_derivative(psi, i)?,
                    ops::frame_derivative(psi_dot, i)?,
                ));
            }
        }
        scalars = next_scalars;
        let mut next_forms = Vec::with_capacity(forms.len() * 3);
        for (alpha, alpha_dot, alpha0) in &forms {
            for i in 0..3 {
                next_forms.push((
                    covariant_frame_derivative(alpha, i),
                    covariant_frame_derivative(alpha_dot, i),
                    ops::frame_derivative(alpha0, i + 1)?,
                ));
            }
        }
        forms = next_forms;
    }
    let mut total = 0.0;
    for (psi, psi_dot) in &scalars {
        total += scalar_sector_energy(psi, psi_dot, s);
    }
    for (alpha, alpha_dot, alpha0) in &forms {
        total += commuted_maxwell_energy(alpha, alpha_dot, alpha0);
    }
    Ok(total)
}

/// Sobolev energy `S_m` split by sector:
/// `S_m[phi] = |phi_dot|_{H^{m-1}}^2 + |phi|_{H^m}^2`, likewise for the form
/// sector, and `S_m[A0] = |A0|_{H^m}^2`.
pub fn sobolev_energy(s: &FieldState, m: usize) -> Result<SobolevSplit> {
    if !(1..=3).contains(&m) {
        return Err(Error::Domain(format!(
            "Sobolev order {m} unsupported (1..=3)"
        )));
    }
    let phi = ops::sobolev_norm_sq(&s.phi_dot, m - 1)? + ops::sobolev_norm_sq(&s.phi, m)?;
    let a_vec = ops::sobolev_norm_sq_oneform(&s.a_vec_dot, m - 1)?
        + ops::sobolev_norm_sq_oneform(&s.a_vec, m)?;
    let a0 = ops::sobolev_norm_sq(&s.a0, m)?;
    Ok(SobolevSplit {
        phi,
        a_vec,
        a0,
        total: phi + a_vec + a0,
    })
}

/// One row of the equivalence table.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceRow {
    pub tau: f64,
    /// `S_m(tau)/S_m(0)` for m = 1, 2, 3 (NaN-guarded; `None` if S_m(0) = 0).
    pub s_ratio: [Option<f64>; 3],
    pub e_phi_over_s1_phi: Option<f64>,
    pub e_a_over_s1_a: Option<f64>,
    pub energy_drift: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub s_ratio_min: [f64; 3],
    pub s_ratio_max: [f64; 3],
    pub sector_ratio_min: f64,
    pub sector_ratio_max: f64,
    pub max_energy_drift: f64,
    pub guards_triggered: bool,
}

/// Per-sample norm-equivalence ratios and total-energy drift of a monitored
/// trajectory.
pub fn equivalence_report(traj: &Trajectory) -> Result<EquivalenceReport> {
    let first = traj
        .samples
        .first()
        .ok_or_else(|| Error::Config("equivalence report needs at least one sample".into()))?;
    let s0 = [
        first.energy.s[0].total,
        first.energy.s[1].total,
        first.energy.s[2].total,
    ];
    let e0 = first.energy.e_total;
    let mut rows = Vec::with_capacity(traj.samples.len());
    let mut s_min = [f64::INFINITY; 3];
    let mut s_max = [f64::NEG_INFINITY; 3];
    let mut sector_min = f64::INFINITY;
    let mut sector_max = f64::NEG_INFINITY;
    let mut drift_max = 0.0f64;
    let mut guards = false;
    for sample in &traj.samples {
        let mut s_ratio = [None; 3];
        for m in 0..3 {
            if s0[m] > 0.0 {
                let r = sample.energy.s[m].total / s0[m];
                s_ratio[m] = Some(r);
                s_min[m] = s_min[m].min(r);
                s_max[m] = s_max[m].max(r);
            } else {
                guards = true;
            }
        }
        let sector = |num: f64, den: f64, guards: &mut bool| -> Option<f64> {
            if den > 0.0 {
                Some(num / den)
            } else {
                *guards = true;
                None
            }
        };
        let r_phi = sector(sample.energy.e_phi, sample.energy.s[0].phi, &mut guards);
        let r_a = sector(
            sample.energy.e_a,
            sample.energy.s[0].a_vec + sample.energy.s[0].a0,
            &mut guards,
        );
        for r in [r_phi, r_a].into_iter().flatten() {
            sector_min = sector_min.min(r);
            sector_max = sector_max.max(r);
        }
        let drift = if e0 > 0.0 {
            let d = (sample.energy.e_total - e0).abs() / e0;
            drift_max = drift_max.max(d);
            Some(d)
        } else {
            guards = true;
            None
        };
        rows.push(EquivalenceRow {
            tau: sample.tau,
            s_ratio,
            e_phi_over_s1_phi: r_phi,
            e_a_over_s1_a: r_a,
            energy_drift: drift,
        });
    }
    Ok(EquivalenceReport {
        rows,
        s_ratio_min: s_min,
        s_ratio_max: s_max,
        sector_ratio_min: sector_min,
        sector_ratio_max: sector_max,
        max_energy_drift: drift_max,
        guards_triggered: guards,
    })
}

/// CSV row (schema: tau, E_phi, E_A, E_total, E_comm1, E_comm2, S1, S2, S3,
/// div_a, mean_a0).
pub fn energy_csv_row(tau: f64, e: &EnergyReport, c: &ConstraintReport) -> String {
    format!(
        "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
        tau,
        e.e_phi,
        e.e_a,
        e.e_total,
        e.e_comm[0],
        e.e_comm[1],
        e.s[0].total,
        e.s[1].total,
        e.s[2].total,
        c.div_a,
        c.mean_a0
    )
}

pub const ENERGY_CSV_HEADER: &str = "tau,E_phi,E_A,E_total,E_comm1,E_comm2,S1,S2,S3,div_a,mean_a0";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::basis::{Basis, BasisSpec};
    use crate::state::{self, FieldState};
    use std::sync::Arc;

    fn basis(k: usize) -> Arc<Basis> {
        Basis::new(BasisSpec::with_band_limit(k)).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energies() {
        let b = basis(3);
        let s = FieldState::zero(b, 1.0);
        let r = EnergyReport::compute(&s).unwrap();
        assert_eq!(r.e_total, 0.0);
        assert_eq!(r.e_comm[0], 0.0);
        assert_eq!(r.s[2].total, 0.0);
    }

    #[test]
    fn homogeneous_scalar_energy_closed_form() {
        // phi = eps cos(tau), phi_dot = -eps sin(tau): E_phi = pi^2 eps^2
        let b = basis(3);
        let eps = 0.17;
        for tau in [0.0, 0.4, 1.1] {
            let mut s = FieldState::zero(b.clone(), 1.0);
            s.tau = tau;
            s.phi = ScalarField::constant(b.clone(), C::new(eps * tau.cos(), 0.0));
            s.phi_dot = ScalarField::constant(b.clone(), C::new(-eps * tau.sin(), 0.0));
            let e = energy_phi(&s);
            let want = std::f64::consts::PI.powi(2) * eps * eps;
            assert!((e - want).abs() < 1e-12, "tau {tau}: {e} vs {want}");
        }
    }

    #[test]
    fn sigma_mode_energy_closed_form() {
        // A = eps sigma^1, rest zero: E_A = 4 pi^2 eps^2
        let b = basis(3);
        let eps = 0.21;
        let mut s = FieldState::zero(b.clone(), 1.0);
        s.a_vec = TangentOneForm::sigma(b, 0, eps);
        let e = energy_a(&s);
        let want = 4.0 * std::f64::consts::PI.powi(2) * eps * eps;
        assert!((e - want).abs() < 1e-12, "{e} vs {want}");
        // dual route through the field strengths
        let e2 = energy_a_field_strength(&s);
        assert!((e - e2).abs() < 1e-12);
    }

    #[test]
    fn energy_a_routes_agree_on_divfree_states() {
        let b = basis(5);
        let raw = state::random_raw_data(&b, 0.2, 6);
        let s = state::make_admissible(&raw, 1.0, 1e-12).unwrap();
        let e1 = energy_a(&s);
        let e2 = energy_a_field_strength(&s);
        assert!((e1 - e2).abs() < 1e-10 * (1.0 + e1), "{e1} vs {e2}");
    }

    #[test]
    fn commuted_energy_of_homogeneous_state_vanishes() {
        let b = basis(3);
        let mut s = FieldState::zero(b.clone(), 1.0);
        s.phi = ScalarField::constant(b, C::new(0.3, 0.1));
        assert!(commuted_energy(&s, 1).unwrap() < 1e-24);
        assert!(commuted_energy(&s, 2).unwrap() < 1e-24);
        assert!(commuted_energy(&s, 3).is_err());
    }

    #[test]
    fn sobolev_energy_basics() {
        let b = basis(3);
        let eps = 0.31;
        let mut s = FieldState::zero(b.clone(), 1.0);
        s.phi = ScalarField::constant(b, C::new(eps, 0.0));
        let s1 = sobolev_energy(&s, 1).unwrap();
        let want = 2.0 * std::f64::consts::PI.powi(2) * eps * eps;
        assert!((s1.phi - want).abs() < 1e-12);
        // monotone in m
        let s2 = sobolev_energy(&s, 2).unwrap();
        let s3 = sobolev_energy(&s, 3).unwrap();
        assert!(s1.total <= s2.total + 1e-15 && s2.total <= s3.total + 1e-15);
        assert!(sobolev_energy(&s, 4).is_err());
    }

    #[test]
    fn commuted_order_one_tracks_s2_within_fixed_factor() {
        let b = basis(5);
        let raw = state::random_raw_data(&b, 0.1, 14);
        let s = state::make_admissible(&raw, 1.0, 1e-12).unwrap();
        let e0 = energy_phi(&s) + energy_a(&s);
        let e1 = commuted_energy(&s, 1).unwrap();
        let s2 = sobolev_energy(&s, 2).unwrap().total;
        let ratio = (e0 + e1) / s2;
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "ratio {ratio}");
    }
}
