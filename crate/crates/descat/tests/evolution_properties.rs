//! End-to-end properties of the integrator: exact-solution tracking, field
//! residual convergence, gauge covariance, energy exchange and the blow-up
//! guard. Kept at small band limits so the whole file runs in seconds.

use std::sync::Arc;

use num_complex::Complex64 as C;

use descat::energy::{energy_a_field_strength, energy_phi, equivalence_report, EnergyReport};
use descat::error::Error;
use descat::evolve::{evolve, field_residuals, EvolveConfig};
use descat::s3::basis::{Basis, BasisSpec};
use descat::s3::field::{ScalarField, TangentOneForm};
use descat::s3::ops;
use descat::state::{
    check_state, coulomb_fix, make_admissible, random_raw_data, random_raw_data_banded,
    sm_distance_sq_phase_modded, FieldState, RawData,
};

fn basis(k: usize) -> Arc<Basis> {
    Basis::new(BasisSpec::with_band_limit(k)).unwrap()
}

fn homogeneous(basis: &Arc<Basis>, phi0: f64, phi1: f64) -> FieldState {
    let mut s = FieldState::zero(basis.clone(), 1.0);
    s.phi = ScalarField::constant(basis.clone(), C::new(phi0, 0.0));
    s.phi_dot = ScalarField::constant(basis.clone(), C::new(phi1, 0.0));
    s
}

#[test]
fn homogeneous_solution_tracked_over_half_interval() {
    // phi = eps cos(tau) solves the full nonlinear system with A = A0 = 0
    let b = basis(3);
    let eps = 0.1;
    let s0 = homogeneous(&b, eps, 0.0);
    let cfg = EvolveConfig {
        dtau: 1e-3,
        monitor_every: 200,
        ..Default::default()
    };
    let traj = evolve(&s0, std::f64::consts::FRAC_PI_2, &cfg).unwrap();
    let end = &traj.final_state;
    assert!(end.phi.mean().re.abs() < 1e-8 * eps);
    assert!((end.phi_dot.mean().re + eps).abs() < 1e-8 * eps);
    assert!(end.a_vec.l2_norm_sq().sqrt() < 1e-12);
    // monitors carry a constant energy pi^2 eps^2
    for s in &traj.samples {
        let want = std::f64::consts::PI.powi(2) * eps * eps;
        assert!((s.energy.e_total - want).abs() < 1e-10 * want);
    }
    // S_1 is exactly conserved in theory for this solution
    let eq = equivalence_report(&traj).unwrap();
    assert!((eq.s_ratio_min[0] - 1.0).abs() < 1e-8);
    assert!((eq.s_ratio_max[0] - 1.0).abs() < 1e-8);
}

#[test]
fn a0_dot_h1_bound_constant_is_finite_and_stable() {
    // measured constant of |A0_dot|_{H^1}^2 <= C S2[phi] (1 + S1[A])^2
    let b = basis(4);
    let raw = random_raw_data(&b, 0.15, 91);
    let s0 = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let cfg = EvolveConfig {
        dtau: 2e-3,
        monitor_every: 25,
        store_states: true,
        monitor_commuted: false,
        ..Default::default()
    };
    let traj = evolve(&s0, 0.5, &cfg).unwrap();
    let mut ratios = Vec::new();
    for sample in &traj.samples {
        let state = sample.state.as_ref().unwrap().to_state(&b, 1.0);
        let a0_dot = descat::a0::solve_a0_dot(&state.phi, &state.a_vec, 1e-12).unwrap();
        let h1 = ops::sobolev_norm_sq(&a0_dot, 1).unwrap();
        let s2_phi = sample.energy.s[1].phi;
        let s1_a = sample.energy.s[0].a_vec + sample.energy.s[0].a0;
        let bound = s2_phi * (1.0 + s1_a) * (1.0 + s1_a);
        if bound > 0.0 {
            ratios.push(h1 / bound);
        }
    }
    let max = ratios.iter().cloned().fold(0.0f64, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max.is_finite() && max < 1e3, "C blew up: {max}");
    assert!(
        max / min.max(1e-300) < 50.0,
        "C unstable: [{min:.3e}, {max:.3e}]"
    );
}

#[test]
fn field_residuals_converge_quadratically_in_sample_spacing() {
    let b = basis(4);
    let raw = random_raw_data(&b, 0.08, 21);
    let s0 = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let res_at = |every: usize| -> f64 {
        let cfg = EvolveConfig {
            dtau: 1e-3,
            monitor_every: every,
            store_states: true,
            monitor_commuted: false,
            ..Default::default()
        };
        let traj = evolve(&s0, 0.3, &cfg).unwrap();
        let res = field_residuals(&traj, &b).unwrap();
        res.iter()
            .map(|r| r.scalar_res.max(r.maxwell_res))
            .fold(0.0, f64::max)
    };
    let coarse = res_at(40);
    let fine = res_at(20);
    let ratio = coarse / fine;
    assert!(
        (2.5..7.0).contains(&ratio),
        "FD residual ratio {ratio} (coarse {coarse:e}, fine {fine:e})"
    );
}

#[test]
fn field_residuals_vanish_on_exact_solution_and_zero() {
    // the residual floor is the O(ds^2) derivative reconstruction, so a
    // small amplitude keeps the exact solution below 1e-10
    let b = basis(2);
    let cfg = EvolveConfig {
        dtau: 1e-3,
        monitor_every: 1,
        store_states: true,
        monitor_commuted: false,
        ..Default::default()
    };
    let traj = evolve(&homogeneous(&b, 1e-4, 0.0), 0.05, &cfg).unwrap();
    for r in field_residuals(&traj, &b).unwrap() {
        assert!(r.scalar_res < 1e-10, "scalar residual {:e}", r.scalar_res);
        assert!(r.maxwell_res < 1e-10);
    }
    let traj0 = evolve(&FieldState::zero(b.clone(), 1.0), 0.2, &cfg).unwrap();
    for r in field_residuals(&traj0, &b).unwrap() {
        assert_eq!(r.scalar_res, 0.0);
        assert_eq!(r.maxwell_res, 0.0);
    }
}

#[test]
fn field_residuals_need_three_samples() {
    let b = basis(2);
    let cfg = EvolveConfig {
        dtau: 1e-2,
        monitor_every: 1000,
        store_states: true,
        ..Default::default()
    };
    let traj = evolve(&homogeneous(&b, 0.1, 0.0), 0.05, &cfg).unwrap();
    assert!(matches!(field_residuals(&traj, &b), Err(Error::Config(_))));
}

#[test]
fn gauge_covariant_evolution_end_to_end() {
    // evolving the gauge-fixed transform of gauged data matches the
    // evolution of the original data up to a constant phase
    let b = basis(6);
    let raw = random_raw_data_banded(&b, 2, 0.05, 31);
    let data = make_admissible(&raw, 1.0, 1e-12).unwrap();

    // gauge transform with a low-degree chi so the band keeps exp(i chi)
    let zeta = b.grid_zeta();
    let chi = ScalarField::from_grid(
        b.clone(),
        zeta.iter().map(|&z| C::new(0.05 * z.cos(), 0.0)).collect(),
    );
    let chi_dot = ScalarField::from_grid(
        b.clone(),
        zeta.iter().map(|&z| C::new(0.03 * z.cos(), 0.0)).collect(),
    );
    let phase: Vec<C> = chi
        .values()
        .iter()
        .map(|c| C::from_polar(1.0, -c.re))
        .collect();
    let i_unit = C::new(0.0, 1.0);
    let phi_g = ScalarField::from_grid(
        b.clone(),
        data.phi
            .values()
            .iter()
            .zip(phase.iter())
            .map(|(p, e)| p * e)
            .collect(),
    );
    let phi_dot_g = ScalarField::from_grid(
        b.clone(),
        data.phi_dot
            .values()
            .iter()
            .zip(data.phi.values().iter())
            .zip(chi_dot.values().iter())
            .zip(phase.iter())
            .map(|(((pd, p), cd), e)| (pd - i_unit * cd.re * p) * e)
            .collect(),
    );
    let a_g = data.a_vec.add(&ops::grad(&chi));
    let a_dot_g = data.a_vec_dot.add(&ops::grad(&chi_dot));

    let (a_f, a_dot_f, phi_f, phi_dot_f) = coulomb_fix(&a_g, &a_dot_g, &phi_g, &phi_dot_g).unwrap();
    let refixed = make_admissible(
        &RawData {
            phi0: phi_f,
            phi1: phi_dot_f,
            a_raw: a_f,
            a_dot_raw: a_dot_f,
        },
        1.0,
        1e-12,
    )
    .unwrap();

    let cfg = EvolveConfig {
        dtau: 2e-3,
        monitor_every: usize::MAX - 1,
        monitor_commuted: false,
        ..Default::default()
    };
    let end_direct = evolve(&data, 0.3, &cfg).unwrap().final_state;
    let end_gauged = evolve(&refixed, 0.3, &cfg).unwrap().final_state;
    let d = sm_distance_sq_phase_modded(&end_gauged, &end_direct, 2)
        .unwrap()
        .sqrt();
    let scale = descat::energy::sobolev_energy(&end_direct, 2)
        .unwrap()
        .total
        .sqrt();
    assert!(
        d / scale < 1e-7,
        "gauge covariance violated: {:.3e}",
        d / scale
    );
}

#[test]
fn sector_energies_exchange_while_total_is_conserved() {
    let b = basis(5);
    let raw = random_raw_data(&b, 0.25, 41);
    let s0 = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let cfg = EvolveConfig {
        dtau: 2e-3,
        monitor_every: 10,
        monitor_commuted: false,
        ..Default::default()
    };
    let traj = evolve(&s0, 1.2, &cfg).unwrap();
    let eq = equivalence_report(&traj).unwrap();
    let e_phi: Vec<f64> = traj.samples.iter().map(|s| s.energy.e_phi).collect();
    let spread = e_phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - e_phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let drift_abs = eq.max_energy_drift * traj.samples[0].energy.e_total;
    assert!(
        spread > 10.0 * drift_abs,
        "no sector exchange: spread {spread:e} vs drift {drift_abs:e}"
    );
}

#[test]
fn blow_up_detector_aborts_with_diagnostic() {
    let b = basis(3);
    let raw = random_raw_data(&b, 18.0, 51);
    if let Ok(s0) = make_admissible(&raw, 1.0, 1e-10) {
        let cfg = EvolveConfig {
            dtau: 5e-3,
            monitor_every: 5,
            monitor_commuted: false,
            ..Default::default()
        };
        match evolve(&s0, std::f64::consts::FRAC_PI_2, &cfg) {
            Err(abort) => {
                assert!(matches!(
                    abort.error,
                    Error::NumericalAbort(_) | Error::SolverStalled { .. } | Error::Solvability(_)
                ));
                // the abort carries the monitors collected before it fired
                assert!(!abort.partial.is_empty());
            }
            Ok(traj) => {
                // large data that survives is fine too, but the monitors
                // must then stay finite
                assert!(traj.samples.iter().all(|s| s.energy.e_total.is_finite()));
            }
        }
    }
}

#[test]
fn energy_report_routes_stay_consistent_along_a_run() {
    let b = basis(4);
    let raw = random_raw_data(&b, 0.1, 61);
    let s0 = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let cfg = EvolveConfig {
        dtau: 2e-3,
        monitor_every: 50,
        store_states: true,
        ..Default::default()
    };
    let traj = evolve(&s0, 0.3, &cfg).unwrap();
    for sample in traj.samples.iter() {
        let state = sample.state.as_ref().unwrap().to_state(&b, 1.0);
        let e_pot = sample.energy.e_a;
        let e_fs = energy_a_field_strength(&state);
        assert!((e_pot - e_fs).abs() < 1e-9 * (1.0 + e_pot));
        let report = EnergyReport::compute(&state).unwrap();
        assert!((report.e_phi - energy_phi(&state)).abs() < 1e-12 * (1.0 + report.e_phi));
        // constraints stay at round-off
        assert!(check_state(&state).div_a < 1e-10);
    }
}

#[test]
fn admissibility_shift_leaves_field_strengths_unchanged() {
    let b = basis(4);
    // bias phi1 so the raw a0 has a visible mean
    let raw0 = random_raw_data(&b, 0.1, 71);
    let biased = RawData {
        phi0: raw0.phi0.clone(),
        phi1: raw0.phi1.add(&raw0.phi0.scale(C::new(0.0, 0.7))),
        a_raw: raw0.a_raw.clone(),
        a_dot_raw: raw0.a_dot_raw.clone(),
    };
    let a0_raw = descat::a0::solve_a0(&biased.phi0, &biased.phi1, 1e-12).unwrap();
    assert!(
        a0_raw.raw.mean().re.abs() > 1e-4,
        "bias should give a nonzero mean"
    );
    let s = make_admissible(&biased, 1.0, 1e-12).unwrap();
    // E = grad A0 - A_dot built from the admissible state must match the
    // raw-field version: the shift changes A0 by a constant only
    let e_admissible = descat::state::electric_field(&s);
    let e_raw = ops::grad(&a0_raw.raw).sub(&ops::project_divfree(&biased.a_dot_raw));
    assert!(e_admissible.sub(&e_raw).l2_norm_sq().sqrt() < 1e-9);
    // B = curl A unchanged trivially (A untouched by the shift)
    let b_admissible = ops::curl(&s.a_vec);
    let b_raw = ops::curl(&ops::project_divfree(&biased.a_raw));
    assert!(b_admissible.sub(&b_raw).l2_norm_sq().sqrt() < 1e-12);
}

#[test]
fn equivalence_report_guards_zero_data() {
    let b = basis(2);
    let cfg = EvolveConfig {
        dtau: 5e-3,
        monitor_every: 10,
        ..Default::default()
    };
    let traj = evolve(&FieldState::zero(b, 1.0), 0.1, &cfg).unwrap();
    let eq = equivalence_report(&traj).unwrap();
    assert!(eq.guards_triggered);
    for row in &eq.rows {
        assert!(row.s_ratio[1].is_none());
        assert!(row.energy_drift.is_none());
    }
}

#[test]
fn deterministic_evolution_is_bit_identical() {
    let b = basis(3);
    let raw = random_raw_data(&b, 0.1, 81);
    let s0 = make_admissible(&raw, 1.0, 1e-12).unwrap();
    let cfg = EvolveConfig {
        dtau: 2e-3,
        monitor_every: 20,
        ..Default::default()
    };
    let t1 = evolve(&s0, 0.2, &cfg).unwrap();
    let t2 = evolve(&s0, 0.2, &cfg).unwrap();
    assert_eq!(t1.final_state.phi.coeffs(), t2.final_state.phi.coeffs());
    assert_eq!(t1.final_state.a0.coeffs(), t2.final_state.a0.coeffs());
    let tol_a: Vec<f64> = t1.samples.iter().map(|s| s.energy.e_total).collect();
    let tol_b: Vec<f64> = t2.samples.iter().map(|s| s.energy.e_total).collect();
    assert_eq!(tol_a, tol_b);
}

#[test]
fn dispersion_of_transverse_mode_with_direct_steps() {
    // A = eps sigma^1 cos(2 tau): two full cycles by direct stepping
    use descat::evolve::{step_rk4_vec, StateVec};
    let b = basis(3);
    let mut s = FieldState::zero(b.clone(), 1.0);
    s.a_vec = TangentOneForm::sigma(b.clone(), 0, 0.05);
    let mut y = StateVec::from_state(&s);
    let cfg = EvolveConfig {
        dtau: 1e-3,
        ..Default::default()
    };
    let dt = 1e-3;
    let n = (2.0 * std::f64::consts::PI / dt).round() as usize;
    let mut series = Vec::with_capacity(n + 1);
    series.push(y.a[0][0].re);
    let mut warm: Option<Vec<C>> = None;
    for _ in 0..n {
        let (next, a0) = step_rk4_vec(&b, &y, dt, warm.as_deref(), &cfg).unwrap();
        y = next;
        warm = Some(a0);
        series.push(y.a[0][0].re);
    }
    // cos(w dt) from the three-term recursion of a sampled sinusoid
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..series.len() - 1 {
        num += series[i] * (series[i + 1] + series[i - 1]);
        den += 2.0 * series[i] * series[i];
    }
    let omega = (num / den).acos() / dt;
    assert!(
        (omega - 2.0).abs() / 2.0 < 1e-3,
        "sigma mode frequency {omega}"
    );
}
