//! Method-of-lines integration of the projected gauge-fixed system over the
//! compactified interval.
//!
//! The dynamical vector is `(phi, phi_dot, A, A_dot)` in coefficient space;
//! `A0` and `A0_dot` are re-solved on every Runge-Kutta stage. After each
//! step the form sector is re-projected onto divergence-free fields and the
//! correction is required to stay at round-off size.

use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::a0;
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::s3::basis::{Axis, Basis};
use crate::s3::elliptic::{screened_solve_raw, DEFAULT_MAX_ITER};
use crate::s3::field::{ScalarField, TangentOneForm};
use crate::s3::project;
use crate::state::{check_state, ConstraintReport, FieldState};

/// Integration controls. `dtau` is a magnitude; the direction follows the
/// target time.
#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub dtau: f64,
    pub monitor_every: usize,
    /// Store full state snapshots at monitor samples.
    pub store_states: bool,
    pub cfl: f64,
    pub elliptic_tol: f64,
    /// Abort when S2 exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Relative size of the post-step divergence-free correction that is
    /// still accepted as round-off.
    pub reprojection_gate: f64,
    /// Include the commuted energies in each monitor sample.
    pub monitor_commuted: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dtau: 1e-3,
            monitor_every: 10,
            store_states: false,
            cfl: 0.5,
            elliptic_tol: 1e-12,
            blowup_factor: 1e3,
            reprojection_gate: 1e-8,
            monitor_commuted: true,
        }
    }
}

/// Dynamical variables in coefficient space.
#[derive(Clone)]
pub struct StateVec {
    pub phi: Vec<C>,
    pub phi_dot: Vec<C>,
    pub a: [Vec<C>; 3],
    pub a_dot: [Vec<C>; 3],
}

impl StateVec {
    pub fn from_state(s: &FieldState) -> Self {
        Self {
            phi: s.phi.coeffs().to_vec(),
            phi_dot: s.phi_dot.coeffs().to_vec(),
            a: [
                s.a_vec.comp[0].coeffs().to_vec(),
                s.a_vec.comp[1].coeffs().to_vec(),
                s.a_vec.comp[2].coeffs().to_vec(),
            ],
            a_dot: [
                s.a_vec_dot.comp[0].coeffs().to_vec(),
                s.a_vec_dot.comp[1].coeffs().to_vec(),
                s.a_vec_dot.comp[2].coeffs().to_vec(),
            ],
        }
    }

    fn axpy(&mut self, a: f64, x: &StateVec) {
        let acc = |dst: &mut Vec<C>, src: &Vec<C>| {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += a * s;
            }
        };
        acc(&mut self.phi, &x.phi);
        acc(&mut self.phi_dot, &x.phi_dot);
        for i in 0..3 {
            acc(&mut self.a[i], &x.a[i]);
            acc(&mut self.a_dot[i], &x.a_dot[i]);
        }
    }

    fn added(&self, a: f64, x: &StateVec) -> StateVec {
        let mut out = self.clone();
        out.axpy(a, x);
        out
    }

    /// Sobolev energy S_m of the tuple (with the A0 sector supplied
    /// separately when needed); coefficient-space only.
    pub fn s2_without_a0(&self, basis: &Basis) -> f64 {
        let h = |c: &[C], m: usize| -> f64 {
            let mut acc = 0.0;
            for (twoj, offset) in basis.blocks_iter() {
                let lam = -basis.laplacian_eigenvalue(twoj);
                let mut w = 1.0;
                let mut p = 1.0;
                for _ in 0..m {
                    p *= lam;
                    w += p;
                }
                let n = (twoj + 1) * (twoj + 1);
                acc += w * c[offset..offset + n]
                    .iter()
                    .map(|v| v.norm_sqr())
                    .sum::<f64>();
            }
            acc
        };
        let mut s = h(&self.phi, 2) + h(&self.phi_dot, 1);
        for i in 0..3 {
            s += h(&self.a[i], 2) + h(&self.a_dot[i], 1);
        }
        s
    }
}

/// One right-hand-side evaluation: time derivatives of the dynamical vector
/// plus the elliptic sector solved on this slice.
pub struct RhsEval {
    pub dy: StateVec,
    pub a0: Vec<C>,
    pub a0_dot: Vec<C>,
    pub a0_iterations: usize,
}

/// Evaluate the projected field equations at the given dynamical vector.
pub fn rhs(basis: &Basis, y: &StateVec, a0_guess: Option<&[C]>, tol: f64) -> Result<RhsEval> {
    let n_grid = basis.n_grid();
    let phi_g = basis.inverse(&y.phi);
    let phi_dot_g = basis.inverse(&y.phi_dot);
    let a_g: [Vec<C>; 3] = [
        basis.inverse(&y.a[0]),
        basis.inverse(&y.a[1]),
        basis.inverse(&y.a[2]),
    ];
    let dphi: [Vec<C>; 3] = [
        basis.inverse(&basis.frame_derivative_coeffs(&y.phi, Axis::X1)),
        basis.inverse(&basis.frame_derivative_coeffs(&y.phi, Axis::X2)),
        basis.inverse(&basis.frame_derivative_coeffs(&y.phi, Axis::X3)),
    ];

    // --- A0 slice solve ------------------------------------------------
    let v: Vec<f64> = phi_g.iter().map(|p| p.norm_sqr()).collect();
    let v_max = v.iter().fold(0.0f64, |a, &b| a.max(b));
    let zero_v = v_max < 1e-30;
    let mut rhs_a0_vals = vec![C::default(); n_grid];
    for i in 0..n_grid {
        rhs_a0_vals[i] = C::new(-(phi_g[i].conj() * phi_dot_g[i]).im, 0.0);
    }
    let rhs_a0 = basis.forward(&rhs_a0_vals);
    let v_mean = if zero_v {
        0.0
    } else {
        let vals: Vec<C> = v.iter().map(|&x| C::new(x, 0.0)).collect();
        basis.integrate_grid(&vals).re / crate::VOL_S3
    };
    let a0_out = screened_solve_raw(
        basis,
        if zero_v { None } else { Some(&v) },
        v_mean,
        &rhs_a0,
        tol,
        DEFAULT_MAX_ITER,
        a0_guess,
    )?;
    let mut a0c = a0_out.coeffs;
    a0c[0] = C::default(); // mean-zero branch
    let a0_g = basis.inverse(&a0c);

    // --- A0_dot by elimination ------------------------------------------
    // sources share the Im(conj(phi) X_i phi) products with the form sector
    let mut im_cur_coeffs: [Vec<C>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut a_dot_re = vec![C::default(); n_grid];
    for i in 0..3 {
        let mut im_cur = vec![C::default(); n_grid];
        for idx in 0..n_grid {
            let cur = phi_g[idx].conj() * dphi[i][idx];
            im_cur[idx] = C::new(cur.im, 0.0);
            a_dot_re[idx] += a_g[i][idx] * cur.re;
        }
        im_cur_coeffs[i] = basis.forward(&im_cur);
    }
    let mut rhs_a0dot = vec![C::default(); basis.n_coeffs()];
    for i in 0..3 {
        let d = basis.frame_derivative_coeffs(&im_cur_coeffs[i], Axis::ALL[i]);
        for (o, v) in rhs_a0dot.iter_mut().zip(d.iter()) {
            *o += v;
        }
    }
    let a_term = basis.forward(&a_dot_re);
    for (o, v) in rhs_a0dot.iter_mut().zip(a_term.iter()) {
        *o = -(*o + 2.0 * v);
    }
    let rhs_norm: f64 = rhs_a0dot.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mean_mag = rhs_a0dot[0].norm();
    if rhs_norm > 0.0 && mean_mag > a0::SOLVABILITY_REL * rhs_norm {
        return Err(Error::Solvability(format!(
            "A0_dot source mean {:.3e} relative to |rhs| = {:.3e}",
            mean_mag / rhs_norm,
            rhs_norm
        )));
    }
    rhs_a0dot[0] = C::default();
    let a0_dot_out = screened_solve_raw(basis, None, 0.0, &rhs_a0dot, tol, DEFAULT_MAX_ITER, None)?;
    let a0_dot = a0_dot_out.coeffs;
    let a0_dot_g = basis.inverse(&a0_dot);

    // --- scalar sector ---------------------------------------------------
    // phi_ddot = Lap phi - phi + P[ -2i A0 phi_dot + 2i A.grad(phi)
    //                               + (A0^2 - |A|^2 - i A0_dot) phi ]
    let i_unit = C::new(0.0, 1.0);
    let mut nonlin = vec![C::default(); n_grid];
    for idx in 0..n_grid {
        let a0v = a0_g[idx].re;
        let a0dv = a0_dot_g[idx].re;
        let mut a_dot_grad = C::default();
        let mut a_sq = 0.0;
        for i in 0..3 {
            let av = a_g[i][idx];
            a_dot_grad += av * dphi[i][idx];
            a_sq += av.norm_sqr();
        }
        nonlin[idx] = -2.0 * i_unit * a0v * phi_dot_g[idx]
            + 2.0 * i_unit * a_dot_grad
            + (C::new(a0v * a0v - a_sq, 0.0) - i_unit * a0dv) * phi_g[idx];
    }
    let mut phi_ddot = basis.forward(&nonlin);
    let lap_phi = basis.laplacian_coeffs(&y.phi);
    for i in 0..phi_ddot.len() {
        phi_ddot[i] += lap_phi[i] - y.phi[i];
    }

    // --- form sector -------------------------------------------------------
    // a_ddot = Delta_conn A - 2A - P(|phi|^2 A + Im(conj(phi) grad phi))
    let mut source: project::RawForm = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        let mut grid = vec![C::default(); n_grid];
        for idx in 0..n_grid {
            grid[idx] = a_g[i][idx] * v[idx];
        }
        let mut coeffs = basis.forward(&grid);
        for (o, w) in coeffs.iter_mut().zip(im_cur_coeffs[i].iter()) {
            *o += w;
        }
        source[i] = coeffs;
    }
    let projector = basis.projector.as_ref().expect("projector calibrated");
    let p_source = projector.apply_raw(basis, &source);
    let a_raw: project::RawForm = [y.a[0].clone(), y.a[1].clone(), y.a[2].clone()];
    let conn = project::conn_laplacian_raw(basis, &a_raw);
    let mut a_ddot: [Vec<C>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        let mut out = conn[i].clone();
        for idx in 0..out.len() {
            out[idx] -= 2.0 * y.a[i][idx] + p_source[i][idx];
        }
        a_ddot[i] = out;
    }

    Ok(RhsEval {
        dy: StateVec {
            phi: y.phi_dot.clone(),
            phi_dot: phi_ddot,
            a: y.a_dot.clone(),
            a_dot: a_ddot,
        },
        a0: a0c,
        a0_dot,
        a0_iterations: a0_out.iterations,
    })
}

/// Assemble a full state (including the slice-solved `A0`) from a dynamical
/// vector.
pub fn state_from_vec(
    basis: &Arc<Basis>,
    y: &StateVec,
    tau: f64,
    hubble: f64,
    tol: f64,
) -> Result<FieldState> {
    let phi = ScalarField::from_coeffs(basis.clone(), y.phi.clone());
    let phi_dot = ScalarField::from_coeffs(basis.clone(), y.phi_dot.clone());
    let solve = a0::solve_a0(&phi, &phi_dot, tol)?;
    Ok(FieldState {
        tau,
        hubble,
        phi,
        phi_dot,
        a_vec: TangentOneForm::from_components([
            ScalarField::from_coeffs(basis.clone(), y.a[0].clone()),
            ScalarField::from_coeffs(basis.clone(), y.a[1].clone()),
            ScalarField::from_coeffs(basis.clone(), y.a[2].clone()),
        ]),
        a_vec_dot: TangentOneForm::from_components([
            ScalarField::from_coeffs(basis.clone(), y.a_dot[0].clone()),
            ScalarField::from_coeffs(basis.clone(), y.a_dot[1].clone()),
            ScalarField::from_coeffs(basis.clone(), y.a_dot[2].clone()),
        ]),
        a0: solve.mean_zero,
    })
}

fn check_cfl(basis: &Basis, dtau: f64, cfl: f64) -> Result<()> {
    let limit = cfl / (basis.band_limit() as f64 + 1.0);
    if dtau.abs() > limit {
        return Err(Error::Config(format!(
            "time step {dtau:.3e} violates the stability bound {limit:.3e}"
        )));
    }
    Ok(())
}

fn form_norm(a: &[Vec<C>; 3]) -> f64 {
    a.iter()
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// One classical Runge-Kutta step with per-stage elliptic solves. The
/// output form sector is re-projected; corrections above the gate abort.
pub fn step_rk4_vec(
    basis: &Basis,
    y: &StateVec,
    dtau: f64,
    a0_warm: Option<&[C]>,
    cfg: &EvolveConfig,
) -> Result<(StateVec, Vec<C>)> {
    check_cfl(basis, dtau, cfg.cfl)?;
    let tol = cfg.elliptic_tol;
    let k1 = rhs(basis, y, a0_warm, tol)?;
    let k2 = rhs(basis, &y.added(dtau / 2.0, &k1.dy), Some(&k1.a0), tol)?;
    let k3 = rhs(basis, &y.added(dtau / 2.0, &k2.dy), Some(&k2.a0), tol)?;
    let k4 = rhs(basis, &y.added(dtau, &k3.dy), Some(&k3.a0), tol)?;
    let mut out = y.clone();
    out.axpy(dtau / 6.0, &k1.dy);
    out.axpy(dtau / 3.0, &k2.dy);
    out.axpy(dtau / 3.0, &k3.dy);
    out.axpy(dtau / 6.0, &k4.dy);

    // constraint damping of pure round-off
    let projector = basis.projector.as_ref().expect("projector calibrated");
    for field in [&mut out.a, &mut out.a_dot] {
        let before = form_norm(field);
        let projected = projector.apply_raw(basis, field);
        let mut diff = 0.0f64;
        for i in 0..3 {
            for (x, y) in projected[i].iter().zip(field[i].iter()) {
                diff += (x - y).norm_sqr();
            }
        }
        let diff = diff.sqrt();
        if before > 0.0 && diff > cfg.reprojection_gate * before {
            return Err(Error::NumericalAbort(format!(
                "divergence correction {:.3e} exceeds round-off gate {:.3e}",
                diff / before,
                cfg.reprojection_gate
            )));
        }
        *field = projected;
    }
    Ok((out, k4.a0))
}

/// Public single-step interface on full states.
pub fn step_rk4(s: &FieldState, dtau: f64, cfg: &EvolveConfig) -> Result<FieldState> {
    let basis = s.basis().clone();
    let y = StateVec::from_state(s);
    let (out, _) = step_rk4_vec(&basis, &y, dtau, Some(s.a0.coeffs()), cfg)?;
    state_from_vec(&basis, &out, s.tau + dtau, s.hubble, cfg.elliptic_tol)
}

/// Compact coefficient-space snapshot stored along a trajectory.
#[derive(Clone, Debug)]
pub struct CompactState {
    pub tau: f64,
    pub phi: Vec<C>,
    pub phi_dot: Vec<C>,
    pub a: [Vec<C>; 3],
    pub a_dot: [Vec<C>; 3],
    pub a0: Vec<C>,
    pub a0_dot: Vec<C>,
}

impl CompactState {
    pub fn to_state(&self, basis: &Arc<Basis>, hubble: f64) -> FieldState {
        FieldState {
            tau: self.tau,
            hubble,
            phi: ScalarField::from_coeffs(basis.clone(), self.phi.clone()),
            phi_dot: ScalarField::from_coeffs(basis.clone(), self.phi_dot.clone()),
            a_vec: TangentOneForm::from_components([
                ScalarField::from_coeffs(basis.clone(), self.a[0].clone()),
                ScalarField::from_coeffs(basis.clone(), self.a[1].clone()),
                ScalarField::from_coeffs(basis.clone(), self.a[2].clone()),
            ]),
            a_vec_dot: TangentOneForm::from_components([
                ScalarField::from_coeffs(basis.clone(), self.a_dot[0].clone()),
                ScalarField::from_coeffs(basis.clone(), self.a_dot[1].clone()),
                ScalarField::from_coeffs(basis.clone(), self.a_dot[2].clone()),
            ]),
            a0: ScalarField::from_coeffs(basis.clone(), self.a0.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub tau: f64,
    pub energy: EnergyReport,
    pub constraints: ConstraintReport,
    pub state: Option<CompactState>,
}

/// Time-ordered monitor log of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub hubble: f64,
    pub dtau: f64,
    pub samples: Vec<TrajectorySample>,
    pub final_state: FieldState,
    pub steps: usize,
}

/// A failed evolution carrying the partial monitor log.
#[derive(Debug)]
pub struct EvolveAbort {
    pub error: Error,
    pub partial: Vec<TrajectorySample>,
}

fn make_sample(
    state: &FieldState,
    y: &StateVec,
    store: bool,
    tol: f64,
    with_commuted: bool,
) -> Result<TrajectorySample> {
    let energy = EnergyReport::compute_with(state, with_commuted)?;
    let constraints = check_state(state);
    let state_snapshot = if store {
        let a0_dot = a0::solve_a0_dot(&state.phi, &state.a_vec, tol)?;
        Some(CompactState {
            tau: state.tau,
            phi: y.phi.clone(),
            phi_dot: y.phi_dot.clone(),
            a: y.a.clone(),
            a_dot: y.a_dot.clone(),
            a0: state.a0.coeffs().to_vec(),
            a0_dot: a0_dot.coeffs().to_vec(),
        })
    } else {
        None
    };
    Ok(TrajectorySample {
        tau: state.tau,
        energy,
        constraints,
        state: state_snapshot,
    })
}

/// Evolve a state to `tau_target` (either direction), landing exactly on the
/// target with a final partial step. Monitors are recorded every
/// `monitor_every` steps and at both endpoints. Aborts carry the monitor
/// samples accumulated so far.
pub fn evolve(
    s0: &FieldState,
    tau_target: f64,
    cfg: &EvolveConfig,
) -> std::result::Result<Trajectory, Box<EvolveAbort>> {
    let basis = s0.basis().clone();
    let mut samples = Vec::new();
    evolve_inner(s0, tau_target, cfg, &basis, &mut samples).map_err(|error| {
        Box::new(EvolveAbort {
            error,
            partial: samples,
        })
    })
}

fn evolve_inner(
    s0: &FieldState,
    tau_target: f64,
    cfg: &EvolveConfig,
    basis: &Arc<Basis>,
    samples: &mut Vec<TrajectorySample>,
) -> Result<Trajectory> {
    {
        if tau_target.abs() > std::f64::consts::FRAC_PI_2 + cfg.dtau {
            return Err(Error::Config(format!(
                "target time {tau_target:.4} outside the compactified interval"
            )));
        }
        check_cfl(basis, cfg.dtau, cfg.cfl)?;
        let mut y = StateVec::from_state(s0);
        let mut tau = s0.tau;
        let mut warm: Option<Vec<C>> = Some(s0.a0.coeffs().to_vec());
        let s2_initial = y.s2_without_a0(basis);

        samples.push(make_sample(
            s0,
            &y,
            cfg.store_states,
            cfg.elliptic_tol,
            cfg.monitor_commuted,
        )?);

        let distance = tau_target - s0.tau;
        let dir = if distance >= 0.0 { 1.0 } else { -1.0 };
        let n_full = (distance.abs() / cfg.dtau).floor() as usize;
        let tail = distance.abs() - n_full as f64 * cfg.dtau;
        let mut steps = 0usize;

        let do_step = |y: &mut StateVec,
                       tau: &mut f64,
                       h: f64,
                       warm: &mut Option<Vec<C>>,
                       steps: &mut usize,
                       samples: &mut Vec<TrajectorySample>|
         -> Result<()> {
            let (next, a0_last) = step_rk4_vec(basis, y, h, warm.as_deref(), cfg)?;
            *y = next;
            *tau += h;
            *warm = Some(a0_last);
            *steps += 1;
            let monitor_due = *steps % cfg.monitor_every == 0;
            if monitor_due {
                let state = state_from_vec(basis, y, *tau, s0.hubble, cfg.elliptic_tol)?;
                samples.push(make_sample(
                    &state,
                    y,
                    cfg.store_states,
                    cfg.elliptic_tol,
                    cfg.monitor_commuted,
                )?);
                let s2 = y.s2_without_a0(basis);
                if s2_initial > 0.0 && s2 > cfg.blowup_factor * s2_initial {
                    return Err(Error::NumericalAbort(format!(
                        "S2 grew to {:.3e} x initial at tau = {:.4}",
                        s2 / s2_initial,
                        *tau
                    )));
                }
            }
            Ok(())
        };

        for _ in 0..n_full {
            do_step(
                &mut y,
                &mut tau,
                dir * cfg.dtau,
                &mut warm,
                &mut steps,
                samples,
            )?;
        }
        if tail > 1e-14 {
            do_step(&mut y, &mut tau, dir * tail, &mut warm, &mut steps, samples)?;
        }
        // land exactly
        tau = tau_target;
        let final_state = state_from_vec(basis, &y, tau, s0.hubble, cfg.elliptic_tol)?;
        let record_final = samples
            .last()
            .map(|s| (s.tau - tau).abs() > 1e-14)
            .unwrap_or(true);
        if record_final {
            samples.push(make_sample(
                &final_state,
                &y,
                cfg.store_states,
                cfg.elliptic_tol,
                cfg.monitor_commuted,
            )?);
        }
        Ok(Trajectory {
            hubble: s0.hubble,
            dtau: cfg.dtau,
            samples: std::mem::take(samples),
            final_state,
            steps,
        })
    }
}

/// Residual norms of the unprojected field equations recovered from stored
/// samples by central differences in time; one entry per interior sample.
#[derive(Debug, Clone)]
pub struct ResidualSample {
    pub tau: f64,
    pub scalar_res: f64,
    pub maxwell_res: f64,
}

pub fn field_residuals(traj: &Trajectory, basis: &Arc<Basis>) -> Result<Vec<ResidualSample>> {
    let mut stored: Vec<&CompactState> = traj
        .samples
        .iter()
        .filter_map(|s| s.state.as_ref())
        .collect();
    if stored.len() < 3 {
        return Err(Error::Config(
            "field residuals need at least 3 stored samples".into(),
        ));
    }
    // use the longest uniformly spaced prefix (the exact landing step can
    // leave one off-cadence sample at the end)
    let ds = stored[1].tau - stored[0].tau;
    let mut uniform_len = 2;
    while uniform_len < stored.len()
        && ((stored[uniform_len].tau - stored[uniform_len - 1].tau) - ds).abs() <= 1e-9
    {
        uniform_len += 1;
    }
    stored.truncate(uniform_len);
    if stored.len() < 3 {
        return Err(Error::Config(
            "field residuals need uniform sample spacing".into(),
        ));
    }
    let n_grid = basis.n_grid();
    let i_unit = C::new(0.0, 1.0);
    let mut out = Vec::new();
    for w in stored.windows(3) {
        let (prev, mid, next) = (w[0], w[1], w[2]);
        let inv = |c: &Vec<C>| basis.inverse(c);
        let central = |a: &Vec<C>, b: &Vec<C>| -> Vec<C> {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| (y - x) / (2.0 * ds))
                .collect()
        };
        let phi_ddot = central(&prev.phi_dot, &next.phi_dot);
        let a0_dot_fd = central(&prev.a0, &next.a0);

        let phi_g = inv(&mid.phi);
        let phi_dot_g = inv(&mid.phi_dot);
        let a0_g = inv(&mid.a0);
        let a0_dot_g = inv(&a0_dot_fd);
        let phi_ddot_g = inv(&phi_ddot);
        let lap_phi_g = inv(&basis.laplacian_coeffs(&mid.phi));
        let a_g: [Vec<C>; 3] = [inv(&mid.a[0]), inv(&mid.a[1]), inv(&mid.a[2])];
        let dphi: [Vec<C>; 3] = [
            inv(&basis.frame_derivative_coeffs(&mid.phi, Axis::X1)),
            inv(&basis.frame_derivative_coeffs(&mid.phi, Axis::X2)),
            inv(&basis.frame_derivative_coeffs(&mid.phi, Axis::X3)),
        ];
        let raw_mid: project::RawForm = [mid.a[0].clone(), mid.a[1].clone(), mid.a[2].clone()];
        let div_a_g = inv(&project::div_raw(basis, &raw_mid));

        let mut s_res_vals = vec![C::default(); n_grid];
        for idx in 0..n_grid {
            let a0v = a0_g[idx].re;
            let mut a_grad = C::default();
            let mut a_sq = 0.0;
            for i in 0..3 {
                a_grad += a_g[i][idx] * dphi[i][idx];
                a_sq += a_g[i][idx].norm_sqr();
            }
            s_res_vals[idx] = phi_ddot_g[idx] - lap_phi_g[idx]
                + 2.0 * i_unit * a0v * phi_dot_g[idx]
                - 2.0 * i_unit * a_grad
                + (C::new(1.0 - a0v * a0v + a_sq, 0.0)
                    + i_unit * (a0_dot_g[idx].re + div_a_g[idx].re))
                    * phi_g[idx];
        }
        let s_coeffs = basis.forward(&s_res_vals);
        let scalar_res = s_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

        // Maxwell residual: a_ddot - Delta_conn A + 2A + |phi|^2 A
        //                   + Im(conj(phi) grad phi) - grad(A0_dot)
        let conn = project::conn_laplacian_raw(basis, &raw_mid);
        let grad_a0dot = project::grad_raw(basis, &a0_dot_fd);
        let mut maxwell_sq = 0.0;
        for i in 0..3 {
            let a_ddot_i = central(&prev.a_dot[i], &next.a_dot[i]);
            let a_ddot_g = inv(&a_ddot_i);
            let conn_g = inv(&conn[i]);
            let grad_g = inv(&grad_a0dot[i]);
            let mut vals = vec![C::default(); n_grid];
            for idx in 0..n_grid {
                let cur = (phi_g[idx].conj() * dphi[i][idx]).im;
                vals[idx] = a_ddot_g[idx] - conn_g[idx]
                    + 2.0 * a_g[i][idx]
                    + phi_g[idx].norm_sqr() * a_g[i][idx]
                    + C::new(cur, 0.0)
                    - grad_g[idx];
            }
            let coeffs = basis.forward(&vals);
            maxwell_sq += coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        out.push(ResidualSample {
            tau: mid.tau,
            scalar_res,
            maxwell_res: maxwell_sq.sqrt(),
        });
    }
    Ok(out)
}
