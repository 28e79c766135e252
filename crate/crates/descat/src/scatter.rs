//! Wave and scattering maps realised by evolution between the central slice
//! and the boundary slices `tau = ±pi/2`, with round-trip and
//! norm-equivalence diagnostics.
//!
//! The scattering map is computed as a single sweep from `-pi/2` to `+pi/2`
//! (the composition through the central slice collapses by the semigroup
//! property of the flow); the composition route is exercised separately by
//! the round-trip diagnostics.

use serde::Serialize;

use crate::energy::sobolev_energy;
use crate::error::Result;
use crate::evolve::{evolve, EvolveAbort, EvolveConfig, Trajectory};
use crate::state::{sm_distance_sq_phase_modded, AsymptoticData, FieldState, ScriSide};

/// Machine-readable summary of one scattering run.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    #[serde(rename = "S2_minus")]
    pub s2_minus: f64,
    #[serde(rename = "S2_plus")]
    pub s2_plus: f64,
    pub ratio: f64,
    pub roundtrip_error: Option<f64>,
    pub steps: usize,
    pub wallclock: f64,
}

fn unwrap_abort<T>(r: std::result::Result<T, Box<EvolveAbort>>) -> Result<T> {
    r.map_err(|abort| abort.error)
}

/// Forward wave map: evolve central-slice data to future null infinity.
pub fn wave_forward(u0: &FieldState, cfg: &EvolveConfig) -> Result<(AsymptoticData, Trajectory)> {
    let traj = unwrap_abort(evolve(u0, ScriSide::Future.tau(), cfg))?;
    let data = AsymptoticData::new(ScriSide::Future, traj.final_state.clone())?;
    Ok((data, traj))
}

/// Backward wave map: evolve central-slice data to past null infinity.
pub fn wave_backward(u0: &FieldState, cfg: &EvolveConfig) -> Result<(AsymptoticData, Trajectory)> {
    let traj = unwrap_abort(evolve(u0, ScriSide::Past.tau(), cfg))?;
    let data = AsymptoticData::new(ScriSide::Past, traj.final_state.clone())?;
    Ok((data, traj))
}

/// Scattering map: one evolution from past to future null infinity.
pub fn scatter(
    u_minus: &AsymptoticData,
    cfg: &EvolveConfig,
) -> Result<(AsymptoticData, Trajectory)> {
    assert_eq!(
        u_minus.side,
        ScriSide::Past,
        "scatter starts from past data"
    );
    let traj = unwrap_abort(evolve(&u_minus.state, ScriSide::Future.tau(), cfg))?;
    let data = AsymptoticData::new(ScriSide::Future, traj.final_state.clone())?;
    Ok((data, traj))
}

/// Inverse scattering map: evolve future data back to past null infinity.
pub fn inverse_scatter(
    u_plus: &AsymptoticData,
    cfg: &EvolveConfig,
) -> Result<(AsymptoticData, Trajectory)> {
    assert_eq!(
        u_plus.side,
        ScriSide::Future,
        "inverse scatter starts from future data"
    );
    let traj = unwrap_abort(evolve(&u_plus.state, ScriSide::Past.tau(), cfg))?;
    let data = AsymptoticData::new(ScriSide::Past, traj.final_state.clone())?;
    Ok((data, traj))
}

/// Relative phase-modded `S_m` distance between two states.
pub fn relative_sm_distance(u: &FieldState, v: &FieldState, m: usize) -> Result<f64> {
    let d = sm_distance_sq_phase_modded(u, v, m)?.sqrt();
    let scale = sobolev_energy(v, m)?.total.sqrt();
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// `|inverse(forward(u0)) - u0|` in the relative phase-modded `S_m` metric.
pub fn roundtrip_error(u0: &FieldState, m: usize, cfg: &EvolveConfig) -> Result<f64> {
    let (up, _) = wave_forward(u0, cfg)?;
    let back = unwrap_abort(evolve(&up.state, u0.tau, cfg))?;
    relative_sm_distance(&back.final_state, u0, m)
}

/// Full scattering run with diagnostics: past data -> future data, optional
/// inverse round trip, and the S2 norm-equivalence ratio.
pub fn scattering_report(
    u_minus: &AsymptoticData,
    with_roundtrip: bool,
    cfg: &EvolveConfig,
) -> Result<(AsymptoticData, ScatteringReport)> {
    let start = std::time::Instant::now();
    let s2_minus = sobolev_energy(&u_minus.state, 2)?.total;
    let (u_plus, traj) = scatter(u_minus, cfg)?;
    let s2_plus = sobolev_energy(&u_plus.state, 2)?.total;
    let mut steps = traj.steps;
    let roundtrip = if with_roundtrip {
        let (back, traj_back) = inverse_scatter(&u_plus, cfg)?;
        steps += traj_back.steps;
        Some(relative_sm_distance(&back.state, &u_minus.state, 2)?)
    } else {
        None
    };
    let report = ScatteringReport {
        s2_minus,
        s2_plus,
        ratio: if s2_minus > 0.0 {
            s2_plus / s2_minus
        } else {
            0.0
        },
        roundtrip_error: roundtrip,
        steps,
        wallclock: start.elapsed().as_secs_f64(),
    };
    Ok((u_plus, report))
}
