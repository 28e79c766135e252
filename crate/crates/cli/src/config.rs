//! Run configuration: a TOML file with sections; unknown keys are rejected
//! and every value is validated before any compute starts. Defaults mirror
//! the settings of the verification suite.

use serde::{Deserialize, Serialize};

fn default_band_limit() -> usize {
    8
}
fn default_dtau() -> f64 {
    1e-3
}
fn default_hubble() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    1
}
fn default_amplitude() -> f64 {
    0.1
}
fn default_m_max() -> usize {
    3
}
fn default_monitor_every() -> usize {
    10
}
fn default_elliptic_tol() -> f64 {
    1e-12
}
fn default_cfl() -> f64 {
    0.5
}
fn default_tau_target() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn default_window() -> [f64; 2] {
    [2.0, 4.0]
}
fn default_threshold() -> f64 {
    1e-4
}
fn default_points() -> usize {
    4
}
fn default_r1() -> f64 {
    0.0
}
fn default_r2() -> f64 {
    0.5
}
fn default_n_angles() -> usize {
    6
}
fn default_t_window() -> [f64; 2] {
    [2.5, 5.0]
}
fn default_n_t() -> usize {
    40
}
fn default_grid_n() -> usize {
    200
}
fn default_t_range() -> [f64; 2] {
    [0.0, 3.0]
}
fn default_r_range() -> [f64; 2] {
    [0.05, 0.9]
}
fn default_f0_grid() -> Vec<f64> {
    vec![0.9, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001]
}
fn default_tau_max() -> f64 {
    1.0
}
fn default_ode_dtau() -> f64 {
    1e-3
}
fn default_poly() -> Vec<f64> {
    vec![0.0, 0.0, 1.0]
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_band_limit")]
    pub band_limit: usize,
    #[serde(default = "default_dtau")]
    pub dtau: f64,
    #[serde(default = "default_hubble")]
    pub hubble: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_monitor_every")]
    pub monitor_every: usize,
    #[serde(default = "default_elliptic_tol")]
    pub elliptic_tol: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    #[serde(default = "default_tau_target")]
    pub tau_target: f64,
    #[serde(default)]
    pub store_states: bool,
    #[serde(default)]
    pub resume_from: Option<String>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(default = "default_true")]
    pub roundtrip: bool,
}

impl Default for ScatterSection {
    fn default() -> Self {
        Self { roundtrip: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFitSection {
    /// Fit window in units of 1/H.
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for DecayFitSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default = "default_r1")]
    pub r1: f64,
    #[serde(default = "default_r2")]
    pub r2: f64,
    #[serde(default = "default_n_angles")]
    pub n_angles: usize,
    #[serde(default = "default_t_window")]
    pub t_window: [f64; 2],
    #[serde(default = "default_n_t")]
    pub n_t: usize,
}

impl Default for ProfileSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenmodeSection {
    #[serde(default = "default_grid_n")]
    pub n_t: usize,
    #[serde(default = "default_grid_n")]
    pub n_r: usize,
    #[serde(default = "default_t_range")]
    pub t_range: [f64; 2],
    /// In units of 1/H.
    #[serde(default = "default_r_range")]
    pub r_range: [f64; 2],
}

impl Default for EigenmodeSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSection {
    #[serde(default = "default_f0_grid")]
    pub f0_grid: Vec<f64>,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_ode_dtau")]
    pub dtau: f64,
    /// Coefficients of the comparison polynomial, constant term first.
    #[serde(default = "default_poly")]
    pub poly: Vec<f64>,
}

impl Default for GronwallSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub scatter: ScatterSection,
    #[serde(default)]
    pub decay_fit: DecayFitSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub eigenmode: EigenmodeSection,
    #[serde(default)]
    pub gronwall: GronwallSection,
}

impl RunConfig {
    pub fn load(path: Option<&std::path::Path>) -> Result<Self, String> {
        let cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("config: {e}"))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let r = &self.run;
        if r.band_limit == 0 || r.band_limit > 32 {
            return Err("run.band_limit must be in 1..=32".into());
        }
        if !(r.dtau > 0.0) {
            return Err("run.dtau must be positive".into());
        }
        if r.dtau > r.cfl / (r.band_limit as f64 + 1.0) {
            return Err(format!(
                "run.dtau = {} violates the stability bound {:.3e}",
                r.dtau,
                r.cfl / (r.band_limit as f64 + 1.0)
            ));
        }
        if !(r.hubble > 0.0) {
            return Err("run.hubble must be positive".into());
        }
        if r.amplitude < 0.0 {
            return Err("run.amplitude must be nonnegative".into());
        }
        if r.m_max > 3 {
            return Err("run.m_max must be at most 3".into());
        }
        if r.monitor_every == 0 {
            return Err("run.monitor_every must be at least 1".into());
        }
        if !(self.evolve.tau_target.abs() <= std::f64::consts::FRAC_PI_2 + r.dtau) {
            return Err("evolve.tau_target outside the compactified interval".into());
        }
        if self.decay_fit.window[0] >= self.decay_fit.window[1] {
            return Err("decay_fit.window must be increasing".into());
        }
        if self.profile.r1 > self.profile.r2 {
            return Err("profile.r1 must not exceed profile.r2".into());
        }
        if self.gronwall.poly.iter().any(|c| *c < 0.0) {
            return Err("gronwall.poly must have nonnegative coefficients".into());
        }
        Ok(())
    }
}
