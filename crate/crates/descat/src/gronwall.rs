//! Numerical verifier for the nonlinear comparison bound that closes the
//! higher-order estimates: any continuous `f >= 0` with
//! `f(tau) <= f(0) + int_0^tau f P(sqrt(f))` is dominated by the solution of
//! the sharp comparison ODE `g' = g P(sqrt(g))`, `g(0) = f(0)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Polynomial with nonnegative coefficients, `P(x) = sum_k c_k x^k`.
#[derive(Debug, Clone, Serialize)]
pub struct PolySpec {
    pub coeffs: Vec<f64>,
}

impl PolySpec {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(Error::Domain(
                "comparison polynomial needs nonnegative coefficients".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// The crude constant `D = (d+1) max_k c_k` used by the closed-form
    /// proof bound `exp(D tau_max)`.
    pub fn proof_constant(&self) -> f64 {
        let d = self.degree();
        let max = self.coeffs.iter().cloned().fold(0.0f64, f64::max);
        (d as f64 + 1.0) * max
    }
}

/// Samples of the extremal solution `g`; `blow_up_time` is set if `g`
/// escaped to the overflow guard before `tau_max`.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSolution {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    pub blow_up_time: Option<f64>,
}

const BLOW_UP_GUARD: f64 = 1e12;

/// Integrate `g' = g P(sqrt(g))` with classical Runge-Kutta.
pub fn extremal_solve(p: &PolySpec, f0: f64, tau_max: f64, dtau: f64) -> Result<ExtremalSolution> {
    if f0 < 0.0 {
        return Err(Error::Domain("initial value must be nonnegative".into()));
    }
    if dtau <= 0.0 || tau_max < 0.0 {
        return Err(Error::Config("need dtau > 0 and tau_max >= 0".into()));
    }
    let rhs = |g: f64| -> f64 { g * p.eval(g.max(0.0).sqrt()) };
    let mut taus = vec![0.0];
    let mut values = vec![f0];
    let mut g = f0;
    let mut tau = 0.0;
    while tau < tau_max - 1e-15 {
        let h = dtau.min(tau_max - tau);
        let k1 = rhs(g);
        let k2 = rhs(g + 0.5 * h * k1);
        let k3 = rhs(g + 0.5 * h * k2);
        let k4 = rhs(g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        tau += h;
        if !g.is_finite() || g > BLOW_UP_GUARD {
            return Ok(ExtremalSolution {
                taus,
                values,
                blow_up_time: Some(tau),
            });
        }
        taus.push(tau);
        values.push(g);
    }
    Ok(ExtremalSolution {
        taus,
        values,
        blow_up_time: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub f0: f64,
    pub c: Option<f64>,
    pub blow_up_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaTable {
    pub rows: Vec<LemmaRow>,
    /// Largest initial size with `C(f0) <= 2 C(0+)`, the empirical
    /// smallness threshold.
    pub smallness_threshold: Option<f64>,
    /// Limit bound `exp(P(0) tau_max)` for `f0 -> 0`.
    pub limit_bound: f64,
    /// The proof-route constant `exp(D tau_max)`, reported alongside the
    /// sharp-ODE values without reconciliation.
    pub proof_bound: f64,
}

/// Tabulate `C(f0) = max_tau g(tau)/f0` over a decreasing grid of initial
/// values and locate the empirical smallness threshold.
pub fn verify_lemma(p: &PolySpec, f0_grid: &[f64], tau_max: f64, dtau: f64) -> Result<LemmaTable> {
    if f0_grid.windows(2).any(|w| w[1] >= w[0]) || f0_grid.iter().any(|&f| f < 0.0) {
        return Err(Error::Config(
            "f0 grid must be positive and strictly decreasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(f0_grid.len());
    for &f0 in f0_grid {
        if f0 == 0.0 {
            rows.push(LemmaRow {
                f0,
                c: Some(1.0),
                blow_up_time: None,
            });
            continue;
        }
        let sol = extremal_solve(p, f0, tau_max, dtau)?;
        let c = if sol.blow_up_time.is_some() {
            None
        } else {
            Some(sol.values.iter().cloned().fold(0.0f64, f64::max) / f0)
        };
        rows.push(LemmaRow {
            f0,
            c,
            blow_up_time: sol.blow_up_time,
        });
    }
    let limit_bound = (p.eval(0.0) * tau_max).exp();
    let c_small = rows
        .last()
        .and_then(|r| r.c)
        .ok_or_else(|| Error::NumericalAbort("smallest initial value already blows up".into()))?;
    let mut smallness_threshold = None;
    for row in &rows {
        if let Some(c) = row.c {
            if c <= 2.0 * c_small {
                smallness_threshold = Some(row.f0);
                break;
            }
        }
    }
    Ok(LemmaTable {
        rows,
        smallness_threshold,
        limit_bound,
        proof_bound: (p.proof_constant() * tau_max).exp(),
    })
}

/// Fit a one-term comparison polynomial `P*(x) = C x` from logged samples of
/// `S2(tau)`, such that `|dS2/dtau| <= S2 P*(sqrt(S2))` holds on the samples
/// with a 10% margin.
pub fn fit_pstar(taus: &[f64], s2: &[f64]) -> Result<PolySpec> {
    if taus.len() < 3 || taus.len() != s2.len() {
        return Err(Error::Config(
            "need at least 3 matched samples to fit".into(),
        ));
    }
    let mut c_max = 0.0f64;
    for i in 1..taus.len() - 1 {
        let dt = taus[i + 1] - taus[i - 1];
        if dt.abs() < 1e-300 {
            continue;
        }
        let ds = (s2[i + 1] - s2[i - 1]) / dt;
        let denom = s2[i] * s2[i].max(0.0).sqrt();
        if denom > 1e-300 {
            c_max = c_max.max(ds.abs() / denom);
        }
    }
    PolySpec::new(vec![0.0, 1.1 * c_max])
}

/// Check that the comparison solution with the fitted polynomial dominates
/// the measured samples pointwise. Returns the worst margin
/// `min_tau (g - S2)` (nonnegative means domination holds).
pub fn domination_margin(p: &PolySpec, taus: &[f64], s2: &[f64], dtau: f64) -> Result<f64> {
    let span = taus.last().copied().unwrap_or(0.0) - taus[0];
    let sol = extremal_solve(p, s2[0], span, dtau)?;
    if sol.blow_up_time.is_some() {
        return Err(Error::NumericalAbort(
            "comparison solution blew up inside the window".into(),
        ));
    }
    let mut worst = f64::INFINITY;
    for (&tau, &s) in taus.iter().zip(s2.iter()) {
        let x = tau - taus[0];
        let idx = (x / dtau).floor() as usize;
        let i0 = idx.min(sol.values.len() - 1);
        let i1 = (idx + 1).min(sol.values.len() - 1);
        let frac = (x / dtau - idx as f64).clamp(0.0, 1.0);
        let g = sol.values[i0] * (1.0 - frac) + sol.values[i1] * frac;
        worst = worst.min(g - s);
    }
    Ok(worst)
}
