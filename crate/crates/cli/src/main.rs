//! Batch driver: runs the evolution, scattering, decay and verification
//! experiments from a single TOML configuration and writes machine-readable
//! outputs (CSV/JSON plus binary snapshots) into the output directory.
//!
//! Exit status: 0 success, 2 configuration/validation failure, 3 numerical
//! abort.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use descat::conformal;
use descat::energy;
use descat::error::Error;
use descat::evolve::{evolve, EvolveConfig};
use descat::gronwall;
use descat::io;
use descat::oracle;
use descat::s3::basis::{Basis, BasisSpec};
use descat::scatter;
use descat::state::{make_admissible, random_raw_data, AsymptoticData, FieldState, ScriSide};

#[derive(Parser)]
#[command(
    name = "descat",
    about = "Cylinder Maxwell-scalar evolution driver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to a TOML configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run a seed sweep `a..b` (inclusive), one subdirectory per seed.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Suppress progress lines on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Evolve admissible data and write the monitor CSV + final snapshot.
    Evolve,
    /// Map past asymptotic data to future asymptotic data.
    Scatter,
    /// Forward-then-inverse wave-map round trip from the central slice.
    Roundtrip,
    /// Fit the physical decay rates of the scalar and the time component.
    DecayFit,
    /// Late-time profile check along static-chart rays.
    Profile,
    /// Finite-difference residual of the late-time eigenmode profile.
    Eigenmode,
    /// Comparison-ODE verifier table.
    Gronwall,
    /// Operator oracle suite.
    OpCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let seeds: Vec<u64> = match &cli.seeds {
        None => vec![cfg.run.seed],
        Some(range) => match parse_seed_range(range) {
            Ok(seeds) => seeds,
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        },
    };
    for seed in seeds {
        let out_dir = if cli.seeds.is_some() {
            cli.out.join(format!("seed-{seed}"))
        } else {
            cli.out.clone()
        };
        if let Err(e) = std::fs::create_dir_all(&out_dir) {
            eprintln!("error: cannot create {}: {e}", out_dir.display());
            return ExitCode::from(2);
        }
        let mut cfg_seeded = cfg.clone();
        cfg_seeded.run.seed = seed;
        match run_one(cli.command, &cfg_seeded, &out_dir, cli.quiet) {
            Ok(()) => {}
            Err(Error::Config(msg)) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
            Err(e) => {
                eprintln!("numerical abort: {e}");
                return ExitCode::from(3);
            }
        }
    }
    ExitCode::SUCCESS
}

fn parse_seed_range(range: &str) -> Result<Vec<u64>, String> {
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| format!("--seeds wants the form a..b, got {range}"))?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b}"))?;
    if b < a {
        return Err("--seeds range must be increasing".into());
    }
    Ok((a..=b).collect())
}

fn evolve_config(cfg: &RunConfig, store_states: bool) -> EvolveConfig {
    EvolveConfig {
        dtau: cfg.run.dtau,
        monitor_every: cfg.run.monitor_every,
        store_states,
        cfl: cfg.run.cfl,
        elliptic_tol: cfg.run.elliptic_tol,
        ..EvolveConfig::default()
    }
}

fn initial_state(cfg: &RunConfig, basis: &Arc<Basis>) -> Result<FieldState, Error> {
    let raw = random_raw_data(basis, cfg.run.amplitude, cfg.run.seed);
    make_admissible(&raw, cfg.run.hubble, cfg.run.elliptic_tol)
}

#[allow(clippy::boxed_local)]
fn unbox(e: Box<descat::evolve::EvolveAbort>) -> Error {
    e.error
}

fn run_one(cmd: Command, cfg: &RunConfig, out: &Path, quiet: bool) -> Result<(), Error> {
    let started = std::time::Instant::now();
    let basis = Basis::new(BasisSpec::with_band_limit(cfg.run.band_limit))?;
    let config_echo =
        serde_json::to_value(cfg).map_err(|e| Error::Format(format!("config echo: {e}")))?;

    match cmd {
        Command::Evolve => {
            let s0 = match &cfg.evolve.resume_from {
                Some(path) => io::read_snapshot(Path::new(path), &basis)?,
                None => initial_state(cfg, &basis)?,
            };
            let traj = evolve(
                &s0,
                cfg.evolve.tau_target,
                &evolve_config(cfg, cfg.evolve.store_states),
            )
            .map_err(unbox)?;
            io::write_energy_csv(&out.join("trajectory.csv"), &traj)?;
            io::write_snapshot(&out.join("final_state.dsct"), &traj.final_state)?;
            if cfg.evolve.store_states {
                let snap_dir = out.join("snapshots");
                std::fs::create_dir_all(&snap_dir)?;
                for (i, sample) in traj.samples.iter().enumerate() {
                    if let Some(compact) = &sample.state {
                        let state = compact.to_state(&basis, cfg.run.hubble);
                        io::write_snapshot(&snap_dir.join(format!("sample_{i:05}.dsct")), &state)?;
                    }
                }
            }
            let equivalence = energy::equivalence_report(&traj)?;
            io::write_json(&out.join("equivalence.json"), &equivalence)?;
            if !quiet {
                println!(
                    "evolve: tau {:.4} -> {:.4} in {} steps, max drift {:.3e}",
                    s0.tau, traj.final_state.tau, traj.steps, equivalence.max_energy_drift
                );
            }
        }
        Command::Scatter => {
            let mut s0 = initial_state(cfg, &basis)?;
            s0.tau = ScriSide::Past.tau();
            let u_minus = AsymptoticData::new(ScriSide::Past, s0)?;
            let (u_plus, report) = scatter::scattering_report(
                &u_minus,
                cfg.scatter.roundtrip,
                &evolve_config(cfg, false),
            )?;
            io::write_json(&out.join("scattering.json"), &report)?;
            io::write_snapshot(&out.join("u_plus.dsct"), &u_plus.state)?;
            if !quiet {
                println!(
                    "scatter: S2 ratio {:.6}, roundtrip {:?}",
                    report.ratio, report.roundtrip_error
                );
            }
        }
        Command::Roundtrip => {
            let s0 = initial_state(cfg, &basis)?;
            let err = scatter::roundtrip_error(
                &s0,
                cfg.run.m_max.clamp(1, 3),
                &evolve_config(cfg, false),
            )?;
            #[derive(Serialize)]
            struct Out {
                roundtrip_error: f64,
                m: usize,
            }
            io::write_json(
                &out.join("roundtrip.json"),
                &Out {
                    roundtrip_error: err,
                    m: cfg.run.m_max,
                },
            )?;
            if !quiet {
                println!("roundtrip: relative S_m error {err:.3e}");
            }
        }
        Command::DecayFit => {
            let s0 = initial_state(cfg, &basis)?;
            let mut ecfg = evolve_config(cfg, true);
            // dense sampling toward the boundary for the eta fits
            ecfg.monitor_every = cfg.run.monitor_every.min(5);
            let h = cfg.run.hubble;
            let window = (cfg.decay_fit.window[0] / h, cfg.decay_fit.window[1] / h);
            let map = conformal::CoordinateMap::new(h)?;
            let tau_stop = map.tau_from_eta(window.1 + 1.0 / h);
            let traj = evolve(&s0, tau_stop, &ecfg).map_err(unbox)?;
            let points: Vec<(f64, f64, f64)> = (0..cfg.decay_fit.points)
                .map(|i| {
                    let u = (i as f64 + 0.5) / cfg.decay_fit.points as f64;
                    (0.4 + 2.3 * u, 0.5 + 2.0 * u, 6.0 * u)
                })
                .collect();
            let rows = conformal::decay_csv_rows(&traj, &basis, &points)?;
            let mut csv = String::from("eta,log_abs_phi_t,point\n");
            for (eta, log_mag, id) in rows {
                csv.push_str(&format!("{eta:.12e},{log_mag:.12e},{id}\n"));
            }
            std::fs::write(out.join("decay.csv"), csv)?;
            #[derive(Serialize)]
            struct FitRow {
                point: usize,
                fit: Option<conformal::DecayFit>,
                note: Option<String>,
            }
            let mut fits = Vec::new();
            for (id, &(z, t, p)) in points.iter().enumerate() {
                match conformal::decay_fit(&traj, &basis, z, t, p, window, cfg.decay_fit.threshold)
                {
                    Ok(fit) => fits.push(FitRow {
                        point: id,
                        fit: Some(fit),
                        note: None,
                    }),
                    Err(Error::RateUndefined(msg)) => fits.push(FitRow {
                        point: id,
                        fit: None,
                        note: Some(msg),
                    }),
                    Err(e) => return Err(e),
                }
            }
            let aeta = conformal::a_eta_decay_fit(
                &traj,
                &basis,
                points[0].0,
                points[0].1,
                points[0].2,
                window,
                cfg.decay_fit.threshold,
            )
            .ok();
            #[derive(Serialize)]
            struct Out {
                scalar_fits: Vec<FitRow>,
                a_eta_fit: Option<conformal::DecayFit>,
            }
            io::write_json(
                &out.join("decay_fit.json"),
                &Out {
                    scalar_fits: fits,
                    a_eta_fit: aeta,
                },
            )?;
            if !quiet {
                println!("decay-fit: wrote decay.csv and decay_fit.json");
            }
        }
        Command::Profile => {
            let s0 = initial_state(cfg, &basis)?;
            let mut ecfg = evolve_config(cfg, true);
            ecfg.monitor_every = cfg.run.monitor_every.min(5);
            let h = cfg.run.hubble;
            let map = conformal::CoordinateMap::new(h)?;
            // evolve far enough to cover the latest (t, r) pullback
            let t_max = cfg.profile.t_window[1] / h;
            let (tau_need, _) = map.static_inverse(t_max, cfg.profile.r2 / h)?;
            let tau_stop = (tau_need + 5.0 * ecfg.dtau).min(std::f64::consts::FRAC_PI_2);
            let traj = evolve(&s0, tau_stop, &ecfg).map_err(unbox)?;
            let report = conformal::profile_check(
                &traj,
                &basis,
                cfg.profile.r1 / h,
                cfg.profile.r2 / h,
                cfg.profile.n_angles,
                (cfg.profile.t_window[0] / h, cfg.profile.t_window[1] / h),
                cfg.profile.n_t,
            )?;
            io::write_json(&out.join("profile.json"), &report)?;
            if !quiet {
                println!(
                    "profile: ratio {:.4} (target {:.4}), angular spread {:.3e} -> {:.3e}",
                    report.ratio, report.target, report.angular_var_start, report.angular_var_end
                );
            }
        }
        Command::Eigenmode => {
            let h = cfg.run.hubble;
            let res = conformal::eigenmode_residual(
                h,
                cfg.eigenmode.n_t,
                cfg.eigenmode.n_r,
                (cfg.eigenmode.t_range[0] / h, cfg.eigenmode.t_range[1] / h),
                (cfg.eigenmode.r_range[0] / h, cfg.eigenmode.r_range[1] / h),
            )?;
            #[derive(Serialize)]
            struct Out {
                max_residual: f64,
                n_t: usize,
                n_r: usize,
            }
            io::write_json(
                &out.join("eigenmode.json"),
                &Out {
                    max_residual: res,
                    n_t: cfg.eigenmode.n_t,
                    n_r: cfg.eigenmode.n_r,
                },
            )?;
            if !quiet {
                println!("eigenmode: max residual {res:.3e}");
            }
        }
        Command::Gronwall => {
            let poly = gronwall::PolySpec::new(cfg.gronwall.poly.clone())?;
            let table = gronwall::verify_lemma(
                &poly,
                &cfg.gronwall.f0_grid,
                cfg.gronwall.tau_max,
                cfg.gronwall.dtau,
            )?;
            let mut csv = String::from("f0,C,blow_up_time\n");
            for row in &table.rows {
                csv.push_str(&format!(
                    "{:.12e},{},{}\n",
                    row.f0,
                    row.c.map(|c| format!("{c:.12e}")).unwrap_or_default(),
                    row.blow_up_time
                        .map(|t| format!("{t:.12e}"))
                        .unwrap_or_default()
                ));
            }
            std::fs::write(out.join("gronwall.csv"), csv)?;
            io::write_json(&out.join("gronwall.json"), &table)?;
            if !quiet {
                println!(
                    "gronwall: threshold {:?}, proof bound {:.4}",
                    table.smallness_threshold, table.proof_bound
                );
            }
        }
        Command::OpCheck => {
            let report = oracle::run_op_check(cfg.run.band_limit)?;
            io::write_json(&out.join("opcheck.json"), &report)?;
            for c in &report.checks {
                if !quiet {
                    println!(
                        "[{}] {}: {:.3e} (tol {:.1e})",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.tol
                    );
                }
            }
            if !report.all_pass {
                return Err(Error::NumericalAbort("operator oracle suite failed".into()));
            }
        }
    }

    let manifest = io::Manifest::new(config_echo, &basis, started.elapsed().as_secs_f64());
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}
