//! Command-line front end: certification runs, discord of a state, noise and
//! mismatch sweeps, and export of the photonic Bell-analyzer POVM.

pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use discert::correlations::{discord, CorrelationReport};
use discert::estimate::{bootstrap_sigma, certify, plugin_mi, DEFAULT_RESAMPLES};
use discert::optics::{bell_coherence, effective_bell_povm, MismatchModel};
use discert::protocol::{i_c_noise, rates, simulate, ChannelModel, Strategy};
use discert::qlin::Subsystem;
use discert::qstate::{
    bell_state, depolarize, resource_state, BellState, DensityMatrix, MatrixDocument,
};
use discert::rng::derive_seed;

pub use config::{Flags, RunConfig, StrategyArg, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "discert",
    version,
    about = "Discord-based certification of entangling gates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mutual information, classical correlation and discord of a state.
    Discord(Flags),
    /// Run the protocol end to end and write the verdict as JSON.
    Certify(Flags),
    /// Rates and Monte Carlo estimates on a grid of white-noise values.
    SweepNoise(Flags),
    /// Rates and Monte Carlo estimates on a grid of photon delays.
    SweepMismatch(Flags),
    /// Effective POVM of the photonic Bell analyzer as JSON.
    OpticsProcess(Flags),
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Discord(flags) => cmd_discord(&RunConfig::resolve(flags)?),
        Command::Certify(flags) => cmd_certify(&RunConfig::resolve(flags)?),
        Command::SweepNoise(flags) => cmd_sweep(SweepKind::Noise, &RunConfig::resolve(flags)?),
        Command::SweepMismatch(flags) => {
            cmd_sweep(SweepKind::Mismatch, &RunConfig::resolve(flags)?)
        }
        Command::OpticsProcess(flags) => cmd_optics_process(&RunConfig::resolve(flags)?),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = open_output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Builtin name or path to a JSON density matrix.
pub fn load_state(source: &str) -> Result<DensityMatrix> {
    Ok(match source {
        "resource" => resource_state(),
        "maximally-mixed" => DensityMatrix::maximally_mixed(4),
        "bell-phi-plus" => DensityMatrix::from_pure(&bell_state(BellState::PhiPlus))?,
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read state file {path}"))?;
            DensityMatrix::from_json(&text).with_context(|| format!("invalid state in {path}"))?
        }
    })
}

pub fn discord_report(cfg: &RunConfig) -> Result<CorrelationReport> {
    let rho = depolarize(&load_state(&cfg.state)?, cfg.noise_p)?;
    Ok(discord(&rho, Subsystem::B)?)
}

fn cmd_discord(cfg: &RunConfig) -> Result<()> {
    let report = discord_report(cfg)?;
    if cfg.out.is_some() {
        return write_json(&report, cfg.out.as_deref());
    }
    println!("mutual_information    {:.6}", report.mutual_info);
    println!("classical_correlation {:.6}", report.classical_corr);
    println!("discord               {:.6}", report.discord);
    println!("theta                 {:.6}", report.theta);
    println!("phi                   {:.6}", report.phi);
    Ok(())
}

fn channel_model(cfg: &RunConfig, dtau_ratio: f64, photonic: bool) -> Result<ChannelModel> {
    let mismatch = if photonic {
        Some(MismatchModel::new(dtau_ratio, cfg.c_scale)?)
    } else {
        None
    };
    Ok(ChannelModel::new(cfg.noise_p, mismatch)?)
}

/// Monte Carlo estimate of `I(K; K_m)` and its bootstrap error.
struct Estimate {
    i_exp: f64,
    sigma: f64,
}

fn estimate(cfg: &RunConfig, model: &ChannelModel, seed: u64) -> Result<Estimate> {
    let strategy = Strategy::for_model(cfg.strategy.into(), model);
    let sim = simulate(&strategy, model, seed, cfg.trials)?;
    let i_exp = plugin_mi(&sim.counts)?;
    let sigma = bootstrap_sigma(&sim.counts, DEFAULT_RESAMPLES, seed)?.sigma;
    Ok(Estimate { i_exp, sigma })
}

/// With `--dtau` > 0 Bob uses the photonic analyzer; otherwise an ideal
/// Bell measurement.
pub fn certify_record(cfg: &RunConfig) -> Result<discert::estimate::VerdictRecord> {
    let model = channel_model(cfg, cfg.dtau_ratio, cfg.dtau_ratio > 0.0)?;
    let est = estimate(cfg, &model, cfg.seed)?;
    let verdict = certify(
        est.i_exp,
        est.sigma,
        i_c_noise(cfg.noise_p),
        cfg.z_threshold,
    )?;
    Ok(verdict.record(cfg.trials, cfg.seed))
}

fn cmd_certify(cfg: &RunConfig) -> Result<()> {
    write_json(&certify_record(cfg)?, cfg.out.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Noise,
    Mismatch,
}

impl SweepKind {
    pub fn header(self) -> &'static [&'static str] {
        match self {
            SweepKind::Noise => &[
                "parameter",
                "i_q_analytic",
                "i_c_analytic",
                "i_exp_mc",
                "sigma_mc",
                "z",
                "certified",
            ],
            SweepKind::Mismatch => &[
                "parameter",
                "i_q_analytic",
                "i_q_optics",
                "i_c_analytic",
                "i_exp_mc",
                "sigma_mc",
                "z",
                "certified",
            ],
        }
    }

    fn default_max(self) -> f64 {
        match self {
            SweepKind::Noise => 1.0,
            SweepKind::Mismatch => 0.3,
        }
    }
}

/// Decimal rendering with 9 significant digits; non-finite values as `nan`.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `steps` evenly spaced points on `[0, max]`.
pub fn grid(steps: usize, max: f64) -> Vec<f64> {
    if steps == 1 {
        return vec![0.0];
    }
    (0..steps)
        .map(|i| max * i as f64 / (steps - 1) as f64)
        .collect()
}

/// One CSV row per grid point. The noise sweep uses the ideal Bell
/// measurement; the mismatch sweep uses the photonic analyzer at every
/// point (including `dtau = 0`) at the configured noise.
pub fn sweep_rows(kind: SweepKind, cfg: &RunConfig) -> Result<Vec<Vec<String>>> {
    let points = grid(cfg.steps, cfg.max.unwrap_or(kind.default_max()));
    let mut rows = Vec::with_capacity(points.len());
    for (i, &x) in points.iter().enumerate() {
        let (model, point_cfg) = match kind {
            SweepKind::Noise => {
                let point_cfg = RunConfig {
                    noise_p: x,
                    ..cfg.clone()
                };
                (channel_model(&point_cfg, 0.0, false)?, point_cfg)
            }
            SweepKind::Mismatch => (channel_model(cfg, x, true)?, cfg.clone()),
        };
        let r = rates(&model)?;
        let est = estimate(&point_cfg, &model, derive_seed(cfg.seed, i as u64))?;
        let (z, certified) = match certify(est.i_exp, est.sigma, r.i_c, cfg.z_threshold) {
            Ok(v) => (v.z_score, v.certified),
            Err(_) => (f64::NAN, false),
        };
        let mut row = vec![sig9(x), sig9(r.i_q)];
        if kind == SweepKind::Mismatch {
            row.push(sig9(r.i_q_optics.unwrap_or(f64::NAN)));
        }
        row.extend([
            sig9(r.i_c),
            sig9(est.i_exp),
            sig9(est.sigma),
            sig9(z),
            certified.to_string(),
        ]);
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_sweep(kind: SweepKind, cfg: &RunConfig) -> Result<()> {
    let rows = sweep_rows(kind, cfg)?;
    let mut writer = csv::Writer::from_writer(open_output(cfg.out.as_deref())?);
    writer.write_record(kind.header())?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PovmEntry {
    pub label: String,
    pub matrix: MatrixDocument,
    /// Largest anti-diagonal magnitude.
    pub bell_coherence: f64,
}

#[derive(Debug, Serialize)]
pub struct OpticsProcess {
    pub dtau_ratio: f64,
    pub c_scale: f64,
    pub xi: f64,
    pub overlap: f64,
    pub elements: Vec<PovmEntry>,
    pub failure: MatrixDocument,
    /// Mean failure probability, `Tr(E_fail) / 4`.
    pub failure_weight: f64,
    pub completeness_residual: f64,
}

pub fn optics_process(cfg: &RunConfig) -> Result<OpticsProcess> {
    let m = MismatchModel::new(cfg.dtau_ratio, cfg.c_scale)?;
    let povm = effective_bell_povm(&m);
    let failure = povm.failure().expect("analyzer has a failure element");
    Ok(OpticsProcess {
        dtau_ratio: m.dtau_ratio(),
        c_scale: m.c_scale(),
        xi: m.xi(),
        overlap: m.overlap(),
        elements: povm
            .elements()
            .iter()
            .map(|e| PovmEntry {
                label: e.label.clone(),
                matrix: MatrixDocument::from(&e.operator),
                bell_coherence: bell_coherence(&e.operator),
            })
            .collect(),
        failure: MatrixDocument::from(failure),
        failure_weight: failure.trace().re / 4.0,
        completeness_residual: povm.completeness_residual(),
    })
}

fn cmd_optics_process(cfg: &RunConfig) -> Result<()> {
    write_json(&optics_process(cfg)?, cfg.out.as_deref())
}
