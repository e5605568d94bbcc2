//! Configuration, presets, single runs, sweeps and file output.
//!
//! Every artifact is a pure function of the config. Sweep points run in
//! parallel on a dedicated pool, each sequentially, and results are
//! aggregated in grid order, so outputs are byte-identical across reruns and
//! worker counts.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{parse_grid, RunConfig, SweepParam, SCHEMA_VERSION};
pub use presets::{preset, preset_names};
pub use run::{classify, run_simulation, simulate, Collapse, RunOutput, RunReport, Spin};
pub use sweep::{run_sweep, run_sweep_to, SweepOutcome, SweepPlan, SweepRow, SweepSummary};

use crate::error::StageExt;
use crate::fitting::{collapse_time, fit_logistic, LogisticOutcome};
use crate::observables::{collapse_time_threshold, Trajectory, DEFAULT_COLLAPSE_THRESHOLD};
use crate::spectrum::SpectrumResult;
use crate::Result;

/// Output directory: explicit override, then the config, then `out/<name>`.
pub fn resolve_out_dir(config: &RunConfig, cli: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name))
}

/// `max Im λ` against `G` on the spectrum lattice. Uses `[spectrum].g_values`
/// when `g_values` is `None`.
pub fn run_spectrum(config: &RunConfig, g_values: Option<&[f64]>, parallelism: usize) -> Result<Vec<SpectrumResult>> {
    let grid: Vec<f64> = match g_values {
        Some(v) => v.to_vec(),
        None => config
            .spectrum
            .as_ref()
            .and_then(|s| s.g_values.clone())
            .or_else(|| config.sweep.as_ref().map(|s| s.values.clone()))
            .unwrap_or_default(),
    };
    if grid.is_empty() || grid.iter().any(|g| !g.is_finite()) {
        return Err(crate::Error::Config("spectrum needs a non-empty finite G grid".into()));
    }
    sweep::with_pool(parallelism, || sweep::spectra_for(config, &grid))?.stage("spectrum")
}

pub fn run_spectrum_to(config: &RunConfig, g_values: Option<&[f64]>, parallelism: usize, dir: &Path) -> Result<Vec<SpectrumResult>> {
    let res = run_spectrum(config, g_values, parallelism)?;
    output::write_spectrum(&res, dir).stage("output")?;
    Ok(res)
}

/// Logistic fit of a stored trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub samples: usize,
    pub fit: LogisticOutcome,
    pub tau: Option<f64>,
    pub tau_fs: Option<f64>,
    pub collapse_threshold: f64,
    pub threshold_time: Option<f64>,
}

pub fn fit_trajectory(traj: &Trajectory, gamma0_ev: Option<f64>, threshold: Option<f64>) -> Result<FitReport> {
    let fit = fit_logistic(traj).stage("fit")?;
    let tau = fit.fit().map(|f| collapse_time(f, gamma0_ev)).transpose().stage("fit")?;
    let threshold = threshold.unwrap_or(DEFAULT_COLLAPSE_THRESHOLD);
    Ok(FitReport {
        samples: traj.len(),
        tau: tau.map(|t| t.tau),
        tau_fs: tau.and_then(|t| t.tau_fs),
        threshold_time: collapse_time_threshold(traj, threshold).stage("fit")?,
        collapse_threshold: threshold,
        fit,
    })
}

/// Reads a `t,Sz,norm_growth` CSV and fits it.
pub fn fit_file(input: &Path, gamma0_ev: Option<f64>, threshold: Option<f64>) -> Result<FitReport> {
    let traj = Trajectory::read_csv(std::fs::File::open(input)?).stage("input")?;
    fit_trajectory(&traj, gamma0_ev, threshold)
}
