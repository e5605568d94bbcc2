//! Parameter sweeps over `G` or a gain strength, fanned out over a worker pool.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SweepParam};
use super::output;
use super::run::{simulate, RunOutput};
use crate::error::StageExt;
use crate::fitting::{fit_inverse_law, InverseFit};
use crate::lattice::build_hamiltonian;
use crate::spectrum::{spectrum_of, SpectrumResult};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub base: RunConfig,
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Worker count; 0 uses every available core.
    pub parallelism: usize,
}

impl SweepPlan {
    /// Plan taken from the `[sweep]` section of `base`.
    pub fn from_config(base: &RunConfig) -> Result<Self> {
        let s = base
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config(format!("config {:?} has no [sweep] section", base.name)))?;
        Ok(Self {
            base: base.clone(),
            param: s.param,
            values: s.values.clone(),
            parallelism: s.parallelism,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid has non-finite values".into()));
        }
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("sweep grid has repeated values".into()));
        }
        let mut probe = self.base.clone();
        self.apply(&mut probe, self.values[0])?;
        probe.validate()
    }

    /// Sorted grid.
    pub fn grid(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    fn apply(&self, cfg: &mut RunConfig, value: f64) -> Result<()> {
        match self.param {
            SweepParam::G => cfg.set_difference(value),
            SweepParam::Z => {
                let idx = cfg.sweep.as_ref().map(|s| s.gain).unwrap_or(0);
                cfg.set_gain(idx, value)
            }
        }
    }

    /// Config for a single grid point.
    pub fn config_at(&self, value: f64) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        self.apply(&mut cfg, value)?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub tau: Option<f64>,
    pub tau_fs: Option<f64>,
    pub threshold_time: Option<f64>,
    pub final_sz: Option<f64>,
    pub collapse: Option<String>,
    pub fit_converged: Option<bool>,
    pub fit_residual_rms: Option<f64>,
    pub max_imag: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub param: String,
    pub points: usize,
    pub failures: usize,
    pub inverse_fit: Option<InverseFit>,
    pub inverse_fit_error: Option<String>,
    /// Mean of the fitted `τ` values.
    pub mean_tau: Option<f64>,
    /// Pearson correlation between `1/τ` and `max Im λ` over the grid.
    pub rate_spectrum_correlation: Option<f64>,
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    /// Per-point results in grid order.
    pub points: Vec<(f64, Result<RunOutput>)>,
    pub spectra: Option<Vec<SpectrumResult>>,
}

impl SweepOutcome {
    pub fn all_failed(&self) -> bool {
        self.summary.failures == self.summary.points
    }

    pub fn any_failed(&self) -> bool {
        self.summary.failures > 0
    }

    /// `(value, τ)` for points with a fitted collapse time.
    pub fn tau_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.tau.map(|t| (r.value, t))).collect()
    }
}

pub(crate) fn with_pool<T: Send>(parallelism: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let d = (sxx * syy).sqrt();
    (d > 0.0).then(|| sxy / d)
}

fn row_for(value: f64, res: &Result<RunOutput>, max_imag: Option<f64>) -> SweepRow {
    match res {
        Ok(out) => {
            let fit = out.fit.as_ref().and_then(|f| f.fit());
            SweepRow {
                value,
                status: "ok".into(),
                tau: out.report.tau,
                tau_fs: out.report.tau_fs,
                threshold_time: out.report.threshold_time,
                final_sz: Some(out.report.final_sz),
                collapse: Some(out.report.collapse.label().into()),
                fit_converged: fit.map(|f| f.converged),
                fit_residual_rms: fit.map(|f| f.residual_rms),
                max_imag,
                error: out.report.fit_error.clone(),
            }
        }
        Err(e) => SweepRow {
            value,
            status: "error".into(),
            tau: None,
            tau_fs: None,
            threshold_time: None,
            final_sz: None,
            collapse: None,
            fit_converged: None,
            fit_residual_rms: None,
            max_imag,
            error: Some(e.to_string()),
        },
    }
}

/// Spectra on the `[spectrum]` lattice for each `G` in the grid.
pub fn spectra_for(base: &RunConfig, grid: &[f64]) -> Result<Vec<SpectrumResult>> {
    grid.par_iter()
        .map(|&big_g| {
            let (lattice, regions) = base.spectrum_layout(big_g)?;
            let h = build_hamiltonian(&lattice, &regions, &[])?;
            spectrum_of(&h, big_g)
        })
        .collect()
}

/// Runs every grid point; failures are recorded per point and the sweep
/// continues. Rows are sorted by the swept value.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepOutcome> {
    plan.validate().stage("sweep plan")?;
    let grid = plan.grid();
    let with_spectrum = plan.param == SweepParam::G && plan.base.spectrum.is_some();
    let (points, spectra) = with_pool(plan.parallelism, || {
        let points: Vec<(f64, Result<RunOutput>)> = grid
            .par_iter()
            .map(|&v| (v, plan.config_at(v).and_then(|c| simulate(&c))))
            .collect();
        let spectra = with_spectrum.then(|| spectra_for(&plan.base, &grid));
        (points, spectra)
    })?;
    let spectra = spectra.transpose().stage("spectrum")?;

    let rows: Vec<SweepRow> = points
        .iter()
        .enumerate()
        .map(|(i, (v, res))| row_for(*v, res, spectra.as_ref().map(|s| s[i].max_imag)))
        .collect();

    let failures = rows.iter().filter(|r| r.status != "ok").count();
    let taus: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.tau.map(|t| (r.value, t))).collect();
    let (inverse_fit, inverse_fit_error) = match (plan.param, fit_inverse_law(&taus)) {
        (SweepParam::G, Ok(f)) => (Some(f), None),
        (SweepParam::G, Err(e)) => (None, Some(e.to_string())),
        (SweepParam::Z, _) => (None, None),
    };
    let mean_tau = (!taus.is_empty()).then(|| taus.iter().map(|p| p.1).sum::<f64>() / taus.len() as f64);
    let rate_spectrum_correlation = spectra.as_ref().and_then(|_| {
        let (rates, imags): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| Some((1.0 / r.tau?, r.max_imag?)))
            .unzip();
        pearson(&rates, &imags)
    });

    Ok(SweepOutcome {
        summary: SweepSummary {
            param: plan.param.to_string(),
            points: rows.len(),
            failures,
            inverse_fit,
            inverse_fit_error,
            mean_tau,
            rate_spectrum_correlation,
        },
        rows,
        points,
        spectra,
    })
}

/// Runs the sweep and writes the table, summary and per-point artifacts.
pub fn run_sweep_to(plan: &SweepPlan, out_dir: &Path) -> Result<SweepOutcome> {
    let outcome = run_sweep(plan)?;
    output::write_sweep(&outcome, plan, out_dir).stage("output")?;
    Ok(outcome)
}
