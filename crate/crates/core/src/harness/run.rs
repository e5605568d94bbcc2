//! A single simulation: config → operator → state → trajectory → fit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output;
use crate::error::StageExt;
use crate::evolution::{evolve, Recorder};
use crate::fitting::{collapse_time, fit_logistic, LogisticOutcome};
use crate::lattice::{build_hamiltonian, HamiltonianOperator};
use crate::observables::{crossing_index, Trajectory};
use crate::state::{gaussian_packet, weighted_initial_state, SpinorField};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Up,
    Down,
}

/// How the polarization threshold was (or was not) reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Collapse {
    /// `|⟨S_z⟩|` stayed below the threshold.
    None,
    /// Threshold reached while the total norm had grown: one branch was
    /// selectively amplified.
    Effective { spin: Spin },
    /// Threshold reached only because the other branch was absorbed; the
    /// total norm shrank.
    LossOnly { spin: Spin },
}

impl Collapse {
    pub fn is_effective(&self) -> bool {
        matches!(self, Self::Effective { .. })
    }

    pub fn spin(&self) -> Option<Spin> {
        match *self {
            Self::None => None,
            Self::Effective { spin } | Self::LossOnly { spin } => Some(spin),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Effective { spin: Spin::Up } => "effective_up",
            Self::Effective { spin: Spin::Down } => "effective_down",
            Self::LossOnly { spin: Spin::Up } => "loss_only_up",
            Self::LossOnly { spin: Spin::Down } => "loss_only_down",
        }
    }
}

/// Classifies a trajectory against `threshold` using the cumulative log norm
/// at the first crossing.
pub fn classify(traj: &Trajectory, threshold: f64) -> Collapse {
    let Some((i, _)) = crossing_index(traj, threshold) else {
        return Collapse::None;
    };
    let spin = if traj.sz[i] > 0.0 { Spin::Up } else { Spin::Down };
    if traj.log_norm[i] > 0.0 {
        Collapse::Effective { spin }
    } else {
        Collapse::LossOnly { spin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub schema_version: u32,
    pub n_steps: usize,
    pub n_samples: usize,
    pub final_sz: f64,
    pub max_abs_sz: f64,
    pub collapse_threshold: f64,
    pub threshold_time: Option<f64>,
    pub tau: Option<f64>,
    pub tau_fs: Option<f64>,
    pub collapse: Collapse,
    pub no_effective_collapse: bool,
    pub log_norm_final: f64,
    pub log_norm_at_crossing: Option<f64>,
    pub max_boundary_mass: f64,
    pub packet_tail_warning: bool,
    pub split_steps: usize,
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: RunConfig,
    pub trajectory: Trajectory,
    /// `None` when the fit itself failed (see `report.fit_error`).
    pub fit: Option<LogisticOutcome>,
    pub report: RunReport,
}

pub fn hamiltonian_for(config: &RunConfig) -> Result<HamiltonianOperator> {
    build_hamiltonian(&config.lattice, &config.regions, &config.gains)
}

/// The initial state and whether either packet touches an open boundary.
pub fn initial_state_for(config: &RunConfig) -> Result<(SpinorField, bool)> {
    let up = &config.packets.up;
    let down = config.down_packet();
    let tails = gaussian_packet(up, &config.lattice)?.tail_warning() || gaussian_packet(&down, &config.lattice)?.tail_warning();
    let st = weighted_initial_state(up, &down, config.packets.weight_up, &config.lattice)?;
    Ok((st, tails))
}

/// Runs the full pipeline in memory.
pub fn simulate(config: &RunConfig) -> Result<RunOutput> {
    config.validate().stage("config")?;
    let h = hamiltonian_for(config).stage("lattice")?;
    let (state, tails) = initial_state_for(config).stage("state")?;
    let recorder = Recorder::with_snapshots(&config.sampling.snapshot_times);
    let traj = evolve(&state, &h, &config.evolution, &recorder).stage("evolution")?;

    let threshold = config.sampling.collapse_threshold;
    let collapse = classify(&traj, threshold);
    let crossing = crossing_index(&traj, threshold);

    let (fit, fit_error, tau) = match fit_logistic(&traj) {
        Ok(outcome) => {
            let (tau, err) = match outcome.fit() {
                Some(f) => match collapse_time(f, config.output.gamma0_ev) {
                    Ok(t) => (Some(t), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                None => (None, None),
            };
            (Some(outcome), err, tau)
        }
        Err(e) => (None, Some(e.to_string()), None),
    };

    let report = RunReport {
        name: config.name.clone(),
        schema_version: config.schema_version,
        n_steps: config.evolution.n_steps(),
        n_samples: traj.len(),
        final_sz: traj.final_sz().unwrap_or(0.0),
        max_abs_sz: traj.sz.iter().map(|s| s.abs()).fold(0.0, f64::max),
        collapse_threshold: threshold,
        threshold_time: crossing.map(|(_, t)| t),
        tau: tau.map(|t| t.tau),
        tau_fs: tau.and_then(|t| t.tau_fs),
        collapse,
        no_effective_collapse: !collapse.is_effective(),
        log_norm_final: traj.log_norm.last().copied().unwrap_or(0.0),
        log_norm_at_crossing: crossing.map(|(i, _)| traj.log_norm[i]),
        max_boundary_mass: traj.boundary_mass.iter().copied().fold(0.0, f64::max),
        packet_tail_warning: tails,
        split_steps: traj.split_steps,
        fit_error,
    };
    Ok(RunOutput {
        config: config.clone(),
        trajectory: traj,
        fit,
        report,
    })
}

/// Runs the pipeline and writes every artifact into `out_dir`.
pub fn run_simulation(config: &RunConfig, out_dir: &Path) -> Result<RunOutput> {
    let out = simulate(config)?;
    output::write_run(&out, out_dir).stage("output")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(sz: &[f64], log_norm: &[f64]) -> Trajectory {
        let mut t = Trajectory::from_samples((0..sz.len()).map(|i| i as f64).collect(), sz.to_vec());
        t.log_norm = log_norm.to_vec();
        t
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&traj(&[0.0, 0.5, 0.9], &[0.0, 0.1, 0.2]), 0.99), Collapse::None);
        assert_eq!(
            classify(&traj(&[0.0, 0.5, 0.995], &[0.0, 0.1, 0.2]), 0.99),
            Collapse::Effective { spin: Spin::Up }
        );
        assert_eq!(
            classify(&traj(&[0.0, -0.5, -0.995], &[0.0, -0.1, -0.6]), 0.99),
            Collapse::LossOnly { spin: Spin::Down }
        );
    }

    #[test]
    fn tiny_hermitian_run_reports_no_collapse() {
        let mut cfg = crate::harness::presets::preset("hermitian").unwrap();
        cfg.lattice.nx = 32;
        cfg.lattice.ny = 24;
        cfg.packets.up.r0 = [8.0, 16.5];
        cfg.packets.up.sigma_r = 2.0;
        for r in &mut cfg.regions {
            r.x[1] = 31;
        }
        cfg.regions[0].y = [12, 23];
        cfg.regions[1].y = [0, 11];
        cfg.evolution.t_max = 2.0;
        cfg.sampling.snapshot_times = vec![0.0, 1.0];
        let out = simulate(&cfg).unwrap();
        assert!(out.report.max_abs_sz <= 1e-10);
        assert!(matches!(out.fit, Some(LogisticOutcome::NoCollapse { .. })));
        assert_eq!(out.report.collapse, Collapse::None);
        assert!(out.report.no_effective_collapse);
        assert_eq!(out.trajectory.snapshots.len(), 2);
    }
}
