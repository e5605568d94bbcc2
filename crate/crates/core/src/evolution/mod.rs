//! Fixed-step propagation under `exp(−i H dt)` with renormalization.
//!
//! Each step applies the (generally non-unitary) propagator, records the
//! pre-normalization norm as the growth factor, and rescales to unit norm.

pub mod dense;
pub mod krylov;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::HamiltonianOperator;
use crate::observables::{expect_sz, Snapshot, Trajectory};
use crate::state::SpinorField;
use crate::{Error, Result};

pub use dense::{dense_propagator, expm, DENSE_LIMIT};
pub use krylov::{expm_action, KrylovOptions, KrylovStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Krylov,
    DenseOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Renormalization {
    #[default]
    EveryStep,
    EverySample,
}

fn default_dt() -> f64 {
    0.01
}
fn default_krylov_dim() -> usize {
    30
}
fn default_record_every() -> usize {
    10
}
fn default_krylov_tol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Time step in `ħ/γ₀`.
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    /// Steps between recorded samples.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub renormalize: Renormalization,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self {
            dt,
            t_max,
            method: Method::Krylov,
            krylov_dim: default_krylov_dim(),
            krylov_tol: default_krylov_tol(),
            record_every: default_record_every(),
            renormalize: Renormalization::EveryStep,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidEvolution(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::InvalidEvolution(format!("t_max = {} shorter than dt", self.t_max)));
        }
        if self.krylov_dim < 2 {
            return Err(Error::InvalidEvolution("krylov_dim must be at least 2".into()));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::InvalidEvolution("krylov_tol must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidEvolution("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn krylov_options(&self) -> KrylovOptions {
        KrylovOptions {
            max_dim: self.krylov_dim,
            tol: self.krylov_tol,
            ..KrylovOptions::default()
        }
    }
}

/// Result of one propagation step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SpinorField,
    /// `‖exp(−iH dt) ψ‖ / ‖ψ‖`.
    pub growth: f64,
    /// Sub-intervals used by the Krylov engine (1 when the step was not split).
    pub substeps: usize,
}

enum Engine {
    Krylov(KrylovOptions),
    Dense(DMatrix<Complex64>),
}

/// A reusable propagator for a fixed `H` and `dt`.
pub struct Stepper<'a> {
    h: &'a HamiltonianOperator,
    dt: f64,
    engine: Engine,
}

impl<'a> Stepper<'a> {
    pub fn new(h: &'a HamiltonianOperator, config: &EvolutionConfig) -> Result<Self> {
        config.validate()?;
        match config.method {
            Method::Krylov => Ok(Self::krylov(h, config.dt, config.krylov_options())),
            Method::DenseOracle => Self::dense(h, config.dt),
        }
    }

    pub fn krylov(h: &'a HamiltonianOperator, dt: f64, opts: KrylovOptions) -> Self {
        Self {
            h,
            dt,
            engine: Engine::Krylov(opts),
        }
    }

    pub fn dense(h: &'a HamiltonianOperator, dt: f64) -> Result<Self> {
        Ok(Self {
            h,
            dt,
            engine: Engine::Dense(dense_propagator(h, dt)?),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `exp(−iH dt) ψ` without renormalization.
    pub fn propagate(&self, state: &SpinorField) -> Result<(SpinorField, usize)> {
        let lattice = self.h.lattice();
        match &self.engine {
            Engine::Krylov(opts) => {
                let (out, stats) = expm_action(self.h, state.as_slice(), self.dt, opts)?;
                Ok((SpinorField::from_vec(lattice, out), stats.substeps))
            }
            Engine::Dense(u) => {
                let v = u * DVector::from_column_slice(state.as_slice());
                Ok((SpinorField::from_vec(lattice, v.as_slice().to_vec()), 1))
            }
        }
    }

    /// One renormalized step.
    pub fn step(&self, state: &SpinorField) -> Result<StepOutcome> {
        let before = state.norm();
        let (mut next, substeps) = self.propagate(state)?;
        let after = next.normalize_in_place()?;
        Ok(StepOutcome {
            state: next,
            growth: after / before,
            substeps,
        })
    }
}

fn check_unit_norm(state: &SpinorField) -> Result<()> {
    let n = state.norm();
    if (n - 1.0).abs() > crate::observables::NORM_TOLERANCE {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// A single renormalized step with the default Krylov engine.
pub fn step(state: &SpinorField, h: &HamiltonianOperator, dt: f64) -> Result<StepOutcome> {
    check_unit_norm(state)?;
    Stepper::krylov(h, dt, KrylovOptions::default()).step(state)
}

/// What to capture beyond the sampled `⟨S_z⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recorder {
    /// Times at which full field snapshots are kept (rounded to the nearest step).
    pub snapshot_times: Vec<f64>,
    /// Width of the border used for the boundary-mass monitor.
    pub boundary_frame: usize,
}

impl Default for Recorder {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            boundary_frame: 2,
        }
    }
}

impl Recorder {
    pub fn with_snapshots(times: &[f64]) -> Self {
        Self {
            snapshot_times: times.to_vec(),
            ..Self::default()
        }
    }
}

/// Evolves `state` to `config.t_max`, sampling every `record_every` steps
/// and at the final step.
pub fn evolve(
    state: &SpinorField,
    h: &HamiltonianOperator,
    config: &EvolutionConfig,
    recorder: &Recorder,
) -> Result<Trajectory> {
    config.validate()?;
    check_unit_norm(state)?;
    let stepper = Stepper::new(h, config)?;
    let lattice = h.lattice();
    let n_steps = config.n_steps();
    let snapshot_steps: Vec<(usize, f64)> = recorder
        .snapshot_times
        .iter()
        .map(|&t| ((t / config.dt).round() as usize, t))
        .filter(|&(s, _)| s <= n_steps)
        .collect();

    let mut traj = Trajectory::default();
    let mut current = state.clone();
    let mut log_norm = 0.0;

    let record = |traj: &mut Trajectory, s: usize, st: &SpinorField, log_norm: f64, growth: f64| -> Result<()> {
        let unit = st.normalize()?;
        traj.times.push(s as f64 * config.dt);
        traj.sz.push(expect_sz(&unit)?);
        traj.norm_growth.push(growth);
        traj.log_norm.push(log_norm);
        traj.boundary_mass.push(unit.boundary_mass(lattice, recorder.boundary_frame));
        for &(_, t) in snapshot_steps.iter().filter(|(k, _)| *k == s) {
            traj.snapshots.push(Snapshot {
                time: t,
                state: unit.clone(),
            });
        }
        Ok(())
    };

    record(&mut traj, 0, &current, 0.0, 1.0)?;
    for s in 1..=n_steps {
        let before = current.norm();
        let (mut next, substeps) = stepper.propagate(&current)?;
        let after = next.norm();
        if !after.is_finite() {
            return Err(Error::NonFinite { step: s });
        }
        if after == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let growth = after / before;
        traj.growth.push(growth);
        if substeps > 1 {
            traj.split_steps += 1;
        }
        log_norm += growth.ln();
        let sample = s % config.record_every == 0 || s == n_steps;
        if config.renormalize == Renormalization::EveryStep || sample {
            next.normalize_in_place()?;
        }
        current = next;
        if sample || snapshot_steps.iter().any(|(k, _)| *k == s) {
            if sample {
                record(&mut traj, s, &current, log_norm, growth)?;
            } else {
                let unit = current.normalize()?;
                for &(_, t) in snapshot_steps.iter().filter(|(k, _)| *k == s) {
                    traj.snapshots.push(Snapshot {
                        time: t,
                        state: unit.clone(),
                    });
                }
            }
        }
    }
    Ok(traj)
}

/// `|⟨S_z⟩(t_max)|` difference between runs at `dt` and `dt/2`.
pub fn dt_convergence(state: &SpinorField, h: &HamiltonianOperator, config: &EvolutionConfig) -> Result<f64> {
    let coarse = evolve(state, h, config, &Recorder::default())?;
    let mut fine_cfg = config.clone();
    fine_cfg.dt = config.dt / 2.0;
    fine_cfg.record_every = config.record_every * 2;
    let fine = evolve(state, h, &fine_cfg, &Recorder::default())?;
    Ok((coarse.final_sz().unwrap_or(0.0) - fine.final_sz().unwrap_or(0.0)).abs())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::lattice::{build_hamiltonian, Boundary, HatanoRegion, LatticeSpec};
    use crate::sparse::CsrMatrix;
    use crate::state::{entangled_initial_state, PacketSpec};

    fn chain_state(lat: &LatticeSpec) -> SpinorField {
        let up = PacketSpec::new([10.0, 0.0], [PI / 4.0, 0.0], 2.0);
        let down = PacketSpec::new([10.0, 0.0], [-PI / 4.0, 0.0], 2.0);
        entangled_initial_state(&up, &down, lat).unwrap()
    }

    #[test]
    fn hermitian_step_preserves_norm() {
        let lat = LatticeSpec::new(12, 10);
        let h = build_hamiltonian(&lat, &[], &[]).unwrap();
        let up = PacketSpec::new([4.0, 6.0], [0.5, 0.5], 1.5);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let out = step(&st, &h, 0.05).unwrap();
        assert!((out.growth - 1.0).abs() < 1e-10);
        assert!((out.state.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_gain_only_amplifies() {
        let lat = LatticeSpec::new(6, 6);
        let block = CsrMatrix::from_triplets(36, (0..36).map(|i| (i, i, Complex64::new(0.0, 1.5))));
        let h = HamiltonianOperator::from_block(lat.clone(), block);
        let up = PacketSpec::new([2.0, 3.0], [0.3, 0.0], 1.0);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let out = step(&st, &h, 0.1).unwrap();
        assert!((out.growth - 0.15f64.exp()).abs() < 1e-12);
        for (a, b) in out.state.as_slice().iter().zip(st.as_slice()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn krylov_step_matches_dense_oracle() {
        let lat = LatticeSpec::chain(32, Boundary::Open);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([14, 31], [0, 0], 0.5)], &[]).unwrap();
        let st = chain_state(&lat);
        let k = Stepper::krylov(&h, 0.05, KrylovOptions::default()).step(&st).unwrap();
        let d = Stepper::dense(&h, 0.05).unwrap().step(&st).unwrap();
        let diff: f64 = k
            .state
            .as_slice()
            .iter()
            .zip(d.state.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn every_step_renormalized() {
        let lat = LatticeSpec::chain(32, Boundary::Open);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([0, 31], [0, 0], 0.9)], &[]).unwrap();
        let stepper = Stepper::krylov(&h, 0.05, KrylovOptions::default());
        let mut st = chain_state(&lat);
        for _ in 0..40 {
            st = stepper.step(&st).unwrap().state;
            assert!((st.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hermitian_trajectory_is_flat() {
        let lat = LatticeSpec::new(20, 16);
        let h = build_hamiltonian(&lat, &[], &[]).unwrap();
        let up = PacketSpec::new([5.0, 10.5], [PI / 4.0, PI / 4.0], 2.0);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let traj = evolve(&st, &h, &EvolutionConfig::new(0.01, 2.0), &Recorder::with_snapshots(&[0.0, 1.5])).unwrap();
        assert_eq!(traj.len(), 21);
        assert!(traj.sz.iter().all(|s| s.abs() < 1e-10));
        assert_eq!(traj.snapshots.len(), 2);
        assert_eq!(traj.growth.len(), 200);
    }

    #[test]
    fn renormalization_frequency_does_not_change_polarization() {
        let lat = LatticeSpec::chain(40, Boundary::Open);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([14, 39], [0, 0], 0.6)], &[]).unwrap();
        let st = chain_state(&lat);
        let mut cfg = EvolutionConfig::new(0.01, 3.0);
        let per_step = evolve(&st, &h, &cfg, &Recorder::default()).unwrap();
        cfg.renormalize = Renormalization::EverySample;
        let per_sample = evolve(&st, &h, &cfg, &Recorder::default()).unwrap();
        let diff = per_step
            .sz
            .iter()
            .zip(&per_sample.sz)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        assert!(per_step.final_sz().unwrap() > 0.1);
    }

    #[test]
    fn halving_dt_converges() {
        let lat = LatticeSpec::chain(40, Boundary::Open);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([14, 39], [0, 0], 0.6)], &[]).unwrap();
        let st = chain_state(&lat);
        let d = dt_convergence(&st, &h, &EvolutionConfig::new(0.01, 3.0)).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(0.0, 1.0).validate().is_err());
        assert!(EvolutionConfig::new(0.1, 0.01).validate().is_err());
        assert!(EvolutionConfig::new(0.1, 1.0).with_record_every(0).validate().is_err());
        let lat = LatticeSpec::new(4, 4);
        let h = build_hamiltonian(&lat, &[], &[]).unwrap();
        let mut st = SpinorField::zeros(&lat);
        st.as_mut_slice()[0] = Complex64::new(2.0, 0.0);
        assert!(matches!(step(&st, &h, 0.1), Err(Error::NotNormalized(_))));
    }
}
