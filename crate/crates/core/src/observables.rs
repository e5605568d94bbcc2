//! Spin polarization, real-space densities and collapse detection.

use std::io::{Read, Write};

use crate::state::SpinorField;
use crate::{Error, Result};

/// Deviation from unit norm tolerated by [`expect_sz`].
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Default `|⟨S_z⟩|` level treated as a completed collapse.
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 0.99;

/// `⟨Ψ|σ_z|Ψ⟩ = Σ |up|² − |down|²` for a unit-norm state.
pub fn expect_sz(state: &SpinorField) -> Result<f64> {
    let (wu, wd) = state.spin_weights();
    let norm = (wu + wd).sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    Ok(wu - wd)
}

/// A real value per lattice site, row-major in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl SiteField {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[x + self.nx * y]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Euclidean norm of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// One CSV row per `y`, `nx` columns, no header.
    pub fn write_grid_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.values.chunks(self.nx) {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-site `|up|² − |down|²`.
pub fn sz_density(state: &SpinorField) -> SiteField {
    SiteField {
        nx: state.nx(),
        ny: state.ny(),
        values: state
            .up()
            .iter()
            .zip(state.down())
            .map(|(u, d)| u.norm_sqr() - d.norm_sqr())
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: SpinorField,
}

/// Sampled observables along a run. Per-sample vectors share the indexing
/// of `times`; `growth` has one entry per integration step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub sz: Vec<f64>,
    /// Pre-normalization growth factor of the step ending at each sample.
    pub norm_growth: Vec<f64>,
    /// Cumulative `ln Π growth` up to each sample.
    pub log_norm: Vec<f64>,
    /// Mass in the outer boundary frame at each sample.
    pub boundary_mass: Vec<f64>,
    pub growth: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Number of steps the Krylov engine had to split.
    pub split_steps: usize,
}

impl Trajectory {
    /// A bare `(t, ⟨S_z⟩)` series, as read back from CSV or synthesized.
    pub fn from_samples(times: Vec<f64>, sz: Vec<f64>) -> Self {
        let n = times.len();
        assert_eq!(n, sz.len());
        Self {
            times,
            sz,
            norm_growth: vec![1.0; n],
            log_norm: vec![0.0; n],
            boundary_mass: vec![0.0; n],
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_sz(&self) -> Option<f64> {
        self.sz.last().copied()
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Fit("trajectory times are not strictly increasing".into()));
        }
        if let Some(bad) = self.sz.iter().find(|s| !(s.abs() <= 1.0 + 1e-12)) {
            return Err(Error::Fit(format!("sz sample {bad} outside [-1, 1]")));
        }
        Ok(())
    }

    /// Writes `t,Sz,norm_growth` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "Sz", "norm_growth"])?;
        for i in 0..self.len() {
            out.serialize((self.times[i], self.sz[i], self.norm_growth[i]))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`Trajectory::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut traj = Trajectory::default();
        for rec in rdr.deserialize() {
            let (t, sz, g): (f64, f64, f64) = rec?;
            traj.times.push(t);
            traj.sz.push(sz);
            traj.norm_growth.push(g);
        }
        let n = traj.len();
        traj.log_norm = vec![0.0; n];
        traj.boundary_mass = vec![0.0; n];
        traj.validate()?;
        Ok(traj)
    }
}

/// First time `|⟨S_z⟩|` reaches `threshold`, linearly interpolated between
/// samples. `None` if it never does.
pub fn collapse_time_threshold(traj: &Trajectory, threshold: f64) -> Result<Option<f64>> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Fit(format!("threshold {threshold} outside (0, 1)")));
    }
    Ok(crossing_index(traj, threshold).map(|(_, t)| t))
}

/// Sample index at or after the crossing, and the interpolated time.
pub(crate) fn crossing_index(traj: &Trajectory, threshold: f64) -> Option<(usize, f64)> {
    let i = traj.sz.iter().position(|s| s.abs() >= threshold)?;
    if i == 0 {
        return Some((0, traj.times[0]));
    }
    let (s0, s1) = (traj.sz[i - 1].abs(), traj.sz[i].abs());
    let (t0, t1) = (traj.times[i - 1], traj.times[i]);
    let frac = if s1 > s0 { (threshold - s0) / (s1 - s0) } else { 1.0 };
    Some((i, t0 + frac * (t1 - t0)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::state::{entangled_initial_state, weighted_initial_state, PacketSpec};

    fn mirrored_state() -> (LatticeSpec, SpinorField) {
        let lat = LatticeSpec::new(30, 24);
        let up = PacketSpec::new([8.0, 17.5], [PI / 4.0, PI / 4.0], 2.5);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        (lat, st)
    }

    #[test]
    fn entangled_state_has_zero_polarization() {
        let (_, st) = mirrored_state();
        assert!(expect_sz(&st).unwrap().abs() < 1e-14);
    }

    #[test]
    fn weighted_states() {
        let lat = LatticeSpec::new(20, 20);
        let p = PacketSpec::new([6.0, 6.0], [0.2, 0.0], 2.0);
        let q = PacketSpec::new([12.0, 12.0], [0.0, 0.3], 2.0);
        let up = weighted_initial_state(&p, &q, 1.0, &lat).unwrap();
        assert!((expect_sz(&up).unwrap() - 1.0).abs() < 1e-14);
        let split = weighted_initial_state(&p, &q, 0.7, &lat).unwrap();
        assert!((expect_sz(&split).unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let (_, mut st) = mirrored_state();
        st.scale(Complex64::new(1.1, 0.0));
        assert!(matches!(expect_sz(&st), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn global_phase_invariance() {
        let lat = LatticeSpec::new(20, 20);
        let p = PacketSpec::new([6.0, 6.0], [0.2, 0.0], 2.0);
        let q = PacketSpec::new([12.0, 12.0], [0.0, 0.3], 2.0);
        let st = weighted_initial_state(&p, &q, 0.3, &lat).unwrap();
        let base = expect_sz(&st).unwrap();
        let mut rotated = st.clone();
        rotated.scale(Complex64::from_polar(1.0, 1.234));
        assert!((expect_sz(&rotated).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn density_sums_to_polarization() {
        let lat = LatticeSpec::new(20, 20);
        let p = PacketSpec::new([6.0, 6.0], [0.2, 0.0], 2.0);
        let q = PacketSpec::new([12.0, 12.0], [0.0, 0.3], 2.0);
        let st = weighted_initial_state(&p, &q, 0.62, &lat).unwrap();
        assert!((sz_density(&st).sum() - expect_sz(&st).unwrap()).abs() < 1e-12);
        let up = weighted_initial_state(&p, &q, 1.0, &lat).unwrap();
        assert!(sz_density(&up).values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn mirror_state_density_is_antisymmetric() {
        let (lat, st) = mirrored_state();
        let f = sz_density(&st);
        for y in 0..lat.ny {
            for x in 0..lat.nx {
                assert!((f.at(x, y) + f.at(x, lat.ny - 1 - y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn threshold_detector() {
        let flat = Trajectory::from_samples((0..50).map(|i| i as f64 * 0.1).collect(), vec![0.0; 50]);
        assert_eq!(collapse_time_threshold(&flat, 0.99).unwrap(), None);

        let dt = 0.05;
        let times: Vec<f64> = (0..200).map(|i| i as f64 * dt).collect();
        let sz: Vec<f64> = times.iter().map(|t| t.tanh()).collect();
        let t = collapse_time_threshold(&Trajectory::from_samples(times, sz), 0.99)
            .unwrap()
            .unwrap();
        assert!((t - 0.99f64.atanh()).abs() <= dt, "{t}");
        assert!((0.99f64.atanh() - 2.6467).abs() < 1e-4);

        assert!(matches!(
            collapse_time_threshold(&Trajectory::default(), 0.5),
            Err(Error::EmptyTrajectory)
        ));
        assert!(collapse_time_threshold(&flat, 1.0).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = Trajectory::from_samples(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, -0.5]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("t,Sz,norm_growth\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.sz, traj.sz);
    }

    #[test]
    fn invalid_trajectory_rejected() {
        let bad = Trajectory::from_samples(vec![0.0, 0.0], vec![0.0, 0.1]);
        assert!(bad.validate().is_err());
        let out_of_range = Trajectory::from_samples(vec![0.0, 1.0], vec![0.0, 1.1]);
        assert!(out_of_range.validate().is_err());
    }
}
