//! Run configuration, stored as TOML.
//!
//! ```toml
//! schema_version = 1
//! name = "fig2"
//!
//! [lattice]
//! nx = 96
//! ny = 64
//!
//! [packets.up]
//! r0 = [12.0, 47.5]
//! k0 = [0.7853981633974483, 0.7853981633974483]
//! sigma_r = 4.0
//!
//! [[regions]]
//! name = "upper"
//! x = [16, 95]
//! y = [32, 63]
//! g = 0.5
//!
//! [evolution]
//! t_max = 30.0
//! ```
//!
//! `packets.down` defaults to the mirror image of `packets.up`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evolution::EvolutionConfig;
use crate::lattice::{HatanoRegion, LatticeSpec, LocalizedGain};
use crate::observables::DEFAULT_COLLAPSE_THRESHOLD;
use crate::spectrum::EIGEN_LIMIT;
use crate::state::PacketSpec;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn default_weight() -> f64 {
    0.5
}

fn default_threshold() -> f64 {
    DEFAULT_COLLAPSE_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketsConfig {
    pub up: PacketSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down: Option<PacketSpec>,
    /// Probability weight of the up branch.
    #[serde(default = "default_weight")]
    pub weight_up: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub collapse_threshold: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            collapse_threshold: DEFAULT_COLLAPSE_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Hopping energy in eV, enables femtosecond reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0_ev: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// `g_target = g_reference + G`
    G,
    /// Imaginary gain strength of one localized gain.
    #[serde(rename = "z")]
    Z,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G" | "g" => Ok(Self::G),
            "z" | "Z" => Ok(Self::Z),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?} (expected G or z)"))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::G => "G",
            Self::Z => "z",
        })
    }
}

fn default_target() -> String {
    "upper".into()
}

fn default_reference() -> Option<String> {
    Some("lower".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Region whose `g` is swept.
    #[serde(default = "default_target")]
    pub target: String,
    /// Region holding the fixed `g₂`; absent means `g₂ = 0`.
    #[serde(default = "default_reference")]
    pub reference: Option<String>,
    /// Index into `gains` for `z` sweeps.
    #[serde(default)]
    pub gain: usize,
    /// Worker count; 0 uses every available core.
    #[serde(default)]
    pub parallelism: usize,
}

/// Lattice used for eigenvalue scans, usually smaller than the dynamics
/// lattice so the dense solver stays tractable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub regions: Vec<HatanoRegion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub name: String,
    pub lattice: LatticeSpec,
    pub packets: PacketsConfig,
    #[serde(default)]
    pub regions: Vec<HatanoRegion>,
    #[serde(default)]
    pub gains: Vec<LocalizedGain>,
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn down_packet(&self) -> PacketSpec {
        self.packets.down.clone().unwrap_or_else(|| self.packets.up.mirrored(&self.lattice))
    }

    pub fn region(&self, name: &str) -> Option<&HatanoRegion> {
        self.regions.iter().find(|r| r.name.as_deref() == Some(name))
    }

    pub fn region_mut(&mut self, name: &str) -> Option<&mut HatanoRegion> {
        self.regions.iter_mut().find(|r| r.name.as_deref() == Some(name))
    }

    /// Sets `g_target = g_reference + G` according to the sweep targets.
    pub fn set_difference(&mut self, big_g: f64) -> Result<()> {
        let (target, reference) = self.sweep_targets();
        set_difference(&mut self.regions, &target, reference.as_deref(), big_g)
    }

    /// Sets the imaginary strength of gain `index`.
    pub fn set_gain(&mut self, index: usize, z_im: f64) -> Result<()> {
        let gain = self
            .gains
            .get_mut(index)
            .ok_or_else(|| Error::Config(format!("no gain with index {index}")))?;
        gain.z = [0.0, z_im];
        Ok(())
    }

    fn sweep_targets(&self) -> (String, Option<String>) {
        match &self.sweep {
            Some(s) => (s.target.clone(), s.reference.clone()),
            None => (default_target(), default_reference()),
        }
    }

    /// The spectrum lattice and region template for a given `G`.
    pub fn spectrum_layout(&self, big_g: f64) -> Result<(LatticeSpec, Vec<HatanoRegion>)> {
        let (lattice, mut regions) = match &self.spectrum {
            Some(s) => (s.lattice.clone(), s.regions.clone()),
            None => (self.lattice.clone(), self.regions.clone()),
        };
        let (target, reference) = self.sweep_targets();
        set_difference(&mut regions, &target, reference.as_deref(), big_g)?;
        Ok((lattice, regions))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name {:?} is not a plain identifier", self.name)));
        }
        self.lattice.validate()?;
        self.evolution.validate()?;
        let w = self.packets.weight_up;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Config(format!("weight_up = {w} outside [0, 1]")));
        }
        let thr = self.sampling.collapse_threshold;
        if !(thr > 0.0 && thr < 1.0) {
            return Err(Error::Config(format!("collapse_threshold = {thr} outside (0, 1)")));
        }
        if let Some(t) = self.sampling.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.evolution.t_max)) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, t_max]")));
        }
        if let Some(e) = self.output.gamma0_ev {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("gamma0_ev = {e} must be positive")));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("sweep grid has non-finite values".into()));
            }
            match s.param {
                SweepParam::G => {
                    if self.region(&s.target).is_none() {
                        return Err(Error::Config(format!("sweep target region {:?} not found", s.target)));
                    }
                    if let Some(r) = &s.reference {
                        if self.region(r).is_none() {
                            return Err(Error::Config(format!("sweep reference region {r:?} not found")));
                        }
                    }
                }
                SweepParam::Z => {
                    if s.gain >= self.gains.len() {
                        return Err(Error::Config(format!("sweep gain index {} out of range", s.gain)));
                    }
                }
            }
        }
        if let Some(s) = &self.spectrum {
            s.lattice.validate()?;
            if s.lattice.sites() > EIGEN_LIMIT {
                return Err(Error::Config(format!(
                    "spectrum lattice has {} sites, above the dense limit {EIGEN_LIMIT}",
                    s.lattice.sites()
                )));
            }
        }
        Ok(())
    }
}

fn set_difference(regions: &mut [HatanoRegion], target: &str, reference: Option<&str>, big_g: f64) -> Result<()> {
    let g_ref = match reference {
        Some(name) => {
            regions
                .iter()
                .find(|r| r.name.as_deref() == Some(name))
                .ok_or_else(|| Error::Config(format!("reference region {name:?} not found")))?
                .g
        }
        None => 0.0,
    };
    let region = regions
        .iter_mut()
        .find(|r| r.name.as_deref() == Some(target))
        .ok_or_else(|| Error::Config(format!("target region {target:?} not found")))?;
    region.g = g_ref + big_g;
    Ok(())
}

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b` inclusive.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("grid {text:?} is not of the form a:b:n"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}
