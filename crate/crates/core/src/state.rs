//! Gaussian wavepackets and the spin-entangled two-branch initial state.
//!
//! A packet is `ψ(r) ∝ exp(-|r - r₀|² / (4σ²)) · exp(-i k₀·(r - r₀))`, normalized on
//! the discrete grid. With the hopping sign `H₀ = +γ₀ Σ (c†c + h.c.)` the
//! phase `exp(-i k·r)` makes a positive `k` component travel toward
//! positive coordinates with group velocity `2γ₀ sin k`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{Boundary, LatticeSpec};
use crate::{Error, Result};

/// Packet parameters in lattice units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub r0: [f64; 2],
    /// Central wavevector, radians per lattice constant.
    pub k0: [f64; 2],
    pub sigma_r: f64,
}

impl PacketSpec {
    pub fn new(r0: [f64; 2], k0: [f64; 2], sigma_r: f64) -> Self {
        Self { r0, k0, sigma_r }
    }

    /// The packet reflected about the lattice midline, with `k_y` reversed.
    pub fn mirrored(&self, lattice: &LatticeSpec) -> Self {
        Self {
            r0: [self.r0[0], 2.0 * lattice.midline_y() - self.r0[1]],
            k0: [self.k0[0], -self.k0[1]],
            sigma_r: self.sigma_r,
        }
    }
}

/// Boundary amplitude ratio above which a packet is flagged as too wide.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Packet {
    pub amplitudes: Vec<Complex64>,
    /// Largest `|ψ|` on an open boundary relative to the peak.
    pub tail_ratio: f64,
}

impl Packet {
    pub fn tail_warning(&self) -> bool {
        self.tail_ratio > TAIL_TOLERANCE
    }
}

/// Samples a unit-norm Gaussian packet on the lattice sites.
pub fn gaussian_packet(spec: &PacketSpec, lattice: &LatticeSpec) -> Result<Packet> {
    lattice.validate()?;
    if !(spec.sigma_r >= 1.0) || !spec.sigma_r.is_finite() {
        return Err(Error::InvalidPacket(format!("sigma_r = {} must be >= 1", spec.sigma_r)));
    }
    if !lattice.contains_point(spec.r0) {
        return Err(Error::InvalidPacket(format!("r0 = {:?} lies outside the lattice", spec.r0)));
    }
    if !spec.k0.iter().all(|k| k.is_finite()) {
        return Err(Error::InvalidPacket("k0 is not finite".into()));
    }
    let inv = 1.0 / (4.0 * spec.sigma_r * spec.sigma_r);
    let mut amps = Vec::with_capacity(lattice.sites());
    let mut peak: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for i in 0..lattice.sites() {
        let (x, y) = lattice.coords(i);
        let d = lattice.displacement(x, y, spec.r0);
        let envelope = (-(d[0] * d[0] + d[1] * d[1]) * inv).exp();
        let phase = -(spec.k0[0] * (x as f64 - spec.r0[0]) + spec.k0[1] * (y as f64 - spec.r0[1]));
        amps.push(Complex64::from_polar(envelope, phase));
        peak = peak.max(envelope);
        let on_edge = (lattice.boundary_x == Boundary::Open && (x == 0 || x == lattice.nx - 1))
            || (lattice.boundary_y == Boundary::Open && lattice.ny > 1 && (y == 0 || y == lattice.ny - 1));
        if on_edge {
            edge = edge.max(envelope);
        }
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(Packet {
        amplitudes: amps,
        tail_ratio: edge / peak,
    })
}

/// Complex amplitudes over all sites for both spin components, stored as one
/// vector `[up sites..., down sites...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    nx: usize,
    ny: usize,
    amps: Vec<Complex64>,
}

impl SpinorField {
    pub fn zeros(lattice: &LatticeSpec) -> Self {
        Self {
            nx: lattice.nx,
            ny: lattice.ny,
            amps: vec![Complex64::new(0.0, 0.0); lattice.dim()],
        }
    }

    pub fn from_components(lattice: &LatticeSpec, up: &[Complex64], down: &[Complex64]) -> Self {
        assert_eq!(up.len(), lattice.sites());
        assert_eq!(down.len(), lattice.sites());
        let mut amps = Vec::with_capacity(lattice.dim());
        amps.extend_from_slice(up);
        amps.extend_from_slice(down);
        Self {
            nx: lattice.nx,
            ny: lattice.ny,
            amps,
        }
    }

    pub fn from_vec(lattice: &LatticeSpec, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), lattice.dim());
        Self {
            nx: lattice.nx,
            ny: lattice.ny,
            amps,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn up(&self) -> &[Complex64] {
        &self.amps[..self.sites()]
    }

    pub fn down(&self) -> &[Complex64] {
        &self.amps[self.sites()..]
    }

    /// `(Σ|up|², Σ|down|²)`
    pub fn spin_weights(&self) -> (f64, f64) {
        let w = |s: &[Complex64]| s.iter().map(|a| a.norm_sqr()).sum::<f64>();
        (w(self.up()), w(self.down()))
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rescales in place to unit norm and returns the previous norm.
    pub fn normalize_in_place(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if !n.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        let inv = 1.0 / n;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(n)
    }

    pub fn normalize(&self) -> Result<Self> {
        let mut s = self.clone();
        s.normalize_in_place()?;
        Ok(s)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &Self) -> Complex64 {
        assert_eq!(self.amps.len(), other.amps.len());
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Spatial reflection `y → ny − 1 − y` applied to both components.
    pub fn reflect_y(&self) -> Self {
        let mut out = self.clone();
        let (nx, ny, n) = (self.nx, self.ny, self.sites());
        for spin in 0..2 {
            for y in 0..ny {
                for x in 0..nx {
                    out.amps[spin * n + x + nx * (ny - 1 - y)] = self.amps[spin * n + x + nx * y];
                }
            }
        }
        out
    }

    /// Exchanges the up and down components.
    pub fn swap_spins(&self) -> Self {
        let n = self.sites();
        let mut amps = Vec::with_capacity(2 * n);
        amps.extend_from_slice(self.down());
        amps.extend_from_slice(self.up());
        Self {
            nx: self.nx,
            ny: self.ny,
            amps,
        }
    }

    /// Mass in the outer `frame`-site border along open axes.
    pub fn boundary_mass(&self, lattice: &LatticeSpec, frame: usize) -> f64 {
        let n = self.sites();
        let use_x = lattice.boundary_x == Boundary::Open && lattice.nx > 2 * frame;
        let use_y = lattice.boundary_y == Boundary::Open && lattice.ny > 2 * frame;
        let mut mass = 0.0;
        for i in 0..n {
            let (x, y) = lattice.coords(i);
            let in_x = use_x && (x < frame || x >= lattice.nx - frame);
            let in_y = use_y && (y < frame || y >= lattice.ny - frame);
            if in_x || in_y {
                mass += self.amps[i].norm_sqr() + self.amps[i + n].norm_sqr();
            }
        }
        mass
    }

    /// Writes `site_x,site_y,re_up,im_up,re_down,im_down` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["site_x", "site_y", "re_up", "im_up", "re_down", "im_down"])?;
        let n = self.sites();
        for i in 0..n {
            let (x, y) = (i % self.nx, i / self.nx);
            let (u, d) = (self.amps[i], self.amps[i + n]);
            out.serialize((x, y, u.re, u.im, d.re, d.im))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The equal-weight state `(ψ₁⊗|↑⟩ + ψ₂⊗|↓⟩)/√2`.
pub fn entangled_initial_state(up: &PacketSpec, down: &PacketSpec, lattice: &LatticeSpec) -> Result<SpinorField> {
    weighted_initial_state(up, down, 0.5, lattice)
}

/// `√w ψ₁⊗|↑⟩ + √(1−w) ψ₂⊗|↓⟩` for a spin-up weight `w ∈ [0, 1]`.
pub fn weighted_initial_state(
    up: &PacketSpec,
    down: &PacketSpec,
    weight_up: f64,
    lattice: &LatticeSpec,
) -> Result<SpinorField> {
    if !(0.0..=1.0).contains(&weight_up) {
        return Err(Error::InvalidPacket(format!("spin-up weight {weight_up} outside [0, 1]")));
    }
    let pu = gaussian_packet(up, lattice)?;
    let pd = gaussian_packet(down, lattice)?;
    let (cu, cd) = if weight_up == 0.5 {
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
    } else {
        (weight_up.sqrt(), (1.0 - weight_up).sqrt())
    };
    let u: Vec<Complex64> = pu.amplitudes.iter().map(|a| a * cu).collect();
    let d: Vec<Complex64> = pd.amplitudes.iter().map(|a| a * cd).collect();
    Ok(SpinorField::from_components(lattice, &u, &d))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn zero_momentum_packet_is_real_and_symmetric() {
        let lat = LatticeSpec::new(21, 15);
        let p = gaussian_packet(&PacketSpec::new([10.0, 7.0], [0.0, 0.0], 2.0), &lat).unwrap();
        for y in 0..15 {
            for x in 0..21 {
                let a = p.amplitudes[lat.index(x, y)];
                assert_eq!(a.im, 0.0);
                assert!(a.re > 0.0);
                let b = p.amplitudes[lat.index(20 - x, y)];
                assert!((a - b).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn grid_normalization() {
        let lat = LatticeSpec::new(64, 64);
        let p = gaussian_packet(&PacketSpec::new([31.5, 31.5], [PI / 4.0, PI / 4.0], 3.0), &lat).unwrap();
        let norm: f64 = p.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        assert!(!p.tail_warning());
    }

    #[test]
    fn position_moment_matches_center() {
        // 6σ clearance from every boundary; moment by direct summation
        let lat = LatticeSpec::new(60, 60);
        let r0 = [27.3, 30.0];
        let p = gaussian_packet(&PacketSpec::new(r0, [0.4, -0.2], 4.0), &lat).unwrap();
        let mut mx = 0.0;
        let mut my = 0.0;
        for (i, a) in p.amplitudes.iter().enumerate() {
            let (x, y) = lat.coords(i);
            mx += x as f64 * a.norm_sqr();
            my += y as f64 * a.norm_sqr();
        }
        assert!((mx - r0[0]).abs() < 1e-6, "{mx}");
        assert!((my - r0[1]).abs() < 1e-6, "{my}");
    }

    #[test]
    fn wide_packet_warns_but_succeeds() {
        let lat = LatticeSpec::new(10, 10);
        let p = gaussian_packet(&PacketSpec::new([5.0, 5.0], [0.0, 0.0], 4.0), &lat).unwrap();
        assert!(p.tail_warning());
    }

    #[test]
    fn packet_errors() {
        let lat = LatticeSpec::new(10, 10);
        assert!(gaussian_packet(&PacketSpec::new([5.0, 5.0], [0.0, 0.0], 0.5), &lat).is_err());
        assert!(gaussian_packet(&PacketSpec::new([12.0, 5.0], [0.0, 0.0], 1.0), &lat).is_err());
    }

    #[test]
    fn entangled_state_is_unpolarized() {
        let lat = LatticeSpec::new(40, 32);
        let up = PacketSpec::new([8.0, 23.5], [PI / 4.0, PI / 4.0], 3.0);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let (wu, wd) = st.spin_weights();
        assert!((st.norm() - 1.0).abs() < 1e-14);
        assert!((wu - wd).abs() < 1e-14);
    }

    #[test]
    fn pure_up_state() {
        let lat = LatticeSpec::new(20, 20);
        let up = PacketSpec::new([8.0, 8.0], [0.0, 0.0], 2.0);
        let st = weighted_initial_state(&up, &up, 1.0, &lat).unwrap();
        let (wu, wd) = st.spin_weights();
        assert!((wu - 1.0).abs() < 1e-14);
        assert_eq!(wd, 0.0);
    }

    #[test]
    fn mirror_and_spin_swap_is_a_symmetry() {
        let lat = LatticeSpec::new(40, 32);
        let up = PacketSpec::new([8.0, 22.5], [PI / 4.0, PI / 4.0], 3.0);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let mapped = st.reflect_y().swap_spins();
        assert!((st.overlap(&mapped).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_contract() {
        let lat = LatticeSpec::new(12, 12);
        let up = PacketSpec::new([4.0, 4.0], [0.3, 0.1], 1.5);
        let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat).unwrap();
        let mut scaled = st.clone();
        scaled.scale(Complex64::new(7.0, 0.0));
        let back = scaled.normalize().unwrap();
        for (a, b) in back.as_slice().iter().zip(st.as_slice()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!((back.norm() - 1.0).abs() < 1e-14);
        assert!(matches!(SpinorField::zeros(&lat).normalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn csv_snapshot_layout() {
        let lat = LatticeSpec::new(3, 2);
        let st = SpinorField::zeros(&lat);
        let mut buf = Vec::new();
        st.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("site_x,site_y,re_up,im_up,re_down,im_down"));
        assert_eq!(lines.count(), 6);
    }
}
