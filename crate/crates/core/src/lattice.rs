//! Square-lattice geometry and assembly of the total Hamiltonian.
//!
//! The spatial Hamiltonian is nearest-neighbour hopping `γ₀` on an
//! `nx × ny` grid. Inside a [`HatanoRegion`] the x-bonds become
//! non-reciprocal: the matrix element moving amplitude rightward
//! (`j → j+1`, i.e. `H[j+1][j]`) is `γ₀ e^{+g}` and the leftward one
//! (`H[j][j+1]`) is `γ₀ e^{-g}`. A [`LocalizedGain`] adds a purely imaginary
//! on-site term `z φ(x_j, x₀)`.
//!
//! Spin only enters through the state, so the full operator over the
//! `(site × spin)` basis is two identical copies of the spatial block.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

fn default_gamma0() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub boundary_x: Boundary,
    #[serde(default)]
    pub boundary_y: Boundary,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
}

impl LatticeSpec {
    /// Open `nx × ny` lattice with `γ₀ = 1`.
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            boundary_x: Boundary::Open,
            boundary_y: Boundary::Open,
            gamma0: 1.0,
        }
    }

    /// One-dimensional chain along x (`ny = 1`).
    pub fn chain(n: usize, boundary: Boundary) -> Self {
        Self {
            boundary_x: boundary,
            ..Self::new(n, 1)
        }
    }

    pub fn with_boundary(mut self, x: Boundary, y: Boundary) -> Self {
        self.boundary_x = x;
        self.boundary_y = y;
        self
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(Error::InvalidLattice(format!("nx = {} < 2", self.nx)));
        }
        if self.ny < 1 || self.nx * self.ny < 4 {
            return Err(Error::InvalidLattice(format!(
                "{}x{} lattice has fewer than 4 sites",
                self.nx, self.ny
            )));
        }
        for (axis, n, b) in [("x", self.nx, self.boundary_x), ("y", self.ny, self.boundary_y)] {
            if b == Boundary::Periodic && n < 3 {
                return Err(Error::InvalidLattice(format!(
                    "periodic {axis} axis needs at least 3 sites, got {n}"
                )));
            }
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidLattice(format!("gamma0 = {} must be positive", self.gamma0)));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    /// Dimension of the `(site × spin)` basis.
    pub fn dim(&self) -> usize {
        2 * self.sites()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        x + self.nx * y
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    /// y coordinate of the horizontal mirror line.
    pub fn midline_y(&self) -> f64 {
        (self.ny as f64 - 1.0) / 2.0
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        (0.0..=(self.nx - 1) as f64).contains(&p[0]) && (0.0..=(self.ny - 1) as f64).contains(&p[1])
    }

    /// Displacement from `from` to site `(x, y)`, using the minimum image on
    /// periodic axes.
    pub fn displacement(&self, x: usize, y: usize, from: [f64; 2]) -> [f64; 2] {
        let wrap = |d: f64, n: usize, b: Boundary| match b {
            Boundary::Open => d,
            Boundary::Periodic => {
                let n = n as f64;
                d - n * (d / n).round()
            }
        };
        [
            wrap(x as f64 - from[0], self.nx, self.boundary_x),
            wrap(y as f64 - from[1], self.ny, self.boundary_y),
        ]
    }
}

/// Rectangular block of sites with non-reciprocal x-hopping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HatanoRegion {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Inclusive site-index interval along x.
    pub x: [usize; 2],
    /// Inclusive site-index interval along y.
    pub y: [usize; 2],
    pub g: f64,
}

impl HatanoRegion {
    pub fn new(x: [usize; 2], y: [usize; 2], g: f64) -> Self {
        Self { name: None, x, y, g }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_owned());
        self
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x[0]..=self.x[1]).contains(&x) && (self.y[0]..=self.y[1]).contains(&y)
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.x[0] <= other.x[1] && other.x[0] <= self.x[1] && self.y[0] <= other.y[1] && other.y[0] <= self.y[1]
    }

    fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.x[0] > self.x[1] || self.y[0] > self.y[1] {
            return Err(Error::InvalidRegion(format!("empty range x={:?} y={:?}", self.x, self.y)));
        }
        if self.x[1] >= lattice.nx || self.y[1] >= lattice.ny {
            return Err(Error::InvalidRegion(format!(
                "range x={:?} y={:?} exceeds {}x{} lattice",
                self.x, self.y, lattice.nx, lattice.ny
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::InvalidRegion(format!("g = {} is not finite", self.g)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GainProfile {
    /// `exp(-d² / (2 w²))`
    #[default]
    Gaussian,
    /// `exp(-d / w)`
    Exponential,
}

/// On-site imaginary gain `z φ(x_j, x₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizedGain {
    pub center: [f64; 2],
    pub width: f64,
    /// `[re, im]`; the real part must be zero.
    pub z: [f64; 2],
    #[serde(default)]
    pub profile: GainProfile,
}

impl LocalizedGain {
    /// Gaussian gain of purely imaginary strength `i·z_im`.
    pub fn imaginary(center: [f64; 2], width: f64, z_im: f64) -> Self {
        Self {
            center,
            width,
            z: [0.0, z_im],
            profile: GainProfile::Gaussian,
        }
    }

    pub fn strength(&self) -> Complex64 {
        Complex64::new(self.z[0], self.z[1])
    }

    /// Weight `φ ∈ (0, 1]` at distance `d` from the centre.
    pub fn weight(&self, d: f64) -> f64 {
        match self.profile {
            GainProfile::Gaussian => (-d * d / (2.0 * self.width * self.width)).exp(),
            GainProfile::Exponential => (-d / self.width).exp(),
        }
    }

    fn validate(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.z[0] != 0.0 {
            return Err(Error::InvalidGain(format!("z = {}+{}i has a nonzero real part", self.z[0], self.z[1])));
        }
        if !self.z[1].is_finite() {
            return Err(Error::InvalidGain("z is not finite".into()));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidGain(format!("width = {} must be positive", self.width)));
        }
        if !lattice.contains_point(self.center) {
            return Err(Error::InvalidGain(format!("center {:?} lies outside the lattice", self.center)));
        }
        Ok(())
    }
}

/// Total Hamiltonian over the `(site × spin)` basis, stored as one spatial
/// block shared by both spin components.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianOperator {
    lattice: LatticeSpec,
    block: CsrMatrix,
}

impl HamiltonianOperator {
    /// Wraps an arbitrary spatial block (used for derived operators).
    pub fn from_block(lattice: LatticeSpec, block: CsrMatrix) -> Self {
        assert_eq!(block.dim(), lattice.sites());
        Self { lattice, block }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn dimension(&self) -> usize {
        2 * self.block.dim()
    }

    /// The spatial block, dimension `nx·ny`.
    pub fn spatial(&self) -> &CsrMatrix {
        &self.block
    }

    /// `y = H x` on the full `(site × spin)` vector laid out as
    /// `[up sites..., down sites...]`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.block.dim();
        let (xu, xd) = x.split_at(n);
        let (yu, yd) = y.split_at_mut(n);
        self.block.matvec(xu, yu);
        self.block.matvec(xd, yd);
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let n = self.block.dim();
        if row / n != col / n {
            return Complex64::new(0.0, 0.0);
        }
        self.block.get(row % n, col % n)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_block(self.lattice.clone(), self.block.adjoint())
    }

    /// `(H + H†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self::from_block(self.lattice.clone(), self.block.combine(half, &self.block.adjoint(), half))
    }

    /// `(H − H†) / 2`
    pub fn antihermitian_part(&self) -> Self {
        let half = Complex64::new(0.5, 0.0);
        Self::from_block(self.lattice.clone(), self.block.combine(half, &self.block.adjoint(), -half))
    }

    /// Frobenius norm of `H − H†` over the full basis.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.block.combine(Complex64::new(1.0, 0.0), &self.block.adjoint(), Complex64::new(-1.0, 0.0));
        d.frobenius_norm() * std::f64::consts::SQRT_2
    }

    pub fn one_norm(&self) -> f64 {
        self.block.one_norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.block.trace() * 2.0
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.block.dim();
        let b = self.block.to_dense();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&b);
        m.view_mut((n, n), (n, n)).copy_from(&b);
        m
    }

    /// Writes every stored entry of the full operator as `row col re im`.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.block.dim();
        for offset in [0, n] {
            for (r, c, v) in self.block.iter() {
                writeln!(w, "{} {} {:e} {:e}", r + offset, c + offset, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Assembles the Hamiltonian for the given lattice, asymmetric-hopping
/// regions and localized gains.
pub fn build_hamiltonian(
    spec: &LatticeSpec,
    regions: &[HatanoRegion],
    gains: &[LocalizedGain],
) -> Result<HamiltonianOperator> {
    spec.validate()?;
    for r in regions {
        r.validate(spec)?;
    }
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if a.overlaps(b) && a.g != b.g {
                return Err(Error::InvalidRegion(format!(
                    "regions x={:?} y={:?} (g={}) and x={:?} y={:?} (g={}) overlap with different g",
                    a.x, a.y, a.g, b.x, b.y, b.g
                )));
            }
        }
    }
    for gain in gains {
        gain.validate(spec)?;
    }

    let (nx, ny) = (spec.nx, spec.ny);
    let hop = Complex64::new(spec.gamma0, 0.0);
    let mut triplets = Vec::with_capacity(5 * spec.sites());

    let region_g = |a: (usize, usize), b: (usize, usize)| {
        regions
            .iter()
            .find(|r| r.contains(a.0, a.1) && r.contains(b.0, b.1))
            .map(|r| r.g)
    };

    for y in 0..ny {
        for x in 0..nx {
            let j = spec.index(x, y);
            let right = if x + 1 < nx {
                Some(x + 1)
            } else if spec.boundary_x == Boundary::Periodic {
                Some(0)
            } else {
                None
            };
            if let Some(xr) = right {
                let k = spec.index(xr, y);
                match region_g((x, y), (xr, y)) {
                    Some(g) => {
                        // c†_j c_{j+1} carries e^{-g}, c†_{j+1} c_j carries e^{+g}
                        triplets.push((j, k, hop * (-g).exp()));
                        triplets.push((k, j, hop * g.exp()));
                    }
                    None => {
                        triplets.push((j, k, hop));
                        triplets.push((k, j, hop));
                    }
                }
            }
            let up = if y + 1 < ny {
                Some(y + 1)
            } else if spec.boundary_y == Boundary::Periodic {
                Some(0)
            } else {
                None
            };
            if let Some(yu) = up {
                let k = spec.index(x, yu);
                triplets.push((j, k, hop));
                triplets.push((k, j, hop));
            }
            for gain in gains {
                let d = spec.displacement(x, y, gain.center);
                let phi = gain.weight(d[0].hypot(d[1]));
                triplets.push((j, j, gain.strength() * phi));
            }
        }
    }

    Ok(HamiltonianOperator {
        lattice: spec.clone(),
        block: CsrMatrix::from_triplets(spec.sites(), triplets),
    })
}
