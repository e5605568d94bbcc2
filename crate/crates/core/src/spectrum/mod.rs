//! Eigenvalues of the non-Hermitian Hamiltonian and the largest imaginary
//! part as a function of the asymmetry `g`.
//!
//! Under `exp(−iHt)` an eigenmode with `Im λ > 0` is amplified, so
//! `max Im λ` is the dominant growth rate.

pub mod eigen;

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::lattice::{build_hamiltonian, HamiltonianOperator, HatanoRegion, LatticeSpec};
use crate::{Error, Result};

/// Largest spatial block handed to the dense eigensolver.
pub const EIGEN_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub g: f64,
    pub eigenvalues: Vec<Complex64>,
    pub max_imag: f64,
}

impl SpectrumResult {
    /// Writes `re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["re", "im"])?;
        for v in &self.eigenvalues {
            out.serialize((v.re, v.im))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn spatial_dense(h: &HamiltonianOperator) -> Result<DMatrix<Complex64>> {
    let n = h.spatial().dim();
    if n > EIGEN_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: EIGEN_LIMIT });
    }
    Ok(h.spatial().to_dense())
}

/// All `2·nx·ny` eigenvalues, sorted by real then imaginary part. Each
/// spatial eigenvalue appears twice (one per spin block).
pub fn eigenvalues(h: &HamiltonianOperator) -> Result<Vec<Complex64>> {
    let spatial = eigen::eigenvalues(&spatial_dense(h)?)?;
    let mut all: Vec<Complex64> = spatial.iter().chain(spatial.iter()).copied().collect();
    sort_spectrum(&mut all);
    Ok(all)
}

/// Eigenpairs of the spatial block (eigenvectors as unit-norm columns).
pub fn spatial_eigenpairs(h: &HamiltonianOperator) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    eigen::eigenpairs(&spatial_dense(h)?)
}

pub fn max_imag(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().map(|v| v.im).fold(f64::NEG_INFINITY, f64::max)
}

pub fn spectrum_of(h: &HamiltonianOperator, g: f64) -> Result<SpectrumResult> {
    let eigenvalues = eigenvalues(h)?;
    Ok(SpectrumResult {
        g,
        max_imag: max_imag(&eigenvalues),
        eigenvalues,
    })
}

/// Spectra for each `g`, with the region layout produced by `template`.
/// Solves run in parallel; results keep the order of `g_values`.
pub fn max_imag_vs_g<F>(spec: &LatticeSpec, template: F, g_values: &[f64]) -> Result<Vec<SpectrumResult>>
where
    F: Fn(f64) -> Vec<HatanoRegion> + Sync,
{
    g_values
        .par_iter()
        .map(|&g| {
            let h = build_hamiltonian(spec, &template(g), &[])?;
            spectrum_of(&h, g)
        })
        .collect()
}

/// Writes `g,max_imag` rows.
pub fn write_max_imag_csv<W: Write>(results: &[SpectrumResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["g", "max_imag"])?;
    for r in results {
        out.serialize((r.g, r.max_imag))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::lattice::{Boundary, LocalizedGain};

    fn ring(n: usize, g: f64) -> HamiltonianOperator {
        let lat = LatticeSpec::chain(n, Boundary::Periodic);
        build_hamiltonian(&lat, &[HatanoRegion::new([0, n - 1], [0, 0], g)], &[]).unwrap()
    }

    fn open_chain(n: usize, g: f64) -> HamiltonianOperator {
        let lat = LatticeSpec::chain(n, Boundary::Open);
        build_hamiltonian(&lat, &[HatanoRegion::new([0, n - 1], [0, 0], g)], &[]).unwrap()
    }

    /// Greedy nearest matching; both multisets must pair within `tol`.
    fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let mut pool = b.to_vec();
        a.iter().all(|x| {
            let (k, d) = pool
                .iter()
                .enumerate()
                .map(|(k, y)| (k, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            pool.swap_remove(k);
            d <= tol
        })
    }

    #[test]
    fn hermitian_open_chain_closed_form() {
        let vals = eigenvalues(&open_chain(8, 0.0)).unwrap();
        assert_eq!(vals.len(), 16);
        let want: Vec<Complex64> = (1..=8)
            .flat_map(|m| {
                let e = Complex64::new(2.0 * (m as f64 * PI / 9.0).cos(), 0.0);
                [e, e]
            })
            .collect();
        assert!(same_multiset(&vals, &want, 1e-12));
        assert!(vals.iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn ring_spectrum_is_the_ellipse() {
        let (n, g) = (64, 0.5f64);
        let vals = eigenvalues(&ring(n, g)).unwrap();
        let want: Vec<Complex64> = (0..n)
            .flat_map(|m| {
                let k = 2.0 * PI * m as f64 / n as f64;
                let e = Complex64::new(2.0 * k.cos() * g.cosh(), -2.0 * k.sin() * g.sinh());
                [e, e]
            })
            .collect();
        assert!(same_multiset(&vals, &want, 1e-10));
        assert!((max_imag(&vals) - 2.0 * g.sinh()).abs() < 1e-8);
        assert!((max_imag(&vals) - 1.0421906).abs() < 1e-7);
    }

    #[test]
    fn open_chain_spectrum_is_real() {
        for (n, g) in [(16, 0.3), (32, 0.5), (32, 1.0)] {
            let vals = eigenvalues(&open_chain(n, g)).unwrap();
            let worst = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-8, "n={n} g={g}: {worst}");
        }
    }

    #[test]
    fn reversed_asymmetry_conjugates_the_ring_spectrum() {
        let plus = eigenvalues(&ring(24, 0.4)).unwrap();
        let minus: Vec<Complex64> = eigenvalues(&ring(24, -0.4)).unwrap().iter().map(|v| v.conj()).collect();
        assert!(same_multiset(&plus, &minus, 1e-8));
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let lat = LatticeSpec::new(10, 8);
        let h = build_hamiltonian(
            &lat,
            &[HatanoRegion::new([3, 8], [4, 7], 0.6)],
            &[LocalizedGain::imaginary([5.0, 5.0], 1.5, 2.0)],
        )
        .unwrap();
        let vals = eigenvalues(&h).unwrap();
        let sum: Complex64 = vals.iter().sum();
        assert!((sum - h.trace()).norm() < 1e-8 * h.dimension() as f64);
    }

    #[test]
    fn eigenpair_residuals() {
        let lat = LatticeSpec::new(8, 6);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([2, 6], [3, 5], 0.8)], &[]).unwrap();
        let (vals, vecs) = spatial_eigenpairs(&h).unwrap();
        let a = h.spatial().to_dense();
        let anorm = a.norm();
        for k in 0..vals.len() {
            let v = vecs.column(k);
            assert!((&a * v - v * vals[k]).norm() <= 1e-8 * anorm);
        }
    }

    #[test]
    fn hermitian_max_imag_vanishes() {
        let lat = LatticeSpec::new(12, 10);
        let res = max_imag_vs_g(&lat, |g| vec![HatanoRegion::new([3, 9], [5, 9], g)], &[0.0]).unwrap();
        assert!(res[0].max_imag.abs() <= 1e-10);
    }

    #[test]
    fn embedded_region_max_imag_grows_with_g() {
        let lat = LatticeSpec::new(24, 16);
        let template = |g| {
            vec![
                HatanoRegion::new([6, 21], [8, 15], g).named("upper"),
                HatanoRegion::new([6, 21], [0, 7], 0.0).named("lower"),
            ]
        };
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let res = max_imag_vs_g(&lat, template, &grid).unwrap();
        for w in res.windows(2) {
            assert!(w[1].max_imag > w[0].max_imag + 1e-10, "{} -> {}", w[0].max_imag, w[1].max_imag);
        }
    }

    #[test]
    fn oversized_block_is_rejected() {
        let lat = LatticeSpec::new(65, 65);
        let h = build_hamiltonian(&lat, &[], &[]).unwrap();
        assert!(matches!(eigenvalues(&h), Err(Error::DimensionTooLarge { .. })));
    }
}
