//! Arnoldi approximation of `exp(−i H dt) v`.
//!
//! The subspace grows one vector at a time until the a-posteriori estimate
//! `β · h_{m+1,m} · |[exp(−i dt H_m)]_{m,1}|` drops below `tol · β`. If the
//! estimate has not converged at `max_dim`, the step is split in halves.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::dense::expm;
use crate::lattice::HamiltonianOperator;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovOptions {
    pub max_dim: usize,
    /// Relative accuracy target per application.
    pub tol: f64,
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_dim: 30,
            tol: 1e-12,
            max_halvings: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KrylovStats {
    /// Number of sub-intervals the step was split into (1 when unsplit).
    pub substeps: usize,
    /// Largest subspace dimension used.
    pub dim_used: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Computes `exp(−i H dt) v`.
pub fn expm_action(
    h: &HamiltonianOperator,
    v: &[Complex64],
    dt: f64,
    opts: &KrylovOptions,
) -> Result<(Vec<Complex64>, KrylovStats)> {
    let mut stats = KrylovStats::default();
    let out = expm_action_split(h, v, dt, opts, 0, &mut stats)?;
    Ok((out, stats))
}

fn expm_action_split(
    h: &HamiltonianOperator,
    v: &[Complex64],
    dt: f64,
    opts: &KrylovOptions,
    depth: u32,
    stats: &mut KrylovStats,
) -> Result<Vec<Complex64>> {
    match arnoldi_expm(h, v, dt, opts.max_dim, opts.tol) {
        Ok((out, used)) => {
            stats.substeps += 1;
            stats.dim_used = stats.dim_used.max(used);
            Ok(out)
        }
        Err(estimate) if depth >= opts.max_halvings => Err(Error::KrylovBreakdown {
            tol: opts.tol,
            estimate,
            halvings: depth,
        }),
        Err(_) => {
            let half = expm_action_split(h, v, 0.5 * dt, opts, depth + 1, stats)?;
            expm_action_split(h, &half, 0.5 * dt, opts, depth + 1, stats)
        }
    }
}

/// One Arnoldi expansion. On failure returns the final error estimate.
fn arnoldi_expm(
    h: &HamiltonianOperator,
    v: &[Complex64],
    dt: f64,
    max_dim: usize,
    tol: f64,
) -> std::result::Result<(Vec<Complex64>, usize), f64> {
    let n = v.len();
    let beta = norm(v);
    if beta == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n], 0));
    }
    let breakdown_tol = 1e-14 * h.one_norm().max(1.0);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_dim + 1);
    basis.push(v.iter().map(|x| x / beta).collect());
    let mut hess = DMatrix::<Complex64>::zeros(max_dim + 1, max_dim);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut estimate = f64::INFINITY;

    for j in 0..max_dim {
        h.apply(&basis[j], &mut w);
        let before = norm(&w);
        for (i, q) in basis.iter().enumerate() {
            let c = dot(q, &w);
            hess[(i, j)] = c;
            axpy(-c, q, &mut w);
        }
        let mut hn = norm(&w);
        if hn < 0.7 * before {
            // second Gram-Schmidt pass
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                hess[(i, j)] += c;
                axpy(-c, q, &mut w);
            }
            hn = norm(&w);
        }
        hess[(j + 1, j)] = Complex64::new(hn, 0.0);

        let m = j + 1;
        let small = hess.view((0, 0), (m, m)).map(|x| x * Complex64::new(0.0, -dt));
        let e = expm(&small);
        let happy = hn <= breakdown_tol;
        estimate = beta * hn * e[(j, 0)].norm() * dt.max(1.0);
        if happy || estimate <= tol * beta {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (i, q) in basis.iter().enumerate() {
                axpy(e[(i, 0)] * beta, q, &mut out);
            }
            return Ok((out, m));
        }
        let inv = 1.0 / hn;
        basis.push(w.iter().map(|x| x * inv).collect());
    }
    Err(estimate)
}
