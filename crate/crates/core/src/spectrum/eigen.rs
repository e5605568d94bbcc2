//! Dense eigensolver for general complex matrices.
//!
//! Pipeline: diagonal balancing (Osborne iteration on the off-diagonal
//! moduli), Householder reduction to upper Hessenberg form, then implicit
//! single-shift QR with Wilkinson shifts and deflation down to the complex
//! Schur form `A = Q T Q*`. Eigenvectors come from back-substitution on `T`.
//!
//! Balancing matters for Hatano-Nelson operators: an open non-reciprocal
//! chain is diagonally similar to a symmetric one, and without balancing
//! its eigenvalues are exponentially ill-conditioned in the chain length.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;
const MAX_BALANCE_SWEEPS: usize = 50_000;
const MAX_ITERS_PER_EIGENVALUE: usize = 100;

type C = Complex64;

fn zero() -> C {
    C::new(0.0, 0.0)
}

/// Balances `a` in place as `D⁻¹ A D` and returns the diagonal of `D`.
pub fn balance(a: &mut DMatrix<C>) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    // (row, col, |a|) for every off-diagonal nonzero
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != zero() {
                entries.push((i, j, a[(i, j)].norm()));
            }
        }
    }
    if entries.is_empty() {
        return d;
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &(i, j, _)) in entries.iter().enumerate() {
        rows[i].push(k);
        cols[j].push(k);
    }
    // current modulus of entry (i, j) is |a_ij| d_j / d_i
    for _ in 0..MAX_BALANCE_SWEEPS {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let r: f64 = rows[i].iter().map(|&k| entries[k].2 * d[entries[k].1]).sum::<f64>() / d[i];
            let c: f64 = cols[i].iter().map(|&k| entries[k].2 / d[entries[k].0]).sum::<f64>() * d[i];
            if r == 0.0 || c == 0.0 {
                continue;
            }
            let f = (r / c).sqrt();
            worst = worst.max(f.ln().abs());
            d[i] *= f;
        }
        if worst < 1e-10 {
            break;
        }
    }
    for j in 0..n {
        for i in 0..n {
            if i != j {
                a[(i, j)] *= d[j] / d[i];
            }
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// unitary factor into `q` when given.
fn hessenberg(a: &mut DMatrix<C>, mut q: Option<&mut DMatrix<C>>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![zero(); n];
    for k in 0..n - 2 {
        let alpha_norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * alpha_norm;
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vn: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for i in k + 1..n {
            v[i] /= vn;
        }
        // A ← (I − 2vv*) A on rows k+1..n
        for j in k..n {
            let s: C = (k + 1..n).map(|i| v[i].conj() * a[(i, j)]).sum::<C>() * 2.0;
            for i in k + 1..n {
                a[(i, j)] -= v[i] * s;
            }
        }
        // A ← A (I − 2vv*) on columns k+1..n
        for i in 0..n {
            let s: C = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum::<C>() * 2.0;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j].conj();
            }
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..n {
                let s: C = (k + 1..n).map(|j| q[(i, j)] * v[j]).sum::<C>() * 2.0;
                for j in k + 1..n {
                    q[(i, j)] -= s * v[j].conj();
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = zero();
        }
    }
}

/// Rotation `G = [[c, s], [−s̄, c]]` with `G [a; b] = [r; 0]`.
fn givens(a: C, b: C) -> (f64, C, C) {
    let (an, bn) = (a.norm(), b.norm());
    if bn == 0.0 {
        return (1.0, zero(), a);
    }
    if an == 0.0 {
        return (0.0, C::new(1.0, 0.0), b);
    }
    let rho = an.hypot(bn);
    let phase = a / an;
    (an / rho, phase * b.conj() / rho, phase * rho)
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift(h: &DMatrix<C>, hi: usize) -> C {
    let (a, b) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)]);
    let (c, d) = (h[(hi, hi - 1)], h[(hi, hi)]);
    let p = (a - d) * 0.5;
    let bc = b * c;
    let disc = (p * p + bc).sqrt();
    let (plus, minus) = (p + disc, p - disc);
    let big = if plus.norm() >= minus.norm() { plus } else { minus };
    if big.norm() == 0.0 {
        d
    } else {
        d - bc / big
    }
}

/// Reduces an upper Hessenberg matrix to upper triangular Schur form.
/// With `z`, the full Schur form is maintained and rotations accumulated.
fn schur_qr(h: &mut DMatrix<C>, mut z: Option<&mut DMatrix<C>>) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let full = z.is_some();
    let anorm = h.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut its = 0;
    let mut total = 0;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if s == 0.0 {
                s = anorm;
            }
            if h[(l, l - 1)].norm() <= EPS * s {
                h[(l, l - 1)] = zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if its > MAX_ITERS_PER_EIGENVALUE {
            return Err(Error::NoConvergence {
                iterations: total,
                row: hi,
                unconverged: hi + 1,
            });
        }
        let mu = if its % 10 == 0 {
            h[(hi, hi)] + C::new(0.75 * h[(hi, hi - 1)].re.abs(), 0.0)
        } else {
            wilkinson_shift(h, hi)
        };
        let col_end = if full { n } else { hi + 1 };
        let row_start = if full { 0 } else { l };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s, r) = givens(x, y);
            if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = zero();
            }
            for j in k..col_end {
                let (p, q) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = p * c + s * q;
                h[(k + 1, j)] = q * c - s.conj() * p;
            }
            let row_end = (k + 2).min(hi);
            for i in row_start..=row_end {
                let (u, v) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = u * c + s.conj() * v;
                h[(i, k + 1)] = v * c - s * u;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let (u, v) = (z[(i, k)], z[(i, k + 1)]);
                    z[(i, k)] = u * c + s.conj() * v;
                    z[(i, k + 1)] = v * c - s * u;
                }
            }
        }
    }
    Ok(())
}

/// All eigenvalues of a square complex matrix, in Schur-diagonal order.
pub fn eigenvalues(a: &DMatrix<C>) -> Result<Vec<C>> {
    assert_eq!(a.nrows(), a.ncols());
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h, None);
    schur_qr(&mut h, None)?;
    Ok((0..h.nrows()).map(|i| h[(i, i)]).collect())
}

/// Eigenvalues with unit-norm right eigenvectors (as columns).
pub fn eigenpairs(a: &DMatrix<C>) -> Result<(Vec<C>, DMatrix<C>)> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let mut t = a.clone();
    let d = balance(&mut t);
    let mut z = DMatrix::<C>::identity(n, n);
    hessenberg(&mut t, Some(&mut z));
    schur_qr(&mut t, Some(&mut z))?;

    let tnorm = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let smin = (EPS * tnorm).max(f64::MIN_POSITIVE);
    let mut vecs = DMatrix::<C>::zeros(n, n);
    let mut y = vec![zero(); n];
    for k in 0..n {
        let lam = t[(k, k)];
        y.iter_mut().for_each(|v| *v = zero());
        y[k] = C::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C = (j + 1..=k).map(|m| t[(j, m)] * y[m]).sum();
            let mut den = t[(j, j)] - lam;
            if den.norm() < smin {
                den = C::new(smin, 0.0);
            }
            y[j] = -s / den;
            let big = y[j].norm();
            if big > 1e100 {
                for v in y[..=k].iter_mut() {
                    *v /= big;
                }
            }
        }
        let mut norm2 = 0.0;
        for i in 0..n {
            let v: C = (0..=k).map(|m| z[(i, m)] * y[m]).sum::<C>() * d[i];
            vecs[(i, k)] = v;
            norm2 += v.norm_sqr();
        }
        let inv = 1.0 / norm2.sqrt();
        for i in 0..n {
            vecs[(i, k)] *= inv;
        }
    }
    Ok(((0..n).map(|i| t[(i, i)]).collect(), vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, seed: u64) -> DMatrix<C> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn triangular_matrix_eigenvalues_are_its_diagonal() {
        let mut a = random(6, 1);
        for j in 0..6 {
            for i in j + 1..6 {
                a[(i, j)] = zero();
            }
        }
        let mut got = eigenvalues(&a).unwrap();
        let mut want: Vec<C> = (0..6).map(|i| a[(i, i)]).collect();
        let key = |v: &C| (v.re, v.im);
        got.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        want.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn random_matrix_residuals_and_trace() {
        for (n, seed) in [(1, 3), (2, 4), (7, 5), (40, 6)] {
            let a = random(n, seed);
            let (vals, vecs) = eigenpairs(&a).unwrap();
            let anorm = a.norm();
            for k in 0..n {
                let v = vecs.column(k);
                let r = (&a * v - v * vals[k]).norm();
                assert!(r <= 1e-10 * anorm, "n={n} k={k} residual {r}");
            }
            let tr: C = (0..n).map(|i| a[(i, i)]).sum();
            let sum: C = vals.iter().sum();
            assert!((tr - sum).norm() < 1e-10 * n as f64);
        }
    }

    #[test]
    fn rotation_matrix_has_conjugate_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[zero(), C::new(-1.0, 0.0), C::new(1.0, 0.0), zero()]);
        let mut vals = eigenvalues(&a).unwrap();
        vals.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((vals[0] - C::new(0.0, -1.0)).norm() < 1e-14);
        assert!((vals[1] - C::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn balancing_symmetrizes_a_nonreciprocal_chain() {
        let n = 20;
        let g: f64 = 1.2;
        let mut a = DMatrix::<C>::zeros(n, n);
        for j in 0..n - 1 {
            a[(j, j + 1)] = C::new((-g).exp(), 0.0);
            a[(j + 1, j)] = C::new(g.exp(), 0.0);
        }
        balance(&mut a);
        for j in 0..n - 1 {
            assert!((a[(j, j + 1)] - a[(j + 1, j)]).norm() < 1e-8);
        }
    }
}
