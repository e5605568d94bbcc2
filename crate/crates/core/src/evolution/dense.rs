//! Dense matrix exponential by scaling and squaring with Padé approximants
//! (degrees 3, 5, 7, 9, 13; thresholds from Higham 2005).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::lattice::HamiltonianOperator;
use crate::{Error, Result};

/// Largest operator dimension accepted by [`dense_propagator`].
pub const DENSE_LIMIT: usize = 4096;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    a.map(|v| v * s)
}

/// Low-degree Padé numerator/denominator pieces `(U, V)` with
/// `r = (V − U)⁻¹ (V + U)`.
fn pade_low(a: &DMatrix<Complex64>, b: &[f64]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::<Complex64>::identity(n, n);
    let mut u = scaled(&power, b[1]);
    let mut v = scaled(&power, b[0]);
    let m = b.len() - 1;
    for k in (2..=m).step_by(2) {
        power = &power * &a2;
        v += scaled(&power, b[k]);
        if k < m {
            u += scaled(&power, b[k + 1]);
        }
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let b = &B13;
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a * (&a6 * inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    (u, v)
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve_pade(u, v);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a_s = scaled(a, 2f64.powi(-s));
    let (u, v) = pade13(&a_s);
    let mut r = solve_pade(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn solve_pade(u: DMatrix<Complex64>, v: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is singular")
}

/// `exp(−i H dt)` as a dense matrix over the full `(site × spin)` basis.
pub fn dense_propagator(h: &HamiltonianOperator, dt: f64) -> Result<DMatrix<Complex64>> {
    let dim = h.dimension();
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { dim, limit: DENSE_LIMIT });
    }
    let n = h.spatial().dim();
    let block = expm(&h.spatial().to_dense().map(|v| v * Complex64::new(0.0, -dt)));
    let mut u = DMatrix::zeros(dim, dim);
    u.view_mut((0, 0), (n, n)).copy_from(&block);
    u.view_mut((n, n), (n, n)).copy_from(&block);
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, HatanoRegion, LatticeSpec};
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let lat = LatticeSpec::new(2, 2);
        let h = HamiltonianOperator::from_block(lat.clone(), crate::sparse::CsrMatrix::from_triplets(4, vec![]));
        let u = dense_propagator(&h, 0.7).unwrap();
        assert_eq!(u, DMatrix::identity(8, 8));
    }

    #[test]
    fn diagonal_is_elementwise() {
        for scale in [0.01, 0.5, 3.0, 40.0] {
            let d = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0), c(0.3, -1.0)];
            let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|v| v * scale)));
            let e = expm(&a);
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { (d[i] * scale).exp() } else { c(0.0, 0.0) };
                    assert!((e[(i, j)] - want).norm() <= 1e-13 * want.norm().max(1.0), "scale {scale}");
                }
            }
        }
    }

    #[test]
    fn forward_times_backward_is_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for dt in [0.05, 0.7, 2.5] {
            let h = DMatrix::from_fn(8, 8, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let fwd = expm(&h.map(|v| v * c(0.0, -dt)));
            let bwd = expm(&h.map(|v| v * c(0.0, dt)));
            let err = max_abs(&(fwd * bwd - DMatrix::identity(8, 8)));
            assert!(err <= 1e-10, "dt {dt}: {err}");
        }
    }

    #[test]
    fn matches_taylor_series_on_nilpotent() {
        // strictly upper-triangular: series terminates
        let a = DMatrix::from_row_slice(3, 3, &[c(0.0, 0.0), c(2.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let want = DMatrix::identity(3, 3) + &a + (&a * &a).map(|v| v * 0.5);
        assert!(max_abs(&(expm(&a) - want)) < 1e-13);
    }

    #[test]
    fn hermitian_propagator_is_unitary() {
        let lat = LatticeSpec::new(4, 3);
        let h = build_hamiltonian(&lat, &[], &[]).unwrap();
        let u = dense_propagator(&h, 0.3).unwrap();
        let err = max_abs(&(u.adjoint() * &u - DMatrix::identity(24, 24)));
        assert!(err < 1e-13);
    }

    #[test]
    fn too_large_is_rejected() {
        let lat = LatticeSpec::new(64, 33);
        let h = build_hamiltonian(&lat, &[HatanoRegion::new([0, 3], [0, 3], 0.1)], &[]).unwrap();
        assert!(matches!(dense_propagator(&h, 0.1), Err(Error::DimensionTooLarge { .. })));
    }
}
