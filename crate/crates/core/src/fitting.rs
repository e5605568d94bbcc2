//! Levenberg-Marquardt least squares for the logistic polarization curve
//! `f(t) = a / (1 + exp(−b (t + t₀))) + c` and the inverse law
//! `h(G) = α / (β + G) + γ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::observables::Trajectory;
use crate::units::sim_time_to_fs;
use crate::{Error, Result};

/// A model with an analytic Jacobian.
pub trait Model {
    const N: usize;

    fn eval(&self, x: f64, p: &[f64]) -> f64;

    /// Writes `∂f/∂p_k` into `out`.
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]);

    fn feasible(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmOptions {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            max_iter: 200,
            grad_tol: 1e-10,
            step_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// `Σ r²`
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub last_step_norm: f64,
    /// `√diag((JᵀJ)⁻¹ · cost/(m − n))`, when defined.
    pub std_errors: Option<Vec<f64>>,
}

fn residuals<M: Model>(model: &M, xs: &[f64], ys: &[f64], p: &[f64]) -> Vec<f64> {
    xs.iter().zip(ys).map(|(&x, &y)| model.eval(x, p) - y).collect()
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<M: Model>(model: &M, xs: &[f64], p: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(xs.len(), M::N);
    let mut row = vec![0.0; M::N];
    for (i, &x) in xs.iter().enumerate() {
        model.gradient(x, p, &mut row);
        for k in 0..M::N {
            j[(i, k)] = row[k];
        }
    }
    j
}

/// Minimizes `Σ (f(x_i; p) − y_i)²` from `p0`.
pub fn levenberg_marquardt<M: Model>(model: &M, xs: &[f64], ys: &[f64], p0: &[f64], opts: &LmOptions) -> LmReport {
    let n = M::N;
    let mut p = p0.to_vec();
    let mut r = residuals(model, xs, ys, &p);
    let mut cost = cost_of(&r);
    let mut lambda = opts.lambda0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let j = jacobian(model, xs, &p);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * DVector::from_column_slice(&r);
        grad_norm = grad.norm();
        if grad_norm < opts.grad_tol {
            converged = true;
            break;
        }
        let diag_floor = 1e-12 * (0..n).map(|k| jtj[(k, k)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let Some(delta) = a.lu().solve(&(-&grad)) else {
                lambda *= opts.lambda_up;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let tr = residuals(model, xs, ys, &trial);
            let tc = cost_of(&tr);
            if model.feasible(&trial) && tc.is_finite() && tc < cost {
                last_step = delta.norm();
                p = trial;
                r = tr;
                cost = tc;
                lambda = (lambda / opts.lambda_down).max(1e-300);
                accepted = true;
                break;
            }
            lambda *= opts.lambda_up;
        }
        if !accepted {
            // no descent direction left at any damping
            break;
        }
        let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if last_step < opts.step_tol * (1.0 + pn) {
            converged = true;
            break;
        }
    }
    if !converged {
        let j = jacobian(model, xs, &p);
        grad_norm = (j.transpose() * DVector::from_column_slice(&r)).norm();
        converged = grad_norm < opts.grad_tol;
    }

    let m = xs.len();
    let std_errors = (m > n)
        .then(|| {
            let j = jacobian(model, xs, &p);
            let cov = (j.transpose() * &j).try_inverse()?;
            let s2 = cost / (m - n) as f64;
            Some((0..n).map(|k| (cov[(k, k)] * s2).max(0.0).sqrt()).collect())
        })
        .flatten();

    LmReport {
        params: p,
        cost,
        iterations,
        converged,
        grad_norm,
        last_step_norm: last_step,
        std_errors,
    }
}

/// `a / (1 + exp(−b (t + t₀))) + c` with parameters `[a, b, c, t₀]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Logistic;

impl Logistic {
    fn sigmoid(t: f64, b: f64, t0: f64) -> f64 {
        let z = -b * (t + t0);
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

impl Model for Logistic {
    const N: usize = 4;

    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * Self::sigmoid(t, p[1], p[3]) + p[2]
    }

    fn gradient(&self, t: f64, p: &[f64], out: &mut [f64]) {
        let (a, b, t0) = (p[0], p[1], p[3]);
        let s = Self::sigmoid(t, b, t0);
        let ds = s * (1.0 - s);
        out[0] = s;
        out[1] = a * ds * (t + t0);
        out[2] = 1.0;
        out[3] = a * ds * b;
    }
}

/// `α / (β + G) + γ` with parameters `[α, β, γ]`, restricted to `β + G > 0`.
#[derive(Clone, Debug)]
pub struct InverseLaw {
    min_g: f64,
}

impl Model for InverseLaw {
    const N: usize = 3;

    fn eval(&self, g: f64, p: &[f64]) -> f64 {
        p[0] / (p[1] + g) + p[2]
    }

    fn gradient(&self, g: f64, p: &[f64], out: &mut [f64]) {
        let d = p[1] + g;
        out[0] = 1.0 / d;
        out[1] = -p[0] / (d * d);
        out[2] = 1.0;
    }

    fn feasible(&self, p: &[f64]) -> bool {
        p[1] + self.min_g > 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub a: f64,
    /// Rate in energy units (`γ₀`).
    pub b: f64,
    pub c: f64,
    pub t0: f64,
    pub residual_rms: f64,
    pub converged: bool,
    /// The data were negated before fitting (falling curve).
    pub flipped: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Standard errors of `[a, b, c, t0]`.
    pub std_errors: Option<[f64; 4]>,
}

impl LogisticFit {
    pub fn eval(&self, t: f64) -> f64 {
        let v = Logistic.eval(t, &[self.a, self.b, self.c, self.t0]);
        if self.flipped {
            -v
        } else {
            v
        }
    }
}

/// Polarization spread below which a trajectory counts as flat.
pub const FLAT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LogisticOutcome {
    Fitted(LogisticFit),
    /// `⟨S_z⟩` never moved: no collapse to fit.
    NoCollapse { spread: f64 },
}

impl LogisticOutcome {
    pub fn fit(&self) -> Option<&LogisticFit> {
        match self {
            Self::Fitted(f) => Some(f),
            Self::NoCollapse { .. } => None,
        }
    }
}

fn sorted_samples(ts: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..ts.len()).collect();
    idx.sort_by(|&i, &j| ts[i].total_cmp(&ts[j]).then(ys[i].total_cmp(&ys[j])));
    (idx.iter().map(|&i| ts[i]).collect(), idx.iter().map(|&i| ys[i]).collect())
}

fn logistic_guess(ts: &[f64], ys: &[f64]) -> [f64; 4] {
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a = hi - lo;
    let c = lo;
    let mut slope: f64 = 0.0;
    for k in 1..ts.len() {
        let dt = ts[k] - ts[k - 1];
        if dt > 0.0 {
            slope = slope.max((ys[k] - ys[k - 1]) / dt);
        }
    }
    let b = if slope > 0.0 { 4.0 * slope / a } else { 1.0 };
    let half = c + 0.5 * a;
    let k = ys.iter().position(|&y| y >= half).unwrap_or(ys.len() - 1);
    let t_half = if k == 0 {
        ts[0]
    } else {
        let (y0, y1) = (ys[k - 1], ys[k]);
        let frac = if y1 > y0 { (half - y0) / (y1 - y0) } else { 0.0 };
        ts[k - 1] + frac * (ts[k] - ts[k - 1])
    };
    [a, b, c, -t_half]
}

/// Fits raw `(t, y)` samples to the logistic curve.
pub fn fit_logistic_samples(ts: &[f64], ys: &[f64]) -> Result<LogisticOutcome> {
    if ts.len() != ys.len() {
        return Err(Error::Fit("time and value lengths differ".into()));
    }
    if ts.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 samples, got {}", ts.len())));
    }
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > FLAT_TOLERANCE) {
        return Ok(LogisticOutcome::NoCollapse { spread: hi - lo });
    }
    let (ts, mut ys) = sorted_samples(ts, ys);
    let flipped = ys[ys.len() - 1] < ys[0];
    if flipped {
        ys.iter_mut().for_each(|y| *y = -*y);
    }
    let p0 = logistic_guess(&ts, &ys);
    let rep = levenberg_marquardt(&Logistic, &ts, &ys, &p0, &LmOptions::default());
    let p = &rep.params;
    Ok(LogisticOutcome::Fitted(LogisticFit {
        a: p[0],
        b: p[1],
        c: p[2],
        t0: p[3],
        residual_rms: (rep.cost / ts.len() as f64).sqrt(),
        converged: rep.converged,
        flipped,
        iterations: rep.iterations,
        grad_norm: rep.grad_norm,
        std_errors: rep.std_errors.map(|s| [s[0], s[1], s[2], s[3]]),
    }))
}

pub fn fit_logistic(traj: &Trajectory) -> Result<LogisticOutcome> {
    fit_logistic_samples(&traj.times, &traj.sz)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseTime {
    /// `ħ/b` in `ħ/γ₀`.
    pub tau: f64,
    pub tau_fs: Option<f64>,
}

/// `τ = ħ/b`, optionally converted to femtoseconds with `γ₀` in eV.
pub fn collapse_time(fit: &LogisticFit, gamma0_ev: Option<f64>) -> Result<CollapseTime> {
    if !fit.converged {
        return Err(Error::Fit("logistic fit did not converge".into()));
    }
    if !(fit.b > 0.0) {
        return Err(Error::Fit(format!("rate b = {} is not positive", fit.b)));
    }
    let tau = 1.0 / fit.b;
    Ok(CollapseTime {
        tau,
        tau_fs: gamma0_ev.map(|e| sim_time_to_fs(tau, e)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_off: f64,
    pub residual_rms: f64,
    pub converged: bool,
}

impl InverseFit {
    pub fn eval(&self, g: f64) -> f64 {
        self.alpha / (self.beta + g) + self.gamma_off
    }
}

/// Linear least squares for `(α, γ)` at fixed `β`.
fn inverse_linear(points: &[(f64, f64)], beta: f64) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0);
    for &(g, t) in points {
        let u = 1.0 / (beta + g);
        su += u;
        suu += u * u;
        sy += t;
        suy += u * t;
    }
    let det = n * suu - su * su;
    let (alpha, gamma) = if det.abs() > 1e-300 {
        ((n * suy - su * sy) / det, (suu * sy - su * suy) / det)
    } else {
        (0.0, sy / n)
    };
    let cost = points
        .iter()
        .map(|&(g, t)| {
            let r = alpha / (beta + g) + gamma - t;
            r * r
        })
        .sum();
    (alpha, gamma, cost)
}

/// Least-squares fit of `(G, τ)` points to `α/(β + G) + γ`.
pub fn fit_inverse_law(points: &[(f64, f64)]) -> Result<InverseFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|(g, t)| !g.is_finite() || !t.is_finite()) {
        return Err(Error::Fit("non-finite point".into()));
    }
    let mut points = points.to_vec();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if points.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Fit("G values are not distinct".into()));
    }
    let min_g = points[0].0;
    let span = points[points.len() - 1].0 - min_g;

    // scan the offset β + G_min over a log grid, solving α, γ exactly
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let steps = 400;
    for k in 0..=steps {
        let off = span * 10f64.powf(-6.0 + 10.0 * k as f64 / steps as f64);
        let beta = off - min_g;
        let (alpha, gamma, cost) = inverse_linear(&points, beta);
        if cost < best.0 {
            best = (cost, alpha, beta, gamma);
        }
    }
    let (gs, ts): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let model = InverseLaw { min_g };
    let rep = levenberg_marquardt(&model, &gs, &ts, &[best.1, best.2, best.3], &LmOptions::default());
    Ok(InverseFit {
        alpha: rep.params[0],
        beta: rep.params[1],
        gamma_off: rep.params[2],
        residual_rms: (rep.cost / gs.len() as f64).sqrt(),
        converged: rep.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(p: [f64; 4], n: usize, t_max: f64) -> (Vec<f64>, Vec<f64>) {
        let ts: Vec<f64> = (0..n).map(|i| i as f64 * t_max / (n - 1) as f64).collect();
        let ys = ts.iter().map(|&t| Logistic.eval(t, &p)).collect();
        (ts, ys)
    }

    fn fitted(o: LogisticOutcome) -> LogisticFit {
        match o {
            LogisticOutcome::Fitted(f) => f,
            other => panic!("expected a fit, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let (ts, ys) = synthetic([1.0, 2.0, 0.0, -3.0], 120, 6.0);
        let f = fitted(fit_logistic_samples(&ts, &ys).unwrap());
        assert!(f.converged);
        for (got, want) in [(f.a, 1.0), (f.b, 2.0), (f.c, 0.0), (f.t0, -3.0)] {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn noisy_fit_within_three_standard_errors() {
        let truth = [1.0, 2.0, 0.0, -3.0];
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        let mut inside = 0;
        let trials = 40;
        for _ in 0..trials {
            let (ts, mut ys) = synthetic(truth, 150, 6.0);
            ys.iter_mut().for_each(|y| *y += noise.sample(&mut rng));
            let f = fitted(fit_logistic_samples(&ts, &ys).unwrap());
            let se = f.std_errors.unwrap();
            let ok = [f.a, f.b, f.c, f.t0]
                .iter()
                .zip(truth)
                .zip(se)
                .all(|((got, want), s)| (got - want).abs() <= 3.0 * s);
            inside += ok as usize;
        }
        // four parameters jointly at 3σ: expect ~99% coverage
        assert!(inside >= trials - 2, "{inside}/{trials}");
    }

    #[test]
    fn falling_curve_is_flipped() {
        let (ts, ys) = synthetic([1.0, 1.5, 0.0, -4.0], 100, 8.0);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        let f = fitted(fit_logistic_samples(&ts, &neg).unwrap());
        assert!(f.flipped);
        assert!((f.b - 1.5).abs() < 1e-6);
        assert!((f.eval(5.0) + Logistic.eval(5.0, &[1.0, 1.5, 0.0, -4.0])).abs() < 1e-6);
    }

    #[test]
    fn flat_series_is_no_collapse() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys = vec![1e-12; 20];
        assert!(matches!(fit_logistic_samples(&ts, &ys).unwrap(), LogisticOutcome::NoCollapse { .. }));
        assert!(fit_logistic_samples(&ts[..5], &ys[..5]).is_err());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use rand::Rng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut grad = [0.0; 4];
        for _ in 0..100 {
            let p = [
                rng.random_range(0.2..2.0),
                rng.random_range(0.2..3.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-5.0..0.0),
            ];
            let t = rng.random_range(0.0..8.0);
            Logistic.gradient(t, &p, &mut grad);
            for k in 0..4 {
                let h = 1e-5 * p[k].abs().max(1.0);
                let mut hi = p;
                let mut lo = p;
                hi[k] += h;
                lo[k] -= h;
                let fd = (Logistic.eval(t, &hi) - Logistic.eval(t, &lo)) / (2.0 * h);
                let scale = grad[k].abs().max(1e-3);
                assert!((fd - grad[k]).abs() <= 1e-6 * scale, "k={k} fd={fd} an={}", grad[k]);
            }
        }
    }

    #[test]
    fn collapse_time_units() {
        let fit = LogisticFit {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            t0: 0.0,
            residual_rms: 0.0,
            converged: true,
            flipped: false,
            iterations: 1,
            grad_norm: 0.0,
            std_errors: None,
        };
        let t = collapse_time(&fit, Some(1.0)).unwrap();
        assert_eq!(t.tau, 1.0);
        assert!((t.tau_fs.unwrap() - 0.6582119569).abs() < 1e-12);
        assert_eq!(collapse_time(&fit, None).unwrap().tau_fs, None);
        let bad = LogisticFit { b: -0.1, ..fit };
        assert!(collapse_time(&bad, None).is_err());
    }

    #[test]
    fn inverse_law_recovers_generator() {
        let (alpha, beta, gamma) = (0.07, 0.35, 0.07);
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|k| {
                let g = k as f64 / 10.0;
                (g, alpha / (beta + g) + gamma)
            })
            .collect();
        let f = fit_inverse_law(&pts).unwrap();
        assert!((f.alpha - alpha).abs() < 1e-6);
        assert!((f.beta - beta).abs() < 1e-6);
        assert!((f.gamma_off - gamma).abs() < 1e-6);
    }

    #[test]
    fn inverse_law_flat_limit() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64 * 0.1, 2.5)).collect();
        let f = fit_inverse_law(&pts).unwrap();
        assert!(f.alpha.abs() < 1e-8);
        assert!((f.gamma_off - 2.5).abs() < 1e-8);
    }

    #[test]
    fn inverse_law_errors() {
        assert!(fit_inverse_law(&[(0.1, 1.0), (0.2, 0.5), (0.3, 0.3)]).is_err());
        assert!(fit_inverse_law(&[(0.1, 1.0), (0.1, 0.5), (0.1, 0.3), (0.1, 0.2)]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fit_ignores_sample_order(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let (ts, ys) = synthetic([0.9, 1.3, 0.05, -4.0], 80, 8.0);
            let noise = Normal::new(0.0, 0.005).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let ys: Vec<f64> = ys.iter().map(|y| y + noise.sample(&mut rng)).collect();
            let base = fitted(fit_logistic_samples(&ts, &ys).unwrap());
            let mut idx: Vec<usize> = (0..ts.len()).collect();
            idx.shuffle(&mut rng);
            let ts2: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
            let ys2: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            let shuffled = fitted(fit_logistic_samples(&ts2, &ys2).unwrap());
            for (a, b) in [(base.a, shuffled.a), (base.b, shuffled.b), (base.c, shuffled.c), (base.t0, shuffled.t0)] {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn time_shift_moves_only_the_offset(shift in -20.0f64..20.0) {
            let (ts, ys) = synthetic([1.0, 1.7, -0.02, -3.5], 90, 7.0);
            let base = fitted(fit_logistic_samples(&ts, &ys).unwrap());
            let shifted_ts: Vec<f64> = ts.iter().map(|t| t + shift).collect();
            let moved = fitted(fit_logistic_samples(&shifted_ts, &ys).unwrap());
            prop_assert!((moved.a - base.a).abs() <= 1e-8);
            prop_assert!((moved.b - base.b).abs() <= 1e-8);
            prop_assert!((moved.c - base.c).abs() <= 1e-8);
            prop_assert!((moved.t0 - (base.t0 - shift)).abs() <= 1e-8);
        }
    }
}
