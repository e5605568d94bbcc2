//! Fitting noisy polarization data and the inverse collapse-time law.
//!
//! cargo run --release --example logistic_fit

use nhcollapse::fitting::{collapse_time, fit_inverse_law, fit_logistic_samples, Logistic, LogisticOutcome, Model};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> nhcollapse::Result<()> {
    let truth = [1.0, 2.0, 0.0, -3.0];
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let ts: Vec<f64> = (0..150).map(|i| i as f64 * 0.04).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| Logistic.eval(t, &truth) + noise.sample(&mut rng)).collect();

    let LogisticOutcome::Fitted(fit) = fit_logistic_samples(&ts, &ys)? else {
        unreachable!("data are not flat")
    };
    let se = fit.std_errors.unwrap_or([f64::NAN; 4]);
    for (name, (v, (s, t))) in ["a", "b", "c", "t0"].iter().zip([fit.a, fit.b, fit.c, fit.t0].iter().zip(se.iter().zip(truth))) {
        println!("{name:>2} = {v:+.4} ± {s:.4} (true {t:+.1})");
    }
    let tau = collapse_time(&fit, Some(1.0))?;
    println!("tau = {:.4} hbar/gamma0 = {:.4} fs at gamma0 = 1 eV", tau.tau, tau.tau_fs.unwrap());

    let flat = vec![0.0; ts.len()];
    println!("flat series: {:?}", fit_logistic_samples(&ts, &flat)?);

    let pts: Vec<(f64, f64)> = (1..=10)
        .map(|k| {
            let g = k as f64 / 10.0;
            (g, 0.07 / (0.35 + g) + 0.07)
        })
        .collect();
    let inv = fit_inverse_law(&pts)?;
    println!(
        "inverse law: alpha = {:.8}, beta = {:.8}, gamma = {:.8}",
        inv.alpha, inv.beta, inv.gamma_off
    );
    Ok(())
}
