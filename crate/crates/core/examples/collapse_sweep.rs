//! Collapse time against G, the inverse-law fit and the spectrum correlation.
//!
//! cargo run --release --example collapse_sweep [a:b:n] [OUT_DIR]

use nhcollapse::harness::{parse_grid, preset, run_sweep, run_sweep_to, SweepPlan};

fn main() -> nhcollapse::Result<()> {
    let mut args = std::env::args().skip(1);
    let base = preset("fig3")?;
    let mut plan = SweepPlan::from_config(&base)?;
    plan.values = parse_grid(&args.next().unwrap_or_else(|| "0.1:0.5:5".into()))?;
    let outcome = match args.next() {
        Some(dir) => run_sweep_to(&plan, dir.as_ref())?,
        None => run_sweep(&plan)?,
    };

    println!("   G      tau     t(0.99)   max Im");
    for r in &outcome.rows {
        println!(
            "{:5.2}  {:7.4}  {:8.3}  {:7.4}",
            r.value,
            r.tau.unwrap_or(f64::NAN),
            r.threshold_time.unwrap_or(f64::NAN),
            r.max_imag.unwrap_or(f64::NAN)
        );
    }
    let s = &outcome.summary;
    if let Some(f) = &s.inverse_fit {
        println!(
            "\ntau(G) = {:.4}/({:.4} + G) + {:.4}, rms {:.2e} (mean tau {:.4})",
            f.alpha,
            f.beta,
            f.gamma_off,
            f.residual_rms,
            s.mean_tau.unwrap_or(f64::NAN)
        );
    }
    if let Some(c) = s.rate_spectrum_correlation {
        println!("corr(1/tau, max Im) = {c:.5}");
    }
    Ok(())
}
