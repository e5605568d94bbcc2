//! Outcomes for swapped, negative and mixed-sign region pairs.
//!
//! cargo run --release --example sign_scenarios

use nhcollapse::harness::{preset, simulate};

fn main() -> nhcollapse::Result<()> {
    let mut base = preset("fig2")?;
    base.evolution.t_max = 12.0;
    base.sampling.snapshot_times.clear();
    println!("  g_upper  g_lower   final Sz   ln N(end)  outcome");
    for (gu, gl) in [(0.5, 0.0), (0.0, 0.5), (0.0, 0.0), (-0.5, 0.0), (0.5, -0.5), (-0.5, 0.3)] {
        let mut cfg = base.clone();
        cfg.region_mut("upper").unwrap().g = gu;
        cfg.region_mut("lower").unwrap().g = gl;
        let r = simulate(&cfg)?.report;
        println!(
            "  {gu:+.2}    {gl:+.2}     {:+.5}   {:+8.3}   {}",
            r.final_sz,
            r.log_norm_final,
            r.collapse.label()
        );
    }
    Ok(())
}
