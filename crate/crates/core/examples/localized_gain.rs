//! A localized gain and an extended region select the same spin but leave
//! different spatial densities.
//!
//! cargo run --release --example localized_gain

use nhcollapse::harness::{preset, simulate};
use nhcollapse::observables::sz_density;

fn main() -> nhcollapse::Result<()> {
    let times = vec![3.0, 10.0];
    let mut gain = preset("fig4")?;
    gain.sampling.snapshot_times = times.clone();
    let mut region = preset("fig2")?;
    region.sampling.snapshot_times = times;

    let a = simulate(&gain)?;
    let b = simulate(&region)?;
    println!("localized z = {}i: final Sz {:+.6} ({})", gain.gains[0].z[1], a.report.final_sz, a.report.collapse.label());
    println!("region G = 0.5:   final Sz {:+.6} ({})", b.report.final_sz, b.report.collapse.label());
    for (sa, sb) in a.trajectory.snapshots.iter().zip(&b.trajectory.snapshots) {
        let (da, db) = (sz_density(&sa.state), sz_density(&sb.state));
        let peak = |d: &nhcollapse::observables::SiteField| {
            let (i, v) = d.values.iter().enumerate().max_by(|p, q| p.1.total_cmp(q.1)).unwrap();
            (i % d.nx, i / d.nx, *v)
        };
        println!(
            "t = {:>4}: |density difference| = {:.4}; peak gain {:?} region {:?}",
            sa.time,
            da.distance(&db),
            peak(&da),
            peak(&db)
        );
    }
    Ok(())
}
