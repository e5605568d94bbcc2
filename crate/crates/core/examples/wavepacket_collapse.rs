//! The two-branch packet under a G = 0.5 upper region: polarization curve,
//! logistic fit and snapshot densities.
//!
//! cargo run --release --example wavepacket_collapse [OUT_DIR]

use nhcollapse::harness::{preset, run_simulation, simulate};
use nhcollapse::observables::sz_density;

fn main() -> nhcollapse::Result<()> {
    let cfg = preset("fig2")?;
    let out = match std::env::args().nth(1) {
        Some(dir) => run_simulation(&cfg, dir.as_ref())?,
        None => simulate(&cfg)?,
    };
    let traj = &out.trajectory;

    println!("    t       Sz      ln N");
    for i in (0..traj.len()).step_by(10) {
        println!("{:6.2}  {:+.5}  {:7.3}", traj.times[i], traj.sz[i], traj.log_norm[i]);
    }
    if let Some(fit) = out.fit.as_ref().and_then(|f| f.fit()) {
        println!(
            "\nlogistic: a = {:.4}, b = {:.4}, c = {:.4}, t0 = {:.4}, rms = {:.2e}",
            fit.a, fit.b, fit.c, fit.t0, fit.residual_rms
        );
    }
    println!("tau = {:?}, threshold crossing at t = {:?}", out.report.tau, out.report.threshold_time);
    println!("outcome: {}", out.report.collapse.label());

    for snap in &traj.snapshots {
        let d = sz_density(&snap.state);
        let (mut upper, mut lower) = (0.0, 0.0);
        for y in 0..d.ny {
            for x in 0..d.nx {
                if y as f64 > cfg.lattice.midline_y() {
                    upper += d.at(x, y);
                } else {
                    lower += d.at(x, y);
                }
            }
        }
        println!("t = {:.1}: Sz density upper half {upper:+.4}, lower half {lower:+.4}", snap.time);
    }
    Ok(())
}
