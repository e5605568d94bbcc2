//! Krylov propagation against the dense matrix exponential.
//!
//! cargo run --release --example krylov_vs_dense

use std::f64::consts::PI;
use std::time::Instant;

use nhcollapse::evolution::{evolve, expm_action, dense_propagator, EvolutionConfig, KrylovOptions, Method, Recorder};
use nhcollapse::lattice::{build_hamiltonian, HatanoRegion, LatticeSpec, LocalizedGain};
use nhcollapse::state::{entangled_initial_state, PacketSpec};

fn main() -> nhcollapse::Result<()> {
    let lat = LatticeSpec::new(20, 16);
    let h = build_hamiltonian(
        &lat,
        &[HatanoRegion::new([6, 19], [8, 15], 0.7).named("upper")],
        &[LocalizedGain::imaginary([12.0, 4.0], 1.5, 1.0)],
    )?;
    let up = PacketSpec::new([5.0, 11.5], [PI / 4.0, PI / 4.0], 2.0);
    let st = entangled_initial_state(&up, &up.mirrored(&lat), &lat)?;

    println!("   dt    |krylov - dense|   subspace");
    for dt in [0.01, 0.1, 0.5, 2.0] {
        let (k, stats) = expm_action(&h, st.as_slice(), dt, &KrylovOptions::default())?;
        let d = dense_propagator(&h, dt)? * nalgebra::DVector::from_column_slice(st.as_slice());
        let err = k.iter().zip(d.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        println!("{dt:6.2}   {:.3e}          {} x {}", err / d.norm(), stats.dim_used, stats.substeps);
    }

    let cfg = EvolutionConfig::new(0.01, 4.0);
    let t = Instant::now();
    let a = evolve(&st, &h, &cfg, &Recorder::default())?;
    let tk = t.elapsed();
    let t = Instant::now();
    let b = evolve(&st, &h, &cfg.clone().with_method(Method::DenseOracle), &Recorder::default())?;
    let td = t.elapsed();
    let worst = a.sz.iter().zip(&b.sz).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("\ntrajectory to t = 4: max |dSz| = {worst:.2e}; krylov {tk:.2?}, dense {td:.2?}");
    Ok(())
}
