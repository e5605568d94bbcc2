//! Spectra of Hatano-Nelson chains and the growth rate of an embedded region.
//!
//! cargo run --release --example hatano_spectrum

use std::f64::consts::PI;

use nhcollapse::lattice::{build_hamiltonian, Boundary, HatanoRegion, LatticeSpec};
use nhcollapse::spectrum::{eigenvalues, max_imag, max_imag_vs_g};

fn main() -> nhcollapse::Result<()> {
    let g = 0.5f64;

    // ring: eigenvalues on the ellipse 2cos(k)cosh(g) + 2i sin(k)sinh(g)
    let n = 64;
    let ring = LatticeSpec::chain(n, Boundary::Periodic);
    let h = build_hamiltonian(&ring, &[HatanoRegion::new([0, n - 1], [0, 0], g)], &[])?;
    let vals = eigenvalues(&h)?;
    let worst = vals
        .iter()
        .map(|v| {
            let (a, b) = (2.0 * g.cosh(), 2.0 * g.sinh());
            ((v.re / a).powi(2) + (v.im / b).powi(2) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    println!("ring N={n}, g={g}: max Im = {:.10} (2 sinh g = {:.10})", max_imag(&vals), 2.0 * g.sinh());
    println!("  worst ellipse residual {worst:.2e}");

    // open chain: similar to the Hermitian chain, so the spectrum is real
    let open = LatticeSpec::chain(n, Boundary::Open);
    let h = build_hamiltonian(&open, &[HatanoRegion::new([0, n - 1], [0, 0], g)], &[])?;
    let vals = eigenvalues(&h)?;
    let im = vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let lowest = vals.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    println!("open chain N={n}: max |Im| = {im:.2e}, lowest E = {lowest:.8} (-2cos(pi/{}) = {:.8})", n + 1, -2.0 * (PI / (n + 1) as f64).cos());

    // region embedded in a Hermitian strip
    let lat = LatticeSpec::new(24, 16);
    let layout = |g| {
        vec![
            HatanoRegion::new([4, 23], [8, 15], g).named("upper"),
            HatanoRegion::new([4, 23], [0, 7], 0.0).named("lower"),
        ]
    };
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
    println!("\n  g      max Im");
    for r in max_imag_vs_g(&lat, layout, &grid)? {
        println!("  {:.1}    {:.6}", r.g, r.max_imag);
    }
    Ok(())
}
