//! Building a run from a TOML string, writing artifacts and an operator dump.
//!
//! cargo run --release --example custom_config [OUT_DIR]

use nhcollapse::harness::{run::hamiltonian_for, run_simulation, RunConfig};

const CONFIG: &str = r#"
schema_version = 1
name = "ring_strip"

[lattice]
nx = 40
ny = 20
boundary_x = "periodic"

[packets]
weight_up = 0.5

[packets.up]
r0 = [6.0, 14.5]
k0 = [0.785398, 0.0]
sigma_r = 2.5

[packets.down]
r0 = [6.0, 4.5]
k0 = [-0.785398, 0.0]
sigma_r = 2.5

[[regions]]
name = "upper"
x = [10, 29]
y = [10, 19]
g = 0.4

[[gains]]
center = [20.0, 4.5]
width = 3.0
z = [0.0, 0.5]
profile = "exponential"

[evolution]
t_max = 8.0
record_every = 20

[sampling]
snapshot_times = [4.0, 8.0]
"#;

fn main() -> nhcollapse::Result<()> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    let dir = std::env::args().nth(1).unwrap_or_else(|| "out/ring_strip".into());
    let out = run_simulation(&cfg, dir.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&out.report)?);

    let h = hamiltonian_for(&cfg)?;
    let path = std::path::Path::new(&dir).join("operator.txt");
    h.write_triplets(std::fs::File::create(&path)?)?;
    println!("{} nonzeros per spin block, hermiticity defect {:.4}", h.spatial().nnz(), h.hermiticity_defect());
    println!("artifacts in {dir}");
    Ok(())
}
