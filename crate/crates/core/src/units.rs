//! Unit conversion between simulation units (`ħ = γ₀ = 1`) and femtoseconds.

/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;

/// Converts a time in units of `ħ/γ₀` to femtoseconds, given `γ₀` in eV.
pub fn sim_time_to_fs(t: f64, gamma0_ev: f64) -> f64 {
    t * HBAR_EV_FS / gamma0_ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_unit_at_one_ev() {
        assert!((sim_time_to_fs(1.0, 1.0) - 0.6582119569).abs() < 1e-15);
        assert!((sim_time_to_fs(1.0, 2.0) - 0.32910597845).abs() < 1e-15);
    }
}
