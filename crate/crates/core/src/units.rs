//! Conversions between device units (`f / 2pi` in MHz or GHz, times in us
//! or ns) and lattice units where `J = 1`.

use std::f64::consts::PI;

/// Angular frequency in rad/us for a frequency quoted as `f / 2pi` in MHz.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

/// Angular frequency in rad/ns for a frequency quoted as `f / 2pi` in GHz.
pub fn ghz_to_rad_per_ns(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz
}

/// `Delta / J` for two frequencies quoted in the same `f / 2pi` units.
pub fn in_units_of_j(value: f64, j: f64) -> f64 {
    value / j
}

/// Dimensionless time `Jt` for a duration in microseconds.
pub fn jt_from_us(t_us: f64, j_mhz: f64) -> f64 {
    t_us * mhz_to_rad_per_us(j_mhz)
}

/// Duration in microseconds for a dimensionless `Jt`.
pub fn us_from_jt(jt: f64, j_mhz: f64) -> f64 {
    jt / mhz_to_rad_per_us(j_mhz)
}

/// `Gamma / J` for a dephasing time `1/Gamma` in microseconds.
pub fn rate_over_j_from_time_us(t_us: f64, j_mhz: f64) -> f64 {
    1.0 / (t_us * mhz_to_rad_per_us(j_mhz))
}
