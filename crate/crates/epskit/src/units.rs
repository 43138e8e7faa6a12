//! Shared physical constants and unit helpers.

/// Speed of light in micrometres per picosecond (= 299 792 458 m/s).
pub const C_UM_PER_PS: f64 = 299.792458;

/// Speed of light in millimetres per picosecond.
pub const C_MM_PER_PS: f64 = 0.299792458;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn nm_to_um(nm: f64) -> f64 {
    nm * 1e-3
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}
