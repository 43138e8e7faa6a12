//! Type-0 quasi-phase-matched signal/idler solver and spectral/temporal
//! widths.
//!
//! All three waves are extraordinary-polarized. The phase mismatch is
//! Δk(λs) = k_p − k_s − k_i − 2π/Λ(T) with k = 2π n_e(λ, T)/λ and the poling
//! period Λ(T) rescaled by the crystal's thermal expansion from its
//! room-temperature value.
//!
//! Width convention: the pump is held at line center and Δk is linearized in
//! the signal angular-frequency detuning, so signal and idler share
//! Δω = 2π / (L·|1/v_gs − 1/v_gi|), the detuning at which |Δk·L| reaches 2π.
//! The temporal width is its conjugate τ = 2π/Δω = L·|1/v_gs − 1/v_gi|, the
//! signal–idler group-delay spread across the crystal. The configured pump
//! bandwidth does not enter: for the 0.1 nm-class pump lines this toolkit
//! targets, that contribution is negligible against the design tolerances.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::materials::{Axis, MaterialsDb};
use crate::solver;
use crate::units::{C_UM_PER_PS, TWO_PI};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub lambda_nm: f64,
    pub bandwidth_nm: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSpec {
    pub material: String,
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub temperature_c: f64,
}

/// Root-finder knobs; defaults are fine for every shipped configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverKnobs {
    /// Bracketing-scan resolution over the signal wavelength (nm).
    pub scan_step_nm: f64,
    /// The scan extends to 2·λp·guard, slightly past degeneracy.
    pub bracket_guard: f64,
    /// Fixed bisection iteration count (determinism over cleverness).
    pub bisect_iters: usize,
}

impl Default for SolverKnobs {
    fn default() -> Self {
        SolverKnobs {
            scan_step_nm: 0.1,
            bracket_guard: 1.10,
            bisect_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseMatchSolution {
    pub lambda_s_nm: f64,
    pub lambda_i_nm: f64,
    /// Phase mismatch at the returned signal wavelength (1/m).
    pub residual_per_m: f64,
    pub delta_omega_s_rad_per_s: f64,
    pub delta_omega_i_rad_per_s: f64,
    pub tau_s_ps: f64,
    pub tau_i_ps: f64,
}

/// Idler wavelength from energy conservation 1/λs + 1/λi = 1/λp.
pub fn idler_wavelength_nm(lambda_p_nm: f64, lambda_s_nm: f64) -> f64 {
    1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_s_nm)
}

/// Poling period at temperature T (um), thermally expanded from the
/// room-temperature (20 C) value with the crystal's expansion coefficient.
pub fn poling_period_at_um(db: &MaterialsDb, crystal: &CrystalSpec) -> Result<f64> {
    let material = db.material(&crystal.material)?;
    let alpha = material.expansion_alpha(Axis::Extraordinary)?;
    Ok(crystal.poling_period_um * (1.0 + alpha * (crystal.temperature_c - 20.0)))
}

/// Phase mismatch k_p − k_s − k_i − 2π/Λ(T) in 1/m at the given signal
/// wavelength. The idler follows from energy conservation; either wave
/// falling outside the dispersion model's validity is a domain error.
pub fn qpm_mismatch(
    db: &MaterialsDb,
    lambda_s_nm: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<f64> {
    if lambda_s_nm <= pump.lambda_nm {
        return Err(Error::NonphysicalInput {
            message: format!(
                "signal wavelength {lambda_s_nm} nm must exceed the pump wavelength {} nm",
                pump.lambda_nm
            ),
        });
    }
    let material = db.material(&crystal.material)?;
    let t = crystal.temperature_c;
    let lambda_i_nm = idler_wavelength_nm(pump.lambda_nm, lambda_s_nm);
    let k = |lambda_nm: f64| -> Result<f64> {
        let n = material.refractive_index(Axis::Extraordinary, lambda_nm, t)?;
        Ok(TWO_PI * n / (lambda_nm * 1e-3)) // 1/um
    };
    let kp = k(pump.lambda_nm)?;
    let ks = k(lambda_s_nm)?;
    let ki = k(lambda_i_nm)?;
    let grating = TWO_PI / poling_period_at_um(db, crystal)?;
    Ok((kp - ks - ki - grating) * 1e6)
}

/// Find the phase-matched signal/idler pair at the crystal's temperature.
/// Scans the signal wavelength from the pump to slightly past degeneracy for
/// a sign change of the mismatch, then bisects. The shorter wavelength of
/// the pair is reported as the signal.
pub fn solve_signal_idler(
    db: &MaterialsDb,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    knobs: &SolverKnobs,
) -> Result<PhaseMatchSolution> {
    let lo = pump.lambda_nm + knobs.scan_step_nm;
    let hi = 2.0 * pump.lambda_nm * knobs.bracket_guard;
    let scan = solver::scan_bracket(lo, hi, knobs.scan_step_nm, |l| {
        qpm_mismatch(db, l, pump, crystal).ok()
    });
    let Some((a, b)) = scan.bracket else {
        return Err(Error::NotPhaseMatched {
            temperature_c: crystal.temperature_c,
            scanned_min_per_m: scan.min_value,
            scanned_max_per_m: scan.max_value,
        });
    };
    let root = solver::bisect(a, b, knobs.bisect_iters, |l| {
        qpm_mismatch(db, l, pump, crystal).expect("bracketed interval stays in-domain")
    });
    let residual = qpm_mismatch(db, root, pump, crystal)?;
    let conjugate = idler_wavelength_nm(pump.lambda_nm, root);
    let (lambda_s_nm, lambda_i_nm) = if root <= conjugate {
        (root, conjugate)
    } else {
        (conjugate, root)
    };
    let (dws, dwi, tau_s, tau_i) = spectral_temporal_widths(db, lambda_s_nm, lambda_i_nm, crystal)?;
    Ok(PhaseMatchSolution {
        lambda_s_nm,
        lambda_i_nm,
        residual_per_m: residual,
        delta_omega_s_rad_per_s: dws,
        delta_omega_i_rad_per_s: dwi,
        tau_s_ps: tau_s,
        tau_i_ps: tau_i,
    })
}

/// Spectral widths (rad/s) and 1/e temporal widths (ps) of the signal and
/// idler for a phase-matched pair. See the module docs for the convention.
pub fn spectral_temporal_widths(
    db: &MaterialsDb,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    crystal: &CrystalSpec,
) -> Result<(f64, f64, f64, f64)> {
    let material = db.material(&crystal.material)?;
    let t = crystal.temperature_c;
    let ng_s = material.group_index(Axis::Extraordinary, lambda_s_nm, t)?;
    let ng_i = material.group_index(Axis::Extraordinary, lambda_i_nm, t)?;
    let inv_vg_mismatch = (ng_s - ng_i).abs() / C_UM_PER_PS; // ps/um
    let length_um = crystal.length_mm * 1e3;
    if length_um * inv_vg_mismatch < 1e-12 {
        return Err(Error::GroupVelocityMatched {
            lambda_s_nm,
            lambda_i_nm,
        });
    }
    let tau_ps = length_um * inv_vg_mismatch;
    let delta_omega_rad_per_ps = TWO_PI / tau_ps;
    let dw = delta_omega_rad_per_ps * 1e12;
    Ok((dw, dw, tau_ps, tau_ps))
}
