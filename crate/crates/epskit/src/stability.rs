//! Thermal phase drift of the interferometer paths and the degree to which
//! the counter-propagating geometry cancels it.
//!
//! For a stack of birefringent components the optical phase picked up at
//! wavelength λ shifts with a uniform temperature excursion ΔT as
//!   δφ(λ) = Σ_j (2π L_j / λ) (∂n_j/∂T + n_j α_j) ΔT
//! where α_j is the linear expansion coefficient along the propagation
//! direction. Both n and ∂n/∂T are evaluated at the scenario baseline, so the
//! model is the first-order drift about that operating point.
//!
//! The two propagation directions see different stacks (a polarizing
//! displacer places them on different crystal axes), and each wavelength
//! contributes the difference δφ_rel(λ) = δφ_cw(λ) − δφ_ccw(λ). The phase of
//! the generated state drifts by the pump term minus the down-converted
//! terms, while a geometry without common-path cancellation would accumulate
//! their sum; both figures are reported.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::materials::{Axis, MaterialsDb};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackComponent {
    pub material: String,
    pub length_mm: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalScenario {
    pub baseline_c: f64,
    pub excursion_k: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PathPhases {
    pub lambda_nm: f64,
    pub cw_rad: f64,
    pub ccw_rad: f64,
    pub relative_rad: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Pump, signal, idler in that order.
    pub per_wavelength: [PathPhases; 3],
    /// Drift of the generated state's phase: pump minus signal minus idler.
    pub delta_phi_r_rad: f64,
    /// Drift the same stacks would impose without common-path cancellation:
    /// the plain sum of the three relative terms.
    pub delta_phi_uncompensated_rad: f64,
}

/// Phase drift for one propagation direction through a component stack.
pub fn path_phase_variation(
    db: &MaterialsDb,
    stack: &[StackComponent],
    lambda_nm: f64,
    scenario: &ThermalScenario,
) -> Result<f64> {
    if stack.is_empty() {
        return Err(Error::config(
            "thermal stack must contain at least one component",
        ));
    }
    let lambda_um = lambda_nm * 1e-3;
    let mut total = 0.0;
    for part in stack {
        if !(part.length_mm > 0.0) {
            return Err(Error::NonphysicalInput {
                message: format!(
                    "component length {} mm in material '{}' must be positive",
                    part.length_mm, part.material
                ),
            });
        }
        let material = db.material(&part.material)?;
        let n = material.refractive_index(part.axis, lambda_nm, scenario.baseline_c)?;
        let dndt = material.thermo_optic_coefficient(part.axis, lambda_nm, scenario.baseline_c)?;
        let alpha = material.axis_record(part.axis)?.alpha_per_k;
        let length_um = part.length_mm * 1e3;
        total += (2.0 * std::f64::consts::PI * length_um / lambda_um)
            * (dndt + n * alpha)
            * scenario.excursion_k;
    }
    Ok(total)
}

/// Combine per-wavelength relative drifts into the state-phase drift and the
/// uncompensated figure. Inputs and outputs are in radians.
pub fn relative_phase_from_deltas(pump_rad: f64, signal_rad: f64, idler_rad: f64) -> (f64, f64) {
    (
        pump_rad - signal_rad - idler_rad,
        pump_rad + signal_rad + idler_rad,
    )
}

/// Full three-wavelength drift budget for a pair of direction stacks.
pub fn relative_phase_variation(
    db: &MaterialsDb,
    stack_cw: &[StackComponent],
    stack_ccw: &[StackComponent],
    lambda_p_nm: f64,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    scenario: &ThermalScenario,
) -> Result<StabilityReport> {
    let mut per_wavelength = [PathPhases {
        lambda_nm: 0.0,
        cw_rad: 0.0,
        ccw_rad: 0.0,
        relative_rad: 0.0,
    }; 3];
    for (slot, lambda_nm) in [lambda_p_nm, lambda_s_nm, lambda_i_nm]
        .into_iter()
        .enumerate()
    {
        let cw = path_phase_variation(db, stack_cw, lambda_nm, scenario)?;
        let ccw = path_phase_variation(db, stack_ccw, lambda_nm, scenario)?;
        per_wavelength[slot] = PathPhases {
            lambda_nm,
            cw_rad: cw,
            ccw_rad: ccw,
            relative_rad: cw - ccw,
        };
    }
    let (delta_phi_r_rad, delta_phi_uncompensated_rad) = relative_phase_from_deltas(
        per_wavelength[0].relative_rad,
        per_wavelength[1].relative_rad,
        per_wavelength[2].relative_rad,
    );
    Ok(StabilityReport {
        per_wavelength,
        delta_phi_r_rad,
        delta_phi_uncompensated_rad,
    })
}
