//! Run configuration: one TOML file with a section per module, strict about
//! unknown keys, plus dotted-path overrides from the command line.

use serde::Deserialize;

use crate::entanglement::{BellStateModel, DetectionModel};
use crate::error::{Error, Result};
use crate::phasematch::{CrystalSpec, PumpSpec, SolverKnobs};
use crate::stability::StackComponent;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every stochastic command; `--seed` overrides.
    #[serde(default)]
    pub seed: u64,
    /// Artifact directory; `--out` overrides.
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Optional replacement for the built-in material table.
    #[serde(default)]
    pub materials_path: Option<String>,
    pub pump: PumpSpec,
    pub crystal: CrystalSpec,
    #[serde(default)]
    pub solver: SolverKnobs,
    pub displacer: DisplacerSection,
    pub wedges: WedgeSection,
    pub beams: BeamsSection,
    pub detection: DetectionSection,
    pub state: BellStateModel,
    pub stability: StabilitySection,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub analyze: Option<AnalyzeSection>,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacerSection {
    pub material: String,
    pub length_mm: f64,
    #[serde(default = "default_optic_angle_deg")]
    pub optic_angle_deg: f64,
    #[serde(default = "default_room_temperature_c")]
    pub temperature_c: f64,
}

fn default_optic_angle_deg() -> f64 {
    45.0
}

fn default_room_temperature_c() -> f64 {
    20.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeSection {
    pub material: String,
    pub wedge_angle_deg: f64,
    #[serde(default = "default_room_temperature_c")]
    pub temperature_c: f64,
    #[serde(default)]
    pub aperture_mm: Option<f64>,
    pub signal: ArmCompensation,
    pub idler: ArmCompensation,
}

/// Measured walk-off and delay one arm's wedge pair must undo.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmCompensation {
    pub measured_walkoff_mm: f64,
    pub initial_delay_ps: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsSection {
    pub signal_fwhm_mm: f64,
    pub idler_fwhm_mm: f64,
    /// Coupling factors quoted for the assembled source, if known; the
    /// design report inverts them into implied mode widths.
    #[serde(default)]
    pub target_overlap_s: Option<f64>,
    #[serde(default)]
    pub target_overlap_i: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub eta_s: f64,
    pub eta_i: f64,
    #[serde(default)]
    pub dark_s_hz: f64,
    #[serde(default)]
    pub dark_i_hz: f64,
    pub coincidence_window_ns: f64,
    pub pair_rate_per_mw_hz: f64,
    /// Component-budget efficiencies, used only to report the unaccounted
    /// loss factor next to the effective values above.
    #[serde(default)]
    pub budget_eta_s: Option<f64>,
    #[serde(default)]
    pub budget_eta_i: Option<f64>,
}

impl DetectionSection {
    pub fn model(&self) -> DetectionModel {
        DetectionModel {
            eta_s: self.eta_s,
            eta_i: self.eta_i,
            dark_s_hz: self.dark_s_hz,
            dark_i_hz: self.dark_i_hz,
            coincidence_window_ns: self.coincidence_window_ns,
            pair_rate_per_mw_hz: self.pair_rate_per_mw_hz,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub baseline_c: f64,
    pub excursion_k: f64,
    pub cw: Vec<StackComponent>,
    pub ccw: Vec<StackComponent>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub duration_s: f64,
    pub bg_subtracted: bool,
    pub scan_step_deg: f64,
    pub powers_mw: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub arm: Arm,
    pub separations_mm: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub records_csv: String,
}

/// Parse a configuration document, apply `key.path=value` overrides, and
/// validate field ranges.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut value: toml::Value = toml::from_str(text)
        .map_err(|e| Error::config(format!("configuration is not well-formed TOML: {e}")))?;
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    let config: RunConfig = value
        .try_into()
        .map_err(|e| Error::config(format!("invalid configuration: {e}")))?;
    config.validate()?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        Error::config(format!(
            "override '{spec}' is not of the form key.path=value"
        ))
    })?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::config(format!(
            "override '{spec}' has an empty path segment"
        )));
    }
    // parse the value as TOML; anything that does not parse is a string
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    for segment in &segments[..segments.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::config(format!("override '{spec}': '{segment}' is not a table"))
        })?;
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let last = segments[segments.len() - 1];
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::config(format!("override '{spec}': parent is not a table")))?;
    table.insert(last.to_string(), parsed);
    Ok(())
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        let positive = |label: &str, v: f64| -> Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{label} must be positive, got {v}")));
            }
            Ok(())
        };
        let non_negative = |label: &str, v: f64| -> Result<()> {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "{label} must be non-negative, got {v}"
                )));
            }
            Ok(())
        };
        positive("pump.lambda_nm", self.pump.lambda_nm)?;
        non_negative("pump.bandwidth_nm", self.pump.bandwidth_nm)?;
        non_negative("pump.power_mw", self.pump.power_mw)?;
        positive("crystal.length_mm", self.crystal.length_mm)?;
        positive("crystal.poling_period_um", self.crystal.poling_period_um)?;
        positive("displacer.length_mm", self.displacer.length_mm)?;
        if !(0.0..=90.0).contains(&self.displacer.optic_angle_deg) {
            return Err(Error::config(format!(
                "displacer.optic_angle_deg must lie in [0, 90], got {}",
                self.displacer.optic_angle_deg
            )));
        }
        if !(0.0 < self.wedges.wedge_angle_deg && self.wedges.wedge_angle_deg < 90.0) {
            return Err(Error::config(format!(
                "wedges.wedge_angle_deg must lie in (0, 90), got {}",
                self.wedges.wedge_angle_deg
            )));
        }
        for (label, arm) in [
            ("signal", &self.wedges.signal),
            ("idler", &self.wedges.idler),
        ] {
            non_negative(
                &format!("wedges.{label}.measured_walkoff_mm"),
                arm.measured_walkoff_mm,
            )?;
        }
        positive("beams.signal_fwhm_mm", self.beams.signal_fwhm_mm)?;
        positive("beams.idler_fwhm_mm", self.beams.idler_fwhm_mm)?;
        for (label, t) in [
            ("beams.target_overlap_s", self.beams.target_overlap_s),
            ("beams.target_overlap_i", self.beams.target_overlap_i),
        ] {
            if let Some(t) = t {
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::config(format!(
                        "{label} must lie strictly between 0 and 1, got {t}"
                    )));
                }
            }
        }
        self.detection
            .model()
            .validate()
            .map_err(|e| Error::config(format!("detection: {e}")))?;
        for (label, b) in [
            ("detection.budget_eta_s", self.detection.budget_eta_s),
            ("detection.budget_eta_i", self.detection.budget_eta_i),
        ] {
            if let Some(b) = b {
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::config(format!(
                        "{label} must lie in [0, 1], got {b}"
                    )));
                }
            }
        }
        self.state
            .validate()
            .map_err(|e| Error::config(format!("state: {e}")))?;
        if self.stability.cw.is_empty() || self.stability.ccw.is_empty() {
            return Err(Error::config(
                "stability.cw and stability.ccw must each list at least one component",
            ));
        }
        if let Some(sim) = &self.simulation {
            non_negative("simulation.duration_s", sim.duration_s)?;
            if !(sim.scan_step_deg > 0.0 && sim.scan_step_deg <= 90.0) {
                return Err(Error::config(format!(
                    "simulation.scan_step_deg must lie in (0, 90], got {}",
                    sim.scan_step_deg
                )));
            }
            if sim.powers_mw.is_empty() {
                return Err(Error::config("simulation.powers_mw must not be empty"));
            }
            for &p in &sim.powers_mw {
                non_negative("simulation.powers_mw entry", p)?;
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.separations_mm.is_empty() {
                return Err(Error::config("sweep.separations_mm must not be empty"));
            }
            for &d in &sweep.separations_mm {
                non_negative("sweep.separations_mm entry", d)?;
            }
        }
        Ok(())
    }
}
