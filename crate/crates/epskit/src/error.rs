//! Toolkit-wide error type with an exit-code category per failure class.

use thiserror::Error;

/// Failure classes, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Malformed or inconsistent configuration / input schema (exit 2).
    Config,
    /// Domain, solver, or estimator failure on valid configuration (exit 3).
    Domain,
    /// Filesystem / I/O failure (exit 4).
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{material} ({axis}): {lambda_nm} nm is outside the validity interval [{min_um}, {max_um}] um")]
    OutOfValidity {
        material: String,
        axis: &'static str,
        lambda_nm: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("{material} ({axis}): {lambda_nm} nm is closer than {margin_um} um to a validity boundary; derivative quantities need an interior neighborhood")]
    BoundaryMargin {
        material: String,
        axis: &'static str,
        lambda_nm: f64,
        margin_um: f64,
    },

    #[error("{material} ({axis}): no thermo-optic model available")]
    NoThermalModel {
        material: String,
        axis: &'static str,
    },

    #[error("unknown material '{name}'")]
    UnknownMaterial { name: String },

    #[error("material '{material}': missing {axis} axis record")]
    MissingAxis {
        material: String,
        axis: &'static str,
    },

    #[error("materials database: {message}")]
    MaterialsData { message: String },

    #[error("nonphysical input: {message}")]
    NonphysicalInput { message: String },

    #[error("not phase-matched at {temperature_c} C: scanned mismatch stays within [{scanned_min_per_m:.6e}, {scanned_max_per_m:.6e}] 1/m without a sign change")]
    NotPhaseMatched {
        temperature_c: f64,
        scanned_min_per_m: f64,
        scanned_max_per_m: f64,
    },

    #[error("group-velocity matched at lambda_s = {lambda_s_nm} nm / lambda_i = {lambda_i_nm} nm: the linearized width formula is invalid")]
    GroupVelocityMatched { lambda_s_nm: f64, lambda_i_nm: f64 },

    #[error("total internal reflection in {material} ({axis}): n = {n:.6} at {incidence_deg} deg exceeds the critical angle {critical_deg:.4} deg")]
    TotalInternalReflection {
        material: String,
        axis: &'static str,
        n: f64,
        incidence_deg: f64,
        critical_deg: f64,
    },

    #[error("cannot compensate: exit angles are degenerate (theta_o = {theta_o_deg:.6} deg, theta_e = {theta_e_deg:.6} deg), no birefringent steering")]
    CannotCompensate { theta_o_deg: f64, theta_e_deg: f64 },

    #[error("uncompensatable delay: residual is {residual_at_zero_fs:.3} fs at zero thickness and {residual_at_max_fs:.3} fs at {max_thickness_mm} mm with no sign change")]
    Uncompensatable {
        residual_at_zero_fs: f64,
        residual_at_max_fs: f64,
        max_thickness_mm: f64,
    },

    #[error("undefined estimate: {what}")]
    UndefinedEstimate { what: String },

    #[error("no records")]
    NoRecords,

    #[error("invalid records: {message}")]
    InvalidRecords { message: String },

    #[error("geometry: {message}")]
    Geometry { message: String },

    #[error("config: {message}")]
    Config { message: String },

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config { .. } | Error::MaterialsData { .. } => Category::Config,
            Error::Io { .. } => Category::Io,
            _ => Category::Domain,
        }
    }

    /// Process exit code for the CLI: 0 success, 2 config, 3 domain/solver, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            Category::Config => 2,
            Category::Domain => 3,
            Category::Io => 4,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
