//! Birefringent beam displacer model: e-ray walk-off angle at normal
//! incidence, lateral displacement, and the spatial/temporal walk-offs a
//! second identical displacer inflicts on a down-converted field relative to
//! the pump-defined path.
//!
//! Conventions:
//! - Normal incidence only; the optic axis lies in the walk-off plane at
//!   `optic_angle_deg` from the surface normal. Tilted displacers are out of
//!   scope.
//! - The walk-off angle is the refraction angle of the e-ray's energy flow;
//!   it is negative for negative uniaxial crystals (n_e < n_o) at optic
//!   angles below 90 degrees.
//! - Spatial walk-off compares deflection magnitudes, so a positive value
//!   means the pump-defined path was displaced (and hence restored) further
//!   than the down-converted field: the field is under-restored.
//! - The e-ray group velocity uses the group index of the direction-dependent
//!   extraordinary index n_e(theta) from the uniaxial index ellipse, and
//!   deflected segments carry a 1/cos(walk-off angle) path factor. The
//!   ray-trace oracle in the test suite shares this convention.

use serde::Deserialize;

use crate::error::Result;
use crate::materials::{Axis, Material, MaterialsDb};
use crate::units::C_MM_PER_PS;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacerSpec {
    pub material: String,
    pub length_mm: f64,
    /// Optic-axis angle from the surface normal, degrees. Defaults to the
    /// commercial displacement-maximizing cut.
    #[serde(default = "default_optic_angle")]
    pub optic_angle_deg: f64,
}

fn default_optic_angle() -> f64 {
    45.0
}

/// tan of the e-ray walk-off angle for optic-axis angle theta:
/// (1 - r) tan(theta) / (1 + r tan^2(theta)) with r = (n_o/n_e)^2, written in
/// the sin/cos form that stays finite at theta = 90 degrees.
pub fn walkoff_tangent(n_o: f64, n_e: f64, theta_deg: f64) -> f64 {
    debug_assert!(n_o > 1.0 && n_e > 1.0);
    let th = theta_deg.to_radians();
    let r = (n_o / n_e) * (n_o / n_e);
    let (s, c) = th.sin_cos();
    (1.0 - r) * s * c / (c * c + r * s * s)
}

/// e-ray walk-off angle in degrees; zero at theta in {0, 90} and for
/// isotropic indices, negative for negative uniaxial crystals in between.
pub fn walkoff_angle_deg(n_o: f64, n_e: f64, theta_deg: f64) -> f64 {
    walkoff_tangent(n_o, n_e, theta_deg).atan().to_degrees()
}

/// Extraordinary-wave phase index for propagation at `theta_deg` to the
/// optic axis: 1/n^2 = cos^2/n_o^2 + sin^2/n_e^2.
pub fn effective_extraordinary_index(
    material: &Material,
    lambda_nm: f64,
    t_c: f64,
    theta_deg: f64,
) -> Result<f64> {
    let n_o = material.refractive_index(Axis::Ordinary, lambda_nm, t_c)?;
    let n_e = material.refractive_index(Axis::Extraordinary, lambda_nm, t_c)?;
    let th = theta_deg.to_radians();
    let (s, c) = th.sin_cos();
    Ok(1.0 / ((c / n_o) * (c / n_o) + (s / n_e) * (s / n_e)).sqrt())
}

/// Group index of the effective extraordinary wave at fixed optic angle:
/// n_g = n(theta) - lambda dn(theta)/dlambda with
/// dn/dlambda = n^3 [cos^2 n_o'/n_o^3 + sin^2 n_e'/n_e^3].
pub fn effective_extraordinary_group_index(
    material: &Material,
    lambda_nm: f64,
    t_c: f64,
    theta_deg: f64,
) -> Result<f64> {
    let n_o = material.refractive_index(Axis::Ordinary, lambda_nm, t_c)?;
    let n_e = material.refractive_index(Axis::Extraordinary, lambda_nm, t_c)?;
    let dno = material.dn_dlambda_per_um(Axis::Ordinary, lambda_nm, t_c)?;
    let dne = material.dn_dlambda_per_um(Axis::Extraordinary, lambda_nm, t_c)?;
    let th = theta_deg.to_radians();
    let (s, c) = th.sin_cos();
    let n = 1.0 / ((c / n_o) * (c / n_o) + (s / n_e) * (s / n_e)).sqrt();
    let dn = n * n * n * (c * c * dno / (n_o * n_o * n_o) + s * s * dne / (n_e * n_e * n_e));
    Ok(n - (lambda_nm * 1e-3) * dn)
}

fn walkoff_tangent_at(spec: &DisplacerSpec, m: &Material, lambda_nm: f64, t_c: f64) -> Result<f64> {
    let n_o = m.refractive_index(Axis::Ordinary, lambda_nm, t_c)?;
    let n_e = m.refractive_index(Axis::Extraordinary, lambda_nm, t_c)?;
    Ok(walkoff_tangent(n_o, n_e, spec.optic_angle_deg))
}

/// Signed lateral displacement L tan(walk-off angle) of the e-ray, mm.
pub fn lateral_displacement_mm(
    db: &MaterialsDb,
    spec: &DisplacerSpec,
    lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    let m = db.material(&spec.material)?;
    Ok(spec.length_mm * walkoff_tangent_at(spec, m, lambda_nm, t_c)?)
}

/// Residual lateral offset (mm) of a field at `lambda_nm` after a pair of
/// identical displacers laid out to recombine the pump-wavelength path:
/// L (|tan theta_e(pump)| - |tan theta_e(lambda)|). Positive means the field
/// is under-restored.
pub fn spatial_walkoff_mm(
    db: &MaterialsDb,
    spec: &DisplacerSpec,
    lambda_p_nm: f64,
    lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    let m = db.material(&spec.material)?;
    let tp = walkoff_tangent_at(spec, m, lambda_p_nm, t_c)?;
    let tl = walkoff_tangent_at(spec, m, lambda_nm, t_c)?;
    Ok(spec.length_mm * (tp.abs() - tl.abs()))
}

/// Group delay (ps) of the interferometer path whose straight (ordinary) leg
/// is traversed at `straight_lambda_nm` and whose deflected (extraordinary)
/// leg is traversed at `deflected_lambda_nm`.
pub fn two_leg_group_delay_ps(
    db: &MaterialsDb,
    spec: &DisplacerSpec,
    straight_lambda_nm: f64,
    deflected_lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    let m = db.material(&spec.material)?;
    let ng_o = m.group_index(Axis::Ordinary, straight_lambda_nm, t_c)?;
    let ng_e =
        effective_extraordinary_group_index(m, deflected_lambda_nm, t_c, spec.optic_angle_deg)?;
    let tan_w = walkoff_tangent_at(spec, m, deflected_lambda_nm, t_c)?;
    let cos_w = tan_w.atan().cos();
    Ok(spec.length_mm * (ng_o + ng_e / cos_w) / C_MM_PER_PS)
}

/// Temporal walk-off (ps) between the two pair paths: pump straight then
/// field deflected, minus pump deflected then field straight. Zero at the
/// pump wavelength; swapping which wavelength is deflected first flips the
/// sign.
pub fn temporal_walkoff_ps(
    db: &MaterialsDb,
    spec: &DisplacerSpec,
    lambda_p_nm: f64,
    lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    let t_oe = two_leg_group_delay_ps(db, spec, lambda_p_nm, lambda_nm, t_c)?;
    let t_eo = two_leg_group_delay_ps(db, spec, lambda_nm, lambda_p_nm, t_c)?;
    Ok(t_oe - t_eo)
}

#[derive(Debug, Clone)]
pub struct WalkoffEntry {
    pub lambda_nm: f64,
    pub delta_d_mm: f64,
    pub delta_t_ps: f64,
}

#[derive(Debug, Clone)]
pub struct WalkoffReport {
    pub pump_lambda_nm: f64,
    pub pump_displacement_mm: f64,
    pub entries: Vec<WalkoffEntry>,
}

pub fn walkoff_report(
    db: &MaterialsDb,
    spec: &DisplacerSpec,
    lambda_p_nm: f64,
    lambdas_nm: &[f64],
    t_c: f64,
) -> Result<WalkoffReport> {
    let mut entries = Vec::with_capacity(lambdas_nm.len());
    for &l in lambdas_nm {
        entries.push(WalkoffEntry {
            lambda_nm: l,
            delta_d_mm: spatial_walkoff_mm(db, spec, lambda_p_nm, l, t_c)?,
            delta_t_ps: temporal_walkoff_ps(db, spec, lambda_p_nm, l, t_c)?,
        });
    }
    Ok(WalkoffReport {
        pump_lambda_nm: lambda_p_nm,
        pump_displacement_mm: lateral_displacement_mm(db, spec, lambda_p_nm, t_c)?,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup() -> (MaterialsDb, DisplacerSpec) {
        let db = MaterialsDb::builtin();
        let spec = DisplacerSpec {
            material: "abbo".into(),
            length_mm: 39.4,
            optic_angle_deg: 45.0,
        };
        (db, spec)
    }

    #[test]
    fn walkoff_angle_limits_and_sign() {
        assert_eq!(walkoff_angle_deg(1.6, 1.6, 37.0), 0.0);
        assert_eq!(walkoff_angle_deg(1.66, 1.49, 0.0), 0.0);
        assert_abs_diff_eq!(walkoff_angle_deg(1.66, 1.49, 90.0), 0.0, epsilon = 1e-12);
        // negative uniaxial deflects toward negative angles between the limits
        assert!(walkoff_angle_deg(1.66, 1.49, 45.0) < 0.0);
        // positive uniaxial flips the sign
        assert!(walkoff_angle_deg(1.49, 1.66, 45.0) > 0.0);
    }

    #[test]
    fn walkoff_angle_matches_direct_formula() {
        let (db, _) = setup();
        let m = db.material("abbo").unwrap();
        let n_o = m.refractive_index(Axis::Ordinary, 523.6, 20.0).unwrap();
        let n_e = m
            .refractive_index(Axis::Extraordinary, 523.6, 20.0)
            .unwrap();
        let got = walkoff_angle_deg(n_o, n_e, 45.0);
        // independent evaluation in the tan form
        let r = (n_o / n_e) * (n_o / n_e);
        let t = 45.0_f64.to_radians().tan();
        let expect = ((1.0 - r) * t / (1.0 + r * t * t)).atan().to_degrees();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(got, -4.2307748, epsilon = 1e-6);
    }

    #[test]
    fn walkoff_magnitude_peaks_near_45_and_vanishes_at_limits() {
        let (db, _) = setup();
        let m = db.material("abbo").unwrap();
        let n_o = m.refractive_index(Axis::Ordinary, 523.6, 20.0).unwrap();
        let n_e = m
            .refractive_index(Axis::Extraordinary, 523.6, 20.0)
            .unwrap();
        let mut best = (0u32, 0.0f64);
        for deg in 0..=90u32 {
            let a = walkoff_angle_deg(n_o, n_e, deg as f64).abs();
            if a > best.1 {
                best = (deg, a);
            }
        }
        assert!((43..=47).contains(&best.0), "peak at {} deg", best.0);
        assert_abs_diff_eq!(walkoff_angle_deg(n_o, n_e, 0.0), 0.0);
        assert_abs_diff_eq!(walkoff_angle_deg(n_o, n_e, 90.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pump_displacement_and_walkoff_quartet() {
        let (db, spec) = setup();
        let d = lateral_displacement_mm(&db, &spec, 523.6, 20.0).unwrap();
        assert_abs_diff_eq!(d.abs(), 2.9146327, epsilon = 1e-6);
        let dd_s = spatial_walkoff_mm(&db, &spec, 523.6, 790.8, 20.0).unwrap();
        let dd_i = spatial_walkoff_mm(&db, &spec, 523.6, 1549.6365, 20.0).unwrap();
        assert_abs_diff_eq!(dd_s, 0.0910522, epsilon = 1e-6);
        assert_abs_diff_eq!(dd_i, 0.2614597, epsilon = 1e-6);
        let dt_s = temporal_walkoff_ps(&db, &spec, 523.6, 790.8, 20.0).unwrap();
        let dt_i = temporal_walkoff_ps(&db, &spec, 523.6, 1549.6365, 20.0).unwrap();
        assert_abs_diff_eq!(dt_s, 0.6909557, epsilon = 1e-3);
        assert_abs_diff_eq!(dt_i, 0.5716336, epsilon = 1e-3);
    }

    #[test]
    fn zero_walkoff_at_pump_wavelength() {
        let (db, spec) = setup();
        assert_eq!(
            spatial_walkoff_mm(&db, &spec, 523.6, 523.6, 20.0).unwrap(),
            0.0
        );
        assert_eq!(
            temporal_walkoff_ps(&db, &spec, 523.6, 523.6, 20.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn temporal_walkoff_is_antisymmetric() {
        let (db, spec) = setup();
        for lam in [600.0, 900.0, 1200.0, 1500.0] {
            let fwd = temporal_walkoff_ps(&db, &spec, 523.6, lam, 20.0).unwrap();
            let rev = temporal_walkoff_ps(&db, &spec, lam, 523.6, 20.0).unwrap();
            assert_eq!(fwd.to_bits(), (-rev).to_bits());
        }
    }

    #[test]
    fn dispersionless_isotropic_material_has_no_temporal_walkoff() {
        let toml = r#"
[[records]]
name = "iso"
axis = "o"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.3
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"

[[records]]
name = "iso"
axis = "e"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.3
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"
"#;
        let db = MaterialsDb::from_toml_str(toml).unwrap();
        let spec = DisplacerSpec {
            material: "iso".into(),
            length_mm: 39.4,
            optic_angle_deg: 45.0,
        };
        assert_eq!(
            temporal_walkoff_ps(&db, &spec, 523.6, 1200.0, 20.0).unwrap(),
            0.0
        );
        assert_eq!(
            spatial_walkoff_mm(&db, &spec, 523.6, 1200.0, 20.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn spatial_walkoff_grows_away_from_pump() {
        let (db, spec) = setup();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let lam = 600.0 + 1000.0 * (k as f64) / 49.0;
            let dd = spatial_walkoff_mm(&db, &spec, 523.6, lam, 20.0).unwrap();
            assert!(dd > prev, "not increasing at {lam} nm");
            prev = dd;
        }
    }

    #[test]
    fn temporal_walkoff_magnitude_grows_up_to_its_turnover() {
        // |dT| rises with distance from the pump until dispersion flattens it
        // out; for this displacer the magnitude peaks near 1.045 um and falls
        // beyond, so the monotone window ends there. The peak location is
        // pinned to catch dispersion-data regressions.
        let (db, spec) = setup();
        let mut prev = -1.0;
        for k in 0..50 {
            let lam = 600.0 + 400.0 * (k as f64) / 49.0;
            let dt = temporal_walkoff_ps(&db, &spec, 523.6, lam, 20.0)
                .unwrap()
                .abs();
            assert!(dt > prev, "not increasing at {lam} nm");
            prev = dt;
        }
        let mut peak = (0.0, -1.0);
        let mut lam = 600.0;
        while lam <= 1600.0 {
            let dt = temporal_walkoffs_abs(&db, &spec, lam);
            if dt > peak.1 {
                peak = (lam, dt);
            }
            lam += 5.0;
        }
        assert_abs_diff_eq!(peak.0, 1045.0, epsilon = 15.0);
    }

    fn temporal_walkoffs_abs(db: &MaterialsDb, spec: &DisplacerSpec, lam: f64) -> f64 {
        temporal_walkoff_ps(db, spec, 523.6, lam, 20.0)
            .unwrap()
            .abs()
    }
}
