//! Refractive-index, group-index, thermo-optic, and thermal-expansion models
//! per crystal axis, backed by a TOML database of published dispersion fits.
//!
//! Wavelengths are micrometres internally; every public function takes
//! nanometres. Temperatures are degrees Celsius.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Reference temperature for the linear thermo-optic correction applied to
/// dispersion forms that do not embed temperature themselves.
pub const REFERENCE_T_C: f64 = 20.0;

/// Half-width of the interior neighborhood (um) required around a wavelength
/// before derivative quantities (group index, thermo-optic fallback) are
/// considered trustworthy near a validity boundary.
pub const DERIVATIVE_MARGIN_UM: f64 = 5.0e-4;

/// Temperature step (K) for the finite-difference thermo-optic fallback used
/// by forms that embed temperature in the dispersion fit.
const THERMO_FD_STEP_K: f64 = 5.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub enum Axis {
    #[serde(rename = "o", alias = "ordinary")]
    Ordinary,
    #[serde(rename = "e", alias = "extraordinary")]
    Extraordinary,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Ordinary => "o",
            Axis::Extraordinary => "e",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "o" | "ordinary" => Ok(Axis::Ordinary),
            "e" | "extraordinary" => Ok(Axis::Extraordinary),
            other => Err(Error::MaterialsData {
                message: format!("unknown axis '{other}' (expected 'o' or 'e')"),
            }),
        }
    }
}

/// Dispersion fit forms. All evaluate n^2(lambda_um, T_C); only
/// `ThermalTwoPole` uses the temperature argument itself.
#[derive(Debug, Clone)]
enum Dispersion {
    Constant(f64),
    /// n^2 = A + B / (l^2 - C) - D l^2
    PoleQuad {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// n^2 = 1 + sum_i B_i l^2 / (l^2 - C_i)
    Poles(Vec<(f64, f64)>),
    /// n^2 = a1 + b1 f + (a2 + b2 f)/(l^2 - (a3 + b3 f)^2)
    ///          + (a4 + b4 f)/(l^2 - a5^2) - a6 l^2,  f = (T-24.5)(T+570.82)
    ThermalTwoPole {
        a: [f64; 6],
        b: [f64; 4],
    },
}

impl Dispersion {
    fn embeds_temperature(&self) -> bool {
        matches!(self, Dispersion::ThermalTwoPole { .. })
    }

    fn n_squared(&self, l: f64, t_c: f64) -> f64 {
        match self {
            Dispersion::Constant(n) => n * n,
            Dispersion::PoleQuad { a, b, c, d } => a + b / (l * l - c) - d * l * l,
            Dispersion::Poles(terms) => {
                let l2 = l * l;
                1.0 + terms
                    .iter()
                    .map(|&(bi, ci)| bi * l2 / (l2 - ci))
                    .sum::<f64>()
            }
            Dispersion::ThermalTwoPole { a, b } => {
                let f = (t_c - 24.5) * (t_c + 570.82);
                let l2 = l * l;
                let pole1 = a[2] + b[2] * f;
                a[0] + b[0] * f
                    + (a[1] + b[1] * f) / (l2 - pole1 * pole1)
                    + (a[3] + b[3] * f) / (l2 - a[4] * a[4])
                    - a[5] * l2
            }
        }
    }

    /// d(n^2)/d(lambda), analytic.
    fn dn_squared_dlambda(&self, l: f64, t_c: f64) -> f64 {
        match self {
            Dispersion::Constant(_) => 0.0,
            Dispersion::PoleQuad { b, c, d, .. } => {
                let den = l * l - c;
                -2.0 * b * l / (den * den) - 2.0 * d * l
            }
            Dispersion::Poles(terms) => {
                let l2 = l * l;
                terms
                    .iter()
                    .map(|&(bi, ci)| {
                        let den = l2 - ci;
                        -2.0 * bi * ci * l / (den * den)
                    })
                    .sum()
            }
            Dispersion::ThermalTwoPole { a, b } => {
                let f = (t_c - 24.5) * (t_c + 570.82);
                let l2 = l * l;
                let pole1 = a[2] + b[2] * f;
                let den1 = l2 - pole1 * pole1;
                let den2 = l2 - a[4] * a[4];
                -2.0 * l * (a[1] + b[1] * f) / (den1 * den1)
                    - 2.0 * l * (a[3] + b[3] * f) / (den2 * den2)
                    - 2.0 * a[5] * l
            }
        }
    }
}

/// One (material, axis) record: dispersion fit, validity interval,
/// thermo-optic polynomial, expansion coefficient, provenance.
#[derive(Debug, Clone)]
pub struct AxisRecord {
    dispersion: Dispersion,
    validity_um: (f64, f64),
    /// dn/dT(l, T) = sum_ij poly[i][j] l^i T^j; rows are powers of lambda.
    dndt_poly: Vec<Vec<f64>>,
    pub alpha_per_k: f64,
    pub source: String,
}

impl AxisRecord {
    fn dndt(&self, l: f64, t_c: f64) -> f64 {
        let mut acc = 0.0;
        let mut lp = 1.0;
        for row in &self.dndt_poly {
            let mut tp = 1.0;
            for &c in row {
                acc += c * lp * tp;
                tp *= t_c;
            }
            lp *= l;
        }
        acc
    }

    fn has_dndt_poly(&self) -> bool {
        self.dndt_poly.iter().any(|row| !row.is_empty())
    }
}

#[derive(Debug, Clone)]
pub struct Material {
    pub name: String,
    o: Option<AxisRecord>,
    e: Option<AxisRecord>,
}

impl Material {
    pub fn axis_record(&self, axis: Axis) -> Result<&AxisRecord> {
        let rec = match axis {
            Axis::Ordinary => self.o.as_ref(),
            Axis::Extraordinary => self.e.as_ref(),
        };
        rec.ok_or_else(|| Error::MissingAxis {
            material: self.name.clone(),
            axis: axis.label(),
        })
    }

    pub fn validity_um(&self, axis: Axis) -> Result<(f64, f64)> {
        Ok(self.axis_record(axis)?.validity_um)
    }

    fn checked_record(&self, axis: Axis, lambda_nm: f64, margin_um: f64) -> Result<&AxisRecord> {
        if !(lambda_nm.is_finite() && lambda_nm > 0.0) {
            return Err(Error::NonphysicalInput {
                message: format!("wavelength {lambda_nm} nm must be finite and positive"),
            });
        }
        let rec = self.axis_record(axis)?;
        let l = lambda_nm * 1e-3;
        let (min, max) = rec.validity_um;
        if l < min || l > max {
            return Err(Error::OutOfValidity {
                material: self.name.clone(),
                axis: axis.label(),
                lambda_nm,
                min_um: min,
                max_um: max,
            });
        }
        if margin_um > 0.0 && (l - min < margin_um || max - l < margin_um) {
            return Err(Error::BoundaryMargin {
                material: self.name.clone(),
                axis: axis.label(),
                lambda_nm,
                margin_um,
            });
        }
        Ok(rec)
    }

    fn index_from(&self, rec: &AxisRecord, axis: Axis, lambda_nm: f64, t_c: f64) -> Result<f64> {
        let l = lambda_nm * 1e-3;
        let mut n2 = rec.dispersion.n_squared(l, t_c);
        if n2 < 1.0 {
            return Err(Error::NonphysicalInput {
                message: format!(
                    "{} ({}): n^2 = {n2:.6} < 1 at {lambda_nm} nm, {t_c} C; dispersion data is unusable here",
                    self.name,
                    axis.label()
                ),
            });
        }
        let mut n = n2.sqrt();
        if !rec.dispersion.embeds_temperature() && rec.has_dndt_poly() {
            n += rec.dndt(l, t_c) * (t_c - REFERENCE_T_C);
            n2 = n * n;
        }
        debug_assert!(n2 >= 1.0);
        Ok(n)
    }

    /// Refractive index n(lambda, T).
    pub fn refractive_index(&self, axis: Axis, lambda_nm: f64, t_c: f64) -> Result<f64> {
        let rec = self.checked_record(axis, lambda_nm, 0.0)?;
        self.index_from(rec, axis, lambda_nm, t_c)
    }

    /// dn/dlambda in 1/um, analytic. Requires an interior wavelength.
    pub fn dn_dlambda_per_um(&self, axis: Axis, lambda_nm: f64, t_c: f64) -> Result<f64> {
        let rec = self.checked_record(axis, lambda_nm, DERIVATIVE_MARGIN_UM)?;
        let l = lambda_nm * 1e-3;
        let n2 = rec.dispersion.n_squared(l, t_c);
        if n2 < 1.0 {
            return Err(Error::NonphysicalInput {
                message: format!(
                    "{} ({}): n^2 = {n2:.6} < 1 at {lambda_nm} nm, {t_c} C; dispersion data is unusable here",
                    self.name,
                    axis.label()
                ),
            });
        }
        let mut dn = rec.dispersion.dn_squared_dlambda(l, t_c) / (2.0 * n2.sqrt());
        if !rec.dispersion.embeds_temperature() && rec.has_dndt_poly() {
            // lambda-derivative of the linear thermal correction
            let mut acc = 0.0;
            for (i, row) in rec.dndt_poly.iter().enumerate().skip(1) {
                let mut tp = 1.0;
                for &c in row {
                    acc += c * (i as f64) * l.powi(i as i32 - 1) * tp;
                    tp *= t_c;
                }
            }
            dn += acc * (t_c - REFERENCE_T_C);
        }
        Ok(dn)
    }

    /// Group index n_g = n - lambda dn/dlambda. Group velocity is c / n_g.
    pub fn group_index(&self, axis: Axis, lambda_nm: f64, t_c: f64) -> Result<f64> {
        let rec = self.checked_record(axis, lambda_nm, DERIVATIVE_MARGIN_UM)?;
        let n = self.index_from(rec, axis, lambda_nm, t_c)?;
        let l = lambda_nm * 1e-3;
        let dn = self.dn_dlambda_per_um(axis, lambda_nm, t_c)?;
        Ok(n - l * dn)
    }

    /// dn/dT in 1/K, from the stored polynomial when present, otherwise by
    /// finite difference on a temperature-embedding dispersion form. Never
    /// silently zero: a record with neither model is an error.
    pub fn thermo_optic_coefficient(&self, axis: Axis, lambda_nm: f64, t_c: f64) -> Result<f64> {
        let rec = self.checked_record(axis, lambda_nm, 0.0)?;
        let l = lambda_nm * 1e-3;
        if rec.has_dndt_poly() {
            return Ok(rec.dndt(l, t_c));
        }
        if rec.dispersion.embeds_temperature() {
            let h = THERMO_FD_STEP_K;
            let hi = rec.dispersion.n_squared(l, t_c + h).sqrt();
            let lo = rec.dispersion.n_squared(l, t_c - h).sqrt();
            return Ok((hi - lo) / (2.0 * h));
        }
        Err(Error::NoThermalModel {
            material: self.name.clone(),
            axis: axis.label(),
        })
    }

    /// Linear thermal-expansion coefficient along the beam path (1/K).
    pub fn expansion_alpha(&self, axis: Axis) -> Result<f64> {
        Ok(self.axis_record(axis)?.alpha_per_k)
    }
}

#[derive(Debug, Clone)]
pub struct MaterialsDb {
    materials: BTreeMap<String, Material>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDb {
    #[serde(default)]
    records: Vec<RawRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    name: String,
    axis: String,
    form: String,
    coefficients: Vec<f64>,
    validity_min_um: f64,
    validity_max_um: f64,
    #[serde(rename = "dndT_poly", default)]
    dndt_poly: Vec<Vec<f64>>,
    #[serde(rename = "alpha_per_K")]
    alpha_per_k: f64,
    source: String,
}

fn parse_dispersion(rec: &RawRecord) -> Result<Dispersion> {
    let bad_count = |expected: &str| {
        Err(Error::MaterialsData {
            message: format!(
                "record '{}' ({}): form '{}' expects {expected} coefficients, got {}",
                rec.name,
                rec.axis,
                rec.form,
                rec.coefficients.len()
            ),
        })
    };
    let c = &rec.coefficients;
    match rec.form.as_str() {
        "constant" => {
            if c.len() != 1 {
                return bad_count("exactly 1");
            }
            Ok(Dispersion::Constant(c[0]))
        }
        "pole_quad" => {
            if c.len() != 4 {
                return bad_count("exactly 4");
            }
            Ok(Dispersion::PoleQuad {
                a: c[0],
                b: c[1],
                c: c[2],
                d: c[3],
            })
        }
        "poles" => {
            if c.is_empty() || !c.len().is_multiple_of(2) {
                return bad_count("an even, nonzero number of");
            }
            Ok(Dispersion::Poles(
                c.chunks(2).map(|p| (p[0], p[1])).collect(),
            ))
        }
        "thermal_two_pole" => {
            if c.len() != 10 {
                return bad_count("exactly 10");
            }
            Ok(Dispersion::ThermalTwoPole {
                a: [c[0], c[1], c[2], c[3], c[4], c[5]],
                b: [c[6], c[7], c[8], c[9]],
            })
        }
        other => Err(Error::MaterialsData {
            message: format!(
                "record '{}' ({}): unknown form '{other}'",
                rec.name, rec.axis
            ),
        }),
    }
}

impl MaterialsDb {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawDb = toml::from_str(text).map_err(|e| Error::MaterialsData {
            message: format!("parse failure: {e}"),
        })?;
        let mut materials: BTreeMap<String, Material> = BTreeMap::new();
        for rec in &raw.records {
            if rec.source.trim().is_empty() {
                return Err(Error::MaterialsData {
                    message: format!(
                        "record '{}' ({}): empty source citation",
                        rec.name, rec.axis
                    ),
                });
            }
            if !(rec.validity_min_um > 0.0 && rec.validity_max_um > rec.validity_min_um) {
                return Err(Error::MaterialsData {
                    message: format!(
                        "record '{}' ({}): invalid validity interval [{}, {}] um",
                        rec.name, rec.axis, rec.validity_min_um, rec.validity_max_um
                    ),
                });
            }
            let dispersion = parse_dispersion(rec)?;
            let has_poly = rec.dndt_poly.iter().any(|row| !row.is_empty());
            if dispersion.embeds_temperature() && has_poly {
                return Err(Error::MaterialsData {
                    message: format!(
                        "record '{}' ({}): temperature-embedding form must leave dndT_poly empty",
                        rec.name, rec.axis
                    ),
                });
            }
            let axis: Axis = rec.axis.parse()?;
            let axis_record = AxisRecord {
                dispersion,
                validity_um: (rec.validity_min_um, rec.validity_max_um),
                dndt_poly: rec.dndt_poly.clone(),
                alpha_per_k: rec.alpha_per_k,
                source: rec.source.clone(),
            };
            let entry = materials
                .entry(rec.name.clone())
                .or_insert_with(|| Material {
                    name: rec.name.clone(),
                    o: None,
                    e: None,
                });
            let slot = match axis {
                Axis::Ordinary => &mut entry.o,
                Axis::Extraordinary => &mut entry.e,
            };
            if slot.is_some() {
                return Err(Error::MaterialsData {
                    message: format!("duplicate record for '{}' axis '{}'", rec.name, rec.axis),
                });
            }
            *slot = Some(axis_record);
        }
        Ok(MaterialsDb { materials })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    /// The database compiled into the binary.
    pub fn builtin() -> Self {
        Self::from_toml_str(include_str!("../data/materials.toml"))
            .expect("built-in materials database is well-formed")
    }

    pub fn material(&self, name: &str) -> Result<&Material> {
        self.materials
            .get(name)
            .ok_or_else(|| Error::UnknownMaterial {
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(|s| s.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn db() -> MaterialsDb {
        MaterialsDb::builtin()
    }

    const TEST_DB: &str = r#"
[[records]]
name = "glassy"
axis = "o"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = [[1.0e-5]]
alpha_per_K = 0.0
source = "synthetic dispersionless test material"

[[records]]
name = "coldglass"
axis = "o"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic material without thermal data"
"#;

    #[test]
    fn calcite_indices_at_sodium_line() {
        let db = db();
        let m = db.material("calcite").unwrap();
        let no = m.refractive_index(Axis::Ordinary, 589.0, 20.0).unwrap();
        let ne = m
            .refractive_index(Axis::Extraordinary, 589.0, 20.0)
            .unwrap();
        assert_abs_diff_eq!(no, 1.658377975, epsilon = 1e-8);
        assert_abs_diff_eq!(ne, 1.486425502, epsilon = 1e-8);
    }

    #[test]
    fn calcite_group_indices() {
        let db = db();
        let m = db.material("calcite").unwrap();
        let ngo = m.group_index(Axis::Ordinary, 589.0, 20.0).unwrap();
        let nge = m.group_index(Axis::Extraordinary, 589.0, 20.0).unwrap();
        assert_abs_diff_eq!(ngo, 1.698732304, epsilon = 1e-8);
        assert_abs_diff_eq!(nge, 1.504965501, epsilon = 1e-8);
        // normal dispersion: group index exceeds phase index
        let n = m.refractive_index(Axis::Ordinary, 790.8, 20.0).unwrap();
        let ng = m.group_index(Axis::Ordinary, 790.8, 20.0).unwrap();
        assert!(ng > n);
    }

    #[test]
    fn ppln_thermal_indices() {
        let db = db();
        let m = db.material("ppln").unwrap();
        let hot = m
            .refractive_index(Axis::Extraordinary, 1550.0, 106.5)
            .unwrap();
        let cold = m
            .refractive_index(Axis::Extraordinary, 1550.0, 20.0)
            .unwrap();
        let ord = m.refractive_index(Axis::Ordinary, 1550.0, 20.0).unwrap();
        assert_abs_diff_eq!(hot, 2.155169117, epsilon = 1e-8);
        assert_abs_diff_eq!(cold, 2.129385680, epsilon = 1e-8);
        assert_abs_diff_eq!(ord, 2.208315324, epsilon = 1e-8);
    }

    #[test]
    fn abbo_indices() {
        let db = db();
        let m = db.material("abbo").unwrap();
        let no = m.refractive_index(Axis::Ordinary, 523.6, 20.0).unwrap();
        let ne = m
            .refractive_index(Axis::Extraordinary, 523.6, 20.0)
            .unwrap();
        assert_abs_diff_eq!(no, 1.674884156, epsilon = 1e-8);
        assert_abs_diff_eq!(ne, 1.555245121, epsilon = 1e-8);
        let v = db.material("abbo_vendor").unwrap();
        let no = v.refractive_index(Axis::Ordinary, 523.6, 20.0).unwrap();
        let ne = v
            .refractive_index(Axis::Extraordinary, 523.6, 20.0)
            .unwrap();
        assert_abs_diff_eq!(no, 1.678322186, epsilon = 1e-8);
        assert_abs_diff_eq!(ne, 1.553998124, epsilon = 1e-8);
    }

    #[test]
    fn group_index_matches_finite_difference_at_1550() {
        let db = db();
        let m = db.material("ppln").unwrap();
        let ng = m.group_index(Axis::Extraordinary, 1550.0, 20.0).unwrap();
        let h = 0.1;
        let np = m
            .refractive_index(Axis::Extraordinary, 1550.0 + h, 20.0)
            .unwrap();
        let nm = m
            .refractive_index(Axis::Extraordinary, 1550.0 - h, 20.0)
            .unwrap();
        let n0 = m
            .refractive_index(Axis::Extraordinary, 1550.0, 20.0)
            .unwrap();
        let fd = n0 - 1.550 * (np - nm) / (2.0 * h * 1e-3);
        assert_abs_diff_eq!(ng, fd, epsilon = 1e-6);
    }

    #[test]
    fn ppln_thermo_optic_from_thermal_form() {
        let db = db();
        let m = db.material("ppln").unwrap();
        let dndt = m
            .thermo_optic_coefficient(Axis::Extraordinary, 1550.0, 50.0)
            .unwrap();
        assert_abs_diff_eq!(dndt, 2.869585335e-4, epsilon = 1e-10);
    }

    #[test]
    fn constant_material_and_thermal_error_paths() {
        let db = MaterialsDb::from_toml_str(TEST_DB).unwrap();
        let g = db.material("glassy").unwrap();
        assert_abs_diff_eq!(
            g.refractive_index(Axis::Ordinary, 800.0, 20.0).unwrap(),
            1.5
        );
        // dispersionless: group index equals phase index
        assert_abs_diff_eq!(g.group_index(Axis::Ordinary, 800.0, 20.0).unwrap(), 1.5);
        assert_abs_diff_eq!(
            g.thermo_optic_coefficient(Axis::Ordinary, 800.0, 20.0)
                .unwrap(),
            1.0e-5
        );
        // linear thermal correction about 20 C
        assert_abs_diff_eq!(
            g.refractive_index(Axis::Ordinary, 800.0, 30.0).unwrap(),
            1.5 + 1.0e-5 * 10.0,
            epsilon = 1e-15
        );
        let c = db.material("coldglass").unwrap();
        match c.thermo_optic_coefficient(Axis::Ordinary, 800.0, 20.0) {
            Err(Error::NoThermalModel { material, axis }) => {
                assert_eq!(material, "coldglass");
                assert_eq!(axis, "o");
            }
            other => panic!("expected NoThermalModel, got {other:?}"),
        }
        match c.axis_record(Axis::Extraordinary) {
            Err(Error::MissingAxis { axis: "e", .. }) => {}
            other => panic!("expected MissingAxis, got {other:?}"),
        }
    }

    #[test]
    fn out_of_validity_names_interval() {
        let db = db();
        let m = db.material("ppln").unwrap();
        match m.refractive_index(Axis::Extraordinary, 400.0, 20.0) {
            Err(Error::OutOfValidity {
                min_um,
                max_um,
                lambda_nm,
                ..
            }) => {
                assert_eq!(min_um, 0.5);
                assert_eq!(max_um, 2.5);
                assert_eq!(lambda_nm, 400.0);
            }
            other => panic!("expected OutOfValidity, got {other:?}"),
        }
        // usable for the index itself, but too close to the edge for derivatives
        assert!(m.refractive_index(Axis::Extraordinary, 500.1, 20.0).is_ok());
        match m.group_index(Axis::Extraordinary, 500.1, 20.0) {
            Err(Error::BoundaryMargin { .. }) => {}
            other => panic!("expected BoundaryMargin, got {other:?}"),
        }
    }

    #[test]
    fn unknown_material_and_bad_db() {
        let db = db();
        assert!(matches!(
            db.material("bk7"),
            Err(Error::UnknownMaterial { .. })
        ));
        // same record twice
        let twice = TEST_DB.to_string() + TEST_DB;
        assert!(matches!(
            MaterialsDb::from_toml_str(&twice),
            Err(Error::MaterialsData { .. })
        ));
        let bad_form = TEST_DB.replace("constant", "sellmeier9");
        assert!(matches!(
            MaterialsDb::from_toml_str(&bad_form),
            Err(Error::MaterialsData { .. })
        ));
        let bad_key = TEST_DB.replace("alpha_per_K", "alpha_per_k");
        assert!(matches!(
            MaterialsDb::from_toml_str(&bad_key),
            Err(Error::MaterialsData { .. })
        ));
    }
}
