//! Birefringent wedge-pair compensator: closed-form design of the lateral
//! separation that re-merges two parallel rays split by a walk-off ΔD, a
//! travel-time model for the residual temporal delay, a thickness solver,
//! and an independent 2-D ray trace used to verify both.
//!
//! Geometry (all in one plane, beam along +x):
//! - The ordinary-polarized ray enters the first wedge at the reference
//!   height y = 0; the extraordinary-polarized ray enters at y = ΔD.
//! - Wedge faces on the outside of the pair are normal to the beam; the two
//!   facing surfaces are tilted by the wedge angle φ, thickness increasing
//!   toward the extraordinary ray's side. Each wedge's quoted thickness is
//!   measured along the beam at the height where its ordinary ray enters.
//! - At the tilted exit face each ray refracts to sin θ_x = n_x sin φ
//!   (θ from the face normal), deviating by θ_x − φ from the original
//!   direction. The ray with the larger index climbs faster and catches the
//!   other; the pair separation d places that merge exactly on the second
//!   wedge's entry face, where both rays refract back to the original
//!   direction and continue collinearly.
//! - Optic axes lie perpendicular to the propagation direction, so inside
//!   the wedges each polarization sees its plain axis index.
//!
//! The first wedge retards the ordinary-polarized ray (for a negative
//! uniaxial material with n_go > n_ge); a flipped mounting swaps the roles
//! and is reported by the thickness solver as an orientation flag.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::materials::{Axis, Material, MaterialsDb};
use crate::solver;
use crate::units::C_MM_PER_PS;

/// Residual-delay roots are searched for total thickness in [0, this] mm.
pub const MAX_TOTAL_THICKNESS_MM: f64 = 100.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeSpec {
    pub material: String,
    pub wedge_angle_deg: f64,
    /// Thickness of one wedge along the beam at its reference height, mm.
    pub thickness_mm: f64,
    /// Optional half-height of the clear aperture on the second wedge's
    /// entry face, mm; rays landing outside it make the trace fail.
    #[serde(default)]
    pub aperture_mm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct WedgePairDesign {
    pub wedge: WedgeSpec,
    /// Walk-off separation being merged, mm.
    pub delta_d_mm: f64,
    /// Horizontal run from the first wedge's reference exit point to the
    /// merge point, mm.
    pub a_mm: f64,
    /// Vertical rise of the ordinary ray over that run, mm.
    pub b_mm: f64,
    /// Face-to-face separation of the pair at the reference height, mm;
    /// equals a - b tan(φ) exactly.
    pub d_mm: f64,
    pub exit_theta_o_deg: f64,
    pub exit_theta_e_deg: f64,
    /// Exit separation of the traced rays, µm (signed; ~0 for a valid design).
    pub residual_delta_d_um: f64,
    /// Traced arrival-time correction minus the travel-time model's
    /// correction, fs (~0 when both implementations agree).
    pub residual_delta_t_fs: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOutcome {
    /// Signed exit separation (extraordinary minus ordinary height), mm.
    pub exit_separation_mm: f64,
    /// Arrival-time difference t_o - t_e at the exit face, ps.
    pub o_minus_e_delay_ps: f64,
    /// Largest angle of either exit ray from the entry direction, µrad.
    pub direction_error_urad: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ThicknessSolution {
    pub total_thickness_mm: f64,
    pub per_wedge_thickness_mm: f64,
    /// True when the delay only cancels with the wedge axes rotated a
    /// quarter turn, swapping which polarization is retarded.
    pub orientation_flipped: bool,
    /// The thin-gap rule-of-thumb |v_g,e - v_g,o| · |ΔT|, mm, reported for
    /// comparison only; the solved root is authoritative.
    pub closed_form_comparison_mm: f64,
}

/// Exit angles (degrees, from the tilted face's normal) of the ordinary and
/// extraordinary rays leaving a wedge of angle φ.
pub fn wedge_exit_angles(
    material: &Material,
    lambda_nm: f64,
    phi_deg: f64,
    t_c: f64,
) -> Result<(f64, f64)> {
    let phi = phi_deg.to_radians();
    let mut out = [0.0; 2];
    for (slot, axis) in [Axis::Ordinary, Axis::Extraordinary]
        .into_iter()
        .enumerate()
    {
        let n = material.refractive_index(axis, lambda_nm, t_c)?;
        let s = n * phi.sin();
        if s >= 1.0 {
            return Err(Error::TotalInternalReflection {
                material: material.name.clone(),
                axis: axis.label(),
                n,
                incidence_deg: phi_deg,
                critical_deg: (1.0 / n).asin().to_degrees(),
            });
        }
        out[slot] = s.asin().to_degrees();
    }
    Ok((out[0], out[1]))
}

struct GapGeometry {
    tan_phi: f64,
    /// tan of each ray's deviation from the entry direction in the gap.
    tan_dev_o: f64,
    tan_dev_e: f64,
}

impl GapGeometry {
    fn new(theta_o_deg: f64, theta_e_deg: f64, phi_deg: f64) -> Self {
        GapGeometry {
            tan_phi: phi_deg.to_radians().tan(),
            tan_dev_o: (theta_o_deg - phi_deg).to_radians().tan(),
            tan_dev_e: (theta_e_deg - phi_deg).to_radians().tan(),
        }
    }

    /// Merge-point offsets (a, b) for a walk-off delta_d.
    fn merge_offsets(&self, delta_d: f64) -> (f64, f64) {
        let a = delta_d * (1.0 - self.tan_phi * self.tan_dev_e) / (self.tan_dev_o - self.tan_dev_e);
        (a, a * self.tan_dev_o)
    }

    /// Walk-off separation implied by a face-to-face separation d.
    fn delta_d_from_separation(&self, d: f64) -> f64 {
        d * (self.tan_dev_o - self.tan_dev_e)
            / ((1.0 - self.tan_phi * self.tan_dev_o) * (1.0 - self.tan_phi * self.tan_dev_e))
    }

    fn separation_from_offsets(&self, a: f64, b: f64) -> f64 {
        a - b * self.tan_phi
    }

    /// Air-leg lengths of the ordinary and extraordinary rays between the
    /// facing surfaces, for walk-off delta_d and merge offsets (a, b).
    fn gap_legs(&self, delta_d: f64, a: f64, b: f64) -> (f64, f64) {
        let leg_o = a.hypot(b);
        let leg_e = (a - delta_d * self.tan_phi).hypot(b - delta_d);
        (leg_o, leg_e)
    }
}

/// Design the wedge-pair separation that merges two parallel rays a walk-off
/// ΔD apart, and verify it with the independent ray trace.
pub fn design_wedge_pair(
    db: &MaterialsDb,
    delta_d_mm: f64,
    wedge: &WedgeSpec,
    lambda_nm: f64,
    t_c: f64,
) -> Result<WedgePairDesign> {
    if delta_d_mm < 0.0 {
        return Err(Error::NonphysicalInput {
            message: format!("walk-off separation {delta_d_mm} mm must be non-negative"),
        });
    }
    let material = db.material(&wedge.material)?;
    let (theta_o, theta_e) = wedge_exit_angles(material, lambda_nm, wedge.wedge_angle_deg, t_c)?;
    let (a_mm, b_mm, d_mm) = if delta_d_mm == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        if (theta_o - theta_e).abs() < 1e-9 {
            return Err(Error::CannotCompensate {
                theta_o_deg: theta_o,
                theta_e_deg: theta_e,
            });
        }
        let geom = GapGeometry::new(theta_o, theta_e, wedge.wedge_angle_deg);
        let (a, b) = geom.merge_offsets(delta_d_mm);
        (a, b, geom.separation_from_offsets(a, b))
    };
    let mut design = WedgePairDesign {
        wedge: wedge.clone(),
        delta_d_mm,
        a_mm,
        b_mm,
        d_mm,
        exit_theta_o_deg: theta_o,
        exit_theta_e_deg: theta_e,
        residual_delta_d_um: f64::NAN,
        residual_delta_t_fs: f64::NAN,
    };
    let trace = trace_wedge_pair(db, wedge, delta_d_mm, d_mm, lambda_nm, t_c)?;
    let model_correction = delay_correction_ps(db, &design, lambda_nm, t_c)?;
    design.residual_delta_d_um = trace.exit_separation_mm * 1e3;
    design.residual_delta_t_fs = (trace.o_minus_e_delay_ps - model_correction) * 1e3;
    Ok(design)
}

/// Travel-time correction t_o - t_e (ps) applied by the pair: crystal legs at
/// axis group velocities (the extraordinary ray's extra ΔD·tanφ of first
/// wedge included), gap legs at c.
fn delay_correction_ps(
    db: &MaterialsDb,
    design: &WedgePairDesign,
    lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    let material = db.material(&design.wedge.material)?;
    let ng_o = material.group_index(Axis::Ordinary, lambda_nm, t_c)?;
    let ng_e = material.group_index(Axis::Extraordinary, lambda_nm, t_c)?;
    let geom = GapGeometry::new(
        design.exit_theta_o_deg,
        design.exit_theta_e_deg,
        design.wedge.wedge_angle_deg,
    );
    let (leg_o, leg_e) = geom.gap_legs(design.delta_d_mm, design.a_mm, design.b_mm);
    let total = 2.0 * design.wedge.thickness_mm;
    let t_o = total * ng_o + leg_o;
    let t_e = (total + design.delta_d_mm * geom.tan_phi) * ng_e + leg_e;
    Ok((t_o - t_e) / C_MM_PER_PS)
}

/// Residual temporal delay after the pair: the incoming lead of the
/// ordinary-polarized ray minus the pair's travel-time correction, signed.
pub fn residual_delay_ps(
    db: &MaterialsDb,
    design: &WedgePairDesign,
    initial_delay_ps: f64,
    lambda_nm: f64,
    t_c: f64,
) -> Result<f64> {
    Ok(initial_delay_ps - delay_correction_ps(db, design, lambda_nm, t_c)?)
}

/// Solve for the total wedge thickness that zeroes the residual delay at a
/// fixed separation d, trying the quarter-turn-rotated mounting when the
/// natural one cannot bracket a root.
pub fn solve_thickness(
    db: &MaterialsDb,
    initial_delay_ps: f64,
    wedge: &WedgeSpec,
    d_mm: f64,
    lambda_nm: f64,
    t_c: f64,
) -> Result<ThicknessSolution> {
    let material = db.material(&wedge.material)?;
    let ng_o = material.group_index(Axis::Ordinary, lambda_nm, t_c)?;
    let ng_e = material.group_index(Axis::Extraordinary, lambda_nm, t_c)?;
    if (ng_o - ng_e).abs() < 1e-12 {
        return Err(Error::CannotCompensate {
            theta_o_deg: f64::NAN,
            theta_e_deg: f64::NAN,
        });
    }
    let closed_form_comparison_mm =
        (C_MM_PER_PS / ng_e - C_MM_PER_PS / ng_o).abs() * initial_delay_ps.abs();

    let residual_at = |total: f64, flipped: bool| -> Result<f64> {
        // With the mounting rotated a quarter turn the polarizations swap
        // axis roles; the mirrored geometry has identical leg lengths.
        let (theta_o, theta_e) =
            wedge_exit_angles(material, lambda_nm, wedge.wedge_angle_deg, t_c)?;
        let (th_fast, th_slow, ng_first, ng_second) = if flipped {
            (theta_e, theta_o, ng_e, ng_o)
        } else {
            (theta_o, theta_e, ng_o, ng_e)
        };
        let geom = GapGeometry::new(th_fast, th_slow, wedge.wedge_angle_deg);
        let delta_d = geom.delta_d_from_separation(d_mm);
        let (a, b) = if delta_d == 0.0 {
            (0.0, 0.0)
        } else {
            geom.merge_offsets(delta_d)
        };
        let (leg_first, leg_second) = geom.gap_legs(delta_d, a, b);
        let t_first = total * ng_first + leg_first;
        let t_second = (total + delta_d * geom.tan_phi) * ng_second + leg_second;
        Ok(initial_delay_ps - (t_first - t_second) / C_MM_PER_PS)
    };

    for flipped in [false, true] {
        let lo = residual_at(0.0, flipped)?;
        let hi = residual_at(MAX_TOTAL_THICKNESS_MM, flipped)?;
        if lo * hi <= 0.0 {
            let total = solver::bisect(0.0, MAX_TOTAL_THICKNESS_MM, 200, |t| {
                residual_at(t, flipped).expect("same domain as the bracket endpoints")
            });
            return Ok(ThicknessSolution {
                total_thickness_mm: total,
                per_wedge_thickness_mm: total / 2.0,
                orientation_flipped: flipped,
                closed_form_comparison_mm,
            });
        }
    }
    let lo = residual_at(0.0, false)?;
    let hi = residual_at(MAX_TOTAL_THICKNESS_MM, false)?;
    Err(Error::Uncompensatable {
        residual_at_zero_fs: lo * 1e3,
        residual_at_max_fs: hi * 1e3,
        max_thickness_mm: MAX_TOTAL_THICKNESS_MM,
    })
}

/// 2-D vector in the trace plane.
#[derive(Debug, Clone, Copy)]
struct V2 {
    x: f64,
    y: f64,
}

impl V2 {
    fn dot(self, o: V2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    fn scale(self, k: f64) -> V2 {
        V2 {
            x: self.x * k,
            y: self.y * k,
        }
    }
    fn add(self, o: V2) -> V2 {
        V2 {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

/// Refract unit direction `d` at a surface with unit normal `n` oriented
/// against the incident ray (n·d < 0); eta = n_incident / n_transmitted.
fn refract(d: V2, n: V2, eta: f64) -> Option<V2> {
    let cos_i = -n.dot(d);
    debug_assert!(cos_i > 0.0);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
    if sin2_t > 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    Some(d.scale(eta).add(n.scale(eta * cos_i - cos_t)))
}

/// Distance along `dir` from `origin` to the plane through `point` with
/// normal `normal`.
fn plane_hit(origin: V2, dir: V2, point: V2, normal: V2) -> f64 {
    (point.add(origin.scale(-1.0))).dot(normal) / dir.dot(normal)
}

struct Ray {
    pos: V2,
    dir: V2,
    time_ps: f64,
}

impl Ray {
    fn advance(&mut self, length_mm: f64, group_index: f64) {
        self.pos = self.pos.add(self.dir.scale(length_mm));
        self.time_ps += length_mm * group_index / C_MM_PER_PS;
    }
}

/// Forward-trace two parallel rays (ordinary at height 0, extraordinary at
/// height ΔD) through the wedge pair at separation d. Fully independent of
/// the closed-form design: refraction by vector Snell, timing accumulated
/// per segment at the appropriate group index.
pub fn trace_wedge_pair(
    db: &MaterialsDb,
    wedge: &WedgeSpec,
    delta_d_mm: f64,
    d_mm: f64,
    lambda_nm: f64,
    t_c: f64,
) -> Result<TraceOutcome> {
    let material = db.material(&wedge.material)?;
    let phi = wedge.wedge_angle_deg.to_radians();
    // facing surfaces: normals tilted by the wedge angle, thickness growing
    // with height
    let face_normal_in = V2 {
        x: -phi.cos(),
        y: phi.sin(),
    }; // oriented against +x rays
    let first_exit_point = V2 {
        x: wedge.thickness_mm,
        y: 0.0,
    };
    let second_entry_point = V2 {
        x: wedge.thickness_mm + d_mm,
        y: 0.0,
    };

    let mut times = [0.0f64; 2];
    let mut entries = [V2 { x: 0.0, y: 0.0 }; 2];
    let mut group_indices = [0.0f64; 2];
    let mut direction_error_urad = 0.0f64;
    for (slot, (axis, y0)) in [(Axis::Ordinary, 0.0), (Axis::Extraordinary, delta_d_mm)]
        .into_iter()
        .enumerate()
    {
        let n = material.refractive_index(axis, lambda_nm, t_c)?;
        let ng = material.group_index(axis, lambda_nm, t_c)?;
        let mut ray = Ray {
            pos: V2 { x: 0.0, y: y0 },
            dir: V2 { x: 1.0, y: 0.0 },
            time_ps: 0.0,
        };
        // first wedge: straight crystal segment to the tilted face
        let len = plane_hit(ray.pos, ray.dir, first_exit_point, face_normal_in);
        ray.advance(len, ng);
        ray.dir =
            refract(ray.dir, face_normal_in, n).ok_or_else(|| Error::TotalInternalReflection {
                material: material.name.clone(),
                axis: axis.label(),
                n,
                incidence_deg: wedge.wedge_angle_deg,
                critical_deg: (1.0 / n).asin().to_degrees(),
            })?;
        // air gap to the second wedge's entry face
        let len = plane_hit(ray.pos, ray.dir, second_entry_point, face_normal_in);
        if len < 0.0 {
            return Err(Error::Geometry {
                message: format!(
                    "ray walks backwards onto the second wedge (separation {d_mm} mm)"
                ),
            });
        }
        ray.advance(len, 1.0);
        if let Some(half_height) = wedge.aperture_mm {
            if ray.pos.y.abs() > half_height {
                return Err(Error::Geometry {
                    message: format!(
                        "{} ray lands {:.4} mm from the second wedge's axis, outside the {half_height} mm aperture",
                        axis.label(),
                        ray.pos.y.abs()
                    ),
                });
            }
        }
        ray.dir = refract(ray.dir, face_normal_in, 1.0 / n).expect("exit refraction cannot TIR");
        // identical wedges must restore the entry direction
        direction_error_urad = direction_error_urad.max(ray.dir.y.atan2(ray.dir.x).abs() * 1e6);
        times[slot] = ray.time_ps;
        entries[slot] = ray.pos;
        group_indices[slot] = ng;
    }

    // second wedge: both rays run parallel to the common exit face, normal
    // to the beam, placed one quoted thickness past the ordinary ray's entry
    // point (its reference height)
    let exit_x = entries[0].x + wedge.thickness_mm;
    let path_e = exit_x - entries[1].x;
    if path_e < 0.0 {
        return Err(Error::Geometry {
            message: format!(
                "extraordinary ray enters the second wedge beyond its exit face (separation {d_mm} mm)"
            ),
        });
    }
    let t_o = times[0] + wedge.thickness_mm * group_indices[0] / C_MM_PER_PS;
    let t_e = times[1] + path_e * group_indices[1] / C_MM_PER_PS;

    Ok(TraceOutcome {
        exit_separation_mm: entries[1].y - entries[0].y,
        o_minus_e_delay_ps: t_o - t_e,
        direction_error_urad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup() -> (MaterialsDb, WedgeSpec) {
        let db = MaterialsDb::builtin();
        let wedge = WedgeSpec {
            material: "calcite".into(),
            wedge_angle_deg: 15.0,
            thickness_mm: 0.75,
            aperture_mm: None,
        };
        (db, wedge)
    }

    #[test]
    fn exit_angles_match_direct_snell() {
        let (db, _) = setup();
        let m = db.material("calcite").unwrap();
        let (to, te) = wedge_exit_angles(m, 1549.6365, 15.0, 20.0).unwrap();
        assert_abs_diff_eq!(to, 25.0121678, epsilon = 1e-6);
        assert_abs_diff_eq!(te, 22.4781962, epsilon = 1e-6);
        let n_o = m.refractive_index(Axis::Ordinary, 1549.6365, 20.0).unwrap();
        let direct = (n_o * 15.0_f64.to_radians().sin()).asin().to_degrees();
        assert_abs_diff_eq!(to, direct, epsilon = 1e-12);
        let (to_s, te_s) = wedge_exit_angles(m, 790.8, 15.0, 20.0).unwrap();
        assert_abs_diff_eq!(to_s, 25.2641819, epsilon = 1e-6);
        assert_abs_diff_eq!(te_s, 22.5588917, epsilon = 1e-6);
    }

    #[test]
    fn unit_index_material_passes_straight_through() {
        let toml = r#"
[[records]]
name = "vac"
axis = "o"
form = "constant"
coefficients = [1.0]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"

[[records]]
name = "vac"
axis = "e"
form = "constant"
coefficients = [1.0]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"
"#;
        let db = MaterialsDb::from_toml_str(toml).unwrap();
        let m = db.material("vac").unwrap();
        let (to, te) = wedge_exit_angles(m, 800.0, 15.0, 20.0).unwrap();
        assert_abs_diff_eq!(to, 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(te, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn steep_wedge_reflects_internally() {
        let (db, _) = setup();
        let m = db.material("calcite").unwrap();
        match wedge_exit_angles(m, 1550.0, 80.0, 20.0) {
            Err(Error::TotalInternalReflection {
                critical_deg,
                axis: "o",
                ..
            }) => {
                assert_abs_diff_eq!(critical_deg, 37.7445206, epsilon = 1e-5);
            }
            other => panic!("expected TotalInternalReflection, got {other:?}"),
        }
    }

    #[test]
    fn paper_separations_from_measured_walkoffs() {
        let (db, wedge) = setup();
        let s = design_wedge_pair(&db, 0.145, &wedge, 790.8, 20.0).unwrap();
        assert_abs_diff_eq!(s.a_mm, 2.8901352, epsilon = 1e-5);
        assert_abs_diff_eq!(s.b_mm, 0.5233604, epsilon = 1e-5);
        assert_abs_diff_eq!(s.d_mm, 2.7499012, epsilon = 1e-5);
        let i = design_wedge_pair(&db, 0.325, &wedge, 1549.6365, 20.0).unwrap();
        assert_abs_diff_eq!(i.a_mm, 6.9250197, epsilon = 1e-5);
        assert_abs_diff_eq!(i.b_mm, 1.2225843, epsilon = 1e-5);
        assert_abs_diff_eq!(i.d_mm, 6.5974292, epsilon = 1e-5);
        // d = a - b tan(phi) exactly
        let tan_phi = 15.0_f64.to_radians().tan();
        assert_eq!(i.d_mm.to_bits(), (i.a_mm - i.b_mm * tan_phi).to_bits());
        // the trace confirms the merge and the travel-time model
        assert!(
            s.residual_delta_d_um.abs() < 1.0,
            "{}",
            s.residual_delta_d_um
        );
        assert!(
            i.residual_delta_d_um.abs() < 1.0,
            "{}",
            i.residual_delta_d_um
        );
        assert!(
            s.residual_delta_t_fs.abs() < 1.0,
            "{}",
            s.residual_delta_t_fs
        );
        assert!(
            i.residual_delta_t_fs.abs() < 1.0,
            "{}",
            i.residual_delta_t_fs
        );
    }

    #[test]
    fn zero_walkoff_designs_to_zero() {
        let (db, wedge) = setup();
        let d = design_wedge_pair(&db, 0.0, &wedge, 790.8, 20.0).unwrap();
        assert_eq!(d.a_mm, 0.0);
        assert_eq!(d.b_mm, 0.0);
        assert_eq!(d.d_mm, 0.0);
    }

    #[test]
    fn isotropic_wedge_cannot_compensate() {
        let toml = r#"
[[records]]
name = "iso"
axis = "o"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"

[[records]]
name = "iso"
axis = "e"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.2
validity_max_um = 3.0
dndT_poly = []
alpha_per_K = 0.0
source = "synthetic"
"#;
        let db = MaterialsDb::from_toml_str(toml).unwrap();
        let wedge = WedgeSpec {
            material: "iso".into(),
            wedge_angle_deg: 15.0,
            thickness_mm: 1.0,
            aperture_mm: None,
        };
        match design_wedge_pair(&db, 0.2, &wedge, 800.0, 20.0) {
            Err(Error::CannotCompensate { .. }) => {}
            other => panic!("expected CannotCompensate, got {other:?}"),
        }
    }

    #[test]
    fn residual_delay_limits() {
        let (db, mut wedge) = setup();
        wedge.thickness_mm = 0.0;
        let zero = design_wedge_pair(&db, 0.0, &wedge, 790.8, 20.0).unwrap();
        // no material, no gap: the incoming delay passes through unchanged
        assert_eq!(
            residual_delay_ps(&db, &zero, 0.6500, 790.8, 20.0).unwrap(),
            0.6500
        );
        // doubling the thickness doubles the crystal-leg delay difference
        let mut one = zero.clone();
        one.wedge.thickness_mm = 1.0;
        let mut two = zero.clone();
        two.wedge.thickness_mm = 2.0;
        let c1 = residual_delay_ps(&db, &one, 0.0, 790.8, 20.0).unwrap();
        let c2 = residual_delay_ps(&db, &two, 0.0, 790.8, 20.0).unwrap();
        assert_abs_diff_eq!(c2, 2.0 * c1, epsilon = 1e-15);
        assert!(
            c1 < 0.0,
            "thicker ordinary path must retard the ordinary ray"
        );
    }

    #[test]
    fn thickness_solution_zeroes_the_residual() {
        let (db, wedge) = setup();
        let design = design_wedge_pair(&db, 0.145, &wedge, 790.8, 20.0).unwrap();
        let sol = solve_thickness(&db, 0.65, &wedge, design.d_mm, 790.8, 20.0).unwrap();
        assert!(!sol.orientation_flipped);
        assert_abs_diff_eq!(sol.total_thickness_mm, 1.0579, epsilon = 5e-3);
        assert_abs_diff_eq!(sol.closed_form_comparison_mm, 0.0141, epsilon = 5e-4);
        // plug back: residual below 1 fs
        let mut solved = design.clone();
        solved.wedge.thickness_mm = sol.per_wedge_thickness_mm;
        let r = residual_delay_ps(&db, &solved, 0.65, 790.8, 20.0).unwrap();
        assert!(r.abs() < 1e-3, "residual {r} ps");
        // idler path
        let di = design_wedge_pair(&db, 0.325, &wedge, 1549.6365, 20.0).unwrap();
        let si = solve_thickness(&db, 1.06, &wedge, di.d_mm, 1549.6365, 20.0).unwrap();
        assert_abs_diff_eq!(si.total_thickness_mm, 1.7576, epsilon = 5e-3);
    }

    #[test]
    fn nothing_to_cancel_needs_no_thickness() {
        let (db, wedge) = setup();
        let sol = solve_thickness(&db, 0.0, &wedge, 0.0, 790.8, 20.0).unwrap();
        assert_abs_diff_eq!(sol.total_thickness_mm, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_delay_needs_flipped_mounting() {
        let (db, wedge) = setup();
        let design = design_wedge_pair(&db, 0.145, &wedge, 790.8, 20.0).unwrap();
        let sol = solve_thickness(&db, -0.65, &wedge, design.d_mm, 790.8, 20.0).unwrap();
        assert!(sol.orientation_flipped);
        assert!(sol.total_thickness_mm > 0.0);
    }

    #[test]
    fn absurd_delay_is_uncompensatable() {
        let (db, wedge) = setup();
        match solve_thickness(&db, 1e6, &wedge, 2.75, 790.8, 20.0) {
            Err(Error::Uncompensatable {
                residual_at_zero_fs,
                residual_at_max_fs,
                ..
            }) => {
                assert!(residual_at_zero_fs > 0.0 && residual_at_max_fs > 0.0);
            }
            other => panic!("expected Uncompensatable, got {other:?}"),
        }
    }

    #[test]
    fn trace_restores_direction_and_merges_designed_rays() {
        let (db, wedge) = setup();
        let design = design_wedge_pair(&db, 0.145, &wedge, 790.8, 20.0).unwrap();
        let trace = trace_wedge_pair(&db, &wedge, 0.145, design.d_mm, 790.8, 20.0).unwrap();
        assert!(
            trace.exit_separation_mm.abs() < 1e-3,
            "{}",
            trace.exit_separation_mm
        );
        assert!(
            trace.direction_error_urad < 1.0,
            "{}",
            trace.direction_error_urad
        );
    }

    #[test]
    fn degenerate_passthrough_keeps_plain_delay() {
        let (db, wedge) = setup();
        let trace = trace_wedge_pair(&db, &wedge, 0.0, 0.0, 790.8, 20.0).unwrap();
        assert_eq!(trace.exit_separation_mm, 0.0);
        let m = db.material("calcite").unwrap();
        let ng_o = m.group_index(Axis::Ordinary, 790.8, 20.0).unwrap();
        let ng_e = m.group_index(Axis::Extraordinary, 790.8, 20.0).unwrap();
        let expect = 2.0 * wedge.thickness_mm * (ng_o - ng_e) / C_MM_PER_PS;
        assert_abs_diff_eq!(trace.o_minus_e_delay_ps, expect, epsilon = 1e-12);
    }

    #[test]
    fn wider_separation_shifts_exit_delay_monotonically() {
        let (db, wedge) = setup();
        let mut prev: Option<f64> = None;
        let mut direction: Option<bool> = None;
        for k in 0..10 {
            let d = 0.5 + 1.0 * k as f64;
            let trace = trace_wedge_pair(&db, &wedge, 0.145, d, 790.8, 20.0).unwrap();
            if let Some(p) = prev {
                let up = trace.o_minus_e_delay_ps > p;
                match direction {
                    None => direction = Some(up),
                    Some(dir) => assert_eq!(dir, up, "direction change at d = {d} mm"),
                }
            }
            prev = Some(trace.o_minus_e_delay_ps);
        }
    }

    #[test]
    fn small_aperture_rejects_offset_rays() {
        let (db, mut wedge) = setup();
        wedge.aperture_mm = Some(0.1);
        match trace_wedge_pair(&db, &wedge, 0.145, 6.0, 790.8, 20.0) {
            Err(Error::Geometry { message }) => {
                assert!(message.contains("aperture"), "{message}");
            }
            other => panic!("expected Geometry error, got {other:?}"),
        }
    }
}
