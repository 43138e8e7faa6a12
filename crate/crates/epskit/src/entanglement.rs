//! Polarization-correlation model of the entangled pair source, count-record
//! analysis (visibility, CHSH, Klyshko rates), and a stochastic detection
//! simulator.
//!
//! # Angle convention
//! Every angle in this module is a polarization analysis angle measured from
//! vertical: 0° passes V, 45° passes A, 90° passes H, 135° passes D. A
//! half-wave plate mounted at physical angle h in front of a vertical
//! polarizer analyzes at 2h; callers working in wave-plate coordinates must
//! double before calling in.
//!
//! # Correlation model
//! The coincidence probability for one pair through analyzers at angles
//! (θ_s, θ_i) is
//!   P(θ_s, θ_i) = ¼ [1 + V_hv cos2θ_s cos2θ_i + V_diag cosφ sin2θ_s sin2θ_i]
//! where φ is the relative phase of the generated state. Measured fringe
//! visibilities usually differ slightly between analysis bases, so the model
//! stores one visibility per canonical idler basis. When θ_i sits exactly on
//! a canonical basis the corresponding stored value is used (making a basis
//! sweep reproduce the quoted per-basis visibilities identically); at any
//! other angle the coefficients fall back to the basis-pair means. Diagonal
//! visibilities are quoted at zero state phase; a nonzero φ scales the
//! diagonal fringe by cos φ.
//!
//! # Simulation
//! Each simulated record draws, in a fixed order, from its own counter-mode
//! substream of one master seed (record j reads stream j), so a record's
//! counts depend only on the master seed and its position in the request, not
//! on how many other records are requested. True pairs are Poisson in the
//! integration window; analyzer passage and detection thin them binomially;
//! dark counts add Poisson singles; accidental coincidences add Poisson
//! counts with mean N_s N_i τ_w per second. Background subtraction removes
//! the deterministic estimate N_s N_i τ_w of that mean (clamped at zero), as
//! an experimenter would, leaving the Poisson spread of the accidentals in
//! the record.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::solver::invert3;

const BASIS_ANGLE_TOL_DEG: f64 = 1e-6;

/// Pair state as seen through its measured fringe visibilities.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellStateModel {
    /// Relative phase of the generated state, radians.
    pub phase_rad: f64,
    /// Fringe visibility with the idler analyzing V (0°).
    pub visibility_v: f64,
    /// Fringe visibility with the idler analyzing A (45°).
    pub visibility_a: f64,
    /// Fringe visibility with the idler analyzing H (90°).
    pub visibility_h: f64,
    /// Fringe visibility with the idler analyzing D (135°).
    pub visibility_d: f64,
}

impl BellStateModel {
    pub fn uniform(visibility: f64) -> Self {
        BellStateModel {
            phase_rad: 0.0,
            visibility_v: visibility,
            visibility_a: visibility,
            visibility_h: visibility,
            visibility_d: visibility,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("V", self.visibility_v),
            ("A", self.visibility_a),
            ("H", self.visibility_h),
            ("D", self.visibility_d),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::NonphysicalInput {
                    message: format!("visibility {v} in basis {label} must lie in [0, 1]"),
                });
            }
        }
        if !self.phase_rad.is_finite() {
            return Err(Error::NonphysicalInput {
                message: "state phase must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn mean_visibility(&self) -> f64 {
        0.25 * (self.visibility_v + self.visibility_a + self.visibility_h + self.visibility_d)
    }

    fn hv_mean(&self) -> f64 {
        0.5 * (self.visibility_v + self.visibility_h)
    }

    fn diag_mean(&self) -> f64 {
        0.5 * (self.visibility_a + self.visibility_d)
    }

    /// Visibility coefficients (rectilinear term, diagonal term) for an idler
    /// analyzer at `theta_i_deg`.
    fn coefficients_at(&self, theta_i_deg: f64) -> (f64, f64) {
        let reduced = theta_i_deg.rem_euclid(180.0);
        let near = |target: f64| {
            (reduced - target).abs() < BASIS_ANGLE_TOL_DEG
                || (reduced - target - 180.0).abs() < BASIS_ANGLE_TOL_DEG
        };
        if near(0.0) {
            (self.visibility_v, self.diag_mean())
        } else if near(90.0) {
            (self.visibility_h, self.diag_mean())
        } else if near(45.0) {
            (self.hv_mean(), self.visibility_a)
        } else if near(135.0) {
            (self.hv_mean(), self.visibility_d)
        } else {
            (self.hv_mean(), self.diag_mean())
        }
    }

    /// Probability that one generated pair passes both analyzers.
    pub fn correlation_probability(&self, theta_s_deg: f64, theta_i_deg: f64) -> f64 {
        let (v_rect, v_diag) = self.coefficients_at(theta_i_deg);
        let a = 2.0 * theta_s_deg.to_radians();
        let b = 2.0 * theta_i_deg.to_radians();
        0.25 * (1.0
            + v_rect * a.cos() * b.cos()
            + v_diag * self.phase_rad.cos() * a.sin() * b.sin())
    }

    /// Correlation function E(θ_s, θ_i) of the model, the noise-free value
    /// the four-setting count estimator converges to.
    pub fn analytic_e(&self, theta_s_deg: f64, theta_i_deg: f64) -> f64 {
        let (v_rect, v_diag) = self.coefficients_at(theta_i_deg);
        let a = 2.0 * theta_s_deg.to_radians();
        let b = 2.0 * theta_i_deg.to_radians();
        v_rect * a.cos() * b.cos() + v_diag * self.phase_rad.cos() * a.sin() * b.sin()
    }
}

/// Detector and collection parameters of both arms.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionModel {
    /// Signal-arm collection-and-detection efficiency.
    pub eta_s: f64,
    /// Idler-arm collection-and-detection efficiency.
    pub eta_i: f64,
    pub dark_s_hz: f64,
    pub dark_i_hz: f64,
    pub coincidence_window_ns: f64,
    /// Generated pair rate per milliwatt of pump power.
    pub pair_rate_per_mw_hz: f64,
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        for (label, eta) in [("signal", self.eta_s), ("idler", self.eta_i)] {
            if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
                return Err(Error::NonphysicalInput {
                    message: format!("{label} efficiency {eta} must lie in [0, 1]"),
                });
            }
        }
        for (label, v) in [
            ("signal dark rate", self.dark_s_hz),
            ("idler dark rate", self.dark_i_hz),
            ("coincidence window", self.coincidence_window_ns),
            ("pair rate per mW", self.pair_rate_per_mw_hz),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NonphysicalInput {
                    message: format!("{label} {v} must be finite and non-negative"),
                });
            }
        }
        Ok(())
    }

    /// Noise-free expected record at one analyzer setting: the means the
    /// stochastic simulator fluctuates around.
    pub fn expected_record(
        &self,
        state: &BellStateModel,
        power_mw: f64,
        theta_s_deg: f64,
        theta_i_deg: f64,
        duration_s: f64,
        bg_subtracted: bool,
    ) -> Result<CountRecord> {
        self.validate()?;
        state.validate()?;
        check_power_duration(power_mw, duration_s)?;
        let rate = self.pair_rate_per_mw_hz * power_mw;
        let ns_hz = 0.5 * rate * self.eta_s + self.dark_s_hz;
        let ni_hz = 0.5 * rate * self.eta_i + self.dark_i_hz;
        let true_hz = rate
            * self.eta_s
            * self.eta_i
            * state.correlation_probability(theta_s_deg, theta_i_deg);
        let accidental_hz = ns_hz * ni_hz * self.coincidence_window_ns * 1e-9;
        let n_hz = if bg_subtracted {
            true_hz
        } else {
            true_hz + accidental_hz
        };
        Ok(CountRecord {
            theta_s_deg,
            theta_i_deg,
            duration_s,
            ns_hz,
            ni_hz,
            n_hz,
            bg_subtracted,
            seed: None,
        })
    }
}

/// One integration window of singles and coincidence rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub theta_s_deg: f64,
    pub theta_i_deg: f64,
    pub duration_s: f64,
    pub ns_hz: f64,
    pub ni_hz: f64,
    pub n_hz: f64,
    pub bg_subtracted: bool,
    /// Master seed for simulated records; `None` for measured data.
    pub seed: Option<u64>,
}

impl CountRecord {
    fn counts(&self) -> (f64, f64, f64) {
        (
            self.ns_hz * self.duration_s,
            self.ni_hz * self.duration_s,
            self.n_hz * self.duration_s,
        )
    }

    fn check(&self) -> Result<()> {
        if !(self.duration_s >= 0.0)
            || !(self.ns_hz >= 0.0)
            || !(self.ni_hz >= 0.0)
            || !(self.n_hz >= 0.0)
        {
            return Err(Error::InvalidRecords {
                message: format!(
                    "record at ({}, {}) deg has a negative duration or rate",
                    self.theta_s_deg, self.theta_i_deg
                ),
            });
        }
        Ok(())
    }
}

/// Fringe visibility extracted from a single-analyzer sweep.
#[derive(Debug, Clone)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub uncertainty: f64,
    /// Scanned-analyzer angle of the fringe maximum; `None` when the curve
    /// carries no fringe at all (flat data).
    pub fringe_max_deg: Option<f64>,
}

/// Extract the fringe visibility from count records in which one analyzer is
/// scanned and the other held fixed. Fewer than eight records use the direct
/// (max−min)/(max+min) estimator; eight or more are fit with a weighted
/// least-squares sinusoid in the doubled scan angle, which tolerates sampling
/// that misses the extrema.
pub fn visibility(records: &[CountRecord]) -> Result<VisibilityEstimate> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    for r in records {
        r.check()?;
    }
    if records.len() < 2 {
        return Err(Error::InvalidRecords {
            message: "visibility needs at least two records".into(),
        });
    }
    let distinct = |get: fn(&CountRecord) -> f64| {
        let mut vals: Vec<f64> = records.iter().map(get).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup_by(|a, b| (*a - *b).abs() < BASIS_ANGLE_TOL_DEG);
        vals.len()
    };
    let s_distinct = distinct(|r| r.theta_s_deg);
    let i_distinct = distinct(|r| r.theta_i_deg);
    let scan_is_signal = match (s_distinct > 1, i_distinct > 1) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => {
            return Err(Error::InvalidRecords {
                message: "visibility expects one analyzer scanned with the other fixed".into(),
            })
        }
        (false, false) => true, // both fixed: flat by construction
    };
    let angle = |r: &CountRecord| {
        if scan_is_signal {
            r.theta_s_deg
        } else {
            r.theta_i_deg
        }
    };

    let total: f64 = records.iter().map(|r| r.counts().2).sum();
    if total == 0.0 {
        return Err(Error::UndefinedEstimate {
            what: "visibility of records with no coincidence counts".into(),
        });
    }

    if records.len() < 8 {
        let max = records
            .iter()
            .max_by(|a, b| a.n_hz.partial_cmp(&b.n_hz).unwrap())
            .unwrap();
        let min = records
            .iter()
            .min_by(|a, b| a.n_hz.partial_cmp(&b.n_hz).unwrap())
            .unwrap();
        let (c_max, c_min) = (max.counts().2, min.counts().2);
        let sum = c_max + c_min;
        let vis = (c_max - c_min) / sum;
        let var = (2.0 * c_min / (sum * sum)).powi(2) * c_max
            + (2.0 * c_max / (sum * sum)).powi(2) * c_min;
        let fringe_max_deg = if vis == 0.0 { None } else { Some(angle(max)) };
        return Ok(VisibilityEstimate {
            visibility: vis,
            uncertainty: var.sqrt(),
            fringe_max_deg,
        });
    }

    // weighted least squares of counts against (1, cos 2θ, sin 2θ)
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for r in records {
        let c = r.counts().2;
        let w = 1.0 / c.max(1.0);
        let t = 2.0 * angle(r).to_radians();
        let x = [1.0, t.cos(), t.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * x[i] * x[j];
            }
            rhs[i] += w * c * x[i];
        }
    }
    let inv = invert3(m).ok_or_else(|| Error::InvalidRecords {
        message: "scan angles are too degenerate to fit a fringe".into(),
    })?;
    let mut coeff = [0.0f64; 3];
    for (i, c) in coeff.iter_mut().enumerate() {
        for j in 0..3 {
            *c += inv[i][j] * rhs[j];
        }
    }
    let (a, b, c) = (coeff[0], coeff[1], coeff[2]);
    if a <= 0.0 {
        return Err(Error::UndefinedEstimate {
            what: "visibility of a fit with non-positive mean level".into(),
        });
    }
    let amp = (b * b + c * c).sqrt();
    let vis = amp / a;
    let fringe_max_deg = if amp == 0.0 {
        None
    } else {
        Some((0.5 * c.atan2(b)).to_degrees().rem_euclid(180.0))
    };
    // first-order propagation through V = sqrt(b^2 + c^2) / a with the
    // parameter covariance of the weighted fit
    let g = if amp == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [-vis / a, b / (a * amp), c / (a * amp)]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += g[i] * inv[i][j] * g[j];
        }
    }
    Ok(VisibilityEstimate {
        visibility: vis,
        uncertainty: var.max(0.0).sqrt(),
        fringe_max_deg,
    })
}

/// Correlation estimator from the four records of one CHSH setting pair:
/// (a,b), (a,b⊥), (a⊥,b), (a⊥,b⊥). Returns (E, σ_E) with the uncertainty
/// from Poisson counting statistics.
pub fn chsh_e(records: &[CountRecord; 4]) -> Result<(f64, f64)> {
    for r in records {
        r.check()?;
    }
    let n: Vec<f64> = records.iter().map(|r| r.counts().2).collect();
    let total: f64 = n.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedEstimate {
            what: "correlation estimate with no coincidence counts".into(),
        });
    }
    let e = (n[0] - n[1] - n[2] + n[3]) / total;
    let var =
        ((1.0 - e).powi(2) * (n[0] + n[3]) + (1.0 + e).powi(2) * (n[1] + n[2])) / (total * total);
    Ok((e, var.sqrt()))
}

#[derive(Debug, Clone, Copy)]
pub struct ChshResult {
    pub s: f64,
    pub uncertainty: f64,
    /// How many standard deviations S sits above the classical bound of 2.
    pub n_sigma_above_2: f64,
}

/// Combine the four correlation estimates E(α,β), E(α,δ), E(γ,β), E(γ,δ)
/// into S = |E(α,β) − E(α,δ) + E(γ,β) + E(γ,δ)|.
pub fn chsh_s(es: &[(f64, f64); 4]) -> ChshResult {
    let s = (es[0].0 - es[1].0 + es[2].0 + es[3].0).abs();
    let var: f64 = es.iter().map(|(_, sig)| sig * sig).sum();
    let uncertainty = var.sqrt();
    let n_sigma_above_2 = if uncertainty > 0.0 {
        (s - 2.0) / uncertainty
    } else if s > 2.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    ChshResult {
        s,
        uncertainty,
        n_sigma_above_2,
    }
}

/// Canonical analyzer settings for the standard CHSH measurement: signal at
/// {0°, 45°}, idler at {22.5°, 67.5°}, each correlation block expanded into
/// its four setting combinations in the order expected by [`chsh_e`].
pub fn chsh_settings() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(16);
    for &a in &[0.0f64, 45.0] {
        for &b in &[22.5f64, 67.5] {
            out.push((a, b));
            out.push((a, b + 90.0));
            out.push((a + 90.0, b));
            out.push((a + 90.0, b + 90.0));
        }
    }
    out
}

/// Evaluate CHSH from sixteen records covering the canonical settings, in any
/// order. Angles are matched modulo 180° within a small tolerance.
pub fn chsh_from_records(records: &[CountRecord]) -> Result<ChshResult> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    if records.len() != 16 {
        return Err(Error::InvalidRecords {
            message: format!(
                "CHSH evaluation needs exactly 16 records, got {}",
                records.len()
            ),
        });
    }
    let find = |ts: f64, ti: f64| -> Result<CountRecord> {
        records
            .iter()
            .find(|r| {
                let ds = (r.theta_s_deg - ts).rem_euclid(180.0);
                let di = (r.theta_i_deg - ti).rem_euclid(180.0);
                let close =
                    |d: f64| !(BASIS_ANGLE_TOL_DEG..=180.0 - BASIS_ANGLE_TOL_DEG).contains(&d);
                close(ds) && close(di)
            })
            .copied()
            .ok_or_else(|| Error::InvalidRecords {
                message: format!("no record at analyzer setting ({ts}, {ti}) deg"),
            })
    };
    let mut es = [(0.0, 0.0); 4];
    let blocks = [(0.0, 22.5), (0.0, 67.5), (45.0, 22.5), (45.0, 67.5)];
    for (slot, &(a, b)) in blocks.iter().enumerate() {
        let quad = [
            find(a, b)?,
            find(a, b + 90.0)?,
            find(a + 90.0, b)?,
            find(a + 90.0, b + 90.0)?,
        ];
        es[slot] = chsh_e(&quad)?;
    }
    Ok(chsh_s(&es))
}

/// Klyshko estimates from one record: generated pair rate and the two
/// heralding efficiencies, with first-order Poisson uncertainties (counts
/// treated as independent).
#[derive(Debug, Clone, Copy)]
pub struct KlyshkoEstimate {
    pub pair_rate_hz: f64,
    pub pair_rate_uncertainty_hz: f64,
    pub heralding_s: f64,
    pub heralding_s_uncertainty: f64,
    pub heralding_i: f64,
    pub heralding_i_uncertainty: f64,
}

pub fn pair_rate_and_heralding(record: &CountRecord) -> Result<KlyshkoEstimate> {
    record.check()?;
    let (cs, ci, cn) = record.counts();
    if cn <= 0.0 || cs <= 0.0 || ci <= 0.0 {
        return Err(Error::UndefinedEstimate {
            what: "Klyshko estimate from a record with zero counts".into(),
        });
    }
    let pair_rate_hz = record.ns_hz * record.ni_hz / record.n_hz;
    let rel_r = (1.0 / cs + 1.0 / ci + 1.0 / cn).sqrt();
    let heralding_s = record.n_hz / record.ni_hz;
    let heralding_i = record.n_hz / record.ns_hz;
    let rel_hs = (1.0 / cn + 1.0 / ci).sqrt();
    let rel_hi = (1.0 / cn + 1.0 / cs).sqrt();
    Ok(KlyshkoEstimate {
        pair_rate_hz,
        pair_rate_uncertainty_hz: pair_rate_hz * rel_r,
        heralding_s,
        heralding_s_uncertainty: heralding_s * rel_hs,
        heralding_i,
        heralding_i_uncertainty: heralding_i * rel_hi,
    })
}

/// Sum a set of records into one aggregate (counts and durations add; the
/// analyzer angles of the aggregate are meaningless and set to zero).
pub fn aggregate_counts(records: &[CountRecord]) -> Result<CountRecord> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut t = 0.0;
    let (mut cs, mut ci, mut cn) = (0.0, 0.0, 0.0);
    for r in records {
        r.check()?;
        let c = r.counts();
        t += r.duration_s;
        cs += c.0;
        ci += c.1;
        cn += c.2;
    }
    if t <= 0.0 {
        return Err(Error::InvalidRecords {
            message: "aggregate duration is zero".into(),
        });
    }
    Ok(CountRecord {
        theta_s_deg: 0.0,
        theta_i_deg: 0.0,
        duration_s: t,
        ns_hz: cs / t,
        ni_hz: ci / t,
        n_hz: cn / t,
        bg_subtracted: records[0].bg_subtracted,
        seed: records[0].seed,
    })
}

fn check_power_duration(power_mw: f64, duration_s: f64) -> Result<()> {
    if !(power_mw >= 0.0) || !power_mw.is_finite() {
        return Err(Error::NonphysicalInput {
            message: format!("pump power {power_mw} mW must be finite and non-negative"),
        });
    }
    if !(duration_s >= 0.0) || !duration_s.is_finite() {
        return Err(Error::NonphysicalInput {
            message: format!("duration {duration_s} s must be finite and non-negative"),
        });
    }
    Ok(())
}

fn sample_poisson(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

fn sample_binomial(rng: &mut ChaCha12Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    let p = p.min(1.0);
    Binomial::new(n, p)
        .expect("probability in range")
        .sample(rng)
}

/// One integration window: thin `pairs` true pairs through the joint pass
/// probability and per-arm marginals, then add darks and accidentals.
#[allow(clippy::too_many_arguments)]
fn simulate_window(
    rng: &mut ChaCha12Rng,
    detection: &DetectionModel,
    pair_mean: f64,
    joint_p: f64,
    marginal_s: f64,
    marginal_i: f64,
    duration_s: f64,
    bg_subtracted: bool,
) -> (f64, f64, f64) {
    if duration_s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let pairs = sample_poisson(rng, pair_mean * duration_s);
    let n_true = sample_binomial(rng, pairs, joint_p);
    let leftovers = pairs - n_true;
    // conditional probability that a pair not already counted as a
    // coincidence still fires one arm
    let residual = 1.0 - joint_p;
    let p_s = if residual > 0.0 {
        ((marginal_s - joint_p) / residual).max(0.0)
    } else {
        0.0
    };
    let p_i = if residual > 0.0 {
        ((marginal_i - joint_p) / residual).max(0.0)
    } else {
        0.0
    };
    let singles_s = n_true
        + sample_binomial(rng, leftovers, p_s)
        + sample_poisson(rng, detection.dark_s_hz * duration_s);
    let singles_i = n_true
        + sample_binomial(rng, leftovers, p_i)
        + sample_poisson(rng, detection.dark_i_hz * duration_s);
    let tau_s = detection.coincidence_window_ns * 1e-9;
    let accidental_mean = singles_s as f64 * singles_i as f64 * tau_s / duration_s;
    let accidentals = sample_poisson(rng, accidental_mean);
    let mut coincidences = (n_true + accidentals) as f64;
    if bg_subtracted {
        coincidences = (coincidences - accidental_mean).max(0.0);
    }
    coincidences = coincidences.min(singles_s as f64).min(singles_i as f64);
    (
        singles_s as f64 / duration_s,
        singles_i as f64 / duration_s,
        coincidences / duration_s,
    )
}

/// Simulate count records at a list of analyzer settings. Record `j` draws
/// from substream `j` of `master_seed` (see the module docs), so runs are
/// reproducible and records are independent of list length.
pub fn simulate_experiment(
    state: &BellStateModel,
    detection: &DetectionModel,
    power_mw: f64,
    settings: &[(f64, f64)],
    duration_s: f64,
    bg_subtracted: bool,
    master_seed: u64,
) -> Result<Vec<CountRecord>> {
    simulate_experiment_streams(
        state,
        detection,
        power_mw,
        settings,
        duration_s,
        bg_subtracted,
        master_seed,
        0,
    )
}

/// [`simulate_experiment`] with the substream index starting at
/// `first_stream` instead of 0, so several record batches in one run can
/// share a master seed without drawing from the same streams.
#[allow(clippy::too_many_arguments)]
pub fn simulate_experiment_streams(
    state: &BellStateModel,
    detection: &DetectionModel,
    power_mw: f64,
    settings: &[(f64, f64)],
    duration_s: f64,
    bg_subtracted: bool,
    master_seed: u64,
    first_stream: u64,
) -> Result<Vec<CountRecord>> {
    state.validate()?;
    detection.validate()?;
    check_power_duration(power_mw, duration_s)?;
    let rate = detection.pair_rate_per_mw_hz * power_mw;
    let mut out = Vec::with_capacity(settings.len());
    for (j, &(theta_s_deg, theta_i_deg)) in settings.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(first_stream + j as u64);
        let p_joint = detection.eta_s
            * detection.eta_i
            * state.correlation_probability(theta_s_deg, theta_i_deg);
        let (ns_hz, ni_hz, n_hz) = simulate_window(
            &mut rng,
            detection,
            rate,
            p_joint,
            0.5 * detection.eta_s,
            0.5 * detection.eta_i,
            duration_s,
            bg_subtracted,
        );
        out.push(CountRecord {
            theta_s_deg,
            theta_i_deg,
            duration_s,
            ns_hz,
            ni_hz,
            n_hz,
            bg_subtracted,
            seed: Some(master_seed),
        });
    }
    Ok(out)
}

/// Simulate one record with no analyzers in either arm (both marginals are
/// the bare arm efficiencies), the configuration Klyshko calibration runs
/// in. The analyzer angles of the returned record are set to zero.
pub fn simulate_raw_rates(
    detection: &DetectionModel,
    power_mw: f64,
    duration_s: f64,
    bg_subtracted: bool,
    master_seed: u64,
) -> Result<CountRecord> {
    detection.validate()?;
    check_power_duration(power_mw, duration_s)?;
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(0);
    let rate = detection.pair_rate_per_mw_hz * power_mw;
    let (ns_hz, ni_hz, n_hz) = simulate_window(
        &mut rng,
        detection,
        rate,
        detection.eta_s * detection.eta_i,
        detection.eta_s,
        detection.eta_i,
        duration_s,
        bg_subtracted,
    );
    Ok(CountRecord {
        theta_s_deg: 0.0,
        theta_i_deg: 0.0,
        duration_s,
        ns_hz,
        ni_hz,
        n_hz,
        bg_subtracted,
        seed: Some(master_seed),
    })
}
