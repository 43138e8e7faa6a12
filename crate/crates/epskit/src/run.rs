//! Command implementations: each builds on the library modules, writes its
//! artifacts under the configured output directory, and returns the text it
//! wants on stdout. Everything is deterministic for a fixed config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{Arm, ArmCompensation, RunConfig};
use crate::displacer::{walkoff_report, DisplacerSpec};
use crate::entanglement::{
    aggregate_counts, chsh_from_records, chsh_s, chsh_settings, pair_rate_and_heralding,
    simulate_experiment_streams, visibility, BellStateModel, CountRecord, KlyshkoEstimate,
};
use crate::error::{Error, Result};
use crate::materials::MaterialsDb;
use crate::overlap::{
    gaussian_overlap, sweep_lateral_separation, width_from_overlap_mm, GaussianBeam,
};
use crate::phasematch::{poling_period_at_um, solve_signal_idler, PhaseMatchSolution};
use crate::report::{fmt_f, write_count_records_csv, write_text, Table};
use crate::stability::{relative_phase_variation, StabilityReport, ThermalScenario};
use crate::wedges::{
    design_wedge_pair, residual_delay_ps, solve_thickness, ThicknessSolution, WedgePairDesign,
    WedgeSpec,
};

/// Loaded configuration plus the material table and output directory it
/// resolved to.
pub struct Workspace {
    pub config: RunConfig,
    pub db: MaterialsDb,
    pub out_dir: PathBuf,
}

impl Workspace {
    pub fn new(config: RunConfig) -> Result<Self> {
        let db = match &config.materials_path {
            Some(path) => MaterialsDb::from_path(Path::new(path))?,
            None => MaterialsDb::builtin(),
        };
        let out_dir = PathBuf::from(&config.output_dir);
        Ok(Workspace {
            config,
            db,
            out_dir,
        })
    }

    fn solve(&self) -> Result<PhaseMatchSolution> {
        solve_signal_idler(
            &self.db,
            &self.config.pump,
            &self.config.crystal,
            &self.config.solver,
        )
    }

    fn displacer_spec(&self) -> DisplacerSpec {
        DisplacerSpec {
            material: self.config.displacer.material.clone(),
            length_mm: self.config.displacer.length_mm,
            optic_angle_deg: self.config.displacer.optic_angle_deg,
        }
    }

    fn arm_compensation(&self, arm: Arm) -> &ArmCompensation {
        match arm {
            Arm::Signal => &self.config.wedges.signal,
            Arm::Idler => &self.config.wedges.idler,
        }
    }

    fn arm_lambda_nm(&self, arm: Arm, solution: &PhaseMatchSolution) -> f64 {
        match arm {
            Arm::Signal => solution.lambda_s_nm,
            Arm::Idler => solution.lambda_i_nm,
        }
    }

    fn arm_fwhm_mm(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Signal => self.config.beams.signal_fwhm_mm,
            Arm::Idler => self.config.beams.idler_fwhm_mm,
        }
    }

    fn arm_label(arm: Arm) -> &'static str {
        match arm {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }

    /// Full wedge-pair design for one arm: separation from the measured
    /// walk-off, thickness from the measured delay, residuals re-checked at
    /// the solved thickness.
    fn design_arm(&self, arm: Arm, lambda_nm: f64) -> Result<ArmDesign> {
        let w = &self.config.wedges;
        let comp = self.arm_compensation(arm);
        let provisional = WedgeSpec {
            material: w.material.clone(),
            wedge_angle_deg: w.wedge_angle_deg,
            thickness_mm: 1.0,
            aperture_mm: w.aperture_mm,
        };
        let first_pass = design_wedge_pair(
            &self.db,
            comp.measured_walkoff_mm,
            &provisional,
            lambda_nm,
            w.temperature_c,
        )?;
        let thickness = solve_thickness(
            &self.db,
            comp.initial_delay_ps,
            &provisional,
            first_pass.d_mm,
            lambda_nm,
            w.temperature_c,
        )?;
        let wedge = WedgeSpec {
            thickness_mm: thickness.per_wedge_thickness_mm,
            ..provisional
        };
        let design = design_wedge_pair(
            &self.db,
            comp.measured_walkoff_mm,
            &wedge,
            lambda_nm,
            w.temperature_c,
        )?;
        let residual_delay_fs = if thickness.orientation_flipped {
            None
        } else {
            Some(
                residual_delay_ps(
                    &self.db,
                    &design,
                    comp.initial_delay_ps,
                    lambda_nm,
                    w.temperature_c,
                )? * 1e3,
            )
        };
        Ok(ArmDesign {
            arm,
            lambda_nm,
            design,
            thickness,
            residual_delay_fs,
        })
    }

    fn stability_report(&self, solution: &PhaseMatchSolution) -> Result<StabilityReport> {
        let st = &self.config.stability;
        relative_phase_variation(
            &self.db,
            &st.cw,
            &st.ccw,
            self.config.pump.lambda_nm,
            solution.lambda_s_nm,
            solution.lambda_i_nm,
            &ThermalScenario {
                baseline_c: st.baseline_c,
                excursion_k: st.excursion_k,
            },
        )
    }

    /// Analytic four-basis-average record at the configured power: the
    /// noise-free counterpart of what the simulator produces.
    fn expected_aligned_aggregate(&self) -> Result<CountRecord> {
        let det = self.config.detection.model();
        let mut records = Vec::with_capacity(4);
        for theta in [0.0, 45.0, 90.0, 135.0] {
            records.push(det.expected_record(
                &self.config.state,
                self.config.pump.power_mw,
                theta,
                theta,
                1.0,
                true,
            )?);
        }
        aggregate_counts(&records)
    }
}

struct ArmDesign {
    arm: Arm,
    lambda_nm: f64,
    design: WedgePairDesign,
    thickness: ThicknessSolution,
    /// Delay left after the solved pair, via the travel-time model; `None`
    /// for flipped mountings, where the solver's root is the only check.
    residual_delay_fs: Option<f64>,
}

/// Analytic CHSH S for the configured state at the canonical settings.
fn expected_chsh_s(state: &BellStateModel) -> f64 {
    let mut es = [(0.0, 0.0); 4];
    for (slot, (a, b)) in [(0.0, 22.5), (0.0, 67.5), (45.0, 22.5), (45.0, 67.5)]
        .into_iter()
        .enumerate()
    {
        es[slot] = (state.analytic_e(a, b), 0.0);
    }
    chsh_s(&es).s
}

pub fn cmd_design(ws: &Workspace) -> Result<String> {
    let cfg = &ws.config;
    let solution = ws.solve()?;
    let period_at = poling_period_at_um(&ws.db, &cfg.crystal)?;
    let walkoff = walkoff_report(
        &ws.db,
        &ws.displacer_spec(),
        cfg.pump.lambda_nm,
        &[solution.lambda_s_nm, solution.lambda_i_nm],
        cfg.displacer.temperature_c,
    )?;
    let arms = [
        ws.design_arm(Arm::Signal, solution.lambda_s_nm)?,
        ws.design_arm(Arm::Idler, solution.lambda_i_nm)?,
    ];
    let stability = ws.stability_report(&solution)?;
    let aligned = ws.expected_aligned_aggregate()?;
    let klyshko = pair_rate_and_heralding(&aligned)?;

    let mut t = Table::new();
    t.section("inputs");
    t.row("pump wavelength", fmt_f(cfg.pump.lambda_nm, 4), "nm");
    t.row("pump bandwidth", fmt_f(cfg.pump.bandwidth_nm, 4), "nm");
    t.row("pump power", fmt_f(cfg.pump.power_mw, 4), "mW");
    t.row("crystal material", cfg.crystal.material.clone(), "-");
    t.row("crystal length", fmt_f(cfg.crystal.length_mm, 3), "mm");
    t.row(
        "poling period (reference)",
        fmt_f(cfg.crystal.poling_period_um, 4),
        "um",
    );
    t.row(
        "crystal temperature",
        fmt_f(cfg.crystal.temperature_c, 2),
        "degC",
    );
    t.row("displacer material", cfg.displacer.material.clone(), "-");
    t.row("displacer length", fmt_f(cfg.displacer.length_mm, 3), "mm");
    t.row(
        "displacer optic-axis angle",
        fmt_f(cfg.displacer.optic_angle_deg, 2),
        "deg",
    );
    t.row(
        "displacer temperature",
        fmt_f(cfg.displacer.temperature_c, 2),
        "degC",
    );
    t.row("wedge material", cfg.wedges.material.clone(), "-");
    t.row("wedge angle", fmt_f(cfg.wedges.wedge_angle_deg, 2), "deg");
    t.row(
        "wedge temperature",
        fmt_f(cfg.wedges.temperature_c, 2),
        "degC",
    );
    t.row("seed", cfg.seed.to_string(), "-");

    t.section("phase matching");
    t.row("signal wavelength", fmt_f(solution.lambda_s_nm, 6), "nm");
    t.row("idler wavelength", fmt_f(solution.lambda_i_nm, 6), "nm");
    t.row("poling period at temperature", fmt_f(period_at, 6), "um");
    t.row(
        "residual mismatch",
        format!("{:.3e}", solution.residual_per_m),
        "1/m",
    );
    t.row(
        "signal spectral width",
        fmt_f(solution.delta_omega_s_rad_per_s / 1e12, 6),
        "rad/ps",
    );
    t.row(
        "idler spectral width",
        fmt_f(solution.delta_omega_i_rad_per_s / 1e12, 6),
        "rad/ps",
    );
    t.row("signal correlation time", fmt_f(solution.tau_s_ps, 6), "ps");
    t.row("idler correlation time", fmt_f(solution.tau_i_ps, 6), "ps");

    t.section("displacer walk-off");
    t.row(
        "pump lateral displacement",
        fmt_f(walkoff.pump_displacement_mm, 6),
        "mm",
    );
    for (entry, label) in walkoff.entries.iter().zip(["signal", "idler"]) {
        t.row(
            &format!("{label} spatial walk-off dD"),
            fmt_f(entry.delta_d_mm, 6),
            "mm",
        );
        t.row(
            &format!("{label} temporal walk-off dT"),
            fmt_f(entry.delta_t_ps, 6),
            "ps",
        );
    }

    for arm in &arms {
        let label = Workspace::arm_label(arm.arm);
        let comp = ws.arm_compensation(arm.arm);
        t.section(&format!("{label} wedge pair"));
        t.row("wavelength", fmt_f(arm.lambda_nm, 6), "nm");
        t.row(
            "measured walk-off to merge",
            fmt_f(comp.measured_walkoff_mm, 4),
            "mm",
        );
        t.row("designed separation d", fmt_f(arm.design.d_mm, 6), "mm");
        t.row(
            "exit angle (ordinary)",
            fmt_f(arm.design.exit_theta_o_deg, 6),
            "deg",
        );
        t.row(
            "exit angle (extraordinary)",
            fmt_f(arm.design.exit_theta_e_deg, 6),
            "deg",
        );
        t.row(
            "trace residual separation",
            fmt_f(arm.design.residual_delta_d_um, 6),
            "um",
        );
        t.row(
            "trace vs model delay",
            fmt_f(arm.design.residual_delta_t_fs, 6),
            "fs",
        );
        t.row("delay to cancel", fmt_f(comp.initial_delay_ps, 4), "ps");
        t.row(
            "solved total thickness",
            fmt_f(arm.thickness.total_thickness_mm, 6),
            "mm",
        );
        t.row(
            "per-wedge thickness",
            fmt_f(arm.thickness.per_wedge_thickness_mm, 6),
            "mm",
        );
        t.row(
            "mounting",
            if arm.thickness.orientation_flipped {
                "flipped"
            } else {
                "natural"
            },
            "-",
        );
        t.row(
            "thin-gap rule-of-thumb thickness",
            fmt_f(arm.thickness.closed_form_comparison_mm, 6),
            "mm",
        );
        if let Some(res) = arm.residual_delay_fs {
            t.row("residual delay after pair", fmt_f(res, 6), "fs");
        }
    }

    t.section("mode overlap");
    let mut predicted_rate_factor = 1.0;
    for arm in [Arm::Signal, Arm::Idler] {
        let label = Workspace::arm_label(arm);
        let comp = ws.arm_compensation(arm);
        let beam = GaussianBeam::from_fwhm(ws.arm_fwhm_mm(arm))?;
        let ov = gaussian_overlap(&beam, &beam, comp.measured_walkoff_mm);
        predicted_rate_factor *= ov;
        t.row(
            &format!("{label} beam FWHM"),
            fmt_f(beam.fwhm_mm(), 4),
            "mm",
        );
        t.row(
            &format!("{label} beam sigma"),
            fmt_f(beam.sigma_mm, 6),
            "mm",
        );
        t.row(
            &format!("{label} overlap at measured walk-off"),
            fmt_f(ov, 6),
            "1",
        );
    }
    let targets = [
        (
            "signal",
            cfg.beams.target_overlap_s,
            cfg.wedges.signal.measured_walkoff_mm,
        ),
        (
            "idler",
            cfg.beams.target_overlap_i,
            cfg.wedges.idler.measured_walkoff_mm,
        ),
    ];
    for (label, target, walkoff_mm) in targets {
        if let Some(target) = target {
            t.row(
                &format!("{label} quoted coupling factor"),
                fmt_f(target, 4),
                "1",
            );
            t.row(
                &format!("{label} implied mode sigma"),
                fmt_f(width_from_overlap_mm(target, walkoff_mm)?, 6),
                "mm",
            );
        }
    }
    t.row(
        "predicted rate factor (both arms)",
        fmt_f(predicted_rate_factor, 6),
        "1",
    );

    t.section("expected counts and entanglement");
    t.row(
        "pair rate at pump power",
        fmt_f(cfg.detection.pair_rate_per_mw_hz * cfg.pump.power_mw, 3),
        "Hz",
    );
    t.row("expected signal singles", fmt_f(aligned.ns_hz, 3), "Hz");
    t.row("expected idler singles", fmt_f(aligned.ni_hz, 3), "Hz");
    t.row(
        "expected coincidences (basis avg)",
        fmt_f(aligned.n_hz, 3),
        "Hz",
    );
    t.row("Klyshko pair rate", fmt_f(klyshko.pair_rate_hz, 3), "Hz");
    t.row(
        "Klyshko heralding (signal)",
        fmt_f(klyshko.heralding_s * 100.0, 4),
        "%",
    );
    t.row(
        "Klyshko heralding (idler)",
        fmt_f(klyshko.heralding_i * 100.0, 4),
        "%",
    );
    if let (Some(bs), Some(bi)) = (cfg.detection.budget_eta_s, cfg.detection.budget_eta_i) {
        t.row("budget efficiency (signal)", fmt_f(bs * 100.0, 4), "%");
        t.row("budget efficiency (idler)", fmt_f(bi * 100.0, 4), "%");
        t.row(
            "unaccounted loss factor (signal)",
            fmt_f(bs / cfg.detection.eta_s, 4),
            "1",
        );
        t.row(
            "unaccounted loss factor (idler)",
            fmt_f(bi / cfg.detection.eta_i, 4),
            "1",
        );
    }
    t.row(
        "mean fringe visibility",
        fmt_f(cfg.state.mean_visibility(), 6),
        "1",
    );
    t.row(
        "expected CHSH S",
        fmt_f(expected_chsh_s(&cfg.state), 6),
        "1",
    );

    t.section("thermal phase drift");
    t.row("baseline", fmt_f(cfg.stability.baseline_c, 2), "degC");
    t.row("excursion", fmt_f(cfg.stability.excursion_k, 3), "K");
    for (entry, label) in stability
        .per_wavelength
        .iter()
        .zip(["pump", "signal", "idler"])
    {
        t.row(
            &format!("{label} relative drift"),
            fmt_f(entry.relative_rad / std::f64::consts::PI, 6),
            "pi rad",
        );
    }
    t.row(
        "state phase drift (compensated)",
        fmt_f(stability.delta_phi_r_rad / std::f64::consts::PI, 6),
        "pi rad",
    );
    t.row(
        "drift without self-compensation",
        fmt_f(
            stability.delta_phi_uncompensated_rad / std::f64::consts::PI,
            6,
        ),
        "pi rad",
    );

    let text = t.render();
    write_text(&ws.out_dir.join("design_report.txt"), &text)?;
    Ok(text)
}

pub fn cmd_sweep(ws: &Workspace) -> Result<String> {
    let sweep = ws.config.sweep.as_ref().ok_or_else(|| {
        Error::config("the sweep command needs a [sweep] section in the configuration")
    })?;
    let solution = ws.solve()?;
    let lambda_nm = ws.arm_lambda_nm(sweep.arm, &solution);
    let arm = ws.design_arm(sweep.arm, lambda_nm)?;
    let beam = GaussianBeam::from_fwhm(ws.arm_fwhm_mm(sweep.arm))?;
    let points = sweep_lateral_separation(
        &ws.db,
        &arm.design,
        &beam,
        &beam,
        &sweep.separations_mm,
        lambda_nm,
        ws.config.wedges.temperature_c,
    )?;

    let mut csv = String::from("d_mm,residual_dD_um,overlap,relative_rate\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f(p.d_mm, 4),
            fmt_f(p.residual_delta_d_um, 6),
            fmt_f(p.overlap, 6),
            fmt_f(p.relative_rate, 6)
        );
    }
    let label = Workspace::arm_label(sweep.arm);
    let path = ws.out_dir.join(format!("sweep_{label}.csv"));
    write_text(&path, &csv)?;

    let best = points
        .iter()
        .max_by(|a, b| a.overlap.partial_cmp(&b.overlap).unwrap())
        .expect("separations validated non-empty");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "wedge separation sweep, {label} arm at {} nm",
        fmt_f(lambda_nm, 3)
    );
    let _ = writeln!(out, "designed separation {} mm", fmt_f(arm.design.d_mm, 6));
    let _ = writeln!(
        out,
        "best sampled separation {} mm (overlap {})",
        fmt_f(best.d_mm, 4),
        fmt_f(best.overlap, 6)
    );
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(out)
}

pub fn cmd_simulate(ws: &Workspace) -> Result<String> {
    let sim = ws.config.simulation.as_ref().ok_or_else(|| {
        Error::config("the simulate command needs a [simulation] section in the configuration")
    })?;
    let det = ws.config.detection.model();
    let state = &ws.config.state;
    let seed = ws.config.seed;
    let power = ws.config.pump.power_mw;

    // one contiguous substream numbering across all three artifact groups
    let mut scan_settings = Vec::new();
    for &theta_i in &[0.0, 45.0, 90.0, 135.0] {
        let mut theta_s = 0.0;
        while theta_s < 180.0 - 1e-9 {
            scan_settings.push((theta_s, theta_i));
            theta_s += sim.scan_step_deg;
        }
    }
    let scan = simulate_experiment_streams(
        state,
        &det,
        power,
        &scan_settings,
        sim.duration_s,
        sim.bg_subtracted,
        seed,
        0,
    )?;
    let mut stream = scan_settings.len() as u64;

    let chsh_set = chsh_settings();
    let chsh = simulate_experiment_streams(
        state,
        &det,
        power,
        &chsh_set,
        sim.duration_s,
        sim.bg_subtracted,
        seed,
        stream,
    )?;
    stream += chsh_set.len() as u64;

    let aligned = [(0.0, 0.0), (45.0, 45.0), (90.0, 90.0), (135.0, 135.0)];
    let mut power_records = Vec::new();
    let mut summary =
        String::from("power_mw,pair_rate_hz,pair_rate_sigma_hz,heralding_s,heralding_i\n");
    for &p in &sim.powers_mw {
        let block = simulate_experiment_streams(
            state,
            &det,
            p,
            &aligned,
            sim.duration_s,
            sim.bg_subtracted,
            seed,
            stream,
        )?;
        stream += aligned.len() as u64;
        let agg = aggregate_counts(&block)?;
        let k = pair_rate_and_heralding(&agg)?;
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            fmt_f(p, 4),
            fmt_f(k.pair_rate_hz, 6),
            fmt_f(k.pair_rate_uncertainty_hz, 6),
            fmt_f(k.heralding_s, 8),
            fmt_f(k.heralding_i, 8)
        );
        power_records.extend(block);
    }

    let scan_path = ws.out_dir.join("correlation_scan.csv");
    let chsh_path = ws.out_dir.join("chsh_counts.csv");
    let power_path = ws.out_dir.join("power_scan.csv");
    let summary_path = ws.out_dir.join("power_scan_summary.csv");
    write_count_records_csv(&scan_path, &scan)?;
    write_count_records_csv(&chsh_path, &chsh)?;
    write_count_records_csv(&power_path, &power_records)?;
    write_text(&summary_path, &summary)?;

    let chsh_result = chsh_from_records(&chsh)?;
    let mut out = String::new();
    let _ = writeln!(out, "simulated {} correlation-scan records", scan.len());
    let _ = writeln!(
        out,
        "CHSH from simulated counts: S = {} +- {} ({} sigma above 2)",
        fmt_f(chsh_result.s, 4),
        fmt_f(chsh_result.uncertainty, 4),
        fmt_f(chsh_result.n_sigma_above_2, 1)
    );
    for path in [&scan_path, &chsh_path, &power_path, &summary_path] {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    Ok(out)
}

pub fn cmd_stability(ws: &Workspace) -> Result<String> {
    let solution = ws.solve()?;
    let report = ws.stability_report(&solution)?;
    let pi = std::f64::consts::PI;
    let mut t = Table::new();
    t.section("thermal phase budget");
    t.row("baseline", fmt_f(ws.config.stability.baseline_c, 2), "degC");
    t.row("excursion", fmt_f(ws.config.stability.excursion_k, 3), "K");
    for (entry, label) in report
        .per_wavelength
        .iter()
        .zip(["pump", "signal", "idler"])
    {
        t.row(
            &format!("{label} wavelength"),
            fmt_f(entry.lambda_nm, 6),
            "nm",
        );
        t.row(
            &format!("{label} drift, one direction"),
            fmt_f(entry.cw_rad / pi, 6),
            "pi rad",
        );
        t.row(
            &format!("{label} drift, counter direction"),
            fmt_f(entry.ccw_rad / pi, 6),
            "pi rad",
        );
        t.row(
            &format!("{label} relative drift"),
            fmt_f(entry.relative_rad / pi, 6),
            "pi rad",
        );
    }
    t.row(
        "state phase drift (compensated)",
        fmt_f(report.delta_phi_r_rad / pi, 6),
        "pi rad",
    );
    t.row(
        "drift without self-compensation",
        fmt_f(report.delta_phi_uncompensated_rad / pi, 6),
        "pi rad",
    );
    let text = t.render();
    write_text(&ws.out_dir.join("stability_report.txt"), &text)?;
    Ok(text)
}

pub fn cmd_analyze(ws: &Workspace) -> Result<String> {
    let section = ws.config.analyze.as_ref().ok_or_else(|| {
        Error::config(
            "the analyze command needs an [analyze] section with records_csv in the configuration",
        )
    })?;
    let records = crate::report::read_count_records_csv(Path::new(&section.records_csv))?;

    let mut t = Table::new();
    t.section("ingest");
    t.row("records", records.len().to_string(), "-");
    t.row("source", section.records_csv.clone(), "-");

    // fringe visibility per fixed-idler group
    let mut groups: Vec<(f64, Vec<CountRecord>)> = Vec::new();
    for r in &records {
        match groups
            .iter_mut()
            .find(|(ti, _)| (*ti - r.theta_i_deg).abs() < 1e-6)
        {
            Some((_, list)) => list.push(*r),
            None => groups.push((r.theta_i_deg, vec![*r])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    t.section("fringe visibility by idler setting");
    let mut any_group = false;
    for (theta_i, list) in &groups {
        if list.len() < 2 {
            continue;
        }
        let distinct_s = {
            let mut v: Vec<f64> = list.iter().map(|r| r.theta_s_deg).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            v.len()
        };
        if distinct_s < 2 {
            continue;
        }
        any_group = true;
        match visibility(list) {
            Ok(est) => {
                t.row(
                    &format!("idler at {} deg: visibility", fmt_f(*theta_i, 1)),
                    format!(
                        "{} +- {}",
                        fmt_f(est.visibility, 6),
                        fmt_f(est.uncertainty, 6)
                    ),
                    "1",
                );
                match est.fringe_max_deg {
                    Some(phase) => t.row(
                        &format!("idler at {} deg: fringe maximum", fmt_f(*theta_i, 1)),
                        fmt_f(phase, 3),
                        "deg",
                    ),
                    None => t.note(&format!(
                        "idler at {} deg: fringe maximum undefined (flat curve)",
                        fmt_f(*theta_i, 1)
                    )),
                }
            }
            Err(Error::UndefinedEstimate { what }) => {
                t.note(&format!(
                    "idler at {} deg: visibility undefined ({what})",
                    fmt_f(*theta_i, 1)
                ));
            }
            Err(e) => return Err(e),
        }
    }
    if !any_group {
        t.note("no scannable groups in the records");
    }

    t.section("CHSH");
    if records.len() == 16 {
        match chsh_from_records(&records) {
            Ok(res) => {
                t.row(
                    "S",
                    format!("{} +- {}", fmt_f(res.s, 6), fmt_f(res.uncertainty, 6)),
                    "1",
                );
                t.row(
                    "sigma above classical bound",
                    fmt_f(res.n_sigma_above_2, 2),
                    "1",
                );
            }
            Err(Error::InvalidRecords { message }) => {
                t.note(&format!("S not evaluated ({message})"));
            }
            Err(e) => return Err(e),
        }
    } else {
        t.note(&format!(
            "S not evaluated (need the 16 canonical settings, got {} records)",
            records.len()
        ));
    }

    t.section("Klyshko rates from the aggregate of all records");
    match pair_rate_and_heralding(&aggregate_counts(&records)?) {
        Ok(KlyshkoEstimate {
            pair_rate_hz,
            pair_rate_uncertainty_hz,
            heralding_s,
            heralding_s_uncertainty,
            heralding_i,
            heralding_i_uncertainty,
        }) => {
            t.row(
                "pair rate",
                format!(
                    "{} +- {}",
                    fmt_f(pair_rate_hz, 3),
                    fmt_f(pair_rate_uncertainty_hz, 3)
                ),
                "Hz",
            );
            t.row(
                "heralding (signal)",
                format!(
                    "{} +- {}",
                    fmt_f(heralding_s * 100.0, 4),
                    fmt_f(heralding_s_uncertainty * 100.0, 4)
                ),
                "%",
            );
            t.row(
                "heralding (idler)",
                format!(
                    "{} +- {}",
                    fmt_f(heralding_i * 100.0, 4),
                    fmt_f(heralding_i_uncertainty * 100.0, 4)
                ),
                "%",
            );
        }
        Err(Error::UndefinedEstimate { what }) => {
            t.note(&format!("pair rate undefined ({what})"));
        }
        Err(e) => return Err(e),
    }

    let text = t.render();
    write_text(&ws.out_dir.join("analysis_report.txt"), &text)?;
    Ok(text)
}
