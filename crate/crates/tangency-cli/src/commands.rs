//! The four subcommands: portrait, sweep, verify, predict. Each writes its
//! artifacts into the configured output directory with the effective config
//! echoed in every file header, gathers parallel per-k results into sorted
//! tables, and maps failures onto the documented exit codes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;

use tangency::asymptotics::{
    check_conditions, discriminant, lemma71_error, predict, ScalingCase,
};
use tangency::model::{extract_normal_form, ModelParams};
use tangency::orbit::find_periodic_orbit_opt;
use tangency::portrait::build_portrait;
use tangency::scan::{fits_from_results, scan_range, BifurcationKind, DirectionRay, ScanError};

use crate::config::{ConfigEcho, RunConfig};
use crate::scripts;

/// Command failures carrying their exit code: 2 bad config, 3 solver
/// failure (verification failures exit 1 via the verify report instead).
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Solver(String),
    Io(String),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Solver(m) => write!(f, "solver failure: {m}"),
            AppError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl AppError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Config(_) => ExitCode::from(2),
            AppError::Solver(_) => ExitCode::from(3),
            // An unwritable output directory is a configuration problem.
            AppError::Io(_) => ExitCode::from(2),
        }
    }
}

/// 17-significant-digit float formatting used in every CSV cell.
fn cell(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_artifact(out_dir: &Path, name: &str, contents: &str) -> Result<(), AppError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| AppError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// portrait
// ---------------------------------------------------------------------------

pub fn cmd_portrait(cfg: &RunConfig) -> Result<ExitCode, AppError> {
    let data = build_portrait(&cfg.params, cfg.k_max)
        .map_err(|e| AppError::Solver(e.to_string()))?;

    let mut csv = cfg.header_lines("portrait");
    csv.push_str("entity,index,x,y\n");
    let mut push = |entity: &str, index: u32, x: f64, y: f64| {
        csv.push_str(&format!("{entity},{index},{},{}\n", cell(x), cell(y)));
    };
    for (i, arc) in data.arcs.iter().enumerate() {
        let entity = if arc.branch.label().starts_with("unstable") {
            "unstable_manifold"
        } else {
            "stable_manifold"
        };
        for p in &arc.points {
            push(entity, i as u32, p.x, p.y);
        }
    }
    for orbit in &data.orbits {
        for p in &orbit.points {
            push("orbit", orbit.k, p.x, p.y);
        }
    }
    for (i, p) in data.fixed_points.iter().enumerate() {
        push("fixed_point", i as u32, p.x, p.y);
    }
    for p in &data.homoclinic_points {
        push("homoclinic", 0, p.x, p.y);
    }

    write_artifact(&cfg.out, "portrait.csv", &csv)?;
    write_artifact(&cfg.out, "plot_portrait.py", scripts::PLOT_PORTRAIT)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn cmd_sweep(cfg: &RunConfig) -> Result<ExitCode, AppError> {
    let ray = cfg.ray();
    if ray.case == ScalingCase::GeneralTangent {
        return Err(AppError::Config(
            "direction admits no leading-order predictor (tangent to both normals)".into(),
        ));
    }
    let opts = cfg.scan_options();
    let results = scan_range(cfg.k_min, cfg.k_max, &ray, &cfg.params, &opts);

    let case_label = ray.case.label();
    let mut csv = cfg.header_lines("sweep");
    csv.push_str("case,kind,k,epsilon,scaled_value,status\n");
    let mut n_ok = 0usize;
    for (k, res) in &results {
        match res {
            Ok((sn, pd)) => {
                n_ok += 1;
                // PD sorts before SN within each k (kind, alphabetically).
                for b in [pd, sn] {
                    csv.push_str(&format!(
                        "{case_label},{},{k},{},{},ok\n",
                        b.kind.label(),
                        cell(b.epsilon),
                        cell(b.scaled_value),
                    ));
                }
            }
            Err(e) => {
                let msg = e.to_string().replace(',', ";");
                csv.push_str(&format!("{case_label},,{k},,,error: {msg}\n"));
            }
        }
    }
    write_artifact(&cfg.out, "bifurcations.csv", &csv)?;

    if n_ok == 0 {
        return Err(AppError::Solver(format!(
            "no bifurcation pair found for any k in {}..={}",
            cfg.k_min, cfg.k_max
        )));
    }

    let prediction = predict(ray.case, &cfg.params, ray.v)
        .map_err(|e| AppError::Config(e.to_string()))?;
    let mut fits_csv = cfg.header_lines("sweep");
    fits_csv.push_str("case,kind,fitted_limit,fit_residual,predicted_limit,rate\n");
    match fits_from_results(&ray, &cfg.params, &results) {
        Ok((sn_fit, pd_fit)) => {
            let rate = prediction.rate.label();
            for (kind, fit, limit) in [
                (BifurcationKind::PeriodDoubling, &pd_fit, prediction.pd_limit),
                (BifurcationKind::SaddleNode, &sn_fit, prediction.sn_limit),
            ] {
                fits_csv.push_str(&format!(
                    "{case_label},{},{},{},{},{rate}\n",
                    kind.label(),
                    cell(fit.extrapolated_limit),
                    cell(fit.fit_residual),
                    cell(limit),
                ));
            }
        }
        Err(ScanError::InsufficientPoints { needed, got }) => {
            fits_csv.push_str(&format!(
                "# no fit: only {got} of the required {needed} periods produced bifurcation pairs\n"
            ));
        }
        Err(e) => return Err(AppError::Solver(e.to_string())),
    }
    write_artifact(&cfg.out, "fits.csv", &fits_csv)?;
    write_artifact(&cfg.out, "plot_sweep.py", scripts::PLOT_SWEEP)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

pub fn cmd_predict(cfg: &RunConfig) -> Result<ExitCode, AppError> {
    let ray = cfg.ray();
    let prediction = predict(ray.case, &cfg.params, ray.v)
        .map_err(|e| AppError::Config(e.to_string()))?;
    let mut csv = cfg.header_lines("predict");
    csv.push_str("case,kind,limit,rate\n");
    for (kind, limit) in [
        (BifurcationKind::PeriodDoubling, prediction.pd_limit),
        (BifurcationKind::SaddleNode, prediction.sn_limit),
    ] {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            ray.case.label(),
            kind.label(),
            cell(limit),
            prediction.rate.label(),
        ));
    }
    write_artifact(&cfg.out, "predictions.csv", &csv)?;
    println!(
        "{}: SN scaled limit {}, PD scaled limit {}, rate {}",
        ray.case.label(),
        prediction.sn_limit,
        prediction.pd_limit,
        prediction.rate.label(),
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct Check {
    check: String,
    status: String,
    value: f64,
    bound: f64,
}

impl Check {
    fn passfail(check: &str, value: f64, bound: f64) -> Check {
        Check {
            check: check.to_string(),
            status: if value.is_finite() && value <= bound { "pass" } else { "fail" }.to_string(),
            value,
            bound,
        }
    }

    fn failed(&self) -> bool {
        self.status != "pass"
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    config: ConfigEcho,
    checks: Vec<Check>,
}

/// Relative tolerance on the extrapolated scaled limits, per regime.
fn fit_tolerance(case: ScalingCase) -> f64 {
    match case {
        ScalingCase::Case1Mu1 | ScalingCase::GeneralTransverse => 0.02,
        ScalingCase::Case2Mu2 | ScalingCase::Case3Mu3 => 0.03,
        ScalingCase::Case4Mu4 | ScalingCase::GeneralTangent => 0.05,
    }
}

fn orbit_checks(cfg: &RunConfig, checks: &mut Vec<Check>) {
    let params = &cfg.params;
    let opts = cfg.scan_options();
    let k_hi = cfg.k_max.clamp(5, 25);

    // Orbit existence: residual of the k = 1..15 single-round orbits.
    let mut max_residual: f64 = 0.0;
    let mut solved = true;
    let orbit_at = |k: u32| find_periodic_orbit_opt(k, params, None, &opts.newton);
    for k in 1..=15u32.min(cfg.k_max.max(1)) {
        match orbit_at(k) {
            Ok(o) => max_residual = max_residual.max(o.residual),
            Err(_) => solved = false,
        }
    }
    checks.push(Check::passfail(
        "orbit_residual",
        if solved { max_residual } else { f64::MAX },
        1e-10,
    ));

    // Multiplier moduli of the saddle-area fixed point (k = 0).
    let expected = ((-params.c20) * (1.0 + params.mu[2])).abs().sqrt();
    let value = match orbit_at(0) {
        Ok(o) => o
            .multipliers
            .iter()
            .map(|m| (m.norm() - expected).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::MAX,
    };
    checks.push(Check::passfail("fixed_point_multiplier", value, 1e-9));

    // tau_k -> 0, delta_k -> 1/2 and y_k -> 1 at their asymptotic rates,
    // with constants calibrated at k = 5 (x 1.2 headroom).
    let rate1 = |k: u32| k as f64 * params.alpha.powi(k as i32);
    let rate2 = |k: u32| {
        let a = params.alpha.powi(k as i32);
        (k * k) as f64 * a * a
    };
    match orbit_at(5) {
        Ok(o5) => {
            let c_tau = 1.2 * o5.trace.abs() / rate1(5);
            let c_del = 1.2 * (o5.det - 0.5).abs() / rate1(5);
            let c_y = 1.2 * (o5.start().y - 1.0).abs() / rate2(5);
            let mut worst: f64 = 0.0;
            for k in 5..=k_hi {
                match orbit_at(k) {
                    Ok(o) => {
                        worst = worst
                            .max(o.trace.abs() / (c_tau * rate1(k)))
                            .max((o.det - 0.5).abs() / (c_del * rate1(k)))
                            .max((o.start().y - 1.0).abs() / (c_y * rate2(k)));
                    }
                    Err(_) => worst = f64::MAX,
                }
            }
            checks.push(Check::passfail("trace_det_height_rates", worst, 1.0));
        }
        Err(_) => checks.push(Check::passfail("trace_det_height_rates", f64::MAX, 1.0)),
    }
}

fn lemma71_check(params: &ModelParams, checks: &mut Vec<Check>) {
    // Expansion error over 10 sample points near (1, alpha^k), measured
    // against k^2 alpha^{2k}; the ratio may not grow beyond 1.1x its k = 8
    // value across k = 8..24.
    let ratio_at = |k: u32| -> f64 {
        let ak = params.alpha.powi(k as i32);
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            let f = 0.96 + 0.08 * i as f64 / 9.0;
            let p = tangency::model::Point::new(f, ak * (2.0 - f));
            match lemma71_error(p, k, params) {
                Ok((ex, ey)) => worst = worst.max(ex.max(ey) / ((k * k) as f64 * ak * ak)),
                Err(_) => worst = f64::MAX,
            }
        }
        worst
    };
    let base = ratio_at(8);
    let mut value: f64 = 0.0;
    for k in 8..=24 {
        value = value.max(ratio_at(k) / base);
    }
    checks.push(Check::passfail("lemma71_error_ratio", value, 1.1));
}

fn fit_checks(cfg: &RunConfig, ray: &DirectionRay, checks: &mut Vec<Check>) {
    let tol = fit_tolerance(ray.case);
    let prediction = match predict(ray.case, &cfg.params, ray.v) {
        Ok(p) => p,
        Err(e) => {
            checks.push(Check {
                check: "scaled_fit".into(),
                status: format!("fail: {e}"),
                value: f64::MAX,
                bound: tol,
            });
            return;
        }
    };
    let opts = cfg.scan_options();
    let results = scan_range(cfg.k_min, cfg.k_max, ray, &cfg.params, &opts);
    match fits_from_results(ray, &cfg.params, &results) {
        Ok((sn_fit, pd_fit)) => {
            for (name, fit, limit) in [
                ("scaled_fit_sn", &sn_fit, prediction.sn_limit),
                ("scaled_fit_pd", &pd_fit, prediction.pd_limit),
            ] {
                let value = (fit.extrapolated_limit / limit - 1.0).abs();
                checks.push(Check::passfail(name, value, tol));
            }
            // Sign structure: every located pair has epsilon_SN > 0 > epsilon_PD
            // relative to the ray orientation chosen by the predictor.
            let mut worst: f64 = 0.0;
            for (_, res) in &results {
                if let Ok((sn, pd)) = res {
                    worst = worst.max(-sn.scaled_value.signum() * prediction.sn_limit.signum());
                    worst = worst.max(-pd.scaled_value.signum() * prediction.pd_limit.signum());
                }
            }
            checks.push(Check::passfail("bifurcation_signs", worst, 0.0));
        }
        Err(ScanError::InsufficientPoints { needed, got }) => {
            checks.push(Check {
                check: "scaled_fit".into(),
                status: "insufficient points".into(),
                value: got as f64,
                bound: needed as f64,
            });
        }
        Err(e) => {
            checks.push(Check {
                check: "scaled_fit".into(),
                status: format!("fail: {e}"),
                value: f64::MAX,
                bound: tol,
            });
        }
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<ExitCode, AppError> {
    let params = &cfg.params;
    let mut checks = Vec::new();

    // Hypothesis checks of the resonance conditions at the configured
    // parameters, plus the positive discriminant that the scaling laws need.
    let coeffs = extract_normal_form(params);
    for c in check_conditions(&coeffs, 1e-9).checks {
        checks.push(Check {
            check: format!("condition_{}", c.name),
            status: if c.pass { "pass" } else { "fail" }.to_string(),
            value: c.residual,
            bound: 1e-9,
        });
    }
    let delta0 = discriminant(&(&coeffs).into());
    checks.push(Check {
        check: "discriminant_positive".into(),
        status: if delta0 > 0.0 { "pass" } else { "fail" }.to_string(),
        value: delta0,
        bound: 0.0,
    });

    orbit_checks(cfg, &mut checks);
    lemma71_check(params, &mut checks);
    fit_checks(cfg, &cfg.ray(), &mut checks);

    let report = VerifyReport { config: cfg.echo(), checks };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_artifact(&cfg.out, "verify_report.json", &format!("{json}\n"))?;

    let mut all_pass = true;
    for c in &report.checks {
        println!("{:<28} {:<20} value={:.6e} bound={:.6e}", c.check, c.status, c.value, c.bound);
        all_pass &= !c.failed();
    }
    if all_pass {
        println!("verify: all {} checks pass", report.checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verify: FAILED");
        Ok(ExitCode::from(1))
    }
}
