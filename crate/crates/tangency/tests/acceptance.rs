//! Acceptance gate: the eleven end-to-end criteria of the study, each
//! printing a single pass/fail line. Run with `--nocapture` to see the
//! lines on success; on failure the report is printed by the panic.

use tangency::asymptotics::{lemma71_error, KSet};
use tangency::model::{
    blend_weight, f_apply, f_jacobian, u0_apply, u0_jacobian, u1_jacobian, ModelParams, Point,
};
use tangency::orbit::{find_periodic_orbit, Stability};
use tangency::scan::{
    fits_from_results, scan_range, stability_indicators_at, DirectionRay, PerKResult, ScanOptions,
};

struct Gate {
    lines: Vec<String>,
    all_pass: bool,
}

impl Gate {
    fn record(&mut self, number: u32, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        let line = format!("criterion {number:2} {name}: {verdict} ({detail})");
        println!("{line}");
        self.lines.push(line);
        self.all_pass &= pass;
    }
}

fn coordinate_scans(params: &ModelParams) -> Vec<(DirectionRay, Vec<PerKResult>)> {
    let opts = ScanOptions::default();
    (1..=4)
        .map(|i| {
            let ray = DirectionRay::coordinate(i);
            let results = scan_range(8, 22, &ray, params, &opts);
            (ray, results)
        })
        .collect()
}

fn criterion_1_coexistence(params: &ModelParams, gate: &mut Gate) {
    let mut pass = true;
    let mut worst_residual: f64 = 0.0;
    for k in 1..=15 {
        match find_periodic_orbit(k, params, None) {
            Ok(o) => {
                worst_residual = worst_residual.max(o.residual);
                pass &= o.residual <= 1e-10;
                pass &= o.multipliers.iter().all(|m| m.norm() < 1.0);
                pass &= o.stability == Stability::Stable;
            }
            Err(_) => pass = false,
        }
    }
    let fp_dev = match find_periodic_orbit(0, params, None) {
        Ok(o) => o
            .multipliers
            .iter()
            .map(|m| (m.norm() - 0.5f64.sqrt()).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::MAX,
    };
    pass &= fp_dev <= 1e-9;
    gate.record(
        1,
        "coexistence k=1..15",
        pass,
        format!("max residual {worst_residual:.2e}, fixed-point multiplier deviation {fp_dev:.2e}"),
    );
}

fn criterion_scaling(
    number: u32,
    name: &str,
    scan: &(DirectionRay, Vec<PerKResult>),
    params: &ModelParams,
    sn_limit: f64,
    pd_limit: f64,
    tol: f64,
    gate: &mut Gate,
) {
    let (ray, results) = scan;
    let (pass, detail) = match fits_from_results(ray, params, results) {
        Ok((sn, pd)) => {
            let dev_sn = (sn.extrapolated_limit / sn_limit - 1.0).abs();
            let dev_pd = (pd.extrapolated_limit / pd_limit - 1.0).abs();
            (
                dev_sn <= tol && dev_pd <= tol,
                format!(
                    "SN limit {:.6} vs {sn_limit} ({:.2}%), PD limit {:.6} vs {pd_limit} ({:.2}%)",
                    sn.extrapolated_limit,
                    100.0 * dev_sn,
                    pd.extrapolated_limit,
                    100.0 * dev_pd,
                ),
            )
        }
        Err(e) => (false, format!("fit failed: {e}")),
    };
    gate.record(number, name, pass, detail);
}

fn criterion_6_signs(scans: &[(DirectionRay, Vec<PerKResult>)], gate: &mut Gate) {
    let mut pass = true;
    let mut pairs = 0;
    for (_, results) in scans {
        for (_, res) in results {
            if let Ok((sn, pd)) = res {
                pairs += 1;
                pass &= sn.epsilon > 0.0 && pd.epsilon < 0.0;
            }
        }
    }
    gate.record(
        6,
        "sign structure eps_SN > 0 > eps_PD",
        pass && pairs > 0,
        format!("{pairs} bifurcation pairs checked"),
    );
}

fn criterion_7_stability_window(params: &ModelParams, gate: &mut Gate) {
    let ray = DirectionRay::coordinate(1);
    let k = 12;
    let (pass, detail) = match tangency::scan::locate_bifurcations(k, &ray, params) {
        Ok((sn, pd)) => {
            let width = sn.epsilon - pd.epsilon;
            let mut pass = true;
            for i in 0..10 {
                let eps = pd.epsilon + width * (i + 1) as f64 / 11.0;
                match stability_indicators_at(k, eps, &ray, params, None) {
                    Ok((_, orbit)) => pass &= orbit.stability == Stability::Stable,
                    Err(_) => pass = false,
                }
            }
            // 5% of the window beyond either endpoint: past the fold the
            // orbit is gone, past the doubling it persists but is unstable.
            let beyond_sn = match stability_indicators_at(k, sn.epsilon + 0.05 * width, &ray, params, None)
            {
                Ok((_, orbit)) => orbit.stability != Stability::Stable,
                Err(_) => true,
            };
            let beyond_pd = match stability_indicators_at(k, pd.epsilon - 0.05 * width, &ray, params, None)
            {
                Ok((_, orbit)) => orbit.stability != Stability::Stable,
                Err(_) => true,
            };
            pass &= beyond_sn && beyond_pd;
            (
                pass,
                format!("window ({:.3e}, {:.3e})", pd.epsilon, sn.epsilon),
            )
        }
        Err(e) => (false, format!("window location failed: {e}")),
    };
    gate.record(7, "stability window at k=12", pass, detail);
}

fn criterion_8_trace_det(params: &ModelParams, gate: &mut Gate) {
    let rate = |k: u32| k as f64 * params.alpha.powi(k as i32);
    let (pass, detail) = match find_periodic_orbit(5, params, None) {
        Ok(o5) => {
            let c_tau = 1.2 * o5.trace.abs() / rate(5);
            let c_del = 1.2 * (o5.det - 0.5).abs() / rate(5);
            let mut worst: f64 = 0.0;
            let mut pass = true;
            for k in 5..=25 {
                match find_periodic_orbit(k, params, None) {
                    Ok(o) => {
                        worst = worst
                            .max(o.trace.abs() / (c_tau * rate(k)))
                            .max((o.det - 0.5).abs() / (c_del * rate(k)));
                    }
                    Err(_) => pass = false,
                }
            }
            (pass && worst <= 1.0, format!("worst normalized bound use {worst:.3}"))
        }
        Err(e) => (false, format!("k=5 orbit failed: {e}")),
    };
    gate.record(8, "trace/determinant rates k=5..25", pass, detail);
}

fn criterion_9_lemma71(params: &ModelParams, gate: &mut Gate) {
    let ratio_at = |k: u32| -> f64 {
        let ak = params.alpha.powi(k as i32);
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            let f = 0.96 + 0.08 * i as f64 / 9.0;
            let p = Point::new(f, ak * (2.0 - f));
            match lemma71_error(p, k, params) {
                Ok((ex, ey)) => worst = worst.max(ex.max(ey) / ((k * k) as f64 * ak * ak)),
                Err(_) => worst = f64::MAX,
            }
        }
        worst
    };
    let base = ratio_at(8);
    let mut worst: f64 = 0.0;
    for k in 8..=24 {
        worst = worst.max(ratio_at(k) / base);
    }
    gate.record(
        9,
        "expansion error ratio k=8..24",
        worst <= 1.1,
        format!("max ratio {worst:.4} of the k=8 value (bound 1.1)"),
    );
}

fn criterion_10_rates(scans: &[(DirectionRay, Vec<PerKResult>)], params: &ModelParams, gate: &mut Gate) {
    let alpha = params.alpha;
    let eps_sn = |results: &Vec<PerKResult>, k: u32| -> Option<f64> {
        results.iter().find_map(|(kk, res)| {
            if *kk == k {
                res.as_ref().ok().map(|(sn, _)| sn.epsilon.abs())
            } else {
                None
            }
        })
    };
    let mut pass = true;
    let mut details = Vec::new();
    // Directions 1..3: successive-|eps| ratios approach the case rate ratio.
    for (index, target) in [(0usize, alpha * alpha), (1, alpha), (2, alpha)] {
        let results = &scans[index].1;
        for k in [20u32, 21] {
            match (eps_sn(results, k), eps_sn(results, k + 1)) {
                (Some(a), Some(b)) => {
                    let dev = (b / a / target - 1.0).abs();
                    pass &= dev <= 0.10;
                    if k == 20 {
                        details.push(format!("d{} ratio dev {:.3}", index + 1, dev));
                    }
                }
                _ => pass = false,
            }
        }
    }
    // Direction 4: k |eps_k| bounded with shrinking increments.
    let results = &scans[3].1;
    let seq: Vec<f64> = (12..=22)
        .filter_map(|k| eps_sn(results, k).map(|e| k as f64 * e))
        .collect();
    pass &= seq.len() == 11;
    pass &= seq.iter().all(|s| *s > 0.0 && *s < 2.0);
    for w in seq.windows(3) {
        pass &= (w[2] - w[1]).abs() <= 1.05 * (w[1] - w[0]).abs();
    }
    details.push(format!(
        "d4 k|eps| tail {:.4} -> {:.4}",
        seq.first().copied().unwrap_or(f64::NAN),
        seq.last().copied().unwrap_or(f64::NAN)
    ));
    gate.record(10, "rate identification", pass, details.join(", "));
}

fn criterion_11_properties(params: &ModelParams, gate: &mut Gate) {
    let mut pass = true;
    let mut notes = Vec::new();

    // C1 seam continuity of the blended map at both strip edges.
    let delta = 1e-13;
    let mut seam_dev: f64 = 0.0;
    for y in [params.h0(), params.h1()] {
        for x in [0.3, 0.9, 1.1] {
            let lo = Point::new(x, y - delta);
            let hi = Point::new(x, y + delta);
            let (flo, fhi) = (f_apply(lo, params), f_apply(hi, params));
            let (jlo, jhi) = (f_jacobian(lo, params), f_jacobian(hi, params));
            seam_dev = seam_dev
                .max(flo.dist_sup(&fhi))
                .max((jlo.a11 - jhi.a11).abs())
                .max((jlo.a12 - jhi.a12).abs())
                .max((jlo.a21 - jhi.a21).abs())
                .max((jlo.a22 - jhi.a22).abs());
        }
    }
    pass &= seam_dev <= 1e-9;
    notes.push(format!("seam {seam_dev:.1e}"));

    // Jacobian against central finite differences.
    let h = 1e-6;
    let mut fd_dev: f64 = 0.0;
    for p in [Point::new(0.4, 0.3), Point::new(0.9, 0.88), Point::new(1.05, 0.97)] {
        let j = f_jacobian(p, params);
        let dx = (f_apply(Point::new(p.x + h, p.y), params), f_apply(Point::new(p.x - h, p.y), params));
        let dy = (f_apply(Point::new(p.x, p.y + h), params), f_apply(Point::new(p.x, p.y - h), params));
        fd_dev = fd_dev
            .max((j.a11 - (dx.0.x - dx.1.x) / (2.0 * h)).abs())
            .max((j.a21 - (dx.0.y - dx.1.y) / (2.0 * h)).abs())
            .max((j.a12 - (dy.0.x - dy.1.x) / (2.0 * h)).abs())
            .max((j.a22 - (dy.0.y - dy.1.y) / (2.0 * h)).abs());
    }
    pass &= fd_dev <= 1e-5;
    notes.push(format!("fd {fd_dev:.1e}"));

    // Resonance determinant identity of the local branch.
    let mut det_dev: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let p = Point::new(0.2 + 0.2 * i as f64, 0.1 + 0.15 * j as f64);
            let xy = p.x * p.y;
            let expected = 1.0 - 3.0 * params.a10 * params.a10 * xy * xy;
            det_dev = det_dev.max((u0_jacobian(p, params).det() - expected).abs());
        }
    }
    pass &= det_dev <= 1e-12;
    notes.push(format!("det {det_dev:.1e}"));

    // Monodromy trace/determinant is invariant under cyclic shifts.
    match find_periodic_orbit(10, params, None) {
        Ok(orbit) => {
            let jacs: Vec<_> = orbit
                .points
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    if i == 0 {
                        u1_jacobian(p, params)
                    } else {
                        u0_jacobian(p, params)
                    }
                })
                .collect();
            let n = jacs.len();
            let monodromy = |start: usize| {
                let mut m = tangency::model::Mat2::identity();
                for step in 0..n {
                    m = jacs[(start + step) % n].mul(&m);
                }
                m
            };
            let base = monodromy(0);
            let mut shift_dev: f64 = 0.0;
            for start in 1..n {
                let m = monodromy(start);
                shift_dev = shift_dev
                    .max((m.trace() - base.trace()).abs() / base.trace().abs().max(1.0))
                    .max((m.det() - base.det()).abs() / base.det().abs().max(1.0));
            }
            pass &= shift_dev <= 1e-8;
            notes.push(format!("monodromy {shift_dev:.1e}"));
        }
        Err(_) => pass = false,
    }

    // K-set parity against direct sign evaluation up to k = 100.
    let mut parity_ok = true;
    for chi_eig in [1i8, -1] {
        for d1_sign in [1i8, -1] {
            let set = KSet::new(1, chi_eig, d1_sign);
            for k in 1..=100i64 {
                let sign = if chi_eig == 1 || k % 2 == 0 { 1 } else { -1 };
                parity_ok &= set.contains(k) == (sign == d1_sign as i64);
            }
        }
    }
    pass &= parity_ok;
    notes.push(format!("k-set parity {}", if parity_ok { "ok" } else { "broken" }));

    // Blend weight stays a unit-interval ramp.
    pass &= (blend_weight(0.0), blend_weight(1.0)) == (0.0, 1.0);
    pass &= u0_apply(Point::new(0.0, 0.0), params).dist_sup(&Point::new(0.0, 0.0)) == 0.0;

    gate.record(11, "property suites", pass, notes.join(", "));
}

#[test]
fn acceptance() {
    let params = ModelParams::default();
    let mut gate = Gate {
        lines: Vec::new(),
        all_pass: true,
    };

    criterion_1_coexistence(&params, &mut gate);

    let scans = coordinate_scans(&params);
    criterion_scaling(2, "case 1 scaled limits", &scans[0], &params, 0.5625, -1.6875, 0.02, &mut gate);
    criterion_scaling(3, "case 2 scaled limits", &scans[1], &params, 0.45, -1.35, 0.03, &mut gate);
    criterion_scaling(4, "case 3 scaled limits", &scans[2], &params, 0.5625, -1.6875, 0.03, &mut gate);
    criterion_scaling(5, "case 4 scaled limits", &scans[3], &params, 0.5625, -1.6875, 0.05, &mut gate);
    criterion_6_signs(&scans, &mut gate);
    criterion_7_stability_window(&params, &mut gate);
    criterion_8_trace_det(&params, &mut gate);
    criterion_9_lemma71(&params, &mut gate);
    criterion_10_rates(&scans, &params, &mut gate);
    criterion_11_properties(&params, &mut gate);

    assert!(
        gate.all_pass,
        "acceptance criteria failed:\n{}",
        gate.lines.join("\n")
    );
}
