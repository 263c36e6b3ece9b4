//! Bifurcation location along parameter rays: outward bracketing with
//! warm-started orbit continuation, augmented-system Newton refinement of
//! the saddle-node and period-doubling points, and scaled-sequence fits
//! against the leading-order limits.

use thiserror::Error;

use crate::asymptotics::{dot4, n_eig, predict, AsymptoticPrediction, ScalingCase};
use crate::exec;
use crate::model::{ModelParams, Point};
use crate::orbit::{
    find_periodic_orbit_opt, round_map_with_jacobian, NewtonOptions, OrbitError, PeriodicOrbit,
    StabilityIndicators,
};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("no orbit at the ray origin for k = {k}")]
    NoBaseOrbit { k: u32 },
    #[error("no bifurcation found for k = {k} within 10x the predicted magnitude")]
    NoBifurcationInRange { k: u32 },
    #[error("refinement of the {kind:?} point failed for k = {k}")]
    RefinementFailed { kind: BifurcationKind, k: u32 },
    #[error("the two sides of the ray located the same bifurcation kind for k = {k}")]
    AmbiguousSides { k: u32 },
    #[error("direction admits no leading-order predictor")]
    DegenerateDirection,
    #[error("only {got} of the required {needed} periods produced bifurcation pairs")]
    InsufficientPoints { needed: usize, got: usize },
}

/// Scan-level solver knobs: the per-orbit Newton options plus the
/// handover width of the fold bisection.
#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub newton: NewtonOptions,
    /// Relative bracket width, in units of the predicted epsilon magnitude,
    /// at which the convergence-success bisection stops and the augmented
    /// Newton solve takes over.
    pub bisect_rel_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            newton: NewtonOptions::default(),
            bisect_rel_tol: 1e-2,
        }
    }
}

/// A direction in parameter space together with its scaling regime.
#[derive(Clone, Copy, Debug)]
pub struct DirectionRay {
    pub v: [f64; 4],
    pub case: ScalingCase,
}

impl DirectionRay {
    /// Coordinate ray `e_i` (1-based index).
    pub fn coordinate(index: usize) -> Self {
        let mut v = [0.0; 4];
        v[index - 1] = 1.0;
        let case = match index {
            1 => ScalingCase::Case1Mu1,
            2 => ScalingCase::Case2Mu2,
            3 => ScalingCase::Case3Mu3,
            4 => ScalingCase::Case4Mu4,
            _ => panic!("direction index must be 1..=4"),
        };
        DirectionRay { v, case }
    }

    /// Classifies an arbitrary direction. Coordinate rays map onto their
    /// named cases; otherwise `v1 != 0` selects the transverse regime and a
    /// nonzero projection on the eigenvalue normal the tangent one.
    pub fn from_vector(v: [f64; 4], params: &ModelParams) -> Self {
        for i in 0..4 {
            let mut e = [0.0; 4];
            e[i] = v[i];
            if v == e && v[i] != 0.0 {
                let mut ray = DirectionRay::coordinate(i + 1);
                ray.v = v;
                return ray;
            }
        }
        let case = if v[0] != 0.0 {
            ScalingCase::GeneralTransverse
        } else if dot4(n_eig(params), v).abs() > 1e-12 {
            ScalingCase::Case2Mu2
        } else {
            ScalingCase::GeneralTangent
        };
        DirectionRay { v, case }
    }

    pub fn rate(&self, alpha: f64, k: u32) -> f64 {
        self.case.rate().value(alpha, k)
    }

    pub fn mu_at(&self, epsilon: f64, base: &ModelParams) -> [f64; 4] {
        let mut mu = base.mu;
        for i in 0..4 {
            mu[i] += epsilon * self.v[i];
        }
        mu
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BifurcationKind {
    SaddleNode,
    PeriodDoubling,
}

impl BifurcationKind {
    pub fn label(&self) -> &'static str {
        match self {
            BifurcationKind::SaddleNode => "SN",
            BifurcationKind::PeriodDoubling => "PD",
        }
    }

    fn test_function(&self, ind: &StabilityIndicators) -> f64 {
        match self {
            BifurcationKind::SaddleNode => ind.g_sn,
            BifurcationKind::PeriodDoubling => ind.g_pd,
        }
    }
}

/// A located bifurcation on a ray.
#[derive(Clone, Copy, Debug)]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub k: u32,
    pub epsilon: f64,
    /// `epsilon` divided by the case rate.
    pub scaled_value: f64,
    pub indicators_at: StabilityIndicators,
    /// Orbit point at the bifurcation.
    pub orbit_start: Point,
}

/// A scaled bifurcation sequence and its extrapolated limit.
#[derive(Clone, Debug)]
pub struct ScalingFit {
    pub sequence: Vec<(u32, f64)>,
    pub extrapolated_limit: f64,
    pub fit_residual: f64,
}

/// Orbit indicators at `mu = epsilon v`, warm-startable.
pub fn stability_indicators_at(
    k: u32,
    epsilon: f64,
    ray: &DirectionRay,
    params: &ModelParams,
    warm_seed: Option<Point>,
) -> Result<(StabilityIndicators, PeriodicOrbit), ScanError> {
    stability_indicators_at_opt(k, epsilon, ray, params, warm_seed, &ScanOptions::default())
}

pub fn stability_indicators_at_opt(
    k: u32,
    epsilon: f64,
    ray: &DirectionRay,
    params: &ModelParams,
    warm_seed: Option<Point>,
    opts: &ScanOptions,
) -> Result<(StabilityIndicators, PeriodicOrbit), ScanError> {
    let p = params.with_mu(ray.mu_at(epsilon, params));
    let orbit = find_periodic_orbit_opt(k, &p, warm_seed, &opts.newton)?;
    Ok((orbit.indicators(), orbit))
}

/// Residual of the augmented bifurcation system at `(x, y, epsilon)`:
/// the first-return fixed-point defect and the bifurcation test function.
fn augmented_residual(
    z: [f64; 3],
    k: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    kind: BifurcationKind,
    opts: &ScanOptions,
) -> Option<[f64; 3]> {
    let p = params.with_mu(ray.mu_at(z[2], params));
    let (q, m) = round_map_with_jacobian(Point::new(z[0], z[1]), k, &p, opts.newton.escape_bound).ok()?;
    let ind = StabilityIndicators::new(m.trace(), m.det());
    Some([q.x - z[0], q.y - z[1], kind.test_function(&ind)])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for c in (row + 1)..3 {
            s -= a[row][c] * x[c];
        }
        if a[row][row].abs() < 1e-300 {
            return None;
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Newton on the augmented system `(f^{k+1}(p) - p, g) = 0` in the unknowns
/// `(x, y, epsilon)`. Converges to the fold point for the saddle-node test
/// function (where the plain fixed-point Jacobian is singular but the
/// augmented one is not) and to the multiplier `-1` crossing for the
/// period-doubling one.
fn refine_bifurcation(
    k: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    kind: BifurcationKind,
    guess: [f64; 3],
    eps_scale: f64,
    opts: &ScanOptions,
) -> Result<BifurcationPoint, ScanError> {
    let fail = || ScanError::RefinementFailed { kind, k };
    let mut z = guess;
    let scale = [
        z[0].abs().max(params.alpha.powi(k as i32)),
        1.0,
        eps_scale.abs().max(1e-300),
    ];
    let norm = |r: &[f64; 3]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut res = augmented_residual(z, k, ray, params, kind, opts).ok_or_else(fail)?;
    for _ in 0..60 {
        if norm(&res) <= 1e-11 {
            break;
        }
        // Finite-difference Jacobian, column by column.
        let mut jac = [[0.0f64; 3]; 3];
        for col in 0..3 {
            let h = 1e-6 * scale[col];
            let mut zp = z;
            zp[col] += h;
            let mut zm = z;
            zm[col] -= h;
            let rp = augmented_residual(zp, k, ray, params, kind, opts).ok_or_else(fail)?;
            let rm = augmented_residual(zm, k, ray, params, kind, opts).ok_or_else(fail)?;
            for row in 0..3 {
                jac[row][col] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let d = solve3(jac, [-res[0], -res[1], -res[2]]).ok_or_else(fail)?;
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..12 {
            let trial = [z[0] + step * d[0], z[1] + step * d[1], z[2] + step * d[2]];
            if let Some(r) = augmented_residual(trial, k, ray, params, kind, opts) {
                if norm(&r) < norm(&res) {
                    z = trial;
                    res = r;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if norm(&res) > 1e-10 {
        return Err(fail());
    }
    let p = params.with_mu(ray.mu_at(z[2], params));
    let (_, m) = round_map_with_jacobian(Point::new(z[0], z[1]), k, &p, opts.newton.escape_bound)?;
    let ind = StabilityIndicators::new(m.trace(), m.det());
    Ok(BifurcationPoint {
        kind,
        k,
        epsilon: z[2],
        scaled_value: z[2] / ray.rate(params.alpha, k),
        indicators_at: ind,
        orbit_start: Point::new(z[0], z[1]),
    })
}

struct SideResult {
    point: BifurcationPoint,
}

/// Marches outward on one side of the ray origin until a test function
/// changes sign or the orbit folds, then refines.
fn locate_on_side(
    k: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    prediction: &AsymptoticPrediction,
    sign: f64,
    base_orbit: &PeriodicOrbit,
    opts: &ScanOptions,
) -> Result<SideResult, ScanError> {
    let rate = ray.rate(params.alpha, k);
    let mag = prediction.sn_limit.abs().max(prediction.pd_limit.abs());
    let limit = 10.0 * rate * mag;
    let mut step = 0.1 * rate * prediction.sn_limit.abs().min(prediction.pd_limit.abs());
    let mut eps_prev = 0.0;
    let mut ind_prev = base_orbit.indicators();
    let mut orbit_prev = base_orbit.clone();

    loop {
        let eps = eps_prev + sign * step;
        if eps.abs() > limit {
            return Err(ScanError::NoBifurcationInRange { k });
        }
        match stability_indicators_at_opt(k, eps, ray, params, Some(orbit_prev.start()), opts) {
            Ok((ind, orbit)) => {
                let sn_crossed = ind.g_sn.signum() != ind_prev.g_sn.signum();
                let pd_crossed = ind.g_pd.signum() != ind_prev.g_pd.signum();
                if sn_crossed && pd_crossed {
                    // Tie-break: halve until the two events separate.
                    step *= 0.5;
                    if step < 1e-14 * rate {
                        return Err(ScanError::NoBifurcationInRange { k });
                    }
                    continue;
                }
                if sn_crossed || pd_crossed {
                    let kind = if sn_crossed {
                        BifurcationKind::SaddleNode
                    } else {
                        BifurcationKind::PeriodDoubling
                    };
                    let (g0, g1) = match kind {
                        BifurcationKind::SaddleNode => (ind_prev.g_sn, ind.g_sn),
                        BifurcationKind::PeriodDoubling => (ind_prev.g_pd, ind.g_pd),
                    };
                    let eps_guess = eps_prev + (eps - eps_prev) * g0 / (g0 - g1);
                    let start = orbit.start();
                    let point = refine_bifurcation(
                        k,
                        ray,
                        params,
                        kind,
                        [start.x, start.y, eps_guess],
                        rate * mag,
                        opts,
                    )?;
                    return Ok(SideResult { point });
                }
                eps_prev = eps;
                ind_prev = ind;
                orbit_prev = orbit;
            }
            Err(_) => {
                // Newton fold loss: the saddle-node lies between eps_prev and
                // eps. Bisect on convergence success to shrink the bracket,
                // then hand over to the augmented solve.
                let mut lo = eps_prev;
                let mut hi = eps;
                for _ in 0..30 {
                    if (hi - lo).abs() <= opts.bisect_rel_tol * rate * mag {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    match stability_indicators_at_opt(
                        k,
                        mid,
                        ray,
                        params,
                        Some(orbit_prev.start()),
                        opts,
                    ) {
                        Ok((ind, orbit)) => {
                            lo = mid;
                            ind_prev = ind;
                            orbit_prev = orbit;
                        }
                        Err(_) => hi = mid,
                    }
                }
                // On the stable branch g_sn^2 shrinks linearly in epsilon, so
                // extrapolate it to zero for the initial fold guess.
                let g = ind_prev.g_sn;
                let eps_guess = if g.abs() > 0.0 {
                    (lo + 0.25 * (hi - lo)).clamp(lo.min(hi), lo.max(hi))
                } else {
                    lo
                };
                let start = orbit_prev.start();
                let point = refine_bifurcation(
                    k,
                    ray,
                    params,
                    BifurcationKind::SaddleNode,
                    [start.x, start.y, eps_guess],
                    rate * mag,
                    opts,
                )?;
                return Ok(SideResult { point });
            }
        }
    }
}

/// Locates the saddle-node and period-doubling bifurcations bounding the
/// stability window of the period-(k+1) orbit along the ray. Returns
/// `(saddle_node, period_doubling)`.
pub fn locate_bifurcations(
    k: u32,
    ray: &DirectionRay,
    params: &ModelParams,
) -> Result<(BifurcationPoint, BifurcationPoint), ScanError> {
    locate_bifurcations_opt(k, ray, params, &ScanOptions::default())
}

pub fn locate_bifurcations_opt(
    k: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    opts: &ScanOptions,
) -> Result<(BifurcationPoint, BifurcationPoint), ScanError> {
    let prediction =
        predict(ray.case, params, ray.v).map_err(|_| ScanError::DegenerateDirection)?;
    let base = find_periodic_orbit_opt(k, params, None, &opts.newton)
        .map_err(|_| ScanError::NoBaseOrbit { k })?;
    let plus = locate_on_side(k, ray, params, &prediction, 1.0, &base, opts)?;
    let minus = locate_on_side(k, ray, params, &prediction, -1.0, &base, opts)?;
    match (plus.point.kind, minus.point.kind) {
        (BifurcationKind::SaddleNode, BifurcationKind::PeriodDoubling) => {
            Ok((plus.point, minus.point))
        }
        (BifurcationKind::PeriodDoubling, BifurcationKind::SaddleNode) => {
            Ok((minus.point, plus.point))
        }
        _ => Err(ScanError::AmbiguousSides { k }),
    }
}

/// Correction variable for the scaled sequences. The asymptotic error terms
/// differ per case (`O(k alpha^k)` or `O(1/k)`), but over any k range
/// reachable in doubles the `k alpha^k` corrections dominate `1/k` for every
/// direction (they only cross far beyond k = 30), so a single regressor
/// serves all cases.
fn correction_regressor(_case: ScalingCase, alpha: f64, k: u32) -> f64 {
    k as f64 * alpha.powi(k as i32)
}

/// Geometric per-k weight ratio of the extrapolation fit. Larger k gets
/// geometrically more weight, confining the quadratic correction model to
/// the tail where it is accurate while still smoothing over several points.
const FIT_WEIGHT_RATIO: f64 = 4.0;

/// Tail-weighted quadratic extrapolation: least squares of
/// `scaled = limit + b x + c x^2` in the correction variable `x`, with
/// weight `FIT_WEIGHT_RATIO^(k - k_max)`. A plain affine fit over a wide k
/// range is biased by the strongly curved small-k points; the weighted
/// quadratic recovers the analytic limits to well under a percent.
fn fit_scaled(case: ScalingCase, alpha: f64, seq: &[(u32, f64)]) -> ScalingFit {
    let k_max = seq.iter().map(|&(k, _)| k).max().expect("non-empty sequence");
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    let mut wsum = 0.0;
    for &(k, y) in seq {
        let x = correction_regressor(case, alpha, k);
        let w = FIT_WEIGHT_RATIO.powi(k as i32 - k_max as i32);
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * basis[i] * basis[j];
            }
            rhs[i] += w * basis[i] * y;
        }
        wsum += w;
    }
    let coef = solve3(m, rhs).expect("fit normal equations are regular");
    let mut ss = 0.0;
    for &(k, y) in seq {
        let x = correction_regressor(case, alpha, k);
        let w = FIT_WEIGHT_RATIO.powi(k as i32 - k_max as i32);
        let r = y - coef[0] - coef[1] * x - coef[2] * x * x;
        ss += w * r * r;
    }
    ScalingFit {
        sequence: seq.to_vec(),
        extrapolated_limit: coef[0],
        fit_residual: (ss / wsum).sqrt(),
    }
}

/// Minimum number of successful periods for a fit.
pub const MIN_FIT_POINTS: usize = 6;

pub type PerKResult = (u32, Result<(BifurcationPoint, BifurcationPoint), ScanError>);

/// Runs `locate_bifurcations` for each k in the range (in parallel with the
/// `parallel` feature), keeping per-k outcomes.
pub fn scan_range(
    k_min: u32,
    k_max: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    opts: &ScanOptions,
) -> Vec<PerKResult> {
    let ks: Vec<u32> = (k_min..=k_max).collect();
    exec::par_map(ks, |k| (k, locate_bifurcations_opt(k, ray, params, opts)))
}

/// Sequential twin of `scan_range`, used for benchmarking the parallel path.
pub fn scan_range_seq(
    k_min: u32,
    k_max: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    opts: &ScanOptions,
) -> Vec<PerKResult> {
    let ks: Vec<u32> = (k_min..=k_max).collect();
    exec::seq_map(ks, |k| (k, locate_bifurcations_opt(k, ray, params, opts)))
}

/// Scaled sequences over a k range plus extrapolated limits. Per-k failures
/// are dropped from the fit; at least `MIN_FIT_POINTS` successes are
/// required.
pub fn scaled_sequence(
    k_min: u32,
    k_max: u32,
    ray: &DirectionRay,
    params: &ModelParams,
) -> Result<(ScalingFit, ScalingFit), ScanError> {
    scaled_sequence_opt(k_min, k_max, ray, params, &ScanOptions::default())
}

pub fn scaled_sequence_opt(
    k_min: u32,
    k_max: u32,
    ray: &DirectionRay,
    params: &ModelParams,
    opts: &ScanOptions,
) -> Result<(ScalingFit, ScalingFit), ScanError> {
    let results = scan_range(k_min, k_max, ray, params, opts);
    fits_from_results(ray, params, &results)
}

/// Builds the SN and PD fits from per-k scan outcomes.
pub fn fits_from_results(
    ray: &DirectionRay,
    params: &ModelParams,
    results: &[PerKResult],
) -> Result<(ScalingFit, ScalingFit), ScanError> {
    let mut sn_seq = Vec::new();
    let mut pd_seq = Vec::new();
    for (k, res) in results {
        if let Ok((sn, pd)) = res {
            sn_seq.push((*k, sn.scaled_value));
            pd_seq.push((*k, pd.scaled_value));
        }
    }
    if sn_seq.len() < MIN_FIT_POINTS {
        return Err(ScanError::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            got: sn_seq.len(),
        });
    }
    Ok((
        fit_scaled(ray.case, params.alpha, &sn_seq),
        fit_scaled(ray.case, params.alpha, &pd_seq),
    ))
}
