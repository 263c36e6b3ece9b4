//! Newton solver for single-round periodic orbits. A single-round orbit of
//! period k+1 makes one excursion through the reinjection region and k
//! passes near the saddle, so one of its points is a fixed point of the
//! first-return composition `U0^k ∘ U1`. The solver works on that
//! composition; when every orbit point lies in the region where its piece
//! applies (the `U1` point above the upper seam, the `U0` points below the
//! lower seam) the solution is also, exactly, a periodic orbit of the
//! blended map, and the orbit is marked `realized`.

use num_complex::Complex64;
use thiserror::Error;

use crate::asymptotics::{mu_tilde, pq_terms, psi_k, UnfoldingDerivatives};
use crate::model::{
    extract_normal_form, f_apply, f_jacobian, u0_apply, u0_jacobian, u1_apply, u1_jacobian, Mat2,
    ModelParams, Point,
};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("Newton did not converge for k = {k} (residual {residual:.3e})")]
    NoConvergence { k: u32, residual: f64 },
    #[error("solution for k = {k} is degenerate, not a single-round orbit")]
    NotSingleRound { k: u32 },
    #[error("iterate escaped the bounding box at step {step}")]
    Escaped { step: u32 },
}

/// Solver knobs. The defaults reflect the conditioning of the composed map,
/// whose Jacobian entries grow like `alpha^{-k}`.
#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Step-size and residual threshold for full convergence.
    pub tol: f64,
    /// Largest residual accepted for an orbit.
    pub accept_residual: f64,
    pub max_iterations: u32,
    pub max_step_halvings: u32,
    /// Iterates leaving `[-bound, bound]^2` signal escape.
    pub escape_bound: f64,
    /// Tolerance used by stability classification.
    pub classify_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            accept_residual: 1e-10,
            max_iterations: 50,
            max_step_halvings: 10,
            escape_bound: 50.0,
            classify_tol: 1e-9,
        }
    }
}

/// Multiplier-based classification of a period-(k+m) orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    SaddleNodeCritical,
    PeriodDoublingCritical,
    Unstable,
}

/// Trace, determinant and the two bifurcation test functions of a monodromy
/// matrix.
#[derive(Clone, Copy, Debug)]
pub struct StabilityIndicators {
    pub tau: f64,
    pub delta: f64,
    /// `delta - tau + 1`; zero at a saddle-node.
    pub g_sn: f64,
    /// `delta + tau + 1`; zero at a period-doubling.
    pub g_pd: f64,
}

impl StabilityIndicators {
    pub fn new(tau: f64, delta: f64) -> Self {
        StabilityIndicators {
            tau,
            delta,
            g_sn: delta - tau + 1.0,
            g_pd: delta + tau + 1.0,
        }
    }
}

/// A located single-round period-(k+m) orbit.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub k: u32,
    pub m: u32,
    /// The k+m orbit points in round order, starting near `(alpha^k, 1)`
    /// with the reinjection point first.
    pub points: Vec<Point>,
    pub trace: f64,
    pub det: f64,
    pub multipliers: [Complex64; 2],
    /// Sup-norm of the first-return fixed-point residual at the first point.
    pub residual: f64,
    pub stability: Stability,
    /// True when every point lies strictly in the region where its map
    /// piece applies, so the orbit is also an exact periodic orbit of the
    /// blended map. False means the orbit exists in the round-composition
    /// sense only (some point falls inside or past the blend strip, which
    /// happens at small k where the excursion is wide).
    pub realized: bool,
}

impl PeriodicOrbit {
    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn indicators(&self) -> StabilityIndicators {
        StabilityIndicators::new(self.trace, self.det)
    }

    pub fn period(&self) -> u32 {
        self.k + self.m
    }
}

/// Applies the blended map `n` times, accumulating the product of step
/// Jacobians in orbit order.
pub fn iterate_with_jacobian(
    p: Point,
    n: u32,
    params: &ModelParams,
    escape_bound: f64,
) -> Result<(Point, Mat2), OrbitError> {
    let mut q = p;
    let mut j = Mat2::identity();
    for step in 0..n {
        if q.x.abs() > escape_bound || q.y.abs() > escape_bound || !q.is_finite() {
            return Err(OrbitError::Escaped { step });
        }
        j = f_jacobian(q, params).mul(&j);
        q = f_apply(q, params);
    }
    if !q.is_finite() {
        return Err(OrbitError::Escaped { step: n });
    }
    Ok((q, j))
}

/// One round of the first-return composition: `U1` once, then `U0` k times,
/// with the product of step Jacobians. For k = 0 this is `U1` alone.
pub fn round_map_with_jacobian(
    p: Point,
    k: u32,
    params: &ModelParams,
    escape_bound: f64,
) -> Result<(Point, Mat2), OrbitError> {
    let check = |q: &Point, step: u32| -> Result<(), OrbitError> {
        if q.x.abs() > escape_bound || q.y.abs() > escape_bound || !q.is_finite() {
            Err(OrbitError::Escaped { step })
        } else {
            Ok(())
        }
    };
    check(&p, 0)?;
    let mut j = u1_jacobian(p, params);
    let mut q = u1_apply(p, params);
    for step in 0..k {
        check(&q, step + 1)?;
        j = u0_jacobian(q, params).mul(&j);
        q = u0_apply(q, params);
    }
    check(&q, k + 1)?;
    Ok((q, j))
}

/// Stability from the monodromy trace and determinant. Critical labels are
/// assigned when a test function sits within `tol` of zero.
pub fn classify_stability(ind: &StabilityIndicators, tol: f64) -> Stability {
    if ind.g_sn.abs() <= tol {
        Stability::SaddleNodeCritical
    } else if ind.g_pd.abs() <= tol {
        Stability::PeriodDoublingCritical
    } else if ind.g_sn > tol && ind.g_pd > tol && 1.0 - ind.delta > tol {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Asymptotic seed `(lambda^k, 1 + psi_k alpha^k)` built from the selected
/// branch of the orbit-height quadratic.
pub fn asymptotic_seed(k: u32, params: &ModelParams) -> Point {
    let coeffs = extract_normal_form(params);
    let unf = UnfoldingDerivatives::default();
    let mt = mu_tilde(params.mu, params.alpha, k);
    let psi = match psi_k(&coeffs, &unf, mt, k) {
        Ok(v) => v,
        // Past the fold at leading order: seed from the double root and let
        // Newton decide.
        Err(_) => {
            let (p, _) = pq_terms(&coeffs, &unf, mt, k);
            p / (2.0 * coeffs.chi as f64 * coeffs.d5)
        }
    };
    let ak = params.alpha.powi(k as i32);
    Point::new(coeffs.lambda.powi(k as i32), 1.0 + psi * ak)
}

fn residual_at(p: Point, k: u32, params: &ModelParams, bound: f64) -> Option<f64> {
    round_map_with_jacobian(p, k, params, bound)
        .ok()
        .map(|(q, _)| q.dist_sup(&p))
}

/// Newton iteration on the first-return fixed-point equation with step
/// damping.
fn newton_fixed_point(
    seed: Point,
    k: u32,
    params: &ModelParams,
    opts: &NewtonOptions,
) -> Result<Point, OrbitError> {
    let mut p = seed;
    let mut res = match residual_at(p, k, params, opts.escape_bound) {
        Some(r) => r,
        None => {
            return Err(OrbitError::NoConvergence {
                k,
                residual: f64::INFINITY,
            })
        }
    };
    for _ in 0..opts.max_iterations {
        if res <= opts.tol {
            return Ok(p);
        }
        let (q, m) = round_map_with_jacobian(p, k, params, opts.escape_bound)
            .map_err(|_| OrbitError::NoConvergence { k, residual: res })?;
        let j = Mat2::new(m.a11 - 1.0, m.a12, m.a21, m.a22 - 1.0);
        let d = match j.solve([p.x - q.x, p.y - q.y]) {
            Some(d) => d,
            None => return Err(OrbitError::NoConvergence { k, residual: res }),
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_step_halvings {
            let trial = Point::new(p.x + scale * d[0], p.y + scale * d[1]);
            if let Some(r) = residual_at(trial, k, params, opts.escape_bound) {
                if r < res || r <= opts.tol {
                    let step = (scale * d[0]).abs().max((scale * d[1]).abs());
                    p = trial;
                    let converged = r <= opts.tol && step <= opts.tol;
                    res = r;
                    accepted = true;
                    if converged {
                        return Ok(p);
                    }
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= opts.accept_residual {
        Ok(p)
    } else {
        Err(OrbitError::NoConvergence { k, residual: res })
    }
}

fn build_orbit(
    p0: Point,
    k: u32,
    params: &ModelParams,
    opts: &NewtonOptions,
) -> Result<PeriodicOrbit, OrbitError> {
    let n = k + 1;
    let mut points = Vec::with_capacity(n as usize);
    points.push(p0);
    let mut q = u1_apply(p0, params);
    for _ in 0..k.saturating_sub(1) {
        points.push(q);
        q = u0_apply(q, params);
    }
    if k >= 1 {
        points.push(q);
        q = u0_apply(q, params);
    }
    let residual = q.dist_sup(&p0);
    let (_, monodromy) = round_map_with_jacobian(p0, k, params, opts.escape_bound)?;
    let trace = monodromy.trace();
    let det = monodromy.det();
    let ind = StabilityIndicators::new(trace, det);
    let stability = classify_stability(&ind, opts.classify_tol);

    // Degeneracy guard: a genuine single-round orbit has pairwise-distinct
    // points with the reinjection point on top. Coincident points mean
    // Newton landed on a lower-period solution.
    let scale = params.alpha.powi(k as i32).max(1e-6);
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            if a.dist_sup(b) <= 1e-6 * scale.min(1.0) {
                return Err(OrbitError::NotSingleRound { k });
            }
        }
    }
    if points[1..].iter().any(|p| p.y > points[0].y) {
        return Err(OrbitError::NotSingleRound { k });
    }

    // Region certificate: with the reinjection point above the upper seam
    // and every saddle-pass point below the lower seam, the same pieces are
    // what the blended map applies, so this is exactly one of its orbits.
    let realized = points[0].y >= params.h1() && points[1..].iter().all(|p| p.y <= params.h0());

    Ok(PeriodicOrbit {
        k,
        m: 1,
        points,
        trace,
        det,
        multipliers: monodromy.eigenvalues(),
        residual,
        stability,
        realized,
    })
}

/// Finds the single-round period-(k+1) orbit. Without a seed the asymptotic
/// seed is used, with one retry from the previous period's orbit scaled
/// down by `alpha`.
pub fn find_periodic_orbit(
    k: u32,
    params: &ModelParams,
    seed: Option<Point>,
) -> Result<PeriodicOrbit, OrbitError> {
    find_periodic_orbit_opt(k, params, seed, &NewtonOptions::default())
}

pub fn find_periodic_orbit_opt(
    k: u32,
    params: &ModelParams,
    seed: Option<Point>,
    opts: &NewtonOptions,
) -> Result<PeriodicOrbit, OrbitError> {
    if k == 0 {
        // Degenerate input: the fixed point near (1,1), reported as a
        // period-1 orbit.
        let p0 = newton_fixed_point(Point::new(1.0, 1.0), 0, params, opts)?;
        return build_orbit(p0, 0, params, opts);
    }
    let first = seed.unwrap_or_else(|| asymptotic_seed(k, params));
    match newton_fixed_point(first, k, params, opts).and_then(|p0| build_orbit(p0, k, params, opts))
    {
        Ok(orbit) => Ok(orbit),
        Err(err) => {
            if seed.is_some() {
                return Err(err);
            }
            // Retry ladder: continue from the previous period's orbit with
            // its start pulled in by one contraction factor.
            let prev = find_periodic_orbit_opt(k - 1, params, None, opts)?;
            let retry = Point::new(prev.start().x * params.alpha, prev.start().y);
            let p0 = newton_fixed_point(retry, k, params, opts).map_err(|_| err)?;
            build_orbit(p0, k, params, opts)
        }
    }
}
