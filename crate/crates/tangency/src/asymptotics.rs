//! Closed-form side of the analysis: discriminants, admissible-period sets,
//! hypothesis checkers, the quadratic that selects the stable orbit branch,
//! the four leading-order bifurcation predictors, and the k-fold local-map
//! expansion with its empirical error bound.

use thiserror::Error;

use crate::model::{extract_normal_form, u0_apply, ModelParams, NormalFormCoeffs, Point};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("discriminant of the branch quadratic is negative ({0}); past the fold")]
    ComplexRoot(f64),
    #[error("direction is degenerate for this scaling case")]
    DegenerateDirection,
    #[error("expansion precondition violated: |x-1| = {dx}, |y/alpha^k - 1| = {dy} exceed {limit}")]
    PreconditionViolated { dx: f64, dy: f64, limit: f64 },
}

/// Inputs for the reinjection discriminant.
#[derive(Clone, Copy, Debug)]
pub struct DiscriminantInputs {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub chi: i8,
}

impl From<&NormalFormCoeffs> for DiscriminantInputs {
    fn from(c: &NormalFormCoeffs) -> Self {
        DiscriminantInputs {
            c1: c.c1,
            c2: c.c2,
            d1: c.d1,
            d3: c.d3,
            d4: c.d4,
            d5: c.d5,
            chi: c.chi,
        }
    }
}

/// `(1 - c2 - chi d4)^2 - 4 d5 (d3 + chi c1)`, the discriminant evaluated at
/// the organizing centre where `d1` equals the sign `chi`.
pub fn discriminant(inputs: &DiscriminantInputs) -> f64 {
    let chi = inputs.chi as f64;
    let lin = 1.0 - inputs.c2 - chi * inputs.d4;
    lin * lin - 4.0 * inputs.d5 * (inputs.d3 + chi * inputs.c1)
}

/// The same combination with the actual `d1` value in place of its sign.
pub fn discriminant_d1(inputs: &DiscriminantInputs) -> f64 {
    let lin = 1.0 - inputs.c2 - inputs.d1 * inputs.d4;
    lin * lin - 4.0 * inputs.d5 * (inputs.d3 + inputs.c1 * inputs.d1)
}

/// The set of admissible periods: `k >= kmin` with `(lambda sigma)^k`
/// matching the sign of `d1`.
#[derive(Clone, Copy, Debug)]
pub struct KSet {
    pub kmin: i64,
    pub chi_eig: i8,
    pub d1_sign: i8,
}

impl KSet {
    pub fn new(kmin: i64, chi_eig: i8, d1_sign: i8) -> Self {
        KSet {
            kmin,
            chi_eig,
            d1_sign,
        }
    }

    pub fn contains(&self, k: i64) -> bool {
        if k < self.kmin {
            return false;
        }
        match (self.chi_eig, self.d1_sign) {
            (1, 1) => true,
            (1, -1) => false,
            (-1, 1) => k % 2 == 0,
            (-1, -1) => k.rem_euclid(2) == 1,
            _ => false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.chi_eig == 1 && self.d1_sign == -1
    }

    /// Members of the set within `[kmin, kmax]`.
    pub fn members_up_to(&self, kmax: i64) -> Vec<i64> {
        (self.kmin..=kmax).filter(|&k| self.contains(k)).collect()
    }
}

/// One hypothesis of the stability theorems, with its residual magnitude.
#[derive(Clone, Debug)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub residual: f64,
    pub pass: bool,
}

/// Structured pass/fail report for the hypotheses guaranteeing infinitely
/// many coexisting stable single-round orbits.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
    pub delta0: f64,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks `d2 = 0`, `|lambda sigma| = 1`, `|d1| = 1`, `a1 + b1 = 0`,
/// `d5 != 0`, `Delta > 0` and the `c2` window, reporting residuals.
pub fn check_conditions(coeffs: &NormalFormCoeffs, tol: f64) -> ConditionReport {
    let delta0 = discriminant(&coeffs.into());
    let mut checks = Vec::new();
    let mut push = |name: &'static str, residual: f64, pass: bool| {
        checks.push(ConditionCheck {
            name,
            residual,
            pass,
        })
    };
    push("d2 = 0", coeffs.d2.abs(), coeffs.d2.abs() <= tol);
    let ls = (coeffs.lambda * coeffs.sigma).abs() - 1.0;
    push("|lambda sigma| = 1", ls.abs(), ls.abs() <= tol);
    let d1res = (coeffs.d1.abs() - 1.0).abs();
    push("|d1| = 1", d1res, d1res <= tol);
    let res4 = (coeffs.a1 + coeffs.b1).abs();
    push("a1 + b1 = 0", res4, res4 <= tol);
    push("d5 != 0", coeffs.d5.abs(), coeffs.d5.abs() > tol);
    push("Delta > 0", delta0, delta0 > tol);
    let window = if delta0 > 0.0 {
        let upper = 1.0 - delta0.sqrt() / 2.0;
        let margin = (coeffs.c2 + 1.0).min(upper - coeffs.c2);
        (margin, margin > tol)
    } else {
        (f64::NEG_INFINITY, false)
    };
    push("-1 < c2 < 1 - sqrt(Delta)/2", window.0, window.1);
    ConditionReport { checks, delta0 }
}

/// First-order response of the reinjection and eigenvalue data to each
/// unfolding parameter. For the bundled family these are exact.
#[derive(Clone, Copy, Debug)]
pub struct UnfoldingDerivatives {
    /// Gradient of `c0`.
    pub p: [f64; 4],
    /// Gradient of `d1`.
    pub q: [f64; 4],
    /// Gradient of `d2`.
    pub r: [f64; 4],
    /// Gradient of `lambda`.
    pub s: [f64; 4],
    /// Gradient of `sigma`.
    pub t: [f64; 4],
}

impl Default for UnfoldingDerivatives {
    fn default() -> Self {
        UnfoldingDerivatives {
            p: [0.0; 4],
            q: [0.0, 0.0, 1.0, 0.0],
            r: [0.0; 4],
            s: [0.0, 1.0, 0.0, 0.0],
            t: [0.0; 4],
        }
    }
}

/// Rescales `mu` into the k-dependent blown-up coordinates: `mu1` by
/// `alpha^{2k}`, the rest by `alpha^k`.
pub fn mu_tilde(mu: [f64; 4], alpha: f64, k: u32) -> [f64; 4] {
    let ak = alpha.powi(k as i32);
    [mu[0] / (ak * ak), mu[1] / ak, mu[2] / ak, mu[3] / ak]
}

/// Coefficients `P`, `Q` of the quadratic `chi d5 psi^2 - P psi + Q = 0`
/// selecting the orbit height correction.
pub fn pq_terms(
    coeffs: &NormalFormCoeffs,
    unf: &UnfoldingDerivatives,
    mu_tilde: [f64; 4],
    k: u32,
) -> (f64, f64) {
    let chi = coeffs.chi as f64;
    let chi_eig = coeffs.chi_eig as f64;
    let alpha = coeffs.lambda;
    let mut p = 1.0 - coeffs.c2 - chi * coeffs.d4;
    let mut q = chi * mu_tilde[0] + coeffs.c1 + chi * coeffs.d3;
    for i in 1..4 {
        p -= chi * unf.r[i] * mu_tilde[i];
        q += (unf.p[i] + chi * unf.q[i]) * mu_tilde[i];
        q += (unf.s[i] / alpha + alpha * chi_eig * unf.t[i]) * mu_tilde[i] * k as f64;
    }
    (p, q)
}

/// The root of the branch quadratic that continues the stable orbit.
pub fn psi_k(
    coeffs: &NormalFormCoeffs,
    unf: &UnfoldingDerivatives,
    mu_tilde: [f64; 4],
    k: u32,
) -> Result<f64, AsymptoticsError> {
    let (p, q) = pq_terms(coeffs, unf, mu_tilde, k);
    let chi_d5 = coeffs.chi as f64 * coeffs.d5;
    let disc = p * p - 4.0 * chi_d5 * q;
    if disc < 0.0 {
        return Err(AsymptoticsError::ComplexRoot(disc));
    }
    Ok((p - disc.sqrt()) / (2.0 * chi_d5))
}

/// The k-dependent rate at which bifurcation values shrink.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rate {
    /// `alpha^{2k}` — transverse to the tangency surface.
    AlphaTwoK,
    /// `alpha^k / k` — tangent to the tangency surface, transverse to the
    /// eigenvalue-product surface.
    AlphaKOverK,
    /// `alpha^k` — global-resonance breaking.
    AlphaK,
    /// `1/k` — resonance-term breaking.
    OneOverK,
}

impl Rate {
    pub fn value(&self, alpha: f64, k: u32) -> f64 {
        let ak = alpha.powi(k as i32);
        match self {
            Rate::AlphaTwoK => ak * ak,
            Rate::AlphaKOverK => ak / k as f64,
            Rate::AlphaK => ak,
            Rate::OneOverK => 1.0 / k as f64,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Rate::AlphaTwoK => "alpha^2k",
            Rate::AlphaKOverK => "alpha^k/k",
            Rate::AlphaK => "alpha^k",
            Rate::OneOverK => "1/k",
        }
    }
}

/// Which scaling regime a parameter ray falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingCase {
    /// `v1 != 0`: transverse to the tangency surface.
    Case1Mu1,
    /// `v1 = 0`, `n_eig . v != 0`.
    Case2Mu2,
    /// The third coordinate ray (breaks `d1 = 1`).
    Case3Mu3,
    /// The fourth coordinate ray (breaks `a1 + b1 = 0`).
    Case4Mu4,
    /// Tangent to both surfaces, no bundled predictor.
    GeneralTangent,
    /// Transverse, non-coordinate direction.
    GeneralTransverse,
}

impl ScalingCase {
    pub fn rate(&self) -> Rate {
        match self {
            ScalingCase::Case1Mu1 | ScalingCase::GeneralTransverse => Rate::AlphaTwoK,
            ScalingCase::Case2Mu2 => Rate::AlphaKOverK,
            ScalingCase::Case3Mu3 | ScalingCase::GeneralTangent => Rate::AlphaK,
            ScalingCase::Case4Mu4 => Rate::OneOverK,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ScalingCase::Case1Mu1 => "case1",
            ScalingCase::Case2Mu2 => "case2",
            ScalingCase::Case3Mu3 => "case3",
            ScalingCase::Case4Mu4 => "case4",
            ScalingCase::GeneralTangent => "general_tangent",
            ScalingCase::GeneralTransverse => "general_transverse",
        }
    }
}

/// Leading-order limits of the scaled saddle-node and period-doubling
/// bifurcation values along a ray.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticPrediction {
    pub case: ScalingCase,
    pub sn_limit: f64,
    pub pd_limit: f64,
    pub rate: Rate,
    pub alpha: f64,
}

impl AsymptoticPrediction {
    /// Predicted saddle-node bifurcation value at period offset `k`.
    pub fn epsilon_sn(&self, k: u32) -> f64 {
        self.sn_limit * self.rate.value(self.alpha, k)
    }

    /// Predicted period-doubling bifurcation value at period offset `k`.
    pub fn epsilon_pd(&self, k: u32) -> f64 {
        self.pd_limit * self.rate.value(self.alpha, k)
    }
}

/// Gradient of `lambda(mu) sigma(mu)` at `mu = 0`, by central differences of
/// the extracted eigenvalue data. For the bundled family this equals
/// `[0, 1/alpha, 0, 0]` exactly.
pub fn n_eig(params: &ModelParams) -> [f64; 4] {
    let base = params.at_center();
    let h = 1e-6;
    let mut grad = [0.0; 4];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut mp = [0.0; 4];
        mp[i] = h;
        let mut mm = [0.0; 4];
        mm[i] = -h;
        let cp = extract_normal_form(&base.with_mu(mp));
        let cm = extract_normal_form(&base.with_mu(mm));
        *g = (cp.lambda * cp.sigma - cm.lambda * cm.sigma) / (2.0 * h);
    }
    grad
}

/// Normal vector to the tangency surface; for this family `d0(mu) = mu1`.
pub fn n_tang() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

pub fn dot4(a: [f64; 4], b: [f64; 4]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Leading-order bifurcation predictors for the requested scaling case,
/// evaluated at the organizing centre of `params`.
pub fn predict(
    case: ScalingCase,
    params: &ModelParams,
    v: [f64; 4],
) -> Result<AsymptoticPrediction, AsymptoticsError> {
    let center = params.at_center();
    let coeffs = extract_normal_form(&center);
    let alpha = center.alpha;
    let delta0 = discriminant(&(&coeffs).into());
    let one_minus_c2 = 1.0 - coeffs.c2;
    let (sn, pd, rate) = match case {
        ScalingCase::Case1Mu1 | ScalingCase::GeneralTransverse => {
            let denom = 4.0 * coeffs.d5 * v[0];
            if denom.abs() < 1e-14 {
                return Err(AsymptoticsError::DegenerateDirection);
            }
            (
                delta0 / denom,
                (delta0 - 4.0 * one_minus_c2 * one_minus_c2) / denom,
                Rate::AlphaTwoK,
            )
        }
        ScalingCase::Case2Mu2 => {
            let nv = dot4(n_eig(params), v);
            let denom = 4.0 * coeffs.d5 * coeffs.chi as f64 * coeffs.chi_eig as f64 * nv;
            if denom.abs() < 1e-14 {
                return Err(AsymptoticsError::DegenerateDirection);
            }
            (
                delta0 / denom,
                (delta0 - 4.0 * one_minus_c2 * one_minus_c2) / denom,
                Rate::AlphaKOverK,
            )
        }
        ScalingCase::Case3Mu3 => {
            let c = one_minus_c2 * one_minus_c2 / (4.0 * coeffs.d5);
            (c, -3.0 * c, Rate::AlphaK)
        }
        ScalingCase::Case4Mu4 => {
            let c = one_minus_c2 * one_minus_c2 / (4.0 * coeffs.d5);
            (c, -3.0 * c, Rate::OneOverK)
        }
        ScalingCase::GeneralTangent => return Err(AsymptoticsError::DegenerateDirection),
    };
    Ok(AsymptoticPrediction {
        case,
        sn_limit: sn,
        pd_limit: pd,
        rate,
        alpha,
    })
}

/// Default smallness limit for the expansion precondition.
pub const EXPANSION_PRECONDITION_LIMIT: f64 = 0.1;

fn check_expansion_precondition(
    p: Point,
    k: u32,
    params: &ModelParams,
    limit: f64,
) -> Result<(), AsymptoticsError> {
    let ak = params.alpha.powi(k as i32);
    let dx = (p.x - 1.0).abs();
    let dy = (p.y / ak - 1.0).abs();
    if dx > limit || dy > limit {
        return Err(AsymptoticsError::PreconditionViolated { dx, dy, limit });
    }
    Ok(())
}

/// Leading-order expansion of the k-fold local map:
/// `(lambda^k x (1 + k a1 x y), sigma^k y (1 + k b1 x y))`.
pub fn t0k_expansion(p: Point, k: u32, params: &ModelParams) -> Result<Point, AsymptoticsError> {
    check_expansion_precondition(p, k, params, EXPANSION_PRECONDITION_LIMIT)?;
    let c = extract_normal_form(params);
    let xy = p.x * p.y;
    Ok(Point::new(
        c.lambda.powi(k as i32) * p.x * (1.0 + k as f64 * c.a1 * xy),
        c.sigma.powi(k as i32) * p.y * (1.0 + k as f64 * c.b1 * xy),
    ))
}

/// Componentwise error of the expansion against exact iteration of the local
/// branch, scaled by `alpha^k` in `x` and `1` in `y`.
pub fn lemma71_error(
    p: Point,
    k: u32,
    params: &ModelParams,
) -> Result<(f64, f64), AsymptoticsError> {
    let approx = t0k_expansion(p, k, params)?;
    let mut q = p;
    for _ in 0..k {
        q = u0_apply(q, params);
    }
    let ak = params.alpha.powi(k as i32);
    Ok(((q.x - approx.x).abs() / ak, (q.y - approx.y).abs()))
}
