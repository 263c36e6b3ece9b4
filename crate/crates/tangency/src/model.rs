//! The piecewise-defined C^1 map family, its two branches, the cubic blend
//! between them, and exact analytic Jacobians.
//!
//! The map acts on the plane as `U0` below the blend strip, `U1` above it,
//! and as a convex combination `(1 - r(y)) U0 + r(y) U1` inside the strip.
//! The origin is a saddle with eigenvalues `lambda = alpha + mu2` and
//! `sigma = 1/alpha`, and for `mu = 0` the stable and unstable manifolds of
//! the origin form a quadratic homoclinic tangency at `(1, 0)`.

use num_complex::Complex64;
use thiserror::Error;

/// A point in phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Sup-norm distance to another point.
    pub fn dist_sup(&self, other: &Point) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Row-major 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a11 * p.x + self.a12 * p.y,
            self.a21 * p.x + self.a22 * p.y,
        )
    }

    /// Eigenvalues, as a complex pair (real eigenvalues have zero imaginary part).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            [
                Complex64::new((tr + s) / 2.0, 0.0),
                Complex64::new((tr - s) / 2.0, 0.0),
            ]
        } else {
            let s = (-disc).sqrt();
            [
                Complex64::new(tr / 2.0, s / 2.0),
                Complex64::new(tr / 2.0, -s / 2.0),
            ]
        }
    }

    /// Solves `self * d = rhs` for `d`. Returns `None` when singular to
    /// working precision.
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.det();
        let scale = self
            .a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs());
        if det.abs() <= 1e-300 || det.abs() < 1e-16 * scale * scale {
            return None;
        }
        Some([
            (rhs[0] * self.a22 - rhs[1] * self.a12) / det,
            (rhs[1] * self.a11 - rhs[0] * self.a21) / det,
        ])
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    AlphaOutOfRange(f64),
    #[error("d50 must be nonzero")]
    ZeroD50,
    #[error("non-finite parameter value")]
    NonFinite,
}

/// Constants and unfolding parameters of the map family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub a10: f64,
    pub c20: f64,
    pub d50: f64,
    /// Unfolding parameters `(mu1, mu2, mu3, mu4)`.
    pub mu: [f64; 4],
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.8,
            a10: 0.2,
            c20: -0.5,
            d50: 1.0,
            mu: [0.0; 4],
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha.is_finite()
            && self.a10.is_finite()
            && self.c20.is_finite()
            && self.d50.is_finite()
            && self.mu.iter().all(|m| m.is_finite()))
        {
            return Err(ModelError::NonFinite);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ModelError::AlphaOutOfRange(self.alpha));
        }
        if self.d50 == 0.0 {
            return Err(ModelError::ZeroD50);
        }
        Ok(())
    }

    /// Lower seam of the blend strip.
    pub fn h0(&self) -> f64 {
        (2.0 * self.alpha + 1.0) / 3.0
    }

    /// Upper seam of the blend strip.
    pub fn h1(&self) -> f64 {
        (self.alpha + 2.0) / 3.0
    }

    /// Stable eigenvalue of the saddle at the origin.
    pub fn lambda(&self) -> f64 {
        self.alpha + self.mu[1]
    }

    /// Unstable eigenvalue of the saddle at the origin.
    pub fn sigma(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn with_mu(&self, mu: [f64; 4]) -> Self {
        ModelParams { mu, ..*self }
    }

    /// Same constants with all unfolding parameters zeroed.
    pub fn at_center(&self) -> Self {
        self.with_mu([0.0; 4])
    }
}

/// Cubic blend weight `s(z) = 3 z^2 - 2 z^3`.
pub fn blend_weight(z: f64) -> f64 {
    3.0 * z * z - 2.0 * z * z * z
}

fn blend_weight_deriv(z: f64) -> f64 {
    6.0 * z - 6.0 * z * z
}

/// Local branch: saddle map with resonant cubic terms.
pub fn u0_apply(p: Point, params: &ModelParams) -> Point {
    let a1 = params.a10 + params.mu[3];
    let xy = p.x * p.y;
    Point::new(
        params.lambda() * p.x * (1.0 + a1 * xy),
        params.sigma() * p.y * (1.0 - params.a10 * xy),
    )
}

/// Analytic Jacobian of `u0_apply`.
pub fn u0_jacobian(p: Point, params: &ModelParams) -> Mat2 {
    let a1 = params.a10 + params.mu[3];
    let lambda = params.lambda();
    let sigma = params.sigma();
    let xy = p.x * p.y;
    Mat2::new(
        lambda * (1.0 + 2.0 * a1 * xy),
        lambda * a1 * p.x * p.x,
        -sigma * params.a10 * p.y * p.y,
        sigma * (1.0 - 2.0 * params.a10 * xy),
    )
}

/// Global branch: quadratic reinjection taking a neighbourhood of `(0,1)`
/// to a neighbourhood of `(1,0)`.
pub fn u1_apply(p: Point, params: &ModelParams) -> Point {
    let v = p.y - 1.0;
    Point::new(
        1.0 + params.c20 * v,
        params.mu[0] + (1.0 + params.mu[2]) * p.x + params.d50 * v * v,
    )
}

/// Analytic Jacobian of `u1_apply`.
pub fn u1_jacobian(p: Point, params: &ModelParams) -> Mat2 {
    Mat2::new(
        0.0,
        params.c20,
        1.0 + params.mu[2],
        2.0 * params.d50 * (p.y - 1.0),
    )
}

/// Evaluates the full family: `U0` below the strip, `U1` above it, and the
/// C^1 convex blend in between. The blend argument is clamped to `[0, 1]`
/// so seam overshoot from rounding cannot extrapolate.
pub fn f_apply(p: Point, params: &ModelParams) -> Point {
    let h0 = params.h0();
    let h1 = params.h1();
    if p.y <= h0 {
        u0_apply(p, params)
    } else if p.y >= h1 {
        u1_apply(p, params)
    } else {
        let z = ((p.y - h0) / (h1 - h0)).clamp(0.0, 1.0);
        let r = blend_weight(z);
        let q0 = u0_apply(p, params);
        let q1 = u1_apply(p, params);
        Point::new(
            (1.0 - r) * q0.x + r * q1.x,
            (1.0 - r) * q0.y + r * q1.y,
        )
    }
}

/// Exact derivative of `f_apply`. Inside the strip the second column picks
/// up the product term `r'(y) (U1 - U0)`.
pub fn f_jacobian(p: Point, params: &ModelParams) -> Mat2 {
    let h0 = params.h0();
    let h1 = params.h1();
    if p.y <= h0 {
        u0_jacobian(p, params)
    } else if p.y >= h1 {
        u1_jacobian(p, params)
    } else {
        let z = ((p.y - h0) / (h1 - h0)).clamp(0.0, 1.0);
        let r = blend_weight(z);
        let rp = blend_weight_deriv(z) / (h1 - h0);
        let q0 = u0_apply(p, params);
        let q1 = u1_apply(p, params);
        let j0 = u0_jacobian(p, params);
        let j1 = u1_jacobian(p, params);
        Mat2::new(
            (1.0 - r) * j0.a11 + r * j1.a11,
            (1.0 - r) * j0.a12 + r * j1.a12 + rp * (q1.x - q0.x),
            (1.0 - r) * j0.a21 + r * j1.a21,
            (1.0 - r) * j0.a22 + r * j1.a22 + rp * (q1.y - q0.y),
        )
    }
}

/// Taylor coefficients of the local map at the origin and of the global map
/// at `(0, 1)`, together with the saddle eigenvalues and the discrete
/// symmetry labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalFormCoeffs {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub a1: f64,
    pub b1: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// Sign of `d1` at the organizing centre.
    pub chi: i8,
    /// Sign of `lambda * sigma` at the organizing centre.
    pub chi_eig: i8,
    /// Iterate count of the global map.
    pub m: u32,
}

/// Closed-form coefficient table for this family. The coefficients are read
/// directly off the two branches; fitted values appear only in tests.
pub fn extract_normal_form(params: &ModelParams) -> NormalFormCoeffs {
    NormalFormCoeffs {
        c0: 1.0,
        c1: 0.0,
        c2: params.c20,
        d0: params.mu[0],
        d1: 1.0 + params.mu[2],
        d2: 0.0,
        d3: 0.0,
        d4: 0.0,
        d5: params.d50,
        a1: params.a10 + params.mu[3],
        b1: -params.a10,
        lambda: params.lambda(),
        sigma: params.sigma(),
        chi: 1,
        chi_eig: 1,
        m: 1,
    }
}
