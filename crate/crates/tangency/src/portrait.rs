//! Phase-portrait dataset: unstable-manifold arcs grown from the local
//! fundamental domain, the homoclinic orbit, the coexisting stable orbits,
//! and the two fixed points.

use thiserror::Error;

use crate::exec;
use crate::model::{f_apply, u0_apply, ModelParams, Point};
use crate::orbit::{find_periodic_orbit, OrbitError, PeriodicOrbit};

#[derive(Debug, Error)]
pub enum PortraitError {
    #[error("manifold iterate escaped the bounding box")]
    EscapedDomain,
    #[error("orbit solve failed while assembling the portrait: {0}")]
    Orbit(#[from] OrbitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    UnstablePlus,
    UnstableMinus,
    StableLocal,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::UnstablePlus => "unstable_plus",
            Branch::UnstableMinus => "unstable_minus",
            Branch::StableLocal => "stable_local",
        }
    }
}

/// An ordered polyline along an invariant manifold.
#[derive(Clone, Debug)]
pub struct ManifoldArc {
    pub branch: Branch,
    pub points: Vec<Point>,
    pub iterations: u32,
    /// Number of points per iteration level; the arc is the concatenation of
    /// `iterations + 1` levels of this length, so applying the map to a point
    /// of level j lands exactly on the matching point of level j+1.
    pub points_per_level: usize,
}

/// The full dataset behind the phase portrait.
#[derive(Clone, Debug)]
pub struct PortraitDataset {
    pub arcs: Vec<ManifoldArc>,
    pub orbits: Vec<PeriodicOrbit>,
    pub fixed_points: Vec<Point>,
    pub homoclinic_points: Vec<Point>,
}

const MAX_ARC_STEP: f64 = 0.01;
const MAX_TURN_COS: f64 = 0.984_807_753_012_208; // cos(10 degrees)
const ESCAPE_BOUND: f64 = 3.0;

fn forward_images(t: f64, levels: u32, params: &ModelParams) -> Option<Vec<Point>> {
    let mut p = Point::new(0.0, t);
    let mut out = Vec::with_capacity(levels as usize + 1);
    out.push(p);
    for _ in 0..levels {
        p = f_apply(p, params);
        if !p.is_finite() || p.x.abs() > ESCAPE_BOUND || p.y.abs() > ESCAPE_BOUND {
            return None;
        }
        out.push(p);
    }
    Some(out)
}

/// Grows the unstable manifold of the origin: samples the fundamental domain
/// `[1/sigma^2, 1/sigma]` on the local unstable direction (the y-axis),
/// iterates forward, and refines the parameterization until every level of
/// images is resolved below the arc-step and turning-angle thresholds.
pub fn unstable_manifold(
    params: &ModelParams,
    n_samples: usize,
    n_iterations: u32,
) -> Result<ManifoldArc, PortraitError> {
    let sigma = params.sigma();
    let lo = 1.0 / (sigma * sigma);
    let hi = 1.0 / sigma;
    let n = n_samples.max(2);
    let mut ts: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();

    // Refinement loop: insert parameters wherever any iteration level has
    // consecutive images too far apart or turning too sharply. High-curvature
    // features at deep levels need very fine local parameter spacing, so the
    // round budget is generous; insertion is local, so the point count stays
    // modest.
    for _ in 0..64 {
        let trails: Vec<Option<Vec<Point>>> = exec::par_map(ts.clone(), |t| {
            forward_images(t, n_iterations, params)
        });
        if trails.iter().any(|t| t.is_none()) {
            return Err(PortraitError::EscapedDomain);
        }
        let trails: Vec<Vec<Point>> = trails.into_iter().map(|t| t.unwrap()).collect();
        let mut insert_after = vec![false; ts.len() - 1];
        for level in 0..=(n_iterations as usize) {
            for i in 0..ts.len() - 1 {
                let a = trails[i][level];
                let b = trails[i + 1][level];
                if a.dist(&b) > MAX_ARC_STEP {
                    insert_after[i] = true;
                }
                if i + 2 < ts.len() {
                    let c = trails[i + 2][level];
                    let (ux, uy) = (b.x - a.x, b.y - a.y);
                    let (vx, vy) = (c.x - b.x, c.y - b.y);
                    let nu = (ux * ux + uy * uy).sqrt();
                    let nv = (vx * vx + vy * vy).sqrt();
                    if nu > 1e-9 && nv > 1e-9 {
                        let cosang = (ux * vx + uy * vy) / (nu * nv);
                        if cosang < MAX_TURN_COS {
                            // A sharp vertex at b involves both incident
                            // segments; split whichever still can be.
                            if ts[i + 1] - ts[i] > 1e-12 {
                                insert_after[i] = true;
                            }
                            if ts[i + 2] - ts[i + 1] > 1e-12 {
                                insert_after[i + 1] = true;
                            }
                        }
                    }
                }
            }
        }
        if !insert_after.iter().any(|&b| b) {
            let mut points = Vec::with_capacity(ts.len() * (n_iterations as usize + 1));
            for level in 0..=(n_iterations as usize) {
                for trail in &trails {
                    points.push(trail[level]);
                }
            }
            return Ok(ManifoldArc {
                branch: Branch::UnstablePlus,
                points,
                iterations: n_iterations,
                points_per_level: ts.len(),
            });
        }
        let mut refined = Vec::with_capacity(ts.len() * 2);
        for i in 0..ts.len() - 1 {
            refined.push(ts[i]);
            if insert_after[i] && ts[i + 1] - ts[i] > 1e-12 {
                refined.push(0.5 * (ts[i] + ts[i + 1]));
            }
        }
        refined.push(*ts.last().unwrap());
        ts = refined;
    }
    // Refinement budget exhausted; return what we have rather than loop.
    let trails: Vec<Vec<Point>> = ts
        .iter()
        .map(|&t| forward_images(t, n_iterations, params).ok_or(PortraitError::EscapedDomain))
        .collect::<Result<_, _>>()?;
    let mut points = Vec::new();
    for level in 0..=(n_iterations as usize) {
        for trail in &trails {
            points.push(trail[level]);
        }
    }
    Ok(ManifoldArc {
        branch: Branch::UnstablePlus,
        points,
        iterations: n_iterations,
        points_per_level: ts.len(),
    })
}

/// The local stable manifold rendered as an x-axis segment.
pub fn stable_local_segment(params: &ModelParams, n_samples: usize, x_max: f64) -> ManifoldArc {
    let n = n_samples.max(2);
    let points = (0..n)
        .map(|i| Point::new(x_max * i as f64 / (n - 1) as f64, 0.0))
        .collect();
    let _ = params;
    ManifoldArc {
        branch: Branch::StableLocal,
        points,
        iterations: 0,
        points_per_level: n,
    }
}

/// The homoclinic orbit at the tangency: `(0,1)`, its image `(1,0)`, the
/// forward tail along the x-axis and the backward tail along the y-axis.
pub fn homoclinic_orbit(k_tail: u32, params: &ModelParams) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * k_tail as usize + 2);
    out.push(Point::new(0.0, 1.0));
    out.push(f_apply(Point::new(0.0, 1.0), params));
    let mut p = *out.last().unwrap();
    for _ in 0..k_tail {
        p = u0_apply(p, params);
        out.push(p);
    }
    // Backward preimages along the y-axis, where the map restricts to
    // y -> sigma y.
    let mut y = 1.0;
    for _ in 0..k_tail {
        y /= params.sigma();
        out.push(Point::new(0.0, y));
    }
    out
}

/// Assembles arcs, orbits for `k = 1..=k_max`, the two fixed points and the
/// homoclinic points.
pub fn build_portrait(params: &ModelParams, k_max: u32) -> Result<PortraitDataset, PortraitError> {
    let arcs = vec![
        unstable_manifold(params, 64, 12)?,
        stable_local_segment(params, 128, 1.3),
    ];
    let ks: Vec<u32> = (1..=k_max).collect();
    let orbits: Vec<PeriodicOrbit> = exec::par_map(ks, |k| find_periodic_orbit(k, params, None))
        .into_iter()
        .collect::<Result<_, _>>()?;
    Ok(PortraitDataset {
        arcs,
        orbits,
        fixed_points: vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)],
        homoclinic_points: homoclinic_orbit(10, params),
    })
}
