//! Convergence-rate analytics: the field-of-values and circle bounds, planar
//! hull distances, and trailing-window rate estimates.
//!
//! Field-of-values distances are computed for normal (diagonal) operators
//! only, where the field of values is the convex hull of the spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orthomin::ConvergenceTrace;

pub const DEFAULT_RATE_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("trace has {available} ratios, need at least {needed}")]
    InsufficientTrace { available: usize, needed: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("empty point set")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub fov_distance: f64,
    pub operator_norm: f64,
    pub eisenstat_bound: f64,
    /// `ρ/|z0|`; only meaningful for spectra on a known disc.
    pub normal_bound: Option<f64>,
    pub classic_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub limit: f64,
    pub window: usize,
    pub residual_spread: f64,
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Vertices of the convex hull in counter-clockwise order (monotone chain).
/// Collinear boundary points are dropped; duplicates collapse.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Complex64> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Euclidean distance from `z` to the convex hull of `points`; 0 inside.
pub fn hull_distance(points: &[Complex64], z: Complex64) -> Result<f64, DiagnosticsError> {
    if points.is_empty() {
        return Err(DiagnosticsError::Empty);
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => return Ok((z - hull[0]).norm()),
        2 => return Ok(segment_distance(z, hull[0], hull[1])),
        _ => {}
    }
    let m = hull.len();
    let edges = (0..m).map(|i| (hull[i], hull[(i + 1) % m]));
    if edges.clone().all(|(a, b)| cross(a, b, z) >= 0.0) {
        return Ok(0.0);
    }
    Ok(edges
        .map(|(a, b)| segment_distance(z, a, b))
        .fold(f64::INFINITY, f64::min))
}

/// Distance from the origin to the field of values of `diag(μ)`.
pub fn fov_distance_normal(mu: &[Complex64]) -> Result<f64, DiagnosticsError> {
    hull_distance(mu, Complex64::new(0.0, 0.0))
}

/// `sqrt(1 - δ²/‖A‖²)`.
pub fn eisenstat_bound(delta: f64, opnorm: f64) -> Result<f64, DiagnosticsError> {
    if !(opnorm > 0.0) || !(delta >= 0.0) {
        return Err(DiagnosticsError::Domain(format!(
            "need delta >= 0 and opnorm > 0, got delta = {delta}, opnorm = {opnorm}"
        )));
    }
    if delta > opnorm {
        return Err(DiagnosticsError::Domain(format!(
            "delta = {delta} exceeds operator norm {opnorm}"
        )));
    }
    let ratio = delta / opnorm;
    Ok((1.0 - ratio * ratio).max(0.0).sqrt())
}

/// `(ρ/|z0|, 2 sqrt(ρ/|z0|) / (1 + ρ/|z0|))`.
pub fn circle_bounds(rho: f64, z0_mod: f64) -> Result<(f64, f64), DiagnosticsError> {
    if !(rho > 0.0 && rho < z0_mod) {
        return Err(DiagnosticsError::Domain(format!(
            "need 0 < rho < |z0|, got rho = {rho}, |z0| = {z0_mod}"
        )));
    }
    let s = rho / z0_mod;
    Ok((s, 2.0 * s.sqrt() / (1.0 + s)))
}

/// Bounds for `diag(μ)`; the circle bounds are filled when a disc
/// `(z0, ρ)` containing the spectrum is supplied.
pub fn bound_report(
    mu: &[Complex64],
    circle: Option<(Complex64, f64)>,
) -> Result<BoundReport, DiagnosticsError> {
    let fov_distance = fov_distance_normal(mu)?;
    let operator_norm = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let eisenstat = eisenstat_bound(fov_distance, operator_norm)?;
    let (normal_bound, classic_bound) = match circle {
        Some((z0, rho)) => {
            let (n, c) = circle_bounds(rho, z0.norm())?;
            (Some(n), Some(c))
        }
        None => (None, None),
    };
    Ok(BoundReport {
        fov_distance,
        operator_norm,
        eisenstat_bound: eisenstat,
        normal_bound,
        classic_bound,
    })
}

/// Median of the last `window` ratios, with their max − min spread.
pub fn estimate_rate(
    trace: &ConvergenceTrace,
    window: usize,
) -> Result<RateEstimate, DiagnosticsError> {
    let q = trace.q_values();
    let needed = window.max(1);
    if q.len() < needed {
        return Err(DiagnosticsError::InsufficientTrace {
            available: q.len(),
            needed,
        });
    }
    let mut tail = q[q.len() - needed..].to_vec();
    tail.sort_by(f64::total_cmp);
    let mid = needed / 2;
    let limit = if needed % 2 == 1 {
        tail[mid]
    } else {
        0.5 * (tail[mid - 1] + tail[mid])
    };
    Ok(RateEstimate {
        limit,
        window: needed,
        residual_spread: tail[needed - 1] - tail[0],
    })
}

/// `q_n` nondecreasing and inside `[0, 1]`, both to 1e-12.
pub fn monotonicity_check(trace: &ConvergenceTrace) -> bool {
    q_sequence_is_monotone(&trace.q_values())
}

pub fn q_sequence_is_monotone(q: &[f64]) -> bool {
    q.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)) && q.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

/// `E|ξ|² E|1-ξ|² E(|ξ|²|1-ξ|²) ≥ |E(ξ|1-ξ|²)|²` for a discrete measure with
/// `E ξ = E|ξ|²`.
pub fn pearson_inequality_check(
    xi: &[Complex64],
    weights: &[f64],
) -> Result<bool, DiagnosticsError> {
    if xi.len() != weights.len() || xi.is_empty() {
        return Err(DiagnosticsError::Contract(format!(
            "{} samples but {} weights",
            xi.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(DiagnosticsError::Contract("negative weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(DiagnosticsError::Contract(format!(
            "weights sum to {total}, not 1"
        )));
    }
    let expect = |f: &dyn Fn(Complex64) -> Complex64| -> Complex64 {
        xi.iter().zip(weights).map(|(&x, &w)| f(x) * w).sum()
    };
    let mean = expect(&|x| x);
    let second = expect(&|x| x.norm_sqr().into()).re;
    if (mean - second).norm() > 1e-10 {
        return Err(DiagnosticsError::Contract(format!(
            "E(xi) = {mean} differs from E|xi|^2 = {second}"
        )));
    }
    let a = expect(&|x| (1.0 - x).norm_sqr().into()).re;
    let b = expect(&|x| (x.norm_sqr() * (1.0 - x).norm_sqr()).into()).re;
    let c = expect(&|x| x * (1.0 - x).norm_sqr());
    Ok(second * a * b >= c.norm_sqr() - 1e-12)
}
