//! Diagonal test problems: circle spectra, perturbed circles, arcs, ellipses
//! and the spectrum of the periodic centered-difference discretization of
//! `-a u'' + b u' + c u = f`.
//!
//! All generators return diagonal operators. Orthomin residual norms are
//! invariant under unitary similarity, so a normal matrix is represented by
//! its eigenvalues alone.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linop::{ComplexVector, LinearOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("circle radius {rho} must satisfy 0 < rho < |z0| = {z0_mod}")]
    EnclosesOrigin { rho: f64, z0_mod: f64 },
    #[error("origin lies on or inside the ellipse (normalized level {level} <= 1)")]
    OriginInEllipse { level: f64 },
    #[error("eigenvalue {index} vanishes; the system is singular")]
    Singular { index: usize },
}

fn one() -> f64 {
    1.0
}

/// Serializable description of a test spectrum. The JSON form carries a
/// `kind` discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSpec {
    UnitCircleRoots {
        d: usize,
        rho: f64,
        #[serde(default = "one")]
        z0_re: f64,
        #[serde(default)]
        z0_im: f64,
    },
    PerturbedCircle {
        d: usize,
        rho: f64,
        #[serde(default = "one")]
        z0_re: f64,
        #[serde(default)]
        z0_im: f64,
        seed: u64,
        jitter: f64,
    },
    Ellipse {
        d: usize,
        alpha: f64,
        beta: f64,
        theta: f64,
        u_re: f64,
        u_im: f64,
    },
    Pde {
        d: usize,
        a: f64,
        b: f64,
        c: f64,
    },
    Arc {
        d: usize,
        rho: f64,
        half_angle: f64,
    },
    Explicit {
        mu: Vec<[f64; 2]>,
    },
}

impl SpectrumSpec {
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, SpectraError> {
        match *self {
            Self::UnitCircleRoots { d, rho, z0_re, z0_im } => {
                roots_of_unity_spectrum(d, rho, Complex64::new(z0_re, z0_im))
            }
            Self::PerturbedCircle {
                d,
                rho,
                z0_re,
                z0_im,
                seed,
                jitter,
            } => perturbed_spectrum(d, rho, Complex64::new(z0_re, z0_im), seed, jitter),
            Self::Ellipse {
                d,
                alpha,
                beta,
                theta,
                u_re,
                u_im,
            } => ellipse_spectrum(d, alpha, beta, theta, Complex64::new(u_re, u_im)),
            Self::Pde { d, a, b, c } => pde_spectrum(d, a, b, c),
            Self::Arc { d, rho, half_angle } => arc_spectrum(d, rho, half_angle),
            Self::Explicit { ref mu } => explicit_spectrum(mu),
        }
    }

    pub fn operator(&self) -> Result<LinearOperator, SpectraError> {
        self.eigenvalues().map(diagonal)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UnitCircleRoots { d, .. }
            | Self::PerturbedCircle { d, .. }
            | Self::Ellipse { d, .. }
            | Self::Pde { d, .. }
            | Self::Arc { d, .. } => *d,
            Self::Explicit { mu } => mu.len(),
        }
    }

    /// Center and radius when every eigenvalue lies on a known circle.
    pub fn circle(&self) -> Option<(Complex64, f64)> {
        match *self {
            Self::UnitCircleRoots { rho, z0_re, z0_im, .. }
            | Self::PerturbedCircle { rho, z0_re, z0_im, .. } => {
                Some((Complex64::new(z0_re, z0_im), rho))
            }
            Self::Arc { rho, .. } => Some((Complex64::new(1.0, 0.0), rho)),
            _ => None,
        }
    }

    /// The unit-modulus part `ζ_j = (μ_j - z0)/ρ` for circle-family spectra.
    pub fn unitary_part(&self) -> Result<Option<Vec<Complex64>>, SpectraError> {
        let Some((z0, rho)) = self.circle() else {
            return Ok(None);
        };
        let mu = self.eigenvalues()?;
        Ok(Some(mu.into_iter().map(|m| (m - z0) / rho).collect()))
    }
}

fn diagonal(mu: Vec<Complex64>) -> LinearOperator {
    LinearOperator::diagonal(ComplexVector::new(mu).expect("generators produce d >= 1"))
}

fn check_dim(d: usize, min: usize) -> Result<(), SpectraError> {
    if d < min {
        return Err(SpectraError::InvalidParameter(format!(
            "dimension d = {d} must be at least {min}"
        )));
    }
    Ok(())
}

/// `ζ_d^j = exp(2πi j/d)`, `j = 0..d`. Quarter turns are exact and
/// `ζ_d^{d-j} = conj(ζ_d^j)` holds bitwise.
pub fn roots_of_unity(d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0); d];
    for j in 1..=d / 2 {
        let z = if (4 * j) % d == 0 {
            match 4 * j / d {
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => unreachable!("j <= d/2"),
            }
        } else {
            Complex64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)
        };
        out[j] = z;
        out[d - j] = z.conj();
    }
    out
}

pub fn roots_of_unity_spectrum(
    d: usize,
    rho: f64,
    z0: Complex64,
) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(d, 1)?;
    let z0_mod = z0.norm();
    if !(rho > 0.0 && rho < z0_mod) {
        return Err(SpectraError::EnclosesOrigin { rho, z0_mod });
    }
    Ok(roots_of_unity(d).into_iter().map(|z| z0 + rho * z).collect())
}

/// `diag(z0 + ρ ζ_d^j)`; with `z0 = 1` this is `I + ρU`.
pub fn roots_of_unity_system(
    d: usize,
    rho: f64,
    z0: Complex64,
) -> Result<LinearOperator, SpectraError> {
    roots_of_unity_spectrum(d, rho, z0).map(diagonal)
}

pub fn ellipse_spectrum(
    d: usize,
    alpha: f64,
    beta: f64,
    theta: f64,
    u: Complex64,
) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(d, 1)?;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(SpectraError::InvalidParameter(format!(
            "semi-axes must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let level = ellipse_level(Complex64::new(0.0, 0.0), alpha, beta, theta, u);
    if level <= 1.0 {
        return Err(SpectraError::OriginInEllipse { level });
    }
    let rot = Complex64::from_polar(1.0, theta);
    Ok((1..=d)
        .map(|j| {
            let g = 2.0 * PI * j as f64 / d as f64;
            u + rot * Complex64::new(alpha * g.cos(), beta * g.sin())
        })
        .collect())
}

/// `(x/α)² + (y/β)²` of `z` in the ellipse frame; `1` on the ellipse.
pub fn ellipse_level(z: Complex64, alpha: f64, beta: f64, theta: f64, u: Complex64) -> f64 {
    let w = (z - u) * Complex64::from_polar(1.0, -theta);
    (w.re / alpha).powi(2) + (w.im / beta).powi(2)
}

/// Points `u + e^{iθ}(α cos γ_j + iβ sin γ_j)` at `γ_j = 2πj/d`, `j = 1..=d`.
pub fn ellipse_system(
    d: usize,
    alpha: f64,
    beta: f64,
    theta: f64,
    u: Complex64,
) -> Result<LinearOperator, SpectraError> {
    ellipse_spectrum(d, alpha, beta, theta, u).map(diagonal)
}

pub fn pde_spectrum(d: usize, a: f64, b: f64, c: f64) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(d, 3)?;
    if !(a > 0.0) || !(c >= 0.0) || !b.is_finite() {
        return Err(SpectraError::InvalidParameter(format!(
            "need a > 0, c >= 0, finite b; got a = {a}, b = {b}, c = {c}"
        )));
    }
    let h = 2.0 * PI / d as f64;
    let diffusion = 2.0 * a / (h * h);
    let scale = diffusion + b.abs() / h + c;
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let kh = k as f64 * h;
        let lam = Complex64::new(-diffusion * kh.cos() + c + diffusion, b / h * kh.sin());
        if lam.norm() <= 1e-12 * scale {
            return Err(SpectraError::Singular { index: k });
        }
        out.push(lam);
    }
    Ok(out)
}

/// Eigenvalues of the periodic centered-difference operator on `[0, 2π]`
/// with `h = 2π/d`, indexed by Fourier mode `k = 0..d`.
pub fn pde_system(d: usize, a: f64, b: f64, c: f64) -> Result<LinearOperator, SpectraError> {
    pde_spectrum(d, a, b, c).map(diagonal)
}

/// Angles at the midpoints of `d` equal cells of `(-half_angle, half_angle)`.
pub fn arc_angles(d: usize, half_angle: f64) -> Vec<f64> {
    (0..d)
        .map(|j| -half_angle + (2 * j + 1) as f64 * half_angle / d as f64)
        .collect()
}

pub fn arc_spectrum(d: usize, rho: f64, half_angle: f64) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(d, 1)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(SpectraError::InvalidParameter(format!(
            "arc radius must satisfy 0 < rho < 1, got {rho}"
        )));
    }
    if !(half_angle > 0.0 && half_angle <= PI) {
        return Err(SpectraError::InvalidParameter(format!(
            "half angle must lie in (0, pi], got {half_angle}"
        )));
    }
    Ok(arc_angles(d, half_angle)
        .into_iter()
        .map(|t| 1.0 + rho * Complex64::from_polar(1.0, t))
        .collect())
}

/// `I + ρ diag(e^{iθ_j})` with the `θ_j` of [`arc_angles`].
pub fn arc_system(d: usize, rho: f64, half_angle: f64) -> Result<LinearOperator, SpectraError> {
    arc_spectrum(d, rho, half_angle).map(diagonal)
}

pub fn perturbed_spectrum(
    d: usize,
    rho: f64,
    z0: Complex64,
    seed: u64,
    jitter: f64,
) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(d, 1)?;
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(SpectraError::InvalidParameter(format!(
            "jitter must be a finite nonnegative angle, got {jitter}"
        )));
    }
    let z0_mod = z0.norm();
    if !(rho > 0.0 && rho < z0_mod) {
        return Err(SpectraError::EnclosesOrigin { rho, z0_mod });
    }
    if jitter == 0.0 {
        return roots_of_unity_spectrum(d, rho, z0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..d)
        .map(|j| {
            let eta = rng.random_range(-jitter..=jitter);
            z0 + rho * Complex64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64 + eta)
        })
        .collect())
}

/// Roots of unity with each angle jittered uniformly in `[-jitter, jitter]`;
/// the perturbed points stay on the unit circle.
pub fn perturbed_roots(
    d: usize,
    rho: f64,
    seed: u64,
    jitter: f64,
) -> Result<LinearOperator, SpectraError> {
    perturbed_spectrum(d, rho, Complex64::new(1.0, 0.0), seed, jitter).map(diagonal)
}

fn explicit_spectrum(mu: &[[f64; 2]]) -> Result<Vec<Complex64>, SpectraError> {
    check_dim(mu.len(), 1)?;
    mu.iter()
        .enumerate()
        .map(|(index, &[re, im])| {
            if re == 0.0 && im == 0.0 {
                Err(SpectraError::Singular { index })
            } else {
                Ok(Complex64::new(re, im))
            }
        })
        .collect()
}
