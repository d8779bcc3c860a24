//! Orthomin(1) measure dynamics on `I + ρU` with `U` unitary.
//!
//! The residual `r_n` defines a measure on the unit circle through the
//! spectral decomposition of `U`. Its moments `ω_{n,j} = E_n(ζ^j)` evolve by
//! a three-term recurrence, and every scalar of the iteration (`λ_n`, `T_n`,
//! `q_n`) is a closed-form function of `ω_n = ω_{n,1}`.

use std::io::{self, Write};

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linop::{ComplexVector, LinopError};
use crate::orthomin::{solve_with, OrthominError, StoppingRule};
use crate::scalar::{exact_real, ExactComplex};
use crate::spectra::{roots_of_unity, roots_of_unity_system, SpectraError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentsError {
    #[error("truncation exhausted at step {n}: only moments up to index {available} remain")]
    TruncationExhausted { n: usize, available: usize },
    #[error("measure collapsed at step {n}: recurrence denominator vanished")]
    Degenerate { n: usize },
    #[error("identity violated at step {n}: got {got}, expected {expected}")]
    IdentityViolation {
        n: usize,
        got: String,
        expected: String,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Orthomin(#[from] OrthominError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub lambda: Complex64,
    pub t: Complex64,
    pub beta: Complex64,
    pub q: f64,
}

/// `λ`, `T`, `β = 1 - λ` and `q` as functions of `ω = ω_{n,1}`.
///
/// `β` is evaluated as `ρ(ρ + ω)/D`, which equals `1 - λ` without the
/// cancellation when `λ ≈ 1`.
pub fn closed_forms(omega: Complex64, rho: f64) -> ClosedForms {
    let den = 1.0 + rho * rho + 2.0 * rho * omega.re;
    let lambda = (1.0 + rho * omega.conj()) / den;
    let t = (omega + rho) / (rho * omega.conj() + 1.0);
    let beta = rho * (rho + omega) / den;
    let q = rho * ((1.0 - omega.norm_sqr()).max(0.0) / den).sqrt();
    ClosedForms { lambda, t, beta, q }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MomentMode {
    /// `U = diag(ζ_d^j)`; moments are `d`-periodic in the index.
    Finite { d: usize },
    /// Haar initial measure, moments `0..=j_max` at step 0.
    HaarTruncated { j_max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    /// `ω_{n,0}, …`; `d` entries in finite mode, `J_n + 1` in Haar mode.
    pub omega: Vec<Complex64>,
    pub t: Complex64,
    pub lambda: Complex64,
    pub beta: Complex64,
    pub q: f64,
}

impl MomentRow {
    fn new(n: usize, omega: Vec<Complex64>, rho: f64) -> Self {
        let w1 = omega.get(1).copied().unwrap_or(omega[0]);
        let cf = closed_forms(w1, rho);
        Self {
            n,
            omega,
            t: cf.t,
            lambda: cf.lambda,
            beta: cf.beta,
            q: cf.q,
        }
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega.get(1).copied().unwrap_or(self.omega[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub mode: MomentMode,
    pub rho: f64,
    pub rows: Vec<MomentRow>,
}

/// `E(ζ^j)` under weights `|r_i|²` at the `d`-th roots of unity, `j = 0..d`.
pub fn residual_moments(r: &[Complex64]) -> Vec<Complex64> {
    let d = r.len();
    let zeta = roots_of_unity(d);
    let total: f64 = r.iter().map(|x| x.norm_sqr()).sum();
    (0..d)
        .map(|j| {
            let s: Complex64 = r
                .iter()
                .enumerate()
                .map(|(i, x)| x.norm_sqr() * zeta[(i * j) % d])
                .sum();
            s / total
        })
        .collect()
}

impl MomentSequence {
    /// Finite mode started from the measure of `r0`.
    pub fn finite(rho: f64, r0: &ComplexVector) -> Result<Self, MomentsError> {
        if r0.is_zero() {
            return Err(MomentsError::Contract("initial residual is zero".into()));
        }
        let mut omega = residual_moments(r0.as_slice());
        omega[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            mode: MomentMode::Finite { d: r0.len() },
            rho,
            rows: vec![MomentRow::new(0, omega, rho)],
        })
    }

    /// Finite mode with `r0 = ones`: `ω_{0,j} = 0` for `0 < j < d`.
    pub fn finite_uniform(d: usize, rho: f64) -> Result<Self, MomentsError> {
        Self::finite(rho, &ComplexVector::ones(d.max(1)))
    }

    /// Haar initial measure with moments up to index `j_max`.
    pub fn haar(rho: f64, j_max: usize) -> Self {
        let mut omega = vec![Complex64::new(0.0, 0.0); j_max + 1];
        omega[0] = Complex64::new(1.0, 0.0);
        Self {
            mode: MomentMode::HaarTruncated { j_max },
            rho,
            rows: vec![MomentRow::new(0, omega, rho)],
        }
    }

    pub fn last(&self) -> &MomentRow {
        self.rows.last().expect("sequence always has row 0")
    }

    /// `ω_{n,j}` from the stored row, wrapping indices in finite mode.
    pub fn omega(&self, n: usize, j: usize) -> Option<Complex64> {
        let row = self.rows.get(n)?;
        match self.mode {
            MomentMode::Finite { d } => Some(row.omega[j % d]),
            MomentMode::HaarTruncated { .. } => row.omega.get(j).copied(),
        }
    }

    /// Appends row `n + 1` via the moment recurrence.
    pub fn advance(&mut self) -> Result<&MomentRow, MomentsError> {
        let row = self.last();
        let n = row.n;
        let t = row.t;
        let w = &row.omega;
        let t2 = 1.0 + t.norm_sqr();
        let next: Vec<Complex64> = match self.mode {
            MomentMode::Finite { d } => {
                let at = |j: usize| w[j % d];
                let den = t2 - 2.0 * (t.conj() * at(1)).re;
                if !(den > 0.0) {
                    return Err(MomentsError::Degenerate { n });
                }
                let mut out = vec![Complex64::new(1.0, 0.0); d];
                // ω_{d-j} = conj(ω_j); imposing it keeps rounding noise from
                // growing in the antisymmetric directions
                for j in 1..=d / 2 {
                    let w = (t2 * at(j) - t * at(j - 1) - t.conj() * at(j + 1)) / den;
                    out[j] = w;
                    out[d - j] = w.conj();
                }
                if d % 2 == 0 && d > 0 {
                    out[d / 2].im = 0.0;
                }
                out
            }
            MomentMode::HaarTruncated { .. } => {
                let top = w.len() - 1;
                if top < 2 {
                    return Err(MomentsError::TruncationExhausted { n, available: top });
                }
                let den = t2 - 2.0 * (t.conj() * w[1]).re;
                if !(den > 0.0) {
                    return Err(MomentsError::Degenerate { n });
                }
                let mut out = Vec::with_capacity(top);
                out.push(Complex64::new(1.0, 0.0));
                for j in 1..top {
                    out.push((t2 * w[j] - t * w[j - 1] - t.conj() * w[j + 1]) / den);
                }
                out
            }
        };
        let row = MomentRow::new(n + 1, next, self.rho);
        self.rows.push(row);
        Ok(self.last())
    }

    pub fn advance_by(&mut self, steps: usize) -> Result<(), MomentsError> {
        for _ in 0..steps {
            self.advance()?;
        }
        Ok(())
    }

    /// CSV with `n, T, λ, |β|, q` and `ω_j` for `j = 0..=j_max`. Moments a
    /// truncated row no longer carries are left empty.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        j_max: usize,
        fmt: impl Fn(f64) -> String,
    ) -> io::Result<()> {
        let mut header = vec![
            "n".to_string(),
            "T_re".into(),
            "T_im".into(),
            "lambda_re".into(),
            "lambda_im".into(),
            "beta_abs".into(),
            "q".into(),
        ];
        for j in 0..=j_max {
            header.push(format!("omega_{j}_re"));
            header.push(format!("omega_{j}_im"));
        }
        writeln!(out, "{}", header.join(","))?;
        for row in &self.rows {
            let mut fields = vec![
                row.n.to_string(),
                fmt(row.t.re),
                fmt(row.t.im),
                fmt(row.lambda.re),
                fmt(row.lambda.im),
                fmt(row.beta.norm()),
                fmt(row.q),
            ];
            for j in 0..=j_max {
                match self.omega(row.n, j) {
                    Some(w) => {
                        fields.push(fmt(w.re));
                        fields.push(fmt(w.im));
                    }
                    None => {
                        fields.push(String::new());
                        fields.push(String::new());
                    }
                }
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Per-step trace of Orthomin(1) on `I + ρ diag(ζ_d^j)` with `b = r0`,
/// `x0 = 0`: the residual moments and the measured `q_n`.
#[derive(Debug, Clone)]
pub struct SolverMoments {
    pub omega: Vec<Vec<Complex64>>,
    pub q: Vec<f64>,
}

pub fn solver_moments(
    d: usize,
    rho: f64,
    r0: &ComplexVector,
    steps: usize,
) -> Result<SolverMoments, MomentsError> {
    let op = roots_of_unity_system(d, rho, Complex64::new(1.0, 0.0))?;
    let x0 = ComplexVector::zeros(d);
    let mut omega = Vec::new();
    let stop = StoppingRule::fixed(steps).stop_on_breakdown();
    let sol = solve_with(&op, r0, &x0, 1, &stop, |state, _| {
        let r = state.residual();
        if !r.is_zero() {
            omega.push(residual_moments(r.as_slice()));
        }
    })?;
    let q = sol.trace.q_values();
    Ok(SolverMoments { omega, q })
}

/// Largest `|ω_{n,j}^{rec} - ω_{n,j}^{solver}|` over `n ≤ steps`, `j ≤ d`.
/// Comparison ends early if the solver residual vanishes or the measure
/// collapses onto a single point.
pub fn moments_match_solver(
    d: usize,
    rho: f64,
    r0: &ComplexVector,
    steps: usize,
) -> Result<f64, MomentsError> {
    if r0.len() != d {
        return Err(LinopError::DimensionMismatch {
            expected: d,
            found: r0.len(),
        }
        .into());
    }
    let direct = solver_moments(d, rho, r0, steps)?;
    let mut seq = MomentSequence::finite(rho, r0)?;
    let mut worst: f64 = 0.0;
    for (n, measured) in direct.omega.iter().enumerate() {
        if n > 0 && seq.advance().is_err() {
            break;
        }
        for (j, m) in measured.iter().enumerate() {
            let rec = seq.omega(n, j).expect("row exists");
            worst = worst.max((rec - m).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarExactRun {
    pub t: Vec<ExactComplex>,
    pub omega: Vec<ExactComplex>,
    /// Coefficients of the (unnormalized) residual polynomial at `n_max`.
    pub coefficients: Vec<ExactComplex>,
}

/// `ω = Σ a_i conj(a_{i+1}) / Σ |a_i|²` for `r(z) = Σ a_i z^i` under Haar
/// measure.
pub fn haar_omega<S>(a: &[Complex<S>]) -> Complex<S>
where
    S: Clone + num_traits::Num + std::ops::Neg<Output = S>,
{
    let mut num = Complex::new(S::zero(), S::zero());
    let mut den = S::zero();
    for i in 0..a.len() {
        den = den + a[i].norm_sqr();
        if i + 1 < a.len() {
            num = num + a[i].clone() * a[i + 1].conj();
        }
    }
    num / den
}

/// Infinite-dimensional Orthomin(1) in exact arithmetic: evolves the
/// residual polynomial `r_{n+1}(z) ∝ (T_n - z) r_n(z)` from `r_0 = 1` and
/// checks `T_n = ρ^{2n+1}` at every step.
pub fn haar_exact_tn(rho: &BigRational, n_max: usize) -> Result<HaarExactRun, MomentsError> {
    if !(rho > &BigRational::zero() && rho < &BigRational::one()) {
        return Err(MomentsError::Contract(format!("need 0 < rho < 1, got {rho}")));
    }
    let rho_c = exact_real(rho.clone());
    let one = ExactComplex::one();
    let mut a: Vec<ExactComplex> = vec![one.clone()];
    let mut ts = Vec::with_capacity(n_max + 1);
    let mut omegas = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let omega = haar_omega(&a);
        let t = (omega.clone() + rho_c.clone()) / (rho_c.clone() * omega.conj() + one.clone());
        let expected = rho_c.powu(2 * n as u32 + 1);
        if t != expected {
            return Err(MomentsError::IdentityViolation {
                n,
                got: t.to_string(),
                expected: expected.to_string(),
            });
        }
        if n < n_max {
            let mut b = Vec::with_capacity(a.len() + 1);
            for i in 0..=a.len() {
                let mut c = ExactComplex::zero();
                if i < a.len() {
                    c += t.clone() * a[i].clone();
                }
                if i > 0 {
                    c -= a[i - 1].clone();
                }
                b.push(c);
            }
            a = b;
        }
        ts.push(t);
        omegas.push(omega);
    }
    Ok(HaarExactRun {
        t: ts,
        omega: omegas,
        coefficients: a,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub beta_abs: f64,
    pub beta_bound: f64,
    pub u_abs: f64,
    pub v_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub holds: bool,
    /// Steps checked before `ρ^{n+2}` fell below the resolution floor.
    pub rows: Vec<LadderRow>,
    pub first_violation: Option<usize>,
}

/// Below this, `|β_n| ≤ ρ^{n+2}` cannot be resolved from double-precision
/// moments, since `ρ + ω_n` loses all significant digits.
pub const LADDER_FLOOR: f64 = 1e-15;

/// `|β_n| ≤ ρ^{n+2}`, `|u_n| ≤ ρ + 3ρ²`, `|v_n| ≤ 3ρ²` with `u_n = ω_{n,1}`,
/// `v_n = ω_{n,2}` measured from Orthomin(1) residuals on `I + ρU`,
/// `U = diag(ζ_d^j)`, `r_0 = ones`.
pub fn ladder_check(d: usize, rho: f64, n_max: usize) -> Result<LadderReport, MomentsError> {
    if !(rho > 0.0 && rho < 0.1) {
        return Err(MomentsError::Contract(format!("need 0 < rho < 0.1, got {rho}")));
    }
    if d < 4 {
        return Err(MomentsError::Contract(format!("need d >= 4, got {d}")));
    }
    let direct = solver_moments(d, rho, &ComplexVector::ones(d), n_max)?;
    let u_bound = rho + 3.0 * rho * rho;
    let v_bound = 3.0 * rho * rho;
    let mut rows = Vec::new();
    let mut first_violation = None;
    for (n, w) in direct.omega.iter().enumerate().take(n_max + 1) {
        let beta_bound = rho.powi(n as i32 + 2);
        if beta_bound < LADDER_FLOOR {
            break;
        }
        let beta_abs = closed_forms(w[1], rho).beta.norm();
        let u_abs = w[1].norm();
        let v_abs = w[2 % d].norm();
        let ok = beta_abs <= beta_bound && u_abs <= u_bound && v_abs <= v_bound;
        if !ok && first_violation.is_none() {
            first_violation = Some(n);
        }
        rows.push(LadderRow {
            n,
            beta_abs,
            beta_bound,
            u_abs,
            v_abs,
        });
    }
    Ok(LadderReport {
        holds: first_violation.is_none(),
        rows,
        first_violation,
    })
}

/// `ω_{n,k}` for `k = 0..=k_max` after `n` Haar-mode steps, with enough
/// initial moments that nothing is truncated.
pub fn limit_moments(rho: f64, k_max: usize, n: usize) -> Result<Vec<Complex64>, MomentsError> {
    let mut seq = MomentSequence::haar(rho, (k_max + n).max(n + 1));
    seq.advance_by(n)?;
    Ok(seq.last().omega[..=k_max].to_vec())
}
