//! The Orthomin(k) iteration with per-step instrumentation.
//!
//! Each step costs one operator application: `A r_{n+1}` is formed once and
//! the new image `A p_{n+1}` is assembled from it with the same coefficients
//! used for `p_{n+1}`. The last `k` search directions and their images are
//! kept newest-first in a ring buffer.
//!
//! The arithmetic order of a step depends only on the buffered directions it
//! touches, so the first `k` steps of Orthomin(k+1) reproduce those of
//! Orthomin(k) bit for bit.

use std::collections::{BTreeMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linop::{inner_unchecked, ComplexVector, LinearOperator, LinopError};

/// `‖A p_n‖²` at or below this value is reported as breakdown.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-290;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrthominError {
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error("history depth k must be at least 1")]
    InvalidDepth,
    #[error("breakdown at step {step}: ‖A p‖² = {ap_norm_sqr:e}")]
    Breakdown { step: usize, ap_norm_sqr: f64 },
    #[error("projection basis must be nonempty with nonzero vectors")]
    InvalidBasis,
}

/// One buffered search direction together with its image under `A`.
#[derive(Debug, Clone)]
pub struct Direction {
    pub p: ComplexVector,
    pub ap: ComplexVector,
    pub ap_norm_sqr: f64,
}

impl Direction {
    fn new(p: ComplexVector, ap: ComplexVector) -> Self {
        let ap_norm_sqr = ap.norm_sqr();
        Self { p, ap, ap_norm_sqr }
    }
}

/// Result of a single step: the line-search coefficient and whether it was
/// exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub lambda: Complex64,
    pub stagnated: bool,
}

#[derive(Debug, Clone)]
pub struct OrthominState {
    k: usize,
    n: usize,
    x: ComplexVector,
    r: ComplexVector,
    dirs: VecDeque<Direction>,
}

impl OrthominState {
    /// Sets `p_0 = r_0 = b - A x_0`.
    pub fn new(
        op: &LinearOperator,
        b: &ComplexVector,
        x0: &ComplexVector,
        k: usize,
    ) -> Result<Self, OrthominError> {
        if k == 0 {
            return Err(OrthominError::InvalidDepth);
        }
        let ax0 = op.apply(x0)?;
        let r = b.sub(&ax0)?;
        let ar = op.apply(&r)?;
        let mut dirs = VecDeque::with_capacity(k + 1);
        dirs.push_front(Direction::new(r.clone(), ar));
        Ok(Self {
            k,
            n: 0,
            x: x0.clone(),
            r,
            dirs,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Index of the current iterate.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &ComplexVector {
        &self.x
    }

    pub fn residual(&self) -> &ComplexVector {
        &self.r
    }

    /// Buffered directions, newest first.
    pub fn directions(&self) -> impl Iterator<Item = &Direction> {
        self.dirs.iter()
    }

    pub fn buffered_aps(&self) -> Vec<ComplexVector> {
        self.dirs.iter().map(|d| d.ap.clone()).collect()
    }

    pub fn step(&mut self, op: &LinearOperator) -> Result<StepInfo, OrthominError> {
        let newest = &self.dirs[0];
        if newest.ap_norm_sqr <= BREAKDOWN_THRESHOLD {
            return Err(OrthominError::Breakdown {
                step: self.n,
                ap_norm_sqr: newest.ap_norm_sqr,
            });
        }
        let lambda = inner_unchecked(self.r.as_slice(), newest.ap.as_slice()) / newest.ap_norm_sqr;
        self.x.add_scaled(lambda, &newest.p);
        self.r.add_scaled(-lambda, &newest.ap);

        let ar = op.apply(&self.r)?;
        let mut p = self.r.clone();
        let mut ap = ar.clone();
        let terms = (self.k - 1).min(self.n + 1);
        for dir in self.dirs.iter().take(terms) {
            let nu = inner_unchecked(ar.as_slice(), dir.ap.as_slice()) / dir.ap_norm_sqr;
            p.add_scaled(-nu, &dir.p);
            ap.add_scaled(-nu, &dir.ap);
        }
        self.dirs.push_front(Direction::new(p, ap));
        self.dirs.truncate(self.k);
        self.n += 1;

        Ok(StepInfo {
            lambda,
            stagnated: lambda.re == 0.0 && lambda.im == 0.0,
        })
    }

    /// `‖b - A x - r‖ / ‖b‖`; drift between the recursive and the true residual.
    pub fn residual_drift(
        &self,
        op: &LinearOperator,
        b: &ComplexVector,
    ) -> Result<f64, OrthominError> {
        let true_r = b.sub(&op.apply(&self.x)?)?;
        let drift = true_r.sub(&self.r)?.norm();
        let scale = b.norm();
        Ok(if scale > 0.0 { drift / scale } else { drift })
    }

    /// Largest `|⟨A p_i, A p_j⟩|`, `i ≠ j`, relative to the largest `‖A p‖²`.
    pub fn ap_orthogonality_defect(&self) -> f64 {
        let max_sq = self.dirs.iter().map(|d| d.ap_norm_sqr).fold(0.0, f64::max);
        if max_sq == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, a) in self.dirs.iter().enumerate() {
            for b in self.dirs.iter().skip(i + 1) {
                worst = worst.max(inner_unchecked(a.ap.as_slice(), b.ap.as_slice()).norm());
            }
        }
        worst / max_sq
    }

    /// Largest `|⟨r_n, A p_j⟩| / (‖r_n‖‖A p_j‖)` over the directions that
    /// produced `r_n` (every buffered direction except the newest).
    pub fn residual_orthogonality_defect(&self) -> f64 {
        let rn = self.r.norm();
        if rn == 0.0 {
            return 0.0;
        }
        self.dirs
            .iter()
            .skip(1)
            .filter(|d| d.ap_norm_sqr > 0.0)
            .map(|d| {
                inner_unchecked(self.r.as_slice(), d.ap.as_slice()).norm()
                    / (rn * d.ap_norm_sqr.sqrt())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownPolicy {
    /// Return the breakdown as an error.
    Error,
    /// End the solve and report the breakdown in the status.
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop once `‖r_n‖ ≤ rtol·‖r_0‖`. Zero means only an exactly vanishing
    /// residual stops early.
    pub rtol: f64,
    pub on_breakdown: BreakdownPolicy,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rtol: 0.0,
            on_breakdown: BreakdownPolicy::Error,
        }
    }
}

impl StoppingRule {
    pub fn fixed(max_iters: usize) -> Self {
        Self {
            max_iters,
            ..Self::default()
        }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn stop_on_breakdown(mut self) -> Self {
        self.on_breakdown = BreakdownPolicy::Stop;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub residual_norm: f64,
    /// `‖r_{n+1}‖ / ‖r_n‖`, filled in once the next residual exists.
    pub q: Option<f64>,
    /// Line-search coefficient used to leave iterate `n`.
    pub lambda: Option<Complex64>,
    /// `⟨U r_n, r_n⟩ / ⟨r_n, r_n⟩` for unitary-family systems, when requested.
    pub omega: Option<Complex64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bound_values: BTreeMap<String, f64>,
}

impl TraceRecord {
    fn new(n: usize, residual_norm: f64) -> Self {
        Self {
            n,
            residual_norm,
            q: None,
            lambda: None,
            omega: None,
            bound_values: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub k: usize,
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn from_records(k: usize, records: Vec<TraceRecord>) -> Self {
        Self { k, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_norm).collect()
    }

    /// The available ratios `q_0, q_1, …` in order.
    pub fn q_values(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.q).collect()
    }

    pub fn last_residual_norm(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.residual_norm)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: ComplexVector,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    /// Steps whose line-search coefficient was exactly zero.
    pub stagnated_steps: Vec<usize>,
}

pub fn solve(
    op: &LinearOperator,
    b: &ComplexVector,
    x0: &ComplexVector,
    k: usize,
    stop: &StoppingRule,
) -> Result<Solution, OrthominError> {
    solve_with(op, b, x0, k, stop, |_, _| {})
}

/// Like [`solve`], calling `inspect` with the solver state and the fresh
/// trace record after every iterate (including `n = 0`). Observers can fill
/// `omega` or `bound_values`, or capture residuals.
pub fn solve_with<F>(
    op: &LinearOperator,
    b: &ComplexVector,
    x0: &ComplexVector,
    k: usize,
    stop: &StoppingRule,
    mut inspect: F,
) -> Result<Solution, OrthominError>
where
    F: FnMut(&OrthominState, &mut TraceRecord),
{
    let mut state = OrthominState::new(op, b, x0, k)?;
    let r0_norm = state.residual().norm();
    let mut records = vec![TraceRecord::new(0, r0_norm)];
    inspect(&state, &mut records[0]);
    let mut stagnated_steps = Vec::new();

    let status = loop {
        let rn = records.last().map_or(0.0, |r| r.residual_norm);
        if rn == 0.0 || rn <= stop.rtol * r0_norm {
            break SolveStatus::Converged;
        }
        if state.n() >= stop.max_iters {
            break SolveStatus::MaxIterations;
        }
        match state.step(op) {
            Ok(info) => {
                if info.stagnated {
                    stagnated_steps.push(state.n() - 1);
                }
                let next_norm = state.residual().norm();
                let last = records.last_mut().expect("trace is never empty");
                last.lambda = Some(info.lambda);
                last.q = Some(next_norm / last.residual_norm);
                let mut rec = TraceRecord::new(state.n(), next_norm);
                inspect(&state, &mut rec);
                records.push(rec);
            }
            Err(OrthominError::Breakdown { .. }) if stop.on_breakdown == BreakdownPolicy::Stop => {
                break SolveStatus::Breakdown;
            }
            Err(e) => return Err(e),
        }
    };

    Ok(Solution {
        x: state.x().clone(),
        trace: ConvergenceTrace::from_records(k, records),
        status,
        stagnated_steps,
    })
}

/// `r` minus its orthogonal projection onto `span(aps)`, via explicit
/// Gram–Schmidt on `aps`. Vectors whose orthogonalized norm falls below
/// `1e-12` of their original norm are dropped from the basis.
pub fn residual_projection_oracle(
    r: &ComplexVector,
    aps: &[ComplexVector],
) -> Result<ComplexVector, OrthominError> {
    if aps.is_empty() {
        return Err(OrthominError::InvalidBasis);
    }
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(aps.len());
    for a in aps {
        if a.len() != r.len() {
            return Err(LinopError::DimensionMismatch {
                expected: r.len(),
                found: a.len(),
            }
            .into());
        }
        let original = a.norm();
        if original == 0.0 {
            return Err(OrthominError::InvalidBasis);
        }
        let mut v = a.clone();
        // two passes of classical Gram–Schmidt
        for _ in 0..2 {
            for e in &basis {
                let c = inner_unchecked(v.as_slice(), e.as_slice());
                v.add_scaled(-c, e);
            }
        }
        let vn = v.norm();
        if vn < 1e-12 * original {
            continue;
        }
        basis.push(v.scale(Complex64::new(1.0 / vn, 0.0)));
    }
    let mut out = r.clone();
    for e in &basis {
        let c = inner_unchecked(r.as_slice(), e.as_slice());
        out.add_scaled(-c, e);
    }
    Ok(out)
}
