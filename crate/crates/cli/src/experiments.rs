use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use orthomin_core::diagnostics::{bound_report, estimate_rate, hull_distance, RateEstimate};
use orthomin_core::moments::{haar_exact_tn, MomentSequence, MomentsError};
use orthomin_core::qseries::{
    coefficient_sums, finite_jacobi_check, jacobi_triple_product_check, macmahon_check,
    phi_ratio_identity_check, q_binomial,
};
use orthomin_core::scalar::{parse_rational, pythagorean_point, rational, ExactComplex, Scalar};
use orthomin_core::spectra::{arc_spectrum, roots_of_unity};
use orthomin_core::{solve, ComplexVector, SpectrumSpec, StoppingRule};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat, R0Choice};
use crate::error::CliError;
use crate::report::{format_sig, CsvTable, KResult, RunReport, VERSION};

/// Ratios computed once the residual has dropped this far below `‖r_0‖`
/// are rounding noise and are excluded from bound checks.
pub const NOISE_FLOOR: f64 = 1e-13;

pub const BOUND_SLACK: f64 = 1e-12;

pub const TABLE21_K: [usize; 8] = [1, 2, 3, 4, 5, 7, 9, 11];

fn rate_for(q: &[f64], window: usize) -> Option<RateEstimate> {
    let trace = orthomin_core::ConvergenceTrace::from_records(
        0,
        q.iter()
            .enumerate()
            .map(|(n, &v)| orthomin_core::TraceRecord {
                n,
                residual_norm: 1.0,
                q: Some(v),
                lambda: None,
                omega: None,
                bound_values: Default::default(),
            })
            .collect(),
    );
    let w = window.min(q.len());
    if w == 0 {
        return None;
    }
    estimate_rate(&trace, w).ok()
}

/// Runs every `k` of the configuration and collects traces, bounds and rates.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mu = cfg.spectrum.eigenvalues()?;
    let op = cfg.spectrum.operator()?;
    let (b, x0) = cfg.r0.system_vectors(mu.len());
    let bounds = bound_report(&mu, cfg.spectrum.circle())?;
    let stop = StoppingRule::fixed(cfg.iters).stop_on_breakdown();
    let results: Vec<KResult> = cfg
        .k_list
        .par_iter()
        .map(|&k| {
            let sol = solve(&op, &b, &x0, k, &stop)?;
            Ok(KResult::from_trace(&sol.trace, sol.status))
        })
        .collect::<Result<_, CliError>>()?;
    let mut rates = BTreeMap::new();
    for res in &results {
        if let Some(rate) = rate_for(&res.q, cfg.window) {
            rates.insert(res.k.to_string(), rate);
        }
    }
    Ok(RunReport {
        config: serde_json::to_value(cfg)?,
        results,
        bounds: Some(bounds),
        rates,
        version: VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Every meaningful `q_n` against `ρ/|z0|` (circle spectra) and the
/// field-of-values bound (when the origin is outside the hull).
pub fn check_bounds(report: &RunReport) -> Result<(), CliError> {
    let Some(bounds) = &report.bounds else {
        return Ok(());
    };
    for res in &report.results {
        let r0 = res.residual_norms.first().copied().unwrap_or(0.0);
        for (n, &q) in res.q.iter().enumerate() {
            if res.residual_norms[n + 1] <= NOISE_FLOOR * r0 {
                break;
            }
            if let Some(nb) = bounds.normal_bound {
                if q > nb + BOUND_SLACK {
                    return Err(CliError::Contract(format!(
                        "k = {}, n = {n}: q = {q} exceeds rho/|z0| = {nb}",
                        res.k
                    )));
                }
            }
            if bounds.fov_distance > 0.0 && q > bounds.eisenstat_bound + BOUND_SLACK {
                return Err(CliError::Contract(format!(
                    "k = {}, n = {n}: q = {q} exceeds field-of-values bound {}",
                    res.k, bounds.eisenstat_bound
                )));
            }
        }
    }
    Ok(())
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    run_config(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table21Column {
    pub k: usize,
    pub residual_norms: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table21 {
    pub rho: f64,
    pub d: usize,
    pub iters: usize,
    pub columns: Vec<Table21Column>,
}

impl Table21 {
    pub fn column(&self, k: usize) -> Option<&Table21Column> {
        self.columns.iter().find(|c| c.k == k)
    }

    /// Row `it` (1-based) shows `(‖r_{it-1}‖, q_{it-1})`.
    pub fn entry(&self, k: usize, it: usize) -> Option<(f64, Option<f64>)> {
        let col = self.column(k)?;
        let n = it.checked_sub(1)?;
        let norm = *col.residual_norms.get(n)?;
        Some((norm, col.q.get(n).copied()))
    }

    /// First displayed row for column `k`; columns with `k ≥ 5` start at 5.
    pub fn first_row(k: usize) -> usize {
        if k >= 5 {
            5
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "Orthomin(k) on I + rho*U, d = {}, rho = {}, b = ones, x0 = 0\n",
            self.d, self.rho
        );
        let ks: Vec<usize> = self.columns.iter().map(|c| c.k).collect();
        for group in ks.chunks(4) {
            let start = group.iter().map(|&k| Self::first_row(k)).min().unwrap_or(1);
            out.push('\n');
            out.push_str(&format!("{:>4}", "it"));
            for k in group {
                out.push_str(&format!(" | {:^17}", format!("Orthomin({k})")));
            }
            out.push('\n');
            out.push_str(&format!("{:>4}", ""));
            for _ in group {
                out.push_str(&format!(" | {:>8} {:>8}", "|r_n|", "q_n"));
            }
            out.push('\n');
            for it in start..=self.iters {
                out.push_str(&format!("{it:>4}"));
                for &k in group {
                    match self.entry(k, it) {
                        Some((norm, q)) if it >= Self::first_row(k) => {
                            let q = q.map(|v| format!("{v:.4}")).unwrap_or_default();
                            out.push_str(&format!(" | {norm:>8.4} {q:>8}"));
                        }
                        _ => out.push_str(&format!(" | {:>8} {:>8}", "", "")),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn csv(&self, digits: usize) -> CsvTable {
        let mut t = CsvTable::new(["k", "it", "n", "residual_norm", "q"]);
        for col in &self.columns {
            for (n, norm) in col.residual_norms.iter().enumerate() {
                t.push(vec![
                    col.k.to_string(),
                    (n + 1).to_string(),
                    n.to_string(),
                    format_sig(*norm, digits),
                    col.q.get(n).map(|v| format_sig(*v, digits)).unwrap_or_default(),
                ]);
            }
        }
        t
    }
}

/// Table of residual norms and ratios for `k ∈ {1,2,3,4,5,7,9,11}` on
/// `d` roots of unity, `b = ones`, `x0 = 0`.
pub fn cmd_table21(rho: f64, d: usize, iters: usize) -> Result<Table21, CliError> {
    if iters < 1 {
        return Err(CliError::Config("iters must be at least 1".into()));
    }
    let spec = SpectrumSpec::UnitCircleRoots {
        d,
        rho,
        z0_re: 1.0,
        z0_im: 0.0,
    };
    let op = spec.operator()?;
    let b = ComplexVector::ones(d);
    let x0 = ComplexVector::zeros(d);
    let stop = StoppingRule::fixed(iters).stop_on_breakdown();
    let columns = TABLE21_K
        .iter()
        .map(|&k| {
            let sol = solve(&op, &b, &x0, k, &stop)?;
            Ok(Table21Column {
                k,
                residual_norms: sol.trace.residual_norms(),
                q: sol.trace.q_values(),
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table21 {
        rho,
        d,
        iters,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub u: Complex64,
    pub d: usize,
    pub k_list: Vec<usize>,
    pub iters: usize,
    pub window: usize,
    pub r0: R0Choice,
}

impl Default for EllipseParams {
    /// The angle is measured so that the ellipse sits in the orientation
    /// whose observed rates are 0.6891227 (k ≥ 2) and about 0.79 (k = 1).
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            theta: PI / 3.0,
            u: Complex64::new(2.0, 1.0),
            d: 128,
            k_list: vec![1, 2, 3, 4, 5, 10],
            iters: 400,
            window: 20,
            r0: R0Choice::Ones,
        }
    }
}

impl EllipseParams {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            spectrum: SpectrumSpec::Ellipse {
                d: self.d,
                alpha: self.alpha,
                beta: self.beta,
                theta: self.theta,
                u_re: self.u.re,
                u_im: self.u.im,
            },
            k_list: self.k_list.clone(),
            iters: self.iters,
            r0: self.r0,
            window: self.window,
            output: None,
            format: OutputFormat::Json,
        }
    }
}

pub fn cmd_ellipse(params: &EllipseParams) -> Result<RunReport, CliError> {
    run_config(&params.config())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Circle,
    Hull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub d_list: Vec<usize>,
    pub rho_list: Vec<f64>,
    pub k_list: Vec<usize>,
    /// Arc half-angles; hull scans only.
    pub half_angles: Vec<f64>,
    pub iters: usize,
    pub window: usize,
    /// `|limit - ρ|` below this counts as `rate = rho`.
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RateEqualsRho,
    RateBelowRho,
    RateAboveRho,
    ConstantQ,
    /// `k ≥ d`: the iteration terminates, so there is no asymptotic rate.
    FiniteTermination,
    NoData,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::RateEqualsRho => "rate = rho",
            Verdict::RateBelowRho => "rate < rho",
            Verdict::RateAboveRho => "rate > rho",
            Verdict::ConstantQ => "constant q_n",
            Verdict::FiniteTermination => "finite termination",
            Verdict::NoData => "no data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub d: usize,
    pub rho: f64,
    pub k: usize,
    pub half_angle: Option<f64>,
    pub limit: f64,
    pub spread: f64,
    pub abs_diff: f64,
    /// Distance from `-ρ` to the hull of the unit-circle points.
    pub hull_distance: f64,
    pub verdict: Verdict,
    /// `rate = rho` predicted when `-ρ` lies in the hull, `rate < rho`
    /// otherwise; `None` for excluded cases (`d = 2`, `k ≥ d`, no data).
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub kind: ScanKind,
    pub grid: ScanGrid,
    pub rows: Vec<ScanRow>,
    pub consistent: usize,
    pub inconsistent: usize,
    pub excluded: usize,
    pub version: String,
}

impl ScanReport {
    pub fn csv(&self, digits: usize) -> CsvTable {
        let mut t = CsvTable::new([
            "d",
            "rho",
            "k",
            "half_angle",
            "limit",
            "spread",
            "abs_diff",
            "hull_distance",
            "verdict",
            "consistent",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.d.to_string(),
                format_sig(r.rho, digits),
                r.k.to_string(),
                r.half_angle.map(|h| format_sig(h, digits)).unwrap_or_default(),
                format_sig(r.limit, digits),
                format_sig(r.spread, digits),
                format_sig(r.abs_diff, digits),
                format_sig(r.hull_distance, digits),
                r.verdict.label().to_string(),
                r.consistent.map(|c| c.to_string()).unwrap_or_default(),
            ]);
        }
        t
    }
}

fn scan_point(
    mu: Vec<Complex64>,
    d: usize,
    rho: f64,
    k: usize,
    half_angle: Option<f64>,
    grid: &ScanGrid,
) -> Result<ScanRow, CliError> {
    let zeta: Vec<Complex64> = mu.iter().map(|m| (m - 1.0) / rho).collect();
    let hull = hull_distance(&zeta, Complex64::new(-rho, 0.0))?;
    let op = orthomin_core::LinearOperator::diagonal(ComplexVector::new(mu)?);
    let stop = StoppingRule::fixed(grid.iters).stop_on_breakdown();
    let sol = solve(&op, &ComplexVector::ones(d), &ComplexVector::zeros(d), k, &stop)?;
    let q = sol.trace.q_values();
    let rate = rate_for(&q, grid.window);
    let (limit, spread) = rate.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.limit, r.residual_spread));
    let abs_diff = (limit - rho).abs();
    let verdict = if k >= d {
        Verdict::FiniteTermination
    } else if rate.is_none() {
        Verdict::NoData
    } else if d == 2 && q.len() > 1 && q[1..].iter().all(|v| (v - q[1]).abs() < 1e-10) {
        Verdict::ConstantQ
    } else if abs_diff < grid.tol {
        Verdict::RateEqualsRho
    } else if limit < rho {
        Verdict::RateBelowRho
    } else {
        Verdict::RateAboveRho
    };
    let consistent = match verdict {
        Verdict::ConstantQ | Verdict::FiniteTermination | Verdict::NoData => None,
        v if hull > 0.0 => Some(v == Verdict::RateBelowRho),
        v => Some(v == Verdict::RateEqualsRho),
    };
    Ok(ScanRow {
        d,
        rho,
        k,
        half_angle,
        limit,
        spread,
        abs_diff,
        hull_distance: hull,
        verdict,
        consistent,
    })
}

/// Circle scans run `d` roots of unity; hull scans run arcs of the given
/// half-angles. Grid points run in parallel; rows keep grid order.
pub fn cmd_conjecture_scan(kind: ScanKind, grid: &ScanGrid) -> Result<ScanReport, CliError> {
    if grid.iters < 1 || grid.window < 1 {
        return Err(CliError::Config("iters and window must be at least 1".into()));
    }
    if grid.d_list.is_empty() || grid.rho_list.is_empty() || grid.k_list.is_empty() {
        return Err(CliError::Config("scan grid must not be empty".into()));
    }
    if grid.k_list.contains(&0) {
        return Err(CliError::Config("every k must be at least 1".into()));
    }
    let mut points: Vec<(usize, f64, usize, Option<f64>)> = Vec::new();
    for &d in &grid.d_list {
        for &rho in &grid.rho_list {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(CliError::Config(format!("rho = {rho} outside (0, 1)")));
            }
            for &k in &grid.k_list {
                match kind {
                    ScanKind::Circle => points.push((d, rho, k, None)),
                    ScanKind::Hull => {
                        if grid.half_angles.is_empty() {
                            return Err(CliError::Config("hull scan needs half angles".into()));
                        }
                        for &h in &grid.half_angles {
                            points.push((d, rho, k, Some(h)));
                        }
                    }
                }
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|&(d, rho, k, half)| {
            let mu = match half {
                None => roots_of_unity(d).into_iter().map(|z| 1.0 + rho * z).collect(),
                Some(h) => arc_spectrum(d, rho, h)?,
            };
            scan_point(mu, d, rho, k, half, grid)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let consistent = rows.iter().filter(|r| r.consistent == Some(true)).count();
    let inconsistent = rows.iter().filter(|r| r.consistent == Some(false)).count();
    let excluded = rows.len() - consistent - inconsistent;
    Ok(ScanReport {
        kind,
        grid: grid.clone(),
        rows,
        consistent,
        inconsistent,
        excluded,
        version: VERSION.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MomentsMode {
    Finite,
    Haar,
    HaarExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsParams {
    pub mode: MomentsMode,
    /// Decimal, or `p/q` (required form for exact mode).
    pub rho: String,
    pub d: usize,
    /// Highest moment index reported.
    pub j_max: usize,
    pub steps: usize,
    pub r0: R0Choice,
}

#[derive(Debug)]
pub struct MomentsOutput {
    pub table: CsvTable,
    /// PASS/FAIL lines (exact mode) and notes.
    pub lines: Vec<String>,
    /// Finite/Haar sequences, for inspection.
    pub sequence: Option<MomentSequence>,
    pub failure: Option<CliError>,
}

fn parse_rho(text: &str) -> Result<f64, CliError> {
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(v);
    }
    parse_rational(text)
        .and_then(|r| r.to_f64())
        .ok_or_else(|| CliError::Config(format!("cannot parse rho = {text:?}")))
}

fn sequence_table(seq: &MomentSequence, j_max: usize, digits: usize) -> Result<CsvTable, CliError> {
    let mut buf = Vec::new();
    seq.write_csv(&mut buf, j_max, |v| format_sig(v, digits))?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().split(',').map(String::from);
    let mut table = CsvTable::new(header);
    for line in lines {
        table.push(line.split(',').map(String::from).collect());
    }
    Ok(table)
}

pub fn cmd_moments(params: &MomentsParams, digits: usize) -> Result<MomentsOutput, CliError> {
    match params.mode {
        MomentsMode::Finite | MomentsMode::Haar => {
            let rho = parse_rho(&params.rho)?;
            if !(rho > 0.0 && rho < 1.0) {
                return Err(CliError::Config(format!("need 0 < rho < 1, got {rho}")));
            }
            let (mut seq, j_max) = if params.mode == MomentsMode::Finite {
                if params.d < 1 {
                    return Err(CliError::Config("d must be at least 1".into()));
                }
                let (r0, _) = params.r0.system_vectors(params.d);
                (MomentSequence::finite(rho, &r0)?, params.j_max.min(params.d))
            } else {
                (MomentSequence::haar(rho, params.j_max + params.steps), params.j_max)
            };
            let mut lines = Vec::new();
            let mut failure = None;
            for _ in 0..params.steps {
                match seq.advance() {
                    Ok(_) => {}
                    Err(MomentsError::Degenerate { n }) => {
                        lines.push(format!("measure collapsed at step {n}; sequence ends"));
                        break;
                    }
                    Err(e) => {
                        lines.push(format!("stopped: {e}"));
                        failure = Some(e.into());
                        break;
                    }
                }
            }
            let table = sequence_table(&seq, j_max, digits)?;
            Ok(MomentsOutput {
                table,
                lines,
                sequence: Some(seq),
                failure,
            })
        }
        MomentsMode::HaarExact => {
            let rho = parse_rational(&params.rho).ok_or_else(|| {
                CliError::Config(format!("exact mode needs a rational rho, got {:?}", params.rho))
            })?;
            let mut table = CsvTable::new(["n", "T", "rho_pow_2n_plus_1", "omega", "T_float", "status"]);
            let mut lines = Vec::new();
            let mut failure = None;
            match haar_exact_tn(&rho, params.steps) {
                Ok(run) => {
                    for (n, (t, w)) in run.t.iter().zip(&run.omega).enumerate() {
                        let expected = rho.clone().powu(2 * n as u32 + 1);
                        table.push(vec![
                            n.to_string(),
                            t.re.to_string(),
                            expected.to_string(),
                            w.re.to_string(),
                            format_sig(t.re.magnitude(), digits),
                            "PASS".into(),
                        ]);
                        if n >= 1 {
                            lines.push(format!("PASS n={n} T_n = rho^{} = {}", 2 * n + 1, t.re));
                        }
                    }
                }
                Err(MomentsError::IdentityViolation { n, got, expected }) => {
                    for m in 1..n {
                        lines.push(format!("PASS n={m}"));
                    }
                    lines.push(format!("FAIL n={n} T_n = {got}, expected {expected}"));
                    failure = Some(CliError::Identity(format!(
                        "T_{n} = {got} differs from rho^{} = {expected}",
                        2 * n + 1
                    )));
                }
                Err(MomentsError::Contract(msg)) => return Err(CliError::Config(msg)),
                Err(e) => return Err(e.into()),
            }
            Ok(MomentsOutput {
                table,
                lines,
                sequence: None,
                failure,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QCheckParams {
    pub max_n: usize,
    pub trials: usize,
    pub seed: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QCheckLine {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl QCheckLine {
    pub fn render(&self) -> String {
        format!(
            "{} {:<24} cases={:<5} max_error={:.3e} tol={:.0e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.max_error,
            self.tolerance
        )
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    max_error: f64,
}

impl Tally {
    fn add(&mut self, err: f64) {
        self.cases += 1;
        self.max_error = self.max_error.max(if err.is_nan() { f64::INFINITY } else { err });
    }

    fn line(self, name: &str, tolerance: f64) -> QCheckLine {
        QCheckLine {
            name: name.into(),
            cases: self.cases,
            pass: self.max_error <= tolerance,
            max_error: self.max_error,
            tolerance,
        }
    }
}

pub const QCHECK_TOL: f64 = 1e-12;

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.abs().max(1.0)
}

/// Identity checks: fixed hand-expansion cases, then `trials` random draws
/// per identity, then (with `exact`) rational-arithmetic checks that must
/// agree to zero error.
pub fn cmd_qcheck(params: &QCheckParams) -> Result<Vec<QCheckLine>, CliError> {
    if params.max_n < 1 {
        return Err(CliError::Config("max_n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut phi = Tally::default();
    let mut jac = Tally::default();
    let mut mac = Tally::default();
    let mut sums = Tally::default();
    let mut jtp = Tally::default();

    // hand-expansion cases
    for q in [0.0, 0.5, -0.3] {
        let (l, r) = phi_ratio_identity_check(1, &q)?;
        phi.add((l - r).abs());
        jac.add(finite_jacobi_check(1, &q)?.max_error);
        let (sq, adj) = coefficient_sums(1, &q);
        sums.add((sq - (1.0 + q * q)).abs().max((adj + q).abs()));
        let (l, r) = macmahon_check(1, 0, &q, &1.7)?;
        mac.add((l - r).abs());
    }
    let (l, r) = macmahon_check(0, 0, &0.4, &2.0)?;
    mac.add((l - r).abs());
    for z in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)] {
        let rep = jacobi_triple_product_check(0.5, z, 30)?;
        jtp.add((rep.lhs - rep.rhs).abs().max(rep.imaginary_residue.abs()));
    }

    for _ in 0..params.trials {
        let n = rng.random_range(1..=params.max_n);
        let q: f64 = rng.random_range(-0.95..0.95);
        let (l, r) = phi_ratio_identity_check(n, &q)?;
        phi.add((l - r).abs());

        let qj: f64 = rng.random_range(-0.9..0.9);
        jac.add(finite_jacobi_check(n, &qj)?.max_error);
        let qc = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(-PI..PI));
        jac.add(finite_jacobi_check(n, &qc)?.max_error);

        let (sq, adj) = coefficient_sums(n, &qj);
        let q2 = qj * qj;
        let b0 = q_binomial(2 * n, n, &q2)?;
        let b1 = q_binomial(2 * n, n + 1, &q2)?;
        sums.add(rel((sq - b0).abs(), b0).max(rel((adj + qj * b1).abs(), b0)));

        let m = rng.random_range(0..=params.max_n.min(6));
        let nn = rng.random_range(0..=params.max_n.min(6));
        let qm = Complex64::new(rng.random_range(-0.9..0.9), 0.0);
        let z = Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(-PI..PI));
        let (l, r) = macmahon_check(m, nn, &qm, &z)?;
        mac.add(rel((l - r).norm(), l.norm()));

        let rho = rng.random_range(0.01..=0.5);
        let zt = Complex64::from_polar(1.0, rng.random_range(-PI..PI));
        let rep = jacobi_triple_product_check(rho, zt, 30)?;
        jtp.add((rep.lhs - rep.rhs).abs().max(rep.imaginary_residue.abs()));
    }

    let mut lines = vec![
        phi.line("phi_ratio", QCHECK_TOL),
        jac.line("finite_jacobi", QCHECK_TOL),
        mac.line("macmahon", QCHECK_TOL),
        sums.line("coefficient_sums", QCHECK_TOL),
        jtp.line("jacobi_triple_product", QCHECK_TOL),
    ];

    if params.exact {
        let mut ejac = Tally::default();
        let mut emac = Tally::default();
        let mut ephi = Tally::default();
        let top = params.max_n.min(8);
        let draws = params.trials.clamp(1, 20);
        for trial in 0..draws {
            let p = rng.random_range(-9i64..=9);
            let den = rng.random_range(10i64..=20);
            let q = rational(p, den);
            let n = 1 + trial % top;
            let rep = finite_jacobi_check(n, &q)?;
            ejac.add(if rep.discrepancies().is_empty() { 0.0 } else { rep.max_error.max(f64::MIN_POSITIVE) });
            let (l, r) = phi_ratio_identity_check(n, &q)?;
            ephi.add(if l == r { 0.0 } else { (l - r).magnitude().max(f64::MIN_POSITIVE) });
            let z: ExactComplex = pythagorean_point(&rational(rng.random_range(1..=9), 11));
            let qc = ExactComplex::new(q.clone(), rational(0, 1));
            let (l, r) = macmahon_check(n.min(4), (n + 1).min(4), &qc, &z)?;
            emac.add(if l == r { 0.0 } else { (l - r).magnitude().max(f64::MIN_POSITIVE) });
        }
        lines.push(ephi.line("phi_ratio_exact", 0.0));
        lines.push(ejac.line("finite_jacobi_exact", 0.0));
        lines.push(emac.line("macmahon_exact", 0.0));
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_first_entries() {
        let t = cmd_table21(0.8, 13, 14).unwrap();
        let (n, q) = t.entry(1, 1).unwrap();
        assert_eq!(format!("{n:.4}"), "3.6056");
        assert_eq!(format!("{:.4}", q.unwrap()), "0.6247");
        assert!(t.render().contains("Orthomin(11)"));
        assert_eq!(t.csv(10).rows.len(), 8 * 15);
    }

    #[test]
    fn bound_check_flags_violations() {
        let cfg = ExperimentConfig::from_json(
            r#"{"spectrum":{"kind":"unit_circle_roots","d":13,"rho":0.8},"k_list":[1,3],"iters":30}"#,
        )
        .unwrap();
        let mut report = run_config(&cfg).unwrap();
        check_bounds(&report).unwrap();
        report.results[0].q[3] = 0.9;
        assert_eq!(check_bounds(&report).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn d2_scan_reports_constant_q() {
        let grid = ScanGrid {
            d_list: vec![2],
            rho_list: vec![0.5],
            k_list: vec![1],
            half_angles: vec![],
            iters: 40,
            window: 10,
            tol: 1e-3,
        };
        let rep = cmd_conjecture_scan(ScanKind::Circle, &grid).unwrap();
        assert_eq!(rep.rows[0].verdict, Verdict::ConstantQ);
        assert_eq!(rep.excluded, 1);
    }

    #[test]
    fn haar_exact_pass_lines() {
        let params = MomentsParams {
            mode: MomentsMode::HaarExact,
            rho: "2/5".into(),
            d: 0,
            j_max: 0,
            steps: 8,
            r0: R0Choice::Ones,
        };
        let out = cmd_moments(&params, 10).unwrap();
        assert_eq!(out.lines.iter().filter(|l| l.starts_with("PASS")).count(), 8);
        assert!(out.failure.is_none());
        assert_eq!(out.table.rows.len(), 9);
    }

    #[test]
    fn qcheck_deterministic_only() {
        let lines = cmd_qcheck(&QCheckParams {
            max_n: 4,
            trials: 0,
            seed: 1,
            exact: false,
        })
        .unwrap();
        assert!(lines.iter().all(|l| l.pass));
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn parses_rho_forms() {
        assert_eq!(parse_rho("0.25").unwrap(), 0.25);
        assert_eq!(parse_rho("1/4").unwrap(), 0.25);
        assert!(parse_rho("x").is_err());
    }
}
