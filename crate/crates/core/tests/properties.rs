use std::f64::consts::PI;

use num_complex::Complex64;
use orthomin_core::diagnostics::{
    bound_report, estimate_rate, hull_distance, monotonicity_check,
};
use orthomin_core::moments::{haar_exact_tn, solver_moments, MomentSequence};
use orthomin_core::qseries::coefficient_sums;
use orthomin_core::scalar::rational;
use orthomin_core::spectra::{arc_spectrum, roots_of_unity, roots_of_unity_system};
use orthomin_core::{
    residual_projection_oracle, solve, solve_with, ComplexVector, LinearOperator, OrthominState,
    SpectrumSpec, StoppingRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> ComplexVector {
    ComplexVector::new(
        (0..d)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

#[test]
fn prefix_property_is_bitwise() {
    let op = roots_of_unity_system(13, 0.8, c(1.0, 0.0)).unwrap();
    let b = ComplexVector::ones(13);
    let x0 = ComplexVector::zeros(13);
    let traces: Vec<_> = (1..=11)
        .map(|k| solve(&op, &b, &x0, k, &StoppingRule::fixed(14)).unwrap().trace)
        .collect();
    for k in 1..=10 {
        let (a, b) = (&traces[k - 1], &traces[k]);
        for n in 0..k {
            assert_eq!(a.records[n].residual_norm, b.records[n].residual_norm);
            assert_eq!(a.records[n].q, b.records[n].q);
            assert_eq!(a.records[n].lambda, b.records[n].lambda);
        }
    }
}

#[test]
fn circle_systems_respect_both_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let d = rng.random_range(1..=40);
        let z0 = Complex64::from_polar(rng.random_range(0.5..3.0), rng.random_range(-PI..PI));
        let rho = z0.norm() * rng.random_range(0.05..0.95);
        let spec = SpectrumSpec::PerturbedCircle {
            d,
            rho,
            z0_re: z0.re,
            z0_im: z0.im,
            seed: rng.random(),
            jitter: rng.random_range(0.0..0.3),
        };
        let mu = spec.eigenvalues().unwrap();
        let report = bound_report(&mu, spec.circle()).unwrap();
        let op = spec.operator().unwrap();
        let k = rng.random_range(1..=5);
        let b = random_vector(&mut rng, d);
        // past 1e-13 the residual is rounding noise
        let stop = StoppingRule::fixed(60).with_rtol(1e-13).stop_on_breakdown();
        let sol = solve(&op, &b, &ComplexVector::zeros(d), k, &stop).unwrap();
        for q in sol.trace.q_values() {
            assert!(q <= report.normal_bound.unwrap() + 1e-12);
            assert!(q <= report.eisenstat_bound + 1e-12);
        }
    }
}

#[test]
fn eisenstat_bound_on_ellipse_and_pde() {
    let specs = [
        SpectrumSpec::Ellipse {
            d: 64,
            alpha: 2.0,
            beta: 1.0,
            theta: PI / 3.0,
            u_re: 2.0,
            u_im: 1.0,
        },
        SpectrumSpec::Pde { d: 32, a: 0.05, b: 1.0, c: 0.5 },
    ];
    for spec in specs {
        let mu = spec.eigenvalues().unwrap();
        let report = bound_report(&mu, None).unwrap();
        assert!(report.fov_distance > 0.0);
        let d = spec.dim();
        for k in 1..=3 {
            let sol = solve(
                &spec.operator().unwrap(),
                &ComplexVector::ones(d),
                &ComplexVector::zeros(d),
                k,
                &StoppingRule::fixed(80).stop_on_breakdown(),
            )
            .unwrap();
            for q in sol.trace.q_values() {
                assert!(q <= report.eisenstat_bound + 1e-12);
            }
        }
    }
}

#[test]
fn orthomin1_ratios_are_monotone_on_random_normal_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let d = rng.random_range(1..=24);
        let mu: Vec<Complex64> = (0..d)
            .map(|_| Complex64::from_polar(rng.random_range(0.1..2.0), rng.random_range(-PI..PI)))
            .collect();
        let op = LinearOperator::diagonal(ComplexVector::new(mu).unwrap());
        let b = random_vector(&mut rng, d);
        let stop = StoppingRule::fixed(60).stop_on_breakdown();
        let sol = solve(&op, &b, &ComplexVector::zeros(d), 1, &stop).unwrap();
        assert!(monotonicity_check(&sol.trace));
    }
}

#[test]
fn step_matches_projection_oracle_on_dense_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let d = rng.random_range(1..=8);
        let k = rng.random_range(1..=d);
        let rows = (0..d).map(|_| random_vector(&mut rng, d)).collect();
        let op = LinearOperator::dense(rows).unwrap();
        let b = random_vector(&mut rng, d);
        let mut state = OrthominState::new(&op, &b, &ComplexVector::zeros(d), k).unwrap();
        for _ in 0..2 * d {
            let r = state.residual().clone();
            let aps = state.buffered_aps();
            if state.step(&op).is_err() {
                break;
            }
            let expected = residual_projection_oracle(&r, &aps).unwrap();
            let diff = state.residual().sub(&expected).unwrap().norm();
            assert!(diff <= 1e-9 * r.norm(), "diff {diff}, |r| {}", r.norm());
            if state.residual().norm() <= 1e-12 * b.norm() {
                break;
            }
        }
    }
}

#[test]
fn lambda_matches_measure_formula_on_diagonal_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let d = 9;
    let mu: Vec<Complex64> = (0..d)
        .map(|_| c(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)))
        .collect();
    let op = LinearOperator::diagonal(ComplexVector::new(mu.clone()).unwrap());
    let b = random_vector(&mut rng, d);
    let mut expected = Vec::new();
    let sol = solve_with(
        &op,
        &b,
        &ComplexVector::zeros(d),
        1,
        &StoppingRule::fixed(10),
        |state, _| {
            let r = state.residual();
            let num: Complex64 = r.iter().zip(&mu).map(|(x, m)| m.conj() * x.norm_sqr()).sum();
            let den: f64 = r.iter().zip(&mu).map(|(x, m)| m.norm_sqr() * x.norm_sqr()).sum();
            expected.push(num / den);
        },
    )
    .unwrap();
    for (rec, lam) in sol.trace.records.iter().zip(&expected) {
        if let Some(l) = rec.lambda {
            assert!((l - lam).norm() < 1e-13);
        }
    }
}

#[test]
fn truncated_shift_reproduces_the_infinite_dimensional_case() {
    let rho = 0.6;
    let d = 40;
    let op = LinearOperator::shift(d, c(rho, 0.0));
    let mut b = ComplexVector::zeros(d);
    b[0] = c(1.0, 0.0);
    let sol = solve(&op, &b, &ComplexVector::zeros(d), 1, &StoppingRule::fixed(12)).unwrap();
    for rec in &sol.trace.records[..12] {
        let lam = rec.lambda.unwrap();
        let t = (1.0 - lam) / (lam * rho);
        let expected = rho.powi(2 * rec.n as i32 + 1);
        assert!((t - expected).norm() < 1e-12, "n = {}: {t} vs {expected}", rec.n);
    }
}

#[test]
fn haar_omega_is_the_phi_coefficient_ratio() {
    let rho = rational(2, 5);
    let run = haar_exact_tn(&rho, 10).unwrap();
    for (n, w) in run.omega.iter().enumerate().skip(1) {
        let (sq, adj) = coefficient_sums(n, &rho);
        assert_eq!(w.re, adj / sq);
        assert_eq!(w.im, rational(0, 1));
    }
}

#[test]
fn equivalence_chain_when_rate_reaches_rho() {
    let (d, rho) = (13, 0.3);
    let direct = solver_moments(d, rho, &ComplexVector::ones(d), 80).unwrap();
    let q_last = *direct.q.last().unwrap();
    assert!((q_last - rho).abs() < 1e-6);
    let mut seq = MomentSequence::finite_uniform(d, rho).unwrap();
    seq.advance_by(direct.q.len() - 1).unwrap();
    let row = seq.last();
    assert!((row.omega1() + rho).norm() < 1e-5);
    assert!((row.lambda - 1.0).norm() < 1e-5);
    assert!(row.t.norm() < 1e-5);
}

#[test]
fn hull_obstruction_keeps_omega_away_from_minus_rho() {
    let rho: f64 = 0.9;
    let d = 15;
    for half in [1.0, 2.0, PI - rho.acos() - 0.01] {
        let mu = arc_spectrum(d, rho, half).unwrap();
        let zeta: Vec<_> = mu.iter().map(|m| (m - 1.0) / rho).collect();
        let dist = hull_distance(&zeta, c(-rho, 0.0)).unwrap();
        assert!(dist > 0.0);
        let op = LinearOperator::diagonal(ComplexVector::new(mu).unwrap());
        let mut last_omega = c(0.0, 0.0);
        let stop = StoppingRule::fixed(300).stop_on_breakdown();
        let sol = solve_with(&op, &ComplexVector::ones(d), &ComplexVector::zeros(d), 1, &stop, |s, _| {
            let r = s.residual();
            let total = r.norm_sqr();
            if total > 0.0 {
                last_omega = r.iter().zip(&zeta).map(|(x, z)| z * x.norm_sqr()).sum::<Complex64>() / total;
            }
        })
        .unwrap();
        assert!((last_omega + rho).norm() > dist / 2.0);
        let window = sol.trace.q_values().len().min(10);
        let rate = estimate_rate(&sol.trace, window).unwrap();
        assert!(rate.limit < rho - 0.01);
    }
}

#[test]
fn roots_of_unity_are_conjugate_symmetric() {
    for d in 1..40 {
        let z = roots_of_unity(d);
        for j in 1..d {
            assert_eq!(z[d - j], z[j].conj());
            assert!((z[j] - Complex64::from_polar(1.0, 2.0 * PI * j as f64 / d as f64)).norm() < 1e-14);
        }
    }
}
