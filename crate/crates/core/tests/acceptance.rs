//! Acceptance criteria 1–9. Each criterion prints one PASS/FAIL line with its
//! measured value, tolerance and runtime; the test fails if any criterion does.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use mvcs::conditions::{check_pair_conditions, quaternion_complex_family};
use mvcs::hypercomplex::{
    extension_block, oct_left_rep, oct_right_rep, quat_complex_rep, quat_real_rep, Octonion, Quaternion,
    QuaternionPolar,
};
use mvcs::jc::{self, JcParams, RadialDensity, TwoModeParams};
use mvcs::oscillator::{build_ladders, commutator_report, eigen_check, ladder_residual, LadderVariant};
use mvcs::presets::presets;
use mvcs::resolution::{
    assemble_identity, beta_moment_check, diagonal_identity, extension_moment_grid, matrix_weight_identity,
    matrix_weight_moments, moment_residuals, quaternion_complex_identity, quaternion_complex_moments,
    quaternion_real_identity, quaternion_real_moments, IdentityProblem, QuadratureSpec,
};
use mvcs::special::{binomial, hyp1f1};
use mvcs::states::{
    norm_check, normalization_factor, BuildOptions, DependentSpec, Factor, MvcsSpec, PolarLabel, TruncationSpec,
};
use mvcs::weights::{MatrixWeights, ScalarWeights};
use mvcs::ComplexMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    summary: String,
}

fn report(id: u32, title: &str, elapsed: Duration, budget: Duration, outcome: Outcome) -> bool {
    let pass = outcome.pass && elapsed <= budget;
    println!(
        "criterion {id} [{}] {title}: {} ({:.2} s, budget {:.0} s)",
        if pass { "PASS" } else { "FAIL" },
        outcome.summary,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn timed(f: impl FnOnce() -> Outcome) -> (Duration, Outcome) {
    let start = Instant::now();
    let out = f();
    (start.elapsed(), out)
}

fn gram_dev(m: &ComplexMatrix, f: f64) -> f64 {
    (&(m * &m.adjoint()) - &ComplexMatrix::identity(m.dim()).scale_real(f)).max_abs()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let q = Quaternion::from_array([0; 4].map(|_| rng.random_range(-1.0..1.0)));
        worst = worst.max(gram_dev(&quat_real_rep(q), q.norm_sqr()));
        let a = Octonion([0; 8].map(|_| rng.random_range(-1.0..1.0)));
        worst = worst.max(gram_dev(&oct_left_rep(&a), a.norm_sqr()));
        worst = worst.max(gram_dev(&oct_right_rep(&a), a.norm_sqr()));
    }
    Outcome { pass: worst < 1e-12, summary: format!("max residual {worst:.2e} over 1000 inputs (tol 1e-12)") }
}

fn criterion_2() -> Outcome {
    let a = quaternion_complex_family("A");
    let b = quaternion_complex_family("B");
    let reports = [
        check_pair_conditions(&a, &b, 64, 7, 1e-12).unwrap(),
        check_pair_conditions(&b, &a, 64, 7, 1e-12).unwrap(),
    ];
    let worst = reports.iter().map(|r| r.max_residual()).fold(0.0, f64::max);
    Outcome {
        pass: reports.iter().all(|r| r.pass) && worst < 1e-12,
        summary: format!("max condition residual {worst:.2e} over 64 samples (tol 1e-12)"),
    }
}

fn at(r: f64, shift: f64) -> Quaternion {
    QuaternionPolar { r, theta: 0.4 + shift, phi: 1.3 - shift, psi: 0.2 + shift }.to_quaternion()
}

fn pair(m1: ComplexMatrix, m2: ComplexMatrix) -> Vec<Factor> {
    vec![
        Factor::scalar("A", m1, ScalarWeights::factorial()),
        Factor::scalar("B", m2, ScalarWeights::factorial()),
    ]
}

fn criterion_3() -> Outcome {
    let radii: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = (0.0_f64, String::new());
    let mut record = |name: &str, factors: &[Factor], target: f64| {
        let n = normalization_factor(factors, &vec![40; factors.len()]).unwrap().partial;
        let rel = (n / target - 1.0).abs();
        if rel >= worst.0 {
            worst = (rel, name.to_string());
        }
    };
    for &r in &radii {
        for &s in &radii {
            let target2 = (r * r + s * s).exp();
            record("complex", &pair(quat_complex_rep(at(r, 0.0)), quat_complex_rep(at(s, 0.5))), 2.0 * target2);
            record("real", &pair(quat_real_rep(at(r, 0.0)), quat_real_rep(at(s, 0.5))), 4.0 * target2);
            let h = 1.0 / SQRT_2;
            record(
                "extension",
                &pair(extension_block(r * h, r * h), extension_block(s * h, s * h)),
                4.0 * target2,
            );
            let mw = vec![
                Factor::matrix_weighted("Z1", quat_real_rep(at(r, 0.1)), MatrixWeights::rotation_block(0.3)),
                Factor::matrix_weighted("Z2", quat_real_rep(at(s, 0.7)), MatrixWeights::rotation_block(1.1)),
            ];
            record("matrix-weight", &mw, 4.0 * target2);
        }
    }
    Outcome {
        pass: worst.0 < 1e-9,
        summary: format!("max relative error {:.2e} ({}) on a 5x5 radius grid (tol 1e-9)", worst.0, worst.1),
    }
}

fn criterion_4() -> Outcome {
    let mut worst = (0.0_f64, "");
    for p in presets() {
        let states = p.states(&serde_json::Value::Null, 40).unwrap();
        let r = norm_check(&states).unwrap().residual;
        if r >= worst.0 {
            worst = (r, p.name);
        }
    }
    Outcome {
        pass: worst.0 < 1e-10,
        summary: format!("max |sum - 1| = {:.2e} ({}) over {} presets (tol 1e-10)", worst.0, worst.1, presets().len()),
    }
}

fn criterion_5() -> Outcome {
    let quad = QuadratureSpec::default();
    let grids = [
        moment_residuals(&quaternion_complex_moments(10), &quad).unwrap(),
        moment_residuals(&quaternion_real_moments(10), &quad).unwrap(),
        extension_moment_grid(10, &quad).unwrap(),
        moment_residuals(&matrix_weight_moments(10), &quad).unwrap(),
    ];
    let worst = grids.iter().map(|g| g.max_residual).fold(0.0, f64::max);
    let rows: usize = grids.iter().map(|g| g.rows.len()).sum();
    Outcome {
        pass: grids.iter().all(|g| g.pass) && worst < 1e-8,
        summary: format!("max relative residual {worst:.2e} over {rows} moments (tol 1e-8)"),
    }
}

fn criterion_6() -> Outcome {
    let mut inner = 0.0_f64;
    for s in [0.0, 0.2, 0.5, 0.7] {
        let spec = DependentSpec {
            family: "dependent".into(),
            label: BTreeMap::new(),
            outer: PolarLabel {
                radial: ComplexMatrix::scalar(2, C64::new(0.8, 0.0)),
                generator: mvcs::hypercomplex::sigma_n(0.4, 1.0),
                angle: 0.7,
            },
            outer_exponent: 0.5,
            outer_weights: ScalarWeights::factorial(),
            inner: PolarLabel {
                radial: ComplexMatrix::scalar(2, C64::new(s, 0.0)),
                generator: mvcs::hypercomplex::sigma_n(2.0, 3.0),
                angle: 1.9,
            },
            inner_exponent: 0.5,
            inner_ln_rho: std::sync::Arc::new(|m, l| -binomial((m + l) as u64, l as u64).ln()),
        };
        for m in 0..=5 {
            let partial = spec.inner_partial(m, 120).unwrap();
            inner = inner.max((partial * (1.0 - s).powi(m as i32 + 1) - 1.0).abs());
        }
    }
    let mut beta = 0.0_f64;
    for m in 1..=12 {
        for l in 0..=12 - m {
            beta = beta.max(beta_moment_check(m, l, 64).unwrap());
        }
    }
    Outcome {
        pass: inner < 1e-9 && beta < 1e-10,
        summary: format!("inner normalization error {inner:.2e} (tol 1e-9), beta identity error {beta:.2e} (tol 1e-10)"),
    }
}

fn identity(problem: IdentityProblem, spinor: usize) -> (f64, Duration) {
    let start = Instant::now();
    let trunc = TruncationSpec::uniform(spinor, problem.factors.len(), 5).unwrap();
    let dev = assemble_identity(&problem, &trunc).unwrap().max_deviation;
    (dev, start.elapsed())
}

fn criterion_7() -> (Outcome, Duration) {
    let quad = QuadratureSpec::default();
    let weak = JcParams::with_detuning(2.0, 1.0, 0.3);
    let (wp, wm) = weak.omega_pm().unwrap();
    let tjc_quad = QuadratureSpec { radial_nodes: 32, ..quad };
    let runs = [
        ("2.1", identity(quaternion_complex_identity(&quad).unwrap(), 2)),
        ("2.3", identity(quaternion_real_identity(&quad).unwrap(), 4)),
        ("3", identity(matrix_weight_identity(&[0.3], &quad).unwrap(), 4)),
        ("7.1", identity(diagonal_identity("tensored-jc", [wp, wm], [1.0, 1.0], &tjc_quad).unwrap(), 2)),
    ];
    let worst = runs.iter().map(|(_, (d, _))| *d).fold(0.0, f64::max);
    let slowest = runs.iter().map(|(_, (_, t))| *t).max().unwrap();
    let detail = runs.iter().map(|(n, (d, _))| format!("{n}: {d:.1e}")).collect::<Vec<_>>().join(", ");
    (
        Outcome { pass: worst < 1e-6, summary: format!("max deviation {detail} (tol 1e-6, per-factor cutoff 5)") },
        slowest,
    )
}

fn integers(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64).collect()
}

fn criterion_8() -> Outcome {
    let trunc = TruncationSpec::new(1, vec![40, 40]).unwrap();
    let first = build_ladders(LadderVariant::FirstFactor, &trunc, &[integers(40), integers(40)]).unwrap();
    let rep = commutator_report(&first, 1);
    let comm = rep.a_adag.max(rep.n_a).max(rep.n_adag);

    let q1 = Quaternion::new(0.3, 0.0, 0.4, 0.0);
    let q2 = Quaternion::new(0.1, 0.5, 0.2, 0.3);
    let spec = MvcsSpec::new("real", BTreeMap::new(), pair(quat_real_rep(q1), quat_real_rep(q2)));
    let four = TruncationSpec::new(4, vec![40, 40]).unwrap();
    let state = spec.build(0, &four, &BuildOptions::default()).unwrap();
    let ladder = build_ladders(LadderVariant::FirstFactor, &four, &[integers(40), integers(40)]).unwrap();
    let eig = eigen_check(&state, &quat_real_rep(q1), &ladder).unwrap();

    let (c1, c2) = (
        quat_complex_rep(Quaternion::new(0.2, 0.9, 0.0, 0.1)),
        quat_complex_rep(Quaternion::new(0.4, 0.0, 0.8, 0.3)),
    );
    let spec = MvcsSpec::new("complex", BTreeMap::new(), pair(c1.clone(), c2.clone()));
    let two = TruncationSpec::new(2, vec![40, 40]).unwrap();
    let state = spec.build(0, &two, &BuildOptions::default()).unwrap();
    let diag = build_ladders(LadderVariant::Diagonal, &two, &[integers(40), integers(40)]).unwrap();
    let witness = ladder_residual(&diag, &(&c1 * &c2), &state).unwrap();
    Outcome {
        pass: rep.pass && comm <= 1e-12 && eig < 1e-8 && witness > 1e-3,
        summary: format!(
            "commutators {comm:.1e} (tol 1e-12), eigenrelation {eig:.1e} (tol 1e-8), diagonal witness {witness:.3} (> 1e-3)"
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut window_ok = true;
    let mut points = 0;
    for &omega in &[0.5, 1.0, 2.0, 3.0] {
        for &det in &[0.1, 0.5, 1.0, 2.0] {
            for &kappa in &[0.0, 0.05, 0.3, 1.0, 2.0, 4.0] {
                let rep = jc::monotonicity_scan(&JcParams::with_detuning(omega, det, kappa), 200).unwrap();
                if rep.in_window {
                    points += 1;
                    window_ok &= rep.plus_increasing && rep.minus_increasing;
                }
            }
        }
    }
    let equal = jc::degeneracy_scan(&TwoModeParams::new(1.0, 1.0, 0.0).unwrap(), 30);
    let collision = equal.iter().any(|c| {
        let pair = [(c.first.0, c.first.1), (c.second.0, c.second.1)];
        pair.contains(&(0, 1)) && pair.contains(&(1, 0))
    });
    let none = jc::degeneracy_scan(&TwoModeParams::new(1.0, SQRT_2, 0.0).unwrap(), 30).is_empty();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let hyp_ok = (0..500).all(|_| hyp1f1(1.0, rng.random_range(1.0..30.0), rng.random_range(0.0..40.0)).unwrap() >= 1.0);

    let quad = QuadratureSpec::default();
    let p = TwoModeParams::new(1.2, 0.8, 0.0).unwrap();
    let printed = moment_residuals(&jc::radial_density_problem(RadialDensity::Printed, p.omega1, 8), &quad).unwrap();
    let corrected = moment_residuals(&jc::radial_density_problem(RadialDensity::Corrected, p.omega1, 8), &quad).unwrap();
    let inner = moment_residuals(&jc::inner_density_problem(&p, 8), &quad).unwrap();
    let densities_ok = !printed.pass && corrected.pass && inner.pass && corrected.max_residual < 1e-8;
    Outcome {
        pass: window_ok && collision && none && hyp_ok && densities_ok,
        summary: format!(
            "window {points} points ok={window_ok}, collision E(0,1)=E(1,0) found={collision}, none for sqrt 2={none}, \
             1F1>=1={hyp_ok}, stated density FAILS ({:.2e}), corrected {:.2e}, inner {:.2e}",
            printed.max_residual, corrected.max_residual, inner.max_residual
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    let (t, o) = timed(criterion_1);
    results.push(report(1, "hypercomplex identities", t, secs(1), o));
    let (t, o) = timed(criterion_2);
    results.push(report(2, "quaternion pair conditions", t, secs(60), o));
    let (t, o) = timed(criterion_3);
    results.push(report(3, "normalization closed forms", t, secs(5), o));
    let (t, o) = timed(criterion_4);
    results.push(report(4, "norm-sum unity", t, secs(60), o));
    let (t, o) = timed(criterion_5);
    results.push(report(5, "moment grids", t, secs(10), o));
    let (t, o) = timed(criterion_6);
    results.push(report(6, "dependent-sum identities", t, secs(60), o));
    let (o, slowest) = criterion_7();
    results.push(report(7, "identity assembly", slowest, secs(60), o));
    let (t, o) = timed(criterion_8);
    results.push(report(8, "oscillator algebra", t, secs(60), o));
    let (t, o) = timed(criterion_9);
    results.push(report(9, "JC physics", t, secs(60), o));
    let failed: Vec<_> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
