//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line and then
//! asserts that the criterion holds.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::Command;

use homodyne::analytic::{
    lo_phase_for_theta, nbc_variance_coherent, nbc_variance_fock, pair_series_ab,
    poisson_mixture_variance, DEFAULT_N_SIGMA,
};
use homodyne::block::{
    build_entangled_state, coherent_lo_state, default_lo_cutoff, nbc_eigenvalues, nbc_moments,
    sample_moments, sample_nbc,
};
use homodyne::fock::{squeezed_vacuum_coefficients, truncation_for_tolerance};
use homodyne::phase::{
    least_squares_line, log_variance_ratio_curve, phase_distribution_closed,
    phase_distribution_general, restricted_window_stats,
};
use homodyne::{SqueezeParams, TwoModeBlock, TwoModeState};

fn report(id: u32, passed: bool, detail: String) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id}: {detail}");
}

fn sv(r: f64, phi: f64) -> SqueezeParams {
    SqueezeParams::new(r, phi).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sweep(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| TAU * i as f64 / points as f64)
        .collect()
}

/// Relative comparison where the prediction is large enough, absolute
/// comparison against `abs_tol * intensity` near the squeezing minimum.
fn guarded_ok(exact: f64, pred: f64, intensity: f64, rel_tol: f64, abs_tol: f64) -> bool {
    if pred > 0.05 * intensity {
        rel(exact, pred) <= rel_tol
    } else {
        (exact - pred).abs() < abs_tol * intensity
    }
}

#[test]
fn criterion_01_squeezing_law() {
    let n = 100u64;
    let beta = 10.0;
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        for phi in [0.0, 0.9, 4.0] {
            let p = sv(r, phi);
            let min_theta = phi / 2.0;
            let max_theta = (phi + PI) / 2.0;
            let lo = n as f64 * (-2.0 * r).exp();
            let hi = n as f64 * (2.0 * r).exp();
            for (theta, want) in [(min_theta, lo), (max_theta, hi)] {
                let c = nbc_variance_coherent(beta, p, theta).unwrap().variance;
                let f = nbc_variance_fock(n, p, theta).variance;
                worst = worst.max(rel(c, want)).max(rel(f, want));
            }
        }
    }
    let ok = worst <= 1e-12;
    report(
        1,
        ok,
        format!("worst relative error {worst:.3e} (tolerance 1e-12)"),
    );
    assert!(ok);
}

#[test]
fn criterion_02_series_closure() {
    let mut worst: f64 = 0.0;
    let mut worst_r = 0.0;
    for k in 0..=30 {
        let r = 0.1 * k as f64;
        let (a, b) = pair_series_ab(r, 200);
        let want_a = r.cosh().powi(2) + r.sinh().powi(2);
        let want_b = 2.0 * r.sinh() * r.cosh();
        let err = (a - want_a).abs().max((b - want_b).abs());
        if err > worst {
            worst = err;
            worst_r = r;
        }
    }
    let ok = worst < 1e-9;
    report(
        2,
        ok,
        format!(
            "worst absolute error {worst:.3e} at r = {worst_r:.1} (tolerance 1e-9, m_max = 200)"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_oracle_formula_equivalence() {
    let (n, p) = (200usize, sv(1.0, 0.0));
    let mut all = true;
    let mut worst_rel: f64 = 0.0;
    for theta in sweep(16) {
        let state = build_entangled_state(p, n, lo_phase_for_theta(theta), n / 2).unwrap();
        let exact = nbc_moments(&state.into()).unwrap().variance;
        let pred = nbc_variance_fock(n as u64, p, theta).variance;
        all &= guarded_ok(exact, pred, n as f64, 0.03, 0.03);
        if pred > 0.05 * n as f64 {
            worst_rel = worst_rel.max(rel(exact, pred));
        }
    }
    let err_at = |n: usize| {
        let theta = p.phi() / 2.0;
        let state = build_entangled_state(p, n, lo_phase_for_theta(theta), n / 2).unwrap();
        let exact = nbc_moments(&state.into()).unwrap().variance;
        rel(exact, nbc_variance_fock(n as u64, p, theta).variance)
    };
    let (e200, e400) = (err_at(200), err_at(400));
    let ok = all && e400 < e200;
    report(
        3,
        ok,
        format!(
            "sweep within guard: {all}, worst guarded relative {worst_rel:.3e}; \
             minimum error N=200 {e200:.3e} -> N=400 {e400:.3e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_coherent_lo_oracle() {
    let (beta, p) = (4.0, sv(0.8, 0.0));
    let signal = squeezed_vacuum_coefficients(p, truncation_for_tolerance(0.8, 1e-13).unwrap());
    let intensity = beta * beta;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for theta in sweep(8) {
        let state = coherent_lo_state(
            beta,
            lo_phase_for_theta(theta),
            &signal,
            default_lo_cutoff(beta),
        )
        .unwrap();
        let exact = nbc_moments(&state).unwrap().variance;
        let pred = nbc_variance_coherent(beta, p, theta).unwrap().variance;
        if !guarded_ok(exact, pred, intensity, 0.05, 0.05) {
            failures.push(format!(
                "theta={theta:.4} exact={exact:.4} predicted={pred:.4}"
            ));
        }
        if pred > 0.05 * intensity {
            worst = worst.max(rel(exact, pred));
        }
    }
    let ok = failures.is_empty();
    report(
        4,
        ok,
        format!(
            "worst guarded relative {worst:.3e} (tolerance 5e-2); {} of 8 points outside: [{}]",
            failures.len(),
            failures.join("; ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_shot_noise() {
    let n = 200usize;
    let state: TwoModeState = TwoModeBlock::product(n, 0).unwrap().into();
    let exact = nbc_moments(&state).unwrap();
    let exact_rel = rel(exact.variance, n as f64);
    let seed = 2024;
    let a = sample_nbc(&state, 100_000, seed).unwrap();
    let b = sample_nbc(&state, 100_000, seed).unwrap();
    let mc = sample_moments(&a).variance;
    let mc_rel = rel(mc, n as f64);
    let ok = exact_rel <= 1e-9 && mc_rel <= 0.05 && a == b;
    report(
        5,
        ok,
        format!(
            "oracle relative {exact_rel:.3e} (1e-9); Monte Carlo variance {mc:.3} relative {mc_rel:.3e} (5e-2); \
             reproducible {}",
            a == b
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_spectrum() {
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 50, 200] {
        let vals = nbc_eigenvalues(n).unwrap();
        assert_eq!(vals.len(), n + 1);
        for (j, v) in vals.iter().enumerate() {
            worst = worst.max((v - (2.0 * j as f64 - n as f64)).abs());
        }
    }
    let ok = worst <= 1e-8;
    report(
        6,
        ok,
        format!("worst eigenvalue deviation {worst:.3e} (tolerance 1e-8)"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_phase_peaks() {
    let g = 4096;
    let step = TAU / g as f64;
    let mut peaks_ok = true;
    let mut detail = String::new();
    let mut variances = Vec::new();
    for r in [1.0, 2.0] {
        let d = phase_distribution_closed(sv(r, 0.0), 0.0, 200, g).unwrap();
        // Global grid maxima in each half of the circle.
        let half = g / 2;
        let argmax = |range: std::ops::Range<usize>| {
            range
                .max_by(|&i, &j| d.density()[i].total_cmp(&d.density()[j]))
                .unwrap() as f64
                * step
        };
        let (p1, p2) = (argmax(0..half), argmax(half..g));
        peaks_ok &= (p1 - FRAC_PI_2).abs() <= step && (p2 - 3.0 * FRAC_PI_2).abs() <= step;
        let w = restricted_window_stats(&d, 0.0, PI).unwrap();
        variances.push(w.variance);
        detail.push_str(&format!(
            "r={r}: peaks {p1:.6}, {p2:.6}, window variance {:.6e}; ",
            w.variance
        ));
    }
    let ok = peaks_ok && variances[1] < variances[0];
    report(7, ok, detail.trim_end_matches("; ").to_string());
    assert!(ok);
}

#[test]
fn criterion_08_variance_slope() {
    let rs: Vec<f64> = (0..21).map(|i| 0.5 + 0.1 * i as f64).collect();
    let curve = log_variance_ratio_curve(&rs, 0.0, 0.0, 200, 4096).unwrap();
    let (slope, _) = least_squares_line(&curve).unwrap();
    let uniform = phase_distribution_closed(sv(0.0, 0.0), 0.0, 200, 4096).unwrap();
    let sigma0 = restricted_window_stats(&uniform, 0.0, PI).unwrap().variance;
    let reference = PI * PI / 12.0;
    let sigma_err = (sigma0 - reference).abs();
    let ok = (slope + 1.0).abs() <= 0.15 && sigma_err <= 1e-9;
    report(
        8,
        ok,
        format!("slope {slope:.6} (target -1 +/- 0.15); uniform window variance error {sigma_err:.3e} (1e-9)"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_route_equivalence() {
    let (p, varphi, m_max, g) = (sv(1.0, 0.0), 0.35, 50usize, 1024);
    let closed = phase_distribution_closed(p, varphi, m_max, g).unwrap();
    let mut eq_worst: f64 = 0.0;
    let mut inv_worst: f64 = 0.0;
    let at = |n: usize| {
        let state: TwoModeState = build_entangled_state(p, n, varphi, m_max).unwrap().into();
        phase_distribution_general(&state, g).unwrap()
    };
    let reference = at(200);
    for (a, b) in reference.density().iter().zip(closed.density()) {
        eq_worst = eq_worst.max((a - b).abs());
    }
    for n in [100, 400] {
        for (a, b) in at(n).density().iter().zip(reference.density()) {
            inv_worst = inv_worst.max((a - b).abs());
        }
    }
    let ok = eq_worst <= 1e-10 && inv_worst <= 1e-10;
    report(
        9,
        ok,
        format!(
            "general vs closed {eq_worst:.3e}; N in {{100,200,400}} spread {inv_worst:.3e} (1e-10)"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_10_poisson_mixture() {
    let mut worst: f64 = 0.0;
    for r in [0.0, 1.0] {
        for theta in sweep(12) {
            let p = sv(r, 0.0);
            let mix = poisson_mixture_variance(10.0, p, theta, DEFAULT_N_SIGMA).unwrap();
            worst = worst.max(rel(
                mix.report.variance,
                nbc_variance_fock(100, p, theta).variance,
            ));
        }
    }
    let ok = worst <= 1e-7;
    report(
        10,
        ok,
        format!("worst relative difference {worst:.3e} (tolerance 1e-7)"),
    );
    assert!(ok);
}

fn run_cli(args: &[&str]) -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_homodyne"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

#[test]
fn criterion_11_determinism() {
    let dir = std::env::temp_dir().join(format!("homodyne-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut identical = true;
    for (name, args) in [
        ("check", vec!["check"]),
        ("sample", vec!["sample", "--seed", "42"]),
    ] {
        let (s1, c1) = run_cli(&args);
        let (s2, c2) = run_cli(&args);
        identical &= !s1.is_empty() && s1 == s2 && c1 == c2;
        let files: Vec<_> = (0..2)
            .map(|i| {
                let path = dir.join(format!("{name}-{i}.csv"));
                let mut a = args.clone();
                let p = path.to_str().unwrap().to_string();
                a.extend(["--out", p.as_str()]);
                run_cli(&a);
                std::fs::read(&path).unwrap()
            })
            .collect();
        identical &= files[0] == files[1] && files[0] == s1;
    }
    std::fs::remove_dir_all(&dir).ok();
    report(
        11,
        identical,
        format!("check and sample --seed 42 byte-identical across runs: {identical}"),
    );
    assert!(identical);
}
