//! The invariant suite run by `homodyne check`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::analytic::{
    closed_form_ab, lo_phase_for_theta, nbc_variance_coherent, nbc_variance_fock, pair_series_ab,
    poisson_mixture_variance, DEFAULT_N_SIGMA,
};
use crate::block::{
    build_entangled_state, coherent_lo_state, default_lo_cutoff, nbc_eigenvalues, nbc_expectation,
    nbc_moments, sample_nbc, TwoModeState,
};
use crate::fock::{
    pair_amplitudes, quadrature_statistics, squeezed_vacuum_coefficients, truncation_for_tolerance,
    FockVector, SqueezeParams,
};
use crate::phase::{
    phase_distribution_closed, phase_distribution_general, restricted_window_stats,
    DEFAULT_GRID_POINTS,
};
use crate::Result;

use super::output::{Cell, Table};

pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured deviation (or other figure of merit).
    pub measured: f64,
    pub threshold: f64,
}

impl CheckOutcome {
    fn at_most(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name,
            passed: measured <= threshold,
            measured,
            threshold,
        }
    }
}

fn sv(r: f64, phi: f64) -> SqueezeParams {
    SqueezeParams::new(r, phi).expect("valid literal parameters")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `ln |C_m|` from log-factorials accumulated as sums of `ln j`.
fn direct_ln_pair_magnitude(r: f64, m_max: usize) -> Vec<f64> {
    let mut ln_fact = vec![0.0; 2 * m_max + 1];
    for j in 1..=2 * m_max {
        ln_fact[j] = ln_fact[j - 1] + (j as f64).ln();
    }
    (0..=m_max)
        .map(|m| {
            let ln_t = if r == 0.0 {
                f64::NEG_INFINITY
            } else {
                r.tanh().ln()
            };
            let tanh_term = if m == 0 { 0.0 } else { m as f64 * ln_t };
            0.5 * (1.0 / r.cosh()).ln() + 0.5 * ln_fact[2 * m] - m as f64 * 2f64.ln() - ln_fact[m]
                + tanh_term
        })
        .collect()
}

fn normalization() -> Result<CheckOutcome> {
    let tail = 1e-10;
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0, 3.0] {
        let m = truncation_for_tolerance(r, tail)?;
        let mass: f64 = pair_amplitudes(sv(r, 0.0), m)
            .iter()
            .map(|c| c.norm_sqr())
            .sum();
        let deficit = 1.0 - mass;
        // Outside [1 - tail, 1] counts as a violation measured against tail.
        let v = if deficit < -1e-15 {
            f64::INFINITY
        } else {
            deficit / tail
        };
        worst = worst.max(v);
    }
    Ok(CheckOutcome::at_most(
        "fock.normalization_within_tail",
        worst,
        1.0,
    ))
}

fn parity() -> Result<CheckOutcome> {
    let v = squeezed_vacuum_coefficients(sv(1.7, 0.4), 100);
    let odd = max_of(v.amplitudes().iter().skip(1).step_by(2).map(|c| c.norm()));
    Ok(CheckOutcome::at_most("fock.odd_amplitudes_zero", odd, 0.0))
}

fn recurrence_vs_direct() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for r in [0.1, 0.5, 1.0, 2.0, 3.0] {
        let rec = pair_amplitudes(sv(r, 0.0), 200);
        let direct = direct_ln_pair_magnitude(r, 200);
        for (c, ln_mag) in rec.iter().zip(direct) {
            worst = worst.max((c.norm() / ln_mag.exp() - 1.0).abs());
        }
    }
    Ok(CheckOutcome::at_most(
        "fock.recurrence_matches_direct",
        worst,
        1e-10,
    ))
}

fn quadrature_law() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, phi) in [(0.3, 0.0), (1.0, 0.0), (1.2, 1.1)] {
        let p = sv(r, phi);
        let state = squeezed_vacuum_coefficients(p, truncation_for_tolerance(r, 1e-14)?);
        for i in 0..12 {
            let theta = i as f64 * PI / 12.0;
            let q = quadrature_statistics(&state, theta)?;
            let want = nbc_variance_fock(1, p, theta).variance / 4.0;
            worst = worst.max((q.variance - want).abs());
        }
    }
    Ok(CheckOutcome::at_most(
        "fock.squeezed_quadrature_variance",
        worst,
        1e-10,
    ))
}

fn vacuum_quadrature() -> Result<CheckOutcome> {
    let v = FockVector::vacuum(6);
    let mut worst: f64 = 0.0;
    for i in 0..16 {
        let q = quadrature_statistics(&v, i as f64 * TAU / 16.0)?;
        worst = worst.max((q.variance - 0.25).abs());
    }
    Ok(CheckOutcome::at_most(
        "fock.vacuum_quadrature_quarter",
        worst,
        0.0,
    ))
}

fn series_closure() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for k in 0..=30 {
        let r = 0.1 * k as f64;
        let (a, b) = pair_series_ab(r, 200);
        let (ca, cb) = closed_form_ab(r);
        worst = worst.max((a - ca).abs()).max((b - cb).abs());
    }
    Ok(CheckOutcome::at_most(
        "analytic.series_matches_closed_form",
        worst,
        1e-9,
    ))
}

fn basis_equivalence() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for n in [0u64, 1, 7, 100, 1234] {
        for (r, phi, theta) in [(0.0, 0.0, 0.0), (0.7, 0.3, 1.0), (2.0, 5.0, -2.0)] {
            let p = sv(r, phi);
            let f = nbc_variance_fock(n, p, theta).variance;
            let c = nbc_variance_coherent((n as f64).sqrt(), p, theta)?.variance;
            if f != 0.0 {
                worst = worst.max(rel(c, f));
            }
        }
    }
    Ok(CheckOutcome::at_most(
        "analytic.basis_equivalence",
        worst,
        4.0 * f64::EPSILON,
    ))
}

fn extremes() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, phi) in [(0.5, 0.0), (1.0, 1.0), (2.0, 4.0)] {
        let p = sv(r, phi);
        let n = 100u64;
        let lo = nbc_variance_fock(n, p, p.phi() / 2.0).variance;
        let hi = nbc_variance_fock(n, p, p.phi() / 2.0 + FRAC_PI_2).variance;
        worst = worst
            .max(rel(lo, n as f64 * (-2.0 * r).exp()))
            .max(rel(hi, n as f64 * (2.0 * r).exp()))
            .max(rel(lo * hi, (n * n) as f64));
    }
    Ok(CheckOutcome::at_most(
        "analytic.extremes_and_product",
        worst,
        1e-12,
    ))
}

fn poisson() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, theta) in [(0.0, 0.0), (1.0, 0.0), (1.0, 0.8)] {
        let p = sv(r, 0.0);
        let mix = poisson_mixture_variance(10.0, p, theta, DEFAULT_N_SIGMA)?;
        worst = worst.max(rel(
            mix.report.variance,
            nbc_variance_fock(100, p, theta).variance,
        ));
    }
    Ok(CheckOutcome::at_most(
        "analytic.poisson_mixture_linearity",
        worst,
        1e-7,
    ))
}

fn block_conservation() -> Result<CheckOutcome> {
    let signal = squeezed_vacuum_coefficients(sv(0.6, 0.0), 10);
    let state = coherent_lo_state(2.0, 0.4, &signal, default_lo_cutoff(2.0))?;
    let applied = state.apply_nbc();
    let same = state.len() == applied.len()
        && state.blocks().zip(&applied).all(|(a, b)| {
            a.n_total() == b.n_total() && a.amplitudes().len() == b.amplitudes().len()
        });
    Ok(CheckOutcome::at_most(
        "block.generator_conserves_blocks",
        if same { 0.0 } else { 1.0 },
        0.0,
    ))
}

fn spectrum() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for n in 0..=400usize {
        for (j, v) in nbc_eigenvalues(n)?.iter().enumerate() {
            worst = worst.max((v - (2.0 * j as f64 - n as f64)).abs());
        }
    }
    Ok(CheckOutcome::at_most(
        "block.spectrum_lattice_n_le_400",
        worst,
        1e-8,
    ))
}

fn oracle_error(p: SqueezeParams, n: usize) -> Result<f64> {
    let theta = p.phi() / 2.0;
    let state = build_entangled_state(p, n, lo_phase_for_theta(theta), n / 2)?.normalized()?;
    let exact = nbc_moments(&state.into())?.variance;
    Ok(rel(exact, nbc_variance_fock(n as u64, p, theta).variance))
}

fn oracle_convergence() -> Result<CheckOutcome> {
    // Worst ratio err(2N) / err(N); must stay below one.
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 1.5] {
        let p = sv(r, 0.0);
        let errs: Vec<f64> = [100, 200, 400]
            .into_iter()
            .map(|n| oracle_error(p, n))
            .collect::<Result<_>>()?;
        worst = worst.max(errs[1] / errs[0]).max(errs[2] / errs[1]);
    }
    Ok(CheckOutcome {
        name: "block.oracle_converges_with_n",
        passed: worst < 1.0,
        measured: worst,
        threshold: 1.0,
    })
}

fn hermiticity() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, phi, varphi) in [(0.5, 1.0, 0.3), (1.1, 4.0, 2.2)] {
        let signal = squeezed_vacuum_coefficients(sv(r, phi), truncation_for_tolerance(r, 1e-13)?);
        let s = coherent_lo_state(2.5, varphi, &signal, default_lo_cutoff(2.5))?;
        worst = worst.max(nbc_expectation(&s)?.im.abs());
        let b = build_entangled_state(sv(r, phi), 120, varphi, 60)?;
        worst = worst.max(nbc_expectation(&b.into())?.im.abs());
    }
    Ok(CheckOutcome::at_most(
        "block.moments_are_real",
        worst,
        1e-10,
    ))
}

fn varphi_covariance() -> Result<CheckOutcome> {
    // varphi -> varphi + delta multiplies C_m by e^{-2 i m delta} (up to a
    // global phase), i.e. phi -> phi - 2 delta; the closed form depends only
    // on 2 theta - phi, so it predicts the same as theta -> theta + delta.
    let (r, phi, n) = (0.8, 0.5, 200);
    let mut worst: f64 = 0.0;
    for i in 1..8 {
        let delta = i as f64 * PI / 8.0;
        let shifted = build_entangled_state(sv(r, phi), n, 0.3 + delta, n / 2)?;
        let rephased = build_entangled_state(sv(r, phi - 2.0 * delta), n, 0.3, n / 2)?;
        let a = nbc_moments(&shifted.into())?.variance;
        let b = nbc_moments(&rephased.into())?.variance;
        worst = worst.max(rel(a, b));
    }
    Ok(CheckOutcome::at_most(
        "block.varphi_equivariance",
        worst,
        1e-9,
    ))
}

fn monte_carlo() -> Result<CheckOutcome> {
    let p = sv(1.0, 0.0);
    let state: TwoModeState = build_entangled_state(p, 200, lo_phase_for_theta(0.0), 100)?.into();
    let exact = nbc_moments(&state)?;
    // Deviation in units of the estimated standard error of the variance.
    let mut worst: f64 = 0.0;
    for (n, seed) in [(10_000usize, 11u64), (100_000, 12)] {
        let samples = sample_nbc(&state, n, seed)?;
        let m = crate::block::sample_moments(&samples);
        let mu4 = samples
            .iter()
            .map(|&s| (s as f64 - m.mean).powi(4))
            .sum::<f64>()
            / n as f64;
        let se_var = ((mu4 - m.variance * m.variance) / n as f64).sqrt();
        let se_mean = (m.variance / n as f64).sqrt();
        worst = worst
            .max((m.variance - exact.variance).abs() / se_var)
            .max((m.mean - exact.mean).abs() / se_mean);
    }
    Ok(CheckOutcome::at_most(
        "block.monte_carlo_statistical_rate",
        worst,
        5.0,
    ))
}

fn phase_normalization() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, m) in [(0.5, 50), (1.0, 25), (2.0, 200)] {
        let p = sv(r, 0.0);
        let mass: f64 = pair_amplitudes(p, m).iter().map(|c| c.norm_sqr()).sum();
        let closed = phase_distribution_closed(p, 0.2, m, DEFAULT_GRID_POINTS)?;
        worst = worst.max((closed.integral() - mass).abs());
        let state = build_entangled_state(p, 4 * m, 0.2, m)?;
        let general = phase_distribution_general(&state.into(), DEFAULT_GRID_POINTS)?;
        worst = worst.max((general.integral() - mass).abs());
    }
    Ok(CheckOutcome::at_most(
        "phase.normalization_equals_mass",
        worst,
        1e-10,
    ))
}

fn route_equivalence() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (r, phi, varphi) in [(1.0, 0.0, 0.0), (0.7, 2.0, 1.3)] {
        let p = sv(r, phi);
        let closed = phase_distribution_closed(p, varphi, 50, DEFAULT_GRID_POINTS)?;
        let state = build_entangled_state(p, 200, varphi, 50)?;
        let general = phase_distribution_general(&state.into(), DEFAULT_GRID_POINTS)?;
        worst = worst.max(max_of(
            closed
                .density()
                .iter()
                .zip(general.density())
                .map(|(a, b)| (a - b).abs()),
        ));
    }
    Ok(CheckOutcome::at_most(
        "phase.closed_matches_general",
        worst,
        1e-10,
    ))
}

fn translation() -> Result<CheckOutcome> {
    let p = sv(1.2, 0.3);
    let g = DEFAULT_GRID_POINTS;
    let base = phase_distribution_closed(p, 0.0, 100, g)?;
    let mut worst: f64 = 0.0;
    for shift in [1usize, 77, 1000] {
        let delta = TAU * shift as f64 / g as f64;
        let moved = phase_distribution_closed(p, delta, 100, g)?;
        for j in 0..g {
            worst = worst.max((moved.density()[j] - base.density()[(j + shift) % g]).abs());
        }
    }
    Ok(CheckOutcome::at_most(
        "phase.translation_covariance",
        worst,
        1e-10,
    ))
}

fn pi_periodicity() -> Result<CheckOutcome> {
    let d = phase_distribution_closed(sv(1.5, 0.9), 0.4, 200, DEFAULT_GRID_POINTS)?;
    let half = d.grid_points() / 2;
    let worst = max_of((0..half).map(|j| (d.density()[j] - d.density()[j + half]).abs()));
    Ok(CheckOutcome::at_most("phase.pi_periodic", worst, 1e-12))
}

fn n_independence() -> Result<CheckOutcome> {
    let p = sv(1.0, 0.0);
    let dist = |n: usize| -> Result<Vec<f64>> {
        let s = build_entangled_state(p, n, 0.3, 25)?;
        Ok(phase_distribution_general(&s.into(), DEFAULT_GRID_POINTS)?
            .density()
            .to_vec())
    };
    let base = dist(100)?;
    let mut worst: f64 = 0.0;
    for n in [200, 400] {
        let other = dist(n)?;
        worst = worst.max(max_of(base.iter().zip(&other).map(|(a, b)| (a - b).abs())));
    }
    Ok(CheckOutcome::at_most(
        "phase.independent_of_total_n",
        worst,
        1e-10,
    ))
}

fn window_monotonic() -> Result<CheckOutcome> {
    let mut prev = f64::INFINITY;
    let mut violations = 0.0;
    for k in 1..=12 {
        let r = 0.25 * k as f64;
        let d = phase_distribution_closed(sv(r, 0.0), 0.0, 200, DEFAULT_GRID_POINTS)?;
        let v = restricted_window_stats(&d, 0.0, PI)?.variance;
        if v >= prev {
            violations += 1.0;
        }
        prev = v;
    }
    Ok(CheckOutcome::at_most(
        "phase.window_variance_decreasing",
        violations,
        0.0,
    ))
}

/// Every property, in a fixed order.
pub fn run_all() -> Result<Vec<CheckOutcome>> {
    let checks: [fn() -> Result<CheckOutcome>; 21] = [
        normalization,
        parity,
        recurrence_vs_direct,
        quadrature_law,
        vacuum_quadrature,
        series_closure,
        basis_equivalence,
        extremes,
        poisson,
        block_conservation,
        spectrum,
        oracle_convergence,
        hermiticity,
        varphi_covariance,
        monte_carlo,
        phase_normalization,
        route_equivalence,
        translation,
        pi_periodicity,
        n_independence,
        window_monotonic,
    ];
    checks.iter().map(|c| c()).collect()
}

pub fn table(outcomes: &[CheckOutcome]) -> Table {
    let mut t = Table::new("check", &["property", "status", "measured", "threshold"]);
    for o in outcomes {
        t.row(vec![
            Cell::from(o.name),
            Cell::from(if o.passed { "PASS" } else { "FAIL" }),
            Cell::from(o.measured),
            Cell::from(o.threshold),
        ]);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    t.summarize("passed", outcomes.len() - failed);
    t.summarize("failed", failed);
    t
}
