//! Closed-form photocount-difference variances.
//!
//! With a coherent local oscillator `|beta e^{i varphi}>` the variance of
//! `n_b - n_c` is `beta^2 [cosh^2 r + sinh^2 r - 2 sinh r cosh r cos(2 theta - phi)]`;
//! with the laser treated as a Fock state the same law holds with `beta^2`
//! replaced by the total photon number `N`. Both are evaluated verbatim,
//! with no check that the signal is weak compared to the reference.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fock::SqueezeParams;
use crate::{Error, Result};

/// Default half-width of the Poisson window, in standard deviations.
pub const DEFAULT_N_SIGMA: f64 = 8.0;

/// Minimum Poisson mass the window must hold.
const POISSON_WINDOW_MASS: f64 = 1.0 - 1e-9;

/// Which computation produced a [`VarianceReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    CoherentAnalytic,
    FockAnalytic,
    Oracle,
    MonteCarlo,
    PoissonMixture,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::CoherentAnalytic => "coherent-analytic",
            Route::FockAnalytic => "fock-analytic",
            Route::Oracle => "oracle",
            Route::MonteCarlo => "monte-carlo",
            Route::PoissonMixture => "poisson-mixture",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean and variance of `n_b - n_c`, tagged by route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub mean: f64,
    pub variance: f64,
    pub route: Route,
}

/// Strength of the local oscillator: a coherent amplitude or a total photon
/// number shared by the signal and reference modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LocalOscillator {
    Coherent { beta: f64 },
    Fock { n_total: u64 },
}

/// Local-oscillator phase and strength. The measured quadrature angle is
/// always `lo_phase + pi/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSettings {
    lo_phase: f64,
    amplitude: LocalOscillator,
}

impl HomodyneSettings {
    pub fn new(lo_phase: f64, amplitude: LocalOscillator) -> Result<Self> {
        if !lo_phase.is_finite() {
            return Err(Error::param("lo_phase", "must be finite"));
        }
        if let LocalOscillator::Coherent { beta } = amplitude {
            if !beta.is_finite() || beta < 0.0 {
                return Err(Error::param(
                    "beta",
                    format!("must be finite and >= 0, got {beta}"),
                ));
            }
        }
        Ok(Self {
            lo_phase,
            amplitude,
        })
    }

    /// Settings that measure the quadrature at `theta`.
    pub fn for_theta(theta: f64, amplitude: LocalOscillator) -> Result<Self> {
        Self::new(lo_phase_for_theta(theta), amplitude)
    }

    pub fn lo_phase(&self) -> f64 {
        self.lo_phase
    }

    pub fn theta(&self) -> f64 {
        self.lo_phase + FRAC_PI_2
    }

    pub fn amplitude(&self) -> LocalOscillator {
        self.amplitude
    }

    /// Analytic prediction for these settings in the matching basis.
    pub fn predict(&self, params: SqueezeParams) -> VarianceReport {
        match self.amplitude {
            LocalOscillator::Coherent { beta } => coherent_unchecked(beta, params, self.theta()),
            LocalOscillator::Fock { n_total } => nbc_variance_fock(n_total, params, self.theta()),
        }
    }
}

/// Local-oscillator phase that selects quadrature angle `theta`.
pub fn lo_phase_for_theta(theta: f64) -> f64 {
    theta - FRAC_PI_2
}

/// `cosh^2 r + sinh^2 r - 2 sinh r cosh r cos d`, written as
/// `e^{-2r} cos^2(d/2) + e^{2r} sin^2(d/2)` so the squeezed minimum does not
/// cancel.
fn squeeze_factor(params: SqueezeParams, theta: f64) -> f64 {
    let half = theta - 0.5 * params.phi();
    let (s, c) = half.sin_cos();
    let two_r = 2.0 * params.r();
    (-two_r).exp() * c * c + two_r.exp() * s * s
}

fn coherent_unchecked(beta: f64, params: SqueezeParams, theta: f64) -> VarianceReport {
    VarianceReport {
        mean: 0.0,
        variance: beta * beta * squeeze_factor(params, theta),
        route: Route::CoherentAnalytic,
    }
}

/// Variance with a coherent local oscillator of real amplitude `beta`.
pub fn nbc_variance_coherent(
    beta: f64,
    params: SqueezeParams,
    theta: f64,
) -> Result<VarianceReport> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::param(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    Ok(coherent_unchecked(beta, params, theta))
}

/// Variance with `n_total` photons shared between signal and reference.
pub fn nbc_variance_fock(n_total: u64, params: SqueezeParams, theta: f64) -> VarianceReport {
    VarianceReport {
        mean: 0.0,
        variance: n_total as f64 * squeeze_factor(params, theta),
        route: Route::FockAnalytic,
    }
}

/// Partial sums over `m = 0..=m_max` of
///
/// `A = sech r  sum_m w_m (1 + 4m)` and
/// `B = sinh r / cosh^2 r  sum_m w_m (2 + 4m)`,
///
/// with `w_m = (2m)! / (2^{2m} (m!)^2)  tanh^{2m} r`, generated by the term
/// ratio `w_{m+1} / w_m = tanh^2 r (2m+1) / (2m+2)`.
pub fn pair_series_ab(r: f64, m_max: usize) -> (f64, f64) {
    let x = r.tanh().powi(2);
    let mut w = 1.0;
    let (mut sa, mut sb) = (0.0, 0.0);
    for m in 0..=m_max {
        let k = m as f64;
        sa += w * (1.0 + 4.0 * k);
        sb += w * (2.0 + 4.0 * k);
        w *= x * (2.0 * k + 1.0) / (2.0 * k + 2.0);
        if w == 0.0 {
            break;
        }
    }
    let c = r.cosh();
    (sa / c, sb * r.sinh() / (c * c))
}

/// `A = cosh^2 r + sinh^2 r`, `B = 2 sinh r cosh r`.
pub fn closed_form_ab(r: f64) -> (f64, f64) {
    let (s, c) = (r.sinh(), r.cosh());
    (c * c + s * s, 2.0 * s * c)
}

/// Variance averaged over a Poisson distribution of total photon number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonMixture {
    pub report: VarianceReport,
    /// Mean photon number `alpha^2`.
    pub mean_photons: f64,
    /// `Delta N / N = 1 / alpha`.
    pub relative_spread: f64,
    /// Inclusive photon-number window that was summed.
    pub window: (u64, u64),
    /// Poisson mass inside the window before renormalization.
    pub window_mass: f64,
}

/// `sum_N P_N Var(N)` with `P_N = alpha^{2N} e^{-alpha^2} / N!`, summed over
/// `alpha^2 +- n_sigma alpha` and renormalized to the window mass. The
/// law-of-total-variance cross term uses the conditional means, which vanish
/// for squeezed vacuum.
pub fn poisson_mixture_variance(
    alpha: f64,
    params: SqueezeParams,
    theta: f64,
    n_sigma: f64,
) -> Result<PoissonMixture> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::param(
            "alpha",
            format!("must be finite and > 0, got {alpha}"),
        ));
    }
    if !n_sigma.is_finite() || n_sigma <= 0.0 {
        return Err(Error::param(
            "n_sigma",
            format!("must be finite and > 0, got {n_sigma}"),
        ));
    }
    let mean = alpha * alpha;
    let lo = (mean - n_sigma * alpha).ceil().max(0.0) as u64;
    let hi = (mean + n_sigma * alpha).floor() as u64;
    let ln_mean = mean.ln();

    let mut ln_fact = 0.0;
    for j in 2..=lo {
        ln_fact += (j as f64).ln();
    }
    let (mut mass, mut acc, mut mean_acc, mut mean_sq_acc) = (0.0, 0.0, 0.0, 0.0);
    for n in lo..=hi {
        if n > lo && n >= 2 {
            ln_fact += (n as f64).ln();
        }
        let p = (n as f64 * ln_mean - mean - ln_fact).exp();
        let cond = nbc_variance_fock(n, params, theta);
        mass += p;
        acc += p * cond.variance;
        mean_acc += p * cond.mean;
        mean_sq_acc += p * cond.mean * cond.mean;
    }
    if mass < POISSON_WINDOW_MASS {
        return Err(Error::param(
            "n_sigma",
            format!("window [{lo}, {hi}] holds only {mass} of the Poisson mass"),
        ));
    }
    let cond_mean = mean_acc / mass;
    let cross = mean_sq_acc / mass - cond_mean * cond_mean;
    Ok(PoissonMixture {
        report: VarianceReport {
            mean: cond_mean,
            variance: acc / mass + cross,
            route: Route::PoissonMixture,
        },
        mean_photons: mean,
        relative_spread: 1.0 / alpha,
        window: (lo, hi),
        window_mass: mass,
    })
}
