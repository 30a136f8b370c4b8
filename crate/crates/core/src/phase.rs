//! Relative-phase distribution between the signal mode and the local
//! oscillator.
//!
//! For a two-mode state the distribution is the sum over total photon number
//! `N` of `|<Phi^(N)|psi_N>|^2` with
//! `|Phi^(N)> = (2 pi)^{-1/2} sum_k e^{i k Phi} |k>_a |N-k>_a0`. On the
//! entangled squeezed state it reduces to the closed form
//! `(2 pi)^{-1} |sum_m C_m e^{-2 i m (Phi + varphi)}|^2`, which does not
//! depend on `N` once `2 m_max <= N`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::TwoModeState;
use crate::fock::{pair_amplitudes, SqueezeParams};
use crate::{Error, Result, EPS_NORM};

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Pair truncation used for the published figures.
pub const FIGURE_M_MAX: usize = 200;

/// Linear variance of the uniform density on `[0, pi]`.
pub const VACUUM_WINDOW_VARIANCE: f64 = PI * PI / 12.0;

/// Smallest window mass accepted by [`restricted_window_stats`].
const MIN_WINDOW_MASS: f64 = 1e-12;

/// Density sampled at `Phi_j = 2 pi j / G`, `j = 0..G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    density: Vec<f64>,
}

impl PhaseDistribution {
    pub fn from_density(density: Vec<f64>) -> Result<Self> {
        if density.is_empty() {
            return Err(Error::param("density", "need at least one grid point"));
        }
        if density
            .iter()
            .any(|&p| p.is_nan() || p < 0.0 || p.is_infinite())
        {
            return Err(Error::param("density", "must be finite and non-negative"));
        }
        Ok(Self { density })
    }

    pub fn grid_points(&self) -> usize {
        self.density.len()
    }

    pub fn step(&self) -> f64 {
        TAU / self.density.len() as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.density.len() as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|j| self.angle(j))
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Periodic trapezoid rule over `[0, 2 pi)`.
    pub fn integral(&self) -> f64 {
        self.step() * self.density.iter().sum::<f64>()
    }

    /// Grid angle of the largest density in `[lo, hi)`.
    pub fn argmax_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &p) in self.density.iter().enumerate() {
            let x = self.angle(j);
            if x >= lo && x < hi && best.is_none_or(|(_, b)| p > b) {
                best = Some((j, p));
            }
        }
        best.map(|(j, _)| self.angle(j))
    }

    /// Density at an arbitrary angle by periodic linear interpolation.
    fn interpolate(&self, x: f64) -> f64 {
        let g = self.density.len();
        let pos = x.rem_euclid(TAU) / self.step();
        let j = (pos.floor() as usize).min(g - 1);
        let frac = pos - j as f64;
        let a = self.density[j];
        let b = self.density[(j + 1) % g];
        a + (b - a) * frac
    }
}

fn check_grid(grid_points: usize, harmonic: usize) -> Result<()> {
    let required = (2 * harmonic).max(1);
    if grid_points < required {
        return Err(Error::GridTooCoarse {
            grid_points,
            harmonic,
            required,
        });
    }
    Ok(())
}

/// Closed form on the entangled squeezed state, evaluated by direct
/// summation (Horner in `e^{-2 i (Phi + varphi)}`) at each grid point.
pub fn phase_distribution_closed(
    params: SqueezeParams,
    varphi: f64,
    m_max: usize,
    grid_points: usize,
) -> Result<PhaseDistribution> {
    check_grid(grid_points, 2 * m_max)?;
    if !varphi.is_finite() {
        return Err(Error::param("varphi", "must be finite"));
    }
    let coeffs = pair_amplitudes(params, m_max);
    let density = (0..grid_points)
        .map(|j| {
            let phi = TAU * j as f64 / grid_points as f64;
            let z = Complex64::from_polar(1.0, -2.0 * (phi + varphi));
            let sum = coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
            sum.norm_sqr() / TAU
        })
        .collect();
    Ok(PhaseDistribution { density })
}

/// Projector form on an arbitrary two-mode state: per block, the squared
/// discrete Fourier sum `sum_k psi_k e^{-i k Phi}`, summed over blocks.
///
/// The state may be truncated (squared norm below one) but not exceed
/// unity beyond `EPS_NORM`.
pub fn phase_distribution_general(
    state: &TwoModeState,
    grid_points: usize,
) -> Result<PhaseDistribution> {
    let norm = state.norm_sqr();
    if norm.is_nan() || norm <= 0.0 || norm > 1.0 + EPS_NORM {
        return Err(Error::Unnormalized {
            norm_sqr: norm,
            tolerance: EPS_NORM,
        });
    }
    let blocks: Vec<&[Complex64]> = state
        .blocks()
        .filter_map(|b| b.highest_occupied().map(|top| &b.amplitudes()[..=top]))
        .collect();
    let harmonic = blocks.iter().map(|a| a.len() - 1).max().unwrap_or(0);
    check_grid(grid_points, harmonic)?;

    let density = (0..grid_points)
        .map(|j| {
            let phi = TAU * j as f64 / grid_points as f64;
            let w = Complex64::from_polar(1.0, -phi);
            blocks
                .iter()
                .map(|amps| {
                    amps.iter()
                        .rev()
                        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
                        .norm_sqr()
                })
                .sum::<f64>()
                / TAU
        })
        .collect();
    Ok(PhaseDistribution { density })
}

/// Moments of the density renormalized to a sub-interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: (f64, f64),
    pub mean: f64,
    pub variance: f64,
    /// Probability inside the window before renormalization.
    pub window_mass: f64,
}

/// Composite Simpson weights (3/8 rule on the last three intervals when
/// the count is odd) for `nodes` equally spaced points of spacing `h`.
fn simpson_weights(nodes: usize, h: f64) -> Vec<f64> {
    let intervals = nodes - 1;
    let mut w = vec![0.0; nodes];
    match intervals {
        0 => {}
        1 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
        }
        _ => {
            let simpson_end = if intervals.is_multiple_of(2) {
                intervals
            } else {
                intervals - 3
            };
            let mut i = 0;
            while i < simpson_end {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
                i += 2;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

/// Linear (non-circular) mean and variance of the density restricted to
/// `[lo, hi]`, about the restricted mean.
///
/// Grid nodes inside the window are integrated with composite Simpson;
/// window edges that fall between nodes add a trapezoid piece using the
/// interpolated density.
pub fn restricted_window_stats(dist: &PhaseDistribution, lo: f64, hi: f64) -> Result<WindowStats> {
    let bad = |reason: &str| Error::InvalidWindow {
        lo,
        hi,
        reason: reason.to_string(),
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(bad("bounds must be finite"));
    }
    if lo >= hi {
        return Err(bad("empty or reversed"));
    }
    let h = dist.step();
    let snap = 1e-9 * h;
    if lo < -snap || hi > TAU + snap {
        return Err(bad("must lie within [0, 2 pi]"));
    }
    let g = dist.grid_points();
    let first = ((lo - snap) / h).ceil().max(0.0) as usize;
    let last = (((hi + snap) / h).floor() as usize).min(g);

    // (angle, weight, density) quadrature points.
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    if first <= last {
        let nodes = last - first + 1;
        let weights = simpson_weights(nodes, h);
        for (i, w) in weights.into_iter().enumerate() {
            let j = first + i;
            points.push((j as f64 * h, w, dist.density[j % g]));
        }
        let x_first = first as f64 * h;
        let x_last = last as f64 * h;
        if x_first - lo > snap {
            let (p_lo, p_first) = (dist.interpolate(lo), dist.density[first % g]);
            let half = (x_first - lo) / 2.0;
            points.push((lo, half, p_lo));
            points.push((x_first, half, p_first));
        }
        if hi - x_last > snap {
            let (p_last, p_hi) = (dist.density[last % g], dist.interpolate(hi));
            let half = (hi - x_last) / 2.0;
            points.push((x_last, half, p_last));
            points.push((hi, half, p_hi));
        }
    } else {
        let half = (hi - lo) / 2.0;
        points.push((lo, half, dist.interpolate(lo)));
        points.push((hi, half, dist.interpolate(hi)));
    }

    let mass: f64 = points.iter().map(|&(_, w, p)| w * p).sum();
    if mass.is_nan() || mass < MIN_WINDOW_MASS {
        return Err(bad("window holds negligible probability"));
    }
    let mean = points.iter().map(|&(x, w, p)| w * p * x).sum::<f64>() / mass;
    let variance = points
        .iter()
        .map(|&(x, w, p)| w * p * (x - mean).powi(2))
        .sum::<f64>()
        / mass;
    Ok(WindowStats {
        window: (lo, hi),
        mean,
        variance,
        window_mass: mass,
    })
}

/// `(r, ln(sigma^2 / (pi^2/12)))` with `sigma^2` the `[0, pi]` window
/// variance of the closed-form distribution. Points are computed in
/// parallel and returned in input order.
pub fn log_variance_ratio_curve(
    r_values: &[f64],
    phi: f64,
    varphi: f64,
    m_max: usize,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    if let Some(&r) = r_values
        .iter()
        .find(|&&r| r.is_nan() || r <= 0.0 || r.is_infinite())
    {
        return Err(Error::param(
            "r_values",
            format!("must be positive, got {r}"),
        ));
    }
    r_values
        .par_iter()
        .map(|&r| {
            let dist =
                phase_distribution_closed(SqueezeParams::new(r, phi)?, varphi, m_max, grid_points)?;
            let stats = restricted_window_stats(&dist, 0.0, PI)?;
            Ok((r, (stats.variance / VACUUM_WINDOW_VARIANCE).ln()))
        })
        .collect()
}

/// Ordinary least-squares `(slope, intercept)`.
pub fn least_squares_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::param("points", "need at least two points to fit"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("points", "abscissae are all equal"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
