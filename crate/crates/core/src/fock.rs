//! Single-mode Fock amplitudes, squeezed-vacuum pair coefficients and
//! quadrature moments.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, EPS_NORM};

/// Squeeze magnitude `r` and phase `phi` of `xi = r e^{i phi}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    phi: f64,
}

impl SqueezeParams {
    /// `phi` is reduced into `[0, 2pi)`.
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::param(
                "r",
                format!("must be finite and >= 0, got {r}"),
            ));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", format!("must be finite, got {phi}")));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { r, phi })
    }

    pub fn vacuum() -> Self {
        Self { r: 0.0, phi: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `xi = r e^{i phi}`.
    pub fn xi(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.phi)
    }
}

/// Pair amplitudes `C_0..=C_{m_max}` of the squeezed vacuum.
///
/// `|C_m|` follows the ratio recurrence
/// `|C_{m+1}| = |C_m| tanh r sqrt((2m+1)(2m+2)) / (2(m+1))` from
/// `|C_0| = sqrt(sech r)`; the phase `(-1)^m e^{i m phi}` is attached per
/// index so that it does not accumulate rounding.
pub fn pair_amplitudes(params: SqueezeParams, m_max: usize) -> Vec<Complex64> {
    let t = params.r.tanh();
    let mut out = Vec::with_capacity(m_max + 1);
    let mut mag = (1.0 / params.r.cosh()).sqrt();
    for m in 0..=m_max {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let phase = if params.phi == 0.0 {
            Complex64::new(sign, 0.0)
        } else {
            Complex64::from_polar(sign, m as f64 * params.phi)
        };
        out.push(phase * mag);
        let k = m as f64;
        mag *= t * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
    }
    out
}

/// Squeezed vacuum truncated after `m_max` pairs: indices `0..=2 m_max`,
/// odd indices exactly zero.
pub fn squeezed_vacuum_coefficients(params: SqueezeParams, m_max: usize) -> FockVector {
    let pairs = pair_amplitudes(params, m_max);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * m_max + 1];
    for (m, c) in pairs.into_iter().enumerate() {
        amplitudes[2 * m] = c;
    }
    FockVector { amplitudes }
}

/// Maximum number of pair terms explored before giving up on a tolerance.
const MAX_TRUNCATION_TERMS: usize = 5_000_000;

/// Smallest `m_max` with `sum_{m > m_max} |C_m|^2 < tail_mass`.
///
/// Terms are generated until the geometric bound on what remains,
/// `p_J tanh^2 r / sech^2 r`, is negligible against `tail_mass`; suffix sums
/// are then accumulated backwards so no cancellation against 1 occurs.
pub fn truncation_for_tolerance(r: f64, tail_mass: f64) -> Result<usize> {
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return Err(Error::param(
            "tail_mass",
            format!("must lie in (0, 1), got {tail_mass}"),
        ));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::param(
            "r",
            format!("must be finite and >= 0, got {r}"),
        ));
    }
    if r == 0.0 {
        return Ok(0);
    }
    let t2 = r.tanh().powi(2);
    let sech2 = 1.0 / r.cosh().powi(2);
    let remainder_ratio = t2 / sech2;

    let mut probs = Vec::new();
    let mut p = 1.0 / r.cosh();
    let mut m = 0usize;
    loop {
        probs.push(p);
        let remainder = p * remainder_ratio;
        if remainder < tail_mass * 1e-8 || p == 0.0 {
            break;
        }
        if m >= MAX_TRUNCATION_TERMS {
            return Err(Error::Truncation(format!(
                "tail mass {tail_mass} at r = {r} needs more than {MAX_TRUNCATION_TERMS} pairs"
            )));
        }
        let k = m as f64;
        p *= t2 * (2.0 * k + 1.0) / (2.0 * k + 2.0);
        m += 1;
    }

    // tail[j] = sum_{i >= j} p_i, with the bound for i > J folded in.
    let last = probs.len() - 1;
    let mut tail = probs[last] * remainder_ratio;
    let mut best = last;
    for j in (1..=last).rev() {
        tail += probs[j];
        if tail < tail_mass {
            best = j - 1;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Complex amplitudes over photon number `0..=cutoff` for one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    /// Rejects empty input and squared norms above `1 + EPS_NORM`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::param("amplitudes", "need at least one entry"));
        }
        let v = Self { amplitudes };
        let n = v.norm_sqr();
        if !n.is_finite() || n > 1.0 + EPS_NORM {
            return Err(Error::Unnormalized {
                norm_sqr: n,
                tolerance: EPS_NORM,
            });
        }
        Ok(v)
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::number_state(0, cutoff)
    }

    /// `|n>` embedded in a space of the given cutoff (at least `n`).
    pub fn number_state(n: usize, cutoff: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff.max(n) + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<a^dag a>`.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// `<a> = sum_n sqrt(n+1) c_n^* c_{n+1}`.
    pub fn expect_annihilation(&self) -> Complex64 {
        self.amplitudes
            .windows(2)
            .enumerate()
            .map(|(n, w)| w[0].conj() * w[1] * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// `<a^2> = sum_n sqrt((n+1)(n+2)) c_n^* c_{n+2}`.
    pub fn expect_annihilation_sq(&self) -> Complex64 {
        self.amplitudes
            .windows(3)
            .enumerate()
            .map(|(n, w)| w[0].conj() * w[2] * (((n + 1) * (n + 2)) as f64).sqrt())
            .sum()
    }
}

/// Mean and variance of `X(theta) = (a e^{-i theta} + a^dag e^{i theta}) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub theta: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Exact quadrature moments of a (truncated) single-mode state.
///
/// `<X^2> = (2 Re(<a^2> e^{-2i theta}) + 2<n> + 1) / 4`, which is exact for
/// a truncated vector because `a a^dag = n + 1` never leaves the support in
/// an expectation value.
pub fn quadrature_statistics(state: &FockVector, theta: f64) -> Result<QuadratureStats> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > EPS_NORM {
        return Err(Error::Unnormalized {
            norm_sqr: norm,
            tolerance: EPS_NORM,
        });
    }
    let rot = Complex64::from_polar(1.0, -theta);
    let mean = (state.expect_annihilation() * rot).re;
    let second = (2.0 * (state.expect_annihilation_sq() * rot * rot).re
        + 2.0 * state.mean_photon_number()
        + 1.0)
        / 4.0;
    let variance = (second - mean * mean).max(0.0);
    Ok(QuadratureStats {
        theta,
        mean,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sv(r: f64, phi: f64) -> SqueezeParams {
        SqueezeParams::new(r, phi).unwrap()
    }

    #[test]
    fn zero_squeeze_is_vacuum() {
        let v = squeezed_vacuum_coefficients(sv(0.0, 0.0), 5);
        assert_eq!(v.amplitudes().len(), 11);
        assert_eq!(v.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(v.amplitudes()[1..]
            .iter()
            .all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn first_pair_amplitudes_at_r1() {
        let c = pair_amplitudes(sv(1.0, 0.0), 3);
        assert!((c[0].re - 0.805_018).abs() < 1e-6);
        assert!((c[1].re - -0.433_525).abs() < 1e-6);
        assert_eq!(c[1].im, 0.0);
    }

    #[test]
    fn odd_indices_are_exactly_zero() {
        let v = squeezed_vacuum_coefficients(sv(1.3, 0.7), 40);
        for (n, c) in v.amplitudes().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(*c, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn phase_is_reduced() {
        let p = sv(0.5, -PI / 2.0);
        assert!((p.phi() - 1.5 * PI).abs() < 1e-15);
        let p = sv(0.5, 5.0 * TAU + 1.0);
        assert!((p.phi() - 1.0).abs() < 1e-12);
        assert!(SqueezeParams::new(-0.1, 0.0).is_err());
        assert!(SqueezeParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn truncation_rejects_bad_tail() {
        assert!(truncation_for_tolerance(1.0, 0.0).is_err());
        assert!(truncation_for_tolerance(1.0, 1.0).is_err());
        assert!(truncation_for_tolerance(1.0, -1e-3).is_err());
        assert_eq!(truncation_for_tolerance(0.0, 1e-12).unwrap(), 0);
    }

    #[test]
    fn truncation_grows_with_r() {
        let a = truncation_for_tolerance(1.0, 1e-10).unwrap();
        let b = truncation_for_tolerance(2.0, 1e-10).unwrap();
        assert!(b > a, "{b} <= {a}");
    }

    #[test]
    fn vacuum_quadrature_is_quarter() {
        let v = FockVector::vacuum(4);
        for k in 0..8 {
            let q = quadrature_statistics(&v, k as f64 * 0.4).unwrap();
            assert_eq!(q.mean, 0.0);
            assert_eq!(q.variance, 0.25);
        }
    }

    #[test]
    fn single_photon_quadrature() {
        let v = FockVector::number_state(1, 3);
        let q = quadrature_statistics(&v, 0.3).unwrap();
        assert!(q.mean.abs() < 1e-15);
        assert!((q.variance - 0.75).abs() < 1e-15);
    }

    #[test]
    fn squeezed_quadrature_minimum() {
        let p = sv(1.0, 0.0);
        let m = truncation_for_tolerance(1.0, 1e-14).unwrap();
        let v = squeezed_vacuum_coefficients(p, m);
        let q = quadrature_statistics(&v, 0.0).unwrap();
        assert!((q.variance - 0.033_834).abs() < 1e-6);
        let alt = (1f64.cosh() - 1f64.sinh()).powi(2) / 4.0;
        assert!((q.variance - alt).abs() < 1e-12);
    }

    #[test]
    fn quadrature_rejects_unnormalized() {
        let v = FockVector::new(vec![Complex64::new(0.5, 0.0)]).unwrap();
        assert!(matches!(
            quadrature_statistics(&v, 0.0),
            Err(Error::Unnormalized { .. })
        ));
        assert!(FockVector::new(vec![Complex64::new(1.1, 0.0)]).is_err());
    }

    #[test]
    fn coherent_ladder_moments() {
        // |alpha> truncated far out: <a> = alpha, <a^2> = alpha^2.
        let alpha = Complex64::new(0.6, -0.3);
        let mut amps = Vec::new();
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..60 {
            amps.push(c);
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        let v = FockVector::new(amps).unwrap();
        assert!((v.expect_annihilation() - alpha).norm() < 1e-13);
        assert!((v.expect_annihilation_sq() - alpha * alpha).norm() < 1e-13);
        let q = quadrature_statistics(&v, 0.9).unwrap();
        assert!((q.variance - 0.25).abs() < 1e-12);
    }
}
