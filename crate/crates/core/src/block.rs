//! Exact two-mode oracle for the photocount difference `n_b - n_c`.
//!
//! With `b = (a + i a0)/sqrt 2` and `c = (a0 + i a)/sqrt 2` the observable
//! is `n_bc = i (a^dag a0 - a0^dag a)`. It conserves the total photon
//! number, so a two-mode state is stored as independent blocks of fixed
//! `N = n_a + n_a0`, each indexed by the photon number `k` in mode `a`. In a
//! block the operator is tridiagonal with `<k+1| n_bc |k> = i sqrt((k+1)(N-k))`
//! and spectrum `{N - 2j}`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{Route, VarianceReport};
use crate::fock::{pair_amplitudes, FockVector, SqueezeParams};
use crate::tridiag::{sym_tridiag_eigen, sym_tridiag_eigenvalues, SymTridiagEigen};
use crate::{Error, Result, EPS_NORM};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Amplitudes of one total-photon-number block; index `k` is the photon
/// number in mode `a`, mode `a0` holds `N - k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeBlock {
    n_total: usize,
    amplitudes: Vec<Complex64>,
}

impl TwoModeBlock {
    pub fn new(n_total: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != n_total + 1 {
            return Err(Error::param(
                "amplitudes",
                format!(
                    "block N = {n_total} needs {} entries, got {}",
                    n_total + 1,
                    amplitudes.len()
                ),
            ));
        }
        let block = Self {
            n_total,
            amplitudes,
        };
        let norm = block.norm_sqr();
        if !norm.is_finite() || norm > 1.0 + EPS_NORM {
            return Err(Error::Unnormalized {
                norm_sqr: norm,
                tolerance: EPS_NORM,
            });
        }
        Ok(block)
    }

    /// `|k>_a |N - k>_a0`.
    pub fn product(n_total: usize, k: usize) -> Result<Self> {
        if k > n_total {
            return Err(Error::param("k", format!("{k} exceeds N = {n_total}")));
        }
        let mut amplitudes = vec![ZERO; n_total + 1];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_total,
            amplitudes,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Highest `k` carrying nonzero amplitude.
    pub fn highest_occupied(&self) -> Option<usize> {
        self.amplitudes.iter().rposition(|c| *c != ZERO)
    }

    /// The same block rescaled to unit norm; fails on an empty block.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::Unnormalized {
                norm_sqr: norm,
                tolerance: EPS_NORM,
            });
        }
        let scale = norm.sqrt().recip();
        Ok(Self {
            n_total: self.n_total,
            amplitudes: self.amplitudes.iter().map(|c| c * scale).collect(),
        })
    }
}

/// Superposition over total photon numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TwoModeState {
    blocks: BTreeMap<usize, TwoModeBlock>,
}

impl TwoModeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = TwoModeBlock>) -> Result<Self> {
        let mut state = Self::new();
        for b in blocks {
            if state.blocks.insert(b.n_total, b).is_some() {
                return Err(Error::param("blocks", "duplicate total photon number"));
            }
        }
        let norm = state.norm_sqr();
        if norm > 1.0 + EPS_NORM {
            return Err(Error::Unnormalized {
                norm_sqr: norm,
                tolerance: EPS_NORM,
            });
        }
        Ok(state)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &TwoModeBlock> {
        self.blocks.values()
    }

    pub fn block(&self, n_total: usize) -> Option<&TwoModeBlock> {
        self.blocks.get(&n_total)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().map(TwoModeBlock::norm_sqr).sum()
    }

    /// `n_bc |psi>`, block by block. The result need not be normalized.
    pub fn apply_nbc(&self) -> Vec<TwoModeBlock> {
        self.blocks
            .values()
            .map(|b| TwoModeBlock {
                n_total: b.n_total,
                amplitudes: NbcGenerator::new(b.n_total).apply(&b.amplitudes),
            })
            .collect()
    }
}

impl From<TwoModeBlock> for TwoModeState {
    fn from(block: TwoModeBlock) -> Self {
        let mut blocks = BTreeMap::new();
        blocks.insert(block.n_total, block);
        Self { blocks }
    }
}

/// `sum_m C_m |2m>_a |N - 2m>_a0 e^{i (N - 2m) varphi}` for `m <= m_max`.
pub fn build_entangled_state(
    params: SqueezeParams,
    n_total: usize,
    varphi: f64,
    m_max: usize,
) -> Result<TwoModeBlock> {
    if 2 * m_max > n_total {
        return Err(Error::param(
            "m_max",
            format!("2 m_max = {} exceeds N = {n_total}", 2 * m_max),
        ));
    }
    if !varphi.is_finite() {
        return Err(Error::param("varphi", "must be finite"));
    }
    let mut amplitudes = vec![ZERO; n_total + 1];
    for (m, c) in pair_amplitudes(params, m_max).into_iter().enumerate() {
        let k = 2 * m;
        amplitudes[k] = c * Complex64::from_polar(1.0, (n_total - k) as f64 * varphi);
    }
    Ok(TwoModeBlock {
        n_total,
        amplitudes,
    })
}

/// `n_bc` restricted to the block of total photon number `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct NbcGenerator {
    n_total: usize,
    /// `sqrt((k+1)(N-k))` for `k = 0..N-1`.
    coupling: Vec<f64>,
}

impl NbcGenerator {
    pub fn new(n_total: usize) -> Self {
        let coupling = (0..n_total)
            .map(|k| (((k + 1) * (n_total - k)) as f64).sqrt())
            .collect();
        Self { n_total, coupling }
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// Matrix element `<row| n_bc |col>`.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        if row == col + 1 {
            I * self.coupling[col]
        } else if col == row + 1 {
            -I * self.coupling[row]
        } else {
            ZERO
        }
    }

    pub fn dense(&self) -> Vec<Vec<Complex64>> {
        let dim = self.n_total + 1;
        (0..dim)
            .map(|row| (0..dim).map(|col| self.element(row, col)).collect())
            .collect()
    }

    /// `(n_bc psi)_k = i s_{k-1} psi_{k-1} - i s_k psi_{k+1}`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let dim = self.n_total + 1;
        assert_eq!(psi.len(), dim, "block dimension mismatch");
        let mut out = vec![ZERO; dim];
        for k in 0..dim {
            let mut acc = ZERO;
            if k > 0 {
                acc += psi[k - 1] * self.coupling[k - 1];
            }
            if k + 1 < dim {
                acc -= psi[k + 1] * self.coupling[k];
            }
            out[k] = I * acc;
        }
        out
    }

    /// Real symmetric form under `|k> -> i^k |k>`: zero diagonal and
    /// off-diagonal `sqrt((k+1)(N-k))`.
    pub fn real_symmetric_form(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.n_total + 1], self.coupling.clone())
    }
}

pub fn nbc_generator_block(n_total: usize) -> NbcGenerator {
    NbcGenerator::new(n_total)
}

/// `(-i)^k`, the conjugate of the gauge factor.
fn gauge_conj(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Complex `<psi| n_bc |psi>`, `<psi| n_bc^2 |psi>` and `<psi|psi>`.
fn raw_moments(state: &TwoModeState) -> (Complex64, f64, f64) {
    let mut first = ZERO;
    let mut second = 0.0;
    let mut norm = 0.0;
    for b in state.blocks() {
        let applied = NbcGenerator::new(b.n_total).apply(&b.amplitudes);
        first += b
            .amplitudes
            .iter()
            .zip(&applied)
            .map(|(p, q)| p.conj() * q)
            .sum::<Complex64>();
        second += applied.iter().map(|q| q.norm_sqr()).sum::<f64>();
        norm += b.norm_sqr();
    }
    (first, second, norm)
}

fn check_normalized(state: &TwoModeState) -> Result<f64> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > EPS_NORM {
        return Err(Error::Unnormalized {
            norm_sqr: norm,
            tolerance: EPS_NORM,
        });
    }
    Ok(norm)
}

/// `<psi| n_bc |psi> / <psi|psi>` without discarding the imaginary part,
/// which vanishes for a Hermitian observable.
pub fn nbc_expectation(state: &TwoModeState) -> Result<Complex64> {
    check_normalized(state)?;
    let (first, _, norm) = raw_moments(state);
    Ok(first / norm)
}

/// Exact mean and variance of `n_bc`. The state is renormalized, so the
/// residual truncation loss (at most `EPS_NORM`) does not bias the moments.
pub fn nbc_moments(state: &TwoModeState) -> Result<VarianceReport> {
    check_normalized(state)?;
    let (first, second, norm) = raw_moments(state);
    let mean = first.re / norm;
    let variance = (second / norm - mean * mean).max(0.0);
    Ok(VarianceReport {
        mean,
        variance,
        route: Route::Oracle,
    })
}

/// Truncated coherent amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` with
/// `alpha = beta e^{i varphi}` for `n = 0..=cutoff`, and the exact mass
/// beyond the cutoff. Magnitudes are formed in log space.
pub fn coherent_amplitudes(beta: f64, varphi: f64, cutoff: usize) -> (Vec<Complex64>, f64) {
    if beta == 0.0 {
        let mut amps = vec![ZERO; cutoff + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        return (amps, 0.0);
    }
    let mean = beta * beta;
    let ln_beta = beta.ln();
    let mut ln_fact = 0.0;
    let mut amps = Vec::with_capacity(cutoff + 1);
    for n in 0..=cutoff {
        if n >= 2 {
            ln_fact += (n as f64).ln();
        }
        let ln_mag = 0.5 * (-mean - ln_fact) + n as f64 * ln_beta;
        amps.push(Complex64::from_polar(ln_mag.exp(), n as f64 * varphi));
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        if n >= 2 {
            ln_fact += (n as f64).ln();
        }
        let p = (-mean - ln_fact + 2.0 * n as f64 * ln_beta).exp();
        tail += p;
        if (n as f64) > mean && p < tail * 1e-17 + 1e-300 {
            break;
        }
        n += 1;
    }
    (amps, tail)
}

/// `beta^2 + 10 beta + 10`, rounded up.
pub fn default_lo_cutoff(beta: f64) -> usize {
    (beta * beta + 10.0 * beta + 10.0).ceil() as usize
}

/// Maximum coherent-state mass allowed beyond the LO cutoff.
pub const LO_TAIL_TOLERANCE: f64 = 1e-9;

/// Signal in mode `a` times `|beta e^{i varphi}>` in mode `a0`, regrouped by
/// total photon number. Blocks with no amplitude are omitted.
pub fn coherent_lo_state(
    beta: f64,
    varphi: f64,
    signal: &FockVector,
    cutoff_lo: usize,
) -> Result<TwoModeState> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::param(
            "beta",
            format!("must be finite and >= 0, got {beta}"),
        ));
    }
    if !varphi.is_finite() {
        return Err(Error::param("varphi", "must be finite"));
    }
    let (lo, tail) = coherent_amplitudes(beta, varphi, cutoff_lo);
    if tail >= LO_TAIL_TOLERANCE {
        return Err(Error::Truncation(format!(
            "LO cutoff {cutoff_lo} leaves coherent mass {tail:e} for beta = {beta}"
        )));
    }
    let sig = signal.amplitudes();
    let mut blocks = BTreeMap::new();
    for n_total in 0..=(signal.cutoff() + cutoff_lo) {
        let mut amplitudes = vec![ZERO; n_total + 1];
        let k_lo = n_total.saturating_sub(cutoff_lo);
        let k_hi = n_total.min(signal.cutoff());
        let mut any = false;
        for k in k_lo..=k_hi {
            let v = sig[k] * lo[n_total - k];
            if v != ZERO {
                any = true;
            }
            amplitudes[k] = v;
        }
        if any {
            blocks.insert(
                n_total,
                TwoModeBlock {
                    n_total,
                    amplitudes,
                },
            );
        }
    }
    Ok(TwoModeState { blocks })
}

/// Spectral decomposition of the block generator.
#[derive(Clone, Debug)]
pub struct NbcSpectrum {
    n_total: usize,
    eigen: SymTridiagEigen,
}

impl NbcSpectrum {
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Ascending eigenvalues, approximately `-N, -N + 2, ..., N`.
    pub fn eigenvalues(&self) -> &[f64] {
        self.eigen.values()
    }

    /// Eigenvector `j` in the block basis (gauge undone).
    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        self.eigen
            .vector(j)
            .iter()
            .enumerate()
            .map(|(k, &v)| gauge_conj(k).conj() * v)
            .collect()
    }

    /// Lattice outcome `N - 2j'` nearest to eigenvalue `j`.
    pub fn outcome(&self, j: usize) -> i64 {
        let n = self.n_total as f64;
        let step = ((self.eigen.values()[j] + n) / 2.0).round();
        2 * step as i64 - self.n_total as i64
    }

    /// `|<u_j|psi>|^2` for every eigenvector `u_j`.
    pub fn projections(&self, amplitudes: &[Complex64]) -> Vec<f64> {
        assert_eq!(
            amplitudes.len(),
            self.n_total + 1,
            "block dimension mismatch"
        );
        let rotated: Vec<Complex64> = amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| gauge_conj(k) * a)
            .collect();
        (0..=self.n_total)
            .map(|j| {
                self.eigen
                    .vector(j)
                    .iter()
                    .zip(&rotated)
                    .map(|(&v, a)| a * v)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }
}

/// Eigenvalues only, ascending.
pub fn nbc_eigenvalues(n_total: usize) -> Result<Vec<f64>> {
    let (diag, off) = NbcGenerator::new(n_total).real_symmetric_form();
    sym_tridiag_eigenvalues(&diag, &off)
}

pub fn nbc_eigensystem(n_total: usize) -> Result<NbcSpectrum> {
    let generator = NbcGenerator::new(n_total);
    let (diag, off) = generator.real_symmetric_form();
    let eigen = sym_tridiag_eigen(&diag, &off)?;
    Ok(NbcSpectrum { n_total, eigen })
}

/// One simulated detection: the block's total photon number and the
/// photocount difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorRecord {
    pub n_total: usize,
    pub n_bc: i64,
}

impl DetectorRecord {
    pub fn n_b(&self) -> i64 {
        (self.n_total as i64 + self.n_bc) / 2
    }

    pub fn n_c(&self) -> i64 {
        (self.n_total as i64 - self.n_bc) / 2
    }
}

/// Samples drawn from one RNG stream. Changing this changes every
/// recorded sequence.
pub const SAMPLE_CHUNK: usize = 8192;

struct BlockTable {
    n_total: usize,
    outcomes: Vec<i64>,
    cdf: Vec<f64>,
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// I.i.d. detector records: a block by its norm, then an eigenvalue by the
/// squared projection onto its eigenvector.
///
/// Chunk `c` of [`SAMPLE_CHUNK`] samples draws from ChaCha8 seeded with
/// `seed` on stream `c`, so output depends only on `(state, n_samples, seed)`.
pub fn sample_records(
    state: &TwoModeState,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<DetectorRecord>> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be positive"));
    }
    check_normalized(state)?;

    let blocks: Vec<&TwoModeBlock> = state.blocks().filter(|b| b.norm_sqr() > 0.0).collect();
    let tables = blocks
        .par_iter()
        .map(|b| {
            let spectrum = nbc_eigensystem(b.n_total)?;
            let probs = spectrum.projections(&b.amplitudes);
            Ok(BlockTable {
                n_total: b.n_total,
                outcomes: (0..=b.n_total).map(|j| spectrum.outcome(j)).collect(),
                cdf: cumulative(probs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let block_cdf = cumulative(blocks.iter().map(|b| b.norm_sqr()));

    let chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let records = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = SAMPLE_CHUNK.min(n_samples - c * SAMPLE_CHUNK);
            (0..len)
                .map(|_| {
                    let table = &tables[draw(&block_cdf, rng.random::<f64>())];
                    let j = draw(&table.cdf, rng.random::<f64>());
                    DetectorRecord {
                        n_total: table.n_total,
                        n_bc: table.outcomes[j],
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(records)
}

/// Photocount differences only; see [`sample_records`].
pub fn sample_nbc(state: &TwoModeState, n_samples: usize, seed: u64) -> Result<Vec<i64>> {
    Ok(sample_records(state, n_samples, seed)?
        .into_iter()
        .map(|r| r.n_bc)
        .collect())
}

/// Sample mean and unbiased sample variance.
pub fn sample_moments(samples: &[i64]) -> VarianceReport {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples
            .iter()
            .map(|&s| (s as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    VarianceReport {
        mean,
        variance,
        route: Route::MonteCarlo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{lo_phase_for_theta, nbc_variance_fock};
    use crate::fock::{squeezed_vacuum_coefficients, truncation_for_tolerance};
    use std::f64::consts::PI;

    fn sv(r: f64, phi: f64) -> SqueezeParams {
        SqueezeParams::new(r, phi).unwrap()
    }

    #[test]
    fn vacuum_signal_block() {
        let b = build_entangled_state(sv(0.0, 0.0), 10, 0.3, 5).unwrap();
        let want = Complex64::from_polar(1.0, 3.0);
        assert!((b.amplitudes()[0] - want).norm() < 1e-15);
        assert!(b.amplitudes()[1..].iter().all(|c| *c == ZERO));
    }

    #[test]
    fn entangled_norm_is_truncated_pair_mass() {
        let p = sv(1.0, 0.0);
        let b = build_entangled_state(p, 100, 0.0, 30).unwrap();
        let mass: f64 = pair_amplitudes(p, 30).iter().map(|c| c.norm_sqr()).sum();
        assert!((b.norm_sqr() - mass).abs() < 1e-15);
        let shifted = build_entangled_state(p, 100, PI / 3.0, 30).unwrap();
        for (x, y) in b.amplitudes().iter().zip(shifted.amplitudes()) {
            assert!((x.norm() - y.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn entangled_rejects_oversized_truncation() {
        assert!(build_entangled_state(sv(1.0, 0.0), 10, 0.0, 6).is_err());
        assert!(build_entangled_state(sv(1.0, 0.0), 10, 0.0, 5).is_ok());
    }

    #[test]
    fn generator_small_blocks() {
        let g = nbc_generator_block(1);
        assert!((g.element(1, 0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(g.element(1, 0), g.element(0, 1).conj());
        for n in 0..6 {
            let d = nbc_generator_block(n).dense();
            assert!(d.iter().enumerate().all(|(i, row)| row[i] == ZERO));
        }
        let e = nbc_eigensystem(1).unwrap();
        assert!((e.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let e = nbc_eigensystem(2).unwrap();
        for (v, w) in e.eigenvalues().iter().zip([-2.0, 0.0, 2.0]) {
            assert!((v - w).abs() < 1e-14);
        }
    }

    #[test]
    fn generator_is_hermitian_and_matches_ladder_expansion() {
        // Independent route: build i (a^dag a0 - a0^dag a) from ladder actions.
        let n = 7;
        let g = nbc_generator_block(n);
        for k in 0..=n {
            for j in 0..=n {
                assert_eq!(g.element(k, j), g.element(j, k).conj());
                let mut want = ZERO;
                // a^dag a0 |j, n-j> = sqrt(j+1) sqrt(n-j) |j+1, n-j-1>
                if k == j + 1 {
                    want += I * (((j + 1) * (n - j)) as f64).sqrt();
                }
                // a0^dag a |j, n-j> = sqrt(j) sqrt(n-j+1) |j-1, n-j+1>
                if j >= 1 && k == j - 1 {
                    want -= I * ((j * (n - j + 1)) as f64).sqrt();
                }
                assert!((g.element(k, j) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn shot_noise_from_product_states() {
        for n in [1, 5, 40, 200] {
            for k in [0, n] {
                let s = TwoModeState::from(TwoModeBlock::product(n, k).unwrap());
                let m = nbc_moments(&s).unwrap();
                assert!(m.mean.abs() < 1e-14);
                assert!((m.variance - n as f64).abs() < 1e-9 * n as f64);
                assert_eq!(m.route, Route::Oracle);
            }
        }
    }

    #[test]
    fn oracle_near_fock_formula() {
        let p = sv(0.5, 0.0);
        let b = build_entangled_state(p, 200, lo_phase_for_theta(0.0), 100).unwrap();
        let m = nbc_moments(&b.into()).unwrap();
        let pred = nbc_variance_fock(200, p, 0.0).variance;
        assert!((pred - 200.0 * (-1f64).exp()).abs() < 1e-10);
        assert!(
            ((m.variance - pred) / pred).abs() < 0.03,
            "{} vs {pred}",
            m.variance
        );
    }

    #[test]
    fn moments_reject_unnormalized() {
        let b = TwoModeBlock::new(2, vec![Complex64::new(0.5, 0.0), ZERO, ZERO]).unwrap();
        assert!(nbc_moments(&b.into()).is_err());
        assert!(TwoModeBlock::new(2, vec![ZERO; 2]).is_err());
    }

    #[test]
    fn hermitian_expectation_is_real() {
        let signal = squeezed_vacuum_coefficients(sv(0.6, 2.1), 20);
        let s = coherent_lo_state(1.7, 0.9, &signal, default_lo_cutoff(1.7)).unwrap();
        assert!(nbc_expectation(&s).unwrap().im.abs() < 1e-10);
    }

    #[test]
    fn coherent_lo_trivial_and_poisson_blocks() {
        let s = coherent_lo_state(0.0, 0.0, &FockVector::vacuum(4), 10).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            s.block(0).unwrap().amplitudes(),
            &[Complex64::new(1.0, 0.0)]
        );

        let s =
            coherent_lo_state(4.0, 0.3, &FockVector::vacuum(0), default_lo_cutoff(4.0)).unwrap();
        let mut p = (-16f64).exp();
        for n in 0..=default_lo_cutoff(4.0) {
            let got = s.block(n).map_or(0.0, |b| b.norm_sqr());
            assert!((got - p).abs() < 1e-15, "N={n}: {got} vs {p}");
            p *= 16.0 / (n + 1) as f64;
        }
    }

    #[test]
    fn coherent_lo_rejects_short_cutoff() {
        assert!(matches!(
            coherent_lo_state(4.0, 0.0, &FockVector::vacuum(0), 20),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn coherent_lo_variance_is_quadrature_plus_signal_photons() {
        // Exact for a coherent reference: Var n_bc = 4 beta^2 Var X(theta) + <n_a>.
        let p = sv(0.8, 0.0);
        let signal = squeezed_vacuum_coefficients(p, truncation_for_tolerance(0.8, 1e-13).unwrap());
        let beta = 4.0;
        for i in 0..8 {
            let theta = i as f64 * PI / 4.0;
            let s = coherent_lo_state(
                beta,
                lo_phase_for_theta(theta),
                &signal,
                default_lo_cutoff(beta),
            )
            .unwrap();
            let m = nbc_moments(&s).unwrap();
            let q = crate::fock::quadrature_statistics(&signal, theta).unwrap();
            let want = 4.0 * beta * beta * q.variance + signal.mean_photon_number();
            assert!((m.variance - want).abs() < 1e-8, "{} vs {want}", m.variance);
        }
    }

    #[test]
    fn block_conservation() {
        let signal = squeezed_vacuum_coefficients(sv(0.4, 0.0), 6);
        let s = coherent_lo_state(1.5, 0.2, &signal, default_lo_cutoff(1.5)).unwrap();
        let applied = s.apply_nbc();
        let keys: Vec<usize> = s.blocks().map(|b| b.n_total()).collect();
        let got: Vec<usize> = applied.iter().map(|b| b.n_total()).collect();
        assert_eq!(keys, got);
        for (b, a) in s.blocks().zip(&applied) {
            assert_eq!(b.amplitudes().len(), a.amplitudes().len());
        }
    }

    #[test]
    fn spectrum_lattice_and_unitarity() {
        for n in [0, 1, 2, 3, 17, 50] {
            let e = nbc_eigensystem(n).unwrap();
            for (j, v) in e.eigenvalues().iter().enumerate() {
                let want = 2.0 * j as f64 - n as f64;
                assert!((v - want).abs() < 1e-8, "N={n} j={j}: {v}");
                assert_eq!(e.outcome(j), want as i64);
            }
            for a in 0..=n {
                let ua = e.eigenvector(a);
                for b in 0..=n {
                    let ub = e.eigenvector(b);
                    let dot: Complex64 = ua.iter().zip(&ub).map(|(x, y)| x.conj() * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn eigenvectors_solve_complex_generator() {
        let n = 9;
        let g = nbc_generator_block(n);
        let e = nbc_eigensystem(n).unwrap();
        for j in 0..=n {
            let u = e.eigenvector(j);
            let hu = g.apply(&u);
            for (x, y) in hu.iter().zip(&u) {
                assert!((x - y * e.eigenvalues()[j]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn normalized_block_has_unit_norm() {
        let b = build_entangled_state(sv(1.5, 0.0), 100, 0.2, 50).unwrap();
        assert!(1.0 - b.norm_sqr() > 1e-7);
        let n = b.normalized().unwrap();
        assert!((n.norm_sqr() - 1.0).abs() < 1e-14);
        assert!(nbc_moments(&b.clone().into()).is_err());
        assert!(nbc_moments(&n.into()).is_ok());
        assert!(TwoModeBlock::new(3, vec![ZERO; 4])
            .unwrap()
            .normalized()
            .is_err());
    }

    #[test]
    fn samples_share_block_parity_and_are_reproducible() {
        let signal = squeezed_vacuum_coefficients(sv(0.5, 0.0), 40);
        let s = coherent_lo_state(2.0, 0.0, &signal, default_lo_cutoff(2.0)).unwrap();
        let a = sample_records(&s, 20_000, 7).unwrap();
        let b = sample_records(&s, 20_000, 7).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!((r.n_total as i64 - r.n_bc).rem_euclid(2), 0);
            assert_eq!(r.n_b() + r.n_c(), r.n_total as i64);
            assert_eq!(r.n_b() - r.n_c(), r.n_bc);
        }
        let c = sample_records(&s, 20_000, 8).unwrap();
        assert_ne!(a, c);
        // A prefix of a longer run reproduces the shorter run.
        let long = sample_records(&s, 30_000, 7).unwrap();
        assert_eq!(&long[..20_000], &a[..]);
    }

    #[test]
    fn sampling_rejects_zero_samples() {
        let s = TwoModeState::from(TwoModeBlock::product(3, 0).unwrap());
        assert!(sample_nbc(&s, 0, 1).is_err());
    }

    #[test]
    fn shot_noise_monte_carlo() {
        let n = 60;
        let s = TwoModeState::from(TwoModeBlock::product(n, 0).unwrap());
        let samples = sample_nbc(&s, 100_000, 42).unwrap();
        let m = sample_moments(&samples);
        assert!(((m.variance - n as f64) / n as f64).abs() < 0.05);
        assert!(samples.iter().all(|v| (v + n as i64) % 2 == 0));
    }
}
