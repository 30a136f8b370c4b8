//! `homodyne` command-line front end. Every subcommand emits one table (CSV
//! by default, or JSON) whose first line records the effective parameters.

pub mod check;
pub mod output;

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{
    lo_phase_for_theta, nbc_variance_coherent, nbc_variance_fock, poisson_mixture_variance,
    VarianceReport,
};
use crate::block::{
    build_entangled_state, coherent_lo_state, default_lo_cutoff, nbc_moments, sample_moments,
    sample_records, TwoModeState,
};
use crate::fock::{
    pair_amplitudes, squeezed_vacuum_coefficients, truncation_for_tolerance, SqueezeParams,
};
use crate::phase::{
    least_squares_line, log_variance_ratio_curve, phase_distribution_closed,
    phase_distribution_general, restricted_window_stats, PhaseDistribution, DEFAULT_GRID_POINTS,
    FIGURE_M_MAX, VACUUM_WINDOW_VARIANCE,
};
use crate::Error;

pub use output::{Cell, Format, Table};

/// Exit status for a failed `check`.
pub const EXIT_CHECK_FAILED: u8 = 3;
/// Exit status for invalid parameters.
pub const EXIT_INVALID: u8 = 2;

/// Tail mass used when a signal truncation is not given explicitly.
const DEFAULT_SIGNAL_TAIL: f64 = 1e-12;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "homodyne",
    version,
    about = "Squeezed-vacuum homodyne statistics and relative-phase distributions",
    after_help = "All angles are in radians."
)]
pub struct RunConfig {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Pair amplitudes C_m of the squeezed vacuum.
    Coeffs(CoeffsArgs),
    /// Analytic variance of n_b - n_c over a quadrature-angle sweep.
    Variance(VarianceArgs),
    /// Exact block oracle next to the matching analytic prediction.
    Oracle(OracleArgs),
    /// Monte Carlo detector records of n_b - n_c.
    Sample(SampleArgs),
    /// Relative-phase distribution on a grid.
    Phase(PhaseArgs),
    /// Phase distributions for r = 1 and r = 2 (phi = 0, varphi = 0, m_max = 200).
    Fig2a,
    /// Log ratio of the [0, pi] phase variance to the uniform baseline, with fitted slope.
    Fig2b(Fig2bArgs),
    /// Run the invariant suite; exits 3 if any property fails.
    Check,
}

#[derive(Args, Debug, Clone)]
pub struct SqueezeArgs {
    /// Squeeze magnitude r >= 0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub r: f64,
    /// Squeeze phase phi.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
}

impl SqueezeArgs {
    fn params(&self) -> Result<SqueezeParams, Error> {
        SqueezeParams::new(self.r, self.phi)
    }
}

#[derive(Args, Debug, Clone)]
pub struct ThetaArgs {
    /// Single quadrature angle; otherwise a uniform sweep over [0, 2 pi).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Number of sweep points.
    #[arg(long, default_value_t = 16)]
    pub theta_points: usize,
}

impl ThetaArgs {
    fn angles(&self) -> Result<Vec<f64>, Error> {
        match self.theta {
            Some(t) if t.is_finite() => Ok(vec![t]),
            Some(t) => Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must be finite, got {t}"),
            }),
            None if self.theta_points == 0 => Err(Error::InvalidParameter {
                name: "theta_points",
                reason: "must be positive".into(),
            }),
            None => Ok((0..self.theta_points)
                .map(|i| TAU * i as f64 / self.theta_points as f64)
                .collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LoKind {
    /// Total photon number N shared by both modes.
    Fock,
    /// Coherent local oscillator of amplitude beta.
    Coherent,
}

#[derive(Args, Debug, Clone)]
pub struct LoArgs {
    #[arg(long, value_enum, default_value_t = LoKind::Fock)]
    pub lo: LoKind,
    /// Total photon number for --lo fock.
    #[arg(long, default_value_t = 200)]
    pub n_total: usize,
    /// Local-oscillator amplitude for --lo coherent.
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    /// Local-oscillator Fock cutoff (default beta^2 + 10 beta + 10).
    #[arg(long)]
    pub cutoff_lo: Option<usize>,
    /// Pair truncation (default N/2 for --lo fock, 1e-12 tail for --lo coherent).
    #[arg(long)]
    pub m_max: Option<usize>,
}

impl LoArgs {
    fn record(&self, t: &mut Table, params: SqueezeParams) -> Result<(), Error> {
        match self.lo {
            LoKind::Fock => {
                t.param("lo", "fock").param("n_total", self.n_total);
                t.param("m_max", self.m_max.unwrap_or(self.n_total / 2));
            }
            LoKind::Coherent => {
                t.param("lo", "coherent").param("beta", self.beta);
                t.param(
                    "cutoff_lo",
                    self.cutoff_lo.unwrap_or(default_lo_cutoff(self.beta)),
                );
                t.param("m_max", self.signal_m_max(params)?);
            }
        }
        Ok(())
    }

    fn signal_m_max(&self, params: SqueezeParams) -> Result<usize, Error> {
        match self.m_max {
            Some(m) => Ok(m),
            None => truncation_for_tolerance(params.r(), DEFAULT_SIGNAL_TAIL),
        }
    }

    fn state(&self, params: SqueezeParams, varphi: f64) -> Result<TwoModeState, Error> {
        match self.lo {
            LoKind::Fock => {
                let m_max = self.m_max.unwrap_or(self.n_total / 2);
                Ok(build_entangled_state(params, self.n_total, varphi, m_max)?
                    .normalized()?
                    .into())
            }
            LoKind::Coherent => {
                let signal = squeezed_vacuum_coefficients(params, self.signal_m_max(params)?);
                let cutoff = self.cutoff_lo.unwrap_or(default_lo_cutoff(self.beta));
                coherent_lo_state(self.beta, varphi, &signal, cutoff)
            }
        }
    }

    fn predict(&self, params: SqueezeParams, theta: f64) -> Result<VarianceReport, Error> {
        match self.lo {
            LoKind::Fock => Ok(nbc_variance_fock(self.n_total as u64, params, theta)),
            LoKind::Coherent => nbc_variance_coherent(self.beta, params, theta),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,
    /// Highest pair index (default: smallest with discarded mass below --tail-mass).
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SIGNAL_TAIL)]
    pub tail_mass: f64,
}

#[derive(Args, Debug, Clone)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,
    #[command(flatten)]
    pub theta: ThetaArgs,
    /// Coherent local-oscillator amplitude (default sqrt(n_total)).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Total photon number for the Fock route (default round(beta^2)).
    #[arg(long)]
    pub n_total: Option<u64>,
    /// Poisson-mixture amplitude, mean photon number alpha^2 (default beta).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Poisson window half-width in standard deviations.
    #[arg(long, default_value_t = crate::analytic::DEFAULT_N_SIGMA)]
    pub n_sigma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[command(flatten)]
    pub lo: LoArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,
    #[command(flatten)]
    pub lo: LoArgs,
    /// Quadrature angle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Print only the summary lines.
    #[arg(long)]
    pub summary_only: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhaseRoute {
    /// Closed form in the pair amplitudes.
    Closed,
    /// Projector form on an explicit two-mode state.
    General,
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub squeeze: SqueezeArgs,
    /// Local-oscillator phase.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub varphi: f64,
    #[arg(long, default_value_t = FIGURE_M_MAX)]
    pub m_max: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value_t = PhaseRoute::Closed)]
    pub route: PhaseRoute,
    /// Two-mode state used by the general route.
    #[arg(long, value_enum, default_value_t = LoKind::Fock)]
    pub lo: LoKind,
    /// Total photon number for --lo fock (default 4 m_max).
    #[arg(long)]
    pub n_total: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    #[arg(long)]
    pub cutoff_lo: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct Fig2bArgs {
    #[arg(long, default_value_t = 0.5)]
    pub r_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub r_max: f64,
    #[arg(long, default_value_t = 21)]
    pub r_points: usize,
    #[arg(long, default_value_t = FIGURE_M_MAX)]
    pub m_max: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
}

/// Rendered output and the exit status it carries.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub exit_code: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Invalid(_) => EXIT_INVALID,
            RunError::Io(_) => 1,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Computes the table for a configuration without writing it anywhere.
pub fn execute(config: &RunConfig) -> Result<RunOutput, Error> {
    let (table, exit_code) = match &config.command {
        Command::Coeffs(a) => (coeffs(a)?, 0),
        Command::Variance(a) => (variance(a)?, 0),
        Command::Oracle(a) => (oracle(a)?, 0),
        Command::Sample(a) => (sample(a)?, 0),
        Command::Phase(a) => (phase(a)?, 0),
        Command::Fig2a => (fig2a()?, 0),
        Command::Fig2b(a) => (fig2b(a)?, 0),
        Command::Check => {
            let outcomes = check::run_all()?;
            let code = if outcomes.iter().all(|o| o.passed) {
                0
            } else {
                EXIT_CHECK_FAILED
            };
            (check::table(&outcomes), code)
        }
    };
    Ok(RunOutput {
        text: table.render(config.format),
        exit_code,
    })
}

/// Executes and writes to `--out` or standard output; returns the exit code.
pub fn run(config: &RunConfig) -> Result<u8, RunError> {
    let out = execute(config)?;
    match &config.out {
        Some(path) => std::fs::write(path, out.text.as_bytes())?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(out.exit_code)
}

fn coeffs(a: &CoeffsArgs) -> Result<Table, Error> {
    let params = a.squeeze.params()?;
    let m_max = match a.m_max {
        Some(m) => m,
        None => truncation_for_tolerance(params.r(), a.tail_mass)?,
    };
    let mut t = Table::new("coeffs", &["m", "real", "imag", "prob"]);
    t.param("r", params.r())
        .param("phi", params.phi())
        .param("m_max", m_max);
    if a.m_max.is_none() {
        t.param("tail_mass", a.tail_mass);
    }
    let mut mass = 0.0;
    for (m, c) in pair_amplitudes(params, m_max).into_iter().enumerate() {
        mass += c.norm_sqr();
        t.row(vec![
            m.into(),
            c.re.into(),
            c.im.into(),
            c.norm_sqr().into(),
        ]);
    }
    t.summarize("total_prob", mass);
    Ok(t)
}

fn variance(a: &VarianceArgs) -> Result<Table, Error> {
    let params = a.squeeze.params()?;
    let (beta, n_total) = match (a.beta, a.n_total) {
        (None, None) => return Err(invalid("beta", "give --beta and/or --n-total")),
        (Some(b), n) => {
            if !b.is_finite() || b < 0.0 {
                return Err(invalid("beta", format!("must be finite and >= 0, got {b}")));
            }
            (b, n.unwrap_or((b * b).round() as u64))
        }
        (None, Some(n)) => ((n as f64).sqrt(), n),
    };
    let alpha = a.alpha.unwrap_or(beta);
    let thetas = a.theta.angles()?;
    // Validate every route once before sweeping.
    poisson_mixture_variance(alpha, params, 0.0, a.n_sigma)?;

    let mut t = Table::new("variance", &["theta", "route", "mean", "variance"]);
    t.param("r", params.r())
        .param("phi", params.phi())
        .param("beta", beta)
        .param("n_total", n_total)
        .param("alpha", alpha)
        .param("n_sigma", a.n_sigma);
    for theta in thetas {
        let reports = [
            nbc_variance_coherent(beta, params, theta)?,
            nbc_variance_fock(n_total, params, theta),
            poisson_mixture_variance(alpha, params, theta, a.n_sigma)?.report,
        ];
        for rep in reports {
            t.row(vec![
                theta.into(),
                rep.route.label().into(),
                rep.mean.into(),
                rep.variance.into(),
            ]);
        }
    }
    t.summarize("relative_spread", 1.0 / alpha);
    Ok(t)
}

fn oracle(a: &OracleArgs) -> Result<Table, Error> {
    let params = a.squeeze.params()?;
    let thetas = a.theta.angles()?;
    let mut t = Table::new(
        "oracle",
        &[
            "theta",
            "route",
            "mean",
            "variance",
            "analytic_route",
            "analytic_variance",
            "rel_error",
        ],
    );
    t.param("r", params.r()).param("phi", params.phi());
    a.lo.record(&mut t, params)?;
    for theta in thetas {
        let state = a.lo.state(params, lo_phase_for_theta(theta))?;
        let exact = nbc_moments(&state)?;
        let pred = a.lo.predict(params, theta)?;
        t.row(vec![
            theta.into(),
            exact.route.label().into(),
            exact.mean.into(),
            exact.variance.into(),
            pred.route.label().into(),
            pred.variance.into(),
            ((exact.variance - pred.variance) / pred.variance)
                .abs()
                .into(),
        ]);
    }
    Ok(t)
}

fn sample(a: &SampleArgs) -> Result<Table, Error> {
    let params = a.squeeze.params()?;
    if a.samples == 0 {
        return Err(invalid("samples", "must be positive"));
    }
    if !a.theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let state = a.lo.state(params, lo_phase_for_theta(a.theta))?;
    let exact = nbc_moments(&state)?;
    let records = sample_records(&state, a.samples, a.seed)?;
    let diffs: Vec<i64> = records.iter().map(|r| r.n_bc).collect();
    let mc = sample_moments(&diffs);

    let mut t = Table::new("sample", &["index", "n_total", "n_bc", "n_b", "n_c"]);
    t.param("r", params.r())
        .param("phi", params.phi())
        .param("theta", a.theta);
    a.lo.record(&mut t, params)?;
    t.param("samples", a.samples).param("seed", a.seed);
    if !a.summary_only {
        for (i, rec) in records.iter().enumerate() {
            t.row(vec![
                i.into(),
                rec.n_total.into(),
                rec.n_bc.into(),
                rec.n_b().into(),
                rec.n_c().into(),
            ]);
        }
    }
    t.summarize("sample_mean", mc.mean)
        .summarize("sample_variance", mc.variance)
        .summarize("exact_mean", exact.mean)
        .summarize("exact_variance", exact.variance);
    Ok(t)
}

fn summarize_distribution(t: &mut Table, suffix: &str, d: &PhaseDistribution) -> Result<(), Error> {
    let w = restricted_window_stats(d, 0.0, PI)?;
    t.summarize(&format!("integral{suffix}"), d.integral());
    if let Some(p) = d.argmax_in(0.0, PI) {
        t.summarize(&format!("peak_low{suffix}"), p);
    }
    if let Some(p) = d.argmax_in(PI, TAU) {
        t.summarize(&format!("peak_high{suffix}"), p);
    }
    t.summarize(&format!("window_mean{suffix}"), w.mean);
    t.summarize(&format!("window_variance{suffix}"), w.variance);
    Ok(())
}

fn phase(a: &PhaseArgs) -> Result<Table, Error> {
    let params = a.squeeze.params()?;
    if !a.varphi.is_finite() {
        return Err(invalid("varphi", "must be finite"));
    }
    let mut t = Table::new("phase", &["phi_grid", "density"]);
    t.param("r", params.r())
        .param("phi", params.phi())
        .param("varphi", a.varphi)
        .param("m_max", a.m_max)
        .param("grid_points", a.grid_points);
    let dist = match a.route {
        PhaseRoute::Closed => {
            t.param("route", "closed");
            phase_distribution_closed(params, a.varphi, a.m_max, a.grid_points)?
        }
        PhaseRoute::General => {
            t.param("route", "general");
            let state: TwoModeState = match a.lo {
                LoKind::Fock => {
                    let n = a.n_total.unwrap_or(4 * a.m_max);
                    t.param("lo", "fock").param("n_total", n);
                    build_entangled_state(params, n, a.varphi, a.m_max)?.into()
                }
                LoKind::Coherent => {
                    let cutoff = a.cutoff_lo.unwrap_or(default_lo_cutoff(a.beta));
                    t.param("lo", "coherent")
                        .param("beta", a.beta)
                        .param("cutoff_lo", cutoff);
                    let signal = squeezed_vacuum_coefficients(params, a.m_max);
                    coherent_lo_state(a.beta, a.varphi, &signal, cutoff)?
                }
            };
            phase_distribution_general(&state, a.grid_points)?
        }
    };
    for (x, p) in dist.grid().zip(dist.density()) {
        t.row(vec![x.into(), (*p).into()]);
    }
    summarize_distribution(&mut t, "", &dist)?;
    Ok(t)
}

fn fig2a() -> Result<Table, Error> {
    let r1 = phase_distribution_closed(
        SqueezeParams::new(1.0, 0.0)?,
        0.0,
        FIGURE_M_MAX,
        DEFAULT_GRID_POINTS,
    )?;
    let r2 = phase_distribution_closed(
        SqueezeParams::new(2.0, 0.0)?,
        0.0,
        FIGURE_M_MAX,
        DEFAULT_GRID_POINTS,
    )?;
    let mut t = Table::new("fig2a", &["phi_grid", "density_r1", "density_r2"]);
    t.param("phi", 0.0)
        .param("varphi", 0.0)
        .param("m_max", FIGURE_M_MAX)
        .param("grid_points", DEFAULT_GRID_POINTS);
    for (j, x) in r1.grid().enumerate() {
        t.row(vec![
            x.into(),
            r1.density()[j].into(),
            r2.density()[j].into(),
        ]);
    }
    summarize_distribution(&mut t, "_r1", &r1)?;
    summarize_distribution(&mut t, "_r2", &r2)?;
    Ok(t)
}

fn fig2b(a: &Fig2bArgs) -> Result<Table, Error> {
    if a.r_points < 2 {
        return Err(invalid("r_points", "need at least two points"));
    }
    if !(a.r_min > 0.0 && a.r_max > a.r_min && a.r_max.is_finite()) {
        return Err(invalid("r_min", "need 0 < r_min < r_max"));
    }
    let step = (a.r_max - a.r_min) / (a.r_points - 1) as f64;
    let rs: Vec<f64> = (0..a.r_points).map(|i| a.r_min + step * i as f64).collect();
    let curve = log_variance_ratio_curve(&rs, 0.0, 0.0, a.m_max, a.grid_points)?;
    let (slope, intercept) = least_squares_line(&curve)?;

    let mut t = Table::new("fig2b", &["r", "log_ratio"]);
    t.param("phi", 0.0)
        .param("varphi", 0.0)
        .param("m_max", a.m_max)
        .param("grid_points", a.grid_points)
        .param("window", "[0,pi]")
        .param("sigma0_sq", VACUUM_WINDOW_VARIANCE);
    for (r, v) in &curve {
        t.row(vec![(*r).into(), (*v).into()]);
    }
    t.summarize("fitted_slope", slope)
        .summarize("fitted_intercept", intercept)
        .summarize("reference_slope", -1.0);
    Ok(t)
}
