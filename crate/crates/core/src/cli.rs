//! Command-line front end: `sweep`, `chsh` and `analyze`.
//!
//! Exit codes: 0 on success (a CHSH violation is a result, not a failure),
//! 1 for usage errors, 2 for I/O and parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::chsh::{
    chsh_statistic, fit_cosine_amplitude, max_abs_chsh, verify_lhv_bound, AnalyticModel,
    ChshResult, ChshSettings, ANALYTIC_TOLERANCE, DEFAULT_GRID, LHV_BOUND,
};
use crate::error::{Error, Result};
use crate::io::{
    analyze_events, read_event_file, write_analysis, write_curve, write_curve_file, write_events,
    write_svg_file, OutcomeRecord, PlotSeries,
};
use crate::model::{lhv_correlation, qm_correlation, qm_joint_distribution, Angle, Correlation};
use crate::montecarlo::{
    draw_samples, run_sweep, sample_joint_distribution, samples_for_point, simulate_outcomes,
    CorrelationCurve, EstimatedCorrelation, ExperimentConfig, OutcomeTally, SamplingMode,
    SweepGrid, DEFAULT_N_PAIRS, DEFAULT_N_POINTS, DEFAULT_SEED,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lhv-bell",
    version,
    about = "Photon-pair local hidden variable simulator and Bell-CHSH analysis"
)]
pub struct Cli {
    /// Worker threads for sweeps and grid searches (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation curve over Bob's setting at fixed Alice setting.
    Sweep(SweepArgs),
    /// CHSH statistic at given settings, or maximized over a grid.
    Chsh(ChshArgs),
    /// Per-setting correlations (and CHSH, for a 2x2 design) from an event file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModel {
    /// Monte Carlo simulation of the local hidden variable model.
    Lhv,
    /// Exact -1/2 cos 2(alpha - beta).
    LhvAnalytic,
    /// Exact -cos 2(alpha - beta).
    QmAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Replicate,
    Independent,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Replicate => SamplingMode::ReplicateFigure1,
            ModeArg::Independent => SamplingMode::IndependentPerPoint,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML file with experiment settings; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Alice's setting [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// First beta of the grid [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub beta_start: Option<f64>,
    /// Last beta of the grid, inclusive [default: pi, or 180 with --degrees].
    #[arg(long, allow_hyphen_values = true)]
    pub beta_end: Option<f64>,
    /// Photon pairs per estimate [default: 100000].
    #[arg(long)]
    pub n_pairs: Option<usize>,
    /// Grid points [default: 1000].
    #[arg(long)]
    pub n_points: Option<usize>,
    /// [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reuse one sample set for every point, or draw per point [default: replicate].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "lhv")]
    pub model: SweepModel,
    /// Curve CSV destination; stdout when omitted.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Also draw the exact quantum curve in the SVG.
    #[arg(long)]
    pub compare_qm: bool,
    /// Write every simulated outcome pair to this event file (lhv model only).
    #[arg(long)]
    pub emit_events: Option<PathBuf>,
    /// Interpret angle inputs as degrees. Outputs are always radians.
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChshModel {
    /// Exact local hidden variable correlation.
    Lhv,
    /// Exact quantum correlation.
    Qm,
    /// Monte Carlo simulation of the local hidden variable model.
    LhvMc,
    /// Outcomes sampled from the quantum joint distribution.
    QmMc,
}

#[derive(Debug, Args)]
#[command(group(
    clap::ArgGroup::new("mode").required(true).args(["a", "maximize"])
))]
pub struct ChshArgs {
    #[arg(long, value_enum, default_value = "lhv")]
    pub model: ChshModel,
    /// Alice's first setting.
    #[arg(short = 'a', long = "a", allow_hyphen_values = true, requires_all = ["a_prime", "b", "b_prime"])]
    pub a: Option<f64>,
    /// Alice's second setting.
    #[arg(
        short = 'A',
        long = "a-prime",
        allow_hyphen_values = true,
        requires = "a"
    )]
    pub a_prime: Option<f64>,
    /// Bob's first setting.
    #[arg(short = 'b', long = "b", allow_hyphen_values = true, requires = "a")]
    pub b: Option<f64>,
    /// Bob's second setting.
    #[arg(
        short = 'B',
        long = "b-prime",
        allow_hyphen_values = true,
        requires = "a"
    )]
    pub b_prime: Option<f64>,
    /// Search all setting quadruples on a grid for the largest |S|.
    #[arg(long, conflicts_with = "a")]
    pub maximize: bool,
    /// Grid points per angle for --maximize.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Additionally check the bound at this many random quadruples.
    #[arg(long)]
    pub random: Option<usize>,
    /// Pairs per setting for the Monte Carlo models.
    #[arg(long, default_value_t = DEFAULT_N_PAIRS)]
    pub n_pairs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Event file: lines of `alpha beta x y`.
    pub input: PathBuf,
    /// Per-setting CSV destination; stdout when omitted.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// Sweep settings as read from a TOML file. Angles follow `--degrees`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n_pairs: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<SamplingMode>,
    pub alpha: Option<f64>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub n_points: Option<usize>,
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: format!("{}: {}", path.display(), e.message()),
        })
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } | Error::EmptyInput => EXIT_IO,
        Error::NonFiniteAngle(_) | Error::Domain(_) => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::domain("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, out, err)),
            Err(e) => Err(Error::domain(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&cli.command, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(
    command: &Command,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<()> {
    match command {
        Command::Sweep(args) => cmd_sweep(args, out, err),
        Command::Chsh(args) => cmd_chsh(args, out),
        Command::Analyze(args) => cmd_analyze(args, out, err),
    }
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn angle_input(x: f64, degrees: bool) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFiniteAngle(x));
    }
    Ok(if degrees { x.to_radians() } else { x })
}

/// Merges the config file (if any) with explicit flags.
pub fn sweep_config(args: &SweepArgs) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => SweepFile::load(path)?,
        None => SweepFile::default(),
    };
    let deg = args.degrees;
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.0);
    let beta_start = args.beta_start.or(file.beta_start).unwrap_or(0.0);
    let beta_end = match args.beta_end.or(file.beta_end) {
        Some(x) => angle_input(x, deg)?,
        None => std::f64::consts::PI,
    };
    let config = ExperimentConfig {
        n_pairs: args.n_pairs.or(file.n_pairs).unwrap_or(DEFAULT_N_PAIRS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        mode: args
            .mode
            .map(SamplingMode::from)
            .or(file.mode)
            .unwrap_or_default(),
        alpha: Angle::new(angle_input(alpha, deg)?)?,
        sweep: SweepGrid {
            beta_start: Angle::new(angle_input(beta_start, deg)?)?,
            beta_end,
            n_points: args.n_points.or(file.n_points).unwrap_or(DEFAULT_N_POINTS),
        },
    };
    config.validate()?;
    Ok(config)
}

pub fn cmd_sweep(
    args: &SweepArgs,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<()> {
    let config = sweep_config(args)?;
    if args.emit_events.is_some() && args.model != SweepModel::Lhv {
        return Err(Error::domain("--emit-events needs --model lhv"));
    }

    let curve = match args.model {
        SweepModel::Lhv => run_sweep(&config)?,
        SweepModel::LhvAnalytic => {
            CorrelationCurve::analytic(config.alpha, &config.sweep, lhv_correlation)?
        }
        SweepModel::QmAnalytic => {
            CorrelationCurve::analytic(config.alpha, &config.sweep, qm_correlation)?
        }
    };

    match &args.out_csv {
        Some(path) => write_curve_file(path, &curve)?,
        None => write_curve(&mut *out, &curve)?,
    }

    if let Some(path) = &args.out_svg {
        let label = match args.model {
            SweepModel::Lhv => "local hidden variables (Monte Carlo)",
            SweepModel::LhvAnalytic => "local hidden variables (exact)",
            SweepModel::QmAnalytic => "quantum (exact)",
        };
        let mut series = vec![PlotSeries {
            label,
            curve: &curve,
        }];
        let qm_curve;
        if args.compare_qm && args.model != SweepModel::QmAnalytic {
            qm_curve = CorrelationCurve::analytic(config.alpha, &config.sweep, qm_correlation)?;
            series.push(PlotSeries {
                label: "quantum (exact)",
                curve: &qm_curve,
            });
        }
        write_svg_file(path, &series)?;
    }

    if let Some(path) = &args.emit_events {
        emit_sweep_events(path, &config)?;
    }

    match fit_cosine_amplitude(&curve, config.alpha) {
        Ok(fit) => {
            let _ = writeln!(
                err,
                "fit: E(beta) = {:.6} - {:.6} cos 2(alpha - beta), rmse {:.3e}",
                fit.offset, fit.amplitude, fit.rmse
            );
        }
        Err(_) => {
            let _ = writeln!(err, "fit: skipped (too few distinct beta values)");
        }
    }
    Ok(())
}

fn emit_sweep_events(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let mut file = crate::io::create_file(path)?;
    let betas = config.sweep.betas();
    let shared = match config.mode {
        SamplingMode::ReplicateFigure1 => Some(samples_for_point(config, 0)?),
        SamplingMode::IndependentPerPoint => None,
    };
    for (i, &beta) in betas.iter().enumerate() {
        let owned;
        let samples = match &shared {
            Some(s) => s,
            None => {
                owned = samples_for_point(config, i)?;
                &owned
            }
        };
        let b = Angle::new(beta)?;
        let records: Vec<OutcomeRecord> = simulate_outcomes(samples, config.alpha, b)
            .into_iter()
            .map(|p| OutcomeRecord {
                alpha: config.alpha,
                beta: b,
                x: p.x,
                y: p.y,
            })
            .collect();
        write_events(&mut file, &records).map_err(|e| Error::io(path, e))?;
    }
    crate::io::finish(path, file)
}

/// One CHSH evaluation with optional per-term standard errors.
struct ChshReport {
    result: ChshResult,
    stderrs: Option<[f64; 4]>,
}

fn estimate_chsh(
    model: ChshModel,
    settings: ChshSettings,
    n_pairs: usize,
    seed: u64,
) -> Result<ChshReport> {
    let source = match model {
        ChshModel::Lhv => Some(AnalyticModel::Lhv),
        ChshModel::Qm => Some(AnalyticModel::Qm),
        ChshModel::LhvMc | ChshModel::QmMc => None,
    };
    if let Some(source) = source {
        return Ok(ChshReport {
            result: chsh_statistic(&source, settings),
            stderrs: None,
        });
    }
    let mut estimates: Vec<EstimatedCorrelation> = Vec::with_capacity(4);
    for (k, (x, y)) in settings.pairs().into_iter().enumerate() {
        let label = format!("chsh-{k}");
        let tally: OutcomeTally = if model == ChshModel::LhvMc {
            let samples = draw_samples(n_pairs, seed, &label)?;
            simulate_outcomes(&samples, x, y).into_iter().collect()
        } else {
            sample_joint_distribution(&qm_joint_distribution(x, y), n_pairs, seed, &label)?
                .into_iter()
                .collect()
        };
        estimates.push(tally.estimate()?);
    }
    let e = [0, 1, 2, 3].map(|k| Correlation::new(estimates[k].mean).expect("mean of ±1 values"));
    Ok(ChshReport {
        result: ChshResult::from_correlations(settings, e),
        stderrs: Some([0, 1, 2, 3].map(|k| estimates[k].stderr)),
    })
}

fn verdict(abs_s: f64, tolerance: f64) -> &'static str {
    if abs_s <= LHV_BOUND + tolerance {
        "satisfies |S| ≤ 2"
    } else {
        "violates |S| ≤ 2"
    }
}

fn write_chsh_report(
    out: &mut dyn Write,
    label: &str,
    report: &ChshReport,
    degrees: bool,
) -> std::io::Result<()> {
    let r = &report.result;
    let show = |a: Angle| {
        if degrees {
            format!("{:.4}°", a.degrees())
        } else {
            format!("{:.6}", a.radians())
        }
    };
    writeln!(out, "model: {label}")?;
    writeln!(
        out,
        "settings: a = {}, a' = {}, b = {}, b' = {}",
        show(r.settings.a),
        show(r.settings.a_prime),
        show(r.settings.b),
        show(r.settings.b_prime)
    )?;
    let names = ["E(a,b)  ", "E(a,b') ", "E(a',b) ", "E(a',b')"];
    for (k, (name, e)) in names.iter().zip(r.correlations()).enumerate() {
        match report.stderrs {
            Some(se) => writeln!(out, "{name} = {:+.6} ± {:.6}", e.value(), se[k])?,
            None => writeln!(out, "{name} = {:+.6}", e.value())?,
        }
    }
    writeln!(out, "S   = {:+.6}", r.s)?;
    match report.stderrs {
        Some(se) => {
            let s_err = se.iter().map(|v| v * v).sum::<f64>().sqrt();
            writeln!(out, "|S| = {:.6} ± {:.6}", r.abs_s(), s_err)?;
        }
        None => writeln!(out, "|S| = {:.6}", r.abs_s())?,
    }
    let tolerance = if report.stderrs.is_some() {
        0.0
    } else {
        ANALYTIC_TOLERANCE
    };
    writeln!(out, "verdict: {}", verdict(r.abs_s(), tolerance))
}

pub fn cmd_chsh(args: &ChshArgs, out: &mut dyn Write) -> Result<()> {
    let analytic = match args.model {
        ChshModel::Lhv => Some(AnalyticModel::Lhv),
        ChshModel::Qm => Some(AnalyticModel::Qm),
        _ => None,
    };
    let label = args
        .model
        .to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default();
    let report = if args.maximize {
        let source = analytic
            .ok_or_else(|| Error::domain("--maximize needs an analytic model (lhv or qm)"))?;
        let result = max_abs_chsh(&source, args.grid)?;
        writeln!(out, "grid: {} points per angle", args.grid).map_err(stdout_error)?;
        ChshReport {
            result,
            stderrs: None,
        }
    } else {
        let (Some(a), Some(a2), Some(b), Some(b2)) = (args.a, args.a_prime, args.b, args.b_prime)
        else {
            return Err(Error::domain(
                "need all four settings -a -A -b -B, or --maximize",
            ));
        };
        let deg = args.degrees;
        let settings = ChshSettings::new(
            angle_input(a, deg)?,
            angle_input(a2, deg)?,
            angle_input(b, deg)?,
            angle_input(b2, deg)?,
        )?;
        if args.n_pairs == 0 {
            return Err(Error::domain("--n-pairs must be at least 1"));
        }
        estimate_chsh(args.model, settings, args.n_pairs, args.seed)?
    };
    write_chsh_report(out, &label, &report, args.degrees).map_err(stdout_error)?;

    if let Some(n) = args.random {
        let source = analytic
            .ok_or_else(|| Error::domain("--random needs an analytic model (lhv or qm)"))?;
        let bound = verify_lhv_bound(&source, n, args.seed, ANALYTIC_TOLERANCE)?;
        writeln!(
            out,
            "random check: {} quadruples, max |S| = {:.6}, violations = {}",
            bound.n, bound.max_abs_s, bound.violations
        )
        .map_err(stdout_error)?;
    }
    Ok(())
}

pub fn cmd_analyze(
    args: &AnalyzeArgs,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<()> {
    let records = read_event_file(&args.input)?;
    let analysis = analyze_events(&records)?;
    let report_to: &mut dyn Write = match &args.out_csv {
        Some(path) => {
            let mut file = crate::io::create_file(path)?;
            write_analysis(&mut file, &analysis).map_err(|e| Error::io(path, e))?;
            crate::io::finish(path, file)?;
            out
        }
        None => {
            write_analysis(&mut *out, &analysis).map_err(stdout_error)?;
            err
        }
    };
    if let Some(result) = analysis.chsh {
        let stderrs = result.settings.pairs().map(|(x, y)| {
            analysis
                .groups
                .iter()
                .find(|g| g.alpha == x && g.beta == y)
                .map_or(0.0, |g| g.estimate.stderr)
        });
        let report = ChshReport {
            result,
            stderrs: Some(stderrs),
        };
        write_chsh_report(report_to, "empirical", &report, false).map_err(stdout_error)?;
        let best = result.max_abs_over_placements();
        writeln!(
            report_to,
            "max |S| over sign placements = {best:.6} ({})",
            verdict(best, 0.0)
        )
        .map_err(stdout_error)?;
    }
    Ok(())
}
