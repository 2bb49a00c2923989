//! Monte Carlo simulation of the photon-pair experiment.
//!
//! Each pair gets a hidden polarization `θ ~ U[0, π)` and two independent
//! unit uniforms, one per wing. A wing reports `+1` when its uniform is
//! strictly below the Malus-law detection probability, `−1` otherwise.
//!
//! [`run_sweep`] scans Bob's setting over a grid at fixed `α`. In
//! [`SamplingMode::ReplicateFigure1`] one set of pairs is drawn up front and
//! reused at every grid point, which makes neighbouring estimates strongly
//! dependent and the curve smooth. [`SamplingMode::IndependentPerPoint`]
//! draws a fresh substream per point.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lhv_detect_prob_a, lhv_detect_prob_b, Angle, JointDistribution};
use crate::rng::substream;

pub const DEFAULT_N_PAIRS: usize = 100_000;
pub const DEFAULT_N_POINTS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;

/// Label of the shared sample set in replicate mode.
pub const MAIN_STREAM: &str = "main";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// One sample set, drawn once and reused at every sweep point.
    #[default]
    #[serde(alias = "replicate")]
    ReplicateFigure1,
    /// Sweep point `i` draws its own samples from substream `point-{i}`.
    #[serde(alias = "independent")]
    IndependentPerPoint,
}

/// Evenly spaced β values from `beta_start` to `beta_end`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub beta_start: Angle,
    /// Raw radians; may equal π so the grid closes the half-circle.
    pub beta_end: f64,
    pub n_points: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            beta_start: Angle::ZERO,
            beta_end: PI,
            n_points: DEFAULT_N_POINTS,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::domain("sweep needs at least one point"));
        }
        if !self.beta_end.is_finite() {
            return Err(Error::NonFiniteAngle(self.beta_end));
        }
        if self.n_points > 1 && self.beta_end <= self.beta_start.radians() {
            return Err(Error::domain(format!(
                "beta_end {} must exceed beta_start {}",
                self.beta_end, self.beta_start
            )));
        }
        Ok(())
    }

    /// Grid values, computed as `start + i·step` with the last one pinned to
    /// `beta_end`.
    pub fn betas(&self) -> Vec<f64> {
        let start = self.beta_start.radians();
        match self.n_points {
            0 => Vec::new(),
            1 => vec![start],
            n => {
                let step = (self.beta_end - start) / (n - 1) as f64;
                let mut betas: Vec<f64> = (0..n).map(|i| start + i as f64 * step).collect();
                betas[n - 1] = self.beta_end;
                betas
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub n_pairs: usize,
    pub seed: u64,
    pub mode: SamplingMode,
    pub alpha: Angle,
    pub sweep: SweepGrid,
}

impl Default for ExperimentConfig {
    /// 100 000 pairs, α = 0, 1000 points over `[0, π]`, replicated samples.
    fn default() -> Self {
        ExperimentConfig {
            n_pairs: DEFAULT_N_PAIRS,
            seed: DEFAULT_SEED,
            mode: SamplingMode::ReplicateFigure1,
            alpha: Angle::ZERO,
            sweep: SweepGrid::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::domain("n_pairs must be at least 1"));
        }
        self.sweep.validate()
    }
}

/// Hidden polarization and per-wing uniforms for one photon pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub theta: Angle,
    pub u_a: f64,
    pub u_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// `+1` iff `u < p`. Equality counts as no detection.
    fn decide(u: f64, p: f64) -> Self {
        if u < p {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// Alice's outcome `x` and Bob's outcome `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomePair {
    pub x: Outcome,
    pub y: Outcome,
}

impl OutcomePair {
    pub fn product(self) -> i32 {
        self.x.value() * self.y.value()
    }
}

/// Running counts over a batch of outcome pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeTally {
    pub n: u64,
    pub plus_a: u64,
    pub plus_b: u64,
    /// Sum of `x·y`.
    pub product_sum: i64,
}

impl OutcomeTally {
    pub fn push(&mut self, pair: OutcomePair) {
        self.n += 1;
        self.plus_a += u64::from(pair.x == Outcome::Plus);
        self.plus_b += u64::from(pair.y == Outcome::Plus);
        self.product_sum += i64::from(pair.product());
    }

    pub fn freq_plus_a(&self) -> f64 {
        self.plus_a as f64 / self.n as f64
    }

    pub fn freq_plus_b(&self) -> f64 {
        self.plus_b as f64 / self.n as f64
    }

    pub fn estimate(&self) -> Result<EstimatedCorrelation> {
        EstimatedCorrelation::from_tally(self)
    }
}

impl FromIterator<OutcomePair> for OutcomeTally {
    fn from_iter<I: IntoIterator<Item = OutcomePair>>(iter: I) -> Self {
        let mut tally = OutcomeTally::default();
        for pair in iter {
            tally.push(pair);
        }
        tally
    }
}

/// Sample mean of `x·y` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedCorrelation {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator) over `√n`; 0 when n = 1.
    pub stderr: f64,
    pub n: u64,
}

impl EstimatedCorrelation {
    pub fn from_tally(tally: &OutcomeTally) -> Result<Self> {
        if tally.n == 0 {
            return Err(Error::domain(
                "cannot estimate a correlation from zero samples",
            ));
        }
        let n = tally.n;
        let s = tally.product_sum;
        let mean = s as f64 / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            // Every product is ±1, so Σ(z − z̄)² = n − s²/n exactly.
            let n = i128::from(n);
            let s = i128::from(s);
            let num = (n * n - s * s) as f64;
            let den = (n * n * (n - 1)) as f64;
            (num / den).sqrt()
        };
        Ok(EstimatedCorrelation { mean, stderr, n })
    }
}

/// One row of a correlation curve. Analytic curves carry `stderr = 0`, `n = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub beta: f64,
    pub corr: f64,
    pub stderr: f64,
    pub n: u64,
}

impl CurvePoint {
    pub fn estimated(beta: f64, est: EstimatedCorrelation) -> Self {
        CurvePoint {
            beta,
            corr: est.mean,
            stderr: est.stderr,
            n: est.n,
        }
    }
}

/// Correlation as a function of Bob's setting at a fixed Alice setting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationCurve {
    pub points: Vec<CurvePoint>,
}

impl CorrelationCurve {
    /// Exact curve of `source` over `grid`.
    pub fn analytic<F>(alpha: Angle, grid: &SweepGrid, source: F) -> Result<Self>
    where
        F: Fn(Angle, Angle) -> crate::model::Correlation,
    {
        grid.validate()?;
        let points = grid
            .betas()
            .into_iter()
            .map(|beta| {
                let corr = source(alpha, Angle::new(beta)?).value();
                Ok(CurvePoint {
                    beta,
                    corr,
                    stderr: 0.0,
                    n: 0,
                })
            })
            .collect::<Result<_>>()?;
        Ok(CorrelationCurve { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.beta)
    }

    pub fn correlations(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.corr)
    }
}

/// `n` pairs from the substreams `{label}/theta`, `{label}/a`, `{label}/b`.
///
/// Each component has its own stream, so a shorter draw is a prefix of a
/// longer one with the same seed and label.
pub fn draw_samples(n: usize, seed: u64, stream_label: &str) -> Result<Vec<PairSample>> {
    if n == 0 {
        return Err(Error::domain("must draw at least one sample"));
    }
    let mut theta_rng = substream(seed, &format!("{stream_label}/theta"));
    let mut a_rng = substream(seed, &format!("{stream_label}/a"));
    let mut b_rng = substream(seed, &format!("{stream_label}/b"));
    (0..n)
        .map(|_| {
            Ok(PairSample {
                theta: Angle::new(theta_rng.gen_range(0.0..PI))?,
                u_a: a_rng.gen(),
                u_b: b_rng.gen(),
            })
        })
        .collect()
}

pub fn simulate_pair(s: &PairSample, alpha: Angle, beta: Angle) -> OutcomePair {
    OutcomePair {
        x: Outcome::decide(s.u_a, lhv_detect_prob_a(s.theta, alpha)),
        y: Outcome::decide(s.u_b, lhv_detect_prob_b(s.theta, beta)),
    }
}

pub fn simulate_outcomes(samples: &[PairSample], alpha: Angle, beta: Angle) -> Vec<OutcomePair> {
    samples
        .iter()
        .map(|s| simulate_pair(s, alpha, beta))
        .collect()
}

pub fn tally(samples: &[PairSample], alpha: Angle, beta: Angle) -> OutcomeTally {
    samples
        .iter()
        .map(|s| simulate_pair(s, alpha, beta))
        .collect()
}

pub fn estimate_correlation(
    samples: &[PairSample],
    alpha: Angle,
    beta: Angle,
) -> Result<EstimatedCorrelation> {
    if samples.is_empty() {
        return Err(Error::domain("sample sequence is empty"));
    }
    tally(samples, alpha, beta).estimate()
}

/// Scans β over the configured grid. The result depends only on `config`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<CorrelationCurve> {
    config.validate()?;
    let betas = config.sweep.betas();
    let alpha = config.alpha;

    let points = match config.mode {
        SamplingMode::ReplicateFigure1 => {
            let samples = draw_samples(config.n_pairs, config.seed, MAIN_STREAM)?;
            // Alice's outcomes do not depend on β; decide them once.
            let xs: Vec<Outcome> = samples
                .iter()
                .map(|s| Outcome::decide(s.u_a, lhv_detect_prob_a(s.theta, alpha)))
                .collect();
            betas
                .par_iter()
                .map(|&beta| {
                    let b = Angle::new(beta)?;
                    let tally: OutcomeTally = samples
                        .iter()
                        .zip(&xs)
                        .map(|(s, &x)| OutcomePair {
                            x,
                            y: Outcome::decide(s.u_b, lhv_detect_prob_b(s.theta, b)),
                        })
                        .collect();
                    Ok(CurvePoint::estimated(beta, tally.estimate()?))
                })
                .collect::<Result<Vec<_>>>()?
        }
        SamplingMode::IndependentPerPoint => betas
            .par_iter()
            .enumerate()
            .map(|(i, &beta)| {
                let samples = draw_samples(config.n_pairs, config.seed, &point_label(i))?;
                let est = estimate_correlation(&samples, alpha, Angle::new(beta)?)?;
                Ok(CurvePoint::estimated(beta, est))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(CorrelationCurve { points })
}

pub fn point_label(i: usize) -> String {
    format!("point-{i}")
}

/// The pair samples that [`run_sweep`] uses at grid point `i`.
pub fn samples_for_point(config: &ExperimentConfig, i: usize) -> Result<Vec<PairSample>> {
    match config.mode {
        SamplingMode::ReplicateFigure1 => draw_samples(config.n_pairs, config.seed, MAIN_STREAM),
        SamplingMode::IndependentPerPoint => {
            draw_samples(config.n_pairs, config.seed, &point_label(i))
        }
    }
}

/// Draws `n` outcome pairs directly from a joint distribution, one unit
/// uniform per pair from substream `{label}/joint`.
pub fn sample_joint_distribution(
    dist: &JointDistribution,
    n: usize,
    seed: u64,
    stream_label: &str,
) -> Result<Vec<OutcomePair>> {
    if n == 0 {
        return Err(Error::domain("must draw at least one sample"));
    }
    let cells = [
        (Outcome::Plus, Outcome::Plus),
        (Outcome::Plus, Outcome::Minus),
        (Outcome::Minus, Outcome::Plus),
        (Outcome::Minus, Outcome::Minus),
    ];
    let probs = dist.as_array();
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (dist.total() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "not a probability distribution: {dist:?}"
        )));
    }
    // Rounding can leave u above the running sum; fall back to the last
    // cell that has positive probability.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    let mut rng = substream(seed, &format!("{stream_label}/joint"));
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = cells[last];
            for (cell, p) in cells.iter().zip(probs) {
                acc += p;
                if u < acc {
                    pick = *cell;
                    break;
                }
            }
            OutcomePair {
                x: pick.0,
                y: pick.1,
            }
        })
        .collect())
}
