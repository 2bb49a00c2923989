//! Bell-CHSH analysis.
//!
//! `S = E(a, b) − E(a, b′) + E(a′, b) + E(a′, b′)`. Any local hidden
//! variable model obeys `|S| ≤ 2`; quantum correlations reach `2√2`.
//! A correlation of the form `−K·cos 2(α − β)` has `max |S| = 2√2·K`, so
//! `|S| ≤ 2` is the same statement as `K ≤ 1/√2`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{lhv_correlation, qm_correlation, Angle, Correlation};
use crate::montecarlo::CorrelationCurve;
use crate::rng::substream;

/// The Bell-CHSH bound for local hidden variable models.
pub const LHV_BOUND: f64 = 2.0;

/// Violation slack for exactly evaluated sources.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_GRID: usize = 64;

/// Anything that yields `E(α, β)` for a pair of settings.
pub trait CorrelationSource: Sync {
    fn correlation(&self, alpha: Angle, beta: Angle) -> Correlation;
}

impl<F> CorrelationSource for F
where
    F: Fn(Angle, Angle) -> Correlation + Sync,
{
    fn correlation(&self, alpha: Angle, beta: Angle) -> Correlation {
        self(alpha, beta)
    }
}

/// Closed-form correlation of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticModel {
    /// `−½·cos 2(α − β)`
    Lhv,
    /// `−cos 2(α − β)`
    Qm,
}

impl CorrelationSource for AnalyticModel {
    fn correlation(&self, alpha: Angle, beta: Angle) -> Correlation {
        match self {
            AnalyticModel::Lhv => lhv_correlation(alpha, beta),
            AnalyticModel::Qm => qm_correlation(alpha, beta),
        }
    }
}

/// Synthetic source `E = −K·cos 2(α − β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineSource {
    amplitude: f64,
}

impl CosineSource {
    pub fn new(amplitude: f64) -> Result<Self> {
        if amplitude.is_finite() && amplitude.abs() <= 1.0 {
            Ok(CosineSource { amplitude })
        } else {
            Err(Error::domain(format!(
                "cosine amplitude {amplitude} outside [-1, 1]"
            )))
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

impl CorrelationSource for CosineSource {
    fn correlation(&self, alpha: Angle, beta: Angle) -> Correlation {
        let e = -self.amplitude * (2.0 * (alpha.radians() - beta.radians())).cos();
        Correlation::from_bounded(e)
    }
}

/// Two settings per wing: `a`, `a′` for Alice and `b`, `b′` for Bob.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChshSettings {
    pub a: Angle,
    pub a_prime: Angle,
    pub b: Angle,
    pub b_prime: Angle,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        Ok(ChshSettings {
            a: Angle::new(a)?,
            a_prime: Angle::new(a_prime)?,
            b: Angle::new(b)?,
            b_prime: Angle::new(b_prime)?,
        })
    }

    /// `(0, π/4, π/8, 3π/8)`, where the quantum correlation reaches `|S| = 2√2`.
    pub fn optimal() -> Self {
        Self::new(0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0).expect("finite constants")
    }

    /// Setting pairs in the order `(a, b)`, `(a, b′)`, `(a′, b)`, `(a′, b′)`.
    pub fn pairs(&self) -> [(Angle, Angle); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub settings: ChshSettings,
    pub e_ab: Correlation,
    pub e_ab_prime: Correlation,
    pub e_a_prime_b: Correlation,
    pub e_a_prime_b_prime: Correlation,
    pub s: f64,
}

impl ChshResult {
    /// Combines correlations given in [`ChshSettings::pairs`] order.
    pub fn from_correlations(settings: ChshSettings, e: [Correlation; 4]) -> Self {
        let s = e[0].value() - e[1].value() + e[2].value() + e[3].value();
        ChshResult {
            settings,
            e_ab: e[0],
            e_ab_prime: e[1],
            e_a_prime_b: e[2],
            e_a_prime_b_prime: e[3],
            s,
        }
    }

    pub fn correlations(&self) -> [Correlation; 4] {
        [
            self.e_ab,
            self.e_ab_prime,
            self.e_a_prime_b,
            self.e_a_prime_b_prime,
        ]
    }

    pub fn abs_s(&self) -> f64 {
        self.s.abs()
    }

    /// `S` with the single minus sign on each of the four terms in turn.
    /// Index 1 is the conventional [`ChshResult::s`].
    pub fn sign_placements(&self) -> [f64; 4] {
        let e = self.correlations().map(Correlation::value);
        let total: f64 = e.iter().sum();
        e.map(|term| total - 2.0 * term)
    }

    /// Largest `|S|` over the four sign placements.
    pub fn max_abs_over_placements(&self) -> f64 {
        self.sign_placements()
            .iter()
            .fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub fn satisfies_bound(&self, tolerance: f64) -> bool {
        self.abs_s() <= LHV_BOUND + tolerance
    }
}

pub fn chsh_statistic<S: CorrelationSource + ?Sized>(
    source: &S,
    settings: ChshSettings,
) -> ChshResult {
    let e = settings.pairs().map(|(x, y)| source.correlation(x, y));
    ChshResult::from_correlations(settings, e)
}

/// `|S|` values closer than this count as ties in the grid search, so
/// rounding noise between equivalent quadruples cannot pick the winner.
const TIE_RESOLUTION: f64 = 1e-12;

/// Candidate during the grid search: quantized `|S|` and the index quadruple.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: i64,
    idx: [usize; 4],
}

impl Candidate {
    fn new(abs_s: f64, idx: [usize; 4]) -> Self {
        Candidate {
            key: (abs_s / TIE_RESOLUTION).round() as i64,
            idx,
        }
    }

    /// Larger `|S|` wins; ties go to the lexicographically smaller quadruple.
    fn better(self, other: Candidate) -> Candidate {
        if other.key > self.key || (other.key == self.key && other.idx < self.idx) {
            other
        } else {
            self
        }
    }
}

/// Exhaustive search for the largest `|S|` with every setting on the grid
/// `{0, π/g, …, (g−1)π/g}`.
///
/// The source is evaluated once per `(α, β)` grid pair; the quadruple scan
/// then reads from that table. Ties (to within 1e-12) resolve to the lexicographically
/// smallest `(a, a′, b, b′)`, independent of how the work is split across
/// threads.
pub fn max_abs_chsh<S: CorrelationSource + ?Sized>(
    source: &S,
    grid_points_per_angle: usize,
) -> Result<ChshResult> {
    let g = grid_points_per_angle;
    if g < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 points per angle, got {g}"
        )));
    }
    let angles: Vec<Angle> = (0..g)
        .map(|i| Angle::new(i as f64 * PI / g as f64))
        .collect::<Result<_>>()?;
    // table[i * g + j] = E(angles[i], angles[j])
    let table: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map(|k| source.correlation(angles[k / g], angles[k % g]).value())
        .collect();
    let e = |i: usize, j: usize| table[i * g + j];

    let best = (0..g)
        .into_par_iter()
        .map(|a| {
            let mut best = Candidate {
                key: -1,
                idx: [usize::MAX; 4],
            };
            for a2 in 0..g {
                for b in 0..g {
                    let head = e(a, b) + e(a2, b);
                    for b2 in 0..g {
                        let s = head - e(a, b2) + e(a2, b2);
                        let cand = Candidate::new(s.abs(), [a, a2, b, b2]);
                        // Iteration order is lexicographic, so strict > keeps
                        // the first (smallest) quadruple among ties.
                        if cand.key > best.key {
                            best = cand;
                        }
                    }
                }
            }
            best
        })
        .reduce_with(Candidate::better)
        .expect("g >= 2");

    let [a, a2, b, b2] = best.idx;
    let settings = ChshSettings {
        a: angles[a],
        a_prime: angles[a2],
        b: angles[b],
        b_prime: angles[b2],
    };
    Ok(chsh_statistic(source, settings))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub max_abs_s: f64,
    pub violations: usize,
    pub tolerance: f64,
    /// Quadruple attaining `max_abs_s`.
    pub worst: Option<ChshSettings>,
}

/// Evaluates `|S|` at `n` random setting quadruples (each angle uniform on
/// `[0, π)`) and counts those above `2 + tolerance`. A violation is a
/// finding, not an error.
pub fn verify_lhv_bound<S: CorrelationSource + ?Sized>(
    source: &S,
    n_random_quadruples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<BoundReport> {
    if n_random_quadruples == 0 {
        return Err(Error::domain("need at least one quadruple"));
    }
    let mut rng = substream(seed, "chsh/quadruples");
    let mut report = BoundReport {
        n: n_random_quadruples,
        max_abs_s: 0.0,
        violations: 0,
        tolerance,
        worst: None,
    };
    for _ in 0..n_random_quadruples {
        let mut draw = || Angle::new(rng.gen_range(0.0..PI));
        let settings = ChshSettings {
            a: draw()?,
            a_prime: draw()?,
            b: draw()?,
            b_prime: draw()?,
        };
        let result = chsh_statistic(source, settings);
        if !result.satisfies_bound(tolerance) {
            report.violations += 1;
        }
        if report.worst.is_none() || result.abs_s() > report.max_abs_s {
            report.max_abs_s = result.abs_s();
            report.worst = Some(settings);
        }
    }
    Ok(report)
}

/// Least-squares fit of `E(β) ≈ offset − amplitude·cos 2(α − β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeFit {
    /// Positive for a negative cosine; a negative value means the data
    /// follow `+cos 2(α − β)`.
    pub amplitude: f64,
    pub offset: f64,
    pub rmse: f64,
}

/// Fits amplitude and offset with the phase fixed by the model's
/// `cos 2(α − β)` dependence.
///
/// Solves the two-parameter linear least-squares problem directly. On a
/// uniform grid covering whole periods, the regressor is orthogonal to the
/// constant and this reduces to the two Fourier projections; solving the
/// normal equations keeps the fit exact on grids that repeat an endpoint.
pub fn fit_cosine_amplitude(curve: &CorrelationCurve, alpha: Angle) -> Result<AmplitudeFit> {
    let mut distinct: Vec<u64> = curve.betas().map(f64::to_bits).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::domain(format!(
            "amplitude fit needs at least 3 distinct beta values, got {}",
            distinct.len()
        )));
    }
    if curve
        .points
        .iter()
        .any(|p| !p.beta.is_finite() || !p.corr.is_finite())
    {
        return Err(Error::domain("curve contains non-finite values"));
    }

    let n = curve.len() as f64;
    let basis: Vec<f64> = curve
        .betas()
        .map(|beta| (2.0 * (alpha.radians() - beta)).cos())
        .collect();
    let c_mean = basis.iter().sum::<f64>() / n;
    let e_mean = curve.correlations().sum::<f64>() / n;
    let (sxx, sxy) =
        basis
            .iter()
            .zip(curve.correlations())
            .fold((0.0, 0.0), |(sxx, sxy), (&c, e)| {
                let dc = c - c_mean;
                (sxx + dc * dc, sxy + dc * (e - e_mean))
            });
    if sxx <= 1e-12 * n {
        return Err(Error::domain(
            "beta values do not resolve the cos 2(alpha - beta) term",
        ));
    }
    let amplitude = -sxy / sxx;
    let offset = e_mean + amplitude * c_mean;
    let sse: f64 = basis
        .iter()
        .zip(curve.correlations())
        .map(|(&c, e)| {
            let r = e - (offset - amplitude * c);
            r * r
        })
        .sum();
    Ok(AmplitudeFit {
        amplitude,
        offset,
        rmse: (sse / n).sqrt(),
    })
}
