//! Simulation and analysis of a local hidden variable (LHV) model of a
//! two-photon polarization Bell experiment.
//!
//! Photon A carries a hidden polarization `θ` drawn uniformly on `[0, π)`,
//! photon B the orthogonal polarization `θ + π/2`. Each photon passes its
//! polarizer with the Malus-law probability `cos²` of the relative angle.
//! The model yields the correlation `E(α, β) = −½·cos 2(α − β)`, half the
//! amplitude of the quantum prediction `−cos 2(α − β)`, and therefore never
//! violates the Bell-CHSH inequality `|S| ≤ 2`.
//!
//! Modules:
//! - [`model`]: closed-form detection probabilities, joint distributions and
//!   correlations for both the LHV model and the quantum reference, plus a
//!   quadrature oracle for the LHV joint probability.
//! - [`montecarlo`]: seeded sampling of photon pairs, outcome decisions,
//!   correlation estimates and β sweeps.
//! - [`chsh`]: the CHSH statistic, grid maximization, randomized bound checks
//!   and cosine amplitude fitting.
//! - [`io`]: curve CSV files, outcome event files and SVG plots.

pub mod chsh;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Angle, Correlation, JointDistribution};
