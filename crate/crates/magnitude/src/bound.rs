//! Generalisation-bound evaluator and the effective-number-of-models
//! cross-section of a magnitude curve.

use crate::cloud::{pairwise_distances, scale_distances, PointCloud};
use crate::error::{Error, Result};
use crate::magnitude::{magnitude, similarity, MagnitudeCurve};

/// Inputs of the dimension-based generalisation bound. All logarithms are
/// natural.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    /// Intrinsic-dimension estimate of the trajectory (>= 0).
    pub dim: f64,
    /// Training-set size.
    pub n: u64,
    /// Uniform bound C on the loss.
    pub loss_bound: f64,
    /// Lipschitz constant K of the loss in the weights.
    pub lipschitz: f64,
    /// Mixing constant M (>= 1) quantifying loss/trajectory dependence.
    pub mixing: f64,
    /// Failure probability in (0, 1).
    pub gamma: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInputs(msg));
        if !(self.dim >= 0.0) || !self.dim.is_finite() {
            return fail(format!("dim must be finite and >= 0, got {}", self.dim));
        }
        if self.n < 1 {
            return fail("n must be >= 1".into());
        }
        if !(self.loss_bound > 0.0) || !self.loss_bound.is_finite() {
            return fail(format!("C must be finite and > 0, got {}", self.loss_bound));
        }
        if !(self.lipschitz > 0.0) || !self.lipschitz.is_finite() {
            return fail(format!("K must be finite and > 0, got {}", self.lipschitz));
        }
        if !(self.mixing >= 1.0) || !self.mixing.is_finite() {
            return fail(format!("M must be finite and >= 1, got {}", self.mixing));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        Ok(())
    }

    /// True when `n K^2 <= 1`, where the squared-log term stops being
    /// monotone in its argument; the bound is still evaluated as written.
    pub fn log_term_degenerate(&self) -> bool {
        (self.n as f64).ln() + 2.0 * self.lipschitz.ln() <= 0.0
    }
}

/// `2C sqrt((dim + 1) ln^2(n K^2) / n + ln(7M / gamma) / n)`.
///
/// The guarantee behind the formula is asymptotic ("n sufficiently
/// large"); the evaluator computes it verbatim for any valid inputs.
pub fn generalisation_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let n = inputs.n as f64;
    // ln(n K^2) via the sum form, immune to overflow in n * K^2.
    let log_nk2 = n.ln() + 2.0 * inputs.lipschitz.ln();
    let log_m_term = (7.0 * inputs.mixing / inputs.gamma).ln();
    let inside = (inputs.dim + 1.0) * log_nk2 * log_nk2 / n + log_m_term / n;
    Ok(2.0 * inputs.loss_bound * inside.sqrt())
}

/// Magnitude of the curve's underlying space at scale `t`: the sampled
/// grid point nearest to `t` in log-space. `t` must lie inside the
/// sampled range.
pub fn effective_models(curve: &MagnitudeCurve, t: f64) -> Result<f64> {
    curve.magnitude_near(t)
}

/// Re-solves the magnitude exactly at scale `t` instead of snapping to
/// the curve grid.
pub fn effective_models_exact(cloud: &PointCloud, t: f64) -> Result<f64> {
    let dm = pairwise_distances(cloud)?;
    let scaled = scale_distances(&dm, t)?;
    Ok(magnitude(&similarity(&scaled))?.value)
}
