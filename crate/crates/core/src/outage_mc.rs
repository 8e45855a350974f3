//! Secrecy outage without channel knowledge at the transmitter.
//!
//! The transmitter fixes a source-channel rate `R̄`, a confidential share
//! `R̄s'` of the source entropy and a time-sharing target `α`. A channel
//! draw is in outage unless some covariance `K` supports
//! `rs(K) ≥ R̄s' R̄`, `rp(K) ≥ (H(S) - R̄s') R̄` and `ᾱ(K) ≥ α`.
//!
//! All three conditions depend on `K` only through Bob's and Eve's
//! log-det sums `(B, E)`, and the diagonal family reaches every reachable
//! pair, so the search runs over `E = c` with `B` in its exact range on
//! that slice:
//!
//! ```text
//! B ≥ c + R̄s                       (when R̄s > 0)
//! B ≤ R_p* - R̄p
//! B ≤ R_p* - (ΣU - c)/(1 - α)      (when α > 0)
//! ```
//!
//! where `ΣU = log2 det(I + SNRᵉ Φ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mmf_model::{sample_realization, ChannelRealization, MmfParams, SeededRng};
use crate::mmf_regions::{max_rs_diag, refine_max, rp_star, BobRange, CovSpectrum, EveSlice};
use crate::{Error, Result};

/// Slack on the feasibility margin, in bits.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

const SCAN_POINTS: usize = 64;
const REFINE_POINTS: usize = 8;

/// Transmitter's fixed choice and Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    /// Confidential source rate, bits per source symbol.
    pub rs_prime: f64,
    /// Source symbols per channel use.
    pub rate: f64,
    /// Required `ᾱ`.
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
}

impl OutageQuery {
    pub fn new(rs_prime: f64, rate: f64, alpha: f64, trials: u64, seed: u64) -> Result<Self> {
        let q = Self {
            rs_prime,
            rate,
            alpha,
            trials,
            seed,
        };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rs_prime >= 0.0 && self.rs_prime.is_finite()) {
            return Err(Error::Domain {
                name: "rs_prime",
                value: self.rs_prime,
                domain: "[0, H(S)]",
            });
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Domain {
                name: "rate",
                value: self.rate,
                domain: "(0, inf)",
            });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Domain {
                name: "alpha",
                value: self.alpha,
                domain: "[0, 1]",
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be positive".into()));
        }
        Ok(())
    }

    fn validate_for(&self, source_entropy: f64) -> Result<()> {
        self.validate()?;
        if !(source_entropy > 0.0) {
            return Err(Error::Degenerate(format!(
                "source entropy {source_entropy} must be positive"
            )));
        }
        if self.rs_prime > source_entropy {
            return Err(Error::Domain {
                name: "rs_prime",
                value: self.rs_prime,
                domain: "[0, H(S)]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub p_out: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    pub trials_used: u64,
}

impl OutageEstimate {
    fn from_counts(successes: u64, trials: u64) -> Self {
        let p_out = 1.0 - successes as f64 / trials as f64;
        Self {
            p_out,
            stderr: (p_out * (1.0 - p_out) / trials as f64).sqrt(),
            trials_used: trials,
        }
    }
}

/// Whether the realization supports the query.
pub fn trial_success(
    params: &MmfParams,
    realization: &ChannelRealization,
    query: &OutageQuery,
    source_entropy: f64,
) -> Result<bool> {
    Ok(trial_witness(params, realization, query, source_entropy)?.is_some())
}

/// A diagonal covariance meeting all three targets, if one exists.
pub fn trial_witness(
    params: &MmfParams,
    realization: &ChannelRealization,
    query: &OutageQuery,
    source_entropy: f64,
) -> Result<Option<CovSpectrum>> {
    query.validate_for(source_entropy)?;
    let rs_target = query.rs_prime * query.rate;
    let rp_target = (source_entropy - query.rs_prime) * query.rate;
    let rp_max = rp_star(params);
    if rs_target + rp_target > rp_max + FEASIBILITY_TOLERANCE {
        return Ok(None);
    }
    // ᾱ = 1 needs γ̄ = 0, which forces K = I and then β̄ = 0 as well.
    if query.alpha >= 1.0 {
        return Ok(None);
    }
    let (_, rs_diag) = max_rs_diag(params, realization.mdl())?;
    if rs_target > rs_diag + FEASIBILITY_TOLERANCE {
        return Ok(None);
    }

    let slice = EveSlice::new(params, realization.mdl());
    let total = slice.eve_total;
    let bounds = |c: f64| -> Option<(f64, f64, BobRange)> {
        let range = slice.bob_range(c)?;
        let mut lower = range.lo;
        if rs_target > 0.0 {
            lower = lower.max(c + rs_target);
        }
        let mut upper = range.hi.min(rp_max - rp_target);
        if query.alpha > 0.0 {
            // keep β̄ strictly positive so ᾱ is defined
            upper = upper.min(rp_max - (total - c) / (1.0 - query.alpha) - FEASIBILITY_TOLERANCE);
        }
        Some((lower, upper, range))
    };
    let margin = |c: f64| bounds(c).map_or(f64::NEG_INFINITY, |(lo, hi, _)| hi - lo);
    let witness = |c: f64| -> Option<CovSpectrum> {
        let (lo, hi, range) = bounds(c)?;
        (hi - lo >= -FEASIBILITY_TOLERANCE).then(|| {
            let b = (0.5 * (lo + hi)).clamp(range.lo, range.hi);
            slice.spectrum_at(&range, b)
        })
    };

    let step = total / SCAN_POINTS as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=SCAN_POINTS {
        let c = step * i as f64;
        let m = margin(c);
        if m >= -FEASIBILITY_TOLERANCE {
            return Ok(witness(c));
        }
        if m > best.0 {
            best = (m, c);
        }
    }
    let (a, b) = ((best.1 - step).max(0.0), (best.1 + step).min(total));
    let c = refine_max(a, b, REFINE_POINTS, margin);
    Ok(witness(c))
}

/// Monte Carlo outage probability over `query.trials` independent draws.
///
/// Trial `i` samples its channel from `SeededRng::new(query.seed, i)`, so the
/// estimate is independent of thread count and scheduling, and queries that
/// share a seed see the same channels.
pub fn estimate_outage(params: &MmfParams, query: &OutageQuery, source_entropy: f64) -> Result<OutageEstimate> {
    query.validate_for(source_entropy)?;
    let successes = (0..query.trials)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let realization = sample_realization(params, &mut SeededRng::new(query.seed, i))?;
            Ok(u64::from(trial_success(params, &realization, query, source_entropy)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(OutageEstimate::from_counts(successes, query.trials))
}
