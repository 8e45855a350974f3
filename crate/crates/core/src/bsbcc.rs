//! Achievable distortion-rate curves for a Bernoulli source sent over a
//! binary symmetric broadcast channel, with Hamming distortion at the
//! eavesdropper.
//!
//! Two information models are covered. Without causal disclosure the
//! eavesdropper is held at the maximum distortion `p` for every rate below
//! the main-channel limit `(1 - h(p1)) / h(p)`. With causal disclosure the
//! distortion stays at `p` up to the secrecy kink `(h(p2) - h(p1)) / h(p)`
//! and then decays along a family indexed by the test-channel crossover `γ`.
//!
//! The channel is treated as physically degraded: `V → X` is a BSC(γ) and
//! `W = X`, so every quantity below is a scalar function of `γ`.

use serde::Serialize;

use crate::info_math::{bisect_bracket, conv, d_cap, h};
use crate::{Error, Real, Result};

/// Bracket width at which [`solve_gamma`] stops.
pub const GAMMA_TOL: f64 = 1e-12;

/// Relative slack allowed when a rate is compared against `rate_max`.
const RATE_EDGE_REL: f64 = 1e-12;

/// Source bias and the two crossover probabilities of a degraded binary
/// wiretap pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsbccParams<T> {
    p: T,
    p1: T,
    p2: T,
}

impl<T: Real> BsbccParams<T> {
    /// Requires `0 < p <= 0.5` and `0 <= p1 < p2 < 0.5`.
    pub fn new(p: T, p1: T, p2: T) -> Result<Self> {
        let half = T::lit(0.5);
        if !(p > T::zero() && p <= half) {
            return Err(Error::InvalidParams(format!("p = {p} must lie in (0, 0.5]")));
        }
        if !(p1 >= T::zero() && p1 < p2 && p2 < half) {
            return Err(Error::InvalidParams(format!(
                "crossovers must satisfy 0 <= p1 < p2 < 0.5, got p1 = {p1}, p2 = {p2}"
            )));
        }
        Ok(Self { p, p1, p2 })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn p1(&self) -> T {
        self.p1
    }

    pub fn p2(&self) -> T {
        self.p2
    }

    /// Maximum distortion `Δ = min(p, 1 - p)` of the Bernoulli source.
    pub fn delta(&self) -> T {
        self.p.min(T::one() - self.p)
    }

    fn source_entropy(&self) -> Result<T> {
        let hp = h(self.p);
        if hp > T::zero() {
            Ok(hp)
        } else {
            Err(Error::Degenerate(format!("source entropy h({}) is zero", self.p)))
        }
    }
}

/// A (rate, distortion) pair; rate in source symbols per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint<T> {
    pub rate: T,
    pub distortion: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Maximum distortion is held.
    Plateau,
    /// Rate is traded against eavesdropper distortion.
    Tradeoff,
    /// Above the reliable-transmission limit.
    Infeasible,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Plateau => "plateau",
            Regime::Tradeoff => "tradeoff",
            Regime::Infeasible => "infeasible",
        }
    }
}

/// One evaluated grid rate. Infeasible rates keep their place in the curve
/// with no distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub rate: T,
    pub distortion: Option<T>,
    pub regime: Regime,
    pub gamma: Option<T>,
    pub alpha_prime: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve<T> {
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Real> RdCurve<T> {
    pub fn feasible(&self) -> impl Iterator<Item = RdPoint<T>> + '_ {
        self.points.iter().filter_map(|pt| {
            pt.distortion.map(|distortion| RdPoint {
                rate: pt.rate,
                distortion,
            })
        })
    }
}

/// Both curves evaluated on one rate grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsbccCurves<T> {
    pub no_causal: RdCurve<T>,
    pub causal: RdCurve<T>,
}

/// Reliable-transmission limit `(1 - h(p1)) / h(p)`.
pub fn rate_max<T: Real>(params: &BsbccParams<T>) -> Result<T> {
    Ok((T::one() - h(params.p1)) / params.source_entropy()?)
}

/// Largest rate with plateau distortion under causal disclosure,
/// `(h(p2) - h(p1)) / h(p)`.
pub fn rate_kink<T: Real>(params: &BsbccParams<T>) -> Result<T> {
    Ok((h(params.p2) - h(params.p1)) / params.source_entropy()?)
}

/// Right-hand side `1 - h(p1) + h(p2) - R h(p)` of the γ equation.
fn gamma_target<T: Real>(params: &BsbccParams<T>, rate: T) -> T {
    T::one() - h(params.p1) + h(params.p2) - rate * h(params.p)
}

/// The unique `γ ∈ [0, 0.5]` with `h(γ ∗ p2) = 1 - h(p1) + h(p2) - R h(p)`.
///
/// Valid for `rate_kink < rate <= rate_max`. The map `γ ↦ h(γ ∗ p2)` is
/// strictly increasing on the bracket because `p2 < 0.5`.
pub fn solve_gamma<T: Real>(params: &BsbccParams<T>, rate: T) -> Result<T> {
    let lo_rate = rate_kink(params)?;
    let hi_rate = rate_max(params)?;
    if !(rate > lo_rate && rate <= hi_rate * (T::one() + T::lit(RATE_EDGE_REL))) {
        return Err(Error::Infeasible {
            rate: rate.to_f64_lossy(),
            reason: format!("no root in [0, 0.5]; rate must lie in ({lo_rate}, {hi_rate}]"),
        });
    }
    let target = gamma_target(params, rate);
    let p2 = params.p2;
    let residual = |g: T| h(conv(g, p2)) - target;
    let half = T::lit(0.5);
    // Endpoints within rounding of the limits.
    if residual(T::zero()) >= T::zero() {
        return Ok(T::zero());
    }
    if residual(half) <= T::zero() {
        return Ok(half);
    }
    bisect_bracket(residual, T::zero(), half, T::lit(GAMMA_TOL))
}

/// Time-sharing coefficient `α' = (h(γ∗p2) - h(γ∗p1)) / (1 - h(γ∗p1))`.
pub fn alpha_prime<T: Real>(params: &BsbccParams<T>, gamma: T) -> Result<T> {
    if !(gamma >= T::zero() && gamma <= T::lit(0.5)) {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma.to_f64_lossy(),
            domain: "[0, 0.5]",
        });
    }
    let hy = h(conv(gamma, params.p1));
    let hz = h(conv(gamma, params.p2));
    let den = T::one() - hy;
    if den <= T::zero() {
        return Err(Error::Degenerate(format!(
            "alpha' is 0/0 at gamma = {gamma}: no public layer to time-share"
        )));
    }
    Ok(((hz - hy) / den).max(T::zero()).min(T::one()))
}

/// Secure rate carried by the confidential layer,
/// `R_s(γ) = h(γ∗p1) - h(γ∗p2) - h(p1) + h(p2)`.
pub fn secure_rate<T: Real>(params: &BsbccParams<T>, gamma: T) -> T {
    h(conv(gamma, params.p1)) - h(conv(gamma, params.p2)) - h(params.p1) + h(params.p2)
}

/// Rate of the public layer `I(V;Y) = 1 - h(γ∗p1)`.
pub fn public_rate<T: Real>(params: &BsbccParams<T>, gamma: T) -> T {
    T::one() - h(conv(gamma, params.p1))
}

fn check_positive_rate<T: Real>(rate: T) -> Result<()> {
    if rate > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "rate",
            value: rate.to_f64_lossy(),
            domain: "(0, inf)",
        })
    }
}

/// Eavesdropper distortion without causal disclosure: `Δ = p` for every rate
/// strictly below `rate_max`.
pub fn distortion_no_causal<T: Real>(params: &BsbccParams<T>, rate: T) -> Result<T> {
    check_positive_rate(rate)?;
    let limit = rate_max(params)?;
    if rate < limit {
        Ok(params.delta())
    } else {
        Err(Error::Infeasible {
            rate: rate.to_f64_lossy(),
            reason: format!("lossless reconstruction requires rate < {limit}"),
        })
    }
}

/// Eavesdropper distortion with causal disclosure.
pub fn distortion_causal<T: Real>(params: &BsbccParams<T>, rate: T) -> Result<T> {
    Ok(causal_point(params, rate)?.0)
}

/// `(D, γ, α')` for a rate under causal disclosure; `γ` and `α'` are `None`
/// on the plateau.
fn causal_point<T: Real>(params: &BsbccParams<T>, rate: T) -> Result<(T, Option<T>, Option<T>)> {
    check_positive_rate(rate)?;
    let limit = rate_max(params)?;
    if rate > limit * (T::one() + T::lit(RATE_EDGE_REL)) {
        return Err(Error::Infeasible {
            rate: rate.to_f64_lossy(),
            reason: format!("lossless reconstruction requires rate <= {limit}"),
        });
    }
    let delta = params.delta();
    if rate <= rate_kink(params)? {
        return Ok((delta, None, None));
    }
    let gamma = solve_gamma(params, rate)?;
    let alpha = match alpha_prime(params, gamma) {
        Ok(a) => a,
        // γ = 0.5 only at the kink, where the curve is continuous at Δ.
        Err(Error::Degenerate(_)) => return Ok((delta, Some(gamma), None)),
        Err(e) => return Err(e),
    };
    let rs = secure_rate(params, gamma).max(T::zero());
    let p_max = params.p.max(T::one() - params.p);
    let d = d_cap(rs / rate, p_max)?;
    Ok((alpha * delta + (T::one() - alpha) * d, Some(gamma), Some(alpha)))
}

/// Evaluates both information models over a strictly increasing grid of
/// positive rates. Infeasible rates are labelled rather than dropped.
pub fn curve<T: Real>(params: &BsbccParams<T>, rate_grid: &[T]) -> Result<BsbccCurves<T>> {
    if rate_grid.iter().any(|r| !(*r > T::zero())) {
        return Err(Error::InvalidParams("rate grid must be positive".into()));
    }
    if rate_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("rate grid must be strictly increasing".into()));
    }
    let kink = rate_kink(params)?;
    let mut no_causal = Vec::with_capacity(rate_grid.len());
    let mut causal = Vec::with_capacity(rate_grid.len());
    for &rate in rate_grid {
        let nc = distortion_no_causal(params, rate).ok();
        no_causal.push(CurvePoint {
            rate,
            distortion: nc,
            regime: if nc.is_some() {
                Regime::Plateau
            } else {
                Regime::Infeasible
            },
            gamma: None,
            alpha_prime: None,
        });
        let point = match causal_point(params, rate) {
            Ok((d, gamma, alpha_prime)) => CurvePoint {
                rate,
                distortion: Some(d),
                regime: if rate <= kink {
                    Regime::Plateau
                } else {
                    Regime::Tradeoff
                },
                gamma,
                alpha_prime,
            },
            Err(Error::Infeasible { .. }) => CurvePoint {
                rate,
                distortion: None,
                regime: Regime::Infeasible,
                gamma: None,
                alpha_prime: None,
            },
            Err(e) => return Err(e),
        };
        causal.push(point);
    }
    Ok(BsbccCurves {
        no_causal: RdCurve { points: no_causal },
        causal: RdCurve { points: causal },
    })
}
