//! Secrecy rate region and eavesdropper distortion of the fiber channel.
//!
//! With input covariance `0 ⪯ K ⪯ I` the layered Gaussian scheme supports
//!
//! ```text
//! rs(K) = log2 det(I + SNR K) - log2 det(I + SNRᵉ √Φ Ψᵉ K Ψᵉ† √Φ)
//! rp(K) = M log2(1 + SNR)    - log2 det(I + SNR K)
//! ```
//!
//! The diagonal family `K = Ψᵉ† Λ Ψᵉ` turns both into sums of per-mode
//! logs. By Fiedler's determinant inequality the diagonal family already
//! reaches every pair `(log2 det(I + SNR K), log2 det(I + SNRᵉ A K A†))`
//! that a general `K` can, so it is exact for every quantity here. The
//! general-`K` routines exist for checking and for [`max_rs`]'s second
//! stage.

mod slice;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;
use serde::Serialize;

use crate::bsbcc::Regime;
use crate::info_math::{d_cap, hamming, max_distortion, FiniteDistribution};
use crate::mmf_model::{ChannelRealization, ComplexMatrix, MdlSpectrum, MmfParams, C64};
use crate::{Error, Result};

use slice::{grid_golden_max, optimize, Piece};

/// Slack on the Hermitian and `0 ⪯ K ⪯ I` constraints.
pub const COV_TOLERANCE: f64 = 1e-10;
/// `β̄(K)` at or below this is treated as zero.
pub const BETA_TOLERANCE: f64 = 1e-12;

const ASCENT_STEP: f64 = 0.1;
const ASCENT_MIN_GAIN: f64 = 1e-10;
const ASCENT_MAX_ITERS: usize = 500;
const ASCENT_MIN_STEP: f64 = 1e-14;
const CURVE_GRID: usize = 512;

/// Eigenvalues `λ` of `K` in Eve's basis, `K = Ψᵉ† diag(λ) Ψᵉ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovSpectrum {
    lambdas: Vec<f64>,
}

impl CovSpectrum {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::Domain {
                name: "lambda",
                value: bad,
                domain: "[0, 1]",
            });
        }
        Ok(Self { lambdas })
    }

    pub fn zeros(modes: usize) -> Self {
        Self {
            lambdas: vec![0.0; modes],
        }
    }

    pub fn ones(modes: usize) -> Self {
        Self {
            lambdas: vec![1.0; modes],
        }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn modes(&self) -> usize {
        self.lambdas.len()
    }

    /// The covariance `Ψᵉ† Λ Ψᵉ`.
    pub fn to_cov(&self, psi_e: &ComplexMatrix) -> Result<HermitianCov> {
        check_modes(psi_e.nrows(), self.modes())?;
        let diag = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.modes(),
            self.lambdas.iter().map(|&l| C64::new(l, 0.0)),
        ));
        HermitianCov::new(psi_e.adjoint() * diag * psi_e)
    }
}

/// General input covariance with `0 ⪯ K ⪯ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCov {
    k: ComplexMatrix,
}

impl HermitianCov {
    /// Validates and symmetrizes `k`.
    pub fn new(k: ComplexMatrix) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", k.nrows(), k.ncols()),
            });
        }
        let asym = (&k - k.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(asym <= COV_TOLERANCE) {
            return Err(Error::InvalidCovariance(format!(
                "not Hermitian: max |K - K†| = {asym:e}"
            )));
        }
        let k = hermitian_part(&k);
        let eig = SymmetricEigen::new(k.clone());
        for &ev in eig.eigenvalues.iter() {
            if !(-COV_TOLERANCE..=1.0 + COV_TOLERANCE).contains(&ev) {
                return Err(Error::InvalidCovariance(format!("eigenvalue {ev} outside [0, 1]")));
            }
        }
        Ok(Self { k })
    }

    pub fn zeros(modes: usize) -> Self {
        Self {
            k: ComplexMatrix::zeros(modes, modes),
        }
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            k: ComplexMatrix::identity(modes, modes),
        }
    }

    /// Nearest feasible covariance: eigenvalues clipped to `[0, 1]`.
    pub fn project(k: &ComplexMatrix) -> Self {
        let mut eig = SymmetricEigen::new(hermitian_part(k));
        eig.eigenvalues.iter_mut().for_each(|l| *l = l.clamp(0.0, 1.0));
        Self {
            k: hermitian_part(&eig.recompose()),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.k
    }

    pub fn modes(&self) -> usize {
        self.k.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.k.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Either parametrization of `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(CovSpectrum),
    General(HermitianCov),
}

impl Covariance {
    pub fn to_cov(&self, psi_e: &ComplexMatrix) -> Result<HermitianCov> {
        match self {
            Covariance::Diagonal(s) => s.to_cov(psi_e),
            Covariance::General(k) => Ok(k.clone()),
        }
    }

    /// `λ` for the diagonal family, eigenvalues of `K` otherwise.
    pub fn spectrum(&self) -> Vec<f64> {
        match self {
            Covariance::Diagonal(s) => s.lambdas.clone(),
            Covariance::General(k) => k.eigenvalues(),
        }
    }
}

/// Confidential and public rates in bits per channel use. `rs` is clamped
/// at zero; `rs_raw` keeps the sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub rs: f64,
    pub rp: f64,
    pub rs_raw: f64,
}

impl RatePair {
    fn from_logdets(params: &MmfParams, bob: f64, eve: f64) -> Self {
        let rs_raw = bob - eve;
        Self {
            rs: rs_raw.max(0.0),
            rp: (rp_star(params) - bob).max(0.0),
            rs_raw,
        }
    }
}

/// Time-sharing coefficient `ᾱ(K) = (β̄ - γ̄)/β̄`, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBar {
    pub value: f64,
    pub raw: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AlphaBar {
    fn from_parts(beta: f64, gamma: f64) -> Result<Self> {
        if !(beta > BETA_TOLERANCE) {
            return Err(Error::Degenerate(format!(
                "beta_bar = {beta:e} vanishes; alpha_bar undefined"
            )));
        }
        let raw = (beta - gamma) / beta;
        Ok(Self {
            value: raw.clamp(0.0, 1.0),
            raw,
            beta,
            gamma,
        })
    }
}

/// Both stages of the confidential-rate maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxRs {
    pub rs_star: f64,
    pub diagonal_rs: f64,
    pub diagonal: CovSpectrum,
    pub general_rs: f64,
    pub general: HermitianCov,
}

impl MaxRs {
    /// The maximizing covariance; ties go to the diagonal stage.
    pub fn argmax(&self) -> Covariance {
        if self.general_rs > self.diagonal_rs {
            Covariance::General(self.general.clone())
        } else {
            Covariance::Diagonal(self.diagonal.clone())
        }
    }
}

/// One grid rate of the causal distortion curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MmfRdPoint {
    pub rate: f64,
    pub distortion: Option<f64>,
    pub regime: Regime,
    /// Clamped `ᾱ`; `None` when `β̄ = 0` or the rate is infeasible.
    pub alpha_bar: Option<f64>,
    pub rates: Option<RatePair>,
    pub k_used: Option<Covariance>,
}

/// Causal curve with the quantities that frame it.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalCurve {
    pub points: Vec<MmfRdPoint>,
    pub source_entropy: f64,
    pub delta: f64,
    /// Distortion on the plateau, `d(H(S))`.
    pub plateau: f64,
    pub rs_star: f64,
    pub rp_star: f64,
}

impl CausalCurve {
    /// `R_s* / H(S)`: end of the plateau.
    pub fn plateau_rate(&self) -> f64 {
        self.rs_star / self.source_entropy
    }

    /// `R_p* / H(S)`: largest reliable rate.
    pub fn max_rate(&self) -> f64 {
        self.rp_star / self.source_entropy
    }
}

fn check_modes(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: format!("{expected} modes"),
            got: format!("{got} modes"),
        })
    }
}

fn hermitian_part(k: &ComplexMatrix) -> ComplexMatrix {
    (k + k.adjoint()) * C64::new(0.5, 0.0)
}

/// `log2 det` of a Hermitian positive-definite matrix via Cholesky.
fn log2det_hpd(m: ComplexMatrix) -> Result<f64> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::InvalidCovariance("matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.log2()).sum::<f64>())
}

/// `√Φ Ψᵉ`, Eve's channel without the SNR.
fn eve_factor(realization: &ChannelRealization) -> ComplexMatrix {
    let mut a = realization.psi_e().clone();
    for (i, phi) in realization.mdl().phi_bar().iter().enumerate() {
        a.row_mut(i).scale_mut(phi.sqrt());
    }
    a
}

/// `M log2(1 + SNR)`: the sum-rate ceiling, reached by `rp` at `K = 0`.
pub fn rp_star(params: &MmfParams) -> f64 {
    params.modes as f64 * params.snr().ln_1p() / std::f64::consts::LN_2
}

/// Per-mode Eve gains `SNRᵉ φ̄ᵢ`.
fn eve_gains(params: &MmfParams, mdl: &MdlSpectrum) -> Vec<f64> {
    let snre = params.snre();
    mdl.phi_bar().iter().map(|phi| snre * phi).collect()
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `log2 det(I + SNRᵉ Φ)`: Eve's term at `K = I`.
fn eve_full(params: &MmfParams, mdl: &MdlSpectrum) -> f64 {
    eve_gains(params, mdl).into_iter().map(log2_1p).sum()
}

/// Rate pair of `K = Ψᵉ† Λ Ψᵉ`.
pub fn rate_pair_diag(params: &MmfParams, mdl: &MdlSpectrum, spec: &CovSpectrum) -> Result<RatePair> {
    let (bob, eve) = diag_logdets(params, mdl, spec)?;
    Ok(RatePair::from_logdets(params, bob, eve))
}

fn diag_logdets(params: &MmfParams, mdl: &MdlSpectrum, spec: &CovSpectrum) -> Result<(f64, f64)> {
    check_modes(params.modes, mdl.modes())?;
    check_modes(params.modes, spec.modes())?;
    let snr = params.snr();
    let bob = spec.lambdas.iter().map(|&l| log2_1p(snr * l)).sum();
    let eve = eve_gains(params, mdl)
        .iter()
        .zip(&spec.lambdas)
        .map(|(e, &l)| log2_1p(e * l))
        .sum();
    Ok((bob, eve))
}

/// Rate pair of a general covariance.
pub fn rate_pair_general(params: &MmfParams, realization: &ChannelRealization, k: &HermitianCov) -> Result<RatePair> {
    let (bob, eve) = general_logdets(params, realization, k)?;
    Ok(RatePair::from_logdets(params, bob, eve))
}

fn general_logdets(params: &MmfParams, realization: &ChannelRealization, k: &HermitianCov) -> Result<(f64, f64)> {
    let m = params.modes;
    check_modes(m, realization.modes())?;
    check_modes(m, k.modes())?;
    let id = ComplexMatrix::identity(m, m);
    let bob = log2det_hpd(&id + k.matrix() * C64::new(params.snr(), 0.0))?;
    let a = eve_factor(realization);
    let eve_cov = hermitian_part(&(&a * k.matrix() * a.adjoint()));
    let eve = log2det_hpd(&id + eve_cov * C64::new(params.snre(), 0.0))?;
    Ok((bob, eve))
}

/// Sufficient condition for a positive secrecy rate: `min φ̄ < SNR/SNRᵉ`.
pub fn check_secrecy_condition(params: &MmfParams, mdl: &MdlSpectrum) -> bool {
    mdl.min() < params.snr() / params.snre()
}

/// Maximizes `rs` over `K`.
///
/// Stage one is exact on the diagonal family: each per-mode term
/// `log2(1 + SNR λ) - log2(1 + SNRᵉ φ̄ᵢ λ)` has a derivative whose sign is
/// that of `SNR - SNRᵉ φ̄ᵢ` for every `λ`, so the optimum is `λᵢ = 1` or `0`.
/// Stage two runs [`refine_general`] from there.
pub fn max_rs(params: &MmfParams, realization: &ChannelRealization) -> Result<MaxRs> {
    let (diagonal, diagonal_rs) = max_rs_diag(params, realization.mdl())?;
    let (general, general_rs) = refine_general(params, realization, &diagonal.to_cov(realization.psi_e())?)?;
    Ok(MaxRs {
        rs_star: diagonal_rs.max(general_rs).max(0.0),
        diagonal_rs,
        diagonal,
        general_rs,
        general,
    })
}

/// Stage one of [`max_rs`] alone.
pub fn max_rs_diag(params: &MmfParams, mdl: &MdlSpectrum) -> Result<(CovSpectrum, f64)> {
    check_modes(params.modes, mdl.modes())?;
    let snr = params.snr();
    let spec = CovSpectrum {
        lambdas: eve_gains(params, mdl)
            .iter()
            .map(|&e| if snr >= e { 1.0 } else { 0.0 })
            .collect(),
    };
    let rs = rate_pair_diag(params, mdl, &spec)?.rs_raw;
    Ok((spec, rs))
}

/// Projected gradient ascent of `rs_raw` over `0 ⪯ K ⪯ I`, starting at `k0`.
///
/// Each step starts at length 0.1 and halves until the objective improves;
/// iteration stops when the gain drops below 1e-10 or after 500 steps.
pub fn refine_general(
    params: &MmfParams,
    realization: &ChannelRealization,
    k0: &HermitianCov,
) -> Result<(HermitianCov, f64)> {
    let m = params.modes;
    check_modes(m, realization.modes())?;
    check_modes(m, k0.modes())?;
    let (snr, snre) = (params.snr(), params.snre());
    let a = eve_factor(realization);
    let id = ComplexMatrix::identity(m, m);
    let objective = |k: &HermitianCov| -> Result<f64> { general_logdets(params, realization, k).map(|(b, e)| b - e) };

    let mut k = k0.clone();
    let mut f = objective(&k)?;
    for _ in 0..ASCENT_MAX_ITERS {
        let bob_inv = (&id + k.matrix() * C64::new(snr, 0.0))
            .cholesky()
            .ok_or_else(|| Error::InvalidCovariance("I + SNR K not positive definite".into()))?
            .inverse();
        let eve_inv = (&id + &a * k.matrix() * a.adjoint() * C64::new(snre, 0.0))
            .cholesky()
            .ok_or_else(|| Error::InvalidCovariance("I + SNRe A K A† not positive definite".into()))?
            .inverse();
        let grad = (bob_inv * C64::new(snr, 0.0) - a.adjoint() * eve_inv * &a * C64::new(snre, 0.0))
            * C64::new(std::f64::consts::LOG2_E, 0.0);
        let grad = hermitian_part(&grad);

        let mut step = ASCENT_STEP;
        let mut accepted = None;
        while step >= ASCENT_MIN_STEP {
            let cand = HermitianCov::project(&(k.matrix() + &grad * C64::new(step, 0.0)));
            let fc = objective(&cand)?;
            if fc > f {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                let gain = fc - f;
                k = cand;
                f = fc;
                if gain < ASCENT_MIN_GAIN {
                    break;
                }
            }
            None => break,
        }
    }
    Ok((k, f))
}

/// Region without causal disclosure: rates below `M log2(1 + SNR)/H(S)`
/// keep distortion `delta`. Needs [`check_secrecy_condition`].
pub fn no_causal_region(params: &MmfParams, mdl: &MdlSpectrum, source_entropy: f64, delta: f64) -> Result<(f64, f64)> {
    check_modes(params.modes, mdl.modes())?;
    if !(source_entropy > 0.0) {
        return Err(Error::Degenerate(format!(
            "source entropy {source_entropy} must be positive"
        )));
    }
    if !check_secrecy_condition(params, mdl) {
        return Err(Error::SecrecyConditionFails {
            min_phi: mdl.min(),
            ratio: params.snr() / params.snre(),
        });
    }
    Ok((rp_star(params) / source_entropy, delta))
}

/// `ᾱ(K)` for any covariance.
pub fn alpha_bar(params: &MmfParams, realization: &ChannelRealization, k: &Covariance) -> Result<AlphaBar> {
    match k {
        Covariance::Diagonal(s) => alpha_bar_diag(params, realization.mdl(), s),
        Covariance::General(k) => {
            let (bob, eve) = general_logdets(params, realization, k)?;
            AlphaBar::from_parts(rp_star(params) - bob, eve_full(params, realization.mdl()) - eve)
        }
    }
}

/// `ᾱ(Λ)` on the diagonal family.
pub fn alpha_bar_diag(params: &MmfParams, mdl: &MdlSpectrum, spec: &CovSpectrum) -> Result<AlphaBar> {
    let (bob, eve) = diag_logdets(params, mdl, spec)?;
    AlphaBar::from_parts(rp_star(params) - bob, eve_full(params, mdl) - eve)
}

/// Clamped `ᾱ` with the convention `ᾱ = 0` where `β̄` vanishes.
fn alpha_or_zero(beta: f64, gamma: f64) -> f64 {
    AlphaBar::from_parts(beta, gamma).map_or(0.0, |a| a.value)
}

/// The slice problem in Eve's log coordinates `uᵢ = log2(1 + SNRᵉ φ̄ᵢ λᵢ)`.
#[derive(Debug, Clone)]
pub(crate) struct EveSlice {
    pieces: Vec<Piece>,
    gains: Vec<f64>,
    /// `Σ log2(1 + SNRᵉ φ̄ᵢ)`.
    pub eve_total: f64,
}

/// Maximizer of `f` on `[lo, hi]`: uniform scan, then golden section.
pub(crate) fn refine_max<F: FnMut(f64) -> f64>(lo: f64, hi: f64, grid: usize, mut f: F) -> f64 {
    grid_golden_max(lo, hi, grid, &mut f)
}

/// Range of Bob's log-det sum on `{Σ uᵢ = c}` with its two extreme points.
#[derive(Debug, Clone)]
pub(crate) struct BobRange {
    pub lo: f64,
    pub hi: f64,
    lo_u: Vec<f64>,
    hi_u: Vec<f64>,
}

impl EveSlice {
    pub fn new(params: &MmfParams, mdl: &MdlSpectrum) -> Self {
        let snr = params.snr();
        let gains = eve_gains(params, mdl);
        let pieces: Vec<Piece> = gains
            .iter()
            .map(|&e| Piece {
                r: snr / e,
                cap: log2_1p(e),
            })
            .collect();
        let eve_total = pieces.iter().map(|p| p.cap).sum();
        Self {
            pieces,
            gains,
            eve_total,
        }
    }

    pub fn bob_range(&self, c: f64) -> Option<BobRange> {
        let hi = optimize(&self.pieces, 1.0, c)?;
        let lo = optimize(&self.pieces, -1.0, c)?;
        Some(BobRange {
            lo: lo.value,
            hi: hi.value,
            lo_u: lo.x,
            hi_u: hi.x,
        })
    }

    fn bob(&self, u: &[f64]) -> f64 {
        self.pieces.iter().zip(u).map(|(p, &x)| p.value(x)).sum()
    }

    /// A spectrum on the slice with Bob's sum at `target`, found on the
    /// segment between the two extreme points, which stays on the slice.
    pub fn spectrum_at(&self, range: &BobRange, target: f64) -> CovSpectrum {
        let at = |t: f64| -> Vec<f64> {
            range
                .lo_u
                .iter()
                .zip(&range.hi_u)
                .map(|(a, b)| a + t * (b - a))
                .collect()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if target <= range.lo {
            hi = 0.0;
        } else if target >= range.hi {
            lo = 1.0;
        } else {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if self.bob(&at(mid)) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let u = at(0.5 * (lo + hi));
        CovSpectrum {
            lambdas: u
                .iter()
                .zip(&self.gains)
                .map(|(&x, &e)| ((x * std::f64::consts::LN_2).exp_m1() / e).clamp(0.0, 1.0))
                .collect(),
        }
    }
}

/// Eve's distortion against rate with causal disclosure, for a
/// Bernoulli(`source_p`) source under Hamming distortion.
///
/// Below `R_s*/H(S)` the plateau `d(H(S))` holds. Above it, `K` is chosen on
/// the rate-matching surface `rs(K) + rp(K) = R H(S)`, i.e. Eve's log-det sum
/// is pinned at `c = R_p* - R H(S)`. There `γ̄ = Σ log2(1 + SNRᵉ φ̄ᵢ) - c`
/// is fixed, and `β̄`, `rs` and hence `D` depend on `K` only through Bob's
/// log-det sum `B`, so the maximization is one-dimensional over the exact
/// range of `B` on that slice.
pub fn causal_curve(
    params: &MmfParams,
    realization: &ChannelRealization,
    source_p: f64,
    rate_grid: &[f64],
) -> Result<CausalCurve> {
    check_modes(params.modes, realization.modes())?;
    let source = FiniteDistribution::bernoulli(source_p)?;
    let h_s = source.entropy();
    if h_s <= 0.0 {
        return Err(Error::Degenerate("source entropy is zero".into()));
    }
    if rate_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) || rate_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "rate grid must be positive and strictly increasing".into(),
        ));
    }
    let delta = max_distortion(&source, 2, hamming::<f64>);
    let p_max = source.max_mass();
    let plateau = d_cap(h_s, p_max)?;
    let mdl = realization.mdl();
    let best = max_rs(params, realization)?;
    let rp_max = rp_star(params);
    let slice = EveSlice::new(params, mdl);

    let mut points = Vec::with_capacity(rate_grid.len());
    for &rate in rate_grid {
        let need = rate * h_s;
        let point = if need > rp_max * (1.0 + 1e-12) {
            MmfRdPoint {
                rate,
                distortion: None,
                regime: Regime::Infeasible,
                alpha_bar: None,
                rates: None,
                k_used: None,
            }
        } else if need <= best.rs_star {
            let k = best.argmax();
            let cov = k.to_cov(realization.psi_e())?;
            let (bob, eve) = general_logdets(params, realization, &cov)?;
            MmfRdPoint {
                rate,
                distortion: Some(plateau),
                regime: Regime::Plateau,
                alpha_bar: AlphaBar::from_parts(rp_max - bob, slice.eve_total - eve)
                    .ok()
                    .map(|a| a.value),
                rates: Some(RatePair::from_logdets(params, bob, eve)),
                k_used: Some(k),
            }
        } else {
            let c = (rp_max - need).clamp(0.0, slice.eve_total);
            let range = slice.bob_range(c).ok_or_else(|| Error::Infeasible {
                rate,
                reason: "rate-matching slice is empty".into(),
            })?;
            let gamma = slice.eve_total - c;
            let distortion_at = |b: f64| -> f64 {
                let alpha = alpha_or_zero(rp_max - b, gamma);
                let d = d_cap(((b - c).max(0.0) / rate).max(0.0), p_max).unwrap_or(0.0);
                alpha * delta + (1.0 - alpha) * d
            };
            let b = grid_golden_max(range.lo, range.hi, CURVE_GRID, &mut |b| distortion_at(b));
            let spec = slice.spectrum_at(&range, b);
            let (bob, eve) = diag_logdets(params, mdl, &spec)?;
            let rates = RatePair::from_logdets(params, bob, eve);
            let alpha = AlphaBar::from_parts(rp_max - bob, slice.eve_total - eve).ok();
            let a = alpha.map_or(0.0, |a| a.value);
            let distortion = a * delta + (1.0 - a) * d_cap(rates.rs / rate, p_max)?;
            MmfRdPoint {
                rate,
                distortion: Some(distortion),
                regime: Regime::Tradeoff,
                alpha_bar: alpha.map(|a| a.value),
                rates: Some(rates),
                k_used: Some(Covariance::Diagonal(spec)),
            }
        };
        points.push(point);
    }
    Ok(CausalCurve {
        points,
        source_entropy: h_s,
        delta,
        plateau,
        rs_star: best.rs_star,
        rp_star: rp_max,
    })
}

#[cfg(test)]
mod tests;
