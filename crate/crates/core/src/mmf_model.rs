//! Multimode-fiber channel realizations.
//!
//! Bob sees `Y = H X + N` with `H = √SNR · Ψ`, Eve sees `Z = Hᵉ X + Nᵉ` with
//! `Hᵉ = √SNRᵉ · √Φ · Ψᵉ`. `Ψ` and `Ψᵉ` are unitary (modal crosstalk) and
//! `Φ = diag(φ̄)` is the normalized mode-dependent loss, with `Σ φ̄ᵢ = M`.
//! Noise variances are fixed to one, so channel power lives entirely in the
//! two SNRs.

use nalgebra::{Complex, DMatrix};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Max-entry tolerance on `U†U - I` for a unitary factor.
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Tolerance on `Σ φ̄ᵢ = M`.
pub const MDL_SUM_TOLERANCE: f64 = 1e-9;

/// `10^(x/10)`.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Mode count, SNRs and MDL spread of a fiber link. All dB quantities are
/// power ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmfParams {
    pub modes: usize,
    pub snr_db: f64,
    pub snre_db: f64,
    pub mdl_db: f64,
}

impl MmfParams {
    pub fn new(modes: usize, snr_db: f64, snre_db: f64, mdl_db: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParams("mode count must be at least 1".into()));
        }
        if !snr_db.is_finite() || !snre_db.is_finite() {
            return Err(Error::InvalidParams("SNRs must be finite".into()));
        }
        if !(mdl_db >= 0.0 && mdl_db.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mdl_db = {mdl_db} must be finite and non-negative"
            )));
        }
        Ok(Self {
            modes,
            snr_db,
            snre_db,
            mdl_db,
        })
    }

    /// Legitimate SNR `E₀L/σ²`, linear.
    pub fn snr(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    /// Eavesdropper SNR `E₀Lᵉ/σₑ²`, linear.
    pub fn snre(&self) -> f64 {
        db_to_linear(self.snre_db)
    }

    /// `φ_max / φ_min`, linear.
    pub fn mdl(&self) -> f64 {
        db_to_linear(self.mdl_db)
    }
}

/// Normalized MDL diagonal `φ̄`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdlSpectrum {
    phi_bar: Vec<f64>,
}

impl MdlSpectrum {
    pub fn new(phi_bar: Vec<f64>) -> Result<Self> {
        if phi_bar.is_empty() {
            return Err(Error::InvalidParams("empty MDL spectrum".into()));
        }
        if phi_bar.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams("MDL entries must be positive".into()));
        }
        let m = phi_bar.len() as f64;
        let sum: f64 = phi_bar.iter().sum();
        if (sum - m).abs() > MDL_SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "normalized MDL sums to {sum}, expected {m}"
            )));
        }
        Ok(Self { phi_bar })
    }

    /// Normalizes raw losses: `φ̄ᵢ = M φᵢ / Σ φⱼ`.
    pub fn from_raw(phi: &[f64]) -> Result<Self> {
        let sum: f64 = phi.iter().sum();
        let m = phi.len() as f64;
        Self::new(phi.iter().map(|&x| m * x / sum).collect())
    }

    /// No mode-dependent loss.
    pub fn flat(modes: usize) -> Self {
        Self {
            phi_bar: vec![1.0; modes],
        }
    }

    pub fn phi_bar(&self) -> &[f64] {
        &self.phi_bar
    }

    pub fn modes(&self) -> usize {
        self.phi_bar.len()
    }

    pub fn min(&self) -> f64 {
        self.phi_bar.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.phi_bar.iter().copied().fold(0.0, f64::max)
    }
}

/// One draw of `(Ψ, Ψᵉ, Φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    psi: ComplexMatrix,
    psi_e: ComplexMatrix,
    mdl: MdlSpectrum,
}

impl ChannelRealization {
    pub fn new(psi: ComplexMatrix, psi_e: ComplexMatrix, mdl: MdlSpectrum) -> Result<Self> {
        let m = mdl.modes();
        for (name, u) in [("psi", &psi), ("psi_e", &psi_e)] {
            if u.nrows() != m || u.ncols() != m {
                return Err(Error::ShapeMismatch {
                    expected: format!("{m}x{m} {name}"),
                    got: format!("{}x{}", u.nrows(), u.ncols()),
                });
            }
            let err = unitarity_error(u);
            if !(err <= UNITARY_TOLERANCE) {
                return Err(Error::InvalidParams(format!(
                    "{name} is not unitary: max |U†U - I| = {err:e}"
                )));
            }
        }
        Ok(Self { psi, psi_e, mdl })
    }

    pub fn psi(&self) -> &ComplexMatrix {
        &self.psi
    }

    pub fn psi_e(&self) -> &ComplexMatrix {
        &self.psi_e
    }

    pub fn mdl(&self) -> &MdlSpectrum {
        &self.mdl
    }

    pub fn modes(&self) -> usize {
        self.mdl.modes()
    }

    /// Same realization with Bob's unitary factor replaced.
    pub fn with_psi(&self, psi: ComplexMatrix) -> Result<Self> {
        Self::new(psi, self.psi_e.clone(), self.mdl.clone())
    }
}

/// Max-entry norm of `U†U - I`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Deterministic random stream keyed by `(seed, stream)`.
///
/// Backed by ChaCha8 with the stream id in the cipher's stream word, so
/// distinct streams of one seed are independent and identical keys reproduce
/// identical draws on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Haar-distributed `M × M` unitary.
///
/// QR-factorizes a matrix of i.i.d. standard complex Gaussians and rescales
/// each column of `Q` by the phase of the matching diagonal entry of `R`,
/// which removes the factorization's phase convention and leaves the exact
/// Haar measure.
pub fn sample_haar_unitary<R: RngCore + ?Sized>(modes: usize, rng: &mut R) -> ComplexMatrix {
    assert!(modes >= 1, "unitary dimension must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = ComplexMatrix::zeros(modes, modes);
    for i in 0..modes {
        for j in 0..modes {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            z[(i, j)] = C64::new(re * scale, im * scale);
        }
    }
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..modes {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { C64::new(1.0, 0.0) };
        for i in 0..modes {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random MDL spectrum: `φ₁ = 1`, `φ₂ = 10^(mdl_db/10)`, `φᵢ ~ U[φ₁, φ₂]`
/// for `i >= 3`, then normalized to mean one.
pub fn sample_mdl<R: RngCore + ?Sized>(modes: usize, mdl_db: f64, rng: &mut R) -> Result<MdlSpectrum> {
    if modes < 2 {
        return Err(Error::InvalidParams(format!(
            "MDL sampling pins both extremes and needs at least 2 modes, got {modes}"
        )));
    }
    if !(mdl_db >= 0.0 && mdl_db.is_finite()) {
        return Err(Error::InvalidParams(format!("mdl_db = {mdl_db} must be non-negative")));
    }
    let phi_min = 1.0;
    let phi_max = db_to_linear(mdl_db);
    let mut phi = Vec::with_capacity(modes);
    phi.push(phi_min);
    phi.push(phi_max);
    for _ in 2..modes {
        let u: f64 = rand::Rng::random(rng);
        phi.push(phi_min + (phi_max - phi_min) * u);
    }
    MdlSpectrum::from_raw(&phi)
}

/// Draws `Ψ`, `Ψᵉ` and the MDL spectrum, in that order. A single-mode fiber
/// has `φ̄ = (1)` by normalization.
pub fn sample_realization<R: RngCore + ?Sized>(params: &MmfParams, rng: &mut R) -> Result<ChannelRealization> {
    let m = params.modes;
    let psi = sample_haar_unitary(m, rng);
    let psi_e = sample_haar_unitary(m, rng);
    let mdl = if m == 1 {
        MdlSpectrum::flat(1)
    } else {
        sample_mdl(m, params.mdl_db, rng)?
    };
    ChannelRealization::new(psi, psi_e, mdl)
}

/// `(H, Hᵉ) = (√SNR Ψ, √SNRᵉ √Φ Ψᵉ)`.
pub fn build_channels(params: &MmfParams, realization: &ChannelRealization) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let m = params.modes;
    if realization.modes() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m} modes"),
            got: format!("{} modes", realization.modes()),
        });
    }
    let h = realization.psi() * C64::new(params.snr().sqrt(), 0.0);
    let mut he = realization.psi_e() * C64::new(params.snre().sqrt(), 0.0);
    for (i, phi) in realization.mdl().phi_bar().iter().enumerate() {
        let s = phi.sqrt();
        for j in 0..m {
            he[(i, j)] *= s;
        }
    }
    Ok((h, he))
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationJson {
    psi: Vec<Vec<ComplexJson>>,
    psi_e: Vec<Vec<ComplexJson>>,
    phi_bar: Vec<f64>,
}

fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<ComplexJson>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| ComplexJson {
                    re: m[(i, j)].re,
                    im: m[(i, j)].im,
                })
                .collect()
        })
        .collect()
}

fn matrix_from_json(rows: &[Vec<ComplexJson>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::ShapeMismatch {
            expected: format!("{c} columns per row"),
            got: "ragged rows".into(),
        });
    }
    Ok(ComplexMatrix::from_fn(n, c, |i, j| {
        C64::new(rows[i][j].re, rows[i][j].im)
    }))
}

impl Serialize for ChannelRealization {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RealizationJson {
            psi: matrix_to_json(&self.psi),
            psi_e: matrix_to_json(&self.psi_e),
            phi_bar: self.mdl.phi_bar.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChannelRealization {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RealizationJson::deserialize(deserializer)?;
        let build = || -> Result<Self> {
            Self::new(
                matrix_from_json(&raw.psi)?,
                matrix_from_json(&raw.psi_e)?,
                MdlSpectrum::new(raw.phi_bar.clone())?,
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}
