//! Scalar and finite-distribution information-theoretic primitives.
//!
//! All logarithms are base 2 and all rates are in bits. The convention
//! `0 · log(1/0) = 0` is used everywhere.

use rand::{Rng, RngCore};

use crate::{Error, Real, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance on the uniformity of the confidential-message marginal in
/// [`lemma_tv_mi_check`].
pub const UNIFORMITY_TOLERANCE: f64 = 1e-9;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        check_unit(value, "probability")?;
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

fn check_unit<T: Real>(x: T, name: &'static str) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: x.to_f64_lossy(),
            domain: "[0, 1]",
        })
    }
}

fn check_masses<T: Real>(masses: &[T]) -> Result<()> {
    if masses.is_empty() {
        return Err(Error::InvalidParams("empty alphabet".into()));
    }
    if let Some(bad) = masses.iter().find(|m| !(**m >= T::zero()) || !m.is_finite()) {
        return Err(Error::Domain {
            name: "mass",
            value: bad.to_f64_lossy(),
            domain: "[0, inf)",
        });
    }
    let total = masses.iter().fold(T::zero(), |a, &m| a + m);
    if (total - T::one()).abs() > T::lit(MASS_TOLERANCE).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::InvalidParams(format!("masses sum to {total}, expected 1")));
    }
    Ok(())
}

/// Probability mass function over a finite alphabet `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution<T> {
    masses: Vec<T>,
}

impl<T: Real> FiniteDistribution<T> {
    pub fn new(masses: Vec<T>) -> Result<Self> {
        check_masses(&masses)?;
        Ok(Self { masses })
    }

    /// `Bern(p)` over `{0, 1}`, mass `p` on symbol 1.
    pub fn bernoulli(p: T) -> Result<Self> {
        check_unit(p, "p")?;
        Ok(Self {
            masses: vec![T::one() - p, p],
        })
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> T {
        self.masses.iter().fold(T::zero(), |acc, &m| acc + plogp_inv(m))
    }

    /// Largest single-symbol mass, `max_s P(s)`.
    pub fn max_mass(&self) -> T {
        self.masses.iter().fold(T::zero(), |a, &m| a.max(m))
    }
}

/// Joint pmf over a product alphabet, stored row-major. Rows index the first
/// variable, columns the second.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T> {
    rows: usize,
    cols: usize,
    masses: Vec<T>,
}

impl<T: Real> JointDistribution<T> {
    pub fn new(rows: usize, cols: usize, masses: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || masses.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} = {} masses", rows * cols),
                got: format!("{} masses", masses.len()),
            });
        }
        check_masses(&masses)?;
        Ok(Self { rows, cols, masses })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                expected: format!("{c} columns in every row"),
                got: "ragged rows".into(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    /// Product distribution `P_A × P_B`.
    pub fn product(a: &FiniteDistribution<T>, b: &FiniteDistribution<T>) -> Self {
        let masses = a
            .masses()
            .iter()
            .flat_map(|&pa| b.masses().iter().map(move |&pb| pa * pb))
            .collect();
        Self {
            rows: a.len(),
            cols: b.len(),
            masses,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.masses[r * self.cols + c]
    }

    pub fn row_marginal(&self) -> Vec<T> {
        self.masses
            .chunks(self.cols)
            .map(|row| row.iter().fold(T::zero(), |a, &m| a + m))
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for row in self.masses.chunks(self.cols) {
            for (o, &m) in out.iter_mut().zip(row) {
                *o = *o + m;
            }
        }
        out
    }

    /// Product of this joint's own marginals.
    pub fn marginal_product(&self) -> Self {
        let rm = self.row_marginal();
        let cm = self.col_marginal();
        let masses = rm.iter().flat_map(|&a| cm.iter().map(move |&b| a * b)).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            masses,
        }
    }
}

/// Anything that exposes a shaped vector of masses.
pub trait Masses<T> {
    fn masses(&self) -> &[T];
    fn shape(&self) -> (usize, usize);
}

impl<T: Real> Masses<T> for FiniteDistribution<T> {
    fn masses(&self) -> &[T] {
        &self.masses
    }
    fn shape(&self) -> (usize, usize) {
        (1, self.masses.len())
    }
}

impl<T: Real> Masses<T> for JointDistribution<T> {
    fn masses(&self) -> &[T] {
        &self.masses
    }
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// `x · log2(1/x)` with `0 · log2(1/0) = 0`.
#[inline]
pub(crate) fn plogp_inv<T: Real>(x: T) -> T {
    if x > T::zero() {
        -x * x.log2()
    } else {
        T::zero()
    }
}

/// Unchecked binary entropy, for callers that already validated `x`.
#[inline]
pub(crate) fn h<T: Real>(x: T) -> T {
    plogp_inv(x) + plogp_inv(T::one() - x)
}

/// Unchecked binary convolution `a(1-b) + (1-a)b`.
#[inline]
pub(crate) fn conv<T: Real>(a: T, b: T) -> T {
    a * (T::one() - b) + (T::one() - a) * b
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    check_unit(x, "x")?;
    Ok(h(x))
}

/// Binary convolution `a ∗ b = a(1-b) + (1-a)b`.
pub fn binary_convolution<T: Real>(a: T, b: T) -> Result<T> {
    check_unit(a, "a")?;
    check_unit(b, "b")?;
    // The expression is a convex combination of b and 1-b, so it stays in
    // [0, 1] up to rounding.
    Ok(conv(a, b).max(T::zero()).min(T::one()))
}

/// Piecewise-linear interpolation through the knots `(log2 n, (n-1)/n)`,
/// `n = 1, 2, 3, ...`.
///
/// The bracketing knot index is located directly from `2^x` and then nudged
/// so that `log2 n <= x < log2 (n+1)` holds with the same `log2` used for the
/// knot abscissae; this makes the function exact at every knot.
pub fn f_interp<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::Domain {
            name: "x",
            value: x.to_f64_lossy(),
            domain: "[0, inf)",
        });
    }
    let mut n = x.exp2().floor().max(T::one());
    if !n.is_finite() || n + T::one() == n {
        // Past the resolution of T every knot value rounds to 1.
        return Ok(T::one());
    }
    while (n + T::one()).log2() <= x {
        n = n + T::one();
    }
    while n > T::one() && n.log2() > x {
        n = n - T::one();
    }
    let x0 = n.log2();
    let x1 = (n + T::one()).log2();
    let y0 = (n - T::one()) / n;
    let y1 = n / (n + T::one());
    let t = (x - x0) / (x1 - x0);
    Ok(y0 + t * (y1 - y0))
}

/// `d(x) = min(f(x), 1 - p_max)` where `p_max = max_s P_S(s)`.
pub fn d_cap<T: Real>(x: T, p_max: T) -> Result<T> {
    check_unit(p_max, "p_max")?;
    Ok(f_interp(x)?.min(T::one() - p_max))
}

/// Hamming distortion on symbol indices.
pub fn hamming<T: Real>(s: usize, t: usize) -> T {
    if s == t {
        T::zero()
    } else {
        T::one()
    }
}

/// Distortion of the best constant guess, `min_t E[d(S, t)]`, over a
/// reconstruction alphabet of size `recon_size`.
pub fn max_distortion<T, D>(source: &FiniteDistribution<T>, recon_size: usize, distortion: D) -> T
where
    T: Real,
    D: Fn(usize, usize) -> T,
{
    (0..recon_size)
        .map(|t| {
            source
                .masses()
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (s, &m)| acc + m * distortion(s, t))
        })
        .fold(T::infinity(), T::min)
}

/// Unnormalized total variation `Σ |p - q|`.
pub fn total_variation<T: Real, M: Masses<T>>(p: &M, q: &M) -> Result<T> {
    if p.shape() != q.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", p.shape()),
            got: format!("{:?}", q.shape()),
        });
    }
    Ok(p.masses()
        .iter()
        .zip(q.masses())
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs()))
}

/// `I(A; B)` in bits for a joint distribution of `(A, B)`.
pub fn mutual_information<T: Real>(joint: &JointDistribution<T>) -> T {
    let rm = joint.row_marginal();
    let cm = joint.col_marginal();
    let mut mi = T::zero();
    for (r, &pr) in rm.iter().enumerate() {
        for (c, &pc) in cm.iter().enumerate() {
            let pj = joint.get(r, c);
            if pj > T::zero() {
                mi = mi + pj * (pj / (pr * pc)).log2();
            }
        }
    }
    // Rounding can leave a tiny negative value for independent pairs.
    mi.max(T::zero())
}

/// Outcome of [`lemma_tv_mi_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck<T> {
    /// `‖P_Z P_{M_s} − P_{Z M_s}‖` (unnormalized).
    pub epsilon: T,
    pub mi: T,
    /// `−ε log2(ε / |M_s|)`.
    pub bound: T,
    /// `true` when `ε > 1/2`, where the bound makes no claim.
    pub vacuous: bool,
    pub holds: bool,
}

/// Numerically checks the bound `I(M_s; Z) <= −ε log2(ε/|M_s|)` for a joint
/// of a uniform confidential message (rows) and an observation (columns).
pub fn lemma_tv_mi_check<T: Real>(joint: &JointDistribution<T>) -> Result<LemmaCheck<T>> {
    let rows = joint.rows();
    let uniform = T::one() / T::lit(rows as f64);
    let dev = joint
        .row_marginal()
        .iter()
        .fold(T::zero(), |a, &m| a.max((m - uniform).abs()));
    if dev > T::lit(UNIFORMITY_TOLERANCE) {
        return Err(Error::NonUniformMarginal(dev.to_f64_lossy()));
    }
    let epsilon = total_variation(&joint.marginal_product(), joint)?;
    let mi = mutual_information(joint);
    let bound = if epsilon > T::zero() {
        -epsilon * (epsilon / T::lit(rows as f64)).log2()
    } else {
        T::zero()
    };
    let vacuous = epsilon > T::lit(0.5);
    let slack = T::epsilon() * T::lit(64.0);
    let holds = vacuous || mi <= bound + slack;
    Ok(LemmaCheck {
        epsilon,
        mi,
        bound,
        vacuous,
        holds,
    })
}

/// Random joint of a uniform row variable and a column variable: a shared
/// column profile, perturbed per row by a random relative amount. The
/// perturbation scale is itself random, so the distance from independence
/// spans small and large values.
pub fn perturbed_product_joint<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> JointDistribution<f64> {
    let base: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 0.05).collect();
    let scale = rng.random::<f64>().powi(2);
    let mut masses = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let cond: Vec<f64> = base
            .iter()
            .map(|b| b * (1.0 + scale * (rng.random::<f64>() - 0.5)))
            .collect();
        let total: f64 = cond.iter().sum();
        masses.extend(cond.iter().map(|c| c / total / rows as f64));
    }
    JointDistribution::new(rows, cols, masses).expect("rows are normalized")
}

const BISECT_MAX_ITER: usize = 400;

fn bisect<T, F>(f: F, lo: T, hi: T, f_tol: Option<T>, x_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    let near_zero = |v: T| match f_tol {
        Some(tol) => v.abs() <= tol,
        None => v == T::zero(),
    };
    if near_zero(f_lo) {
        return Ok(lo);
    }
    if near_zero(f_hi) {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSignChange {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
            f_lo: f_lo.to_f64_lossy(),
            f_hi: f_hi.to_f64_lossy(),
        });
    }
    let two = T::lit(2.0);
    for _ in 0..BISECT_MAX_ITER {
        let mid = lo + (hi - lo) / two;
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if near_zero(f_mid) {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / two)
}

/// Bisection for a root of a monotone function on `[lo, hi]`.
///
/// Stops as soon as `|f(x)| <= tol` or the bracket is narrower than `tol`.
pub fn bisect_root<T, F>(f: F, lo: T, hi: T, tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    bisect(f, lo, hi, Some(tol), tol)
}

/// Bisection that only stops on bracket width, for functions that are flat
/// near their root where a residual test would stop early.
pub fn bisect_bracket<T, F>(f: F, lo: T, hi: T, x_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    bisect(f, lo, hi, None, x_tol)
}
