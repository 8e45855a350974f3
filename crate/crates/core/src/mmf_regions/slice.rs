//! Separable optimization on a budget slice.
//!
//! Every mode contributes `g(x) = log2(1 + r (2^x - 1))` for `x ∈ [0, cap]`
//! and the coordinates must sum to a fixed budget. With `x = log2(1 + e λ)`
//! and `r = a / e` this is `log2(1 + a λ)`, so the same routine gives Bob's
//! log-det sum at a fixed Eve log-det sum and vice versa.
//!
//! `g` is concave for `r > 1` and convex for `r < 1`. Maximizing `s · Σ g`
//! (`s = ±1`) splits modes into pieces that are concave under `s · g`, which
//! are water-filled, and the rest, of which at most one may sit strictly
//! inside its interval at an optimum. The latter are enumerated over their
//! endpoints with at most one free piece, whose value is found by a 1-D
//! search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub r: f64,
    pub cap: f64,
}

impl Piece {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.r * (x * std::f64::consts::LN_2).exp_m1()).ln_1p() / std::f64::consts::LN_2
    }

    #[inline]
    fn deriv(&self, x: f64) -> f64 {
        let t = x.exp2();
        self.r * t / (1.0 - self.r + self.r * t)
    }

    /// `x` with `g'(x) = d`, clipped to `[0, cap]`; only meaningful for a
    /// strictly monotone derivative (`r != 1`).
    fn inv_deriv(&self, d: f64) -> f64 {
        let t = d * (1.0 - self.r) / (self.r * (1.0 - d));
        if !(t > 1.0) {
            return 0.0;
        }
        t.log2().min(self.cap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SliceOptimum {
    /// `Σ g_i(x_i)`, unsigned.
    pub value: f64,
    pub x: Vec<f64>,
}

const BUDGET_TOL: f64 = 1e-12;
const WATERFILL_ITERS: usize = 200;
const FREE_GRID: usize = 24;
const GOLDEN_ITERS: usize = 60;

/// Maximizes `sign · Σ g_i(x_i)` subject to `Σ x_i = budget`,
/// `0 <= x_i <= cap_i`. `None` if the budget is outside `[0, Σ cap]`.
pub(crate) fn optimize(pieces: &[Piece], sign: f64, budget: f64) -> Option<SliceOptimum> {
    let total_cap: f64 = pieces.iter().map(|p| p.cap).sum();
    if budget < -BUDGET_TOL || budget > total_cap + BUDGET_TOL {
        return None;
    }
    let budget = budget.clamp(0.0, total_cap);
    let (concave, rest): (Vec<usize>, Vec<usize>) = (0..pieces.len()).partition(|&i| sign * (pieces[i].r - 1.0) > 0.0);
    let conc_cap: f64 = concave.iter().map(|&i| pieces[i].cap).sum();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| {
        let value: f64 = pieces.iter().zip(&x).map(|(p, &xi)| p.value(xi)).sum();
        if best.as_ref().is_none_or(|(v, _)| sign * value > sign * *v) {
            best = Some((value, x));
        }
    };

    // `free == None` enumerates pure endpoint assignments.
    let frees = std::iter::once(None).chain(rest.iter().copied().map(Some));
    for free in frees {
        let others: Vec<usize> = rest.iter().copied().filter(|&i| Some(i) != free).collect();
        for mask in 0u64..(1u64 << others.len()) {
            let mut x = vec![0.0; pieces.len()];
            let mut fixed = 0.0;
            for (bit, &i) in others.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    x[i] = pieces[i].cap;
                    fixed += pieces[i].cap;
                }
            }
            let rem = budget - fixed;
            match free {
                None => {
                    if rem < -BUDGET_TOL || rem > conc_cap + BUDGET_TOL {
                        continue;
                    }
                    waterfill(pieces, &concave, sign, rem.clamp(0.0, conc_cap), &mut x);
                    consider(x);
                }
                Some(j) => {
                    let lo = (rem - conc_cap).max(0.0);
                    let hi = rem.min(pieces[j].cap);
                    if lo > hi + BUDGET_TOL {
                        continue;
                    }
                    let hi = hi.max(lo);
                    let eval = |xj: f64, x: &mut Vec<f64>| -> f64 {
                        x[j] = xj;
                        waterfill(pieces, &concave, sign, (rem - xj).clamp(0.0, conc_cap), x);
                        sign * (pieces[j].value(xj) + concave.iter().map(|&i| pieces[i].value(x[i])).sum::<f64>())
                    };
                    let xj = golden_max(lo, hi, |xj| eval(xj, &mut x.clone()));
                    eval(xj, &mut x);
                    consider(x);
                }
            }
        }
    }
    best.map(|(value, x)| SliceOptimum { value, x })
}

/// Water-fills `budget` over the given concave (under `sign`) pieces,
/// writing their coordinates into `x`.
fn waterfill(pieces: &[Piece], idx: &[usize], sign: f64, budget: f64, x: &mut [f64]) {
    if idx.is_empty() {
        return;
    }
    let cap: f64 = idx.iter().map(|&i| pieces[i].cap).sum();
    if budget >= cap {
        idx.iter().for_each(|&i| x[i] = pieces[i].cap);
        return;
    }
    if budget <= 0.0 {
        idx.iter().for_each(|&i| x[i] = 0.0);
        return;
    }
    // Signed derivative s·g' is decreasing on each piece.
    let at = |mu: f64, i: usize| -> f64 {
        let p = &pieces[i];
        if sign * p.deriv(0.0) <= mu {
            0.0
        } else if sign * p.deriv(p.cap) >= mu {
            p.cap
        } else {
            p.inv_deriv(sign * mu)
        }
    };
    let mut lo = idx
        .iter()
        .map(|&i| sign * pieces[i].deriv(pieces[i].cap))
        .fold(f64::INFINITY, f64::min);
    let mut hi = idx
        .iter()
        .map(|&i| sign * pieces[i].deriv(0.0))
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..WATERFILL_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let used: f64 = idx.iter().map(|&i| at(mid, i)).sum();
        if used > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    idx.iter().for_each(|&i| x[i] = at(mu, i));
    // Put the rounding residual on a piece with room for it.
    let mut residual = budget - idx.iter().map(|&i| x[i]).sum::<f64>();
    for &i in idx {
        if residual == 0.0 {
            break;
        }
        let new = (x[i] + residual).clamp(0.0, pieces[i].cap);
        residual -= new - x[i];
        x[i] = new;
    }
}

/// Maximizes a 1-D function on `[lo, hi]`: a uniform scan, then golden
/// section inside the bracket around the best sample.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(lo: f64, hi: f64, mut f: F) -> f64 {
    grid_golden_max(lo, hi, FREE_GRID, &mut f)
}

pub(crate) fn grid_golden_max<F: FnMut(f64) -> f64>(lo: f64, hi: f64, grid: usize, f: &mut F) -> f64 {
    if !(hi > lo) {
        return lo;
    }
    let step = (hi - lo) / grid as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=grid {
        let v = f(lo + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let best_x = lo + step * best_i as f64;
    let mut a = (best_x - step).max(lo);
    let mut b = (best_x + step).min(hi);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // The scan point itself may beat the refined one on a kink.
    if f(mid) >= best_v {
        mid
    } else {
        best_x
    }
}
