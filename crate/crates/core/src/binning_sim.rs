//! Exact desk-scale model of typical-set binning.
//!
//! Weakly typical `k`-bit sequences are grouped by Hamming weight, each
//! class is shuffled with a seeded stream and cut into bins of `B`
//! sequences. The bin index is the public message `m_p`, the position in
//! the bin the confidential one `m_s`. A short final slice of a class is a
//! leftover bin: its members, like atypical sequences, make the encoder
//! declare an error on the confidential message.
//!
//! Eve is handed `m_p` (or the error flag) and estimates the source block.
//! Her optimal Hamming estimator given an observation is the per-coordinate
//! probability-weighted majority, so every quantity is computed exactly.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::info_math::binary_entropy;
use crate::mmf_model::SeededRng;
use crate::{Error, Result};

/// Largest blocklength enumerated exactly.
pub const MAX_BLOCKLENGTH: usize = 24;

/// A `k`-bit block; coordinate `j` is bit `j`.
pub type Sequence = u32;

const ATYPICAL: u32 = u32::MAX;
const LEFTOVER: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub k: usize,
    /// `P(S = 1)`.
    pub p: f64,
    /// Confidential bits per source symbol; sets `B = round(2^(k rs'))`.
    pub rs_prime: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl BinningConfig {
    pub fn new(k: usize, p: f64, rs_prime: f64, epsilon: f64, seed: u64) -> Result<Self> {
        let c = Self {
            k,
            p,
            rs_prime,
            epsilon,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("blocklength k must be positive".into()));
        }
        if self.k > MAX_BLOCKLENGTH {
            return Err(Error::BudgetExceeded {
                k: self.k,
                max: MAX_BLOCKLENGTH,
            });
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Domain {
                name: "p",
                value: self.p,
                domain: "[0, 1]",
            });
        }
        if !(self.rs_prime > 0.0 && self.rs_prime.is_finite()) {
            return Err(Error::Domain {
                name: "rs_prime",
                value: self.rs_prime,
                domain: "(0, inf)",
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain {
                name: "epsilon",
                value: self.epsilon,
                domain: "(0, inf]",
            });
        }
        Ok(())
    }

    /// `2^(k rs')` before rounding.
    pub fn exact_bin_size(&self) -> f64 {
        (self.k as f64 * self.rs_prime).exp2()
    }

    /// `round(2^(k rs'))`, at least one.
    pub fn bin_size(&self) -> usize {
        let b = self.exact_bin_size().round();
        if b >= usize::MAX as f64 {
            usize::MAX
        } else {
            (b as usize).max(1)
        }
    }

    pub fn prob_of_weight(&self, w: usize) -> f64 {
        self.p.powi(w as i32) * (1.0 - self.p).powi((self.k - w) as i32)
    }
}

/// One full bin: `B` sequences of a common weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bin {
    pub weight: usize,
    pub members: Vec<Sequence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    config: BinningConfig,
    bin_size: usize,
    typical_weights: Vec<usize>,
    bins: Vec<Bin>,
    /// Short final slices, one per typical class that has one.
    leftovers: Vec<Bin>,
    /// Per sequence: flat position `m_p · B + m_s`, or a flag.
    index: Vec<u32>,
}

/// Encoder output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoded {
    Message { m_s: usize, m_p: usize },
    Atypical,
    LeftoverError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Eve's minimum expected per-symbol Hamming distortion given `m_p`.
    pub eve_distortion: f64,
    /// Probability that Bob cannot recover the block.
    pub bob_error: f64,
    pub bin_count: usize,
    pub leftover_mass: f64,
    pub atypical_mass: f64,
    pub bin_size: usize,
    /// `2^(k rs')` before rounding.
    pub exact_bin_size: f64,
    /// `min(p, 1 - p)`.
    pub delta: f64,
}

/// Weights whose sequences are weakly typical:
/// `|-(1/k) log2 P(s) - H(S)| <= epsilon`.
pub fn typical_set(k: usize, p: f64, epsilon: f64) -> Result<Vec<usize>> {
    let cfg = BinningConfig::new(k, p, 1.0, epsilon, 0)?;
    let h = binary_entropy(p)?;
    let weights: Vec<usize> = (0..=k)
        .filter(|&w| {
            let prob = cfg.prob_of_weight(w);
            prob > 0.0 && (-prob.log2() / k as f64 - h).abs() <= epsilon
        })
        .collect();
    if weights.is_empty() {
        return Err(Error::EmptyTypicalSet { k, epsilon });
    }
    Ok(weights)
}

/// All `k`-bit sequences of weight `w`, ascending.
fn class(k: usize, w: usize) -> Vec<Sequence> {
    (0..1u32 << k).filter(|s| s.count_ones() as usize == w).collect()
}

/// Builds the codebook. Class `w` is shuffled with stream `w` of the seed,
/// so bins of size `2B` are unions of consecutive bins of size `B`.
pub fn build_codebook(config: &BinningConfig) -> Result<Codebook> {
    config.validate()?;
    let k = config.k;
    let typical_weights = typical_set(k, config.p, config.epsilon)?;
    let bin_size = config.bin_size();
    let mut bins = Vec::new();
    let mut leftovers = Vec::new();
    let mut index = vec![ATYPICAL; 1usize << k];
    for &w in &typical_weights {
        let mut members = class(k, w);
        members.shuffle(&mut SeededRng::new(config.seed, w as u64));
        let mut chunks = members.chunks_exact(bin_size);
        for chunk in &mut chunks {
            let base = (bins.len() * bin_size) as u32;
            for (m_s, &s) in chunk.iter().enumerate() {
                index[s as usize] = base + m_s as u32;
            }
            bins.push(Bin {
                weight: w,
                members: chunk.to_vec(),
            });
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            rest.iter().for_each(|&s| index[s as usize] = LEFTOVER);
            leftovers.push(Bin {
                weight: w,
                members: rest.to_vec(),
            });
        }
    }
    if bins.is_empty() {
        return Err(Error::NoFullBin { bin_size });
    }
    Ok(Codebook {
        config: *config,
        bin_size,
        typical_weights,
        bins,
        leftovers,
        index,
    })
}

impl Codebook {
    pub fn config(&self) -> &BinningConfig {
        &self.config
    }

    pub fn bin_size(&self) -> usize {
        self.bin_size
    }

    pub fn typical_weights(&self) -> &[usize] {
        &self.typical_weights
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn leftovers(&self) -> &[Bin] {
        &self.leftovers
    }

    pub fn encode(&self, s: Sequence) -> Encoded {
        match self.index.get(s as usize) {
            None | Some(&ATYPICAL) => Encoded::Atypical,
            Some(&LEFTOVER) => Encoded::LeftoverError,
            Some(&pos) => Encoded::Message {
                m_s: pos as usize % self.bin_size,
                m_p: pos as usize / self.bin_size,
            },
        }
    }

    pub fn decode(&self, m_s: usize, m_p: usize) -> Option<Sequence> {
        self.bins.get(m_p)?.members.get(m_s).copied()
    }

    /// Text dump: one full bin per line as space-separated bitstrings
    /// (coordinate 0 first), then `# leftover` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        let c = &self.config;
        writeln!(
            out,
            "# k={} p={} rs_prime={} epsilon={} seed={} bin_size={} bins={}",
            c.k,
            c.p,
            c.rs_prime,
            c.epsilon,
            c.seed,
            self.bin_size,
            self.bins.len()
        )?;
        let line = |members: &[Sequence]| -> String {
            members.iter().map(|&s| bitstring(s, c.k)).collect::<Vec<_>>().join(" ")
        };
        for bin in &self.bins {
            writeln!(out, "{}", line(&bin.members))?;
        }
        for bin in &self.leftovers {
            writeln!(out, "# leftover w={} {}", bin.weight, line(&bin.members))?;
        }
        Ok(())
    }
}

/// `s` as `k` characters, coordinate 0 first.
pub fn bitstring(s: Sequence, k: usize) -> String {
    (0..k).map(|j| if s >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// Eve's best estimate from an equiprobable bin: the per-coordinate
/// majority (ties to 0) and its expected per-symbol Hamming distortion.
pub fn eve_oracle(bin: &[Sequence], k: usize) -> (Sequence, f64) {
    assert!(!bin.is_empty(), "eve_oracle needs a non-empty bin");
    let ones = coordinate_counts(bin, k);
    let n = bin.len();
    let mut estimate = 0;
    let mut wrong = 0usize;
    for (j, &c) in ones.iter().enumerate() {
        if 2 * c > n {
            estimate |= 1 << j;
        }
        wrong += c.min(n - c);
    }
    (estimate, wrong as f64 / (n * k) as f64)
}

fn coordinate_counts(bin: &[Sequence], k: usize) -> Vec<usize> {
    let mut ones = vec![0usize; k];
    for &s in bin {
        let mut bits = s;
        while bits != 0 {
            ones[bits.trailing_zeros() as usize] += 1;
            bits &= bits - 1;
        }
    }
    ones
}

/// Exact distortion and error accounting for the configured scheme.
pub fn run(config: &BinningConfig) -> Result<SimResult> {
    let book = build_codebook(config)?;
    Ok(evaluate(&book))
}

/// Exact evaluation of a built codebook.
pub fn evaluate(book: &Codebook) -> SimResult {
    let cfg = &book.config;
    let k = cfg.k;
    let b = book.bin_size;

    // Full bins: P(bin) · conditional distortion, summed in bin order.
    let per_bin: Vec<f64> = book
        .bins
        .par_iter()
        .map(|bin| b as f64 * cfg.prob_of_weight(bin.weight) * eve_oracle(&bin.members, k).1)
        .collect();
    let full = per_bin.iter().sum::<f64>();

    // The error flag pools atypical classes and leftovers; its mass per
    // coordinate decides Eve's weighted majority.
    let mut flag_mass = 0.0;
    let mut flag_ones = vec![0.0; k];
    let mut atypical_mass = 0.0;
    for w in (0..=k).filter(|w| !book.typical_weights.contains(w)) {
        let pw = cfg.prob_of_weight(w);
        let size = binomial(k, w);
        atypical_mass += size * pw;
        // each coordinate is 1 in C(k-1, w-1) members of the class
        let ones = if w == 0 { 0.0 } else { binomial(k - 1, w - 1) };
        flag_ones.iter_mut().for_each(|m| *m += ones * pw);
    }
    flag_mass += atypical_mass;
    let mut leftover_mass = 0.0;
    for bin in &book.leftovers {
        let pw = cfg.prob_of_weight(bin.weight);
        leftover_mass += bin.members.len() as f64 * pw;
        for (m, c) in flag_ones.iter_mut().zip(coordinate_counts(&bin.members, k)) {
            *m += c as f64 * pw;
        }
    }
    flag_mass += leftover_mass;
    let flag: f64 = flag_ones.iter().map(|&m| m.min(flag_mass - m)).sum::<f64>() / k as f64;

    SimResult {
        eve_distortion: full + flag,
        bob_error: atypical_mass + leftover_mass,
        bin_count: book.bins.len(),
        leftover_mass,
        atypical_mass,
        bin_size: b,
        exact_bin_size: cfg.exact_bin_size(),
        delta: cfg.p.min(1.0 - cfg.p),
    }
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    /// Independent oracle: enumerate all `2^k` sequences, group them by what
    /// Eve observes, and minimize over every possible estimate per
    /// observation (i.e. over all estimator functions).
    fn exhaustive(book: &Codebook) -> (f64, f64) {
        let cfg = book.config();
        let k = cfg.k;
        let prob = |s: Sequence| cfg.prob_of_weight(s.count_ones() as usize);
        let mut groups: std::collections::BTreeMap<Option<usize>, Vec<Sequence>> = Default::default();
        let mut err = 0.0;
        for s in 0..1u32 << k {
            let key = match book.encode(s) {
                Encoded::Message { m_p, .. } => Some(m_p),
                _ => {
                    err += prob(s);
                    None
                }
            };
            groups.entry(key).or_default().push(s);
        }
        let dist = groups
            .values()
            .map(|members| {
                (0..1u32 << k)
                    .map(|t| {
                        members
                            .iter()
                            .map(|&s| prob(s) * (s ^ t).count_ones() as f64 / k as f64)
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        (dist, err)
    }

    #[test]
    fn typical_set_examples() {
        assert_eq!(typical_set(6, 0.5, 1e-3).unwrap(), (0..=6).collect::<Vec<_>>());
        assert_eq!(typical_set(10, 0.3, 0.1).unwrap(), vec![3]);
        assert_eq!(typical_set(20, 0.3, 0.15).unwrap(), vec![4, 5, 6, 7, 8]);
        assert_eq!(typical_set(8, 0.3, f64::INFINITY).unwrap(), (0..=8).collect::<Vec<_>>());
        assert!(matches!(typical_set(7, 0.3, 0.01), Err(Error::EmptyTypicalSet { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(BinningConfig::new(0, 0.3, 0.5, 0.1, 0).is_err());
        assert!(matches!(
            BinningConfig::new(25, 0.3, 0.5, 0.1, 0),
            Err(Error::BudgetExceeded { k: 25, max: 24 })
        ));
        assert!(BinningConfig::new(4, 1.2, 0.5, 0.1, 0).is_err());
        assert!(BinningConfig::new(4, 0.3, 0.0, 0.1, 0).is_err());
        assert!(BinningConfig::new(4, 0.3, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn codebook_k4_uniform() {
        let cfg = BinningConfig::new(4, 0.5, 0.5, 10.0, 1).unwrap();
        let book = build_codebook(&cfg).unwrap();
        assert_eq!(book.bin_size(), 4);
        let w2: Vec<&Bin> = book.bins().iter().filter(|b| b.weight == 2).collect();
        assert_eq!(w2.len(), 1);
        let left = book.leftovers().iter().find(|b| b.weight == 2).unwrap();
        assert_eq!(left.members.len(), 2);
    }

    #[test]
    fn codebook_invariants() {
        let cfg = BinningConfig::new(12, 0.3, 0.25, 0.2, 3).unwrap();
        let book = build_codebook(&cfg).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (m_p, bin) in book.bins().iter().enumerate() {
            assert_eq!(bin.members.len(), book.bin_size());
            for (m_s, &s) in bin.members.iter().enumerate() {
                assert_eq!(s.count_ones() as usize, bin.weight);
                assert!(seen.insert(s));
                assert_eq!(book.encode(s), Encoded::Message { m_s, m_p });
                assert_eq!(book.decode(m_s, m_p), Some(s));
            }
            // equal weight makes the conditional law of m_s exactly uniform
            let probs: Vec<f64> = bin
                .members
                .iter()
                .map(|&s| cfg.prob_of_weight(s.count_ones() as usize))
                .collect();
            let total: f64 = probs.iter().sum();
            assert!(probs.iter().all(|&q| q / total == probs[0] / total));
        }
        for bin in book.leftovers() {
            assert!(bin.members.len() < book.bin_size());
            for &s in &bin.members {
                assert!(seen.insert(s));
                assert_eq!(book.encode(s), Encoded::LeftoverError);
            }
        }
    }

    #[test]
    fn all_ones_is_atypical() {
        let cfg = BinningConfig::new(20, 0.3, 0.2, 0.05, 0).unwrap();
        let book = build_codebook(&cfg).unwrap();
        assert_eq!(book.encode((1 << 20) - 1), Encoded::Atypical);
    }

    #[test]
    fn singleton_bins_leak_everything() {
        let cfg = BinningConfig::new(6, 0.3, 1e-3, 10.0, 0).unwrap();
        assert_eq!(cfg.bin_size(), 1);
        let r = run(&cfg).unwrap();
        assert_eq!(r.eve_distortion, 0.0);
        assert_eq!(r.bob_error, 0.0);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(eve_oracle(&[0b1011], 4), (0b1011, 0.0));
        assert_eq!(eve_oracle(&[0b01, 0b10], 2), (0, 0.5));
        let (_, d) = eve_oracle(&class(4, 2), 4);
        assert_eq!(d, 0.5);
    }

    #[test]
    fn oracle_matches_all_estimators() {
        for k in 1..=6 {
            let mut rng = SeededRng::new(k as u64, 0);
            for _ in 0..20 {
                let mut pool: Vec<Sequence> = (0..1u32 << k).collect();
                pool.shuffle(&mut rng);
                let n = 1 + (rng.next_u32() as usize % pool.len());
                let bin = &pool[..n];
                let (est, d) = eve_oracle(bin, k);
                let cost = |t: Sequence| bin.iter().map(|&s| (s ^ t).count_ones() as f64).sum::<f64>() / (n * k) as f64;
                let best = (0..1u32 << k).map(cost).fold(f64::INFINITY, f64::min);
                assert!((d - best).abs() < 1e-15);
                assert!((cost(est) - best).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn run_matches_exhaustive_oracle() {
        for (k, p, rs, eps, seed) in [
            (4, 0.3, 0.5, 0.5, 7u64),
            (4, 0.5, 0.5, 10.0, 1),
            (5, 0.2, 0.4, 0.3, 2),
            (6, 0.3, 0.5, 0.2, 3),
            (6, 0.4, 0.34, 1.0, 4),
        ] {
            let cfg = BinningConfig::new(k, p, rs, eps, seed).unwrap();
            let book = build_codebook(&cfg).unwrap();
            let r = evaluate(&book);
            let (d, err) = exhaustive(&book);
            assert!(
                (r.eve_distortion - d).abs() < 1e-15,
                "{cfg:?}: {} vs {d}",
                r.eve_distortion
            );
            assert!((r.bob_error - err).abs() < 1e-15);
            assert!(r.eve_distortion <= r.delta + 1e-15);
            assert!(r.bob_error >= r.leftover_mass);
        }
    }

    #[test]
    fn no_full_bin() {
        let cfg = BinningConfig::new(6, 0.5, 1.0, 10.0, 0).unwrap();
        assert!(matches!(build_codebook(&cfg), Err(Error::NoFullBin { bin_size: 64 })));
    }

    #[test]
    fn coarser_bins_leak_less() {
        let k = 12;
        let mut prev = -1.0;
        for j in 0..=3 {
            let cfg = BinningConfig::new(k, 0.3, (j as f64).max(1e-3) / k as f64, 0.2, 5).unwrap();
            assert_eq!(cfg.bin_size(), 1 << j);
            let d = run(&cfg).unwrap().eve_distortion;
            assert!(d >= prev, "B = {}: {d} < {prev}", 1 << j);
            prev = d;
        }
    }

    #[test]
    fn text_dump() {
        let cfg = BinningConfig::new(4, 0.5, 0.5, 10.0, 1).unwrap();
        let book = build_codebook(&cfg).unwrap();
        let mut buf = Vec::new();
        book.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# k=4"));
        let bins: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(bins.len(), book.bins().len());
        assert!(bins
            .iter()
            .all(|l| l.split(' ').count() == 4 && l.split(' ').all(|s| s.len() == 4)));
        assert_eq!(bitstring(0b0001, 4), "1000");
    }

    #[test]
    fn deterministic_across_threads() {
        let cfg = BinningConfig::new(14, 0.3, 0.2, 0.15, 9).unwrap();
        let run_with = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| run(&cfg).unwrap())
        };
        assert_eq!(run_with(1), run_with(3));
    }
}
