//! One function per subcommand: resolve parameters, compute, check the
//! result's invariants and build a [`Report`].

use serde::Serialize;
use serde_json::{json, Map, Value};

use rdsec::binning_sim::{build_codebook, evaluate, BinningConfig};
use rdsec::bsbcc::{self, BsbccParams};
use rdsec::info_math::{binary_entropy, lemma_tv_mi_check, perturbed_product_joint};
use rdsec::mmf_model::{
    sample_haar_unitary, sample_realization, unitarity_error, ChannelRealization, MmfParams, SeededRng,
};
use rdsec::mmf_regions::{self, alpha_bar_diag, causal_curve, check_secrecy_condition, max_rs, rp_star, CovSpectrum};
use rdsec::outage_mc::{estimate_outage, OutageQuery};

use crate::args::{BinningArgs, BsbccArgs, HaarArgs, LemmaArgs, LinkArgs, MmfCapacityArgs, MmfCurveArgs, OutageArgs};
use crate::error::CliError;
use crate::report::{num, Body, Report};

/// Slack for monotonicity and bound checks on computed curves.
const CHECK_SLACK: f64 = 1e-9;

/// A finished run: the report is written even when an invariant check
/// failed, and the violation then sets the exit status.
pub struct Outcome {
    pub report: Report,
    pub violation: Option<CliError>,
}

impl Outcome {
    fn new(report: Report, check: Result<(), CliError>) -> Self {
        Self {
            report,
            violation: check.err(),
        }
    }
}

fn config<T: Serialize>(params: &T, seed: Option<u64>) -> Value {
    let mut v = serde_json::to_value(params).expect("parameters serialize");
    if let (Some(seed), Value::Object(m)) = (seed, &mut v) {
        m.insert("seed".into(), json!(seed));
    }
    v
}

fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::invalid("steps must be at least 1"));
    }
    if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::invalid(format!(
            "rate_min = {lo} must be positive and finite"
        )));
    }
    if steps > 1 && !(hi > lo) {
        return Err(CliError::invalid(format!(
            "rate_max = {hi} must exceed rate_min = {lo}"
        )));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Non-increasing within slack, ignoring gaps.
fn check_non_increasing(values: impl Iterator<Item = Option<f64>>, what: &str) -> Result<(), CliError> {
    let mut prev = f64::INFINITY;
    for v in values.flatten() {
        if v > prev + CHECK_SLACK {
            return Err(CliError::invariant(format!("{what} increases: {v} after {prev}")));
        }
        prev = v;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BsbccResolved {
    p: f64,
    p1: f64,
    p2: f64,
    rate_min: f64,
    rate_max: f64,
    steps: usize,
}

pub fn bsbcc_curve(args: BsbccArgs) -> Result<Outcome, CliError> {
    let r = BsbccResolved {
        p: args.p.unwrap_or(0.3),
        p1: args.p1.unwrap_or(0.1),
        p2: args.p2.unwrap_or(0.2),
        rate_min: args.rate_min.unwrap_or(0.01),
        rate_max: args.rate_max.unwrap_or(0.65),
        steps: args.steps.unwrap_or(200),
    };
    let params = BsbccParams::new(r.p, r.p1, r.p2)?;
    let rates = grid(r.rate_min, r.rate_max, r.steps)?;
    let curves = bsbcc::curve(&params, &rates)?;
    let rows: Vec<Vec<Value>> = curves
        .no_causal
        .points
        .iter()
        .zip(&curves.causal.points)
        .map(|(nc, c)| {
            vec![
                json!(c.rate),
                num(nc.distortion),
                num(c.distortion),
                num(c.gamma),
                num(c.alpha_prime),
                json!(c.regime.as_str()),
            ]
        })
        .collect();

    let check =
        check_non_increasing(curves.causal.points.iter().map(|c| c.distortion), "causal distortion").and_then(|()| {
            for (nc, c) in curves.no_causal.points.iter().zip(&curves.causal.points) {
                if let (Some(a), Some(b)) = (nc.distortion, c.distortion) {
                    if b > a + CHECK_SLACK {
                        return Err(CliError::invariant(format!(
                            "causal distortion {b} exceeds {a} at rate {}",
                            c.rate
                        )));
                    }
                }
            }
            Ok(())
        });

    let report = Report {
        command: "bsbcc-curve",
        config: config(&r, None),
        metadata: vec![
            ("boundary_kink".into(), json!(bsbcc::rate_kink(&params)?)),
            ("boundary_max".into(), json!(bsbcc::rate_max(&params)?)),
        ],
        body: Body::Table {
            columns: ["rate", "d_no_causal", "d_causal", "gamma", "alpha_prime", "regime"]
                .map(String::from)
                .to_vec(),
            rows,
        },
    };
    Ok(Outcome::new(report, check))
}

#[derive(Debug, Serialize)]
struct LinkResolved {
    #[serde(rename = "M")]
    modes: usize,
    snr_db: f64,
    snre_db: f64,
    mdl_db: f64,
    p: f64,
}

impl LinkResolved {
    fn from_args(a: &LinkArgs) -> Self {
        Self {
            modes: a.modes.unwrap_or(4),
            snr_db: a.snr_db.unwrap_or(20.0),
            snre_db: a.snre_db.unwrap_or(10.0),
            mdl_db: a.mdl_db.unwrap_or(20.0),
            p: a.p.unwrap_or(0.3),
        }
    }

    fn params(&self) -> Result<MmfParams, CliError> {
        Ok(MmfParams::new(self.modes, self.snr_db, self.snre_db, self.mdl_db)?)
    }

    fn entropy(&self) -> Result<f64, CliError> {
        let h = binary_entropy(self.p)?;
        if h > 0.0 {
            Ok(h)
        } else {
            Err(CliError::invalid(format!(
                "source bias p = {} has zero entropy",
                self.p
            )))
        }
    }
}

/// The realization both fiber commands evaluate: stream 0 of the seed.
fn realization(params: &MmfParams, seed: u64) -> Result<ChannelRealization, CliError> {
    Ok(sample_realization(params, &mut SeededRng::new(seed, 0))?)
}

#[derive(Debug, Serialize)]
struct MmfCurveResolved {
    #[serde(flatten)]
    link: LinkResolved,
    steps: usize,
    rate_min: f64,
    rate_max: f64,
}

pub fn mmf_curve(args: MmfCurveArgs, seed: u64) -> Result<Outcome, CliError> {
    let link = LinkResolved::from_args(&args.link);
    let params = link.params()?;
    let h = link.entropy()?;
    let steps = args.steps.unwrap_or(200);
    let rate_max = args.rate_max.unwrap_or(1.05 * rp_star(&params) / h);
    let rate_min = args.rate_min.unwrap_or(rate_max / steps.max(1) as f64);
    let r = MmfCurveResolved {
        link,
        steps,
        rate_min,
        rate_max,
    };
    let rates = grid(r.rate_min, r.rate_max, r.steps)?;
    let real = realization(&params, seed)?;
    let curve = causal_curve(&params, &real, r.link.p, &rates)?;
    let best = max_rs(&params, &real)?;
    let m = params.modes;

    let rows = curve
        .points
        .iter()
        .map(|pt| {
            let mut row = vec![
                json!(pt.rate),
                num(pt.distortion),
                json!(pt.regime.as_str()),
                num(pt.alpha_bar),
                num(pt.rates.map(|x| x.rs)),
                num(pt.rates.map(|x| x.rp)),
            ];
            let lambdas = pt.k_used.as_ref().map(|k| k.spectrum());
            row.extend((0..m).map(|i| num(lambdas.as_ref().map(|l| l[i]))));
            row
        })
        .collect();

    let check =
        check_non_increasing(curve.points.iter().map(|p| p.distortion), "causal distortion").and_then(|()| match curve
            .points
            .iter()
            .filter_map(|p| p.distortion)
            .find(|&d| d > curve.delta + CHECK_SLACK)
        {
            Some(d) => Err(CliError::invariant(format!(
                "distortion {d} exceeds the maximum {}",
                curve.delta
            ))),
            None => Ok(()),
        });

    let mut metadata = vec![
        ("plateau_rate".into(), json!(curve.plateau_rate())),
        ("max_rate".into(), json!(curve.max_rate())),
        ("plateau_distortion".into(), json!(curve.plateau)),
        ("delta".into(), json!(curve.delta)),
        ("rs_star".into(), json!(curve.rs_star)),
        ("rs_star_diagonal".into(), json!(best.diagonal_rs)),
        ("rs_star_general".into(), json!(best.general_rs)),
        ("rp_star".into(), json!(curve.rp_star)),
        ("phi_bar".into(), json!(real.mdl().phi_bar())),
    ];
    match mmf_regions::no_causal_region(&params, real.mdl(), h, curve.delta) {
        Ok((bound, d)) => {
            metadata.push(("no_causal_rate_bound".into(), json!(bound)));
            metadata.push(("no_causal_distortion".into(), json!(d)));
        }
        Err(rdsec::Error::SecrecyConditionFails { min_phi, ratio }) => metadata.push((
            "warning".into(),
            json!(format!(
                "secrecy condition fails (min phi_bar {min_phi} >= SNR/SNRe {ratio}); no-causal plateau not guaranteed"
            )),
        )),
        Err(e) => return Err(e.into()),
    }

    let mut columns: Vec<String> = ["rate", "distortion", "regime", "alpha_bar", "rs", "rp"]
        .map(String::from)
        .to_vec();
    columns.extend((1..=m).map(|i| format!("lambda_{i}")));
    let report = Report {
        command: "mmf-curve",
        config: config(&r, Some(seed)),
        metadata,
        body: Body::Table { columns, rows },
    };
    Ok(Outcome::new(report, check))
}

pub fn mmf_capacity(args: MmfCapacityArgs, seed: u64) -> Result<Outcome, CliError> {
    let link = LinkResolved::from_args(&args.link);
    let params = link.params()?;
    let h = link.entropy()?;
    let real = realization(&params, seed)?;
    let best = max_rs(&params, &real)?;
    let rp = rp_star(&params);
    let alpha0 = alpha_bar_diag(&params, real.mdl(), &CovSpectrum::zeros(params.modes))?;

    let check = if best.general_rs < best.diagonal_rs - CHECK_SLACK {
        Err(CliError::invariant(
            "general-covariance stage regressed below the diagonal stage",
        ))
    } else if best.rs_star > rp + CHECK_SLACK {
        Err(CliError::invariant("confidential rate exceeds the sum-rate ceiling"))
    } else {
        Ok(())
    };

    let mut rec = Map::new();
    rec.insert("rp_star".into(), json!(rp));
    rec.insert("rs_star".into(), json!(best.rs_star));
    rec.insert("rs_star_diagonal".into(), json!(best.diagonal_rs));
    rec.insert("rs_star_general".into(), json!(best.general_rs));
    rec.insert("lambda_star".into(), json!(best.diagonal.lambdas()));
    rec.insert("max_rate".into(), json!(rp / h));
    rec.insert("plateau_rate".into(), json!(best.rs_star / h));
    rec.insert("source_entropy".into(), json!(h));
    rec.insert(
        "secrecy_condition".into(),
        json!(check_secrecy_condition(&params, real.mdl())),
    );
    rec.insert("alpha_bar_zero".into(), json!(alpha0.value));
    rec.insert("phi_bar".into(), json!(real.mdl().phi_bar()));
    let report = Report {
        command: "mmf-capacity",
        config: config(&link, Some(seed)),
        metadata: vec![],
        body: Body::Record(rec),
    };
    Ok(Outcome::new(report, check))
}

#[derive(Debug, Serialize)]
struct OutageResolved {
    #[serde(flatten)]
    link: LinkResolved,
    rs_prime: f64,
    rate: f64,
    alpha: f64,
    trials: u64,
}

pub fn outage(args: OutageArgs, seed: u64) -> Result<Outcome, CliError> {
    let r = OutageResolved {
        link: LinkResolved::from_args(&args.link),
        rs_prime: args.rs_prime.unwrap_or(0.1),
        rate: args.rate.unwrap_or(5.0),
        alpha: args.alpha.unwrap_or(0.5),
        trials: args.trials.unwrap_or(10_000),
    };
    let params = r.link.params()?;
    let h = r.link.entropy()?;
    let query = OutageQuery::new(r.rs_prime, r.rate, r.alpha, r.trials, seed)?;
    let est = estimate_outage(&params, &query, h)?;

    let expected = (est.p_out * (1.0 - est.p_out) / est.trials_used as f64).sqrt();
    let check = if (0.0..=1.0).contains(&est.p_out) && (est.stderr - expected).abs() <= 1e-15 {
        Ok(())
    } else {
        Err(CliError::invariant("outage estimate is inconsistent"))
    };

    let mut rec = Map::new();
    rec.insert("p_out".into(), json!(est.p_out));
    rec.insert("stderr".into(), json!(est.stderr));
    rec.insert("trials".into(), json!(est.trials_used));
    rec.insert("params".into(), serde_json::to_value(params).expect("params serialize"));
    rec.insert("query".into(), serde_json::to_value(query).expect("query serializes"));
    rec.insert("seed".into(), json!(seed));
    let report = Report {
        command: "outage",
        config: config(&r, Some(seed)),
        metadata: vec![],
        body: Body::Record(rec),
    };
    Ok(Outcome::new(report, check))
}

#[derive(Debug, Serialize)]
struct BinningResolved {
    k: usize,
    p: f64,
    rs_prime: f64,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    codebook: Option<String>,
}

pub fn binning(args: BinningArgs, seed: u64) -> Result<Outcome, CliError> {
    let r = BinningResolved {
        k: args.k.unwrap_or(16),
        p: args.p.unwrap_or(0.3),
        rs_prime: args.rs_prime.unwrap_or(0.2),
        epsilon: args.epsilon.unwrap_or(0.15),
        codebook: args.codebook.as_ref().map(|p| p.display().to_string()),
    };
    let cfg = BinningConfig::new(r.k, r.p, r.rs_prime, r.epsilon, seed)?;
    let book = build_codebook(&cfg)?;
    if let Some(path) = &args.codebook {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::new("io", format!("cannot create {}: {e}", path.display())))?;
        book.write_text(std::io::BufWriter::new(file))?;
    }
    let res = evaluate(&book);

    let check = if res.eve_distortion > res.delta + CHECK_SLACK {
        Err(CliError::invariant("eavesdropper distortion exceeds the maximum"))
    } else if res.bob_error < res.leftover_mass {
        Err(CliError::invariant("error probability below leftover mass"))
    } else {
        Ok(())
    };

    let mut rec = Map::new();
    rec.insert("k".into(), json!(cfg.k));
    rec.insert("p".into(), json!(cfg.p));
    rec.insert("rs_prime".into(), json!(cfg.rs_prime));
    rec.insert("epsilon".into(), json!(cfg.epsilon));
    rec.insert("seed".into(), json!(seed));
    rec.insert("eve_distortion".into(), json!(res.eve_distortion));
    rec.insert("bob_error".into(), json!(res.bob_error));
    rec.insert("bins".into(), json!(res.bin_count));
    rec.insert("leftover_mass".into(), json!(res.leftover_mass));
    rec.insert("atypical_mass".into(), json!(res.atypical_mass));
    rec.insert("bin_size".into(), json!(res.bin_size));
    rec.insert("exact_bin_size".into(), json!(res.exact_bin_size));
    rec.insert("delta".into(), json!(res.delta));
    let report = Report {
        command: "binning-sim",
        config: config(&r, Some(seed)),
        metadata: vec![],
        body: Body::Record(rec),
    };
    Ok(Outcome::new(report, check))
}

#[derive(Debug, Serialize)]
struct LemmaResolved {
    trials: usize,
    alphabet_sizes: Vec<usize>,
}

pub fn lemma_check(args: LemmaArgs, seed: u64) -> Result<Outcome, CliError> {
    let r = LemmaResolved {
        trials: args.trials.unwrap_or(1000),
        alphabet_sizes: args.alphabet_sizes.unwrap_or_else(|| vec![2, 3, 4, 5]),
    };
    if r.trials == 0 {
        return Err(CliError::invalid("trials must be at least 1"));
    }
    if r.alphabet_sizes.is_empty() || r.alphabet_sizes.iter().any(|&s| s < 2) {
        return Err(CliError::invalid(
            "alphabet_sizes must be a non-empty list of sizes >= 2",
        ));
    }
    let n = r.alphabet_sizes.len();
    let (mut checked, mut failures) = (0usize, 0usize);
    let mut worst: Option<(f64, usize)> = None;
    for i in 0..r.trials {
        let rows = r.alphabet_sizes[i % n];
        let cols = r.alphabet_sizes[(i / n) % n];
        let joint = perturbed_product_joint(rows, cols, &mut SeededRng::new(seed, i as u64));
        let c = lemma_tv_mi_check(&joint)?;
        if c.vacuous {
            continue;
        }
        checked += 1;
        failures += usize::from(!c.holds);
        let margin = c.bound - c.mi;
        if worst.is_none_or(|(m, _)| margin < m) {
            worst = Some((margin, i));
        }
    }

    let mut rec = Map::new();
    rec.insert("trials".into(), json!(r.trials));
    rec.insert("checked".into(), json!(checked));
    rec.insert("vacuous".into(), json!(r.trials - checked));
    rec.insert("failures".into(), json!(failures));
    rec.insert("pass".into(), json!(failures == 0));
    rec.insert("worst_margin".into(), num(worst.map(|w| w.0)));
    rec.insert("worst_trial".into(), worst.map_or(Value::Null, |w| json!(w.1)));
    let report = Report {
        command: "lemma-check",
        config: config(&r, Some(seed)),
        metadata: vec![],
        body: Body::Record(rec),
    };
    let check = match failures {
        0 => Ok(()),
        _ => Err(CliError::invariant(format!(
            "bound violated on {failures} of {checked} instances"
        ))),
    };
    Ok(Outcome::new(report, check))
}

#[derive(Debug, Serialize)]
struct HaarResolved {
    #[serde(rename = "M")]
    modes: usize,
    draws: usize,
}

/// Max-entry unitarity tolerance for the Haar check.
const HAAR_UNITARY_TOL: f64 = 1e-10;
/// Minimum tolerance on the mean of `|U₁₁|²`.
const HAAR_MEAN_TOL: f64 = 0.01;

pub fn haar_test(args: HaarArgs, seed: u64) -> Result<Outcome, CliError> {
    let r = HaarResolved {
        modes: args.modes.unwrap_or(4),
        draws: args.draws.unwrap_or(100_000),
    };
    if r.modes == 0 {
        return Err(CliError::invalid("M must be at least 1"));
    }
    if r.draws == 0 {
        return Err(CliError::invalid("draws must be at least 1"));
    }
    let m = r.modes as f64;
    let mut rng = SeededRng::new(seed, 0);
    let mut worst_unitarity = 0.0f64;
    let mut samples = Vec::with_capacity(r.draws);
    for _ in 0..r.draws {
        let u = sample_haar_unitary(r.modes, &mut rng);
        worst_unitarity = worst_unitarity.max(unitarity_error(&u));
        samples.push(u[(0, 0)].norm_sqr());
    }
    let mean = samples.iter().sum::<f64>() / r.draws as f64;
    // |U₁₁|² ~ Beta(1, M - 1): mean 1/M, variance (M - 1)/(M² (M + 1)).
    let sd = ((m - 1.0) / (m * m * (m + 1.0))).sqrt();
    let mean_tol = HAAR_MEAN_TOL.max(5.0 * sd / (r.draws as f64).sqrt());
    samples.sort_by(f64::total_cmp);
    let cdf = |x: f64| {
        if r.modes == 1 {
            f64::from(x >= 1.0)
        } else {
            1.0 - (1.0 - x).powf(m - 1.0)
        }
    };
    let ks = samples.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let n = r.draws as f64;
        acc.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    });
    let unitary_ok = worst_unitarity <= HAAR_UNITARY_TOL;
    let mean_ok = (mean - 1.0 / m).abs() <= mean_tol;

    let mut rec = Map::new();
    rec.insert("draws".into(), json!(r.draws));
    rec.insert("max_unitarity_error".into(), json!(worst_unitarity));
    rec.insert("unitarity_margin".into(), json!(HAAR_UNITARY_TOL - worst_unitarity));
    rec.insert("mean_abs_u11_sq".into(), json!(mean));
    rec.insert("expected_mean".into(), json!(1.0 / m));
    rec.insert("mean_tolerance".into(), json!(mean_tol));
    rec.insert("mean_margin".into(), json!(mean_tol - (mean - 1.0 / m).abs()));
    rec.insert("ks_statistic".into(), json!(ks));
    rec.insert("pass".into(), json!(unitary_ok && mean_ok));
    let check = if !unitary_ok {
        Err(CliError::invariant(format!(
            "unitarity error {worst_unitarity:e} above {HAAR_UNITARY_TOL:e}"
        )))
    } else if !mean_ok {
        Err(CliError::invariant(format!(
            "mean |U11|^2 = {mean} differs from 1/M by more than {mean_tol}"
        )))
    } else {
        Ok(())
    };
    let report = Report {
        command: "haar-test",
        config: config(&r, Some(seed)),
        metadata: vec![],
        body: Body::Record(rec),
    };
    Ok(Outcome::new(report, check))
}
