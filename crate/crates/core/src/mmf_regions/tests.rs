use super::*;
use crate::info_math::binary_entropy;
use crate::mmf_model::{sample_haar_unitary, sample_realization, SeededRng};
use rand::Rng;

fn reference() -> MmfParams {
    MmfParams::new(4, 20.0, 10.0, 20.0).unwrap()
}

fn draw(params: &MmfParams, seed: u64) -> ChannelRealization {
    sample_realization(params, &mut SeededRng::new(seed, 0)).unwrap()
}

fn random_spec(m: usize, rng: &mut SeededRng) -> CovSpectrum {
    CovSpectrum::new((0..m).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn random_cov(m: usize, rng: &mut SeededRng) -> HermitianCov {
    let u = sample_haar_unitary(m, rng);
    random_spec(m, rng).to_cov(&u).unwrap()
}

#[test]
fn diag_pair_examples() {
    let p = reference();
    let mdl = MdlSpectrum::flat(4);
    let zero = rate_pair_diag(&p, &mdl, &CovSpectrum::zeros(4)).unwrap();
    assert_eq!(zero.rs, 0.0);
    assert!((zero.rp - 26.632846).abs() < 1e-6);
    assert!((zero.rp - 4.0 * 101f64.log2()).abs() < 1e-12);

    let p1 = MmfParams::new(1, 20.0, 10.0, 0.0).unwrap();
    let full = rate_pair_diag(&p1, &MdlSpectrum::flat(1), &CovSpectrum::ones(1)).unwrap();
    assert!((full.rs - (101.0f64 / 11.0).log2()).abs() < 1e-12);
    assert!((full.rs - 3.1987799).abs() < 1e-6);
    assert_eq!(full.rp, 0.0);

    let r = draw(&p, 1);
    let ones = rate_pair_diag(&p, r.mdl(), &CovSpectrum::ones(4)).unwrap();
    assert_eq!(ones.rp, 0.0);
}

#[test]
fn spectrum_and_cov_validation() {
    assert!(CovSpectrum::new(vec![0.5, 1.1]).is_err());
    assert!(CovSpectrum::new(vec![-0.1]).is_err());
    let mut k = ComplexMatrix::identity(2, 2);
    k[(0, 1)] = C64::new(0.0, 0.5);
    assert!(HermitianCov::new(k.clone()).is_err());
    k[(1, 0)] = C64::new(0.0, -0.5);
    // eigenvalues 0.5 and 1.5
    assert!(HermitianCov::new(k).is_err());
    let proj = HermitianCov::project(&(ComplexMatrix::identity(2, 2) * C64::new(2.0, 0.0)));
    assert!((proj.matrix() - ComplexMatrix::identity(2, 2)).norm() < 1e-12);
}

#[test]
fn general_matches_diag() {
    let mut rng = SeededRng::new(10, 0);
    for m in [1usize, 2, 3, 4, 6] {
        let params = MmfParams::new(m, 20.0, 10.0, 20.0).unwrap();
        for _ in 0..20 {
            let r = sample_realization(&params, &mut rng).unwrap();
            let spec = random_spec(m, &mut rng);
            let d = rate_pair_diag(&params, r.mdl(), &spec).unwrap();
            let g = rate_pair_general(&params, &r, &spec.to_cov(r.psi_e()).unwrap()).unwrap();
            assert!((d.rs_raw - g.rs_raw).abs() < 1e-9);
            assert!((d.rp - g.rp).abs() < 1e-9);
        }
    }
}

#[test]
fn general_pair_endpoints() {
    let p = reference();
    let r = draw(&p, 2);
    let zero = rate_pair_general(&p, &r, &HermitianCov::zeros(4)).unwrap();
    assert!(zero.rs_raw.abs() < 1e-12);
    assert!((zero.rp - rp_star(&p)).abs() < 1e-12);
    let id = rate_pair_general(&p, &r, &HermitianCov::identity(4)).unwrap();
    let want = rp_star(&p) - eve_full(&p, r.mdl());
    assert!((id.rs_raw - want).abs() < 1e-9);
    assert!(id.rp.abs() < 1e-9);
}

#[test]
fn bob_unitary_cancels() {
    let p = reference();
    let mut rng = SeededRng::new(11, 0);
    for _ in 0..20 {
        let r = sample_realization(&p, &mut rng).unwrap();
        let r2 = r.with_psi(sample_haar_unitary(4, &mut rng)).unwrap();
        let k = random_cov(4, &mut rng);
        assert_eq!(
            rate_pair_general(&p, &r, &k).unwrap(),
            rate_pair_general(&p, &r2, &k).unwrap()
        );
    }
}

#[test]
fn sylvester_forms_agree() {
    // det(I + s Ψᵉ K Ψᵉ† Φ) against the √Φ-conjugated form.
    let p = reference();
    let mut rng = SeededRng::new(12, 0);
    for _ in 0..50 {
        let r = sample_realization(&p, &mut rng).unwrap();
        let k = random_cov(4, &mut rng);
        let phi = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            4,
            r.mdl().phi_bar().iter().map(|&x| C64::new(x, 0.0)),
        ));
        let m = ComplexMatrix::identity(4, 4)
            + r.psi_e() * k.matrix() * r.psi_e().adjoint() * &phi * C64::new(p.snre(), 0.0);
        let asym = m.determinant().re.log2();
        let (_, sym) = general_logdets(&p, &r, &k).unwrap();
        assert!((asym - sym).abs() < 1e-9);
    }
}

#[test]
fn sum_rate_ceiling() {
    let p = reference();
    let mut rng = SeededRng::new(13, 0);
    for _ in 0..100 {
        let r = sample_realization(&p, &mut rng).unwrap();
        let k = random_cov(4, &mut rng);
        let pair = rate_pair_general(&p, &r, &k).unwrap();
        let (_, eve) = general_logdets(&p, &r, &k).unwrap();
        assert!(pair.rs_raw + pair.rp <= rp_star(&p) + 1e-9);
        // the gap is exactly Eve's log-det
        assert!((rp_star(&p) - pair.rs_raw - pair.rp - eve).abs() < 1e-9);
    }
}

#[test]
fn secrecy_condition_examples() {
    let p = reference();
    let mut rng = SeededRng::new(14, 0);
    for _ in 0..50 {
        assert!(check_secrecy_condition(&p, draw(&p, rng.random()).mdl()));
    }
    let weak = MmfParams::new(2, 10.0, 13.0103, 0.0).unwrap();
    assert!(!check_secrecy_condition(&weak, &MdlSpectrum::flat(2)));
}

#[test]
fn max_rs_examples() {
    let p1 = MmfParams::new(1, 20.0, 10.0, 0.0).unwrap();
    let r1 = draw(&p1, 3);
    let best = max_rs(&p1, &r1).unwrap();
    assert!((best.rs_star - (101.0f64 / 11.0).log2()).abs() < 1e-12);
    assert_eq!(best.diagonal.lambdas(), &[1.0]);

    // every mode worse for Bob
    let bad = MmfParams::new(3, 10.0, 20.0, 0.0).unwrap();
    let rb = draw(&bad, 4);
    let best = max_rs(&bad, &rb).unwrap();
    assert_eq!(best.rs_star, 0.0);
    assert_eq!(best.diagonal.lambdas(), &[0.0, 0.0, 0.0]);

    let p = reference();
    for seed in 0..10 {
        let r = draw(&p, seed);
        let best = max_rs(&p, &r).unwrap();
        assert!(best.general_rs >= best.diagonal_rs - 1e-9);
        assert!(best.rs_star >= best.diagonal_rs);
    }
}

#[test]
fn diagonal_stage_is_global() {
    // Projected ascent from random general starts never beats stage one.
    let mut rng = SeededRng::new(15, 0);
    for (m, snr, snre, mdl) in [(3usize, 20.0, 10.0, 20.0), (2, 12.0, 15.0, 10.0), (4, 15.0, 15.0, 6.0)] {
        let p = MmfParams::new(m, snr, snre, mdl).unwrap();
        for _ in 0..4 {
            let r = sample_realization(&p, &mut rng).unwrap();
            let (_, stage1) = max_rs_diag(&p, r.mdl()).unwrap();
            let k0 = random_cov(m, &mut rng);
            let start = rate_pair_general(&p, &r, &k0).unwrap().rs_raw;
            let (_, refined) = refine_general(&p, &r, &k0).unwrap();
            assert!(refined >= start);
            assert!(refined <= stage1 + 1e-7, "{refined} > {stage1}");
        }
    }
}

#[test]
fn max_rs_monotone_in_snrs() {
    let r = draw(&reference(), 5);
    let at = |snr: f64, snre: f64| {
        let p = MmfParams::new(4, snr, snre, 20.0).unwrap();
        max_rs_diag(&p, r.mdl()).unwrap().1.max(0.0)
    };
    let mut prev = at(0.0, 10.0);
    for i in 1..=40 {
        let cur = at(i as f64, 10.0);
        assert!(cur >= prev - 1e-12);
        prev = cur;
    }
    let mut prev = at(20.0, 0.0);
    for i in 1..=40 {
        let cur = at(20.0, i as f64);
        assert!(cur <= prev + 1e-12);
        prev = cur;
    }
}

#[test]
fn no_causal_examples() {
    let p = reference();
    let mdl = draw(&p, 6).mdl().clone();
    let h = binary_entropy(0.3).unwrap();
    let (bound, d) = no_causal_region(&p, &mdl, h, 0.3).unwrap();
    assert!((bound - 30.220267).abs() < 1e-5);
    assert_eq!(d, 0.3);
    let (bound, _) = no_causal_region(&p, &mdl, 1.0, 0.5).unwrap();
    assert!((bound - 26.632846).abs() < 1e-6);

    let weak = MmfParams::new(2, 10.0, 13.0103, 0.0).unwrap();
    assert!(matches!(
        no_causal_region(&weak, &MdlSpectrum::flat(2), 1.0, 0.5),
        Err(Error::SecrecyConditionFails { .. })
    ));
}

#[test]
fn alpha_bar_examples() {
    let p = reference();
    let r = draw(&p, 7);
    let a0 = alpha_bar_diag(&p, r.mdl(), &CovSpectrum::zeros(4)).unwrap();
    let want = (rp_star(&p) - eve_full(&p, r.mdl())) / rp_star(&p);
    assert!((a0.raw - want).abs() < 1e-12);
    assert_eq!(a0.value, want.clamp(0.0, 1.0));
    assert!(matches!(
        alpha_bar_diag(&p, r.mdl(), &CovSpectrum::ones(4)),
        Err(Error::Degenerate(_))
    ));
    let g = alpha_bar(&p, &r, &Covariance::General(HermitianCov::zeros(4))).unwrap();
    assert!((g.raw - a0.raw).abs() < 1e-12);

    // Eve stronger than Bob in every mode: gamma exceeds beta, clamped.
    let bad = MmfParams::new(2, 10.0, 20.0, 0.0).unwrap();
    let a = alpha_bar_diag(&bad, &MdlSpectrum::flat(2), &CovSpectrum::new(vec![0.5, 0.5]).unwrap()).unwrap();
    assert!(a.raw < 0.0);
    assert_eq!(a.value, 0.0);

    let mut rng = SeededRng::new(16, 0);
    for _ in 0..100 {
        let s = random_spec(4, &mut rng);
        let a = alpha_bar_diag(&p, r.mdl(), &s).unwrap();
        assert!((0.0..=1.0).contains(&a.value));
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn causal_curve_shape() {
    let p = reference();
    let r = draw(&p, 42);
    for source_p in [0.3, 0.5] {
        let h = binary_entropy(source_p).unwrap();
        let hi = rp_star(&p) / h;
        let curve = causal_curve(&p, &r, source_p, &grid(0.05 * hi, 1.02 * hi, 120)).unwrap();
        assert_eq!(curve.delta, source_p);
        let mut prev = f64::INFINITY;
        for pt in &curve.points {
            match pt.regime {
                Regime::Infeasible => assert!(pt.rate * h > curve.rp_star),
                _ => {
                    let d = pt.distortion.unwrap();
                    assert!(d <= curve.delta + 1e-12);
                    assert!(d <= prev + 1e-9, "p={source_p} rate {}: {d} > {prev}", pt.rate);
                    prev = d;
                }
            }
            if pt.regime == Regime::Plateau {
                assert_eq!(pt.distortion, Some(curve.plateau));
            }
        }
    }
}

#[test]
fn causal_curve_endpoint() {
    let p = reference();
    let r = draw(&p, 8);
    let h = binary_entropy(0.3).unwrap();
    let end = rp_star(&p) / h;
    let curve = causal_curve(&p, &r, 0.3, &[end]).unwrap();
    let pt = &curve.points[0];
    assert_eq!(pt.regime, Regime::Tradeoff);
    let lambdas = pt.k_used.as_ref().unwrap().spectrum();
    assert!(lambdas.iter().all(|&l| l < 1e-9));
    let a0 = alpha_bar_diag(&p, r.mdl(), &CovSpectrum::zeros(4)).unwrap().value;
    assert!((pt.distortion.unwrap() - a0 * 0.3).abs() < 1e-9);
}

#[test]
fn causal_curve_continuous_at_plateau() {
    let p = reference();
    let r = draw(&p, 9);
    let h = 1.0;
    let best = max_rs(&p, &r).unwrap();
    let edge = best.rs_star / h;
    let curve = causal_curve(&p, &r, 0.5, &[edge * (1.0 - 1e-9), edge * (1.0 + 1e-6)]).unwrap();
    assert_eq!(curve.points[0].regime, Regime::Plateau);
    assert_eq!(curve.points[1].regime, Regime::Tradeoff);
    let gap = curve.points[0].distortion.unwrap() - curve.points[1].distortion.unwrap();
    assert!((0.0..1e-4).contains(&gap), "gap {gap}");
}

#[test]
fn causal_point_consistent_with_witness() {
    let p = reference();
    let r = draw(&p, 10);
    let h = binary_entropy(0.3).unwrap();
    let curve = causal_curve(&p, &r, 0.3, &grid(18.0, 30.0, 25)).unwrap();
    for pt in curve.points.iter().filter(|pt| pt.regime == Regime::Tradeoff) {
        let Some(Covariance::Diagonal(spec)) = &pt.k_used else {
            panic!("diagonal witness expected")
        };
        let pair = rate_pair_diag(&p, r.mdl(), spec).unwrap();
        // rate matching
        assert!((pair.rs_raw + pair.rp - pt.rate * h).abs() < 1e-8);
        assert_eq!(pt.rates, Some(pair));
    }
}

/// For two modes the rate-matching slice is a curve; scan it densely.
#[test]
fn causal_two_mode_oracle() {
    for (snr, snre, mdl, seed) in [(20.0, 10.0, 20.0, 1u64), (15.0, 14.0, 10.0, 2), (20.0, 18.0, 3.0, 3)] {
        let p = MmfParams::new(2, snr, snre, mdl).unwrap();
        let r = draw(&p, seed);
        let e = eve_gains(&p, r.mdl());
        let caps: Vec<f64> = e.iter().map(|&x| log2_1p(x)).collect();
        let (h, delta) = (binary_entropy(0.3).unwrap(), 0.3);
        let best = max_rs(&p, &r).unwrap();
        let lo_rate = best.rs_star / h;
        let hi_rate = rp_star(&p) / h;
        let rates = grid(lo_rate + 0.05 * (hi_rate - lo_rate), hi_rate, 8);
        let curve = causal_curve(&p, &r, 0.3, &rates).unwrap();
        for pt in &curve.points {
            let c = rp_star(&p) - pt.rate * h;
            let u_lo = (c - caps[1]).max(0.0);
            let u_hi = c.min(caps[0]);
            let n = 20_000;
            let mut oracle = f64::NEG_INFINITY;
            for i in 0..=n {
                let u0 = u_lo + (u_hi - u_lo) * i as f64 / n as f64;
                let u = [u0, c - u0];
                let lam: Vec<f64> = u
                    .iter()
                    .zip(&e)
                    .map(|(&x, &g)| ((x.exp2() - 1.0) / g).clamp(0.0, 1.0))
                    .collect();
                let spec = CovSpectrum::new(lam).unwrap();
                let pair = rate_pair_diag(&p, r.mdl(), &spec).unwrap();
                let a = alpha_bar_diag(&p, r.mdl(), &spec).map_or(0.0, |a| a.value);
                let d = a * delta + (1.0 - a) * d_cap(pair.rs / pt.rate, 0.7).unwrap();
                oracle = oracle.max(d);
            }
            let got = pt.distortion.unwrap();
            assert!(got >= oracle - 1e-6, "rate {}: {got} < oracle {oracle}", pt.rate);
            assert!(got <= oracle + 1e-4, "rate {}: {got} >> oracle {oracle}", pt.rate);
        }
    }
}

#[test]
fn causal_curve_validation() {
    let p = reference();
    let r = draw(&p, 11);
    assert!(causal_curve(&p, &r, 0.3, &[1.0, 0.5]).is_err());
    assert!(causal_curve(&p, &r, 0.3, &[0.0]).is_err());
    assert!(causal_curve(&p, &r, 0.0, &[1.0]).is_err());
    let far = causal_curve(&p, &r, 0.3, &[100.0]).unwrap();
    assert_eq!(far.points[0].regime, Regime::Infeasible);
    assert_eq!(far.points[0].distortion, None);
}

#[test]
fn bob_range_brackets_random_points() {
    let p = reference();
    let r = draw(&p, 12);
    let slice = EveSlice::new(&p, r.mdl());
    let mut rng = SeededRng::new(17, 0);
    for _ in 0..500 {
        let spec = random_spec(4, &mut rng);
        let (bob, eve) = diag_logdets(&p, r.mdl(), &spec).unwrap();
        let range = slice.bob_range(eve).unwrap();
        assert!(range.lo <= bob + 1e-9 && bob <= range.hi + 1e-9);
        let back = slice.spectrum_at(&range, bob);
        let (b2, e2) = diag_logdets(&p, r.mdl(), &back).unwrap();
        assert!((b2 - bob).abs() < 1e-8 && (e2 - eve).abs() < 1e-8);
    }
}
