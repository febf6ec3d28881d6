use num_complex::Complex64;
use relaysec::numerics::{CMatrix, CVector};
use relaysec::outage::{MIN_EVENTS, MIN_FIT_POINTS};
use relaysec::{
    compute_beamformers, diversity_slope, effective_link, estimate_outage, estimate_secrecy_rate, secrecy_rate,
    ChannelRealization, Error, OutageCurve, RateMode, SystemConfig,
};

fn hand_built() -> (ChannelRealization, SystemConfig) {
    let h = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8]]);
    let g = CVector::from_real(&[1.0, 2.0, 0.5]).unwrap();
    let ch = ChannelRealization::new(h, g, vec![0, 1]).unwrap();
    let cfg = SystemConfig {
        n: 2,
        k: 3,
        l: 2,
        m: 1,
        sigma2: 1.0,
        snr: 2.0,
        ..Default::default()
    };
    (ch, cfg)
}

#[test]
fn hand_built_channel_through_the_pipeline() {
    let (ch, cfg) = hand_built();
    assert_eq!(cfg.power(), 1.0);
    let bs = compute_beamformers(&ch).unwrap();
    assert_eq!(bs.max_nulling_residual(), 0.0);
    assert!((bs.broadcast_gain(2) - Complex64::new(1.4, 0.0)).norm() < 1e-15);

    let link = effective_link(&bs, &ch, &cfg);
    let alpha = 1.5f64.sqrt();
    for (pos, g) in [1.0, 2.0].into_iter().enumerate() {
        assert!((link.alpha[pos] - alpha).abs() < 1e-15);
        assert!((link.gprime[pos] - Complex64::new(g / alpha, 0.0)).norm() < 1e-15);
    }
    assert!((link.sum_abs_gprime - 3.0 / alpha).abs() < 1e-14);

    let exact = secrecy_rate(&ch, &bs, &link, &cfg, RateMode::Exact).unwrap();
    assert_eq!(exact.r_sel.len(), 2);
    assert_eq!(exact.r_nonsel.len(), 1);
    assert_eq!(exact.r_bob, exact.r_bob_exact);
    assert!(exact.r_bob_exact >= exact.r_bob_lb);
    let eve = exact
        .r_sel
        .iter()
        .chain(&exact.r_nonsel)
        .copied()
        .fold(f64::MIN, f64::max);
    assert_eq!(exact.r_eve_max, eve);
    assert_eq!(exact.r_secrecy, (exact.r_bob - eve).max(0.0));

    let asym = secrecy_rate(&ch, &bs, &link, &cfg, RateMode::Asymptotic).unwrap();
    assert_eq!(asym.r_bob, asym.r_bob_lb);
}

#[test]
fn collinear_selection_is_singular() {
    let h = CMatrix::from_real_rows(&[&[1.0, 1.0], &[2.0, 2.0], &[0.0, 1.0]]);
    let ch = ChannelRealization::new(h, CVector::from_real(&[1.0, 1.0, 1.0]).unwrap(), vec![0, 1]).unwrap();
    assert!(matches!(compute_beamformers(&ch), Err(Error::SingularChannel { .. })));
}

#[test]
fn outage_curve_is_reproducible_and_consistent() {
    let cfg = SystemConfig {
        seed: 11,
        ..Default::default()
    };
    let grid = [10.0, 20.0, 30.0];
    let a = estimate_outage(&cfg, &grid, 5000, RateMode::Exact).unwrap();
    let b = estimate_outage(&cfg, &grid, 5000, RateMode::Exact).unwrap();
    assert_eq!(a, b);
    for (p, &c) in a.pout_mc.iter().zip(&a.outage_count) {
        assert_eq!(*p, c as f64 / 5000.0);
    }
    assert!(a.pout_ub[0].is_none() && a.pout_ub[2].is_some());

    let other = estimate_outage(&SystemConfig { seed: 12, ..cfg }, &grid, 5000, RateMode::Exact).unwrap();
    assert_ne!(a.outage_count, other.outage_count);
}

#[test]
fn outage_falls_with_snr() {
    let cfg = SystemConfig::default();
    let curve = estimate_outage(&cfg, &[0.0, 20.0, 40.0], 4000, RateMode::Exact).unwrap();
    assert!(curve.pout_mc[0] > curve.pout_mc[1] && curve.pout_mc[1] > curve.pout_mc[2]);
}

#[test]
fn secrecy_means_are_ordered() {
    let cfg = SystemConfig {
        n: 3,
        k: 6,
        l: 3,
        ..Default::default()
    };
    let curve = estimate_secrecy_rate(&cfg, &[0.0, 20.0, 40.0], 3000, RateMode::Exact).unwrap();
    assert_eq!(curve.k, 6);
    for p in &curve.points {
        assert!(p.r_secrecy_mean >= 0.0);
        assert!(p.r_secrecy_mean >= p.r_bob_mean - p.r_eve_max_mean - 1e-12);
        assert!(p.r_secrecy_mean <= p.r_bob_mean);
    }
    assert!(curve
        .points
        .windows(2)
        .all(|w| w[1].r_secrecy_mean > w[0].r_secrecy_mean));
}

fn synthetic(order: f64) -> OutageCurve {
    let snr_db: Vec<f64> = (0..6).map(|i| 30.0 + 3.0 * i as f64).collect();
    let trials = 1_000_000_000_000u64;
    let pout_mc: Vec<f64> = snr_db.iter().map(|db| 10f64.powf(-order * db / 10.0)).collect();
    let outage_count = pout_mc.iter().map(|p| (p * trials as f64) as u64).collect();
    OutageCurve {
        l: 3,
        pout_ub: vec![None; snr_db.len()],
        snr_db,
        pout_mc,
        trials,
        outage_count,
        resampled: 0,
        mode: RateMode::Exact,
    }
}

#[test]
fn slope_of_a_power_law_is_its_order() {
    let est = diversity_slope(&synthetic(2.0), (30.0, 45.0)).unwrap();
    assert!((est.slope - 2.0).abs() < 1e-9);
    assert_eq!(est.used_db.len(), 6);
}

#[test]
fn slope_needs_enough_events() {
    let mut curve = synthetic(2.0);
    for c in curve.outage_count.iter_mut().skip(MIN_FIT_POINTS - 1) {
        *c = MIN_EVENTS - 1;
    }
    assert!(matches!(
        diversity_slope(&curve, (30.0, 45.0)),
        Err(Error::InsufficientData { usable: 2, required: 3 })
    ));
}
