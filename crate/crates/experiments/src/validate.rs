//! Self-check suite: algebraic identities, rate-formula properties and
//! covariance moments, each reported as observed value versus tolerance.

use num_complex::Complex64;
use relaysec::beamforming::nonselected_effective_vector;
use relaysec::numerics::inner_product;
use relaysec::protocol::{
    bilinear2, dissolution_factor, dissolution_residual, simulate_signals, simulate_signals_noiseless,
    DissolutionFactor,
};
use relaysec::rates::{
    asymptotic_second_hop, bob_pair_rate_exact, bob_pair_rate_lb, bob_pair_rate_lb_asym, secrecy_rate,
};
use relaysec::rng::{domain, trial_stream};
use relaysec::{
    compute_beamformers, effective_link, sample_channel, BeamformSet, ChannelRealization, Error, RateBreakdown,
    RateMode, SymbolBlock, SymbolMode, SymbolPair, SystemConfig,
};
use serde::Serialize;
use serde_json::json;

use crate::args::ExperimentSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
    /// How `observed` is compared with `tolerance`.
    pub relation: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn below(name: &'static str, observed: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            observed,
            tolerance,
            relation: "observed < tolerance",
            passed: observed < tolerance,
            detail,
        }
    }

    fn at_least(name: &'static str, observed: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            observed,
            tolerance,
            relation: "observed >= tolerance",
            passed: observed >= tolerance,
            detail,
        }
    }
}

/// Channel draw `index` of the validation stream with its beamformers,
/// redrawing singular selections.
pub fn draw(cfg: &SystemConfig, index: u64) -> (ChannelRealization, BeamformSet) {
    let mut rng = trial_stream(cfg.seed, domain::CHANNEL, index);
    loop {
        let ch = sample_channel(cfg, &mut rng);
        if let Ok(bs) = compute_beamformers(&ch) {
            return (ch, bs);
        }
    }
}

fn symbols(cfg: &SystemConfig, index: u64) -> SymbolBlock {
    SymbolBlock::sample(
        cfg,
        SymbolMode::Gaussian,
        &mut trial_stream(cfg.seed, domain::SYMBOLS, index),
    )
}

pub fn nulling_check(cfg: &SystemConfig, draws: u64) -> Check {
    let worst = (0..draws)
        .map(|t| draw(cfg, t).1.max_nulling_residual())
        .fold(0.0, f64::max);
    Check::below(
        "zf_nulling",
        worst,
        1e-9,
        format!("max |h'_(l,j)|, l != j, over {draws} draws"),
    )
}

/// Largest relative residual of the dissolution identity over every symbol
/// pair. `corrupt` adds one to each factor as a negative control.
pub fn dissolution_check(cfg: &SystemConfig, draws: u64, corrupt: bool) -> Check {
    let mut worst = 0.0f64;
    let mut degenerate = 0u64;
    for t in 0..draws {
        let (ch, bs) = draw(cfg, t);
        let link = effective_link(&bs, &ch, cfg);
        let sym = symbols(cfg, t);
        for relay in 0..cfg.l {
            for index in 0..cfg.m {
                match dissolution_factor(&link, &sym, SymbolPair { relay, index }) {
                    Ok(mut df) => {
                        if corrupt {
                            df = DissolutionFactor {
                                beta: df.beta + 1.0,
                                ..df
                            };
                        }
                        worst = worst.max(dissolution_residual(&link, &sym, &df));
                    }
                    Err(_) => degenerate += 1,
                }
            }
        }
    }
    Check::below(
        "dissolution_identity",
        worst,
        1e-12,
        format!(
            "max relative residual over {draws} draws x {} pairs; {degenerate} degenerate pairs skipped{}",
            cfg.l * cfg.m,
            if corrupt { "; beta perturbed by +1" } else { "" }
        ),
    )
}

/// Bilinear product of the intended and interference directions relative to
/// their magnitudes.
pub fn orthogonality_check(cfg: &SystemConfig, draws: u64) -> Check {
    let mut worst = 0.0f64;
    for t in 0..draws {
        let (ch, bs) = draw(cfg, t);
        let link = effective_link(&bs, &ch, cfg);
        let sym = symbols(cfg, t);
        let pair = SymbolPair {
            relay: (t as usize) % cfg.l,
            index: (t as usize) % cfg.m,
        };
        let Ok(tr) = simulate_signals_noiseless(&bs, &link, &ch, &sym, pair) else {
            continue;
        };
        let scale =
            tr.intended[0].norm() * tr.interference[0].norm() + tr.intended[1].norm() * tr.interference[1].norm();
        worst = worst.max(bilinear2(&tr.intended, &tr.interference).norm() / scale);
    }
    Check::below(
        "orthogonality",
        worst,
        1e-14,
        format!("max |u1 v1 + u2 v2| / (|u1||v1| + |u2||v2|) over {draws} draws"),
    )
}

/// Smallest `exact - lower bound` destination pair-rate margin over draws
/// and the SNR grid.
pub fn dominance_check(cfg: &SystemConfig, draws: u64, grid_db: &[f64]) -> Check {
    let mut worst = f64::INFINITY;
    for t in 0..draws {
        let (ch, bs) = draw(cfg, t);
        for &db in grid_db {
            let c = cfg.with_snr_db(db);
            let link = effective_link(&bs, &ch, &c);
            worst = worst.min(bob_pair_rate_exact(&link, &c) - bob_pair_rate_lb(&link, &c));
        }
    }
    Check::at_least(
        "bound_dominance",
        worst,
        -1e-9,
        format!(
            "min (exact - lower bound) destination pair rate over {draws} draws x {} SNR points",
            grid_db.len()
        ),
    )
}

/// Eavesdropper pair rates, selected then non-selected, in `mode`.
pub fn eve_pair_rates(
    ch: &ChannelRealization,
    bs: &BeamformSet,
    cfg: &SystemConfig,
    mode: RateMode,
) -> Result<Vec<f64>, Error> {
    let link = effective_link(bs, ch, cfg);
    let rb: RateBreakdown = secrecy_rate(ch, bs, &link, cfg, mode)?;
    Ok(rb.r_sel.iter().chain(&rb.r_nonsel).map(|r| 2.0 * r).collect())
}

/// Per-relay flags: true when the relay is inside the regime where its
/// exact rate has reached its high-SNR limit at 50 dB (always true for
/// selected relays).
pub fn high_snr_regime(ch: &ChannelRealization, bs: &BeamformSet, l: usize) -> Vec<bool> {
    let g = asymptotic_second_hop(bs, ch);
    (0..l)
        .map(|_| true)
        .chain(ch.non_selected().into_iter().map(|r| {
            let h = nonselected_effective_vector(bs, r).expect("non-selected relay");
            let cos2 = inner_product(&h, &g).expect("same length").norm_sqr() / (h.norm_sq() * g.norm_sq());
            cos2 <= 0.95 && bs.broadcast_gain(r).norm_sqr() >= 0.1
        }))
        .collect()
}

/// Largest pair-rate change between two SNRs over relays in the high-SNR
/// regime, with the all-relay maximum and outside-regime count as detail.
pub fn flatness_check(cfg: &SystemConfig, draws: u64) -> Check {
    let (lo, hi) = (cfg.with_snr_db(50.0), cfg.with_snr_db(70.0));
    let (mut worst, mut worst_all, mut outside, mut total) = (0.0f64, 0.0f64, 0usize, 0usize);
    for t in 0..draws {
        let (ch, bs) = draw(cfg, t);
        let (Ok(a), Ok(b)) = (
            eve_pair_rates(&ch, &bs, &lo, RateMode::Exact),
            eve_pair_rates(&ch, &bs, &hi, RateMode::Exact),
        ) else {
            continue;
        };
        for ((x, y), inside) in a.iter().zip(&b).zip(high_snr_regime(&ch, &bs, cfg.l)) {
            let d = (x - y).abs();
            worst_all = worst_all.max(d);
            total += 1;
            if inside {
                worst = worst.max(d);
            } else {
                outside += 1;
            }
        }
    }
    Check::below(
        "power_flatness",
        worst,
        0.02,
        format!(
            "max |rate(50 dB) - rate(70 dB)| (bits/pair) over relays in the high-SNR regime; \
             {outside} of {total} relay-draws outside it; max over all relay-draws {worst_all}"
        ),
    )
}

/// Largest gap between exact eavesdropper rates at 80 dB and their limits
/// at large `m`, over relays in the high-SNR regime.
pub fn convergence_check(cfg: &SystemConfig, draws: u64) -> Check {
    let big = SystemConfig { m: 1000, ..cfg.clone() }.with_snr_db(80.0);
    let (mut worst, mut worst_all, mut outside) = (0.0f64, 0.0f64, 0usize);
    for t in 0..draws {
        let (ch, bs) = draw(&big, t);
        let (Ok(a), Ok(b)) = (
            eve_pair_rates(&ch, &bs, &big, RateMode::Exact),
            eve_pair_rates(&ch, &bs, &big, RateMode::Asymptotic),
        ) else {
            continue;
        };
        for ((x, y), inside) in a.iter().zip(&b).zip(high_snr_regime(&ch, &bs, cfg.l)) {
            let d = (x - y).abs();
            worst_all = worst_all.max(d);
            if inside {
                worst = worst.max(d);
            } else {
                outside += 1;
            }
        }
    }
    Check::below(
        "convergence",
        worst,
        0.02,
        format!(
            "max |exact(80 dB) - limit| (bits/pair) at m=1000 over relays in the high-SNR regime; \
             {outside} relay-draws outside it; max over all {worst_all}"
        ),
    )
}

/// Destination lower bound against its high-SNR form at 70 dB.
pub fn lb_convergence_check(cfg: &SystemConfig, draws: u64) -> Check {
    let c = cfg.with_snr_db(70.0);
    let worst = (0..draws)
        .map(|t| {
            let (ch, bs) = draw(&c, t);
            let link = effective_link(&bs, &ch, &c);
            (bob_pair_rate_lb(&link, &c) - bob_pair_rate_lb_asym(&bs, &ch, &c)).abs()
        })
        .fold(0.0, f64::max);
    Check::below(
        "lower_bound_convergence",
        worst,
        0.02,
        format!("max |lb - lb_asym| at 70 dB over {draws} draws"),
    )
}

/// Sample variance of the first destination sample against the closed-form
/// diagonal, and the normalized cross-moment of the two destination samples.
pub fn covariance_checks(cfg: &SystemConfig, samples: u64) -> [Check; 2] {
    let c = cfg.with_snr_db(10.0);
    let (ch, bs) = draw(&c, 0);
    let link = effective_link(&bs, &ch, &c);
    let pair = SymbolPair::FIRST;
    let mut sym_rng = trial_stream(c.seed, domain::SYMBOLS, u64::MAX);
    let mut noise_rng = trial_stream(c.seed, domain::NOISE, u64::MAX);

    let mut var_sum = 0.0;
    let mut used = 0u64;
    for _ in 0..samples {
        let sym = SymbolBlock::sample(&c, SymbolMode::Gaussian, &mut sym_rng);
        if let Ok(tr) = simulate_signals(&bs, &link, &ch, &sym, pair, &c, &mut noise_rng) {
            var_sum += tr.y1.norm_sqr();
            used += 1;
        }
    }
    let expected = 2.0 * c.m as f64 * c.power() * link.rho_sq() + c.sigma2 * link.n0;
    let rel = (var_sum / used as f64 / expected - 1.0).abs();
    let variance = Check::below(
        "covariance_diagonal",
        rel,
        0.01,
        format!("|E|y1|^2 / (2mP rho^2 + sigma2 N0) - 1| over {used} symbol draws at 10 dB"),
    );

    let mode = SymbolMode::Truncated { pair };
    let (mut sum, mut sq, mut p1, mut p2) = (Complex64::new(0.0, 0.0), 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let sym = SymbolBlock::sample(&c, mode, &mut sym_rng);
        let tr = simulate_signals(&bs, &link, &ch, &sym, pair, &c, &mut noise_rng).expect("truncated symbol");
        let prod = tr.y1 * tr.y2.conj();
        sum += prod;
        sq += prod.norm_sqr();
        p1 += tr.y1.norm_sqr();
        p2 += tr.y2.norm_sqr();
    }
    let n = samples as f64;
    let mean = sum / n;
    let se = ((sq / n - mean.norm_sqr()) / n).sqrt();
    let z = mean.norm() / se;
    let corr = mean.norm() / ((p1 / n) * (p2 / n)).sqrt();
    let cross = Check::below(
        "covariance_off_diagonal",
        z,
        5.0,
        format!(
            "|mean(y1 y2*)| in standard errors over {samples} truncated-symbol draws; normalized correlation {corr}"
        ),
    );
    [variance, cross]
}

/// Asymptotic-mode draws that hit the parallel-vector degeneracy.
pub fn parallel_resample_check(cfg: &SystemConfig, draws: u64) -> Check {
    let c = cfg.with_snr_db(40.0);
    let hits = (0..draws)
        .filter(|&t| {
            let (ch, bs) = draw(&c, t);
            let link = effective_link(&bs, &ch, &c);
            matches!(
                secrecy_rate(&ch, &bs, &link, &c, RateMode::Asymptotic),
                Err(Error::ParallelVectors)
            )
        })
        .count();
    Check::below(
        "parallel_vectors",
        hits as f64 / draws as f64,
        1e-3,
        format!("{hits} of {draws} asymptotic-mode draws hit the parallel-vector degeneracy"),
    )
}

/// Runs every check on each configuration. Returns the JSON report and
/// whether all checks passed.
pub fn run_validate(spec: &ExperimentSpec) -> (String, bool) {
    let draws = spec.trials;
    let mut all_passed = true;
    let mut configs = Vec::new();
    for cfg in spec.configs() {
        let mut checks = vec![
            nulling_check(&cfg, draws),
            dissolution_check(&cfg, draws.min(10_000), spec.corrupt_beta),
            orthogonality_check(&cfg, draws),
            dominance_check(&cfg, draws, &spec.snr_grid_db),
            flatness_check(&cfg, draws.min(1000)),
            convergence_check(&cfg, draws.min(1000)),
            lb_convergence_check(&cfg, draws.min(1000)),
            parallel_resample_check(&cfg, draws),
        ];
        checks.extend(covariance_checks(&cfg, 100_000));
        all_passed &= checks.iter().all(|c| c.passed);
        configs.push(json!({ "k": cfg.k, "l": cfg.l, "checks": checks }));
    }
    let doc = json!({
        "spec": spec.describe().lines().collect::<Vec<_>>(),
        "passed": all_passed,
        "configs": configs,
    });
    (serde_json::to_string_pretty(&doc).unwrap() + "\n", all_passed)
}
