//! Two-hop link quantities, the dissolution factor, and full signal traces.
//!
//! The traces exist for validation: the rate formulas never consume them,
//! but they let the covariance structure behind those formulas be checked by
//! simulation.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::beamforming::BeamformSet;
use crate::channel::{complex_gaussian, ChannelRealization, SystemConfig};
use crate::error::{Error, Result};

/// Relative floor on the pair's second symbol below which `beta` is refused.
pub const SYMBOL_FLOOR: f64 = 1e-12;

/// Lower magnitude cut (relative to `sqrt(P)`) used by truncated-symbol mode.
pub const TRUNCATION_FLOOR: f64 = 0.1;

/// Normalization and combining quantities of the relay link, in selection
/// order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveLink {
    /// Relay normalization `alpha_l = sqrt(|h'_{l,l}|^2 + sigma2 / (2 m P))`.
    pub alpha: Vec<f64>,
    /// End-to-end gain `g'_l = h'_{l,l} g_l / alpha_l`.
    pub gprime: Vec<Complex64>,
    /// `sqrt(sum |g'_l|^2)`.
    pub rho: f64,
    /// Noise inflation at the destination, `1 + sum |g_l|^2 / alpha_l^2`.
    pub n0: f64,
    /// `sum |g'_l|`.
    pub sum_abs_gprime: f64,
    /// Selection position of the relay whose symbol pair is traced.
    pub owner: usize,
}

impl EffectiveLink {
    /// Builds the link from per-relay normalizations, end-to-end gains and
    /// raw second-hop gains.
    pub fn from_components(alpha: Vec<f64>, gprime: Vec<Complex64>, g_selected: &[Complex64]) -> Self {
        let rho = gprime.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n0 = 1.0
            + g_selected
                .iter()
                .zip(&alpha)
                .map(|(g, a)| g.norm_sqr() / (a * a))
                .sum::<f64>();
        let sum_abs_gprime = gprime.iter().map(|z| z.norm()).sum();
        Self {
            alpha,
            gprime,
            rho,
            n0,
            sum_abs_gprime,
            owner: 0,
        }
    }

    pub fn with_owner(mut self, owner: usize) -> Self {
        assert!(owner < self.gprime.len(), "owner position out of range");
        self.owner = owner;
        self
    }

    pub fn l(&self) -> usize {
        self.gprime.len()
    }

    pub fn rho_sq(&self) -> f64 {
        self.rho * self.rho
    }

    /// Coherent-combining gain `(sum |g'_l|)^2 / rho^2`, in `[1, L]`.
    pub fn combining_gain(&self) -> f64 {
        self.sum_abs_gprime * self.sum_abs_gprime / self.rho_sq()
    }

    /// Interference weight `(m-1)|g'_owner|^2 + m sum_{others} |g'_j|^2`:
    /// power of everything except the traced pair, per unit `2P`.
    pub fn interference_weight(&self, m: usize) -> f64 {
        let m = m as f64;
        self.gprime
            .iter()
            .enumerate()
            .map(|(j, z)| {
                if j == self.owner {
                    (m - 1.0) * z.norm_sqr()
                } else {
                    m * z.norm_sqr()
                }
            })
            .sum()
    }
}

pub fn effective_link(bs: &BeamformSet, ch: &ChannelRealization, cfg: &SystemConfig) -> EffectiveLink {
    let noise_to_power = cfg.sigma2 / (2.0 * cfg.m as f64 * cfg.power());
    let g_sel: Vec<Complex64> = ch.selected.iter().map(|&r| ch.g[r]).collect();
    let (alpha, gprime): (Vec<f64>, Vec<Complex64>) = (0..bs.l())
        .map(|pos| {
            let h = bs.selected_gain(pos);
            let a = (h.norm_sqr() + noise_to_power).sqrt();
            (a, h * g_sel[pos] / a)
        })
        .unzip();
    EffectiveLink::from_components(alpha, gprime, &g_sel)
}

/// A symbol pair: selection position of the carrying relay and pair index
/// within that relay's `m` pairs. Both zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymbolPair {
    pub relay: usize,
    pub index: usize,
}

impl SymbolPair {
    pub const FIRST: SymbolPair = SymbolPair { relay: 0, index: 0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolMode {
    /// Every symbol CN(0, P).
    Gaussian,
    /// As `Gaussian`, but the second symbol of `pair` is redrawn until its
    /// magnitude is at least `TRUNCATION_FLOOR * sqrt(P)`. Gives finite
    /// moments for quantities that divide by that symbol.
    Truncated { pair: SymbolPair },
}

/// `L x 2m` block of transmit symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolBlock {
    l: usize,
    per_relay: usize,
    power: f64,
    x: Vec<Complex64>,
}

impl SymbolBlock {
    /// Builds a block from rows of `2m` symbols each.
    pub fn from_rows(rows: Vec<Vec<Complex64>>, power: f64) -> Result<Self> {
        let per_relay = rows.first().map_or(0, Vec::len);
        if per_relay == 0 || !per_relay.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "symbol rows need an even, non-zero length, got {per_relay}"
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != per_relay) {
            return Err(Error::DimensionMismatch {
                expected: per_relay,
                actual: bad.len(),
            });
        }
        Ok(Self {
            l: rows.len(),
            per_relay,
            power,
            x: rows.into_iter().flatten().collect(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(cfg: &SystemConfig, mode: SymbolMode, rng: &mut R) -> Self {
        let power = cfg.power();
        let amp = power.sqrt();
        let per_relay = 2 * cfg.m;
        let mut x: Vec<Complex64> = (0..cfg.l * per_relay).map(|_| complex_gaussian(rng) * amp).collect();
        if let SymbolMode::Truncated { pair } = mode {
            let idx = pair.relay * per_relay + 2 * pair.index + 1;
            while x[idx].norm() < TRUNCATION_FLOOR * amp {
                x[idx] = complex_gaussian(rng) * amp;
            }
        }
        Self {
            l: cfg.l,
            per_relay,
            power,
            x,
        }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn pairs_per_relay(&self) -> usize {
        self.per_relay / 2
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn row(&self, relay: usize) -> &[Complex64] {
        &self.x[relay * self.per_relay..(relay + 1) * self.per_relay]
    }

    /// `(first, second)` symbols of `pair`.
    pub fn pair(&self, pair: SymbolPair) -> (Complex64, Complex64) {
        let row = self.row(pair.relay);
        (row[2 * pair.index], row[2 * pair.index + 1])
    }

    /// Sum of all `2m` symbols carried by the relay at `relay`.
    pub fn relay_sum(&self, relay: usize) -> Complex64 {
        self.row(relay).iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissolutionFactor {
    pub beta: Complex64,
    pub pair: SymbolPair,
}

/// Noise-free destination signal of the first relay phase,
/// `sum_l g'_l sum_i x_{l,i}`.
pub fn aggregate_signal(link: &EffectiveLink, sym: &SymbolBlock) -> Complex64 {
    link.gprime.iter().enumerate().map(|(l, g)| g * sym.relay_sum(l)).sum()
}

/// Solves `g' x1 + beta g' x2 = sum_l g'_l sum_i x_{l,i}` for the pair's
/// owner gain `g'`, folding every other symbol into `beta`.
pub fn dissolution_factor(link: &EffectiveLink, sym: &SymbolBlock, pair: SymbolPair) -> Result<DissolutionFactor> {
    let (x1, x2) = sym.pair(pair);
    let floor = SYMBOL_FLOOR * sym.power().sqrt();
    let g = link.gprime[pair.relay];
    if x2.norm() < floor || (g * x2).norm() == 0.0 {
        return Err(Error::DegenerateSymbol { magnitude: x2.norm() });
    }
    let total = aggregate_signal(link, sym);
    let beta = (total - g * x1) / (g * x2);
    Ok(DissolutionFactor { beta, pair })
}

/// `|LHS - RHS| / |RHS|` of the dissolution identity.
pub fn dissolution_residual(link: &EffectiveLink, sym: &SymbolBlock, df: &DissolutionFactor) -> f64 {
    let (x1, x2) = sym.pair(df.pair);
    let g = link.gprime[df.pair.relay];
    let rhs = aggregate_signal(link, sym);
    let lhs = g * x1 + df.beta * g * x2;
    (lhs - rhs).norm() / rhs.norm()
}

/// Received signals of one symbol pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalTrace {
    /// First-use observation at every relay.
    pub z1: Vec<Complex64>,
    /// Destination, second use.
    pub y1: Complex64,
    /// Third-use observation at every relay.
    pub z2: Vec<Complex64>,
    /// Destination, fourth use, rescaled by `rho / sum |g'_l|`.
    pub y2: Complex64,
    /// `(g' x1, g' x2)`: direction carrying the intended pair.
    pub intended: [Complex64; 2],
    /// `(g' x2, -g' x1)`: direction that absorbs `beta`.
    pub interference: [Complex64; 2],
    pub beta: Complex64,
}

/// Simulates all four channel uses for `pair` with AWGN of variance
/// `cfg.sigma2` at every receiver.
#[allow(clippy::too_many_arguments)]
pub fn simulate_signals<R: Rng + ?Sized>(
    bs: &BeamformSet,
    link: &EffectiveLink,
    ch: &ChannelRealization,
    sym: &SymbolBlock,
    pair: SymbolPair,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<SignalTrace> {
    trace(bs, link, ch, sym, pair, cfg.sigma2.sqrt(), rng)
}

/// [`simulate_signals`] with every noise term set to zero.
pub fn simulate_signals_noiseless(
    bs: &BeamformSet,
    link: &EffectiveLink,
    ch: &ChannelRealization,
    sym: &SymbolBlock,
    pair: SymbolPair,
) -> Result<SignalTrace> {
    trace(
        bs,
        link,
        ch,
        sym,
        pair,
        0.0,
        &mut crate::rng::trial_stream(0, crate::rng::domain::NOISE, 0),
    )
}

fn trace<R: Rng + ?Sized>(
    bs: &BeamformSet,
    link: &EffectiveLink,
    ch: &ChannelRealization,
    sym: &SymbolBlock,
    pair: SymbolPair,
    noise_amp: f64,
    rng: &mut R,
) -> Result<SignalTrace> {
    let df = dissolution_factor(link, sym, pair)?;
    let mut noise = || {
        if noise_amp == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            complex_gaussian(rng) * noise_amp
        }
    };
    let k = ch.relay_count();
    let position: Vec<Option<usize>> = (0..k).map(|r| ch.selected.iter().position(|&s| s == r)).collect();
    let sums: Vec<Complex64> = (0..bs.l()).map(|j| sym.relay_sum(j)).collect();

    // Use 1: each beam carries its relay's symbol sum.
    let z1: Vec<Complex64> = (0..k)
        .map(|r| {
            let signal = match position[r] {
                Some(p) => bs.selected_gain(p) * sums[p],
                None => bs.heff.row(r).iter().zip(&sums).map(|(h, s)| h * s).sum(),
            };
            signal + noise()
        })
        .collect();

    // Use 2: selected relays scale by 1/alpha and forward.
    let y1 = ch
        .selected
        .iter()
        .enumerate()
        .map(|(p, &r)| ch.g[r] / link.alpha[p] * z1[r])
        .sum::<Complex64>()
        + noise();

    // Use 3: the precoded pair signal is sent along every beam.
    let (x1, x2) = sym.pair(pair);
    let g_owner = link.gprime[pair.relay];
    let composite = g_owner * x2 - df.beta * g_owner * x1;
    let tx = composite / link.rho;
    let z2: Vec<Complex64> = (0..k)
        .map(|r| {
            let gain = match position[r] {
                Some(p) => bs.selected_gain(p),
                None => bs.broadcast_gain(r),
            };
            gain * tx + noise()
        })
        .collect();

    // Use 4: phase-aligning forward so contributions add coherently.
    let y2_raw = ch
        .selected
        .iter()
        .enumerate()
        .map(|(p, &r)| {
            let gp = link.gprime[p];
            if gp.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                ch.g[r] * gp.conj() / (link.alpha[p] * gp.norm()) * z2[r]
            }
        })
        .sum::<Complex64>()
        + noise();
    let y2 = y2_raw * (link.rho / link.sum_abs_gprime);

    Ok(SignalTrace {
        z1,
        y1,
        z2,
        y2,
        intended: [g_owner * x1, g_owner * x2],
        interference: [g_owner * x2, -g_owner * x1],
        beta: df.beta,
    })
}

/// Bilinear (unconjugated) product `u1 v1 + u2 v2` of two 2-vectors.
/// The intended and interference directions are orthogonal under this form.
pub fn bilinear2(u: &[Complex64; 2], v: &[Complex64; 2]) -> Complex64 {
    u[0] * v[0] + u[1] * v[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::compute_beamformers;
    use crate::channel::sample_channel;
    use crate::rng::{domain, trial_stream};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn draw(cfg: &SystemConfig, seed: u64) -> (ChannelRealization, BeamformSet, EffectiveLink) {
        let ch = sample_channel(cfg, &mut trial_stream(seed, domain::CHANNEL, 0));
        let bs = compute_beamformers(&ch).unwrap();
        let link = effective_link(&bs, &ch, cfg);
        (ch, bs, link)
    }

    #[test]
    fn link_high_snr_limit() {
        let link = EffectiveLink::from_components(
            vec![(1.0f64 + 1e-14).sqrt(); 2],
            vec![c(1.0, 0.0); 2],
            &[c(1.0, 0.0); 2],
        );
        assert!((link.alpha[0] - 1.0).abs() < 1e-12);

        let cfg = SystemConfig {
            snr: 1e14,
            ..Default::default()
        };
        let (ch, bs, link) = draw(&cfg, 1);
        for p in 0..cfg.l {
            let h = bs.selected_gain(p).norm();
            assert!((link.alpha[p] - h).abs() < 1e-6);
            assert!((link.gprime[p].norm() - ch.g[ch.selected[p]].norm()).abs() < 1e-6);
        }
    }

    #[test]
    fn link_hand_substitution() {
        // h' = 1, g = 1, sigma2 = 2 m P (snr = 1): alpha = sqrt 2.
        let l = 3usize;
        let ch = ChannelRealization::new(
            crate::numerics::CMatrix::identity(l),
            crate::numerics::CVector::from_real(&[1.0; 3]).unwrap(),
            (0..l).collect(),
        )
        .unwrap();
        let bs = compute_beamformers(&ch).unwrap();
        let cfg = SystemConfig {
            n: l,
            k: l,
            l,
            snr: 1.0,
            ..Default::default()
        };
        let link = effective_link(&bs, &ch, &cfg);
        for p in 0..l {
            assert!((link.alpha[p] - 2f64.sqrt()).abs() < 1e-14);
            assert!((link.gprime[p].norm_sqr() - 0.5).abs() < 1e-14);
        }
        assert!((link.rho_sq() - l as f64 / 2.0).abs() < 1e-14);
        assert!((link.n0 - (1.0 + l as f64 / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn combining_gain_two_equal_relays() {
        let link = EffectiveLink::from_components(vec![1.0; 2], vec![c(1.0, 0.0); 2], &[c(1.0, 0.0); 2]);
        assert!((link.combining_gain() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn link_invariants_on_random_draws() {
        let cfg = SystemConfig::default();
        for seed in 0..100 {
            let (_, _, link) = draw(&cfg, seed);
            assert!(link.alpha.iter().all(|&a| a > 0.0));
            assert!(link.rho > 0.0 && link.n0 >= 1.0);
            assert!(link.sum_abs_gprime.powi(2) >= link.rho_sq() * (1.0 - 1e-15));
        }
    }

    #[test]
    fn beta_toy_example() {
        let link = EffectiveLink::from_components(vec![1.0; 2], vec![c(1.0, 0.0); 2], &[c(1.0, 0.0); 2]);
        let sym = SymbolBlock::from_rows(vec![vec![c(1.0, 0.0); 2]; 2], 1.0).unwrap();
        let df = dissolution_factor(&link, &sym, SymbolPair::FIRST).unwrap();
        assert!((df.beta - 3.0).norm() < 1e-15);
        assert!(dissolution_residual(&link, &sym, &df) < 1e-15);
    }

    #[test]
    fn beta_is_one_when_nothing_else_is_sent() {
        let link = EffectiveLink::from_components(vec![1.0; 2], vec![c(0.7, 0.2), c(1.0, -1.0)], &[c(1.0, 0.0); 2]);
        let (a, b) = (c(0.3, -1.2), c(-0.8, 0.4));
        let zero = c(0.0, 0.0);
        let sym = SymbolBlock::from_rows(vec![vec![a, b, zero, zero], vec![zero; 4]], 1.0).unwrap();
        let df = dissolution_factor(&link, &sym, SymbolPair::FIRST).unwrap();
        assert!((df.beta - 1.0).norm() < 1e-15);
    }

    #[test]
    fn degenerate_second_symbol_is_rejected() {
        let link = EffectiveLink::from_components(vec![1.0; 2], vec![c(1.0, 0.0); 2], &[c(1.0, 0.0); 2]);
        let sym = SymbolBlock::from_rows(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0); 2]], 1.0).unwrap();
        assert!(matches!(
            dissolution_factor(&link, &sym, SymbolPair::FIRST),
            Err(Error::DegenerateSymbol { .. })
        ));
    }

    #[test]
    fn dissolution_identity_holds_for_every_pair() {
        let cfg = SystemConfig::default();
        for seed in 0..50 {
            let (_, _, link) = draw(&cfg, seed);
            let sym = SymbolBlock::sample(&cfg, SymbolMode::Gaussian, &mut trial_stream(seed, domain::SYMBOLS, 0));
            for relay in 0..cfg.l {
                for index in 0..cfg.m {
                    let df = dissolution_factor(&link, &sym, SymbolPair { relay, index }).unwrap();
                    assert!(dissolution_residual(&link, &sym, &df) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_trace_decomposes() {
        let cfg = SystemConfig::default();
        let (ch, bs, link) = draw(&cfg, 3);
        let sym = SymbolBlock::sample(&cfg, SymbolMode::Gaussian, &mut trial_stream(3, domain::SYMBOLS, 0));
        let pair = SymbolPair { relay: 1, index: 2 };
        let tr = simulate_signals_noiseless(&bs, &link, &ch, &sym, pair).unwrap();
        let scale = tr.y1.norm().max(tr.y2.norm());
        for (i, y) in [tr.y1, tr.y2].into_iter().enumerate() {
            let model = tr.intended[i] + tr.beta * tr.interference[i];
            assert!((y - model).norm() < 1e-12 * scale);
        }
        let mag = tr.intended[0].norm() * tr.interference[0].norm() + tr.intended[1].norm() * tr.interference[1].norm();
        assert!(bilinear2(&tr.intended, &tr.interference).norm() <= 1e-14 * mag);
    }

    #[test]
    fn y1_variance_matches_first_covariance_diagonal() {
        let cfg = SystemConfig {
            snr: 10.0,
            m: 2,
            ..Default::default()
        };
        let (ch, bs, link) = draw(&cfg, 4);
        let samples = 1_000_000u64;
        let mut rng = trial_stream(4, domain::NOISE, 0);
        let mut acc = 0.0;
        for _ in 0..samples {
            let sym = SymbolBlock::sample(&cfg, SymbolMode::Gaussian, &mut rng);
            // Only y1 is needed; it does not depend on beta.
            let signal = aggregate_signal(&link, &sym);
            let relay_noise: Complex64 = ch
                .selected
                .iter()
                .enumerate()
                .map(|(p, &r)| ch.g[r] / link.alpha[p] * complex_gaussian(&mut rng) * cfg.sigma2.sqrt())
                .sum();
            let y1 = signal + relay_noise + complex_gaussian(&mut rng) * cfg.sigma2.sqrt();
            acc += y1.norm_sqr();
        }
        let _ = bs;
        let expected = 2.0 * cfg.m as f64 * cfg.power() * link.rho_sq() + cfg.sigma2 * link.n0;
        let got = acc / samples as f64;
        assert!((got / expected - 1.0).abs() < 0.01, "{got} vs {expected}");
    }

    #[test]
    fn truncated_mode_respects_floor() {
        let cfg = SystemConfig::default();
        let pair = SymbolPair { relay: 2, index: 4 };
        let mut rng = trial_stream(5, domain::SYMBOLS, 0);
        for _ in 0..2000 {
            let sym = SymbolBlock::sample(&cfg, SymbolMode::Truncated { pair }, &mut rng);
            assert!(sym.pair(pair).1.norm() >= TRUNCATION_FLOOR * cfg.power().sqrt());
        }
    }
}
