//! Closed-form achievable rates at the destination and at every relay, and
//! their composition into a secrecy rate.
//!
//! Pair rates are in bits per symbol pair. Per-channel-use values are half
//! the pair rate.

use num_complex::Complex64;
use serde::Serialize;

use crate::beamforming::{nonselected_effective_vector, BeamformSet};
use crate::channel::{ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{inner_product, CVector};
use crate::protocol::EffectiveLink;

/// Relative threshold below which the Gram determinant of `(h'_l, g)` is
/// treated as zero.
pub const PARALLEL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Finite-SNR covariance-ratio rates.
    #[default]
    Exact,
    /// High-SNR limits: destination lower bound, relay constants.
    Asymptotic,
}

impl std::fmt::Display for RateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateMode::Exact => "exact",
            RateMode::Asymptotic => "asymptotic",
        })
    }
}

impl std::str::FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RateMode::Exact),
            "asymptotic" => Ok(RateMode::Asymptotic),
            other => Err(Error::InvalidConfig(format!(
                "unknown rate mode '{other}' (expected exact or asymptotic)"
            ))),
        }
    }
}

/// All rates of one realization, per channel use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub r_bob_exact: f64,
    pub r_bob_lb: f64,
    /// Destination rate entering the secrecy rate: `r_bob_exact` in exact
    /// mode, `r_bob_lb` in asymptotic mode.
    pub r_bob: f64,
    /// One entry per selected relay, in selection order.
    pub r_sel: Vec<f64>,
    /// One entry per non-selected relay, ascending relay index.
    pub r_nonsel: Vec<f64>,
    pub r_eve_max: f64,
    pub r_secrecy: f64,
    pub mode: RateMode,
}

/// Destination pair rate from the covariance ratio of `(y1, y2)`.
pub fn bob_pair_rate_exact(link: &EffectiveLink, cfg: &SystemConfig) -> f64 {
    let p = cfg.power();
    let m = cfg.m as f64;
    let noise = cfg.sigma2 * link.n0;
    let rho2 = link.rho_sq();
    let coherent = link.sum_abs_gprime * link.sum_abs_gprime;
    let num = (2.0 * m * p * rho2 + noise) * (2.0 * m * p * coherent + noise);
    let q = link.combining_gain();
    let den = noise * (2.0 * p * (1.0 + q) * link.interference_weight(cfg.m) + noise);
    (num / den).log2()
}

/// Destination pair-rate lower bound `log2(1 + 2 m P rho^2 / (sigma2 N0)) - 1`.
pub fn bob_pair_rate_lb(link: &EffectiveLink, cfg: &SystemConfig) -> f64 {
    let m = cfg.m as f64;
    (1.0 + 2.0 * m * cfg.power() * link.rho_sq() / (cfg.sigma2 * link.n0)).log2() - 1.0
}

/// High-SNR form of [`bob_pair_rate_lb`]: `|g_l|^2` replaces `|g'_l|^2` and
/// `N0 = 1 + sum |g_l|^2 / |h'_{l,l}|^2`.
pub fn bob_pair_rate_lb_asym(bs: &BeamformSet, ch: &ChannelRealization, cfg: &SystemConfig) -> f64 {
    let (g2, n0) = ch.selected.iter().enumerate().fold((0.0, 1.0), |(g2, n0), (p, &r)| {
        let g = ch.g[r].norm_sqr();
        (g2 + g, n0 + g / bs.selected_gain(p).norm_sqr())
    });
    let m = cfg.m as f64;
    (1.0 + 2.0 * m * cfg.power() * g2 / (cfg.sigma2 * n0)).log2() - 1.0
}

/// Pair rate leaked to the selected relay at position `pos` about the pair
/// owned by `link.owner`.
pub fn selected_pair_rate_exact(pos: usize, link: &EffectiveLink, bs: &BeamformSet, cfg: &SystemConfig) -> f64 {
    let p = cfg.power();
    let m = cfg.m as f64;
    let s2 = cfg.sigma2;
    let h2 = bs.selected_gain(pos).norm_sqr();
    let gsq: Vec<f64> = link.gprime.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = gsq.iter().sum();
    let owner = link.owner;
    let forward = 2.0 * p * h2 * link.interference_weight(cfg.m) / link.rho_sq();

    let num = (2.0 * m * p * h2 + s2).powi(2);
    let (own_power, cross) = if pos == owner {
        let others = total - gsq[owner];
        (2.0 * (m - 1.0) * p * h2, m * (m - 1.0) * others)
    } else {
        let others = total - gsq[owner] - gsq[pos];
        (2.0 * m * p * h2, m * m * others + m * (m - 1.0) * gsq[owner])
    };
    let den = s2 * (own_power + forward + s2) + 4.0 * p * p * h2 * h2 * cross / total;
    (num / den).log2()
}

/// High-SNR selected-relay pair rate `log2(1 + |g_l|^2 / sum_{j != l} |g_j|^2)`.
pub fn selected_pair_rate_asym(pos: usize, g_selected: &CVector) -> Result<f64> {
    let own = g_selected[pos].norm_sqr();
    let rest: f64 = g_selected
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != pos)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if rest <= 0.0 {
        return Err(Error::LoneRelayDegenerate(pos));
    }
    Ok((1.0 + own / rest).log2())
}

/// Pair rate at non-selected relay `relay`, which sees every beam.
pub fn nonselected_pair_rate_exact(
    relay: usize,
    bs: &BeamformSet,
    link: &EffectiveLink,
    cfg: &SystemConfig,
) -> Result<f64> {
    let h = nonselected_effective_vector(bs, relay)?;
    let p = cfg.power();
    let m = cfg.m as f64;
    let s2 = cfg.sigma2;
    let weight = |j: usize| if j == link.owner { m - 1.0 } else { m };

    let coherent: Complex64 = h.iter().sum();
    let q = coherent.norm_sqr() / link.rho_sq();
    let wh: f64 = h.iter().enumerate().map(|(j, z)| weight(j) * z.norm_sqr()).sum();
    let wg = link.interference_weight(cfg.m);
    let cross: Complex64 = h
        .iter()
        .zip(&link.gprime)
        .enumerate()
        .map(|(j, (hz, gz))| weight(j) * gz.conj() * hz)
        .sum();

    let num = (2.0 * m * p * h.norm_sq() + s2) * (2.0 * m * p * coherent.norm_sqr() + s2);
    let c7 = 2.0 * wh + 2.0 * q * wg;
    let c8 = 4.0 * q * (wg * wh - cross.norm_sqr()).max(0.0);
    let den = s2 * (p * c7 + s2) + p * p * c8;
    Ok((num / den).log2())
}

/// High-SNR non-selected pair rate
/// `log2(|h|^2 |g|^2 / (|h|^2 |g|^2 - |<h, g>|^2))`.
pub fn nonselected_pair_rate_asym(h: &CVector, g: &CVector) -> Result<f64> {
    let gram = h.norm_sq() * g.norm_sq();
    let det = gram - inner_product(h, g)?.norm_sqr();
    if det <= PARALLEL_TOLERANCE * gram {
        return Err(Error::ParallelVectors);
    }
    Ok((gram / det).log2())
}

/// Second-hop gains as they appear in the high-SNR limit of `g'`:
/// `g_l h'_{l,l} / |h'_{l,l}|`. Same magnitudes as `g`, phases aligned with
/// the end-to-end gains.
pub fn asymptotic_second_hop(bs: &BeamformSet, ch: &ChannelRealization) -> CVector {
    CVector::from_vec_unchecked(
        ch.selected
            .iter()
            .enumerate()
            .map(|(p, &r)| {
                let h = bs.selected_gain(p);
                let n = h.norm();
                if n > 0.0 {
                    ch.g[r] * h / n
                } else {
                    ch.g[r]
                }
            })
            .collect(),
    )
}

/// Computes every rate of the realization in `mode` and composes the
/// secrecy rate.
pub fn secrecy_rate(
    ch: &ChannelRealization,
    bs: &BeamformSet,
    link: &EffectiveLink,
    cfg: &SystemConfig,
    mode: RateMode,
) -> Result<RateBreakdown> {
    let r_bob_exact = 0.5 * bob_pair_rate_exact(link, cfg);
    let non_selected = ch.non_selected();
    let (r_bob_lb, r_sel, r_nonsel) = match mode {
        RateMode::Exact => {
            let sel = (0..bs.l())
                .map(|p| 0.5 * selected_pair_rate_exact(p, link, bs, cfg))
                .collect();
            let nonsel = non_selected
                .iter()
                .map(|&r| nonselected_pair_rate_exact(r, bs, link, cfg).map(|x| 0.5 * x))
                .collect::<Result<Vec<_>>>()?;
            (0.5 * bob_pair_rate_lb(link, cfg), sel, nonsel)
        }
        RateMode::Asymptotic => {
            let g = asymptotic_second_hop(bs, ch);
            let sel = (0..bs.l())
                .map(|p| selected_pair_rate_asym(p, &g).map(|x| 0.5 * x))
                .collect::<Result<Vec<_>>>()?;
            let nonsel = non_selected
                .iter()
                .map(|&r| {
                    let h = nonselected_effective_vector(bs, r)?;
                    nonselected_pair_rate_asym(&h, &g).map(|x| 0.5 * x)
                })
                .collect::<Result<Vec<_>>>()?;
            (0.5 * bob_pair_rate_lb_asym(bs, ch, cfg), sel, nonsel)
        }
    };
    let r_bob = match mode {
        RateMode::Exact => r_bob_exact,
        RateMode::Asymptotic => r_bob_lb,
    };
    let r_eve_max = r_sel.iter().chain(&r_nonsel).copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RateBreakdown {
        r_bob_exact,
        r_bob_lb,
        r_bob,
        r_sel,
        r_nonsel,
        r_eve_max,
        r_secrecy: (r_bob - r_eve_max).max(0.0),
        mode,
    })
}
