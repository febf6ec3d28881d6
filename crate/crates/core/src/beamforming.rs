//! Zero-forcing beamformers and the effective scalar gains they produce at
//! every relay.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{right_pseudo_inverse, CMatrix, CVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamformSet {
    /// Unnormalized beamformers, one column per selected relay (`N x L`).
    pub b: CMatrix,
    pub b_norms: Vec<f64>,
    /// `heff[(k, j)] = h_k . b_j / |b_j|` for every relay `k` (`K x L`).
    pub heff: CMatrix,
    /// Copy of the selection, so positions can be mapped back to relays.
    pub selected: Vec<usize>,
}

impl BeamformSet {
    pub fn l(&self) -> usize {
        self.selected.len()
    }

    /// Effective gain `h'_{j,j}` of the selected relay at position `pos`.
    pub fn selected_gain(&self, pos: usize) -> Complex64 {
        self.heff[(self.selected[pos], pos)]
    }

    /// Coherent sum `sum_j h'_{k,j}` seen by relay `k` when one signal is
    /// sent along all beams.
    pub fn broadcast_gain(&self, relay: usize) -> Complex64 {
        self.heff.row(relay).iter().sum()
    }

    /// Largest leakage `|h'_{l,j}|`, `l != j`, among selected relays.
    pub fn max_nulling_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (pos_l, &relay) in self.selected.iter().enumerate() {
            for j in 0..self.l() {
                if j != pos_l {
                    worst = worst.max(self.heff[(relay, j)].norm());
                }
            }
        }
        worst
    }
}

pub fn compute_beamformers(ch: &ChannelRealization) -> Result<BeamformSet> {
    let h_sel = ch.h.select_rows(&ch.selected);
    let b = right_pseudo_inverse(&h_sel)?;
    let l = b.cols();
    let b_norms: Vec<f64> = (0..l).map(|j| b.column(j).norm()).collect();

    let mut heff = ch.h.matmul(&b)?;
    for k in 0..heff.rows() {
        for (j, norm) in b_norms.iter().enumerate() {
            heff[(k, j)] /= norm;
        }
    }

    Ok(BeamformSet {
        b,
        b_norms,
        heff,
        selected: ch.selected.clone(),
    })
}

/// Vector `(h'_{l,1}, ..., h'_{l,L})` observed by non-selected relay `relay`.
pub fn nonselected_effective_vector(bs: &BeamformSet, relay: usize) -> Result<CVector> {
    if bs.selected.contains(&relay) {
        return Err(Error::NotANonSelectedRelay(relay));
    }
    if relay >= bs.heff.rows() {
        return Err(Error::DimensionMismatch {
            expected: bs.heff.rows(),
            actual: relay,
        });
    }
    Ok(CVector::from_vec_unchecked(bs.heff.row(relay).to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, SystemConfig};
    use crate::rng::{domain, trial_stream};
    use crate::stats::{gamma_cdf, ks_critical_value, ks_statistic};

    fn realization(rows: &[&[f64]], g: &[f64], selected: Vec<usize>) -> ChannelRealization {
        ChannelRealization::new(CMatrix::from_real_rows(rows), CVector::from_real(g).unwrap(), selected).unwrap()
    }

    #[test]
    fn identity_channel() {
        let ch = realization(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], vec![0, 1]);
        let bs = compute_beamformers(&ch).unwrap();
        assert!(bs.b.max_abs_deviation_from_identity() < 1e-15);
        assert!(bs.heff.max_abs_deviation_from_identity() < 1e-15);
    }

    #[test]
    fn diagonal_channel_gains() {
        let ch = realization(&[&[2.0, 0.0], &[0.0, 4.0]], &[1.0, 1.0], vec![0, 1]);
        let bs = compute_beamformers(&ch).unwrap();
        assert!((bs.selected_gain(0) - 2.0).norm() < 1e-14);
        assert!((bs.selected_gain(1) - 4.0).norm() < 1e-14);
    }

    #[test]
    fn random_draw_nulls_other_selected_relays() {
        let cfg = SystemConfig {
            n: 4,
            k: 10,
            l: 3,
            ..Default::default()
        };
        for t in 0..200 {
            let ch = sample_channel(&cfg, &mut trial_stream(11, domain::CHANNEL, t));
            let bs = compute_beamformers(&ch).unwrap();
            assert!(bs.max_nulling_residual() < 1e-9);
            for (j, norm) in bs.b_norms.iter().enumerate() {
                assert!(*norm > 0.0);
                let unit = bs.b.column(j).scaled(Complex64::new(1.0 / norm, 0.0));
                assert!((unit.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn nonselected_vector_errors_and_zero_row() {
        let ch = realization(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], vec![0, 1]);
        let bs = compute_beamformers(&ch).unwrap();
        assert_eq!(
            nonselected_effective_vector(&bs, 0),
            Err(Error::NotANonSelectedRelay(0))
        );

        let ch = realization(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]], &[1.0, 1.0, 1.0], vec![0, 1]);
        let bs = compute_beamformers(&ch).unwrap();
        let v = nonselected_effective_vector(&bs, 2).unwrap();
        assert_eq!(v.norm_sq(), 0.0);
    }

    #[test]
    fn nonselected_vector_matches_direct_recomputation() {
        let cfg = SystemConfig {
            n: 4,
            k: 10,
            l: 3,
            ..Default::default()
        };
        let ch = sample_channel(&cfg, &mut trial_stream(12, domain::CHANNEL, 0));
        let bs = compute_beamformers(&ch).unwrap();
        for relay in ch.non_selected() {
            let v = nonselected_effective_vector(&bs, relay).unwrap();
            for j in 0..cfg.l {
                let direct: Complex64 =
                    (0..cfg.n).map(|i| ch.h[(relay, i)] * bs.b[(i, j)]).sum::<Complex64>() / bs.b_norms[j];
                assert!((v[j] - direct).norm() < 1e-12);
            }
        }
    }

    fn effective_gain_powers(cfg: &SystemConfig, seed: u64, draws: u64) -> Vec<f64> {
        (0..draws)
            .map(|t| {
                let ch = sample_channel(cfg, &mut trial_stream(seed, domain::CHANNEL, t));
                compute_beamformers(&ch).unwrap().selected_gain(0).norm_sqr()
            })
            .collect()
    }

    #[test]
    fn square_zf_gain_is_exponential_in_shape() {
        // N = L: |h'_{l,l}|^2 should be exponential. Scale is fitted.
        let cfg = SystemConfig {
            n: 3,
            k: 5,
            l: 3,
            ..Default::default()
        };
        let mut xs = effective_gain_powers(&cfg, 13, 20_000);
        let scale = xs.iter().sum::<f64>() / xs.len() as f64;
        let d = ks_statistic(&mut xs, |x| 1.0 - (-x / scale).exp());
        assert!(d < ks_critical_value(xs.len(), 0.01), "KS distance {d}");
    }

    #[test]
    fn wide_zf_gain_follows_gamma_with_excess_antennas() {
        // With N > L the post-ZF gain gains N - L extra degrees of freedom.
        let cfg = SystemConfig {
            n: 4,
            k: 10,
            l: 3,
            ..Default::default()
        };
        let mut xs = effective_gain_powers(&cfg, 14, 20_000);
        let shape = (cfg.n - cfg.l + 1) as f64;
        let d = ks_statistic(&mut xs, |x| gamma_cdf(shape, x));
        assert!(d < ks_critical_value(xs.len(), 0.01), "KS distance {d}");
    }
}
