//! System configuration and Rayleigh-fading channel draws.
//!
//! Each complex gain is circularly-symmetric Gaussian with unit variance, so
//! every `|h|^2` is exponential with mean one. Relays are chosen uniformly at
//! random once per realization and stay fixed for the coherence block.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub n: usize,
    /// Relays in total.
    pub k: usize,
    /// Selected relays.
    pub l: usize,
    /// Symbol pairs carried per selected relay.
    pub m: usize,
    /// Noise variance (linear).
    pub sigma2: f64,
    /// Per-relay SNR `2 m P / sigma2` (linear).
    pub snr: f64,
    /// Secrecy-rate threshold, bits per channel use.
    pub gamma: f64,
    /// Exponent used by the outage bound and the distribution probes.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 4,
            k: 10,
            l: 3,
            m: 10,
            sigma2: 1.0,
            snr: 1e3,
            gamma: 1.0,
            epsilon: 0.05,
            seed: 0x5eed,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return fail(format!("n = {} must be at least 2", self.n));
        }
        if self.k < 2 {
            return fail(format!("k = {} must be at least 2", self.k));
        }
        if self.l < 2 || self.l > self.n.min(self.k) {
            return fail(format!(
                "l = {} must satisfy 2 <= l <= min(n, k) = {}",
                self.l,
                self.n.min(self.k)
            ));
        }
        if self.m < 1 {
            return fail("m must be at least 1".into());
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return fail(format!("sigma2 = {} must be positive", self.sigma2));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return fail(format!("snr = {} must be positive", self.snr));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return fail(format!("gamma = {} must be non-negative", self.gamma));
        }
        Ok(())
    }

    /// Per-symbol transmit power `P = snr * sigma2 / (2 m)`.
    pub fn power(&self) -> f64 {
        self.snr * self.sigma2 / (2.0 * self.m as f64)
    }

    pub fn with_snr(&self, snr: f64) -> Self {
        Self { snr, ..self.clone() }
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        self.with_snr(db_to_linear(snr_db))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization {
    /// First-hop gains, one row per relay (`K x N`).
    pub h: CMatrix,
    /// Second-hop gains relay -> destination (length `K`).
    pub g: CVector,
    /// Selected relay indices, ascending. Position in this list is the
    /// relay's beam index.
    pub selected: Vec<usize>,
}

impl ChannelRealization {
    pub fn new(h: CMatrix, g: CVector, selected: Vec<usize>) -> Result<Self> {
        if g.len() != h.rows() {
            return Err(Error::DimensionMismatch {
                expected: h.rows(),
                actual: g.len(),
            });
        }
        let mut seen = vec![false; h.rows()];
        for &s in &selected {
            if s >= h.rows() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidConfig(format!("bad selected index {s}")));
            }
        }
        Ok(Self { h, g, selected })
    }

    pub fn relay_count(&self) -> usize {
        self.h.rows()
    }

    pub fn is_selected(&self, relay: usize) -> bool {
        self.selected.contains(&relay)
    }

    /// Relays not chosen for forwarding, ascending.
    pub fn non_selected(&self) -> Vec<usize> {
        (0..self.relay_count()).filter(|r| !self.is_selected(*r)).collect()
    }

    /// Second-hop gains of the selected relays, in selection order.
    pub fn g_selected(&self) -> CVector {
        CVector::from_vec_unchecked(self.selected.iter().map(|&r| self.g[r]).collect())
    }
}

/// One CN(0, 1) draw.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn sample_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let h = (0..cfg.k * cfg.n).map(|_| complex_gaussian(rng)).collect();
    let g = (0..cfg.k).map(|_| complex_gaussian(rng)).collect();
    let selected = select_relays(cfg, rng);
    ChannelRealization {
        h: CMatrix::from_vec_unchecked(cfg.k, cfg.n, h),
        g: CVector::from_vec_unchecked(g),
        selected,
    }
}

/// Uniform `L`-subset of `0..K`, returned in ascending order.
pub fn select_relays<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, cfg.k, cfg.l.min(cfg.k)).into_vec();
    picked.sort_unstable();
    picked
}
