//! Simulation of secure transmission through untrusted amplify-and-forward
//! relays using zero-forcing beamforming and interference dissolution.
//!
//! The crate is organized bottom-up: complex linear algebra
//! ([`numerics`]), Rayleigh channel draws ([`channel`]), beamformer
//! construction ([`beamforming`]), the four-use relay protocol
//! ([`protocol`]), closed-form rates ([`rates`]) and Monte Carlo outage and
//! secrecy-rate estimation ([`outage`]).

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod numerics;
pub mod outage;
pub mod protocol;
pub mod rates;
pub mod rng;
pub mod stats;

pub use beamforming::{compute_beamformers, nonselected_effective_vector, BeamformSet};
pub use channel::{db_to_linear, sample_channel, ChannelRealization, SystemConfig};
pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector};
pub use outage::{
    diversity_slope, estimate_outage, estimate_secrecy_rate, outage_upper_bound, DiversityEstimate, OutageCurve,
    SecrecyCurve,
};
pub use protocol::{effective_link, EffectiveLink, SymbolBlock, SymbolMode, SymbolPair};
pub use rates::{secrecy_rate, RateBreakdown, RateMode};
