//! Exact finite-blocklength computations for wiretap channels with public
//! feedback: Neyman–Pearson `beta`, active channel discrimination, the
//! hypothesis-testing converse for wiretap codes, conditional mutual
//! information maximization, and an exact protocol simulator for toy codes.

pub mod config;
pub mod discrimination;
pub mod error;
pub mod np;
pub mod prob;
pub mod protocol;
pub mod random;
pub mod wiretap;

pub use config::Caps;
pub use discrimination::{AdaptiveStrategy, DiscriminationResult};
pub use error::{Error, Result};
pub use np::{beta_exact, beta_product_iid, stein_exponent_curve, BetaResult, BinaryTest};
pub use prob::{Distribution, Dmc, JointDistribution};
pub use protocol::{CodeMetrics, ProtocolJoint, WiretapCode};
pub use wiretap::{ConverseBoundReport, FactorizedKernel, WiretapKernel};
