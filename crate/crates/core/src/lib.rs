//! Bayesian VAR toolkit for energy price shock analysis.
//!
//! The crate covers the full chain from survey microdata to state-dependent
//! local projections:
//!
//! * [`timeseries`]: quarterly/monthly data model and CSV ingestion.
//! * [`indexes`]: diffusion indexes, the round-number uncertainty index and
//!   the logistic transition function.
//! * [`bvar`]: conjugate Minnesota BVAR with closed-form marginal likelihood,
//!   tightness optimization, pandemic volatility rescaling and a direct
//!   posterior sampler.
//! * [`identification`]: sign and zero restrictions on the impact matrix via
//!   orthogonal rotations.
//! * [`structural`]: impulse responses, credible bands, historical
//!   decompositions and recursive IRFs.
//! * [`lp`]: state-dependent local projections with Newey-West inference.
//! * [`simulate`]: ground-truth SVAR generator and closed-form oracles.
//! * [`pipeline`]: config-driven orchestration used by the `svarlab` binary.

pub mod bundle;
pub mod bvar;
pub mod error;
pub mod identification;
pub mod indexes;
pub mod linalg;
pub mod lp;
pub mod pipeline;
pub mod seeding;
pub mod simulate;
pub mod structural;
pub mod timeseries;

pub use error::{Error, Result};
