//! Bayesian model selection for stochastic block models.
//!
//! Exact integrated complete-data likelihoods for the vanilla and
//! degree-corrected SBM, incremental move deltas, a seeded MAP search,
//! BIC and MDL baselines, and a grid sweep over families and block counts.

pub mod block_state;
pub mod error;
pub mod graph;
pub mod icl;
pub mod mdl;
pub mod search;
pub mod selection;
pub mod special;
pub mod synth;

pub use block_state::{BlockState, PairCountConvention};
pub use error::{Error, Result};
pub use graph::{Graph, LoadOptions};
pub use icl::{Family, PriorConfig, ScoreBreakdown};
