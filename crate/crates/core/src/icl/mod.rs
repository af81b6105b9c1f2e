//! Collapsed scores for the vanilla and degree-corrected block models.
//!
//! All quantities are natural logs. Parameters are integrated out against
//! conjugate priors, so a score depends on the graph only through the
//! sufficient statistics held by [`BlockState`].

pub mod dc;
pub mod sbm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::block_state::BlockState;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "sbm")]
    Vanilla,
    #[serde(rename = "dcsbm")]
    DegreeCorrected,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Vanilla => "sbm",
            Family::DegreeCorrected => "dcsbm",
        }
    }

    /// Full collapsed log-ICL of `state` under this family.
    pub fn log_icl(self, g: &Graph, state: &BlockState, priors: &PriorConfig) -> Result<ScoreBreakdown> {
        match self {
            Family::Vanilla => sbm::sbm_log_icl(g, state, priors),
            Family::DegreeCorrected => dc::dc_log_icl(g, state, priors),
        }
    }

    /// Change in log-ICL if `u` moved to block `t`.
    pub fn log_icl_delta(
        self,
        g: &Graph,
        state: &BlockState,
        u: usize,
        t: usize,
        priors: &PriorConfig,
    ) -> Result<f64> {
        match self {
            Family::Vanilla => sbm::sbm_log_icl_delta(g, state, u, t, priors),
            Family::DegreeCorrected => dc::dc_log_icl_delta(g, state, u, t, priors),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sbm" | "vanilla" => Ok(Family::Vanilla),
            "dcsbm" | "dc" | "degree_corrected" => Ok(Family::DegreeCorrected),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Conjugate-prior hyperparameters shared by every block (pair).
///
/// `alpha`, `beta` shape the Beta prior on each edge probability, `delta` is
/// the Dirichlet concentration on block weights and `gamma` the Dirichlet
/// concentration on within-block degree propensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self::uniform()
    }
}

impl PriorConfig {
    pub const fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            delta: 1.0,
            gamma: 1.0,
        }
    }

    pub const fn jeffreys() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            delta: 0.5,
            gamma: 0.5,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::uniform()),
            "jeffreys" => Ok(Self::jeffreys()),
            other => Err(Error::InvalidParameter(format!("unknown prior preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "prior {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Accepts `"uniform"`, `"jeffreys"` or an object with any of
    /// `alpha, beta, delta, gamma` (missing keys default to 1).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let priors: PriorConfig = serde_json::from_str(text)?;
        priors.validate()?;
        Ok(priors)
    }
}

impl<'de> Deserialize<'de> for PriorConfig {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Explicit {
            #[serde(default = "one")]
            alpha: f64,
            #[serde(default = "one")]
            beta: f64,
            #[serde(default = "one")]
            delta: f64,
            #[serde(default = "one")]
            gamma: f64,
        }
        fn one() -> f64 {
            1.0
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Preset(String),
            Explicit(Explicit),
        }
        match Repr::deserialize(de)? {
            Repr::Preset(name) => PriorConfig::preset(&name).map_err(serde::de::Error::custom),
            Repr::Explicit(e) => Ok(PriorConfig {
                alpha: e.alpha,
                beta: e.beta,
                delta: e.delta,
                gamma: e.gamma,
            }),
        }
    }
}

/// Per-factor components of a log-ICL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    /// ln P(V, g | M)
    pub vertex_term: f64,
    /// ln P(E, g | M)
    pub edge_term: f64,
    /// ln P(Theta, g | M); zero for the vanilla model.
    pub theta_term: f64,
    pub total: f64,
}

impl ScoreBreakdown {
    pub fn new(vertex_term: f64, edge_term: f64, theta_term: f64) -> Self {
        Self {
            vertex_term,
            edge_term,
            theta_term,
            total: vertex_term + edge_term + theta_term,
        }
    }
}

pub(crate) fn check_move(state: &BlockState, u: usize, t: usize) -> Result<()> {
    if u >= state.n() {
        return Err(Error::VertexOutOfRange {
            vertex: u,
            n: state.n(),
        });
    }
    if t >= state.k() {
        return Err(Error::LabelOutOfRange {
            label: t,
            k: state.k(),
        });
    }
    Ok(())
}

/// Reusable buffers for scoring many candidate moves of the same state.
#[derive(Debug, Clone, Default)]
pub struct MoveScorer {
    counts: Vec<u64>,
}

impl MoveScorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the neighbour-per-block counts of `u`; must precede the
    /// `delta_*` calls for that vertex.
    pub fn load(&mut self, g: &Graph, state: &BlockState, u: usize) {
        state.neighbor_block_counts(g, u, &mut self.counts);
    }

    /// Log-ICL change for moving the loaded vertex `u` to `t`.
    pub fn delta(
        &self,
        family: Family,
        g: &Graph,
        state: &BlockState,
        u: usize,
        t: usize,
        priors: &PriorConfig,
    ) -> f64 {
        let r = state.label(u);
        if r == t {
            return 0.0;
        }
        let base = sbm::delta_from_counts(state, r, t, &self.counts, priors);
        match family {
            Family::Vanilla => base,
            Family::DegreeCorrected => {
                base + dc::theta_delta(state, r, t, g.degree(u) as u64, priors)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors_from_json() {
        assert_eq!(PriorConfig::from_json_str("\"jeffreys\"").unwrap(), PriorConfig::jeffreys());
        let p = PriorConfig::from_json_str(r#"{"alpha": 2.0, "gamma": 0.5}"#).unwrap();
        assert_eq!((p.alpha, p.beta, p.delta, p.gamma), (2.0, 1.0, 1.0, 0.5));
        assert!(PriorConfig::from_json_str(r#"{"alpha": -1}"#).is_err());
        assert!(PriorConfig::from_json_str("\"flat\"").is_err());
        assert!(PriorConfig::from_json_str(r#"{"alpah": 1}"#).is_err());
    }

    #[test]
    fn family_names() {
        assert_eq!("sbm".parse::<Family>().unwrap(), Family::Vanilla);
        assert_eq!("dcsbm".parse::<Family>().unwrap(), Family::DegreeCorrected);
        assert!("x".parse::<Family>().is_err());
        assert_eq!(serde_json::to_string(&Family::DegreeCorrected).unwrap(), "\"dcsbm\"");
    }
}
