//! Degree-corrected SBM on simple graphs.
//!
//! Propensities are identified by `sum_{g(u)=s} theta_u = n_s`. The
//! collapsed score is the vanilla vertex and edge factors (the Poisson slot
//! model is replaced by its Bernoulli counterpart, valid when
//! `m_st << N_st`) times the integrated propensity factor.

use serde::{Deserialize, Serialize};

use super::{check_move, sbm, PriorConfig, ScoreBreakdown};
use crate::block_state::BlockState;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::special::{ln_gamma, xlny};

/// Degree-corrected parameters: per-vertex `theta`, Poisson rates `omega`
/// (row-major `k x k`) and block weights `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcParams {
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub q: Vec<f64>,
}

/// Propensities re-expressed on the per-block simplex, `eta_u = theta_u / n_{g(u)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaParams {
    pub eta: Vec<f64>,
}

impl DcParams {
    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn omega(&self, s: usize, t: usize) -> f64 {
        self.omega[s * self.k() + t]
    }

    /// Checks shapes, signs and the per-block normalisation against `state`.
    pub fn validate(&self, state: &BlockState) -> Result<()> {
        let k = self.k();
        if k != state.k() || self.omega.len() != k * k || self.theta.len() != state.n() {
            return Err(Error::InvalidParameter(
                "degree-corrected parameters do not match the state's shape".into(),
            ));
        }
        let all = self.theta.iter().chain(&self.omega).chain(&self.q);
        if all.clone().any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("NaN parameter".into()));
        }
        if all.clone().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter("negative parameter".into()));
        }
        let mut sums = vec![0.0; k];
        for (u, &th) in self.theta.iter().enumerate() {
            sums[state.label(u)] += th;
        }
        for (s, sum) in sums.iter().enumerate() {
            let ns = state.block_size(s) as f64;
            if (sum - ns).abs() > 1e-9 * ns.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "theta sums to {sum} in block {s}, expected {ns}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_eta(&self, state: &BlockState) -> EtaParams {
        let eta = self
            .theta
            .iter()
            .enumerate()
            .map(|(u, &th)| th / state.block_size(state.label(u)) as f64)
            .collect();
        EtaParams { eta }
    }
}

/// `ln P(G, g | theta, omega, q)` for a simple graph (all `A_uv! = 1`).
pub fn dc_log_likelihood(g: &Graph, state: &BlockState, params: &DcParams) -> Result<f64> {
    state.check_against(g)?;
    params.validate(state)?;
    let mut ll = 0.0;
    for u in 0..g.n() {
        ll += xlny(g.degree(u) as f64, params.theta[u]);
    }
    for s in 0..state.k() {
        ll += xlny(state.block_size(s) as f64, params.q[s]);
    }
    for (s, t) in state.block_pairs() {
        let w = params.omega(s, t);
        ll += xlny(state.pair_edges(s, t) as f64, w) - state.pair_slots(s, t) as f64 * w;
    }
    Ok(ll)
}

/// `theta_u = d_u n_{g(u)} / D_{g(u)}` (1 in blocks without edges, where any
/// normalised theta attains the maximum),
/// `omega_st = m_st / N_st`, `q_s = n_s / n`.
pub fn mle_dc_params(g: &Graph, state: &BlockState) -> DcParams {
    let theta = (0..g.n())
        .map(|u| {
            let s = state.label(u);
            let ds = state.block_degree(s);
            if ds == 0 {
                1.0
            } else {
                g.degree(u) as f64 * state.block_size(s) as f64 / ds as f64
            }
        })
        .collect();
    let sbm::SbmParams { q, p } = sbm::mle_params(state);
    DcParams { theta, omega: p, q }
}

/// The part of a block's propensity factor that depends on `(n_s, D_s)`.
#[inline]
fn block_core(ns: u64, ds: u64, gamma: f64) -> f64 {
    if ns == 0 {
        return 0.0;
    }
    let nsf = ns as f64;
    ln_gamma(nsf * gamma) - nsf * ln_gamma(gamma) - ln_gamma(ds as f64 + nsf * gamma)
        + (ds + ns) as f64 * nsf.ln()
}

/// `ln P(Theta, g | M)`: per block, the Dirichlet(`gamma`) integral of
/// `prod eta_u^{d_u}` times `n_s^{D_s + n_s}` from the change of variables.
/// With `gamma = 1` this is
/// `ln (n_s-1)! + sum ln d_u! - ln (D_s+n_s-1)! + (D_s+n_s) ln n_s`.
pub fn theta_log_factor(g: &Graph, state: &BlockState, priors: &PriorConfig) -> Result<f64> {
    priors.validate()?;
    state.check_against(g)?;
    Ok(theta_factor_unchecked(g, state, priors.gamma))
}

fn theta_factor_unchecked(g: &Graph, state: &BlockState, gamma: f64) -> f64 {
    // every vertex sits in a non-empty block, so the per-vertex terms sum globally
    let per_vertex: f64 = g.degrees().iter().map(|&d| ln_gamma(d as f64 + gamma)).sum();
    let per_block: f64 = (0..state.k())
        .map(|s| block_core(state.block_size(s), state.block_degree(s), gamma))
        .sum();
    per_block + per_vertex
}

/// Exact log-ICL of the degree-corrected model.
pub fn dc_log_icl(g: &Graph, state: &BlockState, priors: &PriorConfig) -> Result<ScoreBreakdown> {
    let base = sbm::sbm_log_icl(g, state, priors)?;
    let theta = theta_factor_unchecked(g, state, priors.gamma);
    Ok(ScoreBreakdown::new(base.vertex_term, base.edge_term, theta))
}

/// Change of the propensity factor when a vertex of degree `d` moves `r -> t`.
pub(crate) fn theta_delta(state: &BlockState, r: usize, t: usize, d: u64, priors: &PriorConfig) -> f64 {
    let gamma = priors.gamma;
    let (nr, dr) = (state.block_size(r), state.block_degree(r));
    let (nt, dt) = (state.block_size(t), state.block_degree(t));
    block_core(nr - 1, dr - d, gamma) - block_core(nr, dr, gamma) + block_core(nt + 1, dt + d, gamma)
        - block_core(nt, dt, gamma)
}

/// `dc_log_icl(after) - dc_log_icl(before)` for moving `u` to `t`.
pub fn dc_log_icl_delta(
    g: &Graph,
    state: &BlockState,
    u: usize,
    t: usize,
    priors: &PriorConfig,
) -> Result<f64> {
    check_move(state, u, t)?;
    let r = state.label(u);
    if r == t {
        return Ok(0.0);
    }
    let base = sbm::sbm_log_icl_delta(g, state, u, t, priors)?;
    Ok(base + theta_delta(state, r, t, g.degree(u) as u64, priors))
}

/// `ln P(Theta, g | theta_hat) = sum_u d_u ln theta_hat_u`, the propensity
/// factor at its maximum.
pub fn max_theta_log_factor(g: &Graph, state: &BlockState) -> f64 {
    let params = mle_dc_params(g, state);
    (0..g.n())
        .map(|u| xlny(g.degree(u) as f64, params.theta[u]))
        .sum()
}
