//! Vanilla SBM: profile likelihood, MLEs and the exact Beta/Dirichlet ICL.

use serde::{Deserialize, Serialize};

use super::{check_move, PriorConfig, ScoreBreakdown};
use crate::block_state::BlockState;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::special::{ln_gamma, xlny};

/// Block weights `q` and symmetric affinities `p` (row-major `k x k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl SbmParams {
    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn p(&self, s: usize, t: usize) -> f64 {
        self.p[s * self.k() + t]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.p.len() != k * k {
            return Err(Error::InvalidParameter(format!(
                "affinity matrix has {} entries, expected {}",
                self.p.len(),
                k * k
            )));
        }
        if self.q.iter().chain(&self.p).any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("NaN parameter".into()));
        }
        if self.q.iter().any(|&x| x < 0.0) || (self.q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("q must lie on the simplex".into()));
        }
        for s in 0..k {
            for t in 0..k {
                let v = self.p(s, t);
                if !(0.0..=1.0).contains(&v) || v != self.p(t, s) {
                    return Err(Error::InvalidParameter(
                        "p must be symmetric with entries in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `ln P(G, g | q, p)` for the Bernoulli block model.
pub fn sbm_log_likelihood(g: &Graph, state: &BlockState, params: &SbmParams) -> Result<f64> {
    params.validate()?;
    if params.k() != state.k() {
        return Err(Error::InvalidParameter(format!(
            "parameters are for k = {}, state has k = {}",
            params.k(),
            state.k()
        )));
    }
    state.check_against(g)?;
    let mut ll = 0.0;
    for s in 0..state.k() {
        ll += xlny(state.block_size(s) as f64, params.q[s]);
    }
    for (s, t) in state.block_pairs() {
        let m = state.pair_edges(s, t) as f64;
        let slots = state.pair_slots(s, t) as f64;
        let p = params.p(s, t);
        ll += xlny(m, p) + xlny(slots - m, 1.0 - p);
    }
    Ok(ll)
}

/// Plug-in estimates `q_s = n_s / n`, `p_st = m_st / N_st` (0 for empty slots).
pub fn mle_params(state: &BlockState) -> SbmParams {
    let k = state.k();
    let n = state.n().max(1) as f64;
    let q = state.block_sizes().iter().map(|&ns| ns as f64 / n).collect();
    let mut p = vec![0.0; k * k];
    for (s, t) in state.block_pairs() {
        let slots = state.pair_slots(s, t);
        let v = if slots == 0 {
            0.0
        } else {
            state.pair_edges(s, t) as f64 / slots as f64
        };
        p[s * k + t] = v;
        p[t * k + s] = v;
    }
    SbmParams { q, p }
}

/// Dirichlet-multinomial evidence of the block sizes.
pub(crate) fn vertex_term(sizes: &[u64], priors: &PriorConfig) -> f64 {
    let k = sizes.len() as f64;
    let delta = priors.delta;
    let n: u64 = sizes.iter().sum();
    let mut v = ln_gamma(k * delta) - k * ln_gamma(delta) - ln_gamma(n as f64 + k * delta);
    for &ns in sizes {
        v += ln_gamma(ns as f64 + delta);
    }
    v
}

/// Beta-binomial evidence of one block pair, without its constant
/// `ln Γ(α+β) − ln Γ(α) − ln Γ(β)`.
#[inline]
fn pair_core(m: u64, slots: u64, priors: &PriorConfig) -> f64 {
    ln_gamma(m as f64 + priors.alpha) + ln_gamma((slots - m) as f64 + priors.beta)
        - ln_gamma(slots as f64 + priors.alpha + priors.beta)
}

#[inline]
fn pair_const(priors: &PriorConfig) -> f64 {
    ln_gamma(priors.alpha + priors.beta) - ln_gamma(priors.alpha) - ln_gamma(priors.beta)
}

pub(crate) fn edge_term(state: &BlockState, priors: &PriorConfig) -> f64 {
    let c = pair_const(priors);
    state
        .block_pairs()
        .map(|(s, t)| c + pair_core(state.pair_edges(s, t), state.pair_slots(s, t), priors))
        .sum()
}

/// Exact log-ICL of the vanilla model.
pub fn sbm_log_icl(g: &Graph, state: &BlockState, priors: &PriorConfig) -> Result<ScoreBreakdown> {
    priors.validate()?;
    state.check_against(g)?;
    Ok(ScoreBreakdown::new(
        vertex_term(state.block_sizes(), priors),
        edge_term(state, priors),
        0.0,
    ))
}

/// `sbm_log_icl(after) - sbm_log_icl(before)` for moving `u` to `t`.
pub fn sbm_log_icl_delta(
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
    let mut counts = Vec::new();
    state.neighbor_block_counts(g, u, &mut counts);
    Ok(delta_from_counts(state, r, t, &counts, priors))
}

/// Core of the vanilla delta; `counts[x]` is the number of neighbours of the
/// moving vertex in block `x`. Only the `2k - 1` pairs touching `r` or `t`
/// change.
pub(crate) fn delta_from_counts(
    state: &BlockState,
    r: usize,
    t: usize,
    counts: &[u64],
    priors: &PriorConfig,
) -> f64 {
    debug_assert_ne!(r, t);
    let conv = state.convention();
    let (nr, nt) = (state.block_size(r), state.block_size(t));
    let (cr, ct) = (counts[r], counts[t]);

    let delta_ln = priors.delta;
    let mut d = ln_gamma((nr - 1) as f64 + delta_ln) - ln_gamma(nr as f64 + delta_ln)
        + ln_gamma((nt + 1) as f64 + delta_ln)
        - ln_gamma(nt as f64 + delta_ln);

    let mut pair = |m_old: u64, slots_old: u64, m_new: u64, slots_new: u64| {
        if m_old != m_new || slots_old != slots_new {
            d += pair_core(m_new, slots_new, priors) - pair_core(m_old, slots_old, priors);
        }
    };

    pair(
        state.pair_edges(r, r),
        conv.slots(nr, nr, true),
        state.pair_edges(r, r) - cr,
        conv.slots(nr - 1, nr - 1, true),
    );
    pair(
        state.pair_edges(t, t),
        conv.slots(nt, nt, true),
        state.pair_edges(t, t) + ct,
        conv.slots(nt + 1, nt + 1, true),
    );
    pair(
        state.pair_edges(r, t),
        conv.slots(nr, nt, false),
        state.pair_edges(r, t) + cr - ct,
        conv.slots(nr - 1, nt + 1, false),
    );
    for x in 0..state.k() {
        if x == r || x == t {
            continue;
        }
        let nx = state.block_size(x);
        if nx == 0 {
            continue;
        }
        let cx = counts[x];
        pair(
            state.pair_edges(r, x),
            conv.slots(nr, nx, false),
            state.pair_edges(r, x) - cx,
            conv.slots(nr - 1, nx, false),
        );
        pair(
            state.pair_edges(t, x),
            conv.slots(nt, nx, false),
            state.pair_edges(t, x) + cx,
            conv.slots(nt + 1, nx, false),
        );
    }
    d
}
