//! Two-part code lengths for a vanilla SBM labelling, in bits.
//!
//! Each part is the negative log2 of one combinatorial factor of the
//! uniform-prior ICL, so `total_bits == -log2 ICL` exactly. The cost of
//! announcing `k` is reported separately and left out of the total.

use serde::{Deserialize, Serialize};

use crate::block_state::BlockState;
use crate::error::Result;
use crate::graph::Graph;
use crate::special::{ln_choose, ln_factorial};

/// Code length of each message part, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeLengthReport {
    /// `log2 k`; implicit, excluded from `total_bits`.
    pub part1_k: f64,
    /// Block-size composition, `log2 C(n+k-1, k-1)`.
    pub part2_partition: f64,
    /// Labelling given the sizes, `log2 n! / prod n_s!`.
    pub part3_assignment: f64,
    /// Edge counts per block pair, `sum log2 (N_st + 1)`.
    pub part4_edge_counts: f64,
    /// Edge placement given the counts, `sum log2 C(N_st, m_st)`.
    pub part5_edge_alloc: f64,
    pub total_bits: f64,
}

pub fn sbm_code_lengths(g: &Graph, state: &BlockState) -> Result<CodeLengthReport> {
    state.check_against(g)?;
    let ln2 = std::f64::consts::LN_2;
    let n = state.n() as u64;
    let k = state.k() as u64;

    let part2 = ln_choose(n + k - 1, k - 1) / ln2;
    let part3 = (ln_factorial(n)
        - state.block_sizes().iter().map(|&ns| ln_factorial(ns)).sum::<f64>())
        / ln2;
    let mut part4 = 0.0;
    let mut part5 = 0.0;
    for (s, t) in state.block_pairs() {
        let slots = state.pair_slots(s, t);
        part4 += ((slots + 1) as f64).log2();
        part5 += ln_choose(slots, state.pair_edges(s, t)) / ln2;
    }
    // lgamma rounding can leave a zero-length part a hair below zero
    let clamp = |x: f64| if x < 0.0 && x > -1e-9 { 0.0 } else { x };
    let (part2, part3, part5) = (clamp(part2), clamp(part3), clamp(part5));
    Ok(CodeLengthReport {
        part1_k: (k as f64).log2(),
        part2_partition: part2,
        part3_assignment: part3,
        part4_edge_counts: part4,
        part5_edge_alloc: part5,
        total_bits: part2 + part3 + part4 + part5,
    })
}
