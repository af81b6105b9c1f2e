//! Block assignments and the sufficient statistics `(n_s, m_st, D_s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How many vertex pairs a block pair can hold.
///
/// `Simple` counts unordered pairs of distinct vertices, so a block of size
/// `n_s` has `n_s (n_s - 1) / 2` internal slots. `Literal` uses `n_s n_t`
/// for every pair including the diagonal, which reproduces implementations
/// that write the slot count uniformly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCountConvention {
    #[default]
    Simple,
    Literal,
}

impl PairCountConvention {
    /// `N_st` for blocks of sizes `ns`, `nt`; `same` marks the diagonal.
    #[inline]
    pub fn slots(self, ns: u64, nt: u64, same: bool) -> u64 {
        match (self, same) {
            (PairCountConvention::Simple, true) => ns * ns.saturating_sub(1) / 2,
            _ => ns * nt,
        }
    }
}

/// One changed statistic with its value before and after a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatChange {
    BlockSize { block: usize, old: u64, new: u64 },
    PairEdges { s: usize, t: usize, old: u64, new: u64 },
    BlockDegree { block: usize, old: u64, new: u64 },
}

/// Every statistic touched by a [`BlockState::move_vertex`] call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatDelta {
    pub changes: Vec<StatChange>,
    /// Elementary steps performed (neighbours visited plus blocks touched).
    pub work: usize,
}

impl StatDelta {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }
}

/// A labelling of the vertices into `k` blocks with cached statistics.
///
/// `k` is fixed for the life of the state; blocks may be empty.
#[derive(Debug, Clone)]
pub struct BlockState {
    k: usize,
    labels: Vec<usize>,
    block_sizes: Vec<u64>,
    /// Symmetric `k x k` edge counts, row-major.
    pair_edges: Vec<u64>,
    block_degrees: Vec<u64>,
    convention: PairCountConvention,
    scratch: Vec<u64>,
    touched: Vec<usize>,
}

impl PartialEq for BlockState {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.convention == other.convention
            && self.labels == other.labels
            && self.block_sizes == other.block_sizes
            && self.pair_edges == other.pair_edges
            && self.block_degrees == other.block_degrees
    }
}

impl Eq for BlockState {}

impl BlockState {
    /// Builds statistics from scratch for `labels` on `g`.
    pub fn from_labels(g: &Graph, labels: Vec<usize>, k: usize) -> Result<Self> {
        Self::with_convention(g, labels, k, PairCountConvention::default())
    }

    pub fn with_convention(
        g: &Graph,
        labels: Vec<usize>,
        k: usize,
        convention: PairCountConvention,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if labels.len() != g.n() {
            return Err(Error::LabelLength {
                expected: g.n(),
                got: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        let mut block_sizes = vec![0u64; k];
        let mut block_degrees = vec![0u64; k];
        for (u, &s) in labels.iter().enumerate() {
            block_sizes[s] += 1;
            block_degrees[s] += g.degree(u) as u64;
        }
        let mut pair_edges = vec![0u64; k * k];
        for &(u, v) in g.edges() {
            let (s, t) = (labels[u], labels[v]);
            pair_edges[s * k + t] += 1;
            if s != t {
                pair_edges[t * k + s] += 1;
            }
        }
        Ok(Self {
            k,
            labels,
            block_sizes,
            pair_edges,
            block_degrees,
            convention,
            scratch: vec![0; k],
            touched: Vec::with_capacity(k),
        })
    }

    /// Everything in block 0.
    pub fn single_block(g: &Graph, k: usize) -> Result<Self> {
        Self::from_labels(g, vec![0; g.n()], k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    pub fn convention(&self) -> PairCountConvention {
        self.convention
    }

    pub fn block_sizes(&self) -> &[u64] {
        &self.block_sizes
    }

    pub fn block_size(&self, s: usize) -> u64 {
        self.block_sizes[s]
    }

    pub fn block_degrees(&self) -> &[u64] {
        &self.block_degrees
    }

    pub fn block_degree(&self, s: usize) -> u64 {
        self.block_degrees[s]
    }

    /// `m_st`, symmetric in its arguments.
    #[inline]
    pub fn pair_edges(&self, s: usize, t: usize) -> u64 {
        self.pair_edges[s * self.k + t]
    }

    /// `N_st` under the state's pair-count convention.
    #[inline]
    pub fn pair_slots(&self, s: usize, t: usize) -> u64 {
        self.convention
            .slots(self.block_sizes[s], self.block_sizes[t], s == t)
    }

    /// Iterates `(s, t)` with `s <= t`.
    pub fn block_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let k = self.k;
        (0..k).flat_map(move |s| (s..k).map(move |t| (s, t)))
    }

    /// Number of edges from `u` into each block, written to `out` (resized to k).
    pub fn neighbor_block_counts(&self, g: &Graph, u: usize, out: &mut Vec<u64>) {
        out.clear();
        out.resize(self.k, 0);
        for &w in g.neighbors(u) {
            out[self.labels[w]] += 1;
        }
    }

    /// Relabels `u` to block `t`, updating all statistics in `O(d_u + k)`.
    pub fn move_vertex(&mut self, g: &Graph, u: usize, t: usize) -> Result<StatDelta> {
        if u >= self.n() {
            return Err(Error::VertexOutOfRange {
                vertex: u,
                n: self.n(),
            });
        }
        if t >= self.k {
            return Err(Error::LabelOutOfRange { label: t, k: self.k });
        }
        let r = self.labels[u];
        if r == t {
            return Ok(StatDelta::default());
        }
        let k = self.k;
        let mut work = 0usize;

        // neighbour counts per block, touching only blocks that occur
        self.touched.clear();
        for &w in g.neighbors(u) {
            let x = self.labels[w];
            if self.scratch[x] == 0 {
                self.touched.push(x);
            }
            self.scratch[x] += 1;
            work += 1;
        }
        self.touched.sort_unstable();

        let c_r = self.scratch[r];
        let c_t = self.scratch[t];
        let mut changes = Vec::with_capacity(2 * self.touched.len() + 7);
        let mut adjust = |pair_edges: &mut Vec<u64>, s: usize, x: usize, by: i64| {
            if by == 0 {
                return;
            }
            let old = pair_edges[s * k + x];
            let new = (old as i64 + by) as u64;
            pair_edges[s * k + x] = new;
            pair_edges[x * k + s] = new;
            let (a, b) = (s.min(x), s.max(x));
            changes.push(StatChange::PairEdges { s: a, t: b, old, new });
        };
        for &x in &self.touched {
            work += 1;
            if x == r || x == t {
                continue;
            }
            let c = self.scratch[x] as i64;
            adjust(&mut self.pair_edges, r, x, -c);
            adjust(&mut self.pair_edges, t, x, c);
        }
        adjust(&mut self.pair_edges, r, r, -(c_r as i64));
        adjust(&mut self.pair_edges, t, t, c_t as i64);
        adjust(&mut self.pair_edges, r, t, c_r as i64 - c_t as i64);

        for &x in &self.touched {
            self.scratch[x] = 0;
        }

        let d = g.degree(u) as u64;
        let (nr, nt) = (self.block_sizes[r], self.block_sizes[t]);
        self.block_sizes[r] = nr - 1;
        self.block_sizes[t] = nt + 1;
        changes.push(StatChange::BlockSize { block: r, old: nr, new: nr - 1 });
        changes.push(StatChange::BlockSize { block: t, old: nt, new: nt + 1 });
        if d > 0 {
            let (dr, dt) = (self.block_degrees[r], self.block_degrees[t]);
            self.block_degrees[r] = dr - d;
            self.block_degrees[t] = dt + d;
            changes.push(StatChange::BlockDegree { block: r, old: dr, new: dr - d });
            changes.push(StatChange::BlockDegree { block: t, old: dt, new: dt + d });
        }
        self.labels[u] = t;
        work += 2;
        Ok(StatDelta { changes, work })
    }

    /// Cheap aggregate check that the state belongs to `g`.
    pub fn check_against(&self, g: &Graph) -> Result<()> {
        if self.n() != g.n() {
            return Err(Error::InconsistentState(format!(
                "state has {} vertices, graph has {}",
                self.n(),
                g.n()
            )));
        }
        let m: u64 = self.block_pairs().map(|(s, t)| self.pair_edges(s, t)).sum();
        let d: u64 = self.block_degrees.iter().sum();
        if m != g.m() as u64 || d != 2 * g.m() as u64 {
            return Err(Error::InconsistentState(format!(
                "state counts {m} edges and degree sum {d}, graph has m = {}",
                g.m()
            )));
        }
        Ok(())
    }

    /// Full recount against `g`; `Ok` iff every cached statistic is exact.
    pub fn verify(&self, g: &Graph) -> Result<()> {
        let fresh = Self::with_convention(g, self.labels.clone(), self.k, self.convention)?;
        if fresh.block_sizes != self.block_sizes
            || fresh.pair_edges != self.pair_edges
            || fresh.block_degrees != self.block_degrees
        {
            return Err(Error::InconsistentState(
                "cached statistics differ from a recount".into(),
            ));
        }
        Ok(())
    }

    /// Same partition with blocks renamed by `perm` (block `s` becomes `perm[s]`).
    pub fn permuted(&self, g: &Graph, perm: &[usize]) -> Result<Self> {
        let labels = self.labels.iter().map(|&s| perm[s]).collect();
        Self::with_convention(g, labels, self.k, self.convention)
    }
}

/// Parses labels from a JSON integer array, or from whitespace-separated
/// `vertex label` lines keyed by the graph's original ids.
pub fn parse_labels(text: &str, g: &Graph) -> Result<Vec<usize>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let labels: Vec<usize> = serde_json::from_str(trimmed)?;
        if labels.len() != g.n() {
            return Err(Error::LabelLength {
                expected: g.n(),
                got: labels.len(),
            });
        }
        return Ok(labels);
    }
    let index = g.id_index();
    let mut labels = vec![None; g.n()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(parse_err("expected `vertex label`".into()));
        };
        let id: u64 = a
            .parse()
            .map_err(|_| parse_err(format!("invalid vertex id {a:?}")))?;
        let label: usize = b
            .parse()
            .map_err(|_| parse_err(format!("invalid label {b:?}")))?;
        let &u = index
            .get(&id)
            .ok_or_else(|| parse_err(format!("vertex {id} is not in the graph")))?;
        labels[u] = Some(label);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(u, l)| {
            l.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("no label for vertex {}", g.ids()[u]),
            })
        })
        .collect()
}
