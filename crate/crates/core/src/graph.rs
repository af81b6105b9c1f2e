//! Immutable simple undirected graphs.
//!
//! Vertices are dense `0..n` indices. The original ids seen at ingestion are
//! kept alongside so reports can refer back to the input file.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Edge-list parsing switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Ids in the file start at 1.
    pub one_indexed: bool,
    /// Silently skip repeated edges instead of rejecting them.
    pub drop_duplicates: bool,
}

/// A simple undirected graph with cached adjacency and degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph on `n` vertices. Edges may be given in either
    /// orientation; self-loops, repeats and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::build(n, edges, (0..n as u64).collect())
    }

    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        ids: Vec<u64>,
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut list = Vec::new();
        for (a, b) in edges {
            for &x in &[a, b] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop {
                    line: 0,
                    vertex: ids[a],
                });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            adjacency[u].push(v);
            adjacency[v].push(u);
            list.push((u, v));
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if let Some(w) = nbrs.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u.min(w[0]), u.max(w[0]));
                return Err(Error::DuplicateEdge {
                    line: 0,
                    u: ids[a],
                    v: ids[b],
                });
            }
        }
        list.sort_unstable();
        let degrees = adjacency.iter().map(Vec::len).collect();
        Ok(Self {
            edges: list,
            adjacency,
            degrees,
            ids,
        })
    }

    /// Parses a whitespace-delimited edge list. Lines starting with `#` are
    /// comments; CRLF line endings are accepted.
    ///
    /// If the ids seen form the contiguous range `0..n` (or `1..=n` when
    /// `one_indexed`) they are used directly; otherwise they are compacted in
    /// first-seen order.
    pub fn parse_edge_list(text: &str, options: LoadOptions) -> Result<Self> {
        let mut raw: Vec<(u64, u64)> = Vec::new();
        let mut seen: HashSet<(u64, u64)> = HashSet::new();
        let mut order: Vec<u64> = Vec::new();
        let mut index: HashMap<u64, usize> = HashMap::new();

        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let mut next_id = || -> Result<u64> {
                let tok = tokens.next().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected two vertex ids".into(),
                })?;
                let id: u64 = tok.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid vertex id {tok:?}"),
                })?;
                if options.one_indexed {
                    id.checked_sub(1).ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: "vertex id 0 in a one-indexed file".into(),
                    })
                } else {
                    Ok(id)
                }
            };
            let a = next_id()?;
            let b = next_id()?;
            if a == b {
                return Err(Error::SelfLoop {
                    line: line_no,
                    vertex: a + u64::from(options.one_indexed),
                });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                if options.drop_duplicates {
                    continue;
                }
                let shift = u64::from(options.one_indexed);
                return Err(Error::DuplicateEdge {
                    line: line_no,
                    u: key.0 + shift,
                    v: key.1 + shift,
                });
            }
            for id in [a, b] {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(id) {
                    e.insert(order.len());
                    order.push(id);
                }
            }
            raw.push((a, b));
        }

        let n = order.len();
        let dense = order.iter().all(|&id| (id as usize) < n);
        let shift = u64::from(options.one_indexed);
        let (ids, map): (Vec<u64>, Box<dyn Fn(u64) -> usize>) = if dense {
            ((0..n as u64).map(|i| i + shift).collect(), Box::new(|id| id as usize))
        } else {
            (
                order.iter().map(|&id| id + shift).collect(),
                Box::new(move |id| index[&id]),
            )
        };
        let edges: Vec<(usize, usize)> = raw.iter().map(|&(a, b)| (map(a), map(b))).collect();
        Self::build(n, edges, ids)
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbours of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Original id of each vertex as it appeared in the input.
    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Maps original ids back to vertex indices.
    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
    }

    /// Writes the graph as an edge list using the original ids.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 10);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", self.ids[u], self.ids[v]);
        }
        out
    }

    /// Connected components, each a sorted list of vertices, in order of
    /// their smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `vertices` (sorted, distinct), keeping original ids.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Self> {
        let mut remap = vec![usize::MAX; self.n()];
        for (i, &u) in vertices.iter().enumerate() {
            if u >= self.n() {
                return Err(Error::VertexOutOfRange {
                    vertex: u,
                    n: self.n(),
                });
            }
            remap[u] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| remap[u] != usize::MAX && remap[v] != usize::MAX)
            .map(|&(u, v)| (remap[u], remap[v]));
        let ids = vertices.iter().map(|&u| self.ids[u]).collect();
        Self::build(vertices.len(), edges, ids)
    }

    /// The largest connected component; ties go to the component holding the
    /// smallest vertex index.
    pub fn largest_component(&self) -> Result<Self> {
        if self.n() == 0 {
            return Err(Error::EmptyGraph);
        }
        let comps = self.components();
        // components() is ordered by minimum vertex, so the first maximum wins ties
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("non-empty graph has a component");
        self.induced_subgraph(&comps[best])
    }

    /// Checks the structural invariants. Used by tests and the CLI's
    /// internal-consistency exit path.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        let total: usize = self.degrees.iter().sum();
        if total != 2 * self.m() {
            return Err(Error::InconsistentState(format!(
                "degree sum {total} != 2m = {}",
                2 * self.m()
            )));
        }
        for u in 0..n {
            for &w in &self.adjacency[u] {
                if w == u || self.adjacency[w].binary_search(&u).is_err() {
                    return Err(Error::InconsistentState(format!(
                        "adjacency not symmetric at ({u}, {w})"
                    )));
                }
            }
            if n > 0 && self.degrees[u] >= n {
                return Err(Error::InconsistentState(format!("degree of {u} >= n")));
            }
        }
        Ok(())
    }
}

/// Alias for [`Graph::parse_edge_list`].
pub fn load_edge_list(text: &str, options: LoadOptions) -> Result<Graph> {
    Graph::parse_edge_list(text, options)
}
