//! MAP search over block assignments.
//!
//! Each chain runs single-vertex Metropolis on the collapsed log-ICL with an
//! inverse-temperature ramp, remembers the best state it visited, and can
//! finish with a greedy polish. Restarts run in parallel and are merged by
//! `(score, chain id)`, so results do not depend on thread scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_state::BlockState;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::icl::{Family, MoveScorer, PriorConfig, ScoreBreakdown};

/// Moves must gain more than this to count as improvements in the greedy
/// polish; smaller gains are rounding noise.
pub const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleShape {
    Linear,
    Geometric,
}

/// Inverse temperature ramp from `beta_start` to `beta_end` across sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub shape: ScheduleShape,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            beta_start: 0.2,
            beta_end: 5.0,
            shape: ScheduleShape::Geometric,
        }
    }
}

impl Schedule {
    pub fn beta(&self, sweep: usize, sweeps: usize) -> f64 {
        if sweeps <= 1 {
            return self.beta_end;
        }
        let f = sweep as f64 / (sweeps - 1) as f64;
        match self.shape {
            ScheduleShape::Linear => self.beta_start + f * (self.beta_end - self.beta_start),
            ScheduleShape::Geometric => self.beta_start * (self.beta_end / self.beta_start).powf(f),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.beta_start > 0.0 && self.beta_start <= self.beta_end && self.beta_end.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "schedule needs 0 < beta_start <= beta_end < inf, got {} .. {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Random,
    Given(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub family: Family,
    pub k: usize,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub schedule: Schedule,
    /// Run [`greedy_finish`] on each chain's best state.
    pub greedy_finish: bool,
    pub init: Init,
}

impl ChainConfig {
    pub fn new(family: Family, k: usize) -> Self {
        Self {
            family,
            k,
            sweeps: 100,
            restarts: 4,
            seed: 0,
            schedule: Schedule::default(),
            greedy_finish: true,
            init: Init::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "sweeps and restarts must be at least 1".into(),
            ));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub sweep: usize,
    pub chain: usize,
    pub best_score: f64,
}

#[derive(Debug, Clone)]
pub struct MapResult {
    pub state: BlockState,
    pub score: ScoreBreakdown,
    /// Best score after every sweep of every chain (chain-major); when the
    /// greedy polish runs, one extra row per chain at `sweep == sweeps`.
    pub trace: Vec<TracePoint>,
    pub accepted_moves: u64,
    pub chain_id: usize,
}

struct ChainOutcome {
    state: BlockState,
    score: ScoreBreakdown,
    trace: Vec<TracePoint>,
    accepted: u64,
    chain: usize,
}

/// Runs `config.restarts` chains and returns the best state found.
pub fn find_map(g: &Graph, config: &ChainConfig, priors: &PriorConfig) -> Result<MapResult> {
    config.validate()?;
    priors.validate()?;
    if g.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    if config.k > g.n() {
        log::warn!(
            "k = {} exceeds n = {}; some blocks will stay empty",
            config.k,
            g.n()
        );
    }
    if let Init::Given(labels) = &config.init {
        // surface label errors once rather than per chain
        BlockState::from_labels(g, labels.clone(), config.k)?;
    }

    let outcomes: Vec<ChainOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|chain| run_chain(g, config, priors, chain))
        .collect::<Result<_>>()?;

    let mut trace = Vec::new();
    let mut accepted = 0;
    for o in &outcomes {
        trace.extend_from_slice(&o.trace);
        accepted += o.accepted;
    }
    let best = outcomes
        .into_iter()
        .reduce(|a, b| {
            if b.score.total > a.score.total {
                b
            } else {
                a
            }
        })
        .expect("at least one chain");
    Ok(MapResult {
        state: best.state,
        score: best.score,
        trace,
        accepted_moves: accepted,
        chain_id: best.chain,
    })
}

fn run_chain(g: &Graph, config: &ChainConfig, priors: &PriorConfig, chain: usize) -> Result<ChainOutcome> {
    let n = g.n();
    let k = config.k;
    let family = config.family;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(chain as u64));

    let labels = match &config.init {
        Init::Random => (0..n).map(|_| rng.random_range(0..k)).collect(),
        Init::Given(l) => l.clone(),
    };
    let mut state = BlockState::from_labels(g, labels, k)?;
    let mut score = family.log_icl(g, &state, priors)?.total;
    let mut best = score;
    let mut trace = Vec::with_capacity(config.sweeps + 1);
    let mut accepted = 0u64;

    // The best state is either `state` with `undo` rolled back, or a snapshot
    // taken once the undo log grew past n entries.
    let mut undo: Vec<(usize, usize)> = Vec::new();
    let mut snapshot: Option<Vec<usize>> = None;

    let sweeps = if k == 1 { 1 } else { config.sweeps };
    let mut order: Vec<usize> = (0..n).collect();
    let mut scorer = MoveScorer::new();

    for sweep in 0..sweeps {
        if k > 1 {
            let beta = config.schedule.beta(sweep, sweeps);
            order.shuffle(&mut rng);
            for &u in &order {
                let t = rng.random_range(0..k);
                let r = state.label(u);
                if t == r {
                    continue;
                }
                scorer.load(g, &state, u);
                let d = scorer.delta(family, g, &state, u, t, priors);
                if d < 0.0 && rng.random::<f64>() >= (beta * d).exp() {
                    continue;
                }
                state.move_vertex(g, u, t)?;
                score += d;
                accepted += 1;
                if score > best {
                    best = score;
                    undo.clear();
                    snapshot = None;
                } else if snapshot.is_none() {
                    undo.push((u, r));
                    if undo.len() > n {
                        let mut labels = state.labels().to_vec();
                        for &(v, s) in undo.iter().rev() {
                            labels[v] = s;
                        }
                        snapshot = Some(labels);
                        undo.clear();
                    }
                }
            }
            // resynchronise the running sum with an exact rescore
            let exact = family.log_icl(g, &state, priors)?.total;
            if undo.is_empty() && snapshot.is_none() {
                best = exact;
            }
            score = exact;
        }
        trace.push(TracePoint {
            sweep,
            chain,
            best_score: best,
        });
    }

    if let Some(labels) = snapshot {
        state = BlockState::from_labels(g, labels, k)?;
    } else {
        for &(v, s) in undo.iter().rev() {
            state.move_vertex(g, v, s)?;
        }
    }
    if config.greedy_finish && k > 1 {
        state = greedy_finish(g, state, family, priors)?;
    }
    let final_score = family.log_icl(g, &state, priors)?;
    if config.greedy_finish && k > 1 {
        trace.push(TracePoint {
            sweep: sweeps,
            chain,
            best_score: final_score.total,
        });
    }
    Ok(ChainOutcome {
        state,
        score: final_score,
        trace,
        accepted,
        chain,
    })
}

/// Applies improving single-vertex moves until none is left.
///
/// Vertices are visited in index order; each takes its best target if that
/// gains more than [`IMPROVEMENT_EPS`]. Passes repeat until one makes no move.
pub fn greedy_finish(
    g: &Graph,
    state: BlockState,
    family: Family,
    priors: &PriorConfig,
) -> Result<BlockState> {
    greedy_finish_traced(g, state, family, priors).map(|(s, _)| s)
}

/// [`greedy_finish`] plus the exact score after each pass (the first entry is
/// the starting score).
pub fn greedy_finish_traced(
    g: &Graph,
    mut state: BlockState,
    family: Family,
    priors: &PriorConfig,
) -> Result<(BlockState, Vec<f64>)> {
    state.check_against(g)?;
    let mut scores = vec![family.log_icl(g, &state, priors)?.total];
    let k = state.k();
    let mut scorer = MoveScorer::new();
    loop {
        let mut moved = false;
        for u in 0..g.n() {
            scorer.load(g, &state, u);
            let r = state.label(u);
            let mut best = (IMPROVEMENT_EPS, r);
            for t in (0..k).filter(|&t| t != r) {
                let d = scorer.delta(family, g, &state, u, t, priors);
                if d > best.0 {
                    best = (d, t);
                }
            }
            if best.1 != r {
                state.move_vertex(g, u, best.1)?;
                moved = true;
            }
        }
        scores.push(family.log_icl(g, &state, priors)?.total);
        if !moved {
            break;
        }
    }
    Ok((state, scores))
}

/// Relabels `labels` onto `0..k` by greedily merging block pairs.
///
/// Occupied blocks are first renumbered in order of first appearance. While
/// more than `k` remain, the pair whose merge scores best is merged (ties go
/// to the lexicographically first pair). Useful for seeding a chain at `k`
/// from a state found at a larger order.
pub fn merge_down(
    g: &Graph,
    labels: &[usize],
    k: usize,
    family: Family,
    priors: &PriorConfig,
) -> Result<Vec<usize>> {
    if labels.len() != g.n() {
        return Err(Error::LabelLength {
            expected: g.n(),
            got: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (mut current, mut used) = compact_labels(labels);
    while used > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for s in 0..used {
            for t in (s + 1)..used {
                let merged = merge_pair(&current, s, t);
                let state = BlockState::from_labels(g, merged, used - 1)?;
                let score = family.log_icl(g, &state, priors)?.total;
                if best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, s, t));
                }
            }
        }
        let (_, s, t) = best.expect("at least two blocks");
        current = merge_pair(&current, s, t);
        used -= 1;
    }
    Ok(current)
}

fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Folds block `t` into `s` (with `s < t`) and closes the gap at `t`.
fn merge_pair(labels: &[usize], s: usize, t: usize) -> Vec<usize> {
    labels
        .iter()
        .map(|&l| match l {
            l if l == t => s,
            l if l > t => l - 1,
            l => l,
        })
        .collect()
}

/// Largest single-move gain available from `state`, found by trying every
/// vertex and target.
pub fn best_single_move(
    g: &Graph,
    state: &BlockState,
    family: Family,
    priors: &PriorConfig,
) -> (f64, usize, usize) {
    let mut scorer = MoveScorer::new();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for u in 0..g.n() {
        scorer.load(g, state, u);
        for t in (0..state.k()).filter(|&t| t != state.label(u)) {
            let d = scorer.delta(family, g, state, u, t, priors);
            if d > best.0 {
                best = (d, u, t);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 6] {
            for u in 0..6 {
                for v in (u + 1)..6 {
                    edges.push((base + u, base + v));
                }
            }
        }
        edges.push((0, 6));
        Graph::from_edges(12, edges).unwrap()
    }

    #[test]
    fn schedule_endpoints() {
        let s = Schedule::default();
        assert!((s.beta(0, 10) - 0.2).abs() < 1e-15);
        assert!((s.beta(9, 10) - 5.0).abs() < 1e-12);
        let lin = Schedule {
            shape: ScheduleShape::Linear,
            ..s
        };
        assert!((lin.beta(5, 11) - 2.6).abs() < 1e-12);
        assert!(Schedule { beta_start: 2.0, beta_end: 1.0, shape: ScheduleShape::Linear }
            .validate()
            .is_err());
    }

    #[test]
    fn single_block_is_trivial() {
        let g = two_cliques();
        let res = find_map(&g, &ChainConfig::new(Family::Vanilla, 1), &PriorConfig::uniform()).unwrap();
        assert!(res.state.labels().iter().all(|&l| l == 0));
        let want = Family::Vanilla
            .log_icl(&g, &BlockState::single_block(&g, 1).unwrap(), &PriorConfig::uniform())
            .unwrap()
            .total;
        assert_eq!(res.score.total, want);
        assert_eq!(res.trace.len(), 4);
        assert!(res.trace.iter().all(|t| t.sweep == 0));
    }

    #[test]
    fn finds_two_cliques() {
        let g = two_cliques();
        let mut cfg = ChainConfig::new(Family::Vanilla, 2);
        cfg.sweeps = 30;
        let res = find_map(&g, &cfg, &PriorConfig::uniform()).unwrap();
        let l = res.state.labels();
        assert!(l[..6].iter().all(|&x| x == l[0]));
        assert!(l[6..].iter().all(|&x| x == l[6]));
        assert_ne!(l[0], l[6]);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = two_cliques();
        let p = PriorConfig::uniform();
        let mut cfg = ChainConfig::new(Family::Vanilla, 0);
        assert!(find_map(&g, &cfg, &p).is_err());
        cfg.k = 2;
        cfg.sweeps = 0;
        assert!(find_map(&g, &cfg, &p).is_err());
        cfg.sweeps = 1;
        cfg.init = Init::Given(vec![0; 3]);
        assert!(find_map(&g, &cfg, &p).is_err());
        let empty = Graph::from_edges(0, []).unwrap();
        assert!(matches!(
            find_map(&empty, &ChainConfig::new(Family::Vanilla, 1), &p),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn k_larger_than_n_still_runs() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let mut cfg = ChainConfig::new(Family::DegreeCorrected, 5);
        cfg.sweeps = 3;
        let res = find_map(&g, &cfg, &PriorConfig::uniform()).unwrap();
        assert_eq!(res.state.k(), 5);
    }

    #[test]
    fn greedy_fixes_one_flipped_vertex() {
        let g = two_cliques();
        let mut labels = vec![0; 6];
        labels.extend([1; 6]);
        labels[3] = 1;
        let st = BlockState::from_labels(&g, labels, 2).unwrap();
        let (fixed, scores) =
            greedy_finish_traced(&g, st, Family::Vanilla, &PriorConfig::uniform()).unwrap();
        assert_eq!(fixed.label(3), 0);
        assert!(scores.windows(2).all(|w| w[1] >= w[0]));
        // one pass moves, the next confirms
        assert_eq!(scores.len(), 3);
    }

    #[test]
    fn greedy_fixed_point_is_unchanged() {
        let g = two_cliques();
        let mut labels = vec![0; 6];
        labels.extend([1; 6]);
        let st = BlockState::from_labels(&g, labels, 2).unwrap();
        let out = greedy_finish(&g, st.clone(), Family::DegreeCorrected, &PriorConfig::uniform()).unwrap();
        assert_eq!(out, st);
    }
}
