//! Order and model selection: BIC variants, the degree-correction likelihood
//! ratio, the expected-gap normalisation and the (family x k) sweep.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_state::BlockState;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::icl::dc::{dc_log_likelihood, max_theta_log_factor, mle_dc_params};
use crate::icl::sbm::{mle_params, sbm_log_likelihood};
use crate::icl::{Family, PriorConfig};
use crate::search::{find_map, merge_down, ChainConfig, Init, IMPROVEMENT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Dense,
    Sparse,
}

/// Edge-density scaling of a graph and the matching BIC sample-size term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRegime {
    pub regime: Regime,
    /// `m / n^2` when dense, `m / n` when sparse.
    pub rho: f64,
    /// `ln n^2` when dense, `ln n^3` when sparse.
    pub sample_size_log: f64,
}

impl DensityRegime {
    pub fn forced(regime: Regime, n: usize, m: usize) -> Self {
        let nf = n as f64;
        match regime {
            Regime::Dense => Self {
                regime,
                rho: m as f64 / (nf * nf),
                sample_size_log: 2.0 * nf.ln(),
            },
            Regime::Sparse => Self {
                regime,
                rho: m as f64 / nf,
                sample_size_log: 3.0 * nf.ln(),
            },
        }
    }
}

/// Dense iff `m >= n^{3/2}`, the geometric midpoint between linear and
/// quadratic edge scaling.
pub fn density_regime(n: usize, m: usize) -> DensityRegime {
    let regime = if m as f64 >= (n as f64).powf(1.5) {
        Regime::Dense
    } else {
        Regime::Sparse
    };
    DensityRegime::forced(regime, n, m)
}

/// `-2 ln P(G, g | q_hat, p_hat) + k^2 ln n*`, asymptotic constants set to 1.
pub fn bic_sbm(g: &Graph, state: &BlockState, regime: &DensityRegime) -> Result<f64> {
    let ll = sbm_log_likelihood(g, state, &mle_params(state))?;
    let k = state.k() as f64;
    Ok(-2.0 * ll + k * k * regime.sample_size_log)
}

/// Degree-corrected BIC: the vanilla penalty plus `2 ln n`.
pub fn bic_dc(g: &Graph, state: &BlockState, regime: &DensityRegime) -> Result<f64> {
    let ll = dc_log_likelihood(g, state, &mle_dc_params(g, state))?;
    let k = state.k() as f64;
    Ok(-2.0 * ll + k * k * regime.sample_size_log + 2.0 * (g.n() as f64).ln())
}

/// Log-likelihood ratio of the degree-corrected over the vanilla model at a
/// shared labelling: `sum_u d_u ln theta_hat_u`. Never negative.
pub fn lambda_dc(g: &Graph, state: &BlockState) -> Result<f64> {
    state.check_against(g)?;
    // nonnegative by Gibbs' inequality; clamp away rounding at the null point
    Ok(max_theta_log_factor(g, state).max(0.0))
}

/// Which form of the expected likelihood-ratio gap to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapForm {
    /// `(1/2 + n / 24m)(n - k)`, the mean of the ratio under the vanilla null.
    #[default]
    Mean,
    /// The logarithm of the above.
    AsPrinted,
}

/// Expected `lambda_dc` under the vanilla model with `k` blocks.
pub fn expected_gap(n: usize, m: usize, k: usize, form: GapForm) -> Result<f64> {
    if n <= k {
        return Err(Error::InvalidParameter(format!(
            "expected gap needs n > k, got n = {n}, k = {k}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("expected gap needs at least one edge".into()));
    }
    let gap = (0.5 + n as f64 / (24.0 * m as f64)) * (n - k) as f64;
    Ok(match form {
        GapForm::Mean => gap,
        GapForm::AsPrinted => gap.ln(),
    })
}

/// A log-ICL curve over k.
pub type Curve = BTreeMap<usize, f64>;

/// Shifts the degree-corrected curve by `expected_gap(n, m, k_ref)`.
///
/// `k_ref` defaults to the maximiser of the vanilla curve. The vanilla curve
/// is not modified; this returns the shifted degree-corrected curve and the
/// `k_ref` used.
pub fn normalize_dc_curve(
    dc_scores: &Curve,
    sbm_scores: &Curve,
    n: usize,
    m: usize,
    k_ref: Option<usize>,
    form: GapForm,
) -> Result<(Curve, usize)> {
    if dc_scores.len() < 2 || sbm_scores.len() < 2 {
        return Err(Error::InvalidParameter(
            "normalisation needs curves over at least two values of k".into(),
        ));
    }
    let k_ref = match k_ref {
        Some(k) => k,
        None => argmax(sbm_scores).expect("non-empty curve"),
    };
    if !dc_scores.contains_key(&k_ref) || !sbm_scores.contains_key(&k_ref) {
        return Err(Error::InvalidParameter(format!(
            "reference k = {k_ref} is missing from one of the curves"
        )));
    }
    let gap = expected_gap(n, m, k_ref, form)?;
    let shifted = dc_scores.iter().map(|(&k, &v)| (k, v - gap)).collect();
    Ok((shifted, k_ref))
}

fn argmax(curve: &Curve) -> Option<usize> {
    // first maximum in ascending k
    curve
        .iter()
        .fold(None, |acc: Option<(usize, f64)>, (&k, &v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub regime: DensityRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub family: Family,
    pub k: usize,
    pub log_icl: f64,
    /// Degree-corrected scores shifted onto the vanilla scale; equal to
    /// `log_icl` for the vanilla family.
    pub log_icl_normalized: f64,
    pub bic: f64,
    pub lambda_dc: f64,
    pub seed: u64,
    /// Key into [`SelectionReport::assignments`].
    pub map_state_ref: String,
}

/// Grid coordinates of a selected model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRef {
    pub family: Family,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Reference order for the normalisation; defaults to the vanilla argmax.
    pub k_ref: Option<usize>,
    /// Overrides the automatic density-regime rule.
    pub regime: Option<Regime>,
    pub gap_form: GapForm,
    /// Re-search every cell from states found at neighbouring cells.
    pub refine: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            k_ref: None,
            regime: None,
            gap_form: GapForm::Mean,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub graph: GraphSummary,
    pub grid: Vec<ModelScore>,
    pub best_by_icl: GridRef,
    pub best_by_bic: GridRef,
    /// Reference order used for the normalisation, when one was applied.
    pub k_ref: Option<usize>,
    pub expected_gap: Option<f64>,
    pub conventions: BTreeMap<String, String>,
    pub assignments: BTreeMap<String, Vec<usize>>,
}

impl SelectionReport {
    pub fn cell(&self, family: Family, k: usize) -> Option<&ModelScore> {
        self.grid.iter().find(|c| c.family == family && c.k == k)
    }

    /// `(k, value)` pairs for one family, ascending in k.
    pub fn curve(&self, family: Family, normalized: bool) -> Curve {
        self.grid
            .iter()
            .filter(|c| c.family == family)
            .map(|c| (c.k, if normalized { c.log_icl_normalized } else { c.log_icl }))
            .collect()
    }
}

/// Per-cell seed, decorrelated across families and orders.
pub fn cell_seed(base: u64, family: Family, k: usize) -> u64 {
    let tag = ((family as u64) << 32) | k as u64;
    splitmix64(base ^ splitmix64(tag))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Fits every `(family, k)` cell and ranks them.
///
/// `chain` supplies sweeps, restarts, schedule and the base seed; its
/// `family`, `k` and `init` are overridden per cell.
pub fn sweep(
    g: &Graph,
    k_range: &[usize],
    families: &[Family],
    chain: &ChainConfig,
    priors: &PriorConfig,
    options: &SweepOptions,
) -> Result<SelectionReport> {
    if k_range.is_empty() || families.is_empty() {
        return Err(Error::InvalidParameter("empty k range or family list".into()));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut fams = families.to_vec();
    fams.sort_unstable();
    fams.dedup();

    let regime = match options.regime {
        Some(r) => DensityRegime::forced(r, g.n(), g.m()),
        None => density_regime(g.n(), g.m()),
    };

    let cells: Vec<(Family, usize)> = fams
        .iter()
        .flat_map(|&f| ks.iter().map(move |&k| (f, k)))
        .collect();

    let mut fits: BTreeMap<(Family, usize), CellFit> = cells
        .par_iter()
        .map(|&(family, k)| {
            let mut cfg = chain.clone();
            cfg.family = family;
            cfg.k = k;
            cfg.seed = cell_seed(chain.seed, family, k);
            cfg.init = Init::Random;
            let res = find_map(g, &cfg, priors)?;
            Ok((
                (family, k),
                CellFit {
                    seed: cfg.seed,
                    score: res.score.total,
                    labels: res.state.into_labels(),
                },
            ))
        })
        .collect::<Result<_>>()?;

    if options.refine {
        let refined: Vec<Vec<((Family, usize), CellFit)>> = fams
            .par_iter()
            .map(|&family| refine_family(g, &ks, family, &fits, chain, priors))
            .collect::<Result<_>>()?;
        for (key, fit) in refined.into_iter().flatten() {
            fits.insert(key, fit);
        }
    }

    let grid_rows: Vec<(ModelScore, Vec<usize>)> = cells
        .par_iter()
        .map(|&(family, k)| {
            let fit = &fits[&(family, k)];
            let state = BlockState::from_labels(g, fit.labels.clone(), k)?;
            let bic = match family {
                Family::Vanilla => bic_sbm(g, &state, &regime)?,
                Family::DegreeCorrected => bic_dc(g, &state, &regime)?,
            };
            Ok((
                ModelScore {
                    family,
                    k,
                    log_icl: fit.score,
                    log_icl_normalized: fit.score,
                    bic,
                    lambda_dc: lambda_dc(g, &state)?,
                    seed: fit.seed,
                    map_state_ref: format!("{}:{}", family.as_str(), k),
                },
                fit.labels.clone(),
            ))
        })
        .collect::<Result<_>>()?;

    let mut grid = Vec::with_capacity(grid_rows.len());
    let mut assignments = BTreeMap::new();
    for (score, labels) in grid_rows {
        assignments.insert(score.map_state_ref.clone(), labels);
        grid.push(score);
    }

    let mut k_ref = None;
    let mut gap = None;
    let both = fams.contains(&Family::Vanilla) && fams.contains(&Family::DegreeCorrected);
    if both {
        let dc = curve_of(&grid, Family::DegreeCorrected);
        let sbm = curve_of(&grid, Family::Vanilla);
        let (shifted, kr) = normalize_dc_curve(&dc, &sbm, g.n(), g.m(), options.k_ref, options.gap_form)?;
        for cell in grid.iter_mut().filter(|c| c.family == Family::DegreeCorrected) {
            cell.log_icl_normalized = shifted[&cell.k];
        }
        k_ref = Some(kr);
        gap = Some(expected_gap(g.n(), g.m(), kr, options.gap_form)?);
    }

    let best_by_icl = pick(&grid, |a, b| b.log_icl_normalized > a.log_icl_normalized);
    let best_by_bic = pick(&grid, |a, b| b.bic < a.bic);

    let mut conventions = BTreeMap::new();
    conventions.insert(
        "bic_constants".to_string(),
        "asymptotic Theta(.) constants fixed to 1".to_string(),
    );
    conventions.insert(
        "gap_form".to_string(),
        match options.gap_form {
            GapForm::Mean => "mean",
            GapForm::AsPrinted => "as_printed",
        }
        .to_string(),
    );
    conventions.insert("pair_count_convention".to_string(), "simple".to_string());
    conventions.insert(
        "search".to_string(),
        if options.refine {
            "random restarts, then seeded from neighbouring cells"
        } else {
            "random restarts"
        }
        .to_string(),
    );

    Ok(SelectionReport {
        graph: GraphSummary {
            n: g.n(),
            m: g.m(),
            regime,
        },
        grid,
        best_by_icl,
        best_by_bic,
        k_ref,
        expected_gap: gap,
        conventions,
        assignments,
    })
}

struct CellFit {
    seed: u64,
    score: f64,
    labels: Vec<usize>,
}

const REFINE_TAG: u64 = 0x5EED_0F_CE11;

/// Second pass over one family, from the largest k down. Each cell is
/// re-searched from the other family's state at the same k and from this
/// family's refined state at the next larger k, both merged down to k blocks;
/// a result replaces the first-pass one only if it scores strictly higher.
fn refine_family(
    g: &Graph,
    ks: &[usize],
    family: Family,
    fits: &BTreeMap<(Family, usize), CellFit>,
    chain: &ChainConfig,
    priors: &PriorConfig,
) -> Result<Vec<((Family, usize), CellFit)>> {
    let mut out: Vec<((Family, usize), CellFit)> = Vec::new();
    for &k in ks.iter().rev() {
        let first = &fits[&(family, k)];
        let mut seeds: Vec<&[usize]> = Vec::new();
        for (&(f, kk), fit) in fits {
            if f != family && kk == k {
                seeds.push(&fit.labels);
            }
        }
        if let Some((_, above)) = out.last() {
            seeds.push(&above.labels);
        }
        let mut best = CellFit {
            seed: first.seed,
            score: first.score,
            labels: first.labels.clone(),
        };
        for (i, labels) in seeds.into_iter().enumerate() {
            let mut cfg = chain.clone();
            cfg.family = family;
            cfg.k = k;
            cfg.seed = cell_seed(chain.seed ^ REFINE_TAG, family, k).wrapping_add(i as u64);
            cfg.init = Init::Given(merge_down(g, labels, k, family, priors)?);
            let res = find_map(g, &cfg, priors)?;
            if res.score.total > best.score + IMPROVEMENT_EPS {
                best = CellFit {
                    seed: cfg.seed,
                    score: res.score.total,
                    labels: res.state.into_labels(),
                };
            }
        }
        out.push(((family, k), best));
    }
    Ok(out)
}

fn curve_of(grid: &[ModelScore], family: Family) -> Curve {
    grid.iter()
        .filter(|c| c.family == family)
        .map(|c| (c.k, c.log_icl))
        .collect()
}

fn pick(grid: &[ModelScore], better: impl Fn(&ModelScore, &ModelScore) -> bool) -> GridRef {
    let mut best = &grid[0];
    for c in &grid[1..] {
        if better(best, c) {
            best = c;
        }
    }
    GridRef {
        family: best.family,
        k: best.k,
    }
}
