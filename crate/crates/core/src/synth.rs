//! Seeded generators for planted-partition benchmarks.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Vanilla SBM generator settings. `p` is row-major `k x k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub k: usize,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

/// Two-level propensity profile: a vertex is "high" with probability
/// `high_fraction` and then has `ratio` times the propensity of a "low" one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalProfile {
    /// Target expected degree of low vertices; when set, `omega` is rescaled
    /// by one global factor to hit it.
    #[serde(default)]
    pub low_mean: Option<f64>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_half")]
    pub high_fraction: f64,
}

fn default_ratio() -> f64 {
    3.0
}

fn default_half() -> f64 {
    0.5
}

impl Default for BimodalProfile {
    fn default() -> Self {
        Self {
            low_mean: None,
            ratio: 3.0,
            high_fraction: 0.5,
        }
    }
}

/// Degree-corrected generator settings. `omega` is row-major `k x k`.
/// Without a profile every propensity is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcSpec {
    pub n: usize,
    pub k: usize,
    pub q: Vec<f64>,
    pub omega: Vec<f64>,
    #[serde(default)]
    pub degree_profile: Option<BimodalProfile>,
    #[serde(default)]
    pub seed: u64,
}

/// A generated graph with its planted labels.
#[derive(Debug, Clone)]
pub struct Planted {
    pub graph: Graph,
    pub labels: Vec<usize>,
    /// Propensities used (all 1 for the vanilla sampler).
    pub theta: Vec<f64>,
    /// Fraction of edge-bearing pairs whose Poisson draw exceeded 1.
    pub collapse_rate: f64,
    pub warnings: Vec<String>,
}

fn check_shape(n: usize, k: usize, q: &[f64], matrix: &[f64], upper: Option<f64>) -> Result<()> {
    if k == 0 || q.len() != k || matrix.len() != k * k {
        return Err(Error::InvalidParameter(
            "generator needs k > 0, |q| = k and a k x k matrix".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("generator needs n > 0".into()));
    }
    if q.iter().any(|&x| !(x >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("q must lie on the simplex".into()));
    }
    for s in 0..k {
        for t in 0..k {
            let v = matrix[s * k + t];
            let in_range = v >= 0.0 && upper.map_or(v.is_finite(), |u| v <= u);
            if !in_range || v != matrix[t * k + s] {
                return Err(Error::InvalidParameter(
                    "block matrix must be symmetric and in range".into(),
                ));
            }
        }
    }
    Ok(())
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        check_shape(self.n, self.k, &self.q, &self.p, Some(1.0))
    }

    /// `k` equal blocks with `p_in` on the diagonal and `p_out` elsewhere.
    pub fn planted(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Self {
        let p = (0..k * k)
            .map(|i| if i / k == i % k { p_in } else { p_out })
            .collect();
        Self {
            n,
            k,
            q: vec![1.0 / k as f64; k],
            p,
            seed,
        }
    }
}

impl DcSpec {
    pub fn validate(&self) -> Result<()> {
        check_shape(self.n, self.k, &self.q, &self.omega, None)?;
        if let Some(p) = &self.degree_profile {
            let ok = p.ratio > 0.0
                && p.ratio.is_finite()
                && (0.0..=1.0).contains(&p.high_fraction)
                && p.low_mean.is_none_or(|m| m > 0.0 && m.is_finite());
            if !ok {
                return Err(Error::InvalidParameter("invalid degree profile".into()));
            }
        }
        Ok(())
    }
}

fn draw_labels(rng: &mut ChaCha8Rng, n: usize, q: &[f64]) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(q)
        .map_err(|e| Error::InvalidParameter(format!("block weights: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// Labels from `q`, then each pair independently with `p_{g(u) g(v)}`.
pub fn sample_sbm(spec: &SbmSpec) -> Result<Planted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = draw_labels(&mut rng, spec.n, &spec.q)?;
    let k = spec.k;
    let mut edges = Vec::new();
    for u in 0..spec.n {
        for v in (u + 1)..spec.n {
            let p = spec.p[labels[u] * k + labels[v]];
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Planted {
        graph: Graph::from_edges(spec.n, edges)?,
        labels,
        theta: vec![1.0; spec.n],
        collapse_rate: 0.0,
        warnings: Vec::new(),
    })
}

/// Per-block propensities normalised to sum to the block size.
fn draw_theta(
    rng: &mut ChaCha8Rng,
    labels: &[usize],
    k: usize,
    profile: Option<&BimodalProfile>,
) -> (Vec<f64>, Vec<bool>) {
    let n = labels.len();
    let Some(profile) = profile else {
        return (vec![1.0; n], vec![false; n]);
    };
    let high: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < profile.high_fraction).collect();
    let raw: Vec<f64> = high.iter().map(|&h| if h { profile.ratio } else { 1.0 }).collect();
    let mut sums = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (u, &s) in labels.iter().enumerate() {
        sums[s] += raw[u];
        sizes[s] += 1;
    }
    let theta = labels
        .iter()
        .enumerate()
        .map(|(u, &s)| raw[u] * sizes[s] as f64 / sums[s])
        .collect();
    (theta, high)
}

/// Labels from `q`, propensities from the profile, then a Poisson draw with
/// mean `theta_u theta_v omega_st` per pair, collapsed to a simple edge.
pub fn sample_dc_sbm(spec: &DcSpec) -> Result<Planted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = draw_labels(&mut rng, spec.n, &spec.q)?;
    let k = spec.k;
    let (theta, high) = draw_theta(&mut rng, &labels, k, spec.degree_profile.as_ref());

    let mut omega = spec.omega.clone();
    if let Some(target) = spec.degree_profile.as_ref().and_then(|p| p.low_mean) {
        let mut theta_by_block = vec![0.0; k];
        for (u, &s) in labels.iter().enumerate() {
            theta_by_block[s] += theta[u];
        }
        let (mut total, mut count) = (0.0, 0usize);
        for u in (0..spec.n).filter(|&u| !high[u]) {
            let s = labels[u];
            let rate: f64 = (0..k).map(|t| theta_by_block[t] * omega[s * k + t]).sum();
            total += theta[u] * (rate - theta[u] * omega[s * k + s]);
            count += 1;
        }
        if count > 0 && total > 0.0 {
            let scale = target / (total / count as f64);
            omega.iter_mut().for_each(|w| *w *= scale);
        }
    }

    let mut edges = Vec::new();
    let (mut multi, mut nonzero) = (0usize, 0usize);
    for u in 0..spec.n {
        for v in (u + 1)..spec.n {
            let lambda = theta[u] * theta[v] * omega[labels[u] * k + labels[v]];
            if lambda <= 0.0 {
                continue;
            }
            let count = Poisson::new(lambda)
                .map_err(|e| Error::InvalidParameter(format!("poisson rate {lambda}: {e}")))?
                .sample(&mut rng);
            if count >= 1.0 {
                nonzero += 1;
                if count >= 2.0 {
                    multi += 1;
                }
                edges.push((u, v));
            }
        }
    }
    let collapse_rate = if nonzero == 0 {
        0.0
    } else {
        multi as f64 / nonzero as f64
    };
    let mut warnings = Vec::new();
    if collapse_rate > 0.01 {
        warnings.push(format!(
            "{:.2}% of edges collapsed from multi-edges; rates are too high for the simple-graph regime",
            100.0 * collapse_rate
        ));
    }
    Ok(Planted {
        graph: Graph::from_edges(spec.n, edges)?,
        labels,
        theta,
        collapse_rate,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let empty = sample_sbm(&SbmSpec::planted(20, 2, 0.0, 0.0, 1)).unwrap();
        assert_eq!(empty.graph.m(), 0);
        let full = sample_sbm(&SbmSpec::planted(20, 2, 1.0, 1.0, 1)).unwrap();
        assert_eq!(full.graph.m(), 190);
        let dc = DcSpec {
            n: 20,
            k: 1,
            q: vec![1.0],
            omega: vec![0.0],
            degree_profile: Some(BimodalProfile::default()),
            seed: 3,
        };
        assert_eq!(sample_dc_sbm(&dc).unwrap().graph.m(), 0);
    }

    #[test]
    fn seeded() {
        let spec = SbmSpec::planted(100, 3, 0.2, 0.02, 9);
        let a = sample_sbm(&spec).unwrap();
        let b = sample_sbm(&spec).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.labels, b.labels);
        let c = sample_sbm(&SbmSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn theta_normalised_per_block() {
        let spec = DcSpec {
            n: 300,
            k: 3,
            q: vec![1.0 / 3.0; 3],
            omega: vec![0.01; 9],
            degree_profile: Some(BimodalProfile::default()),
            seed: 5,
        };
        let out = sample_dc_sbm(&spec).unwrap();
        let mut sums = [0.0; 3];
        let mut sizes = [0.0; 3];
        for (u, &s) in out.labels.iter().enumerate() {
            sums[s] += out.theta[u];
            sizes[s] += 1.0;
        }
        for s in 0..3 {
            assert!((sums[s] - sizes[s]).abs() < 1e-9);
        }
        assert!(out.theta.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn invalid_specs() {
        let mut spec = SbmSpec::planted(10, 2, 0.5, 0.1, 0);
        spec.p[1] = 0.2;
        assert!(sample_sbm(&spec).is_err());
        spec = SbmSpec::planted(10, 2, 1.5, 0.1, 0);
        assert!(sample_sbm(&spec).is_err());
        spec = SbmSpec::planted(10, 2, 0.5, 0.1, 0);
        spec.q = vec![0.7, 0.7];
        assert!(sample_sbm(&spec).is_err());
    }
}
