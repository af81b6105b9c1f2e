#![allow(dead_code)]

use blockselect::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre nodes and weights mapped to [0, 1]. Exact for polynomials
/// of degree below 2n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        out.push(((1.0 - z) / 2.0, w / 2.0));
    }
    out
}

/// Every graph on `n` vertices up to isomorphism, as edge lists.
pub fn nonisomorphic_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    let perms = permutations(n);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << pairs.len()) {
        let canon = perms
            .iter()
            .map(|p| {
                let mut m = 0u32;
                for (i, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        let (a, b) = (p[u].min(p[v]), p[u].max(p[v]));
                        let j = pairs.iter().position(|&e| e == (a, b)).unwrap();
                        m |= 1 << j;
                    }
                }
                m
            })
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect(),
            );
        }
    }
    out
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// All labelings of `n` vertices with labels in `0..k`.
pub fn all_labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let l = code % k;
                    code /= k;
                    l
                })
                .collect()
        })
        .collect()
}

/// Erdős–Rényi graph for randomized checks.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn karate() -> Graph {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/karate.edges");
    let text = std::fs::read_to_string(path).expect("karate edge list");
    Graph::parse_edge_list(&text, Default::default()).unwrap()
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Beta density with integer shape parameters.
fn beta_pdf(x: f64, a: u64, b: u64) -> f64 {
    let norm = factorial(a + b - 1) / (factorial(a - 1) * factorial(b - 1));
    norm * x.powi(a as i32 - 1) * (1.0 - x).powi(b as i32 - 1)
}

/// Tensor-product Gauss-Legendre over the unit cube of dimension `dim`.
fn cube_integral(dim: usize, nodes: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let rule = gauss_legendre(nodes);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            x[d] = rule[i].0;
            w *= rule[i].1;
        }
        total += w * f(&x);
        let mut d = 0;
        while d < dim {
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            return total;
        }
    }
}

/// Integrated complete-data likelihood for k <= 2 by joint quadrature over
/// (q, p) with integer Beta(alpha, beta) and Dirichlet(delta) priors.
/// Counts are taken directly from the edge list.
pub fn quadrature_icl(
    n: usize,
    edges: &[(usize, usize)],
    labels: &[usize],
    k: usize,
    alpha: u64,
    beta: u64,
    delta: u64,
) -> f64 {
    assert!(k == 1 || k == 2);
    let sizes: Vec<u64> = (0..k)
        .map(|s| labels.iter().filter(|&&l| l == s).count() as u64)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|s| (s..k).map(move |t| (s, t))).collect();
    let counts: Vec<(i32, i32)> = pairs
        .iter()
        .map(|&(s, t)| {
            let m = edges
                .iter()
                .filter(|&&(u, v)| {
                    let (a, b) = (labels[u].min(labels[v]), labels[u].max(labels[v]));
                    (a, b) == (s, t)
                })
                .count() as i32;
            let slots = if s == t {
                sizes[s] * sizes[s].saturating_sub(1) / 2
            } else {
                sizes[s] * sizes[t]
            } as i32;
            (m, slots - m)
        })
        .collect();
    assert_eq!(labels.len(), n);
    let q_dims = k - 1;
    let dim = q_dims + pairs.len();
    let f = |x: &[f64]| {
        let mut v = 1.0;
        if k == 2 {
            let q = x[0];
            v *= beta_pdf(q, delta, delta);
            v *= q.powi(sizes[0] as i32) * (1.0 - q).powi(sizes[1] as i32);
        }
        for (j, &(m, rest)) in counts.iter().enumerate() {
            let p = x[q_dims + j];
            v *= beta_pdf(p, alpha, beta) * p.powi(m) * (1.0 - p).powi(rest);
        }
        v
    };
    let max_deg = n * (n - 1) / 2 + n + 2 * (alpha.max(beta).max(delta) as usize);
    cube_integral(dim, max_deg / 2 + 2, &f)
}

/// The simplex integral of `Dirichlet(eta | gamma) prod eta_u^{d_u}` by
/// stick-breaking onto the unit cube, for an integer `gamma`.
pub fn quadrature_simplex(degrees: &[u64], gamma: u64) -> f64 {
    let n = degrees.len();
    if n <= 1 {
        return 1.0;
    }
    let norm = factorial(n as u64 * gamma - 1) / factorial(gamma - 1).powi(n as i32);
    let exps: Vec<i32> = degrees.iter().map(|&d| (d + gamma - 1) as i32).collect();
    let total_deg: i32 = exps.iter().sum::<i32>() + n as i32;
    let f = |x: &[f64]| {
        let mut rem = 1.0;
        let mut v = 1.0;
        for (j, &xj) in x.iter().enumerate() {
            let eta = rem * xj;
            v *= eta.powi(exps[j]);
            // Jacobian of the stick-breaking map
            v *= rem;
            rem *= 1.0 - xj;
        }
        v * rem.powi(exps[n - 1])
    };
    norm * cube_integral(n - 1, total_deg as usize / 2 + 2, &f)
}
