mod common;

use blockselect::icl::dc::{dc_log_icl, dc_log_likelihood, mle_dc_params};
use blockselect::icl::sbm::{mle_params, sbm_log_icl, sbm_log_likelihood, SbmParams};
use blockselect::icl::MoveScorer;
use blockselect::mdl::sbm_code_lengths;
use blockselect::selection::lambda_dc;
use blockselect::{BlockState, Family, Graph, LoadOptions, PriorConfig};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    graph: Graph,
    labels: Vec<usize>,
    k: usize,
}

impl Case {
    fn state(&self) -> BlockState {
        BlockState::from_labels(&self.graph, self.labels.clone(), self.k).unwrap()
    }
}

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0..0.6f64).prop_flat_map(|(n, p)| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(prop::bool::weighted(p), pairs).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut i = 0;
            for u in 0..n {
                for v in (u + 1)..n {
                    if bits[i] {
                        edges.push((u, v));
                    }
                    i += 1;
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn case(max_n: usize, max_k: usize) -> impl Strategy<Value = Case> {
    (graph(max_n), 1..=max_k).prop_flat_map(|(graph, k)| {
        let n = graph.n();
        prop::collection::vec(0..k, n).prop_map(move |labels| Case {
            graph: graph.clone(),
            labels,
            k,
        })
    })
}

fn families() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Vanilla), Just(Family::DegreeCorrected)]
}

fn priors() -> impl Strategy<Value = PriorConfig> {
    (0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64).prop_map(|(alpha, beta, delta, gamma)| {
        PriorConfig {
            alpha,
            beta,
            delta,
            gamma,
        }
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn relabelling_blocks_leaves_scores_unchanged(
        c in case(30, 5),
        family in families(),
        pr in priors(),
        perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        // the relative order of 0..k inside a shuffle of 0..5 is itself uniform
        let perm: Vec<usize> = perm.into_iter().filter(|&x| x < c.k).collect();
        let st = c.state();
        let a = family.log_icl(&c.graph, &st, &pr).unwrap().total;
        let b = family.log_icl(&c.graph, &st.permuted(&c.graph, &perm).unwrap(), &pr).unwrap().total;
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn move_and_back_restores_everything(c in case(30, 5), u in any::<prop::sample::Index>(), t in 0..5usize) {
        let mut st = c.state();
        let before = st.clone();
        let u = u.index(c.graph.n());
        let t = t % c.k;
        let r = st.label(u);
        st.move_vertex(&c.graph, u, t).unwrap();
        st.move_vertex(&c.graph, u, r).unwrap();
        prop_assert_eq!(&st, &before);
        prop_assert!(st.verify(&c.graph).is_ok());
    }

    #[test]
    fn statistics_track_a_recount(
        c in case(40, 6),
        moves in prop::collection::vec((any::<prop::sample::Index>(), 0..6usize), 1..60),
    ) {
        let mut st = c.state();
        for (u, t) in moves {
            st.move_vertex(&c.graph, u.index(c.graph.n()), t % c.k).unwrap();
            prop_assert!(st.verify(&c.graph).is_ok());
        }
        let fresh = BlockState::from_labels(&c.graph, st.labels().to_vec(), c.k).unwrap();
        prop_assert_eq!(fresh, st);
    }

    #[test]
    fn deltas_match_rescoring(
        c in case(40, 6),
        family in families(),
        pr in priors(),
        u in any::<prop::sample::Index>(),
        t in 0..6usize,
    ) {
        let mut st = c.state();
        let u = u.index(c.graph.n());
        let t = t % c.k;
        let mut scorer = MoveScorer::new();
        scorer.load(&c.graph, &st, u);
        let d = scorer.delta(family, &c.graph, &st, u, t, &pr);
        let d_direct = family.log_icl_delta(&c.graph, &st, u, t, &pr).unwrap();
        let before = family.log_icl(&c.graph, &st, &pr).unwrap().total;
        st.move_vertex(&c.graph, u, t).unwrap();
        let after = family.log_icl(&c.graph, &st, &pr).unwrap().total;
        prop_assert!((after - before - d).abs() < 1e-9, "{} vs {}", after - before, d);
        prop_assert!((d - d_direct).abs() < 1e-12);
    }

    #[test]
    fn likelihood_ratio_is_nonnegative(c in case(40, 5)) {
        prop_assert!(lambda_dc(&c.graph, &c.state()).unwrap() >= 0.0);
    }

    #[test]
    fn edge_list_round_trip(g in graph(40)) {
        let text = g.to_edge_list();
        let opts = LoadOptions { one_indexed: false, drop_duplicates: false };
        let back = Graph::parse_edge_list(&text, opts).unwrap();
        // isolated vertices are not written, so compare the edge sets by original id
        let ids = back.ids();
        let mut edges: Vec<(u64, u64)> = back
            .edges()
            .iter()
            .map(|&(u, v)| (ids[u].min(ids[v]), ids[u].max(ids[v])))
            .collect();
        edges.sort_unstable();
        let orig_ids = g.ids();
        let mut expected: Vec<(u64, u64)> = g
            .edges()
            .iter()
            .map(|&(u, v)| (orig_ids[u].min(orig_ids[v]), orig_ids[u].max(orig_ids[v])))
            .collect();
        expected.sort_unstable();
        prop_assert_eq!(edges, expected);
        prop_assert!(back.check_invariants().is_ok());
    }

    #[test]
    fn largest_component_is_idempotent(g in graph(40)) {
        let once = g.largest_component().unwrap();
        let twice = once.largest_component().unwrap();
        prop_assert_eq!(once.components().len(), 1);
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn plug_in_estimates_maximise_the_likelihood(
        c in case(25, 4),
        q_raw in prop::collection::vec(0.05..1.0f64, 4),
        p_raw in prop::collection::vec(0.01..0.99f64, 16),
    ) {
        let st = c.state();
        let k = c.k;
        let best = sbm_log_likelihood(&c.graph, &st, &mle_params(&st)).unwrap();
        let total: f64 = q_raw[..k].iter().sum();
        let mut p = vec![0.0; k * k];
        for s in 0..k {
            for t in s..k {
                p[s * k + t] = p_raw[s * 4 + t];
                p[t * k + s] = p_raw[s * 4 + t];
            }
        }
        let other = SbmParams { q: q_raw[..k].iter().map(|x| x / total).collect(), p };
        let ll = sbm_log_likelihood(&c.graph, &st, &other).unwrap();
        prop_assert!(best >= ll - 1e-9, "{best} < {ll}");
    }

    #[test]
    fn integrated_likelihood_is_below_the_maximum(c in case(25, 4), pr in priors()) {
        let st = c.state();
        let sbm_icl = sbm_log_icl(&c.graph, &st, &pr).unwrap().total;
        let sbm_max = sbm_log_likelihood(&c.graph, &st, &mle_params(&st)).unwrap();
        prop_assert!(sbm_icl <= sbm_max + 1e-9, "{sbm_icl} > {sbm_max}");
    }

    // The degree-corrected score carries the n_s^(D_s + n_s) rescaling of the
    // propensities, so it is not bounded by the likelihood maximum. Its edge
    // and vertex terms are.
    #[test]
    fn degree_corrected_plug_in_is_valid_and_shares_block_terms(c in case(25, 4), pr in priors()) {
        let st = c.state();
        let mle = mle_dc_params(&c.graph, &st);
        prop_assert!(mle.validate(&st).is_ok());
        let dc_max = dc_log_likelihood(&c.graph, &st, &mle).unwrap();
        prop_assert!(dc_max.is_finite());
        let dc = dc_log_icl(&c.graph, &st, &pr).unwrap();
        let sbm = sbm_log_icl(&c.graph, &st, &pr).unwrap();
        prop_assert!(close(dc.vertex_term + dc.edge_term, sbm.total, 1e-12));
    }

    #[test]
    fn code_length_is_minus_log2_icl(c in case(60, 6)) {
        let st = c.state();
        let bits = sbm_code_lengths(&c.graph, &st).unwrap();
        let icl = sbm_log_icl(&c.graph, &st, &PriorConfig::uniform()).unwrap().total;
        prop_assert!((bits.total_bits + icl / std::f64::consts::LN_2).abs() < 1e-6);
        let parts = bits.part2_partition + bits.part3_assignment + bits.part4_edge_counts + bits.part5_edge_alloc;
        prop_assert!((parts - bits.total_bits).abs() < 1e-9);
    }
}
