use ccm_core::statistics::{compute_statistic, degree_distribution, degree_mixing, type_mixing, StatisticKind};
use ccm_core::{Graph, NodeType};
use proptest::prelude::*;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(bits, primary)| {
                let mut edges = Vec::new();
                let mut b = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if bits[b] {
                            edges.push((i, j));
                        }
                        b += 1;
                    }
                }
                let types = primary.iter().map(|&p| if p { NodeType::Primary } else { NodeType::Specialty }).collect();
                Graph::with_indices(n, edges).unwrap().with_types(types).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn statistic_invariants(g in arb_graph(14)) {
        let n = g.node_count() as u64;
        let e = g.edge_count() as u64;
        let d = degree_distribution(&g);
        prop_assert_eq!(d.node_count(), n);
        prop_assert_eq!(d.degree_sum(), 2 * e);
        prop_assert_eq!(type_mixing(&g).unwrap().total(), e);
        let dmm = degree_mixing(&g);
        prop_assert_eq!(dmm.total_edges(), e);
        for (k, endpoints) in dmm.endpoint_counts() {
            prop_assert_eq!(endpoints, k as u64 * d.count(k as usize));
        }
        prop_assert_eq!(dmm.implied_degree_distribution(n).unwrap(), d);
        prop_assert!(e <= g.pair_count());
    }

    #[test]
    fn statistics_are_relabeling_invariant(g in arb_graph(12), seed in any::<u64>()) {
        let n = g.node_count();
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher-Yates with a splitmix stream.
        let mut s = seed;
        for i in (1..n).rev() {
            s = ccm_core::math::derive_seed(s, i as u64);
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let h = g.permuted(&perm).unwrap();
        for kind in StatisticKind::ALL {
            prop_assert_eq!(compute_statistic(&g, kind).unwrap(), compute_statistic(&h, kind).unwrap());
        }
    }

    #[test]
    fn adjacency_is_symmetric(g in arb_graph(12)) {
        for i in 0..g.node_count() {
            prop_assert!(!g.has_edge(i, i));
            for j in 0..g.node_count() {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
    }
}

#[test]
fn examples() {
    let k3 = Graph::with_indices(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert_eq!(compute_statistic(&k3, StatisticKind::EdgeCount).unwrap(), ccm_core::StatisticValue::EdgeCount(3));
    let path = Graph::with_indices(3, [(0, 1), (1, 2)]).unwrap();
    let d = degree_distribution(&path);
    assert_eq!((d.count(0), d.count(1), d.count(2)), (0, 2, 1));
    let dmm = degree_mixing(&path);
    assert_eq!(dmm.get(1, 2), 2);
    assert_eq!(dmm.cell_count(), 1);
    assert!(matches!(
        compute_statistic(&path, StatisticKind::TypeMixing),
        Err(ccm_core::Error::TypedAttributeMissing { node: 0 })
    ));
}
