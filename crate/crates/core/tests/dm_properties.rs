mod oracles;

use std::collections::BTreeSet;

use daesa_core::random::{random_graph, random_nonsingular_graph};
use daesa_core::{
    direct_and_scc, dm_decompose, dm_decompose_with, max_cardinality_matching,
    remove_overdetermined, DmDecomposition, Matching, WeightedBipartiteGraph,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coarse(dm: &DmDecomposition) -> [(Vec<usize>, Vec<usize>); 3] {
    [&dm.under, &dm.enabled, &dm.over].map(|b| (b.equations.clone(), b.variables.clone()))
}

fn as_sets(p: &oracles::Part) -> (Vec<usize>, Vec<usize>) {
    (p.0.iter().copied().collect(), p.1.iter().copied().collect())
}

#[test]
fn coarse_blocks_match_gallai_edmonds_exhaustively() {
    for n_eqs in 0..=3 {
        for n_vars in 0..=3 {
            for g in oracles::all_graphs(n_eqs, n_vars) {
                let (u, e, o) = oracles::gallai_edmonds(&g);
                let dm = dm_decompose(&g);
                assert_eq!(
                    coarse(&dm),
                    [as_sets(&u), as_sets(&e), as_sets(&o)],
                    "{g:?}"
                );
            }
        }
    }
}

#[test]
fn decomposition_is_matching_independent_exhaustively() {
    for n_eqs in 1..=3 {
        for n_vars in 1..=3 {
            for g in oracles::all_graphs(n_eqs, n_vars) {
                let reference = dm_decompose(&g);
                for pairs in oracles::maximum_matchings(&g) {
                    let m = Matching::from_pairs(&g, &pairs).unwrap();
                    let dm = dm_decompose_with(&g, &m).unwrap();
                    assert_eq!(coarse(&dm), coarse(&reference), "{g:?} {pairs:?}");
                    assert_eq!(
                        oracles::partition(&dm.fine_blocks),
                        oracles::partition(&reference.fine_blocks)
                    );
                }
            }
        }
    }
}

#[test]
fn non_maximum_matching_is_rejected() {
    let g = WeightedBipartiteGraph::unweighted(2, 2, &[(0, 0), (0, 1), (1, 0)]);
    let m = Matching::from_pairs(&g, &[(0, 0)]).unwrap();
    assert!(dm_decompose_with(&g, &m).is_err());
}

#[test]
fn btf_blocks_are_matching_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let n = 1 + trial % 6;
        let g = random_nonsingular_graph(&mut rng, n, 0.35, 0);
        let all = oracles::complete_matchings(&g);
        let reference = oracles::partition(
            &direct_and_scc(&g, &max_cardinality_matching(&g))
                .unwrap()
                .blocks,
        );
        for pairs in &all {
            let m = Matching::from_pairs(&g, pairs).unwrap();
            let btf = direct_and_scc(&g, &m).unwrap();
            assert_eq!(oracles::partition(&btf.blocks), reference, "{g:?}");
        }
    }
}

fn arb_graph(max_side: usize) -> impl Strategy<Value = WeightedBipartiteGraph> {
    (0..=max_side, 0..=max_side, any::<u64>(), 0.05f64..0.8)
        .prop_map(|(n, m, seed, p)| random_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, m, p, 2))
}

fn all_eqs(dm: &DmDecomposition) -> BTreeSet<usize> {
    [&dm.under, &dm.enabled, &dm.over]
        .iter()
        .flat_map(|b| b.equations.iter().copied())
        .collect()
}

proptest! {
    #[test]
    fn coarse_blocks_partition_the_graph(g in arb_graph(9)) {
        let dm = dm_decompose(&g);
        let eqs = all_eqs(&dm);
        prop_assert_eq!(eqs.len(), g.n_eqs());
        prop_assert_eq!(
            dm.under.equations.len() + dm.enabled.equations.len() + dm.over.equations.len(),
            g.n_eqs()
        );
        prop_assert_eq!(
            dm.under.variables.len() + dm.enabled.variables.len() + dm.over.variables.len(),
            g.n_vars()
        );
        prop_assert_eq!(dm.enabled.equations.len(), dm.enabled.variables.len());
        prop_assert!(dm.under.equations.len() < dm.under.variables.len() || dm.under.is_empty());
        prop_assert!(dm.over.equations.len() > dm.over.variables.len() || dm.over.is_empty());
        for b in &dm.fine_blocks {
            prop_assert_eq!(b.equations.len(), b.variables.len());
        }
    }

    #[test]
    fn fine_order_is_acyclic_and_topological(g in arb_graph(9)) {
        let dm = dm_decompose(&g);
        for &(a, b) in &dm.partial_order {
            prop_assert!(a < b, "edge {} -> {} goes backwards", a, b);
        }
    }

    #[test]
    fn removing_overdetermined_part_leaves_none(g in arb_graph(9)) {
        let reduced = remove_overdetermined(&g);
        prop_assert!(dm_decompose(&reduced).over.is_empty());
        prop_assert_eq!(remove_overdetermined(&reduced), reduced.clone());
        // Only over-determined equations disappear.
        let dm = dm_decompose(&g);
        prop_assert_eq!(reduced.n_eqs() + dm.over.equations.len(), g.n_eqs());
    }

    #[test]
    fn maximum_matching_has_oracle_size(g in arb_graph(5)) {
        let expected = oracles::maximum_matchings(&g).first().map_or(0, Vec::len);
        prop_assert_eq!(max_cardinality_matching(&g).len(), expected);
    }
}
