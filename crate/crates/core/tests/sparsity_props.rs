mod common;

use proptest::prelude::*;

use common::dense_chain;
use statelift::sparsity::{chordal_cliques, treewidth_formula, CSPGraph};

proptest! {
    #[test]
    fn clique_size_follows_rank_profile(interface in prop::collection::vec(1usize..=4, 0..10), seed in any::<u64>()) {
        let chain = dense_chain(&interface, seed);
        let ranks = chain.ranks().to_vec();
        let pop = chain.lift();
        let g = CSPGraph::build(&pop);
        let dec = chordal_cliques(&g, &pop);
        // Each stage clique is {s_{i-1}, x_i, s_i}.
        let widest = (0..ranks.len()).map(|i| if i == 0 { ranks[0] + 1 } else { ranks[i - 1] + ranks[i] + 1 }).max().unwrap();
        prop_assert_eq!(dec.max_clique_size(), widest);
        prop_assert_eq!(dec.max_clique_size(), treewidth_formula(&ranks) + 1);
        prop_assert!(!dec.filled);
        prop_assert!(dec.has_running_intersection());
        prop_assert_eq!(dec.tree_edges.len() + 1, dec.cliques.len());
    }

    #[test]
    fn constraints_live_in_their_clique(ranks in prop::collection::vec(1usize..=3, 0..6), seed in any::<u64>()) {
        let chain = dense_chain(&ranks, seed);
        let pop = chain.lift();
        let dec = chordal_cliques(&CSPGraph::build(&pop), &pop);
        prop_assert_eq!(dec.assignment.len(), pop.constraints.len());
        for (c, &a) in pop.constraints.iter().zip(&dec.assignment) {
            prop_assert!(c.poly.support().iter().all(|v| dec.cliques[a].binary_search(v).is_ok()));
        }
        prop_assert!(pop.objective.support().iter().all(|v| dec.cliques[dec.objective_clique].binary_search(v).is_ok()));
        for ((a, b), sep) in dec.tree_edges.iter().zip(&dec.separators) {
            let want: Vec<usize> = dec.cliques[*a].iter().filter(|v| dec.cliques[*b].contains(v)).copied().collect();
            prop_assert_eq!(sep, &want);
        }
    }

    #[test]
    fn graph_edges_come_from_terms(ranks in prop::collection::vec(1usize..=3, 0..5), seed in any::<u64>()) {
        let chain = dense_chain(&ranks, seed);
        let pop = chain.lift();
        let g = CSPGraph::build(&pop);
        for (u, v) in g.edges() {
            let in_constraint = pop.constraints.iter().any(|c| {
                let s = c.poly.support();
                s.contains(&u) && s.contains(&v)
            });
            let in_objective = pop.objective.terms().any(|(m, _)| m.exponent(u) > 0 && m.exponent(v) > 0);
            let together = in_constraint || in_objective;
            prop_assert!(together, "edge ({u}, {v}) has no witness");
        }
    }
}
