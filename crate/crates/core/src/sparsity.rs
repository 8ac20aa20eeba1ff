//! Correlative sparsity graph, chordal clique decomposition and clique tree.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::chain::LiftedPOP;
use crate::poly::{VarId, VariableSpace};

/// Undirected co-occurrence graph over the variables of a lifted problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CSPGraph {
    adj: Vec<BTreeSet<VarId>>,
}

impl CSPGraph {
    pub fn new(num_vertices: usize) -> Self {
        Self { adj: vec![BTreeSet::new(); num_vertices] }
    }

    /// Edges between variables sharing an objective monomial or a constraint support.
    pub fn build(pop: &LiftedPOP) -> Self {
        let mut g = Self::new(pop.space.len());
        for (m, _) in pop.objective.terms() {
            g.add_clique(&m.vars().collect::<Vec<_>>());
        }
        for c in &pop.constraints {
            g.add_clique(&c.poly.support());
        }
        g
    }

    pub fn add_edge(&mut self, u: VarId, v: VarId) {
        if u != v {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
    }

    pub fn add_clique(&mut self, vars: &[VarId]) {
        for (i, &u) in vars.iter().enumerate() {
            for &v in &vars[i + 1..] {
                self.add_edge(u, v);
            }
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: VarId, v: VarId) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adj[v]
    }

    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (u, ns) in self.adj.iter().enumerate() {
            out.extend(ns.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// One `name name` line per edge.
    pub fn dump_edges(&self, space: &VariableSpace) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{} {}", space.name(u), space.name(v));
        }
        s
    }
}

/// Maximal cliques, clique tree, separators and constraint assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueDecomposition {
    /// Sorted variable ids of each clique, ordered lexicographically.
    pub cliques: Vec<Vec<VarId>>,
    /// Tree edges `(a, b)` with `a < b`.
    pub tree_edges: Vec<(usize, usize)>,
    /// Separator `I_a ∩ I_b` for each tree edge.
    pub separators: Vec<Vec<VarId>>,
    /// Clique index of each constraint of the lifted problem.
    pub assignment: Vec<usize>,
    /// Clique index holding the objective.
    pub objective_clique: usize,
    /// Whether the elimination needed fill edges.
    pub filled: bool,
}

impl CliqueDecomposition {
    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Every variable's cliques form a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        let n = self.cliques.len();
        let mut tree = vec![Vec::new(); n];
        for &(a, b) in &self.tree_edges {
            tree[a].push(b);
            tree[b].push(a);
        }
        let vars: BTreeSet<VarId> = self.cliques.iter().flatten().copied().collect();
        for v in vars {
            let holding: Vec<usize> = (0..n).filter(|&c| self.cliques[c].binary_search(&v).is_ok()).collect();
            let mut seen = vec![false; n];
            let mut stack = vec![holding[0]];
            seen[holding[0]] = true;
            let mut reached = 0;
            while let Some(c) = stack.pop() {
                reached += 1;
                for &d in &tree[c] {
                    if !seen[d] && self.cliques[d].binary_search(&v).is_ok() {
                        seen[d] = true;
                        stack.push(d);
                    }
                }
            }
            if reached != holding.len() {
                return false;
            }
        }
        true
    }
}

/// Vertex order that eliminates states and locals from the last stage backwards.
fn chain_order(g: &CSPGraph) -> Vec<VarId> {
    (0..g.num_vertices()).rev().collect()
}

/// Eliminates along `order`; returns the candidate cliques and whether fill was needed.
fn eliminate(g: &CSPGraph, order: &[VarId]) -> (Vec<Vec<VarId>>, bool) {
    let mut adj = g.adj.clone();
    let mut gone = vec![false; g.num_vertices()];
    let mut filled = false;
    let mut cands = Vec::with_capacity(order.len());
    for &v in order {
        let later: Vec<VarId> = adj[v].iter().copied().filter(|&u| !gone[u]).collect();
        for (i, &a) in later.iter().enumerate() {
            for &b in &later[i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                    filled = true;
                }
            }
        }
        let mut c = later;
        c.push(v);
        c.sort_unstable();
        cands.push(c);
        gone[v] = true;
    }
    (cands, filled)
}

/// Minimum-degree elimination order with fill, ties broken by smallest id.
fn min_degree_order(g: &CSPGraph) -> Vec<VarId> {
    let n = g.num_vertices();
    let mut adj = g.adj.clone();
    let mut gone = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n).filter(|&v| !gone[v]).min_by_key(|&v| (adj[v].len(), v)).unwrap();
        let ns: Vec<VarId> = adj[v].iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            adj[a].remove(&v);
            for &b in &ns[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        gone[v] = true;
        order.push(v);
    }
    order
}

fn maximal(mut cands: Vec<Vec<VarId>>) -> Vec<Vec<VarId>> {
    cands.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut keep: Vec<Vec<VarId>> = Vec::new();
    for c in cands {
        let sub = keep.iter().any(|k| c.iter().all(|v| k.binary_search(v).is_ok()));
        if !sub {
            keep.push(c);
        }
    }
    keep.sort();
    keep
}

fn intersect(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect()
}

/// Maximum-weight spanning tree on intersection sizes (Kruskal, deterministic ties).
fn clique_tree(cliques: &[Vec<VarId>]) -> Vec<(usize, usize)> {
    let n = cliques.len();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let w = intersect(&cliques[a], &cliques[b]).len();
            if w > 0 {
                pairs.push((w, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| (x.1, x.2).cmp(&(y.1, y.2))));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut edges = Vec::new();
    for (_, a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((a, b));
        }
    }
    edges.sort_unstable();
    edges
}

/// Chordal extension, maximal cliques, clique tree and constraint assignment.
///
/// The backward chain order is tried first; if it is not a perfect
/// elimination order the minimum-degree heuristic is used instead.
pub fn chordal_cliques(g: &CSPGraph, pop: &LiftedPOP) -> CliqueDecomposition {
    let (cands, mut filled) = eliminate(g, &chain_order(g));
    let cands = if filled {
        let (c, f) = eliminate(g, &min_degree_order(g));
        filled = f;
        c
    } else {
        cands
    };
    let cliques = maximal(cands);
    let tree_edges = clique_tree(&cliques);
    let separators = tree_edges.iter().map(|&(a, b)| intersect(&cliques[a], &cliques[b])).collect();
    let home = |support: &[VarId]| {
        cliques
            .iter()
            .position(|c| support.iter().all(|v| c.binary_search(v).is_ok()))
            .expect("chordal cliques cover every constraint support")
    };
    let assignment = pop.constraints.iter().map(|c| home(&c.poly.support())).collect();
    let objective_clique = home(&pop.objective.support());
    CliqueDecomposition { cliques, tree_edges, separators, assignment, objective_clique, filled }
}

/// `max_i (r_i + r_{i+1})` over consecutive ranks; `r_1` for a single stage.
pub fn treewidth_formula(ranks: &[usize]) -> usize {
    match ranks {
        [] => 0,
        [r] => *r,
        _ => ranks.windows(2).map(|w| w[0] + w[1]).max().unwrap(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{chain_from_tt, TTCores};

    fn dense_tt(ranks: &[usize]) -> TTCores {
        let mut prev = 1;
        let cores = ranks
            .iter()
            .map(|&r| {
                let c = vec![vec![vec![1.0, 0.5, 0.25]; r]; prev];
                prev = r;
                c
            })
            .collect();
        TTCores::new(cores).unwrap()
    }

    #[test]
    fn figure_profile_cliques() {
        let chain = chain_from_tt(&dense_tt(&[3, 1, 2, 2, 1])).unwrap();
        let pop = chain.lift();
        let g = CSPGraph::build(&pop);
        let dec = chordal_cliques(&g, &pop);
        assert!(!dec.filled);
        assert_eq!(dec.max_clique_size(), 5);
        assert_eq!(treewidth_formula(&[3, 1, 2, 2, 1]), 4);
        assert!(dec.has_running_intersection());
    }

    #[test]
    fn path_decomposition_sizes() {
        let chain = chain_from_tt(&dense_tt(&[2, 2, 2, 1])).unwrap();
        let pop = chain.lift();
        let dec = chordal_cliques(&CSPGraph::build(&pop), &pop);
        let sizes: Vec<usize> = dec.cliques.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 5, 5, 4]);
        assert_eq!(dec.tree_edges, vec![(0, 1), (1, 2), (2, 3)]);
        assert!(dec.separators.iter().all(|s| s.len() == 2));
        assert_eq!(dec.objective_clique, 3);
    }

    #[test]
    fn single_stage() {
        let chain = chain_from_tt(&dense_tt(&[1])).unwrap();
        let pop = chain.lift();
        let dec = chordal_cliques(&CSPGraph::build(&pop), &pop);
        assert_eq!(dec.cliques, vec![vec![0, 1]]);
        assert!(dec.tree_edges.is_empty());
        assert_eq!(treewidth_formula(&[1]), 1);
    }

    #[test]
    fn cycle_gets_filled() {
        let pop = chain_from_tt(&dense_tt(&[1])).unwrap().lift();
        let mut g = CSPGraph::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            g.add_edge(a, b);
        }
        let pop = LiftedPOP { constraints: Vec::new(), ..pop };
        let dec = chordal_cliques(&g, &pop);
        assert!(dec.filled);
        assert_eq!(dec.max_clique_size(), 3);
        assert!(dec.has_running_intersection());
    }
}
