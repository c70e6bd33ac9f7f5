//! Bipartite incidence graphs, maximum matchings, the Dulmage-Mendelsohn
//! decomposition and block-triangular form.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::model::Model;

/// Equation/variable graph whose edges carry the degree `d_fx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedBipartiteGraph {
    eq_names: Vec<String>,
    var_names: Vec<String>,
    eq_adj: Vec<Vec<(usize, u32)>>,
    var_adj: Vec<Vec<(usize, u32)>>,
}

impl WeightedBipartiteGraph {
    /// Repeated `(f, x)` pairs keep the largest weight.
    pub fn new(
        eq_names: Vec<String>,
        var_names: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Result<Self> {
        let mut eq_adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); eq_names.len()];
        for (f, x, w) in edges {
            if f >= eq_names.len() || x >= var_names.len() {
                return Err(Error::ContractViolation(format!(
                    "edge ({f}, {x}) outside a {}x{} graph",
                    eq_names.len(),
                    var_names.len()
                )));
            }
            eq_adj[f].push((x, w));
        }
        for row in &mut eq_adj {
            row.sort_by_key(|&(x, w)| (x, Reverse(w)));
            row.dedup_by_key(|e| e.0);
        }
        let mut var_adj = vec![Vec::new(); var_names.len()];
        for (f, row) in eq_adj.iter().enumerate() {
            for &(x, w) in row {
                var_adj[x].push((f, w));
            }
        }
        Ok(WeightedBipartiteGraph {
            eq_names,
            var_names,
            eq_adj,
            var_adj,
        })
    }

    /// Unweighted convenience constructor (all weights 0).
    pub fn unweighted(n_eqs: usize, n_vars: usize, edges: &[(usize, usize)]) -> Self {
        Self::new(
            (0..n_eqs).map(|i| format!("f{}", i + 1)).collect(),
            (0..n_vars).map(|j| format!("x{}", j + 1)).collect(),
            edges.iter().map(|&(f, x)| (f, x, 0)),
        )
        .expect("edge indices in range")
    }

    pub fn from_model(model: &Model) -> Self {
        let edges = model.equations().iter().enumerate().flat_map(|(f, eq)| {
            eq.incidences()
                .iter()
                .map(move |inc| (f, inc.var, inc.degree))
        });
        Self::new(
            model.equations().iter().map(|e| e.name()).collect(),
            model.variables().iter().map(|v| v.name.clone()).collect(),
            edges,
        )
        .expect("model incidences reference declared variables")
    }

    pub fn n_eqs(&self) -> usize {
        self.eq_names.len()
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.eq_adj.iter().map(Vec::len).sum()
    }

    pub fn eq_name(&self, f: usize) -> &str {
        &self.eq_names[f]
    }

    pub fn var_name(&self, x: usize) -> &str {
        &self.var_names[x]
    }

    pub fn eq_names(&self) -> &[String] {
        &self.eq_names
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Variables of `f` with weights, sorted by variable index.
    pub fn eq_edges(&self, f: usize) -> &[(usize, u32)] {
        &self.eq_adj[f]
    }

    /// Equations containing `x` with weights, sorted by equation index.
    pub fn var_edges(&self, x: usize) -> &[(usize, u32)] {
        &self.var_adj[x]
    }

    pub fn weight(&self, f: usize, x: usize) -> Option<u32> {
        self.eq_adj[f]
            .binary_search_by_key(&x, |e| e.0)
            .ok()
            .map(|i| self.eq_adj[f][i].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.eq_adj
            .iter()
            .enumerate()
            .flat_map(|(f, row)| row.iter().map(move |&(x, w)| (f, x, w)))
    }

    pub fn max_weight(&self) -> u32 {
        self.edges().map(|e| e.2).max().unwrap_or(0)
    }

    /// Same pattern with every weight multiplied by `m`.
    pub fn scaled(&self, m: u32) -> Self {
        let mut g = self.clone();
        for row in g.eq_adj.iter_mut().chain(g.var_adj.iter_mut()) {
            for e in row {
                e.1 *= m;
            }
        }
        g
    }

    /// Induced subgraph on the given equations and variables (kept in the
    /// order given). Returns the subgraph; indices map back through the slices.
    pub fn induced(&self, eqs: &[usize], vars: &[usize]) -> Self {
        let mut var_pos = vec![usize::MAX; self.n_vars()];
        for (j, &x) in vars.iter().enumerate() {
            var_pos[x] = j;
        }
        let edges: Vec<(usize, usize, u32)> = eqs
            .iter()
            .enumerate()
            .flat_map(|(i, &f)| {
                let var_pos = &var_pos;
                self.eq_adj[f]
                    .iter()
                    .filter(move |&&(x, _)| var_pos[x] != usize::MAX)
                    .map(move |&(x, w)| (i, var_pos[x], w))
            })
            .collect();
        Self::new(
            eqs.iter().map(|&f| self.eq_names[f].clone()).collect(),
            vars.iter().map(|&x| self.var_names[x].clone()).collect(),
            edges,
        )
        .expect("induced indices in range")
    }
}

/// A set of pairwise disjoint edges, stored from both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    eq_to_var: Vec<Option<usize>>,
    var_to_eq: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n_eqs: usize, n_vars: usize) -> Self {
        Matching {
            eq_to_var: vec![None; n_eqs],
            var_to_eq: vec![None; n_vars],
        }
    }

    /// Builds a matching from `(f, x)` pairs, checking disjointness and that
    /// every pair is an edge of `g`.
    pub fn from_pairs(g: &WeightedBipartiteGraph, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut m = Matching::empty(g.n_eqs(), g.n_vars());
        for &(f, x) in pairs {
            if f >= g.n_eqs() || x >= g.n_vars() || g.weight(f, x).is_none() {
                return Err(Error::ContractViolation(format!(
                    "({f}, {x}) is not an edge"
                )));
            }
            if m.eq_to_var[f].is_some() || m.var_to_eq[x].is_some() {
                return Err(Error::ContractViolation(format!(
                    "({f}, {x}) shares a vertex with another pair"
                )));
            }
            m.eq_to_var[f] = Some(x);
            m.var_to_eq[x] = Some(f);
        }
        Ok(m)
    }

    pub fn var_of(&self, f: usize) -> Option<usize> {
        self.eq_to_var[f]
    }

    pub fn eq_of(&self, x: usize) -> Option<usize> {
        self.var_to_eq[x]
    }

    pub fn len(&self) -> usize {
        self.eq_to_var.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pairs sorted by equation index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.eq_to_var
            .iter()
            .enumerate()
            .filter_map(|(f, x)| x.map(|x| (f, x)))
            .collect()
    }

    pub fn covers_all_equations(&self) -> bool {
        self.eq_to_var.iter().all(Option::is_some)
    }

    pub fn is_complete(&self) -> bool {
        self.covers_all_equations() && self.var_to_eq.iter().all(Option::is_some)
    }

    pub fn weight(&self, g: &WeightedBipartiteGraph) -> u64 {
        self.pairs()
            .into_iter()
            .map(|(f, x)| u64::from(g.weight(f, x).unwrap_or(0)))
            .sum()
    }

    fn set(&mut self, f: usize, x: usize) {
        self.eq_to_var[f] = Some(x);
        self.var_to_eq[x] = Some(f);
    }
}

/// Hopcroft-Karp with vertices scanned in declaration order.
pub fn max_cardinality_matching(g: &WeightedBipartiteGraph) -> Matching {
    let mut m = Matching::empty(g.n_eqs(), g.n_vars());
    augment_to_maximum(g, &mut m);
    m
}

fn augment_to_maximum(g: &WeightedBipartiteGraph, m: &mut Matching) {
    const INF: usize = usize::MAX;
    let n = g.n_eqs();
    let mut dist = vec![INF; n];
    let mut next = vec![0usize; n];
    let mut queue = VecDeque::new();
    loop {
        queue.clear();
        for (f, dist_f) in dist.iter_mut().enumerate() {
            if m.eq_to_var[f].is_none() {
                *dist_f = 0;
                queue.push_back(f);
            } else {
                *dist_f = INF;
            }
        }
        let mut found = false;
        while let Some(f) = queue.pop_front() {
            for &(x, _) in &g.eq_adj[f] {
                match m.var_to_eq[x] {
                    None => found = true,
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[f] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            return;
        }
        next.iter_mut().for_each(|p| *p = 0);
        let mut stack: Vec<usize> = Vec::new();
        for root in 0..n {
            if m.eq_to_var[root].is_some() || dist[root] != 0 {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&f) = stack.last() {
                if next[f] == g.eq_adj[f].len() {
                    dist[f] = INF;
                    stack.pop();
                    continue;
                }
                let x = g.eq_adj[f][next[f]].0;
                next[f] += 1;
                match m.var_to_eq[x] {
                    None => {
                        for &h in &stack {
                            let y = g.eq_adj[h][next[h] - 1].0;
                            m.set(h, y);
                        }
                        break;
                    }
                    Some(w) if dist[w] != INF && dist[w] == dist[f] + 1 => stack.push(w),
                    _ => {}
                }
            }
        }
    }
}

/// Whether `m` admits no augmenting path in `g`.
pub fn is_maximum(g: &WeightedBipartiteGraph, m: &Matching) -> bool {
    let mut probe = m.clone();
    augment_to_maximum(g, &mut probe);
    probe.len() == m.len()
}

pub fn is_structurally_nonsingular(g: &WeightedBipartiteGraph) -> bool {
    g.n_eqs() == g.n_vars() && max_cardinality_matching(g).len() == g.n_eqs()
}

pub fn has_equation_complete_matching(g: &WeightedBipartiteGraph) -> bool {
    max_cardinality_matching(g).len() == g.n_eqs()
}

/// Equations and variables of one block, each sorted by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Block {
    pub equations: Vec<usize>,
    pub variables: Vec<usize>,
}

impl Block {
    pub fn is_empty(&self) -> bool {
        self.equations.is_empty() && self.variables.is_empty()
    }
}

/// Vertex of the matching-oriented graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Eq(usize),
    Var(usize),
}

/// Block-triangular form of a square system with a complete matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Btf {
    /// Matched edges oriented `f -> x`, the others `x -> f`.
    pub digraph: Vec<(Vertex, Vertex)>,
    /// Strongly connected components in topological order.
    pub blocks: Vec<Block>,
    /// Direct dependencies `(a, b)`: block `a` must be solved before `b`.
    pub partial_order: Vec<(usize, usize)>,
}

/// Orients `g` by the complete matching `m` and splits it into strongly
/// connected components. Ties in the topological order go to the block with
/// the smallest equation index.
pub fn direct_and_scc(g: &WeightedBipartiteGraph, m: &Matching) -> Result<Btf> {
    if g.n_eqs() != g.n_vars() || m.eq_to_var.len() != g.n_eqs() || !m.is_complete() {
        return Err(Error::NotCompleteMatching);
    }
    for (f, x) in m.pairs() {
        if g.weight(f, x).is_none() {
            return Err(Error::ContractViolation(format!(
                "({f}, {x}) is not an edge"
            )));
        }
    }
    let n = g.n_eqs();
    let mut digraph = Vec::with_capacity(g.n_edges());
    // Equation-level graph: f -> h when h uses the variable f is matched to.
    let mut eg: DiGraph<(), ()> = DiGraph::with_capacity(n, g.n_edges());
    let nodes: Vec<_> = (0..n).map(|_| eg.add_node(())).collect();
    for (f, x, _) in g.edges() {
        let owner = m.var_to_eq[x].expect("complete matching");
        if owner == f {
            digraph.push((Vertex::Eq(f), Vertex::Var(x)));
        } else {
            digraph.push((Vertex::Var(x), Vertex::Eq(f)));
            eg.add_edge(nodes[owner], nodes[f], ());
        }
    }
    let sccs = tarjan_scc(&eg);
    let mut comp = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            comp[node.index()] = c;
        }
    }
    let k = sccs.len();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for e in eg.raw_edges() {
        let (a, b) = (comp[e.source().index()], comp[e.target().index()]);
        if a != b {
            succ[a].insert(b);
        }
    }
    let min_eq: Vec<usize> = sccs
        .iter()
        .map(|s| s.iter().map(|v| v.index()).min().expect("nonempty scc"))
        .collect();
    let mut indeg = vec![0usize; k];
    for s in &succ {
        for &b in s {
            indeg[b] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((min_eq[c], c)))
        .collect();
    let mut position = vec![usize::MAX; k];
    let mut blocks = Vec::with_capacity(k);
    while let Some(Reverse((_, c))) = heap.pop() {
        position[c] = blocks.len();
        let mut equations: Vec<usize> = sccs[c].iter().map(|v| v.index()).collect();
        equations.sort_unstable();
        let mut variables: Vec<usize> = equations
            .iter()
            .map(|&f| m.eq_to_var[f].expect("complete"))
            .collect();
        variables.sort_unstable();
        blocks.push(Block {
            equations,
            variables,
        });
        for &b in &succ[c] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                heap.push(Reverse((min_eq[b], b)));
            }
        }
    }
    let mut partial_order: Vec<(usize, usize)> = succ
        .iter()
        .enumerate()
        .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
        .map(|(a, b)| (position[a], position[b]))
        .collect();
    partial_order.sort_unstable();
    Ok(Btf {
        digraph,
        blocks,
        partial_order,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmDecomposition {
    pub under: Block,
    pub enabled: Block,
    pub over: Block,
    /// Indecomposable blocks of `enabled` in topological order.
    pub fine_blocks: Vec<Block>,
    /// Direct dependencies between fine blocks, as indices into `fine_blocks`.
    pub partial_order: Vec<(usize, usize)>,
    /// The maximum matching the decomposition was computed from.
    pub matching: Matching,
}

impl DmDecomposition {
    pub fn is_regular(&self) -> bool {
        self.under.is_empty() && self.over.is_empty()
    }

    /// The coarse triple, which does not depend on the matching.
    pub fn coarse(&self) -> (&Block, &Block, &Block) {
        (&self.under, &self.enabled, &self.over)
    }

    /// Fine blocks that are direct predecessors of block `b`.
    pub fn predecessors(&self, b: usize) -> Vec<usize> {
        self.partial_order
            .iter()
            .filter(|&&(_, t)| t == b)
            .map(|&(s, _)| s)
            .collect()
    }

    /// All fine blocks from which `b` is reachable, sorted.
    pub fn ancestors(&self, b: usize) -> Vec<usize> {
        let mut seen = vec![false; self.fine_blocks.len()];
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            for s in self.predecessors(t) {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        (0..seen.len()).filter(|&i| seen[i]).collect()
    }
}

pub fn dm_decompose(g: &WeightedBipartiteGraph) -> DmDecomposition {
    let m = max_cardinality_matching(g);
    dm_decompose_with(g, &m).expect("Hopcroft-Karp yields a maximum matching")
}

/// Decomposition computed from a caller-supplied maximum matching.
pub fn dm_decompose_with(g: &WeightedBipartiteGraph, m: &Matching) -> Result<DmDecomposition> {
    if m.eq_to_var.len() != g.n_eqs() || m.var_to_eq.len() != g.n_vars() {
        return Err(Error::ContractViolation(
            "matching sized for another graph".into(),
        ));
    }
    if m.pairs().iter().any(|&(f, x)| g.weight(f, x).is_none()) {
        return Err(Error::ContractViolation("matching uses a non-edge".into()));
    }
    let (n, p) = (g.n_eqs(), g.n_vars());

    // Alternating reachability from unmatched equations: any edge out of an
    // equation, then the matched edge back from the variable.
    let mut over_eq = vec![false; n];
    let mut over_var = vec![false; p];
    let mut queue: VecDeque<usize> = (0..n).filter(|&f| m.eq_to_var[f].is_none()).collect();
    queue.iter().for_each(|&f| over_eq[f] = true);
    while let Some(f) = queue.pop_front() {
        for &(x, _) in &g.eq_adj[f] {
            if over_var[x] {
                continue;
            }
            over_var[x] = true;
            match m.var_to_eq[x] {
                Some(h) if !over_eq[h] => {
                    over_eq[h] = true;
                    queue.push_back(h);
                }
                Some(_) => {}
                None => return Err(Error::ContractViolation("matching is not maximum".into())),
            }
        }
    }

    let mut under_eq = vec![false; n];
    let mut under_var = vec![false; p];
    let mut queue: VecDeque<usize> = (0..p).filter(|&x| m.var_to_eq[x].is_none()).collect();
    queue.iter().for_each(|&x| under_var[x] = true);
    while let Some(x) = queue.pop_front() {
        for &(f, _) in &g.var_adj[x] {
            if under_eq[f] {
                continue;
            }
            under_eq[f] = true;
            match m.eq_to_var[f] {
                Some(y) if !under_var[y] => {
                    under_var[y] = true;
                    queue.push_back(y);
                }
                Some(_) => {}
                None => return Err(Error::ContractViolation("matching is not maximum".into())),
            }
        }
    }
    if (0..n).any(|f| over_eq[f] && under_eq[f]) || (0..p).any(|x| over_var[x] && under_var[x]) {
        return Err(Error::ContractViolation("matching is not maximum".into()));
    }

    let pick = |flags: &[bool], want: bool| -> Vec<usize> {
        (0..flags.len()).filter(|&i| flags[i] == want).collect()
    };
    let over = Block {
        equations: pick(&over_eq, true),
        variables: pick(&over_var, true),
    };
    let under = Block {
        equations: pick(&under_eq, true),
        variables: pick(&under_var, true),
    };
    let enabled = Block {
        equations: (0..n).filter(|&f| !over_eq[f] && !under_eq[f]).collect(),
        variables: (0..p).filter(|&x| !over_var[x] && !under_var[x]).collect(),
    };

    let sub = g.induced(&enabled.equations, &enabled.variables);
    let mut var_pos = vec![usize::MAX; p];
    for (j, &x) in enabled.variables.iter().enumerate() {
        var_pos[x] = j;
    }
    let sub_pairs: Vec<(usize, usize)> = enabled
        .equations
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let x = m.eq_to_var[f].expect("enabled equations are matched");
            (i, var_pos[x])
        })
        .collect();
    let sub_m = Matching::from_pairs(&sub, &sub_pairs)?;
    let btf = direct_and_scc(&sub, &sub_m)?;
    let fine_blocks = btf
        .blocks
        .into_iter()
        .map(|b| Block {
            equations: b.equations.iter().map(|&i| enabled.equations[i]).collect(),
            variables: b.variables.iter().map(|&j| enabled.variables[j]).collect(),
        })
        .collect();

    Ok(DmDecomposition {
        under,
        enabled,
        over,
        fine_blocks,
        partial_order: btf.partial_order,
        matching: m.clone(),
    })
}

/// Drops the overdetermined equations; all variables are kept.
pub fn remove_overdetermined(g: &WeightedBipartiteGraph) -> WeightedBipartiteGraph {
    let dm = dm_decompose(g);
    let keep: Vec<usize> = (0..g.n_eqs())
        .filter(|f| dm.over.equations.binary_search(f).is_err())
        .collect();
    let all_vars: Vec<usize> = (0..g.n_vars()).collect();
    g.induced(&keep, &all_vars)
}
