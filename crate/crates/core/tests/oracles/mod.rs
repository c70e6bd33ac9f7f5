//! Brute-force reference implementations. Everything here enumerates; none of
//! it shares code with the library algorithms it checks.
#![allow(dead_code)]

use std::collections::BTreeSet;

use daesa_core::WeightedBipartiteGraph;

/// Every matching of maximum cardinality, as sorted `(f, x)` lists.
pub fn maximum_matchings(g: &WeightedBipartiteGraph) -> Vec<Vec<(usize, usize)>> {
    fn go(
        g: &WeightedBipartiteGraph,
        f: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        best: &mut usize,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        // Remaining equations cannot lift the current size past the best.
        if cur.len() + (g.n_eqs() - f) < *best {
            return;
        }
        if f == g.n_eqs() {
            if cur.len() > *best {
                *best = cur.len();
                out.clear();
            }
            out.push(cur.clone());
            return;
        }
        for &(x, _) in g.eq_edges(f) {
            if !used[x] {
                used[x] = true;
                cur.push((f, x));
                go(g, f + 1, used, cur, best, out);
                cur.pop();
                used[x] = false;
            }
        }
        go(g, f + 1, used, cur, best, out);
    }
    let mut out = Vec::new();
    let mut best = 0;
    go(
        g,
        0,
        &mut vec![false; g.n_vars()],
        &mut Vec::new(),
        &mut best,
        &mut out,
    );
    out
}

/// Every perfect matching of a square graph.
pub fn complete_matchings(g: &WeightedBipartiteGraph) -> Vec<Vec<(usize, usize)>> {
    let all = maximum_matchings(g);
    if g.n_eqs() == g.n_vars() && all.first().is_some_and(|m| m.len() == g.n_eqs()) {
        all
    } else {
        Vec::new()
    }
}

/// Largest total weight over perfect matchings, or `None` if there is none.
pub fn max_weight_perfect(g: &WeightedBipartiteGraph) -> Option<u64> {
    complete_matchings(g)
        .iter()
        .map(|m| {
            m.iter()
                .map(|&(f, x)| u64::from(g.weight(f, x).unwrap()))
                .sum()
        })
        .max()
}

/// Coarse decomposition from the Gallai-Edmonds characterization: a vertex
/// is in the deficient set D when some maximum matching leaves it exposed.
/// Over-determined equations are `D ∩ F` with their neighbours; under-
/// determined variables are `D ∩ X` with their neighbours; the rest is
/// enabled. Returned as `(eqs, vars)` pairs for under, enabled, over.
pub type Part = (BTreeSet<usize>, BTreeSet<usize>);

pub fn gallai_edmonds(g: &WeightedBipartiteGraph) -> (Part, Part, Part) {
    let mut eq_exposed = vec![false; g.n_eqs()];
    let mut var_exposed = vec![false; g.n_vars()];
    for m in maximum_matchings(g) {
        let mut eq_hit = vec![false; g.n_eqs()];
        let mut var_hit = vec![false; g.n_vars()];
        for &(f, x) in &m {
            eq_hit[f] = true;
            var_hit[x] = true;
        }
        for f in 0..g.n_eqs() {
            eq_exposed[f] |= !eq_hit[f];
        }
        for x in 0..g.n_vars() {
            var_exposed[x] |= !var_hit[x];
        }
    }
    let over_eqs: BTreeSet<usize> = (0..g.n_eqs()).filter(|&f| eq_exposed[f]).collect();
    let over_vars: BTreeSet<usize> = over_eqs
        .iter()
        .flat_map(|&f| g.eq_edges(f).iter().map(|e| e.0))
        .collect();
    let under_vars: BTreeSet<usize> = (0..g.n_vars()).filter(|&x| var_exposed[x]).collect();
    let under_eqs: BTreeSet<usize> = under_vars
        .iter()
        .flat_map(|&x| g.var_edges(x).iter().map(|e| e.0))
        .collect();
    let enabled_eqs = (0..g.n_eqs())
        .filter(|f| !over_eqs.contains(f) && !under_eqs.contains(f))
        .collect();
    let enabled_vars = (0..g.n_vars())
        .filter(|x| !over_vars.contains(x) && !under_vars.contains(x))
        .collect();
    (
        (under_eqs, under_vars),
        (enabled_eqs, enabled_vars),
        (over_eqs, over_vars),
    )
}

/// All dual-optimal `(c, d)` with entries in `0..=bound`. For fixed `c` the
/// only candidate worth checking is the smallest feasible `d`, since a
/// larger `d` raises the objective.
pub fn optimal_duals(g: &WeightedBipartiteGraph, bound: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    let Some(primal) = max_weight_perfect(g) else {
        return Vec::new();
    };
    let n = g.n_eqs();
    let mut out = Vec::new();
    let mut c = vec![0u32; n];
    loop {
        let d: Vec<u32> = (0..g.n_vars())
            .map(|x| {
                g.var_edges(x)
                    .iter()
                    .map(|&(f, w)| w + c[f])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        if d.iter().all(|&v| v <= bound) {
            let obj = d.iter().map(|&v| i64::from(v)).sum::<i64>()
                - c.iter().map(|&v| i64::from(v)).sum::<i64>();
            if obj == primal as i64 {
                out.push((c.clone(), d));
            }
        }
        // Odometer increment over 0..=bound.
        let mut i = 0;
        while i < n && c[i] == bound {
            c[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        c[i] += 1;
    }
    out
}

/// Elementwise minimum of a nonempty set of dual solutions.
pub fn elementwise_min(sols: &[(Vec<u32>, Vec<u32>)]) -> (Vec<u32>, Vec<u32>) {
    let (mut c, mut d) = sols[0].clone();
    for (c2, d2) in &sols[1..] {
        for (a, b) in c.iter_mut().zip(c2) {
            *a = (*a).min(*b);
        }
        for (a, b) in d.iter_mut().zip(d2) {
            *a = (*a).min(*b);
        }
    }
    (c, d)
}

/// Block partition as a set of `(eqs, vars)` sets, for order-free comparison.
pub fn partition(blocks: &[daesa_core::Block]) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    blocks
        .iter()
        .map(|b| (b.equations.clone(), b.variables.clone()))
        .collect()
}

/// All graphs on `n_eqs × n_vars` vertices, unweighted, in edge-mask order.
pub fn all_graphs(n_eqs: usize, n_vars: usize) -> impl Iterator<Item = WeightedBipartiteGraph> {
    let cells = n_eqs * n_vars;
    (0u64..1 << cells).map(move |mask| {
        let edges: Vec<(usize, usize)> = (0..cells)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (b / n_vars, b % n_vars))
            .collect();
        WeightedBipartiteGraph::unweighted(n_eqs, n_vars, &edges)
    })
}
