//! Pryce's Σ-method (square and non-square), index reduction, and
//! Pantelides' algorithm.

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::graph::{
    dm_decompose, has_equation_complete_matching, is_structurally_nonsingular,
    max_cardinality_matching, DmDecomposition, Matching, WeightedBipartiteGraph,
};
use crate::model::{shift_equation, Equation, Model};

/// Primal certificate of an offset solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Complete matching (square systems).
    Matching(Matching),
    /// Subgraph covering each variable exactly once and each equation at
    /// least once, as `(f, x)` pairs sorted by variable.
    Cover(Vec<(usize, usize)>),
}

impl Witness {
    /// Witness edges sorted by equation, then variable.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self {
            Witness::Matching(m) => m.pairs(),
            Witness::Cover(h) => {
                let mut e = h.clone();
                e.sort_unstable();
                e
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetSolution {
    pub c: Vec<u32>,
    pub d: Vec<u32>,
    pub witness: Witness,
    pub index: u32,
    pub primal_weight: u64,
    /// Fixpoint sweeps until `c` stopped changing.
    pub iterations: usize,
}

impl OffsetSolution {
    /// Checks dual feasibility, slackness on the witness and strong duality.
    pub fn verify(&self, g: &WeightedBipartiteGraph) -> Result<()> {
        let fail = |msg: String| Err(Error::ContractViolation(msg));
        if self.c.len() != g.n_eqs() || self.d.len() != g.n_vars() {
            return fail("offset vectors do not match the graph".into());
        }
        for (f, x, w) in g.edges() {
            if i64::from(self.d[x]) - i64::from(self.c[f]) < i64::from(w) {
                return fail(format!("d[{}] - c[{}] < {w}", g.var_name(x), g.eq_name(f)));
            }
        }
        let mut weight = 0u64;
        for (f, x) in self.witness.edges() {
            let Some(w) = g.weight(f, x) else {
                return fail(format!("witness pair ({f}, {x}) is not an edge"));
            };
            if i64::from(self.d[x]) - i64::from(self.c[f]) != i64::from(w) {
                return fail(format!(
                    "slackness fails on witness edge ({}, {})",
                    g.eq_name(f),
                    g.var_name(x)
                ));
            }
            weight += u64::from(w);
        }
        if weight != self.primal_weight {
            return fail("primal weight does not match the witness".into());
        }
        let sum_d: i64 = self.d.iter().map(|&v| i64::from(v)).sum();
        let sum_c: i64 = self.c.iter().map(|&v| i64::from(v)).sum();
        if sum_d - sum_c != self.primal_weight as i64 {
            return fail(format!(
                "duality gap: sum d - sum c = {} but primal weight is {}",
                sum_d - sum_c,
                self.primal_weight
            ));
        }
        if self.index != self.c.iter().copied().max().unwrap_or(0) {
            return fail("index differs from max c".into());
        }
        Ok(())
    }
}

/// Maximum-weight complete matching of a square graph.
pub fn max_weight_complete_matching(g: &WeightedBipartiteGraph) -> Result<Matching> {
    if !is_structurally_nonsingular(g) {
        return Err(Error::NoCompleteMatching);
    }
    let top = i64::from(g.max_weight());
    let adj: Vec<Vec<(usize, i64)>> = (0..g.n_eqs())
        .map(|f| {
            g.eq_edges(f)
                .iter()
                .map(|&(x, w)| (x, top - i64::from(w)))
                .collect()
        })
        .collect();
    let cols = min_cost_assignment(g.n_vars(), &adj).ok_or(Error::NoCompleteMatching)?;
    let pairs: Vec<(usize, usize)> = cols.into_iter().enumerate().collect();
    Matching::from_pairs(g, &pairs)
}

/// Defensive bound on fixpoint sweeps; the loop is a longest-path relaxation
/// that settles well within it.
fn sweep_bound(g: &WeightedBipartiteGraph) -> usize {
    g.n_eqs() * (g.max_weight() as usize + 1) + 1
}

/// `d_x = max { d_fx + c_f }` over the edges of `x`.
fn variable_offsets(g: &WeightedBipartiteGraph, c: &[u32]) -> Vec<u32> {
    (0..g.n_vars())
        .map(|x| {
            g.var_edges(x)
                .iter()
                .map(|&(f, w)| w + c[f])
                .max()
                .unwrap_or(0)
        })
        .collect()
}

/// Runs the fixpoint from `c = 0`, where `update` maps `d` to the next `c`.
/// Returns the sequence of `c` iterates, the last one being the fixpoint.
fn fixpoint(
    g: &WeightedBipartiteGraph,
    update: impl Fn(&[u32]) -> Vec<u32>,
) -> Result<Vec<Vec<u32>>> {
    let bound = sweep_bound(g);
    let mut trace = vec![vec![0u32; g.n_eqs()]];
    loop {
        let c = trace.last().expect("nonempty");
        let next = update(&variable_offsets(g, c));
        if next == *c {
            return Ok(trace);
        }
        if trace.len() > bound {
            return Err(Error::NonConvergence { bound });
        }
        trace.push(next);
    }
}

fn square_trace(g: &WeightedBipartiteGraph, m: &Matching) -> Result<Vec<Vec<u32>>> {
    fixpoint(g, |d| {
        (0..g.n_eqs())
            .map(|f| {
                let x = m.var_of(f).expect("complete matching");
                d[x] - g.weight(f, x).expect("matched edge")
            })
            .collect()
    })
}

fn solution(g: &WeightedBipartiteGraph, trace: Vec<Vec<u32>>, witness: Witness) -> OffsetSolution {
    let iterations = trace.len();
    let c = trace.into_iter().last().expect("nonempty trace");
    let d = variable_offsets(g, &c);
    let primal_weight = witness
        .edges()
        .iter()
        .map(|&(f, x)| u64::from(g.weight(f, x).expect("witness edge")))
        .sum();
    OffsetSolution {
        index: c.iter().copied().max().unwrap_or(0),
        c,
        d,
        witness,
        primal_weight,
        iterations,
    }
}

/// Smallest offsets of a square, structurally nonsingular system.
pub fn find_offsets(g: &WeightedBipartiteGraph) -> Result<OffsetSolution> {
    let m = max_weight_complete_matching(g)?;
    let trace = square_trace(g, &m)?;
    Ok(solution(g, trace, Witness::Matching(m)))
}

/// The `c` iterates of the square fixpoint, starting from zero.
pub fn offset_iterates(g: &WeightedBipartiteGraph) -> Result<Vec<Vec<u32>>> {
    let m = max_weight_complete_matching(g)?;
    square_trace(g, &m)
}

/// Optimal variable-exact cover `H` for a system with at least as many
/// variables as equations. Each equation is covered through an
/// equation-complete matching; every other variable goes to its heaviest
/// equation (lowest index on ties).
fn optimal_cover(g: &WeightedBipartiteGraph) -> Result<Vec<(usize, usize)>> {
    if !has_equation_complete_matching(g) {
        return Err(Error::NoEquationCompleteMatching);
    }
    let mut best: Vec<(usize, u32)> = Vec::with_capacity(g.n_vars());
    for x in 0..g.n_vars() {
        let edges = g.var_edges(x);
        let Some(&(f0, w0)) = edges.first() else {
            return Err(Error::IsolatedVariable(g.var_name(x).to_string()));
        };
        let pick = edges.iter().fold(
            (f0, w0),
            |acc, &(f, w)| if w > acc.1 { (f, w) } else { acc },
        );
        best.push(pick);
    }
    // Matching x to f instead of its best equation loses best(x) - d_fx.
    let adj: Vec<Vec<(usize, i64)>> = (0..g.n_eqs())
        .map(|f| {
            g.eq_edges(f)
                .iter()
                .map(|&(x, w)| (x, i64::from(best[x].1) - i64::from(w)))
                .collect()
        })
        .collect();
    let cols = min_cost_assignment(g.n_vars(), &adj).ok_or(Error::NoEquationCompleteMatching)?;
    let mut owner: Vec<usize> = best.iter().map(|b| b.0).collect();
    for (f, x) in cols.into_iter().enumerate() {
        owner[x] = f;
    }
    Ok(owner.into_iter().enumerate().map(|(x, f)| (f, x)).collect())
}

/// Edges `(f, x)` where `x` occurs in the shifted equation at its leading
/// degree, i.e. `d_fx + c_f = d_x`.
pub fn leading_graph(g: &WeightedBipartiteGraph, sol: &OffsetSolution) -> WeightedBipartiteGraph {
    let edges: Vec<(usize, usize, u32)> = g
        .edges()
        .filter(|&(f, x, w)| w + sol.c[f] == sol.d[x])
        .map(|(f, x, _)| (f, x, 0))
        .collect();
    WeightedBipartiteGraph::new(g.eq_names().to_vec(), g.var_names().to_vec(), edges)
        .expect("same vertex sets")
}

/// Σ-method for systems with at least as many variables as equations.
/// Also returns the Dulmage-Mendelsohn decomposition of the shifted system
/// with respect to its leading variables.
pub fn find_offsets_nonsquare(
    g: &WeightedBipartiteGraph,
) -> Result<(OffsetSolution, DmDecomposition)> {
    let h = optimal_cover(g)?;
    let mut by_eq: Vec<Vec<usize>> = vec![Vec::new(); g.n_eqs()];
    for &(f, x) in &h {
        by_eq[f].push(x);
    }
    let trace = fixpoint(g, |d| {
        (0..g.n_eqs())
            .map(|f| {
                by_eq[f]
                    .iter()
                    .map(|&x| d[x] - g.weight(f, x).expect("cover edge"))
                    .max()
                    .expect("cover reaches every equation")
            })
            .collect()
    })?;
    let sol = solution(g, trace, Witness::Cover(h));
    let dm = dm_decompose(&leading_graph(g, &sol));
    if !dm.over.is_empty() {
        return Err(Error::ContractViolation(
            "shifted system has an overdetermined part in its leading variables".into(),
        ));
    }
    Ok((sol, dm))
}

/// A system together with its latent equations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexReduction {
    pub offsets: OffsetSolution,
    /// `(f, c_f)` for every equation.
    pub sigma_system: Vec<(usize, u32)>,
    /// `(f, k)` for every `k < c_f`.
    pub consistency: Vec<(usize, u32)>,
    pub sigma_equations: Vec<Equation>,
    pub consistency_equations: Vec<Equation>,
}

pub fn index_reduce(model: &Model) -> Result<IndexReduction> {
    let g = WeightedBipartiteGraph::from_model(model);
    let offsets = find_offsets(&g)?;
    Ok(index_reduce_with(model, offsets))
}

/// Builds the reduced system from already computed offsets.
pub fn index_reduce_with(model: &Model, offsets: OffsetSolution) -> IndexReduction {
    let eqs = model.equations();
    let sigma_system: Vec<(usize, u32)> = offsets.c.iter().copied().enumerate().collect();
    let consistency: Vec<(usize, u32)> = sigma_system
        .iter()
        .flat_map(|&(f, cf)| (0..cf).map(move |k| (f, k)))
        .collect();
    IndexReduction {
        sigma_equations: sigma_system
            .iter()
            .map(|&(f, k)| shift_equation(&eqs[f], k))
            .collect(),
        consistency_equations: consistency
            .iter()
            .map(|&(f, k)| shift_equation(&eqs[f], k))
            .collect(),
        offsets,
        sigma_system,
        consistency,
    }
}

/// Outcome of Pantelides' algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PantelidesResult {
    /// Differentiation count of each equation.
    pub c: Vec<u32>,
    /// The minimally structurally singular sets, in the order differentiated.
    pub mss_sets: Vec<Vec<usize>>,
    /// `|L(E)|` for each located set, measured before differentiating it.
    pub leading_neighbourhoods: Vec<usize>,
}

struct Leading {
    /// `eq_vars[f]`: variables of `f` at their global leading degree.
    eq_vars: Vec<Vec<usize>>,
}

impl Leading {
    fn new(n_vars: usize, weights: &[Vec<(usize, u32)>]) -> Self {
        let mut top = vec![0u32; n_vars];
        for row in weights {
            for &(x, w) in row {
                top[x] = top[x].max(w);
            }
        }
        Leading {
            eq_vars: weights
                .iter()
                .map(|row| {
                    row.iter()
                        .filter(|&&(x, w)| w == top[x])
                        .map(|e| e.0)
                        .collect()
                })
                .collect(),
        }
    }

    fn graph(&self, n_vars: usize, eqs: &[usize]) -> WeightedBipartiteGraph {
        WeightedBipartiteGraph::new(
            eqs.iter().map(|f| f.to_string()).collect(),
            (0..n_vars).map(|x| x.to_string()).collect(),
            eqs.iter()
                .enumerate()
                .flat_map(|(i, &f)| self.eq_vars[f].iter().map(move |&x| (i, x, 0))),
        )
        .expect("indices in range")
    }

    fn neighbourhood(&self, eqs: &[usize]) -> usize {
        let mut vars: Vec<usize> = eqs.iter().flat_map(|&f| self.eq_vars[f].clone()).collect();
        vars.sort_unstable();
        vars.dedup();
        vars.len()
    }
}

/// Pantelides' algorithm on the weighted pattern: differentiate minimally
/// structurally singular subsets of the leading-derivative pattern until it
/// admits an equation-complete matching.
pub fn pantelides_offsets(g: &WeightedBipartiteGraph) -> Result<PantelidesResult> {
    if !has_equation_complete_matching(g) {
        return Err(Error::NoEquationCompleteMatching);
    }
    let n = g.n_eqs();
    let p = g.n_vars();
    let mut weights: Vec<Vec<(usize, u32)>> = (0..n).map(|f| g.eq_edges(f).to_vec()).collect();
    let mut c = vec![0u32; n];
    let mut mss_sets = Vec::new();
    let mut leading_neighbourhoods = Vec::new();
    let bound = n * n * (g.max_weight() as usize + 1) + 1;
    let all: Vec<usize> = (0..n).collect();

    loop {
        let lead = Leading::new(p, &weights);
        let lg = lead.graph(p, &all);
        let m = max_cardinality_matching(&lg);
        let Some(root) = (0..n).find(|&f| m.var_of(f).is_none()) else {
            break;
        };
        if mss_sets.len() >= bound {
            return Err(Error::NonConvergence { bound });
        }
        let violator = hall_violator(&lg, &m, root);
        let mss = shrink_to_minimal(&lead, p, violator);
        leading_neighbourhoods.push(lead.neighbourhood(&mss));
        for &f in &mss {
            c[f] += 1;
            for e in &mut weights[f] {
                e.1 += 1;
            }
        }
        mss_sets.push(mss);
    }
    Ok(PantelidesResult {
        c,
        mss_sets,
        leading_neighbourhoods,
    })
}

/// Equations reachable from the unmatched `root` by alternating paths. With a
/// maximum matching their neighbourhood is one vertex short.
fn hall_violator(g: &WeightedBipartiteGraph, m: &Matching, root: usize) -> Vec<usize> {
    let mut seen_eq = vec![false; g.n_eqs()];
    let mut seen_var = vec![false; g.n_vars()];
    let mut stack = vec![root];
    seen_eq[root] = true;
    while let Some(f) = stack.pop() {
        for &(x, _) in g.eq_edges(f) {
            if seen_var[x] {
                continue;
            }
            seen_var[x] = true;
            if let Some(h) = m.eq_of(x) {
                if !seen_eq[h] {
                    seen_eq[h] = true;
                    stack.push(h);
                }
            }
        }
    }
    (0..g.n_eqs()).filter(|&f| seen_eq[f]).collect()
}

/// Drops equations (in declaration order) whose removal keeps the set
/// structurally singular. One pass suffices: singularity is monotone under
/// adding equations, so a kept equation stays necessary as the set shrinks.
fn shrink_to_minimal(lead: &Leading, n_vars: usize, mut set: Vec<usize>) -> Vec<usize> {
    let mut i = 0;
    while i < set.len() {
        let mut trial = set.clone();
        trial.remove(i);
        let singular =
            !trial.is_empty() && !has_equation_complete_matching(&lead.graph(n_vars, &trial));
        if singular {
            set = trial;
        } else {
            i += 1;
        }
    }
    set
}
