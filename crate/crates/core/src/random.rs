//! Random structural systems for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::WeightedBipartiteGraph;
use crate::model::{Equation, Model, TimeDomain};

/// Random graph: each `(f, x)` pair is an edge with probability `density`,
/// weighted uniformly in `0..=max_weight`.
pub fn random_graph<R: Rng + ?Sized>(
    rng: &mut R,
    n_eqs: usize,
    n_vars: usize,
    density: f64,
    max_weight: u32,
) -> WeightedBipartiteGraph {
    let mut edges = Vec::new();
    for f in 0..n_eqs {
        for x in 0..n_vars {
            if rng.gen_bool(density) {
                edges.push((f, x, rng.gen_range(0..=max_weight)));
            }
        }
    }
    WeightedBipartiteGraph::new(names("f", n_eqs), names("x", n_vars), edges)
        .expect("indices in range")
}

/// Random `n × n` graph with a planted complete matching, hence
/// structurally nonsingular.
pub fn random_nonsingular_graph<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    density: f64,
    max_weight: u32,
) -> WeightedBipartiteGraph {
    let base = random_graph(rng, n, n, density, max_weight);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let planted: Vec<(usize, usize, u32)> = perm
        .iter()
        .enumerate()
        .map(|(f, &x)| (f, x, rng.gen_range(0..=max_weight)))
        .collect();
    // Existing edges keep their weight when hit by the plant.
    let mut edges: Vec<_> = base.edges().collect();
    edges.extend(
        planted
            .into_iter()
            .filter(|&(f, x, _)| base.weight(f, x).is_none()),
    );
    WeightedBipartiteGraph::new(names("f", n), names("x", n), edges).expect("indices in range")
}

/// Continuous guard-free model with the incidence pattern of a random
/// nonsingular graph; edge weights become derivative degrees.
pub fn random_model<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    density: f64,
    max_degree: u32,
) -> Model {
    model_of(&random_nonsingular_graph(rng, n, density, max_degree))
}

/// The continuous model whose signature is `g`.
pub fn model_of(g: &WeightedBipartiteGraph) -> Model {
    let mut b = Model::builder("random", TimeDomain::Continuous).signals(g.var_names().to_vec());
    for f in 0..g.n_eqs() {
        b = b.equation(Equation::new(g.eq_name(f), g.eq_edges(f).iter().copied()));
    }
    b.build().expect("graph names are unique")
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}
