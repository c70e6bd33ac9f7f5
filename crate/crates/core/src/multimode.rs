//! Mode changes: two-instant unfolding, conflict resolution by causality,
//! restart systems, and per-mode analysis.
//!
//! Continuous modes are read through the Euler map, so derivatives become
//! forward shifts and an instant is one infinitesimal step. Instances are
//! written with bullets: `•x` is the previous value of `x`, `x•` the next.

use crate::error::{Error, Result};
use crate::graph::{
    direct_and_scc, dm_decompose, has_equation_complete_matching, is_structurally_nonsingular,
    max_cardinality_matching, Btf, DmDecomposition, WeightedBipartiteGraph,
};
use crate::model::{euler_map, restrict_to_mode, Equation, Mode, Model, TimeDomain};
use crate::parser::enumerate_modes;
use crate::sigma::{
    find_offsets, find_offsets_nonsquare, index_reduce_with, leading_graph, IndexReduction,
    OffsetSolution,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeChange {
    prev: Mode,
    next: Mode,
}

impl ModeChange {
    pub fn new(prev: Mode, next: Mode) -> Result<Self> {
        if prev == next {
            return Err(Error::SameMode);
        }
        Ok(ModeChange { prev, next })
    }

    pub fn prev(&self) -> &Mode {
        &self.prev
    }

    pub fn next(&self) -> &Mode {
        &self.next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Instant {
    Previous,
    Current,
}

/// A variable at a time offset relative to the current instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldedInstance {
    pub var: usize,
    pub offset: i32,
    pub name: String,
    /// The instant that determines this instance, if any; other instances
    /// are given. An instance leading at both instants belongs to the
    /// previous one, whose determinations stand.
    pub leading_at: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldedEquation {
    pub name: String,
    /// Index of the source equation in the mode-restricted model.
    pub source: usize,
    pub shifts: u32,
    pub instant: Instant,
    /// A shift below the equation's offset `c_f`.
    pub consistency: bool,
    /// Instances occurring in the equation, as indices into `instances`.
    pub occurrences: Vec<usize>,
}

/// The reduced previous-mode system at offset −1 stacked on the reduced
/// next-mode system at offset 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unfolded {
    pub change: ModeChange,
    pub equations: Vec<UnfoldedEquation>,
    /// Sorted by offset, then variable.
    pub instances: Vec<UnfoldedInstance>,
    /// Indices of the unknown instances, in `instances` order.
    pub dependent: Vec<usize>,
    /// Current-instant rows that coincide with a previous-instant row (same
    /// equation at the same absolute shift), by name, paired with the index
    /// of that row. They are represented once, by the previous-instant row.
    pub identified: Vec<(String, usize)>,
    pub prev_offsets: OffsetSolution,
    pub next_offsets: OffsetSolution,
}

impl Unfolded {
    /// Incidence graph over the dependent instances; given instances are
    /// dropped. Variable `j` of the graph is `instances[dependent[j]]`.
    pub fn graph(&self) -> WeightedBipartiteGraph {
        self.subgraph(&(0..self.equations.len()).collect::<Vec<_>>())
    }

    fn subgraph(&self, eqs: &[usize]) -> WeightedBipartiteGraph {
        let mut col = vec![usize::MAX; self.instances.len()];
        for (j, &i) in self.dependent.iter().enumerate() {
            col[i] = j;
        }
        let edges: Vec<(usize, usize, u32)> = eqs
            .iter()
            .enumerate()
            .flat_map(|(r, &f)| {
                let col = &col;
                self.equations[f]
                    .occurrences
                    .iter()
                    .filter(move |&&i| col[i] != usize::MAX)
                    .map(move |&i| (r, col[i], 0))
            })
            .collect();
        WeightedBipartiteGraph::new(
            eqs.iter()
                .map(|&f| self.equations[f].name.clone())
                .collect(),
            self.dependent
                .iter()
                .map(|&i| self.instances[i].name.clone())
                .collect(),
            edges,
        )
        .expect("indices in range")
    }

    /// The unfolded system as an algebraic model over its dependent instances.
    pub fn to_model(&self, name: &str) -> Result<Model> {
        let g = self.graph();
        let mut b = Model::builder(name, TimeDomain::Discrete).signals(g.var_names().to_vec());
        for f in 0..g.n_eqs() {
            b = b.equation(Equation::new(
                g.eq_name(f),
                g.eq_edges(f).iter().map(|&(x, _)| (x, 0)),
            ));
        }
        b.build()
    }
}

fn bullets(n: u32) -> String {
    "•".repeat(n as usize)
}

fn instance_name(base: &str, offset: i32) -> String {
    if offset < 0 {
        format!("{}{base}", bullets(offset.unsigned_abs()))
    } else {
        format!("{base}{}", bullets(offset as u32))
    }
}

fn reduce_mode(model: &Model, mode: &Mode) -> Result<IndexReduction> {
    let restricted = restrict_to_mode(model, mode)?;
    let offsets = find_offsets(&WeightedBipartiteGraph::from_model(&restricted))?;
    Ok(index_reduce_with(&restricted, offsets))
}

/// Unfolds a mode change over the previous and current instants.
///
/// The previous instant contributes the previous mode's shifted system
/// `F_Σ`, which determined the previous leading values. Its consistency rows
/// lie strictly below those leading degrees and were settled earlier, so
/// they are not repeated. The current instant contributes the whole reduced
/// next-mode system, consistency rows included, except for rows already
/// present as a shifted previous-instant row of an equation active in both
/// modes.
pub fn unfold_mode_change(model: &Model, change: &ModeChange) -> Result<Unfolded> {
    let discrete = match model.time_domain() {
        TimeDomain::Continuous => euler_map(model),
        TimeDomain::Discrete => model.clone(),
    };
    let prev = reduce_mode(&discrete, &change.prev)?;
    let next = reduce_mode(&discrete, &change.next)?;

    struct Row<'a> {
        eq: &'a Equation,
        source: usize,
        instant: Instant,
        consistency: bool,
    }
    let mut rows: Vec<Row> = Vec::new();
    for (i, eq) in prev.sigma_equations.iter().enumerate() {
        rows.push(Row {
            eq,
            source: prev.sigma_system[i].0,
            instant: Instant::Previous,
            consistency: false,
        });
    }
    let mut current: Vec<Row> = Vec::new();
    for (i, eq) in next.consistency_equations.iter().enumerate() {
        current.push(Row {
            eq,
            source: next.consistency[i].0,
            instant: Instant::Current,
            consistency: true,
        });
    }
    for (i, eq) in next.sigma_equations.iter().enumerate() {
        current.push(Row {
            eq,
            source: next.sigma_system[i].0,
            instant: Instant::Current,
            consistency: false,
        });
    }
    // Group current rows by source equation, lowest shift first.
    current.sort_by_key(|r| (r.source, r.eq.shifts()));
    let mut identified = Vec::new();
    for r in current {
        let twin = rows.iter().position(|p| {
            p.instant == Instant::Previous
                && p.eq.base_name() == r.eq.base_name()
                && p.eq.shifts() == r.eq.shifts() + 1
        });
        match twin {
            Some(p) => {
                identified.push((format!("{}{}", r.eq.base_name(), bullets(r.eq.shifts())), p))
            }
            None => rows.push(r),
        }
    }

    let vars = discrete.variables();
    let mut keys: Vec<(i32, usize)> = Vec::new();
    for r in &rows {
        let shift = if r.instant == Instant::Previous {
            -1
        } else {
            0
        };
        for inc in r.eq.incidences() {
            keys.push((inc.degree as i32 + shift, inc.var));
        }
    }
    for x in 0..vars.len() {
        keys.push((prev.offsets.d[x] as i32 - 1, x));
        keys.push((next.offsets.d[x] as i32, x));
    }
    keys.sort_unstable();
    keys.dedup();
    let instances: Vec<UnfoldedInstance> = keys
        .iter()
        .map(|&(offset, var)| {
            let leading_at = if offset == prev.offsets.d[var] as i32 - 1 {
                Some(Instant::Previous)
            } else if offset == next.offsets.d[var] as i32 {
                Some(Instant::Current)
            } else {
                None
            };
            UnfoldedInstance {
                var,
                offset,
                name: instance_name(&vars[var].name, offset),
                leading_at,
            }
        })
        .collect();
    let lookup = |offset: i32, var: usize| {
        keys.binary_search(&(offset, var))
            .expect("instance registered")
    };
    let equations = rows
        .iter()
        .map(|r| {
            let shift = if r.instant == Instant::Previous {
                -1
            } else {
                0
            };
            let base = r.eq.base_name();
            let name = match r.instant {
                Instant::Previous => format!("•{base}{}", bullets(r.eq.shifts())),
                Instant::Current => format!("{base}{}", bullets(r.eq.shifts())),
            };
            let mut occurrences: Vec<usize> =
                r.eq.incidences()
                    .iter()
                    .map(|inc| lookup(inc.degree as i32 + shift, inc.var))
                    .collect();
            occurrences.sort_unstable();
            UnfoldedEquation {
                name,
                source: r.source,
                shifts: r.eq.shifts(),
                instant: r.instant,
                consistency: r.consistency,
                occurrences,
            }
        })
        .collect();
    let dependent = (0..instances.len())
        .filter(|&i| instances[i].leading_at.is_some())
        .collect();
    Ok(Unfolded {
        change: change.clone(),
        equations,
        instances,
        dependent,
        identified,
        prev_offsets: prev.offsets,
        next_offsets: next.offsets,
    })
}

/// Outcome of causality-based conflict resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictReport {
    /// Overdetermined part of the unfolded system before any removal, as
    /// unfolded-equation and instance indices.
    pub conflict_equations: Vec<usize>,
    pub conflict_instances: Vec<usize>,
    /// Current-instant consistency equations removed, in removal order.
    pub removed: Vec<usize>,
    /// Current-instant equations kept.
    pub restart_equations: Vec<usize>,
    /// Current-instant leading instances solved by the restart system.
    pub restart_instances: Vec<usize>,
    /// Removal rounds needed to empty the overdetermined part.
    pub rounds: usize,
}

/// Removes current-instant consistency equations from the overdetermined
/// part until it is empty. Previous-instant equations are never removed.
pub fn resolve_conflicts(unfolded: &Unfolded) -> Result<ConflictReport> {
    let mut active: Vec<usize> = (0..unfolded.equations.len()).collect();
    let mut removed = Vec::new();
    let mut conflict: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut rounds = 0;
    loop {
        let dm = dm_decompose(&unfolded.subgraph(&active));
        let over_eqs: Vec<usize> = dm.over.equations.iter().map(|&r| active[r]).collect();
        if conflict.is_none() {
            conflict = Some((
                over_eqs.clone(),
                dm.over
                    .variables
                    .iter()
                    .map(|&j| unfolded.dependent[j])
                    .collect(),
            ));
        }
        if over_eqs.is_empty() {
            break;
        }
        let removable: Vec<usize> = over_eqs
            .iter()
            .copied()
            .filter(|&f| {
                let e = &unfolded.equations[f];
                e.instant == Instant::Current && e.consistency
            })
            .collect();
        if removable.is_empty() {
            return Err(Error::CausalityViolation(
                over_eqs
                    .iter()
                    .map(|&f| unfolded.equations[f].name.clone())
                    .collect(),
            ));
        }
        active.retain(|f| !removable.contains(f));
        removed.extend(removable);
        rounds += 1;
    }
    let (conflict_equations, conflict_instances) = conflict.expect("set in first round");
    let restart_equations = active
        .iter()
        .copied()
        .filter(|&f| unfolded.equations[f].instant == Instant::Current)
        .collect();
    let restart_instances = unfolded
        .dependent
        .iter()
        .copied()
        .filter(|&i| unfolded.instances[i].leading_at == Some(Instant::Current))
        .collect();
    Ok(ConflictReport {
        conflict_equations,
        conflict_instances,
        removed,
        restart_equations,
        restart_instances,
        rounds,
    })
}

impl ConflictReport {
    /// Restart system as a graph over the current leading instances.
    pub fn restart_graph(&self, unfolded: &Unfolded) -> WeightedBipartiteGraph {
        let mut col = vec![usize::MAX; unfolded.instances.len()];
        for (j, &i) in self.restart_instances.iter().enumerate() {
            col[i] = j;
        }
        let edges: Vec<(usize, usize, u32)> = self
            .restart_equations
            .iter()
            .enumerate()
            .flat_map(|(r, &f)| {
                let col = &col;
                unfolded.equations[f]
                    .occurrences
                    .iter()
                    .filter(move |&&i| col[i] != usize::MAX)
                    .map(move |&i| (r, col[i], 0))
            })
            .collect();
        WeightedBipartiteGraph::new(
            self.restart_equations
                .iter()
                .map(|&f| unfolded.equations[f].name.clone())
                .collect(),
            self.restart_instances
                .iter()
                .map(|&i| unfolded.instances[i].name.clone())
                .collect(),
            edges,
        )
        .expect("indices in range")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeAnalysis {
    /// Square and structurally nonsingular: offsets, latent equations and
    /// the block structure of the shifted system in its leading variables.
    Regular { reduction: IndexReduction, btf: Btf },
    /// More variables than equations with an equation-complete matching.
    NonSquare {
        offsets: OffsetSolution,
        dm: DmDecomposition,
    },
    /// No offsets exist; the decomposition locates the defect.
    Singular { dm: DmDecomposition },
    /// Internal failure while analysing this mode.
    Failed { error: Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeReport {
    pub mode: Mode,
    pub model: Model,
    pub analysis: ModeAnalysis,
}

/// Structural analysis of one guard-free model.
pub fn analyze_mode(model: &Model) -> ModeAnalysis {
    let g = WeightedBipartiteGraph::from_model(model);
    let result = if is_structurally_nonsingular(&g) {
        find_offsets(&g).and_then(|offsets| {
            let lg = leading_graph(&g, &offsets);
            let btf = direct_and_scc(&lg, &max_cardinality_matching(&lg))?;
            Ok(ModeAnalysis::Regular {
                reduction: index_reduce_with(model, offsets),
                btf,
            })
        })
    } else if g.n_vars() > g.n_eqs() && has_equation_complete_matching(&g) {
        match find_offsets_nonsquare(&g) {
            Ok((offsets, dm)) => Ok(ModeAnalysis::NonSquare { offsets, dm }),
            Err(Error::IsolatedVariable(_)) => Ok(ModeAnalysis::Singular {
                dm: dm_decompose(&g),
            }),
            Err(e) => Err(e),
        }
    } else {
        Ok(ModeAnalysis::Singular {
            dm: dm_decompose(&g),
        })
    };
    result.unwrap_or_else(|error| ModeAnalysis::Failed { error })
}

/// Analyses every mode of `model`, in the order of `enumerate_modes`.
pub fn analyze_all_modes(model: &Model) -> Result<Vec<ModeReport>> {
    enumerate_modes(model)?
        .into_iter()
        .map(|mode| {
            let restricted = restrict_to_mode(model, &mode)?;
            Ok(ModeReport {
                analysis: analyze_mode(&restricted),
                model: restricted,
                mode,
            })
        })
        .collect()
}
