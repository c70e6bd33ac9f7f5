//! Existentially quantified systems `∃W: F(X, W, Y) = 0`.
//!
//! The over-determination verdict is taken on the full system with X, W and
//! Y all unknown. The remaining conditions are checked with Y regarded as
//! given: the Y columns are dropped and the decomposition of what is left
//! tells whether X is determined without any help from W.

use crate::error::{Error, Result};
use crate::graph::{dm_decompose, Block, DmDecomposition, Matching, WeightedBipartiteGraph};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    X,
    W,
    Y,
}

/// Dependent variables of interest (X), variables to eliminate (W) and
/// given variables (Y).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RolePartition {
    roles: Vec<Role>,
}

impl RolePartition {
    /// Roles must be disjoint and cover `0..n_vars`.
    pub fn new(n_vars: usize, x: &[usize], w: &[usize], y: &[usize]) -> Result<Self> {
        let mut roles: Vec<Option<Role>> = vec![None; n_vars];
        for (set, role) in [(x, Role::X), (w, Role::W), (y, Role::Y)] {
            for &v in set {
                let slot = roles
                    .get_mut(v)
                    .ok_or_else(|| Error::InvalidRoles(format!("variable #{v} out of range")))?;
                if slot.is_some() {
                    return Err(Error::InvalidRoles(format!(
                        "variable #{v} is given two roles"
                    )));
                }
                *slot = Some(role);
            }
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(v, r)| {
                r.ok_or_else(|| Error::InvalidRoles(format!("variable #{v} has no role")))
            })
            .collect::<Result<_>>()?;
        Ok(RolePartition { roles })
    }

    pub fn from_roles(roles: Vec<Role>) -> Self {
        RolePartition { roles }
    }

    /// Same as [`RolePartition::new`] with variables named as in `model`.
    pub fn from_names(model: &Model, x: &[&str], w: &[&str], y: &[&str]) -> Result<Self> {
        let resolve = |names: &[&str]| -> Result<Vec<usize>> {
            names
                .iter()
                .map(|n| {
                    model
                        .var_index(n)
                        .ok_or_else(|| Error::InvalidRoles(format!("unknown variable `{n}`")))
                })
                .collect()
        };
        let roles = Self::new(
            model.variables().len(),
            &resolve(x)?,
            &resolve(w)?,
            &resolve(y)?,
        );
        roles.map_err(|e| match e {
            Error::InvalidRoles(msg) => Error::InvalidRoles(name_vars(model, &msg)),
            other => other,
        })
    }

    pub fn role(&self, v: usize) -> Role {
        self.roles[v]
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn vars(&self, role: Role) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&v| self.roles[v] == role)
            .collect()
    }
}

fn name_vars(model: &Model, msg: &str) -> String {
    match msg.split_once('#') {
        Some((head, rest)) => {
            let (num, tail) = rest.split_at(rest.find(' ').unwrap_or(rest.len()));
            match num
                .parse::<usize>()
                .ok()
                .and_then(|i| model.variables().get(i))
            {
                Some(v) => format!("{head}`{}`{tail}", v.name),
                None => msg.to_string(),
            }
        }
        None => msg.to_string(),
    }
}

/// How far back condition 3 looks for W-variables feeding an X block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredecessorRule {
    /// Blocks with a direct edge into the X block.
    #[default]
    Immediate,
    /// Every block the X block transitively depends on.
    Transitive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistQuantResult {
    /// No overdetermined part with X, W and Y all unknown.
    pub b_over: bool,
    /// Conditions 2 and 3 under the selected rule.
    pub b_under: bool,
    /// Condition 2 alone: no X variable is left underdetermined.
    pub x_not_underdetermined: bool,
    /// Condition 3 under each rule.
    pub blocks_immediate: bool,
    pub blocks_transitive: bool,
    pub rule: PredecessorRule,
    /// Blocks determining X, in model indices. Set iff `b_over && b_under`.
    pub f_sigma: Option<Vec<Block>>,
    /// Remaining fine blocks plus the equations that only constrain Y.
    pub f_consistency: Option<Vec<Block>>,
    /// Equations left underdetermined once Y is given.
    pub unused_equations: Vec<usize>,
    /// Decomposition with every variable unknown.
    pub full: DmDecomposition,
    /// Decomposition with Y given, in model indices.
    pub given_y: DmDecomposition,
}

impl ExistQuantResult {
    pub fn rules_diverge(&self) -> bool {
        self.blocks_immediate != self.blocks_transitive
    }

    /// Whether every X variable belongs to an `f_sigma` block.
    pub fn determines_all_x(&self, roles: &RolePartition) -> bool {
        let Some(sigma) = &self.f_sigma else {
            return false;
        };
        let mut covered = vec![false; roles.len()];
        for b in sigma {
            for &v in &b.variables {
                covered[v] = true;
            }
        }
        roles.vars(Role::X).iter().all(|&v| covered[v])
    }
}

pub fn exist_quantif_eqn(model: &Model, roles: &RolePartition) -> Result<ExistQuantResult> {
    exist_quantif_eqn_with(model, roles, PredecessorRule::default())
}

pub fn exist_quantif_eqn_with(
    model: &Model,
    roles: &RolePartition,
    rule: PredecessorRule,
) -> Result<ExistQuantResult> {
    if !model.is_guard_free() {
        return Err(Error::ContractViolation(
            "existential analysis needs a single-mode model".into(),
        ));
    }
    exist_quantif_graph(&WeightedBipartiteGraph::from_model(model), roles, rule)
}

/// The analysis on a bare incidence graph (weights are ignored).
pub fn exist_quantif_graph(
    g: &WeightedBipartiteGraph,
    roles: &RolePartition,
    rule: PredecessorRule,
) -> Result<ExistQuantResult> {
    if roles.len() != g.n_vars() {
        return Err(Error::InvalidRoles(format!(
            "{} roles for {} variables",
            roles.len(),
            g.n_vars()
        )));
    }
    let full = dm_decompose(g);
    let b_over = full.over.is_empty();

    let all_eqs: Vec<usize> = (0..g.n_eqs()).collect();
    let unknowns: Vec<usize> = (0..g.n_vars())
        .filter(|&v| roles.role(v) != Role::Y)
        .collect();
    let sub = g.induced(&all_eqs, &unknowns);
    let given_y = lift(g, dm_decompose(&sub), &unknowns);

    let x_not_underdetermined = given_y
        .under
        .variables
        .iter()
        .all(|&v| roles.role(v) != Role::X);

    let has_role = |vars: &[usize], role: Role| vars.iter().any(|&v| roles.role(v) == role);
    let blocks = &given_y.fine_blocks;
    let x_blocks: Vec<usize> = (0..blocks.len())
        .filter(|&b| has_role(&blocks[b].variables, Role::X))
        .collect();

    // Immediate: no W in the block and no edge from a W vertex entering it.
    // Any W variable used by the block's equations lies in a block with a
    // direct edge into it (or in the overdetermined part, which feeds it).
    let blocks_immediate = x_blocks.iter().all(|&b| {
        !has_role(&blocks[b].variables, Role::W)
            && blocks[b]
                .equations
                .iter()
                .all(|&f| g.eq_edges(f).iter().all(|&(v, _)| roles.role(v) != Role::W))
    });

    let in_over = {
        let mut flags = vec![false; g.n_vars()];
        for &v in &given_y.over.variables {
            flags[v] = true;
        }
        flags
    };
    let fed_by_over = |b: usize| {
        blocks[b]
            .equations
            .iter()
            .any(|&f| g.eq_edges(f).iter().any(|&(v, _)| in_over[v]))
    };
    let over_has_w = has_role(&given_y.over.variables, Role::W);
    let blocks_transitive = x_blocks.iter().all(|&b| {
        let mut chain = given_y.ancestors(b);
        chain.push(b);
        chain
            .iter()
            .all(|&a| !has_role(&blocks[a].variables, Role::W) && !(over_has_w && fed_by_over(a)))
    });

    let blocks_ok = match rule {
        PredecessorRule::Immediate => blocks_immediate,
        PredecessorRule::Transitive => blocks_transitive,
    };
    let b_under = x_not_underdetermined && blocks_ok;

    let (f_sigma, f_consistency) = if b_over && b_under {
        let sigma: Vec<Block> = x_blocks.iter().map(|&b| blocks[b].clone()).collect();
        let mut rest: Vec<Block> = (0..blocks.len())
            .filter(|b| x_blocks.binary_search(b).is_err())
            .map(|b| blocks[b].clone())
            .collect();
        if !given_y.over.is_empty() {
            rest.push(given_y.over.clone());
        }
        (Some(sigma), Some(rest))
    } else {
        (None, None)
    };

    Ok(ExistQuantResult {
        b_over,
        b_under,
        x_not_underdetermined,
        blocks_immediate,
        blocks_transitive,
        rule,
        f_sigma,
        f_consistency,
        unused_equations: given_y.under.equations.clone(),
        full,
        given_y,
    })
}

/// Maps variable indices of a decomposition of the column subset `cols`
/// back to the full graph `g`.
fn lift(g: &WeightedBipartiteGraph, dm: DmDecomposition, cols: &[usize]) -> DmDecomposition {
    let map_block = |b: Block| {
        let mut variables: Vec<usize> = b.variables.iter().map(|&j| cols[j]).collect();
        variables.sort_unstable();
        Block {
            equations: b.equations,
            variables,
        }
    };
    let pairs: Vec<(usize, usize)> = dm
        .matching
        .pairs()
        .into_iter()
        .map(|(f, j)| (f, cols[j]))
        .collect();
    let matching = Matching::from_pairs(g, &pairs).expect("lifted pairs are edges of g");
    DmDecomposition {
        under: map_block(dm.under),
        enabled: map_block(dm.enabled),
        over: map_block(dm.over),
        fine_blocks: dm.fine_blocks.into_iter().map(map_block).collect(),
        partial_order: dm.partial_order,
        matching,
    }
}
