//! Differential/difference arrays and the array-based index search.
//!
//! Row `j` of an array holds the source equations shifted `j` times. Every
//! `(variable, degree)` pair becomes a separate algebraic unknown. Roles come
//! from the leading degree `d_x` of each variable: the instance at `d_x` is of
//! interest (X), lower instances are the given past (Y) and higher ones are
//! eliminated (W). Left-limit variables are always given.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::existq::{exist_quantif_graph, ExistQuantResult, PredecessorRule, Role, RolePartition};
use crate::graph::{
    has_equation_complete_matching, is_structurally_nonsingular, WeightedBipartiteGraph,
};
use crate::model::{decorate, shift_equation, Equation, Model, VariableKind};
use crate::sigma::{find_offsets, find_offsets_nonsquare};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub var: usize,
    pub degree: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayRow {
    pub offset: u32,
    pub equations: Vec<Equation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArraySystem {
    pub rows: Vec<ArrayRow>,
    /// Base variable names of the source model.
    pub variables: Vec<String>,
    /// Unknowns of the array, sorted by variable then degree.
    pub instances: Vec<Instance>,
    pub roles: RolePartition,
    /// Leading degree of each base variable used to assign roles.
    pub leading: Vec<u32>,
}

impl ArraySystem {
    pub fn equations(&self) -> impl Iterator<Item = &Equation> {
        self.rows.iter().flat_map(|r| r.equations.iter())
    }

    pub fn instance_name(&self, i: usize) -> String {
        let inst = self.instances[i];
        decorate(&self.variables[inst.var], inst.degree)
    }

    pub fn instance_index(&self, var: usize, degree: u32) -> Option<usize> {
        self.instances.binary_search(&Instance { var, degree }).ok()
    }

    /// Algebraic incidence graph over the instances.
    pub fn graph(&self) -> WeightedBipartiteGraph {
        let eqs: Vec<&Equation> = self.equations().collect();
        let edges: Vec<(usize, usize, u32)> = eqs
            .iter()
            .enumerate()
            .flat_map(|(f, eq)| {
                eq.incidences().iter().map(move |inc| {
                    let i = self
                        .instance_index(inc.var, inc.degree)
                        .expect("every occurring instance is registered");
                    (f, i, 0)
                })
            })
            .collect();
        WeightedBipartiteGraph::new(
            eqs.iter().map(|e| e.name()).collect(),
            (0..self.instances.len())
                .map(|i| self.instance_name(i))
                .collect(),
            edges,
        )
        .expect("indices in range")
    }

    pub fn analyze(&self, rule: PredecessorRule) -> Result<ExistQuantResult> {
        exist_quantif_graph(&self.graph(), &self.roles, rule)
    }
}

/// Leading degrees used for array roles: the Σ-method variable offsets when
/// they exist (square or non-square), otherwise the largest degree present.
pub fn leading_degrees(model: &Model) -> Vec<u32> {
    let g = WeightedBipartiteGraph::from_model(model);
    if is_structurally_nonsingular(&g) {
        if let Ok(sol) = find_offsets(&g) {
            return sol.d;
        }
    } else if g.n_vars() >= g.n_eqs() && has_equation_complete_matching(&g) {
        if let Ok((sol, _)) = find_offsets_nonsquare(&g) {
            return sol.d;
        }
    }
    model.max_degrees()
}

pub fn build_array(model: &Model, k: u32) -> Result<ArraySystem> {
    build_array_with(model, k, &leading_degrees(model))
}

pub fn build_array_with(model: &Model, k: u32, leading: &[u32]) -> Result<ArraySystem> {
    let cascade = vec![model.clone(); k as usize + 1];
    build_timevarying_array_with(&cascade, leading)
}

/// Array whose row `j` is the system in force at instant `j`, shifted `j`
/// times. Roles are taken relative to the first model.
pub fn build_timevarying_array(models: &[Model]) -> Result<ArraySystem> {
    let first = models
        .first()
        .ok_or_else(|| Error::ContractViolation("empty cascade".into()))?;
    build_timevarying_array_with(models, &leading_degrees(first))
}

pub fn build_timevarying_array_with(models: &[Model], leading: &[u32]) -> Result<ArraySystem> {
    let first = models
        .first()
        .ok_or_else(|| Error::ContractViolation("empty cascade".into()))?;
    for m in models {
        if m.variables() != first.variables() {
            return Err(Error::InconsistentVariableUniverse);
        }
        if !m.is_guard_free() {
            return Err(Error::ContractViolation(
                "arrays are built from single-mode models".into(),
            ));
        }
    }
    if leading.len() != first.variables().len() {
        return Err(Error::ContractViolation(
            "one leading degree per variable expected".into(),
        ));
    }
    let rows: Vec<ArrayRow> = models
        .iter()
        .enumerate()
        .map(|(j, m)| ArrayRow {
            offset: j as u32,
            equations: m
                .equations()
                .iter()
                .map(|e| shift_equation(e, j as u32))
                .collect(),
        })
        .collect();

    let mut set: BTreeSet<Instance> = rows
        .iter()
        .flat_map(|r| r.equations.iter())
        .flat_map(|e| e.incidences().iter())
        .map(|inc| Instance {
            var: inc.var,
            degree: inc.degree,
        })
        .collect();
    let kinds: Vec<VariableKind> = first.variables().iter().map(|v| v.kind).collect();
    for (var, &degree) in leading.iter().enumerate() {
        if kinds[var] == VariableKind::Signal {
            set.insert(Instance { var, degree });
        }
    }
    let instances: Vec<Instance> = set.into_iter().collect();
    let roles = RolePartition::from_roles(
        instances
            .iter()
            .map(|inst| {
                if kinds[inst.var] == VariableKind::GuardInput {
                    Role::Y
                } else {
                    match inst.degree.cmp(&leading[inst.var]) {
                        std::cmp::Ordering::Less => Role::Y,
                        std::cmp::Ordering::Equal => Role::X,
                        std::cmp::Ordering::Greater => Role::W,
                    }
                }
            })
            .collect(),
    );
    Ok(ArraySystem {
        rows,
        variables: first.variables().iter().map(|v| v.name.clone()).collect(),
        instances,
        roles,
        leading: leading.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct ArraySearch {
    pub k: u32,
    pub array: ArraySystem,
    pub result: ExistQuantResult,
}

/// Whether the array analysis succeeded and determines every X instance.
pub fn array_determines(array: &ArraySystem, result: &ExistQuantResult) -> bool {
    result.b_over && result.b_under && result.determines_all_x(&array.roles)
}

/// Smallest `k <= k_max` whose array determines all leading instances.
/// `k_max` defaults to `|F| (maxd + 1)`, which bounds the Σ index.
pub fn array_index_search(model: &Model, k_max: Option<u32>) -> Result<ArraySearch> {
    if !model.is_guard_free() {
        return Err(Error::ContractViolation(
            "arrays are built from single-mode models".into(),
        ));
    }
    let k_max = k_max.unwrap_or_else(|| {
        let maxd = model.max_degrees().into_iter().max().unwrap_or(0);
        model.equations().len() as u32 * (maxd + 1)
    });
    let leading = leading_degrees(model);
    for k in 0..=k_max {
        let array = build_array_with(model, k, &leading)?;
        let result = array.analyze(PredecessorRule::default())?;
        if array_determines(&array, &result) {
            return Ok(ArraySearch { k, array, result });
        }
    }
    Err(Error::NotDeterminedWithinBound { k_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeDomain;
    use crate::parser::parse;

    fn clutch_engaged() -> Model {
        Model::builder("engaged", TimeDomain::Continuous)
            .signals(["w1", "w2", "t1", "t2"])
            .eq("e1", &[("w1", 1), ("w1", 0), ("t1", 0)])
            .eq("e2", &[("w2", 1), ("w2", 0), ("t2", 0)])
            .eq("e3", &[("w1", 0), ("w2", 0)])
            .eq("e4", &[("t1", 0), ("t2", 0)])
            .build()
            .unwrap()
    }

    fn names_with(a: &ArraySystem, role: Role) -> Vec<String> {
        a.roles
            .vars(role)
            .into_iter()
            .map(|i| a.instance_name(i))
            .collect()
    }

    #[test]
    fn k0_is_the_source_system() {
        let m = clutch_engaged();
        let a = build_array(&m, 0).unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].equations, m.equations());
        assert!(names_with(&a, Role::W).is_empty());
        assert_eq!(names_with(&a, Role::X), ["w1'", "w2'", "t1", "t2"]);
        assert_eq!(names_with(&a, Role::Y), ["w1", "w2"]);
    }

    #[test]
    fn single_equation_shifted_once() {
        let m = Model::builder("e3", TimeDomain::Continuous)
            .signals(["w1", "w2"])
            .eq("e3", &[("w1", 0), ("w2", 0)])
            .build()
            .unwrap();
        let a = build_array(&m, 1).unwrap();
        let names: Vec<String> = a.equations().map(Equation::name).collect();
        assert_eq!(names, ["e3", "e3'"]);
        assert_eq!(names_with(&a, Role::X), ["w1", "w2"]);
        assert_eq!(names_with(&a, Role::W), ["w1'", "w2'"]);
    }

    #[test]
    fn row_shift_coherence() {
        let m = clutch_engaged();
        let a = build_array(&m, 2).unwrap();
        for row in &a.rows {
            for (e, src) in row.equations.iter().zip(m.equations()) {
                for (i, s) in e.incidences().iter().zip(src.incidences()) {
                    assert_eq!((i.var, i.degree), (s.var, s.degree + row.offset));
                }
            }
        }
    }

    #[test]
    fn clutch_engaged_search() {
        let m = clutch_engaged();
        let k0 = build_array(&m, 0).unwrap();
        let r0 = k0.analyze(PredecessorRule::Immediate).unwrap();
        assert!(!array_determines(&k0, &r0));

        let found = array_index_search(&m, None).unwrap();
        assert_eq!(found.k, 1);
        let g = found.array.graph();
        let eq_names = |blocks: &[crate::graph::Block]| -> Vec<String> {
            let mut v: Vec<String> = blocks
                .iter()
                .flat_map(|b| b.equations.iter().map(|&f| g.eq_name(f).to_string()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(
            eq_names(found.result.f_sigma.as_ref().unwrap()),
            ["e1", "e2", "e3'", "e4"]
        );
        assert_eq!(
            eq_names(found.result.f_consistency.as_ref().unwrap()),
            ["e3"]
        );
    }

    #[test]
    fn index_zero_systems() {
        let ode = parse("continuous m; var x, y; a: der(x) = x*y; b: der(y) = x;").unwrap();
        assert_eq!(array_index_search(&ode, None).unwrap().k, 0);
        let alg = parse("continuous m; var x, y; a: x + y = 1; b: x - y = 0;").unwrap();
        assert_eq!(array_index_search(&alg, None).unwrap().k, 0);
    }

    #[test]
    fn index_two_chain() {
        let m =
            parse("continuous m; var x1, x2, x3; f1: der(x1) = x2; f2: der(x2) = x3; f3: x1 = 0;")
                .unwrap();
        assert_eq!(leading_degrees(&m), [2, 1, 0]);
        assert_eq!(array_index_search(&m, None).unwrap().k, 2);
    }

    #[test]
    fn bound_reported() {
        let m =
            parse("continuous m; var x1, x2, x3; f1: der(x1) = x2; f2: der(x2) = x3; f3: x1 = 0;")
                .unwrap();
        assert_eq!(
            array_index_search(&m, Some(1)).unwrap_err(),
            Error::NotDeterminedWithinBound { k_max: 1 }
        );
    }

    #[test]
    fn timevarying_specialisations() {
        let m = clutch_engaged();
        let tv = build_timevarying_array(&[m.clone(), m.clone(), m.clone()]).unwrap();
        assert_eq!(tv, build_array(&m, 2).unwrap());
        let single = build_timevarying_array(std::slice::from_ref(&m)).unwrap();
        assert_eq!(single.rows[0].equations, m.equations());
    }

    #[test]
    fn timevarying_rejects_other_universe() {
        let other = parse("continuous m; var a; e: a = 0;").unwrap();
        assert_eq!(
            build_timevarying_array(&[clutch_engaged(), other]).unwrap_err(),
            Error::InconsistentVariableUniverse
        );
    }
}
