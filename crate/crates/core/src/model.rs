//! Intermediate representation of DAE/dAE systems.
//!
//! Only structure is kept: which variables occur in which equation and at
//! which differentiation (or shift) degree, plus the guard literals that
//! enable an equation. Expression bodies are discarded by the parser.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

impl TimeDomain {
    pub fn keyword(self) -> &'static str {
        match self {
            TimeDomain::Continuous => "continuous",
            TimeDomain::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableKind {
    Signal,
    /// Left-limit value read by guards (`pre(x)` in source, named `x_prev`).
    GuardInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
    pub index: usize,
}

/// Occurrence of a variable in an equation at its maximal degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Incidence {
    pub var: usize,
    pub degree: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub guard: usize,
    pub positive: bool,
}

/// Conjunction of guard literals, one literal per guard at most.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GuardCondition {
    literals: Vec<Literal>,
}

impl GuardCondition {
    /// Builds a condition, merging repeated literals. Returns `None` when the
    /// same guard appears with both polarities.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Option<Self> {
        let mut by_guard: BTreeMap<usize, bool> = BTreeMap::new();
        for lit in literals {
            if let Some(&prev) = by_guard.get(&lit.guard) {
                if prev != lit.positive {
                    return None;
                }
            }
            by_guard.insert(lit.guard, lit.positive);
        }
        Some(GuardCondition {
            literals: by_guard
                .into_iter()
                .map(|(guard, positive)| Literal { guard, positive })
                .collect(),
        })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn conjoin(&self, other: &GuardCondition) -> Option<GuardCondition> {
        GuardCondition::new(self.literals.iter().chain(&other.literals).copied())
    }

    pub fn is_satisfied(&self, values: &[bool]) -> bool {
        self.literals
            .iter()
            .all(|lit| values[lit.guard] == lit.positive)
    }
}

#[derive(Debug, Clone)]
pub struct Equation {
    base: String,
    shifts: u32,
    incidences: Vec<Incidence>,
    guard: Option<GuardCondition>,
    span: Span,
}

/// Structural equality: the source span is not compared.
impl PartialEq for Equation {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
            && self.shifts == other.shifts
            && self.incidences == other.incidences
            && self.guard == other.guard
    }
}

impl Eq for Equation {}

impl Equation {
    /// Duplicate occurrences of a variable collapse to the maximal degree.
    pub fn new(
        name: impl Into<String>,
        occurrences: impl IntoIterator<Item = (usize, u32)>,
    ) -> Self {
        let mut max_degree: BTreeMap<usize, u32> = BTreeMap::new();
        for (var, degree) in occurrences {
            let entry = max_degree.entry(var).or_insert(degree);
            *entry = (*entry).max(degree);
        }
        Equation {
            base: name.into(),
            shifts: 0,
            incidences: max_degree
                .into_iter()
                .map(|(var, degree)| Incidence { var, degree })
                .collect(),
            guard: None,
            span: Span::default(),
        }
    }

    pub fn with_guard(mut self, guard: Option<GuardCondition>) -> Self {
        self.guard = guard.filter(|g| !g.literals.is_empty());
        self
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }

    /// Display name: the base label decorated with one prime per shift.
    pub fn name(&self) -> String {
        decorate(&self.base, self.shifts)
    }

    pub fn base_name(&self) -> &str {
        &self.base
    }

    /// Number of times this equation was differentiated or shifted.
    pub fn shifts(&self) -> u32 {
        self.shifts
    }

    pub fn incidences(&self) -> &[Incidence] {
        &self.incidences
    }

    pub fn degree_of(&self, var: usize) -> Option<u32> {
        self.incidences
            .binary_search_by_key(&var, |inc| inc.var)
            .ok()
            .map(|i| self.incidences[i].degree)
    }

    pub fn guard(&self) -> Option<&GuardCondition> {
        self.guard.as_ref()
    }

    pub fn span(&self) -> Span {
        self.span
    }
}

pub(crate) fn decorate(base: &str, shifts: u32) -> String {
    match shifts {
        0 => base.to_string(),
        1..=3 => format!("{base}{}", "'".repeat(shifts as usize)),
        k => format!("{base}^({k})"),
    }
}

/// A system of guarded equations over an ordered set of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    name: String,
    time_domain: TimeDomain,
    variables: Vec<Variable>,
    equations: Vec<Equation>,
    guards: Vec<String>,
}

impl Model {
    pub fn builder(name: impl Into<String>, time_domain: TimeDomain) -> ModelBuilder {
        ModelBuilder {
            name: name.into(),
            time_domain,
            variables: Vec::new(),
            equations: Vec::new(),
            guards: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn guards(&self) -> &[String] {
        &self.guards
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn eq_index(&self, name: &str) -> Option<usize> {
        self.equations.iter().position(|e| e.name() == name)
    }

    pub fn guard_index(&self, name: &str) -> Option<usize> {
        self.guards.iter().position(|g| g == name)
    }

    pub fn is_guard_free(&self) -> bool {
        self.equations.iter().all(|e| e.guard.is_none())
    }

    /// Largest degree of each variable over all equations (0 if unused).
    pub fn max_degrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.variables.len()];
        for eq in &self.equations {
            for inc in &eq.incidences {
                out[inc.var] = out[inc.var].max(inc.degree);
            }
        }
        out
    }

    /// Copy of this model carrying a different equation list.
    pub fn with_equations(&self, equations: Vec<Equation>) -> Result<Model> {
        let mut builder = Model::builder(self.name.clone(), self.time_domain);
        builder.variables = self.variables.clone();
        builder.guards = self.guards.clone();
        builder.equations = equations;
        builder.build()
    }

    /// Same equations without guards and with an empty guard list.
    fn strip_guards(&self, equations: Vec<Equation>) -> Model {
        Model {
            name: self.name.clone(),
            time_domain: self.time_domain,
            variables: self.variables.clone(),
            equations: equations
                .into_iter()
                .map(|e| Equation { guard: None, ..e })
                .collect(),
            guards: Vec::new(),
        }
    }
}

pub struct ModelBuilder {
    name: String,
    time_domain: TimeDomain,
    variables: Vec<Variable>,
    equations: Vec<Equation>,
    guards: Vec<String>,
}

impl ModelBuilder {
    pub fn variable(mut self, name: impl Into<String>, kind: VariableKind) -> Self {
        let index = self.variables.len();
        self.variables.push(Variable {
            name: name.into(),
            kind,
            index,
        });
        self
    }

    pub fn signal(self, name: impl Into<String>) -> Self {
        self.variable(name, VariableKind::Signal)
    }

    pub fn signals<S: Into<String>>(self, names: impl IntoIterator<Item = S>) -> Self {
        names.into_iter().fold(self, |b, n| b.signal(n))
    }

    pub fn guard(mut self, name: impl Into<String>) -> Self {
        self.guards.push(name.into());
        self
    }

    pub fn equation(mut self, eq: Equation) -> Self {
        self.equations.push(eq);
        self
    }

    /// Convenience for tests and generated systems: `(var name, degree)` pairs.
    pub fn eq(self, name: &str, occurrences: &[(&str, u32)]) -> Self {
        let resolved: Vec<(usize, u32)> = occurrences
            .iter()
            .map(|(v, d)| {
                let idx = self
                    .variables
                    .iter()
                    .position(|var| var.name == *v)
                    .unwrap_or_else(|| panic!("undeclared variable `{v}`"));
                (idx, *d)
            })
            .collect();
        self.equation(Equation::new(name, resolved))
    }

    pub fn build(self) -> Result<Model> {
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::DuplicateName(v.name.clone()));
            }
        }
        for g in &self.guards {
            if !seen.insert(g.as_str()) {
                return Err(Error::DuplicateName(g.clone()));
            }
        }
        let mut eq_names = HashSet::new();
        for eq in &self.equations {
            if !eq_names.insert(eq.name()) {
                return Err(Error::DuplicateName(eq.name()));
            }
            if let Some(inc) = eq.incidences.iter().find(|i| i.var >= self.variables.len()) {
                return Err(Error::ContractViolation(format!(
                    "equation `{}` references variable #{}",
                    eq.name(),
                    inc.var
                )));
            }
            if let Some(guard) = &eq.guard {
                if let Some(lit) = guard.literals.iter().find(|l| l.guard >= self.guards.len()) {
                    return Err(Error::UnknownGuard(format!("#{}", lit.guard)));
                }
            }
        }
        let variables = self
            .variables
            .into_iter()
            .enumerate()
            .map(|(index, v)| Variable { index, ..v })
            .collect();
        Ok(Model {
            name: self.name,
            time_domain: self.time_domain,
            variables,
            equations: self.equations,
            guards: self.guards,
        })
    }
}

/// Total assignment of guard values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Mode {
    values: BTreeMap<String, bool>,
}

impl Mode {
    pub fn new<S: Into<String>>(values: impl IntoIterator<Item = (S, bool)>) -> Self {
        Mode {
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, guard: &str) -> Option<bool> {
        self.values.get(guard).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Guard values in the model's declaration order.
    pub fn values_for(&self, model: &Model) -> Result<Vec<bool>> {
        if let Some(unknown) = self.values.keys().find(|g| model.guard_index(g).is_none()) {
            return Err(Error::UnknownGuard(unknown.clone()));
        }
        model
            .guards
            .iter()
            .map(|g| self.get(g).ok_or_else(|| Error::UnassignedGuard(g.clone())))
            .collect()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    /// Parses `g=true,h=false`; an empty string is the empty mode.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let mut values = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected guard=value, got `{part}`"))?;
            let value = match value.trim() {
                "true" | "T" | "1" => true,
                "false" | "F" | "0" => false,
                other => return Err(format!("invalid guard value `{other}`")),
            };
            if values.insert(name.trim().to_string(), value).is_some() {
                return Err(format!("guard `{}` assigned twice", name.trim()));
            }
        }
        Ok(Mode { values })
    }
}

/// Keeps the equations whose guard holds in `mode` and drops all guards.
pub fn restrict_to_mode(model: &Model, mode: &Mode) -> Result<Model> {
    let values = mode.values_for(model)?;
    let active = model
        .equations
        .iter()
        .filter(|eq| eq.guard.as_ref().is_none_or(|g| g.is_satisfied(&values)))
        .cloned()
        .collect();
    Ok(model.strip_guards(active))
}

/// Structural image of the forward Euler scheme: degree-k derivatives become
/// k-fold forward shifts. The step is symbolic and never materialized.
pub fn euler_map(model: &Model) -> Model {
    Model {
        time_domain: TimeDomain::Discrete,
        ..model.clone()
    }
}

/// Differentiates (or shifts) an equation `k` times.
pub fn shift_equation(eq: &Equation, k: u32) -> Equation {
    Equation {
        base: eq.base.clone(),
        shifts: eq.shifts + k,
        incidences: eq
            .incidences
            .iter()
            .map(|inc| Incidence {
                var: inc.var,
                degree: inc.degree + k,
            })
            .collect(),
        guard: eq.guard.clone(),
        span: eq.span,
    }
}
