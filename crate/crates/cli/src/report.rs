//! JSON report envelope and encoders for analysis results.
//!
//! Objects are serialized with sorted keys; arrays follow declaration order
//! of the entities they list.

use daesa_core::{
    Block, Btf, DmDecomposition, GuardCondition, Model, OffsetSolution, VariableKind,
    WeightedBipartiteGraph,
};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::commands::Diagnostic;

pub const SCHEMA_VERSION: u32 = 1;

pub fn digest(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

pub fn envelope(
    command: &str,
    model: Option<&str>,
    text: &str,
    result: Value,
    diagnostics: &[Diagnostic],
) -> String {
    let report = json!({
        "schema": SCHEMA_VERSION,
        "tool": { "name": "daesa", "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "input": { "model": model, "sha256": digest(text) },
        "result": result,
        "diagnostics": diagnostics.iter().map(|d| json!({
            "severity": d.severity,
            "at": d.at,
            "message": d.message,
        })).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&sort_keys(report)).expect("serializable");
    s.push('\n');
    s
}

/// Rebuilds every object with keys in lexicographic order, independent of
/// how `serde_json` was configured by other crates in the build.
fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(
                entries
                    .into_iter()
                    .map(|(k, v)| (k, sort_keys(v)))
                    .collect::<Map<_, _>>(),
            )
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn eq_names(g: &WeightedBipartiteGraph, eqs: &[usize]) -> Vec<String> {
    eqs.iter().map(|&f| g.eq_name(f).to_string()).collect()
}

pub fn var_names(g: &WeightedBipartiteGraph, vars: &[usize]) -> Vec<String> {
    vars.iter().map(|&x| g.var_name(x).to_string()).collect()
}

pub fn block(g: &WeightedBipartiteGraph, b: &Block) -> Value {
    json!({
        "equations": eq_names(g, &b.equations),
        "variables": var_names(g, &b.variables),
    })
}

pub fn pairs(g: &WeightedBipartiteGraph, pairs: &[(usize, usize)]) -> Value {
    pairs
        .iter()
        .map(|&(f, x)| json!([g.eq_name(f), g.var_name(x)]))
        .collect()
}

pub fn dm(g: &WeightedBipartiteGraph, dm: &DmDecomposition) -> Value {
    json!({
        "regular": dm.is_regular(),
        "under": block(g, &dm.under),
        "enabled": block(g, &dm.enabled),
        "over": block(g, &dm.over),
        "fine_blocks": dm.fine_blocks.iter().map(|b| block(g, b)).collect::<Vec<_>>(),
        "partial_order": dm.partial_order,
        "matching": pairs(g, &dm.matching.pairs()),
    })
}

pub fn btf(g: &WeightedBipartiteGraph, btf: &Btf) -> Value {
    json!({
        "blocks": btf.blocks.iter().map(|b| block(g, b)).collect::<Vec<_>>(),
        "partial_order": btf.partial_order,
    })
}

pub fn offsets(g: &WeightedBipartiteGraph, sol: &OffsetSolution) -> Value {
    let c: Map<String, Value> = (0..g.n_eqs())
        .map(|f| (g.eq_name(f).to_string(), json!(sol.c[f])))
        .collect();
    let d: Map<String, Value> = (0..g.n_vars())
        .map(|x| (g.var_name(x).to_string(), json!(sol.d[x])))
        .collect();
    json!({
        "c": c,
        "d": d,
        "index": sol.index,
        "primal_weight": sol.primal_weight,
        "iterations": sol.iterations,
        "witness": pairs(g, &sol.witness.edges()),
    })
}

pub fn guard_text(model: &Model, guard: &GuardCondition) -> String {
    guard
        .literals()
        .iter()
        .map(|l| {
            let name = &model.guards()[l.guard];
            if l.positive {
                name.clone()
            } else {
                format!("!{name}")
            }
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

pub fn model(model: &Model) -> Value {
    json!({
        "name": model.name(),
        "time_domain": model.time_domain().keyword(),
        "guards": model.guards(),
        "variables": model.variables().iter().map(|v| json!({
            "name": v.name,
            "kind": match v.kind {
                VariableKind::Signal => "signal",
                VariableKind::GuardInput => "guard_input",
            },
        })).collect::<Vec<_>>(),
        "equations": model.equations().iter().map(|e| json!({
            "name": e.name(),
            "guard": e.guard().map(|g| guard_text(model, g)),
            "incidences": e.incidences().iter().map(|i| json!({
                "var": model.variables()[i.var].name,
                "degree": i.degree,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}
