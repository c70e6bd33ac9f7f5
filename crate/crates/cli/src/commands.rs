//! Command implementations. Each produces a JSON result plus its text and
//! dot renderings; `run` picks the requested one.

use std::fmt::Write as _;

use daesa_core::multimode::analyze_mode;
use daesa_core::parser::Severity;
use daesa_core::{
    array_index_search, direct_and_scc, dm_decompose, enumerate_modes, exist_quantif_eqn_with,
    find_offsets, find_offsets_nonsquare, index_reduce_with, is_structurally_nonsingular,
    leading_graph, max_cardinality_matching, pantelides_offsets, parse_with_diagnostics,
    resolve_conflicts, restrict_to_mode, to_source, unfold_mode_change, Block, DmDecomposition,
    Error, Instant, Mode, ModeAnalysis, ModeChange, Model, OffsetSolution, PredecessorRule, Role,
    RolePartition, WeightedBipartiteGraph,
};
use serde_json::{json, Value};

use crate::{dot, report, Failure, Format};

pub(crate) enum Request {
    Parse,
    Dm,
    Btf,
    Offsets {
        nonsquare: bool,
    },
    Pantelides,
    Existq {
        roles: String,
        rule: PredecessorRule,
    },
    Array {
        k_max: Option<u32>,
    },
    Modechange {
        from: Mode,
        to: Mode,
    },
    Modes,
}

impl Request {
    fn name(&self) -> &'static str {
        match self {
            Request::Parse => "parse",
            Request::Dm => "dm",
            Request::Btf => "btf",
            Request::Offsets { .. } => "offsets",
            Request::Pantelides => "pantelides",
            Request::Existq { .. } => "existq",
            Request::Array { .. } => "array",
            Request::Modechange { .. } => "modechange",
            Request::Modes => "modes",
        }
    }
}

pub(crate) struct Diagnostic {
    pub severity: &'static str,
    pub at: String,
    pub message: String,
}

struct Outcome {
    result: Value,
    text: String,
    dot: Option<String>,
}

pub(crate) fn run(
    path: &str,
    text: &str,
    mode: Option<&Mode>,
    request: Request,
    format: Format,
) -> Result<String, Failure> {
    let source = parse_with_diagnostics(text).map_err(|e| Failure::Usage(format!("{path}:{e}")))?;
    let diagnostics: Vec<Diagnostic> = source
        .diagnostics
        .iter()
        .map(|d| Diagnostic {
            severity: match d.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            },
            at: d.span.to_string(),
            message: d.message.clone(),
        })
        .collect();
    let model = &source.model;
    let command = request.name();
    let outcome = match request {
        Request::Parse => parse_cmd(model)?,
        Request::Dm => dm_cmd(&select(model, mode)?),
        Request::Btf => btf_cmd(&select(model, mode)?)?,
        Request::Offsets { nonsquare } => offsets_cmd(&select(model, mode)?, nonsquare)?,
        Request::Pantelides => pantelides_cmd(&select(model, mode)?)?,
        Request::Existq { roles, rule } => existq_cmd(&select(model, mode)?, &roles, rule)?,
        Request::Array { k_max } => array_cmd(&select(model, mode)?, k_max)?,
        Request::Modechange { from, to } => modechange_cmd(model, from, to)?,
        Request::Modes => modes_cmd(model)?,
    };
    match format {
        Format::Json => Ok(report::envelope(
            command,
            Some(model.name()),
            text,
            outcome.result,
            &diagnostics,
        )),
        Format::Text => {
            let mut s = format!("{command}: {} ({})\n", model.name(), path);
            for d in &diagnostics {
                let _ = writeln!(s, "{}: {}: {}", d.severity, d.at, d.message);
            }
            s.push_str(&outcome.text);
            Ok(s)
        }
        Format::Dot => outcome.dot.ok_or_else(|| {
            Failure::Usage(format!(
                "--format dot is available for parse, dm and btf, not {command}"
            ))
        }),
    }
}

/// The single-mode system a command works on.
fn select(model: &Model, mode: Option<&Mode>) -> Result<Model, Failure> {
    match mode {
        Some(mode) => Ok(restrict_to_mode(model, mode)?),
        None if model.is_guard_free() => Ok(model.clone()),
        None => Err(Failure::Usage(format!(
            "model `{}` has guards ({}); select a mode with --mode",
            model.name(),
            model.guards().join(", ")
        ))),
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "(none)".into()
    } else {
        items.join(", ")
    }
}

fn block_line(g: &WeightedBipartiteGraph, b: &Block) -> String {
    format!(
        "{{{}}} / {{{}}}",
        report::eq_names(g, &b.equations).join(", "),
        report::var_names(g, &b.variables).join(", ")
    )
}

fn dm_text(g: &WeightedBipartiteGraph, dm: &DmDecomposition) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "verdict: {}",
        if dm.is_regular() {
            "structurally nonsingular"
        } else {
            "structurally singular"
        }
    );
    let _ = writeln!(s, "underdetermined: {}", block_line(g, &dm.under));
    let _ = writeln!(s, "enabled: {}", block_line(g, &dm.enabled));
    for (i, b) in dm.fine_blocks.iter().enumerate() {
        let _ = writeln!(s, "  block {}: {}", i + 1, block_line(g, b));
    }
    let _ = writeln!(s, "overdetermined: {}", block_line(g, &dm.over));
    s
}

fn dm_dot(title: &str, g: &WeightedBipartiteGraph, dm: &DmDecomposition) -> String {
    let mut clusters = vec![("underdetermined".to_string(), &dm.under)];
    for (i, b) in dm.fine_blocks.iter().enumerate() {
        clusters.push((format!("block {}", i + 1), b));
    }
    clusters.push(("overdetermined".to_string(), &dm.over));
    dot::bipartite(title, g, &dm.matching.pairs(), &clusters)
}

fn parse_cmd(model: &Model) -> Result<Outcome, Failure> {
    let g = WeightedBipartiteGraph::from_model(model);
    let modes = enumerate_modes(model).ok().map(|m| m.len());
    let mut result = report::model(model);
    result["modes"] = json!(modes);
    Ok(Outcome {
        result,
        text: to_source(model),
        dot: Some(dot::bipartite(model.name(), &g, &[], &[])),
    })
}

fn dm_cmd(model: &Model) -> Outcome {
    let g = WeightedBipartiteGraph::from_model(model);
    let dm = dm_decompose(&g);
    Outcome {
        result: report::dm(&g, &dm),
        text: dm_text(&g, &dm),
        dot: Some(dm_dot(model.name(), &g, &dm)),
    }
}

fn btf_cmd(model: &Model) -> Result<Outcome, Failure> {
    let g = WeightedBipartiteGraph::from_model(model);
    if !is_structurally_nonsingular(&g) {
        let dm = dm_decompose(&g);
        return Ok(Outcome {
            result: json!({ "verdict": "singular", "dm": report::dm(&g, &dm) }),
            text: dm_text(&g, &dm),
            dot: Some(dm_dot(model.name(), &g, &dm)),
        });
    }
    let m = max_cardinality_matching(&g);
    let btf = direct_and_scc(&g, &m)?;
    let mut text = String::from("verdict: structurally nonsingular\n");
    for (i, b) in btf.blocks.iter().enumerate() {
        let _ = writeln!(text, "block {}: {}", i + 1, block_line(&g, b));
    }
    for &(a, b) in &btf.partial_order {
        let _ = writeln!(text, "block {} -> block {}", a + 1, b + 1);
    }
    let clusters: Vec<(String, &Block)> = btf
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (format!("block {}", i + 1), b))
        .collect();
    let mut result = report::btf(&g, &btf);
    result["verdict"] = json!("regular");
    result["matching"] = report::pairs(&g, &m.pairs());
    Ok(Outcome {
        result,
        text,
        dot: Some(dot::bipartite(model.name(), &g, &m.pairs(), &clusters)),
    })
}

/// Certificates are rechecked before anything is reported.
fn checked(g: &WeightedBipartiteGraph, sol: OffsetSolution) -> Result<OffsetSolution, Failure> {
    sol.verify(g)?;
    Ok(sol)
}

fn offsets_text(g: &WeightedBipartiteGraph, sol: &OffsetSolution) -> String {
    let mut s = format!("index: {}\n", sol.index);
    for f in 0..g.n_eqs() {
        let _ = writeln!(s, "c[{}] = {}", g.eq_name(f), sol.c[f]);
    }
    for x in 0..g.n_vars() {
        let _ = writeln!(s, "d[{}] = {}", g.var_name(x), sol.d[x]);
    }
    s
}

fn singular(g: &WeightedBipartiteGraph, reason: &Error) -> Outcome {
    let dm = dm_decompose(g);
    Outcome {
        result: json!({
            "verdict": "singular",
            "reason": reason.to_string(),
            "dm": report::dm(g, &dm),
        }),
        text: format!("{reason}\n{}", dm_text(g, &dm)),
        dot: None,
    }
}

fn offsets_cmd(model: &Model, nonsquare: bool) -> Result<Outcome, Failure> {
    let g = WeightedBipartiteGraph::from_model(model);
    if nonsquare {
        return match find_offsets_nonsquare(&g) {
            Ok((sol, dm)) => {
                let sol = checked(&g, sol)?;
                let lg = leading_graph(&g, &sol);
                let mut result = report::offsets(&g, &sol);
                result["verdict"] = json!("nonsquare");
                result["leading_dm"] = report::dm(&lg, &dm);
                let text = format!("{}{}", offsets_text(&g, &sol), dm_text(&lg, &dm));
                Ok(Outcome {
                    result,
                    text,
                    dot: None,
                })
            }
            Err(e @ (Error::NoEquationCompleteMatching | Error::IsolatedVariable(_))) => {
                Ok(singular(&g, &e))
            }
            Err(e) => Err(e.into()),
        };
    }
    let sol = match find_offsets(&g) {
        Ok(sol) => checked(&g, sol)?,
        Err(e @ Error::NoCompleteMatching) => return Ok(singular(&g, &e)),
        Err(e) => return Err(e.into()),
    };
    let reduction = index_reduce_with(model, sol);
    let latent: Vec<String> = reduction
        .sigma_equations
        .iter()
        .filter(|e| e.shifts() > 0)
        .map(|e| e.name())
        .collect();
    let consistency: Vec<String> = reduction
        .consistency_equations
        .iter()
        .map(|e| e.name())
        .collect();
    let mut result = report::offsets(&g, &reduction.offsets);
    result["verdict"] = json!("regular");
    result["latent"] = json!(latent);
    result["consistency"] = json!(consistency);
    let mut text = offsets_text(&g, &reduction.offsets);
    let _ = writeln!(text, "latent: {}", list(&latent));
    let _ = writeln!(text, "consistency: {}", list(&consistency));
    Ok(Outcome {
        result,
        text,
        dot: None,
    })
}

fn pantelides_cmd(model: &Model) -> Result<Outcome, Failure> {
    let g = WeightedBipartiteGraph::from_model(model);
    let p = match pantelides_offsets(&g) {
        Ok(p) => p,
        Err(e @ Error::NoEquationCompleteMatching) => return Ok(singular(&g, &e)),
        Err(e) => return Err(e.into()),
    };
    let c: serde_json::Map<String, Value> = (0..g.n_eqs())
        .map(|f| (g.eq_name(f).to_string(), json!(p.c[f])))
        .collect();
    let mss: Vec<Vec<String>> = p.mss_sets.iter().map(|s| report::eq_names(&g, s)).collect();
    let mut text = String::new();
    for f in 0..g.n_eqs() {
        let _ = writeln!(text, "c[{}] = {}", g.eq_name(f), p.c[f]);
    }
    for (i, s) in mss.iter().enumerate() {
        let _ = writeln!(text, "mss {}: {{{}}}", i + 1, s.join(", "));
    }
    Ok(Outcome {
        result: json!({
            "verdict": "regular",
            "c": c,
            "mss": mss,
            "leading_neighbourhoods": p.leading_neighbourhoods,
        }),
        text,
        dot: None,
    })
}

/// Parses `x=a,b;w=c;y=d`. Roles may be omitted when empty.
fn parse_roles(model: &Model, text: &str) -> Result<RolePartition, Failure> {
    let mut sets: [Vec<&str>; 3] = Default::default();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (role, names) = part
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--roles: expected role=names, got `{part}`")))?;
        let slot = match role.trim() {
            "x" | "X" => 0,
            "w" | "W" => 1,
            "y" | "Y" => 2,
            other => return Err(Failure::Usage(format!("--roles: unknown role `{other}`"))),
        };
        sets[slot].extend(names.split(',').map(str::trim).filter(|n| !n.is_empty()));
    }
    Ok(RolePartition::from_names(
        model, &sets[0], &sets[1], &sets[2],
    )?)
}

fn existq_cmd(model: &Model, roles: &str, rule: PredecessorRule) -> Result<Outcome, Failure> {
    let roles = parse_roles(model, roles)?;
    let g = WeightedBipartiteGraph::from_model(model);
    let r = exist_quantif_eqn_with(model, &roles, rule)?;
    let blocks = |bs: &Option<Vec<Block>>| -> Value {
        match bs {
            Some(bs) => bs.iter().map(|b| report::block(&g, b)).collect(),
            None => Value::Null,
        }
    };
    let role_names = |role: Role| report::var_names(&g, &roles.vars(role));
    let mut text = format!(
        "over: {}\nunder: {}\nx not underdetermined: {}\nblocks (immediate): {}\nblocks (transitive): {}\n",
        r.b_over, r.b_under, r.x_not_underdetermined, r.blocks_immediate, r.blocks_transitive
    );
    if let Some(bs) = &r.f_sigma {
        for b in bs {
            let _ = writeln!(text, "sigma block: {}", block_line(&g, b));
        }
    }
    if let Some(bs) = &r.f_consistency {
        for b in bs {
            let _ = writeln!(text, "consistency block: {}", block_line(&g, b));
        }
    }
    let unused = report::eq_names(&g, &r.unused_equations);
    let _ = writeln!(text, "unused: {}", list(&unused));
    Ok(Outcome {
        result: json!({
            "roles": { "x": role_names(Role::X), "w": role_names(Role::W), "y": role_names(Role::Y) },
            "rule": match r.rule {
                PredecessorRule::Immediate => "immediate",
                PredecessorRule::Transitive => "transitive",
            },
            "b_over": r.b_over,
            "b_under": r.b_under,
            "x_not_underdetermined": r.x_not_underdetermined,
            "blocks_immediate": r.blocks_immediate,
            "blocks_transitive": r.blocks_transitive,
            "rules_diverge": r.rules_diverge(),
            "determines_all_x": r.determines_all_x(&roles),
            "f_sigma": blocks(&r.f_sigma),
            "f_consistency": blocks(&r.f_consistency),
            "unused": unused,
            "dm": report::dm(&g, &r.full),
        }),
        text,
        dot: None,
    })
}

fn array_cmd(model: &Model, k_max: Option<u32>) -> Result<Outcome, Failure> {
    let search = match array_index_search(model, k_max) {
        Ok(s) => s,
        Err(e @ Error::NotDeterminedWithinBound { k_max }) => {
            return Ok(Outcome {
                result: json!({ "verdict": "not_determined", "k_max": k_max }),
                text: format!("{e}\n"),
                dot: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let g = search.array.graph();
    let roles = &search.array.roles;
    let role_names = |role: Role| report::var_names(&g, &roles.vars(role));
    let blocks = |bs: &Option<Vec<Block>>| -> Vec<Value> {
        bs.iter().flatten().map(|b| report::block(&g, b)).collect()
    };
    let rows: Vec<Value> = search
        .array
        .rows
        .iter()
        .map(|r| json!({ "offset": r.offset, "equations": r.equations.iter().map(|e| e.name()).collect::<Vec<_>>() }))
        .collect();
    let mut text = format!("k: {}\n", search.k);
    let _ = writeln!(text, "leading: {}", list(&role_names(Role::X)));
    for b in search.result.f_sigma.iter().flatten() {
        let _ = writeln!(text, "sigma block: {}", block_line(&g, b));
    }
    for b in search.result.f_consistency.iter().flatten() {
        let _ = writeln!(text, "consistency block: {}", block_line(&g, b));
    }
    Ok(Outcome {
        result: json!({
            "verdict": "determined",
            "k": search.k,
            "rows": rows,
            "roles": { "x": role_names(Role::X), "w": role_names(Role::W), "y": role_names(Role::Y) },
            "f_sigma": blocks(&search.result.f_sigma),
            "f_consistency": blocks(&search.result.f_consistency),
            "unused": report::eq_names(&g, &search.result.unused_equations),
        }),
        text,
        dot: None,
    })
}

fn modechange_cmd(model: &Model, from: Mode, to: Mode) -> Result<Outcome, Failure> {
    let change = ModeChange::new(from, to)?;
    let u = unfold_mode_change(model, &change)?;
    let inst =
        |is: &[usize]| -> Vec<String> { is.iter().map(|&i| u.instances[i].name.clone()).collect() };
    let eqs =
        |fs: &[usize]| -> Vec<String> { fs.iter().map(|&f| u.equations[f].name.clone()).collect() };
    let instant = |i: Instant| match i {
        Instant::Previous => "previous",
        Instant::Current => "current",
    };
    let unfolded = json!({
        "equations": u.equations.iter().map(|e| json!({
            "name": e.name,
            "instant": instant(e.instant),
            "consistency": e.consistency,
            "occurrences": inst(&e.occurrences),
        })).collect::<Vec<_>>(),
        "dependent": inst(&u.dependent),
    });
    let mut text = format!("change: {} -> {}\n", change.prev(), change.next());
    let _ = writeln!(
        text,
        "unfolded: {} equations over {}",
        u.equations.len(),
        list(&inst(&u.dependent))
    );
    let head = json!({
        "from": change.prev().to_string(),
        "to": change.next().to_string(),
        "unfolded": unfolded,
    });
    let mut result = head;
    match resolve_conflicts(&u) {
        Ok(r) => {
            let conflict = json!({
                "equations": eqs(&r.conflict_equations),
                "variables": inst(&r.conflict_instances),
            });
            let restart = json!({
                "equations": eqs(&r.restart_equations),
                "variables": inst(&r.restart_instances),
            });
            let _ = writeln!(
                text,
                "conflict: {{{}}} / {{{}}}",
                eqs(&r.conflict_equations).join(", "),
                inst(&r.conflict_instances).join(", ")
            );
            let _ = writeln!(text, "removed: {}", list(&eqs(&r.removed)));
            let _ = writeln!(
                text,
                "restart: {{{}}} / {{{}}}",
                eqs(&r.restart_equations).join(", "),
                inst(&r.restart_instances).join(", ")
            );
            result["verdict"] = json!("resolved");
            result["conflict"] = conflict;
            result["removed"] = json!(eqs(&r.removed));
            result["restart"] = restart;
            result["rounds"] = json!(r.rounds);
        }
        Err(Error::CausalityViolation(names)) => {
            let _ = writeln!(
                text,
                "causality violation: conflict {{{}}} has no removable equation",
                names.join(", ")
            );
            result["verdict"] = json!("causality_violation");
            result["conflict"] = json!({ "equations": names });
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome {
        result,
        text,
        dot: None,
    })
}

fn modes_cmd(model: &Model) -> Result<Outcome, Failure> {
    let modes = enumerate_modes(model)?;
    let mut entries = Vec::new();
    let mut text = String::new();
    for mode in modes {
        let m = restrict_to_mode(model, &mode)?;
        let g = WeightedBipartiteGraph::from_model(&m);
        let label = if mode.is_empty() {
            "(single mode)".to_string()
        } else {
            mode.to_string()
        };
        let mut entry = json!({
            "mode": mode.to_string(),
            "equations": g.n_eqs(),
            "variables": g.n_vars(),
        });
        match analyze_mode(&m) {
            ModeAnalysis::Regular { reduction, btf } => {
                let sol = checked(&g, reduction.offsets.clone())?;
                let lg = leading_graph(&g, &sol);
                let latent: Vec<String> = reduction
                    .sigma_equations
                    .iter()
                    .filter(|e| e.shifts() > 0)
                    .map(|e| e.name())
                    .collect();
                let consistency: Vec<String> = reduction
                    .consistency_equations
                    .iter()
                    .map(|e| e.name())
                    .collect();
                let _ = writeln!(
                    text,
                    "{label}: regular, {}x{}, index {}, latent {}",
                    g.n_eqs(),
                    g.n_vars(),
                    sol.index,
                    list(&latent)
                );
                entry["verdict"] = json!("regular");
                entry["offsets"] = report::offsets(&g, &sol);
                entry["latent"] = json!(latent);
                entry["consistency"] = json!(consistency);
                entry["blocks"] = report::btf(&lg, &btf);
            }
            ModeAnalysis::NonSquare { offsets, dm } => {
                let sol = checked(&g, offsets)?;
                let _ = writeln!(
                    text,
                    "{label}: nonsquare, {}x{}, index {}",
                    g.n_eqs(),
                    g.n_vars(),
                    sol.index
                );
                entry["verdict"] = json!("nonsquare");
                entry["offsets"] = report::offsets(&g, &sol);
                entry["leading_dm"] = report::dm(&leading_graph(&g, &sol), &dm);
            }
            ModeAnalysis::Singular { dm } => {
                let over = report::eq_names(&g, &dm.over.equations);
                let under = report::var_names(&g, &dm.under.variables);
                let _ = writeln!(
                    text,
                    "{label}: singular, {}x{}, overdetermined {}, underdetermined {}",
                    g.n_eqs(),
                    g.n_vars(),
                    list(&over),
                    list(&under)
                );
                entry["verdict"] = json!("singular");
                entry["dm"] = report::dm(&g, &dm);
            }
            ModeAnalysis::Failed { error } => return Err(error.into()),
        }
        entries.push(entry);
    }
    Ok(Outcome {
        result: json!({ "modes": entries }),
        text,
        dot: None,
    })
}
