//! Graphviz output: equations as boxes, variables as ellipses, matched edges
//! in bold, blocks as clusters.

use std::fmt::Write as _;

use daesa_core::{Block, WeightedBipartiteGraph};

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            q.push('\\');
        }
        q.push(ch);
    }
    q.push('"');
    q
}

fn eq_id(f: usize) -> String {
    format!("f{f}")
}

fn var_id(x: usize) -> String {
    format!("x{x}")
}

pub fn bipartite(
    title: &str,
    g: &WeightedBipartiteGraph,
    matching: &[(usize, usize)],
    clusters: &[(String, &Block)],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", quote(title));
    s.push_str("  rankdir=LR;\n  edge [arrowhead=none];\n");
    let mut placed_eq = vec![false; g.n_eqs()];
    let mut placed_var = vec![false; g.n_vars()];
    for (i, (label, b)) in clusters.iter().enumerate() {
        if b.is_empty() {
            continue;
        }
        let _ = writeln!(s, "  subgraph cluster_{i} {{");
        let _ = writeln!(s, "    label={};", quote(label));
        for &f in &b.equations {
            placed_eq[f] = true;
            let _ = writeln!(
                s,
                "    {} [shape=box, label={}];",
                eq_id(f),
                quote(g.eq_name(f))
            );
        }
        for &x in &b.variables {
            placed_var[x] = true;
            let _ = writeln!(
                s,
                "    {} [shape=ellipse, label={}];",
                var_id(x),
                quote(g.var_name(x))
            );
        }
        s.push_str("  }\n");
    }
    for f in (0..g.n_eqs()).filter(|&f| !placed_eq[f]) {
        let _ = writeln!(
            s,
            "  {} [shape=box, label={}];",
            eq_id(f),
            quote(g.eq_name(f))
        );
    }
    for x in (0..g.n_vars()).filter(|&x| !placed_var[x]) {
        let _ = writeln!(
            s,
            "  {} [shape=ellipse, label={}];",
            var_id(x),
            quote(g.var_name(x))
        );
    }
    for (f, x, w) in g.edges() {
        let mut attrs = Vec::new();
        if matching.binary_search(&(f, x)).is_ok() {
            attrs.push("style=bold".to_string());
        }
        if w > 0 {
            attrs.push(format!("label=\"{w}\""));
        }
        let attrs = if attrs.is_empty() {
            String::new()
        } else {
            format!(" [{}]", attrs.join(", "))
        };
        let _ = writeln!(s, "  {} -> {}{attrs};", eq_id(f), var_id(x));
    }
    s.push_str("}\n");
    s
}
