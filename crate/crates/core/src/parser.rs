//! Front-end for the `.dae` modeling language.
//!
//! ```text
//! continuous clutch;
//! var w1, w2, t1, t2;
//! guard g;
//! e1: der(w1) = f1(w1, t1);
//! when g then e3: w1 - w2 = 0; end
//! ```
//!
//! Only incidence structure survives parsing. Two constructs go beyond plain
//! equations: `if g then a else b` inside an equation splits it into the two
//! guarded equations `<label>_then` and `<label>_else`, and `pre(x)` refers to
//! the left limit of `x`, represented by the guard-input variable `x_prev`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result, Span};
use crate::model::{Equation, GuardCondition, Literal, Mode, Model, TimeDomain, VariableKind};

pub const MAX_ENUMERATED_GUARDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

/// A successfully parsed model together with the non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub model: Model,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn parse(text: &str) -> Result<Model> {
    parse_with_diagnostics(text).map(|s| s.model)
}

pub fn parse_with_diagnostics(text: &str) -> Result<SourceModel> {
    let tokens = lex(text)?;
    Parser::new(tokens).model()
}

/// All total guard assignments, ordered lexicographically with the first
/// declared guard most significant and `false < true`.
pub fn enumerate_modes(model: &Model) -> Result<Vec<Mode>> {
    let guards = model.guards();
    if guards.len() > MAX_ENUMERATED_GUARDS {
        return Err(Error::TooManyGuards {
            count: guards.len(),
            max: MAX_ENUMERATED_GUARDS,
        });
    }
    let g = guards.len();
    Ok((0u32..1 << g)
        .map(|bits| {
            Mode::new(
                guards
                    .iter()
                    .enumerate()
                    .map(|(j, name)| (name.clone(), bits >> (g - 1 - j) & 1 == 1)),
            )
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Colon,
    Semi,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1usize, 0usize);
    let span = |start: usize, end: usize, line: usize, line_start: usize| Span {
        start,
        end,
        line,
        col: text[line_start..start].chars().count() + 1,
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' | b'/' if c == b'#' || bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    span: span(start, i, line, line_start),
                });
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lexeme = &text[start..i];
                let sp = span(start, i, line, line_start);
                if lexeme.parse::<f64>().is_err() {
                    return Err(Error::Syntax {
                        span: sp,
                        message: format!("malformed number `{lexeme}`"),
                    });
                }
                out.push(Token {
                    tok: Tok::Number(lexeme.to_string()),
                    span: sp,
                });
            }
            _ => {
                let tok = match c {
                    b':' => Tok::Colon,
                    b';' => Tok::Semi,
                    b',' => Tok::Comma,
                    b'=' => Tok::Eq,
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    _ => {
                        let ch = text[i..].chars().next().unwrap_or('?');
                        return Err(Error::Syntax {
                            span: span(i, i + ch.len_utf8(), line, line_start),
                            message: format!("unexpected character `{ch}`"),
                        });
                    }
                };
                out.push(Token {
                    tok,
                    span: span(i, i + 1, line, line_start),
                });
                i += 1;
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(bytes.len(), bytes.len(), line, line_start),
    });
    Ok(out)
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::Colon => "`:`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Eof => "end of input".into(),
    }
}

const KEYWORDS: &[&str] = &[
    "continuous",
    "discrete",
    "var",
    "guard",
    "when",
    "then",
    "else",
    "end",
    "not",
    "and",
    "if",
    "der",
    "shift",
    "pre",
];

// ---------------------------------------------------------------------------
// Parser

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarRef {
    Declared(usize),
    Prev(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Branch {
    Common,
    Then,
    Else,
}

struct PendingIf {
    literal: Literal,
    span: Span,
}

/// Occurrences collected while parsing one equation.
#[derive(Default)]
struct EqScratch {
    occurrences: Vec<(VarRef, u32, Branch)>,
    branch: Option<Branch>,
    cond: Option<PendingIf>,
}

struct RawEquation {
    label: Option<String>,
    guard: GuardCondition,
    occurrences: Vec<(VarRef, u32, Branch)>,
    cond: Option<PendingIf>,
    span: Span,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    domain: TimeDomain,
    vars: Vec<String>,
    var_lookup: HashMap<String, usize>,
    prev_vars: Vec<usize>,
    guards: Vec<String>,
    guard_lookup: HashMap<String, usize>,
    equations: Vec<RawEquation>,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            domain: TimeDomain::Continuous,
            vars: Vec::new(),
            var_lookup: HashMap::new(),
            prev_vars: Vec::new(),
            guards: Vec::new(),
            guard_lookup: HashMap::new(),
            equations: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.error(format!(
                "expected {}, found {}",
                describe(&tok),
                describe(self.peek())
            ))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span> {
        if self.is_keyword(kw) {
            Ok(self.bump().span)
        } else {
            self.error(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    /// A non-keyword identifier.
    fn ident(&mut self) -> Result<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn model(mut self) -> Result<SourceModel> {
        self.domain = if self.is_keyword("continuous") {
            TimeDomain::Continuous
        } else if self.is_keyword("discrete") {
            TimeDomain::Discrete
        } else {
            return self.error("a model starts with `continuous <name>;` or `discrete <name>;`");
        };
        self.bump();
        let (name, _) = self.ident()?;
        self.expect(Tok::Semi)?;

        while *self.peek() != Tok::Eof {
            if self.is_keyword("var") {
                self.bump();
                for (n, _) in self.ident_list()? {
                    self.declare_var(n)?;
                }
            } else if self.is_keyword("guard") {
                self.bump();
                for (n, _) in self.ident_list()? {
                    self.declare_guard(n)?;
                }
            } else if self.is_keyword("when") {
                self.when_block()?;
            } else {
                self.equation(GuardCondition::default())?;
            }
        }
        self.finish(name)
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Span)>> {
        let mut out = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        self.expect(Tok::Semi)?;
        Ok(out)
    }

    fn declare_var(&mut self, name: String) -> Result<()> {
        if self.var_lookup.contains_key(&name) || self.guard_lookup.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.var_lookup.insert(name.clone(), self.vars.len());
        self.vars.push(name);
        Ok(())
    }

    fn declare_guard(&mut self, name: String) -> Result<()> {
        if self.var_lookup.contains_key(&name) || self.guard_lookup.contains_key(&name) {
            return Err(Error::DuplicateName(name));
        }
        self.guard_lookup.insert(name.clone(), self.guards.len());
        self.guards.push(name);
        Ok(())
    }

    fn when_block(&mut self) -> Result<()> {
        self.expect_keyword("when")?;
        let start = self.span();
        let literals = self.guard_expr()?;
        let guard = GuardCondition::new(literals).ok_or_else(|| Error::Syntax {
            span: start,
            message: "guard condition is contradictory".into(),
        })?;
        self.expect_keyword("then")?;
        let mut count = 0;
        while !self.is_keyword("end") {
            if *self.peek() == Tok::Eof {
                return self.error("unterminated `when` block, expected `end`");
            }
            if self.is_keyword("when") {
                return self.error("`when` blocks cannot be nested");
            }
            self.equation(guard.clone())?;
            count += 1;
        }
        if count == 0 {
            return self.error("`when` block contains no equation");
        }
        self.bump();
        Ok(())
    }

    fn guard_literal(&mut self) -> Result<Literal> {
        let positive = if self.is_keyword("not") {
            self.bump();
            false
        } else {
            true
        };
        let (name, _) = self.ident()?;
        let guard = *self
            .guard_lookup
            .get(&name)
            .ok_or(Error::UnknownGuard(name))?;
        Ok(Literal { guard, positive })
    }

    fn guard_expr(&mut self) -> Result<Vec<Literal>> {
        let mut lits = vec![self.guard_literal()?];
        while self.is_keyword("and") {
            self.bump();
            lits.push(self.guard_literal()?);
        }
        Ok(lits)
    }

    fn equation(&mut self, guard: GuardCondition) -> Result<()> {
        let start = self.span();
        let label = if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
            let (l, _) = self.ident()?;
            self.bump();
            Some(l)
        } else {
            None
        };
        let mut scratch = EqScratch::default();
        self.expr(&mut scratch)?;
        self.expect(Tok::Eq)?;
        self.expr(&mut scratch)?;
        let end = self.expect(Tok::Semi)?;
        self.equations.push(RawEquation {
            label,
            guard,
            occurrences: scratch.occurrences,
            cond: scratch.cond,
            span: Span {
                start: start.start,
                end: end.end,
                line: start.line,
                col: start.col,
            },
        });
        Ok(())
    }

    fn expr(&mut self, sc: &mut EqScratch) -> Result<()> {
        if self.is_keyword("if") {
            return self.if_expr(sc);
        }
        self.term(sc)?;
        while matches!(self.peek(), Tok::Plus | Tok::Minus) {
            self.bump();
            self.term(sc)?;
        }
        Ok(())
    }

    fn if_expr(&mut self, sc: &mut EqScratch) -> Result<()> {
        let span = self.expect_keyword("if")?;
        if sc.cond.is_some() {
            return Err(Error::Syntax {
                span,
                message: "at most one `if` expression per equation".into(),
            });
        }
        let literal = self.guard_literal()?;
        if self.is_keyword("and") {
            return self
                .error("the condition of an `if` expression must be a single guard literal");
        }
        sc.cond = Some(PendingIf { literal, span });
        self.expect_keyword("then")?;
        sc.branch = Some(Branch::Then);
        self.expr(sc)?;
        self.expect_keyword("else")?;
        sc.branch = Some(Branch::Else);
        self.expr(sc)?;
        sc.branch = None;
        Ok(())
    }

    fn term(&mut self, sc: &mut EqScratch) -> Result<()> {
        self.factor(sc)?;
        while matches!(self.peek(), Tok::Star | Tok::Slash) {
            self.bump();
            self.factor(sc)?;
        }
        Ok(())
    }

    fn factor(&mut self, sc: &mut EqScratch) -> Result<()> {
        match self.peek().clone() {
            Tok::Number(_) => {
                self.bump();
                Ok(())
            }
            Tok::Minus => {
                self.bump();
                self.factor(sc)
            }
            Tok::LParen => {
                self.bump();
                self.expr(sc)?;
                self.expect(Tok::RParen)?;
                Ok(())
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    return self.call(sc, &name);
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return self.error(format!("unexpected keyword `{name}`"));
                }
                let span = self.bump().span;
                if self.guard_lookup.contains_key(&name) {
                    // Guards are opaque booleans: no incidence.
                    return Ok(());
                }
                let var = self.lookup_var(&name, span)?;
                self.record(sc, VarRef::Declared(var), 0);
                Ok(())
            }
            other => self.error(format!(
                "expected an expression, found {}",
                describe(&other)
            )),
        }
    }

    fn call(&mut self, sc: &mut EqScratch, head: &str) -> Result<()> {
        let head_span = self.span();
        match head {
            "der" | "shift" => {
                let (operator, allowed) = if head == "der" {
                    ("der", TimeDomain::Continuous)
                } else {
                    ("shift", TimeDomain::Discrete)
                };
                if self.domain != allowed {
                    return Err(Error::MixedTimeDomain {
                        span: head_span,
                        operator,
                        domain: self.domain.keyword(),
                    });
                }
                self.bump();
                self.expect(Tok::LParen)?;
                let (name, span) = self.ident()?;
                let var = self.lookup_var(&name, span)?;
                let degree = if *self.peek() == Tok::Comma {
                    self.bump();
                    self.order()?
                } else {
                    1
                };
                self.expect(Tok::RParen)?;
                self.record(sc, VarRef::Declared(var), degree);
                Ok(())
            }
            "pre" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (name, span) = self.ident()?;
                let var = self.lookup_var(&name, span)?;
                self.expect(Tok::RParen)?;
                let k = match self.prev_vars.iter().position(|&v| v == var) {
                    Some(k) => k,
                    None => {
                        self.prev_vars.push(var);
                        self.prev_vars.len() - 1
                    }
                };
                self.record(sc, VarRef::Prev(k), 0);
                Ok(())
            }
            _ if KEYWORDS.contains(&head) => self.error(format!("unexpected keyword `{head}`")),
            _ => {
                self.bump();
                self.expect(Tok::LParen)?;
                if *self.peek() != Tok::RParen {
                    self.expr(sc)?;
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        self.expr(sc)?;
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(())
            }
        }
    }

    fn order(&mut self) -> Result<u32> {
        match self.peek().clone() {
            Tok::Number(n) => match n.parse::<u32>() {
                Ok(k) => {
                    self.bump();
                    Ok(k)
                }
                Err(_) => self.error(format!("order must be a nonnegative integer, found `{n}`")),
            },
            other => self.error(format!("expected an order, found {}", describe(&other))),
        }
    }

    fn lookup_var(&self, name: &str, span: Span) -> Result<usize> {
        self.var_lookup
            .get(name)
            .copied()
            .ok_or_else(|| Error::UndeclaredVariable {
                span,
                name: name.to_string(),
            })
    }

    fn record(&self, sc: &mut EqScratch, var: VarRef, degree: u32) {
        sc.occurrences
            .push((var, degree, sc.branch.unwrap_or(Branch::Common)));
    }

    fn finish(mut self, name: String) -> Result<SourceModel> {
        let n_declared = self.vars.len();
        let mut builder = Model::builder(name, self.domain);
        for v in &self.vars {
            builder = builder.variable(v.clone(), VariableKind::Signal);
        }
        for &v in &self.prev_vars {
            let prev_name = format!("{}_prev", self.vars[v]);
            if self.var_lookup.contains_key(&prev_name)
                || self.guard_lookup.contains_key(&prev_name)
            {
                return Err(Error::DuplicateName(prev_name));
            }
            builder = builder.variable(prev_name, VariableKind::GuardInput);
        }
        for g in &self.guards {
            builder = builder.guard(g.clone());
        }
        let resolve = |r: VarRef| match r {
            VarRef::Declared(i) => i,
            VarRef::Prev(k) => n_declared + k,
        };

        let raw = std::mem::take(&mut self.equations);
        for (n, eq) in raw.into_iter().enumerate() {
            let label = eq.label.unwrap_or_else(|| format!("eq{}", n + 1));
            let variants: Vec<(String, GuardCondition, Option<Branch>)> = match &eq.cond {
                None => vec![(label.clone(), eq.guard.clone(), None)],
                Some(cond) => {
                    let mut out = Vec::new();
                    for (suffix, branch, positive) in [
                        ("then", Branch::Then, cond.literal.positive),
                        ("else", Branch::Else, !cond.literal.positive),
                    ] {
                        let lit = GuardCondition::new([Literal {
                            guard: cond.literal.guard,
                            positive,
                        }])
                        .expect("single literal");
                        let guard = eq.guard.conjoin(&lit).ok_or_else(|| Error::Syntax {
                            span: cond.span,
                            message: "`if` condition contradicts the enclosing `when` guard".into(),
                        })?;
                        out.push((format!("{label}_{suffix}"), guard, Some(branch)));
                    }
                    out
                }
            };
            for (name, guard, branch) in variants {
                let occurrences: Vec<(usize, u32)> = eq
                    .occurrences
                    .iter()
                    .filter(|(_, _, b)| *b == Branch::Common || Some(*b) == branch)
                    .map(|&(r, d, _)| (resolve(r), d))
                    .collect();
                if occurrences.is_empty() {
                    self.diagnostics.push(Diagnostic {
                        severity: Severity::Warning,
                        span: eq.span,
                        message: format!("equation `{name}` involves no variable"),
                    });
                }
                builder = builder.equation(
                    Equation::new(name, occurrences)
                        .with_guard(Some(guard))
                        .with_span(eq.span),
                );
            }
        }
        Ok(SourceModel {
            model: builder.build()?,
            diagnostics: self.diagnostics,
        })
    }
}

// ---------------------------------------------------------------------------
// Pretty-printer

/// Renders a model back to source text. Expression bodies are not kept, so
/// each equation is printed as a sum of its incidences. Equations produced by
/// shifting are labelled `<base>_s<k>`; reparsing them gives fresh equations.
pub fn to_source(model: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {};", model.time_domain().keyword(), model.name());
    let declared: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VariableKind::Signal)
        .map(|v| v.name.as_str())
        .collect();
    if !declared.is_empty() {
        let _ = writeln!(out, "var {};", declared.join(", "));
    }
    if !model.guards().is_empty() {
        let _ = writeln!(out, "guard {};", model.guards().join(", "));
    }
    for eq in model.equations() {
        let label = if eq.shifts() == 0 {
            eq.base_name().to_string()
        } else {
            format!("{}_s{}", eq.base_name(), eq.shifts())
        };
        let terms: Vec<String> = eq
            .incidences()
            .iter()
            .map(|inc| term(model, inc.var, inc.degree))
            .collect();
        let lhs = if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        };
        let line = format!("{label}: {lhs} = 0;");
        match eq.guard() {
            None => {
                let _ = writeln!(out, "{line}");
            }
            Some(g) => {
                let lits: Vec<String> = g
                    .literals()
                    .iter()
                    .map(|l| {
                        let name = &model.guards()[l.guard];
                        if l.positive {
                            name.clone()
                        } else {
                            format!("not {name}")
                        }
                    })
                    .collect();
                let _ = writeln!(out, "when {} then {line} end", lits.join(" and "));
            }
        }
    }
    out
}

fn term(model: &Model, var: usize, degree: u32) -> String {
    let v = &model.variables()[var];
    if v.kind == VariableKind::GuardInput {
        let base = v.name.strip_suffix("_prev").unwrap_or(&v.name);
        return format!("pre({base})");
    }
    let op = match model.time_domain() {
        TimeDomain::Continuous => "der",
        TimeDomain::Discrete => "shift",
    };
    match degree {
        0 => v.name.clone(),
        1 => format!("{op}({})", v.name),
        k => format!("{op}({}, {k})", v.name),
    }
}
