//! Reading and writing the LP text format (Minimize / Subject To / Bounds /
//! Binaries / End).

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::error::LpFormatError;
use crate::model::{LinExpr, MilpModel, Relation, VarId, VarKind};

const TERMS_PER_LINE: usize = 6;

/// Maps model names onto identifiers the LP format accepts. Brackets become
/// parentheses, other reserved characters become `_`, and collisions get an
/// index suffix.
pub fn lp_names(names: impl Iterator<Item = String>, fallback: char) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in names.enumerate() {
        let mut s: String = raw
            .chars()
            .map(|c| match c {
                '[' => '(',
                ']' => ')',
                c if c.is_ascii_alphanumeric() => c,
                '!' | '"' | '#' | '$' | '%' | '&' | '(' | ')' | '/' | ',' | '.' | ';' | '?'
                | '@' | '_' | '`' | '\'' | '{' | '}' | '|' | '~' => c,
                _ => '_',
            })
            .collect();
        let bad_start = s
            .chars()
            .next()
            .is_none_or(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E');
        if bad_start {
            s = format!("{fallback}{i}_{s}");
        }
        if !seen.insert(s.clone()) {
            s = format!("{s}_{i}");
            seen.insert(s.clone());
        }
        out.push(s);
    }
    out
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn write_expr(out: &mut String, expr: &LinExpr, names: &[String], with_constant: bool) {
    let mut count = 0;
    for &(v, a) in expr.terms() {
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", fmt_num(a.abs()), names[v.index()]);
        count += 1;
    }
    if with_constant && expr.constant_term() != 0.0 {
        let c = expr.constant_term();
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", fmt_num(c.abs()));
        count += 1;
    }
    if count == 0 {
        out.push_str(" 0.0");
    }
}

/// Serializes `model`. The output depends only on the model, so equal models
/// always produce identical bytes.
pub fn write_lp(model: &MilpModel) -> String {
    let var_names = lp_names(model.variables().iter().map(|v| v.name.clone()), 'x');
    let con_names = lp_names(model.constraints().iter().map(|c| c.name.clone()), 'c');
    let mut out = String::new();
    let _ = writeln!(out, "\\ Model {}", model.name().replace('\n', " "));
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model.objective(), &var_names, true);
    out.push_str("\nSubject To\n");
    for (c, name) in model.constraints().iter().zip(&con_names) {
        let _ = write!(out, " {name}:");
        write_expr(&mut out, &c.expr, &var_names, false);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.variables().iter().zip(&var_names) {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", fmt_num(v.lower));
        } else {
            let _ = writeln!(
                out,
                " {} <= {name} <= {}",
                fmt_num(v.lower),
                fmt_num(v.upper)
            );
        }
    }
    let binaries: Vec<&String> = model
        .variables()
        .iter()
        .zip(&var_names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Colon,
    Plus,
    Minus,
    Rel(Relation),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_keyword(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    match words.as_slice() {
        ["minimize"] | ["minimise"] | ["min"] => Some(Section::Objective),
        ["subject", "to"] | ["such", "that"] | ["st"] | ["s.t."] => Some(Section::Constraints),
        ["bounds"] | ["bound"] => Some(Section::Bounds),
        ["binaries"] | ["binary"] | ["bin"] => Some(Section::Binaries),
        ["end"] => Some(Section::End),
        _ => None,
    }
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>, LpFormatError> {
    let err = |m: String| LpFormatError {
        line: line_no,
        message: m,
    };
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '+' {
            toks.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            toks.push(Tok::Minus);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            if j < chars.len() && chars[j] == '=' {
                j += 1;
            }
            let rel = match c {
                '<' => Relation::Le,
                '>' => Relation::Ge,
                _ => {
                    if j < chars.len() && (chars[j] == '<' || chars[j] == '>') {
                        let r = if chars[j] == '<' {
                            Relation::Le
                        } else {
                            Relation::Ge
                        };
                        j += 1;
                        r
                    } else {
                        Relation::Eq
                    }
                }
            };
            toks.push(Tok::Rel(rel));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{text}`")))?;
            toks.push(Tok::Num(v));
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], ':' | '+' | '-' | '<' | '>' | '=')
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let lower = text.to_ascii_lowercase();
            if lower == "inf" || lower == "infinity" {
                toks.push(Tok::Num(f64::INFINITY));
            } else {
                toks.push(Tok::Name(text));
            }
        }
    }
    Ok(toks)
}

struct Reader {
    model: MilpModel,
    vars: BTreeMap<String, VarId>,
    bounds: BTreeMap<String, (f64, f64)>,
}

impl Reader {
    fn var(&mut self, name: &str, line: usize) -> Result<VarId, LpFormatError> {
        if let Some(&v) = self.vars.get(name) {
            return Ok(v);
        }
        let v = self
            .model
            .continuous(name, 0.0, f64::INFINITY)
            .map_err(|e| LpFormatError {
                line,
                message: e.to_string(),
            })?;
        self.vars.insert(name.to_string(), v);
        Ok(v)
    }

    /// Parses `[name:] terms [rel rhs]`; returns the pieces.
    fn linear(
        &mut self,
        toks: &[Tok],
        line: usize,
    ) -> Result<(Option<String>, LinExpr, Option<(Relation, f64)>), LpFormatError> {
        let err = |m: &str| LpFormatError {
            line,
            message: m.to_string(),
        };
        let mut i = 0;
        let mut name = None;
        if toks.len() >= 2 {
            if let (Tok::Name(n), Tok::Colon) = (&toks[0], &toks[1]) {
                name = Some(n.clone());
                i = 2;
            }
        }
        let mut expr = LinExpr::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        while i < toks.len() {
            match &toks[i] {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                Tok::Num(v) => {
                    if coef.is_some() {
                        return Err(err("two numbers in a row"));
                    }
                    coef = Some(*v);
                }
                Tok::Name(n) => {
                    let v = self.var(n, line)?;
                    expr.add_term(v, sign * coef.unwrap_or(1.0));
                    sign = 1.0;
                    coef = None;
                }
                Tok::Rel(rel) => {
                    if let Some(c) = coef.take() {
                        expr.add_constant(sign * c);
                    }
                    let mut s = 1.0;
                    let mut j = i + 1;
                    while j < toks.len() && matches!(toks[j], Tok::Plus | Tok::Minus) {
                        if toks[j] == Tok::Minus {
                            s = -s;
                        }
                        j += 1;
                    }
                    let rhs = match toks.get(j) {
                        Some(Tok::Num(v)) => s * v,
                        _ => return Err(err("expected a number after the relation")),
                    };
                    if j + 1 != toks.len() {
                        return Err(err("trailing tokens after the right-hand side"));
                    }
                    return Ok((name, expr, Some((*rel, rhs))));
                }
                Tok::Colon => return Err(err("unexpected `:`")),
            }
            i += 1;
        }
        if let Some(c) = coef {
            expr.add_constant(sign * c);
        }
        Ok((name, expr, None))
    }

    fn bound_line(&mut self, toks: &[Tok], line: usize) -> Result<(), LpFormatError> {
        let err = |m: &str| LpFormatError {
            line,
            message: m.to_string(),
        };
        // Fold signs into numbers first.
        let mut items: Vec<Tok> = Vec::new();
        let mut neg = false;
        for t in toks {
            match t {
                Tok::Minus => neg = !neg,
                Tok::Plus => {}
                Tok::Num(v) => {
                    items.push(Tok::Num(if neg { -v } else { *v }));
                    neg = false;
                }
                other => items.push(other.clone()),
            }
        }
        let mut set = |name: &str, lo: Option<f64>, hi: Option<f64>| -> Result<(), LpFormatError> {
            self.var(name, line)?;
            let entry = self
                .bounds
                .entry(name.to_string())
                .or_insert((0.0, f64::INFINITY));
            if let Some(l) = lo {
                entry.0 = l;
            }
            if let Some(h) = hi {
                entry.1 = h;
            }
            Ok(())
        };
        match items.as_slice() {
            [Tok::Name(n), Tok::Name(kw)] if kw.eq_ignore_ascii_case("free") => {
                set(n, Some(f64::NEG_INFINITY), Some(f64::INFINITY))
            }
            [Tok::Num(l), Tok::Rel(r1), Tok::Name(n), Tok::Rel(r2), Tok::Num(h)]
                if *r1 == Relation::Le && *r2 == Relation::Le =>
            {
                set(n, Some(*l), Some(*h))
            }
            [Tok::Name(n), Tok::Rel(r), Tok::Num(v)] => match r {
                Relation::Le => set(n, None, Some(*v)),
                Relation::Ge => set(n, Some(*v), None),
                Relation::Eq => set(n, Some(*v), Some(*v)),
            },
            [Tok::Num(v), Tok::Rel(r), Tok::Name(n)] => match r {
                Relation::Le => set(n, Some(*v), None),
                Relation::Ge => set(n, None, Some(*v)),
                Relation::Eq => set(n, Some(*v), Some(*v)),
            },
            _ => Err(err("unrecognized bound")),
        }
    }
}

/// Parses LP text written by [`write_lp`] (and the common subset of the
/// format it uses).
pub fn read_lp(text: &str) -> Result<MilpModel, LpFormatError> {
    let mut reader = Reader {
        model: MilpModel::new("lp"),
        vars: BTreeMap::new(),
        bounds: BTreeMap::new(),
    };
    let mut section = Section::None;
    let mut objective: Option<LinExpr> = None;
    let mut binaries: Vec<(String, usize)> = Vec::new();
    // Statement accumulated across continuation lines.
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;

    let mut lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    lines.push((text.lines().count() + 1, "End"));
    for (line_no, raw) in lines {
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let keyword = section_keyword(line);
        if let Some(next) = keyword {
            if !pending.is_empty() {
                finish_statement(&mut reader, section, &pending, pending_line, &mut objective)?;
                pending.clear();
            }
            if section == Section::End {
                break;
            }
            section = next;
            continue;
        }
        let toks = tokenize(line, line_no)?;
        match section {
            Section::None => {
                return Err(LpFormatError {
                    line: line_no,
                    message: "content before the objective section".into(),
                })
            }
            Section::Objective | Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line_no;
                }
                pending.extend(toks);
                let complete = section == Section::Constraints
                    && matches!(pending.last(), Some(Tok::Num(_)))
                    && pending.iter().any(|t| matches!(t, Tok::Rel(_)));
                if complete {
                    finish_statement(&mut reader, section, &pending, pending_line, &mut objective)?;
                    pending.clear();
                }
            }
            Section::Bounds => reader.bound_line(&toks, line_no)?,
            Section::Binaries => {
                for t in toks {
                    match t {
                        Tok::Name(n) => {
                            reader.var(&n, line_no)?;
                            binaries.push((n, line_no));
                        }
                        _ => {
                            return Err(LpFormatError {
                                line: line_no,
                                message: "expected variable names".into(),
                            })
                        }
                    }
                }
            }
            Section::End => break,
        }
    }

    let names: Vec<String> = reader.vars.keys().cloned().collect();
    for name in names {
        let v = reader.vars[&name];
        let (lo, hi) = reader.bounds.get(&name).copied().unwrap_or((0.0, f64::INFINITY));
        reader.model.set_bounds(v, lo, hi).map_err(|e| LpFormatError {
            line: 0,
            message: e.to_string(),
        })?;
    }
    for (name, line) in binaries {
        let v = reader.vars[&name];
        let (lo, hi) = reader.bounds.get(&name).copied().unwrap_or((0.0, 1.0));
        let to_err = |e: crate::error::ModelError| LpFormatError {
            line,
            message: e.to_string(),
        };
        reader.model.set_bounds(v, lo, hi).map_err(to_err)?;
        reader.model.set_kind(v, VarKind::Binary).map_err(to_err)?;
    }
    if let Some(obj) = objective {
        reader
            .model
            .set_objective(obj)
            .map_err(|e| LpFormatError {
                line: 0,
                message: e.to_string(),
            })?;
    }
    Ok(reader.model)
}

fn finish_statement(
    reader: &mut Reader,
    section: Section,
    toks: &[Tok],
    line: usize,
    objective: &mut Option<LinExpr>,
) -> Result<(), LpFormatError> {
    let (name, expr, rel) = reader.linear(toks, line)?;
    match section {
        Section::Objective => {
            if rel.is_some() {
                return Err(LpFormatError {
                    line,
                    message: "relation in the objective".into(),
                });
            }
            *objective = Some(expr);
        }
        Section::Constraints => {
            let (rel, rhs) = rel.ok_or_else(|| LpFormatError {
                line,
                message: "constraint without a relation".into(),
            })?;
            let name = name.unwrap_or_else(|| format!("c{}", reader.model.num_constraints()));
            reader
                .model
                .add_constraint(expr, rel, rhs, name)
                .map_err(|e| LpFormatError {
                    line,
                    message: e.to_string(),
                })?;
        }
        _ => {}
    }
    Ok(())
}
