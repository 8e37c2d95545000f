//! CPLEX-style LP text files.
//!
//! The writer lists every variable in the `Bounds` section in declaration
//! order so that a written model reads back with identical column order.
//! Warm starts are not part of the format.

use std::fmt::Write as _;

use super::{MilpModel, ObjectiveSense, Sense, VarId, VarKind};
use crate::{OtsError, Result};

const TERMS_PER_LINE: usize = 8;

pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\Problem name: {}", model.name);
    out.push_str(match model.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, model, model.objective());
    out.push_str("\nSubject To\n");
    for row in model.constraints() {
        let _ = write!(out, " {}:", row.name);
        if row.terms.is_empty() {
            // An empty row still needs a column to be well formed.
            let _ = write!(out, " 0 {}", model.variables()[0].name);
        }
        write_terms(&mut out, model, &row.terms);
        let _ = writeln!(out, " {} {}", row.sense, row.rhs + 0.0);
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        match (v.lower, v.upper) {
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => {
                let _ = writeln!(out, " {} free", v.name);
            }
            (lo, hi) => {
                let _ = writeln!(out, " {} <= {} <= {}", bound(lo), v.name, bound(hi));
            }
        }
    }
    let binaries: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(VarId, f64)]) {
    for (i, &(v, c)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.abs(), model.variables()[v.0].name);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "minimize" | "maximize" | "minimum" | "maximum" | "min" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

struct Token {
    text: String,
    line: usize,
}

fn syntax(line: usize, message: impl Into<String>) -> OtsError {
    OtsError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_num(tok: &Token) -> Result<f64> {
    match tok.text.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        t => t
            .parse()
            .map_err(|_| syntax(tok.line, format!("expected a number, found '{}'", tok.text))),
    }
}

fn is_relop(t: &str) -> bool {
    matches!(t, "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">")
}

fn relop(tok: &Token) -> Sense {
    match tok.text.as_str() {
        "<=" | "=<" | "<" => Sense::Le,
        ">=" | "=>" | ">" => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Parses a linear expression up to a relational operator or the end of the
/// tokens; returns `(terms by name, index after the expression)`.
fn parse_expr(tokens: &[Token], mut i: usize) -> Result<(Vec<(String, f64)>, usize)> {
    let mut terms = Vec::new();
    while i < tokens.len() && !is_relop(&tokens[i].text) {
        let mut coef = 1.0;
        let mut seen_sign = false;
        while i < tokens.len() && (tokens[i].text == "+" || tokens[i].text == "-") {
            if tokens[i].text == "-" {
                coef = -coef;
            }
            seen_sign = true;
            i += 1;
        }
        let Some(tok) = tokens.get(i) else {
            let line = tokens.last().map_or(0, |t| t.line);
            return Err(syntax(line, "dangling sign"));
        };
        if let Ok(c) = tok.text.parse::<f64>() {
            coef *= c;
            i += 1;
        } else if !seen_sign && !terms.is_empty() {
            return Err(syntax(tok.line, format!("missing operator before '{}'", tok.text)));
        }
        let Some(name) = tokens.get(i) else {
            return Err(syntax(tok.line, "coefficient without a variable"));
        };
        if is_relop(&name.text) || name.text.parse::<f64>().is_ok() {
            return Err(syntax(name.line, format!("expected a variable, found '{}'", name.text)));
        }
        terms.push((name.text.clone(), coef));
        i += 1;
    }
    Ok((terms, i))
}

struct Reader {
    model: MilpModel,
    bounds: Vec<(String, f64, f64)>,
    binaries: Vec<String>,
}

impl Reader {
    fn var(&mut self, name: &str) -> Result<VarId> {
        match self.model.var(name) {
            Some(v) => Ok(v),
            None => self.model.continuous(name, 0.0, f64::INFINITY),
        }
    }
}

/// Parses a model written by [`write_lp`] (and the common subset of the
/// CPLEX LP format it uses).
pub fn read_lp(text: &str) -> Result<MilpModel> {
    let mut name = String::from("model");
    let mut sense = ObjectiveSense::Minimize;
    let mut section = Section::Preamble;
    let mut objective: Vec<Token> = Vec::new();
    let mut rows: Vec<Token> = Vec::new();
    let mut bound_lines: Vec<(usize, String)> = Vec::new();
    let mut binary_names: Vec<String> = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Problem name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if let Some(s) = section_of(trimmed) {
            if s == Section::Objective {
                sense = if trimmed.to_ascii_lowercase().starts_with("max") {
                    ObjectiveSense::Maximize
                } else {
                    ObjectiveSense::Minimize
                };
            }
            section = s;
            continue;
        }
        let tokens = split_signs(trimmed).into_iter().map(|t| Token { text: t, line: line_no });
        match section {
            Section::Preamble => return Err(syntax(line_no, "content before the objective section")),
            Section::Objective => objective.extend(tokens),
            Section::Constraints => rows.extend(tokens),
            Section::Bounds => bound_lines.push((line_no, trimmed.to_string())),
            Section::Binaries => binary_names.extend(trimmed.split_whitespace().map(str::to_string)),
            Section::End => return Err(syntax(line_no, "content after End")),
        }
    }
    if section != Section::End {
        return Err(syntax(text.lines().count(), "missing End"));
    }

    let mut r = Reader {
        model: MilpModel::new(name, sense),
        bounds: Vec::new(),
        binaries: binary_names,
    };
    // Columns are declared in Bounds order first.
    for (line_no, text) in &bound_lines {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [v, free] if free.eq_ignore_ascii_case("free") => Some((v.to_string(), f64::NEG_INFINITY, f64::INFINITY)),
            [lo, "<=", v, "<=", hi] => Some((v.to_string(), num(lo, *line_no)?, num(hi, *line_no)?)),
            [v, "<=", hi] => Some((v.to_string(), 0.0, num(hi, *line_no)?)),
            [v, ">=", lo] => Some((v.to_string(), num(lo, *line_no)?, f64::INFINITY)),
            [v, "=", x] => {
                let x = num(x, *line_no)?;
                Some((v.to_string(), x, x))
            }
            _ => None,
        };
        let Some((v, lo, hi)) = parsed else {
            return Err(syntax(*line_no, format!("unrecognised bound '{text}'")));
        };
        if r.model.var(&v).is_none() {
            let kind = if r.binaries.contains(&v) {
                VarKind::Binary
            } else {
                VarKind::Continuous
            };
            r.model
                .add_var(&v, kind, lo, hi)
                .map_err(|e| OtsError::Line {
                    line: *line_no,
                    source: Box::new(e),
                })?;
        }
        r.bounds.push((v, lo, hi));
    }

    let (terms, end) = parse_expr(&objective, strip_label(&objective, 0))?;
    if end != objective.len() {
        return Err(syntax(objective[end].line, "relational operator in the objective"));
    }
    let mut obj = Vec::new();
    for (n, c) in terms {
        obj.push((r.var(&n)?, c));
    }
    r.model.set_objective(obj);

    let mut i = 0;
    let mut row_no = 0;
    while i < rows.len() {
        let line = rows[i].line;
        let label = rows[i].text.strip_suffix(':').map(str::to_string);
        let start = strip_label(&rows, i);
        let (terms, at) = parse_expr(&rows, start)?;
        let Some(op) = rows.get(at) else {
            return Err(syntax(line, "constraint without a relational operator"));
        };
        let Some(rhs) = rows.get(at + 1) else {
            return Err(syntax(op.line, "constraint without a right-hand side"));
        };
        let rhs_value = parse_num(rhs)?;
        let mut lin = Vec::new();
        for (n, c) in terms {
            lin.push((r.var(&n)?, c));
        }
        row_no += 1;
        let label = label.unwrap_or_else(|| format!("R{row_no}"));
        r.model
            .add_constraint(label, lin, relop(op), rhs_value)
            .map_err(|e| OtsError::Line {
                line,
                source: Box::new(e),
            })?;
        i = at + 2;
    }
    for b in std::mem::take(&mut r.binaries) {
        if r.model.var(&b).is_none() {
            r.model.binary(&b)?;
        }
    }
    Ok(r.model)
}

/// Whitespace tokens with a leading sign split off variable names
/// (`-x` becomes `-`, `x`).
fn split_signs(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for t in line.split_whitespace() {
        match t.strip_prefix(['+', '-']) {
            Some(rest) if !rest.is_empty() && rest.parse::<f64>().is_err() && !is_relop(t) && !rest.eq_ignore_ascii_case("inf") => {
                out.push(t[..1].to_string());
                out.push(rest.to_string());
            }
            _ => out.push(t.to_string()),
        }
    }
    out
}

fn num(t: &str, line: usize) -> Result<f64> {
    parse_num(&Token {
        text: t.to_string(),
        line,
    })
}

fn strip_label(tokens: &[Token], i: usize) -> usize {
    match tokens.get(i) {
        Some(t) if t.text.ends_with(':') => i + 1,
        _ => i,
    }
}
