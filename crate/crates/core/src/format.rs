//! The line-oriented `.ocs` system file format.
//!
//! ```text
//! system e1
//! states q1 q2
//! controls u1 u2
//! dyn q1' = u1
//! dyn q2' = u2
//! cost q1*u1*u2 + q1*q2
//! chart q1 > 0
//!
//! candidate reduce1
//! x1 = 2*p2
//! y1 = q1^2
//! qtilde = 2*p2^2 + (4/3)*q1^3
//! factor dyn y1' = v1
//! factor cost (1/2)*v1^2 + (4/3)*y1^(3/2)
//! ```
//!
//! `#` starts a comment. Costates are `p1..pn`; factor coordinates are
//! `x1..xν`, `y1..yν` and factor controls `v1..vν`. A `synth u1 = <expr>`
//! line in the system block supplies the synthesis when the stationarity
//! system is not affine in the controls.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::control::{costates_for, LagrangianSystem, Synthesis};
use crate::expr::{parse_expression, CoordinateFrame, Expr, ExprError, Role, Symbol};
use crate::factorization::{factor_v, factor_x, factor_y, DeclaredFactor, FactorSystem, FactorizationCandidate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> FormatError {
    FormatError { line, col, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub system: LagrangianSystem,
    pub synthesis: Option<Synthesis>,
    pub candidates: Vec<FactorizationCandidate>,
}

impl SystemFile {
    pub fn candidate(&self, name: &str) -> Option<&FactorizationCandidate> {
        self.candidates.iter().find(|c| c.name == name)
    }
}

/// Source text at a position: line number and column of its first byte.
#[derive(Debug, Clone)]
struct Src {
    line: usize,
    col: usize,
    text: String,
}

#[derive(Default)]
struct RawCandidate {
    name: String,
    line: usize,
    xs: BTreeMap<usize, Src>,
    ys: BTreeMap<usize, Src>,
    qtilde: Option<Src>,
    factor_dyn: BTreeMap<usize, Src>,
    factor_cost: Option<Src>,
}

#[derive(Default)]
struct Raw {
    system: Option<(usize, String)>,
    states: Option<(usize, Vec<Src>)>,
    controls: Option<(usize, Vec<Src>)>,
    dyns: Vec<(Src, Src)>,
    cost: Option<Src>,
    charts: Vec<Src>,
    synth: Vec<(Src, Src)>,
    candidates: Vec<RawCandidate>,
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|c| c.is_ascii_lowercase()) && c.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

/// Splits off the first whitespace-delimited word; returns it with the
/// remainder and the remainder's column offset.
fn word(s: &str, col: usize) -> (&str, &str, usize) {
    let t = s.trim_start();
    let start = col + (s.len() - t.len());
    let end = t.find(char::is_whitespace).unwrap_or(t.len());
    let rest = &t[end..];
    let lead = rest.len() - rest.trim_start().len();
    (&t[..end], rest.trim_start(), start + end + lead)
}

fn src(line: usize, col: usize, text: &str) -> Src {
    Src { line, col, text: text.trim_end().to_string() }
}

fn names(line: usize, rest: &str, col: usize) -> Result<Vec<Src>, FormatError> {
    let mut out = Vec::new();
    let mut c = col;
    let mut r = rest;
    while !r.trim().is_empty() {
        let at = c + (r.len() - r.trim_start().len());
        let (w, next, nc) = word(r, c);
        if !is_ident(w) {
            return Err(err(line, at, format!("invalid identifier `{w}`")));
        }
        out.push(src(line, at, w));
        r = next;
        c = nc;
    }
    Ok(out)
}

/// `lhs' = rhs` or `lhs = rhs`; returns (lhs, rhs).
fn assignment(line: usize, rest: &str, col: usize, prime: bool) -> Result<(Src, Src), FormatError> {
    let Some(eq) = rest.find('=') else {
        return Err(err(line, col + rest.len(), "expected `=`"));
    };
    let lhs = rest[..eq].trim();
    let lhs = if prime {
        lhs.strip_suffix('\'').ok_or_else(|| err(line, col, format!("expected `{lhs}'` with a prime")))?
    } else {
        lhs
    };
    if !is_ident(lhs) {
        return Err(err(line, col, format!("invalid identifier `{lhs}`")));
    }
    let r = &rest[eq + 1..];
    let rcol = col + eq + 1 + (r.len() - r.trim_start().len());
    if r.trim().is_empty() {
        return Err(err(line, rcol, "expected an expression"));
    }
    Ok((src(line, col, lhs), src(line, rcol, r.trim())))
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok().filter(|i| *i >= 1)
}

fn lex_lines(text: &str) -> Result<Raw, FormatError> {
    let mut raw = Raw::default();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let content = full.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let (kw, rest, col) = word(content, 1);
        let kcol = content.len() - content.trim_start().len() + 1;
        let in_candidate = !raw.candidates.is_empty();
        let dup = |what: &str| err(line, kcol, format!("duplicate `{what}` line"));
        match kw {
            "system" | "states" | "controls" | "dyn" | "cost" | "chart" | "synth" if in_candidate => {
                return Err(err(line, kcol, format!("`{kw}` must precede the first candidate block")));
            }
            "system" => {
                if raw.system.is_some() {
                    return Err(dup("system"));
                }
                let name = rest.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(line, col, "expected a system name"));
                }
                raw.system = Some((line, name.to_string()));
            }
            "states" | "controls" => {
                let list = names(line, rest, col)?;
                let slot = if kw == "states" { &mut raw.states } else { &mut raw.controls };
                if slot.is_some() {
                    return Err(dup(kw));
                }
                *slot = Some((line, list));
            }
            "dyn" => raw.dyns.push(assignment(line, rest, col, true)?),
            "synth" => raw.synth.push(assignment(line, rest, col, false)?),
            "cost" => {
                if raw.cost.is_some() {
                    return Err(dup("cost"));
                }
                if rest.trim().is_empty() {
                    return Err(err(line, col, "expected an expression"));
                }
                raw.cost = Some(src(line, col, rest));
            }
            "chart" => {
                let body = rest.trim_end();
                let Some(e) = body.strip_suffix('0').map(str::trim_end).and_then(|b| b.strip_suffix('>')) else {
                    return Err(err(line, col, "expected `<expr> > 0`"));
                };
                raw.charts.push(src(line, col, e.trim_end()));
            }
            "candidate" => {
                let name = rest.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(line, col, "expected a candidate name"));
                }
                if raw.candidates.iter().any(|c| c.name == name) {
                    return Err(err(line, col, format!("duplicate candidate `{name}`")));
                }
                raw.candidates.push(RawCandidate { name: name.into(), line, ..Default::default() });
            }
            "factor" => {
                let Some(cand) = raw.candidates.last_mut() else {
                    return Err(err(line, kcol, "`factor` outside a candidate block"));
                };
                let (kw2, rest2, col2) = word(rest, col);
                match kw2 {
                    "dyn" => {
                        let (lhs, rhs) = assignment(line, rest2, col2, true)?;
                        let i = indexed(&lhs.text, "y")
                            .ok_or_else(|| err(line, lhs.col, format!("expected `yI'`, found `{}`", lhs.text)))?;
                        if cand.factor_dyn.insert(i, rhs).is_some() {
                            return Err(dup(&format!("factor dyn {}", lhs.text)));
                        }
                    }
                    "cost" => {
                        if cand.factor_cost.is_some() {
                            return Err(dup("factor cost"));
                        }
                        if rest2.trim().is_empty() {
                            return Err(err(line, col2, "expected an expression"));
                        }
                        cand.factor_cost = Some(src(line, col2, rest2));
                    }
                    other => return Err(err(line, col, format!("expected `dyn` or `cost` after `factor`, found `{other}`"))),
                }
            }
            _ => {
                let Some(cand) = raw.candidates.last_mut() else {
                    return Err(err(line, kcol, format!("unexpected `{kw}`")));
                };
                let (lhs, rhs) = assignment(line, content, 1, false)?;
                if lhs.text == "qtilde" {
                    if cand.qtilde.replace(rhs).is_some() {
                        return Err(dup("qtilde"));
                    }
                } else if let Some(i) = indexed(&lhs.text, "x") {
                    if cand.xs.insert(i, rhs).is_some() {
                        return Err(dup(&lhs.text));
                    }
                } else if let Some(i) = indexed(&lhs.text, "y") {
                    if cand.ys.insert(i, rhs).is_some() {
                        return Err(dup(&lhs.text));
                    }
                } else {
                    return Err(err(line, lhs.col, format!("expected `xI`, `yI` or `qtilde`, found `{}`", lhs.text)));
                }
            }
        }
    }
    Ok(raw)
}

fn expr(s: &Src, frame: &CoordinateFrame) -> Result<Expr, FormatError> {
    parse_expression(&s.text, frame).map_err(|e| {
        let col = match &e {
            ExprError::Syntax { pos, .. } => s.col + pos,
            ExprError::UnknownSymbol(name) => s.col + find_word(&s.text, name).unwrap_or(0),
            _ => s.col,
        };
        err(s.line, col, e.to_string())
    })
}

fn find_word(text: &str, w: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(k) = text[from..].find(w) {
        let at = from + k;
        let before = at == 0 || !bytes[at - 1].is_ascii_alphanumeric();
        let end = at + w.len();
        let after = end == text.len() || !bytes[end].is_ascii_alphanumeric();
        if before && after {
            return Some(at);
        }
        from = end;
    }
    None
}

fn contiguous(map: &BTreeMap<usize, Src>) -> bool {
    map.keys().copied().eq(1..=map.len())
}

pub fn parse_system_file(text: &str) -> Result<SystemFile, FormatError> {
    let raw = lex_lines(text)?;
    let Some((sys_line, name)) = raw.system.clone() else {
        if text.lines().all(|l| l.split('#').next().unwrap_or("").trim().is_empty()) {
            return Err(err(1, 1, "empty file: expected a `system` line"));
        }
        return Err(err(1, 1, "missing `system` line"));
    };
    let (st_line, states) = raw.states.clone().ok_or_else(|| err(sys_line, 1, "missing `states` line"))?;
    let controls = raw.controls.clone().map(|c| c.1).unwrap_or_default();
    if raw.dyns.len() != states.len() {
        let at = raw.dyns.last().map_or(st_line, |d| d.0.line);
        return Err(err(
            at,
            1,
            format!("dynamics/state count mismatch: {} dyn lines for {} states", raw.dyns.len(), states.len()),
        ));
    }
    let n = states.len();
    let costates = costates_for(n);
    let mut frame = CoordinateFrame::new();
    for s in &states {
        let sym = Symbol::new(&s.text);
        if costates.contains(&sym) || !frame.push(sym, Role::State) {
            return Err(err(s.line, s.col, format!("state name `{}` is reserved or repeated", s.text)));
        }
    }
    for c in &controls {
        if costates.contains(&Symbol::new(&c.text)) || !frame.push(Symbol::new(&c.text), Role::Control) {
            return Err(err(c.line, c.col, format!("control name `{}` is reserved or repeated", c.text)));
        }
    }
    let mut dynamics: Vec<Option<Expr>> = vec![None; n];
    for (lhs, rhs) in &raw.dyns {
        let Some(i) = states.iter().position(|s| s.text == lhs.text) else {
            return Err(err(lhs.line, lhs.col, format!("`{}` is not a state", lhs.text)));
        };
        if dynamics[i].is_some() {
            return Err(err(lhs.line, lhs.col, format!("duplicate dynamics for `{}`", lhs.text)));
        }
        dynamics[i] = Some(expr(rhs, &frame)?);
    }
    let cost_src = raw.cost.as_ref().ok_or_else(|| err(sys_line, 1, "missing `cost` line"))?;
    let cost = expr(cost_src, &frame)?;
    let state_frame = CoordinateFrame::new().with(states.iter().map(|s| Symbol::new(&s.text)), Role::State);
    let charts = raw.charts.iter().map(|c| expr(c, &state_frame)).collect::<Result<Vec<_>, _>>()?;
    let system = LagrangianSystem::new(
        name,
        states.iter().map(|s| Symbol::new(&s.text)).collect(),
        controls.iter().map(|s| Symbol::new(&s.text)).collect(),
        dynamics.into_iter().map(|d| d.expect("every state has dynamics")).collect(),
        cost,
        charts,
    )
    .map_err(|e| err(sys_line, 1, e.to_string()))?;

    let canonical = system.canonical_frame();
    let synthesis = if raw.synth.is_empty() {
        None
    } else {
        let mut values = vec![None; system.m()];
        for (lhs, rhs) in &raw.synth {
            let Some(k) = system.controls.iter().position(|u| u.name() == lhs.text) else {
                return Err(err(lhs.line, lhs.col, format!("`{}` is not a control", lhs.text)));
            };
            values[k] = Some(expr(rhs, &canonical)?);
        }
        if values.iter().any(Option::is_none) {
            return Err(err(raw.synth[0].0.line, 1, "`synth` must give every control"));
        }
        Some(Synthesis::user_supplied(system.controls.clone(), values.into_iter().flatten().collect()))
    };

    let mut candidates = Vec::with_capacity(raw.candidates.len());
    for rc in &raw.candidates {
        if rc.xs.is_empty() || rc.xs.len() != rc.ys.len() || !contiguous(&rc.xs) || !contiguous(&rc.ys) {
            return Err(err(rc.line, 1, format!("candidate `{}` needs x1..xν and y1..yν with ν ≥ 1", rc.name)));
        }
        let nu = rc.xs.len();
        if nu > n {
            return Err(err(rc.line, 1, format!("candidate `{}` has ν = {nu} > n = {n}", rc.name)));
        }
        let xs = rc.xs.values().map(|s| expr(s, &canonical)).collect::<Result<Vec<_>, _>>()?;
        let ys = rc.ys.values().map(|s| expr(s, &canonical)).collect::<Result<Vec<_>, _>>()?;
        let mut c = FactorizationCandidate::new(rc.name.clone(), xs, ys).map_err(|e| err(rc.line, 1, e.to_string()))?;
        if let Some(q) = &rc.qtilde {
            c = c.with_qtilde(expr(q, &canonical)?);
        }
        if !rc.factor_dyn.is_empty() || rc.factor_cost.is_some() {
            let ffr = CoordinateFrame::new()
                .with((1..=nu).map(factor_y), Role::FactorState)
                .with((1..=nu).map(factor_v), Role::FactorControl);
            if rc.factor_dyn.len() != nu || !contiguous(&rc.factor_dyn) {
                return Err(err(rc.line, 1, format!("candidate `{}` needs `factor dyn` for y1..y{nu}", rc.name)));
            }
            let cost = rc
                .factor_cost
                .as_ref()
                .ok_or_else(|| err(rc.line, 1, format!("candidate `{}` lacks `factor cost`", rc.name)))?;
            let dynamics = rc.factor_dyn.values().map(|s| expr(s, &ffr)).collect::<Result<Vec<_>, _>>()?;
            c = c.with_declared(DeclaredFactor { dynamics, cost: expr(cost, &ffr)? });
        }
        candidates.push(c);
    }
    Ok(SystemFile { system, synthesis, candidates })
}

/// Candidate block for a factor system, suitable for appending to the
/// source file and verifying again.
pub fn render_candidate(name: &str, c: &FactorizationCandidate, qtilde: Option<&Expr>, fs: &FactorSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "candidate {name}");
    for (i, x) in c.xs.iter().enumerate() {
        let _ = writeln!(out, "{} = {x}", factor_x(i + 1));
    }
    for (i, y) in c.ys.iter().enumerate() {
        let _ = writeln!(out, "{} = {y}", factor_y(i + 1));
    }
    if let Some(q) = qtilde.or(c.qtilde.as_ref()) {
        let _ = writeln!(out, "qtilde = {q}");
    }
    for (y, f) in fs.ys.iter().zip(&fs.dynamics) {
        let _ = writeln!(out, "factor dyn {y}' = {f}");
    }
    let _ = writeln!(out, "factor cost {}", fs.cost);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: &str = "\
system e1
states q1 q2
controls u1 u2
dyn q1' = u1
dyn q2' = u2
cost q1*u1*u2 + q1*q2   # integrand
chart q1 > 0

candidate reduce1
x1 = 2*p2
y1 = q1^2
qtilde = 2*p2^2 + (4/3)*q1^3
factor dyn y1' = v1
factor cost (1/2)*v1^2 + (4/3)*y1^(3/2)
";

    #[test]
    fn parses_example_one() {
        let f = parse_system_file(E1).unwrap();
        assert_eq!(f.system.n(), 2);
        assert_eq!(f.system.m(), 2);
        assert_eq!(f.candidates.len(), 1);
        let c = f.candidate("reduce1").unwrap();
        assert_eq!(c.nu(), 1);
        assert!(c.declared.is_some());
        assert_eq!(f.system.charts, vec![Expr::var("q1")]);
    }

    #[test]
    fn count_mismatch() {
        let text = E1.replace("dyn q2' = u2", "dyn q2' = u2\ndyn q3' = u1");
        let e = parse_system_file(&text).unwrap_err();
        assert!(e.message.contains("dynamics/state count mismatch"), "{e}");
    }

    #[test]
    fn empty_and_positions() {
        assert!(parse_system_file("").unwrap_err().message.contains("empty"));
        assert!(parse_system_file("# only a comment\n").unwrap_err().message.contains("empty"));
        let e = parse_system_file(&E1.replace("cost q1*u1*u2", "cost q1*w1*u2")).unwrap_err();
        assert_eq!((e.line, e.col), (6, 9));
        let e = parse_system_file(&E1.replace("y1 = q1^2", "y1 = q1^^2")).unwrap_err();
        assert_eq!((e.line, e.col), (11, 9));
    }

    #[test]
    fn rejects_bad_blocks() {
        assert!(parse_system_file(&E1.replace("y1 = q1^2\n", "")).is_err());
        assert!(parse_system_file(&E1.replace("x1 = 2*p2", "z1 = 2*p2")).is_err());
        assert!(parse_system_file(&E1.replace("chart q1 > 0", "chart q1 < 0")).is_err());
        assert!(parse_system_file(&format!("{E1}\nstates q9\n")).is_err());
    }
}
