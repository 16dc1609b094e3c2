//! Line-based text formats for models, traces, risk vectors and result rows.
//!
//! ```text
//! mdp airport
//! state RD2 RD1
//! observation R_o M_o
//! init RD2 1
//! action RD2 w p
//! trans RD2 p RD1 1/2
//! obs RD2 R_o 0.5
//! sobs s A z 1
//! label crash MD0
//! risk RD2 13/20
//! ```
//!
//! States must be declared with `state` before use; actions and observations
//! are declared implicitly on first mention.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, MdpBuilder};
use crate::rational::{format_decimal, format_rational, parse_rational, Rational};
use crate::risk::RiskVector;

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
}

/// Drops a trailing comment. `#` opens one only at the start of a token, so
/// names such as `s0#A` survive.
fn strip_comment(line: &str) -> &str {
    let mut prev_blank = true;
    for (i, ch) in line.char_indices() {
        if ch == '#' && prev_blank {
            return &line[..i];
        }
        prev_blank = ch.is_whitespace();
    }
    line
}

fn tokenize(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = strip_comment(raw);
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in content.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s, &content[s..pos]));
                }
            } else if start.is_none() {
                start = Some(pos);
            }
        }
        if let Some(s) = start {
            tokens.push((s, &content[s..]));
        }
        if tokens.is_empty() {
            None
        } else {
            let tokens = tokens
                .into_iter()
                .map(|(byte, tok)| (content[..byte].chars().count() + 1, tok))
                .collect();
            Some(Line { number: i + 1, tokens })
        }
    })
}

fn syntax(line: &Line, index: usize, message: impl Into<String>) -> Error {
    let column = line
        .tokens
        .get(index)
        .map(|t| t.0)
        .unwrap_or_else(|| line.tokens.last().map(|(c, t)| c + t.chars().count()).unwrap_or(1));
    Error::Syntax { line: line.number, column, message: message.into() }
}

fn arity(line: &Line, exact: Option<usize>, min: usize) -> Result<()> {
    let n = line.tokens.len();
    match exact {
        Some(k) if n != k => Err(syntax(line, n.min(k), format!("expected {} fields, found {}", k, n))),
        None if n < min => Err(syntax(line, n, format!("expected at least {} fields", min))),
        _ => Ok(()),
    }
}

fn rational_at(line: &Line, index: usize) -> Result<Rational> {
    parse_rational(line.tokens[index].1)
        .ok_or_else(|| syntax(line, index, format!("invalid number `{}`", line.tokens[index].1)))
}

fn state_at(states: &HashMap<String, usize>, line: &Line, index: usize) -> Result<usize> {
    let name = line.tokens[index].1;
    states
        .get(name)
        .copied()
        .ok_or_else(|| Error::UndeclaredSymbol { name: name.to_string(), line: line.number })
}

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<Mdp> {
    parse_model_unchecked(text)?.validated()
}

/// Parses without running validation; syntax and symbol errors are still
/// reported.
pub fn parse_model_unchecked(text: &str) -> Result<Mdp> {
    let mut b = MdpBuilder::new();
    let mut states = HashMap::new();
    let mut seen_header = false;
    let mut seen_init = HashSet::new();
    let mut seen_trans = HashSet::new();
    let mut seen_obs = HashSet::new();
    let mut seen_sobs = HashSet::new();
    let mut seen_risk = HashSet::new();
    for line in tokenize(text) {
        let keyword = line.tokens[0].1;
        if !seen_header {
            if keyword != "mdp" {
                return Err(syntax(&line, 0, "model must start with an `mdp` header"));
            }
            arity(&line, None, 1)?;
            if line.tokens.len() > 2 {
                return Err(syntax(&line, 2, "unexpected field after model name"));
            }
            seen_header = true;
            continue;
        }
        match keyword {
            "mdp" => return Err(Error::DuplicateDeclaration { what: "mdp header".into(), line: line.number }),
            "state" => {
                arity(&line, None, 2)?;
                for &(_, name) in &line.tokens[1..] {
                    if states.contains_key(name) {
                        return Err(Error::DuplicateDeclaration {
                            what: format!("state {name}"),
                            line: line.number,
                        });
                    }
                    states.insert(name.to_string(), b.state(name));
                }
            }
            "observation" => {
                arity(&line, None, 2)?;
                for &(_, name) in &line.tokens[1..] {
                    b.observation(name);
                }
            }
            "init" => {
                arity(&line, Some(3), 3)?;
                let s = state_at(&states, &line, 1)?;
                if !seen_init.insert(s) {
                    return Err(Error::DuplicateDeclaration { what: format!("init {}", line.tokens[1].1), line: line.number });
                }
                let p = rational_at(&line, 2)?;
                b.init(s, p);
            }
            "action" => {
                arity(&line, None, 3)?;
                let s = state_at(&states, &line, 1)?;
                for &(_, name) in &line.tokens[2..] {
                    let a = b.action(name);
                    b.enable(s, a);
                }
            }
            "trans" => {
                arity(&line, Some(5), 5)?;
                let s = state_at(&states, &line, 1)?;
                let a = b.action(line.tokens[2].1);
                let t = state_at(&states, &line, 3)?;
                let p = rational_at(&line, 4)?;
                if !seen_trans.insert((s, a, t)) {
                    return Err(Error::DuplicateDeclaration {
                        what: format!("trans {} {} {}", line.tokens[1].1, line.tokens[2].1, line.tokens[3].1),
                        line: line.number,
                    });
                }
                b.trans(s, a, t, p);
            }
            "obs" => {
                arity(&line, Some(4), 4)?;
                let s = state_at(&states, &line, 1)?;
                let z = b.observation(line.tokens[2].1);
                let p = rational_at(&line, 3)?;
                if !seen_obs.insert((s, z)) {
                    return Err(Error::DuplicateDeclaration {
                        what: format!("obs {} {}", line.tokens[1].1, line.tokens[2].1),
                        line: line.number,
                    });
                }
                b.obs(s, z, p);
            }
            "sobs" => {
                arity(&line, Some(5), 5)?;
                let s = state_at(&states, &line, 1)?;
                let a = b.action(line.tokens[2].1);
                let z = b.observation(line.tokens[3].1);
                let p = rational_at(&line, 4)?;
                if !seen_sobs.insert((s, a, z)) {
                    return Err(Error::DuplicateDeclaration {
                        what: format!("sobs {} {} {}", line.tokens[1].1, line.tokens[2].1, line.tokens[3].1),
                        line: line.number,
                    });
                }
                b.sobs(s, a, z, p);
            }
            "label" => {
                arity(&line, None, 2)?;
                let name = line.tokens[1].1;
                b.declare_label(name);
                for i in 2..line.tokens.len() {
                    let s = state_at(&states, &line, i)?;
                    b.label(name, s);
                }
            }
            "risk" => {
                arity(&line, Some(3), 3)?;
                let s = state_at(&states, &line, 1)?;
                if !seen_risk.insert(s) {
                    return Err(Error::DuplicateDeclaration { what: format!("risk {}", line.tokens[1].1), line: line.number });
                }
                let v = rational_at(&line, 2)?;
                b.risk(s, v);
            }
            other => return Err(syntax(&line, 0, format!("unknown keyword `{other}`"))),
        }
    }
    if !seen_header {
        return Err(Error::Syntax { line: 1, column: 1, message: "empty model".into() });
    }
    Ok(b.build_unchecked())
}

impl Mdp {
    /// Runs validation, returning the model unchanged if it passes.
    pub fn validated(self) -> Result<Mdp> {
        let diags = crate::mdp::validate(&self);
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(Error::Validation(diags))
        }
    }
}

/// Canonical text form. States, choices and entries come out in id order, so
/// serializing a re-parsed model reproduces the same text.
pub fn serialize_model(m: &Mdp) -> String {
    let mut out = String::from("mdp\n");
    let _ = writeln!(out, "state {}", m.state_names().join(" "));
    if m.num_observations() > 0 {
        let _ = writeln!(out, "observation {}", m.observation_names().join(" "));
    }
    for (s, p) in m.init().iter() {
        let _ = writeln!(out, "init {} {}", m.state_name(s), format_rational(p));
    }
    for s in 0..m.num_states() {
        let name = m.state_name(s);
        let choices = m.choices(s);
        if !choices.is_empty() {
            let acts: Vec<&str> = choices.iter().map(|c| m.action_name(c.action)).collect();
            let _ = writeln!(out, "action {} {}", name, acts.join(" "));
        }
        for c in choices {
            let a = m.action_name(c.action);
            for (t, p) in c.succ.iter() {
                let _ = writeln!(out, "trans {} {} {} {}", name, a, m.state_name(t), format_rational(p));
            }
            if let Some(o) = &c.obs {
                for (z, p) in o.iter() {
                    let _ = writeln!(out, "sobs {} {} {} {}", name, a, m.observation_name(z), format_rational(p));
                }
            }
        }
        if let Some(o) = m.state_obs(s) {
            for (z, p) in o.iter() {
                let _ = writeln!(out, "obs {} {} {}", name, m.observation_name(z), format_rational(p));
            }
        }
    }
    for (label, set) in m.labels() {
        let names: Vec<&str> = set.iter().map(|&s| m.state_name(s)).collect();
        if names.is_empty() {
            let _ = writeln!(out, "label {label}");
        } else {
            let _ = writeln!(out, "label {} {}", label, names.join(" "));
        }
    }
    if let Some(r) = m.risk() {
        for (s, v) in r.values().iter().enumerate() {
            let _ = writeln!(out, "risk {} {}", m.state_name(s), format_rational(v));
        }
    }
    out
}

/// Whitespace-separated observation names or raw ids. Names take precedence
/// over ids.
pub fn parse_trace(text: &str, m: &Mdp) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let content = strip_comment(line);
        for tok in content.split_whitespace() {
            let id = m
                .observation_id(tok)
                .or_else(|| tok.parse::<usize>().ok().filter(|&i| i < m.num_observations()))
                .ok_or_else(|| Error::UnknownObservation { name: tok.to_string(), position: out.len() })?;
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(out)
}

pub fn serialize_trace(trace: &[usize], m: &Mdp) -> String {
    let names: Vec<&str> = trace.iter().map(|&z| m.observation_name(z)).collect();
    format!("{}\n", names.join(" "))
}

/// `risk <state> <value>` lines; unlisted states get 0.
pub fn parse_risk_file(text: &str, m: &Mdp) -> Result<RiskVector> {
    let mut values: Vec<Option<Rational>> = vec![None; m.num_states()];
    for line in tokenize(text) {
        if line.tokens[0].1 != "risk" {
            return Err(syntax(&line, 0, "expected `risk <state> <value>`"));
        }
        arity(&line, Some(3), 3)?;
        let name = line.tokens[1].1;
        let s = m
            .state_id(name)
            .ok_or_else(|| Error::UndeclaredSymbol { name: name.to_string(), line: line.number })?;
        let v = rational_at(&line, 2)?;
        if v < Rational::from_integer(0.into()) {
            return Err(Error::InvalidRiskSpec(format!("negative risk for {name}")));
        }
        if values[s].replace(v).is_some() {
            return Err(Error::DuplicateDeclaration { what: format!("risk {name}"), line: line.number });
        }
    }
    Ok(RiskVector::new(
        values.into_iter().map(|v| v.unwrap_or_else(|| Rational::from_integer(0.into()))).collect(),
    ))
}

pub fn serialize_risk(r: &RiskVector, m: &Mdp) -> String {
    let mut out = String::new();
    for (s, v) in r.values().iter().enumerate() {
        let _ = writeln!(out, "risk {} {}", m.state_name(s), format_rational(v));
    }
    out
}

pub const CSV_HEADER: [&str; 8] = ["id", "method", "trace_len", "time_ms", "beliefs", "dim", "unrolled_states", "risk"];

/// Average and maximum of a per-step count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub avg: f64,
    pub max: usize,
}

impl Stat {
    pub fn single(v: usize) -> Self {
        Stat { avg: v as f64, max: v }
    }

    pub fn from_counts(counts: &[usize]) -> Option<Self> {
        let max = *counts.iter().max()?;
        let avg = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        Some(Stat { avg, max })
    }

    fn render(&self) -> String {
        if self.avg == self.max as f64 {
            self.max.to_string()
        } else {
            format!("{:.2}/{}", self.avg, self.max)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RiskCell {
    Value(Rational),
    Interval(f64, f64),
    Timeout,
    Impossible,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub id: String,
    pub method: String,
    pub trace_len: usize,
    pub time_ms: f64,
    pub beliefs: Option<Stat>,
    pub dim: Option<Stat>,
    pub unrolled_states: Option<usize>,
    pub risk: RiskCell,
}

impl ResultRow {
    pub fn timed_out(&self) -> bool {
        self.risk == RiskCell::Timeout
    }

    pub fn fields(&self, exact: bool, with_time: bool) -> [String; 8] {
        let opt = |s: &Option<Stat>| s.map(|s| s.render()).unwrap_or_default();
        let risk = match &self.risk {
            RiskCell::Value(v) if exact => format_rational(v),
            RiskCell::Value(v) => format_decimal(v, 12),
            RiskCell::Interval(lo, hi) => format!("{}..{}", format_bound(*lo), format_bound(*hi)),
            RiskCell::Timeout => "timeout".to_string(),
            RiskCell::Impossible => "impossible".to_string(),
            RiskCell::Failed(msg) => format!("error: {msg}"),
        };
        [
            self.id.clone(),
            self.method.clone(),
            self.trace_len.to_string(),
            if with_time { format!("{:.3}", self.time_ms) } else { String::new() },
            opt(&self.beliefs),
            opt(&self.dim),
            self.unrolled_states.map(|n| n.to_string()).unwrap_or_default(),
            risk,
        ]
    }
}

/// 12 significant digits like exact values; subnormal-scale bounds, which
/// only appear as one-ulp padding around zero, in exponent form.
fn format_bound(x: f64) -> String {
    match Rational::from_float(x) {
        Some(v) if x == 0.0 || x.abs() >= 1e-12 => format_decimal(&v, 12),
        _ => format!("{x:.11e}"),
    }
}

/// CSV with the fixed header. `exact` prints risks as `n/d`; otherwise as
/// decimals with 12 significant digits.
pub fn serialize_results(rows: &[ResultRow], exact: bool) -> String {
    write_results(rows, exact, true)
}

/// Same as [`serialize_results`] with the timing column blanked, for
/// byte-level determinism checks.
pub fn serialize_results_untimed(rows: &[ResultRow], exact: bool) -> String {
    write_results(rows, exact, false)
}

fn write_results(rows: &[ResultRow], exact: bool, with_time: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.fields(exact, with_time)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
