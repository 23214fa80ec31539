//! Line-oriented model files and DOT export.
//!
//! ```text
//! # durcsp model v1
//! initial 0
//! truncated false
//! state 0 {}
//! state 1 {e0:a}
//! trans 0 1 a e0 {} [0 <= c_e0 <= 4] {c_e0}
//! ```

use std::collections::BTreeSet;
use std::fmt::Write;

use super::{fmt_events, CtsState, CtsTransition, EventMap, TimedCts};
use crate::constraint::{Clock, Constraint};
use crate::opsem::FormatError;
use crate::opsem::trace::{body_lines, parse_action, parse_event};

pub const MODEL_HEADER: &str = "# durcsp model v1";

pub fn render_model(m: &TimedCts) -> String {
    let mut out = format!("{MODEL_HEADER}\ninitial {}\ntruncated {}\n", m.initial, m.truncated);
    for s in &m.states {
        let _ = writeln!(out, "state {} {}", s.id, fmt_events(&s.events));
    }
    for t in &m.transitions {
        let resets: Vec<String> = t.resets.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            out,
            "trans {} {} {} {} {} [{}] {{{}}}",
            t.source,
            t.target,
            t.label,
            t.event,
            fmt_events(&t.causes),
            t.guard.to_ascii(),
            resets.join(",")
        );
    }
    out
}

fn parse_events(line: usize, s: &str) -> Result<EventMap, FormatError> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| FormatError::new(line, format!("bad event set `{s}`")))?;
    let mut out = EventMap::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, a) = item
            .split_once(':')
            .ok_or_else(|| FormatError::new(line, format!("bad event `{item}`")))?;
        out.insert(parse_event(line, x)?, parse_action(a));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, FormatError> {
    s.parse().map_err(|_| FormatError::new(line, format!("bad number `{s}`")))
}

/// Splits off a bracketed group, returning it with its brackets and the rest.
fn take_group(line: usize, s: &str, open: char, close: char) -> Result<(&str, &str), FormatError> {
    let s = s.trim_start();
    if !s.starts_with(open) {
        return Err(FormatError::new(line, format!("expected `{open}`")));
    }
    let end = s.find(close).ok_or_else(|| FormatError::new(line, format!("missing `{close}`")))?;
    Ok((&s[..=end], &s[end + 1..]))
}

pub fn parse_model(text: &str) -> Result<TimedCts, FormatError> {
    let mut m = TimedCts::default();
    for (n, line) in body_lines(text, MODEL_HEADER)? {
        let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
        match kw {
            "initial" => m.initial = number(n, rest.trim())?,
            "truncated" => {
                m.truncated = match rest.trim() {
                    "true" => true,
                    "false" => false,
                    other => return Err(FormatError::new(n, format!("bad flag `{other}`"))),
                }
            }
            "state" => {
                let (id, set) = rest.trim().split_once(' ').unwrap_or((rest.trim(), "{}"));
                let id: usize = number(n, id)?;
                if id != m.states.len() {
                    return Err(FormatError::new(n, "states must be listed in order"));
                }
                m.states.push(CtsState { id, events: parse_events(n, set.trim())?, config: None });
            }
            "trans" => {
                let mut words = rest.trim().splitn(5, ' ');
                let mut word = || words.next().ok_or_else(|| FormatError::new(n, "truncated transition"));
                let source = number(n, word()?)?;
                let target = number(n, word()?)?;
                let label = parse_action(word()?);
                let event = parse_event(n, word()?)?;
                let tail = word()?;
                let (causes, tail) = take_group(n, tail, '{', '}')?;
                let (guard, tail) = take_group(n, tail, '[', ']')?;
                let (resets, tail) = take_group(n, tail, '{', '}')?;
                if !tail.trim().is_empty() {
                    return Err(FormatError::new(n, format!("trailing `{}`", tail.trim())));
                }
                let guard: Constraint = guard[1..guard.len() - 1]
                    .parse()
                    .map_err(|e| FormatError::new(n, format!("{e}")))?;
                let mut reset_set = BTreeSet::new();
                for c in resets[1..resets.len() - 1].split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let ev = c.strip_prefix("c_").ok_or_else(|| FormatError::new(n, format!("bad clock `{c}`")))?;
                    reset_set.insert(Clock(parse_event(n, ev)?));
                }
                m.transitions.push(CtsTransition {
                    source,
                    target,
                    label,
                    causes: parse_events(n, causes)?,
                    event,
                    guard,
                    resets: reset_set,
                });
            }
            other => return Err(FormatError::new(n, format!("unknown record `{other}`"))),
        }
    }
    Ok(m)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: states labelled by `ψ`, edges by `_{E} a_x [guard] {resets}`
/// with guards in plain text.
pub fn to_dot(m: &TimedCts) -> String {
    let mut out = String::from("digraph tcts {\n  rankdir=LR;\n  node [shape=box];\n");
    for s in &m.states {
        let label = if s.events.is_empty() { "∅".to_string() } else { fmt_events(&s.events) };
        let shape = if s.id == m.initial { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  s{} [label=\"s{}: {}\"{shape}];", s.id, s.id, escape(&label));
    }
    for t in &m.transitions {
        let resets: Vec<String> = t.resets.iter().map(|c| c.to_string()).collect();
        let label = format!(
            "_{} {}_{} [{}] {{{}}}",
            fmt_events(&t.causes),
            t.label,
            t.event,
            t.guard.to_ascii(),
            resets.join(",")
        );
        let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", t.source, t.target, escape(&label));
    }
    out.push_str("}\n");
    out
}
