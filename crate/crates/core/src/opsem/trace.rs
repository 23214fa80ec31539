//! Schedule replay and the line-oriented trace format.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{ActionStep, Refusal, Semantics, SemanticsError};
use crate::config::{Event, TimedConfig, TimedEvent, TimedEventSet};
use crate::syntax::Action;
use crate::time::Duration;

pub const TRACE_HEADER: &str = "# durcsp trace v1";
pub const SCHEDULE_HEADER: &str = "# durcsp schedule v1";

/// One instruction of a schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleEntry {
    /// Take the n-th enabled action (zero based, in `enabled_actions` order).
    Pick(usize),
    Wait(Duration),
}

/// One transition of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Act(ActionStep),
    Delay(Duration),
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Delay(d) => write!(f, "DELAY {d}"),
            Move::Act(s) => {
                let causes: Vec<String> = s.causes.iter().map(|e| e.to_string()).collect();
                write!(f, "ACT {{{}}} {} {}", causes.join(","), s.action, s.event)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: TimedConfig,
    pub steps: Vec<(Move, TimedConfig)>,
}

impl Trace {
    pub fn last(&self) -> &TimedConfig {
        self.steps.last().map(|(_, c)| c).unwrap_or(&self.start)
    }

    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.steps.iter().map(|(m, _)| m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for m in self.moves() {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("step {step}: pick {index} out of range ({available} actions enabled)")]
    PickOutOfRange { step: usize, index: usize, available: usize },
    #[error("step {step}: delay {delay} refused: {refusal}")]
    DelayRefused { step: usize, delay: Duration, refusal: Refusal },
    #[error("step {step}: delay must be positive")]
    ZeroDelay { step: usize },
}

/// Replays a schedule from `start`.
pub fn run(sem: &Semantics<'_>, start: &TimedConfig, schedule: &[ScheduleEntry]) -> Result<Trace, RunError> {
    let mut trace = Trace { start: start.clone(), steps: Vec::new() };
    for (step, entry) in schedule.iter().enumerate() {
        let here = trace.last().clone();
        match entry {
            ScheduleEntry::Pick(index) => {
                let mut options = sem.enabled_actions(&here)?;
                let available = options.len();
                if *index >= available {
                    return Err(RunError::PickOutOfRange { step, index: *index, available });
                }
                let (s, next) = options.swap_remove(*index);
                trace.steps.push((Move::Act(s), next));
            }
            ScheduleEntry::Wait(d) => {
                if d.is_zero() {
                    return Err(RunError::ZeroDelay { step });
                }
                match sem.try_delay(&here, *d)? {
                    Ok(next) => trace.steps.push((Move::Delay(*d), next)),
                    Err(refusal) => return Err(RunError::DelayRefused { step, delay: *d, refusal }),
                }
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        FormatError { line, message: message.into() }
    }
}

/// Content lines with their 1-based numbers, after checking the header.
pub(crate) fn body_lines<'t>(
    text: &'t str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'t str)>, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(FormatError::new(1, format!("expected header `{header}`"))),
    }
    Ok(lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('#')))
}

fn parse_duration(line: usize, s: &str) -> Result<Duration, FormatError> {
    Duration::from_str(s).map_err(|e| FormatError::new(line, format!("bad duration `{s}`: {e}")))
}

/// Parses `PICK n` / `WAIT d` lines.
pub fn parse_schedule(text: &str) -> Result<Vec<ScheduleEntry>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in body_lines(text, SCHEDULE_HEADER)? {
        let (kw, arg) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let arg = arg.trim();
        out.push(match kw {
            "PICK" => ScheduleEntry::Pick(
                arg.parse().map_err(|_| FormatError::new(n, format!("bad index `{arg}`")))?,
            ),
            "WAIT" => ScheduleEntry::Wait(parse_duration(n, arg)?),
            other => return Err(FormatError::new(n, format!("unknown instruction `{other}`"))),
        });
    }
    Ok(out)
}

pub fn render_schedule(schedule: &[ScheduleEntry]) -> String {
    let mut out = format!("{SCHEDULE_HEADER}\n");
    for e in schedule {
        match e {
            ScheduleEntry::Pick(n) => out.push_str(&format!("PICK {n}\n")),
            ScheduleEntry::Wait(d) => out.push_str(&format!("WAIT {d}\n")),
        }
    }
    out
}

pub(crate) fn parse_action(s: &str) -> Action {
    match s {
        "i" => Action::Internal,
        "delta" | "δ" => Action::Delta,
        name => Action::visible(name),
    }
}

pub(crate) fn parse_event(line: usize, s: &str) -> Result<Event, FormatError> {
    s.strip_prefix('e')
        .and_then(|n| n.parse().ok())
        .map(Event)
        .ok_or_else(|| FormatError::new(line, format!("bad event `{s}`")))
}

fn parse_causes(line: usize, s: &str) -> Result<TimedEventSet, FormatError> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| FormatError::new(line, format!("bad cause set `{s}`")))?;
    let mut set = TimedEventSet::new();
    for item in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (item, shift) = match item.split_once("(-") {
            Some((head, rest)) => (head, Some(rest.trim_end_matches(')'))),
            None => (item, None),
        };
        let mut parts = item.splitn(3, ':');
        let (Some(ev), Some(act), Some(t)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(FormatError::new(line, format!("bad timed event `{item}`")));
        };
        let mut te = TimedEvent::new(parse_event(line, ev)?, parse_action(act), parse_duration(line, t)?);
        if let Some(sh) = shift {
            te.shift = parse_duration(line, sh)?;
        }
        set.insert(te);
    }
    Ok(set)
}

/// Parses the moves of a trace file.
pub fn parse_trace_moves(text: &str) -> Result<Vec<Move>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in body_lines(text, TRACE_HEADER)? {
        if let Some(d) = line.strip_prefix("DELAY ") {
            out.push(Move::Delay(parse_duration(n, d.trim())?));
        } else if let Some(rest) = line.strip_prefix("ACT ") {
            let close = rest.find('}').ok_or_else(|| FormatError::new(n, "missing `}`"))?;
            let causes = parse_causes(n, &rest[..=close])?;
            let mut tail = rest[close + 1..].split_whitespace();
            let (Some(label), Some(ev), None) = (tail.next(), tail.next(), tail.next()) else {
                return Err(FormatError::new(n, "expected `ACT {causes} label event`"));
            };
            out.push(Move::Act(ActionStep { causes, action: parse_action(label), event: parse_event(n, ev)? }));
        } else {
            return Err(FormatError::new(n, format!("unrecognised line `{line}`")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::initial_config;
    use crate::opsem::TimeMode;
    use crate::syntax::{parse_process, Process, Spec};

    fn q_spec() -> Spec {
        Spec::single(
            parse_process("a{2};stop ||| b{3};stop").unwrap(),
            &[("a", Duration::from_int(2)), ("b", Duration::from_int(3))],
        )
    }

    #[test]
    fn replay_interleaving() {
        let spec = q_spec();
        let sem = Semantics::new(&spec, TimeMode::Urgent);
        let start = initial_config(spec.root_process().unwrap());
        let sched = [ScheduleEntry::Pick(0), ScheduleEntry::Pick(0), ScheduleEntry::Wait(Duration::from_int(3))];
        let trace = run(&sem, &start, &sched).unwrap();
        assert_eq!(
            trace.to_text(),
            "# durcsp trace v1\nACT {} a e0\nACT {} b e1\nDELAY 3\n"
        );
        assert_eq!(trace.last().to_string(), "_{e0:a:3}[stop] |[ ]| _{e1:b:3}[stop]");
        let moves = parse_trace_moves(&trace.to_text()).unwrap();
        assert_eq!(moves, trace.moves().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn refused_delay_names_rule() {
        let spec = q_spec();
        let sem = Semantics::new(&spec, TimeMode::Urgent);
        let start = initial_config(spec.root_process().unwrap());
        let err = run(&sem, &start, &[ScheduleEntry::Wait(Duration::from_int(5))]).unwrap_err();
        assert!(err.to_string().contains("II.τ"), "{err}");
        let err = run(&sem, &start, &[ScheduleEntry::Pick(7)]).unwrap_err();
        assert!(matches!(err, RunError::PickOutOfRange { available: 2, .. }));
    }

    #[test]
    fn strict_finish_before_continuation() {
        let spec = Spec::single(
            Process::Stop,
            &[("a", Duration::from_int(2)), ("b", Duration::from_int(3))],
        );
        let sem = Semantics::new(&spec, TimeMode::Lazy);
        let start = initial_config(&parse_process("a{0};b{1};stop").unwrap());
        let at = run(&sem, &start, &[ScheduleEntry::Pick(0), ScheduleEntry::Wait(Duration::from_int(2))]).unwrap();
        assert!(sem.enabled_actions(at.last()).unwrap().is_empty());
        let past = [ScheduleEntry::Pick(0), ScheduleEntry::Wait(Duration::from_ratio(201, 100)), ScheduleEntry::Pick(0)];
        assert!(run(&sem, &start, &past).is_ok());
    }

    #[test]
    fn schedule_round_trip() {
        let s = vec![ScheduleEntry::Pick(1), ScheduleEntry::Wait(Duration::from_ratio(5, 2))];
        assert_eq!(parse_schedule(&render_schedule(&s)).unwrap(), s);
        assert!(parse_schedule("PICK 0\n").is_err());
    }

    #[test]
    fn causes_with_shift_parse() {
        let text = "# durcsp trace v1\nACT {e0:a:5/2(-1),e3:delta:0} i e4\n";
        let moves = parse_trace_moves(text).unwrap();
        let Move::Act(s) = &moves[0] else { panic!() };
        assert_eq!(s.causes.len(), 2);
        assert_eq!(s.action, Action::Internal);
        assert_eq!(moves[0].to_string(), "ACT {e0:a:5/2(-1),e3:delta:0} i e4");
    }
}
