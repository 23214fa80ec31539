//! Abstract syntax of duration-CSP with the refinement operator, plus the
//! surface parser, renderer and validator.

mod parser;
mod render;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Duration;

pub use parser::{parse_process, parse_spec, parse_spec_with, Located, ParseError, Position};
pub use render::{render, render_spec};
pub use validate::{validate, Diagnostic, DiagnosticKind};

/// Names that can never be used as user actions.
pub const RESERVED_NAMES: &[&str] = &["delta", "δ", "i"];

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Visible(String),
    /// Successful termination.
    Delta,
    /// The hidden action.
    Internal,
}

impl Action {
    pub fn visible(name: impl Into<String>) -> Self {
        Action::Visible(name.into())
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, Action::Delta)
    }

    pub fn is_visible(&self) -> bool {
        matches!(self, Action::Visible(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Visible(name) => f.write_str(name),
            Action::Delta => f.write_str("delta"),
            Action::Internal => f.write_str("i"),
        }
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Synchronisation or hiding set. Never contains `delta` or `i`.
pub type ActionSet = BTreeSet<Action>;

pub fn action_set<I, S>(names: I) -> ActionSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(|n| Action::Visible(n.into())).collect()
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Stop,
    Skip(Duration),
    Delay(Duration, Arc<Process>),
    Prefix(Action, Duration, Arc<Process>),
    Choice(Arc<Process>, Arc<Process>),
    Par(Arc<Process>, ActionSet, Arc<Process>),
    Hide(Arc<Process>, ActionSet),
    Interrupt(Arc<Process>, Arc<Process>),
    /// `rho a := by in body`: every occurrence of `a` in `body` is replaced by `by`.
    Refine(Action, Arc<Process>, Arc<Process>),
    Ref(String),
}

impl Process {
    pub fn skip(bound: Duration) -> Self {
        Process::Skip(bound)
    }

    pub fn delay(d: Duration, body: Process) -> Self {
        Process::Delay(d, Arc::new(body))
    }

    pub fn prefix(a: &str, bound: Duration, cont: Process) -> Self {
        Process::Prefix(Action::visible(a), bound, Arc::new(cont))
    }

    pub fn choice(l: Process, r: Process) -> Self {
        Process::Choice(Arc::new(l), Arc::new(r))
    }

    pub fn par(l: Process, sync: ActionSet, r: Process) -> Self {
        Process::Par(Arc::new(l), sync, Arc::new(r))
    }

    pub fn interleave(l: Process, r: Process) -> Self {
        Process::par(l, ActionSet::new(), r)
    }

    pub fn hide(body: Process, set: ActionSet) -> Self {
        Process::Hide(Arc::new(body), set)
    }

    pub fn interrupt(l: Process, r: Process) -> Self {
        Process::Interrupt(Arc::new(l), Arc::new(r))
    }

    pub fn refine(a: &str, by: Process, body: Process) -> Self {
        Process::Refine(Action::visible(a), Arc::new(by), Arc::new(body))
    }

    pub fn reference(name: &str) -> Self {
        Process::Ref(name.to_string())
    }

    /// Every action occurring syntactically (prefixes, sync/hide sets, refined actions).
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        self.collect_actions(&mut out);
        out
    }

    fn collect_actions(&self, out: &mut BTreeSet<Action>) {
        match self {
            Process::Stop | Process::Skip(_) | Process::Ref(_) => {}
            Process::Delay(_, p) => p.collect_actions(out),
            Process::Prefix(a, _, p) => {
                out.insert(a.clone());
                p.collect_actions(out);
            }
            Process::Choice(l, r) | Process::Interrupt(l, r) => {
                l.collect_actions(out);
                r.collect_actions(out);
            }
            Process::Par(l, set, r) => {
                out.extend(set.iter().cloned());
                l.collect_actions(out);
                r.collect_actions(out);
            }
            Process::Hide(p, set) => {
                out.extend(set.iter().cloned());
                p.collect_actions(out);
            }
            Process::Refine(a, by, body) => {
                out.insert(a.clone());
                by.collect_actions(out);
                body.collect_actions(out);
            }
        }
    }

    pub fn contains_refine(&self) -> bool {
        match self {
            Process::Refine(..) => true,
            Process::Stop | Process::Skip(_) | Process::Ref(_) => false,
            Process::Delay(_, p) | Process::Prefix(_, _, p) | Process::Hide(p, _) => {
                p.contains_refine()
            }
            Process::Choice(l, r) | Process::Par(l, _, r) | Process::Interrupt(l, r) => {
                l.contains_refine() || r.contains_refine()
            }
        }
    }

    /// Names referenced through `Ref`.
    pub fn references(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |p| {
            if let Process::Ref(n) = p {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Number of operator nodes (everything but `stop`, `skip` and references).
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |p| {
            if !matches!(p, Process::Stop | Process::Skip(_) | Process::Ref(_)) {
                n += 1;
            }
        });
        n
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&Process)) {
        f(self);
        match self {
            Process::Stop | Process::Skip(_) | Process::Ref(_) => {}
            Process::Delay(_, p) | Process::Prefix(_, _, p) | Process::Hide(p, _) => p.walk(f),
            Process::Choice(l, r)
            | Process::Par(l, _, r)
            | Process::Interrupt(l, r)
            | Process::Refine(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
        }
    }

    /// Every rational constant in the term (bounds and delays).
    pub fn constants(&self) -> Vec<Duration> {
        let mut out = Vec::new();
        self.walk(&mut |p| match p {
            Process::Skip(d) | Process::Delay(d, _) | Process::Prefix(_, d, _) => out.push(*d),
            _ => {}
        });
        out
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("no duration for action `{0}`")]
    UnknownDuration(Action),
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
}

/// A named collection of process definitions with a duration table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spec {
    pub definitions: BTreeMap<String, Process>,
    pub durations: BTreeMap<String, Duration>,
    pub root: String,
}

impl Spec {
    /// A spec with a single definition `main` and the given duration table.
    pub fn single(process: Process, durations: &[(&str, Duration)]) -> Self {
        Spec {
            definitions: BTreeMap::from([("main".to_string(), process)]),
            durations: durations
                .iter()
                .map(|(n, d)| (n.to_string(), *d))
                .collect(),
            root: "main".to_string(),
        }
    }

    pub fn root_process(&self) -> Result<&Process, SpecError> {
        self.definition(&self.root)
    }

    pub fn definition(&self, name: &str) -> Result<&Process, SpecError> {
        self.definitions
            .get(name)
            .ok_or_else(|| SpecError::UnknownProcess(name.to_string()))
    }

    /// `delta` lasts zero time; `i` never labels an event so it has no entry.
    pub fn duration(&self, action: &Action) -> Result<Duration, SpecError> {
        match action {
            Action::Delta => Ok(Duration::ZERO),
            Action::Visible(name) => self
                .durations
                .get(name)
                .copied()
                .ok_or_else(|| SpecError::UnknownDuration(action.clone())),
            Action::Internal => Err(SpecError::UnknownDuration(action.clone())),
        }
    }

    /// Every rational constant of the spec, including the duration table.
    pub fn constants(&self) -> Vec<Duration> {
        let mut out: Vec<Duration> = self.durations.values().copied().collect();
        for p in self.definitions.values() {
            out.extend(p.constants());
        }
        out
    }

    /// Half the gcd of all non-zero constants (1 when there are none).
    pub fn default_grid(&self) -> Duration {
        let g = self
            .constants()
            .into_iter()
            .fold(Duration::ZERO, |acc, c| acc.gcd(c));
        if g.is_zero() {
            Duration::from_int(1)
        } else {
            g.half()
        }
    }
}
