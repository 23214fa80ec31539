//! Timed causal transition systems: data model, structural checks and run
//! semantics over `(state, clock valuation)` pairs.

mod compile;
mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::config::Event;
use crate::constraint::{Clock, ClockValuation, Constraint, ConstraintError};
use crate::syntax::{Action, Spec, SpecError};
use crate::time::Duration;

pub use compile::{compile, CompileError, CompileOptions, SymConfig, SymStep};
pub use format::{parse_model, render_model, to_dot, MODEL_HEADER};

/// Events with their actions, without timing.
pub type EventMap = BTreeMap<Event, Action>;

pub(crate) fn fmt_events(events: &EventMap) -> String {
    let parts: Vec<String> = events.iter().map(|(x, a)| format!("{x}:{a}")).collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CtsState {
    pub id: usize,
    /// `ψ(s)`: events potentially in progress.
    pub events: EventMap,
    /// The symbolic configuration this state denotes, when built by the compiler.
    pub config: Option<SymConfig>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CtsTransition {
    pub source: usize,
    pub target: usize,
    pub label: Action,
    /// `ζ(t)`.
    pub causes: EventMap,
    /// `η(t)`.
    pub event: Event,
    /// `Φ(t)`.
    pub guard: Constraint,
    /// `Λ(t)`.
    pub resets: BTreeSet<Clock>,
}

impl fmt::Display for CtsTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let resets: Vec<String> = self.resets.iter().map(|c| c.to_string()).collect();
        write!(
            f,
            "_{} {}_{} [{}] {{{}}}",
            fmt_events(&self.causes),
            self.label,
            self.event,
            self.guard,
            resets.join(",")
        )
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TimedCts {
    pub states: Vec<CtsState>,
    pub transitions: Vec<CtsTransition>,
    pub initial: usize,
    /// Set when the compiler stopped at its state bound.
    pub truncated: bool,
}

impl TimedCts {
    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = &CtsTransition> {
        self.transitions.iter().filter(move |t| t.source == s)
    }

    pub fn state(&self, s: usize) -> Option<&CtsState> {
        self.states.get(s)
    }

    /// Every constant in every guard.
    pub fn constants(&self) -> Vec<Duration> {
        fn go(c: &Constraint, out: &mut Vec<Duration>) {
            match c {
                Constraint::And(l, r) | Constraint::Or(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                Constraint::Lower { bound, .. } | Constraint::Upper { bound, .. } => out.push(*bound),
            }
        }
        let mut out = Vec::new();
        for t in &self.transitions {
            go(&t.guard, &mut out);
        }
        out
    }
}

/// A violated structural condition, with the offending transition index.
#[derive(Clone, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum CtsDiagnostic {
    /// The step's event is missing from the target state.
    ViolatesCondI(usize),
    /// A cause is still in progress in the target state.
    ViolatesCondII(usize),
    /// Causes or target events not drawn from the source state.
    ViolatesCondIII(usize),
    InitialNotEmpty,
    GuardNotNormal(usize),
    DanglingEndpoint(usize),
    MissingInitial,
}

impl fmt::Display for CtsDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtsDiagnostic::ViolatesCondI(t) => write!(f, "transition {t}: event not in target state"),
            CtsDiagnostic::ViolatesCondII(t) => write!(f, "transition {t}: a cause persists in the target state"),
            CtsDiagnostic::ViolatesCondIII(t) => {
                write!(f, "transition {t}: causes or target events not in source state")
            }
            CtsDiagnostic::InitialNotEmpty => f.write_str("initial state has events"),
            CtsDiagnostic::GuardNotNormal(t) => write!(f, "transition {t}: guard not in normal form"),
            CtsDiagnostic::DanglingEndpoint(t) => write!(f, "transition {t}: endpoint does not exist"),
            CtsDiagnostic::MissingInitial => f.write_str("initial state does not exist"),
        }
    }
}

/// Checks the transition-system conditions on every transition.
pub fn validate_cts(m: &TimedCts) -> Vec<CtsDiagnostic> {
    let mut out = Vec::new();
    match m.state(m.initial) {
        None => out.push(CtsDiagnostic::MissingInitial),
        Some(s) if !s.events.is_empty() => out.push(CtsDiagnostic::InitialNotEmpty),
        Some(_) => {}
    }
    for (i, t) in m.transitions.iter().enumerate() {
        let (Some(src), Some(dst)) = (m.state(t.source), m.state(t.target)) else {
            out.push(CtsDiagnostic::DanglingEndpoint(i));
            continue;
        };
        if !dst.events.contains_key(&t.event) {
            out.push(CtsDiagnostic::ViolatesCondI(i));
        }
        if t.causes.keys().any(|x| *x != t.event && dst.events.contains_key(x)) {
            out.push(CtsDiagnostic::ViolatesCondII(i));
        }
        let causes_in_source = t.causes.keys().all(|x| src.events.contains_key(x));
        let target_in_source = dst.events.keys().all(|x| *x == t.event || src.events.contains_key(x));
        if !causes_in_source || !target_in_source {
            out.push(CtsDiagnostic::ViolatesCondIII(i));
        }
        if !t.guard.is_normal_form() {
            out.push(CtsDiagnostic::GuardNotNormal(i));
        }
    }
    out
}

/// `⟨s, ν⟩`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RunConfig {
    pub state: usize,
    pub valuation: ClockValuation,
}

impl RunConfig {
    /// The initial state with every clock at zero.
    pub fn initial(m: &TimedCts) -> Self {
        RunConfig { state: m.initial, valuation: ClockValuation::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("transition leaves state {expected}, run is in state {actual}")]
    WrongSource { expected: usize, actual: usize },
    #[error("guard {0} not satisfied")]
    GuardUnsatisfied(String),
    #[error("cause {0} has not terminated")]
    CauseUnterminated(Event),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// `⟨s, ν⟩ --d--> ⟨s, ν + d⟩`.
pub fn step_delay(rc: &RunConfig, d: Duration) -> RunConfig {
    RunConfig { state: rc.state, valuation: rc.valuation.advance(d) }
}

/// Fires `t` if its guard holds and every cause has strictly outlived its duration.
pub fn step_action(rc: &RunConfig, t: &CtsTransition, spec: &Spec) -> Result<RunConfig, StepError> {
    if t.source != rc.state {
        return Err(StepError::WrongSource { expected: t.source, actual: rc.state });
    }
    if !t.guard.evaluate(&rc.valuation)? {
        return Err(StepError::GuardUnsatisfied(t.guard.to_string()));
    }
    for (x, a) in &t.causes {
        if rc.valuation.get(Clock(*x))? <= spec.duration(a)? {
            return Err(StepError::CauseUnterminated(*x));
        }
    }
    Ok(RunConfig { state: t.target, valuation: rc.valuation.reset(&t.resets) })
}
