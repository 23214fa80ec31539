//! From processes to timed-CTS models through symbolic configurations.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

use super::{fmt_events, CtsState, CtsTransition, EventMap, TimedCts};
use crate::config::Event;
use crate::constraint::{make_window, Clock, Constraint, ConstraintError};
use crate::syntax::{render, Action, ActionSet, Process, Spec, SpecError};
use crate::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("refinement has no transition-system semantics; use the operational engine")]
    Refinement,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub max_states: usize,
    /// Reference unfoldings allowed while computing one state's steps.
    pub max_unfold: usize,
    /// States this many steps from the initial one are left unexpanded.
    pub max_depth: Option<usize>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { max_states: 10_000, max_unfold: 64, max_depth: None }
    }
}

/// A configuration whose leaves carry untimed events and a pending delay
/// offset instead of timestamps.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SymConfig {
    Leaf { events: EventMap, offset: Duration, process: Process },
    Choice(Box<SymConfig>, Box<SymConfig>),
    Par(Box<SymConfig>, ActionSet, Box<SymConfig>),
    Hide(Box<SymConfig>, ActionSet),
    Interrupt(Box<SymConfig>, Box<SymConfig>),
}

/// One symbolic step before it becomes a transition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SymStep {
    pub causes: EventMap,
    pub action: Action,
    pub event: Event,
    pub guard: Constraint,
}

impl SymConfig {
    /// Distributes events down to the leaves, folding delays into offsets.
    pub fn distribute(events: &EventMap, offset: Duration, p: &Process) -> Result<SymConfig, CompileError> {
        let go = |q: &Process| SymConfig::distribute(events, offset, q).map(Box::new);
        Ok(match p {
            Process::Stop | Process::Skip(_) | Process::Prefix(..) | Process::Ref(_) => {
                SymConfig::Leaf { events: events.clone(), offset, process: p.clone() }
            }
            Process::Delay(d, body) => SymConfig::distribute(events, offset + *d, body)?,
            Process::Choice(l, r) => SymConfig::Choice(go(l)?, go(r)?),
            Process::Par(l, s, r) => SymConfig::Par(go(l)?, s.clone(), go(r)?),
            Process::Hide(b, s) => SymConfig::Hide(go(b)?, s.clone()),
            Process::Interrupt(l, r) => SymConfig::Interrupt(go(l)?, go(r)?),
            Process::Refine(..) => return Err(CompileError::Refinement),
        })
    }

    /// `ψ`: the union of all leaf events.
    pub fn psi(&self) -> EventMap {
        match self {
            SymConfig::Leaf { events, .. } => events.clone(),
            SymConfig::Hide(b, _) => b.psi(),
            SymConfig::Choice(l, r) | SymConfig::Par(l, _, r) | SymConfig::Interrupt(l, r) => {
                let mut s = l.psi();
                for (x, a) in r.psi() {
                    s.entry(x).or_insert(a);
                }
                s
            }
        }
    }
}

impl fmt::Display for SymConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |c: &SymConfig, f: &mut fmt::Formatter<'_>| match c {
            SymConfig::Leaf { .. } => write!(f, "{c}"),
            _ => write!(f, "({c})"),
        };
        match self {
            SymConfig::Leaf { events, offset, process } => {
                let set = if events.is_empty() { "∅".to_string() } else { fmt_events(events) };
                let set = set.trim_start_matches('{').trim_end_matches('}');
                write!(f, "_{{{set}}}")?;
                if !offset.is_zero() {
                    write!(f, "+{offset}")?;
                }
                write!(f, "[{}]", render(process))
            }
            SymConfig::Choice(l, r) => {
                child(l, f)?;
                f.write_str(" + ")?;
                child(r, f)
            }
            SymConfig::Par(l, s, r) => {
                child(l, f)?;
                let names: Vec<String> = s.iter().map(|a| a.to_string()).collect();
                write!(f, " |[{}]| ", names.join(","))?;
                child(r, f)
            }
            SymConfig::Hide(b, s) => {
                child(b, f)?;
                let names: Vec<String> = s.iter().map(|a| a.to_string()).collect();
                write!(f, " \\{{{}}}", names.join(","))
            }
            SymConfig::Interrupt(l, r) => {
                child(l, f)?;
                f.write_str(" [> ")?;
                child(r, f)
            }
        }
    }
}

struct Stepper<'a> {
    spec: &'a Spec,
    max_unfold: usize,
    truncated: bool,
}

impl Stepper<'_> {
    fn guard(&self, events: &EventMap, offset: Duration, u: Duration, x: Event) -> Result<Constraint, CompileError> {
        if events.is_empty() {
            // The clock of a never-used event has run since time zero.
            Ok(Constraint::between(Clock(x), offset, offset + u))
        } else {
            Ok(make_window(u, events.iter().map(|(e, a)| (*e, a)), self.spec)?.shift(offset))
        }
    }

    /// Every step of `c`, all carrying event `x`.
    fn steps(&mut self, c: &SymConfig, x: Event, unfolds: usize) -> Result<Vec<(SymStep, SymConfig)>, CompileError> {
        let mut out = Vec::new();
        match c {
            SymConfig::Leaf { events, offset, process } => match process {
                Process::Stop => {}
                Process::Ref(name) => {
                    if unfolds >= self.max_unfold {
                        self.truncated = true;
                    } else {
                        let body = SymConfig::distribute(events, *offset, self.spec.definition(name)?)?;
                        return self.steps(&body, x, unfolds + 1);
                    }
                }
                Process::Skip(u) => {
                    let guard = self.guard(events, *offset, *u, x)?;
                    let step = SymStep { causes: events.clone(), action: Action::Delta, event: x, guard };
                    let target = SymConfig::Leaf {
                        events: [(x, Action::Delta)].into(),
                        offset: Duration::ZERO,
                        process: Process::Stop,
                    };
                    out.push((step, target));
                }
                Process::Prefix(a, u, cont) => {
                    let guard = self.guard(events, *offset, *u, x)?;
                    let step = SymStep { causes: events.clone(), action: a.clone(), event: x, guard };
                    out.push((step, SymConfig::distribute(&[(x, a.clone())].into(), Duration::ZERO, cont)?));
                }
                other => return self.steps(&SymConfig::distribute(events, *offset, other)?, x, unfolds),
            },
            SymConfig::Choice(l, r) => {
                out.extend(self.steps(l, x, unfolds)?);
                out.extend(self.steps(r, x, unfolds)?);
            }
            SymConfig::Par(l, sync, r) => {
                let ls = self.steps(l, x, unfolds)?;
                let rs = self.steps(r, x, unfolds)?;
                let synchronised = |a: &Action| a.is_delta() || sync.contains(a);
                for (s, l2) in &ls {
                    if !synchronised(&s.action) {
                        out.push((s.clone(), SymConfig::Par(Box::new(l2.clone()), sync.clone(), r.clone())));
                    }
                }
                for (s, r2) in &rs {
                    if !synchronised(&s.action) {
                        out.push((s.clone(), SymConfig::Par(l.clone(), sync.clone(), Box::new(r2.clone()))));
                    }
                }
                for (s1, l2) in &ls {
                    if !synchronised(&s1.action) {
                        continue;
                    }
                    for (s2, r2) in rs.iter().filter(|(s2, _)| s2.action == s1.action) {
                        let mut causes = s1.causes.clone();
                        causes.extend(s2.causes.iter().map(|(e, a)| (*e, a.clone())));
                        let step = SymStep {
                            causes,
                            action: s1.action.clone(),
                            event: x,
                            guard: s1.guard.clone().and(s2.guard.clone()),
                        };
                        out.push((step, SymConfig::Par(Box::new(l2.clone()), sync.clone(), Box::new(r2.clone()))));
                    }
                }
            }
            SymConfig::Hide(b, set) => {
                for (mut s, b2) in self.steps(b, x, unfolds)? {
                    if set.contains(&s.action) {
                        s.action = Action::Internal;
                    }
                    out.push((s, SymConfig::Hide(Box::new(b2), set.clone())));
                }
            }
            SymConfig::Interrupt(l, r) => {
                for (s, l2) in self.steps(l, x, unfolds)? {
                    if s.action.is_delta() {
                        out.push((s, l2));
                    } else {
                        out.push((s, SymConfig::Interrupt(Box::new(l2), r.clone())));
                    }
                }
                out.extend(self.steps(r, x, unfolds)?);
            }
        }
        Ok(out)
    }
}

/// Builds the reachable timed-CTS of the spec's root process.
///
/// Every step uses the least event id never used before on its path, so a
/// state is identified by its symbolic configuration together with that
/// high-water mark.
pub fn compile(spec: &Spec, opts: CompileOptions) -> Result<TimedCts, CompileError> {
    let root = SymConfig::distribute(&EventMap::new(), Duration::ZERO, spec.root_process()?)?;
    let mut stepper = Stepper { spec, max_unfold: opts.max_unfold, truncated: false };
    let mut ids: BTreeMap<(SymConfig, u32), usize> = BTreeMap::new();
    let mut m = TimedCts::default();
    let mut queue = VecDeque::new();

    ids.insert((root.clone(), 0), 0);
    m.states.push(CtsState { id: 0, events: EventMap::new(), config: Some(root.clone()) });
    queue.push_back((root, 0u32, 0usize));

    let mut depth = vec![0usize];
    while let Some((c, next, id)) = queue.pop_front() {
        let steps = stepper.steps(&c, Event(next), 0)?;
        if opts.max_depth.is_some_and(|k| depth[id] >= k) {
            m.truncated |= !steps.is_empty();
            continue;
        }
        for (step, target) in steps {
            let key = (target, next + 1);
            let tid = match ids.get(&key) {
                Some(t) => *t,
                None if m.states.len() >= opts.max_states => {
                    m.truncated = true;
                    continue;
                }
                None => {
                    let tid = m.states.len();
                    m.states.push(CtsState { id: tid, events: key.0.psi(), config: Some(key.0.clone()) });
                    ids.insert(key.clone(), tid);
                    depth.push(depth[id] + 1);
                    queue.push_back((key.0, key.1, tid));
                    tid
                }
            };
            m.transitions.push(CtsTransition {
                source: id,
                target: tid,
                label: step.action,
                causes: step.causes,
                event: step.event,
                guard: step.guard,
                resets: [Clock(step.event)].into(),
            });
        }
    }
    m.truncated |= stepper.truncated;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;
    use crate::tcts::{validate_cts, CtsDiagnostic};

    fn d(n: i64) -> Duration {
        Duration::from_int(n)
    }

    fn spec(src: &str) -> Spec {
        Spec::single(parse_process(src).unwrap(), &[("a", d(4)), ("b", d(3)), ("c", d(1))])
    }

    #[test]
    fn delayed_continuation() {
        let m = compile(&spec("a{4}; delay{100} b{0}; stop"), CompileOptions::default()).unwrap();
        assert_eq!(m.states.len(), 3);
        assert_eq!(m.transitions.len(), 2);
        let (t0, t1) = (&m.transitions[0], &m.transitions[1]);
        assert_eq!(t0.guard.to_ascii(), "0 <= c_e0 <= 4");
        assert_eq!(t0.resets, [Clock(Event(0))].into());
        assert_eq!(fmt_events(&t1.causes), "{e0:a}");
        assert_eq!(t1.guard.to_ascii(), "104 <= c_e0 <= 104");
        assert_eq!(t1.resets, [Clock(Event(1))].into());
        assert!(validate_cts(&m).is_empty());
    }

    #[test]
    fn interleaving_diamond() {
        let m = compile(&spec("a{1};stop ||| b{2};stop"), CompileOptions::default()).unwrap();
        // The two orders allocate ids differently, so the diamond does not close.
        assert_eq!(m.states.len(), 5);
        assert_eq!(m.transitions.len(), 4);
        assert!(m.transitions.iter().all(|t| t.causes.is_empty()));
        assert!(validate_cts(&m).is_empty());
    }

    #[test]
    fn stop_has_one_state() {
        let m = compile(&spec("stop"), CompileOptions::default()).unwrap();
        assert_eq!((m.states.len(), m.transitions.len()), (1, 0));
    }

    #[test]
    fn sync_conjoins_guards() {
        let m = compile(&spec("a{1};stop |[a]| delay{2} a{3};stop"), CompileOptions::default()).unwrap();
        assert_eq!(m.transitions.len(), 1);
        assert_eq!(m.transitions[0].guard.to_ascii(), "0 <= c_e0 <= 1 & 2 <= c_e0 <= 5");
    }

    #[test]
    fn concurrent_continuation_breaks_condition_two() {
        let m = compile(&spec("a{0};(b{1};stop ||| c{1};stop)"), CompileOptions::default()).unwrap();
        assert!(validate_cts(&m).contains(&CtsDiagnostic::ViolatesCondII(1)));
    }

    #[test]
    fn refinement_is_rejected() {
        let s = spec("rho a := b{1};skip{0} in a{1};stop");
        assert_eq!(compile(&s, CompileOptions::default()), Err(CompileError::Refinement));
    }

    #[test]
    fn recursion_truncates() {
        let mut s = spec("X");
        s.root = "X".into();
        s.definitions.insert("X".into(), parse_process("a{1};X").unwrap());
        let m = compile(&s, CompileOptions { max_states: 5, max_unfold: 8, max_depth: None }).unwrap();
        assert!(m.truncated);
        assert_eq!(m.states.len(), 5);
        let m = compile(&s, CompileOptions { max_depth: Some(2), ..Default::default() }).unwrap();
        assert!(m.truncated);
        assert_eq!((m.states.len(), m.transitions.len()), (3, 2));
    }
}
