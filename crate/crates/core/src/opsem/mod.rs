//! Operational timed causal semantics over timed configurations.

mod makespan;
pub(crate) mod trace;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{
    distribute, fresh_event, psi, substitute_event, used_ids, Event, TimedConfig, TimedEventSet,
};
use crate::syntax::{Action, Process, Spec, SpecError};
use crate::time::Duration;

pub use makespan::{min_makespan, Makespan, MakespanError};
pub use trace::{
    parse_schedule, parse_trace_moves, render_schedule, run, FormatError, Move, RunError, ScheduleEntry, Trace,
    SCHEDULE_HEADER, TRACE_HEADER,
};

/// How time interacts with firing windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum TimeMode {
    /// Windows are deadlines: time cannot pass beyond the end of a pending
    /// prefix or skip window.
    #[default]
    Urgent,
    /// Time always passes; a leaf whose window has closed can no longer act.
    Lazy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("delay must be positive, got {0}")]
    NonPositiveDelay(Duration),
}

/// `_{E} a_x`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ActionStep {
    pub causes: TimedEventSet,
    pub action: Action,
    pub event: Event,
}

impl fmt::Display for ActionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{{{}}} {}_{}", self.causes, self.action, self.event)
    }
}

/// Supremum of admissible delays. The bound, when finite, is attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaxDelay {
    /// No positive delay is admissible.
    None,
    Upto(Duration),
    Unbounded,
}

impl MaxDelay {
    fn min(self, other: MaxDelay) -> MaxDelay {
        std::cmp::min(self, other)
    }

    fn of(d: Duration) -> MaxDelay {
        if d.is_zero() {
            MaxDelay::None
        } else {
            MaxDelay::Upto(d)
        }
    }

    fn plus(self, d: Duration) -> MaxDelay {
        match self {
            MaxDelay::None => MaxDelay::of(d),
            MaxDelay::Upto(x) => MaxDelay::Upto(x + d),
            MaxDelay::Unbounded => MaxDelay::Unbounded,
        }
    }

    pub fn admits(self, d: Duration) -> bool {
        match self {
            MaxDelay::None => d.is_zero(),
            MaxDelay::Upto(x) => d <= x,
            MaxDelay::Unbounded => true,
        }
    }
}

impl fmt::Display for MaxDelay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxDelay::None => f.write_str("none"),
            MaxDelay::Upto(d) => write!(f, "{d}"),
            MaxDelay::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Why a delay was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub rule: &'static str,
    pub leaf: String,
}

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} exhausts the window of {}", self.rule, self.leaf)
    }
}

/// Unfolding budget for references when computing delay suprema.
const MAX_DELAY_UNFOLDS: usize = 64;

/// The operational semantics of one specification under one time mode.
#[derive(Debug, Clone, Copy)]
pub struct Semantics<'a> {
    pub spec: &'a Spec,
    pub mode: TimeMode,
}

fn fresh(excluded: BTreeSet<Event>) -> Event {
    fresh_event(&excluded)
}

fn without(mut s: BTreeSet<Event>, x: Event) -> BTreeSet<Event> {
    s.remove(&x);
    s
}

impl<'a> Semantics<'a> {
    pub fn new(spec: &'a Spec, mode: TimeMode) -> Self {
        Semantics { spec, mode }
    }

    fn unfold(&self, events: &TimedEventSet, name: &str) -> Result<TimedConfig, SemanticsError> {
        Ok(distribute(events, self.spec.definition(name)?))
    }

    /// Every one-step action derivation, in left-to-right structural order.
    pub fn enabled_actions(
        &self,
        c: &TimedConfig,
    ) -> Result<Vec<(ActionStep, TimedConfig)>, SemanticsError> {
        use TimedConfig::*;
        let mut out = Vec::new();
        match c {
            Leaf(e, p) => match p {
                Process::Stop => {}
                Process::Ref(name) => return self.enabled_actions(&self.unfold(e, name)?),
                Process::Skip(_) => {
                    if e.is_ready(self.spec)? {
                        let x = fresh_event(&e.ids());
                        let step = ActionStep { causes: e.clone(), action: Action::Delta, event: x };
                        out.push((step, Leaf(TimedEventSet::singleton(x, Action::Delta), Process::Stop)));
                    }
                }
                Process::Prefix(a, _, cont) => {
                    if e.is_ready(self.spec)? {
                        let x = fresh_event(&e.ids());
                        let step = ActionStep { causes: e.clone(), action: a.clone(), event: x };
                        out.push((step, distribute(&TimedEventSet::singleton(x, a.clone()), cont)));
                    }
                }
                _ => return self.enabled_actions(&distribute(e, p)),
            },
            Delay(..) => {}
            Choice(l, r) => {
                out.extend(self.enabled_actions(l)?);
                out.extend(self.enabled_actions(r)?);
            }
            Par(l, sync, r) => {
                let ls = self.enabled_actions(l)?;
                let rs = self.enabled_actions(r)?;
                let synchronised = |a: &Action| a.is_delta() || sync.contains(a);
                for (s, l2) in &ls {
                    if synchronised(&s.action) {
                        continue;
                    }
                    let mut ex = without(used_ids(l2), s.event);
                    ex.extend(used_ids(r));
                    ex.extend(s.causes.ids());
                    let y = fresh(ex);
                    let step = ActionStep { event: y, ..s.clone() };
                    out.push((step, Par(Box::new(substitute_event(l2, y, s.event)), sync.clone(), r.clone())));
                }
                for (s, r2) in &rs {
                    if synchronised(&s.action) {
                        continue;
                    }
                    let mut ex = without(used_ids(r2), s.event);
                    ex.extend(used_ids(l));
                    ex.extend(s.causes.ids());
                    let y = fresh(ex);
                    let step = ActionStep { event: y, ..s.clone() };
                    out.push((step, Par(l.clone(), sync.clone(), Box::new(substitute_event(r2, y, s.event)))));
                }
                for (s1, l2) in &ls {
                    if !synchronised(&s1.action) {
                        continue;
                    }
                    for (s2, r2) in &rs {
                        if s2.action != s1.action {
                            continue;
                        }
                        let mut ex = without(used_ids(l2), s1.event);
                        ex.extend(without(used_ids(r2), s2.event));
                        ex.extend(s1.causes.ids());
                        ex.extend(s2.causes.ids());
                        let z = fresh(ex);
                        let mut causes = s1.causes.clone();
                        causes.union_with(&s2.causes);
                        let step = ActionStep { causes, action: s1.action.clone(), event: z };
                        out.push((
                            step,
                            Par(
                                Box::new(substitute_event(l2, z, s1.event)),
                                sync.clone(),
                                Box::new(substitute_event(r2, z, s2.event)),
                            ),
                        ));
                    }
                }
            }
            Hide(b, set) => {
                for (mut s, b2) in self.enabled_actions(b)? {
                    if set.contains(&s.action) {
                        s.action = Action::Internal;
                    }
                    out.push((s, Hide(Box::new(b2), set.clone())));
                }
            }
            Interrupt(l, r) => {
                for (s, l2) in self.enabled_actions(l)? {
                    if s.action.is_delta() {
                        out.push((s, l2));
                    } else {
                        let mut ex = without(used_ids(&l2), s.event);
                        ex.extend(used_ids(r));
                        ex.extend(s.causes.ids());
                        let y = fresh(ex);
                        let target = Interrupt(Box::new(substitute_event(&l2, y, s.event)), r.clone());
                        out.push((ActionStep { event: y, ..s }, target));
                    }
                }
                out.extend(self.enabled_actions(r)?);
            }
            Refine(a, by, b) => {
                for (s, b2) in self.enabled_actions(b)? {
                    if s.action != *a {
                        out.push((s, Refine(a.clone(), by.clone(), Box::new(b2))));
                        continue;
                    }
                    let x = s.event;
                    let start = distribute(&s.causes, by);
                    for (s2, p2) in self.enabled_actions(&start)? {
                        let mut ex = without(used_ids(&p2), s2.event);
                        ex.extend(without(used_ids(&b2), x));
                        ex.insert(x);
                        ex.extend(s2.causes.ids());
                        let z = fresh(ex);
                        let target = PartialSeq(
                            Box::new(substitute_event(&p2, z, s2.event)),
                            x,
                            Box::new(Refine(a.clone(), by.clone(), Box::new(b2.clone()))),
                        );
                        out.push((ActionStep { event: z, ..s2 }, target));
                    }
                }
            }
            PartialSeq(l, x, r) => {
                for (s, l2) in self.enabled_actions(l)? {
                    if s.action.is_delta() {
                        let mut ex = without(used_ids(r), *x);
                        ex.extend(s.causes.ids());
                        let z = fresh(ex);
                        let step = ActionStep { causes: s.causes, action: Action::Internal, event: z };
                        out.push((step, substitute_event(r, z, *x)));
                    } else {
                        let mut ex = without(used_ids(&l2), s.event);
                        ex.extend(without(used_ids(r), *x));
                        ex.insert(*x);
                        ex.extend(s.causes.ids());
                        let z = fresh(ex);
                        let target = PartialSeq(Box::new(substitute_event(&l2, z, s.event)), *x, r.clone());
                        out.push((ActionStep { event: z, ..s }, target));
                    }
                }
                for (s, r2) in self.enabled_actions(r)? {
                    if s.causes.contains(*x) {
                        continue;
                    }
                    let mut ex = used_ids(l);
                    ex.extend(without(used_ids(&r2), s.event));
                    ex.insert(*x);
                    ex.extend(s.causes.ids());
                    let z = fresh(ex);
                    let target = PartialSeq(l.clone(), *x, Box::new(substitute_event(&r2, z, s.event)));
                    out.push((ActionStep { event: z, ..s }, target));
                }
            }
        }
        Ok(out)
    }

    /// The unique `d`-successor, or `None` when no delay rule applies.
    pub fn apply_delay(&self, c: &TimedConfig, d: Duration) -> Result<Option<TimedConfig>, SemanticsError> {
        Ok(self.try_delay(c, d)?.ok())
    }

    /// Like [`Semantics::apply_delay`], naming the refusing rule on failure.
    pub fn try_delay(
        &self,
        c: &TimedConfig,
        d: Duration,
    ) -> Result<Result<TimedConfig, Refusal>, SemanticsError> {
        if d.is_zero() {
            return Err(SemanticsError::NonPositiveDelay(d));
        }
        self.tick(c, d)
    }

    fn tick(&self, c: &TimedConfig, d: Duration) -> Result<Result<TimedConfig, Refusal>, SemanticsError> {
        use TimedConfig::*;
        macro_rules! sub {
            ($e:expr) => {
                match self.tick($e, d)? {
                    Ok(v) => v,
                    Err(r) => return Ok(Err(r)),
                }
            };
        }
        let next = match c {
            Leaf(e, p) => match p {
                Process::Stop => Leaf(e.advance(d), Process::Stop),
                Process::Ref(name) => return self.tick(&self.unfold(e, name)?, d),
                Process::Skip(u) | Process::Prefix(_, u, _) => {
                    let consumed = d.saturating_sub(e.time_to_ready(self.spec)?);
                    match u.checked_sub(consumed) {
                        Some(rest) => {
                            let p = match p {
                                Process::Skip(_) => Process::Skip(rest),
                                Process::Prefix(a, _, k) => Process::Prefix(a.clone(), rest, k.clone()),
                                _ => unreachable!(),
                            };
                            Leaf(e.advance(d), p)
                        }
                        None if self.mode == TimeMode::Lazy => Leaf(e.advance(d), Process::Stop),
                        None => {
                            let rule = if matches!(p, Process::Skip(_)) { "I.τ" } else { "II.τ" };
                            return Ok(Err(Refusal { rule, leaf: c.to_string() }));
                        }
                    }
                }
                _ => return self.tick(&distribute(e, p), d),
            },
            Delay(d0, b) => {
                if d < *d0 {
                    Delay(d0.saturating_sub(d), Box::new(freeze(b, d)))
                } else if d == *d0 {
                    freeze(b, d)
                } else {
                    return self.tick(&freeze(b, *d0), d.saturating_sub(*d0));
                }
            }
            Choice(l, r) => Choice(Box::new(sub!(l)), Box::new(sub!(r))),
            Par(l, s, r) => Par(Box::new(sub!(l)), s.clone(), Box::new(sub!(r))),
            Interrupt(l, r) => Interrupt(Box::new(sub!(l)), Box::new(sub!(r))),
            Hide(b, s) => Hide(Box::new(sub!(b)), s.clone()),
            Refine(a, p, b) => Refine(a.clone(), p.clone(), Box::new(sub!(b))),
            PartialSeq(l, x, r) => {
                if psi(r).contains(*x) {
                    PartialSeq(Box::new(sub!(l)), *x, Box::new(freeze(r, d)))
                } else {
                    PartialSeq(Box::new(sub!(l)), *x, Box::new(sub!(r)))
                }
            }
        };
        Ok(Ok(next))
    }

    /// Supremum of admissible delays from `c`.
    pub fn max_delay(&self, c: &TimedConfig) -> Result<MaxDelay, SemanticsError> {
        if self.mode == TimeMode::Lazy {
            return Ok(MaxDelay::Unbounded);
        }
        self.max_delay_bounded(c, 0)
    }

    fn max_delay_bounded(&self, c: &TimedConfig, unfolds: usize) -> Result<MaxDelay, SemanticsError> {
        use TimedConfig::*;
        Ok(match c {
            Leaf(e, p) => match p {
                Process::Stop => MaxDelay::Unbounded,
                Process::Ref(name) => {
                    if unfolds >= MAX_DELAY_UNFOLDS {
                        MaxDelay::Unbounded
                    } else {
                        self.max_delay_bounded(&self.unfold(e, name)?, unfolds + 1)?
                    }
                }
                Process::Skip(u) | Process::Prefix(_, u, _) => {
                    MaxDelay::of(e.time_to_ready(self.spec)? + *u)
                }
                _ => self.max_delay_bounded(&distribute(e, p), unfolds)?,
            },
            // Freezing leaves readiness offsets and budgets unchanged.
            Delay(d0, b) => self.max_delay_bounded(b, unfolds)?.plus(*d0),
            Choice(l, r) | Par(l, _, r) | Interrupt(l, r) => self
                .max_delay_bounded(l, unfolds)?
                .min(self.max_delay_bounded(r, unfolds)?),
            Hide(b, _) | Refine(_, _, b) => self.max_delay_bounded(b, unfolds)?,
            PartialSeq(l, x, r) => {
                let left = self.max_delay_bounded(l, unfolds)?;
                if psi(r).contains(*x) {
                    left
                } else {
                    left.min(self.max_delay_bounded(r, unfolds)?)
                }
            }
        })
    }

    /// Offsets at which something may change: readiness instants, window
    /// ends, finish instants and delay expiries. Sorted, positive, deduplicated.
    pub fn critical_offsets(&self, c: &TimedConfig) -> Result<Vec<Duration>, SemanticsError> {
        let mut out = BTreeSet::new();
        self.collect_offsets(c, Duration::ZERO, 0, &mut out)?;
        out.remove(&Duration::ZERO);
        Ok(out.into_iter().collect())
    }

    fn collect_offsets(
        &self,
        c: &TimedConfig,
        base: Duration,
        unfolds: usize,
        out: &mut BTreeSet<Duration>,
    ) -> Result<(), SemanticsError> {
        use TimedConfig::*;
        match c {
            Leaf(e, p) => {
                out.insert(base + e.time_to_finish(self.spec)?);
                match p {
                    Process::Stop => {}
                    Process::Ref(name) => {
                        if unfolds < MAX_DELAY_UNFOLDS {
                            self.collect_offsets(&self.unfold(e, name)?, base, unfolds + 1, out)?;
                        }
                    }
                    Process::Skip(u) | Process::Prefix(_, u, _) => {
                        let t = e.time_to_ready(self.spec)?;
                        out.insert(base + t);
                        out.insert(base + t + *u);
                    }
                    _ => self.collect_offsets(&distribute(e, p), base, unfolds, out)?,
                }
            }
            Delay(d0, b) => {
                out.insert(base + *d0);
                self.collect_offsets(b, base + *d0, unfolds, out)?;
            }
            Choice(l, r) | Par(l, _, r) | Interrupt(l, r) | PartialSeq(l, _, r) => {
                self.collect_offsets(l, base, unfolds, out)?;
                self.collect_offsets(r, base, unfolds, out)?;
            }
            Hide(b, _) | Refine(_, _, b) => self.collect_offsets(b, base, unfolds, out)?,
        }
        Ok(())
    }
}

/// Time passing while a sub-configuration is frozen: stamps age, budgets and
/// inner delays stay put.
pub(crate) fn freeze(c: &TimedConfig, d: Duration) -> TimedConfig {
    c.map_events(&|e| e.freeze(d))
}

/// [`Semantics::enabled_actions`] under the default time mode.
pub fn enabled_actions(c: &TimedConfig, spec: &Spec) -> Result<Vec<(ActionStep, TimedConfig)>, SemanticsError> {
    Semantics::new(spec, TimeMode::Urgent).enabled_actions(c)
}

/// [`Semantics::apply_delay`] under the default time mode.
pub fn apply_delay(c: &TimedConfig, d: Duration, spec: &Spec) -> Result<Option<TimedConfig>, SemanticsError> {
    Semantics::new(spec, TimeMode::Urgent).apply_delay(c, d)
}

/// [`Semantics::max_delay`] under the default time mode.
pub fn max_delay(c: &TimedConfig, spec: &Spec) -> Result<MaxDelay, SemanticsError> {
    Semantics::new(spec, TimeMode::Urgent).max_delay(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{initial_config, TimedEvent};
    use crate::syntax::{parse_process, ActionSet};

    fn d(n: i64) -> Duration {
        Duration::from_int(n)
    }

    fn spec(durs: &[(&str, i64)]) -> Spec {
        let t: Vec<(&str, Duration)> = durs.iter().map(|(a, n)| (*a, d(*n))).collect();
        Spec::single(Process::Stop, &t)
    }

    fn leaf(events: Vec<(u32, &str, i64)>, src: &str) -> TimedConfig {
        TimedConfig::Leaf(
            events.into_iter().map(|(n, a, t)| TimedEvent::new(Event(n), Action::visible(a), d(t))).collect(),
            parse_process(src).unwrap(),
        )
    }

    #[test]
    fn prefix_fires_from_empty_leaf() {
        let s = spec(&[("a", 1)]);
        let steps = enabled_actions(&leaf(vec![], "a{2};stop"), &s).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.to_string(), "_{∅} a_e0");
        assert_eq!(steps[0].1, leaf(vec![(0, "a", 0)], "stop"));
    }

    #[test]
    fn choice_offers_both_branches() {
        let s = spec(&[("a", 2), ("b", 3)]);
        let c = initial_config(&parse_process("a;b;stop + b;a;stop").unwrap());
        let labels: Vec<String> = enabled_actions(&c, &s).unwrap().iter().map(|(st, _)| st.to_string()).collect();
        assert_eq!(labels, vec!["_{∅} a_e0", "_{∅} b_e0"]);
    }

    #[test]
    fn interleaving_avoids_live_events() {
        let s = spec(&[("a", 1), ("b", 1)]);
        let c = TimedConfig::Par(
            Box::new(leaf(vec![(0, "a", 2)], "stop")),
            ActionSet::new(),
            Box::new(leaf(vec![], "b{1};stop")),
        );
        let steps = enabled_actions(&c, &s).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.event, Event(1));
        assert_eq!(
            steps[0].1,
            TimedConfig::Par(
                Box::new(leaf(vec![(0, "a", 2)], "stop")),
                ActionSet::new(),
                Box::new(leaf(vec![(1, "b", 0)], "stop")),
            )
        );
    }

    #[test]
    fn skip_budget_counts_down() {
        let s = spec(&[]);
        let c = leaf(vec![], "skip{5}");
        assert_eq!(apply_delay(&c, d(2), &s).unwrap(), Some(leaf(vec![], "skip{3}")));
        assert_eq!(max_delay(&c, &s).unwrap(), MaxDelay::Upto(d(5)));
        assert_eq!(apply_delay(&c, d(6), &s).unwrap(), None);
        let lazy = Semantics::new(&s, TimeMode::Lazy);
        assert_eq!(lazy.apply_delay(&c, d(6)).unwrap(), Some(leaf(vec![], "stop")));
    }

    #[test]
    fn delay_counts_down_and_freezes_body() {
        let s = spec(&[("a", 4), ("b", 1)]);
        let c = TimedConfig::Delay(d(100), Box::new(leaf(vec![(0, "a", 0)], "b{0};stop")));
        let after = apply_delay(&c, d(40), &s).unwrap().unwrap();
        match &after {
            TimedConfig::Delay(rest, body) => {
                assert_eq!(*rest, d(60));
                let TimedConfig::Leaf(e, _) = &**body else { panic!() };
                let ev = e.get(Event(0)).unwrap();
                assert_eq!((ev.elapsed, ev.shift), (d(40), d(40)));
            }
            other => panic!("{other}"),
        }
        // b is available exactly 104 after a started.
        assert_eq!(max_delay(&c, &s).unwrap(), MaxDelay::Upto(d(104)));
        let at = apply_delay(&c, d(104), &s).unwrap().unwrap();
        assert_eq!(enabled_actions(&at, &s).unwrap().len(), 1);
        let before = apply_delay(&c, d(103), &s).unwrap().unwrap();
        assert!(enabled_actions(&before, &s).unwrap().is_empty());
    }

    #[test]
    fn stop_leaf_idles() {
        let s = spec(&[("a", 2)]);
        let c = leaf(vec![(0, "a", 0)], "stop");
        assert_eq!(max_delay(&c, &s).unwrap(), MaxDelay::Unbounded);
        assert_eq!(apply_delay(&c, d(3), &s).unwrap(), Some(leaf(vec![(0, "a", 3)], "stop")));
    }

    #[test]
    fn continuation_waits_strictly_past_duration() {
        let s = spec(&[("a", 2), ("b", 3)]);
        let c = leaf(vec![(0, "a", 0)], "b{1};stop");
        let at2 = apply_delay(&c, d(2), &s).unwrap().unwrap();
        assert!(enabled_actions(&at2, &s).unwrap().is_empty());
        let later = apply_delay(&c, Duration::from_ratio(5, 2), &s).unwrap().unwrap();
        assert_eq!(enabled_actions(&later, &s).unwrap().len(), 1);
        assert_eq!(max_delay(&c, &s).unwrap(), MaxDelay::Upto(d(3)));
    }

    #[test]
    fn hiding_relabels() {
        let s = spec(&[("a", 1)]);
        let c = initial_config(&parse_process("a;stop \\{a}").unwrap());
        let steps = enabled_actions(&c, &s).unwrap();
        assert_eq!(steps[0].0.action, Action::Internal);
    }

    #[test]
    fn refinement_replaces_the_refined_action() {
        let s = spec(&[("a", 1), ("c", 1)]);
        let c = initial_config(&parse_process("rho a := c{1};skip{1} in a{1};stop").unwrap());
        let steps = enabled_actions(&c, &s).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].0.action, Action::visible("c"));
        assert!(matches!(steps[0].1, TimedConfig::PartialSeq(..)));
    }

    #[test]
    fn zero_delay_is_an_error() {
        let s = spec(&[]);
        assert!(apply_delay(&leaf(vec![], "stop"), Duration::ZERO, &s).is_err());
    }
}
