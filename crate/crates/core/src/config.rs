//! Timed causal configurations: process terms decorated with in-flight
//! timed events, kept in canonical form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{render, Action, ActionSet, Process, Spec, SpecError};
use crate::time::Duration;

/// Event identifier, displayed as `e0`, `e1`, ...
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event(pub u32);

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Least event id not in `excluded`.
pub fn fresh_event(excluded: &BTreeSet<Event>) -> Event {
    let mut n = 0;
    for e in excluded {
        if e.0 == n {
            n += 1;
        } else if e.0 > n {
            break;
        }
    }
    Event(n)
}

/// One `x:a:t` triple.
///
/// `elapsed` is the time since the action began and always grows. `shift` is
/// the part of that time the owning leaf spent frozen (under a pending delay,
/// or on the waiting side of a partial sequence); the continuation of the
/// leaf may start once `elapsed - shift` reaches the duration.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TimedEvent {
    pub event: Event,
    pub action: Action,
    pub elapsed: Duration,
    pub shift: Duration,
}

impl TimedEvent {
    pub fn new(event: Event, action: Action, elapsed: Duration) -> Self {
        TimedEvent { event, action, elapsed, shift: Duration::ZERO }
    }
}

impl fmt::Display for TimedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.event, self.action, self.elapsed)?;
        if !self.shift.is_zero() {
            write!(f, "(-{})", self.shift)?;
        }
        Ok(())
    }
}

/// At most one timed event per event id.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct TimedEventSet(BTreeMap<Event, TimedEvent>);

impl TimedEventSet {
    pub fn new() -> Self {
        TimedEventSet::default()
    }

    pub fn singleton(event: Event, action: Action) -> Self {
        let mut s = TimedEventSet::new();
        s.insert(TimedEvent::new(event, action, Duration::ZERO));
        s
    }

    /// Replaces any previous entry for the same event.
    pub fn insert(&mut self, e: TimedEvent) {
        self.0.insert(e.event, e);
    }

    pub fn get(&self, e: Event) -> Option<&TimedEvent> {
        self.0.get(&e)
    }

    pub fn contains(&self, e: Event) -> bool {
        self.0.contains_key(&e)
    }

    pub fn ids(&self) -> BTreeSet<Event> {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimedEvent> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Union; on a shared id the entry already in `self` wins.
    pub fn union_with(&mut self, other: &TimedEventSet) {
        for (k, v) in &other.0 {
            self.0.entry(*k).or_insert_with(|| v.clone());
        }
    }

    pub fn remove(&mut self, e: Event) {
        self.0.remove(&e);
    }

    pub fn rename(&self, y: Event, x: Event) -> TimedEventSet {
        TimedEventSet(
            self.0
                .values()
                .map(|e| {
                    let mut e = e.clone();
                    if e.event == x {
                        e.event = y;
                    }
                    (e.event, e)
                })
                .collect(),
        )
    }

    /// `E + d`: every stamp grows by `d`.
    pub fn advance(&self, d: Duration) -> TimedEventSet {
        TimedEventSet(
            self.0
                .iter()
                .map(|(k, e)| {
                    let mut e = e.clone();
                    e.elapsed += d;
                    (*k, e)
                })
                .collect(),
        )
    }

    /// Time passing while the owning leaf is frozen.
    pub(crate) fn freeze(&self, d: Duration) -> TimedEventSet {
        TimedEventSet(
            self.0
                .iter()
                .map(|(k, e)| {
                    let mut e = e.clone();
                    e.elapsed += d;
                    e.shift += d;
                    (*k, e)
                })
                .collect(),
        )
    }

    /// `Finish(E)`: every stamp strictly exceeds its action's duration.
    pub fn is_finished(&self, spec: &Spec) -> Result<bool, SpecError> {
        for e in self.iter() {
            if e.elapsed <= spec.duration(&e.action)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether a continuation guarded by this set may start now.
    pub fn is_ready(&self, spec: &Spec) -> Result<bool, SpecError> {
        for e in self.iter() {
            let d = spec.duration(&e.action)?;
            if e.elapsed <= d || e.elapsed < d + e.shift {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Time until the last event's action finishes (counting frozen time as
    /// not spent); zero when already past.
    pub fn time_to_ready(&self, spec: &Spec) -> Result<Duration, SpecError> {
        let mut t = Duration::ZERO;
        for e in self.iter() {
            let wait = (spec.duration(&e.action)? + e.shift).saturating_sub(e.elapsed);
            t = t.max(wait);
        }
        Ok(t)
    }

    /// Time until `Finish` holds (the instant itself excluded); zero when it already holds.
    pub fn time_to_finish(&self, spec: &Spec) -> Result<Duration, SpecError> {
        let mut t = Duration::ZERO;
        for e in self.iter() {
            t = t.max(spec.duration(&e.action)?.saturating_sub(e.elapsed));
        }
        Ok(t)
    }
}

impl FromIterator<TimedEvent> for TimedEventSet {
    fn from_iter<I: IntoIterator<Item = TimedEvent>>(iter: I) -> Self {
        let mut s = TimedEventSet::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl fmt::Display for TimedEventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimedConfig {
    /// `_{E}[P]`; in canonical form `P` is `stop`, `skip`, a prefix or a reference.
    Leaf(TimedEventSet, Process),
    Delay(Duration, Box<TimedConfig>),
    Choice(Box<TimedConfig>, Box<TimedConfig>),
    Par(Box<TimedConfig>, ActionSet, Box<TimedConfig>),
    Hide(Box<TimedConfig>, ActionSet),
    Interrupt(Box<TimedConfig>, Box<TimedConfig>),
    Refine(Action, Process, Box<TimedConfig>),
    /// `l >>^x r`: the parts of `r` caused by `x` wait for `l` to terminate.
    PartialSeq(Box<TimedConfig>, Event, Box<TimedConfig>),
}

/// `canonicalize(_{∅}[root])`.
pub fn initial_config(root: &Process) -> TimedConfig {
    distribute(&TimedEventSet::new(), root)
}

/// Pushes an event set through every operator down to the leaves.
pub fn distribute(events: &TimedEventSet, p: &Process) -> TimedConfig {
    match p {
        Process::Stop | Process::Skip(_) | Process::Prefix(..) | Process::Ref(_) => {
            TimedConfig::Leaf(events.clone(), p.clone())
        }
        Process::Delay(d, body) if d.is_zero() => distribute(events, body),
        Process::Delay(d, body) => TimedConfig::Delay(*d, Box::new(distribute(events, body))),
        Process::Choice(l, r) => TimedConfig::Choice(
            Box::new(distribute(events, l)),
            Box::new(distribute(events, r)),
        ),
        Process::Par(l, sync, r) => TimedConfig::Par(
            Box::new(distribute(events, l)),
            sync.clone(),
            Box::new(distribute(events, r)),
        ),
        Process::Hide(body, set) => TimedConfig::Hide(Box::new(distribute(events, body)), set.clone()),
        Process::Interrupt(l, r) => TimedConfig::Interrupt(
            Box::new(distribute(events, l)),
            Box::new(distribute(events, r)),
        ),
        Process::Refine(a, by, body) => {
            TimedConfig::Refine(a.clone(), (**by).clone(), Box::new(distribute(events, body)))
        }
    }
}

/// Rewrites to canonical form. Idempotent.
pub fn canonicalize(c: &TimedConfig) -> TimedConfig {
    use TimedConfig::*;
    match c {
        Leaf(e, p) => distribute(e, p),
        Delay(d, body) if d.is_zero() => canonicalize(body),
        Delay(d, body) => Delay(*d, Box::new(canonicalize(body))),
        Choice(l, r) => Choice(Box::new(canonicalize(l)), Box::new(canonicalize(r))),
        Par(l, s, r) => Par(Box::new(canonicalize(l)), s.clone(), Box::new(canonicalize(r))),
        Hide(b, s) => Hide(Box::new(canonicalize(b)), s.clone()),
        Interrupt(l, r) => Interrupt(Box::new(canonicalize(l)), Box::new(canonicalize(r))),
        Refine(a, p, b) => Refine(a.clone(), p.clone(), Box::new(canonicalize(b))),
        PartialSeq(l, x, r) => PartialSeq(Box::new(canonicalize(l)), *x, Box::new(canonicalize(r))),
    }
}

impl TimedConfig {
    pub fn leaf(events: TimedEventSet, p: Process) -> Self {
        TimedConfig::Leaf(events, p)
    }

    pub fn is_canonical(&self) -> bool {
        canonicalize(self) == *self
    }

    /// Applies `f` to every leaf event set, keeping the structure.
    pub fn map_events(&self, f: &dyn Fn(&TimedEventSet) -> TimedEventSet) -> TimedConfig {
        use TimedConfig::*;
        match self {
            Leaf(e, p) => Leaf(f(e), p.clone()),
            Delay(d, b) => Delay(*d, Box::new(b.map_events(f))),
            Choice(l, r) => Choice(Box::new(l.map_events(f)), Box::new(r.map_events(f))),
            Par(l, s, r) => Par(Box::new(l.map_events(f)), s.clone(), Box::new(r.map_events(f))),
            Hide(b, s) => Hide(Box::new(b.map_events(f)), s.clone()),
            Interrupt(l, r) => Interrupt(Box::new(l.map_events(f)), Box::new(r.map_events(f))),
            Refine(a, p, b) => Refine(a.clone(), p.clone(), Box::new(b.map_events(f))),
            PartialSeq(l, x, r) => PartialSeq(Box::new(l.map_events(f)), *x, Box::new(r.map_events(f))),
        }
    }

    /// Visits every leaf.
    pub fn leaves(&self) -> Vec<(&TimedEventSet, &Process)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a TimedEventSet, &'a Process)>) {
        use TimedConfig::*;
        match self {
            Leaf(e, p) => out.push((e, p)),
            Delay(_, b) | Hide(b, _) | Refine(_, _, b) => b.collect_leaves(out),
            Choice(l, r) | Par(l, _, r) | Interrupt(l, r) | PartialSeq(l, _, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }
}

/// `ψ`: the events of a configuration.
pub fn psi(c: &TimedConfig) -> TimedEventSet {
    use TimedConfig::*;
    match c {
        Leaf(e, _) => e.clone(),
        Delay(_, b) | Hide(b, _) | Refine(_, _, b) => psi(b),
        Choice(l, r) | Par(l, _, r) | Interrupt(l, r) => {
            let mut s = psi(l);
            s.union_with(&psi(r));
            s
        }
        PartialSeq(l, x, r) => {
            let mut s = psi(l);
            let mut right = psi(r);
            right.remove(*x);
            s.union_with(&right);
            s
        }
    }
}

/// Event ids of `ψ` plus every partial-sequence anchor; fresh events avoid all of them.
pub fn used_ids(c: &TimedConfig) -> BTreeSet<Event> {
    let mut ids = psi(c).ids();
    collect_anchors(c, &mut ids);
    ids
}

fn collect_anchors(c: &TimedConfig, out: &mut BTreeSet<Event>) {
    use TimedConfig::*;
    match c {
        Leaf(..) => {}
        Delay(_, b) | Hide(b, _) | Refine(_, _, b) => collect_anchors(b, out),
        Choice(l, r) | Par(l, _, r) | Interrupt(l, r) => {
            collect_anchors(l, out);
            collect_anchors(r, out);
        }
        PartialSeq(l, x, r) => {
            out.insert(*x);
            collect_anchors(l, out);
            collect_anchors(r, out);
        }
    }
}

/// `c[y/x]`, including partial-sequence anchors.
pub fn substitute_event(c: &TimedConfig, y: Event, x: Event) -> TimedConfig {
    if x == y {
        return c.clone();
    }
    let renamed = c.map_events(&|e| e.rename(y, x));
    rename_anchors(renamed, y, x)
}

fn rename_anchors(c: TimedConfig, y: Event, x: Event) -> TimedConfig {
    use TimedConfig::*;
    match c {
        Leaf(..) => c,
        Delay(d, b) => Delay(d, Box::new(rename_anchors(*b, y, x))),
        Hide(b, s) => Hide(Box::new(rename_anchors(*b, y, x)), s),
        Refine(a, p, b) => Refine(a, p, Box::new(rename_anchors(*b, y, x))),
        Choice(l, r) => Choice(Box::new(rename_anchors(*l, y, x)), Box::new(rename_anchors(*r, y, x))),
        Par(l, s, r) => Par(Box::new(rename_anchors(*l, y, x)), s, Box::new(rename_anchors(*r, y, x))),
        Interrupt(l, r) => {
            Interrupt(Box::new(rename_anchors(*l, y, x)), Box::new(rename_anchors(*r, y, x)))
        }
        PartialSeq(l, a, r) => PartialSeq(
            Box::new(rename_anchors(*l, y, x)),
            if a == x { y } else { a },
            Box::new(rename_anchors(*r, y, x)),
        ),
    }
}

/// `c + d`: every stamp grows by `d`, structure unchanged.
pub fn advance(c: &TimedConfig, d: Duration) -> TimedConfig {
    c.map_events(&|e| e.advance(d))
}

/// `Finish(E)` over the spec's duration table.
pub fn is_finished(events: &TimedEventSet, spec: &Spec) -> Result<bool, SpecError> {
    events.is_finished(spec)
}

fn fmt_child(c: &TimedConfig, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        TimedConfig::Leaf(..) => write!(f, "{c}"),
        _ => write!(f, "({c})"),
    }
}

fn fmt_set(s: &ActionSet) -> String {
    if s.is_empty() {
        " ".to_string()
    } else {
        s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for TimedConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TimedConfig::*;
        match self {
            Leaf(e, p) => write!(f, "_{{{e}}}[{}]", render(p)),
            Delay(d, b) => {
                write!(f, "delay{{{d}}} ")?;
                fmt_child(b, f)
            }
            Choice(l, r) => {
                fmt_child(l, f)?;
                f.write_str(" + ")?;
                fmt_child(r, f)
            }
            Par(l, s, r) => {
                fmt_child(l, f)?;
                write!(f, " |[{}]| ", fmt_set(s))?;
                fmt_child(r, f)
            }
            Hide(b, s) => {
                fmt_child(b, f)?;
                write!(f, " \\{{{}}}", fmt_set(s))
            }
            Interrupt(l, r) => {
                fmt_child(l, f)?;
                f.write_str(" [> ")?;
                fmt_child(r, f)
            }
            Refine(a, p, b) => {
                write!(f, "rho {a} := ({}) in ", render(p))?;
                fmt_child(b, f)
            }
            PartialSeq(l, x, r) => {
                fmt_child(l, f)?;
                write!(f, " >>{x} ")?;
                fmt_child(r, f)
            }
        }
    }
}

impl fmt::Debug for TimedConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    fn d(n: i64) -> Duration {
        Duration::from_int(n)
    }

    fn ev(n: u32, a: &str, t: i64) -> TimedEvent {
        TimedEvent::new(Event(n), Action::visible(a), d(t))
    }

    fn set(items: Vec<TimedEvent>) -> TimedEventSet {
        items.into_iter().collect()
    }

    fn leaf(items: Vec<TimedEvent>, src: &str) -> TimedConfig {
        TimedConfig::Leaf(set(items), parse_process(src).unwrap())
    }

    #[test]
    fn initial_distributes_over_choice() {
        let p = parse_process("a;b;stop + b;a;stop").unwrap();
        let want = TimedConfig::Choice(
            Box::new(leaf(vec![], "a;b;stop")),
            Box::new(leaf(vec![], "b;a;stop")),
        );
        assert_eq!(initial_config(&p), want);
        assert_eq!(initial_config(&Process::Stop), leaf(vec![], "stop"));
    }

    #[test]
    fn refinement_receives_events() {
        let p = parse_process("rho a := c;skip in a;stop").unwrap();
        match initial_config(&p) {
            TimedConfig::Refine(a, _, body) => {
                assert_eq!(a, Action::visible("a"));
                assert_eq!(*body, leaf(vec![], "a;stop"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn canonicalize_distributes_and_is_idempotent() {
        let e = vec![ev(0, "a", 1)];
        let c = leaf(e.clone(), "delay{3} (b;stop + c;stop)");
        let want = TimedConfig::Delay(
            d(3),
            Box::new(TimedConfig::Choice(
                Box::new(leaf(e.clone(), "b;stop")),
                Box::new(leaf(e.clone(), "c;stop")),
            )),
        );
        let once = canonicalize(&c);
        assert_eq!(once, want);
        assert_eq!(canonicalize(&once), once);
        let zero = leaf(e.clone(), "delay{0} b;stop");
        assert_eq!(canonicalize(&zero), leaf(e, "b;stop"));
    }

    #[test]
    fn psi_cases() {
        let c = TimedConfig::Par(
            Box::new(leaf(vec![ev(0, "a", 1)], "stop")),
            ActionSet::new(),
            Box::new(leaf(vec![ev(1, "b", 1)], "stop")),
        );
        assert_eq!(psi(&c), set(vec![ev(0, "a", 1), ev(1, "b", 1)]));
        let ps = TimedConfig::PartialSeq(
            Box::new(leaf(vec![ev(2, "c", 0)], "stop")),
            Event(0),
            Box::new(leaf(vec![ev(0, "a", 0), ev(1, "b", 0)], "stop")),
        );
        assert_eq!(psi(&ps), set(vec![ev(2, "c", 0), ev(1, "b", 0)]));
        assert!(used_ids(&ps).contains(&Event(0)));
    }

    #[test]
    fn substitution() {
        let c = leaf(vec![ev(0, "a", 2)], "stop");
        assert_eq!(substitute_event(&c, Event(5), Event(0)), leaf(vec![ev(5, "a", 2)], "stop"));
        assert_eq!(substitute_event(&c, Event(5), Event(3)), c);
        let ps = TimedConfig::PartialSeq(Box::new(c.clone()), Event(0), Box::new(c.clone()));
        let renamed = substitute_event(&ps, Event(7), Event(0));
        let cr = leaf(vec![ev(7, "a", 2)], "stop");
        assert_eq!(renamed, TimedConfig::PartialSeq(Box::new(cr.clone()), Event(7), Box::new(cr)));
    }

    #[test]
    fn advance_and_finish() {
        let c = leaf(vec![ev(0, "a", 1)], "stop");
        assert_eq!(advance(&c, d(2)), leaf(vec![ev(0, "a", 3)], "stop"));
        assert_eq!(advance(&c, Duration::ZERO), c);
        let spec = Spec::single(Process::Stop, &[("a", d(2)), ("b", d(3))]);
        assert!(TimedEventSet::new().is_finished(&spec).unwrap());
        assert!(!set(vec![ev(0, "a", 2)]).is_finished(&spec).unwrap());
        let mixed = set(vec![
            TimedEvent::new(Event(0), Action::visible("a"), Duration::from_ratio(5, 2)),
            ev(1, "b", 4),
        ]);
        assert!(mixed.is_finished(&spec).unwrap());
        assert!(set(vec![ev(0, "zz", 1)]).is_finished(&spec).is_err());
    }

    #[test]
    fn fresh_event_is_least_unused() {
        assert_eq!(fresh_event(&BTreeSet::new()), Event(0));
        assert_eq!(fresh_event(&BTreeSet::from([Event(0), Event(1)])), Event(2));
        assert_eq!(fresh_event(&BTreeSet::from([Event(0), Event(2)])), Event(1));
    }

    #[test]
    fn display_in_math_notation() {
        let c = TimedConfig::Par(
            Box::new(TimedConfig::Leaf(
                set(vec![TimedEvent::new(Event(0), Action::visible("a"), Duration::from_ratio(3, 2))]),
                parse_process("b{2};stop").unwrap(),
            )),
            ActionSet::new(),
            Box::new(leaf(vec![], "c{1};stop")),
        );
        assert_eq!(c.to_string(), "_{e0:a:3/2}[b{2};stop] |[ ]| _{∅}[c{1};stop]");
    }
}
