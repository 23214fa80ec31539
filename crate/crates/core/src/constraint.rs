//! Clock guards: construction, delay shift, renaming, evaluation and
//! enabling windows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Event;
use crate::syntax::{Action, Spec, SpecError};
use crate::time::{Duration, Rational};

/// The clock `c_x` of event `x`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Clock(pub Event);

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c_{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("window over an empty cause set")]
    EmptyCauses,
    #[error("no value for clock {0}")]
    MissingClock(Clock),
    #[error("constraint is not a conjunction of disjunctions of bounds")]
    NotNormalForm,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("bad constraint text: {0}")]
    Parse(String),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Constraint {
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
    /// `bound ≤ clock` (or `<` when strict).
    Lower { clock: Clock, bound: Duration, strict: bool },
    /// `clock ≤ bound` (or `<` when strict).
    Upper { clock: Clock, bound: Duration, strict: bool },
}

impl Constraint {
    pub fn lower(clock: Clock, bound: Duration) -> Self {
        Constraint::Lower { clock, bound, strict: false }
    }

    pub fn upper(clock: Clock, bound: Duration) -> Self {
        Constraint::Upper { clock, bound, strict: false }
    }

    pub fn and(self, other: Constraint) -> Self {
        Constraint::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Constraint) -> Self {
        Constraint::Or(Box::new(self), Box::new(other))
    }

    /// `lo ≤ c ≤ hi`.
    pub fn between(clock: Clock, lo: Duration, hi: Duration) -> Self {
        Constraint::lower(clock, lo).and(Constraint::upper(clock, hi))
    }

    /// `0 ≤ c_x ≤ u`, the window of an uncaused step.
    pub fn start_window(clock: Clock, u: Duration) -> Self {
        Constraint::between(clock, Duration::ZERO, u)
    }

    /// `φ + d`: every bound moves later by `d`.
    pub fn shift(&self, d: Duration) -> Constraint {
        match self {
            Constraint::And(l, r) => l.shift(d).and(r.shift(d)),
            Constraint::Or(l, r) => l.shift(d).or(r.shift(d)),
            Constraint::Lower { clock, bound, strict } => {
                Constraint::Lower { clock: *clock, bound: *bound + d, strict: *strict }
            }
            Constraint::Upper { clock, bound, strict } => {
                Constraint::Upper { clock: *clock, bound: *bound + d, strict: *strict }
            }
        }
    }

    /// `φ[to/from]`.
    pub fn rename_clock(&self, to: Clock, from: Clock) -> Constraint {
        let swap = |c: &Clock| if *c == from { to } else { *c };
        match self {
            Constraint::And(l, r) => l.rename_clock(to, from).and(r.rename_clock(to, from)),
            Constraint::Or(l, r) => l.rename_clock(to, from).or(r.rename_clock(to, from)),
            Constraint::Lower { clock, bound, strict } => {
                Constraint::Lower { clock: swap(clock), bound: *bound, strict: *strict }
            }
            Constraint::Upper { clock, bound, strict } => {
                Constraint::Upper { clock: swap(clock), bound: *bound, strict: *strict }
            }
        }
    }

    pub fn clocks(&self) -> BTreeSet<Clock> {
        let mut out = BTreeSet::new();
        self.collect_clocks(&mut out);
        out
    }

    fn collect_clocks(&self, out: &mut BTreeSet<Clock>) {
        match self {
            Constraint::And(l, r) | Constraint::Or(l, r) => {
                l.collect_clocks(out);
                r.collect_clocks(out);
            }
            Constraint::Lower { clock, .. } | Constraint::Upper { clock, .. } => {
                out.insert(*clock);
            }
        }
    }

    pub fn evaluate(&self, nu: &ClockValuation) -> Result<bool, ConstraintError> {
        Ok(match self {
            Constraint::And(l, r) => l.evaluate(nu)? && r.evaluate(nu)?,
            Constraint::Or(l, r) => l.evaluate(nu)? || r.evaluate(nu)?,
            Constraint::Lower { clock, bound, strict } => {
                let v = nu.get(*clock)?;
                if *strict { *bound < v } else { *bound <= v }
            }
            Constraint::Upper { clock, bound, strict } => {
                let v = nu.get(*clock)?;
                if *strict { v < *bound } else { v <= *bound }
            }
        })
    }

    fn is_clause(&self) -> bool {
        match self {
            Constraint::Or(l, r) => l.is_clause() && r.is_clause(),
            Constraint::And(..) => false,
            _ => true,
        }
    }

    /// A conjunction of disjunctions of single-clock bounds.
    pub fn is_normal_form(&self) -> bool {
        match self {
            Constraint::And(l, r) => l.is_normal_form() && r.is_normal_form(),
            other => other.is_clause(),
        }
    }

    /// The set of `t ≥ 0` with `φ` true at `ν0 + t`.
    pub fn enabling_window(&self, nu0: &ClockValuation) -> Result<IntervalSet, ConstraintError> {
        if !self.is_normal_form() {
            return Err(ConstraintError::NotNormalForm);
        }
        self.window(nu0)
    }

    fn window(&self, nu0: &ClockValuation) -> Result<IntervalSet, ConstraintError> {
        Ok(match self {
            Constraint::And(l, r) => l.window(nu0)?.intersect(&r.window(nu0)?),
            Constraint::Or(l, r) => l.window(nu0)?.union(&r.window(nu0)?),
            Constraint::Lower { clock, bound, strict } => {
                let start = nu0.get(*clock)?;
                let gap = bound.diff(start);
                if gap < Rational::from_integer(0) || (gap == Rational::from_integer(0) && !*strict) {
                    IntervalSet::from_start(Duration::ZERO, false)
                } else {
                    IntervalSet::from_start(Duration::new(gap).expect("non-negative"), *strict)
                }
            }
            Constraint::Upper { clock, bound, strict } => {
                let start = nu0.get(*clock)?;
                let gap = bound.diff(start);
                let zero = Rational::from_integer(0);
                if gap < zero || (gap == zero && *strict) {
                    IntervalSet::empty()
                } else {
                    IntervalSet::up_to(Duration::new(gap).expect("non-negative"), *strict)
                }
            }
        })
    }

    /// Plain-text form used by the model file format.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        self.ascii(0, &mut out);
        out
    }

    fn ascii(&self, ctx: u8, out: &mut String) {
        match self {
            Constraint::Or(l, r) => {
                if ctx > 0 {
                    out.push('(');
                }
                l.ascii(0, out);
                out.push_str(" | ");
                r.ascii(1, out);
                if ctx > 0 {
                    out.push(')');
                }
            }
            Constraint::And(l, r) if chain(l, r).is_some() => {
                let (clock, lo, lo_strict, hi, hi_strict) = chain(l, r).expect("checked");
                let op = |s: bool| if s { "<" } else { "<=" };
                out.push_str(&format!("{lo} {} {clock} {} {hi}", op(lo_strict), op(hi_strict)));
            }
            Constraint::And(l, r) => {
                if ctx > 1 {
                    out.push('(');
                }
                l.ascii(1, out);
                out.push_str(" & ");
                r.ascii(2, out);
                if ctx > 1 {
                    out.push(')');
                }
            }
            Constraint::Lower { clock, bound, strict } => {
                out.push_str(&format!("{bound} {} {clock}", if *strict { "<" } else { "<=" }));
            }
            Constraint::Upper { clock, bound, strict } => {
                out.push_str(&format!("{clock} {} {bound}", if *strict { "<" } else { "<=" }));
            }
        }
    }

    fn math(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match self {
            Constraint::Or(l, r) | Constraint::And(l, r) => {
                let (me, sym) = if matches!(self, Constraint::Or(..)) { (0, " ∨ ") } else { (1, " ∧ ") };
                let paren = ctx > me;
                if paren {
                    f.write_str("(")?;
                }
                l.math(f, me)?;
                f.write_str(sym)?;
                r.math(f, me + 1)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Constraint::Lower { clock, bound, strict } => {
                write!(f, "({bound} {} {clock})", if *strict { "<" } else { "≤" })
            }
            Constraint::Upper { clock, bound, strict } => {
                write!(f, "({clock} {} {bound})", if *strict { "<" } else { "≤" })
            }
        }
    }
}

/// `lo ≤ c` followed by `c ≤ hi` on the same clock, printable as a chain.
fn chain(l: &Constraint, r: &Constraint) -> Option<(Clock, Duration, bool, Duration, bool)> {
    match (l, r) {
        (
            Constraint::Lower { clock: a, bound: lo, strict: ls },
            Constraint::Upper { clock: b, bound: hi, strict: hs },
        ) if a == b => Some((*a, *lo, *ls, *hi, *hs)),
        _ => None,
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.math(f, 0)
    }
}

/// `F^{≤u}(E)`: every cause has finished and the last one finished at most `u` ago.
pub fn make_window<'e, I>(u: Duration, causes: I, spec: &Spec) -> Result<Constraint, ConstraintError>
where
    I: IntoIterator<Item = (Event, &'e Action)>,
{
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for (x, a) in causes {
        let d = spec.duration(a)?;
        lowers.push(Constraint::lower(Clock(x), d));
        uppers.push(Constraint::upper(Clock(x), d + u));
    }
    let fold = |v: Vec<Constraint>, f: fn(Constraint, Constraint) -> Constraint| v.into_iter().reduce(f);
    let lower = fold(lowers, Constraint::and).ok_or(ConstraintError::EmptyCauses)?;
    let upper = fold(uppers, Constraint::or).ok_or(ConstraintError::EmptyCauses)?;
    Ok(lower.and(upper))
}

/// Clock values, with an optional value for every clock not listed.
///
/// The default models clocks that were never reset and so have run since
/// time zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct ClockValuation {
    pub values: BTreeMap<Clock, Duration>,
    pub default: Option<Duration>,
}

impl ClockValuation {
    /// Every clock at zero.
    pub fn zero() -> Self {
        ClockValuation { values: BTreeMap::new(), default: Some(Duration::ZERO) }
    }

    pub fn get(&self, c: Clock) -> Result<Duration, ConstraintError> {
        self.values.get(&c).copied().or(self.default).ok_or(ConstraintError::MissingClock(c))
    }

    pub fn set(&mut self, c: Clock, v: Duration) {
        self.values.insert(c, v);
    }

    /// `ν + d`.
    pub fn advance(&self, d: Duration) -> ClockValuation {
        ClockValuation {
            values: self.values.iter().map(|(c, v)| (*c, *v + d)).collect(),
            default: self.default.map(|v| v + d),
        }
    }

    /// `[λ ↦ 0]ν`.
    pub fn reset<'c>(&self, clocks: impl IntoIterator<Item = &'c Clock>) -> ClockValuation {
        let mut out = self.clone();
        for c in clocks {
            out.values.insert(*c, Duration::ZERO);
        }
        out
    }
}

/// One interval of non-negative time; `hi == None` means unbounded.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Interval {
    pub lo: Duration,
    pub lo_open: bool,
    pub hi: Option<Duration>,
    pub hi_open: bool,
}

impl Interval {
    fn is_empty(&self) -> bool {
        match self.hi {
            None => false,
            Some(hi) => hi < self.lo || (hi == self.lo && (self.lo_open || self.hi_open)),
        }
    }

    /// Whether `other` starts before this one ends or touches it without a gap.
    fn joins(&self, other: &Interval) -> bool {
        match self.hi {
            None => true,
            Some(hi) => other.lo < hi || (other.lo == hi && !(self.hi_open && other.lo_open)),
        }
    }

    pub fn contains(&self, t: Duration) -> bool {
        let above = if self.lo_open { t > self.lo } else { t >= self.lo };
        let below = match self.hi {
            None => true,
            Some(hi) => if self.hi_open { t < hi } else { t <= hi },
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{},", if self.lo_open { "(" } else { "[" }, self.lo)?;
        match self.hi {
            None => f.write_str("inf)"),
            Some(hi) => write!(f, "{hi}{}", if self.hi_open { ")" } else { "]" }),
        }
    }
}

/// A sorted union of disjoint intervals.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct IntervalSet(Vec<Interval>);

fn lo_key(i: &Interval) -> (Duration, bool) {
    (i.lo, i.lo_open)
}

/// Compares upper ends; `true` when `a` ends no later than `b`.
fn ends_first(a: &Interval, b: &Interval) -> bool {
    match (a.hi, b.hi) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x < y || (x == y && (a.hi_open || !b.hi_open)),
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet(Vec::new())
    }

    pub fn single(i: Interval) -> Self {
        IntervalSet::normalise(vec![i])
    }

    fn from_start(lo: Duration, lo_open: bool) -> Self {
        IntervalSet::single(Interval { lo, lo_open, hi: None, hi_open: true })
    }

    fn up_to(hi: Duration, hi_open: bool) -> Self {
        IntervalSet::single(Interval { lo: Duration::ZERO, lo_open: false, hi: Some(hi), hi_open })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: Duration) -> bool {
        self.0.iter().any(|i| i.contains(t))
    }

    fn normalise(mut v: Vec<Interval>) -> Self {
        v.retain(|i| !i.is_empty());
        v.sort_by_key(lo_key);
        let mut out: Vec<Interval> = Vec::new();
        for i in v {
            match out.last_mut() {
                Some(last) if last.joins(&i) => {
                    if ends_first(last, &i) {
                        last.hi = i.hi;
                        last.hi_open = i.hi_open;
                    }
                }
                _ => out.push(i),
            }
        }
        IntervalSet(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::normalise(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                let (lo, lo_open) = std::cmp::max(lo_key(a), lo_key(b));
                let end = if ends_first(a, b) { a } else { b };
                v.push(Interval { lo, lo_open, hi: end.hi, hi_open: end.hi_open });
            }
        }
        IntervalSet::normalise(v)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

struct AsciiParser<'s> {
    toks: Vec<&'s str>,
    pos: usize,
}

impl<'s> AsciiParser<'s> {
    fn peek(&self) -> Option<&'s str> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> Result<&'s str, ConstraintError> {
        let t = self.peek().ok_or_else(|| ConstraintError::Parse("unexpected end".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn or(&mut self) -> Result<Constraint, ConstraintError> {
        let mut c = self.and()?;
        while self.peek() == Some("|") {
            self.pos += 1;
            c = c.or(self.and()?);
        }
        Ok(c)
    }

    fn and(&mut self) -> Result<Constraint, ConstraintError> {
        let mut c = self.atom()?;
        while self.peek() == Some("&") {
            self.pos += 1;
            c = c.and(self.atom()?);
        }
        Ok(c)
    }

    fn atom(&mut self) -> Result<Constraint, ConstraintError> {
        let first = self.next()?;
        if first == "(" {
            let c = self.or()?;
            return match self.next()? {
                ")" => Ok(c),
                t => Err(ConstraintError::Parse(format!("expected `)`, found `{t}`"))),
            };
        }
        let op = self.next()?;
        let strict = match op {
            "<" => true,
            "<=" => false,
            t => return Err(ConstraintError::Parse(format!("expected `<` or `<=`, found `{t}`"))),
        };
        let second = self.next()?;
        let clock = |s: &str| {
            s.strip_prefix("c_e")
                .and_then(|n| n.parse().ok())
                .map(|n| Clock(Event(n)))
        };
        let bound = |s: &str| Duration::from_str(s).map_err(|e| ConstraintError::Parse(e.to_string()));
        match (clock(first), clock(second)) {
            (Some(c), None) => Ok(Constraint::Upper { clock: c, bound: bound(second)?, strict }),
            (None, Some(c)) if matches!(self.peek(), Some("<" | "<=")) => {
                let hi_strict = self.next()? == "<";
                let hi = bound(self.next()?)?;
                Ok(Constraint::Lower { clock: c, bound: bound(first)?, strict }
                    .and(Constraint::Upper { clock: c, bound: hi, strict: hi_strict }))
            }
            (None, Some(c)) => Ok(Constraint::Lower { clock: c, bound: bound(first)?, strict }),
            _ => Err(ConstraintError::Parse(format!("expected a bound between `{first}` and `{second}`"))),
        }
    }
}

impl FromStr for Constraint {
    type Err = ConstraintError;

    /// Reads the form produced by [`Constraint::to_ascii`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let mut p = AsciiParser { toks: spaced.split_whitespace().collect(), pos: 0 };
        let c = p.or()?;
        match p.peek() {
            None => Ok(c),
            Some(t) => Err(ConstraintError::Parse(format!("trailing `{t}`"))),
        }
    }
}
