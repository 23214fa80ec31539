//! Bounded bisimulation games between timed-CTS runs and operational
//! configurations.
//!
//! Dense time is approximated: at each position the delays tried are the
//! critical offsets of both sides (readiness, window ends, finish instants,
//! guard boundaries), the midpoints between consecutive ones, and one grid
//! step past the last. A round is an optional delay followed by an action.

mod sides;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::config::{initial_config, psi, Event, TimedConfig, TimedEventSet};
use crate::constraint::Clock;
use crate::opsem::{Move, SemanticsError, TimeMode, TRACE_HEADER};
use crate::syntax::{Action, Process, Spec};
use crate::tcts::{RunConfig, StepError, TimedCts};
use crate::time::Duration;

pub use sides::{CtsSide, OpSide, Side};

/// Partial injection from left event ids to right event ids.
pub type EventBijection = BTreeMap<Event, Event>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckParams {
    /// Rounds explored; each round is an optional delay and one action.
    pub max_depth: usize,
    pub delay_grid: Duration,
    /// Time mode of operational sides.
    pub mode: TimeMode,
    /// Distinct positions explored before giving up.
    pub max_pairs: usize,
}

impl CheckParams {
    pub const DEFAULT_MAX_PAIRS: usize = 200_000;

    pub fn new(max_depth: usize, delay_grid: Duration) -> Self {
        CheckParams { max_depth, delay_grid, mode: TimeMode::Urgent, max_pairs: Self::DEFAULT_MAX_PAIRS }
    }

    pub fn with_mode(mut self, mode: TimeMode) -> Self {
        self.mode = mode;
        self
    }

    /// The grid must be positive and divide every constant.
    pub fn validate(&self, constants: &[Duration]) -> Result<(), EquivalenceError> {
        if self.delay_grid.is_zero() {
            return Err(EquivalenceError::Params("delay grid must be positive".into()));
        }
        if let Some(c) = constants.iter().find(|c| !c.is_multiple_of(self.delay_grid)) {
            return Err(EquivalenceError::Params(format!("grid {} does not divide constant {c}", self.delay_grid)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EquivalenceError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SideTag {
    Left,
    Right,
}

impl fmt::Display for SideTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SideTag::Left => "L",
            SideTag::Right => "R",
        })
    }
}

/// Which matching obligation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// A left action has no matching right action.
    LeftAction,
    /// A right action has no matching left action.
    RightAction,
    /// A left delay is refused on the right.
    LeftDelay,
    /// A right delay is refused on the left.
    RightDelay,
}

impl Clause {
    pub fn id(self) -> &'static str {
        match self {
            Clause::LeftAction => "1.1",
            Clause::RightAction => "2.1",
            Clause::LeftDelay => "1.2",
            Clause::RightDelay => "2.2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub trace: Vec<(SideTag, Move)>,
    pub clause: Clause,
}

impl Counterexample {
    /// Side-tagged trace lines after the trace header.
    pub fn to_text(&self) -> String {
        let mut out = format!("{TRACE_HEADER}\n# clause {}\n", self.clause.id());
        for (side, m) in &self.trace {
            out.push_str(&format!("{side} {m}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// No distinguishing behaviour within the explored rounds; `bound_hit`
    /// records whether behaviour continued past the depth bound.
    Bisimilar { bound_hit: bool },
    NotBisimilar(Counterexample),
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self, Verdict::Bisimilar { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Bisimilar { bound_hit: false } => f.write_str("bisimilar"),
            Verdict::Bisimilar { bound_hit: true } => f.write_str("bisimilar (within depth bound)"),
            Verdict::NotBisimilar(c) => {
                write!(f, "not bisimilar (clause {}, {} moves)", c.clause.id(), c.trace.len())
            }
            Verdict::Inconclusive { reason } => write!(f, "inconclusive: {reason}"),
        }
    }
}

/// What one exploration produced, with bookkeeping for the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub pairs: usize,
    /// Matched answers where the clock/stamp invariant failed.
    pub synch_violations: usize,
}

#[derive(Clone, Debug)]
enum Outcome {
    Holds { bound_hit: bool },
    Fails(Counterexample),
    /// Only reachable through positions breaking the synchronisation invariant.
    Desync,
    Inconclusive,
}

type Synch<'g, A, B> = &'g dyn Fn(&A, &B, &EventBijection) -> bool;

/// A game position: both sides, the bijection, rounds left, and whether the
/// round's delay has been taken.
type Position<S1, S2> = (S1, S2, EventBijection, usize, bool);

struct Game<'g, A: Side, B: Side> {
    left: &'g A,
    right: &'g B,
    grid: Duration,
    stamps: bool,
    max_pairs: usize,
    memo: BTreeMap<Position<A::State, B::State>, Outcome>,
    synch: Option<Synch<'g, A::State, B::State>>,
    /// Treat unsynchronised positions as lost.
    require_synch: bool,
    synch_violations: usize,
}

/// Whether `c1` and `c2` relate through `f`: same size, and each left cause
/// maps to a right cause with the same action (and stamp, when asked).
fn causes_related(c1: &TimedEventSet, c2: &TimedEventSet, f: &EventBijection, stamps: bool) -> bool {
    c1.len() == c2.len()
        && c1.iter().all(|e| {
            f.get(&e.event)
                .and_then(|y| c2.get(*y))
                .is_some_and(|g| g.action == e.action && (!stamps || g.elapsed == e.elapsed))
        })
}

fn invert(f: &EventBijection) -> EventBijection {
    f.iter().map(|(a, b)| (*b, *a)).collect()
}

/// `f′ = f ∩ ((ψ₁ − x) × (ψ₂ − y)) ∪ {(x, y)}`.
pub fn extend_bijection(
    f: &EventBijection,
    left_psi: &BTreeSet<Event>,
    x: Event,
    right_psi: &BTreeSet<Event>,
    y: Event,
) -> EventBijection {
    let mut g: EventBijection = f
        .iter()
        .filter(|(a, b)| **a != x && **b != y && left_psi.contains(a) && right_psi.contains(b))
        .map(|(a, b)| (*a, *b))
        .collect();
    g.insert(x, y);
    g
}

fn prefixed(mut head: Vec<(SideTag, Move)>, tail: Counterexample) -> Counterexample {
    head.extend(tail.trace);
    Counterexample { trace: head, clause: tail.clause }
}

impl<'g, A: Side, B: Side> Game<'g, A, B> {
    fn delay_candidates(&self, s1: &A::State, s2: &B::State) -> Result<Vec<Duration>, EquivalenceError> {
        let mut pts: BTreeSet<Duration> = self.left.offsets(s1)?.into_iter().collect();
        pts.extend(self.right.offsets(s2)?);
        pts.insert(Duration::ZERO);
        let sorted: Vec<Duration> = pts.into_iter().collect();
        let mut out: BTreeSet<Duration> = sorted.iter().copied().collect();
        for w in sorted.windows(2) {
            out.insert((w[0] + w[1]).half());
        }
        out.insert(*sorted.last().expect("zero is present") + self.grid);
        out.remove(&Duration::ZERO);
        Ok(out.into_iter().collect())
    }

    /// Whether anything can still happen, now or after some candidate delay.
    fn has_future(&self, s1: &A::State, s2: &B::State) -> Result<bool, EquivalenceError> {
        if !self.left.actions(s1)?.is_empty() || !self.right.actions(s2)?.is_empty() {
            return Ok(true);
        }
        for d in self.delay_candidates(s1, s2)? {
            if let Some(n) = self.left.delay(s1, d)? {
                if !self.left.actions(&n)?.is_empty() {
                    return Ok(true);
                }
            }
            if let Some(n) = self.right.delay(s2, d)? {
                if !self.right.actions(&n)?.is_empty() {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn synchronised(&self, s1: &A::State, s2: &B::State, f: &EventBijection) -> bool {
        self.synch.is_none_or(|check| check(s1, s2, f))
    }

    /// Candidate answers, those satisfying the synchronisation invariant first,
    /// so the witness relation is a synchronised one whenever such exists.
    #[allow(clippy::type_complexity)]
    fn synchronised_first<'m, M>(
        &self,
        answers: impl Iterator<Item = (M, &'m A::State, &'m B::State, EventBijection)>,
    ) -> Vec<(M, &'m A::State, &'m B::State, EventBijection, bool)>
    where
        A::State: 'm,
        B::State: 'm,
    {
        let mut out: Vec<_> = answers
            .map(|(m, t1, t2, g)| {
                let ok = self.synchronised(t1, t2, &g);
                (m, t1, t2, g, ok)
            })
            .collect();
        out.sort_by_key(|a| !a.4);
        out
    }

    fn play(
        &mut self,
        s1: &A::State,
        s2: &B::State,
        f: &EventBijection,
        depth: usize,
        after_delay: bool,
    ) -> Result<Outcome, EquivalenceError> {
        if depth == 0 {
            return Ok(Outcome::Holds { bound_hit: self.has_future(s1, s2)? });
        }
        let key = (s1.clone(), s2.clone(), f.clone(), depth, after_delay);
        if let Some(o) = self.memo.get(&key) {
            return Ok(o.clone());
        }
        if self.memo.len() >= self.max_pairs {
            return Ok(Outcome::Inconclusive);
        }
        let outcome = if self.require_synch && !self.synchronised(s1, s2, f) {
            Outcome::Desync
        } else {
            self.round(s1, s2, f, depth, after_delay)?
        };
        self.memo.insert(key, outcome.clone());
        Ok(outcome)
    }

    fn round(
        &mut self,
        s1: &A::State,
        s2: &B::State,
        f: &EventBijection,
        depth: usize,
        after_delay: bool,
    ) -> Result<Outcome, EquivalenceError> {
        let mut bound_hit = false;
        let mut inconclusive = false;
        let left_moves = self.left.actions(s1)?;
        let right_moves = self.right.actions(s2)?;
        let finv = invert(f);

        // Left actions, answered on the right.
        for (m1, t1) in &left_moves {
            let cands: Vec<_> = right_moves
                .iter()
                .filter(|(m2, _)| m2.action == m1.action && causes_related(&m1.causes, &m2.causes, f, self.stamps))
                .collect();
            let mut matched = false;
            let mut desync = false;
            let mut last_fail = None;
            let answers = self.synchronised_first(
                cands.iter().map(|(m2, t2)| {
                    let g = extend_bijection(f, &self.left.psi_ids(t1), m1.event, &self.right.psi_ids(t2), m2.event);
                    (m2, t1, t2, g)
                }),
            );
            for (m2, t1, t2, g, synched) in answers {
                match self.play(t1, t2, &g, depth - 1, false)? {
                    Outcome::Holds { bound_hit: b } => {
                        bound_hit |= b;
                        matched = true;
                        self.synch_violations += usize::from(!synched);
                        break;
                    }
                    Outcome::Inconclusive => inconclusive = true,
                    Outcome::Fails(c) => last_fail = Some((m2.clone(), c)),
                    Outcome::Desync => desync = true,
                }
            }
            if matched {
                continue;
            }
            if inconclusive {
                return Ok(Outcome::Inconclusive);
            }
            if desync && last_fail.is_none() {
                return Ok(Outcome::Desync);
            }
            let head = vec![(SideTag::Left, Move::Act(m1.clone()))];
            return Ok(Outcome::Fails(match (cands.len(), last_fail) {
                (1, Some((m2, c))) => prefixed(vec![head[0].clone(), (SideTag::Right, Move::Act(m2))], c),
                _ => Counterexample { trace: head, clause: Clause::LeftAction },
            }));
        }

        // Right actions, answered on the left.
        for (m2, t2) in &right_moves {
            let cands: Vec<_> = left_moves
                .iter()
                .filter(|(m1, _)| m1.action == m2.action && causes_related(&m2.causes, &m1.causes, &finv, self.stamps))
                .collect();
            let mut matched = false;
            let mut desync = false;
            let mut last_fail = None;
            let answers = self.synchronised_first(
                cands.iter().map(|(m1, t1)| {
                    let g = extend_bijection(f, &self.left.psi_ids(t1), m1.event, &self.right.psi_ids(t2), m2.event);
                    (m1, t1, t2, g)
                }),
            );
            for (m1, t1, t2, g, synched) in answers {
                match self.play(t1, t2, &g, depth - 1, false)? {
                    Outcome::Holds { bound_hit: b } => {
                        bound_hit |= b;
                        matched = true;
                        self.synch_violations += usize::from(!synched);
                        break;
                    }
                    Outcome::Inconclusive => inconclusive = true,
                    Outcome::Fails(c) => last_fail = Some((m1.clone(), c)),
                    Outcome::Desync => desync = true,
                }
            }
            if matched {
                continue;
            }
            if inconclusive {
                return Ok(Outcome::Inconclusive);
            }
            if desync && last_fail.is_none() {
                return Ok(Outcome::Desync);
            }
            let head = vec![(SideTag::Right, Move::Act(m2.clone()))];
            return Ok(Outcome::Fails(match (cands.len(), last_fail) {
                (1, Some((m1, c))) => prefixed(vec![head[0].clone(), (SideTag::Left, Move::Act(m1))], c),
                _ => Counterexample { trace: head, clause: Clause::RightAction },
            }));
        }

        if !after_delay {
            let lim1 = self.left.max_delay(s1)?;
            let lim2 = self.right.max_delay(s2)?;
            for d in self.delay_candidates(s1, s2)? {
                let n1 = if lim1.admits(d) { self.left.delay(s1, d)? } else { None };
                let n2 = if lim2.admits(d) { self.right.delay(s2, d)? } else { None };
                match (n1, n2) {
                    (None, None) => {}
                    (Some(_), None) => {
                        return Ok(Outcome::Fails(Counterexample {
                            trace: vec![(SideTag::Left, Move::Delay(d))],
                            clause: Clause::LeftDelay,
                        }))
                    }
                    (None, Some(_)) => {
                        return Ok(Outcome::Fails(Counterexample {
                            trace: vec![(SideTag::Right, Move::Delay(d))],
                            clause: Clause::RightDelay,
                        }))
                    }
                    (Some(n1), Some(n2)) => match self.play(&n1, &n2, f, depth, true)? {
                        Outcome::Holds { bound_hit: b } => {
                            bound_hit |= b;
                            self.synch_violations += usize::from(!self.synchronised(&n1, &n2, f));
                        }
                        Outcome::Inconclusive => return Ok(Outcome::Inconclusive),
                        Outcome::Desync => return Ok(Outcome::Desync),
                        Outcome::Fails(c) => {
                            let head = vec![(SideTag::Left, Move::Delay(d)), (SideTag::Right, Move::Delay(d))];
                            return Ok(Outcome::Fails(prefixed(head, c)));
                        }
                    },
                }
            }
        }
        Ok(Outcome::Holds { bound_hit })
    }
}

/// Iterative deepening, so any counterexample found is a shortest one.
fn deepen<A: Side, B: Side>(
    game: &mut Game<'_, A, B>,
    s1: &A::State,
    s2: &B::State,
    max_depth: usize,
) -> Result<Outcome, EquivalenceError> {
    let mut last = Outcome::Holds { bound_hit: false };
    for depth in 1..=max_depth.max(1) {
        last = game.play(s1, s2, &EventBijection::new(), depth, false)?;
        if !matches!(last, Outcome::Holds { bound_hit: true }) {
            break;
        }
    }
    Ok(last)
}

/// With a synchronisation check, first looks for a witness relation made of
/// synchronised positions only; the plain game runs when there is none.
fn run_game<A: Side, B: Side>(
    left: &A,
    right: &B,
    s1: A::State,
    s2: B::State,
    params: &CheckParams,
    stamps: bool,
    synch: Option<Synch<'_, A::State, B::State>>,
) -> Result<CheckReport, EquivalenceError> {
    let mut game = Game {
        left,
        right,
        grid: params.delay_grid,
        stamps,
        max_pairs: params.max_pairs,
        memo: BTreeMap::new(),
        synch,
        require_synch: synch.is_some(),
        synch_violations: 0,
    };
    let mut outcome = deepen(&mut game, &s1, &s2, params.max_depth)?;
    let mut pairs = game.memo.len();
    if game.require_synch && !matches!(outcome, Outcome::Holds { .. }) {
        game.require_synch = false;
        game.memo.clear();
        outcome = deepen(&mut game, &s1, &s2, params.max_depth)?;
        pairs += game.memo.len();
        if matches!(outcome, Outcome::Holds { .. }) {
            game.synch_violations = game.synch_violations.max(1);
        }
    } else {
        game.synch_violations = 0;
    }
    let verdict = match outcome {
        Outcome::Holds { bound_hit } => Verdict::Bisimilar { bound_hit },
        Outcome::Fails(c) => Verdict::NotBisimilar(c),
        Outcome::Inconclusive | Outcome::Desync => {
            Verdict::Inconclusive { reason: format!("explored {} positions", params.max_pairs) }
        }
    };
    Ok(CheckReport { verdict, pairs, synch_violations: game.synch_violations })
}

/// The clock/stamp invariant: `z:b:t ∈ ψ(c)` iff `f⁻¹(z):b ∈ ψ(s)` with `ν(c_{f⁻¹(z)}) = t`.
pub fn check_synchronized(model: &TimedCts, rc: &RunConfig, c: &TimedConfig, f: &EventBijection) -> bool {
    let Some(state) = model.state(rc.state) else { return false };
    let events = psi(c);
    if state.events.len() != events.len() {
        return false;
    }
    state.events.iter().all(|(x, a)| {
        let Some(y) = f.get(x) else { return false };
        let Some(te) = events.get(*y) else { return false };
        te.action == *a && rc.valuation.get(Clock(*x)).is_ok_and(|v| v == te.elapsed)
    })
}

/// Compiled model against the operational semantics of the same spec.
pub fn tau_bisimilar_report(model: &TimedCts, spec: &Spec, params: &CheckParams) -> Result<CheckReport, EquivalenceError> {
    let mut constants = spec.constants();
    constants.extend(model.constants());
    params.validate(&constants)?;
    let left = CtsSide { model, spec };
    let right = OpSide::new(spec, TimeMode::Lazy);
    let start = initial_config(spec.root_process().map_err(SemanticsError::from)?);
    let synch = |rc: &RunConfig, c: &TimedConfig, f: &EventBijection| check_synchronized(model, rc, c, f);
    run_game(&left, &right, RunConfig::initial(model), start, params, false, Some(&synch))
}

pub fn tau_bisimilar(model: &TimedCts, spec: &Spec, params: &CheckParams) -> Result<Verdict, EquivalenceError> {
    Ok(tau_bisimilar_report(model, spec, params)?.verdict)
}

/// Two operational configurations under the same spec, stamps compared literally.
pub fn config_bisimilar(
    a: &TimedConfig,
    b: &TimedConfig,
    spec: &Spec,
    params: &CheckParams,
) -> Result<Verdict, EquivalenceError> {
    Ok(config_bisimilar_report(a, b, spec, params)?.verdict)
}

pub fn config_bisimilar_report(
    a: &TimedConfig,
    b: &TimedConfig,
    spec: &Spec,
    params: &CheckParams,
) -> Result<CheckReport, EquivalenceError> {
    let mut constants = spec.constants();
    for c in [a, b] {
        for (_, p) in c.leaves() {
            constants.extend(p.constants());
        }
    }
    params.validate(&constants)?;
    let side = OpSide::new(spec, params.mode);
    run_game(&side, &side, a.clone(), b.clone(), params, true, None)
}

/// Two timed-CTS run spaces.
pub fn cts_run_bisimilar(a: &TimedCts, b: &TimedCts, spec: &Spec, params: &CheckParams) -> Result<Verdict, EquivalenceError> {
    let mut constants = a.constants();
    constants.extend(b.constants());
    params.validate(&constants)?;
    let (left, right) = (CtsSide { model: a, spec }, CtsSide { model: b, spec });
    Ok(run_game(&left, &right, RunConfig::initial(a), RunConfig::initial(b), params, false, None)?.verdict)
}

/// Refines `a` by `by` on both sides of an established bisimilar pair.
pub fn refinement_preserved(
    by: &Process,
    a: &Action,
    p: &TimedConfig,
    q: &TimedConfig,
    spec: &Spec,
    params: &CheckParams,
) -> Result<Verdict, EquivalenceError> {
    let mut constants = by.constants();
    constants.extend(spec.constants());
    params.validate(&constants)?;
    match config_bisimilar(p, q, spec, params)? {
        Verdict::Bisimilar { .. } => {}
        other => return Err(EquivalenceError::Precondition(format!("inputs are not bisimilar: {other}"))),
    }
    let wrap = |c: &TimedConfig| TimedConfig::Refine(a.clone(), by.clone(), Box::new(c.clone()));
    config_bisimilar(&wrap(p), &wrap(q), spec, params)
}

/// Replays the left-tagged part of a counterexample through the operational semantics.
pub fn replay_op_side(
    spec: &Spec,
    mode: TimeMode,
    start: &TimedConfig,
    trace: &[(SideTag, Move)],
    side: SideTag,
) -> Result<Option<TimedConfig>, EquivalenceError> {
    let op = OpSide::new(spec, mode);
    let mut here = start.clone();
    for (_, m) in trace.iter().filter(|(t, _)| *t == side) {
        let next = match m {
            Move::Delay(d) => op.delay(&here, *d)?,
            Move::Act(step) => op
                .actions(&here)?
                .into_iter()
                .find(|(s, _)| s == step)
                .map(|(_, c)| c),
        };
        match next {
            Some(c) => here = c,
            None => return Ok(None),
        }
    }
    Ok(Some(here))
}

/// Replays one side of a trace through a timed-CTS.
pub fn replay_cts_side(
    model: &TimedCts,
    spec: &Spec,
    trace: &[(SideTag, Move)],
    side: SideTag,
) -> Result<Option<RunConfig>, EquivalenceError> {
    let cts = CtsSide { model, spec };
    let mut here = RunConfig::initial(model);
    for (_, m) in trace.iter().filter(|(t, _)| *t == side) {
        let next = match m {
            Move::Delay(d) => cts.delay(&here, *d)?,
            Move::Act(step) => cts.actions(&here)?.into_iter().find(|(s, _)| s == step).map(|(_, c)| c),
        };
        match next {
            Some(c) => here = c,
            None => return Ok(None),
        }
    }
    Ok(Some(here))
}
