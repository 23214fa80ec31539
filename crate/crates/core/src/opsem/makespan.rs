//! Shortest completion time over the configuration graph.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use thiserror::Error;

use super::trace::ScheduleEntry;
use super::{Semantics, SemanticsError, TimeMode};
use crate::config::{initial_config, psi, TimedConfig};
use crate::syntax::{Process, Spec};
use crate::time::Duration;

/// Stand-in for "just after" an open boundary, as a fraction of the grid.
const EPSILON_DIVISOR: i64 = 1 << 20;
const STATE_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Makespan {
    /// Greatest grid point not above the best completion time found.
    pub infimum: Duration,
    /// Whether the infimum is only approached (strict finish instants).
    pub open: bool,
    /// A schedule reaching completion at (or just after) the infimum.
    pub schedule: Vec<ScheduleEntry>,
}

impl fmt::Display for Makespan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.open { "open" } else { "attained" };
        write!(f, "infimum {} ({tag})", self.infimum)
    }
}

#[derive(Debug, Error)]
pub enum MakespanError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("grid must be positive")]
    BadGrid,
    #[error("grid {grid} does not divide constant {constant}")]
    GridMismatch { grid: Duration, constant: Duration },
    #[error("no completed configuration within {0} actions")]
    NoTerminal(usize),
    #[error("state budget of {0} exhausted")]
    Budget(usize),
}

/// Only stop leaves left, no pending delays.
fn quiescent(c: &TimedConfig) -> bool {
    use TimedConfig::*;
    match c {
        Leaf(_, p) => matches!(p, Process::Stop),
        Delay(..) => false,
        Choice(l, r) | Par(l, _, r) | Interrupt(l, r) | PartialSeq(l, _, r) => quiescent(l) && quiescent(r),
        Hide(b, _) | Refine(_, _, b) => quiescent(b),
    }
}

/// Some event finishes exactly now, so its continuation waits an instant.
fn at_strict_boundary(spec: &Spec, c: &TimedConfig) -> Result<bool, SemanticsError> {
    for (events, _) in c.leaves() {
        for e in events.iter() {
            if e.elapsed == spec.duration(&e.action)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Least total time, under urgent windows, to reach a configuration with only
/// stop leaves whose events have all finished.
pub fn min_makespan(spec: &Spec, grid: Duration, max_actions: usize) -> Result<Makespan, MakespanError> {
    if grid.is_zero() {
        return Err(MakespanError::BadGrid);
    }
    if let Some(constant) = spec.constants().into_iter().find(|c| !c.is_multiple_of(grid)) {
        return Err(MakespanError::GridMismatch { grid, constant });
    }
    let sem = Semantics::new(spec, TimeMode::Urgent);
    let eps = grid.div_int(EPSILON_DIVISOR);
    let start = initial_config(spec.root_process().map_err(SemanticsError::from)?);

    // node = (config, actions taken, parent, entry)
    let mut nodes: Vec<(TimedConfig, usize, Option<usize>, Option<ScheduleEntry>)> = vec![(start.clone(), 0, None, None)];
    let mut best: BTreeMap<(TimedConfig, usize), Duration> = BTreeMap::new();
    best.insert((start, 0), Duration::ZERO);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Duration::ZERO, 0usize)));

    while let Some(Reverse((t, id))) = heap.pop() {
        let (c, acts) = (nodes[id].0.clone(), nodes[id].1);
        if best.get(&(c.clone(), acts)).is_some_and(|b| *b < t) {
            continue;
        }
        if quiescent(&c) && psi(&c).is_finished(spec).map_err(SemanticsError::from)? {
            let mut schedule = Vec::new();
            let mut cur = Some(id);
            while let Some(i) = cur {
                schedule.extend(nodes[i].3.clone());
                cur = nodes[i].2;
            }
            schedule.reverse();
            let infimum = t.floor_to(grid);
            return Ok(Makespan { infimum, open: t > infimum, schedule });
        }
        if nodes.len() > STATE_BUDGET {
            return Err(MakespanError::Budget(STATE_BUDGET));
        }
        let mut push = |next: TimedConfig, acts: usize, at: Duration, entry: ScheduleEntry, nodes: &mut Vec<_>| {
            let key = (next.clone(), acts);
            if best.get(&key).is_some_and(|b| *b <= at) {
                return;
            }
            best.insert(key, at);
            nodes.push((next, acts, Some(id), Some(entry)));
            heap.push(Reverse((at, nodes.len() - 1)));
        };
        if acts < max_actions {
            for (i, (_, next)) in sem.enabled_actions(&c)?.into_iter().enumerate() {
                push(next, acts + 1, t, ScheduleEntry::Pick(i), &mut nodes);
            }
        }
        let limit = sem.max_delay(&c)?;
        let mut candidates = Vec::new();
        if at_strict_boundary(spec, &c)? {
            candidates.push(eps);
        }
        for o in sem.critical_offsets(&c)? {
            candidates.push(o);
            candidates.push(o + eps);
        }
        for d in candidates {
            if !limit.admits(d) {
                continue;
            }
            if let Some(next) = sem.apply_delay(&c, d)? {
                push(next, acts, t + d, ScheduleEntry::Wait(d), &mut nodes);
            }
        }
    }
    Err(MakespanError::NoTerminal(max_actions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    fn spec(src: &str) -> Spec {
        Spec::single(
            parse_process(src).unwrap(),
            &[("a", Duration::from_int(2)), ("b", Duration::from_int(3))],
        )
    }

    #[test]
    fn sequential_choice_takes_sum() {
        let m = min_makespan(&spec("a{1};b{1};stop + b{1};a{1};stop"), Duration::from_ratio(1, 2), 8).unwrap();
        assert_eq!(m.infimum, Duration::from_int(5));
        assert!(m.open);
    }

    #[test]
    fn interleaving_takes_max() {
        let m = min_makespan(&spec("a{1};stop ||| b{1};stop"), Duration::from_ratio(1, 2), 8).unwrap();
        assert_eq!(m.infimum, Duration::from_int(3));
        assert!(m.open);
    }

    #[test]
    fn stop_is_immediate() {
        let m = min_makespan(&spec("stop"), Duration::from_int(1), 4).unwrap();
        assert_eq!(m.infimum, Duration::ZERO);
        assert!(!m.open);
    }

    #[test]
    fn pure_delay_is_attained() {
        let m = min_makespan(&spec("delay{4} stop"), Duration::from_int(1), 4).unwrap();
        assert_eq!(m, Makespan { infimum: Duration::from_int(4), open: false, schedule: vec![ScheduleEntry::Wait(Duration::from_int(4))] });
    }

    #[test]
    fn timelock_has_no_terminal() {
        // b's window closes the instant a finishes, strictly before b may start.
        assert!(matches!(
            min_makespan(&spec("a{0};b{0};stop"), Duration::from_int(1), 4),
            Err(MakespanError::NoTerminal(_))
        ));
    }

    #[test]
    fn grid_must_divide_constants() {
        let err = min_makespan(&spec("a{1};stop"), Duration::from_ratio(2, 3), 4).unwrap_err();
        assert!(matches!(err, MakespanError::GridMismatch { .. }), "{err}");
        assert!(matches!(min_makespan(&spec("stop"), Duration::ZERO, 4), Err(MakespanError::BadGrid)));
    }
}
