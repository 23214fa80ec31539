use std::collections::BTreeSet;

use super::EquivalenceError;
use crate::config::{psi, Event, TimedConfig, TimedEvent, TimedEventSet};
use crate::constraint::Clock;
use crate::opsem::{ActionStep, MaxDelay, Semantics, TimeMode};
use crate::syntax::Spec;
use crate::tcts::{step_action, step_delay, RunConfig, StepError, TimedCts};
use crate::time::Duration;

/// One player's transition system in a bisimulation game.
pub trait Side {
    type State: Clone + Ord;

    fn actions(&self, s: &Self::State) -> Result<Vec<(ActionStep, Self::State)>, EquivalenceError>;
    /// The `d`-successor, `d > 0`.
    fn delay(&self, s: &Self::State, d: Duration) -> Result<Option<Self::State>, EquivalenceError>;
    fn max_delay(&self, s: &Self::State) -> Result<MaxDelay, EquivalenceError>;
    /// Positive offsets at which enabledness may change.
    fn offsets(&self, s: &Self::State) -> Result<Vec<Duration>, EquivalenceError>;
    fn psi_ids(&self, s: &Self::State) -> BTreeSet<Event>;
}

/// Operational configurations.
pub struct OpSide<'a> {
    sem: Semantics<'a>,
}

impl<'a> OpSide<'a> {
    pub fn new(spec: &'a Spec, mode: TimeMode) -> Self {
        OpSide { sem: Semantics::new(spec, mode) }
    }
}

impl Side for OpSide<'_> {
    type State = TimedConfig;

    fn actions(&self, s: &TimedConfig) -> Result<Vec<(ActionStep, TimedConfig)>, EquivalenceError> {
        Ok(self.sem.enabled_actions(s)?)
    }

    fn delay(&self, s: &TimedConfig, d: Duration) -> Result<Option<TimedConfig>, EquivalenceError> {
        Ok(self.sem.apply_delay(s, d)?)
    }

    fn max_delay(&self, s: &TimedConfig) -> Result<MaxDelay, EquivalenceError> {
        Ok(self.sem.max_delay(s)?)
    }

    fn offsets(&self, s: &TimedConfig) -> Result<Vec<Duration>, EquivalenceError> {
        Ok(self.sem.critical_offsets(s)?)
    }

    fn psi_ids(&self, s: &TimedConfig) -> BTreeSet<Event> {
        psi(s).ids()
    }
}

/// Runs of a timed-CTS. Cause stamps are read off the clocks.
pub struct CtsSide<'a> {
    pub model: &'a TimedCts,
    pub spec: &'a Spec,
}

impl Side for CtsSide<'_> {
    type State = RunConfig;

    fn actions(&self, s: &RunConfig) -> Result<Vec<(ActionStep, RunConfig)>, EquivalenceError> {
        let mut out = Vec::new();
        for t in self.model.outgoing(s.state) {
            match step_action(s, t, self.spec) {
                Ok(next) => {
                    let mut causes = TimedEventSet::new();
                    for (x, a) in &t.causes {
                        let v = s.valuation.get(Clock(*x)).map_err(StepError::from)?;
                        causes.insert(TimedEvent::new(*x, a.clone(), v));
                    }
                    out.push((ActionStep { causes, action: t.label.clone(), event: t.event }, next));
                }
                Err(StepError::GuardUnsatisfied(_) | StepError::CauseUnterminated(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    fn delay(&self, s: &RunConfig, d: Duration) -> Result<Option<RunConfig>, EquivalenceError> {
        Ok(Some(step_delay(s, d)))
    }

    fn max_delay(&self, _: &RunConfig) -> Result<MaxDelay, EquivalenceError> {
        Ok(MaxDelay::Unbounded)
    }

    fn offsets(&self, s: &RunConfig) -> Result<Vec<Duration>, EquivalenceError> {
        let mut out = BTreeSet::new();
        for t in self.model.outgoing(s.state) {
            if let Ok(window) = t.guard.enabling_window(&s.valuation) {
                for i in window.intervals() {
                    out.insert(i.lo);
                    out.extend(i.hi);
                }
            }
            for (x, a) in &t.causes {
                let v = s.valuation.get(Clock(*x)).map_err(StepError::from)?;
                out.insert(self.spec.duration(a).map_err(StepError::from)?.saturating_sub(v));
            }
        }
        out.remove(&Duration::ZERO);
        Ok(out.into_iter().collect())
    }

    fn psi_ids(&self, s: &RunConfig) -> BTreeSet<Event> {
        self.model.state(s.state).map(|st| st.events.keys().copied().collect()).unwrap_or_default()
    }
}
