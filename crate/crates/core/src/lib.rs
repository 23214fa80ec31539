//! Duration-CSP workbench: parse processes with durational actions, run them
//! under the timed causal operational semantics, compile them to timed causal
//! transition systems and check the equivalences between the two.

pub mod cli;
pub mod config;
pub mod constraint;
pub mod corpus;
pub mod equivalence;
pub mod gen;
pub mod opsem;
pub mod syntax;
pub mod tcts;
pub mod time;

pub use syntax::{Action, ActionSet, Process, Spec};
pub use time::{Duration, Rational};
