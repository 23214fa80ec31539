//! Seeded random specifications for property checks and the CLI.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{action_set, Process, Spec};
use crate::time::Duration;

/// Actions used by generated terms. `r` is kept for refining processes.
pub const ALPHABET: &[&str] = &["a", "b", "c"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn d(n: i64) -> Duration {
    Duration::from_int(n)
}

/// A duration table over [`ALPHABET`] plus `r`, every entry in `1..=3`.
pub fn durations<R: Rng>(rng: &mut R) -> Vec<(&'static str, Duration)> {
    ALPHABET.iter().chain(["r"].iter()).map(|a| (*a, d(rng.gen_range(1..=3)))).collect()
}

/// A loop-free term with at most `ops` operator nodes.
pub fn loop_free<R: Rng>(rng: &mut R, ops: usize) -> Process {
    let p = term(rng, ops);
    debug_assert!(p.size() <= ops);
    p
}

fn term<R: Rng>(rng: &mut R, ops: usize) -> Process {
    if ops == 0 {
        return if rng.gen_bool(0.5) { Process::Stop } else { Process::Skip(d(rng.gen_range(0..=2))) };
    }
    let bound = d(rng.gen_range(0..=2));
    let name = *ALPHABET.choose(rng).expect("non-empty");
    match rng.gen_range(0..10) {
        0..=3 => Process::prefix(name, bound, term(rng, ops - 1)),
        4 => Process::delay(d(rng.gen_range(1..=2)), term(rng, ops - 1)),
        5 => Process::hide(term(rng, ops - 1), action_set([name])),
        k if ops >= 3 => {
            let left = rng.gen_range(1..ops - 1);
            let l = term(rng, left);
            let r = term(rng, ops - 1 - left);
            match k {
                6 => Process::choice(l, r),
                7 => Process::interleave(l, r),
                8 => Process::par(l, action_set([name]), r),
                _ => Process::interrupt(l, r),
            }
        }
        _ => Process::prefix(name, bound, term(rng, ops - 1)),
    }
}

/// A loop-free spec together with its duration table.
pub fn loop_free_spec<R: Rng>(rng: &mut R, ops: usize) -> Spec {
    let table = durations(rng);
    Spec::single(loop_free(rng, ops), &table)
}

/// How a bisimilar pair was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFamily {
    Identical,
    /// `P` and `P + P`.
    ChoiceIdempotence,
    /// `P ||| Q` and `Q ||| P`.
    ParallelSymmetry,
    /// `P + Q` and `Q + P`.
    ChoiceSymmetry,
}

pub const FAMILIES: [PairFamily; 4] = [
    PairFamily::Identical,
    PairFamily::ChoiceIdempotence,
    PairFamily::ParallelSymmetry,
    PairFamily::ChoiceSymmetry,
];

/// A term that certainly performs `a` somewhere.
fn with_a<R: Rng>(rng: &mut R, ops: usize) -> Process {
    Process::prefix("a", d(rng.gen_range(0..=2)), loop_free(rng, ops))
}

/// Two terms related by `family`, both mentioning `a`.
pub fn bisimilar_pair<R: Rng>(rng: &mut R, family: PairFamily, ops: usize) -> (Process, Process) {
    let p = with_a(rng, ops);
    match family {
        PairFamily::Identical => (p.clone(), p),
        PairFamily::ChoiceIdempotence => (p.clone(), Process::choice(p.clone(), p)),
        PairFamily::ParallelSymmetry => {
            let q = loop_free(rng, ops);
            (Process::interleave(p.clone(), q.clone()), Process::interleave(q, p))
        }
        PairFamily::ChoiceSymmetry => {
            let q = loop_free(rng, ops);
            (Process::choice(p.clone(), q.clone()), Process::choice(q, p))
        }
    }
}

/// A terminating process starting with a visible action, usable as a refinement.
pub fn refining<R: Rng>(rng: &mut R) -> Process {
    let first = Process::prefix("r", d(rng.gen_range(0..=2)), Process::Skip(d(rng.gen_range(0..=1))));
    match rng.gen_range(0..3) {
        0 => first,
        1 => Process::prefix("r", d(rng.gen_range(0..=2)), Process::prefix("b", d(1), Process::Skip(d(1)))),
        _ => Process::prefix(
            "r",
            d(1),
            Process::choice(Process::prefix("b", d(1), Process::Skip(d(0))), Process::Skip(d(2))),
        ),
    }
}
