//! Refine action `a` by a small process in both halves of a bisimilar pair
//! and check that the results stay bisimilar.

use durcsp::config::initial_config;
use durcsp::equivalence::{refinement_preserved, CheckParams};
use durcsp::gen;
use durcsp::{Action, Duration, Process, Spec};

fn main() {
    let mut rng = gen::rng(42);
    let params = CheckParams::new(8, Duration::from_ratio(1, 2));
    for family in gen::FAMILIES {
        let spec = Spec::single(Process::Stop, &gen::durations(&mut rng));
        let (p, q) = gen::bisimilar_pair(&mut rng, family, 3);
        let by = gen::refining(&mut rng);
        let v = refinement_preserved(&by, &Action::visible("a"), &initial_config(&p), &initial_config(&q), &spec, &params)
            .unwrap();
        println!("{family:?}\n  P = {p}\n  Q = {q}\n  a := {by}\n  {v}");
    }
}
