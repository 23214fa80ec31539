//! Distinguish a choice of sequences from an interleaving and replay the
//! counterexample on both sides.

use durcsp::config::initial_config;
use durcsp::equivalence::{config_bisimilar, replay_op_side, CheckParams, SideTag, Verdict};
use durcsp::opsem::TimeMode;
use durcsp::syntax::parse_process;
use durcsp::{Duration, Process, Spec};

fn main() {
    let spec = Spec::single(Process::Stop, &[("a", Duration::from_int(2)), ("b", Duration::from_int(3))]);
    let p = initial_config(&parse_process("a{1};b{1};stop + b{1};a{1};stop").unwrap());
    let q = initial_config(&parse_process("a{1};stop ||| b{1};stop").unwrap());
    let params = CheckParams::new(6, Duration::from_ratio(1, 2));
    match config_bisimilar(&p, &q, &spec, &params).unwrap() {
        Verdict::NotBisimilar(cex) => {
            println!("distinguished at clause {}", cex.clause.id());
            for (side, m) in &cex.trace {
                println!("  {side} {m}");
            }
            for (side, start) in [(SideTag::Left, &p), (SideTag::Right, &q)] {
                let replayed = replay_op_side(&spec, TimeMode::Urgent, start, &cex.trace, side).unwrap();
                println!("{side} side replays: {}", replayed.is_some());
            }
        }
        v => println!("unexpected: {v}"),
    }
}
