//! The Tick-Tock service: load it with its sidecar parameters, compile a
//! bounded unfolding and compare it with the operational semantics.

use std::time::Instant;

use durcsp::corpus::{default_corpus_dir, load_spec};
use durcsp::equivalence::{tau_bisimilar_report, CheckParams};
use durcsp::tcts::{compile, CompileOptions};

fn main() {
    let depth: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let e = load_spec(&default_corpus_dir().join("ticktock.dcsp")).unwrap();
    println!("parameters: {:?}", e.params);
    let start = Instant::now();
    let model = compile(&e.spec, CompileOptions { max_depth: Some(depth), ..Default::default() }).unwrap();
    println!("depth {depth}: {} states, {} transitions", model.states.len(), model.transitions.len());
    let r = tau_bisimilar_report(&model, &e.spec, &CheckParams::new(depth, e.spec.default_grid())).unwrap();
    println!("{} after {} positions in {:.2?}", r.verdict, r.pairs, start.elapsed());
}
