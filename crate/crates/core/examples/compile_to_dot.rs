//! Compile a spec into a timed causal transition system and print it as DOT.
//!
//! cargo run --example compile_to_dot | dot -Tsvg > fig31.svg

use durcsp::corpus::{default_corpus_dir, load_spec};
use durcsp::tcts::{compile, to_dot, validate_cts, CompileOptions};

fn main() {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| default_corpus_dir().join("fig31.dcsp"));
    let entry = load_spec(&path).unwrap();
    let model = compile(&entry.spec, CompileOptions { max_depth: Some(6), ..Default::default() }).unwrap();
    for d in validate_cts(&model) {
        eprintln!("diagnostic: {d}");
    }
    eprintln!("{} states, {} transitions", model.states.len(), model.transitions.len());
    print!("{}", to_dot(&model));
}
