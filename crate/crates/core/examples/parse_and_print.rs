//! Parse a spec, report diagnostics and print it back in canonical form.
//!
//! cargo run --example parse_and_print [FILE]

use durcsp::corpus::{default_corpus_dir, load_spec};
use durcsp::syntax::{render_spec, validate};

fn main() {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| default_corpus_dir().join("ticktock.dcsp"));
    let entry = match load_spec(&path) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for d in validate(&entry.spec) {
        eprintln!("warning: {d:?}");
    }
    if !entry.params.is_empty() {
        println!("# sidecar overrides: {:?}", entry.params);
    }
    print!("{}", render_spec(&entry.spec));
}
