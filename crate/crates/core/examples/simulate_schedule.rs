//! Replay a schedule of picks and waits and print the resulting trace.

use durcsp::config::initial_config;
use durcsp::corpus::{default_corpus_dir, load_spec};
use durcsp::opsem::{parse_schedule, run, Semantics, TimeMode};

fn main() {
    let dir = default_corpus_dir();
    let entry = load_spec(&dir.join("intro_Q.dcsp")).unwrap();
    let schedule = parse_schedule(&std::fs::read_to_string(dir.join("intro_Q.schedule")).unwrap()).unwrap();
    let sem = Semantics::new(&entry.spec, TimeMode::Urgent);
    let start = initial_config(entry.spec.root_process().unwrap());
    let trace = run(&sem, &start, &schedule).unwrap();
    for (m, c) in &trace.steps {
        println!("{m:<20} {c}");
    }
    println!("max further delay: {:?}", sem.max_delay(trace.last()).unwrap());
}
