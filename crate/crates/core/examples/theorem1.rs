//! Check that compiled models behave like the specs they came from, on the
//! corpus and on a batch of random loop-free specs.

use durcsp::corpus::{default_corpus_dir, load_corpus};
use durcsp::equivalence::{tau_bisimilar_report, CheckParams};
use durcsp::gen;
use durcsp::tcts::{compile, CompileOptions};

fn main() {
    for e in load_corpus(&default_corpus_dir()).unwrap() {
        let depth = if e.name == "ticktock" { 3 } else { 8 };
        let model = compile(&e.spec, CompileOptions { max_depth: Some(depth), ..Default::default() }).unwrap();
        let r = tau_bisimilar_report(&model, &e.spec, &CheckParams::new(depth, e.spec.default_grid())).unwrap();
        println!("{:<10} {} ({} positions)", e.name, r.verdict, r.pairs);
    }
    let mut rng = gen::rng(1);
    let mut ok = 0;
    for _ in 0..25 {
        let spec = gen::loop_free_spec(&mut rng, 5);
        let model = compile(&spec, CompileOptions::default()).unwrap();
        let r = tau_bisimilar_report(&model, &spec, &CheckParams::new(12, spec.default_grid())).unwrap();
        ok += usize::from(r.verdict.is_bisimilar() && r.synch_violations == 0);
    }
    println!("random specs: {ok}/25 bisimilar");
}
