//! Library pipeline on the shipped corpus: load, simulate, compile, compare, export.

use durcsp::config::{initial_config, psi};
use durcsp::corpus::{default_corpus_dir, load_corpus, load_spec, CorpusEntry};
use durcsp::equivalence::{config_bisimilar, refinement_preserved, tau_bisimilar_report, CheckParams, Verdict};
use durcsp::opsem::{min_makespan, parse_schedule, run, Semantics, TimeMode};
use durcsp::syntax::{parse_process, parse_spec, render_spec, validate};
use durcsp::tcts::{compile, parse_model, render_model, to_dot, validate_cts, CompileOptions};
use durcsp::{Action, Duration};

fn entry(name: &str) -> CorpusEntry {
    load_spec(&default_corpus_dir().join(format!("{name}.dcsp"))).unwrap()
}

#[test]
fn corpus_specs_validate_and_reprint() {
    for e in load_corpus(&default_corpus_dir()).unwrap() {
        assert!(validate(&e.spec).is_empty(), "{}: {:?}", e.name, validate(&e.spec));
        let again = parse_spec(&render_spec(&e.spec)).unwrap();
        assert_eq!(again, e.spec, "{}", e.name);
    }
}

#[test]
fn schedule_replays_to_expected_final_state() {
    let e = entry("intro_Q");
    let schedule = parse_schedule(&std::fs::read_to_string(default_corpus_dir().join("intro_Q.schedule")).unwrap()).unwrap();
    let sem = Semantics::new(&e.spec, TimeMode::Urgent);
    let trace = run(&sem, &initial_config(e.spec.root_process().unwrap()), &schedule).unwrap();
    assert_eq!(trace.steps.len(), 3);
    // b has run exactly d(b); it finishes only once strictly more time passes.
    assert!(!psi(trace.last()).is_finished(&e.spec).unwrap());
    let later = sem.apply_delay(trace.last(), Duration::from_ratio(1, 4)).unwrap().unwrap();
    assert!(psi(&later).is_finished(&e.spec).unwrap());
}

#[test]
fn fig31_model_survives_text_and_dot() {
    let e = entry("fig31");
    let m = compile(&e.spec, CompileOptions::default()).unwrap();
    assert!(validate_cts(&m).is_empty());
    let text = render_model(&m);
    assert_eq!(render_model(&parse_model(&text).unwrap()), text);
    let dot = to_dot(&m);
    assert!(dot.contains("0 <= c_e0 <= 4"));
    assert!(dot.contains("104 <= c_e0 <= 104"));
}

#[test]
fn intro_specs_match_their_models() {
    for name in ["intro_P", "intro_Q", "fig31"] {
        let e = entry(name);
        let m = compile(&e.spec, CompileOptions::default()).unwrap();
        let r = tau_bisimilar_report(&m, &e.spec, &CheckParams::new(8, e.spec.default_grid())).unwrap();
        assert_eq!(r.verdict, Verdict::Bisimilar { bound_hit: false }, "{name}");
        assert_eq!(r.synch_violations, 0, "{name}");
    }
}

#[test]
fn ticktock_matches_its_model_up_to_depth_three() {
    let e = entry("ticktock");
    let m = compile(&e.spec, CompileOptions { max_depth: Some(3), ..Default::default() }).unwrap();
    assert!(m.truncated);
    let r = tau_bisimilar_report(&m, &e.spec, &CheckParams::new(3, e.spec.default_grid())).unwrap();
    assert!(r.verdict.is_bisimilar(), "{}", r.verdict);
    assert_eq!(r.synch_violations, 0);
}

#[test]
fn interleaving_is_not_a_choice_of_sequences() {
    let p = entry("intro_P");
    let q = entry("intro_Q");
    let params = CheckParams::new(6, Duration::from_ratio(1, 2));
    let v = config_bisimilar(
        &initial_config(p.spec.root_process().unwrap()),
        &initial_config(q.spec.root_process().unwrap()),
        &p.spec,
        &params,
    )
    .unwrap();
    assert!(matches!(v, Verdict::NotBisimilar(_)));
    let half = Duration::from_ratio(1, 2);
    assert_eq!(min_makespan(&p.spec, half, 8).unwrap().infimum, Duration::from_int(5));
    assert_eq!(min_makespan(&q.spec, half, 8).unwrap().infimum, Duration::from_int(3));
}

#[test]
fn refining_both_sides_of_a_symmetric_choice() {
    let spec = entry("intro_P").spec;
    let p = parse_process("a{1};stop + b{1};stop").unwrap();
    let q = parse_process("b{1};stop + a{1};stop").unwrap();
    let by = parse_process("b{0};skip{1}").unwrap();
    let v = refinement_preserved(
        &by,
        &Action::visible("a"),
        &initial_config(&p),
        &initial_config(&q),
        &spec,
        &CheckParams::new(8, Duration::from_ratio(1, 2)),
    )
    .unwrap();
    assert!(v.is_bisimilar(), "{v}");
}
