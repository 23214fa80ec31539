//! End-to-end runs of the binary against golden transcripts in `tests/golden`.
//!
//! Set `BLESS=1` to rewrite the transcripts after an intended output change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn transcript(args: &[&str], extra_file: Option<&Path>) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_durcsp")).current_dir(root()).args(args).output().unwrap();
    let mut t = format!("$ durcsp {}\n", args.join(" "));
    t += "--- stdout\n";
    t += &String::from_utf8_lossy(&out.stdout);
    t += "--- stderr\n";
    t += &String::from_utf8_lossy(&out.stderr);
    if let Some(f) = extra_file {
        t += "--- written\n";
        t += &fs::read_to_string(f).unwrap_or_else(|e| format!("<{e}>\n"));
    }
    t += &format!("--- exit {}\n", out.status.code().unwrap_or(-1));
    t
}

fn golden(name: &str, got: &str) {
    let path: PathBuf = root().join("tests/golden").join(format!("{name}.txt"));
    if std::env::var_os("BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, got).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; run with BLESS=1", path.display()));
    assert_eq!(got, want, "transcript {name} changed; rerun with BLESS=1 if intended");
}

macro_rules! case {
    ($name:ident, [$($arg:expr),* $(,)?]) => {
        #[test]
        fn $name() {
            golden(stringify!($name), &transcript(&[$($arg),*], None));
        }
    };
}

case!(parse_fig31, ["parse", "corpus/fig31.dcsp"]);
case!(parse_ticktock_json, ["--json", "parse", "corpus/ticktock.dcsp"]);
case!(parse_syntax_error, ["parse", "tests/fixtures/bad.dcsp"]);
case!(parse_missing_file, ["parse", "tests/fixtures/nope.dcsp"]);
case!(usage_error, ["compile"]);

case!(simulate_q, ["simulate", "corpus/intro_Q.dcsp", "--schedule", "corpus/intro_Q.schedule"]);
case!(simulate_q_lazy_json, [
    "--json", "simulate", "corpus/intro_Q.dcsp", "--schedule", "tests/fixtures/lazy.schedule", "--mode", "lazy"
]);
case!(simulate_bad_pick, ["simulate", "corpus/intro_P.dcsp", "--schedule", "tests/fixtures/bad_pick.schedule"]);

case!(compile_fig31, ["compile", "corpus/fig31.dcsp"]);
case!(compile_fig31_dot, ["compile", "corpus/fig31.dcsp", "--dot"]);
case!(compile_q_model, ["compile", "corpus/intro_Q.dcsp", "--model"]);
case!(compile_p_json, ["--json", "compile", "corpus/intro_P.dcsp"]);
case!(compile_ticktock_diagnostics, ["compile", "corpus/ticktock.dcsp", "--max-depth", "2"]);

case!(theorem1_fig31, ["check-theorem1", "corpus/fig31.dcsp"]);
case!(theorem1_q_json, ["--json", "check-theorem1", "corpus/intro_Q.dcsp", "--grid", "1"]);
case!(theorem1_sampled, ["--seed", "3", "check-theorem1", "--samples", "5", "--depth", "12"]);
case!(theorem1_sampled_json, ["--json", "--seed", "4", "check-theorem1", "--samples", "3"]);

case!(bisim_p_q, ["check-bisim", "corpus/intro_P.dcsp", "corpus/intro_Q.dcsp"]);
case!(bisim_p_p_json, ["--json", "check-bisim", "corpus/intro_P.dcsp", "corpus/intro_P.dcsp"]);
case!(bisim_cts_guard_shift, [
    "check-bisim", "corpus/fig31.dcsp", "tests/fixtures/fig31_early.dcsp", "--semantics", "cts"
]);
case!(bisim_inconclusive, ["check-bisim", "corpus/intro_P.dcsp", "corpus/intro_P.dcsp", "--max-pairs", "3"]);

case!(refine_explicit, [
    "refine-check", "--left", "corpus/intro_P.dcsp", "--right", "corpus/intro_P.dcsp", "--action", "a", "--by",
    "b{0}; skip{0}", "--grid", "1/2"
]);
case!(refine_sampled, ["--seed", "2", "refine-check", "--samples", "4"]);
case!(refine_sampled_json, ["--json", "refine-check", "--samples", "2"]);

case!(export_fig31_model, ["export", "corpus/fig31.dcsp", "--format", "model"]);
case!(export_model_to_dot, ["export", "tests/fixtures/fig31.model", "--format", "dot"]);
case!(export_json, ["--json", "export", "corpus/fig31.dcsp", "--format", "dot"]);

case!(makespan_p, ["makespan", "corpus/intro_P.dcsp", "--grid", "1/2"]);
case!(makespan_q_json, ["--json", "makespan", "corpus/intro_Q.dcsp", "--grid", "1/2"]);
case!(makespan_bad_grid, ["makespan", "corpus/intro_P.dcsp", "--grid", "2/3"]);

#[test]
fn bisim_writes_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let cex = dir.path().join("cex.trace");
    let cex_arg = cex.to_str().unwrap();
    let got = transcript(&["check-bisim", "corpus/intro_P.dcsp", "corpus/intro_Q.dcsp", "--cex", cex_arg], Some(&cex));
    golden("bisim_writes_counterexample", &got.replace(cex_arg, "<cex>"));
}
