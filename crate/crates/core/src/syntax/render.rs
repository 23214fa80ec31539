use std::fmt::Write;

use super::{ActionSet, Process, Spec};

const CHOICE: u8 = 1;
const INTERRUPT: u8 = 2;
const PAR: u8 = 3;
const HIDE: u8 = 4;
const PREFIX: u8 = 5;
const ATOM: u8 = 6;

fn level(p: &Process) -> u8 {
    match p {
        Process::Choice(..) => CHOICE,
        Process::Interrupt(..) => INTERRUPT,
        Process::Par(..) => PAR,
        Process::Hide(..) => HIDE,
        Process::Prefix(..) | Process::Delay(..) | Process::Refine(..) => PREFIX,
        Process::Stop | Process::Skip(_) | Process::Ref(_) => ATOM,
    }
}

fn set(s: &ActionSet) -> String {
    s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

fn go(p: &Process, min: u8, out: &mut String) {
    let paren = level(p) < min;
    if paren {
        out.push('(');
    }
    match p {
        Process::Stop => out.push_str("stop"),
        Process::Skip(d) => {
            let _ = write!(out, "skip{{{d}}}");
        }
        Process::Ref(n) => out.push_str(n),
        Process::Delay(d, body) => {
            let _ = write!(out, "delay{{{d}}} ");
            go(body, PREFIX, out);
        }
        Process::Prefix(a, u, cont) => {
            let _ = write!(out, "{a}{{{u}}};");
            go(cont, PREFIX, out);
        }
        Process::Refine(a, by, body) => {
            let _ = write!(out, "rho {a} := ");
            go(by, CHOICE, out);
            out.push_str(" in ");
            go(body, PREFIX, out);
        }
        Process::Choice(l, r) => {
            go(l, CHOICE, out);
            out.push_str(" + ");
            go(r, INTERRUPT, out);
        }
        Process::Interrupt(l, r) => {
            go(l, INTERRUPT, out);
            out.push_str(" [> ");
            go(r, PAR, out);
        }
        Process::Par(l, sync, r) => {
            go(l, PAR, out);
            if sync.is_empty() {
                out.push_str(" ||| ");
            } else {
                let _ = write!(out, " |[{}]| ", set(sync));
            }
            go(r, HIDE, out);
        }
        Process::Hide(body, hidden) => {
            go(body, HIDE, out);
            let _ = write!(out, " \\{{{}}}", set(hidden));
        }
    }
    if paren {
        out.push(')');
    }
}

/// Source text for a process, with the minimum parentheses the grammar needs.
pub fn render(p: &Process) -> String {
    let mut out = String::new();
    go(p, CHOICE, &mut out);
    out
}

/// Source text for a whole specification.
pub fn render_spec(spec: &Spec) -> String {
    let mut out = String::new();
    if !spec.durations.is_empty() {
        out.push_str("durations");
        for (a, d) in &spec.durations {
            let _ = write!(out, " {a}={d}");
        }
        out.push_str(";\n");
    }
    let _ = writeln!(out, "main {};", spec.root);
    for (name, body) in &spec.definitions {
        let _ = writeln!(out, "process {name} :=\n  {}\nendproc", render(body));
    }
    out
}
