//! Explore every timing of `a;b + b;a` and `a ||| b` and print the causal
//! trees: each step shows which earlier events it had to wait for.

use std::collections::BTreeSet;

use durcsp::config::{initial_config, psi, TimedConfig};
use durcsp::opsem::{Semantics, TimeMode};
use durcsp::syntax::parse_process;
use durcsp::{Duration, Process, Spec};

fn explore(sem: &Semantics<'_>, c: &TimedConfig, depth: usize, seen: &mut BTreeSet<String>) {
    // Only the critical offsets and the midpoints between them can change
    // which steps are possible.
    let mut offsets = vec![Duration::ZERO];
    offsets.extend(sem.critical_offsets(c).unwrap());
    let mut probes: BTreeSet<Duration> = offsets.iter().copied().collect();
    for w in offsets.windows(2) {
        probes.insert((w[0] + w[1]).half());
    }
    for t in probes {
        let Some(here) = (if t.is_zero() { Some(c.clone()) } else { sem.apply_delay(c, t).unwrap() }) else {
            continue;
        };
        for (step, next) in sem.enabled_actions(&here).unwrap() {
            let causes: Vec<String> = step.causes.iter().map(|e| e.event.to_string()).collect();
            let line = format!("{}_{{{}}} {}_{}", "  ".repeat(depth), causes.join(","), step.action, step.event);
            if seen.insert(format!("{depth}{line}")) {
                println!("{line}   psi = {}", psi(&next));
                explore(sem, &next, depth + 1, seen);
            }
        }
    }
}

fn main() {
    let durations = [("a", Duration::from_int(2)), ("b", Duration::from_int(3))];
    let spec = Spec::single(Process::Stop, &durations);
    let sem = Semantics::new(&spec, TimeMode::Urgent);
    for src in ["a{1};b{1};stop + b{1};a{1};stop", "a{1};stop ||| b{1};stop"] {
        println!("{src}");
        explore(&sem, &initial_config(&parse_process(src).unwrap()), 1, &mut BTreeSet::new());
    }
}
