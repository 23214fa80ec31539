use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Action, Process, Spec};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    MissingDuration(Action),
    NestedRefinementBody,
    UnknownReference(String),
    /// The names on a cycle that never passes through a prefix or a positive delay.
    UnguardedRecursion(Vec<String>),
    ReservedAction(Action),
    MissingRoot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub definition: Option<String>,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.definition {
            write!(f, "in `{d}`: ")?;
        }
        match &self.kind {
            DiagnosticKind::MissingDuration(a) => write!(f, "no duration for action `{a}`"),
            DiagnosticKind::NestedRefinementBody => {
                f.write_str("refining process contains a refinement")
            }
            DiagnosticKind::UnknownReference(n) => write!(f, "unknown process `{n}`"),
            DiagnosticKind::UnguardedRecursion(cycle) => {
                write!(f, "unguarded recursion through {}", cycle.join(" -> "))
            }
            DiagnosticKind::ReservedAction(a) => write!(f, "reserved action `{a}` used"),
            DiagnosticKind::MissingRoot(n) => write!(f, "main process `{n}` is not defined"),
        }
    }
}

/// References reachable without crossing a prefix or a positive delay.
fn unguarded_refs(p: &Process, out: &mut BTreeSet<String>) {
    match p {
        Process::Ref(n) => {
            out.insert(n.clone());
        }
        Process::Stop | Process::Skip(_) | Process::Prefix(..) => {}
        Process::Delay(d, body) => {
            if d.is_zero() {
                unguarded_refs(body, out);
            }
        }
        Process::Hide(body, _) => unguarded_refs(body, out),
        Process::Choice(l, r)
        | Process::Par(l, _, r)
        | Process::Interrupt(l, r)
        | Process::Refine(_, l, r) => {
            unguarded_refs(l, out);
            unguarded_refs(r, out);
        }
    }
}

fn find_cycles(graph: &BTreeMap<String, BTreeSet<String>>) -> Vec<Vec<String>> {
    // Report each cycle once, starting from its least name.
    let mut cycles = Vec::new();
    for start in graph.keys() {
        let mut stack = vec![(start.clone(), vec![start.clone()])];
        let mut seen = BTreeSet::new();
        while let Some((node, path)) = stack.pop() {
            for next in graph.get(&node).into_iter().flatten() {
                if next == start {
                    cycles.push(path.clone());
                } else if next > start && seen.insert(next.clone()) {
                    let mut p = path.clone();
                    p.push(next.clone());
                    stack.push((next.clone(), p));
                }
            }
        }
    }
    cycles.sort();
    cycles.dedup();
    cycles
}

/// Checks every structural invariant of a specification.
pub fn validate(spec: &Spec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !spec.definitions.contains_key(&spec.root) {
        out.push(Diagnostic { definition: None, kind: DiagnosticKind::MissingRoot(spec.root.clone()) });
    }
    let mut graph = BTreeMap::new();
    for (name, body) in &spec.definitions {
        let here = |kind| Diagnostic { definition: Some(name.clone()), kind };
        let mut missing = BTreeSet::new();
        let mut reserved = BTreeSet::new();
        let mut nested = false;
        body.walk(&mut |p| match p {
            Process::Prefix(a, _, _) => match a {
                Action::Visible(n) if !spec.durations.contains_key(n) => {
                    missing.insert(a.clone());
                }
                Action::Visible(_) => {}
                _ => {
                    reserved.insert(a.clone());
                }
            },
            Process::Par(_, set, _) | Process::Hide(_, set) => {
                reserved.extend(set.iter().filter(|a| !a.is_visible()).cloned());
            }
            Process::Refine(a, by, _) => {
                if !a.is_visible() {
                    reserved.insert(a.clone());
                }
                if refines_transitively(by, spec, &mut BTreeSet::new()) {
                    nested = true;
                }
            }
            _ => {}
        });
        out.extend(missing.into_iter().map(|a| here(DiagnosticKind::MissingDuration(a))));
        out.extend(reserved.into_iter().map(|a| here(DiagnosticKind::ReservedAction(a))));
        if nested {
            out.push(here(DiagnosticKind::NestedRefinementBody));
        }
        for r in body.references() {
            if !spec.definitions.contains_key(&r) {
                out.push(here(DiagnosticKind::UnknownReference(r)));
            }
        }
        let mut refs = BTreeSet::new();
        unguarded_refs(body, &mut refs);
        graph.insert(name.clone(), refs);
    }
    for cycle in find_cycles(&graph) {
        out.push(Diagnostic {
            definition: Some(cycle[0].clone()),
            kind: DiagnosticKind::UnguardedRecursion(cycle),
        });
    }
    out
}

fn refines_transitively(p: &Process, spec: &Spec, visited: &mut BTreeSet<String>) -> bool {
    if p.contains_refine() {
        return true;
    }
    p.references().into_iter().any(|r| {
        visited.insert(r.clone())
            && spec
                .definitions
                .get(&r)
                .is_some_and(|body| refines_transitively(body, spec, visited))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;
    use crate::time::Duration;

    fn spec_of(src: &str, durations: &[&str]) -> Spec {
        let table: Vec<(&str, Duration)> = durations.iter().map(|a| (*a, Duration::from_int(1))).collect();
        Spec::single(parse_process(src).unwrap(), &table)
    }

    #[test]
    fn intro_p_is_clean() {
        assert!(validate(&spec_of("a;b;stop + b;a;stop", &["a", "b"])).is_empty());
    }

    #[test]
    fn missing_duration() {
        let ds = validate(&spec_of("a{1};stop", &[]));
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].kind, DiagnosticKind::MissingDuration(Action::visible("a")));
    }

    #[test]
    fn nested_refinement_body() {
        let ds = validate(&spec_of("rho a := (rho b := c;skip in b;skip) in a;stop", &["a", "b", "c"]));
        assert_eq!(ds.iter().map(|d| d.kind.clone()).collect::<Vec<_>>(), vec![DiagnosticKind::NestedRefinementBody]);
    }

    #[test]
    fn delay_guarded_recursion_is_accepted() {
        let mut s = spec_of("X", &[]);
        s.definitions.insert("X".into(), parse_process("delay{1} X").unwrap());
        assert!(validate(&s).is_empty());
        s.definitions.insert("X".into(), parse_process("delay{0} X + stop").unwrap());
        assert!(matches!(validate(&s)[0].kind, DiagnosticKind::UnguardedRecursion(_)));
    }

    #[test]
    fn mutual_recursion_cycle() {
        let mut s = spec_of("X", &[]);
        s.definitions.insert("X".into(), parse_process("Y ||| stop").unwrap());
        s.definitions.insert("Y".into(), parse_process("X \\{a}").unwrap());
        let ds = validate(&s);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].kind, DiagnosticKind::UnguardedRecursion(vec!["X".into(), "Y".into()]));
    }
}
