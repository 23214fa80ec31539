//! Shortest completion time of the two introductory processes for a few
//! duration tables.

use durcsp::opsem::{min_makespan, render_schedule};
use durcsp::syntax::parse_process;
use durcsp::{Duration, Spec};

fn main() {
    let p = parse_process("a{1};b{1};stop + b{1};a{1};stop").unwrap();
    let q = parse_process("a{1};stop ||| b{1};stop").unwrap();
    for (da, db) in [(2, 3), (5, 1), (4, 4)] {
        let table = [("a", Duration::from_int(da)), ("b", Duration::from_int(db))];
        for (name, proc) in [("P", &p), ("Q", &q)] {
            let spec = Spec::single(proc.clone(), &table);
            let ms = min_makespan(&spec, spec.default_grid(), 8).unwrap();
            println!("d(a)={da} d(b)={db} {name}: {ms}");
        }
    }
    let spec = Spec::single(q, &[("a", Duration::from_int(2)), ("b", Duration::from_int(3))]);
    print!("{}", render_schedule(&min_makespan(&spec, Duration::from_ratio(1, 2), 8).unwrap().schedule));
}
