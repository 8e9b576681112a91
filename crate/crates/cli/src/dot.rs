//! Graphviz rendering of causal-state machines.

use std::fmt::Write;

use ising_emachine::emachine::{Level, Machine};

/// One `digraph` per recurrent class. Nodes carry `Pr(C)`; each edge is a
/// possible emission labeled `symbol | probability`.
pub fn render(machine: &Machine) -> String {
    let level = match machine.level {
        Level::Block => "block",
        Level::Spin => "spin",
    };
    let mut out = String::new();
    for (class, weight) in machine.class_weights.iter().enumerate() {
        let states = machine.states_of_class(class);
        writeln!(out, "digraph {level}_machine_class{class} {{").unwrap();
        writeln!(
            out,
            "    graph [rankdir=LR label=\"class {class} weight {weight:.6}\"]"
        )
        .unwrap();
        writeln!(out, "    node [shape=circle]").unwrap();
        for &s in &states {
            let members: Vec<&str> = machine.partition.states[s]
                .iter()
                .map(|&b| machine.member_names[b].as_str())
                .collect();
            writeln!(
                out,
                "    C{s} [label=\"C{s}\\n{{{}}}\\nPr={:.6}\"]",
                members.join(","),
                machine.partition.probs[s]
            )
            .unwrap();
        }
        for &s in &states {
            for (x, succ) in machine.successors[s].iter().enumerate() {
                if let Some(t) = succ {
                    writeln!(
                        out,
                        "    C{s} -> C{t} [label=\"{} | {:.6}\"]",
                        machine.symbols[x], machine.emissions[s][x]
                    )
                    .unwrap();
                }
            }
        }
        writeln!(out, "}}").unwrap();
    }
    out
}
