//! DOT emitters for fission trees and Stokes quivers.

use std::fmt::Write;

use stokes_core::irregular::{FissionTree, IrregularClass};
use stokes_core::scalar::rat_to_string;

/// The fission tree as a DOT digraph: one rank per stage, edges along the
/// part maps.
pub fn fission_tree_dot(class: &IrregularClass, tree: &FissionTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph fission_tree {{");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=box, fontsize=10];");
    // stage 0: the cover fibre itself
    let _ = writeln!(out, "  subgraph cluster_stage0 {{ label=\"I\";");
    for p in class.fiber() {
        let _ = writeln!(
            out,
            "    \"s0_{}\" [label=\"{} (m{})\"];",
            p.label(),
            p.label(),
            class.mult_of(&p)
        );
    }
    let _ = writeln!(out, "  }}");
    for (i, stage) in tree.stages.iter().enumerate() {
        let _ = writeln!(
            out,
            "  subgraph cluster_stage{} {{ label=\"I({})\";",
            i + 1,
            rat_to_string(&stage.level)
        );
        for p in stage.class.fiber() {
            let _ = writeln!(
                out,
                "    \"s{}_{}\" [label=\"{} (m{})\"];",
                i + 1,
                p.label(),
                p.label(),
                stage.class.mult_of(&p)
            );
        }
        let _ = writeln!(out, "  }}");
        for (from, to) in &stage.map {
            let _ = writeln!(
                out,
                "  \"s{}_{}\" -> \"s{}_{}\";",
                i,
                from.label(),
                i + 1,
                to.label()
            );
        }
    }
    let _ = writeln!(out, "}}");
    out
}

/// One digraph per singular direction: nodes are the fibre labels, edges
/// the Stokes arrows with their levels.
pub fn quivers_dot(class: &IrregularClass) -> stokes_core::error::Result<String> {
    let mut out = String::new();
    for (i, d) in class.singular_directions()?.iter().enumerate() {
        let arrows = class.stokes_arrows_at(d)?;
        let _ = writeln!(out, "digraph stokes_quiver_{i} {{");
        let _ = writeln!(out, "  label=\"d = {}·pi\";", rat_to_string(d));
        let _ = writeln!(out, "  node [shape=circle, fontsize=10];");
        for p in class.fiber() {
            let _ = writeln!(out, "  \"{}\";", p.label());
        }
        for a in arrows {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"k={}\"];",
                a.source.label(),
                a.target.label(),
                rat_to_string(&a.level)
            );
        }
        let _ = writeln!(out, "}}");
    }
    Ok(out)
}
