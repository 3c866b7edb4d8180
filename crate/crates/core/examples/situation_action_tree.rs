//! An asymmetric situation-action tree: building it, valuing it, exporting it
//! and walking it.
//!
//!     cargo run --example situation_action_tree > tree.dot

use decision_compiler::{build_tree, tree_ev, tree_lookup, Caps, DiagnosisModel, Method, Observation};

fn main() -> decision_compiler::Result<()> {
    let model = DiagnosisModel::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/triage.json"))?;

    let (tree, trace) = build_tree(&model, Method::Exact, 1, &Caps::default())?;
    eprintln!(
        "{} nodes over {} of {} items, ev {:.5}, niv {:.5} -> {:.5} in {} splits",
        tree.node_count(),
        tree.evidence_ids().len(),
        model.m(),
        tree_ev(&model, &tree)?,
        trace.initial_niv,
        trace.final_niv,
        trace.steps.len()
    );

    let case: Observation = model
        .ids()
        .into_iter()
        .map(|id| {
            let present = id == "stiff_neck";
            (id, present)
        })
        .collect();
    let hit = tree_lookup(&tree, &case)?;
    eprintln!(
        "stiff neck alone: {} after asking {}",
        hit.action,
        hit.consulted.join(" -> ")
    );

    print!("{}", tree.to_dot());
    Ok(())
}
