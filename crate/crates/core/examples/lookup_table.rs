//! Greedy subset selection, table compilation, the binary artifact, and
//! run-time lookups.
//!
//!     cargo run --example lookup_table

use decision_compiler::{
    compile_table, greedy_select, table_lookup, Caps, CompiledTable, DiagnosisModel, Method, Observation,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = DiagnosisModel::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/triage.json"))?;
    let caps = Caps::default();

    let selection = greedy_select(&model, Method::Exact, 1, &caps)?;
    println!("start: niv {:.5}", selection.trace.initial_niv);
    for step in &selection.trace.steps {
        let via = if step.lookahead.is_empty() {
            String::new()
        } else {
            format!(" (after {})", step.lookahead.join(", "))
        };
        println!(
            "  + {}{via}: niv {:.5} -> {:.5}",
            step.evidence, step.niv_before, step.niv_after
        );
    }
    println!("stopped: {:?}", selection.trace.stopped_reason);

    let table = compile_table(&model, &selection.subset, &caps)?;
    let dir = std::env::temp_dir().join("decision-compiler-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("triage.sact");
    table.write_to(&path)?;
    println!(
        "\n{} entries, {} bytes at {}",
        table.len(),
        std::fs::metadata(&path)?.len(),
        path.display()
    );

    let loaded = CompiledTable::read_from(&path)?;
    loaded.verify_model(&model)?;
    let acts = loaded
        .actions()
        .filter(|a| *a == decision_compiler::Action::Act)
        .count();
    println!("acts in {acts} of {} situations", loaded.len());

    let mut case = Observation::new();
    for id in loaded.subset() {
        case.insert(id.clone(), matches!(id.as_str(), "stiff_neck" | "fever" | "headache"));
    }
    println!("stiff neck, fever, headache only: {}", table_lookup(&loaded, &case)?);
    Ok(())
}
