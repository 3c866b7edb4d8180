//! Net inferential value of computing at run time versus the best table and
//! tree, and the resulting choice.
//!
//!     cargo run --example compute_or_compile

use decision_compiler::cli::analyze;
use decision_compiler::{Caps, DiagnosisModel, Method};

fn main() -> decision_compiler::Result<()> {
    let model = DiagnosisModel::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/triage.json"))?;
    model.ensure_valid()?;

    let mut notes = Vec::new();
    let report = analyze(&model, Method::Exact, 1, &Caps::default(), &mut notes)?;
    for r in [
        Some(&report.compute),
        Some(&report.table.report),
        report.tree.as_ref().map(|t| &t.report),
    ]
    .into_iter()
    .flatten()
    {
        println!(
            "{:<60} ev {:.4}  processing {:.4}  memory {:.6}  niv {:+.4}",
            r.policy.to_string(),
            r.ev,
            model.p_h * r.pc_h + (1.0 - model.p_h) * r.pc_nh,
            r.mc,
            r.niv
        );
    }
    println!("\n{}", report.decision.summary);

    // Ten times the lifetime makes memory relatively cheap.
    let mut busy = model.clone();
    busy.costs.r *= 10.0;
    let report = analyze(&busy, Method::Exact, 1, &Caps::default(), &mut notes)?;
    println!("r = {}: {}", busy.costs.r, report.decision.summary);
    Ok(())
}
