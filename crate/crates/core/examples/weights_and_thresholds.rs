//! Weights of evidence, the action threshold, and the decision they imply.
//!
//!     cargo run --example weights_and_thresholds

use decision_compiler::{observed_weight, optimal_action, posterior_odds, DiagnosisModel, Observation};

fn main() -> decision_compiler::Result<()> {
    let model = DiagnosisModel::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/triage.json"))?;
    model.ensure_valid()?;

    let thr = model.threshold()?;
    println!("p* = {:.4}, w* = {:+.4}", thr.p_star, thr.w_star);
    println!("{:<14} {:>8} {:>8}", "evidence", "w+", "w-");
    for e in &model.evidence {
        let w = e.weights()?;
        println!("{:<14} {:>+8.3} {:>+8.3}", e.id, w.w_pos, w.w_neg);
    }

    let case: Observation = [("fever", true), ("stiff_neck", true), ("headache", true)]
        .into_iter()
        .collect();
    let w = observed_weight(&model, &case)?;
    let odds = posterior_odds(&model, &case)?;
    println!(
        "\nfever + stiff neck + headache: W = {w:+.3}, p(H|E) = {:.3}, act: {}",
        odds / (1.0 + odds),
        optimal_action(w, &thr)
    );
    Ok(())
}
