//! Fractional loss from compiling only the `n` strongest items, for the
//! shipped weight profiles.
//!
//!     cargo run --example loss_curves > losses.csv

use decision_compiler::proto::{REFERENCE_P_H, REFERENCE_UTILITIES};
use decision_compiler::{export_analysis, loss_curve, presets, Caps, Method, Normalization};

fn main() -> decision_compiler::Result<()> {
    let curves = presets()
        .iter()
        .map(|p| {
            loss_curve(
                p,
                REFERENCE_P_H,
                REFERENCE_UTILITIES,
                Method::Gaussian,
                Normalization::RelativeToCompute,
                &Caps::default(),
            )
        })
        .collect::<decision_compiler::Result<Vec<_>>>()?;

    for c in &curves {
        let under_1pct = c.rows.iter().find(|r| r.fractional_loss < 0.01).map(|r| r.n);
        eprintln!(
            "{:<9} loss below 1% from n = {}",
            c.profile,
            under_1pct.unwrap_or(c.rows.len() - 1)
        );
    }
    print!("{}", export_analysis(&curves, None)?.losses);
    Ok(())
}
