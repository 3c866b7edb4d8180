#![allow(dead_code)]

pub mod golden;

use decision_compiler::{CostModel, DiagnosisModel, EvidenceVariable, UtilityTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn probability(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0.02..0.98)
}

pub fn utilities(rng: &mut impl Rng) -> UtilityTable {
    let u_h_nd = rng.gen_range(-1.0..0.5);
    let u_nh_d = rng.gen_range(-1.0..0.5);
    UtilityTable::new(
        u_h_nd + rng.gen_range(0.05..1.5),
        u_h_nd,
        u_nh_d,
        u_nh_d + rng.gen_range(0.05..1.5),
    )
}

/// A valid model with `m` items, random stakes and no costs.
pub fn free_model(rng: &mut impl Rng, m: usize) -> DiagnosisModel {
    let evidence = (0..m)
        .map(|i| EvidenceVariable::new(format!("E{}", i + 1), probability(rng), probability(rng)))
        .collect();
    let model = DiagnosisModel::new(rng.gen_range(0.05..0.95), evidence, utilities(rng), CostModel::free());
    assert!(model.validate().is_empty(), "generator produced an invalid model");
    model
}

/// Costs on a scale where they sometimes, but not always, matter.
pub fn costs(rng: &mut impl Rng) -> CostModel {
    let mut c = || {
        if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.0..0.02)
        }
    };
    CostModel {
        k1: c(),
        k2: c(),
        k3: c(),
        k4: c(),
        k5: c() * 0.1,
        k6: 1.0 + c() * 200.0,
        r: 1.0,
    }
}

pub fn costed_model(rng: &mut impl Rng, m: usize) -> DiagnosisModel {
    let mut model = free_model(rng, m);
    model.costs = costs(rng);
    model.costs.r = rng.gen_range(0.5..4.0);
    model
}

/// A random subset of the model's ids, in random order.
pub fn random_subset(rng: &mut impl Rng, model: &DiagnosisModel) -> Vec<String> {
    let mut ids = model.ids();
    ids.shuffle(rng);
    let n = rng.gen_range(0..=ids.len());
    ids.truncate(n);
    ids
}
