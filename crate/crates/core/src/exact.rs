//! Exhaustive enumeration over evidence instantiations.
//!
//! Assignment `k` of an ordered subset sets `subset[i]` true iff bit `i` of `k`
//! is set. Assignments are visited in increasing `k`, and the weight sum of an
//! assignment is always accumulated in subset order, so every consumer of
//! [`assignment_weight`] sees bit-identical sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{model_weights, optimal_action, Action, DiagnosisModel, Hypothesis, Threshold, WeightPair};
use crate::niv::{compile_table_niv, NivReport};

/// Size limits for the exponential procedures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest subset evaluated by enumeration.
    pub enumeration: usize,
    /// Largest model searched over all subsets.
    pub exhaustive: usize,
    /// Largest subset compiled into a lookup table.
    pub table: usize,
    /// Largest model handed to the tree builder.
    pub tree: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            enumeration: 25,
            exhaustive: 15,
            table: 25,
            tree: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactEvaluation {
    pub ev: f64,
    pub p_act_given_h: f64,
    pub p_act_given_nh: f64,
    pub enumerated_count: u64,
}

/// Summed weight of assignment `index`, accumulated in subset order.
pub fn assignment_weight(weights: &[WeightPair], index: u64) -> f64 {
    let mut total = 0.0;
    for (bit, w) in weights.iter().enumerate() {
        total += w.for_value(index >> bit & 1 == 1);
    }
    total
}

/// Expected utility when the action D is taken with the given conditional
/// probabilities.
pub(crate) fn expected_utility(model: &DiagnosisModel, p_act_given_h: f64, p_act_given_nh: f64) -> f64 {
    let u = &model.utilities;
    model.p_h * (p_act_given_h * u.u_h_d + (1.0 - p_act_given_h) * u.u_h_nd)
        + (1.0 - model.p_h) * (p_act_given_nh * u.u_nh_d + (1.0 - p_act_given_nh) * u.u_nh_nd)
}

pub(crate) fn check_cap(what: &'static str, size: usize, cap: usize, hint: &'static str) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { what, size, cap, hint })
    } else {
        Ok(())
    }
}

struct Tally {
    act_h: f64,
    act_nh: f64,
    count: u64,
}

fn enumerate(model: &DiagnosisModel, indices: &[usize], w_star: f64) -> Result<Tally> {
    let all = model_weights(model)?;
    let weights: Vec<WeightPair> = indices.iter().map(|&i| all[i]).collect();
    let evidence: Vec<_> = indices.iter().map(|&i| &model.evidence[i]).collect();
    let count = 1u64 << indices.len();
    let threshold = Threshold {
        p_star: f64::NAN,
        w_star,
    };

    let mut tally = Tally {
        act_h: 0.0,
        act_nh: 0.0,
        count,
    };
    for index in 0..count {
        if optimal_action(assignment_weight(&weights, index), &threshold) != Action::Act {
            continue;
        }
        let mut p_h = 1.0;
        let mut p_nh = 1.0;
        for (bit, e) in evidence.iter().enumerate() {
            let value = index >> bit & 1 == 1;
            p_h *= e.likelihood(value, Hypothesis::Present);
            p_nh *= e.likelihood(value, Hypothesis::Absent);
        }
        tally.act_h += p_h;
        tally.act_nh += p_nh;
    }
    Ok(tally)
}

fn resolve_capped<S: AsRef<str>>(model: &DiagnosisModel, subset: &[S], caps: &Caps) -> Result<Vec<usize>> {
    check_cap("evidence subset", subset.len(), caps.enumeration, "")?;
    model.resolve(subset)
}

/// Expected utility of compiling `subset`: the action for every instantiation
/// of the subset is fixed by the threshold rule on its weight sum.
pub fn exact_ev_subset<S: AsRef<str>>(model: &DiagnosisModel, subset: &[S], caps: &Caps) -> Result<ExactEvaluation> {
    let indices = resolve_capped(model, subset, caps)?;
    let thr = model.threshold()?;
    let tally = enumerate(model, &indices, thr.w_star)?;
    Ok(ExactEvaluation {
        ev: expected_utility(model, tally.act_h, tally.act_nh),
        p_act_given_h: tally.act_h,
        p_act_given_nh: tally.act_nh,
        enumerated_count: tally.count,
    })
}

/// Expected utility of computing with all evidence at run time.
pub fn exact_ev_compute(model: &DiagnosisModel, caps: &Caps) -> Result<ExactEvaluation> {
    exact_ev_subset(model, &model.ids(), caps)
}

/// Probability that the subset's weight sum reaches `w_star` under `given`.
pub fn exact_tail<S: AsRef<str>>(
    model: &DiagnosisModel,
    subset: &[S],
    w_star: f64,
    given: Hypothesis,
    caps: &Caps,
) -> Result<f64> {
    let indices = resolve_capped(model, subset, caps)?;
    let tally = enumerate(model, &indices, w_star)?;
    Ok(match given {
        Hypothesis::Present => tally.act_h,
        Hypothesis::Absent => tally.act_nh,
    })
}

/// Best subset to compile into a table over all `2^m` subsets.
///
/// Ties on NIV go to the smaller subset, then to the lexicographically
/// smaller id list (ids listed in model order).
pub fn exhaustive_subset_search(model: &DiagnosisModel, caps: &Caps) -> Result<(Vec<String>, NivReport)> {
    let m = model.m();
    check_cap("model for exhaustive search", m, caps.exhaustive, "")?;
    let thr = model.threshold()?;

    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    for mask in 0u64..(1u64 << m) {
        let indices: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let tally = enumerate(model, &indices, thr.w_star)?;
        let ev = expected_utility(model, tally.act_h, tally.act_nh);
        let niv = compile_table_niv(model, indices.len(), ev)?;
        let better = match &best {
            None => true,
            Some((b, b_niv, _)) => {
                niv > *b_niv
                    || (niv == *b_niv
                        && (indices.len() < b.len()
                            || (indices.len() == b.len() && id_list(model, &indices) < id_list(model, b))))
            }
        };
        if better {
            best = Some((indices, niv, ev));
        }
    }

    let (indices, _, ev) = best.expect("at least the empty subset is considered");
    let subset = id_list(model, &indices);
    let report = crate::niv::table_report(model, subset.clone(), crate::niv::Method::Exact, ev)?;
    Ok((subset, report))
}

fn id_list(model: &DiagnosisModel, indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| model.evidence[i].id.clone()).collect()
}
