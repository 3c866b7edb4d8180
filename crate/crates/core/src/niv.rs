//! Net inferential value of the compute policy and the two compile policies,
//! and the choice between computing and compiling.
//!
//! For the compute policy and the lookup-table policy
//!
//! ```text
//! niv = r * (ev - pc_h * p(H) - pc_nh * p(not H)) - mc
//! ```
//!
//! with processing costs linear in the number of evidence items handled and a
//! memory cost linear in `m` (compute) or in `2^n` table cells (compile). Tree
//! lookups are treated as free, so a tree's value is `r * ev - k5 * k6 * nodes`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_ev_compute, exact_ev_subset, Caps};
use crate::gaussian::{gaussian_ev_compute, gaussian_ev_subset};
use crate::model::{CostModel, DiagnosisModel};

/// Largest table exponent whose cell count is priced.
pub const MAX_TABLE_BITS: usize = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Gaussian,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Gaussian => "gaussian",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Compute,
    CompileTable { subset: Vec<String> },
    CompileTree { node_count: usize },
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Compute => f.write_str("compute"),
            Policy::CompileTable { subset } => write!(f, "compile_table[{}]", subset.join(",")),
            Policy::CompileTree { node_count } => write!(f, "compile_tree({node_count} nodes)"),
        }
    }
}

/// An expected value together with the policy and method that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyValue {
    pub policy: Policy,
    pub method: Method,
    pub ev: f64,
}

impl PolicyValue {
    /// Evaluates `policy` on `model`. Trees are valued by
    /// [`tree_ev`](crate::tree::tree_ev) instead.
    pub fn evaluate(model: &DiagnosisModel, policy: Policy, method: Method, caps: &Caps) -> Result<Self> {
        let ev = match (&policy, method) {
            (Policy::Compute, Method::Exact) => exact_ev_compute(model, caps)?.ev,
            (Policy::Compute, Method::Gaussian) => gaussian_ev_compute(model)?.ev,
            (Policy::CompileTable { subset }, Method::Exact) => exact_ev_subset(model, subset, caps)?.ev,
            (Policy::CompileTable { subset }, Method::Gaussian) => gaussian_ev_subset(model, subset)?.ev,
            (Policy::CompileTree { .. }, _) => return Err(Error::UnsupportedMethod("tree valuation via PolicyValue")),
        };
        Ok(Self { policy, method, ev })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NivReport {
    pub policy: Policy,
    pub ev: f64,
    pub pc_h: f64,
    pub pc_nh: f64,
    pub mc: f64,
    pub niv: f64,
    pub method: Method,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessingLoad {
    Compute { m: usize },
    Compile { n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryShape {
    Compute { m: usize },
    Table { n: usize },
    Tree { node_count: usize },
}

/// Per-episode processing costs `(given H, given not H)`.
pub fn processing_costs(costs: &CostModel, load: ProcessingLoad) -> (f64, f64) {
    match load {
        ProcessingLoad::Compute { m } => (costs.k1 * m as f64, costs.k2 * m as f64),
        ProcessingLoad::Compile { n } => (costs.k3 * n as f64, costs.k4 * n as f64),
    }
}

pub fn memory_costs(costs: &CostModel, shape: MemoryShape) -> Result<f64> {
    memory_costs_capped(costs, shape, MAX_TABLE_BITS)
}

/// As [`memory_costs`], refusing tables wider than `max_table_bits`.
pub fn memory_costs_capped(costs: &CostModel, shape: MemoryShape, max_table_bits: usize) -> Result<f64> {
    Ok(match shape {
        MemoryShape::Compute { m } => costs.k5 * m as f64,
        MemoryShape::Table { n } => {
            if n > max_table_bits.min(MAX_TABLE_BITS) {
                return Err(Error::CapExceeded {
                    what: "lookup table width",
                    size: n,
                    cap: max_table_bits.min(MAX_TABLE_BITS),
                    hint: "",
                });
            }
            costs.k5 * (1u64 << n) as f64
        }
        MemoryShape::Tree { node_count } => costs.k5 * costs.k6 * node_count as f64,
    })
}

fn assemble(model: &DiagnosisModel, ev: f64, (pc_h, pc_nh): (f64, f64), mc: f64) -> f64 {
    model.costs.r * (ev - pc_h * model.p_h - pc_nh * (1.0 - model.p_h)) - mc
}

/// NIV of a `2^n` table with expected value `ev`.
pub fn compile_table_niv(model: &DiagnosisModel, n: usize, ev: f64) -> Result<f64> {
    let pc = processing_costs(&model.costs, ProcessingLoad::Compile { n });
    let mc = memory_costs(&model.costs, MemoryShape::Table { n })?;
    Ok(assemble(model, ev, pc, mc))
}

/// NIV of a tree with `node_count` nodes and expected value `ev`.
pub fn compile_tree_niv(model: &DiagnosisModel, node_count: usize, ev: f64) -> f64 {
    let mc = model.costs.k5 * model.costs.k6 * node_count as f64;
    assemble(model, ev, (0.0, 0.0), mc)
}

/// Assembles the report for `policy` from an expected value computed for it.
pub fn niv(model: &DiagnosisModel, policy: &Policy, value: &PolicyValue) -> Result<NivReport> {
    if value.policy != *policy {
        return Err(Error::ProvenanceMismatch {
            expected: policy.to_string(),
            found: value.policy.to_string(),
        });
    }
    let costs = &model.costs;
    let (pc, mc) = match policy {
        Policy::Compute => {
            let m = model.m();
            (
                processing_costs(costs, ProcessingLoad::Compute { m }),
                memory_costs(costs, MemoryShape::Compute { m })?,
            )
        }
        Policy::CompileTable { subset } => {
            let n = subset.len();
            (
                processing_costs(costs, ProcessingLoad::Compile { n }),
                memory_costs(costs, MemoryShape::Table { n })?,
            )
        }
        Policy::CompileTree { node_count } => (
            (0.0, 0.0),
            memory_costs(
                costs,
                MemoryShape::Tree {
                    node_count: *node_count,
                },
            )?,
        ),
    };
    Ok(NivReport {
        policy: policy.clone(),
        ev: value.ev,
        pc_h: pc.0,
        pc_nh: pc.1,
        mc,
        niv: assemble(model, value.ev, pc, mc),
        method: value.method,
    })
}

pub(crate) fn table_report(model: &DiagnosisModel, subset: Vec<String>, method: Method, ev: f64) -> Result<NivReport> {
    let policy = Policy::CompileTable { subset };
    let value = PolicyValue {
        policy: policy.clone(),
        method,
        ev,
    };
    niv(model, &policy, &value)
}

/// Evaluates and reports the compute policy.
pub fn compute_report(model: &DiagnosisModel, method: Method, caps: &Caps) -> Result<NivReport> {
    let value = PolicyValue::evaluate(model, Policy::Compute, method, caps)?;
    niv(model, &Policy::Compute, &value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Compute,
    Compile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub choice: Choice,
    /// `niv(compute) - niv(compile)`
    pub margin: f64,
}

/// Compute iff its NIV is at least the compile alternative's.
pub fn compare_policies(compile: &NivReport, compute: &NivReport) -> PolicyDecision {
    let choice = if compute.niv >= compile.niv {
        Choice::Compute
    } else {
        Choice::Compile
    };
    PolicyDecision {
        choice,
        margin: compute.niv - compile.niv,
    }
}
