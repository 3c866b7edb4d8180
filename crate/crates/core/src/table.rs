//! Lookup-table compilation: choose an evidence subset by hill-climbing on the
//! table's net inferential value, then store the threshold-rule action for
//! every instantiation of that subset.
//!
//! # Binary format
//!
//! ```text
//! "SACT"                      magic
//! u8        0x01              version
//! u16 LE    n                 subset size
//! n x { u16 LE len, len bytes of UTF-8 }   evidence ids, subset order
//! f64 LE    w_star            threshold weight used at compile time
//! [u8; 32]                    model digest
//! ceil(2^n / 8) bytes         action bits, LSB-first; bit k set = act
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{assignment_weight, check_cap, exact_ev_subset, Caps};
use crate::gaussian::gaussian_ev_subset;
use crate::model::{optimal_action, Action, DiagnosisModel, ModelDigest, Observation, Threshold, WeightPair};
use crate::niv::{compile_table_niv, Method};

pub const MAGIC: &[u8; 4] = b"SACT";
pub const FORMAT_VERSION: u8 = 0x01;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoImprovement,
    AllSelected,
    Cap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    /// Item whose addition raised the best NIV seen so far.
    pub evidence: String,
    /// Items accepted under lookahead, in order, just before `evidence`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub lookahead: Vec<String>,
    pub niv_before: f64,
    pub niv_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub initial_niv: f64,
    pub steps: Vec<SelectionStep>,
    pub stopped_reason: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub subset: Vec<String>,
    pub ev: f64,
    pub niv: f64,
    pub method: Method,
    pub trace: SelectionTrace,
}

fn subset_ev(model: &DiagnosisModel, subset: &[String], method: Method, caps: &Caps) -> Result<f64> {
    match method {
        Method::Exact => {
            check_cap(
                "evidence subset",
                subset.len(),
                caps.enumeration,
                "; use the gaussian method for larger subsets",
            )?;
            Ok(exact_ev_subset(model, subset, caps)?.ev)
        }
        Method::Gaussian => Ok(gaussian_ev_subset(model, subset)?.ev),
    }
}

/// Greedy forward selection of the subset to compile.
///
/// Each round appends the remaining item with the largest table NIV, treating
/// it as the last item to be added. Ties go to the larger expected value, then
/// to the smaller id. A round that does not beat the best NIV so far ends the
/// search, unless `lookahead` more such rounds are still allowed; the result
/// is always the best prefix seen.
pub fn greedy_select(model: &DiagnosisModel, method: Method, lookahead: usize, caps: &Caps) -> Result<Selection> {
    model.ensure_valid()?;

    let mut current: Vec<String> = Vec::new();
    let initial_ev = subset_ev(model, &current, method, caps)?;
    let initial_niv = compile_table_niv(model, 0, initial_ev)?;

    let mut best = (0usize, initial_ev, initial_niv);
    let mut misses = 0usize;
    let mut pending: Vec<String> = Vec::new();
    let mut steps = Vec::new();

    let stopped_reason = loop {
        let remaining: Vec<&str> = model
            .evidence
            .iter()
            .map(|e| e.id.as_str())
            .filter(|id| !current.iter().any(|c| c == id))
            .collect();
        if remaining.is_empty() {
            break StopReason::AllSelected;
        }
        if current.len() >= caps.table {
            break StopReason::Cap;
        }

        let mut round: Option<(&str, f64, f64)> = None;
        let mut candidate = current.clone();
        for id in remaining {
            candidate.push(id.to_owned());
            let ev = subset_ev(model, &candidate, method, caps)?;
            let niv = compile_table_niv(model, candidate.len(), ev)?;
            candidate.pop();
            let wins = match round {
                None => true,
                Some((b_id, b_ev, b_niv)) => niv > b_niv || (niv == b_niv && (ev > b_ev || (ev == b_ev && id < b_id))),
            };
            if wins {
                round = Some((id, ev, niv));
            }
        }
        let (id, ev, niv) = round.expect("remaining is nonempty");

        if niv > best.2 {
            steps.push(SelectionStep {
                evidence: id.to_owned(),
                lookahead: std::mem::take(&mut pending),
                niv_before: best.2,
                niv_after: niv,
            });
            current.push(id.to_owned());
            best = (current.len(), ev, niv);
            misses = 0;
        } else if misses < lookahead {
            pending.push(id.to_owned());
            current.push(id.to_owned());
            misses += 1;
        } else {
            break StopReason::NoImprovement;
        }
    };

    current.truncate(best.0);
    Ok(Selection {
        subset: current,
        ev: best.1,
        niv: best.2,
        method,
        trace: SelectionTrace {
            initial_niv,
            steps,
            stopped_reason,
        },
    })
}

/// Threshold-rule actions for every instantiation of an ordered subset.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledTable {
    subset: Vec<String>,
    bits: Vec<u8>,
    w_star_used: f64,
    model_digest: ModelDigest,
}

fn packed_len(n: usize) -> usize {
    (1usize << n).div_ceil(8)
}

impl CompiledTable {
    pub fn subset(&self) -> &[String] {
        &self.subset
    }

    pub fn n(&self) -> usize {
        self.subset.len()
    }

    /// Number of table entries, `2^n`.
    pub fn len(&self) -> usize {
        1usize << self.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn w_star_used(&self) -> f64 {
        self.w_star_used
    }

    pub fn model_digest(&self) -> ModelDigest {
        self.model_digest
    }

    pub fn action_at(&self, index: usize) -> Action {
        assert!(index < self.len(), "table index {index} out of range");
        if self.bits[index / 8] >> (index % 8) & 1 == 1 {
            Action::Act
        } else {
            Action::Refrain
        }
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.len()).map(|i| self.action_at(i))
    }

    pub fn verify_model(&self, model: &DiagnosisModel) -> Result<()> {
        let digest = model.digest();
        if digest != self.model_digest {
            return Err(Error::DigestMismatch {
                artifact: self.model_digest.to_hex(),
                model: digest.to_hex(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 1 + 2 + 8 + 32 + self.bits.len());
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(self.subset.len() as u16).to_le_bytes());
        for id in &self.subset {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        out.extend_from_slice(&self.w_star_used.to_le_bytes());
        out.extend_from_slice(&self.model_digest.0);
        out.extend_from_slice(&self.bits);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::MalformedTable("bad magic".into()));
        }
        let version = r.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = r.u16()? as usize;
        let mut subset = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u16()? as usize;
            let id = std::str::from_utf8(r.take(len)?)
                .map_err(|e| Error::MalformedTable(format!("evidence id is not UTF-8: {e}")))?;
            if subset.iter().any(|s| s == id) {
                return Err(Error::MalformedTable(format!("evidence id `{id}` repeats")));
            }
            subset.push(id.to_owned());
        }
        let w_star_used = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let model_digest = ModelDigest(r.take(32)?.try_into().expect("32 bytes"));

        if n >= usize::BITS as usize - 3 {
            return Err(Error::MalformedTable(format!("table width {n} is not representable")));
        }
        let bits = r.take(packed_len(n))?.to_vec();
        if r.pos != bytes.len() {
            return Err(Error::MalformedTable(format!(
                "{} trailing byte(s)",
                bytes.len() - r.pos
            )));
        }
        let used = 1usize << n;
        if !used.is_multiple_of(8) && bits[bits.len() - 1] >> (used % 8) != 0 {
            return Err(Error::MalformedTable("padding bits are set".into()));
        }
        Ok(Self {
            subset,
            bits,
            w_star_used,
            model_digest,
        })
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::MalformedTable(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
}

pub fn compile_table<S: AsRef<str>>(model: &DiagnosisModel, subset: &[S], caps: &Caps) -> Result<CompiledTable> {
    check_cap("lookup table subset", subset.len(), caps.table, "")?;
    model.ensure_valid()?;
    let indices = model.resolve(subset)?;
    let thr = model.threshold()?;
    let weights: Vec<WeightPair> = indices
        .iter()
        .map(|&i| model.evidence[i].weights())
        .collect::<Result<_>>()?;

    let n = indices.len();
    let mut bits = vec![0u8; packed_len(n)];
    for index in 0..(1usize << n) {
        if optimal_action(assignment_weight(&weights, index as u64), &thr) == Action::Act {
            bits[index / 8] |= 1 << (index % 8);
        }
    }
    Ok(CompiledTable {
        subset: indices.iter().map(|&i| model.evidence[i].id.clone()).collect(),
        bits,
        w_star_used: thr.w_star,
        model_digest: model.digest(),
    })
}

/// Table index of an observation that covers exactly the table's subset.
pub fn table_index(table: &CompiledTable, obs: &Observation) -> Result<usize> {
    if let Some((id, _)) = obs.iter().find(|(id, _)| !table.subset.iter().any(|s| s == id)) {
        return Err(Error::UnexpectedObservation(id.to_owned()));
    }
    let mut index = 0usize;
    for (bit, id) in table.subset.iter().enumerate() {
        match obs.get(id) {
            Some(true) => index |= 1 << bit,
            Some(false) => {}
            None => return Err(Error::MissingObservation(id.clone())),
        }
    }
    Ok(index)
}

pub fn table_lookup(table: &CompiledTable, obs: &Observation) -> Result<Action> {
    Ok(table.action_at(table_index(table, obs)?))
}

/// Action recorded in `table` recomputed from scratch for one index.
pub fn recompute_action(model: &DiagnosisModel, table: &CompiledTable, index: usize) -> Result<Action> {
    let weights: Vec<WeightPair> = model
        .resolve(table.subset())?
        .iter()
        .map(|&i| model.evidence[i].weights())
        .collect::<Result<_>>()?;
    let thr = Threshold {
        p_star: f64::NAN,
        w_star: table.w_star_used,
    };
    Ok(optimal_action(assignment_weight(&weights, index as u64), &thr))
}
