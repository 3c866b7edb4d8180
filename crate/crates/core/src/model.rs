//! Diagnosis model: one binary hypothesis, conditionally independent binary
//! evidence, a two-action utility table and the cost constants used by the
//! net-inferential-value analysis.
//!
//! Belief is updated additively in log-odds space. Each evidence item carries
//! a pair of weights of evidence (the log likelihood ratios of its two
//! outcomes), and the decision maker acts exactly when the summed weight of
//! the observed evidence reaches the threshold weight of the decision problem.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One binary evidence variable with its two conditional probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceVariable {
    pub id: String,
    /// p(E | H)
    pub alpha: f64,
    /// p(E | not H)
    pub beta: f64,
}

impl EvidenceVariable {
    pub fn new(id: impl Into<String>, alpha: f64, beta: f64) -> Self {
        Self {
            id: id.into(),
            alpha,
            beta,
        }
    }

    pub fn weights(&self) -> Result<WeightPair> {
        weight_pair(self.alpha, self.beta)
    }

    /// Probability of observing `value` for this evidence under `hypothesis`.
    pub fn likelihood(&self, value: bool, hypothesis: Hypothesis) -> f64 {
        let p = match hypothesis {
            Hypothesis::Present => self.alpha,
            Hypothesis::Absent => self.beta,
        };
        if value {
            p
        } else {
            1.0 - p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityTable {
    pub u_h_d: f64,
    pub u_h_nd: f64,
    pub u_nh_d: f64,
    pub u_nh_nd: f64,
}

impl UtilityTable {
    pub const fn new(u_h_d: f64, u_h_nd: f64, u_nh_d: f64, u_nh_nd: f64) -> Self {
        Self {
            u_h_d,
            u_h_nd,
            u_nh_d,
            u_nh_nd,
        }
    }

    /// Unit reward for the correct action, nothing otherwise.
    pub const fn symmetric() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn utility(&self, hypothesis: Hypothesis, action: Action) -> f64 {
        match (hypothesis, action) {
            (Hypothesis::Present, Action::Act) => self.u_h_d,
            (Hypothesis::Present, Action::Refrain) => self.u_h_nd,
            (Hypothesis::Absent, Action::Act) => self.u_nh_d,
            (Hypothesis::Absent, Action::Refrain) => self.u_nh_nd,
        }
    }

    fn is_ordered(&self) -> bool {
        self.u_h_d > self.u_h_nd && self.u_nh_nd > self.u_nh_d
    }
}

/// Processing, memory and lifetime constants.
///
/// `k1`/`k2` price run-time computation per evidence item given H / not H,
/// `k3`/`k4` price a compiled lookup per evidence item, `k5` prices one unit of
/// memory, `k6` is the size of a tree node relative to a table cell, and `r`
/// converts a per-episode value into a lifetime value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub r: f64,
}

impl CostModel {
    /// All costs zero and a lifetime factor of one: NIV equals expected value.
    pub const fn free() -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
            k4: 0.0,
            k5: 0.0,
            k6: 0.0,
            r: 1.0,
        }
    }
}

impl Default for CostModel {
    fn default() -> Self {
        Self::free()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosisModel {
    pub p_h: f64,
    pub evidence: Vec<EvidenceVariable>,
    pub utilities: UtilityTable,
    pub costs: CostModel,
}

impl DiagnosisModel {
    pub fn new(p_h: f64, evidence: Vec<EvidenceVariable>, utilities: UtilityTable, costs: CostModel) -> Self {
        Self {
            p_h,
            evidence,
            utilities,
            costs,
        }
    }

    /// Parses the canonical JSON form. No validation beyond the schema is done
    /// here, so that out-of-range values can still be reported by [`validate_model`].
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn m(&self) -> usize {
        self.evidence.len()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_model(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    pub fn threshold(&self) -> Result<Threshold> {
        threshold(&self.utilities, self.p_h)
    }

    pub fn evidence_by_id(&self, id: &str) -> Option<&EvidenceVariable> {
        self.evidence.iter().find(|e| e.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.evidence.iter().map(|e| e.id.clone()).collect()
    }

    /// Maps evidence ids to positions in `self.evidence`, rejecting unknown and
    /// repeated ids. Order of `subset` is preserved.
    pub fn resolve<S: AsRef<str>>(&self, subset: &[S]) -> Result<Vec<usize>> {
        let mut seen = HashSet::with_capacity(subset.len());
        subset
            .iter()
            .map(|id| {
                let id = id.as_ref();
                let index = self
                    .evidence
                    .iter()
                    .position(|e| e.id == id)
                    .ok_or_else(|| Error::UnknownEvidence(id.to_owned()))?;
                if !seen.insert(index) {
                    return Err(Error::DuplicateEvidence(id.to_owned()));
                }
                Ok(index)
            })
            .collect()
    }

    /// SHA-256 of the canonical (compact, field-ordered) JSON serialization.
    pub fn digest(&self) -> ModelDigest {
        let bytes = serde_json::to_vec(self).expect("model serializes");
        ModelDigest(Sha256::digest(&bytes).into())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDigest(pub [u8; 32]);

impl ModelDigest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(text, &mut out)
            .map_err(|e| Error::MalformedTree(format!("bad model digest `{text}`: {e}")))?;
        Ok(Self(out))
    }
}

impl fmt::Debug for ModelDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelDigest({})", self.to_hex())
    }
}

impl fmt::Display for ModelDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ModelDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ModelDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    Present,
    Absent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "D")]
    Act,
    #[serde(rename = "notD")]
    Refrain,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Act => "D",
            Action::Refrain => "notD",
        })
    }
}

/// Log likelihood ratios of the two outcomes of one evidence item.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub w_pos: f64,
    pub w_neg: f64,
}

impl WeightPair {
    pub fn for_value(&self, value: bool) -> f64 {
        if value {
            self.w_pos
        } else {
            self.w_neg
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub p_star: f64,
    pub w_star: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    PriorOutOfOpenInterval,
    AlphaOutOfOpenInterval,
    BetaOutOfOpenInterval,
    EmptyEvidenceId,
    DuplicateEvidenceId,
    NonFiniteUtility,
    DegenerateUtilityOrdering,
    NegativeCost,
    NonPositiveLifetimeFactor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            field: field.into(),
            message: message.into(),
        }
    }
}

fn in_open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

/// Lists every invariant violation of `model`; an empty list means valid.
pub fn validate_model(model: &DiagnosisModel) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    if !in_open_unit(model.p_h) {
        out.push(Violation::new(
            PriorOutOfOpenInterval,
            "p_h",
            format!("p_h = {} must lie strictly between 0 and 1", model.p_h),
        ));
    }

    let mut seen = HashSet::new();
    for (i, e) in model.evidence.iter().enumerate() {
        if e.id.is_empty() {
            out.push(Violation::new(
                EmptyEvidenceId,
                format!("evidence[{i}].id"),
                "evidence id must be nonempty",
            ));
        } else if !seen.insert(e.id.as_str()) {
            out.push(Violation::new(
                DuplicateEvidenceId,
                format!("evidence[{i}].id"),
                format!("evidence id `{}` is used more than once", e.id),
            ));
        }
        if !in_open_unit(e.alpha) {
            out.push(Violation::new(
                AlphaOutOfOpenInterval,
                format!("evidence[{i}].alpha"),
                format!("alpha = {} must lie strictly between 0 and 1", e.alpha),
            ));
        }
        if !in_open_unit(e.beta) {
            out.push(Violation::new(
                BetaOutOfOpenInterval,
                format!("evidence[{i}].beta"),
                format!("beta = {} must lie strictly between 0 and 1", e.beta),
            ));
        }
    }

    let u = &model.utilities;
    let named = [
        ("u_h_d", u.u_h_d),
        ("u_h_nd", u.u_h_nd),
        ("u_nh_d", u.u_nh_d),
        ("u_nh_nd", u.u_nh_nd),
    ];
    let mut finite = true;
    for (name, value) in named {
        if !value.is_finite() {
            finite = false;
            out.push(Violation::new(
                NonFiniteUtility,
                format!("utilities.{name}"),
                format!("{name} = {value} is not finite"),
            ));
        }
    }
    if finite {
        if u.u_h_d <= u.u_h_nd {
            out.push(Violation::new(
                DegenerateUtilityOrdering,
                "utilities.u_h_d",
                "acting must be strictly better than not acting when H holds",
            ));
        }
        if u.u_nh_nd <= u.u_nh_d {
            out.push(Violation::new(
                DegenerateUtilityOrdering,
                "utilities.u_nh_nd",
                "not acting must be strictly better than acting when H does not hold",
            ));
        }
    }

    let c = &model.costs;
    let named = [
        ("k1", c.k1),
        ("k2", c.k2),
        ("k3", c.k3),
        ("k4", c.k4),
        ("k5", c.k5),
        ("k6", c.k6),
    ];
    for (name, value) in named {
        if !(value >= 0.0 && value.is_finite()) {
            out.push(Violation::new(
                NegativeCost,
                format!("costs.{name}"),
                format!("{name} = {value} must be finite and nonnegative"),
            ));
        }
    }
    if !(c.r > 0.0 && c.r.is_finite()) {
        out.push(Violation::new(
            NonPositiveLifetimeFactor,
            "costs.r",
            format!("r = {} must be finite and positive", c.r),
        ));
    }

    out
}

/// Weights of evidence `ln(alpha/beta)` and `ln((1-alpha)/(1-beta))`.
pub fn weight_pair(alpha: f64, beta: f64) -> Result<WeightPair> {
    if !in_open_unit(alpha) {
        return Err(Error::ProbabilityDomain {
            name: "alpha",
            value: alpha,
        });
    }
    if !in_open_unit(beta) {
        return Err(Error::ProbabilityDomain {
            name: "beta",
            value: beta,
        });
    }
    Ok(WeightPair {
        w_pos: (alpha / beta).ln(),
        w_neg: ((1.0 - alpha) / (1.0 - beta)).ln(),
    })
}

/// Indifference probability `p_star` and the weight sum `w_star` that the
/// observed evidence must reach before acting is preferred.
pub fn threshold(utilities: &UtilityTable, p_h: f64) -> Result<Threshold> {
    if !in_open_unit(p_h) {
        return Err(Error::ProbabilityDomain {
            name: "p_h",
            value: p_h,
        });
    }
    if !utilities.is_ordered() {
        return Err(Error::DegenerateUtilities);
    }
    let u = utilities;
    let gain_if_h = u.u_h_d - u.u_h_nd;
    let gain_if_not_h = u.u_nh_nd - u.u_nh_d;
    let p_star = gain_if_not_h / (gain_if_h + gain_if_not_h);
    let w_star = (p_star / (1.0 - p_star)).ln() - (p_h / (1.0 - p_h)).ln();
    Ok(Threshold { p_star, w_star })
}

/// Act iff the summed weight reaches the threshold (ties act).
pub fn optimal_action(weight_sum: f64, threshold: &Threshold) -> Action {
    if weight_sum >= threshold.w_star {
        Action::Act
    } else {
        Action::Refrain
    }
}

/// Truth values for some of a model's evidence, keyed by evidence id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(BTreeMap<String, bool>);

impl Observation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, value: bool) -> Self {
        self.0.insert(id.into(), value);
        self
    }

    pub fn insert(&mut self, id: impl Into<String>, value: bool) -> Option<bool> {
        self.0.insert(id.into(), value)
    }

    pub fn get(&self, id: &str) -> Option<bool> {
        self.0.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rejects ids the model does not define.
    pub fn check_against(&self, model: &DiagnosisModel) -> Result<()> {
        match self.0.keys().find(|id| model.evidence_by_id(id).is_none()) {
            Some(id) => Err(Error::UnknownEvidence(id.clone())),
            None => Ok(()),
        }
    }
}

impl<S: Into<String>> FromIterator<(S, bool)> for Observation {
    fn from_iter<I: IntoIterator<Item = (S, bool)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

fn prior_odds(p_h: f64) -> Result<f64> {
    if !in_open_unit(p_h) {
        return Err(Error::ProbabilityDomain {
            name: "p_h",
            value: p_h,
        });
    }
    Ok(p_h / (1.0 - p_h))
}

/// Posterior odds of H after `obs`, as a direct product of likelihood ratios.
pub fn posterior_odds(model: &DiagnosisModel, obs: &Observation) -> Result<f64> {
    obs.check_against(model)?;
    let mut odds = prior_odds(model.p_h)?;
    for e in &model.evidence {
        if let Some(value) = obs.get(&e.id) {
            e.weights()?;
            odds *= e.likelihood(value, Hypothesis::Present) / e.likelihood(value, Hypothesis::Absent);
        }
    }
    Ok(odds)
}

/// Summed weight of evidence for `obs`, accumulated in model order.
pub fn observed_weight(model: &DiagnosisModel, obs: &Observation) -> Result<f64> {
    obs.check_against(model)?;
    let mut total = 0.0;
    for e in &model.evidence {
        if let Some(value) = obs.get(&e.id) {
            total += e.weights()?.for_value(value);
        }
    }
    Ok(total)
}

/// Weight pairs for every evidence item of `model`, in model order.
pub(crate) fn model_weights(model: &DiagnosisModel) -> Result<Vec<WeightPair>> {
    model.evidence.iter().map(EvidenceVariable::weights).collect()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    fn two_evidence() -> DiagnosisModel {
        DiagnosisModel::new(
            0.5,
            vec![
                EvidenceVariable::new("E1", 0.8, 0.2),
                EvidenceVariable::new("E2", 0.7, 0.3),
            ],
            UtilityTable::symmetric(),
            CostModel::free(),
        )
    }

    #[test]
    fn validate_reports_alpha_at_one() {
        let mut m = two_evidence();
        m.evidence[0].alpha = 1.0;
        let v = validate_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::AlphaOutOfOpenInterval);
        assert_eq!(v[0].field, "evidence[0].alpha");
    }

    #[test]
    fn validate_reports_degenerate_utilities() {
        let mut m = two_evidence();
        m.utilities.u_h_nd = m.utilities.u_h_d;
        let v = validate_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::DegenerateUtilityOrdering);
    }

    #[test]
    fn validate_accepts_well_formed_model() {
        assert!(validate_model(&two_evidence()).is_empty());
    }

    #[test]
    fn validate_catches_duplicates_costs_and_prior() {
        let mut m = two_evidence();
        m.evidence[1].id = "E1".into();
        m.costs.k3 = -1.0;
        m.costs.r = 0.0;
        m.p_h = 1.0;
        let codes: Vec<_> = validate_model(&m).into_iter().map(|v| v.code).collect();
        assert_eq!(
            codes,
            vec![
                ViolationCode::PriorOutOfOpenInterval,
                ViolationCode::DuplicateEvidenceId,
                ViolationCode::NegativeCost,
                ViolationCode::NonPositiveLifetimeFactor,
            ]
        );
    }

    #[test]
    fn weight_pair_examples() {
        let w = weight_pair(0.5, 0.5).unwrap();
        assert_eq!((w.w_pos, w.w_neg), (0.0, 0.0));

        let w = weight_pair(0.8, 0.2).unwrap();
        assert_close!(w.w_pos, 1.386294361119890, 1e-12);
        assert_close!(w.w_neg, -1.386294361119890, 1e-12);

        let w = weight_pair(0.9, 0.3).unwrap();
        assert_close!(w.w_pos, 1.098612288668110, 1e-12);
        assert_close!(w.w_neg, -1.945910149055313, 1e-12);
    }

    #[test]
    fn weight_pair_rejects_closed_endpoints() {
        assert!(matches!(
            weight_pair(1.0, 0.5),
            Err(Error::ProbabilityDomain { name: "alpha", .. })
        ));
        assert!(matches!(
            weight_pair(0.5, 0.0),
            Err(Error::ProbabilityDomain { name: "beta", .. })
        ));
        assert!(weight_pair(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn threshold_examples() {
        let t = threshold(&UtilityTable::symmetric(), 0.5).unwrap();
        assert_eq!(t.p_star, 0.5);
        assert_eq!(t.w_star, 0.0);

        let t = threshold(&UtilityTable::new(100.0, 0.0, -50.0, 0.0), 0.5).unwrap();
        assert_close!(t.p_star, 1.0 / 3.0, 1e-15);
        assert_close!(t.w_star, -std::f64::consts::LN_2, 1e-12);

        let t = threshold(&UtilityTable::symmetric(), 0.25).unwrap();
        assert_eq!(t.p_star, 0.5);
        assert_close!(t.w_star, 1.098612288668110, 1e-12);
    }

    #[test]
    fn threshold_rejects_degenerate_utilities() {
        let u = UtilityTable::new(1.0, 1.0, 0.0, 0.0);
        assert!(matches!(threshold(&u, 0.5), Err(Error::DegenerateUtilities)));
    }

    #[test]
    fn posterior_odds_examples() {
        let m = DiagnosisModel::new(
            0.5,
            vec![EvidenceVariable::new("E1", 0.8, 0.2)],
            UtilityTable::symmetric(),
            CostModel::free(),
        );
        assert_eq!(posterior_odds(&m, &Observation::new()).unwrap(), 1.0);
        assert_close!(
            posterior_odds(&m, &Observation::new().with("E1", true)).unwrap(),
            4.0,
            1e-12
        );
        assert_close!(
            posterior_odds(&m, &Observation::new().with("E1", false)).unwrap(),
            0.25,
            1e-12
        );
        assert!(matches!(
            posterior_odds(&m, &Observation::new().with("E9", true)),
            Err(Error::UnknownEvidence(id)) if id == "E9"
        ));
    }

    #[test]
    fn optimal_action_examples() {
        let t = Threshold {
            p_star: 0.5,
            w_star: 0.0,
        };
        assert_eq!(optimal_action(1.0, &t), Action::Act);
        assert_eq!(optimal_action(-1.0, &t), Action::Refrain);
        assert_eq!(optimal_action(0.0, &t), Action::Act);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let text = r#"{"p_h":0.5,"evidence":[],"utilities":{"u_h_d":1,"u_h_nd":0,"u_nh_d":0,"u_nh_nd":1},
            "costs":{"k1":0,"k2":0,"k3":0,"k4":0,"k5":0,"k6":0,"r":1},"extra":1}"#;
        assert!(DiagnosisModel::from_json(text).is_err());
        let text = text.replace(r#","extra":1"#, "");
        let m = DiagnosisModel::from_json(&text).unwrap();
        assert_eq!(m.m(), 0);
    }

    #[test]
    fn digest_tracks_content() {
        let a = two_evidence();
        let mut b = two_evidence();
        assert_eq!(a.digest(), b.digest());
        b.evidence[1].beta = 0.31;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(ModelDigest::from_hex(&a.digest().to_hex()).unwrap(), a.digest());
    }

    #[test]
    fn resolve_rejects_unknown_and_duplicate_ids() {
        let m = two_evidence();
        assert_eq!(m.resolve(&["E2", "E1"]).unwrap(), vec![1, 0]);
        assert!(matches!(m.resolve(&["E3"]), Err(Error::UnknownEvidence(_))));
        assert!(matches!(m.resolve(&["E1", "E1"]), Err(Error::DuplicateEvidence(_))));
    }
}
