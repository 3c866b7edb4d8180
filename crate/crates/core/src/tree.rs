//! Asymmetric situation-action trees.
//!
//! Internal nodes test one evidence item and branch on its truth value; leaves
//! prescribe an action. Root-to-leaf paths are mutually exclusive, exhaustive
//! situations. A tree is valued by summing, over its leaves, the probability
//! of the leaf's path under each hypothesis times the utility of its action,
//! and it costs `k5 * k6` per node.
//!
//! Trees are grown leaf by leaf. A leaf is replaced by a test when the best
//! split raises the tree's net inferential value, and the children of an
//! accepted split are considered independently in turn. Leaf actions always
//! follow the threshold rule on the weights observed along the path.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{check_cap, Caps};
use crate::model::{
    model_weights, optimal_action, Action, DiagnosisModel, Hypothesis, ModelDigest, Observation, Threshold, WeightPair,
};
use crate::niv::{compile_tree_niv, niv, Method, NivReport, Policy, PolicyValue};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node {
    Leaf {
        action: Action,
    },
    Test {
        evidence: String,
        on_true: Box<Node>,
        on_false: Box<Node>,
    },
}

impl Node {
    pub fn leaf(action: Action) -> Self {
        Node::Leaf { action }
    }

    pub fn test(evidence: impl Into<String>, on_true: Node, on_false: Node) -> Self {
        Node::Test {
            evidence: evidence.into(),
            on_true: Box::new(on_true),
            on_false: Box::new(on_false),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Test { on_true, on_false, .. } => 1 + on_true.count() + on_false.count(),
        }
    }

    fn check_paths<'a>(&'a self, path: &mut Vec<&'a str>) -> Result<()> {
        if let Node::Test {
            evidence,
            on_true,
            on_false,
        } = self
        {
            if path.contains(&evidence.as_str()) {
                return Err(Error::MalformedTree(format!(
                    "evidence `{evidence}` is tested twice on one path"
                )));
            }
            path.push(evidence);
            on_true.check_paths(path)?;
            on_false.check_paths(path)?;
            path.pop();
        }
        Ok(())
    }

    fn collect_ids<'a>(&'a self, out: &mut HashSet<&'a str>) {
        if let Node::Test {
            evidence,
            on_true,
            on_false,
        } = self
        {
            out.insert(evidence);
            on_true.collect_ids(out);
            on_false.collect_ids(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SituationActionTree {
    root: Node,
    node_count: usize,
    model_digest: ModelDigest,
}

impl SituationActionTree {
    /// Wraps `root`, rejecting evidence that repeats along a path.
    pub fn new(root: Node, model_digest: ModelDigest) -> Result<Self> {
        root.check_paths(&mut Vec::new())?;
        Ok(Self {
            node_count: root.count(),
            root,
            model_digest,
        })
    }

    /// Single-leaf tree.
    pub fn null(action: Action, model_digest: ModelDigest) -> Self {
        Self {
            root: Node::leaf(action),
            node_count: 1,
            model_digest,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn model_digest(&self) -> ModelDigest {
        self.model_digest
    }

    pub fn evidence_ids(&self) -> Vec<String> {
        let mut ids = HashSet::new();
        self.root.collect_ids(&mut ids);
        let mut ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
        ids.sort();
        ids
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

    /// Complete tree testing `subset` in order, `subset[0]` at the root, with
    /// threshold-rule leaves.
    pub fn complete<S: AsRef<str>>(model: &DiagnosisModel, subset: &[S]) -> Result<Self> {
        let indices = model.resolve(subset)?;
        let weights = model_weights(model)?;
        let thr = model.threshold()?;
        fn grow(model: &DiagnosisModel, weights: &[WeightPair], thr: &Threshold, rest: &[usize], w: f64) -> Node {
            match rest.split_first() {
                None => Node::leaf(optimal_action(w, thr)),
                Some((&i, tail)) => Node::test(
                    model.evidence[i].id.clone(),
                    grow(model, weights, thr, tail, w + weights[i].w_pos),
                    grow(model, weights, thr, tail, w + weights[i].w_neg),
                ),
            }
        }
        Self::new(grow(model, &weights, &thr, &indices, 0.0), model.digest())
    }

    pub fn to_json(&self) -> String {
        let doc = TreeDocument {
            model_digest: self.model_digest,
            node_count: self.node_count,
            root: self.root.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("tree serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        let tree = Self::new(doc.root, doc.model_digest)?;
        if tree.node_count != doc.node_count {
            return Err(Error::MalformedTree(format!(
                "declared node_count {} but the tree has {} nodes",
                doc.node_count, tree.node_count
            )));
        }
        Ok(tree)
    }

    /// Graphviz rendering; nodes are numbered in preorder, true branch first.
    pub fn to_dot(&self) -> String {
        fn walk(node: &Node, next: &mut usize, out: &mut String) -> usize {
            let me = *next;
            *next += 1;
            match node {
                Node::Leaf { action } => {
                    let label = match action {
                        Action::Act => "D",
                        Action::Refrain => "¬D",
                    };
                    writeln!(out, "  n{me} [shape=box, label=\"{label}\"];").unwrap();
                }
                Node::Test {
                    evidence,
                    on_true,
                    on_false,
                } => {
                    writeln!(
                        out,
                        "  n{me} [shape=ellipse, label=\"{}\"];",
                        evidence.replace('"', "\\\"")
                    )
                    .unwrap();
                    let t = walk(on_true, next, out);
                    writeln!(out, "  n{me} -> n{t} [label=\"T\"];").unwrap();
                    let f = walk(on_false, next, out);
                    writeln!(out, "  n{me} -> n{f} [label=\"F\"];").unwrap();
                }
            }
            me
        }
        let mut out = String::from("digraph situation_action_tree {\n");
        walk(&self.root, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDocument {
    model_digest: ModelDigest,
    node_count: usize,
    root: Node,
}

fn check_tree(model: &DiagnosisModel, tree: &SituationActionTree) -> Result<()> {
    tree.root.check_paths(&mut Vec::new())?;
    for id in tree.evidence_ids() {
        if model.evidence_by_id(&id).is_none() {
            return Err(Error::UnknownEvidence(id));
        }
    }
    Ok(())
}

/// Expected utility of following `tree`, with each leaf's stored action.
pub fn tree_ev(model: &DiagnosisModel, tree: &SituationActionTree) -> Result<f64> {
    check_tree(model, tree)?;
    model.ensure_valid()?;
    fn walk(model: &DiagnosisModel, node: &Node, p_h: f64, p_nh: f64) -> f64 {
        match node {
            Node::Leaf { action } => leaf_value(model, p_h, p_nh, *action),
            Node::Test {
                evidence,
                on_true,
                on_false,
            } => {
                let e = model.evidence_by_id(evidence).expect("checked");
                walk(
                    model,
                    on_true,
                    p_h * e.likelihood(true, Hypothesis::Present),
                    p_nh * e.likelihood(true, Hypothesis::Absent),
                ) + walk(
                    model,
                    on_false,
                    p_h * e.likelihood(false, Hypothesis::Present),
                    p_nh * e.likelihood(false, Hypothesis::Absent),
                )
            }
        }
    }
    Ok(walk(model, &tree.root, 1.0, 1.0))
}

fn leaf_value(model: &DiagnosisModel, path_h: f64, path_nh: f64, action: Action) -> f64 {
    let u = &model.utilities;
    model.p_h * path_h * u.utility(Hypothesis::Present, action)
        + (1.0 - model.p_h) * path_nh * u.utility(Hypothesis::Absent, action)
}

pub fn tree_niv(model: &DiagnosisModel, tree: &SituationActionTree) -> Result<NivReport> {
    let policy = Policy::CompileTree {
        node_count: tree.node_count,
    };
    let value = PolicyValue {
        policy: policy.clone(),
        method: Method::Exact,
        ev: tree_ev(model, tree)?,
    };
    niv(model, &policy, &value)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLookup {
    pub action: Action,
    pub consulted: Vec<String>,
}

/// Walks from the root along the observed values.
pub fn tree_lookup(tree: &SituationActionTree, obs: &Observation) -> Result<TreeLookup> {
    let mut node = &tree.root;
    let mut consulted = Vec::new();
    loop {
        match node {
            Node::Leaf { action } => {
                return Ok(TreeLookup {
                    action: *action,
                    consulted,
                })
            }
            Node::Test {
                evidence,
                on_true,
                on_false,
            } => {
                let value = obs
                    .get(evidence)
                    .ok_or_else(|| Error::MissingObservation(evidence.clone()))?;
                consulted.push(evidence.clone());
                node = if value { on_true } else { on_false };
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildStep {
    /// Tests leading to the expanded leaf, root first.
    pub path: Vec<(String, bool)>,
    pub evidence: String,
    pub niv_before: f64,
    pub niv_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildTrace {
    pub initial_niv: f64,
    pub steps: Vec<BuildStep>,
    pub final_niv: f64,
}

struct Builder<'a> {
    model: &'a DiagnosisModel,
    weights: Vec<WeightPair>,
    thr: Threshold,
    split_cost: f64,
    lookahead: usize,
    niv: f64,
    steps: Vec<BuildStep>,
}

struct Split {
    index: usize,
    /// Expected-value gain over keeping the leaf.
    gain: f64,
    /// NIV change of the whole tree.
    delta: f64,
}

struct Leaf<'p> {
    path: &'p mut Vec<(usize, bool)>,
    p_h: f64,
    p_nh: f64,
    weight: f64,
}

impl Builder<'_> {
    fn best_split(&self, leaf: &Leaf<'_>) -> Option<Split> {
        let action = optimal_action(leaf.weight, &self.thr);
        let mut best: Option<Split> = None;
        for (index, e) in self.model.evidence.iter().enumerate() {
            if leaf.path.iter().any(|&(i, _)| i == index) {
                continue;
            }
            let mut gain = 0.0;
            for value in [true, false] {
                let p_h = leaf.p_h * e.likelihood(value, Hypothesis::Present);
                let p_nh = leaf.p_nh * e.likelihood(value, Hypothesis::Absent);
                let child = optimal_action(leaf.weight + self.weights[index].for_value(value), &self.thr);
                if child != action {
                    gain += leaf_value(self.model, p_h, p_nh, child) - leaf_value(self.model, p_h, p_nh, action);
                }
            }
            let delta = self.model.costs.r * gain - self.split_cost;
            let wins = match &best {
                None => true,
                Some(b) => {
                    delta > b.delta
                        || (delta == b.delta
                            && (gain > b.gain || (gain == b.gain && e.id < self.model.evidence[b.index].id)))
                }
            };
            if wins {
                best = Some(Split { index, gain, delta });
            }
        }
        best
    }

    fn child<'p>(&self, leaf: &'p mut Leaf<'_>, index: usize, value: bool) -> Leaf<'p> {
        let e = &self.model.evidence[index];
        Leaf {
            p_h: leaf.p_h * e.likelihood(value, Hypothesis::Present),
            p_nh: leaf.p_nh * e.likelihood(value, Hypothesis::Absent),
            weight: leaf.weight + self.weights[index].for_value(value),
            path: leaf.path,
        }
    }

    fn path_ids(&self, path: &[(usize, bool)]) -> Vec<(String, bool)> {
        path.iter()
            .map(|&(i, v)| (self.model.evidence[i].id.clone(), v))
            .collect()
    }

    /// Grows the subtree at `leaf`; returns it with its NIV change. Steps are
    /// only recorded when `record` is set.
    fn expand(&mut self, leaf: &mut Leaf<'_>, record: bool, slack: usize) -> (Node, f64) {
        let keep = Node::leaf(optimal_action(leaf.weight, &self.thr));
        let Some(split) = self.best_split(leaf) else {
            return (keep, 0.0);
        };
        let id = self.model.evidence[split.index].id.clone();

        if split.delta > 0.0 {
            if record {
                self.steps.push(BuildStep {
                    path: self.path_ids(leaf.path),
                    evidence: id.clone(),
                    niv_before: self.niv,
                    niv_after: self.niv + split.delta,
                });
                self.niv += split.delta;
            }
            let (node, below) = self.expand_children(leaf, split.index, id, record, self.lookahead);
            return (node, split.delta + below);
        }

        if slack == 0 {
            return (keep, 0.0);
        }
        let path_before = self.path_ids(leaf.path);
        let (node, below) = self.expand_children(leaf, split.index, id.clone(), false, slack - 1);
        let total = split.delta + below;
        if total > 0.0 {
            if record {
                self.steps.push(BuildStep {
                    path: path_before,
                    evidence: id,
                    niv_before: self.niv,
                    niv_after: self.niv + total,
                });
                self.niv += total;
            }
            (node, total)
        } else {
            (keep, 0.0)
        }
    }

    fn expand_children(
        &mut self,
        leaf: &mut Leaf<'_>,
        index: usize,
        id: String,
        record: bool,
        slack: usize,
    ) -> (Node, f64) {
        let mut sides = Vec::with_capacity(2);
        for value in [true, false] {
            leaf.path.push((index, value));
            let mut child = self.child(leaf, index, value);
            sides.push(self.expand(&mut child, record, slack));
            leaf.path.pop();
        }
        let (on_false, d_false) = sides.pop().expect("two sides");
        let (on_true, d_true) = sides.pop().expect("two sides");
        (Node::test(id, on_true, on_false), d_true + d_false)
    }
}

/// Grows a situation-action tree from the null tree by per-leaf hill-climbing
/// on the tree's net inferential value.
///
/// `lookahead` lets a leaf take up to that many consecutive non-improving
/// splits, kept only if the subtree below them pays for itself overall.
/// Only exact valuation is supported.
pub fn build_tree(
    model: &DiagnosisModel,
    method: Method,
    lookahead: usize,
    caps: &Caps,
) -> Result<(SituationActionTree, BuildTrace)> {
    if method != Method::Exact {
        return Err(Error::UnsupportedMethod("gaussian valuation of situation-action trees"));
    }
    check_cap("model for tree building", model.m(), caps.tree, "")?;
    model.ensure_valid()?;

    let thr = model.threshold()?;
    let null_action = optimal_action(0.0, &thr);
    let initial_niv = compile_tree_niv(model, 1, leaf_value(model, 1.0, 1.0, null_action));

    let mut builder = Builder {
        model,
        weights: model_weights(model)?,
        thr,
        split_cost: 2.0 * model.costs.k5 * model.costs.k6,
        lookahead,
        niv: initial_niv,
        steps: Vec::new(),
    };
    let mut path = Vec::new();
    let mut root = Leaf {
        path: &mut path,
        p_h: 1.0,
        p_nh: 1.0,
        weight: 0.0,
    };
    let (node, _) = builder.expand(&mut root, true, lookahead);
    let tree = SituationActionTree::new(node, model.digest())?;
    let trace = BuildTrace {
        initial_niv,
        final_niv: builder.niv,
        steps: builder.steps,
    };
    Ok((tree, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_ev_subset;
    use crate::model::{CostModel, EvidenceVariable, UtilityTable};
    use Action::{Act as D, Refrain as ND};

    fn m1(costs: CostModel) -> DiagnosisModel {
        DiagnosisModel::new(
            0.5,
            vec![EvidenceVariable::new("E1", 0.8, 0.2)],
            UtilityTable::symmetric(),
            costs,
        )
    }

    fn uniform_seven() -> DiagnosisModel {
        DiagnosisModel::new(
            0.5,
            (1..=7)
                .map(|i| EvidenceVariable::new(format!("E{i}"), 0.5, 0.5))
                .collect(),
            UtilityTable::symmetric(),
            CostModel {
                k5: 1.0,
                k6: 1.0,
                ..CostModel::free()
            },
        )
    }

    fn figure_three(model: &DiagnosisModel) -> SituationActionTree {
        let root = Node::test(
            "E7",
            Node::leaf(D),
            Node::test("E3", Node::test("E6", Node::leaf(D), Node::leaf(ND)), Node::leaf(ND)),
        );
        SituationActionTree::new(root, model.digest()).unwrap()
    }

    #[test]
    fn tree_ev_examples() {
        let model = m1(CostModel::free());
        let null = SituationActionTree::null(D, model.digest());
        assert_eq!(tree_ev(&model, &null).unwrap(), 0.5);

        let uniform = uniform_seven();
        assert_close!(tree_ev(&uniform, &figure_three(&uniform)).unwrap(), 0.5, 1e-12);

        let split = SituationActionTree::new(Node::test("E1", Node::leaf(D), Node::leaf(ND)), model.digest()).unwrap();
        let via_tree = tree_ev(&model, &split).unwrap();
        assert_close!(via_tree, 0.8, 1e-15);
        assert_close!(
            via_tree,
            exact_ev_subset(&model, &["E1"], &Caps::default()).unwrap().ev,
            1e-15
        );
    }

    #[test]
    fn figure_three_d_region_has_probability_five_eighths() {
        // Only the D leaves of the uniform instance: value = p(D-region | H) / 2.
        let uniform = uniform_seven();
        let tree = figure_three(&uniform);
        let mut skewed = uniform.clone();
        skewed.utilities = UtilityTable::new(1.0, 0.0, -1e-9, 0.0);
        assert_close!(
            tree_ev(&skewed, &tree).unwrap(),
            0.5 * 0.625 - 0.5 * 0.625 * 1e-9,
            1e-15
        );
    }

    #[test]
    fn tree_ev_rejects_repeats_and_unknown_ids() {
        let model = m1(CostModel::free());
        let repeat = Node::test("E1", Node::test("E1", Node::leaf(D), Node::leaf(ND)), Node::leaf(ND));
        assert!(matches!(
            SituationActionTree::new(repeat, model.digest()),
            Err(Error::MalformedTree(_))
        ));
        let stranger =
            SituationActionTree::new(Node::test("X", Node::leaf(D), Node::leaf(ND)), model.digest()).unwrap();
        assert!(matches!(tree_ev(&model, &stranger), Err(Error::UnknownEvidence(_))));
    }

    #[test]
    fn build_examples() {
        let caps = Caps::default();

        let flat = DiagnosisModel::new(
            0.5,
            vec![
                EvidenceVariable::new("A", 0.5, 0.5),
                EvidenceVariable::new("B", 0.3, 0.3),
            ],
            UtilityTable::symmetric(),
            CostModel {
                k5: 1.0,
                k6: 0.5,
                ..CostModel::free()
            },
        );
        let (tree, trace) = build_tree(&flat, Method::Exact, 0, &caps).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert!(trace.steps.is_empty());

        let model = m1(CostModel::free());
        let (tree, trace) = build_tree(&model, Method::Exact, 0, &caps).unwrap();
        assert_eq!(tree.root(), &Node::test("E1", Node::leaf(D), Node::leaf(ND)));
        assert_eq!(trace.initial_niv, 0.5);
        assert_close!(trace.final_niv, 0.8, 1e-15);

        let mut empty = model.clone();
        empty.evidence.clear();
        let (tree, _) = build_tree(&empty, Method::Exact, 0, &caps).unwrap();
        assert_eq!(tree.root(), &Node::leaf(D));
    }

    #[test]
    fn build_rejects_gaussian_and_oversized_models() {
        let model = m1(CostModel::free());
        assert!(matches!(
            build_tree(&model, Method::Gaussian, 0, &Caps::default()),
            Err(Error::UnsupportedMethod(_))
        ));
        let caps = Caps {
            tree: 0,
            ..Caps::default()
        };
        assert!(matches!(
            build_tree(&model, Method::Exact, 0, &caps),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn tree_niv_examples() {
        let uniform = uniform_seven();
        let r = tree_niv(&uniform, &figure_three(&uniform)).unwrap();
        assert_close!(r.niv, -6.5, 1e-12);

        let mut model = m1(CostModel::free());
        model.costs.r = 3.0;
        let null = SituationActionTree::null(D, model.digest());
        assert_eq!(tree_niv(&model, &null).unwrap().niv, 1.5);

        let model = m1(CostModel {
            k5: 1.0,
            k6: 1.0,
            ..CostModel::free()
        });
        let split = SituationActionTree::new(Node::test("E1", Node::leaf(D), Node::leaf(ND)), model.digest()).unwrap();
        assert_close!(tree_niv(&model, &split).unwrap().niv, -2.2, 1e-12);
    }

    #[test]
    fn lookup_examples() {
        let uniform = uniform_seven();
        let tree = figure_three(&uniform);
        let hit = tree_lookup(&tree, &Observation::new().with("E7", true)).unwrap();
        assert_eq!(
            hit,
            TreeLookup {
                action: D,
                consulted: vec!["E7".into()]
            }
        );

        let obs = Observation::new().with("E7", false).with("E3", true).with("E6", false);
        let hit = tree_lookup(&tree, &obs).unwrap();
        assert_eq!(hit.action, ND);
        assert_eq!(hit.consulted, vec!["E7", "E3", "E6"]);

        let null = SituationActionTree::null(ND, uniform.digest());
        let hit = tree_lookup(&null, &Observation::new()).unwrap();
        assert_eq!((hit.action, hit.consulted.len()), (ND, 0));

        let err = tree_lookup(&tree, &Observation::new().with("E7", false)).unwrap_err();
        assert!(matches!(err, Error::MissingObservation(id) if id == "E3"));
    }

    #[test]
    fn export_examples() {
        let uniform = uniform_seven();
        let null = SituationActionTree::null(D, uniform.digest());
        let dot = null.to_dot();
        assert_eq!(dot.matches("shape=").count(), 1);
        assert_eq!(dot.matches("->").count(), 0);

        let tree = figure_three(&uniform);
        let dot = tree.to_dot();
        assert_eq!(dot.matches("shape=").count(), 7);
        assert_eq!(dot.matches("->").count(), 6);
        assert!(dot.contains("n0 [shape=ellipse, label=\"E7\"]"));
        assert!(dot.contains("n0 -> n1 [label=\"T\"]"));
        assert!(dot.contains("label=\"¬D\""));

        let json = tree.to_json();
        let back = SituationActionTree::from_json(&json).unwrap();
        assert_eq!(back, tree);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn json_import_checks_node_count() {
        let uniform = uniform_seven();
        let json = figure_three(&uniform)
            .to_json()
            .replace("\"node_count\": 7", "\"node_count\": 6");
        assert!(matches!(
            SituationActionTree::from_json(&json),
            Err(Error::MalformedTree(_))
        ));
    }
}
