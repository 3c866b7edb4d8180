//! Loss analysis for synthetic evidence populations.
//!
//! Under the symmetry assumption `p(E|H) = 1 - p(E|not H)` an evidence item is
//! fully described by its positive weight `w`: `alpha = e^w / (1 + e^w)` and
//! the negative weight is `-w`. Stronger items are then also more likely to be
//! observed under H, so the best `n`-item subset to compile is simply the `n`
//! items of largest weight. A [`WeightProfile`] describes a population of
//! weights; [`loss_curve`] measures how much expected value a table over the
//! top `n` items gives up relative to computing with all `m`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_ev_subset, Caps};
use crate::gaussian::{gaussian_ev_subset, sum_moments, MomentSummary};
use crate::model::{weight_pair, CostModel, DiagnosisModel, EvidenceVariable, UtilityTable};
use crate::niv::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub name: String,
    #[serde(flatten)]
    pub kind: ProfileKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `m` weights at evenly spaced quantiles of the density proportional to
    /// `max(0, intercept - slope * w)` on `(0, w_max]`.
    LinearDecay {
        intercept: f64,
        slope: f64,
        w_max: f64,
        m: usize,
    },
    Explicit {
        weights: Vec<f64>,
    },
}

impl WeightProfile {
    pub fn linear_decay(name: impl Into<String>, intercept: f64, slope: f64, w_max: f64, m: usize) -> Self {
        Self {
            name: name.into(),
            kind: ProfileKind::LinearDecay {
                intercept,
                slope,
                w_max,
                m,
            },
        }
    }

    pub fn explicit(name: impl Into<String>, weights: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: ProfileKind::Explicit { weights },
        }
    }

    /// Loads one profile object, or an array of them.
    pub fn from_json(text: &str) -> Result<Vec<Self>> {
        match serde_json::from_str::<Vec<Self>>(text) {
            Ok(list) => Ok(list),
            Err(_) => Ok(vec![serde_json::from_str::<Self>(text)?]),
        }
    }

    /// The weights this profile generates, in generation order.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let weights = match &self.kind {
            ProfileKind::Explicit { weights } => weights.clone(),
            &ProfileKind::LinearDecay {
                intercept,
                slope,
                w_max,
                m,
            } => {
                if !(intercept >= 0.0
                    && slope >= 0.0
                    && w_max > 0.0
                    && intercept.is_finite()
                    && slope.is_finite()
                    && w_max.is_finite())
                {
                    return Err(Error::InvalidProfile(format!(
                        "`{}` needs intercept >= 0, slope >= 0 and w_max > 0",
                        self.name
                    )));
                }
                let support = if slope > 0.0 {
                    w_max.min(intercept / slope)
                } else {
                    w_max
                };
                let mass = intercept * support - 0.5 * slope * support * support;
                if mass.partial_cmp(&0.0) != Some(Ordering::Greater) {
                    return Err(Error::InvalidProfile(format!(
                        "`{}` has a density that integrates to 0",
                        self.name
                    )));
                }
                // Invert F(w) = (a w - b w^2 / 2) / mass at q = (i + 1/2) / m,
                // in the form without cancellation.
                (0..m)
                    .map(|i| {
                        let target = (i as f64 + 0.5) / m as f64 * mass;
                        2.0 * target / (intercept + (intercept * intercept - 2.0 * slope * target).max(0.0).sqrt())
                    })
                    .collect()
            }
        };
        if weights.is_empty() {
            return Err(Error::InvalidProfile(format!("`{}` generates no evidence", self.name)));
        }
        if let Some(bad) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidProfile(format!(
                "`{}` has weight {bad}; weights must be finite and positive",
                self.name
            )));
        }
        Ok(weights)
    }
}

/// Shipped profiles with a common `w_max = 2` and `m = 60`.
///
/// The three densities are chosen for their shape only: "High" piles its mass
/// near zero (support ends at `w = 1`), "Moderate" decays linearly to zero at
/// `w_max`, and "Low" is flat. Their quantiles are pointwise ordered, so each
/// population is uniformly weaker than the next.
pub fn presets() -> Vec<WeightProfile> {
    vec![
        WeightProfile::linear_decay("High", 4.0, 4.0, 2.0, 60),
        WeightProfile::linear_decay("Moderate", 2.0, 1.0, 2.0, 60),
        WeightProfile::linear_decay("Low", 1.0, 0.0, 2.0, 60),
    ]
}

/// Prior used with the presets.
pub const REFERENCE_P_H: f64 = 0.5;

/// +1 for a correct action and -1 for a mistake. With these stakes and an even
/// prior the prior-only value is 0, so relative-to-compute and range
/// normalizations coincide and losses are comparable across profiles at every
/// `n`. Under 0/1 stakes the relative loss at `n = 0` is `1 - 0.5 / ev_compute`,
/// which is larger for the *stronger* profile.
pub const REFERENCE_UTILITIES: UtilityTable = UtilityTable::new(1.0, -1.0, -1.0, 1.0);

pub fn preset(name: &str) -> Option<WeightProfile> {
    presets().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

fn symmetric_evidence(id: String, w: f64) -> Result<EvidenceVariable> {
    let alpha = 1.0 / (1.0 + (-w).exp());
    let beta = 1.0 / (1.0 + w.exp());
    if !(alpha < 1.0 && beta > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "weight {w} saturates to a certain observation"
        )));
    }
    Ok(EvidenceVariable::new(id, alpha, beta))
}

/// Symmetric evidence for each weight, ids `E001`, `E002`, ... in
/// generation order.
pub fn realize_profile(profile: &WeightProfile) -> Result<Vec<EvidenceVariable>> {
    let weights = profile.weights()?;
    let width = weights.len().to_string().len().max(3);
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| symmetric_evidence(format!("E{:0width$}", i + 1), w))
        .collect()
}

/// Ids of the `n` items with the largest positive weight, strongest first;
/// ties go to the smaller id.
pub fn topn_subset(evidence: &[EvidenceVariable], n: usize) -> Result<Vec<String>> {
    if n > evidence.len() {
        return Err(Error::OutOfRange(format!(
            "cannot take the top {n} of {} evidence items",
            evidence.len()
        )));
    }
    let mut ranked: Vec<(f64, &str)> = evidence
        .iter()
        .map(|e| Ok((weight_pair(e.alpha, e.beta)?.w_pos, e.id.as_str())))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    Ok(ranked.into_iter().take(n).map(|(_, id)| id.to_owned()).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `(ev_compute - ev_compile) / ev_compute`
    #[default]
    RelativeToCompute,
    /// `(ev_compute - ev_compile) / (ev_compute - ev_compile_0)`
    RangeNormalized,
}

impl Normalization {
    fn name(self) -> &'static str {
        match self {
            Normalization::RelativeToCompute => "relative-to-compute",
            Normalization::RangeNormalized => "range-normalized",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub n: usize,
    pub ev_compile: f64,
    pub ev_compute: f64,
    pub fractional_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub profile: String,
    pub normalization: Normalization,
    /// Evaluator actually used; exact requests above the enumeration cap fall
    /// back to the normal approximation for every row.
    pub method: Method,
    pub rows: Vec<LossRow>,
}

/// The symmetric diagnosis model for a profile, with free costs.
pub fn profile_model(profile: &WeightProfile, p_h: f64, utilities: UtilityTable) -> Result<DiagnosisModel> {
    let model = DiagnosisModel::new(p_h, realize_profile(profile)?, utilities, CostModel::free());
    model.ensure_valid()?;
    Ok(model)
}

pub fn loss_curve(
    profile: &WeightProfile,
    p_h: f64,
    utilities: UtilityTable,
    method: Method,
    normalization: Normalization,
    caps: &Caps,
) -> Result<LossCurve> {
    let model = profile_model(profile, p_h, utilities)?;
    let m = model.m();
    let ranking = topn_subset(&model.evidence, m)?;
    let method = match method {
        Method::Exact if m > caps.enumeration => Method::Gaussian,
        other => other,
    };

    let evs: Vec<f64> = (0..=m)
        .map(|n| {
            let subset = &ranking[..n];
            Ok(match method {
                Method::Exact => exact_ev_subset(&model, subset, caps)?.ev,
                Method::Gaussian => gaussian_ev_subset(&model, subset)?.ev,
            })
        })
        .collect::<Result<_>>()?;

    let ev_compute = evs[m];
    let denominator = match normalization {
        Normalization::RelativeToCompute => ev_compute,
        Normalization::RangeNormalized => ev_compute - evs[0],
    };
    if denominator.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::Normalization {
            mode: normalization.name(),
            denominator,
        });
    }

    let rows = evs
        .iter()
        .enumerate()
        .map(|(n, &ev_compile)| LossRow {
            n,
            ev_compile,
            ev_compute,
            fractional_loss: (ev_compute - ev_compile) / denominator,
        })
        .collect();
    Ok(LossCurve {
        profile: profile.name.clone(),
        normalization,
        method,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub profile: String,
    /// Moments of the top-`n` weight sum for `n = 0..=m`.
    pub rows: Vec<MomentSummary>,
}

pub fn moment_series(profile: &WeightProfile, p_h: f64, utilities: UtilityTable) -> Result<MomentSeries> {
    let model = profile_model(profile, p_h, utilities)?;
    let ranking = topn_subset(&model.evidence, model.m())?;
    let rows = (0..=model.m())
        .map(|n| sum_moments(&model, &ranking[..n]))
        .collect::<Result<_>>()?;
    Ok(MomentSeries {
        profile: profile.name.clone(),
        rows,
    })
}

pub const LOSS_HEADER: [&str; 5] = ["profile", "n", "ev_compile", "ev_compute", "fractional_loss"];
pub const MOMENT_HEADER: [&str; 4] = ["profile", "n", "mean_h", "var_h"];

/// `x` with 12 significant digits, shortest form (as C's `%.12g`).
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        trim(&fixed).to_owned()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisCsv {
    pub losses: String,
    pub moments: Option<String>,
}

pub fn export_analysis(curves: &[LossCurve], moments: Option<&[MomentSeries]>) -> Result<AnalysisCsv> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOSS_HEADER)?;
    for curve in curves {
        for row in &curve.rows {
            w.write_record([
                curve.profile.clone(),
                row.n.to_string(),
                format_sig12(row.ev_compile),
                format_sig12(row.ev_compute),
                format_sig12(row.fractional_loss),
            ])?;
        }
    }
    let losses = into_string(w)?;

    let moments = moments
        .map(|series| {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(MOMENT_HEADER)?;
            for s in series {
                for (n, row) in s.rows.iter().enumerate() {
                    w.write_record([
                        s.profile.clone(),
                        n.to_string(),
                        format_sig12(row.mean_h),
                        format_sig12(row.var_h),
                    ])?;
                }
            }
            into_string(w)
        })
        .transpose()?;
    Ok(AnalysisCsv { losses, moments })
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Reads a loss CSV back into `(profile, rows)` groups, in file order.
pub fn parse_loss_csv(text: &str) -> Result<Vec<(String, Vec<LossRow>)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != LOSS_HEADER {
        return Err(Error::OutOfRange(format!("unexpected loss CSV header {header:?}")));
    }
    let mut out: Vec<(String, Vec<LossRow>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::OutOfRange(format!("bad number `{}` in column {}", &record[i], LOSS_HEADER[i])))
        };
        let row = LossRow {
            n: record[1]
                .parse()
                .map_err(|_| Error::OutOfRange(format!("bad count `{}`", &record[1])))?,
            ev_compile: num(2)?,
            ev_compute: num(3)?,
            fractional_loss: num(4)?,
        };
        match out.last_mut() {
            Some((name, rows)) if name == &record[0] => rows.push(row),
            _ => out.push((record[0].to_owned(), vec![row])),
        }
    }
    Ok(out)
}
