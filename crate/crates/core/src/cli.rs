//! The `dcomp` command line.
//!
//! Machine-readable output (JSON or CSV) goes to stdout or to `--out`; notes
//! for humans go to stderr. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | the model, observation or profile is invalid |
//! | 2 | a file could not be read, written or parsed, or the arguments are wrong |
//! | 3 | the computation was refused (a cap, an unsupported method, a degenerate normalization) |
//! | 4 | an artifact was compiled from a different model |
//!
//! [`run`] is the whole program; the binary only forwards `std::env::args`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Caps;
use crate::model::{Action, DiagnosisModel, Observation, UtilityTable};
use crate::niv::{
    compare_policies, compute_report, niv, Choice, Method, NivReport, Policy, PolicyDecision, PolicyValue,
};
use crate::proto::{
    export_analysis, loss_curve, moment_series, preset, presets, Normalization, WeightProfile, REFERENCE_UTILITIES,
};
use crate::table::{compile_table, greedy_select, table_lookup, CompiledTable, Selection};
use crate::tree::{build_tree, tree_lookup, tree_niv, BuildTrace, SituationActionTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;
pub const EXIT_DIGEST: i32 = 4;

/// Exit code reported for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ProbabilityDomain { .. }
        | Error::DegenerateUtilities
        | Error::InvalidModel(_)
        | Error::UnknownEvidence(_)
        | Error::DuplicateEvidence(_)
        | Error::MissingObservation(_)
        | Error::UnexpectedObservation(_)
        | Error::InvalidProfile(_) => EXIT_INVALID,
        Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::MalformedTable(_)
        | Error::MalformedTree(_)
        | Error::UnsupportedVersion(_) => EXIT_IO,
        Error::CapExceeded { .. }
        | Error::UnsupportedMethod(_)
        | Error::Normalization { .. }
        | Error::ProvenanceMismatch { .. }
        | Error::OutOfRange(_) => EXIT_REFUSED,
        Error::DigestMismatch { .. } => EXIT_DIGEST,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dcomp",
    version,
    about = "Decide between run-time inference and compiled situation-action artifacts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the model's validation report as a JSON list of violations.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Compare computing with the best compiled table or tree.
    Analyze {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Greedily select the evidence subset to compile.
    Select {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Build a situation-action tree.
    Tree {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        lookahead: usize,
        #[command(flatten)]
        caps: CapArgs,
        #[arg(long, value_enum, default_value_t = TreeFormat::Json)]
        format: TreeFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a compiled lookup table.
    Compile {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated evidence ids; selected greedily when omitted.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Look up the action for an observation in a table or tree.
    Lookup {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required_unless_present = "tree", conflicts_with = "tree")]
        table: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        obs: PathBuf,
    },
    /// Write fractional-loss curves for weight profiles as CSV.
    Proto {
        /// Shipped profile name (High, Moderate, Low); repeatable.
        #[arg(long, conflicts_with = "profile")]
        preset: Vec<String>,
        /// JSON file holding one profile or a list of them.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        p_h: f64,
        /// `symmetric` (1/0), `signed` (+1/-1) or a JSON utility table file.
        #[arg(long, default_value = "symmetric")]
        utilities: String,
        #[arg(long, value_enum, default_value_t = Method::Gaussian)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Normalization::RelativeToCompute)]
        normalization: Normalization,
        #[command(flatten)]
        caps: CapArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the moments of the top-n weight sums.
        #[arg(long)]
        moments_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub lookahead: usize,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    #[arg(long, default_value_t = Caps::default().enumeration, value_parser = positive)]
    pub cap_enum: usize,
    #[arg(long, default_value_t = Caps::default().exhaustive, value_parser = positive)]
    pub cap_exhaustive: usize,
    #[arg(long, default_value_t = Caps::default().table, value_parser = positive)]
    pub cap_table: usize,
    #[arg(long, default_value_t = Caps::default().tree, value_parser = positive)]
    pub cap_tree: usize,
}

impl From<&CapArgs> for Caps {
    fn from(a: &CapArgs) -> Self {
        Caps {
            enumeration: a.cap_enum,
            exhaustive: a.cap_exhaustive,
            table: a.cap_table,
            tree: a.cap_tree,
        }
    }
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("caps must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Json,
    Dot,
}

/// Runs the command line on `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            return if code == 0 {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            } else {
                let _ = write!(stderr, "{}", e.render());
                EXIT_IO
            };
        }
    };
    let mut out = Output { stdout, stderr };
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out.stderr, "error: {e}");
            if let Error::InvalidModel(violations) = &e {
                for v in violations {
                    let _ = writeln!(out.stderr, "  {}: {}", v.field, v.message);
                }
            }
            exit_code(&e)
        }
    }
}

struct Output<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Output<'_> {
    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.stdout.write_all(text.as_bytes())?;
        Ok(())
    }

    fn text(&mut self, text: &str, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => fs::write(p, text)?,
            None => self.stdout.write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn note(&mut self, text: &str) {
        let _ = writeln!(self.stderr, "{text}");
    }
}

fn load_model(path: &Path) -> Result<DiagnosisModel> {
    let model = DiagnosisModel::from_path(path)?;
    model.ensure_valid()?;
    Ok(model)
}

fn dispatch(command: Command, out: &mut Output<'_>) -> Result<i32> {
    match command {
        Command::Validate { model } => {
            let model = DiagnosisModel::from_path(&model)?;
            let violations = model.validate();
            out.json(&violations)?;
            if violations.is_empty() {
                out.note("model is valid");
                Ok(EXIT_OK)
            } else {
                out.note(&format!("{} violation(s)", violations.len()));
                Ok(EXIT_INVALID)
            }
        }
        Command::Analyze { model, search } => {
            let model = load_model(&model)?;
            let report = analyze(&model, search.method, search.lookahead, &(&search.caps).into(), out)?;
            out.note(&report.decision.summary);
            out.json(&report)?;
            Ok(EXIT_OK)
        }
        Command::Select { model, search } => {
            let model = load_model(&model)?;
            let selection = greedy_select(&model, search.method, search.lookahead, &(&search.caps).into())?;
            out.note(&format!(
                "selected {} of {} items, niv {}",
                selection.subset.len(),
                model.m(),
                selection.niv
            ));
            out.json(&selection)?;
            Ok(EXIT_OK)
        }
        Command::Tree {
            model,
            lookahead,
            caps,
            format,
            out: path,
        } => {
            let model = load_model(&model)?;
            let (tree, trace) = build_tree(&model, Method::Exact, lookahead, &(&caps).into())?;
            out.note(&format!("{} nodes, niv {}", tree.node_count(), trace.final_niv));
            let text = match format {
                TreeFormat::Json => tree.to_json(),
                TreeFormat::Dot => tree.to_dot(),
            };
            out.text(&text, path.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Compile {
            model,
            subset,
            search,
            out: path,
        } => {
            let model = load_model(&model)?;
            let caps: Caps = (&search.caps).into();
            let subset = match subset {
                Some(s) => s,
                None => greedy_select(&model, search.method, search.lookahead, &caps)?.subset,
            };
            let table = compile_table(&model, &subset, &caps)?;
            table.write_to(&path)?;
            out.note(&format!(
                "wrote a {}-entry table over [{}]",
                table.len(),
                subset.join(",")
            ));
            Ok(EXIT_OK)
        }
        Command::Lookup {
            model,
            table,
            tree,
            obs,
        } => {
            let model = load_model(&model)?;
            let obs = Observation::from_json(&fs::read_to_string(&obs)?)?;
            obs.check_against(&model)?;
            let result = match (table, tree) {
                (Some(path), _) => {
                    let table = CompiledTable::read_from(&path)?;
                    table.verify_model(&model)?;
                    // A full case may carry more items than the table needs.
                    let relevant: Observation = obs
                        .iter()
                        .filter(|(id, _)| table.subset().iter().any(|s| s == id))
                        .collect();
                    LookupResult {
                        action: table_lookup(&table, &relevant)?,
                        consulted: table.subset().to_vec(),
                    }
                }
                (None, Some(path)) => {
                    let tree = SituationActionTree::from_json(&fs::read_to_string(&path)?)?;
                    tree.verify_model(&model)?;
                    let found = tree_lookup(&tree, &obs)?;
                    LookupResult {
                        action: found.action,
                        consulted: found.consulted,
                    }
                }
                (None, None) => unreachable!("clap requires --table or --tree"),
            };
            out.json(&result)?;
            Ok(EXIT_OK)
        }
        Command::Proto {
            preset: names,
            profile,
            p_h,
            utilities,
            method,
            normalization,
            caps,
            out: path,
            moments_out,
        } => {
            let profiles = match profile {
                Some(p) => WeightProfile::from_json(&fs::read_to_string(p)?)?,
                None if names.is_empty() => presets(),
                None => names
                    .iter()
                    .map(|n| preset(n).ok_or_else(|| Error::InvalidProfile(format!("no preset named `{n}`"))))
                    .collect::<Result<_>>()?,
            };
            let utilities = parse_utilities(&utilities)?;
            let caps: Caps = (&caps).into();
            let curves = profiles
                .iter()
                .map(|p| loss_curve(p, p_h, utilities, method, normalization, &caps))
                .collect::<Result<Vec<_>>>()?;
            for c in curves.iter().filter(|c| c.method != method) {
                out.note(&format!(
                    "{}: {} items exceed the enumeration cap, used the {} method",
                    c.profile,
                    c.rows.len() - 1,
                    c.method
                ));
            }
            let moments = match moments_out {
                Some(_) => Some(
                    profiles
                        .iter()
                        .map(|p| moment_series(p, p_h, utilities))
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            let csv = export_analysis(&curves, moments.as_deref())?;
            out.text(&csv.losses, path.as_deref())?;
            if let (Some(p), Some(text)) = (moments_out, csv.moments) {
                fs::write(p, text)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn parse_utilities(spec: &str) -> Result<UtilityTable> {
    match spec {
        "symmetric" => Ok(UtilityTable::symmetric()),
        "signed" => Ok(REFERENCE_UTILITIES),
        path => Ok(serde_json::from_str(&fs::read_to_string(path)?)?),
    }
}

#[derive(Debug, Serialize)]
struct LookupResult {
    action: Action,
    consulted: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub model_digest: String,
    pub compute: NivReport,
    pub table: TableCandidate,
    /// `None` when the model has more items than the tree cap.
    pub tree: Option<TreeCandidate>,
    pub best_compile: NivReport,
    pub decision: Decision,
}

#[derive(Debug, Serialize)]
pub struct TableCandidate {
    pub selection: Selection,
    pub report: NivReport,
}

#[derive(Debug, Serialize)]
pub struct TreeCandidate {
    pub report: NivReport,
    pub trace: BuildTrace,
}

#[derive(Debug, Serialize)]
pub struct Decision {
    #[serde(flatten)]
    pub decision: PolicyDecision,
    pub policy: Policy,
    pub summary: String,
}

/// Everything `dcomp analyze` reports. The tree is always valued exactly;
/// the best compiled alternative is the one with the larger NIV, a table on
/// ties.
pub fn analyze(
    model: &DiagnosisModel,
    method: Method,
    lookahead: usize,
    caps: &Caps,
    notes: &mut impl NoteSink,
) -> Result<AnalysisReport> {
    let compute = compute_report(model, method, caps)?;

    let selection = greedy_select(model, method, lookahead, caps)?;
    let policy = Policy::CompileTable {
        subset: selection.subset.clone(),
    };
    let value = PolicyValue {
        policy: policy.clone(),
        method: selection.method,
        ev: selection.ev,
    };
    let table_report = niv(model, &policy, &value)?;

    let tree = if model.m() <= caps.tree {
        let (tree, trace) = build_tree(model, Method::Exact, lookahead, caps)?;
        Some(TreeCandidate {
            report: tree_niv(model, &tree)?,
            trace,
        })
    } else {
        notes.note_line(&format!(
            "skipping the tree: {} items exceed the tree cap of {}",
            model.m(),
            caps.tree
        ));
        None
    };

    let best_compile = match &tree {
        Some(t) if t.report.niv > table_report.niv => t.report.clone(),
        _ => table_report.clone(),
    };
    let decision = compare_policies(&best_compile, &compute);
    let (winner, loser) = match decision.choice {
        Choice::Compute => (&compute, &best_compile),
        Choice::Compile => (&best_compile, &compute),
    };
    let summary = format!(
        "{} (niv {}) over {} (niv {}), margin {}",
        winner.policy, winner.niv, loser.policy, loser.niv, decision.margin
    );
    Ok(AnalysisReport {
        model_digest: model.digest().to_hex(),
        decision: Decision {
            decision,
            policy: winner.policy.clone(),
            summary,
        },
        compute,
        table: TableCandidate {
            selection,
            report: table_report,
        },
        tree,
        best_compile,
    })
}

/// Destination for side notes produced while analyzing.
pub trait NoteSink {
    fn note_line(&mut self, text: &str);
}

impl NoteSink for Output<'_> {
    fn note_line(&mut self, text: &str) {
        self.note(text);
    }
}

impl NoteSink for Vec<String> {
    fn note_line(&mut self, text: &str) {
        self.push(text.to_owned());
    }
}
