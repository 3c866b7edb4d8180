//! Golden-file cases for the command line. Every case runs in order inside one
//! scratch directory, so later cases can read artifacts earlier ones wrote.

use std::fs;
use std::path::{Path, PathBuf};

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
    /// Files the case writes into the scratch directory.
    pub files: &'static [&'static str],
}

pub const CASES: &[Case] = &[
    Case {
        name: "validate_m1",
        args: &["validate", "--model", "{data}/m1.json"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "validate_invalid",
        args: &["validate", "--model", "{fixtures}/invalid_alpha.json"],
        exit: 1,
        files: &[],
    },
    Case {
        name: "validate_malformed",
        args: &["validate", "--model", "{fixtures}/malformed.json"],
        exit: 2,
        files: &[],
    },
    Case {
        name: "validate_missing",
        args: &["validate", "--model", "{fixtures}/no_such_file.json"],
        exit: 2,
        files: &[],
    },
    Case {
        name: "usage_error",
        args: &["analyze"],
        exit: 2,
        files: &[],
    },
    Case {
        name: "analyze_m1",
        args: &["analyze", "--model", "{data}/m1.json"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "analyze_empty",
        args: &["analyze", "--model", "{fixtures}/empty_model.json"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "analyze_costly_memory",
        args: &["analyze", "--model", "{fixtures}/costly_memory.json"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "analyze_triage",
        args: &["analyze", "--model", "{data}/triage.json", "--lookahead", "1"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "analyze_triage_gaussian",
        args: &[
            "analyze",
            "--model",
            "{data}/triage.json",
            "--method",
            "gaussian",
            "--cap-tree",
            "4",
        ],
        exit: 0,
        files: &[],
    },
    Case {
        name: "analyze_invalid",
        args: &["analyze", "--model", "{fixtures}/invalid_alpha.json"],
        exit: 1,
        files: &[],
    },
    Case {
        name: "analyze_over_cap",
        args: &["analyze", "--model", "{data}/triage.json", "--cap-enum", "4"],
        exit: 3,
        files: &[],
    },
    Case {
        name: "select_triage",
        args: &["select", "--model", "{data}/triage.json"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "select_triage_gaussian",
        args: &[
            "select",
            "--model",
            "{data}/triage.json",
            "--method",
            "gaussian",
            "--lookahead",
            "2",
        ],
        exit: 0,
        files: &[],
    },
    Case {
        name: "tree_m1_dot",
        args: &["tree", "--model", "{data}/m1.json", "--format", "dot"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "tree_triage",
        args: &[
            "tree",
            "--model",
            "{data}/triage.json",
            "--out",
            "{tmp}/triage_tree.json",
        ],
        exit: 0,
        files: &["triage_tree.json"],
    },
    Case {
        name: "tree_over_cap",
        args: &["tree", "--model", "{data}/triage.json", "--cap-tree", "3"],
        exit: 3,
        files: &[],
    },
    Case {
        name: "compile_m1",
        args: &[
            "compile",
            "--model",
            "{data}/m1.json",
            "--subset",
            "E1",
            "--out",
            "{tmp}/m1.sact",
        ],
        exit: 0,
        files: &["m1.sact"],
    },
    Case {
        name: "compile_triage",
        args: &["compile", "--model", "{data}/triage.json", "--out", "{tmp}/triage.sact"],
        exit: 0,
        files: &["triage.sact"],
    },
    Case {
        name: "compile_unknown_id",
        args: &[
            "compile",
            "--model",
            "{data}/m1.json",
            "--subset",
            "E9",
            "--out",
            "{tmp}/unused.sact",
        ],
        exit: 1,
        files: &[],
    },
    Case {
        name: "lookup_m1_table",
        args: &[
            "lookup",
            "--model",
            "{data}/m1.json",
            "--table",
            "{tmp}/m1.sact",
            "--obs",
            "{data}/e1_true.json",
        ],
        exit: 0,
        files: &[],
    },
    Case {
        name: "lookup_triage_table",
        args: &[
            "lookup",
            "--model",
            "{data}/triage.json",
            "--table",
            "{tmp}/triage.sact",
            "--obs",
            "{fixtures}/triage_case.json",
        ],
        exit: 0,
        files: &[],
    },
    Case {
        name: "lookup_triage_tree",
        args: &[
            "lookup",
            "--model",
            "{data}/triage.json",
            "--tree",
            "{tmp}/triage_tree.json",
            "--obs",
            "{fixtures}/triage_case.json",
        ],
        exit: 0,
        files: &[],
    },
    Case {
        name: "lookup_wrong_model",
        args: &[
            "lookup",
            "--model",
            "{data}/two_evidence.json",
            "--table",
            "{tmp}/m1.sact",
            "--obs",
            "{data}/e1_true.json",
        ],
        exit: 4,
        files: &[],
    },
    Case {
        name: "lookup_unknown_id",
        args: &[
            "lookup",
            "--model",
            "{data}/triage.json",
            "--tree",
            "{tmp}/triage_tree.json",
            "--obs",
            "{data}/e1_true.json",
        ],
        exit: 1,
        files: &[],
    },
    Case {
        name: "lookup_missing_value",
        args: &[
            "lookup",
            "--model",
            "{data}/triage.json",
            "--tree",
            "{tmp}/triage_tree.json",
            "--obs",
            "{fixtures}/partial_case.json",
        ],
        exit: 1,
        files: &[],
    },
    Case {
        name: "proto_ln4",
        args: &["proto", "--profile", "{data}/ln4_profile.json", "--method", "exact"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "proto_presets",
        args: &[
            "proto",
            "--utilities",
            "signed",
            "--out",
            "{tmp}/losses.csv",
            "--moments-out",
            "{tmp}/moments.csv",
        ],
        exit: 0,
        files: &["losses.csv", "moments.csv"],
    },
    Case {
        name: "proto_moderate_range",
        args: &["proto", "--preset", "Moderate", "--normalization", "range-normalized"],
        exit: 0,
        files: &[],
    },
    Case {
        name: "proto_degenerate_range",
        args: &[
            "proto",
            "--profile",
            "{fixtures}/weak_profile.json",
            "--p-h",
            "0.9",
            "--normalization",
            "range-normalized",
        ],
        exit: 3,
        files: &[],
    },
];

pub struct Outcome {
    pub exit: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub files: Vec<(String, Vec<u8>)>,
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests/golden")
}

fn expand(arg: &str, tmp: &Path) -> String {
    let root = manifest_dir();
    arg.replace("{data}", &root.join("examples/data").to_string_lossy())
        .replace("{fixtures}", &root.join("tests/fixtures").to_string_lossy())
        .replace("{tmp}", &tmp.to_string_lossy())
}

pub fn run_case(case: &Case, tmp: &Path) -> Outcome {
    let args = std::iter::once("dcomp".to_owned()).chain(case.args.iter().map(|a| expand(a, tmp)));
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let exit = decision_compiler::cli::run(args, &mut stdout, &mut stderr);
    let files = case
        .files
        .iter()
        .map(|f| (f.to_string(), fs::read(tmp.join(f)).unwrap_or_default()))
        .collect();
    Outcome {
        exit,
        stdout,
        stderr,
        files,
    }
}

/// Runs every case twice in fresh directories and compares exit codes, the
/// two runs, and the checked-in golden files. With `UPDATE_GOLDEN` set the
/// golden files are rewritten instead. Returns one message per problem.
pub fn check_all() -> Vec<String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let first = tempfile::tempdir().expect("scratch dir");
    let second = tempfile::tempdir().expect("scratch dir");
    let mut problems = Vec::new();
    for case in CASES {
        let a = run_case(case, first.path());
        let b = run_case(case, second.path());
        if a.exit != case.exit {
            problems.push(format!("{}: exit {} (expected {})", case.name, a.exit, case.exit));
        }
        if a.stdout != b.stdout || a.stderr != b.stderr || a.files != b.files || a.exit != b.exit {
            problems.push(format!("{}: repeated runs differ", case.name));
        }
        let mut outputs = vec![
            (format!("{}.stdout", case.name), a.stdout),
            (format!("{}.stderr", case.name), a.stderr),
        ];
        outputs.extend(a.files);
        for (name, bytes) in outputs {
            let path = golden_dir().join(&name);
            if update {
                fs::write(&path, &bytes).expect("write golden file");
            } else {
                match fs::read(&path) {
                    Ok(expected) if expected == bytes => {}
                    Ok(_) => problems.push(format!("{name}: differs from the golden file")),
                    Err(_) => problems.push(format!("{name}: golden file is missing")),
                }
            }
        }
    }
    problems
}
