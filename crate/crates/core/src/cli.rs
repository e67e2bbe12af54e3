//! Command-line surface: argument types, the analysis report and the
//! subcommand drivers. `main` only parses and prints.

use std::fmt::Write as _;
use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::classify::{self, odd_sign_pattern, ClassifyOptions};
use crate::criterion::{
    self, c_value, old_criterion, w_criterion, w_criterion_filtered, CriterionVector, CriterionVerdict,
    OldCriterionVerdict, WVerdict,
};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue_after_pt, Party, PSD_TOL};
use crate::separability::{abs_sum_certificate, lambda_minus, mu_certificate, two_term_certificate, SeparabilityCertificate, TwoTermSearch};
use crate::states::{hyllus_state, kay_state, DensityMatrix, GhzDiagonalState, ProductState, StateDocument};

pub const EXIT_SEPARABLE: u8 = 0;
pub const EXIT_ENTANGLED: u8 = 1;
pub const EXIT_UNDECIDED: u8 = 2;
pub const EXIT_ERROR: u8 = 3;

const DEFAULT_COUNT: u64 = 100_000;
const FULL_COUNT: u64 = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "tripartite", version, about = "Entanglement criteria and separability certificates for three qubits")]
pub struct Cli {
    /// Seed for sampling and certificate searches
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Negativity threshold for eigenvalue checks
    #[arg(long, global = true, default_value_t = PSD_TOL)]
    pub tol: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Construct a state and print its JSON document
    State {
        #[command(subcommand)]
        family: Family,
    },
    /// Run partial transposes, criteria and certificates on a state file
    Analyze {
        /// State document; standard input when absent or "-"
        file: Option<PathBuf>,
    },
    /// Classify random GHZ-diagonal states
    Sample {
        #[arg(long, default_value_t = DEFAULT_COUNT)]
        count: u64,
        /// Use 10^6 samples
        #[arg(long)]
        full: bool,
    },
    /// Evaluate C(X) for four complex coefficients
    Cvalue {
        /// Four "re,im" pairs separated by spaces
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum Family {
    /// PPT family with parameter alpha >= 2
    Kay {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Family near the W state, eta > 0
    Hyllus {
        #[arg(long, allow_negative_numbers = true)]
        eta: f64,
    },
    /// GHZ-diagonal state from its eight weights
    GhzProbs {
        /// Eight comma-separated probabilities
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<f64>,
    },
    /// GHZ-diagonal state from stabilizer expectation values
    GhzLambdas {
        /// Seven comma-separated weights of ZZI, ZIZ, IZZ, XXX, YYX, YXY, XYY
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        l: Vec<f64>,
    },
    /// Pure product of three qubits
    Product {
        /// Three "re,im" amplitudes of |0>
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        /// Three "re,im" amplitudes of |1>
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
}

/// What a subcommand produced: text for each stream and the exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl Outcome {
    fn failure(e: impl std::fmt::Display) -> Self {
        Self { stderr: format!("error: {e}\n"), code: EXIT_ERROR, ..Default::default() }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Parses whitespace-separated `re,im` pairs.
pub fn parse_complex_list(s: &str, expected: usize) -> Result<Vec<Complex64>> {
    let values = s
        .split_whitespace()
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').collect();
            let parse = |t: &str| {
                t.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("cannot parse {t:?} as a number")))
            };
            match parts.as_slice() {
                [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
                _ => Err(Error::InvalidParameter(format!("expected \"re,im\", got {pair:?}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::InvalidParameter(format!("expected {expected} complex numbers, got {}", values.len())));
    }
    Ok(values)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionCheck {
    pub partition: String,
    pub min_eigenvalue: f64,
    pub ppt: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub input: StateDocument,
    pub ppt: Vec<PartitionCheck>,
    pub old_criterion: OldCriterionVerdict,
    pub observation: CriterionVerdict,
    pub w_criterion: WVerdict,
    pub w_criterion_filtered: WVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghz_diagonal: Option<GhzDiagonalState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SeparabilityCertificate>,
    pub verdict: String,
    pub exit_code: u8,
}

/// Full analysis of one state. Entanglement tests come first, in the
/// order partial transpose, anti-diagonal criterion, old criterion,
/// W criterion; certificates are only attempted for GHZ-diagonal states.
pub fn analyze(doc: &StateDocument, psd_tol: f64, seed: u64) -> Result<AnalysisReport> {
    let rho = doc.to_density(psd_tol)?;
    Ok(analyze_density(doc.clone(), &rho, psd_tol, seed))
}

pub fn analyze_density(input: StateDocument, rho: &DensityMatrix, psd_tol: f64, seed: u64) -> AnalysisReport {
    let ppt: Vec<PartitionCheck> = Party::ALL
        .iter()
        .map(|&p| {
            let m = min_eigenvalue_after_pt(rho, p);
            PartitionCheck { partition: p.to_string(), min_eigenvalue: m, ppt: m >= -psd_tol }
        })
        .collect();
    let (_, observation) = criterion::optimize_x(rho);
    let old = old_criterion(rho);
    let w = w_criterion(rho);
    let wf = w_criterion_filtered(rho);
    let ghz = GhzDiagonalState::from_density(rho, 1e-12);

    let mut certificate = None;
    let (verdict, code) = if ppt.iter().any(|c| !c.ppt) {
        ("entangled (NPT)", EXIT_ENTANGLED)
    } else if observation.violated {
        ("entangled (PPT, criterion violated)", EXIT_ENTANGLED)
    } else if old.violated {
        ("entangled (PPT, old criterion violated)", EXIT_ENTANGLED)
    } else if w.violated || wf.violated {
        ("entangled (PPT, W criterion violated)", EXIT_ENTANGLED)
    } else if rho.eigenvalues()[7] >= 1.0 - psd_tol {
        // A pure state with positive partial transpose on every cut is a
        // product across every cut.
        ("separable (pure product state)", EXIT_SEPARABLE)
    } else if let Some(s) = &ghz {
        let search = TwoTermSearch { seed, ..TwoTermSearch::default() };
        let [l2, l3, l4] = s.diagonal_weights();
        let target = 1.0 - lambda_minus(l2, l3, l4).abs();
        let cert = abs_sum_certificate(s).ok().or_else(|| {
            if odd_sign_pattern(s) {
                None
            } else {
                mu_certificate(s).ok().or_else(|| two_term_certificate(s, target, &search).ok())
            }
        });
        match cert {
            Some(c) => {
                certificate = Some(c);
                ("separable (certificate)", EXIT_SEPARABLE)
            }
            None if odd_sign_pattern(s) => ("separable (PPT sufficient for this sign pattern)", EXIT_SEPARABLE),
            None => ("undecided", EXIT_UNDECIDED),
        }
    } else {
        ("undecided", EXIT_UNDECIDED)
    };

    AnalysisReport {
        input,
        ppt,
        old_criterion: old,
        observation,
        w_criterion: w,
        w_criterion_filtered: wf,
        ghz_diagonal: ghz,
        certificate,
        verdict: verdict.to_string(),
        exit_code: code,
    }
}

impl AnalysisReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for c in &self.ppt {
            let _ = writeln!(out, "PT {:<5} min eigenvalue {:>12.4e}", c.partition, c.min_eigenvalue);
        }
        let o = &self.observation;
        let _ = writeln!(
            out,
            "criterion     |L| = {:.6e}  C*kappa = {:.6e}  ({})  violated: {}",
            o.l_value, o.bound, o.kappa_term_used, o.violated
        );
        let _ = writeln!(out, "old criterion violated: {}", self.old_criterion.violated);
        let _ = writeln!(
            out,
            "W criterion   lhs = {:.6}  rhs = {:.6}  violated: {}",
            self.w_criterion.lhs, self.w_criterion.rhs, self.w_criterion.violated
        );
        if let Some(c) = &self.certificate {
            let _ = writeln!(out, "certificate   {}  budget = {:.6}", c.method_name(), c.budget);
        }
        let _ = writeln!(out, "verdict: {}", self.verdict);
        out
    }
}

fn read_input(file: Option<&PathBuf>) -> Result<String> {
    let mut text = String::new();
    match file {
        Some(p) if p.as_os_str() != "-" => {
            text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", p.display())))?
        }
        _ => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Error::InvalidParameter(format!("cannot read standard input: {e}")))?;
        }
    }
    Ok(text)
}

fn build_state(family: &Family) -> Result<StateDocument> {
    let rho = match family {
        Family::Kay { alpha } => kay_state(*alpha)?,
        Family::Hyllus { eta } => hyllus_state(*eta)?,
        Family::GhzProbs { p } => {
            let p: [f64; 8] = p
                .as_slice()
                .try_into()
                .map_err(|_| Error::InvalidParameter(format!("expected 8 probabilities, got {}", p.len())))?;
            GhzDiagonalState::from_probs(p)?.density_matrix()
        }
        Family::GhzLambdas { l } => {
            let l: [f64; 7] = l
                .as_slice()
                .try_into()
                .map_err(|_| Error::InvalidParameter(format!("expected 7 weights, got {}", l.len())))?;
            GhzDiagonalState::from_lambdas(l)?.density_matrix()
        }
        Family::Product { c, s } => {
            let c = parse_complex_list(c, 3)?;
            let s = parse_complex_list(s, 3)?;
            ProductState::new([c[0], c[1], c[2]], [s[0], s[1], s[2]])?.density().clone()
        }
    };
    Ok(StateDocument::from_density(&rho))
}

fn matrix_table(doc: &StateDocument) -> String {
    let mut out = String::new();
    for row in doc.matrix.iter().flatten() {
        let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re:>9.5}{im:+.5}i")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::State { family } => match build_state(family) {
            Ok(doc) => Outcome {
                stdout: match cli.format {
                    Format::Json => to_json(&doc),
                    Format::Table => matrix_table(&doc),
                },
                ..Default::default()
            },
            Err(e) => Outcome::failure(e),
        },
        Command::Analyze { file } => {
            let doc = match read_input(file.as_ref()).and_then(|text| {
                serde_json::from_str::<StateDocument>(&text).map_err(|e| Error::InvalidParameter(format!("malformed state JSON: {e}")))
            }) {
                Ok(d) => d,
                Err(e) => return Outcome::failure(e),
            };
            match analyze(&doc, cli.tol, cli.seed) {
                Ok(report) => Outcome {
                    stdout: match cli.format {
                        Format::Json => to_json(&report),
                        Format::Table => report.to_table(),
                    },
                    code: report.exit_code,
                    ..Default::default()
                },
                Err(e) => Outcome::failure(e),
            }
        }
        Command::Sample { count, full } => {
            let n = if *full { FULL_COUNT } else { *count };
            if n == 0 {
                return Outcome::failure("count must be at least 1");
            }
            let opts = ClassifyOptions { psd_tol: cli.tol, ..ClassifyOptions::default() };
            let report = classify::run_ensemble_with(n, cli.seed, &opts);
            let mut stderr = String::new();
            if n < 10_000 {
                let _ = writeln!(
                    stderr,
                    "note: only {n} samples; standard errors are up to {:.2} percentage points",
                    50.0 / (n as f64).sqrt()
                );
            }
            Outcome {
                stdout: match cli.format {
                    Format::Json => to_json(&report),
                    Format::Table => report.to_table(),
                },
                stderr,
                code: 0,
            }
        }
        Command::Cvalue { x } => {
            let parsed = parse_complex_list(x, 4).and_then(|v| CriterionVector::new([v[0], v[1], v[2], v[3]]));
            match parsed {
                Ok(x) => {
                    let r = c_value(&x);
                    let stdout = match cli.format {
                        Format::Json => to_json(&r),
                        Format::Table => format!(
                            "C = {:.12}  method {:?}  maximizer ({:.9}, {:.9}, {:.9})\n",
                            r.c, r.method, r.maximizer[0], r.maximizer[1], r.maximizer[2]
                        ),
                    };
                    Outcome { stdout, ..Default::default() }
                }
                Err(e) => Outcome::failure(e),
            }
        }
    }
}
