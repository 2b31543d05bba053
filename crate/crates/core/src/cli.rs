//! Command-line surface and the JSON file formats.
//!
//! All scalars are JSON strings (`"-3/4"`, `"7"`) and matrices are row-major
//! arrays of rows. A problem file names a field, a dimension and exactly one
//! description of the map:
//!
//! ```json
//! {"field":{"type":"Q"},"n":2,"conjugator":[["0","1"],["1","0"]]}
//! ```
//!
//! `full_table[i][j]` holds the image of the matrix unit in row `i+1`,
//! column `j+1`; `generator_pair` holds `{"H": ..., "G": ...}`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::automorphism::{AutomorphismOracle, ValidationReport};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::fuzz::{self, FuzzConfig, IdentitySummary, TrialMode};
use crate::matrix::Matrix;
use crate::skolem_noether::{recover, Outcome, RecoverOptions, RecoveryReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;

type MatrixText = Vec<Vec<String>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorPairText {
    #[serde(rename = "H")]
    pub h: MatrixText,
    #[serde(rename = "G")]
    pub g: MatrixText,
}

/// On-disk problem file, before scalar parsing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub field: FieldSpec,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugator: Option<MatrixText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_table: Option<Vec<Vec<MatrixText>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_pair: Option<GeneratorPairText>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProblemInput {
    Conjugator(Matrix),
    /// Row-major over `(i, j)`, like [`AutomorphismOracle::full_table`].
    FullTable(Vec<Matrix>),
    GeneratorPair { h: Matrix, g: Matrix },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub field: FieldSpec,
    pub n: usize,
    pub input: ProblemInput,
}

fn parse_matrix(spec: FieldSpec, n: usize, text: &MatrixText, what: &str) -> Result<Matrix> {
    if text.len() != n || text.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{what} must be {n}x{n}")));
    }
    let rows = text
        .iter()
        .map(|r| {
            r.iter()
                .map(|s| FieldElement::parse(spec, s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Parse(format!("{what}: {e}")))?;
    Matrix::from_rows(spec, rows)
}

fn matrix_text(m: &Matrix) -> MatrixText {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(ToString::to_string).collect())
        .collect()
}

impl Problem {
    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        let (spec, n) = (file.field, file.n);
        if n == 0 {
            return Err(Error::Parse("n must be positive".into()));
        }
        let present = [
            file.conjugator.is_some(),
            file.full_table.is_some(),
            file.generator_pair.is_some(),
        ];
        if present.iter().filter(|&&p| p).count() != 1 {
            return Err(Error::Parse(
                "exactly one of conjugator, full_table, generator_pair must be given".into(),
            ));
        }
        let input = if let Some(b) = &file.conjugator {
            let b = parse_matrix(spec, n, b, "conjugator")?;
            if b.det()?.is_zero() {
                return Err(Error::Parse("conjugator must be invertible (det = 0)".into()));
            }
            ProblemInput::Conjugator(b)
        } else if let Some(table) = &file.full_table {
            if table.len() != n || table.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("full_table must be {n}x{n} images")));
            }
            let mut images = Vec::with_capacity(n * n);
            for (i, row) in table.iter().enumerate() {
                for (j, m) in row.iter().enumerate() {
                    let what = format!("full_table image of E_{{{},{}}}", i + 1, j + 1);
                    images.push(parse_matrix(spec, n, m, &what)?);
                }
            }
            ProblemInput::FullTable(images)
        } else {
            let pair = file.generator_pair.as_ref().expect("checked above");
            let h = parse_matrix(spec, n, &pair.h, "H")?;
            let g = parse_matrix(spec, n, &pair.g, "G")?;
            if n == 1 && !g.is_zero() {
                return Err(Error::Parse("for n = 1, G = phi(0) must be 0".into()));
            }
            ProblemInput::GeneratorPair { h, g }
        };
        Ok(Problem {
            field: spec,
            n,
            input,
        })
    }

    pub fn to_file(&self) -> ProblemFile {
        let mut file = ProblemFile {
            field: self.field,
            n: self.n,
            conjugator: None,
            full_table: None,
            generator_pair: None,
        };
        match &self.input {
            ProblemInput::Conjugator(b) => file.conjugator = Some(matrix_text(b)),
            ProblemInput::FullTable(images) => {
                file.full_table = Some(
                    images
                        .chunks(self.n)
                        .map(|row| row.iter().map(matrix_text).collect())
                        .collect(),
                )
            }
            ProblemInput::GeneratorPair { h, g } => {
                file.generator_pair = Some(GeneratorPairText {
                    h: matrix_text(h),
                    g: matrix_text(g),
                })
            }
        }
        file
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn oracle(&self) -> Result<AutomorphismOracle> {
        match &self.input {
            ProblemInput::Conjugator(b) => AutomorphismOracle::conjugation_by(b.clone()),
            ProblemInput::FullTable(images) => {
                AutomorphismOracle::full_table(self.field, self.n, images.clone())
            }
            ProblemInput::GeneratorPair { h, g } => {
                AutomorphismOracle::generator_pair(h.clone(), g.clone())
            }
        }
    }
}

/// Output of `recover`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoverOutput {
    pub input_sha256: String,
    pub conjugator: Option<MatrixText>,
    pub conjugator_inverse: Option<MatrixText>,
    pub kernel_vector: Option<Vec<String>>,
    pub report: RecoveryReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the construction on a parsed problem. Returns the output document
/// and the process exit code.
pub fn recover_problem(problem: &Problem, input: &[u8], verify: bool) -> Result<(RecoverOutput, i32)> {
    let phi = problem.oracle()?;
    let ground_truth = match &problem.input {
        ProblemInput::Conjugator(b) => Some(b),
        _ => None,
    };
    let rec = recover(
        &phi,
        RecoverOptions {
            verify,
            validate: false,
            ground_truth,
        },
    )?;
    let code = rec.report.outcome.exit_code();
    let out = RecoverOutput {
        input_sha256: sha256_hex(input),
        conjugator: rec.witness.as_ref().map(|w| matrix_text(w.conjugator())),
        conjugator_inverse: rec.witness.as_ref().map(|w| matrix_text(w.inverse())),
        kernel_vector: rec
            .witness
            .as_ref()
            .map(|w| w.kernel_vector().entries().iter().map(ToString::to_string).collect()),
        report: rec.report,
    };
    Ok((out, code))
}

/// Validation of a conjugator or full-table problem; generator pairs are
/// rejected.
pub fn check_problem(problem: &Problem) -> Result<(ValidationReport, i32)> {
    if let ProblemInput::GeneratorPair { .. } = problem.input {
        return Err(Error::Parse(
            "check-aut needs a conjugator or full_table input, not generator_pair".into(),
        ));
    }
    let report = problem.oracle()?.validate()?;
    let code = if report.is_automorphism() {
        EXIT_OK
    } else {
        Outcome::ValidationFailed.exit_code()
    };
    Ok((report, code))
}

pub fn generate_problem(field: FieldSpec, n: usize, seed: u64, entry_bound: u64) -> Result<Problem> {
    if n == 0 || n > fuzz::MAX_DIMENSION {
        return Err(Error::InvalidConfig(format!(
            "n must lie within 1..{}",
            fuzz::MAX_DIMENSION
        )));
    }
    if entry_bound == 0 {
        return Err(Error::InvalidConfig("entry bound must be at least 1".into()));
    }
    let b = fuzz::random_invertible(field, n, &mut fuzz::rng_for(seed), entry_bound)?;
    Ok(Problem {
        field,
        n,
        input: ProblemInput::Conjugator(b),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub rng: String,
    pub mode: TrialMode,
    pub trials: usize,
    pub outcomes: BTreeMap<Outcome, usize>,
    /// Reports that contradict expectations: a genuine automorphism that was
    /// not recovered, or a non-automorphism that was.
    pub false_outcomes: usize,
    pub identities: Option<IdentitySummary>,
    pub violations: u64,
}

/// Whether a report agrees with what its trial mode guarantees.
pub fn report_as_expected(mode: TrialMode, r: &RecoveryReport) -> bool {
    match mode {
        TrialMode::Conjugation | TrialMode::GeneratorPair => {
            r.outcome == Outcome::Recovered
                && r.query_count == 2
                && matches!(&r.scalar, Some(l) if !l.is_zero())
                && r.checks.as_ref().is_some_and(|c| c.all_ok())
        }
        // the transpose of a 1x1 matrix is itself, so n = 1 is inner
        TrialMode::Transpose => (r.outcome == Outcome::Recovered) == (r.n == 1),
        TrialMode::AdversarialPair => r.outcome != Outcome::Recovered,
    }
}

/// Runs both suites and renders the JSON-lines report: one line per trial,
/// then one summary line. Returns the text and the exit code.
pub fn fuzz_report(cfg: &FuzzConfig) -> Result<(String, i32)> {
    let reports = fuzz::run_roundtrip_suite(cfg)?;
    let identities = match cfg.mode {
        TrialMode::Conjugation | TrialMode::GeneratorPair => Some(fuzz::run_identity_suite(cfg)?),
        _ => None,
    };
    let mut outcomes = BTreeMap::new();
    let mut false_outcomes = 0;
    let mut text = String::new();
    for r in &reports {
        *outcomes.entry(r.outcome).or_insert(0) += 1;
        if !report_as_expected(cfg.mode, r) {
            false_outcomes += 1;
        }
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    let violations =
        false_outcomes as u64 + identities.as_ref().map_or(0, IdentitySummary::violations);
    let summary = FuzzSummary {
        seed: cfg.seed,
        rng: fuzz::RNG_ALGORITHM.to_string(),
        mode: cfg.mode,
        trials: reports.len(),
        outcomes,
        false_outcomes,
        identities,
        violations,
    };
    text.push_str(&serde_json::json!({ "summary": summary }).to_string());
    text.push('\n');
    let code = if violations == 0 { EXIT_OK } else { EXIT_FAILED };
    Ok((text, code))
}

/// Inclusive dimension range, written `a..b`, `a..=b` or `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimRange {
    pub min: usize,
    pub max: usize,
}

impl FromStr for DimRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension range `{s}`")))
        };
        match s.split_once("..") {
            Some((a, b)) => Ok(DimRange {
                min: num(a)?,
                max: num(b.strip_prefix('=').unwrap_or(b))?,
            }),
            None => {
                let n = num(s)?;
                Ok(DimRange { min: n, max: n })
            }
        }
    }
}

impl fmt::Display for DimRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Conjugation,
    GeneratorPair,
    Transpose,
    Adversarial,
}

impl From<ModeArg> for TrialMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Conjugation => TrialMode::Conjugation,
            ModeArg::GeneratorPair => TrialMode::GeneratorPair,
            ModeArg::Transpose => TrialMode::Transpose,
            ModeArg::Adversarial => TrialMode::AdversarialPair,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "skolem", version, about = "Explicit conjugators for automorphisms of M_n(K)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build A with phi(X) = A X A^-1 from a problem file.
    Recover(RecoverArgs),
    /// Check that a conjugator or full table is a unital algebra automorphism.
    CheckAut(CheckArgs),
    /// Write a problem file with a random invertible conjugator.
    Gen(GenArgs),
    /// Run the seeded round-trip and identity suites.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    pub input: PathBuf,
    /// Skip the n^2-query verification of the result.
    #[arg(long)]
    pub no_verify: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// `q` or `gfp:<p>`.
    #[arg(long)]
    pub field: FieldSpec,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub entry_bound: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    /// Inclusive dimension range, e.g. `1..8`.
    #[arg(long, default_value = "1..8")]
    pub n: DimRange,
    /// Comma-separated fields, e.g. `q,gfp:2,gfp:101`.
    #[arg(long, value_delimiter = ',', default_value = "q,gfp:2,gfp:3,gfp:7,gfp:101")]
    pub fields: Vec<FieldSpec>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub entry_bound: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Conjugation)]
    pub mode: ModeArg,
    /// Validate the automorphism axioms before each recovery.
    #[arg(long)]
    pub validate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FuzzArgs {
    pub fn config(&self) -> FuzzConfig {
        FuzzConfig {
            n_min: self.n.min,
            n_max: self.n.max,
            field_specs: self.fields.clone(),
            trials_per_cell: self.trials,
            seed: self.seed,
            entry_bound: self.entry_bound,
            mode: self.mode.into(),
            validate: self.validate,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_problem(path: &Path) -> Result<(Problem, Vec<u8>)> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    Ok((Problem::parse_json(text)?, bytes))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Recover(args) => {
            let (problem, bytes) = read_problem(&args.input)?;
            let (out, code) = recover_problem(&problem, &bytes, !args.no_verify)?;
            if let Some(detail) = &out.report.detail {
                eprintln!("{:?}: {detail}", out.report.outcome);
            }
            emit(args.out.as_deref(), &pretty(&out))?;
            Ok(code)
        }
        Command::CheckAut(args) => {
            let (problem, _) = read_problem(&args.input)?;
            let (report, code) = check_problem(&problem)?;
            if let Some(v) = &report.first_violation {
                eprintln!("not an automorphism: {v}");
            }
            emit(args.out.as_deref(), &pretty(&report))?;
            Ok(code)
        }
        Command::Gen(args) => {
            let problem = generate_problem(args.field, args.n, args.seed, args.entry_bound)?;
            emit(args.out.as_deref(), &problem.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Fuzz(args) => {
            let cfg = args.config();
            let start = Instant::now();
            let (text, code) = fuzz_report(&cfg)?;
            emit(args.out.as_deref(), &text)?;
            eprintln!("fuzz finished in {:.2?}", start.elapsed());
            Ok(code)
        }
    }
}

/// Entry point for the binary: runs the command and maps errors to exit
/// codes (parse and flag errors exit with 2).
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PARSE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_range_parsing() {
        assert_eq!("1..8".parse::<DimRange>().unwrap(), DimRange { min: 1, max: 8 });
        assert_eq!("2..=4".parse::<DimRange>().unwrap(), DimRange { min: 2, max: 4 });
        assert_eq!("3".parse::<DimRange>().unwrap(), DimRange { min: 3, max: 3 });
        assert!("x..2".parse::<DimRange>().is_err());
    }

    #[test]
    fn problem_requires_exactly_one_input() {
        let both = r#"{"field":{"type":"Q"},"n":1,"conjugator":[["1"]],
            "generator_pair":{"H":[["1"]],"G":[["0"]]}}"#;
        assert!(matches!(Problem::parse_json(both), Err(Error::Parse(_))));
        let none = r#"{"field":{"type":"Q"},"n":1}"#;
        assert!(matches!(Problem::parse_json(none), Err(Error::Parse(_))));
    }

    #[test]
    fn problem_shape_errors() {
        let wrong = r#"{"field":{"type":"Q"},"n":2,"conjugator":[["1","0"]]}"#;
        assert!(Problem::parse_json(wrong).is_err());
        let bad_scalar = r#"{"field":{"type":"GFp","p":5},"n":1,"conjugator":[["1/2"]]}"#;
        assert!(Problem::parse_json(bad_scalar).is_err());
        let unknown = r#"{"field":{"type":"Q"},"n":1,"conjugator":[["1"]],"extra":1}"#;
        assert!(Problem::parse_json(unknown).is_err());
        let singular = r#"{"field":{"type":"Q"},"n":2,"conjugator":[["1","2"],["2","4"]]}"#;
        let err = Problem::parse_json(singular).unwrap_err();
        assert!(err.to_string().contains("invertible"));
    }

    #[test]
    fn recover_swap() {
        let text = r#"{"field":{"type":"Q"},"n":2,"conjugator":[["0","1"],["1","0"]]}"#;
        let p = Problem::parse_json(text).unwrap();
        let (out, code) = recover_problem(&p, text.as_bytes(), true).unwrap();
        assert_eq!(code, 0);
        assert_eq!(
            out.conjugator.unwrap(),
            vec![vec!["0".to_string(), "1".into()], vec!["1".into(), "0".into()]]
        );
        assert_eq!(out.report.scalar.unwrap().to_string(), "1");
        assert_eq!(out.report.query_count, 2);
        assert_eq!(out.input_sha256, sha256_hex(text.as_bytes()));
    }

    #[test]
    fn transpose_table_fails_checks() {
        let n = 2;
        let phi = AutomorphismOracle::tabulate(FieldSpec::Rationals, n, Matrix::transpose).unwrap();
        let crate::automorphism::Backing::FullTable { images } = phi.backing().clone() else {
            unreachable!()
        };
        let p = Problem {
            field: FieldSpec::Rationals,
            n,
            input: ProblemInput::FullTable(images),
        };
        let (out, code) = recover_problem(&p, b"", true).unwrap();
        assert_eq!(code, 4);
        assert!(out.report.failing.is_some());
        let (report, code) = check_problem(&p).unwrap();
        assert!(!report.multiplicative_ok);
        assert_ne!(code, 0);
    }

    #[test]
    fn check_rejects_generator_pair() {
        let text = r#"{"field":{"type":"Q"},"n":1,"generator_pair":{"H":[["1"]],"G":[["0"]]}}"#;
        let p = Problem::parse_json(text).unwrap();
        assert!(matches!(check_problem(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = FuzzConfig {
            trials_per_cell: 0,
            ..Default::default()
        };
        assert!(matches!(fuzz_report(&cfg), Err(Error::InvalidConfig(_))));
    }
}
