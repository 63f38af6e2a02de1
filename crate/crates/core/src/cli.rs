//! Command-line front end. [`run`] parses arguments and returns the process
//! exit code: 0 on success, 2 when `check` finds a counterexample, 1 on any
//! input, schema or I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bistochastic::{certify_bistochastic, falsify_bistochastic, make_family_va, CertificateResult, FalsifyReport};
use crate::dynamics::{classify_regularity, iterate, DynamicsConfig, Tolerances, DEFAULT_MAX_PERIOD, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::operator::{all_permutation_operators, fixture_counterexample_pair, mix, OperatorSpec};
use crate::polytope::qbo_interior_mix_generator;
use crate::sampling::{interior_point, rng_for, stream};
use crate::simplex::{majorization_violation, sort_descending, SimplexPoint};

#[derive(Debug, Parser)]
#[command(name = "qbo", version, about = "Quadratic bistochastic operators on the simplex")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// l1 distance between successive iterates treated as convergence.
    #[arg(long, default_value_t = Tolerances::default().convergence)]
    pub tol_convergence: f64,
    /// l1 revisit residual accepted for a cycle.
    #[arg(long, default_value_t = Tolerances::default().cycle)]
    pub tol_cycle: f64,
    /// l1 residual accepted for a fixed point.
    #[arg(long, default_value_t = Tolerances::default().fixed_point)]
    pub tol_fixed: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Result<Tolerances> {
        for (name, v) in [
            ("--tol-convergence", self.tol_convergence),
            ("--tol-cycle", self.tol_cycle),
            ("--tol-fixed", self.tol_fixed),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a positive number")));
            }
        }
        Ok(Tolerances {
            convergence: self.tol_convergence,
            cycle: self.tol_cycle,
            fixed_point: self.tol_fixed,
            ..Tolerances::default()
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify or falsify bistochasticity of an operator file.
    Check {
        operator: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate an operator and report trajectory verdicts.
    Iterate {
        operator: PathBuf,
        /// Comma-separated start vector (fractions allowed), `vertices`, or `random:N`.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: TolArgs,
        /// Trajectory CSV path; the verdict JSON goes next to it with a `.json` extension.
        /// Several starts produce `<stem>-<i>.csv` / `<stem>-<i>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// What to print on stdout when `--out` is absent.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Empirical regularity classification.
    Classify {
        operator: PathBuf,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_PERIOD)]
        max_period: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convex mix of operator files.
    Mix {
        #[arg(required = true)]
        operators: Vec<PathBuf>,
        /// Comma-separated weights, one per operator.
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit operator files from built-in constructors.
    Generate {
        #[arg(value_enum)]
        kind: GenerateKind,
        /// Dimension for `permutations`, `family-uniform` and `interior-mix`.
        #[arg(long)]
        m: Option<usize>,
        /// Row-major matrix for `family-va`: inline JSON or `@path`.
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; a directory for kinds that emit several files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two vectors in the majorization order.
    Majorize {
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    Permutations,
    FamilyVa,
    FamilyUniform,
    InteriorMix,
    CounterexamplePair,
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            operator,
            budget,
            seed,
            out,
        } => cmd_check(&operator, budget, seed, out.as_deref()),
        Command::Iterate {
            operator,
            start,
            max_steps,
            seed,
            tol,
            out,
            format,
        } => cmd_iterate(&operator, &start, max_steps, seed, &tol, out.as_deref(), format),
        Command::Classify {
            operator,
            trials,
            max_steps,
            max_period,
            seed,
            tol,
            out,
        } => cmd_classify(&operator, trials, max_steps, max_period, seed, &tol, out.as_deref()),
        Command::Mix { operators, weights, out } => cmd_mix(&operators, &weights, out.as_deref()),
        Command::Generate {
            kind,
            m,
            matrix,
            seed,
            out,
        } => cmd_generate(kind, m, matrix.as_deref(), seed, out.as_deref()),
        Command::Majorize { x, y, format } => cmd_majorize(&x, &y, format),
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::File {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Reads an operator file. serde_json diagnostics carry line and column.
pub fn load_operator(path: &Path) -> Result<OperatorSpec> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

/// Writes `contents` through a temporary file in the target directory and
/// renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    verdict: &'static str,
    certificate: &'a CertificateResult,
    falsify: &'a FalsifyReport,
}

fn cmd_check(path: &Path, budget: usize, seed: u64, out: Option<&Path>) -> Result<u8> {
    let op = load_operator(path)?;
    let certificate = certify_bistochastic(&op);
    let falsify = falsify_bistochastic(&op, budget, seed)?;
    let verdict = if falsify.found() {
        "counterexample"
    } else if certificate.is_certified() {
        "certified"
    } else {
        "none-found"
    };
    emit(
        out,
        &to_json(&CheckReport {
            verdict,
            certificate: &certificate,
            falsify: &falsify,
        }),
    )?;
    Ok(if falsify.found() { 2 } else { 0 })
}

/// Parses `a,b,c` where each entry is a decimal or `p/q`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    let trimmed = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    trimmed
        .split(',')
        .map(|part| {
            let part = part.trim();
            let bad = || Error::InvalidArgument(format!("cannot parse {part:?} as a number"));
            match part.split_once('/') {
                Some((n, d)) => {
                    let n: f64 = n.trim().parse().map_err(|_| bad())?;
                    let d: f64 = d.trim().parse().map_err(|_| bad())?;
                    Ok(n / d)
                }
                None => part.parse().map_err(|_| bad()),
            }
        })
        .collect()
}

fn parse_point(s: &str) -> Result<SimplexPoint> {
    // fractions like 1/3 do not sum to exactly one in floating point
    SimplexPoint::sanitized(parse_vector(s)?, 1e-9)
}

fn parse_starts(start: &str, m: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    if start == "vertices" {
        return (0..m).map(|i| SimplexPoint::vertex(m, i)).collect();
    }
    if let Some(n) = start.strip_prefix("random:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad start count in {start:?}")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("random:N needs N >= 1".into()));
        }
        let mut rng = rng_for(seed, stream::CLI_STARTS);
        return Ok((0..n).map(|_| interior_point(&mut rng, m)).collect());
    }
    let x = parse_point(start)?;
    if x.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.dim(),
        });
    }
    Ok(vec![x])
}

fn sibling(path: &Path, index: Option<usize>, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match index {
        Some(i) => format!("{stem}-{i}.{ext}"),
        None => format!("{stem}.{ext}"),
    };
    path.with_file_name(name)
}

fn cmd_iterate(
    path: &Path,
    start: &str,
    max_steps: usize,
    seed: u64,
    tol: &TolArgs,
    out: Option<&Path>,
    format: Format,
) -> Result<u8> {
    let op = load_operator(path)?;
    let config = DynamicsConfig {
        tolerances: tol.tolerances()?,
        max_steps,
        ..DynamicsConfig::default()
    };
    let starts = parse_starts(start, op.dim(), seed)?;
    let records = starts
        .iter()
        .map(|x| iterate(&op, x, max_steps, &config))
        .collect::<Result<Vec<_>>>()?;
    let single = records.len() == 1;
    match out {
        Some(path) => {
            for (i, r) in records.iter().enumerate() {
                let index = (!single).then_some(i);
                let csv_path = if single { path.to_path_buf() } else { sibling(path, index, "csv") };
                write_atomic(&csv_path, &r.to_csv())?;
                write_atomic(&sibling(path, index, "json"), &to_json(&r.summary()))?;
            }
        }
        None => match format {
            Format::Csv => {
                let parts: Vec<String> = records.iter().map(|r| r.to_csv()).collect();
                print!("{}", parts.join("\n"));
            }
            Format::Json => {
                let summaries: Vec<_> = records.iter().map(|r| r.summary()).collect();
                if single {
                    print!("{}", to_json(&summaries[0]));
                } else {
                    print!("{}", to_json(&summaries));
                }
            }
        },
    }
    Ok(0)
}

fn cmd_classify(
    path: &Path,
    trials: usize,
    max_steps: usize,
    max_period: usize,
    seed: u64,
    tol: &TolArgs,
    out: Option<&Path>,
) -> Result<u8> {
    let op = load_operator(path)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("--trials must be at least 1".into()));
    }
    let config = DynamicsConfig {
        tolerances: tol.tolerances()?,
        max_steps,
        max_period,
        ..DynamicsConfig::default()
    };
    let verdict = classify_regularity(&op, trials, seed, &config)?;
    emit(out, &to_json(&verdict.to_json()))?;
    Ok(0)
}

fn cmd_mix(paths: &[PathBuf], weights: &[f64], out: Option<&Path>) -> Result<u8> {
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is not strictly positive; the fixed points of a mix are the common fixed points of its terms only when every weight is positive"
        )));
    }
    let ops = paths.iter().map(|p| load_operator(p)).collect::<Result<Vec<_>>>()?;
    let op = mix(ops, weights)?;
    emit(out, &to_json(&op))?;
    Ok(0)
}

fn require_m(m: Option<usize>) -> Result<usize> {
    match m {
        Some(m) if m >= 1 => Ok(m),
        _ => Err(Error::InvalidArgument("--m <dimension> (at least 1) is required for this kind".into())),
    }
}

fn write_many(out: Option<&Path>, files: &[(String, OperatorSpec)]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            for (name, op) in files {
                write_atomic(&dir.join(name), &to_json(op))?;
            }
        }
        None => {
            let ops: Vec<&OperatorSpec> = files.iter().map(|(_, op)| op).collect();
            print!("{}", to_json(&ops));
        }
    }
    Ok(())
}

fn cmd_generate(kind: GenerateKind, m: Option<usize>, matrix: Option<&str>, seed: u64, out: Option<&Path>) -> Result<u8> {
    match kind {
        GenerateKind::Permutations => {
            let m = require_m(m)?;
            if m > 8 {
                return Err(Error::EnumerationTooLarge { m, cap: 8 });
            }
            let files: Vec<(String, OperatorSpec)> = all_permutation_operators(m)
                .into_iter()
                .map(|op| {
                    let OperatorSpec::Permutation(p) = &op else { unreachable!() };
                    let label: Vec<String> = p.to_one_based().iter().map(|i| i.to_string()).collect();
                    (format!("perm-{}.json", label.join("-")), op)
                })
                .collect();
            write_many(out, &files)?;
        }
        GenerateKind::CounterexamplePair => {
            let (p1, p2) = fixture_counterexample_pair();
            write_many(out, &[("p1.json".into(), p1), ("p2.json".into(), p2)])?;
        }
        GenerateKind::FamilyUniform => {
            let op = OperatorSpec::family_uniform(require_m(m)?)?;
            emit(out, &to_json(&op))?;
        }
        GenerateKind::FamilyVa => {
            let Some(raw) = matrix else {
                return Err(Error::InvalidArgument("--matrix is required for family-va".into()));
            };
            let text = match raw.strip_prefix('@') {
                Some(p) => fs::read_to_string(p).map_err(|e| io_error(Path::new(p), e))?,
                None => raw.to_string(),
            };
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("--matrix: {e}")))?;
            emit(out, &to_json(&make_family_va(rows)?))?;
        }
        GenerateKind::InteriorMix => {
            let m = require_m(m)?;
            if m > 8 {
                return Err(Error::EnumerationTooLarge { m, cap: 8 });
            }
            let mut pool = all_permutation_operators(m);
            pool.push(OperatorSpec::family_uniform(m)?);
            let op = qbo_interior_mix_generator(seed, &pool)?;
            emit(out, &to_json(&op))?;
        }
    }
    Ok(0)
}

fn relation_text(v: Option<usize>) -> String {
    match v {
        None => "holds".into(),
        Some(k) => format!("fails (violation at k={k})"),
    }
}

fn cmd_majorize(xs: &str, ys: &str, format: Option<Format>) -> Result<u8> {
    let x = parse_point(xs)?;
    let y = parse_point(ys)?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    // x ≺ y
    let x_below = majorization_violation(&y, &x)?;
    let y_below = majorization_violation(&x, &y)?;
    let verdict = match (x_below, y_below) {
        (None, None) => "equivalent",
        (None, Some(_)) => "majorized-by",
        (Some(_), None) => "majorizes",
        (Some(_), Some(_)) => "incomparable",
    };
    let px = sort_descending(&x).prefix_sums();
    let py = sort_descending(&y).prefix_sums();
    if format == Some(Format::Json) {
        let table: Vec<_> = (0..px.len()).map(|k| json!({"k": k + 1, "x": px[k], "y": py[k]})).collect();
        print!(
            "{}",
            to_json(&json!({
                "verdict": verdict,
                "x_majorized_by_y": {"holds": x_below.is_none(), "violating_prefix": x_below},
                "y_majorized_by_x": {"holds": y_below.is_none(), "violating_prefix": y_below},
                "prefix_sums": table,
            }))
        );
        return Ok(0);
    }
    let mut buf = ryu::Buffer::new();
    let mut out = String::from("k\tsum x_sorted\tsum y_sorted\n");
    for k in 0..px.len() {
        out.push_str(&format!("{}\t{}\t", k + 1, buf.format(px[k])));
        out.push_str(buf.format(py[k]));
        out.push('\n');
    }
    out.push_str(&format!("x ≺ y: {}\n", relation_text(x_below)));
    out.push_str(&format!("y ≺ x: {}\n", relation_text(y_below)));
    out.push_str(&format!("verdict: {verdict}\n"));
    print!("{out}");
    Ok(0)
}
