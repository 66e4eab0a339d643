//! One function per subcommand. Each validates its inputs, runs the core
//! computation and renders the result three ways.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nlwb_core::hardy::check;
use nlwb_core::{
    as_inequality, behavior_of_model, build_program, certify_hardy_soundness, classical_max,
    maximize_hardy, original_hardy, realigned_hardy, solve, BellExpression, HardyParadox,
    OptimizerConfig, SdpConfig, SdpStatus,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::published::ROWS;
use crate::schema::{
    ExpressionDoc, MomentProgramDoc, OptimizationDoc, OptimizerConfigDoc, ParadoxDoc, RunReport,
    SchemaError, SdpSolutionDoc, SoundnessDoc, StrategyDoc, Versions,
};
use crate::text::sig6;

pub const DEFAULT_SEED: u64 = 42;

/// Every error here is a validation or I/O failure of the inputs.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Core(#[from] nlwb_core::Error),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} does not match schema v1: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CommandError>;

/// A built-in paradox: the realigned family at `n` settings, or the
/// original two-setting paradox.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Realigned(u16),
    Original,
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("original") {
            return Ok(Self::Original);
        }
        s.parse::<u16>()
            .map(Self::Realigned)
            .map_err(|_| format!("expected a number of settings or \"original\", got {s:?}"))
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Realigned(n) => write!(f, "{n}"),
            Self::Original => f.write_str("original"),
        }
    }
}

/// Where a paradox comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParadoxSource {
    Builtin(Target),
    File(PathBuf),
}

impl ParadoxSource {
    pub fn load(&self) -> Result<HardyParadox> {
        match self {
            Self::Builtin(Target::Original) => Ok(original_hardy()),
            Self::Builtin(Target::Realigned(n)) => Ok(realigned_hardy(*n)?),
            Self::File(path) => {
                let doc: ParadoxDoc = read_json(path)?;
                Ok(HardyParadox::try_from(&doc)?)
            }
        }
    }

    fn echo(&self) -> Value {
        match self {
            Self::Builtin(t) => json!({ "target": t.to_string() }),
            Self::File(p) => json!({ "paradox_file": p.display().to_string() }),
        }
    }
}

/// Result of one command, before timing is attached.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub inputs: Value,
    pub outputs: Value,
    pub seed: Option<u64>,
    pub text: String,
    pub csv: String,
    /// False when the computation finished but did not meet its goal
    /// (non-convergence, unsound paradox, tolerance miss).
    pub success: bool,
}

impl Outcome {
    pub fn into_report(self, wall_time_ms: u64) -> RunReport {
        RunReport {
            command: self.command.to_owned(),
            inputs: self.inputs,
            outputs: self.outputs,
            versions: Versions::default(),
            seed: self.seed,
            wall_time_ms,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path).map_err(|source| CommandError::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&raw).map_err(|source| CommandError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).expect("schema types serialize");
    body.push('\n');
    fs::write(path, body).map_err(|source| CommandError::Write {
        path: path.to_owned(),
        source,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("schema types serialize")
}

/// Quoted, comma-separated table with a header row.
fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

fn digits(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn render_terms(expr: &BellExpression) -> String {
    let mut out = String::new();
    for (k, (e, c)) in expr.terms().enumerate() {
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        match (k, sign) {
            (0, "+") => {}
            (0, _) => out.push('-'),
            _ => write!(out, " {sign} ").unwrap(),
        }
        if mag != 1.0 {
            write!(out, "{} ", sig6(mag)).unwrap();
        }
        write!(out, "{e}").unwrap();
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Classical maximum of the AS expression at `n` settings, or of an
/// expression file.
pub fn classical_bound(n: Option<u16>, expression: Option<&Path>) -> Result<Outcome> {
    let (expr, inputs) = match (n, expression) {
        (Some(n), None) => (as_inequality(n)?, json!({ "n": n })),
        (None, Some(path)) => {
            let doc: ExpressionDoc = read_json(path)?;
            (
                BellExpression::try_from(&doc)?,
                json!({ "expression_file": path.display().to_string() }),
            )
        }
        _ => {
            return Err(CommandError::Invalid(
                "give either a number of settings or --expression".to_owned(),
            ))
        }
    };
    let max = classical_max(&expr)?;
    let strategies: Vec<StrategyDoc> = max.maximizers.iter().map(StrategyDoc::from).collect();
    let n = expr.scenario().n_settings();

    let mut text = String::new();
    writeln!(text, "settings: {n}").unwrap();
    writeln!(text, "classical bound: {}", sig6(max.value)).unwrap();
    writeln!(
        text,
        "maximizers: {} of {} strategies",
        strategies.len(),
        max.checked
    )
    .unwrap();
    let csv = csv_table(
        &["alice", "bob"],
        strategies
            .iter()
            .map(|s| vec![digits(&s.alice), digits(&s.bob)])
            .collect(),
    );

    Ok(Outcome {
        command: "classical-bound",
        inputs,
        outputs: json!({
            "n": n,
            "value": max.value,
            "maximizer_count": strategies.len(),
            "checked": max.checked,
            "maximizers": strategies,
        }),
        seed: None,
        text,
        csv,
        success: true,
    })
}

/// Exhaustive soundness certificate; succeeds iff the paradox is sound.
pub fn certify(source: &ParadoxSource) -> Result<Outcome> {
    let paradox = source.load()?;
    let report = SoundnessDoc::from(&certify_hardy_soundness(&paradox)?);

    let mut text = String::new();
    writeln!(text, "paradox: {} (n={})", report.paradox_id, report.n).unwrap();
    writeln!(text, "strategies checked: {}", report.checked).unwrap();
    writeln!(text, "condition-saturating: {}", report.saturating).unwrap();
    writeln!(text, "counterexamples: {}", report.counterexamples.len()).unwrap();
    for s in &report.counterexamples {
        writeln!(text, "  a={} b={}", digits(&s.alice), digits(&s.bob)).unwrap();
    }
    writeln!(text, "sound: {}", report.sound).unwrap();
    let csv = csv_table(
        &[
            "paradox_id",
            "n",
            "checked",
            "saturating",
            "counterexamples",
            "sound",
        ],
        vec![vec![
            report.paradox_id.clone(),
            report.n.to_string(),
            report.checked.to_string(),
            report.saturating.to_string(),
            report.counterexamples.len().to_string(),
            report.sound.to_string(),
        ]],
    );

    Ok(Outcome {
        command: "certify",
        inputs: source.echo(),
        outputs: to_value(&report),
        seed: None,
        success: report.sound,
        text,
        csv,
    })
}

/// Multi-start maximization of the Hardy value over two-qubit models.
///
/// The seed is `seed`, else the config file's, else [`DEFAULT_SEED`].
pub fn optimize(
    source: &ParadoxSource,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<Outcome> {
    let paradox = source.load()?;
    let file: OptimizerConfigDoc = match config {
        Some(path) => read_json(path)?,
        None => OptimizerConfigDoc::default(),
    };
    let mut cfg = file.apply(OptimizerConfig::for_settings(
        paradox.scenario().n_settings(),
    ))?;
    cfg.seed = seed.or(file.seed).unwrap_or(DEFAULT_SEED);

    let result = maximize_hardy(&paradox, &cfg)?;
    let doc = OptimizationDoc::new(&paradox, &result);

    let mut text = String::new();
    writeln!(text, "paradox: {}", doc.paradox_id).unwrap();
    writeln!(text, "hardy value: {}", sig6(doc.hardy_value)).unwrap();
    if let Some(r) = paradox.quantum_value_reference() {
        writeln!(text, "reference: {}", sig6(r)).unwrap();
    }
    writeln!(
        text,
        "max condition residual: {}",
        sig6(result.max_residual())
    )
    .unwrap();
    writeln!(text, "theta: {}", sig6(doc.theta)).unwrap();
    let list = |v: &[f64]| v.iter().map(|a| sig6(*a)).collect::<Vec<_>>().join(", ");
    writeln!(text, "alpha: [{}]", list(&doc.alpha)).unwrap();
    writeln!(text, "beta: [{}]", list(&doc.beta)).unwrap();
    writeln!(text, "restarts: {} (seed {})", doc.restarts_used, cfg.seed).unwrap();
    writeln!(text, "converged: {}", doc.converged).unwrap();

    let mut params = vec![vec!["theta".to_owned(), doc.theta.to_string()]];
    for (k, a) in doc.alpha.iter().enumerate() {
        params.push(vec![format!("alpha{}", k + 1), a.to_string()]);
    }
    for (k, b) in doc.beta.iter().enumerate() {
        params.push(vec![format!("beta{}", k + 1), b.to_string()]);
    }
    params.push(vec!["hardy_value".to_owned(), doc.hardy_value.to_string()]);
    let csv = csv_table(&["parameter", "value"], params);

    let mut inputs = source.echo();
    inputs["config"] = to_value(&OptimizerConfigDoc::from(&cfg));
    if let Some(path) = config {
        inputs["config_file"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        command: "optimize",
        inputs,
        outputs: to_value(&doc),
        seed: Some(cfg.seed),
        success: doc.converged,
        text,
        csv,
    })
}

/// Moment-matrix upper bound at `level`. Succeeds unless the solver stops
/// without converging; a certified infeasible relaxation is a result.
pub fn npa(source: &ParadoxSource, level: u8, dump_program: Option<&Path>) -> Result<Outcome> {
    let paradox = source.load()?;
    let program = build_program(&paradox, level)?;
    if let Some(path) = dump_program {
        write_json(path, &MomentProgramDoc::from(&program))?;
    }
    let solution = SdpSolutionDoc::from(&solve(&program, &SdpConfig::default())?);
    let success = solution.status != SdpStatus::MaxIterations.as_str();
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), sig6);

    let mut text = String::new();
    writeln!(text, "paradox: {} level {level}", paradox.id()).unwrap();
    writeln!(
        text,
        "moment matrix: {0}x{0}, {1} moments, {2} free variables",
        solution.size,
        program.moments().len(),
        solution.variables
    )
    .unwrap();
    writeln!(text, "status: {}", solution.status).unwrap();
    writeln!(text, "upper bound: {}", opt(solution.objective_value)).unwrap();
    writeln!(text, "certified bound: {}", opt(solution.certified_bound)).unwrap();
    writeln!(text, "duality gap: {}", opt(solution.duality_gap)).unwrap();
    writeln!(text, "min eigenvalue: {}", sig6(solution.min_eigenvalue)).unwrap();
    writeln!(text, "iterations: {}", solution.iterations).unwrap();

    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let csv = csv_table(
        &[
            "paradox_id",
            "level",
            "status",
            "value",
            "certified_bound",
            "size",
            "variables",
            "iterations",
            "duality_gap",
        ],
        vec![vec![
            paradox.id().to_owned(),
            level.to_string(),
            solution.status.clone(),
            cell(solution.objective_value),
            cell(solution.certified_bound),
            solution.size.to_string(),
            solution.variables.to_string(),
            solution.iterations.to_string(),
            cell(solution.duality_gap),
        ]],
    );

    let mut inputs = source.echo();
    inputs["level"] = json!(level);
    if let Some(path) = dump_program {
        inputs["dump_program"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        command: "npa",
        inputs,
        outputs: json!({
            "paradox_id": paradox.id(),
            "level": level,
            "moments": program.moments().len(),
            "solution": solution,
        }),
        seed: None,
        success,
        text,
        csv,
    })
}

/// Evaluates the published optimized parameters through the Born-rule
/// model; succeeds iff every Hardy value is within `tol` of its reference.
pub fn table1(tol: f64) -> Result<Outcome> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CommandError::Invalid(format!(
            "--tol must be a positive number, got {tol}"
        )));
    }
    let mut rows = Vec::new();
    let mut text = String::from("n  condition_residual  hardy_value  reference  |delta|\n");
    let mut table = Vec::new();
    let mut success = true;
    for row in &ROWS {
        let paradox = realigned_hardy(row.n)?;
        let checked = check(&paradox, &behavior_of_model(&row.model()), tol)?;
        let residual = checked.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let delta = (checked.hardy_value - row.hardy_value).abs();
        success &= delta <= tol;
        writeln!(
            text,
            "{:<2} {:<19} {:<12} {:<10} {}",
            row.n,
            sig6(residual),
            sig6(checked.hardy_value),
            sig6(row.hardy_value),
            sig6(delta)
        )
        .unwrap();
        table.push(vec![
            row.n.to_string(),
            residual.to_string(),
            checked.hardy_value.to_string(),
            row.hardy_value.to_string(),
            delta.to_string(),
        ]);
        rows.push(json!({
            "n": row.n,
            "theta": row.theta,
            "alpha": row.alpha,
            "beta": row.beta,
            "condition_residual": residual,
            "hardy_value": checked.hardy_value,
            "reference_value": row.hardy_value,
            "delta": delta,
            "within_tol": delta <= tol,
        }));
    }
    writeln!(text, "tolerance: {}", sig6(tol)).unwrap();
    let csv = csv_table(
        &[
            "n",
            "condition_residual",
            "hardy_value",
            "reference_value",
            "delta",
        ],
        table,
    );

    Ok(Outcome {
        command: "table1",
        inputs: json!({ "tol": tol }),
        outputs: json!({ "rows": rows }),
        seed: None,
        success,
        text,
        csv,
    })
}

/// Prints a paradox and optionally writes it as a schema v1 file.
pub fn dump_paradox(source: &ParadoxSource, output: Option<&Path>) -> Result<Outcome> {
    let paradox = source.load()?;
    let doc = ParadoxDoc::from(&paradox);
    if let Some(path) = output {
        write_json(path, &doc)?;
    }

    let mut text = String::new();
    writeln!(text, "paradox: {} (n={})", paradox.id(), doc.n).unwrap();
    for (k, c) in paradox.conditions().iter().enumerate() {
        writeln!(
            text,
            "condition {}: {} = {}",
            k + 1,
            render_terms(&c.expression),
            sig6(c.target)
        )
        .unwrap();
    }
    writeln!(text, "hardy term: {}", paradox.hardy_term()).unwrap();
    if let Some(r) = doc.reference_value {
        writeln!(text, "reference value: {}", sig6(r)).unwrap();
    }

    let mut terms = Vec::new();
    for (k, c) in doc.conditions.iter().enumerate() {
        for t in &c.terms {
            terms.push(vec![
                (k + 1).to_string(),
                t.x.to_string(),
                t.y.to_string(),
                t.i.to_string(),
                t.j.to_string(),
                t.coeff.to_string(),
                c.target.to_string(),
            ]);
        }
    }
    let h = doc.hardy_term;
    terms.push(vec![
        "hardy".to_owned(),
        h.x.to_string(),
        h.y.to_string(),
        h.i.to_string(),
        h.j.to_string(),
        "1".to_owned(),
        String::new(),
    ]);
    let csv = csv_table(&["condition", "x", "y", "i", "j", "coeff", "target"], terms);

    let mut inputs = source.echo();
    if let Some(path) = output {
        inputs["output"] = json!(path.display().to_string());
    }
    Ok(Outcome {
        command: "dump-paradox",
        inputs,
        outputs: to_value(&doc),
        seed: None,
        success: true,
        text,
        csv,
    })
}
