//! JSON schema version 1 for every artifact the CLI reads or writes.
//!
//! Settings are 1-based, outcomes are 0 or 1. Behaviors are stored as a
//! flat row-major array whose index order is declared in the document.

use nlwb_core::hardy::Condition;
use nlwb_core::{
    Behavior, BellExpression, DeterministicStrategy, Event, HardyParadox, MomentProgram,
    OptimizationResult, OptimizerConfig, Scenario, SdpSolution, SoundnessReport,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";

/// Index order of [`BehaviorDoc::probabilities`].
pub const BEHAVIOR_INDEX_ORDER: [&str; 4] = ["x", "y", "i", "j"];

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("unsupported schema version {0:?}, expected \"1\"")]
    Version(String),
    #[error("behavior index order {0:?} is not [x, y, i, j]")]
    IndexOrder(Vec<String>),
    #[error(transparent)]
    Core(#[from] nlwb_core::Error),
}

fn check_version(v: &str) -> Result<(), SchemaError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(SchemaError::Version(v.to_owned()))
    }
}

fn schema_version() -> String {
    SCHEMA_VERSION.to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub x: u16,
    pub y: u16,
    pub i: u8,
    pub j: u8,
}

impl From<Event> for EventDoc {
    fn from(e: Event) -> Self {
        Self {
            x: e.x,
            y: e.y,
            i: e.i,
            j: e.j,
        }
    }
}

impl From<EventDoc> for Event {
    fn from(e: EventDoc) -> Self {
        Event::new(e.i, e.j, e.x, e.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub x: u16,
    pub y: u16,
    pub i: u8,
    pub j: u8,
    pub coeff: f64,
}

fn terms_of(expr: &BellExpression) -> Vec<TermDoc> {
    expr.terms()
        .map(|(e, coeff)| TermDoc {
            x: e.x,
            y: e.y,
            i: e.i,
            j: e.j,
            coeff,
        })
        .collect()
}

fn expression_from(n: u16, terms: &[TermDoc]) -> Result<BellExpression, SchemaError> {
    Ok(BellExpression::from_terms(
        Scenario::new(n)?,
        terms
            .iter()
            .map(|t| (Event::new(t.i, t.j, t.x, t.y), t.coeff)),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionDoc {
    #[serde(default = "schema_version")]
    pub schema: String,
    pub n: u16,
    pub terms: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_bound: Option<f64>,
}

impl From<&BellExpression> for ExpressionDoc {
    fn from(e: &BellExpression) -> Self {
        Self {
            schema: schema_version(),
            n: e.scenario().n_settings(),
            terms: terms_of(e),
            classical_bound: e.classical_bound(),
            quantum_bound: e.quantum_bound(),
        }
    }
}

impl TryFrom<&ExpressionDoc> for BellExpression {
    type Error = SchemaError;

    fn try_from(d: &ExpressionDoc) -> Result<Self, SchemaError> {
        check_version(&d.schema)?;
        Ok(expression_from(d.n, &d.terms)?.with_bounds(d.classical_bound, d.quantum_bound))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDoc {
    #[serde(default = "schema_version")]
    pub schema: String,
    pub n: u16,
    pub index_order: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl From<&Behavior> for BehaviorDoc {
    fn from(b: &Behavior) -> Self {
        Self {
            schema: schema_version(),
            n: b.scenario().n_settings(),
            index_order: BEHAVIOR_INDEX_ORDER
                .iter()
                .map(|s| (*s).to_owned())
                .collect(),
            probabilities: b.as_slice().to_vec(),
        }
    }
}

impl TryFrom<&BehaviorDoc> for Behavior {
    type Error = SchemaError;

    fn try_from(d: &BehaviorDoc) -> Result<Self, SchemaError> {
        check_version(&d.schema)?;
        if d.index_order != BEHAVIOR_INDEX_ORDER {
            return Err(SchemaError::IndexOrder(d.index_order.clone()));
        }
        Ok(Behavior::new(Scenario::new(d.n)?, d.probabilities.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDoc {
    pub terms: Vec<TermDoc>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadoxDoc {
    #[serde(default = "schema_version")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: u16,
    pub conditions: Vec<ConditionDoc>,
    pub hardy_term: EventDoc,
    #[serde(default)]
    pub reference_value: Option<f64>,
}

impl From<&HardyParadox> for ParadoxDoc {
    fn from(p: &HardyParadox) -> Self {
        Self {
            schema: schema_version(),
            id: Some(p.id().to_owned()),
            n: p.scenario().n_settings(),
            conditions: p
                .conditions()
                .iter()
                .map(|c| ConditionDoc {
                    terms: terms_of(&c.expression),
                    target: c.target,
                })
                .collect(),
            hardy_term: p.hardy_term().into(),
            reference_value: p.quantum_value_reference(),
        }
    }
}

impl TryFrom<&ParadoxDoc> for HardyParadox {
    type Error = SchemaError;

    fn try_from(d: &ParadoxDoc) -> Result<Self, SchemaError> {
        check_version(&d.schema)?;
        let conditions = d
            .conditions
            .iter()
            .map(|c| {
                Ok(Condition {
                    expression: expression_from(d.n, &c.terms)?,
                    target: c.target,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        let id = d.id.clone().unwrap_or_else(|| "custom".to_owned());
        Ok(HardyParadox::new(
            id,
            conditions,
            d.hardy_term.into(),
            d.reference_value,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDoc {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

impl From<&DeterministicStrategy> for StrategyDoc {
    fn from(s: &DeterministicStrategy) -> Self {
        Self {
            alice: s.alice_outcomes(),
            bob: s.bob_outcomes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundnessDoc {
    pub paradox_id: String,
    pub n: u16,
    pub checked: u64,
    pub saturating: u64,
    pub counterexamples: Vec<StrategyDoc>,
    pub sound: bool,
}

impl From<&SoundnessReport> for SoundnessDoc {
    fn from(r: &SoundnessReport) -> Self {
        Self {
            paradox_id: r.paradox_id.clone(),
            n: r.n,
            checked: r.checked,
            saturating: r.saturating,
            counterexamples: r.counterexamples.iter().map(StrategyDoc::from).collect(),
            sound: r.sound,
        }
    }
}

/// Optimizer settings file. Missing fields take the defaults for the
/// paradox being optimized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfigDoc {
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub constraint_tol: Option<f64>,
    pub penalty_start: Option<f64>,
    pub penalty_growth: Option<f64>,
    pub penalty_stages: Option<usize>,
    pub inner_iters: Option<usize>,
}

impl OptimizerConfigDoc {
    pub fn apply(&self, mut cfg: OptimizerConfig) -> Result<OptimizerConfig, SchemaError> {
        if let Some(v) = self.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.constraint_tol {
            cfg.constraint_tol = v;
        }
        if let Some(v) = self.penalty_start {
            cfg.penalty_start = v;
        }
        if let Some(v) = self.penalty_growth {
            cfg.penalty_growth = v;
        }
        if let Some(v) = self.penalty_stages {
            cfg.penalty_stages = v;
        }
        if let Some(v) = self.inner_iters {
            cfg.inner_iters = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&OptimizerConfig> for OptimizerConfigDoc {
    fn from(c: &OptimizerConfig) -> Self {
        Self {
            restarts: Some(c.restarts),
            seed: Some(c.seed),
            constraint_tol: Some(c.constraint_tol),
            penalty_start: Some(c.penalty_start),
            penalty_growth: Some(c.penalty_growth),
            penalty_stages: Some(c.penalty_stages),
            inner_iters: Some(c.inner_iters),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationDoc {
    pub paradox_id: String,
    pub theta: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `[θ, α₁..αₙ, β₁..βₙ]`.
    pub angles: Vec<f64>,
    pub hardy_value: f64,
    pub condition_residuals: Vec<f64>,
    pub restarts_used: usize,
    pub converged: bool,
    pub best_restart: Option<usize>,
}

impl OptimizationDoc {
    pub fn new(paradox: &HardyParadox, r: &OptimizationResult) -> Self {
        Self {
            paradox_id: paradox.id().to_owned(),
            theta: r.model.theta(),
            alpha: r.model.alpha().to_vec(),
            beta: r.model.beta().to_vec(),
            angles: r.model.params(),
            hardy_value: r.hardy_value,
            condition_residuals: r.condition_residuals.clone(),
            restarts_used: r.restarts_used,
            converged: r.converged,
            best_restart: r.best_restart,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFormDoc {
    pub constant: f64,
    /// `[moment index, coefficient]` pairs.
    pub coeffs: Vec<(usize, f64)>,
}

impl From<&nlwb_core::npa::LinearForm> for LinearFormDoc {
    fn from(f: &nlwb_core::npa::LinearForm) -> Self {
        Self {
            constant: f.constant,
            coeffs: f.coeffs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityDoc {
    pub form: LinearFormDoc,
    pub target: f64,
}

/// A moment relaxation in a solver-neutral form: maximize `objective` over
/// moment vectors `m` with `m[0] = 1`, the matrix `M[r][c] =
/// m[cell_moment[r * size + c]]` PSD, and every equality met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentProgramDoc {
    pub schema: String,
    pub n: u16,
    pub level: u8,
    pub size: usize,
    pub basis: Vec<String>,
    pub moments: Vec<String>,
    pub cell_moment: Vec<usize>,
    pub objective: LinearFormDoc,
    pub equalities: Vec<EqualityDoc>,
}

impl From<&MomentProgram> for MomentProgramDoc {
    fn from(p: &MomentProgram) -> Self {
        let size = p.size();
        Self {
            schema: schema_version(),
            n: p.scenario().n_settings(),
            level: p.level(),
            size,
            basis: p.basis().iter().map(|w| w.to_string()).collect(),
            moments: p.moments().iter().map(|w| w.to_string()).collect(),
            cell_moment: (0..size)
                .flat_map(|r| (0..size).map(move |c| (r, c)))
                .map(|(r, c)| p.cell(r, c))
                .collect(),
            objective: p.objective().into(),
            equalities: p
                .equalities()
                .iter()
                .map(|(f, t)| EqualityDoc {
                    form: f.into(),
                    target: *t,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolutionDoc {
    pub status: String,
    /// Absent when the relaxation is infeasible.
    pub objective_value: Option<f64>,
    pub certified_bound: Option<f64>,
    pub size: usize,
    pub variables: usize,
    pub iterations: usize,
    pub duality_gap: Option<f64>,
    pub primal_infeasibility: Option<f64>,
    pub dual_infeasibility: Option<f64>,
    pub min_eigenvalue: f64,
    pub residuals: Vec<f64>,
    pub moments: Vec<f64>,
    /// Row-major, `size × size`.
    pub moment_matrix: Vec<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&SdpSolution> for SdpSolutionDoc {
    fn from(s: &SdpSolution) -> Self {
        Self {
            status: s.status.as_str().to_owned(),
            objective_value: finite(s.objective_value),
            certified_bound: finite(s.certified_bound),
            size: s.size,
            variables: s.variables,
            iterations: s.iterations,
            duality_gap: finite(s.duality_gap),
            primal_infeasibility: finite(s.primal_infeasibility),
            dual_infeasibility: finite(s.dual_infeasibility),
            min_eigenvalue: s.min_eigenvalue,
            residuals: s.residuals.clone(),
            moments: s.moments.clone(),
            moment_matrix: s.moment_matrix.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versions {
    pub schema: String,
    pub artifact: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            schema: schema_version(),
            artifact: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

/// Envelope for every `--json` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    pub versions: Versions,
    pub seed: Option<u64>,
    pub wall_time_ms: u64,
}
