//! Command-line driver: parse a model and a property, select the engine
//! and arithmetic backend, run the check and report the value plus run
//! statistics. Also hosts the benchmark runner over a manifest of model
//! instances.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use probmc::arith::{set_bigfloat_precision, BigF, Rat, Scalar};
use probmc::elim::{
    explore_eliminate, format_chain, read_exp_reward, read_lra, read_reach_prob, CheckValue,
    ElimError, ElimOptions, PartialChain,
};
use probmc::explore::{explore, ExploreError, ExploreOptions};
use probmc::lang::{compile, parse_model, parse_property, PropertySpec};
use probmc::model::AnalysisModel;
use probmc::oracles::{
    build_explicit, linear_solve, lra_solve, value_iteration, OracleError, OracleProp,
};
use probmc::state::StateCode;

pub mod bench;

/// Checking engine.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Engine {
    /// Two-phase exploration with interleaved state elimination.
    Symblicit,
    /// Gauss-Seidel value iteration on the full explicit state space.
    Vi,
    /// Exact linear solve on the full explicit state space.
    Linear,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "symblicit" => Ok(Engine::Symblicit),
            "vi" => Ok(Engine::Vi),
            "linear" => Ok(Engine::Linear),
            _ => Err(CliError::Usage(format!(
                "unknown engine `{s}` (expected symblicit, vi or linear)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Symblicit => "symblicit",
            Engine::Vi => "vi",
            Engine::Linear => "linear",
        }
    }
}

/// Arithmetic backend selection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Arith {
    F64,
    Rational,
    BigFloat(usize),
}

impl Arith {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "f64" => Ok(Arith::F64),
            "rational" => Ok(Arith::Rational),
            "bigfloat" => Ok(Arith::BigFloat(256)),
            _ => {
                if let Some(bits) = s.strip_prefix("bigfloat:") {
                    let bits: usize = bits.parse().map_err(|_| {
                        CliError::Usage(format!("bad bigfloat precision in `{s}`"))
                    })?;
                    if bits < 2 {
                        return Err(CliError::Usage("precision must be at least 2 bits".into()));
                    }
                    Ok(Arith::BigFloat(bits))
                } else {
                    Err(CliError::Usage(format!(
                        "unknown arithmetic `{s}` (expected f64, rational or bigfloat:<bits>)"
                    )))
                }
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            Arith::F64 => "f64".into(),
            Arith::Rational => "rational".into(),
            Arith::BigFloat(bits) => format!("bigfloat:{bits}"),
        }
    }
}

/// Errors mapped to process exit codes: usage 1, model or property 2,
/// resource caps 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(String),
    Resource(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Model(m) => write!(f, "{m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Model(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

fn explore_err(e: ExploreError) -> CliError {
    match e {
        ExploreError::TooManyStates(n) => {
            CliError::Resource(format!("state cap of {n} states exceeded"))
        }
        ExploreError::Model(m) => CliError::Model(m.to_string()),
    }
}

fn elim_err(e: ElimError) -> CliError {
    match e {
        ElimError::TooManyStates(n) => {
            CliError::Resource(format!("state cap of {n} states exceeded"))
        }
        other => CliError::Model(other.to_string()),
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::TooManyStates(n) => {
            CliError::Resource(format!("state cap of {n} states exceeded"))
        }
        OracleError::NonConvergence(k) => {
            CliError::Resource(format!("no convergence within {k} sweeps"))
        }
        other => CliError::Model(other.to_string()),
    }
}

/// One check to run.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub model_path: PathBuf,
    pub property: String,
    pub constants: BTreeMap<String, String>,
    pub engine: Engine,
    pub arith: Arith,
    /// Convergence threshold for value iteration.
    pub epsilon: String,
    pub max_states: u64,
    pub dd_node_budget: usize,
    /// Print the live chain after each elimination (small chains only).
    pub trace: bool,
    /// Run the engine's internal invariant sweeps.
    pub validate: bool,
    pub progress_interval: u64,
}

impl CheckConfig {
    pub fn new(model_path: impl Into<PathBuf>, property: impl Into<String>) -> Self {
        CheckConfig {
            model_path: model_path.into(),
            property: property.into(),
            constants: BTreeMap::new(),
            engine: Engine::Symblicit,
            arith: Arith::F64,
            epsilon: "1e-10".into(),
            max_states: 1 << 40,
            dd_node_budget: usize::MAX,
            trace: false,
            validate: false,
            progress_interval: 0,
        }
    }

    pub fn with_const(mut self, name: &str, value: impl ToString) -> Self {
        self.constants.insert(name.into(), value.to_string());
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_arith(mut self, arith: Arith) -> Self {
        self.arith = arith;
        self
    }
}

/// The machine-readable record of one run. Identical inputs produce
/// byte-identical records up to the timing and memory fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatsRecord {
    pub model: String,
    pub constants: BTreeMap<String, String>,
    pub property: String,
    pub engine: String,
    pub arith: String,
    pub value: String,
    pub infinite: bool,
    pub states_total: u64,
    pub peak_states: u64,
    pub peak_transitions: u64,
    pub dd_nodes_peak: u64,
    pub time_explore_ms: u64,
    pub time_eliminate_ms: u64,
    pub peak_mem_mb: Option<u64>,
}

impl StatsRecord {
    /// Human-readable stats block.
    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("engine            {}\n", self.engine));
        out.push_str(&format!("arith             {}\n", self.arith));
        out.push_str(&format!("model states      {}\n", self.states_total));
        out.push_str(&format!("peak live states  {}\n", self.peak_states));
        out.push_str(&format!("peak live trans   {}\n", self.peak_transitions));
        out.push_str(&format!("dd node peak      {}\n", self.dd_nodes_peak));
        out.push_str(&format!("explore time      {} ms\n", self.time_explore_ms));
        out.push_str(&format!("eliminate time    {} ms\n", self.time_eliminate_ms));
        match self.peak_mem_mb {
            Some(mb) => out.push_str(&format!("peak memory       {mb} MB\n")),
            None => out.push_str("peak memory       n/a\n"),
        }
        out
    }
}

/// Runs one check end to end.
pub fn run_check(cfg: &CheckConfig) -> Result<StatsRecord, CliError> {
    let text = std::fs::read_to_string(&cfg.model_path).map_err(|e| {
        CliError::Model(format!("cannot read {}: {e}", cfg.model_path.display()))
    })?;
    let ast = parse_model(&text).map_err(|e| CliError::Model(e.to_string()))?;
    let prop = parse_property(&cfg.property).map_err(|e| CliError::Model(e.to_string()))?;
    match cfg.arith {
        Arith::F64 => run_generic::<f64>(cfg, &ast, &prop),
        Arith::Rational => run_generic::<Rat>(cfg, &ast, &prop),
        Arith::BigFloat(bits) => {
            set_bigfloat_precision(bits);
            run_generic::<BigF>(cfg, &ast, &prop)
        }
    }
}

fn run_generic<S: Scalar>(
    cfg: &CheckConfig,
    ast: &probmc::lang::ModelAst,
    prop: &PropertySpec,
) -> Result<StatsRecord, CliError> {
    let consts: std::collections::HashMap<String, String> = cfg
        .constants
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let model = compile::<S>(ast, &consts).map_err(|e| CliError::Model(e.to_string()))?;
    let analysis = AnalysisModel::new(&model, prop).map_err(|e| CliError::Model(e.to_string()))?;

    let (value, stats) = match cfg.engine {
        Engine::Symblicit => run_symblicit(cfg, &model, &analysis, prop)?,
        Engine::Vi | Engine::Linear => run_explicit_oracle(cfg, &analysis, prop)?,
    };
    if analysis.saw_deadlock() {
        eprintln!("warning: deadlock states were made absorbing");
    }

    let (value_str, infinite) = match &value {
        CheckValue::Finite(v) => (v.render(), false),
        CheckValue::Infinite => ("inf".to_string(), true),
    };
    Ok(StatsRecord {
        model: cfg.model_path.display().to_string(),
        constants: cfg.constants.clone(),
        property: cfg.property.clone(),
        engine: cfg.engine.name().to_string(),
        arith: cfg.arith.name(),
        value: value_str,
        infinite,
        states_total: stats.states_total,
        peak_states: stats.peak_states,
        peak_transitions: stats.peak_transitions,
        dd_nodes_peak: stats.dd_nodes_peak,
        time_explore_ms: stats.time_explore_ms,
        time_eliminate_ms: stats.time_eliminate_ms,
        peak_mem_mb: peak_memory_mb(),
    })
}

struct RunStats {
    states_total: u64,
    peak_states: u64,
    peak_transitions: u64,
    dd_nodes_peak: u64,
    time_explore_ms: u64,
    time_eliminate_ms: u64,
}

fn run_symblicit<S: Scalar>(
    cfg: &CheckConfig,
    model: &probmc::lang::CompiledModel<S>,
    analysis: &AnalysisModel<'_, S>,
    prop: &PropertySpec,
) -> Result<(CheckValue<S>, RunStats), CliError> {
    let explore_opts = ExploreOptions {
        max_states: cfg.max_states,
        dd_node_budget: cfg.dd_node_budget,
        progress_interval: cfg.progress_interval,
    };
    let pre = explore(analysis, &explore_opts).map_err(explore_err)?;
    let elim_opts = ElimOptions {
        max_states: cfg.max_states,
        validate: cfg.validate,
        trace_limit: if cfg.trace { 50 } else { 0 },
    };
    let mut trace_cb = |chain: &PartialChain<S>, eliminated: StateCode| {
        println!(
            "eliminated {} -> live chain:\n{}",
            model.describe(eliminated),
            format_chain(chain, &|s| model.describe(s))
        );
    };
    let res = explore_eliminate(
        analysis,
        &pre,
        &elim_opts,
        cfg.trace.then_some(&mut trace_cb as &mut dyn FnMut(&PartialChain<S>, StateCode)),
    )
    .map_err(elim_err)?;
    let value = match prop {
        PropertySpec::ReachProb { .. } => {
            CheckValue::Finite(read_reach_prob(&res.chain, analysis).map_err(elim_err)?)
        }
        PropertySpec::ExpReward { .. } => read_exp_reward(&res.chain, analysis).map_err(elim_err)?,
        PropertySpec::LongRunAvg { .. } => {
            CheckValue::Finite(read_lra(&res.chain).map_err(elim_err)?)
        }
    };
    let stats = RunStats {
        states_total: pre.states,
        peak_states: res.chain.peak_states() as u64,
        peak_transitions: res.chain.peak_transitions() as u64,
        dd_nodes_peak: pre.peak_nodes as u64,
        time_explore_ms: pre.wall_time.as_millis() as u64,
        time_eliminate_ms: res.wall_time.as_millis() as u64,
    };
    Ok((value, stats))
}

/// Cap on the explicit reference engines; the exact solver additionally
/// refuses systems above ten thousand states.
const EXPLICIT_CAP: u64 = 5_000_000;
const LINEAR_CAP: u64 = 10_000;
const VI_SWEEP_CAP: usize = 2_000_000;

fn run_explicit_oracle<S: Scalar>(
    cfg: &CheckConfig,
    analysis: &AnalysisModel<'_, S>,
    prop: &PropertySpec,
) -> Result<(CheckValue<S>, RunStats), CliError> {
    let start = Instant::now();
    let cap = cfg.max_states.min(EXPLICIT_CAP);
    let chain = build_explicit(analysis, cap).map_err(oracle_err)?;
    let build_ms = start.elapsed().as_millis() as u64;
    let solve_start = Instant::now();
    let value = match (cfg.engine, prop) {
        (Engine::Vi, PropertySpec::ReachProb { .. }) => {
            let eps = S::parse(&cfg.epsilon)
                .map_err(|e| CliError::Usage(format!("bad epsilon: {e}")))?;
            value_iteration(&chain, OracleProp::ReachProb, &eps, VI_SWEEP_CAP).map_err(oracle_err)?
        }
        (Engine::Vi, PropertySpec::ExpReward { .. }) => {
            let eps = S::parse(&cfg.epsilon)
                .map_err(|e| CliError::Usage(format!("bad epsilon: {e}")))?;
            value_iteration(&chain, OracleProp::ExpReward, &eps, VI_SWEEP_CAP).map_err(oracle_err)?
        }
        (Engine::Vi, PropertySpec::LongRunAvg { .. }) => {
            return Err(CliError::Usage(
                "the vi engine does not support long-run averages; use symblicit or linear".into(),
            ))
        }
        (Engine::Linear, p) => {
            if chain.len() as u64 > LINEAR_CAP {
                return Err(CliError::Resource(format!(
                    "linear engine handles at most {LINEAR_CAP} states, model has {}",
                    chain.len()
                )));
            }
            match p {
                PropertySpec::ReachProb { .. } => {
                    linear_solve(&chain, OracleProp::ReachProb).map_err(oracle_err)?
                }
                PropertySpec::ExpReward { .. } => {
                    linear_solve(&chain, OracleProp::ExpReward).map_err(oracle_err)?
                }
                PropertySpec::LongRunAvg { .. } => {
                    CheckValue::Finite(lra_solve(&chain).map_err(oracle_err)?)
                }
            }
        }
        (Engine::Symblicit, _) => unreachable!("dispatched earlier"),
    };
    let stats = RunStats {
        states_total: chain.len() as u64,
        peak_states: chain.len() as u64,
        peak_transitions: chain.transition_count() as u64,
        dd_nodes_peak: 0,
        time_explore_ms: build_ms,
        time_eliminate_ms: solve_start.elapsed().as_millis() as u64,
    };
    Ok((value, stats))
}

/// Best-effort peak resident set size in megabytes (VmHWM on Linux).
pub fn peak_memory_mb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb / 1024);
        }
    }
    None
}

/// Parses a value string (`4375/4376`, `0.125`, `2.5e-3`, `inf`) to f64
/// for tolerance comparisons in the benchmark runner.
pub fn value_to_f64(text: &str) -> Option<f64> {
    let t = text.trim();
    if t == "inf" {
        return Some(f64::INFINITY);
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: f64 = n.trim().parse().ok()?;
        let d: f64 = d.trim().parse().ok()?;
        return Some(n / d);
    }
    t.parse().ok()
}

/// Resolves a manifest-relative path.
pub fn resolve_relative(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}
