//! Experiment suites, hyperparameter tuning, and the subcommand
//! implementations behind the `frsd` binary.
//!
//! A suite is a JSON file naming one problem family, one graph family, a
//! list of algorithm configurations, and a seed list. Every (algorithm,
//! seed) pair becomes one deterministic run: the graph and problem are
//! rebuilt from the seed, the centralized oracle is solved once per seed,
//! and the trace lands in `<name>_<seed>.csv` next to a `summary.json`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{
    build_uniform_column_stochastic, build_uniform_row_stochastic, generate_strongly_connected,
    DiGraph, GraphError, MixingMatrix,
};
use crate::engine::{
    fit_linear_rate, run, solve_centralized, EngineError, OracleSolution, Trace,
};
use crate::objectives::{
    parse_libsvm, partition_dataset, synth_huber_problem, ObjectiveError, ProblemInstance,
};
use crate::protocols::{Algorithm, HyperParams, ProtocolError};

pub const DEFAULT_ITERATIONS: usize = 5000;
pub const DEFAULT_CADENCE: usize = 1;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-12;
pub const DEFAULT_LAMBDA: f64 = 0.01;
// product anchored at 0.05, which is robust across the tested instances
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.5;

pub const RESIDUAL_THRESHOLDS: [f64; 3] = [1e-3, 1e-6, 1e-9];
/// Residuals beyond this are treated as divergence during tuning.
pub const DIVERGENCE_CUTOFF: f64 = 1e3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Theory(#[from] crate::theory::TheoryError),
    #[error("run {name} (seed {seed}) failed: {source}")]
    Run {
        name: String,
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("oracle failed for seed {seed}: {source}")]
    Oracle {
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("every grid point diverged")]
    AllDiverged,
}

impl CliError {
    /// Process exit code: 2 config, 3 runtime, 4 oracle.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Io { .. } | CliError::Protocol(_) => 2,
            CliError::Oracle { .. } => 4,
            _ => 3,
        }
    }
}

fn schema(path: impl Into<String>, msg: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Huber {
        n: usize,
        m_per_node: usize,
        dimension: usize,
        #[serde(default = "default_xi")]
        xi: f64,
    },
    Logistic {
        dataset: PathBuf,
        n: usize,
        m_per_node: usize,
        dimension: usize,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

fn default_xi() -> f64 {
    2.0
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

impl ProblemSpec {
    pub fn n(&self) -> usize {
        match self {
            ProblemSpec::Huber { n, .. } | ProblemSpec::Logistic { n, .. } => *n,
        }
    }

    pub fn build(&self, seed: u64) -> Result<ProblemInstance, CliError> {
        match self {
            ProblemSpec::Huber {
                n,
                m_per_node,
                dimension,
                xi,
            } => Ok(synth_huber_problem(*n, *m_per_node, *dimension, *xi, seed)),
            ProblemSpec::Logistic {
                dataset,
                n,
                m_per_node,
                dimension,
                lambda,
            } => {
                let text = std::fs::read_to_string(dataset).map_err(|source| CliError::Io {
                    path: dataset.clone(),
                    source,
                })?;
                let ds = parse_libsvm(&text)?;
                Ok(partition_dataset(&ds, *n, *m_per_node, *dimension, *lambda, seed)?)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// DGen-style random strongly connected digraph with density `phi`.
    Generated { phi: f64 },
    Cycle,
    CycleWithChords { stride: usize },
    Complete,
    /// Fixed topology from a graph text file; ignores the seed.
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<DiGraph, CliError> {
        match self {
            GraphSpec::Generated { phi } => Ok(generate_strongly_connected(n, *phi, seed)?),
            GraphSpec::Cycle => Ok(DiGraph::cycle(n)),
            GraphSpec::CycleWithChords { stride } => Ok(DiGraph::cycle_with_chords(n, *stride)),
            GraphSpec::Complete => Ok(DiGraph::complete(n)),
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                let g = DiGraph::from_text(&text)?;
                if g.n() != n {
                    return Err(schema(
                        "graph.path",
                        format!("graph file has {} nodes, problem has {n}", g.n()),
                    ));
                }
                Ok(g)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub algorithm: String,
    /// run label; defaults to the algorithm name
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}

impl AlgorithmSpec {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.algorithm)
    }

    pub fn params(&self) -> HyperParams {
        HyperParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub budget: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSuite {
    pub problem: ProblemSpec,
    pub graph: GraphSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tolerance: f64,
    #[serde(default)]
    pub tuning: Option<TuningSpec>,
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_cadence() -> usize {
    DEFAULT_CADENCE
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_oracle_tol() -> f64 {
    DEFAULT_ORACLE_TOL
}

impl ExperimentSuite {
    fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(schema("seeds", "seed list must not be empty"));
        }
        if self.iterations == 0 {
            return Err(schema("iterations", "must be at least 1"));
        }
        if self.cadence == 0 {
            return Err(schema("cadence", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(schema("algorithms", "list must not be empty"));
        }
        let mut names = BTreeSet::new();
        for (idx, a) in self.algorithms.iter().enumerate() {
            Algorithm::from_name(&a.algorithm)?;
            if !names.insert(a.label().to_string()) {
                return Err(schema(
                    format!("algorithms[{idx}].name"),
                    format!("duplicate run label {:?}", a.label()),
                ));
            }
        }
        if let Some(t) = &self.tuning {
            if t.alphas.is_empty() || t.betas.is_empty() {
                return Err(schema("tuning", "alpha and beta grids must be nonempty"));
            }
        }
        Ok(())
    }
}

/// Reads and validates a suite file, reporting the JSON path of any
/// schema violation.
pub fn parse_config(path: &Path) -> Result<ExperimentSuite, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentSuite, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let suite: ExperimentSuite =
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
    suite.validate()?;
    Ok(suite)
}

/// One (algorithm, seed) result line in the suite summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub name: String,
    pub algorithm: String,
    pub seed: u64,
    pub final_residual: f64,
    /// round at which the residual first crossed 1e-3 / 1e-6 / 1e-9
    pub iterations_to: [Option<usize>; 3],
    /// cumulative broadcast scalars at the same crossings
    pub broadcast_to: [Option<usize>; 3],
    pub rate: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Range {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

fn range(values: impl Iterator<Item = f64>) -> Option<Range> {
    let vals: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return None;
    }
    Some(Range {
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Across-seed ranges for one run label.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub name: String,
    pub final_residual: Option<Range>,
    /// ranges of the threshold crossings, over the seeds that reached them
    pub iterations_to: [Option<Range>; 3],
    pub seeds_reaching: [usize; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

fn make_record(name: &str, algorithm: Algorithm, seed: u64, trace: &Trace) -> RunRecord {
    let mut iterations_to = [None; 3];
    let mut broadcast_to = [None; 3];
    for (t, &thr) in RESIDUAL_THRESHOLDS.iter().enumerate() {
        if let Some(row) = trace.rows.iter().find(|r| r.residual <= thr) {
            iterations_to[t] = Some(row.k);
            broadcast_to[t] = Some(row.cum_broadcast_scalars);
        }
    }
    let fit = fit_linear_rate(&trace.rows, 0.5).ok();
    RunRecord {
        name: name.to_string(),
        algorithm: algorithm.name().to_string(),
        seed,
        final_residual: trace.final_residual(),
        iterations_to,
        broadcast_to,
        rate: fit.map(|f| f.rate),
        slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
    }
}

fn aggregate(runs: &[RunRecord]) -> Vec<Aggregate> {
    let mut names: Vec<String> = Vec::new();
    for r in runs {
        if !names.contains(&r.name) {
            names.push(r.name.clone());
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.name == name).collect();
            let mut iterations_to: [Option<Range>; 3] = [None, None, None];
            let mut seeds_reaching = [0usize; 3];
            for t in 0..3 {
                seeds_reaching[t] = mine.iter().filter(|r| r.iterations_to[t].is_some()).count();
                iterations_to[t] = range(
                    mine.iter()
                        .filter_map(|r| r.iterations_to[t].map(|k| k as f64)),
                );
            }
            Aggregate {
                name,
                final_residual: range(mine.iter().map(|r| r.final_residual)),
                iterations_to,
                seeds_reaching,
            }
        })
        .collect()
}

/// All nodes start from the origin; the oracle gives the target.
fn zero_start(n: usize, p: usize) -> Vec<DVector<f64>> {
    (0..n).map(|_| DVector::zeros(p)).collect()
}

struct SeedSetup {
    row: MixingMatrix,
    col: MixingMatrix,
    problem: ProblemInstance,
    oracle: OracleSolution,
}

fn build_seed(suite: &ExperimentSuite, seed: u64) -> Result<SeedSetup, CliError> {
    let n = suite.problem.n();
    let graph = suite.graph.build(n, seed)?;
    let row = build_uniform_row_stochastic(&graph);
    let col = build_uniform_column_stochastic(&graph);
    let problem = suite.problem.build(seed)?;
    let oracle = solve_centralized(&problem, suite.oracle_tolerance, 1_000_000)
        .map_err(|source| CliError::Oracle { seed, source })?;
    Ok(SeedSetup {
        row,
        col,
        problem,
        oracle,
    })
}

/// Executes every (algorithm, seed) pair, writes `<name>_<seed>.csv`
/// trace files plus `summary.json`, and returns the summary.
pub fn run_suite(suite: &ExperimentSuite, out_dir: &Path) -> Result<SuiteSummary, CliError> {
    suite.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut runs = Vec::new();
    for &seed in &suite.seeds {
        let setup = build_seed(suite, seed)?;
        for spec in &suite.algorithms {
            let alg = Algorithm::from_name(&spec.algorithm)?;
            let col = alg.needs_column_weights().then_some(&setup.col);
            let trace = run(
                alg,
                &setup.problem,
                &setup.row,
                col,
                spec.params(),
                zero_start(setup.problem.n(), setup.problem.dimension()),
                &setup.oracle,
                suite.iterations,
                suite.cadence,
            )
            .map_err(|source| CliError::Run {
                name: spec.label().to_string(),
                seed,
                source,
            })?;
            let file = out_dir.join(format!("{}_{}.csv", spec.label(), seed));
            std::fs::write(&file, trace.to_csv()).map_err(|source| CliError::Io {
                path: file,
                source,
            })?;
            runs.push(make_record(spec.label(), alg, seed, &trace));
        }
    }
    let summary = SuiteSummary {
        aggregates: aggregate(&runs),
        runs,
    };
    let file = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    std::fs::write(&file, json).map_err(|source| CliError::Io { path: file, source })?;
    Ok(summary)
}

/// Outcome of one tuning grid point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    /// rounds to reach 1e-6, if reached within the budget
    pub iterations_to_target: Option<usize>,
    pub final_residual: f64,
    pub diverged: bool,
}

/// Exhaustive grid search ranked by iterations-to-1e-6; ties broken by
/// final residual, then by smaller step size. Diverged points (residual
/// above [`DIVERGENCE_CUTOFF`] or non-finite) are excluded.
pub fn tune_grid(
    algorithm: Algorithm,
    problem: &ProblemInstance,
    row: &MixingMatrix,
    col: Option<&MixingMatrix>,
    oracle: &OracleSolution,
    alphas: &[f64],
    betas: &[f64],
    budget: usize,
) -> Result<(HyperParams, Vec<GridPoint>), CliError> {
    assert!(!alphas.is_empty() && !betas.is_empty());
    let target = RESIDUAL_THRESHOLDS[1];
    let mut points = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            let params = HyperParams { alpha, beta };
            if params.validate(algorithm).is_err() {
                continue;
            }
            let trace = match run(
                algorithm,
                problem,
                row,
                col,
                params,
                zero_start(problem.n(), problem.dimension()),
                oracle,
                budget,
                1,
            ) {
                Ok(t) => t,
                // a numerically exploded run counts as divergence, not failure
                Err(EngineError::Protocol(_)) => {
                    points.push(GridPoint {
                        alpha,
                        beta,
                        iterations_to_target: None,
                        final_residual: f64::INFINITY,
                        diverged: true,
                    });
                    continue;
                }
                Err(e) => {
                    return Err(CliError::Run {
                        name: algorithm.name().to_string(),
                        seed: 0,
                        source: e,
                    })
                }
            };
            let final_residual = trace.final_residual();
            let diverged = !final_residual.is_finite() || final_residual > DIVERGENCE_CUTOFF;
            let iterations_to_target = trace
                .rows
                .iter()
                .find(|r| r.residual <= target)
                .map(|r| r.k);
            points.push(GridPoint {
                alpha,
                beta,
                iterations_to_target,
                final_residual,
                diverged,
            });
        }
    }
    let best = points
        .iter()
        .filter(|p| !p.diverged)
        .min_by(|a, b| {
            let ka = a.iterations_to_target.unwrap_or(usize::MAX);
            let kb = b.iterations_to_target.unwrap_or(usize::MAX);
            ka.cmp(&kb)
                .then(a.final_residual.total_cmp(&b.final_residual))
                .then(a.alpha.total_cmp(&b.alpha))
        })
        .ok_or(CliError::AllDiverged)?;
    Ok((
        HyperParams {
            alpha: best.alpha,
            beta: best.beta,
        },
        points,
    ))
}

/// `tune` subcommand: grid from the suite's `tuning` block, evaluated on
/// the first seed.
pub fn tune_from_suite(
    suite: &ExperimentSuite,
    algorithm: &str,
) -> Result<(HyperParams, Vec<GridPoint>), CliError> {
    suite.validate()?;
    let alg = Algorithm::from_name(algorithm)?;
    let tuning = suite
        .tuning
        .as_ref()
        .ok_or_else(|| schema("tuning", "tune requires a tuning block"))?;
    let seed = suite.seeds[0];
    let setup = build_seed(suite, seed)?;
    tune_grid(
        alg,
        &setup.problem,
        &setup.row,
        alg.needs_column_weights().then_some(&setup.col),
        &setup.oracle,
        &tuning.alphas,
        &tuning.betas,
        tuning.budget,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{LocalObjective, LossKind};
    use nalgebra::DMatrix;

    const MINIMAL: &str = r#"{
        "problem": {"kind": "huber", "n": 6, "m_per_node": 8, "dimension": 3},
        "graph": {"kind": "generated", "phi": 0.4},
        "algorithms": [{"algorithm": "frsd"}],
        "seeds": [0, 1]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let suite = parse_config_str(MINIMAL).unwrap();
        assert_eq!(suite.iterations, 5000);
        assert_eq!(suite.cadence, 1);
        assert_eq!(suite.oracle_tolerance, 1e-12);
        let a = &suite.algorithms[0];
        assert_eq!(a.alpha * a.beta, 0.05);
        assert_eq!(a.label(), "frsd");
    }

    #[test]
    fn schema_errors_carry_json_paths() {
        let bad = MINIMAL.replace("\"frsd\"", "\"gossip-x\"");
        match parse_config_str(&bad) {
            Err(CliError::Protocol(ProtocolError::UnknownAlgorithm(name))) => {
                assert_eq!(name, "gossip-x")
            }
            other => panic!("expected UnknownAlgorithm, got {other:?}"),
        }

        let bad = MINIMAL.replace("\"n\": 6", "\"n\": \"six\"");
        match parse_config_str(&bad) {
            Err(CliError::Schema { path, .. }) => assert!(path.contains("problem"), "{path}"),
            other => panic!("expected schema error, got {other:?}"),
        }

        let bad = MINIMAL.replace("[0, 1]", "[]");
        match parse_config_str(&bad) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, "seeds"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_labels_rejected() {
        let cfg = MINIMAL.replace(
            r#"[{"algorithm": "frsd"}]"#,
            r#"[{"algorithm": "frsd"}, {"algorithm": "frsd"}]"#,
        );
        assert!(matches!(
            parse_config_str(&cfg),
            Err(CliError::Schema { .. })
        ));
        // distinct labels make the same algorithm pair legal
        let cfg = MINIMAL.replace(
            r#"[{"algorithm": "frsd"}]"#,
            r#"[{"algorithm": "frsd", "name": "a"}, {"algorithm": "frsd", "name": "b"}]"#,
        );
        assert!(parse_config_str(&cfg).is_ok());
    }

    #[test]
    fn suite_outputs_are_byte_identical_across_reruns() {
        let mut suite = parse_config_str(MINIMAL).unwrap();
        suite.iterations = 200;
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let s1 = run_suite(&suite, dir1.path()).unwrap();
        let _ = run_suite(&suite, dir2.path()).unwrap();
        assert_eq!(s1.runs.len(), 2);
        for name in ["frsd_0.csv", "frsd_1.csv", "summary.json"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
        // csv parses back losslessly
        let text = std::fs::read_to_string(dir1.path().join("frsd_0.csv")).unwrap();
        let mut lines = text.lines();
        lines.next();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            let r: f64 = fields[1].parse().unwrap();
            assert_eq!(format!("{:.16e}", r), fields[1]);
        }
    }

    #[test]
    fn summary_ranges_are_ordered() {
        let mut suite = parse_config_str(MINIMAL).unwrap();
        suite.iterations = 300;
        suite.seeds = vec![0, 1, 2];
        let dir = tempfile::tempdir().unwrap();
        let summary = run_suite(&suite, dir.path()).unwrap();
        let agg = &summary.aggregates[0];
        let fr = agg.final_residual.unwrap();
        assert!(fr.min <= fr.mean && fr.mean <= fr.max);
        for rec in &summary.runs {
            let reached: Vec<usize> = rec.iterations_to.iter().flatten().copied().collect();
            assert!(reached.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    fn quadratic_problem(n: usize) -> ProblemInstance {
        let locals = (0..n)
            .map(|i| {
                LocalObjective::new(
                    LossKind::Quadratic,
                    DMatrix::identity(2, 2),
                    DVector::from_element(2, i as f64 + 1.0),
                )
            })
            .collect();
        ProblemInstance::new(locals)
    }

    #[test]
    fn tuning_excludes_divergent_steps_and_is_reproducible() {
        let problem = quadratic_problem(10);
        let g = DiGraph::cycle_with_chords(10, 3);
        let row = build_uniform_row_stochastic(&g);
        let oracle = solve_centralized(&problem, 1e-12, 1_000_000).unwrap();
        let alphas = [0.01, 0.05, 0.1, 0.3, 0.5];
        let betas: Vec<f64> = alphas.iter().map(|a| 0.05 / a).collect();
        let (best1, points) = tune_grid(
            Algorithm::Frsd,
            &problem,
            &row,
            None,
            &oracle,
            &alphas,
            &betas,
            2000,
        )
        .unwrap();
        let (best2, _) = tune_grid(
            Algorithm::Frsd,
            &problem,
            &row,
            None,
            &oracle,
            &alphas,
            &betas,
            2000,
        )
        .unwrap();
        assert_eq!(best1, best2);
        assert!(points.iter().any(|p| !p.diverged));
    }

    #[test]
    fn single_point_grid_returns_it() {
        let problem = quadratic_problem(4);
        let g = DiGraph::cycle(4);
        let row = build_uniform_row_stochastic(&g);
        let oracle = solve_centralized(&problem, 1e-12, 1_000_000).unwrap();
        let (best, _) = tune_grid(
            Algorithm::Frsd,
            &problem,
            &row,
            None,
            &oracle,
            &[0.05],
            &[1.0],
            500,
        )
        .unwrap();
        assert_eq!(best, HyperParams { alpha: 0.05, beta: 1.0 });
    }

    #[test]
    fn all_diverged_is_reported() {
        // n=1 quadratic: plain gradient descent diverges for alpha >= 2/L
        let problem = quadratic_problem(1);
        let g = DiGraph::new(1);
        let row = build_uniform_row_stochastic(&g);
        let oracle = solve_centralized(&problem, 1e-12, 1_000_000).unwrap();
        let res = tune_grid(
            Algorithm::Ab,
            &problem,
            &row,
            Some(&build_uniform_column_stochastic(&g)),
            &oracle,
            &[2.5, 3.0],
            &[0.0],
            200,
        );
        assert!(matches!(res, Err(CliError::AllDiverged)));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(schema("x", "y").exit_code(), 2);
        assert_eq!(CliError::AllDiverged.exit_code(), 3);
        let oracle_err = CliError::Oracle {
            seed: 0,
            source: EngineError::DegenerateStart,
        };
        assert_eq!(oracle_err.exit_code(), 4);
    }
}
