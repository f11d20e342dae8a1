//! Synchronous round-based simulator.
//!
//! Each round every node broadcasts once; all round-k payloads are
//! snapshotted before any node consumes them, so message passing is
//! bulk-synchronous and independent of node evaluation order. A
//! centralized oracle solves the aggregate problem to high accuracy so
//! traces can report true optimality residuals.

use nalgebra::DVector;
use rayon::prelude::*;
use thiserror::Error;

use crate::digraph::MixingMatrix;
use crate::objectives::{ObjectiveError, ProblemInstance};
use crate::protocols::{comm_size, Algorithm, HyperParams, Node, NodeContext, ProtocolError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("oracle did not reach tolerance in {iterations} iterations (final gradient norm {grad_norm:.3e})")]
    OracleDidNotConverge {
        iterations: usize,
        grad_norm: f64,
        best: DVector<f64>,
    },
    #[error("all nodes start at the optimum; relative residuals are undefined")]
    DegenerateStart,
    #[error("need at least {needed} usable residuals to fit a rate, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// High-accuracy minimizer of the aggregate objective.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x_star: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Gradient descent with backtracking line search on the average
/// objective, started from the origin.
pub fn solve_centralized(
    problem: &ProblemInstance,
    tol: f64,
    max_iters: usize,
) -> Result<OracleSolution, EngineError> {
    let p = problem.dimension();
    let mut x = DVector::zeros(p);
    let mut value = problem.average_value(&x)?;
    let mut grad = problem.average_gradient(&x)?;
    let base_step = if problem.smoothness() > 0.0 {
        1.0 / problem.smoothness()
    } else {
        1.0
    };
    let mut spent = 0;
    let mut stalled = false;
    for it in 0..max_iters {
        spent = it;
        let gnorm = grad.norm();
        if gnorm <= tol {
            return Ok(OracleSolution {
                x_star: x,
                value,
                grad_norm: gnorm,
                iterations: it,
            });
        }
        // Armijo backtracking: halve until sufficient decrease
        let mut step = base_step;
        loop {
            let candidate = &x - &grad * step;
            let cand_value = problem.average_value(&candidate)?;
            if cand_value <= value - 1e-4 * step * gnorm * gnorm {
                if cand_value >= value {
                    // the required decrease underflowed: value floor reached
                    stalled = true;
                }
                x = candidate;
                value = cand_value;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                // flat to machine precision
                stalled = true;
                break;
            }
        }
        grad = problem.average_gradient(&x)?;
        if stalled {
            break;
        }
    }
    // Newton polish: objective values hit the f64 floor before the gradient
    // does, so drive the gradient norm down directly.
    if stalled {
        let mut gnorm = grad.norm();
        for _ in 0..40 {
            if gnorm <= tol {
                break;
            }
            let h = problem.average_hessian(&x)?;
            let Some(dir) = h.lu().solve(&grad) else { break };
            let mut damping = 1.0;
            let mut improved = false;
            for _ in 0..8 {
                let candidate = &x - &dir * damping;
                let cand_grad = problem.average_gradient(&candidate)?;
                if cand_grad.norm() < gnorm {
                    x = candidate;
                    grad = cand_grad;
                    gnorm = grad.norm();
                    improved = true;
                    break;
                }
                damping *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let value = problem.average_value(&x)?;
        return Ok(OracleSolution {
            x_star: x,
            value,
            grad_norm: grad.norm(),
            iterations: spent,
        });
    }
    Err(EngineError::OracleDidNotConverge {
        iterations: max_iters,
        grad_norm: grad.norm(),
        best: x,
    })
}

/// Seeded standard-normal starting points, one per node.
pub fn initial_points(n: usize, p: usize, seed: u64) -> Vec<DVector<f64>> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            DVector::from_fn(p, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
        })
        .collect()
}

/// A running network: one protocol node per graph vertex plus the current
/// round's broadcast snapshot.
pub struct Simulation<'a> {
    problem: &'a ProblemInstance,
    params: HyperParams,
    algorithm: Algorithm,
    row_weights: Vec<Vec<(usize, f64)>>,
    col_weights: Option<Vec<Vec<(usize, f64)>>>,
    edges: Vec<(usize, usize)>,
    nodes: Vec<Node>,
    round_msgs: Vec<Vec<f64>>,
    round: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(
        algorithm: Algorithm,
        problem: &'a ProblemInstance,
        row: &MixingMatrix,
        col: Option<&MixingMatrix>,
        params: HyperParams,
        x0: Vec<DVector<f64>>,
    ) -> Result<Self, EngineError> {
        let n = problem.n();
        assert_eq!(row.n(), n);
        assert_eq!(x0.len(), n);
        let row_weights: Vec<_> = (0..n).map(|i| row.incoming_weights(i)).collect();
        let col_weights =
            col.map(|b| (0..n).map(|i| b.incoming_weights(i)).collect::<Vec<_>>());
        let edges: Vec<(usize, usize)> = row.graph().edges().collect();
        let mut nodes = Vec::with_capacity(n);
        let mut round_msgs = Vec::with_capacity(n);
        for (i, x) in x0.into_iter().enumerate() {
            let ctx = NodeContext {
                index: i,
                n,
                objective: problem.local(i),
                row_weights: &row_weights[i],
                col_weights: col_weights.as_ref().map(|c| c[i].as_slice()),
                params,
            };
            let (node, msg) = Node::init(algorithm, &ctx, x)?;
            nodes.push(node);
            round_msgs.push(msg);
        }
        Ok(Simulation {
            problem,
            params,
            algorithm,
            row_weights,
            col_weights,
            edges,
            nodes,
            round_msgs,
            round: 0,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn iterate(&self, i: usize) -> &DVector<f64> {
        self.nodes[i].iterate()
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Advances every node by one synchronous round.
    pub fn step(&mut self) -> Result<(), EngineError> {
        let round_msgs = &self.round_msgs;
        let problem = self.problem;
        let params = self.params;
        let row_weights = &self.row_weights;
        let col_weights = &self.col_weights;
        let n = self.nodes.len();
        let next: Result<Vec<Vec<f64>>, ProtocolError> = self
            .nodes
            .par_iter_mut()
            .enumerate()
            .map(|(i, node)| {
                let ctx = NodeContext {
                    index: i,
                    n,
                    objective: problem.local(i),
                    row_weights: &row_weights[i],
                    col_weights: col_weights.as_ref().map(|c| c[i].as_slice()),
                    params,
                };
                node.step(&ctx, round_msgs)
            })
            .collect();
        self.round_msgs = next?;
        self.round += 1;
        Ok(())
    }

    /// Frobenius distance of the stacked iterates from the consensus
    /// optimum `1 (x*)^T`.
    pub fn distance_to(&self, x_star: &DVector<f64>) -> f64 {
        self.nodes
            .iter()
            .map(|nd| (nd.iterate() - x_star).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest disagreement across directed edges.
    pub fn consensus_violation(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(j, i)| (self.nodes[i].iterate() - self.nodes[j].iterate()).norm())
            .fold(0.0, f64::max)
    }

    /// Norm of the average gradient at the network-average iterate.
    pub fn average_gradient_norm(&self) -> f64 {
        let n = self.nodes.len() as f64;
        let mut mean = DVector::zeros(self.problem.dimension());
        for nd in &self.nodes {
            mean += nd.iterate();
        }
        mean /= n;
        self.problem
            .average_gradient(&mean)
            .expect("iterate dimension fixed at init")
            .norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub residual: f64,
    pub consensus_violation: f64,
    pub grad_norm: f64,
    pub cum_broadcast_scalars: usize,
}

/// Sampled per-round metrics for one run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn final_residual(&self) -> f64 {
        self.rows.last().map(|r| r.residual).unwrap_or(f64::NAN)
    }

    /// CSV with full round-trippable float precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,residual,consensus_violation,grad_norm,cum_broadcast_scalars\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{}\n",
                r.k, r.residual, r.consensus_violation, r.grad_norm, r.cum_broadcast_scalars
            ));
        }
        out
    }
}

/// Runs `iterations` rounds, sampling metrics every `cadence` rounds
/// (round 0 and the final round are always recorded).
pub fn run(
    algorithm: Algorithm,
    problem: &ProblemInstance,
    row: &MixingMatrix,
    col: Option<&MixingMatrix>,
    params: HyperParams,
    x0: Vec<DVector<f64>>,
    oracle: &OracleSolution,
    iterations: usize,
    cadence: usize,
) -> Result<Trace, EngineError> {
    assert!(cadence >= 1);
    let mut sim = Simulation::new(algorithm, problem, row, col, params, x0)?;
    let d0 = sim.distance_to(&oracle.x_star);
    if d0 < 1e-300 {
        return Err(EngineError::DegenerateStart);
    }
    let per_round = comm_size(algorithm, problem.n(), problem.dimension());
    let mut rows = Vec::new();
    let record = |sim: &Simulation| TraceRow {
        k: sim.round(),
        residual: sim.distance_to(&oracle.x_star) / d0,
        consensus_violation: sim.consensus_violation(),
        grad_norm: sim.average_gradient_norm(),
        cum_broadcast_scalars: sim.round() * per_round,
    };
    rows.push(record(&sim));
    for k in 1..=iterations {
        sim.step()?;
        if k % cadence == 0 || k == iterations {
            rows.push(record(&sim));
        }
    }
    Ok(Trace { algorithm, rows })
}

/// Log-linear tail fit of a residual trace.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RateFit {
    /// per-round contraction factor, `exp(slope)`
    pub rate: f64,
    /// slope of `ln r(k)` against `k`
    pub slope: f64,
    pub r_squared: f64,
}

/// Fits `residual ~ C * rate^k` over the tail of a trace by least squares
/// on the log, skipping entries at or below numerical noise.
pub fn fit_linear_rate(rows: &[TraceRow], tail_fraction: f64) -> Result<RateFit, EngineError> {
    assert!(tail_fraction > 0.0 && tail_fraction <= 1.0);
    let start = ((rows.len() as f64) * (1.0 - tail_fraction)) as usize;
    let pts: Vec<(f64, f64)> = rows[start..]
        .iter()
        .filter(|r| r.residual > 1e-13 && r.residual.is_finite())
        .map(|r| (r.k as f64, r.residual.ln()))
        .collect();
    const NEEDED: usize = 10;
    if pts.len() < NEEDED {
        return Err(EngineError::InsufficientData {
            needed: NEEDED,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let mean_y = sy / m;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        rate: slope.exp(),
        slope,
        r_squared,
    })
}
