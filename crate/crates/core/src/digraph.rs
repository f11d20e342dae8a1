//! Directed communication graphs, strongly connected random generation, and
//! the stochastic mixing matrices built on top of them.
//!
//! Edges are ordered pairs `(j, i)` meaning node `j` can send to node `i`.
//! Self-loops are never stored: every node is implicitly a member of its own
//! closed in-neighborhood, and the uniform weight rules account for that.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node index {0} out of range for graph with {1} nodes")]
    NodeOutOfRange(usize, usize),
    #[error("self-loop {0}->{0} is not representable; self-membership is implicit")]
    SelfLoop(usize),
    #[error("requested {requested} edges for n={n}, but strong connectivity needs at least {n}")]
    InfeasibleDensity { n: usize, requested: usize },
    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("graph parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A simple directed graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DiGraph {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "graph needs at least one node");
        DiGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Adds the edge `from -> to`. Duplicate inserts are idempotent.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        if from >= self.n {
            return Err(GraphError::NodeOutOfRange(from, self.n));
        }
        if to >= self.n {
            return Err(GraphError::NodeOutOfRange(to, self.n));
        }
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        self.edges.insert((from, to));
        Ok(())
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = DiGraph::new(n);
        for &(j, i) in edges {
            g.add_edge(j, i)?;
        }
        Ok(g)
    }

    /// A directed cycle 0 -> 1 -> ... -> n-1 -> 0.
    pub fn cycle(n: usize) -> Self {
        let mut g = DiGraph::new(n);
        for i in 0..n {
            if n > 1 {
                g.add_edge(i, (i + 1) % n).unwrap();
            }
        }
        g
    }

    /// Directed cycle plus `stride`-step chord edges, a denser desk-scale topology.
    pub fn cycle_with_chords(n: usize, stride: usize) -> Self {
        let mut g = DiGraph::cycle(n);
        if n > 2 && stride % n != 0 {
            for i in 0..n {
                let t = (i + stride) % n;
                if t != i {
                    g.add_edge(i, t).unwrap();
                }
            }
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = DiGraph::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        g
    }

    /// Open in-neighborhood of `i` (excludes `i` itself).
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(j, i)).collect()
    }

    /// Closed in-neighborhood: in-neighbors plus the node itself, sorted.
    pub fn closed_in_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut v = self.in_neighbors(i);
        v.push(i);
        v.sort_unstable();
        v
    }

    pub fn out_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.has_edge(j, i)).count()
    }

    /// Serializes to the plain text format: first line `n m`, then one
    /// `j i` line per edge, 1-based.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.edges.len());
        for (j, i) in &self.edges {
            let _ = writeln!(s, "{} {}", j + 1, i + 1);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (lineno, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let mut parts = header.split_whitespace();
        let parse_num = |tok: Option<&str>, line: usize| -> Result<usize, GraphError> {
            tok.ok_or(GraphError::Parse {
                line,
                msg: "expected two integers".into(),
            })?
            .parse()
            .map_err(|e| GraphError::Parse {
                line,
                msg: format!("{e}"),
            })
        };
        let n = parse_num(parts.next(), lineno + 1)?;
        let m = parse_num(parts.next(), lineno + 1)?;
        if n == 0 {
            return Err(GraphError::Parse {
                line: lineno + 1,
                msg: "node count must be positive".into(),
            });
        }
        let mut g = DiGraph::new(n);
        let mut seen = 0usize;
        for (lineno, line) in lines {
            let mut parts = line.split_whitespace();
            let j = parse_num(parts.next(), lineno + 1)?;
            let i = parse_num(parts.next(), lineno + 1)?;
            if j == 0 || i == 0 {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: "node ids are 1-based".into(),
                });
            }
            g.add_edge(j - 1, i - 1).map_err(|e| GraphError::Parse {
                line: lineno + 1,
                msg: format!("{e}"),
            })?;
            seen += 1;
        }
        if seen != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {seen}"),
            });
        }
        Ok(g)
    }
}

/// Tarjan-free strong connectivity check: forward and reverse BFS from node 0.
pub fn is_strongly_connected(g: &DiGraph) -> bool {
    if g.n() == 1 {
        return true;
    }
    let n = g.n();
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for (j, i) in g.edges() {
        fwd[j].push(i);
        rev[i].push(j);
    }
    let reach = |adj: &[Vec<usize>]| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(&fwd) == n && reach(&rev) == n
}

/// Number of edges the density parameter `phi` calls for: ceil(phi * n * (n-1)).
pub fn edge_budget(n: usize, phi: f64) -> usize {
    (phi * (n * (n - 1)) as f64).ceil() as usize
}

/// Generates a strongly connected random digraph with exactly
/// `ceil(phi * n * (n-1))` edges, deterministically in `seed`.
///
/// Groups of already-connected nodes are repeatedly wired into directed
/// cycles drawn from a random permutation until one strongly connected
/// component remains; the leftover edge budget is filled by a uniform
/// sample over the absent non-self pairs.
pub fn generate_strongly_connected(n: usize, phi: f64, seed: u64) -> Result<DiGraph, GraphError> {
    assert!(phi > 0.0 && phi <= 1.0, "phi must lie in (0, 1]");
    if n == 1 {
        return Ok(DiGraph::new(1));
    }
    let budget = edge_budget(n, phi);
    if budget < n {
        return Err(GraphError::InfeasibleDensity {
            n,
            requested: budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DiGraph::new(n);

    // Each group is a set of original nodes already strongly connected
    // among themselves; a cycle over groups merges them into one.
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    while groups.len() > 1 {
        let k = groups.len();
        let remaining_budget = budget - g.edge_count();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let mut moved: Vec<usize> = (0..k).filter(|&i| perm[i] != i).collect();
        if moved.len() < 2 {
            continue;
        }
        // A cycle over `moved` spends |moved| edges and leaves k - |moved| + 1
        // groups, which still need that many edges to finish. If this draw
        // would overrun the budget, close everything with one full cycle.
        let after = k - moved.len() + 1;
        let still_needed = if after > 1 { after } else { 0 };
        if moved.len() + still_needed > remaining_budget {
            moved = (0..k).collect();
        }
        for w in 0..moved.len() {
            let a = moved[w];
            let b = moved[(w + 1) % moved.len()];
            let u = *groups[a].choose(&mut rng).unwrap();
            let v = *groups[b].choose(&mut rng).unwrap();
            g.add_edge(u, v)?;
        }
        let mut merged = Vec::new();
        let mut rest = Vec::new();
        for (idx, grp) in groups.into_iter().enumerate() {
            if moved.contains(&idx) {
                merged.extend(grp);
            } else {
                rest.push(grp);
            }
        }
        rest.push(merged);
        groups = rest;
    }

    // Top up with a uniform sample (partial Fisher-Yates) over the absent
    // pairs, enumerated in a fixed scan order for determinism.
    let missing = budget - g.edge_count();
    if missing > 0 {
        let mut absent: Vec<(usize, usize)> = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && !g.has_edge(j, i) {
                    absent.push((j, i));
                }
            }
        }
        assert!(missing <= absent.len(), "edge budget exceeds simple digraph capacity");
        for t in 0..missing {
            let pick = rng.gen_range(t..absent.len());
            absent.swap(t, pick);
            let (j, i) = absent[t];
            g.add_edge(j, i)?;
        }
    }
    debug_assert!(is_strongly_connected(&g));
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    RowStochastic,
    ColumnStochastic,
}

/// A stochastic weight matrix compatible with a digraph.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    kind: MatrixKind,
    entries: DMatrix<f64>,
    graph: DiGraph,
}

impl MixingMatrix {
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn graph(&self) -> &DiGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Nonzero entries of row `i` as `(sender, weight)` pairs: exactly the
    /// coefficients node `i` applies to its closed in-neighborhood.
    pub fn incoming_weights(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.n())
            .filter_map(|j| {
                let w = self.entries[(i, j)];
                (w != 0.0).then_some((j, w))
            })
            .collect()
    }
}

/// Uniform row-stochastic weights: r_ij = 1 / |closed in-neighborhood of i|.
pub fn build_uniform_row_stochastic(g: &DiGraph) -> MixingMatrix {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let nbrs = g.closed_in_neighborhood(i);
        let w = 1.0 / nbrs.len() as f64;
        for j in nbrs {
            m[(i, j)] = w;
        }
    }
    MixingMatrix {
        kind: MatrixKind::RowStochastic,
        entries: m,
        graph: g.clone(),
    }
}

/// Uniform column-stochastic weights: b_ij = 1 / (out-degree(j) + 1) on
/// the closed out-neighborhood of j.
pub fn build_uniform_column_stochastic(g: &DiGraph) -> MixingMatrix {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let w = 1.0 / (g.out_degree(j) + 1) as f64;
        m[(j, j)] = w;
        for i in 0..n {
            if g.has_edge(j, i) {
                m[(i, j)] = w;
            }
        }
    }
    MixingMatrix {
        kind: MatrixKind::ColumnStochastic,
        entries: m,
        graph: g.clone(),
    }
}

/// Left Perron eigenvector of a row-stochastic matrix, normalized to sum 1.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pi: DVector<f64>,
}

impl StationaryDistribution {
    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn min(&self) -> f64 {
        self.pi.min()
    }
}

const POWER_STEP_TOL: f64 = 1e-13;

fn power_iteration_cap(n: usize) -> usize {
    (100.0 * n as f64 * (1.0 / POWER_STEP_TOL).ln()).ceil() as usize
}

/// Stationary distribution by power iteration on the transpose map.
pub fn stationary_distribution(
    m: &MixingMatrix,
) -> Result<StationaryDistribution, GraphError> {
    assert_eq!(
        m.kind(),
        MatrixKind::RowStochastic,
        "stationary distribution is defined for row-stochastic matrices"
    );
    let n = m.n();
    let r = m.entries();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let cap = power_iteration_cap(n);
    for _ in 0..cap {
        let mut next = r.transpose() * &pi;
        let total: f64 = next.sum();
        next /= total;
        let diff = (&next - &pi).amax();
        pi = next;
        if diff <= POWER_STEP_TOL {
            return Ok(StationaryDistribution { pi });
        }
    }
    Err(GraphError::NonConvergence(cap))
}

/// Spectral radius of `R - 1 pi^T`, the mixing-speed surrogate.
pub fn spectral_gap(m: &MixingMatrix, pi: &StationaryDistribution) -> f64 {
    assert_eq!(m.kind(), MatrixKind::RowStochastic);
    let n = m.n();
    let ones = DVector::from_element(n, 1.0);
    let deflated = m.entries() - &ones * pi.pi().transpose();
    spectral_radius(&deflated)
}

/// Spectral radius of an arbitrary real square matrix via a dense Schur
/// decomposition. Plain power iteration is not safe here: deflated mixing
/// matrices routinely have complex or defective dominant eigenvalues.
///
/// The input is rescaled to unit max entry and factored with the
/// iteration-bounded Schur path; the unbounded `complex_eigenvalues`
/// wrapper spins forever on all-zero inputs (complete-graph deflations).
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)].abs();
    }
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let scaled = a / scale;
    for eps in [1e-15, 1e-12, 1e-9] {
        if let Some(schur) = scaled.clone().try_schur(eps, 100_000) {
            let rho = schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            return scale * rho;
        }
    }
    unreachable!("Schur iteration failed at eps 1e-9");
}
