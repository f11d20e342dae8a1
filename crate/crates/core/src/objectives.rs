//! Per-node loss functions (Huber regression, regularized logistic
//! regression, quadratic least squares), their gradients and smoothness
//! constants, plus LIBSVM ingestion and synthetic data generation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {p} too small: dataset needs at least {needed} (max feature index + intercept)")]
    DimensionError { p: usize, needed: usize },
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("label {0} at line {1} outside {{-1, 0, +1}}")]
    LabelError(f64, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// Huber regression with knee parameter xi > 0.
    Huber { xi: f64 },
    /// l2-regularized logistic regression with lambda >= 0.
    Logistic { lambda: f64 },
    /// Plain least squares (1/2)||Mx - b||^2.
    Quadratic,
}

/// Huber loss value: quadratic inside |z| <= xi, linear outside.
pub fn huber_value(z: f64, xi: f64) -> f64 {
    debug_assert!(xi > 0.0);
    if z.abs() <= xi {
        0.5 * z * z
    } else {
        xi * (z.abs() - 0.5 * xi)
    }
}

/// Derivative of the Huber loss; continuous across the knee.
pub fn huber_grad(z: f64, xi: f64) -> f64 {
    debug_assert!(xi > 0.0);
    if z.abs() <= xi {
        z
    } else {
        xi * z.signum()
    }
}

/// softplus(u) = ln(1 + e^u), overflow-safe.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Logistic sigmoid, overflow-safe.
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// One agent's private cost: a loss kind over a local data block.
#[derive(Debug, Clone)]
pub struct LocalObjective {
    kind: LossKind,
    features: DMatrix<f64>,
    targets: DVector<f64>,
}

impl LocalObjective {
    pub fn new(kind: LossKind, features: DMatrix<f64>, targets: DVector<f64>) -> Self {
        assert_eq!(features.nrows(), targets.len(), "row/target count mismatch");
        if let LossKind::Logistic { lambda } = kind {
            assert!(lambda >= 0.0);
            assert!(
                targets.iter().all(|&b| b == 1.0 || b == -1.0),
                "logistic targets must be +/-1"
            );
        }
        if let LossKind::Huber { xi } = kind {
            assert!(xi > 0.0);
        }
        LocalObjective {
            kind,
            features,
            targets,
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), ObjectiveError> {
        if x.len() != self.dimension() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        Ok(match self.kind {
            LossKind::Huber { xi } => {
                let r = &self.features * x - &self.targets;
                r.iter().map(|&z| huber_value(z, xi)).sum()
            }
            LossKind::Logistic { lambda } => {
                let u = &self.features * x;
                let loss: f64 = u
                    .iter()
                    .zip(self.targets.iter())
                    .map(|(&ui, &bi)| softplus(-bi * ui))
                    .sum();
                loss + 0.5 * lambda * x.norm_squared()
            }
            LossKind::Quadratic => {
                let r = &self.features * x - &self.targets;
                0.5 * r.norm_squared()
            }
        })
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ObjectiveError> {
        self.check_dim(x)?;
        Ok(match self.kind {
            LossKind::Huber { xi } => {
                let r = &self.features * x - &self.targets;
                let g = DVector::from_iterator(r.len(), r.iter().map(|&z| huber_grad(z, xi)));
                self.features.transpose() * g
            }
            LossKind::Logistic { lambda } => {
                let u = &self.features * x;
                let coeff = DVector::from_iterator(
                    u.len(),
                    u.iter()
                        .zip(self.targets.iter())
                        .map(|(&ui, &bi)| -bi * sigmoid(-bi * ui)),
                );
                self.features.transpose() * coeff + lambda * x
            }
            LossKind::Quadratic => {
                let r = &self.features * x - &self.targets;
                self.features.transpose() * r
            }
        })
    }

    /// Hessian (for Huber, of the active quadratic branch).
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ObjectiveError> {
        self.check_dim(x)?;
        let p = self.dimension();
        Ok(match self.kind {
            LossKind::Huber { xi } => {
                let r = &self.features * x - &self.targets;
                let mut h = DMatrix::zeros(p, p);
                for (row, &z) in r.iter().enumerate() {
                    if z.abs() <= xi {
                        let a = self.features.row(row);
                        h.syger(1.0, &a.transpose(), &a.transpose(), 1.0);
                    }
                }
                h.fill_lower_triangle_with_upper_triangle();
                h
            }
            LossKind::Logistic { lambda } => {
                let u = &self.features * x;
                let mut h = DMatrix::identity(p, p) * lambda;
                for (row, (&ui, &bi)) in u.iter().zip(self.targets.iter()).enumerate() {
                    let s = sigmoid(-bi * ui);
                    let w = s * (1.0 - s);
                    let a = self.features.row(row);
                    h.syger(w, &a.transpose(), &a.transpose(), 1.0);
                }
                h.fill_lower_triangle_with_upper_triangle();
                h
            }
            LossKind::Quadratic => self.features.transpose() * &self.features,
        })
    }

    /// Lipschitz constant of the gradient.
    pub fn smoothness(&self) -> f64 {
        let s2 = spectral_norm_squared(&self.features);
        match self.kind {
            LossKind::Huber { .. } => s2,
            LossKind::Logistic { lambda } => s2 / 4.0 + lambda,
            LossKind::Quadratic => s2,
        }
    }

    /// Strong-convexity modulus (0 when none is guaranteed).
    pub fn strong_convexity(&self) -> f64 {
        match self.kind {
            LossKind::Huber { .. } => 0.0,
            LossKind::Logistic { lambda } => lambda,
            LossKind::Quadratic => {
                let gram = self.features.transpose() * &self.features;
                smallest_eigenvalue_sym(&gram)
            }
        }
    }
}

/// Largest eigenvalue of M^T M (= squared spectral norm of M) by power
/// iteration; M^T M is symmetric PSD so plain power iteration suffices.
pub fn spectral_norm_squared(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    largest_eigenvalue_sym(&gram)
}

fn largest_eigenvalue_sym(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ac);
    let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).normalize();
    let mut lam = 0.0;
    for _ in 0..50_000 {
        let w = a * &v;
        let nw = w.norm();
        if nw < 1e-300 {
            return 0.0;
        }
        let next = w / nw;
        let new_lam = (a * &next).dot(&next);
        if (new_lam - lam).abs() <= 1e-14 * new_lam.abs().max(1.0) {
            return new_lam;
        }
        lam = new_lam;
        v = next;
    }
    lam
}

fn smallest_eigenvalue_sym(a: &DMatrix<f64>) -> f64 {
    // lambda_min(A) = lambda_max(A) - lambda_max(lambda_max I - A)
    let n = a.nrows();
    let top = largest_eigenvalue_sym(a);
    let shifted = DMatrix::identity(n, n) * top - a;
    (top - largest_eigenvalue_sym(&shifted)).max(0.0)
}

/// All agents' objectives plus the network-level smoothness constants.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    locals: Vec<LocalObjective>,
    dimension: usize,
    smoothness: f64,
    strong_convexity: f64,
}

impl ProblemInstance {
    pub fn new(locals: Vec<LocalObjective>) -> Self {
        assert!(!locals.is_empty());
        let dimension = locals[0].dimension();
        assert!(
            locals.iter().all(|l| l.dimension() == dimension),
            "all locals must share the decision dimension"
        );
        let smoothness = locals.iter().map(|l| l.smoothness()).fold(0.0, f64::max);
        let strong_convexity = locals
            .iter()
            .map(|l| l.strong_convexity())
            .fold(f64::INFINITY, f64::min);
        ProblemInstance {
            locals,
            dimension,
            smoothness,
            strong_convexity,
        }
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn local(&self, i: usize) -> &LocalObjective {
        &self.locals[i]
    }

    pub fn locals(&self) -> &[LocalObjective] {
        &self.locals
    }

    /// L = max_i L_i.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// mu = min_i mu_i.
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    /// Average objective (1/n) sum_i f_i(x).
    pub fn average_value(&self, x: &DVector<f64>) -> Result<f64, ObjectiveError> {
        let mut acc = 0.0;
        for l in &self.locals {
            acc += l.value(x)?;
        }
        Ok(acc / self.n() as f64)
    }

    /// Gradient of the average objective.
    pub fn average_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ObjectiveError> {
        let mut acc = DVector::zeros(self.dimension);
        for l in &self.locals {
            acc += l.gradient(x)?;
        }
        Ok(acc / self.n() as f64)
    }

    pub fn average_hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ObjectiveError> {
        let mut acc = DMatrix::zeros(self.dimension, self.dimension);
        for l in &self.locals {
            acc += l.hessian(x)?;
        }
        Ok(acc / self.n() as f64)
    }
}

/// Synthetic Huber regression instance: per node, a standard normal M_i
/// rescaled to unit spectral norm (so L_i = 1), targets from a shared
/// seeded ground truth plus N(0, 0.1^2) noise.
pub fn synth_huber_problem(
    n: usize,
    m_per_node: usize,
    p: usize,
    xi: f64,
    seed: u64,
) -> ProblemInstance {
    assert!(n >= 1 && m_per_node >= 1 && p >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let truth = DVector::from_fn(p, |_, _| normal.sample(&mut rng));
    let mut locals = Vec::with_capacity(n);
    for _ in 0..n {
        let mut m = DMatrix::from_fn(m_per_node, p, |_, _| normal.sample(&mut rng));
        let s = spectral_norm_squared(&m).sqrt();
        if s > 0.0 {
            m /= s;
        }
        let noise = DVector::from_fn(m_per_node, |_, _| {
            0.1 * <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng)
        });
        let b = &m * &truth + noise;
        locals.push(LocalObjective::new(LossKind::Huber { xi }, m, b));
    }
    ProblemInstance::new(locals)
}

/// A sparse labeled dataset in LIBSVM layout.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    rows: Vec<(BTreeMap<usize, f64>, f64)>,
    max_feature_index: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_feature_index(&self) -> usize {
        self.max_feature_index
    }

    pub fn row(&self, i: usize) -> (&BTreeMap<usize, f64>, f64) {
        (&self.rows[i].0, self.rows[i].1)
    }
}

/// Parses LIBSVM text: `<label> <idx>:<val> ...`, 1-based strictly
/// increasing indices, labels in {-1, 0, +1} normalized to +/-1.
pub fn parse_libsvm(text: &str) -> Result<Dataset, ObjectiveError> {
    let mut ds = Dataset::default();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label_tok = toks.next().unwrap();
        let raw: f64 = label_tok.parse().map_err(|e| ObjectiveError::ParseError {
            line: lineno,
            msg: format!("bad label {label_tok:?}: {e}"),
        })?;
        let label = match raw {
            r if r == 1.0 => 1.0,
            r if r == -1.0 => -1.0,
            r if r == 0.0 => -1.0,
            other => return Err(ObjectiveError::LabelError(other, lineno)),
        };
        let mut features = BTreeMap::new();
        let mut prev_idx = 0usize;
        for tok in toks {
            let (i_str, v_str) = tok.split_once(':').ok_or_else(|| ObjectiveError::ParseError {
                line: lineno,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let fi: usize = i_str.parse().map_err(|e| ObjectiveError::ParseError {
                line: lineno,
                msg: format!("bad feature index {i_str:?}: {e}"),
            })?;
            let fv: f64 = v_str.parse().map_err(|e| ObjectiveError::ParseError {
                line: lineno,
                msg: format!("bad feature value {v_str:?}: {e}"),
            })?;
            if fi == 0 {
                return Err(ObjectiveError::ParseError {
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if fi <= prev_idx {
                return Err(ObjectiveError::ParseError {
                    line: lineno,
                    msg: format!("feature indices must be strictly increasing (saw {fi} after {prev_idx})"),
                });
            }
            prev_idx = fi;
            features.insert(fi, fv);
        }
        ds.max_feature_index = ds.max_feature_index.max(prev_idx);
        ds.rows.push((features, label));
    }
    Ok(ds)
}

/// Distributes `m_per_node` rows per node, sampled uniformly with
/// replacement, into dense logistic objectives with an all-ones intercept
/// column in the last position.
pub fn partition_dataset(
    ds: &Dataset,
    n: usize,
    m_per_node: usize,
    p: usize,
    lambda: f64,
    seed: u64,
) -> Result<ProblemInstance, ObjectiveError> {
    let needed = ds.max_feature_index() + 1;
    if p < needed {
        return Err(ObjectiveError::DimensionError { p, needed });
    }
    assert!(!ds.is_empty(), "cannot partition an empty dataset");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locals = Vec::with_capacity(n);
    for _ in 0..n {
        let mut m = DMatrix::zeros(m_per_node, p);
        let mut b = DVector::zeros(m_per_node);
        for r in 0..m_per_node {
            let (features, label) = ds.row(rng.gen_range(0..ds.len()));
            for (&fi, &fv) in features {
                m[(r, fi - 1)] = fv;
            }
            m[(r, p - 1)] = 1.0;
            b[r] = label;
        }
        locals.push(LocalObjective::new(LossKind::Logistic { lambda }, m, b));
    }
    Ok(ProblemInstance::new(locals))
}
