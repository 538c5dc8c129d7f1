//! Bounded polytopes `{x : A x <= b}` with fast paths for boxes and simplices.
//!
//! Every [`PolytopeSet`] is certified nonempty and bounded when it is built,
//! so downstream projections never have to deal with an empty or unbounded
//! set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for membership checks.
pub const FEAS_TOL: f64 = 1e-9;

/// Dimension cap for exact vertex enumeration of general polytopes.
pub const VERTEX_DIM_CAP: usize = 4;

const HILDRETH_MAX_SWEEPS: usize = 200_000;

/// Fast-path dispatch tag, inferred from the constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{x >= 0, sum x <= budget}` or, with `equality`, `sum x == budget`.
    Simplex {
        budget: f64,
        equality: bool,
    },
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeRepr", into = "PolytopeRepr")]
pub struct PolytopeSet {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    kind: SetKind,
}

#[derive(Serialize, Deserialize)]
struct PolytopeRepr {
    matrix: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl TryFrom<PolytopeRepr> for PolytopeSet {
    type Error = Error;

    fn try_from(r: PolytopeRepr) -> Result<Self> {
        let dim = r.matrix.first().map_or(0, Vec::len);
        if r.matrix.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidArgument("ragged constraint matrix".into()));
        }
        let matrix = DMatrix::from_fn(r.matrix.len(), dim, |i, j| r.matrix[i][j]);
        PolytopeSet::new(matrix, DVector::from_vec(r.rhs))
    }
}

impl From<PolytopeSet> for PolytopeRepr {
    fn from(p: PolytopeSet) -> Self {
        PolytopeRepr {
            matrix: (0..p.matrix.nrows())
                .map(|i| p.matrix.row(i).iter().copied().collect())
                .collect(),
            rhs: p.rhs.iter().copied().collect(),
        }
    }
}

impl PolytopeSet {
    /// Builds `{x : matrix * x <= rhs}`, certifying nonemptiness and boundedness.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::DimensionMismatch {
                what: "polytope rhs",
                expected: matrix.nrows(),
                got: rhs.len(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidArgument("polytope of dimension 0".into()));
        }
        if matrix.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite polytope data".into()));
        }
        let kind = classify(&matrix, &rhs);
        let set = PolytopeSet { matrix, rhs, kind };
        set.certify()?;
        Ok(set)
    }

    /// Axis-aligned box `lower <= x <= upper`.
    pub fn boxed(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                what: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        let t = lower.len();
        let mut matrix = DMatrix::zeros(2 * t, t);
        let mut rhs = DVector::zeros(2 * t);
        for k in 0..t {
            matrix[(k, k)] = 1.0;
            rhs[k] = upper[k];
            matrix[(t + k, k)] = -1.0;
            rhs[t + k] = -lower[k];
        }
        Self::new(matrix, rhs)
    }

    /// Probability-style simplex `{x >= 0, sum x = budget}`.
    pub fn simplex(dim: usize, budget: f64) -> Result<Self> {
        let (mut matrix, mut rhs) = nonneg_rows(dim, 2);
        for k in 0..dim {
            matrix[(dim, k)] = 1.0;
            matrix[(dim + 1, k)] = -1.0;
        }
        rhs[dim] = budget;
        rhs[dim + 1] = -budget;
        Self::new(matrix, rhs)
    }

    /// Budget set `{x >= 0, sum x <= budget}`.
    pub fn budget(dim: usize, budget: f64) -> Result<Self> {
        let (mut matrix, mut rhs) = nonneg_rows(dim, 1);
        for k in 0..dim {
            matrix[(dim, k)] = 1.0;
        }
        rhs[dim] = budget;
        Self::new(matrix, rhs)
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn is_box(&self) -> bool {
        matches!(self.kind, SetKind::Box { .. })
    }

    pub fn box_bounds(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            SetKind::Box { lower, upper } => Some((lower, upper)),
            _ => None,
        }
    }

    /// Same constraint matrix, new right-hand side.
    pub fn with_rhs(&self, rhs: DVector<f64>) -> Result<Self> {
        Self::new(self.matrix.clone(), rhs)
    }

    /// The set `factor * P`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        self.with_rhs(&self.rhs * factor)
    }

    /// Largest violation `max_j (a_j x - b_j)` together with its row, or `None`
    /// for a zero-row set.
    pub fn max_violation(&self, x: &[f64]) -> Option<(usize, f64)> {
        (0..self.rows())
            .map(|j| (j, self.row_dot(j, x) - self.rhs[j]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.max_violation(x).map_or(true, |(_, v)| v <= tol)
    }

    pub(crate) fn row_dot(&self, j: usize, x: &[f64]) -> f64 {
        self.matrix.row(j).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Euclidean projection of `y` onto the set.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "projection point",
                expected: self.dim(),
                got: y.len(),
            });
        }
        match &self.kind {
            SetKind::Box { lower, upper } => Ok(y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect()),
            SetKind::Simplex { budget, equality } => {
                if !equality {
                    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
                    if clipped.iter().sum::<f64>() <= *budget {
                        return Ok(clipped);
                    }
                }
                Ok(project_simplex(y, *budget))
            }
            SetKind::General => {
                let x = hildreth(&self.matrix, &self.rhs, y)?;
                match self.max_violation(&x) {
                    Some((_, v)) if v > FEAS_TOL * (1.0 + self.rhs.amax()) => {
                        Err(Error::EmptySet(format!("projection left a violation of {v:.3e}")))
                    }
                    _ => Ok(x),
                }
            }
        }
    }

    /// Vertex list. Boxes are enumerated directly; general sets only up to
    /// [`VERTEX_DIM_CAP`].
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let t = self.dim();
        if let SetKind::Box { lower, upper } = &self.kind {
            if t > 16 {
                return Err(Error::DimensionCap { dim: t, cap: 16 });
            }
            return Ok((0..1usize << t)
                .map(|mask| {
                    (0..t)
                        .map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] })
                        .collect()
                })
                .collect());
        }
        if t > VERTEX_DIM_CAP {
            return Err(Error::DimensionCap {
                dim: t,
                cap: VERTEX_DIM_CAP,
            });
        }
        let scale = 1.0 + self.rhs.amax();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for subset in combinations(self.rows(), t) {
            let a = DMatrix::from_fn(t, t, |i, j| self.matrix[(subset[i], j)]);
            let b = DVector::from_fn(t, |i, _| self.rhs[subset[i]]);
            let Some(v) = a.clone().lu().solve(&b) else {
                continue;
            };
            // reject near-singular bases
            if a.determinant().abs() < 1e-12 {
                continue;
            }
            let v: Vec<f64> = v.iter().copied().collect();
            if !self.contains(&v, FEAS_TOL * scale) {
                continue;
            }
            if !out
                .iter()
                .any(|w| w.iter().zip(&v).all(|(p, q)| (p - q).abs() <= 1e-9 * scale))
            {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptySet("no vertices found".into()));
        }
        Ok(out)
    }

    /// `max ||x||` over the set.
    pub fn radius(&self) -> Result<f64> {
        if let SetKind::Box { lower, upper } = &self.kind {
            return Ok(lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt());
        }
        Ok(self.vertices()?.iter().map(|v| norm(v)).fold(0.0, f64::max))
    }

    /// Distance from an interior point to the boundary, `min_j slack_j / ||a_j||`.
    /// Negative when `x` lies outside.
    pub fn interior_distance(&self, x: &[f64]) -> f64 {
        (0..self.rows())
            .filter_map(|j| {
                let n = self.matrix.row(j).norm();
                (n > 0.0).then(|| (self.rhs[j] - self.row_dot(j, x)) / n)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Intersection with another polytope of the same dimension.
    pub fn intersect(&self, other: &PolytopeSet) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "polytope intersection",
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let matrix = DMatrix::from_fn(self.rows() + other.rows(), self.dim(), |i, j| {
            if i < self.rows() {
                self.matrix[(i, j)]
            } else {
                other.matrix[(i - self.rows(), j)]
            }
        });
        let rhs = DVector::from_fn(self.rows() + other.rows(), |i, _| {
            if i < self.rows() {
                self.rhs[i]
            } else {
                other.rhs[i - self.rows()]
            }
        });
        Self::new(matrix, rhs)
    }

    fn certify(&self) -> Result<()> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                if let Some(k) = (0..lower.len()).find(|&k| lower[k] > upper[k] + FEAS_TOL) {
                    return Err(Error::EmptySet(format!(
                        "box bounds cross in coordinate {k}: {} > {}",
                        lower[k], upper[k]
                    )));
                }
                Ok(())
            }
            SetKind::Simplex { budget, .. } => {
                if *budget < -FEAS_TOL {
                    return Err(Error::EmptySet(format!("negative simplex budget {budget}")));
                }
                Ok(())
            }
            SetKind::General => {
                let origin = vec![0.0; self.dim()];
                self.project(&origin)?;
                let zero = DVector::zeros(self.rows());
                for k in 0..self.dim() {
                    for sign in [1.0, -1.0] {
                        let mut dir = origin.clone();
                        dir[k] = sign;
                        let d = hildreth(&self.matrix, &zero, &dir)?;
                        if norm(&d) > 1e-9 {
                            return Err(Error::Unbounded(format!(
                                "recession direction along {}e_{k}",
                                if sign > 0.0 { "+" } else { "-" }
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn nonneg_rows(dim: usize, extra: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut matrix = DMatrix::zeros(dim + extra, dim);
    for k in 0..dim {
        matrix[(k, k)] = -1.0;
    }
    (matrix, DVector::zeros(dim + extra))
}

fn classify(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> SetKind {
    let t = matrix.ncols();
    let mut lower = vec![f64::NEG_INFINITY; t];
    let mut upper = vec![f64::INFINITY; t];
    let mut is_box = true;
    for j in 0..matrix.nrows() {
        let nz: Vec<usize> = (0..t).filter(|&k| matrix[(j, k)] != 0.0).collect();
        if nz.len() != 1 {
            is_box = false;
            break;
        }
        let k = nz[0];
        let c = matrix[(j, k)];
        let bound = rhs[j] / c;
        if c > 0.0 {
            upper[k] = upper[k].min(bound);
        } else {
            lower[k] = lower[k].max(bound);
        }
    }
    if is_box && lower.iter().chain(&upper).all(|v| v.is_finite()) {
        return SetKind::Box { lower, upper };
    }

    // simplex / budget: -e_k <= 0 rows, a ones row, optionally a minus-ones row
    let mut nonneg = vec![false; t];
    let mut budget_up = None;
    let mut budget_down = None;
    for j in 0..matrix.nrows() {
        let row: Vec<f64> = matrix.row(j).iter().copied().collect();
        if row.iter().all(|&v| v == 1.0) {
            budget_up = Some(rhs[j]);
        } else if row.iter().all(|&v| v == -1.0) {
            budget_down = Some(-rhs[j]);
        } else if rhs[j] == 0.0 && row.iter().filter(|&&v| v != 0.0).count() == 1 && row.iter().any(|&v| v == -1.0) {
            let k = row.iter().position(|&v| v == -1.0).unwrap();
            nonneg[k] = true;
        } else {
            return SetKind::General;
        }
    }
    match (budget_up, budget_down) {
        (Some(b), None) if nonneg.iter().all(|&v| v) => SetKind::Simplex {
            budget: b,
            equality: false,
        },
        (Some(b), Some(c)) if b == c && nonneg.iter().all(|&v| v) => SetKind::Simplex {
            budget: b,
            equality: true,
        },
        _ => SetKind::General,
    }
}

fn project_simplex(y: &[f64], budget: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (j, v) in u.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - budget) / (j + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    y.iter().map(|v| (v - shift).max(0.0)).collect()
}

/// Hildreth's dual coordinate ascent for `min ||x - y||^2 s.t. A x <= b`,
/// followed by an exact solve on the detected active set.
pub(crate) fn hildreth(a: &DMatrix<f64>, b: &DVector<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let p = a.nrows();
    let t = a.ncols();
    let norms2: Vec<f64> = (0..p).map(|j| a.row(j).norm_squared()).collect();
    let mut lam = vec![0.0; p];
    let mut x = y.to_vec();
    let scale = 1.0 + norm(y) + b.amax();
    let mut converged = false;
    for _ in 0..HILDRETH_MAX_SWEEPS {
        let mut moved = 0.0f64;
        for j in 0..p {
            if norms2[j] == 0.0 {
                continue;
            }
            let r: f64 = (0..t).map(|k| a[(j, k)] * x[k]).sum::<f64>() - b[j];
            let next = (lam[j] + r / norms2[j]).max(0.0);
            let delta = next - lam[j];
            if delta != 0.0 {
                for k in 0..t {
                    x[k] -= delta * a[(j, k)];
                }
                lam[j] = next;
                moved = moved.max(delta.abs() * norms2[j].sqrt());
            }
        }
        if !moved.is_finite() {
            return Err(Error::EmptySet("dual iterates diverged".into()));
        }
        if moved <= 1e-15 * scale {
            converged = true;
            break;
        }
    }
    if let Some(polished) = polish(a, b, y, &lam) {
        return Ok(polished);
    }
    if !converged {
        let viol = (0..p)
            .map(|j| (0..t).map(|k| a[(j, k)] * x[k]).sum::<f64>() - b[j])
            .fold(0.0, f64::max);
        if viol > FEAS_TOL * scale {
            return Err(Error::EmptySet(format!(
                "no feasible point found (violation {viol:.3e})"
            )));
        }
    }
    Ok(x)
}

fn polish(a: &DMatrix<f64>, b: &DVector<f64>, y: &[f64], lam: &[f64]) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..lam.len()).filter(|&j| lam[j] > 0.0).collect();
    let t = a.ncols();
    let yv = DVector::from_column_slice(y);
    let x = if active.is_empty() {
        yv.clone()
    } else {
        let aj = DMatrix::from_fn(active.len(), t, |i, k| a[(active[i], k)]);
        let bj = DVector::from_fn(active.len(), |i, _| b[active[i]]);
        let gram = &aj * aj.transpose();
        let rhs = &aj * &yv - bj;
        let mult = gram.svd(true, true).solve(&rhs, 1e-13).ok()?;
        if mult.iter().any(|&m| m < -1e-12) {
            return None;
        }
        &yv - aj.transpose() * mult
    };
    let scale = 1.0 + yv.amax() + b.amax();
    let feasible = (0..a.nrows()).all(|j| a.row(j).dot(&x.transpose()) - b[j] <= 1e-12 * scale);
    feasible.then(|| x.iter().copied().collect())
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
