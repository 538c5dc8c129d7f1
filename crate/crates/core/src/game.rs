//! Game model: cost families, nonatomic specifications and finite-player games.
//!
//! Costs are linear-quadratic, `f(x, X; s) = <x, D X + d> - u(x; s)` with the
//! private utility `u(x; s) = <b_u(s), x> - a(s)/2 ||x||^2`. The parameter
//! vector is laid out as `s = (a, b_u[0], .., b_u[T-1])`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::aas::Partition;
use crate::error::{Error, Result};
use crate::polytope::{PolytopeSet, FEAS_TOL};
use crate::serde_util;

/// Which first-order map a finite player uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Gradient of `x_i -> f_i(x_i, x_i + X_{-i})`: the player sees her own
    /// impact on the aggregate.
    Vne,
    /// Partial gradient in the first argument only, aggregate held fixed.
    Pseudo,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Vne => "vne",
            Mode::Pseudo => "pseudo",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vne" => Ok(Mode::Vne),
            "pseudo" => Ok(Mode::Pseudo),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode `{other}` (expected vne or pseudo)"
            ))),
        }
    }
}

/// Affine price map `c(X) = D X + d` shared by all players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFamily {
    #[serde(with = "serde_util::matrix")]
    price_matrix: DMatrix<f64>,
    #[serde(with = "serde_util::vector")]
    price_offset: DVector<f64>,
}

impl CostFamily {
    pub fn new(price_matrix: DMatrix<f64>, price_offset: DVector<f64>) -> Result<Self> {
        let t = price_offset.len();
        if price_matrix.nrows() != t || price_matrix.ncols() != t {
            return Err(Error::DimensionMismatch {
                what: "price matrix",
                expected: t,
                got: price_matrix.nrows().max(price_matrix.ncols()),
            });
        }
        Ok(CostFamily {
            price_matrix,
            price_offset,
        })
    }

    pub fn scalar(slope: f64, offset: f64) -> Self {
        CostFamily {
            price_matrix: DMatrix::from_element(1, 1, slope),
            price_offset: DVector::from_element(1, offset),
        }
    }

    pub fn dim(&self) -> usize {
        self.price_offset.len()
    }

    pub fn param_len(&self) -> usize {
        self.dim() + 1
    }

    pub fn price_matrix(&self) -> &DMatrix<f64> {
        &self.price_matrix
    }

    pub fn price_offset(&self) -> &DVector<f64> {
        &self.price_offset
    }

    /// `c(X) = D X + d`.
    pub fn price(&self, aggregate: &[f64]) -> Vec<f64> {
        let t = self.dim();
        (0..t)
            .map(|r| self.price_offset[r] + (0..t).map(|c| self.price_matrix[(r, c)] * aggregate[c]).sum::<f64>())
            .collect()
    }

    /// `D^T x`, the gradient of `X -> <x, c(X)>`.
    pub fn price_adjoint(&self, x: &[f64]) -> Vec<f64> {
        let t = self.dim();
        (0..t)
            .map(|c| (0..t).map(|r| self.price_matrix[(r, c)] * x[r]).sum())
            .collect()
    }

    pub fn curvature(params: &[f64]) -> f64 {
        params[0]
    }

    pub fn marginal(params: &[f64]) -> &[f64] {
        &params[1..]
    }

    pub fn utility(&self, x: &[f64], params: &[f64]) -> f64 {
        let a = Self::curvature(params);
        let b = Self::marginal(params);
        dot(b, x) - 0.5 * a * dot(x, x)
    }

    pub fn cost(&self, x: &[f64], aggregate: &[f64], params: &[f64]) -> f64 {
        dot(x, &self.price(aggregate)) - self.utility(x, params)
    }

    /// Partial gradient in the own action, `c(X) + a x - b_u`.
    pub fn grad_own(&self, x: &[f64], aggregate: &[f64], params: &[f64]) -> Vec<f64> {
        let a = Self::curvature(params);
        let b = Self::marginal(params);
        self.price(aggregate)
            .iter()
            .zip(x.iter().zip(b))
            .map(|(c, (xk, bk))| c + a * xk - bk)
            .collect()
    }

    /// Spectral norm of `D`.
    pub fn price_norm(&self) -> f64 {
        self.price_matrix.clone().svd(false, false).singular_values.max()
    }

    /// Smallest eigenvalue of the symmetric part of `D`.
    pub fn price_monotonicity(&self) -> f64 {
        let sym = (&self.price_matrix + self.price_matrix.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }
}

/// Vector-valued affine function on `[start, end]`, given by its endpoint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Segment {
    pub fn constant(start: f64, end: f64, value: Vec<f64>) -> Self {
        Segment {
            start,
            end,
            left: value.clone(),
            right: value,
        }
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let w = if self.end > self.start {
            (theta - self.start) / (self.end - self.start)
        } else {
            0.0
        };
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| l + w * (r - l))
            .collect()
    }

    /// Exact integral over `[u, v]` (affine integrand: length times midpoint value).
    pub fn integral(&self, u: f64, v: f64) -> Vec<f64> {
        let mid = self.eval(0.5 * (u + v));
        mid.into_iter().map(|m| m * (v - u)).collect()
    }

    pub fn slope(&self) -> Vec<f64> {
        let len = self.end - self.start;
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| if len > 0.0 { (r - l) / len } else { 0.0 })
            .collect()
    }
}

/// Piecewise-affine map `[0, 1] -> R^n` (discontinuities allowed at breakpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffine {
    pub segments: Vec<Segment>,
}

impl PiecewiseAffine {
    pub fn constant(value: Vec<f64>) -> Self {
        PiecewiseAffine {
            segments: vec![Segment::constant(0.0, 1.0, value)],
        }
    }

    pub fn validate(&self, what: &str, width: usize) -> Result<()> {
        let Some(first) = self.segments.first() else {
            return Err(Error::InvalidSpec(format!("{what}: no segments")));
        };
        if first.start != 0.0 || self.segments.last().unwrap().end != 1.0 {
            return Err(Error::InvalidSpec(format!("{what}: segments must cover [0, 1]")));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !(s.end > s.start) {
                return Err(Error::InvalidSpec(format!("{what}: segment {k} has end <= start")));
            }
            if k > 0 && self.segments[k - 1].end != s.start {
                return Err(Error::InvalidSpec(format!(
                    "{what}: segment {k} does not start where segment {} ends",
                    k - 1
                )));
            }
            if s.left.len() != width || s.right.len() != width {
                return Err(Error::InvalidSpec(format!(
                    "{what}: segment {k} values must have length {width}"
                )));
            }
            if s.left.iter().chain(&s.right).any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{what}: segment {k} not finite")));
            }
        }
        Ok(())
    }

    /// Index of the segment holding `theta` (right-continuous, last segment closed).
    pub fn segment_of(&self, theta: f64) -> usize {
        self.segments
            .iter()
            .position(|s| theta < s.end)
            .unwrap_or(self.segments.len() - 1)
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        self.segments[self.segment_of(theta)].eval(theta)
    }

    /// Exact integral over `[u, v]`.
    pub fn integral(&self, u: f64, v: f64) -> Vec<f64> {
        let width = self.segments[0].left.len();
        let mut acc = vec![0.0; width];
        for s in &self.segments {
            let lo = u.max(s.start);
            let hi = v.min(s.end);
            if hi > lo {
                for (a, x) in acc.iter_mut().zip(s.integral(lo, hi)) {
                    *a += x;
                }
            }
        }
        acc
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }
}

/// Interior witness of the action-set family: `d(witness_theta, rbd X_theta) > slack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorWitness {
    pub slack: f64,
    pub profile: PiecewiseAffine,
}

/// Strong-monotonicity moduli claimed for an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredModuli {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// Raw fields of a nonatomic game; validated by [`NonatomicGameSpec::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpecParts {
    pub name: String,
    /// Shared constraint matrix of `X_theta = {x : A x <= b_theta}`.
    pub action_matrix: DMatrix<f64>,
    /// `theta -> b_theta`.
    pub rhs: PiecewiseAffine,
    /// `theta -> s_theta = (a, b_u)`.
    pub params: PiecewiseAffine,
    pub cost: CostFamily,
    pub aggregate: Option<PolytopeSet>,
    pub witness: Option<InteriorWitness>,
    pub reference_aggregate: Option<Vec<f64>>,
    pub declared: DeclaredModuli,
}

/// A nonatomic aggregative game over `Theta = [0, 1]` with piecewise-affine
/// characteristics and an optional aggregate constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct NonatomicGameSpec {
    parts: SpecParts,
    box_family: bool,
}

impl NonatomicGameSpec {
    pub fn new(parts: SpecParts) -> Result<Self> {
        let t = parts.cost.dim();
        let rows = parts.action_matrix.nrows();
        if parts.action_matrix.ncols() != t {
            return Err(Error::DimensionMismatch {
                what: "action matrix columns",
                expected: t,
                got: parts.action_matrix.ncols(),
            });
        }
        parts.rhs.validate("rhs profile", rows)?;
        parts.params.validate("parameter profile", t + 1)?;
        let cuts = |p: &PiecewiseAffine| -> Vec<(f64, f64)> { p.segments.iter().map(|s| (s.start, s.end)).collect() };
        if cuts(&parts.rhs) != cuts(&parts.params) {
            return Err(Error::InvalidSpec(
                "rhs and parameter profiles must share breakpoints".into(),
            ));
        }
        for seg in &parts.params.segments {
            if seg.left[0] < 0.0 || seg.right[0] < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "curvature a(s) must be >= 0 on [{}, {}]",
                    seg.start, seg.end
                )));
            }
        }
        let mut box_family = true;
        for seg in &parts.rhs.segments {
            for b in [&seg.left, &seg.right] {
                let set = PolytopeSet::new(parts.action_matrix.clone(), DVector::from_vec(b.clone()))
                    .map_err(|e| Error::InvalidSpec(format!("action set on [{}, {}]: {e}", seg.start, seg.end)))?;
                box_family &= set.is_box();
            }
        }
        if let Some(a) = &parts.aggregate {
            if a.dim() != t {
                return Err(Error::DimensionMismatch {
                    what: "aggregate constraint",
                    expected: t,
                    got: a.dim(),
                });
            }
        }
        if let Some(w) = &parts.witness {
            if !(w.slack > 0.0) {
                return Err(Error::InvalidSpec("interior slack must be > 0".into()));
            }
            w.profile.validate("witness profile", t)?;
            if cuts(&w.profile) != cuts(&parts.rhs) {
                return Err(Error::InvalidSpec(
                    "witness profile must share the rhs breakpoints".into(),
                ));
            }
        }
        if let Some(r) = &parts.reference_aggregate {
            if r.len() != t {
                return Err(Error::DimensionMismatch {
                    what: "reference aggregate",
                    expected: t,
                    got: r.len(),
                });
            }
        }
        let spec = NonatomicGameSpec { parts, box_family };
        spec.check_witness()?;
        spec.check_aggregate_feasible()?;
        Ok(spec)
    }

    fn check_witness(&self) -> Result<()> {
        let Some(w) = &self.parts.witness else {
            return Ok(());
        };
        // slacks are affine in theta on each piece, so endpoints suffice
        for (k, seg) in w.profile.segments.iter().enumerate() {
            for theta in [seg.start, seg.end] {
                let set = self.action_set(k, theta)?;
                let d = set.interior_distance(&seg.eval(theta));
                if !(d > w.slack) {
                    return Err(Error::InvalidSpec(format!(
                        "witness at theta={theta} is only {d:.4} from the boundary (slack {})",
                        w.slack
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_aggregate_feasible(&self) -> Result<()> {
        let Some(a) = &self.parts.aggregate else {
            return Ok(());
        };
        match self.aggregate_set() {
            Ok((s, _)) => a
                .intersect(&s)
                .map(|_| ())
                .map_err(|e| Error::InvalidSpec(format!("aggregate constraint misses the aggregate set: {e}"))),
            Err(Error::MissingWitness) => {
                log::warn!(
                    "{}: cannot certify A and S intersect without an interior witness",
                    self.name()
                );
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    pub fn parts(&self) -> &SpecParts {
        &self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn dim(&self) -> usize {
        self.parts.cost.dim()
    }

    pub fn cost(&self) -> &CostFamily {
        &self.parts.cost
    }

    pub fn action_matrix(&self) -> &DMatrix<f64> {
        &self.parts.action_matrix
    }

    pub fn rhs_profile(&self) -> &PiecewiseAffine {
        &self.parts.rhs
    }

    pub fn param_profile(&self) -> &PiecewiseAffine {
        &self.parts.params
    }

    pub fn aggregate_constraint(&self) -> Option<&PolytopeSet> {
        self.parts.aggregate.as_ref()
    }

    pub fn witness(&self) -> Option<&InteriorWitness> {
        self.parts.witness.as_ref()
    }

    pub fn declared(&self) -> DeclaredModuli {
        self.parts.declared
    }

    pub fn is_box_family(&self) -> bool {
        self.box_family
    }

    pub fn pieces(&self) -> usize {
        self.parts.rhs.segments.len()
    }

    pub fn piece_span(&self, piece: usize) -> (f64, f64) {
        let s = &self.parts.rhs.segments[piece];
        (s.start, s.end)
    }

    pub fn piece_of(&self, theta: f64) -> usize {
        self.parts.rhs.segment_of(theta)
    }

    /// Interior discontinuity points of the characteristic profile.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.parts.rhs.breakpoints()
    }

    /// `b_theta` evaluated on a given piece (so endpoints take one-sided limits).
    pub fn rhs_at(&self, piece: usize, theta: f64) -> Vec<f64> {
        self.parts.rhs.segments[piece].eval(theta)
    }

    pub fn params_at(&self, piece: usize, theta: f64) -> Vec<f64> {
        self.parts.params.segments[piece].eval(theta)
    }

    pub fn action_set(&self, piece: usize, theta: f64) -> Result<PolytopeSet> {
        PolytopeSet::new(
            self.parts.action_matrix.clone(),
            DVector::from_vec(self.rhs_at(piece, theta)),
        )
    }

    /// Box bounds of `X_theta` on a box family.
    pub fn box_at(&self, piece: usize, theta: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let set = self.action_set(piece, theta).ok()?;
        set.box_bounds().map(|(l, u)| (l.to_vec(), u.to_vec()))
    }

    /// Set of feasible aggregates `S = int X_theta`. Exact for box families;
    /// otherwise the inner box `int (witness +- slack/sqrt(T))`. The flag is
    /// true when the set is exact.
    pub fn aggregate_set(&self) -> Result<(PolytopeSet, bool)> {
        let t = self.dim();
        if self.box_family {
            let mut lo = vec![0.0; t];
            let mut hi = vec![0.0; t];
            for (k, seg) in self.parts.rhs.segments.iter().enumerate() {
                for theta in [seg.start, seg.end] {
                    let (l, u) = self.box_at(k, theta).expect("box family");
                    for c in 0..t {
                        lo[c] += 0.5 * (seg.end - seg.start) * l[c];
                        hi[c] += 0.5 * (seg.end - seg.start) * u[c];
                    }
                }
            }
            return Ok((PolytopeSet::boxed(&lo, &hi)?, true));
        }
        let w = self.parts.witness.as_ref().ok_or(Error::MissingWitness)?;
        let centre = w.profile.integral(0.0, 1.0);
        let half = w.slack / (t as f64).sqrt();
        let lo: Vec<f64> = centre.iter().map(|c| c - half).collect();
        let hi: Vec<f64> = centre.iter().map(|c| c + half).collect();
        Ok((PolytopeSet::boxed(&lo, &hi)?, false))
    }

    /// Copy of this spec with another price map (used for adversarial checks).
    pub fn with_cost(&self, cost: CostFamily) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.cost = cost;
        Self::new(parts)
    }
}

/// Row-major `players x dim` action profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    players: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Profile {
    pub fn zeros(players: usize, dim: usize) -> Self {
        Profile {
            players,
            dim,
            data: vec![0.0; players * dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "profile row",
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Profile {
            players: rows.len(),
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(players: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != players * dim {
            return Err(Error::DimensionMismatch {
                what: "flat profile",
                expected: players * dim,
                got: data.len(),
            });
        }
        Ok(Profile { players, dim, data })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn player_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.players).map(|i| self.player(i).to_vec()).collect()
    }

    /// Column sum `X = sum_i x_i`.
    pub fn aggregate(&self) -> Vec<f64> {
        let mut agg = vec![0.0; self.dim];
        for i in 0..self.players {
            for (a, v) in agg.iter_mut().zip(self.player(i)) {
                *a += v;
            }
        }
        agg
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &Profile) -> Profile {
        Profile {
            players: self.players,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + factor * b).collect(),
        }
    }

    pub fn sub(&self, other: &Profile) -> Profile {
        self.add_scaled(-1.0, other)
    }

    pub fn dot(&self, other: &Profile) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Raw fields of a finite-player game; validated by [`FiniteGame::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParts {
    pub weights: Vec<f64>,
    pub action_sets: Vec<PolytopeSet>,
    /// Per-player representative parameters `s_i = (a_i, b_u_i)`.
    pub params: Vec<Vec<f64>>,
    pub cost: CostFamily,
    pub constraint: Option<PolytopeSet>,
    pub provenance: Option<Partition>,
}

/// One element `G^nu(A^nu)` of an atomic approximating sequence. Player `i`
/// has cost `mu_i f(x_i / mu_i, X; s_i)` on `x_i in X_i`, subject to
/// `sum_i x_i in A^nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameParts", into = "GameParts")]
pub struct FiniteGame {
    parts: GameParts,
}

impl TryFrom<GameParts> for FiniteGame {
    type Error = Error;

    fn try_from(parts: GameParts) -> Result<Self> {
        FiniteGame::new(parts)
    }
}

impl From<FiniteGame> for GameParts {
    fn from(g: FiniteGame) -> Self {
        g.parts
    }
}

impl FiniteGame {
    pub fn new(parts: GameParts) -> Result<Self> {
        let n = parts.weights.len();
        let t = parts.cost.dim();
        if n == 0 {
            return Err(Error::InvalidSpec("a finite game needs at least one player".into()));
        }
        if parts.action_sets.len() != n || parts.params.len() != n {
            return Err(Error::DimensionMismatch {
                what: "per-player data",
                expected: n,
                got: parts.action_sets.len().min(parts.params.len()),
            });
        }
        if parts.weights.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidSpec("player weights must be > 0".into()));
        }
        let total: f64 = parts.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("player weights sum to {total}, expected 1")));
        }
        for (i, (set, s)) in parts.action_sets.iter().zip(&parts.params).enumerate() {
            if set.dim() != t {
                return Err(Error::DimensionMismatch {
                    what: "player action set",
                    expected: t,
                    got: set.dim(),
                });
            }
            if s.len() != t + 1 {
                return Err(Error::InvalidSpec(format!(
                    "player {i}: parameter vector must have length {}",
                    t + 1
                )));
            }
        }
        if let Some(a) = &parts.constraint {
            if a.dim() != t {
                return Err(Error::DimensionMismatch {
                    what: "aggregate constraint",
                    expected: t,
                    got: a.dim(),
                });
            }
        }
        if let Some(p) = &parts.provenance {
            if p.cells.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "provenance cells",
                    expected: n,
                    got: p.cells.len(),
                });
            }
        }
        let game = FiniteGame { parts };
        if game.parts.constraint.is_some() {
            // certify X(A) is nonempty
            let y = Profile::zeros(n, t);
            crate::geometry::project_coupled(&game, &y).map_err(|e| match e {
                Error::ProjectionNotConverged { gap, .. } => {
                    Error::EmptySet(format!("coupled set X(A) looks empty (Dykstra gap {gap:.3e})"))
                }
                other => other,
            })?;
        }
        Ok(game)
    }

    pub fn parts(&self) -> &GameParts {
        &self.parts
    }

    pub fn players(&self) -> usize {
        self.parts.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.parts.cost.dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.parts.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.parts.weights[i]
    }

    pub fn max_weight(&self) -> f64 {
        self.parts.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.parts.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn action_set(&self, i: usize) -> &PolytopeSet {
        &self.parts.action_sets[i]
    }

    pub fn params(&self, i: usize) -> &[f64] {
        &self.parts.params[i]
    }

    pub fn cost(&self) -> &CostFamily {
        &self.parts.cost
    }

    pub fn constraint(&self) -> Option<&PolytopeSet> {
        self.parts.constraint.as_ref()
    }

    pub fn provenance(&self) -> Option<&Partition> {
        self.parts.provenance.as_ref()
    }

    fn check_profile(&self, x: &Profile) -> Result<()> {
        if x.players() != self.players() {
            return Err(Error::DimensionMismatch {
                what: "profile players",
                expected: self.players(),
                got: x.players(),
            });
        }
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "profile dimension",
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn check_feasible(&self, x: &Profile) -> Result<()> {
        for j in 0..self.players() {
            if let Some((row, v)) = self.action_set(j).max_violation(x.player(j)) {
                if v > FEAS_TOL {
                    return Err(Error::Infeasible {
                        player: j,
                        row,
                        violation: v,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.players() {
            return Err(Error::InvalidArgument(format!(
                "player index {i} out of range ({} players)",
                self.players()
            )));
        }
        Ok(())
    }

    /// `f_i(x_i, X) = mu_i f(x_i / mu_i, X; s_i)`.
    pub fn eval_cost(&self, i: usize, x: &Profile) -> Result<f64> {
        self.check_player(i)?;
        self.check_profile(x)?;
        self.check_feasible(x)?;
        let mu = self.weight(i);
        let agg = x.aggregate();
        let z: Vec<f64> = x.player(i).iter().map(|v| v / mu).collect();
        Ok(mu * self.cost().cost(&z, &agg, self.params(i)))
    }

    /// Own-action gradient of player `i` under `mode`.
    pub fn grad_own(&self, i: usize, x: &Profile, mode: Mode) -> Result<Vec<f64>> {
        self.check_player(i)?;
        self.check_profile(x)?;
        Ok(self.player_gradient(i, x.player(i), &x.aggregate(), mode))
    }

    pub(crate) fn player_gradient(&self, i: usize, xi: &[f64], agg: &[f64], mode: Mode) -> Vec<f64> {
        let mu = self.weight(i);
        let z: Vec<f64> = xi.iter().map(|v| v / mu).collect();
        let mut g = self.cost().grad_own(&z, agg, self.params(i));
        if mode == Mode::Vne {
            for (gk, ak) in g.iter_mut().zip(self.cost().price_adjoint(xi)) {
                *gk += ak;
            }
        }
        g
    }

    /// Stacked operator `G(x) = (grad_own(i, x))_i`.
    pub fn operator(&self, x: &Profile, mode: Mode) -> Profile {
        let agg = x.aggregate();
        let mut out = Profile::zeros(self.players(), self.dim());
        for i in 0..self.players() {
            let g = self.player_gradient(i, x.player(i), &agg, mode);
            out.player_mut(i).copy_from_slice(&g);
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
