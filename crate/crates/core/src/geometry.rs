//! Projections, Hausdorff distances, the weighted profile norm and the
//! embeddings between finite profiles and step profiles on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::aas::Partition;
use crate::error::{Error, Result};
use crate::game::{FiniteGame, PiecewiseAffine, Profile};
use crate::polytope::{norm, PolytopeSet, SetKind};

pub const DEFAULT_MAX_PROJ_ITERS: usize = 10_000;
pub const DYKSTRA_TOL: f64 = 1e-10;
pub const COUPLED_FEAS_TOL: f64 = 1e-8;

pub fn project_polytope(set: &PolytopeSet, y: &[f64]) -> Result<Vec<f64>> {
    set.project(y)
}

/// Euclidean projection onto `{x : x_i in X_i, sum_i x_i in A}`.
pub fn project_coupled(game: &FiniteGame, y: &Profile) -> Result<Profile> {
    project_coupled_with(game, y, DEFAULT_MAX_PROJ_ITERS)
}

pub fn project_coupled_with(game: &FiniteGame, y: &Profile, max_iters: usize) -> Result<Profile> {
    if y.players() != game.players() || y.dim() != game.dim() {
        return Err(Error::DimensionMismatch {
            what: "coupled projection",
            expected: game.players() * game.dim(),
            got: y.players() * y.dim(),
        });
    }
    let first = project_players(game, y)?;
    let Some(a) = game.constraint() else {
        return Ok(first);
    };
    if a.contains(&first.aggregate(), 0.0) {
        return Ok(first);
    }

    let n = game.players() as f64;
    let mut x = y.clone();
    let mut p = Profile::zeros(game.players(), game.dim());
    let mut q = p.clone();
    let mut gap = f64::INFINITY;
    for _ in 0..max_iters {
        let u = project_players(game, &x.add_scaled(1.0, &p))?;
        let p_next = x.add_scaled(1.0, &p).sub(&u);
        let v = u.add_scaled(1.0, &q);
        let agg = v.aggregate();
        let shift: Vec<f64> = a.project(&agg)?.iter().zip(&agg).map(|(pa, s)| (pa - s) / n).collect();
        let mut next = v.clone();
        for i in 0..next.players() {
            next.player_mut(i).iter_mut().zip(&shift).for_each(|(xi, s)| *xi += s);
        }
        q = v.sub(&next);
        // x can stall for several steps while the corrections still move
        gap = next.sub(&x).norm().max(p_next.sub(&p).norm());
        x = next;
        p = p_next;
        if gap < DYKSTRA_TOL && players_violation(game, &x) <= COUPLED_FEAS_TOL {
            return Ok(x);
        }
    }
    Err(Error::ProjectionNotConverged { iters: max_iters, gap })
}

fn project_players(game: &FiniteGame, y: &Profile) -> Result<Profile> {
    let mut out = y.clone();
    for i in 0..game.players() {
        let z = game.action_set(i).project(y.player(i))?;
        out.player_mut(i).copy_from_slice(&z);
    }
    Ok(out)
}

fn players_violation(game: &FiniteGame, x: &Profile) -> f64 {
    (0..game.players())
        .filter_map(|i| game.action_set(i).max_violation(x.player(i)).map(|v| v.1))
        .fold(0.0, f64::max)
}

/// Largest constraint violation of a profile in the coupled set.
pub fn coupled_violation(game: &FiniteGame, x: &Profile) -> f64 {
    let mut v = players_violation(game, x);
    if let Some(a) = game.constraint() {
        if let Some((_, w)) = a.max_violation(&x.aggregate()) {
            v = v.max(w);
        }
    }
    v
}

/// Hausdorff distance between two polytopes of the same dimension.
pub fn hausdorff(p: &PolytopeSet, q: &PolytopeSet) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            what: "hausdorff operands",
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if let (SetKind::Box { lower: pl, upper: pu }, SetKind::Box { lower: ql, upper: qu }) = (p.kind(), q.kind()) {
        return Ok(box_directed(pl, pu, ql, qu).max(box_directed(ql, qu, pl, pu)));
    }
    Ok(directed(p, q)?.max(directed(q, p)?))
}

// The farthest point of a box from another box is a vertex, and the squared
// distance separates by coordinate.
fn box_directed(pl: &[f64], pu: &[f64], ql: &[f64], qu: &[f64]) -> f64 {
    let gap = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    (0..pl.len())
        .map(|k| gap(pl[k], ql[k], qu[k]).max(gap(pu[k], ql[k], qu[k])).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn directed(p: &PolytopeSet, q: &PolytopeSet) -> Result<f64> {
    let mut best: f64 = 0.0;
    for v in p.vertices()? {
        let w = q.project(&v)?;
        best = best.max(norm(&v.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>()));
    }
    Ok(best)
}

/// `||x||_nu = (sum_i ||x_i||^2 / mu_i)^(1/2)`.
pub fn nu_norm(x: &Profile, weights: &[f64]) -> f64 {
    (0..x.players())
        .map(|i| x.player(i).iter().map(|v| v * v).sum::<f64>() / weights[i])
        .sum::<f64>()
        .sqrt()
}

/// Piecewise-constant `[0, 1] -> R^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    breaks: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl StepProfile {
    pub fn new(breaks: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidArgument(
                "step profile needs one more breakpoint than values".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "step profile breakpoints must increase strictly".into(),
            ));
        }
        Ok(StepProfile { breaks, values })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn eval(&self, theta: f64) -> &[f64] {
        let k = self.breaks[1..]
            .iter()
            .position(|&b| theta < b)
            .unwrap_or(self.values.len() - 1);
        &self.values[k]
    }

    pub fn l2_norm(&self) -> f64 {
        self.breaks
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[1] - w[0]) * v.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Profiles whose integral over a `theta` interval is available in closed form.
pub trait CellIntegrable {
    fn integral(&self, start: f64, end: f64) -> Vec<f64>;
}

impl CellIntegrable for PiecewiseAffine {
    fn integral(&self, start: f64, end: f64) -> Vec<f64> {
        PiecewiseAffine::integral(self, start, end)
    }
}

impl CellIntegrable for StepProfile {
    fn integral(&self, start: f64, end: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.values[0].len()];
        for (w, v) in self.breaks.windows(2).zip(&self.values) {
            let len = end.min(w[1]) - start.max(w[0]);
            if len > 0.0 {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += len * x);
            }
        }
        acc
    }
}

/// Step profile with value `x_i / mu_i` on the cell of player `i`.
pub fn psi(game: &FiniteGame, x: &Profile) -> Result<StepProfile> {
    let partition = game.provenance().ok_or(Error::MissingProvenance)?;
    let mut pieces: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for (i, cell) in partition.cells.iter().enumerate() {
        let v: Vec<f64> = x.player(i).iter().map(|c| c / game.weight(i)).collect();
        for iv in &cell.intervals {
            pieces.push((iv.start, iv.end, v.clone()));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut breaks = vec![pieces[0].0];
    breaks.extend(pieces.iter().map(|p| p.1));
    StepProfile::new(breaks, pieces.into_iter().map(|p| p.2).collect())
}

/// Cell integrals `(int_{Theta_i} x_theta dtheta)_i`.
pub fn psi_bar(partition: &Partition, x: &impl CellIntegrable) -> Result<Profile> {
    let rows = partition
        .cells
        .iter()
        .map(|cell| {
            let mut acc: Option<Vec<f64>> = None;
            for iv in &cell.intervals {
                let part = x.integral(iv.start, iv.end);
                match acc.as_mut() {
                    Some(a) => a.iter_mut().zip(part).for_each(|(s, v)| *s += v),
                    None => acc = Some(part),
                }
            }
            acc.unwrap_or_default()
        })
        .collect();
    Profile::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aas::build_uniform;
    use crate::game::{CostFamily, GameParts, Segment};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn two_box_game(constraint: Option<PolytopeSet>) -> FiniteGame {
        FiniteGame::new(GameParts {
            weights: vec![0.5, 0.5],
            action_sets: vec![PolytopeSet::boxed(&[0.0], &[1.0]).unwrap(); 2],
            params: vec![vec![1.0, 1.0]; 2],
            cost: CostFamily::scalar(1.0, 0.0),
            constraint,
            provenance: None,
        })
        .unwrap()
    }

    #[test]
    fn box_clamp_and_idempotence() {
        let b = PolytopeSet::boxed(&[0.0], &[1.0]).unwrap();
        assert_eq!(project_polytope(&b, &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(project_polytope(&b, &[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn simplex_projection() {
        let s = PolytopeSet::simplex(2, 1.0).unwrap();
        let p = project_polytope(&s, &[1.0, 1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coupled_shift_example() {
        let g = two_box_game(Some(PolytopeSet::boxed(&[0.0], &[1.0]).unwrap()));
        let y = Profile::from_rows(vec![vec![1.0], vec![1.0]]).unwrap();
        let x = project_coupled(&g, &y).unwrap();
        assert!((x.player(0)[0] - 0.5).abs() < 1e-9);
        assert!((x.player(1)[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn coupled_idempotent_and_slack() {
        let g = two_box_game(Some(PolytopeSet::boxed(&[0.0], &[1.0]).unwrap()));
        let y = Profile::from_rows(vec![vec![0.2], vec![0.3]]).unwrap();
        assert_eq!(project_coupled(&g, &y).unwrap(), y);
        let loose = two_box_game(Some(PolytopeSet::boxed(&[-5.0], &[5.0]).unwrap()));
        let y = Profile::from_rows(vec![vec![1.5], vec![-0.5]]).unwrap();
        assert_eq!(project_coupled(&loose, &y).unwrap().rows(), vec![vec![1.0], vec![0.0]]);
    }

    #[test]
    fn hausdorff_examples() {
        let a = PolytopeSet::boxed(&[0.0], &[1.0]).unwrap();
        let b = PolytopeSet::boxed(&[0.0], &[2.0]).unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), 1.0);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let s = PolytopeSet::simplex(2, 1.0).unwrap();
        let shifted = PolytopeSet::new(s.matrix().clone(), DVector::from_vec(vec![-0.3, 0.0, 1.3, -1.3])).unwrap();
        assert!((hausdorff(&s, &shifted).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn box_hausdorff_matches_vertex_route() {
        let p = PolytopeSet::boxed(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let q = PolytopeSet::boxed(&[0.5, -1.0], &[3.0, 1.0]).unwrap();
        let exact = hausdorff(&p, &q).unwrap();
        let via = directed(&p, &q).unwrap().max(directed(&q, &p).unwrap());
        assert!((exact - via).abs() < 1e-12);
    }

    #[test]
    fn nu_norm_examples() {
        let x = Profile::from_rows(vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(nu_norm(&x, &[0.5, 0.5]), 2.0);
        assert_eq!(nu_norm(&Profile::zeros(2, 1), &[0.5, 0.5]), 0.0);
    }

    fn lq_spec(rhs: PiecewiseAffine) -> crate::game::NonatomicGameSpec {
        crate::game::NonatomicGameSpec::new(crate::game::SpecParts {
            name: "t".into(),
            action_matrix: DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            rhs,
            params: PiecewiseAffine::constant(vec![1.0, 2.0]),
            cost: CostFamily::scalar(1.0, 0.0),
            aggregate: None,
            witness: None,
            reference_aggregate: None,
            declared: Default::default(),
        })
        .unwrap()
    }

    #[test]
    fn psi_scales_cells() {
        let g = build_uniform(&lq_spec(PiecewiseAffine::constant(vec![10.0, 0.0])), 2).unwrap();
        let x = Profile::from_rows(vec![vec![1.0], vec![3.0]]).unwrap();
        let s = psi(&g, &x).unwrap();
        assert_eq!(s.breaks(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.values(), &[vec![2.0], vec![6.0]]);
        assert!((s.l2_norm() - nu_norm(&x, g.weights())).abs() < 1e-12);
    }

    #[test]
    fn psi_bar_examples() {
        let g = build_uniform(&lq_spec(PiecewiseAffine::constant(vec![10.0, 0.0])), 2).unwrap();
        let part = g.provenance().unwrap();
        let ramp = PiecewiseAffine {
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                left: vec![0.0],
                right: vec![1.0],
            }],
        };
        assert_eq!(psi_bar(part, &ramp).unwrap().rows(), vec![vec![0.125], vec![0.375]]);
        let c = PiecewiseAffine::constant(vec![4.0]);
        assert_eq!(psi_bar(part, &c).unwrap().rows(), vec![vec![2.0], vec![2.0]]);
        let x = Profile::from_rows(vec![vec![0.7], vec![-1.1]]).unwrap();
        let back = psi_bar(part, &psi(&g, &x).unwrap()).unwrap();
        assert!(back.sub(&x).norm() < 1e-15);
    }

    #[test]
    fn psi_needs_provenance() {
        let g = two_box_game(None);
        assert!(matches!(psi(&g, &Profile::zeros(2, 1)), Err(Error::MissingProvenance)));
    }

    proptest! {
        #[test]
        fn psi_is_linear_isometry(v in prop::collection::vec(-5.0f64..5.0, 6), w in prop::collection::vec(-5.0f64..5.0, 6)) {
            let spec = lq_spec(PiecewiseAffine::constant(vec![10.0, 0.0]));
            let g = build_uniform(&spec, 6).unwrap();
            let x = Profile::from_flat(6, 1, v).unwrap();
            let y = Profile::from_flat(6, 1, w).unwrap();
            let sx = psi(&g, &x).unwrap();
            prop_assert!((sx.l2_norm() - nu_norm(&x, g.weights())).abs() <= 1e-12 * (1.0 + sx.l2_norm()));
            let sum = psi(&g, &x.add_scaled(1.0, &y)).unwrap();
            let sy = psi(&g, &y).unwrap();
            for k in 0..6 {
                prop_assert!((sum.values()[k][0] - sx.values()[k][0] - sy.values()[k][0]).abs() <= 1e-12);
            }
        }

        #[test]
        fn box_projection_nonexpansive(a in prop::collection::vec(-3.0f64..3.0, 2), b in prop::collection::vec(-3.0f64..3.0, 2)) {
            let s = PolytopeSet::boxed(&[0.0, -1.0], &[1.0, 2.0]).unwrap();
            let pa = s.project(&a).unwrap();
            let pb = s.project(&b).unwrap();
            let d = |u: &[f64], v: &[f64]| norm(&u.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>());
            prop_assert!(d(&pa, &pb) <= d(&a, &b) + 1e-12);
        }
    }
}
