#![allow(dead_code)]

use aggsolve_core::game::{CostFamily, FiniteGame, GameParts, Profile};
use aggsolve_core::polytope::PolytopeSet;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// `D = L L^T + S + I/2` with `S` skew: the symmetric part is positive definite.
pub fn random_cost(rng: &mut impl Rng, t: usize) -> CostFamily {
    let l = DMatrix::from_fn(t, t, |_, _| rng.gen_range(-1.0..1.0));
    let s = DMatrix::from_fn(t, t, |_, _| rng.gen_range(-0.5..0.5));
    let d = &l * l.transpose() + (&s - s.transpose()) + DMatrix::identity(t, t) * 0.5;
    let offset = DVector::from_fn(t, |_, _| rng.gen_range(-0.5..0.5));
    CostFamily::new(d, offset).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Random box game; `cap` scales an aggregate upper bound relative to the
/// sum of the players' upper bounds.
pub fn random_box_game(rng: &mut impl Rng, n: usize, t: usize, cap: Option<f64>) -> FiniteGame {
    let weights = random_weights(rng, n);
    let mut uppers = Vec::new();
    let action_sets = weights
        .iter()
        .map(|w| {
            let lo: Vec<f64> = (0..t).map(|_| rng.gen_range(-0.3..0.0) * w).collect();
            let hi: Vec<f64> = (0..t).map(|_| rng.gen_range(0.5..2.0) * w).collect();
            uppers.push(hi.clone());
            PolytopeSet::boxed(&lo, &hi).unwrap()
        })
        .collect();
    let params = (0..n)
        .map(|_| {
            let mut s = vec![rng.gen_range(0.5..2.0)];
            s.extend((0..t).map(|_| rng.gen_range(0.5..4.0)));
            s
        })
        .collect();
    let constraint = cap.map(|c| {
        let hi: Vec<f64> = (0..t).map(|k| c * uppers.iter().map(|u| u[k]).sum::<f64>()).collect();
        PolytopeSet::boxed(&vec![0.0; t], &hi).unwrap()
    });
    FiniteGame::new(GameParts {
        weights,
        action_sets,
        params,
        cost: random_cost(rng, t),
        constraint,
        provenance: None,
    })
    .unwrap()
}

pub fn flat_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Euclidean projection onto boxes coupled by an aggregate box separates by
/// coordinate: `x_ik = clip(y_ik - lam_k)`, with `lam_k` found by bisection.
pub fn brute_projection(game: &FiniteGame, y: &Profile) -> Profile {
    let (n, t) = (game.players(), game.dim());
    let bounds: Vec<_> = (0..n).map(|i| game.action_set(i).box_bounds().unwrap()).collect();
    let (alo, ahi) = game.constraint().unwrap().box_bounds().unwrap();
    let mut x = Profile::zeros(n, t);
    for k in 0..t {
        let at = |lam: f64| -> Vec<f64> {
            (0..n)
                .map(|i| (y.player(i)[k] - lam).clamp(bounds[i].0[k], bounds[i].1[k]))
                .collect()
        };
        let sum = |lam: f64| at(lam).iter().sum::<f64>();
        let target = if sum(0.0) > ahi[k] {
            ahi[k]
        } else if sum(0.0) < alo[k] {
            alo[k]
        } else {
            f64::NAN
        };
        let lam = if target.is_nan() {
            0.0
        } else {
            let (mut lo, mut hi) = (-1e3, 1e3);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sum(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for (i, v) in at(lam).into_iter().enumerate() {
            x.player_mut(i)[k] = v;
        }
    }
    x
}
