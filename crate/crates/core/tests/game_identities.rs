mod common;

use aggsolve_core::game::{Mode, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interior_profile(rng: &mut ChaCha8Rng, game: &aggsolve_core::game::FiniteGame) -> Profile {
    let rows = (0..game.players())
        .map(|i| {
            let (lo, hi) = game.action_set(i).box_bounds().unwrap();
            lo.iter()
                .zip(hi)
                .map(|(l, h)| l + (h - l) * rng.gen_range(0.2..0.8))
                .collect()
        })
        .collect();
    Profile::from_rows(rows).unwrap()
}

#[test]
fn vne_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..30 {
        let (n, t) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
        let game = common::random_box_game(&mut rng, n, t, None);
        let x = interior_profile(&mut rng, &game);
        for i in 0..n {
            let g = game.grad_own(i, &x, Mode::Vne).unwrap();
            for k in 0..t {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus.player_mut(i)[k] += h;
                minus.player_mut(i)[k] -= h;
                let fd = (game.eval_cost(i, &plus).unwrap() - game.eval_cost(i, &minus).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()), "fd {fd} vs {}", g[k]);
            }
        }
    }
}

#[test]
fn pseudo_gradient_freezes_the_aggregate() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-6;
    for _ in 0..30 {
        let (n, t) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
        let game = common::random_box_game(&mut rng, n, t, None);
        let x = interior_profile(&mut rng, &game);
        let agg = x.aggregate();
        for i in 0..n {
            let mu = game.weight(i);
            let f = |xi: &[f64]| {
                let z: Vec<f64> = xi.iter().map(|v| v / mu).collect();
                mu * game.cost().cost(&z, &agg, game.params(i))
            };
            let g = game.grad_own(i, &x, Mode::Pseudo).unwrap();
            for k in 0..t {
                let mut p = x.player(i).to_vec();
                let mut m = p.clone();
                p[k] += h;
                m[k] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()));
            }
        }
    }
}

#[test]
fn finite_cost_is_scaled_nonatomic_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let (n, t) = (rng.gen_range(1..=4), rng.gen_range(1..=3));
        let game = common::random_box_game(&mut rng, n, t, None);
        let x = interior_profile(&mut rng, &game);
        let agg = x.aggregate();
        for i in 0..n {
            let mu = game.weight(i);
            let z: Vec<f64> = x.player(i).iter().map(|v| v / mu).collect();
            let want = mu * game.cost().cost(&z, &agg, game.params(i));
            let got = game.eval_cost(i, &x).unwrap();
            assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn vne_and_pseudo_differ_by_adjoint_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let game = common::random_box_game(&mut rng, 3, 2, None);
    let x = interior_profile(&mut rng, &game);
    for i in 0..3 {
        let v = game.grad_own(i, &x, Mode::Vne).unwrap();
        let p = game.grad_own(i, &x, Mode::Pseudo).unwrap();
        let adj = game.cost().price_adjoint(x.player(i));
        for k in 0..2 {
            assert!((v[k] - p[k] - adj[k]).abs() < 1e-14);
        }
    }
}
