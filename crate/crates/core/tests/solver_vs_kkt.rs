mod common;

use aggsolve_core::game::Mode;
use aggsolve_core::geometry::nu_norm;
use aggsolve_core::oracle::kkt_brute;
use aggsolve_core::solver::{solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn solver_agrees_with_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut binding = 0;
    for k in 0..24 {
        let (n, t) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let cap = (k % 2 == 0).then(|| rng.gen_range(0.1..0.3));
        let game = common::random_box_game(&mut rng, n, t, cap);
        let mode = if k % 4 < 2 { Mode::Vne } else { Mode::Pseudo };
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default().with_mode(mode)
        };
        let res = solve(&game, &cfg).unwrap();
        assert!(res.converged, "instance {k}: residual {}", res.residual);
        let exact = kkt_brute(&game, mode).unwrap();
        let d = nu_norm(&res.profile.sub(&exact), game.weights());
        assert!(d <= 1e-6, "instance {k}: nu-distance {d}");
        if let Some(a) = game.constraint() {
            let (_, hi) = a.box_bounds().unwrap();
            if exact.aggregate().iter().zip(hi).any(|(x, h)| (x - h).abs() < 1e-9) {
                binding += 1;
            }
        }
    }
    assert!(binding >= 6, "only {binding} instances bind the cap");
}
