//! Extragradient solver for the variational inequality of a finite game.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{FiniteGame, Mode, Profile};
use crate::geometry::{nu_norm, project_coupled_with, DEFAULT_MAX_PROJ_ITERS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: Step,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: Mode,
    pub seed: u64,
    pub max_proj_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: Step::Adaptive,
            tol: 1e-8,
            max_iters: 100_000,
            mode: Mode::Vne,
            seed: 0,
            max_proj_iters: DEFAULT_MAX_PROJ_ITERS,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: Profile,
    pub aggregate: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub final_step: f64,
}

/// Natural residual `||x - P(x - G(x))||_nu` with unit reference step.
pub fn residual(game: &FiniteGame, x: &Profile, mode: Mode) -> Result<f64> {
    residual_with(game, x, mode, DEFAULT_MAX_PROJ_ITERS)
}

fn residual_with(game: &FiniteGame, x: &Profile, mode: Mode, max_proj: usize) -> Result<f64> {
    let g = game.operator(x, mode);
    let p = project_coupled_with(game, &x.add_scaled(-1.0, &g), max_proj)?;
    Ok(nu_norm(&x.sub(&p), game.weights()))
}

/// Deterministic start: the projection of the zero profile.
pub fn initial_point(game: &FiniteGame, cfg: &SolverConfig) -> Result<Profile> {
    project_coupled_with(game, &Profile::zeros(game.players(), game.dim()), cfg.max_proj_iters)
}

pub fn solve(game: &FiniteGame, cfg: &SolverConfig) -> Result<EquilibriumResult> {
    let x0 = initial_point(game, cfg)?;
    solve_from(game, cfg, x0)
}

fn initial_step(game: &FiniteGame) -> f64 {
    let a_max = (0..game.players()).map(|i| game.params(i)[0].abs()).fold(0.0, f64::max);
    1.0 / (1.0 + game.cost().price_norm() + a_max / game.min_weight())
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }

    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Clock
    }

    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// Extragradient from a given feasible start.
pub fn solve_from(game: &FiniteGame, cfg: &SolverConfig, x0: Profile) -> Result<EquilibriumResult> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    let clock = Clock::start();
    let mode = cfg.mode;
    let proj = |y: &Profile| project_coupled_with(game, y, cfg.max_proj_iters);
    let (mut tau, adaptive) = match cfg.step {
        Step::Adaptive => (initial_step(game), true),
        Step::Fixed(t) if t > 0.0 => (t, false),
        Step::Fixed(t) => return Err(Error::InvalidArgument(format!("step must be > 0, got {t}"))),
    };

    let mut x = x0;
    let mut gx = game.operator(&x, mode);
    if !gx.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let finish = |x: Profile, residual: f64, iterations: usize, converged: bool, tau: f64| EquilibriumResult {
        aggregate: x.aggregate(),
        profile: x,
        residual,
        iterations,
        converged,
        wall_ms: clock.elapsed_ms(),
        final_step: tau,
    };
    if gx.norm() == 0.0 {
        return Ok(finish(x, 0.0, 0, true, tau));
    }

    let mut best = (f64::INFINITY, x.clone());
    let mut since_check = usize::MAX;
    for iter in 1..=cfg.max_iters {
        // one accepted extragradient step
        let (y, gy) = loop {
            let y = proj(&x.add_scaled(-tau, &gx))?;
            let gy = game.operator(&y, mode);
            if !gy.is_finite() {
                return Err(Error::NonFinite(iter));
            }
            if !adaptive {
                break (y, gy);
            }
            let dx = x.sub(&y);
            let dg = gx.sub(&gy);
            let dxn = dx.norm();
            if dg.dot(&dx) > dxn * dxn / (2.0 * tau) || tau * dg.norm() > 0.9 * dxn {
                tau *= 0.5;
                if tau < 1e-300 {
                    return Err(Error::NonFinite(iter));
                }
                continue;
            }
            break (y, gy);
        };
        let proxy = nu_norm(&x.sub(&y), game.weights()) / tau;
        x = proj(&x.add_scaled(-tau, &gy))?;
        gx = game.operator(&x, mode);
        if !gx.is_finite() {
            return Err(Error::NonFinite(iter));
        }
        if adaptive {
            tau *= 1.05;
        }
        since_check = since_check.saturating_add(1);
        if proxy <= 10.0 * cfg.tol || since_check >= 50 || iter == cfg.max_iters {
            since_check = 0;
            let r = residual_with(game, &x, mode, cfg.max_proj_iters)?;
            if r < best.0 {
                best = (r, x.clone());
            }
            if r <= cfg.tol {
                return Ok(finish(x, r, iter, true, tau));
            }
        }
    }
    log::warn!(
        "extragradient stopped after {} iterations with residual {:.3e}",
        cfg.max_iters,
        best.0
    );
    Ok(finish(best.1, best.0, cfg.max_iters, false, tau))
}

/// Random feasible profile: uniform in the players' bounding boxes, then projected.
pub fn random_feasible(game: &FiniteGame, rng: &mut impl Rng, max_proj_iters: usize) -> Result<Profile> {
    let mut y = Profile::zeros(game.players(), game.dim());
    for i in 0..game.players() {
        let r = game.action_set(i).radius()?;
        for v in y.player_mut(i) {
            *v = rng.gen_range(-r..=r);
        }
    }
    project_coupled_with(game, &y, max_proj_iters)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub starts: usize,
    pub profile_spread: f64,
    pub aggregate_spread: f64,
    pub max_residual: f64,
    pub all_converged: bool,
}

/// Solve from several random starts and report the spread of the solutions.
pub fn check_unique(game: &FiniteGame, cfg: &SolverConfig, n_starts: usize) -> Result<UniquenessReport> {
    if n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::with_capacity(n_starts);
    for _ in 0..n_starts {
        let x0 = random_feasible(game, &mut rng, cfg.max_proj_iters)?;
        results.push(solve_from(game, cfg, x0)?);
    }
    let mut profile_spread: f64 = 0.0;
    let mut aggregate_spread: f64 = 0.0;
    for (k, a) in results.iter().enumerate() {
        for b in &results[k + 1..] {
            profile_spread = profile_spread.max(nu_norm(&a.profile.sub(&b.profile), game.weights()));
            let d: f64 = a
                .aggregate
                .iter()
                .zip(&b.aggregate)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            aggregate_spread = aggregate_spread.max(d);
        }
    }
    Ok(UniquenessReport {
        starts: n_starts,
        profile_spread,
        aggregate_spread,
        max_residual: results.iter().map(|r| r.residual).fold(0.0, f64::max),
        all_converged: results.iter().all(|r| r.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CostFamily, GameParts};
    use crate::polytope::PolytopeSet;

    fn lq1(players: usize, cap: Option<f64>) -> FiniteGame {
        let mu = 1.0 / players as f64;
        FiniteGame::new(GameParts {
            weights: vec![mu; players],
            action_sets: vec![PolytopeSet::boxed(&[0.0], &[10.0 * mu]).unwrap(); players],
            params: vec![vec![1.0, 2.0]; players],
            cost: CostFamily::scalar(1.0, 0.0),
            constraint: cap.map(|c| PolytopeSet::boxed(&[0.0], &[c]).unwrap()),
            provenance: None,
        })
        .unwrap()
    }

    #[test]
    fn lq1_two_players_vne() {
        let r = solve(&lq1(2, None), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.aggregate[0] - 0.8).abs() < 1e-7);
        assert!((r.profile.player(0)[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn lq1_two_players_pseudo() {
        let cfg = SolverConfig::default().with_mode(Mode::Pseudo);
        let r = solve(&lq1(2, None), &cfg).unwrap();
        assert!((r.aggregate[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn lq1_capped_binds() {
        let r = solve(&lq1(2, Some(0.5)), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.profile.player(0)[0] - 0.25).abs() < 1e-7);
        assert!((r.aggregate[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn residual_at_solution_and_origin() {
        let g = lq1(2, None);
        let x = Profile::from_rows(vec![vec![0.4], vec![0.4]]).unwrap();
        assert!(residual(&g, &x, Mode::Vne).unwrap() <= 1e-8);
        // G(0) = (-2, -2); the box caps at 5 do not bind
        let r0 = residual(&g, &Profile::zeros(2, 1), Mode::Vne).unwrap();
        assert!((r0 - (8.0f64 + 8.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn null_operator_returns_start() {
        let g = FiniteGame::new(GameParts {
            weights: vec![1.0],
            action_sets: vec![PolytopeSet::boxed(&[0.0], &[1.0]).unwrap()],
            params: vec![vec![0.0, 0.0]],
            cost: CostFamily::scalar(0.0, 0.0),
            constraint: None,
            provenance: None,
        })
        .unwrap();
        let r = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!((r.iterations, r.residual), (0, 0.0));
        assert!(r.converged);
    }

    #[test]
    fn uniqueness_spreads() {
        let g = lq1(4, None);
        let rep = check_unique(&g, &SolverConfig::default(), 5).unwrap();
        assert!(rep.aggregate_spread <= 1e-7, "{rep:?}");
        assert!(rep.profile_spread <= 1e-7, "{rep:?}");
        let one = check_unique(&g, &SolverConfig::default(), 1).unwrap();
        assert_eq!(one.aggregate_spread, 0.0);
    }

    #[test]
    fn nan_operator_is_an_error() {
        let g = FiniteGame::new(GameParts {
            weights: vec![1.0],
            action_sets: vec![PolytopeSet::boxed(&[0.0], &[1.0]).unwrap()],
            params: vec![vec![1.0, f64::NAN]],
            cost: CostFamily::scalar(1.0, 0.0),
            constraint: None,
            provenance: None,
        })
        .unwrap();
        assert!(matches!(solve(&g, &SolverConfig::default()), Err(Error::NonFinite(_))));
    }
}
