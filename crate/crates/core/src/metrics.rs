//! Approximation metrics of a built game, model constants, error bounds and
//! stochastic monotonicity certificates.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aas::uniform_partition;
use crate::error::{Error, Result};
use crate::game::{dot, FiniteGame, Mode, NonatomicGameSpec, Profile};
use crate::geometry::{hausdorff, nu_norm};
use crate::polytope::{combinations, norm, PolytopeSet};
use crate::solver::random_feasible;

/// Interior sample points per piece when bounding `M` for non-box families.
const RADIUS_SAMPLES: usize = 16;
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub delta: f64,
    pub lambda: f64,
    pub d_sub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AasMetrics {
    pub delta: f64,
    pub lambda: f64,
    pub d_sub: f64,
    pub d_cap: f64,
    pub cells: Vec<CellMetrics>,
    /// Sensitivity constant in the per-interval slack `C0 * ||b(end) - b(start)|| / 2`
    /// (zero for box families, where endpoints are exact).
    pub slack_constant: f64,
    /// Number of `theta` points at which the set distance was evaluated.
    pub endpoint_evaluations: usize,
    pub constrained: bool,
}

/// Constants that need no interior witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub m: f64,
    pub b_f: f64,
    pub b_g: f64,
    pub l3: f64,
    pub alpha: f64,
    pub beta: f64,
    /// False when `M` was estimated from samples (non-box families).
    pub m_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConstants {
    pub m: f64,
    pub b_f: f64,
    pub b_g: f64,
    pub l3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho: f64,
    pub rho_bar: f64,
    pub k_a: f64,
    /// Reference aggregate used for `rho`.
    pub reference: Vec<f64>,
    /// `d(reference, rbd(S cap A))`.
    pub boundary_distance: f64,
    /// False when `S` is the inner box around the witness aggregate.
    pub aggregate_set_exact: bool,
    pub m_exact: bool,
}

impl GameConstants {
    pub fn regularity(&self) -> Regularity {
        Regularity {
            m: self.m,
            b_f: self.b_f,
            b_g: self.b_g,
            l3: self.l3,
            alpha: self.alpha,
            beta: self.beta,
            m_exact: self.m_exact,
        }
    }
}

/// `M`, `B_f`, `B_g`, `L3`, `alpha`, `beta` from closed forms.
pub fn regularity(spec: &NonatomicGameSpec) -> Result<Regularity> {
    let mut m: f64 = 0.0;
    let mut a_min = f64::INFINITY;
    let mut a_max: f64 = 0.0;
    let mut bu_max: f64 = 0.0;
    let exact = spec.is_box_family();
    for k in 0..spec.pieces() {
        let (s, e) = spec.piece_span(k);
        let samples = if exact { 1 } else { RADIUS_SAMPLES };
        for j in 0..=samples {
            let theta = s + (e - s) * j as f64 / samples as f64;
            m = m.max(spec.action_set(k, theta)?.radius()?);
        }
        for theta in [s, e] {
            let p = spec.params_at(k, theta);
            a_min = a_min.min(p[0]);
            a_max = a_max.max(p[0]);
            bu_max = bu_max.max(norm(&p[1..]));
        }
    }
    if !exact {
        log::info!("{}: M estimated from {RADIUS_SAMPLES} samples per piece", spec.name());
    }
    let cost = spec.cost();
    let dn = cost.price_norm();
    let d_off = norm(cost.price_offset().as_slice());
    Ok(Regularity {
        m,
        b_f: dn * m + d_off + a_max * m + bu_max,
        b_g: dn * m,
        l3: (m * m + 1.0).sqrt(),
        alpha: a_min,
        beta: cost.price_monotonicity(),
        m_exact: exact,
    })
}

/// `rho = eta d / (9 M)`.
pub fn rho_from(eta: f64, m: f64, boundary_distance: f64) -> f64 {
    eta * boundary_distance / (9.0 * m)
}

/// `K_A = (M + 1) / min(rho, rho_bar)`.
pub fn k_a_from(m: f64, rho: f64, rho_bar: f64) -> f64 {
    (m + 1.0) / rho.min(rho_bar)
}

pub fn compute_constants(spec: &NonatomicGameSpec) -> Result<GameConstants> {
    let reg = regularity(spec)?;
    let witness = spec.witness().ok_or(Error::MissingWitness)?;
    let (s, exact) = spec.aggregate_set()?;
    let set = match spec.aggregate_constraint() {
        Some(a) => s.intersect(a)?,
        None => s,
    };
    let centre = witness.profile.integral(0.0, 1.0);
    let reference = spec
        .parts()
        .reference_aggregate
        .clone()
        .unwrap_or_else(|| centre.clone());
    let d_y = set.interior_distance(&reference);
    if !(d_y > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "reference aggregate {reference:?} is not interior to S cap A (distance {d_y:.3e}); \
             set `reference_aggregate`"
        )));
    }
    let rho = rho_from(witness.slack, reg.m, d_y);
    let t = (d_y / (3.0 * reg.m)).min(1.0);
    let z: Vec<f64> = reference
        .iter()
        .zip(&centre)
        .map(|(y, c)| (1.0 - t) * y + t * c)
        .collect();
    let rho_bar = set.interior_distance(&z) / 3.0;
    if !(rho_bar > 0.0) {
        return Err(Error::InvalidSpec(
            "interior witness aggregate lies outside S cap A".into(),
        ));
    }
    Ok(GameConstants {
        m: reg.m,
        b_f: reg.b_f,
        b_g: reg.b_g,
        l3: reg.l3,
        alpha: reg.alpha,
        beta: reg.beta,
        eta: witness.slack,
        rho,
        rho_bar,
        k_a: k_a_from(reg.m, rho, rho_bar),
        reference,
        boundary_distance: d_y,
        aggregate_set_exact: exact,
        m_exact: reg.m_exact,
    })
}

/// `max_J 1 / sigma_min(A_J)` over linearly independent row subsets.
fn hoffman_constant(spec: &NonatomicGameSpec) -> f64 {
    let a = spec.action_matrix();
    let (p, t) = (a.nrows(), a.ncols());
    let mut best: f64 = 0.0;
    for size in 1..=t.min(p) {
        for rows in combinations(p, size) {
            let sub = a.select_rows(&rows);
            let sv = sub.svd(false, false).singular_values;
            let smin = sv.min();
            if smin > 1e-12 * sv.max() {
                best = best.max(1.0 / smin);
            }
        }
    }
    best
}

pub fn compute_metrics(spec: &NonatomicGameSpec, game: &FiniteGame) -> Result<AasMetrics> {
    let partition = game.provenance().ok_or(Error::MissingProvenance)?;
    let reg = regularity(spec)?;
    let c0 = if spec.is_box_family() {
        0.0
    } else {
        hoffman_constant(spec)
    };
    let mut cells = Vec::with_capacity(partition.cells.len());
    let mut evaluations = 0;
    for (i, cell) in partition.cells.iter().enumerate() {
        let rep = PolytopeSet::new(spec.action_matrix().clone(), DVector::from_vec(cell.rhs.clone()))?;
        let mut delta: f64 = 0.0;
        let mut d_sub: f64 = 0.0;
        for iv in &cell.intervals {
            for theta in [iv.start, iv.end] {
                delta = delta.max(hausdorff(&spec.action_set(iv.piece, theta)?, &rep)?);
                let s = spec.params_at(iv.piece, theta);
                let diff: Vec<f64> = s.iter().zip(&cell.params).map(|(a, b)| a - b).collect();
                d_sub = d_sub.max(reg.l3 * norm(&diff));
                evaluations += 1;
            }
            if c0 > 0.0 {
                let bs = spec.rhs_at(iv.piece, iv.start);
                let be = spec.rhs_at(iv.piece, iv.end);
                let osc = norm(&bs.iter().zip(&be).map(|(a, b)| a - b).collect::<Vec<_>>());
                delta += c0 * osc / 2.0;
            }
        }
        cells.push(CellMetrics {
            delta,
            lambda: game.weight(i) * reg.b_g,
            d_sub,
        });
    }
    let d_cap = match (game.constraint(), spec.aggregate_constraint()) {
        (Some(a), Some(b)) => hausdorff(a, b)?,
        (None, None) => 0.0,
        _ => {
            return Err(Error::InvalidArgument(
                "game and spec disagree on the presence of an aggregate constraint".into(),
            ))
        }
    };
    let max = |f: fn(&CellMetrics) -> f64| cells.iter().map(f).fold(0.0, f64::max);
    Ok(AasMetrics {
        delta: max(|c| c.delta),
        lambda: max(|c| c.lambda),
        d_sub: max(|c| c.d_sub),
        d_cap,
        slack_constant: c0,
        endpoint_evaluations: evaluations,
        constrained: spec.aggregate_constraint().is_some(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub aggregate: f64,
    pub profile: f64,
    /// Whether the metrics are small enough for the bounds to apply.
    pub gate_ok: bool,
    pub gate_lhs: f64,
    pub gate_rhs: f64,
}

/// `(1/modulus) [(3 B_f + 1) K_A max(D, delta) + (2M + 1)(d + lambda)]`.
#[allow(clippy::too_many_arguments)]
pub fn bound_value(b_f: f64, m: f64, k_a: f64, d_cap: f64, delta: f64, d_sub: f64, lambda: f64, modulus: f64) -> f64 {
    if !(modulus > 0.0) {
        return f64::INFINITY;
    }
    ((3.0 * b_f + 1.0) * k_a * d_cap.max(delta) + (2.0 * m + 1.0) * (d_sub + lambda)) / modulus
}

/// Error bounds on `||X_hat - X*||^2` and `||psi(x_hat) - x*||^2`. Without an
/// aggregate constraint `K_A` and `D` drop out; pseudo mode drops `lambda`.
pub fn bounds(metrics: &AasMetrics, consts: &GameConstants, mode: Mode) -> Bounds {
    let (k_a, d_cap) = if metrics.constrained {
        (consts.k_a, metrics.d_cap)
    } else {
        (0.0, 0.0)
    };
    let lambda = if mode == Mode::Pseudo { 0.0 } else { metrics.lambda };
    let value = |modulus| {
        bound_value(
            consts.b_f,
            consts.m,
            k_a,
            d_cap,
            metrics.delta,
            metrics.d_sub,
            lambda,
            modulus,
        )
    };
    let spread = metrics.delta.max(metrics.d_cap);
    let (gate_lhs, gate_rhs) = match mode {
        Mode::Vne => (spread, consts.rho.min(consts.rho_bar)),
        Mode::Pseudo => (2.0 * spread, consts.rho),
    };
    Bounds {
        aggregate: value(consts.beta),
        profile: value(consts.alpha),
        gate_ok: gate_lhs < gate_rhs,
        gate_lhs,
        gate_rhs,
    }
}

pub fn bound_aggregate(metrics: &AasMetrics, consts: &GameConstants, mode: Mode) -> f64 {
    bounds(metrics, consts, mode).aggregate
}

pub fn bound_profile(metrics: &AasMetrics, consts: &GameConstants, mode: Mode) -> f64 {
    bounds(metrics, consts, mode).profile
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub pairs: usize,
    /// Smallest `<G(x) - G(y), x - y>`.
    pub min_gap: f64,
    /// Smallest `gap - alpha ||x - y||^2`.
    pub min_alpha_margin: f64,
    /// Smallest `gap - beta ||X - Y||^2`.
    pub min_beta_margin: f64,
    pub alpha: f64,
    pub beta: f64,
    pub passed: bool,
}

impl MonotoneReport {
    fn new(pairs: usize, alpha: f64, beta: f64) -> Self {
        MonotoneReport {
            pairs,
            min_gap: f64::INFINITY,
            min_alpha_margin: f64::INFINITY,
            min_beta_margin: f64::INFINITY,
            alpha,
            beta,
            passed: false,
        }
    }

    fn record(&mut self, gap: f64, dx_sq: f64, d_agg_sq: f64) {
        self.min_gap = self.min_gap.min(gap);
        self.min_alpha_margin = self.min_alpha_margin.min(gap - self.alpha * dx_sq);
        self.min_beta_margin = self.min_beta_margin.min(gap - self.beta * d_agg_sq);
    }

    fn finish(mut self) -> Self {
        if self.pairs == 0 {
            self.min_gap = 0.0;
            self.min_alpha_margin = 0.0;
            self.min_beta_margin = 0.0;
        }
        self.passed = self.min_gap >= -MONOTONE_TOL
            && self.min_alpha_margin >= -MONOTONE_TOL
            && self.min_beta_margin >= -MONOTONE_TOL;
        self
    }
}

fn check_pairs(n_pairs: usize) -> Result<()> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be >= 1".into()));
    }
    Ok(())
}

/// Monotonicity of a finite game's operator, with `||.||_nu` in the alpha margin.
pub fn check_monotone_game(
    game: &FiniteGame,
    mode: Mode,
    n_pairs: usize,
    seed: u64,
    alpha: f64,
    beta: f64,
) -> Result<MonotoneReport> {
    check_pairs(n_pairs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotoneReport::new(n_pairs, alpha, beta);
    let t = game.dim();
    let r = (0..game.players())
        .map(|i| game.action_set(i).radius().map(|v| v / game.weight(i)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    for k in 0..n_pairs {
        let x = random_feasible(game, &mut rng, crate::geometry::DEFAULT_MAX_PROJ_ITERS)?;
        // every other pair moves all players along one direction, scaled by
        // weight; independent draws almost never produce such coherent moves
        let y = if k % 2 == 0 {
            random_feasible(game, &mut rng, crate::geometry::DEFAULT_MAX_PROJ_ITERS)?
        } else {
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-r..=r)).collect();
            let mut shifted = x.clone();
            for i in 0..game.players() {
                let mu = game.weight(i);
                shifted.player_mut(i).iter_mut().zip(&u).for_each(|(v, d)| *v += mu * d);
            }
            crate::geometry::project_coupled(game, &shifted)?
        };
        let dx = x.sub(&y);
        let gap = game.operator(&x, mode).sub(&game.operator(&y, mode)).dot(&dx);
        let dn = nu_norm(&dx, game.weights());
        let dagg = dx.aggregate();
        report.record(gap, dn * dn, dot(&dagg, &dagg));
    }
    Ok(report.finish())
}

/// Monotonicity of the nonatomic operator on random piecewise-constant
/// profiles, against the spec's declared moduli (zero when not declared).
pub fn check_monotone_spec(spec: &NonatomicGameSpec, n_pairs: usize, seed: u64) -> Result<MonotoneReport> {
    check_pairs(n_pairs)?;
    let declared = spec.declared();
    let (alpha, beta) = (declared.alpha.unwrap_or(0.0), declared.beta.unwrap_or(0.0));
    let t = spec.dim();
    let cost = spec.cost();

    // each cell lies in one piece; a point feasible at both endpoints is
    // feasible on the whole cell since the rhs is affine
    let partition = uniform_partition(spec, 16)?;
    let mut sets = Vec::with_capacity(partition.cells.len());
    for cell in &partition.cells {
        let iv = cell.intervals[0];
        let lo = spec.rhs_at(iv.piece, iv.start);
        let hi = spec.rhs_at(iv.piece, iv.end);
        let rhs: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect();
        let set = PolytopeSet::new(spec.action_matrix().clone(), DVector::from_vec(rhs))?;
        let a_int = spec.param_profile().integral(iv.start, iv.end)[0];
        sets.push((set.radius()?, set, cell.measure, a_int));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Vec<Vec<f64>>> {
        sets.iter()
            .map(|(r, set, _, _)| {
                let y: Vec<f64> = (0..t).map(|_| rng.gen_range(-*r..=*r)).collect();
                set.project(&y)
            })
            .collect()
    };
    let mut report = MonotoneReport::new(n_pairs, alpha, beta);
    for _ in 0..n_pairs {
        let x = draw(&mut rng)?;
        let y = draw(&mut rng)?;
        let mut d_agg = vec![0.0; t];
        let mut dx_sq = 0.0;
        let mut curvature = 0.0;
        for ((xc, yc), (_, _, mu, a_int)) in x.iter().zip(&y).zip(&sets) {
            let dv: Vec<f64> = xc.iter().zip(yc).map(|(a, b)| a - b).collect();
            let sq = dot(&dv, &dv);
            dx_sq += mu * sq;
            curvature += a_int * sq;
            d_agg.iter_mut().zip(&dv).for_each(|(s, v)| *s += mu * v);
        }
        let price = cost.price(&d_agg);
        let offset = cost.price_offset().as_slice();
        let d_term: f64 = price
            .iter()
            .zip(offset)
            .zip(&d_agg)
            .map(|((p, o), v)| (p - o) * v)
            .sum();
        report.record(d_term + curvature, dx_sq, dot(&d_agg, &d_agg));
    }
    Ok(report.finish())
}

/// Largest `||vne - pseudo|| / (mu_i B_g)` over random feasible profiles.
pub fn lambda_tightness(game: &FiniteGame, b_g: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Profile = random_feasible(game, &mut rng, crate::geometry::DEFAULT_MAX_PROJ_ITERS)?;
        for i in 0..game.players() {
            let v = game.grad_own(i, &x, Mode::Vne)?;
            let p = game.grad_own(i, &x, Mode::Pseudo)?;
            let diff: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&diff) / (game.weight(i) * b_g));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aas::build_uniform;
    use crate::oracle::suite;

    #[test]
    fn formula_examples() {
        assert!((rho_from(0.1, 1.0, 0.9) - 0.01).abs() < 1e-15);
        assert!((k_a_from(1.0, 0.01, 0.02) - 200.0).abs() < 1e-10);
        let b = bound_value(2.0, 1.0, 4.0, 0.0, 0.1, 0.05, 0.02, 1.0);
        assert!((b - 3.01).abs() < 1e-12);
        let pseudo = bound_value(2.0, 1.0, 4.0, 0.0, 0.1, 0.05, 0.0, 1.0);
        assert!((pseudo - 2.95).abs() < 1e-12);
        assert!((bound_value(2.0, 1.0, 4.0, 0.0, 0.1, 0.05, 0.02, 2.0) - 1.505).abs() < 1e-12);
        assert_eq!(bound_value(2.0, 1.0, 0.0, 0.0, 0.7, 0.0, 0.0, 1.0), 0.0);
        let un = bound_value(2.0, 1.0, 0.0, 0.0, 0.3, 0.05, 0.02, 1.0);
        assert!((un - 3.0 * 0.07).abs() < 1e-12);
    }

    #[test]
    fn lq1_moduli_and_metrics() {
        let spec = suite::lq1().unwrap();
        let reg = regularity(&spec).unwrap();
        assert_eq!((reg.alpha, reg.beta), (1.0, 1.0));
        for nu in [1, 2, 8] {
            let g = build_uniform(&spec, nu).unwrap();
            let m = compute_metrics(&spec, &g).unwrap();
            assert_eq!((m.delta, m.d_sub, m.d_cap), (0.0, 0.0, 0.0));
            assert_eq!(m.lambda, reg.b_g / nu as f64);
        }
    }

    #[test]
    fn ramp_box_delta_is_half_cell() {
        let mut parts = suite::lq_hetero().unwrap().parts().clone();
        parts.rhs = crate::game::PiecewiseAffine {
            segments: vec![crate::game::Segment {
                start: 0.0,
                end: 1.0,
                left: vec![0.0, 0.0],
                right: vec![1.0, 0.0],
            }],
        };
        parts.witness = None;
        let spec = NonatomicGameSpec::new(parts).unwrap();
        for nu in [2, 4, 16] {
            let g = build_uniform(&spec, nu).unwrap();
            let m = compute_metrics(&spec, &g).unwrap();
            assert!((m.delta - 0.5 / nu as f64).abs() < 1e-15);
            assert_eq!(m.slack_constant, 0.0);
        }
    }

    #[test]
    fn hetero_constants() {
        let c = compute_constants(&suite::lq_hetero().unwrap()).unwrap();
        assert_eq!(c.m, 2.0);
        assert!((c.rho - 0.01875).abs() < 1e-15);
        assert!((c.rho_bar - 0.25).abs() < 1e-15);
        assert!(c.aggregate_set_exact);
    }

    #[test]
    fn missing_witness_is_reported() {
        let mut parts = suite::lq1().unwrap().parts().clone();
        parts.witness = None;
        let spec = NonatomicGameSpec::new(parts).unwrap();
        assert!(matches!(compute_constants(&spec), Err(Error::MissingWitness)));
    }

    #[test]
    fn monotone_reports() {
        let spec = suite::lq1().unwrap();
        let rep = check_monotone_spec(&spec, 200, 7).unwrap();
        assert!(rep.passed, "{rep:?}");
        let adv = check_monotone_spec(&suite::adversarial().unwrap(), 200, 7).unwrap();
        assert!(!adv.passed);
        assert!(adv.min_alpha_margin < 0.0);
        let g = build_uniform(&suite::adversarial().unwrap(), 2).unwrap();
        let fin = check_monotone_game(&g, Mode::Vne, 200, 7, 1.0, 1.0).unwrap();
        assert!(fin.min_gap < 0.0);
    }

    #[test]
    fn null_operator_has_zero_gaps() {
        let mut parts = suite::lq1().unwrap().parts().clone();
        parts.cost = crate::game::CostFamily::scalar(0.0, 0.0);
        parts.params = crate::game::PiecewiseAffine::constant(vec![0.0, 0.0]);
        parts.declared = Default::default();
        let spec = NonatomicGameSpec::new(parts).unwrap();
        let rep = check_monotone_spec(&spec, 50, 1).unwrap();
        assert_eq!(rep.min_gap, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn lambda_bound_is_tight() {
        let spec = suite::lq1().unwrap();
        let reg = regularity(&spec).unwrap();
        let g = build_uniform(&spec, 4).unwrap();
        let worst = lambda_tightness(&g, reg.b_g, 1000, 3).unwrap();
        assert!(worst <= 1.0 + 1e-12);
        assert!(worst >= 0.95, "{worst}");
    }
}
