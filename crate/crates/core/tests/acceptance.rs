//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the summary is always printed.

mod common;

use aggsolve_core::aas::{build_uniform, BuildOptions, Method};
use aggsolve_core::game::{Mode, Profile};
use aggsolve_core::geometry::{nu_norm, project_coupled};
use aggsolve_core::metrics::{check_monotone_game, check_monotone_spec, compute_metrics, regularity};
use aggsolve_core::oracle::{kkt_brute, suite};
use aggsolve_core::solver::{check_unique, solve, SolverConfig};
use aggsolve_core::sweep::{loglog_slope, SweepContext, SweepRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NUS: [usize; 7] = [2, 4, 8, 16, 32, 64, 128];

const AGGREGATE_TOL: f64 = 1e-6;
const SLOPE_RANGE: (f64, f64) = (-2.1, -1.9);
const PSEUDO_TOL: f64 = 1e-12;
const BOUND_DECAY: f64 = 10.0;
const KKT_INSTANCES: usize = 24;
const KKT_TOL: f64 = 1e-6;
const MONOTONE_PAIRS: usize = 1000;
const MONOTONE_TOL: f64 = 1e-9;
const SPREAD_TOL: f64 = 1e-7;
const PROJECTION_INSTANCES: usize = 50;
const PROJECTION_TOL: f64 = 1e-6;
const NONEXPANSIVE_PAIRS: usize = 1000;
const DECAY_SLOPE: f64 = -0.95;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sweep(name: &str, mode: Mode) -> Result<Vec<SweepRow>, String> {
    let spec = suite::benchmark(name)
        .ok_or("unknown benchmark")?
        .map_err(|e| e.to_string())?;
    let ctx = SweepContext::new(spec).map_err(|e| e.to_string())?;
    let rows = ctx.run(
        &NUS,
        Method::Uniform,
        BuildOptions::default(),
        &SolverConfig::default().with_mode(mode),
    );
    if let Some(bad) = rows.iter().find(|r| r.status.is_failure()) {
        return Err(format!("{name} nu={} status {}", bad.nu, bad.status.as_str()));
    }
    Ok(rows)
}

fn closed_form_convergence() -> Outcome {
    let rows = sweep("LQ1", Mode::Vne)?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        let nu = r.nu as f64;
        // X* = 1 and X_hat <= X*, so the aggregate is recovered from the error
        let x_hat = 1.0 - r.err_agg_sq.sqrt();
        worst = worst.max((x_hat - 2.0 * nu / (2.0 * nu + 1.0)).abs());
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.nu as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.err_agg_sq).collect();
    let slope = loglog_slope(&xs, &ys).ok_or("no slope")?;
    ensure(
        worst <= AGGREGATE_TOL && (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&slope),
        format!("max |X_hat - 2nu/(2nu+1)| = {worst:.2e}, slope {slope:.4}"),
    )
}

fn pseudo_exactness() -> Outcome {
    let rows = sweep("LQ1", Mode::Pseudo)?;
    let worst = rows.iter().map(|r| r.err_agg_sq).fold(0.0, f64::max);
    ensure(worst <= PSEUDO_TOL, format!("max err_agg_sq = {worst:.2e}"))
}

fn bound_domination() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["LQ-hetero", "LQ-2D"] {
        for mode in [Mode::Vne, Mode::Pseudo] {
            let rows = sweep(name, mode)?;
            let gated: Vec<&SweepRow> = rows.iter().filter(|r| r.gate_ok).collect();
            let dominated = gated
                .iter()
                .all(|r| r.err_agg_sq <= r.bound_agg && r.err_prof_sq <= r.bound_prof);
            let (first, last) = (&rows[0], &rows[rows.len() - 1]);
            let decays =
                last.bound_agg <= first.bound_agg / BOUND_DECAY && last.bound_prof <= first.bound_prof / BOUND_DECAY;
            ok &= dominated && decays && !gated.is_empty();
            notes.push(format!(
                "{name}/{mode}: {} gated rows dominated={dominated}, bound {:.3e} -> {:.3e}",
                gated.len(),
                first.bound_agg,
                last.bound_agg
            ));
        }
    }
    ensure(ok, notes.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..KKT_INSTANCES {
        let (n, t) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let cap = (k % 2 == 0).then(|| rng.gen_range(0.1..0.3));
        let game = common::random_box_game(&mut rng, n, t, cap);
        let mode = if k % 4 < 2 { Mode::Vne } else { Mode::Pseudo };
        let cfg = SolverConfig {
            tol: 1e-10,
            ..SolverConfig::default().with_mode(mode)
        };
        let res = solve(&game, &cfg).map_err(|e| format!("instance {k}: {e}"))?;
        let exact = kkt_brute(&game, mode).map_err(|e| format!("instance {k}: {e}"))?;
        worst = worst.max(nu_norm(&res.profile.sub(&exact), game.weights()));
    }
    ensure(
        worst <= KKT_TOL,
        format!("{KKT_INSTANCES} instances, half capped: max nu-distance {worst:.2e}"),
    )
}

fn monotonicity_certificates() -> Outcome {
    let mut worst = f64::INFINITY;
    for spec in suite::benchmark_suite().map_err(|e| e.to_string())? {
        let r = check_monotone_spec(&spec, MONOTONE_PAIRS, 5).map_err(|e| e.to_string())?;
        worst = worst.min(r.min_gap).min(r.min_alpha_margin).min(r.min_beta_margin);
    }
    let adv = suite::adversarial().map_err(|e| e.to_string())?;
    let nonatomic = check_monotone_spec(&adv, MONOTONE_PAIRS, 5).map_err(|e| e.to_string())?;
    let game = build_uniform(&adv, 2).map_err(|e| e.to_string())?;
    let finite = check_monotone_game(&game, Mode::Vne, MONOTONE_PAIRS, 5, 1.0, 1.0).map_err(|e| e.to_string())?;
    ensure(
        worst >= -MONOTONE_TOL && !nonatomic.passed && finite.min_gap < 0.0,
        format!(
            "benchmark min margin {worst:.3e}; adversarial alpha margin {:.3e}, finite gap {:.3e}",
            nonatomic.min_alpha_margin, finite.min_gap
        ),
    )
}

fn uniqueness() -> Outcome {
    let cfg = SolverConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for spec in suite::benchmark_suite().map_err(|e| e.to_string())? {
        let game = build_uniform(&spec, 16).map_err(|e| e.to_string())?;
        let u = check_unique(&game, &cfg, 5).map_err(|e| e.to_string())?;
        let alpha_positive = spec.declared().alpha.is_some_and(|a| a > 0.0);
        ok &= u.aggregate_spread <= SPREAD_TOL && (!alpha_positive || u.profile_spread <= SPREAD_TOL);
        if spec.name() == "LQ-hetero" {
            notes.push(format!("LQ-hetero aggregate spread {:.2e}", u.aggregate_spread));
        }
        notes.push(format!("{} profile spread {:.2e}", spec.name(), u.profile_spread));
    }
    ensure(ok, notes.join(", "))
}

fn projection_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_qp: f64 = 0.0;
    for _ in 0..PROJECTION_INSTANCES {
        let (n, t) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let cap = rng.gen_range(0.2..0.9);
        let game = common::random_box_game(&mut rng, n, t, Some(cap));
        let y = Profile::from_flat(n, t, (0..n * t).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let p = project_coupled(&game, &y).map_err(|e| e.to_string())?;
        worst_qp = worst_qp.max(common::flat_dist(
            p.as_slice(),
            common::brute_projection(&game, &y).as_slice(),
        ));
    }
    let game = common::random_box_game(&mut rng, 3, 2, Some(0.4));
    let mut worst_fne = f64::INFINITY;
    for _ in 0..NONEXPANSIVE_PAIRS {
        let draw = |rng: &mut ChaCha8Rng| {
            Profile::from_flat(3, 2, (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap()
        };
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        let dp = project_coupled(&game, &x)
            .map_err(|e| e.to_string())?
            .sub(&project_coupled(&game, &y).map_err(|e| e.to_string())?);
        worst_fne = worst_fne.min(dp.dot(&x.sub(&y)) - dp.dot(&dp));
    }
    ensure(
        worst_qp <= PROJECTION_TOL && worst_fne >= -1e-8,
        format!("max QP distance {worst_qp:.2e}; min firm-nonexpansiveness slack {worst_fne:.2e}"),
    )
}

fn metric_decay() -> Outcome {
    let spec = suite::lq_hetero().map_err(|e| e.to_string())?;
    let b_g = regularity(&spec).map_err(|e| e.to_string())?.b_g;
    let (mut delta, mut d_sub, mut lambda) = (Vec::new(), Vec::new(), Vec::new());
    let mut lambda_exact = true;
    for nu in NUS {
        let game = build_uniform(&spec, nu).map_err(|e| e.to_string())?;
        let m = compute_metrics(&spec, &game).map_err(|e| e.to_string())?;
        lambda_exact &= m.lambda == b_g / nu as f64;
        delta.push(m.delta);
        d_sub.push(m.d_sub);
        lambda.push(m.lambda);
    }
    let xs: Vec<f64> = NUS.iter().map(|&n| n as f64).collect();
    let slopes: Vec<f64> = [&delta, &d_sub, &lambda]
        .iter()
        .map(|ys| loglog_slope(&xs, ys).unwrap_or(f64::NAN))
        .collect();
    ensure(
        slopes.iter().all(|s| *s <= DECAY_SLOPE) && lambda_exact,
        format!(
            "slopes delta {:.4}, d_sub {:.4}, lambda {:.4}; lambda = B_g/nu exactly: {lambda_exact}",
            slopes[0], slopes[1], slopes[2]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("closed-form convergence", closed_form_convergence),
        ("pseudo exactness", pseudo_exactness),
        ("bound domination", bound_domination),
        ("oracle equivalence", oracle_equivalence),
        ("monotonicity certificates", monotonicity_certificates),
        ("uniqueness", uniqueness),
        ("projection correctness", projection_correctness),
        ("metric decay", metric_decay),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {name}: {tag} ({detail})", k + 1);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
