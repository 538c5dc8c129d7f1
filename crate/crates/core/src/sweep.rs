//! One row of a ν-sweep: build, solve, measure against the oracle, bound.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aas::{self, BuildOptions, Method};
use crate::error::{Error, Result};
use crate::game::{FiniteGame, Mode, NonatomicGameSpec};
use crate::metrics::{self, GameConstants};
use crate::oracle::{we_oracle, WardropSolution};
use crate::solver::{self, SolverConfig};

pub const CSV_COLUMNS: [&str; 18] = [
    "nu",
    "I",
    "mu_max",
    "delta",
    "d_sub",
    "lambda",
    "D_cap",
    "gate_ok",
    "bound_agg",
    "err_agg_sq",
    "bound_prof",
    "err_prof_sq",
    "residual",
    "iters",
    "wall_ms",
    "mode",
    "seed",
    "status",
];

/// Why a row carries no (or partial) numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Solved and measured, but no interior witness so no bounds.
    Uncertified,
    NotConverged,
    BuildError,
    SolveError,
    MetricsError,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Uncertified => "uncertified",
            RowStatus::NotConverged => "not_converged",
            RowStatus::BuildError => "build_error",
            RowStatus::SolveError => "solve_error",
            RowStatus::MetricsError => "metrics_error",
        }
    }

    pub fn is_failure(self) -> bool {
        !matches!(self, RowStatus::Ok | RowStatus::Uncertified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: usize,
    pub players: usize,
    pub mu_max: f64,
    pub delta: f64,
    pub d_sub: f64,
    pub lambda: f64,
    pub d_cap: f64,
    pub gate_ok: bool,
    pub bound_agg: f64,
    pub err_agg_sq: f64,
    pub bound_prof: f64,
    pub err_prof_sq: f64,
    pub residual: f64,
    pub iters: usize,
    pub wall_ms: f64,
    pub mode: Mode,
    pub seed: u64,
    pub status: RowStatus,
    /// Error text for failed rows; not part of the CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e},");
}

impl SweepRow {
    fn empty(nu: usize, cfg: &SolverConfig) -> Self {
        SweepRow {
            nu,
            players: 0,
            mu_max: f64::NAN,
            delta: f64::NAN,
            d_sub: f64::NAN,
            lambda: f64::NAN,
            d_cap: f64::NAN,
            gate_ok: false,
            bound_agg: f64::NAN,
            err_agg_sq: f64::NAN,
            bound_prof: f64::NAN,
            err_prof_sq: f64::NAN,
            residual: f64::NAN,
            iters: 0,
            wall_ms: f64::NAN,
            mode: cfg.mode,
            seed: cfg.seed,
            status: RowStatus::Ok,
            message: None,
        }
    }

    fn fail(mut self, status: RowStatus, err: &Error) -> Self {
        self.status = status;
        self.message = Some(err.to_string());
        self
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    /// One CSV line; `with_wall` false blanks the timing column.
    pub fn csv_line(&self, with_wall: bool) -> String {
        let mut s = String::new();
        let _ = write!(s, "{},{},", self.nu, self.players);
        for v in [self.mu_max, self.delta, self.d_sub, self.lambda, self.d_cap] {
            num(&mut s, v);
        }
        let _ = write!(s, "{},", self.gate_ok);
        for v in [
            self.bound_agg,
            self.err_agg_sq,
            self.bound_prof,
            self.err_prof_sq,
            self.residual,
        ] {
            num(&mut s, v);
        }
        let _ = write!(s, "{},", self.iters);
        if with_wall {
            num(&mut s, self.wall_ms);
        } else {
            s.push(',');
        }
        let _ = write!(s, "{},{},{}", self.mode, self.seed, self.status.as_str());
        s
    }
}

/// Renders rows in the given order under the header.
pub fn to_csv(rows: &[SweepRow], with_wall: bool) -> String {
    let mut out = SweepRow::csv_header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line(with_wall));
        out.push('\n');
    }
    out
}

/// Per-spec state shared by all rows: the oracle solution and, when a
/// witness is present, the interiority constants.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub spec: NonatomicGameSpec,
    pub oracle: WardropSolution,
    pub constants: Option<GameConstants>,
}

impl SweepContext {
    /// Fails only when the oracle does; a missing witness leaves `constants` empty.
    pub fn new(spec: NonatomicGameSpec) -> Result<Self> {
        let oracle = we_oracle(&spec)?;
        let constants = match metrics::compute_constants(&spec) {
            Ok(c) => Some(c),
            Err(Error::MissingWitness) => None,
            Err(e) => return Err(e),
        };
        Ok(SweepContext {
            spec,
            oracle,
            constants,
        })
    }

    pub fn run_row(&self, nu: usize, method: Method, opts: BuildOptions, cfg: &SolverConfig) -> SweepRow {
        match aas::build(&self.spec, nu, method, opts) {
            Ok(game) => self.evaluate_game(nu, &game, cfg),
            Err(e) => SweepRow::empty(nu, cfg).fail(RowStatus::BuildError, &e),
        }
    }

    pub fn run(&self, nus: &[usize], method: Method, opts: BuildOptions, cfg: &SolverConfig) -> Vec<SweepRow> {
        nus.iter().map(|&nu| self.run_row(nu, method, opts, cfg)).collect()
    }

    /// Solves and measures an already built game (it must carry its partition).
    pub fn evaluate_game(&self, nu: usize, game: &FiniteGame, cfg: &SolverConfig) -> SweepRow {
        let mut row = SweepRow::empty(nu, cfg);
        row.players = game.players();
        row.mu_max = game.max_weight();
        let Some(partition) = game.provenance() else {
            return row.fail(RowStatus::BuildError, &Error::MissingProvenance);
        };
        let m = match metrics::compute_metrics(&self.spec, game) {
            Ok(m) => m,
            Err(e) => return row.fail(RowStatus::MetricsError, &e),
        };
        row.delta = m.delta;
        row.d_sub = m.d_sub;
        row.lambda = m.lambda;
        row.d_cap = m.d_cap;

        let res = match solver::solve(game, cfg) {
            Ok(r) => r,
            Err(e) => return row.fail(RowStatus::SolveError, &e),
        };
        row.residual = res.residual;
        row.iters = res.iterations;
        row.wall_ms = res.wall_ms;
        row.err_agg_sq = self.oracle.aggregate_error_sq(&res.aggregate);
        row.err_prof_sq = self.oracle.profile_error_sq(partition, game.weights(), &res.profile);

        match &self.constants {
            Some(c) => {
                let b = metrics::bounds(&m, c, cfg.mode);
                row.bound_agg = b.aggregate;
                row.bound_prof = b.profile;
                row.gate_ok = b.gate_ok;
            }
            None => row.status = RowStatus::Uncertified,
        }
        if !res.converged {
            row.status = RowStatus::NotConverged;
        }
        row
    }
}

/// Least-squares slope of `log y` against `log x`, over the points with `y > 0`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
