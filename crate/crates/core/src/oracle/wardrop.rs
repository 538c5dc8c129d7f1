//! Wardrop equilibrium of the linear-quadratic family with box action sets.
//!
//! Each nonatomic player best-responds coordinatewise,
//! `x_theta = clip((b_u(theta) - q) / a(theta), lo(theta), hi(theta))`, to the
//! shadow price `q = D X + d + A_J^T lambda`, and the aggregate solves the
//! fixed point `X = int x_theta`. Integrals are exact: each piece is split
//! where the clipping regime changes.

use serde::{Deserialize, Serialize};

use super::integrals;
use crate::aas::Partition;
use crate::error::{Error, Result};
use crate::game::{NonatomicGameSpec, Profile};
use crate::polytope::PolytopeSet;

pub const BISECTION_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-15;
const FIXED_POINT_MAX_ITERS: usize = 200_000;
const CERTIFY_SAMPLES: usize = 1000;
const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WardropOptions {
    /// Overrides the default damping `1 / (1 + ||D|| int 1/a)`.
    pub damping: Option<f64>,
}

/// Affine data of one coordinate on one piece, in the local variable `w = theta - start`.
#[derive(Debug, Clone, Copy)]
struct Coord {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
    lo0: f64,
    lo1: f64,
    hi0: f64,
    hi1: f64,
}

#[derive(Debug, Clone)]
struct Piece {
    start: f64,
    end: f64,
    coords: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regime {
    Lower,
    Interior,
    Upper,
}

impl Coord {
    fn response(&self, w: f64, q: f64) -> (f64, Regime) {
        let r = (self.b0 + self.b1 * w - q) / (self.a0 + self.a1 * w);
        let lo = self.lo0 + self.lo1 * w;
        let hi = self.hi0 + self.hi1 * w;
        if r < lo {
            (lo, Regime::Lower)
        } else if r > hi {
            (hi, Regime::Upper)
        } else {
            (r, Regime::Interior)
        }
    }

    /// Sub-intervals of `[u, v]` (local coordinates) with a fixed regime.
    fn regimes(&self, u: f64, v: f64, q: f64) -> Vec<(f64, f64, Regime)> {
        let mut cuts = vec![u];
        for (l0, l1) in [(self.lo0, self.lo1), (self.hi0, self.hi1)] {
            // (b - q) - bound * a, shifted to start at u
            let c0 = (self.b0 + self.b1 * u - q) - (l0 + l1 * u) * (self.a0 + self.a1 * u);
            let c1 = self.b1 - l1 * (self.a0 + self.a1 * u) - (l0 + l1 * u) * self.a1;
            let c2 = -l1 * self.a1;
            cuts.extend(
                integrals::quadratic_roots_in(c0, c1, c2, v - u)
                    .into_iter()
                    .map(|r| u + r),
            );
        }
        cuts.push(v);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1], self.response(0.5 * (w[0] + w[1]), q).1))
            .collect()
    }

    /// `(int x, int x^2)` over local `[u, v]`.
    fn moments(&self, u: f64, v: f64, q: f64) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (s, e, regime) in self.regimes(u, v, q) {
            let len = e - s;
            match regime {
                Regime::Interior => {
                    let b0 = self.b0 + self.b1 * s - q;
                    let a0 = self.a0 + self.a1 * s;
                    m1 += integrals::ratio(b0, self.b1, a0, self.a1, len);
                    m2 += integrals::ratio_sq(b0, self.b1, a0, self.a1, len);
                }
                Regime::Lower | Regime::Upper => {
                    let (c0, c1) = if regime == Regime::Lower {
                        (self.lo0, self.lo1)
                    } else {
                        (self.hi0, self.hi1)
                    };
                    let start = c0 + c1 * s;
                    m1 += integrals::affine(start, c1, len);
                    m2 += integrals::affine_sq(start, c1, len);
                }
            }
        }
        (m1, m2)
    }
}

/// Certified Wardrop equilibrium `x*` with aggregate `X*`.
#[derive(Debug, Clone)]
pub struct WardropSolution {
    pieces: Vec<Piece>,
    pub aggregate: Vec<f64>,
    /// Multiplier per row of the aggregate constraint (empty when unconstrained).
    pub multiplier: Vec<f64>,
    pub active_row: Option<usize>,
    /// Effective price `D X* + d + A^T lambda` seen by every player.
    pub price: Vec<f64>,
    pub damping: f64,
    pub bisection_tol: f64,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub samples: usize,
    /// Smallest `<g_theta(x*_theta), y - x*_theta>` over sampled `theta` and box vertices `y`.
    pub min_margin: f64,
    pub fixed_point_gap: f64,
    pub constraint_violation: f64,
    pub complementarity: f64,
}

struct Problem<'a> {
    pieces: Vec<Piece>,
    spec: &'a NonatomicGameSpec,
    damping: f64,
}

impl<'a> Problem<'a> {
    fn new(spec: &'a NonatomicGameSpec, opts: WardropOptions) -> Result<Self> {
        if !spec.is_box_family() {
            return Err(Error::Unsupported("the Wardrop oracle needs box action sets".into()));
        }
        let t = spec.dim();
        let mut pieces = Vec::with_capacity(spec.pieces());
        let mut inv_a = 0.0;
        for k in 0..spec.pieces() {
            let (start, end) = spec.piece_span(k);
            let len = end - start;
            let (lo_s, hi_s) = spec.box_at(k, start).expect("box family");
            let (lo_e, hi_e) = spec.box_at(k, end).expect("box family");
            let (ps, pe) = (spec.params_at(k, start), spec.params_at(k, end));
            if !(ps[0] > 0.0 && pe[0] > 0.0) {
                return Err(Error::Unsupported(
                    "the Wardrop oracle needs curvature a > 0 everywhere".into(),
                ));
            }
            let a1 = (pe[0] - ps[0]) / len;
            inv_a += integrals::ratio(1.0, 0.0, ps[0], a1, len);
            let coords = (0..t)
                .map(|c| Coord {
                    a0: ps[0],
                    a1,
                    b0: ps[1 + c],
                    b1: (pe[1 + c] - ps[1 + c]) / len,
                    lo0: lo_s[c],
                    lo1: (lo_e[c] - lo_s[c]) / len,
                    hi0: hi_s[c],
                    hi1: (hi_e[c] - hi_s[c]) / len,
                })
                .collect();
            pieces.push(Piece { start, end, coords });
        }
        let default = 1.0 / (1.0 + spec.cost().price_norm() * inv_a);
        let damping = opts.damping.unwrap_or(default);
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in (0, 1], got {damping}"
            )));
        }
        Ok(Problem { pieces, spec, damping })
    }

    fn price(&self, x: &[f64], shift: &[f64]) -> Vec<f64> {
        self.spec
            .cost()
            .price(x)
            .into_iter()
            .zip(shift)
            .map(|(p, s)| p + s)
            .collect()
    }

    fn response_integral(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        for p in &self.pieces {
            for (c, coord) in p.coords.iter().enumerate() {
                out[c] += coord.moments(0.0, p.end - p.start, q[c]).0;
            }
        }
        out
    }

    /// Damped fixed point `X = int x(D X + d + shift)`.
    fn fixed_point(&self, shift: &[f64], start: &[f64]) -> Result<Vec<f64>> {
        let mut x = start.to_vec();
        for _ in 0..FIXED_POINT_MAX_ITERS {
            let f = self.response_integral(&self.price(&x, shift));
            let next: Vec<f64> = x
                .iter()
                .zip(&f)
                .map(|(a, b)| (1.0 - self.damping) * a + self.damping * b)
                .collect();
            let step = dist(&next, &x);
            if !next.iter().all(|v| v.is_finite() && v.abs() < 1e12) {
                return Err(Error::Oracle(
                    "aggregate iteration diverges (map is not a contraction)".into(),
                ));
            }
            x = next;
            if step <= FIXED_POINT_TOL * (1.0 + norm(&x)) {
                return Ok(x);
            }
        }
        Err(Error::Oracle(format!(
            "aggregate iteration did not settle in {FIXED_POINT_MAX_ITERS} steps"
        )))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn we_oracle(spec: &NonatomicGameSpec) -> Result<WardropSolution> {
    we_oracle_with(spec, WardropOptions::default())
}

pub fn we_oracle_with(spec: &NonatomicGameSpec, opts: WardropOptions) -> Result<WardropSolution> {
    let problem = Problem::new(spec, opts)?;
    let t = spec.dim();
    let zero = vec![0.0; t];
    let free = problem.fixed_point(&zero, &zero)?;
    let constraint = spec.aggregate_constraint();
    let (aggregate, multiplier, active_row) = match constraint {
        None => (free, Vec::new(), None),
        Some(a) if a.contains(&free, 1e-12) => (free, vec![0.0; a.rows()], None),
        Some(a) => solve_single_active(&problem, a, &free)?,
    };
    let mut shift = vec![0.0; t];
    if let (Some(a), Some(j)) = (constraint, active_row) {
        for (c, s) in shift.iter_mut().enumerate() {
            *s = a.matrix()[(j, c)] * multiplier[j];
        }
    }
    let price = problem.price(&aggregate, &shift);
    let mut sol = WardropSolution {
        pieces: problem.pieces,
        aggregate,
        multiplier,
        active_row,
        price,
        damping: problem.damping,
        bisection_tol: BISECTION_TOL,
        certificate: None,
    };
    let cert = sol.certify(constraint)?;
    sol.certificate = Some(cert);
    Ok(sol)
}

/// One binding row `j` with multiplier found by bisection on `a_j^T X(lambda) = b_j`.
fn solve_single_active(
    problem: &Problem<'_>,
    a: &PolytopeSet,
    free: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Option<usize>)> {
    let t = free.len();
    for j in 0..a.rows() {
        let row: Vec<f64> = (0..t).map(|c| a.matrix()[(j, c)]).collect();
        let b = a.rhs()[j];
        let excess = |x: &[f64]| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() - b;
        if excess(free) <= 0.0 {
            continue;
        }
        let at = |lambda: f64| -> Result<Vec<f64>> {
            let shift: Vec<f64> = row.iter().map(|r| r * lambda).collect();
            problem.fixed_point(&shift, free)
        };
        let mut hi = 1.0;
        let mut x_hi = at(hi)?;
        let mut doublings = 0;
        while excess(&x_hi) > 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 80 {
                break;
            }
            x_hi = at(hi)?;
        }
        if excess(&x_hi) > 0.0 {
            continue;
        }
        let mut lo = 0.0;
        while hi - lo > BISECTION_TOL * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if excess(&at(mid)?) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let x = at(lambda)?;
        if a.contains(&x, 1e-9) {
            let mut multiplier = vec![0.0; a.rows()];
            multiplier[j] = lambda;
            return Ok((x, multiplier, Some(j)));
        }
    }
    Err(Error::Oracle(
        "no single binding constraint row yields a feasible aggregate".into(),
    ))
}

impl WardropSolution {
    pub fn dim(&self) -> usize {
        self.aggregate.len()
    }

    fn piece_index(&self, theta: f64) -> usize {
        self.pieces
            .iter()
            .position(|p| theta < p.end)
            .unwrap_or(self.pieces.len() - 1)
    }

    /// `x*_theta`.
    pub fn profile_at(&self, theta: f64) -> Vec<f64> {
        let p = &self.pieces[self.piece_index(theta)];
        p.coords
            .iter()
            .zip(&self.price)
            .map(|(c, q)| c.response(theta - p.start, *q).0)
            .collect()
    }

    fn for_overlaps(&self, u: f64, v: f64, mut f: impl FnMut(&Piece, f64, f64)) {
        for p in &self.pieces {
            let s = u.max(p.start);
            let e = v.min(p.end);
            if e > s {
                f(p, s - p.start, e - p.start);
            }
        }
    }

    /// `int_u^v x*_theta dtheta`.
    pub fn integral(&self, u: f64, v: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.for_overlaps(u, v, |p, s, e| {
            for (c, coord) in p.coords.iter().enumerate() {
                out[c] += coord.moments(s, e, self.price[c]).0;
            }
        });
        out
    }

    /// `int_u^v ||x*_theta||^2 dtheta`.
    pub fn square_integral(&self, u: f64, v: f64) -> f64 {
        let mut out = 0.0;
        self.for_overlaps(u, v, |p, s, e| {
            for (c, coord) in p.coords.iter().enumerate() {
                out += coord.moments(s, e, self.price[c]).1;
            }
        });
        out
    }

    /// `||psi(x) - x*||_2^2` for a finite profile built on `partition`.
    pub fn profile_error_sq(&self, partition: &Partition, weights: &[f64], x: &Profile) -> f64 {
        let mut total = 0.0;
        for (i, cell) in partition.cells.iter().enumerate() {
            let v: Vec<f64> = x.player(i).iter().map(|c| c / weights[i]).collect();
            let vv: f64 = v.iter().map(|c| c * c).sum();
            for iv in &cell.intervals {
                let m1 = self.integral(iv.start, iv.end);
                let cross: f64 = v.iter().zip(&m1).map(|(a, b)| a * b).sum();
                total += iv.len() * vv - 2.0 * cross + self.square_integral(iv.start, iv.end);
            }
        }
        total.max(0.0)
    }

    /// Squared distance `||X - X*||^2`.
    pub fn aggregate_error_sq(&self, x: &[f64]) -> f64 {
        let d = dist(x, &self.aggregate);
        d * d
    }

    fn gradient_at(&self, theta: f64, x: &[f64]) -> Vec<f64> {
        let p = &self.pieces[self.piece_index(theta)];
        let w = theta - p.start;
        p.coords
            .iter()
            .zip(x)
            .zip(&self.price)
            .map(|((c, xc), q)| q + (c.a0 + c.a1 * w) * xc - (c.b0 + c.b1 * w))
            .collect()
    }

    fn certify(&self, constraint: Option<&PolytopeSet>) -> Result<Certificate> {
        let mut min_margin = f64::INFINITY;
        for k in 0..CERTIFY_SAMPLES {
            let theta = (k as f64 + 0.5) / CERTIFY_SAMPLES as f64;
            let p = &self.pieces[self.piece_index(theta)];
            let w = theta - p.start;
            let x = self.profile_at(theta);
            let g = self.gradient_at(theta, &x);
            let margin: f64 = p
                .coords
                .iter()
                .enumerate()
                .map(|(c, coord)| {
                    let lo = coord.lo0 + coord.lo1 * w;
                    let hi = coord.hi0 + coord.hi1 * w;
                    (g[c] * (lo - x[c])).min(g[c] * (hi - x[c]))
                })
                .sum();
            min_margin = min_margin.min(margin);
        }
        let fixed_point_gap = dist(&self.integral(0.0, 1.0), &self.aggregate);
        let (constraint_violation, complementarity) = match constraint {
            Some(a) => {
                let viol = a.max_violation(&self.aggregate).map_or(0.0, |(_, v)| v.max(0.0));
                let comp = (0..a.rows())
                    .map(|j| (self.multiplier[j] * (a.row_dot(j, &self.aggregate) - a.rhs()[j])).abs())
                    .fold(0.0, f64::max);
                (viol, comp)
            }
            None => (0.0, 0.0),
        };
        let cert = Certificate {
            samples: CERTIFY_SAMPLES,
            min_margin,
            fixed_point_gap,
            constraint_violation,
            complementarity,
        };
        if min_margin < -CERTIFY_TOL
            || fixed_point_gap > 1e-10
            || constraint_violation > 1e-9
            || complementarity > 1e-9
            || self.multiplier.iter().any(|&m| m < 0.0)
        {
            return Err(Error::Oracle(format!("certificate failed: {cert:?}")));
        }
        Ok(cert)
    }
}

/// Runs the oracle with the default damping and with half of it; returns the
/// aggregate distance between the two answers.
pub fn uniqueness_witness(spec: &NonatomicGameSpec) -> Result<f64> {
    let a = we_oracle(spec)?;
    let b = we_oracle_with(
        spec,
        WardropOptions {
            damping: Some(0.5 * a.damping),
        },
    )?;
    Ok(dist(&a.aggregate, &b.aggregate))
}
