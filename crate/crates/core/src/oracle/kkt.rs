//! Exact equilibria of tiny finite games by enumerating active sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{FiniteGame, Mode, Profile};

pub const MAX_PLAYERS: usize = 3;
pub const MAX_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Free,
    Lower,
    Upper,
}

const STATES: [State; 3] = [State::Free, State::Lower, State::Upper];

/// Solves the KKT system of the game's variational inequality for every
/// pattern of active box faces and aggregate faces; returns the first pattern
/// meeting all sign and feasibility conditions.
pub fn kkt_brute(game: &FiniteGame, mode: Mode) -> Result<Profile> {
    let (n_players, t) = (game.players(), game.dim());
    if n_players > MAX_PLAYERS || t > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "kkt_brute handles at most {MAX_PLAYERS} players and dimension {MAX_DIM}"
        )));
    }
    let mut lo = Vec::with_capacity(n_players * t);
    let mut hi = Vec::with_capacity(n_players * t);
    for i in 0..n_players {
        let (l, u) = game
            .action_set(i)
            .box_bounds()
            .ok_or_else(|| Error::Unsupported("kkt_brute needs box action sets".into()))?;
        lo.extend_from_slice(l);
        hi.extend_from_slice(u);
    }
    let agg_bounds = match game.constraint() {
        None => None,
        Some(a) => Some(
            a.box_bounds()
                .map(|(l, u)| (l.to_vec(), u.to_vec()))
                .ok_or_else(|| Error::Unsupported("kkt_brute needs a box aggregate constraint".into()))?,
        ),
    };

    // G(x) = H x + h
    let n = n_players * t;
    let d = game.cost().price_matrix();
    let mut h_mat = DMatrix::zeros(n, n);
    let mut h_vec = DVector::zeros(n);
    for i in 0..n_players {
        let s = game.params(i);
        for r in 0..t {
            h_vec[i * t + r] = game.cost().price_offset()[r] - s[1 + r];
            for j in 0..n_players {
                for c in 0..t {
                    let mut v = d[(r, c)];
                    if i == j {
                        if r == c {
                            v += s[0] / game.weight(i);
                        }
                        if mode == Mode::Vne {
                            v += d[(c, r)];
                        }
                    }
                    h_mat[(i * t + r, j * t + c)] = v;
                }
            }
        }
    }

    let scale = 1.0 + hi.iter().chain(&lo).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let agg_patterns = if agg_bounds.is_some() { 3usize.pow(t as u32) } else { 1 };
    for var_code in 0..3usize.pow(n as u32) {
        let vars = decode(var_code, n);
        for agg_code in 0..agg_patterns {
            let aggs = decode(agg_code, t);
            if let Some(x) = try_pattern(
                &vars,
                &aggs,
                &h_mat,
                &h_vec,
                &lo,
                &hi,
                agg_bounds.as_ref(),
                n_players,
                t,
                tol,
            ) {
                return Profile::from_flat(n_players, t, x);
            }
        }
    }
    Err(Error::NoKktSolution)
}

fn decode(mut code: usize, len: usize) -> Vec<State> {
    (0..len)
        .map(|_| {
            let s = STATES[code % 3];
            code /= 3;
            s
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn try_pattern(
    vars: &[State],
    aggs: &[State],
    h_mat: &DMatrix<f64>,
    h_vec: &DVector<f64>,
    lo: &[f64],
    hi: &[f64],
    agg_bounds: Option<&(Vec<f64>, Vec<f64>)>,
    n_players: usize,
    t: usize,
    tol: f64,
) -> Option<Vec<f64>> {
    let n = vars.len();
    let active: Vec<usize> = (0..t).filter(|&k| aggs[k] != State::Free).collect();
    let m = active.len();
    let mut sys = DMatrix::zeros(n + m, n + m);
    let mut rhs = DVector::zeros(n + m);
    for v in 0..n {
        let k = v % t;
        match vars[v] {
            State::Free => {
                for c in 0..n {
                    sys[(v, c)] = h_mat[(v, c)];
                }
                if let Some(pos) = active.iter().position(|&a| a == k) {
                    sys[(v, n + pos)] = 1.0;
                }
                rhs[v] = -h_vec[v];
            }
            State::Lower => {
                sys[(v, v)] = 1.0;
                rhs[v] = lo[v];
            }
            State::Upper => {
                sys[(v, v)] = 1.0;
                rhs[v] = hi[v];
            }
        }
    }
    let (alo, ahi) = match agg_bounds {
        Some((l, u)) => (l.as_slice(), u.as_slice()),
        None => (&[][..], &[][..]),
    };
    for (pos, &k) in active.iter().enumerate() {
        for i in 0..n_players {
            sys[(n + pos, i * t + k)] = 1.0;
        }
        rhs[n + pos] = if aggs[k] == State::Lower { alo[k] } else { ahi[k] };
    }
    let lu = sys.clone().lu();
    if sys.determinant().abs() < 1e-12 {
        return None;
    }
    let sol = lu.solve(&rhs)?;
    let x: Vec<f64> = sol.iter().take(n).copied().collect();
    let mult = |k: usize| active.iter().position(|&a| a == k).map_or(0.0, |p| sol[n + p]);

    let g = h_mat * DVector::from_column_slice(&x) + h_vec;
    for v in 0..n {
        if x[v] < lo[v] - tol || x[v] > hi[v] + tol {
            return None;
        }
        let r = g[v] + mult(v % t);
        let ok = match vars[v] {
            State::Free => r.abs() <= tol * (1.0 + g[v].abs()),
            State::Lower => r >= -tol,
            State::Upper => r <= tol,
        };
        if !ok {
            return None;
        }
    }
    if agg_bounds.is_some() {
        for k in 0..t {
            let s: f64 = (0..n_players).map(|i| x[i * t + k]).sum();
            if s < alo[k] - tol || s > ahi[k] + tol {
                return None;
            }
            match aggs[k] {
                State::Upper if mult(k) < -tol => return None,
                State::Lower if mult(k) > tol => return None,
                _ => {}
            }
        }
    }
    Some(x)
}
