//! Atomic approximating sequences: partition `[0, 1]` into cells and turn each
//! cell into a finite player.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{FiniteGame, GameParts, NonatomicGameSpec};
use crate::polytope::PolytopeSet;

/// Cells below this measure are dropped.
pub const MIN_CELL_MEASURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uniform,
    Meshgrid,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Uniform => "uniform",
            Method::Meshgrid => "meshgrid",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Method::Uniform),
            "meshgrid" => Ok(Method::Meshgrid),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected uniform or meshgrid)"
            ))),
        }
    }
}

/// Half-open interval `[start, end)` inside one characteristic piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub piece: usize,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// One player's coalition `Theta_i` and its representative characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub intervals: Vec<Interval>,
    pub measure: f64,
    /// Representative rhs of the unscaled set: `X_i / mu_i = {A x <= rhs}`.
    pub rhs: Vec<f64>,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub nu: usize,
    pub method: Method,
    pub theta_axis: bool,
    pub cells: Vec<Cell>,
}

impl Partition {
    pub fn max_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }
}

/// Builder options.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BuildOptions {
    /// Meshgrid only: also cut `theta` into `nu` slices.
    pub theta_axis: bool,
}

pub fn build(spec: &NonatomicGameSpec, nu: usize, method: Method, opts: BuildOptions) -> Result<FiniteGame> {
    let partition = match method {
        Method::Uniform => uniform_partition(spec, nu)?,
        Method::Meshgrid => meshgrid_partition(spec, nu, opts.theta_axis)?,
    };
    game_from_partition(spec, partition)
}

/// Uniform splitting with midpoint representatives.
pub fn build_uniform(spec: &NonatomicGameSpec, nu: usize) -> Result<FiniteGame> {
    build(spec, nu, Method::Uniform, BuildOptions::default())
}

/// Meshgrid partition of the characteristic range with cell-average representatives.
pub fn build_meshgrid(spec: &NonatomicGameSpec, nu: usize, opts: BuildOptions) -> Result<FiniteGame> {
    build(spec, nu, Method::Meshgrid, opts)
}

fn check_nu(nu: usize) -> Result<()> {
    if nu == 0 {
        return Err(Error::InvalidArgument("nu must be >= 1".into()));
    }
    Ok(())
}

/// Sorted cut points from `candidates`, with points closer than the cell
/// threshold merged. `preferred` points win ties.
fn merge_cuts(mut candidates: Vec<(f64, bool)>) -> Vec<f64> {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cuts: Vec<(f64, bool)> = Vec::with_capacity(candidates.len());
    for (c, pref) in candidates {
        match cuts.last_mut() {
            Some(last) if c - last.0 < MIN_CELL_MEASURE => {
                if pref && !last.1 {
                    *last = (c, pref);
                }
            }
            _ => cuts.push((c, pref)),
        }
    }
    // endpoints stay exact
    if let Some(first) = cuts.first_mut() {
        first.0 = 0.0;
    }
    if let Some(last) = cuts.last_mut() {
        last.0 = 1.0;
    }
    cuts.into_iter().map(|c| c.0).collect()
}

pub fn uniform_partition(spec: &NonatomicGameSpec, nu: usize) -> Result<Partition> {
    check_nu(nu)?;
    let mut candidates: Vec<(f64, bool)> = (0..=nu).map(|k| (k as f64 / nu as f64, false)).collect();
    candidates.extend(spec.breakpoints().into_iter().map(|b| (b, true)));
    let cuts = merge_cuts(candidates);
    let mut cells = Vec::new();
    for w in cuts.windows(2) {
        let (start, end) = (w[0], w[1]);
        if end - start < MIN_CELL_MEASURE {
            continue;
        }
        let mid = 0.5 * (start + end);
        let piece = spec.piece_of(mid);
        cells.push(Cell {
            intervals: vec![Interval { start, end, piece }],
            measure: end - start,
            rhs: spec.rhs_at(piece, mid),
            params: spec.params_at(piece, mid),
        });
    }
    Ok(Partition {
        nu,
        method: Method::Uniform,
        theta_axis: false,
        cells,
    })
}

pub fn meshgrid_partition(spec: &NonatomicGameSpec, nu: usize, theta_axis: bool) -> Result<Partition> {
    check_nu(nu)?;
    let partition = meshgrid_once(spec, nu, theta_axis)?;
    if !theta_axis && partition.max_measure() > 1.0 / nu as f64 + MIN_CELL_MEASURE {
        log::info!(
            "{}: meshgrid cell of measure {:.4} exceeds 1/nu; adding the theta axis",
            spec.name(),
            partition.max_measure()
        );
        return meshgrid_once(spec, nu, true);
    }
    Ok(partition)
}

fn meshgrid_once(spec: &NonatomicGameSpec, nu: usize, theta_axis: bool) -> Result<Partition> {
    let rhs = spec.rhs_profile();
    let params = spec.param_profile();
    let width_b = rhs.segments[0].left.len();
    let width = width_b + params.segments[0].left.len();
    let value = |piece: usize, theta: f64| -> Vec<f64> {
        let mut v = spec.rhs_at(piece, theta);
        v.extend(spec.params_at(piece, theta));
        v
    };

    // grid ranges over all piece endpoints
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for k in 0..spec.pieces() {
        let (s, e) = spec.piece_span(k);
        for theta in [s, e] {
            for (c, v) in value(k, theta).into_iter().enumerate() {
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }
    }
    let scale: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 1.0 + l.abs().max(h.abs())).collect();
    let active: Vec<usize> = (0..width).filter(|&c| hi[c] - lo[c] > 1e-12 * scale[c]).collect();
    let bin = |c: usize, v: f64| -> usize {
        let r = (v - lo[c]) / (hi[c] - lo[c]) * nu as f64;
        (r.floor().max(0.0) as usize).min(nu - 1)
    };

    let mut groups: BTreeMap<Vec<usize>, Vec<Interval>> = BTreeMap::new();
    for k in 0..spec.pieces() {
        let (s, e) = spec.piece_span(k);
        let mut candidates = vec![(s, true), (e, true)];
        let (vs, ve) = (value(k, s), value(k, e));
        for &c in &active {
            let slope = ve[c] - vs[c];
            if slope == 0.0 {
                continue;
            }
            for level in 1..nu {
                let target = lo[c] + (hi[c] - lo[c]) * level as f64 / nu as f64;
                let w = (target - vs[c]) / slope;
                if w > 0.0 && w < 1.0 {
                    candidates.push((s + w * (e - s), false));
                }
            }
        }
        if theta_axis {
            for j in 1..nu {
                let t = j as f64 / nu as f64;
                if t > s && t < e {
                    candidates.push((t, false));
                }
            }
        }
        let mut cuts = merge_cuts(candidates.iter().map(|&(c, p)| ((c - s) / (e - s), p)).collect());
        for c in cuts.iter_mut() {
            *c = s + *c * (e - s);
        }
        if let Some(last) = cuts.last_mut() {
            *last = e;
        }
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < MIN_CELL_MEASURE {
                continue;
            }
            let mid = 0.5 * (a + b);
            let v = value(k, mid);
            let mut key: Vec<usize> = active.iter().map(|&c| bin(c, v[c])).collect();
            if theta_axis {
                key.push(((mid * nu as f64).floor() as usize).min(nu - 1));
            }
            groups.entry(key).or_default().push(Interval {
                start: a,
                end: b,
                piece: k,
            });
        }
    }

    let mut cells: Vec<Cell> = groups
        .into_values()
        .map(|mut intervals| {
            intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
            let measure: f64 = intervals.iter().map(Interval::len).sum();
            let mut rhs_int = vec![0.0; width_b];
            let mut par_int = vec![0.0; width - width_b];
            for iv in &intervals {
                let r = rhs.segments[iv.piece].integral(iv.start, iv.end);
                let p = params.segments[iv.piece].integral(iv.start, iv.end);
                rhs_int.iter_mut().zip(r).for_each(|(a, x)| *a += x);
                par_int.iter_mut().zip(p).for_each(|(a, x)| *a += x);
            }
            Cell {
                intervals,
                measure,
                rhs: rhs_int.into_iter().map(|v| v / measure).collect(),
                params: par_int.into_iter().map(|v| v / measure).collect(),
            }
        })
        .filter(|c| c.measure >= MIN_CELL_MEASURE)
        .collect();
    cells.sort_by(|a, b| a.intervals[0].start.total_cmp(&b.intervals[0].start));
    Ok(Partition {
        nu,
        method: Method::Meshgrid,
        theta_axis,
        cells,
    })
}

/// Player `i` gets weight `mu_i`, set `mu_i * {A x <= rhs_i}`, parameters `s_i`.
pub fn game_from_partition(spec: &NonatomicGameSpec, partition: Partition) -> Result<FiniteGame> {
    let total = partition.total_measure();
    let mut weights: Vec<f64> = partition.cells.iter().map(|c| c.measure).collect();
    // absorb round-off so the weights close exactly
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("partition measures sum to {total}")));
    }
    if let Some(big) = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    {
        weights[big] += 1.0 - total;
    }
    let action_sets = partition
        .cells
        .iter()
        .zip(&weights)
        .map(|(c, &mu)| {
            PolytopeSet::new(
                spec.action_matrix().clone(),
                DVector::from_iterator(c.rhs.len(), c.rhs.iter().map(|b| b * mu)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteGame::new(GameParts {
        weights,
        action_sets,
        params: partition.cells.iter().map(|c| c.params.clone()).collect(),
        cost: spec.cost().clone(),
        constraint: spec.aggregate_constraint().cloned(),
        provenance: Some(partition),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CostFamily, DeclaredModuli, PiecewiseAffine, Segment, SpecParts};
    use nalgebra::DMatrix;

    fn box_spec(rhs: PiecewiseAffine, params: PiecewiseAffine) -> NonatomicGameSpec {
        NonatomicGameSpec::new(SpecParts {
            name: "test".into(),
            action_matrix: DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            rhs,
            params,
            cost: CostFamily::scalar(1.0, 0.0),
            aggregate: None,
            witness: None,
            reference_aggregate: None,
            declared: DeclaredModuli::default(),
        })
        .unwrap()
    }

    fn lq1() -> NonatomicGameSpec {
        box_spec(
            PiecewiseAffine::constant(vec![10.0, 0.0]),
            PiecewiseAffine::constant(vec![1.0, 2.0]),
        )
    }

    #[test]
    fn uniform_lq1_two_players() {
        let g = build_uniform(&lq1(), 2).unwrap();
        assert_eq!(g.weights(), &[0.5, 0.5]);
        assert_eq!(g.action_set(0).box_bounds().unwrap().1, &[5.0]);
    }

    #[test]
    fn uniform_single_cell_is_identity() {
        let g = build_uniform(&lq1(), 1).unwrap();
        assert_eq!(g.players(), 1);
        assert_eq!(g.params(0), &[1.0, 2.0]);
        assert_eq!(g.action_set(0).box_bounds().unwrap().1, &[10.0]);
    }

    #[test]
    fn uniform_merges_breakpoint() {
        let two = |start, end, v: f64| Segment::constant(start, end, vec![v, 0.0]);
        let spec = box_spec(
            PiecewiseAffine {
                segments: vec![two(0.0, 0.3, 1.0), two(0.3, 1.0, 2.0)],
            },
            PiecewiseAffine {
                segments: vec![
                    Segment::constant(0.0, 0.3, vec![1.0, 1.0]),
                    Segment::constant(0.3, 1.0, vec![1.0, 1.0]),
                ],
            },
        );
        let g = build_uniform(&spec, 2).unwrap();
        let mu = g.weights();
        assert_eq!(mu.len(), 3);
        for (a, b) in mu.iter().zip([0.3, 0.2, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn meshgrid_antidiagonal_cells() {
        let spec = box_spec(
            PiecewiseAffine {
                segments: vec![Segment {
                    start: 0.0,
                    end: 1.0,
                    left: vec![0.0, 0.0],
                    right: vec![1.0, 0.0],
                }],
            },
            PiecewiseAffine {
                segments: vec![Segment {
                    start: 0.0,
                    end: 1.0,
                    left: vec![1.0, 1.0],
                    right: vec![0.0, 1.0],
                }],
            },
        );
        let g = build_meshgrid(&spec, 2, BuildOptions::default()).unwrap();
        assert_eq!(g.weights(), &[0.5, 0.5]);
        assert!(!g.provenance().unwrap().theta_axis);
    }

    #[test]
    fn meshgrid_single_cell_integral() {
        let spec = box_spec(
            PiecewiseAffine {
                segments: vec![Segment {
                    start: 0.0,
                    end: 1.0,
                    left: vec![0.0, 0.0],
                    right: vec![1.0, 0.0],
                }],
            },
            PiecewiseAffine::constant(vec![1.0, 1.0]),
        );
        let g = build_meshgrid(&spec, 1, BuildOptions::default()).unwrap();
        assert_eq!(g.players(), 1);
        assert!((g.action_set(0).box_bounds().unwrap().1[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn meshgrid_constant_uses_theta_axis() {
        for theta_axis in [true, false] {
            let g = build_meshgrid(&lq1(), 4, BuildOptions { theta_axis }).unwrap();
            assert_eq!(g.weights(), &[0.25; 4]);
        }
    }

    #[test]
    fn zero_nu_rejected() {
        assert!(matches!(build_uniform(&lq1(), 0), Err(Error::InvalidArgument(_))));
    }
}
