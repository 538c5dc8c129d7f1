//! Packaged linear-quadratic benchmark instances.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::game::{
    CostFamily, DeclaredModuli, InteriorWitness, NonatomicGameSpec, PiecewiseAffine, Segment, SpecParts,
};
use crate::polytope::PolytopeSet;

/// Aggregate of the LQ-hetero Wardrop equilibrium (50-digit quadrature and root finding).
pub const LQ_HETERO_AGGREGATE: f64 = 1.257_011_946_586_635_7;

/// Aggregate of the LQ-breakpoint Wardrop equilibrium, `1.825 / 1.65`.
pub const LQ_BREAKPOINT_AGGREGATE: f64 = 1.106_060_606_060_606;

pub const NAMES: [&str; 5] = ["LQ1", "LQ1-capped", "LQ-hetero", "LQ-2D", "LQ-breakpoint"];

fn unit_moduli() -> DeclaredModuli {
    DeclaredModuli {
        alpha: Some(1.0),
        beta: Some(1.0),
    }
}

fn box_matrix(t: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * t, t);
    for k in 0..t {
        m[(k, k)] = 1.0;
        m[(t + k, k)] = -1.0;
    }
    m
}

fn affine(left: Vec<f64>, right: Vec<f64>) -> PiecewiseAffine {
    PiecewiseAffine {
        segments: vec![Segment {
            start: 0.0,
            end: 1.0,
            left,
            right,
        }],
    }
}

fn lq1_parts(name: &str) -> SpecParts {
    SpecParts {
        name: name.into(),
        action_matrix: box_matrix(1),
        rhs: PiecewiseAffine::constant(vec![10.0, 0.0]),
        params: PiecewiseAffine::constant(vec![1.0, 2.0]),
        cost: CostFamily::scalar(1.0, 0.0),
        aggregate: None,
        witness: Some(InteriorWitness {
            slack: 4.5,
            profile: PiecewiseAffine::constant(vec![5.0]),
        }),
        reference_aggregate: None,
        declared: unit_moduli(),
    }
}

/// `X_theta = [0, 10]`, `a = 1`, `b_u = 2`, `D = 1`; `X* = 1`.
pub fn lq1() -> Result<NonatomicGameSpec> {
    NonatomicGameSpec::new(lq1_parts("LQ1"))
}

/// LQ1 with the aggregate cap `X in [0, 0.5]`; `X* = 0.5` with multiplier 1.
pub fn lq1_capped() -> Result<NonatomicGameSpec> {
    let mut parts = lq1_parts("LQ1-capped");
    parts.aggregate = Some(PolytopeSet::boxed(&[0.0], &[0.5])?);
    parts.reference_aggregate = Some(vec![0.25]);
    NonatomicGameSpec::new(parts)
}

/// `X_theta = [0, 1 + theta]`, `a = 1 + theta/2`, `b_u = 3`, `D = 1`.
pub fn lq_hetero() -> Result<NonatomicGameSpec> {
    NonatomicGameSpec::new(SpecParts {
        name: "LQ-hetero".into(),
        action_matrix: box_matrix(1),
        rhs: affine(vec![1.0, 0.0], vec![2.0, 0.0]),
        params: affine(vec![1.0, 3.0], vec![1.5, 3.0]),
        cost: CostFamily::scalar(1.0, 0.0),
        aggregate: None,
        witness: Some(InteriorWitness {
            slack: 0.45,
            profile: affine(vec![0.5], vec![1.0]),
        }),
        reference_aggregate: None,
        declared: unit_moduli(),
    })
}

/// Two goods, `X_theta = [0, 2 + theta/2] x [0, 2]`, `D = diag(1, 2)`, and the
/// ramp constraint `|X_2 - X_1| <= 0.5` inside `[0, 3]^2`.
pub fn lq_2d() -> Result<NonatomicGameSpec> {
    let ramp = PolytopeSet::new(
        DMatrix::from_row_slice(6, 2, &[-1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
        DVector::from_vec(vec![0.5, 0.5, 3.0, 3.0, 0.0, 0.0]),
    )?;
    NonatomicGameSpec::new(SpecParts {
        name: "LQ-2D".into(),
        action_matrix: box_matrix(2),
        rhs: affine(vec![2.0, 2.0, 0.0, 0.0], vec![2.5, 2.0, 0.0, 0.0]),
        params: affine(vec![1.0, 2.0, 1.0], vec![1.0, 3.0, 1.0]),
        cost: CostFamily::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]), DVector::zeros(2))?,
        aggregate: Some(ramp),
        witness: Some(InteriorWitness {
            slack: 0.9,
            profile: affine(vec![1.0, 1.0], vec![1.25, 1.0]),
        }),
        reference_aggregate: None,
        declared: unit_moduli(),
    })
}

/// One discontinuity at `theta = 0.3`: `[0, 1]`, `a = 1`, `b_u = 2` before and
/// `[0, 2]`, `a = 2`, `b_u = 3.5` after.
pub fn lq_breakpoint() -> Result<NonatomicGameSpec> {
    let two = |a: Vec<f64>, b: Vec<f64>| PiecewiseAffine {
        segments: vec![Segment::constant(0.0, 0.3, a), Segment::constant(0.3, 1.0, b)],
    };
    NonatomicGameSpec::new(SpecParts {
        name: "LQ-breakpoint".into(),
        action_matrix: box_matrix(1),
        rhs: two(vec![1.0, 0.0], vec![2.0, 0.0]),
        params: two(vec![1.0, 2.0], vec![2.0, 3.5]),
        cost: CostFamily::scalar(1.0, 0.0),
        aggregate: None,
        witness: Some(InteriorWitness {
            slack: 0.45,
            profile: two(vec![0.5], vec![1.0]),
        }),
        reference_aggregate: None,
        declared: unit_moduli(),
    })
}

/// LQ1 with `D = -1` while still declaring unit moduli.
pub fn adversarial() -> Result<NonatomicGameSpec> {
    let mut parts = lq1_parts("adversarial");
    parts.cost = CostFamily::scalar(-1.0, 0.0);
    NonatomicGameSpec::new(parts)
}

/// The monotone benchmark instances, in a fixed order.
pub fn benchmark_suite() -> Result<Vec<NonatomicGameSpec>> {
    NAMES.iter().map(|n| benchmark(n).expect("known name")).collect()
}

/// Looks up a benchmark (or `adversarial`) by name.
pub fn benchmark(name: &str) -> Option<Result<NonatomicGameSpec>> {
    Some(match name {
        "LQ1" => lq1(),
        "LQ1-capped" => lq1_capped(),
        "LQ-hetero" => lq_hetero(),
        "LQ-2D" => lq_2d(),
        "LQ-breakpoint" => lq_breakpoint(),
        "adversarial" => adversarial(),
        _ => return None,
    })
}
