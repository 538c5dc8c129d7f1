//! Independent ground truth: Wardrop equilibria of the linear-quadratic
//! family, active-set enumeration for tiny finite games, and the benchmarks.

pub mod integrals;
pub mod kkt;
pub mod suite;
pub mod wardrop;

pub use kkt::kkt_brute;
pub use suite::{benchmark, benchmark_suite};
pub use wardrop::{uniqueness_witness, we_oracle, we_oracle_with, WardropOptions, WardropSolution};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aas::build_uniform;
    use crate::game::{CostFamily, PiecewiseAffine};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn lq1_closed_form() {
        let sol = we_oracle(&suite::lq1().unwrap()).unwrap();
        assert!(close(sol.aggregate[0], 1.0, 1e-13));
        assert!(close(sol.profile_at(0.37)[0], 1.0, 1e-13));
        assert!(sol.multiplier.is_empty());
    }

    #[test]
    fn lq1_capped_multiplier() {
        let sol = we_oracle(&suite::lq1_capped().unwrap()).unwrap();
        assert!(close(sol.aggregate[0], 0.5, 1e-11));
        assert_eq!(sol.active_row, Some(0));
        assert!(close(sol.multiplier[0], 1.0, 1e-10));
    }

    #[test]
    fn null_incentives() {
        let mut parts = suite::lq1().unwrap().parts().clone();
        parts.params = PiecewiseAffine::constant(vec![1.0, 0.0]);
        parts.witness = None;
        let spec = crate::game::NonatomicGameSpec::new(parts).unwrap();
        let sol = we_oracle(&spec).unwrap();
        assert_eq!(sol.aggregate, vec![0.0]);
        assert_eq!(sol.profile_at(0.5), vec![0.0]);
    }

    #[test]
    fn frozen_aggregates() {
        let h = we_oracle(&suite::lq_hetero().unwrap()).unwrap();
        assert!(
            close(h.aggregate[0], suite::LQ_HETERO_AGGREGATE, 1e-12),
            "{}",
            h.aggregate[0]
        );
        let b = we_oracle(&suite::lq_breakpoint().unwrap()).unwrap();
        assert!(close(b.aggregate[0], suite::LQ_BREAKPOINT_AGGREGATE, 1e-12));
    }

    #[test]
    fn ramp_binds_with_half_multiplier() {
        let sol = we_oracle(&suite::lq_2d().unwrap()).unwrap();
        assert!(close(sol.aggregate[0], 1.0, 1e-10));
        assert!(close(sol.aggregate[1], 0.5, 1e-10));
        let row = sol.active_row.unwrap();
        assert!(close(sol.multiplier[row], 0.5, 1e-10));
    }

    #[test]
    fn damping_schedules_agree() {
        for spec in benchmark_suite().unwrap() {
            assert!(uniqueness_witness(&spec).unwrap() <= 1e-9, "{}", spec.name());
        }
    }

    #[test]
    fn profile_error_vanishes_on_projection() {
        // a step profile equal to the cell averages of x* has error int ||x*||^2 - sum |cell avg|^2
        let spec = suite::lq_hetero().unwrap();
        let sol = we_oracle(&spec).unwrap();
        let g = build_uniform(&spec, 8).unwrap();
        let part = g.provenance().unwrap();
        let x = crate::game::Profile::from_rows(
            part.cells
                .iter()
                .map(|c| sol.integral(c.intervals[0].start, c.intervals[0].end))
                .collect(),
        )
        .unwrap();
        let err = sol.profile_error_sq(part, g.weights(), &x);
        let expect: f64 =
            sol.square_integral(0.0, 1.0) - (0..8).map(|i| x.player(i)[0].powi(2) / g.weight(i)).sum::<f64>();
        assert!(close(err, expect, 1e-14));
        assert!(err > 0.0);
    }

    #[test]
    fn non_box_family_rejected() {
        let spec = crate::game::NonatomicGameSpec::new(crate::game::SpecParts {
            name: "budget".into(),
            action_matrix: nalgebra::DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            rhs: PiecewiseAffine::constant(vec![0.0, 0.0, 1.0]),
            params: PiecewiseAffine::constant(vec![1.0, 1.0, 1.0]),
            cost: CostFamily::new(nalgebra::DMatrix::identity(2, 2), nalgebra::DVector::zeros(2)).unwrap(),
            aggregate: None,
            witness: None,
            reference_aggregate: None,
            declared: Default::default(),
        })
        .unwrap();
        assert!(matches!(we_oracle(&spec), Err(crate::Error::Unsupported(_))));
    }
}
