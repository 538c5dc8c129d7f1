//! TOML configuration: a nonatomic game plus solver and sweep settings.
//!
//! The schema is documented in `docs/config.md`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aas::Method;
use crate::error::{Error, Result};
use crate::game::{
    CostFamily, DeclaredModuli, InteriorWitness, Mode, NonatomicGameSpec, PiecewiseAffine, Segment, SpecParts,
};
use crate::polytope::PolytopeSet;
use crate::solver::{SolverConfig, Step};

pub const DEFAULT_NUS: [usize; 7] = [2, 4, 8, 16, 32, 64, 128];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub family: FamilySection,
    pub theta_profile: ThetaProfileSection,
    #[serde(default)]
    pub constraint: ConstraintSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    #[serde(default = "default_name")]
    pub name: String,
    /// `D`, row-major.
    pub price_matrix: Vec<Vec<f64>>,
    /// `d`; zeros when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_offset: Option<Vec<f64>>,
    /// Shared `A` of `X_theta = {x : A x <= b_theta}`.
    pub action_matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_aggregate: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaProfileSection {
    pub pieces: Vec<PieceSection>,
}

/// Values are given as `[left, right]`, the limits at `start` and `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSection {
    pub start: f64,
    pub end: f64,
    pub rhs: [Vec<f64>; 2],
    /// `(a, b_u[0], .., b_u[T-1])`.
    pub params: [Vec<f64>; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintSection {
    #[default]
    None,
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Polytope {
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSetting {
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: Mode,
    pub tol: f64,
    pub max_iters: usize,
    pub step: StepSetting,
    pub seed: u64,
    pub max_proj_iters: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            mode: d.mode,
            tol: d.tol,
            max_iters: d.max_iters,
            step: StepSetting::Named("adaptive".into()),
            seed: d.seed,
            max_proj_iters: d.max_proj_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub nus: Vec<usize>,
    pub method: Method,
    pub theta_axis: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            nus: DEFAULT_NUS.to_vec(),
            method: Method::Uniform,
            theta_axis: false,
        }
    }
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::config(field, "matrix must be non-empty"));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::config(
            format!("{field}[{k}]"),
            format!("row has {} entries, expected {cols}", rows[k].len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn check_len(field: String, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::config(field, format!("expected {len} values, got {}", v.len())));
    }
    Ok(())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let place = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "input".into());
            Error::config(place, msg)
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let step = match &s.step {
            StepSetting::Named(n) if n == "adaptive" => Step::Adaptive,
            StepSetting::Named(n) => {
                return Err(Error::config(
                    "solver.step",
                    format!("expected \"adaptive\" or a number, got \"{n}\""),
                ))
            }
            StepSetting::Fixed(t) if *t > 0.0 => Step::Fixed(*t),
            StepSetting::Fixed(t) => return Err(Error::config("solver.step", format!("step must be > 0, got {t}"))),
        };
        if !(s.tol > 0.0) {
            return Err(Error::config("solver.tol", "must be > 0"));
        }
        Ok(SolverConfig {
            step,
            tol: s.tol,
            max_iters: s.max_iters,
            mode: s.mode,
            seed: s.seed,
            max_proj_iters: s.max_proj_iters,
        })
    }

    pub fn to_spec(&self) -> Result<NonatomicGameSpec> {
        let f = &self.family;
        let d = matrix("family.price_matrix", &f.price_matrix)?;
        let t = d.ncols();
        if d.nrows() != t {
            return Err(Error::config("family.price_matrix", "must be square"));
        }
        let offset = f.price_offset.clone().unwrap_or_else(|| vec![0.0; t]);
        check_len("family.price_offset".into(), &offset, t)?;
        let a = matrix("family.action_matrix", &f.action_matrix)?;
        if a.ncols() != t {
            return Err(Error::config(
                "family.action_matrix",
                format!("expected {t} columns to match price_matrix, got {}", a.ncols()),
            ));
        }
        let p = a.nrows();
        let pieces = &self.theta_profile.pieces;
        if pieces.is_empty() {
            return Err(Error::config("theta_profile.pieces", "at least one piece is required"));
        }
        let with_witness = pieces.iter().filter(|pc| pc.witness.is_some()).count();
        if with_witness != 0 && with_witness != pieces.len() {
            return Err(Error::config(
                "theta_profile.pieces.witness",
                "give a witness on every piece or on none",
            ));
        }
        if with_witness > 0 && f.interior_slack.is_none() {
            return Err(Error::config(
                "family.interior_slack",
                "required when witnesses are given",
            ));
        }
        let mut rhs = Vec::new();
        let mut params = Vec::new();
        let mut witness = Vec::new();
        for (k, pc) in pieces.iter().enumerate() {
            let field = |name: &str, side: usize| format!("theta_profile.pieces[{k}].{name}[{side}]");
            for side in 0..2 {
                check_len(field("rhs", side), &pc.rhs[side], p)?;
                check_len(field("params", side), &pc.params[side], t + 1)?;
                if let Some(w) = &pc.witness {
                    check_len(field("witness", side), &w[side], t)?;
                }
            }
            let seg = |v: &[Vec<f64>; 2]| Segment {
                start: pc.start,
                end: pc.end,
                left: v[0].clone(),
                right: v[1].clone(),
            };
            rhs.push(seg(&pc.rhs));
            params.push(seg(&pc.params));
            if let Some(w) = &pc.witness {
                witness.push(seg(w));
            }
        }
        let aggregate = match &self.constraint {
            ConstraintSection::None => None,
            ConstraintSection::Box { lower, upper } => {
                check_len("constraint.lower".into(), lower, t)?;
                check_len("constraint.upper".into(), upper, t)?;
                Some(PolytopeSet::boxed(lower, upper).map_err(|e| Error::config("constraint", e.to_string()))?)
            }
            ConstraintSection::Polytope { matrix: m, rhs: b } => {
                let m = matrix("constraint.matrix", m)?;
                if m.ncols() != t {
                    return Err(Error::config("constraint.matrix", format!("expected {t} columns")));
                }
                check_len("constraint.rhs".into(), b, m.nrows())?;
                Some(
                    PolytopeSet::new(m, DVector::from_vec(b.clone()))
                        .map_err(|e| Error::config("constraint", e.to_string()))?,
                )
            }
        };
        if let Some(r) = &f.reference_aggregate {
            check_len("family.reference_aggregate".into(), r, t)?;
        }
        let cost = CostFamily::new(d, DVector::from_vec(offset))?;
        NonatomicGameSpec::new(SpecParts {
            name: f.name.clone(),
            action_matrix: a,
            rhs: PiecewiseAffine { segments: rhs },
            params: PiecewiseAffine { segments: params },
            cost,
            aggregate,
            witness: f
                .interior_slack
                .filter(|_| with_witness > 0)
                .map(|slack| InteriorWitness {
                    slack,
                    profile: PiecewiseAffine { segments: witness },
                }),
            reference_aggregate: f.reference_aggregate.clone(),
            declared: DeclaredModuli {
                alpha: f.alpha,
                beta: f.beta,
            },
        })
        .map_err(|e| match e {
            Error::InvalidSpec(m) => Error::config("theta_profile", m),
            other => other,
        })
    }

    /// Config reproducing `spec` with default solver and sweep sections.
    pub fn from_spec(spec: &NonatomicGameSpec) -> Self {
        let parts = spec.parts();
        let pair = |s: &Segment| [s.left.clone(), s.right.clone()];
        let pieces = parts
            .rhs
            .segments
            .iter()
            .zip(&parts.params.segments)
            .enumerate()
            .map(|(k, (r, p))| PieceSection {
                start: r.start,
                end: r.end,
                rhs: pair(r),
                params: pair(p),
                witness: parts.witness.as_ref().map(|w| pair(&w.profile.segments[k])),
            })
            .collect();
        let constraint = match &parts.aggregate {
            None => ConstraintSection::None,
            Some(a) => match a.box_bounds() {
                Some((l, u)) => ConstraintSection::Box {
                    lower: l.to_vec(),
                    upper: u.to_vec(),
                },
                None => ConstraintSection::Polytope {
                    matrix: matrix_rows(a.matrix()),
                    rhs: a.rhs().iter().copied().collect(),
                },
            },
        };
        let offset: Vec<f64> = parts.cost.price_offset().iter().copied().collect();
        Config {
            family: FamilySection {
                name: parts.name.clone(),
                price_matrix: matrix_rows(parts.cost.price_matrix()),
                price_offset: offset.iter().any(|&v| v != 0.0).then_some(offset),
                action_matrix: matrix_rows(&parts.action_matrix),
                interior_slack: parts.witness.as_ref().map(|w| w.slack),
                reference_aggregate: parts.reference_aggregate.clone(),
                alpha: parts.declared.alpha,
                beta: parts.declared.beta,
            },
            theta_profile: ThetaProfileSection { pieces },
            constraint,
            solver: SolverSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::suite;

    const LQ1: &str = r#"
[family]
name = "LQ1"
price_matrix = [[1.0]]
action_matrix = [[1.0], [-1.0]]
interior_slack = 4.5

[[theta_profile.pieces]]
start = 0.0
end = 1.0
rhs = [[10.0, 0.0], [10.0, 0.0]]
params = [[1.0, 2.0], [1.0, 2.0]]
witness = [[5.0], [5.0]]

[solver]
mode = "pseudo"
step = 0.1
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = Config::from_toml_str(LQ1).unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.dim(), 1);
        assert!(spec.witness().is_some());
        let s = cfg.solver_config().unwrap();
        assert_eq!((s.mode, s.step), (Mode::Pseudo, Step::Fixed(0.1)));
        assert_eq!(cfg.sweep.nus, DEFAULT_NUS.to_vec());
    }

    #[test]
    fn suite_round_trips_through_toml() {
        for spec in suite::benchmark_suite().unwrap() {
            let text = Config::from_spec(&spec).to_toml_string().unwrap();
            let back = Config::from_toml_str(&text).unwrap().to_spec().unwrap();
            assert_eq!(back, spec, "{}", spec.name());
        }
    }

    #[test]
    fn unknown_field_names_line() {
        let bad = LQ1.replace("interior_slack", "interior_slak");
        match Config::from_toml_str(&bad) {
            Err(Error::Config { field, message }) => {
                assert!(field.starts_with("line "), "{field}");
                assert!(message.contains("interior_slak"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_length_names_field() {
        let bad = LQ1.replace("params = [[1.0, 2.0], [1.0, 2.0]]", "params = [[1.0, 2.0], [1.0]]");
        match Config::from_toml_str(&bad).unwrap().to_spec() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "theta_profile.pieces[0].params[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_step_rejected() {
        let bad = LQ1.replace("step = 0.1", "step = \"fast\"");
        assert!(matches!(
            Config::from_toml_str(&bad).unwrap().solver_config(),
            Err(Error::Config { .. })
        ));
    }
}
