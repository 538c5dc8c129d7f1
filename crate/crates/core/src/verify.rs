//! Self-checks of an instance: monotonicity, uniqueness, oracle certificate
//! and interiority constants.

use serde::{Deserialize, Serialize};

use crate::aas;
use crate::error::Error;
use crate::game::NonatomicGameSpec;
use crate::metrics;
use crate::oracle::{uniqueness_witness, we_oracle};
use crate::solver::{self, SolverConfig};

/// Size of the finite game used by the game-level checks.
pub const VERIFY_NU: usize = 8;
pub const MONOTONE_PAIRS: usize = 1000;
pub const UNIQUE_STARTS: usize = 5;
pub const SPREAD_TOL: f64 = 1e-7;
pub const CERTIFICATE_TOL: f64 = 1e-8;
pub const DAMPING_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Uncertified,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Property,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub status: CheckStatus,
    /// Signed slack of the tested inequality; negative means violated.
    pub margin: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, kind: CheckKind, status: CheckStatus, margin: Option<f64>, detail: String) -> Self {
        Check {
            name: name.into(),
            kind,
            status,
            margin,
            detail,
        }
    }

    fn error(name: &str, kind: CheckKind, err: &Error) -> Self {
        Check::new(name, kind, CheckStatus::Error, None, err.to_string())
    }

    fn from_margin(name: &str, kind: CheckKind, margin: f64, detail: String) -> Self {
        let status = if margin >= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Check::new(name, kind, status, Some(margin), detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub name: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn failed(&self, kind: CheckKind) -> bool {
        self.checks
            .iter()
            .any(|c| c.kind == kind && matches!(c.status, CheckStatus::Fail | CheckStatus::Error))
    }

    pub fn oracle_failed(&self) -> bool {
        self.failed(CheckKind::Oracle)
    }

    pub fn property_failed(&self) -> bool {
        self.failed(CheckKind::Property)
    }

    pub fn passed(&self) -> bool {
        !self.oracle_failed() && !self.property_failed()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every check; individual failures are recorded, never returned.
pub fn verify(spec: &NonatomicGameSpec, cfg: &SolverConfig) -> VerifyReport {
    use CheckKind::{Oracle, Property};
    let mut checks = Vec::new();
    let declared = spec.declared();
    let (alpha, beta) = (declared.alpha.unwrap_or(0.0), declared.beta.unwrap_or(0.0));

    checks.push(match metrics::check_monotone_spec(spec, MONOTONE_PAIRS, cfg.seed) {
        Ok(r) => monotone_check("monotone_nonatomic", r),
        Err(e) => Check::error("monotone_nonatomic", Property, &e),
    });

    match aas::build_uniform(spec, VERIFY_NU) {
        Err(e) => {
            checks.push(Check::error("monotone_finite", Property, &e));
            checks.push(Check::error("uniqueness", Property, &e));
        }
        Ok(game) => {
            checks.push(
                match metrics::check_monotone_game(&game, cfg.mode, MONOTONE_PAIRS, cfg.seed, alpha, beta) {
                    Ok(r) => monotone_check("monotone_finite", r),
                    Err(e) => Check::error("monotone_finite", Property, &e),
                },
            );
            checks.push(match solver::check_unique(&game, cfg, UNIQUE_STARTS) {
                Ok(u) => {
                    let spread = if alpha > 0.0 {
                        u.aggregate_spread.max(u.profile_spread)
                    } else {
                        u.aggregate_spread
                    };
                    let mut c = Check::from_margin(
                        "uniqueness",
                        Property,
                        SPREAD_TOL - spread,
                        format!(
                            "{} starts at nu={VERIFY_NU}: aggregate spread {:.3e}, profile spread {:.3e}, max residual {:.3e}",
                            u.starts, u.aggregate_spread, u.profile_spread, u.max_residual
                        ),
                    );
                    if !u.all_converged {
                        c.status = CheckStatus::Fail;
                        c.detail.push_str("; not all starts converged");
                    }
                    c
                }
                Err(e) => Check::error("uniqueness", Property, &e),
            });
        }
    }

    checks.push(match we_oracle(spec) {
        Ok(sol) => match sol.certificate {
            Some(cert) => {
                let worst = cert
                    .min_margin
                    .min(CERTIFICATE_TOL - cert.fixed_point_gap)
                    .min(CERTIFICATE_TOL - cert.constraint_violation)
                    .min(CERTIFICATE_TOL - cert.complementarity.abs());
                let status = if cert.min_margin >= -CERTIFICATE_TOL && worst >= -CERTIFICATE_TOL {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                Check::new(
                    "oracle_certificate",
                    Oracle,
                    status,
                    Some(cert.min_margin),
                    format!(
                        "{} samples, fixed-point gap {:.3e}, violation {:.3e}, complementarity {:.3e}",
                        cert.samples, cert.fixed_point_gap, cert.constraint_violation, cert.complementarity
                    ),
                )
            }
            None => Check::new(
                "oracle_certificate",
                Oracle,
                CheckStatus::Fail,
                None,
                "no certificate".into(),
            ),
        },
        Err(e) => Check::error("oracle_certificate", Oracle, &e),
    });

    checks.push(match uniqueness_witness(spec) {
        Ok(diff) => Check::from_margin(
            "oracle_uniqueness",
            Oracle,
            DAMPING_AGREEMENT_TOL - diff,
            format!("two damping schedules differ by {diff:.3e}"),
        ),
        Err(e) => Check::error("oracle_uniqueness", Oracle, &e),
    });

    checks.push(match metrics::compute_constants(spec) {
        Ok(c) => Check::from_margin(
            "constants",
            Property,
            c.rho.min(c.rho_bar),
            format!(
                "M={:.4e}, rho={:.4e}, rho_bar={:.4e}, K_A={:.4e}, reference aggregate {:?}",
                c.m, c.rho, c.rho_bar, c.k_a, c.reference
            ),
        ),
        Err(Error::MissingWitness) => Check::new(
            "constants",
            Property,
            CheckStatus::Uncertified,
            None,
            Error::MissingWitness.to_string(),
        ),
        Err(e) => Check::error("constants", Property, &e),
    });

    VerifyReport {
        name: spec.name().to_string(),
        checks,
    }
}

fn monotone_check(name: &str, r: metrics::MonotoneReport) -> Check {
    let margin = r.min_gap.min(r.min_alpha_margin).min(r.min_beta_margin);
    let status = if r.passed { CheckStatus::Pass } else { CheckStatus::Fail };
    Check::new(
        name,
        CheckKind::Property,
        status,
        Some(margin),
        format!(
            "{} pairs: min gap {:.6e}, alpha margin {:.6e}, beta margin {:.6e} (alpha={}, beta={})",
            r.pairs, r.min_gap, r.min_alpha_margin, r.min_beta_margin, r.alpha, r.beta
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::suite;

    #[test]
    fn lq1_passes() {
        let r = verify(&suite::lq1().unwrap(), &SolverConfig::default());
        assert!(r.passed(), "{r:#?}");
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn adversarial_fails_monotonicity() {
        let r = verify(&suite::adversarial().unwrap(), &SolverConfig::default());
        let m = r.get("monotone_nonatomic").unwrap();
        assert_eq!(m.status, CheckStatus::Fail);
        assert!(m.margin.unwrap() < 0.0);
        assert!(r.property_failed());
    }

    #[test]
    fn missing_witness_uncertified() {
        let mut parts = suite::lq1().unwrap().parts().clone();
        parts.witness = None;
        let r = verify(&NonatomicGameSpec::new(parts).unwrap(), &SolverConfig::default());
        assert_eq!(r.get("constants").unwrap().status, CheckStatus::Uncertified);
        assert!(r.passed());
    }
}
