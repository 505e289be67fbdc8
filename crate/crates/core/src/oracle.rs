//! Closed-form co-location probabilities and expectations, used to
//! cross-validate Monte Carlo runs and to rank attack strategies.
//!
//! The shared building block is `1 - (1 - 1/N)^e`, evaluated as
//! `exp(e * ln_1p(-1/N))` so large clusters do not lose precision to
//! cancellation.

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DomainError {
    #[error("cluster size must be >= 1")]
    ZeroNodes,
    #[error("invocations-per-scale-out r must be >= 1")]
    ZeroScaleRatio,
    #[error("locality hit probability must lie in (0, 1], got {0}")]
    ProbabilityRange(f64),
}

/// `1 - (1 - 1/n)^exponent` for a real exponent >= 0.
fn coverage_term(n: u64, exponent: f64) -> f64 {
    debug_assert!(n >= 1);
    if exponent == 0.0 {
        return 0.0;
    }
    1.0 - (exponent * (-1.0 / n as f64).ln_1p()).exp()
}

/// Expected number of nodes simultaneously holding attacker and victim
/// hosts after `alpha` attacker and `beta` victim placements under uniform
/// random dispatch: `N * [1-(1-1/N)^alpha] * [1-(1-1/N)^beta]`.
pub fn e_colocated_random(n: u64, alpha: u64, beta: u64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError::ZeroNodes);
    }
    Ok(n as f64 * coverage_term(n, alpha as f64) * coverage_term(n, beta as f64))
}

/// Co-location probability against an invocation-locality scheduler when
/// the attacker deploys `alpha` distinct functions and the victim holds one
/// host: `1 - (1 - 1/N)^alpha`.
pub fn p_colocate_invocation_locality(n: u64, alpha: u64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError::ZeroNodes);
    }
    Ok(coverage_term(n, alpha as f64))
}

/// Co-location probability when stressing an auto-scaling scheduler with
/// `alpha` invocations of one function, where every `r` invocations spawn
/// one host: `1 - (1 - 1/N)^(alpha/r)`. Strictly below the
/// invocation-locality probability whenever `r > 1` and `alpha >= 1`.
pub fn p_colocate_autoscaling(n: u64, alpha: u64, r: u64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError::ZeroNodes);
    }
    if r == 0 {
        return Err(DomainError::ZeroScaleRatio);
    }
    Ok(coverage_term(n, alpha as f64 / r as f64))
}

/// Co-location probability when exploiting a configuration-based locality
/// feature with per-function hit probability `p`: `1 - (1 - p)^alpha`.
pub fn p_colocate_config_locality(alpha: u64, p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DomainError::ProbabilityRange(p));
    }
    if alpha == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - (alpha as f64 * (-p).ln_1p()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_edge_cases() {
        assert_eq!(e_colocated_random(10, 0, 5).unwrap(), 0.0);
        assert_eq!(e_colocated_random(10, 5, 0).unwrap(), 0.0);
        assert_eq!(e_colocated_random(1, 1, 1).unwrap(), 1.0);
        assert_eq!(e_colocated_random(0, 1, 1).unwrap_err(), DomainError::ZeroNodes);
    }

    #[test]
    fn expectation_matches_direct_evaluation() {
        // n=10, alpha=beta=5: 10 * (1 - 0.9^5)^2.
        let direct = 10.0 * (1.0 - 0.9f64.powi(5)).powi(2);
        let got = e_colocated_random(10, 5, 5).unwrap();
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
        assert!((got - 1.6769844).abs() < 1e-6);
    }

    #[test]
    fn invocation_locality_values() {
        assert!((p_colocate_invocation_locality(2, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p_colocate_invocation_locality(1000, 0).unwrap(), 0.0);
        let v = p_colocate_invocation_locality(1000, 64).unwrap();
        assert!((v - (1.0 - 0.999f64.powi(64))).abs() < 1e-12);
        assert!((v - 0.0620).abs() < 5e-4);
    }

    #[test]
    fn autoscaling_reduces_to_invocation_locality_at_r_one() {
        for alpha in [0u64, 1, 7, 100] {
            assert_eq!(
                p_colocate_autoscaling(500, alpha, 1).unwrap(),
                p_colocate_invocation_locality(500, alpha).unwrap()
            );
        }
        assert_eq!(p_colocate_autoscaling(10, 5, 0).unwrap_err(), DomainError::ZeroScaleRatio);
    }

    #[test]
    fn autoscaling_matches_exact_rational_arithmetic() {
        // 1 - (999/1000)^10 computed exactly in u128 and rounded once.
        let num = 999u128.pow(10);
        let den = 1000u128.pow(10);
        let exact = 1.0 - (num as f64 / den as f64);
        let got = p_colocate_autoscaling(1000, 100, 10).unwrap();
        assert!((got - exact).abs() < 1e-15, "{got} vs {exact}");
        assert!((got - 0.00995).abs() < 5e-5);
        assert_eq!(p_colocate_autoscaling(1000, 0, 10).unwrap(), 0.0);
    }

    #[test]
    fn config_locality_values() {
        assert_eq!(p_colocate_config_locality(1, 1.0).unwrap(), 1.0);
        assert_eq!(p_colocate_config_locality(0, 0.5).unwrap(), 0.0);
        let v = p_colocate_config_locality(3, 0.3).unwrap();
        assert!((v - 0.657).abs() < 1e-12);
        assert!(p_colocate_config_locality(1, 0.0).is_err());
        assert!(p_colocate_config_locality(1, 1.5).is_err());
        assert!(p_colocate_config_locality(1, -0.1).is_err());
    }

    #[test]
    fn probabilities_bounded_and_monotone_in_alpha() {
        let mut prev = -1.0;
        for alpha in 0..200u64 {
            let v = p_colocate_invocation_locality(37, alpha).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
        let mut prev_e = -1.0;
        for alpha in 0..60u64 {
            let e = e_colocated_random(37, alpha, 13).unwrap();
            assert!(e >= prev_e && e <= 37.0);
            prev_e = e;
        }
    }

    #[test]
    fn dominance_chain_holds() {
        // autoscaling < invocation locality < config locality whenever
        // r > 1 and p > 1/N.
        for n in [10u64, 100, 1000] {
            for alpha in [1u64, 4, 16, 64] {
                let mid = p_colocate_invocation_locality(n, alpha).unwrap();
                for r in [2u64, 5, 10] {
                    assert!(p_colocate_autoscaling(n, alpha, r).unwrap() < mid);
                }
                let p = (2.5 / n as f64).min(1.0);
                assert!(p_colocate_config_locality(alpha, p).unwrap() > mid);
            }
        }
    }
}
