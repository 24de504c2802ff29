use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::DensityGrid;
use crate::error::{LevyError, Result};
use crate::levy_measure::norm;
use crate::symbol::SymbolTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingBound {
    pub t: f64,
    pub x: Vec<f64>,
    pub k: u64,
    pub rho: f64,
    /// Certified lower bound for p_t(x).
    pub value: f64,
    /// Smallest link infimum; ≤ 0 means the bound is vacuous.
    pub link_inf: f64,
    pub vacuous: bool,
}

fn ball_volume(d: usize, rho: f64) -> f64 {
    match d {
        1 => 2.0 * rho,
        _ => PI * rho * rho,
    }
}

/// Lower bound for p_t(x) from the collinear chain x_i = (i/k)x with balls of
/// radius ρ, using the density grid at time t/k:
/// p_t(x) ≥ [inf_{B(x/k, 2ρ)} p_{t/k}]^k (|B_ρ|)^{k−1}.
/// For k = 1 this is the rounded-down infimum of p_t over B(x, ρ).
pub fn chaining_lower(grid_tk: &DensityGrid, x: &[f64], k: u64, rho: f64) -> Result<ChainingBound> {
    if k == 0 {
        return Err(LevyError::param("k", "chain length must be at least 1"));
    }
    if !(rho > 0.0) {
        return Err(LevyError::param("rho", "must be positive"));
    }
    if x.len() != grid_tk.d {
        return Err(LevyError::param("x", "dimension mismatch"));
    }
    let kf = k as f64;
    let t = grid_tk.t * kf;
    let (center, radius): (Vec<f64>, f64) = if k == 1 {
        (x.to_vec(), rho)
    } else {
        (x.iter().map(|v| v / kf).collect(), 2.0 * rho)
    };
    let m = grid_tk.inf_over_ball(&center, radius);
    if !(m > 0.0) {
        return Ok(ChainingBound {
            t,
            x: x.to_vec(),
            k,
            rho,
            value: 0.0,
            link_inf: m,
            vacuous: true,
        });
    }
    // work in logs: m^k can underflow long before the bound is useless
    let log_value = kf * m.ln() + (kf - 1.0) * ball_volume(grid_tk.d, rho).ln();
    Ok(ChainingBound {
        t,
        x: x.to_vec(),
        k,
        rho,
        value: log_value.exp(),
        link_inf: m,
        vacuous: false,
    })
}

/// Default ball radius θ·h(t/k)/4.
pub fn default_rho(table: &SymbolTable, t: f64, k: u64, theta: f64) -> Result<f64> {
    Ok(theta * table.h(t / k as f64)? / 4.0)
}

/// Dyadic chain length: with g = (4|x|/η)·F⁻¹(2|x|/(ηt)), returns 2ⁿ where
/// 2ⁿ ≤ g < 2ⁿ⁺¹, or 1 when g < 1. `f` must satisfy F(s) ≤ Ψ(s)/s on (0, s0];
/// this is verified on the table grid.
pub fn chain_length_gaussian(
    table: &SymbolTable,
    t: f64,
    x: &[f64],
    eta: f64,
    f: &dyn Fn(f64) -> f64,
    f_inverse: &dyn Fn(f64) -> f64,
    s0: f64,
) -> Result<u64> {
    if !(eta > 0.0) || !(t > 0.0) {
        return Err(LevyError::param("eta", "η and t must be positive"));
    }
    for r in table.radii() {
        if r > s0 {
            break;
        }
        let bound = table.psi(r)? / r;
        let fr = f(r);
        if fr > bound * (1.0 + 1e-9) || fr < 0.0 {
            return Err(LevyError::ConditionViolated { s: r, f: fr, bound });
        }
    }
    let n = norm(x);
    if n == 0.0 {
        return Ok(1);
    }
    let g = 4.0 * n / eta * f_inverse(2.0 * n / (eta * t));
    if !g.is_finite() {
        return Err(LevyError::param("F", "inverse returned a non-finite value"));
    }
    if g < 1.0 {
        return Ok(1);
    }
    let e = g.log2().floor();
    let mut k = 2f64.powf(e);
    // guard the bracket against rounding in log2
    if k > g {
        k /= 2.0;
    }
    if 2.0 * k <= g {
        k *= 2.0;
    }
    Ok(k as u64)
}

/// n = ⌊4|x|/(3r0)⌋ + 1 for |x| ≥ r0.
pub fn chain_length_xlog(x: &[f64], r0: f64) -> Result<u64> {
    let n = norm(x);
    if n < r0 {
        return Err(LevyError::ChainUndefined { norm: n, r0 });
    }
    Ok((4.0 * n / (3.0 * r0)).floor() as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xlog_lengths() {
        assert_eq!(chain_length_xlog(&[1.0], 1.0).unwrap(), 2);
        assert_eq!(chain_length_xlog(&[3.0], 1.0).unwrap(), 5);
        assert!(matches!(
            chain_length_xlog(&[0.5], 1.0),
            Err(LevyError::ChainUndefined { .. })
        ));
        for i in 0..500 {
            let x = 1.0 + i as f64 * 0.37;
            let n = chain_length_xlog(&[x], 1.0).unwrap() as f64;
            assert!(n > 4.0 * x / 3.0 && n <= 7.0 * x / 3.0 && n <= 2.0 * x);
        }
    }
}
