use serde::{Deserialize, Serialize};

use super::profile::{Interpolation, RadialProfile};
use crate::error::{LevyError, Result};

/// Power-law pinching estimates for f(s) = q(s)·s^{1−d}:
/// M1 (R/r)^{β1} ≤ f(r)/f(R) ≤ M2 (R/r)^{β2} for r < R on the probed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub beta1: f64,
    pub beta2: f64,
    pub m1: f64,
    pub m2: f64,
    pub pass: bool,
    /// Pairs (r, R) attaining β1 and β2.
    pub witnesses: Vec<(f64, f64)>,
}

/// Pairs closer than this ratio only enter the M1/M2 estimates; the slopes
/// are read off well-separated scales.
const MIN_SLOPE_RATIO: f64 = 2.0;

pub fn doubling_check(profile: &RadialProfile, d: usize, r_grid: &[f64]) -> Result<DoublingReport> {
    if let RadialProfile::Custom(c) = profile {
        if c.monotone {
            let check = |i: usize| c.q[i + 1] > c.q[i];
            let offending = match c.interpolation {
                // the first knot value is not attained under the step rule
                Interpolation::Step => (1..c.q.len() - 1).find(|&i| check(i)),
                Interpolation::LogLinear => (0..c.q.len() - 1).find(|&i| check(i)),
            };
            if let Some(i) = offending {
                return Err(LevyError::NonMonotoneProfile {
                    left: c.s[i],
                    right: c.s[i + 1],
                });
            }
        }
    }
    let mut grid: Vec<f64> = r_grid.iter().copied().filter(|r| *r > 0.0).collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    if grid.len() < 2 {
        return Err(LevyError::param("r_grid", "need at least two positive radii"));
    }
    let f: Vec<f64> = grid
        .iter()
        .map(|&s| profile.density(s) * s.powi(1 - d as i32))
        .collect();

    let mut beta1 = f64::INFINITY;
    let mut beta2 = f64::NEG_INFINITY;
    let mut w1 = (0.0, 0.0);
    let mut w2 = (0.0, 0.0);
    let mut degenerate = false;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let ratio = grid[j] / grid[i];
            if ratio < MIN_SLOPE_RATIO {
                continue;
            }
            let slope = if f[i] > 0.0 && f[j] > 0.0 {
                (f[i] / f[j]).ln() / ratio.ln()
            } else {
                degenerate = true;
                continue;
            };
            if slope < beta1 {
                beta1 = slope;
                w1 = (grid[i], grid[j]);
            }
            if slope > beta2 {
                beta2 = slope;
                w2 = (grid[i], grid[j]);
            }
        }
    }
    if !beta1.is_finite() {
        return Err(LevyError::param("r_grid", "grid spans less than a factor 2 or f vanishes"));
    }

    let mut m1 = f64::INFINITY;
    let mut m2 = 0.0_f64;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let ratio = grid[j] / grid[i];
            let q = f[i] / f[j];
            if !(q.is_finite() && q > 0.0) {
                degenerate = true;
                continue;
            }
            m1 = m1.min(q * ratio.powf(-beta1));
            m2 = m2.max(q * ratio.powf(-beta2));
        }
    }
    let df = d as f64;
    let pass = !degenerate
        && m1.is_finite()
        && m1 > 0.0
        && m2.is_finite()
        && df < beta1
        && beta1 <= beta2
        && beta2 < df + 2.0;
    Ok(DoublingReport {
        beta1,
        beta2,
        m1,
        m2: if degenerate { f64::INFINITY } else { m2 },
        pass,
        witnesses: vec![w1, w2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_measure::profile::{Continuation, CustomProfile};

    fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn power_law_recovers_exponent() {
        let p = RadialProfile::TruncatedStable {
            alpha: 1.5,
            r0: 1.0,
            scale: 1.0,
        };
        let rep = doubling_check(&p, 1, &log_grid(1e-4, 0.9, 40)).unwrap();
        assert!((rep.beta1 - 2.5).abs() < 1e-9 && (rep.beta2 - 2.5).abs() < 1e-9);
        assert!(rep.pass);
    }

    #[test]
    fn high_intensity_passes_below_half() {
        let p = RadialProfile::HighIntensity {
            beta: 2.0,
            scale: 1.0,
            continuation: Continuation::Zero,
        };
        let rep = doubling_check(&p, 1, &log_grid(1e-6, 0.5, 60)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn monotone_flag_is_enforced() {
        let c = CustomProfile::new(vec![1.0, 2.0, 3.0], vec![3.0, 4.0, 1.0], Interpolation::LogLinear, true).unwrap();
        let err = doubling_check(&RadialProfile::Custom(c), 1, &[1.0, 2.5]).unwrap_err();
        assert!(matches!(err, LevyError::NonMonotoneProfile { .. }));
    }
}
