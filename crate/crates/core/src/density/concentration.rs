use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::interp::{LogGrid, LogLogTable, Slopes};
use crate::levy_measure::{norm, AngularMeasure, LevyMeasure, RadialProfile};
use crate::optimize::golden_section_min;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBound {
    pub t: f64,
    pub x: f64,
    /// D²_t(x) ≥ 0; the bound reads p_t(x) ≤ e^{−D²} p_t(0).
    pub d2: f64,
    /// Minimizing s along the ray ξ = s·x/|x|.
    pub s_star: f64,
    /// Set when no exponential moment exists along the ray, so D² = 0 is forced.
    pub vacuous: bool,
}

/// K(s) = ∫ (cosh(s⟨e, y⟩) − 1) ν(dy) tabulated along a fixed direction e.
#[derive(Debug, Clone)]
pub struct ConcentrationEngine {
    nu: LevyMeasure,
    direction: Vec<f64>,
    s_max: f64,
    table: Option<LogLogTable>,
}

const K_POINTS_PER_DECADE: usize = 40;

impl ConcentrationEngine {
    pub fn new(nu: &LevyMeasure, direction: &[f64]) -> Result<Self> {
        let r = norm(direction);
        if direction.len() != nu.d || r == 0.0 {
            return Err(LevyError::param("direction", "must be a nonzero vector of the measure's dimension"));
        }
        let e: Vec<f64> = direction.iter().map(|v| v / r).collect();
        let s_max = exponential_range(nu, &e);
        let table = match s_max {
            Some(s_max) => {
                let lo = s_max * 1e-6;
                let grid = LogGrid::new(lo, s_max, K_POINTS_PER_DECADE);
                let values = grid
                    .points()
                    .iter()
                    .map(|&s| k_value(nu, &e, s))
                    .collect::<Result<Vec<_>>>()?;
                if values.iter().all(|v| v.is_finite() && *v > 0.0) {
                    Some(LogLogTable::new(grid, &values, Slopes::Centered))
                } else {
                    None
                }
            }
            None => None,
        };
        Ok(ConcentrationEngine {
            nu: nu.clone(),
            direction: e,
            s_max: s_max.unwrap_or(0.0),
            table,
        })
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Exact K at s.
    pub fn k(&self, s: f64) -> Result<f64> {
        k_value(&self.nu, &self.direction, s)
    }

    /// D²_t at distance `x ≥ 0` along the engine's direction.
    pub fn bound(&self, t: f64, x: f64) -> ConcentrationBound {
        let x = x.abs();
        let vacuous = ConcentrationBound {
            t,
            x,
            d2: 0.0,
            s_star: 0.0,
            vacuous: true,
        };
        let Some(table) = &self.table else {
            return vacuous;
        };
        if x == 0.0 {
            return ConcentrationBound {
                vacuous: false,
                ..vacuous
            };
        }
        let lo = table.grid.min();
        let v = |s: f64| -> f64 {
            if s <= lo {
                // K ≈ K(lo)(s/lo)² below the table
                -s * x + t * table.value_at(0) * (s / lo).powi(2)
            } else {
                -s * x + t * table.eval(s)
            }
        };
        let (s_star, _) = golden_section_min(v, 0.0, self.s_max, 1e-8);
        let d2 = match self.k(s_star) {
            Ok(k) if k.is_finite() => (s_star * x - t * k).max(0.0),
            _ => 0.0,
        };
        ConcentrationBound {
            t,
            x,
            d2,
            s_star,
            vacuous: false,
        }
    }
}

fn k_value(nu: &LevyMeasure, e: &[f64], s: f64) -> Result<f64> {
    let xi: Vec<f64> = e.iter().map(|v| v * s).collect();
    nu.cosh_functional(&xi)
}

/// Upper end of the search interval for s, or None when no exponential moment exists.
fn exponential_range(nu: &LevyMeasure, e: &[f64]) -> Option<f64> {
    let reach = match &nu.angular {
        AngularMeasure::Uniform { .. } => 1.0,
        AngularMeasure::Atoms { atoms } => atoms
            .iter()
            .map(|a| a.direction.iter().zip(e).map(|(u, v)| u * v).sum::<f64>().abs())
            .fold(0.0, f64::max),
    };
    if reach == 0.0 {
        return None;
    }
    let support = nu.support_radius();
    if support.is_finite() {
        return Some(50.0 / support / reach);
    }
    match &nu.radial {
        RadialProfile::TemperedStable { m, beta, .. } if *beta == 1.0 => Some(0.999 * m / reach),
        RadialProfile::HighIntensity { .. } => Some(0.999 / reach),
        _ => None,
    }
}

/// One-off evaluation of D²_t(x).
pub fn concentration_upper(nu: &LevyMeasure, t: f64, x: &[f64]) -> Result<ConcentrationBound> {
    let r = norm(x);
    if r == 0.0 {
        return Ok(ConcentrationBound {
            t,
            x: 0.0,
            d2: 0.0,
            s_star: 0.0,
            vacuous: false,
        });
    }
    let engine = ConcentrationEngine::new(nu, x)?;
    Ok(engine.bound(t, r))
}
