//! Tabulated characteristic exponent Φ, its radial majorant Ψ, Ψ⁻¹ and the
//! scale function h(t) = 1/Ψ⁻¹(1/t).

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::interp::{LogGrid, LogLogTable, Slopes};
use crate::levy_measure::{norm, AngularMeasure, LevyMeasure, RadialProfile};
use crate::quadrature::{integrate_panels, simpson_uniform, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolOptions {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
}

impl Default for SymbolOptions {
    fn default() -> Self {
        SymbolOptions {
            r_min: 1e-4,
            r_max: 1e6,
            per_decade: 600,
        }
    }
}

/// Number of evenly spaced directions in [0, π) scanned for the supremum of Φ
/// when the angular measure is atomic (d = 2).
const FAN: usize = 256;
/// Directions written out as Φ rays for atomic planar measures.
const OUTPUT_FAN: usize = 32;

#[derive(Debug, Clone)]
pub struct Ray {
    pub angle: f64,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SymbolTable {
    nu: LevyMeasure,
    grid: LogGrid,
    /// ∫ (1 − cos ωs) q(s) ds without angular weight.
    rad: LogLogTable,
    /// Φ(r·e) for rotation-invariant measures (any unit e).
    iso: Option<LogLogTable>,
    rays: Vec<Ray>,
    psi: LogLogTable,
    h_values: Vec<f64>,
    t_p: f64,
}

impl SymbolTable {
    pub fn build(nu: &LevyMeasure) -> Result<Self> {
        Self::with_options(nu, SymbolOptions::default())
    }

    pub fn with_options(nu: &LevyMeasure, opts: SymbolOptions) -> Result<Self> {
        if !(opts.r_min > 0.0 && opts.r_max > opts.r_min && opts.per_decade >= 2) {
            return Err(LevyError::param("grid", "need 0 < r_min < r_max and per_decade ≥ 2"));
        }
        let grid = LogGrid::new(opts.r_min, opts.r_max, opts.per_decade);
        let points = grid.points();
        let radial = nu.radial();
        let rad_values: Vec<f64> = points
            .par_iter()
            .map(|&r| radial.phi(r))
            .collect::<Result<Vec<_>>>()?;
        let rad = LogLogTable::new(grid, &rad_values, Slopes::Centered);
        let mass = nu.mass();

        let (iso, rays, psi_raw) = match (&nu.angular, nu.d) {
            (AngularMeasure::Uniform { .. }, 1) => {
                let phi: Vec<f64> = rad_values.iter().map(|v| mass * v).collect();
                let table = LogLogTable::new(grid, &phi, Slopes::Centered);
                let psi = running_max(&phi);
                (Some(table), vec![Ray { angle: 0.0, phi }], psi)
            }
            (AngularMeasure::Uniform { .. }, _) => {
                let phi: Vec<f64> = points
                    .par_iter()
                    .map(|&r| isotropic_average(&rad, r, mass))
                    .collect::<Result<Vec<_>>>()?;
                let table = LogLogTable::new(grid, &phi, Slopes::Centered);
                let psi = running_max(&phi);
                (Some(table), vec![Ray { angle: 0.0, phi }], psi)
            }
            (AngularMeasure::Atoms { atoms }, 1) => {
                let w: f64 = atoms.iter().map(|a| a.weight).sum();
                let phi: Vec<f64> = rad_values.iter().map(|v| w * v).collect();
                let table = LogLogTable::new(grid, &phi, Slopes::Centered);
                let psi = running_max(&phi);
                (Some(table), vec![Ray { angle: 0.0, phi }], psi)
            }
            (AngularMeasure::Atoms { atoms }, _) => {
                let dirs: Vec<(f64, f64)> = atoms
                    .iter()
                    .map(|a| (a.direction[1].atan2(a.direction[0]), a.weight))
                    .collect();
                let eval = |r: f64, ang: f64| -> f64 {
                    dirs.iter()
                        .map(|(th, w)| w * rad.eval(r * (ang - th).cos().abs()))
                        .sum()
                };
                let mut angles: Vec<f64> = dirs.iter().map(|(th, _)| th.rem_euclid(PI)).collect();
                angles.extend((0..OUTPUT_FAN).map(|i| PI * i as f64 / OUTPUT_FAN as f64));
                angles.sort_by(|a, b| a.total_cmp(b));
                angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                let rays: Vec<Ray> = angles
                    .iter()
                    .map(|&angle| Ray {
                        angle,
                        phi: points.iter().map(|&r| eval(r, angle)).collect(),
                    })
                    .collect();
                let sup: Vec<f64> = points
                    .par_iter()
                    .map(|&r| directional_sup(&eval, r, &dirs))
                    .collect();
                (None, rays, running_max(&sup))
            }
        };
        let psi = LogLogTable::new(grid, &psi_raw, Slopes::Monotone);
        let h_values: Vec<f64> = points
            .par_iter()
            .map(|&r| nu.h_functional(r))
            .collect::<Result<Vec<_>>>()?;
        let t_p = match nu.radial {
            RadialProfile::HighIntensity { .. } => 1.0,
            _ => f64::INFINITY,
        };
        Ok(SymbolTable {
            nu: nu.clone(),
            grid,
            rad,
            iso,
            rays,
            psi,
            h_values,
            t_p,
        })
    }

    /// Rebuilds with the frequency grid widened by decades until Ψ covers [lo, hi].
    pub fn covering(nu: &LevyMeasure, lo: f64, hi: f64, mut opts: SymbolOptions) -> Result<Self> {
        for _ in 0..12 {
            let table = Self::with_options(nu, opts)?;
            let (pmin, pmax) = table.psi_range();
            if pmin <= lo && pmax >= hi {
                return Ok(table);
            }
            if pmin > lo {
                opts.r_min /= 100.0;
            }
            if pmax < hi {
                opts.r_max *= 100.0;
            }
            log::info!("widening frequency grid to [{}, {}]", opts.r_min, opts.r_max);
        }
        Err(LevyError::ExtendFrequencyGrid {
            level: if lo < hi { lo } else { hi },
            min: opts.r_min,
            max: opts.r_max,
        })
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.nu
    }

    pub fn grid(&self) -> LogGrid {
        self.grid
    }

    pub fn radii(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn t_p(&self) -> f64 {
        self.t_p
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h_values
    }

    pub fn psi_values(&self) -> Vec<f64> {
        self.psi.values()
    }

    pub fn psi_range(&self) -> (f64, f64) {
        (self.psi.value_at(0), self.psi.value_at(self.grid.n - 1))
    }

    /// Φ at |ξ| = r for rotation-invariant measures, by interpolation.
    /// Below the grid the end slope is continued; above it this is an error.
    pub fn phi_radial(&self, r: f64) -> Result<f64> {
        match &self.iso {
            Some(t) => {
                if r > self.grid.max() * (1.0 + 1e-12) {
                    return Err(LevyError::OutsideGrid {
                        value: r,
                        min: self.grid.min(),
                        max: self.grid.max(),
                    });
                }
                Ok(if r == 0.0 { 0.0 } else { t.eval(r) })
            }
            None => Err(LevyError::param("xi", "measure is not rotation invariant; pass a vector")),
        }
    }

    /// Φ(ξ) from the tables.
    pub fn phi(&self, xi: &[f64]) -> Result<f64> {
        let r = norm(xi);
        if r == 0.0 {
            return Ok(0.0);
        }
        if self.iso.is_some() {
            return self.phi_radial(r);
        }
        if r > self.grid.max() * (1.0 + 1e-12) {
            return Err(LevyError::OutsideGrid {
                value: r,
                min: self.grid.min(),
                max: self.grid.max(),
            });
        }
        let AngularMeasure::Atoms { atoms } = &self.nu.angular else {
            unreachable!("only atomic planar measures lack an isotropic table")
        };
        Ok(atoms
            .iter()
            .map(|a| {
                let p: f64 = a.direction.iter().zip(xi).map(|(u, v)| u * v).sum();
                a.weight * self.rad.eval(p.abs())
            })
            .sum())
    }

    pub fn psi(&self, r: f64) -> Result<f64> {
        if !self.psi.contains(r) {
            return Err(LevyError::OutsideGrid {
                value: r,
                min: self.grid.min(),
                max: self.grid.max(),
            });
        }
        Ok(self.psi.eval(r))
    }

    /// Ψ⁻¹(s) = sup{r : Ψ(r) = s}; on a plateau this is its right end.
    pub fn psi_inverse(&self, s: f64) -> Result<f64> {
        let (pmin, pmax) = self.psi_range();
        if !(s >= pmin && s <= pmax) {
            return Err(LevyError::ExtendFrequencyGrid {
                level: s,
                min: pmin,
                max: pmax,
            });
        }
        let n = self.grid.n;
        // last node with Ψ ≤ s
        let (mut lo, mut hi) = (0usize, n - 1);
        if self.psi.value_at(n - 1) <= s {
            return Ok(self.grid.max());
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.psi.value_at(mid) <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (mut a, mut b) = (self.grid.point(lo), self.grid.point(hi));
        if self.psi.eval(a) > s {
            return Ok(a);
        }
        for _ in 0..200 {
            let mid = (a * b).sqrt();
            if mid <= a || mid >= b {
                break;
            }
            if self.psi.eval(mid) <= s {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a) <= 1e-15 * b {
                break;
            }
        }
        Ok(a)
    }

    /// h(t) = 1/Ψ⁻¹(1/t).
    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(LevyError::param("t", "must be positive"));
        }
        Ok(1.0 / self.psi_inverse(1.0 / t)?)
    }

    pub fn check_horizon(&self, t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(LevyError::param("t", "must be positive"));
        }
        if t >= self.t_p {
            return Err(LevyError::BeyondHorizon { t, t_p: self.t_p });
        }
        Ok(())
    }

    /// ∫_{R^d} e^{−tΦ(ξ)} |ξ| dξ from the tabulated exponent.
    pub fn a1_integral(&self, t: f64) -> Result<f64> {
        let d = self.nu.d as i32;
        let points = self.grid.points();
        let radial_integral = |phi: &dyn Fn(usize) -> f64| -> Result<f64> {
            // ∫ e^{−tΦ(r)} r^{d} dr = ∫ e^{−tΦ} r^{d+1} d(ln r)
            let vals: Vec<f64> = points
                .iter()
                .enumerate()
                .map(|(i, &r)| (-t * phi(i)).exp() * r.powi(d + 1))
                .collect();
            let peak = vals.iter().fold(0.0_f64, |m, v| m.max(*v));
            let last = *vals.last().unwrap();
            if last > 1e-10 * peak {
                return Err(LevyError::IncreaseFrequencyRange {
                    needed: f64::INFINITY,
                    available: self.grid.max(),
                });
            }
            let r0 = points[0];
            let head = r0.powi(d + 1) / (d + 1) as f64;
            Ok(simpson_uniform(&vals, self.grid.step) + head)
        };
        match &self.iso {
            Some(table) => {
                let v = radial_integral(&|i| table.value_at(i))?;
                Ok(if d == 1 { 2.0 * v } else { 2.0 * PI * v })
            }
            None => {
                // periodic trapezoid over the half circle, doubled by symmetry
                let n_ang = 2 * FAN;
                let mut acc = 0.0;
                for k in 0..n_ang {
                    let ang = PI * k as f64 / n_ang as f64;
                    let e = [ang.cos(), ang.sin()];
                    let phi = |i: usize| self.phi(&[points[i] * e[0], points[i] * e[1]]).unwrap_or(f64::INFINITY);
                    acc += radial_integral(&phi)?;
                }
                Ok(2.0 * PI * acc / n_ang as f64)
            }
        }
    }

    /// (A1) diagnostic: M0 estimate sup_t I(t)·h(t)^{d+1} and stability over the grid.
    pub fn check_a1(&self, t_grid: &[f64]) -> Result<A1Report> {
        if t_grid.is_empty() {
            return Err(LevyError::param("t_grid", "empty"));
        }
        let mut rows = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            self.check_horizon(t)?;
            let h = self.h(t)?;
            let integral = self.a1_integral(t);
            let normalized = integral
                .as_ref()
                .map(|v| v * h.powi(self.nu.d as i32 + 1))
                .unwrap_or(f64::NAN);
            rows.push(A1Row {
                t,
                h,
                integral: integral.unwrap_or(f64::NAN),
                normalized,
            });
        }
        let finite = rows.iter().all(|r| r.normalized.is_finite() && r.normalized > 0.0);
        let max = rows.iter().map(|r| r.normalized).fold(f64::NEG_INFINITY, f64::max);
        let min = rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
        let variation = max / min;
        Ok(A1Report {
            m0_est: max,
            variation,
            pass: finite && variation < 10.0,
            rows,
        })
    }

    /// inf of Ψ/H and sup of Ψ/(2H) over grid radii in [r_lo, r_hi].
    pub fn l0_fit(&self, r_lo: f64, r_hi: f64) -> L0Fit {
        let mut inf = f64::INFINITY;
        let mut at = f64::NAN;
        let mut upper = 0.0_f64;
        for i in 0..self.grid.n {
            let r = self.grid.point(i);
            if r < r_lo * (1.0 - 1e-12) || r > r_hi * (1.0 + 1e-12) {
                continue;
            }
            let psi = self.psi.value_at(i);
            let h = self.h_values[i];
            let ratio = psi / h;
            if ratio < inf {
                inf = ratio;
                at = r;
            }
            upper = upper.max(psi / (2.0 * h));
        }
        L0Fit {
            l0: inf,
            argmin: at,
            max_upper_ratio: upper,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A1Row {
    pub t: f64,
    pub h: f64,
    pub integral: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A1Report {
    pub m0_est: f64,
    /// max/min of I(t)·h(t)^{d+1} across the grid.
    pub variation: f64,
    pub pass: bool,
    pub rows: Vec<A1Row>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct L0Fit {
    pub l0: f64,
    pub argmin: f64,
    /// sup Ψ/(2H); at most 1 up to quadrature error.
    pub max_upper_ratio: f64,
}

fn running_max(v: &[f64]) -> Vec<f64> {
    let mut m = 0.0_f64;
    v.iter()
        .map(|&x| {
            m = m.max(x);
            m
        })
        .collect()
}

/// (2M/π) ∫_0^{π/2} Φ_rad(ρ cos φ) dφ.
fn isotropic_average(rad: &LogLogTable, rho: f64, mass: f64) -> Result<f64> {
    let f = |phi: f64| rad.eval(rho * phi.cos());
    let edges: Vec<f64> = (0..=16).map(|i| FRAC_PI_2 * i as f64 / 16.0).collect();
    let v = integrate_panels(&f, &edges, Tolerance::relative(1e-11))?.value;
    Ok(2.0 * mass / PI * v)
}

/// max over directions of Φ(r·e): fan scan followed by golden-section refinement.
fn directional_sup<F: Fn(f64, f64) -> f64>(eval: &F, r: f64, dirs: &[(f64, f64)]) -> f64 {
    let mut candidates: Vec<f64> = (0..FAN).map(|i| PI * i as f64 / FAN as f64).collect();
    for (th, _) in dirs {
        candidates.push(*th);
        candidates.push(th + FRAC_PI_2);
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for &a in &candidates {
        let v = eval(r, a);
        if v > best.1 {
            best = (a, v);
        }
    }
    let width = PI / FAN as f64;
    let (x, v) = crate::optimize::golden_section_max(|a| eval(r, a), best.0 - width, best.0 + width, 1e-10);
    best.1.max(v).max(eval(r, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_measure::{CustomProfile, Interpolation};

    pub(crate) fn cauchy() -> LevyMeasure {
        let c = CustomProfile::new(
            vec![1e-12, 1e12],
            vec![1e24 / PI, 1e-24 / PI],
            Interpolation::LogLinear,
            true,
        )
        .unwrap();
        LevyMeasure::uniform(1, RadialProfile::Custom(c), 2.0).unwrap()
    }

    #[test]
    fn cauchy_symbol_is_identity() {
        let t = SymbolTable::build(&cauchy()).unwrap();
        for &r in &[1e-3, 0.5, 1.0, 17.0, 3e4] {
            assert!((t.psi(r).unwrap() - r).abs() < 1e-7 * r, "{r}");
            assert!((t.psi_inverse(r).unwrap() - r).abs() < 1e-7 * r);
            assert!((t.h(1.0 / r).unwrap() - 1.0 / r).abs() < 1e-7 / r);
        }
    }

    #[test]
    fn cauchy_a1_constant() {
        let t = SymbolTable::build(&cauchy()).unwrap();
        let rep = t.check_a1(&[0.01, 0.1, 1.0, 10.0]).unwrap();
        for row in &rep.rows {
            assert!((row.normalized - 2.0).abs() < 1e-6, "{row:?}");
        }
        assert!(rep.pass);
    }

    #[test]
    fn psi_below_grid_is_an_error() {
        let t = SymbolTable::build(&cauchy()).unwrap();
        assert!(matches!(t.psi(1e-6), Err(LevyError::OutsideGrid { .. })));
        assert!(matches!(t.psi_inverse(1e9), Err(LevyError::ExtendFrequencyGrid { .. })));
    }
}
