use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::fourier::{cosine_synthesis, forward_2d, inverse_2d, signed, symmetrize_2d, CUTOFF_LEVEL};
use super::grid::{DensityGrid, GridSpec};
use crate::error::{LevyError, Result};
use crate::levy_measure::{AngularMeasure, FiniteMeasure, LevyMeasure};
use crate::quadrature::{integrate_panels, Tolerance};
use crate::symbol::SymbolTable;

/// Largest series remainder accepted by `density_split`.
pub const SERIES_TOL: f64 = 1e-10;

/// P(Poisson(μ) > n).
pub fn poisson_tail(mu: f64, n: usize) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    if (n as f64) < mu {
        // the tail is close to 1 here; the lower sum is the accurate one
        let lower: f64 = (0..=n)
            .map(|k| (-mu + k as f64 * mu.ln() - ln_factorial(k)).exp())
            .sum();
        return (1.0 - lower).clamp(0.0, 1.0);
    }
    // sum terms beyond n directly to avoid 1 − (1 − ε) cancellation
    let mut log_term = -mu + (n as f64 + 1.0) * mu.ln() - ln_factorial(n + 1);
    let mut total = 0.0;
    let mut k = n + 1;
    loop {
        let term = log_term.exp();
        total += term;
        if (k as f64) > mu && term < 1e-18 * total.max(1e-300) {
            break;
        }
        k += 1;
        log_term += mu.ln() - (k as f64).ln();
        if k > n + 100_000 {
            break;
        }
    }
    total.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest series order whose Poisson remainder is below `SERIES_TOL`.
pub fn required_order(lambda_t: f64) -> usize {
    let mut n = 0;
    while poisson_tail(lambda_t, n) >= SERIES_TOL {
        n += 1;
    }
    n
}

/// e^{−λt} Σ_{n≤N} (t·ν̂)^n / n!
fn truncated_exp(t_nuhat: f64, lambda_t: f64, order: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=order {
        term *= t_nuhat / n as f64;
        sum += term;
    }
    (-lambda_t).exp() * sum
}

/// p_t from the split ν = ν̃_r + ν̄_r: the small-jump exponent is inverted
/// together with the compound-Poisson series of the large jumps, truncated at
/// order N (the whole product is assembled in the frequency domain).
pub fn density_split(nu: &LevyMeasure, t: f64, r: f64, order: usize, spec: GridSpec) -> Result<DensityGrid> {
    if !(t > 0.0) {
        return Err(LevyError::param("t", "must be positive"));
    }
    let (small, big) = nu.split(r)?;
    let lambda_t = big.total * t;
    let remainder = poisson_tail(lambda_t, order);
    if remainder >= SERIES_TOL {
        return Err(LevyError::SeriesOrder {
            requested: order,
            required: required_order(lambda_t),
            lambda_t,
        });
    }
    let dxi = spec.dxi();
    let n = spec.n;
    match nu.d {
        1 => {
            let mass = small.mass();
            let rad = small.radial();
            let mut a = vec![0.0; n + 1];
            let mut kstar = None;
            for (k, ak) in a.iter_mut().enumerate() {
                let xi = k as f64 * dxi;
                let phi_small = mass * rad.phi(xi)?;
                if t * phi_small > CUTOFF_LEVEL + 2.0 * lambda_t {
                    kstar = Some(k);
                    break;
                }
                let nuhat = big.fourier(&[xi])?;
                *ak = (-t * phi_small).exp() * truncated_exp(t * nuhat, lambda_t, order);
            }
            let Some(kstar) = kstar else {
                return Err(LevyError::IncreaseFrequencyRange {
                    needed: f64::INFINITY,
                    available: spec.cutoff(),
                });
            };
            let y = cosine_synthesis(&a);
            let scale = dxi / (2.0 * PI);
            let values: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let eps_alias = 2.0 * values[n].abs();
            Ok(DensityGrid {
                d: 1,
                t,
                spec,
                values,
                cutoff: kstar as f64 * dxi,
                eps_trunc: (-CUTOFF_LEVEL).exp(),
                eps_alias,
                eps_extra: remainder,
            })
        }
        _ => {
            let table = SymbolTable::build(&small)?;
            let m = 2 * n;
            let max_rho = std::f64::consts::SQRT_2 * n as f64 * dxi;
            let nuhat = PlanarFourier::new(&big, dxi / 8.0, max_rho)?;
            let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
            let mut reached = false;
            for j in 0..m {
                let xj = signed(j, m) as f64 * dxi;
                for l in 0..m {
                    let xl = signed(l, m) as f64 * dxi;
                    let phi_small = table.phi(&[xj, xl])?;
                    if t * phi_small > CUTOFF_LEVEL + 2.0 * lambda_t {
                        reached = true;
                        continue;
                    }
                    let v = (-t * phi_small).exp() * truncated_exp(t * nuhat.eval(xj, xl), lambda_t, order);
                    buf[j * m + l] = Complex64::new(v, 0.0);
                }
            }
            if !reached {
                return Err(LevyError::IncreaseFrequencyRange {
                    needed: f64::INFINITY,
                    available: spec.cutoff(),
                });
            }
            inverse_2d(&mut buf, m);
            let scale = (dxi / (2.0 * PI)).powi(2);
            let mut values: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
            symmetrize_2d(&mut values, m);
            let edge = (0..m).map(|l| values[n * m + l].abs()).fold(0.0, f64::max);
            Ok(DensityGrid {
                d: 2,
                t,
                spec,
                values,
                cutoff: spec.cutoff(),
                eps_trunc: (-CUTOFF_LEVEL).exp(),
                eps_alias: 2.0 * edge,
                eps_extra: remainder,
            })
        }
    }
}

/// ν̂ for planar measures from a tabulated radial cosine transform
/// C(ω) = ∫ cos(ωs) q(s) ds on a uniform ω grid.
struct PlanarFourier {
    step: f64,
    c: Vec<f64>,
    angular: AngularMeasure,
    /// ν̂(ρ) on the same grid for rotation-invariant measures.
    iso: Option<Vec<f64>>,
}

impl PlanarFourier {
    fn new(big: &FiniteMeasure, step: f64, max: f64) -> Result<Self> {
        let count = (max / step).ceil() as usize + 4;
        let (lo, hi) = big.measure.window();
        let rad = big.measure.radial();
        let top = if hi.is_finite() {
            hi
        } else {
            let mut s = lo.max(1.0);
            while s * rad.q(s) > 1e-17 * (big.total / big.measure.mass()).max(1e-300) && s < 1e300 {
                s *= 2.0;
            }
            s
        };
        let c = (0..count)
            .map(|i| {
                let w = i as f64 * step;
                if big.total == 0.0 {
                    Ok(0.0)
                } else if w == 0.0 {
                    rad.moment(0, lo, hi)
                } else {
                    rad.cos_integral(w, lo, top)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = PlanarFourier {
            step,
            c,
            angular: big.measure.angular.clone(),
            iso: None,
        };
        if let AngularMeasure::Uniform { mass } = big.measure.angular {
            let iso = (0..count)
                .map(|i| {
                    let rho = i as f64 * step;
                    let f = |phi: f64| out.radial(rho * phi.cos());
                    let edges: Vec<f64> = (0..=16).map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / 16.0).collect();
                    Ok(2.0 * mass / PI * integrate_panels(&f, &edges, Tolerance::relative(1e-10))?.value)
                })
                .collect::<Result<Vec<_>>>()?;
            out.iso = Some(iso);
        }
        Ok(out)
    }

    /// Catmull–Rom interpolation of an even function tabulated at i·step.
    fn interp(values: &[f64], step: f64, w: f64) -> f64 {
        let u = w.abs() / step;
        let i = u.floor() as usize;
        let f = u - i as f64;
        let at = |k: i64| -> f64 { values[(k.unsigned_abs() as usize).min(values.len() - 1)] };
        let i = i as i64;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        p1 + 0.5
            * f
            * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }

    fn radial(&self, w: f64) -> f64 {
        Self::interp(&self.c, self.step, w)
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match (&self.iso, &self.angular) {
            (Some(iso), _) => Self::interp(iso, self.step, x.hypot(y)),
            (None, AngularMeasure::Atoms { atoms }) => atoms
                .iter()
                .map(|a| a.weight * self.radial(a.direction[0] * x + a.direction[1] * y))
                .sum(),
            (None, AngularMeasure::Uniform { .. }) => unreachable!("isotropic table is always built"),
        }
    }
}

/// ‖g1 ∗ g2 − g3‖_∞ with the convolution taken on the common periodic grid.
pub fn semigroup_residual(g1: &DensityGrid, g2: &DensityGrid, g3: &DensityGrid) -> Result<f64> {
    let same = |a: &DensityGrid, b: &DensityGrid| {
        a.d == b.d && a.spec.n == b.spec.n && (a.spec.half_width - b.spec.half_width).abs() <= 1e-12 * a.spec.half_width
    };
    if !same(g1, g2) || !same(g1, g3) {
        return Err(LevyError::IncompatibleGrids(format!(
            "grids (d, X, N) = ({}, {}, {}), ({}, {}, {}), ({}, {}, {})",
            g1.d, g1.spec.half_width, g1.spec.n, g2.d, g2.spec.half_width, g2.spec.n, g3.d, g3.spec.half_width, g3.spec.n
        )));
    }
    let conv = convolve(g1, g2);
    Ok(conv
        .iter()
        .zip(&g3.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Circular convolution Σ_k g1_k g2_{j−k} Δx^d.
pub fn convolve(g1: &DensityGrid, g2: &DensityGrid) -> Vec<f64> {
    let m = g1.spec.len();
    let to_c = |v: &[f64]| v.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>();
    let mut a = to_c(&g1.values);
    let mut b = to_c(&g2.values);
    let cell = g1.dx().powi(g1.d as i32);
    let total = a.len() as f64;
    if g1.d == 1 {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        planner.plan_fft_inverse(m).process(&mut a);
    } else {
        forward_2d(&mut a, m);
        forward_2d(&mut b, m);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        inverse_2d(&mut a, m);
    }
    a.iter().map(|c| c.re * cell / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_tail_small_cases() {
        assert!((poisson_tail(1.0, 0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(poisson_tail(0.0, 0), 0.0);
        let n = required_order(2.0);
        assert!(poisson_tail(2.0, n) < SERIES_TOL && poisson_tail(2.0, n - 1) >= SERIES_TOL);
    }
}
