use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{DensityGrid, GridSpec};
use crate::error::{LevyError, Result};
use crate::symbol::SymbolTable;

/// e^{−tΦ} below e^{−32} is dropped.
pub const CUTOFF_LEVEL: f64 = 32.0;
/// Largest N per axis accepted by the automatic grid.
pub const MAX_N_1D: usize = 1 << 21;
pub const MAX_N_2D: usize = 1 << 10;

/// Real parts of the length-2N transform Σ_k ã_k e^{iπjk/N} of the symmetric
/// extension of a_0..a_N, i.e. a_0 + (−1)^j a_N + 2Σ_{k<N} a_k cos(πjk/N).
pub(crate) fn cosine_synthesis(a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    let m = 2 * n;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|k| Complex64::new(if k <= n { a[k] } else { a[m - k] }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// 2-D inverse transform of a periodic array stored row-major in FFT order.
pub(crate) fn inverse_2d(values: &mut [Complex64], m: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m);
    for row in values.chunks_exact_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..m {
        for j in 0..m {
            col[j] = values[j * m + l];
        }
        fft.process(&mut col);
        for j in 0..m {
            values[j * m + l] = col[j];
        }
    }
}

pub(crate) fn forward_2d(values: &mut [Complex64], m: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    for row in values.chunks_exact_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..m {
        for j in 0..m {
            col[j] = values[j * m + l];
        }
        fft.process(&mut col);
        for j in 0..m {
            values[j * m + l] = col[j];
        }
    }
}

/// Signed frequency index of FFT slot k.
pub(crate) fn signed(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// p_t on the grid by inverting e^{−tΦ}.
pub fn density_fourier(table: &SymbolTable, t: f64, spec: GridSpec) -> Result<DensityGrid> {
    table.check_horizon(t)?;
    let d = table.measure().d;
    let dxi = spec.dxi();
    let n = spec.n;
    let cutoff = spec.cutoff();
    let (kstar, phi_star) = cutoff_index(table, t, spec)?;
    match d {
        1 => {
            let mut a = vec![0.0; n + 1];
            for (k, ak) in a.iter_mut().enumerate().take(kstar + 1) {
                *ak = (-t * table.phi(&[k as f64 * dxi])?).exp();
            }
            let y = cosine_synthesis(&a);
            let scale = dxi / (2.0 * PI);
            let values: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let eps_trunc = truncation_estimate(table, t, kstar as f64 * dxi, phi_star);
            let eps_alias = 2.0 * values[n].abs();
            Ok(DensityGrid {
                d,
                t,
                spec,
                values,
                cutoff: (kstar as f64 * dxi).min(cutoff),
                eps_trunc,
                eps_alias,
                eps_extra: 0.0,
            })
        }
        _ => {
            let m = 2 * n;
            let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
            let limit = kstar as f64 * dxi;
            for j in 0..m {
                let xj = signed(j, m) as f64 * dxi;
                for l in 0..=m / 2 {
                    let xl = l as f64 * dxi;
                    if xj.hypot(xl) > limit * (1.0 + 1e-12) {
                        continue;
                    }
                    let v = (-t * table.phi(&[xj, xl])?).exp();
                    buf[j * m + l] = Complex64::new(v, 0.0);
                    if l > 0 && l < m / 2 {
                        // Φ(ξ) = Φ(−ξ)
                        let jj = (m - j) % m;
                        buf[jj * m + (m - l)] = Complex64::new(v, 0.0);
                    }
                }
            }
            inverse_2d(&mut buf, m);
            let scale = (dxi / (2.0 * PI)).powi(2);
            let mut values: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
            symmetrize_2d(&mut values, m);
            let edge = (0..m).map(|l| values[n * m + l].abs()).fold(0.0, f64::max);
            Ok(DensityGrid {
                d,
                t,
                spec,
                values,
                cutoff: limit,
                eps_trunc: truncation_estimate(table, t, limit, phi_star),
                eps_alias: 2.0 * edge,
                eps_extra: 0.0,
            })
        }
    }
}

/// Enforces p(x) = p(−x) exactly on a 2-D periodic array.
pub(crate) fn symmetrize_2d(values: &mut [f64], m: usize) {
    for j in 0..m {
        for l in 0..m {
            let (jj, ll) = ((m - j) % m, (m - l) % m);
            let a = j * m + l;
            let b = jj * m + ll;
            if a < b {
                let v = 0.5 * (values[a] + values[b]);
                values[a] = v;
                values[b] = v;
            }
        }
    }
}

/// Index k* of the first frequency node with tΦ > 32 (all nodes beyond are
/// dropped) and Φ there. Errors when the grid cutoff is reached first.
fn cutoff_index(table: &SymbolTable, t: f64, spec: GridSpec) -> Result<(usize, f64)> {
    let dxi = spec.dxi();
    let r_max = table.grid().max();
    let probe = |r: f64| -> Result<f64> {
        match table.measure().d {
            1 => table.phi(&[r]),
            _ => {
                // smallest value over directions: the square cutoff must clear the level everywhere
                let mut m = f64::INFINITY;
                for i in 0..64 {
                    let a = PI * i as f64 / 64.0;
                    m = m.min(table.phi(&[r * a.cos(), r * a.sin()])?);
                }
                Ok(m)
            }
        }
    };
    for k in 1..=spec.n {
        let r = k as f64 * dxi;
        if r > r_max {
            break;
        }
        let phi = probe(r)?;
        if t * phi > CUTOFF_LEVEL {
            // Φ need not be monotone; keep scanning a little to be safe
            let mut ok = true;
            for kk in k + 1..=(k + k / 4 + 2).min(spec.n) {
                let rr = kk as f64 * dxi;
                if rr > r_max || t * probe(rr)? <= CUTOFF_LEVEL {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok((k, phi));
            }
        }
    }
    let needed = table
        .psi_inverse(CUTOFF_LEVEL / t)
        .unwrap_or(f64::INFINITY);
    Err(LevyError::IncreaseFrequencyRange {
        needed,
        available: spec.cutoff().min(r_max),
    })
}

/// Rough bound on (1/π)∫_Ξ^∞ e^{−tΦ} assuming Φ keeps growing like its local power law.
fn truncation_estimate(table: &SymbolTable, t: f64, xi: f64, phi: f64) -> f64 {
    let slope = {
        let a = table.phi_radial(xi * 0.99).or_else(|_| table.psi(xi * 0.99));
        match a {
            Ok(v) if v > 0.0 => ((phi / v).ln() / (1.0f64 / 0.99).ln()).max(0.1),
            _ => 1.0,
        }
    };
    let d = table.measure().d as i32;
    (-t * phi).exp() * xi.powi(d) / (PI.powi(d) * (t * phi * slope).max(1.0))
}

/// Grid sized from the symbol: Δx resolves the frequency where tΦ reaches 32·1.2,
/// and X grows until the concentration bound puts less than 1e−10 mass outside.
pub fn auto_grid(table: &SymbolTable, t: f64) -> Result<GridSpec> {
    let engine = super::concentration::ConcentrationEngine::new(table.measure(), &unit(table.measure().d))?;
    auto_grid_with(table, &engine, t)
}

/// `auto_grid` with a prebuilt engine along the first axis.
pub fn auto_grid_with(table: &SymbolTable, engine: &super::concentration::ConcentrationEngine, t: f64) -> Result<GridSpec> {
    let d = table.measure().d;
    let xi_needed = table.psi_inverse(1.2 * CUTOFF_LEVEL / t)?;
    let dx = PI / xi_needed;
    let h = table.h(t).unwrap_or(1.0);
    let max_n = if d == 1 { MAX_N_1D } else { MAX_N_2D };
    let p0_bound = {
        // p_t(0) ≤ (2π)^{-d} ∫ e^{−tΦ}; bounded by the A1 scale
        (h.powi(-(d as i32))).max(1.0)
    };
    let mut x = 10.0 * h;
    loop {
        let n = ((x / dx).ceil() as usize).next_power_of_two().max(16);
        if n >= max_n {
            log::warn!("grid for t = {t} capped at N = {max_n}; tail mass may exceed 1e-10");
            return GridSpec::new(max_n as f64 * dx, max_n);
        }
        let bound = engine.bound(t, x);
        let tail = p0_bound * (-bound.d2).exp() * x.powi(d as i32) * 4.0;
        if !bound.vacuous && tail < 1e-10 {
            return GridSpec::new(n as f64 * dx, n);
        }
        x *= 2.0;
    }
}

fn unit(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}
