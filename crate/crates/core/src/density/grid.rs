use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};

/// Spatial grid x_j = j·Δx, j = −N..N−1, Δx = X/N, treated as periodic with period 2X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) || n < 4 {
            return Err(LevyError::param("grid", "need X > 0 and N ≥ 4"));
        }
        Ok(GridSpec { half_width, n })
    }

    pub fn dx(&self) -> f64 {
        self.half_width / self.n as f64
    }

    /// Frequency step π/X.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest frequency π/Δx resolved by the grid.
    pub fn cutoff(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// p_t sampled on a periodic grid, stored in FFT order along each axis
/// (index j ≥ N stands for j − 2N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub d: usize,
    pub t: f64,
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Frequency beyond which e^{−tΦ} was dropped.
    pub cutoff: f64,
    /// Bound on the dropped high-frequency part of the inversion integral.
    pub eps_trunc: f64,
    /// Mass-wrapping estimate 2·p(X) (per axis).
    pub eps_alias: f64,
    /// Further error attached by the construction (e.g. a series remainder).
    pub eps_extra: f64,
}

impl DensityGrid {
    pub fn dx(&self) -> f64 {
        self.spec.dx()
    }

    fn wrap(&self, j: i64) -> usize {
        let m = self.spec.len() as i64;
        j.rem_euclid(m) as usize
    }

    /// Value at signed index j (d = 1).
    pub fn at(&self, j: i64) -> f64 {
        self.values[self.wrap(j)]
    }

    /// Value at signed indices (j, l) (d = 2).
    pub fn at2(&self, j: i64, l: i64) -> f64 {
        let m = self.spec.len();
        self.values[self.wrap(j) * m + self.wrap(l)]
    }

    pub fn p0(&self) -> f64 {
        self.values[0]
    }

    /// Σ p Δx^d over the periodic cell.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx().powi(self.d as i32)
    }

    /// (x_j, p_j) for j = −N..N in increasing x (d = 1; endpoint ±X included).
    pub fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.spec.n as i64;
        let dx = self.dx();
        (-n..=n).map(|j| (j as f64 * dx, self.at(j))).unzip()
    }

    /// Piecewise-linear (d = 1) or bilinear (d = 2) interpolation; zero outside [−X, X]^d.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let dx = self.dx();
        let lim = self.spec.half_width;
        if x.iter().any(|v| v.abs() > lim) {
            return 0.0;
        }
        match self.d {
            1 => {
                let u = x[0] / dx;
                let j = u.floor();
                let w = u - j;
                let j = j as i64;
                (1.0 - w) * self.at(j) + w * self.at(j + 1)
            }
            _ => {
                let (u, v) = (x[0] / dx, x[1] / dx);
                let (j, l) = (u.floor(), v.floor());
                let (a, b) = (u - j, v - l);
                let (j, l) = (j as i64, l as i64);
                (1.0 - a) * (1.0 - b) * self.at2(j, l)
                    + a * (1.0 - b) * self.at2(j + 1, l)
                    + (1.0 - a) * b * self.at2(j, l + 1)
                    + a * b * self.at2(j + 1, l + 1)
            }
        }
    }

    /// Certified-from-below infimum of p over the closed ball B(c, r): the
    /// smallest node value among cells meeting the ball, lowered by the
    /// piecewise-linear interpolation error bound max|Δ²p|/8 over those cells.
    pub fn inf_over_ball(&self, c: &[f64], r: f64) -> f64 {
        let dx = self.dx();
        let n = self.spec.n as i64;
        let range = |center: f64| {
            let lo = ((center - r) / dx).floor() as i64;
            let hi = ((center + r) / dx).ceil() as i64;
            (lo, hi)
        };
        let outside = |j: i64| j < -n || j > n;
        match self.d {
            1 => {
                let (lo, hi) = range(c[0]);
                if outside(lo) || outside(hi) {
                    return 0.0;
                }
                let mut m = f64::INFINITY;
                let mut curv = 0.0_f64;
                for j in lo..=hi {
                    m = m.min(self.at(j));
                    curv = curv.max((self.at(j - 1) - 2.0 * self.at(j) + self.at(j + 1)).abs());
                }
                m - curv / 8.0
            }
            _ => {
                let (jl, jh) = range(c[0]);
                let (ll, lh) = range(c[1]);
                if outside(jl) || outside(jh) || outside(ll) || outside(lh) {
                    return 0.0;
                }
                let mut m = f64::INFINITY;
                let mut curv = 0.0_f64;
                for j in jl..=jh {
                    for l in ll..=lh {
                        // skip nodes whose cells cannot meet the ball
                        let nx = ((j as f64 * dx - c[0]).abs() - dx).max(0.0);
                        let ny = ((l as f64 * dx - c[1]).abs() - dx).max(0.0);
                        if nx * nx + ny * ny > r * r {
                            continue;
                        }
                        let v = self.at2(j, l);
                        m = m.min(v);
                        let cx = (self.at2(j - 1, l) - 2.0 * v + self.at2(j + 1, l)).abs();
                        let cy = (self.at2(j, l - 1) - 2.0 * v + self.at2(j, l + 1)).abs();
                        curv = curv.max(cx + cy);
                    }
                }
                m - curv / 8.0
            }
        }
    }

    /// Checks the grid invariants; returns a list of violated ones.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            out.push(format!("negative value {min:e}"));
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > 1e-6 {
            out.push(format!("mass {mass}"));
        }
        let p0 = self.p0();
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max > p0 * (1.0 + 1e-12) + 1e-15 {
            out.push(format!("max {max} exceeds p(0) = {p0}"));
        }
        out
    }
}
