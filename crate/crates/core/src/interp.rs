//! Cubic Hermite interpolation of positive data on a uniform grid in log r.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub ln_min: f64,
    pub step: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(min: f64, max: f64, per_decade: usize) -> Self {
        let decades = (max / min).log10();
        let n = (decades * per_decade as f64).round().max(1.0) as usize + 1;
        let ln_min = min.ln();
        LogGrid {
            ln_min,
            step: (max.ln() - ln_min) / (n - 1) as f64,
            n,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        (self.ln_min + self.step * i as f64).exp()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn min(&self) -> f64 {
        self.ln_min.exp()
    }

    pub fn max(&self) -> f64 {
        self.point(self.n - 1)
    }

    /// Cell index and local coordinate in [0, 1] for ln r inside the grid.
    fn locate(&self, u: f64) -> (usize, f64) {
        let x = (u - self.ln_min) / self.step;
        let i = (x.floor().max(0.0) as usize).min(self.n - 2);
        (i, x - i as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slopes {
    /// Three-point finite differences.
    Centered,
    /// Fritsch–Carlson limited slopes; preserves monotonicity of the data.
    Monotone,
}

/// v(r) tabulated as ln v against ln r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogTable {
    pub grid: LogGrid,
    ln_v: Vec<f64>,
    slope: Vec<f64>,
}

const FLOOR: f64 = 1e-300;

impl LogLogTable {
    pub fn new(grid: LogGrid, values: &[f64], slopes: Slopes) -> Self {
        assert_eq!(grid.n, values.len());
        let ln_v: Vec<f64> = values.iter().map(|v| v.max(FLOOR).ln()).collect();
        let n = ln_v.len();
        let h = grid.step;
        let delta: Vec<f64> = ln_v.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut m = vec![0.0; n];
        match slopes {
            Slopes::Centered => {
                m[0] = delta[0];
                m[n - 1] = delta[n - 2];
                for i in 1..n - 1 {
                    m[i] = 0.5 * (delta[i - 1] + delta[i]);
                }
            }
            Slopes::Monotone => {
                m[0] = delta[0];
                m[n - 1] = delta[n - 2];
                for i in 1..n - 1 {
                    m[i] = if delta[i - 1] * delta[i] <= 0.0 {
                        0.0
                    } else {
                        0.5 * (delta[i - 1] + delta[i])
                    };
                }
                for i in 0..n - 1 {
                    if delta[i] == 0.0 {
                        m[i] = 0.0;
                        m[i + 1] = 0.0;
                        continue;
                    }
                    let a = m[i] / delta[i];
                    let b = m[i + 1] / delta[i];
                    let s = a * a + b * b;
                    if s > 9.0 {
                        let tau = 3.0 / s.sqrt();
                        m[i] = tau * a * delta[i];
                        m[i + 1] = tau * b * delta[i];
                    }
                }
            }
        }
        LogLogTable { grid, ln_v, slope: m }
    }

    pub fn value_at(&self, i: usize) -> f64 {
        self.ln_v[i].exp()
    }

    pub fn values(&self) -> Vec<f64> {
        self.ln_v.iter().map(|v| v.exp()).collect()
    }

    pub fn contains(&self, r: f64) -> bool {
        let u = r.ln();
        u >= self.grid.ln_min - 1e-12 && u <= self.grid.ln_min + self.grid.step * (self.grid.n - 1) as f64 + 1e-12
    }

    /// Interpolated value; outside the grid the end slopes are continued as power laws.
    pub fn eval(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let u = r.ln();
        let g = &self.grid;
        let u_max = g.ln_min + g.step * (g.n - 1) as f64;
        if u <= g.ln_min {
            return (self.ln_v[0] + self.slope[0] * (u - g.ln_min)).exp();
        }
        if u >= u_max {
            let k = g.n - 1;
            return (self.ln_v[k] + self.slope[k] * (u - u_max)).exp();
        }
        let (i, t) = g.locate(u);
        let h = g.step;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (h00 * self.ln_v[i] + h10 * h * self.slope[i] + h01 * self.ln_v[i + 1] + h11 * h * self.slope[i + 1]).exp()
    }

    /// Local log-log slope at the lower end of the grid.
    pub fn lower_slope(&self) -> f64 {
        self.slope[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_is_reproduced() {
        let g = LogGrid::new(1e-2, 1e2, 20);
        let v: Vec<f64> = g.points().iter().map(|r| 3.0 * r.powf(1.7)).collect();
        let t = LogLogTable::new(g, &v, Slopes::Centered);
        for &r in &[1e-3, 0.0137, 1.0, 55.5, 300.0] {
            let exact = 3.0 * f64::powf(r, 1.7);
            assert!((t.eval(r) - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let g = LogGrid::new(1.0, 100.0, 4);
        let v: Vec<f64> = g.points().iter().map(|r| if *r < 10.0 { 1.0 } else { r * r }).collect();
        let t = LogLogTable::new(g, &v, Slopes::Monotone);
        let mut prev = 0.0;
        for i in 0..2000 {
            let r = 1.0 * (100f64).powf(i as f64 / 1999.0);
            let y = t.eval(r);
            assert!(y >= prev - 1e-14 * y);
            prev = y;
        }
    }
}
