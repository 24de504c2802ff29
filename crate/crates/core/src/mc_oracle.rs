//! Monte Carlo cross-check: compound-Poisson jumps above ε plus a Gaussian in
//! place of the jumps below ε, compared with computed densities through a
//! Gaussian kernel density estimate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityGrid;
use crate::error::{LevyError, Result};
use crate::levy_measure::{AngularMeasure, LevyMeasure};
use crate::symbol::SymbolTable;

/// Samples per RNG stream; stream k covers samples [k·CHUNK, (k+1)·CHUNK).
pub const CHUNK: usize = 1 << 16;

const RADIUS_NODES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum Bandwidth {
    /// 0.9·min(sd, IQR/1.34)·n^{−1/5}, per coordinate.
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Small-jump cutoff; `None` means h(t)/10.
    pub epsilon: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub bandwidth: Bandwidth,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            epsilon: None,
            n: 1_000_000,
            seed: 0,
            bandwidth: Bandwidth::Silverman,
        }
    }
}

/// Inverse CDF of the jump radius on [ε, s_max]: F is tabulated at log-spaced
/// nodes and inverted by linear interpolation in log s.
#[derive(Debug, Clone)]
struct RadiusTable {
    log_s: Vec<f64>,
    cdf: Vec<f64>,
}

impl RadiusTable {
    fn new(nu: &LevyMeasure, eps: f64) -> Result<(Self, f64)> {
        let rad = nu.radial();
        let total = rad.moment(0, eps, f64::INFINITY)?;
        if !(total.is_finite()) {
            return Err(LevyError::TailNotIntegrable { radius: eps });
        }
        if total == 0.0 {
            return Ok((
                RadiusTable {
                    log_s: vec![eps.ln()],
                    cdf: vec![1.0],
                },
                0.0,
            ));
        }
        let top = if rad.hi.is_finite() {
            rad.hi
        } else {
            let mut s = eps.max(1.0);
            while rad.moment(0, s, f64::INFINITY)? > 1e-14 * total {
                s *= 2.0;
            }
            s
        };
        let (a, b) = (eps.ln(), top.ln());
        let log_s: Vec<f64> = (0..RADIUS_NODES).map(|i| a + (b - a) * i as f64 / (RADIUS_NODES - 1) as f64).collect();
        let pieces = log_s
            .par_windows(2)
            .map(|w| rad.moment(0, w[0].exp(), w[1].exp()))
            .collect::<Result<Vec<_>>>()?;
        let mut cdf = Vec::with_capacity(RADIUS_NODES);
        let mut acc = 0.0;
        cdf.push(0.0);
        for p in pieces {
            acc += p;
            cdf.push(acc);
        }
        let last = acc;
        for c in cdf.iter_mut() {
            *c /= last;
        }
        Ok((RadiusTable { log_s, cdf }, total))
    }

    fn radius(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        (self.log_s[i - 1] + w * (self.log_s[i] - self.log_s[i - 1])).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSummary {
    pub t: f64,
    pub epsilon: f64,
    /// t·ν(|y| ≥ ε).
    pub jump_rate: f64,
    /// Variance of the Gaussian substitute along the first axis.
    pub gaussian_variance: f64,
    /// t·∫_{|y|<ε} |y|³ ν(dy), the size of the substitution error.
    pub third_moment: f64,
}

/// Increment sampler for X_t.
#[derive(Debug, Clone)]
pub struct Sampler {
    d: usize,
    t: f64,
    eps: f64,
    /// Lower Cholesky factor of t·Σ(ε) (row-major d×d).
    chol: Vec<f64>,
    rate: f64,
    radii: RadiusTable,
    angular: AngularMeasure,
    third: f64,
}

impl Sampler {
    pub fn new(nu: &LevyMeasure, t: f64, eps: f64) -> Result<Self> {
        if !(t > 0.0) || !(eps > 0.0) {
            return Err(LevyError::param("epsilon", "t and ε must be positive"));
        }
        let d = nu.d;
        let rad = nu.radial();
        let s2 = rad.moment(2, 0.0, eps)?;
        if !s2.is_finite() {
            return Err(LevyError::InfiniteSecondMoment);
        }
        let cov: Vec<f64> = match (&nu.angular, d) {
            (AngularMeasure::Uniform { mass }, 1) => vec![mass * s2],
            (AngularMeasure::Uniform { mass }, _) => vec![mass * s2 / 2.0, 0.0, 0.0, mass * s2 / 2.0],
            (AngularMeasure::Atoms { atoms }, _) => {
                let mut c = vec![0.0; d * d];
                for a in atoms {
                    for i in 0..d {
                        for j in 0..d {
                            c[i * d + j] += a.weight * a.direction[i] * a.direction[j] * s2;
                        }
                    }
                }
                c
            }
        };
        let cov: Vec<f64> = cov.iter().map(|v| v * t).collect();
        let chol = match d {
            1 => vec![cov[0].sqrt()],
            _ => {
                let l00 = cov[0].sqrt();
                let l10 = if l00 > 0.0 { cov[2] / l00 } else { 0.0 };
                let l11 = (cov[3] - l10 * l10).max(0.0).sqrt();
                vec![l00, 0.0, l10, l11]
            }
        };
        let (radii, tail) = RadiusTable::new(nu, eps)?;
        Ok(Sampler {
            d,
            t,
            eps,
            chol,
            rate: t * nu.mass() * tail,
            radii,
            angular: nu.angular.clone(),
            third: t * nu.mass() * rad.moment(3, 0.0, eps)?,
        })
    }

    /// ε = h(t)/10 unless given.
    pub fn from_table(table: &SymbolTable, t: f64, eps: Option<f64>) -> Result<Self> {
        let eps = match eps {
            Some(e) => e,
            None => table.h(t)? / 10.0,
        };
        Self::new(table.measure(), t, eps)
    }

    pub fn summary(&self) -> SamplerSummary {
        SamplerSummary {
            t: self.t,
            epsilon: self.eps,
            jump_rate: self.rate,
            gaussian_variance: self.chol[0] * self.chol[0],
            third_moment: self.third,
        }
    }

    /// A jump radius from the normalized tail of ν beyond ε.
    pub fn jump_radius<R: Rng>(&self, rng: &mut R) -> f64 {
        self.radii.radius(rng.random::<f64>())
    }

    fn direction<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match (&self.angular, self.d) {
            (AngularMeasure::Uniform { .. }, 1) => out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 },
            (AngularMeasure::Uniform { .. }, _) => {
                let a = 2.0 * PI * rng.random::<f64>();
                out[0] = a.cos();
                out[1] = a.sin();
            }
            (AngularMeasure::Atoms { atoms }, _) => {
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = &atoms[atoms.len() - 1];
                for a in atoms {
                    if u < a.weight {
                        pick = a;
                        break;
                    }
                    u -= a.weight;
                }
                out.copy_from_slice(&pick.direction);
            }
        }
    }

    /// One draw of X_t written into `out` (length d).
    pub fn sample_increment<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let z: Vec<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..=i).map(|j| self.chol[i * self.d + j] * z[j]).sum();
        }
        let jumps = if self.rate > 0.0 {
            Poisson::new(self.rate).map(|p| p.sample(rng) as u64).unwrap_or(0)
        } else {
            0
        };
        let mut dir = vec![0.0; self.d];
        for _ in 0..jumps {
            let s = self.jump_radius(rng);
            self.direction(rng, &mut dir);
            for (o, e) in out.iter_mut().zip(&dir) {
                *o += s * e;
            }
        }
    }

    /// n draws, flattened row-major (n×d). Chunk k uses ChaCha8 stream k of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let d = self.d;
        let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
        let parts: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let m = CHUNK.min(n - k * CHUNK);
                let mut out = vec![0.0; m * d];
                for row in out.chunks_mut(d) {
                    self.sample_increment(&mut rng, row);
                }
                out
            })
            .collect();
        parts.concat()
    }

    /// Jump radii only, for checking the inverse CDF.
    pub fn sample_radii(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.jump_radius(&mut rng)).collect()
    }
}

/// sup_s |F_n(s) − F(s)| for the radii against an exact CDF.
pub fn ks_distance(samples: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Exact CDF of the jump radius: 1 − ν(|y| ≥ s)/ν(|y| ≥ ε).
pub fn radius_cdf(nu: &LevyMeasure, eps: f64) -> Result<impl Fn(f64) -> f64 + '_> {
    let rad = nu.radial();
    let total = rad.moment(0, eps, f64::INFINITY)?;
    Ok(move |s: f64| {
        if s <= eps {
            0.0
        } else {
            1.0 - nu.radial().moment(0, s, f64::INFINITY).unwrap_or(f64::NAN) / total
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    /// Standard error of the mean.
    pub mean_stderr: f64,
    /// Standard error of the second moment.
    pub second_stderr: f64,
}

/// Moments of the first coordinate.
pub fn sample_moments(samples: &[f64], d: usize) -> SampleMoments {
    let xs: Vec<f64> = samples.iter().step_by(d).copied().collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    SampleMoments {
        n: xs.len(),
        mean,
        second_moment: m2,
        mean_stderr: (m2 / n).sqrt(),
        second_stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    sorted[i] * (1.0 - w) + sorted[(i + 1).min(sorted.len() - 1)] * w
}

/// Silverman bandwidth of the first coordinate.
pub fn silverman(samples: &[f64], d: usize) -> f64 {
    let mut xs: Vec<f64> = samples.iter().step_by(d).copied().collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(&xs, 0.75) - quantile(&xs, 0.25);
    0.9 * sd.min(iqr / 1.34) * n.powf(-1.0 / (4.0 + d as f64))
}

/// Gaussian KDE of the samples at the points (x, 0, …).
pub struct Kde {
    d: usize,
    bandwidth: f64,
    /// Rows sorted by the first coordinate.
    rows: Vec<f64>,
}

impl Kde {
    pub fn new(samples: &[f64], d: usize, bandwidth: Bandwidth) -> Result<Self> {
        if samples.is_empty() {
            return Err(LevyError::EmptyRegion("no samples".into()));
        }
        let bw = match bandwidth {
            Bandwidth::Silverman => silverman(samples, d),
            Bandwidth::Fixed(b) => b,
        };
        if !(bw > 0.0) {
            return Err(LevyError::param("bandwidth", "must be positive"));
        }
        let mut idx: Vec<usize> = (0..samples.len() / d).collect();
        idx.sort_by(|&a, &b| samples[a * d].total_cmp(&samples[b * d]));
        let rows = idx.iter().flat_map(|&i| samples[i * d..(i + 1) * d].iter().copied()).collect();
        Ok(Kde { d, bandwidth: bw, rows })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = self.d;
        let h = self.bandwidth;
        let n = self.rows.len() / d;
        let first = |i: usize| self.rows[i * d];
        let lo = partition(n, |i| first(i) < x - 6.0 * h);
        let hi = partition(n, |i| first(i) <= x + 6.0 * h);
        let mut acc = 0.0;
        for i in lo..hi {
            let mut r2 = (first(i) - x).powi(2);
            for k in 1..d {
                r2 += self.rows[i * d + k].powi(2);
            }
            acc += (-0.5 * r2 / (h * h)).exp();
        }
        acc / (n as f64 * (2.0 * PI).powf(d as f64 / 2.0) * h.powi(d as i32))
    }
}

fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeComparison {
    pub n: usize,
    pub bandwidth: f64,
    pub region: f64,
    /// (x, kde, p)
    pub rows: Vec<(f64, f64, f64)>,
    pub sup_abs: f64,
    pub sup_rel: f64,
}

/// KDE against grid values at the grid nodes with |x| ≤ region, along the first axis.
pub fn kde_compare(samples: &[f64], grid: &DensityGrid, region: f64, bandwidth: Bandwidth) -> Result<KdeComparison> {
    let d = grid.d;
    let kde = Kde::new(samples, d, bandwidth)?;
    let dx = grid.dx();
    let m = ((region / dx).floor() as i64).min(grid.spec.n as i64);
    if region < 0.0 || m < 0 {
        return Err(LevyError::EmptyRegion("central region contains no grid nodes".into()));
    }
    let step = ((2 * m + 1) as usize).div_ceil(401).max(1) as i64;
    let nodes: Vec<i64> = (-m..=m).step_by(step as usize).collect();
    let rows: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|&j| {
            let x = j as f64 * dx;
            let p = if d == 1 { grid.at(j) } else { grid.at2(j, 0) };
            (x, kde.eval(x), p)
        })
        .collect();
    let sup_abs = rows.iter().map(|(_, k, p)| (k - p).abs()).fold(0.0, f64::max);
    let sup_rel = rows.iter().map(|(_, k, p)| (k - p).abs() / p).fold(0.0, f64::max);
    Ok(KdeComparison {
        n: samples.len() / d,
        bandwidth: kde.bandwidth(),
        region,
        rows,
        sup_abs,
        sup_rel,
    })
}

/// sup over `xs` of |KDE_A − KDE_B| for two independent samples of size n with
/// a fixed bandwidth; this shrinks like n^{−1/2}.
pub fn kde_self_discrepancy(sampler: &Sampler, n: usize, seed: u64, bandwidth: f64, xs: &[f64]) -> Result<f64> {
    let a = sampler.sample(n, seed);
    let b = sampler.sample(n, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let ka = Kde::new(&a, sampler.d, Bandwidth::Fixed(bandwidth))?;
    let kb = Kde::new(&b, sampler.d, Bandwidth::Fixed(bandwidth))?;
    Ok(xs.iter().map(|&x| (ka.eval(x) - kb.eval(x)).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::presets;

    #[test]
    fn eps_beyond_support_gives_pure_gaussian() {
        let nu = presets::truncated(1.5, 1.0).unwrap();
        let s = Sampler::new(&nu, 1.0, 2.0).unwrap();
        assert_eq!(s.summary().jump_rate, 0.0);
        assert!((s.summary().gaussian_variance - 4.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let nu = presets::truncated(1.5, 1.0).unwrap();
        let s = Sampler::new(&nu, 1.0, 0.1).unwrap();
        assert_eq!(s.sample(1000, 7), s.sample(1000, 7));
        assert_ne!(s.sample(1000, 7), s.sample(1000, 8));
    }

    #[test]
    fn kde_of_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let k = Kde::new(&xs, 1, Bandwidth::Silverman).unwrap();
        let exact = 1.0 / (2.0 * PI).sqrt();
        assert!((k.eval(0.0) / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn ks_of_exact_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_distance(&xs, &|x| x) - 0.0005).abs() < 1e-12);
    }
}
