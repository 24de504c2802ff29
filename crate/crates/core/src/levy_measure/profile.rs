//! Radial jump-intensity profiles q(s) and the one-dimensional integrals built on them.

use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::{self, Tolerance};

/// Behaviour of the high-intensity profile for s ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Continuation {
    #[default]
    Zero,
    /// q(s) = q(1⁻)·e^{−(s−1)}
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise power law between knots.
    #[default]
    LogLinear,
    /// Constant on each shell (s_i, s_{i+1}], taking the value at the right knot.
    Step,
}

/// Tabulated profile. Zero outside [s_0, s_n]; never extrapolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomProfile {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub monotone: bool,
    /// Log-log slopes of the segments, filled by `new`.
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl CustomProfile {
    pub fn new(s: Vec<f64>, q: Vec<f64>, interpolation: Interpolation, monotone: bool) -> Result<Self> {
        if s.len() != q.len() {
            return Err(LevyError::param("custom", "abscissa and values differ in length"));
        }
        if s.len() < 2 {
            return Err(LevyError::param("custom", "need at least two knots"));
        }
        if s[0] <= 0.0 || s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().any(|v| !v.is_finite()) {
            return Err(LevyError::param("custom", "knots must be positive, finite and strictly increasing"));
        }
        if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LevyError::param("custom", "densities must be finite and nonnegative"));
        }
        if interpolation == Interpolation::LogLinear && q.iter().any(|v| *v <= 0.0) {
            return Err(LevyError::param("custom", "log-linear interpolation needs positive knot values"));
        }
        let slopes = match interpolation {
            Interpolation::LogLinear => (0..s.len() - 1)
                .map(|i| (q[i + 1] / q[i]).ln() / (s[i + 1] / s[i]).ln())
                .collect(),
            Interpolation::Step => Vec::new(),
        };
        Ok(CustomProfile {
            s,
            q,
            interpolation,
            monotone,
            slopes,
        })
    }

    fn segment(&self, s: f64) -> Option<usize> {
        let n = self.s.len();
        if !(s > self.s[0] || (s == self.s[0] && self.interpolation == Interpolation::LogLinear)) || s > self.s[n - 1] {
            return None;
        }
        let idx = self.s.partition_point(|&k| k < s);
        Some(idx.clamp(1, n - 1) - 1)
    }

    fn exponent(&self, i: usize) -> f64 {
        match self.slopes.get(i) {
            Some(p) => *p,
            None => (self.q[i + 1] / self.q[i]).ln() / (self.s[i + 1] / self.s[i]).ln(),
        }
    }

    fn value(&self, s: f64) -> f64 {
        match self.segment(s) {
            None => 0.0,
            Some(i) => match self.interpolation {
                Interpolation::Step => self.q[i + 1],
                Interpolation::LogLinear => self.q[i] * (s / self.s[i]).powf(self.exponent(i)),
            },
        }
    }

    fn moment(&self, k: i32, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.s.len() - 1 {
            let lo = a.max(self.s[i]);
            let hi = b.min(self.s[i + 1]);
            if hi <= lo {
                continue;
            }
            let kf = k as f64;
            total += match self.interpolation {
                Interpolation::Step => self.q[i + 1] * power_integral(kf, lo, hi),
                Interpolation::LogLinear => {
                    let p = self.exponent(i);
                    self.q[i] * self.s[i].powf(-p) * power_integral(kf + p, lo, hi)
                }
            };
        }
        total
    }
}

/// ∫_a^b s^p ds for 0 < a < b (a = 0 allowed when p > −1).
fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    let e = p + 1.0;
    if e.abs() < 1e-12 {
        (b / a).ln()
    } else if e > 0.0 && a == 0.0 {
        b.powf(e) / e
    } else {
        // b^e − a^e written to keep accuracy when a ≈ b
        let r = (e * (b / a).ln()).exp_m1();
        a.powf(e) * r / e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RadialProfile {
    /// scale·s^{−1−α} on (0, r0).
    #[serde(rename = "truncated")]
    TruncatedStable {
        alpha: f64,
        r0: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// scale·s^{−1−α}(1+s)^κ e^{−m s^β}.
    #[serde(rename = "tempered")]
    TemperedStable {
        alpha: f64,
        #[serde(default)]
        kappa: f64,
        m: f64,
        beta: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// scale·s^{−3}[log(2/s)]^{−β} on (0, 1).
    #[serde(rename = "high_intensity")]
    HighIntensity {
        beta: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
        #[serde(default)]
        continuation: Continuation,
    },
    #[serde(rename = "custom")]
    Custom(CustomProfile),
}

fn unit_scale() -> f64 {
    1.0
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LevyError::param(field, format!("must be positive and finite, got {v}")))
    }
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::TruncatedStable { alpha, r0, scale } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(LevyError::param("alpha", "must lie in (0, 2)"));
                }
                positive("r0", *r0)?;
                positive("scale", *scale)
            }
            RadialProfile::TemperedStable { alpha, kappa, m, beta, scale } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(LevyError::param("alpha", "must lie in (0, 2)"));
                }
                if !kappa.is_finite() || *kappa > 1.0 + alpha {
                    return Err(LevyError::param("kappa", "must satisfy κ ≤ 1 + α"));
                }
                positive("m", *m)?;
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(LevyError::param("beta", "must lie in (0, 1]"));
                }
                positive("scale", *scale)
            }
            RadialProfile::HighIntensity { beta, scale, .. } => {
                if !(beta.is_finite() && *beta > 1.0) {
                    return Err(LevyError::param("beta", "must exceed 1"));
                }
                positive("scale", *scale)
            }
            RadialProfile::Custom(c) => {
                CustomProfile::new(c.s.clone(), c.q.clone(), c.interpolation, c.monotone).map(|_| ())
            }
        }
    }

    /// q(s); zero for s ≤ 0.
    pub fn density(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        match self {
            RadialProfile::TruncatedStable { alpha, r0, scale } => {
                if s < *r0 {
                    scale * s.powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            RadialProfile::TemperedStable { alpha, kappa, m, beta, scale } => {
                let lg = scale.ln() - (1.0 + alpha) * s.ln() + kappa * s.ln_1p() - m * s.powf(*beta);
                lg.exp()
            }
            RadialProfile::HighIntensity { beta, scale, continuation } => {
                if s < 1.0 {
                    scale * s.powi(-3) * (2.0 / s).ln().powf(-beta)
                } else {
                    match continuation {
                        Continuation::Zero => 0.0,
                        Continuation::Exponential => scale * 2f64.ln().powf(-beta) * (1.0 - s).exp(),
                    }
                }
            }
            RadialProfile::Custom(c) => c.value(s),
        }
    }

    /// Largest s with q(s) > 0 (exclusive bound), possibly infinite.
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::TruncatedStable { r0, .. } => *r0,
            RadialProfile::TemperedStable { .. } => f64::INFINITY,
            RadialProfile::HighIntensity { continuation, .. } => match continuation {
                Continuation::Zero => 1.0,
                Continuation::Exponential => f64::INFINITY,
            },
            RadialProfile::Custom(c) => *c.s.last().unwrap(),
        }
    }

    /// Smallest s with q(s) > 0.
    pub fn inner_radius(&self) -> f64 {
        match self {
            RadialProfile::Custom(c) => c.s[0],
            _ => 0.0,
        }
    }

    /// Points where q or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::TruncatedStable { r0, .. } => vec![*r0],
            RadialProfile::TemperedStable { .. } => vec![1.0],
            RadialProfile::HighIntensity { .. } => vec![1.0],
            RadialProfile::Custom(c) => c.s.clone(),
        }
    }

    /// Exponent e with q(s) ~ s^e as s → 0 (ignoring logarithmic factors).
    fn origin_exponent(&self) -> Option<f64> {
        match self {
            RadialProfile::TruncatedStable { alpha, .. } | RadialProfile::TemperedStable { alpha, .. } => {
                Some(-1.0 - alpha)
            }
            RadialProfile::HighIntensity { .. } => Some(-3.0),
            RadialProfile::Custom(_) => None,
        }
    }
}

const MOMENT_TOL: f64 = 1e-12;

/// A radial profile restricted to the window [lo, hi).
#[derive(Debug, Clone, Copy)]
pub struct Radial<'a> {
    pub profile: &'a RadialProfile,
    pub lo: f64,
    pub hi: f64,
}

impl<'a> Radial<'a> {
    pub fn new(profile: &'a RadialProfile, lo: f64, hi: f64) -> Self {
        Radial {
            profile,
            lo: lo.max(profile.inner_radius()),
            hi: hi.min(profile.support_radius()),
        }
    }

    pub fn q(&self, s: f64) -> f64 {
        if s >= self.lo && s < self.hi {
            self.profile.density(s)
        } else {
            0.0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Sorted panel edges covering [a, b] (b finite) including all breakpoints.
    pub fn edges(&self, a: f64, b: f64) -> Vec<f64> {
        let mut e = vec![a, b];
        for p in self.profile.breakpoints().into_iter().chain([self.lo, self.hi]) {
            if p > a && p < b {
                e.push(p);
            }
        }
        e.sort_by(|x, y| x.total_cmp(y));
        e.dedup();
        e
    }

    /// ∫_a^b s^k q(s) ds over the window (b may be infinite). Returns +∞ when
    /// the integral diverges at the origin.
    pub fn moment(&self, k: i32, a: f64, b: f64) -> Result<f64> {
        let a = a.max(self.lo).max(0.0);
        let b = b.min(self.hi);
        if !(b > a) {
            return Ok(0.0);
        }
        match self.profile {
            RadialProfile::TruncatedStable { alpha, scale, .. } => {
                let p = k as f64 - 1.0 - alpha;
                if a == 0.0 && p <= -1.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(scale * power_integral(p, a, b))
            }
            RadialProfile::Custom(c) => Ok(c.moment(k, a, b)),
            RadialProfile::HighIntensity { beta, scale, .. } if k == 2 && b <= 1.0 => {
                let la = if a == 0.0 { 0.0 } else { (2.0 / a).ln().powf(1.0 - beta) };
                let lb = (2.0 / b).ln().powf(1.0 - beta);
                Ok(scale * (lb - la) / (beta - 1.0))
            }
            RadialProfile::HighIntensity { .. } if a < 1.0 && b > 1.0 => {
                Ok(self.moment(k, a, 1.0)? + self.moment(k, 1.0, b)?)
            }
            _ => self.numeric_moment(k, a, b),
        }
    }

    fn numeric_moment(&self, k: i32, a: f64, b: f64) -> Result<f64> {
        let integrand = |s: f64| s.powi(k) * self.q(s);
        let mut remainder = 0.0;
        let mut lower = a;
        if a == 0.0 {
            let e0 = self.profile.origin_exponent().unwrap_or(0.0) + k as f64;
            if e0 <= -1.0 {
                return Ok(f64::INFINITY);
            }
            let top = if b.is_finite() { b.min(1.0) } else { 1.0 };
            lower = top * 1e-16;
            remainder = integrand(lower) * lower / (e0 + 1.0);
        }
        let upper = if b.is_finite() {
            b
        } else {
            self.decay_cutoff(lower.max(1.0), |s| s * integrand(s))?
        };
        if upper <= lower {
            return Ok(remainder);
        }
        let body = log_integral(&integrand, &self.edges(lower, upper), MOMENT_TOL)?;
        let v = body + remainder;
        if !v.is_finite() {
            return Err(LevyError::TailNotIntegrable { radius: a });
        }
        Ok(v)
    }

    /// A point beyond which the decaying function `g` (≈ s·integrand) is
    /// negligible against the integral accumulated up to it.
    fn decay_cutoff<G: Fn(f64) -> f64>(&self, start: f64, g: G) -> Result<f64> {
        let mut s = start;
        let mut peak = g(s).abs();
        for _ in 0..200 {
            s *= 2.0;
            let v = g(s).abs();
            peak = peak.max(v);
            if v <= 1e-18 * peak || v == 0.0 {
                return Ok(s);
            }
        }
        Err(LevyError::TailNotIntegrable { radius: start })
    }

    /// Φ_rad(ω) = ∫ (1 − cos ωs) q(s) ds over the window.
    pub fn phi(&self, omega: f64) -> Result<f64> {
        let omega = omega.abs();
        if omega == 0.0 || self.is_empty() {
            return Ok(0.0);
        }
        let (lo, hi) = (self.lo, self.hi);
        let s_series = (1e-4 / omega).min(hi);
        let mut total = 0.0;
        if s_series > lo {
            let w2 = omega * omega;
            total += 0.5 * w2 * self.moment(2, lo, s_series)? - w2 * w2 / 24.0 * self.moment(4, lo, s_series)?;
        }
        let s_osc = (8.0 * quadrature::FILON_MIN_PHASE / omega).min(hi);
        let start = s_series.max(lo);
        if s_osc > start {
            let f = |s: f64| {
                let h = (0.5 * omega * s).sin();
                2.0 * h * h * self.q(s)
            };
            total += log_integral(&f, &self.edges(start, s_osc), 1e-12)?;
        }
        if hi > s_osc {
            let s0 = s_osc.max(lo);
            let mass = self.moment(0, s0, hi)?;
            let top = if hi.is_finite() {
                hi
            } else {
                let floor = 1e-17 * mass;
                let mut s = s0.max(1.0);
                while s * self.q(s) > floor && s < 1e300 {
                    s *= 2.0;
                }
                s
            };
            total += mass - self.cos_integral(omega, s0, top)?;
        }
        Ok(total.max(0.0))
    }

    /// ∫_a^b cos(ωs) q(s) ds over the window with b finite.
    pub fn cos_integral(&self, omega: f64, a: f64, b: f64) -> Result<f64> {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if !(b > a) {
            return Ok(0.0);
        }
        let mut edges = self.edges(a, b);
        // geometric refinement so each panel sees a smooth power-law-like q
        let mut refined = Vec::with_capacity(edges.len() * 4);
        for w in edges.windows(2) {
            let (x, y) = (w[0], w[1]);
            refined.push(x);
            if x > 0.0 {
                let inner = quadrature::geometric_edges(x, y, 2.0);
                refined.extend_from_slice(&inner[1..inner.len() - 1]);
            }
        }
        refined.push(*edges.last().unwrap());
        edges = refined;
        let q = |s: f64| self.q(s);
        let mut total = 0.0;
        for w in edges.windows(2) {
            // sample interior points only so q is evaluated on one smooth piece
            total += quadrature::cos_weighted(&q, w[0], w[1], omega, 1e-12)?;
        }
        Ok(total)
    }

    /// K_rad(σ) = ∫ (cosh σs − 1) q(s) ds over the window; +∞ when it diverges.
    pub fn cosh_integral(&self, sigma: f64) -> Result<f64> {
        let sigma = sigma.abs();
        if sigma == 0.0 || self.is_empty() {
            return Ok(0.0);
        }
        if !self.hi.is_finite() && !self.has_exponential_moment(sigma) {
            return Ok(f64::INFINITY);
        }
        let (lo, hi) = (self.lo, self.hi);
        let s_series = (1e-4 / sigma).min(hi);
        let mut total = 0.0;
        if s_series > lo {
            let w2 = sigma * sigma;
            total += 0.5 * w2 * self.moment(2, lo, s_series)? + w2 * w2 / 24.0 * self.moment(4, lo, s_series)?;
        }
        let start = s_series.max(lo);
        let f = |s: f64| {
            let h = (0.5 * sigma * s).sinh();
            let v = 2.0 * h * h * self.q(s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        if hi.is_finite() {
            if hi > start {
                total += log_integral(&f, &self.edges(start, hi), 1e-12)?;
            }
        } else {
            // extend in doubling blocks until the last block is negligible
            let mut a = start;
            let mut b = (start * 2.0).max(1.0);
            loop {
                let part = log_integral(&f, &self.edges(a, b), 1e-12)?;
                total += part;
                if part <= 1e-16 * total || b > 1e12 {
                    break;
                }
                a = b;
                b *= 2.0;
            }
        }
        Ok(total)
    }

    /// Whether ∫ e^{σs} q(s) ds converges over an unbounded window.
    pub fn has_exponential_moment(&self, sigma: f64) -> bool {
        match self.profile {
            RadialProfile::TemperedStable { m, beta, .. } => *beta == 1.0 && sigma < *m,
            RadialProfile::HighIntensity { .. } => sigma < 1.0,
            _ => true,
        }
    }
}

/// ∫ f over the union of [e_i, e_{i+1}] with e_0 > 0, integrating in log s.
pub fn log_integral<F: Fn(f64) -> f64>(f: &F, edges: &[f64], rel: f64) -> Result<f64> {
    let mut u_edges = Vec::with_capacity(edges.len() * 4);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (ua, ub) = (a.ln(), b.ln());
        // initial panels of ratio ≤ 4; the adaptive pass refines oscillatory ones
        let n = ((ub - ua) / 4f64.ln()).ceil().max(1.0) as usize;
        for i in 0..n {
            u_edges.push(ua + (ub - ua) * i as f64 / n as f64);
        }
    }
    if let Some(&b) = edges.last() {
        u_edges.push(b.ln());
    }
    let g = |u: f64| {
        let s = u.exp();
        s * f(s)
    };
    let r = quadrature::integrate_panels(&g, &u_edges, Tolerance::relative(rel))?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated() -> RadialProfile {
        RadialProfile::TruncatedStable {
            alpha: 1.5,
            r0: 1.0,
            scale: 1.0,
        }
    }

    #[test]
    fn truncated_moments_closed_form() {
        let p = truncated();
        let r = Radial::new(&p, 0.0, f64::INFINITY);
        assert!((r.moment(2, 0.0, 10.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(r.moment(0, 0.0, 1.0).unwrap().is_infinite());
        let m = r.moment(0, 0.25, f64::INFINITY).unwrap();
        assert!((m - (2.0 / 3.0) * (8.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn numeric_moment_matches_gamma() {
        // ∫₀^∞ s^{2}·s^{-1.5}e^{-s} ds = Γ(1.5) = √π/2
        let p = RadialProfile::TemperedStable {
            alpha: 0.5,
            kappa: 0.0,
            m: 1.0,
            beta: 1.0,
            scale: 1.0,
        };
        let r = Radial::new(&p, 0.0, f64::INFINITY);
        let v = r.moment(2, 0.0, f64::INFINITY).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn high_intensity_second_moment() {
        let p = RadialProfile::HighIntensity {
            beta: 2.0,
            scale: 1.0,
            continuation: Continuation::Zero,
        };
        let r = Radial::new(&p, 0.0, f64::INFINITY);
        let v = r.moment(2, 0.0, 0.5).unwrap();
        assert!((v - 1.0 / 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn custom_step_is_right_closed() {
        let c = CustomProfile::new(vec![1.0, 2.0, 4.0], vec![9.0, 3.0, 1.0], Interpolation::Step, true).unwrap();
        let p = RadialProfile::Custom(c);
        assert_eq!(p.density(1.0), 0.0);
        assert_eq!(p.density(1.5), 3.0);
        assert_eq!(p.density(2.0), 3.0);
        assert_eq!(p.density(2.0 + 1e-12), 1.0);
        assert_eq!(p.density(4.5), 0.0);
    }

    #[test]
    fn phi_of_truncated_matches_direct_quadrature() {
        let p = truncated();
        let r = Radial::new(&p, 0.0, f64::INFINITY);
        for &w in &[1e-3, 0.7, 30.0, 400.0, 1e5] {
            let got = r.phi(w).unwrap();
            let f = |s: f64| {
                let h = (0.5 * w * s).sin();
                2.0 * h * h * s.powf(-2.5)
            };
            // dense reference on the oscillatory range
            let tiny = 1e-9 / w;
            let head = 0.5 * w * w * 2.0 * tiny.sqrt();
            let n = ((w * 1.0).max(1.0) * 40.0) as usize;
            let mut edges = quadrature::geometric_edges(tiny, 1.0, 1.1);
            let lin: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
            edges.extend(lin);
            edges.sort_by(|a, b| a.total_cmp(b));
            edges.dedup();
            let reference = quadrature::integrate_panels(&f, &edges, Tolerance::relative(1e-13)).unwrap().value + head;
            assert!((got - reference).abs() < 1e-9 * reference, "ω={w}: {got} vs {reference}");
        }
    }
}
