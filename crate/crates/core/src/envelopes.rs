//! Closed-form two-sided bounds for p_t(x) and the regime partition of the
//! (t, x) plane for measures with bounded support.
//!
//! Every envelope takes its constants as arguments; nothing here picks values.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::levy_measure::LevyMeasure;
use crate::optimize::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NearDiagonal,
    LevyTail,
    Gaussian,
    ExpXLog,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::NearDiagonal, Regime::LevyTail, Regime::Gaussian, Regime::ExpXLog];

    pub fn name(self) -> &'static str {
        match self {
            Regime::NearDiagonal => "near_diagonal",
            Regime::LevyTail => "levy_tail",
            Regime::Gaussian => "gaussian",
            Regime::ExpXLog => "exp_xlog",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub eta_star: f64,
    /// C_* = η0·L0·m0/(4r0).
    pub c_star_lower: f64,
    /// C* = 2e·m0/r0.
    pub c_star_upper: f64,
    /// t0 = 4r0²/(η0·L0·m0).
    pub t0: f64,
    /// t1 = r0/C*.
    pub t1: f64,
    pub r0: f64,
    pub m0: f64,
    /// inf of the jump density on 0 < |y| < r0.
    pub kappa0: f64,
    pub theta: f64,
    pub l0: f64,
    /// η0 = θ ∧ L0/216 ∧ 1.
    pub eta0: f64,
}

impl RegimeThresholds {
    pub fn new(m0: f64, r0: f64, kappa0: f64, theta: f64, l0: f64, eta_star: f64) -> Result<Self> {
        for (name, v) in [("m0", m0), ("r0", r0), ("theta", theta), ("l0", l0), ("eta_star", eta_star)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LevyError::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        let eta0 = theta.min(l0 / 216.0).min(1.0);
        let c_star_upper = 2.0 * E * m0 / r0;
        let c_star_lower = eta0 * l0 * m0 / (4.0 * r0);
        Ok(RegimeThresholds {
            eta_star,
            c_star_lower,
            c_star_upper,
            t0: 4.0 * r0 * r0 / (eta0 * l0 * m0),
            t1: r0 / c_star_upper,
            r0,
            m0,
            kappa0,
            theta,
            l0,
            eta0,
        })
    }

    /// Thresholds for a measure with bounded support; θ, L0 and η* come from fits.
    pub fn for_measure(nu: &LevyMeasure, theta: f64, l0: f64, eta_star: f64) -> Result<Self> {
        let r0 = nu.support_radius();
        if !r0.is_finite() {
            return Err(LevyError::param("nu", "regime thresholds need bounded support"));
        }
        let m0 = nu.second_moment()?;
        Self::new(m0, r0, kappa0(nu, r0), theta, l0, eta_star)
    }
}

/// inf_{0<|y|<r0} of the Lebesgue density, sampled on a log grid down to 1e−8·r0.
pub fn kappa0(nu: &LevyMeasure, r0: f64) -> f64 {
    let n = 400;
    (0..=n)
        .map(|i| {
            let s = r0 * 10f64.powf(-8.0 * i as f64 / n as f64) * (1.0 - 1e-12);
            nu.lebesgue_density(s)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Regime of (t, |x|) given h(t). The exp-xlog predicate is tested before the
/// two middle cases; points on a boundary go to the smaller-|x| regime.
pub fn classify(th: &RegimeThresholds, h_t: f64, t: f64, x: f64) -> Regime {
    let x = x.abs();
    if x <= th.eta_star * h_t {
        Regime::NearDiagonal
    } else if x > th.r0.max(th.c_star_upper * t) {
        Regime::ExpXLog
    } else if t <= th.t1 {
        Regime::LevyTail
    } else {
        Regime::Gaussian
    }
}

/// Envelope value with its validity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Main1 {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// c1·h(t)^{−d}·exp(−c2|x|²/t), valid for t > c3, |x| ≤ c4·t.
pub fn env_main1(d: usize, h_t: f64, t: f64, x: f64, c: &Main1) -> Bound {
    let x = x.abs();
    Bound {
        value: c.c1 * h_t.powi(-(d as i32)) * (-c.c2 * x * x / t).exp(),
        valid: t > c.c3 && x <= c.c4 * t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Main2 {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub r0: f64,
}

/// c1·exp(−c2|x|·log(c3|x|/t)), valid for |x| ≥ max(r0, c4·t).
pub fn env_main2(t: f64, x: f64, c: &Main2) -> Bound {
    let x = x.abs();
    Bound {
        value: c.c1 * (-c.c2 * x * (c.c3 * x / t).ln()).exp(),
        valid: x >= c.r0.max(c.c4 * t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyLower {
    pub l1: f64,
    pub l2: f64,
    pub eta: f64,
}

/// L1·t·h(t)^{−d}·ν(B(x, L2·h(t))), valid for |x| ≥ η·h(t). Requires L2 < η.
pub fn env_levy_lower(nu: &LevyMeasure, h_t: f64, t: f64, x: &[f64], c: &LevyLower) -> Result<Bound> {
    if !(c.l2 > 0.0 && c.l2 < c.eta) {
        return Err(LevyError::param("l2", "need 0 < L2 < η"));
    }
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let valid = n >= c.eta * h_t;
    let mass = if valid { nu.ball_mass(x, c.l2 * h_t)? } else { f64::NAN };
    Ok(Bound {
        value: c.l1 * t * h_t.powi(-(nu.d as i32)) * mass,
        valid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop1 {
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// c1·h^{−d}·min{1, t·h^γ·f(|x|/4) + exp(−c2(|x|/h)·log(1 + c3|x|/h))}.
pub fn env_prop1_upper(d: usize, h_t: f64, t: f64, x: f64, f: &dyn Fn(f64) -> f64, t_p: f64, c: &Prop1) -> Bound {
    let u = x.abs() / h_t;
    let inner = t * h_t.powf(c.gamma) * f(x.abs() / 4.0) + (-c.c2 * u * (c.c3 * u).ln_1p()).exp();
    Bound {
        value: c.c1 * h_t.powi(-(d as i32)) * inner.min(1.0),
        valid: t > 0.0 && t < t_p,
    }
}

/// Constants of the four-regime sandwich for measures with bounded support.
/// Exponent constants are named as in the statement; `near_*`/`tail_*` are the
/// two-sided factors of the first two cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedConstants {
    pub near_low: f64,
    pub near_high: f64,
    pub tail_low: f64,
    pub tail_high: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichValue {
    pub lower: f64,
    pub upper: f64,
    pub regime: Regime,
}

/// Shapes of the four cases at unit prefactor: (lower, upper).
pub fn truncated_shapes(
    d: usize,
    h_t: f64,
    t: f64,
    x: f64,
    regime: Regime,
    f: &dyn Fn(f64) -> f64,
    c: &TruncatedConstants,
) -> (f64, f64) {
    let x = x.abs();
    let hd = h_t.powi(-(d as i32));
    match regime {
        Regime::NearDiagonal => (hd, hd),
        Regime::LevyTail => {
            let v = t * f(x);
            (v, v)
        }
        Regime::Gaussian => (hd * (-c.c2 * x * x / t).exp(), hd * (-c.c4 * x * x / t).exp()),
        Regime::ExpXLog => (
            (-c.c6 * x * (c.c7 * x / t).ln()).exp(),
            (-c.c9 * x * (c.c10 * x / t).ln()).exp(),
        ),
    }
}

/// Both sides of the four-case estimate at (t, x); `f` is the comparison
/// function with ν̄(y) ≍ f(|y|).
pub fn env_truncated(
    th: &RegimeThresholds,
    d: usize,
    h_t: f64,
    t: f64,
    x: f64,
    f: &dyn Fn(f64) -> f64,
    c: &TruncatedConstants,
) -> SandwichValue {
    let regime = classify(th, h_t, t, x);
    let (l, u) = truncated_shapes(d, h_t, t, x, regime, f, c);
    let (a, b) = match regime {
        Regime::NearDiagonal => (c.near_low, c.near_high),
        Regime::LevyTail => (c.tail_low, c.tail_high),
        Regime::Gaussian => (c.c1, c.c3),
        Regime::ExpXLog => (c.c5, c.c8),
    };
    SandwichValue {
        lower: a * l,
        upper: b * u,
        regime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedConstants {
    pub m: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub eta: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperedValue {
    pub upper: f64,
    /// Lower bound through the ball mass; NaN outside η√t ≤ |x| ≤ c6·t.
    pub lower_ball: f64,
    /// Lower bound in closed form for measures with a comparable density.
    pub lower_density: f64,
    pub valid: bool,
}

/// m·|x|^β/(2·4^β), the tail exponent of the upper bound.
pub fn tempered_tail_exponent(m: f64, beta: f64, x: f64) -> f64 {
    m * x.abs().powf(beta) / (2.0 * 4f64.powf(beta))
}

pub fn tempered_upper_shape(d: usize, t: f64, x: f64, c2: f64, m: f64, beta: f64) -> f64 {
    t.powf(-(d as f64) / 2.0) * ((-c2 * x * x / t).exp() + (-tempered_tail_exponent(m, beta, x)).exp())
}

pub fn tempered_lower_shape(d: usize, t: f64, x: f64, c8: f64, c9: f64, beta: f64) -> f64 {
    t.powf(-(d as f64) / 2.0) * ((-c8 * x * x / t).exp() + (-c9 * x.abs().powf(beta)).exp())
}

pub fn env_tempered(nu: &LevyMeasure, t: f64, x: &[f64], c: &TemperedConstants) -> Result<TemperedValue> {
    let d = nu.d;
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let in_ball_range = n >= c.eta * t.sqrt() && n <= c.c6 * t;
    let lower_ball = if in_ball_range {
        let mass = nu.ball_mass(x, c.c5 * t.sqrt())?;
        c.c3 * t.powf(-(d as f64) / 2.0) * ((-c.c4 * n * n / t).exp() + t * mass)
    } else {
        f64::NAN
    };
    Ok(TemperedValue {
        upper: c.c1 * tempered_upper_shape(d, t, n, c.c2, c.m, c.beta),
        lower_ball,
        lower_density: c.c7 * tempered_lower_shape(d, t, n, c.c8, c.c9, c.beta),
        valid: t > c.t0,
    })
}

/// |x|* > 0 where c·|x|²/t = m|x|^β/(2·4^β), by bisection.
pub fn tempered_crossover(c: f64, t: f64, m: f64, beta: f64) -> Result<f64> {
    if !(c > 0.0 && t > 0.0 && m > 0.0) || !(beta > 0.0 && beta < 2.0) {
        return Err(LevyError::param("crossover", "need c, t, m > 0 and β ∈ (0, 2)"));
    }
    // g(x) = log of the ratio; increasing in x since β < 2
    let g = |x: f64| (c * x * x / t).ln() - tempered_tail_exponent(m, beta, x).ln();
    let mut lo = 1e-300_f64.powf(0.1);
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    while g(lo) > 0.0 {
        lo /= 2.0;
    }
    bisect(g, lo, hi, 1e-15).ok_or_else(|| LevyError::param("crossover", "no sign change"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighIntensityConstants {
    pub beta: f64,
    pub c_low: f64,
    pub c7: f64,
    pub c_high: f64,
    pub c9: f64,
    pub c10: f64,
}

/// t/(|x|^{d+2}·log(2/|x|)^β).
pub fn high_intensity_levy_term(d: usize, t: f64, x: f64, beta: f64) -> f64 {
    let x = x.abs();
    t / (x.powi(d as i32 + 2) * (2.0 / x).ln().powf(beta))
}

/// t^{−d/2}·log(2/t)^{d(β−1)/2}.
pub fn high_intensity_cap(d: usize, t: f64, beta: f64) -> f64 {
    let df = d as f64;
    t.powf(-df / 2.0) * (2.0 / t).ln().powf(df * (beta - 1.0) / 2.0)
}

/// Lower and upper shapes at unit prefactor.
pub fn high_intensity_shapes(d: usize, h_t: f64, t: f64, x: f64, c: &HighIntensityConstants) -> (f64, f64) {
    let x = x.abs();
    let cap = high_intensity_cap(d, t, c.beta);
    let levy = if x == 0.0 {
        f64::INFINITY
    } else {
        high_intensity_levy_term(d, t, x, c.beta)
    };
    let hd = h_t.powi(-(d as i32));
    let u = x / h_t;
    let lower = cap.min(levy + hd * (-c.c7 * u * u).exp());
    let upper = cap.min(levy + hd * (-c.c9 * u * (c.c10 * u).ln_1p()).exp());
    (lower, upper)
}

pub fn env_high_intensity(d: usize, h_t: f64, t: f64, x: f64, c: &HighIntensityConstants) -> (Bound, Bound) {
    let (l, u) = high_intensity_shapes(d, h_t, t, x, c);
    let valid = x.abs() < 1.0 && t < 1.0;
    (
        Bound {
            value: c.c_low * l,
            valid,
        },
        Bound {
            value: c.c_high * u,
            valid,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thresholds() -> RegimeThresholds {
        RegimeThresholds::new(4.0, 1.0, 1.0, 0.5, 0.3, 0.5).unwrap()
    }

    #[test]
    fn threshold_identities() {
        let th = thresholds();
        assert_eq!(th.c_star_upper, 2.0 * E * 4.0);
        assert!((th.t1 * th.c_star_upper - th.r0).abs() < 1e-15);
        assert!((th.t0 * th.c_star_lower - th.r0).abs() < 1e-14);
        assert_eq!(th.eta0, 0.3 / 216.0);
    }

    #[test]
    fn classify_cases() {
        let th = thresholds();
        let h = 0.2;
        assert_eq!(classify(&th, h, 0.01, 0.0), Regime::NearDiagonal);
        assert_eq!(classify(&th, h, 0.01, 0.1), Regime::NearDiagonal);
        assert_eq!(classify(&th, h, 0.01, 0.5), Regime::LevyTail);
        assert_eq!(classify(&th, h, 0.01, 1.0), Regime::LevyTail);
        assert_eq!(classify(&th, h, 0.01, 1.5), Regime::ExpXLog);
        assert_eq!(classify(&th, h, 1.0, 5.0), Regime::Gaussian);
        assert_eq!(classify(&th, h, 1.0, 30.0), Regime::ExpXLog);
    }

    #[test]
    fn main1_at_origin() {
        let c = Main1 {
            c1: 0.7,
            c2: 1.0,
            c3: 0.0,
            c4: 1.0,
        };
        let b = env_main1(1, 2.0, 1.0, 0.0, &c);
        assert_eq!(b.value, 0.35);
        assert!(b.valid);
        let b1 = env_main1(1, 2.0, 1.0, 0.3, &c);
        let b2 = env_main1(1, 2.0, 1.0, 0.6, &c);
        let deficit = |b: Bound| (0.35f64 / b.value).ln();
        assert!((deficit(b2) / deficit(b1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn crossover_matches_closed_form() {
        for &(c, t, m, beta) in &[(0.1, 5.0, 1.0, 1.0), (0.3, 20.0, 2.0, 0.5), (1.0, 0.1, 1.0, 0.8)] {
            let x = tempered_crossover(c, t, m, beta).unwrap();
            let exact = (m * t / (2.0 * 4f64.powf(beta) * c)).powf(1.0 / (2.0 - beta));
            assert!((x - exact).abs() < 1e-12 * exact, "{x} vs {exact}");
        }
    }

    #[test]
    fn prop1_saturates_at_origin() {
        let c = Prop1 {
            gamma: 1.0,
            c1: 2.0,
            c2: 1.0,
            c3: 1.0,
        };
        let f = |s: f64| s.powf(-2.5);
        let b = env_prop1_upper(1, 0.5, 1.0, 0.0, &f, f64::INFINITY, &c);
        assert_eq!(b.value, 2.0 * 2.0);
    }

    #[test]
    fn high_intensity_levy_branch_is_linear_in_t() {
        let a = high_intensity_levy_term(1, 1e-3, 0.3, 2.0);
        let b = high_intensity_levy_term(1, 2e-3, 0.3, 2.0);
        assert!((b / a - 2.0).abs() < 1e-14);
    }
}
