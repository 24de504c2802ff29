//! Numerical integration: globally adaptive Gauss–Kronrod on panel lists and a
//! Chebyshev–Filon rule for cosine-weighted panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use crate::error::{LevyError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

/// Requested accuracy of an integral: stop once `err ≤ max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Tolerance { rel, abs: 0.0 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
}

/// One 21-point Kronrod evaluation on [a, b]; returns (value, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_asc = res_asc * half.abs();
    let res_abs = res_abs * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

const MAX_PIECES: usize = 6000;

/// Globally adaptive integration over consecutive panels `edges[i]..edges[i+1]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, edges: &[f64], tol: Tolerance) -> Result<Integral> {
    if edges.len() < 2 {
        return Ok(Integral {
            value: 0.0,
            abs_err: 0.0,
            converged: true,
        });
    }
    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut value = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (v, e) = gk21(f, a, b);
        value += v;
        err += e;
        heap.push(Piece { a, b, value: v, err: e });
    }
    let mut pieces = heap.len();
    while err > tol.target(value) && pieces < MAX_PIECES {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        value += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
        pieces += 1;
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    if !value.is_finite() {
        return Err(LevyError::Quadrature(format!(
            "non-finite integral over [{}, {}]",
            edges[0],
            edges[edges.len() - 1]
        )));
    }
    Ok(Integral {
        value,
        abs_err: err,
        converged: err <= tol.target(value),
    })
}

pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_panels(f, &[a, b], tol)
}

/// Panel edges between `a > 0` and `b` whose successive ratios do not exceed `ratio`.
pub fn geometric_edges(a: f64, b: f64, ratio: f64) -> Vec<f64> {
    debug_assert!(a > 0.0 && ratio > 1.0);
    if b <= a {
        return vec![a];
    }
    let n = ((b / a).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let step = (b / a).ln() / n as f64;
    let mut edges: Vec<f64> = (0..n).map(|i| a * (step * i as f64).exp()).collect();
    edges.push(b);
    edges
}

/// Chebyshev interpolation degree used by the cosine panels.
const CHEB_DEGREE: usize = 24;
/// Panels with a phase `ω·(b−a)/2` below this are integrated directly; the
/// forward moment recursion is stable once the phase exceeds the degree.
pub const FILON_MIN_PHASE: f64 = 24.0;

/// ∫_a^b cos(ω s) q(s) ds for smooth `q` on [a, b].
///
/// Long panels interpolate `q` at Chebyshev points and integrate the
/// interpolant against the cosine exactly; the interpolant is checked at
/// interleaved points and the panel is halved until it matches `q`.
pub fn cos_weighted<F: Fn(f64) -> f64>(q: &F, a: f64, b: f64, omega: f64, rel_tol: f64) -> Result<f64> {
    cos_weighted_rec(q, a, b, omega.abs(), rel_tol, 0)
}

fn cos_weighted_rec<F: Fn(f64) -> f64>(
    q: &F,
    a: f64,
    b: f64,
    omega: f64,
    rel_tol: f64,
    depth: u32,
) -> Result<f64> {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let phase = omega * half;
    if phase < FILON_MIN_PHASE {
        let g = |s: f64| (omega * s).cos() * q(s);
        let n = (phase / 3.0).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let size = (b - a) * q(center).abs();
        let r = integrate_panels(&g, &edges, Tolerance { rel: rel_tol, abs: rel_tol * size })?;
        return Ok(r.value);
    }
    let n = CHEB_DEGREE;
    // first-kind nodes stay strictly inside the panel
    let basis = chebyshev_basis();
    let values: Vec<f64> = basis.nodes.iter().map(|&v| q(center + half * v)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LevyError::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    let coeffs = basis.coefficients(&values);
    let qmax = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tail = coeffs[n - 1].abs() + coeffs[n].abs();
    if tail > rel_tol * qmax && depth < 40 {
        let left = cos_weighted_rec(q, a, center, omega, rel_tol, depth + 1)?;
        let right = cos_weighted_rec(q, center, b, omega, rel_tol, depth + 1)?;
        return Ok(left + right);
    }
    let moments = chebyshev_moments(phase, n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, m) in coeffs.iter().zip(moments.iter()) {
        acc += m * *c;
    }
    let rot = Complex64::new((omega * center).cos(), (omega * center).sin());
    Ok(half * (rot * acc).re)
}

struct ChebyshevBasis {
    /// First-kind nodes, which stay strictly inside the panel.
    nodes: Vec<f64>,
    /// cos(πk(j+½)/(n+1)), row-major in k.
    cosines: Vec<f64>,
}

impl ChebyshevBasis {
    fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        let m = values.len();
        let mut c: Vec<f64> = self
            .cosines
            .chunks_exact(m)
            .map(|row| 2.0 * row.iter().zip(values).map(|(a, b)| a * b).sum::<f64>() / m as f64)
            .collect();
        c[0] *= 0.5;
        c
    }
}

fn chebyshev_basis() -> &'static ChebyshevBasis {
    static BASIS: OnceLock<ChebyshevBasis> = OnceLock::new();
    BASIS.get_or_init(|| {
        let m = CHEB_DEGREE + 1;
        let angle = |k: usize, j: usize| std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64;
        ChebyshevBasis {
            nodes: (0..m).map(|j| angle(1, j).cos()).collect(),
            cosines: (0..m).flat_map(|k| (0..m).map(move |j| angle(k, j).cos())).collect(),
        }
    })
}

/// M_k(ω) = ∫_{-1}^{1} T_k(v) e^{iωv} dv for k = 0..=n by forward recursion
/// (stable for ω ≳ n).
fn chebyshev_moments(omega: f64, n: usize) -> Vec<Complex64> {
    let (s, c) = omega.sin_cos();
    let i_omega = Complex64::new(0.0, omega);
    // B_k = e^{iω} − (−1)^k e^{−iω}
    let b_even = Complex64::new(0.0, 2.0 * s);
    let b_odd = Complex64::new(2.0 * c, 0.0);
    let j0 = Complex64::new(2.0 * s / omega, 0.0);
    let j1 = (b_odd - j0) / i_omega;
    let j2 = (b_even - j1 * 2.0) / i_omega;
    let mut m = Vec::with_capacity(n + 1);
    m.push(j0);
    m.push(j1);
    m.push(j2 * 2.0 - j0);
    for k in 2..n {
        let kf = k as f64;
        let b = if (k + 1) % 2 == 0 { b_even } else { b_odd };
        let ratio = (kf + 1.0) / (kf - 1.0);
        let next = (b * (1.0 - ratio) + i_omega * m[k - 1] * ratio - m[k] * (2.0 * (kf + 1.0))) / i_omega;
        m.push(next);
    }
    m
}

/// Composite Simpson rule on uniformly spaced samples (odd sample count; a
/// trailing interval is handled with the trapezoid rule).
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut s = values[0] + values[m - 1];
    for (i, v) in values.iter().enumerate().take(m - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if m < n {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let (v, _) = gk21(&|x: f64| x.powi(7) - 3.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_endpoint_singularity() {
        let r = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::relative(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn cos_weighted_matches_closed_form() {
        // ∫_1^3 cos(ω s) s^{-2} ds against a dense direct integration
        for &omega in &[0.5, 20.0, 300.0, 5000.0] {
            let q = |s: f64| s.powi(-2);
            let got = cos_weighted(&q, 1.0, 3.0, omega, 1e-13).unwrap();
            let n = 400_000;
            let h = 2.0 / n as f64;
            let samples: Vec<f64> = (0..=n)
                .map(|i| {
                    let s = 1.0 + h * i as f64;
                    (omega * s).cos() / (s * s)
                })
                .collect();
            let reference = simpson_uniform(&samples, h);
            assert!((got - reference).abs() < 1e-9, "ω={omega}: {got} vs {reference}");
        }
    }

    #[test]
    fn simpson_cubic_exact() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&v, h) - 0.25).abs() < 1e-14);
    }
}
