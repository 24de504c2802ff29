//! Fitting of the existential constants in the two-sided bounds, certified
//! pointwise checks, and report emission.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{
    auto_grid_with, chain_length_gaussian, chaining_lower, default_rho, density_fourier, ConcentrationEngine,
    DensityGrid, GridSpec,
};
use crate::envelopes::{
    classify, high_intensity_shapes, tempered_lower_shape, tempered_tail_exponent, tempered_upper_shape,
    truncated_shapes, HighIntensityConstants, Regime, RegimeThresholds, TruncatedConstants,
};
use crate::error::{LevyError, Result};
use crate::levy_measure::{doubling_check, DoublingReport, LevyMeasure, RadialProfile};
use crate::optimize::golden_section_min;
use crate::symbol::SymbolTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Largest accepted ratio spread.
    pub ceiling: f64,
    /// Relative part of the noise floor, in units of p_t(0).
    pub floor_rel: f64,
    /// Step of the downward θ scan.
    pub theta_factor: f64,
    pub theta_min: f64,
    /// Cap on sampled x-nodes per time.
    pub max_points_per_t: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ceiling: 100.0,
            floor_rel: 1e-13,
            theta_factor: 0.9,
            theta_min: 1e-3,
            max_points_per_t: 600,
        }
    }
}

/// One density sample; `x` is the distance from the origin along the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub h: f64,
    pub d: usize,
    /// Slot for per-point precomputed data (e.g. a ball mass).
    pub aux: f64,
}

/// Density samples over a time grid, with the points under the noise floor removed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySet {
    pub d: usize,
    pub points: Vec<Point>,
    pub excluded: usize,
    pub times: Vec<f64>,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub x_max: f64,
    pub n_points: usize,
    pub excluded: usize,
}

/// Densities at the given times, on automatic grids widened to at least `min_half_width`.
pub fn density_grids(table: &SymbolTable, times: &[f64], min_half_width: f64) -> Result<Vec<DensityGrid>> {
    let d = table.measure().d;
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    let engine = ConcentrationEngine::new(table.measure(), &e)?;
    times
        .par_iter()
        .map(|&t| {
            table.check_horizon(t)?;
            let spec = widen(auto_grid_with(table, &engine, t)?, min_half_width)?;
            density_fourier(table, t, spec)
        })
        .collect()
}

/// Grids for fitting: each is doubled in width (same Δx) until the aliasing
/// estimate drops below `floor_rel·p_t(0)`, within the size cap.
pub fn fit_grids(table: &SymbolTable, times: &[f64], min_half_width: f64, cfg: &FitConfig) -> Result<Vec<DensityGrid>> {
    let first = density_grids(table, times, min_half_width)?;
    let cap = if table.measure().d == 1 { 1 << 21 } else { 1 << 10 };
    first
        .into_par_iter()
        .map(|mut g| {
            while g.eps_alias > cfg.floor_rel * g.p0() && 2 * g.spec.n <= cap {
                let spec = GridSpec::new(2.0 * g.spec.half_width, 2 * g.spec.n)?;
                g = density_fourier(table, g.t, spec)?;
            }
            Ok(g)
        })
        .collect()
}

fn widen(spec: GridSpec, min_half_width: f64) -> Result<GridSpec> {
    if spec.half_width >= min_half_width {
        return Ok(spec);
    }
    let dx = spec.dx();
    let n = ((min_half_width / dx).ceil() as usize).next_power_of_two();
    GridSpec::new(n as f64 * dx, n)
}

/// Samples must exceed the noise floor by this factor to enter a fit.
pub const FLOOR_MARGIN: f64 = 10.0;

/// max(1e−300, floor_rel·p_t(0) + ε_trunc + ε_alias, max |p| on |x| ≥ X/2,
/// max(−p)). The last two measure the numerical noise on the grid itself: the
/// density is nonnegative, and negligible far out on widened grids.
pub fn noise_floor(g: &DensityGrid, cfg: &FitConfig) -> f64 {
    let n = g.spec.n as i64;
    let outer = match g.d {
        1 => (n / 2..=n).map(|j| g.at(j).abs()).fold(0.0, f64::max),
        _ => (n / 2..=n).map(|j| g.at2(j, 0).abs().max(g.at2(0, j).abs())).fold(0.0, f64::max),
    };
    let negative = g.values.iter().fold(0.0_f64, |m, v| m.max(-v));
    (cfg.floor_rel * g.p0() + g.eps_trunc + g.eps_alias)
        .max(outer)
        .max(negative)
        .max(1e-300)
}

/// Samples 0 ≤ x ≤ x_max from each grid; nodes within 2h(t) are kept
/// densely, the rest log-spaced up to `max_points_per_t`.
pub fn collect(table: &SymbolTable, grids: &[DensityGrid], x_max: f64, cfg: &FitConfig) -> Result<DensitySet> {
    let d = table.measure().d;
    let mut points = Vec::new();
    let mut excluded = 0;
    for g in grids {
        if g.d != d {
            return Err(LevyError::IncompatibleGrids("grid dimension differs from the measure".into()));
        }
        let h = table.h(g.t)?;
        let dx = g.dx();
        let last = ((x_max / dx).floor() as usize).min(g.spec.n);
        let dense = ((2.0 * h / dx).ceil() as usize).min(cfg.max_points_per_t / 3).min(last);
        let budget = cfg.max_points_per_t - cfg.max_points_per_t / 3;
        let floor = FLOOR_MARGIN * noise_floor(g, cfg);
        // log-spaced node indices beyond the dense block
        let mut nodes: Vec<usize> = (0..=dense).collect();
        if last > dense {
            let (a, b) = (((dense + 1) as f64).ln(), (last as f64).ln());
            for i in 0..=budget {
                let j = (a + (b - a) * i as f64 / budget as f64).exp().round() as usize;
                if j > *nodes.last().unwrap() && j <= last {
                    nodes.push(j);
                }
            }
        }
        for j in nodes {
            let p = if d == 1 { g.at(j as i64) } else { g.at2(j as i64, 0) };
            if p > floor {
                points.push(Point {
                    t: g.t,
                    x: j as f64 * dx,
                    p,
                    h,
                    d,
                    aux: f64::NAN,
                });
            } else {
                excluded += 1;
            }
        }
    }
    if excluded > 0 {
        log::info!("{excluded} samples below the noise floor excluded");
    }
    Ok(DensitySet {
        d,
        points,
        excluded,
        times: grids.iter().map(|g| g.t).collect(),
        x_max,
    })
}

impl DensitySet {
    fn summary(&self, n_points: usize) -> GridSummary {
        GridSummary {
            t_min: self.times.iter().cloned().fold(f64::INFINITY, f64::min),
            t_max: self.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            n_t: self.times.len(),
            x_max: self.x_max,
            n_points,
            excluded: self.excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub envelope: String,
    pub regime: Option<Regime>,
    pub grid: GridSummary,
    /// inf p/S over the region, and its (t, |x|).
    pub ratio_inf: f64,
    pub arg_inf: (f64, f64),
    pub ratio_sup: f64,
    pub arg_sup: (f64, f64),
    pub constants: BTreeMap<String, f64>,
    /// Largest max/min of the per-time constants over any window [t, 10t].
    pub stability: f64,
    /// ratio_sup / ratio_inf.
    pub spread: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
    /// Same shape on both sides; the global spread must stay under the ceiling.
    Both,
}

/// A fitted exponent searched on [lo, hi] in log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl Exponent {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Exponent {
            name: name.into(),
            lo,
            hi,
        }
    }
}

type ShapeFn<'a> = Box<dyn Fn(&Point, &[f64]) -> f64 + Sync + 'a>;
type RegionFn<'a> = Box<dyn Fn(&Point) -> bool + Sync + 'a>;

/// Envelope shape at unit prefactor, with its region and free exponents.
pub struct ShapeSpec<'a> {
    pub name: String,
    pub regime: Option<Regime>,
    pub side: Side,
    pub shape: ShapeFn<'a>,
    pub region: RegionFn<'a>,
    pub exponents: Vec<Exponent>,
    /// Recorded constants that enter the shape as given.
    pub fixed: Vec<(String, f64)>,
    /// Names of the fitted prefactors (lower, upper).
    pub prefactors: (String, String),
}

struct Ratios {
    /// (t, x, p/S)
    rows: Vec<(f64, f64, f64)>,
    dropped: usize,
}

fn ratios(points: &[&Point], spec: &ShapeSpec, params: &[f64]) -> Ratios {
    let mut rows = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for p in points {
        let s = (spec.shape)(p, params);
        let r = p.p / s;
        if s > 0.0 && r.is_finite() && r > 0.0 {
            rows.push((p.t, p.x, r));
        } else {
            dropped += 1;
        }
    }
    Ratios { rows, dropped }
}

/// Largest log-spread of p/S among points sharing a decade of t.
fn decade_spread(r: &Ratios) -> f64 {
    let mut bins: HashMap<i64, (f64, f64)> = HashMap::new();
    for &(t, _, v) in &r.rows {
        let e = bins.entry(t.log10().floor() as i64).or_insert((f64::INFINITY, 0.0));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    if bins.is_empty() {
        return f64::INFINITY;
    }
    bins.values().map(|(lo, hi)| (hi / lo).ln()).fold(0.0, f64::max)
}

/// Per-time inf and sup of p/S, keyed by the bits of t.
fn per_t(r: &Ratios) -> (BTreeMap<u64, f64>, BTreeMap<u64, f64>) {
    let mut inf: BTreeMap<u64, f64> = BTreeMap::new();
    let mut sup: BTreeMap<u64, f64> = BTreeMap::new();
    for &(t, _, v) in &r.rows {
        let e = inf.entry(t.to_bits()).or_insert(f64::INFINITY);
        *e = e.min(v);
        let e = sup.entry(t.to_bits()).or_insert(0.0);
        *e = e.max(v);
    }
    (inf, sup)
}

fn stability(r: &Ratios, side: Side) -> f64 {
    let (inf, sup) = per_t(r);
    match side {
        Side::Lower => window_stability(&inf),
        Side::Upper => window_stability(&sup),
        Side::Both => window_stability(&inf).max(window_stability(&sup)),
    }
}

/// Weight of the tightness term in the exponent objective.
const SPREAD_WEIGHT: f64 = 0.1;

/// Points lost to underflow are penalized ahead of everything else, so the
/// search cannot shrink the region it is scored on.
fn objective(r: &Ratios, side: Side) -> f64 {
    if r.rows.is_empty() {
        return f64::INFINITY;
    }
    1e6 * r.dropped as f64 + stability(r, side).ln() + SPREAD_WEIGHT * decade_spread(r)
}

/// Coarse log scan followed by golden section around the best node.
fn fit_one(lo: f64, hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    let n = 24;
    let node = |i: usize| a + (b - a) * i as f64 / n as f64;
    let best = (0..=n)
        .map(|i| (i, f(node(i).exp())))
        .fold((0, f64::INFINITY), |m, v| if v.1 < m.1 { v } else { m })
        .0;
    let l = node(best.saturating_sub(1));
    let r = node((best + 1).min(n));
    golden_section_min(|u| f(u.exp()), l, r, 1e-6).0.exp()
}

fn fit_exponents(points: &[&Point], spec: &ShapeSpec) -> Vec<f64> {
    let obj = |params: &[f64]| objective(&ratios(points, spec, params), spec.side);
    match spec.exponents.as_slice() {
        [] => vec![],
        [e] => vec![fit_one(e.lo, e.hi, &|v| obj(&[v]))],
        [e1, e2] => {
            let inner = |a: f64| fit_one(e2.lo, e2.hi, &|b| obj(&[a, b]));
            let a = fit_one(e1.lo, e1.hi, &|a| obj(&[a, inner(a)]));
            vec![a, inner(a)]
        }
        _ => unimplemented!("at most two fitted exponents"),
    }
}

/// max over windows [t, 10t] of max/min of `c` over the times in the window.
fn window_stability(per_t: &BTreeMap<u64, f64>) -> f64 {
    let items: Vec<(f64, f64)> = per_t.iter().map(|(k, v)| (f64::from_bits(*k), *v)).collect();
    let mut worst = 1.0_f64;
    for (i, &(t, _)) in items.iter().enumerate() {
        let window: Vec<f64> = items[i..]
            .iter()
            .take_while(|(s, _)| *s <= 10.0 * t * (1.0 + 1e-12))
            .map(|(_, v)| *v)
            .collect();
        let hi = window.iter().cloned().fold(0.0, f64::max);
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi / lo);
    }
    worst
}

/// Fits the free exponents, then the prefactors as ratio extrema.
pub fn fit_sandwich(set: &DensitySet, spec: &ShapeSpec, cfg: &FitConfig) -> Result<FitReport> {
    let points: Vec<&Point> = set.points.iter().filter(|p| (spec.region)(p)).collect();
    if points.is_empty() {
        return Err(LevyError::EmptyRegion(format!("{}: no samples in the validity region", spec.name)));
    }
    let params = fit_exponents(&points, spec);
    let r = ratios(&points, spec, &params);
    if r.rows.is_empty() {
        return Err(LevyError::EmptyRegion(format!("{}: envelope vanishes on the region", spec.name)));
    }
    let mut inf = (f64::INFINITY, (0.0, 0.0));
    let mut sup = (0.0, (0.0, 0.0));
    for &(t, x, v) in &r.rows {
        if v < inf.0 {
            inf = (v, (t, x));
        }
        if v > sup.0 {
            sup = (v, (t, x));
        }
    }
    let spread = sup.0 / inf.0;
    let stability = stability(&r, spec.side);
    let mut constants = BTreeMap::new();
    for (e, v) in spec.exponents.iter().zip(&params) {
        constants.insert(e.name.clone(), *v);
    }
    for (k, v) in &spec.fixed {
        constants.insert(k.clone(), *v);
    }
    if spec.side != Side::Upper {
        constants.insert(spec.prefactors.0.clone(), inf.0);
    }
    if spec.side != Side::Lower {
        constants.insert(spec.prefactors.1.clone(), sup.0);
    }
    let mut notes = Vec::new();
    if r.dropped > 0 {
        notes.push(format!("{} points where the shape vanishes or the ratio overflows", r.dropped));
    }
    for (e, v) in spec.exponents.iter().zip(&params) {
        let at_edge = (v / e.lo).ln().abs() < 1e-3 || (v / e.hi).ln().abs() < 1e-3;
        if at_edge {
            notes.push(format!("{} = {v:e} sits at the search bracket edge", e.name));
        }
    }
    let mut pass = inf.0 > 0.0 && sup.0.is_finite() && stability <= cfg.ceiling;
    if spec.side == Side::Both {
        pass &= spread <= cfg.ceiling;
    }
    Ok(FitReport {
        envelope: spec.name.clone(),
        regime: spec.regime,
        grid: set.summary(r.rows.len()),
        ratio_inf: inf.0,
        arg_inf: inf.1,
        ratio_sup: sup.0,
        arg_sup: sup.1,
        constants,
        stability,
        spread,
        pass,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearDiagonalFit {
    pub theta: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub spread: f64,
    pub report: FitReport,
}

/// Scans θ = 1, f, f², … and returns the largest θ for which p·h^d has
/// spread ≤ ceiling on |x| < θh(t) over all times.
pub fn fit_near_diagonal(set: &DensitySet, cfg: &FitConfig) -> Result<NearDiagonalFit> {
    if set.points.is_empty() {
        return Err(LevyError::EmptyRegion("near-diagonal scan: no samples".into()));
    }
    let d = set.d as i32;
    let mut theta = 1.0;
    let mut best_spread = f64::INFINITY;
    while theta >= cfg.theta_min {
        let th = theta;
        let spec = ShapeSpec {
            name: "near_diagonal".into(),
            regime: Some(Regime::NearDiagonal),
            side: Side::Both,
            shape: Box::new(move |p: &Point, _: &[f64]| p.h.powi(-d)),
            region: Box::new(move |p: &Point| p.x < th * p.h),
            exponents: vec![],
            fixed: vec![("theta".into(), th)],
            prefactors: ("c_low".into(), "c_high".into()),
        };
        let report = fit_sandwich(set, &spec, cfg)?;
        best_spread = best_spread.min(report.spread);
        if report.spread <= cfg.ceiling {
            return Ok(NearDiagonalFit {
                theta,
                c_low: report.ratio_inf,
                c_high: report.ratio_sup,
                spread: report.spread,
                report,
            });
        }
        theta *= cfg.theta_factor;
    }
    Err(LevyError::NoPassingTheta(format!(
        "smallest spread {best_spread:e} exceeds the ceiling {}",
        cfg.ceiling
    )))
}

/// Shapes of the four-case estimate for a measure with bounded support. All
/// exponents are fitted; the ExpXLog brackets start at 1/(e·C*) so the shapes
/// are nonincreasing on the region.
pub fn truncated_specs<'a>(nu: &'a LevyMeasure, th: RegimeThresholds) -> Vec<ShapeSpec<'a>> {
    let unit = TruncatedConstants {
        near_low: 1.0,
        near_high: 1.0,
        tail_low: 1.0,
        tail_high: 1.0,
        c1: 1.0,
        c2: f64::NAN,
        c3: 1.0,
        c4: f64::NAN,
        c5: 1.0,
        c6: f64::NAN,
        c7: f64::NAN,
        c8: 1.0,
        c9: f64::NAN,
        c10: f64::NAN,
    };
    let in_regime = move |reg: Regime| -> RegionFn<'a> { Box::new(move |p: &Point| classify(&th, p.h, p.t, p.x) == reg) };
    let f = move |s: f64| nu.lebesgue_density(s);
    let shape = move |reg: Regime, lower: bool| -> ShapeFn<'a> {
        Box::new(move |p: &Point, c: &[f64]| {
            let mut k = unit;
            match (reg, lower) {
                (Regime::Gaussian, true) => k.c2 = c[0],
                (Regime::Gaussian, false) => k.c4 = c[0],
                (Regime::ExpXLog, true) => (k.c6, k.c7) = (c[0], c[1]),
                (Regime::ExpXLog, false) => (k.c9, k.c10) = (c[0], c[1]),
                _ => {}
            }
            let (l, u) = truncated_shapes(p.d, p.h, p.t, p.x, reg, &f, &k);
            if lower {
                l
            } else {
                u
            }
        })
    };
    let fixed = vec![
        ("eta_star".to_string(), th.eta_star),
        ("c_star_upper".to_string(), th.c_star_upper),
        ("t1".to_string(), th.t1),
        ("r0".to_string(), th.r0),
        ("m0".to_string(), th.m0),
    ];
    let log_lo = 1.0 / (std::f64::consts::E * th.c_star_upper);
    let spec = |name: &str, reg: Regime, side: Side, exponents: Vec<Exponent>, pre: (&str, &str)| ShapeSpec {
        name: name.into(),
        regime: Some(reg),
        side,
        shape: shape(reg, side != Side::Upper),
        region: in_regime(reg),
        exponents,
        fixed: fixed.clone(),
        prefactors: (pre.0.into(), pre.1.into()),
    };
    vec![
        spec("truncated_near_diagonal", Regime::NearDiagonal, Side::Both, vec![], ("near_low", "near_high")),
        spec("truncated_levy_tail", Regime::LevyTail, Side::Both, vec![], ("tail_low", "tail_high")),
        spec(
            "truncated_gaussian_lower",
            Regime::Gaussian,
            Side::Lower,
            vec![Exponent::new("c2", 1e-4, 1e2)],
            ("c1", ""),
        ),
        spec(
            "truncated_gaussian_upper",
            Regime::Gaussian,
            Side::Upper,
            vec![Exponent::new("c4", 1e-4, 1e2)],
            ("", "c3"),
        ),
        spec(
            "truncated_exp_xlog_lower",
            Regime::ExpXLog,
            Side::Lower,
            vec![Exponent::new("c6", 1e-2 / th.r0, 1e2 / th.r0), Exponent::new("c7", log_lo, 1e4)],
            ("c5", ""),
        ),
        spec(
            "truncated_exp_xlog_upper",
            Regime::ExpXLog,
            Side::Upper,
            vec![Exponent::new("c9", 1e-2 / th.r0, 1e2 / th.r0), Exponent::new("c10", log_lo, 1e4)],
            ("", "c8"),
        ),
    ]
}

/// Upper c1·t^{−d/2}(e^{−c2|x|²/t} + e^{−m|x|^β/(2·4^β)}) and the closed-form
/// lower c7·t^{−d/2}(e^{−c8|x|²/t} + e^{−c9|x|^β}) on |x| ≤ x_max, t > t0.
pub fn tempered_specs<'a>(m: f64, beta: f64, t0: f64, x_max: f64) -> Vec<ShapeSpec<'a>> {
    let region = move || -> RegionFn<'a> { Box::new(move |p: &Point| p.t >= t0 && p.x <= x_max) };
    vec![
        ShapeSpec {
            name: "tempered_upper".into(),
            regime: None,
            side: Side::Upper,
            shape: Box::new(move |p: &Point, c: &[f64]| tempered_upper_shape(p.d, p.t, p.x, c[0], m, beta)),
            region: region(),
            exponents: vec![Exponent::new("c2", 1e-4, 1e2)],
            fixed: vec![
                ("m".into(), m),
                ("beta".into(), beta),
                ("tail_exponent".into(), tempered_tail_exponent(m, beta, 1.0)),
                ("t0".into(), t0),
            ],
            prefactors: (String::new(), "c1".into()),
        },
        ShapeSpec {
            name: "tempered_lower_density".into(),
            regime: None,
            side: Side::Lower,
            shape: Box::new(move |p: &Point, c: &[f64]| tempered_lower_shape(p.d, p.t, p.x, c[0], c[1], beta)),
            region: region(),
            exponents: vec![Exponent::new("c8", 1e-4, 1e2), Exponent::new("c9", 1e-3, 1e2)],
            fixed: vec![("beta".into(), beta), ("t0".into(), t0)],
            prefactors: ("c7".into(), String::new()),
        },
    ]
}

/// Ball-mass lower c3·t^{−d/2}(e^{−c4|x|²/t} + t·ν(B(x, c5√t))) on η√t ≤ |x| ≤ c6·t;
/// `aux` must hold ν(B(x, c5√t)).
pub fn tempered_ball_spec<'a>(eta: f64, c5: f64, c6: f64, t0: f64) -> ShapeSpec<'a> {
    ShapeSpec {
        name: "tempered_lower_ball".into(),
        regime: None,
        side: Side::Lower,
        shape: Box::new(move |p: &Point, c: &[f64]| {
            p.t.powf(-(p.d as f64) / 2.0) * ((-c[0] * p.x * p.x / p.t).exp() + p.t * p.aux)
        }),
        region: Box::new(move |p: &Point| p.t >= t0 && p.x >= eta * p.t.sqrt() && p.x <= c6 * p.t),
        exponents: vec![Exponent::new("c4", 1e-4, 1e2)],
        fixed: vec![("eta".into(), eta), ("c5".into(), c5), ("c6".into(), c6), ("t0".into(), t0)],
        prefactors: ("c3".into(), String::new()),
    }
}

/// Fills `aux` with ν(B(x·e1, c5√t)).
pub fn attach_ball_mass(set: &mut DensitySet, nu: &LevyMeasure, c5: f64) -> Result<()> {
    let d = nu.d;
    set.points.par_iter_mut().try_for_each(|p| {
        let mut x = vec![0.0; d];
        x[0] = p.x;
        p.aux = nu.ball_mass(&x, c5 * p.t.sqrt())?;
        Ok(())
    })
}

/// Lower (c7 fitted) and upper (c9, c10 fitted) envelopes on |x| < 1, t < 1.
pub fn high_intensity_specs<'a>(beta: f64) -> Vec<ShapeSpec<'a>> {
    let region = || -> RegionFn<'a> { Box::new(|p: &Point| p.x < 1.0 && p.t < 1.0) };
    let consts = move |c7: f64, c9: f64, c10: f64| HighIntensityConstants {
        beta,
        c_low: 1.0,
        c7,
        c_high: 1.0,
        c9,
        c10,
    };
    vec![
        ShapeSpec {
            name: "high_intensity_lower".into(),
            regime: None,
            side: Side::Lower,
            shape: Box::new(move |p: &Point, c: &[f64]| high_intensity_shapes(p.d, p.h, p.t, p.x, &consts(c[0], 1.0, 1.0)).0),
            region: region(),
            exponents: vec![Exponent::new("c7", 1e-3, 1e2)],
            fixed: vec![("beta".into(), beta)],
            prefactors: ("c_low".into(), String::new()),
        },
        ShapeSpec {
            name: "high_intensity_upper".into(),
            regime: None,
            side: Side::Upper,
            shape: Box::new(move |p: &Point, c: &[f64]| {
                high_intensity_shapes(p.d, p.h, p.t, p.x, &consts(1.0, c[0], c[1])).1
            }),
            region: region(),
            exponents: vec![Exponent::new("c9", 1e-3, 1e1), Exponent::new("c10", 1e-3, 1e2)],
            fixed: vec![("beta".into(), beta)],
            prefactors: (String::new(), "c_high".into()),
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedConfig {
    /// θ from the near-diagonal fit; sets ρ = θh(t/k)/4.
    pub theta: f64,
    /// Chain parameter η < θ.
    pub eta: f64,
    /// L0 from the Ψ/H fit.
    pub l0: f64,
    /// Tolerance in units of p_t(0).
    pub tol_rel: f64,
    /// Factor applied to the checked densities (1 except for negative controls).
    pub corrupt: f64,
    /// Cap on the chain length; the chaining inequality holds for every k.
    pub max_chain: u64,
}

impl CertifiedConfig {
    pub fn new(theta: f64, l0: f64) -> Self {
        CertifiedConfig {
            theta,
            eta: theta / 2.0,
            l0,
            tol_rel: 1e-9,
            corrupt: 1.0,
            max_chain: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRow {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    pub k: u64,
    /// Set when the chain length from the lemma exceeded `max_chain`.
    pub capped: bool,
    pub vacuous_lower: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub x: f64,
    pub upper_side: bool,
    pub p: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedReport {
    pub n_points: usize,
    pub vacuous_lower: usize,
    pub violations: Vec<Violation>,
    pub pass: bool,
    pub rows: Vec<CertifiedRow>,
}

/// Checks chaining ≤ p_t(x) ≤ e^{−D²_t(x)}p_t(0) on the product grid. Bounds
/// come from the computed densities; the checked values are those densities
/// times `cfg.corrupt`.
pub fn check_certified(table: &SymbolTable, times: &[f64], xs: &[f64], cfg: &CertifiedConfig) -> Result<CertifiedReport> {
    let nu = table.measure();
    let d = nu.d;
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    let engine = ConcentrationEngine::new(nu, &e)?;
    let r0 = nu.support_radius();
    let (m0, s0) = if r0.is_finite() {
        (nu.second_moment()?, 1.0 / r0)
    } else {
        (f64::NAN, 0.0)
    };
    let fm = cfg.l0 * m0;
    let f = move |s: f64| fm * s;
    let f_inv = move |y: f64| y / fm;

    let embed = |x: f64| {
        let mut v = vec![0.0; d];
        v[0] = x;
        v
    };
    let mut plan: Vec<(f64, f64, u64, bool)> = Vec::with_capacity(times.len() * xs.len());
    for &t in times {
        for &x in xs {
            let k = if r0.is_finite() {
                chain_length_gaussian(table, t, &embed(x), cfg.eta, &f, &f_inv, s0)?
            } else {
                1
            };
            plan.push((t, x, k.min(cfg.max_chain.max(1)), k > cfg.max_chain));
        }
    }
    let mut keys: Vec<(u64, u64)> = plan.iter().map(|&(t, _, k, _)| (t.to_bits(), k)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut needed: Vec<f64> = keys.iter().map(|&(t, k)| f64::from_bits(t) / k as f64).collect();
    needed.extend(times.iter().copied());
    needed.sort_by(f64::total_cmp);
    needed.dedup();
    let grids: HashMap<u64, DensityGrid> = density_grids(table, &needed, 0.0)?
        .into_iter()
        .map(|g| (g.t.to_bits(), g))
        .collect();

    let rows = plan
        .par_iter()
        .map(|&(t, x, k, capped)| -> Result<CertifiedRow> {
            let g = &grids[&t.to_bits()];
            let p = g.interpolate(&embed(x));
            let upper = (-engine.bound(t, x).d2).exp() * g.p0();
            let gk = &grids[&(t / k as f64).to_bits()];
            let rho = default_rho(table, t, k, cfg.theta)?;
            let chain = chaining_lower(gk, &embed(x), k, rho)?;
            Ok(CertifiedRow {
                t,
                x,
                p: p * cfg.corrupt,
                lower: chain.value,
                upper,
                k,
                capped,
                vacuous_lower: chain.vacuous || chain.value == 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    for r in &rows {
        let tol = cfg.tol_rel * grids[&r.t.to_bits()].p0();
        if r.p > r.upper + tol {
            violations.push(Violation {
                t: r.t,
                x: r.x,
                upper_side: true,
                p: r.p,
                bound: r.upper,
            });
        }
        if r.p < r.lower - tol {
            violations.push(Violation {
                t: r.t,
                x: r.x,
                upper_side: false,
                p: r.p,
                bound: r.lower,
            });
        }
    }
    Ok(CertifiedReport {
        n_points: rows.len(),
        vacuous_lower: rows.iter().filter(|r| r.vacuous_lower).count(),
        pass: violations.is_empty(),
        violations,
        rows,
    })
}

/// Writes the reports as a JSON array and a one-line-per-fit CSV summary.
pub fn emit_report(reports: &[FitReport], json_path: &Path, csv_path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(reports).map_err(|e| LevyError::Io(e.to_string()))?;
    std::fs::write(json_path, json + "\n").map_err(|e| LevyError::Io(format!("{}: {e}", json_path.display())))?;
    let file = std::fs::File::create(csv_path).map_err(|e| LevyError::Io(format!("{}: {e}", csv_path.display())))?;
    write_summary_csv(reports, file)
}

pub fn write_summary_csv<W: Write>(reports: &[FitReport], out: W) -> Result<()> {
    let io = |e: csv::Error| LevyError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "envelope",
        "regime",
        "n_points",
        "ratio_inf",
        "ratio_sup",
        "spread",
        "stability",
        "pass",
        "constants",
    ])
    .map_err(io)?;
    for r in reports {
        let constants: Vec<String> = r.constants.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
        w.write_record([
            r.envelope.clone(),
            r.regime.map(|g| g.name().to_string()).unwrap_or_default(),
            r.grid.n_points.to_string(),
            format!("{:e}", r.ratio_inf),
            format!("{:e}", r.ratio_sup),
            format!("{:e}", r.spread),
            format!("{:e}", r.stability),
            r.pass.to_string(),
            constants.join(";"),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| LevyError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub family: String,
    pub times: Vec<f64>,
    pub near_diagonal: Option<NearDiagonalFit>,
    pub l0: f64,
    pub thresholds: Option<RegimeThresholds>,
    pub fits: Vec<FitReport>,
    pub checks: Vec<CheckResult>,
    pub doubling: Option<DoublingReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub fit: FitConfig,
    /// Overrides the family's default time grid.
    pub times: Option<Vec<f64>>,
    pub x_max: Option<f64>,
    /// Run the pointwise certified check (bounded support only).
    pub certified: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            fit: FitConfig::default(),
            times: None,
            x_max: None,
            certified: true,
        }
    }
}

/// `n` log-spaced points from a to b inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn default_times(nu: &LevyMeasure, t_p: f64) -> Vec<f64> {
    match nu.radial {
        RadialProfile::TruncatedStable { .. } => log_space(1e-3, 10.0, 17),
        RadialProfile::TemperedStable { .. } => log_space(0.1, 100.0, 13),
        _ if t_p.is_finite() => log_space(1e-4 * t_p, 0.5 * t_p, 15),
        _ => log_space(1e-2, 10.0, 13),
    }
}

/// Grids on [−4x, 4x] with spacing h(t)/512, fine enough that the sup of a
/// smooth ratio over the nodes is within ~1e−6 of its sup over the interval.
pub fn tempered_grids(table: &SymbolTable, times: &[f64], x: f64) -> Result<Vec<DensityGrid>> {
    times
        .par_iter()
        .map(|&t| {
            let half = 4.0 * x;
            let n = ((half * 512.0 / table.h(t)?).ceil() as usize).next_power_of_two();
            density_fourier(table, t, GridSpec::new(half, n)?)
        })
        .collect()
}

/// Every check that applies to the measure's family.
pub fn run_suite(nu: &LevyMeasure, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let table = SymbolTable::build(nu)?;
    let times = cfg.times.clone().unwrap_or_else(|| default_times(nu, table.t_p()));
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let h_max = table.h(t_max)?;
    let r0 = nu.support_radius();
    let l0 = table.l0_fit(1e-3, 1e4).l0;
    let mut checks = Vec::new();
    let mut fits = Vec::new();

    let r_grid = log_space(1e-6, if r0.is_finite() { r0 * 0.999 } else { 1.0 }, 60);
    let doubling = doubling_check(&nu.radial, nu.d, &r_grid).ok();
    if let Some(rep) = &doubling {
        checks.push(CheckResult {
            name: "doubling".into(),
            pass: rep.pass,
            detail: format!("beta1 = {}, beta2 = {}", rep.beta1, rep.beta2),
        });
    }

    let x_max = cfg.x_max.unwrap_or_else(|| {
        let mut x = 10.0 * h_max;
        if r0.is_finite() {
            if let Ok(m0) = nu.second_moment() {
                x = x.max(3.0 * 2.0 * std::f64::consts::E * m0 / r0 * t_max);
            }
        }
        x
    });
    let grids = fit_grids(&table, &times, 0.0, &cfg.fit)?;
    let set = collect(&table, &grids, x_max, &cfg.fit)?;
    let near = match fit_near_diagonal(&set, &cfg.fit) {
        Ok(n) => Some(n),
        Err(e) => {
            checks.push(CheckResult {
                name: "near_diagonal".into(),
                pass: false,
                detail: e.to_string(),
            });
            None
        }
    };
    let mut thresholds = None;

    match (&nu.radial, &near) {
        (RadialProfile::HighIntensity { beta, .. }, _) => {
            for spec in high_intensity_specs(*beta) {
                push_fit(&mut fits, &mut checks, fit_sandwich(&set, &spec, &cfg.fit), &spec.name);
            }
        }
        (RadialProfile::TemperedStable { m, beta, .. }, _) => {
            let given: Vec<f64> = match &cfg.times {
                Some(ts) => ts.iter().copied().filter(|t| *t >= 5.0).take(3).collect(),
                None => Vec::new(),
            };
            let ts = if given.is_empty() { vec![5.0, 10.0, 20.0] } else { given };
            let xt = cfg.x_max.unwrap_or(40.0);
            let g = tempered_grids(&table, &ts, xt)?;
            // every node on |x| ≤ xt, so the upper constant is a sup over the whole grid
            let nodes = g.iter().map(|g| (xt / g.dx()).ceil() as usize + 1).max().unwrap_or(0);
            let dense = FitConfig {
                max_points_per_t: cfg.fit.max_points_per_t.max(3 * nodes + 3),
                ..cfg.fit
            };
            let tset = collect(&table, &g, xt, &dense)?;
            for spec in tempered_specs(*m, *beta, ts[0], xt) {
                push_fit(&mut fits, &mut checks, fit_sandwich(&tset, &spec, &cfg.fit), &spec.name);
            }
        }
        (_, Some(nd)) if r0.is_finite() => {
            let th = RegimeThresholds::for_measure(nu, nd.theta, l0, nd.theta)?;
            thresholds = Some(th);
            for spec in truncated_specs(nu, th) {
                push_fit(&mut fits, &mut checks, fit_sandwich(&set, &spec, &cfg.fit), &spec.name);
            }
        }
        _ => {}
    }
    if let (Some(nd), true) = (&near, r0.is_finite() && cfg.certified) {
        let ts = log_space(times[0], t_max.min(10.0 * times[0].max(0.1)), 12);
        let xs: Vec<f64> = (0..12).map(|i| 3.0 * r0 * i as f64 / 11.0).collect();
        let rep = check_certified(&table, &ts, &xs, &CertifiedConfig::new(nd.theta, l0))?;
        checks.push(CheckResult {
            name: "certified".into(),
            pass: rep.pass,
            detail: format!(
                "{} points, {} violations, {} vacuous lower bounds",
                rep.n_points,
                rep.violations.len(),
                rep.vacuous_lower
            ),
        });
    }
    let pass = near.is_some() && fits.iter().all(|f| f.pass) && checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        family: family_name(nu).into(),
        times,
        near_diagonal: near,
        l0,
        thresholds,
        fits,
        checks,
        doubling,
        pass,
    })
}

fn push_fit(fits: &mut Vec<FitReport>, checks: &mut Vec<CheckResult>, r: Result<FitReport>, name: &str) {
    match r {
        Ok(f) => fits.push(f),
        Err(e) => checks.push(CheckResult {
            name: name.into(),
            pass: false,
            detail: e.to_string(),
        }),
    }
}

pub fn family_name(nu: &LevyMeasure) -> &'static str {
    match nu.radial {
        RadialProfile::TruncatedStable { .. } => "truncated",
        RadialProfile::TemperedStable { .. } => "tempered",
        RadialProfile::HighIntensity { .. } => "high_intensity",
        RadialProfile::Custom(_) => "custom",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, x: f64, p: f64) -> Point {
        Point {
            t,
            x,
            p,
            h: 1.0,
            d: 1,
            aux: f64::NAN,
        }
    }

    fn set(points: Vec<Point>) -> DensitySet {
        let mut times: Vec<f64> = points.iter().map(|p| p.t).collect();
        times.dedup();
        DensitySet {
            d: 1,
            points,
            excluded: 0,
            times,
            x_max: 1.0,
        }
    }

    fn flat<'a>(side: Side) -> ShapeSpec<'a> {
        ShapeSpec {
            name: "flat".into(),
            regime: None,
            side,
            shape: Box::new(|_: &Point, _: &[f64]| 1.0),
            region: Box::new(|_: &Point| true),
            exponents: vec![],
            fixed: vec![],
            prefactors: ("lo".into(), "hi".into()),
        }
    }

    #[test]
    fn single_point_region_is_degenerate() {
        let s = set(vec![point(1.0, 0.0, 0.3)]);
        let r = fit_sandwich(&s, &flat(Side::Both), &FitConfig::default()).unwrap();
        assert_eq!(r.ratio_inf, r.ratio_sup);
        assert_eq!(r.spread, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn empty_region_is_an_error() {
        let s = set(vec![point(1.0, 0.0, 0.3)]);
        let mut spec = flat(Side::Lower);
        spec.region = Box::new(|p: &Point| p.x > 5.0);
        assert!(matches!(
            fit_sandwich(&s, &spec, &FitConfig::default()),
            Err(LevyError::EmptyRegion(_))
        ));
    }

    #[test]
    fn recovers_gaussian_exponent() {
        let pts: Vec<Point> = [1.0, 2.0, 4.0]
            .iter()
            .flat_map(|&t| (0..40).map(move |i| point(t, i as f64 * 0.1, 2.0 * (-0.7 * (i as f64 * 0.1).powi(2) / t).exp())))
            .collect();
        let spec = ShapeSpec {
            name: "gauss".into(),
            regime: None,
            side: Side::Lower,
            shape: Box::new(|p: &Point, c: &[f64]| (-c[0] * p.x * p.x / p.t).exp()),
            region: Box::new(|_: &Point| true),
            exponents: vec![Exponent::new("c", 1e-3, 1e2)],
            fixed: vec![],
            prefactors: ("a".into(), String::new()),
        };
        let r = fit_sandwich(&set(pts), &spec, &FitConfig::default()).unwrap();
        assert!((r.constants["c"] - 0.7).abs() < 1e-4, "{:?}", r.constants);
        assert!((r.constants["a"] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn window_stability_uses_decade_windows() {
        let mut m = BTreeMap::new();
        m.insert(1.0f64.to_bits(), 1.0);
        m.insert(5.0f64.to_bits(), 3.0);
        m.insert(100.0f64.to_bits(), 1000.0);
        assert_eq!(window_stability(&m), 3.0);
    }

    #[test]
    fn empty_report_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (j, c) = (dir.path().join("r.json"), dir.path().join("r.csv"));
        emit_report(&[], &j, &c).unwrap();
        let back: Vec<FitReport> = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
        assert!(back.is_empty());
        assert_eq!(std::fs::read_to_string(&c).unwrap().lines().count(), 1);
    }
}
