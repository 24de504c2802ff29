//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use levykernel::config::presets;
use levykernel::density::{auto_grid, density_fourier, density_split, semigroup_residual, DensityGrid, GridSpec};
use levykernel::envelopes::tempered_upper_shape;
use levykernel::levy_measure::doubling_check;
use levykernel::mc_oracle::{kde_compare, Bandwidth, Sampler};
use levykernel::symbol::SymbolOptions;
use levykernel::verify::{
    check_certified, log_space, run_suite, tempered_grids, CertifiedConfig, SuiteConfig, SuiteReport,
};
use levykernel::{LevyError, LevyMeasure, RadialProfile, SymbolTable};

type Outcome = Result<(bool, String), String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn families() -> Vec<(&'static str, LevyMeasure)> {
    vec![
        ("truncated", presets::truncated(1.5, 1.0).unwrap()),
        ("tempered", presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap()),
        ("high_intensity", presets::high_intensity(2.0).unwrap()),
    ]
}

struct Suites {
    truncated: SuiteReport,
    tempered: SuiteReport,
    high_intensity: SuiteReport,
}

fn c1_cauchy() -> Outcome {
    let start = Instant::now();
    let table = SymbolTable::build(&presets::cauchy().map_err(err)?).map_err(err)?;
    let spec = GridSpec::new(4000.0, 1 << 17).map_err(err)?;
    let mut worst: f64 = 0.0;
    for &t in &[0.5, 1.0, 2.0] {
        let g = density_fourier(&table, t, spec).map_err(err)?;
        let (xs, ps) = g.samples();
        for (x, p) in xs.iter().zip(&ps) {
            if x.abs() <= 10.0 {
                worst = worst.max((p - t / (PI * (t * t + x * x))).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-6 && secs < 10.0, format!("max abs error {worst:.2e}, {secs:.2} s")))
}

fn c2_psi_h() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, nu) in families() {
        let table = SymbolTable::build(&nu).map_err(err)?;
        let fine = SymbolTable::with_options(
            &nu,
            SymbolOptions {
                per_decade: 1200,
                ..SymbolOptions::default()
            },
        )
        .map_err(err)?;
        let fit = table.l0_fit(1e-3, 1e4);
        let fit_fine = fine.l0_fit(1e-3, 1e4);
        let drift = (fit.l0 - fit_fine.l0).abs() / fit_fine.l0;
        ok &= fit.max_upper_ratio <= 2.0 * (1.0 + 1e-9) && fit.l0 >= 0.05 && drift < 1e-3;
        parts.push(format!(
            "{name}: L0 {:.4}, max Psi/H {:.4}, refinement drift {drift:.1e}",
            fit.l0, fit.max_upper_ratio
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c3_near_diagonal(s: &Suites) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [&s.truncated, &s.tempered, &s.high_intensity] {
        let span = r.times.iter().cloned().fold(0.0, f64::max) / r.times.iter().cloned().fold(f64::INFINITY, f64::min);
        match &r.near_diagonal {
            Some(n) => {
                ok &= n.theta > 0.0 && n.spread <= 100.0 && span >= 1e3;
                parts.push(format!("{}: theta {:.3}, spread {:.3}, t span {span:.0e}", r.family, n.theta, n.spread));
            }
            None => {
                ok = false;
                parts.push(format!("{}: no theta", r.family));
            }
        }
    }
    if s.high_intensity.times.iter().any(|&t| t >= 1.0) {
        ok = false;
    }
    Ok((ok, parts.join("; ")))
}

fn c4_certified() -> Outcome {
    let nu = presets::truncated(1.5, 1.0).map_err(err)?;
    let table = SymbolTable::build(&nu).map_err(err)?;
    let l0 = table.l0_fit(1e-3, 1e4).l0;
    let ts = log_space(1e-2, 1.0, 50);
    let xs: Vec<f64> = (0..50).map(|i| 3.0 * i as f64 / 49.0).collect();
    let cfg = CertifiedConfig::new(1.0, l0);
    let clean = check_certified(&table, &ts, &xs, &cfg).map_err(err)?;
    let corrupt = check_certified(&table, &ts, &xs, &CertifiedConfig { corrupt: 1.1, ..cfg }).map_err(err)?;
    Ok((
        clean.n_points == 2500 && clean.violations.is_empty() && !corrupt.violations.is_empty(),
        format!(
            "{} points, {} violations; x1.1 control: {} violations",
            clean.n_points,
            clean.violations.len(),
            corrupt.violations.len()
        ),
    ))
}

fn c5_truncated(s: &Suites) -> Outcome {
    let r = &s.truncated;
    let mut regimes: Vec<&str> = r.fits.iter().filter_map(|f| f.regime.map(|g| g.name())).collect();
    regimes.dedup();
    let all = r.fits.iter().all(|f| f.pass) && regimes.len() == 4;
    let tail = r
        .fits
        .iter()
        .find(|f| f.envelope == "truncated_levy_tail")
        .ok_or("no Levy-tail fit")?;
    Ok((
        all && tail.pass && tail.spread <= 100.0,
        format!(
            "{} fits over {} regimes all pass: {all}; Levy-tail spread {:.3} over {} points",
            r.fits.len(),
            regimes.len(),
            tail.spread,
            tail.grid.n_points
        ),
    ))
}

fn c6_tempered(s: &Suites) -> Outcome {
    let r = &s.tempered;
    let upper = r.fits.iter().find(|f| f.envelope == "tempered_upper").ok_or("no tempered upper fit")?;
    let lower = r
        .fits
        .iter()
        .find(|f| f.envelope == "tempered_lower_density")
        .ok_or("no tempered lower fit")?;
    let (m, beta) = (upper.constants["m"], upper.constants["beta"]);
    let exact_tail = upper.constants["tail_exponent"] == m / (2.0 * 4f64.powf(beta));
    let (c1, c2) = (upper.constants["c1"], upper.constants["c2"]);
    let nu = presets::tempered(0.5, 0.0, 1.0, 1.0).map_err(err)?;
    let table = SymbolTable::build(&nu).map_err(err)?;
    let grids = tempered_grids(&table, &[5.0, 10.0, 20.0], 40.0).map_err(err)?;
    let ratio = |g: &DensityGrid| {
        let (xs, ps) = g.samples();
        xs.iter()
            .zip(&ps)
            .filter(|(x, _)| x.abs() <= 40.0)
            .map(|(x, p)| p / (c1 * tempered_upper_shape(1, g.t, *x, c2, m, beta)))
            .fold(0.0, f64::max)
    };
    let worst = grids.iter().map(ratio).fold(0.0, f64::max);
    let dominated = worst <= 1.0 + 1e-12;
    let mut finer: f64 = 0.0;
    for g in &grids {
        let spec = GridSpec::new(g.spec.half_width, 4 * g.spec.n).map_err(err)?;
        finer = finer.max(ratio(&density_fourier(&table, g.t, spec).map_err(err)?));
    }
    Ok((
        upper.pass && lower.pass && exact_tail && dominated && finer <= 1.0 + 1e-6,
        format!(
            "upper pass {} (c1 {c1:.3}, c2 {c2:.3}, tail exponent m/(2*4^beta) = {}), lower pass {}, max p/U on |x| <= 40: {worst:.9} (4x finer grid: {finer:.9})",
            upper.pass,
            m / (2.0 * 4f64.powf(beta)),
            lower.pass
        ),
    ))
}

fn c7_scale() -> Outcome {
    let beta = 2.0;
    let table = SymbolTable::build(&presets::high_intensity(beta).map_err(err)?).map_err(err)?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for t in log_space(1e-6, 1e-1, 51) {
        let v = table.h(t).map_err(err)? / (t.sqrt() * (2.0 / t).ln().powf((1.0 - beta) / 2.0));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi / lo <= 10.0, format!("ratio in [{lo:.4}, {hi:.4}], C/c = {:.4}", hi / lo)))
}

fn c8_semigroup() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, nu) in families() {
        let table = SymbolTable::build(&nu).map_err(err)?;
        let pairs: &[(f64, f64)] = if table.t_p().is_finite() {
            &[(0.25, 0.25), (0.125, 0.375)]
        } else {
            &[(1.0, 1.0), (0.5, 1.5)]
        };
        for &(t, s) in pairs {
            let spec = auto_grid(&table, t.min(s)).map_err(err)?;
            let wide = auto_grid(&table, t + s).map_err(err)?;
            let n = (wide.half_width / spec.dx()).ceil() as usize;
            let spec = GridSpec::new(n.next_power_of_two() as f64 * spec.dx(), n.next_power_of_two()).map_err(err)?;
            let g1 = density_fourier(&table, t, spec).map_err(err)?;
            let g2 = density_fourier(&table, s, spec).map_err(err)?;
            let g3 = density_fourier(&table, t + s, spec).map_err(err)?;
            let res = semigroup_residual(&g1, &g2, &g3).map_err(err)?;
            ok &= res <= 1e-6;
            parts.push(format!("{name} ({t}, {s}): {res:.1e}"));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn split_grid(nu: &LevyMeasure, spec: GridSpec) -> Result<(DensityGrid, DensityGrid), String> {
    let table = SymbolTable::build(nu).map_err(err)?;
    let r = table.h(1.0).map_err(err)?;
    let f = density_fourier(&table, 1.0, spec).map_err(err)?;
    let s = match density_split(nu, 1.0, r, 40, spec) {
        Err(LevyError::SeriesOrder { required, .. }) => density_split(nu, 1.0, r, required, spec),
        other => other,
    }
    .map_err(err)?;
    Ok((f, s))
}

fn c9_split() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, nu) in families().into_iter().take(2) {
        let table = SymbolTable::build(&nu).map_err(err)?;
        let auto = auto_grid(&table, 1.0).map_err(err)?;
        let spec = GridSpec::new(40.0, auto.n.max(2048)).map_err(err)?;
        let (f, s) = split_grid(&nu, spec)?;
        let d = sup_diff(&f.values, &s.values);
        ok &= d <= 1e-6;
        parts.push(format!("{name}: sup diff {d:.1e} on X = {}, N = {}", spec.half_width, spec.n));
    }
    Ok((ok, parts.join("; ")))
}

fn c10_monte_carlo() -> Outcome {
    let start = Instant::now();
    let nu = presets::truncated(1.5, 1.0).map_err(err)?;
    let table = SymbolTable::build(&nu).map_err(err)?;
    let h = table.h(1.0).map_err(err)?;
    let sampler = Sampler::from_table(&table, 1.0, None).map_err(err)?;
    let samples = sampler.sample(1_000_000, 20_240_601);
    let g = density_fourier(&table, 1.0, GridSpec::new(40.0, 4096).map_err(err)?).map_err(err)?;
    let c = kde_compare(&samples, &g, 3.0 * h, Bandwidth::Silverman).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        c.sup_rel <= 0.1 && secs < 60.0,
        format!(
            "relative sup-error {:.4} on |x| <= {:.3} ({} nodes, bandwidth {:.4}), {secs:.1} s",
            c.sup_rel,
            3.0 * h,
            c.rows.len(),
            c.bandwidth
        ),
    ))
}

fn c11_doubling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, alpha) in [(1usize, 0.5), (1, 1.5), (2, 1.0)] {
        let profile = RadialProfile::TruncatedStable {
            alpha,
            r0: 1.0,
            scale: 1.0,
        };
        let rep = doubling_check(&profile, d, &log_space(1e-6, 0.999, 60)).map_err(err)?;
        let target = d as f64 + alpha;
        let e = (rep.beta1 - target).abs().max((rep.beta2 - target).abs());
        ok &= rep.pass && e <= 1e-6;
        parts.push(format!("d={d} alpha={alpha}: |beta - (d+alpha)| {e:.1e}"));
    }
    let stairs = RadialProfile::Custom(presets::staircase(1, 4).map_err(err)?);
    let rep = doubling_check(&stairs, 1, &log_space(2f64.powi(-25), 0.999, 200)).map_err(err)?;
    ok &= !rep.pass;
    parts.push(format!("staircase pass = {} (beta1 {:.3}, m1 {:.2e})", rep.pass, rep.beta1, rep.m1));
    Ok((ok, parts.join("; ")))
}

fn main() {
    // `cargo test` passes harness flags such as --nocapture or a filter; only a
    // listing request changes behaviour.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let suite = |nu: LevyMeasure| run_suite(&nu, &SuiteConfig::default()).expect("suite run");
    let suites = Suites {
        truncated: suite(presets::truncated(1.5, 1.0).unwrap()),
        tempered: suite(presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap()),
        high_intensity: suite(presets::high_intensity(2.0).unwrap()),
    };
    let criteria: Vec<Criterion> = vec![
        ("Cauchy oracle", Box::new(c1_cauchy)),
        ("Psi/H sandwich", Box::new(c2_psi_h)),
        ("near-diagonal fit", Box::new(|| c3_near_diagonal(&suites))),
        ("certified sandwich", Box::new(c4_certified)),
        ("truncated four regimes", Box::new(|| c5_truncated(&suites))),
        ("tempered sandwich", Box::new(|| c6_tempered(&suites))),
        ("high-intensity scale", Box::new(c7_scale)),
        ("semigroup", Box::new(c8_semigroup)),
        ("split vs Fourier", Box::new(c9_split)),
        ("Monte Carlo", Box::new(c10_monte_carlo)),
        ("doubling", Box::new(c11_doubling)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!("criterion {:>2} {name}: {} ({detail})", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
