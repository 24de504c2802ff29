//! `levykernel`: symbols, densities, envelopes, verification and Monte Carlo
//! cross-checks for symmetric jump Lévy processes.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use levykernel::config::{load_measure, presets};
use levykernel::density::{auto_grid, concentration_upper, density_fourier, DensityGrid, GridSpec};
use levykernel::envelopes::{classify, RegimeThresholds};
use levykernel::mc_oracle::{kde_compare, sample_moments, Bandwidth, Sampler};
use levykernel::verify::{emit_report, run_suite, write_summary_csv, SuiteConfig, SuiteReport};
use levykernel::{LevyError, LevyMeasure, SymbolTable};
use log::info;

#[derive(Parser, Debug)]
#[command(name = "levykernel", version, about = "Transition densities and heat-kernel bounds for symmetric Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate Ψ and h, and fit L0 in Ψ ≤ 2H, Ψ ≥ L0·H.
    Symbol(Common),
    /// Transition density on a grid, one CSV per t.
    Density(Common),
    /// Regime map and concentration upper bound next to p_t.
    Envelope {
        #[command(flatten)]
        common: Common,
        /// Near-diagonal exponent θ used for the thresholds.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Fit every applicable sandwich; exit 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Skip the pointwise certified check.
        #[arg(long)]
        no_certified: bool,
    },
    /// Monte Carlo sample and KDE comparison at the first --t.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// Small-jump cutoff; h(t)/10 by default.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Fixed KDE bandwidth; Silverman by default.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Summarize a JSON report written by `verify`.
    Report {
        /// Path of verify.json.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Truncated,
    Tempered,
    HighIntensity,
    Cauchy,
}

#[derive(Args, Debug)]
struct Common {
    /// Measure config (JSON).
    #[arg(long, conflicts_with = "family")]
    config: Option<PathBuf>,
    /// Built-in family instead of --config.
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Half-width of the spatial grid or region.
    #[arg(long)]
    x_max: Option<f64>,
    /// Grid nodes per half-line (a power of two is fastest).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ratio-spread ceiling; overrides LEVYKERNEL_TOL.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn measure(&self) -> Result<LevyMeasure> {
        let nu = match (&self.config, self.family) {
            (Some(path), _) => load_measure(path)?,
            (None, Some(Family::Truncated)) => presets::truncated(self.alpha.unwrap_or(1.5), self.r0.unwrap_or(1.0))?,
            (None, Some(Family::Tempered)) => presets::tempered(
                self.alpha.unwrap_or(0.5),
                self.kappa.unwrap_or(0.0),
                self.m.unwrap_or(1.0),
                self.beta.unwrap_or(1.0),
            )?,
            (None, Some(Family::HighIntensity)) => presets::high_intensity(self.beta.unwrap_or(2.0))?,
            (None, Some(Family::Cauchy)) => presets::cauchy()?,
            (None, None) => return Err(LevyError::Config("give --config or --family".into()).into()),
        };
        Ok(nu)
    }

    fn times(&self, default: &[f64]) -> Vec<f64> {
        if self.t.is_empty() {
            default.to_vec()
        } else {
            self.t.clone()
        }
    }

    fn tol(&self) -> Result<Option<f64>> {
        if let Some(t) = self.tol {
            return Ok(Some(t));
        }
        match std::env::var("LEVYKERNEL_TOL") {
            Ok(v) => Ok(Some(
                v.parse()
                    .map_err(|_| LevyError::Config(format!("LEVYKERNEL_TOL: cannot parse `{v}`")))?,
            )),
            Err(_) => Ok(None),
        }
    }

    fn grid(&self, table: &SymbolTable, t: f64) -> Result<GridSpec> {
        let auto = auto_grid(table, t)?;
        Ok(match (self.x_max, self.grid) {
            (None, None) => auto,
            (Some(x), Some(n)) => GridSpec::new(x, n)?,
            (None, Some(n)) => GridSpec::new(auto.half_width, n)?,
            // keep the automatic spacing; the window only widens, output is trimmed to x
            (Some(x), None) => {
                let n = ((x.max(auto.half_width) / auto.dx()).ceil() as usize).next_power_of_two();
                GridSpec::new(n as f64 * auto.dx(), n)?
            }
        })
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn grid_value(g: &DensityGrid, j: i64) -> f64 {
    if g.d == 1 {
        g.at(j)
    } else {
        g.at2(j, 0)
    }
}

fn nodes_within(g: &DensityGrid, x_max: Option<f64>) -> std::ops::RangeInclusive<i64> {
    let n = g.spec.n as i64;
    let m = x_max.map_or(n - 1, |x| ((x / g.dx()).floor() as i64).min(n - 1));
    -m..=m
}

fn cmd_symbol(c: &Common) -> Result<bool> {
    let nu = c.measure()?;
    let table = SymbolTable::build(&nu)?;
    let out = c.out_dir()?;
    let mut w = csv_writer(&out.join("symbol.csv"))?;
    w.write_record(["r", "psi"])?;
    for (r, p) in table.radii().iter().zip(table.psi_values()) {
        w.write_record([format!("{r:e}"), format!("{p:e}")])?;
    }
    w.flush()?;
    let fit = table.l0_fit(1e-3, 1e4);
    let times = c.times(&[1e-3, 1e-2, 1e-1, 1.0]);
    let h: Vec<(f64, f64)> = times
        .iter()
        .filter(|&&t| t < table.t_p())
        .map(|&t| Ok((t, table.h(t)?)))
        .collect::<Result<_>>()?;
    let doc = serde_json::json!({ "l0_fit": fit, "t_p": table.t_p(), "h": h });
    std::fs::write(out.join("symbol.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    println!("L0 = {:.6e} (argmin r = {:.3e}), max Ψ/H = {:.6}", fit.l0, fit.argmin, fit.max_upper_ratio);
    Ok(fit.max_upper_ratio <= 2.0 * (1.0 + 1e-9))
}

fn cmd_density(c: &Common) -> Result<bool> {
    let nu = c.measure()?;
    let table = SymbolTable::build(&nu)?;
    let out = c.out_dir()?;
    for t in c.times(&[1.0]) {
        table.check_horizon(t)?;
        let g = density_fourier(&table, t, c.grid(&table, t)?)?;
        let name = format!("density_t{t}.csv");
        let mut w = csv_writer(&out.join(&name))?;
        w.write_record(["x", "p"])?;
        for j in nodes_within(&g, c.x_max) {
            w.write_record([format!("{:e}", j as f64 * g.dx()), format!("{:e}", grid_value(&g, j))])?;
        }
        w.flush()?;
        info!("t = {t}: {name}, mass {:.12}", g.total_mass());
        for v in g.invariant_violations() {
            eprintln!("t = {t}: {v}");
        }
    }
    Ok(true)
}

fn cmd_envelope(c: &Common, theta: f64) -> Result<bool> {
    let nu = c.measure()?;
    let table = SymbolTable::build(&nu)?;
    let l0 = table.l0_fit(1e-3, 1e4).l0;
    let th = RegimeThresholds::for_measure(&nu, theta, l0, theta).ok();
    let out = c.out_dir()?;
    let mut w = csv_writer(&out.join("envelope.csv"))?;
    w.write_record(["t", "x", "h", "p", "regime", "d2", "concentration_upper"])?;
    for t in c.times(&[0.1, 1.0]) {
        table.check_horizon(t)?;
        let h = table.h(t)?;
        let g = density_fourier(&table, t, c.grid(&table, t)?)?;
        let p0 = g.p0();
        let x_max = c.x_max.unwrap_or(10.0 * h);
        let range = nodes_within(&g, Some(x_max));
        let step = ((*range.end() as usize) / 200).max(1);
        for j in range.step_by(step) {
            let x = j as f64 * g.dx();
            let mut point = vec![0.0; nu.d];
            point[0] = x;
            let b = concentration_upper(&nu, t, &point)?;
            let regime = th.map(|th| classify(&th, h, t, x.abs()).name().to_string()).unwrap_or_default();
            w.write_record([
                format!("{t:e}"),
                format!("{x:e}"),
                format!("{h:e}"),
                format!("{:e}", grid_value(&g, j)),
                regime,
                format!("{:e}", b.d2),
                format!("{:e}", (-b.d2).exp() * p0),
            ])?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn cmd_verify(c: &Common, certified: bool) -> Result<bool> {
    let nu = c.measure()?;
    let mut cfg = SuiteConfig {
        certified,
        x_max: c.x_max,
        ..SuiteConfig::default()
    };
    if !c.t.is_empty() {
        cfg.times = Some(c.t.clone());
    }
    if let Some(tol) = c.tol()? {
        if tol.is_nan() || tol <= 1.0 {
            return Err(LevyError::Config(format!("tolerance {tol}: the spread ceiling must exceed 1")).into());
        }
        cfg.fit.ceiling = tol;
    }
    let report = run_suite(&nu, &cfg)?;
    let out = c.out_dir()?;
    std::fs::write(out.join("verify.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    emit_report(&report.fits, &out.join("fits.json"), &out.join("fits.csv"))?;
    print_summary(&report);
    Ok(report.pass)
}

fn print_summary(r: &SuiteReport) {
    if let Some(n) = &r.near_diagonal {
        println!("near_diagonal theta={:.4} spread={:.3} PASS", n.theta, n.spread);
    }
    for f in &r.fits {
        println!(
            "{} spread={:.3} stability={:.3} {}",
            f.envelope,
            f.spread,
            f.stability,
            if f.pass { "PASS" } else { "FAIL" }
        );
    }
    for c in &r.checks {
        println!("{} {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("{} {}", r.family, if r.pass { "PASS" } else { "FAIL" });
}

fn cmd_mc(c: &Common, n: usize, epsilon: Option<f64>, bandwidth: Option<f64>) -> Result<bool> {
    if n < 2 {
        return Err(LevyError::Config("--n must be at least 2".into()).into());
    }
    let nu = c.measure()?;
    let table = SymbolTable::build(&nu)?;
    let t = c.times(&[1.0])[0];
    table.check_horizon(t)?;
    let h = table.h(t)?;
    let sampler = Sampler::from_table(&table, t, epsilon)?;
    let samples = sampler.sample(n, c.seed);
    let g = density_fourier(&table, t, c.grid(&table, t)?)?;
    let bw = bandwidth.map_or(Bandwidth::Silverman, Bandwidth::Fixed);
    let region = c.x_max.unwrap_or(3.0 * h);
    let cmp = kde_compare(&samples, &g, region, bw)?;
    let out = c.out_dir()?;
    let doc = serde_json::json!({
        "n": n,
        "seed": c.seed,
        "h": h,
        "sampler": sampler.summary(),
        "moments": sample_moments(&samples, nu.d),
        "bandwidth": cmp.bandwidth,
        "region": cmp.region,
        "sup_abs": cmp.sup_abs,
        "sup_rel": cmp.sup_rel,
    });
    std::fs::write(out.join("mc_summary.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    let mut w = csv_writer(&out.join("mc_discrepancy.csv"))?;
    w.write_record(["x", "kde", "p", "abs_err", "rel_err"])?;
    for (x, k, p) in &cmp.rows {
        w.write_record([
            format!("{x:e}"),
            format!("{k:e}"),
            format!("{p:e}"),
            format!("{:e}", (k - p).abs()),
            format!("{:e}", (k - p).abs() / p),
        ])?;
    }
    w.flush()?;
    println!("n = {n}, bandwidth = {:.4e}, relative sup-error on |x| ≤ {region:.4} = {:.4e}", cmp.bandwidth, cmp.sup_rel);
    Ok(true)
}

fn cmd_report(input: &Path, out: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report: SuiteReport =
        serde_json::from_str(&text).map_err(|e| LevyError::Config(format!("{}: {e}", input.display())))?;
    std::fs::create_dir_all(out)?;
    let file = File::create(out.join("report.csv"))?;
    write_summary_csv(&report.fits, file)?;
    print_summary(&report);
    Ok(report.pass)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Symbol(c) => cmd_symbol(&c),
        Command::Density(c) => cmd_density(&c),
        Command::Envelope { common, theta } => cmd_envelope(&common, theta),
        Command::Verify { common, no_certified } => cmd_verify(&common, !no_certified),
        Command::Mc {
            common,
            n,
            epsilon,
            bandwidth,
        } => cmd_mc(&common, n, epsilon, bandwidth),
        Command::Report { input, out } => cmd_report(&input, &out),
    }
}

fn usage_error(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<LevyError>(),
        Some(
            LevyError::BeyondHorizon { .. }
                | LevyError::Config(_)
                | LevyError::InvalidParameter { .. }
                | LevyError::NotLevyMeasure { .. }
                | LevyError::NonMonotoneProfile { .. }
        )
    )
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LEVYKERNEL_THREADS") {
        let n: usize = v.parse().with_context(|| format!("LEVYKERNEL_THREADS: cannot parse `{v}`"))?;
        if n == 0 {
            bail!("LEVYKERNEL_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
