use levykernel::config::presets;
use levykernel::density::{auto_grid, density_fourier, GridSpec};
use levykernel::mc_oracle::{
    kde_compare, kde_self_discrepancy, ks_distance, radius_cdf, sample_moments, Bandwidth, Sampler,
};
use levykernel::{LevyError, SymbolTable};

#[test]
fn truncated_second_moment_is_t_m0() {
    let nu = presets::truncated(1.5, 1.0).unwrap();
    let table = SymbolTable::build(&nu).unwrap();
    for &t in &[0.5, 1.0] {
        let s = Sampler::from_table(&table, t, None).unwrap();
        let m = sample_moments(&s.sample(1_000_000, 11), 1);
        assert!((m.second_moment - 4.0 * t).abs() < 3.0 * m.second_stderr, "{m:?}");
        assert!(m.mean.abs() < 4.0 * m.mean_stderr, "{m:?}");
    }
}

#[test]
fn jump_radii_match_tail_integral() {
    for nu in [
        presets::truncated(1.5, 1.0).unwrap(),
        presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap(),
        presets::cauchy().unwrap(),
    ] {
        let eps = 0.05;
        let s = Sampler::new(&nu, 1.0, eps).unwrap();
        let cdf = radius_cdf(&nu, eps).unwrap();
        let ks = ks_distance(&s.sample_radii(100_000, 2024), &cdf);
        assert!(ks < 0.01, "KS = {ks}");
    }
}

#[test]
fn cauchy_kde_within_ten_percent() {
    let nu = presets::cauchy().unwrap();
    let table = SymbolTable::build(&nu).unwrap();
    let s = Sampler::from_table(&table, 1.0, None).unwrap();
    let xs = s.sample(1_000_000, 1);
    let g = density_fourier(&table, 1.0, auto_grid(&table, 1.0).unwrap()).unwrap();
    let c = kde_compare(&xs, &g, 3.0, Bandwidth::Silverman).unwrap();
    assert!(c.sup_rel <= 0.1, "{}", c.sup_rel);
    assert!(c.rows.iter().any(|r| r.0 >= 2.9));
}

#[test]
fn self_discrepancy_halves_at_four_n() {
    let nu = presets::truncated(1.5, 1.0).unwrap();
    let table = SymbolTable::build(&nu).unwrap();
    let h = table.h(1.0).unwrap();
    let s = Sampler::from_table(&table, 1.0, None).unwrap();
    let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.15 * h).collect();
    let (mut a, mut b) = (0.0, 0.0);
    for seed in 0..6 {
        a += kde_self_discrepancy(&s, 25_000, seed, 0.2 * h, &xs).unwrap();
        b += kde_self_discrepancy(&s, 100_000, seed, 0.2 * h, &xs).unwrap();
    }
    let ratio = b / a;
    assert!((0.4..0.62).contains(&ratio), "ratio {ratio}");
}

#[test]
fn empty_central_region_is_an_error() {
    let nu = presets::truncated(1.5, 1.0).unwrap();
    let table = SymbolTable::build(&nu).unwrap();
    let g = density_fourier(&table, 1.0, GridSpec::new(20.0, 256).unwrap()).unwrap();
    let s = Sampler::from_table(&table, 1.0, None).unwrap();
    let xs = s.sample(1000, 0);
    assert!(matches!(
        kde_compare(&xs, &g, -1.0, Bandwidth::Silverman),
        Err(LevyError::EmptyRegion(_))
    ));
}

#[test]
fn two_dimensional_sampler_is_isotropic() {
    let nu = presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap();
    let nu2 = levykernel::LevyMeasure::uniform(2, nu.radial.clone(), nu.mass()).unwrap();
    let s = Sampler::new(&nu2, 1.0, 0.05).unwrap();
    let xs = s.sample(200_000, 9);
    let m1: f64 = xs.iter().step_by(2).map(|x| x * x).sum::<f64>();
    let m2: f64 = xs.iter().skip(1).step_by(2).map(|x| x * x).sum::<f64>();
    assert!((m1 / m2 - 1.0).abs() < 0.05, "{}", m1 / m2);
}
