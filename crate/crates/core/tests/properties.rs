use std::sync::OnceLock;

use levykernel::config::presets;
use levykernel::density::{density_fourier, poisson_tail, GridSpec};
use levykernel::envelopes::{
    classify, high_intensity_shapes, tempered_crossover, tempered_lower_shape, tempered_tail_exponent,
    tempered_upper_shape, HighIntensityConstants, Regime, RegimeThresholds,
};
use levykernel::SymbolTable;
use proptest::prelude::*;

fn truncated_table() -> &'static SymbolTable {
    static T: OnceLock<SymbolTable> = OnceLock::new();
    T.get_or_init(|| SymbolTable::build(&presets::truncated(1.5, 1.0).unwrap()).unwrap())
}

fn tempered_table() -> &'static SymbolTable {
    static T: OnceLock<SymbolTable> = OnceLock::new();
    T.get_or_init(|| SymbolTable::build(&presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classify_matches_its_predicates(
        theta in 0.01f64..2.0,
        l0 in 0.05f64..1.0,
        m0 in 0.1f64..10.0,
        r0 in 0.1f64..5.0,
        lt in -4.0f64..2.0,
        x in 0.0f64..50.0,
    ) {
        let th = RegimeThresholds::new(m0, r0, 1.0, theta, l0, theta).unwrap();
        let t = 10f64.powf(lt);
        let h = t.sqrt();
        let r = classify(&th, h, t, x);
        prop_assert_eq!(r == Regime::NearDiagonal, x <= th.eta_star * h);
        if r != Regime::NearDiagonal {
            prop_assert_eq!(r == Regime::ExpXLog, x > r0.max(th.c_star_upper * t));
        }
        if r == Regime::LevyTail || r == Regime::Gaussian {
            prop_assert_eq!(r == Regime::LevyTail, t <= th.t1);
        }
        prop_assert_eq!(classify(&th, h, t, -x), r);
        prop_assert!((th.t1 * th.c_star_upper - r0).abs() <= 1e-12 * r0);
    }

    #[test]
    fn tempered_shapes_decrease_in_x(
        t in 0.1f64..50.0,
        c in 1e-3f64..2.0,
        beta in 0.2f64..1.9,
        x in 0.0f64..40.0,
        dx in 1e-3f64..5.0,
    ) {
        prop_assert!(tempered_upper_shape(1, t, x + dx, c, 1.0, beta) <= tempered_upper_shape(1, t, x, c, 1.0, beta));
        prop_assert!(tempered_lower_shape(1, t, x + dx, c, c, beta) <= tempered_lower_shape(1, t, x, c, c, beta));
    }

    #[test]
    fn crossover_balances_both_exponents(c in 1e-3f64..2.0, t in 0.1f64..50.0, beta in 0.2f64..1.9) {
        let x = tempered_crossover(c, t, 1.0, beta).unwrap();
        let lhs = c * x * x / t;
        let rhs = tempered_tail_exponent(1.0, beta, x);
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn high_intensity_lower_below_upper_at_matched_constants(
        lt in -5.0f64..-0.1,
        x in 1e-6f64..0.999,
        c in 0.01f64..3.0,
    ) {
        let t = 10f64.powf(lt);
        let h = (t * (2.0 / t).ln()).sqrt();
        let k = HighIntensityConstants { beta: 2.0, c_low: 1.0, c7: c, c_high: 1.0, c9: c, c10: 1.0 };
        let (lo, hi) = high_intensity_shapes(1, h, t, x, &k);
        // x log(1 + x) ≤ x², so the upper Gaussian-type term is the larger one
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(hi > 0.0);
    }

    #[test]
    fn poisson_tail_is_a_decreasing_probability(mu in 0.0f64..60.0, n in 0usize..80) {
        let a = poisson_tail(mu, n);
        let b = poisson_tail(mu, n + 1);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b <= a);
    }

    #[test]
    fn psi_is_monotone_and_dominates_phi(lr in -3.0f64..4.0, step in 1e-3f64..1.0) {
        for table in [truncated_table(), tempered_table()] {
            let r = 10f64.powf(lr);
            let a = table.psi(r).unwrap();
            let b = table.psi(r * (1.0 + step)).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-12));
            prop_assert!(table.phi_radial(r).unwrap() <= a * (1.0 + 1e-12));
        }
    }

    #[test]
    fn scale_function_increases_in_t(lt in -3.0f64..2.0, f in 1.01f64..10.0) {
        for table in [truncated_table(), tempered_table()] {
            let t = 10f64.powf(lt);
            prop_assert!(table.h(t * f).unwrap() > table.h(t).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn density_is_symmetric_with_unit_mass(lt in -1.0f64..1.0) {
        let t = 10f64.powf(lt);
        let g = density_fourier(truncated_table(), t, GridSpec::new(40.0, 2048).unwrap()).unwrap();
        prop_assert!((g.total_mass() - 1.0).abs() < 1e-8);
        let p0 = g.p0();
        for j in 1..2000i64 {
            prop_assert!((g.at(j) - g.at(-j)).abs() <= 1e-12 * p0);
            prop_assert!(g.at(j) <= p0 * (1.0 + 1e-12));
        }
    }
}
