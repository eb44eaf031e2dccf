use proptest::prelude::*;

use sdist::designer::{solve_alpha, solve_shape, solve_x0, QuantileConstraint, Unknown};
use sdist::fitter::stage2_fit;
use sdist::lerch::{lerch_phi, lerch_phi_shifted, DEFAULT_TOL};
use sdist::sampler::{sample, SampleRequest};
use sdist::{SDistribution, SParams};

/// Valid parameter tuples with the shape away from `h = g`.
fn any_params() -> impl Strategy<Value = SParams> {
    (-50.0..50.0f64, 0.05..5.0f64, -1.5..3.0f64, 0.2..8.0f64)
        .prop_map(|(x0, a, g, gap)| SParams::new(0.5, x0, a, g, g + gap).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn lerch_shift_consistency(z in 0.0..0.99f64, v in 0.05..20.0f64, m in 1usize..200) {
        let direct = lerch_phi(z, v, DEFAULT_TOL).unwrap();
        let shifted = lerch_phi_shifted(z, v, m).unwrap();
        prop_assert!((direct - shifted).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn lerch_monotone(z in 0.01..0.99f64, dz in 0.001..0.01f64, v in 0.05..20.0f64, dv in 0.01..1.0f64) {
        let base = lerch_phi(z, v, DEFAULT_TOL).unwrap();
        prop_assert!(lerch_phi(z + dz, v, DEFAULT_TOL).unwrap() > base);
        prop_assert!(lerch_phi(z, v + dv, DEFAULT_TOL).unwrap() < base);
    }

    #[test]
    fn quantile_increases(p in any_params(), a in 0.001..0.999f64, b in 0.001..0.999f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let d = SDistribution::new(p).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(d.quantile(lo).unwrap() < d.quantile(hi).unwrap());
    }

    #[test]
    fn alpha_scales_distance_from_x0(p in any_params(), f in 0.01..0.99f64, k in 0.1..10.0f64) {
        let d = SDistribution::new(p).unwrap();
        let scaled = SDistribution::new(SParams { alpha: p.alpha * k, ..p }).unwrap();
        let base = d.quantile(f).unwrap() - p.x0;
        let got = scaled.quantile(f).unwrap() - p.x0;
        prop_assert!((got - base / k).abs() <= 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn cdf_inverts_quantile(p in any_params(), f in 0.001..0.999f64) {
        let d = SDistribution::new(p).unwrap();
        let x = d.quantile(f).unwrap();
        prop_assert!((d.cdf(x).unwrap() - f).abs() <= 1e-9);
    }

    #[test]
    fn design_round_trip(
        x0 in -20.0..20.0f64,
        alpha in 0.2..3.0f64,
        g in -1.0..0.95f64,
        gap in 0.5..6.0f64,
        which in 0usize..3,
    ) {
        let f_star = [0.0, 0.1, 0.25][which];
        let h = g + gap;
        let p = SParams::new(0.5, x0, alpha, g, h).unwrap();
        let x_star = SDistribution::new(p).unwrap().quantile(f_star).unwrap();
        let c = QuantileConstraint::new(f_star, x_star).unwrap();
        let rel = |got: f64, want: f64| (got - want).abs() <= 1e-6 * want.abs().max(1.0);

        prop_assert!(rel(solve_x0(c, 0.5, alpha, g, h).unwrap(), x0));
        prop_assert!(rel(solve_alpha(c, 0.5, x0, g, h).unwrap(), alpha));
        let sg = solve_shape(Unknown::G, c, 0.5, x0, alpha, h).unwrap();
        prop_assert!(sg.multiple_roots || rel(sg.value, g), "g: {sg:?} vs {g}");
        let sh = solve_shape(Unknown::H, c, 0.5, x0, alpha, g).unwrap();
        prop_assert!(sh.multiple_roots || rel(sh.value, h), "h: {sh:?} vs {h}");
    }

    #[test]
    fn samples_stay_in_support(p in any_params(), seed in any::<u64>()) {
        let d = SDistribution::new(p).unwrap();
        let left = d.left_endpoint().unwrap();
        let xs = sample(&SampleRequest::new(p, 200, seed).unwrap()).unwrap();
        prop_assert!(xs.iter().all(|&x| x > left && x.is_finite()));
    }

    #[test]
    fn stage2_affine_equivariance(scale in 0.2..5.0f64, shift in -100.0..100.0f64, seed in any::<u64>()) {
        let p = SParams::new(0.5, 50.0, 1.0, 0.6, 3.0).unwrap();
        let mut xs = sample(&SampleRequest::new(p, 100, seed).unwrap()).unwrap();
        xs.sort_by(f64::total_cmp);
        let base = stage2_fit(&xs, 0.6, 3.0, 1.0, 50.0).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let t = stage2_fit(&moved, 0.6, 3.0, 1.0, 50.0 * scale + shift).unwrap();
        prop_assert!((t.x0 - (scale * base.x0 + shift)).abs() <= 1e-7 * (1.0 + t.x0.abs()));
        prop_assert!((t.alpha - base.alpha / scale).abs() <= 1e-7 * base.alpha / scale);
    }
}
