use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use ultraglab::asymptotics::{classify_scalar_net, fit_single_scale, scale_exponent, EpsGrid, Policy, Sign, Verdict};
use ultraglab::grid::{GridBox, MultiIndex};
use ultraglab::io::{read_array, write_array};
use ultraglab::microlocal::{cone_sum, cone_sum_bruteforce, WaveFrontEstimate};
use ultraglab::nets::sampled::SampledNet;
use ultraglab::nets::{builtin_net, derivative, mul, BuiltinParams, Net};
use ultraglab::spectral::cone_partition;
use ultraglab::C64;

fn analytic(name: usize, center: f64) -> Net {
    let params = BuiltinParams { center: Some(center), pole: Some(center), ..BuiltinParams::default() };
    let names = ["gaussian", "cauchy", "gevrey_bump", "eps_oscillation"];
    builtin_net(names[name], &params, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_laws_are_recovered(c in 0.1f64..10.0, k in 0.5f64..10.0, growth: bool, sigma in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let model = scale_exponent(sigma).unwrap();
        let sign = if growth { 1.0 } else { -1.0 };
        let data: Vec<(f64, f64)> = EpsGrid::standard().values().iter().map(|&e| (e, c * (sign * k * model.feature(e)).exp())).collect();
        let fit = fit_single_scale(&data, &model).unwrap();
        prop_assert_eq!(fit.sign, if growth { Sign::Growth } else { Sign::Decay });
        prop_assert!((fit.k - k).abs() <= 1e-6 * k);
    }

    #[test]
    fn slower_orders_have_smaller_scales(sigma in 1.0f64..4.0, gap in 0.01f64..4.0, eps in 1e-8f64..0.999) {
        let (lo, hi) = (scale_exponent(sigma).unwrap(), scale_exponent(sigma + gap).unwrap());
        prop_assert!(lo.feature(eps) >= hi.feature(eps));
    }

    #[test]
    fn negligible_nets_stay_negligible_at_higher_orders(k in 1.0f64..5.0, sigma in 1.5f64..2.5, gap in 0.1f64..2.0) {
        let s = scale_exponent(sigma).unwrap().s();
        let values: Vec<(f64, C64)> = EpsGrid::standard().values().iter().map(|&e| (e, C64::new((-k * e.powf(-s)).exp(), 0.0))).collect();
        let policy = Policy::default();
        for order in [sigma, sigma + gap] {
            let c = classify_scalar_net(&values, &scale_exponent(order).unwrap(), &policy).unwrap();
            prop_assert!(c.verdict.is_negligible(), "order {}: {:?}", order, c);
            prop_assert!(c.verdict == Verdict::ExactZero || c.k_hat >= policy.k_min);
        }
    }

    #[test]
    fn arrays_round_trip(two_d: bool, n in prop::sample::select(vec![8usize, 16, 32]), lo in -3.0f64..0.0, width in 0.5f64..4.0, count in 1usize..4, seed: u64) {
        let grid = if two_d { GridBox::square(lo, lo + width, n) } else { GridBox::line(lo, lo + width, n) }.unwrap();
        let eps: Vec<f64> = (0..count).map(|i| 0.1 / (i + 1) as f64).collect();
        let data: Vec<Vec<C64>> = (0..count)
            .map(|i| (0..grid.len()).map(|j| C64::new((seed.wrapping_mul(j as u64 + 1) % 1000) as f64 * 1e-3, i as f64 - j as f64)).collect())
            .collect();
        let net = SampledNet::new(grid, eps, data).unwrap();
        let mut buf = Vec::new();
        write_array(&net, &mut buf).unwrap();
        let back = read_array(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid, net.grid);
        prop_assert_eq!(back.eps, net.eps);
        prop_assert_eq!(back.data, net.data);
    }

    #[test]
    fn cone_sum_matches_enumeration(bins in prop::sample::select(vec![8usize, 16, 32]), a in prop::collection::vec((0usize..3, 0usize..32), 0..8), b in prop::collection::vec((0usize..3, 0usize..32), 0..8)) {
        let part = cone_partition(2, bins).unwrap();
        let estimate = |entries: &[(usize, usize)]| WaveFrontEstimate {
            probes: vec![[-0.2, 0.0], [0.0, 0.1], [0.3, -0.3]],
            entries: entries.iter().map(|&(p, b)| (p, b % bins)).collect::<BTreeSet<_>>(),
            diagnostics: BTreeMap::new(),
            partition: part.clone(),
        };
        let (a, b) = (estimate(&a), estimate(&b));
        prop_assert_eq!(cone_sum(&a, &b).unwrap().entries, cone_sum_bruteforce(&a, &b).unwrap());
    }

    #[test]
    fn evaluation_is_repeatable(name in 0usize..4, center in -0.3f64..0.3, x in -0.9f64..0.9, eps in 1e-4f64..0.1) {
        let f = analytic(name, center);
        let first = f.value(eps, [x, 0.0]).unwrap();
        let second = f.value(eps, [x, 0.0]).unwrap();
        prop_assert_eq!(first.re.to_bits(), second.re.to_bits());
        prop_assert_eq!(first.im.to_bits(), second.im.to_bits());
    }

    #[test]
    fn products_obey_leibniz(a in 0usize..4, b in 0usize..4, ca in -0.3f64..0.3, cb in -0.3f64..0.3, x in -0.9f64..0.9, eps in 1e-3f64..0.1) {
        let (f, g) = (analytic(a, ca), analytic(b, cb));
        let d = MultiIndex::d1(1);
        let at = [x, 0.0];
        let lhs = derivative(&mul(&f, &g).unwrap(), d).unwrap().value(eps, at).unwrap();
        let rhs = f.derivative_at(eps, at, d).unwrap() * g.value(eps, at).unwrap() + f.value(eps, at).unwrap() * g.derivative_at(eps, at, d).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()), "{} vs {}", lhs, rhs);
    }
}
