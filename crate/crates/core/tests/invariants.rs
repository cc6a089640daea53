//! Battery-level invariants of the nets, mollifier, embedding, spectral and
//! microlocal layers.

use std::collections::BTreeSet;
use std::sync::Arc;

use ultraglab::asymptotics::{classify_function_net, classify_scalar_net, scale_exponent, EpsGrid, Policy, Sign, Verdict};
use ultraglab::embed::{embed_compact, embed_compact_net, is_moderate_report, Atom, DistributionExpr, EmbedContext, Samples1d};
use ultraglab::fourier::forward;
use ultraglab::gevrey::{build_mollifier, fourier_decay_fit, rho_decay_fit, CutoffProfile, Mollifier, MollifierSpec};
use ultraglab::grid::{GridBox, Region};
use ultraglab::microlocal::{sigma_cone, sing_support, wave_front, MicrolocalContext};
use ultraglab::nets::equality::{equality_test, EqualityContext, EqualityMode, TestFunction};
use ultraglab::nets::points::{argmax_path, gen_point_equiv, point_value, GenPoint};
use ultraglab::nets::{add, builtin_net, mul, sub, BuiltinParams, Net};
use ultraglab::spectral::{cone_partition, spectrum_of_field, SampledField, Window};
use ultraglab::C64;

fn p() -> BuiltinParams {
    BuiltinParams::default()
}

fn moll() -> Arc<Mollifier> {
    Arc::new(build_mollifier(&MollifierSpec::default()).unwrap())
}

fn line(n: usize) -> GridBox {
    GridBox::line(-1.0, 1.0, n).unwrap()
}

fn eps_exp(rate: f64) -> Net {
    builtin_net("eps_exp", &BuiltinParams { rate: Some(rate), ..p() }, None).unwrap()
}

#[test]
fn equality_modes_are_nested() {
    let m = moll();
    let ctx = EqualityContext {
        grid: line(2048),
        eps: EpsGrid::standard(),
        sigma: 2.0,
        policy: Policy::default(),
        max_order: 2,
        assoc_tol: 1e-6,
    };
    let gaussian = builtin_net("gaussian", &p(), None).unwrap();
    let delta = builtin_net("mollified_delta", &p(), Some(&m)).unwrap();
    let small = builtin_net("eps_power", &BuiltinParams { power: Some(2.0), ..p() }, None).unwrap();
    // `None` leaves a verdict unasserted: pairings of size ε² fit a decaying law at the
    // slowest scale ε^{-1/9} over three decades, so TSense(3σ-1) cannot rule them out.
    let cases = [
        (gaussian.clone(), add(&gaussian, &mul(&gaussian, &eps_exp(-3.0)).unwrap()).unwrap(), [Some(true); 4]),
        (delta.clone(), add(&delta, &eps_exp(-4.0)).unwrap(), [Some(true); 4]),
        (gaussian.clone(), add(&gaussian, &mul(&gaussian, &small).unwrap()).unwrap(), [Some(false), None, Some(false), Some(true)]),
        (gaussian.clone(), builtin_net("cauchy", &p(), None).unwrap(), [Some(false); 4]),
    ];
    let tests: Vec<TestFunction> =
        [-0.4, 0.0, 0.3].iter().map(|&c| TestFunction::bump(2.0, [c, 0.0], 0.1, 0.25, &ctx.grid).unwrap()).collect();
    let modes = [EqualityMode::Strong, EqualityMode::TSense { t: 5.0 }, EqualityMode::TSense { t: 2.0 }, EqualityMode::Associated];
    for (f, g, expected) in &cases {
        let holds: Vec<bool> = modes.iter().map(|&m| equality_test(f, g, m, &tests, &ctx).unwrap().holds).collect();
        for (h, e) in holds.iter().zip(expected) {
            assert!(e.is_none_or(|e| e == *h), "{} vs {}: {holds:?}", f.id(), g.id());
        }
        let implied = |a: usize, b: usize| !holds[a] || holds[b];
        assert!(implied(0, 1) && implied(0, 2) && implied(2, 3) && implied(1, 3), "hierarchy broken for {} vs {}", f.id(), g.id());
    }
}

#[test]
fn equivalent_points_give_equivalent_values() {
    let m = moll();
    let eps = EpsGrid::standard();
    let model = scale_exponent(2.0).unwrap();
    let policy = Policy::default();
    let x = GenPoint::constant(1, [0.3, 0.0], &eps);
    let y = GenPoint::from_fn(1, &eps, |e| [0.3 + (-3.0 * e.powf(-1.0 / 3.0)).exp(), 0.0]);
    assert!(gen_point_equiv(&x, &y, &model, &policy).unwrap().0);
    let battery = [
        builtin_net("gaussian", &p(), None).unwrap(),
        builtin_net("cauchy", &BuiltinParams { pole: Some(0.3), ..p() }, None).unwrap(),
        builtin_net("gevrey_bump", &p(), None).unwrap(),
        builtin_net("mollified_heaviside", &BuiltinParams { center: Some(0.3), ..p() }, Some(&m)).unwrap(),
    ];
    for f in &battery {
        let (a, b) = (point_value(f, &x, &model, &policy).unwrap(), point_value(f, &y, &model, &policy).unwrap());
        let gap: Vec<(f64, C64)> = a.values.iter().zip(&b.values).map(|(u, v)| (u.0, u.1 - v.1)).collect();
        let c = classify_scalar_net(&gap, &model, &policy).unwrap();
        assert!(c.verdict.is_negligible(), "{}: {:?}", f.id(), c);
    }
}

#[test]
fn argmax_witnesses_non_negligible_nets() {
    let m = moll();
    let eps = EpsGrid::standard();
    let model = scale_exponent(2.0).unwrap();
    let policy = Policy::default();
    let grid = line(1024);
    for f in [
        builtin_net("gaussian", &p(), None).unwrap(),
        builtin_net("cauchy", &p(), None).unwrap(),
        builtin_net("mollified_delta", &p(), Some(&m)).unwrap(),
    ] {
        let v = point_value(&f, &argmax_path(&f, &grid, &eps).unwrap(), &model, &policy).unwrap();
        assert!(!v.classification.verdict.is_negligible(), "{}", f.id());
    }
}

#[test]
fn mollifier_transform_decays_for_every_order() {
    for sigma in [1.5, 2.0, 3.0] {
        let m = build_mollifier(&MollifierSpec { sigma, ..MollifierSpec::default() }).unwrap();
        assert!(fourier_decay_fit(&m).unwrap().k > 0.0, "sigma {sigma}");
        assert!(m.diagnostics.moment_errors[1..=6].iter().all(|&e| e <= 1e-6), "sigma {sigma}");
    }
}

#[test]
fn cutoff_mollifier_bound_and_discrepancy() {
    let m = Arc::new(build_mollifier(&MollifierSpec::new(2.0, 2048.0, 4096)).unwrap());
    let cut = CutoffProfile::new(2.0, 1.0, 2.0).unwrap();
    let fit = rho_decay_fit(&m, &cut, &EpsGrid::standard()).unwrap();
    assert!(fit.coverage >= 0.99, "{fit:?}");
    let rho = builtin_net("cutoff_mollifier", &p(), Some(&m)).unwrap();
    let phi = builtin_net("mollified_delta", &p(), Some(&m)).unwrap();
    let c = classify_function_net(&sub(&rho, &phi).unwrap(), &line(4096), &EpsGrid::standard(), 0, &scale_exponent(2.0).unwrap(), &Policy::default(), true)
        .unwrap();
    assert!(c.verdict.is_negligible() && c.k_hat >= 1.0, "{c:?}");
}

fn embed_ctx(n: usize) -> EmbedContext {
    EmbedContext { grid: line(n), eps: EpsGrid::standard(), model: scale_exponent(2.0).unwrap(), policy: Policy::default(), max_order: 2 }
}

fn distribution_battery() -> Vec<(&'static str, DistributionExpr)> {
    vec![
        ("delta", DistributionExpr::delta(0.0)),
        ("delta'", DistributionExpr::delta_deriv(1, 0.0, 1.0)),
        ("H", DistributionExpr::jump(0.0, Region::interval(-0.5, 0.5))),
        ("2 delta", DistributionExpr::delta_deriv(0, 0.0, 2.0)),
    ]
}

#[test]
fn embeddings_are_moderate() {
    let m = moll();
    let ctx = embed_ctx(2048);
    for (name, t) in distribution_battery() {
        let r = embed_compact(&t, &m, &ctx).unwrap();
        assert!(r.per_alpha_growth.len() >= 2, "{name}");
        assert!(is_moderate_report(&r, &ctx.policy), "{name}: {:?}", r.per_alpha_growth);
    }
}

#[test]
fn distinct_distributions_pair_differently() {
    let m = moll();
    let ctx = embed_ctx(2048);
    let nets: Vec<(&str, Net)> = distribution_battery().into_iter().map(|(n, t)| (n, embed_compact_net(&t, &m, &ctx).unwrap())).collect();
    let tests: Vec<Vec<f64>> = [-0.3, -0.1, 0.0, 0.1, 0.3]
        .iter()
        .map(|&c| TestFunction::bump(2.0, [c, 0.0], 0.15, 0.3, &ctx.grid).unwrap().samples)
        .collect();
    let e = *ctx.eps.values().last().unwrap();
    let dx = ctx.grid.axes[0].dx();
    for i in 0..nets.len() {
        for j in i + 1..nets.len() {
            let diff = sub(&nets[i].1, &nets[j].1).unwrap().sample(e, &ctx.grid).unwrap();
            let largest = tests
                .iter()
                .map(|psi| diff.iter().zip(psi).map(|(v, w)| v * *w).sum::<C64>().norm() * dx)
                .fold(0.0f64, f64::max);
            assert!(largest > 1e-3, "{} vs {}: {largest:e}", nets[i].0, nets[j].0);
        }
    }
}

#[test]
fn embedding_commutes_on_gevrey_functions() {
    let m = moll();
    let ctx = embed_ctx(2048);
    let bump = builtin_net("gevrey_bump", &p(), None).unwrap();
    let samples = Samples1d::from_net(&bump, &ctx.grid).unwrap();
    let t = DistributionExpr::new(vec![Atom::Density(samples)], Region::interval(-0.5, 0.5));
    let convolved = embed_compact_net(&t, &m, &ctx).unwrap();
    let eq = EqualityContext { grid: ctx.grid.clone(), eps: ctx.eps.clone(), sigma: 2.0, policy: Policy::default(), max_order: 1, assoc_tol: 1e-6 };
    // I(f) in the same sampled representation, so derivatives of both sides use the same stencils.
    let constant = Net::sampled("bump", bump.to_sampled(ctx.eps.values(), &ctx.grid).unwrap());
    let v = equality_test(&constant, &convolved, EqualityMode::Strong, &[], &eq).unwrap();
    assert!(v.holds, "{:?}", v.strong);
}

#[test]
fn parseval_holds_for_every_eps() {
    let m = moll();
    let grid = line(1024);
    let window = Window::new(2.0, [0.1, 0.0], 0.4).unwrap();
    let f = builtin_net("cauchy", &p(), None).unwrap();
    let dx = grid.axes[0].dx();
    for &e in EpsGrid::standard().values() {
        for g in [&f, &builtin_net("mollified_delta", &p(), Some(&m)).unwrap()] {
            let w: Vec<C64> =
                g.sample(e, &grid).unwrap().iter().zip(grid.points()).map(|(v, x)| v * window.value(x, 1)).collect();
            let space: f64 = w.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
            let freq: f64 = forward(&w, &grid).iter().map(|v| v.norm_sqr()).sum::<f64>() / (grid.len() as f64 * dx);
            assert!((space - freq).abs() <= 1e-10 * space, "eps {e}: {space} vs {freq}");
        }
    }
}

#[test]
fn shifting_the_window_keeps_magnitudes() {
    let grid = line(1024);
    let one = builtin_net("one", &p(), None).unwrap();
    let field = SampledField::new(&one, &grid, &[0.1]).unwrap();
    let part = cone_partition(1, 2).unwrap();
    let dx = grid.axes[0].dx();
    let a = spectrum_of_field(&field, Some(&Window::new(2.0, [0.0, 0.0], 0.3).unwrap()), &part).unwrap();
    let b = spectrum_of_field(&field, Some(&Window::new(2.0, [dx, 0.0], 0.3).unwrap()), &part).unwrap();
    for (pa, pb) in a.iter().zip(&b) {
        let scale = pa.samples.iter().fold(0.0f64, |m, s| m.max(s.magnitude));
        for (sa, sb) in pa.samples.iter().zip(&pb.samples) {
            assert_eq!(sa.xi, sb.xi);
            assert!((sa.magnitude - sb.magnitude).abs() <= 1e-12 * scale);
        }
    }
}

fn micro_ctx() -> MicrolocalContext {
    MicrolocalContext::new(line(4096), &EpsGrid::standard(), 2.0, cone_partition(1, 2).unwrap()).unwrap()
}

fn probes() -> Vec<[f64; 2]> {
    (0..5).map(|i| [-0.5 + 0.25 * i as f64, 0.0]).collect()
}

#[test]
fn wave_front_projects_onto_singular_support() {
    let m = moll();
    let ctx = micro_ctx();
    let probes = probes();
    let battery = [
        builtin_net("mollified_delta", &p(), Some(&m)).unwrap(),
        builtin_net("cauchy", &BuiltinParams { pole: Some(-0.25), ..p() }, None).unwrap(),
        builtin_net("gaussian", &p(), None).unwrap(),
        add(&builtin_net("mollified_heaviside", &p(), Some(&m)).unwrap(), &builtin_net("cauchy", &BuiltinParams { pole: Some(0.5), ..p() }, None).unwrap())
            .unwrap(),
    ];
    for f in &battery {
        let wf = wave_front(f, &probes, &ctx).unwrap();
        let ss: BTreeSet<usize> = sing_support(f, &probes, &ctx).unwrap().into_iter().collect();
        assert_eq!(wf.points(), ss, "{}", f.id());
    }
}

#[test]
fn compactly_supported_wave_front_bins_match_sigma_cone() {
    let m = moll();
    let ctx = micro_ctx();
    let probes = probes();
    let bump = builtin_net("gevrey_bump", &p(), None).unwrap();
    let battery = [
        builtin_net("mollified_delta", &p(), Some(&m)).unwrap(),
        mul(&bump, &builtin_net("cauchy", &p(), None).unwrap()).unwrap(),
        mul(&bump, &builtin_net("mollified_heaviside", &p(), Some(&m)).unwrap()).unwrap(),
        bump,
    ];
    let n = ctx.partition.len();
    for f in &battery {
        let wf = wave_front(f, &probes, &ctx).unwrap();
        let bins: BTreeSet<usize> = wf.entries.iter().map(|e| e.1).collect();
        let cone = sigma_cone(f, &ctx).unwrap();
        let dilate = |s: &BTreeSet<usize>| s.iter().flat_map(|&b| [(b + n - 1) % n, b, (b + 1) % n]).collect::<BTreeSet<_>>();
        assert!(bins.is_subset(&dilate(&cone)) && cone.is_subset(&dilate(&bins)), "{}: {bins:?} vs {cone:?}", f.id());
    }
}

#[test]
fn embedded_delta_derivative_has_the_classical_wave_front() {
    let m = moll();
    let ctx = micro_ctx();
    let ectx = embed_ctx(4096);
    let probes = probes();
    let f = embed_compact_net(&DistributionExpr::delta_deriv(1, 0.0, 1.0), &m, &ectx).unwrap();
    let wf = wave_front(&f, &probes, &ctx).unwrap();
    assert_eq!(wf.entries, [(2, 0), (2, 1)].into());
}

#[test]
fn scalar_classification_matches_direct_sign() {
    let policy = Policy::default();
    let model = scale_exponent(2.0).unwrap();
    let values: Vec<(f64, C64)> = EpsGrid::standard().values().iter().map(|&e| (e, C64::new((-2.0 * e.powf(-1.0 / 3.0)).exp(), 0.0))).collect();
    let c = classify_scalar_net(&values, &model, &policy).unwrap();
    assert_eq!(c.verdict, Verdict::Negligible);
    assert!(c.per_alpha.values().all(|f| f.sign == Sign::Decay));
}
