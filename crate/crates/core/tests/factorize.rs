use groupoid_deconv::factorize::*;
use groupoid_deconv::gridfn::{AnalyticFn1D, Box2, Grid1, GridFn, GridFn1D, GridFn2D, Interval};
use groupoid_deconv::groupoid::*;
use groupoid_deconv::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(c: f64, r: f64) -> AnalyticFn1D {
    AnalyticFn1D::bump_on(c, r).unwrap()
}

/// Bump times a gaussian of matching width.
fn gaussian_bump(c: f64, r: f64) -> AnalyticFn1D {
    bump(c, r).mul(&AnalyticFn1D::gaussian().compose_affine(2.0 / r, -2.0 * c / r).unwrap())
}

fn unit() -> FieldSpec {
    FieldSpec::Named(NamedField::Unit)
}

fn tanh_flow() -> LineAction {
    LineAction::Interval(FlowField::new(AnalyticFn1D::tanh(), 1e-3, 10.0).unwrap())
}

#[test]
fn linefac_ck_translation_and_tanh() {
    let dx = 5e-3;
    let eps = 0.5;
    let grid = Grid1::covering(-4.0, 4.0, dx).unwrap();
    let translation = LineAction::Interval(FlowField::translation(10.0));
    for (action, phi) in [(translation, gaussian_bump(0.0, 1.0)), (tanh_flow(), gaussian_bump(1.0, 1.0))] {
        for k in 0..=3 {
            let cfg = LineFacConfig::new(eps, FactorMode::Ck { k });
            let r = linefac(&PhiSource::Line(phi.clone()), Layout::D1(grid), &action, &cfg).unwrap();
            assert_eq!(r.pairs.len(), 2);
            assert!(r.certificates_hold(), "k={k}: {:?}", r.certificates);
            assert!(r.residual_sup <= 1e-4, "k={k}: residual {:.3e}", r.residual_sup);
            for p in &r.pairs {
                let GridFn::D1(f) = &p.f else { panic!("line kernels are one-dimensional") };
                let s = f.support().unwrap();
                assert!(s.lo > -eps && s.hi < eps);
            }
        }
    }
}

#[test]
fn linefac_psi_is_field_power_of_phi() {
    let grid = Grid1::covering(-3.0, 3.0, 1e-2).unwrap();
    let phi = bump(0.5, 1.0);
    let r = linefac(&PhiSource::Line(phi.clone()), Layout::D1(grid), &tanh_flow(), &LineFacConfig::new(0.5, FactorMode::Ck { k: 1 })).unwrap();
    // oracle: (tanh d/dx)^3 phi by the chain rule written out by hand
    let oracle = |x: f64| {
        let (a, d1, d2) = (x.tanh(), 1.0 - x.tanh().powi(2), -2.0 * x.tanh() * (1.0 - x.tanh().powi(2)));
        let p = phi.jet(x, 3);
        let (p1, p2, p3) = (p[1], 2.0 * p[2], 6.0 * p[3]);
        // a (a (a p')')' = a^3 p''' + 3 a^2 a' p'' + (a^2 a'' + a a'^2) p'
        a.powi(3) * p3 + 3.0 * a * a * d1 * p2 + (a * a * d2 + a * d1 * d1) * p1
    };
    let GridFn::D1(psi) = &r.pairs[0].psi else { panic!() };
    for (i, v) in psi.samples().iter().enumerate() {
        assert!((v - oracle(psi.x(i))).abs() < 1e-9 * (1.0 + v.abs()));
    }
}

#[test]
fn linefac_zero_phi_is_empty() {
    let grid = Grid1::covering(-2.0, 2.0, 1e-2).unwrap();
    let r = linefac(&PhiSource::Line(AnalyticFn1D::zero()), Layout::D1(grid), &tanh_flow(), &LineFacConfig::new(0.5, FactorMode::Ck { k: 2 })).unwrap();
    assert!(r.pairs.is_empty());
    assert_eq!(r.residual_sup, 0.0);
}

#[test]
fn linefac_ck_residual_is_quadrature_limited() {
    let phi = PhiSource::Line(gaussian_bump(0.0, 1.0));
    let action = LineAction::Interval(FlowField::translation(10.0));
    let run = |dx: f64| {
        let grid = Grid1::covering(-3.0, 3.0, dx).unwrap();
        let cfg = LineFacConfig::new(0.5, FactorMode::Ck { k: 1 }).with_kernel_dx(dx);
        linefac(&phi, Layout::D1(grid), &action, &cfg).unwrap().residual_sup
    };
    let (coarse, fine) = (run(4e-3), run(2e-3));
    assert!(coarse / fine >= 8.0, "halving dx: {coarse:.3e} -> {fine:.3e}");
}

#[test]
fn linefac_sampled_input_respects_stencil_cap() {
    let grid = Grid1::covering(-3.0, 3.0, 1e-2).unwrap();
    let phi = PhiSource::Sampled(GridFn::D1(GridFn1D::sample(&bump(0.0, 1.0), grid).unwrap()));
    let action = LineAction::Interval(FlowField::translation(10.0));
    let high = LineFacConfig::new(1.0, FactorMode::Dm { j: 6 });
    assert!(matches!(linefac(&phi, Layout::D1(grid), &action, &high), Err(Error::InvalidArgument(_))));
    let ok = linefac(&phi, Layout::D1(grid), &action, &LineFacConfig::new(1.0, FactorMode::Ck { k: 0 })).unwrap();
    assert!(ok.residual_sup < 1e-3, "{:.3e}", ok.residual_sup);
}

#[test]
fn linefac_dm_table() {
    // The finite-J identity is exact; what remains is discretization, which
    // grows with J at a fixed grid and shrinks under refinement at every J.
    let phi = PhiSource::Line(bump(1.0, 1.0));
    let table = |dx: f64| -> Vec<f64> {
        let grid = Grid1::covering(-4.0, 4.0, dx).unwrap();
        (1..=6)
            .map(|j| {
                let cfg = LineFacConfig::new(1.0, FactorMode::Dm { j }).with_kernel_dx(1.25e-4);
                let r = linefac(&phi, Layout::D1(grid), &tanh_flow(), &cfg).unwrap();
                assert!(r.certificates_hold());
                r.residual_sup
            })
            .collect()
    };
    let (coarse, fine) = (table(2.5e-3), table(1.25e-3));
    for j in 0..3 {
        assert!(coarse[j] < 1e-6, "J={}: {:.3e}", j + 1, coarse[j]);
    }
    for j in 0..6 {
        assert!(fine[j] * 3.0 < coarse[j], "J={}: {:.3e} -> {:.3e}", j + 1, coarse[j], fine[j]);
    }
}

#[test]
fn frame_factorize_rank_one_and_two() {
    let g = GroupoidInstance::transformation(Interval::new(-2.0, 2.0), 2.0, 1e-2, 1e-2, unit()).unwrap();
    let (g0, g1) = g.arrow_grids().unwrap();
    let phi = PhiSource::separable(bump(0.0, 0.8), bump(0.2, 0.8));
    let layout = Layout::D2(g0, g1);
    let cfg = LineFacConfig::new(1.0, FactorMode::Ck { k: 0 });
    let along_t = LineAction::Fiber { axis: 0, flow: FlowField::translation(10.0) };
    let along_b = LineAction::Fiber { axis: 1, flow: FlowField::translation(10.0) };
    let (one, r1) = frame_factorize(&phi, layout, std::slice::from_ref(&along_t), &cfg).unwrap();
    assert_eq!(one.len(), 2);
    assert!(r1 < 1e-4, "{r1:.3e}");
    let (two, r2) = frame_factorize(&phi, layout, &[along_t, along_b], &cfg).unwrap();
    assert_eq!(two.len(), 4);
    assert!(r2 < 1e-4, "{r2:.3e}");
    let sp = phi.sample(layout).unwrap();
    let GridFn::D2(sp) = sp else { panic!() };
    let s = sp.support().unwrap();
    for t in &two {
        let GridFn::D2(p) = &t.psi else { panic!() };
        if let Some(ps) = p.support() {
            assert!(s.contains_box(&ps));
        }
    }
}

#[test]
fn chart_line_identity() {
    let g = GroupoidInstance::line(2.0, 1e-2).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps: 0.5, base: Interval::new(-1.0, 1.0) }).unwrap();
    for t in [-0.4, 0.0, 0.3] {
        assert_eq!(ct.u(t, 0.0).unwrap(), (t, 0.0));
        assert_eq!(ct.rho(t, 0.0).unwrap(), 1.0);
    }
    // f1 on the line is its own transfer
    let f1 = bump(0.0, 0.4);
    let chi = AnalyticFn1D::constant(1.0);
    let GridFn::D1(f) = assemble_horrid(&g, &ct, &f1, &chi, Interval::new(0.0, 0.0)).unwrap() else { panic!() };
    assert_eq!(f.samples(), GridFn1D::sample(&f1, g.fiber_grid).unwrap().samples());
}

#[test]
fn chart_unit_field_is_relabeling() {
    let g = GroupoidInstance::transformation(Interval::new(-2.0, 2.0), 1.5, 2e-2, 2e-2, unit()).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps: 0.5, base: Interval::new(-1.0, 1.0) }).unwrap();
    for (t, b) in [(-0.3, 0.2), (0.45, -0.9), (0.0, 0.0)] {
        assert_eq!(ct.u(t, b).unwrap(), (t, b));
        assert!((ct.rho(t, b).unwrap() - 1.0).abs() < 1e-8);
    }
    let p = GroupoidInstance::pair(Interval::new(-2.0, 2.0), 2e-2, unit()).unwrap();
    let cp = build_chart_transfer(&p, ChartWindow { eps: 0.5, base: Interval::new(-1.0, 1.0) }).unwrap();
    for (t, b) in [(-0.3, 0.2), (0.45, -0.9)] {
        let (w, y) = cp.u(t, b).unwrap();
        assert!((w - b).abs() < 1e-12 && (y - (b + t)).abs() < 1e-8);
        assert!((cp.rho(t, b).unwrap() - 1.0).abs() < 1e-8);
        let (t2, b2) = cp.u_inv((w, y)).unwrap();
        assert!((t2 - t).abs() < 1e-8 && (b2 - b).abs() < 1e-12);
    }
}

#[test]
fn chart_identity_defect() {
    let f0 = bump(0.0, 0.3);
    let f1 = bump(0.7, 0.4);
    let prod = |t: f64, b: f64| f0.eval(t) * f1.eval(b);
    let cf = ChartFn { f: &prod, support: Box2::new(f0.support().unwrap(), f1.support().unwrap()) };
    let tgrid = Grid1::covering(-0.5, 0.5, 1e-2).unwrap();
    let bgrid = Grid1::covering(0.0, 1.4, 1e-2).unwrap();
    for field in [unit(), FieldSpec::TanhPower { tanh_k: 1 }, FieldSpec::TanhPower { tanh_k: 2 }] {
        let p = GroupoidInstance::pair(Interval::new(-2.0, 3.0), 2e-2, field).unwrap();
        let ct = build_chart_transfer(&p, ChartWindow { eps: 0.5, base: Interval::new(0.2, 1.5) }).unwrap();
        let d = ct.identity_defect(&cf, tgrid, bgrid).unwrap();
        assert!(d <= 1e-10, "{field:?}: {d:.3e}");
    }
}

#[test]
fn chart_rejects_fixed_point_of_the_frame() {
    // the tanh field vanishes at 0, so u(t, 0) is the same arrow for every t
    let p = GroupoidInstance::pair(Interval::new(-2.0, 2.0), 2e-2, FieldSpec::TanhPower { tanh_k: 1 }).unwrap();
    assert!(matches!(
        build_chart_transfer(&p, ChartWindow { eps: 0.5, base: Interval::new(-1.0, 1.0) }),
        Err(Error::NotInjective { .. })
    ));
}

/// Random `(f, psi)` with `f` in the chart window and `psi` a bump arrow function.
fn random_pair(rng: &mut ChaCha8Rng, eps: f64, base: Interval, min_width: f64) -> (AnalyticFn1D, AnalyticFn1D, AnalyticFn1D, AnalyticFn1D) {
    let r0 = rng.gen_range(min_width..0.4) * eps;
    let c0 = rng.gen_range(-(eps - r0)..(eps - r0)) * 0.9;
    let r1 = rng.gen_range(0.15..0.4) * base.width();
    let c1 = rng.gen_range(base.lo + r1..base.hi - r1);
    let (p0, p1) = (rng.gen_range(0.2..0.6), rng.gen_range(0.2..0.6));
    (bump(c0, r0), bump(c1, r1), bump(rng.gen_range(-0.3..0.3), p0), bump(rng.gen_range(-0.3..0.3), p1))
}

#[test]
fn pi_of_theta_matches_chart_representation() {
    let eps = 0.5;
    let base = Interval::new(-1.0, 1.0);
    let g = GroupoidInstance::transformation(Interval::new(-1.6, 1.6), 1.5, 1e-2, 5e-3, FieldSpec::TanhPower { tanh_k: 1 }).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps, base }).unwrap();
    let (g0, g1) = g.arrow_grids().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (f0, f1, p0, p1) = random_pair(&mut rng, eps, base, 0.1);
        let prod = |t: f64, b: f64| f0.eval(t) * f1.eval(b);
        let cf = ChartFn { f: &prod, support: Box2::new(f0.support().unwrap(), f1.support().unwrap()) };
        let psi = GridFn2D::outer(&GridFn1D::sample(&p0, g0).unwrap(), &GridFn1D::sample(&p1, g1).unwrap()).unwrap();
        let theta = GridFn::D2(ct.theta(&g, &cf).unwrap());
        let lhs = integrated_rep(&g, GroupoidAction::SelfLeft, &theta, &GridFn::D2(psi.clone())).unwrap();
        let rhs = GridFn::D2(pi_tilde(&g, &cf, &psi).unwrap());
        worst = worst.max(lhs.sub(&rhs).unwrap().sup_norm());
    }
    assert!(worst <= 1e-5, "{worst:.3e}");
}

#[test]
fn pi_of_theta_matches_chart_representation_on_pair() {
    let eps = 0.5;
    let base = Interval::new(0.5, 1.5);
    let g = GroupoidInstance::pair(Interval::new(-1.0, 2.5), 1e-2, FieldSpec::TanhPower { tanh_k: 1 }).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps, base }).unwrap();
    let (g0, g1) = g.arrow_grids().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (f0, f1, _, _) = random_pair(&mut rng, eps, base, 0.3);
        let prod = |t: f64, b: f64| f0.eval(t) * f1.eval(b);
        let cf = ChartFn { f: &prod, support: Box2::new(f0.support().unwrap(), f1.support().unwrap()) };
        let psi = GridFn2D::outer(&GridFn1D::sample(&bump(0.5, 0.6), g0).unwrap(), &GridFn1D::sample(&bump(0.9, 0.5), g1).unwrap()).unwrap();
        let theta = GridFn::D2(ct.theta(&g, &cf).unwrap());
        let lhs = integrated_rep(&g, GroupoidAction::SelfLeft, &theta, &GridFn::D2(psi.clone())).unwrap();
        let rhs = GridFn::D2(pi_tilde(&g, &cf, &psi).unwrap());
        worst = worst.max(lhs.sub(&rhs).unwrap().sup_norm());
    }
    assert!(worst <= 1e-4, "{worst:.3e}");
}

#[test]
fn assemble_zero_field_is_basewise_line_convolution() {
    let g = GroupoidInstance::transformation(Interval::new(-1.5, 1.5), 1.5, 1e-2, 1e-2, FieldSpec::Named(NamedField::Zero)).unwrap();
    // the zero field gives rho = 1 and a transfer that does not move the base point
    let ct = build_chart_transfer(&g, ChartWindow { eps: 0.5, base: Interval::new(-1.2, 1.2) }).unwrap();
    let k = Interval::new(-0.6, 0.6);
    let f1 = bump(0.1, 0.3);
    let chi = AnalyticFn1D::plateau(k, Interval::new(-1.0, 1.0)).unwrap();
    let f = assemble_horrid(&g, &ct, &f1, &chi, k).unwrap();
    let (g0, g1) = g.arrow_grids().unwrap();
    let psi = GridFn::D2(GridFn2D::outer(&GridFn1D::sample(&bump(0.0, 0.5), g0).unwrap(), &GridFn1D::sample(&bump(0.0, 0.5), g1).unwrap()).unwrap());
    let lhs = integrated_rep(&g, GroupoidAction::SelfLeft, &f, &psi).unwrap();
    let kernel = GridFn1D::sample(&f1, g0).unwrap();
    let rhs = integrated_rep_line(&LineAction::self_left(&g), &kernel, &psi).unwrap();
    let d = lhs.sub(&rhs).unwrap().sup_norm();
    assert!(d <= 1e-8, "{d:.3e}");
}

#[test]
fn assemble_tanh_matches_line_action_on_k() {
    let g = GroupoidInstance::transformation(Interval::new(-2.0, 2.0), 1.5, 1e-2, 1e-2, FieldSpec::TanhPower { tanh_k: 1 }).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps: 0.5, base: Interval::new(-1.5, 1.5) }).unwrap();
    let k = Interval::new(-0.9, 0.9);
    let chi = AnalyticFn1D::plateau(k, Interval::new(-1.4, 1.4)).unwrap();
    let f1 = bump(-0.05, 0.35);
    let f = assemble_horrid(&g, &ct, &f1, &chi, k).unwrap();
    let (g0, g1) = g.arrow_grids().unwrap();
    let kernel = GridFn1D::sample(&f1, g0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        // targets Phi_t(b) stay inside K for these supports
        let (ct0, cb) = (rng.gen_range(-0.1..0.1), rng.gen_range(-0.2..0.2));
        let psi = GridFn::D2(GridFn2D::outer(&GridFn1D::sample(&bump(ct0, 0.3), g0).unwrap(), &GridFn1D::sample(&bump(cb, 0.3), g1).unwrap()).unwrap());
        let lhs = integrated_rep(&g, GroupoidAction::SelfLeft, &f, &psi).unwrap();
        let rhs = integrated_rep_line(&LineAction::self_left(&g), &kernel, &psi).unwrap();
        worst = worst.max(lhs.sub(&rhs).unwrap().sup_norm());
    }
    assert!(worst <= 1e-5, "{worst:.3e}");
}

#[test]
fn assemble_rejects_cutoff_not_one_on_k() {
    let g = GroupoidInstance::transformation(Interval::new(-2.0, 2.0), 1.5, 2e-2, 2e-2, unit()).unwrap();
    let ct = build_chart_transfer(&g, ChartWindow { eps: 0.5, base: Interval::new(-1.5, 1.5) }).unwrap();
    let chi = AnalyticFn1D::plateau(Interval::new(-0.5, 0.5), Interval::new(-1.0, 1.0)).unwrap();
    let r = assemble_horrid(&g, &ct, &bump(0.0, 0.3), &chi, Interval::new(-0.8, 0.8));
    assert!(matches!(r, Err(Error::CutoffNotUnity { .. })));
    let wide = assemble_horrid(&g, &ct, &bump(0.0, 0.6), &chi, Interval::new(-0.5, 0.5));
    assert!(matches!(wide, Err(Error::Precondition(_))));
}

#[test]
fn partition_of_unity_sums_to_one() {
    let k = Interval::new(-1.0, 2.0);
    for pieces in 1..=4 {
        let parts = partition_of_unity(k, pieces, 0.25).unwrap();
        assert_eq!(parts.len(), pieces);
        for i in 0..=300 {
            let x = k.lo + k.width() * i as f64 / 300.0;
            let s: f64 = parts.iter().map(|(p, _)| p.eval(x)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "pieces={pieces} x={x}: {s}");
        }
        for (p, w) in &parts {
            assert!(w.contains_interval(&p.support().unwrap()));
        }
    }
}

fn fac_cfg(eps: f64, k: u32) -> GroupoidFacConfig {
    GroupoidFacConfig::new(LineFacConfig::new(eps, FactorMode::Ck { k }))
}

#[test]
fn groupoid_factorize_line() {
    let g = GroupoidInstance::line(3.0, 5e-3).unwrap();
    let r = groupoid_factorize(&g, &PhiSource::Line(bump(0.0, 1.0)), &fac_cfg(1.0, 0)).unwrap();
    assert_eq!(r.pairs.len(), 2);
    assert!(r.certificates_hold());
    assert!(r.residual_sup <= 1e-4, "{:.3e}", r.residual_sup);
}

#[test]
fn groupoid_factorize_pair_and_transformation() {
    let phi = PhiSource::separable(bump(0.0, 0.8), bump(0.0, 0.8));
    let pair = GroupoidInstance::pair(Interval::new(-2.0, 2.0), 1e-2, unit()).unwrap();
    let trans = GroupoidInstance::transformation(Interval::new(-2.5, 2.5), 2.5, 1e-2, 1e-2, unit()).unwrap();
    for g in [pair, trans] {
        let r = groupoid_factorize(&g, &phi, &fac_cfg(1.0, 0)).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!(r.certificates_hold(), "{:?}", r.certificates);
        assert!(r.residual_sup <= 1e-4, "{:?}: {:.3e}", g.kind, r.residual_sup);
        let again = verify_factorization(&g, &r.phi, &r.pairs).unwrap();
        assert!((again - r.residual_sup).abs() <= 1e-12);
    }
}

#[test]
fn groupoid_factorize_zero_phi() {
    let g = GroupoidInstance::pair(Interval::new(-1.0, 1.0), 2e-2, unit()).unwrap();
    let r = groupoid_factorize(&g, &PhiSource::separable(AnalyticFn1D::zero(), bump(0.0, 0.5)), &fac_cfg(0.5, 1)).unwrap();
    assert!(r.pairs.is_empty());
    assert_eq!(r.residual_sup, 0.0);
}

#[test]
fn groupoid_factorize_window_must_contain_targets() {
    let g = GroupoidInstance::pair(Interval::new(-2.0, 2.0), 2e-2, unit()).unwrap();
    let mut cfg = fac_cfg(0.5, 0);
    cfg.base_window = Some(Interval::new(-0.5, 0.5));
    let r = groupoid_factorize(&g, &PhiSource::separable(bump(0.0, 0.8), bump(0.0, 0.8)), &cfg);
    assert!(matches!(r, Err(Error::Precondition(_))));
}

#[test]
fn groupoid_factorize_partitioned_pair() {
    let g = GroupoidInstance::pair(Interval::new(-2.5, 2.5), 1e-2, unit()).unwrap();
    let mut cfg = fac_cfg(1.0, 0);
    cfg.chart_width = Some(1.0);
    let r = groupoid_factorize(&g, &PhiSource::separable(bump(0.0, 0.8), bump(0.0, 1.2)), &cfg).unwrap();
    assert!(r.pairs.len() >= 4 && r.pairs.len() % 2 == 0, "{}", r.pairs.len());
    assert!(r.certificates_hold());
    assert!(r.residual_sup <= 1e-4, "{:.3e}", r.residual_sup);
}

#[test]
fn manifest_reports_pass() {
    let g = GroupoidInstance::pair(Interval::new(-2.0, 2.0), 2e-2, unit()).unwrap();
    let r = groupoid_factorize(&g, &PhiSource::separable(bump(0.0, 0.8), bump(0.0, 0.8)), &fac_cfg(1.0, 0)).unwrap();
    let m = r.manifest(1.0);
    assert!(m.pass);
    assert_eq!(m.n_pairs, 2);
    let json = serde_json::to_value(&m).unwrap();
    assert_eq!(json["mode"]["mode"], "ck");
    assert!(!r.manifest(0.0).pass);
}
