use groupoid_deconv::gridfn::{AnalyticFn1D, Box2, Grid1, GridFn, GridFn1D, GridFn2D, Interval};
use groupoid_deconv::groupoid::*;
use groupoid_deconv::Error;

fn bump(c: f64, r: f64) -> AnalyticFn1D {
    AnalyticFn1D::bump_on(c, r).unwrap()
}

fn sampled(f: &AnalyticFn1D, grid: Grid1) -> GridFn1D {
    GridFn1D::sample(f, grid).unwrap()
}

/// Separable bump-built arrow function `u(x) v(y)` on the arrow grid.
fn arrow_fn(g: &GroupoidInstance, u: &AnalyticFn1D, v: &AnalyticFn1D) -> GridFn2D {
    let (g0, g1) = g.arrow_grids().unwrap();
    GridFn2D::outer(&sampled(u, g0), &sampled(v, g1)).unwrap()
}

/// Non-separable smooth arrow function.
fn mixed_fn(g: &GroupoidInstance, c0: f64, r0: f64, c1: f64, r1: f64, shear: f64) -> GridFn2D {
    let (b0, b1) = (bump(c0, r0), bump(c1, r1));
    let support = Box2::new(b0.support().unwrap(), b1.support().unwrap());
    sample_arrow_fn(g, Some(support), |x, y| b0.eval(x) * b1.eval(y) * (1.0 + shear * (x * y).sin())).unwrap()
}

fn pair_instance() -> GroupoidInstance {
    GroupoidInstance::pair(Interval::new(-1.28, 1.28), 0.02, FieldSpec::Named(NamedField::Unit)).unwrap()
}

fn tanh_instance(k: u32, dx: f64) -> GroupoidInstance {
    GroupoidInstance::transformation(Interval::new(-1.28, 1.28), 1.28, dx, dx, FieldSpec::TanhPower { tanh_k: k }).unwrap()
}

fn sup_diff(a: &GridFn, b: &GridFn) -> f64 {
    a.sub(b).unwrap().sup_norm()
}

#[test]
fn flow_examples() {
    let unit = FlowField::translation(10.0);
    assert!((unit.flow(0.37, -1.2).unwrap() - (-0.83)).abs() < 1e-10);
    let lin = FlowField::local(AnalyticFn1D::monomial(1), 1e-3, 5.0, Interval::new(-20.0, 20.0)).unwrap();
    assert!((lin.flow(1.0, 0.7).unwrap() - 0.7 * 1f64.exp()).abs() < 1e-8);
    for k in 1..=3 {
        let f = FlowField::new(AnalyticFn1D::tanh().pow(k), 1e-3, 10.0).unwrap();
        for t in [-3.0, -0.5, 0.25, 4.0] {
            assert_eq!(f.flow(t, 0.0).unwrap(), 0.0);
        }
    }
}

#[test]
fn flow_group_law_on_grid() {
    let f = FlowField::new(AnalyticFn1D::tanh(), 1e-3, 10.0).unwrap();
    let grid = Grid1::covering(-2.0, 2.0, 0.05).unwrap();
    let times = [-0.5, -0.25, 0.25, 0.5];
    let mut worst: f64 = 0.0;
    for x in grid.xs() {
        for &s in &times {
            for &t in &times {
                let d = f.flow(s, f.flow(t, x).unwrap()).unwrap() - f.flow(s + t, x).unwrap();
                worst = worst.max(d.abs());
            }
        }
    }
    assert!(worst <= 1e-8, "group law defect {worst}");
}

#[test]
fn equivariance_of_target_map() {
    // t(e^{sX} gamma) = Phi_s(t(gamma)) for the right-invariant field of a transformation groupoid
    let g = tanh_instance(2, 0.02);
    for &(t, b) in &[(0.3, 0.5), (-0.7, -1.1), (1.0, 0.05)] {
        for s in [-0.4, 0.6] {
            let lhs = g.target((t + s, b)).unwrap();
            let rhs = g.flow.flow(s, g.target((t, b)).unwrap()).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}

#[test]
fn pair_rank_one_kernels_compose_by_pairing() {
    let g = pair_instance();
    let grid = g.base_grid;
    let (u1, v1) = (bump(-0.2, 0.8), bump(0.1, 0.9));
    let (u2, v2) = (bump(0.3, 0.7), bump(-0.1, 0.6));
    let f = arrow_fn(&g, &u1, &v1);
    let h = arrow_fn(&g, &u2, &v2);
    let fh = convolve(&g, &GridFn::D2(f.clone()), &GridFn::D2(h.clone())).unwrap();
    // (f*h)(x, y) = int u1(w) v1(y) u2(x) v2(w) dw = <v2, u1> u2(x) v1(y)
    let pairing = sampled(&v2, grid).mul(&sampled(&u1, grid)).unwrap().integrate();
    let expect = GridFn2D::outer(&sampled(&u2, grid), &sampled(&v1, grid)).unwrap().scale(pairing);
    // the two sides place their Simpson panels differently; both are O(dx^4) at dx = 0.02
    let d = sup_diff(&fh, &GridFn::D2(expect));
    assert!(d < 1e-6, "rank-one defect {d}");

    // brute force 2-D oracle at a few points, with a fine independent rule
    for &(x, y) in &[(0.3, 0.1), (-0.2, 0.5), (0.6, -0.4)] {
        let w_grid = Grid1::covering(-1.28, 1.28, 0.001).unwrap();
        let direct: f64 = {
            let vals: Vec<f64> = w_grid.xs().iter().map(|&w| u1.eval(w) * v1.eval(y) * u2.eval(x) * v2.eval(w)).collect();
            GridFn1D::new(w_grid, vals, Some(w_grid.extent())).unwrap().integrate()
        };
        let got = fh.as_2d().unwrap().eval(x, y);
        assert!((got - direct).abs() < 1e-6, "({x},{y}) {got} vs {direct}");
    }
}

#[test]
fn transformation_with_zero_field_is_fiberwise_line_convolution() {
    let g = GroupoidInstance::transformation(Interval::new(-1.0, 1.0), 1.2, 0.01, 0.02, FieldSpec::Named(NamedField::Zero)).unwrap();
    let f = mixed_fn(&g, 0.1, 0.4, 0.0, 0.8, 0.5);
    let h = mixed_fn(&g, -0.2, 0.3, 0.1, 0.7, -0.3);
    let fh = convolve(&g, &GridFn::D2(f.clone()), &GridFn::D2(h.clone())).unwrap();
    let fh = fh.as_2d().unwrap();
    let (_, bg) = g.arrow_grids().unwrap();
    let mut worst: f64 = 0.0;
    for l in (0..bg.n).step_by(7) {
        let b = bg.x(l);
        let fl = f.slice_axis0_transposed(b).unwrap();
        let hl = h.slice_axis0_transposed(b).unwrap();
        let line = fl.convolve(&hl).unwrap();
        let col = fh.slice_axis0_transposed(b).unwrap();
        worst = worst.max(col.sub(&line).unwrap().sup_norm());
    }
    assert!(worst < 1e-13, "degenerate defect {worst}");
}

#[test]
fn convolution_with_zero_is_zero() {
    let line = GroupoidInstance::line(2.0, 0.01).unwrap();
    let f = sampled(&bump(0.0, 0.5), line.fiber_grid);
    let z = GridFn1D::zeros(line.fiber_grid);
    assert!(convolve(&line, &GridFn::D1(f), &GridFn::D1(z)).unwrap().is_zero());
    for g in [pair_instance(), tanh_instance(1, 0.02)] {
        let f = mixed_fn(&g, 0.0, 0.5, 0.0, 0.5, 0.2);
        let (g0, g1) = g.arrow_grids().unwrap();
        let z = GridFn2D::zeros(g0, g1);
        assert!(convolve(&g, &GridFn::D2(f.clone()), &GridFn::D2(z.clone())).unwrap().is_zero());
        assert!(convolve(&g, &GridFn::D2(z), &GridFn::D2(f)).unwrap().is_zero());
    }
}

#[test]
fn escaping_support_is_rejected() {
    let g = tanh_instance(1, 0.02);
    let f = mixed_fn(&g, 0.8, 0.45, 0.0, 0.5, 0.0);
    let r = convolve(&g, &GridFn::D2(f.clone()), &GridFn::D2(f));
    assert!(matches!(r, Err(Error::SupportEscapes { .. })), "{r:?}");
}

#[test]
fn associativity_on_each_instance() {
    let line = GroupoidInstance::line(1.28, 0.02).unwrap();
    let grid = line.fiber_grid;
    let (a, b, c) = (
        sampled(&bump(0.1, 0.35), grid),
        sampled(&bump(-0.2, 0.3), grid),
        sampled(&AnalyticFn1D::gaussian().mul(&bump(0.0, 0.4)), grid),
    );
    let ab_c = a.convolve(&b).unwrap().convolve(&c).unwrap();
    let a_bc = a.convolve(&b.convolve(&c).unwrap()).unwrap();
    let d = ab_c.sub(&a_bc).unwrap().sup_norm();
    assert!(d <= 1e-5, "line associativity defect {d}");

    for g in [pair_instance(), tanh_instance(1, 0.02)] {
        let (f1, f2, f3) = match g.kind {
            InstanceKind::Pair => (
                mixed_fn(&g, 0.1, 0.9, -0.1, 0.8, 0.3),
                mixed_fn(&g, -0.2, 0.8, 0.2, 0.9, -0.4),
                mixed_fn(&g, 0.0, 1.0, 0.0, 0.7, 0.2),
            ),
            _ => (
                mixed_fn(&g, 0.05, 0.35, -0.1, 0.8, 0.3),
                mixed_fn(&g, -0.1, 0.3, 0.2, 0.7, -0.4),
                mixed_fn(&g, 0.0, 0.35, 0.0, 0.6, 0.2),
            ),
        };
        let (f1, f2, f3) = (GridFn::D2(f1), GridFn::D2(f2), GridFn::D2(f3));
        let l = convolve(&g, &convolve(&g, &f1, &f2).unwrap(), &f3).unwrap();
        let r = convolve(&g, &f1, &convolve(&g, &f2, &f3).unwrap()).unwrap();
        let d = sup_diff(&l, &r);
        let scale = l.sup_norm();
        println!("{:?}: associativity defect {d:.3e} (sup {scale:.3e})", g.kind);
        assert!(d <= 1e-5, "{:?} associativity defect {d}", g.kind);
    }
}

#[test]
fn restriction_to_invariant_point_is_a_homomorphism() {
    let g = tanh_instance(2, 0.01);
    let f = mixed_fn(&g, 0.05, 0.35, -0.1, 0.8, 0.3);
    let h = mixed_fn(&g, -0.1, 0.3, 0.2, 0.7, -0.4);
    let fh = convolve(&g, &GridFn::D2(f.clone()), &GridFn::D2(h.clone())).unwrap();
    let lhs = restrict_to_gx(&g, fh.as_2d().unwrap()).unwrap();
    let rhs = restrict_to_gx(&g, &f).unwrap().convolve(&restrict_to_gx(&g, &h).unwrap()).unwrap();
    let d = lhs.sub(&rhs).unwrap().sup_norm();
    assert!(d <= 1e-6, "homomorphism defect {d}");

    let off = mixed_fn(&g, 0.0, 0.3, 0.6, 0.3, 0.0);
    assert!(restrict_to_gx(&g, &off).unwrap().is_zero());

    let (u, v) = (bump(0.1, 0.4), bump(-0.1, 0.5));
    let sep = arrow_fn(&g, &u, &v);
    let r = restrict_to_gx(&g, &sep).unwrap();
    let expect = sampled(&u, g.fiber_grid).scale(v.eval(0.0));
    assert!(r.sub(&expect).unwrap().sup_norm() < 1e-15);

    let moving = tanh_instance(0, 0.02);
    assert!(matches!(restrict_to_gx(&moving, &sep_on(&moving, &u, &v)), Err(Error::NotInvariant(_))));
}

fn sep_on(g: &GroupoidInstance, u: &AnalyticFn1D, v: &AnalyticFn1D) -> GridFn2D {
    arrow_fn(g, u, v)
}

#[test]
fn self_left_action_is_convolution() {
    let g = tanh_instance(1, 0.02);
    let f = GridFn::D2(mixed_fn(&g, 0.05, 0.35, -0.1, 0.8, 0.3));
    let h = GridFn::D2(mixed_fn(&g, -0.1, 0.3, 0.2, 0.7, -0.4));
    let a = integrated_rep(&g, GroupoidAction::SelfLeft, &f, &h).unwrap();
    let b = convolve(&g, &f, &h).unwrap();
    assert_eq!(a, b);
}

#[test]
fn on_base_action_with_zero_field_multiplies_by_fiber_integral() {
    let g = GroupoidInstance::transformation(Interval::new(-1.0, 1.0), 1.2, 0.01, 0.02, FieldSpec::Named(NamedField::Zero)).unwrap();
    let f = mixed_fn(&g, 0.1, 0.4, 0.0, 0.8, 0.5);
    let chi = sampled(&bump(0.2, 0.6), g.base_grid);
    let out = integrated_rep(&g, GroupoidAction::OnBase, &GridFn::D2(f.clone()), &GridFn::D1(chi.clone())).unwrap();
    let out = out.as_1d().unwrap();
    for l in 0..g.base_grid.n {
        let b = g.base_grid.x(l);
        let mass = f.slice_axis0_transposed(b).unwrap().integrate();
        assert!((out.samples()[l] - chi.samples()[l] * mass).abs() < 1e-14);
    }
}

#[test]
fn representation_property() {
    // pi(f * h) psi = pi(f) pi(h) psi for both actions
    let g = tanh_instance(1, 0.01);
    let f = GridFn::D2(mixed_fn(&g, 0.05, 0.3, -0.1, 0.6, 0.3));
    let h = GridFn::D2(mixed_fn(&g, -0.1, 0.3, 0.2, 0.6, -0.4));
    let fh = convolve(&g, &f, &h).unwrap();
    let chi = GridFn::D1(sampled(&bump(0.1, 0.5), g.base_grid));
    let lhs = integrated_rep(&g, GroupoidAction::OnBase, &fh, &chi).unwrap();
    let inner = integrated_rep(&g, GroupoidAction::OnBase, &h, &chi).unwrap();
    let rhs = integrated_rep(&g, GroupoidAction::OnBase, &f, &inner).unwrap();
    let d = sup_diff(&lhs, &rhs);
    println!("on-base representation defect {d:.3e}");
    assert!(d <= 1e-5, "on-base defect {d}");

    let p = pair_instance();
    let f = GridFn::D2(mixed_fn(&p, 0.1, 0.9, -0.1, 0.8, 0.3));
    let h = GridFn::D2(mixed_fn(&p, -0.2, 0.8, 0.2, 0.9, -0.4));
    let chi = GridFn::D1(sampled(&bump(0.1, 0.8), p.base_grid));
    let lhs = integrated_rep(&p, GroupoidAction::OnBase, &convolve(&p, &f, &h).unwrap(), &chi).unwrap();
    let rhs = integrated_rep(&p, GroupoidAction::OnBase, &f, &integrated_rep(&p, GroupoidAction::OnBase, &h, &chi).unwrap()).unwrap();
    let d = sup_diff(&lhs, &rhs);
    assert!(d <= 1e-5, "pair on-base defect {d}");
}

#[test]
fn translation_action_is_line_convolution() {
    let grid = Grid1::symmetric(2.0, 0.005).unwrap();
    let f = sampled(&bump(0.1, 0.3), grid);
    let psi = sampled(&AnalyticFn1D::gaussian().mul(&bump(-0.2, 0.9)), grid);
    let act = LineAction::Interval(FlowField::translation(10.0));
    let a = integrated_rep_line(&act, &f, &GridFn::D1(psi.clone())).unwrap();
    let b = f.convolve(&psi).unwrap();
    assert!(sup_diff(&a, &GridFn::D1(b)) < 1e-8);

    // an off-lattice path through interpolation agrees too
    let shifted = LineAction::Interval(FlowField::new(AnalyticFn1D::constant(1.0).add(&AnalyticFn1D::zero()), 1e-3, 10.0).unwrap());
    let c = integrated_rep_line(&shifted, &f, &GridFn::D1(psi)).unwrap();
    assert!(sup_diff(&a, &c) < 1e-8);
}

#[test]
fn mollified_delta_reproduces_psi() {
    let grid = Grid1::symmetric(3.0, 5e-4).unwrap();
    let moll = bump(0.0, 0.01);
    let mass = sampled(&moll, grid).integrate();
    let f = sampled(&moll.scale(1.0 / mass), grid);
    let flow = FlowField::new(AnalyticFn1D::tanh(), 1e-3, 10.0).unwrap();
    let psi = sampled(&bump(1.0, 0.8), grid);
    let out = integrated_rep_line(&LineAction::Interval(flow), &f, &GridFn::D1(psi.clone())).unwrap();
    let d = sup_diff(&out, &GridFn::D1(psi));
    assert!(d <= 1e-3, "mollifier defect {d}");
}

#[test]
fn derivative_moves_across_the_action() {
    // pi(h') psi = pi(h) X psi
    let grid = Grid1::symmetric(3.0, 1e-3).unwrap();
    let flow = FlowField::new(AnalyticFn1D::tanh(), 1e-3, 10.0).unwrap();
    let act = LineAction::Interval(flow);
    let h = bump(0.05, 0.2);
    let hp = sampled(&h.derivative(1), grid);
    let psi = GridFn::D1(sampled(&bump(1.0, 0.8), grid));
    let lhs = integrated_rep_line(&act, &hp, &psi).unwrap();
    let xpsi = apply_field(&act, &psi, 1).unwrap();
    let rhs = integrated_rep_line(&act, &sampled(&h, grid), &xpsi).unwrap();
    let d = sup_diff(&lhs, &rhs);
    println!("derivative transfer defect {d:.3e}");
    assert!(d <= 1e-6, "derivative transfer defect {d}");
}

#[test]
fn haar_right_invariance_on_fibers() {
    // shifting the fiber variable of a compactly supported function leaves its
    // fiber integral unchanged (Lebesgue measure on each source fiber)
    let g = tanh_instance(1, 0.01);
    let f = mixed_fn(&g, 0.0, 0.3, 0.2, 0.6, 0.4);
    let shifted = sample_arrow_fn(
        &g,
        f.support().map(|s| Box2::new(s.axis0.sum(&Interval::new(0.2, 0.2)), s.axis1)),
        |t, b| f.eval(t - 0.2, b),
    )
    .unwrap();
    for l in (0..g.base_grid.n).step_by(5) {
        let b = g.base_grid.x(l);
        let a = f.slice_axis0_transposed(b).unwrap().integrate();
        let c = shifted.slice_axis0_transposed(b).unwrap().integrate();
        assert!((a - c).abs() < 1e-14, "{a} vs {c}");
    }
}
