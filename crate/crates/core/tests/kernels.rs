use groupoid_deconv::gridfn::{AnalyticFn1D, Grid1, Interval};
use groupoid_deconv::kernels1d::*;
use proptest::prelude::*;

fn bump_test(c: f64, w: f64, dx: f64) -> TestFunction {
    let f = AnalyticFn1D::bump().compose_affine(1.0 / w, -c / w).unwrap();
    TestFunction::analytic(f, Grid1::symmetric(TEST_GRID_RADIUS, dx).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ck_pairs_split_the_delta(k in 0u32..=3, c in -0.4f64..0.4, w in 0.8f64..1.8) {
        let pair = build_ck_pair(k, Interval::new(0.5, 1.5)).unwrap();
        let r = weak_delta_residual(&pair, &bump_test(c, w, 1e-3)).unwrap();
        prop_assert!(r <= 1e-5, "k={k}: {r:.3e}");
    }

    #[test]
    fn finite_sums_split_the_delta(j in 1usize..=4, eps in 0.5f64..1.5, c in -0.4f64..0.4, w in 0.8f64..1.8) {
        let d = build_dm_generators(j, 2.0, eps).unwrap();
        let r = weak_delta_residual(&d.uncut() as &dyn DeltaSplitting, &bump_test(c, w, 1e-3)).unwrap();
        prop_assert!(r <= 1e-5, "J={j}: {r:.3e}");
        let info = d.info();
        for s in [info.f_cut_support, info.g_corr_support].into_iter().flatten() {
            prop_assert!(s.lo >= -eps && s.hi <= eps, "{s:?}");
        }
    }

    #[test]
    fn ck_supports_stay_on_the_right(k in 0u32..=3, lo in 0.1f64..1.0, len in 0.2f64..1.5) {
        let info = build_ck_pair(k, Interval::new(lo, lo + len)).unwrap().info();
        for s in [info.f_support, info.g_support].into_iter().flatten() {
            prop_assert!(s.lo >= 0.0 && s.hi <= lo + len + 1e-12, "{s:?}");
        }
    }
}

#[test]
fn generator_json_has_the_documented_keys() {
    let d = build_dm_generators(3, 2.0, 1.0).unwrap();
    let v = serde_json::to_value(d.info()).unwrap();
    for key in ["J", "eps", "lambda", "b", "c"] {
        assert!(v.get(key).is_some(), "missing {key}: {v}");
    }
    assert_eq!(v["lambda"].as_array().unwrap().len(), 3);
}

#[test]
fn standard_tests_fit_their_grid() {
    for dx in [1e-3, 5e-4] {
        let tests = standard_test_functions(dx).unwrap();
        assert_eq!(tests.len(), 5);
        assert!(covers(&tests));
        assert!(covers(&random_test_functions(8, 42, dx).unwrap()));
    }
}
