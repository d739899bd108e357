use std::sync::Arc;

use proptest::prelude::*;

use foliation_lab::contact::{ribbon_holonomy, ConstantCoefficients};
use foliation_lab::fields::{FormField, ModelManifold};
use foliation_lab::foliated::{check_interpolation, graphical_interpolation, random_profile_pair, CUTOFF_SLOPE};
use foliation_lab::smoothing::{smooth_increasing, MonotoneFunction};
use foliation_lab::suite::{emit_plot_series, read_series, Series, SuiteConfig};

fn increments() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 3..32)
}

fn pl(incs: &[f64]) -> MonotoneFunction {
    let total: f64 = incs.iter().sum();
    let mut acc = 0.0;
    let mut v = vec![0.0];
    for d in incs {
        acc += d;
        v.push(acc / total);
    }
    MonotoneFunction::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smoothing_stays_close_and_increasing(incs in increments(), eps in prop::sample::select(vec![0.1, 0.01])) {
        let v = pl(&incs);
        let s = smooth_increasing(&v, eps).unwrap();
        prop_assert!(s.report.pass);
        prop_assert!(s.report.sup_distance < eps);
        prop_assert!(s.report.min_derivative > 0.0);
        prop_assert_eq!(s.eval(0.0).0, v.eval(0.0));
        prop_assert_eq!(s.eval(1.0).0, v.eval(1.0));
    }

    #[test]
    fn wedge_is_graded_antisymmetric(a in prop::array::uniform6(-2.0f64..2.0), k in 1usize..4) {
        let m = Arc::new(ModelManifold::torus3(8).unwrap());
        let x = FormField::from_fn(m.clone(), 1, |c| vec![a[0] * (k as f64 * c[0]).sin(), a[1] * c[1], a[2]]);
        let y = FormField::from_fn(m.clone(), 1, |c| vec![a[3], a[4] * c[2].cos(), a[5] * c[0] * c[1]]);
        prop_assert_eq!(x.wedge(&y).unwrap().add(&y.wedge(&x).unwrap()).unwrap().max_abs(), 0.0);
        let w = x.wedge(&y).unwrap();
        prop_assert_eq!(x.wedge(&w).unwrap().sub(&w.wedge(&x).unwrap()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_ribbon_matches_integration(h in -1.5f64..0.5, f in 0.1f64..2.0) {
        let c = ribbon_holonomy(&ConstantCoefficients { h, f }, 5.0).unwrap();
        prop_assert!(c.max_err_a <= 1e-6 && c.max_err_b <= 1e-6);
        if h <= 0.0 {
            prop_assert!(c.growth_holds && c.growth_checked > 0);
        }
    }

    #[test]
    fn interpolation_slope_bounded_by_gap(seed in any::<u64>(), w in 0.02f64..0.1) {
        let (v0, v1) = random_profile_pair(seed);
        let r = check_interpolation(&graphical_interpolation(v0, v1, w).unwrap(), 65);
        prop_assert!(r.pass);
        prop_assert!(r.max_dx <= CUTOFF_SLOPE * r.gap);
    }

    #[test]
    fn series_round_trip_bitwise(rows in prop::collection::vec(prop::array::uniform3(any::<f64>()), 0..20)) {
        let rows: Vec<Vec<f64>> = rows.into_iter().filter(|r| r.iter().all(|v| v.is_finite())).map(|r| r.to_vec()).collect();
        let mut s = Series::new("t", &["a", "b", "c"]);
        for r in &rows {
            s.push(r.clone());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = emit_plot_series(dir.path(), "x", &[s]).unwrap();
        let back = read_series(&p[0]).unwrap();
        let bits = |v: &Vec<Vec<f64>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.rows), bits(&rows));
    }

    #[test]
    fn config_echo_reproduces_values(n in 8usize..1000, x in -1e6f64..1e6, seed in 0u64..i64::MAX as u64) {
        let cfg = SuiteConfig::new("ribbon", seed, "out").unwrap();
        let _ = cfg.get("a", "n", n).unwrap();
        let _ = cfg.get("a", "x", x).unwrap();
        let again = SuiteConfig::parse(&cfg.echo_toml(), None, None, "out").unwrap();
        prop_assert_eq!(again.seed, seed);
        prop_assert_eq!(again.resolution("a", "n", 8).unwrap(), n);
        prop_assert_eq!(again.get("a", "x", 0.0f64).unwrap().to_bits(), x.to_bits());
    }
}
