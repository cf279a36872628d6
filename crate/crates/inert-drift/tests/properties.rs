//! Property tests for the solver invariants: the comparison, increment and
//! locality properties of the classic map, the constant-drift closed form, and
//! the statistics plumbing.

use proptest::prelude::*;

use inert_drift::path::{DriftSpec, SampledPath};
use inert_drift::skorohod::{classic_map, extended_solve};
use inert_drift::stats::{ks_distance, Ecdf};

fn driver_strategy(max_nodes: usize) -> impl Strategy<Value = SampledPath> {
    (
        prop::collection::vec(-2.0_f64..2.0, 2..max_nodes),
        0.0_f64..1.5,
    )
        .prop_map(|(mut vals, start)| {
            vals[0] = start;
            SampledPath::new(0.0, 0.01, vals).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_comparison(f in driver_strategy(160), bump in 0.0_f64..1.0) {
        let g = SampledPath::new(0.0, 0.01, f.values().iter().map(|v| v + bump).collect()).unwrap();
        let lf = classic_map(&f).unwrap();
        let lg = classic_map(&g).unwrap();
        for k in 0..f.len() {
            prop_assert!(lf.l.value(k) >= lg.l.value(k));
        }
    }

    #[test]
    fn increment_bound(f in driver_strategy(160), s_frac in 0.0_f64..1.0, t_frac in 0.0_f64..1.0) {
        let sol = classic_map(&f).unwrap();
        let n = f.len();
        let mut s = (s_frac * (n - 1) as f64) as usize;
        let mut t = (t_frac * (n - 1) as f64) as usize;
        if s > t {
            std::mem::swap(&mut s, &mut t);
        }
        let lhs = sol.l.value(t) - sol.l.value(s);
        let mut rhs = 0.0_f64;
        for r in s..=t {
            rhs = rhs.max(f.value(s) - f.value(r));
        }
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn locality(f in driver_strategy(160), cut_frac in 0.1_f64..0.9, shift in -1.0_f64..1.0) {
        let n = f.len();
        let cut = 1 + (cut_frac * (n - 1) as f64) as usize;
        let mut edited = f.values().to_vec();
        for v in edited.iter_mut().skip(cut) {
            *v += shift;
        }
        let g = SampledPath::new(0.0, 0.01, edited).unwrap();
        let lf = classic_map(&f).unwrap();
        let lg = classic_map(&g).unwrap();
        prop_assert_eq!(&lf.l.values()[..cut], &lg.l.values()[..cut]);
        prop_assert_eq!(&lf.x.values()[..cut], &lg.x.values()[..cut]);
    }

    #[test]
    fn constant_drift_closed_form(f in driver_strategy(120), lam in -2.0_f64..2.0) {
        let sol = extended_solve(&f, &DriftSpec::constant(lam), 0.43, 1e6).unwrap();
        let mut m = 0.0_f64;
        for k in 0..f.len() {
            m = m.max(-f.value(k) - lam * f.time(k));
            prop_assert!((sol.l.value(k) - m).abs() < 1e-10);
        }
    }

    #[test]
    fn extended_solution_invariants(f in driver_strategy(120), kdrift in -1.5_f64..1.5) {
        let mu = DriftSpec::linear(kdrift);
        let sol = extended_solve(&f, &mu, 0.05, 1e6).unwrap();
        let scale = 1e-9 * (1.0 + f.max_abs());
        let mut prev_l = 0.0_f64;
        for k in 0..f.len() {
            let x = sol.x.value(k);
            let l = sol.l.value(k);
            prop_assert!(x >= -scale);
            prop_assert!(l >= prev_l - scale);
            prop_assert!((x - (f.value(k) + l + sol.i.value(k))).abs() <= scale);
            prev_l = l;
        }
    }

    #[test]
    fn ecdf_permutation_invariance(mut vals in prop::collection::vec(-5.0_f64..5.0, 1..80)) {
        let a = Ecdf::new(vals.clone()).unwrap();
        vals.reverse();
        let b = Ecdf::new(vals).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ks_increasing_transform_invariance(vals in prop::collection::vec(-3.0_f64..3.0, 2..60)) {
        let e = Ecdf::new(vals.clone()).unwrap();
        let d1 = ks_distance(&e, |q| inert_drift::numeric::normal_cdf(q, 0.0, 1.0));
        // strictly increasing transform x -> x^3 + 2x applied to both sides
        let t = |x: f64| x * x * x + 2.0 * x;
        let e2 = Ecdf::new(vals.iter().map(|&x| t(x)).collect()).unwrap();
        // invert by bisection for the reference cdf
        let inv = move |y: f64| {
            let (mut lo, mut hi) = (-10.0_f64, 10.0_f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if t(mid) < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let d2 = ks_distance(&e2, move |q| {
            inert_drift::numeric::normal_cdf(inv(q), 0.0, 1.0)
        });
        prop_assert!((d1 - d2).abs() < 1e-6);
    }
}
