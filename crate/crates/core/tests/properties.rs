use num_complex::Complex64;
use proptest::prelude::*;
use rkcl::analysis::{empirical_order, gershgorin, l2_error, operator_eigenvalues};
use rkcl::closures::{cancellation_pair, cancellation_residuals, project_consistent};
use rkcl::report::{Cell, Table};
use rkcl::{ClosurePair, Tableau};

fn free3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-20.0..20.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_consistent_and_invertible(free in free3(), node in 1u8..=2) {
        let row = project_consistent(free, node).unwrap();
        let (r0, r1) = row.consistency_residuals();
        let scale = 1.0 + free.iter().map(|f| f.abs()).sum::<f64>();
        prop_assert!(r0.abs() < 1e-12 * scale);
        prop_assert!(r1.abs() < 1e-12 * scale);
        let back = row.free_parameters();
        for (a, b) in back.iter().zip(free) {
            prop_assert!((a - b).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn stencil_file_round_trip(free in prop::array::uniform6(-20.0..20.0f64)) {
        let p = ClosurePair::from_free("prop/pair", &free);
        let q = ClosurePair::parse(&p.to_file_string()).unwrap();
        prop_assert_eq!(p.node1().weights(), q.node1().weights());
        prop_assert_eq!(p.node2().weights(), q.node2().weights());
    }

    #[test]
    fn power_law_order_is_exact(c in 1e-6..1e3f64, p in 0.5..5.0f64, levels in 2usize..6) {
        let dts: Vec<f64> = (0..levels).map(|k| 0.01 / 2f64.powi(k as i32)).collect();
        let errs: Vec<f64> = dts.iter().map(|dt| c * dt.powf(p)).collect();
        let fit = empirical_order(&errs, &dts).unwrap();
        prop_assert!((fit.order - p).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn l2_error_of_constant_offset(v in prop::collection::vec(-10.0..10.0f64, 1..40), d in -1.0..1.0f64) {
        let shifted: Vec<f64> = v.iter().map(|x| x + d).collect();
        let e = l2_error(&shifted, &v).unwrap();
        prop_assert!((e - d.abs()).abs() < 1e-12);
    }

    #[test]
    fn stability_function_matches_polynomial(re in -3.0..1.0f64, im in -3.0..3.0f64) {
        let z = Complex64::new(re, im);
        for t in [Tableau::ssprk3(), Tableau::rk4(), Tableau::heun()] {
            let poly = t.stability_polynomial();
            let horner = poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
            prop_assert!((t.stability_function(z) - horner).norm() < 1e-12 * (1.0 + horner.norm()));
        }
    }

    #[test]
    fn cancellation_pairs_cancel(cfl in 0.1..1.5f64, s1 in -0.5..0.5f64, s2 in -0.5..0.5f64) {
        if let Ok(p) = cancellation_pair(cfl, 1.0, s1, s2) {
            let r = cancellation_residuals(&p, cfl, 1.0).unwrap();
            prop_assert!(r.res1.abs() < 1e-10 && r.res2.abs() < 1e-10, "{:?}", r);
        }
    }

    #[test]
    fn csv_cells_round_trip(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let mut t = Table::new("prop", &["i", "v"]).meta("note", "a b");
        for (i, v) in vals.iter().enumerate() {
            t.push(vec![Cell::Int(i as i64), Cell::Num(*v)]);
        }
        let csv = t.to_csv();
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next().unwrap(), "# kind=prop schema_version=1 note=a_b");
        prop_assert_eq!(lines.next().unwrap(), "i,v");
        for (line, v) in lines.zip(&vals) {
            let parsed: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            prop_assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalues_lie_in_gershgorin_discs(free in prop::array::uniform6(-3.0..3.0f64), cfl in 0.1..1.5f64) {
        let pair = ClosurePair::from_free("prop/gersh", &free);
        let n = 24;
        let g = gershgorin(&pair, &Tableau::ssprk3(), cfl, n).unwrap();
        let mu = operator_eigenvalues(&pair, n).unwrap();
        let scale: f64 = g.discs.iter().map(|d| d.center.abs() + d.radius).fold(1.0, f64::max);
        for m in mu {
            let z = -cfl * m;
            let inside = g.discs.iter().any(|d| (z - Complex64::new(d.center, 0.0)).norm() <= d.radius + 1e-8 * scale);
            prop_assert!(inside, "z = {} outside every disc", z);
        }
    }
}
