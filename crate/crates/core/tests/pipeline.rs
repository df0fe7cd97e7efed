//! End-to-end paths through the public API.

use caloric_core::caccioppoli::caccioppoli_report;
use caloric_core::caloric::{cylinder_aggregate, march_backward_discrete, residual};
use caloric_core::structure::{assemble_ancient, extract_coefficients, solve_hierarchy};
use caloric_core::{
    build_window, construct_path_metric, generate, ratio_sweep, Cylinder, Error, FamilyConfig, HierarchyChain,
    LatticePolynomial, Mode, Quantity, VertexFunction,
};

fn lattice(dim: usize, hops: u32) -> (caloric_core::GraphWindow, caloric_core::MetricData) {
    let p = generate(&FamilyConfig::lattice(dim)).unwrap();
    let w = build_window(p.clone(), p.base(), hops).unwrap();
    let m = construct_path_metric(&w);
    (w, m)
}

#[test]
fn march_agrees_with_discrete_hierarchy() {
    // marching x² backward on Z^1 gives x² + 2t
    let (w, _) = lattice(1, 40);
    let u0 = LatticePolynomial::parse(1, "x^2").unwrap();
    let f0 = VertexFunction::from_coords(&w, |x| u0.eval_f64(x)).unwrap();
    let marched = march_backward_discrete(&w, &f0, 10).unwrap();
    let exact = assemble_ancient(&HierarchyChain::from_initial(&u0, Mode::Discrete)).unwrap().on_window(&w).unwrap();
    for &i in marched.recorded() {
        for t in -10..=0 {
            let x = w.coords(i).unwrap()[0] as f64;
            assert_eq!(marched.value(i, t).unwrap(), x * x + 2.0 * t as f64);
            assert_eq!(exact.value(i, t as f64), x * x + 2.0 * t as f64);
        }
    }
    assert_eq!(residual(&marched, &w).unwrap(), 0.0);
}

#[test]
fn sampled_slices_recover_the_chain() {
    let (w, _) = lattice(2, 5);
    let top = LatticePolynomial::parse(2, "x*y").unwrap();
    let field = assemble_ancient(&solve_hierarchy(&top, 2, Mode::Discrete).unwrap()).unwrap().on_window(&w).unwrap();
    let samples: Vec<(f64, VertexFunction)> = [-3.0, -7.0, -11.0].into_iter().map(|t| (t, field.slice(t))).collect();
    let back = extract_coefficients(&samples, 2, Mode::Discrete).unwrap();
    for (a, b) in back.iter().zip(field.coeffs()) {
        assert!(a.axpy(-1.0, b).max_abs() < 1e-9);
    }
}

#[test]
fn report_terms_match_direct_aggregates() {
    let (w, m) = lattice(1, 60);
    let top = LatticePolynomial::parse(1, "x").unwrap();
    let field = assemble_ancient(&solve_hierarchy(&top, 0, Mode::Continuous).unwrap()).unwrap().on_window(&w).unwrap();
    let r = caccioppoli_report(&field, &w, &m, 2.0, Mode::Continuous).unwrap();
    let q = |radius: f64| Cylinder::new(w.base(), radius, Mode::Continuous).unwrap();
    let grad = cylinder_aggregate(&field, &w, &m, Quantity::Gamma, &q(2.0)).unwrap();
    let rhs = cylinder_aggregate(&field, &w, &m, Quantity::USquared, &q(18.0)).unwrap();
    assert!((r.gradient - 4.0 * grad).abs() <= 1e-12 * r.gradient);
    assert!((r.rhs - rhs).abs() <= 1e-12 * rhs);
    assert_eq!(r.time, 0.0);
    assert!((r.ratio - 4.0 * grad / rhs).abs() <= 1e-12 * r.ratio);
}

#[test]
fn errors_keep_their_class() {
    let (w, m) = lattice(1, 10);
    let field =
        assemble_ancient(&HierarchyChain::from_initial(&LatticePolynomial::parse(1, "x^2").unwrap(), Mode::Continuous))
            .unwrap()
            .on_window(&w)
            .unwrap();
    assert!(matches!(ratio_sweep(&field, &w, &m, &[4.0], Mode::Continuous), Err(Error::Coverage(_))));
    assert!(matches!(
        solve_hierarchy(&LatticePolynomial::parse(1, "x^2").unwrap(), 1, Mode::Discrete),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(LatticePolynomial::parse(1, "x^"), Err(Error::Parse(_))));
}
