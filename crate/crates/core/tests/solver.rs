use shq_core::solver::{solve, ConstantRhs, DomainSpec, RadialQuartic, SolveOptions};
use shq_core::OperatorSpec;

fn radial_error(n: usize, mesh: usize, spec: &OperatorSpec, c: f64) -> (f64, f64) {
    let rhs = RadialQuartic { spec: spec.clone(), radius: 1.0, c };
    let out = solve(&DomainSpec::ball(n, 1.0, mesh), &rhs, spec, &SolveOptions::default()).unwrap();
    assert!(out.solution.admissible);
    assert!(out.solution.residual_norm <= 1e-8);
    (out.solution.h(), out.solution.max_error(|x| rhs.exact(x)))
}

#[test]
fn second_order_on_radial_quartic() {
    for (k, l, alpha) in [(2, 0, 1.0), (2, 1, 0.0), (2, 1, 0.5)] {
        let spec = OperatorSpec::new(2, k, l, alpha).unwrap();
        let (h1, e1) = radial_error(2, 33, &spec, 0.5);
        let (h2, e2) = radial_error(2, 65, &spec, 0.5);
        let order = (e1 / e2).ln() / (h1 / h2).ln();
        eprintln!("k={k} l={l} alpha={alpha}: {e1:e} {e2:e} order {order}");
        assert!((1.7..=2.3).contains(&order), "order {order}");
    }
}

#[test]
fn manufactured_quadratic_three_dimensions() {
    let spec = OperatorSpec::new(3, 2, 1, 0.0).unwrap();
    let out = solve(&DomainSpec::ball(3, 1.0, 13), &ConstantRhs(2.0), &spec, &SolveOptions::default()).unwrap();
    let err = out.solution.max_error(|x| (x.iter().map(|v| v * v).sum::<f64>() - 1.0) / 2.0);
    assert!(err <= 1e-8, "{err}");
}
