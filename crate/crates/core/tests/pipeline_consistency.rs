//! End-to-end runs through solver, maximal operators, and the verification
//! reports, checking the structural relations the modules promise each
//! other rather than any single module's internals.

use fracp::geometry::dyadic::DyadicTree;
use fracp::geometry::Anisotropy;
use fracp::grid::{ExteriorRule, GridFunction};
use fracp::kernel::KernelFamily;
use fracp::maximal::{good_lambda, maximal_all, resolvable_radii};
use fracp::solver::{solve, DirichletProblem};
use fracp::verify::harnack::{weak_harnack, HarnackInput};
use fracp::verify::testfns::{smooth_bump, tent};

#[test]
fn quadratic_solutions_superpose() {
    // at p = 2 the discrete system is linear, so solutions add and scale;
    // the solver does not know that, making this an honest cross-check
    let a = Anisotropy::equal(1, 2.0, 0.4).unwrap();
    let bx = GridFunction::default_box(&a);
    let f1 = smooth_bump(&bx, &[33], 0.9).unwrap();
    let f2 = tent(&bx, &[33], 0.7).unwrap();
    let f12 = GridFunction::new(
        bx.clone(),
        &[33],
        f1.values()
            .iter()
            .zip(f2.values())
            .map(|(&x, &y)| x + y)
            .collect(),
        ExteriorRule::Zero,
    )
    .unwrap();

    let run = |f: GridFunction| {
        let fam = KernelFamily::axes(a.clone());
        let prob = DirichletProblem::new(fam, f, ExteriorRule::Zero, 4.0)
            .unwrap()
            .with_tol(1e-11)
            .unwrap()
            .with_max_iter(50_000)
            .unwrap();
        let sol = solve(&prob).unwrap();
        assert!(sol.converged, "residual stuck at {}", sol.residual);
        sol.u
    };

    let u1 = run(f1.clone());
    let u2 = run(f2);
    let u12 = run(f12);
    let worst = u12
        .values()
        .iter()
        .zip(u1.values())
        .zip(u2.values())
        .map(|((&ab, &x), &y)| (ab - x - y).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-8, "superposition defect {worst}");

    let f3 = GridFunction::new(
        bx.clone(),
        &[33],
        f1.values().iter().map(|&x| 3.0 * x).collect(),
        ExteriorRule::Zero,
    )
    .unwrap();
    let u3 = run(f3);
    let worst = u3
        .values()
        .iter()
        .zip(u1.values())
        .map(|(&t, &x)| (t - 3.0 * x).abs())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-8, "3x scaling defect {worst}");
}

fn torsion_solution(a: &Anisotropy, m: usize) -> GridFunction {
    let bx = GridFunction::default_box(a);
    let f = GridFunction::constant(bx, &[m, m], 1.0, ExteriorRule::Zero).unwrap();
    let prob = DirichletProblem::new(KernelFamily::axes(a.clone()), f, ExteriorRule::Zero, 5.0)
        .unwrap()
        .with_tol(1e-9)
        .unwrap()
        .with_max_iter(50_000)
        .unwrap();
    let sol = solve(&prob).unwrap();
    assert!(sol.converged, "residual stuck at {}", sol.residual);
    sol.u
}

#[test]
fn maximal_bounds_hold_on_solver_output() {
    let a = Anisotropy::new(2.0, vec![0.4, 0.6], 0.4, 1.0).unwrap();
    let u = torsion_solution(&a, 17);

    let radii = resolvable_radii(&u, &a);
    assert!(!radii.is_empty());
    let tree = DyadicTree::build(&a, u.bx(), 0, 3).unwrap();
    let res = maximal_all(&u, &a, &radii, &tree).unwrap();

    // the tree rectangles join the plain candidate set, and every centered
    // mean deviation is at most twice a centered mean of |u|
    for i in 0..u.values().len() {
        let mu = res.mu.values()[i];
        let md = res.md.values()[i];
        let sh = res.msharp.values()[i];
        assert!(md <= mu * (1.0 + 1e-12), "node {i}: md {md} above mu {mu}");
        assert!(sh <= 2.0 * mu * (1.0 + 1e-12), "node {i}: sharp {sh} vs mu {mu}");
    }

    let peak = res.md.values().iter().fold(0.0f64, |m, &v| m.max(v));
    assert!(peak > 0.0);
    let (lhs, rhs) = good_lambda(&res, 0.25 * peak, 0.1).unwrap();
    assert!(rhs > 0.0);
    assert!(lhs <= rhs);
}

#[test]
fn weak_harnack_certifies_the_torsion_solution() {
    let a = Anisotropy::new(2.0, vec![0.4, 0.6], 0.4, 1.0).unwrap();
    let u = torsion_solution(&a, 17);
    assert!(u.values().iter().all(|&v| v >= 0.0));

    let bx = u.bx().clone();
    let f = GridFunction::constant(bx, &[17, 17], 1.0, ExteriorRule::Zero).unwrap();
    let rep = weak_harnack(&HarnackInput {
        u: &u,
        f: &f,
        fam: &KernelFamily::axes(a.clone()),
        p0: 0.5,
        q: 5.0,
    })
    .unwrap();
    assert!(rep.pass, "report failed: {rep:?}");
    let c = rep.constant("c_emp").unwrap();
    assert!(c.is_finite() && c > 0.0, "empirical constant {c}");
}
