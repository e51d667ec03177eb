//! Closed-form kernel quantities against the quadrature engine, and the
//! exact homogeneity and scaling laws that tie geometry, kernel, and grid
//! energies together. Everything here goes through the public API.

use fracp::geometry::Anisotropy;
use fracp::grid::{apply_operator, energy, energy_total, ExteriorRule, GridFunction};
use fracp::kernel::{axes_mass_beyond, axes_tail_slab, cell_weight, KernelFamily};
use fracp::num::j_p;
use fracp::quad::{adaptive_simpson, integrate_dyadic_tail};
use fracp::verify::testfns::smooth_bump;

#[test]
fn closed_tails_match_quadrature_across_orders() {
    for &p in &[1.5, 2.0, 3.0] {
        for &s in &[0.3, 0.5, 0.7, 0.9, 0.99] {
            let a = Anisotropy::equal(1, p, s).unwrap();
            let fam = KernelFamily::axes(a.clone());
            let density = |h: f64| fam.axis_density(0, h);
            for &dist in &[0.2, 1.0, 3.5] {
                let closed = axes_mass_beyond(dist, 0, &a).unwrap();
                let quad = integrate_dyadic_tail(&density, dist, 1e-13 * closed);
                assert!(
                    (quad - closed).abs() <= 1e-10 * closed,
                    "mass beyond {dist} at p={p}, s={s}: {quad} vs {closed}"
                );
            }
            let delta = 0.05;
            for &m in &[1i64, 3, 10] {
                let closed = cell_weight(0, m, delta, &a).unwrap();
                let lo = (m as f64 - 0.5) * delta;
                let hi = (m as f64 + 0.5) * delta;
                let quad = adaptive_simpson(&density, lo, hi, 1e-13 * closed);
                assert!(
                    (quad - closed).abs() <= 1e-10 * closed,
                    "cell {m} at p={p}, s={s}: {quad} vs {closed}"
                );
            }
        }
    }
}

#[test]
fn slab_tails_are_two_one_sided_masses_at_the_metric_width() {
    let a = Anisotropy::new(2.0, vec![0.4, 0.7], 0.4, 1.0).unwrap();
    for &r in &[0.25, 1.0, 2.0] {
        for k in 0..2 {
            let slab = axes_tail_slab(r, k, &a).unwrap();
            let sides = 2.0 * axes_mass_beyond(r.powf(a.exponent(k)), k, &a).unwrap();
            assert!(
                (slab - sides).abs() <= 1e-13 * slab,
                "axis {k}, r={r}: {slab} vs {sides}"
            );
        }
    }
}

#[test]
fn energies_and_operator_follow_the_kernel_homogeneity() {
    // J_p(c t) = |c|^{p-2} c J_p(t), so scaling the data scales the energy
    // by |c|^p and the operator by |c|^{p-2} c; the zero exterior scales
    // with the data, so the identity is exact on the whole pipeline
    let c = -1.75f64;
    for &p in &[1.5, 2.0, 3.0] {
        let a = Anisotropy::new(p, vec![0.45, 0.7], 0.4, 1.0).unwrap();
        let fam = KernelFamily::axes(a.clone());
        let bx = GridFunction::default_box(&a);
        let u = smooth_bump(&bx, &[17, 17], 0.8).unwrap();
        let cu = GridFunction::new(
            bx.clone(),
            u.sizes(),
            u.values().iter().map(|&v| c * v).collect(),
            ExteriorRule::Zero,
        )
        .unwrap();

        let e = energy(&u, &u, &fam, u.bx()).unwrap();
        let ce = energy(&cu, &cu, &fam, cu.bx()).unwrap();
        assert!(e > 0.0);
        assert!(
            (ce - c.abs().powf(p) * e).abs() <= 1e-12 * ce.abs(),
            "p={p}: domain energy {ce} vs scaled {e}"
        );

        let t = energy_total(&u, &fam).unwrap();
        let ct = energy_total(&cu, &fam).unwrap();
        assert!(
            (ct - c.abs().powf(p) * t).abs() <= 1e-12 * ct.abs(),
            "p={p}: whole-space energy {ct} vs scaled {t}"
        );

        let node = u.flat(&[8, 8]);
        let lu = apply_operator(&u, &fam, node).unwrap();
        let lcu = apply_operator(&cu, &fam, node).unwrap();
        assert!(
            (lcu - j_p(c, p) * lu).abs() <= 1e-12 * lcu.abs().max(1e-300),
            "p={p}: operator {lcu} vs scaled {lu}"
        );
    }
}

#[test]
fn metric_scaling_transports_the_energy_with_the_exact_factor() {
    // pulling a grid function back along the scaling that maps M_1 onto M_r
    // multiplies every pair weight by r^{-p s_max} and the cell volume by
    // r^{dimension}; both exponents must survive orders close to 1
    let g = |x: &[f64]| (1.3 * x[0]).sin() * (0.7 + x[1]).cos();
    for (p, s) in [(1.5, vec![0.5, 0.75]), (2.0, vec![0.95, 0.97])] {
        let a = Anisotropy::new(p, s, 0.4, 1.0).unwrap();
        let fam = KernelFamily::axes(a.clone());
        let sizes = [17usize, 17];
        let u = GridFunction::from_fn(
            a.rect(&[0.0, 0.0], 1.0).unwrap(),
            &sizes,
            ExteriorRule::Zero,
            g,
        )
        .unwrap();
        let r = 0.5f64;
        let sc = a.scaling(r).unwrap();
        let v = GridFunction::from_fn(
            a.rect(&[0.0, 0.0], r).unwrap(),
            &sizes,
            ExteriorRule::Zero,
            |x| g(&sc.apply_inverse(x)),
        )
        .unwrap();

        let e_u = energy(&u, &u, &fam, u.bx()).unwrap();
        let e_v = energy(&v, &v, &fam, v.bx()).unwrap();
        let factor = r.powf(-a.p() * a.s_max());
        assert!(
            (e_v - factor * e_u).abs() <= 1e-12 * e_v.abs(),
            "p={p}: {e_v} vs {} x {e_u}",
            factor
        );

        let cv_u: f64 = u.delta().iter().product();
        let cv_v: f64 = v.delta().iter().product();
        let vol_factor = r.powf(a.dimension());
        assert!(
            (cv_v - vol_factor * cv_u).abs() <= 1e-12 * cv_v,
            "p={p}: cell volume {cv_v} vs {} x {cv_u}",
            vol_factor
        );
    }
}
