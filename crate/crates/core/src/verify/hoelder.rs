//! Oscillation decay across dyadic metric rectangles: the discrete form of
//! interior regularity is a fitted decay exponent for
//! `osc_{M_{4^{-k}}(x0)} u`.

use crate::error::{Error, Result};
use crate::geometry::Anisotropy;
use crate::grid::GridFunction;

use super::{rect_nodes, InequalityReport, SeriesPoint};

/// Fits `osc_{M_rho(center)} u ~ C rho^alpha` over the dyadic radii
/// `rho_k = 4^{-k}` that the grid resolves (every half-width at least one
/// cell) and that fit inside the box. Needs at least three such scales.
///
/// The finest two scales are dropped from the fit when at least two points
/// remain, otherwise one, since node sampling underestimates the
/// oscillation near the grid scale; the reported series keeps every scale.
/// Oscillations are exactly monotone over nested rectangles, so a zero at
/// any scale means `u` is constant near the center; the fitted exponent is
/// then `+inf`. `worst_margin` carries `alpha_hat` and `pass` means
/// `alpha_hat > 0`.
pub fn hoelder_decay(
    u: &GridFunction,
    a: &Anisotropy,
    center: &[f64],
) -> Result<InequalityReport> {
    let n = a.n();
    if u.sizes().len() != n || center.len() != n {
        return Err(Error::invalid("center", "dimension mismatch"));
    }
    let mut scales: Vec<(usize, f64, f64)> = Vec::new();
    for k in 0..64 {
        let rho = 4f64.powi(-k);
        let resolvable = (0..n).all(|j| rho.powf(a.exponent(j)) >= u.delta()[j] * (1.0 - 1e-12));
        if !resolvable {
            break;
        }
        let fits = (0..n).all(|j| {
            (center[j] - u.bx().center()[j]).abs() + rho.powf(a.exponent(j))
                <= u.bx().half_widths()[j] * (1.0 + 1e-12)
        });
        if !fits {
            continue;
        }
        let nodes = rect_nodes(u, &a.rect(center, rho)?);
        if nodes.is_empty() {
            break;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &nodes {
            lo = lo.min(u.values()[i]);
            hi = hi.max(u.values()[i]);
        }
        scales.push((k as usize, rho, hi - lo));
    }
    if scales.len() < 3 {
        return Err(Error::invalid(
            "u",
            format!("grid resolves {} dyadic scales, need 3", scales.len()),
        ));
    }
    let series: Vec<SeriesPoint> = scales
        .iter()
        .map(|&(_, rho, osc)| SeriesPoint {
            label: "osc".into(),
            x: rho,
            y: osc,
        })
        .collect();

    let nonzero: Vec<(usize, f64)> = scales
        .iter()
        .take_while(|&&(_, _, osc)| osc > 0.0)
        .map(|&(k, _, osc)| (k, osc))
        .collect();
    let truncated = nonzero.len() < scales.len();
    let (alpha_hat, used) = if truncated {
        // a zero oscillation means constancy near the center, which beats
        // every power
        (f64::INFINITY, 0usize)
    } else {
        let drop = if nonzero.len() >= 4 { 2 } else { 1 };
        let fit = &nonzero[..nonzero.len() - drop];
        let ln4 = 4f64.ln();
        let xs: Vec<f64> = fit.iter().map(|&(k, _)| k as f64 * ln4).collect();
        let ys: Vec<f64> = fit.iter().map(|&(_, osc)| osc.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = xs.iter().map(|&x| (x - xm) * (x - xm)).sum();
        (-sxy / sxx, fit.len())
    };
    Ok(InequalityReport {
        name: "oscillation-decay".into(),
        samples: scales.len() as u64,
        worst_margin: alpha_hat,
        pass: alpha_hat > 0.0,
        witness: center
            .iter()
            .enumerate()
            .map(|(k, &c)| (format!("x{k}"), c))
            .collect(),
        constants: vec![
            ("alpha_hat".into(), alpha_hat),
            ("scales_used".into(), used as f64),
            ("scales_total".into(), scales.len() as f64),
        ],
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ExteriorRule;

    #[test]
    fn affine_data_recovers_the_metric_exponent() {
        // u = x0 oscillates like 2 rho^{b_0} over M_rho, with
        // b_0 = s_max / s_0 = 1.5; on the box M_1 = [-1, 1]^2 the radii
        // 4^{-k} land exactly on node positions, so the fit is sharp
        let a = Anisotropy::new(2.0, vec![0.5, 0.75], 0.4, 1.0).unwrap();
        let bx = a.rect(&[0.0, 0.0], 1.0).unwrap();
        let u = GridFunction::from_fn(bx, &[257, 257], ExteriorRule::Zero, |x| x[0]).unwrap();
        let rep = hoelder_decay(&u, &a, &[0.0, 0.0]).unwrap();
        assert!(rep.pass);
        let alpha = rep.constant("alpha_hat").unwrap();
        assert!(
            (alpha - 1.5).abs() <= 1e-9,
            "expected the axis-0 exponent 1.5, got {alpha}"
        );
        assert!(rep.samples >= 3);
        assert!(rep.series.iter().all(|pt| pt.label == "osc"));
    }

    #[test]
    fn one_dimensional_affine_data_gives_exponent_one() {
        let a = Anisotropy::equal(1, 2.0, 0.5).unwrap();
        let bx = GridFunction::default_box(&a);
        let u = GridFunction::from_fn(bx, &[257], ExteriorRule::Zero, |x| 0.3 * x[0] - 0.1)
            .unwrap();
        let rep = hoelder_decay(&u, &a, &[0.0]).unwrap();
        let alpha = rep.constant("alpha_hat").unwrap();
        assert!((alpha - 1.0).abs() <= 1e-9, "got {alpha}");
    }

    #[test]
    fn locally_constant_data_has_infinite_exponent() {
        let a = Anisotropy::equal(1, 2.0, 0.5).unwrap();
        let bx = GridFunction::default_box(&a);
        // constant near the center, sloped outside
        let u = GridFunction::from_fn(bx.clone(), &[257], ExteriorRule::Zero, |x| {
            (x[0].abs() - 0.5).max(0.0)
        })
        .unwrap();
        let rep = hoelder_decay(&u, &a, &[0.0]).unwrap();
        assert!(rep.constant("alpha_hat").unwrap().is_infinite());
        assert!(rep.pass);

        let c = GridFunction::constant(bx, &[257], 2.0, ExteriorRule::Zero).unwrap();
        let rep = hoelder_decay(&c, &a, &[0.0]).unwrap();
        assert!(rep.constant("alpha_hat").unwrap().is_infinite());
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let a = Anisotropy::equal(1, 2.0, 0.5).unwrap();
        let bx = GridFunction::default_box(&a);
        let u = GridFunction::from_fn(bx, &[9], ExteriorRule::Zero, |x| x[0]).unwrap();
        assert!(hoelder_decay(&u, &a, &[0.0]).is_err());
    }
}
