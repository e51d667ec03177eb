//! The logarithmic energy estimate: for positive supersolution data, the
//! energy of `log u` over a metric rectangle is controlled by a kernel
//! scale term, a forcing term, and a nonlocal tail term.

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::grid::{energy, tail_term, GridFunction};
use crate::kernel::KernelFamily;

use super::{cutoff_scale_sum, lp_norm_over, rect_nodes, rect_volume, InequalityReport};

/// Inputs for [`check_log_lemma`]. Rectangles are centered at the box
/// center of `u`; `u` must stay at or above `eps` on the closed outer
/// rectangle `M_{lambda r}` and `f` must share the grid layout of `u`.
#[derive(Debug, Clone, Copy)]
pub struct LogLemmaInput<'a> {
    pub u: &'a GridFunction,
    pub f: &'a GridFunction,
    pub fam: &'a KernelFamily,
    pub r: f64,
    pub lambda: f64,
    pub eps: f64,
    pub q: f64,
}

/// Measures both sides of the estimate
/// `E_{M_r}(log u, log u) <= C K_lambda r^{-p s_max} |M_{lambda r}|
/// + eps^{1-p} ||f||_{L^{q/(p s_bar)}(M_{lambda r})} |M_{lambda r}|^{(q - p s_bar)/q}
/// + 2 eps^{1-p} |M_{lambda r}| sup_x int_{R^n \ M_{lambda r}} u^-(z)^{p-1} mu(x, dz)`
/// with the sup over the intermediate rectangle `M_{(lambda+1)r/2}`.
///
/// The constant multiplies only the kernel scale term, so the report's
/// `worst_margin` carries the smallest admissible `C`:
/// `max(0, lhs - forcing - tail) / kernel_term`. Constants record every
/// piece separately. Volumes are continuum rectangle volumes; energies and
/// norms carry the cell volume.
pub fn check_log_lemma(input: &LogLemmaInput) -> Result<InequalityReport> {
    let LogLemmaInput {
        u,
        f,
        fam,
        r,
        lambda,
        eps,
        q,
    } = *input;
    let a = fam.aniso();
    let n = a.n();
    if u.sizes().len() != n || f.sizes().len() != n {
        return Err(Error::invalid("fam", "dimension mismatch"));
    }
    if f.sizes() != u.sizes() {
        return Err(Error::invalid("f", "grids disagree"));
    }
    if !r.is_finite() || r <= 0.0 || r > 1.0 {
        return Err(Error::invalid("r", format!("need r in (0,1], got {r}")));
    }
    if !lambda.is_finite() || lambda <= 1.0 || lambda > 2.0 {
        return Err(Error::invalid(
            "lambda",
            format!("need lambda in (1,2], got {lambda}"),
        ));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::invalid("eps", "need a positive truncation level"));
    }
    let p = a.p();
    if q <= n as f64 || q <= p * a.s_bar() {
        return Err(Error::invalid(
            "q",
            "forcing norms need q > n and q > p s_bar",
        ));
    }
    let center = u.bx().center().to_vec();
    let fit = |rho: f64| -> Result<Rect> {
        let rect = a.rect(&center, rho)?;
        for k in 0..n {
            if rect.half_widths()[k] > u.bx().half_widths()[k] * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "r",
                    format!("rectangle of radius {rho} exceeds the box along axis {k}"),
                ));
            }
        }
        Ok(rect)
    };
    let inner = fit(r)?;
    let outer = fit(lambda * r)?;
    let mid = fit((lambda + 1.0) * r / 2.0)?;
    let outer_nodes = rect_nodes(u, &outer);
    let mid_nodes = rect_nodes(u, &mid);
    if mid_nodes.is_empty() {
        return Err(Error::invalid("r", "rectangle resolves no nodes"));
    }
    for &i in &outer_nodes {
        if u.values()[i] < eps {
            return Err(Error::invalid(
                "u",
                format!(
                    "need u >= eps on the outer rectangle, found {} at node {i}",
                    u.values()[i]
                ),
            ));
        }
    }

    // log u as a grid function; only nodes inside M_r enter the energy, and
    // there u >= eps > 0, so placeholder zeros elsewhere are never read
    let logs: Vec<f64> = u
        .values()
        .iter()
        .map(|&v| if v > 0.0 { v.ln() } else { 0.0 })
        .collect();
    let logu = GridFunction::new(
        u.bx().clone(),
        u.sizes(),
        logs,
        crate::grid::ExteriorRule::Zero,
    )?;
    let cellvol: f64 = u.delta().iter().product();
    let lhs = cellvol * energy(&logu, &logu, fam, &inner)?;

    let vol_outer = rect_volume(a, lambda * r);
    let k_lambda = cutoff_scale_sum(a, lambda);
    let kernel_term = k_lambda * r.powf(-p * a.s_max()) * vol_outer;
    let forcing = eps.powf(1.0 - p)
        * lp_norm_over(f, &outer_nodes, q / (p * a.s_bar()))
        * vol_outer.powf((q - p * a.s_bar()) / q);
    let mut tail_sup = 0.0f64;
    for &i in &mid_nodes {
        tail_sup = tail_sup.max(tail_term(u, fam, i, &outer)?);
    }
    let tail = 2.0 * eps.powf(1.0 - p) * vol_outer * tail_sup;

    let c_emp = if kernel_term > 0.0 {
        (lhs - forcing - tail).max(0.0) / kernel_term
    } else {
        0.0
    };
    let pass = lhs.is_finite() && forcing.is_finite() && tail.is_finite() && kernel_term > 0.0;
    Ok(InequalityReport {
        name: "log-energy".into(),
        samples: 1,
        worst_margin: c_emp,
        pass,
        witness: Vec::new(),
        constants: vec![
            ("c_emp".into(), c_emp),
            ("lhs".into(), lhs),
            ("kernel_term".into(), kernel_term),
            ("forcing".into(), forcing),
            ("tail".into(), tail),
            ("k_lambda".into(), k_lambda),
            ("tail_sup".into(), tail_sup),
        ],
        series: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Anisotropy;
    use crate::grid::ExteriorRule;

    fn setup() -> (Anisotropy, KernelFamily, GridFunction, GridFunction) {
        let a = Anisotropy::new(2.0, vec![0.5, 0.7], 0.4, 1.0).unwrap();
        let fam = KernelFamily::axes(a.clone());
        let bx = GridFunction::default_box(&a);
        // positive inside the box, negative far field: the tail term is
        // strictly positive
        let u = GridFunction::from_fn(bx.clone(), &[17, 17], ExteriorRule::Constant(-0.5), |x| {
            1.0 + 0.2 * (x[0] + 0.7 * x[1]).sin()
        })
        .unwrap();
        let f = GridFunction::from_fn(bx, &[17, 17], ExteriorRule::Zero, |x| {
            0.3 * (1.3 * x[0] - x[1]).cos()
        })
        .unwrap();
        (a, fam, u, f)
    }

    #[test]
    fn constant_positive_data_has_zero_log_energy() {
        let (a, fam, _, f) = setup();
        let bx = GridFunction::default_box(&a);
        let u = GridFunction::constant(bx, &[17, 17], 2.0, ExteriorRule::Constant(2.0)).unwrap();
        let rep = check_log_lemma(&LogLemmaInput {
            u: &u,
            f: &f,
            fam: &fam,
            r: 0.5,
            lambda: 2.0,
            eps: 1e-3,
            q: 3.0,
        })
        .unwrap();
        assert!(rep.pass);
        assert_eq!(rep.constant("lhs"), Some(0.0));
        assert_eq!(rep.constant("c_emp"), Some(0.0));
        assert_eq!(rep.constant("tail_sup"), Some(0.0));
        assert!(rep.constant("kernel_term").unwrap() > 0.0);
    }

    #[test]
    fn doubling_eps_halves_the_forcing_and_tail_terms_at_p_two() {
        let (_, fam, u, f) = setup();
        let base = LogLemmaInput {
            u: &u,
            f: &f,
            fam: &fam,
            r: 0.5,
            lambda: 2.0,
            eps: 1e-3,
            q: 3.0,
        };
        let one = check_log_lemma(&base).unwrap();
        let two = check_log_lemma(&LogLemmaInput { eps: 2e-3, ..base }).unwrap();
        assert!(one.constant("tail_sup").unwrap() > 0.0);
        for key in ["forcing", "tail"] {
            let a = one.constant(key).unwrap();
            let b = two.constant(key).unwrap();
            assert!(
                (a / b - 2.0).abs() <= 1e-12,
                "{key}: {a} vs {b} not in ratio 2"
            );
        }
        assert_eq!(one.constant("kernel_term"), two.constant("kernel_term"));
        assert_eq!(one.constant("lhs"), two.constant("lhs"));
    }

    #[test]
    fn hypothesis_violations_are_rejected() {
        let (a, fam, u, f) = setup();
        let ok = LogLemmaInput {
            u: &u,
            f: &f,
            fam: &fam,
            r: 0.5,
            lambda: 2.0,
            eps: 1e-3,
            q: 3.0,
        };
        assert!(check_log_lemma(&ok).is_ok());
        assert!(check_log_lemma(&LogLemmaInput { r: 0.0, ..ok }).is_err());
        assert!(check_log_lemma(&LogLemmaInput { lambda: 1.0, ..ok }).is_err());
        assert!(check_log_lemma(&LogLemmaInput { eps: 0.0, ..ok }).is_err());
        // q must exceed the dimension
        assert!(check_log_lemma(&LogLemmaInput { q: 1.5, ..ok }).is_err());
        // u dipping below eps on the outer rectangle violates the hypothesis
        assert!(check_log_lemma(&LogLemmaInput { eps: 0.9, ..ok }).is_err());
        // mismatched forcing layout
        let bx = GridFunction::default_box(&a);
        let coarse = GridFunction::constant(bx, &[9, 9], 0.0, ExteriorRule::Zero).unwrap();
        assert!(check_log_lemma(&LogLemmaInput { f: &coarse, ..ok }).is_err());
    }
}
