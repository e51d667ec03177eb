//! The weak Harnack estimate on the standard rectangle chain: the infimum
//! over `M_{1/4}` controls the `p0`-average over `M_{1/2}` up to the
//! nonlocal tail and the forcing, with side evidence from the bounded mean
//! oscillation of `log u` and the negative-moment iteration ladder.

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::grid::{tail_term, GridFunction};
use crate::kernel::KernelFamily;
use crate::maximal::resolvable_radii;

use super::{cutoff_scale_sum, lp_norm_over, rect_nodes, InequalityReport, SeriesPoint};

/// Inputs for [`weak_harnack`]. The grid box must contain `M_1` around its
/// center; `u` must be nonnegative on `M_1` and `f` must share its layout.
#[derive(Debug, Clone, Copy)]
pub struct HarnackInput<'a> {
    pub u: &'a GridFunction,
    pub f: &'a GridFunction,
    pub fam: &'a KernelFamily,
    /// Exponent of the average on `M_{1/2}`, in `(0, infinity)`.
    pub p0: f64,
    /// Forcing integrability: `f` is measured in `L^{q/(p s_bar)}`, `q > n`.
    pub q: f64,
}

/// Measures the empirical constant of
/// `inf_{M_{1/4}} u >= C (avg_{M_{1/2}} u^{p0})^{1/p0}
/// - 2 sup_{x in M_{15/16}} (int_{R^n \ M_1} u^-(z)^{p-1} mu(x, dz))^{1/(p-1)}
/// - ||f||_{L^{q/(p s_bar)}(M_{15/16})}`,
/// reported as `c_emp = (inf + tail + forcing) / avg` in `worst_margin`.
/// The average is the node average; norms carry the cell volume.
///
/// Requires `p s_bar < n`. When `u` is strictly positive on `M_{1/2}` the
/// report also carries `log_bmo`, the worst node-mean oscillation of
/// `log u` over resolvable rectangles inside `M_{1/2}`, and a `ladder`
/// series: per iteration rung `j` with radii `r_j = (1 + 2^{-j})/4` and
/// moments `m_{j+1} = m_j n / (n - p s_bar)` from `m_0 = 1/2`, the ratio
/// `||u^{-1}||_{L^{gamma m_j}(M_{r_{j+1}})}^{m_j}` over
/// `K_{lambda_j} r_{j+1}^{-p s_max} ||u^{-1}||_{L^{m_j}(M_{r_j})}^{m_j}`,
/// whose worst value is the constant `ladder_max`.
pub fn weak_harnack(input: &HarnackInput) -> Result<InequalityReport> {
    let HarnackInput { u, f, fam, p0, q } = *input;
    let a = fam.aniso();
    let n = a.n();
    if u.sizes().len() != n {
        return Err(Error::invalid("fam", "dimension mismatch"));
    }
    if f.sizes() != u.sizes() {
        return Err(Error::invalid("f", "grids disagree"));
    }
    let p = a.p();
    if a.p_star().is_none() {
        return Err(Error::invalid("fam", "need p s_bar < n"));
    }
    if !p0.is_finite() || p0 <= 0.0 {
        return Err(Error::invalid("p0", "need a positive average exponent"));
    }
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
                    "u",
                    format!("box too small for the rectangle of radius {rho}"),
                ));
            }
        }
        Ok(rect)
    };
    let m1 = fit(1.0)?;
    let m1516 = fit(15.0 / 16.0)?;
    let m12 = fit(0.5)?;
    let m14 = fit(0.25)?;
    let m1_nodes = rect_nodes(u, &m1);
    for &i in &m1_nodes {
        if u.values()[i] < 0.0 {
            return Err(Error::invalid(
                "u",
                format!("need u >= 0 on M_1, found {} at node {i}", u.values()[i]),
            ));
        }
    }
    let inf_nodes = rect_nodes(u, &m14);
    let avg_nodes = rect_nodes(u, &m12);
    let sup_nodes = rect_nodes(u, &m1516);
    if inf_nodes.is_empty() || avg_nodes.is_empty() || sup_nodes.is_empty() {
        return Err(Error::invalid("u", "grid too coarse for the chain"));
    }

    let inf = inf_nodes
        .iter()
        .map(|&i| u.values()[i])
        .fold(f64::INFINITY, f64::min);
    let avg = (avg_nodes
        .iter()
        .map(|&i| u.values()[i].powf(p0))
        .sum::<f64>()
        / avg_nodes.len() as f64)
        .powf(1.0 / p0);
    let mut tail_sup = 0.0f64;
    for &i in &sup_nodes {
        tail_sup = tail_sup.max(tail_term(u, fam, i, &m1)?);
    }
    let tail = 2.0 * tail_sup.powf(1.0 / (p - 1.0));
    let forcing = lp_norm_over(f, &sup_nodes, q / (p * a.s_bar()));
    let c_emp = (inf + tail + forcing) / avg.max(1e-300);

    let mut constants = vec![
        ("c_emp".into(), c_emp),
        ("inf".into(), inf),
        ("avg".into(), avg),
        ("tail".into(), tail),
        ("forcing".into(), forcing),
    ];
    let mut series: Vec<SeriesPoint> = Vec::new();

    let pos_min = avg_nodes
        .iter()
        .map(|&i| u.values()[i])
        .fold(f64::INFINITY, f64::min);
    if pos_min > 0.0 {
        constants.push(("log_bmo".into(), log_bmo(u, a, &m12)));

        let gamma = n as f64 / (n as f64 - p * a.s_bar());
        let cellvol: f64 = u.delta().iter().product();
        let moment = |nodes: &[usize], m: f64| -> f64 {
            nodes
                .iter()
                .map(|&i| u.values()[i].powf(-m))
                .sum::<f64>()
                * cellvol
        };
        let mut m_j = 0.5f64;
        let mut ladder_max = 0.0f64;
        for j in 0..4 {
            let r_out = 0.25 * (1.0 + 2f64.powi(-j));
            let r_in = 0.25 * (1.0 + 2f64.powi(-j - 1));
            let lambda_j = r_out / r_in;
            let outer_nodes = rect_nodes(u, &fit(r_out)?);
            let inner_nodes = rect_nodes(u, &fit(r_in)?);
            let lhs = moment(&inner_nodes, gamma * m_j).powf(1.0 / gamma);
            let rhs = cutoff_scale_sum(a, lambda_j)
                * r_in.powf(-p * a.s_max())
                * moment(&outer_nodes, m_j);
            let ratio = lhs / rhs;
            series.push(SeriesPoint {
                label: "ladder".into(),
                x: m_j,
                y: ratio,
            });
            ladder_max = ladder_max.max(ratio);
            m_j *= gamma;
        }
        constants.push(("ladder_max".into(), ladder_max));
    }

    let pass = c_emp.is_finite() && avg > 0.0;
    Ok(InequalityReport {
        name: "weak-harnack".into(),
        samples: 1,
        worst_margin: c_emp,
        pass,
        witness: Vec::new(),
        constants,
        series,
    })
}

/// Worst node-mean oscillation of `log u` over metric rectangles
/// `M_rho(xi) inside bound` with `xi` a node and `rho` a resolvable dyadic
/// radius. The input must be strictly positive on `bound`.
fn log_bmo(u: &GridFunction, a: &crate::geometry::Anisotropy, bound: &Rect) -> f64 {
    let radii = resolvable_radii(u, a);
    let centers = rect_nodes(u, bound);
    let mut worst = 0.0f64;
    for &c in &centers {
        let pos = u.node_pos(&u.multi(c));
        for &rho in &radii {
            let fits = (0..a.n()).all(|k| {
                (pos[k] - bound.center()[k]).abs() + rho.powf(a.exponent(k))
                    <= bound.half_widths()[k] * (1.0 + 1e-12)
            });
            if !fits {
                continue;
            }
            let window = match a.rect(&pos, rho) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let nodes = rect_nodes(u, &window);
            if nodes.is_empty() {
                continue;
            }
            let mean: f64 =
                nodes.iter().map(|&i| u.values()[i].ln()).sum::<f64>() / nodes.len() as f64;
            let osc: f64 = nodes
                .iter()
                .map(|&i| (u.values()[i].ln() - mean).abs())
                .sum::<f64>()
                / nodes.len() as f64;
            worst = worst.max(osc);
        }
    }
    worst
}
