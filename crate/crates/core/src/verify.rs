//! Empirical verification of the inequalities that govern the operator.
//!
//! The checks fall into three groups. Sampled algebraic bounds carry explicit
//! constants and must hold pointwise up to floating-point slack. Functional
//! inequalities have existential constants, so the checks report empirical
//! constants and the interesting question is boundedness, in particular
//! robustness: the constants must not degenerate as the orders approach 1
//! with the lower bound `s0` fixed. The remaining checks exercise the chain
//! from energy estimates to oscillation decay on solved problems, and the
//! local limit of the operator along equal orders.
//!
//! Every check produces an [`InequalityReport`] with the worst margin exactly
//! as computed, a replayable witness, the constants in play, and an optional
//! series for plotting. Checks never panic on a violated inequality; callers
//! decide what a failure means.

pub mod algebraic;
pub mod convergence;
pub mod functional;
pub mod harnack;
pub mod hoelder;
pub mod loglemma;
pub mod testfns;

pub use algebraic::{check_algebraic, lemma_constants, AlgebraicLemma};
pub use convergence::{convergence_to_local, AxisProfile};
pub use functional::{estimate_functional_constant, FunctionalKind};
pub use harnack::{weak_harnack, HarnackInput};
pub use hoelder::hoelder_decay;
pub use loglemma::{check_log_lemma, LogLemmaInput};

use crate::geometry::Rect;
use crate::grid::GridFunction;
use crate::num::fmt17;

/// One point of a report series; `label` keys the curve it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Outcome of one empirical check. The margin convention depends on the
/// check: sampled `lhs <= rhs` bounds record the minimum over samples of
/// the relative gap `(rhs - lhs) / scale`, constant estimates record the
/// empirical constant itself. A failed check keeps the witness inputs that
/// produced the worst margin so the sample can be replayed exactly.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub name: String,
    pub samples: u64,
    pub worst_margin: f64,
    pub pass: bool,
    pub witness: Vec<(String, f64)>,
    pub constants: Vec<(String, f64)>,
    pub series: Vec<SeriesPoint>,
}

impl InequalityReport {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }

    /// CSV rows: a version header, then one row per field, witness entry,
    /// constant, and series point, in that order. CRLF line ends, 17
    /// significant digits.
    pub fn csv(&self) -> String {
        let mut out = String::from("fracp-report,v1\r\n");
        out.push_str(&format!("name,{}\r\n", self.name));
        out.push_str(&format!("samples,{}\r\n", self.samples));
        out.push_str(&format!("worst_margin,{}\r\n", fmt17(self.worst_margin)));
        out.push_str(&format!("pass,{}\r\n", self.pass));
        for (k, v) in &self.witness {
            out.push_str(&format!("witness,{k},{}\r\n", fmt17(*v)));
        }
        for (k, v) in &self.constants {
            out.push_str(&format!("constant,{k},{}\r\n", fmt17(*v)));
        }
        for pt in &self.series {
            out.push_str(&format!(
                "series,{},{},{}\r\n",
                pt.label,
                fmt17(pt.x),
                fmt17(pt.y)
            ));
        }
        out
    }
}

/// Flat indices of the nodes lying in the closed rectangle, with the same
/// relative face tolerance the energy form uses.
pub fn rect_nodes(u: &GridFunction, rect: &Rect) -> Vec<usize> {
    let n = u.sizes().len();
    (0..u.len())
        .filter(|&flat| {
            let idx = u.multi(flat);
            (0..n).all(|k| {
                let tol = 1e-12 * (1.0 + rect.half_widths()[k]);
                (u.axis_pos(k, idx[k]) - rect.center()[k]).abs() <= rect.half_widths()[k] + tol
            })
        })
        .collect()
}

/// Discrete `L^q` norm over the given nodes: cell-volume weighted sums.
pub fn lp_norm_over(u: &GridFunction, nodes: &[usize], q: f64) -> f64 {
    let cellvol: f64 = u.delta().iter().product();
    let sum: f64 = nodes
        .iter()
        .map(|&i| u.values()[i].abs().powf(q))
        .sum();
    (sum * cellvol).powf(1.0 / q)
}

/// Node average over the given nodes.
pub fn mean_over(u: &GridFunction, nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    nodes.iter().map(|&i| u.values()[i]).sum::<f64>() / nodes.len() as f64
}

/// Continuum volume of the metric rectangle of radius `r`:
/// `2^n r^{n s_max / s_bar}`.
pub fn rect_volume(a: &crate::geometry::Anisotropy, r: f64) -> f64 {
    let n = a.n() as f64;
    2f64.powf(n) * r.powf(n * a.s_max() / a.s_bar())
}

/// The cut-off scale sum `sum_k (lambda^{s_max/s_k} - 1)^{-p s_k}` that
/// accompanies every localization step.
pub fn cutoff_scale_sum(a: &crate::geometry::Anisotropy, lambda: f64) -> f64 {
    (0..a.n())
        .map(|k| (lambda.powf(a.exponent(k)) - 1.0).powf(-a.p() * a.s()[k]))
        .sum()
}

/// Log-uniform sample in `[lo, hi]`, `0 < lo < hi`.
pub(crate) fn log_uniform<R: rand::Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Anisotropy;
    use crate::grid::ExteriorRule;

    #[test]
    fn report_csv_lists_every_field_once() {
        let rep = InequalityReport {
            name: "demo".into(),
            samples: 3,
            worst_margin: 0.5,
            pass: true,
            witness: vec![("a".into(), 1.0)],
            constants: vec![("c1".into(), 2.0), ("c2".into(), 4.0)],
            series: vec![SeriesPoint {
                label: "curve".into(),
                x: 0.0,
                y: 1.0,
            }],
        };
        let csv = rep.csv();
        assert!(csv.starts_with("fracp-report,v1\r\n"));
        assert_eq!(csv.matches("witness,").count(), 1);
        assert_eq!(csv.matches("constant,").count(), 2);
        assert_eq!(csv.matches("series,").count(), 1);
        assert_eq!(rep.constant("c2"), Some(4.0));
        assert_eq!(rep.constant("missing"), None);
    }

    #[test]
    fn node_selections_and_norms_are_consistent() {
        let a = Anisotropy::new(2.0, vec![0.5, 0.8], 0.4, 1.0).unwrap();
        let bx = GridFunction::default_box(&a);
        let u = GridFunction::from_fn(bx, &[9, 9], ExteriorRule::Zero, |x| x[0] + x[1]).unwrap();
        let all = rect_nodes(&u, u.bx());
        assert_eq!(all.len(), 81);
        let inner = a.rect(&[0.0, 0.0], 1.0).unwrap();
        let sel = rect_nodes(&u, &inner);
        assert!(!sel.is_empty() && sel.len() < 81);
        for &i in &sel {
            let pos = u.node_pos(&u.multi(i));
            assert!(inner.contains(&pos) || a.metric(&pos, &[0.0, 0.0]).unwrap() <= 1.0 + 1e-9);
        }
        // L^1 norm of a constant over the whole grid is value times volume
        let c = GridFunction::constant(u.bx().clone(), &[9, 9], 0.5, ExteriorRule::Zero).unwrap();
        let vol: f64 = c
            .delta()
            .iter()
            .product::<f64>()
            * 81.0;
        let got = lp_norm_over(&c, &all, 1.0);
        assert!((got - 0.5 * vol).abs() <= 1e-12 * vol);
        assert_eq!(mean_over(&c, &all), 0.5);
    }
}
