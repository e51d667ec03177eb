//! Anisotropic geometry induced by per-axis differentiability orders.
//!
//! An order vector `s = (s_1, ..., s_n)` with `s_k` in `(0,1)` induces the
//! metric `d(x,y) = sup_k |x_k - y_k|^{s_k / s_max}`. Its balls are open
//! rectangles `M_r(x)` with half-width `r^{s_max/s_k}` along axis `k`; the
//! exponent map `t -> t^{s_k/s_max}` is subadditive, so `d` is a genuine
//! metric and the triangle inequality holds exactly. Rectangle volume is
//! `2^n r^{n s_max / s_bar}` with `s_bar` the harmonic mean of the orders,
//! so the measure is doubling with ratio `2^{n s_max/s_bar} <= 2^{n/s_0}`.

pub mod dyadic;

use crate::error::{Error, Result};

/// Order vector and the exponents derived from it.
///
/// `p` is the integrability exponent of the operator (`p > 1`), `s0` a lower
/// bound on the orders used for uniform constants, and `lambda >= 1` the
/// admissibility constant of the kernel family under study.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy {
    n: usize,
    p: f64,
    s: Vec<f64>,
    s0: f64,
    lambda: f64,
    s_max: f64,
    s_bar: f64,
}

impl Anisotropy {
    pub fn new(p: f64, s: Vec<f64>, s0: f64, lambda: f64) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("s", "order vector must be non-empty"));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::invalid("p", format!("need p > 1, got {p}")));
        }
        for (k, &sk) in s.iter().enumerate() {
            if !sk.is_finite() || sk <= 0.0 || sk >= 1.0 {
                return Err(Error::invalid(
                    "s",
                    format!("order s_{k} = {sk} outside (0,1)"),
                ));
            }
        }
        let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if !s0.is_finite() || s0 <= 0.0 || s0 > s_min {
            return Err(Error::invalid(
                "s0",
                format!("need 0 < s0 <= min_k s_k = {s_min}, got {s0}"),
            ));
        }
        if !lambda.is_finite() || lambda < 1.0 {
            return Err(Error::invalid("lambda", format!("need lambda >= 1, got {lambda}")));
        }
        let n = s.len();
        let s_max = s.iter().cloned().fold(0.0, f64::max);
        let s_bar = n as f64 / s.iter().map(|&sk| 1.0 / sk).sum::<f64>();
        Ok(Self {
            n,
            p,
            s,
            s0,
            lambda,
            s_max,
            s_bar,
        })
    }

    /// Equal orders on every axis; `s0 = s` and the natural admissibility
    /// constant `max(1, 2/p)` of the axis family.
    pub fn equal(n: usize, p: f64, s: f64) -> Result<Self> {
        Self::new(p, vec![s; n], s, (2.0 / p).max(1.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn s(&self) -> &[f64] {
        &self.s
    }
    pub fn s0(&self) -> f64 {
        self.s0
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// Largest order `s_max = max_k s_k`.
    pub fn s_max(&self) -> f64 {
        self.s_max
    }
    /// Harmonic mean `s_bar = (1/n sum_k 1/s_k)^{-1}`.
    pub fn s_bar(&self) -> f64 {
        self.s_bar
    }

    /// Axis exponent `s_max / s_k`: the half-width of `M_r` along axis `k`
    /// is `r^{exponent(k)}`.
    pub fn exponent(&self, k: usize) -> f64 {
        self.s_max / self.s[k]
    }

    /// Homogeneous dimension exponent: `|M_r| = 2^n r^{dimension()}`.
    pub fn dimension(&self) -> f64 {
        self.n as f64 * self.s_max / self.s_bar
    }

    /// Critical exponent `n p / (n - p s_bar)`; `None` when `p >= n/s_bar`.
    pub fn p_star(&self) -> Option<f64> {
        let n = self.n as f64;
        if self.p * self.s_bar >= n {
            None
        } else {
            Some(n * self.p / (n - self.p * self.s_bar))
        }
    }

    /// Metric `d(x,y) = sup_k |x_k - y_k|^{s_k/s_max}`.
    pub fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let mut d: f64 = 0.0;
        for k in 0..self.n {
            d = d.max((x[k] - y[k]).abs().powf(self.s[k] / self.s_max));
        }
        Ok(d)
    }

    /// Metric ball `M_r(center)`: open rectangle with half-width
    /// `r^{s_max/s_k}` along axis `k`.
    pub fn rect(&self, center: &[f64], r: f64) -> Result<Rect> {
        self.check_point(center)?;
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid("r", format!("need r > 0, got {r}")));
        }
        let half_widths = (0..self.n).map(|k| r.powf(self.exponent(k))).collect();
        Ok(Rect {
            center: center.to_vec(),
            r,
            half_widths,
        })
    }

    /// Axis slab `{ y : |x_k - y_k| < r^{s_max/s_k} }`; the rectangle `M_r(x)`
    /// is the intersection of the `n` slabs.
    pub fn slab(&self, center: &[f64], r: f64, axis: usize) -> Result<Slab> {
        self.check_point(center)?;
        self.check_axis(axis)?;
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid("r", format!("need r > 0, got {r}")));
        }
        Ok(Slab {
            center_k: center[axis],
            half_width: r.powf(self.exponent(axis)),
            axis,
        })
    }

    /// Diagonal scaling `x_k -> lambda^{s_max/s_k} x_k`, which maps
    /// `M_rho(0)` onto `M_{lambda rho}(0)`.
    pub fn scaling(&self, lambda: f64) -> Result<Scaling> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::invalid("lambda", format!("need lambda > 0, got {lambda}")));
        }
        Ok(Scaling {
            factors: (0..self.n).map(|k| lambda.powf(self.exponent(k))).collect(),
        })
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Incompatible(format!(
                "point dimension {} does not match n = {}",
                x.len(),
                self.n
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point", "non-finite component"));
        }
        Ok(())
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.n {
            return Err(Error::invalid("axis", format!("axis {axis} out of range")));
        }
        Ok(())
    }
}

/// Open metric rectangle `M_r(center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    center: Vec<f64>,
    r: f64,
    half_widths: Vec<f64>,
}

impl Rect {
    /// Rebuilds a rectangle from stored parts (deserialization); validates
    /// shape but not the tie between radius and half-widths.
    pub(crate) fn from_parts(center: Vec<f64>, r: f64, half_widths: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != half_widths.len() {
            return Err(Error::invalid("center", "center/half-width length mismatch"));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid("r", format!("need r > 0, got {r}")));
        }
        if center.iter().any(|c| !c.is_finite())
            || half_widths.iter().any(|w| !w.is_finite() || *w <= 0.0)
        {
            return Err(Error::invalid("rect", "non-finite center or half-width"));
        }
        Ok(Rect {
            center,
            r,
            half_widths,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.r
    }
    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.center
            .iter()
            .zip(&self.half_widths)
            .zip(y)
            .all(|((&c, &w), &yk)| (yk - c).abs() < w)
    }

    /// Lebesgue volume `prod_k 2 w_k = 2^n r^{n s_max/s_bar}`.
    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|w| 2.0 * w).product()
    }
}

/// Axis-aligned slab of finite extent along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    center_k: f64,
    half_width: f64,
    axis: usize,
}

impl Slab {
    pub fn axis(&self) -> usize {
        self.axis
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        (y[self.axis] - self.center_k).abs() < self.half_width
    }
}

/// Diagonal scaling map; see [`Anisotropy::scaling`].
#[derive(Debug, Clone)]
pub struct Scaling {
    factors: Vec<f64>,
}

impl Scaling {
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.factors).map(|(&xi, &f)| xi * f).collect()
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.factors).map(|(&xi, &f)| xi / f).collect()
    }
}
