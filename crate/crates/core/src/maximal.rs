//! Hardy-Littlewood, sharp, and dyadic maximal functions over anisotropic
//! rectangles, with the level-set counts behind good-lambda measurements.
//!
//! Averages are node averages over a rectangle's intersection with the
//! grid, and level sets measure node count times cell volume throughout.
//! The radius sup runs over a finite dyadic set the grid resolves, so each
//! computed maximal function is dominated by its continuum counterpart.
//! The Hardy-Littlewood variant is uncentered: it takes the best average
//! over every candidate rectangle containing the node, the node-centered
//! metric rectangles plus the tree's rectangles when a tree is supplied,
//! which makes the dyadic maximal dominated pointwise by construction. The
//! sharp variant is centered, matching its role in predecessor bounds:
//! every tree rectangle of generation `g` sits inside the metric rectangle
//! of radius `2^{1-g}` around any of its points, at a volume cost of
//! exactly `2^{sum_k b_k} <= 2^{n/s0}`.
//!
//! Rectangle sums come from summed-area tables built once per sweep, so a
//! mean query costs `2^n` lookups; sharp deviations still walk their
//! rectangle because the subtracted mean depends on it. Sweeps are parallel
//! over nodes or rectangles and combine with `max`, which is
//! order-independent, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::dyadic::DyadicTree;
use crate::geometry::Anisotropy;
use crate::grid::{ExteriorRule, GridFunction};
use crate::index::{strides, unflatten};

/// Which maximal function to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaximalVariant {
    HardyLittlewood,
    Sharp,
    Dyadic,
}

/// All three maximal functions of one input, on the input's grid.
#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub u: GridFunction,
    pub mu: GridFunction,
    pub msharp: GridFunction,
    pub md: GridFunction,
    pub radii: Vec<f64>,
}

/// Summed-area tables of `u` and `|u|`, padded by one zero layer at the low
/// side: entry `idx` holds the sum over nodes strictly below `idx`.
struct Sat {
    sizes: Vec<usize>,
    gst: Vec<usize>,
    st: Vec<usize>,
    val: Vec<f64>,
    abs: Vec<f64>,
}

impl Sat {
    fn build(u: &GridFunction) -> Self {
        let sizes = u.sizes().to_vec();
        let n = sizes.len();
        let gst = strides(&sizes);
        let dims: Vec<usize> = sizes.iter().map(|&m| m + 1).collect();
        let st = strides(&dims);
        let total: usize = dims.iter().product();
        let mut val = vec![0.0f64; total];
        let mut abs = vec![0.0f64; total];
        let node_total: usize = sizes.iter().product();
        for flat in 0..node_total {
            let idx = unflatten(flat, &gst);
            let pf: usize = idx.iter().zip(&st).map(|(&i, &s)| (i + 1) * s).sum();
            let v = u.values()[flat];
            val[pf] = v;
            abs[pf] = v.abs();
        }
        for k in 0..n {
            // ascending flat order visits the axis-k predecessor first
            for flat in 0..total {
                let ik = (flat / st[k]) % dims[k];
                if ik >= 1 {
                    val[flat] += val[flat - st[k]];
                    abs[flat] += abs[flat - st[k]];
                }
            }
        }
        Self {
            sizes,
            gst,
            st,
            val,
            abs,
        }
    }

    /// `(sum u, sum |u|)` over the inclusive index box.
    fn box_sums(&self, lo: &[usize], hi: &[usize]) -> (f64, f64) {
        let n = self.sizes.len();
        let mut sv = 0.0;
        let mut sa = 0.0;
        for mask in 0..(1usize << n) {
            let mut pf = 0usize;
            let mut sign = 1.0;
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    pf += lo[k] * self.st[k];
                    sign = -sign;
                } else {
                    pf += (hi[k] + 1) * self.st[k];
                }
            }
            sv += sign * self.val[pf];
            sa += sign * self.abs[pf];
        }
        (sv, sa)
    }
}

/// Inclusive per-axis node index range.
#[derive(Debug, Clone)]
struct IndexBox {
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl IndexBox {
    fn count(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h - l + 1)
            .product()
    }
}

fn for_each_flat(bx: &IndexBox, gst: &[usize], mut f: impl FnMut(usize)) {
    let n = bx.lo.len();
    let mut idx = bx.lo.clone();
    let mut flat: usize = idx.iter().zip(gst).map(|(&i, &s)| i * s).sum();
    loop {
        f(flat);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if idx[k] < bx.hi[k] {
                idx[k] += 1;
                flat += gst[k];
                break;
            }
            flat -= (idx[k] - bx.lo[k]) * gst[k];
            idx[k] = bx.lo[k];
        }
    }
}

/// Per-axis index halfwidths of the metric rectangle of radius `rho`:
/// nodes at offset `m` lie inside exactly when `|m| delta_k <= rho^{b_k}`.
fn index_halfwidths(a: &Anisotropy, u: &GridFunction, rho: f64) -> Vec<usize> {
    (0..a.n())
        .map(|k| {
            let w = rho.powf(a.exponent(k));
            ((w / u.delta()[k]) + 1e-9).floor().min(1e9) as usize
        })
        .collect()
}

fn centered_box(idx: &[usize], sizes: &[usize], hwn: &[usize]) -> IndexBox {
    let lo = idx
        .iter()
        .zip(hwn)
        .map(|(&i, &h)| i.saturating_sub(h))
        .collect();
    let hi = idx
        .iter()
        .zip(hwn)
        .zip(sizes)
        .map(|((&i, &h), &m)| (i + h).min(m - 1))
        .collect();
    IndexBox { lo, hi }
}

/// Grid indices inside the half-open rectangle `[lo, hi)`, or None when no
/// node falls inside. Endpoint membership carries a relative slack of
/// `1e-9` cells, consistent with the tree's own containment slack.
fn float_box(u: &GridFunction, lo: &[f64], hi: &[f64]) -> Option<IndexBox> {
    let n = lo.len();
    let mut bl = Vec::with_capacity(n);
    let mut bh = Vec::with_capacity(n);
    for k in 0..n {
        let x0 = u.bx().center()[k] - u.bx().half_widths()[k];
        let d = u.delta()[k];
        let eps = 1e-9 * d;
        let il = ((lo[k] - x0 - eps) / d).ceil().max(0.0);
        let ih = (((hi[k] - x0 - eps) / d).ceil() - 1.0).min(u.sizes()[k] as f64 - 1.0);
        if ih < il {
            return None;
        }
        bl.push(il as usize);
        bh.push(ih as usize);
    }
    Some(IndexBox { lo: bl, hi: bh })
}

/// Elementwise max over per-rectangle scatters; `max` commutes, so the
/// parallel reduction is deterministic.
fn scatter_max(total: usize, items: &[(IndexBox, f64)], gst: &[usize]) -> Vec<f64> {
    items
        .par_iter()
        .fold(
            || vec![0.0f64; total],
            |mut acc, (bx, v)| {
                for_each_flat(bx, gst, |flat| {
                    if acc[flat] < *v {
                        acc[flat] = *v;
                    }
                });
                acc
            },
        )
        .reduce(
            || vec![0.0f64; total],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if *x < y {
                        *x = y;
                    }
                }
                a
            },
        )
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::invalid("radii", "empty radius set"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid("radii", "radii must be positive and finite"));
    }
    Ok(())
}

fn tree_items(u: &GridFunction, sat: &Sat, tree: &DyadicTree) -> Vec<(IndexBox, f64)> {
    tree.rects()
        .iter()
        .filter_map(|r| {
            let bx = float_box(u, &r.lo, &r.hi)?;
            let (_, sa) = sat.box_sums(&bx.lo, &bx.hi);
            let cnt = bx.count() as f64;
            Some((bx, sa / cnt))
        })
        .collect()
}

fn compute_mu(
    u: &GridFunction,
    a: &Anisotropy,
    sat: &Sat,
    radii: &[f64],
    tree: Option<&DyadicTree>,
) -> Vec<f64> {
    let total = u.values().len();
    let mut items: Vec<(IndexBox, f64)> = Vec::new();
    for &rho in radii {
        let hwn = index_halfwidths(a, u, rho);
        for flat in 0..total {
            let idx = unflatten(flat, &sat.gst);
            let bx = centered_box(&idx, u.sizes(), &hwn);
            let (_, sa) = sat.box_sums(&bx.lo, &bx.hi);
            let cnt = bx.count() as f64;
            items.push((bx, sa / cnt));
        }
    }
    if let Some(t) = tree {
        items.extend(tree_items(u, sat, t));
    }
    scatter_max(total, &items, &sat.gst)
}

fn compute_msharp(u: &GridFunction, a: &Anisotropy, sat: &Sat, radii: &[f64]) -> Vec<f64> {
    let total = u.values().len();
    let hwns: Vec<Vec<usize>> = radii.iter().map(|&r| index_halfwidths(a, u, r)).collect();
    let vals = u.values();
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unflatten(flat, &sat.gst);
            let mut best = 0.0f64;
            for hwn in &hwns {
                let bx = centered_box(&idx, &sat.sizes, hwn);
                let cnt = bx.count() as f64;
                let (sv, _) = sat.box_sums(&bx.lo, &bx.hi);
                let mean = sv / cnt;
                let mut dev = 0.0;
                for_each_flat(&bx, &sat.gst, |g| dev += (vals[g] - mean).abs());
                best = best.max(dev / cnt);
            }
            best
        })
        .collect()
}

fn compute_md(u: &GridFunction, sat: &Sat, tree: &DyadicTree) -> Vec<f64> {
    let items = tree_items(u, sat, tree);
    scatter_max(u.values().len(), &items, &sat.gst)
}

fn check_dims(u: &GridFunction, a: &Anisotropy) -> Result<()> {
    if u.sizes().len() != a.n() {
        return Err(Error::Incompatible(
            "grid dimension does not match anisotropy".into(),
        ));
    }
    Ok(())
}

/// One maximal function of `u` as a grid function (zero exterior attached:
/// the outputs are grid-local diagnostics). The dyadic variant ignores
/// `radii` and requires a tree; the others require a nonempty radius set,
/// and the Hardy-Littlewood candidate set also takes the tree's rectangles
/// when one is supplied. Nodes outside every candidate rectangle (possible
/// only for the dyadic variant) get 0.
pub fn maximal(
    u: &GridFunction,
    a: &Anisotropy,
    variant: MaximalVariant,
    radii: &[f64],
    tree: Option<&DyadicTree>,
) -> Result<GridFunction> {
    check_dims(u, a)?;
    if let Some(t) = tree {
        if t.aniso().n() != a.n() {
            return Err(Error::Incompatible(
                "tree dimension does not match anisotropy".into(),
            ));
        }
    }
    let sat = Sat::build(u);
    let vals = match variant {
        MaximalVariant::HardyLittlewood => {
            validate_radii(radii)?;
            compute_mu(u, a, &sat, radii, tree)
        }
        MaximalVariant::Sharp => {
            validate_radii(radii)?;
            compute_msharp(u, a, &sat, radii)
        }
        MaximalVariant::Dyadic => {
            let t = tree.ok_or_else(|| {
                Error::invalid("tree", "dyadic variant needs a rectangle tree")
            })?;
            compute_md(u, &sat, t)
        }
    };
    GridFunction::new(u.bx().clone(), u.sizes(), vals, ExteriorRule::Zero)
}

/// All three maximal functions over one summed-area table. The tree's
/// rectangles join the Hardy-Littlewood candidates, so `md <= mu` holds
/// nodewise by construction.
pub fn maximal_all(
    u: &GridFunction,
    a: &Anisotropy,
    radii: &[f64],
    tree: &DyadicTree,
) -> Result<MaximalResult> {
    check_dims(u, a)?;
    if tree.aniso().n() != a.n() {
        return Err(Error::Incompatible(
            "tree dimension does not match anisotropy".into(),
        ));
    }
    validate_radii(radii)?;
    let sat = Sat::build(u);
    let mu = compute_mu(u, a, &sat, radii, Some(tree));
    let msharp = compute_msharp(u, a, &sat, radii);
    let md = compute_md(u, &sat, tree);
    let make = |v: Vec<f64>| GridFunction::new(u.bx().clone(), u.sizes(), v, ExteriorRule::Zero);
    Ok(MaximalResult {
        u: u.clone(),
        mu: make(mu)?,
        msharp: make(msharp)?,
        md: make(md)?,
        radii: radii.to_vec(),
    })
}

/// Dyadic radii the grid resolves: descending powers of two, from the first
/// that covers the whole box seen from any node down to the last whose
/// rectangle half-widths stay at or above one cell on every axis.
pub fn resolvable_radii(u: &GridFunction, a: &Anisotropy) -> Vec<f64> {
    let r = u.bx().radius();
    let e_top = (2.0 * r).log2().ceil() as i32;
    let mut e_min = i32::MIN;
    for k in 0..a.n() {
        let e = (u.delta()[k].log2() / a.exponent(k)).ceil() as i32;
        e_min = e_min.max(e);
    }
    let e_min = e_min.min(e_top);
    (e_min..=e_top).rev().map(|e| 2f64.powi(e)).collect()
}

fn faces_vanish(u: &GridFunction) -> bool {
    let gst = strides(u.sizes());
    u.values().iter().enumerate().all(|(flat, &v)| {
        let idx = unflatten(flat, &gst);
        let on_face = idx
            .iter()
            .zip(u.sizes())
            .any(|(&i, &m)| i == 0 || i + 1 == m);
        !on_face || v == 0.0
    })
}

/// Level-set pair of the good-lambda estimate:
/// `lhs = |{M_d u > 2 lambda, M# u <= gamma lambda}|` and
/// `rhs = |{M_d u > lambda}|`, both as node count times cell volume.
/// The input must vanish on the grid's boundary faces (compact support on
/// the grid), so the level sets are honest finite measures.
pub fn good_lambda(res: &MaximalResult, lambda: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("need lambda > 0, got {lambda}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("need gamma > 0, got {gamma}")));
    }
    if !faces_vanish(&res.u) {
        return Err(Error::invalid(
            "u",
            "good-lambda needs compact support: boundary face values must vanish",
        ));
    }
    let cellvol: f64 = res.u.delta().iter().product();
    let mut lhs = 0usize;
    let mut rhs = 0usize;
    for (i, &md) in res.md.values().iter().enumerate() {
        if md > lambda {
            rhs += 1;
        }
        if md > 2.0 * lambda && res.msharp.values()[i] <= gamma * lambda {
            lhs += 1;
        }
    }
    Ok((lhs as f64 * cellvol, rhs as f64 * cellvol))
}
