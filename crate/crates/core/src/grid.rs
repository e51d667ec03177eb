//! Grid functions with exterior data, the discrete energy form, operator
//! application, tail terms, and admissible cut-off functions.
//!
//! Nodes are vertex centered: axis `k` carries `sizes[k]` nodes spanning the
//! box face to face, so `delta[k] = 2 w_k / (sizes[k] - 1)`. Each node owns
//! the cell of half-width `delta/2` around it, trimmed at the faces of the
//! available data, so the cells tile the data region exactly and closed-form
//! tails can start at its boundary without gap or overlap.

use crate::error::{Error, Result};
use crate::geometry::{Anisotropy, Rect};
use crate::kernel::{axes_mass_beyond, cell_weight, KernelFamily};
use crate::num::{fmt17, j_p};

/// Values of a grid function outside its box.
#[derive(Debug, Clone, PartialEq)]
pub enum ExteriorRule {
    /// Identically zero outside the box.
    Zero,
    /// A constant value outside the box.
    Constant(f64),
    /// Values on a collar of `pad` extra nodes per side; `padded` is row
    /// major over the enlarged grid and must agree with the interior values
    /// on the inner block. Beyond the collar the function is unknown and
    /// tail sums truncate at the collar face; the neglected mass along axis
    /// `k` is at most `axes_mass_beyond(reach)` per side times the largest
    /// neglected integrand value.
    Tabulated { pad: usize, padded: Vec<f64> },
}

/// A function sampled on a tensor grid over a box, plus an exterior rule.
///
/// Values are stored row major with the last axis fastest. Axis-line
/// neighbors of a node are again nodes, which is what the axis kernels need.
#[derive(Debug, Clone)]
pub struct GridFunction {
    bx: Rect,
    sizes: Vec<usize>,
    delta: Vec<f64>,
    values: Vec<f64>,
    rule: ExteriorRule,
    st: Vec<usize>,
    /// Strides of the padded grid; empty unless the rule tabulates a collar.
    pst: Vec<usize>,
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let n = sizes.len();
    let mut st = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        st[k] = st[k + 1] * sizes[k + 1];
    }
    st
}

impl GridFunction {
    pub fn new(bx: Rect, sizes: &[usize], values: Vec<f64>, rule: ExteriorRule) -> Result<Self> {
        let n = bx.center().len();
        if sizes.len() != n {
            return Err(Error::invalid("sizes", "one node count per axis"));
        }
        if sizes.iter().any(|&m| m < 2) {
            return Err(Error::invalid("sizes", "need at least 2 nodes per axis"));
        }
        let total: usize = sizes.iter().product();
        if values.len() != total {
            return Err(Error::invalid(
                "values",
                format!("expected {total} values, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "non-finite value"));
        }
        match &rule {
            ExteriorRule::Zero => {}
            ExteriorRule::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::invalid("rule", "non-finite exterior constant"));
                }
            }
            ExteriorRule::Tabulated { pad, padded } => {
                if *pad == 0 {
                    return Err(Error::invalid("rule", "tabulated collar needs pad >= 1"));
                }
                let ptotal: usize = sizes.iter().map(|&m| m + 2 * pad).product();
                if padded.len() != ptotal {
                    return Err(Error::invalid(
                        "rule",
                        format!("expected {ptotal} padded values, got {}", padded.len()),
                    ));
                }
                if padded.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("rule", "non-finite padded value"));
                }
                let psizes: Vec<usize> = sizes.iter().map(|&m| m + 2 * pad).collect();
                let pst = strides(&psizes);
                let st = strides(sizes);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut pflat = 0usize;
                    for k in 0..n {
                        let ik = rem / st[k];
                        rem %= st[k];
                        pflat += (ik + pad) * pst[k];
                    }
                    if padded[pflat] != values[flat] {
                        return Err(Error::invalid(
                            "rule",
                            "padded values disagree with interior values",
                        ));
                    }
                }
            }
        }
        let delta = (0..n)
            .map(|k| 2.0 * bx.half_widths()[k] / (sizes[k] - 1) as f64)
            .collect();
        let st = strides(sizes);
        let pst = match &rule {
            ExteriorRule::Tabulated { pad, .. } => {
                let psizes: Vec<usize> = sizes.iter().map(|&m| m + 2 * pad).collect();
                strides(&psizes)
            }
            _ => Vec::new(),
        };
        Ok(Self {
            bx,
            sizes: sizes.to_vec(),
            delta,
            values,
            rule,
            st,
            pst,
        })
    }

    /// Samples `f` at the nodes. `rule` must be `Zero` or `Constant`; collars
    /// are built with [`GridFunction::from_fn_padded`].
    pub fn from_fn(
        bx: Rect,
        sizes: &[usize],
        rule: ExteriorRule,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        if matches!(rule, ExteriorRule::Tabulated { .. }) {
            return Err(Error::invalid("rule", "use from_fn_padded for collars"));
        }
        let values = sample(&bx, sizes, 0, &f);
        Self::new(bx, sizes, values, rule)
    }

    /// Samples `f` at the nodes and on a collar of `pad` nodes per side.
    pub fn from_fn_padded(
        bx: Rect,
        sizes: &[usize],
        pad: usize,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let values = sample(&bx, sizes, 0, &f);
        let padded = sample(&bx, sizes, pad, &f);
        Self::new(bx, sizes, values, ExteriorRule::Tabulated { pad, padded })
    }

    pub fn constant(bx: Rect, sizes: &[usize], value: f64, rule: ExteriorRule) -> Result<Self> {
        let total: usize = sizes.iter().product();
        Self::new(bx, sizes, vec![value; total], rule)
    }

    /// The default computational box `M_2(0)`.
    pub fn default_box(a: &Anisotropy) -> Rect {
        a.rect(&vec![0.0; a.n()], 2.0).expect("origin box")
    }

    pub fn bx(&self) -> &Rect {
        &self.bx
    }
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn rule(&self) -> &ExteriorRule {
        &self.rule
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Overwrites the value at a node; collar data is left untouched, so the
    /// caller must not mutate grids whose rule tabulates the same node.
    pub fn set_value(&mut self, flat: usize, v: f64) {
        self.values[flat] = v;
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.st).map(|(&i, &s)| i * s).sum()
    }

    pub fn multi(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        self.st
            .iter()
            .map(|&s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    pub fn axis_pos(&self, k: usize, ik: usize) -> f64 {
        self.bx.center()[k] - self.bx.half_widths()[k] + ik as f64 * self.delta[k]
    }

    pub fn node_pos(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.sizes.len())
            .map(|k| self.axis_pos(k, idx[k]))
            .collect()
    }

    /// True when the node is strictly inside the box along every axis.
    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter()
            .zip(&self.sizes)
            .all(|(&i, &m)| i >= 1 && i + 2 <= m)
    }

    fn same_layout(&self, other: &GridFunction) -> bool {
        self.sizes == other.sizes
            && self.bx.center() == other.bx.center()
            && self.bx.half_widths() == other.bx.half_widths()
    }

    /// Node count to the data face from node `idx` along axis `k`: the box
    /// face for `Zero`/`Constant`, the collar face for `Tabulated`.
    fn data_extent(&self, idx: &[usize], k: usize) -> (usize, usize) {
        let pad = match &self.rule {
            ExteriorRule::Tabulated { pad, .. } => *pad,
            _ => 0,
        };
        (idx[k] + pad, self.sizes[k] - 1 - idx[k] + pad)
    }

    /// Value at node `idx + m e_k`, drawing on the box or the collar.
    /// The offset must stay within the data extent.
    fn offset_value(&self, idx: &[usize], k: usize, m: i64) -> f64 {
        let t = idx[k] as i64 + m;
        if t >= 0 && (t as usize) < self.sizes[k] {
            let base: usize = idx.iter().zip(&self.st).map(|(&i, &s)| i * s).sum();
            return self.values[(base as i64 + m * self.st[k] as i64) as usize];
        }
        match &self.rule {
            ExteriorRule::Zero => 0.0,
            ExteriorRule::Constant(c) => *c,
            ExteriorRule::Tabulated { pad, padded } => {
                let mut pflat = 0i64;
                for j in 0..self.sizes.len() {
                    pflat += (idx[j] + pad) as i64 * self.pst[j] as i64;
                }
                padded[(pflat + m * self.pst[k] as i64) as usize]
            }
        }
    }

    /// Serializes to CSV: a header with axis sizes, spacing, box geometry,
    /// and the exterior rule, then node values in row-major order (collar
    /// values appended for tabulated rules). Floats are printed with 17
    /// significant digits so the round trip is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|&x| fmt17(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str("fracp-grid,v1\r\n");
        out.push_str(&format!(
            "sizes,{}\r\n",
            self.sizes
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        out.push_str(&format!("delta,{}\r\n", join(&self.delta)));
        out.push_str(&format!("center,{}\r\n", join(self.bx.center())));
        out.push_str(&format!("radius,{}\r\n", fmt17(self.bx.radius())));
        out.push_str(&format!("halfwidths,{}\r\n", join(self.bx.half_widths())));
        match &self.rule {
            ExteriorRule::Zero => out.push_str("rule,zero\r\n"),
            ExteriorRule::Constant(c) => out.push_str(&format!("rule,constant,{}\r\n", fmt17(*c))),
            ExteriorRule::Tabulated { pad, .. } => {
                out.push_str(&format!("rule,tabulated,{pad}\r\n"))
            }
        }
        out.push_str(&format!("values,{}\r\n", self.values.len()));
        for v in &self.values {
            out.push_str(&fmt17(*v));
            out.push_str("\r\n");
        }
        if let ExteriorRule::Tabulated { padded, .. } = &self.rule {
            out.push_str(&format!("padded,{}\r\n", padded.len()));
            for v in padded {
                out.push_str(&fmt17(*v));
                out.push_str("\r\n");
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim_end);
        let bad = |what: &str| Error::invalid("csv", format!("malformed grid csv: {what}"));
        let mut next = |what: &'static str| lines.next().ok_or_else(|| bad(what));
        let header = next("magic")?;
        if header != "fracp-grid,v1" {
            return Err(bad("magic line"));
        }
        let parse_floats = |line: &str, tag: &str| -> Result<Vec<f64>> {
            let mut it = line.split(',');
            if it.next() != Some(tag) {
                return Err(bad(tag));
            }
            it.map(|t| t.parse::<f64>().map_err(|_| bad(tag))).collect()
        };
        let sizes_line = next("sizes")?;
        let mut it = sizes_line.split(',');
        if it.next() != Some("sizes") {
            return Err(bad("sizes"));
        }
        let sizes: Vec<usize> = it
            .map(|t| t.parse::<usize>().map_err(|_| bad("sizes")))
            .collect::<Result<_>>()?;
        let _delta = parse_floats(next("delta")?, "delta")?;
        let center = parse_floats(next("center")?, "center")?;
        let radius = parse_floats(next("radius")?, "radius")?;
        let halfw = parse_floats(next("halfwidths")?, "halfwidths")?;
        if radius.len() != 1 {
            return Err(bad("radius"));
        }
        let bx = Rect::from_parts(center, radius[0], halfw)?;
        let rule_line = next("rule")?;
        let parts: Vec<&str> = rule_line.split(',').collect();
        let read_block = |lines: &mut dyn Iterator<Item = &str>,
                          tag: &str|
         -> Result<Vec<f64>> {
            let head = lines.next().ok_or_else(|| bad(tag))?;
            let mut it = head.split(',');
            if it.next() != Some(tag) {
                return Err(bad(tag));
            }
            let count: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(tag))?;
            (0..count)
                .map(|_| {
                    lines
                        .next()
                        .and_then(|l| l.parse::<f64>().ok())
                        .ok_or_else(|| bad(tag))
                })
                .collect()
        };
        match parts.as_slice() {
            ["rule", "zero"] => {
                let values = read_block(&mut lines, "values")?;
                Self::new(bx, &sizes, values, ExteriorRule::Zero)
            }
            ["rule", "constant", c] => {
                let c: f64 = c.parse().map_err(|_| bad("rule constant"))?;
                let values = read_block(&mut lines, "values")?;
                Self::new(bx, &sizes, values, ExteriorRule::Constant(c))
            }
            ["rule", "tabulated", pad] => {
                let pad: usize = pad.parse().map_err(|_| bad("rule pad"))?;
                let values = read_block(&mut lines, "values")?;
                let padded = read_block(&mut lines, "padded")?;
                Self::new(bx, &sizes, values, ExteriorRule::Tabulated { pad, padded })
            }
            _ => Err(bad("rule line")),
        }
    }
}

fn sample(bx: &Rect, sizes: &[usize], pad: usize, f: &impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let n = sizes.len();
    let psizes: Vec<usize> = sizes.iter().map(|&m| m + 2 * pad).collect();
    let st = strides(&psizes);
    let total: usize = psizes.iter().product();
    let delta: Vec<f64> = (0..n)
        .map(|k| 2.0 * bx.half_widths()[k] / (sizes[k] - 1) as f64)
        .collect();
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            let pos: Vec<f64> = (0..n)
                .map(|k| {
                    let ik = rem / st[k];
                    rem %= st[k];
                    bx.center()[k] - bx.half_widths()[k] + (ik as f64 - pad as f64) * delta[k]
                })
                .collect();
            f(&pos)
        })
        .collect()
}

/// Kernel mass of the axis-`k` interval `[lo, hi]` in separation distance.
fn interval_mass(lo: f64, hi: f64, k: usize, a: &Anisotropy) -> Result<f64> {
    Ok(axes_mass_beyond(lo, k, a)? - axes_mass_beyond(hi, k, a)?)
}

/// Discrete energy form over `domain`: the sum over node pairs on common
/// axis lines, both endpoints in the closed domain,
/// `sum_x sum_k sum_{m != 0} w_k(m) J_p(u(x + m d e_k) - u(x)) (v(..) - v(x))`.
/// Each unordered pair is visited once and doubled, which equals the full
/// ordered sum because the summand is pair-exchange symmetric. Summation
/// order is fixed (nodes in flat order, then axis, then offset), so results
/// are bit-reproducible.
pub fn energy(
    u: &GridFunction,
    v: &GridFunction,
    fam: &KernelFamily,
    domain: &Rect,
) -> Result<f64> {
    if !u.same_layout(v) {
        return Err(Error::invalid("v", "grids disagree"));
    }
    let a = fam.aniso();
    let n = u.sizes.len();
    if a.n() != n || domain.center().len() != n {
        return Err(Error::invalid("domain", "dimension mismatch"));
    }
    let st = u.st.clone();
    let inside: Vec<bool> = (0..u.len())
        .map(|flat| {
            let idx = u.multi(flat);
            (0..n).all(|k| {
                let tol = 1e-12 * (1.0 + domain.half_widths()[k]);
                (u.axis_pos(k, idx[k]) - domain.center()[k]).abs()
                    <= domain.half_widths()[k] + tol
            })
        })
        .collect();
    // cell weights depend on (k, m) only; coefficients on the node pair
    let mut wcache: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let ws: Result<Vec<f64>> = (1..u.sizes[k])
            .map(|m| cell_weight(k, m as i64, u.delta[k], a))
            .collect();
        wcache.push(ws?);
    }
    let p = a.p();
    let pure_axes = fam.coefficient_range() == (1.0, 1.0);
    let mut total = 0.0;
    for x in 0..u.len() {
        if !inside[x] {
            continue;
        }
        let idx = u.multi(x);
        let pos = u.node_pos(&idx);
        for k in 0..n {
            for m in 1..u.sizes[k] - idx[k] {
                let y = x + m * st[k];
                if !inside[y] {
                    continue;
                }
                let du = u.values[y] - u.values[x];
                let dv = v.values[y] - v.values[x];
                if du == 0.0 || dv == 0.0 {
                    continue;
                }
                let mut w = wcache[k][m - 1];
                if !pure_axes {
                    w *= fam.pair_coefficient(&pos, k, m as f64 * u.delta[k]);
                }
                total += 2.0 * w * j_p(du, p) * dv;
            }
        }
    }
    Ok(total)
}

/// Whole-space energy of a compactly supported grid function: the domain
/// form over the box plus the exchange with the zero exterior,
/// `2 sum_x |u(x)|^p` times the kernel mass beyond the last partner cell.
/// Exact when the outermost node layer vanishes, because then every term
/// affected by face-cell trimming carries a zero value; rejected otherwise.
/// Beyond the box the coefficient is replaced by its average `1`, as in
/// [`apply_operator`]. Multiply by the cell volume for the continuum-scaled
/// quantity, as with [`energy`].
pub fn energy_total(u: &GridFunction, fam: &KernelFamily) -> Result<f64> {
    let a = fam.aniso();
    let n = u.sizes.len();
    if a.n() != n {
        return Err(Error::invalid("fam", "dimension mismatch"));
    }
    if u.rule != ExteriorRule::Zero {
        return Err(Error::invalid("u", "whole-space energy needs a zero exterior"));
    }
    for x in 0..u.len() {
        let idx = u.multi(x);
        if !u.is_interior(&idx) && u.values[x] != 0.0 {
            return Err(Error::invalid("u", "support must clear the box face"));
        }
    }
    let p = a.p();
    let mut total = energy(u, u, fam, &u.bx)?;
    for x in 0..u.len() {
        if u.values[x] == 0.0 {
            continue;
        }
        let vp = u.values[x].abs().powf(p);
        let idx = u.multi(x);
        for k in 0..n {
            for extent in [idx[k], u.sizes[k] - 1 - idx[k]] {
                let dist = (extent as f64 + 0.5) * u.delta[k];
                total += 2.0 * vp * axes_mass_beyond(dist, k, a)?;
            }
        }
    }
    Ok(total)
}

/// Principal-value operator application at an interior node: the symmetric
/// pairing `sum_k sum_{m >= 1} w_k(m) [J_p(u(x + m d e_k) - u(x)) +
/// J_p(u(x - m d e_k) - u(x))]` with the `m = 0` cell dropped, plus the
/// exterior contribution. For a smooth `u` the paired integrand is
/// `O(h^{p - 1 - s_k p})` near `0`, integrable since `s_k < 1`; the pairing
/// removes the principal value.
///
/// The data cells are trimmed at the data face. Beyond it, `Zero` and
/// `Constant` rules contribute the closed-form mass times `J_p(c - u(x))`
/// with the coefficient replaced by its average `1` (exact for constant
/// coefficients). A `Tabulated` rule truncates symmetrically at the nearer
/// collar face, so both sides use identical weights and an affine `u` maps
/// to exactly zero; the dropped mass per axis is bounded by
/// `2 axes_mass_beyond(reach)` times the largest neglected `|J_p|`.
pub fn apply_operator(u: &GridFunction, fam: &KernelFamily, node: usize) -> Result<f64> {
    let a = fam.aniso();
    let n = u.sizes.len();
    if a.n() != n {
        return Err(Error::invalid("fam", "dimension mismatch"));
    }
    if node >= u.len() {
        return Err(Error::invalid("node", "node index out of range"));
    }
    let idx = u.multi(node);
    if !u.is_interior(&idx) {
        return Err(Error::invalid(
            "node",
            "boundary node: no symmetric pairing on the grid",
        ));
    }
    let pos = u.node_pos(&idx);
    let ui = u.values[node];
    let p = a.p();
    let mut total = 0.0;
    for k in 0..n {
        let d = u.delta[k];
        match &u.rule {
            ExteriorRule::Zero | ExteriorRule::Constant(_) => {
                let c = match u.rule {
                    ExteriorRule::Constant(c) => c,
                    _ => 0.0,
                };
                for (sign, extent) in [(1i64, u.sizes[k] - 1 - idx[k]), (-1i64, idx[k])] {
                    for m in 1..=extent {
                        let val = u.offset_value(&idx, k, sign * m as i64);
                        let w = if m < extent {
                            cell_weight(k, m as i64, d, a)?
                        } else {
                            interval_mass((m as f64 - 0.5) * d, m as f64 * d, k, a)?
                        } * fam.pair_coefficient(&pos, k, sign as f64 * m as f64 * d);
                        total += w * j_p(val - ui, p);
                    }
                    let jc = j_p(c - ui, p);
                    if jc != 0.0 {
                        total += jc * axes_mass_beyond(extent as f64 * d, k, a)?;
                    }
                }
            }
            ExteriorRule::Tabulated { .. } => {
                let (neg, pos_ext) = u.data_extent(&idx, k);
                let m_sym = neg.min(pos_ext);
                for m in 1..=m_sym {
                    let w = if m < m_sym {
                        cell_weight(k, m as i64, d, a)?
                    } else {
                        interval_mass((m as f64 - 0.5) * d, m as f64 * d, k, a)?
                    };
                    for sign in [1i64, -1] {
                        let val = u.offset_value(&idx, k, sign * m as i64);
                        let cw = w * fam.pair_coefficient(&pos, k, sign as f64 * m as f64 * d);
                        total += cw * j_p(val - ui, p);
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Tail of the negative part around a node: `int_{R^n \ hole} u^-(z)^{p-1}
/// mu(x, dz)`, summed with trimmed cell weights over the available data and
/// closed forms beyond it (`Zero` contributes nothing, `Constant(c)`
/// contributes `(c^-)^{p-1}` times the remaining mass with the coefficient
/// replaced by its average `1`, `Tabulated` truncates at the collar).
pub fn tail_term(u: &GridFunction, fam: &KernelFamily, node: usize, hole: &Rect) -> Result<f64> {
    let a = fam.aniso();
    let n = u.sizes.len();
    if a.n() != n || hole.center().len() != n {
        return Err(Error::invalid("hole", "dimension mismatch"));
    }
    if node >= u.len() {
        return Err(Error::invalid("node", "node index out of range"));
    }
    let idx = u.multi(node);
    let pos = u.node_pos(&idx);
    if !hole.contains(&pos) {
        return Err(Error::invalid("node", "node not strictly inside the hole"));
    }
    let p = a.p();
    let neg_pow = |v: f64| {
        let m = (-v).max(0.0);
        if m == 0.0 {
            0.0
        } else {
            m.powf(p - 1.0)
        }
    };
    let mut total = 0.0;
    for k in 0..n {
        let d = u.delta[k];
        for sign in [1i64, -1] {
            // distance from the node to the hole face on this side
            let face = hole.center()[k] + sign as f64 * hole.half_widths()[k];
            let r_side = (face - pos[k]) * sign as f64;
            let extent = {
                let (neg, plus) = u.data_extent(&idx, k);
                if sign > 0 {
                    plus
                } else {
                    neg
                }
            };
            for m in 0..=extent {
                let val = u.offset_value(&idx, k, sign * m as i64);
                let np = neg_pow(val);
                if np == 0.0 {
                    continue;
                }
                let cell_lo = (m as f64 - 0.5).max(0.0) * d;
                let cell_hi = if m < extent {
                    (m as f64 + 0.5) * d
                } else {
                    m as f64 * d
                };
                let lo = cell_lo.max(r_side);
                if cell_hi <= lo {
                    continue;
                }
                let w = interval_mass(lo, cell_hi, k, a)?
                    * fam.pair_coefficient(&pos, k, sign as f64 * m as f64 * d);
                total += w * np;
            }
            if let ExteriorRule::Constant(c) = u.rule {
                let np = neg_pow(c);
                if np > 0.0 {
                    let lo = (extent as f64 * d).max(r_side);
                    total += np * axes_mass_beyond(lo, k, a)?;
                }
            }
        }
    }
    Ok(total)
}

/// A cut-off adapted to the metric: `1` on `M_r(x0)`, supported in
/// `M_{lambda r}(x0)`, built as the product of per-axis linear ramps so the
/// axis-`k` Lipschitz constant is exactly
/// `(lambda^{s_max/s_k} - 1)^{-1} r^{-s_max/s_k}` (the admissibility
/// constant is `c = 1`).
#[derive(Debug, Clone)]
pub struct CutOff {
    x0: Vec<f64>,
    r: f64,
    lambda: f64,
    tau: GridFunction,
}

impl CutOff {
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn tau(&self) -> &GridFunction {
        &self.tau
    }
}

/// Builds the product-ramp cut-off on the given grid. The support
/// `M_{lambda r}(x0)` must fit inside the box so the zero exterior rule
/// represents the function exactly.
pub fn make_cutoff(
    a: &Anisotropy,
    x0: &[f64],
    r: f64,
    lambda: f64,
    bx: &Rect,
    sizes: &[usize],
) -> Result<CutOff> {
    if x0.len() != a.n() {
        return Err(Error::invalid("x0", "dimension mismatch"));
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
    for k in 0..a.n() {
        let reach = (x0[k] - bx.center()[k]).abs() + (lambda * r).powf(a.exponent(k));
        if reach > bx.half_widths()[k] + 1e-12 {
            return Err(Error::invalid(
                "bx",
                format!("support exceeds the box along axis {k}"),
            ));
        }
    }
    let ramps: Vec<(f64, f64)> = (0..a.n())
        .map(|k| {
            let b = a.exponent(k);
            (r.powf(b), (lambda * r).powf(b))
        })
        .collect();
    let x0v = x0.to_vec();
    let tau = GridFunction::from_fn(bx.clone(), sizes, ExteriorRule::Zero, |pos| {
        let mut t = 1.0;
        for k in 0..pos.len() {
            let (inner, outer) = ramps[k];
            let dist = (pos[k] - x0v[k]).abs();
            let ramp = if dist <= inner {
                1.0
            } else if dist >= outer {
                0.0
            } else {
                (outer - dist) / (outer - inner)
            };
            t *= ramp;
        }
        t
    })?;
    Ok(CutOff {
        x0: x0.to_vec(),
        r,
        lambda,
        tau,
    })
}

/// Discrete sup-integral of the cut-off against the kernel versus its
/// scaling bound: returns `(lhs, rhs)` with
/// `lhs = sup_x sum_cells w |tau(y) - tau(x)|^p` (grid nodes, zero outside
/// the box with closed-form tails) and
/// `rhs = C (sum_k (lambda^{s_max/s_k} - 1)^{-p s_k}) r^{-p s_max}`.
/// The calibrated constant is `C = Lambda 2^{p+1} / p`: `2/p` from
/// integrating `min(Lip_k^p |h|^p, 1)` against the axis density, `2^p` for
/// node sampling against cell averages, `Lambda` for the coefficient.
pub fn cutoff_energy_bound(cut: &CutOff, fam: &KernelFamily) -> Result<(f64, f64)> {
    let a = fam.aniso();
    let u = &cut.tau;
    let n = u.sizes.len();
    if a.n() != n {
        return Err(Error::invalid("fam", "dimension mismatch"));
    }
    let p = a.p();
    let mut lhs = 0.0f64;
    for x in 0..u.len() {
        let idx = u.multi(x);
        let pos = u.node_pos(&idx);
        let tx = u.values[x];
        let mut sum = 0.0;
        for k in 0..n {
            let d = u.delta[k];
            for (sign, extent) in [(1i64, u.sizes[k] - 1 - idx[k]), (-1i64, idx[k])] {
                for m in 1..=extent {
                    let ty = u.offset_value(&idx, k, sign * m as i64);
                    if ty == tx {
                        continue;
                    }
                    let w = if m < extent {
                        cell_weight(k, m as i64, d, a)?
                    } else {
                        interval_mass((m as f64 - 0.5) * d, m as f64 * d, k, a)?
                    } * fam.pair_coefficient(&pos, k, sign as f64 * m as f64 * d);
                    sum += w * (ty - tx).abs().powf(p);
                }
                if tx != 0.0 {
                    sum += tx.abs().powf(p) * axes_mass_beyond(extent as f64 * d, k, a)?;
                }
            }
        }
        lhs = lhs.max(sum);
    }
    let c = fam.lambda() * 2f64.powf(p + 1.0) / p;
    let sum_k: f64 = (0..n)
        .map(|k| (cut.lambda.powf(a.exponent(k)) - 1.0).powf(-p * a.s()[k]))
        .sum();
    let rhs = c * sum_k * cut.r.powf(-p * a.s_max());
    Ok((lhs, rhs))
}

/// Both sides of the band-reassembly estimate along axis `k` for the
/// restricted radius set: the left side takes, per node, the largest
/// `rho^{-(1 + p s_k) b_k}`-weighted band sum over `rhos`; the right side is
/// `(2a)^{1 + p s_k} N^{p(1 - s_k)}` times the seminorm restricted to the
/// union of the `N`-fold shrunk bands. Discrete Riemann-sum analog of the
/// continuum estimate; bands must be resolvable on the grid.
pub fn reassembly_sides(
    u: &GridFunction,
    fam: &KernelFamily,
    k: usize,
    a_frac: f64,
    n_chain: usize,
    rhos: &[f64],
) -> Result<(f64, f64)> {
    let a = fam.aniso();
    let n = u.sizes.len();
    if a.n() != n || k >= n {
        return Err(Error::invalid("k", "axis out of range"));
    }
    if !(0.0..=1.0).contains(&a_frac) || a_frac == 0.0 {
        return Err(Error::invalid("a_frac", "need a in (0,1]"));
    }
    if n_chain == 0 {
        return Err(Error::invalid("n_chain", "need N >= 1"));
    }
    if rhos.is_empty() || rhos.iter().any(|&r| !r.is_finite() || r <= 0.0) {
        return Err(Error::invalid("rhos", "need a nonempty set of positive radii"));
    }
    if matches!(u.rule, ExteriorRule::Tabulated { .. }) {
        return Err(Error::invalid("u", "band sums need a closed-form exterior"));
    }
    let b = a.exponent(k);
    let sk = a.s()[k];
    let p = a.p();
    let d = u.delta[k];
    let cellvol: f64 = u.delta.iter().product();
    let bands: Vec<(f64, f64)> = rhos
        .iter()
        .map(|&rho| (a_frac * rho.powf(b), 2.0 * a_frac * rho.powf(b)))
        .collect();
    let shrunk: Vec<(f64, f64)> = bands
        .iter()
        .map(|&(lo, hi)| (lo / n_chain as f64, hi / n_chain as f64))
        .collect();
    let in_a_band = |h: f64, set: &[(f64, f64)]| set.iter().any(|&(lo, hi)| lo <= h && h < hi);
    let m_max = {
        let hi_all = bands
            .iter()
            .chain(&shrunk)
            .map(|&(_, hi)| hi)
            .fold(0.0f64, f64::max);
        (hi_all / d).ceil() as i64 + 1
    };
    let mut lhs = 0.0;
    let mut rhs_sum = 0.0;
    for x in 0..u.len() {
        let idx = u.multi(x);
        let mut best = 0.0f64;
        for (bi, &(lo, hi)) in bands.iter().enumerate() {
            let mut band_sum = 0.0;
            for m in 1..=m_max {
                let h = m as f64 * d;
                if h < lo || h >= hi {
                    continue;
                }
                for sign in [1i64, -1] {
                    let dv = u.offset_value(&idx, k, sign * m) - u.values[x];
                    band_sum += dv.abs().powf(p) * d;
                }
            }
            let weighted = band_sum * rhos[bi].powf(-(1.0 + p * sk) * b);
            best = best.max(weighted);
        }
        lhs += cellvol * best;
        for m in 1..=m_max {
            let h = m as f64 * d;
            if !in_a_band(h, &shrunk) {
                continue;
            }
            for sign in [1i64, -1] {
                let dv = u.offset_value(&idx, k, sign * m) - u.values[x];
                rhs_sum += dv.abs().powf(p) * h.powf(-1.0 - p * sk) * d;
            }
        }
    }
    let factor = (2.0 * a_frac).powf(1.0 + p * sk) * (n_chain as f64).powf(p * (1.0 - sk));
    Ok((lhs, cellvol * factor * rhs_sum))
}
