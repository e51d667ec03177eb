//! Generation-indexed covers by anisotropic dyadic rectangles.
//!
//! Generation `g` rectangles are products of half-open axis intervals of
//! length `2 (2^{-g})^{b_k}`, `b_k = s_max/s_k`, so each has metric radius
//! `2^{-g}`. Equal orders reproduce the classical dyadic cubes. For `b_k > 1`
//! the child length does not divide the parent length: a parent splits into
//! `N = floor(2^{b_k})` left-anchored children plus one trailing child
//! anchored at the parent's right endpoint, giving covers (not partitions)
//! with same-generation overlap at most two per axis. Coarser generations
//! are translates anchored at the origin whose stride grows by the largest
//! whole number of steps that keeps a child inside one parent.

use std::collections::HashMap;
use std::fmt;

use super::{Anisotropy, Rect};
use crate::error::{Error, Result};
use crate::num::fmt17;

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    fn intersects_open(&self, wl: f64, wr: f64) -> bool {
        self.lo < wr && self.hi > wl
    }
}

/// Splits sorted same-length parent intervals into the next finer generation.
///
/// Each parent emits `N = floor(parent/child)` left-anchored children and,
/// when the length ratio is not an integer, a trailing child anchored at the
/// right endpoint. When consecutive parents overlap, a parent only emits
/// children up to the successor's start (the successor's children re-cover
/// the shared part); this keeps the same-generation overlap at two.
pub fn split_intervals(parents: &[Interval], child_len: f64) -> Vec<Interval> {
    let tol = 1e-12;
    let mut out: Vec<Interval> = Vec::new();
    for (j, iv) in parents.iter().enumerate() {
        let parent_len = iv.width();
        let n_full = ((parent_len / child_len) + 1e-9).floor() as usize;
        let next_lo = parents.get(j + 1).map(|nx| nx.lo);
        let overlaps_next = next_lo.map_or(false, |nl| nl < iv.hi - tol * parent_len);
        let keep = if overlaps_next {
            // children needed so the last one reaches the successor's start
            let gap = next_lo.unwrap() - iv.lo;
            (((gap / child_len) - 1e-9).ceil()).max(1.0) as usize
        } else {
            n_full
        };
        let n_keep = keep.min(n_full);
        for i in 0..n_keep {
            out.push(Interval {
                lo: iv.lo + i as f64 * child_len,
                hi: iv.lo + (i + 1) as f64 * child_len,
            });
        }
        let reach = iv.lo + n_keep as f64 * child_len;
        let target = if overlaps_next && keep <= n_full {
            next_lo.unwrap()
        } else {
            iv.hi
        };
        if reach < target - tol * parent_len {
            out.push(Interval {
                lo: iv.hi - child_len,
                hi: iv.hi,
            });
        }
    }
    out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    out.dedup_by(|a, b| {
        (a.lo - b.lo).abs() <= tol * child_len && (a.hi - b.hi).abs() <= tol * child_len
    });
    out
}

/// Interval length of generation `g` along an axis with exponent `b`.
fn gen_len(b: f64, g: i32) -> f64 {
    2f64.powf(1.0 - g as f64 * b)
}

/// `(length, stride)` of generations `-1, -2, ..., -depth`.
///
/// Generation 0 is the stride-2 tiling anchored at 0. Coarsening multiplies
/// the stride by `K + 1`, `K` the largest step count with
/// `K*stride + len <= len'`, so every interval stays inside one coarser
/// interval while lengths and strides keep the ratio `len/stride < 2`.
fn coarse_layout(b: f64, depth: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(depth as usize);
    let mut len = 2.0f64;
    let mut stride = 2.0f64;
    for j in 1..=depth {
        let len_up = gen_len(b, -(j as i32));
        let k = (((len_up - len) / stride) + 1e-9).floor().max(1.0);
        stride *= k + 1.0;
        len = len_up;
        out.push((len, stride));
    }
    out
}

/// All generation-`g` intervals for `g` in `g_min..=g_max` meeting the open
/// window `(wl, wr)`, one sorted list per generation.
fn axis_generations(b: f64, wl: f64, wr: f64, g_min: i32, g_max: i32) -> Vec<Vec<Interval>> {
    let mut gen0: Vec<Interval> = Vec::new();
    let z_lo = (wl / 2.0).floor() as i64 - 1;
    let z_hi = (wr / 2.0).ceil() as i64 + 1;
    for z in z_lo..=z_hi {
        let iv = Interval {
            lo: 2.0 * z as f64,
            hi: 2.0 * (z + 1) as f64,
        };
        if iv.intersects_open(wl, wr) {
            gen0.push(iv);
        }
    }

    let depth = (-g_min).max(0) as u32;
    let coarse = coarse_layout(b, depth);

    let mut by_gen: Vec<Vec<Interval>> = Vec::new();
    for g in g_min..=g_max {
        if g < 0 {
            let (len, stride) = coarse[(-g - 1) as usize];
            let i_lo = ((wl - len) / stride).floor() as i64 - 1;
            let i_hi = (wr / stride).ceil() as i64 + 1;
            let mut list = Vec::new();
            for i in i_lo..=i_hi {
                let iv = Interval {
                    lo: i as f64 * stride,
                    hi: i as f64 * stride + len,
                };
                if iv.intersects_open(wl, wr) {
                    list.push(iv);
                }
            }
            by_gen.push(list);
        } else if g == 0 {
            by_gen.push(gen0.clone());
        } else {
            // refine generation g-1; a child meeting the window has a parent
            // meeting the window, so filtering each level loses nothing
            let parents: Vec<Interval> = if g - 1 >= g_min {
                by_gen.last().unwrap().clone()
            } else {
                // g_min > 0: refine down from generation 0 without storing
                let mut cur = gen0.clone();
                for h in 1..g {
                    cur = split_intervals(&cur, gen_len(b, h))
                        .into_iter()
                        .filter(|iv| iv.intersects_open(wl, wr))
                        .collect();
                }
                cur
            };
            let children: Vec<Interval> = split_intervals(&parents, gen_len(b, g))
                .into_iter()
                .filter(|iv| iv.intersects_open(wl, wr))
                .collect();
            by_gen.push(children);
        }
    }
    by_gen
}

/// One rectangle of the cover: a product of per-axis half-open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicRect {
    pub gen: i32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Index of the containing generation-(gen-1) rectangle, if any.
    pub predecessor: Option<usize>,
}

impl DyadicRect {
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .all(|((&lo, &hi), &xi)| lo <= xi && xi < hi)
    }

    /// Containment with per-axis slack relative to this rectangle's widths.
    pub fn contains_rect(&self, other: &DyadicRect, rel_slack: f64) -> bool {
        (0..self.lo.len()).all(|k| {
            let slack = rel_slack * (1.0 + self.hi[k] - self.lo[k]);
            self.lo[k] <= other.lo[k] + slack && other.hi[k] <= self.hi[k] + slack
        })
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| hi - lo)
            .product()
    }
}

/// Finite cover tree over a window rectangle for a generation range.
#[derive(Debug, Clone)]
pub struct DyadicTree {
    aniso: Anisotropy,
    window: Rect,
    g_min: i32,
    g_max: i32,
    rects: Vec<DyadicRect>,
    gen_ranges: Vec<(i32, usize, usize)>,
}

const MAX_RECTS: usize = 5_000_000;

impl DyadicTree {
    /// Builds all generations `g_min..=g_max` restricted to rectangles
    /// meeting the window. Predecessor links point to the containing
    /// coarser rectangle with lexicographically smallest corner.
    pub fn build(a: &Anisotropy, window: &Rect, g_min: i32, g_max: i32) -> Result<Self> {
        if g_min > g_max {
            return Err(Error::invalid("generations", format!("empty range {g_min}..{g_max}")));
        }
        if window.center().len() != a.n() {
            return Err(Error::Incompatible(
                "window dimension does not match anisotropy".into(),
            ));
        }
        let n = a.n();
        let mut axes: Vec<Vec<Vec<Interval>>> = Vec::with_capacity(n);
        for k in 0..n {
            let b = a.exponent(k);
            if (g_max.abs().max(g_min.abs()) as f64) * b > 500.0 {
                return Err(Error::invalid(
                    "generations",
                    "generation range too deep for the axis exponents".to_string(),
                ));
            }
            let wl = window.center()[k] - window.half_widths()[k];
            let wr = window.center()[k] + window.half_widths()[k];
            axes.push(axis_generations(b, wl, wr, g_min, g_max));
        }

        let gen_count = (g_max - g_min + 1) as usize;
        let mut total: usize = 0;
        for gi in 0..gen_count {
            let cnt: usize = (0..n).map(|k| axes[k][gi].len()).product();
            total = total.saturating_add(cnt);
        }
        if total > MAX_RECTS {
            return Err(Error::invalid(
                "generations",
                format!("cover would hold {total} rectangles (limit {MAX_RECTS})"),
            ));
        }

        let mut rects: Vec<DyadicRect> = Vec::with_capacity(total);
        let mut gen_ranges: Vec<(i32, usize, usize)> = Vec::with_capacity(gen_count);
        let mut base_of_gen: Vec<usize> = Vec::with_capacity(gen_count);

        for gi in 0..gen_count {
            let g = g_min + gi as i32;
            let counts: Vec<usize> = (0..n).map(|k| axes[k][gi].len()).collect();
            let start = rects.len();
            base_of_gen.push(start);
            if counts.iter().any(|&c| c == 0) {
                gen_ranges.push((g, start, start));
                continue;
            }
            // row-major over axis indices, axis 0 slowest: lexicographic corners
            let mut idx = vec![0usize; n];
            'outer: loop {
                let mut lo = Vec::with_capacity(n);
                let mut hi = Vec::with_capacity(n);
                for k in 0..n {
                    let iv = axes[k][gi][idx[k]];
                    lo.push(iv.lo);
                    hi.push(iv.hi);
                }
                let predecessor = if gi > 0 {
                    let mut flat = 0usize;
                    for k in 0..n {
                        let parents = &axes[k][gi - 1];
                        let child = axes[k][gi][idx[k]];
                        let pk = min_lo_containing_parent(parents, child).ok_or_else(|| {
                            Error::Incompatible(format!(
                                "no containing coarser interval for [{}, {}) on axis {k}",
                                child.lo, child.hi
                            ))
                        })?;
                        flat = flat * parents.len() + pk;
                    }
                    Some(base_of_gen[gi - 1] + flat)
                } else {
                    None
                };
                rects.push(DyadicRect {
                    gen: g,
                    lo,
                    hi,
                    predecessor,
                });
                let mut k = n - 1;
                loop {
                    idx[k] += 1;
                    if idx[k] < counts[k] {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        break 'outer;
                    }
                    k -= 1;
                }
            }
            gen_ranges.push((g, start, rects.len()));
        }

        Ok(Self {
            aniso: a.clone(),
            window: window.clone(),
            g_min,
            g_max,
            rects,
            gen_ranges,
        })
    }

    pub fn aniso(&self) -> &Anisotropy {
        &self.aniso
    }
    pub fn window(&self) -> &Rect {
        &self.window
    }
    pub fn generation_range(&self) -> (i32, i32) {
        (self.g_min, self.g_max)
    }
    pub fn rects(&self) -> &[DyadicRect] {
        &self.rects
    }

    /// Rectangles of one generation (empty if outside the built range).
    pub fn generation(&self, g: i32) -> &[DyadicRect] {
        for &(gg, s, e) in &self.gen_ranges {
            if gg == g {
                return &self.rects[s..e];
            }
        }
        &[]
    }

    pub fn check(&self) -> DyadicReport {
        check_family(&self.aniso, &self.window, &self.rects)
    }

    /// Line-oriented text form, one rectangle per line:
    /// `gen k: lo1 hi1 ... lon hin`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rects {
            out.push_str(&format!("gen {}:", r.gen));
            for k in 0..r.lo.len() {
                out.push(' ');
                out.push_str(&fmt17(r.lo[k]));
                out.push(' ');
                out.push_str(&fmt17(r.hi[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Containing parent with smallest left endpoint, among sorted same-length
/// parents. All parents share a length, so the first parent with
/// `lo >= child.hi - parent_len` is the candidate.
fn min_lo_containing_parent(parents: &[Interval], child: Interval) -> Option<usize> {
    if parents.is_empty() {
        return None;
    }
    let plen = parents[0].width();
    let slack = 1e-12 * (1.0 + plen);
    let threshold = child.hi - plen - slack;
    let start = parents.partition_point(|p| p.lo < threshold);
    for (off, p) in parents[start..].iter().take(4).enumerate() {
        if p.lo <= child.lo + slack && p.hi >= child.hi - slack {
            return Some(start + off);
        }
    }
    None
}

/// Result of one structural property check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Report of the five structural properties of a cover family.
#[derive(Debug, Clone)]
pub struct DyadicReport {
    pub checks: Vec<PropertyCheck>,
    pub rect_count: usize,
    pub sample_count: usize,
    /// False when the critical-point sample grid had to be thinned.
    pub exhaustive: bool,
}

impl DyadicReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for DyadicReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(f, "{}: {}", c.name, if c.pass { "pass" } else { "FAIL" })?;
            if let Some(w) = &c.witness {
                write!(f, " ({w})")?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "rectangles: {}, samples: {}{}",
            self.rect_count,
            self.sample_count,
            if self.exhaustive { "" } else { " (thinned)" }
        )
    }
}

const SAMPLE_CAP: usize = 1_000_000;

struct AxisIntervals {
    ivs: Vec<Interval>,
    max_w: f64,
}

impl AxisIntervals {
    fn from_values(mut vals: Vec<Interval>) -> Self {
        vals.sort_by(|a, b| (a.lo, a.hi).partial_cmp(&(b.lo, b.hi)).unwrap());
        vals.dedup_by(|a, b| {
            let t = 1e-12 * (1.0 + b.width());
            (a.lo - b.lo).abs() <= t && (a.hi - b.hi).abs() <= t
        });
        let max_w = vals.iter().map(|iv| iv.width()).fold(0.0, f64::max);
        Self { ivs: vals, max_w }
    }

    fn locate_exact(&self, lo: f64, hi: f64) -> Option<u32> {
        let t = 1e-12 * (1.0 + (hi - lo).abs());
        let start = self.ivs.partition_point(|iv| iv.lo < lo - t);
        for (off, iv) in self.ivs[start..].iter().enumerate() {
            if iv.lo > lo + t {
                break;
            }
            if (iv.hi - hi).abs() <= t {
                return Some((start + off) as u32);
            }
        }
        None
    }

    fn containing_point(&self, x: f64, out: &mut Vec<u32>) {
        out.clear();
        let ub = self.ivs.partition_point(|iv| iv.lo <= x);
        for i in (0..ub).rev() {
            if self.ivs[i].lo <= x - self.max_w {
                break;
            }
            if self.ivs[i].contains(x) {
                out.push(i as u32);
            }
        }
        out.reverse();
    }

    fn containing_interval(&self, child: Interval, out: &mut Vec<u32>) {
        out.clear();
        let slack = 1e-12 * (1.0 + self.max_w);
        let ub = self.ivs.partition_point(|iv| iv.lo <= child.lo + slack);
        for i in (0..ub).rev() {
            if self.ivs[i].lo <= child.lo - self.max_w {
                break;
            }
            if self.ivs[i].lo <= child.lo + slack && self.ivs[i].hi >= child.hi - slack {
                out.push(i as u32);
            }
        }
        out.reverse();
    }
}

struct GenSlice {
    gen: i32,
    axes: Vec<AxisIntervals>,
    rect_of: HashMap<Vec<u32>, usize>,
}

/// Verifies the five structural properties on a materialized family:
/// (i) every generation covers the window, (ii) every rectangle has metric
/// radius `2^{-gen}`, (iii) every non-coarsest rectangle lies in its linked
/// predecessor, which is the lexicographically smallest containing coarser
/// rectangle, (iv) no point lies in more than `2^n` distinct rectangles of
/// one generation, and (v) any set of pairwise-intersecting rectangles with
/// more than `2^n` members contains a nested pair.
///
/// Membership patterns of half-open rectangles are constant between
/// consecutive endpoint coordinates, so sampling every product of per-axis
/// endpoints decides (i), (iv) and (v) exactly; pairwise-intersecting boxes
/// share a point whose coordinates are left endpoints, which that sample
/// grid contains.
pub fn check_family(a: &Anisotropy, window: &Rect, rects: &[DyadicRect]) -> DyadicReport {
    let n = a.n();
    let two_n = 1usize << n;
    let mut checks = Vec::with_capacity(5);

    if rects.is_empty() {
        checks.push(PropertyCheck {
            name: "(i) generation covers window",
            pass: false,
            witness: Some("empty family".into()),
        });
        for name in [
            "(ii) metric radius",
            "(iii) predecessor containment",
            "(iv) same-generation overlap",
            "(v) cross-generation nesting",
        ] {
            checks.push(PropertyCheck {
                name,
                pass: true,
                witness: None,
            });
        }
        return DyadicReport {
            checks,
            rect_count: 0,
            sample_count: 0,
            exhaustive: true,
        };
    }

    // group by generation, preserving family indices
    let mut gens: Vec<i32> = rects.iter().map(|r| r.gen).collect();
    gens.sort_unstable();
    gens.dedup();
    let min_gen = gens[0];

    let mut slices: Vec<GenSlice> = Vec::with_capacity(gens.len());
    for &g in &gens {
        let members: Vec<usize> = (0..rects.len()).filter(|&i| rects[i].gen == g).collect();
        let mut axes = Vec::with_capacity(n);
        for k in 0..n {
            let vals: Vec<Interval> = members
                .iter()
                .map(|&i| Interval {
                    lo: rects[i].lo[k],
                    hi: rects[i].hi[k],
                })
                .collect();
            axes.push(AxisIntervals::from_values(vals));
        }
        let mut rect_of = HashMap::with_capacity(members.len());
        for &i in &members {
            let key: Option<Vec<u32>> = (0..n)
                .map(|k| axes[k].locate_exact(rects[i].lo[k], rects[i].hi[k]))
                .collect();
            if let Some(key) = key {
                rect_of.insert(key, i);
            }
        }
        slices.push(GenSlice { gen: g, axes, rect_of });
    }

    // (ii) widths 2 (2^{-g})^{b_k} per axis
    let mut radius_witness = None;
    'rad: for r in rects {
        for k in 0..n {
            let want = gen_len(a.exponent(k), r.gen);
            let got = r.hi[k] - r.lo[k];
            if (got - want).abs() > 1e-12 * want {
                radius_witness = Some(format!(
                    "gen {} axis {k}: width {got:.6e}, expected {want:.6e}",
                    r.gen
                ));
                break 'rad;
            }
        }
    }
    let radius_pass = radius_witness.is_none();

    // (iii) predecessor links
    let mut pred_witness = None;
    let mut child_axes: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, r) in rects.iter().enumerate() {
        if r.gen == min_gen {
            if r.predecessor.is_some() {
                pred_witness = Some(format!("rect {i}: coarsest generation has a predecessor"));
                break;
            }
            continue;
        }
        let Some(pi) = r.predecessor else {
            pred_witness = Some(format!("rect {i} (gen {}): missing predecessor", r.gen));
            break;
        };
        let pred = match rects.get(pi) {
            Some(p) => p,
            None => {
                pred_witness = Some(format!("rect {i}: predecessor index {pi} out of range"));
                break;
            }
        };
        if pred.gen != r.gen - 1 {
            pred_witness = Some(format!(
                "rect {i} (gen {}): predecessor has generation {}",
                r.gen, pred.gen
            ));
            break;
        }
        if !pred.contains_rect(r, 1e-12) {
            pred_witness = Some(format!(
                "rect {i} (gen {}) not inside its predecessor {pi}",
                r.gen
            ));
            break;
        }
        // the link must be the lexicographically smallest containing rect
        let Some(ps) = slices.iter().find(|s| s.gen == r.gen - 1) else {
            pred_witness = Some(format!("rect {i}: no generation {} present", r.gen - 1));
            break;
        };
        for k in 0..n {
            let civ = Interval {
                lo: r.lo[k],
                hi: r.hi[k],
            };
            let mut found = Vec::new();
            ps.axes[k].containing_interval(civ, &mut found);
            child_axes[k] = found;
        }
        let mut best: Option<usize> = None;
        // index tuples in ascending per-axis order enumerate corners in
        // lexicographic order, so the first materialized hit is minimal
        if child_axes.iter().all(|c| !c.is_empty()) {
            let mut idx = vec![0usize; n];
            'tuples: loop {
                let key: Vec<u32> = (0..n).map(|k| child_axes[k][idx[k]]).collect();
                if let Some(&ri) = ps.rect_of.get(&key) {
                    best = Some(ri);
                    break 'tuples;
                }
                let mut k = n - 1;
                loop {
                    idx[k] += 1;
                    if idx[k] < child_axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        break 'tuples;
                    }
                    k -= 1;
                }
            }
        }
        match best {
            None => {
                pred_witness = Some(format!(
                    "rect {i} (gen {}): no containing rect in generation {}",
                    r.gen,
                    r.gen - 1
                ));
                break;
            }
            Some(bi) => {
                if bi != pi && !(rects[bi].contains_rect(pred, 1e-12) && pred.contains_rect(&rects[bi], 1e-12)) {
                    pred_witness = Some(format!(
                        "rect {i}: predecessor {pi} is not the lexicographically smallest container ({bi})"
                    ));
                    break;
                }
            }
        }
    }
    let pred_pass = pred_witness.is_none();

    // critical-point sample grid: per-axis endpoint values plus window edges
    let mut axis_samples: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut vals: Vec<f64> = Vec::new();
        for r in rects {
            vals.push(r.lo[k]);
            vals.push(r.hi[k]);
        }
        vals.push(window.center()[k] - window.half_widths()[k]);
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
        axis_samples.push(vals);
    }
    let mut exhaustive = true;
    loop {
        let total: u128 = axis_samples.iter().map(|v| v.len().max(1) as u128).product();
        if total <= SAMPLE_CAP as u128 {
            break;
        }
        let longest = (0..n).max_by_key(|&k| axis_samples[k].len()).unwrap();
        let thinned: Vec<f64> = axis_samples[longest].iter().copied().step_by(2).collect();
        axis_samples[longest] = thinned;
        exhaustive = false;
    }

    let wl: Vec<f64> = (0..n)
        .map(|k| window.center()[k] - window.half_widths()[k])
        .collect();
    let wr: Vec<f64> = (0..n)
        .map(|k| window.center()[k] + window.half_widths()[k])
        .collect();

    let mut cover_witness: Option<String> = None;
    let mut overlap_witness: Option<String> = None;
    let mut nesting_witness: Option<String> = None;
    let mut sample_count = 0usize;

    let mut idx = vec![0usize; n];
    let mut x = vec![0f64; n];
    let mut axis_hits: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut ids_all: Vec<usize> = Vec::new();
    if axis_samples.iter().all(|v| !v.is_empty()) {
        'samples: loop {
            for k in 0..n {
                x[k] = axis_samples[k][idx[k]];
            }
            sample_count += 1;
            let in_window = (0..n).all(|k| x[k] >= wl[k] && x[k] < wr[k]);

            ids_all.clear();
            for s in &slices {
                let mut any = false;
                let mut count_here = 0usize;
                for k in 0..n {
                    s.axes[k].containing_point(x[k], &mut axis_hits[k]);
                }
                if axis_hits.iter().all(|h| !h.is_empty()) {
                    let mut t = vec![0usize; n];
                    'tuples: loop {
                        let key: Vec<u32> = (0..n).map(|k| axis_hits[k][t[k]]).collect();
                        if let Some(&ri) = s.rect_of.get(&key) {
                            ids_all.push(ri);
                            count_here += 1;
                            any = true;
                        }
                        let mut k = n - 1;
                        loop {
                            t[k] += 1;
                            if t[k] < axis_hits[k].len() {
                                break;
                            }
                            t[k] = 0;
                            if k == 0 {
                                break 'tuples;
                            }
                            k -= 1;
                        }
                    }
                }
                if in_window && !any && cover_witness.is_none() {
                    cover_witness = Some(format!(
                        "generation {} leaves x = {:?} uncovered",
                        s.gen, x
                    ));
                }
                if count_here > two_n && overlap_witness.is_none() {
                    overlap_witness = Some(format!(
                        "{count_here} generation-{} rects contain x = {:?}",
                        s.gen, x
                    ));
                }
            }
            if ids_all.len() > two_n && nesting_witness.is_none() {
                let antichain = max_antichain(&ids_all, rects);
                if antichain > two_n {
                    nesting_witness = Some(format!(
                        "{antichain} pairwise non-nested rects meet at x = {x:?}"
                    ));
                }
            }

            let mut k = n - 1;
            loop {
                idx[k] += 1;
                if idx[k] < axis_samples[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    break 'samples;
                }
                k -= 1;
            }
        }
    }

    checks.push(PropertyCheck {
        name: "(i) generation covers window",
        pass: cover_witness.is_none(),
        witness: cover_witness,
    });
    checks.push(PropertyCheck {
        name: "(ii) metric radius",
        pass: radius_pass,
        witness: radius_witness,
    });
    checks.push(PropertyCheck {
        name: "(iii) predecessor containment",
        pass: pred_pass,
        witness: pred_witness,
    });
    checks.push(PropertyCheck {
        name: "(iv) same-generation overlap",
        pass: overlap_witness.is_none(),
        witness: overlap_witness,
    });
    checks.push(PropertyCheck {
        name: "(v) cross-generation nesting",
        pass: nesting_witness.is_none(),
        witness: nesting_witness,
    });

    DyadicReport {
        checks,
        rect_count: rects.len(),
        sample_count,
        exhaustive,
    }
}

/// Largest pairwise non-nested subset of the given rectangles.
///
/// Containment is transitive, so the minimum chain cover of the containment
/// order has the size of the maximum antichain; the cover size is computed
/// as `m - (maximum matching)` on the strict-containment bipartite graph.
fn max_antichain(ids: &[usize], rects: &[DyadicRect]) -> usize {
    let m = ids.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let a = &rects[ids[i]];
            let b = &rects[ids[j]];
            if a.contains_rect(b, 1e-12) && !b.contains_rect(a, 1e-12) {
                adj[i].push(j);
            }
        }
    }
    let mut match_to: Vec<Option<usize>> = vec![None; m];
    let mut matched = 0usize;
    for i in 0..m {
        let mut seen = vec![false; m];
        if augment(i, &adj, &mut seen, &mut match_to) {
            matched += 1;
        }
    }
    m - matched
}

fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], match_to: &mut [Option<usize>]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if match_to[j].is_none() || augment(match_to[j].unwrap(), adj, seen, match_to) {
            match_to[j] = Some(i);
            return true;
        }
    }
    false
}
