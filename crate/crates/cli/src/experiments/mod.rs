//! Experiment driver: each experiment validates its configuration against
//! the library preconditions first, then computes. Compute-phase problems
//! (non-convergence, violated bounds) are failures recorded in the outcome,
//! never panics, so partial results always reach the output directory.

use fracp::geometry::{Anisotropy, Rect};
use fracp::grid::{ExteriorRule, GridFunction};
use fracp::kernel::{Coefficient, KernelFamily};
use fracp::verify::testfns;
use rayon::prelude::*;

use crate::config::{Config, ConfigError, ExtSpec, FnSpec};

mod convergence;
mod dyadic;
mod functional;
mod harnack;
mod hoelder;
mod ineq;
mod maximal;
mod solve;

/// Run-wide knobs the experiments share. Seeds for parallel subtasks are
/// derived from `seed` by index arithmetic, so the draw at a given index
/// never depends on scheduling.
pub struct Ctx {
    pub seed: u64,
    pub deterministic: bool,
}

impl Ctx {
    pub fn task_seed(&self, index: u64) -> u64 {
        self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// What an experiment produced: named artifacts plus the failures and notes
/// the caller reports. Failures make the run exit nonzero; artifacts are
/// written either way.
#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push((name.to_string(), bytes));
    }
}

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    match cfg.experiment.as_str() {
        "solve" => solve::run(cfg, ctx),
        "harnack" => harnack::run(cfg, ctx),
        "hoelder" => hoelder::run(cfg, ctx),
        "sobolev" => functional::run(cfg, ctx, functional::Which::Sobolev),
        "poincare" => functional::run(cfg, ctx, functional::Which::Poincare),
        "maximal" => maximal::run_maximal(cfg, ctx),
        "goodlambda" => maximal::run_goodlambda(cfg, ctx),
        "dyadic" => dyadic::run(cfg, ctx),
        "convergence" => convergence::run(cfg, ctx),
        "ineq" => ineq::run(cfg, ctx),
        other => Err(ConfigError::new(
            "experiment",
            format!("unknown experiment `{other}`"),
        )),
    }
}

/// In-order sum. The deterministic mode folds serially in index order so
/// the bytes never depend on the thread count; otherwise rayon reduces.
pub fn sum_ordered(deterministic: bool, values: &[f64]) -> f64 {
    if deterministic {
        values.iter().sum()
    } else {
        values.par_iter().sum()
    }
}

/// The `anisotropy` block is required by every experiment that touches the
/// grid; `s0` defaults to the smallest order and `lambda` to 1.
pub fn base_aniso(cfg: &Config) -> Result<Anisotropy, ConfigError> {
    let block = cfg.anisotropy.as_ref().ok_or_else(|| {
        ConfigError::new("anisotropy", "this experiment needs the anisotropy block")
    })?;
    aniso_for(cfg, block.p, &block.s)
}

/// Builds one anisotropy for a sweep combination, with the configured `s0`
/// and `lambda` fallbacks.
pub fn aniso_for(cfg: &Config, p: f64, s: &[f64]) -> Result<Anisotropy, ConfigError> {
    let block = cfg.anisotropy.as_ref().ok_or_else(|| {
        ConfigError::new("anisotropy", "this experiment needs the anisotropy block")
    })?;
    let s0 = block
        .s0
        .unwrap_or_else(|| s.iter().copied().fold(f64::INFINITY, f64::min));
    let lambda = block.lambda.unwrap_or(1.0);
    Anisotropy::new(p, s.to_vec(), s0, lambda)
        .map_err(|e| ConfigError::from_core("anisotropy", e))
}

/// Expands the sweep lists into one anisotropy per `(p, s)` combination.
/// Every combination must pass the anisotropy preconditions; sweeping into
/// invalid orders is a configuration mistake, not a data point.
pub fn sweep_anisos(cfg: &Config) -> Result<Vec<Anisotropy>, ConfigError> {
    let block = cfg.anisotropy.as_ref().ok_or_else(|| {
        ConfigError::new("anisotropy", "this experiment needs the anisotropy block")
    })?;
    let p_list = cfg.sweeps.p.clone().unwrap_or_else(|| vec![block.p]);
    let s_list = cfg.sweeps.s.clone().unwrap_or_else(|| vec![block.s.clone()]);
    let n = block.s.len();
    let mut out = Vec::with_capacity(p_list.len() * s_list.len());
    for &p in &p_list {
        for s in &s_list {
            if s.len() != n {
                return Err(ConfigError::new(
                    "sweeps.s",
                    format!("order vector {s:?} has length {}, expected {n}", s.len()),
                ));
            }
            out.push(
                aniso_for(cfg, p, s).map_err(|e| ConfigError::new("sweeps", e.reason))?,
            );
        }
    }
    Ok(out)
}

/// Grid box and node counts for one anisotropy, from the `grid` block.
pub fn make_grid(cfg: &Config, a: &Anisotropy) -> Result<(Rect, Vec<usize>), ConfigError> {
    let radius = cfg.grid.box_radius.unwrap_or(2.0);
    let bx = a
        .rect(&vec![0.0; a.n()], radius)
        .map_err(|e| ConfigError::from_core("grid.box_radius", e))?;
    let sizes = cfg.grid.sizes.clone().unwrap_or_else(|| vec![33; a.n()]);
    if sizes.len() != a.n() {
        return Err(ConfigError::new(
            "grid.sizes",
            format!("got {} axes, the anisotropy has {}", sizes.len(), a.n()),
        ));
    }
    if sizes.iter().any(|&m| m < 3) {
        return Err(ConfigError::new(
            "grid.sizes",
            "need at least 3 nodes per axis",
        ));
    }
    Ok((bx, sizes))
}

/// Kernel family from the `kernel` block: `axes` (default), `one`, or
/// `sinsum`. Coefficient variants take the declared comparability bound or
/// the tightest admissible one.
pub fn make_family(cfg: &Config, a: &Anisotropy) -> Result<KernelFamily, ConfigError> {
    let variant = cfg.kernel.variant.as_deref().unwrap_or("axes");
    let coeff = match variant {
        "axes" => return Ok(KernelFamily::axes(a.clone())),
        "one" => Coefficient::One,
        "sinsum" => Coefficient::SinSum {
            amplitude: cfg.kernel.amplitude.unwrap_or(0.5),
        },
        other => {
            return Err(ConfigError::new(
                "kernel.variant",
                format!("unknown variant `{other}`; expected axes, one, or sinsum"),
            ))
        }
    };
    let (lo, hi) = coeff.range();
    let lambda = cfg
        .kernel
        .lambda
        .unwrap_or_else(|| if lo > 0.0 { hi.max(1.0 / lo) } else { 1.0 });
    KernelFamily::coefficient(a.clone(), coeff, lambda)
        .map_err(|e| ConfigError::from_core("kernel", e))
}

/// Instantiates a catalog function on the grid. `field` names the config
/// block in diagnostics.
pub fn make_input(
    spec: &FnSpec,
    bx: &Rect,
    sizes: &[usize],
    seed: u64,
    field: &str,
) -> Result<GridFunction, ConfigError> {
    let build = || -> fracp::Result<GridFunction> {
        match spec.kind.as_str() {
            "constant" => GridFunction::constant(
                bx.clone(),
                sizes,
                spec.value.unwrap_or(1.0),
                ExteriorRule::Zero,
            ),
            "bump" => testfns::smooth_bump(bx, sizes, spec.shrink.unwrap_or(0.8)),
            "tent" => testfns::tent(bx, sizes, spec.shrink.unwrap_or(0.8)),
            "random" => testfns::random_interior(bx, sizes, seed),
            other => Err(fracp::Error::invalid(
                "kind",
                format!("unknown function `{other}`; expected constant, bump, tent, or random"),
            )),
        }
    };
    let u = build().map_err(|e| ConfigError::from_core(field, e))?;
    let scale = spec.scale.unwrap_or(1.0);
    if !scale.is_finite() {
        return Err(ConfigError::new(
            format!("{field}.scale"),
            "need a finite scale",
        ));
    }
    if scale == 1.0 {
        return Ok(u);
    }
    let values: Vec<f64> = u.values().iter().map(|&v| v * scale).collect();
    GridFunction::new(bx.clone(), sizes, values, u.rule().clone())
        .map_err(|e| ConfigError::from_core(field, e))
}

pub fn ext_rule(spec: &ExtSpec, field: &str) -> Result<ExteriorRule, ConfigError> {
    match spec.kind.as_str() {
        "zero" => Ok(ExteriorRule::Zero),
        "constant" => Ok(ExteriorRule::Constant(spec.value.unwrap_or(0.0))),
        other => Err(ConfigError::new(
            format!("{field}.kind"),
            format!("unknown exterior rule `{other}`; expected zero or constant"),
        )),
    }
}

/// Default forcing integrability exponent `2n + 1`: above the dimension and,
/// whenever the critical exponent exists, above `p s_bar` too.
pub fn default_q(a: &Anisotropy) -> f64 {
    2.0 * a.n() as f64 + 1.0
}

/// Label like `0.5x0.75` for an order vector.
pub fn s_label(s: &[f64]) -> String {
    s.iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join("x")
}
