//! JSON experiment configuration: parsing, defaults, and validation with
//! line-anchored diagnostics. Range checks are delegated to the library
//! constructors wherever one exists, so the CLI cannot drift from the
//! documented preconditions; this layer only maps their errors back to the
//! offending config field.

use std::fmt;

use serde::Deserialize;

pub const EXPERIMENTS: &[&str] = &[
    "solve",
    "harnack",
    "hoelder",
    "sobolev",
    "poincare",
    "maximal",
    "goodlambda",
    "dyadic",
    "convergence",
    "ineq",
];

/// A rejected configuration: the offending field, the reason, and the line
/// (1-based) carrying the field's key in the raw text when it can be found.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
    pub line: Option<usize>,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
            line: None,
        }
    }

    /// Wraps a library error as a config error under `block.name`.
    pub fn from_core(block: &str, e: fracp::Error) -> Self {
        match e {
            fracp::Error::InvalidParameter { name, reason } => {
                Self::new(format!("{block}.{name}"), reason)
            }
            other => Self::new(block.to_string(), other.to_string()),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: field `{}`: {}", self.field, self.reason),
            None => write!(f, "field `{}`: {}", self.field, self.reason),
        }
    }
}

/// Finds the line of the field's leaf key in the raw text. Dotted paths
/// anchor on their last segment; a miss leaves the error unanchored.
pub fn anchor(raw: &str, mut e: ConfigError) -> ConfigError {
    if e.line.is_some() {
        return e;
    }
    let leaf = e.field.rsplit('.').next().unwrap_or(&e.field);
    let needle = format!("\"{leaf}\"");
    for (i, line) in raw.lines().enumerate() {
        if line.contains(&needle) {
            e.line = Some(i + 1);
            return e;
        }
    }
    e
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// One of [`EXPERIMENTS`].
    pub experiment: String,
    /// Output directory; the `--out` flag overrides it.
    pub out: Option<String>,
    /// Base seed; the `--seed` flag overrides it.
    pub seed: Option<u64>,
    pub anisotropy: Option<AnisotropyCfg>,
    #[serde(default)]
    pub kernel: KernelCfg,
    #[serde(default)]
    pub grid: GridCfg,
    #[serde(default)]
    pub sweeps: SweepCfg,
    #[serde(default)]
    pub solve: SolveCfg,
    #[serde(default)]
    pub harnack: HarnackCfg,
    #[serde(default)]
    pub hoelder: HoelderCfg,
    #[serde(default)]
    pub functional: FunctionalCfg,
    #[serde(default)]
    pub maximal: MaximalCfg,
    #[serde(default)]
    pub goodlambda: GoodLambdaCfg,
    #[serde(default)]
    pub dyadic: DyadicCfg,
    #[serde(default)]
    pub convergence: ConvergenceCfg,
    #[serde(default)]
    pub ineq: IneqCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyCfg {
    pub p: f64,
    pub s: Vec<f64>,
    /// Uniform lower order bound; defaults to `min s_k`.
    pub s0: Option<f64>,
    /// Comparability constant; defaults to the axes-family value.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelCfg {
    /// `axes` (default), `one`, or `sinsum`.
    pub variant: Option<String>,
    /// Coefficient amplitude for `sinsum`.
    pub amplitude: Option<f64>,
    /// Declared comparability bound for coefficient variants.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    /// Nodes per axis; defaults to 33 on every axis.
    pub sizes: Option<Vec<usize>>,
    /// Metric radius of the computational box; defaults to 2.
    pub box_radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// Exponents to sweep; defaults to the anisotropy block's `p`.
    pub p: Option<Vec<f64>>,
    /// Order vectors to sweep; defaults to the anisotropy block's `s`.
    pub s: Option<Vec<Vec<f64>>>,
    /// Moment exponents for the weak Harnack average; defaults to `[0.5]`.
    pub p0: Option<Vec<f64>>,
}

/// Right-hand sides and test functions from a small catalog.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnSpec {
    /// `constant`, `bump`, `tent`, or `random`.
    pub kind: String,
    /// Value for `constant`.
    pub value: Option<f64>,
    /// Support shrink factor for `bump`/`tent`, in (0, 1]; default 0.8.
    pub shrink: Option<f64>,
    /// Multiplies the catalog function; default 1.
    pub scale: Option<f64>,
}

impl Default for FnSpec {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            value: Some(1.0),
            shrink: None,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtSpec {
    /// `zero` or `constant`.
    pub kind: String,
    pub value: Option<f64>,
}

impl Default for ExtSpec {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            value: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveCfg {
    #[serde(default)]
    pub f: FnSpec,
    #[serde(default)]
    pub g: ExtSpec,
    /// Forcing integrability exponent; must exceed the dimension.
    pub q: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// `sequential` (default) or `redblack`.
    pub mode: Option<String>,
}

impl Default for SolveCfg {
    fn default() -> Self {
        Self {
            f: FnSpec::default(),
            g: ExtSpec::default(),
            q: None,
            tol: None,
            max_iter: None,
            mode: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HarnackCfg {
    pub q: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoelderCfg {
    /// Decay center; defaults to the origin.
    pub center: Option<Vec<f64>>,
    /// Include the smooth manufactured function rows; default true.
    pub manufactured: Option<bool>,
    /// Include the torsion solution rows; default true.
    pub torsion: Option<bool>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

impl Default for HoelderCfg {
    fn default() -> Self {
        Self {
            center: None,
            manufactured: None,
            torsion: None,
            tol: None,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LocalCfg {
    pub r: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalCfg {
    /// Test function; default is the smooth bump.
    pub f: Option<FnSpec>,
    /// Rectangle radius for the Poincare form; default 1.
    pub r: Option<f64>,
    /// Adds localized rows to the `sobolev` experiment when present.
    pub local: Option<LocalCfg>,
}

impl Default for FunctionalCfg {
    fn default() -> Self {
        Self {
            f: None,
            r: None,
            local: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MaximalCfg {
    /// Number of random compactly supported inputs; default 100.
    pub count: Option<usize>,
    pub g_min: Option<i32>,
    pub g_max: Option<i32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GoodLambdaCfg {
    /// Number of random inputs aggregated per level; default 20.
    pub count: Option<usize>,
    /// Deviation fractions; default `[0.05, 0.1, 0.2]`.
    pub gammas: Option<Vec<f64>>,
    /// Dyadic level count below the peak; default 6.
    pub levels: Option<usize>,
    pub g_min: Option<i32>,
    pub g_max: Option<i32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DyadicCfg {
    /// Coarsest generation; default -2.
    pub g_min: Option<i32>,
    /// Finest generation; default 5.
    pub g_max: Option<i32>,
    /// Metric radius of the checked window; default 1.
    pub window_radius: Option<f64>,
    /// Also write the rectangle list as text; default false.
    pub dump_rects: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileCfg {
    /// `sine` or `gaussian`.
    pub kind: String,
    pub amp: Option<f64>,
    pub freq: Option<f64>,
    pub phase: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceCfg {
    /// One profile per axis; defaults to a single sine.
    pub profiles: Option<Vec<ProfileCfg>>,
    /// Evaluation points, one coordinate per profile.
    pub points: Option<Vec<Vec<f64>>>,
    /// Orders approaching 1; default `[0.9, 0.99, 0.999]`.
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IneqCfg {
    /// Samples per lemma; default 1e6.
    pub samples: Option<u64>,
    /// Lemma names to run; default all six.
    pub lemmas: Option<Vec<String>>,
}

/// Parses and shape-checks the raw JSON. Semantic validation happens in
/// the experiment planners, which see the merged flag overrides.
pub fn parse(raw: &str) -> Result<Config, ConfigError> {
    let cfg: Config = serde_json::from_str(raw).map_err(|e| ConfigError {
        field: "config".into(),
        reason: e.to_string(),
        line: Some(e.line()).filter(|&l| l > 0),
    })?;
    if !EXPERIMENTS.contains(&cfg.experiment.as_str()) {
        return Err(anchor(
            raw,
            ConfigError::new(
                "experiment",
                format!(
                    "unknown experiment `{}`; expected one of {}",
                    cfg.experiment,
                    EXPERIMENTS.join(", ")
                ),
            ),
        ));
    }
    Ok(cfg)
}
