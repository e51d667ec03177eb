//! Oscillation decay: fit the decay exponent of `osc_{M_rho(center)} u`
//! over the dyadic radii the grid resolves, for a manufactured smooth
//! function and for the torsion solution, across the exponent sweep. The
//! per-scale oscillations land in a log-log plot.

use fracp::geometry::{Anisotropy, Rect};
use fracp::grid::{ExteriorRule, GridFunction};
use fracp::solver::{solve, DirichletProblem};
use fracp::verify::{hoelder_decay, testfns};
use rayon::prelude::*;

use crate::config::{Config, ConfigError};
use crate::csvout::{num, Table};
use crate::svg::{polyline_plot, push_point, Series};

use super::{default_q, make_family, make_grid, s_label, sweep_anisos, Ctx, Outcome};

const COLS: [&str; 8] = [
    "p",
    "s",
    "input",
    "status",
    "alpha_hat",
    "scales_used",
    "scales_total",
    "note",
];

/// Dyadic radii `4^{-k}` that resolve on the grid and fit around the
/// center, mirroring the decay fit's own scale selection.
fn scale_count(a: &Anisotropy, bx: &Rect, sizes: &[usize], center: &[f64]) -> usize {
    let n = a.n();
    let delta: Vec<f64> = (0..n)
        .map(|k| 2.0 * bx.half_widths()[k] / (sizes[k] as f64 - 1.0))
        .collect();
    let mut count = 0;
    for k in 0..64 {
        let rho = 4f64.powi(-k);
        let resolvable = (0..n).all(|j| rho.powf(a.exponent(j)) >= delta[j] * (1.0 - 1e-12));
        if !resolvable {
            break;
        }
        let fits = (0..n).all(|j| {
            (center[j] - bx.center()[j]).abs() + rho.powf(a.exponent(j))
                <= bx.half_widths()[j] * (1.0 + 1e-12)
        });
        if fits {
            count += 1;
        }
    }
    count
}

struct ComboOut {
    rows: Vec<Vec<String>>,
    points: Vec<(String, f64, f64)>,
    failures: Vec<String>,
    notes: Vec<String>,
}

fn skip_row(co: &mut ComboOut, p: f64, label: &str, input: &str, status: &str, note: &str) {
    co.rows.push(vec![
        num(p),
        label.to_string(),
        input.to_string(),
        status.to_string(),
        String::new(),
        String::new(),
        String::new(),
        note.to_string(),
    ]);
}

fn measure(
    co: &mut ComboOut,
    a: &Anisotropy,
    label: &str,
    center: &[f64],
    input: &str,
    u: &GridFunction,
    extra_note: String,
) {
    match hoelder_decay(u, a, center) {
        Ok(rep) => {
            let status = if rep.pass && extra_note.is_empty() {
                "ok"
            } else {
                "fail"
            };
            if !rep.pass {
                co.failures.push(format!(
                    "no positive decay exponent for the {input} input at p = {}, s = {label}",
                    a.p()
                ));
            }
            co.rows.push(vec![
                num(a.p()),
                label.to_string(),
                input.to_string(),
                status.to_string(),
                num(rep.worst_margin),
                rep.constant("scales_used").map(num).unwrap_or_default(),
                rep.constant("scales_total").map(num).unwrap_or_default(),
                extra_note,
            ]);
            let curve = format!("{input}: p = {}, s = {label}", a.p());
            for pt in &rep.series {
                co.points.push((curve.clone(), pt.x, pt.y));
            }
        }
        Err(e) => {
            let msg = format!(
                "decay fit failed for the {input} input at p = {}, s = {label}: {e}",
                a.p()
            );
            skip_row(co, a.p(), label, input, "fail", &msg);
            co.failures.push(msg);
        }
    }
}

pub fn run(cfg: &Config, _ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let anisos = sweep_anisos(cfg)?;
    let grids = anisos
        .iter()
        .map(|a| make_grid(cfg, a))
        .collect::<Result<Vec<_>, _>>()?;
    make_family(cfg, &anisos[0])?;
    let n = anisos[0].n();
    let center = cfg.hoelder.center.clone().unwrap_or_else(|| vec![0.0; n]);
    if center.len() != n {
        return Err(ConfigError::new(
            "hoelder.center",
            format!("got {} coordinates, the anisotropy has {n}", center.len()),
        ));
    }
    for (a, (bx, _)) in anisos.iter().zip(&grids) {
        for j in 0..n {
            if (center[j] - bx.center()[j]).abs() >= bx.half_widths()[j] {
                return Err(ConfigError::new(
                    "hoelder.center",
                    format!(
                        "coordinate {j} leaves the box for p = {}, s = {}",
                        a.p(),
                        s_label(a.s())
                    ),
                ));
            }
        }
    }
    let manufactured = cfg.hoelder.manufactured.unwrap_or(true);
    let torsion = cfg.hoelder.torsion.unwrap_or(true);
    if !manufactured && !torsion {
        return Err(ConfigError::new(
            "hoelder.manufactured",
            "nothing to run: enable the manufactured input, the torsion input, or both",
        ));
    }
    let tol = cfg.hoelder.tol.unwrap_or(1e-8);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ConfigError::new("hoelder.tol", "need a positive tolerance"));
    }
    let max_iter = cfg.hoelder.max_iter.unwrap_or(20_000);
    if max_iter == 0 {
        return Err(ConfigError::new(
            "hoelder.max_iter",
            "need at least one sweep",
        ));
    }

    let combos: Vec<ComboOut> = anisos
        .par_iter()
        .zip(&grids)
        .map(|(a, (bx, sizes))| {
            let mut co = ComboOut {
                rows: Vec::new(),
                points: Vec::new(),
                failures: Vec::new(),
                notes: Vec::new(),
            };
            let label = s_label(a.s());
            let scales = scale_count(a, bx, sizes, &center);
            if scales < 3 {
                let note = format!(
                    "skipping p = {}, s = {label}: the grid resolves {scales} dyadic scales \
                     around the center, the fit needs 3",
                    a.p()
                );
                if manufactured {
                    skip_row(&mut co, a.p(), &label, "manufactured", "skip", &note);
                }
                if torsion {
                    skip_row(&mut co, a.p(), &label, "torsion", "skip", &note);
                }
                co.notes.push(note);
                return co;
            }

            if manufactured {
                match testfns::smooth_bump(bx, sizes, 1.0) {
                    Ok(u) => measure(&mut co, a, &label, &center, "manufactured", &u, String::new()),
                    Err(e) => co.failures.push(e.to_string()),
                }
            }
            if torsion {
                if a.p_star().is_none() {
                    let note = format!(
                        "skipping the torsion input at p = {}, s = {label}: p s_bar >= n",
                        a.p()
                    );
                    skip_row(&mut co, a.p(), &label, "torsion", "skip", &note);
                    co.notes.push(note);
                } else {
                    let build = || -> fracp::Result<fracp::Solution> {
                        let fam = fracp::KernelFamily::axes(a.clone());
                        let f = GridFunction::constant(bx.clone(), sizes, 1.0, ExteriorRule::Zero)?;
                        let prob = DirichletProblem::new(fam, f, ExteriorRule::Zero, default_q(a))?
                            .with_tol(tol)?
                            .with_max_iter(max_iter)?;
                        solve(&prob)
                    };
                    match build() {
                        Ok(sol) => {
                            let extra = if sol.converged {
                                String::new()
                            } else {
                                let msg = format!(
                                    "torsion solve at p = {}, s = {label} stopped at residual {}",
                                    a.p(),
                                    sol.residual
                                );
                                co.failures.push(msg.clone());
                                msg
                            };
                            measure(&mut co, a, &label, &center, "torsion", &sol.u, extra);
                        }
                        Err(e) => {
                            let msg =
                                format!("torsion solve failed at p = {}, s = {label}: {e}", a.p());
                            skip_row(&mut co, a.p(), &label, "torsion", "fail", &msg);
                            co.failures.push(msg);
                        }
                    }
                }
            }
            co
        })
        .collect();

    let mut out = Outcome::default();
    let mut table = Table::new(&COLS);
    let mut series: Vec<Series> = Vec::new();
    for co in combos {
        table.extend(co.rows);
        for (label, x, y) in co.points {
            push_point(&mut series, &label, x, y);
        }
        out.failures.extend(co.failures);
        out.notes.extend(co.notes);
    }
    out.add("hoelder.csv", table.to_bytes());
    if !series.is_empty() {
        out.add(
            "hoelder.svg",
            polyline_plot(
                "oscillation decay over dyadic rectangles",
                "rho",
                "osc",
                &series,
                true,
            ),
        );
    }
    Ok(out)
}
