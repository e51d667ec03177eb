//! Weak Harnack sweep: solve the torsion problem for every exponent and
//! order combination, measure the empirical constant of the infimum bound,
//! and report how it moves across the sweep. Combinations without a
//! critical exponent are noted and skipped, not failed.

use fracp::grid::{ExteriorRule, GridFunction};
use fracp::solver::{solve, DirichletProblem};
use fracp::verify::{weak_harnack, HarnackInput};
use rayon::prelude::*;

use crate::config::{Config, ConfigError};
use crate::csvout::{num, Table};
use crate::svg::{polyline_plot, push_point, Series};

use super::{default_q, make_family, make_grid, s_label, sweep_anisos, Ctx, Outcome};

struct ComboOut {
    rows: Vec<Vec<String>>,
    points: Vec<(String, f64, f64)>,
    failures: Vec<String>,
    notes: Vec<String>,
}

const COLS: [&str; 15] = [
    "p",
    "s",
    "p0",
    "status",
    "c_emp",
    "inf",
    "avg",
    "tail",
    "forcing",
    "ladder_max",
    "log_bmo",
    "converged",
    "iterations",
    "residual",
    "note",
];

fn blank_rows(
    rows: &mut Vec<Vec<String>>,
    p: f64,
    label: &str,
    p0_list: &[f64],
    status: &str,
    note: &str,
) {
    for &p0 in p0_list {
        let mut row = vec![num(p), label.to_string(), num(p0), status.to_string()];
        row.extend(std::iter::repeat(String::new()).take(10));
        row.push(note.to_string());
        rows.push(row);
    }
}

pub fn run(cfg: &Config, _ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let anisos = sweep_anisos(cfg)?;
    if cfg.grid.box_radius.unwrap_or(2.0) < 1.0 {
        return Err(ConfigError::new(
            "grid.box_radius",
            "the rectangle chain needs a box of radius at least 1",
        ));
    }
    let grids = anisos
        .iter()
        .map(|a| make_grid(cfg, a))
        .collect::<Result<Vec<_>, _>>()?;
    make_family(cfg, &anisos[0])?;
    let p0_list = cfg.sweeps.p0.clone().unwrap_or_else(|| vec![0.5]);
    if p0_list.iter().any(|&p0| !p0.is_finite() || p0 <= 0.0) {
        return Err(ConfigError::new(
            "sweeps.p0",
            "average exponents must be positive",
        ));
    }
    let n = anisos[0].n() as f64;
    if let Some(q) = cfg.harnack.q {
        let need = anisos.iter().map(|a| a.p() * a.s_bar()).fold(n, f64::max);
        if !q.is_finite() || q <= need {
            return Err(ConfigError::new(
                "harnack.q",
                format!("need q > max(n, p s_bar) = {need}, got {q}"),
            ));
        }
    }
    let tol = cfg.harnack.tol.unwrap_or(1e-8);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ConfigError::new("harnack.tol", "need a positive tolerance"));
    }
    let max_iter = cfg.harnack.max_iter.unwrap_or(20_000);
    if max_iter == 0 {
        return Err(ConfigError::new(
            "harnack.max_iter",
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
            if a.p_star().is_none() {
                let note = format!(
                    "skipping p = {}, s = {label}: p s_bar >= n leaves no critical exponent",
                    a.p()
                );
                blank_rows(&mut co.rows, a.p(), &label, &p0_list, "skip", &note);
                co.notes.push(note);
                return co;
            }
            let q = cfg.harnack.q.unwrap_or_else(|| default_q(a));
            let fam = match make_family(cfg, a) {
                Ok(f) => f,
                Err(e) => {
                    blank_rows(&mut co.rows, a.p(), &label, &p0_list, "fail", &e.reason);
                    co.failures.push(e.reason);
                    return co;
                }
            };
            let f = GridFunction::constant(bx.clone(), sizes, 1.0, ExteriorRule::Zero)
                .expect("grid was validated");
            let prob = DirichletProblem::new(fam.clone(), f.clone(), ExteriorRule::Zero, q)
                .and_then(|p| p.with_tol(tol))
                .and_then(|p| p.with_max_iter(max_iter));
            let prob = match prob {
                Ok(p) => p,
                Err(e) => {
                    let msg = e.to_string();
                    blank_rows(&mut co.rows, a.p(), &label, &p0_list, "fail", &msg);
                    co.failures.push(msg);
                    return co;
                }
            };
            let sol = match solve(&prob) {
                Ok(s) => s,
                Err(e) => {
                    let msg = format!("torsion solve failed at p = {}, s = {label}: {e}", a.p());
                    blank_rows(&mut co.rows, a.p(), &label, &p0_list, "fail", &msg);
                    co.failures.push(msg);
                    return co;
                }
            };
            if !sol.converged {
                co.failures.push(format!(
                    "torsion solve at p = {}, s = {label} stopped at residual {}",
                    a.p(),
                    sol.residual
                ));
            }
            for &p0 in &p0_list {
                let rep = weak_harnack(&HarnackInput {
                    u: &sol.u,
                    f: &f,
                    fam: &fam,
                    p0,
                    q,
                });
                let mut row = vec![num(a.p()), label.clone(), num(p0)];
                match rep {
                    Ok(rep) => {
                        let ok = rep.pass && sol.converged;
                        row.push(if ok { "ok" } else { "fail" }.into());
                        for key in
                            ["c_emp", "inf", "avg", "tail", "forcing", "ladder_max", "log_bmo"]
                        {
                            row.push(rep.constant(key).map(num).unwrap_or_default());
                        }
                        row.push(sol.converged.to_string());
                        row.push(sol.iterations.to_string());
                        row.push(num(sol.residual));
                        row.push(String::new());
                        if !rep.pass {
                            co.failures.push(format!(
                                "weak Harnack check degenerate at p = {}, s = {label}, p0 = {p0}",
                                a.p()
                            ));
                        }
                        if let Some(c) = rep.constant("c_emp") {
                            co.points
                                .push((format!("p = {}, p0 = {p0}", a.p()), a.s_bar(), c));
                        }
                    }
                    Err(e) => {
                        let msg = format!(
                            "measurement failed at p = {}, s = {label}, p0 = {p0}: {e}",
                            a.p()
                        );
                        row.push("fail".into());
                        row.extend(std::iter::repeat(String::new()).take(10));
                        row.push(msg.clone());
                        co.failures.push(msg);
                    }
                }
                co.rows.push(row);
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
    for s in &mut series {
        s.points.sort_by(|u, v| u.0.total_cmp(&v.0));
    }
    out.add("harnack.csv", table.to_bytes());
    if !series.is_empty() {
        out.add(
            "harnack.svg",
            polyline_plot(
                "weak Harnack constant across orders",
                "s_bar",
                "c_emp",
                &series,
                false,
            ),
        );
    }
    Ok(out)
}
