//! One Dirichlet solve: the solution grid, the sweep log, a summary row,
//! and a residual-history plot.

use fracp::grid::energy;
use fracp::solver::{solve, DirichletProblem, SweepMode};

use crate::config::{Config, ConfigError};
use crate::csvout::{num, Table};
use crate::svg::{polyline_plot, Series};

use super::{
    base_aniso, default_q, ext_rule, make_family, make_grid, make_input, s_label, Ctx, Outcome,
};

pub fn run(cfg: &Config, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let a = base_aniso(cfg)?;
    let fam = make_family(cfg, &a)?;
    let (bx, sizes) = make_grid(cfg, &a)?;
    let f = make_input(&cfg.solve.f, &bx, &sizes, ctx.task_seed(0), "solve.f")?;
    let g = ext_rule(&cfg.solve.g, "solve.g")?;
    let q = cfg.solve.q.unwrap_or_else(|| default_q(&a));
    let mut prob = DirichletProblem::new(fam.clone(), f, g, q)
        .map_err(|e| ConfigError::from_core("solve", e))?;
    if let Some(tol) = cfg.solve.tol {
        prob = prob
            .with_tol(tol)
            .map_err(|e| ConfigError::from_core("solve.tol", e))?;
    }
    if let Some(mi) = cfg.solve.max_iter {
        prob = prob
            .with_max_iter(mi)
            .map_err(|e| ConfigError::from_core("solve.max_iter", e))?;
    }
    if let Some(mode) = cfg.solve.mode.as_deref() {
        let m = match mode {
            "sequential" => SweepMode::Sequential,
            "redblack" => SweepMode::RedBlack,
            other => {
                return Err(ConfigError::new(
                    "solve.mode",
                    format!("unknown mode `{other}`; expected sequential or redblack"),
                ))
            }
        };
        prob = prob.with_mode(m);
    }

    let mut out = Outcome::default();
    let mut table = Table::new(&[
        "p",
        "s",
        "nodes",
        "q",
        "tol",
        "iterations",
        "residual",
        "converged",
        "u_min",
        "u_max",
        "box_energy",
        "status",
        "note",
    ]);
    let nodes: usize = sizes.iter().product();

    match solve(&prob) {
        Ok(sol) => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in sol.u.values() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let e = energy(&sol.u, &sol.u, &fam, sol.u.bx()).unwrap_or(f64::NAN);
            let (status, note) = if sol.converged {
                ("ok".to_string(), String::new())
            } else {
                let msg = format!(
                    "sweep budget exhausted: residual {} after {} sweeps",
                    sol.residual, sol.iterations
                );
                out.failures.push(msg.clone());
                ("fail".to_string(), msg)
            };
            table.push(vec![
                num(a.p()),
                s_label(a.s()),
                nodes.to_string(),
                num(q),
                num(prob.tol()),
                sol.iterations.to_string(),
                num(sol.residual),
                sol.converged.to_string(),
                num(lo),
                num(hi),
                num(e),
                status,
                note,
            ]);
            out.add("solution.csv", sol.u.to_csv().into_bytes());
            out.add("sweeps.csv", sol.log_csv().into_bytes());
            let pts: Vec<(f64, f64)> = sol
                .log
                .iter()
                .map(|r| (r.sweep as f64, r.residual))
                .collect();
            out.add(
                "solve.svg",
                polyline_plot(
                    "residual history",
                    "sweep",
                    "residual",
                    &[Series {
                        label: "residual".into(),
                        points: pts,
                    }],
                    true,
                ),
            );
            out.notes.push(format!(
                "solved in {} sweeps, residual {:.3e}",
                sol.iterations, sol.residual
            ));
        }
        Err(e) => {
            let msg = format!("solve failed: {e}");
            out.failures.push(msg.clone());
            table.push(vec![
                num(a.p()),
                s_label(a.s()),
                nodes.to_string(),
                num(q),
                num(prob.tol()),
                "0".into(),
                String::new(),
                "false".into(),
                String::new(),
                String::new(),
                String::new(),
                "fail".into(),
                msg,
            ]);
        }
    }
    out.artifacts.insert(0, ("solve.csv".into(), table.to_bytes()));
    Ok(out)
}
