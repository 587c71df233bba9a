use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nullwave::diagnostics::{
    energy_identity_residual, energy_norms, equation_residual, focusing_report, interior_trace, lbar_l2_on_cu,
    linf_table, sobolev_ratio, trace_on_cbar_delta, Multiplier, DEFAULT_TUBE_MARGIN,
};
use nullwave::experiments::{
    run_delta_sweep, run_grid_convergence, run_u0_convergence, ConvergenceReport, ScalingReport, SlopeCheck,
    Verdict,
};
use nullwave::nullform::suite::{run_suite, SuiteOptions};
use nullwave::pulse::build_data;
use nullwave::solver::march;

use crate::config::RunConfig;
use crate::output::{self, num, Table};
use crate::{Cli, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_PROPERTY};

const FOCUS_QUANTITIES: [&str; 4] = ["out_tube_energy", "in_tube_defect", "cbar_delta_flux", "lphi_drift"];

pub fn verify_algebra(samples: usize, corrupt_basis: bool) -> u8 {
    let report = run_suite(&SuiteOptions {
        samples,
        corrupt_basis,
        ..SuiteOptions::default()
    });
    println!("dimension: {}", report.dimension);
    for row in &report.rows {
        println!("{:<34} {:<4} {}", row.name, if row.passed { "ok" } else { "FAIL" }, row.detail);
    }
    let failing = report.failing();
    if failing.is_empty() {
        EXIT_OK
    } else {
        eprintln!("failing properties: {}", failing.join(", "));
        EXIT_PROPERTY
    }
}

struct Context {
    cfg: RunConfig,
    hash: String,
    dir: PathBuf,
    workers: usize,
}

fn context(cli: &Cli) -> Result<Context> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let hash = output::config_hash(&cfg.canonical_json());
    let dir = cfg.output_path(cli.output_root.as_deref());
    let workers = cli.workers.unwrap_or(cfg.worker_count).max(1);
    Ok(Context { cfg, hash, dir, workers })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

#[derive(Serialize)]
struct Manifest<'a, P: Serialize, S: Serialize> {
    command: &'a str,
    plan: &'a P,
    config_hash: &'a str,
    git_describe: &'a str,
    runs: Vec<serde_json::Value>,
    outputs: Vec<String>,
    slopes: &'a S,
    verdict: Verdict,
}

fn rel(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).display().to_string()
}

pub fn run(cli: &Cli) -> Result<u8> {
    let ctx = context(cli)?;
    let setup = ctx.cfg.run_setup()?;
    output::prepare_dir(&ctx.dir, cli.force)?;
    let data = build_data(&setup.profile, &setup.grid)?;
    let start = Instant::now();
    let state = match march(&data, &setup.spec, &setup.grid, &setup.solver) {
        Ok(s) => s,
        Err(nullwave::Error::Breakdown { u, ubar, value, threshold }) => {
            let report = json!({
                "status": "breakdown", "u": u, "ubar": ubar, "value": value, "threshold": threshold,
                "git_describe": output::GIT_DESCRIBE,
            });
            output::write_json(&ctx.dir.join("breakdown.json"), &report, &ctx.hash)?;
            eprintln!("breakdown at u = {u}, ubar = {ubar}: |psi| = {value:e}");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e.into()),
    };
    let seconds = start.elapsed().as_secs_f64();
    let g = &state.grid;
    let (nu, nub, _) = g.dims();

    output::write_snapshot(&ctx.dir, "psi", &state.psi, g, &ctx.hash)?;

    let mut table = Table::new(&[
        "u", "e1", "e2", "e3", "ebar1", "ebar2", "ebar3", "f1", "f2", "fbar1", "fbar2", "lbar_l2", "w_lphi",
        "w_ang_phi", "w_lbarphi", "w_l_ang_phi", "w_ang2_phi", "w_lbar_ang_phi",
    ]);
    let linf = linf_table(&state);
    for (i, row) in linf.iter().enumerate() {
        let n = energy_norms(&state, i, nub - 1);
        let mut cells = vec![num(g.u(i))];
        cells.extend(n.e.iter().chain(&n.ebar).chain(&n.f).chain(&n.fbar).map(|v| num(*v)));
        cells.push(num(lbar_l2_on_cu(&state, i).norm));
        cells.extend(row.weighted(g.delta()).iter().map(|v| num(*v)));
        table.push(cells);
    }
    table.write(&ctx.dir.join("diagnostics.csv"), &ctx.hash)?;

    let final_norms = energy_norms(&state, nu - 1, nub - 1);
    let identity: Vec<_> = [Multiplier::L, Multiplier::Lbar, Multiplier::Omega]
        .iter()
        .map(|&x| energy_identity_residual(&state, x, nu - 1, nub - 1))
        .collect();
    let focusing = match setup.profile.cap_radius(g.delta()) {
        Some(cap) if g.mode() == nullwave::AngularMode::Axisym => {
            Some(focusing_report(&state, cap, DEFAULT_TUBE_MARGIN)?)
        }
        _ => None,
    };
    let summary = json!({
        "status": "done",
        "dims": g.dims(),
        "delta": g.delta(),
        "u0": g.u0(),
        "amplitude": setup.profile.amplitude,
        "E1_final": final_norms.e[0],
        "norms_final": final_norms,
        "lbar_l2_final": lbar_l2_on_cu(&state, nu - 1),
        "exit_weighted_lphi": trace_on_cbar_delta(&state).weighted_lphi(),
        "interior_weighted_lphi": interior_trace(&state).weighted_lphi(),
        "sobolev_ratio_final": sobolev_ratio(&state, nu - 1, nub - 1),
        "equation_residual": equation_residual(&state),
        "identity": identity,
        "focusing": focusing.map(|f| json!({
            "tube_angle": f.tube_angle,
            "out_tube_energy": f.out_tube_energy,
            "in_tube_defect": f.in_tube_defect,
            "cbar_delta_flux": f.cbar_delta_flux,
            "cbar_delta_flux_lbar": f.cbar_delta_flux_lbar,
            "lphi_drift": f.lphi_drift,
            "lphi_drift_weighted": f.lphi_drift_weighted,
        })),
        "stats": state.stats,
        "seconds": seconds,
        "git_describe": output::GIT_DESCRIBE,
    });
    output::write_json(&ctx.dir.join("summary.json"), &summary, &ctx.hash)?;
    for w in &state.stats.warnings {
        eprintln!("warning: {w}");
    }
    println!("E1(-1, delta) = {:.6e}; outputs in {}", final_norms.e[0], ctx.dir.display());
    Ok(EXIT_OK)
}

fn slope_table(slopes: &[&SlopeCheck]) -> Table {
    let mut t = Table::new(&[
        "quantity", "expected_exponent", "threshold", "bound", "slope", "intercept", "r2", "points", "verdict",
    ]);
    for s in slopes {
        t.push(vec![
            s.quantity.clone(),
            num(s.expected_exponent),
            num(s.threshold),
            format!("{:?}", s.bound).to_lowercase(),
            num(s.fit.slope),
            num(s.fit.intercept),
            num(s.fit.r2),
            s.fit.used.to_string(),
            format!("{:?}", s.verdict).to_lowercase(),
        ]);
    }
    t
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn delta_rows(report: &ScalingReport) -> Table {
    let mut t = Table::new(&[
        "delta", "status", "amplitude", "e1", "e2", "e3", "lbar_l2", "sup_lbar", "exit_lphi", "interior_lphi",
        "sobolev_ratio", "out_tube_energy", "in_tube_defect", "cbar_delta_flux", "cbar_delta_flux_lbar",
        "lphi_drift", "lphi_drift_weighted", "in_tube_ratio", "max_contraction",
    ]);
    for r in &report.rows {
        let status = serde_json::to_value(&r.status).ok().and_then(|v| v["status"].as_str().map(String::from));
        let f = r.focusing.as_ref();
        let mut row = vec![num(r.delta), status.unwrap_or_default(), num(r.amplitude)];
        row.extend((0..3).map(|k| opt(r.norms.map(|n| n.e[k]))));
        row.extend([r.lbar_l2, r.sup_lbar, r.exit_lphi, r.interior_lphi, r.sobolev_ratio].map(num));
        row.extend(
            [
                f.map(|f| f.out_tube_energy),
                f.map(|f| f.in_tube_defect),
                f.map(|f| f.cbar_delta_flux),
                f.map(|f| f.cbar_delta_flux_lbar),
                f.map(|f| f.lphi_drift),
                f.map(|f| f.lphi_drift_weighted),
                f.map(|f| f.in_tube_ratio),
            ]
            .map(opt),
        );
        row.push(num(r.max_contraction));
        t.push(row);
    }
    t
}

pub fn sweep(cli: &Cli, focus: bool) -> Result<u8> {
    let ctx = context(cli)?;
    let plan = if focus { ctx.cfg.focus_plan()? } else { ctx.cfg.sweep_plan()? };
    output::prepare_dir(&ctx.dir, cli.force)?;
    let report = run_delta_sweep(&plan, ctx.workers)?;

    let mut outputs = Vec::new();
    let rows_path = ctx.dir.join("sweep_rows.csv");
    delta_rows(&report).write(&rows_path, &ctx.hash)?;
    outputs.push(rows_path);
    let all: Vec<&SlopeCheck> = report.slopes.iter().collect();
    let slopes_path = ctx.dir.join("slopes.csv");
    slope_table(&all).write(&slopes_path, &ctx.hash)?;
    outputs.push(slopes_path);

    let verdict = if focus {
        let picked: Vec<&SlopeCheck> = FOCUS_QUANTITIES.iter().filter_map(|q| report.slope(q)).collect();
        let path = ctx.dir.join("focusing_slopes.csv");
        slope_table(&picked).write(&path, &ctx.hash)?;
        outputs.push(path);
        if picked.len() < FOCUS_QUANTITIES.len() {
            Verdict::Inconclusive
        } else {
            Verdict::combine(picked.iter().map(|s| s.verdict).chain((report.breakdowns > 0).then_some(Verdict::Fail)))
        }
    } else {
        report.verdict
    };

    let summary_path = ctx.dir.join("summary.json");
    output::write_json(&summary_path, &report, &ctx.hash)?;
    outputs.push(summary_path);

    if cli.plots {
        let series: Vec<(&str, Vec<(f64, f64)>)> = [
            ("lbar_l2", report.rows.iter().map(|r| (r.delta, r.lbar_l2)).collect()),
            ("sup_lbar", report.rows.iter().map(|r| (r.delta, r.sup_lbar)).collect()),
            ("exit_lphi", report.rows.iter().map(|r| (r.delta, r.exit_lphi)).collect()),
            ("interior_lphi", report.rows.iter().map(|r| (r.delta, r.interior_lphi)).collect()),
        ]
        .into_iter()
        .collect();
        let path = ctx.dir.join("sweep.svg");
        output::write_loglog_svg(&path, "delta sweep", &series, &ctx.hash)?;
        outputs.push(path);
    }

    let runs = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "delta": r.delta,
                "config_hash": output::config_hash(&format!("{}#delta={:e}", ctx.cfg.canonical_json(), r.delta)),
                "status": r.status,
            })
        })
        .collect();
    let manifest = Manifest {
        command: if focus { "focus" } else { "sweep" },
        plan: &plan,
        config_hash: &ctx.hash,
        git_describe: output::GIT_DESCRIBE,
        runs,
        outputs: outputs.iter().map(|p| rel(&ctx.dir, p)).collect(),
        slopes: &report.slopes,
        verdict,
    };
    output::write_json(&ctx.dir.join("manifest.json"), &manifest, &ctx.hash)?;

    for s in &report.slopes {
        println!(
            "{:<18} slope {:>8.3}  r2 {:.3}  threshold {:>5.2}  {:?}",
            s.quantity, s.fit.slope, s.fit.r2, s.threshold, s.verdict
        );
    }
    for b in &report.boundedness {
        println!("{:<18} spread {:.3} (limit {})  {:?}", b.quantity, b.ratio, b.limit, b.verdict);
    }
    println!("verdict: {verdict:?}");
    Ok(verdict_code(verdict))
}

fn convergence_verdict(r: &ConvergenceReport) -> Verdict {
    let within = |o: &Option<Vec<f64>>, tol: f64| o.as_ref().map(|v| v.iter().all(|x| (x - 2.0).abs() <= tol));
    match (within(&r.linear_orders, 0.2), within(&r.nonlinear_orders, 0.3)) {
        (Some(true), Some(true)) => Verdict::Pass,
        (Some(false), _) | (_, Some(false)) => Verdict::Fail,
        _ => Verdict::Inconclusive,
    }
}

pub fn converge(cli: &Cli) -> Result<u8> {
    let ctx = context(cli)?;
    let grid_plan = ctx.cfg.convergence_plan()?;
    let u0_plan = ctx.cfg.u0_plan()?;
    output::prepare_dir(&ctx.dir, cli.force)?;

    let conv = run_grid_convergence(&grid_plan, ctx.workers)?;
    let u0 = run_u0_convergence(&u0_plan, &ctx.cfg.experiment.u0_list, ctx.workers)?;

    let mut t = Table::new(&["level", "linear_error", "nonlinear_diff", "identity_l", "identity_lbar"]);
    for l in 0..conv.linear_errors.len() {
        t.push(vec![
            l.to_string(),
            num(conv.linear_errors[l]),
            opt(conv.nonlinear_diffs.get(l).copied()),
            num(conv.identity_l[l]),
            num(conv.identity_lbar[l]),
        ]);
    }
    let conv_path = ctx.dir.join("convergence.csv");
    t.write(&conv_path, &ctx.hash)?;

    let mut t = Table::new(&["u0_near", "u0_far", "lphi_diff", "radiation_drift"]);
    for p in &u0.pairs {
        t.push(vec![num(p.u0_near), num(p.u0_far), num(p.lphi_diff), num(p.radiation_drift)]);
    }
    let u0_path = ctx.dir.join("u0_pairs.csv");
    t.write(&u0_path, &ctx.hash)?;

    let grid_verdict = convergence_verdict(&conv);
    let verdict = Verdict::combine([grid_verdict, u0.verdict]);
    let summary_path = ctx.dir.join("summary.json");
    output::write_json(
        &summary_path,
        &json!({ "grid": conv, "grid_verdict": grid_verdict, "u0": u0, "verdict": verdict }),
        &ctx.hash,
    )?;

    let orders = json!({ "linear": conv.linear_orders, "nonlinear": conv.nonlinear_orders });
    let manifest = Manifest {
        command: "converge",
        plan: &json!({ "grid": grid_plan, "u0": u0_plan, "u0_list": ctx.cfg.experiment.u0_list }),
        config_hash: &ctx.hash,
        git_describe: output::GIT_DESCRIBE,
        runs: Vec::new(),
        outputs: [conv_path, u0_path, summary_path].iter().map(|p| rel(&ctx.dir, p)).collect(),
        slopes: &orders,
        verdict,
    };
    output::write_json(&ctx.dir.join("manifest.json"), &manifest, &ctx.hash)?;

    println!("linear orders {:?}", conv.linear_orders);
    println!("nonlinear orders {:?}", conv.nonlinear_orders);
    for p in &u0.pairs {
        println!("u0 {} vs {}: lphi diff {:.3e}", p.u0_near, p.u0_far, p.lphi_diff);
    }
    println!("verdict: {verdict:?}");
    Ok(verdict_code(verdict))
}
