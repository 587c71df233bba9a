//! End-to-end acceptance run. Prints one PASS/FAIL line per check and exits
//! non-zero when any check fails.

use std::time::Instant;

use nullwave::diagnostics::{deformation_density, energy_identity_residual, Multiplier};
use nullwave::experiments::{
    fit_exponent, run_delta_sweep, run_grid_convergence, run_u0_convergence, ConvergencePlan,
    ScalingReport, SweepPlan, Verdict,
};
use nullwave::nullform::suite::{run_suite, SuiteOptions, PROP_NULL_COMMUTATOR, PROP_ROTATION};
use nullwave::pulse::{data_flux_l, data_scaling_table, data_sup_norms};
use nullwave::{AngularMode, CapMode, PulseProfile};

const WORKERS: usize = 4;

struct Line {
    name: &'static str,
    passed: bool,
}

fn line(name: &'static str, passed: bool, detail: String) -> Line {
    println!("{} {name:<28} {detail}", if passed { "PASS" } else { "FAIL" });
    Line { name, passed }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn slope_detail(report: &ScalingReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match report.slope(name) {
            Some(s) => {
                ok &= s.verdict == Verdict::Pass;
                parts.push(format!(
                    "{name} {:.3} (r2 {:.3}, need {} {:.2}) {:?}",
                    s.fit.slope,
                    s.fit.r2,
                    if matches!(s.bound, nullwave::experiments::Bound::AtLeast) { ">=" } else { "<=" },
                    s.threshold,
                    s.verdict
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn algebra() -> Line {
    let start = Instant::now();
    let report = run_suite(&SuiteOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let ok = report
        .rows
        .iter()
        .filter(|r| r.name != PROP_ROTATION && r.name != PROP_NULL_COMMUTATOR)
        .all(|r| r.passed)
        && secs < 10.0;
    let detail = report
        .rows
        .iter()
        .filter(|r| r.name != PROP_ROTATION && r.name != PROP_NULL_COMMUTATOR)
        .map(|r| format!("{}: {}", r.name, r.detail))
        .collect::<Vec<_>>()
        .join("; ");
    line("null-form algebra", ok, format!("{detail}; {secs:.2}s"))
}

fn commutators() -> Line {
    let report = run_suite(&SuiteOptions::default());
    let rows: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.name == PROP_ROTATION || r.name == PROP_NULL_COMMUTATOR)
        .collect();
    let ok = rows.len() == 2 && rows.iter().all(|r| r.passed);
    let detail = rows.iter().map(|r| format!("{}: {}", r.name, r.detail)).collect::<Vec<_>>().join("; ");
    line("commutator oracles", ok, detail)
}

fn solver_and_identity() -> (Line, Line) {
    let start = Instant::now();
    let report = run_grid_convergence(&ConvergencePlan::default(), WORKERS).expect("convergence study");
    let total = start.elapsed().as_secs_f64();
    let within = |o: &Option<Vec<f64>>, tol: f64| o.as_ref().is_some_and(|v| v.iter().all(|x| (x - 2.0).abs() <= tol));
    let ok = within(&report.linear_orders, 0.2) && within(&report.nonlinear_orders, 0.3) && report.seconds_finest < 120.0;
    let solver = line(
        "solver convergence",
        ok,
        format!(
            "linear errors {} orders {:.3?}; nonlinear diffs {} orders {:.3?}; finest {:.1}s, study {:.1}s",
            sci(&report.linear_errors),
            report.linear_orders,
            sci(&report.nonlinear_diffs),
            report.nonlinear_orders,
            report.seconds_finest,
            total
        ),
    );

    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (rl, rb) = (ratios(&report.identity_l), ratios(&report.identity_lbar));
    // The rotation multiplier has no deformation term at any point.
    let omega_zero = [(1.0, -2.0, 3.0), (0.3, 7.0, 1.1)]
        .iter()
        .all(|&(a, b, r)| deformation_density(Multiplier::Omega, a, b, r) == 0.0);
    let omega_bulk = {
        let plan = SweepPlan { deltas: vec![0.1], ..SweepPlan::default() };
        let (state, _) = nullwave::experiments::solve_for_delta(&plan, 0.1).expect("pulse run");
        let (nu, nub, _) = state.grid.dims();
        energy_identity_residual(&state, Multiplier::Omega, nu - 1, nub - 1).bulk_deformation
    };
    let ok = rl.iter().chain(&rb).all(|&r| r >= 3.0) && omega_zero && omega_bulk == 0.0;
    let identity = line(
        "energy identity",
        ok,
        format!(
            "L residuals {} ratios {:.2?}; Lbar residuals {} ratios {:.2?}; Omega bulk {omega_bulk}",
            sci(&report.identity_l), rl, sci(&report.identity_lbar), rb
        ),
    );
    (solver, identity)
}

fn data_scalings() -> Line {
    let profile = PulseProfile::new(1.0, CapMode::Fixed(0.6)).expect("profile");
    let deltas = [0.2, 0.1, 0.05];
    let mode = AngularMode::Axisym;
    let mut ok = true;
    let mut parts = Vec::new();
    for u0 in [-4.0, -8.0] {
        let flux: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, data_flux_l(&profile, d, u0, mode).sqrt())).collect();
        let sups: Vec<_> = deltas.iter().map(|&d| (d, data_sup_norms(&profile, d, u0, mode))).collect();
        let lsup: Vec<(f64, f64)> = sups.iter().map(|(d, s)| (*d, s.lphi)).collect();
        let asup: Vec<(f64, f64)> = sups.iter().map(|(d, s)| (*d, s.ang_phi)).collect();
        for (name, pts, want) in [("|Lphi|_L2", flux, 0.0), ("sup|Lphi|", lsup, -0.5), ("sup|ang phi|", asup, 0.5)] {
            let s = fit_exponent(&pts).slope;
            ok &= (s - want).abs() <= 0.05;
            parts.push(format!("u0 {u0} {name} {s:.3}"));
        }
    }
    let table = data_scaling_table(&profile, &[0.2, 0.1, 0.05, 0.025], -8.0, 3, mode).expect("table");
    for k in 1..=3 {
        let pts: Vec<(f64, f64)> = table.iter().filter(|r| r.k == k).map(|r| (r.delta, r.norm)).collect();
        let s = fit_exponent(&pts).slope;
        ok &= (s + (k as f64 - 1.0)).abs() <= 0.1;
        parts.push(format!("k={k} {s:.3}"));
    }
    line("data scalings", ok, parts.join("; "))
}

fn boundedness(report: &ScalingReport) -> Line {
    let ok = report.breakdowns == 0 && report.boundedness.iter().all(|b| b.verdict == Verdict::Pass);
    let detail = report
        .boundedness
        .iter()
        .map(|b| format!("{} spread {:.3} (<= {})", b.quantity, b.ratio, b.limit))
        .collect::<Vec<_>>()
        .join("; ");
    line("energy boundedness", ok, format!("breakdowns {}; {detail}", report.breakdowns))
}

fn main() {
    let start = Instant::now();
    let mut lines = vec![algebra(), commutators()];
    let (solver, identity) = solver_and_identity();
    lines.push(solver);
    lines.push(identity);
    lines.push(data_scalings());

    let default = run_delta_sweep(&SweepPlan::default(), WORKERS).expect("default sweep");
    lines.push(boundedness(&default));

    let t = Instant::now();
    let focus = run_delta_sweep(&SweepPlan::shrinking_cap(), WORKERS).expect("focusing sweep");
    let secs = t.elapsed().as_secs_f64();
    let (ok, detail) =
        slope_detail(&focus, &["out_tube_energy", "in_tube_defect", "cbar_delta_flux", "lphi_drift"]);
    lines.push(line("focusing, shrinking cap", ok && secs < 1800.0, format!("{detail}; {secs:.1}s")));

    let (ok, detail) = slope_detail(&default, &["lbar_l2"]);
    lines.push(line("lbar flux decay", ok, detail));

    let (ok, detail) = slope_detail(&default, &["exit_lphi", "interior_lphi"]);
    lines.push(line("exit-surface smallness", ok, detail));

    let plan = SweepPlan { deltas: vec![0.05], ..SweepPlan::default() };
    let u0 = run_u0_convergence(&plan, &[-4.0, -8.0, -16.0], WORKERS).expect("u0 study");
    let diffs: Vec<String> = u0
        .pairs
        .iter()
        .map(|p| format!("d({},{}) = {:.3e}", p.u0_near, p.u0_far, p.lphi_diff))
        .collect();
    lines.push(line("u0 stability", u0.verdict == Verdict::Pass, diffs.join(", ")));

    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.name).collect();
    println!(
        "{} of {} checks passed in {:.1}s",
        lines.len() - failed.len(),
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
