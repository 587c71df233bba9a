//! δ-sweeps, `u₀` studies and grid refinement studies with power-law fits.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    energy_identity_residual, energy_norms, focusing_report, interior_trace, lbar_l2_on_cu, linf_table,
    radiation_field, sobolev_ratio, trace_on_cbar_delta, EnergyNorms, Multiplier,
};
use crate::exact::{DipoleWave, ExactSolution};
use crate::geometry::{AngularMode, DoubleNullGrid};
use crate::nullform::NullFormCoeffs;
use crate::pulse::{build_data, calibrate_amplitude, CapMode, CharacteristicData, PulseProfile};
use crate::solver::{blowup_guard, march, FieldState, GuardStatus, NullFormSpec, SolverConfig};
use crate::{Error, Result};

/// Fits with a coefficient of determination below this are inconclusive.
pub const R2_GATE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    LowR2,
    TooFewPoints,
}

/// Least-squares line through `(ln δ, ln value)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: usize,
    /// Points dropped for a non-positive or non-finite value.
    pub excluded: usize,
    pub status: FitStatus,
}

impl PowerFit {
    pub fn conclusive(&self) -> bool {
        self.status == FitStatus::Ok
    }
}

pub fn fit_exponent(points: &[(f64, f64)]) -> PowerFit {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, v)| *d > 0.0 && *v > 0.0 && v.is_finite())
        .map(|&(d, v)| (d.ln(), v.ln()))
        .collect();
    let excluded = points.len() - usable.len();
    let n = usable.len();
    if n < 3 {
        return PowerFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r2: f64::NAN,
            used: n,
            excluded,
            status: FitStatus::TooFewPoints,
        };
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    // A constant series is fitted exactly.
    let r2 = if syy <= 1e-30 * nf { 1.0 } else { 1.0 - sse / syy };
    PowerFit {
        slope,
        intercept,
        r2,
        used: n,
        excluded,
        status: if r2 >= R2_GATE { FitStatus::Ok } else { FitStatus::LowR2 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Axisymmetric data with a δ-independent cap.
    #[serde(rename = "theorem2_fixed_cap", alias = "fixed_cap")]
    FixedCap,
    /// Axisymmetric data on a cap of radius `δ^{1/2}`.
    #[serde(rename = "theorem3_shrinking_cap", alias = "shrinking_cap")]
    ShrinkingCap,
    /// Spherically symmetric data.
    Spherical,
}

impl SweepMode {
    pub fn angular_mode(self) -> AngularMode {
        match self {
            Self::Spherical => AngularMode::Spherical,
            _ => AngularMode::Axisym,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPlan {
    pub deltas: Vec<f64>,
    pub u0: f64,
    pub e0: f64,
    pub mode: SweepMode,
    /// Cap radius in [`SweepMode::FixedCap`].
    pub fixed_cap: f64,
    /// Coefficient of `Q₀`.
    pub c0: f64,
    /// Coefficient of `Q₀₃` (axisymmetric modes only).
    pub c03: f64,
    pub ubar_cells: usize,
    pub du_max: f64,
    pub n_theta: usize,
    pub tube_margin: f64,
    pub corrector_iterations: usize,
    pub corrector_tol: f64,
    pub blowup_threshold: f64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            u0: -8.0,
            e0: 1.0,
            mode: SweepMode::FixedCap,
            fixed_cap: 0.6,
            c0: 1.0,
            c03: 0.0,
            ubar_cells: 32,
            du_max: 1.0 / 64.0,
            n_theta: 257,
            tube_margin: crate::diagnostics::DEFAULT_TUBE_MARGIN,
            corrector_iterations: 2,
            corrector_tol: 1e-12,
            blowup_threshold: 1e6,
        }
    }
}

impl SweepPlan {
    pub fn shrinking_cap() -> Self {
        Self {
            mode: SweepMode::ShrinkingCap,
            ..Self::default()
        }
    }

    pub fn spherical() -> Self {
        Self {
            mode: SweepMode::Spherical,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::Config("deltas must not be empty".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::Config(format!("delta = {d} must lie in (0, 1)")));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("deltas must be strictly decreasing".into()));
        }
        if !(self.e0 > 0.0) {
            return Err(Error::Config(format!("e0 = {} must be positive", self.e0)));
        }
        if !(self.du_max > 0.0) {
            return Err(Error::Config(format!("du_max = {} must be positive", self.du_max)));
        }
        if !(self.tube_margin > 0.0) {
            return Err(Error::Config(format!("tube_margin = {} must be positive", self.tube_margin)));
        }
        self.spec()?;
        self.profile()?;
        for &d in &self.deltas {
            self.solver().validate(&self.grid(d)?)?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<NullFormSpec> {
        let pairs: Vec<(usize, usize, f64)> = if self.c03 != 0.0 { vec![(0, 3, self.c03)] } else { vec![] };
        NullFormSpec::new(NullFormCoeffs::from_entries(self.c0, &pairs)?, self.mode.angular_mode())
    }

    pub fn profile(&self) -> Result<PulseProfile> {
        let cap = match self.mode {
            SweepMode::FixedCap => CapMode::Fixed(self.fixed_cap),
            SweepMode::ShrinkingCap => CapMode::SqrtDelta,
            SweepMode::Spherical => CapMode::Uniform,
        };
        PulseProfile::new(1.0, cap)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            corrector_iterations: self.corrector_iterations,
            corrector_tol: self.corrector_tol,
            blowup_threshold: self.blowup_threshold,
            ..SolverConfig::default()
        }
    }

    pub fn grid(&self, delta: f64) -> Result<DoubleNullGrid> {
        DoubleNullGrid::with_resolution(
            self.u0,
            delta,
            self.mode.angular_mode(),
            self.n_theta,
            self.ubar_cells,
            self.du_max,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunStatus {
    Done,
    Breakdown { u: f64, ubar: f64, value: f64 },
    Failed { message: String },
}

/// Focusing quantities of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FocusingSummary {
    pub tube_angle: f64,
    pub out_tube_energy: f64,
    pub in_tube_defect: f64,
    pub cbar_delta_flux: f64,
    pub cbar_delta_flux_lbar: f64,
    pub lphi_drift: f64,
    pub lphi_drift_weighted: f64,
    /// In-tube energy at `u = −1` over its value at `u₀`.
    pub in_tube_ratio: f64,
}

/// Diagnostics of a single δ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub status: RunStatus,
    pub amplitude: f64,
    pub cells: (usize, usize, usize),
    pub norms: Option<EnergyNorms>,
    /// `‖L̄φ‖_{L²(C_{−1})}`
    pub lbar_l2: f64,
    /// `sup |L̄φ|` on `C_{−1}`
    pub sup_lbar: f64,
    /// `sup_{C̲_δ} |u||Lφ|`
    pub exit_lphi: f64,
    /// `sup_{C̲_{δ/4}} |u||Lφ|`
    pub interior_lphi: f64,
    pub sobolev_ratio: f64,
    pub focusing: Option<FocusingSummary>,
    pub max_contraction: f64,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

impl DeltaRow {
    fn empty(delta: f64, status: RunStatus) -> Self {
        Self {
            delta,
            status,
            amplitude: f64::NAN,
            cells: (0, 0, 0),
            norms: None,
            lbar_l2: f64::NAN,
            sup_lbar: f64::NAN,
            exit_lphi: f64::NAN,
            interior_lphi: f64::NAN,
            sobolev_ratio: f64::NAN,
            focusing: None,
            max_contraction: f64::NAN,
            warnings: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn done(&self) -> bool {
        self.status == RunStatus::Done
    }
}

/// Calibrated data and the marched state for one δ of the plan.
pub fn solve_for_delta(plan: &SweepPlan, delta: f64) -> Result<(FieldState, PulseProfile)> {
    let grid = plan.grid(delta)?;
    let mode = grid.mode();
    let profile = calibrate_amplitude(&plan.profile()?, plan.e0, delta, plan.u0, mode)?;
    let data = build_data(&profile, &grid)?;
    let state = march(&data, &plan.spec()?, &grid, &plan.solver())?;
    Ok((state, profile))
}

/// Every diagnostic of the sweep evaluated on a finished run.
pub fn summarize(state: &FieldState, profile: &PulseProfile, tube_margin: f64) -> Result<DeltaRow> {
    let g = &state.grid;
    let delta = g.delta();
    let (nu, nub, nt) = g.dims();
    let (last, top) = (nu - 1, nub - 1);
    let mut row = DeltaRow::empty(delta, RunStatus::Done);
    row.amplitude = profile.amplitude;
    row.cells = (nu - 1, nub - 1, nt);
    row.norms = Some(energy_norms(state, last, top));
    row.lbar_l2 = lbar_l2_on_cu(state, last).norm;
    row.sup_lbar = linf_table(state)[last].lbarphi;
    row.exit_lphi = trace_on_cbar_delta(state).weighted_lphi();
    row.interior_lphi = interior_trace(state).weighted_lphi();
    row.sobolev_ratio = (0..nu).step_by((nu / 8).max(1)).map(|i| sobolev_ratio(state, i, top)).fold(0.0, f64::max);
    if g.mode() == AngularMode::Axisym {
        if let Some(cap) = profile.cap_radius(delta) {
            let f = focusing_report(state, cap, tube_margin)?;
            let first = f.rows[0].in_tube;
            row.focusing = Some(FocusingSummary {
                tube_angle: f.tube_angle,
                out_tube_energy: f.out_tube_energy,
                in_tube_defect: f.in_tube_defect,
                cbar_delta_flux: f.cbar_delta_flux,
                cbar_delta_flux_lbar: f.cbar_delta_flux_lbar,
                lphi_drift: f.lphi_drift,
                lphi_drift_weighted: f.lphi_drift_weighted,
                in_tube_ratio: f.rows[last].in_tube / first,
            });
        }
    }
    row.max_contraction = state.stats.max_contraction;
    row.warnings = state.stats.warnings.clone();
    Ok(row)
}

/// Runs and summarizes one δ; breakdowns and errors become row statuses.
pub fn run_delta(plan: &SweepPlan, delta: f64) -> DeltaRow {
    let start = Instant::now();
    let mut row = match solve_for_delta(plan, delta) {
        Err(Error::Breakdown { u, ubar, value, .. }) => {
            DeltaRow::empty(delta, RunStatus::Breakdown { u, ubar, value })
        }
        Err(e) => DeltaRow::empty(delta, RunStatus::Failed { message: e.to_string() }),
        Ok((state, profile)) => match blowup_guard(&state, plan.blowup_threshold) {
            GuardStatus::Breakdown { u, ubar, value } => {
                DeltaRow::empty(delta, RunStatus::Breakdown { u, ubar, value })
            }
            GuardStatus::Ok => summarize(&state, &profile, plan.tube_margin)
                .unwrap_or_else(|e| DeltaRow::empty(delta, RunStatus::Failed { message: e.to_string() })),
        },
    };
    row.seconds = start.elapsed().as_secs_f64();
    row
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Worst of a set: any failure fails, otherwise any inconclusive row is inconclusive.
    pub fn combine(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in items {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtLeast,
    AtMost,
}

/// A fitted δ-exponent compared with a threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub quantity: String,
    pub expected_exponent: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub fit: PowerFit,
    pub verdict: Verdict,
}

impl SlopeCheck {
    pub fn new(quantity: &str, expected: f64, threshold: f64, bound: Bound, points: &[(f64, f64)]) -> Self {
        let fit = fit_exponent(points);
        let verdict = if !fit.conclusive() {
            Verdict::Inconclusive
        } else {
            let ok = match bound {
                Bound::AtLeast => fit.slope >= threshold,
                Bound::AtMost => fit.slope <= threshold,
            };
            if ok {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        };
        Self {
            quantity: quantity.to_string(),
            expected_exponent: expected,
            threshold,
            bound,
            fit,
            verdict,
        }
    }
}

/// Spread of an energy norm across the δ ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessCheck {
    pub quantity: String,
    pub values: Vec<f64>,
    pub ratio: f64,
    pub limit: f64,
    pub verdict: Verdict,
}

/// Largest allowed max/min ratio of `E_k(−1, δ)` across the ladder.
pub const ENERGY_SPREAD_LIMIT: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub plan: SweepPlan,
    pub rows: Vec<DeltaRow>,
    pub slopes: Vec<SlopeCheck>,
    pub boundedness: Vec<BoundednessCheck>,
    pub breakdowns: usize,
    pub verdict: Verdict,
}

impl ScalingReport {
    pub fn slope(&self, quantity: &str) -> Option<&SlopeCheck> {
        self.slopes.iter().find(|s| s.quantity == quantity)
    }
}

/// Assembles the report from finished rows (one per planned δ, in plan order).
pub fn assemble_report(plan: &SweepPlan, rows: Vec<DeltaRow>) -> ScalingReport {
    let done: Vec<&DeltaRow> = rows.iter().filter(|r| r.done()).collect();
    let series = |f: &dyn Fn(&DeltaRow) -> Option<f64>| -> Vec<(f64, f64)> {
        done.iter().filter_map(|r| f(r).map(|v| (r.delta, v))).collect()
    };
    let mut slopes = vec![
        SlopeCheck::new("lbar_l2", 1.0, 0.8, Bound::AtLeast, &series(&|r| Some(r.lbar_l2))),
        SlopeCheck::new("sup_lbar", 0.5, 0.4, Bound::AtLeast, &series(&|r| Some(r.sup_lbar))),
        SlopeCheck::new("exit_lphi", 0.5, 0.4, Bound::AtLeast, &series(&|r| Some(r.exit_lphi))),
        SlopeCheck::new("interior_lphi", -0.5, -0.3, Bound::AtMost, &series(&|r| Some(r.interior_lphi))),
    ];
    if plan.mode != SweepMode::Spherical {
        let foc = |f: fn(&FocusingSummary) -> f64| series(&move |r: &DeltaRow| r.focusing.as_ref().map(f));
        slopes.extend([
            SlopeCheck::new("out_tube_energy", 2.0, 1.8, Bound::AtLeast, &foc(|f| f.out_tube_energy)),
            SlopeCheck::new("in_tube_defect", 1.0, 0.8, Bound::AtLeast, &foc(|f| f.in_tube_defect)),
            SlopeCheck::new("cbar_delta_flux", 1.0, 0.8, Bound::AtLeast, &foc(|f| f.cbar_delta_flux)),
            SlopeCheck::new("lphi_drift", 0.5, 0.4, Bound::AtLeast, &foc(|f| f.lphi_drift)),
        ]);
    }
    let boundedness = (0..3)
        .map(|k| {
            let values: Vec<f64> = done.iter().filter_map(|r| r.norms.map(|n| n.e[k])).collect();
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            // Angular norms vanish identically for spherical data.
            let ratio = if max == 0.0 { 1.0 } else { max / min };
            let verdict = if values.len() < 2 {
                Verdict::Inconclusive
            } else if ratio.is_finite() && ratio <= ENERGY_SPREAD_LIMIT {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            BoundednessCheck {
                quantity: format!("E{}", k + 1),
                values,
                ratio,
                limit: ENERGY_SPREAD_LIMIT,
                verdict,
            }
        })
        .collect::<Vec<_>>();
    let breakdowns = rows.iter().filter(|r| !r.done()).count();
    let verdict = Verdict::combine(
        slopes
            .iter()
            .map(|s| s.verdict)
            .chain(boundedness.iter().map(|b| b.verdict))
            .chain((breakdowns > 0).then_some(Verdict::Fail)),
    );
    ScalingReport {
        plan: plan.clone(),
        rows,
        slopes,
        boundedness,
        breakdowns,
        verdict,
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Runs every δ of the plan on `workers` threads and fits the exponents.
pub fn run_delta_sweep(plan: &SweepPlan, workers: usize) -> Result<ScalingReport> {
    plan.validate()?;
    let rows = pool(workers)?.install(|| plan.deltas.par_iter().map(|&d| run_delta(plan, d)).collect());
    Ok(assemble_report(plan, rows))
}

/// Differences between runs started at consecutive `u₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct U0Pair {
    pub u0_near: f64,
    pub u0_far: f64,
    /// `max |Lφ_near − Lφ_far|` on `u = −1`.
    pub lphi_diff: f64,
    /// `max ||u|φ_far − δ^{1/2}ψ₀|` on `u = u0_near`, the drift of the radiation field.
    pub radiation_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct U0Report {
    pub delta: f64,
    pub amplitude: f64,
    pub u0s: Vec<f64>,
    pub pairs: Vec<U0Pair>,
    pub monotone: bool,
    pub verdict: Verdict,
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

/// Runs the same radiation-field data from each `u₀` (ordered towards −∞).
///
/// The amplitude is calibrated once at `plan.u0` and then held fixed, so every
/// run carries the same `|u₀|φ` on its initial cone. `plan.deltas[0]` is used.
pub fn run_u0_convergence(plan: &SweepPlan, u0s: &[f64], workers: usize) -> Result<U0Report> {
    if u0s.len() < 2 || u0s.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Config("u0 list needs at least two non-increasing values".into()));
    }
    let delta = plan.deltas[0];
    let mode = plan.mode.angular_mode();
    let profile = calibrate_amplitude(&plan.profile()?, plan.e0, delta, plan.u0, mode)?;
    let spec = plan.spec()?;
    let cfg = plan.solver();
    let states: Vec<FieldState> = pool(workers)?.install(|| {
        u0s.par_iter()
            .map(|&u0| {
                let grid = SweepPlan { u0, ..plan.clone() }.grid(delta)?;
                march(&build_data(&profile, &grid)?, &spec, &grid, &cfg)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut pairs = Vec::new();
    for (w, u) in states.windows(2).zip(u0s.windows(2)) {
        let (near, far) = (&w[0], &w[1]);
        let (nn, fl) = (near.grid.dims().0 - 1, far.grid.dims().0 - 1);
        let mut lphi_diff = 0.0_f64;
        for (a, b) in near.lphi.u_slice(nn).iter().zip(far.lphi.u_slice(fl)) {
            lphi_diff = lphi_diff.max((a - b).abs());
        }
        let i = far.grid.nearest_u_index(u[0]);
        let rf = radiation_field(far, i);
        let g = &far.grid;
        let mut radiation_drift = 0.0_f64;
        let (_, nub, nt) = g.dims();
        for j in 0..nub {
            for k in 0..nt {
                let want = delta.sqrt() * profile.psi0(0, g.ubar(j) / delta, g.theta(k), delta, mode);
                radiation_drift = radiation_drift.max((rf.get(0, j, k) - want).abs());
            }
        }
        pairs.push(U0Pair {
            u0_near: u[0],
            u0_far: u[1],
            lphi_diff,
            radiation_drift,
        });
    }
    let d: Vec<f64> = pairs.iter().map(|p| p.lphi_diff).collect();
    let monotone = decreasing(&d);
    let verdict = if pairs.len() < 2 {
        Verdict::Inconclusive
    } else if monotone {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(U0Report {
        delta,
        amplitude: profile.amplitude,
        u0s: u0s.to_vec(),
        pairs,
        monotone,
        verdict,
    })
}

/// Observed orders `log₂(e_k / e_{k+1})` of a dyadic error sequence; `None`
/// when an error vanishes or the sequence does not decrease.
pub fn observed_orders(errors: &[f64]) -> Option<Vec<f64>> {
    if errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0) || !e.is_finite()) || !decreasing(errors) {
        return None;
    }
    Some(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Setup of the refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergencePlan {
    pub delta: f64,
    pub u0: f64,
    /// Coarsest cell counts `(u, ū, θ)`; each level doubles all three.
    pub base_cells: (usize, usize, usize),
    pub levels: usize,
    pub c0: f64,
    pub amplitude: f64,
    pub cap: f64,
    pub corrector_iterations: usize,
}

impl Default for ConvergencePlan {
    fn default() -> Self {
        Self {
            delta: 0.1,
            u0: -4.0,
            base_cells: (48, 32, 32),
            levels: 3,
            c0: 1.0,
            amplitude: 1.0,
            cap: 1.0,
            corrector_iterations: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub plan: ConvergencePlan,
    /// Max-norm error against the linear `ℓ = 1` oracle per level.
    pub linear_errors: Vec<f64>,
    pub linear_orders: Option<Vec<f64>>,
    /// Max-norm differences of successive nonlinear pulse runs on the coarse nodes.
    pub nonlinear_diffs: Vec<f64>,
    pub nonlinear_orders: Option<Vec<f64>>,
    /// Relative energy-identity residuals per level for `L` and `L̄`.
    pub identity_l: Vec<f64>,
    pub identity_lbar: Vec<f64>,
    pub seconds_finest: f64,
}

impl ConvergencePlan {
    fn grid(&self, level: usize) -> Result<DoubleNullGrid> {
        let m = 1 << level;
        let (a, b, c) = self.base_cells;
        DoubleNullGrid::new(self.u0, self.delta, a * m, b * m, AngularMode::Axisym, c * m + 1)
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            corrector_iterations: self.corrector_iterations,
            min_ubar_cells: 1,
            ..SolverConfig::default()
        }
    }
}

/// Dyadic refinement of the linear oracle and of a nonlinear pulse run.
pub fn run_grid_convergence(plan: &ConvergencePlan, workers: usize) -> Result<ConvergenceReport> {
    if plan.levels < 3 {
        return Err(Error::Config(format!("levels = {}, at least 3 required", plan.levels)));
    }
    let oracle = DipoleWave::default();
    let linear = NullFormSpec::linear(AngularMode::Axisym);
    let q = NullFormCoeffs::from_entries(plan.c0, &[])?;
    let nonlinear = NullFormSpec::new(q, AngularMode::Axisym)?;
    let profile = PulseProfile::new(plan.amplitude, CapMode::Fixed(plan.cap))?;
    let cfg = plan.solver();

    struct Level {
        linear_error: f64,
        state: FieldState,
        identity: (f64, f64),
        seconds: f64,
    }
    let levels: Vec<Level> = pool(workers)?.install(|| {
        (0..plan.levels)
            .into_par_iter()
            .map(|l| {
                let grid = plan.grid(l)?;
                let lin = march(&CharacteristicData::from_solution(&grid, &oracle), &linear, &grid, &cfg)?;
                let (nu, nub, nt) = grid.dims();
                let mut linear_error = 0.0_f64;
                for i in 0..nu {
                    for j in 0..nub {
                        for k in 0..nt {
                            let e = oracle.phi(grid.u(i), grid.ubar(j), grid.theta(k));
                            linear_error = linear_error.max((lin.phi.get(i, j, k) - e).abs());
                        }
                    }
                }
                let start = Instant::now();
                let state = march(&build_data(&profile, &grid)?, &nonlinear, &grid, &cfg)?;
                let seconds = start.elapsed().as_secs_f64();
                let identity = (
                    energy_identity_residual(&state, Multiplier::L, nu - 1, nub - 1).relative_residual,
                    energy_identity_residual(&state, Multiplier::Lbar, nu - 1, nub - 1).relative_residual,
                );
                Ok(Level {
                    linear_error,
                    state,
                    identity,
                    seconds,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let coarse = &levels[0].state.grid;
    let (nu, nub, nt) = coarse.dims();
    let nonlinear_diffs: Vec<f64> = levels
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let (ma, mb) = (1 << l, 1 << (l + 1));
            let mut d = 0.0_f64;
            for i in 0..nu {
                for j in 0..nub {
                    for k in 0..nt {
                        let a = w[0].state.phi.get(i * ma, j * ma, k * ma);
                        let b = w[1].state.phi.get(i * mb, j * mb, k * mb);
                        d = d.max((a - b).abs());
                    }
                }
            }
            d
        })
        .collect();
    let linear_errors: Vec<f64> = levels.iter().map(|l| l.linear_error).collect();
    Ok(ConvergenceReport {
        plan: plan.clone(),
        linear_orders: observed_orders(&linear_errors),
        linear_errors,
        nonlinear_orders: observed_orders(&nonlinear_diffs),
        nonlinear_diffs,
        identity_l: levels.iter().map(|l| l.identity.0).collect(),
        identity_lbar: levels.iter().map(|l| l.identity.1).collect(),
        seconds_finest: levels.last().map(|l| l.seconds).unwrap_or(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fit_is_exact_on_power_laws() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&d| (d, 3.0 * d * d)).collect();
        let f = fit_exponent(&pts);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 5.0)).collect();
        let f = fit_exponent(&flat);
        assert!(f.slope.abs() < 1e-12 && f.conclusive());
    }

    #[test]
    fn fit_recovers_noisy_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&d: &f64| (d, 2.0 * d.sqrt() * (1.0 + 0.05 * rng.gen_range(-1.0..1.0))))
            .collect();
        let f = fit_exponent(&pts);
        assert!((f.slope - 0.5).abs() < 0.05 && f.conclusive());
    }

    #[test]
    fn fit_flags_bad_input() {
        let f = fit_exponent(&[(0.1, 1.0), (0.05, 0.5)]);
        assert_eq!(f.status, FitStatus::TooFewPoints);
        let f = fit_exponent(&[(0.2, 1.0), (0.1, -1.0), (0.05, 0.0), (0.025, 2.0)]);
        assert_eq!((f.status, f.excluded), (FitStatus::TooFewPoints, 2));
        let f = fit_exponent(&[(0.2, 1.0), (0.1, 5.0), (0.05, 0.2), (0.025, 3.0)]);
        assert_eq!(f.status, FitStatus::LowR2);
        let c = SlopeCheck::new("x", 1.0, 0.8, Bound::AtLeast, &[(0.2, 1.0), (0.1, 5.0), (0.05, 0.2), (0.025, 3.0)]);
        assert_eq!(c.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn plan_validation() {
        assert!(SweepPlan::default().validate().is_ok());
        let bad = SweepPlan {
            deltas: vec![0.1, 0.2],
            ..SweepPlan::default()
        };
        assert!(bad.validate().is_err());
        let coarse = SweepPlan {
            ubar_cells: 8,
            ..SweepPlan::default()
        };
        assert!(matches!(coarse.validate(), Err(Error::Resolution(_))));
        let q03 = SweepPlan {
            c03: 0.5,
            ..SweepPlan::spherical()
        };
        assert!(matches!(q03.validate(), Err(Error::NotAdmissible { .. })));
    }

    fn small_plan(mode: SweepMode, deltas: Vec<f64>) -> SweepPlan {
        SweepPlan {
            deltas,
            u0: -3.0,
            mode,
            du_max: 1.0 / 8.0,
            n_theta: 97,
            ..SweepPlan::default()
        }
    }

    #[test]
    fn single_delta_is_inconclusive_but_complete() {
        let r = run_delta_sweep(&small_plan(SweepMode::FixedCap, vec![0.1]), 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].done() && r.rows[0].focusing.is_some() && r.rows[0].norms.is_some());
        assert!(r.slopes.iter().all(|s| s.verdict == Verdict::Inconclusive));
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let plan = small_plan(SweepMode::Spherical, vec![0.2, 0.1, 0.05]);
        let a = run_delta_sweep(&plan, 1).unwrap();
        let b = run_delta_sweep(&plan, 3).unwrap();
        let strip = |r: &ScalingReport| r.rows.iter().map(|x| (x.delta, x.norms, x.lbar_l2)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(a.rows.iter().all(|r| r.focusing.is_none()));
    }

    #[test]
    fn breakdown_is_reported_not_raised() {
        let plan = SweepPlan {
            e0: 1e6,
            blowup_threshold: 1e3,
            ..small_plan(SweepMode::Spherical, vec![0.2, 0.1])
        };
        let r = run_delta_sweep(&plan, 2).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.breakdowns > 0);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn u0_study_identical_and_zero_cases() {
        assert_eq!(observed_orders(&[0.0, 0.0, 0.0]), None);
        assert!(decreasing(&[0.0, 0.0]));
        let plan = small_plan(SweepMode::Spherical, vec![0.1]);
        assert!(run_u0_convergence(&plan, &[-3.0, -2.0], 1).is_err());
        let same = run_u0_convergence(&plan, &[-3.0, -3.0], 1).unwrap();
        assert_eq!(same.pairs[0].lphi_diff, 0.0);
        let r = run_u0_convergence(&plan, &[-2.0, -4.0, -8.0], 2).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!(r.pairs.iter().all(|p| p.lphi_diff.is_finite() && p.radiation_drift.is_finite()));
    }
}
