//! Diamond marching scheme for `□φ = Q(∇φ, ∇φ)` on the double-null rectangle.
//!
//! The unknown is `ψ = rφ`, which satisfies
//! `∂_u∂_ū ψ = r⁻² Δ_{S²} ψ − r Q(∇φ, ∇φ)`. Each cell is advanced by
//! `ψ_N = ψ_E + ψ_W − ψ_S + Δu Δū G(center)` where `S = (i, j)`, `E = (i+1, j)`,
//! `W = (i, j+1)` and `N = (i+1, j+1)`. The angular term is centered by the
//! four-corner average and treated implicitly (a tridiagonal solve in θ); the
//! null-form term uses center derivatives built from the provisional `ψ_N` and
//! is refined by fixed-point passes.

use serde::Serialize;

use crate::field::Field3;
use crate::geometry::{AngularMode, DoubleNullGrid, Parity};
use crate::nullform::{frame_components, FrameComponents, FrameGradient, NullFormCoeffs, SpherePoint};
use crate::pulse::CharacteristicData;
use crate::{Error, Result};

/// A null form checked against the angular mode.
///
/// Spherical mode admits multiples of `Q₀`; axisymmetric mode admits
/// `span{Q₀, Q₀₃}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullFormSpec {
    q: NullFormCoeffs,
    mode: AngularMode,
}

impl NullFormSpec {
    pub fn new(q: NullFormCoeffs, mode: AngularMode) -> Result<Self> {
        let ok = q.entries().iter().all(|&(a, b, _)| match mode {
            AngularMode::Spherical => false,
            AngularMode::Axisym => (a, b) == (0, 3),
        });
        if !ok {
            return Err(Error::NotAdmissible { mode: mode.name() });
        }
        Ok(Self { q, mode })
    }

    pub fn linear(mode: AngularMode) -> Self {
        Self {
            q: NullFormCoeffs::zero(),
            mode,
        }
    }

    pub fn q(&self) -> &NullFormCoeffs {
        &self.q
    }

    pub fn mode(&self) -> AngularMode {
        self.mode
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Maximum number of fixed-point passes per cell.
    pub corrector_iterations: usize,
    pub corrector_tol: f64,
    pub blowup_threshold: f64,
    /// Minimum number of ū cells across `[0, δ]`.
    pub min_ubar_cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            corrector_iterations: 2,
            corrector_tol: 1e-12,
            blowup_threshold: 1e6,
            min_ubar_cells: 32,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, grid: &DoubleNullGrid) -> Result<()> {
        if self.corrector_iterations < 1 {
            return Err(Error::Config("corrector_iterations must be at least 1".into()));
        }
        if !(self.corrector_tol > 0.0) || !(self.blowup_threshold > 0.0) {
            return Err(Error::Config("corrector_tol and blowup_threshold must be positive".into()));
        }
        let (_, n_ubar) = grid.cells();
        if n_ubar < self.min_ubar_cells {
            return Err(Error::Resolution(format!(
                "n_ubar = {n_ubar} cells, the pulse needs at least {}",
                self.min_ubar_cells
            )));
        }
        Ok(())
    }
}

/// Corrector statistics gathered during a march.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MarchStats {
    pub cells: usize,
    /// Largest change of `ψ_N` in the final corrector pass.
    pub max_final_change: f64,
    /// Largest ratio of successive corrector changes.
    pub max_contraction: f64,
    /// Cells whose final change exceeded the tolerance.
    pub unconverged_cells: usize,
    pub warnings: Vec<String>,
}

/// Contraction factor above which a warning is recorded.
pub const CONTRACTION_LIMIT: f64 = 0.5;

/// Marched solution with derived first-derivative caches.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub grid: DoubleNullGrid,
    pub spec: NullFormSpec,
    pub psi: Field3,
    pub phi: Field3,
    /// `Lφ = ∂_ū φ`
    pub lphi: Field3,
    /// `L̄φ = ∂_u φ`
    pub lbarphi: Field3,
    /// `∂_θ φ` (the angular gradient is `r⁻¹ ∂_θ φ`).
    pub dtheta_phi: Field3,
    pub stats: MarchStats,
}

impl FieldState {
    pub fn delta(&self) -> f64 {
        self.grid.delta()
    }

    pub fn u0(&self) -> f64 {
        self.grid.u0()
    }

    /// Wraps a given `φ` (for example a sampled exact solution) without marching.
    pub fn from_phi(grid: &DoubleNullGrid, spec: &NullFormSpec, phi: Field3) -> Result<Self> {
        if phi.dims() != grid.dims() {
            return Err(Error::Resolution(format!(
                "field dims {:?} do not match grid {:?}",
                phi.dims(),
                grid.dims()
            )));
        }
        let (nu, nub, nt) = grid.dims();
        let psi = Field3::from_fn(nu, nub, nt, |i, j, k| grid.r(i, j) * phi.get(i, j, k));
        let mut state = Self {
            grid: grid.clone(),
            spec: *spec,
            psi,
            lphi: phi.clone(),
            lbarphi: phi.clone(),
            dtheta_phi: phi.clone(),
            phi,
            stats: MarchStats::default(),
        };
        derive_first_derivatives(&mut state);
        Ok(state)
    }

    /// Frame gradient of `φ` at a node.
    pub fn frame_gradient(&self, i: usize, j: usize, k: usize) -> FrameGradient {
        let r = self.grid.r(i, j);
        FrameGradient::new(
            self.lphi.get(i, j, k),
            self.lbarphi.get(i, j, k),
            [self.dtheta_phi.get(i, j, k) / r, 0.0],
        )
    }

    /// `|∇̸φ|` at a node.
    pub fn ang_phi(&self, i: usize, j: usize, k: usize) -> f64 {
        (self.dtheta_phi.get(i, j, k) / self.grid.r(i, j)).abs()
    }
}

/// Frame components of the spec at every θ node (they do not depend on r).
pub fn frame_table(spec: &NullFormSpec, grid: &DoubleNullGrid) -> Vec<FrameComponents> {
    (0..grid.n_theta())
        .map(|k| {
            frame_components(spec.q(), &SpherePoint::new(1.0, grid.theta(k), 0.0))
                .expect("unit radius")
        })
        .collect()
}

/// `Q(∇φ, ∇φ)` through the frame decomposition at `point`.
pub fn rhs_null_form(spec: &NullFormSpec, point: &SpherePoint, g: &FrameGradient) -> Result<f64> {
    Ok(frame_components(spec.q(), point)?.evaluate(g, g))
}

/// Marches the Goursat problem across the whole rectangle.
pub fn march(
    data: &CharacteristicData,
    spec: &NullFormSpec,
    grid: &DoubleNullGrid,
    cfg: &SolverConfig,
) -> Result<FieldState> {
    cfg.validate(grid)?;
    data.check_grid(grid)?;
    if spec.mode() != grid.mode() {
        return Err(Error::Mode(format!(
            "null form prepared for {} mode, grid is {}",
            spec.mode().name(),
            grid.mode().name()
        )));
    }
    let (nu, nub, nt) = grid.dims();
    let mut psi = Field3::zeros(nu, nub, nt);
    for j in 0..nub {
        let r = grid.r(0, j);
        for k in 0..nt {
            psi.set(0, j, k, r * data.phi_on_cu0.get(0, j, k));
        }
    }
    for i in 0..nu {
        let r = grid.r(i, 0);
        for k in 0..nt {
            psi.set(i, 0, k, r * data.phi_on_cbar0.get(i, 0, k));
        }
    }

    let mut stepper = Stepper::new(grid, spec, cfg);
    for i in 0..nu - 1 {
        for j in 0..nub - 1 {
            stepper.step(&mut psi, i, j)?;
        }
    }
    let mut stats = stepper.stats;
    if stats.unconverged_cells > 0 {
        stats.warnings.push(format!(
            "corrector change above {:e} in {} of {} cells (max {:.3e})",
            cfg.corrector_tol, stats.unconverged_cells, stats.cells, stats.max_final_change
        ));
    }
    if stats.max_contraction > CONTRACTION_LIMIT {
        stats.warnings.push(format!(
            "corrector contraction factor {:.3} exceeds {CONTRACTION_LIMIT}",
            stats.max_contraction
        ));
    }

    let phi = Field3::from_fn(nu, nub, nt, |i, j, k| psi.get(i, j, k) / grid.r(i, j));
    let mut state = FieldState {
        grid: grid.clone(),
        spec: *spec,
        psi,
        lphi: phi.clone(),
        lbarphi: phi.clone(),
        dtheta_phi: phi.clone(),
        phi,
        stats,
    };
    derive_first_derivatives(&mut state);
    Ok(state)
}

struct Stepper<'a> {
    grid: &'a DoubleNullGrid,
    cfg: &'a SolverConfig,
    frames: Vec<FrameComponents>,
    nonlinear: bool,
    stats: MarchStats,
    south: Vec<f64>,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    base: Vec<f64>,
    center: Vec<f64>,
    dcenter: Vec<f64>,
    lap: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(grid: &'a DoubleNullGrid, spec: &NullFormSpec, cfg: &'a SolverConfig) -> Self {
        let nt = grid.n_theta();
        let v = || vec![0.0; nt];
        Self {
            grid,
            cfg,
            frames: frame_table(spec, grid),
            nonlinear: !spec.q().is_zero(),
            stats: MarchStats::default(),
            south: v(),
            east: v(),
            west: v(),
            north: v(),
            base: v(),
            center: v(),
            dcenter: v(),
            lap: v(),
            rhs: v(),
            scratch: v(),
        }
    }

    fn step(&mut self, psi: &mut Field3, i: usize, j: usize) -> Result<()> {
        let g = self.grid;
        let nt = g.n_theta();
        let (du, dub) = (g.du(), g.dubar());
        let area = du * dub;
        let uc = 0.5 * (g.u(i) + g.u(i + 1));
        let ubc = 0.5 * (g.ubar(j) + g.ubar(j + 1));
        let rc = ubc - uc;
        self.south.copy_from_slice(psi.sphere(i, j));
        self.east.copy_from_slice(psi.sphere(i + 1, j));
        self.west.copy_from_slice(psi.sphere(i, j + 1));

        // Explicit part: ψ_E + ψ_W − ψ_S + ΔuΔū r⁻² Δ_S (ψ_S + ψ_E + ψ_W)/4.
        for k in 0..nt {
            self.scratch[k] = self.south[k] + self.east[k] + self.west[k];
        }
        g.angular_laplacian(&self.scratch, 1.0, &mut self.lap);
        let kappa = area / (4.0 * rc * rc);
        for k in 0..nt {
            self.base[k] = self.east[k] + self.west[k] - self.south[k] + kappa * self.lap[k];
        }

        // Predictor.
        for k in 0..nt {
            self.north[k] = self.east[k] + self.west[k] - self.south[k];
        }
        let passes = if self.nonlinear { self.cfg.corrector_iterations } else { 1 };
        let mut prev_change = f64::NAN;
        let mut change = 0.0;
        for pass in 0..passes {
            for k in 0..nt {
                self.rhs[k] = self.base[k];
            }
            if self.nonlinear {
                self.add_null_form(rc, area);
            }
            self.solve_implicit(kappa);
            change = 0.0_f64;
            for k in 0..nt {
                change = change.max((self.rhs[k] - self.north[k]).abs());
                self.north[k] = self.rhs[k];
            }
            if pass > 0 && prev_change > 0.0 {
                let floor = 1e-13 * (1.0 + self.north.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
                if prev_change > floor {
                    self.stats.max_contraction = self.stats.max_contraction.max(change / prev_change);
                }
            }
            prev_change = change;
            if pass > 0 && change <= self.cfg.corrector_tol {
                break;
            }
        }
        self.stats.cells += 1;
        if self.nonlinear {
            self.stats.max_final_change = self.stats.max_final_change.max(change);
            if change > self.cfg.corrector_tol {
                self.stats.unconverged_cells += 1;
            }
        }

        for k in 0..nt {
            let v = self.north[k];
            if !v.is_finite() || v.abs() > self.cfg.blowup_threshold {
                return Err(Error::Breakdown {
                    u: g.u(i + 1),
                    ubar: g.ubar(j + 1),
                    value: v.abs(),
                    threshold: self.cfg.blowup_threshold,
                });
            }
        }
        psi.sphere_mut(i + 1, j + 1).copy_from_slice(&self.north);
        Ok(())
    }

    // rhs −= ΔuΔū r Q(∇φ,∇φ) at the cell center.
    fn add_null_form(&mut self, rc: f64, area: f64) {
        let g = self.grid;
        let nt = g.n_theta();
        let (du, dub) = (g.du(), g.dubar());
        for k in 0..nt {
            self.center[k] = 0.25 * (self.south[k] + self.east[k] + self.west[k] + self.north[k]);
        }
        if g.mode() == AngularMode::Axisym {
            g.d_theta(&self.center, Parity::Even, &mut self.dcenter);
        } else {
            self.dcenter[0] = 0.0;
        }
        for k in 0..nt {
            let pc = self.center[k];
            let dpsi_dub = (self.west[k] - self.south[k] + self.north[k] - self.east[k]) / (2.0 * dub);
            let dpsi_du = (self.east[k] - self.south[k] + self.north[k] - self.west[k]) / (2.0 * du);
            let grad = FrameGradient::new(
                dpsi_dub / rc - pc / (rc * rc),
                dpsi_du / rc + pc / (rc * rc),
                [self.dcenter[k] / (rc * rc), 0.0],
            );
            let q = self.frames[k].evaluate(&grad, &grad);
            self.rhs[k] -= area * rc * q;
        }
    }

    // Solves (I − κ Δ_S) x = rhs in place (Thomas algorithm).
    fn solve_implicit(&mut self, kappa: f64) {
        let g = self.grid;
        if g.mode() == AngularMode::Spherical {
            return;
        }
        let st = g.laplacian_stencil();
        let n = g.n_theta();
        let c = &mut self.scratch;
        let d = &mut self.rhs;
        let b0 = 1.0 - kappa * st[0][1];
        c[0] = -kappa * st[0][2] / b0;
        d[0] /= b0;
        for k in 1..n {
            let a = -kappa * st[k][0];
            let b = 1.0 - kappa * st[k][1];
            let m = b - a * c[k - 1];
            c[k] = if k + 1 < n { -kappa * st[k][2] / m } else { 0.0 };
            d[k] = (d[k] - a * d[k - 1]) / m;
        }
        for k in (0..n - 1).rev() {
            d[k] -= c[k] * d[k + 1];
        }
    }
}

/// Second-order derivative along an index: centered inside, one-sided at the ends.
pub(crate) fn diff_along(vals: &[f64], h: f64, m: usize) -> f64 {
    let n = vals.len();
    if m == 0 {
        (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    } else if m == n - 1 {
        (3.0 * vals[n - 1] - 4.0 * vals[n - 2] + vals[n - 3]) / (2.0 * h)
    } else {
        (vals[m + 1] - vals[m - 1]) / (2.0 * h)
    }
}

/// Second derivative along an index, second order including the ends.
pub(crate) fn second_diff_along(vals: &[f64], h: f64, m: usize) -> f64 {
    let n = vals.len();
    let h2 = h * h;
    if n < 4 {
        return if n == 3 { (vals[0] - 2.0 * vals[1] + vals[2]) / h2 } else { 0.0 };
    }
    if m == 0 {
        (2.0 * vals[0] - 5.0 * vals[1] + 4.0 * vals[2] - vals[3]) / h2
    } else if m == n - 1 {
        (2.0 * vals[n - 1] - 5.0 * vals[n - 2] + 4.0 * vals[n - 3] - vals[n - 4]) / h2
    } else {
        (vals[m + 1] - 2.0 * vals[m] + vals[m - 1]) / h2
    }
}

/// Fills `Lφ`, `L̄φ` and `∂_θ φ` from `φ` by second-order differences.
pub fn derive_first_derivatives(state: &mut FieldState) {
    let g = &state.grid;
    let (nu, nub, nt) = g.dims();
    let phi = &state.phi;
    let mut line = Vec::new();
    for i in 0..nu {
        for k in 0..nt {
            line.clear();
            line.extend((0..nub).map(|j| phi.get(i, j, k)));
            for j in 0..nub {
                state.lphi.set(i, j, k, diff_along(&line, g.dubar(), j));
            }
        }
    }
    for j in 0..nub {
        for k in 0..nt {
            line.clear();
            line.extend((0..nu).map(|i| phi.get(i, j, k)));
            for i in 0..nu {
                state.lbarphi.set(i, j, k, diff_along(&line, g.du(), i));
            }
        }
    }
    for i in 0..nu {
        for j in 0..nub {
            g.d_theta(phi.sphere(i, j), Parity::Even, state.dtheta_phi.sphere_mut(i, j));
        }
    }
}

/// Outcome of [`blowup_guard`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GuardStatus {
    Ok,
    Breakdown { u: f64, ubar: f64, value: f64 },
}

/// Scans `ψ` in marching order for the first value above the threshold.
pub fn blowup_guard(state: &FieldState, threshold: f64) -> GuardStatus {
    let (nu, nub, _) = state.grid.dims();
    for i in 0..nu {
        for j in 0..nub {
            for &v in state.psi.sphere(i, j) {
                if !v.is_finite() || v.abs() > threshold {
                    return GuardStatus::Breakdown {
                        u: state.grid.u(i),
                        ubar: state.grid.ubar(j),
                        value: v.abs(),
                    };
                }
            }
        }
    }
    GuardStatus::Ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{DipoleWave, ExactSolution, Nirenberg, SphericalWave};
    use crate::nullform::{basis_form, BasisForm};
    use crate::pulse::{build_data, CapMode, PulseProfile};

    fn loose() -> SolverConfig {
        SolverConfig {
            min_ubar_cells: 2,
            ..SolverConfig::default()
        }
    }

    fn max_error(state: &FieldState, sol: &dyn ExactSolution) -> f64 {
        let g = &state.grid;
        let (nu, nub, nt) = g.dims();
        let mut e = 0.0_f64;
        for i in 0..nu {
            for j in 0..nub {
                for k in 0..nt {
                    let ex = sol.phi(g.u(i), g.ubar(j), g.theta(k));
                    e = e.max((state.phi.get(i, j, k) - ex).abs());
                }
            }
        }
        e
    }

    #[test]
    fn admissibility() {
        let q12 = basis_form(BasisForm::Pair(1, 2));
        let q03 = basis_form(BasisForm::Pair(0, 3));
        let q0 = basis_form(BasisForm::Q0);
        let err = NullFormSpec::new(q12, AngularMode::Spherical).unwrap_err();
        assert_eq!(err.to_string(), "null form not admissible in spherical mode");
        assert!(NullFormSpec::new(q03, AngularMode::Spherical).is_err());
        assert!(NullFormSpec::new(q03, AngularMode::Axisym).is_ok());
        assert!(NullFormSpec::new(q12, AngularMode::Axisym).is_err());
        assert!(NullFormSpec::new(q0.scaled(3.0), AngularMode::Spherical).is_ok());
    }

    #[test]
    fn rhs_examples() {
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0), AngularMode::Axisym).unwrap();
        let p = SpherePoint::new(3.0, 0.4, 0.0);
        let out = FrameGradient::new(5.0, 0.0, [0.0; 2]);
        assert!(rhs_null_form(&spec, &p, &out).unwrap().abs() < 1e-14);
        let mixed = FrameGradient::new(1.0, 1.0, [0.0; 2]);
        assert!((rhs_null_form(&spec, &p, &mixed).unwrap() + 1.0).abs() < 1e-14);
        let spec2 =
            NullFormSpec::new(basis_form(BasisForm::Q0).scaled(2.0), AngularMode::Axisym).unwrap();
        assert!((rhs_null_form(&spec2, &p, &mixed).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = DoubleNullGrid::new(-3.0, 0.1, 16, 8, AngularMode::Axisym, 33).unwrap();
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0), AngularMode::Axisym).unwrap();
        let s = march(&CharacteristicData::zero(&g), &spec, &g, &loose()).unwrap();
        assert_eq!(s.psi.max_abs(), 0.0);
        assert_eq!(blowup_guard(&s, 1e6), GuardStatus::Ok);
    }

    #[test]
    fn resolution_rule_enforced() {
        let g = DoubleNullGrid::new(-3.0, 0.1, 16, 8, AngularMode::Spherical, 1).unwrap();
        let spec = NullFormSpec::linear(AngularMode::Spherical);
        let r = march(&CharacteristicData::zero(&g), &spec, &g, &SolverConfig::default());
        assert!(matches!(r, Err(Error::Resolution(_))));
    }

    #[test]
    fn spherical_linear_wave_is_reproduced() {
        let sol = SphericalWave { a: 1.0, c: 0.05, w: 0.02 };
        let g = DoubleNullGrid::new(-3.0, 0.1, 32, 32, AngularMode::Spherical, 1).unwrap();
        let data = CharacteristicData::from_solution(&g, &sol);
        let s = march(&data, &NullFormSpec::linear(AngularMode::Spherical), &g, &SolverConfig::default())
            .unwrap();
        assert!(max_error(&s, &sol) < 1e-12);
    }

    #[test]
    fn dipole_converges_at_second_order() {
        let sol = DipoleWave::default();
        let errs: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&m| {
                let g = DoubleNullGrid::new(-3.0, 0.5, 16 * m, 8 * m, AngularMode::Axisym, 16 * m + 1)
                    .unwrap();
                let data = CharacteristicData::from_solution(&g, &sol);
                let s = march(&data, &NullFormSpec::linear(AngularMode::Axisym), &g, &loose()).unwrap();
                max_error(&s, &sol)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.2, "{errs:?}");
        }
    }

    #[test]
    fn nonlinear_exact_solution_converges() {
        let c0 = 0.8;
        let sol = Nirenberg { c0, linear: DipoleWave::default() };
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0).scaled(c0), AngularMode::Axisym).unwrap();
        let errs: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&m| {
                let g = DoubleNullGrid::new(-3.0, 0.5, 16 * m, 8 * m, AngularMode::Axisym, 16 * m + 1)
                    .unwrap();
                let data = CharacteristicData::from_solution(&g, &sol);
                let s = march(&data, &spec, &g, &loose()).unwrap();
                assert!(s.stats.max_contraction < CONTRACTION_LIMIT);
                max_error(&s, &sol)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "{errs:?}");
        }
    }

    #[test]
    fn bottom_edge_and_data_derivatives() {
        let profile = PulseProfile::new(1.0, CapMode::Fixed(1.0)).unwrap();
        let g = DoubleNullGrid::new(-4.0, 0.1, 48, 64, AngularMode::Axisym, 65).unwrap();
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0), AngularMode::Axisym).unwrap();
        let s = march(&build_data(&profile, &g).unwrap(), &spec, &g, &SolverConfig::default()).unwrap();
        let (nu, _, nt) = g.dims();
        let edge = (0..nu).flat_map(|i| (0..nt).map(move |k| (i, k)));
        let m = edge.map(|(i, k)| s.phi.get(i, 0, k).abs()).fold(0.0, f64::max);
        assert!(m <= 1e-12 * s.phi.max_abs());
        // Lφ on the data edge matches the analytic derivative.
        let mut e = 0.0_f64;
        for j in 0..=64 {
            for k in 0..nt {
                let ex = profile.lk_phi_on_cu0(1, g.ubar(j), g.theta(k), 0.1, -4.0, AngularMode::Axisym);
                e = e.max((s.lphi.get(0, j, k) - ex).abs());
            }
        }
        assert!(e < 0.05 * s.lphi.max_abs(), "{e}");
    }

    #[test]
    fn march_is_deterministic() {
        let profile = PulseProfile::new(2.0, CapMode::Fixed(1.0)).unwrap();
        let g = DoubleNullGrid::new(-4.0, 0.1, 24, 32, AngularMode::Axisym, 65).unwrap();
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0), AngularMode::Axisym).unwrap();
        let d = build_data(&profile, &g).unwrap();
        let a = march(&d, &spec, &g, &SolverConfig::default()).unwrap();
        let b = march(&d, &spec, &g, &SolverConfig::default()).unwrap();
        assert_eq!(a.psi.as_slice(), b.psi.as_slice());
    }

    #[test]
    fn blowup_is_localized() {
        let profile = PulseProfile::new(2e3, CapMode::Fixed(1.0)).unwrap();
        let g = DoubleNullGrid::new(-2.0, 0.2, 16, 32, AngularMode::Axisym, 33).unwrap();
        let spec = NullFormSpec::new(basis_form(BasisForm::Q0), AngularMode::Axisym).unwrap();
        match march(&build_data(&profile, &g).unwrap(), &spec, &g, &SolverConfig::default()) {
            Err(Error::Breakdown { u, ubar, value, threshold }) => {
                assert!(value > threshold || !value.is_finite());
                assert!(u > -2.0 && u <= -1.0 && ubar > 0.0 && ubar <= 0.2);
            }
            Ok(s) => assert_eq!(blowup_guard(&s, 1e6), GuardStatus::Ok),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
