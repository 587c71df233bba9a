//! Short-pulse characteristic data.
//!
//! On the outgoing cone `C_{u₀}` the data is `φ = δ^{1/2} |u₀|⁻¹ ψ₀(ū/δ, θ)`
//! with `ψ₀(s, θ) = A χ(s) χ_cap(θ / cap)`; on `C̲₀` it vanishes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::exact::ExactSolution;
use crate::field::Field3;
use crate::geometry::{AngularMode, DoubleNullGrid};
use crate::{Error, Result};

/// Minimum number of θ nodes across the cap.
pub const MIN_CAP_NODES: f64 = 8.0;

const BUMP_NORM: f64 = 54.598_150_033_144_236; // e⁴

/// `exp(−1/(s(1−s)))` on `(0, 1)`, normalized to a maximum of 1 at `s = ½`.
pub fn bump(s: f64) -> f64 {
    bump_derivative(s, 0)
}

/// `d^k χ / ds^k` for `k ≤ 3`.
pub fn bump_derivative(s: f64, k: usize) -> f64 {
    if !(s > 0.0 && s < 1.0) {
        return 0.0;
    }
    let p = s * (1.0 - s);
    let dp = 1.0 - 2.0 * s;
    let chi = BUMP_NORM * (-1.0 / p).exp();
    if chi == 0.0 {
        return 0.0;
    }
    // χ = e^g with g = −1/p, p'' = −2.
    let g1 = dp / (p * p);
    let g2 = -2.0 * (p + dp * dp) / (p * p * p);
    let g3 = 6.0 * dp * (2.0 * p + dp * dp) / (p * p * p * p);
    match k {
        0 => chi,
        1 => chi * g1,
        2 => chi * (g1 * g1 + g2),
        3 => chi * (g1 * g1 * g1 + 3.0 * g1 * g2 + g3),
        _ => panic!("bump derivatives are implemented up to order 3"),
    }
}

/// `exp(1 − 1/(1 − x²))` for `|x| < 1`, else 0; equal to 1 at `x = 0`.
pub fn cap_profile(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

pub fn cap_profile_derivative(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - x * x;
    cap_profile(x) * (-2.0 * x / (q * q))
}

/// Angular extent of the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    /// No angular dependence.
    Uniform,
    /// Cap of fixed radius around `θ = 0`.
    Fixed(f64),
    /// Cap of radius `δ^{1/2}` around `θ = 0`.
    SqrtDelta,
}

/// The seed `ψ₀(s, θ) = amplitude · χ(s) · χ_cap(θ / cap)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub amplitude: f64,
    pub cap: CapMode,
    pub target_energy: Option<f64>,
}

impl PulseProfile {
    pub fn new(amplitude: f64, cap: CapMode) -> Result<Self> {
        let p = Self {
            amplitude,
            cap,
            target_energy: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "amplitude = {} must be finite and non-negative",
                self.amplitude
            )));
        }
        if let CapMode::Fixed(c) = self.cap {
            if !(c > 0.0 && c <= PI) {
                return Err(Error::Config(format!("cap_radius = {c} must lie in (0, pi]")));
            }
        }
        if let Some(e) = self.target_energy {
            if !(e > 0.0) {
                return Err(Error::Config(format!("target_energy = {e} must be positive")));
            }
        }
        Ok(())
    }

    /// Cap radius at this δ; `None` when the data has no angular dependence.
    pub fn cap_radius(&self, delta: f64) -> Option<f64> {
        match self.cap {
            CapMode::Uniform => None,
            CapMode::Fixed(c) => Some(c),
            CapMode::SqrtDelta => Some(delta.sqrt().min(PI)),
        }
    }

    /// Angular factor `χ_cap(θ / cap)` (1 without a cap).
    pub fn angular(&self, theta: f64, delta: f64, mode: AngularMode) -> f64 {
        match (mode, self.cap_radius(delta)) {
            (AngularMode::Spherical, _) | (_, None) => 1.0,
            (AngularMode::Axisym, Some(c)) => cap_profile(theta / c),
        }
    }

    /// `∂_θ` of the angular factor.
    pub fn angular_dtheta(&self, theta: f64, delta: f64, mode: AngularMode) -> f64 {
        match (mode, self.cap_radius(delta)) {
            (AngularMode::Spherical, _) | (_, None) => 0.0,
            (AngularMode::Axisym, Some(c)) => cap_profile_derivative(theta / c) / c,
        }
    }

    /// `∂_s^k ψ₀(s, θ)`.
    pub fn psi0(&self, k: usize, s: f64, theta: f64, delta: f64, mode: AngularMode) -> f64 {
        self.amplitude * bump_derivative(s, k) * self.angular(theta, delta, mode)
    }

    /// `∫_{S²} χ_cap² dΩ` on the unit sphere.
    pub fn angular_l2_sq(&self, delta: f64, mode: AngularMode) -> f64 {
        match (mode, self.cap_radius(delta)) {
            (AngularMode::Spherical, _) | (_, None) => 4.0 * PI,
            (AngularMode::Axisym, Some(c)) => {
                2.0 * PI * gauss_integral(0.0, c, |t| cap_profile(t / c).powi(2) * t.sin())
            }
        }
    }

    /// `φ` on `C_{u₀}` at `(ū, θ)`.
    pub fn phi_on_cu0(&self, ubar: f64, theta: f64, delta: f64, u0: f64, mode: AngularMode) -> f64 {
        delta.sqrt() / u0.abs() * self.psi0(0, ubar / delta, theta, delta, mode)
    }

    /// `L^k φ = ∂_ū^k φ` on `C_{u₀}` at `(ū, θ)`.
    pub fn lk_phi_on_cu0(
        &self,
        k: usize,
        ubar: f64,
        theta: f64,
        delta: f64,
        u0: f64,
        mode: AngularMode,
    ) -> f64 {
        delta.powf(0.5 - k as f64) / u0.abs() * self.psi0(k, ubar / delta, theta, delta, mode)
    }
}

/// Data on the two initial null hypersurfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicData {
    /// `φ` on `C_{u₀}`, dims `(1, ū nodes, θ nodes)`.
    pub phi_on_cu0: Field3,
    /// `φ` on `C̲₀`, dims `(u nodes, 1, θ nodes)`; identically zero.
    pub phi_on_cbar0: Field3,
    pub delta: f64,
    pub u0: f64,
}

impl CharacteristicData {
    pub fn zero(grid: &DoubleNullGrid) -> Self {
        let (a, b, c) = grid.dims();
        Self {
            phi_on_cu0: Field3::zeros(1, b, c),
            phi_on_cbar0: Field3::zeros(a, 1, c),
            delta: grid.delta(),
            u0: grid.u0(),
        }
    }

    /// Data given by an arbitrary function `φ(ū, θ)` on `C_{u₀}`.
    pub fn from_fn(grid: &DoubleNullGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let (a, b, c) = grid.dims();
        Self {
            phi_on_cu0: Field3::from_fn(1, b, c, |_, j, k| f(grid.ubar(j), grid.theta(k))),
            phi_on_cbar0: Field3::zeros(a, 1, c),
            delta: grid.delta(),
            u0: grid.u0(),
        }
    }

    /// Traces of a closed-form solution on both initial hypersurfaces.
    pub fn from_solution(grid: &DoubleNullGrid, sol: &dyn ExactSolution) -> Self {
        let (a, b, c) = grid.dims();
        let u0 = grid.u0();
        Self {
            phi_on_cu0: Field3::from_fn(1, b, c, |_, j, k| sol.phi(u0, grid.ubar(j), grid.theta(k))),
            phi_on_cbar0: Field3::from_fn(a, 1, c, |i, _, k| sol.phi(grid.u(i), 0.0, grid.theta(k))),
            delta: grid.delta(),
            u0,
        }
    }

    /// Checks that the data matches the grid dimensions.
    pub fn check_grid(&self, grid: &DoubleNullGrid) -> Result<()> {
        let (a, b, c) = grid.dims();
        if self.phi_on_cu0.dims() != (1, b, c) || self.phi_on_cbar0.dims() != (a, 1, c) {
            return Err(Error::Config("characteristic data does not match the grid".into()));
        }
        if self.phi_on_cu0.get(0, 0, 0) != self.phi_on_cbar0.get(0, 0, 0) {
            return Err(Error::Config("data disagree at the corner sphere".into()));
        }
        Ok(())
    }
}

/// Samples the short-pulse data at the grid nodes.
pub fn build_data(profile: &PulseProfile, grid: &DoubleNullGrid) -> Result<CharacteristicData> {
    profile.validate()?;
    let delta = grid.delta();
    let mode = grid.mode();
    if mode == AngularMode::Axisym {
        if let Some(c) = profile.cap_radius(delta) {
            let across = c / grid.dtheta();
            if across < MIN_CAP_NODES {
                return Err(Error::Resolution(format!(
                    "cap radius {c:.4} spans {across:.1} theta cells, at least {MIN_CAP_NODES} required"
                )));
            }
        }
    }
    let u0 = grid.u0();
    Ok(CharacteristicData::from_fn(grid, |ubar, theta| {
        profile.phi_on_cu0(ubar, theta, delta, u0, mode)
    }))
}

/// `‖L^k φ‖²_{L²(C_{u₀})}` of the analytic data (grid independent).
pub fn data_lk_norm_sq(profile: &PulseProfile, k: usize, delta: f64, u0: f64, mode: AngularMode) -> f64 {
    let a = u0.abs();
    let radial = gauss_integral(0.0, 1.0, |s| bump_derivative(s, k).powi(2) * (delta * s + a).powi(2));
    delta.powi(2 - 2 * k as i32) * profile.amplitude.powi(2) / (a * a)
        * radial
        * profile.angular_l2_sq(delta, mode)
}

/// `∫_{C_{u₀}} |Lφ|²` of the analytic data.
pub fn data_flux_l(profile: &PulseProfile, delta: f64, u0: f64, mode: AngularMode) -> f64 {
    data_lk_norm_sq(profile, 1, delta, u0, mode)
}

/// Rescales the amplitude so that the data flux equals `e0`.
pub fn calibrate_amplitude(
    profile: &PulseProfile,
    e0: f64,
    delta: f64,
    u0: f64,
    mode: AngularMode,
) -> Result<PulseProfile> {
    if !(e0 > 0.0) {
        return Err(Error::Domain(format!("E0 = {e0} must be positive")));
    }
    let mut out = *profile;
    if out.amplitude == 0.0 {
        out.amplitude = 1.0;
    }
    let flux = data_flux_l(&out, delta, u0, mode);
    out.amplitude *= (e0 / flux).sqrt();
    out.target_energy = Some(e0);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DataScalingRow {
    pub k: usize,
    pub delta: f64,
    pub norm: f64,
}

/// `‖∂_ū^k φ‖_{L²(C_{u₀})}` for `k = 1..=k_max` and every δ.
pub fn data_scaling_table(
    profile: &PulseProfile,
    deltas: &[f64],
    u0: f64,
    k_max: usize,
    mode: AngularMode,
) -> Result<Vec<DataScalingRow>> {
    if k_max > 3 {
        return Err(Error::Domain(format!("k_max = {k_max}, at most 3 supported")));
    }
    let mut rows = Vec::new();
    for k in 1..=k_max {
        for &delta in deltas {
            rows.push(DataScalingRow {
                k,
                delta,
                norm: data_lk_norm_sq(profile, k, delta, u0, mode).sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Sup norms of the analytic data on `C_{u₀}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DataSupNorms {
    pub phi: f64,
    pub lphi: f64,
    /// `sup |r⁻¹ ∂_θ φ|`
    pub ang_phi: f64,
}

pub fn data_sup_norms(profile: &PulseProfile, delta: f64, u0: f64, mode: AngularMode) -> DataSupNorms {
    let ns = 2001;
    let nt = 2001;
    let theta_max = profile.cap_radius(delta).unwrap_or(PI);
    let mut out = DataSupNorms {
        phi: 0.0,
        lphi: 0.0,
        ang_phi: 0.0,
    };
    let a = u0.abs();
    for is in 0..ns {
        let s = is as f64 / (ns - 1) as f64;
        let ubar = s * delta;
        let r = ubar - u0;
        let (b0, b1) = (bump_derivative(s, 0), bump_derivative(s, 1));
        for it in 0..nt {
            let th = theta_max * it as f64 / (nt - 1) as f64;
            let ang = profile.angular(th, delta, mode);
            let scale = profile.amplitude / a;
            out.phi = out.phi.max((delta.sqrt() * scale * b0 * ang).abs());
            out.lphi = out.lphi.max((scale / delta.sqrt() * b1 * ang).abs());
            let dth = profile.angular_dtheta(th, delta, mode);
            out.ang_phi = out.ang_phi.max((delta.sqrt() * scale * b0 * dth / r).abs());
        }
    }
    out
}

const GAUSS_NODES: usize = 64;
const GAUSS_PANELS: usize = 16;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_NODES;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// Composite Gauss–Legendre quadrature of a smooth integrand on `[a, b]`.
pub fn gauss_integral(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre();
    let h = (b - a) / GAUSS_PANELS as f64;
    let mut s = 0.0;
    for p in 0..GAUSS_PANELS {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}
