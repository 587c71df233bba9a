//! Double-null grids, angular operators and flux quadratures.
//!
//! Coordinates: `u = (t − r)/2`, `ū = (t + r)/2`, so `r = ū − u` and `t = u + ū`.
//! The rectangle is `u ∈ [u₀, −1]`, `ū ∈ [0, δ]`; with `δ < 1` this keeps `r ≥ 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::field::Field3;
use crate::nullform::FourVector;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngularMode {
    /// Spherically symmetric fields, no angular nodes.
    Spherical,
    /// Axisymmetric fields on `θ ∈ [0, π]`.
    Axisym,
}

impl AngularMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spherical => "spherical",
            Self::Axisym => "axisym",
        }
    }
}

/// Reflection parity of an angular field about the poles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Self::Even => Self::Odd,
            Self::Odd => Self::Even,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::Even => 1.0,
            Self::Odd => -1.0,
        }
    }
}

/// One node of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub u: f64,
    pub ubar: f64,
    pub r: f64,
    pub t: f64,
    pub theta: f64,
}

/// Discretization of `[u₀, −1] × [0, δ]` times the angular nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleNullGrid {
    u0: f64,
    delta: f64,
    n_u: usize,
    n_ubar: usize,
    mode: AngularMode,
    n_theta: usize,
    sin_node: Vec<f64>,
    sin_half: Vec<f64>,
    // Rows (a, b, c) of the unscaled sphere Laplacian.
    stencil: Vec<[f64; 3]>,
}

pub const U_FINAL: f64 = -1.0;
pub const MIN_THETA_NODES: usize = 5;

impl DoubleNullGrid {
    /// `n_u`, `n_ubar` are cell counts; `n_theta` is ignored in spherical mode.
    pub fn new(
        u0: f64,
        delta: f64,
        n_u: usize,
        n_ubar: usize,
        mode: AngularMode,
        n_theta: usize,
    ) -> Result<Self> {
        if !(u0 < U_FINAL) {
            return Err(Error::Config(format!("u0 = {u0} must be < -1")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta = {delta} must lie in (0, 1)")));
        }
        if n_u < 2 || n_ubar < 2 {
            return Err(Error::Resolution(format!(
                "n_u = {n_u}, n_ubar = {n_ubar}; both need at least 2 cells"
            )));
        }
        let n_theta = match mode {
            AngularMode::Spherical => 1,
            AngularMode::Axisym => {
                if n_theta < MIN_THETA_NODES {
                    return Err(Error::Resolution(format!(
                        "n_theta = {n_theta}, at least {MIN_THETA_NODES} required"
                    )));
                }
                n_theta
            }
        };
        let mut grid = Self {
            u0,
            delta,
            n_u,
            n_ubar,
            mode,
            n_theta,
            sin_node: Vec::new(),
            sin_half: Vec::new(),
            stencil: Vec::new(),
        };
        grid.build_tables();
        Ok(grid)
    }

    /// Grid obeying `Δū ≤ δ / ubar_cells_per_delta` and `Δu ≤ du_max`.
    pub fn with_resolution(
        u0: f64,
        delta: f64,
        mode: AngularMode,
        n_theta: usize,
        ubar_cells: usize,
        du_max: f64,
    ) -> Result<Self> {
        let n_u = ((U_FINAL - u0) / du_max).ceil().max(2.0) as usize;
        Self::new(u0, delta, n_u, ubar_cells, mode, n_theta)
    }

    fn build_tables(&mut self) {
        if self.mode == AngularMode::Spherical {
            self.sin_node = vec![1.0];
            return;
        }
        let n = self.n_theta;
        let h = self.dtheta();
        self.sin_node = (0..n)
            .map(|k| if k == 0 || k == n - 1 { 0.0 } else { (k as f64 * h).sin() })
            .collect();
        self.sin_half = (0..n - 1).map(|k| ((k as f64 + 0.5) * h).sin()).collect();
        let h2 = h * h;
        self.stencil = (0..n)
            .map(|k| {
                if k == 0 {
                    [0.0, -4.0 / h2, 4.0 / h2]
                } else if k == n - 1 {
                    [4.0 / h2, -4.0 / h2, 0.0]
                } else {
                    let (sm, sp) = (self.sin_half[k - 1], self.sin_half[k]);
                    let d = self.sin_node[k] * h2;
                    [sm / d, -(sm + sp) / d, sp / d]
                }
            })
            .collect();
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mode(&self) -> AngularMode {
        self.mode
    }

    /// Cell counts `(n_u, n_ubar)`.
    pub fn cells(&self) -> (usize, usize) {
        (self.n_u, self.n_ubar)
    }

    /// Node counts `(u, ū, θ)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_u + 1, self.n_ubar + 1, self.n_theta)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn du(&self) -> f64 {
        (U_FINAL - self.u0) / self.n_u as f64
    }

    pub fn dubar(&self) -> f64 {
        self.delta / self.n_ubar as f64
    }

    pub fn dtheta(&self) -> f64 {
        match self.mode {
            AngularMode::Spherical => 0.0,
            AngularMode::Axisym => PI / (self.n_theta - 1) as f64,
        }
    }

    pub fn u(&self, i: usize) -> f64 {
        if i == self.n_u {
            U_FINAL
        } else {
            self.u0 + i as f64 * self.du()
        }
    }

    pub fn ubar(&self, j: usize) -> f64 {
        if j == self.n_ubar {
            self.delta
        } else {
            j as f64 * self.dubar()
        }
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.ubar(j) - self.u(i)
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    pub fn sin_theta(&self, k: usize) -> f64 {
        self.sin_node[k]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> GridPoint {
        let (u, ubar) = (self.u(i), self.ubar(j));
        GridPoint {
            i,
            j,
            k,
            u,
            ubar,
            r: ubar - u,
            t: u + ubar,
            theta: self.theta(k),
        }
    }

    /// Index of the last θ node with `θ ≤ theta`.
    pub fn theta_index_below(&self, theta: f64) -> usize {
        if self.mode == AngularMode::Spherical {
            return 0;
        }
        let k = (theta / self.dtheta() + 1e-9).floor();
        (k.max(0.0) as usize).min(self.n_theta - 1)
    }

    /// Index of the u node closest to `u`.
    pub fn nearest_u_index(&self, u: f64) -> usize {
        (((u - self.u0) / self.du()).round().max(0.0) as usize).min(self.n_u)
    }

    pub fn zeros(&self) -> Field3 {
        let (a, b, c) = self.dims();
        Field3::zeros(a, b, c)
    }

    /// Coefficients `(a, b, c)` with `Δ_{S²}f_k = a f_{k−1} + b f_k + c f_{k+1}`.
    pub fn laplacian_stencil(&self) -> &[[f64; 3]] {
        &self.stencil
    }

    /// `Δ̸f = r⁻² Δ_{S²} f` (zero in spherical mode).
    pub fn angular_laplacian(&self, f: &[f64], r: f64, out: &mut [f64]) {
        if self.mode == AngularMode::Spherical {
            out.fill(0.0);
            return;
        }
        let n = self.n_theta;
        let s = 1.0 / (r * r);
        for k in 0..n {
            let [a, b, c] = self.stencil[k];
            let fm = if k == 0 { 0.0 } else { f[k - 1] };
            let fp = if k == n - 1 { 0.0 } else { f[k + 1] };
            out[k] = s * (a * fm + b * f[k] + c * fp);
        }
    }

    /// `∂_θ f` by centered differences with ghost reflection of the given parity.
    pub fn d_theta(&self, f: &[f64], parity: Parity, out: &mut [f64]) {
        if self.mode == AngularMode::Spherical {
            out.fill(0.0);
            return;
        }
        let n = self.n_theta;
        let h2 = 2.0 * self.dtheta();
        let sg = parity.sign();
        out[0] = (f[1] - sg * f[1]) / h2;
        for k in 1..n - 1 {
            out[k] = (f[k + 1] - f[k - 1]) / h2;
        }
        out[n - 1] = (sg * f[n - 2] - f[n - 2]) / h2;
    }

    /// `∂²_θ f` by centered differences with ghost reflection.
    pub fn d2_theta(&self, f: &[f64], parity: Parity, out: &mut [f64]) {
        if self.mode == AngularMode::Spherical {
            out.fill(0.0);
            return;
        }
        let n = self.n_theta;
        let h = self.dtheta();
        let sg = parity.sign();
        out[0] = (f[1] - 2.0 * f[0] + sg * f[1]) / (h * h);
        for k in 1..n - 1 {
            out[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h);
        }
        out[n - 1] = (sg * f[n - 2] - 2.0 * f[n - 1] + f[n - 2]) / (h * h);
    }

    /// `|∇̸f|² = r⁻²(∂_θ f)²` for an even field.
    pub fn angular_gradient_sq(&self, f: &[f64], r: f64, out: &mut [f64]) {
        self.d_theta(f, Parity::Even, out);
        let s = 1.0 / (r * r);
        for v in out.iter_mut() {
            *v = s * *v * *v;
        }
    }

    /// `∫_{S_r} f dΩ r²`; trapezoid in θ.
    pub fn sphere_integral(&self, f: &[f64], r: f64) -> f64 {
        match self.mode {
            AngularMode::Spherical => 4.0 * PI * r * r * f[0],
            AngularMode::Axisym => self.sphere_integral_range(f, r, 0, self.n_theta - 1),
        }
    }

    /// Sphere integral restricted to the θ nodes `k_lo..=k_hi` (axisym only;
    /// spherical mode integrates the whole sphere).
    pub fn sphere_integral_range(&self, f: &[f64], r: f64, k_lo: usize, k_hi: usize) -> f64 {
        if self.mode == AngularMode::Spherical {
            return 4.0 * PI * r * r * f[0];
        }
        if k_hi <= k_lo {
            return 0.0;
        }
        let mut s = 0.0;
        for k in k_lo..=k_hi {
            let w = if k == k_lo || k == k_hi { 0.5 } else { 1.0 };
            s += w * f[k] * self.sin_node[k];
        }
        2.0 * PI * r * r * s * self.dtheta()
    }

    /// `∫_{C_u} density` over `ū ∈ [0, ū_{j_end}]` at the u node `i`.
    pub fn flux_integral_cu(&self, density: &Field3, i: usize, j_end: usize) -> f64 {
        self.flux_integral_cu_range(density, i, j_end, 0, self.n_theta - 1)
    }

    pub fn flux_integral_cu_range(
        &self,
        density: &Field3,
        i: usize,
        j_end: usize,
        k_lo: usize,
        k_hi: usize,
    ) -> f64 {
        let vals: Vec<f64> = (0..=j_end)
            .map(|j| self.sphere_integral_range(density.sphere(i, j), self.r(i, j), k_lo, k_hi))
            .collect();
        trapezoid(&vals, self.dubar())
    }

    /// `∫_{C̲_ū} density` over `u ∈ [u₀, u_{i_end}]` at the ū node `j`.
    pub fn flux_integral_cbar(&self, density: &Field3, j: usize, i_end: usize) -> f64 {
        let vals: Vec<f64> = (0..=i_end)
            .map(|i| self.sphere_integral(density.sphere(i, j), self.r(i, j)))
            .collect();
        trapezoid_nonuniform(&vals, |i| self.u(i))
    }
}

/// Composite trapezoid rule with uniform step `h`.
pub fn trapezoid(vals: &[f64], h: f64) -> f64 {
    match vals.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (vals[0] + vals[n - 1]) + vals[1..n - 1].iter().sum::<f64>()),
    }
}

fn trapezoid_nonuniform(vals: &[f64], x: impl Fn(usize) -> f64) -> f64 {
    vals.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (w[0] + w[1]) * (x(i + 1) - x(i)))
        .sum()
}

/// Cartesian components of `L`, `L̄` and `e_θ` at a grid point (azimuth 0).
pub fn frame_vectors(point: &GridPoint) -> Result<(FourVector, FourVector, FourVector)> {
    if !(point.r > 0.0) {
        return Err(Error::Domain(format!("r = {} must be positive", point.r)));
    }
    let (s, c) = point.theta.sin_cos();
    Ok((
        FourVector::new(1.0, s, 0.0, c),
        FourVector::new(1.0, -s, 0.0, -c),
        FourVector::new(0.0, c, 0.0, -s),
    ))
}
