//! Quantities measured on a marched [`FieldState`]: stress components, weighted
//! energy norms, the energy identity, sup-norm tables and focusing reports.
//!
//! Angular derivatives of order `m` are taken as `r⁻ᵐ ∂_θᵐ`, except the
//! second-order one which uses the full axisymmetric Hessian
//! `(∂²_θ f, cotθ ∂_θ f)`. Higher angular derivatives of `Lφ`, `L̄φ` are the
//! θ-derivatives of those fields.

mod focusing;
mod identity;
mod norms;

pub use focusing::{
    focusing_report, interior_trace, radiation_field, slice_trace, trace_on_cbar_delta,
    FocusingReport, FocusingRow, SliceTrace, DEFAULT_TUBE_MARGIN,
};
pub use identity::{
    deformation_density, energy_identity_residual, equation_residual, EquationResidual,
    IdentityResidual, Multiplier, RESIDUAL_FLOOR,
};
pub use norms::{
    energy_norms, lbar_l2_on_cu, linf_table, sobolev_ratio, EnergyNorms, LbarFlux, LinfRow,
    LINF_WEIGHTS,
};

use crate::field::Field3;
use crate::geometry::{trapezoid, DoubleNullGrid, Parity};
use crate::solver::FieldState;

/// `𝕋(L,L) = |Lφ|²`, `𝕋(L,L̄) = |∇̸φ|²`, `𝕋(L̄,L̄) = |L̄φ|²` at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct StressComponents {
    pub t_ll: Field3,
    pub t_llbar: Field3,
    pub t_lbarlbar: Field3,
}

pub fn stress(state: &FieldState) -> StressComponents {
    let (nu, nub, nt) = state.grid.dims();
    StressComponents {
        t_ll: state.lphi.map(|v| v * v),
        t_llbar: Field3::from_fn(nu, nub, nt, |i, j, k| state.ang_phi(i, j, k).powi(2)),
        t_lbarlbar: state.lbarphi.map(|v| v * v),
    }
}

/// `∂_θᵐ f` for `m = 0..=m_max`, treating `f` as even across the poles.
pub(crate) fn theta_derivatives(grid: &DoubleNullGrid, f: &[f64], m_max: usize) -> Vec<Vec<f64>> {
    let mut out = vec![f.to_vec()];
    let mut parity = Parity::Even;
    for _ in 0..m_max {
        let mut d = vec![0.0; f.len()];
        grid.d_theta(out.last().expect("non-empty"), parity, &mut d);
        parity = parity.flip();
        out.push(d);
    }
    out
}

/// Hessian size `((∂²_θ f)² + (cotθ ∂_θ f)²)^{1/2}` at node `k`; at the poles
/// the second entry tends to `∂²_θ f`.
pub(crate) fn hessian_norm(grid: &DoubleNullGrid, d1: &[f64], d2: &[f64], k: usize) -> f64 {
    let n = grid.n_theta();
    let c = if k == 0 || k + 1 == n {
        d2[k]
    } else {
        grid.theta(k).cos() / grid.sin_theta(k) * d1[k]
    };
    d2[k].hypot(c)
}

/// Angular derivative size of order `order ∈ {1, 2, 3}` from θ-derivatives.
pub(crate) fn angular_size(grid: &DoubleNullGrid, d: &[Vec<f64>], order: usize, k: usize, r: f64) -> f64 {
    match order {
        1 => d[1][k].abs() / r,
        2 => hessian_norm(grid, &d[1], &d[2], k) / (r * r),
        3 => d[3][k].abs() / (r * r * r),
        _ => unreachable!("angular orders above 3 are not supported"),
    }
}

/// `∫_{C_{u_i}} f` over `ū ∈ [0, ū_{j_end}]` and θ nodes `k_lo..=k_hi`.
pub(crate) fn cu_integral(
    grid: &DoubleNullGrid,
    i: usize,
    j_end: usize,
    (k_lo, k_hi): (usize, usize),
    f: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut buf = vec![0.0; grid.n_theta()];
    let vals: Vec<f64> = (0..=j_end)
        .map(|j| {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = f(j, k);
            }
            grid.sphere_integral_range(&buf, grid.r(i, j), k_lo, k_hi)
        })
        .collect();
    trapezoid(&vals, grid.dubar())
}

/// `∫_{C̲_{ū_j}} f` over `u ∈ [u₀, u_{i_end}]`.
pub(crate) fn cbar_integral(
    grid: &DoubleNullGrid,
    j: usize,
    i_end: usize,
    f: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut buf = vec![0.0; grid.n_theta()];
    let vals: Vec<f64> = (0..=i_end)
        .map(|i| {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = f(i, k);
            }
            grid.sphere_integral(&buf, grid.r(i, j))
        })
        .collect();
    trapezoid(&vals, grid.du())
}

pub(crate) fn full_sphere(grid: &DoubleNullGrid) -> (usize, usize) {
    (0, grid.n_theta() - 1)
}
