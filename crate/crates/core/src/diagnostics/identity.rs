use serde::Serialize;

use super::{cbar_integral, cu_integral, full_sphere};
use crate::geometry::trapezoid;
use crate::solver::{frame_table, FieldState};

/// Denominator floor for relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Vector field used as the multiplier of the energy current.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Multiplier {
    L,
    Lbar,
    /// A rotation about an axis orthogonal to the symmetry axis.
    Omega,
}

/// Both sides of the energy identity on the rectangle `[u₀, u] × [0, ū]`.
///
/// `lhs = ∫_{C_u} 𝕋(X,L) + ∫_{C̲_ū} 𝕋(X,L̄)` and
/// `rhs = ∫_{C_{u₀}} 𝕋(X,L) + ∫_{C̲_0} 𝕋(X,L̄) − bulk_deformation − bulk_source`,
/// with the bulk terms `∬ 2r²K^X` and `∬ 2r²Φ·Xφ` over `du dū dΩ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub multiplier: Multiplier,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub bulk_deformation: f64,
    pub bulk_source: f64,
}

impl IdentityResidual {
    fn new(multiplier: Multiplier, lhs: f64, rhs: f64, bulk_deformation: f64, bulk_source: f64) -> Self {
        let residual = lhs - rhs;
        Self {
            multiplier,
            lhs,
            rhs,
            residual,
            relative_residual: residual.abs() / lhs.abs().max(RESIDUAL_FLOOR),
            bulk_deformation,
            bulk_source,
        }
    }
}

/// `K^X` at a point. Rotations are Killing, so their deformation density is zero.
pub fn deformation_density(x: Multiplier, lphi: f64, lbarphi: f64, r: f64) -> f64 {
    match x {
        Multiplier::L => lphi * lbarphi / r,
        Multiplier::Lbar => -lphi * lbarphi / r,
        Multiplier::Omega => 0.0,
    }
}

/// Evaluates the energy identity for the multiplier `x` at the node `(i, j)`.
///
/// For an axisymmetric field a transverse rotation gives `Ωφ = cos(α) ∂_θφ`
/// with `α` the azimuth, so every flux and the source term carry the factor
/// `∫₀^{2π} cos α dα = 0`; only the deformation term needs no such argument.
pub fn energy_identity_residual(state: &FieldState, x: Multiplier, i: usize, j: usize) -> IdentityResidual {
    let g = &state.grid;
    let sphere = full_sphere(g);
    let ang2 = |i: usize, j: usize, k: usize| state.ang_phi(i, j, k).powi(2);
    let (cu_density, cbar_density): (
        Box<dyn Fn(usize, usize, usize) -> f64 + '_>,
        Box<dyn Fn(usize, usize, usize) -> f64 + '_>,
    ) = match x {
        Multiplier::L => (Box::new(|i, j, k| state.lphi.get(i, j, k).powi(2)), Box::new(ang2)),
        Multiplier::Lbar => (Box::new(ang2), Box::new(|i, j, k| state.lbarphi.get(i, j, k).powi(2))),
        Multiplier::Omega => (Box::new(|_, _, _| 0.0), Box::new(|_, _, _| 0.0)),
    };
    let lhs = cu_integral(g, i, j, sphere, |jj, k| cu_density(i, jj, k))
        + cbar_integral(g, j, i, |ii, k| cbar_density(ii, j, k));
    let initial = cu_integral(g, 0, j, sphere, |jj, k| cu_density(0, jj, k))
        + cbar_integral(g, 0, i, |ii, k| cbar_density(ii, 0, k));

    let frames = frame_table(&state.spec, g);
    let nonlinear = !state.spec.q().is_zero();
    let mut deform = Vec::with_capacity(i + 1);
    let mut source = Vec::with_capacity(i + 1);
    for ii in 0..=i {
        deform.push(cu_integral(g, ii, j, sphere, |jj, k| {
            2.0 * deformation_density(x, state.lphi.get(ii, jj, k), state.lbarphi.get(ii, jj, k), g.r(ii, jj))
        }));
        source.push(if nonlinear && x != Multiplier::Omega {
            cu_integral(g, ii, j, sphere, |jj, k| {
                let grad = state.frame_gradient(ii, jj, k);
                let xphi = if x == Multiplier::L { grad.l } else { grad.lbar };
                2.0 * frames[k].evaluate(&grad, &grad) * xphi
            })
        } else {
            0.0
        });
    }
    let bulk_deformation = trapezoid(&deform, g.du());
    let bulk_source = trapezoid(&source, g.du());
    IdentityResidual::new(x, lhs, initial - bulk_deformation - bulk_source, bulk_deformation, bulk_source)
}

/// Defect of `−LL̄φ + Δ̸φ + r⁻¹(Lφ − L̄φ) − Q(∇φ,∇φ)` at interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquationResidual {
    pub max_abs: f64,
    /// Largest `|LL̄φ|` among the same nodes, for scale.
    pub scale: f64,
}

/// Evaluates the null-frame form of the equation with centered differences.
pub fn equation_residual(state: &FieldState) -> EquationResidual {
    let g = &state.grid;
    let (nu, nub, nt) = g.dims();
    let frames = frame_table(&state.spec, g);
    let (du, dub) = (g.du(), g.dubar());
    let phi = &state.phi;
    let mut lap = vec![0.0; nt];
    let mut out = EquationResidual { max_abs: 0.0, scale: 0.0 };
    for i in 1..nu - 1 {
        for j in 1..nub - 1 {
            let r = g.r(i, j);
            g.angular_laplacian(phi.sphere(i, j), r, &mut lap);
            for k in 0..nt {
                let mixed = (phi.get(i + 1, j + 1, k) - phi.get(i + 1, j - 1, k) - phi.get(i - 1, j + 1, k)
                    + phi.get(i - 1, j - 1, k))
                    / (4.0 * du * dub);
                let grad = state.frame_gradient(i, j, k);
                let q = frames[k].evaluate(&grad, &grad);
                let res = -mixed + lap[k] + (grad.l - grad.lbar) / r - q;
                out.max_abs = out.max_abs.max(res.abs());
                out.scale = out.scale.max(mixed.abs());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;
    use crate::exact::{DipoleWave, Nirenberg, SphericalWave};
    use crate::field::Field3;
    use crate::geometry::{AngularMode, DoubleNullGrid};
    use crate::nullform::NullFormCoeffs;
    use crate::pulse::CharacteristicData;
    use crate::solver::{march, NullFormSpec, SolverConfig};

    fn cfg() -> SolverConfig {
        SolverConfig {
            min_ubar_cells: 4,
            corrector_iterations: 6,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_field_balances() {
        let g = axisym(-3.0, 0.2, 8, 8, 9);
        let s = FieldState::from_phi(&g, &NullFormSpec::linear(AngularMode::Axisym), g.zeros()).unwrap();
        for x in [Multiplier::L, Multiplier::Lbar, Multiplier::Omega] {
            let r = energy_identity_residual(&s, x, 8, 8);
            assert_eq!((r.lhs, r.rhs, r.relative_residual), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn rotation_deformation_is_zero() {
        for &(a, b, r) in &[(1.0, 2.0, 3.0), (-5.0, 0.1, 1.5)] {
            assert_eq!(deformation_density(Multiplier::Omega, a, b, r), 0.0);
        }
        let g = axisym(-3.0, 0.2, 16, 16, 17);
        let s = sampled(&g, &DipoleWave::default());
        let r = energy_identity_residual(&s, Multiplier::Omega, 16, 16);
        assert_eq!(r.bulk_deformation, 0.0);
    }

    #[test]
    fn spherical_wave_identity_is_balanced() {
        let w = SphericalWave { a: 1.0, c: 0.1, w: 0.05 };
        let mut res = Vec::new();
        for n in [32, 64, 128] {
            let g = DoubleNullGrid::new(-4.0, 0.2, n, n, AngularMode::Spherical, 1).unwrap();
            let s = sampled(&g, &w);
            let r = energy_identity_residual(&s, Multiplier::L, n, n);
            assert!(r.bulk_deformation != 0.0);
            res.push(r.relative_residual);
        }
        assert!(res[0] / res[1] > 3.0 && res[1] / res[2] > 3.0, "{res:?}");
    }

    fn marched_residuals(x: Multiplier, nonlinear: bool) -> Vec<f64> {
        let mut out = Vec::new();
        for n in [32, 64, 128] {
            let g = axisym(-3.0, 0.3, n, n, n + 1);
            let (spec, data) = if nonlinear {
                let sol = Nirenberg { c0: 0.8, linear: DipoleWave::default() };
                let q = NullFormCoeffs::from_entries(0.8, &[]).unwrap();
                (NullFormSpec::new(q, AngularMode::Axisym).unwrap(), CharacteristicData::from_solution(&g, &sol))
            } else {
                (
                    NullFormSpec::linear(AngularMode::Axisym),
                    CharacteristicData::from_solution(&g, &DipoleWave::default()),
                )
            };
            let s = march(&data, &spec, &g, &cfg()).unwrap();
            out.push(energy_identity_residual(&s, x, n, n).relative_residual);
        }
        out
    }

    #[test]
    fn identity_residual_is_second_order() {
        for x in [Multiplier::L, Multiplier::Lbar] {
            for nonlinear in [false, true] {
                let r = marched_residuals(x, nonlinear);
                assert!(r[0] / r[1] > 3.0 && r[1] / r[2] > 3.0, "{x:?} {nonlinear}: {r:?}");
            }
        }
    }

    #[test]
    fn equation_residual_shrinks_under_refinement() {
        let sol = Nirenberg { c0: 0.8, linear: DipoleWave::default() };
        let q = NullFormCoeffs::from_entries(0.8, &[]).unwrap();
        let spec = NullFormSpec::new(q, AngularMode::Axisym).unwrap();
        let mut res = Vec::new();
        for n in [32, 64, 128] {
            let g = axisym(-3.0, 0.3, n, n, n + 1);
            let s = march(&CharacteristicData::from_solution(&g, &sol), &spec, &g, &cfg()).unwrap();
            res.push(equation_residual(&s).max_abs);
        }
        assert!(res[0] / res[1] > 3.0 && res[1] / res[2] > 3.0, "{res:?}");
        // A field that is not a solution leaves an O(1) defect.
        let g = axisym(-3.0, 0.3, 16, 16, 17);
        let (nu, nub, nt) = g.dims();
        let bad = Field3::from_fn(nu, nub, nt, |i, _, _| g.u(i).powi(2));
        let s = FieldState::from_phi(&g, &spec, bad).unwrap();
        assert!(equation_residual(&s).max_abs > 0.1);
    }
}
