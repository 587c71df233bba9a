use serde::Serialize;

use super::{cbar_integral, cu_integral};
use crate::field::Field3;
use crate::geometry::AngularMode;
use crate::solver::FieldState;
use crate::{Error, Result};

/// The tube boundary sits at this multiple of the data cap radius.
pub const DEFAULT_TUBE_MARGIN: f64 = 2.0;

/// Energy split on one `C_u` at the tube boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FocusingRow {
    pub u: f64,
    pub in_tube: f64,
    pub out_tube: f64,
    /// `|in_tube(u) − in_tube(u₀)|`
    pub in_tube_defect: f64,
}

/// Localization of the energy density `|Lφ|² + |∇̸φ|²` around the symmetry axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocusingReport {
    pub tube_angle: f64,
    pub rows: Vec<FocusingRow>,
    /// Largest out-of-tube energy over all `u`.
    pub out_tube_energy: f64,
    /// Largest in-tube defect over all `u`.
    pub in_tube_defect: f64,
    /// `∫_{C̲_δ} |Lφ|² + |∇̸φ|²`
    pub cbar_delta_flux: f64,
    /// `∫_{C̲_δ} |L̄φ|² + |∇̸φ|²`
    pub cbar_delta_flux_lbar: f64,
    /// `max |Lφ(−1, ū, θ) − Lφ(u₀, ū, θ)|`
    pub lphi_drift: f64,
    /// `max ||u|Lφ(−1, ū, θ) − |u₀|Lφ(u₀, ū, θ)|`, the drift of the decay-normalized field.
    pub lphi_drift_weighted: f64,
}

/// Splits every `C_u` flux at `θ = margin · cap` (axisym only).
pub fn focusing_report(state: &FieldState, cap: f64, margin: f64) -> Result<FocusingReport> {
    let g = &state.grid;
    if g.mode() != AngularMode::Axisym {
        return Err(Error::Mode("focusing needs an axisymmetric run".into()));
    }
    if !(cap > 0.0 && margin > 0.0) {
        return Err(Error::Config(format!("cap {cap} and margin {margin} must be positive")));
    }
    let (nu, nub, nt) = g.dims();
    let tube_angle = (cap * margin).min(std::f64::consts::PI);
    let kt = g.theta_index_below(tube_angle);
    let density = |i: usize, j: usize, k: usize| state.lphi.get(i, j, k).powi(2) + state.ang_phi(i, j, k).powi(2);

    let mut rows = Vec::with_capacity(nu);
    for i in 0..nu {
        let in_tube = cu_integral(g, i, nub - 1, (0, kt), |j, k| density(i, j, k));
        let out_tube = cu_integral(g, i, nub - 1, (kt, nt - 1), |j, k| density(i, j, k));
        rows.push(FocusingRow {
            u: g.u(i),
            in_tube,
            out_tube,
            in_tube_defect: 0.0,
        });
    }
    let base = rows[0].in_tube;
    for row in &mut rows {
        row.in_tube_defect = (row.in_tube - base).abs();
    }

    let jd = nub - 1;
    let cbar_delta_flux = cbar_integral(g, jd, nu - 1, |i, k| density(i, jd, k));
    let cbar_delta_flux_lbar = cbar_integral(g, jd, nu - 1, |i, k| {
        state.lbarphi.get(i, jd, k).powi(2) + state.ang_phi(i, jd, k).powi(2)
    });

    let (last, a0, a1) = (nu - 1, g.u(0).abs(), g.u(nu - 1).abs());
    let mut lphi_drift = 0.0_f64;
    let mut lphi_drift_weighted = 0.0_f64;
    for j in 0..nub {
        for k in 0..nt {
            let (x0, x1) = (state.lphi.get(0, j, k), state.lphi.get(last, j, k));
            lphi_drift = lphi_drift.max((x1 - x0).abs());
            lphi_drift_weighted = lphi_drift_weighted.max((a1 * x1 - a0 * x0).abs());
        }
    }

    Ok(FocusingReport {
        tube_angle,
        out_tube_energy: rows.iter().map(|r| r.out_tube).fold(0.0, f64::max),
        in_tube_defect: rows.iter().map(|r| r.in_tube_defect).fold(0.0, f64::max),
        rows,
        cbar_delta_flux,
        cbar_delta_flux_lbar,
        lphi_drift,
        lphi_drift_weighted,
    })
}

/// Sup norms over the spheres of one incoming cone `C̲_ū`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceTrace {
    pub ubar: f64,
    pub u: Vec<f64>,
    pub sup_phi: Vec<f64>,
    pub sup_lphi: Vec<f64>,
    pub sup_lbarphi: Vec<f64>,
    pub sup_ang_phi: Vec<f64>,
}

impl SliceTrace {
    /// `sup_u |u| · sup_S |Lφ|`
    pub fn weighted_lphi(&self) -> f64 {
        self.u.iter().zip(&self.sup_lphi).map(|(u, v)| u.abs() * v).fold(0.0, f64::max)
    }

    /// `sup_u |u|² · sup_S |∇̸φ|`
    pub fn weighted_ang_phi(&self) -> f64 {
        self.u.iter().zip(&self.sup_ang_phi).map(|(u, v)| u * u * v).fold(0.0, f64::max)
    }
}

/// Values on the incoming cone through the ū node `j`.
pub fn slice_trace(state: &FieldState, j: usize) -> SliceTrace {
    let g = &state.grid;
    let (nu, _, nt) = g.dims();
    let sup = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..nu).map(|i| (0..nt).map(|k| f(i, k).abs()).fold(0.0, f64::max)).collect()
    };
    SliceTrace {
        ubar: g.ubar(j),
        u: (0..nu).map(|i| g.u(i)).collect(),
        sup_phi: sup(&|i, k| state.phi.get(i, j, k)),
        sup_lphi: sup(&|i, k| state.lphi.get(i, j, k)),
        sup_lbarphi: sup(&|i, k| state.lbarphi.get(i, j, k)),
        sup_ang_phi: sup(&|i, k| state.ang_phi(i, j, k)),
    }
}

/// The exit surface `ū = δ`.
pub fn trace_on_cbar_delta(state: &FieldState) -> SliceTrace {
    slice_trace(state, state.grid.dims().1 - 1)
}

/// The interior cone nearest to `ū = δ/4`.
///
/// A profile symmetric about the middle of the pulse has `∂_sψ₀(½) = 0`, so the
/// midpoint cone would hide the short-pulse size of `Lφ`; the quarter point does not.
pub fn interior_trace(state: &FieldState) -> SliceTrace {
    slice_trace(state, state.grid.cells().1 / 4)
}

/// `|u| φ` on the outgoing cone at the u node `i`, shaped `(1, ū, θ)`.
pub fn radiation_field(state: &FieldState, i: usize) -> Field3 {
    let g = &state.grid;
    let (_, nub, nt) = g.dims();
    let au = g.u(i).abs();
    Field3::from_fn(1, nub, nt, |_, j, k| au * state.phi.get(i, j, k))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;
    use crate::pulse::{build_data, CapMode, PulseProfile};
    use crate::solver::{march, NullFormSpec, SolverConfig};

    fn pulse_run(delta: f64) -> (FieldState, PulseProfile) {
        let g = axisym(-3.0, delta, 32, 32, 97);
        let p = PulseProfile::new(1.0, CapMode::Fixed(0.4)).unwrap();
        let data = build_data(&p, &g).unwrap();
        let s = march(&data, &NullFormSpec::linear(AngularMode::Axisym), &g, &SolverConfig::default()).unwrap();
        (s, p)
    }

    #[test]
    fn zero_field_gives_zero_report() {
        let g = axisym(-3.0, 0.1, 8, 32, 33);
        let s = FieldState::from_phi(&g, &NullFormSpec::linear(AngularMode::Axisym), g.zeros()).unwrap();
        let r = focusing_report(&s, 0.3, 2.0).unwrap();
        assert_eq!(
            (r.out_tube_energy, r.in_tube_defect, r.cbar_delta_flux, r.lphi_drift),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(trace_on_cbar_delta(&s).weighted_lphi(), 0.0);
        assert_eq!(radiation_field(&s, 0).max_abs(), 0.0);
    }

    #[test]
    fn spherical_mode_is_rejected() {
        let g = crate::geometry::DoubleNullGrid::new(-3.0, 0.1, 8, 32, AngularMode::Spherical, 1).unwrap();
        let s = FieldState::from_phi(&g, &NullFormSpec::linear(AngularMode::Spherical), g.zeros()).unwrap();
        assert!(matches!(focusing_report(&s, 0.3, 2.0), Err(Error::Mode(_))));
    }

    #[test]
    fn tube_split_is_consistent_and_monotone() {
        let (s, _) = pulse_run(0.1);
        let mut prev = f64::INFINITY;
        for margin in [1.0, 1.5, 2.0, 3.0] {
            let r = focusing_report(&s, 0.4, margin).unwrap();
            let total = cu_integral(&s.grid, 16, 32, (0, 96), |j, k| {
                s.lphi.get(16, j, k).powi(2) + s.ang_phi(16, j, k).powi(2)
            });
            let row = r.rows[16];
            assert!((row.in_tube + row.out_tube - total).abs() <= 1e-12 * total);
            assert!(r.out_tube_energy <= prev);
            prev = r.out_tube_energy;
        }
    }

    #[test]
    fn radiation_field_on_data_slice() {
        let (s, p) = pulse_run(0.1);
        let rf = radiation_field(&s, 0);
        let g = &s.grid;
        for &(j, k) in &[(16, 0), (10, 5), (32, 3)] {
            let want = 0.1f64.sqrt() * p.psi0(0, g.ubar(j) / 0.1, g.theta(k), 0.1, AngularMode::Axisym);
            assert!((rf.get(0, j, k) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn exit_surface_is_quieter_than_the_interior() {
        let (s, _) = pulse_run(0.05);
        assert!(trace_on_cbar_delta(&s).weighted_lphi() < 0.5 * interior_trace(&s).weighted_lphi());
    }
}
