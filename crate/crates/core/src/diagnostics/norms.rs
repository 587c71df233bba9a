use serde::Serialize;

use super::{angular_size, cu_integral, full_sphere, hessian_norm, theta_derivatives};
use crate::geometry::{trapezoid, DoubleNullGrid};
use crate::solver::{diff_along, second_diff_along, FieldState};
use crate::{Error, Result};

/// Energy norms of orders 1–3 at one `(u, ū)`.
///
/// `e[k-1]` lives on `C_u^{[0,ū]}`, `ebar[k-1]` on `C̲_ū^{[u₀,u]}`;
/// `f`, `fbar` hold the two-null-derivative norms of orders 2 and 3.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyNorms {
    pub u: f64,
    pub ubar: f64,
    pub e: [f64; 3],
    pub ebar: [f64; 3],
    pub f: [f64; 2],
    pub fbar: [f64; 2],
}

impl EnergyNorms {
    pub fn e(&self, k: usize) -> Result<f64> {
        pick(&self.e, k, 1)
    }

    pub fn ebar(&self, k: usize) -> Result<f64> {
        pick(&self.ebar, k, 1)
    }

    pub fn f(&self, k: usize) -> Result<f64> {
        pick(&self.f, k, 2)
    }

    pub fn fbar(&self, k: usize) -> Result<f64> {
        pick(&self.fbar, k, 2)
    }
}

fn pick(v: &[f64], k: usize, first: usize) -> Result<f64> {
    k.checked_sub(first)
        .and_then(|m| v.get(m).copied())
        .ok_or_else(|| {
            Error::InvalidIndex(format!(
                "order {k} outside the supported range {first}..={}",
                first + v.len() - 1
            ))
        })
}

/// θ-derivatives of `φ` and of its derivatives along one null line.
struct ConeSlice {
    r: Vec<f64>,
    /// `|u|` at each line node.
    abs_u: Vec<f64>,
    /// `[m][n]`: `∂_θᵐ φ`, `m ≤ 3`.
    ang: Vec<Vec<Vec<f64>>>,
    /// `[m][n]`: `∂_θᵐ` of the first line derivative, `m ≤ 2`.
    d1: Vec<Vec<Vec<f64>>>,
    /// `[m][n]`: `∂_θᵐ` of the second line derivative, `m ≤ 1`.
    d2: Vec<Vec<Vec<f64>>>,
}

impl ConeSlice {
    fn build(grid: &DoubleNullGrid, spheres: Vec<&[f64]>, r: Vec<f64>, abs_u: Vec<f64>, h: f64) -> Self {
        let nt = grid.n_theta();
        let n = spheres.len();
        let mut first = vec![vec![0.0; nt]; n];
        let mut second = vec![vec![0.0; nt]; n];
        let mut line = vec![0.0; n];
        for k in 0..nt {
            for (l, s) in line.iter_mut().zip(&spheres) {
                *l = s[k];
            }
            for m in 0..n {
                first[m][k] = diff_along(&line, h, m);
                second[m][k] = second_diff_along(&line, h, m);
            }
        }
        let per_node = |f: &[Vec<f64>], order: usize| -> Vec<Vec<Vec<f64>>> {
            let d: Vec<Vec<Vec<f64>>> = f.iter().map(|s| theta_derivatives(grid, s, order)).collect();
            (0..=order).map(|m| d.iter().map(|x| x[m].clone()).collect()).collect()
        };
        let own: Vec<Vec<f64>> = spheres.iter().map(|s| s.to_vec()).collect();
        Self {
            ang: per_node(&own, 3),
            d1: per_node(&first, 2),
            d2: per_node(&second, 1),
            r,
            abs_u,
        }
    }
}

/// Pointwise angular sizes over a slice, evaluated once per line node.
fn sizes(grid: &DoubleNullGrid, s: &ConeSlice, d: &[Vec<Vec<f64>>], order: usize, n_end: usize) -> Vec<Vec<f64>> {
    let nt = grid.n_theta();
    (0..=n_end)
        .map(|n| {
            if order == 0 {
                return d[0][n].iter().map(|v| v.abs()).collect();
            }
            let stack: Vec<Vec<f64>> = (0..=order).map(|m| d[m][n].clone()).collect();
            (0..nt).map(|k| angular_size(grid, &stack, order, k, s.r[n])).collect()
        })
        .collect()
}

/// `L²` norm over a slice of `|u'|^p · f` with the trapezoid rule along the line.
fn slice_l2(grid: &DoubleNullGrid, s: &ConeSlice, f: &[Vec<f64>], p: i32, h: f64) -> f64 {
    let vals: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let w = s.abs_u[n].powi(2 * p);
            let sq: Vec<f64> = row.iter().map(|v| w * v * v).collect();
            grid.sphere_integral(&sq, s.r[n])
        })
        .collect();
    trapezoid(&vals, h).max(0.0).sqrt()
}

fn cu_slice(state: &FieldState, i: usize) -> ConeSlice {
    let g = &state.grid;
    let (_, nub, _) = g.dims();
    ConeSlice::build(
        g,
        (0..nub).map(|j| state.phi.sphere(i, j)).collect(),
        (0..nub).map(|j| g.r(i, j)).collect(),
        vec![g.u(i).abs(); nub],
        g.dubar(),
    )
}

fn cbar_slice(state: &FieldState, j: usize) -> ConeSlice {
    let g = &state.grid;
    let (nu, _, _) = g.dims();
    ConeSlice::build(
        g,
        (0..nu).map(|i| state.phi.sphere(i, j)).collect(),
        (0..nu).map(|i| g.r(i, j)).collect(),
        (0..nu).map(|i| g.u(i).abs()).collect(),
        g.du(),
    )
}

/// Energy norms at the node `(i, j)` with their δ and `|u|` weights.
pub fn energy_norms(state: &FieldState, i: usize, j: usize) -> EnergyNorms {
    let g = &state.grid;
    let delta = g.delta();
    let au = g.u(i).abs();
    let sd = delta.sqrt();

    let cu = cu_slice(state, i);
    let l2 = |f: Vec<Vec<f64>>| slice_l2(g, &cu, &f, 0, g.dubar());
    let l_phi = l2(sizes(g, &cu, &cu.d1, 0, j));
    let ang1 = l2(sizes(g, &cu, &cu.ang, 1, j));
    let l_ang1 = l2(sizes(g, &cu, &cu.d1, 1, j));
    let ang2 = l2(sizes(g, &cu, &cu.ang, 2, j));
    let l_ang2 = l2(sizes(g, &cu, &cu.d1, 2, j));
    let ang3 = l2(sizes(g, &cu, &cu.ang, 3, j));
    let ll = l2(sizes(g, &cu, &cu.d2, 0, j));
    let ll_ang1 = l2(sizes(g, &cu, &cu.d2, 1, j));
    let e = [
        l_phi + au.sqrt() / sd * ang1,
        au * l_ang1 + au.powf(1.5) / sd * ang2,
        au * au * l_ang2 + au.powf(2.5) / sd * ang3,
    ];
    let f = [delta * ll, delta * au * ll_ang1];

    let cb = cbar_slice(state, j);
    let l2w = |f: Vec<Vec<f64>>, p: i32| slice_l2(g, &cb, &f, p, g.du());
    let ebar = [
        l2w(sizes(g, &cb, &cb.ang, 1, i), 0) + au.sqrt() / sd * l2w(sizes(g, &cb, &cb.d1, 0, i), 0),
        l2w(sizes(g, &cb, &cb.ang, 2, i), 1) + au.sqrt() / sd * l2w(sizes(g, &cb, &cb.d1, 1, i), 1),
        l2w(sizes(g, &cb, &cb.ang, 3, i), 2) + au.sqrt() / sd * l2w(sizes(g, &cb, &cb.d1, 2, i), 2),
    ];
    let fbar = [
        au.sqrt() * l2w(sizes(g, &cb, &cb.d2, 0, i), 0),
        au.sqrt() * l2w(sizes(g, &cb, &cb.d2, 1, i), 1),
    ];
    EnergyNorms {
        u: g.u(i),
        ubar: g.ubar(j),
        e,
        ebar,
        f,
        fbar,
    }
}

/// `‖L̄φ‖_{L²(C_u^{[0,δ]})}` together with the comparison weight `δ/|u|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LbarFlux {
    pub u: f64,
    pub norm: f64,
    pub weight: f64,
}

pub fn lbar_l2_on_cu(state: &FieldState, i: usize) -> LbarFlux {
    let g = &state.grid;
    let (_, nub, _) = g.dims();
    let sq = cu_integral(g, i, nub - 1, full_sphere(g), |j, k| state.lbarphi.get(i, j, k).powi(2));
    LbarFlux {
        u: g.u(i),
        norm: sq.max(0.0).sqrt(),
        weight: g.delta() / g.u(i).abs(),
    }
}

/// Exponents `(a, b)` of the weights `δ^a |u|^b` for the columns of [`LinfRow`],
/// in the order `Lφ, ∇̸φ, L̄φ, L∇̸φ, ∇̸²φ, L̄∇̸φ`.
pub const LINF_WEIGHTS: [(f64, f64); 6] = [
    (0.5, 1.0),
    (-0.25, 1.75),
    (-0.25, 1.5),
    (0.5, 2.0),
    (-0.25, 2.75),
    (-0.25, 2.5),
];

/// Unweighted sup norms over one `C_u`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LinfRow {
    pub u: f64,
    pub lphi: f64,
    pub ang_phi: f64,
    pub lbarphi: f64,
    pub l_ang_phi: f64,
    pub ang2_phi: f64,
    pub lbar_ang_phi: f64,
}

impl LinfRow {
    pub fn raw(&self) -> [f64; 6] {
        [
            self.lphi,
            self.ang_phi,
            self.lbarphi,
            self.l_ang_phi,
            self.ang2_phi,
            self.lbar_ang_phi,
        ]
    }

    pub fn weighted(&self, delta: f64) -> [f64; 6] {
        let mut out = self.raw();
        for (v, (a, b)) in out.iter_mut().zip(LINF_WEIGHTS) {
            *v *= delta.powf(a) * self.u.abs().powf(b);
        }
        out
    }
}

/// Sup norms of first and mixed second derivatives, one row per u node.
pub fn linf_table(state: &FieldState) -> Vec<LinfRow> {
    let g = &state.grid;
    let (nu, nub, nt) = g.dims();
    (0..nu)
        .map(|i| {
            let mut row = LinfRow {
                u: g.u(i),
                ..LinfRow::default()
            };
            for j in 0..nub {
                let r = g.r(i, j);
                let a = theta_derivatives(g, state.phi.sphere(i, j), 2);
                let la = theta_derivatives(g, state.lphi.sphere(i, j), 1);
                let lba = theta_derivatives(g, state.lbarphi.sphere(i, j), 1);
                for k in 0..nt {
                    row.lphi = row.lphi.max(la[0][k].abs());
                    row.lbarphi = row.lbarphi.max(lba[0][k].abs());
                    row.ang_phi = row.ang_phi.max(a[1][k].abs() / r);
                    row.l_ang_phi = row.l_ang_phi.max(la[1][k].abs() / r);
                    row.lbar_ang_phi = row.lbar_ang_phi.max(lba[1][k].abs() / r);
                    row.ang2_phi = row.ang2_phi.max(hessian_norm(g, &a[1], &a[2], k) / (r * r));
                }
            }
            row
        })
        .collect()
}

/// `|u|^{1/2}‖φ‖_{L⁴(S)}` divided by
/// `‖Lφ‖^{1/2}_{L²(C_u)} (‖φ‖^{1/2}_{L²(C_u)} + |u|^{1/2}‖∇̸φ‖^{1/2}_{L²(C_u)})`; zero when
/// the denominator vanishes.
pub fn sobolev_ratio(state: &FieldState, i: usize, j: usize) -> f64 {
    let g = &state.grid;
    let au = g.u(i).abs();
    let quartic: Vec<f64> = state.phi.sphere(i, j).iter().map(|v| v.powi(4)).collect();
    let lhs = au.sqrt() * g.sphere_integral(&quartic, g.r(i, j)).max(0.0).powf(0.25);
    let sphere = full_sphere(g);
    let norm = |f: &dyn Fn(usize, usize) -> f64| cu_integral(g, i, j, sphere, |jj, k| f(jj, k).powi(2)).max(0.0).sqrt();
    let l = norm(&|jj, k| state.lphi.get(i, jj, k));
    let p = norm(&|jj, k| state.phi.get(i, jj, k));
    let a = norm(&|jj, k| state.ang_phi(i, jj, k));
    let rhs = l.sqrt() * (p.sqrt() + au.sqrt() * a.sqrt());
    if rhs > 0.0 {
        lhs / rhs
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;
    use crate::exact::SphericalWave;
    use crate::field::Field3;
    use crate::geometry::AngularMode;
    use crate::pulse::{build_data, data_flux_l, CapMode, PulseProfile};
    use crate::solver::NullFormSpec;

    fn pulse_state(delta: f64, amplitude: f64) -> FieldState {
        let g = axisym(-4.0, delta, 48, 64, 97);
        let p = PulseProfile::new(amplitude, CapMode::Fixed(0.8)).unwrap();
        let data = build_data(&p, &g).unwrap();
        // Frozen field: the data slice repeated with the free 1/|u| decay.
        let (nu, nub, nt) = g.dims();
        let phi = Field3::from_fn(nu, nub, nt, |i, j, k| {
            data.phi_on_cu0.get(0, j, k) * g.u0() / g.u(i)
        });
        FieldState::from_phi(&g, &NullFormSpec::linear(AngularMode::Axisym), phi).unwrap()
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = axisym(-3.0, 0.1, 16, 32, 33);
        let s = FieldState::from_phi(&g, &NullFormSpec::linear(AngularMode::Axisym), g.zeros()).unwrap();
        let n = energy_norms(&s, 16, 32);
        assert!(n.e.iter().chain(&n.ebar).chain(&n.f).chain(&n.fbar).all(|&v| v == 0.0));
        assert_eq!(lbar_l2_on_cu(&s, 16).norm, 0.0);
        assert!(linf_table(&s).iter().all(|r| r.raw() == [0.0; 6]));
        assert_eq!(sobolev_ratio(&s, 16, 32), 0.0);
    }

    #[test]
    fn order_out_of_range_is_an_error() {
        let n = EnergyNorms::default();
        assert!(n.e(0).is_err());
        assert!(n.e(4).is_err());
        assert!(n.f(1).is_err());
        assert!(n.fbar(3).is_ok());
    }

    #[test]
    fn norms_are_homogeneous() {
        let s = pulse_state(0.1, 1.0);
        let mut s2 = s.clone();
        s2.phi = s.phi.map(|v| 2.0 * v);
        crate::solver::derive_first_derivatives(&mut s2);
        let (a, b) = (energy_norms(&s, 48, 64), energy_norms(&s2, 48, 64));
        for (x, y) in a.e.iter().chain(&a.ebar).chain(&a.f).zip(b.e.iter().chain(&b.ebar).chain(&b.f)) {
            assert!((y - 2.0 * x).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn initial_slice_e1_matches_data_quadrature() {
        let delta = 0.1;
        let s = pulse_state(delta, 1.0);
        let g = &s.grid;
        let n = energy_norms(&s, 0, 64);
        let p = PulseProfile::new(1.0, CapMode::Fixed(0.8)).unwrap();
        let l = data_flux_l(&p, delta, g.u0(), AngularMode::Axisym).sqrt();
        let first = cu_integral(g, 0, 64, full_sphere(g), |j, k| s.lphi.get(0, j, k).powi(2)).sqrt();
        assert!((first - l).abs() / l < 1e-2, "{first} vs {l}");
        // The angular part is of the same order as the L part.
        let ang = n.e[0] - first;
        assert!(ang > 0.01 * l && ang < 10.0 * l);
    }

    #[test]
    fn lbar_flux_of_spherical_wave() {
        // φ = (h(ū) − h(u))/r with h supported near ū = δ/2 only; on C_u the
        // flux of L̄φ equals the closed-form quadrature of h(ū)/r².
        let g = crate::geometry::DoubleNullGrid::new(-4.0, 0.2, 384, 256, AngularMode::Spherical, 1).unwrap();
        let w = SphericalWave { a: 1.0, c: 0.1, w: 0.02 };
        let s = sampled(&g, &w);
        let got = lbar_l2_on_cu(&s, 384);
        let exact = {
            let f = |ub: f64| {
                let r = ub + 1.0;
                let v = crate::exact::ExactSolution::values(&w, -1.0, ub, 0.0).lbarphi;
                4.0 * std::f64::consts::PI * r * r * v * v
            };
            crate::pulse::gauss_integral(0.0, 0.2, f).sqrt()
        };
        assert!((got.norm - exact).abs() / exact < 1e-3, "{} vs {exact}", got.norm);
        assert!((got.weight - 0.2).abs() < 1e-15);
    }

    #[test]
    fn linf_initial_weight_is_profile_scale() {
        // δ^{1/2}|u₀| sup|Lφ| = sup|∂_s ψ₀| on the data slice, independent of δ.
        let mut w = Vec::new();
        for delta in [0.2, 0.05] {
            let s = pulse_state(delta, 1.0);
            w.push(linf_table(&s)[0].weighted(delta)[0]);
        }
        assert!((w[0] - w[1]).abs() / w[0] < 2e-2, "{w:?}");
    }

    #[test]
    fn sobolev_ratio_is_finite_and_positive() {
        let s = pulse_state(0.1, 1.0);
        let q = sobolev_ratio(&s, 24, 40);
        assert!(q.is_finite() && q > 0.0);
    }
}
