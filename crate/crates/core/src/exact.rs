//! Closed-form solutions used as oracles.
//!
//! * [`SphericalWave`]: `φ = (h(ū) − h(u)) / r` solves `□φ = 0`.
//! * [`DipoleWave`]: the axisymmetric `ℓ = 1` solution
//!   `rφ = cosθ (−F′(2u) − F(2u)/r + G′(2ū) − G(2ū)/r)`.
//! * [`Nirenberg`]: for `□φ = c₀ Q₀(∇φ, ∇φ)`, `w = e^{−c₀φ}` solves the linear
//!   wave equation, so `φ = −ln(1 − c₀ v)/c₀` for any linear solution `v`.

/// Values of a solution and its null-frame derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactValues {
    pub phi: f64,
    pub lphi: f64,
    pub lbarphi: f64,
    /// `∂_θ φ`
    pub dtheta_phi: f64,
}

pub trait ExactSolution: Sync {
    fn values(&self, u: f64, ubar: f64, theta: f64) -> ExactValues;

    fn phi(&self, u: f64, ubar: f64, theta: f64) -> f64 {
        self.values(u, ubar, theta).phi
    }
}

/// `φ = (h(ū) − h(u)) / r` with `h(x) = a · exp(−((x − c)/w)²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalWave {
    pub a: f64,
    pub c: f64,
    pub w: f64,
}

impl SphericalWave {
    fn h(&self, x: f64) -> (f64, f64) {
        let z = (x - self.c) / self.w;
        let v = self.a * (-z * z).exp();
        (v, -2.0 * z / self.w * v)
    }
}

impl ExactSolution for SphericalWave {
    fn values(&self, u: f64, ubar: f64, _theta: f64) -> ExactValues {
        let r = ubar - u;
        let (hb, dhb) = self.h(ubar);
        let (hu, dhu) = self.h(u);
        let phi = (hb - hu) / r;
        ExactValues {
            phi,
            lphi: dhb / r - phi / r,
            lbarphi: -dhu / r + phi / r,
            dtheta_phi: 0.0,
        }
    }
}

/// Axisymmetric `ℓ = 1` solution with `F(x) = a sin(k x)`, `G(x) = b cos(m x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleWave {
    pub a: f64,
    pub k: f64,
    pub b: f64,
    pub m: f64,
}

impl Default for DipoleWave {
    fn default() -> Self {
        Self {
            a: 0.3,
            k: 0.7,
            b: 0.5,
            m: 1.3,
        }
    }
}

impl DipoleWave {
    fn f(&self, x: f64) -> [f64; 3] {
        let (s, c) = (self.k * x).sin_cos();
        [self.a * s, self.a * self.k * c, -self.a * self.k * self.k * s]
    }

    fn g(&self, x: f64) -> [f64; 3] {
        let (s, c) = (self.m * x).sin_cos();
        [self.b * c, -self.b * self.m * s, -self.b * self.m * self.m * c]
    }
}

impl ExactSolution for DipoleWave {
    fn values(&self, u: f64, ubar: f64, theta: f64) -> ExactValues {
        let r = ubar - u;
        let [f, f1, f2] = self.f(2.0 * u);
        let [g, g1, g2] = self.g(2.0 * ubar);
        let p = -f1 - f / r + g1 - g / r;
        let dp_dubar = f / (r * r) + 2.0 * g2 - 2.0 * g1 / r + g / (r * r);
        let dp_du = -2.0 * f2 - 2.0 * f1 / r - f / (r * r) - g / (r * r);
        let (st, ct) = theta.sin_cos();
        let psi = ct * p;
        ExactValues {
            phi: psi / r,
            lphi: ct * dp_dubar / r - psi / (r * r),
            lbarphi: ct * dp_du / r + psi / (r * r),
            dtheta_phi: -st * p / r,
        }
    }
}

/// `φ = −ln(1 − c₀ v) / c₀` for a linear solution `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nirenberg<S> {
    pub c0: f64,
    pub linear: S,
}

impl<S: ExactSolution> ExactSolution for Nirenberg<S> {
    fn values(&self, u: f64, ubar: f64, theta: f64) -> ExactValues {
        let v = self.linear.values(u, ubar, theta);
        let w = 1.0 - self.c0 * v.phi;
        ExactValues {
            phi: -w.ln() / self.c0,
            lphi: v.lphi / w,
            lbarphi: v.lbarphi / w,
            dtheta_phi: v.dtheta_phi / w,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∂_u∂_ū(rφ) − r Δ̸φ + r c₀ Q₀(∇φ,∇φ) by finite differences (axisymmetric).
    fn residual(sol: &dyn ExactSolution, c0: f64, u: f64, ub: f64, th: f64) -> f64 {
        let h = 1e-3;
        let psi = |u: f64, ub: f64, th: f64| (ub - u) * sol.phi(u, ub, th);
        let mixed = (psi(u + h, ub + h, th) - psi(u + h, ub - h, th) - psi(u - h, ub + h, th)
            + psi(u - h, ub - h, th))
            / (4.0 * h * h);
        let r = ub - u;
        let f = |t: f64| sol.phi(u, ub, t);
        let d2 = (f(th + h) - 2.0 * f(th) + f(th - h)) / (h * h);
        let d1 = (f(th + h) - f(th - h)) / (2.0 * h);
        let lap = (d2 + th.cos() / th.sin() * d1) / (r * r);
        let v = sol.values(u, ub, th);
        let q0 = -v.lphi * v.lbarphi + (v.dtheta_phi / r).powi(2);
        mixed - r * lap + r * c0 * q0
    }

    fn check_derivatives(sol: &dyn ExactSolution, u: f64, ub: f64, th: f64) {
        let h = 1e-5;
        let v = sol.values(u, ub, th);
        let l = (sol.phi(u, ub + h, th) - sol.phi(u, ub - h, th)) / (2.0 * h);
        let lb = (sol.phi(u + h, ub, th) - sol.phi(u - h, ub, th)) / (2.0 * h);
        let dt = (sol.phi(u, ub, th + h) - sol.phi(u, ub, th - h)) / (2.0 * h);
        assert!((l - v.lphi).abs() < 1e-8);
        assert!((lb - v.lbarphi).abs() < 1e-8);
        assert!((dt - v.dtheta_phi).abs() < 1e-8);
    }

    #[test]
    fn spherical_wave_solves_equation() {
        let s = SphericalWave { a: 1.0, c: 0.05, w: 0.3 };
        for &(u, ub) in &[(-3.0, 0.04), (-1.5, 0.07)] {
            check_derivatives(&s, u, ub, 0.4);
            assert!(residual(&s, 0.0, u, ub, 0.4).abs() < 1e-3);
        }
    }

    #[test]
    fn dipole_solves_equation() {
        let d = DipoleWave::default();
        for &(u, ub, th) in &[(-3.0, 0.04, 0.3), (-1.5, 0.07, 2.0), (-6.0, 0.0, 1.1)] {
            check_derivatives(&d, u, ub, th);
            assert!(residual(&d, 0.0, u, ub, th).abs() < 1e-5);
        }
    }

    #[test]
    fn nirenberg_solves_nonlinear_equation() {
        let n = Nirenberg { c0: 0.8, linear: DipoleWave::default() };
        for &(u, ub, th) in &[(-3.0, 0.04, 0.3), (-1.5, 0.07, 2.0)] {
            check_derivatives(&n, u, ub, th);
            assert!(residual(&n, 0.8, u, ub, th).abs() < 1e-5);
            // The same field is not a solution for a different coefficient.
            assert!(residual(&n, 0.0, u, ub, th).abs() > 1e-4);
        }
    }
}
