//! Null quadratic forms on ℝ^{3+1}.
//!
//! A null form is a bilinear form `Q` with `Q(ξ, ξ) = 0` for every null `ξ`.
//! The space is seven dimensional, spanned by the metric form `Q₀ = g` and the
//! six antisymmetric forms `Q_{αβ}(ξ, η) = ξ_α η_β − η_α ξ_β`. A form is stored
//! by its coordinates in that basis ([`NullFormCoeffs`]), so every value of the
//! type is a null form by construction.
//!
//! Conventions: metric signature `(−, +, +, +)`; `L = ∂_t + ∂_r`,
//! `L̄ = ∂_t − ∂_r`, so `g(L, L̄) = −2`; rotations `Ω_{ij} = x_j ∂_i − x_i ∂_j`
//! (so `Ω₁ = Ω₃₂`, `Ω₂ = Ω₁₃`, `Ω₃ = Ω₂₁` for the usual generators).

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod poly;
pub mod suite;

/// Relative tolerance of [`FourVector::is_null`].
pub const TOL_NULL: f64 = 1e-10;
const NULL_FLOOR: f64 = 1e-300;
/// Singular values below `NULLSPACE_RTOL · σ_max` count as zero.
pub const NULLSPACE_RTOL: f64 = 1e-10;

/// Components `(t, x₁, x₂, x₃)` of a vector or covector on ℝ^{3+1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const fn new(t: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self([t, x1, x2, x3])
    }

    pub fn minkowski_dot(&self, other: &Self) -> f64 {
        let (a, b) = (&self.0, &other.0);
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    }

    pub fn minkowski_sq(&self) -> f64 {
        self.minkowski_dot(self)
    }

    pub fn euclid_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn is_null(&self) -> bool {
        self.minkowski_sq().abs() <= TOL_NULL * (self.euclid_sq() + NULL_FLOOR)
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Mul<f64> for FourVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|v| v * s))
    }
}

/// One of the seven basis forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisForm {
    Q0,
    /// `Q_{αβ}` with `α < β`.
    Pair(usize, usize),
}

impl BasisForm {
    pub fn pair(alpha: usize, beta: usize) -> Result<Self> {
        if alpha < beta && beta <= 3 {
            Ok(Self::Pair(alpha, beta))
        } else {
            Err(Error::InvalidIndex(format!(
                "basis pair ({alpha}, {beta}) needs 0 <= alpha < beta <= 3"
            )))
        }
    }

    pub fn all() -> [BasisForm; 7] {
        [
            Self::Q0,
            Self::Pair(0, 1),
            Self::Pair(0, 2),
            Self::Pair(0, 3),
            Self::Pair(1, 2),
            Self::Pair(1, 3),
            Self::Pair(2, 3),
        ]
    }

    pub fn name(&self) -> String {
        match self {
            Self::Q0 => "Q0".to_string(),
            Self::Pair(a, b) => format!("Q{a}{b}"),
        }
    }
}

/// Coordinates of a null form in the basis `{Q₀, Q_{αβ}}`.
///
/// `c` is kept exactly antisymmetric; `c[α][β]` for `α < β` is the coefficient
/// of `Q_{αβ}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NullFormCoeffs {
    c0: f64,
    c: [[f64; 4]; 4],
}

impl NullFormCoeffs {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// The antisymmetric coefficient matrix.
    pub fn pairs(&self) -> &[[f64; 4]; 4] {
        &self.c
    }

    pub fn coefficient(&self, alpha: usize, beta: usize) -> f64 {
        self.c[alpha][beta]
    }

    /// Builds a form from `c0` and `(α, β, value)` triples with `α < β`.
    pub fn from_entries(c0: f64, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut q = Self {
            c0,
            ..Self::default()
        };
        for &(a, b, v) in entries {
            BasisForm::pair(a, b)?;
            if q.c[a][b] != 0.0 {
                return Err(Error::InvalidIndex(format!("duplicate entry ({a}, {b})")));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("coefficient ({a}, {b}) is not finite")));
            }
            q.c[a][b] = v;
            q.c[b][a] = -v;
        }
        if !c0.is_finite() {
            return Err(Error::Domain("c0 is not finite".into()));
        }
        Ok(q)
    }

    /// Nonzero `(α, β, value)` triples with `α < β`.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                if self.c[a][b] != 0.0 {
                    out.push((a, b, self.c[a][b]));
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            c0: self.c0 * s,
            c: self.c.map(|row| row.map(|v| v * s)),
        }
    }

    /// Euclidean norm of the seven coordinates.
    pub fn norm(&self) -> f64 {
        let mut s = self.c0 * self.c0;
        for a in 0..4 {
            for b in a + 1..4 {
                s += self.c[a][b] * self.c[a][b];
            }
        }
        s.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }

    /// Matrix `A` with `Q(ξ, η) = Σ ξ_α A[α][β] η_β`.
    pub fn bilinear_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = self.c;
        m[0][0] -= self.c0;
        for (i, row) in m.iter_mut().enumerate().skip(1) {
            row[i] += self.c0;
        }
        m
    }

    pub fn evaluate(&self, xi: &FourVector, eta: &FourVector) -> f64 {
        evaluate_cartesian(self, xi, eta)
    }
}

impl Add for NullFormCoeffs {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut c = self.c;
        for (row, rrow) in c.iter_mut().zip(rhs.c.iter()) {
            for (v, r) in row.iter_mut().zip(rrow.iter()) {
                *v += r;
            }
        }
        Self {
            c0: self.c0 + rhs.c0,
            c,
        }
    }
}

pub fn basis_form(kind: BasisForm) -> NullFormCoeffs {
    match kind {
        BasisForm::Q0 => NullFormCoeffs {
            c0: 1.0,
            ..NullFormCoeffs::default()
        },
        BasisForm::Pair(a, b) => {
            let mut q = NullFormCoeffs::default();
            q.c[a][b] = 1.0;
            q.c[b][a] = -1.0;
            q
        }
    }
}

/// `Q(ξ, η)` for covector arguments in Cartesian components.
pub fn evaluate_cartesian(q: &NullFormCoeffs, xi: &FourVector, eta: &FourVector) -> f64 {
    let mut v = q.c0 * xi.minkowski_dot(eta);
    for a in 0..4 {
        for b in a + 1..4 {
            let c = q.c[a][b];
            if c != 0.0 {
                v += c * (xi.0[a] * eta.0[b] - eta.0[a] * xi.0[b]);
            }
        }
    }
    v
}

fn bilinear(m: &[[f64; 4]; 4], x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += x[a] * m[a][b] * y[b];
        }
    }
    s
}

/// A point in spherical coordinates `(r, θ, azimuth)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint {
    pub r: f64,
    pub theta: f64,
    pub azimuth: f64,
}

impl SpherePoint {
    pub fn new(r: f64, theta: f64, azimuth: f64) -> Self {
        Self { r, theta, azimuth }
    }

    /// Spherical coordinates of a nonzero spatial point.
    pub fn from_cartesian(x: [f64; 3]) -> Self {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        Self {
            r,
            theta: (x[2] / r).clamp(-1.0, 1.0).acos(),
            azimuth: x[1].atan2(x[0]),
        }
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.azimuth.sin_cos();
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

/// The null frame `{e₁ = e_θ, e₂ = e_azimuth, e₃ = L̄, e₄ = L}` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullFrame {
    pub omega: [f64; 3],
    pub e_theta: [f64; 3],
    pub e_azimuth: [f64; 3],
}

impl NullFrame {
    pub fn at(point: &SpherePoint) -> Result<Self> {
        if !(point.r > 0.0) {
            return Err(Error::Domain(format!("r = {} must be positive", point.r)));
        }
        let (st, ct) = point.theta.sin_cos();
        let (sp, cp) = point.azimuth.sin_cos();
        Ok(Self {
            omega: [st * cp, st * sp, ct],
            e_theta: [ct * cp, ct * sp, -st],
            e_azimuth: [-sp, cp, 0.0],
        })
    }

    pub fn l(&self) -> FourVector {
        FourVector::new(1.0, self.omega[0], self.omega[1], self.omega[2])
    }

    pub fn lbar(&self) -> FourVector {
        FourVector::new(1.0, -self.omega[0], -self.omega[1], -self.omega[2])
    }

    pub fn e1(&self) -> FourVector {
        FourVector::new(0.0, self.e_theta[0], self.e_theta[1], self.e_theta[2])
    }

    pub fn e2(&self) -> FourVector {
        FourVector::new(0.0, self.e_azimuth[0], self.e_azimuth[1], self.e_azimuth[2])
    }

    /// Cartesian gradient `(∂_t φ, ∂_i φ)` from its frame components.
    pub fn to_cartesian(&self, g: &FrameGradient) -> FourVector {
        let half_sum = 0.5 * (g.l + g.lbar);
        let half_diff = 0.5 * (g.l - g.lbar);
        let mut out = [half_sum, 0.0, 0.0, 0.0];
        for i in 0..3 {
            out[i + 1] =
                self.omega[i] * half_diff + self.e_theta[i] * g.ang[0] + self.e_azimuth[i] * g.ang[1];
        }
        FourVector(out)
    }

    /// Frame components `(Lφ, L̄φ, ∇̸φ)` of a Cartesian gradient.
    pub fn to_frame(&self, xi: &FourVector) -> FrameGradient {
        let s = &xi.0;
        let dot = |v: &[f64; 3]| v[0] * s[1] + v[1] * s[2] + v[2] * s[3];
        let radial = dot(&self.omega);
        FrameGradient {
            l: s[0] + radial,
            lbar: s[0] - radial,
            ang: [dot(&self.e_theta), dot(&self.e_azimuth)],
        }
    }

    // Columns expressing a covector in terms of the frame components
    // (Lφ, L̄φ, ∇̸₁φ, ∇̸₂φ).
    fn change_of_basis(&self) -> [[f64; 4]; 4] {
        let unit = |k: usize| {
            let mut g = FrameGradient::default();
            match k {
                0 => g.l = 1.0,
                1 => g.lbar = 1.0,
                2 => g.ang[0] = 1.0,
                _ => g.ang[1] = 1.0,
            }
            self.to_cartesian(&g).0
        };
        [unit(0), unit(1), unit(2), unit(3)]
    }
}

/// Derivatives of a scalar in the null frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameGradient {
    /// `Lφ`
    pub l: f64,
    /// `L̄φ`
    pub lbar: f64,
    /// `∇̸φ` in the orthonormal sphere frame `(e_θ, e_azimuth)`.
    pub ang: [f64; 2],
}

impl FrameGradient {
    pub fn new(l: f64, lbar: f64, ang: [f64; 2]) -> Self {
        Self { l, lbar, ang }
    }

    pub fn ang_norm(&self) -> f64 {
        self.ang[0].hypot(self.ang[1])
    }
}

/// Components of a null form in the null frame.
///
/// `q43` multiplies `Lφ L̄ψ`, `q34` multiplies `L̄φ Lψ`, `q4a` multiplies
/// `Lφ ∇̸_a ψ`, `qa4` multiplies `∇̸_a φ Lψ` and so on. There is no slot for
/// `Lφ Lψ` or `L̄φ L̄ψ`: those components vanish for every null form.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameComponents {
    pub q43: f64,
    pub q34: f64,
    pub q4a: [f64; 2],
    pub q3a: [f64; 2],
    pub qa4: [f64; 2],
    pub qa3: [f64; 2],
    pub qab: [[f64; 2]; 2],
}

impl FrameComponents {
    pub fn evaluate(&self, gphi: &FrameGradient, gpsi: &FrameGradient) -> f64 {
        let mut v = self.q43 * gphi.l * gpsi.lbar + self.q34 * gphi.lbar * gpsi.l;
        for a in 0..2 {
            v += self.q4a[a] * gphi.l * gpsi.ang[a]
                + self.q3a[a] * gphi.lbar * gpsi.ang[a]
                + self.qa4[a] * gphi.ang[a] * gpsi.l
                + self.qa3[a] * gphi.ang[a] * gpsi.lbar;
            for b in 0..2 {
                v += self.qab[a][b] * gphi.ang[a] * gpsi.ang[b];
            }
        }
        v
    }

    /// Sum of the absolute values of all components.
    pub fn abs_sum(&self) -> f64 {
        let pair = |v: &[f64; 2]| v[0].abs() + v[1].abs();
        self.q43.abs()
            + self.q34.abs()
            + pair(&self.q4a)
            + pair(&self.q3a)
            + pair(&self.qa4)
            + pair(&self.qa3)
            + pair(&self.qab[0])
            + pair(&self.qab[1])
    }
}

/// Decomposes `q` in the null frame at `point`.
pub fn frame_components(q: &NullFormCoeffs, point: &SpherePoint) -> Result<FrameComponents> {
    let frame = NullFrame::at(point)?;
    Ok(frame_components_in(q, &frame))
}

pub(crate) fn frame_components_in(q: &NullFormCoeffs, frame: &NullFrame) -> FrameComponents {
    let a = q.bilinear_matrix();
    let m = frame.change_of_basis();
    let f = |x: usize, y: usize| bilinear(&a, &m[x], &m[y]);
    FrameComponents {
        q43: f(0, 1),
        q34: f(1, 0),
        q4a: [f(0, 2), f(0, 3)],
        q3a: [f(1, 2), f(1, 3)],
        qa4: [f(2, 0), f(3, 0)],
        qa3: [f(2, 1), f(3, 1)],
        qab: [[f(2, 2), f(2, 3)], [f(3, 2), f(3, 3)]],
    }
}

pub fn evaluate_frame(fc: &FrameComponents, gphi: &FrameGradient, gpsi: &FrameGradient) -> f64 {
    fc.evaluate(gphi, gpsi)
}

/// Right-hand side of the pointwise bound
/// `|Lφ||L̄ψ| + |L̄φ||Lψ| + |∇̸φ||∇̸ψ| + (|Lφ| + |L̄φ|)|∇̸ψ| + |∇̸φ|(|Lψ| + |L̄ψ|)`.
pub fn bound_rhs(gphi: &FrameGradient, gpsi: &FrameGradient) -> f64 {
    let (ap, aq) = (gphi.ang_norm(), gpsi.ang_norm());
    gphi.l.abs() * gpsi.lbar.abs()
        + gphi.lbar.abs() * gpsi.l.abs()
        + ap * aq
        + (gphi.l.abs() + gphi.lbar.abs()) * aq
        + ap * (gpsi.l.abs() + gpsi.lbar.abs())
}

/// Constant `C` with `|Q(∇φ, ∇ψ)| ≤ C · bound_rhs(∇φ, ∇ψ)` at `point`.
pub fn pointwise_bound_constant(q: &NullFormCoeffs, point: &SpherePoint) -> Result<f64> {
    Ok(frame_components(q, point)?.abs_sum())
}

fn check_rotation_pair(pair: (usize, usize)) -> Result<()> {
    let (i, j) = pair;
    if 1 <= i && i < j && j <= 3 {
        Ok(())
    } else {
        Err(Error::InvalidIndex(format!(
            "rotation pair ({i}, {j}) needs 1 <= i < j <= 3"
        )))
    }
}

/// The form `Q̃` with `Ω_{ij} Q(∇φ,∇ψ) = Q(∇Ω_{ij}φ,∇ψ) + Q(∇φ,∇Ω_{ij}ψ) + Q̃(∇φ,∇ψ)`.
pub fn rotation_commutator(q: &NullFormCoeffs, pair: (usize, usize)) -> Result<NullFormCoeffs> {
    check_rotation_pair(pair)?;
    let (i, j) = pair;
    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    let mut out = [[0.0; 4]; 4];
    // out accumulates Σ coeff · Q_{γβ}; Q_{γβ} = −Q_{βγ}, Q_{γγ} = 0.
    let mut add = |g: usize, b: usize, coeff: f64| {
        if g != b && coeff != 0.0 {
            out[g][b] += coeff;
            out[b][g] -= coeff;
        }
    };
    for a in 0..4 {
        for b in a + 1..4 {
            let c = q.c[a][b];
            if c == 0.0 {
                continue;
            }
            add(j, b, c * d(i, a));
            add(i, b, -c * d(j, a));
            add(i, a, c * d(j, b));
            add(j, a, -c * d(i, b));
        }
    }
    Ok(NullFormCoeffs { c0: 0.0, c: out })
}

/// Values `Ω_{ij}φ` for the pairs `(1,2), (1,3), (2,3)` in that order.
pub type RotationValues = [f64; 3];

pub const ROTATION_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

fn rotation_slot(i: usize, j: usize) -> usize {
    match (i, j) {
        (1, 2) => 0,
        (1, 3) => 1,
        _ => 2,
    }
}

/// `Ω_{ij}φ = x_j ∂_iφ − x_i ∂_jφ` from a Cartesian gradient.
pub fn rotation_values(point: &SpherePoint, grad: &FourVector) -> RotationValues {
    let x = point.cartesian();
    ROTATION_PAIRS.map(|(i, j)| x[j - 1] * grad.0[i] - x[i - 1] * grad.0[j])
}

/// Null generator used by [`null_direction_commutator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullDirection {
    L,
    Lbar,
}

/// `[X, Q](∇φ,∇ψ) = X(Q(∇φ,∇ψ)) − Q(∇Xφ,∇ψ) − Q(∇φ,∇Xψ)` for `X ∈ {L, L̄}`.
///
/// Closed forms per basis form, extended linearly (`Ω_{ij}` values enter the
/// spatial forms):
///
/// * `[L, Q₀] = −(2/r) ∇̸φ·∇̸ψ`
/// * `[L, Q₀ᵢ] = −(1/r) Q₀ᵢ + (xᵢ/2r²)(L̄φ Lψ − Lφ L̄ψ)`
/// * `[L, Qᵢⱼ] = −(2/r) Qᵢⱼ + (1/2r²)((L̄φ − Lφ) Ωᵢⱼψ + (Lψ − L̄ψ) Ωᵢⱼφ)`
/// * `[L̄, Q] = −[L, Q]`
pub fn null_direction_commutator(
    q: &NullFormCoeffs,
    dir: NullDirection,
    point: &SpherePoint,
    gphi: &FrameGradient,
    gpsi: &FrameGradient,
    omega_phi: &RotationValues,
    omega_psi: &RotationValues,
) -> Result<f64> {
    let frame = NullFrame::at(point)?;
    let r = point.r;
    let x = point.cartesian();
    let xi = frame.to_cartesian(gphi);
    let eta = frame.to_cartesian(gpsi);
    let mut total = -2.0 / r * q.c0 * (gphi.ang[0] * gpsi.ang[0] + gphi.ang[1] * gpsi.ang[1]);
    for (a, b, c) in q.entries() {
        let qab = xi.0[a] * eta.0[b] - eta.0[a] * xi.0[b];
        let term = if a == 0 {
            -qab / r + x[b - 1] / (2.0 * r * r) * (gphi.lbar * gpsi.l - gphi.l * gpsi.lbar)
        } else {
            let s = rotation_slot(a, b);
            -2.0 / r * qab
                + ((gphi.lbar - gphi.l) * omega_psi[s] + (gpsi.l - gpsi.lbar) * omega_phi[s])
                    / (2.0 * r * r)
        };
        total += c * term;
    }
    Ok(match dir {
        NullDirection::L => total,
        NullDirection::Lbar => -total,
    })
}

/// Uniform direction on S² and amplitude in `[0.1, 10]`: `ξ = (a, aω)`.
pub fn sample_null_vector<R: Rng>(rng: &mut R) -> FourVector {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let az: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let a: f64 = rng.gen_range(0.1..=10.0);
    FourVector::new(a, a * s * az.cos(), a * s * az.sin(), a * z)
}

fn nullspace_dimension(rows: &[Vec<f64>], cols: usize) -> usize {
    let m = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let rank = sv.iter().filter(|&&s| s > NULLSPACE_RTOL * smax).count();
    cols - rank
}

/// Numerical dimension of the space of bilinear forms (16 unknowns) vanishing
/// on sampled null vectors.
pub fn certify_null_dimension(sample_count: usize, rng_seed: u64) -> Result<usize> {
    if sample_count < 40 {
        return Err(Error::Domain(format!(
            "sample_count = {sample_count}, at least 40 required"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let rows: Vec<Vec<f64>> = (0..sample_count)
        .map(|_| {
            let xi = sample_null_vector(&mut rng).0;
            let mut row = Vec::with_capacity(16);
            for a in 0..4 {
                for b in 0..4 {
                    row.push(xi[a] * xi[b]);
                }
            }
            row
        })
        .collect();
    Ok(nullspace_dimension(&rows, 16))
}

/// Same certification restricted to symmetric bilinear forms (10 unknowns).
pub fn certify_symmetric_null_dimension(sample_count: usize, rng_seed: u64) -> Result<usize> {
    if sample_count < 40 {
        return Err(Error::Domain(format!(
            "sample_count = {sample_count}, at least 40 required"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let rows: Vec<Vec<f64>> = (0..sample_count)
        .map(|_| {
            let xi = sample_null_vector(&mut rng).0;
            let mut row = Vec::with_capacity(10);
            for a in 0..4 {
                for b in a..4 {
                    row.push(if a == b { xi[a] * xi[a] } else { 2.0 * xi[a] * xi[b] });
                }
            }
            row
        })
        .collect();
    Ok(nullspace_dimension(&rows, 10))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn basis_coordinates() {
        let q0 = basis_form(BasisForm::Q0);
        assert_eq!(q0.c0(), 1.0);
        assert_eq!(q0.entries(), vec![]);
        let q12 = basis_form(BasisForm::pair(1, 2).unwrap());
        assert_eq!(q12.coefficient(1, 2), 1.0);
        assert_eq!(q12.coefficient(2, 1), -1.0);
        let q03 = basis_form(BasisForm::pair(0, 3).unwrap());
        assert_eq!(q03.coefficient(0, 3), 1.0);
        assert_eq!(q03.coefficient(3, 0), -1.0);
        assert_eq!(q03.c0(), 0.0);
        assert!(BasisForm::pair(2, 1).is_err());
        assert!(BasisForm::pair(1, 4).is_err());
    }

    #[test]
    fn cartesian_examples() {
        let q0 = basis_form(BasisForm::Q0);
        let l = FourVector::new(1.0, 0.0, 0.0, 1.0);
        assert_eq!(evaluate_cartesian(&q0, &l, &l), 0.0);
        let q12 = basis_form(BasisForm::Pair(1, 2));
        let e1 = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let e2 = FourVector::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(evaluate_cartesian(&q12, &e1, &e2), 1.0);
        let dt = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(evaluate_cartesian(&q0, &dt, &dt), -1.0);
    }

    #[test]
    fn from_entries_rejects_bad_input() {
        assert!(NullFormCoeffs::from_entries(0.0, &[(2, 1, 1.0)]).is_err());
        assert!(NullFormCoeffs::from_entries(0.0, &[(1, 2, 1.0), (1, 2, 2.0)]).is_err());
        let q = NullFormCoeffs::from_entries(0.5, &[(0, 3, 2.0)]).unwrap();
        assert_eq!(q.coefficient(3, 0), -2.0);
        assert_eq!(q.c0(), 0.5);
    }

    #[test]
    fn frame_components_of_metric_form() {
        let q0 = basis_form(BasisForm::Q0);
        for &(r, th, az) in &[(1.0, 0.0, 0.0), (3.0, 1.1, 0.4), (7.5, 2.9, -2.0)] {
            let fc = frame_components(&q0, &SpherePoint::new(r, th, az)).unwrap();
            assert!(close(fc.q34, -0.5, 1e-14) && close(fc.q43, -0.5, 1e-14));
            assert!(close(fc.qab[0][0], 1.0, 1e-14) && close(fc.qab[1][1], 1.0, 1e-14));
            assert!(fc.qab[0][1].abs() < 1e-14 && fc.qab[1][0].abs() < 1e-14);
            for a in 0..2 {
                assert!(fc.q4a[a].abs() < 1e-14 && fc.q3a[a].abs() < 1e-14);
            }
        }
        assert!(frame_components(&q0, &SpherePoint::new(0.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn frame_evaluation_examples() {
        let fc = frame_components(&basis_form(BasisForm::Q0), &SpherePoint::new(2.0, 0.3, 0.0))
            .unwrap();
        let l = FrameGradient::new(1.0, 0.0, [0.0; 2]);
        let lb = FrameGradient::new(0.0, 1.0, [0.0; 2]);
        let a = FrameGradient::new(0.0, 0.0, [1.0, 0.0]);
        assert!(fc.evaluate(&l, &l).abs() < 1e-15);
        assert!(close(fc.evaluate(&l, &lb), -0.5, 1e-14));
        assert!(close(fc.evaluate(&a, &a), 1.0, 1e-14));
    }

    #[test]
    fn q03_on_axis_matches_cartesian_contraction() {
        let q03 = basis_form(BasisForm::Pair(0, 3));
        let p = SpherePoint::new(2.0, 0.0, 0.0);
        let fc = frame_components(&q03, &p).unwrap();
        // Contract against the covectors dual to L and L̄.
        let frame = NullFrame::at(&p).unwrap();
        let gl = frame.to_cartesian(&FrameGradient::new(1.0, 0.0, [0.0; 2]));
        let glb = frame.to_cartesian(&FrameGradient::new(0.0, 1.0, [0.0; 2]));
        assert!(close(fc.q43, evaluate_cartesian(&q03, &gl, &glb), 1e-14));
        assert!(close(fc.q34, -fc.q43, 1e-14));
        assert!(fc.q43.abs() > 0.1);
    }

    #[test]
    fn bound_constant_examples() {
        let p = SpherePoint::new(1.5, 0.7, 0.2);
        let q0 = basis_form(BasisForm::Q0);
        assert!(close(pointwise_bound_constant(&q0, &p).unwrap(), 3.0, 1e-13));
        assert_eq!(pointwise_bound_constant(&NullFormCoeffs::zero(), &p).unwrap(), 0.0);
        let q = NullFormCoeffs::from_entries(0.3, &[(0, 1, 1.2), (2, 3, -0.4)]).unwrap();
        let c1 = pointwise_bound_constant(&q, &p).unwrap();
        let c2 = pointwise_bound_constant(&q.scaled(2.0), &p).unwrap();
        assert!(close(c2, 2.0 * c1, 1e-14));
    }

    #[test]
    fn rotation_commutator_examples() {
        let q0 = basis_form(BasisForm::Q0);
        for &pair in &ROTATION_PAIRS {
            assert!(rotation_commutator(&q0, pair).unwrap().is_zero());
        }
        assert!(rotation_commutator(&q0, (2, 1)).is_err());
        assert!(rotation_commutator(&q0, (0, 1)).is_err());
        // Q̃ for Q_{13} under Ω_{12}: δ_{11}Q_{23} − δ_{21}Q_{13} + δ_{23}Q_{11} − δ_{13}Q_{21} = Q_{23}.
        let qt = rotation_commutator(&basis_form(BasisForm::Pair(1, 3)), (1, 2)).unwrap();
        assert_eq!(qt, basis_form(BasisForm::Pair(2, 3)));
        // Q_{01} under Ω_{12}: −δ_{11}Q_{20}... = +Q_{02}.
        let qt = rotation_commutator(&basis_form(BasisForm::Pair(0, 1)), (1, 2)).unwrap();
        assert_eq!(qt, basis_form(BasisForm::Pair(0, 2)));
    }

    #[test]
    fn metric_commutator_examples() {
        let q0 = basis_form(BasisForm::Q0);
        let p = SpherePoint::new(2.5, 0.8, 0.3);
        let g1 = FrameGradient::new(0.0, 0.0, [0.7, -0.2]);
        let g2 = FrameGradient::new(0.0, 0.0, [0.4, 1.1]);
        let z = [0.0; 3];
        let vl =
            null_direction_commutator(&q0, NullDirection::L, &p, &g1, &g2, &z, &z).unwrap();
        let dot = 0.7 * 0.4 - 0.2 * 1.1;
        assert!(close(vl, -2.0 / 2.5 * dot, 1e-14));
        let g3 = FrameGradient::new(1.3, -0.6, [0.2, 0.5]);
        let a = null_direction_commutator(&q0, NullDirection::L, &p, &g3, &g2, &z, &z).unwrap();
        let b = null_direction_commutator(&q0, NullDirection::Lbar, &p, &g3, &g2, &z, &z).unwrap();
        assert_eq!(a, -b);
        assert!(null_direction_commutator(&q0, NullDirection::L, &SpherePoint::new(-1.0, 0.0, 0.0), &g1, &g2, &z, &z).is_err());
    }

    #[test]
    fn null_dimension_is_seven() {
        assert_eq!(certify_null_dimension(100, 1).unwrap(), 7);
        assert_eq!(certify_null_dimension(1000, 99).unwrap(), 7);
        assert_eq!(certify_symmetric_null_dimension(100, 5).unwrap(), 1);
        assert!(certify_null_dimension(39, 1).is_err());
    }

    #[test]
    fn null_vectors_are_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(sample_null_vector(&mut rng).is_null());
        }
        assert!(!FourVector::new(1.0, 0.0, 0.0, 0.0).is_null());
    }
}
