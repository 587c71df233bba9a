//! Property suite for the null-form algebra, run by `nullwave verify-algebra`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::poly::{apply_form, Poly};
use super::{
    basis_form, bound_rhs, certify_null_dimension, evaluate_cartesian, frame_components,
    null_direction_commutator, rotation_commutator, rotation_values, sample_null_vector,
    BasisForm, FourVector, FrameGradient, NullDirection, NullFormCoeffs, NullFrame, SpherePoint,
    ROTATION_PAIRS,
};

pub const NULL_CONE_TOL: f64 = 1e-12;
pub const EQUIVALENCE_TOL: f64 = 1e-12;
pub const ROTATION_TOL: f64 = 1e-12;
pub const COMMUTATOR_ORDER: f64 = 2.0;
pub const COMMUTATOR_ORDER_TOL: f64 = 0.3;

pub const PROP_DIMENSION: &str = "null_dimension";
pub const PROP_NULL_CONE: &str = "null_cone_vanishing";
pub const PROP_EQUIVALENCE: &str = "frame_cartesian_equivalence";
pub const PROP_ROTATION: &str = "rotation_commutator_oracle";
pub const PROP_NULL_COMMUTATOR: &str = "null_direction_commutator_order";
pub const PROP_BOUND: &str = "pointwise_bound";

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Null samples per basis form; the other checks scale from it.
    pub samples: usize,
    pub seed: u64,
    /// Negative control: perturbs the metric basis form so that it no longer
    /// vanishes on the null cone.
    pub corrupt_basis: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 20240601,
            corrupt_basis: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropertyRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub dimension: usize,
    pub rows: Vec<PropertyRow>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }
}

pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::new();

    let dims: Vec<usize> = (0..5)
        .map(|s| certify_null_dimension(100.max(opts.samples / 100), opts.seed + s).unwrap_or(0))
        .collect();
    let dimension = dims[0];
    rows.push(PropertyRow {
        name: PROP_DIMENSION,
        passed: dims.iter().all(|&d| d == 7),
        detail: format!("dimensions over 5 seeds: {dims:?}"),
    });

    let worst = null_cone_check(opts.samples, opts.corrupt_basis, &mut rng);
    rows.push(PropertyRow {
        name: PROP_NULL_CONE,
        passed: worst <= NULL_CONE_TOL,
        detail: format!("max |Q(xi,xi)| / (|q| |xi|^2) = {worst:.3e}"),
    });

    let worst = equivalence_check((opts.samples / 10).max(100), &mut rng);
    rows.push(PropertyRow {
        name: PROP_EQUIVALENCE,
        passed: worst <= EQUIVALENCE_TOL,
        detail: format!("max relative difference = {worst:.3e}"),
    });

    let worst = rotation_oracle((opts.samples / 1000).clamp(3, 50), &mut rng);
    rows.push(PropertyRow {
        name: PROP_ROTATION,
        passed: worst <= ROTATION_TOL,
        detail: format!("max relative defect = {worst:.3e}"),
    });

    let orders = commutator_orders(&mut rng);
    let ok = orders
        .iter()
        .all(|o| (o - COMMUTATOR_ORDER).abs() <= COMMUTATOR_ORDER_TOL);
    rows.push(PropertyRow {
        name: PROP_NULL_COMMUTATOR,
        passed: ok,
        detail: format!("observed orders {:?}", orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()),
    });

    let worst = bound_check(opts.samples, &mut rng);
    rows.push(PropertyRow {
        name: PROP_BOUND,
        passed: worst <= 1.0 + 1e-12,
        detail: format!("max |Q| / (C * rhs) = {worst:.6}"),
    });

    SuiteReport { dimension, rows }
}

fn random_form<R: Rng>(rng: &mut R) -> NullFormCoeffs {
    let mut entries = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            entries.push((a, b, rng.gen_range(-1.0..1.0)));
        }
    }
    NullFormCoeffs::from_entries(rng.gen_range(-1.0..1.0), &entries).expect("valid entries")
}

fn random_point<R: Rng>(rng: &mut R) -> SpherePoint {
    SpherePoint::new(
        rng.gen_range(1.0..20.0),
        rng.gen_range(0.0..std::f64::consts::PI),
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

fn random_gradient<R: Rng>(rng: &mut R) -> FrameGradient {
    FrameGradient::new(
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-3.0..3.0),
        [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
    )
}

/// Worst normalized `|Q(ξ, ξ)|` over sampled null `ξ`, for every basis form.
pub fn null_cone_check<R: Rng>(samples: usize, corrupt: bool, rng: &mut R) -> f64 {
    let mut worst = 0.0_f64;
    for kind in BasisForm::all() {
        let q = basis_form(kind);
        let mut m = q.bilinear_matrix();
        if corrupt && kind == BasisForm::Q0 {
            m[0][0] += 0.5;
        }
        for _ in 0..samples {
            let xi = sample_null_vector(rng).0;
            let mut v = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    v += xi[a] * m[a][b] * xi[b];
                }
            }
            let n2: f64 = xi.iter().map(|x| x * x).sum();
            worst = worst.max(v.abs() / (q.norm() * n2));
        }
    }
    worst
}

/// Worst relative difference between frame and Cartesian evaluation.
pub fn equivalence_check<R: Rng>(trials: usize, rng: &mut R) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let q = random_form(rng);
        let p = random_point(rng);
        let (gp, gq) = (random_gradient(rng), random_gradient(rng));
        let frame = NullFrame::at(&p).expect("positive radius");
        let (xi, eta) = (frame.to_cartesian(&gp), frame.to_cartesian(&gq));
        let cart = evaluate_cartesian(&q, &xi, &eta);
        let fc = frame_components(&q, &p).expect("positive radius");
        let fr = fc.evaluate(&gp, &gq);
        let scale = q.norm() * xi.euclid_sq().sqrt() * eta.euclid_sq().sqrt();
        worst = worst.max((cart - fr).abs() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}

fn random_poly<R: Rng>(rng: &mut R) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..8 {
        let e: [u32; 4] = std::array::from_fn(|_| rng.gen_range(0..3));
        if e.iter().sum::<u32>() <= 3 {
            p = &p + &Poly::monomial(rng.gen_range(-1.0..1.0), e);
        }
    }
    p
}

/// Worst relative defect of the rotation identity on random polynomial fields.
pub fn rotation_oracle<R: Rng>(field_pairs: usize, rng: &mut R) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..field_pairs {
        let (phi, psi) = (random_poly(rng), random_poly(rng));
        for kind in BasisForm::all() {
            let q = basis_form(kind);
            for &(i, j) in &ROTATION_PAIRS {
                let qt = rotation_commutator(&q, (i, j)).expect("valid pair");
                let parts = [
                    apply_form(&q, &phi, &psi).rotate(i, j),
                    apply_form(&q, &phi.rotate(i, j), &psi),
                    apply_form(&q, &phi, &psi.rotate(i, j)),
                ];
                let lhs = &(&parts[0] - &parts[1]) - &parts[2];
                let rhs = apply_form(&qt, &phi, &psi);
                for _ in 0..4 {
                    let p: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
                    // Normalize by the size of the individual terms, not of the
                    // (possibly cancelling) result.
                    let scale: f64 =
                        parts.iter().map(|t| t.eval_abs(&p)).sum::<f64>() + rhs.eval_abs(&p);
                    let d = (lhs.eval(&p) - rhs.eval(&p)).abs();
                    if scale > 0.0 {
                        worst = worst.max(d / scale);
                    }
                }
            }
        }
    }
    worst
}

fn null_generator(x: &[f64; 3], dir: NullDirection) -> [f64; 4] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let s = match dir {
        NullDirection::L => 1.0,
        NullDirection::Lbar => -1.0,
    };
    [1.0, s * x[0] / r, s * x[1] / r, s * x[2] / r]
}

fn directional(f: &Poly, p: &[f64; 4], dir: NullDirection) -> f64 {
    let x = [p[1], p[2], p[3]];
    let v = null_generator(&x, dir);
    let g = f.eval_gradient(p).0;
    (0..4).map(|a| v[a] * g[a]).sum()
}

/// Error of the closed-form commutator against centered differences of its
/// definition, with step `h`.
pub fn commutator_fd_error(
    q: &NullFormCoeffs,
    dir: NullDirection,
    phi: &Poly,
    psi: &Poly,
    p: &[f64; 4],
    h: f64,
) -> f64 {
    let x = [p[1], p[2], p[3]];
    let v = null_generator(&x, dir);
    let shifted = |s: f64| -> [f64; 4] { std::array::from_fn(|a| p[a] + s * h * v[a]) };
    let big_q = |pt: &[f64; 4]| evaluate_cartesian(q, &phi.eval_gradient(pt), &psi.eval_gradient(pt));
    let d_q = (big_q(&shifted(1.0)) - big_q(&shifted(-1.0))) / (2.0 * h);
    let grad_dir = |f: &Poly| -> FourVector {
        FourVector(std::array::from_fn(|a| {
            let mut pp = *p;
            let mut pm = *p;
            pp[a] += h;
            pm[a] -= h;
            (directional(f, &pp, dir) - directional(f, &pm, dir)) / (2.0 * h)
        }))
    };
    let gphi = phi.eval_gradient(p);
    let gpsi = psi.eval_gradient(p);
    let fd = d_q - evaluate_cartesian(q, &grad_dir(phi), &gpsi) - evaluate_cartesian(q, &gphi, &grad_dir(psi));

    let point = SpherePoint::from_cartesian(x);
    let frame = NullFrame::at(&point).expect("positive radius");
    let closed = null_direction_commutator(
        q,
        dir,
        &point,
        &frame.to_frame(&gphi),
        &frame.to_frame(&gpsi),
        &rotation_values(&point, &gphi),
        &rotation_values(&point, &gpsi),
    )
    .expect("positive radius");
    (fd - closed).abs()
}

/// Observed orders of the finite-difference check for `φ = t·x₁`, `ψ = x₂²`
/// (with `Q₀` and a random form, along `L` and `L̄`).
pub fn commutator_orders<R: Rng>(rng: &mut R) -> Vec<f64> {
    let phi = &Poly::var(0) * &Poly::var(1);
    let psi = &Poly::var(2) * &Poly::var(2);
    let p = [0.3, 0.8, -0.6, 1.1];
    let forms = [basis_form(BasisForm::Q0), random_form(rng)];
    let mut orders = Vec::new();
    for q in &forms {
        for dir in [NullDirection::L, NullDirection::Lbar] {
            let e: Vec<f64> = [0.04, 0.02, 0.01]
                .iter()
                .map(|&h| commutator_fd_error(q, dir, &phi, &psi, &p, h))
                .collect();
            orders.push((e[0] / e[1]).log2());
            orders.push((e[1] / e[2]).log2());
        }
    }
    orders
}

/// Worst ratio `|Q(∇φ,∇ψ)| / (C · rhs)` over random forms, points and gradients.
pub fn bound_check<R: Rng>(samples: usize, rng: &mut R) -> f64 {
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let q = random_form(rng);
        let p = random_point(rng);
        let fc = frame_components(&q, &p).expect("positive radius");
        let (gp, gq) = (random_gradient(rng), random_gradient(rng));
        let denom = fc.abs_sum() * bound_rhs(&gp, &gq);
        if denom > 0.0 {
            worst = worst.max(fc.evaluate(&gp, &gq).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = run_suite(&SuiteOptions {
            samples: 500,
            ..SuiteOptions::default()
        });
        assert!(report.all_passed(), "{:?}", report.rows);
        assert_eq!(report.dimension, 7);
    }

    #[test]
    fn corrupt_basis_is_caught() {
        let report = run_suite(&SuiteOptions {
            samples: 200,
            corrupt_basis: true,
            ..SuiteOptions::default()
        });
        assert_eq!(report.failing(), vec![PROP_NULL_CONE]);
    }
}
