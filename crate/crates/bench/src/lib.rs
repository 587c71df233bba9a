//! Shared fixtures for the benchmarks.

use nullwave::{
    AngularMode, CapMode, CharacteristicData, DoubleNullGrid, NullFormCoeffs, NullFormSpec, PulseProfile,
    SolverConfig,
};

/// Everything [`nullwave::solver::march`] needs for one run.
pub struct MarchCase {
    pub data: CharacteristicData,
    pub spec: NullFormSpec,
    pub grid: DoubleNullGrid,
    pub cfg: SolverConfig,
}

/// Axisymmetric `Q₀ + Q₀₃` run on a fixed cap with `n_u` cells in `u`.
pub fn axisym_case(n_u: usize, n_theta: usize) -> MarchCase {
    let grid = DoubleNullGrid::new(-3.0, 0.1, n_u, 32, AngularMode::Axisym, n_theta).expect("grid");
    let q = NullFormCoeffs::from_entries(1.0, &[(0, 3, 0.5)]).expect("coefficients");
    let spec = NullFormSpec::new(q, AngularMode::Axisym).expect("admissible form");
    let profile = PulseProfile::new(0.3, CapMode::Fixed(0.6)).expect("profile");
    let data = nullwave::pulse::build_data(&profile, &grid).expect("data");
    MarchCase {
        data,
        spec,
        grid,
        cfg: SolverConfig::default(),
    }
}

/// Deterministic grid of sphere points away from the poles.
pub fn sphere_points(n: usize) -> Vec<nullwave::nullform::SpherePoint> {
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            nullwave::nullform::SpherePoint::new(1.0 + t, 0.1 + 2.9 * t, 6.0 * t)
        })
        .collect()
}
