/// Dense scalar field over the (u, ubar, θ) nodes of a grid, stored u-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field3 {
    n_u: usize,
    n_ubar: usize,
    n_theta: usize,
    data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(n_u: usize, n_ubar: usize, n_theta: usize) -> Self {
        Self {
            n_u,
            n_ubar,
            n_theta,
            data: vec![0.0; n_u * n_ubar * n_theta],
        }
    }

    pub fn from_fn(
        n_u: usize,
        n_ubar: usize,
        n_theta: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(n_u * n_ubar * n_theta);
        for i in 0..n_u {
            for j in 0..n_ubar {
                for k in 0..n_theta {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            n_u,
            n_ubar,
            n_theta,
            data,
        }
    }

    /// Node counts `(u, ubar, θ)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_u, self.n_ubar, self.n_theta)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.n_ubar + j) * self.n_theta
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j) + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o + k] = v;
    }

    /// The angular values at node `(i, j)`.
    #[inline]
    pub fn sphere(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.n_theta]
    }

    #[inline]
    pub fn sphere_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        let n = self.n_theta;
        &mut self.data[o..o + n]
    }

    /// All `(ū, θ)` values at the u node `i`.
    pub fn u_slice(&self, i: usize) -> &[f64] {
        let n = self.n_ubar * self.n_theta;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_u: self.n_u,
            n_ubar: self.n_ubar,
            n_theta: self.n_theta,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
