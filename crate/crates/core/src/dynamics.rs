//! Unconstrained linear dynamics `x_{k+1} = F_k x_k + w_k` over a fixed horizon,
//! the transition products between time steps, and the stacked operators that
//! relate the whole noise sequence to one update.

use nalgebra::{DMatrix, DVector};

use crate::ellipsoid::{check_psd, symmetrize, EIGEN_TOL};
use crate::error::{Error, Result};

/// Linear system with `N` nonsingular transitions and a joint noise shape for
/// the stacked vector `(w_0, …, w_{N-1})`.
#[derive(Debug, Clone)]
pub struct SystemModel {
    dim: usize,
    transitions: Vec<DMatrix<f64>>,
    stacked_noise_shape: DMatrix<f64>,
    /// `to_horizon[j] = Ψ_{j,N}` for `j = 0..=N`.
    to_horizon: Vec<DMatrix<f64>>,
}

impl SystemModel {
    /// Builds a model from per-step transitions and the full `nN × nN` noise shape.
    pub fn new(transitions: Vec<DMatrix<f64>>, stacked_noise_shape: DMatrix<f64>) -> Result<Self> {
        let horizon = transitions.len();
        if horizon == 0 {
            return Err(Error::Precondition("horizon must be at least one step".into()));
        }
        let dim = transitions[0].nrows();
        for f in &transitions {
            if f.nrows() != dim || f.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "transition matrix",
                    expected: dim,
                    found: f.ncols().max(f.nrows()),
                });
            }
            let scale = f.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
            if f.determinant().abs() <= 1e-12 * scale.powi(dim as i32) {
                return Err(Error::Singular("state transition matrix"));
            }
        }
        let total = dim * horizon;
        if stacked_noise_shape.nrows() != total || stacked_noise_shape.ncols() != total {
            return Err(Error::DimensionMismatch {
                context: "stacked noise shape",
                expected: total,
                found: stacked_noise_shape.nrows(),
            });
        }
        check_psd(&stacked_noise_shape, EIGEN_TOL)?;
        if stacked_noise_shape.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("stacked noise shape"));
        }

        let mut to_horizon = vec![DMatrix::identity(dim, dim); horizon + 1];
        for j in (0..horizon).rev() {
            to_horizon[j] = &to_horizon[j + 1] * &transitions[j];
        }
        Ok(Self {
            dim,
            transitions,
            stacked_noise_shape: symmetrize(&stacked_noise_shape),
            to_horizon,
        })
    }

    /// Block-diagonal noise shape `diag(Q_0, …, Q_{N-1})`.
    pub fn with_block_diagonal_noise(transitions: Vec<DMatrix<f64>>, blocks: &[DMatrix<f64>]) -> Result<Self> {
        if blocks.len() != transitions.len() {
            return Err(Error::DimensionMismatch {
                context: "noise block count",
                expected: transitions.len(),
                found: blocks.len(),
            });
        }
        let n = blocks.first().map_or(0, |b| b.nrows());
        let total = n * blocks.len();
        let mut q = DMatrix::zeros(total, total);
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: "noise block",
                    expected: n,
                    found: b.nrows(),
                });
            }
            q.view_mut((i * n, i * n), (n, n)).copy_from(b);
        }
        Self::new(transitions, q)
    }

    /// Same `F` and `Q` at every step.
    pub fn time_invariant(f: DMatrix<f64>, q: DMatrix<f64>, horizon: usize) -> Result<Self> {
        Self::with_block_diagonal_noise(vec![f; horizon], &vec![q; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transition(&self, k: usize) -> &DMatrix<f64> {
        &self.transitions[k]
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    pub fn stacked_noise_shape(&self) -> &DMatrix<f64> {
        &self.stacked_noise_shape
    }

    /// Block `Q_{i,j}` of the stacked noise shape.
    pub fn noise_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let n = self.dim;
        self.stacked_noise_shape.view((i * n, j * n), (n, n)).into_owned()
    }

    /// Per-step noise shape `Q_k = Q_{k,k}`.
    pub fn step_noise_shape(&self, k: usize) -> DMatrix<f64> {
        self.noise_block(k, k)
    }

    fn check_step(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.horizon() {
            return Err(Error::OutOfRange {
                what: "step",
                index: k,
                lo: 1,
                hi: self.horizon(),
            });
        }
        Ok(())
    }

    /// `Ψ_{k,t} = F_{t-1} ⋯ F_k`, with `Ψ_{t,t} = I`.
    pub fn transition_product(&self, k: usize, t: usize) -> Result<DMatrix<f64>> {
        if t > self.horizon() {
            return Err(Error::OutOfRange {
                what: "time",
                index: t,
                lo: 0,
                hi: self.horizon(),
            });
        }
        if k > t {
            return Err(Error::OutOfRange {
                what: "start time",
                index: k,
                lo: 0,
                hi: t,
            });
        }
        if t == self.horizon() {
            return Ok(self.to_horizon[k].clone());
        }
        let mut psi = DMatrix::identity(self.dim, self.dim);
        for f in &self.transitions[k..t] {
            psi = f * psi;
        }
        Ok(psi)
    }

    /// `Ψ_{j,N}` from the precomputed table.
    pub fn to_horizon(&self, j: usize) -> &DMatrix<f64> {
        &self.to_horizon[j]
    }

    /// Number of noise blocks `w_{k-1}, …, w_{N-1}` that reach step `k` onward.
    pub fn remaining_blocks(&self, k: usize) -> usize {
        self.horizon() - k + 1
    }

    /// `[Ψ_{k,N}, …, Ψ_{N,N}]`, an `n × n(N-k+1)` matrix ending in the identity.
    pub fn stacked_psi(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_step(k)?;
        let n = self.dim;
        let blocks = self.remaining_blocks(k);
        let mut out = DMatrix::zeros(n, n * blocks);
        for b in 0..blocks {
            out.view_mut((0, b * n), (n, n)).copy_from(&self.to_horizon[k + b]);
        }
        Ok(out)
    }

    /// `[I, 0, …, 0]` selecting `w_{k-1}` out of `(w_{k-1}, …, w_{N-1})`.
    pub fn selector_g(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_step(k)?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n * self.remaining_blocks(k));
        g.view_mut((0, 0), (n, n)).fill_with_identity();
        Ok(g)
    }

    /// Block selector with `M_k w_0 = (w_{k-1}, …, w_{N-1})`.
    pub fn selector_m(&self, k: usize) -> Result<BlockSelector> {
        self.check_step(k)?;
        Ok(BlockSelector {
            block: self.dim,
            total_blocks: self.horizon(),
            first_block: k - 1,
        })
    }

    /// `M_k Q_{w0} M_kᵀ`: the trailing principal block submatrix.
    pub fn noise_cover_slice(&self, k: usize) -> Result<DMatrix<f64>> {
        let m = self.selector_m(k)?;
        let start = m.first_block * self.dim;
        let len = m.rows();
        Ok(self.stacked_noise_shape.view((start, start), (len, len)).into_owned())
    }

    /// `ζ_{k,t} = Σ_{j=k}^{t-1} Ψ_{j+1,t} w_j`, given `noises = (w_k, …, w_{t-1})`.
    pub fn residual_zeta(&self, k: usize, t: usize, noises: &[DVector<f64>]) -> Result<DVector<f64>> {
        if k > t || t > self.horizon() {
            return Err(Error::OutOfRange {
                what: "start time",
                index: k,
                lo: 0,
                hi: t.min(self.horizon()),
            });
        }
        if noises.len() != t - k {
            return Err(Error::DimensionMismatch {
                context: "noise count",
                expected: t - k,
                found: noises.len(),
            });
        }
        let mut zeta = DVector::zeros(self.dim);
        for (offset, w) in noises.iter().enumerate() {
            if w.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    context: "noise vector",
                    expected: self.dim,
                    found: w.len(),
                });
            }
            let j = k + offset;
            zeta += self.transition_product(j + 1, t)? * w;
        }
        Ok(zeta)
    }
}

/// Index-only form of the block selection matrix `M_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSelector {
    block: usize,
    total_blocks: usize,
    first_block: usize,
}

impl BlockSelector {
    pub fn rows(&self) -> usize {
        self.block * (self.total_blocks - self.first_block)
    }

    pub fn cols(&self) -> usize {
        self.block * self.total_blocks
    }

    /// Offset of the first selected entry in the stacked vector.
    pub fn offset(&self) -> usize {
        self.block * self.first_block
    }

    pub fn apply(&self, w0: &DVector<f64>) -> DVector<f64> {
        w0.rows(self.offset(), self.rows()).into_owned()
    }

    /// Materialized `M_k`; only meant for cross-checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            m[(i, self.offset() + i)] = 1.0;
        }
        m
    }
}

/// Transition of the almost-constant-velocity model with state `(x, ẋ, y, ẏ)`.
pub fn cv_transition(dt: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, dt, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, dt, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// Acceleration-driven noise shape of the CV model, `g²` times the per-axis block
/// `[[T³/3, T²/2], [T²/2, T]]`.
pub fn cv_noise_shape(dt: f64, accel: f64) -> DMatrix<f64> {
    let g2 = accel * accel;
    let a = dt.powi(3) / 3.0;
    let b = dt.powi(2) / 2.0;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            a, b, 0.0, 0.0, //
            b, dt, 0.0, 0.0, //
            0.0, 0.0, a, b, //
            0.0, 0.0, b, dt,
        ],
    ) * g2
}

/// One axis of the CV model: state `(p, v)`.
pub fn cv_axis_transition(dt: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0])
}

pub fn cv_axis_noise_shape(dt: f64, accel: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt.powi(2) / 2.0, dt]) * (accel * accel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize, horizon: usize) -> SystemModel {
        let transitions = (0..horizon)
            .map(|_| DMatrix::identity(n, n) + randn(rng, n, n) * 0.3)
            .collect();
        let g = randn(rng, n * horizon, n * horizon);
        let q = g.transpose() * &g + DMatrix::identity(n * horizon, n * horizon);
        SystemModel::new(transitions, q).unwrap()
    }

    fn cv_system(horizon: usize) -> SystemModel {
        SystemModel::time_invariant(cv_transition(1.0), cv_noise_shape(1.0, 9.8), horizon).unwrap()
    }

    #[test]
    fn psi_diagonal_is_identity() {
        let sys = cv_system(5);
        for t in 0..=5 {
            assert_eq!(sys.transition_product(t, t).unwrap(), DMatrix::identity(4, 4));
        }
    }

    #[test]
    fn psi_two_steps_of_cv() {
        let sys = cv_system(5);
        let f = cv_transition(1.0);
        let expected = &f * &f;
        assert_eq!(sys.transition_product(1, 3).unwrap(), expected);
        assert_eq!(expected[(0, 1)], 2.0);
        assert_eq!(expected[(2, 3)], 2.0);
        assert!(sys.transition_product(3, 1).is_err());
    }

    #[test]
    fn psi_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sys = random_system(&mut rng, 3, 7);
        for (j, k, t) in [(0, 2, 5), (1, 1, 7), (3, 6, 7), (0, 0, 0)] {
            let lhs = sys.transition_product(k, t).unwrap() * sys.transition_product(j, k).unwrap();
            let rhs = sys.transition_product(j, t).unwrap();
            assert!((lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn stacked_psi_shapes() {
        let sys = cv_system(50);
        assert_eq!(sys.stacked_psi(50).unwrap(), DMatrix::identity(4, 4));
        let last_two = sys.stacked_psi(49).unwrap();
        assert_eq!(last_two.columns(0, 4), cv_transition(1.0));
        assert_eq!(last_two.columns(4, 4), DMatrix::identity(4, 4));
        let full = sys.stacked_psi(1).unwrap();
        assert_eq!(full.ncols(), 200);
        let mut f49 = DMatrix::identity(4, 4);
        for _ in 0..49 {
            f49 = cv_transition(1.0) * f49;
        }
        assert_eq!(full.columns(0, 4), f49);
        assert_eq!(f49[(0, 1)], 49.0);
        assert!(sys.stacked_psi(0).is_err());
        assert!(sys.stacked_psi(51).is_err());
    }

    #[test]
    fn selectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sys = random_system(&mut rng, 2, 4);
        let m1 = sys.selector_m(1).unwrap();
        assert_eq!(m1.to_dense(), DMatrix::identity(8, 8));
        let m4 = sys.selector_m(4).unwrap();
        assert_eq!(m4.rows(), 2);
        let w0 = DVector::from_fn(8, |i, _| i as f64);
        assert_eq!(m4.apply(&w0), DVector::from_vec(vec![6.0, 7.0]));
        for k in 1..=4 {
            let m = sys.selector_m(k).unwrap();
            assert_eq!(m.to_dense() * &w0, m.apply(&w0));
            assert_eq!(m.apply(&w0), w0.rows(2 * (k - 1), 2 * (5 - k)).into_owned());
            let g = sys.selector_g(k).unwrap();
            assert_eq!(g.columns(0, 2), DMatrix::identity(2, 2));
            assert_eq!(g.ncols(), 2 * (5 - k));
        }
    }

    #[test]
    fn noise_slices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = random_system(&mut rng, 3, 5);
        assert_eq!(&sys.noise_cover_slice(1).unwrap(), sys.stacked_noise_shape());
        for k in 1..=5 {
            let m = sys.selector_m(k).unwrap().to_dense();
            let explicit = &m * sys.stacked_noise_shape() * m.transpose();
            assert_eq!(sys.noise_cover_slice(k).unwrap(), explicit);
            assert!(sys.noise_cover_slice(k).unwrap().cholesky().is_some());
        }
        let blocks: Vec<_> = (0..3).map(|i| DMatrix::identity(2, 2) * (i + 1) as f64).collect();
        let diag = SystemModel::with_block_diagonal_noise(vec![cv_axis_transition(1.0); 3], &blocks).unwrap();
        assert_eq!(diag.noise_cover_slice(3).unwrap(), blocks[2]);
    }

    #[test]
    fn zeta_cases_and_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = random_system(&mut rng, 3, 6);
        assert_eq!(sys.residual_zeta(2, 2, &[]).unwrap(), DVector::zeros(3));
        let w = DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
        assert_eq!(sys.residual_zeta(2, 3, std::slice::from_ref(&w)).unwrap(), w);
        assert!(sys.residual_zeta(1, 3, std::slice::from_ref(&w)).is_err());

        let noises: Vec<DVector<f64>> = (0..6)
            .map(|_| DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let x0 = DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng));
        let mut states = vec![x0];
        for k in 0..6 {
            let next = sys.transition(k) * &states[k] + &noises[k];
            states.push(next);
        }
        for k in 0..=6 {
            for t in k..=6 {
                let closed = sys.transition_product(k, t).unwrap() * &states[k]
                    + sys.residual_zeta(k, t, &noises[k..t]).unwrap();
                assert!((&closed - &states[t]).norm() <= 1e-9 * (1.0 + states[t].norm()));
            }
        }
    }

    #[test]
    fn rejects_singular_transition() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            SystemModel::time_invariant(f, DMatrix::identity(2, 2), 3),
            Err(Error::Singular(_))
        ));
        assert!(SystemModel::time_invariant(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), 3).is_err());
    }
}
