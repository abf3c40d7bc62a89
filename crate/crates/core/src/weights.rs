//! Weight matrices for the constrained projection and the noise cover they induce.
//!
//! A weight `W = [[W1, W2], [W2ᵀ, W3]]` fixes the constraint gain
//! `B = W2 Dᵀ (D W3 Dᵀ)⁻¹ D`. The noise injected by one reconstructed step is
//! `η_k = H_k w_{k-1}` with `H_k = G_k - B Ψ_k`, so its cover ellipsoid has shape
//! `H_k Q_{w_{k-1}} H_kᵀ`. The optimal weight minimizes that shape in the Loewner
//! order; it is the joint shape of `(w_{k-1}, x_N)` seen from step `k - 1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constraint::DestinationConstraint;
use crate::dynamics::SystemModel;
use crate::ellipsoid::{check_symmetric, eigen_range, symmetrize};
use crate::error::{Error, Result};

/// Relative tolerance for equality residuals such as the terminal condition.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Condition-number cap for randomly drawn competitor weights.
pub const COMPETITOR_MAX_CONDITION: f64 = 1e6;

/// The `n × n` blocks of a `2n × 2n` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBlocks {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
}

impl WeightBlocks {
    /// Checks shapes, symmetry of `W1`/`W3` and `W3 ≻ 0`.
    pub fn new(w1: DMatrix<f64>, w2: DMatrix<f64>, w3: DMatrix<f64>) -> Result<Self> {
        let n = w3.nrows();
        for (m, ctx) in [(&w1, "W1"), (&w2, "W2"), (&w3, "W3")] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        check_symmetric(&w1)?;
        check_symmetric(&w3)?;
        if w3.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("W3 block"));
        }
        Ok(Self {
            w1: symmetrize(&w1),
            w2,
            w3: symmetrize(&w3),
        })
    }

    /// `W2 = W3 = I`, with `W1 = 2I` so the full matrix is positive definite.
    pub fn identity(n: usize) -> Self {
        Self {
            w1: DMatrix::identity(n, n) * 2.0,
            w2: DMatrix::identity(n, n),
            w3: DMatrix::identity(n, n),
        }
    }

    /// Splits a `2n × 2n` matrix into its blocks.
    pub fn from_full(w: &DMatrix<f64>) -> Result<Self> {
        if !w.is_square() || !w.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                context: "full weight matrix",
                expected: w.nrows() + w.nrows() % 2,
                found: w.ncols(),
            });
        }
        check_symmetric(w)?;
        let n = w.nrows() / 2;
        Self::new(
            w.view((0, 0), (n, n)).into_owned(),
            w.view((0, n), (n, n)).into_owned(),
            w.view((n, n), (n, n)).into_owned(),
        )
    }

    pub fn dim(&self) -> usize {
        self.w3.nrows()
    }

    /// `[[W1, W2], [W2ᵀ, W3]]`.
    pub fn full(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        w.view_mut((0, 0), (n, n)).copy_from(&self.w1);
        w.view_mut((0, n), (n, n)).copy_from(&self.w2);
        w.view_mut((n, 0), (n, n)).copy_from(&self.w2.transpose());
        w.view_mut((n, n), (n, n)).copy_from(&self.w3);
        w
    }

    /// Full matrix, with `W1` inflated by `ε I` (`ε = 1e-9 · tr(W1) / n`) when it
    /// is only semidefinite. The gain `B` does not depend on `W1`.
    pub fn full_positive_definite(&self) -> Result<DMatrix<f64>> {
        let full = self.full();
        if full.clone().cholesky().is_some() {
            return Ok(full);
        }
        let n = self.dim();
        let eps = 1e-9 * self.w1.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
        let mut inflated = full;
        for i in 0..n {
            inflated[(i, i)] += eps;
        }
        if inflated.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("weight matrix after W1 inflation"));
        }
        Ok(inflated)
    }
}

/// How the weight of each step is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightMode {
    /// The noise-cover minimizing weight of [`optimal_weight`].
    Optimal,
    /// `W2 = W3 = I`.
    Identity,
    /// One weight per step `k = 1..=N`.
    Custom(Vec<WeightBlocks>),
}

impl WeightMode {
    pub fn weights_at(&self, sys: &SystemModel, k: usize) -> Result<WeightBlocks> {
        match self {
            WeightMode::Optimal => optimal_weight(sys, k),
            WeightMode::Identity => Ok(WeightBlocks::identity(sys.dim())),
            WeightMode::Custom(list) => {
                if list.len() != sys.horizon() {
                    return Err(Error::DimensionMismatch {
                        context: "custom weight list",
                        expected: sys.horizon(),
                        found: list.len(),
                    });
                }
                if k == 0 || k > list.len() {
                    return Err(Error::OutOfRange {
                        what: "step",
                        index: k,
                        lo: 1,
                        hi: list.len(),
                    });
                }
                Ok(list[k - 1].clone())
            }
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightMode::Optimal => "optimal",
            WeightMode::Identity => "identity",
            WeightMode::Custom(_) => "custom",
        })
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(WeightMode::Optimal),
            "identity" => Ok(WeightMode::Identity),
            other => Err(Error::Config(format!("unknown weight mode `{other}`"))),
        }
    }
}

/// Optimal weight for step `k`:
/// `W1 = Q_{k-1}`, `W2 = G_k Q_{w_{k-1}} Ψ_kᵀ`, `W3 = Ψ_k Q_{w_{k-1}} Ψ_kᵀ`.
pub fn optimal_weight(sys: &SystemModel, k: usize) -> Result<WeightBlocks> {
    let psi = sys.stacked_psi(k)?;
    let qw = sys.noise_cover_slice(k)?;
    let n = sys.dim();
    let q_psi_t = &qw * psi.transpose();
    let w2 = q_psi_t.rows(0, n).into_owned();
    let w3 = symmetrize(&(&psi * &q_psi_t));
    let w1 = qw.view((0, 0), (n, n)).into_owned();
    Ok(WeightBlocks { w1, w2, w3 })
}

fn check_dims(sys: &SystemModel, dc: &DestinationConstraint, w: &WeightBlocks) -> Result<()> {
    if dc.state_dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "constraint columns",
            expected: sys.dim(),
            found: dc.state_dim(),
        });
    }
    if w.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "weight blocks",
            expected: sys.dim(),
            found: w.dim(),
        });
    }
    Ok(())
}

/// Constraint gain `B = W2 Dᵀ (D W3 Dᵀ)⁻¹ D`.
pub fn constraint_gain(w: &WeightBlocks, dc: &DestinationConstraint) -> Result<DMatrix<f64>> {
    let d = dc.matrix();
    let inner = symmetrize(&(d * &w.w3 * d.transpose()));
    let chol = inner.cholesky().ok_or(Error::Singular("D W3 Dᵀ"))?;
    Ok(&w.w2 * d.transpose() * chol.solve(d))
}

/// `H_k = G_k - B Ψ_k`, mapping `(w_{k-1}, …, w_{N-1})` to the injected noise `η_k`.
pub fn noise_map(sys: &SystemModel, dc: &DestinationConstraint, w: &WeightBlocks, k: usize) -> Result<DMatrix<f64>> {
    check_dims(sys, dc, w)?;
    let gain = constraint_gain(w, dc)?;
    let mut h = -gain * sys.stacked_psi(k)?;
    let n = sys.dim();
    for i in 0..n {
        h[(i, i)] += 1.0;
    }
    Ok(h)
}

/// Shape of the ellipsoid covering `η_k`: `H_k Q_{w_{k-1}} H_kᵀ`.
pub fn process_noise_shape(
    sys: &SystemModel,
    dc: &DestinationConstraint,
    w: &WeightBlocks,
    k: usize,
) -> Result<DMatrix<f64>> {
    let h = noise_map(sys, dc, w, k)?;
    let qw = sys.noise_cover_slice(k)?;
    Ok(symmetrize(&(&h * qw * h.transpose())))
}

/// Terminal-step requirement `D (W2 - W3) Dᵀ = 0`, which makes the step-`N`
/// model land exactly on the constraint.
pub fn terminal_condition_check(w: &WeightBlocks, dc: &DestinationConstraint) -> bool {
    let d = dc.matrix();
    let lhs = d * (&w.w2 - &w.w3) * d.transpose();
    let scale = 1.0 + (d * &w.w3 * d.transpose()).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    lhs.iter().all(|v| v.abs() <= RESIDUAL_TOL * scale)
}

/// Random positive definite `2n × 2n` weight `GᵀG + εI`, with `ε` chosen so the
/// condition number stays below [`COMPETITOR_MAX_CONDITION`].
pub fn random_feasible_weight<R: Rng + ?Sized>(rng: &mut R, n: usize) -> WeightBlocks {
    let g = DMatrix::<f64>::from_fn(2 * n, 2 * n, |_, _| StandardNormal.sample(rng));
    let mut w = g.transpose() * g;
    let (_, hi) = eigen_range(&w);
    let eps = hi.max(1.0) / (COMPETITOR_MAX_CONDITION - 1.0);
    for i in 0..2 * n {
        w[(i, i)] += eps;
    }
    let w = symmetrize(&w);
    WeightBlocks {
        w1: w.view((0, 0), (n, n)).into_owned(),
        w2: w.view((0, n), (n, n)).into_owned(),
        w3: w.view((n, n), (n, n)).into_owned(),
    }
}
