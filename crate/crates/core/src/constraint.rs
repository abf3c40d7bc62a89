//! Linear destination constraints `D x_N = d` and the weighted projection that
//! enforces them on the combined state `[x_k; x_N]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for rank decisions.
const RANK_TOL: f64 = 1e-12;

fn row_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    sv.iter().filter(|&&s| s > RANK_TOL * smax.max(f64::MIN_POSITIVE)).count()
}

/// Right inverse `Aᵀ (A Aᵀ)⁻¹` of a full-row-rank matrix.
pub fn pseudoinverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rank = row_rank(a);
    if rank < a.nrows() {
        return Err(Error::RankDeficient { rows: a.nrows(), rank });
    }
    let gram = a * a.transpose();
    let chol = gram.cholesky().ok_or(Error::Singular("A Aᵀ"))?;
    Ok(chol.solve(a).transpose())
}

/// Terminal constraint `D x_N = d` with `D` of full row rank.
#[derive(Debug, Clone, PartialEq)]
pub struct DestinationConstraint {
    matrix: DMatrix<f64>,
    target: DVector<f64>,
}

impl DestinationConstraint {
    pub fn new(matrix: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != target.len() {
            return Err(Error::DimensionMismatch {
                context: "constraint right-hand side",
                expected: matrix.nrows(),
                found: target.len(),
            });
        }
        if matrix.nrows() > matrix.ncols() {
            return Err(Error::RankDeficient {
                rows: matrix.nrows(),
                rank: matrix.ncols(),
            });
        }
        let rank = row_rank(&matrix);
        if rank < matrix.nrows() {
            return Err(Error::RankDeficient {
                rows: matrix.nrows(),
                rank,
            });
        }
        Ok(Self { matrix, target })
    }

    /// Pins every component of the terminal state.
    pub fn full_state(target: DVector<f64>) -> Self {
        let n = target.len();
        Self {
            matrix: DMatrix::identity(n, n),
            target,
        }
    }

    /// `D`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `d`.
    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// Number of constraint rows `m`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.matrix.is_square()
    }

    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        pseudoinverse(&self.matrix).expect("rank checked at construction")
    }

    /// `D x - d`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x - &self.target
    }

    pub fn block(&self) -> BlockConstraint {
        BlockConstraint::new(&self.matrix)
    }
}

/// `[0  D]`, acting on the combined state `[x_k; x_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockConstraint {
    matrix: DMatrix<f64>,
}

impl BlockConstraint {
    pub fn new(d: &DMatrix<f64>) -> Self {
        let (m, n) = d.shape();
        let mut matrix = DMatrix::zeros(m, 2 * n);
        matrix.view_mut((0, n), (m, n)).copy_from(d);
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn combined_dim(&self) -> usize {
        self.matrix.ncols()
    }
}

fn weighted_gain(w: &DMatrix<f64>, bc: &BlockConstraint) -> Result<DMatrix<f64>> {
    let dm = bc.matrix();
    if w.nrows() != dm.ncols() || w.ncols() != dm.ncols() {
        return Err(Error::DimensionMismatch {
            context: "weight matrix",
            expected: dm.ncols(),
            found: w.nrows(),
        });
    }
    let inner = dm * w * dm.transpose();
    let inner_inv = inner
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular("D W Dᵀ"))?;
    Ok(w * dm.transpose() * inner_inv)
}

/// Oblique projector `A = I - W Dᵀ (D W Dᵀ)⁻¹ D` onto the null space of the block constraint.
pub fn projector_a(w: &DMatrix<f64>, bc: &BlockConstraint) -> Result<DMatrix<f64>> {
    if w.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("projection weight"));
    }
    let gain = weighted_gain(w, bc)?;
    let n = bc.combined_dim();
    Ok(DMatrix::identity(n, n) - gain * bc.matrix())
}

/// Closed-form minimizer of `‖y - x‖²_W` subject to `D y = d`:
/// `x - W Dᵀ (D W Dᵀ)⁻¹ (D x - d)`.
pub fn weighted_projection(
    w: &DMatrix<f64>,
    bc: &BlockConstraint,
    d: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x.len() != bc.combined_dim() {
        return Err(Error::DimensionMismatch {
            context: "combined state",
            expected: bc.combined_dim(),
            found: x.len(),
        });
    }
    let gain = weighted_gain(w, bc)?;
    Ok(x - gain * (bc.matrix() * x - d))
}

/// `A x + (I - A) D† d` for a projector `A` from [`projector_a`].
pub fn decompose(a: &DMatrix<f64>, bc: &BlockConstraint, d: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let pinv = pseudoinverse(bc.matrix())?;
    let n = a.nrows();
    Ok(a * x + (DMatrix::identity(n, n) - a) * (pinv * d))
}

/// Arrival constraint for the CV state `(x, ẋ, y, ẏ)`: position equals
/// `(dest_x, dest_y)` and the velocity satisfies `ẋ sin θ - ẏ cos θ = 0`.
pub fn heading_constraint(dest_x: f64, dest_y: f64, theta: f64) -> DestinationConstraint {
    let (s, c) = theta.sin_cos();
    let matrix = DMatrix::from_row_slice(
        3,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, s, 0.0, -c,
        ],
    );
    DestinationConstraint {
        matrix,
        target: DVector::from_vec(vec![dest_x, dest_y, 0.0]),
    }
}
