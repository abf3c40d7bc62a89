//! Ellipsoids `{x : (x - c)ᵀ P⁻¹ (x - c) ≤ 1}` and the matrix predicates built on them.
//!
//! Shape matrices are only required to be positive *semi*definite. A singular
//! shape describes a flat ellipsoid living in the range of `P`; membership then
//! uses the pseudoinverse quadratic form plus a range test, and sampling draws
//! inside the range subspace.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `|P - Pᵀ|` entries.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Default relative eigenvalue tolerance for PSD and Loewner tests.
pub const EIGEN_TOL: f64 = 1e-8;

/// `(P + Pᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Rejects matrices whose asymmetry exceeds `SYMMETRY_TOL` relative to their largest entry.
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "square matrix",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let deviation = max_abs(&(m - m.transpose()));
    if deviation > SYMMETRY_TOL * (1.0 + max_abs(m)) {
        return Err(Error::Asymmetric { deviation });
    }
    Ok(())
}

/// Smallest and largest eigenvalue of the symmetric part of `m`.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Largest absolute eigenvalue of the symmetric part of `m`.
pub fn spectral_scale(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = eigen_range(m);
    lo.abs().max(hi.abs())
}

/// Checks `P ⪰ 0` within `tol` relative to the largest eigenvalue.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    check_symmetric(m)?;
    let (lo, hi) = eigen_range(m);
    if lo < -tol * (1.0 + hi.abs()) {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lo });
    }
    Ok(())
}

/// Relative Loewner margin `λ_min(B - A) / (1 + max |λ(B)|)`.
///
/// `A ⪯ B` within `tol` exactly when the margin is `≥ -tol`.
pub fn loewner_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "loewner comparison",
            expected: b.nrows(),
            found: a.nrows(),
        });
    }
    check_symmetric(a)?;
    check_symmetric(b)?;
    let (lo, _) = eigen_range(&(b - a));
    Ok(lo / (1.0 + spectral_scale(b)))
}

/// `A ⪯ B` in the Loewner order, i.e. `B - A ⪰ 0` up to `tol · (1 + max |λ(B)|)`.
pub fn loewner_leq(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(loewner_margin(a, b)? >= -tol)
}

/// Lower-triangular `L` with `L Lᵀ = P` for symmetric PSD `P`.
///
/// Zero pivots (within `1e-10` of the largest diagonal entry) leave an
/// all-zero column, so rank-deficient shapes factor without pivoting and the
/// result stays lower triangular.
pub fn factorize(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(p)?;
    let n = p.nrows();
    let p = symmetrize(p);
    let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(p[(i, i)]));
    let zero_tol = 1e-10 * max_diag;
    let neg_tol = EIGEN_TOL * max_diag;
    // off-diagonal residual allowed next to a zero pivot
    let coupling_tol = (zero_tol * max_diag).sqrt() * 1e3;

    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = p[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag > zero_tol {
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = p[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        } else if diag < -neg_tol {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: diag });
        } else {
            for i in (j + 1)..n {
                let mut s = p[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > coupling_tol {
                    return Err(Error::NotPositiveSemidefinite { min_eigenvalue: diag });
                }
            }
        }
    }
    Ok(l)
}

/// How a sample is placed along its random direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialMode {
    /// Uniform over the solid ellipsoid (radius `u^{1/r}`).
    UniformBall,
    /// On the boundary surface (radius 1).
    Boundary,
}

impl fmt::Display for RadialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RadialMode::UniformBall => "uniform_ball",
            RadialMode::Boundary => "boundary",
        })
    }
}

impl FromStr for RadialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_ball" => Ok(RadialMode::UniformBall),
            "boundary" => Ok(RadialMode::Boundary),
            other => Err(Error::Config(format!("unknown radial mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    /// Validates symmetry and positive semidefiniteness; the stored shape is symmetrized.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        if shape.nrows() != center.len() || shape.ncols() != center.len() {
            return Err(Error::DimensionMismatch {
                context: "ellipsoid shape",
                expected: center.len(),
                found: shape.nrows(),
            });
        }
        check_psd(&shape, EIGEN_TOL)?;
        Ok(Self {
            center,
            shape: symmetrize(&shape),
        })
    }

    /// Ellipsoid centered at the origin.
    pub fn centered(shape: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::zeros(shape.nrows()), shape)
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self {
            center: DVector::zeros(dim),
            shape: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// True when the shape is singular (relative to its largest eigenvalue).
    pub fn is_degenerate(&self) -> bool {
        let (lo, hi) = eigen_range(&self.shape);
        lo <= 1e-10 * hi.abs().max(f64::MIN_POSITIVE)
    }

    /// Image `U E + b`: center `U c + b`, shape `U P Uᵀ`.
    pub fn affine_map(&self, u: &DMatrix<f64>, b: &DVector<f64>) -> Result<Ellipsoid> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "affine map columns",
                expected: self.dim(),
                found: u.ncols(),
            });
        }
        if b.len() != u.nrows() {
            return Err(Error::DimensionMismatch {
                context: "affine map offset",
                expected: u.nrows(),
                found: b.len(),
            });
        }
        Ok(Ellipsoid {
            center: u * &self.center + b,
            shape: symmetrize(&(u * &self.shape * u.transpose())),
        })
    }

    /// Membership `(x - c)ᵀ P⁺ (x - c) ≤ 1 + tol`, with a range test for singular shapes.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "membership point",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let y = x - &self.center;
        if let Some(chol) = self.shape.clone().cholesky() {
            let q = y.dot(&chol.solve(&y));
            return Ok(q <= 1.0 + tol);
        }

        let eig = self.shape.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
        let null_tol = 1e-10 * lmax;
        let range_tol = tol * (1.0 + lmax.sqrt());
        let mut q = 0.0;
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let z = eig.eigenvectors.column(i).dot(&y);
            if lambda > null_tol {
                q += z * z / lambda;
            } else if z.abs() > range_tol {
                return Ok(false);
            }
        }
        Ok(q <= 1.0 + tol)
    }

    /// One random point of the ellipsoid.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, mode: RadialMode) -> Result<DVector<f64>> {
        Ok(EllipsoidSampler::new(self)?.sample(rng, mode))
    }
}

/// Caches the shape factor for repeated draws from one ellipsoid.
#[derive(Debug, Clone)]
pub struct EllipsoidSampler {
    center: DVector<f64>,
    factor: DMatrix<f64>,
    active: Vec<usize>,
}

impl EllipsoidSampler {
    pub fn new(e: &Ellipsoid) -> Result<Self> {
        let factor = factorize(e.shape())?;
        let active = (0..factor.ncols()).filter(|&j| factor[(j, j)] > 0.0).collect();
        Ok(Self {
            center: e.center().clone(),
            factor,
            active,
        })
    }

    /// Rank of the shape matrix as seen by the factorization.
    pub fn rank(&self) -> usize {
        self.active.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, mode: RadialMode) -> DVector<f64> {
        let r = self.active.len();
        if r == 0 {
            return self.center.clone();
        }
        // the non-zero columns of a lower-triangular factor are independent,
        // so a unit vector on them maps onto the boundary exactly
        let mut dir: Vec<f64> = loop {
            let v: Vec<f64> = (0..r).map(|_| StandardNormal.sample(rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        };
        if mode == RadialMode::UniformBall {
            let u: f64 = rng.random();
            let radius = u.powf(1.0 / r as f64);
            dir.iter_mut().for_each(|a| *a *= radius);
        }
        let mut coeffs = DVector::zeros(self.factor.ncols());
        for (&j, a) in self.active.iter().zip(dir) {
            coeffs[j] = a;
        }
        &self.center + &self.factor * coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        g.transpose() * &g + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn identity_map_is_noop() {
        let e = Ellipsoid::new(DVector::from_vec(vec![1.0, -2.0]), DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let m = e.affine_map(&DMatrix::identity(2, 2), &DVector::zeros(2)).unwrap();
        assert_eq!(m, e);
    }

    #[test]
    fn diagonal_map_scales_unit_disk() {
        let e = Ellipsoid::unit_ball(2);
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        let m = e.affine_map(&u, &DVector::zeros(2)).unwrap();
        assert_eq!(m.center(), &DVector::zeros(2));
        assert_eq!(m.shape(), &DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0])));
    }

    #[test]
    fn affine_map_rejects_bad_dimensions() {
        let e = Ellipsoid::unit_ball(2);
        assert!(e.affine_map(&DMatrix::identity(3, 3), &DVector::zeros(3)).is_err());
        assert!(e.affine_map(&DMatrix::identity(2, 2), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn membership_cases() {
        let e = Ellipsoid::unit_ball(2);
        assert!(e.contains(&DVector::zeros(2), 1e-9).unwrap());
        assert!(!e.contains(&DVector::from_vec(vec![1.000001, 0.0]), 1e-9).unwrap());
        let flat = Ellipsoid::centered(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).unwrap();
        assert!(flat.is_degenerate());
        assert!(!flat.contains(&DVector::from_vec(vec![0.5, 0.1]), 1e-9).unwrap());
        assert!(flat.contains(&DVector::from_vec(vec![0.5, 0.0]), 1e-9).unwrap());
        assert!(!flat.contains(&DVector::from_vec(vec![1.5, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn rejects_indefinite_shape() {
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(Ellipsoid::centered(bad.clone()), Err(Error::NotPositiveSemidefinite { .. })));
        assert!(factorize(&bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]);
        assert!(matches!(factorize(&asym), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn factorize_known_cases() {
        assert_eq!(factorize(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
        let l = factorize(&DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]))).unwrap();
        assert_eq!(l, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
    }

    #[test]
    fn factorize_random_spd_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_spd(&mut rng, 4);
        let l = factorize(&p).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
        let err = (&l * l.transpose() - &p).norm() / p.norm();
        assert!(err <= 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn factorize_rank_deficient() {
        let v = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, -1.0, 3.0, 0.5, 0.5]);
        let p = &v * v.transpose();
        let l = factorize(&p).unwrap();
        let err = (&l * l.transpose() - &p).norm() / p.norm();
        assert!(err <= 1e-10, "reconstruction error {err}");
        let sampler = EllipsoidSampler::new(&Ellipsoid::centered(p).unwrap()).unwrap();
        assert_eq!(sampler.rank(), 2);
    }

    #[test]
    fn loewner_cases() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!(loewner_leq(&i2, &(&i2 * 2.0), 0.0).unwrap());
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert!(!loewner_leq(&a, &b, EIGEN_TOL).unwrap());
        assert!(loewner_leq(&a, &a, 0.0).unwrap());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]);
        assert!(loewner_leq(&asym, &i2, EIGEN_TOL).is_err());
    }

    #[test]
    fn samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = Ellipsoid::unit_ball(2);
        for _ in 0..200 {
            let p = e.sample_point(&mut rng, RadialMode::UniformBall).unwrap();
            assert!(p.norm() <= 1.0);
            let q = e.sample_point(&mut rng, RadialMode::Boundary).unwrap();
            assert_relative_eq!(q.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_samples_on_flat_ellipsoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat = Ellipsoid::new(
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0, 1.0])),
        )
        .unwrap();
        for _ in 0..50 {
            let p = flat.sample_point(&mut rng, RadialMode::Boundary).unwrap();
            assert_eq!(p[1], 1.0);
            let q = (p[0] - 1.0).powi(2) / 4.0 + (p[2] - 1.0).powi(2);
            assert_relative_eq!(q, 1.0, epsilon = 1e-9);
            assert!(flat.contains(&p, 1e-9).unwrap());
        }
    }

    #[test]
    fn uniform_radial_statistics() {
        // area ratio of the radius-0.5 disk inside the unit disk is 0.25
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let sampler = EllipsoidSampler::new(&Ellipsoid::unit_ball(2)).unwrap();
        let inner = (0..10_000)
            .filter(|_| sampler.sample(&mut rng, RadialMode::UniformBall).norm() <= 0.5)
            .count();
        let frac = inner as f64 / 10_000.0;
        assert!((frac - 0.25).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn radial_mode_parses() {
        assert_eq!("boundary".parse::<RadialMode>().unwrap(), RadialMode::Boundary);
        assert_eq!(RadialMode::UniformBall.to_string(), "uniform_ball");
        assert!("gaussian".parse::<RadialMode>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spd(n: usize, seed: u64) -> DMatrix<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_spd(&mut rng, n)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn factorize_roundtrip(n in 1usize..=32, seed in any::<u64>()) {
                let p = spd(n, seed);
                let l = factorize(&p).unwrap();
                let err = (&l * l.transpose() - &p).norm() / p.norm();
                prop_assert!(err <= 1e-10);
            }

            #[test]
            fn affine_maps_compose(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let e = Ellipsoid::new(
                    DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng)),
                    random_spd(&mut rng, 3),
                ).unwrap();
                let u1 = DMatrix::from_fn(4, 3, |_, _| StandardNormal.sample(&mut rng));
                let u2 = DMatrix::from_fn(2, 4, |_, _| StandardNormal.sample(&mut rng));
                let b1 = DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
                let b2 = DVector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
                let two_step = e.affine_map(&u1, &b1).unwrap().affine_map(&u2, &b2).unwrap();
                let direct = e.affine_map(&(&u2 * &u1), &(&u2 * &b1 + &b2)).unwrap();
                let dc = (two_step.center() - direct.center()).norm() / (1.0 + direct.center().norm());
                let ds = (two_step.shape() - direct.shape()).norm() / (1.0 + direct.shape().norm());
                prop_assert!(dc <= 1e-10 && ds <= 1e-10);
            }

            #[test]
            fn samples_are_members(seed in any::<u64>(), boundary in any::<bool>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let e = Ellipsoid::new(
                    DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng)),
                    random_spd(&mut rng, 4),
                ).unwrap();
                let mode = if boundary { RadialMode::Boundary } else { RadialMode::UniformBall };
                let p = e.sample_point(&mut rng, mode).unwrap();
                prop_assert!(e.contains(&p, 1e-9).unwrap());
            }

            #[test]
            fn loewner_reflexive(seed in any::<u64>(), n in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
                let a = symmetrize(&g);
                prop_assert!(loewner_leq(&a, &a, 0.0).unwrap());
            }
        }
    }
}
