//! The destination-constrained state model and trajectory rollouts.
//!
//! Step `k` of the constrained model reads
//!
//! ```text
//! x_k = F̄ x_{k-1} + d̄ + Ξ w_{k-1} + Σ_{j=k}^{N-1} Φ_j w_j
//! ```
//!
//! with `B = W2 Dᵀ (D W3 Dᵀ)⁻¹ D`, `Ξ = I - B Ψ_{k,N}`, `F̄ = Ξ F_{k-1}`,
//! `d̄ = B D† d` and `Φ_j = -B Ψ_{j+1,N}`. The update references noise that has
//! not happened yet, so a whole stacked draw `w_0 = (w_0, …, w_{N-1})` is taken
//! up front and every step reads its slices.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::constraint::DestinationConstraint;
use crate::dynamics::SystemModel;
use crate::ellipsoid::{Ellipsoid, EllipsoidSampler, RadialMode};
use crate::error::{Error, Result};
use crate::weights::{constraint_gain, WeightBlocks, WeightMode};

/// Coefficients of one constrained update.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedStep {
    /// Step index `k` (the update produces `x_k`).
    pub k: usize,
    pub fbar: DMatrix<f64>,
    pub dbar: DVector<f64>,
    pub xi: DMatrix<f64>,
    /// `Φ_j` for `j = k..N-1`, in order.
    pub phis: Vec<DMatrix<f64>>,
    pub gain: DMatrix<f64>,
}

/// Coefficients of step `k` under weight `w`.
pub fn build_step(sys: &SystemModel, dc: &DestinationConstraint, w: &WeightBlocks, k: usize) -> Result<ReconstructedStep> {
    if k == 0 || k > sys.horizon() {
        return Err(Error::OutOfRange {
            what: "step",
            index: k,
            lo: 1,
            hi: sys.horizon(),
        });
    }
    if dc.state_dim() != sys.dim() || w.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "constraint or weight dimension",
            expected: sys.dim(),
            found: if dc.state_dim() != sys.dim() { dc.state_dim() } else { w.dim() },
        });
    }
    let n = sys.dim();
    let gain = constraint_gain(w, dc)?;
    let xi = DMatrix::identity(n, n) - &gain * sys.to_horizon(k);
    let fbar = &xi * sys.transition(k - 1);
    let dbar = &gain * (dc.pseudoinverse() * dc.target());
    let phis = (k..sys.horizon()).map(|j| -&gain * sys.to_horizon(j + 1)).collect();
    Ok(ReconstructedStep {
        k,
        fbar,
        dbar,
        xi,
        phis,
        gain,
    })
}

/// One stacked noise vector `(w_0, …, w_{N-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    dim: usize,
    w0: DVector<f64>,
}

impl NoiseDraw {
    pub fn new(sys: &SystemModel, w0: DVector<f64>) -> Result<Self> {
        let expected = sys.dim() * sys.horizon();
        if w0.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "stacked noise vector",
                expected,
                found: w0.len(),
            });
        }
        Ok(Self { dim: sys.dim(), w0 })
    }

    /// The nominal, noise-free draw.
    pub fn zeros(sys: &SystemModel) -> Self {
        Self {
            dim: sys.dim(),
            w0: DVector::zeros(sys.dim() * sys.horizon()),
        }
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.w0
    }

    /// `w_j`.
    pub fn noise(&self, j: usize) -> DVectorView<'_, f64> {
        self.w0.rows(j * self.dim, self.dim)
    }

    pub fn noises(&self) -> Vec<DVector<f64>> {
        (0..self.w0.len() / self.dim).map(|j| self.noise(j).into_owned()).collect()
    }

    /// Membership in the noise ellipsoid `(0, Q_{w0})`.
    pub fn is_within(&self, sys: &SystemModel, tol: f64) -> Result<bool> {
        Ellipsoid::centered(sys.stacked_noise_shape().clone())?.contains(&self.w0, tol)
    }
}

/// Draws stacked noise vectors from `(0, Q_{w0})`, factoring the shape once.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    dim: usize,
    sampler: EllipsoidSampler,
}

impl NoiseSampler {
    pub fn new(sys: &SystemModel) -> Result<Self> {
        let e = Ellipsoid::centered(sys.stacked_noise_shape().clone())?;
        Ok(Self {
            dim: sys.dim(),
            sampler: EllipsoidSampler::new(&e)?,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, mode: RadialMode) -> NoiseDraw {
        NoiseDraw {
            dim: self.dim,
            w0: self.sampler.sample(rng, mode),
        }
    }
}

/// One stacked noise draw from `(0, Q_{w0})`.
pub fn draw_noise<R: Rng + ?Sized>(sys: &SystemModel, rng: &mut R, mode: RadialMode) -> Result<NoiseDraw> {
    Ok(NoiseSampler::new(sys)?.draw(rng, mode))
}

/// Independent random stream for one trajectory of a seeded batch.
pub fn trajectory_rng(seed: u64, trajectory_id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trajectory_id);
    rng
}

/// Noise term `Ξ w_{k-1} + Σ_j Φ_j w_j` of one step.
pub fn injected_noise(rs: &ReconstructedStep, draw: &NoiseDraw) -> DVector<f64> {
    let mut eta = &rs.xi * draw.noise(rs.k - 1);
    for (offset, phi) in rs.phis.iter().enumerate() {
        eta += phi * draw.noise(rs.k + offset);
    }
    eta
}

/// `x_k` from `x_{k-1}` under the constrained update.
pub fn step(x_prev: &DVector<f64>, rs: &ReconstructedStep, draw: &NoiseDraw) -> DVector<f64> {
    &rs.fbar * x_prev + &rs.dbar + injected_noise(rs, draw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Constrained,
    Relaxed,
}

impl TrajectoryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryKind::Constrained => "constrained",
            TrajectoryKind::Relaxed => "relaxed",
        }
    }
}

/// States `x_0, …, x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn terminal(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds at least x_0")
    }

    /// Componentwise check `|D x_N - d| ≤ tol · (1 + |d|)`.
    pub fn meets_destination(&self, dc: &DestinationConstraint, tol: f64) -> bool {
        let r = dc.residual(self.terminal());
        r.iter().zip(dc.target().iter()).all(|(ri, di)| ri.abs() <= tol * (1.0 + di.abs()))
    }
}

/// Step coefficients for a whole horizon, reusable across noise draws.
#[derive(Debug, Clone)]
pub struct ReconstructedModel {
    steps: Vec<ReconstructedStep>,
}

impl ReconstructedModel {
    pub fn build(sys: &SystemModel, dc: &DestinationConstraint, mode: &WeightMode) -> Result<Self> {
        let steps = (1..=sys.horizon())
            .map(|k| build_step(sys, dc, &mode.weights_at(sys, k)?, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[ReconstructedStep] {
        &self.steps
    }

    pub fn rollout(&self, x0: &DVector<f64>, draw: &NoiseDraw) -> Result<Trajectory> {
        let n = self.steps[0].fbar.nrows();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                context: "initial state",
                expected: n,
                found: x0.len(),
            });
        }
        if draw.w0.len() != n * self.steps.len() {
            return Err(Error::DimensionMismatch {
                context: "stacked noise vector",
                expected: n * self.steps.len(),
                found: draw.w0.len(),
            });
        }
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        states.push(x0.clone());
        for rs in &self.steps {
            let next = step(states.last().unwrap(), rs, draw);
            states.push(next);
        }
        Ok(Trajectory {
            states,
            kind: TrajectoryKind::Constrained,
        })
    }
}

/// Constrained trajectory from `x0` under one noise draw.
pub fn rollout(
    sys: &SystemModel,
    dc: &DestinationConstraint,
    mode: &WeightMode,
    x0: &DVector<f64>,
    draw: &NoiseDraw,
) -> Result<Trajectory> {
    ReconstructedModel::build(sys, dc, mode)?.rollout(x0, draw)
}

/// Plain iteration `x_k = F_{k-1} x_{k-1} + w_{k-1}`.
pub fn rollout_unconstrained(sys: &SystemModel, x0: &DVector<f64>, draw: &NoiseDraw) -> Result<Trajectory> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: sys.dim(),
            found: x0.len(),
        });
    }
    let mut states = Vec::with_capacity(sys.horizon() + 1);
    states.push(x0.clone());
    for k in 0..sys.horizon() {
        let next = sys.transition(k) * &states[k] + draw.noise(k);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        kind: TrajectoryKind::Relaxed,
    })
}
