//! Independent checks of the projection identity, weight optimality, noise-cover
//! dominance and monotone shrinkage, reported as graded margins.
//!
//! Every margin is normalized so that `pass` is exactly "all margins `≥ -tol`".
//! Loewner margins come from [`loewner_margin`]; equality residuals enter as
//! `-relative residual`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::{weighted_projection, BlockConstraint, DestinationConstraint};
use crate::dynamics::SystemModel;
use crate::ellipsoid::{loewner_margin, symmetrize};
use crate::error::{Error, Result};
use crate::weights::{optimal_weight, process_noise_shape, random_feasible_weight, WeightBlocks, WeightMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proposition: String,
    pub scenario: String,
    pub tolerance: f64,
    pub margins: Vec<f64>,
    /// What each margin measures, aligned with `margins`.
    pub labels: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(proposition: &str, scenario: impl Into<String>, tolerance: f64, entries: Vec<(String, f64)>) -> Self {
        let (labels, margins): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let pass = margins.iter().all(|m| *m >= -tolerance);
        Self {
            proposition: proposition.to_string(),
            scenario: scenario.into(),
            tolerance,
            margins,
            labels,
            pass,
        }
    }

    /// Smallest margin, or `+∞` for an empty report.
    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Minimizer of `(y - x)ᵀ W⁻¹ (y - x)` subject to `D y = d`, from the KKT system
/// `[[W⁻¹, Dᵀ], [D, 0]] (y, λ) = (W⁻¹ x, d)`.
pub fn qp_oracle(w: &DMatrix<f64>, bc: &BlockConstraint, d: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let dm = bc.matrix();
    let n = dm.ncols();
    let m = dm.nrows();
    if w.shape() != (n, n) || x.len() != n || d.len() != m {
        return Err(Error::DimensionMismatch {
            context: "quadratic program",
            expected: n,
            found: if w.nrows() != n { w.nrows() } else { x.len() },
        });
    }
    let w_inv = w
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("projection weight"))?
        .inverse();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&w_inv);
    kkt.view_mut((0, n), (n, m)).copy_from(&dm.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(dm);
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(&w_inv * x));
    rhs.rows_mut(n, m).copy_from(d);
    let sol = kkt.lu().solve(&rhs).ok_or(Error::Singular("KKT system"))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("KKT system"));
    }
    Ok(sol.rows(0, n).into_owned())
}

fn random_full_rank<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> DestinationConstraint {
    loop {
        let d = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
        let target = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        if let Ok(dc) = DestinationConstraint::new(d, target) {
            return dc;
        }
    }
}

/// Closed-form weighted projection against the KKT oracle on random instances
/// with state dimension `n` and `m` constraint rows.
pub fn check_prop1<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, instances: usize, tol: f64) -> Result<VerificationReport> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    let mut entries = Vec::with_capacity(instances);
    for i in 0..instances {
        let w = random_feasible_weight(rng, n).full();
        let dc = random_full_rank(rng, m, n);
        let bc = dc.block();
        let x = DVector::from_fn(2 * n, |_, _| StandardNormal.sample(rng));
        let closed = weighted_projection(&w, &bc, dc.target(), &x)?;
        let oracle = qp_oracle(&w, &bc, dc.target(), &x)?;
        let rel = (&closed - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE);
        entries.push((format!("instance {i}"), -rel));
    }
    Ok(VerificationReport::new(
        "1",
        format!("closed form vs KKT, n = {n}, m = {m}, {instances} random instances"),
        tol,
        entries,
    ))
}

/// `Q_{η_k}(W*) ⪯ Q_{k-1}` for every step.
pub fn check_prop3(sys: &SystemModel, dc: &DestinationConstraint, tol: f64) -> Result<VerificationReport> {
    let entries = (1..=sys.horizon())
        .into_par_iter()
        .map(|k| {
            let cover = process_noise_shape(sys, dc, &optimal_weight(sys, k)?, k)?;
            let margin = loewner_margin(&cover, &sys.step_noise_shape(k - 1))?;
            Ok((format!("k = {k}"), margin))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::new(
        "3",
        format!("optimal cover vs per-step noise, n = {}, N = {}", sys.dim(), sys.horizon()),
        tol,
        entries,
    ))
}

/// Entrywise check of `Q_{η_k}(W*) = Q_{k-1} - W2 Dᵀ (D W3 Dᵀ)⁻¹ D W2ᵀ`, relative to
/// `1 + max |Q_{k-1}|`. Returns one residual per step.
pub fn schur_gap_residuals(sys: &SystemModel, dc: &DestinationConstraint) -> Result<Vec<f64>> {
    let d = dc.matrix();
    (1..=sys.horizon())
        .into_par_iter()
        .map(|k| {
            let w = optimal_weight(sys, k)?;
            let cover = process_noise_shape(sys, dc, &w, k)?;
            let inner = d * &w.w3 * d.transpose();
            let inner_inv = inner.try_inverse().ok_or(Error::Singular("D W3 Dᵀ"))?;
            let dw2 = d * w.w2.transpose();
            let schur = &w.w1 - dw2.transpose() * inner_inv * dw2;
            Ok(max_abs(&(&cover - &schur)) / (1.0 + max_abs(&w.w1)))
        })
        .collect()
}

/// [`schur_gap_residuals`] as a report.
pub fn check_schur_gap(sys: &SystemModel, dc: &DestinationConstraint, tol: f64) -> Result<VerificationReport> {
    let entries = schur_gap_residuals(sys, dc)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| (format!("k = {}", i + 1), -r))
        .collect();
    Ok(VerificationReport::new(
        "3",
        format!("Schur-gap identity of the optimal cover, n = {}, N = {}", sys.dim(), sys.horizon()),
        tol,
        entries,
    ))
}

/// Optimal cover of a time-invariant system with invertible constraint matrix:
/// `Q - Q (F^{N-k})ᵀ (Σ_{i=k}^{N} F^{N-i} Q (F^{N-i})ᵀ)⁻¹ F^{N-k} Q`.
pub fn time_invariant_cover(f: &DMatrix<f64>, q: &DMatrix<f64>, horizon: usize, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 || k > horizon {
        return Err(Error::OutOfRange {
            what: "step",
            index: k,
            lo: 1,
            hi: horizon,
        });
    }
    let n = f.nrows();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut sum = &power * q * power.transpose();
    for _ in k..horizon {
        power = f * power;
        sum += &power * q * power.transpose();
    }
    let lead = power;
    let sum_inv = symmetrize(&sum).cholesky().ok_or(Error::Singular("accumulated noise shape"))?.inverse();
    let cross = q * lead.transpose();
    Ok(symmetrize(&(q - &cross * sum_inv * cross.transpose())))
}

/// Monotone shrinkage `Q_{η_{k+1}} ⪯ Q_{η_k}` for a time-invariant system with
/// `Q_{w0} = diag(Q, …, Q)` and square invertible `D`, plus the closed form of
/// [`time_invariant_cover`] and the vanishing terminal cover.
pub fn check_prop4(
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
    d: &DMatrix<f64>,
    horizon: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if !d.is_square() || d.nrows() != f.nrows() {
        return Err(Error::Precondition(format!(
            "monotone shrinkage needs a square invertible constraint matrix; got {}x{} for state dimension {}",
            d.nrows(),
            d.ncols(),
            f.nrows()
        )));
    }
    let dc = DestinationConstraint::new(d.clone(), DVector::zeros(d.nrows())).map_err(|_| {
        Error::Precondition("monotone shrinkage needs an invertible constraint matrix; D is singular".into())
    })?;
    let sys = SystemModel::time_invariant(f.clone(), q.clone(), horizon)?;
    let covers = (1..=horizon)
        .into_par_iter()
        .map(|k| process_noise_shape(&sys, &dc, &optimal_weight(&sys, k)?, k))
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::new();
    for k in 1..horizon {
        entries.push((format!("monotone k = {k}"), loewner_margin(&covers[k], &covers[k - 1])?));
    }
    for k in 1..=horizon {
        let closed = time_invariant_cover(f, q, horizon, k)?;
        let rel = max_abs(&(&covers[k - 1] - &closed)) / (1.0 + max_abs(q));
        entries.push((format!("closed form k = {k}"), -rel));
    }
    let terminal = max_abs(&covers[horizon - 1]) / (1.0 + max_abs(q));
    entries.push(("terminal cover".to_string(), -terminal));
    Ok(VerificationReport::new(
        "4",
        format!("time-invariant system, n = {}, N = {horizon}, invertible D", f.nrows()),
        tol,
        entries,
    ))
}

/// Optimal covers of a time-invariant system with invertible `D`, one per step.
pub fn time_invariant_covers(f: &DMatrix<f64>, q: &DMatrix<f64>, d: &DMatrix<f64>, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let dc = DestinationConstraint::new(d.clone(), DVector::zeros(d.nrows()))?;
    let sys = SystemModel::time_invariant(f.clone(), q.clone(), horizon)?;
    (1..=horizon)
        .map(|k| process_noise_shape(&sys, &dc, &optimal_weight(&sys, k)?, k))
        .collect()
}

/// `Q_{η_k}(candidate) ⪯ Q_{η_k}(W̃)` for the optimal weight (always competitor 0)
/// and `num_competitors` random feasible weights.
pub fn check_weight_optimality<R: Rng + ?Sized>(
    sys: &SystemModel,
    dc: &DestinationConstraint,
    k: usize,
    candidate: &WeightBlocks,
    num_competitors: usize,
    rng: &mut R,
    tol: f64,
) -> Result<VerificationReport> {
    let mut competitors = vec![optimal_weight(sys, k)?];
    competitors.extend((0..num_competitors).map(|_| random_feasible_weight(rng, sys.dim())));
    let reference = process_noise_shape(sys, dc, candidate, k)?;
    let entries = competitors
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let cover = process_noise_shape(sys, dc, w, k)?;
            let label = if i == 0 { format!("k = {k}, optimal") } else { format!("k = {k}, competitor {i}") };
            Ok((label, loewner_margin(&reference, &cover)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::new(
        "2",
        format!("weight optimality at k = {k}, n = {}, N = {}", sys.dim(), sys.horizon()),
        tol,
        entries,
    ))
}

/// [`check_weight_optimality`] with the optimal weight as candidate.
pub fn check_optimality<R: Rng + ?Sized>(
    sys: &SystemModel,
    dc: &DestinationConstraint,
    k: usize,
    num_competitors: usize,
    rng: &mut R,
    tol: f64,
) -> Result<VerificationReport> {
    let candidate = optimal_weight(sys, k)?;
    check_weight_optimality(sys, dc, k, &candidate, num_competitors, rng, tol)
}

/// Concatenates same-proposition reports over several steps or scenarios.
pub fn merge_reports(proposition: &str, scenario: impl Into<String>, tol: f64, reports: Vec<VerificationReport>) -> VerificationReport {
    let entries = reports
        .into_iter()
        .flat_map(|r| r.labels.into_iter().zip(r.margins))
        .collect();
    VerificationReport::new(proposition, scenario, tol, entries)
}

/// Size measures of two noise covers at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePair {
    pub k: usize,
    pub trace_a: f64,
    pub trace_b: f64,
    /// Only present when both covers are nonsingular.
    pub log_det: Option<(f64, f64)>,
}

fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Traces (and log-determinants when defined) of `Q_{η_k}` under two weight choices.
pub fn compare_traces(
    sys: &SystemModel,
    dc: &DestinationConstraint,
    weight_a: &WeightMode,
    weight_b: &WeightMode,
) -> Result<Vec<TracePair>> {
    (1..=sys.horizon())
        .into_par_iter()
        .map(|k| {
            let a = process_noise_shape(sys, dc, &weight_a.weights_at(sys, k)?, k)?;
            let b = process_noise_shape(sys, dc, &weight_b.weights_at(sys, k)?, k)?;
            let log_det = log_det(&a).zip(log_det(&b));
            Ok(TracePair {
                k,
                trace_a: a.trace(),
                trace_b: b.trace(),
                log_det,
            })
        })
        .collect()
}

/// `trace_a ≤ trace_b` at every step, margins relative to `1 + |trace_b|`.
pub fn trace_report(pairs: &[TracePair], scenario: impl Into<String>, tol: f64) -> VerificationReport {
    let entries = pairs
        .iter()
        .map(|p| (format!("k = {}", p.k), (p.trace_b - p.trace_a) / (1.0 + p.trace_b.abs())))
        .collect();
    VerificationReport::new("trace", scenario, tol, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::heading_constraint;
    use crate::dynamics::{cv_axis_noise_shape, cv_axis_transition, cv_noise_shape, cv_transition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn scenario() -> (SystemModel, DestinationConstraint) {
        let sys = SystemModel::time_invariant(cv_transition(1.0), cv_noise_shape(1.0, 9.8), 50).unwrap();
        (sys, heading_constraint(12_000.0, 0.0, FRAC_PI_2))
    }

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn oracle_fixed_point_and_euclidean_case() {
        let dc = DestinationConstraint::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![2.0])).unwrap();
        let bc = dc.block();
        let w = DMatrix::identity(4, 4);
        let feasible = DVector::from_vec(vec![5.0, -3.0, 1.0, 1.0]);
        let y = qp_oracle(&w, &bc, dc.target(), &feasible).unwrap();
        assert!((y - &feasible).norm() <= 1e-12);
        // Euclidean projection of (0,0) onto x + y = 2 in the second block is (1,1)
        let y = qp_oracle(&w, &bc, dc.target(), &DVector::from_vec(vec![7.0, 8.0, 0.0, 0.0])).unwrap();
        assert!((y - DVector::from_vec(vec![7.0, 8.0, 1.0, 1.0])).norm() <= 1e-12);
    }

    #[test]
    fn oracle_rejects_bad_weight() {
        let dc = DestinationConstraint::full_state(DVector::zeros(2));
        let w = -DMatrix::<f64>::identity(4, 4);
        assert!(qp_oracle(&w, &dc.block(), dc.target(), &DVector::zeros(4)).is_err());
    }

    #[test]
    fn prop1_small_sweep_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, m) in [(2, 1), (4, 3), (4, 4)] {
            let r = check_prop1(&mut rng, n, m, 20, 1e-8).unwrap();
            assert!(r.pass, "n={n} m={m} worst {}", r.worst_margin());
            assert_eq!(r.margins.len(), 20);
        }
        assert!(check_prop1(&mut rng, 2, 3, 1, 1e-8).is_err());
    }

    #[test]
    fn prop3_on_scenario() {
        let (sys, dc) = scenario();
        let r = check_prop3(&sys, &dc, 1e-8).unwrap();
        assert!(r.pass, "worst {}", r.worst_margin());
        assert_eq!(r.margins.len(), 50);
        assert!(schur_gap_residuals(&sys, &dc).unwrap().iter().all(|r| *r <= 1e-9));
    }

    #[test]
    fn prop3_scalar_margins() {
        // scalar D = 1: margin of q - q(N-k)/(N-k+1) = q/(N-k+1), normalized by 1 + q
        let q = 2.0;
        let sys = SystemModel::time_invariant(scalar(1.0), scalar(q), 5).unwrap();
        let dc = DestinationConstraint::full_state(DVector::from_vec(vec![3.0]));
        let r = check_prop3(&sys, &dc, 1e-8).unwrap();
        for (i, m) in r.margins.iter().enumerate() {
            let k = (i + 1) as f64;
            let expected = q / (5.0 - k + 1.0) / (1.0 + q);
            assert!((m - expected).abs() <= 1e-12, "k={k} got {m} want {expected}");
        }
    }

    #[test]
    fn zero_gain_gives_equality() {
        let (sys, dc) = scenario();
        let w = WeightBlocks {
            w1: DMatrix::identity(4, 4),
            w2: DMatrix::zeros(4, 4),
            w3: DMatrix::identity(4, 4),
        };
        let cover = process_noise_shape(&sys, &dc, &w, 10).unwrap();
        assert!(loewner_margin(&cover, &sys.step_noise_shape(9)).unwrap().abs() <= 1e-14);
    }

    #[test]
    fn prop4_scalar_sequence() {
        let covers = time_invariant_covers(&scalar(1.0), &scalar(1.0), &scalar(1.0), 5).unwrap();
        let expected = [0.8, 0.75, 2.0 / 3.0, 0.5, 0.0];
        for (c, e) in covers.iter().zip(expected) {
            assert!((c[(0, 0)] - e).abs() <= 1e-10);
        }
        let r = check_prop4(&scalar(1.0), &scalar(1.0), &scalar(1.0), 5, 1e-8).unwrap();
        assert!(r.pass);
        // strictly decreasing
        assert!(r.margins[..4].iter().all(|m| *m > 0.0));
    }

    #[test]
    fn prop4_cv_axis_and_full_state() {
        let r = check_prop4(&cv_axis_transition(1.0), &cv_axis_noise_shape(1.0, 9.8), &DMatrix::identity(2, 2), 20, 1e-8).unwrap();
        assert!(r.pass, "worst {}", r.worst_margin());
        let r = check_prop4(&cv_transition(1.0), &cv_noise_shape(1.0, 9.8), &DMatrix::identity(4, 4), 50, 1e-8).unwrap();
        assert!(r.pass, "worst {}", r.worst_margin());
    }

    #[test]
    fn prop4_rejects_non_invertible_constraint() {
        let f = cv_transition(1.0);
        let q = cv_noise_shape(1.0, 9.8);
        let heading = heading_constraint(0.0, 0.0, FRAC_PI_2);
        assert!(matches!(check_prop4(&f, &q, heading.matrix(), 5, 1e-8), Err(Error::Precondition(_))));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = check_prop4(&cv_axis_transition(1.0), &cv_axis_noise_shape(1.0, 1.0), &singular, 5, 1e-8).unwrap_err();
        assert!(err.to_string().contains("invertible"));
    }

    #[test]
    fn optimality_passes_and_corruption_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let transitions = (0..4).map(|_| DMatrix::identity(2, 2) + DMatrix::from_fn(2, 2, |_, _| { let v: f64 = StandardNormal.sample(&mut rng); 0.3 * v })).collect();
        let g = DMatrix::<f64>::from_fn(8, 8, |_, _| StandardNormal.sample(&mut rng));
        let sys = SystemModel::new(transitions, g.transpose() * &g + DMatrix::identity(8, 8)).unwrap();
        let dc = DestinationConstraint::new(DMatrix::from_row_slice(1, 2, &[1.0, -0.5]), DVector::from_vec(vec![1.0])).unwrap();
        for k in 1..=4 {
            let r = check_optimality(&sys, &dc, k, 40, &mut rng, 1e-8).unwrap();
            assert!(r.pass, "k={k} worst {}", r.worst_margin());
            assert!(r.margins[0].abs() <= 1e-10, "self-comparison margin {}", r.margins[0]);
        }
        let (sys, dc) = scenario();
        let mut corrupted = optimal_weight(&sys, 5).unwrap();
        corrupted.w2 *= 2.0;
        let r = check_weight_optimality(&sys, &dc, 5, &corrupted, 5, &mut rng, 1e-8).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn scalar_grid_never_beats_optimum() {
        let sys = SystemModel::time_invariant(scalar(1.0), scalar(1.0), 4).unwrap();
        let dc = DestinationConstraint::full_state(DVector::from_vec(vec![0.0]));
        for k in 1..=4 {
            let best = process_noise_shape(&sys, &dc, &optimal_weight(&sys, k).unwrap(), k).unwrap()[(0, 0)];
            for i in -20..=20 {
                for j in 1..=20 {
                    let w = WeightBlocks::new(scalar(100.0), scalar(i as f64 * 0.25), scalar(j as f64 * 0.25)).unwrap();
                    let cover = process_noise_shape(&sys, &dc, &w, k).unwrap()[(0, 0)];
                    assert!(cover >= best - 1e-12);
                }
            }
        }
    }

    #[test]
    fn traces_optimal_vs_identity() {
        let (sys, dc) = scenario();
        let pairs = compare_traces(&sys, &dc, &WeightMode::Optimal, &WeightMode::Identity).unwrap();
        assert_eq!(pairs.len(), 50);
        assert!(pairs.iter().all(|p| p.trace_a <= p.trace_b));
        assert!(trace_report(&pairs, "scenario", 1e-8).pass);
        // terminal optimal cover is singular, so no log-det there
        assert!(pairs[49].log_det.is_none());
        let same = compare_traces(&sys, &dc, &WeightMode::Identity, &WeightMode::Identity).unwrap();
        assert!(same.iter().all(|p| p.trace_a == p.trace_b));
    }

    #[test]
    fn zero_gain_trace_gap_is_schur_gap() {
        let (sys, dc) = scenario();
        let zero = WeightBlocks {
            w1: DMatrix::identity(4, 4),
            w2: DMatrix::zeros(4, 4),
            w3: DMatrix::identity(4, 4),
        };
        let d = dc.matrix();
        for k in [1, 17, 49] {
            let w = optimal_weight(&sys, k).unwrap();
            let gap = process_noise_shape(&sys, &dc, &zero, k).unwrap().trace() - process_noise_shape(&sys, &dc, &w, k).unwrap().trace();
            let dw2 = d * w.w2.transpose();
            let schur = dw2.transpose() * (d * &w.w3 * d.transpose()).try_inverse().unwrap() * dw2;
            assert!((gap - schur.trace()).abs() <= 1e-9 * (1.0 + gap.abs()));
        }
    }

    #[test]
    fn report_pass_flag_and_json() {
        let r = VerificationReport::new("3", "x", 1e-8, vec![("a".into(), 0.0), ("b".into(), -1e-9)]);
        assert!(r.pass);
        let r = VerificationReport::new("3", "x", 1e-8, vec![("a".into(), -2e-8)]);
        assert!(!r.pass);
        let json = r.to_json().unwrap();
        for key in ["proposition", "scenario", "tolerance", "margins", "pass"] {
            assert!(json.contains(&format!("\"{key}\"")));
        }
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
