//! A time-varying system with correlated stacked noise and a general
//! destination constraint, checked end to end.

use destcon::constraint::DestinationConstraint;
use destcon::dynamics::SystemModel;
use destcon::ellipsoid::RadialMode;
use destcon::reconstruct::{draw_noise, rollout};
use destcon::verify::{check_optimality, check_prop3};
use destcon::weights::WeightMode;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> destcon::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, horizon) = (3, 8);
    let transitions: Vec<_> = (0..horizon)
        .map(|k| {
            let s = 0.1 * k as f64;
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, s.cos(), s.sin(), 0.0, -s.sin(), s.cos()])
        })
        .collect();
    let g = DMatrix::<f64>::from_fn(n * horizon, n * horizon, |_, _| StandardNormal.sample(&mut rng));
    let q_w0 = (g.transpose() * &g) * 0.01 + DMatrix::identity(n * horizon, n * horizon) * 0.05;
    let sys = SystemModel::new(transitions, q_w0)?;

    // reach position 20 with the second and third states summing to zero
    let dc = DestinationConstraint::new(
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]),
        DVector::from_vec(vec![20.0, 0.0]),
    )?;
    let x0 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    for trial in 0..3 {
        let draw = draw_noise(&sys, &mut rng, RadialMode::Boundary)?;
        let traj = rollout(&sys, &dc, &WeightMode::Optimal, &x0, &draw)?;
        println!("trial {trial}: x_N = {:?}, residual {:?}", traj.terminal().as_slice(), dc.residual(traj.terminal()).as_slice());
    }

    println!("cover dominance: {}", check_prop3(&sys, &dc, 1e-8)?.pass);
    let all = (1..=horizon).all(|k| check_optimality(&sys, &dc, k, 50, &mut rng, 1e-8).map(|r| r.pass).unwrap_or(false));
    println!("optimality against 50 competitors at every step: {all}");
    Ok(())
}
