//! Constrained and unconstrained rollouts of the reference constant-velocity
//! scenario under the same noise draws.

use destcon::constraint::heading_constraint;
use destcon::dynamics::{cv_noise_shape, cv_transition, SystemModel};
use destcon::ellipsoid::RadialMode;
use destcon::reconstruct::{rollout_unconstrained, trajectory_rng, NoiseSampler, ReconstructedModel};
use destcon::weights::WeightMode;
use nalgebra::DVector;

fn main() -> destcon::error::Result<()> {
    let sys = SystemModel::time_invariant(cv_transition(1.0), cv_noise_shape(1.0, 9.8), 50)?;
    let dc = heading_constraint(12_000.0, 0.0, 90f64.to_radians());
    let x0 = DVector::from_vec(vec![0.0, 240.0, 10_000.0, 0.0]);

    let model = ReconstructedModel::build(&sys, &dc, &WeightMode::Optimal)?;
    let sampler = NoiseSampler::new(&sys)?;
    println!("{:>3} {:>24} {:>24}", "id", "constrained end (x, y)", "relaxed end (x, y)");
    for id in 0..8 {
        let draw = sampler.draw(&mut trajectory_rng(42, id), RadialMode::UniformBall);
        let constrained = model.rollout(&x0, &draw)?;
        let relaxed = rollout_unconstrained(&sys, &x0, &draw)?;
        let (c, r) = (constrained.terminal(), relaxed.terminal());
        println!("{id:>3} ({:>10.3}, {:>9.3}) ({:>10.1}, {:>9.1})", c[0], c[2], r[0], r[2]);
    }

    let first = &model.steps()[0];
    println!("step 1 gain:\n{:.4}", first.gain);
    Ok(())
}
