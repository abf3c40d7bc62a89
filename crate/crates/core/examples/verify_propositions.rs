//! Runs every verification check and prints a one-line summary per report.

use destcon::constraint::heading_constraint;
use destcon::dynamics::{cv_axis_noise_shape, cv_axis_transition, cv_noise_shape, cv_transition, SystemModel};
use destcon::verify::{check_optimality, check_prop1, check_prop3, check_prop4, check_schur_gap, VerificationReport};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(r: &VerificationReport) {
    println!(
        "[{}] {}: {} margins, worst {:.3e} (tol {:.0e})",
        if r.pass { "pass" } else { "FAIL" },
        r.scenario,
        r.margins.len(),
        r.worst_margin(),
        r.tolerance
    );
}

fn main() -> destcon::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (n, m) in [(2, 1), (4, 3), (4, 4)] {
        show(&check_prop1(&mut rng, n, m, 100, 1e-8)?);
    }

    let sys = SystemModel::time_invariant(cv_transition(1.0), cv_noise_shape(1.0, 9.8), 50)?;
    let dc = heading_constraint(12_000.0, 0.0, 90f64.to_radians());
    for k in [1, 25, 50] {
        show(&check_optimality(&sys, &dc, k, 100, &mut rng, 1e-8)?);
    }
    show(&check_prop3(&sys, &dc, 1e-8)?);
    show(&check_schur_gap(&sys, &dc, 1e-9)?);

    let one = DMatrix::from_element(1, 1, 1.0);
    show(&check_prop4(&one, &one, &one, 5, 1e-8)?);
    show(&check_prop4(&cv_axis_transition(1.0), &cv_axis_noise_shape(1.0, 9.8), &DMatrix::identity(2, 2), 50, 1e-8)?);

    // the heading constraint is not square, so the shrinkage check refuses it
    match check_prop4(&cv_transition(1.0), &cv_noise_shape(1.0, 9.8), dc.matrix(), 50, 1e-8) {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
