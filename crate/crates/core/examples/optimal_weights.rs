//! Optimal weights and the size of the noise each reconstructed step injects,
//! compared with identity weights and with the raw per-step noise.

use destcon::constraint::heading_constraint;
use destcon::dynamics::{cv_noise_shape, cv_transition, SystemModel};
use destcon::ellipsoid::loewner_margin;
use destcon::verify::compare_traces;
use destcon::weights::{optimal_weight, process_noise_shape, terminal_condition_check, WeightMode};

fn main() -> destcon::error::Result<()> {
    let sys = SystemModel::time_invariant(cv_transition(1.0), cv_noise_shape(1.0, 9.8), 50)?;
    let dc = heading_constraint(12_000.0, 0.0, 90f64.to_radians());

    let pairs = compare_traces(&sys, &dc, &WeightMode::Optimal, &WeightMode::Identity)?;
    println!("{:>3} {:>14} {:>14} {:>14}", "k", "tr optimal", "tr identity", "margin vs Q");
    for p in pairs.iter().filter(|p| p.k % 5 == 0 || p.k == 1) {
        let cover = process_noise_shape(&sys, &dc, &optimal_weight(&sys, p.k)?, p.k)?;
        let margin = loewner_margin(&cover, &sys.step_noise_shape(p.k - 1))?;
        println!("{:>3} {:>14.4} {:>14.4} {:>14.3e}", p.k, p.trace_a, p.trace_b, margin);
    }

    let last = optimal_weight(&sys, 50)?;
    println!("terminal condition at k = N: {}", terminal_condition_check(&last, &dc));
    Ok(())
}
