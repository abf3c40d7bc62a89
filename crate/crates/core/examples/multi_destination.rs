//! Trajectory sets from several origins to one destination and from one origin
//! to several destinations, driven through the scenario configuration.

use destcon::cli::{simulate, Preset, ScenarioConfig};

fn main() -> destcon::error::Result<()> {
    for preset in [Preset::Fig9, Preset::Fig10] {
        let cfg = ScenarioConfig::preset(preset);
        let (rows, summaries) = simulate(&cfg)?;
        println!("{preset}: {} trajectories, {} rows", summaries.len(), rows.len());
        for s in summaries.iter().filter(|s| s.trajectory_id % cfg.trajectories as u64 == 0) {
            let origin = &cfg.origins[s.origin_index];
            let dest = cfg.destinations[s.destination_index];
            println!(
                "  id {:>2}: from ({:.0}, {:.0}) to ({:.0}, {:.0}), residual {:.2e}",
                s.trajectory_id, origin[0], origin[2], dest.0, dest.1, s.terminal_residual
            );
        }
    }

    // the same machinery from a config text
    let cfg = ScenarioConfig::from_toml(
        "initial.states = [[0, 200, 0, 50]]\ndestination.points = [[8000, 6000]]\ndestination.theta_deg = 30\nrun.trajectories = 3\nrun.relaxed = false\n",
    )?;
    let (_, summaries) = simulate(&cfg)?;
    println!("custom: all on destination = {}", summaries.iter().all(|s| s.meets_destination));
    Ok(())
}
