//! Simulates the 90-degree heading scenario and writes CSV plus SVG charts.
//!
//! Usage: `cargo run --example plot_svg -- [output-dir]` (default `plots`).

use std::path::PathBuf;

use destcon::cli::{emit_plot, run_simulate, Preset, ScenarioConfig};

fn main() -> destcon::error::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "plots".into()));
    for preset in [Preset::Fig2, Preset::Fig8] {
        let sim = run_simulate(&ScenarioConfig::preset(preset), &out)?;
        for path in emit_plot(std::slice::from_ref(&sim.csv_path), &out)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
