//! Sweep the size cap, pick the elbow, and print the workgroup hierarchy.

use orgmap::community::{default_candidate_sizes, detect_hierarchy, sweep_and_elbow};
use orgmap::graph::modularity;
use orgmap::synthesis::{synthesize, SynthConfig};

fn main() -> orgmap::Result<()> {
    let s = synthesize(&SynthConfig::default().with_seed(3))?;
    let g = &s.graph;
    let (curve, chosen) = sweep_and_elbow(g, &default_candidate_sizes(g.node_count()), 3)?;
    for (size, q) in &curve.points {
        println!("max size {size:>4}: leaf modularity {q:.3}{}", if *size == chosen { "  <- elbow" } else { "" });
    }
    let h = detect_hierarchy(g, chosen, 3)?;
    for (depth, level) in h.levels.iter().enumerate() {
        println!("level {depth}: {} workgroups, Q = {:.3}", level.community_count(), modularity(g, level)?);
    }
    Ok(())
}
