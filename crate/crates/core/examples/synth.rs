//! Generate a planted-hierarchy network and three months of activity.

use orgmap::synthesis::{synthesize, synthesize_activity, ActivityConfig, SynthConfig};

fn main() -> orgmap::Result<()> {
    let s = synthesize(&SynthConfig { top_level_communities: 5, ..SynthConfig::default().with_seed(1) })?;
    println!("{} people, {} edges", s.graph.node_count(), s.graph.edge_count());
    for (depth, level) in s.planted.levels.iter().enumerate() {
        println!("level {depth}: {} workgroups", level.community_count());
    }
    let a = synthesize_activity(&s, &ActivityConfig { seed: 1, ..ActivityConfig::default() })?;
    println!("{} messages, {} org snapshots", a.messages.len(), a.org.len());
    Ok(())
}
