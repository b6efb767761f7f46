//! Turn a message log into monthly and whole-period collaboration graphs.

use orgmap::ingest::{induce_series, months_in, LongitudinalRule};
use orgmap::synthesis::{synthesize, synthesize_activity, ActivityConfig, SynthConfig};

fn main() -> orgmap::Result<()> {
    let s = synthesize(&SynthConfig { top_level_communities: 4, ..SynthConfig::default().with_seed(2) })?;
    let log = synthesize_activity(&s, &ActivityConfig::default())?.messages;

    let months = months_in(&log);
    let series = induce_series(&log, &months, LongitudinalRule::default())?;
    for (m, g) in &series.graphs {
        println!("{m}: {} people, {} edges", g.node_count(), g.edge_count());
    }
    let whole = &series.longitudinal;
    println!("all months: {} people, {} edges", whole.node_count(), whole.edge_count());
    Ok(())
}
