//! Freedom and fluidity for the planted workgroups of a synthetic company.

use orgmap::embedding::{embed_series, AdjacencyWeighting, EmbedOptions};
use orgmap::metrics::{compute_metrics, workgroups};
use orgmap::synthesis::{synthesize, synthesize_activity, ActivityConfig, SynthConfig};

fn main() -> orgmap::Result<()> {
    let s = synthesize(&SynthConfig { top_level_communities: 4, ..SynthConfig::default().with_seed(4) })?;
    let a = synthesize_activity(&s, &ActivityConfig { months: 4, seed: 4, ..ActivityConfig::default() })?;
    let graphs: Vec<_> = a.monthly.iter().collect();
    let embeddings = embed_series(&graphs, AdjacencyWeighting::Binary, &EmbedOptions::default())?;

    let rows = compute_metrics(&workgroups(s.planted.leaf()), &embeddings, &a.org);
    println!("{:>4} {:>5} {:>8} {:>8}", "id", "size", "freedom", "fluidity");
    for r in rows {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>4} {:>5} {:>8} {:>8}",
            r.workgroup_id,
            r.size,
            show(r.freedom.map(|f| f.value)),
            show(r.fluidity.map(|f| f.value))
        );
    }
    Ok(())
}
