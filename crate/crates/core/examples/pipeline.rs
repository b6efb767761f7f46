//! Synthesize inputs, then run every stage into a temporary directory.

use orgmap::graph::write_org_csv;
use orgmap::ingest::format_messages_csv;
use orgmap::pipeline::{run_pipeline, PipelineConfig};
use orgmap::synthesis::{synthesize, synthesize_activity, ActivityConfig, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("orgmap-pipeline-example");
    std::fs::create_dir_all(&dir)?;
    let s = synthesize(&SynthConfig { top_level_communities: 4, ..SynthConfig::default().with_seed(8) })?;
    let a = synthesize_activity(&s, &ActivityConfig { seed: 8, ..ActivityConfig::default() })?;
    std::fs::write(dir.join("messages.csv"), format_messages_csv(&a.messages))?;
    std::fs::write(dir.join("org.csv"), write_org_csv(&a.org))?;

    let cfg = PipelineConfig {
        messages: dir.join("messages.csv"),
        org: dir.join("org.csv"),
        out_dir: dir.join("out"),
        seed: 8,
        ..PipelineConfig::default()
    };
    let manifest = run_pipeline(&cfg)?;
    println!("{} people, {} workgroups", manifest.people, manifest.workgroups);
    for art in &manifest.artifacts {
        println!("{:<28} {:>8} bytes  {}", art.path, art.bytes, &art.sha256[..12]);
    }
    Ok(())
}
