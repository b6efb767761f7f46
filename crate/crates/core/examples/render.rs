//! Write a workgroup map, a highlighted map and a quadrant chart to ./render-out.

use std::collections::BTreeMap;

use orgmap::layout::{layout_pipeline, LayoutConfig};
use orgmap::render::{render_map, render_quadrant, MapSpec, QuadrantPoint, QuadrantSpec};
use orgmap::synthesis::{synthesize, SynthConfig};
use orgmap::theme::{SliderState, Theme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = synthesize(&SynthConfig { top_level_communities: 5, ..SynthConfig::default().with_seed(6) })?;
    let layout = layout_pipeline(&s.graph, &LayoutConfig::default().with_seed(6))?;
    let theme = Theme::from_sliders(&SliderState { accent_hue: 20.0, ..SliderState::default() });
    let leaf = s.planted.leaf();
    let metrics = BTreeMap::new();

    let out = std::path::Path::new("render-out");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("network.svg"), render_map(&MapSpec::nominal(&layout, leaf, &metrics), &theme)?)?;
    let first = leaf.iter().map(|(_, c)| c).min().unwrap_or(0);
    let spec = MapSpec { highlight: Some(first), ..MapSpec::nominal(&layout, leaf, &metrics) };
    std::fs::write(out.join("highlight.svg"), render_map(&spec, &theme)?)?;

    // made-up scores, one per planted workgroup
    let points = leaf
        .communities()
        .iter()
        .enumerate()
        .map(|(i, c)| QuadrantPoint {
            workgroup_id: i,
            freedom: (i as f64 * 0.37).fract(),
            fluidity: (i as f64 * 0.61).fract(),
            size: c.len(),
        })
        .collect();
    std::fs::write(out.join("quadrant.svg"), render_quadrant(&QuadrantSpec::new(points), &theme))?;
    println!("wrote {}", out.display());
    Ok(())
}
