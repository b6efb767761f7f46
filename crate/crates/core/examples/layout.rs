//! Three-stage layout and the per-stage spread of the nodes.

use orgmap::layout::{layout_stages, overlap_fraction, LayoutConfig};
use orgmap::synthesis::{synthesize, SynthConfig};

fn spread(p: &[[f64; 2]]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = p.iter().map(|q| (q[0], q[1])).unzip();
    let w = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    w(&xs).max(w(&ys))
}

fn main() -> orgmap::Result<()> {
    let s = synthesize(&SynthConfig { top_level_communities: 4, ..SynthConfig::default().with_seed(5) })?;
    let st = layout_stages(&s.graph, &LayoutConfig::default().with_seed(5))?;
    println!("annealed   spread {:.1}", spread(&st.annealed));
    println!("expanded   spread {:.1}", spread(&st.expanded));
    println!("contracted spread {:.1}, overlap {:.4}", spread(&st.contracted), overlap_fraction(&st.contracted, &st.radii));
    Ok(())
}
