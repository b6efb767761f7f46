//! Derive a theme from slider settings, then its dark twin.

use orgmap::theme::{SliderState, Theme};

fn main() {
    let light = Theme::from_sliders(&SliderState { accent_hue: 160.0, nominal_scale_step: 7, ..SliderState::default() });
    let dark = light.inverted();
    for t in [&light, &dark] {
        let c = &t.colors;
        println!("{:?}: background {} foreground {} accent {}", t.mode, c.background, c.foreground, c.accent);
        let nominal: Vec<String> = c.nominal.iter().map(|x| x.to_string()).collect();
        println!("  nominal {}", nominal.join(" "));
    }
    println!("{}", light.to_json());
}
