use std::path::Path;

use orgmap::cli::run_cli;
use orgmap::error::Error;
use orgmap::pipeline::Manifest;

fn cli(args: &[&str]) -> orgmap::error::Result<String> {
    let mut out = Vec::new();
    run_cli(std::iter::once("orgmap").chain(args.iter().copied()), &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) {
    let config = dir.join("synth.json");
    std::fs::write(&config, r#"{"topLevelCommunities": 4, "sizeRange": [10, 30], "hierarchyDepth": 1}"#).unwrap();
    let msg = cli(&["synth", "--seed", "3", "--config", p(&config), "--months", "3", "--out-dir", p(dir)]).unwrap();
    assert!(msg.contains("messages over 3 months"), "{msg}");
}

fn pipeline(dir: &Path, out: &Path, extra: &[&str]) -> orgmap::error::Result<String> {
    let (m, o) = (dir.join("messages.csv"), dir.join("org.csv"));
    let mut args = vec!["pipeline", "--seed", "3", "--messages", p(&m), "--org", p(&o), "--max-size", "40", "--out-dir", p(out)];
    args.extend_from_slice(extra);
    cli(&args)
}

#[test]
fn pipeline_is_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pipeline(dir.path(), &a, &[]).unwrap();
    pipeline(dir.path(), &b, &["--threads", "1"]).unwrap();
    let read = |d: &Path| std::fs::read_to_string(d.join("manifest.json")).unwrap();
    let manifest: Manifest = serde_json::from_str(&read(&a)).unwrap();
    for art in &manifest.artifacts {
        let bytes = std::fs::read(a.join(&art.path)).unwrap();
        assert_eq!(bytes, std::fs::read(b.join(&art.path)).unwrap(), "{}", art.path);
        assert_eq!(orgmap::pipeline::sha256_hex(&bytes), art.sha256);
    }
    assert_eq!(read(&a), read(&b));
    for f in ["network.csv", "communities.csv", "embedding.csv", "metrics.csv", "layout.csv", "theme.json", "deck.json", "deck.html"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let deck = std::fs::read_to_string(a.join("deck.html")).unwrap();
    assert!(!deck.contains("{detected workgroup count}"));
}

#[test]
fn missing_org_file_names_stage_and_path() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    std::fs::remove_file(dir.path().join("org.csv")).unwrap();
    let err = pipeline(dir.path(), &dir.path().join("out"), &[]).unwrap_err();
    match &err {
        Error::Stage { stage, .. } => assert_eq!(*stage, "metrics"),
        other => panic!("expected a stage error, got {other}"),
    }
    let text = err.to_string();
    assert!(text.contains("org.csv"), "{text}");
    // earlier stages already wrote their files
    assert!(dir.path().join("out/communities.csv").is_file());
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let (m, org) = (d.join("messages.csv"), d.join("org.csv"));
    let (net, comm, elbow, pos, met) =
        (d.join("net.csv"), d.join("comm.csv"), d.join("elbow.csv"), d.join("pos.csv"), d.join("met.csv"));
    cli(&["induce", "--messages", p(&m), "--min-total", "4", "--min-each-direction", "1", "--out", p(&net)]).unwrap();
    cli(&["communities", "--network", p(&net), "--sweep", "--elbow-out", p(&elbow), "--out", p(&comm)]).unwrap();
    assert!(std::fs::read_to_string(&elbow).unwrap().starts_with("max_size,leaf_modularity\n"));
    assert!(cli(&["communities", "--network", p(&net)]).is_err());
    assert!(cli(&["communities", "--network", p(&net), "--max-size", "40", "--quality", "louvain"]).is_err());
    let cpm = cli(&["communities", "--network", p(&net), "--max-size", "40", "--quality", "cpm"]).unwrap();
    assert!(cpm.lines().count() > 1);
    cli(&["metrics", "--messages", p(&m), "--communities", p(&comm), "--org", p(&org), "--out", p(&met)]).unwrap();
    cli(&["layout", "--network", p(&net), "--seed", "5", "--out", p(&pos)]).unwrap();
    let again = cli(&["layout", "--network", p(&net), "--seed", "5"]).unwrap();
    assert_eq!(again, std::fs::read_to_string(&pos).unwrap());

    let svg = cli(&["render", "--network", p(&net), "--communities", p(&comm), "--positions", p(&pos), "--links"]).unwrap();
    assert!(svg.contains("<circle") && svg.contains("<line"));
    let colored = cli(&[
        "render", "--network", p(&net), "--communities", p(&comm), "--positions", p(&pos), "--metrics", p(&met),
        "--color-by", "freedom",
    ])
    .unwrap();
    assert!(colored.contains("<circle"));
    let quad = cli(&["render", "--quadrant", "--metrics", p(&met), "--dark"]).unwrap();
    assert!(quad.contains("Cross-org, fluid"));
}

#[test]
fn theme_and_stamp_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let light = cli(&["theme", "--accent-hue", "120"]).unwrap();
    let dark = cli(&["theme", "--accent-hue", "120", "--invert"]).unwrap();
    assert!(light.contains("\"mode\": \"light\"") && dark.contains("\"mode\": \"dark\""));
    std::fs::write(d.join("theme.json"), &dark).unwrap();

    std::fs::write(
        d.join("template.json"),
        r#"{"slides": [{"slideId": "a", "elements": [{"kind": "text", "content": "{count} groups"}]},
                       {"slideId": "b", "elements": [{"kind": "text", "content": "group {id}"}]}]}"#,
    )
    .unwrap();
    std::fs::write(
        d.join("spec.json"),
        r#"{"replacements": {"count": {"text": "2"}},
            "sequences": [{"slideIds": ["b"], "instances": [{"id": {"text": "1"}}, {"id": {"text": "2"}}]}],
            "themeRef": "theme.json"}"#,
    )
    .unwrap();
    std::fs::write(d.join("bad.json"), r#"{"replacements": {}}"#).unwrap();
    let (t, s) = (d.join("template.json"), d.join("spec.json"));
    let report = cli(&["stamp", "--template", p(&t), "--spec", p(&d.join("bad.json")), "--validate"]);
    assert!(matches!(report, Err(Error::UnresolvedTags(t)) if t == ["count", "id"]));
    cli(&["stamp", "--template", p(&t), "--spec", p(&s), "--validate"]).unwrap();
    cli(&["stamp", "--template", p(&t), "--spec", p(&s), "--out-dir", p(&d.join("deck"))]).unwrap();
    let deck: orgmap::deck::Deck = serde_json::from_str(&std::fs::read_to_string(d.join("deck/deck.json")).unwrap()).unwrap();
    let text: Vec<&str> = deck.slides.iter().map(|s| s.elements[0].content.as_str()).collect();
    assert_eq!(text, ["2 groups", "group 1", "group 2"]);
    assert!(deck.style.is_some());
}
