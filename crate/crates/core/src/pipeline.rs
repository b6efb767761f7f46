//! End-to-end run: ingest → community → embedding → metrics → layout →
//! render → deck, writing every artifact plus a manifest of content hashes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{
    default_candidate_sizes, detect_hierarchy, format_hierarchy_csv, sweep_and_elbow, WorkgroupHierarchy,
};
use crate::deck::{
    media_paths, render_deck_html, stamp, DeckTemplate, Element, Replacement, Replacements, Sequence, StampSpec,
    TemplateSlide,
};
use crate::embedding::{embed_series, format_embedding_csv, AdjacencyWeighting, EmbedOptions, EmbeddingPair};
use crate::error::{Error, Result};
use crate::graph::{format_edge_list, read_org_csv, OrgTree, PersonId};
use crate::ingest::{
    induce_series, months_in, pseudonymize, pseudonymize_id, read_messages, select_snapshot, LongitudinalRule,
    MonthlySeries, Thresholds,
};
use crate::layout::{format_positions_csv, layout_pipeline, LayoutConfig, LayoutResult};
use crate::metrics::{compute_metrics, format_metrics_csv, format_metrics_detail_csv, workgroups, WorkgroupMetrics};
use crate::month::Month;
use crate::render::{
    pick_quadrant_callouts, render_map, render_quadrant, spread_to_members, Coloring, MapSpec, Quadrant,
    QuadrantPoint, QuadrantSpec,
};
use crate::theme::{SliderState, Theme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PipelineConfig {
    /// Message log, CSV or JSON lines.
    pub messages: PathBuf,
    /// Org snapshots CSV.
    pub org: PathBuf,
    /// Analysis months; every month in the log when absent.
    pub months: Option<Vec<Month>>,
    pub min_total: u32,
    pub min_each_direction: u32,
    /// Pseudonymise ids with this salt before anything is written.
    pub hash_salt: Option<String>,
    /// Leaf workgroup size cap; the size sweep picks one when absent.
    pub max_size: Option<usize>,
    pub sweep: bool,
    pub seed: u64,
    /// Overrides the layout stage seed derived from `seed`.
    pub layout_seed: Option<u64>,
    pub layout: LayoutConfig,
    pub sliders: SliderState,
    /// Theme JSON to use instead of `sliders`.
    pub theme: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub stamp_spec: Option<PathBuf>,
    pub callouts_per_quadrant: usize,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            messages: PathBuf::from("messages.csv"),
            org: PathBuf::from("org.csv"),
            months: None,
            min_total: 4,
            min_each_direction: 1,
            hash_salt: None,
            max_size: None,
            sweep: false,
            seed: 0,
            layout_seed: None,
            layout: LayoutConfig::default(),
            sliders: SliderState::default(),
            theme: None,
            template: None,
            stamp_spec: None,
            callouts_per_quadrant: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub months: Vec<Month>,
    pub seeds: BTreeMap<String, u64>,
    pub people: usize,
    pub edges: usize,
    pub max_size: usize,
    pub workgroups: usize,
    pub rejected_messages: usize,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn kinds(&self) -> BTreeSet<&str> {
        self.artifacts.iter().map(|a| a.kind.as_str()).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Independent seed for one stage, derived from the run seed.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let d = Sha256::digest(format!("orgmap\x1f{stage}\x1f{seed}").as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, name: &str, kind: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            kind: kind.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }
}

fn pseudonymize_trees(trees: Vec<OrgTree>, salt: &str) -> Result<Vec<OrgTree>> {
    trees
        .into_iter()
        .map(|t| {
            let rows: Vec<_> = t
                .rows()
                .into_iter()
                .map(|(e, m)| (pseudonymize_id(e, salt), m.map(|m| pseudonymize_id(m, salt))))
                .collect();
            OrgTree::from_rows(t.snapshot_date(), rows)
        })
        .collect()
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Narrative used when no template is supplied: whole network, freedom,
/// fluidity, the quadrant chart, then one slide per called-out workgroup.
pub fn default_template() -> DeckTemplate {
    let s = |id: &str, elements: Vec<Element>| TemplateSlide { slide_id: id.into(), elements };
    DeckTemplate::new(vec![
        s(
            "title",
            vec![
                Element::text("Workgroup map").with_role("title"),
                Element::text("{analysis period}").with_role("subtitle"),
            ],
        ),
        s(
            "network",
            vec![
                Element::text("How work actually gets done").with_role("title"),
                Element::image("{network map}"),
                Element::text("{detected workgroup count} workgroups among {people count} people"),
            ],
        ),
        s(
            "freedom",
            vec![
                Element::text("Freedom").with_role("title"),
                Element::image("{freedom map}"),
                Element::text("Collaboration beyond the reporting line; median {median freedom}"),
            ],
        ),
        s(
            "fluidity",
            vec![
                Element::text("Fluidity").with_role("title"),
                Element::image("{fluidity map}"),
                Element::text("Month-to-month change in collaboration; median {median fluidity}"),
            ],
        ),
        s(
            "quadrant",
            vec![
                Element::text("Freedom and fluidity").with_role("title"),
                Element::image("{quadrant chart}"),
            ],
        ),
        s(
            "workgroup",
            vec![
                Element::text("Workgroup {workgroup id}").with_role("title"),
                Element::image("{workgroup map}"),
                Element::text("{workgroup quadrant}: {workgroup size} people, freedom {workgroup freedom}, fluidity {workgroup fluidity}"),
            ],
        ),
    ])
}

struct Analysis {
    series: MonthlySeries,
    rejected: usize,
    hierarchy: WorkgroupHierarchy,
    max_size: usize,
    metrics: Vec<WorkgroupMetrics>,
    layout: LayoutResult,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Run every stage, writing artifacts into `cfg.out_dir` as they complete.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    let mut w = Writer { dir: cfg.out_dir.clone(), artifacts: Vec::new() };
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut seeds = BTreeMap::new();
    seeds.insert("community".to_string(), stage_seed(cfg.seed, "community"));
    seeds.insert("layout".to_string(), cfg.layout_seed.unwrap_or_else(|| stage_seed(cfg.seed, "layout")));

    // ingest
    let (series, rejected) = (|| -> Result<_> {
        let log = read_messages(&cfg.messages)?;
        let rejected = log.rejected.len();
        if rejected > 0 {
            log::warn!("{rejected} message rows rejected");
        }
        let records = match &cfg.hash_salt {
            Some(salt) => pseudonymize(&log.records, salt),
            None => log.records,
        };
        let months = cfg.months.clone().unwrap_or_else(|| months_in(&records));
        let rule = LongitudinalRule {
            thresholds: Thresholds { min_total: cfg.min_total, min_each_direction: cfg.min_each_direction },
            scale_with_months: true,
        };
        let series = induce_series(&records, &months, rule)?;
        if series.longitudinal.is_empty() {
            return Err(Error::EmptyGraph);
        }
        w.put("network.csv", "network", format_edge_list(&series.longitudinal).as_bytes())?;
        for (m, g) in &series.graphs {
            w.put(&format!("network/{m}.csv"), "network", format_edge_list(g).as_bytes())?;
        }
        Ok((series, rejected))
    })()
    .map_err(|e| e.in_stage("ingest"))?;
    let g = &series.longitudinal;

    // community
    let (hierarchy, max_size) = (|| -> Result<_> {
        let seed = seeds["community"];
        let max_size = match cfg.max_size {
            Some(m) if !cfg.sweep => m,
            _ => {
                let (curve, chosen) = sweep_and_elbow(g, &default_candidate_sizes(g.node_count()), seed)?;
                let mut csv = String::from("max_size,leaf_modularity\n");
                for (s, q) in &curve.points {
                    csv.push_str(&format!("{s},{q}\n"));
                }
                w.put("elbow.csv", "communities", csv.as_bytes())?;
                chosen
            }
        };
        let h = detect_hierarchy(g, max_size, seed)?;
        w.put("communities.csv", "communities", format_hierarchy_csv(&h).as_bytes())?;
        Ok((h, max_size))
    })()
    .map_err(|e| e.in_stage("community"))?;

    // embedding
    let embeddings: Vec<EmbeddingPair> = (|| -> Result<_> {
        let graphs = series.ordered();
        if graphs.len() < 2 {
            log::warn!("fewer than two months: fluidity is unavailable");
            return Ok(Vec::new());
        }
        let e = embed_series(&graphs, AdjacencyWeighting::Binary, &EmbedOptions::default())?;
        w.put("embedding.csv", "embedding", format_embedding_csv(&e).as_bytes())?;
        Ok(e)
    })()
    .map_err(|e| e.in_stage("embedding"))?;

    // metrics
    let metrics = (|| -> Result<_> {
        let mut trees = read_org_csv(&cfg.org)?;
        if let Some(salt) = &cfg.hash_salt {
            trees = pseudonymize_trees(trees, salt)?;
        }
        let mut chosen: Vec<OrgTree> = Vec::new();
        for m in &series.months {
            if let Some(t) = select_snapshot(&trees, *m) {
                if !chosen.iter().any(|c| c.snapshot_date() == t.snapshot_date()) {
                    chosen.push(t.clone());
                }
            }
        }
        let rows = compute_metrics(&workgroups(hierarchy.leaf()), &embeddings, &chosen);
        w.put("metrics.csv", "metrics", format_metrics_csv(&rows).as_bytes())?;
        w.put("metrics_detail.csv", "metrics", format_metrics_detail_csv(&rows).as_bytes())?;
        Ok(rows)
    })()
    .map_err(|e| e.in_stage("metrics"))?;

    // layout
    let layout = (|| -> Result<_> {
        let l = layout_pipeline(g, &cfg.layout.clone().with_seed(seeds["layout"]))?;
        w.put("layout.csv", "layout", format_positions_csv(&l).as_bytes())?;
        Ok(l)
    })()
    .map_err(|e| e.in_stage("layout"))?;

    let a = Analysis { series, rejected, hierarchy, max_size, metrics, layout };
    let (theme, callouts) = render_stage(cfg, &a, &mut w).map_err(|e| e.in_stage("render"))?;
    deck_stage(cfg, &a, &theme, &callouts, &mut w).map_err(|e| e.in_stage("deck"))?;

    let manifest = Manifest {
        months: a.series.months.clone(),
        seeds,
        people: a.series.longitudinal.node_count(),
        edges: a.series.longitudinal.edge_count(),
        max_size: a.max_size,
        workgroups: a.hierarchy.leaf().community_count(),
        rejected_messages: a.rejected,
        artifacts: w.artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    let path = cfg.out_dir.join("manifest.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn quadrant_points(a: &Analysis) -> Vec<QuadrantPoint> {
    a.metrics
        .iter()
        .filter_map(|m| {
            Some(QuadrantPoint {
                workgroup_id: m.workgroup_id,
                freedom: m.freedom.as_ref()?.value,
                fluidity: m.fluidity.as_ref()?.value,
                size: m.size,
            })
        })
        .collect()
}

fn render_stage(cfg: &PipelineConfig, a: &Analysis, w: &mut Writer) -> Result<(Theme, Vec<usize>)> {
    let theme = match &cfg.theme {
        Some(p) => Theme::from_json(&read_text(p)?)?,
        None => Theme::from_sliders(&cfg.sliders),
    };
    w.put("theme.json", "theme", theme.to_json().as_bytes())?;

    let leaf = a.hierarchy.leaf();
    let mut metric_maps: BTreeMap<String, BTreeMap<PersonId, f64>> = BTreeMap::new();
    let by_group = |f: &dyn Fn(&WorkgroupMetrics) -> Option<f64>| -> BTreeMap<usize, Option<f64>> {
        a.metrics.iter().map(|m| (m.workgroup_id, f(m))).collect()
    };
    metric_maps.insert("freedom".into(), spread_to_members(leaf, &by_group(&|m| m.freedom.as_ref().map(|s| s.value))));
    metric_maps.insert("fluidity".into(), spread_to_members(leaf, &by_group(&|m| m.fluidity.as_ref().map(|s| s.value))));

    let spec = MapSpec::nominal(&a.layout, leaf, &metric_maps);
    w.put("figures/network.svg", "map", render_map(&spec, &theme)?.as_bytes())?;
    for name in ["freedom", "fluidity"] {
        let spec = MapSpec { coloring: Coloring::Sequential(name.into()), ..MapSpec::nominal(&a.layout, leaf, &metric_maps) };
        w.put(&format!("figures/{name}.svg"), "map", render_map(&spec, &theme)?.as_bytes())?;
    }

    let points = quadrant_points(a);
    let mut callouts = Vec::new();
    if points.is_empty() {
        log::warn!("no workgroup has both metrics; quadrant chart skipped");
    } else {
        let mut q = QuadrantSpec::new(points);
        q.callouts = pick_quadrant_callouts(&q.points, q.thresholds, cfg.callouts_per_quadrant);
        w.put("figures/quadrant.svg", "quadrant", render_quadrant(&q, &theme).as_bytes())?;
        callouts = q.callouts.clone();
        for id in &callouts {
            let spec = MapSpec { highlight: Some(*id), ..MapSpec::nominal(&a.layout, leaf, &metric_maps) };
            w.put(&format!("figures/workgroup_{id}.svg"), "map", render_map(&spec, &theme)?.as_bytes())?;
        }
    }
    Ok((theme, callouts))
}

fn auto_spec(a: &Analysis, callouts: &[usize]) -> StampSpec {
    let mut r = Replacements::new();
    let months = &a.series.months;
    let period = match (months.first(), months.last()) {
        (Some(f), Some(l)) if f != l => format!("{f} to {l}"),
        (Some(f), _) => f.to_string(),
        _ => String::new(),
    };
    r.insert("analysis period".into(), Replacement::text(period));
    r.insert("detected workgroup count".into(), Replacement::text(a.hierarchy.leaf().community_count().to_string()));
    r.insert("people count".into(), Replacement::text(a.series.longitudinal.node_count().to_string()));
    r.insert("network map".into(), Replacement::media("figures/network.svg"));
    r.insert("freedom map".into(), Replacement::media("figures/freedom.svg"));
    r.insert("fluidity map".into(), Replacement::media("figures/fluidity.svg"));
    r.insert(
        "median freedom".into(),
        Replacement::text(fmt2(median(a.metrics.iter().filter_map(|m| m.freedom.as_ref().map(|s| s.value))))),
    );
    r.insert(
        "median fluidity".into(),
        Replacement::text(fmt2(median(a.metrics.iter().filter_map(|m| m.fluidity.as_ref().map(|s| s.value))))),
    );

    let points = quadrant_points(a);
    let mut sequences = Vec::new();
    if !points.is_empty() {
        r.insert("quadrant chart".into(), Replacement::media("figures/quadrant.svg"));
        let q = QuadrantSpec::new(points.clone());
        let instances = callouts
            .iter()
            .filter_map(|id| {
                let p = points.iter().find(|p| p.workgroup_id == *id)?;
                let quadrant: Quadrant = q.quadrant_of(p);
                Some(BTreeMap::from([
                    ("workgroup id".to_string(), Replacement::text(id.to_string())),
                    ("workgroup map".to_string(), Replacement::media(format!("figures/workgroup_{id}.svg"))),
                    ("workgroup size".to_string(), Replacement::text(p.size.to_string())),
                    ("workgroup freedom".to_string(), Replacement::text(format!("{:.2}", p.freedom))),
                    ("workgroup fluidity".to_string(), Replacement::text(format!("{:.2}", p.fluidity))),
                    ("workgroup quadrant".to_string(), Replacement::text(quadrant.default_caption())),
                ]))
            })
            .collect();
        sequences.push(Sequence { slide_ids: vec!["workgroup".into()], instances });
    } else {
        // nothing to chart: drop the chart and the per-workgroup run
        r.insert("quadrant chart".into(), Replacement::text("Not enough metric coverage for a quadrant chart"));
        sequences.push(Sequence { slide_ids: vec!["workgroup".into()], instances: Vec::new() });
    }
    StampSpec { replacements: r, sequences, ..StampSpec::default() }
}

fn deck_stage(cfg: &PipelineConfig, a: &Analysis, theme: &Theme, callouts: &[usize], w: &mut Writer) -> Result<()> {
    let auto = auto_spec(a, callouts);
    let (template, spec, base) = match (&cfg.template, &cfg.stamp_spec) {
        (Some(t), s) => {
            let template = DeckTemplate::from_json(&read_text(t)?)?;
            let mut spec = match s {
                Some(p) => StampSpec::from_json(&read_text(p)?)?,
                None => StampSpec { sequences: auto.sequences.clone(), ..StampSpec::default() },
            };
            // user replacements win over generated ones
            for (k, v) in auto.replacements {
                spec.replacements.entry(k).or_insert(v);
            }
            spec.sequences.retain(|s| s.slide_ids.iter().all(|id| template.slide(id).is_some()));
            (template, spec, t.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        (None, _) => (default_template(), auto, PathBuf::new()),
    };
    // generated figures live in the output directory, user media next to the template
    let mut media = BTreeMap::new();
    for p in media_paths(&template, &spec) {
        let found = [w.dir.join(&p), base.join(&p)].into_iter().find_map(|f| std::fs::read(f).ok());
        if let Some(bytes) = found {
            media.insert(p, bytes);
        }
    }
    let deck = stamp(&template, &spec, &media, Some(theme))?;
    w.put("deck.json", "deck", deck.to_json().as_bytes())?;
    w.put("deck.html", "deck", render_deck_html(&deck).as_bytes())?;
    Ok(())
}
