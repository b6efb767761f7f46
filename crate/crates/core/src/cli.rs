//! Command-line front end. `main.rs` only forwards to [`run_cli`].

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::community::{
    default_candidate_sizes, detect_hierarchy_with, format_hierarchy_csv, parse_leaf_partition, sweep_and_elbow_with,
    HierarchyConfig, Quality,
};
use crate::deck::{load_media, render_deck_html, stamp, validate_spec, DeckTemplate, StampSpec};
use crate::embedding::{embed_series, AdjacencyWeighting, EmbedOptions};
use crate::error::{Error, Result};
use crate::graph::{format_edge_list, read_edge_list, read_org_csv, write_org_csv, OrgTree};
use crate::ingest::{
    format_messages_csv, induce_series, months_in, pseudonymize, read_messages, select_snapshot, LongitudinalRule,
    MonthlySeries, Thresholds,
};
use crate::layout::{format_positions_csv, layout_pipeline, parse_positions_csv, LayoutConfig};
use crate::metrics::{compute_metrics, format_metrics_csv, format_metrics_detail_csv, parse_metrics_csv, workgroups};
use crate::month::Month;
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::render::{render_map, render_quadrant, spread_to_members, Coloring, MapSpec, QuadrantPoint, QuadrantSpec};
use crate::synthesis::{synthesize, synthesize_activity, ActivityConfig, SynthConfig};
use crate::theme::{Mode, SliderState, Theme};

#[derive(Debug, Parser)]
#[command(name = "orgmap", version, about = "Workgroup maps, freedom and fluidity from collaboration logs")]
pub struct Cli {
    /// Global seed; every stage derives its own from this.
    #[arg(long, env = "ORGMAP_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InductionArgs {
    /// Message log (CSV or JSON lines).
    #[arg(long)]
    pub messages: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub min_total: u32,
    #[arg(long, default_value_t = 1)]
    pub min_each_direction: u32,
    /// Comma-separated YYYY-MM list; defaults to every month in the log.
    #[arg(long, value_delimiter = ',')]
    pub months: Vec<Month>,
    #[arg(long)]
    pub hash_salt: Option<String>,
}

impl InductionArgs {
    fn series(&self) -> Result<MonthlySeries> {
        let log = read_messages(&self.messages)?;
        if !log.rejected.is_empty() {
            log::warn!("{} message rows rejected", log.rejected.len());
        }
        let records = match &self.hash_salt {
            Some(salt) => pseudonymize(&log.records, salt),
            None => log.records,
        };
        let months = if self.months.is_empty() { months_in(&records) } else { self.months.clone() };
        let rule = LongitudinalRule {
            thresholds: Thresholds { min_total: self.min_total, min_each_direction: self.min_each_direction },
            scale_with_months: true,
        };
        induce_series(&records, &months, rule)
    }
}

#[derive(Debug, Args, Default)]
pub struct SliderArgs {
    /// Slider state JSON; individual flags override it.
    #[arg(long)]
    pub sliders: Option<PathBuf>,
    #[arg(long)]
    pub accent_hue: Option<f64>,
    #[arg(long)]
    pub accent_saturation: Option<f64>,
    #[arg(long)]
    pub accent_lightness: Option<f64>,
    #[arg(long)]
    pub background_level: Option<f64>,
    #[arg(long)]
    pub background_hue_shift: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub nominal_scale_step: Option<i64>,
    #[arg(long)]
    pub dark: bool,
}

impl SliderArgs {
    fn state(&self) -> Result<SliderState> {
        let mut s = match &self.sliders {
            Some(p) => serde_json::from_str(&read_text(p)?)?,
            None => SliderState::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut s.accent_hue, self.accent_hue);
        set(&mut s.accent_saturation, self.accent_saturation);
        set(&mut s.accent_lightness, self.accent_lightness);
        set(&mut s.background_level, self.background_level);
        set(&mut s.background_hue_shift, self.background_hue_shift);
        if let Some(v) = self.nominal_scale_step {
            s.nominal_scale_step = v;
        }
        if self.dark {
            s.mode = Mode::Dark;
        }
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build monthly and whole-period collaboration graphs from a message log.
    Induce {
        #[command(flatten)]
        induction: InductionArgs,
        /// Also write one edge list per month here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Whole-period edge list (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hierarchical workgroup detection on an edge list.
    #[command(group(ArgGroup::new("size").required(true).args(["max_size", "sweep"])))]
    Communities {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        max_size: Option<usize>,
        /// Pick the size at the elbow of the size/modularity curve.
        #[arg(long)]
        sweep: bool,
        /// Where to write the sweep curve.
        #[arg(long, requires = "sweep")]
        elbow_out: Option<PathBuf>,
        /// modularity or cpm.
        #[arg(long, default_value = "modularity")]
        quality: Quality,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Freedom and fluidity per workgroup.
    Metrics {
        #[command(flatten)]
        induction: InductionArgs,
        /// Partition CSV; the last column is the leaf workgroup.
        #[arg(long)]
        communities: PathBuf,
        #[arg(long)]
        org: PathBuf,
        /// Per-month detail CSV.
        #[arg(long)]
        detail: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic network, message log and org snapshots.
    Synth {
        /// Network settings JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Activity settings JSON.
        #[arg(long)]
        activity: Option<PathBuf>,
        #[arg(long)]
        months: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Node positions for an edge list.
    Layout {
        #[arg(long)]
        network: PathBuf,
        /// Layout settings JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Network map or quadrant chart as SVG.
    Render {
        /// Theme JSON; built from slider flags when absent.
        #[arg(long)]
        theme: Option<PathBuf>,
        #[command(flatten)]
        sliders: SliderArgs,
        /// Metrics CSV, used by --color-by and --quadrant.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Draw the freedom/fluidity quadrant chart instead of a map.
        #[arg(long, requires = "metrics")]
        quadrant: bool,
        #[arg(long, required_unless_present = "quadrant")]
        network: Option<PathBuf>,
        #[arg(long, required_unless_present = "quadrant")]
        communities: Option<PathBuf>,
        /// Positions CSV; computed when absent.
        #[arg(long)]
        positions: Option<PathBuf>,
        /// freedom or fluidity.
        #[arg(long, requires = "metrics")]
        color_by: Option<String>,
        #[arg(long)]
        highlight: Option<usize>,
        /// Draw edges under the nodes.
        #[arg(long)]
        links: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theme JSON from slider settings.
    Theme {
        #[command(flatten)]
        sliders: SliderArgs,
        /// Flip light/dark.
        #[arg(long)]
        invert: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fill a deck template from a replacement spec.
    Stamp {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Theme JSON; overrides the stamp spec's themeRef.
        #[arg(long)]
        theme: Option<PathBuf>,
        /// Base directory for media paths (defaults to the stamp spec's directory).
        #[arg(long)]
        media_dir: Option<PathBuf>,
        /// Only report problems with the stamp spec.
        #[arg(long)]
        validate: bool,
        #[arg(long, required_unless_present = "validate")]
        out_dir: Option<PathBuf>,
    },
    /// Every stage from message log to deck.
    Pipeline {
        /// Pipeline config JSON; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        messages: Option<PathBuf>,
        #[arg(long)]
        org: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        months: Vec<Month>,
        #[arg(long)]
        min_total: Option<u32>,
        #[arg(long)]
        min_each_direction: Option<u32>,
        #[arg(long)]
        hash_salt: Option<String>,
        #[arg(long, conflicts_with = "sweep")]
        max_size: Option<usize>,
        #[arg(long)]
        sweep: bool,
        #[arg(long)]
        layout_seed: Option<u64>,
        #[arg(long)]
        theme: Option<PathBuf>,
        #[arg(long)]
        sliders: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// HTTP service for theme computation and previews.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, dest: Option<&Path>, text: &str) -> Result<()> {
    match dest {
        Some(p) => write_file(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_theme(path: Option<&Path>, sliders: &SliderArgs) -> Result<Theme> {
    match path {
        Some(p) => Theme::from_json(&read_text(p)?),
        None => Ok(Theme::from_sliders(&sliders.state()?)),
    }
}

/// Parse `args` and run, writing command output to `out`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    run(cli, out)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            // StdoutLock is not Send; buffer inside the pool
            let mut buf = Vec::new();
            pool.install(|| dispatch(cli.seed, cli.command, &mut buf))?;
            out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))
        }
        None => dispatch(cli.seed, cli.command, out),
    }
}

fn dispatch(seed: u64, command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Induce { induction, out_dir, out: dest } => {
            let series = induction.series()?;
            if let Some(dir) = out_dir {
                for (m, g) in &series.graphs {
                    write_file(&dir.join(format!("{m}.csv")), format_edge_list(g).as_bytes())?;
                }
            }
            emit(out, dest.as_deref(), &format_edge_list(&series.longitudinal))
        }
        Command::Communities { network, max_size, sweep, elbow_out, quality, out: dest } => {
            let g = read_edge_list(&network)?;
            let size = match max_size {
                Some(m) if !sweep => m,
                _ => {
                    let sizes = default_candidate_sizes(g.node_count());
                    let (curve, chosen) = sweep_and_elbow_with(&g, &sizes, seed, quality)?;
                    log::info!("elbow at max size {chosen}");
                    if let Some(p) = elbow_out {
                        let mut csv = String::from("max_size,leaf_modularity\n");
                        for (s, q) in &curve.points {
                            csv.push_str(&format!("{s},{q}\n"));
                        }
                        write_file(&p, csv.as_bytes())?;
                    }
                    chosen
                }
            };
            let h = detect_hierarchy_with(&g, &HierarchyConfig::new(size, seed).quality(quality))?;
            emit(out, dest.as_deref(), &format_hierarchy_csv(&h))
        }
        Command::Metrics { induction, communities, org, detail, out: dest } => {
            let series = induction.series()?;
            let leaf = parse_leaf_partition(open(&communities)?)?;
            let graphs = series.ordered();
            let embeddings = if graphs.len() >= 2 {
                embed_series(&graphs, AdjacencyWeighting::Binary, &EmbedOptions::default())?
            } else {
                Vec::new()
            };
            let trees = read_org_csv(&org)?;
            let mut chosen: Vec<OrgTree> = Vec::new();
            for m in &series.months {
                if let Some(t) = select_snapshot(&trees, *m) {
                    if !chosen.iter().any(|c| c.snapshot_date() == t.snapshot_date()) {
                        chosen.push(t.clone());
                    }
                }
            }
            let rows = compute_metrics(&workgroups(&leaf), &embeddings, &chosen);
            if let Some(p) = detail {
                write_file(&p, format_metrics_detail_csv(&rows).as_bytes())?;
            }
            emit(out, dest.as_deref(), &format_metrics_csv(&rows))
        }
        Command::Synth { config, activity, months, out_dir } => {
            let cfg: SynthConfig = match config {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => SynthConfig::default(),
            };
            let mut act: ActivityConfig = match activity {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => ActivityConfig::default(),
            };
            act.seed = seed;
            if let Some(m) = months {
                act.months = m;
            }
            let s = synthesize(&cfg.with_seed(seed))?;
            let a = synthesize_activity(&s, &act)?;
            write_file(&out_dir.join("network.csv"), format_edge_list(&s.graph).as_bytes())?;
            write_file(&out_dir.join("planted.csv"), format_hierarchy_csv(&s.planted).as_bytes())?;
            write_file(&out_dir.join("messages.csv"), format_messages_csv(&a.messages).as_bytes())?;
            write_file(&out_dir.join("org.csv"), write_org_csv(&a.org).as_bytes())?;
            writeln!(
                out,
                "{} people, {} edges, {} messages over {} months",
                s.graph.node_count(),
                s.graph.edge_count(),
                a.messages.len(),
                act.months
            )
            .map_err(|e| Error::io("<stdout>", e))
        }
        Command::Layout { network, config, out: dest } => {
            let g = read_edge_list(&network)?;
            let cfg: LayoutConfig = match config {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => LayoutConfig::default(),
            };
            let l = layout_pipeline(&g, &cfg.with_seed(seed))?;
            emit(out, dest.as_deref(), &format_positions_csv(&l))
        }
        Command::Render {
            theme,
            sliders,
            metrics,
            quadrant,
            network,
            communities,
            positions,
            color_by,
            highlight,
            links,
            out: dest,
        } => {
            let theme = load_theme(theme.as_deref(), &sliders)?;
            let rows = match &metrics {
                Some(p) => parse_metrics_csv(open(p)?)?,
                None => Vec::new(),
            };
            if quadrant {
                let points: Vec<QuadrantPoint> = rows
                    .iter()
                    .filter_map(|&(id, size, fr, fl)| {
                        Some(QuadrantPoint { workgroup_id: id, freedom: fr?, fluidity: fl?, size })
                    })
                    .collect();
                if points.is_empty() {
                    return Err(Error::InvalidParameter("no workgroup has both metrics".into()));
                }
                return emit(out, dest.as_deref(), &render_quadrant(&QuadrantSpec::new(points), &theme));
            }
            let (network, communities) = network.zip(communities).expect("clap requires both");
            let g = read_edge_list(&network)?;
            let leaf = parse_leaf_partition(open(&communities)?)?;
            let layout = match positions {
                Some(p) => parse_positions_csv(open(&p)?)?,
                None => layout_pipeline(&g, &LayoutConfig::default().with_seed(seed))?,
            };
            let mut values = BTreeMap::new();
            let by = |pick: fn(&(usize, usize, Option<f64>, Option<f64>)) -> Option<f64>| {
                rows.iter().map(|r| (r.0, pick(r))).collect::<BTreeMap<usize, Option<f64>>>()
            };
            values.insert("freedom".to_string(), spread_to_members(&leaf, &by(|r| r.2)));
            values.insert("fluidity".to_string(), spread_to_members(&leaf, &by(|r| r.3)));
            let spec = MapSpec {
                coloring: color_by.map_or(Coloring::Nominal, Coloring::Sequential),
                highlight,
                links: links.then_some(&g),
                ..MapSpec::nominal(&layout, &leaf, &values)
            };
            emit(out, dest.as_deref(), &render_map(&spec, &theme)?)
        }
        Command::Theme { sliders, invert, out: dest } => {
            let mut theme = Theme::from_sliders(&sliders.state()?);
            if invert {
                theme = theme.inverted();
            }
            emit(out, dest.as_deref(), &theme.to_json())
        }
        Command::Stamp { template, spec, theme, media_dir, validate, out_dir } => {
            let tpl = DeckTemplate::from_json(&read_text(&template)?)?;
            let spec_dir = spec.as_deref().and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
            let spec = match &spec {
                Some(p) => StampSpec::from_json(&read_text(p)?)?,
                None => StampSpec::default(),
            };
            if validate {
                let report = validate_spec(&tpl, &spec);
                let json = serde_json::to_string_pretty(&report)?;
                writeln!(out, "{json}").map_err(|e| Error::io("<stdout>", e))?;
                return if report.is_ok() { Ok(()) } else { Err(Error::UnresolvedTags(report.unresolved_tags)) };
            }
            let theme = match (theme, &spec.theme_ref) {
                (Some(p), _) => Some(Theme::from_json(&read_text(&p)?)?),
                (None, Some(r)) => Some(Theme::from_json(&read_text(&spec_dir.join(r))?)?),
                (None, None) => None,
            };
            let base = media_dir.unwrap_or(spec_dir);
            let media = load_media(&tpl, &spec, &base)?;
            let deck = stamp(&tpl, &spec, &media, theme.as_ref())?;
            let dir = out_dir.expect("clap requires out-dir");
            write_file(&dir.join("deck.json"), deck.to_json().as_bytes())?;
            write_file(&dir.join("deck.html"), render_deck_html(&deck).as_bytes())
        }
        Command::Pipeline {
            config,
            messages,
            org,
            months,
            min_total,
            min_each_direction,
            hash_salt,
            max_size,
            sweep,
            layout_seed,
            theme,
            sliders,
            template,
            spec,
            out_dir,
        } => {
            let mut cfg: PipelineConfig = match config {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => PipelineConfig { seed, ..PipelineConfig::default() },
            };
            if std::env::var_os("ORGMAP_SEED").is_some() || seed != 0 {
                cfg.seed = seed;
            }
            macro_rules! over {
                ($field:ident, $v:expr) => {
                    if let Some(v) = $v {
                        cfg.$field = v;
                    }
                };
            }
            over!(messages, messages);
            over!(org, org);
            over!(min_total, min_total);
            over!(min_each_direction, min_each_direction);
            over!(out_dir, out_dir);
            if !months.is_empty() {
                cfg.months = Some(months);
            }
            if hash_salt.is_some() {
                cfg.hash_salt = hash_salt;
            }
            if max_size.is_some() {
                cfg.max_size = max_size;
                cfg.sweep = false;
            }
            cfg.sweep |= sweep;
            if layout_seed.is_some() {
                cfg.layout_seed = layout_seed;
            }
            if let Some(p) = sliders {
                cfg.sliders = serde_json::from_str(&read_text(&p)?)?;
            }
            if theme.is_some() {
                cfg.theme = theme;
            }
            if template.is_some() {
                cfg.template = template;
            }
            if spec.is_some() {
                cfg.stamp_spec = spec;
            }
            let manifest = run_pipeline(&cfg)?;
            writeln!(
                out,
                "{} artifacts in {} ({} people, {} workgroups)",
                manifest.artifacts.len(),
                cfg.out_dir.display(),
                manifest.people,
                manifest.workgroups
            )
            .map_err(|e| Error::io("<stdout>", e))
        }
        Command::Serve { host, port } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            rt.block_on(crate::service::serve(SocketAddr::new(host, port))).map_err(|e| Error::io("<socket>", e))
        }
    }
}
