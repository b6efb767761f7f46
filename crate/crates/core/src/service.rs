//! HTTP front for theme editing: slider state in, theme JSON out, plus a
//! sample map so an editor can preview the palette on a real layout.

use std::net::SocketAddr;
use std::sync::OnceLock;

use axum::body::Bytes;
use axum::extract::{Query, RawQuery};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::community::Partition;
use crate::graph::CollabGraph;
use crate::layout::{layout_pipeline, LayoutConfig, LayoutResult};
use crate::render::{render_map, MapSpec};
use crate::synthesis::{synthesize, SynthConfig};
use crate::theme::{SliderState, Theme};

const SAMPLE_SEED: u64 = 7;

pub struct SampleNetwork {
    pub graph: CollabGraph,
    pub communities: Partition,
    pub layout: LayoutResult,
}

/// Small fixed synthetic network, laid out once per process.
pub fn sample_network() -> &'static SampleNetwork {
    static SAMPLE: OnceLock<SampleNetwork> = OnceLock::new();
    SAMPLE.get_or_init(|| {
        let cfg = SynthConfig {
            top_level_communities: 6,
            size_range: (8, 30),
            hierarchy_depth: 1,
            ..SynthConfig::default().with_seed(SAMPLE_SEED)
        };
        let s = synthesize(&cfg).expect("sample config is valid");
        let layout = layout_pipeline(&s.graph, &LayoutConfig::default().with_seed(SAMPLE_SEED))
            .expect("sample layout converges");
        SampleNetwork { communities: s.planted.leaf().clone(), graph: s.graph, layout }
    })
}

pub fn sample_svg(theme: &Theme) -> String {
    let s = sample_network();
    let metrics = Default::default();
    let spec = MapSpec { links: Some(&s.graph), ..MapSpec::nominal(&s.layout, &s.communities, &metrics) };
    render_map(&spec, theme).expect("nominal maps need no metrics")
}

fn bad_request(msg: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": msg.into() }))).into_response()
}

fn theme_response(theme: &Theme) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], theme.to_json()).into_response()
}

async fn post_theme(body: Bytes) -> Response {
    let text = String::from_utf8_lossy(&body);
    let sliders: SliderState = if text.trim().is_empty() {
        SliderState::default()
    } else {
        match serde_json::from_str(&text) {
            Ok(s) => s,
            Err(e) => return bad_request(format!("invalid slider state: {e}")),
        }
    };
    theme_response(&Theme::from_sliders(&sliders))
}

async fn sample(RawQuery(raw): RawQuery) -> Response {
    let sliders = match raw.as_deref() {
        None | Some("") => SliderState::default(),
        Some(q) => match Query::<SliderState>::try_from_uri(&format!("/?{q}").parse().expect("valid uri")) {
            Ok(Query(s)) => s,
            Err(e) => return bad_request(format!("invalid slider query: {e}")),
        },
    };
    let svg = sample_svg(&Theme::from_sliders(&sliders));
    ([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response()
}

async fn health() -> &'static str {
    "ok"
}

pub fn router() -> Router {
    Router::new()
        .route("/theme", post(post_theme))
        .route("/sample/network.svg", get(sample))
        .route("/health", get(health))
        .layer(CorsLayer::permissive())
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router()).await
}
