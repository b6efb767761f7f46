use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use orgmap::render::svg_fills;
use orgmap::theme::Theme;
use tower::ServiceExt;

async fn call(req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, String) {
    let resp = orgmap::service::router().oneshot(req).await.unwrap();
    let (parts, body) = resp.into_parts();
    let bytes = body.collect().await.unwrap().to_bytes();
    (parts.status, parts.headers, String::from_utf8(bytes.to_vec()).unwrap())
}

fn post(body: &str) -> Request<Body> {
    Request::post("/theme")
        .header(header::CONTENT_TYPE, "application/json")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::from(body.to_string()))
        .unwrap()
}

#[tokio::test]
async fn theme_matches_cli_output() {
    let (status, headers, body) = call(post("{}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "application/json");
    assert!(headers.contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
    let mut cli = Vec::new();
    orgmap::cli::run_cli(["orgmap", "theme"], &mut cli).unwrap();
    assert_eq!(body.as_bytes(), cli.as_slice());
    let (_, _, empty) = call(post("")).await;
    assert_eq!(empty, body);
}

#[tokio::test]
async fn out_of_range_sliders_are_clamped_with_warnings() {
    let (status, _, body) = call(post(r#"{"accentHue": 400, "nominalScaleStep": 99, "mode": "dark"}"#)).await;
    assert_eq!(status, StatusCode::OK);
    let theme = Theme::from_json(&body).unwrap();
    assert_eq!(theme.warnings.len(), 2);
    assert_eq!(theme.sliders.accent_hue, 360.0);
    assert_eq!(theme.sliders.nominal_scale_step, orgmap::theme::MAX_STEP);
}

#[tokio::test]
async fn malformed_bodies_are_rejected() {
    for body in ["{", r#"{"accentHue": "red"}"#, r#"{"hue": 10}"#, r#"{"mode": "sepia"}"#] {
        let (status, _, text) = call(post(body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn health_and_sample() {
    let (status, _, text) = call(Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!((status, text.as_str()), (StatusCode::OK, "ok"));

    let (status, headers, svg) =
        call(Request::get("/sample/network.svg?accentHue=30&mode=dark").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "image/svg+xml");
    let theme = Theme::from_sliders(&orgmap::theme::SliderState {
        accent_hue: 30.0,
        mode: orgmap::theme::Mode::Dark,
        ..Default::default()
    });
    let fills = svg_fills(&svg);
    assert_eq!(fills[0], theme.colors.background);
    assert!(fills[1..].iter().all(|c| theme.colors.nominal.contains(c)));
    assert!(svg.contains("<line"));

    let (status, _, _) = call(Request::get("/sample/network.svg?accentHue=x").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn preflight_is_allowed() {
    let req = Request::options("/theme")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let (status, headers, _) = call(req).await;
    assert!(status.is_success());
    assert!(headers.contains_key(header::ACCESS_CONTROL_ALLOW_METHODS));
}
