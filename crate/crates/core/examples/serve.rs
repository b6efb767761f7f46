//! Theme service on 127.0.0.1:8080 (or the port given as the first argument).
//!
//!     curl -X POST localhost:8080/theme -d '{"accentHue": 30}'
//!     curl 'localhost:8080/sample/network.svg?mode=dark' > sample.svg

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let port = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(8080);
    orgmap::service::serve(([127, 0, 0, 1], port).into()).await
}
