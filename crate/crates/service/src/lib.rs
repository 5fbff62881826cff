//! HTTP facade over the annotation engine.
//!
//! Every response body is JSON `{"revision": r, "data": ...}` except imagery, which is
//! PNG. Mutating requests must send the current revision in `If-Match`; a missing
//! header is answered with 428 and a stale one with 409.

use std::net::SocketAddr;
use std::path::Path;

pub mod error;
pub mod extract;
mod routes;
pub mod state;

pub use error::ApiError;
pub use routes::router;
pub use state::AppState;

/// Opens the project at `root`, holds its writer lock and serves until Ctrl-C.
pub async fn serve(root: &Path, addr: SocketAddr) -> std::io::Result<()> {
    let state = AppState::open(root).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
