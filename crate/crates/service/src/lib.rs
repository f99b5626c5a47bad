//! HTTP service for adaptive lecture sessions.
//!
//! Sessions are event-sourced: every mutation appends to a per-session
//! JSONL log, and [`Store::open`] rebuilds in-memory state by replaying the
//! logs found in the data directory.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, AppState};
pub use store::{bank_id, Store, StoreError};

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let store = Store::open(&data_dir).map_err(std::io::Error::other)?;
    for f in store.load_failures() {
        eprintln!("skipping {}: {}", f.path.display(), f.reason);
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await
}
