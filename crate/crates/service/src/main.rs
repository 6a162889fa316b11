use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use tracing_subscriber::EnvFilter;

use grantmatch_service::{config_from_env, router, AppState};

const USAGE: &str = "usage: grantmatch-server [--config <file>]\n\n\
Environment: GRANTMATCH_CONFIG, GRANTMATCH_BIND, GRANTMATCH_CORPUS,\n\
GRANTMATCH_TABLE, GRANTMATCH_ANALYSIS, GRANTMATCH_THRESHOLD, RUST_LOG";

fn config_arg() -> anyhow::Result<Option<PathBuf>> {
    let mut args = std::env::args().skip(1);
    match (args.next().as_deref(), args.next()) {
        (None, _) => Ok(None),
        (Some("--config"), Some(path)) => Ok(Some(path.into())),
        (Some("-h" | "--help"), _) => {
            println!("{USAGE}");
            std::process::exit(0);
        }
        _ => anyhow::bail!("{USAGE}"),
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();

    let config = config_from_env(config_arg()?.as_deref())?;
    let bind = config.bind.clone();
    let state = tokio::task::spawn_blocking(move || AppState::from_config(config)).await??;
    let snapshot = state.snapshot();
    tracing::info!(
        grants = snapshot.grants.len(),
        researchers = snapshot.researchers.len(),
        "channel scores ready"
    );

    let listener = tokio::net::TcpListener::bind(&bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
