use std::net::SocketAddr;

use mosbench_server::{serve, AppState, ServerConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, ServeArgs};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const TOKEN_ENV: &str = "MOSBENCH_ADMIN_TOKEN";

pub fn run(common: &CommonArgs, args: &ServeArgs, config: &RunConfig) -> Result<(), CliError> {
    let store_dir = args
        .store
        .clone()
        .or(config.serve.store.clone())
        .or(common.out.clone())
        .or(config.out.clone())
        .ok_or_else(|| CliError::Usage("--store or --out is required".into()))?;
    let addr = args
        .addr
        .clone()
        .or(config.serve.addr.clone())
        .unwrap_or_else(|| DEFAULT_ADDR.into());
    let addr: SocketAddr = addr
        .parse()
        .map_err(|e| CliError::Usage(format!("listen address {addr:?}: {e}")))?;
    let admin_token = args
        .admin_token
        .clone()
        .or(config.serve.admin_token.clone())
        .or_else(|| std::env::var(TOKEN_ENV).ok());
    if admin_token.is_none() {
        tracing::warn!("no admin token; anyone can create studies");
    }

    let state = AppState::open(&ServerConfig { store_dir, admin_token }).map_err(CliError::Input)?;
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
    runtime.block_on(serve(addr, state)).map_err(CliError::Serve)
}
