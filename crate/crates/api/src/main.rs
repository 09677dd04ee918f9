use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diethelper_api::ServiceConfig;
use tracing_subscriber::EnvFilter;

/// Diet Helper HTTP service.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    /// TOML configuration file; DIETHELPER_* environment variables override it.
    #[arg(long, env = "DIETHELPER_CONFIG")]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stdout)
        .init();

    let args = Args::parse();
    let result = match ServiceConfig::load(args.config.as_deref()) {
        Ok(config) => diethelper_api::serve(config).await,
        Err(e) => Err(e.into()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(error = format!("{e:#}"), "startup failed");
            eprintln!("diethelper-api: {e:#}");
            ExitCode::FAILURE
        }
    }
}
