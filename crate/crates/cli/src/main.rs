use std::process::ExitCode;

use clap::Parser;
use gazenav_cli::args::ServeArgs;
use gazenav_cli::commands::{load_config, resolve_models};
use gazenav_cli::serve::{serve, ServeOptions};
use gazenav_cli::{execute, Cli, CliError, CliResult, Command};
use gazenav_core::world::Scenario;

fn run_serve(a: &ServeArgs) -> CliResult<()> {
    if a.models.is_some() && a.model_seed.is_some() {
        return Err(CliError::usage("--model-seed only applies without --models"));
    }
    let config = load_config(a.config.as_deref())?;
    let scenario = Scenario::load(&a.scenario)?;
    let models = resolve_models(a.models.as_deref(), a.model_seed)?;
    let seed = a.seed.unwrap_or(scenario.rng_seed);
    let opts = ServeOptions { scenario, models, config, seed };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new("io", e.to_string()))?;
    rt.block_on(async {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::new("io", format!("{addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::new("io", e.to_string()))?;
        println!("{}", serde_json::json!({ "listening": format!("ws://{local}/ws") }));
        serve(listener, opts).await
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Serve(a) => run_serve(a).map(|_| String::new()),
        cmd => execute(cmd),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
