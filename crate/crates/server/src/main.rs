use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use modstat_core::commands::{CommandRegistry, Env};
use modstat_core::par::Parallelism;
use modstat_core::registry::load_manifest;
use modstat_core::transcription::{dsl_string, render_report, RenderedStatement, Script};
use modstat_server::{serve, ServerConfig, DEFAULT_UPLOAD_LIMIT};

#[derive(Parser)]
#[command(name = "modstat", version, about = "Point-and-click statistics that writes its own script")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the web service.
    Serve {
        #[arg(long)]
        modules_dir: PathBuf,
        /// Comma-separated module ids; data/sources is always served.
        #[arg(long, value_delimiter = ',')]
        enable: Option<Vec<String>>,
        #[arg(long, default_value = "default")]
        theme: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Idle time before a session is dropped, e.g. `30m` or `2h`.
        #[arg(long, default_value = "2h", value_parser = humantime::parse_duration)]
        session_ttl: Duration,
        /// Largest accepted request body, in bytes.
        #[arg(long, default_value_t = DEFAULT_UPLOAD_LIMIT)]
        max_upload: usize,
    },
    /// Check a module manifest.
    Validate { manifest: PathBuf },
    /// Replay a script against a CSV file and write the report.
    Report {
        script: PathBuf,
        csv: PathBuf,
        /// Output directory for report.md and its images.
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Leave the code out of the report.
        #[arg(long)]
        no_code: bool,
        /// Render on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { modules_dir, enable, theme, port, session_ttl, max_upload } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config =
                ServerConfig { modules_dir, enabled: enable, theme, port, session_ttl, upload_limit: max_upload };
            tokio::runtime::Runtime::new()
                .map_err(|e| e.to_string())
                .and_then(|rt| rt.block_on(serve(config)).map_err(|e| e.to_string()))
        }
        Command::Validate { manifest } => validate(&manifest),
        Command::Report { script, csv, out, no_code, sequential } => {
            let mode = if sequential { Parallelism::Sequential } else { Parallelism::Parallel };
            report(&script, &csv, &out, !no_code, mode)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn validate(path: &Path) -> Result<(), String> {
    let m = load_manifest(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("ok {} ({} inputs, {} outputs)", m.id(), m.inputs.len(), m.outputs.len());
    Ok(())
}

fn report(script_path: &Path, csv: &Path, out: &Path, include_code: bool, mode: Parallelism) -> Result<(), String> {
    let text = String::from_utf8(read(script_path)?).map_err(|_| "script is not valid UTF-8".to_string())?;
    let mut script = Script::from_text(&text, |_| "script".into())
        .map_err(|e| format!("{}: line {}, column {}: {}", script_path.display(), e.line, e.column, e.message))?;
    let filename = match script.data_file() {
        Some(f) => f,
        None => {
            let name = csv.file_name().map_or("data.csv".into(), |n| n.to_string_lossy().into_owned());
            let text = format!("load_data({})", dsl_string(&name));
            script.preamble.insert(0, RenderedStatement { text, module_id: "data/sources".into(), produced_at: 0 });
            name
        }
    };
    let env = Env::with_file(filename, read(csv)?);
    let doc = render_report(&script, &env, &CommandRegistry::builtin(), include_code, mode)
        .map_err(|e| format!("{}: {e}", script_path.display()))?;
    std::fs::create_dir_all(out.join("images")).map_err(|e| format!("{}: {e}", out.display()))?;
    for (rel, svg) in &doc.images {
        let path = out.join(rel);
        std::fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let md = out.join("report.md");
    std::fs::write(&md, doc.to_markdown()).map_err(|e| format!("{}: {e}", md.display()))?;
    println!("wrote {} ({} results, {} images)", md.display(), doc.blocks.len(), doc.images.len());
    Ok(())
}
