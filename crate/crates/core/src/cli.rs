// SPDX-License-Identifier: Apache-2.0

//! `mudkit` command line.
//!
//! Exit status: 0 when no error finding was produced, 1 when one was, 2 for usage
//! and I/O failures.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::acetree::merge;
use crate::context::{bind_files, DeploymentContext};
use crate::finding::{count_errors, Finding, FindingCode};
use crate::graph::{export_graph, to_graph, ExportFormat};
use crate::model::{DeviceId, MudFile};
use crate::parser::{parse_mud_file, ParseResult};
use crate::service::{self, ServiceConfig, DEFAULT_MAX_BODY};
use crate::summary::summarize;

#[derive(Debug, Parser)]
#[command(
    name = "mudkit",
    version,
    about = "Validate, merge and review MUD files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check MUD files and report findings per file.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Merge MUD files over a deployment and export the flow graph.
    Merge {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Deployment context JSON. Without it every file becomes one device.
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
        /// Write the graph here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print what a device is allowed to talk to.
    Summarize {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Device to summarize. Defaults to every device.
        #[arg(long)]
        device: Option<String>,
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        listen_address: IpAddr,
        /// Persist the workspace to this JSON file.
        #[arg(long)]
        workspace: Option<PathBuf>,
        /// Serve web UI assets from this directory at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Upload size limit in bytes.
        #[arg(long, default_value_t = DEFAULT_MAX_BODY)]
        max_body: usize,
        /// Allow cross-origin requests from a UI dev server.
        #[arg(long)]
        dev: bool,
        /// Origin allowed in dev mode.
        #[arg(
            long,
            default_value = "http://localhost:5173",
            env = "MUDKIT_DEV_ORIGIN"
        )]
        dev_origin: String,
    },
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MUDKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mudkit: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    let errors = match cli.command {
        Command::Validate { paths, format } => validate(&paths, format, &mut out)?,
        Command::Merge {
            paths,
            context,
            format,
            out: target,
        } => merge_cmd(
            &paths,
            context.as_deref(),
            format,
            target.as_deref(),
            &mut out,
        )?,
        Command::Summarize {
            paths,
            device,
            context,
            format,
        } => summarize_cmd(&paths, device, context.as_deref(), format, &mut out)?,
        Command::Serve {
            port,
            listen_address,
            workspace,
            static_dir,
            max_body,
            dev,
            dev_origin,
        } => {
            let config = ServiceConfig {
                max_body,
                static_dir,
                workspace_path: workspace,
                cors_origin: dev.then_some(dev_origin),
            };
            serve(SocketAddr::new(listen_address, port), config)?;
            0
        }
    };
    Ok(if errors == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn read_and_parse(path: &Path) -> ParseResult {
    match std::fs::read(path) {
        Ok(bytes) => parse_mud_file(&bytes),
        Err(e) => ParseResult {
            file: None,
            findings: vec![Finding::protocol_error(
                FindingCode::UnreadableFile,
                format!("cannot read {}: {e}", path.display()),
            )],
        },
    }
}

fn plural(n: usize, word: &str) -> String {
    format!("{n} {word}{}", if n == 1 { "" } else { "s" })
}

fn validate(paths: &[PathBuf], format: ReportFormat, out: &mut impl Write) -> Result<usize> {
    let results: Vec<(&PathBuf, ParseResult)> =
        paths.iter().map(|p| (p, read_and_parse(p))).collect();
    let total: usize = results.iter().map(|(_, r)| count_errors(&r.findings)).sum();
    match format {
        ReportFormat::Text => {
            for (path, r) in &results {
                let errors = count_errors(&r.findings);
                writeln!(out, "{}", path.display())?;
                for f in &r.findings {
                    writeln!(out, "  {f}")?;
                }
                writeln!(
                    out,
                    "  {}, {}",
                    plural(errors, "error"),
                    plural(r.findings.len() - errors, "warning")
                )?;
            }
            if results.len() > 1 {
                writeln!(out, "total: {}", plural(total, "error"))?;
            }
        }
        ReportFormat::Json => {
            let report: Vec<_> = results
                .iter()
                .map(|(path, r)| {
                    json!({
                        "path": path.display().to_string(),
                        "errors": count_errors(&r.findings),
                        "findings": r.findings,
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    Ok(total)
}

type Deployment = (Vec<(String, MudFile)>, Option<DeploymentContext>);

/// Parse all files and the context, or report why the merge cannot run.
fn load_deployment(paths: &[PathBuf], context: Option<&Path>) -> Result<Deployment> {
    let mut files = Vec::new();
    let mut failed = false;
    for path in paths {
        let r = read_and_parse(path);
        for f in &r.findings {
            eprintln!("{}: {f}", path.display());
        }
        match r.file {
            Some(file) => {
                let label = path
                    .file_stem()
                    .map_or_else(|| "device".into(), |s| s.to_string_lossy().into_owned());
                files.push((label, file));
            }
            None => failed = true,
        }
    }
    if failed {
        bail!("some input files have errors; fix them before merging");
    }
    let ctx = match context {
        Some(path) => {
            let bytes =
                std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(
                DeploymentContext::from_json(&bytes)
                    .with_context(|| format!("invalid context {}", path.display()))?,
            )
        }
        None => None,
    };
    Ok((files, ctx))
}

fn merge_cmd(
    paths: &[PathBuf],
    context: Option<&Path>,
    format: GraphFormat,
    target: Option<&Path>,
    out: &mut impl Write,
) -> Result<usize> {
    let (files, ctx) = load_deployment(paths, context)?;
    let binding = bind_files(&files, ctx.as_ref());
    let ruleset = merge(&binding.entries, &binding.context);
    let findings: Vec<&Finding> = binding.findings.iter().chain(&ruleset.findings).collect();
    for f in &findings {
        eprintln!("{f}");
    }
    let format = match format {
        GraphFormat::Json => ExportFormat::Json,
        GraphFormat::Dot => ExportFormat::Dot,
    };
    let doc = export_graph(&to_graph(&ruleset), format);
    match target {
        Some(path) => std::fs::write(path, &doc)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => out.write_all(&doc)?,
    }
    Ok(findings.iter().filter(|f| f.is_error()).count())
}

fn summarize_cmd(
    paths: &[PathBuf],
    device: Option<String>,
    context: Option<&Path>,
    format: ReportFormat,
    out: &mut impl Write,
) -> Result<usize> {
    let (files, ctx) = load_deployment(paths, context)?;
    let binding = bind_files(&files, ctx.as_ref());
    let ruleset = merge(&binding.entries, &binding.context);
    let devices = match device {
        Some(id) => vec![DeviceId::new(id)],
        None => ruleset.devices.clone(),
    };
    let summaries = devices
        .iter()
        .map(|d| summarize(&ruleset, d))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        ReportFormat::Text => {
            for s in &summaries {
                writeln!(out, "{s}")?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &summaries)?;
            writeln!(out)?;
        }
    }
    Ok(0)
}

fn serve(addr: SocketAddr, config: ServiceConfig) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        eprintln!("mudkit: serving on http://{}", listener.local_addr()?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(listener, config, shutdown).await?;
        Ok(())
    })
}
