use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use offcut_core::io::{load_design, optimize_document, result_svgs, to_canonical_json, DesignDocument, RunDoc};
use offcut_core::layout::DockingCriterion;
use offcut_core::optimizer::{OptimizerConfig, RunControl};

#[derive(Parser)]
#[command(name = "offcut", version, about = "Design furniture that wastes less material")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the session HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Optimize a design file and write the result JSON and cutting plan.
    Optimize {
        /// A `.design.json` document.
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        keep: Option<usize>,
        /// Grow/shrink rounds per design improvement.
        #[arg(long)]
        iterations: Option<usize>,
        /// Raster resolution in mm per pixel.
        #[arg(long)]
        raster_res: Option<f64>,
        #[arg(long, value_parser = parse_criterion)]
        criterion: Option<DockingCriterion>,
        /// Run on a service at this URL instead of in-process.
        #[arg(long)]
        server: Option<String>,
    },
}

fn parse_criterion(s: &str) -> Result<DockingCriterion, String> {
    match s {
        "wastage-enclosed" => Ok(DockingCriterion::WastageEnclosed),
        "wastage-only" => Ok(DockingCriterion::WastageOnly),
        _ => Err("expected wastage-enclosed or wastage-only".into()),
    }
}

fn output_stem(file: &Path) -> String {
    let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into());
    for suffix in [".design.json", ".json"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem.to_string();
        }
    }
    name
}

async fn run_remote(url: &str, doc: &DesignDocument, config: &OptimizerConfig) -> Result<RunDoc> {
    let client = offcut_client::Client::new(url);
    let session = client.create_session(doc).await?;
    session.optimize(config).await?;
    session.wait(Duration::from_millis(100)).await?;
    let run = session.run().await?;
    let _ = session.close().await;
    Ok(run)
}

#[allow(clippy::too_many_arguments)]
async fn optimize(
    file: PathBuf,
    seed: u64,
    out: PathBuf,
    workers: Option<usize>,
    generations: Option<usize>,
    keep: Option<usize>,
    iterations: Option<usize>,
    raster_res: Option<f64>,
    criterion: Option<DockingCriterion>,
    server: Option<String>,
) -> Result<()> {
    let bytes = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
    let doc = load_design(&bytes).with_context(|| format!("invalid design {}", file.display()))?;
    let d = OptimizerConfig::default();
    let config = OptimizerConfig {
        seed,
        workers: workers.unwrap_or(d.workers),
        generations: generations.unwrap_or(d.generations),
        keep: keep.unwrap_or(d.keep),
        improve_iterations: iterations.unwrap_or(d.improve_iterations),
        raster_res: raster_res.unwrap_or(d.raster_res),
        criterion: criterion.unwrap_or(d.criterion),
        max_grow_steps: d.max_grow_steps,
    };
    let run = match &server {
        Some(url) => run_remote(url, &doc, &config).await?,
        None => {
            let (doc, config) = (doc.clone(), config.clone());
            tokio::task::spawn_blocking(move || optimize_document(&doc, &config, &RunControl::default())).await??
        }
    };
    if run.results.is_empty() {
        bail!("the design does not fit on the configured boards");
    }
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let stem = output_stem(&file);
    let json_path = out.join(format!("{stem}.result.json"));
    std::fs::write(&json_path, to_canonical_json(&run))?;
    let mut written = vec![json_path];
    for (b, svg) in result_svgs(&doc, &run, 0)?.into_iter().enumerate() {
        let name = if b == 0 { format!("{stem}.plan.svg") } else { format!("{stem}.board-{}.plan.svg", b + 1) };
        let path = out.join(name);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    let best = &run.results[0];
    println!("{}: wastage {:.4} -> {:.4} (usage {:.1}%)", doc.name, run.start_wastage, best.wastage, 100.0 * best.usage);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match Cli::parse().command {
        Command::Serve { port, host } => {
            let listener = tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("binding {host}:{port}"))?;
            println!("listening on http://{}", listener.local_addr()?);
            offcut_service::serve(listener).await?;
        }
        Command::Optimize { file, seed, out, workers, generations, keep, iterations, raster_res, criterion, server } => {
            optimize(file, seed, out, workers, generations, keep, iterations, raster_res, criterion, server).await?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_drop_the_design_suffix() {
        assert_eq!(output_stem(Path::new("a/b/shelf.design.json")), "shelf");
        assert_eq!(output_stem(Path::new("table.json")), "table");
        assert_eq!(output_stem(Path::new("plain")), "plain");
    }

    #[test]
    fn cli_parses_the_documented_commands() {
        let c = Cli::try_parse_from(["offcut", "optimize", "f.design.json", "--seed", "7", "--out", "o"]).unwrap();
        assert!(matches!(c.command, Command::Optimize { seed: 7, .. }));
        let c = Cli::try_parse_from(["offcut", "serve", "--port", "9000"]).unwrap();
        assert!(matches!(c.command, Command::Serve { port: 9000, .. }));
        assert!(Cli::try_parse_from(["offcut", "optimize", "f", "--criterion", "bogus"]).is_err());
    }
}
