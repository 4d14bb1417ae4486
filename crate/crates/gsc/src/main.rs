use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gsc_core::ber::measure_ber;
use gsc_core::channel::{ChannelConfig, Snr};
use gsc_core::modem::Modulation;

use gsc::adapter::builtin::{self, Builtin};
use gsc::adapter::server::serve;
use gsc::adapter::{open_adapter, AdapterSpec};
use gsc::codes::resolve_code;
use gsc::config::load_config;
use gsc::experiment::{run_experiment, single_cell};
use gsc::graph_io::parse_graph;
use gsc::item::load_dataset;
use gsc::report::{self, emit_plots, read_results, summary_table, write_results_dir};

#[derive(Parser)]
#[command(name = "gsc", version, about = "Generative semantic communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first budget and seed of every method.
    Run(RunArgs),
    /// Run every method over all budgets and seeds.
    Sweep(RunArgs),
    /// Measure coded BER over a list of SNR points.
    Ber(BerArgs),
    /// Summarize an existing results directory.
    Report(ReportArgs),
    /// Inspect adapters.
    Adapters {
        #[command(subcommand)]
        command: AdapterCommand,
    },
    /// Semantic graph files.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Results directory, overriding the configured one.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BerArgs {
    /// Code id (`default`, `qc-z<z>-<rows>x<cols>[-s<seed>]`) or alist path.
    #[arg(long, default_value = "default")]
    code: String,
    /// Comma-separated Es/N0 values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    snr: Vec<Snr>,
    /// Information bits per SNR point.
    #[arg(long, default_value_t = 1_000_000)]
    bits: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "bpsk")]
    modulation: Modulation,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReportArgs {
    dir: PathBuf,
    /// Print `results.csv`.
    #[arg(long, conflicts_with = "svg")]
    csv: bool,
    /// Regenerate the plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum AdapterCommand {
    /// Built-in adapters and their capabilities.
    List,
    /// Handshake with an adapter: a built-in name or a command line.
    Check { spec: String },
    #[command(hide = true)]
    Serve { name: String },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Report every violation in a graph file.
    Validate { path: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but something in it failed.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(a) => experiment(&a, true),
        Command::Sweep(a) => experiment(&a, false),
        Command::Ber(a) => ber(&a).map(|()| true),
        Command::Report(a) => report_cmd(&a).map(|()| true),
        Command::Adapters { command } => adapters(command),
        Command::Graph {
            command: GraphCommand::Validate { path },
        } => graph_validate(&path),
    }
}

fn experiment(args: &RunArgs, single: bool) -> Result<bool> {
    let mut cfg = load_config(&args.config)?;
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    if single {
        cfg = single_cell(&cfg);
    }
    let items = load_dataset(&cfg.dataset).with_context(|| format!("loading {}", cfg.dataset.display()))?;
    if items.is_empty() {
        bail!("dataset {} holds no images", cfg.dataset.display());
    }
    let results = run_experiment(&cfg, &items);
    let dir = cfg.output_dir();
    write_results_dir(&dir, &cfg, &results)?;
    let rows: Vec<report::ResultRow> = results.aggregates.iter().map(report::ResultRow::from).collect();
    print!("{}", summary_table(&rows));
    println!("results written to {}", dir.display());
    let failed = results.failed_rows();
    if failed > 0 {
        eprintln!("{failed} item run(s) failed; see {}", dir.join(report::RAW_DIR).join(report::RAW_CSV).display());
    }
    Ok(failed == 0)
}

fn ber(a: &BerArgs) -> Result<()> {
    if a.bits == 0 {
        bail!("--bits must be positive");
    }
    let code = resolve_code(&a.code)?;
    let sink: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| p.display().to_string())?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["snr_db", "code_id", "modulation", "info_bits", "bit_errors", "ber", "bler"])?;
    for &snr in &a.snr {
        let r = measure_ber(&code, &ChannelConfig::new(snr, a.modulation, a.seed), a.bits);
        w.write_record([
            snr.to_string(),
            code.code_id().to_string(),
            a.modulation.name().to_string(),
            r.info_bits.to_string(),
            r.bit_errors.to_string(),
            r.ber.to_string(),
            r.bler.to_string(),
        ])?;
        w.flush()?;
    }
    Ok(())
}

fn report_cmd(a: &ReportArgs) -> Result<()> {
    if a.csv {
        let path = a.dir.join(report::RESULTS_CSV);
        print!("{}", std::fs::read_to_string(&path).with_context(|| path.display().to_string())?);
        return Ok(());
    }
    let rows = read_results(&a.dir)?;
    if a.svg {
        let plots = a.dir.join(report::PLOTS_DIR);
        emit_plots(&rows, &plots)?;
        println!("plots written to {}", plots.display());
    } else {
        print!("{}", summary_table(&rows));
    }
    Ok(())
}

fn adapters(cmd: AdapterCommand) -> Result<bool> {
    match cmd {
        AdapterCommand::List => {
            for name in builtin::NAMES {
                let caps = builtin::capabilities_of(name).unwrap_or_default();
                let caps: Vec<&str> = caps.iter().map(|c| c.as_str()).collect();
                println!("{name:<16} {}", caps.join(","));
            }
            Ok(true)
        }
        AdapterCommand::Check { spec } => {
            let spec = AdapterSpec::parse_cli(&spec);
            let client = open_adapter(&spec).with_context(|| format!("adapter {}", spec.label()))?;
            let caps = client.capabilities().cloned().context("handshake returned no capabilities")?;
            let ops: Vec<&str> = caps.ops.iter().map(|c| c.as_str()).collect();
            println!("ok {} capabilities={}", caps.name, ops.join(","));
            client.shutdown()?;
            Ok(true)
        }
        AdapterCommand::Serve { name } => {
            let mut handler = Builtin::new(&name)?;
            serve(&mut handler, &mut io::stdin().lock(), &mut io::stdout().lock())?;
            Ok(true)
        }
    }
}

fn graph_validate(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let doc = parse_graph(&text)?;
    for v in &doc.violations {
        println!("{v}");
    }
    if doc.violations.is_empty() {
        println!("ok: {} nodes", doc.graph.nodes().len());
    }
    Ok(doc.violations.is_empty())
}
