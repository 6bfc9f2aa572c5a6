use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gapforge_core::config::{ConfigError, PipelineConfig};
use gapforge_core::datastore::{
    read_dataset, spawn_server, DatasetError, TopicDataset, DEFAULT_PORT,
};
use gapforge_core::pipeline::{build, BuildReport, PipelineError};

const EXIT_USAGE: u8 = 2;
const EXIT_PROVIDER: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(
    name = "gapforge",
    version,
    about = "Find facts other Wikipedias have that English lacks"
)]
struct Cli {
    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dataset for one English article.
    Build {
        #[arg(long)]
        topic: String,
        /// Comma-separated target languages.
        #[arg(long)]
        langs: Option<String>,
        /// Offline run against fixture articles and mock providers.
        #[arg(long)]
        mock: bool,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Fixture directory for --mock (defaults to the bundled one).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Output directory for dataset files.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        in_flight: Option<usize>,
    },
    /// Serve dataset files over HTTP.
    Serve {
        #[arg(long, default_value = "datasets")]
        datasets: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Summarize a dataset file.
    Inspect { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

type Failure = (u8, String);

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build {
            topic,
            langs,
            mock,
            cap,
            k,
            fixtures,
            out,
            cache,
            in_flight,
        } => {
            let mut flags: Vec<(&str, String)> = Vec::new();
            let path = |p: PathBuf| p.to_string_lossy().into_owned();
            if let Some(v) = langs {
                flags.push(("target_langs", v));
            }
            if mock {
                flags.push(("mock", "true".into()));
            }
            if let Some(v) = cap {
                flags.push(("cap", v.to_string()));
            }
            if let Some(v) = k {
                flags.push(("k", v.to_string()));
            }
            if let Some(v) = fixtures {
                flags.push(("fixtures_dir", path(v)));
            }
            if let Some(v) = out {
                flags.push(("output_dir", path(v)));
            }
            if let Some(v) = cache {
                flags.push(("cache_dir", path(v)));
            }
            if let Some(v) = in_flight {
                flags.push(("in_flight", v.to_string()));
            }
            let config = PipelineConfig::layered(cli.config.as_deref(), std::env::vars(), &flags)
                .map_err(config_failure)?;
            let report = build(&topic, &config).map_err(pipeline_failure)?;
            print_report(&report);
            Ok(())
        }
        Command::Serve {
            datasets,
            port,
            host,
        } => {
            let addr = format!("{host}:{port}");
            let server = spawn_server(&datasets, &addr).map_err(dataset_failure)?;
            println!(
                "serving {} on http://{}",
                datasets.display(),
                server.local_addr()
            );
            server.wait().map_err(|e| (EXIT_DATA, e.to_string()))
        }
        Command::Inspect { file } => {
            let ds = read_dataset(&file).map_err(dataset_failure)?;
            print!("{}", summary_table(&ds));
            Ok(())
        }
    }
}

fn config_failure(e: ConfigError) -> Failure {
    (EXIT_USAGE, e.to_string())
}

fn dataset_failure(e: DatasetError) -> Failure {
    (EXIT_DATA, e.to_string())
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match &e {
        PipelineError::Config(_) => EXIT_USAGE,
        e if e.is_provider_failure() => EXIT_PROVIDER,
        _ => EXIT_DATA,
    };
    (code, format!("[{}] {e}", e.stage()))
}

fn print_report(report: &BuildReport) {
    println!("en: {} facts", report.english_facts);
    for s in &report.languages {
        match &s.title {
            Some(title) => println!(
                "{}: {title}: {} facts, {} gaps, {} selected",
                s.language_code, s.facts, s.gaps, s.selected
            ),
            None => println!("{}: skipped, no linked article", s.language_code),
        }
    }
    println!(
        "wrote {} ({} facts)",
        report.path.display(),
        report.dataset.fact_count()
    );
}

fn summary_table(ds: &TopicDataset) -> String {
    let mut out = format!(
        "{} (English revision {}, generated {})\n",
        ds.topic, ds.english_revision, ds.generated_at
    );
    out.push_str("language  facts  sections\n");
    for (lang, facts) in &ds.facts {
        let mut sections = std::collections::BTreeMap::new();
        for f in facts {
            *sections.entry(f.section_index).or_insert(0usize) += 1;
        }
        let dist: Vec<String> = sections.iter().map(|(s, n)| format!("{s}:{n}")).collect();
        out.push_str(&format!(
            "{lang:<8}  {:>5}  {}\n",
            facts.len(),
            dist.join(" ")
        ));
    }
    out.push_str(&format!("total     {:>5}\n", ds.fact_count()));
    let line: Vec<String> = ds
        .facts
        .iter()
        .map(|(l, f)| format!("{l} {}", f.len()))
        .collect();
    out.push_str(&line.join(" / "));
    out.push('\n');
    out
}
