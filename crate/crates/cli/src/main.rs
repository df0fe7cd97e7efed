use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use caloric_core::graph::FamilyTag;
use caloric_core::FamilyConfig;
use caloric_lab::config::{ExperimentConfig, MetricChoice, Tag};
use caloric_lab::corpus::{caccioppoli_corpus, calibrate, CORPUS_SEED};
use caloric_lab::output::RunReport;
use caloric_lab::{exit_code, experiments, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "caloric-lab", version, about = "Caloric functions on weighted graphs: reproducible experiments")]
struct Cli {
    /// List the graph families and exit.
    #[arg(long)]
    list_families: bool,

    /// Describe an experiment tag (what it checks, parameters, CSV columns) and exit.
    #[arg(long, value_name = "TAG")]
    explain: Option<String>,

    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for random fields; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Check the intrinsic-metric inequality and cut-off functions on one family.
    VerifyMetric {
        #[arg(long, default_value = "lattice-zd")]
        family: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        leaves: usize,
        #[arg(long, default_value_t = 20)]
        hops: u32,
        /// Use the uniform edge length `sigma` instead of the constructed metric.
        #[arg(long)]
        sigma: Option<f64>,
        /// Cut-off radius; repeatable.
        #[arg(long = "radius")]
        radii: Vec<f64>,
    },
    /// Recompute the Caccioppoli corpus ratios and write the baseline file.
    Calibrate {
        #[arg(long, default_value = "baselines/caccioppoli.txt")]
        baseline: PathBuf,
    },
}

fn list_families() {
    for tag in FamilyTag::ALL {
        println!("{:<16} {}", tag.name(), tag.describe());
    }
}

fn parse_family(name: &str, dim: usize, leaves: usize) -> anyhow::Result<FamilyConfig> {
    let tag = FamilyTag::ALL
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| caloric_core::Error::Config(format!("unknown family {name:?}; see --list-families")))?;
    Ok(match tag {
        FamilyTag::LatticeZd => FamilyConfig::lattice(dim),
        FamilyTag::WeightedLine => FamilyConfig { family: tag, ..FamilyConfig::lattice(1) },
        FamilyTag::Star => FamilyConfig::star(leaves),
        FamilyTag::NormalizedWrap => FamilyConfig::normalized(FamilyConfig::lattice(dim)),
    })
}

fn emit(report: &RunReport, out: &Path) -> anyhow::Result<u8> {
    report.write(out).with_context(|| format!("writing results to {}", out.display()))?;
    print!("{}", report.summary());
    println!("results: {}", out.display());
    Ok(if report.passed() { EXIT_PASS as u8 } else { EXIT_FAIL as u8 })
}

fn execute(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(caloric_core::Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    if cli.list_families {
        list_families();
        return Ok(EXIT_PASS as u8);
    }
    if let Some(name) = &cli.explain {
        let tag =
            Tag::parse(name).ok_or_else(|| caloric_core::Error::Config(format!("unknown experiment tag {name:?}")))?;
        println!("{tag}\n{}", tag.explain());
        return Ok(EXIT_PASS as u8);
    }
    let Some(command) = cli.command else {
        bail!(caloric_core::Error::Config("nothing to do; try --help".into()));
    };
    match command {
        Command::Run { config } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| caloric_core::Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("loading {}", config.display()))?;
            let out =
                cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
            let report = experiments::run(&cfg, cli.seed)?;
            emit(&report, &out)
        }
        Command::VerifyMetric { family, dim, leaves, hops, sigma, radii } => {
            let mut cfg = ExperimentConfig::new(Tag::VerifyMetric);
            cfg.family = Some(parse_family(&family, dim, leaves)?);
            cfg.metric = sigma.map_or(MetricChoice::Constructed, |sigma| MetricChoice::Explicit { sigma });
            cfg.params.hops = Some(hops);
            cfg.params.radii = radii;
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out").join(Tag::VerifyMetric.name()));
            let report = experiments::run(&cfg, cli.seed)?;
            emit(&report, &out)
        }
        Command::Calibrate { baseline } => {
            let entries = caccioppoli_corpus(cli.seed.unwrap_or(CORPUS_SEED))?;
            let b = calibrate(&entries)?;
            if let Some(dir) = baseline.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let tmp = baseline.with_extension("tmp");
            fs::write(&tmp, b.render())?;
            fs::rename(&tmp, &baseline)?;
            println!("{} ratios from {} fields written to {}", b.len(), entries.len(), baseline.display());
            Ok(EXIT_PASS as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_PASS as u8 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
