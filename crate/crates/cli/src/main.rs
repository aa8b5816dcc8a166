//! `insight`: synthetic corpus generation and the extract, label, train,
//! rank, baseline and evaluation stages over a dataset directory.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};
use insight_core::config::Config;
use insight_core::eval::render_table;
use insight_core::model::Variant;
use insight_core::pipeline::{
    pipeline_methods, run_pipeline, stage_baseline, stage_eval, stage_extract, stage_label,
    stage_rank, stage_split, stage_train, Method, RunDir,
};
use insight_core::split::Split;
use insight_core::synth::{synthesize, write_dataset};
use insight_core::table::DatasetDir;

#[derive(Debug, Parser)]
#[command(name = "insight", version, about = "Text-assisted insight ranking pipeline")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dataset directory holding `tables/`, `texts/` and `split.json`.
    #[arg(long, global = true, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Output directory: the dataset for `synth`, the run directory otherwise.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// train, val or test.
    #[arg(long, global = true)]
    split: Option<Split>,
    /// tar, tar_cnn, tar_semantics, tar_memory, sig_table, sig_dataset or sig_cluster.
    #[arg(long, global = true)]
    method: Vec<Method>,
    /// Metric cutoffs, replacing `eval.ks`.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Vec<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset into --out.
    Synth {
        /// Overrides `synth.tables`.
        #[arg(long)]
        tables: Option<usize>,
    },
    /// Write the seeded train/val/test manifest of --dataset.
    Split,
    /// Extract candidate insights of every table into --out.
    Extract,
    /// Label insights against their texts (all splits unless --split).
    Label,
    /// Train TAR variants (all configured unless --method).
    Train,
    /// Rank a split (default test) with trained variants.
    Rank,
    /// Rank a split (default test) with significance baselines.
    Baseline,
    /// Evaluate prediction files of a split (default test).
    Eval,
    /// Run every stage end to end on --dataset.
    Pipeline,
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

impl Cli {
    fn config(&self) -> anyhow::Result<Config> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        if !self.k.is_empty() {
            config.eval.ks = self.k.clone();
        }
        config.validate()?;
        Ok(config)
    }

    fn dataset(&self) -> anyhow::Result<DatasetDir> {
        let dir = self.dataset.as_deref().ok_or_else(|| usage("--dataset is required"))?;
        Ok(DatasetDir::new(dir))
    }

    fn run(&self) -> anyhow::Result<RunDir> {
        let dir = self.out.as_deref().ok_or_else(|| usage("--out is required"))?;
        Ok(RunDir::new(dir))
    }

    fn splits(&self) -> Vec<Split> {
        self.split.map_or_else(|| Split::ALL.to_vec(), |s| vec![s])
    }

    fn variants(&self, config: &Config) -> anyhow::Result<Vec<Variant>> {
        if self.method.is_empty() {
            return Ok(config.pipeline.variants.clone());
        }
        self.method
            .iter()
            .map(|m| match m {
                Method::Tar(v) => Ok(*v),
                other => Err(usage(format!("{} is not a TAR variant", other.name()))),
            })
            .collect()
    }

    fn baselines(&self) -> anyhow::Result<Vec<Method>> {
        if self.method.is_empty() {
            return Ok(Method::BASELINES.to_vec());
        }
        for m in &self.method {
            if matches!(m, Method::Tar(_)) {
                return Err(usage(format!("{} is not a baseline", m.name())));
            }
        }
        Ok(self.method.clone())
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let config = cli.config()?;
    let split = cli.split.unwrap_or(Split::Test);
    match &cli.command {
        Command::Synth { tables } => {
            let out = cli.out.as_deref().ok_or_else(|| usage("--out is required"))?;
            let mut synth = config.synth.clone();
            if let Some(n) = tables {
                synth.tables = *n;
            }
            let corpus = synthesize(&synth)?;
            write_dataset(out, &corpus)?;
            println!("wrote {} tables to {}", corpus.len(), out.display());
        }
        Command::Split => {
            let manifest = stage_split(&cli.dataset()?, &config)?;
            println!(
                "train {} / val {} / test {}",
                manifest.train.len(),
                manifest.val.len(),
                manifest.test.len()
            );
        }
        Command::Extract => {
            let insights = stage_extract(&cli.dataset()?, &cli.run()?, &config)?;
            println!("extracted {} insights", insights.len());
        }
        Command::Label => {
            let (dataset, run) = (cli.dataset()?, cli.run()?);
            for s in cli.splits() {
                let labeled = stage_label(&dataset, &run, s, &config)?;
                println!("{s}: labeled {} insights", labeled.len());
            }
        }
        Command::Train => {
            let run = cli.run()?;
            for v in cli.variants(&config)? {
                let log = stage_train(&run, v, &config)?;
                println!(
                    "{}: loss {:.4} -> {:.4}, val NDCG@{} {:.4} -> {:.4} (epoch {})",
                    v.method_name(),
                    log.initial_loss,
                    log.final_loss(),
                    config.train.select_k,
                    log.initial_val_ndcg,
                    log.best_val_ndcg,
                    log.best_epoch
                );
            }
        }
        Command::Rank => {
            let (dataset, run) = (cli.dataset()?, cli.run()?);
            for v in cli.variants(&config)? {
                let records = stage_rank(&dataset, &run, v, split)?;
                println!("{}: ranked {} insights", v.method_name(), records.len());
            }
        }
        Command::Baseline => {
            let (dataset, run) = (cli.dataset()?, cli.run()?);
            for m in cli.baselines()? {
                let records = stage_baseline(&dataset, &run, m, split, &config)?;
                println!("{}: ranked {} insights", m.name(), records.len());
            }
        }
        Command::Eval => {
            let run = cli.run()?;
            let methods: Vec<Method> = if cli.method.is_empty() {
                pipeline_methods(&config)
                    .into_iter()
                    .filter(|m| run.predictions(split, *m).is_file())
                    .collect()
            } else {
                cli.method.clone()
            };
            if methods.is_empty() {
                return Err(usage(format!("no prediction files for split {split}")));
            }
            let reports = stage_eval(&run, &methods, split, &config)?;
            print!("{}", render_table(&reports));
        }
        Command::Pipeline => {
            let (dataset, run) = (cli.dataset()?, cli.run()?);
            let report = run_pipeline(&dataset, &run, &config)?;
            print!("{}", report.table());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<insight_core::Error>() {
        Some(e) if e.is_data_error() => 2,
        Some(_) => 3,
        None => 3,
    }
}

fn report_error(err: &anyhow::Error) {
    eprintln!("error: {err}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report_error(&err);
            ExitCode::from(exit_code(&err))
        }
    }
}
