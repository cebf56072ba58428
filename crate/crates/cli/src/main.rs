//! `evergreen` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evergreen_core::corpus::Split;
use evergreen_core::evergreen::RandomStrategy;
use evergreen_core::jsonl::write_jsonl;
use evergreen_core::pipeline::{self, NamedPath, RunConfig, Settings, DEFAULT_SEEDS};
use evergreen_core::selfknow::spec::GridKind;
use evergreen_core::selfknow::Configuration;
use evergreen_core::uncertainty::{LaplacianVariant, RelevanceSource, TailMode, UncertaintyConfig};
use evergreen_core::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "evergreen",
    version,
    about = "Evergreen-aware uncertainty and self-knowledge experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    args: CommonArgs,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Compute uncertainty features for every trace
    Features,
    /// Grid-search, ensemble and evaluate self-knowledge scorers
    Selfknow,
    /// Split questions into evergreen and mutable subsets
    Filter,
    /// Weighted F1 of verbal evergreen judgments
    VerbalBench,
    /// Correlate features with a binary label
    Correlate,
    /// Train the n-gram evergreen classifier
    TrainEvergreen,
    /// Score questions with a trained evergreen classifier
    ScoreEvergreen,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Features => "features",
            Command::Selfknow => "selfknow",
            Command::Filter => "filter",
            Command::VerbalBench => "verbal-bench",
            Command::Correlate => "correlate",
            Command::TrainEvergreen => "train-evergreen",
            Command::ScoreEvergreen => "score-evergreen",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    Bucket,
    Spread,
}

#[derive(Clone, Copy, ValueEnum)]
enum LaplacianArg {
    LinClipped,
    RawSum,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelevanceArg {
    PreferProvided,
    LexicalOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Full,
    Compact,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum RandomArg {
    Uniform,
    Stratified,
}

#[derive(Args)]
struct CommonArgs {
    /// Question set (JSONL)
    #[arg(long, global = true)]
    questions: Option<PathBuf>,
    /// Generation traces (JSONL)
    #[arg(long, global = true)]
    traces: Option<PathBuf>,
    /// Feature file written by `features`
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    /// Named correctness channel as name=path; repeatable, first is the base
    #[arg(long, global = true, value_name = "NAME=PATH")]
    correctness: Vec<String>,
    /// Evergreen score file (JSONL)
    #[arg(long, global = true)]
    evergreen_scores: Option<PathBuf>,
    /// Raw verbal judgment outputs (JSONL); repeatable
    #[arg(long, global = true)]
    verbal_outputs: Vec<PathBuf>,
    /// External binary labels in the correctness schema
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Saved evergreen classifier
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Evergreen threshold
    #[arg(long, global = true, default_value_t = evergreen_core::evergreen::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, global = true, value_enum, default_value = "bucket")]
    tail_mode: TailArg,
    /// Vocabulary size for the spread tail mode
    #[arg(long, global = true)]
    vocab_size: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "lin-clipped")]
    laplacian_variant: LaplacianArg,
    #[arg(long, global = true, value_enum, default_value = "prefer-provided")]
    relevance: RelevanceArg,
    /// Comma-separated seeds
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, global = true, value_enum, default_value = "full")]
    grid: GridArg,
    /// Per-class size of a balanced correlation subset
    #[arg(long, global = true)]
    balanced: Option<usize>,
    /// Restrict to one split
    #[arg(long, global = true, value_enum)]
    split: Option<SplitArg>,
    #[arg(long, global = true, value_enum, default_value = "stratified")]
    random_strategy: RandomArg,
    #[arg(long, global = true, default_value_t = 10_000)]
    random_trials: usize,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

impl CommonArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let tail_mode = match (self.tail_mode, self.vocab_size) {
            (TailArg::Bucket, _) => TailMode::Bucket,
            (TailArg::Spread, Some(vocab_size)) => TailMode::Spread { vocab_size },
            (TailArg::Spread, None) => {
                return Err(Error::Configuration("--tail-mode spread requires --vocab-size".into()))
            }
        };
        let uncertainty = UncertaintyConfig {
            tail_mode,
            relevance: match self.relevance {
                RelevanceArg::PreferProvided => RelevanceSource::PreferProvided,
                RelevanceArg::LexicalOnly => RelevanceSource::LexicalOnly,
            },
            laplacian_variant: match self.laplacian_variant {
                LaplacianArg::LinClipped => LaplacianVariant::LinClipped,
                LaplacianArg::RawSum => LaplacianVariant::RawSum,
            },
        };
        let settings = Settings {
            uncertainty,
            tau: self.tau,
            seeds: if self.seeds.is_empty() {
                DEFAULT_SEEDS.to_vec()
            } else {
                self.seeds.clone()
            },
            grid: match self.grid {
                GridArg::Full => GridKind::Full,
                GridArg::Compact => GridKind::Compact,
            },
            random_strategy: match self.random_strategy {
                RandomArg::Uniform => RandomStrategy::Uniform,
                RandomArg::Stratified => RandomStrategy::Stratified,
            },
            random_trials: self.random_trials,
            balanced: self.balanced,
            split: self.split.map(|s| match s {
                SplitArg::Train => Split::Train,
                SplitArg::Validation => Split::Validation,
                SplitArg::Test => Split::Test,
            }),
            ..Settings::default()
        };
        Ok(RunConfig {
            questions: self.questions.clone(),
            traces: self.traces.clone(),
            features: self.features.clone(),
            correctness: self
                .correctness
                .iter()
                .map(|c| c.parse())
                .collect::<Result<Vec<NamedPath>>>()?,
            evergreen_scores: self.evergreen_scores.clone(),
            verbal_outputs: self.verbal_outputs.clone(),
            labels: self.labels.clone(),
            model: self.model.clone(),
            settings,
        })
    }
}

/// File-name-safe component.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn configuration_slug(c: Configuration) -> String {
    match c {
        Configuration::Ue(m) => m.field().to_string(),
        Configuration::UePlusEg(m) => format!("{}+eg", m.field()),
        Configuration::Eg => "eg".to_string(),
    }
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::Io { path: p, source: e })
    }

    fn report<T: Serialize>(&self, stem: &str, report: &T, text: &str) -> Result<()> {
        let mut json = serde_json::to_string_pretty(report)?;
        json.push('\n');
        self.text(&format!("{stem}.json"), &json)?;
        self.text(&format!("{stem}.txt"), text)?;
        print!("{text}");
        Ok(())
    }

    fn subdir(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::create_dir_all(&p).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
        Ok(p)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let config = cli.args.run_config()?;
    config.validate()?;
    let out = Outputs::new(&cli.args.out)?;
    match cli.command {
        Command::Features => {
            let r = pipeline::cmd_features(&config)?;
            write_jsonl(&out.path("features.jsonl"), &r.records)?;
            out.report("features_report", &r, &r.to_text())
        }
        Command::Selfknow => {
            let r = pipeline::cmd_selfknow(&config)?;
            let models = out.subdir("models")?;
            for m in &r.models {
                let name = format!(
                    "{}__{}__{}.json",
                    slug(&m.model_id),
                    slug(&m.source_dataset),
                    configuration_slug(m.scorer.configuration)
                );
                m.scorer.save(&models.join(name))?;
            }
            let scores = out.subdir("scores")?;
            for b in &r.blocks {
                let name = format!("{}__{}.jsonl", slug(&b.model_id), slug(&b.source_dataset));
                write_jsonl(&scores.join(name), &b.scores)?;
            }
            out.report("selfknow_report", &r, &r.to_text())
        }
        Command::Filter => {
            let r = pipeline::cmd_filter(&config)?;
            write_jsonl(&out.path("evergreen.jsonl"), &r.evergreen)?;
            write_jsonl(&out.path("mutable.jsonl"), &r.mutable)?;
            out.report("filter_report", &r, &r.to_text())
        }
        Command::VerbalBench => {
            let r = pipeline::cmd_verbal_bench(&config)?;
            out.report("verbal_report", &r, &r.to_text())
        }
        Command::Correlate => {
            let r = pipeline::cmd_correlate(&config)?;
            out.report("correlation_report", &r, &r.to_text())
        }
        Command::TrainEvergreen => {
            let r = pipeline::cmd_train_evergreen(&config)?;
            if let Some(m) = &r.model {
                m.save(&out.path("evergreen_model.json"))?;
            }
            out.report("train_report", &r, &r.to_text())
        }
        Command::ScoreEvergreen => {
            let (metadata, scores) = pipeline::cmd_score_evergreen(&config)?;
            write_jsonl(&out.path("evergreen_scores.jsonl"), &scores)?;
            let report = serde_json::json!({ "metadata": metadata, "n_scored": scores.len() });
            out.report("score_report", &report, &format!("scored {} questions\n", scores.len()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evergreen {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
