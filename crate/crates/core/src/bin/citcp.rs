use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use citcp::analysis::AnalyzerTable;
use citcp::classifier::MessageClassifier;
use citcp::config::{ClassifierMode, RunConfig};
use citcp::evaluation::{decay_experiment, measure_builds, run_pipeline_eval, train_until, EvalInputs, Strategy};
use citcp::ingest::{
    generate_synthetic_history, ingest_exec_records, ingest_git_history, write_commits_jsonl, Dataset,
    DatasetLayout, SourceStore, SynthConfig, REPO_PATH_FILE,
};
use citcp::ranker::RankingModel;
use citcp::{BuildId, CommitLog, Error, Result};

#[derive(Parser)]
#[command(name = "citcp", version, about = "Test case prioritization for CI build histories")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    run_config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    impact_depth: Option<usize>,
    #[arg(long, global = true)]
    recent_window: Option<usize>,
    /// Trained commit classifier; keyword matching otherwise.
    #[arg(long, global = true)]
    classifier: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and mine the commit log of its repository.
    Ingest { repo: PathBuf, dataset: PathBuf },
    /// Write features/build_<id>.csv.
    Extract {
        dataset: PathBuf,
        #[arg(long)]
        build: u64,
        /// Output root (defaults to <dataset>); the file goes to <root>/features/.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on the failed builds before --until.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        until: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the tests of a build, best first.
    Prioritize {
        dataset: PathBuf,
        #[arg(long)]
        build: u64,
        #[arg(long)]
        model: PathBuf,
    },
    /// Replay the history and write apfdc.csv, timing.csv and report.json.
    Evaluate {
        dataset: PathBuf,
        /// Single-feature baseline such as F_FailRate_Total:desc.
        #[arg(long)]
        heuristic: Option<String>,
        #[arg(long)]
        max_eval_builds: Option<usize>,
        /// Output directory (defaults to <dataset>/eval).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retraining-window decay; writes decay.csv and decay.json.
    Decay {
        dataset: PathBuf,
        #[arg(long)]
        max_rw: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_config(g: &Global) -> Result<RunConfig> {
    let mut c = match &g.run_config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = g.seed {
        c.seed = v;
    }
    if let Some(v) = g.impact_depth {
        c.impact_depth = v;
    }
    if let Some(v) = g.recent_window {
        c.recent_window = v;
    }
    if let Some(p) = &g.classifier {
        c.classifier = ClassifierMode::Trained(p.clone());
    }
    Ok(c)
}

struct Loaded {
    dataset: Dataset,
    source: Box<dyn SourceStore>,
    classifier: Box<dyn MessageClassifier>,
}

impl Loaded {
    fn open(root: &Path, config: &RunConfig) -> Result<Self> {
        let dataset = Dataset::load(root)?;
        let source = dataset.source()?;
        Ok(Loaded {
            dataset,
            source,
            classifier: config.classifier()?,
        })
    }

    fn inputs(&self) -> EvalInputs<'_> {
        EvalInputs {
            history: &self.dataset.history,
            commits: &self.dataset.commits,
            source: self.source.as_ref(),
            classifier: self.classifier.as_ref(),
            analyzers: AnalyzerTable::default(),
        }
    }

    fn position(&self, id: u64) -> Result<usize> {
        self.dataset.history.position(BuildId(id)).ok_or(Error::UnknownBuild(id))
    }
}

#[derive(Serialize)]
struct Echoed<'a, T> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

fn write_json<T: Serialize>(path: &Path, config: &RunConfig, body: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&Echoed { config, body })?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let config = run_config(&cli.global)?;
    match cli.command {
        Command::Ingest { repo, dataset } => {
            let layout = DatasetLayout::new(&dataset);
            let mut history = ingest_exec_records(&layout)?;
            let commits = CommitLog::new(ingest_git_history(&repo, "HEAD")?);
            let missing: Vec<String> = history
                .builds()
                .iter()
                .flat_map(|b| &b.change_set.commits)
                .filter(|c| commits.get(c).is_none())
                .map(|c| c.to_string())
                .collect();
            if let Some(first) = missing.first() {
                return Err(Error::UnresolvableRef(format!("{first} ({} commits not in repository)", missing.len())));
            }
            history.attach_changes(&commits);
            write_commits_jsonl(commits.commits(), &layout.commits_jsonl())?;
            let repo = std::fs::canonicalize(&repo)?;
            std::fs::write(dataset.join(REPO_PATH_FILE), repo.to_string_lossy().as_bytes())?;
            println!(
                "{} builds, {} failed, {} commits",
                history.builds().len(),
                history.failed_builds().count(),
                commits.commits().len()
            );
        }
        Command::Extract { dataset, build, out } => {
            let loaded = Loaded::open(&dataset, &config)?;
            let pos = loaded.position(build)?;
            let matrices = measure_builds(&loaded.inputs(), &config.feature_options()?, &BTreeSet::from([pos]))?;
            let root = out.unwrap_or(dataset);
            println!("{}", matrices[&pos].save(&root)?.display());
        }
        Command::Train { dataset, until, out } => {
            let loaded = Loaded::open(&dataset, &config)?;
            loaded.position(until)?;
            let model = train_until(&loaded.inputs(), &config.eval_options()?, BuildId(until))?;
            model.save(&out)?;
            eprintln!("trained on {} rows before build {until}", model.training_rows);
        }
        Command::Prioritize { dataset, build, model } => {
            let model = RankingModel::load(&model)?;
            let loaded = Loaded::open(&dataset, &config)?;
            let pos = loaded.position(build)?;
            let matrices = measure_builds(&loaded.inputs(), &config.feature_options()?, &BTreeSet::from([pos]))?;
            for test in model.predict(&matrices[&pos])?.tests() {
                println!("{test}");
            }
        }
        Command::Evaluate { dataset, heuristic, max_eval_builds, out } => {
            let mut config = config;
            if let Some(h) = heuristic {
                config.heuristic = h;
            }
            if let Some(n) = max_eval_builds {
                config.max_eval_builds = n;
            }
            let loaded = Loaded::open(&dataset, &config)?;
            let report = run_pipeline_eval(&loaded.inputs(), &config.eval_options()?)?;
            let dir = out.unwrap_or_else(|| dataset.join("eval"));
            std::fs::create_dir_all(&dir)?;
            report.write_apfdc_csv(std::fs::File::create(dir.join("apfdc.csv"))?)?;
            report.timing.write_csv(std::fs::File::create(dir.join("timing.csv"))?)?;
            write_json(&dir.join("report.json"), &config, &report)?;
            for s in Strategy::ALL {
                let sum = report.summary(s).expect("every strategy is summarized");
                println!("{}\t{:.4}\t{:.4}\t{}", s.as_str(), sum.mean, sum.sd, sum.builds);
            }
        }
        Command::Decay { dataset, max_rw, out } => {
            let mut config = config;
            if let Some(rw) = max_rw {
                config.max_rw = rw;
            }
            let loaded = Loaded::open(&dataset, &config)?;
            let curve = decay_experiment(&loaded.inputs(), &config.eval_options()?)?;
            let dir = out.unwrap_or_else(|| dataset.join("eval"));
            std::fs::create_dir_all(&dir)?;
            curve.write_csv(std::fs::File::create(dir.join("decay.csv"))?)?;
            write_json(&dir.join("decay.json"), &config, &curve)?;
            for p in &curve.points {
                println!("{}\t{:.4}\t{}", p.rw, p.mean_apfdc, p.n_pairs);
            }
        }
        Command::Synth { config: path, seed, out } => {
            let synth = match path {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
                None => SynthConfig::default(),
            };
            let truth = generate_synthetic_history(&synth, seed, &out)?;
            println!("{} builds, {} with failures", synth.builds, truth.failures.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
