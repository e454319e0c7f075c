use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eliteness::baselines::{Bm25Config, LmConfig, Smoothing};
use eliteness::corpus::{
    build_index, load_index, read_documents, save_index, DocFormat, TokenizerConfig,
};
use eliteness::eval::evaluate_run;
use eliteness::mixture::{fit_model, load_model, save_model, EmConfig, Execution};
use eliteness::pipeline::{
    read_topics, search, sweep, write_run, write_sweep_csv, SweepConfig, DEFAULT_B,
    DEFAULT_METRIC_K, DEFAULT_N_BOOST, DEFAULT_TOP_K,
};
use eliteness::ranking::{Ranker, Scorer};
use eliteness::synth::{generate, SyntheticSpec};

/// Eliteness-based probabilistic retrieval: index, fit, search, eval, sweep.
#[derive(Debug, Parser)]
#[command(name = "eliteness", version, about)]
struct Cli {
    /// Run fitting and search on a single thread.
    #[arg(long, global = true, env = "ELITENESS_SEQUENTIAL")]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a corpus index from JSONL or TREC SGML documents.
    Index(IndexArgs),
    /// Fit a 2-Poisson eliteness model for every vocabulary term.
    Fit(FitArgs),
    /// Rank documents for a topics file and write a TREC run.
    Search(SearchArgs),
    /// Score a TREC run against qrels (MAP, MRR, Recall@k).
    Eval(EvalArgs),
    /// Evaluate a grid of length-normalization and init-boost settings.
    Sweep(SweepArgs),
    /// Write a seeded synthetic corpus, topics and qrels.
    #[command(hide = true)]
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Trec,
}

impl From<Format> for DocFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => DocFormat::Jsonl,
            Format::Trec => DocFormat::Trec,
        }
    }
}

#[derive(Debug, Args)]
struct TokenizerArgs {
    /// Keep the original letter case.
    #[arg(long, env = "ELITENESS_KEEP_CASE")]
    keep_case: bool,
    /// Comma-separated stopwords.
    #[arg(long, value_delimiter = ',', env = "ELITENESS_STOPWORDS")]
    stopwords: Vec<String>,
    /// File with one stopword per line.
    #[arg(long, env = "ELITENESS_STOPWORD_FILE")]
    stopword_file: Option<PathBuf>,
}

impl TokenizerArgs {
    fn config(&self) -> Result<TokenizerConfig> {
        let mut words: Vec<String> = self
            .stopwords
            .iter()
            .map(|w| w.trim().to_string())
            .collect();
        if let Some(path) = &self.stopword_file {
            let raw =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            words.extend(raw.lines().map(|l| l.trim().to_string()));
        }
        let lowercase = !self.keep_case;
        let words = words.into_iter().filter(|w| !w.is_empty()).map(|w| {
            if lowercase {
                w.to_lowercase()
            } else {
                w
            }
        });
        Ok(TokenizerConfig {
            lowercase,
            ..TokenizerConfig::default()
        }
        .with_stopwords(words))
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Document file, or a directory read recursively.
    #[arg(long, env = "ELITENESS_INPUT")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl", env = "ELITENESS_FORMAT")]
    format: Format,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Where to write the index.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EmArgs {
    /// Multiplier on the initial elite mean.
    #[arg(long, default_value_t = DEFAULT_N_BOOST, env = "ELITENESS_N_BOOST")]
    n_boost: u32,
    #[arg(long, default_value_t = EmConfig::default().max_iters, env = "ELITENESS_MAX_ITERS")]
    max_iters: usize,
    /// Stop when the per-document log-likelihood changes by less than this.
    #[arg(long, default_value_t = EmConfig::default().tol, env = "ELITENESS_TOL")]
    tol: f64,
}

impl EmArgs {
    fn config(&self) -> Result<EmConfig> {
        let cfg = EmConfig {
            n_boost: self.n_boost,
            max_iters: self.max_iters,
            tol: self.tol,
            ..EmConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, env = "ELITENESS_INDEX")]
    index: PathBuf,
    #[command(flatten)]
    em: EmArgs,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, default_value_t = Bm25Config::default().k1, env = "ELITENESS_BM25_K1")]
    bm25_k1: f64,
    #[arg(long, default_value_t = Bm25Config::default().b, env = "ELITENESS_BM25_B")]
    bm25_b: f64,
    /// Jelinek-Mercer collection weight.
    #[arg(long, default_value_t = LmConfig::default().lambda, env = "ELITENESS_LM_LAMBDA")]
    lm_lambda: f64,
    /// Dirichlet prior mass.
    #[arg(long, default_value_t = LmConfig::default().mu, env = "ELITENESS_LM_MU")]
    lm_mu: f64,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, env = "ELITENESS_INDEX")]
    index: PathBuf,
    /// Fitted model; required by the eliteness scorers.
    #[arg(long, env = "ELITENESS_MODEL")]
    model: Option<PathBuf>,
    /// JSON-lines topics, one {"qid", "text"} per line.
    #[arg(long, env = "ELITENESS_TOPICS")]
    topics: PathBuf,
    /// final, logical-inclusion, strict-identity, idf, bm25, lm-jm or lm-dirichlet.
    #[arg(long, default_value = "final", env = "ELITENESS_SCORER")]
    scorer: Scorer,
    /// Length-normalization strength for the eliteness scorers.
    #[arg(long, default_value_t = DEFAULT_B, env = "ELITENESS_B")]
    b: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_K, env = "ELITENESS_TOP_K")]
    top_k: usize,
    /// Run tag written in the last column.
    #[arg(long, default_value = "eliteness", env = "ELITENESS_TAG")]
    tag: String,
    #[command(flatten)]
    baselines: BaselineArgs,
    /// Where to write the run.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, env = "ELITENESS_RUN")]
    run: PathBuf,
    #[arg(long, env = "ELITENESS_QRELS")]
    qrels: PathBuf,
    /// Recall cutoff.
    #[arg(long, default_value_t = DEFAULT_METRIC_K, env = "ELITENESS_METRIC_K")]
    metric_k: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, env = "ELITENESS_INDEX")]
    index: PathBuf,
    #[arg(long, env = "ELITENESS_TOPICS")]
    topics: PathBuf,
    #[arg(long, env = "ELITENESS_QRELS")]
    qrels: PathBuf,
    /// Comma-separated b values.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.64,0.7,0.8,0.9,1"
    )]
    b_grid: Vec<f64>,
    /// Comma-separated n_boost values.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    n_grid: Vec<u32>,
    /// final, logical-inclusion, strict-identity, idf, bm25, lm-jm or lm-dirichlet.
    #[arg(long, default_value = "final", env = "ELITENESS_SCORER")]
    scorer: Scorer,
    #[arg(long, default_value_t = EmConfig::default().max_iters, env = "ELITENESS_MAX_ITERS")]
    max_iters: usize,
    #[arg(long, default_value_t = EmConfig::default().tol, env = "ELITENESS_TOL")]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_K, env = "ELITENESS_TOP_K")]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_METRIC_K, env = "ELITENESS_METRIC_K")]
    metric_k: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    docs: usize,
    #[arg(long, default_value_t = 50)]
    terms: usize,
    /// Number of single-term topics to emit.
    #[arg(long, default_value_t = 10)]
    topics: usize,
    #[arg(long, default_value_t = 0, env = "ELITENESS_SEED")]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn require_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("{}: no such file or directory", path.display());
    }
    Ok(())
}

fn cmd_index(args: &IndexArgs) -> Result<()> {
    require_exists(&args.input)?;
    let tokenizer = args.tokenizer.config()?;
    let docs = read_documents(&args.input, args.format.into())?;
    let index = build_index(docs, &tokenizer)?;
    save_index(&index, &args.out)?;
    println!(
        "N={} vocab={} avgDL={:.4} tokens={}",
        index.num_docs(),
        index.vocab_size(),
        index.avg_doc_len(),
        index.total_tokens()
    );
    Ok(())
}

fn cmd_fit(args: &FitArgs, exec: Execution) -> Result<()> {
    require_exists(&args.index)?;
    let cfg = args.em.config()?;
    let index = load_index(&args.index)?;
    let start = Instant::now();
    let (model, report) = fit_model(&index, &cfg, exec)?;
    let elapsed = start.elapsed();
    save_model(&model, &args.out)?;
    println!("{report}");
    for (term, why) in &report.failed {
        println!("failed: {term}: {why}");
    }
    println!("wall time {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

fn cmd_search(args: &SearchArgs, exec: Execution) -> Result<()> {
    require_exists(&args.index)?;
    require_exists(&args.topics)?;
    if let Some(model) = &args.model {
        require_exists(model)?;
    } else if args.scorer.needs_model() {
        bail!("scorer `{}` needs --model", args.scorer);
    }
    let index = load_index(&args.index)?;
    let model = args
        .model
        .as_deref()
        .map(|p| load_model(p, &index))
        .transpose()?;
    let topics = read_topics(&args.topics)?;

    let mut ranker = Ranker::new(&index)
        .with_b(args.b)?
        .with_bm25(Bm25Config {
            k1: args.baselines.bm25_k1,
            b: args.baselines.bm25_b,
        })?
        .with_lm(LmConfig {
            smoothing: Smoothing::Dirichlet,
            lambda: args.baselines.lm_lambda,
            mu: args.baselines.lm_mu,
        })?;
    if let Some(model) = &model {
        ranker = ranker.with_model(model)?;
    }
    let lists = search(&ranker, &topics, args.scorer, args.top_k, exec)?;
    write_run(&args.out, &lists, &args.tag)?;
    let retrieved: usize = lists.iter().map(|l| l.entries.len()).sum();
    println!(
        "{} topics, {retrieved} results written to {}",
        lists.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    require_exists(&args.run)?;
    require_exists(&args.qrels)?;
    let report = evaluate_run(&args.run, &args.qrels, args.metric_k)?;
    print!("{report}");
    if let Some(out) = &args.out {
        report.save_json(out)?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, exec: Execution) -> Result<()> {
    for path in [&args.index, &args.topics, &args.qrels] {
        require_exists(path)?;
    }
    let em = EmConfig {
        max_iters: args.max_iters,
        tol: args.tol,
        ..EmConfig::default()
    };
    em.validate()?;
    let index = load_index(&args.index)?;
    let topics = read_topics(&args.topics)?;
    let qrels = eliteness::eval::parse_qrels(&args.qrels)?;
    let cfg = SweepConfig {
        b_grid: args.b_grid.clone(),
        n_grid: args.n_grid.clone(),
        em,
        scorer: args.scorer,
        top_k: args.top_k,
        metric_k: args.metric_k,
        exec,
    };
    let rows = sweep(&index, &topics, &qrels, &cfg)?;
    match &args.out {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_sweep_csv(&mut w, &rows)
                .with_context(|| format!("writing {}", path.display()))?;
            w.flush()
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => write_sweep_csv(&mut io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec::random_vocabulary(args.docs, args.terms, args.seed);
    let corpus = generate(&spec)?;
    corpus.write_to(&args.out, args.topics)?;
    println!(
        "{} docs, {} planted terms written to {}",
        args.docs,
        args.terms,
        args.out.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Fit(a) => cmd_fit(a, exec),
        Command::Search(a) => cmd_search(a, exec),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a, exec),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
