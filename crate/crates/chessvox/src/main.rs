use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chessvox::config::ServiceConfig;
use chessvox::corpus::{load_corpus_cached, load_corpus_with, CorpusLayout, FeatureDump};
use chessvox::eval::{self, EvalConfig, EvalScope};
use chessvox::fixture::{self, BandNoise, FixtureConfig};
use chessvox::service::Service;
use chessvox_core::features::FeatureExtractor;
use chessvox_core::FeatureKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "chessvox", version, about = "Voice-command chess: corpus tools, evaluation and service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus.
    GenFixture(GenArgs),
    /// Embed every take of a corpus and dump the features as JSON.
    Extract(ExtractArgs),
    /// Person-based and general k-NN evaluation.
    Eval(EvalArgs),
    /// Evaluate MFCC and GTCC on identical splits and report the deltas.
    Compare(EvalArgs),
    /// Print the text tables of a saved eval.json.
    Report {
        input: PathBuf,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    speakers: usize,
    #[arg(long, default_value_t = 10)]
    takes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Band noise as LOW_HZ:HIGH_HZ:SNR_DB.
    #[arg(long)]
    band_noise: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Mfcc,
    Gtcc,
}

impl From<Kind> for FeatureKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Mfcc => FeatureKind::Mel,
            Kind::Gtcc => FeatureKind::Gammatone,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    PerSpeaker,
    General,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "gtcc")]
    kind: Kind,
    #[arg(long)]
    out: PathBuf,
    /// Reuse and update the embedding cache under the corpus root.
    #[arg(long)]
    cache: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// TOML file with EvalConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    kinds: Vec<Kind>,
    #[arg(long = "k", value_delimiter = ',')]
    k_values: Vec<usize>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    scopes: Vec<Scope>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache: bool,
}

impl EvalArgs {
    fn config(&self) -> Result<EvalConfig> {
        let mut cfg = match &self.config {
            Some(p) => toml::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => EvalConfig::default(),
        };
        if let Some(c) = &self.corpus {
            cfg.corpus_root = c.clone();
        }
        if !self.kinds.is_empty() {
            cfg.kinds = self.kinds.iter().map(|&k| k.into()).collect();
        }
        if !self.k_values.is_empty() {
            cfg.k_values = self.k_values.clone();
        }
        if let Some(f) = self.train_frac {
            cfg.train_frac = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.scopes.is_empty() {
            cfg.scopes = self
                .scopes
                .iter()
                .map(|s| match s {
                    Scope::PerSpeaker => EvalScope::PerSpeaker,
                    Scope::General => EvalScope::General,
                })
                .collect();
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        cfg.use_cache |= self.cache;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
}

fn parse_band(s: &str) -> Result<BandNoise> {
    let parts: Vec<f64> = s.split(':').map(str::parse).collect::<Result<_, _>>().context("band noise must be LOW:HIGH:SNR")?;
    match parts[..] {
        [low_hz, high_hz, snr_db] if low_hz < high_hz => Ok(BandNoise { low_hz, high_hz, snr_db }),
        _ => bail!("band noise must be LOW:HIGH:SNR with LOW < HIGH"),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenFixture(a) => {
            let cfg = FixtureConfig {
                speakers: a.speakers,
                takes_per_word: a.takes,
                seed: a.seed,
                snr_db: a.snr_db,
                band_noise: a.band_noise.as_deref().map(parse_band).transpose()?,
                ..FixtureConfig::default()
            };
            let summary = fixture::generate_corpus(&a.out, &cfg)?;
            println!("wrote {} takes ({} speakers x {} words) to {}", summary.files, summary.speakers, summary.words, a.out.display());
        }
        Command::Extract(a) => {
            let extractor = FeatureExtractor::standard(a.kind.into());
            let layout = CorpusLayout::new(&a.corpus);
            let load = if a.cache { load_corpus_cached(&layout, &extractor)? } else { load_corpus_with(&layout, &extractor, None)? };
            for s in &load.skipped {
                eprintln!("skipped {}: {}", s.path, s.reason);
            }
            let n = load.dataset.len();
            let dump = FeatureDump::new(extractor.config().clone(), load);
            std::fs::write(&a.out, serde_json::to_vec_pretty(&dump)?)?;
            println!("embedded {n} takes into {}", a.out.display());
        }
        Command::Eval(a) => {
            let cfg = a.config()?;
            let report = eval::run_eval(&cfg)?;
            for (kind, skipped) in &report.skipped {
                for s in skipped {
                    eprintln!("[{kind}] skipped {}: {}", s.path, s.reason);
                }
            }
            print!("{}", eval::render_text(&report));
            if let Some(dir) = &cfg.output_dir {
                let (json, text) = eval::write_reports(&report, dir)?;
                println!("wrote {} and {}", json.display(), text.display());
            }
        }
        Command::Compare(a) => {
            let cfg = a.config()?;
            let cmp = eval::compare_features(&cfg)?;
            print!("{}", eval::render_text(&cmp.report));
            print!("{}", eval::render_comparison(&cmp.entries));
            if let Some(dir) = &cfg.output_dir {
                eval::write_reports(&cmp.report, dir)?;
                std::fs::write(dir.join("comparison.json"), serde_json::to_string_pretty(&cmp.entries)? + "\n")?;
                std::fs::write(dir.join("comparison.txt"), eval::render_comparison(&cmp.entries))?;
            }
        }
        Command::Report { input } => {
            let report = eval::read_report(&input)?;
            print!("{}", eval::render_text(&report));
            let entries = eval::compare_runs(&report)?;
            if !entries.is_empty() {
                print!("{}", eval::render_comparison(&entries));
            }
        }
        Command::Serve(a) => {
            tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
                .init();
            let mut cfg = ServiceConfig::load(a.config.as_deref())?;
            if let Some(c) = a.corpus {
                cfg.corpus_root = c;
            }
            if let Some(l) = a.listen {
                cfg.listen = l;
            }
            let listen = cfg.listen.clone();
            let service = Arc::new(Service::new(cfg)?);
            tokio::runtime::Runtime::new()?.block_on(chessvox::http::serve(service, &listen))?;
        }
    }
    Ok(())
}
