use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use statviz::api::{serve, AppState};
use statviz::config::{parse_weights, FileConfig, Settings};
use statviz::store::TemplateStore;
use statviz_core::assets::{query_words, AssetLibrary};
use statviz_core::fact::{FactGroup, Relation};
use statviz_core::pipeline::{Engine, PipelineError};
use statviz_core::synth::{top, Candidate, RankingWeights, RuleOut, Scores, SynthError};
use statviz_core::text::corpus::{AnnotatedCorpus, Split};
use statviz_core::text::crf::{ConvCrf, ModelConfig};
use statviz_core::text::embedding::EmbeddingTable;
use statviz_core::text::eval::EntityReport;
use statviz_core::text::features::FeatureConfig;
use statviz_core::text::labels::Label;
use statviz_core::text::train::{train, TrainConfig};
use statviz_core::text::{cross_validate, early_stopping_split, evaluate, StatementTagger, TextAnalyzer};

#[derive(Debug, Parser)]
#[command(name = "statviz", version, about = "Turn proportion statements into infographics")]
struct Cli {
    /// TOML settings file (default: ./statviz.toml when present).
    #[arg(long, global = true, env = "STATVIZ_CONFIG")]
    config: Option<PathBuf>,
    /// Asset directory: blueprints, icons, palettes, fonts.
    #[arg(long, global = true)]
    assets: Option<PathBuf>,
    /// Tagger model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Word embedding table.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Ranking weights "ws,wv,wi".
    #[arg(long, global = true)]
    weights: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the best infographics for a statement as SVG files.
    Generate {
        statement: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// JSON-lines template store.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Train a tagger model on the train split of a corpus.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "tagger.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 600)]
        max_epochs: usize,
        #[arg(long, default_value_t = 32)]
        kernels: usize,
    },
    /// Entity-level precision, recall and F1 of the tagger.
    Eval {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Cross-validate with this many folds, training each from scratch.
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, value_enum, default_value_t = EvalSplit::Heldout)]
        split: EvalSplit,
    },
    /// Print the tag sequence and facts read from a statement.
    Tag {
        statement: String,
        #[arg(long)]
        json: bool,
    },
    /// Inspect the asset library.
    Assets {
        #[command(subcommand)]
        command: AssetsCommand,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EvalSplit {
    Train,
    Heldout,
}

#[derive(Debug, Subcommand)]
enum AssetsCommand {
    /// Icons ranked against a query.
    Icons {
        #[arg(long, default_value = "")]
        query: String,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Palettes ranked against a query.
    Palettes {
        #[arg(long, default_value = "")]
        query: String,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Load every asset and blueprint and report counts.
    Check,
}

/// Exit status 1 with a message.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut file = FileConfig::discover(cli.config.as_deref())?.with_env(|k| std::env::var(k).ok())?;
    if let Some(a) = &cli.assets {
        file.assets = Some(a.clone());
    }
    if let Some(m) = &cli.model {
        file.model = Some(m.clone());
    }
    if let Some(e) = &cli.embeddings {
        file.embeddings = Some(e.clone());
    }
    if let Some(w) = &cli.weights {
        parse_weights(w)?;
        file.weights = Some(w.clone());
    }
    Ok(Settings::resolve(file)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let s = settings(cli)?;
    match &cli.command {
        Command::Generate { statement, out, top, seed } => generate(&s, statement, out, *top, *seed),
        Command::Serve { port, host, templates } => {
            let port = port.unwrap_or(s.port);
            let templates = templates.clone().unwrap_or_else(|| s.templates.clone());
            serve_cmd(&s, host, port, &templates)
        }
        Command::Train { corpus, out, seed, learning_rate, max_epochs, kernels } => {
            let corpus = corpus.clone().unwrap_or_else(|| default_corpus(&s));
            train_cmd(&s, &corpus, out, *seed, *learning_rate, *max_epochs, *kernels)
        }
        Command::Eval { corpus, folds, split } => {
            let corpus = corpus.clone().unwrap_or_else(|| default_corpus(&s));
            eval_cmd(&s, &corpus, *folds, *split)
        }
        Command::Tag { statement, json } => tag_cmd(&s, statement, *json),
        Command::Assets { command } => assets_cmd(&s, command),
    }
}

fn default_corpus(s: &Settings) -> PathBuf {
    s.paths.assets.join("corpus/statements.conll")
}

#[derive(Serialize)]
struct TokenRow<'a> {
    text: &'a str,
    label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
}

#[derive(Serialize)]
struct ManifestCandidate<'a> {
    rank: usize,
    file: String,
    id: &'a str,
    blueprint: &'a str,
    relation: Relation,
    icons: Vec<&'a str>,
    palette: &'a str,
    descriptions: &'a std::collections::BTreeMap<String, statviz_core::fact::DescriptionForm>,
    scores: &'a Scores,
}

#[derive(Serialize)]
struct Manifest<'a> {
    statement: &'a str,
    seed: u64,
    weights: RankingWeights,
    tokens: Vec<TokenRow<'a>>,
    group: &'a FactGroup,
    candidates: Vec<ManifestCandidate<'a>>,
    rule_outs: &'a [RuleOut],
}

fn generate(s: &Settings, statement: &str, out: &Path, n: usize, seed: u64) -> Result<ExitCode, Failure> {
    let engine = Engine::load(&s.paths)?;
    let t0 = Instant::now();
    let (analysis, generation) = match engine.generate(statement, &s.weights) {
        Ok(r) => r,
        Err(PipelineError::Synth(SynthError::NoCandidates { rule_outs })) => {
            eprintln!("error: no blueprint admits this statement");
            for r in &rule_outs {
                eprintln!("  {}: {}", r.blueprint, r.reason);
            }
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let picked: Vec<Candidate> = top(&generation.candidates, n);
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let mut rows = Vec::new();
    for (i, c) in picked.iter().enumerate() {
        let svg = engine.render(c, seed)?;
        let file = format!("{:02}-{}.svg", i + 1, c.blueprint);
        std::fs::write(out.join(&file), svg).map_err(|e| format!("{}: {e}", out.join(&file).display()))?;
        println!("{}\t{:.4}\t{}", out.join(&file).display(), c.scores.total, c.id);
        rows.push(ManifestCandidate {
            rank: i + 1,
            file,
            id: &c.id,
            blueprint: &c.blueprint,
            relation: c.relation,
            icons: c.icons.iter().map(|m| m.asset_id.as_str()).collect(),
            palette: &c.choice.palette,
            descriptions: &c.descriptions,
            scores: &c.scores,
        });
    }
    let tagged = &analysis.tagged;
    let confidences = tagged.tags.confidences();
    let manifest = Manifest {
        statement,
        seed,
        weights: s.weights,
        tokens: tagged
            .tokens
            .iter()
            .zip(&tagged.tags.labels)
            .enumerate()
            .map(|(i, (t, l))| TokenRow { text: &t.text, label: *l, confidence: confidences.as_ref().map(|c| c[i]) })
            .collect(),
        group: &analysis.group,
        candidates: rows,
        rule_outs: &generation.rule_outs,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out.join("manifest.json"), json + "\n").map_err(|e| format!("{}: {e}", out.display()))?;
    eprintln!("{} candidates, {} written in {:.0?}", generation.candidates.len(), picked.len(), t0.elapsed());
    Ok(ExitCode::SUCCESS)
}

fn serve_cmd(s: &Settings, host: &str, port: u16, templates: &Path) -> Result<ExitCode, Failure> {
    let engine = Arc::new(Engine::load(&s.paths)?);
    let store = TemplateStore::open(templates)?;
    let state = Arc::new(AppState::new(engine, s.weights, Duration::from_secs(s.session_ttl_secs), store));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, state).await
    })?;
    Ok(ExitCode::SUCCESS)
}

fn load_embeddings(s: &Settings) -> Result<EmbeddingTable, Failure> {
    Ok(EmbeddingTable::load(&s.paths.embeddings)?)
}

fn train_cmd(
    s: &Settings,
    corpus: &Path,
    out: &Path,
    seed: u64,
    learning_rate: f64,
    max_epochs: usize,
    kernels: usize,
) -> Result<ExitCode, Failure> {
    let embeddings = load_embeddings(s)?;
    let corpus = AnnotatedCorpus::load(corpus)?;
    let mut model = ModelConfig::new(FeatureConfig::new(embeddings.dim()));
    model.kernels = kernels;
    let mut config = TrainConfig::new(model);
    config.seed = seed;
    config.learning_rate = learning_rate;
    config.max_epochs = max_epochs;
    // early stopping watches every 10th training sentence; the held-out split stays unseen
    let data = early_stopping_split(&corpus.split(Split::Train), 10);
    let t0 = Instant::now();
    let (model, report) = train::<f64>(&data, &config, &embeddings, None, |e| {
        if let Some(f1) = e.heldout_macro_f1 {
            eprintln!("epoch {:4}  loss {:.4}  step {:.4}  dev macro-F1 {:.4}", e.epoch, e.loss, e.step, f1);
        }
    })?;
    std::fs::write(out, model.to_json()).map_err(|e| format!("{}: {e}", out.display()))?;
    eprintln!("best epoch {} of {}, {:.1?}; wrote {}", report.best_epoch, report.epochs.len(), t0.elapsed(), out.display());
    let held = evaluate(&model, &corpus, Split::Heldout, &embeddings, None)?;
    if held.number.support > 0 {
        print_report_header();
        print_report("heldout", &held);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report_header() {
    println!("{:<8} {:>7} {:>7} {:>7} {:>7} {:>7}", "", "M", "N", "P", "W", "macro");
}

fn print_report(name: &str, r: &EntityReport) {
    println!(
        "{:<8} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
        name,
        r.modifier.f1,
        r.number.f1,
        r.part.f1,
        r.whole.f1,
        r.macro_f1()
    );
}

fn eval_cmd(s: &Settings, corpus: &Path, folds: Option<usize>, split: EvalSplit) -> Result<ExitCode, Failure> {
    let embeddings = load_embeddings(s)?;
    let corpus = AnnotatedCorpus::load(corpus)?;
    match folds {
        Some(k) if k >= 2 => {
            let config = TrainConfig::new(ModelConfig::new(FeatureConfig::new(embeddings.dim())));
            let reports = cross_validate::<f64>(&corpus, k, &config, &embeddings, None)?;
            println!("F1 per entity type, {k}-fold cross-validation");
            print_report_header();
            for (i, r) in reports.iter().enumerate() {
                print_report(&format!("fold {}", i + 1), r);
            }
            print_report("mean", &EntityReport::mean(&reports));
        }
        Some(k) => return Err(Failure(format!("--folds needs at least 2, got {k}"))),
        None => {
            let text = std::fs::read_to_string(&s.paths.model).map_err(|e| format!("{}: {e}", s.paths.model.display()))?;
            let model = ConvCrf::<f64>::from_json(&text)?;
            let which = match split {
                EvalSplit::Train => Split::Train,
                EvalSplit::Heldout => Split::Heldout,
            };
            let r = evaluate(&model, &corpus, which, &embeddings, None)?;
            println!("{:<8} {:>9} {:>9} {:>9} {:>8}", "entity", "precision", "recall", "F1", "support");
            for (name, p) in [("M", r.modifier), ("N", r.number), ("P", r.part), ("W", r.whole)] {
                println!("{name:<8} {:>9.4} {:>9.4} {:>9.4} {:>8}", p.precision, p.recall, p.f1, p.support);
            }
            println!("macro-F1 {:.4}", r.macro_f1());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tag_cmd(s: &Settings, statement: &str, json: bool) -> Result<ExitCode, Failure> {
    let embeddings = Arc::new(load_embeddings(s)?);
    let analyzer = TextAnalyzer::<f64>::load(&s.paths.model, embeddings, None)?;
    let tagged = analyzer.tag(statement)?;
    let group = statviz_core::fact::segment_facts(&tagged, &analyzer);
    if json {
        #[derive(Serialize)]
        struct Out<'a> {
            tokens: Vec<TokenRow<'a>>,
            group: Option<&'a FactGroup>,
            error: Option<String>,
        }
        let conf = tagged.tags.confidences();
        let out = Out {
            tokens: tagged
                .tokens
                .iter()
                .zip(&tagged.tags.labels)
                .enumerate()
                .map(|(i, (t, l))| TokenRow { text: &t.text, label: *l, confidence: conf.as_ref().map(|c| c[i]) })
                .collect(),
            group: group.as_ref().ok(),
            error: group.as_ref().err().map(|e| e.to_string()),
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        for (t, l) in tagged.tokens.iter().zip(&tagged.tags.labels) {
            println!("{}\t{}", t.text, l);
        }
        match &group {
            Ok(g) => {
                println!();
                for f in &g.facts {
                    println!(
                        "value {}  modifier {:?}  part {:?}  whole {:?}",
                        f.value,
                        f.modifier_text().unwrap_or(""),
                        f.part_text().unwrap_or(""),
                        f.whole_text().unwrap_or("")
                    );
                }
                println!("relation {:?}", g.relation);
            }
            Err(e) => eprintln!("no fact: {e}"),
        }
    }
    Ok(if group.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn assets_cmd(s: &Settings, command: &AssetsCommand) -> Result<ExitCode, Failure> {
    let embeddings = Arc::new(load_embeddings(s)?);
    let synth = statviz_core::synth::Synthesizer::load(&s.paths.assets, Some(embeddings))?;
    let lib: &AssetLibrary = &synth.library;
    match command {
        AssetsCommand::Icons { query, limit } => {
            for m in lib.match_icons(&query_words(query), *limit) {
                let flags = lib.manifest.icon(&m.asset_id).expect("matched icons exist").flags;
                println!("{:<16} {:.4}  {}→{}  {:?}", m.asset_id, m.similarity, m.query_word, m.keyword, flags);
            }
        }
        AssetsCommand::Palettes { query, limit } => {
            for m in lib.match_palettes(&query_words(query), *limit) {
                let p = lib.manifest.palette(&m.asset_id).expect("matched palettes exist");
                let colors: Vec<String> = p.colors().iter().map(|c| c.to_string()).collect();
                println!("{:<16} {:.4}  {}→{}  {}", m.asset_id, m.similarity, m.query_word, m.keyword, colors.join(" "));
            }
        }
        AssetsCommand::Check => {
            let c = lib.manifest.counts();
            println!("{} icons, {} palettes, {} blueprints", lib.manifest.icons.len(), lib.manifest.palettes.len(), synth.blueprints.len());
            println!("{c:?}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
