use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use grantmatch_client::{fetch_remote, GrantMatchClient};
use grantmatch_core::assoc::{AssociationRule, HistoricalMatch, MiningParams};
use grantmatch_core::corpus::{DocumentKind, Owner};
use grantmatch_core::pipeline::{Analysis, Dataset, RuleSource};
use grantmatch_core::recommend::{
    recommend, render_report, render_totals_table, ReportFormat, WeightParams, DEFAULT_THRESHOLD,
};
use grantmatch_core::relevance::SurfaceMatch;
use grantmatch_core::taxonomy::KeywordTable;
use grantmatch_core::tokenize::TokenizerProfile;

/// Recommend researchers for grant calls from surface relevance and
/// association rules mined from past awards.
#[derive(Parser)]
#[command(name = "grantmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a layout directory into a dataset JSON file.
    Ingest(IngestArgs),
    /// Keyword table utilities.
    Taxonomy {
        #[command(subcommand)]
        command: TaxonomyCommand,
    },
    /// Compute one channel's scores for a grant.
    Score {
        #[command(subcommand)]
        command: ScoreCommand,
    },
    /// Mine association rules for a grant.
    Mine(MineArgs),
    /// Fuse channel scores and select candidates.
    Recommend(RecommendArgs),
    /// Total scores side by side for several alpha values.
    Compare(CompareArgs),
    /// Compute channel scores for every grant (the file a server can load).
    Analyze(AnalyzeArgs),
    /// Download a page into a layout directory.
    Fetch(FetchArgs),
    /// List grants known to a running server.
    Grants(ServerArgs),
    /// Show a researcher profile from a running server.
    Researcher {
        id: String,
        #[command(flatten)]
        server: ServerArgs,
    },
    /// Ask a running server to reload its data.
    Reload(ServerArgs),
}

#[derive(Args)]
struct ServerArgs {
    /// Service root url.
    #[arg(long, env = "GRANTMATCH_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    root: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keyword table whose keywords join the tokenizer lexicon
    /// [default: <root>/keywords.tsv when present]
    #[arg(long)]
    table: Option<PathBuf>,
    /// Extra lexicon phrases, one per line.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Replaces the built-in stopword list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TaxonomyCommand {
    /// Print entry counts per level.
    Stats {
        #[arg(long)]
        table: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScoreCommand {
    Surface(SurfaceArgs),
    Historical(HistoricalArgs),
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    grant: String,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    table: PathBuf,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MiningArgs {
    #[arg(long, default_value_t = MiningParams::default().min_support)]
    min_support: f64,
    #[arg(long, default_value_t = MiningParams::default().min_confidence)]
    min_confidence: f64,
    #[arg(long, default_value_t = MiningParams::default().max_itemset_width)]
    max_width: usize,
    #[arg(long, value_enum, default_value_t = Source::Merged)]
    rule_source: Source,
}

impl MiningArgs {
    fn params(&self) -> Result<MiningParams> {
        let p = MiningParams {
            min_support: self.min_support,
            min_confidence: self.min_confidence,
            max_itemset_width: self.max_width,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    /// Researcher documents plus the grant's historical documents.
    Merged,
    /// Only the grant's historical documents.
    HistoricalOnly,
}

impl From<Source> for RuleSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Merged => RuleSource::Merged,
            Source::HistoricalOnly => RuleSource::HistoricalOnly,
        }
    }
}

#[derive(Args)]
struct HistoricalArgs {
    #[arg(long)]
    grant: String,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    mining: MiningArgs,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    grant: String,
    #[command(flatten)]
    mining: MiningArgs,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => ReportFormat::Table,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    grant: String,
    /// Surface weight; the historical weight is 1 - alpha.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, required_unless_present = "server")]
    surface: Option<PathBuf>,
    #[arg(long, required_unless_present = "server")]
    historical: Option<PathBuf>,
    /// Ask a running server instead of reading score files.
    #[arg(long, conflicts_with_all = ["surface", "historical"])]
    server: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    grant: String,
    #[arg(long)]
    surface: PathBuf,
    #[arg(long)]
    historical: PathBuf,
    /// Repeat for each column.
    #[arg(long = "alpha", num_args = 1.., default_values_t = [0.5, 0.8, 0.2])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset JSON from `ingest`, or a layout directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    table: PathBuf,
    #[command(flatten)]
    mining: MiningArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    uri: String,
    /// Layout directory to save into.
    #[arg(long)]
    root: PathBuf,
    /// Save as a page of this grant.
    #[arg(long, required_unless_present = "researcher", conflicts_with = "researcher")]
    grant: Option<String>,
    /// Save under `historical/` instead of `surface/`.
    #[arg(long, requires = "grant")]
    historical: bool,
    /// Save as a paper of this researcher.
    #[arg(long)]
    researcher: Option<String>,
    /// File name [default: derived from the uri]
    #[arg(long)]
    name: Option<String>,
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    let mut content = content.to_owned();
    if !content.ends_with('\n') {
        content.push('\n');
    }
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => match std::io::stdout().lock().write_all(content.as_bytes()) {
            Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
            other => other.context("writing to stdout"),
        },
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let content = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&content).with_context(|| format!("parsing {}", path.display()))
}

fn load_dataset(path: &Path, table: Option<&KeywordTable>) -> Result<Dataset> {
    if path.is_dir() {
        Ok(Dataset::load(path, &TokenizerProfile::default(), table)?)
    } else {
        Ok(Dataset::read(path)?)
    }
}

fn ingest(args: IngestArgs) -> Result<()> {
    let profile = TokenizerProfile::load("default", args.stopwords.as_deref(), args.lexicon.as_deref())?;
    let table_path = args
        .table
        .or_else(|| Some(args.root.join("keywords.tsv")).filter(|p| p.is_file()));
    let table = table_path.as_deref().map(KeywordTable::load).transpose()?;
    let dataset = Dataset::load(&args.root, &profile, table.as_ref())?;
    write_output(Some(&args.out), &dataset.to_json())?;
    eprintln!(
        "ingested {} documents ({} grants, {} researchers)",
        dataset.corpus.document_count,
        dataset.grants.len(),
        dataset.researchers.len()
    );
    Ok(())
}

fn taxonomy_stats(table: &Path) -> Result<()> {
    let t = KeywordTable::load(table)?;
    let stats = format!(
        "categories     {}\nsubcategories  {}\nfields         {}\nkeywords       {}",
        t.category_count, t.subcategory_count, t.field_count, t.keyword_count
    );
    write_output(None, &stats)
}

fn score_surface(args: SurfaceArgs) -> Result<()> {
    let table = KeywordTable::load(&args.table)?;
    let dataset = load_dataset(&args.corpus, Some(&table))?;
    let matches = dataset.surface_matches(&args.grant, &table)?;
    write_output(args.out.as_deref(), &to_json(&matches))
}

fn grant_rules(dataset: &Dataset, grant: &str, mining: &MiningArgs) -> Result<Vec<AssociationRule>> {
    let db = dataset.researcher_transactions();
    let (_, rules) = dataset.grant_rules(grant, &mining.params()?, mining.rule_source.into(), &db)?;
    Ok(rules)
}

fn score_historical(args: HistoricalArgs) -> Result<()> {
    let dataset = load_dataset(&args.corpus, None)?;
    let rules = grant_rules(&dataset, &args.grant, &args.mining)?;
    let matches = dataset.historical_matches(&args.grant, &rules);
    write_output(args.out.as_deref(), &to_json(&matches))
}

fn mine(args: MineArgs) -> Result<()> {
    let dataset = load_dataset(&args.corpus, None)?;
    let rules = grant_rules(&dataset, &args.grant, &args.mining)?;
    eprintln!("{} rules", rules.len());
    write_output(args.out.as_deref(), &to_json(&rules))
}

fn read_channels(surface: &Path, historical: &Path) -> Result<(Vec<SurfaceMatch>, Vec<HistoricalMatch>)> {
    Ok((read_json(surface)?, read_json(historical)?))
}

async fn recommend_cmd(args: RecommendArgs) -> Result<()> {
    let list = match (&args.server, &args.surface, &args.historical) {
        (Some(server), _, _) => {
            GrantMatchClient::new(server)?
                .recommendations(&args.grant, Some(args.alpha), Some(args.threshold))
                .await?
        }
        (None, Some(s), Some(h)) => {
            let (surface, historical) = read_channels(s, h)?;
            let params = WeightParams::from_alpha(args.alpha)?;
            recommend(&args.grant, &surface, &historical, &params, args.threshold)?
        }
        _ => bail!("either --server or both --surface and --historical are required"),
    };
    write_output(args.out.as_deref(), &render_report(&list, args.format.into()))
}

fn compare(args: CompareArgs) -> Result<()> {
    let (surface, historical) = read_channels(&args.surface, &args.historical)?;
    let lists = args
        .alphas
        .iter()
        .map(|&a| {
            let params = WeightParams::from_alpha(a)?;
            Ok(recommend(&args.grant, &surface, &historical, &params, args.threshold)?)
        })
        .collect::<Result<Vec<_>>>()?;
    write_output(None, &render_totals_table(&lists))
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let table = KeywordTable::load(&args.table)?;
    let dataset = load_dataset(&args.corpus, Some(&table))?;
    let analysis = Analysis::compute(&dataset, &table, &args.mining.params()?, args.mining.rule_source.into())?;
    write_output(args.out.as_deref(), &analysis.to_json())
}

/// Last path segment of the uri with an extension matching `kind`.
fn file_name_for(uri: &str, kind: DocumentKind) -> String {
    let ext = match kind {
        DocumentKind::Html => "html",
        DocumentKind::PlainText => "txt",
    };
    let rest = uri.split_once("://").map_or(uri, |(_, r)| r);
    let path = rest.find('/').map_or("", |i| &rest[i..]);
    let stem = path
        .split(['?', '#'])
        .next()
        .unwrap_or("")
        .trim_end_matches('/')
        .rsplit('/')
        .next()
        .filter(|s| !s.is_empty())
        .unwrap_or("index");
    let stem: String = stem
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    match Path::new(&stem).extension().and_then(|e| e.to_str()) {
        Some("html" | "htm") if kind == DocumentKind::Html => stem,
        Some("txt") if kind == DocumentKind::PlainText => stem,
        _ => format!("{stem}.{ext}"),
    }
}

async fn fetch(args: FetchArgs) -> Result<()> {
    let (owner, dir) = match (&args.grant, &args.researcher) {
        (Some(g), _) => {
            let sub = if args.historical { "historical" } else { "surface" };
            let owner = if args.historical {
                Owner::Historical(g.clone())
            } else {
                Owner::Grant(g.clone())
            };
            (owner, args.root.join("grants").join(g).join(sub))
        }
        (None, Some(r)) => (
            Owner::Researcher(r.clone()),
            args.root.join("researchers").join(r).join("papers"),
        ),
        (None, None) => bail!("one of --grant or --researcher is required"),
    };
    let doc = fetch_remote(&args.uri, owner).await?;
    let name = match args.name {
        Some(n) => n,
        None => file_name_for(&args.uri, doc.kind),
    };
    if DocumentKind::from_path(Path::new(&name)) != Some(doc.kind) {
        bail!("file name `{name}` does not match the fetched content ({:?})", doc.kind);
    }
    let path = dir.join(name);
    write_output(Some(&path), &doc.body)?;
    eprintln!("saved {}", path.display());
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

async fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Taxonomy {
            command: TaxonomyCommand::Stats { table },
        } => taxonomy_stats(&table),
        Command::Score {
            command: ScoreCommand::Surface(args),
        } => score_surface(args),
        Command::Score {
            command: ScoreCommand::Historical(args),
        } => score_historical(args),
        Command::Mine(args) => mine(args),
        Command::Recommend(args) => recommend_cmd(args).await,
        Command::Compare(args) => compare(args),
        Command::Analyze(args) => analyze(args),
        Command::Fetch(args) => fetch(args).await,
        Command::Grants(s) => {
            let grants = GrantMatchClient::new(&s.server)?.grants().await?;
            write_output(None, &to_json(&grants))
        }
        Command::Researcher { id, server } => {
            let profile = GrantMatchClient::new(&server.server)?.researcher(&id).await?;
            write_output(None, &to_json(&profile))
        }
        Command::Reload(s) => {
            let summary = GrantMatchClient::new(&s.server)?.reload().await?;
            write_output(None, &to_json(&summary))
        }
    }
}
