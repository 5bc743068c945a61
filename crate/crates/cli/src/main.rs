use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fca_registry::registry::{build_context, read_corpus};
use fca_registry::retrieval::{search, search_refined};
use fca_registry::{
    BinarizationConfig, Category, ConceptLattice, Error, FormalContext, Hops, Labeling, Ontology, Query, RefineMode,
};

const NO_COLOR_VAR: &str = "FCA_REGISTRY_NO_COLOR";

#[derive(Parser)]
#[command(name = "fca-registry", version, about = "Concept-lattice catalog of data sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a lattice from a record corpus or a cross-table CSV.
    Build(BuildArgs),
    /// Rank the sources relevant to a list of terms.
    Query(QueryArgs),
    /// Persist the lattice of one classification view.
    Classify(ClassifyArgs),
    /// Print the Hasse diagram in DOT format.
    ExportDot(ExportArgs),
    /// Print size, height and density.
    Stats(StatsArgs),
}

#[derive(Args)]
#[group(id = "input", required = true, multiple = false)]
struct Input {
    /// Record corpus: a TOML file or a directory of them.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Cross-table CSV.
    #[arg(long)]
    context: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Refine {
    Generalize,
    Specialize,
    Both,
    /// Generalize leaves, specialize the root.
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Machine,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Comma-separated term names.
    #[arg(long)]
    terms: String,
    #[arg(long, value_enum, requires = "ontology")]
    refine: Option<Refine>,
    /// Hop limit for refinement, or `unlimited`.
    #[arg(long, default_value = "unlimited", value_parser = parse_hops)]
    hops: Hops,
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct ClassifySource {
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long)]
    context: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "view", required = true, multiple = false)]
struct View {
    #[arg(long, value_parser = parse_category)]
    category: Option<Category>,
    #[arg(long)]
    attribute: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    source: ClassifySource,
    #[command(flatten)]
    view: View,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Label each node only with the objects and attributes it introduces.
    #[arg(long)]
    reduced: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    lattice: PathBuf,
}

fn parse_hops(s: &str) -> Result<Hops, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Build(args) => build(args),
        Command::Query(args) => query(args),
        Command::Classify(args) => classify(args),
        Command::ExportDot(args) => {
            let lat = load_lattice(&args.lattice)?;
            let labeling = if args.reduced { Labeling::Reduced } else { Labeling::Full };
            print!("{}", lat.to_dot(labeling));
            Ok(())
        }
        Command::Stats(args) => {
            let lat = load_lattice(&args.lattice)?;
            println!("{}", stats_line(&lat));
            Ok(())
        }
    }
}

fn load_lattice(path: &PathBuf) -> anyhow::Result<ConceptLattice> {
    ConceptLattice::load(path).with_context(|| format!("reading lattice {}", path.display()))
}

fn load_context(path: &PathBuf) -> anyhow::Result<FormalContext> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    FormalContext::read_csv(file).with_context(|| format!("reading context {}", path.display()))
}

fn save(lat: &ConceptLattice, out: &PathBuf) -> anyhow::Result<()> {
    lat.save(out).with_context(|| format!("writing {}", out.display()))
}

fn build(args: BuildArgs) -> Result<(), Failure> {
    let ctx = match (args.input.records, args.input.context) {
        (Some(records), None) => {
            let corpus = read_corpus(&records).with_context(|| format!("reading records {}", records.display()))?;
            build_context(&corpus, &BinarizationConfig::default())?
        }
        (None, Some(csv)) => load_context(&csv)?,
        _ => unreachable!("clap enforces exactly one input"),
    };
    let lat = ConceptLattice::build(&ctx);
    save(&lat, &args.out)?;
    println!("{}", counts_line(&lat));
    Ok(())
}

fn query(args: QueryArgs) -> Result<(), Failure> {
    let names: Vec<&str> = args.terms.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if names.is_empty() {
        return Err(Failure::Usage("--terms needs at least one term".into()));
    }
    let lat = load_lattice(&args.lattice)?;
    let q = match Query::from_names(lat.context(), &names) {
        Ok(q) => q,
        Err(Error::AmbiguousTerm { term, candidates }) => {
            return Err(Failure::Usage(format!("`{term}` is ambiguous; use one of: {}", candidates.join(", "))));
        }
        Err(e) => return Err(e.into()),
    };
    let rs = match (args.refine, args.ontology) {
        (Some(refine), Some(path)) => {
            let ont = Ontology::load(&path).with_context(|| format!("reading ontology {}", path.display()))?;
            let mode = match refine {
                Refine::Generalize => RefineMode::Generalize,
                Refine::Specialize => RefineMode::Specialize,
                Refine::Both => RefineMode::Both,
                Refine::Auto => ont.default_mode(&q).ok_or_else(|| {
                    Failure::Usage("query terms are neither leaves nor the root; pick a refinement mode".into())
                })?,
            };
            search_refined(&lat, &q, &ont, mode, args.hops)?
        }
        _ => search(&lat, &q)?,
    };
    match args.format {
        Format::Machine => println!("{}", rs.to_json()),
        Format::Table => {
            let styled = std::env::var_os(NO_COLOR_VAR).is_none() && std::io::stdout().is_terminal();
            print!("{}", rs.to_table(styled));
        }
    }
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<(), Failure> {
    let ctx = match (args.source.lattice, args.source.context) {
        (Some(lattice), None) => load_lattice(&lattice)?.context().clone(),
        (None, Some(csv)) => load_context(&csv)?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    let view = match (args.view.category, args.view.attribute) {
        (Some(cat), None) => ctx.project_by_category(cat),
        (None, Some(name)) => {
            let attr = match ctx.resolve_term(&name) {
                Ok(Some(a)) => a.clone(),
                Ok(None) => return Err(Error::UnknownAttribute(name).into()),
                Err(Error::AmbiguousTerm { term, candidates }) => {
                    return Err(Failure::Usage(format!("`{term}` is ambiguous; use one of: {}", candidates.join(", "))));
                }
                Err(e) => return Err(e.into()),
            };
            ctx.select_by_attribute(&attr)?
        }
        _ => unreachable!("clap enforces exactly one view"),
    };
    let lat = ConceptLattice::build(&view);
    save(&lat, &args.out)?;
    println!("{}", counts_line(&lat));
    Ok(())
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn counts_line(lat: &ConceptLattice) -> String {
    let ctx = lat.context();
    format!(
        "{}, {}, {}",
        plural(ctx.object_count(), "object"),
        plural(ctx.attribute_count(), "attribute"),
        plural(lat.len(), "concept")
    )
}

fn stats_line(lat: &ConceptLattice) -> String {
    let ctx = lat.context();
    let cells = ctx.object_count() * ctx.attribute_count();
    let density = if cells == 0 { 0.0 } else { ctx.incidence_count() as f64 / cells as f64 };
    format!(
        "{}, height {}, {}, {}, {}, density {density:.3}",
        plural(lat.len(), "concept"),
        lat.height(),
        plural(lat.covers().len(), "cover"),
        plural(ctx.object_count(), "object"),
        plural(ctx.attribute_count(), "attribute")
    )
}
