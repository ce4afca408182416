mod summary;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use growclusters::gendata::{self, CorpusConfig, GenConfig, GroupedGenConfig, Truth};
use growclusters::io::{self, ResultArchive};
use growclusters::isomap::{self, Disconnected, DEFAULT_NEIGHBORS};
use growclusters::selection::{select_and_fit, DEFAULT_FOLDS};
use growclusters::text::{self, Corpus, Encoding};
use growclusters::{dp_means, hdp_means, DpConfig, Error, HierConfig, LambdaGrid, SelectionMethod};
use growclusters_service::ServiceConfig;

use summary::Summary;

#[derive(Parser)]
#[command(
    name = "growclusters",
    version,
    about = "Penalized nonparametric clustering toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its truth sidecar.
    Gen(GenArgs),
    /// Encode a text corpus as a document-term matrix.
    Encode(EncodeArgs),
    /// Embed a dataset with ISOMAP.
    Isomap(IsomapArgs),
    /// Fit single-source clusters at a fixed or selected lambda.
    Cluster(ClusterArgs),
    /// Fit the two-level (grouped) model.
    Hcluster(HclusterArgs),
    /// Evaluate a lambda grid and fit at the chosen value.
    Select(SelectArgs),
    /// Summarize a result archive.
    Report(ReportArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Blobs,
    SwissRoll,
    Corpus,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "blobs")]
    kind: GenKind,
    /// Number of planted clusters (topics for a corpus).
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Rows per cluster (total rows for swiss-roll, documents for a corpus).
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Minimum distance between planted means, in units of sigma.
    #[arg(long, default_value_t = 8.0)]
    sep: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Number of groups; above 1 adds a `group` column.
    #[arg(long, default_value_t = 1)]
    groups: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file (CSV, or JSON lines for a corpus).
    #[arg(long, short)]
    out: PathBuf,
    /// Truth sidecar; defaults to `<out>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Directory of .txt files or a JSON-lines file of {id, text}.
    input: PathBuf,
    #[arg(long, default_value = "raw")]
    mode: Encoding,
    /// Stopword list, one per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IsomapArgs {
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Embed only the largest component of a disconnected graph.
    #[arg(long)]
    largest_component: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "max-k", default_value_t = 100)]
    max_k: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cluster z-scored columns.
    #[arg(long)]
    standardize: bool,
    /// Write the result archive here.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ClusterArgs {
    input: PathBuf,
    #[arg(
        long,
        allow_negative_numbers = true,
        required_unless_present = "select",
        conflicts_with = "select"
    )]
    lambda: Option<f64>,
    /// Selection method: cv, sil or ch.
    #[arg(long, requires = "grid")]
    select: Option<SelectionMethod>,
    /// lo:hi:steps, inclusive and linear.
    #[arg(long)]
    grid: Option<LambdaGrid>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct SelectArgs {
    input: PathBuf,
    #[arg(long)]
    method: SelectionMethod,
    #[arg(long)]
    grid: LambdaGrid,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct HclusterArgs {
    input: PathBuf,
    #[arg(long, default_value = io::DEFAULT_GROUP_COLUMN)]
    group: String,
    #[arg(long, allow_negative_numbers = true)]
    lambda_global: f64,
    #[arg(long, allow_negative_numbers = true)]
    lambda_local: f64,
    #[arg(long = "max-k", default_value_t = 100)]
    max_k: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "WORKSPACE_DIR", default_value = "workspace")]
    workspace: PathBuf,
    #[arg(long, env = "MAX_UPLOAD_MB", default_value_t = 50)]
    max_upload_mb: usize,
    /// Worker pool size; defaults to the available parallelism.
    #[arg(long, env = "WORKERS")]
    workers: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Generation(_) => 1,
        Error::Numeric(_) | Error::DisconnectedGraph { .. } => 3,
        _ => 2,
    }
}

fn write_output(path: Option<&Path>, content: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(content).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn finish_fit(archive: &ResultArchive, out: Option<&Path>, format: Format) -> Result<(), Error> {
    if let Some(path) = out {
        io::write_result(path, archive)?;
    }
    print_summary(archive, format)
}

fn print_summary(archive: &ResultArchive, format: Format) -> Result<(), Error> {
    let summary = Summary::of(archive);
    let text = match format {
        Format::Text => summary.text(),
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Csv => summary.csv(),
    };
    write_output(None, text.as_bytes())
}

fn gen(args: GenArgs) -> Result<(), Error> {
    let truth_path = args.truth.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".truth.json");
        p.into()
    });
    let base = GenConfig {
        k_true: args.k,
        n_per_cluster: args.n,
        sizes: None,
        d: args.dim,
        separation: args.sep,
        sigma: args.sigma,
        seed: args.seed,
    };
    let (body, truth) = match args.kind {
        GenKind::Blobs if args.groups > 1 => {
            let config = GroupedGenConfig {
                base,
                groups: args.groups,
                usage: None,
            };
            let g = gendata::generate_grouped(&config)?;
            let truth = Truth {
                labels: g.global_labels,
                means: g.means,
                local_labels: Some(g.local_labels),
                config: serde_json::to_value(&config)?,
            };
            (csv_bytes(|b| io::write_grouped_csv(&g.data, b))?, truth)
        }
        GenKind::Blobs => {
            let g = gendata::generate_single(&base)?;
            let truth = Truth {
                labels: g.labels,
                means: g.means,
                local_labels: None,
                config: serde_json::to_value(&base)?,
            };
            (csv_bytes(|b| io::write_dataset_csv(&g.data, b))?, truth)
        }
        GenKind::SwissRoll => {
            let (data, intrinsic) = gendata::swiss_roll_lite(args.n, args.seed)?;
            let truth = Truth {
                labels: Vec::new(),
                means: Vec::new(),
                local_labels: None,
                config: serde_json::json!({
                    "kind": "swiss_roll",
                    "n": args.n,
                    "seed": args.seed,
                    "intrinsic": intrinsic,
                }),
            };
            (csv_bytes(|b| io::write_dataset_csv(&data, b))?, truth)
        }
        GenKind::Corpus => {
            let config = CorpusConfig {
                n_docs: args.n,
                topics: args.k,
                seed: args.seed,
                ..CorpusConfig::default()
            };
            let (corpus, topics) = gendata::generate_corpus(&config)?;
            let mut body = String::new();
            for (id, text) in corpus.documents() {
                body += &serde_json::json!({"id": id, "text": text}).to_string();
                body.push('\n');
            }
            let mut stop: Vec<&String> = corpus.stopwords().iter().collect();
            stop.sort();
            let mut stop_path = args.out.clone().into_os_string();
            stop_path.push(".stopwords.txt");
            let stop_text: String = stop.iter().map(|w| format!("{w}\n")).collect();
            write_output(Some(Path::new(&stop_path)), stop_text.as_bytes())?;
            let truth = Truth {
                labels: topics,
                means: Vec::new(),
                local_labels: None,
                config: serde_json::to_value(&config)?,
            };
            (body.into_bytes(), truth)
        }
    };
    write_output(Some(&args.out), &body)?;
    write_output(
        Some(&truth_path),
        serde_json::to_string_pretty(&truth)?.as_bytes(),
    )?;
    eprintln!(
        "wrote {} and {} (seed {})",
        args.out.display(),
        truth_path.display(),
        args.seed
    );
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<(), Error> {
    let mut corpus = Corpus::load(&args.input)?;
    if let Some(path) = &args.stopwords {
        corpus = corpus.with_stopwords(text::read_stopwords(path)?);
    }
    let vocab = text::build_vocabulary(&corpus)?;
    let matrix = text::encode(&corpus, &vocab, args.mode);
    let bytes = csv_bytes(|b| matrix.write_csv(b))?;
    write_output(args.out.as_deref(), &bytes)
}

fn run_isomap(args: IsomapArgs) -> Result<(), Error> {
    let data = io::read_dataset(&args.input, None)?.into_single();
    let policy = if args.largest_component {
        Disconnected::LargestComponent
    } else {
        Disconnected::Error
    };
    let emb = isomap::isomap(&data, args.neighbors, args.dim, policy)?;
    if emb.dim() < args.dim {
        eprintln!(
            "warning: only {} positive eigenvalues; embedding has {} dimensions",
            emb.dim(),
            emb.dim()
        );
    }
    let bytes = csv_bytes(|b| emb.write_csv(b))?;
    write_output(args.out.as_deref(), &bytes)
}

fn dp_config(fit: &FitArgs, lambda: f64) -> DpConfig {
    DpConfig {
        lambda,
        max_clusters: fit.max_k,
        max_iter: fit.max_iter,
        seed: fit.seed,
        standardize: fit.standardize,
        ..DpConfig::default()
    }
}

fn run_select(
    input: &Path,
    method: SelectionMethod,
    grid: &LambdaGrid,
    folds: usize,
    fit: &FitArgs,
) -> Result<ResultArchive, Error> {
    let data = io::read_dataset(input, None)?.into_single();
    let config = dp_config(fit, grid.values()[0]);
    let (report, partition) = select_and_fit(&data, method, grid, &config, folds)?;
    for ((l, s), k) in report
        .grid
        .values()
        .iter()
        .zip(&report.scores)
        .zip(&report.k_per_lambda)
    {
        log::info!("lambda {l}: score {s:?}, K {k}");
    }
    let mut archive = ResultArchive::selected(config, report, partition);
    archive.dataset = Some(input.display().to_string());
    Ok(archive)
}

fn cluster(args: ClusterArgs) -> Result<(), Error> {
    let archive = match (args.lambda, args.select) {
        (Some(lambda), _) => {
            let config = dp_config(&args.fit, lambda);
            config.validate()?;
            let data = io::read_dataset(&args.input, None)?.into_single();
            let partition = dp_means(&data, &config)?;
            let mut archive = ResultArchive::single(config, partition);
            archive.dataset = Some(args.input.display().to_string());
            archive
        }
        (None, Some(method)) => {
            let grid = args
                .grid
                .as_ref()
                .expect("clap requires --grid with --select");
            run_select(&args.input, method, grid, args.folds, &args.fit)?
        }
        (None, None) => unreachable!("clap requires --lambda or --select"),
    };
    finish_fit(&archive, args.fit.out.as_deref(), args.fit.format)
}

fn select(args: SelectArgs) -> Result<(), Error> {
    let archive = run_select(&args.input, args.method, &args.grid, args.folds, &args.fit)?;
    if let Some(path) = &args.fit.out {
        io::write_result(path, &archive)?;
    }
    let report = archive
        .selection_report
        .as_ref()
        .expect("selection archive");
    match args.fit.format {
        Format::Json => write_output(
            None,
            (serde_json::to_string_pretty(report)? + "\n").as_bytes(),
        ),
        format => {
            let mut out = String::from(if format == Format::Csv {
                "lambda,score,k\n"
            } else {
                ""
            });
            for ((l, s), k) in report
                .grid
                .values()
                .iter()
                .zip(&report.scores)
                .zip(&report.k_per_lambda)
            {
                let s = serde_json::to_value(s)?;
                out += &if format == Format::Csv {
                    format!("{l},{s},{k}\n")
                } else {
                    format!("lambda {l:>10.4}  score {s:>24}  K {k}\n")
                };
            }
            if format == Format::Text {
                out += &format!(
                    "chosen lambda {} ({}), K {}\n",
                    report.chosen_lambda, report.method, report.chosen_k
                );
            }
            write_output(None, out.as_bytes())
        }
    }
}

fn hcluster(args: HclusterArgs) -> Result<(), Error> {
    let config = HierConfig {
        lambda_global: args.lambda_global,
        lambda_local: args.lambda_local,
        max_global_clusters: args.max_k,
        max_iter: args.max_iter,
        seed: args.seed,
        ..HierConfig::default()
    };
    config.validate()?;
    let data = match io::read_dataset(&args.input, Some(&args.group))? {
        io::Loaded::Grouped(g) => g,
        io::Loaded::Single(_) => unreachable!("group column was required"),
    };
    let mut archive = ResultArchive::hierarchical(config.clone(), hdp_means(&data, &config)?);
    archive.dataset = Some(args.input.display().to_string());
    finish_fit(&archive, args.out.as_deref(), args.format)
}

fn report(args: ReportArgs) -> Result<(), Error> {
    let archive = io::read_result(&args.file)?;
    print_summary(&archive, args.format)
}

fn serve(args: ServeArgs) -> Result<(), Error> {
    let mut config = ServiceConfig {
        port: args.port,
        workspace_dir: args.workspace,
        max_upload_mb: args.max_upload_mb,
        ..ServiceConfig::default()
    };
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let dir = config.workspace_dir.clone();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    runtime
        .block_on(growclusters_service::serve(config))
        .map_err(|e| Error::Io {
            path: dir,
            source: e,
        })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Encode(a) => encode(a),
        Command::Isomap(a) => run_isomap(a),
        Command::Cluster(a) => cluster(a),
        Command::Hcluster(a) => hcluster(a),
        Command::Select(a) => select(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
