use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use iqpool::attributes::{QualityAttribute, WindowConfig};
use iqpool::bench::{
    attribute_from_name, attribute_slots, build_codewords, database_slots, emit_reports,
    parse_pooling_list, read_correlations, run_bench, score_pair, write_codewords, BenchConfig,
    BestMode,
};
use iqpool::dataset::load_image;
use iqpool::stats::DEFAULT_ALPHA;
use iqpool::synth::{generate, SynthConfig};
use iqpool::{InfoWeightConfig, Result};

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "iqpool",
    version,
    about = "Spatial pooling benchmark for image quality maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full study over one or more manifests
    Bench(BenchArgs),
    /// Score a single image pair under every attribute and pooling strategy
    Pool(PoolArgs),
    /// Generate the synthetic desk-scale dataset
    Synth(SynthArgs),
    /// Build the codeword matrix from an existing correlations.csv
    Significance(SignificanceArgs),
}

#[derive(Args, Debug)]
struct MapArgs {
    /// Attributes: squared_error, ssim, plugin
    #[arg(long, value_delimiter = ',', default_value = "squared_error,ssim")]
    attributes: Vec<String>,

    /// Pooling: `all`, family names or strategy ids such as `minkowski(p=2)`
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pooling: Vec<String>,

    /// Constant of the information-content weights
    #[arg(long, default_value_t = InfoWeightConfig::DEFAULT_C2)]
    c2: f64,

    /// Side of the SSIM and information-weight windows
    #[arg(long, default_value_t = WindowConfig::DEFAULT_SIDE)]
    window: usize,
}

#[derive(Args, Debug)]
struct SelectionArgs {
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,

    /// Also build a codeword matrix for each distortion type
    #[arg(long)]
    per_type_samples: bool,

    /// Pick family members on whole-database correlations instead of per type
    #[arg(long)]
    overall: bool,

    /// Database ids for the three codeword slots, in order
    #[arg(long, value_delimiter = ',')]
    databases: Vec<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, required = true)]
    manifest: Vec<PathBuf>,

    #[command(flatten)]
    maps: MapArgs,

    #[command(flatten)]
    selection: SelectionArgs,

    #[arg(long, default_value = "bench-out")]
    out: PathBuf,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// JSON-lines score cache, reused across runs
    #[arg(long)]
    cache: Option<PathBuf>,

    /// Accept exponents and bin counts outside the standard sets
    #[arg(long)]
    allow_custom: bool,
}

#[derive(Args, Debug)]
struct PoolArgs {
    #[arg(long)]
    reference: PathBuf,

    #[arg(long)]
    distorted: PathBuf,

    #[command(flatten)]
    maps: MapArgs,

    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "synth")]
    out: PathBuf,

    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,

    #[arg(long, default_value_t = SynthConfig::default().references)]
    references: usize,

    #[arg(long, default_value_t = SynthConfig::default().severities)]
    severities: usize,

    #[arg(long, default_value_t = SynthConfig::default().width)]
    width: usize,

    #[arg(long, default_value_t = SynthConfig::default().height)]
    height: usize,
}

#[derive(Args, Debug)]
struct SignificanceArgs {
    /// correlations.csv from a previous bench run
    #[arg(long)]
    correlations: PathBuf,

    #[command(flatten)]
    selection: SelectionArgs,

    /// Directory for codewords.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn best_mode(s: &SelectionArgs) -> BestMode {
    if s.overall {
        BestMode::Overall
    } else {
        BestMode::PerType
    }
}

fn attributes(m: &MapArgs) -> Result<Vec<Arc<dyn QualityAttribute>>> {
    m.attributes
        .iter()
        .map(|a| attribute_from_name(a.trim(), m.window))
        .collect()
}

fn bench(args: BenchArgs) -> Result<u8> {
    let mut cfg = BenchConfig::new(
        args.manifest,
        attributes(&args.maps)?,
        parse_pooling_list(&args.maps.pooling, args.maps.window, args.maps.c2)?,
    );
    cfg.alpha = args.selection.alpha;
    cfg.best = best_mode(&args.selection);
    cfg.per_type_samples = args.selection.per_type_samples;
    cfg.database_slots = args.selection.databases;
    cfg.threads = args.threads;
    cfg.cache_path = args.cache;
    cfg.allow_custom_parameters = args.allow_custom;

    let report = run_bench(&cfg)?;
    let files = emit_reports(&report, &args.out)?;
    for f in &files {
        println!("{}", f.display());
    }
    let failed = report.failed_records();
    if failed > 0 {
        eprintln!(
            "{failed} of {} records skipped; see run.json",
            report.run.records
        );
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn pool(args: PoolArgs) -> Result<u8> {
    let attrs = attributes(&args.maps)?;
    let specs = parse_pooling_list(&args.maps.pooling, args.maps.window, args.maps.c2)?;
    for s in &specs {
        s.validate()?;
    }
    let reference = load_image(&args.reference)?;
    let distorted = load_image(&args.distorted)?;
    let scores = score_pair(&reference, &distorted, &attrs, &specs)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| iqpool::Error::Io {
            path: p.clone(),
            source: e,
        })?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "attribute",
        "pooling",
        "value",
        "degenerate_fallback",
        "error",
    ])?;
    let mut failed = false;
    for s in scores {
        let (value, fallback, error) = match s.result {
            Ok(p) => (
                p.value.to_string(),
                p.degenerate_fallback.to_string(),
                String::new(),
            ),
            Err(e) => {
                failed = true;
                (String::new(), String::new(), e)
            }
        };
        w.write_record([s.attribute, s.pooling.id(), value, fallback, error])?;
    }
    w.flush().map_err(|e| iqpool::Error::Io {
        path: args.out.unwrap_or_else(|| "<stdout>".into()),
        source: e,
    })?;
    Ok(if failed { EXIT_PARTIAL } else { 0 })
}

fn synth(args: SynthArgs) -> Result<u8> {
    let cfg = SynthConfig {
        references: args.references,
        severities: args.severities,
        width: args.width,
        height: args.height,
        seed: args.seed,
    };
    let ds = generate(&args.out, &cfg)?;
    println!("{}", ds.manifest_path.display());
    Ok(0)
}

fn significance(args: SignificanceArgs) -> Result<u8> {
    let rows = read_correlations(&args.correlations)?;
    let dbs = database_slots(
        &args.selection.databases,
        rows.iter().map(|r| r.database.as_str()),
    );
    let attrs = attribute_slots(rows.iter().map(|r| r.attribute.as_str()));
    let tables = build_codewords(
        &rows,
        &dbs,
        &attrs,
        args.selection.alpha,
        best_mode(&args.selection),
        args.selection.per_type_samples,
    )?;
    std::fs::create_dir_all(&args.out).map_err(|e| iqpool::Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let path = args.out.join("codewords.csv");
    write_codewords(&path, &tables)?;
    println!("{}", path.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Pool(a) => pool(a),
        Command::Synth(a) => synth(a),
        Command::Significance(a) => significance(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
