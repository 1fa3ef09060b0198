mod config;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use config::Config;
use valuechain::allocation::{
    allocate, write_allocation_csv, write_allocation_jsonl, AllocationOptions, BilateralFlowTable,
};
use valuechain::bench::{
    hit_rates_within, random_baseline, run_benchmark, write_metrics_csv, SynthWorldConfig,
};
use valuechain::icio::{
    clean_icio, icio_labels, icio_specialization, IcioCleaning, IcioTensor, LabelMatrix,
};
use valuechain::ingest::{clean, parse_files, parse_regional_trade, ColumnMapping};
use valuechain::tuning::{grid_search, write_results_csv, Checkpoint, GridOptions, GridSpec};
use valuechain::{
    infer_all, CleaningPolicy, FloorRule, LinkSet, MissingRank, ParamSet, SpecializationTable,
};

/// Infer product value chains from regional trade specialization.
#[derive(Debug, Parser)]
#[command(name = "valuechain", version, arg_required_else_help = true)]
struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "VALUECHAIN_JOBS")]
    jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pool and clean regional trade CSVs into one table.
    Ingest(IngestArgs),
    /// Compute export and import RCA for a pooled table.
    Rca(RcaArgs),
    /// Infer the top inputs of every product.
    Infer(InferArgs),
    /// Build sector specialization and trade-intensity labels from ICIO files.
    Labels(LabelsArgs),
    /// Grid-search thresholds against a label matrix.
    Tune(TuneArgs),
    /// Split region/country flows over inferred links.
    Allocate(AllocateArgs),
    /// Compare inference with a random baseline.
    Bench(BenchArgs),
    /// Write a link set as DOT or an edge list.
    ExportGraph(ExportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Raw CSV files (one per year or per region set).
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Column names as geography,product,value_imp,value_exp[,year].
    #[arg(long, value_parser = parse_columns)]
    columns: Option<ColumnMapping>,
    /// Drop regions importing less than this (USD).
    #[arg(long)]
    import_floor: Option<f64>,
    /// Drop regions exporting less than this (USD).
    #[arg(long)]
    export_floor: Option<f64>,
    /// Drop a region below either floor or only below both.
    #[arg(long, value_enum)]
    floor_rule: Option<FloorRuleArg>,
    /// Geographies to drop, one per line.
    #[arg(long, value_name = "FILE")]
    exclude_file: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FloorRuleArg {
    Either,
    Both,
}

#[derive(Debug, Args)]
struct RcaArgs {
    /// Pooled table written by `ingest`.
    table: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Thresholds rca_locations_1,rca_industries_1,rca_locations_2,rca_industries_2.
    #[arg(long, value_parser = parse_params, value_name = "A,B,C,D")]
    params: Option<[f64; 4]>,
    /// Candidates kept per direction.
    #[arg(long)]
    n: Option<usize>,
    /// Inputs emitted per product.
    #[arg(long)]
    k: Option<usize>,
    /// Forward position charged when the output is missing from a forward list.
    #[arg(long, value_enum)]
    missing_rank: Option<MissingRankArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MissingRankArg {
    ObservedPlusOne,
    ListLengthPlusOne,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum LinkFormat {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Specialization CSV written by `rca` or `labels --sectors`.
    spec: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t)]
    format: LinkFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LabelsArgs {
    /// ICIO CSV files; several years are summed.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Also write the sector specialization table here.
    #[arg(long, value_name = "FILE")]
    sectors: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    /// Sector specialization CSV.
    #[arg(long)]
    spec: PathBuf,
    /// Label matrix CSV.
    #[arg(long)]
    labels: PathBuf,
    /// Threshold values `lo:hi:step` (hi exclusive) for all four axes.
    #[arg(long, value_name = "LO:HI:STEP")]
    grid: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Resume from and periodically save to this file.
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AllocateArgs {
    /// Link set (JSONL) from `infer`.
    #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
    links: Option<PathBuf>,
    /// Label matrix used instead of inferred links.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Regional specialization CSV (for destination export shares).
    #[arg(long)]
    spec: PathBuf,
    /// CSV `region,country`.
    #[arg(long)]
    regions: PathBuf,
    /// CSV `region,product,country,value` of regional exports to countries.
    #[arg(long)]
    exports: PathBuf,
    /// CSV `country,product,region,value` of regional imports from countries.
    #[arg(long)]
    imports: PathBuf,
    /// Normalize destination shares over linked outputs only.
    #[arg(long)]
    renormalize: bool,
    #[arg(long, value_enum, default_value_t)]
    format: LinkFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Truth file `output,input`; with `--pred`, scores that prediction
    /// instead of synthetic worlds.
    #[arg(long, requires = "pred")]
    truth: Option<PathBuf>,
    /// Link set (JSONL) to score against `--truth`.
    #[arg(long, requires = "truth")]
    pred: Option<PathBuf>,
    /// File of output products (one per line) to restrict truth-mode scoring to.
    #[arg(long, requires = "truth")]
    filter: Option<PathBuf>,
    #[arg(long)]
    regions: Option<usize>,
    #[arg(long)]
    products: Option<usize>,
    /// Planted links per world.
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    strength: Option<f64>,
    /// Log-normal sigma of flow noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Number of synthetic worlds.
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed; worlds use seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum GraphFormat {
    #[default]
    Dot,
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Link set (JSONL).
    links: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: GraphFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_params(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected four comma-separated thresholds, got {s:?}"
        ));
    }
    let mut out = [0.0; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("{part:?} is not a number"))?;
    }
    Ok(out)
}

fn parse_columns(s: &str) -> Result<ColumnMapping, String> {
    let parts: Vec<String> = s.split(',').map(|p| p.trim().to_string()).collect();
    match parts.as_slice() {
        [g, p, i, e] => Ok(ColumnMapping {
            geography: g.clone(),
            product: p.clone(),
            value_imp: i.clone(),
            value_exp: e.clone(),
            year: None,
        }),
        [g, p, i, e, y] => Ok(ColumnMapping {
            geography: g.clone(),
            product: p.clone(),
            value_imp: i.clone(),
            value_exp: e.clone(),
            year: Some(y.clone()),
        }),
        _ => Err("expected geography,product,value_imp,value_exp[,year]".into()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn resolve_params(cfg: &Config, args: &ParamArgs) -> Result<ParamSet> {
    let mut p = ParamSet::default();
    let c = &cfg.params;
    p.rca_locations_1 = c.rca_locations_1.unwrap_or(p.rca_locations_1);
    p.rca_industries_1 = c.rca_industries_1.unwrap_or(p.rca_industries_1);
    p.rca_locations_2 = c.rca_locations_2.unwrap_or(p.rca_locations_2);
    p.rca_industries_2 = c.rca_industries_2.unwrap_or(p.rca_industries_2);
    p.n = args.n.or(c.n).unwrap_or(p.n);
    p.k = args.k.or(c.k).unwrap_or(p.k);
    p.missing_rank = match args.missing_rank {
        Some(MissingRankArg::ObservedPlusOne) => MissingRank::ObservedPlusOne,
        Some(MissingRankArg::ListLengthPlusOne) => MissingRank::ListLengthPlusOne,
        None => c.missing_rank.unwrap_or(p.missing_rank),
    };
    if let Some(t) = args.params {
        p = p.with_thresholds(t);
    }
    p.validate()?;
    Ok(p)
}

fn read_spec(path: &Path) -> Result<SpecializationTable> {
    SpecializationTable::read_csv(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
}

fn read_links(path: &Path) -> Result<LinkSet> {
    LinkSet::read_jsonl(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn ingest(cfg: &Config, a: &IngestArgs) -> Result<()> {
    let mapping = a
        .columns
        .clone()
        .or_else(|| cfg.columns.clone())
        .unwrap_or_default();
    let mut excluded = cfg.cleaning.exclude.clone();
    if let Some(path) = a
        .exclude_file
        .as_ref()
        .or(cfg.cleaning.exclude_file.as_ref())
    {
        excluded.extend(
            CleaningPolicy::read_exclusions(path)
                .with_context(|| format!("reading {}", path.display()))?,
        );
    }
    let policy = CleaningPolicy {
        excluded_geographies: excluded,
        import_floor: a.import_floor.or(cfg.cleaning.import_floor).unwrap_or(0.0),
        export_floor: a.export_floor.or(cfg.cleaning.export_floor).unwrap_or(0.0),
        floor_rule: match a.floor_rule {
            Some(FloorRuleArg::Either) => FloorRule::Either,
            Some(FloorRuleArg::Both) => FloorRule::Both,
            None => cfg.cleaning.floor_rule.unwrap_or_default(),
        },
    };
    policy.validate()?;
    let raw = parse_files(&a.files, &mapping)?;
    let cleaned = clean(&raw, &policy);
    info!(
        "kept {} of {} geographies and {} of {} products",
        cleaned.geographies().count(),
        raw.geographies().count(),
        cleaned.products().count(),
        raw.products().count()
    );
    if cleaned.is_empty() {
        bail!("no trade left after cleaning");
    }
    cleaned.write_csv(create(a.out.as_deref())?)?;
    Ok(())
}

fn rca(a: &RcaArgs) -> Result<()> {
    let table = parse_regional_trade(open(&a.table)?, &ColumnMapping::canonical())
        .with_context(|| format!("reading {}", a.table.display()))?;
    SpecializationTable::from_trade(&table)?.write_csv(create(a.out.as_deref())?)?;
    Ok(())
}

fn write_links(links: &LinkSet, format: LinkFormat, out: Option<&Path>) -> Result<()> {
    let w = create(out)?;
    match format {
        LinkFormat::Jsonl => links.write_jsonl(w)?,
        LinkFormat::Csv => links.write_edge_csv(w)?,
    }
    Ok(())
}

fn infer(cfg: &Config, a: &InferArgs) -> Result<()> {
    let p = resolve_params(cfg, &a.params)?;
    let s = read_spec(&a.spec)?;
    let links = infer_all(&s, &p)?;
    info!("{} links over {} products", links.len(), s.products().len());
    write_links(&links, a.format, a.out.as_deref())
}

fn labels(cfg: &Config, a: &LabelsArgs) -> Result<()> {
    let tensors = a
        .files
        .iter()
        .map(|f| IcioTensor::read_csv(open(f)?).with_context(|| format!("reading {}", f.display())))
        .collect::<Result<Vec<_>>>()?;
    let raw = IcioTensor::sum(tensors)?;
    let cleaning = cfg.icio.clone().unwrap_or_else(IcioCleaning::oecd_2021);
    let (t, report) = clean_icio(&raw, &cleaning)?;
    info!(
        "ICIO {}x{} -> {}x{} ({} countries, {} industries); dropped {:.6e}, domestic {:.6e} of {:.6e}",
        raw.dim().0,
        raw.dim().1,
        t.dim().0,
        t.dim().1,
        report.countries,
        report.industries,
        report.dropped_mass,
        report.domestic_mass,
        report.input_total
    );
    let labels = icio_labels(&t)?;
    if let Some(path) = &a.sectors {
        icio_specialization(&t)?.write_csv(create(Some(path))?)?;
    }
    info!("label density {:.3}", labels.off_diagonal_density());
    labels.write_csv(create(a.out.as_deref())?)?;
    Ok(())
}

fn tune(cfg: &Config, a: &TuneArgs) -> Result<()> {
    let base = resolve_params(cfg, &a.params)?;
    let s = read_spec(&a.spec)?;
    let labels = LabelMatrix::read_csv(open(&a.labels)?)
        .with_context(|| format!("reading {}", a.labels.display()))?;
    let axis = |flag: Option<&String>, own: &Option<String>| -> Result<Option<Vec<f64>>> {
        match flag.or(own.as_ref()).or(cfg.grid.range.as_ref()) {
            Some(r) => Ok(Some(GridSpec::parse_range(r)?)),
            None => Ok(None),
        }
    };
    let default = GridSpec::default();
    let g = &cfg.grid;
    let grid = GridSpec {
        rca_locations_1: axis(a.grid.as_ref(), &g.rca_locations_1)?
            .unwrap_or(default.rca_locations_1),
        rca_industries_1: axis(a.grid.as_ref(), &g.rca_industries_1)?
            .unwrap_or(default.rca_industries_1),
        rca_locations_2: axis(a.grid.as_ref(), &g.rca_locations_2)?
            .unwrap_or(default.rca_locations_2),
        rca_industries_2: axis(a.grid.as_ref(), &g.rca_industries_2)?
            .unwrap_or(default.rca_industries_2),
    };
    let checkpoint = a
        .checkpoint
        .clone()
        .or_else(|| g.checkpoint.clone())
        .map(|path| Checkpoint {
            path,
            every: a.checkpoint_every.or(g.checkpoint_every).unwrap_or(500),
        });
    info!("evaluating {} grid points", grid.len());
    let results = grid_search(
        &s,
        &labels,
        &grid,
        &base,
        &GridOptions {
            jobs: None,
            checkpoint,
        },
    )?;
    if let Some(best) = results.first() {
        info!(
            "best {:?}: precision {:.4} ({} TP / {} FP)",
            best.params.thresholds(),
            best.precision,
            best.tp,
            best.fp
        );
    }
    write_results_csv(&results, create(a.out.as_deref())?)?;
    Ok(())
}

fn allocate_cmd(a: &AllocateArgs) -> Result<()> {
    let links = match (&a.links, &a.labels) {
        (Some(path), _) => read_links(path)?,
        (None, Some(path)) => LabelMatrix::read_csv(open(path)?)
            .with_context(|| format!("reading {}", path.display()))?
            .to_link_set(),
        (None, None) => bail!("either --links or --labels is required"),
    };
    let s = read_spec(&a.spec)?;
    let regions = BilateralFlowTable::read_regions(open(&a.regions)?)
        .with_context(|| format!("reading {}", a.regions.display()))?;
    let mut flows = BilateralFlowTable::new(regions);
    flows
        .read_exports(open(&a.exports)?)
        .with_context(|| format!("reading {}", a.exports.display()))?;
    flows
        .read_imports(open(&a.imports)?)
        .with_context(|| format!("reading {}", a.imports.display()))?;
    let (entries, report) = allocate(
        &links,
        &flows,
        &s,
        AllocationOptions {
            renormalize: a.renormalize,
        },
    )?;
    if report.skipped_groups > 0 {
        warn!(
            "{} of {} import records ({:.6e} USD) had no matching regional exports",
            report.skipped_groups, report.groups, report.skipped_usd
        );
    }
    if !report.destinations_without_exports.is_empty() {
        warn!(
            "{} destination regions have no exports in the specialization table",
            report.destinations_without_exports.len()
        );
    }
    info!("{} allocation entries", entries.len());
    let w = create(a.out.as_deref())?;
    match a.format {
        LinkFormat::Jsonl => write_allocation_jsonl(&entries, w)?,
        LinkFormat::Csv => write_allocation_csv(&entries, w)?,
    }
    Ok(())
}

fn bench(cfg: &Config, a: &BenchArgs) -> Result<()> {
    let p = resolve_params(cfg, &a.params)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let rows = if let (Some(truth), Some(pred)) = (&a.truth, &a.pred) {
        let truth = LinkSet::read_truth_csv(open(truth)?)
            .with_context(|| format!("reading {}", truth.display()))?;
        let pred = read_links(pred)?;
        let baseline = random_baseline(pred.products(), p.k, seed)?;
        let group: Option<BTreeSet<String>> = match &a.filter {
            Some(path) => Some(
                CleaningPolicy::read_exclusions(path)
                    .with_context(|| format!("reading {}", path.display()))?
                    .into_iter()
                    .collect(),
            ),
            None => None,
        };
        vec![
            (
                "backward-forward".to_string(),
                hit_rates_within(&pred, &truth, group.as_ref())?,
            ),
            (
                "random".to_string(),
                hit_rates_within(&baseline, &truth, group.as_ref())?,
            ),
        ]
    } else {
        let b = &cfg.bench;
        let d = SynthWorldConfig::default();
        let world = SynthWorldConfig {
            regions: a.regions.or(b.regions).unwrap_or(d.regions),
            products: a.products.or(b.products).unwrap_or(d.products),
            links: a.links.or(b.links).unwrap_or(d.links),
            strength: a.strength.or(b.strength).unwrap_or(d.strength),
            noise: a.noise.or(b.noise).unwrap_or(d.noise),
            seed,
            regions_per_link: b.regions_per_link,
        };
        world.validate()?;
        let count = a.seeds.or(b.seeds).unwrap_or(20);
        let seeds: Vec<u64> = (seed..seed.saturating_add(count)).collect();
        let report = run_benchmark(&world, &seeds, &p)?;
        info!(
            "recovered {:.3} of planted links in the top {} ({:.3} at merged rank 2)",
            report.recovery, p.k, report.recovery_rank2
        );
        vec![
            ("backward-forward".to_string(), report.model),
            ("random".to_string(), report.baseline),
        ]
    };
    write_metrics_csv(&rows, create(a.out.as_deref())?)?;
    Ok(())
}

fn export_graph(a: &ExportArgs) -> Result<()> {
    let links = read_links(&a.links)?;
    let w = create(a.out.as_deref())?;
    match a.format {
        GraphFormat::Dot => links.write_dot(w)?,
        GraphFormat::Csv => links.write_edge_csv(w)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(cfg.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Ingest(a) => ingest(&cfg, a),
        Command::Rca(a) => rca(a),
        Command::Infer(a) => infer(&cfg, a),
        Command::Labels(a) => labels(&cfg, a),
        Command::Tune(a) => tune(&cfg, a),
        Command::Allocate(a) => allocate_cmd(a),
        Command::Bench(a) => bench(&cfg, a),
        Command::ExportGraph(a) => export_graph(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("valuechain: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
