use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use blockselect::mdl::sbm_code_lengths;
use blockselect::search::{find_map, ChainConfig, TracePoint};
use blockselect::selection::{sweep, GapForm, Regime, SelectionReport, SweepOptions};
use blockselect::synth::{sample_dc_sbm, sample_sbm, DcSpec, Planted, SbmSpec};
use blockselect::{BlockState, Family, Graph, LoadOptions, PriorConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "blockselect", version, about = "Model and order selection for stochastic block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted-partition graph from a JSON generator spec.
    Generate(GenerateArgs),
    /// Search for the MAP labelling of one (family, k) cell.
    Fit(FitArgs),
    /// Fit a grid of families and block counts and rank the cells.
    Select(SelectArgs),
    /// Two-part code length of a given labelling.
    Encode(EncodeArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Whitespace-separated edge list, one `u v` pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Vertex ids in the file start at 1.
    #[arg(long)]
    one_indexed: bool,
    /// Skip repeated edges instead of failing.
    #[arg(long)]
    drop_duplicates: bool,
}

impl GraphArgs {
    fn load(&self) -> anyhow::Result<Graph> {
        let text = read(&self.graph)?;
        let opts = LoadOptions {
            one_indexed: self.one_indexed,
            drop_duplicates: self.drop_duplicates,
        };
        Graph::parse_edge_list(&text, opts).with_context(|| self.graph.display().to_string())
    }
}

#[derive(Args)]
struct ChainArgs {
    /// Prior preset (`uniform`, `jeffreys`) or a JSON file with alpha, beta, delta, gamma.
    #[arg(long, default_value = "uniform")]
    priors: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

impl ChainArgs {
    fn priors(&self) -> anyhow::Result<PriorConfig> {
        if let Ok(p) = PriorConfig::preset(&self.priors) {
            return Ok(p);
        }
        let path = Path::new(&self.priors);
        if !path.exists() {
            bail!("{:?} is neither a prior preset nor a file", self.priors);
        }
        PriorConfig::from_json_str(&read(path)?).with_context(|| self.priors.clone())
    }

    fn chain(&self, family: Family, k: usize) -> ChainConfig {
        let mut chain = ChainConfig::new(family, k);
        chain.seed = self.seed;
        chain.sweeps = self.sweeps;
        chain.restarts = self.restarts;
        chain
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec JSON with `"model": "sbm"` or `"model": "dcsbm"`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the generator file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    chain: ChainArgs,
    /// Write the per-sweep trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Auto,
    Dense,
    Sparse,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapArg {
    Mean,
    AsPrinted,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 1)]
    kmin: usize,
    #[arg(long)]
    kmax: usize,
    #[arg(long, default_value = "sbm,dcsbm", value_delimiter = ',', value_parser = parse_family)]
    families: Vec<Family>,
    /// Reference order for the cross-family normalisation.
    #[arg(long)]
    k_ref: Option<usize>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
    regime: RegimeArg,
    #[arg(long, value_enum, default_value_t = GapArg::Mean)]
    gap_form: GapArg,
    /// Skip re-searching cells from their neighbours' optima.
    #[arg(long)]
    no_refine: bool,
    #[command(flatten)]
    chain: ChainArgs,
    /// Write one row per grid cell as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "BLOCKSELECT_JOBS", default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// JSON label array, or `vertex label` lines keyed by the ids in the edge list.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    k: usize,
}

#[derive(Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum GeneratorSpec {
    Sbm(SbmSpec),
    Dcsbm(DcSpec),
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: blockselect::Error| e.to_string())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Rounds every float to 12 significant digits; non-finite values become null.
fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(&canonical(serde_json::to_value(value)?))?)
}

fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
        rounded.to_string()
    } else {
        String::new()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn generate(args: &GenerateArgs) -> anyhow::Result<String> {
    let text = read(&args.spec)?;
    let spec: GeneratorSpec =
        serde_json::from_str(&text).with_context(|| format!("malformed spec {}", args.spec.display()))?;
    let planted: Planted = match spec {
        GeneratorSpec::Sbm(mut s) => {
            s.seed = args.seed.unwrap_or(s.seed);
            sample_sbm(&s)?
        }
        GeneratorSpec::Dcsbm(mut s) => {
            s.seed = args.seed.unwrap_or(s.seed);
            sample_dc_sbm(&s)?
        }
    };
    for w in &planted.warnings {
        log::warn!("{w}");
    }
    write(&args.out, &planted.graph.to_edge_list())?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".labels.json");
    let sidecar = PathBuf::from(sidecar);
    let truth = json!({
        "labels": planted.labels,
        "theta": planted.theta,
    });
    write(&sidecar, &to_json(&truth)?)?;
    to_json(&json!({
        "n": planted.graph.n(),
        "m": planted.graph.m(),
        "edges": args.out,
        "labels": sidecar,
        "collapse_rate": planted.collapse_rate,
        "warnings": planted.warnings,
    }))
}

fn trace_rows(trace: &[TracePoint]) -> Vec<Vec<String>> {
    trace
        .iter()
        .map(|t| vec![t.sweep.to_string(), t.chain.to_string(), fmt_float(t.best_score)])
        .collect()
}

fn fit(args: &FitArgs) -> anyhow::Result<String> {
    let g = args.graph.load()?;
    let priors = args.chain.priors()?;
    let chain = args.chain.chain(args.family, args.k);
    let result = find_map(&g, &chain, &priors)?;
    result.state.verify(&g)?;
    if let Some(path) = &args.trace {
        write_csv(path, &["sweep", "chain", "best_score"], trace_rows(&result.trace))?;
    }
    to_json(&json!({
        "family": args.family,
        "k": args.k,
        "seed": args.chain.seed,
        "ids": g.ids(),
        "labels": result.state.labels(),
        "score": result.score,
        "accepted_moves": result.accepted_moves,
        "chain_id": result.chain_id,
        "trace": args.trace,
    }))
}

fn curve_rows(report: &SelectionReport) -> Vec<Vec<String>> {
    report
        .grid
        .iter()
        .map(|c| {
            vec![
                c.family.to_string(),
                c.k.to_string(),
                fmt_float(c.log_icl),
                fmt_float(c.log_icl_normalized),
                fmt_float(c.bic),
                fmt_float(c.lambda_dc),
                c.seed.to_string(),
            ]
        })
        .collect()
}

fn select(args: &SelectArgs) -> anyhow::Result<String> {
    if args.kmin == 0 || args.kmin > args.kmax {
        bail!("need 1 <= kmin <= kmax, got {}..{}", args.kmin, args.kmax);
    }
    let g = args.graph.load()?;
    let priors = args.chain.priors()?;
    let options = SweepOptions {
        k_ref: args.k_ref,
        regime: match args.regime {
            RegimeArg::Auto => None,
            RegimeArg::Dense => Some(Regime::Dense),
            RegimeArg::Sparse => Some(Regime::Sparse),
        },
        gap_form: match args.gap_form {
            GapArg::Mean => GapForm::Mean,
            GapArg::AsPrinted => GapForm::AsPrinted,
        },
        refine: !args.no_refine,
    };
    let ks: Vec<usize> = (args.kmin..=args.kmax).collect();
    let chain = args.chain.chain(Family::Vanilla, 1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    let report = pool.install(|| sweep(&g, &ks, &args.families, &chain, &priors, &options))?;
    if let Some(path) = &args.csv {
        let header = ["family", "k", "log_icl", "log_icl_normalized", "bic", "lambda_dc", "seed"];
        write_csv(path, &header, curve_rows(&report))?;
    }
    to_json(&report)
}

fn encode(args: &EncodeArgs) -> anyhow::Result<String> {
    let g = args.graph.load()?;
    let labels = blockselect::block_state::parse_labels(&read(&args.labels)?, &g)?;
    let state = BlockState::from_labels(&g, labels, args.k)?;
    to_json(&sbm_code_lengths(&g, &state)?)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<blockselect::Error>() {
        Some(blockselect::Error::InconsistentState(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    let out = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Select(a) => select(a),
        Command::Encode(a) => encode(a),
    };
    match out {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
