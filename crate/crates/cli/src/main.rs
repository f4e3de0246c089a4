//! Command-line front end: validate channel files, evaluate bounds at a
//! policy, trace rate regions, and run coding-scheme simulations, all
//! reproducible from their manifests.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cogsec_core::channel::{
    build_joint_with_cap, default_aux_sizes, parse_channel_spec, parse_policy, AuxiliaryPolicy,
    ChannelError, ChannelSpec,
};
use cogsec_core::prob::{ProbError, DEFAULT_CELL_CAP};
use cogsec_core::search::{search_outer, search_region, SearchConfig, SearchError};
use cogsec_core::sim::{run_trials_logged, CodebookParams, GeneratingPmfs, SimError};
use cogsec_core::{inner_bound_point, outer_bound_point, CodebookStructure, RateTriple};

use manifest::{csv_num, sha256_hex, sig12, RunManifest};

const EXIT_DOMAIN: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

/// Environment variable overriding the dense-tensor cell cap.
const CELL_CAP_ENV: &str = "COGSEC_CELL_CAP";

#[derive(Parser)]
#[command(
    name = "cogsec",
    version,
    about = "Secrecy rate-region toolkit for the state-dependent cognitive interference channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundArg {
    Inner,
    Outer,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplerArg {
    Grid,
    Dirichlet,
    Hybrid,
}

impl From<SamplerArg> for cogsec_core::Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Grid => cogsec_core::Sampler::Grid,
            SamplerArg::Dirichlet => cogsec_core::Sampler::DirichletRandom,
            SamplerArg::Hybrid => cogsec_core::Sampler::Hybrid,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a channel spec file; exit 0 iff it has no violations.
    Validate {
        spec: PathBuf,
    },
    /// Evaluate the inner or outer bound at a (spec, policy) pair.
    Eval {
        spec: PathBuf,
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "inner")]
        bound: BoundArg,
    },
    /// Trace a rate region over sampled auxiliary policies.
    Search(SearchArgs),
    /// Monte Carlo simulation of the random-binning coding scheme.
    Simulate(SimArgs),
}

#[derive(Args)]
struct SearchArgs {
    spec: PathBuf,
    /// Auxiliary alphabet |U|; defaults to |X1||S| + 1.
    #[arg(long)]
    u_size: Option<usize>,
    /// Auxiliary alphabet |V|; defaults to |X2||S| + 2.
    #[arg(long)]
    v_size: Option<usize>,
    #[arg(long, value_enum, default_value = "hybrid")]
    sampler: SamplerArg,
    /// Grid resolution (points per simplex coordinate).
    #[arg(long, default_value_t = 3)]
    grid: usize,
    /// Random policy draws (dirichlet and hybrid samplers).
    #[arg(long, default_value_t = 4096)]
    samples: usize,
    /// Local refinement rounds.
    #[arg(long, default_value_t = 3)]
    refine: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which bound to sweep.
    #[arg(long, value_enum, default_value = "inner")]
    bound: BoundArg,
    /// Output prefix: writes PREFIX.csv, PREFIX.json, PREFIX.manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    spec: PathBuf,
    /// Auxiliary policy supplying the codebook generating distributions.
    policy: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    r1: f64,
    #[arg(long)]
    r2: f64,
    /// Strong-typicality tolerance.
    #[arg(long, default_value_t = cogsec_core::sim::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report file; the manifest is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-trial CSV log.
    #[arg(long)]
    trial_log: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn from_channel(e: &ChannelError) -> Self {
        let code = match e {
            ChannelError::Parse(_)
            | ChannelError::MissingField(_)
            | ChannelError::Dimension { .. }
            | ChannelError::Normalization { .. }
            | ChannelError::Negative { .. } => EXIT_PARSE,
            ChannelError::SizeMismatch(_) => EXIT_DOMAIN,
            ChannelError::Prob(p) => return Failure::from_prob(p),
        };
        Failure::new(code, e.to_string())
    }

    fn from_prob(e: &ProbError) -> Self {
        let code = match e {
            ProbError::CellCapExceeded { .. } => EXIT_RESOURCE,
            _ => EXIT_DOMAIN,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        Failure::from_channel(&e)
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match &e {
            SearchError::ResourceCap { .. } | SearchError::GridTooLarge { .. } => {
                Failure::new(EXIT_RESOURCE, e.to_string())
            }
            SearchError::Channel(c) => Failure::from_channel(c),
            _ => Failure::new(EXIT_DOMAIN, e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match &e {
            SimError::CodewordCap { .. }
            | SimError::StateEnumerationCap { .. }
            | SimError::PosteriorBudget { .. } => Failure::new(EXIT_RESOURCE, e.to_string()),
            SimError::Channel(c) => Failure::from_channel(c),
            _ => Failure::new(EXIT_DOMAIN, e.to_string()),
        }
    }
}

impl From<cogsec_core::BoundsError> for Failure {
    fn from(e: cogsec_core::BoundsError) -> Self {
        Failure::new(EXIT_DOMAIN, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_PARSE, e.to_string())
    }
}

fn cell_cap() -> usize {
    std::env::var(CELL_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CELL_CAP)
}

fn read_input(path: &Path) -> Result<(Vec<u8>, String), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{} is not UTF-8: {e}", path.display())))?;
    Ok((bytes, text))
}

fn load_spec(path: &Path) -> Result<(ChannelSpec, Vec<u8>), Failure> {
    let (bytes, text) = read_input(path)?;
    let (spec, warnings) = parse_channel_spec(&text)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok((spec, bytes))
}

fn load_policy(path: &Path) -> Result<(AuxiliaryPolicy, Vec<u8>), Failure> {
    let (bytes, text) = read_input(path)?;
    let (policy, warnings) = parse_policy(&text)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok((policy, bytes))
}

fn rate_triple_json(t: &RateTriple) -> Value {
    json!({"r1": sig12(t.r1), "r2": sig12(t.r2), "re2": sig12(t.re2)})
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("worker pool")
            .install(f),
        None => f(),
    }
}

fn cmd_validate(spec_path: &Path) -> Result<(), Failure> {
    let (spec, _) = load_spec(spec_path)?;
    let violations = spec.validate();
    if violations.is_empty() {
        println!("ok: {} has no violations", spec_path.display());
        Ok(())
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Err(Failure::new(
            EXIT_DOMAIN,
            format!("{} violations in {}", violations.len(), spec_path.display()),
        ))
    }
}

fn cmd_eval(spec_path: &Path, policy_path: &Path, bound: BoundArg) -> Result<(), Failure> {
    let (spec, _) = load_spec(spec_path)?;
    let (policy, _) = load_policy(policy_path)?;
    let joint = build_joint_with_cap(&spec, &policy, cell_cap())?;
    let point = match bound {
        BoundArg::Inner => inner_bound_point(&joint)?,
        BoundArg::Outer => outer_bound_point(&joint)?,
    };
    println!("{}", serde_json::to_string(&rate_triple_json(&point)).unwrap());
    Ok(())
}

fn cmd_search(args: &SearchArgs) -> Result<(), Failure> {
    let (spec, spec_bytes) = load_spec(&args.spec)?;
    let (default_u, default_v) = default_aux_sizes(&spec);
    let mut config = SearchConfig::new(
        args.u_size.unwrap_or(default_u),
        args.v_size.unwrap_or(default_v),
    );
    config.sampler = args.sampler.into();
    config.grid_resolution = args.grid;
    config.sample_count = args.samples;
    config.refine_rounds = args.refine;
    config.seed = args.seed;
    config.cell_cap = cell_cap();

    let csv_path = args.out.with_extension("csv");
    let sidecar_path = args.out.with_extension("json");
    let manifest_path = args.out.with_extension("manifest.json");
    let mut config_json = serde_json::to_value(&config).unwrap();
    config_json["bound"] = json!(match args.bound {
        BoundArg::Inner => "inner",
        BoundArg::Outer => "outer",
    });
    let spec_path = args.spec.display().to_string();
    let manifest = RunManifest::new(
        "search",
        &[(&spec_path, &spec_bytes)],
        config_json.clone(),
        args.seed,
        &[
            &csv_path.display().to_string(),
            &sidecar_path.display().to_string(),
        ],
    );
    let digest = manifest.digest();

    let sample = in_pool(args.workers, || match args.bound {
        BoundArg::Inner => search_region(&spec, &config),
        BoundArg::Outer => search_outer(&spec, &config),
    })?;

    let mut csv = String::from("r1,r2,re2,policy_id\n");
    for p in &sample.points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_num(p.rates.r1),
            csv_num(p.rates.r2),
            csv_num(p.rates.re2),
            p.policy_id
        ));
    }
    fs::write(&csv_path, csv.as_bytes())?;
    let hull: Vec<Value> = sample.hull.iter().map(rate_triple_json).collect();
    let sidecar = json!({
        "config": config_json,
        "seed": args.seed,
        "hull": hull,
        "points": sample.points.len(),
        "manifest": digest,
        "files": {
            "csv": {
                "path": csv_path.display().to_string(),
                "sha256": sha256_hex(csv.as_bytes()),
            }
        },
    });
    fs::write(
        &sidecar_path,
        format!("{}\n", serde_json::to_string_pretty(&sidecar).unwrap()),
    )?;
    fs::write(&manifest_path, manifest.to_bytes())?;
    println!(
        "search: {} points, {} hull vertices -> {}",
        sample.points.len(),
        sample.hull.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: &SimArgs) -> Result<(), Failure> {
    let (spec, spec_bytes) = load_spec(&args.spec)?;
    let (policy, policy_bytes) = load_policy(&args.policy)?;
    let mut params = CodebookParams::new(args.n, args.r1, args.r2);
    params.eps = args.eps;
    params.seed = args.seed;
    let (stats, records) = in_pool(args.workers, || {
        run_trials_logged(&spec, &policy, &params, args.trials)
    })?;
    let pmfs = GeneratingPmfs::from_policy(&spec, &policy)?;
    let structure = CodebookStructure::derive(&pmfs, &params)?;

    let outputs: Vec<String> = args
        .out
        .iter()
        .map(|p| p.display().to_string())
        .chain(args.trial_log.iter().map(|p| p.display().to_string()))
        .collect();
    let output_refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let spec_path = args.spec.display().to_string();
    let policy_path = args.policy.display().to_string();
    let manifest = RunManifest::new(
        "simulate",
        &[(&spec_path, &spec_bytes), (&policy_path, &policy_bytes)],
        serde_json::to_value(&params).unwrap(),
        args.seed,
        &output_refs,
    );
    let digest = manifest.digest();
    let report = json!({
        "params": serde_json::to_value(&params).unwrap(),
        "seed": args.seed,
        "trials": stats.trials,
        "pe1": sig12(stats.pe1),
        "pe2": sig12(stats.pe2),
        "eq_rate": sig12(stats.eq_rate),
        "encoder_failure_rate": sig12(stats.encoder_failure_rate),
        "structure": serde_json::to_value(&structure).unwrap(),
        "manifest": digest,
    });
    let report_text = format!("{}\n", serde_json::to_string_pretty(&report).unwrap());
    print!("{report_text}");
    if let Some(out) = &args.out {
        fs::write(out, report_text.as_bytes())?;
        fs::write(out.with_extension("manifest.json"), manifest.to_bytes())?;
    }
    if let Some(log) = &args.trial_log {
        let mut csv = String::from("trial,w1,bin,fiber,encode_failed,err1,err2,eq_rate\n");
        for r in &records {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.trial,
                r.w1,
                r.bin,
                r.fiber,
                u8::from(r.encode_failed),
                u8::from(r.err1),
                u8::from(r.err2),
                if r.eq_rate.is_nan() {
                    "nan".to_string()
                } else {
                    csv_num(r.eq_rate)
                }
            ));
        }
        fs::write(log, csv.as_bytes())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { spec } => cmd_validate(spec),
        Command::Eval { spec, policy, bound } => cmd_eval(spec, policy, *bound),
        Command::Search(args) => cmd_search(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
