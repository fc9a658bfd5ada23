//! medyn: seeded, reproducible runs over the opinion-dynamics library.
//!
//! Exit codes: 0 success, 2 configuration/usage, 3 I/O or parse, 4 internal.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use medyn::baselines::{manipulation_run, ManipulationModel};
use medyn::cohesion::cohesion_report;
use medyn::dynamics::{default_max_steps, wm_run, UpdateSchedule};
use medyn::equilibria::{classify, VerdictDoc};
use medyn::experiments::{
    consensus_probability_experiment, distribution_experiment, extremeness_centrality_experiment,
    run_model, Model, DEFAULT_BINS,
};
use medyn::generate::{generate, GeneratorConfig, Topology};
use medyn::network::InfluenceNetwork;
use medyn::sampling::InitialDistribution;
use medyn::seed::mix;
use medyn::validation::{
    evaluate, fit_parameters, prediction_points, read_rows_csv, synth_median_process, Hypothesis,
};

#[derive(Parser)]
#[command(name = "medyn", version, about = "Weighted-median opinion dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to MEDYN_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Trial counts and sizes: quick desk runs or the full protocol.
    #[arg(long, global = true, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    /// Network output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random influence network.
    Generate(GenerateArgs),
    /// Cohesion / equilibrium analysis of a network file.
    Analyze {
        /// Network file (.json or .csv).
        #[arg(long)]
        network: PathBuf,
        /// Opinion vector (JSON array); adds an equilibrium verdict.
        #[arg(long)]
        opinions: Option<PathBuf>,
    },
    /// Run one model from a network and an initial opinion vector.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        opinions: PathBuf,
        /// wm | degroot | stubborn | fj | nbc
        #[arg(long, default_value = "wm")]
        model: String,
        /// Also write the activation trajectory (wm only).
        #[arg(long)]
        trajectory: bool,
    },
    /// Run a preset experiment protocol.
    Experiment {
        /// fig3 | fig4 | fig5 | manipulation
        #[arg(long)]
        preset: String,
        /// Override the preset's trial count.
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Hypothesis metrics on round data.
    Validate {
        /// Path to a rounds CSV, or "synthetic" for a built-in median-process fixture.
        #[arg(long, default_value = "synthetic")]
        data: String,
        /// Comma-separated subset of H1..H6.
        #[arg(long, default_value = "H1,H2,H3,H4,H5,H6")]
        hypotheses: String,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON file holding a generator config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ba | ws
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// BA attachment parameter.
    #[arg(long)]
    m: Option<usize>,
    /// WS lattice degree (even).
    #[arg(long)]
    d: Option<usize>,
    /// WS rewiring probability.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    self_loops: Option<bool>,
}

enum CliError {
    Config(String),
    Io(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Internal(m) => m,
        }
    }
}

fn io_err(e: impl std::fmt::Display, path: &Path) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: u64,
    version: &'static str,
    outputs: Vec<ManifestEntry>,
    duration_seconds: f64,
}

struct Emitter {
    out_dir: PathBuf,
    outputs: Vec<ManifestEntry>,
}

impl Emitter {
    fn new(out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| io_err(e, out_dir))?;
        Ok(Emitter { out_dir: out_dir.to_path_buf(), outputs: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(e, &path))?;
        let digest = Sha256::digest(content.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").unwrap();
        }
        self.outputs.push(ManifestEntry { path: name.to_string(), sha256: hex });
        Ok(())
    }

    fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        started: Instant,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: std::mem::take(&mut self.outputs),
            duration_seconds: started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| io_err(e, &path))
    }
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("MEDYN_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            std::process::exit(2);
        }
        // fails only if a pool already exists, which is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.code());
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match &cli.cmd {
        Cmd::Generate(args) => cmd_generate(cli, args, started),
        Cmd::Analyze { network, opinions } => cmd_analyze(cli, network, opinions.as_deref(), started),
        Cmd::Simulate { network, opinions, model, trajectory } => {
            cmd_simulate(cli, network, opinions, model, *trajectory, started)
        }
        Cmd::Experiment { preset, trials } => cmd_experiment(cli, preset, *trials, started),
        Cmd::Validate { data, hypotheses } => cmd_validate(cli, data, hypotheses, started),
    }
}

fn read_network(path: &Path) -> Result<InfluenceNetwork, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(e, path))?;
    let parsed = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        InfluenceNetwork::from_csv(&text)
    } else {
        InfluenceNetwork::from_json(&text)
    };
    parsed.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_opinions(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(e, path))?;
    let x: Vec<f64> = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if x.len() != n {
        return Err(CliError::Config(format!(
            "opinion vector has {} entries, network has {n} agents",
            x.len()
        )));
    }
    Ok(x)
}

fn network_text(net: &InfluenceNetwork, format: Format) -> (String, &'static str) {
    match format {
        Format::Json => (net.to_json(), "network.json"),
        Format::Csv => (net.to_csv(), "network.csv"),
    }
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs, started: Instant) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(e, path))?;
            serde_json::from_str::<GeneratorConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            let family = args
                .family
                .as_deref()
                .ok_or_else(|| CliError::Config("--family is required (ba or ws)".into()))?;
            let n = args.n.ok_or_else(|| CliError::Config("--n is required".into()))?;
            match family {
                "ba" => GeneratorConfig::ba(
                    n,
                    args.m.ok_or_else(|| CliError::Config("--m is required for ba".into()))?,
                    cli.seed,
                ),
                "ws" => GeneratorConfig::ws(
                    n,
                    args.d.ok_or_else(|| CliError::Config("--d is required for ws".into()))?,
                    args.beta
                        .ok_or_else(|| CliError::Config("--beta is required for ws".into()))?,
                    cli.seed,
                ),
                other => {
                    return Err(CliError::Config(format!("unknown family {other:?}")));
                }
            }
        }
    };
    // flags override config-file fields
    if let Some(n) = args.n {
        config.n = n;
    }
    match &mut config.topology {
        Topology::BarabasiAlbert { m } => {
            if let Some(v) = args.m {
                *m = v;
            }
        }
        Topology::WattsStrogatz { d, beta } => {
            if let Some(v) = args.d {
                *d = v;
            }
            if let Some(v) = args.beta {
                *beta = v;
            }
        }
    }
    if let Some(v) = args.self_loops {
        config.self_loops = v;
    }
    let net = generate(&config).map_err(|e| CliError::Config(e.to_string()))?;
    let mut emitter = Emitter::new(&cli.out)?;
    let (text, name) = network_text(&net, cli.format);
    emitter.write(name, &text)?;
    let echo = serde_json::to_value(&config).map_err(|e| CliError::Internal(e.to_string()))?;
    emitter.finish("generate", echo, config.seed, started)
}

fn cmd_analyze(
    cli: &Cli,
    network: &Path,
    opinions: Option<&Path>,
    started: Instant,
) -> Result<(), CliError> {
    let net = read_network(network)?;
    let report = cohesion_report(&net).map_err(|e| CliError::Config(e.to_string()))?;
    #[derive(Serialize)]
    struct Analysis {
        cohesion: medyn::cohesion::CohesionReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        verdict: Option<VerdictDoc>,
    }
    let verdict = match opinions {
        Some(path) => {
            let x = read_opinions(path, net.agent_count())?;
            Some(VerdictDoc::from(&classify(&net, &x)))
        }
        None => None,
    };
    let doc = Analysis { cohesion: report, verdict };
    let text =
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut emitter = Emitter::new(&cli.out)?;
    emitter.write("analysis.json", &text)?;
    println!("{text}");
    let echo = serde_json::json!({ "network": network.display().to_string() });
    emitter.finish("analyze", echo, cli.seed, started)
}

fn trajectory_csv(steps: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("step,agent,opinion\n");
    for &(step, agent, value) in steps {
        writeln!(out, "{step},{agent},{value}").unwrap();
    }
    out
}

fn cmd_simulate(
    cli: &Cli,
    network: &Path,
    opinions: &Path,
    model_id: &str,
    trajectory: bool,
    started: Instant,
) -> Result<(), CliError> {
    let net = read_network(network)?;
    let x0 = read_opinions(opinions, net.agent_count())?;
    let model = Model::parse(model_id)
        .ok_or_else(|| CliError::Config(format!("unknown model {model_id:?}")))?;
    let mut emitter = Emitter::new(&cli.out)?;
    let result = if trajectory {
        if model != Model::WeightedMedian {
            return Err(CliError::Config(
                "--trajectory is only available for the weighted-median model".into(),
            ));
        }
        let r = wm_run(
            &x0,
            &net,
            &UpdateSchedule::UniformRandom { seed: mix(cli.seed, 3) },
            default_max_steps(net.agent_count()),
            true,
        )
        .map_err(|e| CliError::Internal(e.to_string()))?;
        emitter.write("trajectory.csv", &trajectory_csv(r.trajectory.as_deref().unwrap()))?;
        r
    } else {
        run_model(model, &net, &x0, mix(cli.seed, 3))
            .map_err(|e| CliError::Config(e.to_string()))?
    };
    #[derive(Serialize)]
    struct SimResult<'a> {
        model: Model,
        converged: bool,
        steps_taken: usize,
        final_opinions: &'a [f64],
        verdict: VerdictDoc,
    }
    let doc = SimResult {
        model,
        converged: result.converged,
        steps_taken: result.steps_taken,
        final_opinions: &result.final_opinions,
        verdict: VerdictDoc::from(&classify(&net, &result.final_opinions)),
    };
    let text =
        serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    emitter.write("result.json", &text)?;
    let echo = serde_json::json!({
        "network": network.display().to_string(),
        "opinions": opinions.display().to_string(),
        "model": model_id,
    });
    emitter.finish("simulate", echo, cli.seed, started)
}

fn sha_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").unwrap();
    }
    hex
}

fn cmd_experiment(
    cli: &Cli,
    preset: &str,
    trials_override: Option<u32>,
    started: Instant,
) -> Result<(), CliError> {
    let mut emitter = Emitter::new(&cli.out)?;
    let echo = match preset {
        "fig5" => preset_fig5(cli, trials_override, &mut emitter)?,
        "fig3" => preset_fig3(cli, trials_override, &mut emitter)?,
        "fig4" => preset_fig4(cli, trials_override, &mut emitter)?,
        "manipulation" => preset_manipulation(cli, &mut emitter)?,
        other => return Err(CliError::Config(format!("unknown preset {other:?}"))),
    };
    emitter.finish("experiment", echo, cli.seed, started)
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Consensus probability over a Watts-Strogatz grid, weighted-median vs DeGroot.
fn preset_fig5(
    cli: &Cli,
    trials_override: Option<u32>,
    emitter: &mut Emitter,
) -> Result<serde_json::Value, CliError> {
    let (ns, betas, trials): (&[usize], &[f64], u32) = match cli.scale {
        Scale::Desk => (&[10, 20, 30, 40], &[0.1, 0.5, 1.0], 500),
        Scale::Paper => (
            &[50, 100, 200, 500, 1000, 2000, 5000],
            &[0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            5_000,
        ),
    };
    let trials = trials_override.unwrap_or(trials);
    let d = 6;
    let grid: Vec<(usize, usize, f64)> =
        ns.iter().flat_map(|&n| betas.iter().map(move |&b| (n, d, b))).collect();
    for (model, name) in [(Model::WeightedMedian, "fig5_weighted_median.csv"),
                          (Model::DeGroot, "fig5_degroot.csv")] {
        let cells = consensus_probability_experiment(model, &grid, trials, mix(cli.seed, 5))
            .map_err(internal)?;
        let mut csv = String::from("n,d,beta,trials,consensus,frequency\n");
        for c in cells {
            writeln!(csv, "{},{},{},{},{},{}", c.n, c.d, c.beta, c.trials, c.consensus, c.frequency)
                .unwrap();
        }
        emitter.write(name, &csv)?;
    }
    Ok(serde_json::json!({
        "preset": "fig5", "n": ns, "d": d, "beta": betas, "trials": trials,
    }))
}

/// Extremeness vs in-degree on one scale-free network.
fn preset_fig3(
    cli: &Cli,
    trials_override: Option<u32>,
    emitter: &mut Emitter,
) -> Result<serde_json::Value, CliError> {
    let (n, trials) = match cli.scale {
        Scale::Desk => (500, 200),
        Scale::Paper => (2_000, 1_000),
    };
    let trials = trials_override.unwrap_or(trials);
    let config = GeneratorConfig::ba(n, 2, mix(cli.seed, 31));
    let net = generate(&config).map_err(internal)?;
    let (net_text, net_name) = network_text(&net, cli.format);
    let net_name = format!("fig3_{net_name}");
    emitter.write(&net_name, &net_text)?;
    let result =
        extremeness_centrality_experiment(Model::WeightedMedian, &net, trials, mix(cli.seed, 32))
            .map_err(internal)?;
    let mut agents = String::from("agent,in_degree,extreme_frequency\n");
    for i in 0..n {
        writeln!(agents, "{i},{},{}", result.in_degree[i], result.extreme_frequency[i]).unwrap();
    }
    emitter.write("fig3_agents.csv", &agents)?;
    let mut instances = String::from("trial,agent,category,focus\n");
    for trial in &result.trials {
        for i in 0..n {
            writeln!(
                instances,
                "{},{i},{:?},{}",
                trial.trial,
                trial.categories[i],
                trial.focus[i]
            )
            .unwrap();
        }
    }
    emitter.write("fig3_instances.csv", &instances)?;
    Ok(serde_json::json!({
        "preset": "fig3",
        "generator": serde_json::to_value(&config).map_err(internal)?,
        "trials": trials,
        "network_sha256": sha_hex(&net_text),
    }))
}

/// Initial vs final opinion distributions across all five models.
fn preset_fig4(
    cli: &Cli,
    trials_override: Option<u32>,
    emitter: &mut Emitter,
) -> Result<serde_json::Value, CliError> {
    let (n, trials) = match cli.scale {
        Scale::Desk => (100, 10),
        Scale::Paper => (1_000, 1_000),
    };
    let trials = trials_override.unwrap_or(trials);
    let config = GeneratorConfig::ws(n, 6, 0.1, mix(cli.seed, 41));
    let net = generate(&config).map_err(internal)?;
    let (net_text, net_name) = network_text(&net, cli.format);
    let net_name = format!("fig4_{net_name}");
    emitter.write(&net_name, &net_text)?;
    let models = [
        Model::WeightedMedian,
        Model::DeGroot,
        Model::StubbornDeGroot,
        Model::FriedkinJohnsen,
        Model::BoundedConfidence,
    ];
    let result = distribution_experiment(
        &models,
        &net,
        InitialDistribution::Bimodal,
        trials,
        DEFAULT_BINS,
        mix(cli.seed, 42),
    )
    .map_err(internal)?;
    let mut csv = String::from("model,bin,lo,hi,count\n");
    let width = (result.initial.hi - result.initial.lo) / DEFAULT_BINS as f64;
    let dump = |label: &str, h: &medyn::experiments::Histogram, csv: &mut String| {
        for (b, &count) in h.counts.iter().enumerate() {
            let lo = h.lo + b as f64 * width;
            writeln!(csv, "{label},{b},{lo},{},{count}", lo + width).unwrap();
        }
    };
    dump("initial", &result.initial, &mut csv);
    for (model, hist) in &result.finals {
        let label = serde_json::to_string(model).map_err(internal)?;
        dump(label.trim_matches('"'), hist, &mut csv);
    }
    emitter.write("fig4_histograms.csv", &csv)?;
    Ok(serde_json::json!({
        "preset": "fig4",
        "generator": serde_json::to_value(&config).map_err(internal)?,
        "trials": trials,
        "distribution": "bimodal",
        "network_sha256": sha_hex(&net_text),
    }))
}

/// One manipulated agent ramping its signal: weighted-median vs DeGroot follower response.
fn preset_manipulation(cli: &Cli, emitter: &mut Emitter) -> Result<serde_json::Value, CliError> {
    // three followers forming a cohesive triangle plus one manipulator
    let net = InfluenceNetwork::from_dense(&[
        vec![0.3, 0.2, 0.2, 0.3],
        vec![0.2, 0.3, 0.2, 0.3],
        vec![0.2, 0.2, 0.3, 0.3],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .map_err(internal)?;
    let hold = match cli.scale {
        Scale::Desk => 400,
        Scale::Paper => 4_000,
    };
    let x0 = [0.5, 0.5, 0.5, 0.0];
    let target = 10.0;
    let signal: Vec<f64> = (0..100)
        .map(|k| k as f64 / 99.0 * target)
        .chain(std::iter::repeat_n(target, hold))
        .collect();
    for (model, name) in [
        (ManipulationModel::WeightedMedian { seed: mix(cli.seed, 91) }, "manipulation_weighted_median.csv"),
        (ManipulationModel::DeGroot, "manipulation_degroot.csv"),
    ] {
        let traj = manipulation_run(&x0, &net, &model, 3, &signal);
        let mut csv = String::from("step,agent,opinion\n");
        for (step, state) in traj.iter().enumerate() {
            for (agent, value) in state.iter().enumerate() {
                writeln!(csv, "{step},{agent},{value}").unwrap();
            }
        }
        emitter.write(name, &csv)?;
    }
    Ok(serde_json::json!({
        "preset": "manipulation",
        "manipulated_agent": 3,
        "signal_target": target,
        "steps": 100 + hold,
    }))
}

fn cmd_validate(
    cli: &Cli,
    data: &str,
    hypotheses: &str,
    started: Instant,
) -> Result<(), CliError> {
    let rows = if data == "synthetic" {
        synth_median_process(6, 30, 3, mix(cli.seed, 11))
    } else {
        let path = Path::new(data);
        let file = fs::File::open(path).map_err(|e| io_err(e, path))?;
        read_rows_csv(file).map_err(|e| CliError::Io(format!("{data}: {e}")))?
    };
    let selected: Vec<Hypothesis> = hypotheses
        .split(',')
        .map(|id| {
            Hypothesis::parse(id.trim())
                .ok_or_else(|| CliError::Config(format!("unknown hypothesis {id:?}")))
        })
        .collect::<Result<_, _>>()?;
    let points = prediction_points(&rows).map_err(|e| CliError::Io(e.to_string()))?;
    let mut report = serde_json::Map::new();
    for h in selected {
        let entry = match fit_parameters(&points, h, |q| q <= 20)
            .and_then(|params| evaluate(&points, h, &params, |q| q > 20).map(|m| (params, m)))
        {
            Ok((params, metrics)) => serde_json::json!({
                "parameters": params,
                "metrics": metrics,
            }),
            // e.g. a degenerate regression on data this hypothesis cannot fit
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        report.insert(format!("{h:?}"), entry);
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(report))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut emitter = Emitter::new(&cli.out)?;
    emitter.write("validation_metrics.json", &text)?;
    println!("{text}");
    let echo = serde_json::json!({ "data": data, "hypotheses": hypotheses });
    emitter.finish("validate", echo, cli.seed, started)
}
