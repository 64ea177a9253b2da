use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value as Json};

use pourcause::causation::{designated_path, raising_region, trial_context, AcQuery};
use pourcause::dataset::{read_trials, write_trials, Dataset, TRIAL_HEADER};
use pourcause::discovery::{bootstrap, infer_nodes, pc, stable_graph, CiKind, CiTest, Tiers};
use pourcause::evaluate::{evaluate, summary, write_histogram_csv, EvalConfig};
use pourcause::intervention::{do_curve, linspace, write_curve_csv, DEFAULT_SAMPLES};
use pourcause::nade::TrainConfig;
use pourcause::selection::{select_alternative, Criterion, GridConfig, SelectionPolicy, SelectionReport};
use pourcause::world::{FU, RC, RD, RV, S};
use pourcause::{pouring_graph, CausalGraph, Error, InterventionSet, Result, TrainedModel, Trial, Value, WorldConfig};

const SEED_ENV: &str = "POURCAUSE_SEED";

#[derive(Parser)]
#[command(name = "pourcause", version, about = "Learn, query and correct a causal model of a pouring task")]
struct Cli {
    /// JSON file with default values for the command's flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// where to write the run manifest (defaults next to the output)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic pouring trials
    Simulate(SimulateArgs),
    /// Learn the graph with bootstrapped PC
    Discover(DiscoverArgs),
    /// Fit one density estimator per node
    Train(TrainArgs),
    /// Sweep one intervention and record the outcome probability
    DoCurve(DoCurveArgs),
    /// Probability-raising analysis for one trial
    Ac(AcArgs),
    /// Pick an alternative value for one trial
    Select(SelectArgs),
    /// Prediction, coverage and replay success on held-out trials
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `.csv` or `.jsonl`
    #[arg(long)]
    out: PathBuf,
    /// WorldConfig JSON
    #[arg(long)]
    world: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// fisher-z or dg-lrt
    #[arg(long)]
    test: Option<String>,
    /// JSON list of lists; defaults to the pouring tiers when the columns match
    #[arg(long)]
    tiers: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// graph JSON; defaults to the pouring graph
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DoCurveArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    outcome: Option<String>,
    /// VAR:LO:HI:N
    #[arg(long)]
    sweep: String,
    /// VAR=VALUE, repeatable
    #[arg(long)]
    fix: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AcArgs {
    #[arg(long)]
    model: PathBuf,
    /// rc=..,fu=..,rd=..,rv=..[,s=..]
    #[arg(long)]
    trial: String,
    #[arg(long)]
    cause: String,
    #[arg(long)]
    outcome: Option<String>,
    /// index into the cause's directed paths; defaults to the longest
    #[arg(long)]
    path: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// region JSON; a CSV with the same stem is written alongside
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    trial: String,
    #[arg(long)]
    cause: String,
    #[arg(long)]
    threshold: Option<f64>,
    /// closest or lowest
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test_data: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    histogram_trials: Option<usize>,
    #[arg(long)]
    max_trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    variables: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    world: Option<PathBuf>,
    /// output directory
    #[arg(long)]
    out: PathBuf,
}

/// Flag, then config file, then default; records what was used.
struct Settings {
    file: Map<String, Json>,
    resolved: Map<String, Json>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            None => Map::new(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?;
                let v: Json =
                    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?;
                match v {
                    Json::Object(m) => m.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect(),
                    _ => return Err(Error::InvalidConfig("config file must hold a JSON object".into())),
                }
            }
        };
        Ok(Settings { file, resolved: Map::new() })
    }

    fn get<T: Serialize + DeserializeOwned>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: impl FnOnce() -> T,
    ) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(j) => serde_json::from_value(j.clone())
                    .map_err(|e| Error::InvalidConfig(format!("config key `{key}`: {e}")))?,
                None => default(),
            },
        };
        self.resolved.insert(key.to_string(), serde_json::to_value(&v)?);
        Ok(v)
    }

    /// Seed precedence: flag, config, environment, 0.
    fn seed(&mut self, flag: Option<u64>) -> Result<u64> {
        let env = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        self.get("seed", flag, || env.unwrap_or(0))
    }

    fn record(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        self.resolved.insert(key.to_string(), serde_json::to_value(v)?);
        Ok(())
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    tool_version: String,
    config: Map<String, Json>,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started_at: String,
    finished_at: String,
}

struct Run {
    command: &'static str,
    started_at: String,
    settings: Settings,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Run {
    fn input(&mut self, p: &Path) -> Result<()> {
        if !p.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{}: no such file", p.display()),
            )));
        }
        self.inputs.push(p.display().to_string());
        Ok(())
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn finish(self, path: Option<PathBuf>) -> Result<()> {
        let Some(path) = path else { return Ok(()) };
        let m = RunManifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.settings.resolved,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: now(),
        };
        fs::write(path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn beside(file: &Path, suffix: &str) -> PathBuf {
    let mut s = file.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn world_config(path: Option<&Path>) -> Result<WorldConfig> {
    let w = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::InvalidConfig(format!("world config: {e}")))?,
        None => WorldConfig::default(),
    };
    w.validate()?;
    Ok(w)
}

/// Trial files become `RC, FU, RD, RV, S` columns; other CSVs keep their header.
fn load_dataset(path: &Path) -> Result<Dataset> {
    let is_trials = match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "ndjson") => true,
        _ => {
            let mut rdr = csv::Reader::from_path(path)?;
            let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
            TRIAL_HEADER.iter().all(|h| header.iter().any(|c| c == h))
        }
    };
    if is_trials {
        Ok(Dataset::from_trials(&read_trials(path)?))
    } else {
        Dataset::read_csv(path)
    }
}

fn parse_value(graph: &CausalGraph, node: &str, text: &str) -> Result<Value> {
    let bad = || Error::InvalidConfig(format!("`{text}` is not a value for `{node}`"));
    if graph.kind(node)?.is_binary() {
        match text.trim() {
            "true" | "1" => Ok(Value::Bool(true)),
            "false" | "0" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        }
    } else {
        text.trim().parse::<f64>().map(Value::Real).map_err(|_| bad())
    }
}

fn parse_trial(text: &str) -> Result<Trial> {
    let mut vals: BTreeMap<String, String> = BTreeMap::new();
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("trial entry `{part}` is not key=value")))?;
        vals.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    let num = |k: &str| -> Result<f64> {
        vals.get(k)
            .ok_or_else(|| Error::InvalidConfig(format!("trial has no `{k}`")))?
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("trial `{k}` is not a number")))
    };
    let spillage = match vals.get("s").or(vals.get("spillage")).map(String::as_str) {
        None | Some("1" | "true") => true,
        Some("0" | "false") => false,
        Some(o) => return Err(Error::InvalidConfig(format!("spillage `{o}` is not boolean"))),
    };
    let t = Trial { rc: num("rc")?, fu: num("fu")?, rd: num("rd")?, rv: num("rv")?, spillage };
    t.check().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(t)
}

fn criterion(text: &str) -> Result<Criterion> {
    match text {
        "closest" | "closest_to_actual" => Ok(Criterion::ClosestToActual),
        "lowest" | "lowest_probability" => Ok(Criterion::LowestProbability),
        o => Err(Error::InvalidConfig(format!("unknown criterion `{o}`"))),
    }
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn simulate(a: SimulateArgs, run: &mut Run) -> Result<()> {
    let s = &mut run.settings;
    let n = s.get("n", a.n, || 6000)?;
    check_positive("n", n as usize)?;
    let seed = s.seed(a.seed)?;
    let world = world_config(a.world.as_deref())?;
    s.record("world", world)?;
    run.seeds.insert("seed".into(), seed);
    write_trials(&a.out, &world.generate_dataset(n as usize, seed))?;
    run.output(&a.out);
    Ok(())
}

fn pouring_names() -> Vec<String> {
    [FU, RC, RD, RV, S].iter().map(|s| s.to_string()).collect()
}

fn discover(a: DiscoverArgs, run: &mut Run) -> Result<()> {
    run.input(&a.data)?;
    let data = load_dataset(&a.data)?;
    let s = &mut run.settings;
    let boot = s.get("boot", a.boot, || 1000)?;
    check_positive("boot", boot)?;
    let alpha = s.get("alpha", a.alpha, || 0.05)?;
    let kind = match s.get("test", a.test, || "fisher-z".to_string())?.as_str() {
        "fisher-z" | "fisher_z" => CiKind::FisherZ,
        "dg-lrt" | "dg_lrt" => CiKind::DgLrt,
        o => return Err(Error::InvalidConfig(format!("unknown test `{o}`"))),
    };
    let threshold = s.get("threshold", a.threshold, || 0.5)?;
    let seed = s.seed(a.seed)?;
    let mut sorted = data.names().to_vec();
    sorted.sort();
    let is_pouring = sorted == pouring_names();
    let tiers = match &a.tiers {
        Some(p) => Tiers::from_json(&fs::read_to_string(p)?)?,
        None if is_pouring => Tiers::pouring(),
        None => Tiers::default(),
    };
    s.record("tiers", &tiers)?;
    run.seeds.insert("seed".into(), seed);
    if boot == 1 {
        eprintln!("warning: a single bootstrap says nothing about edge stability");
    }
    let test = CiTest::new(kind, alpha)?;
    fs::create_dir_all(&a.out)?;
    let table = bootstrap(&data, boot, &test, &tiers, seed)?;
    let freq_path = a.out.join("edge_frequencies.csv");
    table.write_csv(fs::File::create(&freq_path)?)?;
    run.output(&freq_path);

    let pdag_path = a.out.join("pdag.json");
    write_json(&pdag_path, &pc(&data, &test, &tiers)?)?;
    run.output(&pdag_path);

    let nodes = if is_pouring {
        let g = pouring_graph();
        data.names().iter().map(|n| g.nodes().iter().find(|m| &m.name == n).expect("pouring node").clone()).collect()
    } else {
        infer_nodes(&data)
    };
    let graph = stable_graph(&table, threshold, &tiers, nodes)?;
    let graph_path = a.out.join("graph.json");
    write_json(&graph_path, &graph)?;
    run.output(&graph_path);
    Ok(())
}

fn train(a: TrainArgs, run: &mut Run) -> Result<()> {
    run.input(&a.data)?;
    let data = load_dataset(&a.data)?;
    let graph = match &a.graph {
        Some(p) => {
            run.input(p)?;
            serde_json::from_str(&fs::read_to_string(p)?).map_err(|e| Error::Schema(format!("graph: {e}")))?
        }
        None => pouring_graph(),
    };
    let s = &mut run.settings;
    let d = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: s.get("lr", a.lr, || d.learning_rate)?,
        epochs: s.get("epochs", a.epochs, || d.epochs)?,
        batch_size: s.get("batch_size", a.batch_size, || d.batch_size)?,
        hidden: s.get("hidden", a.hidden, || d.hidden.clone())?,
        seed: s.seed(a.seed)?,
        ..d
    };
    config.validate()?;
    run.seeds.insert("seed".into(), config.seed);
    let model = TrainedModel::train(&graph, &data, &config)?;
    let dir = a.out.join("mechanisms");
    fs::create_dir_all(&dir)?;
    for m in model.mechanisms() {
        let p = dir.join(format!("{}.json", m.node));
        write_json(&p, m)?;
        run.output(&p);
    }
    let bundle = a.out.join("model.json");
    model.save(&bundle)?;
    run.output(&bundle);
    Ok(())
}

fn do_curve_cmd(a: DoCurveArgs, run: &mut Run) -> Result<()> {
    run.input(&a.model)?;
    let model = TrainedModel::load(&a.model)?;
    let graph = model.graph();
    let s = &mut run.settings;
    let outcome = s.get("outcome", a.outcome, || S.to_string())?;
    let n = s.get("samples", a.samples, || DEFAULT_SAMPLES)?;
    check_positive("samples", n)?;
    let seed = s.seed(a.seed)?;
    let parts: Vec<&str> = a.sweep.split(':').collect();
    let [var, lo, hi, points] = parts[..] else {
        return Err(Error::InvalidConfig(format!("sweep `{}` is not VAR:LO:HI:N", a.sweep)));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("`{t}` is not a number")));
    let points: usize = points.parse().map_err(|_| Error::InvalidConfig(format!("`{points}` is not a point count")))?;
    check_positive("sweep points", points)?;
    let grid = linspace(num(lo)?, num(hi)?, points);
    let mut fixed = InterventionSet::new();
    for f in &a.fix {
        let (k, v) = f.split_once('=').ok_or_else(|| Error::InvalidConfig(format!("fix `{f}` is not VAR=VALUE")))?;
        fixed.set(k.trim(), parse_value(graph, k.trim(), v)?);
    }
    s.record("sweep", &a.sweep)?;
    s.record("fix", &fixed)?;
    run.seeds.insert("seed".into(), seed);
    let curve = do_curve(&model, &outcome, var, &grid, &fixed, n, seed)?;
    write_curve_csv(fs::File::create(&a.out)?, &curve)?;
    run.output(&a.out);
    Ok(())
}

fn ac(a: AcArgs, run: &mut Run) -> Result<()> {
    run.input(&a.model)?;
    let model = TrainedModel::load(&a.model)?;
    let trial = parse_trial(&a.trial)?;
    let s = &mut run.settings;
    let outcome = s.get("outcome", a.outcome, || S.to_string())?;
    if a.cause == outcome {
        return Err(Error::InvalidConfig("cause and outcome must differ".into()));
    }
    let points = s.get("grid_points", a.grid_points, || pourcause::causation::DEFAULT_GRID_POINTS)?;
    check_positive("grid_points", points)?;
    let n = s.get("samples", a.samples, || DEFAULT_SAMPLES)?;
    let seed = s.seed(a.seed)?;
    let graph = model.graph();
    let path = match a.path {
        None => designated_path(graph, &a.cause, &outcome)?,
        Some(i) => {
            let paths = graph.directed_paths(&a.cause, &outcome)?;
            let count = paths.len();
            paths
                .into_iter()
                .nth(i)
                .ok_or_else(|| Error::InvalidConfig(format!("path index {i} out of range ({count} paths)")))?
        }
    };
    s.record("path", &path)?;
    s.record("trial", trial)?;
    run.seeds.insert("seed".into(), seed);
    let (lo, hi) = graph
        .kind(&a.cause)?
        .support()
        .ok_or_else(|| Error::InvalidConfig(format!("cause `{}` is not continuous", a.cause)))?;
    let query = AcQuery::new(&model, &a.cause, &outcome, trial_context(&trial))?
        .with_path(path)
        .with_grid(linspace(lo, hi, points))
        .with_samples(n, seed);
    let region = raising_region(&model, &query)?;
    fs::write(&a.out, region.to_json()? + "\n")?;
    run.output(&a.out);
    let csv_path = a.out.with_extension("csv");
    region.write_csv(fs::File::create(&csv_path)?)?;
    run.output(&csv_path);
    Ok(())
}

fn select(a: SelectArgs, run: &mut Run) -> Result<()> {
    run.input(&a.model)?;
    let model = TrainedModel::load(&a.model)?;
    let trial = parse_trial(&a.trial)?;
    let s = &mut run.settings;
    if a.cause == S {
        return Err(Error::InvalidConfig("cause and outcome must differ".into()));
    }
    let policy = SelectionPolicy {
        threshold: s.get("threshold", a.threshold, || 0.1)?,
        criterion: criterion(&s.get("criterion", a.criterion, || "closest".to_string())?)?,
    };
    policy.validate()?;
    let grid = GridConfig {
        points: s.get("grid_points", a.grid_points, || pourcause::causation::DEFAULT_GRID_POINTS)?,
        n_samples: s.get("samples", a.samples, || DEFAULT_SAMPLES)?,
    };
    check_positive("grid_points", grid.points)?;
    let seed = s.seed(a.seed)?;
    s.record("trial", trial)?;
    run.seeds.insert("seed".into(), seed);
    let region = pourcause::selection::region_for_trial(&model, &trial, &a.cause, &grid, seed)?;
    let result = select_alternative(&region, region.actual, &policy)?;
    let text = serde_json::to_string_pretty(&SelectionReport::new(None, &a.cause, &result, &policy))? + "\n";
    match &a.out {
        Some(p) => {
            fs::write(p, text)?;
            run.output(p);
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, run: &mut Run) -> Result<()> {
    run.input(&a.model)?;
    let model = TrainedModel::load(&a.model)?;
    run.input(&a.test_data)?;
    let trials = read_trials(&a.test_data)?;
    let world = world_config(a.world.as_deref())?;
    let s = &mut run.settings;
    let d = EvalConfig::default();
    let policy = SelectionPolicy { threshold: s.get("threshold", a.threshold, || 0.1)?, ..d.policy };
    let config = EvalConfig {
        policy,
        variables: s.get("variables", a.variables, || d.variables.clone())?,
        grid: GridConfig {
            points: s.get("grid_points", a.grid_points, || d.grid.points)?,
            n_samples: s.get("samples", a.samples, || d.grid.n_samples)?,
        },
        replications: s.get("replications", a.replications, || d.replications)?,
        histogram_trials: s.get("histogram_trials", a.histogram_trials, || d.histogram_trials)?,
        max_trials: s.get("max_trials", a.max_trials.map(Some), || d.max_trials)?,
        seed: s.seed(a.seed)?,
    };
    check_positive("grid_points", config.grid.points)?;
    check_positive("samples", config.grid.n_samples)?;
    s.record("world", world)?;
    run.seeds.insert("seed".into(), config.seed);
    let report = evaluate(&model, &world, &trials, &config)?;
    fs::create_dir_all(&a.out)?;
    let report_path = a.out.join("report.json");
    write_json(&report_path, &report)?;
    let summary_path = a.out.join("summary.json");
    write_json(&summary_path, &summary(&report))?;
    let hist_path = a.out.join("histogram.csv");
    write_histogram_csv(fs::File::create(&hist_path)?, &report)?;
    for p in [&report_path, &summary_path, &hist_path] {
        run.output(p);
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    let (name, default_manifest) = match &cli.command {
        Command::Simulate(a) => ("simulate", Some(beside(&a.out, ".manifest.json"))),
        Command::Discover(a) => ("discover", Some(a.out.join("manifest.json"))),
        Command::Train(a) => ("train", Some(a.out.join("manifest.json"))),
        Command::DoCurve(a) => ("do-curve", Some(beside(&a.out, ".manifest.json"))),
        Command::Ac(a) => ("ac", Some(beside(&a.out, ".manifest.json"))),
        Command::Select(a) => ("select", a.out.as_ref().map(|o| beside(o, ".manifest.json"))),
        Command::Evaluate(a) => ("evaluate", Some(a.out.join("manifest.json"))),
    };
    let mut run = Run {
        command: name,
        started_at: now(),
        settings,
        seeds: BTreeMap::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    if let Some(c) = &cli.config {
        run.input(c)?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a, &mut run)?,
        Command::Discover(a) => discover(a, &mut run)?,
        Command::Train(a) => train(a, &mut run)?,
        Command::DoCurve(a) => do_curve_cmd(a, &mut run)?,
        Command::Ac(a) => ac(a, &mut run)?,
        Command::Select(a) => select(a, &mut run)?,
        Command::Evaluate(a) => evaluate_cmd(a, &mut run)?,
    }
    run.finish(cli.manifest.or(default_manifest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
