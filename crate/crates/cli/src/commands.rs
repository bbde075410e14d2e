use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gudie::export::{
    read_edge_scores, read_expansions, read_node_scores, unit_to_dot, units_document, write_edge_scores,
    write_expansions, write_node_scores, RunReport,
};
use gudie::fixtures::{example_by_name, example_names, make_example, make_powerlaw, ScenarioFixture};
use gudie::pipeline::{expand_and_assemble, with_threads};
use gudie::{
    assemble, initialize, interest_propagation, load_graph, load_graph_dir, run_pipeline, ExpansionIndex,
    InterestState, PipelineOutput, PropagatedInterest, PropertyGraph, RunConfig,
};
use serde_json::json;

use crate::error::{CliError, Kind};
use crate::{BenchArgs, Command, ExamplesCommand, Overrides, RunArgs, StageArgs};

pub const NODE_SCORES: &str = "node_scores.csv";
pub const EDGE_SCORES: &str = "edge_scores.csv";
pub const PROPAGATED: &str = "propagated.csv";
pub const EXPANSIONS: &str = "expansions.txt";
pub const UNITS: &str = "units.json";
pub const REPORT: &str = "report.json";
const DEFAULT_OUT: &str = "out";

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::InitConfig { path, force } => init_config(path.as_deref(), force),
        Command::Score(args) => score(&args),
        Command::Propagate(args) => propagate(&args),
        Command::Expand(args) => expand(&args),
        Command::Units(args) => units(&args),
        Command::Run(args) => run(&args),
        Command::Examples { command } => match command {
            ExamplesCommand::List => {
                for name in example_names() {
                    let fx = example_by_name(&name).map_err(CliError::data)?;
                    println!("{name}\t{}", fx.title);
                }
                Ok(())
            }
            ExamplesCommand::Export { which, dir } => export_examples(&which, &dir),
            ExamplesCommand::Run { which, overrides } => run_examples(&which, &overrides),
        },
        Command::Bench(args) => bench(&args),
        Command::Serve { addr, ttl_secs } => {
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            runtime.block_on(gudie_service::serve(addr, Duration::from_secs(ttl_secs)))?;
            Ok(())
        }
    }
}

fn init_config(path: Option<&Path>, force: bool) -> Result<()> {
    let text = format!(
        "# Run configuration. Relative paths are resolved against this file's directory.\n\
         # Optional keys: max_path_length = <n>, threads = <n>.\n{}",
        RunConfig::template().to_toml()
    );
    match path {
        None => print!("{text}"),
        Some(p) => {
            if p.exists() && !force {
                return Err(CliError::config(format!(
                    "{} exists; pass --force to overwrite",
                    p.display()
                )));
            }
            fs::write(p, text)?;
        }
    }
    Ok(())
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = self.h {
            c.h = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.theta {
            c.theta = v;
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = &self.seeds {
            c.seeds = v.clone();
        }
        if let Some(v) = self.edge_mode {
            c.edge_mode = v;
        }
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.budget {
            c.budget = v;
        }
        if let Some(v) = self.max_path_length {
            c.max_path_length = Some(v);
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

/// Defaults, then the config file, then command-line flags.
fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let mut c = RunConfig::load(path)?;
            let base = path.parent().unwrap_or(Path::new(""));
            rebase(base, &mut c.nodes);
            rebase(base, &mut c.transactions);
            rebase(base, &mut c.out);
            c
        }
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut config);
    if let Some(p) = &args.nodes {
        config.nodes = Some(p.clone());
    }
    if let Some(p) = &args.transactions {
        config.transactions = Some(p.clone());
    }
    config.validate()?;
    Ok(config)
}

fn load(args: &RunArgs, config: &RunConfig) -> Result<PropertyGraph> {
    if let Some(dir) = &args.graph {
        return Ok(load_graph_dir(dir)?);
    }
    match (&config.nodes, &config.transactions) {
        (Some(n), Some(t)) => Ok(load_graph(n, t)?),
        _ => Err(CliError::config(
            "no input graph: pass --graph DIR, --nodes/--transactions, or set them in the config",
        )),
    }
}

fn out_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::new(Kind::Other, e).context(format!("creating {}", dir.display())))?;
    Ok(dir)
}

fn require_seeds(config: &RunConfig) -> Result<()> {
    if config.seeds.is_empty() {
        return Err(CliError::config("no seeds: pass --seeds or set `seeds` in the config"));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new(Kind::Other, e).context(format!("writing {}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::new(Kind::Data, e).context(format!("reading {}", path.display())))
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn threaded<R: Send>(config: &RunConfig, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    with_threads(config.threads, f)?
}

fn write_scores(graph: &PropertyGraph, state: &InterestState<f64>, dir: &Path) -> Result<()> {
    write_node_scores(graph, &state.node_scores, create(&dir.join(NODE_SCORES))?)?;
    write_edge_scores(graph, &state.edge_scores, create(&dir.join(EDGE_SCORES))?)?;
    Ok(())
}

fn read_state(graph: &PropertyGraph, dir: &Path) -> Result<InterestState<f64>> {
    let np = dir.join(NODE_SCORES);
    let ep = dir.join(EDGE_SCORES);
    let nodes = read_node_scores(graph, open(&np)?, &file_label(&np))?;
    let edges = read_edge_scores(graph, open(&ep)?, &file_label(&ep))?;
    InterestState::from_scores(graph, nodes, edges).map_err(|e| CliError::data(format!("initialize: {e}")))
}

fn read_propagated(graph: &PropertyGraph, dir: &Path, hops: usize) -> Result<PropagatedInterest<f64>> {
    let p = dir.join(PROPAGATED);
    let scores = read_node_scores(graph, open(&p)?, &file_label(&p))?;
    Ok(PropagatedInterest { scores, hops })
}

fn write_units(
    graph: &PropertyGraph,
    units: &[gudie::GraphUnit],
    propagated: &[f64],
    edge_scores: &[f64],
    dir: &Path,
    dot: bool,
) -> Result<()> {
    let doc = units_document(graph, units, propagated, edge_scores);
    let mut w = create(&dir.join(UNITS))?;
    w.write_all(doc.to_json().as_bytes())?;
    w.flush()?;
    if dot {
        let dot_dir = dir.join("dot");
        fs::create_dir_all(&dot_dir)?;
        for view in &doc.units {
            fs::write(dot_dir.join(format!("{}.dot", sanitize(&view.seed))), unit_to_dot(view))?;
        }
    }
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(dir.join(REPORT), text)?;
    Ok(())
}

fn score(args: &RunArgs) -> Result<()> {
    let config = resolve_config(args)?;
    let graph = load(args, &config)?;
    let dir = out_dir(&config)?;
    let state = threaded(&config, || {
        initialize::<f64>(&graph, &config.vudie, &config.ludie).map_err(|e| CliError::data(format!("initialize: {e}")))
    })?;
    for w in &state.warnings {
        eprintln!("warning: {}: {}", w.element, w.message);
    }
    write_scores(&graph, &state, &dir)
}

fn stage_dirs(args: &StageArgs) -> Result<(RunConfig, PropertyGraph, PathBuf, PathBuf)> {
    let config = resolve_config(&args.run)?;
    let graph = load(&args.run, &config)?;
    let out = out_dir(&config)?;
    let from = args.from.clone().unwrap_or_else(|| out.clone());
    Ok((config, graph, out, from))
}

fn propagate(args: &StageArgs) -> Result<()> {
    let (config, graph, out, from) = stage_dirs(args)?;
    let state = read_state(&graph, &from)?;
    let propagated = threaded(&config, || {
        interest_propagation(&graph, &state, &config.propagation())
            .map_err(|e| CliError::data(format!("propagate: {e}")))
    })?;
    write_node_scores(&graph, &propagated.scores, create(&out.join(PROPAGATED))?)?;
    Ok(())
}

fn expand(args: &StageArgs) -> Result<()> {
    let (config, graph, out, from) = stage_dirs(args)?;
    require_seeds(&config)?;
    let propagated = read_propagated(&graph, &from, config.h)?;
    let mut report = RunReport::default();
    let (index, _) = threaded(&config, || {
        Ok(expand_and_assemble(&graph, &propagated, &config, &mut report)?)
    })?;
    let mut w = create(&out.join(EXPANSIONS))?;
    write_expansions(&graph, &index, &mut w)?;
    Ok(())
}

fn units(args: &StageArgs) -> Result<()> {
    let (config, graph, out, from) = stage_dirs(args)?;
    let trace_path = from.join(EXPANSIONS);
    let trace = read_expansions(&graph, open(&trace_path)?, &file_label(&trace_path))?;
    let index = ExpansionIndex::<f64>::from_paths(graph.node_count(), &trace.seeds, &trace.paths)?;
    let propagated = read_propagated(&graph, &from, config.h)?;
    let ep = from.join(EDGE_SCORES);
    let edge_scores = read_edge_scores(&graph, open(&ep)?, &file_label(&ep))?;
    let units = threaded(&config, || {
        assemble(&graph, &index, config.edge_mode).map_err(|e| CliError::data(format!("graphunits: {e}")))
    })?;
    write_units(&graph, &units, &propagated.scores, &edge_scores, &out, args.run.dot)
}

fn write_all(graph: &PropertyGraph, out: &PipelineOutput<f64>, dir: &Path, dot: bool) -> Result<()> {
    write_scores(graph, &out.state, dir)?;
    write_node_scores(graph, &out.propagated.scores, create(&dir.join(PROPAGATED))?)?;
    let mut w = create(&dir.join(EXPANSIONS))?;
    write_expansions(graph, &out.index, &mut w)?;
    write_units(
        graph,
        &out.units,
        &out.propagated.scores,
        &out.state.edge_scores,
        dir,
        dot,
    )?;
    write_report(&out.report, dir)
}

fn run(args: &RunArgs) -> Result<()> {
    let config = resolve_config(args)?;
    require_seeds(&config)?;
    let graph = load(args, &config)?;
    let dir = out_dir(&config)?;
    let out = run_pipeline::<f64>(&graph, &config)?;
    write_all(&graph, &out, &dir, args.dot)?;
    eprintln!(
        "{} unit(s), {} expansion(s) -> {}",
        out.units.len(),
        out.report.expansion.expansions,
        dir.join(UNITS).display()
    );
    Ok(())
}

fn select_examples(which: &str) -> Result<Vec<ScenarioFixture>> {
    if which == "all" {
        return (1..=gudie::fixtures::EXAMPLE_COUNT)
            .map(|i| make_example(i).map_err(CliError::config))
            .collect();
    }
    let fx = match which.parse::<usize>() {
        Ok(i) => make_example(i),
        Err(_) => example_by_name(which),
    };
    Ok(vec![fx.map_err(CliError::config)?])
}

fn export_examples(which: &str, dir: &Path) -> Result<()> {
    for fx in select_examples(which)? {
        let sub = dir.join(&fx.name);
        gudie::save_graph_dir(&fx.graph, &sub)?;
        let mut manifest = serde_json::to_string_pretty(&fx.manifest()).expect("manifest serializes");
        manifest.push('\n');
        fs::write(sub.join("manifest.json"), manifest)?;
        let config = RunConfig {
            nodes: Some(PathBuf::from(gudie::io::NODES_FILE)),
            transactions: Some(PathBuf::from(gudie::io::TRANSACTIONS_FILE)),
            out: Some(PathBuf::from(DEFAULT_OUT)),
            ..fx.config.clone()
        };
        fs::write(sub.join("config.toml"), config.to_toml())?;
        println!("{}", sub.display());
    }
    Ok(())
}

fn run_examples(which: &str, overrides: &Overrides) -> Result<()> {
    let mut failed = 0;
    for fx in select_examples(which)? {
        let mut config = fx.config.clone();
        overrides.apply(&mut config);
        config.out = None;
        let t = Instant::now();
        let out = run_pipeline::<f64>(&fx.graph, &config)?;
        let elapsed = t.elapsed();
        let doc = out.document(&fx.graph);
        let ids: std::collections::BTreeSet<String> = doc.units[0].nodes.iter().map(|n| n.id.clone()).collect();
        let ok = fx.expect_in.is_subset(&ids) && fx.expect_out.is_disjoint(&ids);
        failed += usize::from(!ok);
        println!(
            "{}\t{}\t{:.1}ms\t{}",
            fx.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64() * 1e3,
            ids.into_iter().collect::<Vec<_>>().join(",")
        );
        if let Some(dir) = &overrides.out {
            let sub = dir.join(&fx.name);
            fs::create_dir_all(&sub)?;
            write_all(&fx.graph, &out, &sub, false)?;
        }
    }
    if failed > 0 {
        return Err(CliError::new(
            Kind::Other,
            anyhow::anyhow!("{failed} example(s) missed their expectations"),
        ));
    }
    Ok(())
}

/// Peak resident set size in MiB, where the platform reports it.
fn peak_rss_mib() -> Option<f64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib / 1024.0)
}

fn bench(args: &BenchArgs) -> Result<()> {
    let mut config = RunConfig::default();
    args.overrides.apply(&mut config);
    config.validate()?;
    let t = Instant::now();
    let graph = make_powerlaw(args.nodes, args.rng_seed).map_err(CliError::data)?;
    let generate_ms = t.elapsed().as_secs_f64() * 1e3;
    if config.seeds.is_empty() {
        let step = (graph.node_count() / args.seed_count.max(1)).max(1);
        config.seeds = graph
            .node_ids()
            .step_by(step)
            .take(args.seed_count)
            .map(|n| graph.id_of(n).to_string())
            .collect();
    }
    let t = Instant::now();
    let out = run_pipeline::<f64>(&graph, &config)?;
    let pipeline_ms = t.elapsed().as_secs_f64() * 1e3;
    let summary = graph.summary();
    let report = json!({
        "nodes": summary.node_count,
        "edges": summary.edge_count,
        "transactions": summary.transaction_count,
        "max_degree": graph.max_degree(),
        "seeds": config.seeds.len(),
        "generate_ms": generate_ms,
        "pipeline_ms": pipeline_ms,
        "stage_millis": out.report.stage_millis,
        "expansion": out.report.expansion,
        "unit_sizes": out.report.unit_sizes,
        "peak_rss_mib": peak_rss_mib(),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        write_all(&graph, &out, dir, false)?;
    }
    Ok(())
}
