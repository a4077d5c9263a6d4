//! Subcommand implementations.
//!
//! Exit codes: 0 success, 2 oracle error, 3 validation error, 4 infeasible,
//! 5 I/O error.

use std::fmt;
use std::path::{Path, PathBuf};

use regen_core::asset_db::{AssetDatabase, AssetDbError};
use regen_core::compiler::{compile, CompileError, ScenarioConfig};
use regen_core::expansion::{
    enumerate_scenarios, expand, init_graph, BehaviorSpec, ExpansionBudget, ExpansionError,
    ScenarioGraph,
};
use regen_core::metrics::{
    sampled_diversity, Corpus, Embedder, HashEmbedder, MetricKind, MetricsError, RemoteEmbedder,
};
use regen_core::oracle::{OracleError, OracleHandle};
use regen_core::sim2d::{MapLibrary, SimError};
use regen_core::solver::{
    solve_placement, ConcreteScenario, PlacementVocabulary, SearchParams, SolveError,
};

use crate::manifest::Manifest;
use crate::plot::render_trace_svg;
use crate::trace::TraceFile;

pub struct Context {
    pub assets: PathBuf,
    pub maps: PathBuf,
    pub oracle: String,
    pub seed: u64,
    pub jobs: usize,
}

#[derive(Debug)]
pub enum CliError {
    Oracle(String),
    Validation(String),
    Infeasible(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Oracle(m) => write!(f, "{m}"),
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Infeasible(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Oracle(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Io { .. } | OracleError::TranscriptParse { .. } => {
                CliError::Io(e.to_string())
            }
            other => CliError::Oracle(other.to_string()),
        }
    }
}

impl From<ExpansionError> for CliError {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::Oracle(o) => o.into(),
            ExpansionError::Io { .. } | ExpansionError::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Oracle(o) => o.into(),
            CompileError::Io { .. } | CompileError::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AssetDbError> for CliError {
    fn from(e: AssetDbError) -> Self {
        match e {
            AssetDbError::Io { .. } | AssetDbError::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io { .. } | SimError::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Sim(s) => s.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io { .. } => CliError::Io(e.to_string()),
            MetricsError::Embedder(m) => CliError::Oracle(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}

fn oracle_handle(ctx: &Context) -> Result<OracleHandle, CliError> {
    if let Some(path) = ctx.oracle.strip_prefix("scripted:") {
        Ok(OracleHandle::scripted_from_path(path)?)
    } else if ctx.oracle == "remote" {
        Ok(OracleHandle::remote_from_env()?)
    } else {
        Err(CliError::Validation(format!(
            "unknown oracle '{}': use 'scripted:<path>' or 'remote'",
            ctx.oracle
        )))
    }
}

pub fn solve_params(
    ctx: &Context,
    grid_step: f64,
    speed_step: f64,
    max_candidates: usize,
    gap_min: f64,
) -> SearchParams {
    SearchParams {
        grid_step,
        speed_step,
        max_candidates,
        gap_min,
        seed: ctx.seed,
        ..SearchParams::default()
    }
}

fn budget(max_depth: u32, max_events: usize, max_nodes: usize) -> ExpansionBudget {
    ExpansionBudget {
        max_event_depth: max_depth.max(1),
        max_events_per_node: max_events.max(1),
        max_total_nodes: max_nodes.max(1),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_expand(
    ctx: &Context,
    behavior: &str,
    route: &str,
    prior: Option<&str>,
    max_depth: u32,
    max_events: usize,
    max_nodes: usize,
    out: &Path,
) -> Result<(), CliError> {
    let db = AssetDatabase::load(&ctx.assets)?;
    let maps = MapLibrary::new(&ctx.maps);
    let spec = BehaviorSpec::new(behavior, route, &maps)?;
    let oracle = oracle_handle(ctx)?;
    let graph = init_graph(&spec)?;
    let graph = expand(
        graph,
        &db,
        &budget(max_depth, max_events, max_nodes),
        &oracle,
        prior,
    )?;
    write_file(out, &graph.to_json())?;
    println!(
        "expanded: {} events, {} entities, {} properties -> {}",
        graph.events.len(),
        graph.entities.len(),
        graph.properties.len(),
        out.display()
    );
    if let Some(path) = ctx.oracle.strip_prefix("scripted:") {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("read {path}: {e}")))?;
        println!(
            "transcript digest: {}",
            regen_core::hash::content_hash(&bytes)
        );
    }
    Ok(())
}

pub fn cmd_ground(ctx: &Context, graph_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let db = AssetDatabase::load(&ctx.assets)?;
    let oracle = oracle_handle(ctx)?;
    let graph = ScenarioGraph::load(graph_path)?;
    let subs = enumerate_scenarios(&graph);
    if subs.is_empty() {
        eprintln!("warning: no simulatable scenarios in {}", graph_path.display());
    }
    let mut written = 0usize;
    for (i, sub) in subs.iter().enumerate() {
        let config = compile(sub, &db, &oracle)?;
        let path = out_dir.join(format!("scenario_{i:02}.config.json"));
        write_file(&path, &config.to_json())?;
        written += 1;
    }
    println!("grounded {written} scenario config(s) -> {}", out_dir.display());
    Ok(())
}

fn load_map_and_route(
    ctx: &Context,
    config: &ScenarioConfig,
) -> Result<(regen_core::sim2d::RoadMap, regen_core::sim2d::EgoRoute), CliError> {
    let maps = MapLibrary::new(&ctx.maps);
    let (map, route) = maps.resolve_route(&config.route_id)?;
    Ok((map, route))
}

fn solve_config(
    ctx: &Context,
    config: &ScenarioConfig,
    params: &SearchParams,
) -> Result<ConcreteScenario, CliError> {
    let (map, route) = load_map_and_route(ctx, config)?;
    let vocab = PlacementVocabulary::default();
    Ok(solve_placement(config, &map, &route, &vocab, params)?)
}

pub fn cmd_solve(
    ctx: &Context,
    config_path: &Path,
    params: SearchParams,
    out: &Path,
) -> Result<(), CliError> {
    let db = AssetDatabase::load(&ctx.assets)?;
    let config = ScenarioConfig::load(config_path)?;
    let report = regen_core::compiler::validate_config(&config, &db);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if !report.is_ok() {
        return Err(CliError::Validation(report.violations.join("\n")));
    }
    let solved = solve_config(ctx, &config, &params)?;
    let mut scenario = solved.clone();
    scenario.witness_trace = None; // trace is exported by `run`
    write_file(out, &scenario.to_json())?;
    if solved.feasible {
        println!("feasible: stage log {:?} -> {}", solved.stage_log, out.display());
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "infeasible: verdict {:?}, first unmet stage {:?} ({} candidates tried)",
            solved.verdict, solved.first_unmet_stage, solved.candidates_tried
        )))
    }
}

/// Applies "entity.key=value" to the config before solving.
fn apply_counterfactual(config: &mut ScenarioConfig, spec: &str) -> Result<(), CliError> {
    let (target, value) = spec.split_once('=').ok_or_else(|| {
        CliError::Validation(format!("counterfactual '{spec}' is not 'entity.key=value'"))
    })?;
    let (entity_name, key) = target.split_once('.').ok_or_else(|| {
        CliError::Validation(format!("counterfactual '{spec}' is not 'entity.key=value'"))
    })?;
    let key = key.replace('_', " ");
    let entity = config
        .entities
        .iter_mut()
        .find(|e| e.name == entity_name)
        .ok_or_else(|| CliError::Validation(format!("unknown entity '{entity_name}'")))?;
    entity
        .static_properties
        .insert(key.clone(), value.to_string());
    config
        .fsm
        .initial_conditions
        .properties
        .insert(format!("{entity_name}.{key}"), value.to_string());
    Ok(())
}

pub fn cmd_run(
    ctx: &Context,
    config_path: &Path,
    counterfactual: Option<&str>,
    params: SearchParams,
    out_dir: &Path,
) -> Result<(), CliError> {
    let db = AssetDatabase::load(&ctx.assets)?;
    let mut config = ScenarioConfig::load(config_path)?;
    if let Some(spec) = counterfactual {
        apply_counterfactual(&mut config, spec)?;
    }
    let report = regen_core::compiler::validate_config(&config, &db);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    if !report.is_ok() {
        return Err(CliError::Validation(report.violations.join("\n")));
    }
    let solved = solve_config(ctx, &config, &params)?;
    let trace = TraceFile::from_scenario(&config, &solved);
    let mut scenario = solved.clone();
    scenario.witness_trace = None;
    write_file(&out_dir.join("concrete.json"), &scenario.to_json())?;
    write_file(&out_dir.join("trace.json"), &trace.to_json())?;
    write_file(
        &out_dir.join("verdict.json"),
        &serde_json::to_string_pretty(&serde_json::json!({
            "verdict": solved.verdict,
            "feasible": solved.feasible,
            "stage_log": solved.stage_log,
            "first_unmet_stage": solved.first_unmet_stage,
        }))
        .unwrap(),
    )?;
    if solved.feasible {
        println!(
            "accepted: stage log {:?} -> {}",
            solved.stage_log,
            out_dir.display()
        );
        Ok(())
    } else {
        Err(CliError::Infeasible(format!(
            "verdict {:?}: first unmet stage {:?}",
            solved.verdict, solved.first_unmet_stage
        )))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    ctx: &Context,
    corpus_path: &Path,
    metric: &str,
    sample_size: Option<usize>,
    repeats: usize,
    max_n: usize,
    embedder: &str,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let corpus = Corpus::load(corpus_path)?;
    let kind = match metric {
        "self-bleu" => MetricKind::SelfBleu,
        _ => MetricKind::Embedding,
    };
    let sample_size = sample_size.unwrap_or(corpus.texts.len());
    let embedder: Box<dyn Embedder> = match embedder {
        "remote" => Box::new(RemoteEmbedder::from_env()?),
        _ => Box::new(HashEmbedder::default()),
    };
    let report = sampled_diversity(
        &corpus,
        kind,
        sample_size,
        repeats,
        ctx.seed,
        max_n,
        embedder.as_ref(),
    )?;
    let json = serde_json::to_string_pretty(&report).unwrap();
    match out {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn cmd_plot(trace_path: &Path, out: &Path) -> Result<(), CliError> {
    let trace = TraceFile::load(trace_path)?;
    if trace.ticks.is_empty() {
        return Err(CliError::Validation(format!(
            "trace {} has no ticks to plot",
            trace_path.display()
        )));
    }
    let svg = render_trace_svg(&trace);
    write_file(out, &svg)?;
    println!("plotted {} ticks -> {}", trace.ticks.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_pipeline(
    ctx: &Context,
    behavior: &str,
    route: &str,
    prior: Option<&str>,
    max_depth: u32,
    max_events: usize,
    max_nodes: usize,
    params: SearchParams,
    repeats: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let db = AssetDatabase::load(&ctx.assets)?;
    let maps = MapLibrary::new(&ctx.maps);
    let oracle = oracle_handle(ctx)?;
    let mut manifest = Manifest::new(ctx.seed);
    let assets_hash = manifest.hash_input("assets", &ctx.assets)?;
    let oracle_hash = if let Some(path) = ctx.oracle.strip_prefix("scripted:") {
        manifest.hash_input("transcript", Path::new(path))?
    } else {
        manifest.note_input("oracle", &ctx.oracle)
    };
    let behavior_hash = manifest.note_input("behavior", behavior);

    // Stage 1: expand.
    let spec = BehaviorSpec::new(behavior, route, &maps)?;
    let graph = init_graph(&spec)?;
    let graph = expand(
        graph,
        &db,
        &budget(max_depth, max_events, max_nodes),
        &oracle,
        prior,
    )?;
    let graph_path = out_dir.join("graph.json");
    write_file(&graph_path, &graph.to_json())?;
    let graph_hash = manifest.add_artifact(
        out_dir,
        &graph_path,
        &[
            ("assets", assets_hash.clone()),
            ("oracle", oracle_hash.clone()),
            ("behavior", behavior_hash.clone()),
        ],
    )?;

    // Stage 2: ground every enumerated scenario.
    let subs = enumerate_scenarios(&graph);
    let mut configs = Vec::new();
    for (i, sub) in subs.iter().enumerate() {
        let config = compile(sub, &db, &oracle)?;
        let path = out_dir.join(format!("scenario_{i:02}")).join("config.json");
        write_file(&path, &config.to_json())?;
        let hash = manifest.add_artifact(
            out_dir,
            &path,
            &[("graph", graph_hash.clone()), ("oracle", oracle_hash.clone())],
        )?;
        configs.push((i, config, hash));
    }

    // Stage 3: solve and run scenarios on a worker pool. Results are
    // collected by index, so artifacts do not depend on pool size.
    let vocab = PlacementVocabulary::default();
    let results: Vec<Result<(usize, ConcreteScenario), CliError>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in configs.chunks(configs.len().div_ceil(ctx.jobs).max(1)) {
            let maps = &maps;
            let vocab = &vocab;
            let params = &params;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                for (i, config, _) in chunk {
                    let solved = maps
                        .resolve_route(&config.route_id)
                        .map_err(CliError::from)
                        .and_then(|(map, route)| {
                            solve_placement(config, &map, &route, vocab, params)
                                .map_err(CliError::from)
                        });
                    out.push(solved.map(|s| (*i, s)));
                }
                out
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut solved_by_index: Vec<(usize, ConcreteScenario)> = Vec::new();
    for result in results {
        solved_by_index.push(result?);
    }
    solved_by_index.sort_by_key(|(i, _)| *i);

    let mut narratives = Vec::new();
    let mut accepted = 0usize;
    for ((i, config, config_hash), (_, solved)) in configs.iter().zip(&solved_by_index) {
        let dir = out_dir.join(format!("scenario_{i:02}"));
        let trace = TraceFile::from_scenario(config, solved);
        let mut scenario = solved.clone();
        scenario.witness_trace = None;
        write_file(&dir.join("concrete.json"), &scenario.to_json())?;
        write_file(&dir.join("trace.json"), &trace.to_json())?;
        write_file(&dir.join("plot.svg"), &render_trace_svg(&trace))?;
        for name in ["concrete.json", "trace.json", "plot.svg"] {
            manifest.add_artifact(
                out_dir,
                &dir.join(name),
                &[("config", config_hash.clone())],
            )?;
        }
        if solved.feasible {
            accepted += 1;
        }
        narratives.push(config.narrative.clone());
    }

    // Stage 4: diversity over the grounded narratives.
    if narratives.len() >= 2 {
        let corpus = Corpus {
            texts: narratives,
            source_label: "pipeline narratives".into(),
        };
        let report = sampled_diversity(
            &corpus,
            MetricKind::SelfBleu,
            corpus.texts.len(),
            repeats,
            ctx.seed,
            4,
            &HashEmbedder::default(),
        )?;
        let path = out_dir.join("diversity.json");
        write_file(&path, &serde_json::to_string_pretty(&report).unwrap())?;
        manifest.add_artifact(out_dir, &path, &[("graph", graph_hash.clone())])?;
    }

    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, &manifest.to_json())?;
    println!(
        "pipeline: {} scenario(s), {} accepted -> {}",
        configs.len(),
        accepted,
        out_dir.display()
    );
    Ok(())
}
