use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use argkg::client::{CacheMode, SparqlClient};
use argkg::config::{PipelineConfig, Variant};
use argkg::io::{self, Checkpoint, PathCache};
use argkg::pipeline::{self, Resources};
use argkg::report::RunReport;
use argkg_core::classify::{self, AnchoredPath, ClassifierHyperparams, LabeledInstance};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "argkg", version, about = "Knowledge-graph evidence paths for argument mining")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "argkg.toml")]
    config: PathBuf,
    /// Override the configured variant.
    #[arg(long, global = true)]
    variant: Option<Variant>,
    /// Override the SPARQL cache mode: live, record or replay.
    #[arg(long, global = true)]
    mode: Option<CacheMode>,
    /// Use this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sentence jobs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write a Graphviz file per sentence graph.
    #[arg(long, global = true)]
    dot: bool,
    /// Keep wall-clock runtimes in reports.
    #[arg(long, global = true)]
    timings: bool,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select traversal properties for a topic or a single sentence.
    SelectProperties {
        #[arg(long, conflicts_with = "index")]
        topic: Option<String>,
        #[arg(long)]
        index: Option<usize>,
    },
    /// Grow the knowledge graph of one sentence and print it as JSON.
    BuildGraph {
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Like build-graph, followed by open-IE enrichment.
    Enrich {
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the graph stages for every sentence and write path caches.
    ExtractPaths,
    /// Train a classifier from the dataset and cached paths.
    Train {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Full pipeline: graphs, paths, classifier per seed, report.
    Run,
    /// Print the results row of a finished run.
    Report {
        /// Report JSON; defaults to the variant's output directory.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, String> {
    let mut cfg = PipelineConfig::load(&cli.config).map_err(|e| e.to_string())?;
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(m) = cli.mode {
        cfg.sparql.mode = m;
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(d) = &cli.out_dir {
        cfg.data.output_dir = d.clone();
    }
    cfg.write_dot |= cli.dot;
    cfg.timings |= cli.timings;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => io::write_text(p, text).map_err(|e| e.to_string()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn row(res: &Resources, index: usize) -> Result<&io::DatasetRow, String> {
    res.rows.get(index).ok_or_else(|| format!("no dataset row {index} ({} rows)", res.rows.len()))
}

fn sentence_graph(cfg: &PipelineConfig, index: usize, enrich: bool) -> Result<String, String> {
    let res = Resources::load(cfg).map_err(|e| e.to_string())?;
    let r = row(&res, index)?;
    let concepts = pipeline::instance_concepts(cfg, &res, r)?;
    let props = if cfg.variant.selects_properties() {
        let ids: Vec<String> = concepts.iter().map(|c| c.entity_id.clone()).collect();
        pipeline::select_for_entities(cfg, &res, &ids)?.properties
    } else {
        pipeline::FIXED_PROPERTIES.iter().map(|p| p.to_string()).collect()
    };
    let triples = if enrich { Some(pipeline::topic_triples(cfg, &r.topic)?) } else { None };
    let client = SparqlClient::from_config(cfg.sparql.clone())?;
    let sg = pipeline::build_sentence_graph(cfg, &res, r, &concepts, &props, triples.as_deref(), &client)?;
    if cfg.write_dot {
        let p = pipeline::variant_dir(cfg).join("graphs").join(format!("{index}.dot"));
        io::write_text(&p, &sg.graph.to_dot()).map_err(|e| e.to_string())?;
    }
    let doc = serde_json::json!({
        "index": index,
        "properties": props,
        "traversal": sg.traversal,
        "enrichment": sg.enrichment,
        "graph": sg.graph,
        "paths": sg.paths,
    });
    Ok(serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n")
}

fn cached_paths(cfg: &PipelineConfig) -> Result<BTreeMap<usize, Vec<AnchoredPath>>, String> {
    let mut out = BTreeMap::new();
    if !cfg.variant.builds_graph() {
        return Ok(out);
    }
    let dir = pipeline::variant_dir(cfg).join("paths");
    let entries = std::fs::read_dir(&dir).map_err(|e| format!("{}: {e} (run extract-paths first)", dir.display()))?;
    for e in entries {
        let p = e.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|x| x == "json") {
            let c: PathCache = io::read_json(&p).map_err(|e| e.to_string())?;
            out.insert(c.index, c.paths);
        }
    }
    Ok(out)
}

fn split_instances(res: &Resources, paths: &BTreeMap<usize, Vec<AnchoredPath>>, split: &str) -> Vec<LabeledInstance> {
    res.rows
        .iter()
        .filter(|r| r.split == split)
        .map(|r| LabeledInstance {
            topic: r.topic.clone(),
            sentence: r.sentence.clone(),
            label: r.label,
            paths: paths.get(&r.index).cloned().unwrap_or_default(),
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), String> {
    if let Command::Report { json } = &cli.command {
        let path = match json {
            Some(p) => p.clone(),
            None => pipeline::variant_dir(&load_config(&cli)?).join("report.json"),
        };
        let report: RunReport = io::read_json(&path).map_err(|e| e.to_string())?;
        print!("{}", report.to_tsv());
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::SelectProperties { topic, index } => {
            let res = Resources::load(&PipelineConfig { variant: Variant::WdLda, ..cfg.clone() }).map_err(|e| e.to_string())?;
            let chosen: Vec<&io::DatasetRow> = match (topic, index) {
                (_, Some(i)) => vec![row(&res, *i)?],
                (Some(t), None) => res.rows.iter().filter(|r| &r.topic == t).collect(),
                (None, None) => return Err("pass --topic or --index".into()),
            };
            let mut ids = Vec::new();
            for r in chosen {
                let concepts = pipeline::instance_concepts(&cfg, &res, r)?;
                ids.extend(concepts.into_iter().map(|c| c.entity_id));
            }
            ids.sort();
            ids.dedup();
            let sel = pipeline::select_for_entities(&cfg, &res, &ids)?;
            emit(None, &(serde_json::to_string_pretty(&sel).map_err(|e| e.to_string())? + "\n"))
        }
        Command::BuildGraph { index, out } => emit(out.as_deref(), &sentence_graph(&cfg, *index, false)?),
        Command::Enrich { index, out } => emit(out.as_deref(), &sentence_graph(&cfg, *index, true)?),
        Command::ExtractPaths => {
            let res = Resources::load(&cfg).map_err(|e| e.to_string())?;
            let client = SparqlClient::from_config(cfg.sparql.clone())?;
            let outcomes = pipeline::extract_all(&cfg, &res, &client).map_err(|e| e.to_string())?;
            pipeline::write_sentence_outputs(&cfg, &res, &outcomes).map_err(|e| e.to_string())?;
            let ok = outcomes.iter().filter(|o| o.row.skipped.is_none()).count();
            let with = outcomes.iter().filter(|o| !o.paths.is_empty()).count();
            let c = client.counters();
            println!(
                "{} sentences, {ok} processed, {with} with paths; {} queries ({} from cache)",
                outcomes.len(),
                c.requests,
                c.cache_hits
            );
            Ok(())
        }
        Command::Train { out } => {
            let res = Resources::load(&cfg).map_err(|e| e.to_string())?;
            let paths = cached_paths(&cfg)?;
            let train = split_instances(&res, &paths, &cfg.split.train);
            let seed = cfg.seeds[0];
            let hp = ClassifierHyperparams { seed, ..cfg.classifier.clone() };
            let (params, log) =
                classify::train(&train, &res.table, pipeline::mode_for(cfg.variant), &hp).map_err(|e| e.to_string())?;
            for e in &log {
                println!("epoch {}\tloss {:.4}\ttrain_acc {:.4}", e.epoch, e.mean_loss, e.train_accuracy);
            }
            let path = out.clone().unwrap_or_else(|| pipeline::variant_dir(&cfg).join(format!("model-{seed}.json")));
            io::write_json(&path, &Checkpoint::new(params)).map_err(|e| e.to_string())?;
            println!("checkpoint written to {}", path.display());
            Ok(())
        }
        Command::Evaluate { checkpoint } => {
            let res = Resources::load(&cfg).map_err(|e| e.to_string())?;
            let params = Checkpoint::load(checkpoint).map_err(|e| e.to_string())?;
            let paths = cached_paths(&cfg)?;
            let test = split_instances(&res, &paths, &cfg.split.test);
            let m = classify::evaluate(&params, &res.table, &test).map_err(|e| e.to_string())?;
            emit(None, &(serde_json::to_string_pretty(&m).map_err(|e| e.to_string())? + "\n"))
        }
        Command::Run => {
            let client = SparqlClient::from_config(cfg.sparql.clone())?;
            let (report, _) = pipeline::run_pipeline(&cfg, &client).map_err(|e| e.to_string())?;
            print!("{}", report.to_tsv());
            Ok(())
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
