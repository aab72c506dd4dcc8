//! Per-sentence graph construction, evidence extraction and the
//! classifier runs behind each variant.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use argkg_core::annotation::{ConceptAnnotation, ConceptSource};
use argkg_core::classify::{self, AnchoredPath, LabeledInstance, Mode};
use argkg_core::enrich::{
    build_corpus, collect_sentences, enrich, fallback_triples, ingest_triples_tsv, top_documents, EnrichStats, TripleAnnotation,
};
use argkg_core::stats::{compute_stats, PathRow};
use argkg_core::text::{tokenize, Stopwords};
use argkg_core::topicsel::{select_properties, PropertyDescription, Selection};
use argkg_core::traverse::{dynamic_bfs, TraversalStats};
use argkg_core::{EmbeddingTable, EvidencePath, KnowledgeGraph, NeighborhoodSource, PathKind};
use rayon::prelude::*;

use crate::config::{PipelineConfig, SelectionScope, Variant};
use crate::io::{self, DatasetRow, FormatError, PathCache};
use crate::report::{ClassificationSummary, RunReport, SeedResult, SentenceRow};

/// Properties used by the `WD` variant: subclass of, instance of.
pub const FIXED_PROPERTIES: [&str; 2] = ["P279", "P31"];

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Inputs loaded once per run.
pub struct Resources {
    pub rows: Vec<DatasetRow>,
    pub descriptions: Vec<PropertyDescription>,
    pub table: EmbeddingTable,
    pub stopwords: Stopwords,
    pub labels: Option<BTreeMap<String, String>>,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let rows = io::load_dataset(&cfg.data.dataset)?;
        let descriptions = if cfg.variant.selects_properties() {
            io::load_property_descriptions(&cfg.data.properties)?
        } else {
            Vec::new()
        };
        let table = io::load_vectors(&cfg.data.vectors)?;
        let stopwords = io::load_stopwords(cfg.data.stopwords.as_deref())?;
        let labels = cfg.data.entity_labels.as_deref().map(io::load_label_table).transpose()?;
        Ok(Self { rows, descriptions, table, stopwords, labels })
    }
}

/// Concepts of one instance: the annotation file when present, otherwise
/// the fallback linker when a label table is configured.
pub fn instance_concepts(cfg: &PipelineConfig, res: &Resources, row: &DatasetRow) -> Result<Vec<ConceptAnnotation>, String> {
    let path = cfg.data.annotations_dir.join(format!("{}.json", row.index));
    if path.is_file() {
        return io::load_annotations(&path, cfg.k_s, cfg.k_t).map_err(|e| e.to_string());
    }
    let Some(labels) = &res.labels else {
        return Err(format!("no annotation file {}", path.display()));
    };
    let mut all = io::naive_link(&row.sentence, labels, ConceptSource::Sentence);
    all.extend(io::naive_link(&row.topic, labels, ConceptSource::Topic));
    Ok(argkg_core::annotation::select_concepts(all, cfg.k_s, cfg.k_t))
}

fn entity_ids<'a>(concepts: impl IntoIterator<Item = &'a ConceptAnnotation>) -> Vec<String> {
    let set: BTreeSet<&str> = concepts.into_iter().map(|c| c.entity_id.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

/// Property selection over the articles of the given entities.
pub fn select_for_entities(cfg: &PipelineConfig, res: &Resources, ids: &[String]) -> Result<Selection, String> {
    let articles = io::load_articles(&cfg.data.articles_dir, ids).map_err(|e| e.to_string())?;
    if articles.is_empty() {
        return Err(format!("no articles found for {} entities", ids.len()));
    }
    let texts: Vec<String> = articles.into_iter().map(|(_, t)| t).collect();
    let sel = select_properties(&texts, &res.descriptions, &cfg.selection, &res.stopwords).map_err(|e| e.to_string())?;
    if sel.properties.is_empty() {
        return Err("property selection returned no properties".into());
    }
    Ok(sel)
}

/// Open-IE triples for a topic: a pre-extracted TSV when available,
/// otherwise the fallback extractor over the ranked documents.
pub fn topic_triples(cfg: &PipelineConfig, topic: &str) -> Result<Vec<TripleAnnotation>, String> {
    let slug = io::topic_slug(topic);
    let tsv = cfg.data.triples_dir.join(format!("{slug}.tsv"));
    if tsv.is_file() {
        let text = io::read_text(&tsv).map_err(|e| e.to_string())?;
        let set = ingest_triples_tsv(&text, &cfg.enrich);
        if set.malformed > 0 {
            log::warn!("{}: {} malformed triple line(s) ignored", tsv.display(), set.malformed);
        }
        return Ok(set.triples);
    }
    let docs = cfg.data.documents_dir.join(format!("{slug}.jsonl"));
    if docs.is_file() {
        let docs = io::load_ranked_documents(&docs).map_err(|e| e.to_string())?;
        let top = top_documents(docs, cfg.enrich.max_urls);
        let corpus = build_corpus(&collect_sentences(&top, &cfg.enrich), &cfg.enrich);
        log::warn!("topic `{topic}`: using the fallback triple extractor on {} sentences", corpus.sentences.len());
        return Ok(fallback_triples(&corpus, &cfg.enrich).triples);
    }
    Err(format!("no triples ({}) or documents for topic `{topic}`", tsv.display()))
}

/// Sentence token positions covered by a concept surface: the first
/// contiguous match, or every position of any surface token if none.
pub fn surface_positions(sentence_tokens: &[String], surface: &str) -> Vec<usize> {
    let s = tokenize(surface);
    if s.is_empty() {
        return Vec::new();
    }
    if let Some(start) = sentence_tokens.windows(s.len()).position(|w| w == s.as_slice()) {
        return (start..start + s.len()).collect();
    }
    (0..sentence_tokens.len()).filter(|&i| s.contains(&sentence_tokens[i])).collect()
}

/// Attaches each path to the sentence tokens of its sentence-side endpoint
/// concepts.
pub fn anchor_paths(sentence: &str, concepts: &[ConceptAnnotation], paths: Vec<EvidencePath>) -> Vec<AnchoredPath> {
    let toks = tokenize(sentence);
    let positions: BTreeMap<String, Vec<usize>> = concepts
        .iter()
        .filter(|c| c.source == ConceptSource::Sentence)
        .map(|c| (c.node_id(), surface_positions(&toks, &c.surface)))
        .collect();
    paths
        .into_iter()
        .map(|path| {
            let mut anchors = BTreeSet::new();
            for end in [path.start(), path.end()] {
                if let Some(p) = positions.get(end) {
                    anchors.extend(p.iter().copied());
                }
            }
            AnchoredPath { path, anchors: anchors.into_iter().collect() }
        })
        .collect()
}

/// Everything built for one sentence.
pub struct SentenceGraph {
    pub graph: KnowledgeGraph,
    pub traversal: TraversalStats,
    pub enrichment: Option<EnrichStats>,
    pub paths: Vec<AnchoredPath>,
    pub runtime_secs: f64,
}

/// Traversal, optional enrichment and evidence extraction for one sentence.
pub fn build_sentence_graph<S: NeighborhoodSource>(
    cfg: &PipelineConfig,
    res: &Resources,
    row: &DatasetRow,
    concepts: &[ConceptAnnotation],
    properties: &[String],
    triples: Option<&[TripleAnnotation]>,
    source: &S,
) -> Result<SentenceGraph, String>
where
    S::Error: std::fmt::Display,
{
    let start = Instant::now();
    let trav = cfg.traversal_for_variant();
    let (mut graph, mut traversal) = dynamic_bfs(&row.sentence, concepts, properties, &res.table, source, &trav).map_err(|e| match e {
        argkg_core::traverse::TraversalError::Source { entity, source } => format!("neighborhood of {entity}: {source}"),
        other => other.to_string(),
    })?;
    let mut enrichment = None;
    if let Some(t) = triples {
        let (g, st) = enrich(&graph, t, &res.stopwords);
        graph = g;
        enrichment = Some(st);
    }
    let ids = |src: ConceptSource| -> Vec<String> {
        let set: BTreeSet<String> = concepts.iter().filter(|c| c.source == src).map(ConceptAnnotation::node_id).collect();
        set.into_iter().collect()
    };
    let raw = graph.extract_evidence(&ids(ConceptSource::Topic), &ids(ConceptSource::Sentence)).map_err(|e| e.to_string())?;
    let paths = anchor_paths(&row.sentence, concepts, raw);
    let runtime_secs = start.elapsed().as_secs_f64();
    traversal.wall_time_secs = runtime_secs;
    Ok(SentenceGraph { graph, traversal, enrichment, paths, runtime_secs })
}

/// Per-sentence result kept after the graph has been dropped.
pub struct SentenceOutcome {
    pub row: SentenceRow,
    pub paths: Vec<AnchoredPath>,
    pub dot: Option<String>,
}

fn skipped(row: &DatasetRow, reason: String) -> SentenceOutcome {
    log::warn!("sentence {} skipped: {reason}", row.index);
    SentenceOutcome {
        row: SentenceRow {
            index: row.index,
            topic: row.topic.clone(),
            split: row.split.clone(),
            skipped: Some(reason),
            properties: Vec::new(),
            paths: PathRow::default(),
            traversal: None,
            nodes: 0,
            edges: 0,
            unstructured_nodes: 0,
            match_edges: 0,
        },
        paths: Vec::new(),
        dot: None,
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| PipelineError::Pool(e.to_string()))
}

/// Runs the graph stages for every sentence of the dataset, in parallel
/// over `cfg.jobs` workers. Results come back in dataset order.
pub fn extract_all<S>(cfg: &PipelineConfig, res: &Resources, source: &S) -> Result<Vec<SentenceOutcome>, PipelineError>
where
    S: NeighborhoodSource + Sync,
    S::Error: std::fmt::Display,
{
    if !cfg.variant.builds_graph() {
        return Ok(Vec::new());
    }
    let concepts: Vec<Result<Vec<ConceptAnnotation>, String>> = res.rows.iter().map(|r| instance_concepts(cfg, res, r)).collect();
    let pool = pool(cfg.jobs)?;

    // property set per selection key (topic or sentence index)
    let key = |r: &DatasetRow| match cfg.selection_scope {
        SelectionScope::Topic => r.topic.clone(),
        SelectionScope::Sentence => r.index.to_string(),
    };
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (r, c) in res.rows.iter().zip(&concepts) {
        let ids = groups.entry(key(r)).or_default();
        if let Ok(c) = c {
            ids.extend(entity_ids(c));
        }
    }
    let selections: BTreeMap<String, Result<Vec<String>, String>> = if cfg.variant.selects_properties() {
        let keys: Vec<(String, Vec<String>)> = groups.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        pool.install(|| {
            keys.par_iter()
                .map(|(k, ids)| (k.clone(), select_for_entities(cfg, res, ids).map(|s| s.properties)))
                .collect()
        })
    } else {
        groups.into_keys().map(|k| (k, Ok(FIXED_PROPERTIES.iter().map(|p| p.to_string()).collect()))).collect()
    };
    for (k, s) in &selections {
        match s {
            Ok(p) => log::info!("properties for `{k}`: {}", p.join(",")),
            Err(e) => log::warn!("property selection for `{k}` failed: {e}"),
        }
    }

    let triples: BTreeMap<String, Result<Vec<TripleAnnotation>, String>> = if cfg.variant.enriched() {
        let topics: BTreeSet<&str> = res.rows.iter().map(|r| r.topic.as_str()).collect();
        topics.into_iter().map(|t| (t.to_string(), topic_triples(cfg, t))).collect()
    } else {
        BTreeMap::new()
    };

    let outcomes = pool.install(|| {
        res.rows
            .par_iter()
            .zip(concepts.par_iter())
            .map(|(row, concepts)| {
                let concepts = match concepts {
                    Ok(c) if !c.is_empty() => c,
                    Ok(_) => return skipped(row, "no concepts".into()),
                    Err(e) => return skipped(row, e.clone()),
                };
                let props = match &selections[&key(row)] {
                    Ok(p) => p,
                    Err(e) => return skipped(row, format!("property selection: {e}")),
                };
                let trip = match triples.get(&row.topic) {
                    None => None,
                    Some(Ok(t)) => Some(t.as_slice()),
                    Some(Err(e)) => return skipped(row, e.clone()),
                };
                match build_sentence_graph(cfg, res, row, concepts, props, trip, source) {
                    Ok(sg) => {
                        let runtime = if cfg.timings { sg.runtime_secs } else { 0.0 };
                        let mut traversal = sg.traversal;
                        traversal.wall_time_secs = runtime;
                        let paths: Vec<EvidencePath> = sg.paths.iter().map(|a| a.path.clone()).collect();
                        let en = sg.enrichment.unwrap_or_default();
                        SentenceOutcome {
                            row: SentenceRow {
                                index: row.index,
                                topic: row.topic.clone(),
                                split: row.split.clone(),
                                skipped: None,
                                properties: props.clone(),
                                paths: PathRow::from_paths(&paths, traversal.depth_reached, runtime),
                                nodes: sg.graph.node_count(),
                                edges: sg.graph.edge_count(),
                                unstructured_nodes: en.unstructured_nodes,
                                match_edges: en.match_edges,
                                traversal: Some(traversal),
                            },
                            dot: cfg.write_dot.then(|| sg.graph.to_dot()),
                            paths: sg.paths,
                        }
                    }
                    Err(e) => skipped(row, e),
                }
            })
            .collect()
    });
    Ok(outcomes)
}

/// Classifier instances, with paths only for graph variants.
pub fn instances(res: &Resources, outcomes: &[SentenceOutcome], split: &str) -> Vec<LabeledInstance> {
    let paths: BTreeMap<usize, &Vec<AnchoredPath>> = outcomes.iter().map(|o| (o.row.index, &o.paths)).collect();
    res.rows
        .iter()
        .filter(|r| r.split == split)
        .map(|r| LabeledInstance {
            topic: r.topic.clone(),
            sentence: r.sentence.clone(),
            label: r.label,
            paths: paths.get(&r.index).map(|p| (*p).clone()).unwrap_or_default(),
        })
        .collect()
}

pub fn mode_for(variant: Variant) -> Mode {
    if variant.builds_graph() {
        Mode::WithPaths
    } else {
        Mode::Baseline
    }
}

/// Trains and evaluates once per configured seed.
pub fn classify_seeds(
    cfg: &PipelineConfig,
    table: &EmbeddingTable,
    train: &[LabeledInstance],
    test: &[LabeledInstance],
) -> Result<ClassificationSummary, String> {
    if test.is_empty() {
        return Err(format!("split `{}` is empty", cfg.split.test));
    }
    let mode = mode_for(cfg.variant);
    let mut per_seed = Vec::new();
    for &seed in &cfg.seeds {
        let hp = argkg_core::classify::ClassifierHyperparams { seed, ..cfg.classifier.clone() };
        let (params, log) = classify::train(train, table, mode, &hp).map_err(|e| e.to_string())?;
        for e in &log {
            log::info!("seed {seed} epoch {}: loss {:.4}, train acc {:.4}", e.epoch, e.mean_loss, e.train_accuracy);
        }
        let metrics = classify::evaluate(&params, table, test).map_err(|e| e.to_string())?;
        per_seed.push(SeedResult { seed, final_loss: log.last().map_or(0.0, |e| e.mean_loss), metrics });
    }
    Ok(ClassificationSummary::from_seeds(mode, train.len(), test.len(), per_seed))
}

/// Output directory of the configured variant.
pub fn variant_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.data.output_dir.join(cfg.variant.name())
}

/// Writes one path cache file (and optional DOT file) per processed sentence.
pub fn write_sentence_outputs(cfg: &PipelineConfig, res: &Resources, outcomes: &[SentenceOutcome]) -> Result<(), PipelineError> {
    let dir = variant_dir(cfg);
    for o in outcomes {
        let row = &res.rows[o.row.index];
        if o.row.skipped.is_none() {
            let cache = PathCache { index: row.index, topic: row.topic.clone(), sentence: row.sentence.clone(), paths: o.paths.clone() };
            io::write_json(&dir.join("paths").join(format!("{}.json", row.index)), &cache)?;
        }
        if let Some(dot) = &o.dot {
            io::write_text(&dir.join("graphs").join(format!("{}.dot", row.index)), dot)?;
        }
    }
    Ok(())
}

/// Full run: graph stages, classifier per seed, report assembly.
pub fn run_pipeline<S>(cfg: &PipelineConfig, source: &S) -> Result<(RunReport, Vec<SentenceOutcome>), PipelineError>
where
    S: NeighborhoodSource + Sync,
    S::Error: std::fmt::Display,
{
    cfg.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    let res = Resources::load(cfg)?;
    let outcomes = extract_all(cfg, &res, source)?;
    let train = instances(&res, &outcomes, &cfg.split.train);
    let test = instances(&res, &outcomes, &cfg.split.test);
    let (classification, classification_note) = match classify_seeds(cfg, &res.table, &train, &test) {
        Ok(c) => (Some(c), None),
        Err(e) => {
            log::warn!("classification skipped: {e}");
            (None, Some(e))
        }
    };
    let rows: Vec<SentenceRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    let processed: Vec<PathRow> = rows.iter().filter(|r| r.skipped.is_none()).map(|r| r.paths.clone()).collect();
    let aggregates = if cfg.variant.builds_graph() { compute_stats(&processed).ok() } else { None };
    let report = RunReport {
        variant: cfg.variant,
        train_split: cfg.split.train.clone(),
        test_split: cfg.split.test.clone(),
        sentences: res.rows.len(),
        processed: processed.len(),
        timings: cfg.timings,
        aggregates,
        classification,
        classification_note,
        rows,
    };
    write_sentence_outputs(cfg, &res, &outcomes)?;
    report.write(&variant_dir(cfg))?;
    Ok((report, outcomes))
}

/// Sentences with at least one path of either kind.
pub fn sentences_with_paths(report: &RunReport) -> usize {
    report.rows.iter().filter(|r| r.skipped.is_none() && r.paths.sen_sen + r.paths.sen_top > 0).count()
}

/// Number of sentence-to-sentence paths, for quick summaries.
pub fn count_kind(paths: &[AnchoredPath], kind: PathKind) -> usize {
    paths.iter().filter(|p| p.path.kind == kind).count()
}
