//! The pipeline phases. Each phase reads the named artifacts of earlier
//! phases from the output directory and writes its own, so phases can be
//! re-run one at a time.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dupforge::dataset::Dataset;
use dupforge::history_gen::{read_history, write_entity, HistoryEntities, HistoryGenerator, HistoryParams};
use dupforge::io::{csv_writer, read_dataset_file, read_jsonl_documents, write_jsonl};
use dupforge::model::{EnrichedSchema, EntityHistory, SourceId, Timestamp};
use dupforge::pollution::{
    represent, write_entries, AdaptationStep, EntityGroups, PollutionContext, Simulator, SourceWriter, PARTITION_SIZE,
};
use dupforge::preconfig::{derive_preconfiguration, map_paths, GenerationConfig, HighLevelParams, PollutionTally};
use dupforge::preparation::{normalize_schema, PreparedDataset, Split};
use dupforge::profiling::{profile_dataset, profile_history, DataProfile, ProfileReport, ProfilingOptions};
use dupforge::scenario::{
    assemble, emitted_records, entity_gold, integrate_record, AssembleError, DatasetFile, GoldFiles, ScenarioManifest,
};

use crate::args::Settings;
use crate::diag::Invalid;
use crate::manifest::{sha256_bytes, sha256_file, RunManifest};

pub const PROFILE: &str = "profile.json";
pub const PREPARED_DATA: &str = "prepared.jsonl";
pub const PREPARED_SCHEMA: &str = "prepared_schema.json";
pub const CONFIG: &str = "config.json";
pub const HISTORY: &str = "history.jsonl";
pub const HISTORY_DIAGNOSTICS: &str = "history_diagnostics.jsonl";
pub const PROVENANCE: &str = "provenance.jsonl";
pub const POLLUTION: &str = "pollution.json";
pub const SOURCES_DIR: &str = "sources";
pub const GOLD_DIR: &str = "gold";
pub const SCENARIOS_DIR: &str = "scenarios";

/// Schema side of the prepared dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreparedMeta {
    pub schema: EnrichedSchema,
    pub profile: DataProfile,
    pub splits: Vec<Split>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSummary {
    pub id: SourceId,
    pub name: String,
    pub export: DatasetFile,
    pub differing_cells: u64,
    pub cells: u64,
    pub pollution: f64,
}

/// Outcome of the pollution phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollutionReport {
    pub sources: Vec<SourceSummary>,
    pub adaptation: Vec<AdaptationStep>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("create {}", path.display()))?;
    Ok(BufWriter::with_capacity(1 << 16, f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("open {}", path.display()))?;
    Ok(BufReader::with_capacity(1 << 16, f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parse {}", path.display()))
}

pub fn config_hash(config: &GenerationConfig) -> Result<String> {
    Ok(sha256_bytes(&serde_json::to_vec(config)?))
}

fn input_path(s: &Settings) -> Result<&Path> {
    match &s.input {
        Some(p) => Ok(p),
        None => Err(Invalid("missing --input".into()).into()),
    }
}

fn read_input(s: &Settings, m: &mut RunManifest) -> Result<Dataset> {
    let path = input_path(s)?;
    let (hash, _) = sha256_file(path)?;
    m.input_hashes.insert(path.display().to_string(), hash);
    read_dataset_file(path).with_context(|| format!("read {}", path.display()))
}

pub fn profile(s: &Settings, m: &mut RunManifest) -> Result<()> {
    let ds = read_input(s, m)?;
    let opts = ProfilingOptions::default();
    let mut report = profile_dataset(&ds, &opts);
    if let Some(path) = &s.history_input {
        let (hash, _) = sha256_file(path)?;
        m.input_hashes.insert(path.display().to_string(), hash);
        let history = read_history(open(path)?, Some(&ds.paths)).with_context(|| format!("read {}", path.display()))?;
        report.schema.temporal = profile_history(&history, Timestamp(s.horizon), &opts)?;
    }
    write_json(&s.out_dir.join(PROFILE), &report)
}

/// Normalizes the input. Change-model entries of the profile carry over for
/// every path that survives normalization, so hand edits and mined models
/// are kept.
pub fn prepare(s: &Settings, m: &mut RunManifest) -> Result<()> {
    let ds = read_input(s, m)?;
    let report: ProfileReport = read_json(&s.out_dir.join(PROFILE))?;
    let mut prepared = normalize_schema(&ds, &report.profile, &ProfilingOptions::default());
    let known = report.schema.temporal;
    let temporal = &mut prepared.schema.temporal;
    for (path, change) in known.paths {
        if let Some(slot) = temporal.paths.get_mut(&path) {
            *slot = change;
        }
    }
    temporal.insert_rate = known.insert_rate;
    temporal.delete_rate = known.delete_rate;
    temporal.rules = known
        .rules
        .into_iter()
        .filter(|r| r.antecedent.iter().chain(&r.consequent).all(|p| temporal.paths.contains_key(p)))
        .collect();
    let mut w = create(&s.out_dir.join(PREPARED_DATA))?;
    write_jsonl(&prepared.data, &mut w)?;
    w.flush()?;
    let meta = PreparedMeta { schema: prepared.schema, profile: prepared.profile, splits: prepared.splits };
    write_json(&s.out_dir.join(PREPARED_SCHEMA), &meta)
}

fn load_meta(dir: &Path) -> Result<PreparedMeta> {
    let meta: PreparedMeta = read_json(&dir.join(PREPARED_SCHEMA))?;
    meta.schema.schema.validate().map_err(|e| Invalid(format!("{PREPARED_SCHEMA}: {e}")))?;
    Ok(meta)
}

fn load_prepared(dir: &Path) -> Result<PreparedDataset> {
    let meta = load_meta(dir)?;
    let path = dir.join(PREPARED_DATA);
    let docs = read_jsonl_documents(open(&path)?).with_context(|| format!("read {}", path.display()))?;
    let data = Dataset::conform(meta.schema.schema.model, meta.schema.schema.paths(), &docs)
        .with_context(|| format!("read {}", path.display()))?;
    Ok(PreparedDataset { data, schema: meta.schema, profile: meta.profile, splits: meta.splits })
}

fn config_path(s: &Settings) -> PathBuf {
    s.config.clone().unwrap_or_else(|| s.out_dir.join(CONFIG))
}

fn load_config(s: &Settings, schema: &EnrichedSchema) -> Result<GenerationConfig> {
    let path = config_path(s);
    let config: GenerationConfig = read_json(&path)?;
    config.validate(schema).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
    Ok(config)
}

pub fn high_level(s: &Settings) -> HighLevelParams {
    let scenario = s.scenario.into();
    let sources = s.sources.unwrap_or(if s.scenario == crate::args::Scenario::Cleaning { 1 } else { 3 });
    let mut p = HighLevelParams::new(scenario, sources, s.seed);
    p.pollution = s.pollution;
    p.duplicates = s.duplicates;
    p.volume_factor = s.volume_factor;
    p.copy_intensity = s.copy_intensity;
    p.heterogeneity = s.heterogeneity.unwrap_or(p.heterogeneity);
    p.horizon = Timestamp(s.horizon);
    p
}

/// Derives the configuration, or adopts the one given with `--config`.
pub fn preconfig(s: &Settings, m: &mut RunManifest) -> Result<()> {
    let meta = load_meta(&s.out_dir)?;
    let config = match &s.config {
        Some(_) => load_config(s, &meta.schema)?,
        None => {
            let params = high_level(s);
            derive_preconfiguration(&meta.schema, &meta.profile, &meta.splits, &params).map_err(|e| Invalid(e.to_string()))?
        }
    };
    assemble(config.params.scenario, config.sources.len(), &config.integration).map_err(|e| Invalid(e.to_string()))?;
    m.config_hash = Some(config_hash(&config)?);
    m.seed = config.seed;
    write_json(&s.out_dir.join(CONFIG), &config)
}

pub fn history(s: &Settings, _: &mut RunManifest) -> Result<()> {
    let prepared = load_prepared(&s.out_dir)?;
    let config = load_config(s, &prepared.schema)?;
    let params = HistoryParams {
        horizon: config.history.horizon,
        volume_factor: config.history.volume_factor,
        seed: config.seed,
    };
    let generator =
        HistoryGenerator::new(&prepared, &prepared.schema.temporal, &[], &prepared.schema.constraints, params)
            .map_err(|e| Invalid(e.to_string()))?;
    drop(prepared);
    let mut out = create(&s.out_dir.join(HISTORY))?;
    let mut diag = create(&s.out_dir.join(HISTORY_DIAGNOSTICS))?;
    let total = generator.entity_count();
    let mut start = 0;
    while start < total {
        let end = (start + PARTITION_SIZE as u64).min(total);
        let (entities, diagnostics) = generator.generate_range(start..end);
        for e in &entities {
            write_entity(&mut out, generator.paths(), e)?;
        }
        for d in diagnostics {
            serde_json::to_writer(&mut diag, &d)?;
            diag.write_all(b"\n")?;
        }
        start = end;
    }
    out.flush()?;
    diag.flush()?;
    Ok(())
}

/// Reads up to `n` entities.
fn next_chunk<R: BufRead>(it: &mut HistoryEntities<R>, n: usize) -> Result<Vec<EntityHistory>> {
    let mut out = Vec::with_capacity(n);
    for e in it.by_ref().take(n) {
        out.push(e?);
    }
    Ok(out)
}

fn source_file(name: &str, extension: &str) -> String {
    format!("{SOURCES_DIR}/{name}.{extension}")
}

fn extension(model: dupforge::model::DataModel) -> &'static str {
    match model {
        dupforge::model::DataModel::Relational => "csv",
        dupforge::model::DataModel::Document => "jsonl",
    }
}

pub fn pollute(s: &Settings, _: &mut RunManifest) -> Result<()> {
    let meta = load_meta(&s.out_dir)?;
    let config = load_config(s, &meta.schema)?;
    let paths = meta.schema.schema.paths();
    let horizon = config.history.horizon;
    let ctx = PollutionContext::new(paths.clone(), &meta.schema, &meta.profile, &config.splits, horizon);

    let mut exports = Vec::new();
    let mut writers = Vec::new();
    for source in &config.sources {
        let rep = &source.profile_at(horizon).representation;
        let columns = map_paths(&rep.mapping, &paths);
        let file = source_file(&source.name, extension(rep.model));
        writers.push(SourceWriter::new(rep.model, &columns, create(&s.out_dir.join(&file))?)?);
        exports.push(DatasetFile { file, model: rep.model, columns, records: 0 });
    }
    let index: BTreeMap<SourceId, usize> = config.sources.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    let mut provenance = create(&s.out_dir.join(PROVENANCE))?;
    let mut tallies = vec![PollutionTally::default(); config.sources.len()];
    let mut entities = HistoryEntities::new(open(&s.out_dir.join(HISTORY))?, &paths);
    let mut sim = Simulator::new(&ctx, config.clone());
    loop {
        let chunk = next_chunk(&mut entities, PARTITION_SIZE)?;
        if chunk.is_empty() {
            break;
        }
        let outcome = sim.run_partition(&chunk);
        for (t, x) in tallies.iter_mut().zip(&outcome.tallies) {
            t.merge(*x);
        }
        for o in outcome.entities {
            write_entries(&mut provenance, &o.provenance)?;
            for (id, r) in o.records {
                let k = index[&id];
                let rep = &config.sources[k].profile_at(horizon).representation;
                writers[k].write(r.id, represent(rep, &paths, &r.cells))?;
                exports[k].records += 1;
            }
        }
    }
    provenance.flush()?;
    for w in writers {
        w.finish()?;
    }
    let sources = config
        .sources
        .iter()
        .zip(exports)
        .zip(&tallies)
        .map(|((src, export), t)| SourceSummary {
            id: src.id,
            name: src.name.clone(),
            export,
            differing_cells: t.differing,
            cells: t.cells,
            pollution: t.fraction(),
        })
        .collect();
    let report = PollutionReport { sources, adaptation: sim.adaptation_steps().to_vec() };
    write_json(&s.out_dir.join(POLLUTION), &report)
}

/// Moves the history stream to entity `id`. Both streams are in entity order.
fn seek_entity<R: BufRead>(
    it: &mut std::iter::Peekable<HistoryEntities<R>>,
    id: dupforge::model::EntityId,
) -> Result<Option<EntityHistory>> {
    loop {
        match it.peek() {
            None => return Ok(None),
            Some(Err(_)) => return Err(it.next().expect("peeked").expect_err("error").into()),
            Some(Ok(e)) if e.id < id => {
                it.next();
            }
            Some(Ok(e)) if e.id == id => return Ok(it.next().transpose()?),
            Some(Ok(_)) => return Ok(None),
        }
    }
}

struct IntegrationOutput {
    dir: String,
    writer: SourceWriter<BufWriter<File>>,
    errors: BufWriter<File>,
    records: u64,
    unmapped: u64,
}

pub fn assemble_phase(s: &Settings, _: &mut RunManifest) -> Result<()> {
    let meta = load_meta(&s.out_dir)?;
    let config = load_config(s, &meta.schema)?;
    let report: PollutionReport = read_json(&s.out_dir.join(POLLUTION))?;
    let paths = meta.schema.schema.paths();
    let horizon = config.history.horizon;
    let plans = assemble(config.params.scenario, config.sources.len(), &config.integration)
        .map_err(|e| Invalid(e.to_string()))?;
    let hash = config_hash(&config)?;

    let gold = GoldFiles {
        clusters: format!("{GOLD_DIR}/clusters.jsonl"),
        pairs: format!("{GOLD_DIR}/pairs.csv"),
        golden: format!("{GOLD_DIR}/golden.jsonl"),
    };
    let mut clusters = create(&s.out_dir.join(&gold.clusters))?;
    let mut pairs = csv_writer(create(&s.out_dir.join(&gold.pairs))?);
    pairs.write_record(["record_id_a", "record_id_b"])?;
    let mut golden = create(&s.out_dir.join(&gold.golden))?;

    let model = meta.schema.schema.model;
    let mut integrations: Vec<(usize, IntegrationOutput)> = Vec::new();
    for plan in &plans {
        if let Some(k) = plan.integration {
            let dir = format!("{SCENARIOS_DIR}/{}", plan.name);
            let file = s.out_dir.join(&dir).join(format!("integrated.{}", extension(model)));
            let writer = SourceWriter::new(model, &config.integration[k].target, create(&file)?)?;
            let errors = create(&s.out_dir.join(&dir).join("mapping_errors.jsonl"))?;
            integrations.push((k, IntegrationOutput { dir, writer, errors, records: 0, unmapped: 0 }));
        }
    }

    let mut history = HistoryEntities::new(open(&s.out_dir.join(HISTORY))?, &paths).peekable();
    for group in EntityGroups::new(open(&s.out_dir.join(PROVENANCE))?) {
        let (id, entries) = group?;
        let records = emitted_records(&entries).map_err(|e| Invalid(e.to_string()))?;
        let entity = seek_entity(&mut history, id)?;
        let g = entity_gold(entity.as_ref(), &records, &paths, horizon).map_err(|e| match e {
            AssembleError::DanglingRecord { .. } => anyhow::Error::from(Invalid(e.to_string())),
            other => other.into(),
        })?;
        for r in &g.records {
            serde_json::to_writer(&mut clusters, &dupforge::scenario::ClusterLine { record_id: *r, cluster_id: g.cluster })?;
            clusters.write_all(b"\n")?;
        }
        for (a, b) in g.pairs() {
            pairs.write_record([a.to_string(), b.to_string()])?;
        }
        if let Some(gr) = &g.golden {
            serde_json::to_writer(&mut golden, gr)?;
            golden.write_all(b"\n")?;
        }
        for (k, out) in &mut integrations {
            for r in &records {
                let ir = integrate_record(&config.integration[*k], *k, config.seed, r, &paths);
                out.writer.write(ir.record_id, ir.record)?;
                out.records += 1;
                out.unmapped += u64::from(!ir.unmapped.is_empty());
                if let Some(err) = &ir.error {
                    serde_json::to_writer(&mut out.errors, err)?;
                    out.errors.write_all(b"\n")?;
                }
            }
        }
    }
    clusters.flush()?;
    pairs.flush()?;
    golden.flush()?;

    let sources: BTreeMap<SourceId, DatasetFile> = report
        .sources
        .iter()
        .map(|src| {
            let mut f = src.export.clone();
            f.file = format!("../../{}", f.file);
            (src.id, f)
        })
        .collect();
    let up = |f: &str| format!("../../{f}");
    let rel_gold = GoldFiles { clusters: up(&gold.clusters), pairs: up(&gold.pairs), golden: up(&gold.golden) };
    let mut outputs: BTreeMap<usize, IntegrationOutput> = integrations.into_iter().collect();
    for plan in &plans {
        let mut manifest = ScenarioManifest {
            name: plan.name.clone(),
            kind: plan.kind,
            sources: sources.clone(),
            integrated: None,
            mapping_errors: None,
            unmapped_records: 0,
            gold: rel_gold.clone(),
            config_hash: hash.clone(),
            seed: config.seed,
        };
        let dir = format!("{SCENARIOS_DIR}/{}", plan.name);
        if let Some(out) = plan.integration.and_then(|k| outputs.remove(&k)) {
            out.writer.finish()?;
            let mut errors = out.errors;
            errors.flush()?;
            manifest.integrated = Some(DatasetFile {
                file: format!("integrated.{}", extension(model)),
                model,
                columns: config.integration[plan.integration.expect("integration plan")].target.clone(),
                records: out.records,
            });
            manifest.mapping_errors = Some("mapping_errors.jsonl".into());
            manifest.unmapped_records = out.unmapped;
            debug_assert_eq!(out.dir, dir);
        }
        write_json(&s.out_dir.join(&dir).join("scenario.json"), &manifest)?;
    }
    if report.sources.len() != config.sources.len() {
        bail!(Invalid(format!("{POLLUTION} does not match {CONFIG}")));
    }
    Ok(())
}
