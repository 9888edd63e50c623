//! Batch driver: load or generate a stream, filter it, slide an engine over
//! it and write per-slide results and metrics.

use std::collections::{BTreeSet, VecDeque};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, DEFAULT_BUDGET};
use crate::engine::{Engine, EngineKind, SeedResult};
use crate::error::{Error, Result};
use crate::ic::IcEngine;
use crate::influence::{InfluenceFunction, MaterializedViews, Weights};
use crate::sic::SicEngine;
use crate::stream::io::{read_csv, read_ndjson};
use crate::stream::{Action, AncestorChain, Ordinal, PropagationIndex, Stream, UserId, WindowConfig};
use crate::streamgen::{self, GenConfig, GenSummary};

/// Header of the results CSV. Downstream tooling diffs on it; keep it exact.
pub const RESULTS_HEADER: &str = "seq,engine,k,value,seeds,checkpoints,update_micros";

/// Closed axis-aligned box `[min_x, max_x] × [min_y, max_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn contains(&self, [x, y]: [f64; 2]) -> bool {
        self.min_x <= x && x <= self.max_x && self.min_y <= y && y <= self.max_y
    }
}

impl std::str::FromStr for BoundingBox {
    type Err = Error;

    /// Parses `min_x,min_y,max_x,max_y`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad box `{s}`: {e}")))?;
        let [min_x, min_y, max_x, max_y] = parts[..] else {
            return Err(Error::Config(format!("box needs four numbers, got `{s}`")));
        };
        if min_x > max_x || min_y > max_y {
            return Err(Error::Config(format!("box `{s}` is empty")));
        }
        Ok(Self { min_x, min_y, max_x, max_y })
    }
}

/// Sub-stream selection. Both parts must accept an action.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub tags: Option<BTreeSet<String>>,
    pub bbox: Option<BoundingBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    Reject,
    /// Rejected because a box filter is set and the action has no position.
    MissingPos,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        self.tags.is_none() && self.bbox.is_none()
    }

    pub fn verdict(&self, action: &Action) -> FilterVerdict {
        if let Some(tags) = &self.tags {
            if !action.tags.iter().any(|t| tags.contains(t)) {
                return FilterVerdict::Reject;
            }
        }
        if let Some(bbox) = &self.bbox {
            match action.pos {
                None => return FilterVerdict::MissingPos,
                Some(p) if !bbox.contains(p) => return FilterVerdict::Reject,
                Some(_) => {}
            }
        }
        FilterVerdict::Keep
    }

    pub fn accepts(&self, action: &Action) -> bool {
        self.verdict(action) == FilterVerdict::Keep
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub kept: u64,
    pub rejected: u64,
    pub missing_pos: u64,
}

/// Keeps the actions `spec` accepts, in order.
pub fn apply_filter(actions: Vec<Action>, spec: &FilterSpec) -> (Vec<Action>, FilterCounts) {
    let mut counts = FilterCounts::default();
    let kept = actions
        .into_iter()
        .filter(|a| match spec.verdict(a) {
            FilterVerdict::Keep => {
                counts.kept += 1;
                true
            }
            FilterVerdict::Reject => {
                counts.rejected += 1;
                false
            }
            FilterVerdict::MissingPos => {
                counts.missing_pos += 1;
                false
            }
        })
        .collect();
    (kept, counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    #[default]
    Cardinality,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    /// NDJSON, or CSV when the extension is `.csv`.
    Path(PathBuf),
    Generate(GenConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub window: WindowConfig,
    pub function: FunctionKind,
    /// `user,weight` CSV; required for the weighted function.
    pub weights: Option<PathBuf>,
    pub filter: FilterSpec,
    pub input: InputSource,
    /// Query after every this many slides (and after the last one).
    pub query_every: u64,
    pub out_results: Option<PathBuf>,
    pub out_metrics: Option<PathBuf>,
    pub out_manifest: Option<PathBuf>,
    /// Abort on the first malformed record instead of skipping it.
    pub strict: bool,
    /// Fan batches out to checkpoints on the rayon pool.
    pub parallel: bool,
    /// Subset budget for the exact engine.
    pub exact_budget: u128,
}

impl RunConfig {
    pub fn new(engine: EngineKind, window: WindowConfig, input: InputSource) -> Self {
        Self {
            engine,
            window,
            function: FunctionKind::Cardinality,
            weights: None,
            filter: FilterSpec::default(),
            input,
            query_every: 1,
            out_results: None,
            out_metrics: None,
            out_manifest: None,
            strict: false,
            parallel: false,
            exact_budget: DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.query_every == 0 {
            return Err(Error::Config("query cadence must be at least 1".into()));
        }
        match (self.function, &self.weights) {
            (FunctionKind::Weighted, None) => {
                Err(Error::Config("the weighted function needs a weight table".into()))
            }
            (FunctionKind::Cardinality, Some(_)) => {
                Err(Error::Config("a weight table only applies to the weighted function".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One query answer, as written to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Input `seq` of the last action of the slide.
    pub seq: u64,
    pub engine: EngineKind,
    pub k: usize,
    pub value: f64,
    /// Seed names joined with `;`.
    pub seeds: String,
    pub checkpoints: usize,
    pub update_micros: u64,
}

/// Per-slide timing and size, as written to the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub slide: u64,
    pub seq: u64,
    pub actions: usize,
    pub update_micros: u64,
    /// Actions per second of update time.
    pub throughput: f64,
    pub checkpoints: usize,
    /// Empty on slides without a query.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub slides: u64,
    /// Actions ingested.
    pub actions: u64,
    /// Filtered actions after the last full slide, not ingested.
    pub trailing: u64,
    pub queries: u64,
    pub skipped_records: usize,
    pub filter: FilterCounts,
    /// Actions whose parent was never seen (treated as roots).
    pub orphaned: u64,
    /// Total actions over total update time.
    pub mean_throughput: f64,
    /// Mean value over queried slides; 0 without queries.
    pub mean_value: f64,
    pub mean_checkpoints: f64,
    pub max_checkpoints: usize,
    pub total_update_micros: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenSummary>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub results: Vec<ResultRow>,
    pub metrics: Vec<MetricsRow>,
    pub summary: RunSummary,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    summary: &'a RunSummary,
}

/// A loaded input stream.
#[derive(Debug, Clone)]
pub struct LoadedStream {
    pub stream: Stream,
    pub skipped: usize,
    pub generator: Option<GenSummary>,
}

pub fn load_input(input: &InputSource, strict: bool) -> Result<LoadedStream> {
    match input {
        InputSource::Path(path) => {
            let file = File::open(path)?;
            let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let outcome =
                if is_csv { read_csv(file, strict)? } else { read_ndjson(BufReader::new(file), strict)? };
            Ok(LoadedStream { stream: outcome.stream, skipped: outcome.skipped, generator: None })
        }
        InputSource::Generate(cfg) => {
            let generated = streamgen::generate(cfg)?;
            Ok(LoadedStream { stream: generated.stream, skipped: 0, generator: Some(generated.manifest.summary) })
        }
    }
}

/// Loads the input named by `cfg`, runs it and writes the requested outputs.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut loaded = load_input(&cfg.input, cfg.strict)?;
    let function = match (&cfg.function, &cfg.weights) {
        (FunctionKind::Weighted, Some(path)) => {
            InfluenceFunction::weighted(Weights::read_csv(File::open(path)?, &mut loaded.stream.users)?)
        }
        _ => InfluenceFunction::Cardinality,
    };
    let mut report = run_stream(cfg, loaded.stream, function)?;
    report.summary.skipped_records = loaded.skipped;
    report.summary.generator = loaded.generator;
    write_outputs(cfg, &report)?;
    Ok(report)
}

/// Runs `cfg`'s engine over an in-memory stream. Outputs are not written.
pub fn run_stream(cfg: &RunConfig, stream: Stream, function: InfluenceFunction) -> Result<RunReport> {
    cfg.validate()?;
    let Stream { users, actions } = stream;
    let (actions, filter) = apply_filter(actions, &cfg.filter);
    let mut engine = build_engine(cfg, function)?;
    let window = cfg.window;

    let mut results = Vec::new();
    let mut metrics = Vec::new();
    let mut value_sum = 0.0;
    let mut checkpoint_sum = 0u64;
    let mut max_checkpoints = 0;
    let mut total_nanos = 0u128;
    // A trailing partial slide is not ingested; it is reported as `trailing`.
    let chunks = actions.chunks_exact(window.slide as usize);
    let trailing = chunks.remainder().len() as u64;
    let batches: Vec<&[Action]> = chunks.collect();
    let last = batches.len();

    for (i, batch) in batches.into_iter().enumerate() {
        let slide = i as u64 + 1;
        let started = Instant::now();
        engine.slide(batch)?;
        let nanos = started.elapsed().as_nanos().max(1);
        total_nanos += nanos;
        let update_micros = (nanos / 1000) as u64;
        let seq = batch.last().map_or(0, |a| a.seq);
        let checkpoints = engine.checkpoint_count();
        checkpoint_sum += checkpoints as u64;
        max_checkpoints = max_checkpoints.max(checkpoints);

        let mut value = None;
        if slide.is_multiple_of(cfg.query_every) || i + 1 == last {
            let answer = engine.query()?;
            value_sum += answer.value;
            value = Some(answer.value);
            results.push(result_row(&answer, seq, window.k, checkpoints, update_micros, &users));
        }
        metrics.push(MetricsRow {
            slide,
            seq,
            actions: batch.len(),
            update_micros,
            throughput: batch.len() as f64 / (nanos as f64 * 1e-9),
            checkpoints,
            value,
        });
    }

    let slides = metrics.len() as u64;
    let queries = results.len() as u64;
    let summary = RunSummary {
        slides,
        actions: actions.len() as u64 - trailing,
        trailing,
        queries,
        skipped_records: 0,
        filter,
        orphaned: engine.orphaned(),
        mean_throughput: if total_nanos == 0 {
            0.0
        } else {
            (actions.len() as u64 - trailing) as f64 / (total_nanos as f64 * 1e-9)
        },
        mean_value: if queries == 0 { 0.0 } else { value_sum / queries as f64 },
        mean_checkpoints: if slides == 0 { 0.0 } else { checkpoint_sum as f64 / slides as f64 },
        max_checkpoints,
        total_update_micros: (total_nanos / 1000) as u64,
        generator: None,
    };
    Ok(RunReport { results, metrics, summary })
}

fn result_row(
    answer: &SeedResult,
    seq: u64,
    k: usize,
    checkpoints: usize,
    update_micros: u64,
    users: &crate::stream::UserTable,
) -> ResultRow {
    ResultRow {
        seq,
        engine: answer.engine,
        k,
        value: answer.value,
        seeds: users.names_of(&answer.seeds).collect::<Vec<_>>().join(";"),
        checkpoints,
        update_micros,
    }
}

/// Engine plus access to the orphan counter, which lives below the trait.
trait RunEngine: Engine {
    fn orphaned(&self) -> u64;
}

impl RunEngine for IcEngine {
    fn orphaned(&self) -> u64 {
        self.pipeline().index().orphaned()
    }
}

impl RunEngine for SicEngine {
    fn orphaned(&self) -> u64 {
        self.pipeline().index().orphaned()
    }
}

impl RunEngine for WindowBaseline {
    fn orphaned(&self) -> u64 {
        self.index.orphaned()
    }
}

fn build_engine(cfg: &RunConfig, function: InfluenceFunction) -> Result<Box<dyn RunEngine>> {
    Ok(match cfg.engine {
        EngineKind::Ic => Box::new(IcEngine::new(cfg.window, function)?.with_parallel(cfg.parallel)),
        EngineKind::Sic => Box::new(SicEngine::new(cfg.window, function)?.with_parallel(cfg.parallel)),
        EngineKind::Greedy => Box::new(WindowBaseline::greedy(cfg.window, function)?),
        EngineKind::Exact => Box::new(WindowBaseline::exact(cfg.window, function, cfg.exact_budget)?),
    })
}

/// Recomputes the answer from the last `N` actions at every query, with the
/// greedy or the exact solver.
#[derive(Debug)]
pub struct WindowBaseline {
    kind: EngineKind,
    cfg: WindowConfig,
    function: InfluenceFunction,
    budget: u128,
    index: PropagationIndex,
    window: VecDeque<(UserId, AncestorChain)>,
    current: Ordinal,
}

impl WindowBaseline {
    pub fn greedy(cfg: WindowConfig, function: InfluenceFunction) -> Result<Self> {
        Self::new(EngineKind::Greedy, cfg, function, 0)
    }

    pub fn exact(cfg: WindowConfig, function: InfluenceFunction, budget: u128) -> Result<Self> {
        Self::new(EngineKind::Exact, cfg, function, budget)
    }

    fn new(kind: EngineKind, cfg: WindowConfig, function: InfluenceFunction, budget: u128) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            kind,
            cfg,
            function,
            budget,
            index: PropagationIndex::new(),
            window: VecDeque::new(),
            current: 0,
        })
    }

    pub fn views(&self) -> MaterializedViews {
        MaterializedViews::build(self.window.iter().map(|(u, c)| (*u, &c[..])))
    }
}

impl Engine for WindowBaseline {
    fn kind(&self) -> EngineKind {
        self.kind
    }

    fn slide(&mut self, batch: &[Action]) -> Result<()> {
        if batch.len() as u64 != self.cfg.slide {
            return Err(Error::Config(format!("a slide takes exactly {} actions, got {}", self.cfg.slide, batch.len())));
        }
        for action in batch {
            let chain = self.index.ingest(action)?;
            self.window.push_back((action.user, chain));
            if self.window.len() as u64 > self.cfg.size {
                self.window.pop_front();
            }
            self.current += 1;
        }
        Ok(())
    }

    fn query(&self) -> Result<SeedResult> {
        let views = self.views();
        let (seeds, value) = match self.kind {
            EngineKind::Exact => {
                let r = baselines::exact(&views, &self.function, self.cfg.k, self.budget)?;
                (r.seeds, r.value)
            }
            _ => {
                let r = baselines::greedy(&views, &self.function, self.cfg.k);
                (r.seeds, r.value)
            }
        };
        Ok(SeedResult { seeds, value, engine: self.kind, checkpoint: None })
    }

    fn checkpoint_count(&self) -> usize {
        0
    }

    fn current(&self) -> Ordinal {
        self.current
    }
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["slide", "seq", "actions", "update_micros", "throughput", "checkpoints", "value"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_outputs(cfg: &RunConfig, report: &RunReport) -> Result<()> {
    if let Some(path) = &cfg.out_results {
        write_results(&report.results, create(path)?)?;
    }
    if let Some(path) = &cfg.out_metrics {
        write_metrics(&report.metrics, create(path)?)?;
    }
    if let Some(path) = &cfg.out_manifest {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &Manifest { config: cfg, summary: &report.summary })?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tagged(tags: &[&str], pos: Option<[f64; 2]>) -> Action {
        Action { tags: tags.iter().map(|t| t.to_string()).collect(), pos, ..Action::root(1, UserId(0)) }
    }

    #[test]
    fn tag_filter_intersects() {
        let spec = FilterSpec { tags: Some(["sports".into(), "news".into()].into()), bbox: None };
        assert!(spec.accepts(&tagged(&["sports"], None)));
        assert!(!spec.accepts(&tagged(&["music"], None)));
        assert!(!spec.accepts(&tagged(&[], None)));
    }

    #[test]
    fn box_filter_is_closed() {
        let spec = FilterSpec { tags: None, bbox: Some("0,0,1,1".parse().unwrap()) };
        assert!(spec.accepts(&tagged(&[], Some([0.5, 0.5]))));
        assert!(spec.accepts(&tagged(&[], Some([1.0, 0.0]))));
        assert!(!spec.accepts(&tagged(&[], Some([1.01, 0.5]))));
        assert_eq!(spec.verdict(&tagged(&[], None)), FilterVerdict::MissingPos);
    }

    #[test]
    fn filters_are_conjunctive() {
        let spec = FilterSpec { tags: Some(["a".into()].into()), bbox: Some("0,0,1,1".parse().unwrap()) };
        assert!(spec.accepts(&tagged(&["a"], Some([0.0, 0.0]))));
        assert!(!spec.accepts(&tagged(&["b"], Some([0.0, 0.0]))));
        assert!(!spec.accepts(&tagged(&["a"], Some([2.0, 0.0]))));
    }

    #[test]
    fn bad_boxes_are_config_errors() {
        for s in ["1,2,3", "0,0,x,1", "2,0,1,1"] {
            assert!(matches!(s.parse::<BoundingBox>(), Err(Error::Config(_))), "{s}");
        }
    }

    #[test]
    fn empty_results_still_have_the_header() {
        let mut out = Vec::new();
        write_results(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), RESULTS_HEADER);
    }
}
