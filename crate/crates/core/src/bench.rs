//! Full-study orchestration: score every record under every attribute and
//! pooling configuration, correlate per group, compare pooling families for
//! significance and write the report files.
//!
//! Map computation fans out over records on a rayon pool. Everything after
//! that is a sequential reduction over results kept in manifest order, so
//! the report never depends on scheduling.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::{
    information_weight_map, GrayImage, Plane, Polarity, QualityAttribute, SquaredError, Ssim,
    SsimParams, WindowConfig,
};
use crate::dataset::{
    group_indices, load_image, load_manifest, params_hash, CacheKey, CachedScore, EvalRecord,
    ScoreCache,
};
use crate::error::{Error, Result};
use crate::pooling::{
    pool, PooledScore, PoolingFamily, PoolingSpec, EXPONENTS, PERCENTILE_C1, PERCENTILE_P, WPP_BINS,
};
use crate::stats::{
    codeword_totals, correlate, encode_codeword, significant_difference, CodewordTotals,
    SignificanceCodeword, ATTRIBUTE_SLOTS, CODEWORD_LEN, DATABASE_SLOTS, DEFAULT_ALPHA,
};

/// Distortion-type label of the whole-database rows.
pub const OVERALL: &str = "ALL";

/// How the member of a parametric family is chosen for plots and codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestMode {
    /// Best member chosen separately in every distortion type.
    #[default]
    PerType,
    /// One member per database, chosen on the whole-database rows.
    Overall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Pearson,
    Spearman,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Pearson => "pearson",
            Metric::Spearman => "spearman",
        }
    }

    fn of(&self, row: &CorrelationRow) -> Option<f64> {
        match self {
            Metric::Pearson => row.pearson,
            Metric::Spearman => row.spearman,
        }
    }
}

pub struct BenchConfig {
    pub manifests: Vec<PathBuf>,
    pub attributes: Vec<Arc<dyn QualityAttribute>>,
    pub pooling: Vec<PoolingSpec>,
    pub alpha: f64,
    pub best: BestMode,
    /// Also build a codeword matrix for every distortion type.
    pub per_type_samples: bool,
    /// Database ids for the three codeword slots, in order. Empty means the
    /// first three databases in manifest order.
    pub database_slots: Vec<String>,
    pub threads: Option<usize>,
    pub cache_path: Option<PathBuf>,
    /// Accept exponents, bin counts and percentile settings outside the
    /// standard catalog.
    pub allow_custom_parameters: bool,
}

impl fmt::Debug for BenchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchConfig")
            .field("manifests", &self.manifests)
            .field(
                "attributes",
                &self
                    .attributes
                    .iter()
                    .map(|a| a.id().to_string())
                    .collect::<Vec<_>>(),
            )
            .field(
                "pooling",
                &self.pooling.iter().map(|p| p.id()).collect::<Vec<_>>(),
            )
            .field("alpha", &self.alpha)
            .field("best", &self.best)
            .field("per_type_samples", &self.per_type_samples)
            .field("database_slots", &self.database_slots)
            .field("threads", &self.threads)
            .field("cache_path", &self.cache_path)
            .finish()
    }
}

impl BenchConfig {
    pub fn new(
        manifests: Vec<PathBuf>,
        attributes: Vec<Arc<dyn QualityAttribute>>,
        pooling: Vec<PoolingSpec>,
    ) -> Self {
        BenchConfig {
            manifests,
            attributes,
            pooling,
            alpha: DEFAULT_ALPHA,
            best: BestMode::PerType,
            per_type_samples: false,
            database_slots: Vec::new(),
            threads: None,
            cache_path: None,
            allow_custom_parameters: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if self.manifests.is_empty() {
            return invalid("no manifest given".into());
        }
        if self.attributes.is_empty() {
            return invalid("attribute set is empty".into());
        }
        if self.pooling.is_empty() {
            return invalid("pooling grid is empty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if self.threads == Some(0) {
            return invalid("thread count must be positive".into());
        }
        if self.database_slots.len() > 3 {
            return invalid("at most three database slots".into());
        }
        let mut seen = BTreeSet::new();
        for a in &self.attributes {
            if !seen.insert(a.id().to_string()) {
                return invalid(format!("attribute '{}' listed twice", a.id()));
            }
        }
        let mut seen = BTreeSet::new();
        for spec in &self.pooling {
            spec.validate()?;
            if !seen.insert(spec.id()) {
                return invalid(format!("pooling '{spec}' listed twice"));
            }
            if !self.allow_custom_parameters {
                check_catalog(spec)?;
            }
        }
        Ok(())
    }
}

fn check_catalog(spec: &PoolingSpec) -> Result<()> {
    let ok = match *spec {
        PoolingSpec::Minkowski { p } | PoolingSpec::QdWeighted { p } => EXPONENTS.contains(&p),
        PoolingSpec::Wpp { n_bin } => WPP_BINS.contains(&n_bin),
        PoolingSpec::Percentile { p, c1 } => p == PERCENTILE_P && c1 == PERCENTILE_C1,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "'{spec}' is outside the standard catalog (allow custom parameters to use it)"
        )))
    }
}

/// Built-in attribute by name. `window_side` sets the SSIM window.
pub fn attribute_from_name(name: &str, window_side: usize) -> Result<Arc<dyn QualityAttribute>> {
    match name {
        "squared_error" => Ok(Arc::new(SquaredError)),
        "ssim" => {
            let window = WindowConfig::gaussian(window_side);
            window.validate()?;
            Ok(Arc::new(Ssim(SsimParams {
                window,
                ..SsimParams::default()
            })))
        }
        "plugin" => Err(Error::InvalidParameter(
            "no plugin attribute is registered; implement QualityAttribute and pass it to BenchConfig"
                .into(),
        )),
        other => Err(Error::InvalidParameter(format!("unknown attribute '{other}'"))),
    }
}

/// Expand a pooling list. Each item is `all` (the full grid), a family name
/// (all of its standard configurations) or a single strategy id such as
/// `minkowski(p=2)`. Duplicates are dropped, first occurrence kept.
pub fn parse_pooling_list<S: AsRef<str>>(
    items: &[S],
    window_side: usize,
    c2: f64,
) -> Result<Vec<PoolingSpec>> {
    let mut out: Vec<PoolingSpec> = Vec::new();
    for item in items {
        let item = item.as_ref().trim();
        let specs = if item == "all" {
            PoolingSpec::full_grid(window_side, c2)
        } else if let Some(f) = PoolingFamily::from_name(item) {
            f.default_specs(window_side, c2)
        } else {
            vec![item.parse()?]
        };
        for s in specs {
            if !out.iter().any(|o| o.id() == s.id()) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Codeword attribute slot for an attribute id: squared error first, SSIM
/// second, anything else third.
pub fn attribute_slot(id: &str) -> usize {
    match id {
        "squared_error" => 0,
        "ssim" => 1,
        _ => 2,
    }
}

/// One correlation cell of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub database: String,
    /// A distortion type, or [`OVERALL`] for the whole database.
    pub distortion_type: String,
    pub attribute: String,
    pub pooling: PoolingSpec,
    /// Records that produced a score.
    pub n: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// +1 when higher scores should go with higher MOS, -1 otherwise.
    pub expected_sign: f64,
    /// Whether Pearson was computed after a logistic fit.
    pub fitted: bool,
    pub degenerate_weights: usize,
    /// Records in the group that did not produce a score.
    pub failed: usize,
    pub error: Option<String>,
}

impl CorrelationRow {
    pub fn family(&self) -> PoolingFamily {
        self.pooling.family()
    }

    pub fn normalized(&self, metric: Metric) -> Option<f64> {
        metric.of(self).map(|r| r * self.expected_sign)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub record: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeInfo {
    pub id: String,
    pub params: String,
    pub polarity: Polarity,
}

/// Parameters of a run, written to `run.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub manifests: Vec<PathBuf>,
    pub attributes: Vec<AttributeInfo>,
    pub pooling: Vec<String>,
    pub alpha: f64,
    pub best: BestMode,
    pub per_type_samples: bool,
    pub threads: Option<usize>,
    pub cache_path: Option<PathBuf>,
    pub database_slots: [Option<String>; 3],
    pub attribute_slots: [Option<String>; 3],
    pub records: usize,
    pub failures: Vec<RecordFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodewordRow {
    pub strategy_a: PoolingFamily,
    pub strategy_b: PoolingFamily,
    pub codeword: SignificanceCodeword,
}

/// Pairwise significance matrix for one scope: the whole databases
/// ([`OVERALL`]) or a single distortion type.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordTable {
    pub scope: String,
    pub rows: Vec<CodewordRow>,
    /// `None` when there are no rows.
    pub totals: Option<CodewordTotals>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationReport {
    /// Per database (manifest order): distortion types sorted, then the
    /// whole-database group; within a group, attributes then pooling
    /// configurations in config order.
    pub rows: Vec<CorrelationRow>,
    pub codewords: Vec<CodewordTable>,
    pub run: RunSummary,
}

impl CorrelationReport {
    pub fn databases(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.database) {
                out.push(r.database.clone());
            }
        }
        out
    }

    /// Distinct `(database, distortion_type)` groups, whole-database groups
    /// included, in row order.
    pub fn groups(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.database.clone(), r.distortion_type.clone());
            if out.last() != Some(&key) {
                out.push(key);
            }
        }
        out
    }

    pub fn failed_records(&self) -> usize {
        self.run.failures.len()
    }

    /// The family member reported for a cell, following `mode`.
    pub fn best(
        &self,
        database: &str,
        distortion_type: &str,
        attribute: &str,
        family: PoolingFamily,
        metric: Metric,
        mode: BestMode,
    ) -> Option<&CorrelationRow> {
        best_row(
            &self.rows,
            database,
            distortion_type,
            attribute,
            family,
            metric,
            mode,
        )
    }
}

fn best_in<'a>(
    rows: &'a [CorrelationRow],
    database: &str,
    distortion_type: &str,
    attribute: &str,
    family: PoolingFamily,
    metric: Metric,
) -> Option<&'a CorrelationRow> {
    let mut best: Option<&CorrelationRow> = None;
    for r in rows.iter().filter(|r| {
        r.database == database
            && r.distortion_type == distortion_type
            && r.attribute == attribute
            && r.family() == family
    }) {
        best = match (best, metric.of(r)) {
            (None, _) => Some(r),
            (Some(b), Some(v)) => match metric.of(b) {
                Some(bv) if bv.abs() >= v.abs() => Some(b),
                _ => Some(r),
            },
            (Some(b), None) => Some(b),
        };
    }
    best
}

fn best_row<'a>(
    rows: &'a [CorrelationRow],
    database: &str,
    distortion_type: &str,
    attribute: &str,
    family: PoolingFamily,
    metric: Metric,
    mode: BestMode,
) -> Option<&'a CorrelationRow> {
    match mode {
        BestMode::PerType => best_in(rows, database, distortion_type, attribute, family, metric),
        BestMode::Overall => {
            let chosen = best_in(rows, database, OVERALL, attribute, family, metric)?.pooling;
            rows.iter().find(|r| {
                r.database == database
                    && r.distortion_type == distortion_type
                    && r.attribute == attribute
                    && r.pooling == chosen
            })
        }
    }
}

/// Significance matrices over every unordered pair of pooling families
/// present in `rows`. Each family is represented by its best member (by
/// |Pearson|); a digit is 1 when the two magnitudes differ significantly.
/// Slots without a database or attribute, and cells without two valid
/// correlations on more than three samples, are 0.
pub fn build_codewords(
    rows: &[CorrelationRow],
    database_slots: &[Option<String>; 3],
    attribute_slots: &[Option<String>; 3],
    alpha: f64,
    mode: BestMode,
    per_type: bool,
) -> Result<Vec<CodewordTable>> {
    let present: BTreeSet<PoolingFamily> = rows.iter().map(|r| r.family()).collect();
    let families: Vec<PoolingFamily> = PoolingFamily::ALL
        .iter()
        .copied()
        .filter(|f| present.contains(f))
        .collect();

    let mut scopes = vec![OVERALL.to_string()];
    if per_type {
        let types: BTreeSet<&str> = rows
            .iter()
            .map(|r| r.distortion_type.as_str())
            .filter(|t| *t != OVERALL)
            .collect();
        scopes.extend(types.into_iter().map(str::to_string));
    }

    let mut tables = Vec::new();
    for scope in scopes {
        let mut out = Vec::new();
        for (i, &a) in families.iter().enumerate() {
            for &b in &families[i + 1..] {
                let mut flags = [false; CODEWORD_LEN];
                for (d, db) in database_slots.iter().enumerate() {
                    let Some(db) = db else { continue };
                    for (t, attr) in attribute_slots.iter().enumerate() {
                        let Some(attr) = attr else { continue };
                        let ra = best_row(rows, db, &scope, attr, a, Metric::Pearson, mode);
                        let rb = best_row(rows, db, &scope, attr, b, Metric::Pearson, mode);
                        if let (Some(ra), Some(rb)) = (ra, rb) {
                            if let (Some(pa), Some(pb)) = (ra.pearson, rb.pearson) {
                                if ra.n > 3 && rb.n > 3 {
                                    let test = significant_difference(
                                        pa.abs(),
                                        ra.n,
                                        pb.abs(),
                                        rb.n,
                                        alpha,
                                    )?;
                                    flags[SignificanceCodeword::slot(d, t)] = test.significant;
                                }
                            }
                        }
                    }
                }
                out.push(CodewordRow {
                    strategy_a: a,
                    strategy_b: b,
                    codeword: encode_codeword(&flags)?,
                });
            }
        }
        let totals = if out.is_empty() {
            None
        } else {
            let words: Vec<SignificanceCodeword> = out.iter().map(|r| r.codeword).collect();
            Some(codeword_totals(&words)?)
        };
        tables.push(CodewordTable {
            scope,
            rows: out,
            totals,
        });
    }
    Ok(tables)
}

/// Attribute slots for a list of attribute ids. Only the first attribute
/// landing in a slot is kept.
pub fn attribute_slots<'a>(ids: impl IntoIterator<Item = &'a str>) -> [Option<String>; 3] {
    let mut slots: [Option<String>; 3] = Default::default();
    for id in ids {
        let s = &mut slots[attribute_slot(id)];
        if s.is_none() {
            *s = Some(id.to_string());
        }
    }
    slots
}

/// Database slots: explicit ids if given, else the first three databases in
/// order of appearance.
pub fn database_slots<'a>(
    explicit: &[String],
    appearance: impl IntoIterator<Item = &'a str>,
) -> [Option<String>; 3] {
    let mut slots: [Option<String>; 3] = Default::default();
    if !explicit.is_empty() {
        for (s, id) in slots.iter_mut().zip(explicit) {
            *s = Some(id.clone());
        }
        return slots;
    }
    let mut seen: Vec<String> = Vec::new();
    for db in appearance {
        if !seen.iter().any(|s| s == db) {
            seen.push(db.to_string());
        }
    }
    for (s, id) in slots.iter_mut().zip(seen) {
        *s = Some(id);
    }
    slots
}

/// Per-cell outcome: a score, or an error tag.
type Cell = std::result::Result<CachedScore, String>;

struct RecordScores {
    /// Attribute-major: `cells[a * n_pooling + k]`.
    cells: Vec<Cell>,
    failure: Option<String>,
}

struct Job<'a> {
    attributes: &'a [Arc<dyn QualityAttribute>],
    pooling: &'a [PoolingSpec],
    hashes: Vec<String>,
    cache: Option<&'a ScoreCache>,
}

impl Job<'_> {
    fn key(&self, record: &str, a: usize, k: usize) -> CacheKey {
        CacheKey {
            record: record.to_string(),
            attribute: self.attributes[a].id().to_string(),
            pooling: self.pooling[k].id(),
            params_hash: self.hashes[a * self.pooling.len() + k].clone(),
        }
    }

    fn score(&self, record: &EvalRecord) -> RecordScores {
        let n_pool = self.pooling.len();
        let total = self.attributes.len() * n_pool;
        let id = record.id();

        if let Some(cache) = self.cache {
            let hits: Vec<Option<CachedScore>> = (0..total)
                .map(|i| cache.get(&self.key(&id, i / n_pool, i % n_pool)))
                .collect();
            if hits.iter().all(Option::is_some) {
                return RecordScores {
                    cells: hits.into_iter().map(|h| Ok(h.unwrap())).collect(),
                    failure: None,
                };
            }
        }

        let images = load_image(&record.reference_path)
            .and_then(|r| load_image(&record.distorted_path).map(|d| (r, d)));
        let (reference, distorted) = match images {
            Ok(pair) => pair,
            Err(e) => {
                return RecordScores {
                    cells: vec![Err(e.tag().to_string()); total],
                    failure: Some(e.to_string()),
                }
            }
        };

        let mut weights = WeightMaps::default();
        let mut cells = Vec::with_capacity(total);
        let mut failure = None;
        for (a, attr) in self.attributes.iter().enumerate() {
            let map = match attr.compute(&reference, &distorted) {
                Ok(m) => m,
                Err(e) => {
                    cells.extend(std::iter::repeat_n(Err(e.tag().to_string()), n_pool));
                    failure.get_or_insert_with(|| format!("{}: {e}", attr.id()));
                    continue;
                }
            };
            for (k, spec) in self.pooling.iter().enumerate() {
                let mut compute = || -> Result<CachedScore> {
                    let w = match spec {
                        PoolingSpec::InfoWeighted { .. } => {
                            Some(weights.get(spec, &reference, &distorted)?)
                        }
                        _ => None,
                    };
                    let s: PooledScore = pool(&map, spec, w.as_deref())?;
                    Ok(CachedScore {
                        value: s.value,
                        degenerate_fallback: s.degenerate_fallback,
                    })
                };
                let cell = match self.cache {
                    Some(c) => c.get_or_insert_with(self.key(&id, a, k), compute),
                    None => compute(),
                };
                cells.push(cell.map_err(|e| e.tag().to_string()));
            }
        }
        RecordScores { cells, failure }
    }
}

/// Information-weight maps of one image pair, computed on first use.
#[derive(Default)]
struct WeightMaps(HashMap<String, std::result::Result<Arc<Plane>, (String, String)>>);

impl WeightMaps {
    fn get(&mut self, spec: &PoolingSpec, r: &GrayImage, d: &GrayImage) -> Result<Arc<Plane>> {
        let PoolingSpec::InfoWeighted { cfg } = spec else {
            unreachable!("only information-weighted specs carry weight maps")
        };
        let key = spec.id();
        let entry = self
            .0
            .entry(key)
            .or_insert_with(|| match information_weight_map(r, d, cfg) {
                Ok(p) => Ok(Arc::new(p)),
                Err(e) => Err((e.tag().to_string(), e.to_string())),
            });
        match entry {
            Ok(p) => Ok(Arc::clone(p)),
            Err((_, msg)) => Err(Error::InvalidParameter(msg.clone())),
        }
    }
}

fn correlation_row(
    records: &[EvalRecord],
    scores: &[RecordScores],
    members: &[usize],
    cell: usize,
    polarity: Polarity,
    head: (&str, &str, &str, PoolingSpec),
) -> CorrelationRow {
    let (database, distortion_type, attribute, pooling) = head;
    let mut x = Vec::with_capacity(members.len());
    let mut y = Vec::with_capacity(members.len());
    let mut degenerate = 0;
    let mut failed = 0;
    let mut first_error = None;
    for &i in members {
        match &scores[i].cells[cell] {
            Ok(s) => {
                x.push(s.value);
                y.push(records[i].mos);
                degenerate += usize::from(s.degenerate_fallback);
            }
            Err(tag) => {
                failed += 1;
                first_error.get_or_insert_with(|| tag.clone());
            }
        }
    }
    let mut sign = match polarity {
        Polarity::Quality => 1.0,
        Polarity::Distortion => -1.0,
    };
    if records[members[0]].mos_is_dmos {
        sign = -sign;
    }
    let mut row = CorrelationRow {
        database: database.to_string(),
        distortion_type: distortion_type.to_string(),
        attribute: attribute.to_string(),
        pooling,
        n: x.len(),
        pearson: None,
        spearman: None,
        expected_sign: sign,
        fitted: false,
        degenerate_weights: degenerate,
        failed,
        error: None,
    };
    if x.len() < 3 {
        row.error = Some(first_error.unwrap_or_else(|| "UndefinedCorrelation".to_string()));
        return row;
    }
    match correlate(&x, &y) {
        Ok(c) => {
            row.pearson = Some(c.correlation.pearson);
            row.spearman = Some(c.correlation.spearman);
            row.fitted = c.fit.is_some();
            row.error = first_error;
        }
        Err(e) => row.error = Some(e.tag().to_string()),
    }
    row
}

/// Run the full study described by `config`.
pub fn run_bench(config: &BenchConfig) -> Result<CorrelationReport> {
    config.validate()?;
    let mut records = Vec::new();
    for m in &config.manifests {
        records.extend(load_manifest(m)?);
    }
    if let Some(r) = records.iter().find(|r| r.distortion_type == OVERALL) {
        return Err(Error::InvalidParameter(format!(
            "distortion type '{OVERALL}' is reserved ({})",
            r.id()
        )));
    }

    let cache = match &config.cache_path {
        Some(p) => Some(ScoreCache::load(p)?),
        None => None,
    };
    let hashes = config
        .attributes
        .iter()
        .flat_map(|a| {
            config
                .pooling
                .iter()
                .map(move |p| params_hash(&format!("{}|{}", a.params(), p.id())))
        })
        .collect();
    let job = Job {
        attributes: &config.attributes,
        pooling: &config.pooling,
        hashes,
        cache: cache.as_ref(),
    };

    let score_all = || records.par_iter().map(|r| job.score(r)).collect::<Vec<_>>();
    let scores = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(score_all),
        None => score_all(),
    };

    if let (Some(cache), Some(path)) = (&cache, &config.cache_path) {
        cache.save(path)?;
    }

    let failures: Vec<RecordFailure> = records
        .iter()
        .zip(&scores)
        .filter_map(|(r, s)| {
            s.failure.as_ref().map(|e| RecordFailure {
                record: r.id(),
                error: e.clone(),
            })
        })
        .collect();

    let mut db_order: Vec<&str> = Vec::new();
    for r in &records {
        if !db_order.contains(&r.database_id.as_str()) {
            db_order.push(&r.database_id);
        }
    }
    let by_type = group_indices(&records);
    let n_pool = config.pooling.len();
    let mut rows = Vec::new();
    for db in &db_order {
        let mut groups: Vec<(&str, Vec<usize>)> = by_type
            .iter()
            .filter(|((d, _), _)| d == db)
            .map(|((_, t), idx)| (t.as_str(), idx.clone()))
            .collect();
        let all: Vec<usize> = (0..records.len())
            .filter(|&i| records[i].database_id == *db)
            .collect();
        groups.push((OVERALL, all));
        for (dtype, members) in &groups {
            for (a, attr) in config.attributes.iter().enumerate() {
                for (k, spec) in config.pooling.iter().enumerate() {
                    rows.push(correlation_row(
                        &records,
                        &scores,
                        members,
                        a * n_pool + k,
                        attr.polarity(),
                        (db, dtype, attr.id(), *spec),
                    ));
                }
            }
        }
    }

    let db_slots = database_slots(&config.database_slots, db_order.iter().copied());
    let attr_slots = attribute_slots(config.attributes.iter().map(|a| a.id()));
    let codewords = build_codewords(
        &rows,
        &db_slots,
        &attr_slots,
        config.alpha,
        config.best,
        config.per_type_samples,
    )?;

    let run = RunSummary {
        manifests: config.manifests.clone(),
        attributes: config
            .attributes
            .iter()
            .map(|a| AttributeInfo {
                id: a.id().to_string(),
                params: a.params(),
                polarity: a.polarity(),
            })
            .collect(),
        pooling: config.pooling.iter().map(|p| p.id()).collect(),
        alpha: config.alpha,
        best: config.best,
        per_type_samples: config.per_type_samples,
        threads: config.threads,
        cache_path: config.cache_path.clone(),
        database_slots: db_slots,
        attribute_slots: attr_slots,
        records: records.len(),
        failures,
    };
    Ok(CorrelationReport {
        rows,
        codewords,
        run,
    })
}

/// Scores of one image pair under every attribute and pooling spec, for the
/// `pool` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub attribute: String,
    pub pooling: PoolingSpec,
    pub result: std::result::Result<PooledScore, String>,
}

pub fn score_pair(
    reference: &GrayImage,
    distorted: &GrayImage,
    attributes: &[Arc<dyn QualityAttribute>],
    pooling: &[PoolingSpec],
) -> Result<Vec<PairScore>> {
    let mut weights = WeightMaps::default();
    let mut out = Vec::new();
    for attr in attributes {
        let map = attr.compute(reference, distorted)?;
        for spec in pooling {
            let result = (|| {
                let w = match spec {
                    PoolingSpec::InfoWeighted { .. } => {
                        Some(weights.get(spec, reference, distorted)?)
                    }
                    _ => None,
                };
                pool(&map, spec, w.as_deref())
            })();
            out.push(PairScore {
                attribute: attr.id().to_string(),
                pooling: *spec,
                result: result.map_err(|e| e.to_string()),
            });
        }
    }
    Ok(out)
}

pub const CORRELATION_COLUMNS: [&str; 15] = [
    "database",
    "distortion_type",
    "attribute",
    "pooling",
    "family",
    "n",
    "pearson",
    "spearman",
    "pearson_normalized",
    "spearman_normalized",
    "expected_sign",
    "fitted",
    "degenerate_weights",
    "failed_records",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_correlations(path: &Path, rows: &[CorrelationRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(CORRELATION_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.database.clone(),
            r.distortion_type.clone(),
            r.attribute.clone(),
            r.pooling.id(),
            r.family().name().to_string(),
            r.n.to_string(),
            opt(r.pearson),
            opt(r.spearman),
            opt(r.normalized(Metric::Pearson)),
            opt(r.normalized(Metric::Spearman)),
            r.expected_sign.to_string(),
            r.fitted.to_string(),
            r.degenerate_weights.to_string(),
            r.failed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    finish(w, path)
}

/// Read back a `correlations.csv` written by [`write_correlations`].
pub fn read_correlations(path: impl AsRef<Path>) -> Result<Vec<CorrelationRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut idx = HashMap::new();
    for name in CORRELATION_COLUMNS {
        let i = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ManifestSchema {
                path: path.to_path_buf(),
                msg: format!("missing column '{name}'"),
            })?;
        idx.insert(name, i);
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |msg: String| Error::Record {
            path: path.to_path_buf(),
            row: line,
            msg,
        };
        let field = |name: &str| rec.get(idx[name]).unwrap_or("");
        let float = |name: &str| -> Result<Option<f64>> {
            let s = field(name);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| err(format!("bad {name} '{s}'")))
        };
        let pooling: PoolingSpec = field("pooling")
            .parse()
            .map_err(|e: Error| err(e.to_string()))?;
        let error = field("error");
        rows.push(CorrelationRow {
            database: field("database").to_string(),
            distortion_type: field("distortion_type").to_string(),
            attribute: field("attribute").to_string(),
            pooling,
            n: field("n")
                .parse()
                .map_err(|_| err(format!("bad n '{}'", field("n"))))?,
            pearson: float("pearson")?,
            spearman: float("spearman")?,
            expected_sign: float("expected_sign")?.unwrap_or(1.0),
            fitted: field("fitted") == "true",
            degenerate_weights: field("degenerate_weights").parse().unwrap_or(0),
            failed: field("failed_records").parse().unwrap_or(0),
            error: (!error.is_empty()).then(|| error.to_string()),
        });
    }
    Ok(rows)
}

/// Header of `codewords.csv`: scope, the two strategies, the codeword, then
/// one column per digit named `<database slot>/<attribute slot>`.
pub fn codeword_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["scope", "strategy_a", "strategy_b", "codeword"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for db in DATABASE_SLOTS {
        for attr in ATTRIBUTE_SLOTS {
            cols.push(format!("{db}/{attr}"));
        }
    }
    cols
}

pub fn write_codewords(path: &Path, tables: &[CodewordTable]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(codeword_columns())?;
    for t in tables {
        for r in &t.rows {
            let mut rec = vec![
                t.scope.clone(),
                r.strategy_a.name().to_string(),
                r.strategy_b.name().to_string(),
                r.codeword.to_string(),
            ];
            rec.extend(r.codeword.digits().iter().map(|&d| u8::from(d).to_string()));
            w.write_record(&rec)?;
        }
        if let Some(tot) = &t.totals {
            let mut col = vec![
                t.scope.clone(),
                "Col. Sum".into(),
                String::new(),
                String::new(),
            ];
            col.extend(tot.columns.iter().map(u32::to_string));
            w.write_record(&col)?;
            let mut db = vec![
                t.scope.clone(),
                "DB Sum".into(),
                String::new(),
                String::new(),
            ];
            for s in tot.databases {
                db.extend([s.to_string(), String::new(), String::new()]);
            }
            w.write_record(&db)?;
        }
    }
    finish(w, path)
}

fn file_stem(db: &str) -> String {
    db.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One plot-data table: x = distortion type (then [`OVERALL`]), one series
/// per `attribute:family`, y = polarity-normalized correlation of the
/// reported family member.
pub fn write_plotdata(
    path: &Path,
    report: &CorrelationReport,
    database: &str,
    metric: Metric,
    mode: BestMode,
) -> Result<()> {
    let rows: Vec<&CorrelationRow> = report
        .rows
        .iter()
        .filter(|r| r.database == database)
        .collect();
    let mut types: Vec<&str> = Vec::new();
    let mut series: Vec<(&str, PoolingFamily)> = Vec::new();
    for r in &rows {
        if !types.contains(&r.distortion_type.as_str()) {
            types.push(&r.distortion_type);
        }
        if !series.contains(&(r.attribute.as_str(), r.family())) {
            series.push((&r.attribute, r.family()));
        }
    }
    let mut w = csv_writer(path)?;
    let mut header = vec!["distortion_type".to_string()];
    header.extend(series.iter().map(|(a, f)| format!("{a}:{}", f.name())));
    w.write_record(&header)?;
    for t in types {
        let mut rec = vec![t.to_string()];
        for (a, f) in &series {
            let v = report
                .best(database, t, a, *f, metric, mode)
                .and_then(|r| r.normalized(metric));
            rec.push(opt(v));
        }
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Write `correlations.csv`, `codewords.csv`, `plotdata/<db>_<metric>.csv`
/// and `run.json` into `outdir`. Returns the written paths.
pub fn emit_reports(report: &CorrelationReport, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let outdir = outdir.as_ref();
    let plotdir = outdir.join("plotdata");
    fs::create_dir_all(&plotdir).map_err(|e| Error::io(&plotdir, e))?;
    let mut written = Vec::new();

    let p = outdir.join("correlations.csv");
    write_correlations(&p, &report.rows)?;
    written.push(p);

    let p = outdir.join("codewords.csv");
    write_codewords(&p, &report.codewords)?;
    written.push(p);

    for db in report.databases() {
        for metric in [Metric::Pearson, Metric::Spearman] {
            let p = plotdir.join(format!("{}_{}.csv", file_stem(&db), metric.name()));
            write_plotdata(&p, report, &db, metric, report.run.best)?;
            written.push(p);
        }
    }

    let p = outdir.join("run.json");
    let mut json = serde_json::to_string_pretty(&report.run)?;
    json.push('\n');
    fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
    written.push(p);
    Ok(written)
}
