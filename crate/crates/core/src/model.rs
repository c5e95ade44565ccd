//! Canonical data model: annotation tasks, LLM configurations, annotation
//! records, and the append-only JSON-lines record store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// How raw per-annotator labels are collapsed into one ground-truth label.
///
/// Majority is the default; unanimity is used for tasks where only
/// full-agreement datapoints are considered reliable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    #[default]
    Majority,
    Unanimity,
}

/// One annotator's vote on a datapoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAnnotation {
    pub annotator_id: String,
    pub label: String,
}

/// A single text to be annotated, with optional ground truth and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datapoint {
    pub datapoint_id: String,
    pub text: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    #[serde(default)]
    pub gt_label: Option<String>,
    #[serde(default)]
    pub raw_annotations: Option<Vec<RawAnnotation>>,
}

/// A unit of auditing: a labelled corpus plus its category set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    /// Ordered category names; at least two, no duplicates.
    pub label_set: Vec<String>,
    pub datapoints: Vec<Datapoint>,
    #[serde(default)]
    pub notes: String,
    /// Task-level rule used when deriving `gt_label` from `raw_annotations`.
    #[serde(default)]
    pub aggregation: AggregationRule,
}

impl AnnotationTask {
    /// Checks every type invariant, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.label_set.len() < 2 {
            return Err(Error::validation(format!(
                "task `{}`: label_set must contain at least 2 categories",
                self.task_id
            )));
        }
        let unique: BTreeSet<&String> = self.label_set.iter().collect();
        if unique.len() != self.label_set.len() {
            return Err(Error::validation(format!(
                "task `{}`: label_set contains duplicates",
                self.task_id
            )));
        }
        let mut seen_ids = BTreeSet::new();
        for dp in &self.datapoints {
            if dp.text.is_empty() {
                return Err(Error::validation(format!(
                    "task `{}`: datapoint `{}` has empty text",
                    self.task_id, dp.datapoint_id
                )));
            }
            if !seen_ids.insert(&dp.datapoint_id) {
                return Err(Error::validation(format!(
                    "task `{}`: duplicate datapoint id `{}`",
                    self.task_id, dp.datapoint_id
                )));
            }
            if let Some(label) = &dp.gt_label {
                if !self.label_set.contains(label) {
                    return Err(Error::UnknownLabel {
                        task: self.task_id.clone(),
                        label: label.clone(),
                    });
                }
            }
            if let (Some(raw), Some(gt)) = (&dp.raw_annotations, &dp.gt_label) {
                let derived = aggregate_ground_truth(raw, self.aggregation, &self.label_set)?;
                if derived.as_deref() != Some(gt.as_str()) {
                    return Err(Error::validation(format!(
                        "task `{}`: datapoint `{}` gt_label `{}` is not derivable from \
                         raw_annotations under the {:?} rule",
                        self.task_id, dp.datapoint_id, gt, self.aggregation
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads and validates a task from a JSON document.
    pub fn from_json_reader(reader: impl std::io::Read) -> Result<Self> {
        let task: AnnotationTask = serde_json::from_reader(reader)?;
        task.validate()?;
        Ok(task)
    }

    /// Datapoints that carry a ground-truth label, in task order. Only these
    /// participate in audits.
    pub fn included(&self) -> impl Iterator<Item = &Datapoint> {
        self.datapoints.iter().filter(|dp| dp.gt_label.is_some())
    }

    /// Drops datapoints whose text exactly equals an earlier one, keeping the
    /// first occurrence. Comparison is on raw bytes with no normalization.
    pub fn dedupe_exact_texts(&mut self) -> usize {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let before = self.datapoints.len();
        self.datapoints.retain(|dp| seen.insert(dp.text.clone()));
        before - self.datapoints.len()
    }
}

/// Collapses raw annotator votes into a single label, or `None` when the
/// rule cannot decide (a majority tie, or disagreement under unanimity).
/// `None` means the datapoint is excluded from audits.
pub fn aggregate_ground_truth(
    raw: &[RawAnnotation],
    rule: AggregationRule,
    label_set: &[String],
) -> Result<Option<String>> {
    if raw.is_empty() {
        return Err(Error::validation(
            "aggregate_ground_truth: empty annotation list",
        ));
    }
    for ann in raw {
        if !label_set.iter().any(|l| l == &ann.label) {
            return Err(Error::validation(format!(
                "aggregate_ground_truth: unknown category `{}`",
                ann.label
            )));
        }
    }
    match rule {
        AggregationRule::Unanimity => {
            let first = &raw[0].label;
            if raw.iter().all(|a| &a.label == first) {
                Ok(Some(first.clone()))
            } else {
                Ok(None)
            }
        }
        AggregationRule::Majority => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for ann in raw {
                *counts.entry(ann.label.as_str()).or_insert(0) += 1;
            }
            let max = counts.values().copied().max().unwrap();
            let modal: Vec<&str> = counts
                .iter()
                .filter(|(_, &c)| c == max)
                .map(|(&l, _)| l)
                .collect();
            if modal.len() == 1 {
                Ok(Some(modal[0].to_string()))
            } else {
                Ok(None) // tie -> excluded rather than arbitrary tie-breaking
            }
        }
    }
}

/// Field selector for stratification: `gt_label` or `metadata.<name>`
/// (a bare name is treated as a metadata key). Missing values form their own
/// stratum cell.
fn stratum_value(dp: &Datapoint, field: &str) -> String {
    if field == "gt_label" {
        return dp.gt_label.clone().unwrap_or_default();
    }
    let key = field.strip_prefix("metadata.").unwrap_or(field);
    dp.metadata.get(key).cloned().unwrap_or_default()
}

/// Stratified subsample of at most `max_n` datapoints.
///
/// Seats are allocated per stratum by largest remainder, so every stratum's
/// share of the output is within one datapoint of proportional. Members
/// within a stratum are chosen by a seeded shuffle; the result keeps the
/// original datapoint order and is bit-reproducible for a given seed.
pub fn subsample_stratified(
    task: &AnnotationTask,
    max_n: usize,
    strata: &[String],
    root_seed: u64,
) -> Result<AnnotationTask> {
    let n = task.datapoints.len();
    if n == 0 {
        return Err(Error::EmptyInput("subsample_stratified: empty task".into()));
    }
    if max_n >= n {
        return Ok(task.clone()); // no-op case
    }

    let mut cells: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (idx, dp) in task.datapoints.iter().enumerate() {
        let key: Vec<String> = strata.iter().map(|f| stratum_value(dp, f)).collect();
        cells.entry(key).or_default().push(idx);
    }
    if max_n < cells.len() {
        return Err(Error::validation(format!(
            "subsample_stratified: max_n {} is below the number of non-empty strata cells {}",
            max_n,
            cells.len()
        )));
    }

    // Largest-remainder seat allocation.
    let mut allocations: Vec<(&Vec<String>, &Vec<usize>, usize, f64)> = cells
        .iter()
        .map(|(key, members)| {
            let quota = members.len() as f64 * max_n as f64 / n as f64;
            let floor = quota.floor() as usize;
            (key, members, floor.min(members.len()), quota - floor as f64)
        })
        .collect();
    let mut assigned: usize = allocations.iter().map(|(_, _, f, _)| *f).sum();
    // Hand out remaining seats by descending fractional remainder; ties fall
    // back to stratum key order (the BTreeMap iteration order above).
    let mut order: Vec<usize> = (0..allocations.len()).collect();
    order.sort_by(|&i, &j| {
        allocations[j]
            .3
            .partial_cmp(&allocations[i].3)
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut cursor = 0usize;
    while assigned < max_n {
        let slot = order[cursor % order.len()];
        if allocations[slot].2 < allocations[slot].1.len() {
            allocations[slot].2 += 1;
            assigned += 1;
        }
        cursor += 1;
    }

    let mut keep: BTreeSet<usize> = BTreeSet::new();
    for (key, members, take, _) in allocations {
        let mut pool = members.clone();
        let mut rng = seed::derive_rng(root_seed, &format!("subsample/{}", key.join("\u{1f}")), 0);
        pool.shuffle(&mut rng);
        keep.extend(pool.into_iter().take(take));
    }

    let mut out = task.clone();
    let mut idx = 0usize;
    out.datapoints.retain(|_| {
        let keep_it = keep.contains(&idx);
        idx += 1;
        keep_it
    });
    Ok(out)
}

/// Prompt shape: whether in-context examples are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ZeroShot,
    FewShot,
}

/// Prompt verbosity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptDetail {
    Brief,
    Detailed,
}

/// One regex-to-label rule; the first matching pattern in mapping order wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputMapEntry {
    pub pattern: String,
    pub label: String,
}

fn default_temperature() -> f64 {
    0.0
}
fn default_max_tokens() -> u32 {
    20
}

/// One point of the configuration space: model, prompt, decoding parameters,
/// and output mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub config_id: String,
    pub model_name: String,
    pub endpoint_ref: String,
    /// Must contain the literal placeholder `{text}` exactly once.
    pub prompt_template: String,
    pub prompt_kind: PromptKind,
    pub prompt_detail: PromptDetail,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    pub output_mapping: Vec<OutputMapEntry>,
}

impl LlmConfig {
    /// Validates the config against the task it will annotate.
    pub fn validate(&self, task: &AnnotationTask) -> Result<()> {
        let placeholders = self.prompt_template.matches("{text}").count();
        if placeholders != 1 {
            return Err(Error::validation(format!(
                "config `{}`: prompt_template must contain {{text}} exactly once (found {})",
                self.config_id, placeholders
            )));
        }
        for entry in &self.output_mapping {
            if !task.label_set.contains(&entry.label) {
                return Err(Error::UnknownLabel {
                    task: task.task_id.clone(),
                    label: entry.label.clone(),
                });
            }
        }
        if self.temperature < 0.0 {
            return Err(Error::validation(format!(
                "config `{}`: temperature must be >= 0",
                self.config_id
            )));
        }
        if self.max_tokens < 1 {
            return Err(Error::validation(format!(
                "config `{}`: max_tokens must be >= 1",
                self.config_id
            )));
        }
        Ok(())
    }
}

/// One (datapoint, config) annotation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub task_id: String,
    pub datapoint_id: String,
    pub config_id: String,
    /// Model output verbatim; for failed requests, the error string.
    pub raw_output: String,
    pub mapped_label: Option<String>,
    pub is_na: bool,
    #[serde(default)]
    pub confidence: Option<f64>,
    /// Seconds since the Unix epoch; 0 for synthetic records.
    pub timestamp: u64,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.is_na != self.mapped_label.is_none() {
            return Err(Error::validation(format!(
                "record ({}, {}, {}): is_na must hold exactly when mapped_label is absent",
                self.task_id, self.datapoint_id, self.config_id
            )));
        }
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) || c.is_nan() {
                return Err(Error::validation(format!(
                    "record ({}, {}, {}): confidence {} outside [0,1]",
                    self.task_id, self.datapoint_id, self.config_id, c
                )));
            }
        }
        Ok(())
    }

    /// Deduplication key: latest record per key wins on load.
    pub fn key(&self) -> (String, String, String) {
        (
            self.task_id.clone(),
            self.datapoint_id.clone(),
            self.config_id.clone(),
        )
    }
}

/// Append-only JSON-lines store of annotation records.
///
/// Single writer, multiple readers: appends are serialized through an owned
/// file handle, loads reopen the file read-only, and records are immutable
/// once written. Duplicate `(task, datapoint, config)` keys resolve to the
/// latest record on load.
#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    writer: Mutex<File>,
}

impl AnnotationStore {
    /// Opens (creating if necessary) the store at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        Ok(AnnotationStore {
            path,
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates and appends records, one JSON document per line.
    pub fn append(&self, records: &[AnnotationRecord]) -> Result<()> {
        for r in records {
            r.validate()?;
        }
        let mut file = self.writer.lock().expect("store writer poisoned");
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r)?);
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Loads all records, deduplicated last-write-wins, ordered by key.
    pub fn load(&self) -> Result<Vec<AnnotationRecord>> {
        self.load_filtered(None, None)
    }

    /// Loads records matching the optional task/config filters.
    pub fn load_filtered(
        &self,
        task_id: Option<&str>,
        config_id: Option<&str>,
    ) -> Result<Vec<AnnotationRecord>> {
        load_records(&self.path, task_id, config_id)
    }
}

/// Reads a JSON-lines record file with optional filters, deduplicating
/// last-write-wins by `(task, datapoint, config)`. Output is ordered by key
/// so loads are deterministic regardless of write interleaving.
pub fn load_records(
    path: impl AsRef<Path>,
    task_id: Option<&str>,
    config_id: Option<&str>,
) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut by_key: BTreeMap<(String, String, String), AnnotationRecord> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        record.validate().map_err(|e| Error::MalformedLine {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if let Some(t) = task_id {
            if record.task_id != t {
                continue;
            }
        }
        if let Some(c) = config_id {
            if record.config_id != c {
                continue;
            }
        }
        by_key.insert(record.key(), record);
    }
    Ok(by_key.into_values().collect())
}
