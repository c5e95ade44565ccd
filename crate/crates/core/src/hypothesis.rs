//! Binary groupings ("hypotheses") that split a task into two subsets whose
//! positive-class proportions are compared downstream.
//!
//! Four families are generated: keyword presence, text length at the median,
//! seeded random splits, and metadata value vs. rest. Generation is a pure
//! function of (task, parameters, seeds) and every emitted hypothesis has two
//! non-empty groups.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnnotationTask;
use crate::seed;
use crate::stopwords;

/// Where a grouping came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Derived from metadata shipped with the dataset.
    OriginalMetadata,
    /// Generated from the text itself (keywords, length, random splits).
    Generated,
}

/// The rule that produced a grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupingRule {
    Keyword { word: String },
    LengthMedian,
    Random { ratio: f64, seed: u64 },
    Metadata { field: String, value: String },
}

/// A binary split of a task's included datapoints.
///
/// `group1_ids`/`group0_ids` partition exactly the datapoints that carry a
/// ground-truth label; serialization stores the assignment as these two id
/// lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub hypothesis_id: String,
    pub task_id: String,
    /// The positive class after binarization of the dependent variable.
    pub target_label: String,
    pub rule: GroupingRule,
    pub provenance: Provenance,
    pub group1_ids: Vec<String>,
    pub group0_ids: Vec<String>,
}

impl Hypothesis {
    /// Map view of the assignment: datapoint id -> group indicator.
    pub fn x_assignment(&self) -> BTreeMap<&str, u8> {
        let mut out = BTreeMap::new();
        for id in &self.group0_ids {
            out.insert(id.as_str(), 0u8);
        }
        for id in &self.group1_ids {
            out.insert(id.as_str(), 1u8);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.group0_ids.is_empty() || self.group1_ids.is_empty() {
            return Err(Error::validation(format!(
                "hypothesis `{}`: both groups must be non-empty",
                self.hypothesis_id
            )));
        }
        let g0: BTreeSet<&String> = self.group0_ids.iter().collect();
        let g1: BTreeSet<&String> = self.group1_ids.iter().collect();
        if g0.intersection(&g1).next().is_some() {
            return Err(Error::validation(format!(
                "hypothesis `{}`: groups overlap",
                self.hypothesis_id
            )));
        }
        Ok(())
    }
}

/// Serializes hypotheses to a JSON document keyed by hypothesis id.
pub fn hypotheses_to_json(hypotheses: &[Hypothesis]) -> Result<String> {
    let map: BTreeMap<&str, &Hypothesis> = hypotheses
        .iter()
        .map(|h| (h.hypothesis_id.as_str(), h))
        .collect();
    Ok(serde_json::to_string_pretty(&map)?)
}

/// Loads hypotheses from the JSON document format, ordered by id.
pub fn hypotheses_from_json(json: &str) -> Result<Vec<Hypothesis>> {
    let map: BTreeMap<String, Hypothesis> = serde_json::from_str(json)?;
    let hypotheses: Vec<Hypothesis> = map.into_values().collect();
    for h in &hypotheses {
        h.validate()?;
    }
    Ok(hypotheses)
}

/// Binarizes the task's ground-truth labels against `target_label`:
/// 1 iff equal, 0 otherwise. Datapoints without ground truth are absent from
/// the map (NA stays NA).
pub fn binarize(task: &AnnotationTask, target_label: &str) -> Result<BTreeMap<String, u8>> {
    if !task.label_set.iter().any(|l| l == target_label) {
        return Err(Error::UnknownLabel {
            task: task.task_id.clone(),
            label: target_label.to_string(),
        });
    }
    Ok(task
        .included()
        .map(|dp| {
            let y = u8::from(dp.gt_label.as_deref() == Some(target_label));
            (dp.datapoint_id.clone(), y)
        })
        .collect())
}

/// Lowercases and splits on non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// The default stopword list shipped with the tool.
pub fn default_stopwords() -> BTreeSet<&'static str> {
    stopwords::ENGLISH.iter().copied().collect()
}

fn keyword_hypothesis(
    task: &AnnotationTask,
    id: String,
    word: &str,
    target_label: &str,
    token_sets: &[(String, BTreeSet<String>)],
) -> Option<Hypothesis> {
    let mut group1 = Vec::new();
    let mut group0 = Vec::new();
    for (dp_id, tokens) in token_sets {
        if tokens.contains(word) {
            group1.push(dp_id.clone());
        } else {
            group0.push(dp_id.clone());
        }
    }
    if group0.is_empty() || group1.is_empty() {
        return None; // degenerate side -> dropped
    }
    Some(Hypothesis {
        hypothesis_id: id,
        task_id: task.task_id.clone(),
        target_label: target_label.to_string(),
        rule: GroupingRule::Keyword {
            word: word.to_string(),
        },
        provenance: Provenance::Generated,
        group1_ids: group1,
        group0_ids: group0,
    })
}

/// Absolute difference in positive-class proportion between the contains /
/// does-not-contain groups for `word`. `None` when either side is empty.
fn keyword_abs_delta_p(
    word: &str,
    token_sets: &[(String, BTreeSet<String>)],
    positives: &BTreeSet<&str>,
) -> Option<f64> {
    let (mut n1, mut p1, mut n0, mut p0) = (0u64, 0u64, 0u64, 0u64);
    for (dp_id, tokens) in token_sets {
        let pos = u64::from(positives.contains(dp_id.as_str()));
        if tokens.contains(word) {
            n1 += 1;
            p1 += pos;
        } else {
            n0 += 1;
            p0 += pos;
        }
    }
    if n1 == 0 || n0 == 0 {
        return None;
    }
    Some((p1 as f64 / n1 as f64 - p0 as f64 / n0 as f64).abs())
}

/// Keyword groupings, three sub-rules:
///  (i)  the `top_k` most frequent non-stopwords in the corpus,
///  (ii) up to `top_k` most frequent non-stopwords per ground-truth class
///       (capped at the 15 highest-support classes),
///  (iii) the single word maximizing the absolute positive-class proportion
///        difference between contains / does-not-contain groups.
///
/// Groupings with an empty side are dropped; duplicate (word, target) pairs
/// collapse to the first rule that produced them.
pub fn gen_keyword_groupings(
    task: &AnnotationTask,
    top_k: usize,
    stopword_list: &BTreeSet<&str>,
) -> Vec<Hypothesis> {
    let included: Vec<_> = task.included().collect();
    if included.len() < 2 {
        return Vec::new();
    }
    let default_target = task.label_set[0].clone();

    let token_sets: Vec<(String, BTreeSet<String>)> = included
        .iter()
        .map(|dp| {
            (
                dp.datapoint_id.clone(),
                tokenize(&dp.text).into_iter().collect(),
            )
        })
        .collect();

    // Corpus and per-class token frequencies (raw occurrence counts).
    let mut corpus_freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut class_freq: BTreeMap<&str, BTreeMap<String, u64>> = BTreeMap::new();
    let mut class_support: BTreeMap<&str, u64> = BTreeMap::new();
    for dp in &included {
        let class = dp.gt_label.as_deref().unwrap();
        *class_support.entry(class).or_insert(0) += 1;
        let per_class = class_freq.entry(class).or_default();
        for token in tokenize(&dp.text) {
            if stopword_list.contains(token.as_str()) {
                continue;
            }
            *corpus_freq.entry(token.clone()).or_insert(0) += 1;
            *per_class.entry(token).or_insert(0) += 1;
        }
    }

    let top_of = |freq: &BTreeMap<String, u64>, k: usize| -> Vec<String> {
        let mut items: Vec<(&String, &u64)> = freq.iter().collect();
        // Descending count, lexicographic tie-break for determinism.
        items.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        items.into_iter().take(k).map(|(w, _)| w.clone()).collect()
    };

    let mut out = Vec::new();
    let mut emitted: BTreeSet<(String, String)> = BTreeSet::new();
    let mut push = |hyp: Option<Hypothesis>, out: &mut Vec<Hypothesis>| {
        if let Some(h) = hyp {
            let key = (
                match &h.rule {
                    GroupingRule::Keyword { word } => word.clone(),
                    _ => unreachable!(),
                },
                h.target_label.clone(),
            );
            if emitted.insert(key) {
                out.push(h);
            }
        }
    };

    // (i) corpus-frequent words.
    for word in top_of(&corpus_freq, top_k) {
        push(
            keyword_hypothesis(
                task,
                format!("kw_top:{word}"),
                &word,
                &default_target,
                &token_sets,
            ),
            &mut out,
        );
    }

    // (ii) per-class frequent words; at most the 15 highest-support classes.
    let mut classes: Vec<(&str, u64)> = class_support.iter().map(|(&c, &n)| (c, n)).collect();
    classes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    for (class, _) in classes.into_iter().take(15) {
        if let Some(freq) = class_freq.get(class) {
            for word in top_of(freq, top_k) {
                push(
                    keyword_hypothesis(
                        task,
                        format!("kw_class:{class}:{word}"),
                        &word,
                        class,
                        &token_sets,
                    ),
                    &mut out,
                );
            }
        }
    }

    // (iii) most discriminative word by |delta p| of the positive class.
    let positives: BTreeSet<&str> = included
        .iter()
        .filter(|dp| dp.gt_label.as_deref() == Some(default_target.as_str()))
        .map(|dp| dp.datapoint_id.as_str())
        .collect();
    let mut best: Option<(f64, &String)> = None;
    for word in corpus_freq.keys() {
        if let Some(dp_abs) = keyword_abs_delta_p(word, &token_sets, &positives) {
            let better = match best {
                None => true,
                // Strict improvement keeps the lexicographically first word
                // among ties (BTreeMap iteration order).
                Some((cur, _)) => dp_abs > cur,
            };
            if better {
                best = Some((dp_abs, word));
            }
        }
    }
    if let Some((_, word)) = best {
        let word = word.clone();
        push(
            keyword_hypothesis(
                task,
                format!("kw_disc:{word}"),
                &word,
                &default_target,
                &token_sets,
            ),
            &mut out,
        );
    }
    out
}

/// Splits at the median character count: group 1 is strictly longer than the
/// median, ties go to group 0. Returns `None` when every text has the same
/// length (the grouping is dropped).
pub fn gen_length_grouping(task: &AnnotationTask) -> Option<Hypothesis> {
    let included: Vec<_> = task.included().collect();
    if included.len() < 2 {
        return None;
    }
    let mut lengths: Vec<usize> = included.iter().map(|dp| dp.text.chars().count()).collect();
    let mut sorted = lengths.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };

    let mut group1 = Vec::new();
    let mut group0 = Vec::new();
    for (dp, len) in included.iter().zip(lengths.drain(..)) {
        if (len as f64) > median {
            group1.push(dp.datapoint_id.clone());
        } else {
            group0.push(dp.datapoint_id.clone());
        }
    }
    if group0.is_empty() || group1.is_empty() {
        return None;
    }
    Some(Hypothesis {
        hypothesis_id: "length:median".into(),
        task_id: task.task_id.clone(),
        target_label: task.label_set[0].clone(),
        rule: GroupingRule::LengthMedian,
        provenance: Provenance::Generated,
        group1_ids: group1,
        group0_ids: group0,
    })
}

/// Seeded random splits; group 1 holds `round(ratio * n)` datapoints.
pub fn gen_random_groupings(task: &AnnotationTask, specs: &[(f64, u64)]) -> Vec<Hypothesis> {
    let ids: Vec<String> = task
        .included()
        .map(|dp| dp.datapoint_id.clone())
        .collect();
    let n = ids.len();
    let mut out = Vec::new();
    for &(ratio, spec_seed) in specs {
        if !(0.0..=1.0).contains(&ratio) {
            continue;
        }
        let k = (ratio * n as f64).round() as usize;
        if k == 0 || k >= n {
            continue;
        }
        let mut shuffled = ids.clone();
        let mut rng = seed::derive_rng(spec_seed, "hypothesis/random", 0);
        shuffled.shuffle(&mut rng);
        let group1: BTreeSet<&String> = shuffled.iter().take(k).collect();
        out.push(Hypothesis {
            hypothesis_id: format!("rand:{ratio}:{spec_seed}"),
            task_id: task.task_id.clone(),
            target_label: task.label_set[0].clone(),
            rule: GroupingRule::Random {
                ratio,
                seed: spec_seed,
            },
            provenance: Provenance::Generated,
            group1_ids: ids
                .iter()
                .filter(|id| group1.contains(id))
                .cloned()
                .collect(),
            group0_ids: ids
                .iter()
                .filter(|id| !group1.contains(id))
                .cloned()
                .collect(),
        });
    }
    out
}

/// One hypothesis per (field, value) with the value covering at least 5% of
/// included datapoints: group 1 is `field == value`, group 0 the rest
/// (including datapoints missing the field).
pub fn gen_metadata_groupings(task: &AnnotationTask, fields: &[String]) -> Vec<Hypothesis> {
    const MIN_COVERAGE: f64 = 0.05;
    let included: Vec<_> = task.included().collect();
    let n = included.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for field in fields {
        let mut value_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for dp in &included {
            if let Some(v) = dp.metadata.get(field) {
                *value_counts.entry(v.as_str()).or_insert(0) += 1;
            }
        }
        for (value, count) in value_counts {
            if (count as f64) / (n as f64) < MIN_COVERAGE {
                continue;
            }
            let mut group1 = Vec::new();
            let mut group0 = Vec::new();
            for dp in &included {
                if dp.metadata.get(field).map(String::as_str) == Some(value) {
                    group1.push(dp.datapoint_id.clone());
                } else {
                    group0.push(dp.datapoint_id.clone());
                }
            }
            if group0.is_empty() || group1.is_empty() {
                continue;
            }
            out.push(Hypothesis {
                hypothesis_id: format!("meta:{field}:{value}"),
                task_id: task.task_id.clone(),
                target_label: task.label_set[0].clone(),
                rule: GroupingRule::Metadata {
                    field: field.clone(),
                    value: value.to_string(),
                },
                provenance: Provenance::OriginalMetadata,
                group1_ids: group1,
                group0_ids: group0,
            });
        }
    }
    out
}
