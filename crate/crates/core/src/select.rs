//! Target filtering and the extreme / mid-scale target sets.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CorpusTable;
use crate::model::{RatingScale, Target, TargetRatings, WordClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    /// Minimum share of the predominant part of speech (inclusive).
    pub pos_dominance_min: f64,
    /// Minimum corpus frequency (inclusive).
    pub frequency_min: u64,
    /// Require the second corpus tag to agree with the predominant one.
    pub require_pos_agreement: bool,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        FilterThresholds {
            pos_dominance_min: 0.95,
            frequency_min: 10_000,
            require_pos_agreement: true,
        }
    }
}

impl FilterThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.pos_dominance_min > 0.0 && self.pos_dominance_min <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pos_dominance_min must lie in (0,1], got {}",
                self.pos_dominance_min
            )));
        }
        Ok(())
    }
}

/// Kept targets plus a tally of why the others were dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<TargetRatings>,
    pub dropped_no_corpus_entry: usize,
    pub dropped_pos_dominance: usize,
    pub dropped_pos_disagreement: usize,
    pub dropped_frequency: usize,
    pub dropped_multiword: usize,
}

/// Keeps a rated (word, pos) iff the corpus has an entry for it whose
/// predominant tag covers at least `pos_dominance_min` of occurrences, whose
/// second tag agrees (when required) and whose frequency reaches
/// `frequency_min`. Checks run in that order; the first failing one is
/// tallied.
pub fn filter_targets(
    ratings: &[TargetRatings],
    corpus: &CorpusTable,
    thresholds: &FilterThresholds,
) -> Result<FilterOutcome> {
    thresholds.validate()?;
    let mut out = FilterOutcome::default();
    for r in ratings {
        if r.word.chars().any(char::is_whitespace) {
            out.dropped_multiword += 1;
            continue;
        }
        let Some(entry) = corpus.get(&(r.word.clone(), r.word_class)) else {
            out.dropped_no_corpus_entry += 1;
            continue;
        };
        if entry.pos_dominance < thresholds.pos_dominance_min {
            out.dropped_pos_dominance += 1;
        } else if thresholds.require_pos_agreement
            && entry.alt_pos != Some(entry.predominant_pos)
        {
            out.dropped_pos_disagreement += 1;
        } else if entry.frequency < thresholds.frequency_min {
            out.dropped_frequency += 1;
        } else {
            out.kept.push(r.clone());
        }
    }
    if out.kept.is_empty() {
        log::warn!("target filtering kept no targets");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MidScaleDefinition {
    /// Scale midpoint.
    Mean,
    /// Median of the mean ratings.
    Median,
    /// Median of the mean ratings, restricted to high-disagreement targets.
    MedianSd,
}

impl MidScaleDefinition {
    pub fn name(self) -> &'static str {
        match self {
            MidScaleDefinition::Mean => "mean",
            MidScaleDefinition::Median => "median",
            MidScaleDefinition::MedianSd => "median-sd",
        }
    }
}

impl FromStr for MidScaleDefinition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mean" => Ok(MidScaleDefinition::Mean),
            "median" => Ok(MidScaleDefinition::Median),
            "median-sd" | "mediansd" => Ok(MidScaleDefinition::MedianSd),
            other => Err(Error::InvalidArgument(format!(
                "unknown mid-scale definition `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidScaleSpec {
    pub definition: MidScaleDefinition,
    /// Strict lower bound on the SD, used by `MedianSd` only.
    pub sd_min: f64,
    /// Total number of mid-scale targets; half on each side of the mid score.
    pub set_size: usize,
}

impl MidScaleSpec {
    /// Set sizes of 500 nouns and 200 verbs or adjectives.
    pub fn for_class(word_class: WordClass, definition: MidScaleDefinition) -> Self {
        MidScaleSpec {
            definition,
            sd_min: 1.4,
            set_size: match word_class {
                WordClass::Noun => 500,
                WordClass::Verb | WordClass::Adjective => 200,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.set_size == 0 || self.set_size % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "set_size must be a positive even number, got {}",
                self.set_size
            )));
        }
        if !(self.sd_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sd_min must be positive, got {}",
                self.sd_min
            )));
        }
        Ok(())
    }
}

/// Disjoint extreme and mid-scale sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSets {
    pub abstract_set: Vec<Target>,
    pub concrete_set: Vec<Target>,
    pub mid_set: Vec<Target>,
    pub mid_score: f64,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// The score mid-scale targets are centred on.
pub fn mid_score(targets: &[Target], definition: MidScaleDefinition, scale: RatingScale) -> Result<f64> {
    match definition {
        MidScaleDefinition::Mean => Ok(scale.midpoint()),
        MidScaleDefinition::Median | MidScaleDefinition::MedianSd => {
            let mut means: Vec<f64> = targets.iter().map(|t| t.summary.mean).collect();
            median(&mut means)
                .ok_or_else(|| Error::InsufficientData("no targets to take a median over".into()))
        }
    }
}

/// Tie-break shared by all selections: larger n_valid first, then word,
/// then word class.
fn tie_break(a: &Target, b: &Target) -> Ordering {
    b.summary
        .n_valid
        .cmp(&a.summary.n_valid)
        .then_with(|| a.word().cmp(b.word()))
        .then_with(|| a.word_class().cmp(&b.word_class()))
}

fn by_distance(mid: f64) -> impl Fn(&&Target, &&Target) -> Ordering {
    move |a, b| {
        (a.summary.mean - mid)
            .abs()
            .total_cmp(&(b.summary.mean - mid).abs())
            .then_with(|| tie_break(a, b))
    }
}

/// Picks `set_size / 2` targets with mean <= `mid` and `set_size / 2` with
/// mean > `mid`, closest to `mid` on each side. The result lists the lower
/// half first, each half in order of increasing distance.
pub fn select_midscale(targets: &[Target], spec: &MidScaleSpec, mid: f64) -> Result<Vec<Target>> {
    spec.validate()?;
    let half = spec.set_size / 2;
    let eligible: Vec<&Target> = targets
        .iter()
        .filter(|t| spec.definition != MidScaleDefinition::MedianSd || t.summary.sd > spec.sd_min)
        .collect();
    if spec.definition == MidScaleDefinition::MedianSd && eligible.len() < spec.set_size {
        return Err(Error::InsufficientData(format!(
            "insufficient high-disagreement targets: {} with sd > {}, need {}",
            eligible.len(),
            spec.sd_min,
            spec.set_size
        )));
    }
    let (mut lower, mut upper): (Vec<&Target>, Vec<&Target>) =
        eligible.into_iter().partition(|t| t.summary.mean <= mid);
    for (side, name) in [(&lower, "<="), (&upper, ">")] {
        if side.len() < half {
            return Err(Error::InsufficientData(format!(
                "mid-scale selection needs {half} targets with mean {name} {mid}, found {} (short by {})",
                side.len(),
                half - side.len()
            )));
        }
    }
    lower.sort_by(by_distance(mid));
    upper.sort_by(by_distance(mid));
    Ok(lower[..half]
        .iter()
        .chain(&upper[..half])
        .map(|t| (*t).clone())
        .collect())
}

/// The `n` lowest-mean (abstract) and `n` highest-mean (concrete) targets.
pub fn select_extremes(targets: &[Target], n: usize) -> Result<(Vec<Target>, Vec<Target>)> {
    if 2 * n > targets.len() {
        return Err(Error::InsufficientData(format!(
            "need {} targets for two extreme sets of {n}, found {}",
            2 * n,
            targets.len()
        )));
    }
    let mut asc: Vec<&Target> = targets.iter().collect();
    asc.sort_by(|a, b| a.summary.mean.total_cmp(&b.summary.mean).then_with(|| tie_break(a, b)));
    let mut desc: Vec<&Target> = targets.iter().collect();
    desc.sort_by(|a, b| b.summary.mean.total_cmp(&a.summary.mean).then_with(|| tie_break(a, b)));
    let abstract_set: Vec<Target> = asc[..n].iter().map(|t| (*t).clone()).collect();
    let taken: BTreeSet<(&str, WordClass)> = asc[..n].iter().map(|t| t.key()).collect();
    let concrete_set: Vec<Target> = desc
        .iter()
        .filter(|t| !taken.contains(&t.key()))
        .take(n)
        .map(|t| (*t).clone())
        .collect();
    debug_assert_eq!(concrete_set.len(), n);
    Ok((abstract_set, concrete_set))
}

/// Extreme sets of `spec.set_size` each, then the mid-scale set drawn from
/// the remaining targets. The mid score is computed over all targets.
pub fn build_target_sets(targets: &[Target], spec: &MidScaleSpec, scale: RatingScale) -> Result<TargetSets> {
    spec.validate()?;
    let mid = mid_score(targets, spec.definition, scale)?;
    let (abstract_set, concrete_set) = select_extremes(targets, spec.set_size)?;
    let taken: BTreeSet<(&str, WordClass)> = abstract_set
        .iter()
        .chain(&concrete_set)
        .map(|t| t.key())
        .collect();
    let rest: Vec<Target> = targets
        .iter()
        .filter(|t| !taken.contains(&t.key()))
        .cloned()
        .collect();
    let mid_set = select_midscale(&rest, spec, mid)?;
    Ok(TargetSets {
        abstract_set,
        concrete_set,
        mid_set,
        mid_score: mid,
    })
}

/// Audit table: `word pos mean sd set_label`.
pub fn write_target_sets(sets: &TargetSets) -> String {
    let mut out = String::from("word\tpos\tmean\tsd\tset_label\n");
    for (label, set) in [
        ("abstract", &sets.abstract_set),
        ("mid", &sets.mid_set),
        ("concrete", &sets.concrete_set),
    ] {
        for t in set {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{label}",
                t.word(),
                t.word_class(),
                t.summary.mean,
                t.summary.sd
            )
            .unwrap();
        }
    }
    out
}
