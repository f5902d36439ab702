//! Rank correlation with significance, association diversity and the
//! mean/SD ("croissant") tables.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::{feature_index, CharacteristicProfile, FEATURE_NAMES};
use crate::ingest::{AssociationRecord, Modality, SenseProfile};
use crate::model::{Target, WordClass};
use crate::rng::{rng_for, stream};

/// Default significance level: 0.001 for nouns, 0.05 otherwise.
pub fn default_alpha(word_class: WordClass) -> f64 {
    match word_class {
        WordClass::Noun => 0.001,
        WordClass::Verb | WordClass::Adjective => 0.05,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    TApproximation,
    Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
    pub method: PValueMethod,
}

/// Average (fractional) ranks, 1-based.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share the rank ((i+1) + j) / 2.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "spearman needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in paired samples".into()));
    }
    Ok(())
}

fn rank_rho(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_inputs(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let rho = pearson(&rx, &ry)
        .ok_or_else(|| Error::Degenerate("zero rank variance; rho undefined".into()))?;
    Ok((rho, rx, ry))
}

/// Two-sided p-value of the t-approximation with n - 2 degrees of freedom.
pub fn t_approximation_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Spearman's rho over complete pairs with a t-approximation p-value.
pub fn spearman(x: &[f64], y: &[f64], alpha: f64) -> Result<CorrelationReport> {
    let (rho, _, _) = rank_rho(x, y)?;
    let p_value = t_approximation_p(rho, x.len());
    Ok(CorrelationReport {
        rho,
        p_value,
        n: x.len(),
        significant: p_value < alpha,
        method: PValueMethod::TApproximation,
    })
}

/// Spearman's rho with a seeded permutation p-value: the share of
/// `resamples` shuffles of y reaching |rho| at least as large as observed,
/// counted as `(hits + 1) / (resamples + 1)`.
pub fn spearman_permutation(
    x: &[f64],
    y: &[f64],
    alpha: f64,
    resamples: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    if resamples == 0 {
        return Err(Error::InvalidArgument("resamples must be >= 1".into()));
    }
    let (rho, rx, ry) = rank_rho(x, y)?;
    let mut rng = rng_for(seed, stream::SPEARMAN, x.len() as u64);
    let mut shuffled = ry.clone();
    let mut hits = 0usize;
    for _ in 0..resamples {
        shuffled.shuffle(&mut rng);
        let r = pearson(&rx, &shuffled).unwrap_or(0.0);
        if r.abs() >= rho.abs() - 1e-12 {
            hits += 1;
        }
    }
    let p_value = (hits + 1) as f64 / (resamples + 1) as f64;
    Ok(CorrelationReport {
        rho,
        p_value,
        n: x.len(),
        significant: p_value < alpha,
        method: PValueMethod::Permutation,
    })
}

/// Below this many complete pairs the permutation p-value is used.
pub const PERMUTATION_BELOW_N: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOptions {
    pub alpha: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl CorrelationOptions {
    /// Class default significance level with 9,999 resamples.
    pub fn for_class(word_class: WordClass, seed: u64) -> Self {
        CorrelationOptions {
            alpha: default_alpha(word_class),
            resamples: 9_999,
            seed,
        }
    }
}

/// Drops pairs with either side missing, then correlates. Small samples use
/// the permutation p-value.
pub fn spearman_with_missing(
    x: &[Option<f64>],
    y: &[Option<f64>],
    options: &CorrelationOptions,
) -> Result<CorrelationReport> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("paired samples differ in length".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    if xs.len() >= 3 && xs.len() < PERMUTATION_BELOW_N {
        spearman_permutation(&xs, &ys, options.alpha, options.resamples, options.seed)
    } else {
        spearman(&xs, &ys, options.alpha)
    }
}

/// One row per characteristic; `Err` rows are reported as undefined.
pub fn correlation_table(
    targets: &[Target],
    profiles: &[CharacteristicProfile],
    options: &CorrelationOptions,
) -> Vec<(&'static str, Result<CorrelationReport>)> {
    let means: Vec<Option<f64>> = targets.iter().map(|t| Some(t.summary.mean)).collect();
    FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<Option<f64>> = profiles.iter().map(|p| p.get(j)).collect();
            (*name, spearman_with_missing(&means, &col, options))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseSet {
    R1,
    R12,
    R123,
}

impl ResponseSet {
    pub const ALL: [ResponseSet; 3] = [ResponseSet::R1, ResponseSet::R12, ResponseSet::R123];

    fn depth(self) -> usize {
        match self {
            ResponseSet::R1 => 1,
            ResponseSet::R12 => 2,
            ResponseSet::R123 => 3,
        }
    }
}

/// Distinct response types over response tokens, within the first one,
/// two or three responses of every participant. Responses are case-folded.
/// `None` when the selection holds no tokens.
pub fn association_diversity<'a>(
    records: impl IntoIterator<Item = &'a AssociationRecord>,
    selector: ResponseSet,
) -> Option<f64> {
    let mut types = BTreeSet::new();
    let mut tokens = 0usize;
    for r in records {
        for resp in r.responses().iter().take(selector.depth()).flatten() {
            types.insert(resp.trim().to_lowercase());
            tokens += 1;
        }
    }
    (tokens > 0).then(|| types.len() as f64 / tokens as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CroissantRow {
    pub word: String,
    pub pos: WordClass,
    pub mean: f64,
    pub sd: f64,
    pub overlay: Option<f64>,
    /// The requested overlay characteristic is missing for this target.
    pub missing: bool,
}

/// Mean/SD rows with an optional overlay characteristic.
pub fn croissant_table(
    targets: &[Target],
    profiles: &[CharacteristicProfile],
    overlay: Option<&str>,
) -> Result<Vec<CroissantRow>> {
    if targets.len() != profiles.len() {
        return Err(Error::InvalidArgument("one profile per target required".into()));
    }
    let column = match overlay {
        None => None,
        Some(name) => Some(
            feature_index(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown overlay `{name}`")))?,
        ),
    };
    Ok(targets
        .iter()
        .zip(profiles)
        .map(|(t, p)| {
            let value = column.and_then(|j| p.get(j));
            CroissantRow {
                word: t.word().to_string(),
                pos: t.word_class(),
                mean: t.summary.mean,
                sd: t.summary.sd,
                overlay: value,
                missing: column.is_some() && value.is_none(),
            }
        })
        .collect())
}

/// Dominant-modality tallies per word class, in [`Modality::ALL`] order.
pub fn dominant_modality_counts<'a>(
    profiles: impl IntoIterator<Item = (WordClass, &'a SenseProfile)>,
) -> BTreeMap<WordClass, [usize; 5]> {
    let mut out: BTreeMap<WordClass, [usize; 5]> = BTreeMap::new();
    for (class, p) in profiles {
        out.entry(class).or_default()[p.dominant() as usize] += 1;
    }
    out
}

pub fn modality_header() -> [&'static str; 5] {
    Modality::ALL.map(Modality::name)
}
