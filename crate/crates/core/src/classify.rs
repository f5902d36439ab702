//! Classification conditions over the target sets and stratified k-fold
//! cross-validation of random forests.

use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Resources, FEATURE_NAMES, N_FEATURES};
use crate::forest::{accuracy, Classifier, ForestParams, RandomForest};
use crate::matrix::Matrix;
use crate::model::Target;
use crate::rng::{derive_seed, rng_for, stream};
use crate::select::TargetSets;

/// Global label order shared by every condition.
pub const ABSTRACT: usize = 0;
pub const MID: usize = 1;
pub const CONCRETE: usize = 2;
pub const N_LABELS: usize = 3;
pub const LABEL_NAMES: [&str; N_LABELS] = ["abstract", "mid", "concrete"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    BinaryExtremes,
    BinaryMidAbstract,
    BinaryMidConcrete,
    TernaryMidExtremes,
}

impl Condition {
    /// In the row order of the published results table.
    pub const ALL: [Condition; 4] = [
        Condition::BinaryExtremes,
        Condition::BinaryMidAbstract,
        Condition::BinaryMidConcrete,
        Condition::TernaryMidExtremes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::BinaryExtremes => "binary_extremes",
            Condition::BinaryMidAbstract => "binary_mid/abstract",
            Condition::BinaryMidConcrete => "binary_mid/concrete",
            Condition::TernaryMidExtremes => "ternary_mid/extremes",
        }
    }

    pub fn labels(self) -> &'static [usize] {
        match self {
            Condition::BinaryExtremes => &[ABSTRACT, CONCRETE],
            Condition::BinaryMidAbstract => &[ABSTRACT, MID],
            Condition::BinaryMidConcrete => &[MID, CONCRETE],
            Condition::TernaryMidExtremes => &[ABSTRACT, MID, CONCRETE],
        }
    }

    /// Chance accuracy: one over the number of classes.
    pub fn baseline(self) -> f64 {
        1.0 / self.labels().len() as f64
    }

    /// Class whose probability Shapley values explain: mid-scale whenever
    /// present, concrete otherwise.
    pub fn class_of_interest(self) -> usize {
        if self.labels().contains(&MID) {
            MID
        } else {
            CONCRETE
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', '/'], "_");
        Condition::ALL
            .into_iter()
            .find(|c| c.name().replace('/', "_") == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown condition `{s}`")))
    }
}

/// Feature rows with labels in the global label order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub words: Vec<String>,
    pub feature_names: Vec<String>,
}

impl LabeledData {
    pub fn new(x: Matrix, y: Vec<usize>, feature_names: Vec<String>) -> Result<Self> {
        if x.n_rows() != y.len() || x.n_cols() != feature_names.len() {
            return Err(Error::InvalidArgument("inconsistent labeled data shape".into()));
        }
        let words = (0..y.len()).map(|i| format!("row{i}")).collect();
        Ok(LabeledData {
            x,
            y,
            words,
            feature_names,
        })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<LabeledData> {
        Ok(LabeledData {
            x: self.x.select_columns(cols)?,
            y: self.y.clone(),
            words: self.words.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
        })
    }
}

/// Assembles the rows for one condition. Missing characteristics enter as 0.
pub fn build_condition(sets: &TargetSets, condition: Condition, resources: &Resources) -> Result<LabeledData> {
    let mut rows: Vec<[f64; N_FEATURES]> = Vec::new();
    let mut y = Vec::new();
    let mut words = Vec::new();
    for &label in condition.labels() {
        let set: &[Target] = match label {
            ABSTRACT => &sets.abstract_set,
            MID => &sets.mid_set,
            _ => &sets.concrete_set,
        };
        if set.is_empty() {
            return Err(Error::InsufficientData(format!(
                "condition {} needs a non-empty {} set",
                condition.name(),
                LABEL_NAMES[label]
            )));
        }
        for t in set {
            rows.push(resources.profile(t.word(), t.word_class()).values);
            y.push(label);
            words.push(t.word().to_string());
        }
    }
    Ok(LabeledData {
        x: Matrix::from_rows(&rows)?,
        y,
        words,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    })
}

/// Fold index per row. Each class is shuffled with a seeded generator and
/// dealt round-robin, continuing the deal across classes so both per-class
/// and total fold sizes differ by at most one.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if y.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {folds} folds",
            y.len()
        )));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut assignment = vec![0; y.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::InsufficientData(format!(
                "class {c} has {} members, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng_for(seed, stream::CV_SHUFFLE, c as u64));
        for i in members {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub condition: Option<Condition>,
    pub baseline: f64,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Held-out rows per label, and how many of them were predicted right.
    pub class_total: Vec<usize>,
    pub class_correct: Vec<usize>,
    pub seed: u64,
}

/// k-fold cross-validation. Fold membership depends only on `y` and the
/// seed, so runs on different column subsets share folds. Fold `f` trains
/// a forest seeded with `derive_seed(params.seed, FOLD, f)`.
pub fn cross_validate(
    data: &LabeledData,
    condition: Option<Condition>,
    params: &ForestParams,
    folds: usize,
) -> Result<CvReport> {
    let assignment = stratified_folds(&data.y, folds, params.seed)?;
    let n_classes = N_LABELS.max(data.y.iter().max().map_or(0, |m| m + 1));
    let mut per_fold = Vec::with_capacity(folds);
    let mut class_total = vec![0; n_classes];
    let mut class_correct = vec![0; n_classes];
    for f in 0..folds {
        let train: Vec<usize> = (0..data.y.len()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..data.y.len()).filter(|&i| assignment[i] == f).collect();
        let xtr = data.x.select_rows(&train);
        let ytr: Vec<usize> = train.iter().map(|&i| data.y[i]).collect();
        let fold_params = ForestParams {
            seed: derive_seed(params.seed, stream::FOLD, f as u64),
            ..*params
        };
        let model = RandomForest::fit(&xtr, &ytr, n_classes, &fold_params)?;
        let xte = data.x.select_rows(&test);
        let yte: Vec<usize> = test.iter().map(|&i| data.y[i]).collect();
        for (row, &label) in xte.rows().zip(&yte) {
            class_total[label] += 1;
            if model.predict(row) == label {
                class_correct[label] += 1;
            }
        }
        per_fold.push(accuracy(&model, &xte, &yte));
    }
    let mean_accuracy = per_fold.iter().sum::<f64>() / folds as f64;
    let baseline = match condition {
        Some(c) => c.baseline(),
        None => {
            let present = class_total.iter().filter(|&&c| c > 0).count();
            1.0 / present.max(1) as f64
        }
    };
    Ok(CvReport {
        condition,
        baseline,
        per_fold_accuracy: per_fold,
        mean_accuracy,
        class_total,
        class_correct,
        seed: params.seed,
    })
}
