//! Feature attribution: permutation importance and interventional Shapley
//! values.
//!
//! The value of a coalition `S` for sample `x` is the mean, over background
//! rows `b`, of the model's probability for the class of interest on the
//! hybrid row taking features in `S` from `x` and the rest from `b`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{accuracy, Classifier, DecisionTree, Node};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for, stream};

/// Mean accuracy drop when one column is shuffled, per feature. Column `j`,
/// repeat `r` is shuffled with its own derived seed.
pub fn permutation_importance<M: Classifier + ?Sized>(
    model: &M,
    x: &Matrix,
    y: &[usize],
    seed: u64,
    repeats: usize,
) -> Result<Vec<f64>> {
    if repeats < 1 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    if x.n_rows() != y.len() || x.n_rows() == 0 {
        return Err(Error::InvalidArgument("need matching, non-empty X and y".into()));
    }
    let base = accuracy(model, x, y);
    Ok((0..x.n_cols())
        .into_par_iter()
        .map(|j| {
            let col_seed = derive_seed(seed, stream::PERMUTATION, j as u64);
            let mut drop = 0.0;
            for r in 0..repeats {
                let mut col = x.column(j);
                col.shuffle(&mut rng_for(col_seed, stream::PERMUTATION, r as u64));
                let mut xp = x.clone();
                for (i, v) in col.into_iter().enumerate() {
                    xp.set(i, j, v);
                }
                drop += base - accuracy(model, &xp, y);
            }
            drop / repeats as f64
        })
        .collect())
}

/// Largest feature count for exhaustive subset enumeration.
pub const EXACT_MAX_FEATURES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShapleyMode {
    Exact,
    MonteCarlo { permutations: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRow {
    pub phi: Vec<f64>,
    /// Standard errors of the Monte Carlo estimates.
    pub std_err: Option<Vec<f64>>,
    /// Model output for the sample.
    pub prediction: f64,
    /// Mean model output over the background.
    pub expected_value: f64,
}

fn check_inputs<M: Classifier + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    class: usize,
) -> Result<()> {
    let d = model.n_features();
    if x.len() != d || background.n_cols() != d {
        return Err(Error::InvalidArgument(format!(
            "model expects {d} features, sample has {} and background {}",
            x.len(),
            background.n_cols()
        )));
    }
    if background.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty background set".into()));
    }
    if class >= model.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range for {} classes",
            model.n_classes()
        )));
    }
    Ok(())
}

fn hybrid(x: &[f64], b: &[f64], mask: usize, out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = if mask & (1 << i) != 0 { x[i] } else { b[i] };
    }
}

/// Coalition values for all `2^d` subsets by direct model evaluation.
pub fn subset_values_by_evaluation<M: Classifier + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    class: usize,
) -> Result<Vec<f64>> {
    check_inputs(model, x, background, class)?;
    let d = x.len();
    if d > EXACT_MAX_FEATURES {
        return Err(too_many_features(d));
    }
    let nb = background.n_rows() as f64;
    Ok((0..1usize << d)
        .into_par_iter()
        .map(|mask| {
            let mut z = vec![0.0; d];
            let mut sum = 0.0;
            for b in background.rows() {
                hybrid(x, b, mask, &mut z);
                sum += model.predict_proba(&z)[class];
            }
            sum / nb
        })
        .collect())
}

/// Coalition values for all `2^d` subsets of a tree ensemble.
///
/// Walking a tree with `x` and one background row, a split on a feature
/// where both rows go the same way does not depend on the coalition; where
/// they diverge the walk forks into "feature in S" (follow `x`) and "feature
/// not in S" (follow `b`). Each reached leaf thus contributes its value to
/// exactly the coalitions containing a set `A` of features and avoiding a
/// set `N`. Contributions are pooled per `(A, N)` and then spread over the
/// table.
pub fn subset_values_for_trees(
    trees: &[DecisionTree],
    x: &[f64],
    background: &Matrix,
    class: usize,
) -> Result<Vec<f64>> {
    let d = x.len();
    if d > EXACT_MAX_FEATURES {
        return Err(too_many_features(d));
    }
    if trees.is_empty() || background.n_rows() == 0 {
        return Err(Error::InvalidArgument("need trees and background rows".into()));
    }
    let scale = 1.0 / (trees.len() * background.n_rows()) as f64;
    let mut clauses: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut stack: Vec<(usize, u32, u32)> = Vec::new();
    for tree in trees {
        let nodes = tree.nodes();
        for b in background.rows() {
            stack.push((0, 0, 0));
            while let Some((i, with, without)) = stack.pop() {
                match &nodes[i] {
                    Node::Leaf { distribution } => {
                        *clauses.entry((with, without)).or_insert(0.0) += distribution[class] * scale;
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let bit = 1u32 << feature;
                        let xs = if x[*feature] <= *threshold { *left } else { *right };
                        let bs = if b[*feature] <= *threshold { *left } else { *right };
                        if with & bit != 0 || xs == bs {
                            stack.push((xs, with, without));
                        } else if without & bit != 0 {
                            stack.push((bs, with, without));
                        } else {
                            stack.push((bs, with, without | bit));
                            stack.push((xs, with | bit, without));
                        }
                    }
                }
            }
        }
    }
    let full = (1u32 << d) - 1;
    let mut values = vec![0.0; 1 << d];
    for ((with, without), c) in clauses {
        let free = full & !(with | without);
        let mut sub = free;
        loop {
            values[(with | sub) as usize] += c;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    Ok(values)
}

fn too_many_features(d: usize) -> Error {
    Error::InvalidArgument(format!(
        "exact Shapley enumeration supports at most {EXACT_MAX_FEATURES} features, got {d}; use monte_carlo mode"
    ))
}

/// `|S|! (d - |S| - 1)! / d!` for every coalition size.
fn shapley_weights(d: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=d)
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    (0..d).map(|s| fact[s] * fact[d - s - 1] / fact[d]).collect()
}

/// Shapley values from a full coalition-value table.
pub fn shapley_from_table(values: &[f64], d: usize) -> Vec<f64> {
    let w = shapley_weights(d);
    (0..d)
        .map(|j| {
            let bit = 1usize << j;
            let mut phi = 0.0;
            for s in 0..values.len() {
                if s & bit == 0 {
                    phi += w[s.count_ones() as usize] * (values[s | bit] - values[s]);
                }
            }
            phi
        })
        .collect()
}

pub fn shapley_values<M: Classifier + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    class: usize,
    mode: ShapleyMode,
) -> Result<ShapleyRow> {
    check_inputs(model, x, background, class)?;
    let d = x.len();
    match mode {
        ShapleyMode::Exact => {
            if d > EXACT_MAX_FEATURES {
                return Err(too_many_features(d));
            }
            let values = match model.tree_ensemble() {
                Some(trees) => subset_values_for_trees(trees, x, background, class)?,
                None => subset_values_by_evaluation(model, x, background, class)?,
            };
            Ok(ShapleyRow {
                phi: shapley_from_table(&values, d),
                std_err: None,
                prediction: values[(1 << d) - 1],
                expected_value: values[0],
            })
        }
        ShapleyMode::MonteCarlo { permutations, seed } => {
            monte_carlo(model, x, background, class, permutations, seed)
        }
    }
}

/// Averages marginal contributions over random feature orderings. Every
/// ordering's contributions sum to `f(x) - E[f(b)]`.
fn monte_carlo<M: Classifier + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Matrix,
    class: usize,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyRow> {
    if permutations < 2 {
        return Err(Error::InvalidArgument("monte_carlo needs at least 2 permutations".into()));
    }
    let d = x.len();
    let nb = background.n_rows();
    let value = |rows: &[Vec<f64>]| rows.iter().map(|z| model.predict_proba(z)[class]).sum::<f64>() / nb as f64;
    let start: Vec<Vec<f64>> = background.rows().map(<[f64]>::to_vec).collect();
    let empty_value = value(&start);

    let mut rng = rng_for(seed, stream::SHAPLEY, 0);
    let mut order: Vec<usize> = (0..d).collect();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut full_value = empty_value;
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        let mut rows = start.clone();
        let mut prev = empty_value;
        for &j in &order {
            for z in rows.iter_mut() {
                z[j] = x[j];
            }
            let v = value(&rows);
            let m = v - prev;
            sum[j] += m;
            sum_sq[j] += m * m;
            prev = v;
        }
        full_value = prev;
    }
    let m = permutations as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_err = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, sq)| {
            let mean = s / m;
            let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        })
        .collect();
    Ok(ShapleyRow {
        phi,
        std_err: Some(std_err),
        prediction: full_value,
        expected_value: empty_value,
    })
}

/// Seeded subsample of `size` rows (all rows if fewer), kept in original
/// row order.
pub fn sample_background(rows: &Matrix, size: usize, seed: u64) -> Matrix {
    let mut idx: Vec<usize> = (0..rows.n_rows()).collect();
    idx.shuffle(&mut rng_for(seed, stream::BACKGROUND, 0));
    idx.truncate(size.min(rows.n_rows()));
    idx.sort_unstable();
    rows.select_rows(&idx)
}

/// Shapley rows for many samples in parallel. Monte Carlo sample `i` uses
/// the seed `derive_seed(seed, SHAPLEY, i)`.
pub fn explain_samples<M: Classifier + ?Sized>(
    model: &M,
    samples: &Matrix,
    background: &Matrix,
    class: usize,
    mode: ShapleyMode,
) -> Result<Vec<ShapleyRow>> {
    (0..samples.n_rows())
        .into_par_iter()
        .map(|i| {
            let mode = match mode {
                ShapleyMode::Exact => ShapleyMode::Exact,
                ShapleyMode::MonteCarlo { permutations, seed } => ShapleyMode::MonteCarlo {
                    permutations,
                    seed: derive_seed(seed, stream::SHAPLEY, i as u64),
                },
            };
            shapley_values(model, samples.row(i), background, class, mode)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolinPoint {
    pub feature: String,
    pub phi: f64,
    pub raw_value: f64,
    pub sample_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub class_of_interest: usize,
    pub background_id: String,
    /// Features by descending mean |phi|; ties keep column order.
    pub ranking: Vec<RankedFeature>,
    pub violin: Vec<ViolinPoint>,
    pub rows: Vec<ShapleyRow>,
}

pub fn attribution_summary(
    rows: Vec<ShapleyRow>,
    samples: &Matrix,
    sample_ids: &[String],
    feature_names: &[String],
    class_of_interest: usize,
    background_id: &str,
) -> Result<AttributionReport> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no attribution rows to summarize".into()));
    }
    let d = feature_names.len();
    if rows.iter().any(|r| r.phi.len() != d)
        || samples.n_rows() != rows.len()
        || samples.n_cols() != d
        || sample_ids.len() != rows.len()
    {
        return Err(Error::InvalidArgument("attribution rows, samples and names disagree".into()));
    }
    let n = rows.len() as f64;
    let global: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r.phi[j].abs()).sum::<f64>() / n)
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| global[b].total_cmp(&global[a]).then(a.cmp(&b)));
    let ranking = order
        .iter()
        .map(|&j| RankedFeature {
            feature: feature_names[j].clone(),
            importance: global[j],
        })
        .collect();
    let mut violin = Vec::with_capacity(rows.len() * d);
    for &j in &order {
        for (i, r) in rows.iter().enumerate() {
            violin.push(ViolinPoint {
                feature: feature_names[j].clone(),
                phi: r.phi[j],
                raw_value: samples.get(i, j),
                sample_id: sample_ids[i].clone(),
            });
        }
    }
    Ok(AttributionReport {
        class_of_interest,
        background_id: background_id.to_string(),
        ranking,
        violin,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{train_tree, ForestParams, RandomForest};
    use rand::{Rng, SeedableRng};

    fn stump(feature: usize, threshold: f64, d: usize) -> DecisionTree {
        DecisionTree::from_nodes(
            d,
            2,
            vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    distribution: vec![1.0, 0.0],
                },
                Node::Leaf {
                    distribution: vec![0.0, 1.0],
                },
            ],
        )
        .unwrap()
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_split_closed_form() {
        let t = stump(0, 0.5, 3);
        let x = [0.9, 0.1, 0.2];
        let bg = Matrix::from_rows(&[vec![0.1, 0.7, 0.7], vec![0.3, 0.2, 0.9]]).unwrap();
        let r = shapley_values(&t, &x, &bg, 1, ShapleyMode::Exact).unwrap();
        assert_eq!(r.phi, vec![1.0, 0.0, 0.0]);
        assert_eq!(r.prediction - r.expected_value, 1.0);
    }

    #[test]
    fn tree_table_matches_direct_evaluation() {
        let x = random_matrix(80, 6, 1);
        let y: Vec<usize> = x.rows().map(|r| usize::from(r[0] + r[1] * r[2] > 0.7)).collect();
        let f = RandomForest::fit(
            &x,
            &y,
            2,
            &ForestParams {
                n_trees: 10,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let bg = x.select_rows(&[0, 5, 9, 13, 21]);
        for i in [1, 2, 40] {
            let fast = subset_values_for_trees(f.trees(), x.row(i), &bg, 1).unwrap();
            let slow = subset_values_by_evaluation(&f, x.row(i), &bg, 1).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_limits() {
        let t = stump(0, 0.5, 16);
        let bg = random_matrix(2, 16, 3);
        let err = shapley_values(&t, bg.row(0), &bg, 1, ShapleyMode::Exact).unwrap_err();
        assert!(err.to_string().contains("monte_carlo"));
        let ok = shapley_values(
            &t,
            bg.row(0),
            &bg,
            1,
            ShapleyMode::MonteCarlo {
                permutations: 10,
                seed: 1,
            },
        );
        assert!(ok.is_ok());
        assert!(shapley_values(&t, bg.row(0), &bg, 2, ShapleyMode::Exact).is_err());
    }

    #[test]
    fn weights_sum_to_one_per_feature() {
        for d in 1..=13 {
            let w = shapley_weights(d);
            let total: f64 = (0..d)
                .map(|s| {
                    let binom = (0..s).fold(1.0, |acc, i| acc * (d - 1 - i) as f64 / (i + 1) as f64);
                    binom * w[s]
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_has_zero_permutation_importance() {
        let mut x = random_matrix(60, 3, 4);
        for i in 0..60 {
            x.set(i, 1, 0.5);
        }
        let y: Vec<usize> = x.rows().map(|r| usize::from(r[0] > 0.5)).collect();
        let t = train_tree(&x, &y, 2, &ForestParams::default(), 0).unwrap();
        let imp = permutation_importance(&t, &x, &y, 9, 5).unwrap();
        assert_eq!(imp[1], 0.0);
        assert!(imp[0] > 0.3);
        assert!(permutation_importance(&t, &x, &y, 9, 0).is_err());
    }

    #[test]
    fn background_sampling() {
        let x = random_matrix(50, 2, 5);
        let b = sample_background(&x, 10, 1);
        assert_eq!(b.n_rows(), 10);
        assert_eq!(b, sample_background(&x, 10, 1));
        assert_eq!(sample_background(&x, 100, 1), x);
    }

    #[test]
    fn summary_ranks_by_mean_abs() {
        let rows = vec![
            ShapleyRow {
                phi: vec![0.1, -0.5, 0.0],
                std_err: None,
                prediction: 0.6,
                expected_value: 1.0,
            },
            ShapleyRow {
                phi: vec![0.3, 0.1, 0.0],
                std_err: None,
                prediction: 0.9,
                expected_value: 0.5,
            },
        ];
        let samples = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let ids = vec!["s0".to_string(), "s1".to_string()];
        let r = attribution_summary(rows.clone(), &samples, &ids, &names, 1, "bg").unwrap();
        let order: Vec<&str> = r.ranking.iter().map(|f| f.feature.as_str()).collect();
        assert_eq!(order, vec!["b", "a", "c"]);
        assert!((r.ranking[0].importance - 0.3).abs() < 1e-12);
        assert_eq!(r.violin.len(), 6);
        assert_eq!(r.violin[0].raw_value, 2.0);
        let again = attribution_summary(rows, &samples, &ids, &names, 1, "bg").unwrap();
        assert_eq!(r, again);
    }
}
