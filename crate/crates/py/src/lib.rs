//! Python bindings for the normlens analysis library.
//!
//! Matrices cross the boundary as lists of rows. Results that are plain
//! records come back as dicts.

use std::path::PathBuf;

use normlens::classify::{self, Condition};
use normlens::cluster::{self, ClusterConfig};
use normlens::dataset::{self, ResourcePaths};
use normlens::explain::{self, ShapleyMode};
use normlens::features::FEATURE_NAMES;
use normlens::forest::{self, Classifier, ForestParams};
use normlens::ingest::AssociationRecord;
use normlens::matrix::Matrix;
use normlens::model::{self, RatingScale, TargetRatings, WordClass};
use normlens::select::{self, FilterThresholds, MidScaleDefinition, MidScaleSpec, TargetSets};
use normlens::stats::{self, CorrelationOptions, CorrelationReport, PValueMethod, ResponseSet};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(normlens, NormlensError, PyValueError, "Invalid input or arguments.");
create_exception!(
    normlens,
    InsufficientDataError,
    NormlensError,
    "The data cannot support the requested analysis."
);

fn err(e: normlens::Error) -> PyErr {
    use normlens::Error as E;
    match e {
        E::Io { .. } => PyOSError::new_err(e.to_string()),
        E::InsufficientData(_) | E::Degenerate(_) | E::NoValidRatings => InsufficientDataError::new_err(e.to_string()),
        _ => NormlensError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for normlens::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).py()
}

fn word_class(pos: &str) -> PyResult<WordClass> {
    pos.parse().py()
}

fn correlation_dict<'py>(py: Python<'py>, r: &CorrelationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rho", r.rho)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("n", r.n)?;
    d.set_item("significant", r.significant)?;
    d.set_item(
        "method",
        match r.method {
            PValueMethod::TApproximation => "t",
            PValueMethod::Permutation => "permutation",
        },
    )?;
    Ok(d)
}

/// A rated word with its summary statistics.
#[pyclass(frozen, skip_from_py_object, name = "Target")]
#[derive(Clone)]
struct PyTarget {
    inner: model::Target,
}

#[pymethods]
impl PyTarget {
    /// `counts[i]` is the number of raters who chose category i + 1.
    #[new]
    fn new(word: String, pos: &str, counts: Vec<u32>) -> PyResult<Self> {
        let ratings = TargetRatings::from_counts(word, word_class(pos)?, RatingScale::default(), counts).py()?;
        Ok(PyTarget {
            inner: model::Target::new(ratings).py()?,
        })
    }

    #[getter]
    fn word(&self) -> &str {
        self.inner.word()
    }

    #[getter]
    fn pos(&self) -> &'static str {
        self.inner.word_class().name()
    }

    #[getter]
    fn counts(&self) -> Vec<u32> {
        self.inner.ratings.counts().to_vec()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.summary.mean
    }

    #[getter]
    fn sd(&self) -> f64 {
        self.inner.summary.sd
    }

    #[getter]
    fn n_valid(&self) -> u32 {
        self.inner.summary.n_valid
    }

    /// Relative frequency of each rating category.
    fn distribution(&self) -> PyResult<Vec<f64>> {
        Ok(model::relative_frequency_vector(&self.inner.ratings).py()?.into_inner())
    }

    fn __repr__(&self) -> String {
        format!(
            "Target({:?}, {}, mean={:.3}, sd={:.3}, n={})",
            self.inner.word(),
            self.inner.word_class().name(),
            self.inner.summary.mean,
            self.inner.summary.sd,
            self.inner.summary.n_valid
        )
    }
}

fn wrap(targets: &[model::Target]) -> Vec<PyTarget> {
    targets.iter().map(|t| PyTarget { inner: t.clone() }).collect()
}

#[pyclass(frozen, name = "RandomForest")]
struct PyForest {
    inner: forest::RandomForest,
    feature_names: Vec<String>,
}

#[pymethods]
impl PyForest {
    #[staticmethod]
    #[pyo3(signature = (x, y, n_classes=None, n_trees=500, max_features=None, min_samples_leaf=1, max_depth=None, seed=42, feature_names=None))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        n_classes: Option<usize>,
        n_trees: usize,
        max_features: Option<usize>,
        min_samples_leaf: usize,
        max_depth: Option<usize>,
        seed: u64,
        feature_names: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let x = matrix(&x)?;
        let n_classes = n_classes.unwrap_or_else(|| y.iter().max().map_or(0, |m| m + 1));
        let params = ForestParams {
            n_trees,
            max_features,
            min_samples_leaf,
            max_depth,
            bootstrap: true,
            seed,
        };
        let feature_names =
            feature_names.unwrap_or_else(|| (0..x.n_cols()).map(|j| format!("x{j}")).collect());
        let inner = py.detach(|| forest::RandomForest::fit(&x, &y, n_classes, &params)).py()?;
        Ok(PyForest { inner, feature_names })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, feature_names) = forest::RandomForest::from_json(text).py()?;
        Ok(PyForest { inner, feature_names })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json(&self.feature_names).py()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees().len()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.feature_names.clone()
    }

    fn predict_proba(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.check(&x)?;
        Ok(x.iter().map(|r| self.inner.predict_proba(r)).collect())
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
        self.check(&x)?;
        Ok(x.iter().map(|r| self.inner.predict(r)).collect())
    }

    fn accuracy(&self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<f64> {
        self.check(&x)?;
        if x.len() != y.len() {
            return Err(NormlensError::new_err("x and y differ in length"));
        }
        Ok(forest::accuracy(&self.inner, &matrix(&x)?, &y))
    }
}

impl PyForest {
    fn check(&self, x: &[Vec<f64>]) -> PyResult<()> {
        let d = self.inner.n_features();
        match x.iter().position(|r| r.len() != d) {
            Some(i) => Err(NormlensError::new_err(format!("row {i} has {} features, expected {d}", x[i].len()))),
            None => Ok(()),
        }
    }
}

/// Rating norms and characteristic resources loaded from TSV files.
#[pyclass(frozen, name = "Dataset")]
struct PyDataset {
    inner: dataset::Dataset,
}

fn spec(pos: WordClass, mid_def: &str, set_size: Option<usize>, sd_min: f64) -> PyResult<MidScaleSpec> {
    let definition: MidScaleDefinition = mid_def.parse().py()?;
    let mut spec = MidScaleSpec::for_class(pos, definition);
    spec.sd_min = sd_min;
    if let Some(n) = set_size {
        spec.set_size = n;
    }
    Ok(spec)
}

impl PyDataset {
    fn filtered(&self, pos: WordClass, thresholds: &FilterThresholds) -> PyResult<Vec<model::Target>> {
        let out = select::filter_targets(&self.inner.ratings_for(pos), &self.inner.resources.corpus, thresholds).py()?;
        out.kept.into_iter().map(model::Target::new).collect::<normlens::Result<_>>().py()
    }

    fn sets(&self, pos: &str, mid_def: &str, set_size: Option<usize>, sd_min: f64) -> PyResult<TargetSets> {
        let pos = word_class(pos)?;
        let targets = self.filtered(pos, &FilterThresholds::default())?;
        select::build_target_sets(&targets, &spec(pos, mid_def, set_size, sd_min)?, RatingScale::default()).py()
    }
}

#[pymethods]
impl PyDataset {
    /// Paths may be omitted; missing resources leave their characteristics
    /// undefined.
    #[new]
    #[pyo3(signature = (ratings=None, sensorimotor=None, vad=None, associations=None, corpus=None, ambiguity=None))]
    fn new(
        py: Python<'_>,
        ratings: Option<PathBuf>,
        sensorimotor: Option<PathBuf>,
        vad: Option<PathBuf>,
        associations: Option<PathBuf>,
        corpus: Option<PathBuf>,
        ambiguity: Option<PathBuf>,
    ) -> PyResult<Self> {
        let paths = ResourcePaths {
            ratings,
            sensorimotor,
            vad,
            associations,
            corpus,
            ambiguity,
        };
        let inner = py.detach(|| dataset::Dataset::load(&paths, RatingScale::default())).py()?;
        Ok(PyDataset { inner })
    }

    /// Loads whichever of ratings.tsv, sensorimotor.tsv, vad.tsv,
    /// associations.tsv, corpus.tsv and ambiguity.tsv exist in `path`.
    #[staticmethod]
    fn from_dir(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let paths = ResourcePaths::in_dir(&path);
        let inner = py.detach(|| dataset::Dataset::load(&paths, RatingScale::default())).py()?;
        Ok(PyDataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.ratings.len()
    }

    #[pyo3(signature = (pos="noun", pos_dominance_min=0.95, frequency_min=10_000, pos_agreement=true))]
    fn targets(&self, pos: &str, pos_dominance_min: f64, frequency_min: u64, pos_agreement: bool) -> PyResult<Vec<PyTarget>> {
        let thresholds = FilterThresholds {
            pos_dominance_min,
            frequency_min,
            require_pos_agreement: pos_agreement,
        };
        Ok(wrap(&self.filtered(word_class(pos)?, &thresholds)?))
    }

    /// Abstract, mid-scale and concrete sets from the default-filtered targets.
    #[pyo3(signature = (pos="noun", mid_def="mean", set_size=None, sd_min=1.4))]
    fn target_sets<'py>(
        &self,
        py: Python<'py>,
        pos: &str,
        mid_def: &str,
        set_size: Option<usize>,
        sd_min: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let sets = self.sets(pos, mid_def, set_size, sd_min)?;
        let d = PyDict::new(py);
        d.set_item("abstract", wrap(&sets.abstract_set))?;
        d.set_item("mid", wrap(&sets.mid_set))?;
        d.set_item("concrete", wrap(&sets.concrete_set))?;
        d.set_item("mid_score", sets.mid_score)?;
        Ok(d)
    }

    /// The 13 characteristics of a word, `None` where a resource lacks it.
    #[pyo3(signature = (word, pos="noun"))]
    fn profile(&self, word: &str, pos: &str) -> PyResult<Vec<Option<f64>>> {
        let p = self.inner.resources.profile(word, word_class(pos)?);
        Ok((0..FEATURE_NAMES.len()).map(|j| p.get(j)).collect())
    }

    /// Feature rows and labels for one classification condition. Missing
    /// characteristics are 0.
    #[pyo3(signature = (condition, pos="noun", mid_def="mean", set_size=None, sd_min=1.4))]
    fn condition_data<'py>(
        &self,
        py: Python<'py>,
        condition: &str,
        pos: &str,
        mid_def: &str,
        set_size: Option<usize>,
        sd_min: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let c: Condition = condition.parse().py()?;
        let sets = self.sets(pos, mid_def, set_size, sd_min)?;
        let data = classify::build_condition(&sets, c, &self.inner.resources).py()?;
        let d = PyDict::new(py);
        d.set_item("x", data.x.rows().map(<[f64]>::to_vec).collect::<Vec<_>>())?;
        d.set_item("y", data.y)?;
        d.set_item("words", data.words)?;
        d.set_item("feature_names", data.feature_names)?;
        Ok(d)
    }

    /// Spearman correlation of mean rating against every characteristic.
    #[pyo3(signature = (pos="noun", alpha=None, resamples=9_999, seed=42))]
    fn correlations<'py>(
        &self,
        py: Python<'py>,
        pos: &str,
        alpha: Option<f64>,
        resamples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let pos = word_class(pos)?;
        let targets = self.filtered(pos, &FilterThresholds::default())?;
        let profiles: Vec<_> = targets
            .iter()
            .map(|t| self.inner.resources.profile(t.word(), t.word_class()))
            .collect();
        let options = CorrelationOptions {
            alpha: alpha.unwrap_or_else(|| stats::default_alpha(pos)),
            resamples,
            seed,
        };
        let d = PyDict::new(py);
        for (name, rep) in stats::correlation_table(&targets, &profiles, &options) {
            match rep {
                Ok(r) => d.set_item(name, correlation_dict(py, &r)?)?,
                Err(_) => d.set_item(name, py.None())?,
            }
        }
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (x, y, alpha=0.05))]
fn spearman<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
    correlation_dict(py, &stats::spearman(&x, &y, alpha).py()?)
}

/// Drops pairs with a `None` side first; below 30 pairs the p-value comes
/// from seeded permutations.
#[pyfunction]
#[pyo3(signature = (x, y, alpha=0.05, resamples=9_999, seed=42))]
fn spearman_with_missing<'py>(
    py: Python<'py>,
    x: Vec<Option<f64>>,
    y: Vec<Option<f64>>,
    alpha: f64,
    resamples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let options = CorrelationOptions { alpha, resamples, seed };
    correlation_dict(py, &stats::spearman_with_missing(&x, &y, &options).py()?)
}

#[pyfunction]
fn average_ranks(values: Vec<f64>) -> Vec<f64> {
    stats::average_ranks(&values)
}

/// Type/token ratio over each participant's first one, two or three
/// responses. `responses` holds one (r1, r2, r3) triple per participant.
#[pyfunction]
#[pyo3(signature = (responses, selector="R123"))]
fn association_diversity(responses: Vec<(Option<String>, Option<String>, Option<String>)>, selector: &str) -> PyResult<Option<f64>> {
    let selector = match selector.to_ascii_uppercase().as_str() {
        "R1" => ResponseSet::R1,
        "R12" => ResponseSet::R12,
        "R123" => ResponseSet::R123,
        other => return Err(NormlensError::new_err(format!("unknown response set `{other}`"))),
    };
    let records: Vec<AssociationRecord> = responses
        .into_iter()
        .enumerate()
        .map(|(i, (r1, r2, r3))| AssociationRecord {
            cue: String::new(),
            participant: i.to_string(),
            r1,
            r2,
            r3,
        })
        .collect();
    Ok(stats::association_diversity(&records, selector))
}

#[pyfunction]
#[pyo3(signature = (points, k=3, max_iter=300, tol=1e-6, n_init=10, seed=42, ids=None))]
#[allow(clippy::too_many_arguments)]
fn kmeans<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    k: usize,
    max_iter: usize,
    tol: f64,
    n_init: usize,
    seed: u64,
    ids: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = ClusterConfig {
        k,
        max_iter,
        tol,
        n_init,
        seed,
    };
    let r = py
        .detach(|| match &ids {
            Some(ids) => cluster::kmeans_labeled(ids, &points, &config),
            None => cluster::kmeans(&points, &config),
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("labels", r.labels)?;
    d.set_item("centroids", r.centroids)?;
    d.set_item("sizes", r.sizes)?;
    d.set_item("inertia", r.inertia)?;
    d.set_item("inertia_trace", r.inertia_trace)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("restart_inertias", r.restart_inertias)?;
    Ok(d)
}

#[pyfunction]
fn adjusted_rand_index(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    cluster::adjusted_rand_index(&a, &b).py()
}

/// Returns (coords, explained_variance).
#[pyfunction]
fn pca_2d(points: Vec<Vec<f64>>) -> PyResult<(Vec<(f64, f64)>, (f64, f64))> {
    let p = cluster::pca_2d(&points).py()?;
    Ok((
        p.coords.iter().map(|c| (c[0], c[1])).collect(),
        (p.explained_variance[0], p.explained_variance[1]),
    ))
}

#[pyfunction]
#[pyo3(signature = (x, y, condition=None, folds=10, n_trees=500, max_features=None, min_samples_leaf=1, max_depth=None, seed=42))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    condition: Option<&str>,
    folds: usize,
    n_trees: usize,
    max_features: Option<usize>,
    min_samples_leaf: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let condition: Option<Condition> = condition.map(str::parse).transpose().py()?;
    let feature_names = (0..x.first().map_or(0, Vec::len)).map(|j| format!("x{j}")).collect();
    let data = classify::LabeledData::new(matrix(&x)?, y, feature_names).py()?;
    let params = ForestParams {
        n_trees,
        max_features,
        min_samples_leaf,
        max_depth,
        bootstrap: true,
        seed,
    };
    let r = py.detach(|| classify::cross_validate(&data, condition, &params, folds)).py()?;
    let d = PyDict::new(py);
    d.set_item("mean_accuracy", r.mean_accuracy)?;
    d.set_item("per_fold_accuracy", r.per_fold_accuracy)?;
    d.set_item("baseline", r.baseline)?;
    d.set_item("class_total", r.class_total)?;
    d.set_item("class_correct", r.class_correct)?;
    Ok(d)
}

fn shapley_mode(mode: &str, permutations: usize, seed: u64) -> PyResult<ShapleyMode> {
    match mode.to_ascii_lowercase().replace('_', "-").as_str() {
        "exact" => Ok(ShapleyMode::Exact),
        "monte-carlo" => Ok(ShapleyMode::MonteCarlo { permutations, seed }),
        other => Err(NormlensError::new_err(format!("unknown Shapley mode `{other}`"))),
    }
}

/// Interventional Shapley values of `model`'s probability for `class_index`
/// at one row, against a background sample.
#[pyfunction]
#[pyo3(signature = (model, x, background, class_index, mode="exact", permutations=2_000, seed=42))]
#[allow(clippy::too_many_arguments)]
fn shapley_values<'py>(
    py: Python<'py>,
    model: PyRef<'py, PyForest>,
    x: Vec<f64>,
    background: Vec<Vec<f64>>,
    class_index: usize,
    mode: &str,
    permutations: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = shapley_mode(mode, permutations, seed)?;
    let background = matrix(&background)?;
    let forest = &model.inner;
    let row = py.detach(|| explain::shapley_values(forest, &x, &background, class_index, mode)).py()?;
    let d = PyDict::new(py);
    d.set_item("phi", row.phi)?;
    d.set_item("std_err", row.std_err)?;
    d.set_item("prediction", row.prediction)?;
    d.set_item("expected_value", row.expected_value)?;
    Ok(d)
}

/// Mean accuracy drop when each column is shuffled.
#[pyfunction]
#[pyo3(signature = (model, x, y, seed=42, repeats=10))]
fn permutation_importance(
    py: Python<'_>,
    model: PyRef<'_, PyForest>,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
    seed: u64,
    repeats: usize,
) -> PyResult<Vec<f64>> {
    let x = matrix(&x)?;
    let forest = &model.inner;
    py.detach(|| explain::permutation_importance(forest, &x, &y, seed, repeats)).py()
}

#[pymodule]
#[pyo3(name = "normlens")]
fn normlens_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("NormlensError", py.get_type::<NormlensError>())?;
    m.add("InsufficientDataError", py.get_type::<InsufficientDataError>())?;
    m.add("FEATURE_NAMES", FEATURE_NAMES.to_vec())?;
    m.add("CONDITIONS", Condition::ALL.map(Condition::name).to_vec())?;
    m.add("LABEL_NAMES", classify::LABEL_NAMES.to_vec())?;
    m.add("EXACT_MAX_FEATURES", explain::EXACT_MAX_FEATURES)?;
    m.add_class::<PyTarget>()?;
    m.add_class::<PyForest>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(spearman_with_missing, m)?)?;
    m.add_function(wrap_pyfunction!(average_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(association_diversity, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(pca_2d, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(shapley_values, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_importance, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_classes() {
        Python::initialize();
        Python::attach(|py| {
            let e = err(normlens::Error::InsufficientData("x".into()));
            assert!(e.is_instance_of::<InsufficientDataError>(py));
            assert!(e.is_instance_of::<PyValueError>(py));
            let e = err(normlens::Error::InvalidArgument("bad".into()));
            assert!(e.is_instance_of::<NormlensError>(py));
            assert!(!e.is_instance_of::<InsufficientDataError>(py));
        });
    }

    #[test]
    fn shapley_mode_names() {
        assert_eq!(shapley_mode("exact", 10, 1).unwrap(), ShapleyMode::Exact);
        assert_eq!(
            shapley_mode("monte_carlo", 10, 1).unwrap(),
            ShapleyMode::MonteCarlo { permutations: 10, seed: 1 }
        );
        Python::initialize();
        assert!(shapley_mode("kernel", 10, 1).is_err());
    }
}
