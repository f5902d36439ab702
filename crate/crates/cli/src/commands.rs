//! Subcommand orchestration. Every command computes its prerequisites in
//! memory; `--pipeline` also writes their outputs.

use std::fmt::Write as _;
use std::time::Instant;

use normlens::classify::{
    build_condition, cross_validate, stratified_folds, Condition, CvReport, LabeledData, LABEL_NAMES, N_LABELS,
};
use normlens::cluster::{centroid_heatmap, kmeans_labeled, pca_2d, ClusterResult};
use normlens::dataset::Dataset;
use normlens::explain::{
    attribution_summary, explain_samples, permutation_importance, sample_background, AttributionReport,
    ShapleyMode,
};
use normlens::features::FeatureFamily;
use normlens::forest::RandomForest;
use normlens::model::{relative_frequency_vector, RatingScale, Target};
use normlens::select::{build_target_sets, filter_targets, FilterOutcome, TargetSets};
use normlens::stats::{
    correlation_table, croissant_table, dominant_modality_counts, modality_header, CorrelationOptions,
    CorrelationReport, PValueMethod,
};
use serde::Serialize;

use crate::config::{ConditionChoice, Options, RunConfig, ShapleyChoice, SEED_ENV};
use crate::error::CliError;
use crate::manifest::{digest_file, RunManifest};
use crate::output::{Cell, OutputDir, Table};
use crate::svg::{heatmap, scatter, Fill, ScatterPoint, ScatterStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Filter,
    Correlate,
    Classify,
    Explain,
    Cluster,
    Croissant,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Filter => "filter",
            Command::Correlate => "correlate",
            Command::Classify => "classify",
            Command::Explain => "explain",
            Command::Cluster => "cluster",
            Command::Croissant => "croissant",
            Command::Report => "report",
        }
    }

    fn needs_sets(self) -> bool {
        matches!(
            self,
            Command::Classify | Command::Explain | Command::Cluster | Command::Report
        )
    }
}

fn scale() -> RatingScale {
    RatingScale::default()
}

struct Run {
    cfg: RunConfig,
    out: OutputDir,
    manifest: RunManifest,
    dataset: Dataset,
}

impl Run {
    /// Runs `f` as a named stage; the files it writes are listed under it.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let started = Instant::now();
        log::info!("stage {name}");
        let value = f(self)?;
        let outputs = self.out.take_written();
        self.manifest.record(name, started, outputs);
        Ok(value)
    }
}

fn slug(condition: Condition) -> String {
    condition.name().replace('/', "-")
}

pub fn run(command: Command, opts: &Options) -> Result<(), CliError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(opts, env_seed.as_deref())?;
    let paths = cfg.resource_paths();
    let entries = paths.entries();
    for (_, path) in &entries {
        if !path.is_file() {
            return Err(CliError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
    }
    for (name, present) in [("ratings", paths.ratings.is_some()), ("corpus", paths.corpus.is_some())] {
        if !present {
            return Err(CliError::Usage(format!(
                "{} needs --{name} (or `{name} = ...` in the config file)",
                command.name()
            )));
        }
    }
    let digests = entries
        .iter()
        .map(|(name, path)| digest_file(name, path))
        .collect::<Result<Vec<_>, _>>()?;

    let out = OutputDir::create(&cfg.output_dir, cfg.format)?;
    let manifest = RunManifest::new(command.name(), cfg.clone(), digests);
    let mut run = Run {
        cfg,
        out,
        manifest,
        dataset: Dataset::default(),
    };
    run.stage("load", |r| {
        r.dataset = Dataset::load(&paths, scale())?;
        Ok(())
    })?;

    let write_prereqs = run.cfg.pipeline || command == Command::Report || command == Command::Filter;
    let targets = run.stage("filter", |r| stage_filter(r, write_prereqs))?;
    let sets = if command.needs_sets() {
        let write = run.cfg.pipeline || command == Command::Report;
        Some(run.stage("select", |r| stage_select(r, &targets, write))?)
    } else {
        None
    };

    let mut report = ReportParts::default();
    match command {
        Command::Filter => {}
        Command::Correlate => {
            run.stage("correlate", |r| stage_correlate(r, &targets))?;
        }
        Command::Classify => {
            run.stage("classify", |r| stage_classify(r, sets.as_ref().unwrap(), ConditionChoice::All))?;
        }
        Command::Explain => {
            run.stage("explain", |r| stage_explain(r, sets.as_ref().unwrap()))?;
        }
        Command::Cluster => {
            run.stage("cluster", |r| stage_cluster(r, sets.as_ref().unwrap()))?;
        }
        Command::Croissant => {
            run.stage("croissant", |r| stage_croissant(r, &targets))?;
        }
        Command::Report => {
            let sets = sets.as_ref().unwrap();
            report.n_targets = targets.len();
            report.sets = Some((sets.abstract_set.len(), sets.mid_set.len(), sets.concrete_set.len(), sets.mid_score));
            report.correlations = run.stage("correlate", |r| stage_correlate(r, &targets))?;
            report.classification = run.stage("classify", |r| stage_classify(r, sets, ConditionChoice::All))?;
            report.attributions = run.stage("explain", |r| stage_explain(r, sets))?;
            report.clusters = Some(run.stage("cluster", |r| stage_cluster(r, sets))?);
            run.stage("croissant", |r| stage_croissant(r, &targets))?;
            run.stage("report", |r| {
                let text = render_report(&r.cfg, &report);
                r.out.write("report.md", &text)
            })?;
        }
    }

    let Run { mut out, manifest, .. } = run;
    out.json("manifest.json", &manifest)?;
    Ok(())
}

fn stage_filter(r: &mut Run, write: bool) -> Result<Vec<Target>, CliError> {
    let rated = r.dataset.ratings_for(r.cfg.word_class);
    let outcome: FilterOutcome = filter_targets(&rated, &r.dataset.resources.corpus, &r.cfg.thresholds)?;
    log::info!("kept {} of {} rated {}s", outcome.kept.len(), rated.len(), r.cfg.word_class.name());
    let targets = outcome
        .kept
        .iter()
        .cloned()
        .map(Target::new)
        .collect::<normlens::Result<Vec<_>>>()?;
    if write {
        let mut t = Table::new(&["word", "pos", "n_valid", "mean", "sd"]);
        for target in &targets {
            t.push(vec![
                target.word().into(),
                target.word_class().code().into(),
                (target.summary.n_valid as usize).into(),
                target.summary.mean.into(),
                target.summary.sd.into(),
            ]);
        }
        r.out.table("filtered", &t)?;
        let mut s = Table::new(&["step", "targets"]);
        for (step, n) in [
            ("rated", rated.len()),
            ("dropped_multiword", outcome.dropped_multiword),
            ("dropped_no_corpus_entry", outcome.dropped_no_corpus_entry),
            ("dropped_pos_dominance", outcome.dropped_pos_dominance),
            ("dropped_pos_disagreement", outcome.dropped_pos_disagreement),
            ("dropped_frequency", outcome.dropped_frequency),
            ("kept", targets.len()),
        ] {
            s.push(vec![step.into(), n.into()]);
        }
        r.out.table("filter_summary", &s)?;
    }
    Ok(targets)
}

fn stage_select(r: &mut Run, targets: &[Target], write: bool) -> Result<TargetSets, CliError> {
    let sets = build_target_sets(targets, &r.cfg.mid_spec, scale())?;
    if write {
        let mut t = Table::new(&["word", "pos", "mean", "sd", "set"]);
        for (set, label) in [
            (&sets.abstract_set, "abstract"),
            (&sets.mid_set, "mid"),
            (&sets.concrete_set, "concrete"),
        ] {
            for target in set {
                t.push(vec![
                    target.word().into(),
                    target.word_class().code().into(),
                    target.summary.mean.into(),
                    target.summary.sd.into(),
                    label.into(),
                ]);
            }
        }
        r.out.table("target_sets", &t)?;
    }
    Ok(sets)
}

type CorrelationRows = Vec<(&'static str, Result<CorrelationReport, String>)>;

fn stage_correlate(r: &mut Run, targets: &[Target]) -> Result<CorrelationRows, CliError> {
    let res = &r.dataset.resources;
    let profiles: Vec<_> = targets.iter().map(|t| res.profile(t.word(), t.word_class())).collect();
    let options = CorrelationOptions {
        alpha: r.cfg.alpha,
        resamples: r.cfg.resamples,
        seed: r.cfg.master_seed,
    };
    let rows: CorrelationRows = correlation_table(targets, &profiles, &options)
        .into_iter()
        .map(|(name, rep)| (name, rep.map_err(|e| e.to_string())))
        .collect();
    let mut t = Table::new(&["characteristic", "n", "rho", "p_value", "significant", "method", "note"]);
    for (name, rep) in &rows {
        match rep {
            Ok(c) => t.push(vec![
                (*name).into(),
                c.n.into(),
                c.rho.into(),
                c.p_value.into(),
                c.significant.into(),
                match c.method {
                    PValueMethod::TApproximation => "t",
                    PValueMethod::Permutation => "permutation",
                }
                .into(),
                Cell::Na,
            ]),
            Err(e) => t.push(vec![(*name).into(), Cell::Na, Cell::Na, Cell::Na, Cell::Na, Cell::Na, e.clone().into()]),
        }
    }
    r.out.table("correlations", &t)?;

    let counts = dominant_modality_counts(
        targets
            .iter()
            .filter_map(|t| res.sensorimotor.get(t.word()).map(|p| (t.word_class(), p))),
    );
    let mut cols = vec!["pos"];
    cols.extend(modality_header());
    cols.push("total");
    let mut m = Table::new(&cols);
    for (class, c) in &counts {
        let mut row: Vec<Cell> = vec![class.code().into()];
        row.extend(c.iter().map(|&n| Cell::from(n)));
        row.push(c.iter().sum::<usize>().into());
        m.push(row);
    }
    r.out.table("modalities", &m)?;
    Ok(rows)
}

fn class_accuracy(report: &CvReport, label: usize) -> Cell {
    let total = report.class_total.get(label).copied().unwrap_or(0);
    if total == 0 {
        Cell::Na
    } else {
        (report.class_correct[label] as f64 / total as f64).into()
    }
}

fn stage_classify(r: &mut Run, sets: &TargetSets, default: ConditionChoice) -> Result<Vec<CvReport>, CliError> {
    let conditions = r.cfg.condition.unwrap_or(default).conditions();
    let mut cols = vec!["condition", "n", "baseline", "accuracy", "fold_sd"];
    let acc_cols: Vec<String> = LABEL_NAMES.iter().map(|l| format!("accuracy_{l}")).collect();
    cols.extend(acc_cols.iter().map(String::as_str));
    let mut t = Table::new(&cols);
    let mut fam = Table::new(&["condition", "family", "accuracy"]);
    let mut reports = Vec::new();
    for c in conditions {
        let data = build_condition(sets, c, &r.dataset.resources)?;
        let rep = cross_validate(&data, Some(c), &r.cfg.forest, r.cfg.folds)?;
        let m = rep.mean_accuracy;
        let var = rep.per_fold_accuracy.iter().map(|a| (a - m).powi(2)).sum::<f64>() / rep.per_fold_accuracy.len() as f64;
        let mut row: Vec<Cell> = vec![c.name().into(), data.y.len().into(), rep.baseline.into(), m.into(), var.sqrt().into()];
        row.extend((0..N_LABELS).map(|l| class_accuracy(&rep, l)));
        t.push(row);
        if r.cfg.families {
            for family in FeatureFamily::ALL {
                let cols: Vec<usize> = family.columns().collect();
                let sub = data.select_columns(&cols)?;
                let frep = cross_validate(&sub, Some(c), &r.cfg.forest, r.cfg.folds)?;
                fam.push(vec![c.name().into(), family.name().into(), frep.mean_accuracy.into()]);
            }
        }
        reports.push(rep);
    }
    r.out.table("classification", &t)?;
    if r.cfg.families {
        r.out.table("classification_families", &fam)?;
    }
    Ok(reports)
}

#[derive(Serialize)]
struct ViolinDocument<'a> {
    condition: &'static str,
    class_of_interest: &'static str,
    background_id: &'a str,
    points: &'a [normlens::explain::ViolinPoint],
}

struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Fold 0 is held out; the rest trains the model and supplies the background.
fn holdout(data: &LabeledData, folds: usize, seed: u64) -> Result<Split, CliError> {
    let assignment = stratified_folds(&data.y, folds, seed)?;
    let (test, train): (Vec<usize>, Vec<usize>) = (0..data.y.len()).partition(|&i| assignment[i] == 0);
    Ok(Split { train, test })
}

fn stage_explain(r: &mut Run, sets: &TargetSets) -> Result<Vec<(Condition, AttributionReport, Vec<f64>)>, CliError> {
    let conditions = r
        .cfg
        .condition
        .unwrap_or(ConditionChoice::One(Condition::BinaryMidConcrete))
        .conditions();
    let seed = r.cfg.master_seed;
    let mut results = Vec::new();
    for c in conditions {
        let data = build_condition(sets, c, &r.dataset.resources)?;
        let split = holdout(&data, r.cfg.folds, seed)?;
        let xtr = data.x.select_rows(&split.train);
        let ytr: Vec<usize> = split.train.iter().map(|&i| data.y[i]).collect();
        let xte = data.x.select_rows(&split.test);
        let yte: Vec<usize> = split.test.iter().map(|&i| data.y[i]).collect();
        let ids: Vec<String> = split.test.iter().map(|&i| data.words[i].clone()).collect();

        let model = RandomForest::fit(&xtr, &ytr, N_LABELS, &r.cfg.forest)?;
        let background = sample_background(&xtr, r.cfg.background, seed);
        let background_id = format!(
            "{}:train-folds:seed={seed}:rows={}",
            c.name(),
            background.n_rows()
        );
        let mode = match r.cfg.shapley_mode {
            ShapleyChoice::Exact => ShapleyMode::Exact,
            ShapleyChoice::MonteCarlo => ShapleyMode::MonteCarlo {
                permutations: r.cfg.permutations,
                seed,
            },
        };
        let class = c.class_of_interest();
        let rows = explain_samples(&model, &xte, &background, class, mode)?;
        let report = attribution_summary(rows, &xte, &ids, &data.feature_names, class, &background_id)?;
        let importance = permutation_importance(&model, &xte, &yte, seed, r.cfg.importance_repeats)?;

        let s = slug(c);
        let mut t = Table::new(&["rank", "feature", "mean_abs_shap", "permutation_importance"]);
        for (rank, f) in report.ranking.iter().enumerate() {
            let j = data.feature_names.iter().position(|n| *n == f.feature).unwrap_or(0);
            t.push(vec![(rank + 1).into(), f.feature.clone().into(), f.importance.into(), importance[j].into()]);
        }
        r.out.table(&format!("attribution_{s}"), &t)?;

        let mut cols = vec!["word".to_string(), "expected_value".into(), "prediction".into()];
        cols.extend(data.feature_names.iter().map(|n| format!("phi_{n}")));
        let has_se = report.rows.iter().any(|row| row.std_err.is_some());
        if has_se {
            cols.extend(data.feature_names.iter().map(|n| format!("se_{n}")));
        }
        let mut sh = Table::new(&cols);
        for (id, row) in ids.iter().zip(&report.rows) {
            let mut cells: Vec<Cell> = vec![id.clone().into(), row.expected_value.into(), row.prediction.into()];
            cells.extend(row.phi.iter().map(|&v| Cell::from(v)));
            if has_se {
                match &row.std_err {
                    Some(se) => cells.extend(se.iter().map(|&v| Cell::from(v))),
                    None => cells.extend(std::iter::repeat_n(Cell::Na, row.phi.len())),
                }
            }
            sh.push(cells);
        }
        r.out.table(&format!("shapley_{s}"), &sh)?;
        r.out.json(
            &format!("violin_{s}.json"),
            &ViolinDocument {
                condition: c.name(),
                class_of_interest: LABEL_NAMES[class],
                background_id: &report.background_id,
                points: &report.violin,
            },
        )?;
        let mut model_json = model.to_json(&data.feature_names)?;
        model_json.push('\n');
        r.out.write(&format!("model_{s}.json"), &model_json)?;
        results.push((c, report, importance));
    }
    Ok(results)
}

#[derive(Serialize)]
struct RestartDocument<'a> {
    seed: u64,
    k: usize,
    inertia: f64,
    iterations: usize,
    converged: bool,
    restart_inertias: &'a [f64],
    restart_traces: &'a [Vec<f64>],
    explained_variance: [f64; 2],
}

fn stage_cluster(r: &mut Run, sets: &TargetSets) -> Result<ClusterResult, CliError> {
    let targets = &sets.mid_set;
    let ids: Vec<&str> = targets.iter().map(Target::word).collect();
    let vectors = targets
        .iter()
        .map(|t| relative_frequency_vector(&t.ratings).map(|v| v.into_inner()))
        .collect::<normlens::Result<Vec<_>>>()?;
    let result = kmeans_labeled(&ids, &vectors, &r.cfg.cluster)?;
    let projection = pca_2d(&vectors)?;

    let mut t = Table::new(&["word", "cluster", "x", "y"]);
    for ((id, &label), xy) in ids.iter().zip(&result.labels).zip(&projection.coords) {
        t.push(vec![(*id).into(), (label + 1).into(), xy[0].into(), xy[1].into()]);
    }
    r.out.table("clusters", &t)?;

    let categories: Vec<String> = (scale().min()..=scale().max()).map(|c| c.to_string()).collect();
    let mut cols = vec!["cluster".to_string(), "size".into()];
    cols.extend(categories.iter().map(|c| format!("p{c}")));
    let mut ct = Table::new(&cols);
    let matrix = centroid_heatmap(&result);
    for (i, row) in matrix.iter().enumerate() {
        let mut cells: Vec<Cell> = vec![(i + 1).into(), result.sizes[i].into()];
        cells.extend(row.iter().map(|&v| Cell::from(v)));
        ct.push(cells);
    }
    r.out.table("centroids", &ct)?;
    r.out.json(
        "cluster_restarts.json",
        &RestartDocument {
            seed: r.cfg.cluster.seed,
            k: r.cfg.cluster.k,
            inertia: result.inertia,
            iterations: result.iterations,
            converged: result.converged,
            restart_inertias: &result.restart_inertias,
            restart_traces: &result.restart_traces,
            explained_variance: projection.explained_variance,
        },
    )?;

    let row_labels: Vec<String> = result
        .sizes
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{} (n={n})", i + 1))
        .collect();
    let title = format!("Cluster centroids, mid-scale {}s", r.cfg.word_class.name());
    r.out.write("centroids.svg", &heatmap(&matrix, &row_labels, &categories, &title)?)?;
    let points: Vec<ScatterPoint> = ids
        .iter()
        .zip(&result.labels)
        .zip(&projection.coords)
        .map(|((id, &label), xy)| ScatterPoint {
            x: xy[0],
            y: xy[1],
            fill: Fill::Category(label),
            label: format!("{id} (cluster {})", label + 1),
        })
        .collect();
    let style = ScatterStyle {
        title: "Rating distributions, first two principal components".into(),
        x_label: format!("PC1 ({:.1}%)", 100.0 * projection.explained_variance[0]),
        y_label: format!("PC2 ({:.1}%)", 100.0 * projection.explained_variance[1]),
        ..Default::default()
    };
    r.out.write("clusters.svg", &scatter(&points, &style)?)?;
    Ok(result)
}

fn stage_croissant(r: &mut Run, targets: &[Target]) -> Result<(), CliError> {
    let res = &r.dataset.resources;
    let profiles: Vec<_> = targets.iter().map(|t| res.profile(t.word(), t.word_class())).collect();
    let overlay = r.cfg.overlay.as_deref();
    let rows = croissant_table(targets, &profiles, overlay)?;
    let mut t = Table::new(&["word", "pos", "mean", "sd", "overlay", "missing"]);
    for row in &rows {
        t.push(vec![
            row.word.clone().into(),
            row.pos.code().into(),
            row.mean.into(),
            row.sd.into(),
            row.overlay.into(),
            row.missing.into(),
        ]);
    }
    r.out.table("croissant", &t)?;
    let points: Vec<ScatterPoint> = rows
        .iter()
        .map(|row| ScatterPoint {
            x: row.mean,
            y: row.sd,
            fill: match (overlay, row.overlay) {
                (None, _) => Fill::Category(0),
                (Some(_), Some(v)) => Fill::Value(v),
                (Some(_), None) => Fill::Missing,
            },
            label: row.word.clone(),
        })
        .collect();
    let lo = scale().min() as f64;
    let hi = scale().max() as f64;
    let style = ScatterStyle {
        title: match overlay {
            Some(o) => format!("Mean vs SD, {}s, coloured by {o}", r.cfg.word_class.name()),
            None => format!("Mean vs SD, {}s", r.cfg.word_class.name()),
        },
        x_label: "mean rating".into(),
        y_label: "standard deviation".into(),
        x_range: Some((lo, hi)),
        y_range: Some((0.0, (hi - lo) / 2.0 + 0.1)),
    };
    r.out.write("croissant.svg", &scatter(&points, &style)?)?;
    Ok(())
}

#[derive(Default)]
struct ReportParts {
    n_targets: usize,
    sets: Option<(usize, usize, usize, f64)>,
    correlations: CorrelationRows,
    classification: Vec<CvReport>,
    attributions: Vec<(Condition, AttributionReport, Vec<f64>)>,
    clusters: Option<ClusterResult>,
}

fn render_report(cfg: &RunConfig, p: &ReportParts) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# normlens report: {}s\n", cfg.word_class.name());
    let _ = writeln!(s, "Master seed {}. {} targets after filtering.", cfg.master_seed, p.n_targets);
    if let Some((a, m, c, score)) = p.sets {
        let _ = writeln!(
            s,
            "Sets: {a} abstract, {m} mid-scale ({} definition, mid score {score:.3}), {c} concrete.",
            cfg.mid_definition.name()
        );
    }
    let _ = writeln!(s, "\n## Correlations with mean rating\n");
    let _ = writeln!(s, "| characteristic | n | rho | p | significant |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (name, rep) in &p.correlations {
        match rep {
            Ok(c) => {
                let _ = writeln!(s, "| {name} | {} | {:.2} | {:.3e} | {} |", c.n, c.rho, c.p_value, if c.significant { "yes" } else { "no" });
            }
            Err(e) => {
                let _ = writeln!(s, "| {name} | | | | {e} |");
            }
        }
    }
    let _ = writeln!(s, "\n## Classification ({}-fold cross-validation)\n", cfg.folds);
    let _ = writeln!(s, "| condition | baseline | accuracy |");
    let _ = writeln!(s, "|---|---|---|");
    for rep in &p.classification {
        let name = rep.condition.map_or("", Condition::name);
        let _ = writeln!(s, "| {name} | {:.2} | {:.2} |", rep.baseline, rep.mean_accuracy);
    }
    for (c, report, _) in &p.attributions {
        let _ = writeln!(
            s,
            "\n## Attribution: {}, class {}\n",
            c.name(),
            LABEL_NAMES[report.class_of_interest]
        );
        for f in report.ranking.iter().take(5) {
            let _ = writeln!(s, "- {}: mean |phi| {:.4}", f.feature, f.importance);
        }
    }
    if let Some(cl) = &p.clusters {
        let _ = writeln!(s, "\n## Clusters of mid-scale rating distributions\n");
        let _ = writeln!(s, "| cluster | size | centroid |");
        let _ = writeln!(s, "|---|---|---|");
        for (i, (size, c)) in cl.sizes.iter().zip(&cl.centroids).enumerate() {
            let cells: Vec<String> = c.iter().map(|v| format!("{v:.2}")).collect();
            let _ = writeln!(s, "| {} | {size} | {} |", i + 1, cells.join(" "));
        }
    }
    s
}
