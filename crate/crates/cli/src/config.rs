//! Run configuration: flags override the key=value config file, which
//! overrides built-in defaults. `NORMLENS_SEED` is used when neither sets
//! the seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use normlens::classify::Condition;
use normlens::cluster::ClusterConfig;
use normlens::forest::ForestParams;
use normlens::model::WordClass;
use normlens::select::{FilterThresholds, MidScaleDefinition, MidScaleSpec};
use normlens::stats::default_alpha;
use serde::Serialize;

use crate::error::CliError;
use crate::output::Format;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "NORMLENS_SEED";

/// Keys accepted in the config file. Each matches a long flag.
pub const KEYS: [&str; 34] = [
    "ratings",
    "sensorimotor",
    "vad",
    "associations",
    "corpus",
    "ambiguity",
    "pos",
    "pos-dominance-min",
    "frequency-min",
    "pos-agreement",
    "mid-def",
    "sd-min",
    "set-size",
    "condition",
    "trees",
    "max-features",
    "min-samples-leaf",
    "max-depth",
    "folds",
    "families",
    "k",
    "n-init",
    "max-iter",
    "tol",
    "alpha",
    "resamples",
    "shapley-mode",
    "permutations",
    "background",
    "importance-repeats",
    "overlay",
    "seed",
    "out",
    "format",
];

const PATH_KEYS: [&str; 7] = [
    "ratings",
    "sensorimotor",
    "vad",
    "associations",
    "corpus",
    "ambiguity",
    "out",
];

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Flat key=value config file; keys are the long flag names
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Rating norms TSV: `word pos rater rating` or `word pos n1..n5`
    #[arg(long, value_name = "FILE")]
    pub ratings: Option<PathBuf>,
    /// Sensorimotor strengths TSV
    #[arg(long, value_name = "FILE")]
    pub sensorimotor: Option<PathBuf>,
    /// Valence/arousal/dominance TSV
    #[arg(long, value_name = "FILE")]
    pub vad: Option<PathBuf>,
    /// Free association responses TSV
    #[arg(long, value_name = "FILE")]
    pub associations: Option<PathBuf>,
    /// Corpus frequency and POS TSV
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Sense counts TSV
    #[arg(long, value_name = "FILE")]
    pub ambiguity: Option<PathBuf>,

    /// Word class: noun, verb or adjective [default: noun]
    #[arg(long, value_name = "CLASS")]
    pub pos: Option<String>,
    /// Minimum share of the predominant POS tag [default: 0.95]
    #[arg(long, value_name = "X")]
    pub pos_dominance_min: Option<f64>,
    /// Minimum corpus frequency [default: 10000]
    #[arg(long, value_name = "N")]
    pub frequency_min: Option<u64>,
    /// Keep targets whose second POS tag disagrees
    #[arg(long)]
    pub no_pos_agreement: bool,

    /// Mid-scale definition: mean, median or median-sd [default: mean]
    #[arg(long, value_name = "DEF")]
    pub mid_def: Option<String>,
    /// Minimum rating SD for median-sd [default: 1.4]
    #[arg(long, value_name = "X")]
    pub sd_min: Option<f64>,
    /// Targets per set [default: 500 nouns, 200 otherwise]
    #[arg(long, value_name = "N")]
    pub set_size: Option<usize>,

    /// Condition name or `all` [default: all for classify, binary_mid/concrete for explain]
    #[arg(long, value_name = "NAME")]
    pub condition: Option<String>,
    /// Trees per forest [default: 500]
    #[arg(long, value_name = "N")]
    pub trees: Option<usize>,
    /// Features tried per split [default: ceil(sqrt(d))]
    #[arg(long, value_name = "N")]
    pub max_features: Option<usize>,
    /// Minimum rows per leaf [default: 1]
    #[arg(long, value_name = "N")]
    pub min_samples_leaf: Option<usize>,
    /// Maximum tree depth [default: unlimited]
    #[arg(long, value_name = "N")]
    pub max_depth: Option<usize>,
    /// Cross-validation folds [default: 10]
    #[arg(long, value_name = "N")]
    pub folds: Option<usize>,
    /// Also classify with each feature family alone
    #[arg(long)]
    pub families: bool,

    /// Number of clusters [default: 3]
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// k-means restarts [default: 10]
    #[arg(long, value_name = "N")]
    pub n_init: Option<usize>,
    /// Lloyd iterations per restart [default: 300]
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,
    /// Inertia change that ends a restart [default: 1e-6]
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,

    /// Significance level [default: 0.001 nouns, 0.05 otherwise]
    #[arg(long, value_name = "X")]
    pub alpha: Option<f64>,
    /// Resamples for permutation p-values [default: 9999]
    #[arg(long, value_name = "N")]
    pub resamples: Option<usize>,

    /// Shapley mode: exact or monte-carlo [default: exact]
    #[arg(long, value_name = "MODE")]
    pub shapley_mode: Option<String>,
    /// Permutations per sample in monte-carlo mode [default: 2000]
    #[arg(long, value_name = "N")]
    pub permutations: Option<usize>,
    /// Background rows for Shapley values [default: 100]
    #[arg(long, value_name = "N")]
    pub background: Option<usize>,
    /// Shuffles per feature for permutation importance [default: 10]
    #[arg(long, value_name = "N")]
    pub importance_repeats: Option<usize>,

    /// Characteristic overlaid on the croissant plot
    #[arg(long, value_name = "FEATURE")]
    pub overlay: Option<String>,

    /// Master seed for every randomized stage [default: $NORMLENS_SEED or 42]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory [default: normlens-out]
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Table format [default: tsv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the outputs of prerequisite stages
    #[arg(long)]
    pub pipeline: bool,
}

impl Options {
    fn flag_pairs(&self) -> Vec<(&'static str, String)> {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(ToString::to_string)
        }
        fn p(v: &Option<PathBuf>) -> Option<String> {
            v.as_ref().map(|p| p.display().to_string())
        }
        let pairs = [
            ("ratings", p(&self.ratings)),
            ("sensorimotor", p(&self.sensorimotor)),
            ("vad", p(&self.vad)),
            ("associations", p(&self.associations)),
            ("corpus", p(&self.corpus)),
            ("ambiguity", p(&self.ambiguity)),
            ("pos", s(&self.pos)),
            ("pos-dominance-min", s(&self.pos_dominance_min)),
            ("frequency-min", s(&self.frequency_min)),
            ("pos-agreement", self.no_pos_agreement.then(|| "false".into())),
            ("mid-def", s(&self.mid_def)),
            ("sd-min", s(&self.sd_min)),
            ("set-size", s(&self.set_size)),
            ("condition", s(&self.condition)),
            ("trees", s(&self.trees)),
            ("max-features", s(&self.max_features)),
            ("min-samples-leaf", s(&self.min_samples_leaf)),
            ("max-depth", s(&self.max_depth)),
            ("folds", s(&self.folds)),
            ("families", self.families.then(|| "true".into())),
            ("k", s(&self.k)),
            ("n-init", s(&self.n_init)),
            ("max-iter", s(&self.max_iter)),
            ("tol", s(&self.tol)),
            ("alpha", s(&self.alpha)),
            ("resamples", s(&self.resamples)),
            ("shapley-mode", s(&self.shapley_mode)),
            ("permutations", s(&self.permutations)),
            ("background", s(&self.background)),
            ("importance-repeats", s(&self.importance_repeats)),
            ("overlay", s(&self.overlay)),
            ("seed", s(&self.seed)),
            ("out", p(&self.out)),
            ("format", self.format.map(|f| f.extension().to_string())),
        ];
        pairs.into_iter().filter_map(|(k, v)| Some((k, v?))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
    Env,
}

#[derive(Debug, Clone, Default)]
struct Settings(BTreeMap<&'static str, (String, Origin)>);

impl Settings {
    fn error(&self, key: &str, message: String) -> CliError {
        match self.0.get(key).map(|(_, o)| o) {
            Some(Origin::File { path, line }) => CliError::Config {
                path: path.clone(),
                line: *line,
                message,
            },
            Some(Origin::Env) => CliError::Usage(format!("{SEED_ENV}: {message}")),
            _ => CliError::Usage(format!("--{key}: {message}")),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(v, _)| v.as_str())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| self.error(key, format!("invalid value `{v}`: {e}")))
            })
            .transpose()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
/// Relative paths are taken relative to the file's directory.
fn read_config_file(path: &Path, settings: &mut Settings) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let (k, v) = trimmed
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got `{trimmed}`")))?;
        let k = k.trim().replace('_', "-");
        let v = v.trim();
        let key = KEYS
            .iter()
            .find(|known| **known == k)
            .ok_or_else(|| err(format!("unknown key `{k}`")))?;
        if v.is_empty() {
            return Err(err(format!("empty value for `{k}`")));
        }
        let value = if PATH_KEYS.contains(key) && Path::new(v).is_relative() {
            base.join(v).display().to_string()
        } else {
            v.to_string()
        };
        settings.0.insert(
            key,
            (
                value,
                Origin::File {
                    path: path.to_path_buf(),
                    line: line_no,
                },
            ),
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapleyChoice {
    Exact,
    MonteCarlo,
}

impl FromStr for ShapleyChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "exact" => Ok(ShapleyChoice::Exact),
            "monte-carlo" | "mc" => Ok(ShapleyChoice::MonteCarlo),
            _ => Err("expected exact or monte-carlo".into()),
        }
    }
}

/// `all` or one condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum ConditionChoice {
    All,
    One(Condition),
}

impl From<ConditionChoice> for String {
    fn from(c: ConditionChoice) -> String {
        match c {
            ConditionChoice::All => "all".into(),
            ConditionChoice::One(c) => c.name().into(),
        }
    }
}

impl ConditionChoice {
    pub fn conditions(self) -> Vec<Condition> {
        match self {
            ConditionChoice::All => Condition::ALL.to_vec(),
            ConditionChoice::One(c) => vec![c],
        }
    }
}

impl FromStr for ConditionChoice {
    type Err = normlens::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(ConditionChoice::All)
        } else {
            s.parse().map(ConditionChoice::One)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResourceFiles {
    pub ratings: Option<PathBuf>,
    pub sensorimotor: Option<PathBuf>,
    pub vad: Option<PathBuf>,
    pub associations: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub ambiguity: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub resources: ResourceFiles,
    pub word_class: WordClass,
    pub thresholds: FilterThresholds,
    pub mid_definition: MidScaleDefinition,
    pub mid_spec: MidScaleSpec,
    pub condition: Option<ConditionChoice>,
    pub forest: ForestParams,
    pub folds: usize,
    pub families: bool,
    pub cluster: ClusterConfig,
    pub alpha: f64,
    pub resamples: usize,
    pub shapley_mode: ShapleyChoice,
    pub permutations: usize,
    pub background: usize,
    pub importance_repeats: usize,
    pub overlay: Option<String>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub pipeline: bool,
}

impl RunConfig {
    pub fn resolve(opts: &Options, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &opts.config {
            read_config_file(path, &mut s)?;
        }
        for (k, v) in opts.flag_pairs() {
            s.0.insert(k, (v, Origin::Flag));
        }
        if s.raw("seed").is_none() {
            if let Some(v) = env_seed {
                s.0.insert("seed", (v.to_string(), Origin::Env));
            }
        }
        let word_class: WordClass = s.parse::<WordClass>("pos")?.unwrap_or(WordClass::Noun);
        let defaults = FilterThresholds::default();
        let thresholds = FilterThresholds {
            pos_dominance_min: s.parse("pos-dominance-min")?.unwrap_or(defaults.pos_dominance_min),
            frequency_min: s.parse("frequency-min")?.unwrap_or(defaults.frequency_min),
            require_pos_agreement: s.parse("pos-agreement")?.unwrap_or(defaults.require_pos_agreement),
        };
        thresholds
            .validate()
            .map_err(|e| s.error("pos-dominance-min", e.to_string()))?;

        let mid_definition: MidScaleDefinition =
            s.parse("mid-def")?.unwrap_or(MidScaleDefinition::Mean);
        let mut mid_spec = MidScaleSpec::for_class(word_class, mid_definition);
        if let Some(v) = s.parse("sd-min")? {
            mid_spec.sd_min = v;
        }
        if let Some(v) = s.parse("set-size")? {
            mid_spec.set_size = v;
        }
        mid_spec
            .validate()
            .map_err(|e| s.error("set-size", e.to_string()))?;

        let master_seed = s.parse("seed")?.unwrap_or(DEFAULT_SEED);
        let forest_defaults = ForestParams::default();
        let forest = ForestParams {
            n_trees: s.parse("trees")?.unwrap_or(forest_defaults.n_trees),
            max_features: s.parse("max-features")?,
            min_samples_leaf: s.parse("min-samples-leaf")?.unwrap_or(1),
            max_depth: s.parse("max-depth")?,
            bootstrap: true,
            seed: master_seed,
        };
        if forest.n_trees == 0 || forest.min_samples_leaf == 0 || forest.max_features == Some(0) {
            return Err(s.error("trees", "trees, max-features and min-samples-leaf must be >= 1".into()));
        }
        let cluster_defaults = ClusterConfig::default();
        let cluster = ClusterConfig {
            k: s.parse("k")?.unwrap_or(cluster_defaults.k),
            max_iter: s.parse("max-iter")?.unwrap_or(cluster_defaults.max_iter),
            tol: s.parse("tol")?.unwrap_or(cluster_defaults.tol),
            n_init: s.parse("n-init")?.unwrap_or(cluster_defaults.n_init),
            seed: master_seed,
        };
        cluster.validate().map_err(|e| s.error("k", e.to_string()))?;

        let alpha = s.parse("alpha")?.unwrap_or(default_alpha(word_class));
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(s.error("alpha", format!("{alpha} is not in (0, 1)")));
        }
        let folds = s.parse("folds")?.unwrap_or(10);
        if folds < 2 {
            return Err(s.error("folds", "need at least 2 folds".into()));
        }
        let cfg = RunConfig {
            resources: ResourceFiles {
                ratings: s.path("ratings"),
                sensorimotor: s.path("sensorimotor"),
                vad: s.path("vad"),
                associations: s.path("associations"),
                corpus: s.path("corpus"),
                ambiguity: s.path("ambiguity"),
            },
            word_class,
            thresholds,
            mid_definition,
            mid_spec,
            condition: s.parse("condition")?,
            forest,
            folds,
            families: s.parse("families")?.unwrap_or(false),
            cluster,
            alpha,
            resamples: s.parse("resamples")?.unwrap_or(9_999),
            shapley_mode: s.parse("shapley-mode")?.unwrap_or(ShapleyChoice::Exact),
            permutations: s.parse("permutations")?.unwrap_or(2_000),
            background: s.parse("background")?.unwrap_or(100),
            importance_repeats: s.parse("importance-repeats")?.unwrap_or(10),
            overlay: s.raw("overlay").map(str::to_string),
            master_seed,
            output_dir: s.path("out").unwrap_or_else(|| PathBuf::from("normlens-out")),
            format: s.parse::<String>("format")?.map_or(Ok(Format::Tsv), |f| {
                Format::from_str_ci(&f).ok_or_else(|| s.error("format", format!("`{f}` is not tsv or json")))
            })?,
            pipeline: opts.pipeline,
        };
        if cfg.resamples == 0 || cfg.permutations < 2 || cfg.background == 0 || cfg.importance_repeats == 0 {
            return Err(CliError::Usage(
                "resamples, background and importance-repeats must be >= 1 and permutations >= 2".into(),
            ));
        }
        if let Some(o) = &cfg.overlay {
            if normlens::features::feature_index(o).is_none() {
                return Err(s.error("overlay", format!("unknown characteristic `{o}`")));
            }
        }
        Ok(cfg)
    }

    pub fn resource_paths(&self) -> normlens::dataset::ResourcePaths {
        let r = &self.resources;
        normlens::dataset::ResourcePaths {
            ratings: r.ratings.clone(),
            sensorimotor: r.sensorimotor.clone(),
            vad: r.vad.clone(),
            associations: r.associations.clone(),
            corpus: r.corpus.clone(),
            ambiguity: r.ambiguity.clone(),
        }
    }
}

impl Format {
    fn from_str_ci(s: &str) -> Option<Format> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Some(Format::Tsv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.conf");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&Options::default(), None).unwrap();
        assert_eq!(c.word_class, WordClass::Noun);
        assert_eq!(c.master_seed, DEFAULT_SEED);
        assert_eq!(c.forest.seed, DEFAULT_SEED);
        assert_eq!(c.mid_spec.set_size, 500);
        assert_eq!(c.alpha, 0.001);
        assert_eq!(c.format, Format::Tsv);
    }

    #[test]
    fn flags_beat_file_beat_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "# run\npos = verb\nseed = 7\ntrees=50\nratings = data/r.tsv\n");
        let opts = Options {
            config: Some(path.clone()),
            seed: Some(9),
            ..Default::default()
        };
        let c = RunConfig::resolve(&opts, Some("123")).unwrap();
        assert_eq!(c.master_seed, 9);
        assert_eq!(c.word_class, WordClass::Verb);
        assert_eq!(c.forest.n_trees, 50);
        assert_eq!(c.mid_spec.set_size, 200);
        assert_eq!(c.resources.ratings, Some(dir.path().join("data/r.tsv")));

        let opts = Options {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&opts, Some("123")).unwrap().master_seed, 7);
        let c = RunConfig::resolve(&Options::default(), Some("123")).unwrap();
        assert_eq!(c.master_seed, 123);
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "pos = noun\n\nbogus = 1\n");
        let opts = Options {
            config: Some(path),
            ..Default::default()
        };
        let err = RunConfig::resolve(&opts, None).unwrap_err();
        assert!(err.to_string().ends_with("run.conf:3: unknown key `bogus`"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let path = write(dir.path(), "trees = many\n");
        let opts = Options {
            config: Some(path),
            ..Default::default()
        };
        let err = RunConfig::resolve(&opts, None).unwrap_err();
        assert!(err.to_string().contains("run.conf:1: invalid value `many`"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            Options {
                set_size: Some(3),
                ..Default::default()
            },
            Options {
                alpha: Some(1.5),
                ..Default::default()
            },
            Options {
                overlay: Some("smell".into()),
                ..Default::default()
            },
            Options {
                condition: Some("quaternary".into()),
                ..Default::default()
            },
        ];
        for opts in bad {
            assert!(RunConfig::resolve(&opts, None).is_err());
        }
        assert!(RunConfig::resolve(&Options::default(), Some("x")).is_err());
    }
}
