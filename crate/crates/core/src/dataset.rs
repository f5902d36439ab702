//! Loading a set of resource files from disk.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{diversity_table, Resources};
use crate::ingest::{
    parse_ambiguity, parse_associations, parse_corpus, parse_ratings, parse_sensorimotor, parse_vad,
};
use crate::model::{RatingScale, TargetRatings, WordClass};

/// Paths of the six resource files. Only `ratings` is mandatory for every
/// stage; absent characteristic resources leave the features missing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourcePaths {
    pub ratings: Option<PathBuf>,
    pub sensorimotor: Option<PathBuf>,
    pub vad: Option<PathBuf>,
    pub associations: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub ambiguity: Option<PathBuf>,
}

/// File names used by [`ResourcePaths::in_dir`].
pub const FILE_NAMES: [(&str, &str); 6] = [
    ("ratings", "ratings.tsv"),
    ("sensorimotor", "sensorimotor.tsv"),
    ("vad", "vad.tsv"),
    ("associations", "associations.tsv"),
    ("corpus", "corpus.tsv"),
    ("ambiguity", "ambiguity.tsv"),
];

impl ResourcePaths {
    /// Conventional layout: every file that exists under `dir` is used.
    pub fn in_dir(dir: &Path) -> Self {
        let pick = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
        ResourcePaths {
            ratings: pick(FILE_NAMES[0].1),
            sensorimotor: pick(FILE_NAMES[1].1),
            vad: pick(FILE_NAMES[2].1),
            associations: pick(FILE_NAMES[3].1),
            corpus: pick(FILE_NAMES[4].1),
            ambiguity: pick(FILE_NAMES[5].1),
        }
    }

    /// `(resource name, path)` for every configured file.
    pub fn entries(&self) -> Vec<(&'static str, &Path)> {
        [
            &self.ratings,
            &self.sensorimotor,
            &self.vad,
            &self.associations,
            &self.corpus,
            &self.ambiguity,
        ]
        .into_iter()
        .zip(FILE_NAMES)
        .filter_map(|(p, (name, _))| p.as_deref().map(|p| (name, p)))
        .collect()
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load<T>(path: &Option<PathBuf>, parse: impl FnOnce(&str, &str) -> Result<T>) -> Result<Option<T>> {
    path.as_deref()
        .map(|p| parse(&p.display().to_string(), &read_text(p)?))
        .transpose()
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub ratings: Vec<TargetRatings>,
    pub resources: Resources,
}

impl Dataset {
    pub fn load(paths: &ResourcePaths, scale: RatingScale) -> Result<Dataset> {
        let ratings = load(&paths.ratings, |s, t| parse_ratings(s, t, scale))?.unwrap_or_default();
        let associations = load(&paths.associations, parse_associations)?.unwrap_or_default();
        Ok(Dataset {
            ratings,
            resources: Resources {
                sensorimotor: load(&paths.sensorimotor, parse_sensorimotor)?.unwrap_or_default(),
                vad: load(&paths.vad, parse_vad)?.unwrap_or_default(),
                corpus: load(&paths.corpus, parse_corpus)?.unwrap_or_default(),
                ambiguity: load(&paths.ambiguity, parse_ambiguity)?.unwrap_or_default(),
                diversity: diversity_table(&associations),
            },
        })
    }

    pub fn ratings_for(&self, word_class: WordClass) -> Vec<TargetRatings> {
        self.ratings
            .iter()
            .filter(|r| r.word_class == word_class)
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_file_names_the_path() {
        let paths = ResourcePaths {
            vad: Some(PathBuf::from("/nonexistent/vad.tsv")),
            ..Default::default()
        };
        let err = Dataset::load(&paths, RatingScale::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/vad.tsv"));
    }

    #[test]
    fn loads_conventional_layout() {
        let dir = std::env::temp_dir().join(format!("normlens-ds-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("ratings.tsv"),
            "word\tpos\trater\trating\ncat\tN\tr1\t5\ncat\tN\tr2\t4\nrun\tV\tr1\t3\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("associations.tsv"),
            "cue\tparticipant\tr1\tr2\tr3\ncat\tp1\tdog\tmouse\t\ncat\tp2\tdog\t\t\n",
        )
        .unwrap();
        let paths = ResourcePaths::in_dir(&dir);
        assert_eq!(paths.entries().len(), 2);
        let ds = Dataset::load(&paths, RatingScale::default()).unwrap();
        assert_eq!(ds.ratings.len(), 2);
        assert_eq!(ds.ratings_for(WordClass::Verb).len(), 1);
        assert!(ds.resources.diversity.contains_key("cat"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
