//! The 13 target characteristics used by correlation, classification and
//! attribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    AmbiguityTable, AssociationRecord, CorpusTable, Modality, SensorimotorTable, VadTable,
};
use crate::model::WordClass;
use crate::stats::{association_diversity, ResponseSet};

pub const N_FEATURES: usize = 13;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "auditory",
    "gustatory",
    "haptic",
    "olfactory",
    "visual",
    "valence",
    "affect",
    "dominance",
    "frequency",
    "ambiguity",
    "r1",
    "r12",
    "r123",
];

pub const FREQUENCY: usize = 8;
pub const AMBIGUITY: usize = 9;

/// Looks up a feature column by name. `arousal` is accepted for `affect`.
pub fn feature_index(name: &str) -> Option<usize> {
    let name = name.to_ascii_lowercase();
    let name = if name == "arousal" { "affect" } else { name.as_str() };
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureFamily {
    Sense,
    Emotion,
    Lexicon,
    Diversity,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 4] = [
        FeatureFamily::Sense,
        FeatureFamily::Emotion,
        FeatureFamily::Lexicon,
        FeatureFamily::Diversity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::Sense => "sense",
            FeatureFamily::Emotion => "emotion",
            FeatureFamily::Lexicon => "lexicon",
            FeatureFamily::Diversity => "diversity",
        }
    }

    pub fn columns(self) -> std::ops::Range<usize> {
        match self {
            FeatureFamily::Sense => 0..5,
            FeatureFamily::Emotion => 5..8,
            FeatureFamily::Lexicon => 8..10,
            FeatureFamily::Diversity => 10..13,
        }
    }
}

/// Feature vector of one target. Missing features hold 0 and are flagged
/// in `missing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicProfile {
    pub values: [f64; N_FEATURES],
    pub missing: [bool; N_FEATURES],
}

impl Default for CharacteristicProfile {
    fn default() -> Self {
        CharacteristicProfile {
            values: [0.0; N_FEATURES],
            missing: [true; N_FEATURES],
        }
    }
}

impl CharacteristicProfile {
    pub fn get(&self, i: usize) -> Option<f64> {
        (!self.missing[i]).then_some(self.values[i])
    }

    fn set(&mut self, i: usize, v: f64) {
        self.values[i] = v;
        self.missing[i] = false;
    }
}

/// Diversity scores per cue in R1, R12, R123 order.
pub type DiversityTable = BTreeMap<String, [Option<f64>; 3]>;

pub fn diversity_table(records: &[AssociationRecord]) -> DiversityTable {
    let mut by_cue: BTreeMap<&str, Vec<&AssociationRecord>> = BTreeMap::new();
    for r in records {
        by_cue.entry(r.cue.as_str()).or_default().push(r);
    }
    by_cue
        .into_iter()
        .map(|(cue, recs)| {
            let scores = ResponseSet::ALL.map(|s| association_diversity(recs.iter().copied(), s));
            (cue.to_string(), scores)
        })
        .collect()
}

/// Every characteristic resource, keyed for lookup.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub sensorimotor: SensorimotorTable,
    pub vad: VadTable,
    pub corpus: CorpusTable,
    pub ambiguity: AmbiguityTable,
    pub diversity: DiversityTable,
}

impl Resources {
    pub fn profile(&self, word: &str, word_class: WordClass) -> CharacteristicProfile {
        let mut p = CharacteristicProfile::default();
        if let Some(s) = self.sensorimotor.get(word) {
            for m in Modality::ALL {
                p.set(m as usize, s.get(m));
            }
        }
        if let Some(e) = self.vad.get(word) {
            p.set(5, e.valence);
            p.set(6, e.affect);
            p.set(7, e.dominance);
        }
        let key = (word.to_string(), word_class);
        if let Some(c) = self.corpus.get(&key) {
            p.set(FREQUENCY, (c.frequency.max(1) as f64).log10());
        }
        // Sense counts are not defined for adjectives.
        if word_class != WordClass::Adjective {
            if let Some(a) = self.ambiguity.get(&key) {
                p.set(AMBIGUITY, a.bin.value() as f64);
            }
        }
        if let Some(d) = self.diversity.get(word) {
            for (i, v) in d.iter().enumerate() {
                if let Some(v) = v {
                    p.set(10 + i, *v);
                }
            }
        }
        p
    }
}

/// Resolves feature names to column indices.
pub fn columns_by_name<S: AsRef<str>>(names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            feature_index(n.as_ref())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{}`", n.as_ref())))
        })
        .collect()
}
