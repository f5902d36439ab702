//! Domain types for rating norms and the elementary arithmetic on them.
//!
//! Ratings are held canonically as per-category counts. A long list of
//! per-rater ratings is folded into counts on construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WordClass {
    Noun,
    Verb,
    Adjective,
}

impl WordClass {
    pub const ALL: [WordClass; 3] = [WordClass::Noun, WordClass::Verb, WordClass::Adjective];

    /// One-letter code used in the TSV schemas.
    pub fn code(self) -> &'static str {
        match self {
            WordClass::Noun => "N",
            WordClass::Verb => "V",
            WordClass::Adjective => "A",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WordClass::Noun => "noun",
            WordClass::Verb => "verb",
            WordClass::Adjective => "adjective",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" | "noun" => Ok(WordClass::Noun),
            "v" | "verb" => Ok(WordClass::Verb),
            "a" | "adj" | "adjective" => Ok(WordClass::Adjective),
            other => Err(Error::InvalidArgument(format!("unknown word class `{other}`"))),
        }
    }
}

/// Closed integer rating scale `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingScale {
    min: u8,
    max: u8,
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1, max: 5 }
    }
}

impl RatingScale {
    pub fn new(min: u8, max: u8) -> Result<Self> {
        if max <= min {
            return Err(Error::InvalidArgument(format!(
                "rating scale needs max > min, got [{min},{max}]"
            )));
        }
        Ok(RatingScale { min, max })
    }

    pub fn min(&self) -> u8 {
        self.min
    }

    pub fn max(&self) -> u8 {
        self.max
    }

    pub fn categories(&self) -> usize {
        (self.max - self.min) as usize + 1
    }

    pub fn midpoint(&self) -> f64 {
        (self.min as f64 + self.max as f64) / 2.0
    }

    pub fn contains(&self, rating: i64) -> bool {
        rating >= self.min as i64 && rating <= self.max as i64
    }

    /// Largest standard deviation attainable at `mean` on this scale
    /// (population divisor): `sqrt((mean - min)(max - mean))`.
    pub fn sd_envelope(&self, mean: f64) -> f64 {
        ((mean - self.min as f64) * (self.max as f64 - mean)).max(0.0).sqrt()
    }
}

/// One rated target: a word, its word class and the per-category counts of
/// the valid ratings it received.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRatings {
    pub word: String,
    pub word_class: WordClass,
    scale: RatingScale,
    counts: Vec<u32>,
}

impl TargetRatings {
    pub fn from_counts(
        word: impl Into<String>,
        word_class: WordClass,
        scale: RatingScale,
        counts: Vec<u32>,
    ) -> Result<Self> {
        if counts.len() != scale.categories() {
            return Err(Error::InvalidArgument(format!(
                "expected {} category counts, got {}",
                scale.categories(),
                counts.len()
            )));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::NoValidRatings);
        }
        Ok(TargetRatings {
            word: word.into(),
            word_class,
            scale,
            counts,
        })
    }

    pub fn from_ratings(
        word: impl Into<String>,
        word_class: WordClass,
        scale: RatingScale,
        ratings: &[i64],
    ) -> Result<Self> {
        let mut counts = vec![0u32; scale.categories()];
        for &r in ratings {
            if !scale.contains(r) {
                return Err(Error::InvalidArgument(format!(
                    "rating {r} out of scale [{},{}]",
                    scale.min(),
                    scale.max()
                )));
            }
            counts[(r - scale.min() as i64) as usize] += 1;
        }
        Self::from_counts(word, word_class, scale, counts)
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n_valid(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Expands the counts back into a sorted list of ratings.
    pub fn ratings(&self) -> Vec<i64> {
        let min = self.scale.min() as i64;
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(min + i as i64, c as usize))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub sd: f64,
    pub n_valid: u32,
}

pub fn summarize(ratings: &TargetRatings) -> Result<RatingSummary> {
    let n = ratings.n_valid();
    if n == 0 {
        return Err(Error::NoValidRatings);
    }
    let min = ratings.scale.min() as f64;
    let nf = n as f64;
    let mean = ratings
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 * (min + i as f64))
        .sum::<f64>()
        / nf;
    let var = ratings
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = min + i as f64 - mean;
            c as f64 * d * d
        })
        .sum::<f64>()
        / nf;
    // A single occupied category has exactly zero spread.
    let occupied = ratings.counts.iter().filter(|&&c| c > 0).count();
    let sd = if occupied == 1 { 0.0 } else { var.sqrt() };
    Ok(RatingSummary { mean, sd, n_valid: n })
}

/// A rated target together with its summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub ratings: TargetRatings,
    pub summary: RatingSummary,
}

impl Target {
    pub fn new(ratings: TargetRatings) -> Result<Self> {
        let summary = summarize(&ratings)?;
        Ok(Target { ratings, summary })
    }

    pub fn word(&self) -> &str {
        &self.ratings.word
    }

    pub fn word_class(&self) -> WordClass {
        self.ratings.word_class
    }

    pub fn key(&self) -> (&str, WordClass) {
        (&self.ratings.word, self.ratings.word_class)
    }
}

/// Relative frequencies over the rating categories, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionVector(Vec<f64>);

impl DistributionVector {
    /// Validates non-negativity and unit mass (within 1e-9).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "distribution entries must be finite and non-negative".into(),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(DistributionVector(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Recovers integer counts for a known number of ratings.
    pub fn to_counts(&self, n_valid: u32) -> Vec<u32> {
        self.0
            .iter()
            .map(|p| (p * n_valid as f64).round() as u32)
            .collect()
    }
}

pub fn relative_frequency_vector(ratings: &TargetRatings) -> Result<DistributionVector> {
    let n = ratings.n_valid();
    if n == 0 {
        return Err(Error::NoValidRatings);
    }
    let p = ratings
        .counts
        .iter()
        .map(|&c| c as f64 / n as f64)
        .collect();
    Ok(DistributionVector(p))
}
