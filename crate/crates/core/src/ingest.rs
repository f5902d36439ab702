//! Strict parsers for the canonical TSV resource schemas.
//!
//! All files are UTF-8, tab-separated, with a mandatory header row that must
//! name the columns exactly. Blank lines and lines starting with `#` are
//! skipped. Any malformed row aborts the whole load with a line-numbered
//! diagnostic; nothing is partially loaded.
//!
//! Words are NFC-normalized and lower-cased. Entries containing whitespace
//! (multiword expressions) are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::model::{RatingScale, TargetRatings, WordClass};

pub const SENSORIMOTOR_HEADER: &str = "word\tauditory\tgustatory\thaptic\tolfactory\tvisual";
pub const VAD_HEADER: &str = "word\tvalence\tarousal\tdominance";
/// Accepted alias: the arousal column may be labelled `affect`.
pub const VAD_HEADER_AFFECT: &str = "word\tvalence\taffect\tdominance";
pub const ASSOCIATIONS_HEADER: &str = "cue\tparticipant\tr1\tr2\tr3";
pub const CORPUS_HEADER: &str = "word\tpos\tfreq\tpos_dominance\talt_pos";
pub const AMBIGUITY_HEADER: &str = "word\tpos\tsenses";
pub const RATINGS_LONG_HEADER: &str = "word\tpos\trater\trating";

pub fn ratings_counts_header(scale: RatingScale) -> String {
    let mut h = String::from("word\tpos");
    for i in 1..=scale.categories() {
        write!(h, "\tn{i}").unwrap();
    }
    h
}

/// Perceptual modalities in tie-breaking precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Auditory,
    Gustatory,
    Haptic,
    Olfactory,
    Visual,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::Auditory,
        Modality::Gustatory,
        Modality::Haptic,
        Modality::Olfactory,
        Modality::Visual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Auditory => "auditory",
            Modality::Gustatory => "gustatory",
            Modality::Haptic => "haptic",
            Modality::Olfactory => "olfactory",
            Modality::Visual => "visual",
        }
    }
}

/// Perception strengths on the 0..=5 scale, indexed in [`Modality::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseProfile {
    pub strengths: [f64; 5],
}

impl SenseProfile {
    pub fn new(strengths: [f64; 5]) -> Result<Self> {
        if strengths.iter().any(|v| !(0.0..=5.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "sense strengths must lie in [0,5]".into(),
            ));
        }
        Ok(SenseProfile { strengths })
    }

    pub fn get(&self, m: Modality) -> f64 {
        self.strengths[m as usize]
    }

    /// Argmax modality; ties go to the earliest modality in listed order.
    pub fn dominant(&self) -> Modality {
        let mut best = 0;
        for i in 1..5 {
            if self.strengths[i] > self.strengths[best] {
                best = i;
            }
        }
        Modality::ALL[best]
    }
}

/// Valence / affect (arousal) / dominance, each in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionProfile {
    pub valence: f64,
    pub affect: f64,
    pub dominance: f64,
}

impl EmotionProfile {
    pub fn new(valence: f64, affect: f64, dominance: f64) -> Result<Self> {
        if [valence, affect, dominance]
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidArgument("VAD values must lie in [0,1]".into()));
        }
        Ok(EmotionProfile {
            valence,
            affect,
            dominance,
        })
    }

    pub fn arousal(&self) -> f64 {
        self.affect
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub word: String,
    pub predominant_pos: WordClass,
    pub frequency: u64,
    pub pos_dominance: f64,
    /// Tag assigned by the second corpus, if it is one of the three classes.
    pub alt_pos: Option<WordClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationRecord {
    pub cue: String,
    pub participant: String,
    pub r1: Option<String>,
    pub r2: Option<String>,
    pub r3: Option<String>,
}

impl AssociationRecord {
    pub fn responses(&self) -> [Option<&str>; 3] {
        [self.r1.as_deref(), self.r2.as_deref(), self.r3.as_deref()]
    }
}

/// Sense-count category 1..=7, where 7 collects every count above six.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AmbiguityBin(u8);

impl AmbiguityBin {
    pub const MAX: u8 = 7;

    pub fn from_senses(senses: u32) -> Result<Self> {
        if senses == 0 {
            return Err(Error::InvalidArgument("sense count must be >= 1".into()));
        }
        Ok(AmbiguityBin(senses.min(Self::MAX as u32) as u8))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityEntry {
    pub senses: u32,
    pub bin: AmbiguityBin,
}

pub type SensorimotorTable = BTreeMap<String, SenseProfile>;
pub type VadTable = BTreeMap<String, EmotionProfile>;
pub type CorpusTable = BTreeMap<(String, WordClass), CorpusEntry>;
pub type AmbiguityTable = BTreeMap<(String, WordClass), AmbiguityEntry>;

/// NFC + lower-case. Rejects empty and multiword entries.
pub fn normalize_word(raw: &str) -> std::result::Result<String, String> {
    let w: String = raw.trim().nfc().collect::<String>().to_lowercase();
    if w.is_empty() {
        return Err("empty word".into());
    }
    if w.chars().any(char::is_whitespace) {
        return Err(format!("multiword entry `{w}` not supported"));
    }
    Ok(w)
}

struct Row<'a> {
    line: usize,
    cells: Vec<&'a str>,
}

struct Tsv<'a> {
    source: &'a str,
    header: &'a str,
    header_line: usize,
    rows: Vec<Row<'a>>,
}

impl<'a> Tsv<'a> {
    fn read(source: &'a str, text: &'a str) -> Result<Self> {
        let mut header = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match header {
                None => header = Some((i + 1, line)),
                Some(_) => rows.push(Row {
                    line: i + 1,
                    cells: line.split('\t').collect(),
                }),
            }
        }
        let (header_line, header) =
            header.ok_or_else(|| Error::schema(source, 0, "missing header row"))?;
        Ok(Tsv {
            source,
            header,
            header_line,
            rows,
        })
    }

    fn expect_header(&self, expected: &[&str]) -> Result<&'a str> {
        for e in expected {
            if self.header == *e {
                return Ok(self.header);
            }
        }
        Err(Error::schema(
            self.source,
            self.header_line,
            format!(
                "unexpected header `{}`; expected `{}`",
                self.header.replace('\t', "␉"),
                expected[0].replace('\t', "␉")
            ),
        ))
    }

    fn err(&self, row: &Row, message: impl Into<String>) -> Error {
        Error::schema(self.source, row.line, message)
    }

    fn cells(&self, row: &Row<'a>, n: usize) -> Result<Vec<&'a str>> {
        if row.cells.len() != n {
            return Err(self.err(
                row,
                format!("expected {n} columns, found {}", row.cells.len()),
            ));
        }
        Ok(row.cells.clone())
    }

    fn word(&self, row: &Row, raw: &str) -> Result<String> {
        normalize_word(raw).map_err(|m| self.err(row, m))
    }

    fn pos(&self, row: &Row, raw: &str) -> Result<WordClass> {
        raw.parse()
            .map_err(|_| self.err(row, format!("unknown part of speech `{}`", raw.trim())))
    }

    fn real(&self, row: &Row, column: &str, raw: &str) -> Result<f64> {
        match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(row, format!("{column}: `{raw}` is not a finite number"))),
        }
    }

    fn real_in(&self, row: &Row, column: &str, raw: &str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.real(row, column, raw)?;
        if !(lo..=hi).contains(&v) {
            return Err(self.err(row, format!("{column} value {v} outside [{lo},{hi}]")));
        }
        Ok(v)
    }

    fn integer(&self, row: &Row, column: &str, raw: &str) -> Result<i64> {
        raw.trim()
            .parse::<i64>()
            .map_err(|_| self.err(row, format!("{column}: `{raw}` is not an integer")))
    }
}

/// Parses ratings in either long form (`word pos rater rating`) or counts
/// form (`word pos n1 .. nK`). Output is sorted by (word, pos).
pub fn parse_ratings(source: &str, text: &str, scale: RatingScale) -> Result<Vec<TargetRatings>> {
    let tsv = Tsv::read(source, text)?;
    let counts_header = ratings_counts_header(scale);
    let header = tsv.expect_header(&[RATINGS_LONG_HEADER, &counts_header])?;
    let k = scale.categories();
    let mut grouped: BTreeMap<(String, WordClass), Vec<u32>> = BTreeMap::new();

    if header == RATINGS_LONG_HEADER {
        let mut raters: BTreeSet<(String, WordClass, String)> = BTreeSet::new();
        for row in &tsv.rows {
            let c = tsv.cells(row, 4)?;
            let word = tsv.word(row, c[0])?;
            let pos = tsv.pos(row, c[1])?;
            let rater = c[2].trim().to_string();
            if rater.is_empty() {
                return Err(tsv.err(row, "empty rater id"));
            }
            let rating = tsv.integer(row, "rating", c[3])?;
            if !scale.contains(rating) {
                return Err(tsv.err(
                    row,
                    format!("rating out of scale [{},{}]", scale.min(), scale.max()),
                ));
            }
            if !raters.insert((word.clone(), pos, rater.clone())) {
                return Err(tsv.err(
                    row,
                    format!("duplicate rating by rater `{rater}` for `{word}` ({pos})"),
                ));
            }
            let counts = grouped.entry((word, pos)).or_insert_with(|| vec![0; k]);
            counts[(rating - scale.min() as i64) as usize] += 1;
        }
    } else {
        for row in &tsv.rows {
            let c = tsv.cells(row, 2 + k)?;
            let word = tsv.word(row, c[0])?;
            let pos = tsv.pos(row, c[1])?;
            let mut counts = Vec::with_capacity(k);
            for (i, raw) in c[2..].iter().enumerate() {
                let v = tsv.integer(row, &format!("n{}", i + 1), raw)?;
                if v < 0 || v > u32::MAX as i64 {
                    return Err(tsv.err(row, format!("n{}: invalid count {v}", i + 1)));
                }
                counts.push(v as u32);
            }
            if counts.iter().all(|&n| n == 0) {
                return Err(tsv.err(row, "no valid ratings"));
            }
            if grouped.insert((word.clone(), pos), counts).is_some() {
                return Err(tsv.err(row, format!("duplicate entry `{word}` ({pos})")));
            }
        }
    }

    grouped
        .into_iter()
        .map(|((word, pos), counts)| TargetRatings::from_counts(word, pos, scale, counts))
        .collect()
}

pub fn parse_sensorimotor(source: &str, text: &str) -> Result<SensorimotorTable> {
    let tsv = Tsv::read(source, text)?;
    tsv.expect_header(&[SENSORIMOTOR_HEADER])?;
    let mut out = BTreeMap::new();
    for row in &tsv.rows {
        let c = tsv.cells(row, 6)?;
        let word = tsv.word(row, c[0])?;
        let mut strengths = [0.0; 5];
        for (i, m) in Modality::ALL.iter().enumerate() {
            strengths[i] = tsv.real_in(row, m.name(), c[i + 1], 0.0, 5.0)?;
        }
        if out.insert(word.clone(), SenseProfile { strengths }).is_some() {
            return Err(tsv.err(row, format!("duplicate entry `{word}`")));
        }
    }
    Ok(out)
}

pub fn parse_vad(source: &str, text: &str) -> Result<VadTable> {
    let tsv = Tsv::read(source, text)?;
    tsv.expect_header(&[VAD_HEADER, VAD_HEADER_AFFECT])?;
    let mut out = BTreeMap::new();
    for row in &tsv.rows {
        let c = tsv.cells(row, 4)?;
        let word = tsv.word(row, c[0])?;
        let profile = EmotionProfile {
            valence: tsv.real_in(row, "valence", c[1], 0.0, 1.0)?,
            affect: tsv.real_in(row, "arousal", c[2], 0.0, 1.0)?,
            dominance: tsv.real_in(row, "dominance", c[3], 0.0, 1.0)?,
        };
        if out.insert(word.clone(), profile).is_some() {
            return Err(tsv.err(row, format!("duplicate entry `{word}`")));
        }
    }
    Ok(out)
}

/// Rows may omit trailing empty cells; responses must fill left to right.
pub fn parse_associations(source: &str, text: &str) -> Result<Vec<AssociationRecord>> {
    let tsv = Tsv::read(source, text)?;
    tsv.expect_header(&[ASSOCIATIONS_HEADER])?;
    let mut out = Vec::with_capacity(tsv.rows.len());
    let mut seen = BTreeSet::new();
    for row in &tsv.rows {
        if !(2..=5).contains(&row.cells.len()) {
            return Err(tsv.err(
                row,
                format!("expected 2 to 5 columns, found {}", row.cells.len()),
            ));
        }
        let cue = tsv.word(row, row.cells[0])?;
        let participant = row.cells[1].trim().to_string();
        if participant.is_empty() {
            return Err(tsv.err(row, "empty participant id"));
        }
        let mut r: [Option<String>; 3] = Default::default();
        for (i, slot) in r.iter_mut().enumerate() {
            *slot = row
                .cells
                .get(i + 2)
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(str::to_string);
        }
        if (r[1].is_some() && r[0].is_none()) || (r[2].is_some() && r[1].is_none()) {
            return Err(tsv.err(row, "non-contiguous responses"));
        }
        if !seen.insert((cue.clone(), participant.clone())) {
            return Err(tsv.err(
                row,
                format!("duplicate record for cue `{cue}`, participant `{participant}`"),
            ));
        }
        let [r1, r2, r3] = r;
        out.push(AssociationRecord {
            cue,
            participant,
            r1,
            r2,
            r3,
        });
    }
    Ok(out)
}

pub fn parse_corpus(source: &str, text: &str) -> Result<CorpusTable> {
    let tsv = Tsv::read(source, text)?;
    tsv.expect_header(&[CORPUS_HEADER])?;
    let mut out = BTreeMap::new();
    for row in &tsv.rows {
        let c = tsv.cells(row, 5)?;
        let word = tsv.word(row, c[0])?;
        let pos = tsv.pos(row, c[1])?;
        let freq = tsv.integer(row, "freq", c[2])?;
        if freq < 0 {
            return Err(tsv.err(row, format!("freq: negative count {freq}")));
        }
        let pos_dominance = tsv.real_in(row, "pos_dominance", c[3], 0.0, 1.0)?;
        let alt_pos = match c[4].trim() {
            "" | "-" => None,
            raw => Some(tsv.pos(row, raw)?),
        };
        let entry = CorpusEntry {
            word: word.clone(),
            predominant_pos: pos,
            frequency: freq as u64,
            pos_dominance,
            alt_pos,
        };
        if out.insert((word.clone(), pos), entry).is_some() {
            return Err(tsv.err(row, format!("duplicate entry `{word}` ({pos})")));
        }
    }
    Ok(out)
}

pub fn parse_ambiguity(source: &str, text: &str) -> Result<AmbiguityTable> {
    let tsv = Tsv::read(source, text)?;
    tsv.expect_header(&[AMBIGUITY_HEADER])?;
    let mut out = BTreeMap::new();
    for row in &tsv.rows {
        let c = tsv.cells(row, 3)?;
        let word = tsv.word(row, c[0])?;
        let pos = tsv.pos(row, c[1])?;
        let senses = tsv.integer(row, "senses", c[2])?;
        if senses < 1 || senses > u32::MAX as i64 {
            return Err(tsv.err(row, format!("senses must be >= 1, got {senses}")));
        }
        let senses = senses as u32;
        let entry = AmbiguityEntry {
            senses,
            bin: AmbiguityBin::from_senses(senses).expect("checked above"),
        };
        if out.insert((word.clone(), pos), entry).is_some() {
            return Err(tsv.err(row, format!("duplicate entry `{word}` ({pos})")));
        }
    }
    Ok(out)
}

// Canonical writers. Rows come out sorted; numbers use the shortest
// representation that parses back to the same value.

pub fn write_ratings(ratings: &[TargetRatings], scale: RatingScale) -> String {
    let mut rows: Vec<&TargetRatings> = ratings.iter().collect();
    rows.sort_by(|a, b| (&a.word, a.word_class).cmp(&(&b.word, b.word_class)));
    let mut out = ratings_counts_header(scale);
    out.push('\n');
    for t in rows {
        write!(out, "{}\t{}", t.word, t.word_class).unwrap();
        for c in t.counts() {
            write!(out, "\t{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_sensorimotor(table: &SensorimotorTable) -> String {
    let mut out = format!("{SENSORIMOTOR_HEADER}\n");
    for (w, p) in table {
        out.push_str(w);
        for v in p.strengths {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_vad(table: &VadTable) -> String {
    let mut out = format!("{VAD_HEADER}\n");
    for (w, p) in table {
        writeln!(out, "{w}\t{}\t{}\t{}", p.valence, p.affect, p.dominance).unwrap();
    }
    out
}

pub fn write_associations(records: &[AssociationRecord]) -> String {
    let mut rows: Vec<&AssociationRecord> = records.iter().collect();
    rows.sort_by(|a, b| (&a.cue, &a.participant).cmp(&(&b.cue, &b.participant)));
    let mut out = format!("{ASSOCIATIONS_HEADER}\n");
    for r in rows {
        let [r1, r2, r3] = r.responses();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.cue,
            r.participant,
            r1.unwrap_or(""),
            r2.unwrap_or(""),
            r3.unwrap_or("")
        )
        .unwrap();
    }
    out
}

pub fn write_corpus(table: &CorpusTable) -> String {
    let mut out = format!("{CORPUS_HEADER}\n");
    for e in table.values() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.word,
            e.predominant_pos,
            e.frequency,
            e.pos_dominance,
            e.alt_pos.map(WordClass::code).unwrap_or("")
        )
        .unwrap();
    }
    out
}

pub fn write_ambiguity(table: &AmbiguityTable) -> String {
    let mut out = format!("{AMBIGUITY_HEADER}\n");
    for ((w, pos), e) in table {
        writeln!(out, "{w}\t{pos}\t{}", e.senses).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::summarize;
    use proptest::prelude::*;

    fn line_of(err: Error) -> usize {
        match err {
            Error::Schema { line, .. } => line,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn counts_form_ratings() {
        let text = "word\tpos\tn1\tn2\tn3\tn4\tn5\ndiscussion\tN\t4\t2\t13\t4\t4\n";
        let r = parse_ratings("r.tsv", text, RatingScale::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].word, "discussion");
        assert_eq!(r[0].n_valid(), 27);
    }

    #[test]
    fn long_form_unanimous() {
        let mut text = String::from("# comment\nword\tpos\trater\trating\n");
        for i in 0..25 {
            text.push_str(&format!("cat\tN\tr{i:02}\t5\n"));
        }
        let r = parse_ratings("r.tsv", &text, RatingScale::default()).unwrap();
        assert_eq!(r[0].n_valid(), 25);
        assert_eq!(summarize(&r[0]).unwrap().mean, 5.0);
    }

    #[test]
    fn rating_out_of_scale() {
        let text = "word\tpos\trater\trating\nx\tN\tr01\t6\n";
        let err = parse_ratings("r.tsv", text, RatingScale::default()).unwrap_err();
        assert!(err.to_string().contains("rating out of scale [1,5]"), "{err}");
        assert_eq!(line_of(err), 2);
    }

    #[test]
    fn non_integer_rating_rejected() {
        let text = "word\tpos\trater\trating\nx\tN\tr01\t3.5\n";
        assert!(parse_ratings("r.tsv", text, RatingScale::default()).is_err());
    }

    #[test]
    fn duplicate_rater_rejected() {
        let text = "word\tpos\trater\trating\nx\tN\tr01\t3\n\nx\tN\tr01\t4\n";
        let err = parse_ratings("r.tsv", text, RatingScale::default()).unwrap_err();
        assert_eq!(line_of(err), 4);
    }

    #[test]
    fn duplicate_counts_row_rejected() {
        let text = "word\tpos\tn1\tn2\tn3\tn4\tn5\nx\tN\t1\t1\t1\t1\t1\nX\tN\t1\t1\t1\t1\t1\n";
        assert!(parse_ratings("r.tsv", text, RatingScale::default()).is_err());
    }

    #[test]
    fn long_and_counts_forms_agree() {
        let long = "word\tpos\trater\trating\nb\tV\tp1\t2\na\tN\tp1\t1\na\tN\tp2\t1\na\tN\tp3\t4\n";
        let counts = "word\tpos\tn1\tn2\tn3\tn4\tn5\na\tN\t2\t0\t0\t1\t0\nb\tV\t0\t1\t0\t0\t0\n";
        let s = RatingScale::default();
        assert_eq!(
            parse_ratings("l", long, s).unwrap(),
            parse_ratings("c", counts, s).unwrap()
        );
    }

    #[test]
    fn multiword_and_header_checks() {
        let s = RatingScale::default();
        let text = "word\tpos\tn1\tn2\tn3\tn4\tn5\nice cream\tN\t1\t1\t1\t1\t1\n";
        assert!(parse_ratings("r", text, s).unwrap_err().to_string().contains("multiword"));
        let text = "word\tpos\tcount\nx\tN\t1\n";
        assert_eq!(line_of(parse_ratings("r", text, s).unwrap_err()), 1);
        assert_eq!(line_of(parse_ratings("r", "# only comments\n", s).unwrap_err()), 0);
    }

    #[test]
    fn words_are_normalized() {
        // "Cafe\u{301}" decomposed vs precomposed.
        let text = "word\tvalence\tarousal\tdominance\nCafe\u{301}\t0.5\t0.5\t0.5\n";
        let t = parse_vad("v", text).unwrap();
        assert!(t.contains_key("caf\u{e9}"));
    }

    #[test]
    fn sensorimotor_rows() {
        let text = format!("{SENSORIMOTOR_HEADER}\nthunder\t4.8\t0.1\t0.3\t0.2\t2.0\nx\t0\t0\t0\t0\t0\n");
        let t = parse_sensorimotor("s", &text).unwrap();
        assert_eq!(t["thunder"].dominant(), Modality::Auditory);
        assert_eq!(t["x"].dominant(), Modality::Auditory);
        let bad = format!("{SENSORIMOTOR_HEADER}\nx\t5.1\t0\t0\t0\t0\n");
        assert_eq!(line_of(parse_sensorimotor("s", &bad).unwrap_err()), 2);
        let p = SenseProfile::new([1.0, 1.0, 3.0, 0.0, 3.0]).unwrap();
        assert_eq!(p.dominant(), Modality::Haptic);
    }

    #[test]
    fn vad_rows() {
        let t = parse_vad("v", "word\tvalence\tarousal\tdominance\nwar\t0.07\t0.85\t0.41\nx\t0\t0\t0\n")
            .unwrap();
        assert_eq!(t["war"], EmotionProfile::new(0.07, 0.85, 0.41).unwrap());
        assert_eq!(t["war"].arousal(), 0.85);
        assert_eq!(t["x"], EmotionProfile::new(0.0, 0.0, 0.0).unwrap());
        let alias = parse_vad("v", "word\tvalence\taffect\tdominance\nwar\t0.07\t0.85\t0.41\n").unwrap();
        assert_eq!(alias["war"].affect, 0.85);
        assert!(parse_vad("v", "word\tvalence\tarousal\tdominance\nx\t1.2\t0\t0\n").is_err());
    }

    #[test]
    fn association_rows() {
        let text = "cue\tparticipant\tr1\tr2\tr3\ndog\tp1\tcat\tbone\tleash\ndog\tp2\tcat\t\t\n";
        let r = parse_associations("a", text).unwrap();
        assert_eq!(r[0].responses(), [Some("cat"), Some("bone"), Some("leash")]);
        assert_eq!(r[1].responses(), [Some("cat"), None, None]);
        let bad = "cue\tparticipant\tr1\tr2\tr3\ndog\tp3\t\tbone\t\n";
        let err = parse_associations("a", bad).unwrap_err();
        assert!(err.to_string().contains("non-contiguous responses"));
        // Trailing empty cells may be dropped entirely.
        let short = "cue\tparticipant\tr1\tr2\tr3\ndog\tp4\tcat\n";
        assert_eq!(parse_associations("a", short).unwrap()[0].r1.as_deref(), Some("cat"));
    }

    #[test]
    fn corpus_and_ambiguity_rows() {
        let text = "word\tpos\tfreq\tpos_dominance\talt_pos\nx\tN\t9999\t0.97\tN\ny\tV\t20000\t0.5\t\n";
        let c = parse_corpus("c", text).unwrap();
        assert_eq!(c[&("x".into(), WordClass::Noun)].frequency, 9999);
        assert_eq!(c[&("y".into(), WordClass::Verb)].alt_pos, None);
        let bad = "word\tpos\tfreq\tpos_dominance\talt_pos\nx\tN\t1\t1.5\tN\n";
        assert!(parse_corpus("c", bad).is_err());

        let text = "word\tpos\tsenses\na\tN\t6\nb\tN\t9\nc\tV\t1\n";
        let a = parse_ambiguity("w", text).unwrap();
        assert_eq!(a[&("a".into(), WordClass::Noun)].bin.value(), 6);
        assert_eq!(a[&("b".into(), WordClass::Noun)].bin.value(), 7);
        assert_eq!(a[&("c".into(), WordClass::Verb)].bin.value(), 1);
        assert!(parse_ambiguity("w", "word\tpos\tsenses\na\tN\t0\n").is_err());
    }

    fn arb_word() -> impl Strategy<Value = String> {
        "[a-z]{1,8}"
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonical_files_round_trip(
            ratings in prop::collection::btree_map((arb_word(), 0usize..3), prop::collection::vec(0u32..9, 5), 1..20),
            senses in prop::collection::btree_map(arb_word(), prop::collection::vec(0u32..=50, 5), 0..20),
            vad in prop::collection::btree_map(arb_word(), prop::collection::vec(0u32..=1000, 3), 0..20),
            corpus in prop::collection::btree_map((arb_word(), 0usize..3), (0u64..10_000_000, 0u32..=100, prop::option::of(0usize..3)), 0..20),
            amb in prop::collection::btree_map((arb_word(), 0usize..3), 1u32..7, 0..20),
            assoc in prop::collection::btree_map((arb_word(), "p[0-9]{1,3}"), (arb_word(), prop::option::of(arb_word()), prop::option::of(arb_word())), 0..20),
        ) {
            let scale = RatingScale::default();
            let mut text = ratings_counts_header(scale) + "\n";
            for ((w, p), c) in &ratings {
                let c: Vec<u32> = if c.iter().all(|&v| v == 0) { vec![1, 0, 0, 0, 0] } else { c.clone() };
                text += &format!("{w}\t{}\t{}\n", WordClass::ALL[*p], c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\t"));
            }
            prop_assert_eq!(write_ratings(&parse_ratings("r", &text, scale).unwrap(), scale), text);

            let mut text = format!("{SENSORIMOTOR_HEADER}\n");
            for (w, v) in &senses {
                text += &format!("{w}\t{}\n", v.iter().map(|x| (*x as f64 / 10.0).to_string()).collect::<Vec<_>>().join("\t"));
            }
            prop_assert_eq!(write_sensorimotor(&parse_sensorimotor("s", &text).unwrap()), text);

            let mut text = format!("{VAD_HEADER}\n");
            for (w, v) in &vad {
                text += &format!("{w}\t{}\n", v.iter().map(|x| (*x as f64 / 1000.0).to_string()).collect::<Vec<_>>().join("\t"));
            }
            prop_assert_eq!(write_vad(&parse_vad("v", &text).unwrap()), text);

            let mut text = format!("{CORPUS_HEADER}\n");
            for ((w, p), (f, d, alt)) in &corpus {
                let alt = alt.map(|a| WordClass::ALL[a].code()).unwrap_or("");
                text += &format!("{w}\t{}\t{f}\t{}\t{alt}\n", WordClass::ALL[*p], *d as f64 / 100.0);
            }
            prop_assert_eq!(write_corpus(&parse_corpus("c", &text).unwrap()), text);

            let mut text = format!("{AMBIGUITY_HEADER}\n");
            for ((w, p), s) in &amb {
                text += &format!("{w}\t{}\t{s}\n", WordClass::ALL[*p]);
            }
            prop_assert_eq!(write_ambiguity(&parse_ambiguity("a", &text).unwrap()), text);

            let mut text = format!("{ASSOCIATIONS_HEADER}\n");
            for ((cue, part), (r1, r2, r3)) in &assoc {
                let r3 = if r2.is_some() { r3.clone() } else { None };
                text += &format!("{cue}\t{part}\t{r1}\t{}\t{}\n", r2.clone().unwrap_or_default(), r3.unwrap_or_default());
            }
            prop_assert_eq!(write_associations(&parse_associations("a", &text).unwrap()), text);
        }
    }
}
