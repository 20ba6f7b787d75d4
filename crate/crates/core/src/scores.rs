//! Labeled matcher comparison outcomes and their CSV wire format.
//!
//! The column layout is
//! `probe_subject,probe_sample,gallery_subject,gallery_sample,matcher,score,label`
//! with `label` either `genuine` or `imposter`.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Genuine,
    Imposter,
}

impl Label {
    pub fn is_genuine(self) -> bool {
        self == Label::Genuine
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Imposter => "imposter",
        })
    }
}

/// One matcher comparison between a probe sample and a gallery sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub probe_subject: String,
    pub probe_sample: String,
    pub gallery_subject: String,
    pub gallery_sample: String,
    pub matcher: String,
    pub score: f64,
    pub label: Label,
}

impl ScoreRecord {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::ScoreOutOfRange(self.score));
        }
        let expect = if self.probe_subject == self.gallery_subject {
            Label::Genuine
        } else {
            Label::Imposter
        };
        if self.label != expect {
            return Err(Error::LabelMismatch {
                probe: self.probe_subject.clone(),
                gallery: self.gallery_subject.clone(),
                label: self.label.to_string(),
            });
        }
        Ok(())
    }
}

/// A validated collection of score records.
#[derive(Debug, Clone, Default)]
pub struct ScoreSet {
    records: Vec<ScoreRecord>,
}

impl ScoreSet {
    pub fn from_records(records: Vec<ScoreRecord>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Matcher names present, sorted and deduplicated.
    pub fn matchers(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.matcher.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Subject ids present on either side, sorted and deduplicated.
    pub fn subjects(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        for r in &self.records {
            set.insert(r.probe_subject.as_str());
            set.insert(r.gallery_subject.as_str());
        }
        set.into_iter().map(str::to_owned).collect()
    }

    pub fn filter<P: Fn(&ScoreRecord) -> bool>(&self, pred: P) -> ScoreSet {
        ScoreSet {
            records: self.records.iter().filter(|r| pred(r)).cloned().collect(),
        }
    }

    /// Scores of one matcher split into (genuine, imposter) populations.
    pub fn class_scores(&self, matcher: &str) -> (Vec<f64>, Vec<f64>) {
        let mut gen = Vec::new();
        let mut imp = Vec::new();
        for r in self.records.iter().filter(|r| r.matcher == matcher) {
            match r.label {
                Label::Genuine => gen.push(r.score),
                Label::Imposter => imp.push(r.score),
            }
        }
        (gen, imp)
    }
}

pub fn read_scores<R: Read>(reader: R) -> Result<ScoreSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for row in rdr.deserialize() {
        records.push(row?);
    }
    ScoreSet::from_records(records)
}

pub fn read_scores_file(path: &Path) -> Result<ScoreSet> {
    read_scores(std::fs::File::open(path)?)
}

pub fn write_scores<W: Write>(writer: W, scores: &ScoreSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in scores.records() {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_scores_file(path: &Path, scores: &ScoreSet) -> Result<()> {
    write_scores(std::fs::File::create(path)?, scores)
}
