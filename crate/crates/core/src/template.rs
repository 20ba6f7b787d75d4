//! Protected template representations and JSON-lines ingestion.
//!
//! Two template kinds exist: fixed-length bit vectors (iris) and
//! real-valued descriptor matrices with one row per minutia neighborhood
//! (fingerprint). Both carry opaque subject/sample identifiers.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Fixed-length bit vector, packed into 64-bit words.
///
/// Bit `i` lives in word `i / 64` at position `i % 64` (LSB first).
/// Pad bits past `nbits` are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTemplate {
    pub subject_id: String,
    pub sample_id: String,
    words: Vec<u64>,
    nbits: usize,
}

impl BinaryTemplate {
    pub fn from_bools(subject_id: &str, sample_id: &str, bits: &[bool]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::EmptyTemplate);
        }
        let mut words = vec![0u64; bits.len().div_ceil(WORD_BITS)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        Ok(Self {
            subject_id: subject_id.to_owned(),
            sample_id: sample_id.to_owned(),
            words,
            nbits: bits.len(),
        })
    }

    /// Decodes a hex-encoded bit string. The first template bit is the most
    /// significant bit of the first byte; `nbits` drops trailing pad bits.
    pub fn from_hex(
        subject_id: &str,
        sample_id: &str,
        hex_bits: &str,
        nbits: usize,
    ) -> Result<Self> {
        let bytes = hex::decode(hex_bits.trim())
            .map_err(|e| Error::InvalidConfig(format!("bad hex template: {e}")))?;
        if nbits == 0 {
            return Err(Error::EmptyTemplate);
        }
        if nbits > bytes.len() * 8 {
            return Err(Error::InvalidConfig(format!(
                "nbits {} exceeds {} encoded bits",
                nbits,
                bytes.len() * 8
            )));
        }
        let mut bits = Vec::with_capacity(nbits);
        for i in 0..nbits {
            let byte = bytes[i / 8];
            bits.push((byte >> (7 - i % 8)) & 1 == 1);
        }
        Self::from_bools(subject_id, sample_id, &bits)
    }

    /// Hex encoding matching [`from_hex`](Self::from_hex): big-endian within
    /// each byte, zero padding in the final byte.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.nbits.div_ceil(8)];
        for i in 0..self.nbits {
            if self.get(i) {
                bytes[i / 8] |= 1 << (7 - i % 8);
            }
        }
        hex::encode(bytes)
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.nbits, "bit index {i} out of range {}", self.nbits);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn check_same_len(&self, other: &Self) -> Result<()> {
        if self.nbits != other.nbits {
            return Err(Error::BitLengthMismatch {
                left: self.nbits,
                right: other.nbits,
            });
        }
        Ok(())
    }
}

/// Real-valued descriptor matrix, one row per minutia neighborhood.
///
/// All rows share one dimension and no row is all-zero; both are enforced
/// at construction so downstream cosine/dice terms stay well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub subject_id: String,
    pub sample_id: String,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(subject_id: &str, sample_id: &str, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyTemplate);
        }
        let dim = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroRow { row: i });
            }
        }
        Ok(Self {
            subject_id: subject_id.to_owned(),
            sample_id: sample_id.to_owned(),
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// One template record of either modality.
#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Iris(BinaryTemplate),
    Fingerprint(FeatureMatrix),
}

impl Template {
    pub fn subject_id(&self) -> &str {
        match self {
            Template::Iris(t) => &t.subject_id,
            Template::Fingerprint(t) => &t.subject_id,
        }
    }

    pub fn sample_id(&self) -> &str {
        match self {
            Template::Iris(t) => &t.sample_id,
            Template::Fingerprint(t) => &t.sample_id,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "lowercase")]
enum TemplateLine {
    Iris {
        subject: String,
        sample: String,
        bits: String,
        nbits: usize,
    },
    Fingerprint {
        subject: String,
        sample: String,
        rows: Vec<Vec<f64>>,
    },
}

/// Reads a JSON-lines template file. Blank lines are ignored.
pub fn read_templates<R: std::io::Read>(reader: R) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TemplateLine =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        let template = match parsed {
            TemplateLine::Iris {
                subject,
                sample,
                bits,
                nbits,
            } => Template::Iris(BinaryTemplate::from_hex(&subject, &sample, &bits, nbits)?),
            TemplateLine::Fingerprint {
                subject,
                sample,
                rows,
            } => Template::Fingerprint(FeatureMatrix::new(&subject, &sample, rows)?),
        };
        out.push(template);
    }
    Ok(out)
}

pub fn read_templates_file(path: &Path) -> Result<Vec<Template>> {
    read_templates(std::fs::File::open(path)?)
}

pub fn write_templates<W: Write>(writer: &mut W, templates: &[Template]) -> Result<()> {
    for t in templates {
        let line = match t {
            Template::Iris(bt) => TemplateLine::Iris {
                subject: bt.subject_id.clone(),
                sample: bt.sample_id.clone(),
                bits: bt.to_hex(),
                nbits: bt.len(),
            },
            Template::Fingerprint(fm) => TemplateLine::Fingerprint {
                subject: fm.subject_id.clone(),
                sample: fm.sample_id.clone(),
                rows: fm.rows().to_vec(),
            },
        };
        serde_json::to_writer(&mut *writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
