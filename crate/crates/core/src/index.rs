//! Immutable in-memory inverted index.
//!
//! Besides postings the index keeps everything the scorers need: document
//! frequencies, per-document maximum term frequency and length, the collection
//! size, and the original records (for category classification).
//!
//! # Snapshot format
//!
//! All integers are little-endian; `varint` is unsigned LEB128 and `str` is a
//! varint byte length followed by UTF-8.
//!
//! ```text
//! magic      8 bytes  "BIOSRIDX"
//! version    u32      1
//! stopwords  varint n, then n × str (sorted)
//! documents  varint n, then per document:
//!              str doc_id, str title, str repository, str metadata_text,
//!              str raw_metadata (JSON), varint max_tf, varint length
//! terms      varint n, then per term (sorted by term):
//!              str term, varint postings, then postings × (varint doc delta, varint tf)
//! ```
//!
//! Document deltas are taken against the previous posting of the same term;
//! the first posting stores its absolute document number.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingest::DocumentRecord;
use crate::textprep::Analyzer;

/// Dense document number, assigned in corpus order.
pub type DocIdx = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocIdx,
    /// Occurrences of the term in the document, always ≥ 1.
    pub tf: u32,
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    analyzer: Analyzer,
    records: Vec<DocumentRecord>,
    doc_lookup: HashMap<String, DocIdx>,
    max_tf: Vec<u32>,
    doc_len: Vec<u32>,
    total_len: u64,
    postings: HashMap<String, Vec<Posting>>,
}

const MAGIC: &[u8; 8] = b"BIOSRIDX";
const VERSION: u32 = 1;

impl InvertedIndex {
    /// Index each record's [`DocumentRecord::indexed_text`].
    ///
    /// Documents that normalize to no tokens are kept and count towards the
    /// collection size.
    pub fn build(records: Vec<DocumentRecord>, analyzer: Analyzer) -> Result<Self> {
        let mut doc_lookup = HashMap::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            if doc_lookup.insert(record.doc_id.clone(), i as DocIdx).is_some() {
                return Err(Error::Duplicate {
                    kind: "document",
                    id: record.doc_id.clone(),
                });
            }
        }
        if records.len() > DocIdx::MAX as usize {
            return Err(Error::param("too many documents for a single index"));
        }

        let counts: Vec<Vec<(String, u32)>> = records
            .par_iter()
            .map(|record| {
                let mut tf: HashMap<String, u32> = HashMap::new();
                for term in analyzer.normalize(&record.indexed_text()) {
                    *tf.entry(term).or_insert(0) += 1;
                }
                let mut terms: Vec<(String, u32)> = tf.into_iter().collect();
                terms.sort_unstable();
                terms
            })
            .collect();

        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut max_tf = Vec::with_capacity(records.len());
        let mut doc_len = Vec::with_capacity(records.len());
        let mut total_len = 0u64;
        for (doc, terms) in counts.into_iter().enumerate() {
            let len: u32 = terms.iter().map(|(_, tf)| tf).sum();
            max_tf.push(terms.iter().map(|(_, tf)| *tf).max().unwrap_or(0));
            doc_len.push(len);
            total_len += u64::from(len);
            for (term, tf) in terms {
                postings.entry(term).or_default().push(Posting {
                    doc: doc as DocIdx,
                    tf,
                });
            }
        }

        Ok(InvertedIndex {
            analyzer,
            records,
            doc_lookup,
            max_tf,
            doc_len,
            total_len,
            postings,
        })
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    /// |D|, including documents without indexable tokens.
    pub fn collection_size(&self) -> usize {
        self.records.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    /// Number of documents containing `term`; 0 for unknown terms.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    /// Postings sorted by document number; empty for unknown terms.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Largest term count in the document.
    pub fn max_tf(&self, doc_id: &str) -> Result<u32> {
        self.doc_idx(doc_id)
            .map(|d| self.max_tf[d as usize])
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    pub fn max_tf_of(&self, doc: DocIdx) -> u32 {
        self.max_tf[doc as usize]
    }

    pub fn doc_len(&self, doc: DocIdx) -> u32 {
        self.doc_len[doc as usize]
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.records.len() as f64
        }
    }

    pub fn doc_idx(&self, doc_id: &str) -> Option<DocIdx> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn doc_id(&self, doc: DocIdx) -> &str {
        &self.records[doc as usize].doc_id
    }

    pub fn record(&self, doc: DocIdx) -> &DocumentRecord {
        &self.records[doc as usize]
    }

    pub fn record_by_id(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.doc_idx(doc_id).map(|d| self.record(d))
    }

    pub fn records(&self) -> &[DocumentRecord] {
        &self.records
    }

    /// Documents containing at least one of `terms`, in ascending order.
    pub fn candidate_docs<'a, I>(&self, terms: I) -> Vec<DocIdx>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut docs = BTreeSet::new();
        for term in terms {
            docs.extend(self.postings(term).iter().map(|p| p.doc));
        }
        docs.into_iter().collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_snapshot(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_snapshot(BufReader::new(File::open(path)?))
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;

        let mut stopwords: Vec<&String> = self.analyzer.stopwords().iter().collect();
        stopwords.sort();
        write_varint(&mut out, stopwords.len() as u64)?;
        for word in stopwords {
            write_str(&mut out, word)?;
        }

        write_varint(&mut out, self.records.len() as u64)?;
        for (i, r) in self.records.iter().enumerate() {
            write_str(&mut out, &r.doc_id)?;
            write_str(&mut out, &r.title)?;
            write_str(&mut out, &r.repository)?;
            write_str(&mut out, &r.metadata_text)?;
            write_str(&mut out, &serde_json::to_string(&r.raw_metadata)?)?;
            write_varint(&mut out, u64::from(self.max_tf[i]))?;
            write_varint(&mut out, u64::from(self.doc_len[i]))?;
        }

        let mut terms: Vec<(&String, &Vec<Posting>)> = self.postings.iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(b.0));
        write_varint(&mut out, terms.len() as u64)?;
        for (term, postings) in terms {
            write_str(&mut out, term)?;
            write_varint(&mut out, postings.len() as u64)?;
            let mut prev = 0u32;
            for p in postings {
                write_varint(&mut out, u64::from(p.doc - prev))?;
                write_varint(&mut out, u64::from(p.tf))?;
                prev = p.doc;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("not an index snapshot".into()));
        }
        let mut version = [0u8; 4];
        input.read_exact(&mut version)?;
        let version = u32::from_le_bytes(version);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
        }

        let n_stop = read_varint(&mut input)?;
        let mut stopwords = HashSet::new();
        for _ in 0..n_stop {
            stopwords.insert(read_str(&mut input)?);
        }

        let n_docs = read_len(&mut input)?;
        let mut records = Vec::with_capacity(n_docs.min(1 << 20));
        let mut max_tf = Vec::with_capacity(n_docs.min(1 << 20));
        let mut doc_len = Vec::with_capacity(n_docs.min(1 << 20));
        let mut doc_lookup = HashMap::with_capacity(n_docs.min(1 << 20));
        let mut total_len = 0u64;
        for i in 0..n_docs {
            let doc_id = read_str(&mut input)?;
            let title = read_str(&mut input)?;
            let repository = read_str(&mut input)?;
            let metadata_text = read_str(&mut input)?;
            let raw_metadata: Value = serde_json::from_str(&read_str(&mut input)?)?;
            max_tf.push(read_u32(&mut input)?);
            let len = read_u32(&mut input)?;
            doc_len.push(len);
            total_len += u64::from(len);
            if doc_lookup.insert(doc_id.clone(), i as DocIdx).is_some() {
                return Err(Error::Snapshot(format!("duplicate document `{doc_id}`")));
            }
            records.push(DocumentRecord {
                doc_id,
                title,
                repository,
                metadata_text,
                raw_metadata,
            });
        }

        let n_terms = read_len(&mut input)?;
        let mut postings = HashMap::with_capacity(n_terms.min(1 << 20));
        for _ in 0..n_terms {
            let term = read_str(&mut input)?;
            let n = read_len(&mut input)?;
            let mut list = Vec::with_capacity(n.min(n_docs));
            let mut doc = 0u64;
            for j in 0..n {
                let delta = read_varint(&mut input)?;
                if j > 0 && delta == 0 {
                    return Err(Error::Snapshot(format!("postings of `{term}` are not increasing")));
                }
                doc += delta;
                let tf = read_u32(&mut input)?;
                if doc >= n_docs as u64 || tf == 0 {
                    return Err(Error::Snapshot(format!("corrupt posting for `{term}`")));
                }
                list.push(Posting { doc: doc as DocIdx, tf });
            }
            postings.insert(term, list);
        }

        Ok(InvertedIndex {
            analyzer: Analyzer::new(stopwords),
            records,
            doc_lookup,
            max_tf,
            doc_len,
            total_len,
            postings,
        })
    }
}

/// Build an index with `analyzer`.
pub fn build_index(records: Vec<DocumentRecord>, analyzer: &Analyzer) -> Result<InvertedIndex> {
    InvertedIndex::build(records, analyzer.clone())
}

fn write_varint<W: Write>(out: &mut W, mut v: u64) -> Result<()> {
    let mut buf = [0u8; 10];
    let mut n = 0;
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf[n] = byte;
            n += 1;
            break;
        }
        buf[n] = byte | 0x80;
        n += 1;
    }
    out.write_all(&buf[..n])?;
    Ok(())
}

fn read_varint<R: Read>(input: &mut R) -> Result<u64> {
    let mut value = 0u64;
    for shift in (0..64).step_by(7) {
        let mut byte = [0u8; 1];
        input.read_exact(&mut byte)?;
        value |= u64::from(byte[0] & 0x7f) << shift;
        if byte[0] & 0x80 == 0 {
            return Ok(value);
        }
    }
    Err(Error::Snapshot("varint overflow".into()))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    u32::try_from(read_varint(input)?).map_err(|_| Error::Snapshot("value exceeds u32".into()))
}

fn read_len<R: Read>(input: &mut R) -> Result<usize> {
    usize::try_from(read_varint(input)?).map_err(|_| Error::Snapshot("length exceeds usize".into()))
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    write_varint(out, s.len() as u64)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let len = read_len(input)?;
    let mut buf = Vec::new();
    input.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Snapshot("truncated string".into()));
    }
    String::from_utf8(buf).map_err(|_| Error::Snapshot("invalid UTF-8".into()))
}
