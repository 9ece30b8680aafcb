use std::io::BufRead;

use serde_json::Value;

use crate::error::{Error, Result};

/// One harvested dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub title: String,
    pub repository: String,
    /// Every non-empty string leaf of `raw_metadata`, in document order.
    pub metadata_text: String,
    /// `Value::Null` when the METADATA block was absent or unparseable.
    pub raw_metadata: Value,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, repository: impl Into<String>, raw_metadata: Value) -> Self {
        let metadata_text = flatten_strings(&raw_metadata);
        DocumentRecord {
            doc_id: doc_id.into(),
            title: title.into(),
            repository: repository.into(),
            metadata_text,
            raw_metadata,
        }
    }

    /// Repository name without its trailing `_<digits>` snapshot date.
    pub fn repository_name(&self) -> &str {
        match self.repository.rsplit_once('_') {
            Some((name, date)) if !date.is_empty() && date.bytes().all(|b| b.is_ascii_digit()) => name,
            _ => &self.repository,
        }
    }

    /// The text that gets tokenized into the index.
    pub fn indexed_text(&self) -> String {
        format!("{} {} {}", self.title, self.repository_name(), self.metadata_text)
    }
}

/// Join all string leaves of a JSON tree with single spaces. Keys, numbers
/// and booleans are skipped.
pub fn flatten_strings(value: &Value) -> String {
    fn walk<'a>(value: &'a Value, out: &mut Vec<&'a str>) {
        match value {
            Value::String(s) => {
                let s = s.trim();
                if !s.is_empty() {
                    out.push(s);
                }
            }
            Value::Array(items) => items.iter().for_each(|v| walk(v, out)),
            Value::Object(map) => map.values().for_each(|v| walk(v, out)),
            Value::Null | Value::Bool(_) | Value::Number(_) => {}
        }
    }
    let mut leaves = Vec::new();
    walk(value, &mut leaves);
    leaves.join(" ")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusOptions {
    /// Fail on malformed METADATA JSON instead of keeping the record with
    /// empty metadata.
    pub strict: bool,
}

/// Streaming reader over `<DOC>…</DOC>` blocks.
///
/// Yields one item per block. A block without a DOCNO yields an
/// [`Error::Record`] and reading continues with the next block.
pub struct CorpusReader<R> {
    reader: R,
    options: CorpusOptions,
    pending: String,
    /// Byte offset of `pending[0]` in the stream.
    base: u64,
    done: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, options: CorpusOptions) -> Self {
        CorpusReader {
            reader,
            options,
            pending: String::new(),
            base: 0,
            done: false,
        }
    }

    fn next_block(&mut self) -> Option<Result<(u64, String)>> {
        loop {
            if let Some(start) = self.pending.find("<DOC>") {
                if let Some(len) = self.pending[start..].find("</DOC>") {
                    let offset = self.base + start as u64;
                    let block = self.pending[start + "<DOC>".len()..start + len].to_string();
                    let consumed = start + len + "</DOC>".len();
                    self.pending.drain(..consumed);
                    self.base += consumed as u64;
                    return Some(Ok((offset, block)));
                }
            } else {
                // Tags never straddle lines, so text outside a block can go.
                self.base += self.pending.len() as u64;
                self.pending.clear();
            }
            if self.done {
                return None;
            }
            match self.reader.read_line(&mut self.pending) {
                Ok(0) => {
                    self.done = true;
                    if let Some(start) = self.pending.find("<DOC>") {
                        let offset = self.base + start as u64;
                        self.base += self.pending.len() as u64;
                        self.pending.clear();
                        return Some(Err(Error::Record {
                            offset,
                            message: "unterminated <DOC> block".into(),
                        }));
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
    }

    fn parse_block(&self, offset: u64, block: &str) -> Result<DocumentRecord> {
        let doc_id = match tag_content(block, "DOCNO").map(str::trim) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => {
                return Err(Error::Record {
                    offset,
                    message: "missing DOCNO".into(),
                })
            }
        };
        let title = tag_content(block, "TITLE").unwrap_or("").trim();
        let repository = tag_content(block, "REPOSITORY").unwrap_or("").trim();
        let raw_metadata = match tag_content(block, "METADATA") {
            None => Value::Null,
            Some(json) if json.trim().is_empty() => Value::Null,
            Some(json) => match serde_json::from_str::<Value>(json) {
                Ok(value) => value,
                Err(e) if self.options.strict => {
                    return Err(Error::Metadata {
                        offset,
                        doc_id,
                        message: e.to_string(),
                    })
                }
                Err(e) => {
                    log::warn!("record {doc_id} at byte {offset}: invalid METADATA JSON ({e}); metadata dropped");
                    Value::Null
                }
            },
        };
        Ok(DocumentRecord::new(doc_id, title, repository, raw_metadata))
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<DocumentRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let (offset, block) = match self.next_block()? {
            Ok(b) => b,
            Err(e) => return Some(Err(e)),
        };
        Some(self.parse_block(offset, &block))
    }
}

fn tag_content<'a>(block: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = block.find(&open)? + open.len();
    let end = block[start..].find(&close)? + start;
    Some(&block[start..end])
}

#[derive(Debug, Default)]
pub struct ParsedCorpus {
    pub records: Vec<DocumentRecord>,
    /// Blocks that were skipped, with their byte offsets.
    pub skipped: Vec<Error>,
}

/// Read a whole corpus. Malformed blocks are collected in
/// [`ParsedCorpus::skipped`]; I/O errors and, in strict mode, invalid METADATA
/// JSON abort the parse.
pub fn parse_corpus<R: BufRead>(reader: R, options: CorpusOptions) -> Result<ParsedCorpus> {
    let mut parsed = ParsedCorpus::default();
    for item in CorpusReader::new(reader, options) {
        match item {
            Ok(record) => parsed.records.push(record),
            Err(e @ Error::Record { .. }) => {
                log::warn!("skipping {e}");
                parsed.skipped.push(e);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(parsed)
}
