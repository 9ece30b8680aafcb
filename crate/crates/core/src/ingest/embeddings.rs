use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Word vectors of one fixed dimensionality.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    terms: Vec<String>,
    lookup: HashMap<String, usize>,
    /// Row-major, `terms.len() * dim` values.
    vectors: Vec<f64>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    /// Build a table from `(term, vector)` rows.
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err(Error::param("embedding dimensionality must be positive"));
        }
        let mut table = EmbeddingTable {
            dim,
            terms: Vec::new(),
            lookup: HashMap::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        for (i, (term, vector)) in rows.into_iter().enumerate() {
            table.push(term, &vector).map_err(|e| match e {
                Error::InvalidParameter(msg) => Error::parse(i + 1, msg),
                other => other,
            })?;
        }
        Ok(table)
    }

    fn push(&mut self, term: String, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::param(format!(
                "vector for `{term}` has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::param(format!("vector for `{term}` has a non-finite component")));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::param(format!("vector for `{term}` is all zeros")));
        }
        if self.lookup.contains_key(&term) {
            return Err(Error::Duplicate { kind: "embedding term", id: term });
        }
        self.lookup.insert(term.clone(), self.terms.len());
        self.terms.push(term);
        self.vectors.extend_from_slice(vector);
        self.norms.push(norm);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.lookup.contains_key(term)
    }

    pub fn vector(&self, term: &str) -> Option<&[f64]> {
        self.position(term).map(|i| self.row(i))
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }
}

/// Parse the word2vec text format: a `V d` header, then `term f1 … fd` rows.
pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let (declared, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, "missing `V d` header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(v), Some(d), None) if d > 0 => break (v, d),
            _ => return Err(Error::parse(i + 1, "header must be `V d` with d > 0")),
        }
    };

    let mut table = EmbeddingTable::from_rows(dim, std::iter::empty())?;
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let mut parts = line.split_whitespace();
        let Some(term) = parts.next() else { continue };
        let vector = parts
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(lineno, format!("bad component: {e}")))?;
        table.push(term.to_string(), &vector).map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::parse(lineno, msg),
            other => other,
        })?;
    }
    if table.len() != declared {
        log::warn!("embedding header declares {declared} vectors, found {}", table.len());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let t = parse_embeddings("3 2\na 1 0\nb 0 1\nc 1 1\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.vector("c").unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn arity_error_has_line() {
        let err = parse_embeddings("1 2\ncancer 0.1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicate_term_named() {
        let err = parse_embeddings("2 2\na 1 0\na 0 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Duplicate { ref id, .. } if id == "a"));
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(parse_embeddings("1 2\na 0 0\n".as_bytes()).is_err());
    }

    #[test]
    fn count_mismatch_is_not_fatal() {
        let t = parse_embeddings("5 2\na 1 0\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
    }
}
