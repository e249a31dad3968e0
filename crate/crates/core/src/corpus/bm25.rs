//! BM25 Okapi scoring over paper title + abstract.

use std::collections::HashMap;

use crate::text::tokenize;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// Inverted index keyed by lowercase token. Documents are dense indices into
/// the owning corpus' paper table.
#[derive(Debug, Default, Clone)]
pub struct Bm25Index {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    total_length: u64,
}

impl Bm25Index {
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut index = Self::default();
        for (doc, text) in docs.into_iter().enumerate() {
            let tokens = tokenize(text);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for token in &tokens {
                *tf.entry(token.clone()).or_default() += 1;
            }
            for (token, count) in tf {
                index.postings.entry(token).or_default().push(Posting {
                    doc: doc as u32,
                    tf: count,
                });
            }
            index.doc_lengths.push(tokens.len() as u32);
            index.total_length += tokens.len() as u64;
        }
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    fn average_doc_length(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            0.0
        } else {
            self.total_length as f64 / self.doc_lengths.len() as f64
        }
    }

    /// Scores every document sharing at least one token with `query`.
    /// Repeated query tokens count once. Output is unordered.
    pub fn score_all(&self, query: &str) -> HashMap<usize, f64> {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();

        let n = self.doc_count() as f64;
        let avgdl = self.average_doc_length();
        let mut scores: HashMap<usize, f64> = HashMap::new();
        if n == 0.0 || avgdl == 0.0 {
            return scores;
        }
        for term in &terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let df = postings.len() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            for p in postings {
                let tf = p.tf as f64;
                let dl = self.doc_lengths[p.doc as usize] as f64;
                let norm =
                    tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avgdl));
                *scores.entry(p.doc as usize).or_default() += idf * norm;
            }
        }
        scores
    }
}
