//! In-memory BM25 inverted index over retrieval views.

use std::collections::HashMap;

use crate::atom::AtomId;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedDoc {
    pub view_id: String,
    pub owner: AtomId,
    pub len: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Bm25Index {
    docs: Vec<IndexedDoc>,
    postings: HashMap<String, Vec<(u32, u32)>>,
    total_len: usize,
}

impl Bm25Index {
    pub fn build<'a>(docs: impl IntoIterator<Item = (&'a str, AtomId, &'a str)>) -> Self {
        let mut idx = Self::default();
        for (view_id, owner, text) in docs {
            let doc = idx.docs.len() as u32;
            let toks = tokenize(text);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &toks {
                *tf.entry(t.clone()).or_default() += 1;
            }
            let mut terms: Vec<_> = tf.into_iter().collect();
            terms.sort();
            for (t, n) in terms {
                idx.postings.entry(t).or_default().push((doc, n));
            }
            idx.total_len += toks.len();
            idx.docs.push(IndexedDoc { view_id: view_id.to_string(), owner, len: toks.len() });
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn avgdl(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_len as f64 / self.docs.len() as f64
        }
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn term_freq(&self, term: &str, doc: usize) -> u32 {
        self.postings
            .get(term)
            .and_then(|p| p.iter().find(|(d, _)| *d as usize == doc))
            .map_or(0, |(_, n)| *n)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.doc_freq(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// BM25 scores of every document matching at least one distinct token of
    /// `query`, as `(doc index, score)` in document order.
    pub fn score(&self, query: &str, k1: f64, b: f64) -> Vec<(usize, f64)> {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        let avgdl = self.avgdl();
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for t in &terms {
            let Some(post) = self.postings.get(t) else { continue };
            let idf = self.idf(t);
            for &(d, tf) in post {
                let tf = f64::from(tf);
                let dl = self.docs[d as usize].len as f64;
                let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
                *acc.entry(d).or_default() += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
        }
        let mut out: Vec<(usize, f64)> = acc.into_iter().map(|(d, s)| (d as usize, s)).collect();
        out.sort_by_key(|&(d, _)| d);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(i: u32) -> AtomId {
        AtomId::new(crate::atom::AtomKind::Claim, 0, i)
    }

    #[test]
    fn counts_match_a_word_counter() {
        let texts = ["the cat sat on the mat", "a dog", "Cat, cat; CAT!"];
        let ids: Vec<String> = (0..3).map(|i| format!("v{i}")).collect();
        let idx = Bm25Index::build(texts.iter().enumerate().map(|(i, t)| (ids[i].as_str(), id(i as u32), *t)));
        assert_eq!(idx.term_freq("the", 0), 2);
        assert_eq!(idx.term_freq("cat", 2), 3);
        assert_eq!(idx.doc_freq("cat"), 2);
        assert_eq!(idx.docs()[0].len, 6);
        assert!((idx.avgdl() - 11.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_doc_hand_value() {
        // N = 1, df = 1: idf = ln(0.5/1.5 + 1) = ln(4/3); dl = avgdl so the
        // length norm is 1 and tf = 1 gives a factor of exactly 1.
        let idx = Bm25Index::build([("v", id(0), "roma cafe")]);
        let s = idx.score("roma", 1.2, 0.75);
        assert_eq!(s.len(), 1);
        assert!((s[0].1 - (4.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn repeated_query_terms_count_once() {
        let idx = Bm25Index::build([("v", id(0), "roma cafe"), ("w", id(1), "other")]);
        assert_eq!(idx.score("roma roma", 1.2, 0.75), idx.score("roma", 1.2, 0.75));
        assert!(idx.score("absent", 1.2, 0.75).is_empty());
    }
}
