use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub token: String,
    pub idf: f64,
}

/// Token vocabulary with smoothed inverse document frequencies
/// `ln((1 + N) / (1 + df)) + 1`. Term frequency is the raw count and vectors
/// are not length-normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<VocabEntry>", into = "Vec<VocabEntry>")]
pub struct TfidfVocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl From<Vec<VocabEntry>> for TfidfVocabulary {
    fn from(entries: Vec<VocabEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.token.clone(), i))
            .collect();
        TfidfVocabulary { entries, index }
    }
}

impl From<TfidfVocabulary> for Vec<VocabEntry> {
    fn from(v: TfidfVocabulary) -> Self {
        v.entries
    }
}

impl TfidfVocabulary {
    /// Keeps at most `max_terms` tokens, preferring higher document frequency
    /// and breaking ties alphabetically.
    pub fn fit(docs: &[Vec<String>], max_terms: usize) -> Self {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_terms);
        ranked.sort_by(|a, b| a.0.cmp(b.0));
        let n = docs.len() as f64;
        let entries: Vec<VocabEntry> = ranked
            .into_iter()
            .map(|(token, d)| VocabEntry {
                token: token.to_string(),
                idf: ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0,
            })
            .collect();
        TfidfVocabulary::from(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<(usize, f64)> {
        self.index.get(token).map(|&i| (i, self.entries[i].idf))
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn transform(&self, tokens: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.entries.len()];
        for t in tokens {
            if let Some(&i) = self.index.get(t) {
                v[i] += 1.0;
            }
        }
        for (x, e) in v.iter_mut().zip(&self.entries) {
            *x *= e.idf;
        }
        v
    }
}
