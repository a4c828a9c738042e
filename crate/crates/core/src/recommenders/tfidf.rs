use std::collections::{HashMap, HashSet};

use crate::domain::{Program, ProgramId};
use crate::error::{Error, Result};
use crate::features::text::{default_stopwords, tokenize};
use crate::ingestion::Catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Title,
    Description,
    Actors,
    Directors,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Title, Field::Description, Field::Actors, Field::Directors];

    /// Actor and director names are kept whole; free text is tokenized.
    fn terms(self, p: &Program, stopwords: &HashSet<String>) -> Vec<String> {
        match self {
            Field::Title => tokenize(&p.title, stopwords).collect(),
            Field::Description => tokenize(&p.description, stopwords).collect(),
            Field::Actors => p.actors.iter().map(|a| a.trim().to_lowercase()).collect(),
            Field::Directors => p.directors.iter().map(|d| d.trim().to_lowercase()).collect(),
        }
    }
}

/// L2-normalized sparse vector, sorted by term id.
type Sparse = Vec<(u32, f64)>;

#[derive(Debug, Clone, Default)]
struct FieldIndex {
    vocabulary: HashMap<String, u32>,
    df: Vec<u32>,
    vectors: HashMap<ProgramId, Sparse>,
}

/// Per-field TF-IDF vectors for every program in a catalog.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    fields: [FieldIndex; 4],
    documents: usize,
}

pub fn build_tfidf(catalog: &Catalog) -> Result<TfIdfIndex> {
    build_tfidf_with(catalog, default_stopwords())
}

/// TF is the raw term count; IDF is `ln((1 + N) / (1 + df)) + 1`.
pub fn build_tfidf_with(catalog: &Catalog, stopwords: &HashSet<String>) -> Result<TfIdfIndex> {
    if catalog.num_programs() == 0 {
        return Err(Error::Invalid("cannot index an empty catalog".into()));
    }
    let n = catalog.num_programs();
    let fields = Field::ALL.map(|field| {
        let mut index = FieldIndex::default();
        let mut counts: Vec<(ProgramId, HashMap<u32, u32>)> = Vec::with_capacity(n);
        for p in catalog.programs() {
            let mut tf: HashMap<u32, u32> = HashMap::new();
            for term in field.terms(p, stopwords) {
                let next = index.vocabulary.len() as u32;
                let id = *index.vocabulary.entry(term).or_insert(next);
                if id as usize == index.df.len() {
                    index.df.push(0);
                }
                *tf.entry(id).or_default() += 1;
            }
            for &id in tf.keys() {
                index.df[id as usize] += 1;
            }
            counts.push((p.id, tf));
        }
        let idf: Vec<f64> = index
            .df
            .iter()
            .map(|&df| ((1.0 + n as f64) / (1.0 + f64::from(df))).ln() + 1.0)
            .collect();
        for (program, tf) in counts {
            let mut v: Sparse = tf
                .into_iter()
                .map(|(t, c)| (t, f64::from(c) * idf[t as usize]))
                .collect();
            v.sort_unstable_by_key(|&(t, _)| t);
            let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|(_, w)| *w /= norm);
                index.vectors.insert(program, v);
            }
        }
        index
    });
    Ok(TfIdfIndex { fields, documents: n })
}

fn field_slot(field: Field) -> usize {
    field as usize
}

fn sparse_dot(a: &Sparse, b: &Sparse) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

impl TfIdfIndex {
    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn vocabulary_size(&self, field: Field) -> usize {
        self.fields[field_slot(field)].vocabulary.len()
    }

    /// Cosine similarity in one field; 0 when either side has no terms.
    pub fn cosine(&self, field: Field, a: ProgramId, b: ProgramId) -> f64 {
        let f = &self.fields[field_slot(field)];
        match (f.vectors.get(&a), f.vectors.get(&b)) {
            (Some(x), Some(y)) => sparse_dot(x, y),
            _ => 0.0,
        }
    }

    /// Sum of the four per-field cosines, in [0, 4].
    pub fn similarity(&self, a: ProgramId, b: ProgramId) -> f64 {
        Field::ALL.iter().map(|&f| self.cosine(f, a, b)).sum()
    }
}

/// Per-field mean of a user's history vectors. Because cosine is linear in
/// each argument once vectors are normalized, the dot product with this
/// centroid equals the mean per-history-item similarity.
#[derive(Debug, Clone, Default)]
pub struct ContentProfile {
    centroids: [HashMap<u32, f64>; 4],
    empty: bool,
}

impl ContentProfile {
    pub fn new(index: &TfIdfIndex, history: &[ProgramId]) -> Self {
        // accumulate in sorted order so the result ignores history order
        let mut sorted = history.to_vec();
        sorted.sort_unstable();
        let mut centroids: [HashMap<u32, f64>; 4] = Default::default();
        let weight = 1.0 / sorted.len().max(1) as f64;
        for (slot, centroid) in centroids.iter_mut().enumerate() {
            for p in &sorted {
                if let Some(v) = index.fields[slot].vectors.get(p) {
                    for &(t, w) in v {
                        *centroid.entry(t).or_default() += w * weight;
                    }
                }
            }
        }
        ContentProfile {
            centroids,
            empty: sorted.is_empty(),
        }
    }

    pub fn score(&self, index: &TfIdfIndex, candidate: ProgramId) -> f64 {
        if self.empty {
            return 0.0;
        }
        let mut total = 0.0;
        for (slot, centroid) in self.centroids.iter().enumerate() {
            if let Some(v) = index.fields[slot].vectors.get(&candidate) {
                total += v
                    .iter()
                    .map(|(t, w)| w * centroid.get(t).copied().unwrap_or(0.0))
                    .sum::<f64>();
            }
        }
        total
    }
}

/// Mean over history programs of the summed per-field cosine similarity;
/// 0 for an empty history.
pub fn content_based_score(candidate: ProgramId, history: &[ProgramId], index: &TfIdfIndex) -> f64 {
    ContentProfile::new(index, history).score(index, candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Category;
    use crate::ingestion::test_support::{airing, program};

    fn prog(id: u64, title: &str, desc: &str, actors: &[&str], directors: &[&str]) -> Program {
        let mut p = program(id, title, Category::Movies, "movies", 3600);
        p.description = desc.into();
        p.actors = actors.iter().map(|s| s.to_string()).collect();
        p.directors = directors.iter().map(|s| s.to_string()).collect();
        p
    }

    fn catalog(programs: Vec<Program>) -> Catalog {
        let airings = programs
            .iter()
            .map(|p| airing(p.id.0, 1, p.id.0 as i64 * 10_000, p.id.0 as i64 * 10_000 + 3600))
            .collect();
        Catalog::new(programs, airings).unwrap()
    }

    #[test]
    fn identical_documents_have_unit_cosine_per_field() {
        let c = catalog(vec![
            prog(1, "Night Train", "a long ride north", &["Ana Lima"], &["Rui Sousa"]),
            prog(2, "Night Train", "a long ride north", &["Ana Lima"], &["Rui Sousa"]),
            prog(3, "Cooking", "recipes", &["Bo Chen"], &["Li Wei"]),
        ]);
        let idx = build_tfidf(&c).unwrap();
        for f in Field::ALL {
            assert!((idx.cosine(f, ProgramId(1), ProgramId(2)) - 1.0).abs() < 1e-12);
        }
        assert!((content_based_score(ProgramId(2), &[ProgramId(1)], &idx) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabularies_have_zero_cosine() {
        let c = catalog(vec![
            prog(1, "Night Train", "ride", &["Ana Lima"], &[]),
            prog(2, "Cooking Hour", "recipes", &["Bo Chen"], &[]),
        ]);
        let idx = build_tfidf(&c).unwrap();
        assert_eq!(idx.similarity(ProgramId(1), ProgramId(2)), 0.0);
        // an empty field contributes nothing
        assert_eq!(idx.vocabulary_size(Field::Directors), 0);
        assert_eq!(idx.cosine(Field::Directors, ProgramId(1), ProgramId(1)), 0.0);
    }

    #[test]
    fn shared_rare_term_beats_shared_common_term() {
        // titles: {rare, common}, {rare, x}, {common, y}, {common, z}
        // df(rare) = 2, df(common) = 3, df(x) = df(y) = df(z) = 1, N = 4
        let c = catalog(vec![
            prog(1, "rare common", "", &[], &[]),
            prog(2, "rare x", "", &[], &[]),
            prog(3, "common y", "", &[], &[]),
            prog(4, "common z", "", &[], &[]),
        ]);
        let idx = build_tfidf(&c).unwrap();
        let idf = |df: f64| ((1.0 + 4.0) / (1.0 + df)).ln() + 1.0;
        let (r, m, u) = (idf(2.0), idf(3.0), idf(1.0));
        let rare_pair = r * r / ((r * r + m * m).sqrt() * (r * r + u * u).sqrt());
        let common_pair = m * m / ((r * r + m * m).sqrt() * (m * m + u * u).sqrt());
        let got_rare = idx.cosine(Field::Title, ProgramId(1), ProgramId(2));
        let got_common = idx.cosine(Field::Title, ProgramId(1), ProgramId(3));
        assert!((got_rare - rare_pair).abs() < 1e-12);
        assert!((got_common - common_pair).abs() < 1e-12);
        assert!(got_rare > got_common);
    }

    #[test]
    fn sharing_only_actors_scores_the_actor_cosine() {
        let c = catalog(vec![
            prog(1, "Alpha", "first story", &["Ana Lima", "Bo Chen"], &["Dan"]),
            prog(2, "Beta", "second tale", &["Ana Lima"], &["Eve"]),
            prog(3, "Gamma", "third", &["Bo Chen"], &["Dan"]),
        ]);
        let idx = build_tfidf(&c).unwrap();
        // actors: "ana lima" df 2, "bo chen" df 2 → equal idf, so the cosine
        // of {ana, bo} and {ana} is 1/sqrt(2)
        let expected = 1.0 / 2f64.sqrt();
        let s = content_based_score(ProgramId(2), &[ProgramId(1)], &idx);
        assert!((s - idx.cosine(Field::Actors, ProgramId(1), ProgramId(2))).abs() < 1e-12);
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_history_scores_zero_and_order_is_irrelevant() {
        let c = catalog(vec![
            prog(1, "Alpha news", "story", &["A"], &[]),
            prog(2, "Beta news", "tale", &["B"], &[]),
            prog(3, "Gamma news", "story tale", &["A", "B"], &[]),
        ]);
        let idx = build_tfidf(&c).unwrap();
        assert_eq!(content_based_score(ProgramId(3), &[], &idx), 0.0);
        let a = content_based_score(ProgramId(3), &[ProgramId(1), ProgramId(2)], &idx);
        let b = content_based_score(ProgramId(3), &[ProgramId(2), ProgramId(1)], &idx);
        assert_eq!(a, b);
        let direct = (idx.similarity(ProgramId(3), ProgramId(1)) + idx.similarity(ProgramId(3), ProgramId(2))) / 2.0;
        assert!((a - direct).abs() < 1e-12);
    }

    #[test]
    fn empty_catalog_is_rejected() {
        let c = Catalog::new(vec![], vec![]).unwrap();
        assert!(build_tfidf(&c).is_err());
    }
}
