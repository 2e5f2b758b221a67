//! Synthetic separable datasets for tests, benchmarks and smoke runs.
//!
//! Each label set ("class") owns a few mention words; sentences surround one
//! mention word with filler tokens drawn from a shared vocabulary. With hashed
//! token vectors the mention word alone determines the gold set, so a model
//! that fits the training words classifies held-out sentences perfectly.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::DatasetRecord;

/// A 3-level ontology with 15 types.
pub const ONTOLOGY_15: &[&str] = &[
    "/person/artist/singer",
    "/person/artist/actor",
    "/person/athlete/swimmer",
    "/organization/company/bank",
    "/organization/government",
    "/location/city/capital",
    "/location/country/island",
];

/// Gold label sets over [`ONTOLOGY_15`]: full paths, partial paths and
/// two-path (multi-label at level 1) sets.
pub const CLASSES_15: &[&[&str]] = &[
    &["/person/artist/singer"],
    &["/person/artist/actor"],
    &["/person/athlete/swimmer"],
    &["/person/artist"],
    &["/organization/company/bank"],
    &["/organization/government"],
    &["/organization/company"],
    &["/location/city/capital"],
    &["/location/country/island"],
    &["/location/country"],
    &["/person/artist/singer", "/organization/company"],
    &["/location/city/capital", "/organization/government"],
];

#[derive(Debug, Clone)]
pub struct SyntheticSpec<'a> {
    pub classes: &'a [&'a [&'a str]],
    pub words_per_class: usize,
    pub filler_vocab: usize,
    pub min_context: usize,
    pub max_context: usize,
}

impl Default for SyntheticSpec<'static> {
    fn default() -> Self {
        SyntheticSpec {
            classes: CLASSES_15,
            words_per_class: 2,
            filler_vocab: 40,
            min_context: 2,
            max_context: 6,
        }
    }
}

impl SyntheticSpec<'_> {
    /// The mention word `w` of class `c`.
    pub fn mention_word(c: usize, w: usize) -> String {
        format!("mention{c}_{w}")
    }

    /// `n` records, cycling through the classes so every class is covered.
    pub fn records(&self, n: usize, seed: u64) -> Vec<DatasetRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fillers: Vec<String> = (0..self.filler_vocab).map(|i| format!("filler{i}")).collect();
        (0..n)
            .map(|i| {
                let class = i % self.classes.len();
                let left = rng.random_range(self.min_context..=self.max_context) / 2;
                let right = rng.random_range(self.min_context..=self.max_context) / 2;
                let mut tokens: Vec<String> =
                    (0..left).map(|_| fillers.choose(&mut rng).expect("fillers").clone()).collect();
                let word = rng.random_range(0..self.words_per_class);
                tokens.push(Self::mention_word(class, word));
                tokens.extend((0..right).map(|_| fillers.choose(&mut rng).expect("fillers").clone()));
                DatasetRecord {
                    tokens,
                    span: [left + 1, left + 1],
                    labels: self.classes[class].iter().map(|s| s.to_string()).collect(),
                    vectors: None,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::TypeTree;

    #[test]
    fn fifteen_types_three_levels() {
        let t = TypeTree::parse(ONTOLOGY_15.iter().copied()).unwrap();
        assert_eq!(t.len() - 1, 15);
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn records_are_deterministic_and_valid() {
        let spec = SyntheticSpec::default();
        let a = spec.records(30, 4);
        assert_eq!(a, spec.records(30, 4));
        for r in &a {
            let [l, rr] = r.span;
            assert!(l >= 1 && l <= rr && rr <= r.tokens.len());
            assert!(r.tokens[l - 1].starts_with("mention"));
        }
    }
}
