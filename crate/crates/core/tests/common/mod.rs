#![allow(dead_code)]

pub mod brute;

use fareval::corpus::{Fam, Sample, Sentence, SupportGroup};
use proptest::prelude::*;

/// Random sample with `d` document sentences and up to 4 facets, some of
/// them unmappable.
pub fn arb_sample(max_d: usize) -> impl Strategy<Value = Sample> {
    (1..=max_d).prop_flat_map(|d| {
        let group = prop::collection::btree_set(0..d, 1..=d.min(3));
        let fam = prop::collection::vec(group, 0..=3);
        prop::collection::vec(fam, 1..=4).prop_map(move |fams| {
            let document = (0..d).map(|i| Sentence::new(format!("sentence {i}")).unwrap()).collect();
            let reference = (0..fams.len())
                .map(|i| Sentence::new(format!("facet {i}")).unwrap())
                .collect();
            let fams = fams
                .into_iter()
                .map(|groups| {
                    let mut groups: Vec<SupportGroup> =
                        groups.into_iter().filter_map(SupportGroup::new).collect();
                    groups.dedup();
                    Fam::unlabeled(groups)
                })
                .collect();
            Sample::new("x", document, reference, fams).unwrap()
        })
    })
}

/// Token sequences over a small vocabulary so overlaps are frequent.
pub fn arb_tokens(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..=max_len)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn words(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec![
            "the", "cat", "sat", "on", "mat", "dog", "ran", "far", "away", "news", "people", "died",
            "outbreak", "city", "mayor", "said",
        ]),
        n,
    )
    .prop_map(|w| w.join(" "))
}

/// Sample with random word sentences and no gold support.
pub fn arb_text_sample(max_d: usize) -> impl Strategy<Value = Sample> {
    (
        prop::collection::vec(words(1..=8), 1..=max_d),
        prop::collection::vec(words(1..=8), 1..=3),
    )
        .prop_map(|(doc, reference)| {
            let fams = reference.iter().map(|_| Fam::unlabeled(vec![])).collect();
            Sample::new(
                "t",
                doc.into_iter().map(|s| Sentence::new(s).unwrap()).collect(),
                reference.into_iter().map(|s| Sentence::new(s).unwrap()).collect(),
                fams,
            )
            .unwrap()
        })
}
