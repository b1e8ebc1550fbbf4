mod common;

use std::collections::BTreeSet;
use std::io::Cursor;

use common::{arb_sample, arb_text_sample, arb_tokens};
use fareval::corpus::{
    filter_by_category, match_text_to_indices, normalize_text, parse_dataset, write_dataset, Fam, Sample,
    SampleCategory, Sentence, SupportGroup,
};
use fareval::labelers::{greedy_select, make_machine_fams, per_facet_rank, LabelerConfig};
use fareval::metrics::{far, sar, FacetScope};
use fareval::rouge::{rouge_l_sentence, rouge_n, rouge_n_multi, TokenSeq};
use fareval::similarity::{SimilarityMeasure, TfIdfModel};
use fareval::stats::{kendall_tau_b, ols_fit, ols_predict, pearson, spearman, PairedSeries};
use fareval::IndexSet;
use proptest::prelude::*;

fn seq(tokens: Vec<String>) -> TokenSeq {
    TokenSeq::from_tokens(tokens)
}

fn arb_extraction(d: usize) -> impl Strategy<Value = (IndexSet, IndexSet)> {
    (
        prop::collection::btree_set(0..d, 0..=d),
        prop::collection::btree_set(0..d, 0..=d),
    )
        .prop_map(|(a, b)| {
            let bigger = a.union(&b).copied().collect();
            (a, bigger)
        })
}

fn sample_and_pair(max_d: usize) -> impl Strategy<Value = (Sample, IndexSet, IndexSet)> {
    arb_sample(max_d).prop_flat_map(|s| {
        let d = s.document.len();
        (Just(s), arb_extraction(d)).prop_map(|(s, (a, b))| (s, a, b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn far_sar_monotone_under_growth((sample, small, big) in sample_and_pair(12)) {
        for scope in [FacetScope::MappableOnly, FacetScope::AllFacets] {
            let (a, b) = (far(&sample, &small, scope).unwrap(), far(&sample, &big, scope).unwrap());
            prop_assert!(a <= b);
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        }
        if !sample.support_union().is_empty() {
            let (a, b) = (sar(&sample, &small).unwrap(), sar(&sample, &big).unwrap());
            prop_assert!(a <= b);
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn non_support_sentences_change_nothing((sample, e, _) in sample_and_pair(12)) {
        let support = sample.support_union();
        let extra: IndexSet = (0..sample.document.len()).filter(|i| !support.contains(i)).collect();
        let grown: IndexSet = e.union(&extra).copied().collect();
        for scope in [FacetScope::MappableOnly, FacetScope::AllFacets] {
            prop_assert_eq!(far(&sample, &e, scope).unwrap(), far(&sample, &grown, scope).unwrap());
        }
        if !support.is_empty() {
            prop_assert_eq!(sar(&sample, &e).unwrap(), sar(&sample, &grown).unwrap());
        }
    }

    #[test]
    fn full_extraction_is_perfect(sample in arb_sample(12)) {
        let all: IndexSet = (0..sample.document.len()).collect();
        let value = far(&sample, &all, FacetScope::MappableOnly).unwrap();
        if sample.fams.iter().any(Fam::is_mappable) {
            prop_assert_eq!(value, 1.0);
            prop_assert_eq!(sar(&sample, &all).unwrap(), 1.0);
        } else {
            prop_assert_eq!(value, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rouge_swap_symmetry(a in arb_tokens(12), b in arb_tokens(12), n in 1usize..=3) {
        let (a, b) = (seq(a), seq(b));
        let ab = rouge_n(&a, &b, n);
        let ba = rouge_n(&b, &a, n);
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-15);
        for v in [ab.precision, ab.recall, ab.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let l = rouge_l_sentence(&a, &b);
        prop_assert!((l.f1 - rouge_l_sentence(&b, &a).f1).abs() < 1e-15);
    }

    #[test]
    fn rouge_identity(a in arb_tokens(12), n in 1usize..=3) {
        let a = seq(a);
        if a.len() >= n {
            prop_assert!((rouge_n(&a, &a, n).f1 - 1.0).abs() < 1e-15);
        }
        if !a.is_empty() {
            prop_assert!((rouge_l_sentence(&a, &a).f1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rouge_match_count_is_clipped(a in arb_tokens(10), b in arb_tokens(10), extra in 0usize..5, pick in 0usize..10) {
        let (cand, reference) = (seq(a.clone()), seq(b.clone()));
        let hits = |c: &TokenSeq| (rouge_n(c, &reference, 1).recall * reference.len() as f64).round() as usize;
        let base = hits(&cand);
        prop_assert!(base <= cand.len().min(reference.len()));
        if !a.is_empty() {
            let token = a[pick % a.len()].clone();
            let mut padded = a.clone();
            padded.extend(std::iter::repeat_n(token.clone(), extra));
            let padded = seq(padded);
            let ref_count = b.iter().filter(|t| **t == token).count();
            let cand_count = padded.tokens().iter().filter(|t| **t == token).count();
            // matches on `token` never exceed the reference count
            let others = base - a.iter().filter(|t| **t == token).count().min(ref_count);
            prop_assert_eq!(hits(&padded), others + cand_count.min(ref_count));
        }
    }

    #[test]
    fn multi_sentence_unigrams_equal_concatenation(a in arb_tokens(6), b in arb_tokens(6), r in arb_tokens(8)) {
        let (a, b, r) = (seq(a), seq(b), seq(r));
        let joined = a.concat(&b);
        prop_assert_eq!(rouge_n_multi(&[&a, &b], &[&r], 1), rouge_n(&joined, &r, 1));
    }

    #[test]
    fn tfidf_cosine_properties(a in arb_tokens(8), b in arb_tokens(8), c in arb_tokens(8)) {
        let (a, b, c) = (seq(a), seq(b), seq(c));
        if let Ok(model) = TfIdfModel::fit([&a, &b, &c]) {
            let ab = model.cosine(&a, &b);
            prop_assert!((ab - model.cosine(&b, &a)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            let doubled = a.concat(&a);
            prop_assert!((model.cosine(&doubled, &b) - ab).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn greedy_trace_strictly_increases(sample in arb_text_sample(12)) {
        let doc = sample.document_tokens(false);
        let reference = sample.reference_tokens(false);
        let picked = greedy_select(&doc, &reference);
        prop_assert!(picked.len() <= doc.len());
        let unique: BTreeSet<_> = picked.iter().collect();
        prop_assert_eq!(unique.len(), picked.len());
        let refs: Vec<&TokenSeq> = reference.iter().collect();
        let mut last = 0.0;
        for i in 1..=picked.len() {
            let prefix: Vec<&TokenSeq> = picked[..i].iter().map(|&j| &doc[j]).collect();
            let f1 = rouge_n_multi(&prefix, &refs, 1).f1;
            prop_assert!(f1 > last);
            last = f1;
        }
    }

    #[test]
    fn top_n_labels_nest(sample in arb_text_sample(10), k in 1usize..4, m in 0usize..7) {
        let measure = SimilarityMeasure::ALL[m];
        let small = make_machine_fams(&sample, &LabelerConfig::top_n(measure, k)).unwrap();
        let large = make_machine_fams(&sample, &LabelerConfig::top_n(measure, k + 1)).unwrap();
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(s.groups.len() <= k);
            prop_assert_eq!(&l.groups[..s.groups.len()], &s.groups[..]);
        }
        let again = make_machine_fams(&sample, &LabelerConfig::top_n(measure, k)).unwrap();
        prop_assert_eq!(small, again);
    }

    #[test]
    fn exact_copy_ranked_first(sample in arb_text_sample(10), pick in 0usize..10) {
        let doc = sample.document_tokens(false);
        let target = &doc[pick % doc.len()];
        let ranked = per_facet_rank(&doc, target, SimilarityMeasure::Rouge1F1, None).unwrap();
        // first position holds an exact copy: the lowest index with identical tokens
        let first_copy = doc.iter().position(|d| d == target).unwrap();
        prop_assert_eq!(ranked[0].0, first_copy);
        prop_assert_eq!(ranked[0].1, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rank_correlations_invariant_under_monotone_maps(
        pts in prop::collection::vec((-50i32..50, -50i32..50), 2..12),
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1 as f64).collect();
        let fx: Vec<f64> = x.iter().map(|v| (v / 10.0).exp() + 3.0 * v).collect();
        let base = PairedSeries::new(x, y.clone()).unwrap();
        let mapped = PairedSeries::new(fx, y).unwrap();
        match (spearman(&base), spearman(&mapped)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
        match (kendall_tau_b(&base), kendall_tau_b(&mapped)) {
            (Ok(a), Ok(b)) => {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn pearson_of_affine_map_is_sign(
        x in prop::collection::vec(-100.0f64..100.0, 3..20),
        a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        b in -10.0f64..10.0,
    ) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let s = PairedSeries::new(x, y).unwrap();
        if let Ok(r) = pearson(&s) {
            prop_assert!((r - a.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn ols_residuals_orthogonal(
        rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 8..30),
        noise in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let target: Vec<f64> = rows
            .iter()
            .zip(&noise)
            .map(|(r, e)| 0.5 + 2.0 * r[0] - r[1] + 0.25 * r[2] + e)
            .collect();
        if let Ok(model) = ols_fit(&rows, &target) {
            let fitted = ols_predict(&model, &rows).unwrap();
            let resid: Vec<f64> = target.iter().zip(&fitted).map(|(t, f)| t - f).collect();
            let scale: f64 = target.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
            prop_assert!(resid.iter().sum::<f64>().abs() <= 1e-9 * scale);
            for j in 0..3 {
                let col_scale: f64 = rows.iter().map(|r| r[j].abs()).sum::<f64>() * scale;
                let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dot.abs() <= 1e-9 * col_scale.max(1.0));
            }
        }
    }
}

fn category_sample(id: usize, cats: Vec<Option<&'static str>>) -> Sample {
    use fareval::corpus::FacetCategory::*;
    let fams = cats
        .iter()
        .map(|c| match c {
            Some("noise") => Fam { groups: vec![], category: Noise },
            Some(_) => Fam { groups: vec![], category: High },
            None => Fam::unlabeled(vec![SupportGroup::singleton(0)]),
        })
        .collect();
    Sample::new(
        format!("s{id}"),
        vec![Sentence::new("a document sentence").unwrap()],
        cats.iter().map(|_| Sentence::new("a reference sentence").unwrap()).collect(),
        fams,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn dataset_round_trips_and_partitions(
        layout in prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec![None, Some("noise"), Some("high")]), 1..4),
            0..12,
        ),
    ) {
        let ds: Vec<Sample> = layout.into_iter().enumerate().map(|(i, c)| category_sample(i, c)).collect();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = parse_dataset(Cursor::new(buf)).unwrap();
        prop_assert_eq!(&back, &ds);

        let mut seen = BTreeSet::new();
        let mut total = 0;
        for cat in SampleCategory::ALL {
            let part = filter_by_category(&ds, &BTreeSet::from([cat]));
            total += part.len();
            for s in part {
                prop_assert!(seen.insert(s.id.clone()));
            }
        }
        prop_assert_eq!(total, ds.len());
    }

    #[test]
    fn matching_own_text_is_idempotent(
        texts in prop::collection::vec("[A-Za-z]{1,3}( [a-z]{1,3}){0,2}[.!]?", 1..8),
        pick in 0usize..8,
    ) {
        let doc: Vec<Sentence> = texts.iter().map(|t| Sentence::new(t.clone()).unwrap()).collect();
        let i = pick % doc.len();
        let got = match_text_to_indices(&[doc[i].raw()], &doc).unwrap();
        prop_assert_eq!(got.len(), 1);
        prop_assert!(got[0] <= i);
        prop_assert_eq!(normalize_text(doc[got[0]].raw()), normalize_text(doc[i].raw()));
    }
}
