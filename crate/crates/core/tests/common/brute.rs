//! Slow reference implementations, written straight from the definitions.

use std::collections::{BTreeMap, HashSet};

use fareval::corpus::Sample;
use fareval::metrics::{far, FacetScope};

/// Packs a short sequence over symbols < 4 into a unique integer (the
/// leading 1 keeps lengths apart).
fn pack(seq: impl Iterator<Item = u8>) -> u32 {
    seq.fold(1, |acc, c| (acc << 2) | u32::from(c))
}

/// Every subsequence of `s` (length ≤ 15, symbols < 4), packed.
fn subsequences(s: &[u8]) -> impl Iterator<Item = (u32, usize)> + '_ {
    (0u32..1 << s.len()).map(move |mask| {
        let picked = s.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| *c);
        (pack(picked), mask.count_ones() as usize)
    })
}

/// Packed subsequences of a sequence with their lengths, for reuse across
/// many comparisons.
pub struct Subsequences {
    packed: HashSet<u32>,
    with_len: Vec<(u32, usize)>,
}

impl Subsequences {
    pub fn of(s: &[u8]) -> Self {
        let with_len: Vec<(u32, usize)> = subsequences(s).collect();
        Subsequences {
            packed: with_len.iter().map(|p| p.0).collect(),
            with_len,
        }
    }

    /// Longest subsequence shared with `other`.
    pub fn lcs(&self, other: &Subsequences) -> usize {
        self.with_len
            .iter()
            .filter(|(p, _)| other.packed.contains(p))
            .map(|(_, len)| *len)
            .max()
            .unwrap_or(0)
    }
}

/// Length of the longest sequence that is a subsequence of both inputs,
/// by enumerating every subsequence.
pub fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    Subsequences::of(a).lcs(&Subsequences::of(b))
}

/// All sequences over `alphabet` symbols with length ≤ `max_len`.
pub fn all_sequences(max_len: usize, alphabet: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Kendall tau-b from concordant/discordant pair counts and tie-group
/// corrections; `None` when either series is constant.
pub fn brute_tau_b(x: &[i64], y: &[i64]) -> Option<f64> {
    let n = x.len();
    let mut c = 0i64;
    let mut d = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            if s > 0 {
                c += 1;
            } else if s < 0 {
                d += 1;
            }
        }
    }
    let tie_pairs = |v: &[i64]| -> i64 {
        let mut groups: BTreeMap<i64, i64> = BTreeMap::new();
        for x in v {
            *groups.entry(*x).or_default() += 1;
        }
        groups.values().map(|t| t * (t - 1) / 2).sum()
    };
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tie_pairs(x)) as f64 * (n0 - tie_pairs(y)) as f64).sqrt();
    (denom > 0.0).then(|| (c - d) as f64 / denom)
}

/// Best FAR over every subset of the whole document with at most `k`
/// sentences, and the lexicographically smallest optimal subset made only
/// of support sentences (the space the tie-break is defined on).
pub fn brute_oracle(sample: &Sample, k: usize, scope: FacetScope) -> (Vec<usize>, f64) {
    let d = sample.document.len();
    let scored: Vec<(Vec<usize>, f64)> = (0u32..1 << d)
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| {
            let e: Vec<usize> = (0..d).filter(|i| m & (1 << i) != 0).collect();
            let value = far(sample, &e.iter().copied().collect(), scope).unwrap();
            (e, value)
        })
        .collect();
    let best = scored.iter().map(|s| s.1).fold(0.0, f64::max);
    let support = sample.support_union();
    let smallest = scored
        .into_iter()
        .filter(|s| s.1 == best && s.0.iter().all(|i| support.contains(i)))
        .map(|s| s.0)
        .min()
        .unwrap();
    (smallest, best)
}
