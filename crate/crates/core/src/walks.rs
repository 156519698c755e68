//! Exact combinatorics of closed walks on trees.
//!
//! As `N -> inf` only closed walks whose traversed edges form a tree survive
//! in the normalized trace `Tr A^{2p} / N`. A walk with `l` distinct edges
//! contributes `Z^l` times the expected trace of the product of the blocks it
//! meets, so the moment is a polynomial in `Z` whose terms are indexed by
//! canonical block words. Words whose position partition is non-crossing
//! survive the finite-rank `d -> inf` limit, each contributing `t^l`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blocks::{word_expectation_mc, BlockMeasure};
use crate::error::{Error, Result};
use crate::stats::Estimate;
use crate::theory::series::IntPoly;

/// A block `X_label` raised to `exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub label: u32,
    pub exp: u32,
}

/// Product of blocks with labels renamed by first occurrence and runs merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// Builds a word from explicit letters, checking canonical form: labels
    /// introduced in order 1, 2, ... and no two adjacent letters sharing a label.
    pub fn from_letters(letters: Vec<Letter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidWord("empty word".into()));
        }
        let mut next = 1;
        for (k, l) in letters.iter().enumerate() {
            if l.exp == 0 {
                return Err(Error::InvalidWord("zero exponent".into()));
            }
            if l.label > next || l.label == 0 {
                return Err(Error::InvalidWord(format!(
                    "label {} out of first-occurrence order",
                    l.label
                )));
            }
            if l.label == next {
                next += 1;
            }
            if k > 0 && letters[k - 1].label == l.label {
                return Err(Error::InvalidWord("adjacent letters share a label".into()));
            }
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Number of distinct blocks `s`.
    pub fn distinct_blocks(&self) -> usize {
        self.letters.iter().map(|l| l.label).max().unwrap_or(0) as usize
    }

    /// Total letter count `P`.
    pub fn total_length(&self) -> u32 {
        self.letters.iter().map(|l| l.exp).sum()
    }

    /// Total exponent `r_k` of each label, indexed from label 1.
    pub fn label_exponents(&self) -> Vec<u32> {
        let mut out = vec![0; self.distinct_blocks()];
        for l in &self.letters {
            out[l.label as usize - 1] += l.exp;
        }
        out
    }

    /// Label of every position once exponents are expanded.
    pub fn positions(&self) -> Vec<u32> {
        self.letters
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.label, l.exp as usize))
            .collect()
    }

    /// Representative of the word's class under cyclic rotation and reversal,
    /// which leave the trace of a product of symmetric blocks unchanged.
    ///
    /// Among all rotations and reversals (cyclically merged, then relabeled),
    /// picks the one whose exponent sequence is lexicographically largest,
    /// breaking ties by the smallest label sequence.
    pub fn trace_canonical(&self) -> Word {
        let pos = self.positions();
        let n = pos.len();
        let all_same = pos.iter().all(|&x| x == pos[0]);
        if all_same {
            return Word {
                letters: vec![Letter {
                    label: 1,
                    exp: n as u32,
                }],
            };
        }
        let reversed: Vec<u32> = pos.iter().rev().copied().collect();
        let mut best: Option<(Vec<u32>, Vec<u32>)> = None;
        for seq in [&pos, &reversed] {
            for start in 0..n {
                // Only rotations that start at a run boundary give distinct merged words.
                if seq[start] == seq[(start + n - 1) % n] {
                    continue;
                }
                let rotated: Vec<u32> = (0..n).map(|k| seq[(start + k) % n]).collect();
                let w = canonical_word(&rotated).expect("nonempty");
                let exps: Vec<u32> = w.letters.iter().map(|l| l.exp).collect();
                let labels: Vec<u32> = w.letters.iter().map(|l| l.label).collect();
                let better = match &best {
                    None => true,
                    Some((be, bl)) => exps > *be || (exps == *be && labels < *bl),
                };
                if better {
                    best = Some((exps, labels));
                }
            }
        }
        let (exps, labels) = best.expect("at least two runs");
        Word {
            letters: labels
                .into_iter()
                .zip(exps)
                .map(|(label, exp)| Letter { label, exp })
                .collect(),
        }
    }
}

impl fmt::Display for Word {
    /// `label^exp` tokens separated by spaces, e.g. `1^6 2^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}^{}", l.label, l.exp)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .split_whitespace()
            .map(|tok| {
                let (label, exp) = tok
                    .split_once('^')
                    .ok_or_else(|| Error::InvalidWord(format!("token `{tok}` is not label^exp")))?;
                let parse = |x: &str| {
                    x.parse::<u32>().map_err(|_| {
                        Error::InvalidWord(format!("token `{tok}` has a non-integer part"))
                    })
                };
                Ok(Letter {
                    label: parse(label)?,
                    exp: parse(exp)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Word::from_letters(letters)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Relabels identifiers by first occurrence and merges runs into exponents.
pub fn canonical_word<T: PartialEq>(ids: &[T]) -> Result<Word> {
    if ids.is_empty() {
        return Err(Error::InvalidWord("empty block sequence".into()));
    }
    let mut seen: Vec<&T> = Vec::new();
    let mut letters: Vec<Letter> = Vec::new();
    for id in ids {
        let label = match seen.iter().position(|s| *s == id) {
            Some(k) => k as u32 + 1,
            None => {
                seen.push(id);
                seen.len() as u32
            }
        };
        match letters.last_mut() {
            Some(last) if last.label == label => last.exp += 1,
            _ => letters.push(Letter { label, exp: 1 }),
        }
    }
    Ok(Word { letters })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossing {
    NonCrossing,
    Crossing,
}

/// Tests whether the partition of positions by label is crossing, i.e. some
/// `a < b < c < e` has `a, c` in one class and `b, e` in another.
pub fn classify_word(w: &Word) -> Crossing {
    let pos = w.positions();
    let s = w.distinct_blocks() as u32;
    // For labels x != y the classes cross iff the subsequence restricted to
    // {x, y} has more than two alternating runs cyclically, i.e. at least 4
    // label changes.
    for x in 1..=s {
        for y in x + 1..=s {
            let sub: Vec<u32> = pos.iter().copied().filter(|&l| l == x || l == y).collect();
            let changes = (0..sub.len())
                .filter(|&k| sub[k] != sub[(k + 1) % sub.len()])
                .count();
            if changes >= 4 {
                return Crossing::Crossing;
            }
        }
    }
    Crossing::NonCrossing
}

/// One term `mult * Z^z * tr(word)` of a moment polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub z: u32,
    pub word: Word,
    pub mult: u64,
}

/// `mu_{2p}` as a polynomial in `Z` over trace-canonical words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPolynomial {
    p: u32,
    terms: BTreeMap<(u32, Word), u64>,
}

#[derive(Serialize, Deserialize)]
struct MomentPolynomialJson {
    p: u32,
    terms: Vec<Term>,
}

impl MomentPolynomial {
    pub fn half_order(&self) -> u32 {
        self.p
    }

    pub fn multiplicity(&self, z: u32, word: &Word) -> u64 {
        self.terms.get(&(z, word.clone())).copied().unwrap_or(0)
    }

    /// Terms ordered by power of `Z`, then by the canonical word order
    /// (largest exponent sequence first).
    pub fn terms(&self) -> Vec<Term> {
        let mut out: Vec<Term> = self
            .terms
            .iter()
            .map(|((z, word), &mult)| Term {
                z: *z,
                word: word.clone(),
                mult,
            })
            .collect();
        out.sort_by(|a, b| {
            let ea: Vec<u32> = a.word.letters.iter().map(|l| l.exp).collect();
            let eb: Vec<u32> = b.word.letters.iter().map(|l| l.exp).collect();
            a.z.cmp(&b.z).then(eb.cmp(&ea)).then(a.word.cmp(&b.word))
        });
        out
    }

    /// Sum of multiplicities at a given power of `Z`.
    pub fn total_at(&self, z: u32) -> u64 {
        self.terms
            .iter()
            .filter(|((zz, _), _)| *zz == z)
            .map(|(_, m)| m)
            .sum()
    }

    /// Value at `d = 1` with every block equal to 1: `sum mult * Z^z`.
    pub fn scalar_value(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|((zz, _), &m)| m as f64 * z.powi(*zz as i32))
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MomentPolynomialJson {
            p: self.p,
            terms: self.terms(),
        })
        .expect("plain data")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: MomentPolynomialJson = serde_json::from_value(v.clone())?;
        let mut terms = BTreeMap::new();
        for t in raw.terms {
            if t.z as usize != t.word.distinct_blocks() {
                return Err(Error::Parse(format!(
                    "term {} has z = {} but {} blocks",
                    t.word,
                    t.z,
                    t.word.distinct_blocks()
                )));
            }
            *terms.entry((t.z, t.word)).or_insert(0) += t.mult;
        }
        Ok(Self { p: raw.p, terms })
    }
}

pub const MAX_WALK_HALF_LENGTH: u32 = 6;

/// Enumerates closed walks of length `2p` from a root over trees whose
/// vertices are numbered in order of discovery, and aggregates them by
/// (number of distinct edges, trace-canonical word).
pub fn enumerate_tree_walks(p: u32) -> Result<MomentPolynomial> {
    if p == 0 || p > MAX_WALK_HALF_LENGTH {
        return Err(Error::Resource(format!(
            "tree-walk enumeration supports 1 <= p <= {MAX_WALK_HALF_LENGTH}, got {p}"
        )));
    }
    let mut state = WalkState {
        steps: 2 * p as usize,
        parent: vec![usize::MAX],
        children: vec![Vec::new()],
        edge_seq: Vec::with_capacity(2 * p as usize),
        terms: BTreeMap::new(),
    };
    state.extend(0);
    Ok(MomentPolynomial {
        p,
        terms: state.terms,
    })
}

struct WalkState {
    steps: usize,
    // Tree edges are named by their child endpoint.
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    edge_seq: Vec<usize>,
    terms: BTreeMap<(u32, Word), u64>,
}

impl WalkState {
    fn extend(&mut self, at: usize) {
        let remaining = self.steps - self.edge_seq.len();
        if remaining == 0 {
            if at == 0 {
                self.record();
            }
            return;
        }
        // Distance to the root bounds how far the walk can still wander.
        if self.depth(at) > remaining {
            return;
        }
        let up = self.parent[at];
        if up != usize::MAX {
            self.edge_seq.push(at);
            self.extend(up);
            self.edge_seq.pop();
        }
        for k in 0..self.children[at].len() {
            let child = self.children[at][k];
            self.edge_seq.push(child);
            self.extend(child);
            self.edge_seq.pop();
        }
        let fresh = self.parent.len();
        self.parent.push(at);
        self.children.push(Vec::new());
        self.children[at].push(fresh);
        self.edge_seq.push(fresh);
        self.extend(fresh);
        self.edge_seq.pop();
        self.children[at].pop();
        self.children.pop();
        self.parent.pop();
    }

    fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while self.parent[v] != usize::MAX {
            v = self.parent[v];
            d += 1;
        }
        d
    }

    fn record(&mut self) {
        let mut uses: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in &self.edge_seq {
            *uses.entry(e).or_insert(0) += 1;
        }
        if uses.values().any(|c| c % 2 != 0) {
            return;
        }
        let word = canonical_word(&self.edge_seq)
            .expect("nonempty walk")
            .trace_canonical();
        *self.terms.entry((uses.len() as u32, word)).or_insert(0) += 1;
    }
}

/// `sum_{non-crossing terms} mult * t^z`: the `d -> inf` limit at fixed
/// `t = rZ/d` for finite-rank blocks.
pub fn finite_rank_limit(mp: &MomentPolynomial) -> IntPoly {
    let mut coeffs = vec![0u64; mp.p as usize + 1];
    for ((z, word), &mult) in &mp.terms {
        if classify_word(word) == Crossing::NonCrossing {
            coeffs[*z as usize] += mult;
        }
    }
    IntPoly::from_u64(&coeffs)
}

/// Finite-`d` Monte-Carlo value of the moment:
/// `sum mult * Z^z * (1/d) <tr word>`, errors combined in quadrature.
pub fn evaluate_moment_polynomial<R: Rng + ?Sized>(
    mp: &MomentPolynomial,
    measure: &BlockMeasure,
    z: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let d = measure.dim() as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for t in mp.terms() {
        let est = word_expectation_mc(measure, &t.word, n_samples, rng)?;
        let scale = t.mult as f64 * z.powi(t.z as i32) / d;
        value += scale * est.value;
        var += (scale * est.stderr).powi(2);
    }
    Ok(Estimate::new(value, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn relabels_the_edge_sequence_example() {
        // edges 13,13,13,34,47,47,34,13
        let seq = [13, 13, 13, 34, 47, 47, 34, 13];
        assert_eq!(canonical_word(&seq).unwrap(), w("1^3 2^1 3^2 2^1 1^1"));
        assert_eq!(canonical_word(&[7, 7, 7, 7]).unwrap(), w("1^4"));
        assert_eq!(
            canonical_word(&[2, 2, 5, 5, 2, 2, 5, 5]).unwrap(),
            w("1^2 2^2 1^2 2^2")
        );
        assert!(canonical_word::<u8>(&[]).is_err());
    }

    #[test]
    fn word_derived_quantities() {
        let x = w("1^3 2^1 3^2 2^1 1^1");
        assert_eq!(x.distinct_blocks(), 3);
        assert_eq!(x.total_length(), 8);
        assert_eq!(x.label_exponents(), vec![4, 2, 2]);
    }

    #[test]
    fn word_parse_rejects_non_canonical() {
        assert!("2^1 1^1".parse::<Word>().is_err());
        assert!("1^1 1^2".parse::<Word>().is_err());
        assert!("1^0".parse::<Word>().is_err());
        assert!("1-2".parse::<Word>().is_err());
        assert!("".parse::<Word>().is_err());
    }

    #[test]
    fn trace_canonical_merges_rotations() {
        assert_eq!(w("1^1 2^2 1^1").trace_canonical(), w("1^2 2^2"));
        assert_eq!(w("1^1 2^2 1^3 3^2").trace_canonical(), w("1^3 2^2 1^1 3^2"));
        assert_eq!(w("1^2 2^2 3^2 2^2").trace_canonical(), w("1^2 2^2 1^2 3^2"));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_word(&w("1^2 2^2")), Crossing::NonCrossing);
        assert_eq!(classify_word(&w("1^2 2^2 1^2 2^2")), Crossing::Crossing);
        assert_eq!(
            classify_word(&w("1^3 2^1 3^2 2^1 1^1")),
            Crossing::NonCrossing
        );
        assert_eq!(classify_word(&w("1^1 2^1 1^1 2^1")), Crossing::Crossing);
    }

    /// Direct search for a < b < c < e with matching outer/inner labels.
    fn brute_force_crossing(word: &Word) -> bool {
        let pos = word.positions();
        let n = pos.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for e in c + 1..n {
                        if pos[a] == pos[c] && pos[b] == pos[e] && pos[a] != pos[b] {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn classification_agrees_with_brute_force_on_all_walk_words() {
        for p in 1..=5 {
            for t in enumerate_tree_walks(p).unwrap().terms() {
                let crossing = classify_word(&t.word) == Crossing::Crossing;
                assert_eq!(crossing, brute_force_crossing(&t.word), "{}", t.word);
            }
        }
    }

    #[test]
    fn small_orders() {
        let p1 = enumerate_tree_walks(1).unwrap();
        assert_eq!(
            p1.terms(),
            vec![Term {
                z: 1,
                word: w("1^2"),
                mult: 1
            }]
        );
        let p2 = enumerate_tree_walks(2).unwrap();
        assert_eq!(
            p2.terms(),
            vec![
                Term {
                    z: 1,
                    word: w("1^4"),
                    mult: 1
                },
                Term {
                    z: 2,
                    word: w("1^2 2^2"),
                    mult: 2
                }
            ]
        );
        assert_eq!(p2.scalar_value(3.0), 21.0);
    }

    #[test]
    fn wigner_paths_count_catalan() {
        let catalan = [1u64, 2, 5, 14, 42, 132];
        for p in 1..=6u32 {
            let mp = enumerate_tree_walks(p).unwrap();
            assert_eq!(mp.total_at(p), catalan[p as usize - 1]);
            for t in mp.terms() {
                assert_eq!(t.z as usize, t.word.distinct_blocks());
                assert!(t.word.label_exponents().iter().all(|r| r % 2 == 0));
            }
        }
    }

    #[test]
    fn out_of_range_order_is_a_resource_error() {
        assert!(matches!(enumerate_tree_walks(0), Err(Error::Resource(_))));
        assert!(matches!(enumerate_tree_walks(7), Err(Error::Resource(_))));
    }

    #[test]
    fn limits_for_small_orders() {
        assert_eq!(
            finite_rank_limit(&enumerate_tree_walks(1).unwrap()),
            IntPoly::from_u64(&[0, 1])
        );
        assert_eq!(
            finite_rank_limit(&enumerate_tree_walks(2).unwrap()),
            IntPoly::from_u64(&[0, 1, 2])
        );
        assert_eq!(
            finite_rank_limit(&enumerate_tree_walks(4).unwrap()),
            IntPoly::from_u64(&[0, 1, 12, 28, 14])
        );
    }

    #[test]
    fn json_round_trip() {
        let mp = enumerate_tree_walks(4).unwrap();
        let v = mp.to_json();
        assert_eq!(v["p"], 4);
        assert_eq!(v["terms"][1]["word"], "1^6 2^2");
        assert_eq!(MomentPolynomial::from_json(&v).unwrap(), mp);
    }

    proptest::proptest! {
        #[test]
        fn canonical_word_is_relabel_invariant_and_idempotent(
            seq in proptest::collection::vec(0u8..5, 1..12),
            shift in 1u8..50,
        ) {
            let base = canonical_word(&seq).unwrap();
            let renamed: Vec<u16> = seq.iter().map(|&x| x as u16 * 7 + shift as u16).collect();
            proptest::prop_assert_eq!(&canonical_word(&renamed).unwrap(), &base);
            let again = canonical_word(&base.positions()).unwrap();
            proptest::prop_assert_eq!(&again, &base);
            let tc = base.trace_canonical();
            proptest::prop_assert_eq!(&tc.trace_canonical(), &tc);
            proptest::prop_assert_eq!(classify_word(&tc), classify_word(&base));
        }
    }
}
