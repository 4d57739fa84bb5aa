//! Exponent vectors, partitions and the dominance order.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// An exponent vector `(a_0, ..., a_n)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multidegree(pub Vec<u32>);

/// Monomials share the representation of multidegrees.
pub type Monomial = Multidegree;

impl Multidegree {
    pub fn new(exps: Vec<u32>) -> Self {
        Multidegree(exps)
    }

    pub fn zero(vars: usize) -> Self {
        Multidegree(vec![0; vars])
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    /// Componentwise sum.
    pub fn add(&self, other: &Multidegree) -> Multidegree {
        Multidegree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference, `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &Multidegree) -> Option<Multidegree> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Multidegree)
    }

    pub fn is_sorted_descending(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    /// Compact form used in file names: `7-3-2`.
    pub fn dashed(&self) -> String {
        self.0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("-")
    }

    /// Space separated form used in text records: `7 3 2`.
    pub fn spaced(&self) -> String {
        self.0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for Multidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<&[u32]> for Multidegree {
    fn from(v: &[u32]) -> Self {
        Multidegree(v.to_vec())
    }
}

/// A weakly decreasing sequence of nonnegative parts, padded to a fixed length.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotAPartition(parts));
        }
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn weight(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    /// Number of nonzero parts.
    pub fn length(&self) -> usize {
        self.0.iter().take_while(|&&p| p > 0).count()
    }

    pub fn as_multidegree(&self) -> Multidegree {
        Multidegree(self.0.clone())
    }
}

impl TryFrom<&Multidegree> for Partition {
    type Error = Error;
    fn try_from(a: &Multidegree) -> Result<Self> {
        Partition::new(a.0.clone())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Multidegree(self.0.clone()).fmt(f)
    }
}

/// Prefix-sum dominance on equal-weight vectors of possibly different lengths.
pub fn dominates_weights(lhs: &[u32], rhs: &[u32]) -> Result<bool> {
    let wl: u64 = lhs.iter().map(|&e| e as u64).sum();
    let wr: u64 = rhs.iter().map(|&e| e as u64).sum();
    if wl != wr {
        return Err(Error::IncomparableWeights(wl, wr));
    }
    Ok(dominates_unchecked(lhs, rhs))
}

fn dominates_unchecked(lhs: &[u32], rhs: &[u32]) -> bool {
    let len = lhs.len().max(rhs.len());
    let (mut sl, mut sr) = (0u64, 0u64);
    for k in 0..len {
        sl += lhs.get(k).copied().unwrap_or(0) as u64;
        sr += rhs.get(k).copied().unwrap_or(0) as u64;
        if sl < sr {
            return false;
        }
    }
    true
}

pub fn dominates(lhs: &Partition, rhs: &Partition) -> Result<bool> {
    dominates_weights(lhs.parts(), rhs.parts())
}

/// Maximal elements under dominance, returned in lex-descending order.
///
/// Weights need not be partitions. All inputs must share one total.
pub fn dominant_weights<'a, I>(ws: I) -> Result<Vec<Multidegree>>
where
    I: IntoIterator<Item = &'a Multidegree>,
{
    let mut sorted: Vec<&Multidegree> = ws.into_iter().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.dedup();
    if let Some(first) = sorted.first() {
        let t = first.total();
        if let Some(bad) = sorted.iter().find(|w| w.total() != t) {
            return Err(Error::IncomparableWeights(t, bad.total()));
        }
    }
    // Strict dominance implies lex-greater, so a lex-descending sweep only
    // has to compare against maxima already found.
    let mut maxima: Vec<Multidegree> = Vec::new();
    for w in sorted {
        if !maxima.iter().any(|m| dominates_unchecked(&m.0, &w.0)) {
            maxima.push(w.clone());
        }
    }
    Ok(maxima)
}

/// Maximal partitions under dominance.
pub fn dominant_partitions<'a, I>(ws: I) -> Result<Vec<Partition>>
where
    I: IntoIterator<Item = &'a Partition>,
{
    let as_md: Vec<Multidegree> = ws.into_iter().map(|p| p.as_multidegree()).collect();
    dominant_weights(as_md.iter())?
        .into_iter()
        .map(|m| Partition::new(m.0))
        .collect()
}

/// Sorted-descending representative and the size of its permutation orbit.
pub fn sort_multidegree(a: &Multidegree) -> (Multidegree, u64) {
    let mut c = a.0.clone();
    c.sort_unstable_by(|x, y| y.cmp(x));
    let mut orbit = factorial(c.len() as u64);
    let mut i = 0;
    while i < c.len() {
        let j = i + c[i..].iter().take_while(|&&x| x == c[i]).count();
        orbit /= factorial((j - i) as u64);
        i = j;
    }
    (Multidegree(c), orbit)
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All exponent vectors of length `vars` and total `deg`, lex-descending.
pub fn compositions(vars: usize, deg: u32) -> Vec<Multidegree> {
    let mut out = Vec::new();
    if vars == 0 {
        if deg == 0 {
            out.push(Multidegree(Vec::new()));
        }
        return out;
    }
    let mut cur = vec![0u32; vars];
    fill_compositions(&mut cur, 0, deg, &mut out);
    out
}

fn fill_compositions(cur: &mut Vec<u32>, i: usize, rest: u32, out: &mut Vec<Multidegree>) {
    if i + 1 == cur.len() {
        cur[i] = rest;
        out.push(Multidegree(cur.clone()));
        return;
    }
    for e in (0..=rest).rev() {
        cur[i] = e;
        fill_compositions(cur, i + 1, rest - e, out);
    }
}

/// Basis of S_d for S = C[x_0..x_n], lex-descending.
pub fn monomial_basis(n: usize, d: u32) -> Vec<Monomial> {
    compositions(n + 1, d)
}

/// Sorted-descending multidegrees of total `deg` in `vars` variables, lex-descending.
pub fn canonical_multidegrees(vars: usize, deg: u32) -> Vec<Multidegree> {
    compositions(vars, deg)
        .into_iter()
        .filter(|a| a.is_sorted_descending())
        .collect()
}

/// Finite map weight -> positive multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedMultiset {
    entries: BTreeMap<Multidegree, u64>,
}

impl GradedMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, w: Multidegree, mult: u64) {
        if mult == 0 {
            return;
        }
        *self.entries.entry(w).or_insert(0) += mult;
    }

    pub fn get(&self, w: &Multidegree) -> u64 {
        self.entries.get(w).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (&Multidegree, u64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn keys(&self) -> impl DoubleEndedIterator<Item = &Multidegree> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of multiplicities.
    pub fn dimension(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(k, &v)| {
            let mut p = k.0.clone();
            // Adjacent transpositions generate the symmetric group.
            (0..p.len().saturating_sub(1)).all(|i| {
                p.swap(i, i + 1);
                let ok = self.get(&Multidegree(p.clone())) == v;
                p.swap(i, i + 1);
                ok
            })
        })
    }

    pub fn into_map(self) -> BTreeMap<Multidegree, u64> {
        self.entries
    }
}

impl FromIterator<(Multidegree, u64)> for GradedMultiset {
    fn from_iter<T: IntoIterator<Item = (Multidegree, u64)>>(iter: T) -> Self {
        let mut g = GradedMultiset::new();
        for (w, m) in iter {
            g.add(w, m);
        }
        g
    }
}

/// All distinct permutations of `a`.
pub fn permutations(a: &Multidegree) -> Vec<Multidegree> {
    let mut v = a.0.clone();
    v.sort_unstable();
    let mut out = vec![Multidegree(v.clone())];
    while next_permutation(&mut v) {
        out.push(Multidegree(v.clone()));
    }
    out
}

fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
