//! Multigraded Hilbert series numerators and the P^2 vanishing table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use crate::betti::BettiTable;
use crate::error::{Error, Result};
use crate::koszul::{counter, Model};
use crate::monomial::{binomial, canonical_multidegrees, monomial_basis, Multidegree};

/// Signed polynomial in n+1 variables, keyed by exponent vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumeratorPolynomial {
    pub n: usize,
    pub d: u32,
    pub b: u32,
    /// Largest total degree kept.
    pub bound: u64,
    pub terms: BTreeMap<Multidegree, i64>,
}

impl NumeratorPolynomial {
    pub fn coefficient(&self, a: &Multidegree) -> i64 {
        self.terms.get(a).copied().unwrap_or(0)
    }

    /// Coefficients collected by total degree.
    pub fn by_total_degree(&self) -> BTreeMap<u64, i64> {
        let mut out = BTreeMap::new();
        for (a, &c) in &self.terms {
            *out.entry(a.total()).or_insert(0) += c;
        }
        out.retain(|_, c| *c != 0);
        out
    }

    /// Coefficients of A(t,...,t) in the variable t^d, so exponent j means |a| = dj + b.
    pub fn specialize(&self) -> BTreeMap<u64, i64> {
        self.by_total_degree()
            .into_iter()
            .map(|(t, c)| ((t - self.b as u64) / self.d as u64, c))
            .collect()
    }

    pub fn max_total(&self) -> u64 {
        self.terms.keys().map(|a| a.total()).max().unwrap_or(0)
    }

    /// `a0 a1 a2 coeff` lines in lexicographic order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (a, c) in &self.terms {
            writeln!(w, "{} {c}", a.spaced())?;
        }
        Ok(())
    }
}

/// Projective dimension of S(b;d) on P^n.
pub fn projective_dimension(n: usize, d: u32) -> u64 {
    binomial(n as u64 + d as u64, d as u64) - n as u64 - 1
}

/// Degree bound beyond which no Betti number of S(b;d) lives: d * (pd + n) + b.
pub fn degree_bound(n: usize, b: u32, d: u32) -> u64 {
    d as u64 * (projective_dimension(n, d) + n as u64) + b as u64
}

type Poly = HashMap<Vec<u32>, i64>;

fn times_one_minus(poly: &Poly, m: &[u32], bound: u64) -> Poly {
    let shift: u64 = m.iter().map(|&e| e as u64).sum();
    let mut out = poly.clone();
    for (a, &c) in poly {
        let t: u64 = a.iter().map(|&e| e as u64).sum();
        if t + shift > bound {
            continue;
        }
        let key: Vec<u32> = a.iter().zip(m).map(|(x, y)| x + y).collect();
        *out.entry(key).or_insert(0) -= c;
    }
    out.retain(|_, c| *c != 0);
    out
}

fn finish(n: usize, d: u32, b: u32, bound: u64, poly: Poly) -> NumeratorPolynomial {
    NumeratorPolynomial {
        n,
        d,
        b,
        bound,
        terms: poly.into_iter().map(|(k, v)| (Multidegree(k), v)).collect(),
    }
}

/// Π over degree-d monomials m of (1 - t^m), truncated at total degree N.
pub fn denominator(n: usize, d: u32) -> Result<NumeratorPolynomial> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let bound = degree_bound(n, 0, d);
    let mut poly: Poly = HashMap::from([(vec![0; n + 1], 1)]);
    for m in monomial_basis(n, d) {
        poly = times_one_minus(&poly, m.exps(), bound);
    }
    Ok(finish(n, d, 0, bound, poly))
}

/// The numerator A with HS(S(b;d)) = A / B.
pub fn numerator(n: usize, b: u32, d: u32) -> Result<NumeratorPolynomial> {
    if d == 0 || b >= d {
        return Err(Error::InvalidArgument(format!("need 0 <= b < d, got b={b}, d={d}")));
    }
    let bound = degree_bound(n, b, d);
    let mut poly: Poly = HashMap::new();
    let mut t = b as u64;
    while t <= bound {
        for a in crate::monomial::compositions(n + 1, t as u32) {
            poly.insert(a.0, 1);
        }
        t += d as u64;
    }
    for m in monomial_basis(n, d) {
        poly = times_one_minus(&poly, m.exps(), bound);
    }
    Ok(finish(n, d, b, bound, poly))
}

/// Where K_{p,q}(b;d) on P^2 can be nonzero: an inclusive p-range per row q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VanishingTable {
    pub b: u32,
    pub d: u32,
    pub rows: [Option<(usize, usize)>; 3],
}

fn range(lo: i64, hi: i64) -> Option<(usize, usize)> {
    (lo <= hi && hi >= 0).then(|| (lo.max(0) as usize, hi as usize))
}

impl VanishingTable {
    pub fn p2(b: u32, d: u32) -> Result<Self> {
        if d == 0 || b >= d {
            return Err(Error::InvalidArgument(format!("need 0 <= b < d, got b={b}, d={d}")));
        }
        let (b, d) = (b as i64, d as i64);
        let r = (d + 2) * (d + 1) / 2 - 3;
        let cols = |e: i64| (e + 2) * (e + 1) / 2 - 1;
        let row0 = range(0, cols(b));
        let row1 = if b <= d - 3 {
            range(b + 1, r - d + 2 + b)
        } else if b == d - 2 {
            range(b + 1, r)
        } else {
            range(r - d * (d - 1) / 2 + 1, r)
        };
        let row2 = if b <= d - 3 {
            range(r - cols(d - 3 - b), r)
        } else {
            None
        };
        Ok(VanishingTable {
            b: b as u32,
            d: d as u32,
            rows: [row0, row1, row2],
        })
    }

    pub fn may_be_nonzero(&self, p: usize, q: u32) -> bool {
        match self.rows.get(q as usize).copied().flatten() {
            Some((lo, hi)) => lo <= p && p <= hi,
            None => false,
        }
    }

    /// Positions (p,q) with q <= 2 that may be nonzero.
    pub fn positions(&self) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for (q, row) in self.rows.iter().enumerate() {
            if let Some((lo, hi)) = row {
                out.extend((*lo..=*hi).map(|p| (p, q as u32)));
            }
        }
        out
    }

    /// Diagonal neighbours (p,q), (p-1,q+1) that may both be nonzero.
    pub fn diagonal_pairs(&self) -> Vec<((usize, u32), (usize, u32))> {
        self.positions()
            .into_iter()
            .filter(|&(p, q)| p > 0 && self.may_be_nonzero(p - 1, q + 1))
            .map(|(p, q)| ((p, q), (p - 1, q + 1)))
            .collect()
    }

    /// Checks that the nonzero support of `table` is exactly the predicted one.
    pub fn check(&self, table: &BettiTable) -> Result<()> {
        let mut problems = Vec::new();
        for (&(p, q), &v) in &table.entries {
            if v != 0 && !self.may_be_nonzero(p, q) {
                problems.push(format!("({p},{q}) = {v} predicted zero"));
            }
        }
        for (p, q) in self.positions() {
            if table.get(p, q) == 0 {
                problems.push(format!("({p},{q}) predicted nonzero"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::VanishingTable(format!(
                "b={} d={}: {}",
                self.b,
                self.d,
                problems.join("; ")
            )))
        }
    }
}

/// Positions not determined by the Hilbert series.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelevantRange {
    pub pairs: BTreeSet<(usize, u32)>,
}

impl RelevantRange {
    pub fn contains(&self, p: usize, q: u32) -> bool {
        self.pairs.contains(&(p, q))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Relevant range on P^2, after checking the vanishing table against the reference tables.
pub fn relevant_range(b: u32, d: u32) -> Result<RelevantRange> {
    let table = VanishingTable::p2(b, d)?;
    crate::golden::validate_vanishing_tables()?;
    Ok(relevant_range_of(&table))
}

pub fn relevant_range_of(table: &VanishingTable) -> RelevantRange {
    let mut pairs = BTreeSet::new();
    for (x, y) in table.diagonal_pairs() {
        pairs.insert(x);
        pairs.insert(y);
    }
    RelevantRange { pairs }
}

/// Betti numbers readable from the numerator alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NumeratorBetti {
    /// (p, canonical a) -> β, including zeros where the strand is nonzero.
    pub entries: BTreeMap<(usize, Multidegree), u64>,
    /// Totals j = p + q whose multidegrees were left undetermined.
    pub undetermined: BTreeSet<u64>,
}

pub fn betti_from_numerator(
    num: &NumeratorPolynomial,
    table: &VanishingTable,
    range: &RelevantRange,
) -> Result<NumeratorBetti> {
    let (b, d) = (num.b, num.d);
    if (table.b, table.d) != (b, d) {
        return Err(Error::InvalidArgument("numerator and table differ in (b,d)".into()));
    }
    let counter = counter(num.n, d, Model::Full);
    let mut out = NumeratorBetti::default();
    let mut j = 0u64;
    while d as u64 * j + b as u64 <= num.bound {
        let candidates: Vec<(usize, u32)> = (0..=2u32)
            .filter(|&q| q as u64 <= j)
            .map(|q| ((j - q as u64) as usize, q))
            .filter(|&(p, q)| table.may_be_nonzero(p, q))
            .collect();
        if candidates.iter().any(|&(p, q)| range.contains(p, q)) {
            out.undetermined.insert(j);
            j += 1;
            continue;
        }
        if candidates.len() > 1 {
            return Err(Error::Integrity(format!(
                "total {j} has several candidate positions outside the relevant range"
            )));
        }
        for a in canonical_multidegrees(num.n + 1, (d as u64 * j + b as u64) as u32) {
            let c = num.coefficient(&a);
            match candidates.first() {
                None if c != 0 => {
                    return Err(Error::Integrity(format!(
                        "coefficient {c} at {a} where every K_{{p,q}} vanishes"
                    )))
                }
                None => {}
                Some(&(p, _)) => {
                    let signed = if p % 2 == 0 { c } else { -c };
                    if signed < 0 {
                        return Err(Error::Integrity(format!(
                            "coefficient {c} at {a} has the wrong sign for p={p}"
                        )));
                    }
                    if counter.dim(p, &a) > 0 {
                        out.entries.insert((p, a), signed as u64);
                    } else if signed != 0 {
                        return Err(Error::Integrity(format!("β_{{{p},{a}}} on an empty strand")));
                    }
                }
            }
        }
        j += 1;
    }
    Ok(out)
}
