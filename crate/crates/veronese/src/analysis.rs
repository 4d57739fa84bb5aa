//! Boij-Söderberg decompositions, Betti distributions, unimodality and redundancy.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::betti::BettiTable;
use crate::error::{Error, Result};
use crate::monomial::Partition;
use crate::schur::SchurDecomposition;

/// Betti table keyed by (homological index i, internal degree j).
pub type DegreeTable = BTreeMap<(usize, i64), BigRational>;

pub fn degree_table(t: &BettiTable) -> DegreeTable {
    t.by_degree()
        .into_iter()
        .map(|((i, j), v)| ((i, j as i64), BigRational::from_integer(BigInt::from(v))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PureDiagram {
    pub degrees: Vec<i64>,
    /// Entry at (i, degrees[i]).
    pub entries: Vec<BigRational>,
}

impl PureDiagram {
    pub fn as_table(&self) -> DegreeTable {
        self.degrees
            .iter()
            .zip(&self.entries)
            .enumerate()
            .map(|(i, (&d, e))| ((i, d), e.clone()))
            .collect()
    }
}

/// π_d with entries Π_{j≠i} 1/|d_i - d_j|.
pub fn pure_diagram(degrees: &[i64]) -> Result<PureDiagram> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!("degree sequence {degrees:?} is not strictly increasing")));
    }
    let entries = degrees
        .iter()
        .enumerate()
        .map(|(i, &di)| {
            let den: BigInt = degrees
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &dj)| BigInt::from((di - dj).abs()))
                .product();
            BigRational::new(BigInt::from(1), den)
        })
        .collect();
    Ok(PureDiagram {
        degrees: degrees.to_vec(),
        entries,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PureDecomposition {
    pub parts: Vec<(Vec<i64>, BigRational)>,
}

impl PureDecomposition {
    pub fn coefficients(&self) -> Vec<BigRational> {
        self.parts.iter().map(|p| p.1.clone()).collect()
    }

    pub fn reconstruct(&self) -> Result<DegreeTable> {
        let mut out = DegreeTable::new();
        for (deg, c) in &self.parts {
            for (k, v) in pure_diagram(deg)?.as_table() {
                *out.entry(k).or_insert_with(BigRational::zero) += v * c;
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Whether consecutive degree sequences increase termwise.
    pub fn is_chain(&self) -> bool {
        self.parts
            .windows(2)
            .all(|w| w[0].0.len() == w[1].0.len() && w[0].0.iter().zip(&w[1].0).all(|(a, b)| a <= b))
    }
}

/// `num/den` for every coefficient.
pub fn fraction_string(c: &BigRational) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Peels the termwise-minimal pure diagram until nothing remains.
pub fn bs_decompose(table: &DegreeTable) -> Result<PureDecomposition> {
    let mut rest: DegreeTable = table.iter().filter(|(_, v)| !v.is_zero()).map(|(k, v)| (*k, v.clone())).collect();
    if rest.values().any(|v| v.is_negative()) {
        return Err(Error::InvalidArgument("negative Betti number".into()));
    }
    let length = rest.keys().map(|k| k.0).max().unwrap_or(0);
    let mut out = PureDecomposition::default();
    while !rest.is_empty() {
        let degrees: Vec<i64> = (0..=length)
            .map(|i| {
                rest.range((i, i64::MIN)..=(i, i64::MAX))
                    .next()
                    .map(|(k, _)| k.1)
                    .ok_or_else(|| Error::InvalidArgument(format!("column {i} emptied before the table")))
            })
            .collect::<Result<_>>()?;
        let pi = pure_diagram(&degrees)?;
        let coeff = degrees
            .iter()
            .enumerate()
            .map(|(i, &d)| &rest[&(i, d)] / &pi.entries[i])
            .min()
            .expect("nonempty");
        for (k, v) in pi.as_table() {
            let e = rest.get_mut(&k).expect("support of the minimal strand");
            *e -= v * &coeff;
            if e.is_negative() {
                return Err(Error::InvalidArgument(format!("negative residual at {k:?}")));
            }
        }
        rest.retain(|_, v| !v.is_zero());
        out.parts.push((degrees, coeff));
    }
    Ok(out)
}

/// A Betti row rescaled to a probability distribution, shifted to start at its first nonzero entry.
#[derive(Clone, Debug, PartialEq)]
pub struct BettiDistribution {
    pub offset: usize,
    pub raw: Vec<u64>,
    pub values: Vec<f64>,
    pub moments: Moments,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn betti_distribution(row: &[u64]) -> Result<BettiDistribution> {
    let first = row.iter().position(|&v| v > 0).ok_or_else(|| Error::InvalidArgument("zero row".into()))?;
    let last = row.iter().rposition(|&v| v > 0).expect("nonzero row");
    let raw = row[first..=last].to_vec();
    let total: f64 = raw.iter().map(|&v| v as f64).sum();
    let values: Vec<f64> = raw.iter().map(|&v| v as f64 / total).collect();
    let moments = moments_direct(&values);
    Ok(BettiDistribution {
        offset: first,
        raw,
        values,
        moments,
    })
}

/// Moments of a distribution on 0, 1, 2, ... by two passes over the weights.
pub fn moments_direct(w: &[f64]) -> Moments {
    let total: f64 = w.iter().sum();
    let mean = w.iter().enumerate().map(|(k, &p)| k as f64 * p).sum::<f64>() / total;
    let central = |r: i32| w.iter().enumerate().map(|(k, &p)| (k as f64 - mean).powi(r) * p).sum::<f64>() / total;
    let variance = central(2);
    Moments {
        mean,
        variance,
        skewness: central(3) / variance.powf(1.5),
        excess_kurtosis: central(4) / (variance * variance) - 3.0,
    }
}

/// The same moments by a single pass, merging one weighted point at a time.
pub fn moments_streaming(w: &[f64]) -> Moments {
    let (mut n, mut mean, mut m2, mut m3, mut m4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, &nb) in w.iter().enumerate() {
        if nb == 0.0 {
            continue;
        }
        let na = n;
        n += nb;
        let delta = k as f64 - mean;
        let d2 = delta * delta;
        m4 += d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) + 6.0 * d2 * nb * nb * m2 / (n * n)
            - 4.0 * delta * nb * m3 / n;
        m3 += d2 * delta * na * nb * (na - nb) / (n * n) - 3.0 * delta * nb * m2 / n;
        m2 += d2 * na * nb / n;
        mean += delta * nb / n;
    }
    let variance = m2 / n;
    Moments {
        mean,
        variance,
        skewness: (m3 / n) / variance.powf(1.5),
        excess_kurtosis: (m4 / n) / (variance * variance) - 3.0,
    }
}

/// Q-Q pairs (normal quantile, observed position) for weighted points sorted by position.
pub fn qq_against(points: &[(f64, f64)], normal: &Normal) -> Result<Vec<(f64, f64)>> {
    let total: f64 = points.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    let mut acc = 0.0;
    let mut out = Vec::new();
    for &(x, w) in points.iter().filter(|p| p.1 > 0.0) {
        let u = (acc + w / 2.0) / total;
        acc += w;
        out.push((normal.inverse_cdf(u), x));
    }
    Ok(out)
}

/// Q-Q pairs against the moment-matched normal after dropping `trim_head` and `trim_tail` entries.
pub fn qq_data(dist: &BettiDistribution, trim_head: usize, trim_tail: usize) -> Result<Vec<(f64, f64)>> {
    let n = dist.values.len();
    if trim_head + trim_tail + 3 > n {
        return Err(Error::InvalidArgument(format!("trimming {trim_head}+{trim_tail} of {n} points leaves fewer than 3")));
    }
    let kept: Vec<f64> = dist.values[trim_head..n - trim_tail].to_vec();
    let m = moments_direct(&kept);
    if !(m.variance > 1e-300) {
        return Err(Error::InvalidArgument("degenerate variance".into()));
    }
    let normal = Normal::new(m.mean, m.variance.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let shift = (dist.offset + trim_head) as f64;
    let points: Vec<(f64, f64)> = kept.iter().enumerate().map(|(k, &w)| (k as f64, w)).collect();
    Ok(qq_against(&points, &normal)?
        .into_iter()
        .map(|(x, y)| (x + shift, y + shift))
        .collect())
}

/// Nondecreasing, then nonincreasing.
pub fn is_unimodal(seq: &[u64]) -> bool {
    let mut i = 1;
    while i < seq.len() && seq[i] >= seq[i - 1] {
        i += 1;
    }
    while i < seq.len() && seq[i] <= seq[i - 1] {
        i += 1;
    }
    i >= seq.len()
}

/// |1 - K_{p,q} / K_{p-1,q+1}| as an exact rational and a float.
pub fn redundancy_ratio(table: &BettiTable, p: usize, q: u32) -> Result<(BigRational, f64)> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    let den = table.get(p - 1, q + 1);
    if den == 0 {
        return Err(Error::InvalidArgument(format!("K_{{{},{}}} vanishes", p - 1, q + 1)));
    }
    let one = BigRational::from_integer(BigInt::from(1));
    let r = (one - BigRational::new(BigInt::from(table.get(p, q)), BigInt::from(den))).abs();
    let f = r.to_f64().unwrap_or(f64::NAN);
    Ok((r, f))
}

/// Partitions occurring in both K_{p,q} and K_{p-1,q+1}, with the positions (p,q) where that happens.
pub fn redundant_schur(decomps: &BTreeMap<(usize, u32), SchurDecomposition>) -> Vec<(Partition, Vec<(usize, u32)>)> {
    let mut hits: BTreeMap<Partition, BTreeSet<(usize, u32)>> = BTreeMap::new();
    for (&(p, q), dec) in decomps {
        if p == 0 {
            continue;
        }
        if let Some(other) = decomps.get(&(p - 1, q + 1)) {
            for l in dec.modules.keys().filter(|l| other.modules.contains_key(*l)) {
                let e = hits.entry(l.clone()).or_default();
                e.insert((p, q));
                e.insert((p - 1, q + 1));
            }
        }
    }
    hits.into_iter().rev().map(|(l, s)| (l, s.into_iter().collect())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn table(entries: &[((usize, i64), i64)]) -> DegreeTable {
        entries.iter().map(|&(k, v)| (k, q(v, 1))).collect()
    }

    #[test]
    fn pure_diagram_examples() {
        assert_eq!(pure_diagram(&[0, 2, 3]).unwrap().entries, vec![q(1, 6), q(1, 2), q(1, 3)]);
        assert_eq!(pure_diagram(&[0, 1]).unwrap().entries, vec![q(1, 1), q(1, 1)]);
        // Direct evaluation: 1/(1·2·3), 1/(1·1·2), 1/(2·1·1), 1/(3·2·1).
        assert_eq!(pure_diagram(&[0, 1, 2, 3]).unwrap().entries, vec![q(1, 6), q(1, 2), q(1, 2), q(1, 6)]);
        assert!(pure_diagram(&[0, 2, 2]).is_err());
    }

    #[test]
    fn monomial_ideal_decomposition() {
        // S/(x^2, xy, y^4).
        let t = table(&[((0, 0), 1), ((1, 2), 2), ((1, 4), 1), ((2, 3), 1), ((2, 5), 1)]);
        let dec = bs_decompose(&t).unwrap();
        assert_eq!(dec.coefficients(), vec![q(3, 1), q(3, 1), q(4, 1)]);
        assert_eq!(dec.reconstruct().unwrap(), t);
        assert!(dec.is_chain());
    }

    #[test]
    fn non_decomposable_input_errors() {
        let t = table(&[((0, 0), 1), ((1, 1), 5), ((2, 2), 1)]);
        assert!(bs_decompose(&t).is_err());
    }

    #[test]
    fn unimodality() {
        assert!(is_unimodal(&[6, 62, 276, 660, 825, 252]));
        assert!(!is_unimodal(&[1, 2, 1, 1, 2, 1]));
        assert!(is_unimodal(&[]));
        assert!(is_unimodal(&[5]));
        assert!(is_unimodal(&[3, 3, 1]));
    }

    #[test]
    fn redundancy_examples() {
        let t = BettiTable::from_rows(2, 4, &[vec![6, 62, 276, 660, 825, 252], vec![0, 0, 0, 55, 450, 2376]]);
        let (r, f) = redundancy_ratio(&t, 5, 0).unwrap();
        assert_eq!(r, q(11, 25));
        assert_eq!(f, 0.44);
        let t = BettiTable::from_rows(0, 2, &[vec![0, 7], vec![7]]);
        assert!(redundancy_ratio(&t, 1, 0).unwrap().0.is_zero());
        assert!(redundancy_ratio(&t, 2, 0).is_err());
    }

    #[test]
    fn distribution_shifts_and_normalizes() {
        let d = betti_distribution(&[0, 0, 75, 536, 120, 0]).unwrap();
        assert_eq!(d.offset, 2);
        assert_eq!(d.raw, vec![75, 536, 120]);
        assert!((d.values.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(betti_distribution(&[0, 0]).is_err());
    }

    #[test]
    fn normal_samples_lie_on_the_diagonal() {
        let normal = Normal::new(7.0, 2.0).unwrap();
        let n = 25;
        let points: Vec<(f64, f64)> = (0..n).map(|k| (normal.inverse_cdf((k as f64 + 0.5) / n as f64), 1.0)).collect();
        let qq = qq_against(&points, &normal).unwrap();
        let worst = qq.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn qq_pairs_are_monotone() {
        let d = betti_distribution(&[0, 165, 1830, 10710, 41616, 117300, 250920, 417690, 548080, 568854, 464100, 291720, 134640, 39780, 4858, 375]).unwrap();
        let qq = qq_data(&d, 1, 1).unwrap();
        assert_eq!(qq.len(), 13);
        assert!(qq.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(qq[0].1, 2.0);
    }

    #[test]
    fn qq_requires_spread_and_points() {
        let d = betti_distribution(&[1, 2, 1]).unwrap();
        assert!(qq_data(&d, 1, 0).is_err());
        assert_eq!(qq_data(&d, 0, 0).unwrap().len(), 3);
        let c = BettiDistribution {
            offset: 0,
            raw: vec![0, 5, 0],
            values: vec![0.0, 1.0, 0.0],
            moments: moments_direct(&[0.0, 1.0, 0.0]),
        };
        assert!(qq_data(&c, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn moments_agree(w in prop::collection::vec(0u32..100_000, 2..40)) {
            prop_assume!(w.iter().filter(|&&x| x > 0).count() >= 2);
            let total: f64 = w.iter().map(|&x| x as f64).sum();
            let p: Vec<f64> = w.iter().map(|&x| x as f64 / total).collect();
            let a = moments_direct(&p);
            let b = moments_streaming(&p);
            prop_assert!((a.mean - b.mean).abs() < 1e-12 * a.mean.abs().max(1.0));
            prop_assert!((a.variance - b.variance).abs() < 1e-12 * a.variance.max(1.0));
            prop_assert!((a.skewness - b.skewness).abs() < 1e-9, "{} {}", a.skewness, b.skewness);
            prop_assert!((a.excess_kurtosis - b.excess_kurtosis).abs() < 1e-9, "{} {}", a.excess_kurtosis, b.excess_kurtosis);
        }

        #[test]
        fn decomposition_reconstructs(c1 in 1i64..20, c2 in 1i64..20, c3 in 1i64..20) {
            let mut t = DegreeTable::new();
            for (deg, c) in [(vec![0i64, 2, 3], c1), (vec![0, 2, 5], c2), (vec![0, 4, 5], c3)] {
                for (k, v) in pure_diagram(&deg).unwrap().as_table() {
                    *t.entry(k).or_insert_with(BigRational::zero) += v * q(c, 1);
                }
            }
            let dec = bs_decompose(&t).unwrap();
            prop_assert_eq!(dec.reconstruct().unwrap(), t);
            prop_assert!(dec.is_chain());
            prop_assert_eq!(dec.coefficients(), vec![q(c1, 1), q(c2, 1), q(c3, 1)]);
        }
    }
}
