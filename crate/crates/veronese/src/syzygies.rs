//! Monomial syzygies m_1 ∧ ... ∧ m_p ⊗ f over the Artinian reduction S/(x_0^d, ..., x_n^d).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::koszul::{build_differential_in, Model, SparseSignMatrix, StrandSpec};
use crate::monomial::{compositions, dominant_weights, monomial_basis, GradedMultiset, Monomial, Multidegree, Partition};
use crate::rank::{compute_rank, RankConfig};
use crate::schur::SchurDecomposition;

/// Lexicographically largest monomial of degree e with every exponent at most d-1.
pub fn lex_lead(e: u32, d: u32, n: usize) -> Result<Monomial> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let cap = d - 1;
    if e as u64 > cap as u64 * (n as u64 + 1) {
        return Err(Error::InvalidArgument(format!(
            "no nonzero monomial of degree {e} modulo the {d}th powers of {} variables",
            n + 1
        )));
    }
    let mut left = e;
    let exps = (0..=n)
        .map(|_| {
            let x = left.min(cap);
            left -= x;
            x
        })
        .collect();
    Ok(Multidegree(exps))
}

/// Degree-d monomials nonzero in the quotient.
pub fn quotient_basis(n: usize, d: u32) -> Vec<Monomial> {
    compositions(n + 1, d)
        .into_iter()
        .filter(|m| m.exps().iter().all(|&x| x < d))
        .collect()
}

/// Quotient monomials m of degree d with m·f = 0 in the quotient.
pub fn annihilators(f: &Monomial, d: u32) -> Vec<Monomial> {
    quotient_basis(f.vars() - 1, d)
        .into_iter()
        .filter(|m| m.exps().iter().zip(f.exps()).any(|(x, y)| x + y >= d))
        .collect()
}

/// Weights of all p-subsets of `gens`, each shifted by `f`.
pub fn subset_weights(gens: &[Monomial], p: usize, f: &Monomial) -> GradedMultiset {
    // layers[k] maps the weight of a k-subset to the number of such subsets.
    let mut layers: Vec<BTreeMap<Vec<u32>, u64>> = vec![BTreeMap::new(); p + 1];
    layers[0].insert(f.exps().to_vec(), 1);
    for g in gens {
        for k in (1..=p).rev() {
            let (lo, hi) = layers.split_at_mut(k);
            for (w, &c) in &lo[k - 1] {
                let s: Vec<u32> = w.iter().zip(g.exps()).map(|(a, b)| a + b).collect();
                *hi[0].entry(s).or_insert(0) += c;
            }
        }
    }
    std::mem::take(&mut layers[p])
        .into_iter()
        .map(|(w, c)| (Multidegree(w), c))
        .collect()
}

/// Weights of E_{p,q}(P^n, b; d), built on the lex-leading f of degree qd + b.
pub fn e_space_weights(p: usize, q: u32, b: u32, d: u32, n: usize) -> Result<GradedMultiset> {
    match lex_lead(q * d + b, d, n) {
        Ok(f) => Ok(e_space_weights_with(&f, p, d)),
        Err(Error::InvalidArgument(_)) => Ok(GradedMultiset::new()),
        Err(e) => Err(e),
    }
}

/// Weights of monomial syzygies on an arbitrary nonzero f.
pub fn e_space_weights_with(f: &Monomial, p: usize, d: u32) -> GradedMultiset {
    subset_weights(&annihilators(f, d), p, f)
}

pub fn e_dominant_weights(p: usize, q: u32, b: u32, d: u32, n: usize) -> Result<Vec<Multidegree>> {
    let e = e_space_weights(p, q, b, d, n)?;
    dominant_weights(e.keys())
}

/// Dominant weights of E_{p,q} after discarding weights where every monomial syzygy is a boundary.
///
/// Discarding a weight can expose weights it dominated, so the check repeats until the set is stable.
pub fn e_cycle_dominant_weights(p: usize, q: u32, b: u32, d: u32, n: usize, cfg: &RankConfig) -> Result<Vec<Multidegree>> {
    let f = match lex_lead(q * d + b, d, n) {
        Ok(f) => f,
        Err(Error::InvalidArgument(_)) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut support: BTreeSet<Multidegree> = e_space_weights_with(&f, p, d).keys().cloned().collect();
    loop {
        let dom = dominant_weights(support.iter())?;
        let mut dropped = false;
        for w in &dom {
            if !survives_boundaries(p, q, b, d, n, &f, w, cfg)? {
                support.remove(w);
                dropped = true;
            }
        }
        if !dropped {
            return Ok(dom);
        }
    }
}

/// Whether the monomial syzygies of weight w span something outside the image of ∂_{p+1}.
#[allow(clippy::too_many_arguments)]
fn survives_boundaries(p: usize, q: u32, b: u32, d: u32, n: usize, f: &Monomial, w: &Multidegree, cfg: &RankConfig) -> Result<bool> {
    if q == 0 {
        return Ok(true);
    }
    let source = StrandSpec::new(n, d, b, p + 1, q - 1, w.clone())?;
    let m = build_differential_in(&source, Model::Artinian)?;
    let mons = monomial_basis(n, d);
    let labels = m.labels.as_ref().ok_or_else(|| Error::Integrity("differential without labels".into()))?;
    let e_rows: Vec<u32> = labels
        .rows
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            &e.cofactor == f
                && e.wedge.iter().all(|&i| {
                    mons[i as usize].exps().iter().zip(f.exps()).any(|(x, y)| x + y >= d)
                })
        })
        .map(|(i, _)| i as u32)
        .collect();
    if e_rows.is_empty() {
        return Ok(false);
    }
    let before = compute_rank(&m, cfg)?.rank;
    let mut trip = m.triplets().to_vec();
    trip.extend(e_rows.iter().enumerate().map(|(k, &r)| (r, (m.ncols + k) as u32, 1i8)));
    let aug = SparseSignMatrix::from_triplets(m.nrows, m.ncols + e_rows.len(), trip)?;
    Ok(compute_rank(&aug, cfg)?.rank > before)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Match,
    Mismatch {
        only_e: Vec<Multidegree>,
        only_k: Vec<Multidegree>,
    },
}

/// One line of a conjecture report: `b d p q verdict [diff]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerdictRecord {
    pub b: u32,
    pub d: u32,
    pub p: usize,
    pub q: u32,
    pub verdict: Verdict,
}

impl fmt::Display for VerdictRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} ", self.b, self.d, self.p, self.q)?;
        match &self.verdict {
            Verdict::Match => write!(f, "match"),
            Verdict::Mismatch { only_e, only_k } => {
                let show = |v: &[Multidegree]| v.iter().map(|w| w.dashed()).collect::<Vec<_>>().join(",");
                write!(f, "mismatch E-only=[{}] K-only=[{}]", show(only_e), show(only_k))
            }
        }
    }
}

/// Compares dominant weights of E_{p,q} on P^2 with those of a decomposition of K_{p,q}.
pub fn check_dominant_conjecture(b: u32, d: u32, p: usize, q: u32, kdata: &SchurDecomposition) -> Result<VerdictRecord> {
    let e: BTreeSet<Multidegree> = e_cycle_dominant_weights(p, q, b, d, 2, &RankConfig::default())?
        .into_iter()
        .collect();
    let k: BTreeSet<Multidegree> = kdata.dominant()?.iter().map(Partition::as_multidegree).collect();
    let verdict = if e == k {
        Verdict::Match
    } else {
        Verdict::Mismatch {
            only_e: lex_descending(e.difference(&k)),
            only_k: lex_descending(k.difference(&e)),
        }
    };
    Ok(VerdictRecord { b, d, p, q, verdict })
}

fn lex_descending<'a>(it: impl Iterator<Item = &'a Multidegree>) -> Vec<Multidegree> {
    let mut v: Vec<Multidegree> = it.cloned().collect();
    v.reverse();
    v
}

/// Whether every dominant Schur module appears exactly once.
pub fn dominant_multiplicity_one(kdata: &SchurDecomposition) -> Result<bool> {
    Ok(kdata.dominant()?.iter().all(|l| kdata.modules.get(l) == Some(&1)))
}

/// The literal terminal-module formulas: p = d·C(d+1,2) and the weight (a, b, c).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalPrediction {
    pub d: u32,
    pub p: u64,
    pub weight: [u64; 3],
}

pub fn predicted_terminal_module(d: u32) -> Result<TerminalPrediction> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let d64 = d as u64;
    let binom = crate::monomial::binomial;
    let middle = d64 * (d64 * d64 + 5);
    debug_assert_eq!(middle % 6, 0);
    Ok(TerminalPrediction {
        d,
        p: d64 * binom(d64 + 1, 2),
        weight: [binom(d64 + 2, 3) - 1, middle / 6, binom(d64 + 1, 3).saturating_sub(1)],
    })
}

/// Raw comparison of the prediction with the last nonzero K_{p,1}(0;d).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalReport {
    pub prediction: TerminalPrediction,
    pub last_p: Option<usize>,
    pub last_modules: Vec<(Multidegree, u64)>,
    /// Whether a + b + c equals d(p + 1), the total of K_{p,1}(0;d).
    pub weight_total_consistent: bool,
    /// Whether the predicted p is at most the projective dimension.
    pub p_within_range: bool,
    pub p_matches: bool,
    pub module_matches: bool,
}

impl fmt::Display for TerminalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pr = &self.prediction;
        writeln!(f, "d {}", pr.d)?;
        writeln!(f, "predicted_p {}", pr.p)?;
        writeln!(f, "predicted_weight {}-{}-{}", pr.weight[0], pr.weight[1], pr.weight[2])?;
        match self.last_p {
            Some(p) => writeln!(f, "last_nonzero_p {p}")?,
            None => writeln!(f, "last_nonzero_p none")?,
        }
        let mods: Vec<String> = self.last_modules.iter().map(|(w, m)| format!("{}^{m}", w.dashed())).collect();
        writeln!(f, "last_modules {}", mods.join(","))?;
        writeln!(f, "weight_total_consistent {}", self.weight_total_consistent)?;
        writeln!(f, "p_within_range {}", self.p_within_range)?;
        writeln!(f, "p_matches {}", self.p_matches)?;
        write!(f, "module_matches {}", self.module_matches)
    }
}

/// `row` holds (p, dim K_{p,1}(0;d), decomposition) in increasing p.
pub fn check_terminal_module(d: u32, row: &[(usize, u64, SchurDecomposition)]) -> Result<TerminalReport> {
    let prediction = predicted_terminal_module(d)?;
    let last = row.iter().filter(|r| r.1 > 0).max_by_key(|r| r.0);
    let last_p = last.map(|r| r.0);
    let last_modules = last.map(|r| r.2.to_list()).unwrap_or_default();
    let pd = crate::hilbert::projective_dimension(2, d);
    let total: u64 = prediction.weight.iter().sum();
    let w = Multidegree(prediction.weight.iter().map(|&x| x as u32).collect());
    Ok(TerminalReport {
        weight_total_consistent: total == d as u64 * (prediction.p + 1),
        p_within_range: prediction.p <= pd,
        p_matches: last_p.map(|p| p as u64) == Some(prediction.p),
        module_matches: last_modules == vec![(w, 1)],
        prediction,
        last_p,
        last_modules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn md(v: &[u32]) -> Multidegree {
        Multidegree(v.to_vec())
    }

    #[test]
    fn boundary_syzygies_are_discarded() {
        // x0^3x1 ∧ x0^3x2 ⊗ x0^3x1^2 is the boundary of x0^3x1 ∧ x0^3x2 ∧ x0^2x1^2 ⊗ x0.
        let raw = e_dominant_weights(2, 1, 1, 4, 2).unwrap();
        assert!(raw.contains(&md(&[9, 3, 1])));
        let kept = e_cycle_dominant_weights(2, 1, 1, 4, 2, &RankConfig::default()).unwrap();
        assert!(!kept.contains(&md(&[9, 3, 1])));
        assert!(!kept.is_empty());
    }

    #[test]
    fn cycle_filter_keeps_worked_examples() {
        let cfg = RankConfig::default();
        assert_eq!(e_cycle_dominant_weights(2, 1, 0, 4, 2, &cfg).unwrap(), vec![md(&[9, 2, 1]), md(&[8, 4, 0])]);
        let counts: Vec<usize> = (1..=6).map(|p| e_cycle_dominant_weights(p, 1, 0, 3, 2, &cfg).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 1, 1, 2, 1]);
        assert_eq!(e_cycle_dominant_weights(4, 1, 3, 5, 2, &cfg).unwrap(), vec![md(&[14, 14, 0])]);
    }

    #[test]
    fn lex_lead_examples() {
        for d in 2..=6 {
            assert_eq!(lex_lead(d, d, 2).unwrap(), md(&[d - 1, 1, 0]));
        }
        assert_eq!(lex_lead(0, 4, 2).unwrap(), md(&[0, 0, 0]));
        assert!(lex_lead(10, 4, 2).is_err());
    }

    #[test]
    fn lex_lead_matches_exhaustive_search() {
        for d in 1..=5 {
            for e in 0..=3 * (d - 1) {
                let best = compositions(3, e).into_iter().filter(|m| m.exps().iter().all(|&x| x < d)).max();
                assert_eq!(lex_lead(e, d, 2).ok(), best, "e={e} d={d}");
            }
        }
        assert_eq!(lex_lead(7, 4, 2).unwrap(), md(&[3, 3, 1]));
    }

    #[test]
    fn annihilators_of_x2y() {
        let got = annihilators(&md(&[2, 1, 0]), 3);
        let want = vec![md(&[2, 1, 0]), md(&[2, 0, 1]), md(&[1, 2, 0]), md(&[1, 1, 1]), md(&[1, 0, 2]), md(&[0, 2, 1])];
        let got: BTreeSet<_> = got.into_iter().collect();
        assert_eq!(got, want.into_iter().collect());
    }

    #[test]
    fn annihilators_of_xy_in_degree_two() {
        let got = annihilators(&md(&[1, 1, 0]), 2);
        let brute: Vec<Monomial> = compositions(3, 2)
            .into_iter()
            .filter(|m| m.exps().iter().all(|&x| x < 2))
            .filter(|m| m.exps()[0] + 1 >= 2 || m.exps()[1] + 1 >= 2)
            .collect();
        assert_eq!(got, brute);
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn full_f_kills_everything() {
        assert_eq!(annihilators(&md(&[3, 3, 3]), 4), quotient_basis(2, 4));
    }

    #[test]
    fn e21_of_quartic() {
        let dom = e_dominant_weights(2, 1, 0, 4, 2).unwrap();
        assert_eq!(dom, vec![md(&[9, 2, 1]), md(&[8, 4, 0])]);
    }

    #[test]
    fn cubic_lattice_counts() {
        let counts: Vec<usize> = (1..=6).map(|p| e_dominant_weights(p, 1, 0, 3, 2).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 1, 1, 2, 1]);
    }

    #[test]
    fn single_wedges_by_brute_force() {
        let f = lex_lead(2, 2, 2).unwrap();
        let e = e_space_weights(1, 1, 0, 2, 2).unwrap();
        let mut brute = GradedMultiset::new();
        for m in quotient_basis(2, 2) {
            if m.exps().iter().zip(f.exps()).any(|(x, y)| x + y >= 2) {
                brute.add(m.add(&f), 1);
            }
        }
        assert_eq!(e, brute);
    }

    #[test]
    fn terminal_prediction_literal_values() {
        let t = predicted_terminal_module(2).unwrap();
        assert_eq!((t.p, t.weight), (6, [3, 3, 0]));
        let t = predicted_terminal_module(5).unwrap();
        assert_eq!((t.p, t.weight), (75, [34, 25, 19]));
    }

    #[test]
    fn verdict_record_format() {
        let r = VerdictRecord {
            b: 0,
            d: 4,
            p: 2,
            q: 1,
            verdict: Verdict::Mismatch {
                only_e: vec![md(&[9, 2, 1])],
                only_k: vec![],
            },
        };
        assert_eq!(r.to_string(), "0 4 2 1 mismatch E-only=[9-2-1] K-only=[]");
    }

    proptest! {
        #[test]
        fn weights_have_strand_total(d in 2u32..=4, b in 0u32..4, q in 0u32..=2, p in 0usize..6) {
            prop_assume!(b < d);
            let e = e_space_weights(p, q, b, d, 2).unwrap();
            for w in e.keys() {
                prop_assert_eq!(w.total(), (d * (p as u32 + q) + b) as u64);
            }
        }

        #[test]
        fn annihilators_monotone(d in 2u32..=5, a in 0u32..5, b in 0u32..5, c in 0u32..5, i in 0usize..3) {
            let f = md(&[a.min(d - 1), b.min(d - 1), c.min(d - 1)]);
            let mut g = f.clone();
            g.0[i] = (g.0[i] + 1).min(d - 1);
            let small: BTreeSet<_> = annihilators(&f, d).into_iter().collect();
            let big: BTreeSet<_> = annihilators(&g, d).into_iter().collect();
            prop_assert!(small.is_subset(&big));
        }
    }
}
