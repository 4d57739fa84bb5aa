//! Corpus, cached modules and the exact-rank oracle shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use veronese::betti::ModuleBetti;
use veronese::jobs::{pipeline, Flags, PlanOptions};
use veronese::koszul::{build_differential, inventory_with, Model, SparseSignMatrix};
use veronese::monomial::Partition;
use veronese::rank::{compute_rank, RankConfig};

pub const ORACLE_NNZ: usize = 5_000;

pub fn no_reductions() -> PlanOptions {
    PlanOptions {
        flags: Flags {
            symmetry: true,
            duality: false,
            hilbert_shortcut: false,
        },
        ..Default::default()
    }
}

/// Modules for 2 <= d <= 4 with every strand computed, keyed by (b, d).
pub fn computed_modules() -> &'static HashMap<(u32, u32), ModuleBetti> {
    static CACHE: OnceLock<HashMap<(u32, u32), ModuleBetti>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let mut out = HashMap::new();
        for d in 2..=4u32 {
            for b in 0..d {
                let (_, mut db) = pipeline(2, b, d, &no_reductions(), &RankConfig::default()).unwrap();
                out.insert((b, d), db.modules.remove(&(2, d, b)).unwrap());
            }
        }
        out
    })
}

/// Every ∂_p with p >= 1 over canonical multidegrees, rows q = 0..=2, d <= 4, with its prime-field rank.
pub fn corpus() -> &'static [(SparseSignMatrix, usize)] {
    static CACHE: OnceLock<Vec<(SparseSignMatrix, usize)>> = OnceLock::new();
    CACHE.get_or_init(|| (1..=4).flat_map(corpus_of).collect())
}

pub fn corpus_of(d: u32) -> Vec<(SparseSignMatrix, usize)> {
    let cfg = RankConfig::default();
    let mut out = Vec::new();
    for b in 0..d {
        let r = (d as usize + 1) * (d as usize + 2) / 2;
        let pq: Vec<(usize, u32)> = (1..=r).flat_map(|p| (0..=2).map(move |q| (p, q))).collect();
        for e in inventory_with(2, b, d, &pq, true, Model::Full) {
            let m = build_differential(&e.spec).unwrap();
            if m.nrows > 0 && m.ncols > 0 {
                let r = compute_rank(&m, &cfg).unwrap();
                assert!(r.agreement);
                out.push((m, r.rank));
            }
        }
    }
    out
}

/// Fraction-free elimination over the integers; independent of the prime-field code.
pub fn bareiss_rank(m: &SparseSignMatrix) -> usize {
    let mut rows: Vec<BTreeMap<u32, BigInt>> = vec![BTreeMap::new(); m.nrows];
    for &(i, j, v) in m.triplets() {
        rows[i as usize].insert(j, BigInt::from(v));
    }
    rows.retain(|r| !r.is_empty());
    let mut rank = 0;
    let mut prev = BigInt::from(1);
    for col in 0..m.ncols as u32 {
        let Some(piv) = (rank..rows.len())
            .filter(|&i| rows[i].contains_key(&col))
            .min_by_key(|&i| rows[i].len())
        else {
            continue;
        };
        rows.swap(rank, piv);
        let pivot_row = rows[rank].clone();
        let pv = pivot_row[&col].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let Some(c) = row.get(&col).cloned() else {
                // Untouched rows still need the Bareiss rescale.
                for v in row.values_mut() {
                    *v = &*v * &pv / &prev;
                }
                continue;
            };
            let mut next = BTreeMap::new();
            let keys: BTreeSet<u32> = row.keys().chain(pivot_row.keys()).copied().collect();
            for k in keys {
                let a = row.get(&k).cloned().unwrap_or_default();
                let p = pivot_row.get(&k).cloned().unwrap_or_default();
                let v = (&pv * a - &c * p) / &prev;
                if !v.is_zero() {
                    next.insert(k, v);
                }
            }
            *row = next;
        }
        prev = pv;
        rank += 1;
    }
    rank
}

/// Multisets of partitions of one weight into at most three parts.
pub fn partition_multisets() -> impl Strategy<Value = BTreeMap<Partition, u64>> {
    (1u32..=30, prop::collection::vec((0u32..=30, 0u32..=30, 1u64..=4), 1..8)).prop_map(|(weight, picks)| {
        let mut modules = BTreeMap::new();
        for (x, y, m) in picks {
            let first = x.min(weight);
            let second = y.min(weight - first);
            let mut v = vec![first, second, weight - first - second];
            v.sort_unstable_by(|a, b| b.cmp(a));
            *modules.entry(Partition::new(v).unwrap()).or_insert(0) += m;
        }
        modules
    })
}
