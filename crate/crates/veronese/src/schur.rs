//! Schur characters and the highest-weight greedy decomposition.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::monomial::{dominant_partitions, GradedMultiset, Multidegree, Partition};

type CharKey = (Vec<u32>, usize);

fn cache() -> &'static Mutex<HashMap<CharKey, Arc<GradedMultiset>>> {
    static CACHE: OnceLock<Mutex<HashMap<CharKey, Arc<GradedMultiset>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Weight multiplicities of S_λ(C^vars): the number of semistandard tableaux of each content.
pub fn schur_character(lambda: &Partition, vars: usize) -> Result<Arc<GradedMultiset>> {
    let parts: Vec<u32> = lambda.parts().iter().copied().filter(|&x| x > 0).collect();
    if parts.len() > vars {
        return Err(Error::TooManyParts { parts, vars });
    }
    let key = (parts.clone(), vars);
    if let Some(c) = cache().lock().expect("cache lock").get(&key) {
        return Ok(Arc::clone(c));
    }
    let mut padded = parts;
    padded.resize(vars, 0);
    let mut out = GradedMultiset::new();
    let mut weight = vec![0u32; vars];
    branch(&padded, &mut weight, &mut out);
    let arc = Arc::new(out);
    cache().lock().expect("cache lock").entry(key).or_insert_with(|| Arc::clone(&arc));
    Ok(arc)
}

/// Gelfand-Tsetlin branching: the last variable carries |λ| - |μ| for each μ interlacing λ.
fn branch(lambda: &[u32], weight: &mut Vec<u32>, out: &mut GradedMultiset) {
    let k = lambda.len();
    if k == 0 {
        out.add(Multidegree(weight.clone()), 1);
        return;
    }
    let total: u32 = lambda.iter().sum();
    if k == 1 {
        weight[0] = total;
        out.add(Multidegree(weight.clone()), 1);
        return;
    }
    let mut mu = vec![0u32; k - 1];
    interlace(lambda, 0, &mut mu, total, weight, out);
}

fn interlace(lambda: &[u32], i: usize, mu: &mut Vec<u32>, total: u32, weight: &mut Vec<u32>, out: &mut GradedMultiset) {
    if i == mu.len() {
        let k = lambda.len();
        weight[k - 1] = total - mu.iter().sum::<u32>();
        let sub = mu.clone();
        branch(&sub, weight, out);
        return;
    }
    for m in lambda[i + 1]..=lambda[i] {
        mu[i] = m;
        interlace(lambda, i + 1, mu, total, weight, out);
    }
}

/// dim S_λ(C^k) = Π_{i<j} (λ_i - λ_j + j - i) / (j - i).
pub fn weyl_dimension(lambda: &Partition, vars: usize) -> u64 {
    let mut l = lambda.parts().to_vec();
    l.resize(vars.max(l.len()), 0);
    let (mut num, mut den) = (1u128, 1u128);
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            num *= (l[i] as i64 - l[j] as i64 + (j - i) as i64) as u128;
            den *= (j - i) as u128;
        }
    }
    (num / den) as u64
}

/// Schur modules with multiplicities found by the greedy algorithm.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SchurDecomposition {
    pub modules: BTreeMap<Partition, u64>,
    /// False when a negative coefficient or a non-dominant leading weight was met.
    pub residual_ok: bool,
    /// What is left of H after the loop stops.
    pub residual: BTreeMap<Multidegree, i64>,
}

impl SchurDecomposition {
    pub fn dimension(&self, vars: usize) -> u64 {
        self.modules.iter().map(|(l, &m)| m * weyl_dimension(l, vars)).sum()
    }

    pub fn distinct(&self) -> usize {
        self.modules.len()
    }

    /// Number of modules counted with multiplicity.
    pub fn with_multiplicity(&self) -> u64 {
        self.modules.values().sum()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.modules.values().copied().max().unwrap_or(0)
    }

    /// Dominant weights of the partition support.
    pub fn dominant(&self) -> Result<Vec<Partition>> {
        dominant_partitions(self.modules.keys())
    }

    /// `l0 l1 l2 mult` lines, lex-descending.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (l, m) in self.modules.iter().rev() {
            let parts: Vec<String> = l.parts().iter().map(|x| x.to_string()).collect();
            writeln!(w, "{} {m}", parts.join(" "))?;
        }
        Ok(())
    }

    pub fn to_list(&self) -> Vec<(Multidegree, u64)> {
        self.modules.iter().rev().map(|(l, &m)| (l.as_multidegree(), m)).collect()
    }
}

pub fn greedy_decompose(h: &GradedMultiset) -> Result<SchurDecomposition> {
    greedy_decompose_signed(h.iter().map(|(w, m)| (w.clone(), m as i64)).collect())
}

/// The greedy algorithm on a signed polynomial; all weights must share one total.
pub fn greedy_decompose_signed(mut h: BTreeMap<Multidegree, i64>) -> Result<SchurDecomposition> {
    h.retain(|_, c| *c != 0);
    let vars = h.keys().next().map(|w| w.vars()).unwrap_or(0);
    let mut out = SchurDecomposition {
        residual_ok: true,
        ..Default::default()
    };
    if h.values().any(|&c| c < 0) {
        out.residual_ok = false;
    }
    while let Some((lead, &c)) = h.iter().next_back() {
        if c <= 0 || !lead.is_sorted_descending() {
            out.residual_ok = false;
            break;
        }
        let lambda = Partition::try_from(lead)?;
        let chi = schur_character(&lambda, vars)?;
        for (w, m) in chi.iter() {
            let e = h.entry(w.clone()).or_insert(0);
            *e -= c * m as i64;
            if *e < 0 {
                out.residual_ok = false;
            }
        }
        h.retain(|_, v| *v != 0);
        *out.modules.entry(lambda).or_insert(0) += c as u64;
    }
    if !h.is_empty() {
        out.residual_ok = false;
    }
    out.residual = h;
    Ok(out)
}

/// Sum of m·χ_λ over a decomposition.
pub fn compose(modules: &BTreeMap<Partition, u64>, vars: usize) -> Result<GradedMultiset> {
    let mut g = GradedMultiset::new();
    for (l, &m) in modules {
        for (w, c) in schur_character(l, vars)?.iter() {
            g.add(w.clone(), c * m);
        }
    }
    Ok(g)
}

pub fn kpq_dominant_weights(decomp: &SchurDecomposition) -> Result<Vec<Partition>> {
    decomp.dominant()
}

/// Per-p statistics along one row of a Betti table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountStats {
    pub p: Vec<usize>,
    pub rank: Vec<u64>,
    pub distinct: Vec<u64>,
    pub with_multiplicity: Vec<u64>,
    pub max_multiplicity: Vec<u64>,
    pub dominant: Vec<u64>,
}

/// Statistics over nonzero positions, given (p, dim K_{p,q}, decomposition) in increasing p.
pub fn count_stats(row: &[(usize, u64, SchurDecomposition)]) -> Result<CountStats> {
    let mut s = CountStats::default();
    for (p, dim, dec) in row.iter().filter(|r| r.1 > 0) {
        s.p.push(*p);
        s.rank.push(*dim);
        s.distinct.push(dec.distinct() as u64);
        s.with_multiplicity.push(dec.with_multiplicity());
        s.max_multiplicity.push(dec.max_multiplicity());
        s.dominant.push(dec.dominant()?.len() as u64);
    }
    Ok(s)
}
