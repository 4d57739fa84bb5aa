//! Multigraded strands of the Koszul complex of S(b;d) and their differentials.
//!
//! The strand at multidegree `a` in homological degree `p` has basis
//! `m_1 ∧ ... ∧ m_p ⊗ f` with `deg f = a - Σ deg m_i`. The cofactor is
//! determined by the wedge, so wedges alone index rows and columns.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::monomial::{canonical_multidegrees, compositions, monomial_basis, sort_multidegree, Monomial, Multidegree};

/// Which complex a strand lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Model {
    /// Λ^p S_d ⊗ S_e over the polynomial ring.
    #[default]
    Full,
    /// The same complex modulo the regular sequence x_0^d, ..., x_n^d.
    /// Pure powers leave the wedge basis and cofactors have exponents ≤ d-1.
    Artinian,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Full => "full",
            Model::Artinian => "artinian",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Model::Full),
            "artinian" => Ok(Model::Artinian),
            _ => Err(Error::InvalidArgument(format!("unknown model {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrandSpec {
    pub n: usize,
    pub d: u32,
    pub b: u32,
    pub p: usize,
    pub q: u32,
    pub a: Multidegree,
}

impl StrandSpec {
    pub fn new(n: usize, d: u32, b: u32, p: usize, q: u32, a: Multidegree) -> Result<Self> {
        let spec = StrandSpec { n, d, b, p, q, a };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidStrand("d must be positive".into()));
        }
        if self.a.vars() != self.n + 1 {
            return Err(Error::InvalidStrand(format!(
                "multidegree {} has {} entries, expected {}",
                self.a,
                self.a.vars(),
                self.n + 1
            )));
        }
        let want = self.d as u64 * (self.p as u64 + self.q as u64) + self.b as u64;
        if self.a.total() != want {
            return Err(Error::InvalidStrand(format!(
                "|a| = {} but d(p+q)+b = {want}",
                self.a.total()
            )));
        }
        if monomial_count(self.n, self.d) > 128 {
            return Err(Error::InvalidStrand(
                "more than 128 monomials of degree d are not supported".into(),
            ));
        }
        Ok(())
    }

    /// Degree of the cofactor.
    pub fn cofactor_degree(&self) -> u32 {
        self.b + self.q * self.d
    }

    /// The strand one step down: (p-1, q+1) at the same multidegree.
    pub fn target(&self) -> Option<StrandSpec> {
        (self.p > 0).then(|| StrandSpec {
            p: self.p - 1,
            q: self.q + 1,
            ..self.clone()
        })
    }

    /// The strand one step up: (p+1, q-1) at the same multidegree.
    pub fn source(&self) -> Option<StrandSpec> {
        (self.q > 0).then(|| StrandSpec {
            p: self.p + 1,
            q: self.q - 1,
            ..self.clone()
        })
    }

    /// Same strand at homological degree `p`, keeping `a` fixed.
    pub fn at_p(&self, p: usize) -> Option<StrandSpec> {
        let k = self.p + self.q as usize;
        (p <= k).then(|| StrandSpec {
            p,
            q: (k - p) as u32,
            ..self.clone()
        })
    }

    pub fn file_name(&self) -> String {
        format!(
            "n{}_d{}_b{}_p{}_a{}.mtx",
            self.n,
            self.d,
            self.b,
            self.p,
            self.a.dashed()
        )
    }
}

impl fmt::Display for StrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K_{{{},{}}}({};{})_{} n={}",
            self.p, self.q, self.b, self.d, self.a, self.n
        )
    }
}

fn monomial_count(n: usize, d: u32) -> u64 {
    crate::monomial::binomial(n as u64 + d as u64, d as u64)
}

/// A basis vector of a strand: sorted indices into `monomial_basis(n, d)`
/// and the cofactor monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisElement {
    pub wedge: Vec<u16>,
    pub cofactor: Monomial,
}

impl BasisElement {
    fn mask(&self) -> u128 {
        wedge_mask(&self.wedge)
    }
}

fn wedge_mask(w: &[u16]) -> u128 {
    w.iter().fold(0u128, |m, &i| m | (1u128 << i))
}

/// Degree-d monomials allowed in wedges for a model.
fn wedge_monomials(n: usize, d: u32, model: Model) -> Vec<(u16, Monomial)> {
    monomial_basis(n, d)
        .into_iter()
        .enumerate()
        .filter(|(_, m)| model == Model::Full || m.exps().iter().all(|&e| e < d))
        .map(|(i, m)| (i as u16, m))
        .collect()
}

fn cofactor_allowed(f: &[u32], d: u32, model: Model) -> bool {
    model == Model::Full || f.iter().all(|&e| e < d)
}

/// Basis of the strand, ordered lexicographically on the sorted wedge indices.
pub fn strand_basis(spec: &StrandSpec) -> Vec<BasisElement> {
    strand_basis_in(spec, Model::Full)
}

pub fn strand_basis_in(spec: &StrandSpec, model: Model) -> Vec<BasisElement> {
    let mons = wedge_monomials(spec.n, spec.d, model);
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(spec.p);
    let mut rest = spec.a.0.clone();
    enumerate_wedges(&mons, 0, spec.p, &mut rest, &mut stack, spec.d, model, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn enumerate_wedges(
    mons: &[(u16, Monomial)],
    start: usize,
    left: usize,
    rest: &mut Vec<u32>,
    stack: &mut Vec<u16>,
    d: u32,
    model: Model,
    out: &mut Vec<BasisElement>,
) {
    if left == 0 {
        if cofactor_allowed(rest, d, model) {
            out.push(BasisElement {
                wedge: stack.clone(),
                cofactor: Multidegree(rest.clone()),
            });
        }
        return;
    }
    if mons.len() - start < left {
        return;
    }
    for i in start..=mons.len() - left {
        let (idx, m) = &mons[i];
        if m.exps().iter().zip(rest.iter()).all(|(e, r)| e <= r) {
            for (r, e) in rest.iter_mut().zip(m.exps()) {
                *r -= e;
            }
            stack.push(*idx);
            enumerate_wedges(mons, i + 1, left - 1, rest, stack, d, model, out);
            stack.pop();
            for (r, e) in rest.iter_mut().zip(m.exps()) {
                *r += e;
            }
        }
    }
}

/// Row and column descriptors of a differential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    pub rows: Vec<BasisElement>,
    pub cols: Vec<BasisElement>,
}

/// A sparse matrix with entries ±1, stored as triplets sorted by (col, row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSignMatrix {
    pub nrows: usize,
    pub ncols: usize,
    triplets: Vec<(u32, u32, i8)>,
    /// Basis descriptors; absent for matrices read from files.
    pub labels: Option<Labels>,
}

impl SparseSignMatrix {
    /// Validates entries, sorts by (col, row) and rejects duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(u32, u32, i8)>) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r as usize >= nrows || c as usize >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r},{c}) outside {nrows}x{ncols}"
                )));
            }
            if v != 1 && v != -1 {
                return Err(Error::InvalidArgument(format!("entry value {v} is not ±1")));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (c, r));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidArgument(format!(
                "duplicate entry ({},{})",
                w[0].0, w[0].1
            )));
        }
        Ok(SparseSignMatrix {
            nrows,
            ncols,
            triplets,
            labels: None,
        })
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseSignMatrix {
            nrows,
            ncols,
            triplets: Vec::new(),
            labels: None,
        }
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(u32, u32, i8)] {
        &self.triplets
    }

    /// Columns as lists of (row, value).
    pub fn columns(&self) -> Vec<Vec<(u32, i8)>> {
        let mut cols = vec![Vec::new(); self.ncols];
        for &(r, c, v) in &self.triplets {
            cols[c as usize].push((r, v));
        }
        cols
    }

    pub fn transpose(&self) -> Self {
        let mut t: Vec<_> = self.triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        t.sort_unstable_by_key(|&(r, c, _)| (c, r));
        SparseSignMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            triplets: t,
            labels: self.labels.as_ref().map(|l| Labels {
                rows: l.cols.clone(),
                cols: l.rows.clone(),
            }),
        }
    }

    /// Rows holding at least one entry.
    pub fn nonzero_rows(&self) -> usize {
        let mut seen = vec![false; self.nrows];
        for &(r, _, _) in &self.triplets {
            seen[r as usize] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Integer product `self * rhs`, nonzero entries only, sorted by (row, col).
    pub fn product(&self, rhs: &SparseSignMatrix) -> Result<Vec<(usize, usize, i64)>> {
        if self.ncols != rhs.nrows {
            return Err(Error::InvalidArgument(format!(
                "cannot compose {}x{} with {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let left_cols = self.columns();
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for &(k, j, v) in &rhs.triplets {
            for &(i, w) in &left_cols[k as usize] {
                *acc.entry((i as usize, j as usize)).or_insert(0) += (v as i64) * (w as i64);
            }
        }
        let mut out: Vec<_> = acc.into_iter().filter(|&(_, v)| v != 0).map(|((i, j), v)| (i, j, v)).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Writes the `rows cols nnz` header followed by 0-indexed triplets.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.triplets.len())?;
        for &(r, c, v) in &self.triplets {
            writeln!(w, "{r} {c} {v}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn read_from<R: Read>(r: R, name: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptMatrix {
            path: name.to_path_buf(),
            reason,
        };
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| corrupt("empty file".into()))??;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| corrupt(format!("header: {e}")))?;
        if h.len() != 3 {
            return Err(corrupt(format!("header has {} fields", h.len())));
        }
        let (nrows, ncols, nnz) = (h[0], h[1], h[2]);
        let mut trip = Vec::with_capacity(nnz);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(corrupt(format!("line {}: expected 3 fields", i + 2)));
            }
            let parse = |s: &str| s.parse::<i64>().map_err(|e| corrupt(format!("line {}: {e}", i + 2)));
            let (r, c, v) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
            if r < 0 || c < 0 {
                return Err(corrupt(format!("line {}: negative index", i + 2)));
            }
            trip.push((r as u32, c as u32, v as i8));
            if v.abs() != 1 {
                return Err(corrupt(format!("line {}: value {v}", i + 2)));
            }
        }
        if trip.len() != nnz {
            return Err(corrupt(format!("header says {nnz} entries, found {}", trip.len())));
        }
        let sorted = trip.windows(2).all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0));
        if !sorted {
            return Err(corrupt("entries not sorted by (col,row) or duplicated".into()));
        }
        SparseSignMatrix::from_triplets(nrows, ncols, trip).map_err(|e| corrupt(e.to_string()))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?, path)
    }
}

/// Sign rule for the face maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// (-1)^k with k counted from 1.
    Standard,
    /// (-1)^(k-1).
    Shifted,
}

/// Matrix of ∂_p at `spec`: columns from the (p,q) strand, rows from (p-1,q+1).
pub fn build_differential(spec: &StrandSpec) -> Result<SparseSignMatrix> {
    build_differential_with(spec, Model::Full, SignConvention::Standard)
}

pub fn build_differential_in(spec: &StrandSpec, model: Model) -> Result<SparseSignMatrix> {
    build_differential_with(spec, model, SignConvention::Standard)
}

pub fn build_differential_with(
    spec: &StrandSpec,
    model: Model,
    sign: SignConvention,
) -> Result<SparseSignMatrix> {
    spec.validate()?;
    let cols = strand_basis_in(spec, model);
    let Some(target) = spec.target() else {
        return Ok(SparseSignMatrix {
            nrows: 0,
            ncols: cols.len(),
            triplets: Vec::new(),
            labels: Some(Labels { rows: Vec::new(), cols }),
        });
    };
    let rows = strand_basis_in(&target, model);
    let index: HashMap<u128, u32> = rows
        .iter()
        .enumerate()
        .map(|(i, e)| (e.mask(), i as u32))
        .collect();
    let mons = monomial_basis(spec.n, spec.d);
    let mut triplets = Vec::with_capacity(cols.len() * spec.p);
    let mut col_entries: Vec<(u32, i8)> = Vec::with_capacity(spec.p);
    for (j, e) in cols.iter().enumerate() {
        let mask = e.mask();
        col_entries.clear();
        for (k0, &mi) in e.wedge.iter().enumerate() {
            if model == Model::Artinian {
                let m = &mons[mi as usize];
                let fits = m
                    .exps()
                    .iter()
                    .zip(e.cofactor.exps())
                    .all(|(x, y)| x + y < spec.d);
                if !fits {
                    continue;
                }
            }
            let row = *index.get(&(mask & !(1u128 << mi))).ok_or_else(|| {
                Error::Integrity(format!("face of column {j} missing from target basis"))
            })?;
            let k = k0 + 1;
            let neg = match sign {
                SignConvention::Standard => k % 2 == 1,
                SignConvention::Shifted => k % 2 == 0,
            };
            col_entries.push((row, if neg { -1 } else { 1 }));
        }
        col_entries.sort_unstable();
        triplets.extend(col_entries.iter().map(|&(r, v)| (r, j as u32, v)));
    }
    Ok(SparseSignMatrix {
        nrows: rows.len(),
        ncols: cols.len(),
        triplets,
        labels: Some(Labels { rows, cols }),
    })
}

/// Strand dimensions computed by counting wedges per weight, without enumeration.
#[derive(Debug)]
pub struct StrandCounter {
    pub n: usize,
    pub d: u32,
    pub model: Model,
    /// by_p[p] lists (weight of the wedge, number of p-subsets with that weight).
    by_p: Vec<Vec<(Vec<u32>, u64)>>,
}

impl StrandCounter {
    pub fn new(n: usize, d: u32, model: Model) -> Self {
        let mons: Vec<Monomial> = wedge_monomials(n, d, model).into_iter().map(|(_, m)| m).collect();
        let mut dp: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); mons.len() + 1];
        dp[0].insert(vec![0; n + 1], 1);
        for (i, m) in mons.iter().enumerate() {
            for p in (1..=i + 1).rev() {
                let (lo, hi) = dp.split_at_mut(p);
                for (w, &c) in lo[p - 1].iter() {
                    let nw: Vec<u32> = w.iter().zip(m.exps()).map(|(a, b)| a + b).collect();
                    *hi[0].entry(nw).or_insert(0) += c;
                }
            }
        }
        let by_p = dp
            .into_iter()
            .map(|h| {
                let mut v: Vec<_> = h.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
        StrandCounter { n, d, model, by_p }
    }

    pub fn max_p(&self) -> usize {
        self.by_p.len() - 1
    }

    /// dim of the (p, ·) strand at multidegree `a`.
    pub fn dim(&self, p: usize, a: &Multidegree) -> u64 {
        let Some(list) = self.by_p.get(p) else {
            return 0;
        };
        let a = a.exps();
        let mut total = 0;
        for (w, c) in list {
            let mut ok = true;
            for (x, y) in w.iter().zip(a) {
                if x > y || (self.model == Model::Artinian && y - x >= self.d) {
                    ok = false;
                    break;
                }
            }
            if ok {
                total += c;
            }
        }
        total
    }
}

/// Shared counters, built once per (n, d, model).
pub fn counter(n: usize, d: u32, model: Model) -> Arc<StrandCounter> {
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32, Model), Arc<StrandCounter>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("counter cache poisoned").get(&(n, d, model)) {
        return c.clone();
    }
    let c = Arc::new(StrandCounter::new(n, d, model));
    cache
        .lock()
        .expect("counter cache poisoned")
        .entry((n, d, model))
        .or_insert(c)
        .clone()
}

/// An inventory entry: a canonical strand and the number of multidegrees it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InventoryEntry {
    pub spec: StrandSpec,
    pub orbit_size: u64,
    pub dim: u64,
}

/// Canonical strands with a nonzero (p,q) space, for each requested (p,q).
pub fn strand_inventory(n: usize, b: u32, d: u32, pq_set: &[(usize, u32)]) -> Vec<InventoryEntry> {
    inventory_with(n, b, d, pq_set, true, Model::Full)
}

/// Inventory with symmetry reduction optional; without it every multidegree is listed.
pub fn inventory_with(
    n: usize,
    b: u32,
    d: u32,
    pq_set: &[(usize, u32)],
    symmetric: bool,
    model: Model,
) -> Vec<InventoryEntry> {
    let counter = counter(n, d, model);
    let mut out = Vec::new();
    for &(p, q) in pq_set {
        let total = d * (p as u32 + q) + b;
        let degrees = if symmetric {
            canonical_multidegrees(n + 1, total)
        } else {
            compositions(n + 1, total)
        };
        for a in degrees {
            let dim = counter.dim(p, &a);
            if dim == 0 {
                continue;
            }
            let orbit_size = if symmetric { sort_multidegree(&a).1 } else { 1 };
            out.push(InventoryEntry {
                spec: StrandSpec { n, d, b, p, q, a },
                orbit_size,
                dim,
            });
        }
    }
    out
}

/// Number of target rows of ∂_p that can receive a nonzero entry.
pub fn effective_rows(spec: &StrandSpec, model: Model) -> usize {
    build_differential_in(spec, model)
        .map(|m| m.nonzero_rows())
        .unwrap_or(0)
}
