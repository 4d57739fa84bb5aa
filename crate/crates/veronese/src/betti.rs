//! Betti tables, the multigraded Betti database and Koszul duality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hilbert::NumeratorPolynomial;
use crate::koszul::{counter, Model, StrandSpec};
use crate::monomial::{binomial, canonical_multidegrees, permutations, sort_multidegree, GradedMultiset, Multidegree};
use crate::rank::RankResult;

/// Total Betti numbers β_{p,p+q} placed at (p,q).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BettiTable {
    pub b: u32,
    pub d: u32,
    /// Zero entries are not stored.
    pub entries: BTreeMap<(usize, u32), u64>,
}

impl BettiTable {
    pub fn new(b: u32, d: u32) -> Self {
        BettiTable {
            b,
            d,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a table from rows q = 0, 1, ... indexed by p.
    pub fn from_rows(b: u32, d: u32, rows: &[Vec<u64>]) -> Self {
        let mut t = BettiTable::new(b, d);
        for (q, row) in rows.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                t.set(p, q as u32, v);
            }
        }
        t
    }

    pub fn get(&self, p: usize, q: u32) -> u64 {
        self.entries.get(&(p, q)).copied().unwrap_or(0)
    }

    pub fn set(&mut self, p: usize, q: u32, v: u64) {
        if v == 0 {
            self.entries.remove(&(p, q));
        } else {
            self.entries.insert((p, q), v);
        }
    }

    pub fn max_p(&self) -> usize {
        self.entries.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_q(&self) -> u32 {
        self.entries.keys().map(|k| k.1).max().unwrap_or(0)
    }

    /// Row q for p = 0..=width-1.
    pub fn row(&self, q: u32, width: usize) -> Vec<u64> {
        (0..width).map(|p| self.get(p, q)).collect()
    }

    /// Columns p = 0..=r where r is the projective dimension on P^2.
    pub fn width(&self) -> usize {
        let r = binomial(self.d as u64 + 2, 2).saturating_sub(3) as usize;
        r.max(self.max_p()) + 1
    }

    /// CSV with a header of p values and one line per row q = 0, 1, 2.
    pub fn to_csv(&self) -> String {
        let w = self.width();
        let mut s = String::from("q");
        for p in 0..w {
            s.push_str(&format!(",{p}"));
        }
        s.push('\n');
        for q in 0..=self.max_q().max(2) {
            s.push_str(&q.to_string());
            for v in self.row(q, w) {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(b: u32, d: u32, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let row = line
                .split(',')
                .skip(1)
                .map(|t| t.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    source_name: "betti csv".into(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            rows.push(row);
        }
        Ok(BettiTable::from_rows(b, d, &rows))
    }

    /// Entries keyed by homological index i and internal degree j = p + q.
    pub fn by_degree(&self) -> BTreeMap<(usize, u64), u64> {
        self.entries
            .iter()
            .map(|(&(p, q), &v)| ((p, p as u64 + q as u64), v))
            .collect()
    }
}

impl fmt::Display for BettiTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.width();
        let rows = self.max_q().max(2) + 1;
        let cells: Vec<Vec<String>> = (0..rows)
            .map(|q| {
                self.row(q, w)
                    .into_iter()
                    .map(|v| if v == 0 { ".".into() } else { v.to_string() })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..w)
            .map(|p| cells.iter().map(|r| r[p].len()).max().unwrap_or(1).max(p.to_string().len()))
            .collect();
        let header: Vec<String> = (0..w).map(|p| format!("{:>1$}", p, widths[p])).collect();
        writeln!(f, "   {}", header.join(" "))?;
        for (q, row) in cells.iter().enumerate() {
            let line: Vec<String> = row.iter().enumerate().map(|(p, c)| format!("{:>1$}", c, widths[p])).collect();
            writeln!(f, "{q}: {}", line.join(" "))?;
        }
        Ok(())
    }
}

/// How an entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    RankComputed,
    HilbertDerived,
    Symmetry,
    Duality,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::RankComputed => "rank_computed",
            Provenance::HilbertDerived => "hilbert_derived",
            Provenance::Symmetry => "symmetry",
            Provenance::Duality => "duality",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rank_computed" => Provenance::RankComputed,
            "hilbert_derived" => Provenance::HilbertDerived,
            "symmetry" => Provenance::Symmetry,
            "duality" => Provenance::Duality,
            _ => return Err(Error::InvalidArgument(format!("unknown provenance {s}"))),
        })
    }
}

/// (p,q,b)-level Koszul duality on P^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualityRule {
    pub d: u32,
    pub b: u32,
    pub r: usize,
    pub b_dual: u32,
    pub s: u32,
}

pub fn dual_rule(b: u32, d: u32) -> Result<DualityRule> {
    if d == 0 || b >= d {
        return Err(Error::InvalidArgument(format!("need 0 <= b < d, got b={b}, d={d}")));
    }
    let r = (binomial(d as u64 + 2, 2) - 3) as usize;
    let b_dual = (-3 - b as i64).rem_euclid(d as i64) as u32;
    let s = (b_dual + 3 + b) / d;
    Ok(DualityRule { d, b, r, b_dual, s })
}

impl DualityRule {
    /// Image of (p,q); `None` when it falls outside rows 0..=2 or past r.
    pub fn map(&self, p: usize, q: u32) -> Option<(usize, u32)> {
        let q2 = 3 - q as i64 - self.s as i64;
        (p <= self.r && (0..=2).contains(&q2)).then(|| (self.r - p, q2 as u32))
    }

    /// The table of S(b';d) predicted from the table of S(b;d).
    pub fn apply(&self, table: &BettiTable) -> Result<BettiTable> {
        let mut out = BettiTable::new(self.b_dual, self.d);
        for (&(p, q), &v) in &table.entries {
            let (p2, q2) = self.map(p, q).ok_or_else(|| {
                Error::Integrity(format!("entry ({p},{q}) = {v} has no dual position"))
            })?;
            out.set(p2, q2, v);
        }
        Ok(out)
    }

    /// Positions where the two tables violate the rule.
    pub fn mismatches(&self, table: &BettiTable, dual: &BettiTable) -> Vec<(usize, u32)> {
        let mut bad = BTreeSet::new();
        for p in 0..=self.r {
            for q in 0..=2u32 {
                let here = table.get(p, q);
                let there = self.map(p, q).map(|(p2, q2)| dual.get(p2, q2)).unwrap_or(0);
                if here != there {
                    bad.insert((p, q));
                }
            }
        }
        for &(p2, q2) in dual.entries.keys() {
            let back = (0..=self.r)
                .flat_map(|p| (0..=2u32).map(move |q| (p, q)))
                .any(|(p, q)| self.map(p, q) == Some((p2, q2)));
            if !back {
                bad.insert((p2, q2));
            }
        }
        bad.into_iter().collect()
    }
}

/// β_{p,a} = dim C_p - rank ∂_p - rank ∂_{p+1}.
pub fn betti_from_ranks(source_dim: u64, rank_p: u64, rank_p1: u64) -> Result<u64> {
    source_dim
        .checked_sub(rank_p + rank_p1)
        .ok_or_else(|| Error::Integrity(format!("ranks {rank_p} + {rank_p1} exceed dimension {source_dim}")))
}

pub fn strand_betti(spec: &StrandSpec, rank_p: &RankResult, rank_p1: &RankResult) -> Result<u64> {
    let dim = counter(spec.n, spec.d, Model::Full).dim(spec.p, &spec.a);
    betti_from_ranks(dim, rank_p.rank as u64, rank_p1.rank as u64)
        .map_err(|e| Error::Integrity(format!("{spec}: {e}")))
}

/// Multigraded Betti numbers of one module S(b;d) on P^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleBetti {
    pub n: usize,
    pub d: u32,
    pub b: u32,
    /// (p, canonical a) -> (β, provenance), zero values included.
    pub multigraded: BTreeMap<(usize, Multidegree), (u64, Provenance)>,
    /// Whole positions known only as totals, e.g. through duality.
    pub totals: BTreeMap<(usize, u32), (u64, Provenance)>,
    /// Positions that must be filled before a total table is trusted.
    pub required: BTreeSet<(usize, u32)>,
}

impl ModuleBetti {
    pub fn new(n: usize, d: u32, b: u32) -> Self {
        ModuleBetti {
            n,
            d,
            b,
            multigraded: BTreeMap::new(),
            totals: BTreeMap::new(),
            required: BTreeSet::new(),
        }
    }

    pub fn set(&mut self, p: usize, a: Multidegree, beta: u64, prov: Provenance) {
        debug_assert!(a.is_sorted_descending());
        self.multigraded.insert((p, a), (beta, prov));
    }

    pub fn get(&self, p: usize, a: &Multidegree) -> Option<u64> {
        let (c, _) = sort_multidegree(a);
        self.multigraded.get(&(p, c)).map(|e| e.0)
    }

    fn q_of(&self, p: usize, a: &Multidegree) -> Option<u32> {
        let t = a.total();
        let k = t.checked_sub(self.b as u64)? / self.d as u64;
        ((k * self.d as u64 + self.b as u64) == t && k >= p as u64).then(|| (k - p as u64) as u32)
    }

    /// Canonical strands at (p,q) that lack an entry.
    pub fn missing_at(&self, p: usize, q: u32) -> Vec<StrandSpec> {
        if self.totals.contains_key(&(p, q)) {
            return Vec::new();
        }
        let c = counter(self.n, self.d, Model::Full);
        let total = self.d * (p as u32 + q) + self.b;
        canonical_multidegrees(self.n + 1, total)
            .into_iter()
            .filter(|a| c.dim(p, a) > 0 && !self.multigraded.contains_key(&(p, a.clone())))
            .map(|a| StrandSpec {
                n: self.n,
                d: self.d,
                b: self.b,
                p,
                q,
                a,
            })
            .collect()
    }

    pub fn missing(&self) -> Vec<StrandSpec> {
        self.required
            .iter()
            .flat_map(|&(p, q)| self.missing_at(p, q))
            .collect()
    }

    /// Totals, requiring every required position to be filled.
    pub fn total_table(&self) -> Result<BettiTable> {
        let missing = self.missing();
        if !missing.is_empty() {
            let shown: Vec<String> = missing.iter().take(20).map(|s| s.to_string()).collect();
            return Err(Error::Missing(format!(
                "{} strands missing for b={} d={}: {}{}",
                missing.len(),
                self.b,
                self.d,
                shown.join(", "),
                if missing.len() > 20 { ", ..." } else { "" }
            )));
        }
        Ok(self.partial_table())
    }

    /// Totals over whatever entries exist.
    pub fn partial_table(&self) -> BettiTable {
        let mut t = BettiTable::new(self.b, self.d);
        let mut acc: BTreeMap<(usize, u32), u64> = BTreeMap::new();
        for ((p, a), &(beta, _)) in &self.multigraded {
            if let Some(q) = self.q_of(*p, a) {
                if !self.totals.contains_key(&(*p, q)) {
                    *acc.entry((*p, q)).or_insert(0) += beta * sort_multidegree(a).1;
                }
            }
        }
        for (&k, &(v, _)) in &self.totals {
            acc.insert(k, v);
        }
        for ((p, q), v) in acc {
            t.set(p, q, v);
        }
        t
    }

    /// Multigraded Hilbert series of K_{p,q}, expanded over orbits.
    pub fn kpq_series(&self, p: usize, q: u32) -> GradedMultiset {
        let total = (self.d * (p as u32 + q) + self.b) as u64;
        let mut g = GradedMultiset::new();
        for ((pp, a), &(beta, _)) in self.multigraded.range((p, Multidegree(Vec::new()))..) {
            if *pp != p {
                break;
            }
            if a.total() == total && beta > 0 {
                for w in permutations(a) {
                    g.add(w, beta);
                }
            }
        }
        g
    }

    /// Whether K_{p,q} is fully described at the multigraded level.
    pub fn has_multigraded(&self, p: usize, q: u32) -> bool {
        !self.totals.contains_key(&(p, q)) && self.missing_at(p, q).is_empty()
    }

    /// Every entry with orbit expansion; non-canonical copies are marked `symmetry`.
    pub fn expanded_entries(&self) -> Vec<(usize, Multidegree, u64, Provenance)> {
        let mut out = Vec::new();
        for ((p, a), &(beta, prov)) in &self.multigraded {
            for w in permutations(a) {
                let pr = if &w == a { prov } else { Provenance::Symmetry };
                out.push((*p, w, beta, pr));
            }
        }
        out
    }

    /// `p a0 a1 a2 beta` for each nonzero canonical entry.
    pub fn write_multigraded<W: Write>(&self, mut w: W) -> Result<()> {
        for ((p, a), &(beta, _)) in &self.multigraded {
            if beta > 0 {
                writeln!(w, "{p} {} {beta}", a.spaced())?;
            }
        }
        Ok(())
    }
}

/// A violation of Σ_p (-1)^p β_{p,a} = coefficient of t^a in A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub a: Multidegree,
    pub expected: i64,
    pub found: i64,
}

/// Checks the Euler characteristic of every canonical multidegree against the numerator.
///
/// Totals known only through duality are skipped.
pub fn hilbert_crosscheck(module: &ModuleBetti, num: &NumeratorPolynomial) -> Vec<Violation> {
    let skip: BTreeSet<u64> = module
        .totals
        .keys()
        .map(|&(p, q)| (module.d * (p as u32 + q) + module.b) as u64)
        .collect();
    let mut sums: BTreeMap<Multidegree, i64> = BTreeMap::new();
    for ((p, a), &(beta, _)) in &module.multigraded {
        let s = if p % 2 == 0 { beta as i64 } else { -(beta as i64) };
        *sums.entry(a.clone()).or_insert(0) += s;
    }
    for a in num.terms.keys() {
        if a.is_sorted_descending() {
            sums.entry(a.clone()).or_insert(0);
        }
    }
    sums.into_iter()
        .filter(|(a, _)| !skip.contains(&a.total()))
        .filter_map(|(a, found)| {
            let expected = num.coefficient(&a);
            (expected != found).then_some(Violation { a, expected, found })
        })
        .collect()
}

/// Modules keyed by (n, d, b), persisted under `root/n{n}/d{d}/b{b}/`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BettiDatabase {
    pub modules: BTreeMap<(usize, u32, u32), ModuleBetti>,
}

impl BettiDatabase {
    pub fn module(&self, n: usize, d: u32, b: u32) -> Option<&ModuleBetti> {
        self.modules.get(&(n, d, b))
    }

    pub fn insert(&mut self, m: ModuleBetti) {
        self.modules.insert((m.n, m.d, m.b), m);
    }

    pub fn module_dir(root: &Path, n: usize, d: u32, b: u32) -> PathBuf {
        root.join(format!("n{n}")).join(format!("d{d}")).join(format!("b{b}"))
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        for m in self.modules.values() {
            let dir = Self::module_dir(root, m.n, m.d, m.b);
            fs::create_dir_all(&dir)?;
            let mut meta = format!("n {}\nd {}\nb {}\nrequired", m.n, m.d, m.b);
            for (p, q) in &m.required {
                meta.push_str(&format!(" {p},{q}"));
            }
            meta.push('\n');
            write_atomic(&dir.join("meta.txt"), meta.as_bytes())?;
            let mut entries = Vec::new();
            for ((p, a), &(beta, prov)) in &m.multigraded {
                writeln!(entries, "{p} {} {beta} {}", a.spaced(), prov.as_str())?;
            }
            write_atomic(&dir.join("entries.txt"), &entries)?;
            let mut totals = Vec::new();
            for (&(p, q), &(v, prov)) in &m.totals {
                writeln!(totals, "{p} {q} {v} {}", prov.as_str())?;
            }
            write_atomic(&dir.join("totals.txt"), &totals)?;
            let mut mg = Vec::new();
            m.write_multigraded(&mut mg)?;
            write_atomic(&dir.join("multigraded.txt"), &mg)?;
            let table = m.partial_table();
            write_atomic(&dir.join("table.csv"), table.to_csv().as_bytes())?;
        }
        Ok(())
    }

    /// Loads every module found under `root`.
    pub fn load(root: &Path) -> Result<Self> {
        let mut db = BettiDatabase::default();
        if !root.exists() {
            return Ok(db);
        }
        let mut metas = Vec::new();
        collect_files(root, "meta.txt", &mut metas)?;
        metas.sort();
        for meta in metas {
            let dir = meta.parent().expect("meta has a parent");
            db.insert(load_module(dir)?);
        }
        Ok(db)
    }
}

fn collect_files(dir: &Path, name: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    for e in fs::read_dir(dir)? {
        let path = e?.path();
        if path.is_dir() {
            collect_files(&path, name, out)?;
        } else if path.file_name().is_some_and(|f| f == name) {
            out.push(path);
        }
    }
    Ok(())
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn load_module(dir: &Path) -> Result<ModuleBetti> {
    let meta_path = dir.join("meta.txt");
    let meta = fs::read_to_string(&meta_path)?;
    let (mut n, mut d, mut b) = (None, None, None);
    let mut required = BTreeSet::new();
    for (i, line) in meta.lines().enumerate() {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let num = |s: Option<&str>| -> Result<u64> {
            s.and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(&meta_path, i + 1, "expected a number"))
        };
        match key {
            "n" => n = Some(num(it.next())? as usize),
            "d" => d = Some(num(it.next())? as u32),
            "b" => b = Some(num(it.next())? as u32),
            "required" => {
                for pq in it {
                    let (p, q) = pq
                        .split_once(',')
                        .and_then(|(p, q)| Some((p.parse().ok()?, q.parse().ok()?)))
                        .ok_or_else(|| parse_err(&meta_path, i + 1, "bad position"))?;
                    required.insert((p, q));
                }
            }
            _ => return Err(parse_err(&meta_path, i + 1, format!("unknown key {key}"))),
        }
    }
    let missing = || parse_err(&meta_path, 0, "incomplete header");
    let mut m = ModuleBetti::new(n.ok_or_else(missing)?, d.ok_or_else(missing)?, b.ok_or_else(missing)?);
    m.required = required;
    let entries_path = dir.join("entries.txt");
    for (i, line) in fs::read_to_string(&entries_path)?.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != m.n + 4 {
            return Err(parse_err(&entries_path, i + 1, "wrong field count"));
        }
        let nums: Vec<u64> = f[..f.len() - 1]
            .iter()
            .map(|t| t.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(&entries_path, i + 1, e.to_string()))?;
        let a = Multidegree(nums[1..=m.n + 1].iter().map(|&x| x as u32).collect());
        m.set(nums[0] as usize, a, nums[m.n + 2], f[f.len() - 1].parse()?);
    }
    let totals_path = dir.join("totals.txt");
    for (i, line) in fs::read_to_string(&totals_path)?.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(&totals_path, i + 1, "wrong field count"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|e| parse_err(&totals_path, i + 1, e.to_string()));
        m.totals.insert((num(f[0])? as usize, num(f[1])? as u32), (num(f[2])?, f[3].parse()?));
    }
    Ok(m)
}

/// Writes through a temporary file and rename so readers never see partial content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(v: &[u32]) -> Multidegree {
        Multidegree(v.to_vec())
    }

    #[test]
    fn duality_examples() {
        let r = dual_rule(0, 4).unwrap();
        assert_eq!((r.b_dual, r.s, r.r), (1, 1, 12));
        assert_eq!(r.map(1, 1), Some((11, 1)));
        let r = dual_rule(2, 4).unwrap();
        assert_eq!((r.b_dual, r.s), (3, 2));
        assert_eq!(r.map(0, 0), Some((12, 1)));
        let r = dual_rule(1, 5).unwrap();
        assert_eq!((r.b_dual, r.s), (1, 1));
        assert_eq!(r.map(0, 0), Some((18, 2)));
        assert!(dual_rule(5, 5).is_err());
    }

    #[test]
    fn duality_is_an_involution() {
        for d in 1..=7 {
            for b in 0..d {
                let r = dual_rule(b, d).unwrap();
                let back = dual_rule(r.b_dual, d).unwrap();
                assert_eq!(back.b_dual, b);
                for p in 0..=r.r {
                    for q in 0..=2 {
                        if let Some((p2, q2)) = r.map(p, q) {
                            assert_eq!(back.map(p2, q2), Some((p, q)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ranks_to_betti() {
        assert_eq!(betti_from_ranks(23, 8, 15).unwrap(), 0);
        assert!(betti_from_ranks(5, 3, 3).is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let t = BettiTable::from_rows(0, 3, &[vec![1], vec![0, 27, 105, 189, 189, 105, 27], vec![0, 0, 0, 0, 0, 0, 0, 1]]);
        let back = BettiTable::from_csv(0, 3, &t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_csv().starts_with("q,0,1,2,3,4,5,6,7\n0,1,0"));
    }

    #[test]
    fn totals_expand_orbits() {
        let mut m = ModuleBetti::new(2, 3, 0);
        m.set(1, md(&[4, 2, 0]), 1, Provenance::RankComputed);
        m.set(1, md(&[2, 2, 2]), 3, Provenance::RankComputed);
        assert_eq!(m.partial_table().get(1, 1), 9);
        assert_eq!(m.kpq_series(1, 1).dimension(), 9);
        assert_eq!(m.kpq_series(1, 1).get(&md(&[0, 2, 4])), 1);
    }

    #[test]
    fn incomplete_database_lists_missing_strands() {
        let mut m = ModuleBetti::new(2, 3, 0);
        m.required.insert((1, 1));
        m.set(1, md(&[4, 2, 0]), 1, Provenance::RankComputed);
        let err = m.total_table().unwrap_err().to_string();
        assert!(err.contains("(2,2,2)"), "{err}");
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = ModuleBetti::new(2, 3, 0);
        m.required.insert((1, 1));
        m.set(1, md(&[4, 2, 0]), 1, Provenance::RankComputed);
        m.set(1, md(&[3, 3, 0]), 0, Provenance::HilbertDerived);
        m.totals.insert((7, 2), (1, Provenance::Duality));
        let mut db = BettiDatabase::default();
        db.insert(m);
        db.save(dir.path()).unwrap();
        assert!(dir.path().join("n2/d3/b0/table.csv").exists());
        assert_eq!(BettiDatabase::load(dir.path()).unwrap(), db);
    }
}
