//! Planning rank tasks, running them, and assembling Betti numbers from their ranks.

pub mod queue;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use log::warn;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::betti::{dual_rule, BettiDatabase, ModuleBetti, Provenance};
use crate::error::{Error, Result};
use crate::hilbert::{betti_from_numerator, numerator, relevant_range, relevant_range_of, VanishingTable};
use crate::koszul::{build_differential_in, counter, effective_rows, Model, StrandSpec};
use crate::monomial::{canonical_multidegrees, compositions, sort_multidegree, Multidegree};
use crate::rank::{compute_rank, RankConfig, RankResult};
use crate::schur::{greedy_decompose, SchurDecomposition};

/// Which reductions a plan may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub symmetry: bool,
    pub duality: bool,
    pub hilbert_shortcut: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            symmetry: true,
            duality: true,
            hilbert_shortcut: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanOptions {
    pub flags: Flags,
    pub model: Model,
    /// Restrict work to the totals containing these positions.
    pub positions: Option<BTreeSet<(usize, u32)>>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            flags: Flags::default(),
            model: Model::Full,
            positions: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskState {
    Pending,
    Claimed,
    Done,
    Failed,
}

impl TaskState {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskState::Pending => "pending",
            TaskState::Claimed => "claimed",
            TaskState::Done => "done",
            TaskState::Failed => "failed",
        }
    }
}

/// Rank of the outgoing differential ∂_p of one strand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub spec: StrandSpec,
    pub model: Model,
    pub state: TaskState,
    pub attempts: u32,
    pub memory_tier: usize,
}

/// Stable id of the matrix ∂_p at (n, d, b, p, a) in a model.
pub fn task_id(spec: &StrandSpec, model: Model) -> String {
    let key = format!(
        "n={} d={} b={} p={} a={} model={} role=outgoing",
        spec.n,
        spec.d,
        spec.b,
        spec.p,
        spec.a.dashed(),
        model.as_str()
    );
    let digest = Sha256::digest(key.as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

impl Task {
    pub fn new(spec: StrandSpec, model: Model) -> Self {
        Task {
            id: task_id(&spec, model),
            spec,
            model,
            state: TaskState::Pending,
            attempts: 0,
            memory_tier: 0,
        }
    }

    /// (columns, rows) before dropping empty rows.
    pub fn shape(&self) -> (u64, u64) {
        let c = counter(self.spec.n, self.spec.d, self.model);
        let cols = c.dim(self.spec.p, &self.spec.a);
        let rows = self.spec.p.checked_sub(1).map(|p| c.dim(p, &self.spec.a)).unwrap_or(0);
        (cols, rows)
    }
}

/// Total degree k = p + q with the positions whose Betti numbers it yields.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Block {
    k: usize,
    /// Positions p whose β is read off this block.
    betti: Vec<usize>,
    /// Differentials ∂_j whose ranks must be computed.
    computed: Vec<usize>,
    /// In shortcut mode, exactness holds away from `betti`.
    exact_elsewhere: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub n: usize,
    pub d: u32,
    pub b: u32,
    /// Module whose strands the tasks belong to; differs from `b` when duality moved the work.
    pub compute_b: u32,
    pub options: PlanOptions,
    pub warnings: Vec<String>,
    pub tasks: Vec<Task>,
}

impl Manifest {
    /// Largest matrix by columns, then by effective rows: (columns, effective rows).
    pub fn largest(&self) -> Option<(u64, u64)> {
        let max_cols = self.tasks.iter().map(|t| t.shape().0).max()?;
        self.tasks
            .iter()
            .filter(|t| t.shape().0 == max_cols)
            .map(|t| (max_cols, effective_rows(&t.spec, t.model) as u64))
            .max()
    }

    pub fn total_columns(&self) -> u64 {
        self.tasks.iter().map(|t| t.shape().0).sum()
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fl = &self.options.flags;
        writeln!(f, "n {}", self.n)?;
        writeln!(f, "d {}", self.d)?;
        writeln!(f, "b {}", self.b)?;
        writeln!(f, "compute_b {}", self.compute_b)?;
        writeln!(f, "model {}", self.options.model.as_str())?;
        writeln!(f, "symmetry {}", fl.symmetry)?;
        writeln!(f, "duality {}", fl.duality)?;
        writeln!(f, "hilbert_shortcut {}", fl.hilbert_shortcut)?;
        if let Some(pos) = &self.options.positions {
            let v: Vec<String> = pos.iter().map(|(p, q)| format!("{p},{q}")).collect();
            writeln!(f, "positions {}", v.join(" "))?;
        }
        for w in &self.warnings {
            writeln!(f, "warning {w}")?;
        }
        for t in &self.tasks {
            writeln!(f, "task {} {} {} {}", t.id, t.spec.p, t.spec.q, t.spec.a.dashed())?;
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    s.parse().map_err(|_| Error::InvalidArgument(format!("expected true or false, got {s}")))
}

pub fn parse_multidegree(s: &str) -> Result<Multidegree> {
    s.split('-')
        .map(|t| t.parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Multidegree)
        .map_err(|_| Error::InvalidArgument(format!("bad multidegree {s}")))
}

impl std::str::FromStr for Manifest {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let mut kv: HashMap<&str, &str> = HashMap::new();
        let mut warnings = Vec::new();
        let mut task_lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            match k {
                "warning" => warnings.push(v.to_string()),
                "task" => task_lines.push((i + 1, v)),
                "" => {}
                _ => {
                    kv.insert(k, v);
                }
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::Missing(format!("manifest field {k}")));
        let num = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| Error::InvalidArgument(format!("manifest field {k}")))
        };
        let n = num("n")? as usize;
        let (d, b, compute_b) = (num("d")? as u32, num("b")? as u32, num("compute_b")? as u32);
        let model: Model = get("model")?.parse()?;
        let flags = Flags {
            symmetry: parse_bool(get("symmetry")?)?,
            duality: parse_bool(get("duality")?)?,
            hilbert_shortcut: parse_bool(get("hilbert_shortcut")?)?,
        };
        let positions = match kv.get("positions") {
            None => None,
            Some(v) => Some(
                v.split_whitespace()
                    .map(|t| {
                        t.split_once(',')
                            .and_then(|(p, q)| Some((p.parse().ok()?, q.parse().ok()?)))
                            .ok_or_else(|| Error::InvalidArgument(format!("bad position {t}")))
                    })
                    .collect::<Result<BTreeSet<_>>>()?,
            ),
        };
        let mut tasks = Vec::new();
        for (line, v) in task_lines {
            let f: Vec<&str> = v.split_whitespace().collect();
            let bad = || Error::Parse {
                source_name: "manifest".into(),
                line,
                reason: "bad task line".into(),
            };
            if f.len() != 4 {
                return Err(bad());
            }
            let p = f[1].parse().map_err(|_| bad())?;
            let q = f[2].parse().map_err(|_| bad())?;
            let spec = StrandSpec::new(n, d, compute_b, p, q, parse_multidegree(f[3])?)?;
            let t = Task::new(spec, model);
            if t.id != f[0] {
                return Err(Error::Integrity(format!("task id {} does not match its spec", f[0])));
            }
            tasks.push(t);
        }
        Ok(Manifest {
            n,
            d,
            b,
            compute_b,
            options: PlanOptions { flags, model, positions },
            warnings,
            tasks,
        })
    }
}

/// Checks the duality rule against every pair of reference tables.
pub fn duality_validated() -> Result<bool> {
    let tables = crate::golden::betti_tables()?;
    for t in &tables {
        let rule = dual_rule(t.b, t.d)?;
        if let Some(other) = tables.iter().find(|u| u.d == t.d && u.b == rule.b_dual) {
            if !rule.mismatches(t, other).is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn max_total(n: usize, d: u32) -> usize {
    counter(n, d, Model::Full).max_p() + 2
}

fn blocks(n: usize, b: u32, d: u32, opts: &PlanOptions, warnings: &mut Vec<String>) -> Result<Vec<Block>> {
    let mut shortcut = opts.flags.hilbert_shortcut;
    if shortcut && n != 2 {
        warnings.push("vanishing table only known on P^2; using the full inventory".into());
        shortcut = false;
    }
    let range = if shortcut {
        match relevant_range(b, d) {
            Ok(r) => Some(r),
            Err(e) => {
                warnings.push(format!("relevant range rejected ({e}); using the full inventory"));
                None
            }
        }
    } else {
        None
    };
    let wanted = |ps: &[usize], k: usize| match &opts.positions {
        None => true,
        Some(set) => ps.iter().any(|&p| set.contains(&(p, (k - p) as u32))),
    };
    let mut out = Vec::new();
    for k in 0..=max_total(n, d) {
        let block = match &range {
            Some(range) => {
                let ps: Vec<usize> = (0..=k).filter(|&p| k - p <= 2 && range.contains(p, (k - p) as u32)).collect();
                if ps.len() < 2 {
                    continue;
                }
                let (lo, hi) = (ps[0], *ps.last().expect("nonempty"));
                Block {
                    k,
                    betti: ps,
                    computed: (lo + 1..=hi).collect(),
                    exact_elsewhere: true,
                }
            }
            None => {
                let ps: Vec<usize> = (k.saturating_sub(2)..=k).collect();
                Block {
                    k,
                    computed: ps.iter().copied().filter(|&j| j >= 1).collect(),
                    betti: ps,
                    exact_elsewhere: false,
                }
            }
        };
        if wanted(&block.betti, k) {
            out.push(block);
        }
    }
    Ok(out)
}

fn multidegrees(n: usize, total: u32, symmetry: bool) -> Vec<Multidegree> {
    if symmetry {
        canonical_multidegrees(n + 1, total)
    } else {
        compositions(n + 1, total)
    }
}

fn tasks_for(n: usize, b: u32, d: u32, opts: &PlanOptions, blocks: &[Block]) -> Vec<Task> {
    let c = counter(n, d, opts.model);
    let mut tasks = Vec::new();
    for blk in blocks {
        let total = d * blk.k as u32 + b;
        for a in multidegrees(n, total, opts.flags.symmetry) {
            for &j in &blk.computed {
                if c.dim(j, &a) > 0 && c.dim(j - 1, &a) > 0 {
                    let spec = StrandSpec {
                        n,
                        d,
                        b,
                        p: j,
                        q: (blk.k - j) as u32,
                        a: a.clone(),
                    };
                    tasks.push(Task::new(spec, opts.model));
                }
            }
        }
    }
    tasks
}

/// Tasks for every strand matrix needed by S(b;d), after reductions.
pub fn plan(n: usize, b: u32, d: u32, opts: &PlanOptions) -> Result<Manifest> {
    if d == 0 || b >= d {
        return Err(Error::InvalidArgument(format!("need 0 <= b < d, got b={b}, d={d}")));
    }
    let mut warnings = Vec::new();
    let mut opts = opts.clone();
    let own_blocks = blocks(n, b, d, &opts, &mut warnings)?;
    let mut compute_b = b;
    let mut tasks = tasks_for(n, b, d, &opts, &own_blocks);
    let usable = opts.flags.duality && opts.flags.hilbert_shortcut && n == 2 && opts.positions.is_none() && warnings.is_empty();
    if opts.flags.duality && !usable {
        opts.flags.duality = false;
    }
    if usable {
        if duality_validated()? {
            let rule = dual_rule(b, d)?;
            if rule.b_dual != b {
                let mut w = Vec::new();
                let dual_blocks = blocks(n, rule.b_dual, d, &opts, &mut w)?;
                let dual_tasks = tasks_for(n, rule.b_dual, d, &opts, &dual_blocks);
                let cost = |ts: &[Task]| (ts.len(), ts.iter().map(|t| t.shape().0).sum::<u64>());
                if w.is_empty() && cost(&dual_tasks) < cost(&tasks) {
                    compute_b = rule.b_dual;
                    tasks = dual_tasks;
                }
            }
        } else {
            warnings.push("duality rule disagrees with the reference tables; duality disabled".into());
            opts.flags.duality = false;
        }
    }
    for w in &warnings {
        warn!("plan b={b} d={d}: {w}");
    }
    tasks.sort_by(|x, y| {
        (x.spec.p + x.spec.q as usize, &x.spec.a, x.spec.p).cmp(&(y.spec.p + y.spec.q as usize, &y.spec.a, y.spec.p))
    });
    tasks.dedup_by(|x, y| x.id == y.id);
    Ok(Manifest {
        n,
        d,
        b,
        compute_b,
        options: opts,
        warnings,
        tasks,
    })
}

/// Builds the matrix and computes its rank under `cfg`.
pub fn run_task(task: &Task, cfg: &RankConfig) -> Result<RankResult> {
    let m = build_differential_in(&task.spec, task.model)?;
    compute_rank(&m, cfg)
}

/// Betti numbers of every module touched by a manifest, from the ranks of its tasks.
pub fn assemble(man: &Manifest, ranks: &HashMap<String, usize>) -> Result<BettiDatabase> {
    let missing: Vec<&str> = man.tasks.iter().filter(|t| !ranks.contains_key(&t.id)).map(|t| t.id.as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::Missing(format!("{} task results missing: {}", missing.len(), missing.join(", "))));
    }
    let mut warnings = Vec::new();
    let mut db = BettiDatabase::default();
    let computed = assemble_module(man, man.compute_b, ranks, &mut warnings)?;
    if man.compute_b != man.b {
        let rule = dual_rule(man.b, man.d)?;
        let dual_table = computed.partial_table();
        let mut m = numerator_module(man.n, man.b, man.d)?;
        let vt = VanishingTable::p2(man.b, man.d)?;
        for (p, q) in relevant_range_of(&vt).pairs {
            let (p2, q2) = rule
                .map(p, q)
                .ok_or_else(|| Error::Integrity(format!("({p},{q}) has no dual position")))?;
            m.totals.insert((p, q), (dual_table.get(p2, q2), Provenance::Duality));
        }
        m.required = vt.positions().into_iter().collect();
        db.insert(m);
    }
    db.insert(computed);
    Ok(db)
}

/// Entries of S(b;d) readable from the numerator, with the vanishing table's positions required.
fn numerator_module(n: usize, b: u32, d: u32) -> Result<ModuleBetti> {
    let vt = VanishingTable::p2(b, d)?;
    let num = numerator(n, b, d)?;
    let nb = betti_from_numerator(&num, &vt, &relevant_range_of(&vt))?;
    let mut m = ModuleBetti::new(n, d, b);
    for ((p, a), beta) in nb.entries {
        m.set(p, a, beta, Provenance::HilbertDerived);
    }
    Ok(m)
}

fn assemble_module(man: &Manifest, b: u32, ranks: &HashMap<String, usize>, warnings: &mut Vec<String>) -> Result<ModuleBetti> {
    let (n, d) = (man.n, man.d);
    let opts = &man.options;
    let blks = blocks(n, b, d, opts, warnings)?;
    let shortcut = blks.first().map_or(opts.flags.hilbert_shortcut && n == 2 && warnings.is_empty(), |b| b.exact_elsewhere);
    let mut m = if shortcut {
        numerator_module(n, b, d)?
    } else {
        ModuleBetti::new(n, d, b)
    };
    m.required = match &opts.positions {
        Some(set) => set.clone(),
        None if shortcut => VanishingTable::p2(b, d)?.positions().into_iter().collect(),
        None => {
            let maxp = counter(n, d, Model::Full).max_p();
            (0..=maxp).flat_map(|p| (0..=2u32).map(move |q| (p, q))).collect()
        }
    };
    let c = counter(n, d, opts.model);
    let full = counter(n, d, Model::Full);
    for blk in &blks {
        let k = blk.k;
        let total = d * k as u32 + b;
        let mut seen: BTreeMap<(usize, Multidegree), u64> = BTreeMap::new();
        for a in multidegrees(n, total, opts.flags.symmetry) {
            let dims: Vec<u64> = (0..=k + 1).map(|j| if j <= k { c.dim(j, &a) } else { 0 }).collect();
            // r[j] = rank of ∂_j : C_j -> C_{j-1}; r[0] = r[k+1] = 0.
            let mut r = vec![None; k + 2];
            r[0] = Some(0u64);
            r[k + 1] = Some(0u64);
            for &j in &blk.computed {
                r[j] = Some(if dims[j] == 0 || dims[j - 1] == 0 {
                    0
                } else {
                    let spec = StrandSpec {
                        n,
                        d,
                        b,
                        p: j,
                        q: (k - j) as u32,
                        a: a.clone(),
                    };
                    ranks[&task_id(&spec, opts.model)] as u64
                });
            }
            if blk.exact_elsewhere {
                let lo = blk.betti[0];
                let hi = *blk.betti.last().expect("nonempty");
                for j in 0..lo {
                    let below = r[j].expect("filled from the bottom");
                    r[j + 1] = Some(dims[j].checked_sub(below).ok_or_else(|| exactness_error(b, d, j, &a))?);
                }
                for j in (hi + 1..=k).rev() {
                    let above = r[j + 1].expect("filled from the top");
                    r[j] = Some(dims[j].checked_sub(above).ok_or_else(|| exactness_error(b, d, j, &a))?);
                }
            }
            for &p in &blk.betti {
                let (rp, rp1) = (r[p].unwrap_or(0), r[p + 1].unwrap_or(0));
                let beta = dims[p].checked_sub(rp + rp1).ok_or_else(|| {
                    Error::Integrity(format!("negative Betti number at p={p} a={a} for b={b} d={d}"))
                })?;
                // Strands empty only in the Artinian model still carry a zero entry.
                if full.dim(p, &a) == 0 {
                    continue;
                }
                let (canon, _) = sort_multidegree(&a);
                if let Some(&prev) = seen.get(&(p, canon.clone())) {
                    if prev != beta {
                        return Err(Error::Integrity(format!(
                            "S_3 symmetry broken at p={p}: β at {a} is {beta}, at {canon} is {prev}"
                        )));
                    }
                    continue;
                }
                seen.insert((p, canon.clone()), beta);
                m.set(p, canon, beta, Provenance::RankComputed);
            }
        }
    }
    Ok(m)
}

fn exactness_error(b: u32, d: u32, j: usize, a: &Multidegree) -> Error {
    Error::Integrity(format!("exactness violated at p={j} a={a} for b={b} d={d}"))
}

/// Runs every task of a manifest in this process.
pub fn execute(man: &Manifest, cfg: &RankConfig) -> Result<HashMap<String, RankResult>> {
    man.tasks
        .par_iter()
        .map(|t| run_task(t, cfg).map(|r| (t.id.clone(), r)))
        .collect()
}

/// Plan, run and assemble in one process.
pub fn pipeline(n: usize, b: u32, d: u32, opts: &PlanOptions, cfg: &RankConfig) -> Result<(Manifest, BettiDatabase)> {
    let man = plan(n, b, d, opts)?;
    let results = execute(&man, cfg)?;
    let ranks = results.iter().map(|(k, v)| (k.clone(), v.rank)).collect();
    let db = assemble(&man, &ranks)?;
    Ok((man, db))
}

/// Module with every entry multigraded: duality is never used, other reductions are.
pub fn multigraded_module(
    n: usize,
    b: u32,
    d: u32,
    positions: Option<BTreeSet<(usize, u32)>>,
    model: Model,
    cfg: &RankConfig,
) -> Result<ModuleBetti> {
    let opts = PlanOptions {
        flags: Flags {
            duality: false,
            ..Flags::default()
        },
        model,
        positions,
    };
    let (_, mut db) = pipeline(n, b, d, &opts, cfg)?;
    db.modules
        .remove(&(n, d, b))
        .ok_or_else(|| Error::Integrity(format!("pipeline lost module b={b} d={d}")))
}

pub fn schur_at(m: &ModuleBetti, p: usize, q: u32) -> Result<SchurDecomposition> {
    if !m.has_multigraded(p, q) {
        return Err(Error::Missing(format!("no multigraded data at ({p},{q}) for b={} d={}", m.b, m.d)));
    }
    greedy_decompose(&m.kpq_series(p, q))
}

/// (p, dim K_{p,q}, decomposition) along row q, for every p with a nonzero entry.
pub fn schur_row(m: &ModuleBetti, q: u32) -> Result<Vec<(usize, u64, SchurDecomposition)>> {
    let t = m.partial_table();
    (0..t.width())
        .filter(|&p| t.get(p, q) > 0)
        .map(|p| Ok((p, t.get(p, q), schur_at(m, p, q)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(v: &[u32]) -> Multidegree {
        Multidegree(v.to_vec())
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let s = StrandSpec::new(2, 3, 0, 2, 2, md(&[7, 3, 2])).unwrap();
        let id = task_id(&s, Model::Full);
        assert_eq!(id.len(), 32);
        assert_eq!(id, task_id(&s.clone(), Model::Full));
        assert_ne!(id, task_id(&s, Model::Artinian));
        let t = s.at_p(3).unwrap();
        assert_ne!(id, task_id(&t, Model::Full));
    }

    #[test]
    fn empty_relevant_ranges_give_no_tasks() {
        for (b, d) in [(0, 3), (0, 4), (1, 4)] {
            assert!(plan(2, b, d, &PlanOptions::default()).unwrap().tasks.is_empty(), "b={b} d={d}");
        }
    }

    #[test]
    fn cubic_table_from_numerator_alone() {
        let (man, db) = pipeline(2, 0, 3, &PlanOptions::default(), &RankConfig::default()).unwrap();
        assert!(man.tasks.is_empty());
        let t = db.module(2, 3, 0).unwrap().total_table().unwrap();
        assert_eq!(t.row(1, 8), vec![0, 27, 105, 189, 189, 105, 27, 0]);
        assert_eq!(t.get(0, 0), 1);
        assert_eq!(t.get(7, 2), 1);
    }

    #[test]
    fn cubic_table_without_reductions() {
        let opts = PlanOptions {
            flags: Flags {
                symmetry: false,
                duality: false,
                hilbert_shortcut: false,
            },
            ..Default::default()
        };
        let (man, db) = pipeline(2, 0, 3, &opts, &RankConfig::default()).unwrap();
        assert!(!man.tasks.is_empty());
        let t = db.module(2, 3, 0).unwrap().total_table().unwrap();
        assert_eq!(t.row(1, 8), vec![0, 27, 105, 189, 189, 105, 27, 0]);
        assert_eq!(t.get(7, 2), 1);
    }

    #[test]
    fn manifest_text_round_trip() {
        let opts = PlanOptions {
            positions: Some([(4, 1)].into_iter().collect()),
            ..Default::default()
        };
        let man = plan(2, 2, 4, &opts).unwrap();
        assert!(!man.tasks.is_empty());
        let back: Manifest = man.to_string().parse().unwrap();
        assert_eq!(back, man);
    }

    #[test]
    fn missing_results_are_listed() {
        let man = plan(2, 2, 4, &PlanOptions::default()).unwrap();
        let err = assemble(&man, &HashMap::new()).unwrap_err().to_string();
        assert!(err.contains(&man.tasks[0].id));
    }
}
