//! File-based task queue shared by worker processes.
//!
//! Layout under the queue root:
//! `manifest.txt`, `pending/<id>.task`, `claims/<id>.claim`, `results/<id>.res`,
//! `failed/<id>.fail`, `journal/<worker>.log`, and optionally `matrices/<id>.mtx`.
//! A claim is an exclusively created file; a result is published by hard link, so at most one exists.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use log::{info, warn};

use super::{assemble, Manifest, Task, TaskState};
use crate::betti::{write_atomic, BettiDatabase};
use crate::error::{Error, Result};
use crate::koszul::{build_differential_in, SparseSignMatrix};
use crate::rank::{compute_rank, RankConfig, RankMethod, RankResult};

const GB: u64 = 1 << 30;

/// Memory ceilings tried in order; a task that exceeds one is resubmitted at the next.
pub fn memory_tiers(scale: f64) -> Vec<u64> {
    [GB, 10 * GB, 100 * GB].iter().map(|&t| ((t as f64) * scale).max(1.0) as u64).collect()
}

/// Failure modes a worker can simulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Abort the process right after the n-th claim.
    AbortAfterClaims(u32),
    /// Stop working after the n-th claim, leaving the claim in place.
    AbandonAfterClaims(u32),
    /// Sleep this many milliseconds between claiming and computing.
    DelayAfterClaim(u64),
}

impl std::str::FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("fault must be kind:value, got {s}")))?;
        let v: u64 = arg.parse().map_err(|_| Error::InvalidArgument(format!("bad fault value {arg}")))?;
        match kind {
            "abort" => Ok(Fault::AbortAfterClaims(v as u32)),
            "abandon" => Ok(Fault::AbandonAfterClaims(v as u32)),
            "delay" => Ok(Fault::DelayAfterClaim(v)),
            _ => Err(Error::InvalidArgument(format!("unknown fault {kind}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WorkerConfig {
    pub name: String,
    pub rank: RankConfig,
    pub tiers: Vec<u64>,
    /// Claims older than this are stale even if their process lives.
    pub lease: Option<Duration>,
    /// Keep polling while other workers hold live claims.
    pub wait: bool,
    pub poll: Duration,
    pub fault: Option<Fault>,
}

impl WorkerConfig {
    pub fn new(name: impl Into<String>) -> Self {
        WorkerConfig {
            name: name.into(),
            rank: RankConfig::default(),
            tiers: memory_tiers(1.0),
            lease: None,
            wait: false,
            poll: Duration::from_millis(50),
            fault: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkerReport {
    pub completed: Vec<String>,
    pub escalated: Vec<String>,
    pub failed: Vec<String>,
    pub recovered: Vec<String>,
    pub abandoned: bool,
}

/// Stored outcome of one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskRecord {
    pub id: String,
    pub result: RankResult,
    pub tier: usize,
    pub worker: String,
}

impl TaskRecord {
    pub fn to_text(&self) -> String {
        let r = &self.result;
        let primes: Vec<String> = r.primes_used.iter().map(|(p, k)| format!("{p}:{k}")).collect();
        let tols: Vec<String> = r.tolerances_used.iter().map(|(t, k)| format!("{t:e}:{k}")).collect();
        format!(
            "id {}\nrank {}\nmethod {}\nprimes {}\ntolerances {}\nagreement {}\nelapsed_ms {}\npeak_mem_bytes {}\ntier {}\nworker {}\n",
            self.id,
            r.rank,
            r.method,
            primes.join(","),
            tols.join(","),
            r.agreement,
            r.elapsed_ms,
            r.peak_mem_bytes,
            self.tier,
            self.worker
        )
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let bad = |line: usize, reason: &str| Error::Parse {
            source_name: source.display().to_string(),
            line,
            reason: reason.into(),
        };
        let mut kv = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            kv.insert(k, (i + 1, v));
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(0, &format!("missing field {k}")));
        let num = |k: &str| -> Result<u64> {
            let (l, v) = get(k)?;
            v.parse().map_err(|_| bad(l, &format!("bad {k}")))
        };
        let pairs = |k: &str| -> Result<Vec<(String, usize)>> {
            let (l, v) = get(k)?;
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    let (a, r) = s.split_once(':').ok_or_else(|| bad(l, &format!("bad {k}")))?;
                    Ok((a.to_string(), r.parse().map_err(|_| bad(l, &format!("bad {k}")))?))
                })
                .collect()
        };
        let (ml, m) = get("method")?;
        let method: RankMethod = m.parse().map_err(|_| bad(ml, "bad method"))?;
        let (al, ag) = get("agreement")?;
        let primes = pairs("primes")?
            .into_iter()
            .map(|(p, r)| p.parse().map(|p| (p, r)).map_err(|_| bad(0, "bad prime")))
            .collect::<Result<Vec<(u64, usize)>>>()?;
        let tolerances = pairs("tolerances")?
            .into_iter()
            .map(|(t, r)| t.parse().map(|t| (t, r)).map_err(|_| bad(0, "bad tolerance")))
            .collect::<Result<Vec<(f64, usize)>>>()?;
        Ok(TaskRecord {
            id: get("id")?.1.to_string(),
            result: RankResult {
                rank: num("rank")? as usize,
                method,
                primes_used: primes,
                tolerances_used: tolerances,
                agreement: ag.parse().map_err(|_| bad(al, "bad agreement"))?,
                elapsed_ms: num("elapsed_ms")?,
                peak_mem_bytes: num("peak_mem_bytes")?,
            },
            tier: num("tier")? as usize,
            worker: get("worker")?.1.to_string(),
        })
    }
}

/// Mutable per-task state kept in `pending/<id>.task`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct PendingState {
    attempts: u32,
    tier: usize,
}

impl PendingState {
    fn text(&self) -> String {
        format!("attempts {}\ntier {}\n", self.attempts, self.tier)
    }

    fn parse(text: &str) -> Option<Self> {
        let mut attempts = None;
        let mut tier = None;
        for line in text.lines() {
            match line.split_once(' ') {
                Some(("attempts", v)) => attempts = v.parse().ok(),
                Some(("tier", v)) => tier = v.parse().ok(),
                _ => {}
            }
        }
        Some(PendingState {
            attempts: attempts?,
            tier: tier?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueueStatus {
    pub pending: usize,
    pub claimed: usize,
    pub done: usize,
    pub failed: usize,
}

pub struct Queue {
    pub root: PathBuf,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn pid_alive(pid: u32) -> bool {
    // SAFETY: signal 0 only checks for existence and permission.
    let r = unsafe { libc::kill(pid as libc::pid_t, 0) };
    r == 0 || std::io::Error::last_os_error().raw_os_error() != Some(libc::ESRCH)
}

impl Queue {
    const DIRS: [&'static str; 5] = ["pending", "claims", "results", "failed", "journal"];

    pub fn open(root: &Path) -> Result<Self> {
        if !root.join("manifest.txt").exists() {
            return Err(Error::Missing(format!("no manifest in queue {}", root.display())));
        }
        Ok(Queue { root: root.to_path_buf() })
    }

    /// Creates the queue, or checks an existing one holds the same manifest.
    pub fn create(root: &Path, man: &Manifest) -> Result<Self> {
        for d in Self::DIRS {
            fs::create_dir_all(root.join(d))?;
        }
        let path = root.join("manifest.txt");
        let text = man.to_string();
        if path.exists() {
            if fs::read_to_string(&path)? != text {
                return Err(Error::Integrity(format!("queue {} holds a different manifest", root.display())));
            }
        } else {
            write_atomic(&path, text.as_bytes())?;
        }
        let q = Queue { root: root.to_path_buf() };
        for t in &man.tasks {
            let p = q.pending_path(&t.id);
            if !p.exists() {
                write_atomic(&p, PendingState { attempts: 0, tier: 0 }.text().as_bytes())?;
            }
        }
        Ok(q)
    }

    pub fn manifest(&self) -> Result<Manifest> {
        fs::read_to_string(self.root.join("manifest.txt"))?.parse()
    }

    fn pending_path(&self, id: &str) -> PathBuf {
        self.root.join("pending").join(format!("{id}.task"))
    }
    fn claim_path(&self, id: &str) -> PathBuf {
        self.root.join("claims").join(format!("{id}.claim"))
    }
    pub fn result_path(&self, id: &str) -> PathBuf {
        self.root.join("results").join(format!("{id}.res"))
    }
    fn failed_path(&self, id: &str) -> PathBuf {
        self.root.join("failed").join(format!("{id}.fail"))
    }
    pub fn matrix_path(&self, id: &str) -> PathBuf {
        self.root.join("matrices").join(format!("{id}.mtx"))
    }

    /// Writes every task's matrix to `matrices/`, for workers that should not rebuild them.
    pub fn materialize(&self, man: &Manifest) -> Result<()> {
        fs::create_dir_all(self.root.join("matrices"))?;
        for t in &man.tasks {
            let p = self.matrix_path(&t.id);
            if !p.exists() {
                build_differential_in(&t.spec, t.model)?.write_file(&p)?;
            }
        }
        Ok(())
    }

    pub fn state(&self, id: &str) -> TaskState {
        if self.result_path(id).exists() {
            TaskState::Done
        } else if self.failed_path(id).exists() {
            TaskState::Failed
        } else if self.claim_path(id).exists() {
            TaskState::Claimed
        } else {
            TaskState::Pending
        }
    }

    pub fn status(&self) -> Result<QueueStatus> {
        let mut s = QueueStatus::default();
        for t in self.manifest()?.tasks {
            match self.state(&t.id) {
                TaskState::Pending => s.pending += 1,
                TaskState::Claimed => s.claimed += 1,
                TaskState::Done => s.done += 1,
                TaskState::Failed => s.failed += 1,
            }
        }
        Ok(s)
    }

    fn read_pending(&self, id: &str) -> Result<PendingState> {
        let path = self.pending_path(id);
        let text = fs::read_to_string(&path)?;
        PendingState::parse(&text).ok_or_else(|| Error::Parse {
            source_name: path.display().to_string(),
            line: 0,
            reason: "bad task state".into(),
        })
    }

    fn try_claim(&self, id: &str, worker: &str) -> Result<bool> {
        match OpenOptions::new().write(true).create_new(true).open(self.claim_path(id)) {
            Ok(mut f) => {
                write!(f, "pid {}\nworker {}\nstarted {}\n", std::process::id(), worker, now_ms())?;
                Ok(true)
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// The claim's contents, if the claim is stale.
    fn stale_claim(&self, id: &str, lease: Option<Duration>) -> Option<String> {
        let text = fs::read_to_string(self.claim_path(id)).ok()?;
        self.claim_text_is_stale(&text, lease).then_some(text)
    }

    fn claim_text_is_stale(&self, text: &str, lease: Option<Duration>) -> bool {
        let field = |k: &str| {
            text.lines()
                .find_map(|l| l.strip_prefix(k).and_then(|v| v.trim().parse::<u64>().ok()))
        };
        let (Some(pid), Some(started)) = (field("pid "), field("started ")) else {
            // Half-written claim; the writer is between create and write.
            return false;
        };
        if !pid_alive(pid as u32) {
            return true;
        }
        lease.is_some_and(|l| now_ms().saturating_sub(started) > l.as_millis() as u64)
    }

    /// Moves a stale claim aside; only one recoverer wins the rename.
    ///
    /// A claim that changed since it was judged stale belongs to a live worker and is put back.
    fn recover_claim(&self, id: &str, worker: &str, judged: &str) -> Result<bool> {
        let aside = self.root.join("claims").join(format!("{id}.stale.{worker}.{}", std::process::id()));
        match fs::rename(self.claim_path(id), &aside) {
            Ok(()) => {
                let moved = fs::read_to_string(&aside).unwrap_or_default();
                if moved != judged {
                    let _ = fs::hard_link(&aside, self.claim_path(id));
                    let _ = fs::remove_file(&aside);
                    return Ok(false);
                }
                let _ = fs::remove_file(&aside);
                Ok(true)
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    fn release(&self, id: &str) {
        let _ = fs::remove_file(self.claim_path(id));
    }

    /// Publishes a result; false if another worker already did.
    fn publish(&self, rec: &TaskRecord) -> Result<bool> {
        let tmp = self
            .root
            .join("results")
            .join(format!(".{}.{}.{}.tmp", rec.id, rec.worker, std::process::id()));
        fs::write(&tmp, rec.to_text())?;
        let linked = fs::hard_link(&tmp, self.result_path(&rec.id));
        let _ = fs::remove_file(&tmp);
        match linked {
            Ok(()) => {
                let mut j = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(self.root.join("journal").join(format!("{}.log", rec.worker)))?;
                writeln!(j, "{} {}", rec.id, rec.tier)?;
                Ok(true)
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// Number of journal entries per task id, across all workers.
    pub fn completions(&self) -> Result<BTreeMap<String, usize>> {
        let mut out = BTreeMap::new();
        for e in fs::read_dir(self.root.join("journal"))? {
            for line in fs::read_to_string(e?.path())?.lines() {
                if let Some(id) = line.split_whitespace().next() {
                    *out.entry(id.to_string()).or_insert(0) += 1;
                }
            }
        }
        Ok(out)
    }

    pub fn results(&self) -> Result<HashMap<String, TaskRecord>> {
        let mut out = HashMap::new();
        for t in self.manifest()?.tasks {
            let p = self.result_path(&t.id);
            if p.exists() {
                out.insert(t.id.clone(), TaskRecord::parse(&fs::read_to_string(&p)?, &p)?);
            }
        }
        Ok(out)
    }

    pub fn failures(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for t in self.manifest()?.tasks {
            let p = self.failed_path(&t.id);
            if p.exists() {
                out.push((t.id.clone(), fs::read_to_string(&p)?.trim().to_string()));
            }
        }
        Ok(out)
    }

    fn matrix_for(&self, t: &Task) -> Result<SparseSignMatrix> {
        let p = self.matrix_path(&t.id);
        if p.exists() {
            let m = SparseSignMatrix::read_file(&p)?;
            let (cols, rows) = t.shape();
            if (m.ncols as u64, m.nrows as u64) != (cols, rows) {
                return Err(Error::CorruptMatrix {
                    path: p,
                    reason: format!("shape {}x{} but the strand has {}x{}", m.nrows, m.ncols, rows, cols),
                });
            }
            Ok(m)
        } else {
            build_differential_in(&t.spec, t.model)
        }
    }

    fn run_claimed(&self, t: &Task, cfg: &WorkerConfig, report: &mut WorkerReport) -> Result<()> {
        let st = self.read_pending(&t.id)?;
        let limit = *cfg.tiers.get(st.tier).ok_or_else(|| Error::Integrity(format!("tier {} out of range", st.tier)))?;
        let mut rank_cfg = cfg.rank.clone();
        rank_cfg.max_bytes = Some(rank_cfg.max_bytes.map_or(limit, |m| m.min(limit)));
        let outcome = self.matrix_for(t).and_then(|m| compute_rank(&m, &rank_cfg));
        match outcome {
            Ok(result) => {
                let rec = TaskRecord {
                    id: t.id.clone(),
                    result,
                    tier: st.tier,
                    worker: cfg.name.clone(),
                };
                if self.publish(&rec)? {
                    report.completed.push(t.id.clone());
                }
            }
            Err(Error::MemoryLimit { needed, limit }) if st.tier + 1 < cfg.tiers.len() => {
                info!("task {} needs {needed} bytes over {limit}; escalating", t.id);
                let next = PendingState {
                    attempts: st.attempts + 1,
                    tier: st.tier + 1,
                };
                write_atomic(&self.pending_path(&t.id), next.text().as_bytes())?;
                report.escalated.push(t.id.clone());
            }
            Err(e) => {
                warn!("task {} failed: {e}", t.id);
                let reason = match &e {
                    Error::MemoryLimit { .. } => "memory",
                    Error::CorruptMatrix { .. } => "corrupt",
                    _ => "error",
                };
                let text = format!("reason {reason}\ntier {}\nattempts {}\nmessage {e}\n", st.tier, st.attempts + 1);
                write_atomic(&self.failed_path(&t.id), text.as_bytes())?;
                report.failed.push(t.id.clone());
            }
        }
        Ok(())
    }

    /// Claims and runs tasks until none is left to claim.
    pub fn work(&self, cfg: &WorkerConfig) -> Result<WorkerReport> {
        let man = self.manifest()?;
        let mut report = WorkerReport::default();
        let mut claims = 0u32;
        loop {
            let mut progressed = false;
            let mut busy_elsewhere = false;
            for t in &man.tasks {
                match self.state(&t.id) {
                    TaskState::Done | TaskState::Failed => continue,
                    TaskState::Claimed => {
                        let recovered = match self.stale_claim(&t.id, cfg.lease) {
                            Some(judged) => self.recover_claim(&t.id, &cfg.name, &judged)?,
                            None => false,
                        };
                        if recovered {
                            info!("recovered stale claim on {}", t.id);
                            report.recovered.push(t.id.clone());
                        } else {
                            busy_elsewhere = true;
                            continue;
                        }
                    }
                    TaskState::Pending => {}
                }
                if !self.try_claim(&t.id, &cfg.name)? {
                    busy_elsewhere = true;
                    continue;
                }
                if self.result_path(&t.id).exists() || self.failed_path(&t.id).exists() {
                    self.release(&t.id);
                    continue;
                }
                claims += 1;
                match cfg.fault {
                    Some(Fault::AbortAfterClaims(n)) if claims >= n => std::process::abort(),
                    Some(Fault::AbandonAfterClaims(n)) if claims >= n => {
                        report.abandoned = true;
                        return Ok(report);
                    }
                    Some(Fault::DelayAfterClaim(ms)) => std::thread::sleep(Duration::from_millis(ms)),
                    _ => {}
                }
                let r = self.run_claimed(t, cfg, &mut report);
                self.release(&t.id);
                r?;
                progressed = true;
            }
            if progressed {
                continue;
            }
            if busy_elsewhere && cfg.wait {
                std::thread::sleep(cfg.poll);
                continue;
            }
            return Ok(report);
        }
    }

    /// Assembles the Betti numbers from the results and writes them under `out`.
    pub fn aggregate(&self, out: &Path) -> Result<BettiDatabase> {
        let man = self.manifest()?;
        let failures = self.failures()?;
        if !failures.is_empty() {
            let list: Vec<String> = failures.iter().map(|(id, why)| format!("{id} ({})", why.replace('\n', "; "))).collect();
            return Err(Error::Missing(format!("{} tasks failed: {}", failures.len(), list.join(", "))));
        }
        let ranks = self.results()?.into_iter().map(|(k, v)| (k, v.result.rank)).collect();
        let db = assemble(&man, &ranks)?;
        db.save(out)?;
        Ok(db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::{plan, PlanOptions};

    fn small_queue(dir: &Path) -> (Queue, Manifest) {
        let opts = PlanOptions {
            positions: Some([(4, 1)].into_iter().collect()),
            ..Default::default()
        };
        let man = plan(2, 2, 4, &opts).unwrap();
        (Queue::create(dir, &man).unwrap(), man)
    }

    #[test]
    fn record_round_trip() {
        let rec = TaskRecord {
            id: "abc".into(),
            result: RankResult {
                rank: 7,
                method: RankMethod::PrimeField,
                primes_used: vec![(536870923, 7), (536870981, 7)],
                tolerances_used: vec![],
                agreement: true,
                elapsed_ms: 3,
                peak_mem_bytes: 1024,
            },
            tier: 1,
            worker: "w0".into(),
        };
        assert_eq!(TaskRecord::parse(&rec.to_text(), Path::new("x")).unwrap(), rec);
    }

    #[test]
    fn single_worker_drains_queue() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        let rep = q.work(&WorkerConfig::new("w0")).unwrap();
        assert_eq!(rep.completed.len(), man.tasks.len());
        let s = q.status().unwrap();
        assert_eq!(s.done, man.tasks.len());
        assert!(q.completions().unwrap().values().all(|&c| c == 1));
        // A second worker finds nothing to do.
        assert!(q.work(&WorkerConfig::new("w1")).unwrap().completed.is_empty());
    }

    #[test]
    fn racing_workers_complete_each_task_once() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        std::thread::scope(|s| {
            for w in 0..2 {
                let q = &q;
                s.spawn(move || {
                    let mut cfg = WorkerConfig::new(format!("w{w}"));
                    cfg.fault = Some(Fault::DelayAfterClaim(2));
                    cfg.wait = true;
                    q.work(&cfg).unwrap()
                });
            }
        });
        let c = q.completions().unwrap();
        assert_eq!(c.len(), man.tasks.len());
        assert!(c.values().all(|&n| n == 1));
    }

    #[test]
    fn abandoned_claims_are_recovered_after_lease() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        let mut cfg = WorkerConfig::new("quitter");
        cfg.fault = Some(Fault::AbandonAfterClaims(1));
        assert!(q.work(&cfg).unwrap().abandoned);
        assert_eq!(q.status().unwrap().claimed, 1);
        let mut cfg = WorkerConfig::new("rescuer");
        cfg.lease = Some(Duration::from_millis(0));
        std::thread::sleep(Duration::from_millis(5));
        let rep = q.work(&cfg).unwrap();
        assert_eq!(rep.recovered.len(), 1);
        assert_eq!(q.status().unwrap().done, man.tasks.len());
    }

    #[test]
    fn memory_ceiling_escalates_tier() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        let mut cfg = WorkerConfig::new("w0");
        cfg.tiers = vec![1, 1 << 40];
        let rep = q.work(&cfg).unwrap();
        assert!(!rep.escalated.is_empty());
        assert_eq!(q.status().unwrap().done, man.tasks.len());
        assert!(q.results().unwrap().values().any(|r| r.tier == 1));
    }

    #[test]
    fn exhausted_tiers_fail_with_reason() {
        let dir = tempfile::tempdir().unwrap();
        let (q, _) = small_queue(dir.path());
        let mut cfg = WorkerConfig::new("w0");
        cfg.tiers = vec![1];
        let rep = q.work(&cfg).unwrap();
        assert!(!rep.failed.is_empty());
        assert!(q.failures().unwrap()[0].1.contains("reason memory"));
        assert!(q.aggregate(&dir.path().join("out")).is_err());
    }

    #[test]
    fn corrupt_matrix_is_diagnosed() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        q.materialize(&man).unwrap();
        let victim = &man.tasks[0].id;
        fs::write(q.matrix_path(victim), "garbage\n").unwrap();
        let rep = q.work(&WorkerConfig::new("w0")).unwrap();
        assert_eq!(rep.failed, vec![victim.clone()]);
        assert!(q.failures().unwrap()[0].1.contains("reason corrupt"));
    }

    #[test]
    fn aggregation_is_idempotent_and_matches_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let (q, man) = small_queue(dir.path());
        q.work(&WorkerConfig::new("w0")).unwrap();
        let out = dir.path().join("data");
        let db1 = q.aggregate(&out).unwrap();
        let snap = |p: &Path| {
            let mut v = Vec::new();
            let mut files = Vec::new();
            fn walk(p: &Path, out: &mut Vec<PathBuf>) {
                for e in fs::read_dir(p).unwrap() {
                    let p = e.unwrap().path();
                    if p.is_dir() {
                        walk(&p, out)
                    } else {
                        out.push(p)
                    }
                }
            }
            walk(p, &mut files);
            files.sort();
            for f in files {
                v.push((f.clone(), fs::read(f).unwrap()));
            }
            v
        };
        let first = snap(&out);
        let db2 = q.aggregate(&out).unwrap();
        assert_eq!(db1, db2);
        assert_eq!(first, snap(&out));
        let ranks = crate::jobs::execute(&man, &RankConfig::default())
            .unwrap()
            .into_iter()
            .map(|(k, v)| (k, v.rank))
            .collect();
        assert_eq!(crate::jobs::assemble(&man, &ranks).unwrap(), db1);
    }
}
