use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use veronese::analysis::{
    bs_decompose, betti_distribution, degree_table, fraction_string, is_unimodal, qq_data,
};
use veronese::betti::BettiTable;
use veronese::hilbert::{numerator, relevant_range, VanishingTable};
use veronese::jobs::queue::{memory_tiers, Fault, Queue, WorkerConfig};
use veronese::jobs::{self, parse_multidegree, Flags, PlanOptions};
use veronese::koszul::{counter, strand_basis_in, Model, StrandSpec};
use veronese::rank::{Backend, RankConfig};
use veronese::syzygies::{check_dominant_conjecture, e_dominant_weights, e_space_weights};

#[derive(Parser)]
#[command(name = "veronese", version, about = "Multigraded syzygies of Veronese modules S(b;d) on P^n")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModuleArgs {
    #[arg(long, env = "VERONESE_N", default_value_t = 2)]
    n: usize,
    #[arg(long, env = "VERONESE_D")]
    d: u32,
    #[arg(long, env = "VERONESE_B", default_value_t = 0)]
    b: u32,
}

impl ModuleArgs {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.b >= self.d {
            bail!("need 0 <= b < d, got b={} d={}", self.b, self.d);
        }
        if self.n == 0 {
            bail!("n must be positive");
        }
        Ok(())
    }
}

#[derive(Args, Clone)]
struct RankArgs {
    #[arg(long, env = "VERONESE_BACKEND", default_value = "prime")]
    backend: String,
    #[arg(long, env = "VERONESE_PRIMES", default_value_t = 3)]
    primes: usize,
    #[arg(long, env = "VERONESE_SEED", default_value_t = 0x5eed)]
    seed: u64,
    /// Comma-separated tolerance sweep for the float backend.
    #[arg(long, env = "VERONESE_TOLERANCES", value_delimiter = ',')]
    tolerances: Vec<f64>,
    #[arg(long, env = "VERONESE_MODEL", default_value = "full")]
    model: String,
}

impl RankArgs {
    fn config(&self) -> Result<RankConfig> {
        let mut cfg = RankConfig {
            backend: self.backend.parse::<Backend>()?,
            primes: self.primes,
            seed: self.seed,
            ..RankConfig::default()
        };
        if cfg.primes == 0 {
            bail!("--primes must be at least 1");
        }
        if !self.tolerances.is_empty() {
            cfg.tolerances = self.tolerances.clone();
        }
        Ok(cfg)
    }

    fn model(&self) -> Result<Model> {
        Ok(self.model.parse()?)
    }
}

#[derive(Args, Clone)]
struct ReductionArgs {
    #[arg(long, env = "VERONESE_NO_SYMMETRY")]
    no_symmetry: bool,
    #[arg(long, env = "VERONESE_NO_DUALITY")]
    no_duality: bool,
    #[arg(long, env = "VERONESE_NO_HILBERT")]
    no_hilbert: bool,
    /// Restrict to totals containing these positions, as `p,q` pairs.
    #[arg(long = "position", env = "VERONESE_POSITIONS", value_delimiter = ' ')]
    positions: Vec<String>,
}

impl ReductionArgs {
    fn options(&self, model: Model) -> Result<PlanOptions> {
        let positions = if self.positions.is_empty() {
            None
        } else {
            Some(self.positions.iter().map(|s| parse_pq(s)).collect::<Result<BTreeSet<_>>>()?)
        };
        Ok(PlanOptions {
            flags: Flags {
                symmetry: !self.no_symmetry,
                duality: !self.no_duality,
                hilbert_shortcut: !self.no_hilbert,
            },
            model,
            positions,
        })
    }
}

fn parse_pq(s: &str) -> Result<(usize, u32)> {
    let (p, q) = s.split_once(',').with_context(|| format!("position {s} is not p,q"))?;
    Ok((p.trim().parse()?, q.trim().parse()?))
}

#[derive(Args, Clone)]
struct WorkerArgs {
    #[command(flatten)]
    rank: RankArgs,
    /// Multiplies the 1/10/100 GB memory tiers.
    #[arg(long, env = "VERONESE_TIER_SCALE", default_value_t = 1.0)]
    tier_scale: f64,
    #[arg(long, env = "VERONESE_LEASE_MS")]
    lease_ms: Option<u64>,
    /// Simulated fault: abort:N, abandon:N or delay:MS.
    #[arg(long, env = "VERONESE_FAULT")]
    fault: Option<String>,
}

impl WorkerArgs {
    fn config(&self, name: String) -> Result<WorkerConfig> {
        let mut cfg = WorkerConfig::new(name);
        cfg.rank = self.rank.config()?;
        cfg.tiers = memory_tiers(self.tier_scale);
        cfg.lease = self.lease_ms.map(Duration::from_millis);
        cfg.fault = self.fault.as_deref().map(str::parse::<Fault>).transpose()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct TableSource {
    /// Use the shipped reference table instead of computing.
    #[arg(long)]
    golden: bool,
    #[command(flatten)]
    rank: RankArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimension and basis of one strand.
    Basis {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_P")]
        p: usize,
        #[arg(long, env = "VERONESE_Q")]
        q: u32,
        /// Multidegree as a0-a1-a2.
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "full")]
        model: String,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Numerator of the multigraded Hilbert series.
    Numerator {
        #[command(flatten)]
        m: ModuleArgs,
    },
    /// Vanishing table and relevant range on P^2.
    Range {
        #[command(flatten)]
        m: ModuleArgs,
    },
    /// Task manifest; with --queue, also creates the queue.
    Plan {
        #[command(flatten)]
        m: ModuleArgs,
        #[command(flatten)]
        red: ReductionArgs,
        #[arg(long, env = "VERONESE_MODEL", default_value = "full")]
        model: String,
        #[arg(long, env = "VERONESE_QUEUE")]
        queue: Option<PathBuf>,
        /// Write every matrix into the queue.
        #[arg(long)]
        materialize: bool,
        /// Also report the largest matrix.
        #[arg(long)]
        largest: bool,
    },
    /// Runs worker processes over a queue until it drains.
    Work {
        #[arg(long, env = "VERONESE_QUEUE")]
        queue: PathBuf,
        #[arg(long, env = "VERONESE_WORKERS", default_value_t = 4)]
        workers: usize,
        /// How many of the first-round workers get --fault.
        #[arg(long, default_value_t = 0)]
        faulty: usize,
        #[command(flatten)]
        w: WorkerArgs,
    },
    #[command(hide = true)]
    Worker {
        #[arg(long, env = "VERONESE_QUEUE")]
        queue: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        wait: bool,
        #[command(flatten)]
        w: WorkerArgs,
    },
    /// Assembles queue results into the Betti database.
    Aggregate {
        #[arg(long, env = "VERONESE_QUEUE")]
        queue: PathBuf,
        #[arg(long, env = "VERONESE_OUT")]
        out: PathBuf,
    },
    /// Computes a Betti table in this process.
    Betti {
        #[command(flatten)]
        m: ModuleArgs,
        #[command(flatten)]
        red: ReductionArgs,
        #[command(flatten)]
        rank: RankArgs,
        #[arg(long, env = "VERONESE_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Schur decomposition of K_{p,q}(b;d).
    Schur {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_P")]
        p: usize,
        #[arg(long, env = "VERONESE_Q")]
        q: u32,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Schur counts and dominant weights along one row.
    Dominant {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_Q")]
        q: u32,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Weights of the monomial syzygy space E_{p,q}.
    Esyz {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_P")]
        p: usize,
        #[arg(long, env = "VERONESE_Q")]
        q: u32,
        #[arg(long)]
        all: bool,
    },
    /// Dominant weights of E_{p,q} against those of K_{p,q}, for every nonzero entry.
    CheckConj {
        #[arg(long, env = "VERONESE_N", default_value_t = 2)]
        n: usize,
        #[arg(long, env = "VERONESE_D")]
        d: u32,
        #[arg(long, env = "VERONESE_B")]
        b: Option<u32>,
        #[arg(long)]
        all_b: bool,
        #[command(flatten)]
        rank: RankArgs,
    },
    /// Boij-Söderberg decomposition.
    Bs {
        #[command(flatten)]
        m: ModuleArgs,
        #[command(flatten)]
        src: TableSource,
    },
    /// Moments and unimodality of a Betti row.
    Stats {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_Q", default_value_t = 1)]
        q: u32,
        #[command(flatten)]
        src: TableSource,
    },
    /// Q-Q points of a Betti row against its moment-matched normal.
    Qq {
        #[command(flatten)]
        m: ModuleArgs,
        #[arg(long, env = "VERONESE_Q", default_value_t = 1)]
        q: u32,
        #[arg(long, env = "VERONESE_TRIM_HEAD", default_value_t = 0)]
        trim_head: usize,
        #[arg(long, env = "VERONESE_TRIM_TAIL", default_value_t = 0)]
        trim_tail: usize,
        #[command(flatten)]
        src: TableSource,
    },
    /// Computes tables and diffs them with the shipped references.
    VerifyGolden {
        #[arg(long, env = "VERONESE_D")]
        d: u32,
        #[arg(long, env = "VERONESE_B")]
        b: Option<u32>,
        #[command(flatten)]
        rank: RankArgs,
    },
}

fn table_of(m: &ModuleArgs, src: &TableSource) -> Result<BettiTable> {
    m.validate()?;
    if src.golden {
        return veronese::golden::betti_table(m.b, m.d)?
            .with_context(|| format!("no reference table for b={} d={}", m.b, m.d));
    }
    let opts = PlanOptions {
        model: src.rank.model()?,
        ..PlanOptions::default()
    };
    let (_, db) = jobs::pipeline(m.n, m.b, m.d, &opts, &src.rank.config()?)?;
    Ok(db.module(m.n, m.d, m.b).context("module missing from database")?.total_table()?)
}

fn run(cli: Cli) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Basis { m, p, q, a, model, limit } => {
            m.validate()?;
            let model: Model = model.parse()?;
            let spec = StrandSpec::new(m.n, m.d, m.b, p, q, parse_multidegree(&a)?)?;
            let basis = strand_basis_in(&spec, model);
            writeln!(out, "{spec}")?;
            writeln!(out, "dim {}", basis.len())?;
            debug_assert_eq!(basis.len() as u64, counter(m.n, m.d, model).dim(p, &spec.a));
            for e in basis.iter().take(limit) {
                let w: Vec<String> = e.wedge.iter().map(|i| i.to_string()).collect();
                writeln!(out, "[{}] {}", w.join(" "), e.cofactor)?;
            }
        }
        Cmd::Numerator { m } => {
            m.validate()?;
            numerator(m.n, m.b, m.d)?.write_to(&mut out)?;
        }
        Cmd::Range { m } => {
            m.validate()?;
            let vt = VanishingTable::p2(m.b, m.d)?;
            let range = relevant_range(m.b, m.d)?;
            for (p, q) in vt.positions() {
                let tag = if range.contains(p, q) { "relevant" } else { "numerator" };
                writeln!(out, "{p} {q} {tag}")?;
            }
        }
        Cmd::Plan {
            m,
            red,
            model,
            queue,
            materialize,
            largest,
        } => {
            m.validate()?;
            let man = jobs::plan(m.n, m.b, m.d, &red.options(model.parse()?)?)?;
            writeln!(out, "b {} d {} compute_b {}", man.b, man.d, man.compute_b)?;
            writeln!(out, "tasks {}", man.tasks.len())?;
            writeln!(out, "columns {}", man.total_columns())?;
            if largest {
                match man.largest() {
                    Some((c, r)) => writeln!(out, "largest {c}x{r}")?,
                    None => writeln!(out, "largest -")?,
                }
            }
            for w in &man.warnings {
                writeln!(out, "warning {w}")?;
            }
            if let Some(dir) = queue {
                let q = Queue::create(&dir, &man)?;
                if materialize {
                    q.materialize(&man)?;
                }
                writeln!(out, "queue {}", dir.display())?;
            }
        }
        Cmd::Work {
            queue,
            workers,
            faulty,
            w,
        } => {
            let q = Queue::open(&queue)?;
            let exe = std::env::current_exe()?;
            let mut round = 0;
            loop {
                let before = q.status()?;
                if before.pending + before.claimed == 0 {
                    break;
                }
                let mut children = Vec::new();
                for i in 0..workers.max(1) {
                    let mut c = Command::new(&exe);
                    c.arg("worker")
                        .arg("--queue")
                        .arg(&queue)
                        .arg("--name")
                        .arg(format!("r{round}w{i}"))
                        .arg("--backend")
                        .arg(&w.rank.backend)
                        .arg("--primes")
                        .arg(w.rank.primes.to_string())
                        .arg("--seed")
                        .arg(w.rank.seed.to_string())
                        .arg("--tier-scale")
                        .arg(w.tier_scale.to_string());
                    if !w.rank.tolerances.is_empty() {
                        let t: Vec<String> = w.rank.tolerances.iter().map(|t| t.to_string()).collect();
                        c.arg("--tolerances").arg(t.join(","));
                    }
                    if let Some(l) = w.lease_ms {
                        c.arg("--lease-ms").arg(l.to_string());
                    }
                    if round == 0 && i < faulty {
                        if let Some(f) = &w.fault {
                            c.arg("--fault").arg(f);
                        }
                    } else {
                        c.arg("--wait");
                    }
                    c.env_remove("VERONESE_FAULT");
                    children.push(c.spawn()?);
                }
                for mut ch in children {
                    let status = ch.wait()?;
                    if !status.success() {
                        info!("worker exited with {status}");
                    }
                }
                let after = q.status()?;
                if after == before && round > 0 {
                    bail!("no progress: {} pending, {} claimed", after.pending, after.claimed);
                }
                round += 1;
            }
            let s = q.status()?;
            writeln!(out, "done {} failed {}", s.done, s.failed)?;
            if s.failed > 0 {
                for (id, why) in q.failures()? {
                    writeln!(out, "failed {id} {}", why.replace('\n', "; "))?;
                }
                bail!("{} tasks failed", s.failed);
            }
        }
        Cmd::Worker { queue, name, wait, w } => {
            let q = Queue::open(&queue)?;
            let mut cfg = w.config(name)?;
            cfg.wait = wait;
            let rep = q.work(&cfg)?;
            writeln!(
                out,
                "completed {} escalated {} failed {} recovered {}",
                rep.completed.len(),
                rep.escalated.len(),
                rep.failed.len(),
                rep.recovered.len()
            )?;
        }
        Cmd::Aggregate { queue, out: dir } => {
            let q = Queue::open(&queue)?;
            let db = q.aggregate(&dir)?;
            for m in db.modules.values() {
                writeln!(out, "n={} d={} b={}", m.n, m.d, m.b)?;
                writeln!(out, "{}", m.partial_table())?;
            }
        }
        Cmd::Betti { m, red, rank, out: dir, csv } => {
            m.validate()?;
            let (_, db) = jobs::pipeline(m.n, m.b, m.d, &red.options(rank.model()?)?, &rank.config()?)?;
            if let Some(dir) = dir {
                db.save(&dir)?;
            }
            let module = db.module(m.n, m.d, m.b).context("module missing from database")?;
            let t = if red.positions.is_empty() {
                module.total_table()?
            } else {
                module.partial_table()
            };
            if csv {
                write!(out, "{}", t.to_csv())?;
            } else {
                writeln!(out, "{t}")?;
            }
        }
        Cmd::Schur { m, p, q, rank } => {
            m.validate()?;
            let pos = Some([(p, q)].into_iter().collect());
            let module = jobs::multigraded_module(m.n, m.b, m.d, pos, rank.model()?, &rank.config()?)?;
            let dec = jobs::schur_at(&module, p, q)?;
            if !dec.residual_ok {
                bail!("K_{{{p},{q}}} is not a sum of Schur modules; residual {:?}", dec.residual);
            }
            dec.write_to(&mut out)?;
        }
        Cmd::Dominant { m, q, rank } => {
            m.validate()?;
            let module = jobs::multigraded_module(m.n, m.b, m.d, None, rank.model()?, &rank.config()?)?;
            writeln!(out, "p dim distinct with_multiplicity max_multiplicity dominant weights")?;
            for (p, dim, dec) in jobs::schur_row(&module, q)? {
                let dom: Vec<String> = dec.dominant()?.iter().map(|l| l.as_multidegree().dashed()).collect();
                writeln!(
                    out,
                    "{p} {dim} {} {} {} {} {}",
                    dec.distinct(),
                    dec.with_multiplicity(),
                    dec.max_multiplicity(),
                    dom.len(),
                    dom.join(",")
                )?;
            }
        }
        Cmd::Esyz { m, p, q, all } => {
            m.validate()?;
            if all {
                for (w, c) in e_space_weights(p, q, m.b, m.d, m.n)?.iter() {
                    writeln!(out, "{} {c}", w.spaced())?;
                }
            } else {
                for w in e_dominant_weights(p, q, m.b, m.d, m.n)? {
                    writeln!(out, "{}", w.spaced())?;
                }
            }
        }
        Cmd::CheckConj { n, d, b, all_b, rank } => {
            let bs: Vec<u32> = match (b, all_b) {
                (_, true) => (0..d).collect(),
                (Some(b), false) => vec![b],
                (None, false) => bail!("give --b or --all-b"),
            };
            let mut mismatches = 0;
            for b in bs {
                ModuleArgs { n, d, b }.validate()?;
                let module = jobs::multigraded_module(n, b, d, None, rank.model()?, &rank.config()?)?;
                let t = module.total_table()?;
                for q in 0..=t.max_q() {
                    for (p, _, dec) in jobs::schur_row(&module, q)? {
                        let rec = check_dominant_conjecture(b, d, p, q, &dec)?;
                        if rec.verdict != veronese::syzygies::Verdict::Match {
                            mismatches += 1;
                        }
                        writeln!(out, "{rec}")?;
                    }
                }
            }
            if mismatches == 0 {
                writeln!(out, "all match")?;
            } else {
                writeln!(out, "{mismatches} mismatches")?;
            }
        }
        Cmd::Bs { m, src } => {
            let t = table_of(&m, &src)?;
            let dec = bs_decompose(&degree_table(&t))?;
            for (deg, c) in &dec.parts {
                let ds: Vec<String> = deg.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{} {}", ds.join(","), fraction_string(c))?;
            }
        }
        Cmd::Stats { m, q, src } => {
            let t = table_of(&m, &src)?;
            let row = t.row(q, t.width());
            let dist = betti_distribution(&row)?;
            let mo = dist.moments;
            writeln!(out, "offset {}", dist.offset)?;
            writeln!(out, "mean {:.6}", mo.mean)?;
            writeln!(out, "variance {:.6}", mo.variance)?;
            writeln!(out, "skewness {:.6}", mo.skewness)?;
            writeln!(out, "excess_kurtosis {:.6}", mo.excess_kurtosis)?;
            writeln!(out, "unimodal {}", is_unimodal(&row))?;
        }
        Cmd::Qq {
            m,
            q,
            trim_head,
            trim_tail,
            src,
        } => {
            let t = table_of(&m, &src)?;
            let dist = betti_distribution(&t.row(q, t.width()))?;
            for (x, y) in qq_data(&dist, trim_head, trim_tail)? {
                writeln!(out, "{x:.6} {y:.6}")?;
            }
        }
        Cmd::VerifyGolden { d, b, rank } => {
            let tables = veronese::golden::betti_tables()?;
            let mut diffs = 0;
            let mut checked = 0;
            for g in tables.iter().filter(|t| t.d == d && b.is_none_or(|b| b == t.b)) {
                checked += 1;
                let opts = PlanOptions {
                    model: rank.model()?,
                    ..PlanOptions::default()
                };
                let (_, db) = jobs::pipeline(2, g.b, d, &opts, &rank.config()?)?;
                let mine = db.module(2, d, g.b).context("module missing")?.total_table()?;
                for q in 0..=g.max_q().max(mine.max_q()) {
                    for p in 0..g.width().max(mine.width()) {
                        let (x, y) = (mine.get(p, q), g.get(p, q));
                        if x != y {
                            diffs += 1;
                            writeln!(out, "diff b={} p={p} q={q} computed={x} reference={y}", g.b)?;
                        }
                    }
                }
            }
            if checked == 0 {
                bail!("no reference tables for d={d}");
            }
            writeln!(out, "{checked} tables, {diffs} diffs")?;
            if diffs > 0 {
                bail!("{diffs} entries differ from the references");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("VERONESE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
