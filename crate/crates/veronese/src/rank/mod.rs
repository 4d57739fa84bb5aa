//! Matrix ranks: exact over random prime fields, or numerical via pivoted LU.

pub mod float;
pub mod prime;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::koszul::SparseSignMatrix;

pub use prime::is_prime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankMethod {
    PrimeField,
    FloatLu,
}

impl RankMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::PrimeField => "prime_field",
            RankMethod::FloatLu => "float_lu",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RankMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prime_field" => Ok(RankMethod::PrimeField),
            "float_lu" => Ok(RankMethod::FloatLu),
            _ => Err(Error::InvalidArgument(format!("unknown rank method {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankResult {
    pub rank: usize,
    pub method: RankMethod,
    /// Prime and the rank it gave, for prime-field runs.
    pub primes_used: Vec<(u64, usize)>,
    /// Tolerance and the rank it gave, for float runs.
    pub tolerances_used: Vec<(f64, usize)>,
    pub agreement: bool,
    pub elapsed_ms: u64,
    pub peak_mem_bytes: u64,
}

/// Rank over each prime; the result is the maximum.
pub fn rank_prime_field(m: &SparseSignMatrix, primes: &[u64]) -> Result<RankResult> {
    rank_prime_field_limited(m, primes, None)
}

pub fn rank_prime_field_limited(
    m: &SparseSignMatrix,
    primes: &[u64],
    max_bytes: Option<u64>,
) -> Result<RankResult> {
    let start = Instant::now();
    let mut seen = primes.to_vec();
    seen.sort_unstable();
    if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("prime {} listed twice", w[0])));
    }
    if let Some(&bad) = primes.iter().find(|&&p| p >= 1 << 31 || !is_prime(p)) {
        return Err(Error::BadPrime(bad));
    }
    if primes.is_empty() {
        return Err(Error::InvalidArgument("no primes given".into()));
    }
    let mut used = Vec::with_capacity(primes.len());
    let mut peak = 0;
    for &p in primes {
        let e = prime::rank_mod(m, p, max_bytes)?;
        peak = peak.max(e.peak_bytes);
        used.push((p, e.rank));
    }
    let rank = used.iter().map(|u| u.1).max().unwrap_or(0);
    Ok(RankResult {
        rank,
        method: RankMethod::PrimeField,
        agreement: used.iter().all(|u| u.1 == rank),
        primes_used: used,
        tolerances_used: Vec::new(),
        elapsed_ms: start.elapsed().as_millis() as u64,
        peak_mem_bytes: peak,
    })
}

/// Numerical rank at each tolerance; the result is the most frequent value.
pub fn rank_float_lu(m: &SparseSignMatrix, tolerances: &[f64]) -> Result<RankResult> {
    rank_float_lu_limited(m, tolerances, None)
}

pub fn rank_float_lu_limited(
    m: &SparseSignMatrix,
    tolerances: &[f64],
    max_bytes: Option<u64>,
) -> Result<RankResult> {
    let start = Instant::now();
    check_tolerances(tolerances)?;
    let f = float::factor(m, max_bytes)?;
    Ok(plateau(&f, tolerances, start))
}

/// Float rank of a real matrix given by (row, col, value) entries.
pub fn rank_float_lu_real(
    nrows: usize,
    ncols: usize,
    entries: &[(u32, u32, f64)],
    tolerances: &[f64],
) -> Result<RankResult> {
    let start = Instant::now();
    check_tolerances(tolerances)?;
    let mut cols = vec![Vec::new(); ncols];
    for &(r, c, v) in entries {
        if r as usize >= nrows || c as usize >= ncols || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("bad entry ({r},{c},{v})")));
        }
        cols[c as usize].push((r, v));
    }
    for c in &mut cols {
        c.sort_by_key(|e| e.0);
    }
    let f = float::factor_columns(cols, nrows, None)?;
    Ok(plateau(&f, tolerances, start))
}

fn check_tolerances(tolerances: &[f64]) -> Result<()> {
    if tolerances.is_empty() {
        return Err(Error::InvalidArgument("no tolerances given".into()));
    }
    if let Some(&t) = tolerances.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::BadTolerance(t));
    }
    if tolerances.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("tolerances must be strictly ascending".into()));
    }
    Ok(())
}

/// Ties between equally frequent ranks go to the one seen at the largest tolerance.
fn plateau(f: &float::Factorization, tolerances: &[f64], start: Instant) -> RankResult {
    let used: Vec<(f64, usize)> = tolerances.iter().map(|&t| (t, f.rank_at(t))).collect();
    let mut freq: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, &(_, r)) in used.iter().enumerate() {
        let e = freq.entry(r).or_insert((0, 0));
        e.0 += 1;
        e.1 = i;
    }
    let rank = freq
        .iter()
        .max_by_key(|(_, &(count, last))| (count, last))
        .map(|(&r, _)| r)
        .unwrap_or(0);
    RankResult {
        rank,
        method: RankMethod::FloatLu,
        primes_used: Vec::new(),
        agreement: freq.len() <= 1,
        tolerances_used: used,
        elapsed_ms: start.elapsed().as_millis() as u64,
        peak_mem_bytes: f.peak_bytes,
    }
}

pub fn kernel_dim(m: &SparseSignMatrix, r: &RankResult) -> usize {
    m.ncols - r.rank
}

pub const DEFAULT_TOLERANCES: [f64; 4] = [1e-12, 1e-10, 1e-8, 1e-6];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Prime,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prime" => Ok(Backend::Prime),
            "float" => Ok(Backend::Float),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankConfig {
    pub backend: Backend,
    pub primes: usize,
    pub seed: u64,
    pub tolerances: Vec<f64>,
    pub max_bytes: Option<u64>,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            backend: Backend::Prime,
            primes: 3,
            seed: 0x5eed,
            tolerances: DEFAULT_TOLERANCES.to_vec(),
            max_bytes: None,
        }
    }
}

/// `count` distinct primes in [2^29, 2^30), reproducible from `seed`.
pub fn random_primes(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<u64> = Vec::with_capacity(count);
    while out.len() < count {
        let c = rng.gen_range((1u64 << 29)..(1u64 << 30)) | 1;
        if is_prime(c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Two extra primes are tried when the first batch disagrees.
const ESCALATION_PRIMES: usize = 2;

/// Rank under the configured backend and prime policy.
pub fn compute_rank(m: &SparseSignMatrix, cfg: &RankConfig) -> Result<RankResult> {
    match cfg.backend {
        Backend::Float => rank_float_lu_limited(m, &cfg.tolerances, cfg.max_bytes),
        Backend::Prime => {
            let all = random_primes(cfg.seed, cfg.primes + ESCALATION_PRIMES);
            let first = rank_prime_field_limited(m, &all[..cfg.primes], cfg.max_bytes)?;
            if first.agreement {
                return Ok(first);
            }
            let extra = rank_prime_field_limited(m, &all[cfg.primes..], cfg.max_bytes)?;
            let rank = first.rank.max(extra.rank);
            let mut used = first.primes_used.clone();
            used.extend(extra.primes_used.iter().copied());
            if extra.primes_used.iter().any(|u| u.1 != rank) {
                return Err(Error::RankDisagreement(used));
            }
            Ok(RankResult {
                rank,
                agreement: false,
                primes_used: used,
                elapsed_ms: first.elapsed_ms + extra.elapsed_ms,
                peak_mem_bytes: first.peak_mem_bytes.max(extra.peak_mem_bytes),
                ..first
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_identity(n: usize) -> SparseSignMatrix {
        SparseSignMatrix::from_triplets(
            n,
            n,
            (0..n as u32).map(|i| (i, i, if i % 2 == 0 { 1 } else { -1 })).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_rank() {
        let m = signed_identity(5);
        let r = rank_prime_field(&m, &random_primes(1, 3)).unwrap();
        assert_eq!(r.rank, 5);
        assert!(r.agreement);
        assert_eq!(rank_float_lu(&m, &DEFAULT_TOLERANCES).unwrap().rank, 5);
    }

    #[test]
    fn empty_and_zero_matrices() {
        let primes = random_primes(2, 3);
        assert_eq!(rank_prime_field(&SparseSignMatrix::zero(0, 0), &primes).unwrap().rank, 0);
        let z = SparseSignMatrix::zero(4, 7);
        let r = rank_prime_field(&z, &primes).unwrap();
        assert_eq!(kernel_dim(&z, &r), 7);
    }

    #[test]
    fn bad_primes_rejected() {
        let m = signed_identity(2);
        assert!(matches!(rank_prime_field(&m, &[1]), Err(Error::BadPrime(1))));
        assert!(matches!(rank_prime_field(&m, &[9]), Err(Error::BadPrime(9))));
        assert!(rank_prime_field(&m, &[1_000_003, 1_000_003]).is_err());
    }

    #[test]
    fn tiny_diagonal_entry_is_below_tolerance() {
        let r = rank_float_lu_real(2, 2, &[(0, 0, 1.0), (1, 1, 1e-14)], &[1e-8]).unwrap();
        assert_eq!(r.rank, 1);
        assert!(rank_float_lu_real(2, 2, &[(0, 0, 1.0)], &[0.0]).is_err());
        assert!(rank_float_lu_real(2, 2, &[(0, 0, 1.0)], &[1e-6, 1e-8]).is_err());
    }

    #[test]
    fn plateau_is_the_mode() {
        let r = rank_float_lu_real(
            3,
            3,
            &[(0, 0, 1.0), (1, 1, 1e-9), (2, 2, 1e-7)],
            &[1e-12, 1e-10, 1e-8, 1e-6],
        )
        .unwrap();
        let ranks: Vec<usize> = r.tolerances_used.iter().map(|t| t.1).collect();
        assert_eq!(ranks, vec![3, 3, 2, 1]);
        assert_eq!(r.rank, 3);
        assert!(!r.agreement);
    }

    #[test]
    fn seeded_primes_are_reproducible() {
        let a = random_primes(7, 5);
        assert_eq!(a, random_primes(7, 5));
        assert!(a.iter().all(|&p| is_prime(p) && p > 1 << 29 && p < 1 << 30));
        assert_ne!(a, random_primes(8, 5));
    }

    #[test]
    fn memory_ceiling_is_enforced() {
        let m = signed_identity(10);
        let cfg = RankConfig {
            max_bytes: Some(1),
            ..RankConfig::default()
        };
        assert!(matches!(compute_rank(&m, &cfg), Err(Error::MemoryLimit { .. })));
    }
}
