//! Sparse Gaussian elimination over F_p with Markowitz pivot choice.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::koszul::SparseSignMatrix;

/// Candidate positions examined per pivot step.
const MARKOWITZ_CANDIDATES: usize = 4;
/// Switch to dense elimination once the active block is this full.
const DENSE_FILL: f64 = 0.15;
/// Largest dense block in entries.
const DENSE_MAX_ENTRIES: u64 = 64 << 20;

#[derive(Clone, Copy, Debug)]
struct Fp(u64);

impl Fp {
    #[inline]
    fn mul(self, a: u32, b: u32) -> u32 {
        (a as u64 * b as u64 % self.0) as u32
    }
    #[inline]
    fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.0 - b as u64) as u32
        }
    }
    fn inv(self, a: u32) -> u32 {
        let (mut t, mut new_t) = (0i64, 1i64);
        let (mut r, mut new_r) = (self.0 as i64, a as i64);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        debug_assert_eq!(r, 1);
        t.rem_euclid(self.0 as i64) as u32
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

/// Outcome of one elimination.
#[derive(Clone, Copy, Debug)]
pub struct Elimination {
    pub rank: usize,
    pub peak_bytes: u64,
}

/// Rank of `m` over F_prime.
pub fn rank_mod(m: &SparseSignMatrix, prime: u64, max_bytes: Option<u64>) -> Result<Elimination> {
    if prime >= 1 << 31 || !is_prime(prime) {
        return Err(Error::BadPrime(prime));
    }
    let f = Fp(prime);
    let minus_one = (prime - 1) as u32;
    let lines: Vec<Vec<(u32, u32)>> = m
        .columns()
        .into_iter()
        .map(|c| c.into_iter().map(|(r, v)| (r, if v > 0 { 1 } else { minus_one })).collect())
        .collect();
    Eliminator::new(lines, m.nrows, f, max_bytes).run()
}

struct Eliminator {
    f: Fp,
    lines: Vec<Vec<(u32, u32)>>,
    line_alive: Vec<bool>,
    pos_lines: Vec<Vec<u32>>,
    pos_count: Vec<u32>,
    pos_alive: Vec<bool>,
    heap: BinaryHeap<Reverse<(u32, u32)>>,
    live_lines: usize,
    live_pos: usize,
    live_nnz: u64,
    index_entries: u64,
    peak_bytes: u64,
    max_bytes: Option<u64>,
    rank: usize,
}

impl Eliminator {
    fn new(lines: Vec<Vec<(u32, u32)>>, npos: usize, f: Fp, max_bytes: Option<u64>) -> Self {
        let mut pos_lines = vec![Vec::new(); npos];
        let mut live_nnz = 0;
        for (i, l) in lines.iter().enumerate() {
            for &(p, _) in l {
                pos_lines[p as usize].push(i as u32);
            }
            live_nnz += l.len() as u64;
        }
        let pos_count: Vec<u32> = pos_lines.iter().map(|v| v.len() as u32).collect();
        let heap = pos_count
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(p, &c)| Reverse((c, p as u32)))
            .collect();
        let live_lines = lines.iter().filter(|l| !l.is_empty()).count();
        let live_pos = pos_count.iter().filter(|&&c| c > 0).count();
        Eliminator {
            f,
            line_alive: lines.iter().map(|l| !l.is_empty()).collect(),
            lines,
            pos_lines,
            pos_alive: pos_count.iter().map(|&c| c > 0).collect(),
            pos_count,
            heap,
            live_lines,
            live_pos,
            index_entries: live_nnz,
            live_nnz,
            peak_bytes: 0,
            max_bytes,
            rank: 0,
        }
    }

    fn account(&mut self, extra: u64) -> Result<()> {
        let bytes = self.live_nnz * 8 + self.index_entries * 4 + extra;
        self.peak_bytes = self.peak_bytes.max(bytes);
        match self.max_bytes {
            Some(limit) if bytes > limit => Err(Error::MemoryLimit { needed: bytes, limit }),
            _ => Ok(()),
        }
    }

    fn run(mut self) -> Result<Elimination> {
        self.account(0)?;
        loop {
            if self.live_lines == 0 || self.live_pos == 0 {
                break;
            }
            let block = self.live_lines as u64 * self.live_pos as u64;
            if block <= DENSE_MAX_ENTRIES && self.live_nnz as f64 >= DENSE_FILL * block as f64 {
                self.finish_dense()?;
                break;
            }
            let Some((pos, line)) = self.choose_pivot() else {
                break;
            };
            self.eliminate(pos, line)?;
        }
        Ok(Elimination {
            rank: self.rank,
            peak_bytes: self.peak_bytes,
        })
    }

    /// Live lines holding `pos`; prunes stale index entries.
    fn lines_at(&mut self, pos: u32) -> Vec<u32> {
        let lines = &self.lines;
        let alive = &self.line_alive;
        let before = self.pos_lines[pos as usize].len();
        self.pos_lines[pos as usize].retain(|&i| {
            alive[i as usize] && lines[i as usize].binary_search_by_key(&pos, |e| e.0).is_ok()
        });
        self.pos_lines[pos as usize].sort_unstable();
        self.pos_lines[pos as usize].dedup();
        self.index_entries -= (before - self.pos_lines[pos as usize].len()) as u64;
        self.pos_lines[pos as usize].clone()
    }

    fn choose_pivot(&mut self) -> Option<(u32, u32)> {
        let mut popped = Vec::new();
        let mut best: Option<(u64, u32, u32)> = None;
        while popped.len() < MARKOWITZ_CANDIDATES {
            let Some(Reverse((c, pos))) = self.heap.pop() else {
                break;
            };
            if !self.pos_alive[pos as usize] || self.pos_count[pos as usize] != c || c == 0 {
                continue;
            }
            popped.push((c, pos));
            let lines = self.lines_at(pos);
            debug_assert_eq!(lines.len() as u32, c);
            // Lowest index wins ties.
            let &line = lines
                .iter()
                .min_by_key(|&&i| (self.lines[i as usize].len(), i))
                .expect("count > 0");
            let cost = (c as u64 - 1) * (self.lines[line as usize].len() as u64 - 1);
            if best.is_none_or(|(bc, bp, _)| (cost, pos) < (bc, bp)) {
                best = Some((cost, pos, line));
            }
            if cost == 0 {
                break;
            }
        }
        for (c, pos) in popped {
            if Some(pos) != best.map(|b| b.1) {
                self.heap.push(Reverse((c, pos)));
            }
        }
        best.map(|(_, pos, line)| (pos, line))
    }

    fn eliminate(&mut self, pos: u32, piv: u32) -> Result<()> {
        let f = self.f;
        let pivot_line = std::mem::take(&mut self.lines[piv as usize]);
        let pv = pivot_line[pivot_line.binary_search_by_key(&pos, |e| e.0).expect("pivot entry")].1;
        let inv = f.inv(pv);
        let others: Vec<u32> = self.lines_at(pos).into_iter().filter(|&i| i != piv).collect();
        let mut touched: Vec<u32> = Vec::new();
        for i in others {
            let old = std::mem::take(&mut self.lines[i as usize]);
            let lv = old[old.binary_search_by_key(&pos, |e| e.0).expect("entry")].1;
            let factor = f.mul(lv, inv);
            let mut merged = Vec::with_capacity(old.len() + pivot_line.len());
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < pivot_line.len() {
                let pa = old.get(a).map(|e| e.0).unwrap_or(u32::MAX);
                let pb = pivot_line.get(b).map(|e| e.0).unwrap_or(u32::MAX);
                if pa < pb {
                    merged.push(old[a]);
                    a += 1;
                } else if pb < pa {
                    let v = f.sub(0, f.mul(factor, pivot_line[b].1));
                    if v != 0 {
                        merged.push((pb, v));
                        self.pos_count[pb as usize] += 1;
                        self.pos_lines[pb as usize].push(i);
                        self.index_entries += 1;
                        touched.push(pb);
                    }
                    b += 1;
                } else {
                    let v = f.sub(old[a].1, f.mul(factor, pivot_line[b].1));
                    if v != 0 {
                        merged.push((pa, v));
                    } else {
                        self.pos_count[pa as usize] -= 1;
                        touched.push(pa);
                    }
                    a += 1;
                    b += 1;
                }
            }
            self.live_nnz = self.live_nnz + merged.len() as u64 - old.len() as u64;
            if merged.is_empty() {
                self.line_alive[i as usize] = false;
                self.live_lines -= 1;
            }
            self.lines[i as usize] = merged;
        }
        for &(p, _) in &pivot_line {
            if p != pos {
                self.pos_count[p as usize] -= 1;
                touched.push(p);
            }
        }
        self.live_nnz -= pivot_line.len() as u64;
        self.line_alive[piv as usize] = false;
        self.live_lines -= 1;
        self.pos_alive[pos as usize] = false;
        self.pos_count[pos as usize] = 0;
        self.live_pos -= 1;
        self.rank += 1;
        touched.sort_unstable();
        touched.dedup();
        for p in touched {
            if !self.pos_alive[p as usize] {
                continue;
            }
            let c = self.pos_count[p as usize];
            if c == 0 {
                self.pos_alive[p as usize] = false;
                self.live_pos -= 1;
            } else {
                self.heap.push(Reverse((c, p)));
            }
        }
        self.account(0)
    }

    fn finish_dense(&mut self) -> Result<()> {
        let f = self.f;
        let p = f.0;
        let positions: Vec<u32> = (0..self.pos_alive.len() as u32)
            .filter(|&i| self.pos_alive[i as usize])
            .collect();
        let mut col_of = vec![u32::MAX; self.pos_alive.len()];
        for (k, &pos) in positions.iter().enumerate() {
            col_of[pos as usize] = k as u32;
        }
        let width = positions.len();
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(self.live_lines);
        self.account(self.live_lines as u64 * width as u64 * 4)?;
        for (i, l) in self.lines.iter().enumerate() {
            if !self.line_alive[i] {
                continue;
            }
            let mut row = vec![0u32; width];
            for &(pos, v) in l {
                row[col_of[pos as usize] as usize] = v;
            }
            rows.push(row);
        }
        let mut r = 0;
        for c in 0..width {
            let Some(k) = (r..rows.len()).find(|&k| rows[k][c] != 0) else {
                continue;
            };
            rows.swap(r, k);
            let inv = f.inv(rows[r][c]) as u64;
            for x in rows[r][c..].iter_mut() {
                *x = (*x as u64 * inv % p) as u32;
            }
            let (top, bottom) = rows.split_at_mut(r + 1);
            let pivot = &top[r];
            for row in bottom.iter_mut() {
                let factor = row[c] as u64;
                if factor == 0 {
                    continue;
                }
                let neg = p - factor;
                for (x, &y) in row[c..].iter_mut().zip(&pivot[c..]) {
                    *x = ((*x as u64 + neg * y as u64) % p) as u32;
                }
            }
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        self.rank += r;
        Ok(())
    }
}
