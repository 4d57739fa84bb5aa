//! Threshold-pivoted sparse LU in f64; reports |U_kk| for every pivot taken.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::koszul::SparseSignMatrix;

/// Entries below this magnitude are treated as exact cancellation.
const DROP: f64 = 1e-14;
/// A pivot must be at least this fraction of the largest entry at its position.
const THRESHOLD: f64 = 0.1;
const MARKOWITZ_CANDIDATES: usize = 4;
const DENSE_FILL: f64 = 0.15;
const DENSE_MAX_ENTRIES: u64 = 32 << 20;

pub struct Factorization {
    /// Magnitudes of the diagonal of U, in elimination order.
    pub pivots: Vec<f64>,
    pub peak_bytes: u64,
}

impl Factorization {
    pub fn rank_at(&self, tol: f64) -> usize {
        self.pivots.iter().filter(|&&u| u > tol).count()
    }
}

pub fn factor(m: &SparseSignMatrix, max_bytes: Option<u64>) -> Result<Factorization> {
    let lines: Vec<Vec<(u32, f64)>> = m
        .columns()
        .into_iter()
        .map(|c| c.into_iter().map(|(r, v)| (r, v as f64)).collect())
        .collect();
    factor_columns(lines, m.nrows, max_bytes)
}

/// Factors a real matrix given as columns of (row, value), rows sorted within each column.
pub fn factor_columns(
    columns: Vec<Vec<(u32, f64)>>,
    nrows: usize,
    max_bytes: Option<u64>,
) -> Result<Factorization> {
    let lines = columns
        .into_iter()
        .map(|c| c.into_iter().filter(|e| e.1 != 0.0).collect())
        .collect();
    let mut lu = Lu::new(lines, nrows, max_bytes);
    lu.run()?;
    Ok(Factorization {
        pivots: lu.pivots,
        peak_bytes: lu.peak_bytes,
    })
}

struct Lu {
    lines: Vec<Vec<(u32, f64)>>,
    line_alive: Vec<bool>,
    pos_lines: Vec<Vec<u32>>,
    pos_count: Vec<u32>,
    pos_alive: Vec<bool>,
    heap: BinaryHeap<Reverse<(u32, u32)>>,
    live_lines: usize,
    live_pos: usize,
    live_nnz: u64,
    peak_bytes: u64,
    max_bytes: Option<u64>,
    pivots: Vec<f64>,
}

impl Lu {
    fn new(lines: Vec<Vec<(u32, f64)>>, npos: usize, max_bytes: Option<u64>) -> Self {
        let mut pos_lines = vec![Vec::new(); npos];
        let mut live_nnz = 0;
        for (i, l) in lines.iter().enumerate() {
            for &(p, _) in l {
                pos_lines[p as usize].push(i as u32);
            }
            live_nnz += l.len() as u64;
        }
        let pos_count: Vec<u32> = pos_lines.iter().map(|v| v.len() as u32).collect();
        Lu {
            heap: pos_count
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(p, &c)| Reverse((c, p as u32)))
                .collect(),
            live_lines: lines.iter().filter(|l| !l.is_empty()).count(),
            live_pos: pos_count.iter().filter(|&&c| c > 0).count(),
            line_alive: lines.iter().map(|l| !l.is_empty()).collect(),
            pos_alive: pos_count.iter().map(|&c| c > 0).collect(),
            lines,
            pos_lines,
            pos_count,
            live_nnz,
            peak_bytes: 0,
            max_bytes,
            pivots: Vec::new(),
        }
    }

    fn account(&mut self, extra: u64) -> Result<()> {
        let index: u64 = self.pos_lines.iter().map(|v| v.len() as u64).sum::<u64>() * 4;
        let bytes = self.live_nnz * 12 + index + extra;
        self.peak_bytes = self.peak_bytes.max(bytes);
        match self.max_bytes {
            Some(limit) if bytes > limit => Err(Error::MemoryLimit { needed: bytes, limit }),
            _ => Ok(()),
        }
    }

    fn run(&mut self) -> Result<()> {
        self.account(0)?;
        let mut step = 0u64;
        while self.live_lines > 0 && self.live_pos > 0 {
            let block = self.live_lines as u64 * self.live_pos as u64;
            if block <= DENSE_MAX_ENTRIES && self.live_nnz as f64 >= DENSE_FILL * block as f64 {
                return self.finish_dense();
            }
            let Some((pos, line)) = self.choose_pivot() else {
                break;
            };
            self.eliminate(pos, line);
            step += 1;
            if step.is_multiple_of(256) {
                self.account(0)?;
            }
        }
        self.account(0)
    }

    fn lines_at(&mut self, pos: u32) -> Vec<u32> {
        let lines = &self.lines;
        let alive = &self.line_alive;
        let v = &mut self.pos_lines[pos as usize];
        v.retain(|&i| alive[i as usize] && lines[i as usize].binary_search_by_key(&pos, |e| e.0).is_ok());
        v.sort_unstable();
        v.dedup();
        v.clone()
    }

    fn value_at(&self, line: u32, pos: u32) -> f64 {
        let l = &self.lines[line as usize];
        l[l.binary_search_by_key(&pos, |e| e.0).expect("entry")].1
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
            let vals: Vec<f64> = lines.iter().map(|&i| self.value_at(i, pos).abs()).collect();
            let big = vals.iter().cloned().fold(0.0, f64::max);
            let line = lines
                .iter()
                .zip(&vals)
                .filter(|(_, &v)| v >= THRESHOLD * big)
                .map(|(&i, _)| i)
                .min_by_key(|&i| (self.lines[i as usize].len(), i))
                .expect("nonempty position");
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

    fn eliminate(&mut self, pos: u32, piv: u32) {
        let pivot_line = std::mem::take(&mut self.lines[piv as usize]);
        let pv = pivot_line[pivot_line.binary_search_by_key(&pos, |e| e.0).expect("pivot")].1;
        self.pivots.push(pv.abs());
        let others: Vec<u32> = self.lines_at(pos).into_iter().filter(|&i| i != piv).collect();
        let mut touched = Vec::new();
        for i in others {
            let old = std::mem::take(&mut self.lines[i as usize]);
            let factor = old[old.binary_search_by_key(&pos, |e| e.0).expect("entry")].1 / pv;
            let mut merged = Vec::with_capacity(old.len() + pivot_line.len());
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < pivot_line.len() {
                let pa = old.get(a).map(|e| e.0).unwrap_or(u32::MAX);
                let pb = pivot_line.get(b).map(|e| e.0).unwrap_or(u32::MAX);
                if pa < pb {
                    merged.push(old[a]);
                    a += 1;
                } else if pb < pa {
                    let v = -factor * pivot_line[b].1;
                    if v.abs() > DROP {
                        merged.push((pb, v));
                        self.pos_count[pb as usize] += 1;
                        self.pos_lines[pb as usize].push(i);
                        touched.push(pb);
                    }
                    b += 1;
                } else {
                    let v = if pa == pos { 0.0 } else { old[a].1 - factor * pivot_line[b].1 };
                    if v.abs() > DROP {
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
    }

    /// Complete pivoting on the remaining block.
    fn finish_dense(&mut self) -> Result<()> {
        let positions: Vec<usize> = (0..self.pos_alive.len()).filter(|&i| self.pos_alive[i]).collect();
        let mut col_of = vec![usize::MAX; self.pos_alive.len()];
        for (k, &p) in positions.iter().enumerate() {
            col_of[p] = k;
        }
        let width = positions.len();
        self.account(self.live_lines as u64 * width as u64 * 8)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, l) in self.lines.iter().enumerate() {
            if self.line_alive[i] {
                let mut row = vec![0.0; width];
                for &(p, v) in l {
                    row[col_of[p as usize]] = v;
                }
                rows.push(row);
            }
        }
        let mut cols: Vec<usize> = (0..width).collect();
        let steps = rows.len().min(width);
        for k in 0..steps {
            let (mut bi, mut bj, mut bv) = (k, k, 0.0);
            for (i, row) in rows.iter().enumerate().skip(k) {
                for (j, &c) in cols.iter().enumerate().skip(k) {
                    if row[c].abs() > bv {
                        (bi, bj, bv) = (i, j, row[c].abs());
                    }
                }
            }
            if bv <= DROP {
                break;
            }
            rows.swap(k, bi);
            cols.swap(k, bj);
            let c = cols[k];
            let pv = rows[k][c];
            self.pivots.push(pv.abs());
            let (top, bottom) = rows.split_at_mut(k + 1);
            let pivot = &top[k];
            for row in bottom.iter_mut() {
                let factor = row[c] / pv;
                if factor == 0.0 {
                    continue;
                }
                for &cc in &cols[k..] {
                    row[cc] -= factor * pivot[cc];
                }
            }
        }
        Ok(())
    }
}
