//! Reference data shipped with the crate and the parsers for it.

use std::collections::BTreeMap;

use crate::betti::BettiTable;
use crate::error::{Error, Result};
use crate::hilbert::VanishingTable;
use crate::monomial::Multidegree;

const BETTI: &[(u32, &str)] = &[
    (3, include_str!("../golden/betti_n2_d3.txt")),
    (4, include_str!("../golden/betti_n2_d4.txt")),
    (5, include_str!("../golden/betti_n2_d5.txt")),
];

/// (b, p, q, contents) for S(b;5) on P^2.
const SCHUR: &[(u32, usize, u32, &str)] = &[
    (0, 14, 1, include_str!("../golden/schur_n2_d5_b0_p14_q1.txt")),
    (0, 15, 1, include_str!("../golden/schur_n2_d5_b0_p15_q1.txt")),
    (0, 13, 2, include_str!("../golden/schur_n2_d5_b0_p13_q2.txt")),
    (0, 14, 2, include_str!("../golden/schur_n2_d5_b0_p14_q2.txt")),
    (3, 4, 1, include_str!("../golden/schur_n2_d5_b3_p4_q1.txt")),
    (3, 5, 1, include_str!("../golden/schur_n2_d5_b3_p5_q1.txt")),
    (3, 6, 1, include_str!("../golden/schur_n2_d5_b3_p6_q1.txt")),
    (3, 7, 1, include_str!("../golden/schur_n2_d5_b3_p7_q1.txt")),
    (3, 8, 1, include_str!("../golden/schur_n2_d5_b3_p8_q1.txt")),
    (3, 5, 0, include_str!("../golden/schur_n2_d5_b3_p5_q0.txt")),
    (3, 6, 0, include_str!("../golden/schur_n2_d5_b3_p6_q0.txt")),
    (3, 7, 0, include_str!("../golden/schur_n2_d5_b3_p7_q0.txt")),
    (3, 8, 0, include_str!("../golden/schur_n2_d5_b3_p8_q0.txt")),
    (3, 9, 0, include_str!("../golden/schur_n2_d5_b3_p9_q0.txt")),
];

const HS_K11_B0_D3: &str = include_str!("../golden/hs_n2_d3_b0_p1_q1.txt");
const MATRIX_COUNTS: &str = include_str!("../golden/matrix_counts.txt");
const FIGURE_ROW1: &str = include_str!("../golden/figure_row1_b0.txt");
const FIGURE_COUNTS: &str = include_str!("../golden/figure_counts_n2_d5_b2_q1.txt");
const BOIJ_SODERBERG: &str = include_str!("../golden/bs_n2_d5_b3.txt");

fn err(name: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        source_name: name.into(),
        line,
        reason: reason.into(),
    }
}

/// Non-comment lines split on whitespace, with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
}

fn num<T: std::str::FromStr>(name: &str, line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| err(name, line, format!("bad number {tok:?}")))
}

/// Parses `[b=K]` blocks of whitespace-separated rows, `.` for zero.
pub fn parse_betti_tables(d: u32, name: &str, text: &str) -> Result<Vec<BettiTable>> {
    let mut out = Vec::new();
    let mut current: Option<(u32, Vec<Vec<u64>>)> = None;
    for (line, toks) in records(text) {
        if let Some(rest) = toks[0].strip_prefix("[b=") {
            if let Some((b, rows)) = current.take() {
                out.push(BettiTable::from_rows(b, d, &rows));
            }
            let b = num(name, line, rest.trim_end_matches(']'))?;
            current = Some((b, Vec::new()));
            continue;
        }
        let (_, rows) = current.as_mut().ok_or_else(|| err(name, line, "row before a [b=] header"))?;
        let row = toks
            .iter()
            .map(|t| if *t == "." { Ok(0) } else { num(name, line, t) })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(row);
    }
    if let Some((b, rows)) = current {
        out.push(BettiTable::from_rows(b, d, &rows));
    }
    Ok(out)
}

/// Every reference Betti table on P^2.
pub fn betti_tables() -> Result<Vec<BettiTable>> {
    let mut out = Vec::new();
    for &(d, text) in BETTI {
        out.extend(parse_betti_tables(d, &format!("betti_n2_d{d}"), text)?);
    }
    Ok(out)
}

pub fn betti_table(b: u32, d: u32) -> Result<Option<BettiTable>> {
    Ok(betti_tables()?.into_iter().find(|t| t.b == b && t.d == d))
}

/// Parses `l0 l1 l2 mult` lines.
pub fn parse_schur_list(name: &str, text: &str) -> Result<Vec<(Multidegree, u64)>> {
    records(text)
        .map(|(line, toks)| {
            let (mult, parts) = toks.split_last().ok_or_else(|| err(name, line, "empty"))?;
            let parts = parts.iter().map(|t| num(name, line, t)).collect::<Result<Vec<u32>>>()?;
            Ok((Multidegree(parts), num(name, line, mult)?))
        })
        .collect()
}

/// Positions (b, p, q) of S(b;5) with a reference decomposition.
pub fn schur_positions() -> Vec<(u32, usize, u32)> {
    SCHUR.iter().map(|&(b, p, q, _)| (b, p, q)).collect()
}

pub fn schur_list(b: u32, p: usize, q: u32) -> Result<Option<Vec<(Multidegree, u64)>>> {
    SCHUR
        .iter()
        .find(|e| (e.0, e.1, e.2) == (b, p, q))
        .map(|e| parse_schur_list(&format!("schur_n2_d5_b{b}_p{p}_q{q}"), e.3))
        .transpose()
}

/// Terms of the multigraded Hilbert series of K_{1,1}(0;3).
pub fn hs_k11_b0_d3() -> Result<BTreeMap<Multidegree, i64>> {
    let name = "hs_n2_d3_b0_p1_q1";
    records(HS_K11_B0_D3)
        .map(|(line, toks)| {
            if toks.len() != 4 {
                return Err(err(name, line, "expected four fields"));
            }
            let a = toks[..3].iter().map(|t| num(name, line, t)).collect::<Result<Vec<u32>>>()?;
            Ok((Multidegree(a), num(name, line, toks[3])?))
        })
        .collect()
}

/// One published row of rank-computation counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixCount {
    pub d: u32,
    pub b: u32,
    pub count: u64,
    /// (columns, rows) of the largest matrix.
    pub largest: Option<(u64, u64)>,
}

pub fn matrix_counts() -> Result<Vec<MatrixCount>> {
    let name = "matrix_counts";
    records(MATRIX_COUNTS)
        .map(|(line, t)| {
            if t.len() != 4 {
                return Err(err(name, line, "expected four fields"));
            }
            let largest = if t[3] == "-" {
                None
            } else {
                let (c, r) = t[3].split_once('x').ok_or_else(|| err(name, line, "bad size"))?;
                Some((num(name, line, c)?, num(name, line, r)?))
            };
            Ok(MatrixCount {
                d: num(name, line, t[0])?,
                b: num(name, line, t[1])?,
                count: num(name, line, t[2])?,
                largest,
            })
        })
        .collect()
}

/// (d, p, ordinate) with ordinate = dim K_{p,1}(0;d) / 10^4.
pub fn figure_row1() -> Result<Vec<(u32, usize, f64)>> {
    let name = "figure_row1_b0";
    records(FIGURE_ROW1)
        .map(|(line, t)| {
            if t.len() != 3 {
                return Err(err(name, line, "expected three fields"));
            }
            Ok((num(name, line, t[0])?, num(name, line, t[1])?, num(name, line, t[2])?))
        })
        .collect()
}

/// (p, Schur count / 100, dominant weight count) for K_{p,1}(2;5).
pub fn figure_counts() -> Result<Vec<(usize, f64, usize)>> {
    let name = "figure_counts_n2_d5_b2_q1";
    records(FIGURE_COUNTS)
        .map(|(line, t)| {
            if t.len() != 3 {
                return Err(err(name, line, "expected three fields"));
            }
            Ok((num(name, line, t[0])?, num(name, line, t[1])?, num(name, line, t[2])?))
        })
        .collect()
}

/// Reference Boij-Söderberg data for S(3;5): the exact first coefficient and all seven scaled by 1e-16.
pub fn boij_soderberg_b3_d5() -> Result<(u64, Vec<f64>)> {
    let name = "bs_n2_d5_b3";
    let (mut first, mut scaled) = (None, None);
    for (line, t) in records(BOIJ_SODERBERG) {
        match t[0] {
            "first" if t.len() == 2 => first = Some(num(name, line, t[1])?),
            "scaled" => {
                scaled = Some(t[1..].iter().map(|x| num(name, line, x)).collect::<Result<Vec<f64>>>()?)
            }
            other => return Err(err(name, line, format!("unexpected record {other}"))),
        }
    }
    match (first, scaled) {
        (Some(f), Some(s)) => Ok((f, s)),
        _ => Err(err(name, 0, "missing record")),
    }
}

/// Checks the closed-form vanishing tables against the support of every reference table.
pub fn validate_vanishing_tables() -> Result<()> {
    for t in betti_tables()? {
        VanishingTable::p2(t.b, t.d)?.check(&t)?;
    }
    Ok(())
}
