//! External validity indices: adjusted Rand index and normalized mutual
//! information (arithmetic-mean normalization, natural log).

use crate::error::{Error, Result};

/// Which entropy mean normalizes the mutual information.
pub const NMI_NORMALIZATION: &str = "arithmetic";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ari: f64,
    pub nmi: f64,
    pub n: usize,
}

pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<MetricReport> {
    Ok(MetricReport {
        ari: ari(truth, pred)?,
        nmi: nmi(truth, pred)?,
        n: truth.len(),
    })
}

/// Dense contingency table. Rows follow first appearance in `a`, columns in `b`.
struct Contingency {
    table: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

fn dense_codes(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let codes = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (codes, map.len())
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (ca, ra) = dense_codes(a);
    let (cb, rb) = dense_codes(b);
    let mut table = vec![vec![0u64; rb]; ra];
    let mut rows = vec![0u64; ra];
    let mut cols = vec![0u64; rb];
    for (&i, &j) in ca.iter().zip(&cb) {
        table[i][j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    Ok(Contingency {
        table,
        rows,
        cols,
        n: a.len() as u64,
    })
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index. When the chance-corrected denominator vanishes the
/// result is 1 for identical partitions and 0 otherwise.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let c = contingency(truth, pred)?;
    if c.n < 2 {
        return Err(Error::InvalidParameter("ARI needs at least 2 points".into()));
    }
    let index: f64 = c.table.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let total = comb2(c.n);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        let identical = c.rows.len() == c.cols.len()
            && c.table.iter().all(|r| r.iter().filter(|&&v| v > 0).count() == 1);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok(((index - expected) / denom).clamp(-1.0, 1.0))
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(U; V) / ((H(U) + H(V)) / 2)`. Both entropies zero gives 1; exactly one
/// zero gives 0.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let c = contingency(truth, pred)?;
    if c.n == 0 {
        return Err(Error::EmptyData("NMI of empty label vectors".into()));
    }
    let n = c.n as f64;
    let hu = entropy(&c.rows, n);
    let hv = entropy(&c.cols, n);
    if hu == 0.0 && hv == 0.0 {
        return Ok(1.0);
    }
    if hu == 0.0 || hv == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * ((n * nij) / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
        }
    }
    Ok((mi.max(0.0) / (0.5 * (hu + hv))).clamp(0.0, 1.0))
}
