//! External clustering scores: accuracy under the best one-to-one label
//! matching, normalized mutual information and purity.
//!
//! All three only look at the contingency table, so they are invariant to any
//! relabeling of either argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of samples per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[a][b]`: samples with the a-th distinct predicted id and the b-th distinct true id.
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Argument(format!(
                "label vectors differ in length: {} vs {}",
                pred.len(),
                truth.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::Argument("label vectors are empty".into()));
        }
        let (pred_ids, rows) = dense_ids(pred);
        let (truth_ids, cols) = dense_ids(truth);
        let mut counts = vec![vec![0usize; cols]; rows];
        for (&a, &b) in pred_ids.iter().zip(&truth_ids) {
            counts[a][b] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len(),
        })
    }

    pub fn num_pred(&self) -> usize {
        self.counts.len()
    }

    pub fn num_true(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let ids = labels
        .iter()
        .map(|l| sorted.binary_search(l).unwrap())
        .collect();
    (ids, sorted.len())
}

/// Fraction of samples matched under the best one-to-one cluster/class mapping.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let size = table.num_pred().max(table.num_true());
    let mut gain = vec![vec![0i64; size]; size];
    for (a, row) in table.counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            gain[a][b] = c as i64;
        }
    }
    let matched: i64 = max_weight_assignment(&gain)
        .iter()
        .enumerate()
        .map(|(a, &b)| gain[a][b])
        .sum();
    Ok(matched as f64 / table.n as f64)
}

/// Hungarian method on a square matrix; returns the column assigned to each row.
fn max_weight_assignment(gain: &[Vec<i64>]) -> Vec<usize> {
    let n = gain.len();
    let max = gain.iter().flatten().copied().max().unwrap_or(0);
    // Minimize cost = max - gain with 1-based potentials (row 0 / column 0 are sentinels).
    let cost = |i: usize, j: usize| max - gain[i - 1][j - 1];
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// `I(pred; truth) / sqrt(H(pred) H(truth))`, natural logarithms.
///
/// When either partition has zero entropy the mutual information is zero too;
/// the score is then 1 if both partitions are a single cluster and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.n as f64;
    let row_sums: Vec<f64> = table
        .counts
        .iter()
        .map(|r| r.iter().sum::<usize>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..table.num_true())
        .map(|b| table.counts.iter().map(|r| r[b]).sum::<usize>() as f64)
        .collect();
    let entropy = |sums: &[f64]| -> f64 {
        sums.iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_pred = entropy(&row_sums);
    let h_true = entropy(&col_sums);
    if table.num_pred() == 1 || table.num_true() == 1 {
        return Ok(if table.num_pred() == table.num_true() {
            1.0
        } else {
            0.0
        });
    }
    let mut mi = 0.0;
    for (a, row) in table.counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (row_sums[a] * col_sums[b])).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_true).sqrt()).clamp(0.0, 1.0))
}

/// Share of samples that belong to the majority class of their predicted cluster.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let majority: usize = table
        .counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / table.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Scores> {
    Ok(Scores {
        acc: clustering_accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        purity: purity(pred, truth)?,
    })
}
