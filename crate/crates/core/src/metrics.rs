//! External clustering metrics: V-measure, adjusted Rand index, and adjusted
//! mutual information (max-entropy normalisation).
//!
//! Noise labels (`-1`) are excluded item-wise by default; an item is dropped
//! if either labelling marks it as noise. [`NoiseHandling::AsCluster`] keeps
//! noise as one ordinary cluster instead.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DpsmError, Result};
use crate::merge::NOISE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseHandling {
    #[default]
    Exclude,
    AsCluster,
}

/// Counts of items per (true class, predicted cluster).
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    total: usize,
    excluded: usize,
}

impl ContingencyTable {
    pub fn new(truth: &[i64], pred: &[i64], noise: NoiseHandling) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(DpsmError::LengthMismatch { left: truth.len(), right: pred.len() });
        }
        let mut rows = BTreeMap::new();
        let mut cols = BTreeMap::new();
        let mut pairs = Vec::with_capacity(truth.len());
        for (&t, &p) in truth.iter().zip(pred) {
            if noise == NoiseHandling::Exclude && (t == NOISE || p == NOISE) {
                continue;
            }
            let next = rows.len();
            let i = *rows.entry(t).or_insert(next);
            let next = cols.len();
            let j = *cols.entry(p).or_insert(next);
            pairs.push((i, j));
        }
        if pairs.is_empty() {
            return Err(DpsmError::UndefinedMetric);
        }
        let mut counts = vec![vec![0; cols.len()]; rows.len()];
        for &(i, j) in &pairs {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols.len()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { counts, row_sums, col_sums, total: pairs.len(), excluded: truth.len() - pairs.len() })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Items left out because of noise labels.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(j, &c)| (i, j, c)))
    }

    /// Same partition up to renaming: every row and column has one non-zero cell.
    pub fn is_identity(&self) -> bool {
        self.row_sums.len() == self.col_sums.len() && self.cells().count() == self.row_sums.len()
    }

    fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        self.cells()
            .map(|(i, j, c)| {
                let c = c as f64;
                c / n * (n * c / (self.row_sums[i] as f64 * self.col_sums[j] as f64)).ln()
            })
            .sum()
    }
}

fn entropy(sizes: &[usize], total: usize) -> f64 {
    let n = total as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

pub fn v_measure_table(table: &ContingencyTable) -> f64 {
    let h_truth = entropy(&table.row_sums, table.total);
    let h_pred = entropy(&table.col_sums, table.total);
    let mi = table.mutual_information();
    let homogeneity = if h_truth == 0.0 { 1.0 } else { mi / h_truth };
    let completeness = if h_pred == 0.0 { 1.0 } else { mi / h_pred };
    if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    }
}

pub fn adjusted_rand_table(table: &ContingencyTable) -> f64 {
    if table.is_identity() {
        return 1.0;
    }
    let index: f64 = table.cells().map(|(_, _, c)| comb2(c)).sum();
    let sum_rows: f64 = table.row_sums.iter().map(|&a| comb2(a)).sum();
    let sum_cols: f64 = table.col_sums.iter().map(|&b| comb2(b)).sum();
    let expected = sum_rows * sum_cols / comb2(table.total);
    let max_index = (sum_rows + sum_cols) / 2.0;
    let denom = max_index - expected;
    if denom == 0.0 {
        0.0
    } else {
        (index - expected) / denom
    }
}

/// Expected mutual information of two labellings with the table's marginals,
/// under the hypergeometric (fixed-marginals permutation) model.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let total = table.total;
    let n = total as f64;
    let mut ln_fact = Vec::with_capacity(total + 1);
    ln_fact.push(0.0f64);
    for k in 1..=total {
        ln_fact.push(ln_fact[k - 1] + (k as f64).ln());
    }
    let mut emi = 0.0;
    for &a in &table.row_sums {
        for &b in &table.col_sums {
            let lo = (a + b).saturating_sub(total).max(1);
            let hi = a.min(b);
            let fixed = ln_fact[a] + ln_fact[b] + ln_fact[total - a] + ln_fact[total - b] - ln_fact[total];
            for nij in lo..=hi {
                let log_p = fixed
                    - ln_fact[nij]
                    - ln_fact[a - nij]
                    - ln_fact[b - nij]
                    - ln_fact[total + nij - a - b];
                let x = nij as f64;
                emi += x / n * (n * x / (a as f64 * b as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

pub fn adjusted_mutual_info_table(table: &ContingencyTable) -> f64 {
    if table.is_identity() {
        return 1.0;
    }
    let mi = table.mutual_information();
    let emi = expected_mutual_information(table);
    let normalizer = entropy(&table.row_sums, table.total).max(entropy(&table.col_sums, table.total));
    let denom = normalizer - emi;
    if denom.abs() < 1e-15 {
        0.0
    } else {
        (mi - emi) / denom
    }
}

/// V-measure, excluding noise.
pub fn v_measure(truth: &[i64], pred: &[i64]) -> Result<f64> {
    Ok(v_measure_table(&ContingencyTable::new(truth, pred, NoiseHandling::Exclude)?))
}

/// Adjusted Rand index, excluding noise.
pub fn adjusted_rand_index(truth: &[i64], pred: &[i64]) -> Result<f64> {
    Ok(adjusted_rand_table(&ContingencyTable::new(truth, pred, NoiseHandling::Exclude)?))
}

/// Adjusted mutual information, excluding noise.
pub fn adjusted_mutual_info(truth: &[i64], pred: &[i64]) -> Result<f64> {
    Ok(adjusted_mutual_info_table(&ContingencyTable::new(truth, pred, NoiseHandling::Exclude)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub vm: f64,
    pub ari: f64,
    pub ami: f64,
    /// Distinct non-noise predicted labels.
    pub clusters_found: usize,
    /// Share of predicted labels that are noise.
    pub noise_fraction: f64,
    /// Items left out of the metrics.
    pub excluded: usize,
}

impl MetricReport {
    pub fn evaluate(truth: &[i64], pred: &[i64], noise: NoiseHandling) -> Result<Self> {
        let table = ContingencyTable::new(truth, pred, noise)?;
        let mut found: Vec<i64> = pred.iter().copied().filter(|&l| l != NOISE).collect();
        found.sort_unstable();
        found.dedup();
        let noise_count = pred.iter().filter(|&&l| l == NOISE).count();
        Ok(Self {
            vm: v_measure_table(&table),
            ari: adjusted_rand_table(&table),
            ami: adjusted_mutual_info_table(&table),
            clusters_found: found.len(),
            noise_fraction: noise_count as f64 / pred.len() as f64,
            excluded: table.excluded(),
        })
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vm={:.6}", self.vm)?;
        writeln!(f, "ari={:.6}", self.ari)?;
        writeln!(f, "ami={:.6}", self.ami)?;
        writeln!(f, "clusters_found={}", self.clusters_found)?;
        writeln!(f, "noise_fraction={:.6}", self.noise_fraction)?;
        write!(f, "excluded={}", self.excluded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn perfect_and_renamed() {
        let truth = [0, 0, 1, 1, 2, 2];
        for pred in [[0, 0, 1, 1, 2, 2], [5, 5, 9, 9, 7, 7]] {
            assert_eq!(v_measure(&truth, &pred).unwrap(), 1.0);
            assert_eq!(adjusted_rand_index(&truth, &pred).unwrap(), 1.0);
            assert_eq!(adjusted_mutual_info(&truth, &pred).unwrap(), 1.0);
        }
    }

    // Frozen from an independent entropy / pair-count / hypergeometric script.
    #[test]
    fn frozen_values() {
        assert!((v_measure(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap() - 0.8).abs() < TOL);
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < TOL);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap().abs() < TOL);
        let ami = adjusted_mutual_info(&[0, 0, 1, 1, 2, 2], &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((ami - 0.225_042_283_198_308_9).abs() < 1e-12, "{ami}");
    }

    #[test]
    fn single_cluster_is_chance_level() {
        let ami = adjusted_mutual_info(&[0, 0, 0, 1, 1, 1], &[3; 6]).unwrap();
        assert!(ami <= 1e-12);
    }

    #[test]
    fn noise_is_excluded() {
        let truth = [0, 0, 1, 1, 1];
        let pred = [4, 4, 2, 2, NOISE];
        let report = MetricReport::evaluate(&truth, &pred, NoiseHandling::Exclude).unwrap();
        assert_eq!(report.vm, 1.0);
        assert_eq!(report.excluded, 1);
        assert_eq!(report.clusters_found, 2);
        assert!((report.noise_fraction - 0.2).abs() < TOL);
        let kept = MetricReport::evaluate(&truth, &pred, NoiseHandling::AsCluster).unwrap();
        assert!(kept.vm < 1.0);
        assert_eq!(kept.excluded, 0);
    }

    #[test]
    fn errors() {
        assert!(matches!(v_measure(&[0, 1], &[0]), Err(DpsmError::LengthMismatch { .. })));
        assert!(matches!(adjusted_rand_index(&[0, 1], &[NOISE, NOISE]), Err(DpsmError::UndefinedMetric)));
    }
}
