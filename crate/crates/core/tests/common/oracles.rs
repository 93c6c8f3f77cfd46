//! Brute-force metric references working on raw label lists.

use std::collections::BTreeMap;

fn counts(labels: &[i64]) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for &l in labels {
        *m.entry(l).or_insert(0) += 1;
    }
    m
}

fn joint(a: &[i64], b: &[i64]) -> BTreeMap<(i64, i64), usize> {
    let mut m = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *m.entry((x, y)).or_insert(0) += 1;
    }
    m
}

pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

pub fn entropy(labels: &[i64]) -> f64 {
    let n = labels.len() as f64;
    counts(labels).values().map(|&c| -(c as f64 / n) * (c as f64 / n).ln()).sum()
}

/// H(a | b).
pub fn conditional_entropy(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len() as f64;
    let nb = counts(b);
    joint(a, b).iter().map(|(&(_, y), &c)| -(c as f64 / n) * (c as f64 / nb[&y] as f64).ln()).sum()
}

pub fn mutual_information(a: &[i64], b: &[i64]) -> f64 {
    let n = a.len() as f64;
    let (na, nb) = (counts(a), counts(b));
    joint(a, b)
        .iter()
        .map(|(&(x, y), &c)| {
            let c = c as f64;
            c / n * (c * n / (na[&x] as f64 * nb[&y] as f64)).ln()
        })
        .sum()
}

pub fn v_measure(truth: &[i64], pred: &[i64]) -> f64 {
    let (ht, hp) = (entropy(truth), entropy(pred));
    let h = if ht == 0.0 { 1.0 } else { 1.0 - conditional_entropy(truth, pred) / ht };
    let c = if hp == 0.0 { 1.0 } else { 1.0 - conditional_entropy(pred, truth) / hp };
    if h + c == 0.0 {
        0.0
    } else {
        2.0 * h * c / (h + c)
    }
}

/// Hubert-Arabie ARI from explicit pair counts.
pub fn adjusted_rand(truth: &[i64], pred: &[i64]) -> f64 {
    if same_partition(truth, pred) {
        return 1.0;
    }
    let n = truth.len();
    let (mut st, mut sp, mut both, mut pairs) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let t = truth[i] == truth[j];
            let p = pred[i] == pred[j];
            st += t as u64;
            sp += p as u64;
            both += (t && p) as u64;
            pairs += 1;
        }
    }
    let expected = st as f64 * sp as f64 / pairs as f64;
    let max = (st + sp) as f64 / 2.0;
    if max - expected == 0.0 {
        0.0
    } else {
        (both as f64 - expected) / (max - expected)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Expected MI under fixed marginals with exact integer hypergeometric weights.
pub fn expected_mi_exact(truth: &[i64], pred: &[i64]) -> f64 {
    let n = truth.len();
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in counts(truth).values() {
        for &b in counts(pred).values() {
            let denom = binomial(n, b);
            for k in 1..=a.min(b) {
                let ways = binomial(a, k) * binomial(n - a, b - k);
                if ways == 0 {
                    continue;
                }
                let p = ways as f64 / denom as f64;
                let k = k as f64;
                emi += p * k / nf * (nf * k / (a as f64 * b as f64)).ln();
            }
        }
    }
    emi
}

/// Expected MI by averaging over every permutation of `pred`.
pub fn expected_mi_by_permutation(truth: &[i64], pred: &[i64]) -> f64 {
    fn heap(k: usize, v: &mut Vec<i64>, truth: &[i64], acc: &mut (f64, u64)) {
        if k == 1 {
            acc.0 += mutual_information(truth, v);
            acc.1 += 1;
            return;
        }
        for i in 0..k {
            heap(k - 1, v, truth, acc);
            let j = if k % 2 == 0 { i } else { 0 };
            v.swap(j, k - 1);
        }
    }
    let mut v = pred.to_vec();
    let mut acc = (0.0, 0);
    heap(v.len(), &mut v, truth, &mut acc);
    acc.0 / acc.1 as f64
}

pub fn adjusted_mutual_info(truth: &[i64], pred: &[i64]) -> f64 {
    if same_partition(truth, pred) {
        return 1.0;
    }
    let emi = expected_mi_exact(truth, pred);
    let denom = entropy(truth).max(entropy(pred)) - emi;
    if denom.abs() < 1e-15 {
        0.0
    } else {
        (mutual_information(truth, pred) - emi) / denom
    }
}
