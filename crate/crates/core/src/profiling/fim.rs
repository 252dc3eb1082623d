//! Frequent-itemset mining over sliding windows of update transactions.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{AttributePath, UpdateRule};

use super::temporal::UpdateTransaction;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum FimError {
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

/// Fixed-width item bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(items: usize) -> Self {
        Bits(vec![0; items.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn union_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
    fn contains(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }
}

/// Window unions of `window` consecutive transactions, sliding by one. Fewer
/// transactions than the window size yield a single window over all of them.
pub fn window_unions<T: Clone + Ord>(transactions: &[BTreeSet<T>], window: usize) -> Vec<BTreeSet<T>> {
    if transactions.is_empty() {
        return Vec::new();
    }
    let w = window.max(1).min(transactions.len());
    transactions.windows(w).map(|ws| ws.iter().flatten().cloned().collect()).collect()
}

/// Mines co-update rules `A -> B`. Windowed support of an itemset is the share
/// of windows whose union contains it; a rule is kept when the support of
/// `A ∪ B` reaches `min_support` and `support(A ∪ B) / support(A)` reaches
/// `min_confidence`. Rules are ordered by antecedent, then consequent.
pub fn mine_update_dependencies(
    transactions: &[UpdateTransaction],
    window: usize,
    min_support: f64,
    min_confidence: f64,
) -> Result<Vec<UpdateRule>, FimError> {
    let sets: Vec<BTreeSet<AttributePath>> = transactions.iter().map(|t| t.items.clone()).collect();
    mine_itemsets(&sets, window, min_support, min_confidence)
}

pub fn mine_itemsets(
    transactions: &[BTreeSet<AttributePath>],
    window: usize,
    min_support: f64,
    min_confidence: f64,
) -> Result<Vec<UpdateRule>, FimError> {
    if window == 0 {
        return Err(FimError::InvalidWindow);
    }
    for t in [min_support, min_confidence] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(FimError::InvalidThreshold(t));
        }
    }
    let items: Vec<AttributePath> =
        transactions.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&AttributePath, usize> = items.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let encoded: Vec<Bits> = transactions
        .iter()
        .map(|t| {
            let mut b = Bits::empty(items.len());
            t.iter().for_each(|p| b.set(index[p]));
            b
        })
        .collect();
    if encoded.is_empty() {
        return Ok(Vec::new());
    }
    let w = window.min(encoded.len());
    let windows: Vec<Bits> = encoded
        .windows(w)
        .map(|ws| {
            let mut u = Bits::empty(items.len());
            ws.iter().for_each(|b| u.union_with(b));
            u
        })
        .collect();
    let total = windows.len() as f64;
    let count = |set: &[usize]| {
        let mut b = Bits::empty(items.len());
        set.iter().for_each(|&i| b.set(i));
        windows.iter().filter(|wb| wb.contains(&b)).count()
    };
    let frequent = |c: usize| c as f64 / total >= min_support;

    // Level-wise Apriori; candidates are sorted index vectors.
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut level: Vec<Vec<usize>> = Vec::new();
    for i in 0..items.len() {
        let c = count(&[i]);
        if frequent(c) {
            counts.insert(vec![i], c);
            level.push(vec![i]);
        }
    }
    while !level.is_empty() {
        let mut next = Vec::new();
        for (x, a) in level.iter().enumerate() {
            for b in &level[x + 1..] {
                if a[..a.len() - 1] != b[..b.len() - 1] {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(*b.last().unwrap());
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<usize> = cand.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
                    counts.contains_key(&sub)
                });
                if !all_subsets_frequent {
                    continue;
                }
                let c = count(&cand);
                if frequent(c) {
                    counts.insert(cand.clone(), c);
                    next.push(cand);
                }
            }
        }
        level = next;
    }

    let mut rules = Vec::new();
    for (set, &c) in counts.iter().filter(|(s, _)| s.len() >= 2) {
        let k = set.len();
        for mask in 1..(1u32 << k) - 1 {
            let ante: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| set[b]).collect();
            let cons: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 0).map(|b| set[b]).collect();
            let confidence = c as f64 / counts[&ante] as f64;
            if confidence >= min_confidence {
                rules.push(UpdateRule {
                    antecedent: ante.iter().map(|&i| items[i].clone()).collect(),
                    consequent: cons.iter().map(|&i| items[i].clone()).collect(),
                    window,
                    support: c as f64 / total,
                    confidence,
                });
            }
        }
    }
    rules.sort_by(|a, b| (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent)));
    Ok(rules)
}
