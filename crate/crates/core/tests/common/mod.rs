//! Independent oracles shared by the property and acceptance suites. They
//! work on plain `u64` masks and never touch the library's closure, cover or
//! filtration code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use modelsheaf::topology::{GroundSet, OpenSet, Topology, DEFAULT_CAP};
use rand::Rng;

pub fn ground(n: usize) -> GroundSet {
    GroundSet::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

pub fn mask_set(n: usize, mask: u64) -> OpenSet {
    OpenSet::from_indices(n, (0..n).filter(|i| mask >> i & 1 == 1))
}

pub fn set_mask(s: &OpenSet) -> u64 {
    s.iter().fold(0, |m, i| m | 1 << i)
}

pub fn topology(n: usize, masks: &[u64]) -> Topology {
    let g = ground(n);
    let sub: Vec<(String, Vec<String>)> = masks
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let labels = (0..n)
                .filter(|i| m >> i & 1 == 1)
                .map(|i| format!("x{i}"))
                .collect();
            (format!("s{k}"), labels)
        })
        .collect();
    Topology::generate(g, &sub, DEFAULT_CAP).unwrap()
}

pub fn family(t: &Topology) -> BTreeSet<u64> {
    t.opens().iter().map(set_mask).collect()
}

/// Adds every pairwise intersection and union until nothing changes.
pub fn naive_closure(n: usize, masks: &[u64]) -> BTreeSet<u64> {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut fam: BTreeSet<u64> = masks.iter().copied().collect();
    fam.insert(0);
    fam.insert(full);
    loop {
        let cur: Vec<u64> = fam.iter().copied().collect();
        let mut next = fam.clone();
        for &a in &cur {
            for &b in &cur {
                next.insert(a & b);
                next.insert(a | b);
            }
        }
        if next.len() == fam.len() {
            return fam;
        }
        fam = next;
    }
}

/// Covers by definition: proper open subsets with no open strictly between.
pub fn naive_covers(fam: &BTreeSet<u64>, u: u64) -> Vec<u64> {
    let below: Vec<u64> = fam
        .iter()
        .copied()
        .filter(|&v| v & !u == 0 && v != u)
        .collect();
    below
        .iter()
        .copied()
        .filter(|&v| !below.iter().any(|&w| w != v && v & !w == 0))
        .collect()
}

/// Shortest saturated-chain length from `root` to every open below it, by
/// enumerating every saturated chain depth-first.
pub fn chain_levels(fam: &BTreeSet<u64>, root: u64) -> BTreeMap<u64, usize> {
    fn walk(fam: &BTreeSet<u64>, at: u64, depth: usize, best: &mut BTreeMap<u64, usize>) {
        let e = best.entry(at).or_insert(usize::MAX);
        *e = (*e).min(depth);
        for c in naive_covers(fam, at) {
            walk(fam, c, depth + 1, best);
        }
    }
    let mut best = BTreeMap::new();
    walk(fam, root, 0, &mut best);
    best
}

/// `k` random subsets of an `n`-element ground set.
pub fn random_masks<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<u64> {
    (0..k).map(|_| rng.random_range(0..1u64 << n)).collect()
}
