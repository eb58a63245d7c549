#![allow(dead_code)]

use coop_msr::field::{mul_slow, reduction_polynomial};
use coop_msr::{encode, CodeParams, NodeVector, Symbol};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_message(params: &CodeParams, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    let order = params.field().order();
    (0..params.k() * params.l())
        .map(|_| rng.gen_range(0..order) as Symbol)
        .collect()
}

pub fn random_nodes(params: &CodeParams, rng: &mut ChaCha8Rng) -> Vec<NodeVector> {
    let msg = random_message(params, rng);
    encode(params, &msg).unwrap().into_nodes()
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(r).collect()
}

pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !set.contains(i)).collect()
}

fn slow_pow(a: u32, t: usize, w: u32, poly: u32) -> u32 {
    (0..t).fold(1, |acc, _| mul_slow(acc, a, w, poly))
}

/// Parity checks evaluated with shift-and-reduce arithmetic and explicit
/// digit expansion; shares nothing with the library's encoder.
pub fn parity_holds(params: &CodeParams, nodes: &[NodeVector]) -> bool {
    let w = params.field().width();
    let poly = reduction_polynomial(w).unwrap();
    let (n, s, m) = (params.n(), params.s(), params.m());
    let span = s.pow(n as u32);
    for a in 0..span {
        let mut digit = Vec::with_capacity(n);
        let mut rest = a;
        for _ in 0..n {
            digit.push(rest % s);
            rest /= s;
        }
        for b in 0..m {
            for t in 0..n - params.k() {
                let mut acc = 0u32;
                for (i, node) in nodes.iter().enumerate() {
                    let lam = params.points()[i * s + digit[i]] as u32;
                    let c = node.as_slice()[b * span + a] as u32;
                    acc ^= mul_slow(slow_pow(lam, t, w, poly), c, w, poly);
                }
                if acc != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// f(r+f-1)l/(f+r-k), integer-checked.
pub fn co_bound(k: u64, l: u64, f: u64, r: u64) -> (u64, u64) {
    (f * (r + f - 1) * l, f + r - k)
}

/// f*r*l/(f+r-k), integer-checked.
pub fn ce_bound(k: u64, l: u64, f: u64, r: u64) -> (u64, u64) {
    (f * r * l, f + r - k)
}
