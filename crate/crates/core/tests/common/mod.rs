//! Random small graded posets with rank-one sheaves, for the cellular
//! equivalence tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use orbicell::linalg::IntMatrix;
use orbicell::poset::Poset;
use orbicell::sheaf::{Copresheaf, Presheaf, Sheaf, Variance};
use rand::seq::SliceRandom;
use rand::Rng;

/// Layered poset: every element of layer `r + 1` covers a nonempty random
/// subset of layer `r`, so rank equals layer. Optional bottom and top.
pub fn random_graded<R: Rng>(rng: &mut R, max_layers: usize, max_width: usize) -> Arc<Poset> {
    let layers = rng.gen_range(2..=max_layers);
    let bottom = rng.gen_bool(0.4);
    let top = rng.gen_bool(0.4);
    let mut widths: Vec<usize> = (0..layers).map(|_| rng.gen_range(1..=max_width)).collect();
    if bottom {
        widths[0] = 1;
    }
    if top {
        widths[layers - 1] = 1;
    }
    let mut labels = Vec::new();
    let mut layer_ids: Vec<Vec<usize>> = Vec::new();
    for (r, &w) in widths.iter().enumerate() {
        let ids: Vec<usize> = (0..w).map(|i| labels.len() + i).collect();
        for i in 0..w {
            labels.push(format!("{}{}", (b'a' + r as u8) as char, i));
        }
        layer_ids.push(ids);
    }
    let mut covers = Vec::new();
    for r in 1..layers {
        for &hi in &layer_ids[r] {
            let below = &layer_ids[r - 1];
            let mut picked: Vec<usize> = below.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
            if picked.is_empty() {
                picked.push(*below.choose(rng).unwrap());
            }
            covers.extend(picked.into_iter().map(|lo| (lo, hi)));
        }
    }
    let ranks = widths.iter().enumerate().flat_map(|(r, &w)| std::iter::repeat_n(r, w)).collect();
    Arc::new(Poset::from_covers(labels, &covers, Some(ranks)).expect("layered poset"))
}

/// `Z` on the convex set `q`, every cover map inside `q` multiplication by `d`.
pub fn scaled<V: Variance>(p: &Arc<Poset>, q: &[bool], d: i64) -> Sheaf<V> {
    let ranks: Vec<usize> = q.iter().map(|&b| usize::from(b)).collect();
    let mut maps = HashMap::new();
    for (lo, hi) in p.covers() {
        if q[lo] && q[hi] {
            maps.insert((lo, hi), IntMatrix::from_rows(&[vec![d]]).unwrap());
        }
    }
    Sheaf::new(p.clone(), ranks, maps).expect("functorial")
}

fn random_convex<R: Rng>(rng: &mut R, p: &Arc<Poset>) -> Vec<bool> {
    let n = p.len();
    let x = rng.gen_range(0..n);
    match rng.gen_range(0..4) {
        0 => vec![true; n],
        1 => (0..n).map(|y| y == x).collect(),
        2 => (0..n).map(|y| p.leq(x, y)).collect(),
        _ => (0..n).map(|y| p.leq(y, x)).collect(),
    }
}

/// Random `(P, G, F)`; `G` and `F` are rank one on convex sets with cover
/// maps `1` or a small scalar.
pub fn random_triple<R: Rng>(rng: &mut R) -> (Arc<Poset>, Arc<Copresheaf>, Presheaf) {
    let p = random_graded(rng, 4, 4);
    let gq = random_convex(rng, &p);
    let gd = if rng.gen_bool(0.25) { 2 } else { 1 };
    let g = Arc::new(scaled(&p, &gq, gd));
    let fq = random_convex(rng, &p);
    let fd = [1, 1, 2, 3][rng.gen_range(0..4)];
    let f = scaled(&p, &fq, fd);
    (p, g, f)
}
