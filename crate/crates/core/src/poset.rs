//! Finite posets with cover relations, order bitsets, Möbius function,
//! joins, products and chain enumeration.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("relation has a cycle through {0}")]
    CyclicRelation(String),
    #[error("rank is not graded along cover {lo} < {hi}")]
    NotGraded { lo: String, hi: String },
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("duplicate element label {0}")]
    DuplicateLabel(String),
    #[error("{lo} < {hi} is listed as a cover but is not one")]
    RedundantCover { lo: String, hi: String },
    #[error("relation is not transitive at {0}")]
    NotTransitive(String),
    #[error("{x} and {y} have no least upper bound")]
    NoJoin { x: String, y: String },
    #[error("map is not order preserving on {x} <= {y}")]
    NotOrderPreserving { x: String, y: String },
    #[error("map has {found} entries, source has {expected} elements")]
    MapLength { expected: usize, found: usize },
    #[error("map sends {x} outside the target")]
    MapOutOfRange { x: String },
    #[error("malformed poset json: {0}")]
    Json(String),
}

#[derive(Clone, Debug)]
pub struct Poset {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    rank: Vec<usize>,
    graded: bool,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    below: Vec<FixedBitSet>,
    above: Vec<FixedBitSet>,
}

#[derive(Serialize, Deserialize)]
struct PosetJson {
    elements: Vec<String>,
    covers: Vec<(String, String)>,
    #[serde(default)]
    rank: Option<RankJson>,
}

/// Ranks either aligned with `elements` or keyed by label.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RankJson {
    List(Vec<usize>),
    ByLabel(BTreeMap<String, usize>),
}

fn label_index(labels: &[String]) -> Result<HashMap<String, usize>, PosetError> {
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(PosetError::DuplicateLabel(l.clone()));
        }
    }
    Ok(index)
}

impl Poset {
    /// Builds a poset from its Hasse diagram. With `rank` given, every cover
    /// must raise it by one and minimal elements must sit at rank zero.
    pub fn from_covers(
        labels: Vec<String>,
        covers: &[(usize, usize)],
        rank: Option<Vec<usize>>,
    ) -> Result<Self, PosetError> {
        let n = labels.len();
        let index = label_index(&labels)?;
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for &(lo, hi) in covers {
            if lo >= n || hi >= n {
                return Err(PosetError::UnknownElement(format!("#{}", lo.max(hi))));
            }
            if lo == hi {
                return Err(PosetError::CyclicRelation(labels[lo].clone()));
            }
            if !up[lo].contains(&hi) {
                up[lo].push(hi);
                down[hi].push(lo);
            }
        }
        for v in up.iter_mut().chain(down.iter_mut()) {
            v.sort_unstable();
        }
        // Kahn order from the bottom
        let mut indeg: Vec<usize> = down.iter().map(Vec::len).collect();
        let mut order: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            for &y in &up[x] {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    order.push(y);
                }
            }
        }
        if order.len() < n {
            let bad = (0..n).find(|&i| indeg[i] > 0).unwrap();
            return Err(PosetError::CyclicRelation(labels[bad].clone()));
        }
        let mut below = vec![FixedBitSet::with_capacity(n); n];
        let mut height = vec![0usize; n];
        for &x in &order {
            below[x].insert(x);
            for &y in &down[x] {
                let b = below[y].clone();
                below[x].union_with(&b);
                height[x] = height[x].max(height[y] + 1);
            }
        }
        for x in 0..n {
            for &y in &down[x] {
                if down[x].iter().any(|&z| z != y && below[z].contains(y)) {
                    return Err(PosetError::RedundantCover {
                        lo: labels[y].clone(),
                        hi: labels[x].clone(),
                    });
                }
            }
        }
        let (rank, graded) = match rank {
            Some(r) => {
                if r.len() != n {
                    return Err(PosetError::Json(format!("rank has {} entries for {} elements", r.len(), n)));
                }
                for x in 0..n {
                    if down[x].is_empty() && r[x] != 0 {
                        return Err(PosetError::NotGraded {
                            lo: "(none)".into(),
                            hi: labels[x].clone(),
                        });
                    }
                    for &y in &down[x] {
                        if r[x] != r[y] + 1 {
                            return Err(PosetError::NotGraded {
                                lo: labels[y].clone(),
                                hi: labels[x].clone(),
                            });
                        }
                    }
                }
                (r, true)
            }
            None => {
                let graded = (0..n).all(|x| down[x].iter().all(|&y| height[x] == height[y] + 1));
                (height, graded)
            }
        };
        let above = transpose_sets(&below, n);
        Ok(Poset { labels, index, rank, graded, up, down, below, above })
    }

    /// Builds a poset from an order predicate `leq(x, y)` meaning `x <= y`.
    pub fn from_leq(labels: Vec<String>, leq: impl Fn(usize, usize) -> bool) -> Result<Self, PosetError> {
        let n = labels.len();
        let index = label_index(&labels)?;
        let mut below = vec![FixedBitSet::with_capacity(n); n];
        for y in 0..n {
            for x in 0..n {
                if x == y || leq(x, y) {
                    below[y].insert(x);
                }
            }
        }
        for x in 0..n {
            for y in below[x].ones() {
                if y != x && below[y].contains(x) {
                    return Err(PosetError::CyclicRelation(labels[x].clone()));
                }
                if !below[y].is_subset(&below[x]) {
                    return Err(PosetError::NotTransitive(labels[x].clone()));
                }
            }
        }
        let above = transpose_sets(&below, n);
        let mut up = vec![Vec::new(); n];
        let mut down = vec![Vec::new(); n];
        for x in 0..n {
            for y in below[x].ones() {
                if y == x {
                    continue;
                }
                // y is covered by x when nothing sits strictly between
                let mut between = below[x].clone();
                between.intersect_with(&above[y]);
                if between.count_ones(..) == 2 {
                    down[x].push(y);
                    up[y].push(x);
                }
            }
        }
        for v in up.iter_mut() {
            v.sort_unstable();
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| below[x].count_ones(..));
        let mut height = vec![0usize; n];
        for &x in &order {
            for &y in &down[x] {
                height[x] = height[x].max(height[y] + 1);
            }
        }
        let graded = (0..n).all(|x| down[x].iter().all(|&y| height[x] == height[y] + 1));
        Ok(Poset { labels, index, rank: height, graded, up, down, below, above })
    }

    pub fn from_json_str(s: &str) -> Result<Self, PosetError> {
        let raw: PosetJson = serde_json::from_str(s).map_err(|e| PosetError::Json(e.to_string()))?;
        let index = label_index(&raw.elements)?;
        let look = |l: &str| index.get(l).copied().ok_or_else(|| PosetError::UnknownElement(l.to_string()));
        let covers = raw
            .covers
            .iter()
            .map(|(a, b)| Ok((look(a)?, look(b)?)))
            .collect::<Result<Vec<_>, PosetError>>()?;
        let rank = match &raw.rank {
            Some(RankJson::List(r)) => {
                if r.len() != raw.elements.len() {
                    return Err(PosetError::Json(format!("{} ranks for {} elements", r.len(), raw.elements.len())));
                }
                Some(r.clone())
            }
            Some(RankJson::ByLabel(r)) => {
                for l in r.keys() {
                    look(l)?;
                }
                Some(
                    raw.elements
                        .iter()
                        .map(|l| r.get(l).copied().ok_or_else(|| PosetError::Json(format!("missing rank for {l}"))))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            None => None,
        };
        Poset::from_covers(raw.elements, &covers, rank)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = PosetJson {
            elements: self.labels.clone(),
            covers: self
                .covers()
                .into_iter()
                .map(|(a, b)| (self.labels[a].clone(), self.labels[b].clone()))
                .collect(),
            rank: Some(RankJson::List(self.rank.clone())),
        };
        serde_json::to_value(raw).expect("poset json")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, PosetError> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| PosetError::UnknownElement(label.to_string()))
    }

    /// Rank for graded posets, otherwise the length of the longest chain
    /// from a minimal element.
    pub fn rank(&self, x: usize) -> usize {
        self.rank[x]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    pub fn max_rank(&self) -> usize {
        self.rank.iter().copied().max().unwrap_or(0)
    }

    pub fn is_graded(&self) -> bool {
        self.graded
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.below[y].contains(x)
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq(x, y)
    }

    pub fn up_covers(&self, x: usize) -> &[usize] {
        &self.up[x]
    }

    pub fn down_covers(&self, x: usize) -> &[usize] {
        &self.down[x]
    }

    pub fn is_cover(&self, lo: usize, hi: usize) -> bool {
        self.up[lo].binary_search(&hi).is_ok()
    }

    /// All covers `(lo, hi)` in lexicographic index order.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.len())
            .flat_map(|x| self.up[x].iter().map(move |&y| (x, y)))
            .collect();
        out.sort_unstable();
        out
    }

    /// `{y : y <= x}`
    pub fn down_set(&self, x: usize) -> &FixedBitSet {
        &self.below[x]
    }

    /// `{y : y >= x}`
    pub fn up_set(&self, x: usize) -> &FixedBitSet {
        &self.above[x]
    }

    pub fn minimal_elements(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.down[x].is_empty()).collect()
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.up[x].is_empty()).collect()
    }

    pub fn bottom(&self) -> Option<usize> {
        match self.minimal_elements().as_slice() {
            [b] => Some(*b),
            _ => None,
        }
    }

    pub fn top(&self) -> Option<usize> {
        match self.maximal_elements().as_slice() {
            [t] => Some(*t),
            _ => None,
        }
    }

    pub fn elements_of_rank(&self, r: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.rank[x] == r).collect()
    }

    /// Elements sorted so that `x < y` implies `x` comes first.
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&x| (self.rank[x], x));
        order
    }

    /// `mu(x, y)` for every `y`, zero where `x` is not below `y`.
    pub fn mobius_row(&self, x: usize) -> Vec<i64> {
        let mut mu = vec![0i64; self.len()];
        mu[x] = 1;
        let mut ups: Vec<usize> = self.above[x].ones().filter(|&y| y != x).collect();
        ups.sort_by_key(|&y| (self.rank[y], y));
        for y in ups {
            let mut between = self.below[y].clone();
            between.intersect_with(&self.above[x]);
            let s: i64 = between.ones().filter(|&z| z != y).map(|z| mu[z]).sum();
            mu[y] = -s;
        }
        mu
    }

    pub fn mobius(&self, x: usize, y: usize) -> i64 {
        if !self.leq(x, y) {
            return 0;
        }
        self.mobius_row(x)[y]
    }

    pub fn join(&self, x: usize, y: usize) -> Result<usize, PosetError> {
        let mut common = self.above[x].clone();
        common.intersect_with(&self.above[y]);
        common
            .ones()
            .find(|&u| common.is_subset(&self.above[u]))
            .ok_or_else(|| PosetError::NoJoin {
                x: self.labels[x].clone(),
                y: self.labels[y].clone(),
            })
    }

    pub fn is_join_semilattice(&self) -> bool {
        (0..self.len()).all(|x| (x + 1..self.len()).all(|y| self.join(x, y).is_ok()))
    }

    /// All chains `p_0 < ... < p_len` in lexicographic index order.
    pub fn chains(&self, len: usize) -> Vec<Vec<usize>> {
        let all = FixedBitSet::with_capacity(self.len());
        let mut full = all.clone();
        full.insert_range(..);
        let mut out = Vec::new();
        for x in 0..self.len() {
            let mut chain = vec![x];
            self.extend_chains(&mut chain, len, &full, &mut out);
        }
        out
    }

    /// Chains starting in `starts`, ending in `ends`, grouped by length
    /// (number of steps). Each group is in lexicographic index order.
    pub fn chains_between(&self, starts: &FixedBitSet, ends: &FixedBitSet) -> Vec<Vec<Vec<usize>>> {
        let mut reach = FixedBitSet::with_capacity(self.len());
        for e in ends.ones() {
            reach.union_with(&self.below[e]);
        }
        let mut groups: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        for s in starts.ones() {
            if !reach.contains(s) {
                continue;
            }
            stack.clear();
            stack.push(s);
            self.collect_chains(&mut stack, &reach, ends, &mut groups);
        }
        for g in &mut groups {
            g.sort();
        }
        groups
    }

    fn collect_chains(
        &self,
        stack: &mut Vec<usize>,
        reach: &FixedBitSet,
        ends: &FixedBitSet,
        groups: &mut Vec<Vec<Vec<usize>>>,
    ) {
        let last = *stack.last().unwrap();
        if ends.contains(last) {
            let len = stack.len() - 1;
            if groups.len() <= len {
                groups.resize(len + 1, Vec::new());
            }
            groups[len].push(stack.clone());
        }
        let mut nxt = self.above[last].clone();
        nxt.intersect_with(reach);
        for z in nxt.ones() {
            if z == last {
                continue;
            }
            stack.push(z);
            self.collect_chains(stack, reach, ends, groups);
            stack.pop();
        }
    }

    fn extend_chains(&self, chain: &mut Vec<usize>, len: usize, allowed: &FixedBitSet, out: &mut Vec<Vec<usize>>) {
        if chain.len() == len + 1 {
            out.push(chain.clone());
            return;
        }
        let last = *chain.last().unwrap();
        for z in self.above[last].ones() {
            if z != last && allowed.contains(z) {
                chain.push(z);
                self.extend_chains(chain, len, allowed, out);
                chain.pop();
            }
        }
    }

    /// Product order; element `(x, y)` has index `x * q.len() + y`.
    pub fn product(p: &Poset, q: &Poset) -> Poset {
        let (np, nq) = (p.len(), q.len());
        let n = np * nq;
        let mut labels = Vec::with_capacity(n);
        let mut rank = Vec::with_capacity(n);
        for x in 0..np {
            for y in 0..nq {
                labels.push(format!("({},{})", p.labels[x], q.labels[y]));
                rank.push(p.rank[x] + q.rank[y]);
            }
        }
        let mut covers = Vec::new();
        for x in 0..np {
            for y in 0..nq {
                for &x2 in &p.up[x] {
                    covers.push((x * nq + y, x2 * nq + y));
                }
                for &y2 in &q.up[y] {
                    covers.push((x * nq + y, x * nq + y2));
                }
            }
        }
        let graded = p.graded && q.graded;
        let mut out = Poset::from_covers(labels, &covers, if graded { Some(rank) } else { None })
            .expect("product of posets is a poset");
        out.graded = graded;
        out
    }

    /// Sub-poset on `keep` with the induced order, indices renumbered in
    /// increasing order of the original indices.
    pub fn induced(&self, keep: &[usize]) -> Poset {
        let labels = keep.iter().map(|&x| self.labels[x].clone()).collect();
        Poset::from_leq(labels, |a, b| self.leq(keep[a], keep[b])).expect("induced order")
    }
}

fn transpose_sets(below: &[FixedBitSet], n: usize) -> Vec<FixedBitSet> {
    let mut above = vec![FixedBitSet::with_capacity(n); n];
    for (x, b) in below.iter().enumerate() {
        for y in b.ones() {
            above[y].insert(x);
        }
    }
    above
}

/// Order-preserving map between posets.
#[derive(Clone, Debug)]
pub struct PosetMorphism {
    source: Arc<Poset>,
    target: Arc<Poset>,
    map: Vec<usize>,
}

impl PosetMorphism {
    pub fn new(source: Arc<Poset>, target: Arc<Poset>, map: Vec<usize>) -> Result<Self, PosetError> {
        if map.len() != source.len() {
            return Err(PosetError::MapLength { expected: source.len(), found: map.len() });
        }
        for (x, &fx) in map.iter().enumerate() {
            if fx >= target.len() {
                return Err(PosetError::MapOutOfRange { x: source.labels[x].clone() });
            }
        }
        for (lo, hi) in source.covers() {
            if !target.leq(map[lo], map[hi]) {
                return Err(PosetError::NotOrderPreserving {
                    x: source.labels[lo].clone(),
                    y: source.labels[hi].clone(),
                });
            }
        }
        Ok(PosetMorphism { source, target, map })
    }

    pub fn identity(p: Arc<Poset>) -> Self {
        let map = (0..p.len()).collect();
        PosetMorphism { source: p.clone(), target: p, map }
    }

    /// The join map on `P x P`, returned with the product poset it uses.
    pub fn join_map(p: &Arc<Poset>) -> Result<Self, PosetError> {
        let prod = Arc::new(Poset::product(p, p));
        let n = p.len();
        let mut map = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                map.push(p.join(x, y)?);
            }
        }
        PosetMorphism::new(prod, p.clone(), map)
    }

    pub fn source(&self) -> &Arc<Poset> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Poset> {
        &self.target
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn fiber(&self, y: usize) -> Vec<usize> {
        (0..self.map.len()).filter(|&x| self.map[x] == y).collect()
    }

    pub fn is_minimal_in_fiber(&self, x: usize) -> bool {
        let y = self.map[x];
        self.source.down_set(x).ones().all(|z| z == x || self.map[z] != y)
    }

    pub fn is_maximal_in_fiber(&self, x: usize) -> bool {
        let y = self.map[x];
        self.source.up_set(x).ones().all(|z| z == x || self.map[z] != y)
    }
}
