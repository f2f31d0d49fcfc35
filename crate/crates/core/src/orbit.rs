//! Combinatorics of `Z_k^m` orbit configuration spaces over a graph: bond
//! lattice, partial matrices and the semilattice `L_k^m`, the comparison map
//! to the intersection lattice, and the BCp complexes with their product.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cellular::{CellularError, CellularForm};
use crate::linalg::{Int, IntMatrix};
use crate::poset::Poset;
use crate::sheaf::Copresheaf;

/// Default cap on the number of elements of `L_k^m`.
pub const DEFAULT_SIZE_LIMIT: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("lattice would have {size} elements, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("gradings are not independent")]
    NotIndependent,
    #[error("formal sum is not in BCp of {0}")]
    NotInBcp(String),
    #[error("undefined row too large to split ({0} vertices)")]
    SplitTooLarge(usize),
    #[error(transparent)]
    Cellular(#[from] CellularError),
}

/// Simple graph on vertices `0..n` (printed 1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<u64>,
}

impl Graph {
    /// Edges are 1-based pairs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, OrbitError> {
        if n > 16 {
            return Err(OrbitError::InvalidGraph(format!("{n} vertices is beyond desk scale")));
        }
        let mut es = Vec::new();
        let mut adj = vec![0u64; n];
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(OrbitError::InvalidGraph(format!("edge [{a},{b}] out of range")));
            }
            if a == b {
                return Err(OrbitError::InvalidGraph(format!("loop at {a}")));
            }
            let (i, j) = (a.min(b) - 1, a.max(b) - 1);
            if !es.contains(&(i, j)) {
                es.push((i, j));
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
        es.sort_unstable();
        Ok(Graph { n, edges: es, adj })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        Graph::new(n, &edges).expect("complete graph")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i, i + 1)).collect();
        Graph::new(n, &edges).expect("path graph")
    }

    /// `{"n": 3, "edges": [[1,2],[2,3]]}` or `{"complete": 3}`.
    pub fn from_json_str(s: &str) -> Result<Self, OrbitError> {
        let v: Value = serde_json::from_str(s).map_err(|e| OrbitError::InvalidGraph(e.to_string()))?;
        if let Some(c) = v.get("complete") {
            let n = c.as_u64().ok_or_else(|| OrbitError::InvalidGraph("complete must be an integer".into()))?;
            if n > 16 {
                return Err(OrbitError::InvalidGraph(format!("{n} vertices is beyond desk scale")));
            }
            return Ok(Graph::complete(n as usize));
        }
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| OrbitError::InvalidGraph("missing n".into()))? as usize;
        let mut edges = Vec::new();
        if let Some(es) = v.get("edges") {
            let es = es.as_array().ok_or_else(|| OrbitError::InvalidGraph("edges must be a list".into()))?;
            for e in es {
                let pair = e
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .and_then(|p| Some((p[0].as_u64()? as usize, p[1].as_u64()? as usize)))
                    .ok_or_else(|| OrbitError::InvalidGraph(format!("bad edge {e}")))?;
                edges.push(pair);
            }
        }
        Graph::new(n, &edges)
    }

    pub fn to_json(&self) -> Value {
        let edges: Vec<[usize; 2]> = self.edges.iter().map(|&(a, b)| [a + 1, b + 1]).collect();
        json!({ "n": self.n, "edges": edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based edges.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * self.n.saturating_sub(1) / 2
    }

    /// Whether the induced subgraph on `mask` is connected.
    pub fn connected(&self, mask: u64) -> bool {
        if mask == 0 {
            return true;
        }
        let start = mask.trailing_zeros() as usize;
        let mut seen = 1u64 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let mut nb = self.adj[v] & mask & !seen;
            while nb != 0 {
                let w = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                seen |= 1 << w;
                stack.push(w);
            }
        }
        seen == mask
    }

    /// Connected components of the induced subgraph on `mask`.
    pub fn components(&self, mask: u64) -> Vec<u64> {
        let mut rest = mask;
        let mut out = Vec::new();
        while rest != 0 {
            let start = rest.trailing_zeros() as usize;
            let mut seen = 1u64 << start;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let mut nb = self.adj[v] & mask & !seen;
                while nb != 0 {
                    let w = nb.trailing_zeros() as usize;
                    nb &= nb - 1;
                    seen |= 1 << w;
                    stack.push(w);
                }
            }
            out.push(seen);
            rest &= !seen;
        }
        out
    }
}

/// Blocks as sorted 0-based vertex lists, in lexicographic order.
pub type Partition = Vec<Vec<usize>>;

fn canonical(mut blocks: Vec<Vec<usize>>) -> Partition {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort();
    blocks
}

fn mask_of(b: &[usize]) -> u64 {
    b.iter().fold(0, |m, &v| m | 1 << v)
}

fn vertex_names(n: usize) -> impl Fn(&[usize]) -> String {
    move |b: &[usize]| {
        let sep = if n > 9 { "." } else { "" };
        b.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(sep)
    }
}

fn all_set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut parts: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for p in &parts {
            let nb = p.iter().max().map_or(0, |m| m + 1);
            for b in 0..=nb {
                if i == 0 && b > 0 {
                    break;
                }
                let mut q = p.clone();
                q.push(b);
                next.push(q);
            }
        }
        parts = next;
    }
    parts
}

/// Partitions with connected blocks, ordered by refinement.
#[derive(Clone, Debug)]
pub struct BondLattice {
    graph: Graph,
    parts: Vec<Partition>,
    poset: Arc<Poset>,
    index: HashMap<Partition, usize>,
}

impl BondLattice {
    pub fn new(graph: &Graph) -> Self {
        let n = graph.n;
        let mut parts: Vec<Partition> = all_set_partitions(n)
            .into_iter()
            .map(|rg| {
                let nb = rg.iter().max().map_or(0, |m| m + 1);
                canonical((0..nb).map(|b| (0..n).filter(|&i| rg[i] == b).collect()).collect())
            })
            .filter(|p: &Partition| p.iter().all(|b| graph.connected(mask_of(b))))
            .collect();
        parts.sort_by(|a, b| (n - a.len(), a).cmp(&(n - b.len(), b)));
        let name = vertex_names(n);
        let labels: Vec<String> = parts
            .iter()
            .map(|p| p.iter().map(|b| name(b)).collect::<Vec<_>>().join("|"))
            .collect();
        let masks: Vec<Vec<u64>> = parts.iter().map(|p| p.iter().map(|b| mask_of(b)).collect()).collect();
        let refines = |i: usize, j: usize| masks[i].iter().all(|&b| masks[j].iter().any(|&c| b & c == b));
        let poset = Arc::new(Poset::from_leq(labels, refines).expect("refinement order"));
        let index = parts.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        BondLattice { graph: graph.clone(), parts, poset, index }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn partition(&self, i: usize) -> &Partition {
        &self.parts[i]
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.graph.n - self.parts[i].len()
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        let n = self.graph.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let nx = p[c];
                p[c] = r;
                c = nx;
            }
            r
        }
        for b in self.parts[i].iter().chain(&self.parts[j]) {
            for w in b.windows(2) {
                let (a, c) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != c {
                    parent[a] = c;
                }
            }
        }
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            blocks.entry(r).or_default().push(v);
        }
        self.index[&canonical(blocks.into_values().collect())]
    }
}

/// A partial matrix over a bond partition: one entry per (big block, column),
/// row-major with blocks in lexicographic order. Classes are coded in base
/// `k` from the values at the non-minimal vertices, `None` is undefined.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Theta {
    pub base: usize,
    pub entries: Vec<Option<u32>>,
}

/// Weighted union-find with `Z_k` potentials.
struct PotentialUf {
    parent: Vec<usize>,
    w: Vec<u32>,
    k: u32,
}

impl PotentialUf {
    fn new(n: usize, k: u32) -> Self {
        PotentialUf { parent: (0..n).collect(), w: vec![0; n], k }
    }

    /// Root of `x` and `pot(x) - pot(root)`.
    fn find(&mut self, x: usize) -> (usize, u32) {
        if self.parent[x] == x {
            return (x, 0);
        }
        let p = self.parent[x];
        let (r, wp) = self.find(p);
        self.parent[x] = r;
        self.w[x] = (self.w[x] + wp) % self.k;
        (r, self.w[x])
    }

    /// Imposes `pot(b) - pot(a) = d`; false on a conflict.
    fn relate(&mut self, a: usize, b: usize, d: u32) -> bool {
        let (ra, wa) = self.find(a);
        let (rb, wb) = self.find(b);
        if ra == rb {
            return (wb + self.k - wa) % self.k == d % self.k;
        }
        self.parent[rb] = ra;
        self.w[rb] = (wa + d + 2 * self.k - wb % self.k) % self.k;
        true
    }
}

/// `L_k^m(Gamma)` with its poset structure.
#[derive(Clone, Debug)]
pub struct OrbitLattice {
    k: u32,
    m: usize,
    bond: BondLattice,
    big: Vec<Vec<Vec<usize>>>,
    elements: Vec<Theta>,
    index: HashMap<Theta, usize>,
    poset: Arc<Poset>,
}

fn count_classes(k: u32, size: usize) -> u64 {
    (k as u64).pow(size as u32 - 1)
}

impl OrbitLattice {
    /// Number of elements without building anything.
    pub fn predicted_size(graph: &Graph, k: u32, m: usize) -> u128 {
        let bond = BondLattice::new(graph);
        (0..bond.len())
            .map(|i| {
                bond.parts[i]
                    .iter()
                    .filter(|b| b.len() >= 2)
                    .map(|b| (count_classes(k, b.len()) as u128 + 1).pow(m as u32))
                    .product::<u128>()
            })
            .sum()
    }

    pub fn new(graph: &Graph, k: u32, m: usize, limit: usize) -> Result<Self, OrbitError> {
        if k == 0 || m == 0 {
            return Err(OrbitError::InvalidGraph("k and m must be positive".into()));
        }
        let size = Self::predicted_size(graph, k, m);
        if size > limit as u128 {
            return Err(OrbitError::TooLarge { size: size.min(usize::MAX as u128) as usize, limit });
        }
        let bond = BondLattice::new(graph);
        let big: Vec<Vec<Vec<usize>>> = (0..bond.len())
            .map(|i| bond.parts[i].iter().filter(|b| b.len() >= 2).cloned().collect())
            .collect();
        let mut elements = Vec::new();
        for (base, blocks) in big.iter().enumerate() {
            let mut options: Vec<u32> = Vec::new();
            for b in blocks {
                for _ in 0..m {
                    options.push(count_classes(k, b.len()) as u32);
                }
            }
            // mixed radix over None, Some(0), .., Some(c-1), last entry fastest
            let total: u64 = options.iter().map(|&c| c as u64 + 1).product();
            for mut code in 0..total {
                let mut entries = vec![None; options.len()];
                for i in (0..options.len()).rev() {
                    let r = options[i] as u64 + 1;
                    let d = (code % r) as u32;
                    code /= r;
                    entries[i] = if d == 0 { None } else { Some(d - 1) };
                }
                elements.push(Theta { base, entries });
            }
        }
        let index: HashMap<Theta, usize> = elements.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let empty = Arc::new(Poset::from_leq(Vec::new(), |_, _| true).expect("empty poset"));
        let mut lat = OrbitLattice { k, m, bond, big, elements, index, poset: empty };
        let labels: Vec<String> = (0..lat.elements.len()).map(|i| lat.label_of(&lat.elements[i])).collect();
        let le = |a: usize, b: usize| lat.leq_theta(&lat.elements[a], &lat.elements[b]);
        let poset = Poset::from_leq(labels, le).expect("fibration order");
        lat.poset = Arc::new(poset);
        Ok(lat)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bond(&self) -> &BondLattice {
        &self.bond
    }

    pub fn graph(&self) -> &Graph {
        &self.bond.graph
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn theta(&self, x: usize) -> &Theta {
        &self.elements[x]
    }

    pub fn index_of(&self, t: &Theta) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn bottom(&self) -> usize {
        0
    }

    pub fn big_blocks(&self, base: usize) -> &[Vec<usize>] {
        &self.big[base]
    }

    pub fn class_count(&self, block_len: usize) -> u32 {
        count_classes(self.k, block_len) as u32
    }

    /// Values of a class on the vertices of a block, first one 0.
    pub fn class_values(&self, block_len: usize, code: u32) -> Vec<u32> {
        let mut out = vec![0u32; block_len];
        let mut c = code;
        for v in out.iter_mut().skip(1) {
            *v = c % self.k;
            c /= self.k;
        }
        out
    }

    pub fn encode_class(&self, values: &[u32]) -> u32 {
        let k = self.k;
        let v0 = values[0];
        values[1..].iter().rev().fold(0, |acc, &v| acc * k + (v + k - v0 % k) % k)
    }

    pub fn label(&self, x: usize) -> &str {
        self.poset.label(x)
    }

    fn label_of(&self, t: &Theta) -> String {
        let base = self.bond.poset.label(t.base);
        let blocks = &self.big[t.base];
        let rows: Vec<String> = blocks
            .iter()
            .enumerate()
            .map(|(bi, b)| {
                (0..self.m)
                    .map(|c| match t.entries[bi * self.m + c] {
                        None => "?".to_string(),
                        Some(code) => {
                            let vals = self.class_values(b.len(), code);
                            let sep = if self.k > 10 { "." } else { "" };
                            vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        format!("{base}[{}]", rows.join(";"))
    }

    pub fn r_b(&self, x: usize) -> usize {
        self.bond.rank(self.elements[x].base)
    }

    pub fn r_f(&self, x: usize) -> usize {
        self.elements[x].entries.iter().filter(|e| e.is_none()).count()
    }

    pub fn codim(&self, x: usize) -> usize {
        self.r_f(x) + self.m * self.r_b(x)
    }

    pub fn projection(&self, x: usize) -> usize {
        self.elements[x].base
    }

    /// Undefined entries as `(block position, column, entry position)`,
    /// in block-then-column order.
    pub fn undefined(&self, x: usize) -> Vec<(usize, usize, usize)> {
        let t = &self.elements[x];
        t.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(i, _)| (i / self.m, i % self.m, i))
            .collect()
    }

    /// `t|_{I1}` for `I1 <= base(t)`.
    pub fn restrict_theta(&self, t: &Theta, to: usize) -> Theta {
        let from = &self.big[t.base];
        let mut entries = Vec::with_capacity(self.big[to].len() * self.m);
        for p1 in &self.big[to] {
            let (qi, q) = from
                .iter()
                .enumerate()
                .find(|(_, q)| p1.iter().all(|v| q.contains(v)))
                .expect("restriction to a finer partition");
            let pos: Vec<usize> = p1.iter().map(|v| q.iter().position(|w| w == v).unwrap()).collect();
            for c in 0..self.m {
                entries.push(t.entries[qi * self.m + c].map(|code| {
                    let vals = self.class_values(q.len(), code);
                    let sub: Vec<u32> = pos.iter().map(|&i| vals[i]).collect();
                    self.encode_class(&sub)
                }));
            }
        }
        Theta { base: to, entries }
    }

    pub fn restrict(&self, x: usize, to: usize) -> usize {
        self.index[&self.restrict_theta(&self.elements[x], to)]
    }

    fn fiber_leq(a: &Theta, b: &Theta) -> bool {
        a.entries.iter().zip(&b.entries).all(|(x, y)| y.is_none() || x == y)
    }

    fn leq_theta(&self, a: &Theta, b: &Theta) -> bool {
        self.bond.poset.leq(a.base, b.base) && Self::fiber_leq(a, &self.restrict_theta(b, a.base))
    }

    pub fn join_theta(&self, a: &Theta, b: &Theta) -> Theta {
        let base = self.bond.join(a.base, b.base);
        let mut entries = Vec::with_capacity(self.big[base].len() * self.m);
        for p in &self.big[base] {
            let mut cons: Vec<(&Vec<usize>, &Theta, usize)> = Vec::new();
            for t in [a, b] {
                for (qi, q) in self.big[t.base].iter().enumerate() {
                    if q.iter().all(|v| p.contains(v)) {
                        cons.push((q, t, qi));
                    }
                }
            }
            for c in 0..self.m {
                if cons.iter().any(|(_, t, qi)| t.entries[qi * self.m + c].is_none()) {
                    entries.push(None);
                    continue;
                }
                let mut uf = PotentialUf::new(p.len(), self.k);
                let mut ok = true;
                for (q, t, qi) in &cons {
                    let vals = self.class_values(q.len(), t.entries[qi * self.m + c].unwrap());
                    let l0 = p.iter().position(|v| *v == q[0]).unwrap();
                    for (i, v) in q.iter().enumerate().skip(1) {
                        let li = p.iter().position(|w| w == v).unwrap();
                        ok &= uf.relate(l0, li, vals[i]);
                    }
                }
                if !ok {
                    entries.push(None);
                    continue;
                }
                let (_, w0) = uf.find(0);
                let vals: Vec<u32> = (0..p.len()).map(|i| (uf.find(i).1 + self.k - w0) % self.k).collect();
                entries.push(Some(self.encode_class(&vals)));
            }
        }
        Theta { base, entries }
    }

    pub fn join(&self, x: usize, y: usize) -> usize {
        self.index[&self.join_theta(&self.elements[x], &self.elements[y])]
    }

    pub fn is_independent(&self, x: usize, y: usize) -> bool {
        let z = self.join(x, y);
        self.r_b(x) + self.r_b(y) == self.r_b(z) && self.r_f(x) + self.r_f(y) == self.r_f(z)
    }

    /// Sign of the permutation aligning the undefined entries of `x` then
    /// `y` with those of `x v y`.
    pub fn perm_sign(&self, x: usize, y: usize) -> Result<i32, OrbitError> {
        if !self.is_independent(x, y) {
            return Err(OrbitError::NotIndependent);
        }
        let z = self.join(x, y);
        let zb = &self.big[self.elements[z].base];
        let target: Vec<(usize, usize)> = self.undefined(z).iter().map(|&(b, c, _)| (b, c)).collect();
        let mut perm = Vec::new();
        for w in [x, y] {
            let blocks = &self.big[self.elements[w].base];
            for (b, c, _) in self.undefined(w) {
                let v = blocks[b][0];
                let zbi = zb.iter().position(|p| p.contains(&v)).expect("join block");
                let pos = target.iter().position(|&t| t == (zbi, c)).ok_or(OrbitError::NotIndependent)?;
                perm.push(pos);
            }
        }
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != perm.len() || sorted.len() != target.len() {
            return Err(OrbitError::NotIndependent);
        }
        let mut inv = 0;
        for i in 0..perm.len() {
            for j in i + 1..perm.len() {
                if perm[i] > perm[j] {
                    inv += 1;
                }
            }
        }
        Ok(if inv % 2 == 0 { 1 } else { -1 })
    }

    /// Elements of the fiber `C_I^m` over a bond element, in index order.
    pub fn fiber(&self, base: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.elements[x].base == base).collect()
    }

    /// The fiber as a graded poset (rank = number of undefined entries).
    pub fn fiber_poset(&self, base: usize) -> (Arc<Poset>, Vec<usize>) {
        let members = self.fiber(base);
        (Arc::new(self.poset.induced(&members)), members)
    }

    /// `x` with its undefined entries filled by `fills`.
    pub fn completion(&self, x: usize, fills: &[u32]) -> usize {
        let mut t = self.elements[x].clone();
        for ((_, _, pos), &c) in self.undefined(x).iter().zip(fills) {
            t.entries[*pos] = Some(c);
        }
        self.index[&t]
    }

    fn nonzero_tuples(&self, x: usize) -> Vec<Vec<u32>> {
        let blocks = &self.big[self.elements[x].base];
        let ranges: Vec<u32> = self.undefined(x).iter().map(|&(b, _, _)| self.class_count(blocks[b].len())).collect();
        let mut out: Vec<Vec<u32>> = vec![Vec::new()];
        for &r in &ranges {
            let mut next = Vec::with_capacity(out.len() * r.saturating_sub(1) as usize);
            for t in &out {
                for c in 1..r {
                    let mut u = t.clone();
                    u.push(c);
                    next.push(u);
                }
            }
            out = next;
        }
        out
    }

    pub fn bcp_rank(&self, x: usize) -> usize {
        let blocks = &self.big[self.elements[x].base];
        self.undefined(x).iter().map(|&(b, _, _)| self.class_count(blocks[b].len()) as usize - 1).product()
    }

    /// Basis `(x)_i (eta_{c_i} - eta_0)` indexed by nonzero class tuples in
    /// lexicographic order, as sums over completions.
    pub fn bcp_basis(&self, x: usize) -> Vec<BTreeMap<usize, Int>> {
        let u = self.undefined(x).len();
        self.nonzero_tuples(x)
            .into_iter()
            .map(|tup| {
                let mut v = BTreeMap::new();
                for s in 0u64..1 << u {
                    let fills: Vec<u32> = (0..u).map(|i| if s >> i & 1 == 1 { tup[i] } else { 0 }).collect();
                    let sign = if (u - s.count_ones() as usize).is_multiple_of(2) { 1 } else { -1 };
                    v.insert(self.completion(x, &fills), Int::from(sign));
                }
                v
            })
            .collect()
    }

    /// Coordinates of a formal sum of completions of `x` in the BCp basis.
    pub fn bcp_coords(&self, x: usize, w: &BTreeMap<usize, Int>) -> Result<Vec<Int>, OrbitError> {
        let coords: Vec<Int> = self
            .nonzero_tuples(x)
            .iter()
            .map(|t| w.get(&self.completion(x, t)).cloned().unwrap_or_default())
            .collect();
        let mut rec: BTreeMap<usize, Int> = BTreeMap::new();
        for (c, b) in coords.iter().zip(self.bcp_basis(x)) {
            if c.is_zero() {
                continue;
            }
            for (e, v) in b {
                *rec.entry(e).or_insert_with(Int::zero) += c * v;
            }
        }
        rec.retain(|_, v| !v.is_zero());
        let mut w2 = w.clone();
        w2.retain(|_, v| !v.is_zero());
        if rec != w2 {
            return Err(OrbitError::NotInBcp(self.label(x).into()));
        }
        Ok(coords)
    }

    /// Defining condition of BCp: coefficient sums vanish over the
    /// completions below each element with one undefined entry.
    pub fn bcp_contains(&self, x: usize, w: &BTreeMap<usize, Int>) -> bool {
        let ud = self.undefined(x);
        let completions: BTreeMap<usize, Vec<u32>> = self.all_fills(x).into_iter().map(|f| (self.completion(x, &f), f)).collect();
        if w.keys().any(|e| !completions.contains_key(e)) {
            return false;
        }
        if ud.is_empty() {
            return true;
        }
        // a rank-one element below x keeps one entry undefined and fills the rest
        for (keep, _) in ud.iter().enumerate() {
            let mut sums: HashMap<Vec<u32>, Int> = HashMap::new();
            for (e, f) in &completions {
                let mut key = f.clone();
                key.remove(keep);
                *sums.entry(key).or_insert_with(Int::zero) += w.get(e).cloned().unwrap_or_default();
            }
            if sums.values().any(|v| !v.is_zero()) {
                return false;
            }
        }
        true
    }

    fn all_fills(&self, x: usize) -> Vec<Vec<u32>> {
        let blocks = &self.big[self.elements[x].base];
        let mut out: Vec<Vec<u32>> = vec![Vec::new()];
        for (b, _, _) in self.undefined(x) {
            let r = self.class_count(blocks[b].len());
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..r).map(move |c| {
                        let mut u = t.clone();
                        u.push(c);
                        u
                    })
                })
                .collect();
        }
        out
    }

    /// `d u = sum_i (-1)^i rho_{psi}(u)` over the elements `psi` filling the
    /// `i`-th undefined entry; coordinates in BCp of each `psi`.
    pub fn bcp_boundary(&self, x: usize, u: &BTreeMap<usize, Int>) -> Result<Vec<(usize, Vec<Int>)>, OrbitError> {
        let ud = self.undefined(x);
        let blocks = &self.big[self.elements[x].base];
        let mut out = Vec::new();
        for (i, &(b, _, pos)) in ud.iter().enumerate() {
            for d in 0..self.class_count(blocks[b].len()) {
                let mut t = self.elements[x].clone();
                t.entries[pos] = Some(d);
                let psi = self.index[&t];
                let mut w: BTreeMap<usize, Int> = BTreeMap::new();
                for (e, v) in u {
                    if self.elements[*e].entries[pos] == Some(d) {
                        let v = if i % 2 == 0 { v.clone() } else { -v.clone() };
                        w.insert(*e, v);
                    }
                }
                out.push((psi, self.bcp_coords(psi, &w)?));
            }
        }
        Ok(out)
    }

    /// The BCp complexes of one fiber as a form of `(C_I^m, constant Z)`.
    pub fn bcp_form(&self, base: usize) -> Result<(CellularForm, Vec<usize>), OrbitError> {
        let (fp, members) = self.fiber_poset(base);
        let local: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let ranks: Vec<usize> = members.iter().map(|&x| self.bcp_rank(x)).collect();
        let mut diff: HashMap<(usize, usize), IntMatrix> = HashMap::new();
        for (y, x) in fp.covers() {
            diff.insert((y, x), IntMatrix::zeros(ranks[y], ranks[x]));
        }
        for (lx, &x) in members.iter().enumerate() {
            for (col, u) in self.bcp_basis(x).iter().enumerate() {
                for (psi, coords) in self.bcp_boundary(x, u)? {
                    let m = diff.get_mut(&(local[&psi], lx)).expect("fiber cover");
                    for (row, v) in coords.iter().enumerate() {
                        m.add_at(row, col, v);
                    }
                }
            }
        }
        let g = Arc::new(Copresheaf::constant(fp));
        Ok((CellularForm::from_parts(g, ranks, diff)?, members))
    }

    /// Product of BCp elements: completion-wise join with the sign of
    /// `|x, y|`; `None` for dependent gradings.
    pub fn phi_product(
        &self,
        x: usize,
        u: &BTreeMap<usize, Int>,
        y: usize,
        v: &BTreeMap<usize, Int>,
    ) -> Result<Option<(usize, BTreeMap<usize, Int>)>, OrbitError> {
        if !self.is_independent(x, y) {
            return Ok(None);
        }
        let sign = Int::from(self.perm_sign(x, y)?);
        let z = self.join(x, y);
        let mut w: BTreeMap<usize, Int> = BTreeMap::new();
        for (e1, c1) in u {
            for (e2, c2) in v {
                *w.entry(self.join(*e1, *e2)).or_insert_with(Int::zero) += &sign * c1 * c2;
            }
        }
        w.retain(|_, c| !c.is_zero());
        if !self.bcp_contains(z, &w) {
            return Err(OrbitError::NotInBcp(self.label(z).into()));
        }
        Ok(Some((z, w)))
    }

    /// `{ "partition": [[1,2],[3]], "entries": { "12,1": [0,1] | "?" } }`.
    pub fn theta_json(&self, x: usize) -> Value {
        let t = &self.elements[x];
        let name = vertex_names(self.bond.graph.n);
        let part: Vec<Vec<usize>> =
            self.bond.parts[t.base].iter().map(|b| b.iter().map(|v| v + 1).collect()).collect();
        let mut entries = serde_json::Map::new();
        for (bi, b) in self.big[t.base].iter().enumerate() {
            for c in 0..self.m {
                let key = format!("{},{}", name(b), c + 1);
                let val = match t.entries[bi * self.m + c] {
                    None => json!("?"),
                    Some(code) => json!(self.class_values(b.len(), code)),
                };
                entries.insert(key, val);
            }
        }
        json!({ "partition": part, "entries": entries })
    }

    /// Greatest element of the sigma-fiber: undefined rows glued along the
    /// connected components of the graph on their vertices.
    pub fn alpha(&self, x: usize) -> usize {
        let t = &self.elements[x];
        let blocks = &self.big[t.base];
        let mut undefined_mask = 0u64;
        let mut keep: Vec<(Vec<usize>, Vec<Option<u32>>)> = Vec::new();
        for (bi, b) in blocks.iter().enumerate() {
            let row = &t.entries[bi * self.m..(bi + 1) * self.m];
            if row.iter().all(Option::is_none) {
                undefined_mask |= mask_of(b);
            } else {
                keep.push((b.clone(), row.to_vec()));
            }
        }
        if undefined_mask == 0 {
            return x;
        }
        let n = self.bond.graph.n;
        let mut new_blocks: Vec<Vec<usize>> = keep.iter().map(|(b, _)| b.clone()).collect();
        for comp in self.bond.graph.components(undefined_mask) {
            new_blocks.push((0..n).filter(|v| comp >> v & 1 == 1).collect());
        }
        let covered: u64 = new_blocks.iter().fold(0, |a, b| a | mask_of(b));
        for v in 0..n {
            if covered >> v & 1 == 0 {
                new_blocks.push(vec![v]);
            }
        }
        let part = canonical(new_blocks);
        let base = self.bond.index[&part];
        let mut entries = Vec::new();
        for b in &self.big[base] {
            match keep.iter().find(|(kb, _)| kb == b) {
                Some((_, row)) => entries.extend(row.iter().cloned()),
                None => entries.extend(std::iter::repeat_n(None, self.m)),
            }
        }
        self.index[&Theta { base, entries }]
    }

    /// All elements with the same image under sigma as the canonical `a`:
    /// every undefined row of `a` split into connected parts of size >= 2.
    pub fn fiber_of(&self, a: usize) -> Result<Vec<usize>, OrbitError> {
        let t = &self.elements[a];
        let blocks = &self.big[t.base];
        let mut fixed: Vec<(Vec<usize>, Vec<Option<u32>>)> = Vec::new();
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for (bi, b) in blocks.iter().enumerate() {
            let row = &t.entries[bi * self.m..(bi + 1) * self.m];
            if row.iter().all(Option::is_none) {
                if b.len() > 10 {
                    return Err(OrbitError::SplitTooLarge(b.len()));
                }
                rows.push(b.clone());
            } else {
                fixed.push((b.clone(), row.to_vec()));
            }
        }
        // choices of splits per undefined row
        let mut per_row: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
        for r in &rows {
            let mut opts = Vec::new();
            for rg in all_set_partitions(r.len()) {
                let nb = rg.iter().max().map_or(0, |m| m + 1);
                let parts: Vec<Vec<usize>> = (0..nb).map(|b| (0..r.len()).filter(|&i| rg[i] == b).map(|i| r[i]).collect()).collect();
                if parts.iter().all(|p| p.len() >= 2 && self.bond.graph.connected(mask_of(p))) {
                    opts.push(parts);
                }
            }
            per_row.push(opts);
        }
        let n = self.bond.graph.n;
        let mut out = Vec::new();
        let mut choice = vec![0usize; rows.len()];
        loop {
            let mut new_blocks: Vec<Vec<usize>> = fixed.iter().map(|(b, _)| b.clone()).collect();
            for (ri, &c) in choice.iter().enumerate() {
                new_blocks.extend(per_row[ri][c].iter().cloned());
            }
            let covered: u64 = new_blocks.iter().fold(0, |acc, b| acc | mask_of(b));
            for v in 0..n {
                if covered >> v & 1 == 0 {
                    new_blocks.push(vec![v]);
                }
            }
            let part = canonical(new_blocks);
            let base = self.bond.index[&part];
            let mut entries = Vec::new();
            for b in &self.big[base] {
                match fixed.iter().find(|(fb, _)| fb == b) {
                    Some((_, row)) => entries.extend(row.iter().cloned()),
                    None => entries.extend(std::iter::repeat_n(None, self.m)),
                }
            }
            out.push(self.index[&Theta { base, entries }]);
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < per_row[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Whether sigma is a bijection onto the intersection lattice.
    pub fn sigma_is_bijective(&self) -> bool {
        (0..self.len()).all(|x| self.alpha(x) == x)
    }
}

/// Image under sigma of the joins of atoms (every element when `k >= 2`),
/// ordered by joins of canonical representatives.
#[derive(Clone, Debug)]
pub struct IntersectionLattice {
    poset: Arc<Poset>,
    alphas: Vec<usize>,
    sigma: Vec<Option<usize>>,
    codim: Vec<usize>,
}

impl IntersectionLattice {
    pub fn new(l: &OrbitLattice) -> Self {
        let p = l.poset();
        let atoms = p.up_covers(l.bottom()).to_vec();
        let mut reached = vec![false; l.len()];
        reached[l.bottom()] = true;
        let mut queue = vec![l.bottom()];
        while let Some(x) = queue.pop() {
            for &a in &atoms {
                let j = l.join(x, a);
                if !reached[j] {
                    reached[j] = true;
                    queue.push(j);
                }
            }
        }
        let mut alphas: Vec<usize> = (0..l.len()).filter(|&x| reached[x]).map(|x| l.alpha(x)).collect();
        alphas.sort_unstable();
        alphas.dedup();
        let pos: HashMap<usize, usize> = alphas.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let sigma: Vec<Option<usize>> =
            (0..l.len()).map(|x| if reached[x] { Some(pos[&l.alpha(x)]) } else { None }).collect();
        let labels = alphas.iter().map(|&a| l.label(a).to_string()).collect();
        let leq = |i: usize, j: usize| l.alpha(l.join(alphas[i], alphas[j])) == alphas[j];
        let poset = Arc::new(Poset::from_leq(labels, leq).expect("intersection order"));
        let codim = alphas.iter().map(|&a| l.codim(a)).collect();
        IntersectionLattice { poset, alphas, sigma, codim }
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    /// Canonical `L_k^m` representative of each element.
    pub fn alphas(&self) -> &[usize] {
        &self.alphas
    }

    /// `sigma(x)` for each element of `L_k^m` that is a join of atoms.
    pub fn sigma(&self) -> &[Option<usize>] {
        &self.sigma
    }

    pub fn codim(&self) -> &[usize] {
        &self.codim
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellular::{construct_cellular_form, Construction};

    fn lat(g: &Graph, k: u32, m: usize) -> OrbitLattice {
        OrbitLattice::new(g, k, m, DEFAULT_SIZE_LIMIT).unwrap()
    }

    #[test]
    fn bond_lattices() {
        assert_eq!(BondLattice::new(&Graph::complete(3)).len(), 5);
        let p = BondLattice::new(&Graph::path(3));
        assert_eq!(p.len(), 4);
        assert!(p.index_of(&vec![vec![0, 2], vec![1]]).is_none());
        assert_eq!(BondLattice::new(&Graph::new(3, &[]).unwrap()).len(), 1);
        assert_eq!(BondLattice::new(&Graph::complete(4)).len(), 15);
    }

    #[test]
    fn sizes() {
        assert_eq!(lat(&Graph::complete(2), 2, 2).len(), 10);
        assert_eq!(lat(&Graph::complete(3), 2, 2).len(), 53);
        assert_eq!(OrbitLattice::predicted_size(&Graph::complete(3), 2, 2), 53);
        // k = 1: fibers of size 2^{|I'| m}
        let l = lat(&Graph::complete(3), 1, 2);
        assert_eq!(l.len(), 1 + 3 * 4 + 4);
    }

    #[test]
    fn fiber_counts() {
        let l = lat(&Graph::complete(2), 2, 2);
        assert_eq!(l.fiber(1).len(), 9);
        let l = lat(&Graph::complete(3), 2, 1);
        let top = l.bond().len() - 1;
        assert_eq!(l.fiber(top).len(), 5);
    }

    #[test]
    fn join_examples() {
        let l = lat(&Graph::complete(3), 2, 1);
        let b = l.bond();
        let i12 = b.index_of(&vec![vec![0, 1], vec![2]]).unwrap();
        let i23 = b.index_of(&vec![vec![0], vec![1, 2]]).unwrap();
        let i13 = b.index_of(&vec![vec![0, 2], vec![1]]).unwrap();
        let th = Theta { base: i12, entries: vec![Some(0)] };
        let ps = Theta { base: i23, entries: vec![Some(1)] };
        let j = l.join_theta(&th, &ps);
        assert_eq!(j.base, b.len() - 1);
        assert_eq!(l.class_values(3, j.entries[0].unwrap()), vec![0, 0, 1]);
        // inconsistent triangle
        let a = l.join_theta(&Theta { base: i12, entries: vec![Some(0)] }, &Theta { base: i23, entries: vec![Some(0)] });
        let c = l.join_theta(&a, &Theta { base: i13, entries: vec![Some(1)] });
        assert_eq!(c.entries, vec![None]);
        assert_eq!(l.join_theta(&th, &th), th);
    }

    #[test]
    fn join_is_least_upper_bound() {
        for (g, k, m) in [(Graph::complete(3), 2, 2), (Graph::path(3), 3, 1), (Graph::complete(3), 3, 1)] {
            let l = lat(&g, k, m);
            let p = l.poset();
            for x in 0..l.len() {
                for y in 0..l.len() {
                    let j = l.join(x, y);
                    assert_eq!(Some(j), p.join(x, y).ok(), "{} v {}", l.label(x), l.label(y));
                    assert_eq!(l.projection(j), l.bond().join(l.projection(x), l.projection(y)));
                }
            }
        }
    }

    #[test]
    fn fibration_law() {
        let l = lat(&Graph::complete(3), 2, 2);
        let p = l.poset();
        let b = l.bond().poset();
        for x in 0..l.len() {
            for y in 0..l.len() {
                let want = b.leq(l.projection(x), l.projection(y)) && {
                    let r = l.restrict(y, l.projection(x));
                    l.theta(x).entries.iter().zip(&l.theta(r).entries).all(|(a, c)| c.is_none() || a == c)
                };
                assert_eq!(p.leq(x, y), want);
            }
        }
    }

    #[test]
    fn perm_sign_example() {
        // ? at (34, col 1) and ? at (12, col 2)
        let g = Graph::complete(4);
        let l = lat(&g, 2, 2);
        let b = l.bond();
        let i34 = b.index_of(&vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let i12 = b.index_of(&vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let th = l.index_of(&Theta { base: i34, entries: vec![None, Some(0)] }).unwrap();
        let ps = l.index_of(&Theta { base: i12, entries: vec![Some(0), None] }).unwrap();
        assert!(l.is_independent(th, ps));
        assert_eq!(l.perm_sign(th, ps).unwrap(), -1);
        assert_eq!(l.perm_sign(ps, th).unwrap(), 1);
        let full = l.index_of(&Theta { base: i12, entries: vec![Some(0), Some(1)] }).unwrap();
        assert_eq!(l.perm_sign(full, full).ok(), None);
        let th2 = l.index_of(&Theta { base: i34, entries: vec![Some(1), Some(0)] }).unwrap();
        assert_eq!(l.perm_sign(full, th2).unwrap(), 1);
    }

    #[test]
    fn bcp_ranks_and_membership() {
        let l = lat(&Graph::complete(2), 3, 1);
        let x = l.index_of(&Theta { base: 1, entries: vec![None] }).unwrap();
        assert_eq!(l.bcp_rank(x), 2);
        for v in l.bcp_basis(x) {
            assert!(l.bcp_contains(x, &v));
        }
        let eta = l.index_of(&Theta { base: 1, entries: vec![Some(1)] }).unwrap();
        let bad = BTreeMap::from([(eta, Int::from(1))]);
        assert!(!l.bcp_contains(x, &bad));
        assert!(l.bcp_coords(x, &bad).is_err());
        assert_eq!(l.bcp_rank(eta), 1);
        assert_eq!(l.bcp_basis(eta), vec![BTreeMap::from([(eta, Int::from(1))])]);
    }

    #[test]
    fn bcp_forms_are_cellular_forms() {
        for (g, k, m) in [(Graph::complete(2), 2, 2), (Graph::complete(3), 2, 2), (Graph::complete(2), 3, 2), (Graph::complete(3), 3, 1)] {
            let l = lat(&g, k, m);
            for base in 0..l.bond().len() {
                let (form, members) = l.bcp_form(base).unwrap();
                form.verify(true).unwrap();
                let c = construct_cellular_form(form.copresheaf()).unwrap();
                let Construction::Cellular(c) = c else { panic!("fiber not cellular") };
                for i in 0..members.len() {
                    assert_eq!(c.piece_rank(i), form.piece_rank(i));
                }
            }
        }
    }

    #[test]
    fn phi_product_examples() {
        let g = Graph::complete(4);
        let l = lat(&g, 2, 1);
        let b = l.bond();
        let i12 = b.index_of(&vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let i34 = b.index_of(&vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let th = l.index_of(&Theta { base: i12, entries: vec![None] }).unwrap();
        let ps = l.index_of(&Theta { base: i34, entries: vec![Some(1)] }).unwrap();
        let u = &l.bcp_basis(th)[0];
        let v = &l.bcp_basis(ps)[0];
        let (z, w) = l.phi_product(th, u, ps, v).unwrap().unwrap();
        let eta1 = l.completion(th, &[1]);
        let eta0 = l.completion(th, &[0]);
        let want = BTreeMap::from([(l.join(eta1, ps), Int::from(1)), (l.join(eta0, ps), Int::from(-1))]);
        assert_eq!(w, want);
        assert_eq!(l.r_f(z), 1);
        // dependent pair
        assert!(l.phi_product(th, u, th, u).unwrap().is_none());
    }

    #[test]
    fn sigma_on_k4() {
        let g = Graph::complete(4);
        let l = lat(&g, 2, 1);
        let top = l.bond().len() - 1;
        let a = l.index_of(&Theta { base: top, entries: vec![None] }).unwrap();
        assert_eq!(l.alpha(a), a);
        let f = l.fiber_of(a).unwrap();
        assert_eq!(f.len(), 4);
        for &x in &f {
            assert_eq!(l.alpha(x), a);
            assert!(l.poset().leq(x, a));
        }
        for x in 0..l.len() {
            assert!(l.fiber_of(l.alpha(x)).unwrap().contains(&x));
            assert_eq!(l.codim(l.alpha(x)), l.codim(x));
        }
        let p = IntersectionLattice::new(&l);
        for x in 0..l.len() {
            for y in 0..l.len() {
                let (sx, sy) = (p.sigma()[x].unwrap(), p.sigma()[y].unwrap());
                assert_eq!(p.sigma()[l.join(x, y)].unwrap(), p.poset().join(sx, sy).unwrap());
            }
        }
    }

    #[test]
    fn braid_case() {
        let l = lat(&Graph::complete(4), 1, 1);
        let p = IntersectionLattice::new(&l);
        assert_eq!(p.len(), 15);
        let l2 = lat(&Graph::complete(2), 2, 2);
        assert!(l2.sigma_is_bijective());
        assert_eq!(IntersectionLattice::new(&l2).len(), 10);
    }

    #[test]
    fn graph_json() {
        let g = Graph::from_json_str(r#"{"n": 3, "edges": [[1,2],[2,3]]}"#).unwrap();
        assert_eq!(g, Graph::path(3));
        assert_eq!(Graph::from_json_str(r#"{"complete": 3}"#).unwrap(), Graph::complete(3));
        assert!(Graph::from_json_str(r#"{"n": 2, "edges": [[1,3]]}"#).is_err());
        assert_eq!(Graph::from_json_str(&g.to_json().to_string()).unwrap(), g);
    }
}
