//! Brute-force Tor over a poset: the chain complex `K_*(P; G, F)` spanned by
//! chains `p_0 < ... < p_n` with coefficients in `G(p_0) (x) F(p_n)`, its
//! induced maps, shuffle cross products and the join product of classes.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{self, ChainComplex, HomologySummary, Int, IntMatrix, LinalgError, UniqueSolver};
use crate::poset::{Poset, PosetError};
use crate::sheaf::{Co, Copresheaf, FHom, Pre, Presheaf, SheafError};

pub const DEFAULT_ORACLE_LIMIT: usize = 100;

/// Largest dense boundary matrix the oracle will allocate.
pub const MAX_BOUNDARY_ENTRIES: usize = 8_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorError {
    #[error("poset has {size} elements, oracle limit is {limit}")]
    OracleTooLarge { size: usize, limit: usize },
    #[error("boundary in degree {degree} would be {rows} x {cols}")]
    ComplexTooLarge { degree: usize, rows: usize, cols: usize },
    #[error("presheaf and copresheaf live on different posets")]
    BaseMismatch,
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("classes do not form a basis of homology in degree {degree}: {reason}")]
    NotABasis { degree: usize, reason: String },
    #[error("cell {0} is not part of the complex")]
    UnknownCell(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// Basis element `(p_0 < ... < p_n, g_i (x) f_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KCell {
    pub chain: Vec<usize>,
    pub g: usize,
    pub f: usize,
}

impl KCell {
    pub fn degree(&self) -> usize {
        self.chain.len() - 1
    }
}

/// Sparse element of `K_*`.
pub type KChain = BTreeMap<KCell, Int>;

fn add_to(c: &mut KChain, cell: KCell, v: Int) {
    if v.is_zero() {
        return;
    }
    match c.entry(cell) {
        Entry::Vacant(e) => {
            e.insert(v);
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += v;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

pub fn chain_degree(c: &KChain) -> Option<usize> {
    c.keys().next().map(KCell::degree)
}

struct MapCache<'a> {
    g: &'a Copresheaf,
    f: &'a Presheaf,
    ext: HashMap<(usize, usize), IntMatrix>,
    res: HashMap<(usize, usize), IntMatrix>,
}

impl<'a> MapCache<'a> {
    fn new(g: &'a Copresheaf, f: &'a Presheaf) -> Self {
        MapCache { g, f, ext: HashMap::new(), res: HashMap::new() }
    }

    fn ext(&mut self, a: usize, b: usize) -> &IntMatrix {
        let g = self.g;
        self.ext.entry((a, b)).or_insert_with(|| g.map_between(a, b))
    }

    fn res(&mut self, a: usize, b: usize) -> &IntMatrix {
        let f = self.f;
        self.res.entry((a, b)).or_insert_with(|| f.map_between(a, b))
    }

    fn boundary(&mut self, cell: &KCell) -> Vec<(KCell, Int)> {
        let ch = &cell.chain;
        let n = ch.len() - 1;
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let e = self.ext(ch[0], ch[1]);
        for i in 0..e.rows() {
            let v = e.get(i, cell.g);
            if !v.is_zero() {
                out.push((KCell { chain: ch[1..].to_vec(), g: i, f: cell.f }, v.clone()));
            }
        }
        for i in 1..n {
            let mut c = ch.clone();
            c.remove(i);
            let s = if i % 2 == 0 { Int::one() } else { -Int::one() };
            out.push((KCell { chain: c, g: cell.g, f: cell.f }, s));
        }
        let r = self.res(ch[n - 1], ch[n]);
        let sign = if n.is_multiple_of(2) { Int::one() } else { -Int::one() };
        for i in 0..r.rows() {
            let v = r.get(i, cell.f);
            if !v.is_zero() {
                out.push((KCell { chain: ch[..n].to_vec(), g: cell.g, f: i }, &sign * v));
            }
        }
        out
    }
}

/// The complex `K_*(P; G, F)` computing `Tor^P_*(F, G)`.
#[derive(Clone, Debug)]
pub struct KComplex {
    cells: Vec<Vec<KCell>>,
    index: Vec<HashMap<KCell, usize>>,
    complex: ChainComplex,
}

impl KComplex {
    pub fn build(f: &Presheaf, g: &Copresheaf, limit: usize) -> Result<Self, TorError> {
        let p = g.base();
        if !std::sync::Arc::ptr_eq(p, f.base()) && p.len() != f.base().len() {
            return Err(TorError::BaseMismatch);
        }
        if p.len() > limit {
            return Err(TorError::OracleTooLarge { size: p.len(), limit });
        }
        let groups = p.chains_between(&g.support(), &f.support());
        let mut cells: Vec<Vec<KCell>> = Vec::with_capacity(groups.len());
        for group in &groups {
            let mut cs = Vec::new();
            for ch in group {
                for gi in 0..g.rank(ch[0]) {
                    for fi in 0..f.rank(*ch.last().unwrap()) {
                        cs.push(KCell { chain: ch.clone(), g: gi, f: fi });
                    }
                }
            }
            cells.push(cs);
        }
        if cells.is_empty() {
            cells.push(Vec::new());
        }
        let index: Vec<HashMap<KCell, usize>> = cells
            .iter()
            .map(|cs| cs.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect())
            .collect();
        for n in 1..cells.len() {
            let (rows, cols) = (cells[n - 1].len(), cells[n].len());
            if rows.saturating_mul(cols) > MAX_BOUNDARY_ENTRIES {
                return Err(TorError::ComplexTooLarge { degree: n, rows, cols });
            }
        }
        let mut cache = MapCache::new(g, f);
        let mut bds = Vec::new();
        for n in 1..cells.len() {
            let mut d = IntMatrix::zeros(cells[n - 1].len(), cells[n].len());
            for (j, cell) in cells[n].iter().enumerate() {
                for (tgt, v) in cache.boundary(cell) {
                    let i = *index[n - 1].get(&tgt).expect("boundary stays inside the complex");
                    d.add_at(i, j, &v);
                }
            }
            bds.push(d);
        }
        let dims = cells.iter().map(Vec::len).collect();
        let complex = ChainComplex::new(dims, bds)?;
        Ok(KComplex { cells, index, complex })
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn cells(&self, n: usize) -> &[KCell] {
        self.cells.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn top_degree(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn homology(&self) -> HomologySummary {
        linalg::homology(&self.complex)
    }

    pub fn homology_mod2(&self) -> Vec<usize> {
        linalg::homology_mod2(&self.complex)
    }

    /// Coordinates of a homogeneous chain in the cell basis of its degree.
    pub fn coordinates(&self, c: &KChain) -> Result<(usize, Vec<Int>), TorError> {
        let n = chain_degree(c).unwrap_or(0);
        let mut v = vec![Int::zero(); self.cells(n).len()];
        for (cell, x) in c {
            if cell.degree() != n {
                return Err(TorError::UnknownCell(format!("{:?} (mixed degrees)", cell.chain)));
            }
            let i = self
                .index
                .get(n)
                .and_then(|m| m.get(cell))
                .ok_or_else(|| TorError::UnknownCell(format!("{:?}", cell.chain)))?;
            v[*i] += x;
        }
        Ok((n, v))
    }

    pub fn boundary_vec(&self, n: usize, v: &[Int]) -> Vec<Int> {
        match self.complex.boundary(n) {
            Some(d) => d.mul_vec(v).expect("shape"),
            None => Vec::new(),
        }
    }

    pub fn is_cycle(&self, c: &KChain) -> Result<bool, TorError> {
        let (n, v) = self.coordinates(c)?;
        Ok(self.boundary_vec(n, &v).iter().all(Zero::is_zero))
    }
}

/// `Tor^P_*(F, G)` with the size guard.
pub fn tor(f: &Presheaf, g: &Copresheaf, limit: usize) -> Result<HomologySummary, TorError> {
    Ok(KComplex::build(f, g, limit)?.homology())
}

/// Boundary of a sparse chain computed straight from the sheaves.
pub fn boundary(f: &Presheaf, g: &Copresheaf, c: &KChain) -> KChain {
    let mut cache = MapCache::new(g, f);
    let mut out = KChain::new();
    for (cell, x) in c {
        for (t, v) in cache.boundary(cell) {
            add_to(&mut out, t, v * x);
        }
    }
    out
}

/// Chain-level map `(k, t)_#`; chains whose image repeats an element die.
pub fn push_chain(k: &FHom<Pre>, t: &FHom<Co>, c: &KChain) -> KChain {
    let f = k.morphism();
    let mut out = KChain::new();
    for (cell, x) in c {
        let img: Vec<usize> = cell.chain.iter().map(|&p| f.apply(p)).collect();
        if img.iter().tuple_windows().any(|(a, b)| a == b) {
            continue;
        }
        let tg = t.component(cell.chain[0]);
        let kf = k.component(*cell.chain.last().unwrap());
        for i in 0..tg.rows() {
            let a = tg.get(i, cell.g);
            if a.is_zero() {
                continue;
            }
            for j in 0..kf.rows() {
                let b = kf.get(j, cell.f);
                if !b.is_zero() {
                    add_to(&mut out, KCell { chain: img.clone(), g: i, f: j }, a * b * x);
                }
            }
        }
    }
    out
}

/// Matrices of `(k, t)_#: K_n(P; G, F) -> K_n(Q; H, E)` for every degree
/// of the source complex.
pub fn induced_tor_map(
    k: &FHom<Pre>,
    t: &FHom<Co>,
    src: &KComplex,
    dst: &KComplex,
) -> Result<Vec<IntMatrix>, TorError> {
    let mut out = Vec::new();
    for n in 0..=src.top_degree() {
        let mut m = IntMatrix::zeros(dst.cells(n).len(), src.cells(n).len());
        for (j, cell) in src.cells(n).iter().enumerate() {
            let mut single = KChain::new();
            single.insert(cell.clone(), Int::one());
            for (tc, v) in push_chain(k, t, &single) {
                let i = dst
                    .index
                    .get(n)
                    .and_then(|ix| ix.get(&tc))
                    .ok_or_else(|| TorError::UnknownCell(format!("{:?}", tc.chain)))?;
                m.add_at(*i, j, &v);
            }
        }
        out.push(m);
    }
    Ok(out)
}

/// Lattice paths of a `(p, q)`-shuffle with their signs. Step `s` moves the
/// first coordinate when `moves[s]` is true.
pub fn shuffles(p: usize, q: usize) -> Vec<(Vec<(usize, usize)>, i32)> {
    let mut out = Vec::new();
    for first in (0..p + q).combinations(p) {
        let mut path = Vec::with_capacity(p + q + 1);
        let (mut a, mut b) = (0, 0);
        path.push((0, 0));
        let mut mark = vec![false; p + q];
        for &s in &first {
            mark[s] = true;
        }
        for &m in &mark {
            if m {
                a += 1;
            } else {
                b += 1;
            }
            path.push((a, b));
        }
        let mut inv = 0usize;
        for i in 0..p + q {
            for j in 0..i {
                if mark[i] && !mark[j] {
                    inv += 1;
                }
            }
        }
        out.push((path, if inv.is_multiple_of(2) { 1 } else { -1 }));
    }
    out
}

/// Shuffle cross product into `K_*(P x Q; G x H, F x E)`. Product element
/// `(x, y)` is `x * nq + y`; coefficient indices follow the tensor order of
/// `Sheaf::product`, which needs the ranks of the second factor.
pub fn cross_chain(
    a: &KChain,
    b: &KChain,
    nq: usize,
    rank_g2: impl Fn(usize) -> usize,
    rank_f2: impl Fn(usize) -> usize,
) -> KChain {
    let mut out = KChain::new();
    let mut cache: HashMap<(usize, usize), Vec<(Vec<(usize, usize)>, i32)>> = HashMap::new();
    for (ca, xa) in a {
        for (cb, xb) in b {
            let (p, q) = (ca.degree(), cb.degree());
            let sh = cache.entry((p, q)).or_insert_with(|| shuffles(p, q));
            let g = ca.g * rank_g2(cb.chain[0]) + cb.g;
            let f = ca.f * rank_f2(*cb.chain.last().unwrap()) + cb.f;
            let coef = xa * xb;
            for (path, s) in sh.iter() {
                let chain = path.iter().map(|&(i, j)| ca.chain[i] * nq + cb.chain[j]).collect();
                add_to(&mut out, KCell { chain, g, f }, &coef * Int::from(*s));
            }
        }
    }
    out
}

/// Join product of classes in `Tor^P(delta_x Z, delta^M Z)` and
/// `Tor^P(delta_y Z, delta^M Z)` at chain level. Returns `None` when
/// `codim(x) + codim(y) != codim(x v y)`, where the product vanishes.
pub fn oracle_cup(
    p: &Poset,
    codim: &[usize],
    x: usize,
    y: usize,
    cx: &KChain,
    cy: &KChain,
) -> Result<Option<(usize, KChain)>, TorError> {
    let z = p.join(x, y)?;
    if codim[x] + codim[y] != codim[z] {
        return Ok(None);
    }
    let n = p.len();
    let cross = cross_chain(cx, cy, n, |_| 1, |_| 1);
    let mut out = KChain::new();
    for (cell, v) in cross {
        let mut img = Vec::with_capacity(cell.chain.len());
        for &e in &cell.chain {
            img.push(p.join(e / n, e % n)?);
        }
        if img.iter().tuple_windows().any(|(a, b)| a == b) {
            continue;
        }
        add_to(&mut out, KCell { chain: img, g: 0, f: 0 }, v);
    }
    Ok(Some((z, out)))
}

/// Expresses homology classes of one degree in a chosen basis of cycles.
#[derive(Clone, Debug)]
pub struct CycleCoordinates {
    degree: usize,
    functionals: Option<IntMatrix>,
    solver: Option<UniqueSolver>,
    basis_len: usize,
}

impl CycleCoordinates {
    /// Checks that `basis` is a Z-basis of `H_degree` of `kc`.
    pub fn new(kc: &KComplex, degree: usize, basis: &[KChain]) -> Result<Self, TorError> {
        let h = kc.homology();
        let betti = h.betti.get(degree).copied().unwrap_or(0);
        let tors = h.torsion.get(degree).map_or(0, Vec::len);
        if betti != basis.len() || tors != 0 {
            return Err(TorError::NotABasis {
                degree,
                reason: format!("homology has rank {betti} and {tors} torsion factors, got {} classes", basis.len()),
            });
        }
        let width = kc.cells(degree).len();
        let mut cols = Vec::with_capacity(basis.len());
        for b in basis {
            let (n, v) = kc.coordinates(b)?;
            if (n != degree && !b.is_empty()) || !kc.boundary_vec(degree, &v).iter().all(Zero::is_zero) {
                return Err(TorError::NotACycle);
            }
            cols.push(v);
        }
        // functionals vanishing on boundaries; none needed when nothing maps in
        let functionals = match kc.complex().boundary(degree + 1) {
            Some(d) if d.cols() > 0 => {
                let k = linalg::kernel_basis(&d.transpose());
                Some(IntMatrix::from_row_vecs(k.len(), width, &k))
            }
            _ => None,
        };
        let bm = IntMatrix::from_columns(width, &cols);
        let m = match &functionals {
            Some(f) => f.mul(&bm)?,
            None => bm,
        };
        let solver = if basis.is_empty() {
            None
        } else {
            if !linalg::is_saturated_injective(&m) {
                return Err(TorError::NotABasis { degree, reason: "classes do not span homology".into() });
            }
            Some(UniqueSolver::new(&m)?)
        };
        Ok(CycleCoordinates { degree, functionals, solver, basis_len: basis.len() })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coordinates of the class of the cycle `c`.
    pub fn decompose(&self, kc: &KComplex, c: &KChain) -> Result<Vec<Int>, TorError> {
        if c.is_empty() {
            return Ok(vec![Int::zero(); self.basis_len]);
        }
        let (n, v) = kc.coordinates(c)?;
        if n != self.degree || !kc.boundary_vec(n, &v).iter().all(Zero::is_zero) {
            return Err(TorError::NotACycle);
        }
        let rhs = match &self.functionals {
            Some(f) => f.mul_vec(&v)?,
            None => v,
        };
        match &self.solver {
            Some(s) => Ok(s.solve(&rhs)?),
            None => {
                if rhs.iter().all(Zero::is_zero) {
                    Ok(Vec::new())
                } else {
                    Err(TorError::NotABasis { degree: n, reason: "nonzero class in zero homology".into() })
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Complex,
    Real,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Complex => "complex",
            Mode::Real => "real",
        })
    }
}

/// One summand `Tor_n(delta_x Z, delta^M Z)` placed in cohomological degree.
#[derive(Clone, Debug)]
pub struct GmSummand {
    pub element: usize,
    pub tor_degree: usize,
    pub degree: usize,
    pub rank: usize,
    pub torsion: Vec<Int>,
}

/// Additive cohomology of the complement of an arrangement from its
/// intersection poset. Complex mode uses `2 codim(x) - n`, real mode
/// `codim(x) - n` with Z/2 coefficients.
pub fn gm_cohomology(
    p: &std::sync::Arc<Poset>,
    codim: &[usize],
    ambient: usize,
    mode: Mode,
    limit: usize,
) -> Result<Vec<GmSummand>, TorError> {
    if p.len() > limit {
        return Err(TorError::OracleTooLarge { size: p.len(), limit });
    }
    let g = Copresheaf::delta_at(p.clone(), ambient);
    let mut out = Vec::new();
    for x in 0..p.len() {
        if !p.leq(ambient, x) {
            continue;
        }
        let f = Presheaf::delta_at(p.clone(), x);
        let kc = KComplex::build(&f, &g, limit)?;
        match mode {
            Mode::Complex => {
                let h = kc.homology();
                for n in 0..h.betti.len() {
                    if h.is_zero_in(n) {
                        continue;
                    }
                    out.push(GmSummand {
                        element: x,
                        tor_degree: n,
                        degree: 2 * codim[x] - n,
                        rank: h.betti[n],
                        torsion: h.torsion[n].clone(),
                    });
                }
            }
            Mode::Real => {
                for (n, &r) in kc.homology_mod2().iter().enumerate() {
                    if r > 0 {
                        out.push(GmSummand { element: x, tor_degree: n, degree: codim[x] - n, rank: r, torsion: Vec::new() });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Free ranks by cohomological degree.
pub fn gm_poincare(summands: &[GmSummand]) -> Vec<usize> {
    let top = summands.iter().map(|s| s.degree).max().unwrap_or(0);
    let mut out = vec![0usize; top + 1];
    for s in summands {
        out[s.degree] += s.rank;
    }
    out
}

/// Supports used by the K complex: elements with nonzero stalks.
pub fn support_of(ranks: &[usize]) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(ranks.len());
    for (i, &r) in ranks.iter().enumerate() {
        if r > 0 {
            s.insert(i);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::PosetMorphism;
    use crate::sheaf::scalar;
    use std::sync::Arc;

    fn boolean(n: usize) -> Arc<Poset> {
        let labels: Vec<String> = (0..1usize << n).map(|s| format!("{s:0n$b}")).collect();
        Arc::new(Poset::from_leq(labels, |a, b| a & b == a).unwrap())
    }

    #[test]
    fn boolean_top_against_bottom() {
        let b = boolean(2);
        let f = Presheaf::delta_at(b.clone(), 3);
        let g = Copresheaf::delta_at(b.clone(), 0);
        let h = tor(&f, &g, 100).unwrap().trimmed();
        assert_eq!(h.betti, vec![0, 0, 1]);
        assert!(h.is_free());
    }

    #[test]
    fn torsion_from_multiplication() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let p = Arc::new(Poset::from_covers(labels, &[(0, 1)], Some(vec![0, 1])).unwrap());
        let mut maps = HashMap::new();
        maps.insert((0, 1), scalar(2));
        let g = Copresheaf::new(p.clone(), vec![1, 1], maps).unwrap();
        let f = Presheaf::delta_at(p, 1);
        let h = tor(&f, &g, 100).unwrap();
        assert_eq!(h.betti, vec![0, 0]);
        assert_eq!(h.torsion[0], vec![Int::from(2)]);
    }

    #[test]
    fn size_guard() {
        let b = boolean(4);
        let f = Presheaf::delta_at(b.clone(), 15);
        let g = Copresheaf::delta_at(b.clone(), 0);
        assert_eq!(tor(&f, &g, 10).unwrap_err(), TorError::OracleTooLarge { size: 16, limit: 10 });
    }

    #[test]
    fn shuffle_signs() {
        let s = shuffles(1, 1);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0], (vec![(0, 0), (1, 0), (1, 1)], 1));
        assert_eq!(s[1], (vec![(0, 0), (0, 1), (1, 1)], -1));
        assert_eq!(shuffles(2, 2).len(), 6);
    }

    #[test]
    fn codim_toy_arrangement() {
        // one codimension-2 subspace in C^2
        let labels = vec!["M".to_string(), "V".to_string()];
        let p = Arc::new(Poset::from_covers(labels, &[(0, 1)], Some(vec![0, 1])).unwrap());
        let s = gm_cohomology(&p, &[0, 2], 0, Mode::Complex, 100).unwrap();
        assert_eq!(gm_poincare(&s), vec![1, 0, 0, 1]);
    }

    fn chain_of(cells: &[(&[usize], i64)]) -> KChain {
        cells
            .iter()
            .map(|(c, v)| (KCell { chain: c.to_vec(), g: 0, f: 0 }, Int::from(*v)))
            .collect()
    }

    #[test]
    fn cross_product_is_leibniz_on_booleans() {
        let b = boolean(1);
        let f = Presheaf::delta_at(b.clone(), 1);
        let g = Copresheaf::delta_at(b.clone(), 0);
        let c = chain_of(&[(&[0, 1], 1)]);
        let prod = Arc::new(Poset::product(&b, &b));
        let ff = Presheaf::product(prod.clone(), &f, &f).unwrap();
        let gg = Copresheaf::product(prod.clone(), &g, &g).unwrap();
        let x = cross_chain(&c, &c, 2, |_| 1, |_| 1);
        assert_eq!(x.len(), 2);
        assert!(boundary(&ff, &gg, &x).is_empty());
    }

    #[test]
    fn induced_map_commutes_with_boundary() {
        let b = boolean(2);
        let j = PosetMorphism::join_map(&b).unwrap();
        let prod = j.source().clone();
        let x = 4 + 2; // (01, 10) joins to 11
        let k = FHom::<Pre>::star(&j, x, 3).unwrap();
        let bottom = 0;
        let t = FHom::<Co>::star(&j, bottom, 0).unwrap();
        let src = KComplex::build(k.source(), t.source(), 100).unwrap();
        let dst = KComplex::build(k.target(), t.target(), 100).unwrap();
        let maps = induced_tor_map(&k, &t, &src, &dst).unwrap();
        for n in 1..maps.len().min(dst.top_degree() + 1) {
            let (Some(ds), Some(dd)) = (src.complex().boundary(n), dst.complex().boundary(n)) else {
                continue;
            };
            let lhs = dd.mul(&maps[n]).unwrap();
            let rhs = maps[n - 1].mul(ds).unwrap();
            assert_eq!(lhs, rhs);
        }
        assert_eq!(prod.len(), 16);
    }

    #[test]
    fn oracle_cup_on_boolean_atoms() {
        let b = boolean(2);
        let codim = [0, 1, 1, 2];
        let a1 = chain_of(&[(&[0, 1], 1)]);
        let a2 = chain_of(&[(&[0, 2], 1)]);
        let (z, c) = oracle_cup(&b, &codim, 1, 2, &a1, &a2).unwrap().unwrap();
        assert_eq!(z, 3);
        let (z2, c2) = oracle_cup(&b, &codim, 2, 1, &a2, &a1).unwrap().unwrap();
        assert_eq!(z2, 3);
        // degree one classes anticommute
        let neg: KChain = c2.iter().map(|(k, v)| (k.clone(), -v)).collect();
        assert_eq!(c, neg);
        assert!(oracle_cup(&b, &codim, 1, 1, &a1, &a1).unwrap().is_none());
    }

    #[test]
    fn decomposition_in_boolean_top() {
        let b = boolean(2);
        let f = Presheaf::delta_at(b.clone(), 3);
        let g = Copresheaf::delta_at(b.clone(), 0);
        let kc = KComplex::build(&f, &g, 100).unwrap();
        let cyc = chain_of(&[(&[0, 1, 3], 1), (&[0, 2, 3], -1)]);
        let cc = CycleCoordinates::new(&kc, 2, std::slice::from_ref(&cyc)).unwrap();
        let twice: KChain = cyc.iter().map(|(k, v)| (k.clone(), v * Int::from(-2))).collect();
        assert_eq!(cc.decompose(&kc, &twice).unwrap(), vec![Int::from(-2)]);
        let doubled: KChain = cyc.iter().map(|(k, v)| (k.clone(), v * Int::from(2))).collect();
        assert!(CycleCoordinates::new(&kc, 2, &[doubled]).is_err());
    }
}
