//! Orlik-Solomon algebra of a geometric lattice in the no-broken-circuit
//! basis, and its comparison with the cellular form of `(L, delta^0 Z)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::cellular::{self, CellularError, CellularForm, Construction};
use crate::linalg::{Int, IntMatrix};
use crate::poset::{Poset, PosetMorphism};
use crate::sheaf::{Co, Copresheaf, FHom};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OsError {
    #[error("lattice is not geometric: {0}")]
    NotGeometric(String),
    #[error("comparison with the cellular form failed: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Cellular(#[from] CellularError),
}

/// A monomial as increasing positions into the atom list.
pub type Monomial = Vec<usize>;

#[derive(Debug)]
pub struct OsAlgebra {
    lattice: Arc<Poset>,
    atoms: Vec<usize>,
    basis: Vec<Vec<Monomial>>,
    index: HashMap<Monomial, (usize, usize)>,
    broken: Vec<(u64, u64)>,
    memo: Mutex<HashMap<Monomial, BTreeMap<Monomial, Int>>>,
}

fn bits(m: &[usize]) -> u64 {
    m.iter().fold(0u64, |acc, &i| acc | (1 << i))
}

fn from_bits(b: u64) -> Monomial {
    (0..64).filter(|i| b >> i & 1 == 1).collect()
}

/// Sign of the permutation sorting `seq` (distinct entries).
fn sort_sign(seq: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_geometric(p: &Poset) -> Result<(), OsError> {
    let bad = |s: &str| Err(OsError::NotGeometric(s.into()));
    if p.bottom().is_none() || p.top().is_none() {
        return bad("no bottom or top");
    }
    if !p.is_graded() {
        return bad("not graded");
    }
    if !p.is_join_semilattice() {
        return bad("not a lattice");
    }
    // semimodular: two covers of z join to an element covering both
    for z in 0..p.len() {
        let up = p.up_covers(z);
        for (i, &x) in up.iter().enumerate() {
            for &y in &up[i + 1..] {
                let j = p.join(x, y).map_err(|e| OsError::NotGeometric(e.to_string()))?;
                if !p.is_cover(x, j) || !p.is_cover(y, j) {
                    return Err(OsError::NotGeometric(format!("not semimodular at {}", p.label(z))));
                }
            }
        }
    }
    let b = p.bottom().unwrap();
    let atoms = p.up_covers(b).to_vec();
    for x in 0..p.len() {
        if x == b {
            continue;
        }
        let mut j = b;
        for &a in &atoms {
            if p.leq(a, x) {
                j = p.join(j, a).expect("lattice");
            }
        }
        if j != x {
            return Err(OsError::NotGeometric(format!("{} is not a join of atoms", p.label(x))));
        }
    }
    Ok(())
}

impl OsAlgebra {
    /// Builds the nbc basis with atoms ordered lexicographically by label.
    pub fn new(lattice: Arc<Poset>) -> Result<Self, OsError> {
        check_geometric(&lattice)?;
        let p = &lattice;
        let b = p.bottom().unwrap();
        let mut atoms = p.up_covers(b).to_vec();
        atoms.sort_by(|&x, &y| p.label(x).cmp(p.label(y)));
        if atoms.len() > 63 {
            return Err(OsError::NotGeometric("too many atoms".into()));
        }
        let na = atoms.len();
        let top_rank = p.max_rank();
        let join_of = |s: u64| -> usize {
            (0..na).filter(|i| s >> i & 1 == 1).fold(b, |j, i| p.join(j, atoms[i]).expect("lattice"))
        };
        let independent = |s: u64| p.rank(join_of(s)) == s.count_ones() as usize;
        // subsets by size up to rank + 1
        let mut by_size: Vec<Vec<u64>> = vec![vec![0]];
        for size in 1..=(top_rank + 1).min(na) {
            let mut next = Vec::new();
            for &s in &by_size[size - 1] {
                let start = if s == 0 { 0 } else { 64 - s.leading_zeros() as usize };
                for i in start..na {
                    next.push(s | 1 << i);
                }
            }
            by_size.push(next);
        }
        let mut circuits = Vec::new();
        for level in &by_size[1..] {
            for &s in level {
                if independent(s) {
                    continue;
                }
                if (0..na).filter(|i| s >> i & 1 == 1).all(|i| independent(s & !(1 << i))) {
                    circuits.push(s);
                }
            }
        }
        let broken: Vec<(u64, u64)> = circuits.iter().map(|&c| (c & (c - 1), c)).collect();
        let mut basis: Vec<Vec<Monomial>> = vec![Vec::new(); p.len()];
        for level in &by_size {
            for &s in level {
                if independent(s) && !broken.iter().any(|&(bc, _)| s & bc == bc) {
                    basis[join_of(s)].push(from_bits(s));
                }
            }
        }
        for piece in &mut basis {
            piece.sort();
        }
        let mut index = HashMap::new();
        for (x, piece) in basis.iter().enumerate() {
            for (i, m) in piece.iter().enumerate() {
                index.insert(m.clone(), (x, i));
            }
        }
        Ok(OsAlgebra { lattice, atoms, basis, index, broken, memo: Mutex::new(HashMap::new()) })
    }

    pub fn lattice(&self) -> &Arc<Poset> {
        &self.lattice
    }

    /// Atom elements in the chosen order.
    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn piece(&self, x: usize) -> &[Monomial] {
        &self.basis[x]
    }

    pub fn piece_rank(&self, x: usize) -> usize {
        self.basis[x].len()
    }

    pub fn rank_vector(&self) -> Vec<usize> {
        let mut out = vec![0; self.lattice.max_rank() + 1];
        for x in 0..self.lattice.len() {
            out[self.lattice.rank(x)] += self.basis[x].len();
        }
        out
    }

    pub fn total_rank(&self) -> usize {
        self.basis.iter().map(Vec::len).sum()
    }

    pub fn join_of(&self, m: &[usize]) -> usize {
        let p = &self.lattice;
        m.iter().fold(p.bottom().unwrap(), |j, &i| p.join(j, self.atoms[i]).expect("lattice"))
    }

    fn is_independent(&self, m: &[usize]) -> bool {
        self.lattice.rank(self.join_of(m)) == m.len()
    }

    /// Sequence of atom positions as an nbc combination.
    pub fn straighten(&self, seq: &[usize]) -> BTreeMap<Monomial, Int> {
        let mut sorted = seq.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seq.len() || !self.is_independent(&sorted) {
            return BTreeMap::new();
        }
        let sign = sort_sign(seq);
        let mut out = self.straighten_sorted(&sorted);
        if sign < 0 {
            for v in out.values_mut() {
                *v = -v.clone();
            }
        }
        out
    }

    fn straighten_sorted(&self, m: &[usize]) -> BTreeMap<Monomial, Int> {
        if self.index.contains_key(m) {
            return BTreeMap::from([(m.to_vec(), Int::one())]);
        }
        if let Some(hit) = self.memo.lock().unwrap().get(m) {
            return hit.clone();
        }
        let s = bits(m);
        let &(bc, c) = self.broken.iter().find(|&&(bc, _)| s & bc == bc).expect("dependent or nbc");
        let rest = from_bits(s & !bc);
        let bmon = from_bits(bc);
        let mut lead = bmon.clone();
        lead.extend(&rest);
        let sign_b = sort_sign(&lead);
        // e_B = -sum_{i >= 1} (-1)^i e_{C - c_i}
        let cmon = from_bits(c);
        let mut out: BTreeMap<Monomial, Int> = BTreeMap::new();
        for i in 1..cmon.len() {
            let mut term: Vec<usize> = cmon.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &a)| a).collect();
            term.extend(&rest);
            let coef = if i % 2 == 1 { sign_b } else { -sign_b };
            for (mon, v) in self.straighten(&term) {
                *out.entry(mon).or_insert_with(Int::zero) += v * coef;
            }
        }
        out.retain(|_, v| !v.is_zero());
        self.memo.lock().unwrap().insert(m.to_vec(), out.clone());
        out
    }

    /// Product of basis monomial `i` of piece `x` with monomial `j` of piece
    /// `y`, as coordinates in the piece of `x v y`.
    pub fn multiply_basis(&self, x: usize, i: usize, y: usize, j: usize) -> (usize, Vec<Int>) {
        let z = self.lattice.join(x, y).expect("lattice");
        let mut seq = self.basis[x][i].clone();
        seq.extend(&self.basis[y][j]);
        (z, self.coords(z, &self.straighten(&seq)))
    }

    pub fn multiply(&self, x: usize, a: &[Int], y: usize, b: &[Int]) -> (usize, Vec<Int>) {
        let z = self.lattice.join(x, y).expect("lattice");
        let mut out = vec![Int::zero(); self.basis[z].len()];
        for (i, ai) in a.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, bj) in b.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                let (_, c) = self.multiply_basis(x, i, y, j);
                for (o, v) in out.iter_mut().zip(c) {
                    *o += v * ai * bj;
                }
            }
        }
        (z, out)
    }

    fn coords(&self, z: usize, comb: &BTreeMap<Monomial, Int>) -> Vec<Int> {
        let mut out = vec![Int::zero(); self.basis[z].len()];
        for (m, v) in comb {
            let (x, i) = self.index[m];
            debug_assert_eq!(x, z);
            out[i] = v.clone();
        }
        out
    }

    /// `d e_S = sum (-1)^i e_{S - s_i}` as a form of `(L, delta^0 Z)`.
    pub fn as_cellular_form(&self, g: Arc<Copresheaf>) -> Result<CellularForm, OsError> {
        let p = &self.lattice;
        let ranks: Vec<usize> = self.basis.iter().map(Vec::len).collect();
        let mut diff: HashMap<(usize, usize), IntMatrix> = HashMap::new();
        for (y, x) in p.covers() {
            diff.insert((y, x), IntMatrix::zeros(ranks[y], ranks[x]));
        }
        for x in 0..p.len() {
            for (col, m) in self.basis[x].iter().enumerate() {
                for i in 0..m.len() {
                    let face: Monomial = m.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &a)| a).collect();
                    let y = self.join_of(&face);
                    let sign = if i % 2 == 0 { Int::one() } else { -Int::one() };
                    for (mon, v) in self.straighten_sorted(&face) {
                        let (_, row) = self.index[&mon];
                        diff.get_mut(&(y, x)).expect("cover").add_at(row, col, &(v * &sign));
                    }
                }
            }
        }
        Ok(CellularForm::from_parts(g, ranks, diff)?)
    }
}

/// Result of comparing the nbc presentation with the constructed form.
#[derive(Clone, Debug)]
pub struct OsComparison {
    pub rank_vector: Vec<usize>,
    /// Per element, the matrix taking nbc coordinates to constructed-form coordinates.
    pub basis_change: Vec<IntMatrix>,
    pub products_checked: usize,
}

/// Constructs the form of `(L, delta^0 Z)`, relates it to the nbc form by the
/// unique morphism, and checks all structure constants of the product
/// morphism of `(join, star)` against nbc products.
pub fn os_vs_cellular(lattice: Arc<Poset>, check_products: bool) -> Result<OsComparison, OsError> {
    let os = OsAlgebra::new(lattice.clone())?;
    let p = &lattice;
    let bottom = p.bottom().unwrap();
    let g = Arc::new(Copresheaf::delta_at(lattice.clone(), bottom));
    let lambda = match cellular::construct_cellular_form(&g)? {
        Construction::Cellular(f) => f,
        Construction::NotCellular(nc) => return Err(OsError::Mismatch(nc.to_string())),
    };
    let osf = os.as_cellular_form(g.clone())?;
    osf.verify(false).map_err(|v| OsError::Mismatch(format!("nbc form at {}: {}", v.element, v.condition)))?;
    for x in 0..p.len() {
        if lambda.piece_rank(x) != os.piece_rank(x) {
            return Err(OsError::Mismatch(format!("piece rank at {}", p.label(x))));
        }
    }
    let id = PosetMorphism::identity(lattice.clone());
    let comps = (0..p.len()).map(|x| IntMatrix::identity(g.rank(x))).collect();
    let t = FHom::<Co>::new(id.clone(), g.clone(), g.clone(), comps).map_err(CellularError::from)?;
    let to_lambda = cellular::form_morphism(&id, &t, &osf, &lambda)?;
    let back = cellular::form_morphism(&id, &t, &lambda, &osf)?;
    for x in 0..p.len() {
        let r = os.piece_rank(x);
        if back.pieces[x].mul(&to_lambda.pieces[x]).map_err(CellularError::from)? != IntMatrix::identity(r) {
            return Err(OsError::Mismatch(format!("basis change not invertible at {}", p.label(x))));
        }
    }
    let mut checked = 0;
    if check_products {
        let jm = PosetMorphism::join_map(&lattice).map_err(|e| OsError::Mismatch(e.to_string()))?;
        let prod = jm.source().clone();
        let n = p.len();
        let star = FHom::<Co>::star(&jm, bottom * n + bottom, bottom).map_err(CellularError::from)?;
        let on_os = cellular::product_form(prod.clone(), &osf, &osf)?;
        let on_lambda = cellular::product_form(prod, &lambda, &lambda)?;
        let phi_os = cellular::form_morphism(&jm, &star, &on_os, &osf)?;
        let phi_l = cellular::form_morphism(&jm, &star, &on_lambda, &lambda)?;
        for x in 0..n {
            for y in 0..n {
                let z = jm.apply(x * n + y);
                let piece = &phi_os.pieces[x * n + y];
                for i in 0..os.piece_rank(x) {
                    for j in 0..os.piece_rank(y) {
                        let (z2, c) = os.multiply_basis(x, i, y, j);
                        debug_assert_eq!(z, z2);
                        let col = piece.column(i * os.piece_rank(y) + j);
                        if col != c {
                            return Err(OsError::Mismatch(format!(
                                "product {}.{} x {}.{}",
                                p.label(x),
                                i,
                                p.label(y),
                                j
                            )));
                        }
                        checked += 1;
                    }
                }
                // same morphism seen through the constructed basis
                let lhs = phi_l.pieces[x * n + y]
                    .mul(&to_lambda.pieces[x].kron(&to_lambda.pieces[y]))
                    .map_err(CellularError::from)?;
                let rhs = to_lambda.pieces[z].mul(piece).map_err(CellularError::from)?;
                if lhs != rhs {
                    return Err(OsError::Mismatch(format!("basis change at {} x {}", p.label(x), p.label(y))));
                }
            }
        }
    }
    Ok(OsComparison { rank_vector: os.rank_vector(), basis_change: to_lambda.pieces, products_checked: checked })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn partition_lattice(n: usize) -> Arc<Poset> {
        // set partitions as block-id vectors in restricted growth form
        let mut parts: Vec<Vec<usize>> = vec![vec![0]];
        for _ in 1..n {
            let mut next = Vec::new();
            for p in &parts {
                let mx = *p.iter().max().unwrap();
                for b in 0..=mx + 1 {
                    let mut q = p.clone();
                    q.push(b);
                    next.push(q);
                }
            }
            parts = next;
        }
        let label = |p: &Vec<usize>| {
            let nb = p.iter().max().unwrap() + 1;
            (0..nb)
                .map(|b| (0..n).filter(|&i| p[i] == b).map(|i| (i + 1).to_string()).collect::<String>())
                .collect::<Vec<_>>()
                .join("|")
        };
        let labels = parts.iter().map(label).collect();
        let finer = |a: &Vec<usize>, b: &Vec<usize>| (0..n).all(|i| (0..n).all(|j| a[i] != a[j] || b[i] == b[j]));
        Arc::new(Poset::from_leq(labels, |i, j| finer(&parts[i], &parts[j])).unwrap())
    }

    fn boolean(n: usize) -> Arc<Poset> {
        let labels: Vec<String> = (0..1usize << n).map(|s| format!("{s:0n$b}")).collect();
        Arc::new(Poset::from_leq(labels, |a, b| a & b == a).unwrap())
    }

    #[test]
    fn pi3_basis() {
        let os = OsAlgebra::new(partition_lattice(3)).unwrap();
        assert_eq!(os.rank_vector(), vec![1, 3, 2]);
        let top = os.lattice().top().unwrap();
        assert_eq!(os.piece(top), &[vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn pi4_ranks_and_mobius() {
        let p = partition_lattice(4);
        let os = OsAlgebra::new(p.clone()).unwrap();
        assert_eq!(os.rank_vector(), vec![1, 6, 11, 6]);
        assert_eq!(os.total_rank(), 24);
        let b = p.bottom().unwrap();
        for x in 0..p.len() {
            assert_eq!(os.piece_rank(x) as i64, p.mobius(b, x).abs());
        }
    }

    #[test]
    fn boolean_ranks() {
        assert_eq!(OsAlgebra::new(boolean(2)).unwrap().rank_vector(), vec![1, 2, 1]);
    }

    #[test]
    fn three_term_relation() {
        let os = OsAlgebra::new(partition_lattice(3)).unwrap();
        // atoms: 0 = e12, 1 = e13, 2 = e23
        let r = os.straighten(&[1, 2]);
        assert_eq!(r, BTreeMap::from([(vec![0, 1], Int::from(-1)), (vec![0, 2], Int::from(1))]));
        assert!(os.straighten(&[0, 0]).is_empty());
        assert!(os.straighten(&[0, 1, 2]).is_empty());
    }

    #[test]
    fn unit_and_anticommutativity() {
        let p = partition_lattice(4);
        let os = OsAlgebra::new(p.clone()).unwrap();
        let b = p.bottom().unwrap();
        for x in 0..p.len() {
            for i in 0..os.piece_rank(x) {
                let (z, c) = os.multiply_basis(b, 0, x, i);
                assert_eq!(z, x);
                assert!(c.iter().enumerate().all(|(j, v)| *v == Int::from((i == j) as i64)));
                for y in 0..p.len() {
                    for j in 0..os.piece_rank(y) {
                        let (_, ab) = os.multiply_basis(x, i, y, j);
                        let (_, ba) = os.multiply_basis(y, j, x, i);
                        let sign = if (p.rank(x) * p.rank(y)).is_multiple_of(2) { 1 } else { -1 };
                        let ba: Vec<Int> = ba.into_iter().map(|v| v * sign).collect();
                        assert_eq!(ab, ba);
                    }
                }
            }
        }
    }

    #[test]
    fn not_geometric() {
        let labels = ["0", "a", "b", "c", "1"].iter().map(|s| s.to_string()).collect();
        // pentagon: 0 < a < b < 1, 0 < c < 1
        let p = Poset::from_covers(labels, &[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)], None);
        if let Ok(p) = p {
            assert!(matches!(OsAlgebra::new(Arc::new(p)), Err(OsError::NotGeometric(_))));
        }
    }

    #[test]
    fn comparison_pi3() {
        let c = os_vs_cellular(partition_lattice(3), true).unwrap();
        assert_eq!(c.rank_vector, vec![1, 3, 2]);
        assert!(c.products_checked > 0);
        let c = os_vs_cellular(boolean(2), true).unwrap();
        assert_eq!(c.rank_vector, vec![1, 2, 1]);
    }
}
