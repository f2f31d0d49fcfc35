//! Cohomology ring of `F_{Z_k^m}(C^m, Gamma)` (and the associated graded of
//! the real `Z_2` case): additive basis graded by `L_k^m`, structure
//! constants, and cross-checks against the Tor oracle.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::Int;
use crate::orbit::{Graph, IntersectionLattice, OrbitError, OrbitLattice, DEFAULT_SIZE_LIMIT};
use crate::os_algebra::{OsAlgebra, OsError};
use crate::sheaf::{Copresheaf, Presheaf};
use crate::tor::{self, CycleCoordinates, KCell, KChain, KComplex, Mode, TorError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("ring structure needs m > 1 (got m = {0})")]
    UnsupportedM(usize),
    #[error("real mode needs k = 2 (got k = {0})")]
    UnsupportedK(u32),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Os(#[from] OsError),
    #[error(transparent)]
    Tor(#[from] TorError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisElement {
    pub grading: usize,
    pub os_index: usize,
    pub bcp_index: usize,
    pub degree: usize,
}

/// Sparse combination of basis indices.
pub type Combination = Vec<(usize, Int)>;

#[derive(Debug)]
pub struct RingPresentation {
    lattice: Arc<OrbitLattice>,
    os: Arc<OsAlgebra>,
    mode: Mode,
    basis: Vec<BasisElement>,
    position: HashMap<(usize, usize, usize), usize>,
    bcp: Vec<Vec<BTreeMap<usize, Int>>>,
    products: Option<Vec<Vec<Combination>>>,
}

fn sign(odd: bool) -> Int {
    if odd {
        -Int::one()
    } else {
        Int::one()
    }
}

impl RingPresentation {
    /// Additive basis and, when `with_products`, all structure constants.
    pub fn build(graph: &Graph, k: u32, m: usize, mode: Mode, with_products: bool) -> Result<Self, RingError> {
        if mode == Mode::Real && k != 2 {
            return Err(RingError::UnsupportedK(k));
        }
        if m == 1 && with_products {
            return Err(RingError::UnsupportedM(m));
        }
        let lattice = Arc::new(OrbitLattice::new(graph, k, m, DEFAULT_SIZE_LIMIT)?);
        let os = Arc::new(OsAlgebra::new(lattice.bond().poset().clone())?);
        Self::assemble(lattice, os, mode, with_products)
    }

    pub fn assemble(
        lattice: Arc<OrbitLattice>,
        os: Arc<OsAlgebra>,
        mode: Mode,
        with_products: bool,
    ) -> Result<Self, RingError> {
        let l = &lattice;
        let bcp: Vec<Vec<BTreeMap<usize, Int>>> = (0..l.len()).map(|x| l.bcp_basis(x)).collect();
        let m = l.m();
        let degree = |x: usize| match mode {
            Mode::Complex => (2 * m - 1) * l.r_b(x) + l.r_f(x),
            Mode::Real => (m - 1) * l.r_b(x),
        };
        let mut basis = Vec::new();
        for x in 0..l.len() {
            for oi in 0..os.piece_rank(l.projection(x)) {
                for bi in 0..bcp[x].len() {
                    basis.push(BasisElement { grading: x, os_index: oi, bcp_index: bi, degree: degree(x) });
                }
            }
        }
        basis.sort_by(|a, b| {
            (a.degree, l.label(a.grading), a.os_index, a.bcp_index).cmp(&(b.degree, l.label(b.grading), b.os_index, b.bcp_index))
        });
        let position = basis.iter().enumerate().map(|(i, b)| ((b.grading, b.os_index, b.bcp_index), i)).collect();
        let mut r = RingPresentation { lattice, os, mode, basis, position, bcp, products: None };
        if with_products {
            if r.lattice.m() == 1 {
                return Err(RingError::UnsupportedM(1));
            }
            let n = r.basis.len();
            let table: Result<Vec<Vec<Combination>>, RingError> = (0..n)
                .into_par_iter()
                .map(|i| (0..n).map(|j| r.compute_product(i, j)).collect())
                .collect();
            r.products = Some(table?);
        }
        Ok(r)
    }

    pub fn lattice(&self) -> &Arc<OrbitLattice> {
        &self.lattice
    }

    pub fn os(&self) -> &Arc<OsAlgebra> {
        &self.os
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn has_products(&self) -> bool {
        self.products.is_some()
    }

    pub fn index_of(&self, grading: usize, os_index: usize, bcp_index: usize) -> Option<usize> {
        self.position.get(&(grading, os_index, bcp_index)).copied()
    }

    /// Basis indices of one grading, in basis order.
    pub fn grading_basis(&self, x: usize) -> Vec<usize> {
        (0..self.basis.len()).filter(|&i| self.basis[i].grading == x).collect()
    }

    pub fn bcp_vector(&self, i: usize) -> &BTreeMap<usize, Int> {
        let b = &self.basis[i];
        &self.bcp[b.grading][b.bcp_index]
    }

    /// Rank of the piece of grading `x`.
    pub fn piece_rank(&self, x: usize) -> usize {
        self.os.piece_rank(self.lattice.projection(x)) * self.bcp[x].len()
    }

    /// `|mu(0, pi(x))| * prod (k^{|p| - 1} - 1)` from the lattice alone.
    pub fn formula_rank(&self, x: usize) -> usize {
        let l = &self.lattice;
        let bp = l.bond().poset();
        let mu = bp.mobius(bp.bottom().unwrap(), l.projection(x)).unsigned_abs() as usize;
        let blocks = l.big_blocks(l.projection(x));
        let bcp: usize = l.undefined(x).iter().map(|&(b, _, _)| l.class_count(blocks[b].len()) as usize - 1).product();
        mu * bcp
    }

    fn reduce(&self, v: Int) -> Int {
        match self.mode {
            Mode::Complex => v,
            Mode::Real => v.mod_floor(&Int::from(2)),
        }
    }

    fn compute_product(&self, i: usize, j: usize) -> Result<Combination, RingError> {
        let l = &self.lattice;
        let (bi, bj) = (&self.basis[i], &self.basis[j]);
        let (a, b) = (bi.grading, bj.grading);
        if !l.is_independent(a, b) {
            return Ok(Vec::new());
        }
        let (pz, osc) = self.os.multiply_basis(l.projection(a), bi.os_index, l.projection(b), bj.os_index);
        let Some((z, w)) = l.phi_product(a, self.bcp_vector(i), b, self.bcp_vector(j))? else {
            return Ok(Vec::new());
        };
        debug_assert_eq!(pz, l.projection(z));
        let bc = l.bcp_coords(z, &w)?;
        let koszul = sign(l.r_f(a) * l.r_b(b) % 2 == 1);
        let mut out: BTreeMap<usize, Int> = BTreeMap::new();
        for (s, cs) in osc.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (t, ct) in bc.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                let idx = self.position[&(z, s, t)];
                *out.entry(idx).or_insert_with(Int::zero) += &koszul * cs * ct;
            }
        }
        Ok(out.into_iter().map(|(k, v)| (k, self.reduce(v))).filter(|(_, v)| !v.is_zero()).collect())
    }

    /// Structure constants of `e_i e_j`.
    pub fn product(&self, i: usize, j: usize) -> Combination {
        match &self.products {
            Some(t) => t[i][j].clone(),
            None => self.compute_product(i, j).expect("product of basis elements"),
        }
    }

    /// Bilinear extension to dense coordinate vectors.
    pub fn cup(&self, x: &[Int], y: &[Int]) -> Vec<Int> {
        let mut out = vec![Int::zero(); self.basis.len()];
        for (i, xi) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (j, yj) in y.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                for (k, c) in self.product(i, j) {
                    out[k] += c * xi * yj;
                }
            }
        }
        out.into_iter().map(|v| self.reduce(v)).collect()
    }

    pub fn unit(&self) -> usize {
        self.index_of(self.lattice.bottom(), 0, 0).expect("unit")
    }

    /// Ranks by degree.
    pub fn poincare(&self) -> Vec<usize> {
        let top = self.basis.iter().map(|b| b.degree).max().unwrap_or(0);
        let mut out = vec![0usize; top + 1];
        for b in &self.basis {
            out[b.degree] += 1;
        }
        out
    }

    fn basis_labels(&self, i: usize) -> Value {
        let b = &self.basis[i];
        let l = &self.lattice;
        let bp = l.bond().poset();
        let mon = &self.os.piece(l.projection(b.grading))[b.os_index];
        let os_label = if mon.is_empty() {
            "1".to_string()
        } else {
            mon.iter().map(|&a| format!("e({})", bp.label(self.os.atoms()[a]))).collect::<Vec<_>>().join("*")
        };
        let blocks = l.big_blocks(l.projection(b.grading));
        let mut fills = Vec::new();
        // nonzero class tuple in lexicographic order, decoded from the index
        let ranges: Vec<usize> =
            l.undefined(b.grading).iter().map(|&(bl, _, _)| l.class_count(blocks[bl].len()) as usize - 1).collect();
        let mut rem = b.bcp_index;
        for &r in ranges.iter().rev() {
            fills.push(rem % r + 1);
            rem /= r;
        }
        fills.reverse();
        let bcp_label: Vec<String> = l
            .undefined(b.grading)
            .iter()
            .zip(&fills)
            .map(|(&(bl, _, _), &c)| {
                l.class_values(blocks[bl].len(), c as u32).iter().map(|v| v.to_string()).collect::<String>()
            })
            .collect();
        json!({ "os": os_label, "bcp": bcp_label })
    }

    pub fn to_json(&self) -> Value {
        let l = &self.lattice;
        let basis: Vec<Value> = (0..self.basis.len())
            .map(|i| {
                let b = &self.basis[i];
                json!({ "degree": b.degree, "grading": l.label(b.grading), "labels": self.basis_labels(i) })
            })
            .collect();
        let mut products = Vec::new();
        if let Some(t) = &self.products {
            for (i, row) in t.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if !c.is_empty() {
                        let terms: Vec<Value> = c.iter().map(|(k, v)| json!([int_json(v), k])).collect();
                        products.push(json!([i, j, terms]));
                    }
                }
            }
        }
        json!({
            "graph": l.graph().to_json(),
            "k": l.k(),
            "m": l.m(),
            "mode": self.mode,
            "coefficients": match self.mode { Mode::Complex => "Z", Mode::Real => "Z/2" },
            "basis": basis,
            "products": products,
            "poincare": self.poincare(),
        })
    }

    /// Per-grading ranks.
    pub fn betti_json(&self) -> Value {
        let l = &self.lattice;
        let mut rows = Vec::new();
        let mut order: Vec<usize> = (0..l.len()).filter(|&x| self.piece_rank(x) > 0).collect();
        let deg = |x: usize| self.basis.iter().find(|b| b.grading == x).map_or(0, |b| b.degree);
        order.sort_by(|&a, &b| (deg(a), l.label(a)).cmp(&(deg(b), l.label(b))));
        for x in order {
            rows.push(json!({
                "grading": l.label(x),
                "r_b": l.r_b(x),
                "r_f": l.r_f(x),
                "degree": deg(x),
                "rank": self.piece_rank(x),
            }));
        }
        json!({
            "graph": l.graph().to_json(),
            "k": l.k(),
            "m": l.m(),
            "mode": self.mode,
            "table": rows,
            "poincare": self.poincare(),
        })
    }

    pub fn betti_text(&self) -> String {
        let l = &self.lattice;
        let mut s = String::new();
        let p = self.poincare();
        let _ = writeln!(s, "graph n={} edges={} k={} m={} mode={}", l.graph().n(), l.graph().edges().len(), l.k(), l.m(), self.mode);
        let _ = writeln!(s, "{:>6}  {:>6}", "degree", "rank");
        for (d, r) in p.iter().enumerate() {
            let _ = writeln!(s, "{d:>6}  {r:>6}");
        }
        let _ = writeln!(s, "poincare {}", poly_string(&p));
        s
    }

    pub fn ring_text(&self) -> String {
        let l = &self.lattice;
        let mut s = self.betti_text();
        let _ = writeln!(s, "{:>5}  {:>6}  {:<24}  labels", "index", "degree", "grading");
        for (i, b) in self.basis.iter().enumerate() {
            let _ = writeln!(s, "{i:>5}  {:>6}  {:<24}  {}", b.degree, l.label(b.grading), self.basis_labels(i));
        }
        if let Some(t) = &self.products {
            let _ = writeln!(s, "products");
            for (i, row) in t.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if !c.is_empty() {
                        let terms: Vec<String> = c.iter().map(|(k, v)| format!("{v}*[{k}]")).collect();
                        let _ = writeln!(s, "  [{i}]*[{j}] = {}", terms.join(" + "));
                    }
                }
            }
        }
        s
    }
}

fn int_json(v: &Int) -> Value {
    match i64::try_from(v) {
        Ok(x) => json!(x),
        Err(_) => json!(v.to_string()),
    }
}

pub fn poly_string(p: &[usize]) -> String {
    let terms: Vec<String> = p
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(d, &c)| {
            let c = if c == 1 && d > 0 { String::new() } else { c.to_string() };
            match d {
                0 => c,
                1 => format!("{c}t"),
                _ => format!("{c}t^{d}"),
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Chain-level representative in `K_*(L; delta_x, delta^0)` of a basis element:
/// shuffle product of the nbc chain and the fiber chain, pushed to `L_k^m`.
pub fn psi(r: &RingPresentation, i: usize) -> KChain {
    let l = &r.lattice;
    let b = &r.basis[i];
    let theta = b.grading;
    let bond = l.bond();
    let mon = &r.os.piece(l.projection(theta))[b.os_index];
    let atoms = r.os.atoms();
    // nbc chains: subsets of positions in mon
    let mut os_chains: Vec<(Vec<usize>, i32)> = Vec::new();
    for perm in permutations(mon.len()) {
        let s = perm_sign(&perm);
        let mut chain = vec![bond.poset().bottom().unwrap()];
        let mut cur = chain[0];
        for &p in &perm {
            cur = bond.join(cur, atoms[mon[p]]);
            chain.push(cur);
        }
        os_chains.push((chain, s));
    }
    let ud = l.undefined(theta);
    let mut fiber_chains: Vec<(Vec<usize>, Int)> = Vec::new();
    for (eta, c) in r.bcp_vector(i) {
        for perm in permutations(ud.len()) {
            let s = perm_sign(&perm);
            let mut t = l.theta(*eta).clone();
            let mut chain = vec![*eta];
            for &p in &perm {
                t.entries[ud[p].2] = None;
                chain.push(l.index_of(&t).expect("fiber element"));
            }
            fiber_chains.push((chain, c * s));
        }
    }
    let sh = tor::shuffles(mon.len(), ud.len());
    let mut out = KChain::new();
    for (oc, os_sign) in &os_chains {
        for (fc, fcoef) in &fiber_chains {
            for (path, s) in &sh {
                let chain: Vec<usize> = path.iter().map(|&(a, b)| l.restrict(fc[b], oc[a])).collect();
                if chain.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let v = fcoef * Int::from(os_sign * s);
                let e = out.entry(KCell { chain, g: 0, f: 0 }).or_insert_with(Int::zero);
                *e += v;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (0..n).permutations(n).collect()
}

fn perm_sign(p: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
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

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }
}

/// Rank of each grading against brute-force Tor over `L_k^m` on the
/// sigma-fiber, degreewise, with torsion-freeness in complex mode.
pub fn check_additive(r: &RingPresentation, limit: usize) -> Result<Check, RingError> {
    let l = &r.lattice;
    if l.len() > limit {
        return Err(TorError::OracleTooLarge { size: l.len(), limit }.into());
    }
    let p = l.poset();
    let g = Copresheaf::delta_at(p.clone(), l.bottom());
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..l.len() {
        classes.entry(l.alpha(x)).or_default().push(x);
    }
    let mut problems = Vec::new();
    for x in 0..l.len() {
        if r.piece_rank(x) != r.formula_rank(x) {
            problems.push(format!("piece {} has rank {} against {}", l.label(x), r.piece_rank(x), r.formula_rank(x)));
        }
    }
    for members in classes.values() {
        let f = Presheaf::delta(p.clone(), members).map_err(TorError::from)?;
        let kc = KComplex::build(&f, &g, limit)?;
        let mut want: BTreeMap<usize, usize> = BTreeMap::new();
        for &x in members {
            *want.entry(l.r_b(x) + l.r_f(x)).or_default() += r.piece_rank(x);
        }
        let (got, torsion): (Vec<usize>, bool) = match r.mode {
            Mode::Complex => {
                let h = kc.homology();
                let t = h.torsion.iter().any(|t| !t.is_empty());
                (h.betti, t)
            }
            Mode::Real => (kc.homology_mod2(), false),
        };
        let top = got.len().max(want.keys().max().map_or(0, |d| d + 1));
        for d in 0..top {
            let g = got.get(d).copied().unwrap_or(0);
            let w = want.get(&d).copied().unwrap_or(0);
            if g != w {
                problems.push(format!("{}: degree {d} oracle {g}, formula {w}", l.label(members[0])));
            }
        }
        if torsion {
            problems.push(format!("{}: torsion in oracle", l.label(members[0])));
        }
    }
    Ok(Check {
        name: "additive ranks vs Tor oracle".into(),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{} gradings, {} sigma-classes agree", l.len(), classes.len())
        } else {
            problems.join("; ")
        },
    })
}

/// Poincare polynomial against the complement formula on the intersection lattice.
pub fn check_gm(r: &RingPresentation, limit: usize) -> Result<Check, RingError> {
    let l = &r.lattice;
    let ip = IntersectionLattice::new(l);
    let bottom = ip.sigma()[l.bottom()].expect("bottom");
    let summ = tor::gm_cohomology(ip.poset(), ip.codim(), bottom, r.mode, limit)?;
    let mut gm = tor::gm_poincare(&summ);
    let mut mine = r.poincare();
    while gm.last() == Some(&0) {
        gm.pop();
    }
    while mine.last() == Some(&0) {
        mine.pop();
    }
    let torsion = summ.iter().any(|s| !s.torsion.is_empty());
    Ok(Check {
        name: "poincare vs intersection lattice".into(),
        passed: gm == mine && !torsion,
        detail: format!("presentation {:?}, oracle {:?}", mine, gm),
    })
}

/// Every product of basis elements against the oracle join product of the
/// chain representatives. Needs sigma bijective so `L_k^m` is the
/// intersection lattice.
pub fn check_products(r: &RingPresentation, limit: usize) -> Result<Check, RingError> {
    let l = &r.lattice;
    if l.len() > limit {
        return Err(TorError::OracleTooLarge { size: l.len(), limit }.into());
    }
    if !l.sigma_is_bijective() {
        return Ok(Check {
            name: "products vs oracle".into(),
            passed: true,
            detail: "skipped: sigma is not injective on this lattice".into(),
        });
    }
    let p = l.poset();
    let g = Copresheaf::delta_at(p.clone(), l.bottom());
    let codim: Vec<usize> = (0..l.len()).map(|x| l.codim(x)).collect();
    let reps: Vec<KChain> = (0..r.len()).into_par_iter().map(|i| psi(r, i)).collect();
    let targets: Vec<Option<(KComplex, CycleCoordinates, Vec<usize>)>> = (0..l.len())
        .into_par_iter()
        .map(|z| -> Result<_, RingError> {
            let members = r.grading_basis(z);
            if members.is_empty() {
                return Ok(None);
            }
            let f = Presheaf::delta_at(p.clone(), z);
            let kc = KComplex::build(&f, &g, limit)?;
            let basis: Vec<KChain> = members.iter().map(|&i| reps[i].clone()).collect();
            let cc = CycleCoordinates::new(&kc, l.r_b(z) + l.r_f(z), &basis)?;
            Ok(Some((kc, cc, members)))
        })
        .collect::<Result<_, _>>()?;
    let n = r.len();
    let mismatches: Vec<String> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (reps, targets, codim) = (&reps, &targets, &codim);
            (0..n).filter_map(move |j| {
                let (a, b) = (r.basis[i].grading, r.basis[j].grading);
                let want = r.product(i, j);
                let got = match tor::oracle_cup(p, codim, a, b, &reps[i], &reps[j]) {
                    Err(e) => return Some(format!("[{i}]*[{j}]: {e}")),
                    Ok(None) => Vec::new(),
                    Ok(Some((z, chain))) => {
                        let deg = l.r_b(z) + l.r_f(z);
                        if chain.is_empty() || tor::chain_degree(&chain) != Some(deg) {
                            Vec::new()
                        } else {
                            match &targets[z] {
                                None => return Some(format!("[{i}]*[{j}]: nonzero class in empty piece")),
                                Some((kc, cc, members)) => match cc.decompose(kc, &chain) {
                                    Ok(c) => members.iter().zip(c).filter(|(_, v)| !v.is_zero()).map(|(&k, v)| (k, v)).collect(),
                                    Err(e) => return Some(format!("[{i}]*[{j}]: {e}")),
                                },
                            }
                        }
                    }
                };
                (got != want).then(|| format!("[{i}]*[{j}]: oracle {:?}, formula {:?}", show(&got), show(&want)))
            })
        })
        .collect();
    Ok(Check {
        name: "products vs oracle".into(),
        passed: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{} basis pairs agree", n * n)
        } else {
            format!("{} mismatches, first: {}", mismatches.len(), mismatches[0])
        },
    })
}

fn show(c: &Combination) -> Vec<(usize, String)> {
    c.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

fn add_into(acc: &mut BTreeMap<usize, Int>, c: &Combination, s: &Int) {
    for (k, v) in c {
        *acc.entry(*k).or_insert_with(Int::zero) += v * s;
    }
}

fn normalize(r: &RingPresentation, acc: BTreeMap<usize, Int>) -> Combination {
    acc.into_iter().map(|(k, v)| (k, r.reduce(v))).filter(|(_, v)| !v.is_zero()).collect()
}

/// Unit, grading law, degree additivity, graded commutativity and (when
/// `triples`) associativity on all basis triples.
pub fn check_axioms(r: &RingPresentation, triples: bool) -> Check {
    let n = r.len();
    let l = &r.lattice;
    let u = r.unit();
    let mut problems: Vec<String> = Vec::new();
    for i in 0..n {
        let id = vec![(i, Int::one())];
        if r.product(u, i) != id || r.product(i, u) != id {
            problems.push(format!("unit fails on [{i}]"));
        }
    }
    let pair_problems: Vec<String> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).filter_map(move |j| {
                let (bi, bj) = (&r.basis[i], &r.basis[j]);
                let ij = r.product(i, j);
                if !ij.is_empty() {
                    let z = l.join(bi.grading, bj.grading);
                    for (k, _) in &ij {
                        if r.basis[*k].grading != z || r.basis[*k].degree != bi.degree + bj.degree {
                            return Some(format!("[{i}]*[{j}] leaves grading or degree"));
                        }
                    }
                }
                let s = sign(bi.degree * bj.degree % 2 == 1);
                let mut acc = BTreeMap::new();
                add_into(&mut acc, &r.product(j, i), &s);
                (normalize(r, acc) != ij).then(|| format!("[{i}]*[{j}] not graded commutative"))
            })
        })
        .collect();
    problems.extend(pair_problems);
    if triples {
        let assoc: Vec<String> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..n).flat_map(move |j| {
                    let ij = r.product(i, j);
                    (0..n).filter_map(move |k| {
                        let mut left = BTreeMap::new();
                        for (t, c) in &ij {
                            add_into(&mut left, &r.product(*t, k), c);
                        }
                        let mut right = BTreeMap::new();
                        for (t, c) in r.product(j, k) {
                            add_into(&mut right, &r.product(i, t), &c);
                        }
                        (normalize(r, left) != normalize(r, right)).then(|| format!("([{i}][{j}])[{k}] not associative"))
                    })
                })
            })
            .collect();
        problems.extend(assoc);
    }
    Check {
        name: "ring axioms".into(),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{n} basis elements{}", if triples { ", all triples associative" } else { "" })
        } else {
            format!("{} failures, first: {}", problems.len(), problems[0])
        },
    }
}

/// All checks that fit the oracle limit.
pub fn verify_full(graph: &Graph, k: u32, m: usize, mode: Mode, limit: usize) -> Result<Report, RingError> {
    let size = OrbitLattice::predicted_size(graph, k, m);
    if size > limit as u128 {
        return Err(TorError::OracleTooLarge { size: size.min(usize::MAX as u128) as usize, limit }.into());
    }
    let with_products = m > 1;
    let r = RingPresentation::build(graph, k, m, mode, with_products)?;
    let mut report = Report { checks: Vec::new() };
    let c = check_additive(&r, limit)?;
    report.push(&c.name, c.passed, c.detail);
    let c = check_gm(&r, limit)?;
    report.push(&c.name, c.passed, c.detail);
    if with_products {
        if mode == Mode::Complex {
            let c = check_products(&r, limit)?;
            report.push(&c.name, c.passed, c.detail);
        }
        let c = check_axioms(&r, r.len() <= 200);
        report.push(&c.name, c.passed, c.detail);
    }
    Ok(report)
}

/// `prod_{i < n} (1 + i t^{2m - 1})`.
pub fn configuration_poincare(n: usize, m: usize) -> Vec<usize> {
    let mut p = vec![1usize];
    for i in 1..n {
        let shift = 2 * m - 1;
        let mut q = vec![0usize; p.len() + shift];
        for (d, &c) in p.iter().enumerate() {
            q[d] += c;
            q[d + shift] += c * i;
        }
        p = q;
    }
    p
}

/// Nonzero entries as signed machine integers, for tests and bindings.
pub fn small(c: &Combination) -> Vec<(usize, i64)> {
    c.iter().map(|(k, v)| (*k, i64::try_from(v).unwrap_or(if v.is_negative() { i64::MIN } else { i64::MAX }))).collect()
}
