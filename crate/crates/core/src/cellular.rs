//! Cellular forms `(Lambda, d)` of a copresheaf on a graded poset: their
//! construction by successive kernels, verification, the cellular chain
//! complex against a presheaf, induced morphisms and products.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::linalg::{self, ChainComplex, HomologySummary, IntMatrix, LinalgError, UniqueSolver};
use crate::poset::{Poset, PosetMorphism};
use crate::sheaf::{Co, Copresheaf, FHom, Pre, Presheaf, SheafError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CellularError {
    #[error("poset is not graded")]
    NotGraded,
    #[error("malformed form at {element}: {reason}")]
    Malformed { element: String, reason: String },
    #[error("rank of f({x}) exceeds rank of {x}")]
    PreconditionFailed { x: String },
    #[error("no lift of the morphism at {x}")]
    NotLiftable { x: String },
    #[error("copresheaf does not match the form")]
    CopresheafMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
}

/// Which check of the construction failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailedStep {
    /// `(+)_{y < x, r(y) = 0} G(y) -> G(x)` is not onto.
    Surjectivity,
    /// The kernel at `x` is not the sum of the kernels at rank-one elements.
    KernelSum,
    /// The form below `x` has homology in this positive degree.
    PositiveHomology { degree: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotCellular {
    pub element: String,
    pub step: FailedStep,
}

impl std::fmt::Display for NotCellular {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.step {
            FailedStep::Surjectivity => write!(f, "not cellular at {}: extension from rank 0 is not onto", self.element),
            FailedStep::KernelSum => write!(f, "not cellular at {}: kernel is not generated in rank 1", self.element),
            FailedStep::PositiveHomology { degree } => {
                write!(f, "not cellular at {}: positive homology below {} in degree {}", self.element, self.element, degree)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Construction {
    Cellular(CellularForm),
    NotCellular(NotCellular),
}

impl Construction {
    pub fn form(self) -> Option<CellularForm> {
        match self {
            Construction::Cellular(f) => Some(f),
            Construction::NotCellular(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub element: String,
    pub condition: String,
}

/// Pieces `Lambda_x` (free of rank `ranks[x]`) with differentials
/// `d_{y,x}: Lambda_x -> Lambda_y` on covers `y < x`. Rank-zero pieces are
/// the stalks of the copresheaf.
#[derive(Clone, Debug)]
pub struct CellularForm {
    base: Arc<Poset>,
    copresheaf: Arc<Copresheaf>,
    ranks: Vec<usize>,
    diff: HashMap<(usize, usize), IntMatrix>,
}

/// Chain complex `(+)_{y in set} Lambda_y` graded by rank; elements ordered by
/// index inside each rank.
fn lambda_complex(
    p: &Poset,
    ranks: &[usize],
    diff: &HashMap<(usize, usize), IntMatrix>,
    set: &FixedBitSet,
) -> ChainComplex {
    let top = set.ones().map(|x| p.rank(x)).max().unwrap_or(0);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for x in set.ones() {
        layers[p.rank(x)].push(x);
    }
    let offsets: Vec<HashMap<usize, usize>> = layers
        .iter()
        .map(|l| {
            let mut off = 0;
            l.iter()
                .map(|&x| {
                    let o = off;
                    off += ranks[x];
                    (x, o)
                })
                .collect()
        })
        .collect();
    let dims: Vec<usize> = layers.iter().map(|l| l.iter().map(|&x| ranks[x]).sum()).collect();
    let mut bds = Vec::new();
    for i in 1..=top {
        let mut d = IntMatrix::zeros(dims[i - 1], dims[i]);
        for &x in &layers[i] {
            for &y in p.down_covers(x) {
                if let Some(&oy) = offsets[i - 1].get(&y) {
                    d.put_block(oy, offsets[i][&x], &diff[&(y, x)]);
                }
            }
        }
        bds.push(d);
    }
    ChainComplex::new(dims, bds).expect("form differentials square to zero")
}

fn stacked_extension(g: &Copresheaf, sources: &[usize], x: usize) -> IntMatrix {
    let blocks: Vec<IntMatrix> = sources.iter().map(|&y| g.map_between(y, x)).collect();
    let refs: Vec<&IntMatrix> = blocks.iter().collect();
    IntMatrix::hstack(&refs, g.rank(x))
}

fn is_onto(m: &IntMatrix) -> bool {
    let f = linalg::invariant_factors(m);
    f.len() == m.rows() && f.iter().all(One::is_one)
}

fn rank_zero_below(p: &Poset, x: usize) -> Vec<usize> {
    p.down_set(x).ones().filter(|&y| y != x && p.rank(y) == 0).collect()
}

/// Runs the successive-kernel construction. Returns the form or the first
/// element at which the pair fails to be cellular.
pub fn construct_cellular_form(g: &Arc<Copresheaf>) -> Result<Construction, CellularError> {
    let p = g.base().clone();
    if !p.is_graded() {
        return Err(CellularError::NotGraded);
    }
    let order = p.linear_extension();
    for &x in &order {
        if p.rank(x) == 0 {
            continue;
        }
        let e = stacked_extension(g, &rank_zero_below(&p, x), x);
        if !is_onto(&e) {
            return Ok(Construction::NotCellular(NotCellular {
                element: p.label(x).into(),
                step: FailedStep::Surjectivity,
            }));
        }
    }
    let mut ranks = vec![0usize; p.len()];
    let mut diff: HashMap<(usize, usize), IntMatrix> = HashMap::new();
    for &x in &order {
        let r = p.rank(x);
        if r == 0 {
            ranks[x] = g.rank(x);
            continue;
        }
        if r >= 2 {
            if let Some(step) = check_rank_two_plus(&p, g, &ranks, &diff, x)? {
                return Ok(Construction::NotCellular(NotCellular { element: p.label(x).into(), step }));
            }
        }
        let covers = p.down_covers(x).to_vec();
        let d = if r == 1 {
            stacked_extension(g, &covers, x)
        } else {
            lower_differential(&p, &ranks, &diff, x)
        };
        let k = linalg::kernel_basis(&d);
        ranks[x] = k.len();
        let kmat = IntMatrix::from_columns(d.cols(), &k);
        let mut off = 0;
        for &y in &covers {
            diff.insert((y, x), kmat.block(off, 0, ranks[y], k.len()));
            off += ranks[y];
        }
    }
    let form = CellularForm { base: p, copresheaf: g.clone(), ranks, diff };
    Ok(Construction::Cellular(form))
}

/// `(+)_{y < x} Lambda_y -> (+)_{z, r(z) = r(x) - 2} Lambda_z` for covers `y` of `x`.
fn lower_differential(p: &Poset, ranks: &[usize], diff: &HashMap<(usize, usize), IntMatrix>, x: usize) -> IntMatrix {
    let r = p.rank(x);
    let covers = p.down_covers(x);
    let lower: Vec<usize> = p.down_set(x).ones().filter(|&z| p.rank(z) + 2 == r).collect();
    let rows: usize = lower.iter().map(|&z| ranks[z]).sum();
    let cols: usize = covers.iter().map(|&y| ranks[y]).sum();
    let mut d = IntMatrix::zeros(rows, cols);
    let mut co = 0;
    for &y in covers {
        let mut ro = 0;
        for &z in &lower {
            if let Some(m) = diff.get(&(z, y)) {
                d.put_block(ro, co, m);
            }
            ro += ranks[z];
        }
        co += ranks[y];
    }
    d
}

fn check_rank_two_plus(
    p: &Poset,
    g: &Copresheaf,
    ranks: &[usize],
    diff: &HashMap<(usize, usize), IntMatrix>,
    x: usize,
) -> Result<Option<FailedStep>, CellularError> {
    let r = p.rank(x);
    let zeros = rank_zero_below(p, x);
    let e = stacked_extension(g, &zeros, x);
    let kdim = e.cols() - linalg::rank(&e);
    let mut offset = HashMap::new();
    let mut off = 0;
    for &y in &zeros {
        offset.insert(y, off);
        off += g.rank(y);
    }
    let mut gens: Vec<Vec<linalg::Int>> = Vec::new();
    for x1 in p.down_set(x).ones().filter(|&z| p.rank(z) == 1) {
        for i in 0..ranks[x1] {
            let mut v = vec![linalg::Int::from(0); off];
            for &y in p.down_covers(x1) {
                let m = &diff[&(y, x1)];
                for row in 0..m.rows() {
                    v[offset[&y] + row] = m.get(row, i).clone();
                }
            }
            gens.push(v);
        }
    }
    let s = IntMatrix::from_columns(off, &gens);
    let f = linalg::invariant_factors(&s);
    if f.len() != kdim || !f.iter().all(One::is_one) {
        return Ok(Some(FailedStep::KernelSum));
    }
    if r >= 3 {
        let mut below = p.down_set(x).clone();
        below.set(x, false);
        let h = linalg::homology(&lambda_complex(p, ranks, diff, &below));
        if let Some(d) = (1..r - 1).find(|&d| !h.is_zero_in(d)) {
            return Ok(Some(FailedStep::PositiveHomology { degree: d }));
        }
    }
    Ok(None)
}

impl CellularForm {
    /// Assembles a form from explicit pieces; `verify` checks it.
    pub fn from_parts(
        copresheaf: Arc<Copresheaf>,
        ranks: Vec<usize>,
        diff: HashMap<(usize, usize), IntMatrix>,
    ) -> Result<Self, CellularError> {
        let base = copresheaf.base().clone();
        if !base.is_graded() {
            return Err(CellularError::NotGraded);
        }
        if ranks.len() != base.len() {
            return Err(CellularError::Malformed { element: "(all)".into(), reason: "wrong number of pieces".into() });
        }
        for (&(y, x), m) in &diff {
            if !base.is_cover(y, x) {
                return Err(CellularError::Malformed {
                    element: base.label(x).into(),
                    reason: format!("differential to non-cover {}", base.label(y)),
                });
            }
            if m.shape() != (ranks[y], ranks[x]) {
                return Err(CellularError::Malformed {
                    element: base.label(x).into(),
                    reason: format!("differential to {} has shape {:?}", base.label(y), m.shape()),
                });
            }
        }
        let mut diff = diff;
        for (y, x) in base.covers() {
            diff.entry((y, x)).or_insert_with(|| IntMatrix::zeros(ranks[y], ranks[x]));
        }
        Ok(CellularForm { base, copresheaf, ranks, diff })
    }

    pub fn base(&self) -> &Arc<Poset> {
        &self.base
    }

    pub fn copresheaf(&self) -> &Arc<Copresheaf> {
        &self.copresheaf
    }

    pub fn piece_rank(&self, x: usize) -> usize {
        self.ranks[x]
    }

    pub fn piece_ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn differential(&self, y: usize, x: usize) -> &IntMatrix {
        &self.diff[&(y, x)]
    }

    /// `d` on `Lambda_x`, stacked over the covers of `x` in index order.
    pub fn boundary_of(&self, x: usize) -> IntMatrix {
        let blocks: Vec<&IntMatrix> = self.base.down_covers(x).iter().map(|&y| &self.diff[&(y, x)]).collect();
        IntMatrix::vstack(&blocks, self.ranks[x])
    }

    /// Total rank by poset rank.
    pub fn rank_profile(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.base.max_rank() + 1];
        for x in 0..self.base.len() {
            out[self.base.rank(x)] += self.ranks[x];
        }
        out
    }

    /// `{"ranks": {label: r}, "differentials": {"lo->hi": rows}}`; integer
    /// entries that do not fit in `i64` are written as strings.
    pub fn to_json(&self) -> serde_json::Value {
        let p = &self.base;
        let ranks: serde_json::Map<String, serde_json::Value> =
            (0..p.len()).map(|x| (p.label(x).to_string(), serde_json::json!(self.ranks[x]))).collect();
        let mut diffs = serde_json::Map::new();
        for (y, x) in p.covers() {
            let m = &self.diff[&(y, x)];
            if m.rows() == 0 || m.cols() == 0 {
                continue;
            }
            let rows: Vec<Vec<serde_json::Value>> = m
                .to_rows()
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|v| v.to_i64().map_or_else(|| serde_json::json!(v.to_string()), |x| serde_json::json!(x)))
                        .collect()
                })
                .collect();
            diffs.insert(format!("{}->{}", p.label(y), p.label(x)), serde_json::json!(rows));
        }
        serde_json::json!({ "ranks": ranks, "rank_profile": self.rank_profile(), "differentials": diffs })
    }

    fn complex_on(&self, set: &FixedBitSet) -> ChainComplex {
        lambda_complex(&self.base, &self.ranks, &self.diff, set)
    }

    /// Checks rank-zero pieces, rank-one kernels and the three-term exact
    /// sequences at higher ranks. `strict` also checks that every `Lambda_{<= x}`
    /// resolves `G(x)`.
    pub fn verify(&self, strict: bool) -> Result<(), Violation> {
        let p = &self.base;
        let g = &self.copresheaf;
        let viol = |x: usize, c: &str| Violation { element: p.label(x).into(), condition: c.into() };
        for x in p.linear_extension() {
            let r = p.rank(x);
            if r == 0 {
                if self.ranks[x] != g.rank(x) {
                    return Err(viol(x, "rank-zero piece differs from the stalk"));
                }
                continue;
            }
            let zeros = rank_zero_below(p, x);
            let e = stacked_extension(g, &zeros, x);
            if !is_onto(&e) {
                return Err(viol(x, "extension from rank zero is not onto"));
            }
            let d = self.boundary_of(x);
            if !linalg::is_saturated_injective(&d) && self.ranks[x] > 0 {
                return Err(viol(x, "differential is not a saturated injection"));
            }
            let lower = if r == 1 {
                stacked_extension(g, p.down_covers(x), x)
            } else {
                lower_differential(p, &self.ranks, &self.diff, x)
            };
            if !lower.mul(&d).map_err(|_| viol(x, "shape"))?.is_zero() {
                return Err(viol(x, "differential does not square to zero"));
            }
            let kdim = lower.cols() - linalg::rank(&lower);
            if kdim != self.ranks[x] {
                return Err(viol(x, "piece is not the full kernel"));
            }
            if strict {
                let h = linalg::homology(&self.complex_on(p.down_set(x)));
                if let Some(deg) = (1..h.betti.len()).find(|&i| !h.is_zero_in(i)) {
                    return Err(viol(x, &format!("form below has homology in degree {deg}")));
                }
                // H_0 of the form below x is G(x): kernel of the extension is the image of d_1
                let ones: Vec<usize> = p.down_set(x).ones().filter(|&z| p.rank(z) == 1).collect();
                let img_rank = {
                    let mut set = FixedBitSet::with_capacity(p.len());
                    for &z in zeros.iter().chain(&ones) {
                        set.insert(z);
                    }
                    let c = self.complex_on(&set);
                    c.boundary(1).map_or(0, linalg::rank)
                };
                if img_rank != e.cols() - linalg::rank(&e) {
                    return Err(viol(x, "degree-zero homology below is not the stalk"));
                }
            }
        }
        Ok(())
    }

    /// Offset of the block `Lambda_x (x) F(x)` inside its degree, and the
    /// dimension of each degree.
    fn chain_layout(&self, f: &Presheaf) -> (Vec<usize>, Vec<usize>) {
        let p = &self.base;
        let mut offs: Vec<usize> = vec![0; p.len()];
        let mut dims = vec![0usize; p.max_rank() + 1];
        for x in p.linear_extension() {
            let r = p.rank(x);
            offs[x] = dims[r];
            dims[r] += self.ranks[x] * f.rank(x);
        }
        (offs, dims)
    }

    /// `C_i = (+)_{r(x) = i} Lambda_x (x) F(x)` with `d(a (x) c) = sum d_{y,x} a (x) c|_y`.
    pub fn cellular_chain(&self, f: &Presheaf) -> ChainComplex {
        let p = &self.base;
        let (offs, dims) = self.chain_layout(f);
        let mut bds = Vec::new();
        for i in 1..dims.len() {
            let mut d = IntMatrix::zeros(dims[i - 1], dims[i]);
            for x in p.elements_of_rank(i) {
                for &y in p.down_covers(x) {
                    let block = self.diff[&(y, x)].kron(f.cover_map(y, x));
                    d.put_block(offs[y], offs[x], &block);
                }
            }
            bds.push(d);
        }
        ChainComplex::new(dims, bds).expect("cellular chain complex")
    }

    pub fn cellular_homology(&self, f: &Presheaf) -> HomologySummary {
        linalg::homology(&self.cellular_chain(f))
    }
}

/// Chain map `Phi: Lambda(P, G) -> Lambda(Q, H)` induced by `f` and `t`.
#[derive(Clone, Debug)]
pub struct FormMorphism {
    pub map: Vec<usize>,
    pub pieces: Vec<IntMatrix>,
}

pub fn form_morphism(
    f: &PosetMorphism,
    t: &FHom<Co>,
    src: &CellularForm,
    dst: &CellularForm,
) -> Result<FormMorphism, CellularError> {
    let p = &src.base;
    let q = &dst.base;
    if f.source().len() != p.len() || f.target().len() != q.len() {
        return Err(CellularError::CopresheafMismatch);
    }
    for x in 0..p.len() {
        if q.rank(f.apply(x)) > p.rank(x) {
            return Err(CellularError::PreconditionFailed { x: p.label(x).into() });
        }
        if p.rank(x) == 0 && t.component(x).shape() != (dst.ranks[f.apply(x)], src.ranks[x]) {
            return Err(CellularError::CopresheafMismatch);
        }
    }
    let mut pieces: Vec<IntMatrix> = (0..p.len())
        .map(|x| IntMatrix::zeros(dst.ranks[f.apply(x)], src.ranks[x]))
        .collect();
    let mut solvers: HashMap<usize, UniqueSolver> = HashMap::new();
    for x in p.linear_extension() {
        let fx = f.apply(x);
        let r = p.rank(x);
        if q.rank(fx) < r {
            continue;
        }
        if r == 0 {
            pieces[x] = t.component(x).clone();
            continue;
        }
        if src.ranks[x] == 0 || dst.ranks[fx] == 0 {
            continue;
        }
        // image of d a under the lower pieces, laid out over the covers of f(x)
        let tcovers = q.down_covers(fx);
        let mut toff = HashMap::new();
        let mut rows = 0;
        for &y2 in tcovers {
            toff.insert(y2, rows);
            rows += dst.ranks[y2];
        }
        let mut rhs = IntMatrix::zeros(rows, src.ranks[x]);
        for &y in p.down_covers(x) {
            let fy = f.apply(y);
            if q.rank(fy) < p.rank(y) || src.ranks[y] == 0 {
                continue;
            }
            let o = *toff.get(&fy).ok_or_else(|| CellularError::NotLiftable { x: p.label(x).into() })?;
            let contrib = pieces[y].mul(&src.diff[&(y, x)])?;
            for i in 0..contrib.rows() {
                for j in 0..contrib.cols() {
                    rhs.add_at(o + i, j, contrib.get(i, j));
                }
            }
        }
        if let std::collections::hash_map::Entry::Vacant(e) = solvers.entry(fx) {
            e.insert(UniqueSolver::new(&dst.boundary_of(fx))?);
        }
        let s = &solvers[&fx];
        let mut cols = Vec::with_capacity(src.ranks[x]);
        for j in 0..src.ranks[x] {
            let v = s
                .solve(&rhs.column(j))
                .map_err(|_| CellularError::NotLiftable { x: p.label(x).into() })?;
            cols.push(v);
        }
        pieces[x] = IntMatrix::from_columns(dst.ranks[fx], &cols);
    }
    Ok(FormMorphism { map: f.as_slice().to_vec(), pieces })
}

/// `a (x) c |-> phi(a) (x) k(c)` from the cellular chain of `(src, k.source())`
/// to that of `(dst, k.target())`, one matrix per degree of the source.
pub fn cellular_chain_map(
    phi: &FormMorphism,
    src: &CellularForm,
    dst: &CellularForm,
    k: &FHom<Pre>,
) -> Result<Vec<IntMatrix>, CellularError> {
    if k.morphism().as_slice() != phi.map.as_slice() {
        return Err(CellularError::CopresheafMismatch);
    }
    let (f, e) = (k.source(), k.target());
    let (soff, sdims) = src.chain_layout(f);
    let (toff, tdims) = dst.chain_layout(e);
    let p = &src.base;
    let mut out: Vec<IntMatrix> =
        (0..sdims.len()).map(|i| IntMatrix::zeros(tdims.get(i).copied().unwrap_or(0), sdims[i])).collect();
    for x in 0..p.len() {
        let fx = phi.map[x];
        if dst.base.rank(fx) != p.rank(x) || src.ranks[x] == 0 || f.rank(x) == 0 {
            continue;
        }
        // several x can share f(x), so accumulate
        let block = phi.pieces[x].kron(k.component(x));
        let m = &mut out[p.rank(x)];
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                m.add_at(toff[fx] + i, soff[x] + j, block.get(i, j));
            }
        }
    }
    Ok(out)
}

/// Product form on `prod = P x Q` with `d(a (x) b) = da (x) b + (-1)^{r(x)} a (x) db`.
pub fn product_form(prod: Arc<Poset>, a: &CellularForm, b: &CellularForm) -> Result<CellularForm, CellularError> {
    let nq = b.base.len();
    if prod.len() != a.base.len() * nq {
        return Err(CellularError::CopresheafMismatch);
    }
    let g = Arc::new(Copresheaf::product(prod.clone(), &a.copresheaf, &b.copresheaf)?);
    let ranks: Vec<usize> = (0..prod.len()).map(|i| a.ranks[i / nq] * b.ranks[i % nq]).collect();
    let mut diff = HashMap::new();
    for (lo, hi) in prod.covers() {
        let (x2, y2) = (lo / nq, lo % nq);
        let (x, y) = (hi / nq, hi % nq);
        let m = if y == y2 {
            a.diff[&(x2, x)].kron(&IntMatrix::identity(b.ranks[y]))
        } else {
            let m = IntMatrix::identity(a.ranks[x]).kron(&b.diff[&(y2, y)]);
            if a.base.rank(x) % 2 == 1 {
                m.neg()
            } else {
                m
            }
        };
        diff.insert((lo, hi), m);
    }
    CellularForm::from_parts(g, ranks, diff)
}
