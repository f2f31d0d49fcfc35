//! Presheaves and copresheaves of free Z-modules on finite posets, stored by
//! their maps along covers, and homomorphisms between them over poset maps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::marker::PhantomData;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Int, IntMatrix};
use crate::poset::{Poset, PosetError, PosetMorphism};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SheafError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("{lo} -> {hi} is not a cover")]
    NotACover { lo: String, hi: String },
    #[error("map on {lo} -> {hi} has shape {found:?}, expected {expected:?}")]
    Shape { lo: String, hi: String, expected: (usize, usize), found: (usize, usize) },
    #[error("composites disagree between {lo} and {hi}")]
    NotFunctorial { lo: String, hi: String },
    #[error("support is not convex at {0}")]
    NotConvex(String),
    #[error("homomorphism does not commute on {lo} -> {hi}")]
    Incompatible { lo: String, hi: String },
    #[error("{x} is not extremal in its fiber")]
    NotExtremal { x: String },
    #[error("{x} does not map to the chosen element")]
    WrongFiber { x: String },
    #[error("sheaf lives on a different poset")]
    BaseMismatch,
    #[error("component at {x} has shape {found:?}, expected {expected:?}")]
    ComponentShape { x: String, expected: (usize, usize), found: (usize, usize) },
    #[error("malformed sheaf json: {0}")]
    Json(String),
}

pub trait Variance: Clone + Copy + Debug + Send + Sync + 'static {
    /// Copresheaves push along `lo -> hi`; presheaves pull back `hi -> lo`.
    const IS_CO: bool;
}

#[derive(Clone, Copy, Debug)]
pub struct Pre;
#[derive(Clone, Copy, Debug)]
pub struct Co;

impl Variance for Pre {
    const IS_CO: bool = false;
}
impl Variance for Co {
    const IS_CO: bool = true;
}

#[derive(Clone, Debug)]
pub struct Sheaf<V: Variance> {
    base: Arc<Poset>,
    ranks: Vec<usize>,
    maps: HashMap<(usize, usize), IntMatrix>,
    _v: PhantomData<V>,
}

pub type Presheaf = Sheaf<Pre>;
pub type Copresheaf = Sheaf<Co>;

#[derive(Serialize, Deserialize)]
struct SheafJson {
    ranks: BTreeMap<String, usize>,
    #[serde(default, alias = "restrictions", alias = "maps")]
    extensions: BTreeMap<String, Vec<Vec<i64>>>,
}

impl<V: Variance> Sheaf<V> {
    /// `maps[(lo, hi)]` has shape `rank(hi) x rank(lo)` for copresheaves and
    /// `rank(lo) x rank(hi)` for presheaves. Missing covers get zero maps.
    pub fn new(
        base: Arc<Poset>,
        ranks: Vec<usize>,
        maps: HashMap<(usize, usize), IntMatrix>,
    ) -> Result<Self, SheafError> {
        let s = Self::assemble(base, ranks, maps)?;
        s.check_functorial()?;
        Ok(s)
    }

    fn assemble(
        base: Arc<Poset>,
        ranks: Vec<usize>,
        mut maps: HashMap<(usize, usize), IntMatrix>,
    ) -> Result<Self, SheafError> {
        if ranks.len() != base.len() {
            return Err(SheafError::Json(format!("{} ranks for {} elements", ranks.len(), base.len())));
        }
        for (&(lo, hi), m) in &maps {
            if lo >= base.len() || hi >= base.len() || !base.is_cover(lo, hi) {
                return Err(SheafError::NotACover {
                    lo: label_or(&base, lo),
                    hi: label_or(&base, hi),
                });
            }
            let expected = Self::shape_for(&ranks, lo, hi);
            if m.shape() != expected {
                return Err(SheafError::Shape {
                    lo: base.label(lo).into(),
                    hi: base.label(hi).into(),
                    expected,
                    found: m.shape(),
                });
            }
        }
        for (lo, hi) in base.covers() {
            maps.entry((lo, hi)).or_insert_with(|| {
                let (r, c) = Self::shape_for(&ranks, lo, hi);
                IntMatrix::zeros(r, c)
            });
        }
        Ok(Sheaf { base, ranks, maps, _v: PhantomData })
    }

    fn shape_for(ranks: &[usize], lo: usize, hi: usize) -> (usize, usize) {
        if V::IS_CO {
            (ranks[hi], ranks[lo])
        } else {
            (ranks[lo], ranks[hi])
        }
    }

    /// `Z` on the convex set `q`, identities inside it, zero elsewhere.
    pub fn delta(base: Arc<Poset>, q: &[usize]) -> Result<Self, SheafError> {
        let mut inq = FixedBitSet::with_capacity(base.len());
        for &x in q {
            inq.insert(x);
        }
        for x in q.iter().copied() {
            for y in q.iter().copied() {
                if base.lt(x, y) {
                    let mut between = base.up_set(x).clone();
                    between.intersect_with(base.down_set(y));
                    if let Some(z) = between.ones().find(|&z| !inq.contains(z)) {
                        return Err(SheafError::NotConvex(base.label(z).into()));
                    }
                }
            }
        }
        Ok(Self::delta_unchecked(base, &inq))
    }

    fn delta_unchecked(base: Arc<Poset>, inq: &FixedBitSet) -> Self {
        let ranks: Vec<usize> = (0..base.len()).map(|x| usize::from(inq.contains(x))).collect();
        let mut maps = HashMap::new();
        for (lo, hi) in base.covers() {
            let m = if inq.contains(lo) && inq.contains(hi) {
                IntMatrix::identity(1)
            } else {
                let (r, c) = Self::shape_for(&ranks, lo, hi);
                IntMatrix::zeros(r, c)
            };
            maps.insert((lo, hi), m);
        }
        Sheaf { base, ranks, maps, _v: PhantomData }
    }

    pub fn delta_at(base: Arc<Poset>, x: usize) -> Self {
        let mut inq = FixedBitSet::with_capacity(base.len());
        inq.insert(x);
        Self::delta_unchecked(base, &inq)
    }

    pub fn constant(base: Arc<Poset>) -> Self {
        let mut all = FixedBitSet::with_capacity(base.len());
        all.insert_range(..);
        Self::delta_unchecked(base, &all)
    }

    pub fn from_json_str(base: Arc<Poset>, s: &str) -> Result<Self, SheafError> {
        let raw: SheafJson = serde_json::from_str(s).map_err(|e| SheafError::Json(e.to_string()))?;
        let mut ranks = vec![0usize; base.len()];
        for (l, &r) in &raw.ranks {
            ranks[base.index_of(l)?] = r;
        }
        let mut maps = HashMap::new();
        for (key, rows) in &raw.extensions {
            let (a, b) = key
                .split_once("->")
                .ok_or_else(|| SheafError::Json(format!("map key {key} is not of the form lo->hi")))?;
            let lo = base.index_of(a.trim())?;
            let hi = base.index_of(b.trim())?;
            let expected = Self::shape_for(&ranks, lo, hi);
            let m = if rows.is_empty() {
                IntMatrix::zeros(expected.0, expected.1)
            } else {
                IntMatrix::from_rows(rows).map_err(|e| SheafError::Json(e.to_string()))?
            };
            maps.insert((lo, hi), m);
        }
        Self::new(base, ranks, maps)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ranks = (0..self.base.len())
            .map(|x| (self.base.label(x).to_string(), self.ranks[x]))
            .collect();
        let mut extensions = BTreeMap::new();
        for (lo, hi) in self.base.covers() {
            let m = &self.maps[&(lo, hi)];
            if m.rows() == 0 || m.cols() == 0 {
                continue;
            }
            let rows = m.to_i64_rows().expect("sheaf maps fit in i64 for export");
            extensions.insert(format!("{}->{}", self.base.label(lo), self.base.label(hi)), rows);
        }
        let key = if V::IS_CO { "extensions" } else { "restrictions" };
        let mut obj = serde_json::Map::new();
        obj.insert("ranks".into(), serde_json::to_value::<BTreeMap<String, usize>>(ranks).unwrap());
        obj.insert(key.into(), serde_json::to_value(extensions).unwrap());
        serde_json::Value::Object(obj)
    }

    pub fn base(&self) -> &Arc<Poset> {
        &self.base
    }

    pub fn rank(&self, x: usize) -> usize {
        self.ranks[x]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn support(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.base.len());
        for (x, &r) in self.ranks.iter().enumerate() {
            if r > 0 {
                s.insert(x);
            }
        }
        s
    }

    pub fn cover_map(&self, lo: usize, hi: usize) -> &IntMatrix {
        &self.maps[&(lo, hi)]
    }

    /// For `x <= y`: `G(x) -> G(y)` for copresheaves, `F(y) -> F(x)` for
    /// presheaves, composed along a fixed saturated chain.
    pub fn map_between(&self, x: usize, y: usize) -> IntMatrix {
        assert!(self.base.leq(x, y), "map_between needs x <= y");
        let mut acc = IntMatrix::identity(self.ranks[x]);
        let mut cur = x;
        while cur != y {
            let z = *self
                .base
                .up_covers(cur)
                .iter()
                .find(|&&z| self.base.leq(z, y))
                .expect("saturated chain exists");
            let m = &self.maps[&(cur, z)];
            acc = if V::IS_CO { m.mul(&acc) } else { acc.mul(m) }.expect("cover shapes agree");
            cur = z;
        }
        acc
    }

    fn check_functorial(&self) -> Result<(), SheafError> {
        let order = self.base.linear_extension();
        let mut table: Vec<HashMap<usize, IntMatrix>> = vec![HashMap::new(); self.base.len()];
        for &x in order.iter().rev() {
            let mut row: HashMap<usize, IntMatrix> = HashMap::new();
            row.insert(x, IntMatrix::identity(self.ranks[x]));
            for &z in self.base.up_covers(x) {
                let m = &self.maps[&(x, z)];
                for (&y, zy) in &table[z] {
                    let cand = if V::IS_CO { zy.mul(m) } else { m.mul(zy) }.expect("cover shapes agree");
                    match row.get(&y) {
                        Some(prev) if *prev != cand => {
                            return Err(SheafError::NotFunctorial {
                                lo: self.base.label(x).into(),
                                hi: self.base.label(y).into(),
                            })
                        }
                        Some(_) => {}
                        None => {
                            row.insert(y, cand);
                        }
                    }
                }
            }
            table[x] = row;
        }
        Ok(())
    }

    /// `f^* S`: value `S(f(x))` at `x`.
    pub fn pullback(f: &PosetMorphism, s: &Sheaf<V>) -> Result<Self, SheafError> {
        if !Arc::ptr_eq(f.target(), &s.base) {
            return Err(SheafError::BaseMismatch);
        }
        let src = f.source().clone();
        let ranks: Vec<usize> = (0..src.len()).map(|x| s.ranks[f.apply(x)]).collect();
        let mut maps = HashMap::new();
        for (lo, hi) in src.covers() {
            maps.insert((lo, hi), s.map_between(f.apply(lo), f.apply(hi)));
        }
        Ok(Sheaf { base: src, ranks, maps, _v: PhantomData })
    }

    /// External tensor product on `prod`, which must be `Poset::product` of
    /// the two bases. Basis index at `(x, y)` is `i * rank_b(y) + j`.
    pub fn product(prod: Arc<Poset>, a: &Sheaf<V>, b: &Sheaf<V>) -> Result<Self, SheafError> {
        let (na, nb) = (a.base.len(), b.base.len());
        if prod.len() != na * nb {
            return Err(SheafError::BaseMismatch);
        }
        let ranks: Vec<usize> = (0..na * nb).map(|i| a.ranks[i / nb] * b.ranks[i % nb]).collect();
        let mut maps = HashMap::new();
        for (lo, hi) in prod.covers() {
            let (x, y) = (lo / nb, lo % nb);
            let (x2, y2) = (hi / nb, hi % nb);
            let m = if y == y2 {
                a.maps[&(x, x2)].kron(&IntMatrix::identity(b.ranks[y]))
            } else {
                IntMatrix::identity(a.ranks[x]).kron(&b.maps[&(y, y2)])
            };
            maps.insert((lo, hi), m);
        }
        Ok(Sheaf { base: prod, ranks, maps, _v: PhantomData })
    }
}

fn label_or(p: &Poset, x: usize) -> String {
    if x < p.len() {
        p.label(x).to_string()
    } else {
        format!("#{x}")
    }
}

/// Homomorphism over a poset map: components `source(x) -> target(f(x))`.
#[derive(Clone, Debug)]
pub struct FHom<V: Variance> {
    morphism: PosetMorphism,
    source: Arc<Sheaf<V>>,
    target: Arc<Sheaf<V>>,
    components: Vec<IntMatrix>,
}

impl<V: Variance> FHom<V> {
    pub fn new(
        morphism: PosetMorphism,
        source: Arc<Sheaf<V>>,
        target: Arc<Sheaf<V>>,
        components: Vec<IntMatrix>,
    ) -> Result<Self, SheafError> {
        let h = Self::new_unchecked(morphism, source, target, components)?;
        h.validate()?;
        Ok(h)
    }

    /// Checks shapes only; `validate` checks compatibility with the maps.
    pub fn new_unchecked(
        morphism: PosetMorphism,
        source: Arc<Sheaf<V>>,
        target: Arc<Sheaf<V>>,
        components: Vec<IntMatrix>,
    ) -> Result<Self, SheafError> {
        if !Arc::ptr_eq(morphism.source(), &source.base) || !Arc::ptr_eq(morphism.target(), &target.base) {
            return Err(SheafError::BaseMismatch);
        }
        if components.len() != source.base.len() {
            return Err(SheafError::BaseMismatch);
        }
        for (x, c) in components.iter().enumerate() {
            let expected = (target.ranks[morphism.apply(x)], source.ranks[x]);
            if c.shape() != expected {
                return Err(SheafError::ComponentShape {
                    x: source.base.label(x).into(),
                    expected,
                    found: c.shape(),
                });
            }
        }
        Ok(FHom { morphism, source, target, components })
    }

    pub fn validate(&self) -> Result<(), SheafError> {
        let f = &self.morphism;
        for (lo, hi) in self.source.base.covers() {
            let t_map = self.target.map_between(f.apply(lo), f.apply(hi));
            let s_map = &self.source.maps[&(lo, hi)];
            let ok = if V::IS_CO {
                self.components[hi].mul(s_map).unwrap() == t_map.mul(&self.components[lo]).unwrap()
            } else {
                self.components[lo].mul(s_map).unwrap() == t_map.mul(&self.components[hi]).unwrap()
            };
            if !ok {
                return Err(SheafError::Incompatible {
                    lo: self.source.base.label(lo).into(),
                    hi: self.source.base.label(hi).into(),
                });
            }
        }
        Ok(())
    }

    pub fn morphism(&self) -> &PosetMorphism {
        &self.morphism
    }

    pub fn source(&self) -> &Arc<Sheaf<V>> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Sheaf<V>> {
        &self.target
    }

    pub fn component(&self, x: usize) -> &IntMatrix {
        &self.components[x]
    }

    /// The map `delta_x Z ~> delta_y Z` that is the identity at `x`. For
    /// presheaves `x` must be minimal in `f^{-1}(y)`, for copresheaves
    /// maximal.
    pub fn star(f: &PosetMorphism, x: usize, y: usize) -> Result<Self, SheafError> {
        let extremal = if V::IS_CO { f.is_maximal_in_fiber(x) } else { f.is_minimal_in_fiber(x) };
        if f.apply(x) != y {
            return Err(SheafError::WrongFiber { x: f.source().label(x).into() });
        }
        if !extremal {
            return Err(SheafError::NotExtremal { x: f.source().label(x).into() });
        }
        let h = Self::star_unchecked(f, x, y);
        h.validate()?;
        Ok(h)
    }

    pub fn star_unchecked(f: &PosetMorphism, x: usize, y: usize) -> Self {
        let source = Arc::new(Sheaf::<V>::delta_at(f.source().clone(), x));
        let target = Arc::new(Sheaf::<V>::delta_at(f.target().clone(), y));
        let components = (0..f.source().len())
            .map(|z| {
                let r = target.ranks[f.apply(z)];
                if z == x {
                    IntMatrix::identity(1)
                } else {
                    IntMatrix::zeros(r, 0)
                }
            })
            .collect();
        FHom { morphism: f.clone(), source, target, components }
    }

    /// Identity components `f^* S ~> S`.
    pub fn canonical_pullback(f: &PosetMorphism, s: Arc<Sheaf<V>>) -> Result<Self, SheafError> {
        let pulled = Arc::new(Sheaf::pullback(f, &s)?);
        let components = (0..pulled.base.len()).map(|x| IntMatrix::identity(pulled.ranks[x])).collect();
        Self::new(f.clone(), pulled, s, components)
    }
}

/// Scalar helper used when building components by hand.
pub fn scalar(v: i64) -> IntMatrix {
    let mut m = IntMatrix::zeros(1, 1);
    m.set(0, 0, Int::from(v));
    m
}
