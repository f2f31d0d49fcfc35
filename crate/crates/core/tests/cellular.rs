mod common;

use std::collections::HashMap;
use std::sync::Arc;

use orbicell::cellular::{self, CellularForm, Construction};
use orbicell::linalg::{self, ChainComplex, IntMatrix};
use orbicell::orbit::{BondLattice, Graph};
use orbicell::poset::{Poset, PosetMorphism};
use orbicell::sheaf::{Co, Copresheaf, FHom, Pre, Presheaf};
use orbicell::tor::{self, KComplex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pi(n: usize) -> Arc<Poset> {
    BondLattice::new(&Graph::complete(n)).poset().clone()
}

fn form_of(g: Copresheaf) -> CellularForm {
    match cellular::construct_cellular_form(&Arc::new(g)).unwrap() {
        Construction::Cellular(f) => f,
        Construction::NotCellular(nc) => panic!("{nc}"),
    }
}

#[test]
fn perturbed_differential_is_caught() {
    let l = pi(3);
    let form = form_of(Copresheaf::delta_at(l.clone(), 0));
    assert!(form.verify(true).is_ok());
    let top = l.top().unwrap();
    let mut diff = HashMap::new();
    for (y, x) in l.covers() {
        diff.insert((y, x), form.differential(y, x).clone());
    }
    let y = l.down_covers(top)[0];
    let mut d = diff[&(y, top)].clone();
    let v = d.get(0, 0).clone();
    d.set(0, 0, v + 1);
    diff.insert((y, top), d);
    let bad = CellularForm::from_parts(form.copresheaf().clone(), form.piece_ranks().to_vec(), diff).unwrap();
    let v = bad.verify(true).unwrap_err();
    assert_eq!(v.element, l.label(top));
    assert!(bad.verify(false).is_err());
}

#[test]
fn os_presentation_of_pi3_is_a_form() {
    let l = pi(3);
    let os = orbicell::os_algebra::OsAlgebra::new(l.clone()).unwrap();
    let f = os.as_cellular_form(Arc::new(Copresheaf::delta_at(l, 0))).unwrap();
    assert!(f.verify(false).is_ok());
    assert!(f.verify(true).is_ok());
}

/// Shuffle element order and relabel; the verdict and piece ranks by label
/// must not change.
#[test]
fn construction_ignores_element_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..25 {
        let p = common::random_graded(&mut rng, 4, 4);
        let mut perm: Vec<usize> = (0..p.len()).collect();
        perm.shuffle(&mut rng);
        let labels: Vec<String> = perm.iter().map(|&i| p.label(i).to_string()).collect();
        let pos: HashMap<usize, usize> = perm.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let covers: Vec<(usize, usize)> = p.covers().iter().map(|&(a, b)| (pos[&a], pos[&b])).collect();
        let ranks = perm.iter().map(|&i| p.rank(i)).collect();
        let q = Arc::new(Poset::from_covers(labels, &covers, Some(ranks)).unwrap());
        let a = cellular::construct_cellular_form(&Arc::new(Copresheaf::constant(p.clone()))).unwrap();
        let b = cellular::construct_cellular_form(&Arc::new(Copresheaf::constant(q.clone()))).unwrap();
        match (a, b) {
            (Construction::Cellular(fa), Construction::Cellular(fb)) => {
                for x in 0..p.len() {
                    assert_eq!(fa.piece_rank(x), fb.piece_rank(pos[&x]));
                }
            }
            (Construction::NotCellular(_), Construction::NotCellular(_)) => {}
            _ => panic!("verdict depends on element order"),
        }
    }
}

/// Rational rank of the map induced on `H_n` by chain maps `f`.
fn homology_map_rank(src: &ChainComplex, dst: &ChainComplex, f: &[IntMatrix], n: usize) -> usize {
    let cols = src.dims()[n];
    let dz = match src.boundary(n) {
        Some(d) => d.clone(),
        None => IntMatrix::zeros(0, cols),
    };
    let z = linalg::kernel_basis(&dz);
    if z.is_empty() || dst.dims().get(n).copied().unwrap_or(0) == 0 {
        return 0;
    }
    let zmat = IntMatrix::from_columns(cols, &z);
    let img = f[n].mul(&zmat).unwrap();
    let rows = dst.dims()[n];
    let b = match dst.boundary(n + 1) {
        Some(d) => d.clone(),
        None => IntMatrix::zeros(rows, 0),
    };
    let both = IntMatrix::hstack(&[&img, &b], rows);
    linalg::rank(&both) - linalg::rank(&b)
}

/// The map on Tor from `phi (x) k` on cellular chains has the same rank in
/// every degree as the brute-force `(k, t)_#` on `K_*`. Returns the total rank.
fn compare_induced(src: &CellularForm, dst: &CellularForm, t: &FHom<Co>, k: &FHom<Pre>) -> usize {
    let phi = cellular::form_morphism(k.morphism(), t, src, dst).unwrap();
    let cmap = cellular::cellular_chain_map(&phi, src, dst, k).unwrap();
    let csrc = src.cellular_chain(k.source());
    let cdst = dst.cellular_chain(k.target());
    let ksrc = KComplex::build(k.source(), t.source(), 200).unwrap();
    let kdst = KComplex::build(k.target(), t.target(), 200).unwrap();
    let kmap = tor::induced_tor_map(k, t, &ksrc, &kdst).unwrap();
    let mut total = 0;
    for n in 0..csrc.dims().len().min(cdst.dims().len()) {
        let a = homology_map_rank(&csrc, &cdst, &cmap, n);
        let b = if n < kmap.len() { homology_map_rank(ksrc.complex(), kdst.complex(), &kmap, n) } else { 0 };
        assert_eq!(a, b, "degree {n}");
        total += a;
    }
    total
}

#[test]
fn join_map_on_pi3_matches_oracle() {
    let l = pi(3);
    let n = l.len();
    let lambda = form_of(Copresheaf::delta_at(l.clone(), 0));
    let jm = PosetMorphism::join_map(&l).unwrap();
    let prod = jm.source().clone();
    let on_prod = cellular::product_form(prod.clone(), &lambda, &lambda).unwrap();
    let t = FHom::<Co>::star(&jm, 0, 0).unwrap();
    let mut nonzero = 0;
    for x in 0..prod.len() {
        if !jm.is_minimal_in_fiber(x) {
            continue;
        }
        let k = FHom::<Pre>::star(&jm, x, jm.apply(x)).unwrap();
        let r = compare_induced(&on_prod, &lambda, &t, &k);
        if l.rank(jm.apply(x)) != l.rank(x / n) + l.rank(x % n) {
            assert_eq!(r, 0, "rank-dropping pair must induce zero");
        }
        nonzero += usize::from(r > 0);
    }
    assert!(nonzero > 0);
}

#[test]
fn projection_onto_upset_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut compared, mut nonzero) = (0, 0);
    for _ in 0..30 {
        let p = common::random_graded(&mut rng, 4, 3);
        let g = Arc::new(Copresheaf::constant(p.clone()));
        let Construction::Cellular(form) = cellular::construct_cellular_form(&g).unwrap() else {
            continue;
        };
        let x = rand::Rng::gen_range(&mut rng, 0..p.len());
        let up: Vec<bool> = (0..p.len()).map(|y| p.leq(x, y)).collect();
        let f = Arc::new(Presheaf::constant(p.clone()));
        let e = Arc::new(common::scaled::<Pre>(&p, &up, 1));
        let comps = (0..p.len()).map(|y| if up[y] { IntMatrix::identity(1) } else { IntMatrix::zeros(0, 1) }).collect();
        let id = PosetMorphism::identity(p.clone());
        let k = FHom::<Pre>::new(id.clone(), f, e, comps).unwrap();
        let t = FHom::<Co>::new(id, g.clone(), g.clone(), (0..p.len()).map(|_| IntMatrix::identity(1)).collect()).unwrap();
        nonzero += usize::from(compare_induced(&form, &form, &t, &k) > 0);
        compared += 1;
    }
    assert!(compared >= 5 && nonzero > 0);
}
