mod common;

use std::sync::OnceLock;

use num_traits::Zero;
use orbicell::cellular::{self, Construction};
use orbicell::linalg::Int;
use orbicell::orbit::{BondLattice, Graph, OrbitLattice, DEFAULT_SIZE_LIMIT};
use orbicell::os_algebra::OsAlgebra;
use orbicell::tor;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn k3_lattice() -> &'static OrbitLattice {
    static L: OnceLock<OrbitLattice> = OnceLock::new();
    L.get_or_init(|| OrbitLattice::new(&Graph::complete(3), 2, 2, DEFAULT_SIZE_LIMIT).unwrap())
}

fn pi4_os() -> &'static OsAlgebra {
    static A: OnceLock<OsAlgebra> = OnceLock::new();
    A.get_or_init(|| OsAlgebra::new(BondLattice::new(&Graph::complete(4)).poset().clone()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orbit_join_is_least_upper_bound(x in 0usize..53, y in 0usize..53) {
        let l = k3_lattice();
        prop_assume!(x < l.len() && y < l.len());
        let p = l.poset();
        let j = l.join(x, y);
        prop_assert_eq!(j, l.join(y, x));
        prop_assert_eq!(l.join(x, x), x);
        prop_assert!(p.leq(x, j) && p.leq(y, j));
        for z in 0..l.len() {
            if p.leq(x, z) && p.leq(y, z) {
                prop_assert!(p.leq(j, z));
            }
        }
    }

    #[test]
    fn orbit_join_is_associative(x in 0usize..53, y in 0usize..53, z in 0usize..53) {
        let l = k3_lattice();
        prop_assert_eq!(l.join(l.join(x, y), z), l.join(x, l.join(y, z)));
    }

    #[test]
    fn restriction_goes_down(x in 0usize..53, b in 0usize..5) {
        let l = k3_lattice();
        let bond = l.bond();
        let base = l.projection(x);
        prop_assume!(bond.poset().leq(b, base));
        let r = l.restrict(x, b);
        prop_assert!(l.poset().leq(r, x));
        prop_assert_eq!(l.projection(r), b);
        prop_assert_eq!(l.restrict(x, base), x);
    }

    #[test]
    fn os_graded_commutative(x in 0usize..15, y in 0usize..15, i in 0usize..6, j in 0usize..6) {
        let os = pi4_os();
        let p = os.lattice();
        let (i, j) = (i % os.piece_rank(x), j % os.piece_rank(y));
        let (z, a) = os.multiply_basis(x, i, y, j);
        let (w, b) = os.multiply_basis(y, j, x, i);
        prop_assert_eq!(z, w);
        let sign = if p.rank(x) * p.rank(y) % 2 == 1 { -1 } else { 1 };
        let b: Vec<Int> = b.into_iter().map(|v| v * Int::from(sign)).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn os_associative(x in 0usize..15, y in 0usize..15, z in 0usize..15, i in 0usize..6, j in 0usize..6, k in 0usize..6) {
        let os = pi4_os();
        let (i, j, k) = (i % os.piece_rank(x), j % os.piece_rank(y), k % os.piece_rank(z));
        let unit = |n: usize, at: usize| {
            let mut v = vec![Int::zero(); n];
            v[at] = Int::from(1);
            v
        };
        let (ex, ey, ez) = (unit(os.piece_rank(x), i), unit(os.piece_rank(y), j), unit(os.piece_rank(z), k));
        let (xy, vxy) = os.multiply(x, &ex, y, &ey);
        let (l, left) = os.multiply(xy, &vxy, z, &ez);
        let (yz, vyz) = os.multiply(y, &ey, z, &ez);
        let (r, right) = os.multiply(x, &ex, yz, &vyz);
        prop_assert_eq!(l, r);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn graph_json_round_trip(n in 1usize..8, raw in proptest::collection::vec((1usize..8, 1usize..8), 0..12)) {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|&(a, b)| a != b && a <= n && b <= n).collect();
        let g = Graph::new(n, &edges).unwrap();
        let h = Graph::from_json_str(&g.to_json().to_string()).unwrap();
        prop_assert_eq!(g.edges(), h.edges());
        prop_assert_eq!(g.n(), h.n());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// A constructed form satisfies its own axioms and computes Tor.
    #[test]
    fn cellular_form_computes_tor(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, g, f) = common::random_triple(&mut rng);
        if let Construction::Cellular(form) = cellular::construct_cellular_form(&g).unwrap() {
            prop_assert!(form.verify(true).is_ok());
            prop_assert_eq!(form.cellular_homology(&f).trimmed(), tor::tor(&f, &g, 60).unwrap().trimmed());
        }
    }

    /// Layered posets are graded, and the Moebius function computed by rows
    /// also satisfies the column recursion.
    #[test]
    fn random_posets_are_graded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_graded(&mut rng, 5, 5);
        prop_assert!(p.is_graded());
        for x in 0..p.len() {
            for y in 0..p.len() {
                if p.lt(x, y) {
                    let s: i64 = (0..p.len()).filter(|&z| p.leq(x, z) && p.leq(z, y)).map(|z| p.mobius(z, y)).sum();
                    prop_assert_eq!(s, 0);
                }
            }
        }
    }
}
