//! One PASS/FAIL line per acceptance criterion. Lines go straight to the
//! process stdout so they show up without `--nocapture`.

mod common;

use std::io::Write;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use orbicell::cellular::{self, Construction};
use orbicell::orbit::{BondLattice, Graph};
use orbicell::os_algebra::{self, OsAlgebra};
use orbicell::ring::{self, RingPresentation};
use orbicell::sheaf::{Copresheaf, Presheaf};
use orbicell::tor::{self, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LIMIT: usize = 200;

fn line(n: u32, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{tag} criterion {n}: {detail}");
    let _ = out.flush();
}

fn finish(n: u32, failures: &[String], ok_detail: String) {
    if failures.is_empty() {
        line(n, true, &ok_detail);
    } else {
        line(n, false, &failures.join("; "));
        panic!("criterion {n} failed: {}", failures.join("; "));
    }
}

fn partition_lattice(n: usize) -> Arc<orbicell::poset::Poset> {
    BondLattice::new(&Graph::complete(n)).poset().clone()
}

#[test]
fn criterion_1_rank_formula_against_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut done = Vec::new();
    for (name, g) in [("K2", Graph::complete(2)), ("K3", Graph::complete(3)), ("path3", Graph::path(3))] {
        for k in [2u32, 3] {
            let outcome = RingPresentation::build(&g, k, 2, Mode::Complex, false)
                .and_then(|r| ring::check_additive(&r, LIMIT).map(|c| (r.lattice().len(), c)));
            match outcome {
                Ok((size, c)) if c.passed => done.push(format!("{name} k={k} ({size} elements)")),
                Ok((_, c)) => failures.push(format!("{name} k={k}: {}", c.detail)),
                Err(e) => failures.push(format!("{name} k={k}: {e}")),
            }
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(300) {
        failures.push(format!("took {:.1}s", took.as_secs_f64()));
    }
    finish(1, &failures, format!("Tor ranks match on {} in {:.1}s", done.join(", "), took.as_secs_f64()));
}

#[test]
fn criterion_2_cup_product_against_oracle() {
    let mut failures = Vec::new();
    let mut done = Vec::new();
    for (name, g) in [("K2", Graph::complete(2)), ("path3", Graph::path(3))] {
        let outcome = RingPresentation::build(&g, 2, 2, Mode::Complex, true).and_then(|r| {
            if !r.lattice().sigma_is_bijective() {
                return Ok((false, "sigma not bijective, products would be skipped".to_string()));
            }
            ring::check_products(&r, LIMIT).map(|c| (c.passed, c.detail))
        });
        match outcome {
            Ok((true, d)) => done.push(format!("{name}: {d}")),
            Ok((false, d)) => failures.push(format!("{name}: {d}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    finish(2, &failures, done.join(", "));
}

#[test]
fn criterion_3_k1_is_configuration_space() {
    let mut failures = Vec::new();
    let mut done = 0;
    for n in 1..=4 {
        for m in [2usize, 3] {
            let want = ring::configuration_poincare(n, m);
            match RingPresentation::build(&Graph::complete(n), 1, m, Mode::Complex, false) {
                Ok(r) => {
                    let mut got = r.poincare();
                    while got.len() > want.len() && got.last() == Some(&0) {
                        got.pop();
                    }
                    if got == want {
                        done += 1;
                    } else {
                        failures.push(format!("n={n} m={m}: {got:?} vs {want:?}"));
                    }
                }
                Err(e) => failures.push(format!("n={n} m={m}: {e}")),
            }
        }
    }
    finish(3, &failures, format!("{done} cases n<=4, m in {{2,3}} equal prod(1 + i t^(2m-1))"));
}

#[test]
fn criterion_4_os_cross_check() {
    let mut failures = Vec::new();
    let mut products = 0;
    for n in 1..=5 {
        let l = partition_lattice(n);
        let g = Arc::new(Copresheaf::delta_at(l.clone(), l.bottom().unwrap()));
        let form = match cellular::construct_cellular_form(&g) {
            Ok(Construction::Cellular(f)) => f,
            Ok(Construction::NotCellular(nc)) => {
                failures.push(format!("Pi_{n}: {nc}"));
                continue;
            }
            Err(e) => {
                failures.push(format!("Pi_{n}: {e}"));
                continue;
            }
        };
        let os = OsAlgebra::new(l.clone()).unwrap();
        let total: usize = form.piece_ranks().iter().sum();
        let factorial: usize = (1..=n).product();
        if (0..l.len()).any(|x| form.piece_rank(x) != os.piece_rank(x)) || total != factorial {
            failures.push(format!("Pi_{n}: ranks {:?}, total {total}", form.rank_profile()));
        }
        if n <= 4 {
            match os_algebra::os_vs_cellular(l, true) {
                Ok(c) => products += c.products_checked,
                Err(e) => failures.push(format!("Pi_{n} products: {e}")),
            }
        }
    }
    finish(4, &failures, format!("nbc ranks for n<=5 (totals n!), {products} structure constants for n<=4"));
}

/// Tor of `delta_x Z` against `g` lives only in degree `r(x)` for every `x`.
fn tor_concentrated(g: &Copresheaf) -> Result<bool, tor::TorError> {
    let p = g.base();
    for x in 0..p.len() {
        let h = tor::tor(&Presheaf::delta_at(p.clone(), x), g, 60)?;
        if h.support().iter().any(|&d| d != p.rank(x)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[test]
fn criterion_5_cellular_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();
    let (mut cellular_ok, mut rejected, mut torsion) = (0, 0, 0);
    let mut tried = 0;
    while (cellular_ok < 20 || tried < 40) && tried < 400 {
        tried += 1;
        let (p, g, f) = common::random_triple(&mut rng);
        let built = match cellular::construct_cellular_form(&g) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("triple {tried}: {e}"));
                continue;
            }
        };
        let concentrated = match tor_concentrated(&g) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("triple {tried}: {e}"));
                continue;
            }
        };
        match built {
            Construction::Cellular(form) => {
                cellular_ok += 1;
                let cell = form.cellular_homology(&f).trimmed();
                let k = tor::tor(&f, &g, 60).unwrap().trimmed();
                if !cell.is_free() {
                    torsion += 1;
                }
                if cell != k {
                    failures.push(format!("triple {tried} ({} elements): {cell:?} vs {k:?}", p.len()));
                }
                if !concentrated {
                    failures.push(format!("triple {tried}: form built but Tor not concentrated"));
                }
            }
            Construction::NotCellular(nc) => {
                rejected += 1;
                if concentrated {
                    failures.push(format!("triple {tried}: {nc} but every Tor is concentrated"));
                }
            }
        }
    }
    if cellular_ok < 20 {
        failures.push(format!("only {cellular_ok} cellular triples in {tried}"));
    }
    finish(
        5,
        &failures,
        format!("{tried} triples: {cellular_ok} cellular agree with K_* ({torsion} with torsion), {rejected} rejected with Tor off rank"),
    );
}

#[test]
fn criterion_6_ring_axioms() {
    let mut failures = Vec::new();
    let mut done = Vec::new();
    for n in [2, 3] {
        match RingPresentation::build(&Graph::complete(n), 2, 2, Mode::Complex, true) {
            Ok(r) => {
                let c = ring::check_axioms(&r, true);
                if c.passed {
                    done.push(format!("K{n}: {}", c.detail));
                } else {
                    failures.push(format!("K{n}: {}", c.detail));
                }
            }
            Err(e) => failures.push(format!("K{n}: {e}")),
        }
    }
    finish(6, &failures, done.join(", "));
}

#[test]
fn criterion_7_real_case() {
    let mut failures = Vec::new();
    let r = RingPresentation::build(&Graph::complete(2), 2, 2, Mode::Real, true).unwrap();
    let p = r.poincare();
    if p != vec![1, 9] {
        failures.push(format!("Gr poincare {p:?}"));
    }
    match ring::check_gm(&r, LIMIT) {
        Ok(c) if c.passed => {}
        Ok(c) => failures.push(c.detail),
        Err(e) => failures.push(e.to_string()),
    }
    finish(7, &failures, format!("Gr poincare {} over Z/2 matches real-mode oracle", ring::poly_string(&p)));
}

#[test]
fn criterion_8_mobius() {
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for n in 1..=6usize {
        let l = partition_lattice(n);
        let mu = l.mobius(l.bottom().unwrap(), l.top().unwrap());
        let fact: i64 = (1..n as i64).product();
        let want = if n % 2 == 1 { fact } else { -fact };
        if mu != want {
            failures.push(format!("Pi_{n}: {mu} vs {want}"));
        }
        values.push(mu.to_string());
    }
    finish(8, &failures, format!("mu(Pi_1..Pi_6) = {}", values.join(", ")));
}

#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_orbicell");
    let dir = tempfile::tempdir().unwrap();
    let pi3 = dir.path().join("pi3.json");
    std::fs::write(&pi3, partition_lattice(3).to_json().to_string()).unwrap();
    let pi3s = pi3.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["betti", "--complete", "3", "--k", "2", "--m", "2"],
        vec!["betti", "--complete", "3", "--k", "1", "--m", "3"],
        vec!["ring", "--complete", "2", "--k", "3", "--m", "2"],
        vec!["ring", "--complete", "2", "--k", "2", "--m", "2", "--mode", "real"],
        vec!["verify", "--complete", "2", "--k", "2", "--m", "2"],
        vec!["cellular", "--poset", pi3s],
        vec!["ring", "--m", "1"],
    ];
    let mut failures = Vec::new();
    let mut runs = 0;
    for (i, args) in commands.iter().enumerate() {
        for json in [false, true] {
            let mut outputs = Vec::new();
            for rep in 0..2 {
                let out_path = dir.path().join(format!("out{i}_{rep}.json"));
                let mut cmd = Command::new(bin);
                cmd.args(args);
                if json {
                    cmd.arg("--out").arg(&out_path);
                }
                let o = cmd.output().unwrap();
                let file = std::fs::read(&out_path).unwrap_or_default();
                // the --out note names the file, which differs per run
                let stdout = if json { Vec::new() } else { o.stdout };
                outputs.push((o.status.code(), stdout, o.stderr, file));
                runs += 1;
            }
            if outputs[0] != outputs[1] {
                failures.push(format!("{} (json={json}) differs between runs", args.join(" ")));
            }
        }
    }
    finish(9, &failures, format!("{runs} runs over {} commands, byte-identical in pairs", commands.len()));
}
