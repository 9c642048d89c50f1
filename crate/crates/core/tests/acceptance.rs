//! Acceptance suite. Each test pins one numbered criterion against the
//! pairing oracle at small primes and prints a single verdict line of the
//! form `PASS criterion NN: ...` or `FAIL criterion NN: ...`.
//!
//! The two-coordinate law `t2` is the worked oracle throughout. Its
//! grid is p in {2, 3} with level R up to 2 and p = 5 with R up to 1,
//! which keeps every exponent inside the safe truncation cap while
//! still exercising multi-digit indices. Timed criteria assert their
//! wall-clock budgets after the mathematical checks.

use std::sync::Arc;
use std::time::{Duration, Instant};

use fgdist_core::arith::{padic_digits, padic_factorial, MultiIndex, Prime};
use fgdist_core::dist::{safe_cap, DistLevel, Distribution, MultCombo, MultMonomial};
use fgdist_core::group::builtin_law;
use fgdist_core::poisson::PoissonTable;
use fgdist_core::reconstruct::{build_u, swap_order_equivalence};
use fgdist_core::rewrite::{monomial_word, pbw_basis};

/// Levels for the two-block oracle: every (p, R) the closed-form
/// criteria range over.
const T2_GRID: &[(u32, u32)] = &[(2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (5, 0), (5, 1)];

fn level(expr: &str, p: u32, r: u32) -> Arc<DistLevel> {
    let prime = Prime::new(p).expect("grid primes are prime");
    let probe = builtin_law(expr, prime, 4).expect("builtin expression parses");
    let cap = safe_cap(prime, r, probe.num_coords()).expect("cap fits in u32");
    let law = builtin_law(expr, prime, cap).expect("builtin law builds");
    DistLevel::new(Arc::new(law), r).expect("level under the safe cap")
}

/// Index of `x^a y^b` in a two-coordinate law with x first.
fn xy(a: u32, b: u32) -> MultiIndex {
    let mut j = MultiIndex::zero(2);
    j.0[0] = a;
    j.0[1] = b;
    j
}

fn verdict(criterion: &str, failures: &[String], summary: &str) {
    if failures.is_empty() {
        println!("PASS {criterion}: {summary}");
    } else {
        println!("FAIL {criterion}: {} checks failed", failures.len());
        panic!("{criterion}: {}", failures.join("; "));
    }
}

/// Closed form of `d[x^(p^r)] * d[y^(p^s)]`: the joint generator, plus
/// `d[x^(p^r - p^s) y^(p^s)]` when r >= s.
fn forward_closed_form(lv: &Arc<DistLevel>, r: u32, s: u32) -> Distribution {
    let p = lv.modulus().get();
    let (pr, ps) = (p.pow(r), p.pow(s));
    let mut want = Distribution::zero(lv);
    want.add_term(&xy(pr, ps), 1);
    if r >= s {
        want.add_term(&xy(pr - ps, ps), 1);
    }
    want
}

/// Closed form of `d[y^(p^s)] * d[x^(p^r)]`: the alternating sum of
/// `d[x^(p^r - k p^s) y^(p^s)]` over 0 <= k <= p^(r-s), a single term
/// when r < s.
fn reverse_closed_form(lv: &Arc<DistLevel>, r: u32, s: u32) -> Distribution {
    let p = lv.modulus().get();
    let (pr, ps) = (p.pow(r), p.pow(s));
    let kmax = if r >= s { p.pow(r - s) } else { 0 };
    let mut want = Distribution::zero(lv);
    for k in 0..=kmax {
        let c = if k % 2 == 0 { 1 } else { p - 1 };
        want.add_term(&xy(pr - k * ps, ps), c);
    }
    want
}

/// Closed form of the commutator of the same pair: zero when r < s,
/// otherwise `2 d[x^(p^r - p^s) y^(p^s)]` minus the k >= 2 tail of the
/// reverse product.
fn commutator_closed_form(lv: &Arc<DistLevel>, r: u32, s: u32) -> Distribution {
    let p = lv.modulus().get();
    let mut want = Distribution::zero(lv);
    if r < s {
        return want;
    }
    let (pr, ps) = (p.pow(r), p.pow(s));
    want.add_term(&xy(pr - ps, ps), 2);
    for k in 2..=p.pow(r - s) {
        let c = if k % 2 == 0 { p - 1 } else { 1 };
        want.add_term(&xy(pr - k * ps, ps), c);
    }
    want
}

/// Claim: pairing-based products of the p-power generators of the
/// two-block law reproduce the closed forms in both operand orders on
/// the whole grid. Falsified by any (p, R, r, s) where either product
/// differs from its closed form.
#[test]
fn criterion_01_two_block_products_match_closed_forms() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut products = 0usize;
    for &(p, r_top) in T2_GRID {
        let lv = level("t2", p, r_top);
        for r in 0..=r_top {
            for s in 0..=r_top {
                let dx = Distribution::generator(&lv, lv.gen_id(0, r));
                let dy = Distribution::generator(&lv, lv.gen_id(1, s));
                let fwd = dx.mul(&dy).expect("product of box generators stays in the box");
                if !fwd.sub(&forward_closed_form(&lv, r, s)).is_zero() {
                    failures.push(format!("p={p} R={r_top} (r={r}, s={s}): forward product is {fwd}"));
                }
                let rev = dy.mul(&dx).expect("product of box generators stays in the box");
                if !rev.sub(&reverse_closed_form(&lv, r, s)).is_zero() {
                    failures.push(format!("p={p} R={r_top} (r={r}, s={s}): reverse product is {rev}"));
                }
                products += 2;
            }
        }
    }
    let elapsed = t0.elapsed();
    if elapsed > Duration::from_secs(30) {
        failures.push(format!("runtime {elapsed:?} exceeds the 30 s budget"));
    }
    verdict(
        "criterion 01 (two-block product closed forms)",
        &failures,
        &format!("{products} products match in {elapsed:?}"),
    );
}

/// Claim: the extracted bracket table stores exactly the generator
/// commutators, zero included, across the grid. Falsified by any stored
/// or absent entry that differs from the commutator closed form.
#[test]
fn criterion_02_extracted_brackets_match_commutators() {
    let mut failures = Vec::new();
    let mut pairs = 0usize;
    for &(p, r_top) in T2_GRID {
        let lv = level("t2", p, r_top);
        let table = PoissonTable::extract(&lv).expect("extraction succeeds on the oracle law");
        for r in 0..=r_top {
            for s in 0..=r_top {
                let got = table
                    .bracket_generators(lv.gen_id(0, r), lv.gen_id(1, s))
                    .to_additive()
                    .expect("table values expand in the box");
                if !got.sub(&commutator_closed_form(&lv, r, s)).is_zero() {
                    failures.push(format!("p={p} R={r_top} (r={r}, s={s}): table bracket is {got}"));
                }
                pairs += 1;
            }
        }
    }
    verdict(
        "criterion 02 (extracted bracket table)",
        &failures,
        &format!("{pairs} generator pairs match the commutator closed form"),
    );
}

/// Claim: in the one-coordinate multiplicative law,
/// `d[x^(p^r)] * d[x^m] = (m_r + 1) d[x^(m + p^r)] + m_r d[x^m]`
/// whenever the top digit m_r is below p - 1 and the result index fits
/// the box. Falsified by any (p, R, r, m) instance that diverges.
#[test]
fn criterion_03_multiplicative_recursion_holds() {
    let mut failures = Vec::new();
    let mut instances = 0usize;
    for p in [2u32, 3, 5] {
        for r_top in 0..=2u32 {
            let lv = level("gm", p, r_top);
            let bound = lv.bound();
            for r in 0..=r_top {
                let pr = p.pow(r);
                let dx = Distribution::generator(&lv, lv.gen_id(0, r));
                for m in 0..=(bound - pr) {
                    let m_r = (m / pr) % p;
                    if m_r >= p - 1 {
                        continue;
                    }
                    let dm = Distribution::basis(&lv, MultiIndex::single(1, 0, m))
                        .expect("index below the bound");
                    let got = dx.mul(&dm).expect("product index fits the box");
                    let mut want = Distribution::zero(&lv);
                    want.add_term(&MultiIndex::single(1, 0, m + pr), m_r + 1);
                    want.add_term(&MultiIndex::single(1, 0, m), m_r);
                    if !got.sub(&want).is_zero() {
                        failures.push(format!("p={p} R={r_top} r={r} m={m}: product is {got}"));
                    }
                    instances += 1;
                }
            }
        }
    }
    verdict(
        "criterion 03 (multiplicative one-step recursion)",
        &failures,
        &format!("{instances} instances verified"),
    );
}

/// Claim: p-th powers of the p-power generators are the generator
/// itself in the multiplicative law and zero in the additive law, and
/// the filtration bounds hold, weight of a p-th power at most
/// p^(r+1) - 1 and weight of a generator commutator at most
/// p^r + p^s - 1, across the two-block grid. Falsified by any generator
/// or pair exceeding its bound or any wrong p-th power value.
#[test]
fn criterion_04_frobenius_values_and_filtration_bounds() {
    let mut failures = Vec::new();
    let mut checks = 0usize;
    for p in [2u32, 3, 5] {
        for r_top in 0..=2u32 {
            let gm = level("gm", p, r_top);
            let ga = level("ga", p, r_top);
            for r in 0..=r_top {
                let fixed = gm.frobenius(gm.gen_id(0, r)).expect("p-th power expands");
                if !fixed.sub(&Distribution::generator(&gm, gm.gen_id(0, r))).is_zero() {
                    failures.push(format!("gm p={p} R={r_top} r={r}: p-th power is {fixed}"));
                }
                let zero = ga.frobenius(ga.gen_id(0, r)).expect("p-th power expands");
                if !zero.is_zero() {
                    failures.push(format!("ga p={p} R={r_top} r={r}: p-th power is {zero}"));
                }
                checks += 2;
            }
        }
    }
    for &(p, r_top) in T2_GRID {
        let lv = level("t2", p, r_top);
        let n = lv.num_generators();
        for gid in 0..n {
            let f = lv.frobenius(gid).expect("p-th power expands");
            let limit = u64::from(p) * lv.gen_weight(gid) - 1;
            if f.filtration_degree() > limit {
                failures.push(format!(
                    "t2 p={p} R={r_top} {}: p-th power weighs {} above {limit}",
                    lv.gen_name(gid),
                    f.filtration_degree()
                ));
            }
            checks += 1;
        }
        for g1 in 0..n {
            for g2 in 0..n {
                let c = Distribution::generator(&lv, g1)
                    .commutator(&Distribution::generator(&lv, g2))
                    .expect("commutator stays in the box");
                let limit = lv.gen_weight(g1) + lv.gen_weight(g2) - 1;
                if c.filtration_degree() > limit {
                    failures.push(format!(
                        "t2 p={p} R={r_top} [{}, {}]: weight {} above {limit}",
                        lv.gen_name(g1),
                        lv.gen_name(g2),
                        c.filtration_degree()
                    ));
                }
                checks += 1;
            }
        }
    }
    verdict(
        "criterion 04 (p-th powers and filtration bounds)",
        &failures,
        &format!("{checks} values and bounds verified"),
    );
}

/// Claim: the additive and word-basis conversions invert each other on
/// the full basis in both directions, the additive law converts by the
/// inverse digitwise factorial alone, and the multiplicative law
/// satisfies the falling-factorial product formula
/// `d[x^m] = (1/m!_p) prod_t prod_{j<m_t} (d[x^(p^t)] - j)`.
/// Falsified by any basis element that fails to round trip or any m
/// where a formula side diverges.
#[test]
fn criterion_05_basis_changes_round_trip_and_match_formulas() {
    let mut failures = Vec::new();
    let mut round_trips = 0usize;
    let mut formula_checks = 0usize;
    let mut grid: Vec<(&str, u32, u32)> = Vec::new();
    for p in [2u32, 3] {
        for r_top in 0..=2u32 {
            grid.push(("ga", p, r_top));
            grid.push(("gm", p, r_top));
        }
        for r_top in 0..=1u32 {
            grid.push(("t2", p, r_top));
        }
    }
    for &(expr, p, r_top) in &grid {
        let lv = level(expr, p, r_top);
        for j in lv.box_indices().expect("box enumerates") {
            let d = Distribution::basis(&lv, j.clone()).expect("box index is a basis element");
            let c = d.to_mult().expect("conversion is triangular");
            let back = c.to_additive().expect("words expand in the box");
            if !back.sub(&d).is_zero() {
                failures.push(format!("{expr} p={p} R={r_top}: additive round trip moves {d}"));
            }
            round_trips += 1;
        }
        for m in pbw_basis(&lv).expect("word basis enumerates") {
            let c = MultCombo::monomial(&lv, m.clone());
            let d = c.to_additive().expect("words expand in the box");
            let back = d.to_mult().expect("conversion is triangular");
            if !back.sub(&c).is_zero() {
                failures.push(format!(
                    "{expr} p={p} R={r_top}: word round trip moves {}",
                    c.to_text()
                ));
            }
            round_trips += 1;
        }
    }
    for p in [2u32, 3] {
        let prime = Prime::new(p).expect("grid primes are prime");
        for r_top in 0..=2u32 {
            let ga = level("ga", p, r_top);
            let gm = level("gm", p, r_top);
            for n in 0..=ga.bound() {
                let c = Distribution::basis(&ga, MultiIndex::single(1, 0, n))
                    .expect("index below the bound")
                    .to_mult()
                    .expect("conversion is triangular");
                let word = MultMonomial::from_index(&ga, &MultiIndex::single(1, 0, n));
                let want = MultCombo::monomial(&ga, word)
                    .scale(padic_factorial(n.into(), prime).inverse());
                if !c.sub(&want).is_zero() {
                    failures.push(format!("ga p={p} R={r_top} n={n}: conversion is {}", c.to_text()));
                }
                formula_checks += 1;
            }
            for m in 0..=gm.bound() {
                let mut prod = Distribution::unit(&gm);
                for (t, &digit) in padic_digits(m.into(), prime).iter().enumerate() {
                    let gen = Distribution::generator(&gm, gm.gen_id(0, t as u32));
                    for j in 0..digit {
                        let shift = Distribution::unit(&gm).scale(prime.elt(j.into()));
                        prod = prod.mul(&gen.sub(&shift)).expect("factors fit the box");
                    }
                }
                let got = prod.scale(padic_factorial(m.into(), prime).inverse());
                let want = Distribution::basis(&gm, MultiIndex::single(1, 0, m))
                    .expect("index below the bound");
                if !got.sub(&want).is_zero() {
                    failures.push(format!("gm p={p} R={r_top} m={m}: falling factorial gives {got}"));
                }
                formula_checks += 1;
            }
        }
    }
    verdict(
        "criterion 05 (basis changes)",
        &failures,
        &format!("{round_trips} round trips and {formula_checks} formula instances verified"),
    );
}

/// Claim: the word basis has exactly p^(n(R+1)) elements, straightening
/// fixes every basis word and is idempotent on arbitrary short words,
/// and every S-polynomial of the extracted two-block system reduces to
/// zero. Falsified by a wrong count, a moved normal form, or a nonzero
/// residue.
#[test]
fn criterion_06_word_basis_counts_idempotence_and_confluence() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut words_checked = 0usize;
    for (expr, ncoords) in [("ga", 1u32), ("gm", 1), ("ga*gm", 2), ("t2", 2)] {
        for p in [2u32, 3] {
            for r_top in 0..=1u32 {
                let lv = level(expr, p, r_top);
                let want = (p as usize).pow(ncoords * (r_top + 1));
                let count = pbw_basis(&lv).expect("word basis enumerates").len();
                if count != want {
                    failures.push(format!("{expr} p={p} R={r_top}: {count} basis words, expected {want}"));
                }
            }
        }
    }
    for p in [2u32, 3] {
        for r_top in 0..=1u32 {
            let lv = level("t2", p, r_top);
            let table = PoissonTable::extract(&lv).expect("extraction succeeds on the oracle law");
            let rs = table.full_rewrite().expect("extracted corrections lower weight");
            let confluence = rs.s_polynomial_report().expect("residues reduce in the box");
            if !confluence.all_pass() {
                failures.push(format!("t2 p={p} R={r_top}: an S-polynomial residue is nonzero"));
            }
            for m in pbw_basis(&lv).expect("word basis enumerates") {
                let nf = rs.normal_form_word(&monomial_word(&m)).expect("straightening terminates");
                if !nf.sub(&MultCombo::monomial(&lv, m.clone())).is_zero() {
                    failures.push(format!(
                        "t2 p={p} R={r_top}: basis word {} is not fixed",
                        m.text(&lv)
                    ));
                }
            }
            let n = lv.num_generators() as u16;
            let mut words: Vec<Vec<u16>> = Vec::new();
            for a in 0..n {
                words.push(vec![a]);
                for b in 0..n {
                    words.push(vec![a, b]);
                    for c in 0..n {
                        words.push(vec![a, b, c]);
                    }
                }
            }
            for w in &words {
                let nf = rs.normal_form_word(w).expect("straightening terminates");
                for (mono, _) in nf.terms() {
                    let again = rs
                        .normal_form_word(&monomial_word(mono))
                        .expect("straightening terminates");
                    if !again.sub(&MultCombo::monomial(&lv, mono.clone())).is_zero() {
                        failures.push(format!(
                            "t2 p={p} R={r_top}: straightening moves the straightened word {}",
                            mono.text(&lv)
                        ));
                    }
                }
                words_checked += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    if elapsed > Duration::from_secs(60) {
        failures.push(format!("runtime {elapsed:?} exceeds the 60 s budget"));
    }
    verdict(
        "criterion 06 (word basis and straightening)",
        &failures,
        &format!("counts, confluence, and {words_checked} idempotence words verified in {elapsed:?}"),
    );
}

/// Claim: extracted two-block tables pass all four structural checks,
/// and each check rejects its documented corruption. Negating one
/// directed entry breaks skew, zeroing one breaks the Jacobi identity,
/// inflating one's weight breaks the filtration bound, and a constant
/// entry breaks multiplicativity. The corruptions run at p = 3 where
/// negation is not the identity. Falsified by a clean table failing or
/// a corrupted table passing its targeted check.
#[test]
fn criterion_07_bracket_axioms_pass_and_corruptions_fail() {
    let mut failures = Vec::new();
    for (p, r_top) in [(2u32, 0u32), (2, 1), (3, 0), (3, 1), (5, 0)] {
        let lv = level("t2", p, r_top);
        let table = PoissonTable::extract(&lv).expect("extraction succeeds on the oracle law");
        let report = table.check_all().expect("checks evaluate in the box");
        if !report.all_pass() {
            let first = report.first_failure().map(|c| c.name.clone()).unwrap_or_default();
            failures.push(format!("t2 p={p} R={r_top}: clean table fails {first}"));
        }
    }

    let lv = level("t2", 3, 1);
    let table = PoissonTable::extract(&lv).expect("extraction succeeds on the oracle law");
    let (gx, gx3, gy) = (lv.gen_id(0, 0), lv.gen_id(0, 1), lv.gen_id(1, 0));
    let base = table.bracket_generators(gy, gx);
    if base.is_zero() {
        failures.push("t2 p=3 R=1: expected a nonzero (y, x) entry to corrupt".into());
    }

    let negated = table
        .with_raw_entry(gy, gx, base.neg())
        .expect("replacing one entry keeps a well-formed table");
    if negated.check_skew_and_constants().all_pass() {
        failures.push("negated entry not caught by the skew check".into());
    }

    let zeroed = table
        .with_raw_entry(gy, gx3, MultCombo::zero(&lv))
        .expect("replacing one entry keeps a well-formed table");
    if zeroed.check_jacobi().expect("brackets evaluate in the box").all_pass() {
        failures.push("zeroed entry not caught by the Jacobi check".into());
    }

    let mut tall_digits = vec![0u16; lv.num_generators()];
    tall_digits[gx3] = 1;
    let tall = MultMonomial::from_digits(&lv, &tall_digits).expect("single letter is a word");
    let inflated = table
        .with_raw_entry(gy, gx, MultCombo::monomial(&lv, tall))
        .expect("replacing one entry keeps a well-formed table");
    if inflated.check_strongly_filtered().all_pass() {
        failures.push("degree-inflated entry not caught by the filtration check".into());
    }

    let constant = table
        .with_raw_entry(gy, gx, MultCombo::unit(&lv))
        .expect("replacing one entry keeps a well-formed table");
    if constant
        .check_strongly_multiplicative()
        .expect("coproducts evaluate in the box")
        .all_pass()
    {
        failures.push("constant entry not caught by the multiplicativity check".into());
    }

    verdict(
        "criterion 07 (bracket axioms and corruptions)",
        &failures,
        "clean tables pass all four checks and each corruption is caught",
    );
}

/// The laws and levels every reconstruction criterion ranges over.
fn reconstruction_instances() -> Vec<(&'static str, u32, u32)> {
    let mut out = Vec::new();
    for expr in ["ga", "gm", "ga*gm", "t2"] {
        for p in [2u32, 3] {
            for r_top in 0..=1u32 {
                out.push((expr, p, r_top));
            }
        }
    }
    out.push(("t2", 5, 0));
    out
}

/// Claim: the algebra rebuilt from block data plus the bracket table
/// has structure constants identical to the directly constructed
/// algebra on every instance, 256 of them at the two-coordinate p = 2,
/// R = 1 levels. Falsified by any diverging constant or a wrong
/// dimension.
#[test]
fn criterion_08_reconstruction_matches_the_oracle() {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut constants = 0usize;
    for (expr, p, r_top) in reconstruction_instances() {
        let lv = level(expr, p, r_top);
        let table = PoissonTable::extract(&lv).expect("extraction succeeds on builtin laws");
        let alg = build_u(&table).expect("rebuild succeeds on extracted tables");
        let report = alg.compare_with_oracle().expect("oracle products evaluate");
        if !report.all_pass() {
            let witness = report
                .first_failure()
                .and_then(|c| c.witness.clone())
                .unwrap_or_default();
            failures.push(format!("{expr} p={p} R={r_top}: {witness}"));
        }
        if lv.num_coords() == 2 && p == 2 && r_top == 1 && alg.dim() * alg.dim() != 256 {
            failures.push(format!("{expr} p=2 R=1: {} constants, expected 256", alg.dim() * alg.dim()));
        }
        constants += alg.dim() * alg.dim();
    }
    let elapsed = t0.elapsed();
    if elapsed > Duration::from_secs(120) {
        failures.push(format!("runtime {elapsed:?} exceeds the 120 s budget"));
    }
    verdict(
        "criterion 08 (reconstruction round trip)",
        &failures,
        &format!("{constants} structure constants identical in {elapsed:?}"),
    );
}

/// Claim: every rebuilt algebra is a well-formed divided-power
/// bialgebra, with the coproduct multiplicative on all basis pairs,
/// coassociative, and counital. Falsified by any rebuilt instance whose
/// verification report fails.
#[test]
fn criterion_09_rebuilt_coproducts_verify() {
    let mut failures = Vec::new();
    let mut instances = 0usize;
    for (expr, p, r_top) in reconstruction_instances() {
        let lv = level(expr, p, r_top);
        let table = PoissonTable::extract(&lv).expect("extraction succeeds on builtin laws");
        let alg = build_u(&table).expect("rebuild succeeds on extracted tables");
        let report = alg.dvps_verify();
        if !report.all_pass() {
            let first = report.first_failure().map(|c| c.name.clone()).unwrap_or_default();
            failures.push(format!("{expr} p={p} R={r_top}: {first} fails"));
        }
        instances += 1;
    }
    verdict(
        "criterion 09 (rebuilt bialgebra verification)",
        &failures,
        &format!("{instances} rebuilt algebras verified"),
    );
}

/// Claim: swapping the two blocks of the two-block law and applying the
/// blockwise antipode anti-morphism carries one extracted table to the
/// other with exchanged arguments. Falsified by any directed pair where
/// the transported bracket differs.
#[test]
fn criterion_10_block_transposition_equivalence() {
    let mut failures = Vec::new();
    let mut instances = 0usize;
    for p in [2u32, 3] {
        for r_top in 0..=1u32 {
            let lv = level("t2", p, r_top);
            let report = swap_order_equivalence(&lv, 0).expect("transposed law extracts");
            if !report.all_pass() {
                let witness = report
                    .first_failure()
                    .and_then(|c| c.witness.clone())
                    .unwrap_or_default();
                failures.push(format!("t2 p={p} R={r_top}: {witness}"));
            }
            instances += 1;
        }
    }
    verdict(
        "criterion 10 (block transposition)",
        &failures,
        &format!("{instances} transposition instances verified"),
    );
}
