//! The bracket table on the splay of the commutative blocks.
//!
//! For a law whose coordinates split into commutative blocks, the splay is
//! the commutative algebra spanned by the PBW monomials: products multiply
//! digitwise and re-straighten through the power rules alone, with no
//! transposition corrections. The bracket table records, for directed
//! generator pairs from distinct blocks, the straightened commutator
//!
//! ```text
//! pi(eta, zeta) = additive_to_mult(d_eta * d_zeta - d_zeta * d_eta),
//! ```
//!
//! and extends to arbitrary splay elements the way commutators expand in
//! the algebra the table presents: `[ab, c] = a[b,c] + [a,c]b` peels the
//! arguments down to letter pairs, each looked up in the table in place,
//! and the surrounding word re-straightens through the table's own rules,
//! power rules and transposition corrections together. On a consistent
//! table the extension therefore equals the commutator of full products.
//!
//! Tables are raw directed data. Extraction fills both orientations and a
//! well-formed table mirrors each entry with its negative, but nothing in
//! the representation forces that: the axiom checks treat the stored
//! entries as claims and verify skew symmetry, vanishing against constants,
//! the Jacobi identity on generator triples, the strong filtration bound
//! `weight <= p^r + p^s - 1`, and strong multiplicativity against the
//! block comultiplications. Corrupted tables stay representable so that
//! every check has something to catch.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::arith::MultiIndex;
use crate::dist::{
    additive_to_mult, parse_mult_combo, DistLevel, Distribution, MultCombo, MultMonomial,
};
use crate::error::{Error, Result};
use crate::report::{CheckOutcome, Report};
use crate::rewrite::{monomial_word, RewriteSystem, Word};

/// Tensor over the splay with monomial legs; coefficients live mod p.
type Tensor = BTreeMap<(MultMonomial, MultMonomial), u32>;

/// Directed bracket table over a fixed level, plus two straighteners: the
/// commutative one for splay products and the full one, seeded with the
/// table's own descending entries, for the bracket extension. The full
/// system is absent when the entries raise weights and cannot terminate.
pub struct PoissonTable {
    level: Arc<DistLevel>,
    entries: BTreeMap<(usize, usize), MultCombo>,
    splay: RewriteSystem,
    full: std::result::Result<RewriteSystem, String>,
}

impl PoissonTable {
    /// Reads the canonical bracket off the distribution algebra: for every
    /// directed cross-block generator pair, the commutator re-expressed in
    /// the multiplicative basis. Zero commutators are left absent.
    pub fn extract(level: &Arc<DistLevel>) -> Result<PoissonTable> {
        let n = level.num_generators();
        let law = level.law().clone();
        let mut entries = BTreeMap::new();
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let bs = law.block_of(level.generator(s).coord);
                let bt = law.block_of(level.generator(t).coord);
                if bs == bt {
                    continue;
                }
                let a = Distribution::generator(level, s);
                let b = Distribution::generator(level, t);
                let value = a.commutator(&b)?.to_mult()?;
                if !value.is_zero() {
                    entries.insert((s, t), value);
                }
            }
        }
        PoissonTable::assemble(level.clone(), entries)
    }

    /// Builds a table from directed entries. Pairs given in only one
    /// orientation are completed with the negated mirror; pairs given in
    /// both orientations are stored as-is, consistent or not.
    pub fn from_raw_entries(
        level: &Arc<DistLevel>,
        raw: Vec<(usize, usize, MultCombo)>,
    ) -> Result<PoissonTable> {
        let n = level.num_generators();
        let mut entries: BTreeMap<(usize, usize), MultCombo> = BTreeMap::new();
        for (s, t, value) in raw {
            if s >= n || t >= n {
                return Err(Error::Parse(format!(
                    "table entry ({s}, {t}) references a generator outside 0..{n}"
                )));
            }
            if !Arc::ptr_eq(value.level(), level) {
                return Err(Error::Parse(
                    "table entry value belongs to a different level".into(),
                ));
            }
            if entries.insert((s, t), value).is_some() {
                return Err(Error::Parse(format!(
                    "duplicate table entry for ({}, {})",
                    level.gen_name(s),
                    level.gen_name(t)
                )));
            }
        }
        let keys: Vec<(usize, usize)> = entries.keys().copied().collect();
        for (s, t) in keys {
            if s != t && !entries.contains_key(&(t, s)) {
                let mirror = entries[&(s, t)].neg();
                entries.insert((t, s), mirror);
            }
        }
        PoissonTable::assemble(level.clone(), entries)
    }

    fn assemble(
        level: Arc<DistLevel>,
        entries: BTreeMap<(usize, usize), MultCombo>,
    ) -> Result<PoissonTable> {
        let splay = RewriteSystem::new(level.clone(), HashMap::new())?;
        let law = level.law().clone();
        let mut g_table = HashMap::new();
        for (&(s, t), value) in &entries {
            let bs = law.block_of(level.generator(s).coord);
            let bt = law.block_of(level.generator(t).coord);
            if s > t && bs != bt {
                g_table.insert((s, t), value.clone());
            }
        }
        let full = match RewriteSystem::new(level.clone(), g_table) {
            Ok(sys) => Ok(sys),
            Err(Error::NonTerminating(msg)) => Err(msg),
            Err(other) => return Err(other),
        };
        Ok(PoissonTable { level, entries, splay, full })
    }

    /// The straightener that carries the table's own correction rules, or a
    /// terminating-rewrite error when the entries raise weights.
    pub fn full_rewrite(&self) -> Result<&RewriteSystem> {
        self.full
            .as_ref()
            .map_err(|msg| Error::NonTerminating(msg.clone()))
    }

    pub fn level(&self) -> &Arc<DistLevel> {
        &self.level
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &MultCombo)> {
        self.entries.iter()
    }

    /// Stored value for the directed pair, if present.
    pub fn entry(&self, eta: usize, zeta: usize) -> Option<&MultCombo> {
        self.entries.get(&(eta, zeta))
    }

    /// Replaces one directed entry without touching its mirror. This is the
    /// corruption hook used by the mutation tests and deliberately performs
    /// no consistency maintenance.
    pub fn with_raw_entry(
        &self,
        eta: usize,
        zeta: usize,
        value: MultCombo,
    ) -> Result<PoissonTable> {
        let n = self.level.num_generators();
        if eta >= n || zeta >= n {
            return Err(Error::Parse(format!(
                "table entry ({eta}, {zeta}) references a generator outside 0..{n}"
            )));
        }
        let mut entries = self.entries.clone();
        entries.insert((eta, zeta), value);
        PoissonTable::assemble(self.level.clone(), entries)
    }

    /// Bracket of two generators as stored: absent means zero. The mirror
    /// of a one-sided pair was filled at construction, so this lookup never
    /// invents a sign.
    pub fn bracket_generators(&self, s: usize, t: usize) -> MultCombo {
        match self.entries.get(&(s, t)) {
            Some(v) => v.clone(),
            None => MultCombo::zero(&self.level),
        }
    }

    fn gen_combo(&self, gid: usize) -> MultCombo {
        let mut digits = vec![0u16; self.level.num_generators()];
        digits[gid] = 1;
        let m = MultMonomial::from_digits(&self.level, &digits)
            .expect("a single generator letter is always a valid monomial");
        MultCombo::monomial(&self.level, m)
    }

    /// Biderivation extension: bilinear in both arguments, it peels words
    /// down to letter pairs by `[ab, c] = a[b,c] + [a,c]b` on the left and
    /// `[a, bc] = b[a,c] + [a,b]c` on the right, so a pair of words expands
    /// into sandwiches `u_<i . v_<j . pi(u_i, v_j) . v_>j . u_>i`, each
    /// re-straightened through the table's own correction rules. The letter
    /// pairs are directional lookups, so an inconsistent mirror surfaces
    /// here. Unit arguments bracket to zero by shape.
    pub fn bracket(&self, u: &MultCombo, v: &MultCombo) -> Result<MultCombo> {
        let full = self.full_rewrite()?;
        let p = self.level.modulus();
        let mut pile: Vec<(u32, Word)> = Vec::new();
        for (mu, cu) in u.terms() {
            let wu = monomial_word(mu);
            for (mv, cv) in v.terms() {
                let wv = monomial_word(mv);
                let cuv = u64::from(cu) * u64::from(cv);
                for i in 0..wu.len() {
                    for j in 0..wv.len() {
                        let Some(base) =
                            self.entries.get(&(wu[i] as usize, wv[j] as usize))
                        else {
                            continue;
                        };
                        for (mb, cb) in base.terms() {
                            let c = p.elt(cuv * u64::from(cb));
                            if c.is_zero() {
                                continue;
                            }
                            let mut w = Word::new();
                            w.extend_from_slice(&wu[..i]);
                            w.extend_from_slice(&wv[..j]);
                            w.extend_from_slice(&monomial_word(mb));
                            w.extend_from_slice(&wv[j + 1..]);
                            w.extend_from_slice(&wu[i + 1..]);
                            pile.push((c.value(), w));
                        }
                    }
                }
            }
        }
        full.normal_form_words(&pile)
    }

    /// Skew symmetry and vanishing against constants, read off the stored
    /// entries: diagonal and same-block values must vanish, and each
    /// directed value must be the negative of its stored mirror. Unit
    /// arguments vanish structurally in the extension, which is recorded
    /// rather than re-proved.
    pub fn check_skew_and_constants(&self) -> Report {
        let mut report = Report::new();
        let law = self.level.law().clone();
        let mut mirrors = 0usize;
        for (&(s, t), value) in &self.entries {
            if value.is_zero() {
                continue;
            }
            if s == t {
                report.push(CheckOutcome::fail(
                    "skew-and-constants",
                    format!("pi({0}, {0}) is nonzero", self.level.gen_name(s)),
                ));
                return report;
            }
            let bs = law.block_of(self.level.generator(s).coord);
            let bt = law.block_of(self.level.generator(t).coord);
            if bs == bt {
                report.push(CheckOutcome::fail(
                    "skew-and-constants",
                    format!(
                        "pi({}, {}) is nonzero inside block {}",
                        self.level.gen_name(s),
                        self.level.gen_name(t),
                        bs
                    ),
                ));
                return report;
            }
        }
        for (&(s, t), value) in &self.entries {
            if s > t {
                let mirror = self.bracket_generators(t, s);
                if mirror != value.neg() {
                    report.push(CheckOutcome::fail(
                        "skew-and-constants",
                        format!(
                            "pi({1}, {0}) != -pi({0}, {1}): {2} vs -({3})",
                            self.level.gen_name(s),
                            self.level.gen_name(t),
                            mirror.to_text(),
                            value.to_text()
                        ),
                    ));
                    return report;
                }
                mirrors += 1;
            }
        }
        report.push(CheckOutcome::pass("skew-and-constants").with_detail(format!(
            "{} directed entries, {} mirror pairs verified; unit arguments vanish by construction",
            self.entries.len(),
            mirrors
        )));
        report
    }

    /// Jacobi identity on all descending generator triples, nested brackets
    /// through the biderivation extension.
    pub fn check_jacobi(&self) -> Result<Report> {
        let mut report = Report::new();
        if let Err(msg) = &self.full {
            report.push(CheckOutcome::fail(
                "jacobi",
                format!("bracket extension undefined: {msg}"),
            ));
            return Ok(report);
        }
        let n = self.level.num_generators();
        let mut triples = 0usize;
        for k in 0..n {
            for j in 0..k {
                for i in 0..j {
                    let t1 = self.bracket(&self.bracket_generators(k, j), &self.gen_combo(i))?;
                    let t2 = self.bracket(&self.gen_combo(j), &self.bracket_generators(k, i))?;
                    let t3 = self.bracket(&self.bracket_generators(j, i), &self.gen_combo(k))?;
                    let residue = t1.add(&t2).add(&t3);
                    if !residue.is_zero() {
                        report.push(CheckOutcome::fail(
                            "jacobi",
                            format!(
                                "residue {} on triple ({}, {}, {})",
                                residue.to_text(),
                                self.level.gen_name(k),
                                self.level.gen_name(j),
                                self.level.gen_name(i)
                            ),
                        ));
                        return Ok(report);
                    }
                    triples += 1;
                }
            }
        }
        report.push(
            CheckOutcome::pass("jacobi").with_detail(format!("{triples} triples verified")),
        );
        Ok(report)
    }

    /// Strong filtration: every monomial of pi(eta, zeta) weighs at most
    /// `p^r + p^s - 1`. The pass detail reports the smallest slack seen.
    pub fn check_strongly_filtered(&self) -> Report {
        let mut report = Report::new();
        let mut min_slack: Option<u64> = None;
        for (&(s, t), value) in &self.entries {
            if value.is_zero() {
                continue;
            }
            let limit = self.level.gen_weight(s) + self.level.gen_weight(t) - 1;
            let mut top = 0u64;
            for (m, _) in value.terms() {
                top = top.max(m.weight());
                if m.weight() > limit {
                    report.push(CheckOutcome::fail(
                        "strongly-filtered",
                        format!(
                            "pi({}, {}) contains {} of weight {} above the bound {}",
                            self.level.gen_name(s),
                            self.level.gen_name(t),
                            m.text(&self.level),
                            m.weight(),
                            limit
                        ),
                    ));
                    return report;
                }
            }
            let slack = limit - top;
            min_slack = Some(min_slack.map_or(slack, |cur| cur.min(slack)));
        }
        let detail = match min_slack {
            Some(slack) => format!(
                "{} directed entries within bounds; minimum slack {}",
                self.entries.len(),
                slack
            ),
            None => "empty table".into(),
        };
        report.push(CheckOutcome::pass("strongly-filtered").with_detail(detail));
        report
    }

    /// Strong multiplicativity: for every stored descending pair,
    ///
    /// ```text
    /// Delta pi(eta, zeta)
    ///   = (mul (x) pi + pi (x) mul + pi (x) pi)
    ///     after (1 (x) tau (x) 1) on (Delta eta) (x) (Delta zeta),
    /// ```
    ///
    /// with block comultiplications on the generator legs, the splay
    /// product for mul, and the biderivation extension for pi. Ascending
    /// mirrors are the skew check's business and are not re-verified.
    pub fn check_strongly_multiplicative(&self) -> Result<Report> {
        let mut report = Report::new();
        if let Err(msg) = &self.full {
            report.push(CheckOutcome::fail(
                "strongly-multiplicative",
                format!("bracket extension undefined: {msg}"),
            ));
            return Ok(report);
        }
        let mut gen_tensors: HashMap<usize, Tensor> = HashMap::new();
        let mut checked = 0usize;
        for (&(s, t), value) in &self.entries {
            if s <= t {
                continue;
            }
            let lhs = self.comul_mult(value)?;
            let ds = self.comul_generator(s, &mut gen_tensors)?.clone();
            let dt = self.comul_generator(t, &mut gen_tensors)?.clone();
            let mut rhs: Tensor = BTreeMap::new();
            for ((s1, s2), c1) in &ds {
                let s1c = MultCombo::monomial(&self.level, s1.clone());
                let s2c = MultCombo::monomial(&self.level, s2.clone());
                for ((t1, t2), c2) in &dt {
                    let scale = u64::from(*c1) * u64::from(*c2);
                    let t1c = MultCombo::monomial(&self.level, t1.clone());
                    let t2c = MultCombo::monomial(&self.level, t2.clone());
                    let mul1 = self.splay.product(&s1c, &t1c)?;
                    let mul2 = self.splay.product(&s2c, &t2c)?;
                    let br1 = self.bracket(&s1c, &t1c)?;
                    let br2 = self.bracket(&s2c, &t2c)?;
                    self.tensor_accumulate(&mut rhs, &mul1, &br2, scale);
                    self.tensor_accumulate(&mut rhs, &br1, &mul2, scale);
                    self.tensor_accumulate(&mut rhs, &br1, &br2, scale);
                }
            }
            if lhs != rhs {
                report.push(CheckOutcome::fail(
                    "strongly-multiplicative",
                    format!(
                        "Delta pi({}, {}) disagrees with the biderivation side",
                        self.level.gen_name(s),
                        self.level.gen_name(t)
                    ),
                ));
                return Ok(report);
            }
            checked += 1;
        }
        report.push(
            CheckOutcome::pass("strongly-multiplicative")
                .with_detail(format!("{checked} descending pairs verified")),
        );
        Ok(report)
    }

    /// All four axiom checks in canonical order.
    pub fn check_all(&self) -> Result<Report> {
        let mut report = self.check_skew_and_constants();
        for outcome in self.check_jacobi()?.checks {
            report.push(outcome);
        }
        for outcome in self.check_strongly_filtered().checks {
            report.push(outcome);
        }
        for outcome in self.check_strongly_multiplicative()?.checks {
            report.push(outcome);
        }
        Ok(report)
    }

    /// Comultiplication of one generator as a splay tensor:
    /// `Delta d[x^(p^r)] = sum_{a+b=p^r} a2m(d[x^a]) (x) a2m(d[x^b])`.
    fn comul_generator<'c>(
        &self,
        gid: usize,
        cache: &'c mut HashMap<usize, Tensor>,
    ) -> Result<&'c Tensor> {
        if !cache.contains_key(&gid) {
            let g = self.level.generator(gid);
            let e = self.level.modulus().get().pow(g.r);
            let n = self.level.num_coords();
            let mut out: Tensor = BTreeMap::new();
            for a in 0..=e {
                let left = additive_to_mult(&self.level, &MultiIndex::single(n, g.coord, a))?;
                let right =
                    additive_to_mult(&self.level, &MultiIndex::single(n, g.coord, e - a))?;
                for (ml, cl) in left.iter() {
                    for (mr, cr) in right.iter() {
                        self.tensor_add(
                            &mut out,
                            (ml.clone(), mr.clone()),
                            u64::from(*cl) * u64::from(*cr),
                        );
                    }
                }
            }
            cache.insert(gid, out);
        }
        Ok(cache.get(&gid).expect("inserted above"))
    }

    /// Comultiplication of a splay element, letter by letter: Delta is an
    /// algebra map, so a monomial's tensor is the product of its letters'.
    fn comul_mult(&self, u: &MultCombo) -> Result<Tensor> {
        let mut gen_tensors: HashMap<usize, Tensor> = HashMap::new();
        let mut out: Tensor = BTreeMap::new();
        for (m, c) in u.terms() {
            let mut acc: Tensor = BTreeMap::new();
            acc.insert(
                (MultMonomial::unit(&self.level), MultMonomial::unit(&self.level)),
                1,
            );
            for letter in monomial_word(m) {
                let dg = self.comul_generator(letter as usize, &mut gen_tensors)?.clone();
                let mut next: Tensor = BTreeMap::new();
                for ((a1, a2), ca) in &acc {
                    for ((b1, b2), cb) in &dg {
                        let scale = u64::from(*ca) * u64::from(*cb);
                        let left = self.splay_mono_product(a1, b1)?;
                        let right = self.splay_mono_product(a2, b2)?;
                        self.tensor_accumulate(&mut next, &left, &right, scale);
                    }
                }
                acc = next;
            }
            for ((a, b), ca) in acc {
                self.tensor_add(&mut out, (a, b), u64::from(ca) * u64::from(c));
            }
        }
        Ok(out)
    }

    fn splay_mono_product(&self, a: &MultMonomial, b: &MultMonomial) -> Result<MultCombo> {
        let mut w = monomial_word(a);
        w.extend_from_slice(&monomial_word(b));
        Ok((*self.splay.normal_form_word(&w)?).clone())
    }

    fn tensor_add(&self, t: &mut Tensor, key: (MultMonomial, MultMonomial), delta: u64) {
        let p = u64::from(self.level.modulus().get());
        let cur = t.get(&key).copied().unwrap_or(0);
        let total = (u64::from(cur) + delta % p) % p;
        if total == 0 {
            t.remove(&key);
        } else {
            t.insert(key, total as u32);
        }
    }

    /// Adds `scale * (a (x) b)` into the tensor accumulator.
    fn tensor_accumulate(&self, t: &mut Tensor, a: &MultCombo, b: &MultCombo, scale: u64) {
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                self.tensor_add(
                    t,
                    (ma.clone(), mb.clone()),
                    scale * u64::from(ca) * u64::from(cb),
                );
            }
        }
    }

    /// Canonical text form, one directed entry per line.
    pub fn to_text(&self) -> String {
        if self.entries.is_empty() {
            return "empty table".into();
        }
        let mut lines = Vec::new();
        for (&(s, t), value) in &self.entries {
            lines.push(format!(
                "pi({}, {}) = {}",
                self.level.gen_name(s),
                self.level.gen_name(t),
                value.to_text()
            ));
        }
        lines.join("\n")
    }

    pub fn to_json_value(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(&(s, t), value)| {
                json!({
                    "eta": self.level.gen_name(s),
                    "zeta": self.level.gen_name(t),
                    "value": value.to_text(),
                })
            })
            .collect();
        json!({
            "law": self.level.law().to_json_value(),
            "r_max": self.level.r_max(),
            "entries": entries,
        })
    }

    /// Reads a table serialized by [`PoissonTable::to_json_value`]. The law
    /// and level are part of the document, so the result is self-contained.
    pub fn from_json_str(text: &str) -> Result<PoissonTable> {
        let doc: Value = serde_json::from_str(text)?;
        let law_value = doc
            .get("law")
            .ok_or_else(|| Error::Parse("table document lacks a law".into()))?;
        let law = crate::group::GroupLaw::from_json_str(&law_value.to_string(), None)?;
        let r_max = doc
            .get("r_max")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("table document lacks r_max".into()))?;
        let level = DistLevel::new(Arc::new(law), r_max as u32)?;
        let mut raw = Vec::new();
        let entries = doc
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("table document lacks an entries array".into()))?;
        for item in entries {
            let eta = item
                .get("eta")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("table entry lacks eta".into()))?;
            let zeta = item
                .get("zeta")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("table entry lacks zeta".into()))?;
            let text = item
                .get("value")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("table entry lacks a value".into()))?;
            let value = if text.trim() == "0" {
                MultCombo::zero(&level)
            } else {
                parse_mult_combo(&level, text)?
            };
            raw.push((parse_generator(&level, eta)?, parse_generator(&level, zeta)?, value));
        }
        PoissonTable::from_raw_entries(&level, raw)
    }
}

/// Parses a generator name: `x`, `x^9`, or the printed form `d[x^9]`.
/// The power must be an exact p-power within the level.
pub fn parse_generator(level: &Arc<DistLevel>, text: &str) -> Result<usize> {
    let inner = text.trim();
    let inner = match inner.strip_prefix("d[") {
        Some(rest) => rest
            .strip_suffix(']')
            .ok_or_else(|| Error::Parse(format!("unclosed generator name {inner:?}")))?,
        None => inner,
    };
    let (name, power) = match inner.split_once('^') {
        Some((name, power)) => {
            let power: u64 = power
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad generator power in {inner:?}")))?;
            (name.trim(), power)
        }
        None => (inner, 1),
    };
    let coord = level
        .law()
        .coord_index(name)
        .ok_or_else(|| Error::Parse(format!("unknown coordinate {name:?}")))?;
    let p = u64::from(level.modulus().get());
    let mut r = 0u32;
    let mut value = 1u64;
    while value < power {
        value *= p;
        r += 1;
    }
    if value != power || r > level.r_max() {
        return Err(Error::LevelEscape {
            r_max: level.r_max(),
            bound: level.bound(),
            context: format!("generator {name}^{power} does not exist at this level"),
        });
    }
    Ok(level.gen_id(coord, r))
}
