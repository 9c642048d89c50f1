//! Word rewriting onto the PBW basis.
//!
//! Words are sequences of generator ids. The rewrite system has two rule
//! families over a fixed table `g`:
//!
//! * `f_eta`: `eta^p -> F(eta)` expanded over the PBW basis (the Frobenius
//!   power has filtration degree at most `p^(r+1) - 1`, strictly below the
//!   `p^(r+1)` carried by the word `eta^p`);
//! * `g_(eta,zeta)`: `eta zeta -> zeta eta + g(eta, zeta)` for adjacent
//!   inversions `eta > zeta`; a missing table entry means the pair commutes
//!   and the rule is a plain transposition.
//!
//! Reduction always fires the leftmost redex. Termination is not assumed:
//! every produced word must be strictly smaller than its parent in the
//! measure (filtration weight, inversion count) ordered lexicographically,
//! and a violation surfaces as a non-termination error instead of a hang.
//! Words with no redex are ascending with all letter runs shorter than p,
//! i.e. PBW monomials.
//!
//! Confluence is checked through overlap words with two competing first
//! steps: `eta^(p+k)` (two f positions), `a eta^p` and `eta^p b` (g against
//! f), and descending triples `a b c` (g against g). The residue of an
//! overlap is the difference of the two resulting normal forms; a
//! confluent system has every residue zero.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use smallvec::SmallVec;

use crate::dist::{DistLevel, MultCombo, MultMonomial};
use crate::error::{Error, Result};
use crate::report::{CheckOutcome, Report};

/// A word in the free algebra on the level generators.
pub type Word = SmallVec<[u16; 16]>;

/// Letters of a PBW monomial in ascending generator order.
pub fn monomial_word(m: &MultMonomial) -> Word {
    let mut w = Word::new();
    for (gid, &d) in m.digits().iter().enumerate() {
        for _ in 0..d {
            w.push(gid as u16);
        }
    }
    w
}

/// All PBW monomials of the level in ascending order.
pub fn pbw_basis(level: &Arc<DistLevel>) -> Result<Vec<MultMonomial>> {
    let p = level.modulus().get();
    let gens = level.num_generators();
    match (u64::from(p)).checked_pow(gens as u32) {
        Some(s) if s <= 2_000_000 => {}
        _ => {
            return Err(Error::CapExceeded {
                needed: 0,
                cap: 2_000_000,
                context: "PBW basis too large to enumerate".into(),
            })
        }
    }
    let mut out = Vec::new();
    let mut digits = vec![0u16; gens];
    'outer: loop {
        out.push(MultMonomial::from_digits(level, &digits)?);
        let mut c = 0;
        loop {
            if c == gens {
                break 'outer;
            }
            if u32::from(digits[c]) < p - 1 {
                digits[c] += 1;
                break;
            }
            digits[c] = 0;
            c += 1;
        }
    }
    out.sort();
    Ok(out)
}

/// A straightening system: transposition table plus Frobenius rules.
pub struct RewriteSystem {
    level: Arc<DistLevel>,
    g: HashMap<(usize, usize), MultCombo>,
    f: Vec<MultCombo>,
    memo: Mutex<HashMap<Word, Arc<MultCombo>>>,
}

impl RewriteSystem {
    /// Builds the system from a transposition table. Keys are pairs
    /// `(hi, lo)` with `hi > lo` in generator order; the Frobenius rules
    /// come from the level itself.
    pub fn new(
        level: Arc<DistLevel>,
        g: HashMap<(usize, usize), MultCombo>,
    ) -> Result<RewriteSystem> {
        for &(hi, lo) in g.keys() {
            if hi <= lo || hi >= level.num_generators() {
                return Err(Error::Parse(format!(
                    "transposition key ({hi}, {lo}) is not a descending generator pair"
                )));
            }
        }
        let mut f = Vec::with_capacity(level.num_generators());
        for gid in 0..level.num_generators() {
            f.push(level.frobenius(gid)?.to_mult()?);
        }
        Ok(RewriteSystem { level, g, f, memo: Mutex::new(HashMap::new()) })
    }

    pub fn level(&self) -> &Arc<DistLevel> {
        &self.level
    }

    pub fn g_rule(&self, hi: usize, lo: usize) -> Option<&MultCombo> {
        self.g.get(&(hi, lo))
    }

    pub fn f_rule(&self, gid: usize) -> &MultCombo {
        &self.f[gid]
    }

    fn weight(&self, w: &[u16]) -> u64 {
        w.iter().map(|&g| self.level.gen_weight(usize::from(g))).sum()
    }

    fn inversions(w: &[u16]) -> u64 {
        let mut count = 0u64;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                if w[i] > w[j] {
                    count += 1;
                }
            }
        }
        count
    }

    fn measure(&self, w: &[u16]) -> (u64, u64) {
        (self.weight(w), Self::inversions(w))
    }

    /// Position and kind of the leftmost redex, if any.
    fn leftmost_redex(&self, w: &[u16]) -> Option<(usize, Redex)> {
        let p = self.level.modulus().get() as usize;
        for i in 0..w.len() {
            if i + 1 < w.len() && w[i] > w[i + 1] {
                return Some((i, Redex::Transpose));
            }
            if i + p <= w.len() && w[i..i + p].iter().all(|&g| g == w[i]) {
                return Some((i, Redex::Frobenius));
            }
        }
        None
    }

    /// Expands one redex application into coefficient/word pairs.
    fn expand(&self, w: &[u16], pos: usize, kind: Redex) -> Vec<(u32, Word)> {
        let mut out = Vec::new();
        match kind {
            Redex::Transpose => {
                let (hi, lo) = (w[pos], w[pos + 1]);
                let mut swapped: Word = SmallVec::from_slice(w);
                swapped.swap(pos, pos + 1);
                out.push((1, swapped));
                if let Some(table) = self.g.get(&(usize::from(hi), usize::from(lo))) {
                    for (m, c) in table.terms() {
                        out.push((c, splice(w, pos, pos + 2, &monomial_word(m))));
                    }
                }
            }
            Redex::Frobenius => {
                let p = self.level.modulus().get() as usize;
                let gid = usize::from(w[pos]);
                for (m, c) in self.f[gid].terms() {
                    out.push((c, splice(w, pos, pos + p, &monomial_word(m))));
                }
            }
        }
        out
    }

    /// The normal form of a word as a PBW combination. Fails with a
    /// non-termination error if some rewrite step does not strictly drop
    /// the (weight, inversions) measure.
    pub fn normal_form_word(&self, w: &[u16]) -> Result<Arc<MultCombo>> {
        if let Some(hit) = self.memo.lock().unwrap().get(w) {
            return Ok(hit.clone());
        }
        let result = match self.leftmost_redex(w) {
            None => {
                // Ascending word with all runs below p: read off digits.
                let mut digits = vec![0u16; self.level.num_generators()];
                for &g in w {
                    digits[usize::from(g)] += 1;
                }
                MultCombo::monomial(&self.level, MultMonomial::from_digits(&self.level, &digits)?)
            }
            Some((pos, kind)) => self.reduce_expansion(w, self.expand(w, pos, kind))?,
        };
        let arc = Arc::new(result);
        self.memo.lock().unwrap().insert(SmallVec::from_slice(w), arc.clone());
        Ok(arc)
    }

    /// Sums the normal forms of an expansion, enforcing the termination
    /// measure against the parent word.
    fn reduce_expansion(&self, parent: &[u16], terms: Vec<(u32, Word)>) -> Result<MultCombo> {
        let parent_measure = self.measure(parent);
        let mut acc = MultCombo::zero(&self.level);
        for (c, w) in terms {
            if self.measure(&w) >= parent_measure {
                return Err(Error::NonTerminating(format!(
                    "rewriting {parent:?} produced {w:?} without dropping the \
                     (weight, inversions) measure"
                )));
            }
            let nf = self.normal_form_word(&w)?;
            acc = acc.add(&nf.scale(self.level.modulus().elt(u64::from(c))));
        }
        Ok(acc)
    }

    /// The straightened product of two PBW combinations: concatenate words
    /// termwise and reduce.
    pub fn product(&self, a: &MultCombo, b: &MultCombo) -> Result<MultCombo> {
        let p = u64::from(self.level.modulus().get());
        let mut acc = MultCombo::zero(&self.level);
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                let mut w = monomial_word(ma);
                w.extend_from_slice(&monomial_word(mb));
                let nf = self.normal_form_word(&w)?;
                let scale = self.level.modulus().elt(u64::from(ca) * u64::from(cb) % p);
                acc = acc.add(&nf.scale(scale));
            }
        }
        Ok(acc)
    }

    /// Reduces an arbitrary word combination.
    pub fn normal_form_words(&self, terms: &[(u32, Word)]) -> Result<MultCombo> {
        let mut acc = MultCombo::zero(&self.level);
        for (c, w) in terms {
            let nf = self.normal_form_word(w)?;
            acc = acc.add(&nf.scale(self.level.modulus().elt(u64::from(*c))));
        }
        Ok(acc)
    }

    /// Residue of an overlap word: normal form through the leftmost first
    /// step minus normal form through the competing step.
    fn overlap_residue(
        &self,
        w: &[u16],
        left: (usize, Redex),
        right: (usize, Redex),
    ) -> Result<MultCombo> {
        let via_left = self.reduce_expansion(w, self.expand(w, left.0, left.1))?;
        let via_right = self.reduce_expansion(w, self.expand(w, right.0, right.1))?;
        Ok(via_left.sub(&via_right))
    }

    /// Checks all four overlap families and reports one outcome per family.
    pub fn s_polynomial_report(&self) -> Result<Report> {
        let p = self.level.modulus().get() as usize;
        let gens = self.level.num_generators();
        let mut report = Report::new();

        // Family ff: eta^(p+k), 1 <= k <= p-1; Frobenius firing at 0 or k.
        let mut checked = 0usize;
        let mut witness: Option<String> = None;
        for gid in 0..gens {
            for k in 1..p {
                let w: Word = std::iter::repeat(gid as u16).take(p + k).collect();
                let res =
                    self.overlap_residue(&w, (0, Redex::Frobenius), (k, Redex::Frobenius))?;
                checked += 1;
                if !res.is_zero() && witness.is_none() {
                    witness = Some(format!("word {w:?}: residue {}", res.to_text()));
                }
            }
        }
        report.push(outcome("s-polynomials-ff", checked, witness));

        // Family gf: a eta^p with a > eta; transpose at 0 against Frobenius
        // at 1.
        let mut checked = 0usize;
        let mut witness: Option<String> = None;
        for a in 0..gens {
            for eta in 0..a {
                let mut w: Word = SmallVec::new();
                w.push(a as u16);
                w.extend(std::iter::repeat(eta as u16).take(p));
                let res =
                    self.overlap_residue(&w, (0, Redex::Transpose), (1, Redex::Frobenius))?;
                checked += 1;
                if !res.is_zero() && witness.is_none() {
                    witness = Some(format!("word {w:?}: residue {}", res.to_text()));
                }
            }
        }
        report.push(outcome("s-polynomials-gf", checked, witness));

        // Family fg: eta^p b with eta > b; Frobenius at 0 against transpose
        // at p-1.
        let mut checked = 0usize;
        let mut witness: Option<String> = None;
        for eta in 0..gens {
            for b in 0..eta {
                let mut w: Word = std::iter::repeat(eta as u16).take(p).collect();
                w.push(b as u16);
                let res =
                    self.overlap_residue(&w, (0, Redex::Frobenius), (p - 1, Redex::Transpose))?;
                checked += 1;
                if !res.is_zero() && witness.is_none() {
                    witness = Some(format!("word {w:?}: residue {}", res.to_text()));
                }
            }
        }
        report.push(outcome("s-polynomials-fg", checked, witness));

        // Family gg: descending triples a > b > c; transpose at 0 against
        // transpose at 1.
        let mut checked = 0usize;
        let mut witness: Option<String> = None;
        for a in 0..gens {
            for b in 0..a {
                for c in 0..b {
                    let w: Word = SmallVec::from_slice(&[a as u16, b as u16, c as u16]);
                    let res =
                        self.overlap_residue(&w, (0, Redex::Transpose), (1, Redex::Transpose))?;
                    checked += 1;
                    if !res.is_zero() && witness.is_none() {
                        witness = Some(format!("word {w:?}: residue {}", res.to_text()));
                    }
                }
            }
        }
        report.push(outcome("s-polynomials-gg", checked, witness));

        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Redex {
    Transpose,
    Frobenius,
}

fn splice(w: &[u16], from: usize, to: usize, replacement: &[u16]) -> Word {
    let mut out: Word = SmallVec::with_capacity(w.len() - (to - from) + replacement.len());
    out.extend_from_slice(&w[..from]);
    out.extend_from_slice(replacement);
    out.extend_from_slice(&w[to..]);
    out
}

fn outcome(name: &str, checked: usize, witness: Option<String>) -> CheckOutcome {
    match witness {
        None => CheckOutcome::pass(name).with_detail(format!("{checked} overlaps checked")),
        Some(wit) => CheckOutcome::fail(name, wit),
    }
}
