//! Truncated multivariate power series over F_p.
//!
//! A [`Series`] is a finite map from exponent vectors to nonzero residues,
//! together with a total-degree truncation cap. All ring operations drop
//! (exactly, by design) every monomial whose total degree exceeds the cap;
//! reading a coefficient beyond the cap is an error rather than a silent
//! zero.
//!
//! Variable slots come from a shared [`VarSet`]: a list of base coordinate
//! names replicated `rank` times. Rank 1 is the plain coordinate ring,
//! rank 2 the two-sided tensor square used by comultiplications (slots
//! `x'`, `y'`, ... for the left factor and `x''`, `y''`, ... for the
//! right), rank 3 the triple tensor used by coassociativity checks. The
//! slot layout is copy-major: slot `c * n + i` is copy `c` of coordinate
//! `i`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::arith::{Fp, MultiIndex, Prime};
use crate::error::{Error, Result};

/// Coordinate names replicated over tensor copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    rank: u8,
}

impl VarSet {
    #[must_use]
    pub fn new(names: Vec<String>, rank: u8) -> Arc<VarSet> {
        assert!(rank >= 1 && rank <= 3, "tensor rank out of range");
        Arc::new(VarSet { names, rank })
    }

    #[must_use]
    pub fn coords(&self) -> usize {
        self.names.len()
    }

    #[must_use]
    pub fn rank(&self) -> u8 {
        self.rank
    }

    #[must_use]
    pub fn slots(&self) -> usize {
        self.names.len() * usize::from(self.rank)
    }

    #[must_use]
    pub fn slot(&self, copy: usize, coord: usize) -> usize {
        copy * self.names.len() + coord
    }

    #[must_use]
    pub fn coord_name(&self, coord: usize) -> &str {
        &self.names[coord]
    }

    /// Display name of a slot: primes mark the tensor copy (`x'`, `x''`,
    /// `x'''`); rank-1 slots print bare.
    #[must_use]
    pub fn slot_name(&self, slot: usize) -> String {
        let n = self.names.len();
        let (copy, coord) = (slot / n, slot % n);
        if self.rank == 1 {
            self.names[coord].clone()
        } else {
            format!("{}{}", self.names[coord], "'".repeat(copy + 1))
        }
    }
}

/// A truncated power series: sparse terms plus the shared variable layout,
/// modulus, and cap. Terms map full-length exponent vectors to residues in
/// `[1, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    vars: Arc<VarSet>,
    p: Prime,
    cap: u32,
    terms: BTreeMap<MultiIndex, u32>,
}

impl Series {
    #[must_use]
    pub fn zero(vars: Arc<VarSet>, p: Prime, cap: u32) -> Series {
        Series { vars, p, cap, terms: BTreeMap::new() }
    }

    #[must_use]
    pub fn constant(vars: Arc<VarSet>, p: Prime, cap: u32, c: Fp) -> Series {
        let slots = vars.slots();
        let mut s = Series::zero(vars, p, cap);
        s.insert(MultiIndex::zero(slots), c.value());
        s
    }

    /// The series `x_slot`.
    #[must_use]
    pub fn var(vars: Arc<VarSet>, p: Prime, cap: u32, slot: usize) -> Series {
        let idx = MultiIndex::single(vars.slots(), slot, 1);
        let mut s = Series::zero(vars, p, cap);
        s.insert(idx, 1);
        s
    }

    pub fn from_terms<I>(vars: Arc<VarSet>, p: Prime, cap: u32, iter: I) -> Series
    where
        I: IntoIterator<Item = (MultiIndex, u32)>,
    {
        let mut s = Series::zero(vars, p, cap);
        for (idx, c) in iter {
            s.add_term(&idx, c);
        }
        s
    }

    #[must_use]
    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    #[must_use]
    pub fn modulus(&self) -> Prime {
        self.p
    }

    #[must_use]
    pub fn cap(&self) -> u32 {
        self.cap
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[must_use]
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, u32)> {
        self.terms.iter().map(|(i, &c)| (i, c))
    }

    /// Terms in descending graded-lex order, which is the canonical
    /// printing order.
    pub fn terms_desc(&self) -> impl Iterator<Item = (&MultiIndex, u32)> {
        self.terms.iter().rev().map(|(i, &c)| (i, c))
    }

    fn insert(&mut self, idx: MultiIndex, c: u32) {
        if c % self.p.get() != 0 && idx.degree() <= u64::from(self.cap) {
            self.terms.insert(idx, c % self.p.get());
        }
    }

    /// Adds `c` to the coefficient at `idx`, respecting the cap.
    pub fn add_term(&mut self, idx: &MultiIndex, c: u32) {
        if idx.degree() > u64::from(self.cap) {
            return;
        }
        let c = c % self.p.get();
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(idx.clone()).or_insert(0);
        *entry = (*entry + c) % self.p.get();
        if *entry == 0 {
            self.terms.remove(idx);
        }
    }

    fn compatible(&self, rhs: &Series, op: &str) -> Result<()> {
        if self.p != rhs.p {
            return Err(Error::Parse(format!(
                "{op}: mixed moduli {} and {}",
                self.p, rhs.p
            )));
        }
        if self.cap != rhs.cap {
            return Err(Error::CapExceeded {
                needed: u64::from(self.cap.max(rhs.cap)),
                cap: u64::from(self.cap.min(rhs.cap)),
                context: format!("{op}: operands carry different caps"),
            });
        }
        if !Arc::ptr_eq(&self.vars, &rhs.vars) && self.vars != rhs.vars {
            return Err(Error::Parse(format!("{op}: operands over different variable sets")));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Series) -> Result<Series> {
        self.compatible(rhs, "series add")?;
        let mut out = self.clone();
        for (idx, c) in rhs.terms() {
            out.add_term(idx, c);
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Series) -> Result<Series> {
        self.compatible(rhs, "series sub")?;
        let mut out = self.clone();
        let p = self.p.get();
        for (idx, c) in rhs.terms() {
            out.add_term(idx, p - c);
        }
        Ok(out)
    }

    #[must_use]
    pub fn neg(&self) -> Series {
        let p = self.p.get();
        let mut out = Series::zero(self.vars.clone(), self.p, self.cap);
        for (idx, c) in self.terms() {
            out.terms.insert(idx.clone(), p - c);
        }
        out
    }

    #[must_use]
    pub fn scale(&self, c: Fp) -> Series {
        assert_eq!(c.modulus(), self.p, "mixed moduli in scale");
        let mut out = Series::zero(self.vars.clone(), self.p, self.cap);
        if c.is_zero() {
            return out;
        }
        for (idx, v) in self.terms() {
            out.insert(idx.clone(), (u64::from(v) * u64::from(c.value()) % u64::from(self.p.get())) as u32);
        }
        out
    }

    pub fn mul(&self, rhs: &Series) -> Result<Series> {
        self.mul_filtered(rhs, None)
    }

    /// Product truncated at the cap, optionally also dropping any monomial
    /// whose exponent in some slot exceeds `slot_bound`. The slot filter is
    /// exact for every downstream read whose exponents respect the same
    /// bound, because exponents only grow under multiplication.
    pub fn mul_filtered(&self, rhs: &Series, slot_bound: Option<u32>) -> Result<Series> {
        self.compatible(rhs, "series mul")?;
        let p = u64::from(self.p.get());
        let cap = u64::from(self.cap);
        let mut acc: BTreeMap<MultiIndex, u64> = BTreeMap::new();
        for (ia, ca) in self.terms() {
            let da = ia.degree();
            if da > cap {
                continue;
            }
            for (ib, cb) in rhs.terms() {
                if da + ib.degree() > cap {
                    continue;
                }
                let idx = ia.add(ib);
                if let Some(bound) = slot_bound {
                    if !idx.within(bound) {
                        continue;
                    }
                }
                let slot = acc.entry(idx).or_insert(0);
                *slot = (*slot + u64::from(ca) * u64::from(cb)) % p;
            }
        }
        let mut out = Series::zero(self.vars.clone(), self.p, self.cap);
        for (idx, c) in acc {
            if c != 0 {
                out.terms.insert(idx, c as u32);
            }
        }
        Ok(out)
    }

    /// `self^e` by iterated filtered multiplication.
    pub fn pow_filtered(&self, e: u32, slot_bound: Option<u32>) -> Result<Series> {
        let mut acc = Series::constant(self.vars.clone(), self.p, self.cap, self.p.one());
        let mut base = self.clone();
        let mut e = e;
        loop {
            if e & 1 == 1 {
                acc = acc.mul_filtered(&base, slot_bound)?;
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul_filtered(&base, slot_bound)?;
        }
        Ok(acc)
    }

    /// Coefficient at `idx`. Indices beyond the cap are not stored, so
    /// asking for one is a hard error instead of a misleading zero.
    pub fn coefficient(&self, idx: &MultiIndex) -> Result<Fp> {
        if idx.degree() > u64::from(self.cap) {
            return Err(Error::CapExceeded {
                needed: idx.degree(),
                cap: u64::from(self.cap),
                context: "coefficient read beyond the truncation cap".into(),
            });
        }
        Ok(self.p.elt(u64::from(self.terms.get(idx).copied().unwrap_or(0))))
    }

    /// The constant term.
    #[must_use]
    pub fn constant_term(&self) -> Fp {
        let zero = MultiIndex::zero(self.vars.slots());
        self.p.elt(u64::from(self.terms.get(&zero).copied().unwrap_or(0)))
    }

    /// Substitutes `images[s]` for slot `s`. Every image must live in one
    /// common target ring and have zero constant term (this keeps the
    /// truncation exact: low-degree output coefficients cannot receive
    /// contributions from dropped high-degree terms).
    pub fn substitute(&self, images: &[Series]) -> Result<Series> {
        assert_eq!(images.len(), self.vars.slots(), "one image per slot");
        let target = &images[0];
        for img in images {
            target.compatible(img, "substitute images")?;
            assert!(
                img.constant_term().is_zero(),
                "substitution image with nonzero constant term"
            );
        }
        let mut out = Series::zero(target.vars.clone(), target.p, target.cap);
        // Powers of each image, grown on demand.
        let mut pows: Vec<Vec<Series>> = images
            .iter()
            .map(|img| vec![Series::constant(img.vars.clone(), img.p, img.cap, img.p.one()), img.clone()])
            .collect();
        for (idx, c) in self.terms() {
            let mut term = Series::constant(target.vars.clone(), target.p, target.cap, self.p.elt(u64::from(c)));
            for (slot, e) in idx.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while pows[slot].len() <= e as usize {
                    let next = pows[slot].last().unwrap().mul(&images[slot])?;
                    pows[slot].push(next);
                }
                term = term.mul(&pows[slot][e as usize])?;
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Kills the given slots: terms using any of them are dropped, the
    /// variable layout is unchanged.
    #[must_use]
    pub fn project_out(&self, dead_slots: &[usize]) -> Series {
        let mut out = Series::zero(self.vars.clone(), self.p, self.cap);
        'term: for (idx, c) in self.terms() {
            for &s in dead_slots {
                if idx.get(s) != 0 {
                    continue 'term;
                }
            }
            out.terms.insert(idx.clone(), c);
        }
        out
    }

    /// Reindexes slots into a (possibly larger) target variable set:
    /// slot `s` of `self` becomes `slot_map[s]` of the result.
    #[must_use]
    pub fn map_slots(&self, target: Arc<VarSet>, slot_map: &[usize]) -> Series {
        assert_eq!(slot_map.len(), self.vars.slots());
        let m = target.slots();
        let mut out = Series::zero(target, self.p, self.cap);
        for (idx, c) in self.terms() {
            let mut v = MultiIndex::zero(m);
            for (s, e) in idx.iter().enumerate() {
                if e > 0 {
                    v.0[slot_map[s]] += e;
                }
            }
            out.terms.insert(v, c);
        }
        out
    }

    /// For rank-2 series: swaps the left and right tensor copies.
    #[must_use]
    pub fn swap_tensor_factors(&self) -> Series {
        assert_eq!(self.vars.rank(), 2, "tensor swap needs rank 2");
        let n = self.vars.coords();
        let map: Vec<usize> = (0..2 * n).map(|s| if s < n { s + n } else { s - n }).collect();
        self.map_slots(self.vars.clone(), &map)
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (idx, c) in self.terms_desc() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for (s, e) in idx.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.vars.slot_name(s)),
                    _ => factors.push(format!("{}^{}", self.vars.slot_name(s), e)),
                }
            }
            if factors.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1 {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", c, factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u32) -> (Arc<VarSet>, Prime) {
        let vars = VarSet::new(vec!["x".into(), "y".into()], 1);
        (vars, Prime::new(p).unwrap())
    }

    fn geom(vars: &Arc<VarSet>, p: Prime, cap: u32, slot: usize) -> Series {
        // 1 + x + x^2 + ... up to the cap.
        let mut s = Series::zero(vars.clone(), p, cap);
        for e in 0..=cap {
            s.add_term(&MultiIndex::single(vars.slots(), slot, e), 1);
        }
        s
    }

    #[test]
    fn ring_basics() {
        let (vars, p) = ring(5);
        let x = Series::var(vars.clone(), p, 10, 0);
        let y = Series::var(vars.clone(), p, 10, 1);
        let s = x.add(&y).unwrap();
        let sq = s.mul(&s).unwrap();
        // (x+y)^2 = x^2 + 2xy + y^2
        assert_eq!(sq.coefficient(&MultiIndex(smallvec::smallvec![2, 0])).unwrap().value(), 1);
        assert_eq!(sq.coefficient(&MultiIndex(smallvec::smallvec![1, 1])).unwrap().value(), 2);
        assert_eq!(sq.coefficient(&MultiIndex(smallvec::smallvec![0, 2])).unwrap().value(), 1);
        assert!(sq.sub(&sq).unwrap().is_zero());
    }

    #[test]
    fn freshman_dream() {
        // (x+y)^p = x^p + y^p in characteristic p.
        for q in [2u32, 3, 5] {
            let (vars, p) = ring(q);
            let x = Series::var(vars.clone(), p, 12, 0);
            let y = Series::var(vars.clone(), p, 12, 1);
            let lhs = x.add(&y).unwrap().pow_filtered(q, None).unwrap();
            let mut rhs = Series::zero(vars.clone(), p, 12);
            rhs.add_term(&MultiIndex::single(2, 0, q), 1);
            rhs.add_term(&MultiIndex::single(2, 1, q), 1);
            assert_eq!(lhs, rhs, "p = {q}");
        }
    }

    #[test]
    fn cap_truncation_and_reads() {
        let (vars, p) = ring(3);
        let x = Series::var(vars.clone(), p, 4, 0);
        let x4 = x.pow_filtered(4, None).unwrap();
        let x5 = x4.mul(&x).unwrap();
        assert!(x5.is_zero(), "degree 5 exceeds the cap and is dropped");
        // Reading past the cap is an error, not zero.
        assert!(matches!(
            x4.coefficient(&MultiIndex(smallvec::smallvec![5, 0])),
            Err(Error::CapExceeded { .. })
        ));
        // Mismatched caps refuse to combine.
        let other = Series::var(vars, p, 5, 0);
        assert!(x.add(&other).is_err());
    }

    #[test]
    fn geometric_series_inverse_of_one_plus_x() {
        // (1 + x) * (1 - x + x^2 - ...) = 1 exactly up to the cap.
        let (vars, p) = ring(7);
        let mut one_plus = Series::constant(vars.clone(), p, 9, p.one());
        one_plus.add_term(&MultiIndex::single(2, 0, 1), 1);
        let mut inv = Series::zero(vars.clone(), p, 9);
        for e in 0..=9u32 {
            let sign = if e % 2 == 0 { 1 } else { 7 - 1 };
            inv.add_term(&MultiIndex::single(2, 0, e), sign);
        }
        let prod = one_plus.mul(&inv).unwrap();
        assert_eq!(prod, Series::constant(vars, p, 9, p.one()));
    }

    #[test]
    fn slot_filter_drops_high_exponents() {
        let (vars, p) = ring(3);
        let s = geom(&vars, p, 10, 0);
        let sq = s.mul_filtered(&s, Some(2)).unwrap();
        for (idx, _) in sq.terms() {
            assert!(idx.get(0) <= 2);
        }
        // Coefficients at in-bound indices agree with the unfiltered product.
        let full = s.mul(&s).unwrap();
        for e in 0..=2u32 {
            let idx = MultiIndex::single(2, 0, e);
            assert_eq!(sq.coefficient(&idx).unwrap(), full.coefficient(&idx).unwrap());
        }
    }

    #[test]
    fn substitution_composes() {
        // f(x,y) = x*y + x; substitute x -> y, y -> x*... keep it simple:
        // x -> y gives y^2 + y... with images (y, x): f(y, x) = y*x + y.
        let (vars, p) = ring(5);
        let x = Series::var(vars.clone(), p, 6, 0);
        let y = Series::var(vars.clone(), p, 6, 1);
        let f = x.mul(&y).unwrap().add(&x).unwrap();
        let g = f.substitute(&[y.clone(), x.clone()]).unwrap();
        let expect = y.mul(&x).unwrap().add(&y).unwrap();
        assert_eq!(g, expect);
    }

    #[test]
    fn randomized_ring_axioms() {
        // Associativity, commutativity, distributivity on pseudo-random
        // sparse series; deterministic xorshift keeps this reproducible.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for &q in &[2u32, 3, 5] {
            let p = Prime::new(q).unwrap();
            let vars = VarSet::new(vec!["x".into(), "y".into()], 1);
            let cap = 8u32;
            let rand_series = |nextv: &mut dyn FnMut() -> u64| {
                let mut s = Series::zero(vars.clone(), p, cap);
                for _ in 0..6 {
                    let a = (nextv() % 5) as u32;
                    let b = (nextv() % 5) as u32;
                    let c = (nextv() % u64::from(q)) as u32;
                    s.add_term(&MultiIndex(smallvec::smallvec![a, b]), c);
                }
                s
            };
            for _ in 0..10 {
                let a = rand_series(&mut next);
                let b = rand_series(&mut next);
                let c = rand_series(&mut next);
                let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
                let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
                assert_eq!(ab_c, a_bc, "associative, p = {q}");
                assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap(), "commutative");
                let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
                let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "distributive");
            }
        }
    }

    #[test]
    fn display_is_descending_graded_lex() {
        let (vars, p) = ring(3);
        let mut s = Series::zero(vars, p, 5);
        s.add_term(&MultiIndex(smallvec::smallvec![0, 1]), 2);
        s.add_term(&MultiIndex(smallvec::smallvec![2, 1]), 1);
        s.add_term(&MultiIndex(smallvec::smallvec![1, 1]), 1);
        assert_eq!(s.to_string(), "x^2*y + x*y + 2*y");
    }
}
