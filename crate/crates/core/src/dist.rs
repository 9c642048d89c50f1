//! The distribution algebra of a formal group law at a fixed Frobenius
//! level.
//!
//! Fix a law `G` over F_p on `n` coordinates and a level `R >= 0`. The
//! additive basis of the level-R distribution algebra consists of the dual
//! functionals `d[x^J]` for multi-indices `J` with every component at most
//! `p^(R+1) - 1` (the level box). The product is dual to the
//! comultiplication:
//!
//! ```text
//! d[x^I] * d[x^J] = sum_K c_IJ^K d[x^K],
//! c_IJ^K = coefficient of (x')^I (x'')^J in prod_j m(x_j)^(K_j).
//! ```
//!
//! Two a priori bounds keep the K-sum finite and exact:
//!
//! * every term of `m(x_j)` has total degree at least 1, so `c_IJ^K = 0`
//!   unless `|K| <= |I| + |J|`;
//! * if some `K_j >= p^(R+1)`, then `m(x_j)^(K_j)` contains a factor
//!   `m(x_j)^(p^(R+1))`, which in characteristic p is a series in the
//!   variables raised to the `p^(R+1)`-th power; every one of its terms
//!   carries some exponent `>= p^(R+1)`, exponents only grow under
//!   multiplication, and the read indices `I, J` stay in the box. So
//!   indices outside the box receive coefficient zero for *any* law, and
//!   level products never escape the additive basis.
//!
//! On top of the additive basis sit the comultiplication
//! `Delta d[x^J] = sum_{A+B=J} d[x^A] (x) d[x^B]`, the counit, Frobenius
//! powers of the generators `d[x_j^(p^r)]`, the antipode dual to the
//! coordinatewise inverse series, and the multiplicative (PBW word) basis:
//! ordered products of generator powers with digits below p, connected to
//! the additive basis by a triangular change of basis whose pivots are the
//! p-adic digit factorials.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use smallvec::SmallVec;

use crate::arith::{padic_digits, padic_factorial, Fp, MultiIndex, Prime};
use crate::error::{Error, Result};
use crate::group::GroupLaw;
use crate::series::Series;

/// One algebra generator `d[x_coord^(p^r)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Generator {
    pub coord: usize,
    pub r: u32,
}

type CoeffMap = BTreeMap<MultiIndex, u32>;

#[derive(Default)]
struct Caches {
    comul_filtered: OnceLock<Vec<Series>>,
    pk: Mutex<HashMap<MultiIndex, Arc<Series>>>,
    structure: Mutex<HashMap<(MultiIndex, MultiIndex), Arc<CoeffMap>>>,
    m2a: Mutex<HashMap<MultMonomial, Arc<CoeffMap>>>,
    a2m: Mutex<HashMap<MultiIndex, Arc<BTreeMap<MultMonomial, u32>>>>,
    frobenius: Mutex<HashMap<usize, Arc<CoeffMap>>>,
    inv_pk: Mutex<HashMap<MultiIndex, Arc<Series>>>,
    antipode: Mutex<HashMap<MultiIndex, Arc<CoeffMap>>>,
}

/// A law together with a level choice; owns all memoized structure data.
pub struct DistLevel {
    law: Arc<GroupLaw>,
    r_max: u32,
    bound: u32,
    caches: Caches,
}

impl fmt::Debug for DistLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistLevel")
            .field("law", &self.law.name())
            .field("p", &self.modulus().get())
            .field("r_max", &self.r_max)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// Smallest series cap guaranteed to cover every structure-constant read
/// at this level: a product of two box indices has total degree up to
/// `2 n (p^(R+1) - 1)`.
pub fn safe_cap(p: Prime, r_max: u32, num_coords: usize) -> Result<u32> {
    let bound = box_bound(p, r_max)?;
    let cap = 2u64 * num_coords as u64 * u64::from(bound);
    u32::try_from(cap.max(1))
        .map_err(|_| Error::InvalidLaw("level too large: cap overflows".into()))
}

/// `p^(R+1) - 1`, the per-coordinate exponent bound of the level box.
pub fn box_bound(p: Prime, r_max: u32) -> Result<u32> {
    let mut b: u64 = 1;
    for _ in 0..=r_max {
        b *= u64::from(p.get());
        if b > u64::from(u32::MAX) {
            return Err(Error::InvalidLaw("level too large: digit bound overflows".into()));
        }
    }
    Ok((b - 1) as u32)
}

impl DistLevel {
    /// Creates the level, refusing laws whose cap cannot accommodate all
    /// level products. `new_unchecked` skips that guard; operations then
    /// fail with a cap error if an actual read goes out of range.
    pub fn new(law: Arc<GroupLaw>, r_max: u32) -> Result<Arc<DistLevel>> {
        let need = safe_cap(law.modulus(), r_max, law.num_coords())?;
        if law.cap() < need {
            return Err(Error::CapExceeded {
                needed: u64::from(need),
                cap: u64::from(law.cap()),
                context: format!(
                    "level {} of {} needs cap {} (override requires the unsafe-cap flag)",
                    r_max,
                    law.name(),
                    need
                ),
            });
        }
        Self::new_unchecked(law, r_max)
    }

    pub fn new_unchecked(law: Arc<GroupLaw>, r_max: u32) -> Result<Arc<DistLevel>> {
        let bound = box_bound(law.modulus(), r_max)?;
        Ok(Arc::new(DistLevel { law, r_max, bound, caches: Caches::default() }))
    }

    pub fn law(&self) -> &Arc<GroupLaw> {
        &self.law
    }

    pub fn modulus(&self) -> Prime {
        self.law.modulus()
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn num_coords(&self) -> usize {
        self.law.num_coords()
    }

    /// Number of generators `d[x_j^(p^r)]`, `0 <= r <= R`.
    pub fn num_generators(&self) -> usize {
        self.num_coords() * (self.r_max as usize + 1)
    }

    /// Generators are numbered coordinate-major with the Frobenius exponent
    /// ascending. This is the PBW letter order; blocks are contiguous
    /// coordinate runs, so it refines the block order.
    pub fn generator(&self, gid: usize) -> Generator {
        let per = self.r_max as usize + 1;
        Generator { coord: gid / per, r: (gid % per) as u32 }
    }

    pub fn gen_id(&self, coord: usize, r: u32) -> usize {
        coord * (self.r_max as usize + 1) + r as usize
    }

    /// `p^r`, the filtration weight of generator `gid`.
    pub fn gen_weight(&self, gid: usize) -> u64 {
        u64::from(self.modulus().get()).pow(self.generator(gid).r)
    }

    /// Additive index `p^r e_coord` of a generator.
    pub fn gen_index(&self, gid: usize) -> MultiIndex {
        let g = self.generator(gid);
        MultiIndex::single(self.num_coords(), g.coord, self.modulus().get().pow(g.r))
    }

    pub fn gen_name(&self, gid: usize) -> String {
        let g = self.generator(gid);
        let e = self.modulus().get().pow(g.r);
        if e == 1 {
            format!("d[{}]", self.law.coord_names()[g.coord])
        } else {
            format!("d[{}^{}]", self.law.coord_names()[g.coord], e)
        }
    }

    pub fn in_box(&self, idx: &MultiIndex) -> bool {
        idx.within(self.bound)
    }

    /// All box indices in ascending graded-lex order. Errors when the box
    /// is too large to enumerate.
    pub fn box_indices(&self) -> Result<Vec<MultiIndex>> {
        let n = self.num_coords();
        match (u64::from(self.bound) + 1).checked_pow(n as u32) {
            Some(s) if s <= 2_000_000 => {}
            _ => {
                return Err(Error::CapExceeded {
                    needed: 0,
                    cap: 2_000_000,
                    context: "level basis too large to enumerate".into(),
                })
            }
        }
        let mut out = Vec::new();
        let mut idx = MultiIndex::zero(n);
        'outer: loop {
            out.push(idx.clone());
            let mut c = 0;
            loop {
                if c == n {
                    break 'outer;
                }
                if idx.0[c] < self.bound {
                    idx.0[c] += 1;
                    break;
                }
                idx.0[c] = 0;
                c += 1;
            }
        }
        out.sort();
        Ok(out)
    }

    // ----- structure constants ----------------------------------------------

    fn comul_filtered(&self) -> &Vec<Series> {
        self.caches.comul_filtered.get_or_init(|| {
            (0..self.num_coords())
                .map(|j| {
                    // Keep only monomials readable at this level: slot
                    // exponents within the box bound. Exact for every read,
                    // since reads carry box exponents and exponents only
                    // grow in products.
                    let m = self.law.comul(j);
                    let keep: Vec<(MultiIndex, u32)> = m
                        .terms()
                        .filter(|(idx, _)| idx.within(self.bound))
                        .map(|(idx, c)| (idx.clone(), c))
                        .collect();
                    Series::from_terms(m.vars().clone(), m.modulus(), m.cap(), keep)
                })
                .collect()
        })
    }

    /// `prod_j m(x_j)^(K_j)`, slot-filtered, for box `K`.
    fn pk(&self, k: &MultiIndex) -> Result<Arc<Series>> {
        if let Some(hit) = self.caches.pk.lock().unwrap().get(k) {
            return Ok(hit.clone());
        }
        let computed = if k.is_zero() {
            let m0 = &self.comul_filtered()[0];
            Series::constant(m0.vars().clone(), m0.modulus(), m0.cap(), self.modulus().one())
        } else {
            let j = (0..k.len()).rfind(|&j| k.get(j) > 0).unwrap();
            let prev = self.pk(&k.checked_sub(&MultiIndex::single(k.len(), j, 1)).unwrap())?;
            prev.mul_filtered(&self.comul_filtered()[j], Some(self.bound))?
        };
        let arc = Arc::new(computed);
        self.caches.pk.lock().unwrap().insert(k.clone(), arc.clone());
        Ok(arc)
    }

    /// The expansion of `d[x^I] * d[x^J]` over the additive basis.
    pub fn structure_product(&self, i: &MultiIndex, j: &MultiIndex) -> Result<Arc<CoeffMap>> {
        let key = (i.clone(), j.clone());
        if let Some(hit) = self.caches.structure.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        assert!(self.in_box(i) && self.in_box(j), "structure product of out-of-box indices");
        let n = self.num_coords();
        let budget = i.degree() + j.degree();
        // Rank-2 read position: left exponents I, right exponents J.
        let mut target = MultiIndex::zero(2 * n);
        for c in 0..n {
            target.0[c] = i.get(c);
            target.0[n + c] = j.get(c);
        }
        let mut out: CoeffMap = BTreeMap::new();
        let mut k = MultiIndex::zero(n);
        // Odometer over the box; out-of-box K vanish structurally (see the
        // module docs) and K with |K| > |I| + |J| vanish by degree.
        'outer: loop {
            if k.degree() <= budget {
                let c = self.pk(&k)?.coefficient(&target)?;
                if !c.is_zero() {
                    out.insert(k.clone(), c.value());
                }
            }
            let mut c = 0;
            loop {
                if c == n {
                    break 'outer;
                }
                if k.0[c] < self.bound && u64::from(k.0[c]) < budget {
                    k.0[c] += 1;
                    break;
                }
                k.0[c] = 0;
                c += 1;
            }
        }
        let arc = Arc::new(out);
        self.caches.structure.lock().unwrap().insert(key, arc.clone());
        Ok(arc)
    }

    /// `F(d[x_j^(p^r)]) = d[x_j^(p^r)]^p`, with the filtration bound
    /// `deg <= p^(r+1) - 1` checked on the result.
    pub fn frobenius(self: &Arc<Self>, gid: usize) -> Result<Distribution> {
        if let Some(hit) = self.caches.frobenius.lock().unwrap().get(&gid) {
            return Ok(Distribution { level: self.clone(), terms: (**hit).clone() });
        }
        let g = Distribution::generator(self, gid);
        let mut acc = g.clone();
        for _ in 1..self.modulus().get() {
            acc = acc.mul(&g)?;
        }
        let limit = u64::from(self.modulus().get()).pow(self.generator(gid).r + 1) - 1;
        if acc.filtration_degree() > limit {
            return Err(Error::CheckFailed {
                check: "frobenius filtration".into(),
                witness: format!(
                    "{}^p has filtration degree {} > {}",
                    self.gen_name(gid),
                    acc.filtration_degree(),
                    limit
                ),
            });
        }
        self.caches.frobenius.lock().unwrap().insert(gid, Arc::new(acc.terms.clone()));
        Ok(acc)
    }

    // ----- antipode -----------------------------------------------------------

    fn inv_filtered(&self) -> Result<Vec<Series>> {
        let inv = self.law.inverse()?;
        Ok(inv
            .iter()
            .map(|s| {
                let keep: Vec<(MultiIndex, u32)> = s
                    .terms()
                    .filter(|(idx, _)| idx.within(self.bound))
                    .map(|(idx, c)| (idx.clone(), c))
                    .collect();
                Series::from_terms(s.vars().clone(), s.modulus(), s.cap(), keep)
            })
            .collect())
    }

    fn inv_pk(&self, k: &MultiIndex) -> Result<Arc<Series>> {
        if let Some(hit) = self.caches.inv_pk.lock().unwrap().get(k) {
            return Ok(hit.clone());
        }
        let computed = if k.is_zero() {
            Series::constant(
                self.law.vars1().clone(),
                self.modulus(),
                self.law.cap(),
                self.modulus().one(),
            )
        } else {
            let j = (0..k.len()).rfind(|&j| k.get(j) > 0).unwrap();
            let prev = self.inv_pk(&k.checked_sub(&MultiIndex::single(k.len(), j, 1)).unwrap())?;
            prev.mul_filtered(&self.inv_filtered()?[j], Some(self.bound))?
        };
        let arc = Arc::new(computed);
        self.caches.inv_pk.lock().unwrap().insert(k.clone(), arc.clone());
        Ok(arc)
    }

    /// `S(d[x^J]) = sum_K ([x^J] i(x)^K) d[x^K]` over box `K` with
    /// `|K| <= |J|`; out-of-box indices vanish by the same
    /// characteristic-p argument as for products.
    pub fn antipode_basis(&self, j: &MultiIndex) -> Result<Arc<CoeffMap>> {
        if let Some(hit) = self.caches.antipode.lock().unwrap().get(j) {
            return Ok(hit.clone());
        }
        let n = self.num_coords();
        let budget = j.degree();
        let mut out: CoeffMap = BTreeMap::new();
        let mut k = MultiIndex::zero(n);
        'outer: loop {
            if k.degree() <= budget {
                let c = self.inv_pk(&k)?.coefficient(j)?;
                if !c.is_zero() {
                    out.insert(k.clone(), c.value());
                }
            }
            let mut c = 0;
            loop {
                if c == n {
                    break 'outer;
                }
                if k.0[c] < self.bound && u64::from(k.0[c]) < budget {
                    k.0[c] += 1;
                    break;
                }
                k.0[c] = 0;
                c += 1;
            }
        }
        let arc = Arc::new(out);
        self.caches.antipode.lock().unwrap().insert(j.clone(), arc.clone());
        Ok(arc)
    }
}

// ----- additive-basis elements ---------------------------------------------------

/// An element of the level algebra over the additive basis.
#[derive(Clone)]
pub struct Distribution {
    level: Arc<DistLevel>,
    terms: CoeffMap,
}

impl Distribution {
    pub fn zero(level: &Arc<DistLevel>) -> Distribution {
        Distribution { level: level.clone(), terms: BTreeMap::new() }
    }

    /// The algebra unit `d[1]`.
    pub fn unit(level: &Arc<DistLevel>) -> Distribution {
        let mut d = Distribution::zero(level);
        d.terms.insert(MultiIndex::zero(level.num_coords()), 1);
        d
    }

    /// The basis element `d[x^J]`; `J` must lie in the level box.
    pub fn basis(level: &Arc<DistLevel>, j: MultiIndex) -> Result<Distribution> {
        if !level.in_box(&j) {
            return Err(Error::LevelEscape {
                r_max: level.r_max(),
                bound: level.bound(),
                context: format!("basis index {j:?} outside the level box"),
            });
        }
        let mut d = Distribution::zero(level);
        d.terms.insert(j, 1);
        Ok(d)
    }

    pub fn generator(level: &Arc<DistLevel>, gid: usize) -> Distribution {
        let mut d = Distribution::zero(level);
        d.terms.insert(level.gen_index(gid), 1);
        d
    }

    pub fn from_terms<I>(level: &Arc<DistLevel>, iter: I) -> Distribution
    where
        I: IntoIterator<Item = (MultiIndex, u32)>,
    {
        let mut d = Distribution::zero(level);
        for (idx, c) in iter {
            d.add_term(&idx, c);
        }
        d
    }

    pub fn level(&self) -> &Arc<DistLevel> {
        &self.level
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, u32)> {
        self.terms.iter().map(|(i, &c)| (i, c))
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> Fp {
        self.level.modulus().elt(u64::from(self.terms.get(idx).copied().unwrap_or(0)))
    }

    pub fn add_term(&mut self, idx: &MultiIndex, c: u32) {
        let p = self.level.modulus().get();
        let c = c % p;
        if c == 0 {
            return;
        }
        let e = self.terms.entry(idx.clone()).or_insert(0);
        *e = (*e + c) % p;
        if *e == 0 {
            self.terms.remove(idx);
        }
    }

    fn same_level(&self, rhs: &Distribution) {
        assert!(
            Arc::ptr_eq(&self.level, &rhs.level),
            "mixing distributions from different levels"
        );
    }

    pub fn add(&self, rhs: &Distribution) -> Distribution {
        self.same_level(rhs);
        let mut out = self.clone();
        for (idx, c) in rhs.terms() {
            out.add_term(idx, c);
        }
        out
    }

    pub fn sub(&self, rhs: &Distribution) -> Distribution {
        self.same_level(rhs);
        let p = self.level.modulus().get();
        let mut out = self.clone();
        for (idx, c) in rhs.terms() {
            out.add_term(idx, p - c);
        }
        out
    }

    pub fn scale(&self, c: Fp) -> Distribution {
        let mut out = Distribution::zero(&self.level);
        if c.is_zero() {
            return out;
        }
        let p = u64::from(self.level.modulus().get());
        for (idx, v) in self.terms() {
            out.terms.insert(idx.clone(), (u64::from(v) * u64::from(c.value()) % p) as u32);
        }
        out
    }

    pub fn neg(&self) -> Distribution {
        self.scale(-self.level.modulus().one())
    }

    /// The algebra product dual to the comultiplication.
    pub fn mul(&self, rhs: &Distribution) -> Result<Distribution> {
        self.same_level(rhs);
        let p = u64::from(self.level.modulus().get());
        let mut acc: BTreeMap<MultiIndex, u64> = BTreeMap::new();
        for (i, ci) in self.terms() {
            for (j, cj) in rhs.terms() {
                let sp = self.level.structure_product(i, j)?;
                let scale = u64::from(ci) * u64::from(cj) % p;
                for (k, ck) in sp.iter() {
                    let e = acc.entry(k.clone()).or_insert(0);
                    *e = (*e + scale * u64::from(*ck)) % p;
                }
            }
        }
        let mut out = Distribution::zero(&self.level);
        for (k, c) in acc {
            if c != 0 {
                out.terms.insert(k, c as u32);
            }
        }
        Ok(out)
    }

    /// `u v - v u`.
    pub fn commutator(&self, rhs: &Distribution) -> Result<Distribution> {
        Ok(self.mul(rhs)?.sub(&rhs.mul(self)?))
    }

    /// `Delta d[x^J] = sum_{A+B=J} d[x^A] (x) d[x^B]`, extended linearly.
    pub fn comul(&self) -> DistTensor {
        let n = self.level.num_coords();
        let mut out = DistTensor::zero(&self.level);
        for (j, c) in self.terms() {
            // Odometer over componentwise splits A + B = J.
            let mut a = MultiIndex::zero(n);
            'splits: loop {
                let b = j.checked_sub(&a).unwrap();
                out.add_term(&a, &b, c);
                let mut k = 0;
                loop {
                    if k == n {
                        break 'splits;
                    }
                    if a.0[k] < j.get(k) {
                        a.0[k] += 1;
                        break;
                    }
                    a.0[k] = 0;
                    k += 1;
                }
            }
        }
        out
    }

    /// The counit: coefficient of `d[1]`.
    pub fn counit(&self) -> Fp {
        self.coefficient(&MultiIndex::zero(self.level.num_coords()))
    }

    /// The antipode dual to the coordinatewise inverse series.
    pub fn antipode(&self) -> Result<Distribution> {
        let p = u64::from(self.level.modulus().get());
        let mut out = Distribution::zero(&self.level);
        for (j, c) in self.terms() {
            let sk = self.level.antipode_basis(j)?;
            for (k, ck) in sk.iter() {
                out.add_term(k, (u64::from(c) * u64::from(*ck) % p) as u32);
            }
        }
        Ok(out)
    }

    /// Largest total degree of a supporting index; 0 for the zero element.
    pub fn filtration_degree(&self) -> u64 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Dual pairing against a rank-1 series: `sum_J c_J [x^J] f`.
    pub fn pair(&self, f: &Series) -> Result<Fp> {
        let p = self.level.modulus();
        if f.modulus() != p {
            return Err(Error::Parse("pairing across different moduli".into()));
        }
        let mut acc = p.zero();
        for (j, c) in self.terms() {
            acc = acc + p.elt(u64::from(c)) * f.coefficient(j)?;
        }
        Ok(acc)
    }

    /// Expansion over the multiplicative basis.
    pub fn to_mult(&self) -> Result<MultCombo> {
        let p = u64::from(self.level.modulus().get());
        let mut out = MultCombo::zero(&self.level);
        for (j, c) in self.terms() {
            let expansion = additive_to_mult(&self.level, j)?;
            for (m, cm) in expansion.iter() {
                out.add_term(m, (u64::from(c) * u64::from(*cm) % p) as u32);
            }
        }
        Ok(out)
    }
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Distribution) -> bool {
        Arc::ptr_eq(&self.level, &other.level) && self.terms == other.terms
    }
}
impl Eq for Distribution {}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Distribution({self})")
    }
}

impl fmt::Display for Distribution {
    /// Canonical text: terms in descending graded-lex order, `d[1]` for the
    /// unit index, unit coefficients omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = self.level.law().coord_names();
        let mut first = true;
        for (idx, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let body = index_text(idx, names);
            if *c == 1 {
                write!(f, "d[{body}]")?;
            } else {
                write!(f, "{c} d[{body}]")?;
            }
        }
        Ok(())
    }
}

fn index_text(idx: &MultiIndex, names: &[String]) -> String {
    if idx.is_zero() {
        return "1".into();
    }
    let mut parts = Vec::new();
    for (i, e) in idx.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(names[i].clone()),
            _ => parts.push(format!("{}^{}", names[i], e)),
        }
    }
    parts.join(" ")
}

// ----- tensor squares ---------------------------------------------------------------

/// An element of `Dist (x) Dist` over the additive basis.
#[derive(Clone)]
pub struct DistTensor {
    level: Arc<DistLevel>,
    terms: BTreeMap<(MultiIndex, MultiIndex), u32>,
}

impl DistTensor {
    pub fn zero(level: &Arc<DistLevel>) -> DistTensor {
        DistTensor { level: level.clone(), terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, a: &MultiIndex, b: &MultiIndex, c: u32) {
        let p = self.level.modulus().get();
        let c = c % p;
        if c == 0 {
            return;
        }
        let key = (a.clone(), b.clone());
        let e = self.terms.entry(key.clone()).or_insert(0);
        *e = (*e + c) % p;
        if *e == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(MultiIndex, MultiIndex), u32)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn add(&self, rhs: &DistTensor) -> DistTensor {
        let mut out = self.clone();
        for ((a, b), c) in rhs.terms() {
            out.add_term(a, b, c);
        }
        out
    }

    pub fn sub(&self, rhs: &DistTensor) -> DistTensor {
        let p = self.level.modulus().get();
        let mut out = self.clone();
        for ((a, b), c) in rhs.terms() {
            out.add_term(a, b, p - c);
        }
        out
    }

    /// Componentwise algebra product `(a (x) b)(c (x) d) = ac (x) bd`.
    pub fn mul(&self, rhs: &DistTensor) -> Result<DistTensor> {
        let p = u64::from(self.level.modulus().get());
        let mut out = DistTensor::zero(&self.level);
        for ((a, b), c1) in self.terms() {
            for ((c, d), c2) in rhs.terms() {
                let left = self.level.structure_product(a, c)?;
                let right = self.level.structure_product(b, d)?;
                let scale = u64::from(c1) * u64::from(c2) % p;
                for (ka, ca) in left.iter() {
                    for (kb, cb) in right.iter() {
                        let v = scale * u64::from(*ca) % p * u64::from(*cb) % p;
                        out.add_term(ka, kb, v as u32);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl PartialEq for DistTensor {
    fn eq(&self, other: &DistTensor) -> bool {
        Arc::ptr_eq(&self.level, &other.level) && self.terms == other.terms
    }
}
impl Eq for DistTensor {}

impl fmt::Display for DistTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let names = self.level.law().coord_names();
        let side = |idx: &MultiIndex| {
            if idx.is_zero() {
                "1".to_string()
            } else {
                format!("d[{}]", index_text(idx, names))
            }
        };
        let mut first = true;
        for ((a, b), c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *c != 1 {
                write!(f, "{c} ")?;
            }
            write!(f, "{}⊗{}", side(a), side(b))?;
        }
        Ok(())
    }
}

impl fmt::Debug for DistTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DistTensor({self})")
    }
}

// ----- multiplicative (PBW) basis ------------------------------------------------------

/// A PBW monomial: one digit below p per generator, coordinate-major with
/// Frobenius exponent ascending, plus its cached filtration weight
/// `sum digit * p^r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultMonomial {
    weight: u64,
    digits: SmallVec<[u16; 16]>,
}

impl MultMonomial {
    pub fn unit(level: &DistLevel) -> MultMonomial {
        MultMonomial { weight: 0, digits: smallvec::smallvec![0; level.num_generators()] }
    }

    /// Builds a monomial from per-generator digits; digits must be below p.
    pub fn from_digits(level: &DistLevel, digits: &[u16]) -> Result<MultMonomial> {
        if digits.len() != level.num_generators() {
            return Err(Error::Parse(format!(
                "expected {} digits, got {}",
                level.num_generators(),
                digits.len()
            )));
        }
        let p = level.modulus().get();
        let mut weight = 0u64;
        for (gid, &d) in digits.iter().enumerate() {
            if u32::from(d) >= p {
                return Err(Error::Parse(format!(
                    "digit {d} for {} is not below p = {p}",
                    level.gen_name(gid)
                )));
            }
            weight += u64::from(d) * level.gen_weight(gid);
        }
        Ok(MultMonomial { weight, digits: SmallVec::from_slice(digits) })
    }

    /// Digit decomposition of a box index: each coordinate exponent broken
    /// into base-p digits.
    pub fn from_index(level: &DistLevel, j: &MultiIndex) -> MultMonomial {
        debug_assert!(level.in_box(j));
        let per = level.r_max() as usize + 1;
        let mut digits: SmallVec<[u16; 16]> = smallvec::smallvec![0; level.num_generators()];
        for (coord, e) in j.iter().enumerate() {
            for (r, &d) in padic_digits(u64::from(e), level.modulus()).iter().enumerate() {
                digits[coord * per + r] = d as u16;
            }
        }
        MultMonomial { weight: j.degree(), digits }
    }

    pub fn digit(&self, gid: usize) -> u16 {
        self.digits[gid]
    }

    pub fn digits(&self) -> &[u16] {
        &self.digits
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn is_unit(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Total number of letters in the underlying word.
    pub fn word_length(&self) -> usize {
        self.digits.iter().map(|&d| usize::from(d)).sum()
    }

    /// The additive index matching the monomial's digits.
    pub fn leading_index(&self, level: &DistLevel) -> MultiIndex {
        let per = level.r_max() as usize + 1;
        let mut idx = MultiIndex::zero(level.num_coords());
        for (gid, &d) in self.digits.iter().enumerate() {
            idx.0[gid / per] += u32::from(d) * level.modulus().get().pow((gid % per) as u32);
        }
        idx
    }

    pub fn text(&self, level: &DistLevel) -> String {
        if self.is_unit() {
            return "m[1]".into();
        }
        let per = level.r_max() as usize + 1;
        let names = level.law().coord_names();
        let mut parts = Vec::new();
        for coord in 0..level.num_coords() {
            let ds = &self.digits[coord * per..(coord + 1) * per];
            if ds.iter().all(|&d| d == 0) {
                continue;
            }
            let list: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
            parts.push(format!("{}:{}", names[coord], list.join(",")));
        }
        format!("m[{}]", parts.join("; "))
    }
}

impl Ord for MultMonomial {
    /// Weight-major order, ties broken by the digit string. A monomial's
    /// additive expansion is supported in degrees at most its weight, so
    /// this order is compatible with the triangular basis change.
    fn cmp(&self, other: &MultMonomial) -> std::cmp::Ordering {
        self.weight.cmp(&other.weight).then_with(|| self.digits.cmp(&other.digits))
    }
}

impl PartialOrd for MultMonomial {
    fn partial_cmp(&self, other: &MultMonomial) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A linear combination of PBW monomials.
#[derive(Clone)]
pub struct MultCombo {
    level: Arc<DistLevel>,
    terms: BTreeMap<MultMonomial, u32>,
}

impl MultCombo {
    pub fn zero(level: &Arc<DistLevel>) -> MultCombo {
        MultCombo { level: level.clone(), terms: BTreeMap::new() }
    }

    pub fn unit(level: &Arc<DistLevel>) -> MultCombo {
        let mut c = MultCombo::zero(level);
        c.terms.insert(MultMonomial::unit(level), 1);
        c
    }

    pub fn monomial(level: &Arc<DistLevel>, m: MultMonomial) -> MultCombo {
        let mut c = MultCombo::zero(level);
        c.terms.insert(m, 1);
        c
    }

    pub fn level(&self) -> &Arc<DistLevel> {
        &self.level
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultMonomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &MultMonomial) -> Fp {
        self.level.modulus().elt(u64::from(self.terms.get(m).copied().unwrap_or(0)))
    }

    pub fn add_term(&mut self, m: &MultMonomial, c: u32) {
        let p = self.level.modulus().get();
        let c = c % p;
        if c == 0 {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e = (*e + c) % p;
        if *e == 0 {
            self.terms.remove(m);
        }
    }

    pub fn add(&self, rhs: &MultCombo) -> MultCombo {
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m, c);
        }
        out
    }

    pub fn sub(&self, rhs: &MultCombo) -> MultCombo {
        let p = self.level.modulus().get();
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(m, p - c);
        }
        out
    }

    pub fn scale(&self, c: Fp) -> MultCombo {
        let mut out = MultCombo::zero(&self.level);
        if c.is_zero() {
            return out;
        }
        let p = u64::from(self.level.modulus().get());
        for (m, v) in self.terms() {
            out.terms.insert(m.clone(), (u64::from(v) * u64::from(c.value()) % p) as u32);
        }
        out
    }

    pub fn neg(&self) -> MultCombo {
        self.scale(-self.level.modulus().one())
    }

    /// Expansion back over the additive basis.
    pub fn to_additive(&self) -> Result<Distribution> {
        let p = u64::from(self.level.modulus().get());
        let mut out = Distribution::zero(&self.level);
        for (m, c) in self.terms() {
            let exp = mult_to_additive(&self.level, m)?;
            for (j, cj) in exp.iter() {
                out.add_term(j, (u64::from(c) * u64::from(*cj) % p) as u32);
            }
        }
        Ok(out)
    }

    /// Largest weight of a supporting monomial.
    pub fn max_weight(&self) -> u64 {
        self.terms.keys().map(MultMonomial::weight).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let body = m.text(&self.level);
            if *c == 1 {
                parts.push(body);
            } else {
                parts.push(format!("{c} {body}"));
            }
        }
        parts.join(" + ")
    }
}

impl PartialEq for MultCombo {
    fn eq(&self, other: &MultCombo) -> bool {
        Arc::ptr_eq(&self.level, &other.level) && self.terms == other.terms
    }
}
impl Eq for MultCombo {}

impl fmt::Debug for MultCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultCombo({})", self.to_text())
    }
}

/// Expands an ordered product of generator powers over the additive basis:
/// the letters of `m` multiplied left to right.
pub fn mult_to_additive(level: &Arc<DistLevel>, m: &MultMonomial) -> Result<Arc<CoeffMap>> {
    if let Some(hit) = level.caches.m2a.lock().unwrap().get(m) {
        return Ok(hit.clone());
    }
    let mut acc = Distribution::unit(level);
    for gid in 0..level.num_generators() {
        let g = Distribution::generator(level, gid);
        for _ in 0..m.digit(gid) {
            acc = acc.mul(&g)?;
        }
    }
    let arc = Arc::new(acc.terms);
    level.caches.m2a.lock().unwrap().insert(m.clone(), arc.clone());
    Ok(arc)
}

/// Expands `d[x^J]` over the multiplicative basis by triangular
/// back-substitution. The pivot is the digit factorial
/// `J!_p = prod_j (J_j)!_p`, always a unit; every other index in the
/// additive expansion of the digit monomial must be strictly smaller in
/// graded-lex order, else the level is reported as not triangular.
pub fn additive_to_mult(
    level: &Arc<DistLevel>,
    j: &MultiIndex,
) -> Result<Arc<BTreeMap<MultMonomial, u32>>> {
    if let Some(hit) = level.caches.a2m.lock().unwrap().get(j) {
        return Ok(hit.clone());
    }
    let p = level.modulus();
    let mono = MultMonomial::from_index(level, j);
    let expansion = mult_to_additive(level, &mono)?;
    let pivot: Fp = j.iter().fold(p.one(), |acc, e| acc * padic_factorial(u64::from(e), p));
    match expansion.iter().next_back() {
        Some((lead, &c)) if lead == j && p.elt(u64::from(c)) == pivot => {}
        other => {
            return Err(Error::NotTriangular(format!(
                "digit monomial of {j:?} has leading term {other:?}, expected pivot {}",
                pivot.value()
            )));
        }
    }
    let inv_pivot = pivot.inverse();
    fn accumulate(out: &mut BTreeMap<MultMonomial, u32>, p: Prime, m: &MultMonomial, c: Fp) {
        if c.is_zero() {
            return;
        }
        let e = out.entry(m.clone()).or_insert(0);
        *e = (*e + c.value()) % p.get();
        if *e == 0 {
            out.remove(m);
        }
    }
    // d[x^J] = pivot^{-1} (mono - sum_{L<J} e_L d[x^L]) over the
    // multiplicative basis, recursing on strictly smaller indices.
    let mut out: BTreeMap<MultMonomial, u32> = BTreeMap::new();
    accumulate(&mut out, p, &mono, inv_pivot);
    for (l, &cl) in expansion.iter() {
        if l == j {
            continue;
        }
        let rec = additive_to_mult(level, l)?;
        let factor = -(inv_pivot * p.elt(u64::from(cl)));
        for (m, &cm) in rec.iter() {
            accumulate(&mut out, p, m, factor * p.elt(u64::from(cm)));
        }
    }
    let arc = Arc::new(out);
    level.caches.a2m.lock().unwrap().insert(j.clone(), arc.clone());
    Ok(arc)
}

// ----- operand text parsing ---------------------------------------------------------

/// Parses a signed linear combination of `d[...]` operands, e.g.
/// `d[x^2 y] + 2 d[y]` or `d[1] - d[x]`.
pub fn parse_distribution(level: &Arc<DistLevel>, text: &str) -> Result<Distribution> {
    let mut out = Distribution::zero(level);
    for (sign, term) in split_terms(text)? {
        let (coeff, body) = parse_term(level.modulus(), term, "d")?;
        let idx = parse_additive_index(level, body)?;
        let c = if sign { coeff } else { -coeff };
        out.add_term(&idx, c.value());
    }
    Ok(out)
}

/// Parses a signed linear combination of `m[...]` operands, e.g.
/// `m[x:0,1] + 2 m[y:1,0]`. Digit lists may be shorter than R+1 and are
/// zero-padded on the right.
pub fn parse_mult_combo(level: &Arc<DistLevel>, text: &str) -> Result<MultCombo> {
    let mut out = MultCombo::zero(level);
    for (sign, term) in split_terms(text)? {
        let (coeff, body) = parse_term(level.modulus(), term, "m")?;
        let m = parse_mult_monomial(level, body)?;
        let c = if sign { coeff } else { -coeff };
        out.add_term(&m, c.value());
    }
    Ok(out)
}

/// Splits `a + b - c` into sign/term pairs outside brackets.
fn split_terms(text: &str) -> Result<Vec<(bool, &str)>> {
    let mut out = Vec::new();
    let mut sign = true;
    let mut start = 0usize;
    let mut depth = 0i32;
    for (i, b) in text.bytes().enumerate() {
        match b {
            b'[' => depth += 1,
            b']' => depth -= 1,
            b'+' | b'-' if depth == 0 => {
                let chunk = text[start..i].trim();
                if !chunk.is_empty() {
                    out.push((sign, chunk));
                } else if !out.is_empty() || !sign {
                    return Err(Error::Parse(format!("dangling sign in {text:?}")));
                }
                sign = b == b'+';
                start = i + 1;
            }
            _ => {}
        }
    }
    let chunk = text[start..].trim();
    if chunk.is_empty() {
        return Err(Error::Parse(format!("empty term in {text:?}")));
    }
    out.push((sign, chunk));
    Ok(out)
}

/// Parses `[coeff] kind[ ... ]`, returning the coefficient and the bracket
/// body.
fn parse_term<'a>(p: Prime, term: &'a str, kind: &str) -> Result<(Fp, &'a str)> {
    let term = term.trim();
    let open = term
        .find(&format!("{kind}["))
        .ok_or_else(|| Error::Parse(format!("expected {kind}[...] in {term:?}")))?;
    if !term.ends_with(']') {
        return Err(Error::Parse(format!("missing closing bracket in {term:?}")));
    }
    let coeff_text = term[..open].trim().trim_end_matches('*').trim();
    let coeff = if coeff_text.is_empty() {
        p.one()
    } else {
        let v: i64 = coeff_text
            .parse()
            .map_err(|_| Error::Parse(format!("bad coefficient {coeff_text:?} in {term:?}")))?;
        p.elt_signed(v)
    };
    let body = &term[open + kind.len() + 1..term.len() - 1];
    Ok((coeff, body.trim()))
}

fn parse_additive_index(level: &Arc<DistLevel>, body: &str) -> Result<MultiIndex> {
    let n = level.num_coords();
    if body == "1" {
        return Ok(MultiIndex::zero(n));
    }
    let mut idx = MultiIndex::zero(n);
    for factor in body.split_whitespace() {
        let (name, exp) = match factor.split_once('^') {
            Some((nm, e)) => {
                let exp: u32 =
                    e.parse().map_err(|_| Error::Parse(format!("bad exponent in {factor:?}")))?;
                (nm, exp)
            }
            None => (factor, 1),
        };
        let coord = level
            .law()
            .coord_index(name)
            .ok_or_else(|| Error::Parse(format!("unknown coordinate {name:?}")))?;
        idx.0[coord] += exp;
    }
    if !level.in_box(&idx) {
        return Err(Error::LevelEscape {
            r_max: level.r_max(),
            bound: level.bound(),
            context: format!("operand d[{body}] lies outside the level box"),
        });
    }
    Ok(idx)
}

fn parse_mult_monomial(level: &Arc<DistLevel>, body: &str) -> Result<MultMonomial> {
    let per = level.r_max() as usize + 1;
    let mut digits = vec![0u16; level.num_generators()];
    if body != "1" {
        for clause in body.split(';') {
            let clause = clause.trim();
            let (name, list) = clause
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected coord:digits in {clause:?}")))?;
            let coord = level
                .law()
                .coord_index(name.trim())
                .ok_or_else(|| Error::Parse(format!("unknown coordinate {name:?}")))?;
            let ds: Vec<&str> = list.split(',').map(str::trim).collect();
            if ds.len() > per {
                return Err(Error::LevelEscape {
                    r_max: level.r_max(),
                    bound: level.bound(),
                    context: format!(
                        "{} digits given for {name} but the level has R = {}",
                        ds.len(),
                        level.r_max()
                    ),
                });
            }
            for (r, d) in ds.iter().enumerate() {
                let v: u16 = d.parse().map_err(|_| Error::Parse(format!("bad digit {d:?}")))?;
                if u32::from(v) >= level.modulus().get() {
                    return Err(Error::LevelEscape {
                        r_max: level.r_max(),
                        bound: level.bound(),
                        context: format!(
                            "digit {v} for {name} is not below p = {}",
                            level.modulus().get()
                        ),
                    });
                }
                digits[coord * per + r] = v;
            }
        }
    }
    MultMonomial::from_digits(level, &digits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::binom_mod_p;
    use crate::group::builtin_law;

    fn level(expr: &str, p: u32, r: u32) -> Arc<DistLevel> {
        let pr = Prime::new(p).unwrap();
        let probe = builtin_law(expr, pr, 4).unwrap();
        let cap = safe_cap(pr, r, probe.num_coords()).unwrap();
        let law = Arc::new(builtin_law(expr, pr, cap).unwrap());
        DistLevel::new(law, r).unwrap()
    }

    fn d(level: &Arc<DistLevel>, text: &str) -> Distribution {
        parse_distribution(level, text).unwrap()
    }

    #[test]
    fn multiplicative_square_of_delta_x() {
        // For the multiplicative law at p = 3: d[x] d[x] = 2 d[x^2] + d[x].
        let lv = level("gm", 3, 0);
        let prod = d(&lv, "d[x]").mul(&d(&lv, "d[x]")).unwrap();
        assert_eq!(prod, d(&lv, "2 d[x^2] + d[x]"));
    }

    #[test]
    fn multiplicative_general_product_matches_multinomial() {
        // d[x^a] d[x^b] = sum_K C(K, K-a) C(a, K-b) d[x^K]; the Lucas
        // binomials kill every index that would escape the box.
        for (p, r) in [(2u32, 1u32), (3, 1), (5, 0)] {
            let lv = level("gm", p, r);
            let bound = lv.bound();
            for a in 0..=bound {
                for b in 0..=bound {
                    let da = d(&lv, &format!("d[x^{a}]"));
                    let db = d(&lv, &format!("d[x^{b}]"));
                    let got = da.mul(&db).unwrap();
                    let mut want = Distribution::zero(&lv);
                    for k in a.max(b)..=(a + b).min(bound) {
                        let c = binom_mod_p(u64::from(k), u64::from(k - a), lv.modulus())
                            * binom_mod_p(u64::from(a), u64::from(k - b), lv.modulus());
                        want.add_term(&MultiIndex::single(1, 0, k), c.value());
                    }
                    assert_eq!(got, want, "p={p} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn additive_products_are_binomial() {
        // d[y^a] d[y^b] = C(a+b, a) d[y^(a+b)]; indices past the box would
        // need a base-p carry, so the binomial vanishes exactly there.
        let lv = level("ga", 3, 1);
        for a in 0..=8u32 {
            for b in 0..=8u32 {
                let got = d(&lv, &format!("d[y^{a}]")).mul(&d(&lv, &format!("d[y^{b}]"))).unwrap();
                let mut want = Distribution::zero(&lv);
                if a + b <= 8 {
                    want.add_term(
                        &MultiIndex::single(1, 0, a + b),
                        binom_mod_p(u64::from(a + b), u64::from(a), lv.modulus()).value(),
                    );
                }
                assert_eq!(got, want, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn mixed_law_products_frozen_values() {
        // Hand-checked products for the mixed two-coordinate law at p = 3.
        let lv = level("t2", 3, 1);
        let cases = [
            ("d[x]", "d[y]", "d[x y] + d[y]"),
            ("d[y]", "d[x]", "d[x y] + 2 d[y]"),
            ("d[x^2]", "d[y]", "d[x^2 y] + d[x y]"),
            ("d[y]", "d[x^2]", "d[x^2 y] + 2 d[x y] + d[y]"),
            ("d[x y]", "d[x]", "2 d[x^2 y]"),
        ];
        for (a, b, want) in cases {
            let got = d(&lv, a).mul(&d(&lv, b)).unwrap();
            assert_eq!(got, d(&lv, want), "{a} * {b}");
            assert_eq!(got.to_string(), want, "canonical text of {a} * {b}");
        }
    }

    #[test]
    fn mixed_law_products_frozen_values_p2() {
        let lv = level("t2", 2, 1);
        let got = d(&lv, "d[y]").mul(&d(&lv, "d[x^2]")).unwrap();
        assert_eq!(got.to_string(), "d[x^2 y] + d[x y] + d[y]");
        let rev = d(&lv, "d[x^2]").mul(&d(&lv, "d[y]")).unwrap();
        assert_eq!(rev.to_string(), "d[x^2 y] + d[x y]");
        assert_eq!(d(&lv, "d[y]").commutator(&d(&lv, "d[x^2]")).unwrap(), d(&lv, "d[y]"));
        assert_eq!(d(&lv, "d[x]").mul(&d(&lv, "d[y^2]")).unwrap(), d(&lv, "d[x y^2]"));
        assert_eq!(d(&lv, "d[y^2]").mul(&d(&lv, "d[x]")).unwrap(), d(&lv, "d[x y^2]"));
    }

    #[test]
    fn cross_products_for_commuting_coordinates_factor() {
        // In a direct product the blocks commute elementwise.
        let lv = level("ga*gm", 3, 1);
        let a = d(&lv, "d[y^2]");
        let b = d(&lv, "d[x^3]");
        assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        assert_eq!(a.mul(&b).unwrap(), d(&lv, "d[y^2 x^3]"));
    }

    #[test]
    fn comul_and_counit() {
        let lv = level("gm", 3, 0);
        let delta = d(&lv, "d[x^2]").comul();
        let mut want = DistTensor::zero(&lv);
        for a in 0..=2u32 {
            want.add_term(&MultiIndex::single(1, 0, a), &MultiIndex::single(1, 0, 2 - a), 1);
        }
        assert_eq!(delta, want);
        assert_eq!(d(&lv, "d[1]").counit().value(), 1);
        assert_eq!(d(&lv, "d[x]").counit().value(), 0);
    }

    #[test]
    fn comul_is_an_algebra_map() {
        // Delta(uv) = Delta(u) Delta(v) on sample pairs.
        let lv = level("t2", 2, 1);
        let u = d(&lv, "d[y] + d[x]");
        let v = d(&lv, "d[x^2 y]");
        let lhs = u.mul(&v).unwrap().comul();
        let rhs = u.comul().mul(&v.comul()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn antipode_satisfies_the_axiom() {
        // mul (S (x) 1) Delta = unit . counit on every box element.
        let grid = [("gm", 2u32, 1u32), ("gm", 3, 1), ("ga", 3, 1), ("t2", 2, 1), ("t2", 3, 0)];
        for (expr, p, r) in grid {
            let lv = level(expr, p, r);
            for j in lv.box_indices().unwrap() {
                let u = Distribution::basis(&lv, j.clone()).unwrap();
                let mut acc = Distribution::zero(&lv);
                for ((a, b), c) in u.comul().terms() {
                    let sa = Distribution::basis(&lv, a.clone()).unwrap().antipode().unwrap();
                    let db = Distribution::basis(&lv, b.clone()).unwrap();
                    acc = acc.add(&sa.mul(&db).unwrap().scale(lv.modulus().elt(u64::from(c))));
                }
                let want = Distribution::unit(&lv).scale(u.counit());
                assert_eq!(acc, want, "{expr} p={p} J={j:?}");
            }
        }
    }

    #[test]
    fn antipode_frozen_values() {
        let gm2 = level("gm", 2, 1);
        assert_eq!(d(&gm2, "d[x]").antipode().unwrap(), d(&gm2, "d[x]"));
        assert_eq!(d(&gm2, "d[x^2]").antipode().unwrap(), d(&gm2, "d[x^2] + d[x]"));
        assert_eq!(d(&gm2, "d[x^3]").antipode().unwrap(), d(&gm2, "d[x^3] + d[x]"));
        let gm3 = level("gm", 3, 1);
        assert_eq!(d(&gm3, "d[x]").antipode().unwrap(), d(&gm3, "2 d[x]"));
        assert_eq!(d(&gm3, "d[x^3]").antipode().unwrap(), d(&gm3, "2 d[x^3] + d[x^2] + 2 d[x]"));
        // Additive law: S(d[y^n]) = (-1)^n d[y^n].
        let ga3 = level("ga", 3, 1);
        for n in 0..=8u32 {
            let s = d(&ga3, &format!("d[y^{n}]")).antipode().unwrap();
            let sign = if n % 2 == 0 { "" } else { "2 " };
            assert_eq!(s, d(&ga3, &format!("{sign}d[y^{n}]")));
        }
    }

    #[test]
    fn frobenius_values_on_the_mixed_law() {
        let lv = level("t2", 3, 1);
        // Multiplicative block: F fixes the generators.
        for r in 0..=1u32 {
            let gid = lv.gen_id(0, r);
            let f = lv.frobenius(gid).unwrap();
            assert_eq!(f, Distribution::generator(&lv, gid), "x-generator r={r}");
        }
        // Additive block: F kills the generators.
        for r in 0..=1u32 {
            let gid = lv.gen_id(1, r);
            assert!(lv.frobenius(gid).unwrap().is_zero(), "y-generator r={r}");
        }
    }

    #[test]
    fn basis_change_round_trip() {
        for (expr, p, r) in [("gm", 3u32, 1u32), ("ga", 2, 2), ("t2", 2, 1), ("t2", 3, 1)] {
            let lv = level(expr, p, r);
            for j in lv.box_indices().unwrap() {
                let combo = additive_to_mult(&lv, &j).unwrap();
                let mut back = Distribution::zero(&lv);
                for (m, &c) in combo.iter() {
                    let exp = mult_to_additive(&lv, m).unwrap();
                    for (l, &cl) in exp.iter() {
                        back.add_term(l, (u64::from(c) * u64::from(cl) % u64::from(p)) as u32);
                    }
                }
                assert_eq!(
                    back,
                    Distribution::basis(&lv, j.clone()).unwrap(),
                    "{expr} p={p} {j:?}"
                );
            }
        }
    }

    #[test]
    fn basis_change_frozen_values() {
        let lv = level("t2", 3, 1);
        let text = |j: &str| -> String { d(&lv, j).to_mult().unwrap().to_text() };
        assert_eq!(text("d[x^2]"), "2 m[x:2,0] + m[x:1,0]");
        assert_eq!(text("d[x y]"), "m[x:1,0; y:1,0] + 2 m[y:1,0]");
        assert_eq!(text("d[x^2 y]"), "2 m[x:2,0; y:1,0] + m[y:1,0]");
    }

    #[test]
    fn pairing_reads_series_coefficients() {
        let lv = level("gm", 3, 0);
        let vars1 = lv.law().vars1().clone();
        let mut f = Series::zero(vars1, lv.modulus(), lv.law().cap());
        f.add_term(&MultiIndex::single(1, 0, 2), 2);
        f.add_term(&MultiIndex::single(1, 0, 1), 1);
        assert_eq!(d(&lv, "d[x^2]").pair(&f).unwrap().value(), 2);
        assert_eq!(d(&lv, "d[x^2] + d[x]").pair(&f).unwrap().value(), 0);
    }

    #[test]
    fn out_of_box_operands_are_rejected() {
        let lv = level("gm", 2, 0);
        assert!(parse_distribution(&lv, "d[x^2]").is_err());
        assert!(Distribution::basis(&lv, MultiIndex::single(1, 0, 2)).is_err());
    }

    #[test]
    fn parser_round_trips() {
        let lv = level("t2", 3, 1);
        for text in ["d[x^2 y] + 2 d[y]", "d[1]", "2 d[x^8 y^8]"] {
            assert_eq!(d(&lv, text).to_string(), text);
        }
        let c = parse_mult_combo(&lv, "2 m[x:2,1; y:0,1] + m[1]").unwrap();
        assert_eq!(c.to_text(), "2 m[x:2,1; y:0,1] + m[1]");
        // Digits at or above p are parse errors.
        assert!(parse_mult_combo(&lv, "m[x:3,0]").is_err());
        // Signs reduce mod p; x sorts above y in graded-lex order.
        assert_eq!(d(&lv, "d[x] - d[y]").to_string(), "d[x] + 2 d[y]");
    }

    #[test]
    fn structure_constants_cannot_escape_the_box() {
        // Numerical spot check of the no-escape argument: at level 0 for
        // p = 2 the index K = 2 is out of the box, and the direct rank-2
        // read of its would-be coefficient is zero.
        let pr = Prime::new(2).unwrap();
        let law = Arc::new(builtin_law("gm", pr, 16).unwrap());
        let lv = DistLevel::new_unchecked(law.clone(), 0).unwrap();
        let prod = d(&lv, "d[x]").mul(&d(&lv, "d[x]")).unwrap();
        assert_eq!(prod, d(&lv, "d[x]"), "2 d[x^2] drops, the d[x] term stays");
        let m = law.comul(0);
        let m2 = m.mul(m).unwrap();
        let mut target = MultiIndex::zero(2);
        target.0[0] = 1;
        target.0[1] = 1;
        assert!(m2.coefficient(&target).unwrap().is_zero());
    }
}
