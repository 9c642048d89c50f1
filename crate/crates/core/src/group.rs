//! Formal group laws presented by their comultiplication series.
//!
//! A law over F_p on coordinates `x_1, ..., x_n` is the data of one rank-2
//! series `m(x_i)` per coordinate with zero constant term and linear part
//! exactly `x_i' + x_i''`. Coordinates are partitioned into contiguous
//! *blocks*, each of which must be a commutative formal subgroup in the
//! sense checked by [`GroupLaw::validate`]:
//!
//! * counit: setting either tensor factor to zero recovers the identity;
//! * coassociativity: `(m (x) 1) m = (1 (x) m) m` coefficientwise up to the
//!   truncation cap;
//! * per-block commutativity: each `m(x_i)` restricted to the variables of
//!   its own block is symmetric under swapping the tensor factors;
//! * block closure: for a coordinate `j` outside block `B`, killing every
//!   variable outside `B` kills `m(x_j)` entirely, so `B` really is a
//!   subgroup sitting inside the law.
//!
//! Builtins: the additive law `m(y) = y' + y''`, the multiplicative law
//! `m(x) = x' + x'' + x'x''`, their finite products, and the mixed
//! two-coordinate law `t2` (a multiplicative coordinate acting on an
//! additive one):
//!
//! ```text
//! m(x) = x' + x'' + x'x''
//! m(y) = (1 + x') y'' + y' * (1 - x'' + x''^2 - x''^3 + ...)
//! ```
//!
//! which is the simplest law whose distribution algebra is genuinely
//! noncommutative.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::arith::{MultiIndex, Prime};
use crate::error::{Error, Result};
use crate::report::{CheckOutcome, Report};
use crate::series::{Series, VarSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Additive,
    Multiplicative,
    Custom,
}

/// A contiguous run of coordinates forming one commutative block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    /// Coordinate indices, ascending and contiguous.
    pub coords: Vec<usize>,
}

/// A formal group law with block structure and a fixed truncation cap.
pub struct GroupLaw {
    name: String,
    p: Prime,
    cap: u32,
    coords: Vec<String>,
    blocks: Vec<Block>,
    comul: Vec<Series>,
    vars1: Arc<VarSet>,
    vars2: Arc<VarSet>,
    inverse: OnceLock<std::result::Result<Vec<Series>, String>>,
}

impl fmt::Debug for GroupLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupLaw")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("cap", &self.cap)
            .field("coords", &self.coords)
            .field("blocks", &self.blocks)
            .finish_non_exhaustive()
    }
}

impl GroupLaw {
    /// Common constructor: validates the structural preconditions that make
    /// the data a candidate law (shape only; the axioms live in
    /// [`GroupLaw::validate`]).
    pub fn new(
        name: impl Into<String>,
        p: Prime,
        cap: u32,
        coords: Vec<String>,
        blocks: Vec<Block>,
        comul: Vec<Series>,
    ) -> Result<GroupLaw> {
        let name = name.into();
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidLaw("no coordinates".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if coords[i] == coords[j] {
                    return Err(Error::InvalidLaw(format!("duplicate coordinate name {}", coords[i])));
                }
            }
        }
        // Blocks must partition 0..n into ascending contiguous runs.
        let mut expect = 0usize;
        for b in &blocks {
            if b.coords.is_empty() {
                return Err(Error::InvalidLaw("empty block".into()));
            }
            for &c in &b.coords {
                if c != expect {
                    return Err(Error::InvalidLaw(
                        "blocks must partition the coordinates into contiguous ascending runs".into(),
                    ));
                }
                expect += 1;
            }
        }
        if expect != n {
            return Err(Error::InvalidLaw("blocks do not cover all coordinates".into()));
        }
        if comul.len() != n {
            return Err(Error::InvalidLaw("one comultiplication series per coordinate required".into()));
        }
        let vars1 = VarSet::new(coords.clone(), 1);
        let vars2 = VarSet::new(coords.clone(), 2);
        for (i, s) in comul.iter().enumerate() {
            if s.modulus() != p {
                return Err(Error::InvalidLaw(format!("comul({}) has modulus {}", coords[i], s.modulus())));
            }
            if s.cap() != cap {
                return Err(Error::InvalidLaw(format!("comul({}) has cap {}", coords[i], s.cap())));
            }
            if s.vars() != &vars2 && **s.vars() != *vars2 {
                return Err(Error::InvalidLaw(format!("comul({}) over wrong variable set", coords[i])));
            }
            if !s.constant_term().is_zero() {
                return Err(Error::InvalidLaw(format!("comul({}) has a nonzero constant term", coords[i])));
            }
            // Linear part must be exactly x_i' + x_i''.
            for (idx, c) in s.terms() {
                if idx.degree() != 1 {
                    continue;
                }
                let slot = idx.iter().position(|e| e == 1).unwrap();
                let ok = (slot == i || slot == n + i) && c == 1;
                if !ok {
                    return Err(Error::InvalidLaw(format!(
                        "comul({}) has linear term {} {}, expected exactly {}' + {}''",
                        coords[i],
                        c,
                        vars2.slot_name(slot),
                        coords[i],
                        coords[i]
                    )));
                }
            }
            for (copy, slot) in [(0usize, i), (1usize, n + i)] {
                let _ = copy;
                let lin = MultiIndex::single(2 * n, slot, 1);
                if s.coefficient(&lin)?.value() != 1 {
                    return Err(Error::InvalidLaw(format!(
                        "comul({}) is missing the linear term {}",
                        coords[i],
                        vars2.slot_name(slot)
                    )));
                }
            }
        }
        Ok(GroupLaw { name, p, cap, coords, blocks, comul, vars1, vars2, inverse: OnceLock::new() })
    }

    #[must_use]
    pub fn name(&self) -> &str {
        &self.name
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
    pub fn num_coords(&self) -> usize {
        self.coords.len()
    }

    #[must_use]
    pub fn coord_names(&self) -> &[String] {
        &self.coords
    }

    #[must_use]
    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    #[must_use]
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Block index owning a coordinate.
    #[must_use]
    pub fn block_of(&self, coord: usize) -> usize {
        self.blocks.iter().position(|b| b.coords.contains(&coord)).expect("coordinate in some block")
    }

    #[must_use]
    pub fn comul(&self, coord: usize) -> &Series {
        &self.comul[coord]
    }

    #[must_use]
    pub fn vars1(&self) -> &Arc<VarSet> {
        &self.vars1
    }

    #[must_use]
    pub fn vars2(&self) -> &Arc<VarSet> {
        &self.vars2
    }

    // ----- builtins -------------------------------------------------------

    /// The additive law on one coordinate named `coord`.
    pub fn additive_named(p: Prime, cap: u32, coord: &str) -> Result<GroupLaw> {
        let vars2 = VarSet::new(vec![coord.to_string()], 2);
        let mut m = Series::zero(vars2, p, cap);
        m.add_term(&MultiIndex::single(2, 0, 1), 1);
        m.add_term(&MultiIndex::single(2, 1, 1), 1);
        GroupLaw::new(
            "ga",
            p,
            cap,
            vec![coord.to_string()],
            vec![Block { kind: BlockKind::Additive, coords: vec![0] }],
            vec![m],
        )
    }

    pub fn additive(p: Prime, cap: u32) -> Result<GroupLaw> {
        Self::additive_named(p, cap, "y")
    }

    /// The multiplicative law on one coordinate named `coord`:
    /// `m(x) = x' + x'' + x'x''`.
    pub fn multiplicative_named(p: Prime, cap: u32, coord: &str) -> Result<GroupLaw> {
        let vars2 = VarSet::new(vec![coord.to_string()], 2);
        let mut m = Series::zero(vars2, p, cap);
        m.add_term(&MultiIndex::single(2, 0, 1), 1);
        m.add_term(&MultiIndex::single(2, 1, 1), 1);
        m.add_term(&MultiIndex(smallvec::smallvec![1, 1]), 1);
        GroupLaw::new(
            "gm",
            p,
            cap,
            vec![coord.to_string()],
            vec![Block { kind: BlockKind::Multiplicative, coords: vec![0] }],
            vec![m],
        )
    }

    pub fn multiplicative(p: Prime, cap: u32) -> Result<GroupLaw> {
        Self::multiplicative_named(p, cap, "x")
    }

    /// The mixed two-coordinate law: multiplicative `x` acting on additive
    /// `y`. Its `m(y)` carries the geometric tail in `x''` truncated at the
    /// cap.
    pub fn t2(p: Prime, cap: u32) -> Result<GroupLaw> {
        let coords = vec!["x".to_string(), "y".to_string()];
        let vars2 = VarSet::new(coords.clone(), 2);
        // Slots: 0 = x', 1 = y', 2 = x'', 3 = y''.
        let mut mx = Series::zero(vars2.clone(), p, cap);
        mx.add_term(&MultiIndex(smallvec::smallvec![1, 0, 0, 0]), 1);
        mx.add_term(&MultiIndex(smallvec::smallvec![0, 0, 1, 0]), 1);
        mx.add_term(&MultiIndex(smallvec::smallvec![1, 0, 1, 0]), 1);
        let mut my = Series::zero(vars2.clone(), p, cap);
        my.add_term(&MultiIndex(smallvec::smallvec![0, 0, 0, 1]), 1);
        my.add_term(&MultiIndex(smallvec::smallvec![1, 0, 0, 1]), 1);
        for b in 0..cap {
            let sign = if b % 2 == 0 { 1 } else { p.get() - 1 };
            my.add_term(&MultiIndex(smallvec::smallvec![0, 1, b, 0]), sign);
        }
        GroupLaw::new(
            "t2",
            p,
            cap,
            coords,
            vec![
                Block { kind: BlockKind::Multiplicative, coords: vec![0] },
                Block { kind: BlockKind::Additive, coords: vec![1] },
            ],
            vec![mx, my],
        )
    }

    /// Product of laws: coordinates concatenated, blocks concatenated, the
    /// factors do not interact. Colliding coordinate names get numeric
    /// suffixes (`ga*ga` has coordinates `y1`, `y2`).
    pub fn product(factors: &[GroupLaw]) -> Result<GroupLaw> {
        if factors.is_empty() {
            return Err(Error::InvalidLaw("empty product".into()));
        }
        let p = factors[0].p;
        let cap = factors[0].cap;
        for f in factors {
            if f.p != p {
                return Err(Error::InvalidLaw("product factors over different primes".into()));
            }
            if f.cap != cap {
                return Err(Error::InvalidLaw("product factors with different caps".into()));
            }
        }
        // Rename colliding coordinates.
        let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        for f in factors {
            for c in &f.coords {
                *counts.entry(c.as_str()).or_insert(0) += 1;
            }
        }
        let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        let mut coords: Vec<String> = Vec::new();
        for f in factors {
            for c in &f.coords {
                if counts[c.as_str()] > 1 {
                    let k = seen.entry(c.clone()).or_insert(0);
                    *k += 1;
                    coords.push(format!("{c}{k}"));
                } else {
                    coords.push(c.clone());
                }
            }
        }
        let n = coords.len();
        let vars2 = VarSet::new(coords.clone(), 2);
        let mut blocks: Vec<Block> = Vec::new();
        let mut comul: Vec<Series> = Vec::new();
        let mut offset = 0usize;
        for f in factors {
            let fn_ = f.coords.len();
            for b in &f.blocks {
                blocks.push(Block { kind: b.kind, coords: b.coords.iter().map(|&c| c + offset).collect() });
            }
            // Slot map: factor copy-c coord-i -> combined copy-c coord (offset+i).
            let map: Vec<usize> = (0..2 * fn_)
                .map(|s| {
                    let (copy, i) = (s / fn_, s % fn_);
                    copy * n + offset + i
                })
                .collect();
            for i in 0..fn_ {
                comul.push(f.comul[i].map_slots(vars2.clone(), &map));
            }
            offset += fn_;
        }
        let name = factors.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join("*");
        GroupLaw::new(name, p, cap, coords, blocks, comul)
    }

    /// Reorders the blocks by `order` (a permutation of block indices).
    /// Coordinates are renumbered accordingly and every comultiplication is
    /// rewritten in the new slot numbering; the group is unchanged.
    pub fn permute_blocks(&self, order: &[usize]) -> Result<GroupLaw> {
        let nb = self.blocks.len();
        if order.len() != nb {
            return Err(Error::InvalidLaw("permutation length mismatch".into()));
        }
        let mut used = vec![false; nb];
        for &b in order {
            if b >= nb || used[b] {
                return Err(Error::InvalidLaw("not a permutation of the blocks".into()));
            }
            used[b] = true;
        }
        let n = self.coords.len();
        // old coord -> new coord position
        let mut new_of_old = vec![0usize; n];
        let mut coords: Vec<String> = Vec::new();
        let mut blocks: Vec<Block> = Vec::new();
        for &ob in order {
            let mut run = Vec::new();
            for &oc in &self.blocks[ob].coords {
                new_of_old[oc] = coords.len();
                run.push(coords.len());
                coords.push(self.coords[oc].clone());
            }
            blocks.push(Block { kind: self.blocks[ob].kind, coords: run });
        }
        let vars2 = VarSet::new(coords.clone(), 2);
        let slot_map: Vec<usize> = (0..2 * n)
            .map(|s| {
                let (copy, i) = (s / n, s % n);
                copy * n + new_of_old[i]
            })
            .collect();
        let mut comul = vec![None; n];
        for (old_i, s) in self.comul.iter().enumerate() {
            comul[new_of_old[old_i]] = Some(s.map_slots(vars2.clone(), &slot_map));
        }
        let comul: Vec<Series> = comul.into_iter().map(|s| s.unwrap()).collect();
        GroupLaw::new(format!("{}#perm", self.name), self.p, self.cap, coords, blocks, comul)
    }

    // ----- validation -----------------------------------------------------

    /// Runs the four axiom checks and reports each outcome.
    #[must_use]
    pub fn validate(&self) -> Report {
        let mut report = Report::new();
        report.push(self.check_counit());
        report.push(self.check_coassociativity());
        report.push(self.check_block_commutativity());
        report.push(self.check_block_closure());
        report.push(
            CheckOutcome::pass("commutativity-flag")
                .with_detail(format!("law is commutative: {}", self.is_commutative())),
        );
        report
    }

    /// True when every `m(x_i)` is symmetric under swapping the tensor
    /// factors. Informational; only per-block commutativity is an axiom.
    #[must_use]
    pub fn is_commutative(&self) -> bool {
        self.comul.iter().all(|s| *s == s.swap_tensor_factors())
    }

    fn check_counit(&self) -> CheckOutcome {
        let n = self.coords.len();
        for (i, s) in self.comul.iter().enumerate() {
            // (1 (x) eps): kill the right copy, expect x_i'.
            let right_slots: Vec<usize> = (n..2 * n).collect();
            let left_slots: Vec<usize> = (0..n).collect();
            let keep_left = s.project_out(&right_slots);
            let keep_right = s.project_out(&left_slots);
            let mut xi_left = Series::zero(self.vars2.clone(), self.p, self.cap);
            xi_left.add_term(&MultiIndex::single(2 * n, i, 1), 1);
            let mut xi_right = Series::zero(self.vars2.clone(), self.p, self.cap);
            xi_right.add_term(&MultiIndex::single(2 * n, n + i, 1), 1);
            if keep_left != xi_left {
                return CheckOutcome::fail(
                    "counit",
                    format!("comul({}) with the right factor killed is {}", self.coords[i], keep_left),
                );
            }
            if keep_right != xi_right {
                return CheckOutcome::fail(
                    "counit",
                    format!("comul({}) with the left factor killed is {}", self.coords[i], keep_right),
                );
            }
        }
        CheckOutcome::pass("counit")
    }

    fn check_coassociativity(&self) -> CheckOutcome {
        let n = self.coords.len();
        let vars3 = VarSet::new(self.coords.clone(), 3);
        // Images for (m (x) 1): left copy -> m embedded in copies (0,1),
        // right copy -> copy-2 variables. For (1 (x) m): left copy ->
        // copy-0 variables, right copy -> m embedded in copies (1,2).
        let embed = |shift: usize| -> Vec<Series> {
            let map: Vec<usize> = (0..2 * n)
                .map(|s| {
                    let (copy, i) = (s / n, s % n);
                    (copy + shift) * n + i
                })
                .collect();
            self.comul.iter().map(|s| s.map_slots(vars3.clone(), &map)).collect()
        };
        let m01 = embed(0);
        let m12 = embed(1);
        let var3 = |copy: usize, i: usize| Series::var(vars3.clone(), self.p, self.cap, copy * n + i);
        for (i, s) in self.comul.iter().enumerate() {
            let images_left: Vec<Series> =
                (0..n).map(|j| m01[j].clone()).chain((0..n).map(|j| var3(2, j))).collect();
            let images_right: Vec<Series> =
                (0..n).map(|j| var3(0, j)).chain((0..n).map(|j| m12[j].clone())).collect();
            let a = match s.substitute(&images_left) {
                Ok(v) => v,
                Err(e) => return CheckOutcome::fail("coassociativity", e.to_string()),
            };
            let b = match s.substitute(&images_right) {
                Ok(v) => v,
                Err(e) => return CheckOutcome::fail("coassociativity", e.to_string()),
            };
            if a != b {
                let diff = a.sub(&b).unwrap();
                let witness = diff.terms_desc().next().map(|(idx, c)| {
                    let mono: Vec<String> = idx
                        .iter()
                        .enumerate()
                        .filter(|&(_, e)| e > 0)
                        .map(|(s_, e)| format!("{}^{}", vars3.slot_name(s_), e))
                        .collect();
                    format!("coefficient {} at {}", c, mono.join("*"))
                });
                return CheckOutcome::fail(
                    "coassociativity",
                    format!(
                        "comul({}) fails: first difference {}",
                        self.coords[i],
                        witness.unwrap_or_default()
                    ),
                );
            }
        }
        CheckOutcome::pass("coassociativity")
    }

    fn check_block_commutativity(&self) -> CheckOutcome {
        let n = self.coords.len();
        for b in &self.blocks {
            let dead: Vec<usize> = (0..n)
                .filter(|c| !b.coords.contains(c))
                .flat_map(|c| [c, n + c])
                .collect();
            for &i in &b.coords {
                let restricted = self.comul[i].project_out(&dead);
                if restricted != restricted.swap_tensor_factors() {
                    return CheckOutcome::fail(
                        "block-commutativity",
                        format!(
                            "comul({}) restricted to its block is not symmetric",
                            self.coords[i]
                        ),
                    );
                }
            }
        }
        CheckOutcome::pass("block-commutativity")
    }

    fn check_block_closure(&self) -> CheckOutcome {
        let n = self.coords.len();
        for (bi, b) in self.blocks.iter().enumerate() {
            // Kill everything outside the block; comultiplications of
            // outside coordinates must vanish entirely.
            let dead: Vec<usize> = (0..n)
                .filter(|c| !b.coords.contains(c))
                .flat_map(|c| [c, n + c])
                .collect();
            for j in 0..n {
                if b.coords.contains(&j) {
                    continue;
                }
                let surviving = self.comul[j].project_out(&dead);
                if !surviving.is_zero() {
                    return CheckOutcome::fail(
                        "block-closure",
                        format!(
                            "block {} is not a subgroup: comul({}) restricted to the block's variables is {}",
                            bi, self.coords[j], surviving
                        ),
                    );
                }
            }
        }
        CheckOutcome::pass("block-closure")
    }

    // ----- inverse series --------------------------------------------------

    /// The coordinatewise inverse series `i` with `m(x, i(x)) = 0`, built
    /// degree by degree. Cached after the first call.
    pub fn inverse(&self) -> Result<&[Series]> {
        let computed = self.inverse.get_or_init(|| self.compute_inverse().map_err(|e| e.to_string()));
        match computed {
            Ok(v) => Ok(v.as_slice()),
            Err(msg) => Err(Error::InvalidLaw(format!("no inverse series: {msg}"))),
        }
    }

    fn compose_with(&self, left: &[Series], right: &[Series]) -> Result<Vec<Series>> {
        let n = self.coords.len();
        let mut images: Vec<Series> = Vec::with_capacity(2 * n);
        images.extend_from_slice(left);
        images.extend_from_slice(right);
        self.comul.iter().map(|s| s.substitute(&images)).collect()
    }

    fn compute_inverse(&self) -> Result<Vec<Series>> {
        let n = self.coords.len();
        let idvars: Vec<Series> =
            (0..n).map(|i| Series::var(self.vars1.clone(), self.p, self.cap, i)).collect();
        let mut inv: Vec<Series> = idvars.iter().map(Series::neg).collect();
        for d in 2..=self.cap {
            let comp = self.compose_with(&idvars, &inv)?;
            let mut progressed = false;
            for (i, c) in comp.iter().enumerate() {
                let defect: Vec<(MultiIndex, u32)> = c
                    .terms()
                    .filter(|(idx, _)| idx.degree() == u64::from(d))
                    .map(|(idx, coeff)| (idx.clone(), coeff))
                    .collect();
                if defect.is_empty() {
                    continue;
                }
                progressed = true;
                let p = self.p.get();
                for (idx, coeff) in defect {
                    inv[i].add_term(&idx, p - coeff);
                }
            }
            // Lower degrees are already clean, so an empty defect at every
            // coordinate does not imply convergence for higher d; keep going.
            let _ = progressed;
        }
        // Both compositions must vanish identically up to the cap.
        for (tag, comp) in [
            ("m(x, i(x))", self.compose_with(&idvars, &inv)?),
            ("m(i(x), x)", self.compose_with(&inv, &idvars)?),
        ] {
            for (i, c) in comp.iter().enumerate() {
                if !c.is_zero() {
                    return Err(Error::InvalidLaw(format!(
                        "{tag} is nonzero at coordinate {}: {}",
                        self.coords[i], c
                    )));
                }
            }
        }
        Ok(inv)
    }
}

// ----- custom laws from JSON ------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LawFileBlock {
    kind: BlockKind,
    coords: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LawFileTerm {
    left: Vec<u32>,
    right: Vec<u32>,
    coeff: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LawFile {
    name: String,
    p: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    cap: Option<u32>,
    coords: Vec<String>,
    blocks: Vec<LawFileBlock>,
    comul: std::collections::BTreeMap<String, Vec<LawFileTerm>>,
}

impl GroupLaw {
    /// Parses a law from its JSON description. `cap_override` wins over the
    /// file's own cap; one of the two must be present.
    pub fn from_json_str(text: &str, cap_override: Option<u32>) -> Result<GroupLaw> {
        let file: LawFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidLaw(format!("bad law file: {e}")))?;
        let p = Prime::new(file.p)?;
        let cap = cap_override
            .or(file.cap)
            .ok_or_else(|| Error::InvalidLaw("law file has no cap and no override given".into()))?;
        let n = file.coords.len();
        let coord_index = |name: &str| -> Result<usize> {
            file.coords
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidLaw(format!("unknown coordinate {name}")))
        };
        let blocks: Vec<Block> = file
            .blocks
            .iter()
            .map(|b| {
                let coords: Result<Vec<usize>> = b.coords.iter().map(|c| coord_index(c)).collect();
                Ok(Block { kind: b.kind, coords: coords? })
            })
            .collect::<Result<_>>()?;
        let vars2 = VarSet::new(file.coords.clone(), 2);
        let mut comul: Vec<Series> = Vec::with_capacity(n);
        for cname in &file.coords {
            let terms = file
                .comul
                .get(cname)
                .ok_or_else(|| Error::InvalidLaw(format!("missing comul for coordinate {cname}")))?;
            let mut s = Series::zero(vars2.clone(), p, cap);
            for t in terms {
                if t.left.len() != n || t.right.len() != n {
                    return Err(Error::InvalidLaw(format!(
                        "comul({cname}): exponent vectors must have length {n}"
                    )));
                }
                let mut idx = MultiIndex::zero(2 * n);
                for (i, &e) in t.left.iter().enumerate() {
                    idx.0[i] = e;
                }
                for (i, &e) in t.right.iter().enumerate() {
                    idx.0[n + i] = e;
                }
                s.add_term(&idx, p.elt_signed(t.coeff).value());
            }
            comul.push(s);
        }
        GroupLaw::new(file.name, p, cap, file.coords, blocks, comul)
    }

    /// Serializes the law in the same JSON shape `from_json_str` accepts.
    #[must_use]
    pub fn to_json_value(&self) -> serde_json::Value {
        let n = self.coords.len();
        let blocks: Vec<LawFileBlock> = self
            .blocks
            .iter()
            .map(|b| LawFileBlock {
                kind: b.kind,
                coords: b.coords.iter().map(|&c| self.coords[c].clone()).collect(),
            })
            .collect();
        let mut comul = std::collections::BTreeMap::new();
        for (i, s) in self.comul.iter().enumerate() {
            let terms: Vec<LawFileTerm> = s
                .terms_desc()
                .map(|(idx, c)| LawFileTerm {
                    left: (0..n).map(|j| idx.get(j)).collect(),
                    right: (0..n).map(|j| idx.get(n + j)).collect(),
                    coeff: i64::from(c),
                })
                .collect();
            comul.insert(self.coords[i].clone(), terms);
        }
        serde_json::to_value(LawFile {
            name: self.name.clone(),
            p: self.p.get(),
            cap: Some(self.cap),
            coords: self.coords.clone(),
            blocks,
            comul,
        })
        .expect("law serialization cannot fail")
    }
}

/// Builds a law from a builtin expression: `ga`, `gm`, `t2`, or a
/// `*`-separated product such as `ga*gm`.
pub fn builtin_law(expr: &str, p: Prime, cap: u32) -> Result<GroupLaw> {
    let parts: Vec<&str> = expr.split('*').map(str::trim).collect();
    let factor = |name: &str| -> Result<GroupLaw> {
        match name {
            "ga" => GroupLaw::additive(p, cap),
            "gm" => GroupLaw::multiplicative(p, cap),
            "t2" => GroupLaw::t2(p, cap),
            other => Err(Error::Parse(format!(
                "unknown builtin law {other} (expected ga, gm, t2, or a * product)"
            ))),
        }
    };
    if parts.len() == 1 {
        factor(parts[0])
    } else {
        let factors: Result<Vec<GroupLaw>> = parts.iter().map(|s| factor(s)).collect();
        GroupLaw::product(&factors?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prime(p: u32) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn builtins_validate() {
        for p in [2u32, 3, 5] {
            let pr = prime(p);
            for law in [
                GroupLaw::additive(pr, 12).unwrap(),
                GroupLaw::multiplicative(pr, 12).unwrap(),
                GroupLaw::t2(pr, 12).unwrap(),
            ] {
                let report = law.validate();
                assert!(report.all_pass(), "{} at p={p}: {:?}", law.name(), report.first_failure());
            }
        }
    }

    #[test]
    fn t2_is_noncommutative_but_blockwise_commutative() {
        let law = GroupLaw::t2(prime(3), 10).unwrap();
        assert!(!law.is_commutative());
        assert!(law.validate().all_pass());
    }

    #[test]
    fn product_law_renames_and_validates() {
        let p = prime(3);
        let ga1 = GroupLaw::additive(p, 8).unwrap();
        let ga2 = GroupLaw::additive(p, 8).unwrap();
        let prod = GroupLaw::product(&[ga1, ga2]).unwrap();
        assert_eq!(prod.coord_names(), &["y1".to_string(), "y2".to_string()]);
        assert!(prod.validate().all_pass());
        assert!(prod.is_commutative());

        let mix = builtin_law("ga*gm", p, 8).unwrap();
        assert_eq!(mix.coord_names(), &["y".to_string(), "x".to_string()]);
        assert_eq!(mix.blocks().len(), 2);
        assert!(mix.validate().all_pass());
    }

    #[test]
    fn block_closure_failure_is_detected() {
        // m(x) = x' + x'' + y'y'' is coassociative and commutative but the
        // {y} block is not a subgroup complement: killing x leaves y'y''.
        let p = prime(3);
        let vars2 = VarSet::new(vec!["x".into(), "y".into()], 2);
        let mut mx = Series::zero(vars2.clone(), p, 8);
        mx.add_term(&MultiIndex(smallvec::smallvec![1, 0, 0, 0]), 1);
        mx.add_term(&MultiIndex(smallvec::smallvec![0, 0, 1, 0]), 1);
        mx.add_term(&MultiIndex(smallvec::smallvec![0, 1, 0, 1]), 1);
        let mut my = Series::zero(vars2.clone(), p, 8);
        my.add_term(&MultiIndex(smallvec::smallvec![0, 1, 0, 0]), 1);
        my.add_term(&MultiIndex(smallvec::smallvec![0, 0, 0, 1]), 1);
        let law = GroupLaw::new(
            "bad-blocks",
            p,
            8,
            vec!["x".into(), "y".into()],
            vec![
                Block { kind: BlockKind::Custom, coords: vec![0] },
                Block { kind: BlockKind::Additive, coords: vec![1] },
            ],
            vec![mx, my],
        )
        .unwrap();
        let report = law.validate();
        let closure = report.checks.iter().find(|c| c.name == "block-closure").unwrap();
        assert!(!closure.pass);
        assert!(closure.witness.as_deref().unwrap().contains("comul(x)"));
        // The other axioms hold for this law.
        assert!(report.checks.iter().find(|c| c.name == "coassociativity").unwrap().pass);
        assert!(report.checks.iter().find(|c| c.name == "counit").unwrap().pass);
    }

    #[test]
    fn counit_failure_is_detected() {
        let p = prime(2);
        let vars2 = VarSet::new(vec!["x".into()], 2);
        let mut m = Series::zero(vars2, p, 6);
        m.add_term(&MultiIndex(smallvec::smallvec![1, 0]), 1);
        m.add_term(&MultiIndex(smallvec::smallvec![0, 1]), 1);
        m.add_term(&MultiIndex(smallvec::smallvec![2, 0]), 1);
        let law = GroupLaw::new(
            "bad-counit",
            p,
            6,
            vec!["x".into()],
            vec![Block { kind: BlockKind::Custom, coords: vec![0] }],
            vec![m],
        )
        .unwrap();
        let report = law.validate();
        assert!(!report.checks.iter().find(|c| c.name == "counit").unwrap().pass);
    }

    #[test]
    fn structural_preconditions_reject_bad_linear_parts() {
        let p = prime(3);
        let vars2 = VarSet::new(vec!["x".into()], 2);
        // Missing the right-hand linear term.
        let mut m = Series::zero(vars2.clone(), p, 6);
        m.add_term(&MultiIndex(smallvec::smallvec![1, 0]), 1);
        let r = GroupLaw::new(
            "no-linear",
            p,
            6,
            vec!["x".into()],
            vec![Block { kind: BlockKind::Custom, coords: vec![0] }],
            vec![m],
        );
        assert!(matches!(r, Err(Error::InvalidLaw(_))));
        // Nonzero constant term.
        let mut m2 = Series::zero(vars2, p, 6);
        m2.add_term(&MultiIndex(smallvec::smallvec![0, 0]), 1);
        m2.add_term(&MultiIndex(smallvec::smallvec![1, 0]), 1);
        m2.add_term(&MultiIndex(smallvec::smallvec![0, 1]), 1);
        let r2 = GroupLaw::new(
            "const",
            p,
            6,
            vec!["x".into()],
            vec![Block { kind: BlockKind::Custom, coords: vec![0] }],
            vec![m2],
        );
        assert!(matches!(r2, Err(Error::InvalidLaw(_))));
    }

    #[test]
    fn multiplicative_inverse_series() {
        // For m(x) = x' + x'' + x'x'', the inverse is the alternating
        // geometric series: at p = 3, cap 5 it reads 2x + x^2 + 2x^3 + ...
        let law = GroupLaw::multiplicative(prime(3), 5).unwrap();
        let inv = law.inverse().unwrap();
        let i = &inv[0];
        let coeff = |e: u32| i.coefficient(&MultiIndex::single(1, 0, e)).unwrap().value();
        assert_eq!([coeff(1), coeff(2), coeff(3), coeff(4), coeff(5)], [2, 1, 2, 1, 2]);
    }

    #[test]
    fn t2_inverse_series() {
        let law = GroupLaw::t2(prime(3), 6).unwrap();
        let inv = law.inverse().unwrap();
        // i(y) = -y exactly.
        let iy = &inv[1];
        assert_eq!(iy.num_terms(), 1);
        assert_eq!(iy.coefficient(&MultiIndex(smallvec::smallvec![0, 1])).unwrap().value(), 2);
        // i(x) alternates.
        let ix = &inv[0];
        assert_eq!(ix.coefficient(&MultiIndex(smallvec::smallvec![1, 0])).unwrap().value(), 2);
        assert_eq!(ix.coefficient(&MultiIndex(smallvec::smallvec![2, 0])).unwrap().value(), 1);
    }

    #[test]
    fn json_round_trip() {
        let law = GroupLaw::t2(prime(2), 6).unwrap();
        let text = serde_json::to_string(&law.to_json_value()).unwrap();
        let back = GroupLaw::from_json_str(&text, None).unwrap();
        assert_eq!(back.name(), "t2");
        assert_eq!(back.coord_names(), law.coord_names());
        for i in 0..2 {
            assert_eq!(back.comul(i), law.comul(i));
        }
        assert!(back.validate().all_pass());
        assert!(GroupLaw::from_json_str("{\"nope\":", None).is_err());
    }

    #[test]
    fn block_permutation_preserves_the_group() {
        let law = GroupLaw::t2(prime(3), 8).unwrap();
        let swapped = law.permute_blocks(&[1, 0]).unwrap();
        assert_eq!(swapped.coord_names(), &["y".to_string(), "x".to_string()]);
        assert!(swapped.validate().all_pass());
        // Swapping back recovers the original comultiplications.
        let back = swapped.permute_blocks(&[1, 0]).unwrap();
        for i in 0..2 {
            assert_eq!(back.comul(i), law.comul(i));
        }
    }
}
