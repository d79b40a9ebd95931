//! Oriented link diagrams as PD codes, crossing signs, resolution circles
//! and local diagram surgery (saddles and kinks).
//!
//! A crossing is a 4-tuple of arc identifiers read counterclockwise from
//! the incoming under-strand. Crossingless components are carried
//! separately as free loops with identifiers drawn from the same id space
//! as arcs.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Crossing sign under the right-hand rule.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

/// A slot of a crossing: 0 = incoming under-strand, then counterclockwise.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SlotRef {
    pub crossing: usize,
    pub pos: u8,
}

/// A vertex of the resolution cube {0,1}^N.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct CubeVertex {
    bits: u32,
    n: u8,
}

impl CubeVertex {
    pub fn new(bits: u32, n: u8) -> Self {
        debug_assert!(n == 32 || bits < (1u32 << n));
        CubeVertex { bits, n }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> u8 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coordinate(&self, i: usize) -> u8 {
        ((self.bits >> i) & 1) as u8
    }

    /// |v|, the sum of coordinates.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// 1-bits at positions strictly below `i`.
    pub fn ones_below(&self, i: usize) -> u32 {
        (self.bits & ((1u32 << i) - 1)).count_ones()
    }

    pub fn complement(&self) -> CubeVertex {
        let mask = if self.n >= 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        CubeVertex { bits: !self.bits & mask, n: self.n }
    }

    pub fn with_bit(&self, i: usize, value: u8) -> CubeVertex {
        let bits =
            if value == 1 { self.bits | (1 << i) } else { self.bits & !(1 << i) };
        CubeVertex { bits, n: self.n }
    }
}

/// The circles of one smoothing of a diagram.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub vertex: CubeVertex,
    /// Circles in canonical order (sorted by smallest contained id); each
    /// circle lists the arc/loop ids it contains, sorted.
    pub circles: Vec<Vec<usize>>,
}

impl Resolution {
    pub fn circle_count(&self) -> usize {
        self.circles.len()
    }

    /// Index of the circle containing the given arc or loop id.
    pub fn circle_of(&self, id: usize) -> Option<usize> {
        self.circles.iter().position(|c| c.binary_search(&id).is_ok())
    }
}

#[derive(Clone, Debug)]
struct Uf {
    parent: Vec<usize>,
}

impl Uf {
    fn new(n: usize) -> Self {
        Uf { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// An oriented link diagram presented by its PD code plus free loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarDiagram {
    crossings: Vec<[usize; 4]>,
    free_loops: Vec<usize>,
    signs: Vec<Sign>,
    /// Slot where each arc ends (enters a crossing).
    heads: BTreeMap<usize, SlotRef>,
    /// Slot where each arc begins (leaves a crossing).
    tails: BTreeMap<usize, SlotRef>,
    components: usize,
}

impl PlanarDiagram {
    /// Parse PD text such as `PD[X[1,4,2,3], X[3,2,4,1]]`. Crossingless
    /// circles are written `O` (fresh id) or `O[7]`.
    pub fn parse_pd(text: &str) -> Result<Self> {
        let inner = text.trim();
        let inner = inner
            .strip_prefix("PD[")
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::Parse("expected PD[...]".into()))?;
        let mut crossings = Vec::new();
        let mut loops = Vec::new();
        let mut rest = inner.trim();
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('X') {
                let r = r.trim_start();
                let r = r
                    .strip_prefix('[')
                    .ok_or_else(|| Error::Parse("expected [ after X".into()))?;
                let end =
                    r.find(']').ok_or_else(|| Error::Parse("unterminated X[..]".into()))?;
                let nums: Vec<usize> = r[..end]
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Parse(format!("bad arc id: {e}")))
                    })
                    .collect::<Result<_>>()?;
                if nums.len() != 4 {
                    return Err(Error::Parse(format!(
                        "crossing needs 4 arcs, got {}",
                        nums.len()
                    )));
                }
                crossings.push([nums[0], nums[1], nums[2], nums[3]]);
                rest = r[end + 1..].trim_start();
            } else if let Some(r) = rest.strip_prefix('O') {
                let r2 = r.trim_start();
                if let Some(r3) = r2.strip_prefix('[') {
                    let end = r3
                        .find(']')
                        .ok_or_else(|| Error::Parse("unterminated O[..]".into()))?;
                    let id: usize = r3[..end]
                        .trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("bad loop id: {e}")))?;
                    loops.push(Some(id));
                    rest = r3[end + 1..].trim_start();
                } else {
                    loops.push(None);
                    rest = r2;
                }
            } else {
                return Err(Error::Parse(format!("unexpected PD entry at '{rest}'")));
            }
            rest = rest.trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
            }
        }
        // Assign fresh ids to anonymous loops.
        let mut used: BTreeSet<usize> = crossings.iter().flatten().copied().collect();
        used.extend(loops.iter().flatten().copied());
        let mut next = used.iter().next_back().map_or(1, |m| m + 1);
        let free_loops: Vec<usize> = loops
            .into_iter()
            .map(|l| {
                l.unwrap_or_else(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();
        PlanarDiagram::from_parts(crossings, free_loops)
    }

    /// Validate a crossing list plus free loops and compute orientations,
    /// signs and component count.
    pub fn from_parts(crossings: Vec<[usize; 4]>, free_loops: Vec<usize>) -> Result<Self> {
        let mut occ: BTreeMap<usize, Vec<SlotRef>> = BTreeMap::new();
        for (ci, x) in crossings.iter().enumerate() {
            for (pos, &arc) in x.iter().enumerate() {
                occ.entry(arc)
                    .or_default()
                    .push(SlotRef { crossing: ci, pos: pos as u8 });
            }
        }
        for (arc, slots) in &occ {
            if slots.len() != 2 {
                return Err(Error::Parse(format!(
                    "arc {arc} occurs {} times, expected 2",
                    slots.len()
                )));
            }
        }
        let mut seen_loops = BTreeSet::new();
        for l in &free_loops {
            if occ.contains_key(l) || !seen_loops.insert(*l) {
                return Err(Error::Parse(format!("loop id {l} collides")));
            }
        }

        let (heads, tails) = infer_orientations(&crossings, &occ)?;

        let mut signs = Vec::with_capacity(crossings.len());
        for ci in 0..crossings.len() {
            let b_head = heads.values().any(|s| s.crossing == ci && s.pos == 1);
            let d_head = heads.values().any(|s| s.crossing == ci && s.pos == 3);
            let sign = match (b_head, d_head) {
                (true, false) => Sign::Negative,
                (false, true) => Sign::Positive,
                _ => {
                    return Err(Error::Parse(format!(
                        "inconsistent over-strand orientation at crossing {ci}"
                    )))
                }
            };
            signs.push(sign);
        }

        // Component count: under- and over-strands glue arcs.
        let ids: Vec<usize> = occ.keys().copied().collect();
        let index: BTreeMap<usize, usize> =
            ids.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut uf = Uf::new(ids.len());
        for x in &crossings {
            uf.union(index[&x[0]], index[&x[2]]);
            uf.union(index[&x[1]], index[&x[3]]);
        }
        let mut roots = BTreeSet::new();
        for i in 0..ids.len() {
            roots.insert(uf.find(i));
        }
        let components = roots.len() + free_loops.len();

        Ok(PlanarDiagram { crossings, free_loops, signs, heads, tails, components })
    }

    pub fn crossings(&self) -> &[[usize; 4]] {
        &self.crossings
    }

    pub fn num_crossings(&self) -> usize {
        self.crossings.len()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn n_plus(&self) -> usize {
        self.signs.iter().filter(|s| **s == Sign::Positive).count()
    }

    pub fn n_minus(&self) -> usize {
        self.signs.iter().filter(|s| **s == Sign::Negative).count()
    }

    pub fn writhe(&self) -> i64 {
        self.n_plus() as i64 - self.n_minus() as i64
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_knot(&self) -> bool {
        self.components == 1
    }

    pub fn free_loops(&self) -> &[usize] {
        &self.free_loops
    }

    pub fn arc_ids(&self) -> BTreeSet<usize> {
        self.crossings.iter().flatten().copied().collect()
    }

    /// True when `id` names a real arc (not a free loop).
    pub fn has_arc(&self, id: usize) -> bool {
        self.heads.contains_key(&id)
    }

    pub fn has_loop(&self, id: usize) -> bool {
        self.free_loops.contains(&id)
    }

    /// Smallest id not used by any arc or loop.
    pub fn fresh_id(&self) -> usize {
        let mut m = 0;
        if let Some(max) = self.arc_ids().iter().next_back() {
            m = m.max(*max);
        }
        if let Some(max) = self.free_loops.iter().max() {
            m = m.max(*max);
        }
        m + 1
    }

    pub fn head_slot(&self, arc: usize) -> Option<SlotRef> {
        self.heads.get(&arc).copied()
    }

    pub fn tail_slot(&self, arc: usize) -> Option<SlotRef> {
        self.tails.get(&arc).copied()
    }

    /// Circles of the smoothing at `v`. At each crossing the 0-smoothing
    /// joins slots (a,b) and (c,d); the 1-smoothing joins (a,d) and (b,c).
    pub fn resolve(&self, v: CubeVertex) -> Resolution {
        assert_eq!(v.len() as usize, self.crossings.len(), "vertex arity mismatch");
        let mut ids: Vec<usize> = self
            .arc_ids()
            .into_iter()
            .chain(self.free_loops.iter().copied())
            .collect();
        ids.sort_unstable();
        let index: BTreeMap<usize, usize> =
            ids.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut uf = Uf::new(ids.len());
        for (ci, x) in self.crossings.iter().enumerate() {
            let [a, b, c, d] = *x;
            if v.coordinate(ci) == 0 {
                uf.union(index[&a], index[&b]);
                uf.union(index[&c], index[&d]);
            } else {
                uf.union(index[&a], index[&d]);
                uf.union(index[&b], index[&c]);
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &arc) in ids.iter().enumerate() {
            classes.entry(uf.find(i)).or_default().push(arc);
        }
        let mut circles: Vec<Vec<usize>> = classes.into_values().collect();
        circles.sort_by_key(|c| c[0]);
        Resolution { vertex: v, circles }
    }

    /// Circle counts for every cube vertex, enforcing the generator budget
    /// Σ_v 2^{p(v)} ≤ budget.
    pub fn all_circle_counts(&self, budget: u64) -> Result<Vec<usize>> {
        let n = self.crossings.len();
        if n > 30 {
            return Err(Error::BudgetExceeded { needed: u64::MAX, budget });
        }
        use rayon::prelude::*;
        let counts: Vec<usize> = (0u32..1 << n)
            .into_par_iter()
            .map(|bits| self.resolve(CubeVertex::new(bits, n as u8)).circle_count())
            .collect();
        let mut total: u64 = 0;
        for &p in &counts {
            total = total.saturating_add(1u64 << p.min(62));
            if total > budget {
                return Err(Error::BudgetExceeded { needed: total, budget });
            }
        }
        Ok(counts)
    }

    /// The orientation-preserving smoothing: 0 at positive crossings, 1 at
    /// negative ones.
    pub fn seifert_vertex(&self) -> CubeVertex {
        let mut bits = 0u32;
        for (i, s) in self.signs.iter().enumerate() {
            if *s == Sign::Negative {
                bits |= 1 << i;
            }
        }
        CubeVertex::new(bits, self.crossings.len() as u8)
    }

    pub fn seifert_circle_count(&self) -> usize {
        self.resolve(self.seifert_vertex()).circle_count()
    }

    /// Switch every crossing; positive and negative counts exchange.
    pub fn mirror(&self) -> PlanarDiagram {
        let crossings: Vec<[usize; 4]> = self
            .crossings
            .iter()
            .zip(&self.signs)
            .map(|(x, s)| {
                let [a, b, c, d] = *x;
                match s {
                    // the over-strand ran d -> b; it becomes the under-strand
                    Sign::Positive => [d, a, b, c],
                    Sign::Negative => [b, c, d, a],
                }
            })
            .collect();
        PlanarDiagram::from_parts(crossings, self.free_loops.clone())
            .expect("mirror of a valid diagram is valid")
    }

    /// Oriented band surgery joining two strands. The caller asserts the
    /// band is planar and orientation-compatible; a non-orientable band is
    /// rejected.
    pub fn apply_saddle(&self, a: usize, b: usize, orientable: bool) -> Result<PlanarDiagram> {
        if !orientable {
            return Err(Error::InapplicableMove("non-orientable band requested".into()));
        }
        let kind = |id: usize| -> Result<bool> {
            if self.has_loop(id) {
                Ok(true)
            } else if self.has_arc(id) {
                Ok(false)
            } else {
                Err(Error::InapplicableMove(format!("no arc or loop {id}")))
            }
        };
        let (a_loop, b_loop) = (kind(a)?, kind(b)?);
        let mut crossings = self.crossings.clone();
        let mut loops = self.free_loops.clone();
        let fresh = self.fresh_id();
        match (a_loop, b_loop) {
            (true, true) if a == b => {
                // split one crossingless circle into two
                loops.retain(|&l| l != a);
                loops.push(fresh);
                loops.push(fresh + 1);
            }
            (true, true) => {
                // merge two crossingless circles
                loops.retain(|&l| l != a && l != b);
                loops.push(fresh);
            }
            (true, false) | (false, true) => {
                // the loop is absorbed into the other strand
                let l = if a_loop { a } else { b };
                loops.retain(|&x| x != l);
            }
            (false, false) if a == b => {
                // a band from an arc to itself pinches off a circle
                loops.push(fresh);
            }
            (false, false) => {
                // cross-join: new arcs tail(a)->head(b) and tail(b)->head(a)
                let (n1, n2) = (fresh, fresh + 1);
                let a_tail = self.tails[&a];
                let a_head = self.heads[&a];
                let b_tail = self.tails[&b];
                let b_head = self.heads[&b];
                crossings[a_tail.crossing][a_tail.pos as usize] = n1;
                crossings[b_head.crossing][b_head.pos as usize] = n1;
                crossings[b_tail.crossing][b_tail.pos as usize] = n2;
                crossings[a_head.crossing][a_head.pos as usize] = n2;
            }
        }
        PlanarDiagram::from_parts(crossings, loops)
    }

    /// Insert a kink (a curl with one new crossing of the given sign) on an
    /// arc or crossingless loop. The new crossing is appended last.
    pub fn insert_kink(&self, at: usize, sign: Sign) -> Result<(PlanarDiagram, KinkSite)> {
        let mut crossings = self.crossings.clone();
        let mut loops = self.free_loops.clone();
        let loop_arc = self.fresh_id();
        let crossing = crossings.len();
        let info;
        if self.has_loop(at) {
            // the kinked circle becomes a one-crossing component
            let y = loop_arc + 1;
            loops.retain(|&l| l != at);
            match sign {
                Sign::Positive => crossings.push([loop_arc, loop_arc, y, y]),
                Sign::Negative => crossings.push([loop_arc, y, y, loop_arc]),
            }
            info = KinkSite { crossing, loop_arc, main_in: y, main_out: y, sign };
        } else if self.has_arc(at) {
            let y = loop_arc + 1;
            let head = self.heads[&at];
            crossings[head.crossing][head.pos as usize] = y;
            match sign {
                Sign::Positive => crossings.push([loop_arc, loop_arc, y, at]),
                Sign::Negative => crossings.push([loop_arc, at, y, loop_arc]),
            }
            info = KinkSite { crossing, loop_arc, main_in: at, main_out: y, sign };
        } else {
            return Err(Error::InapplicableMove(format!("no arc or loop {at}")));
        }
        let d = PlanarDiagram::from_parts(crossings, loops)?;
        debug_assert_eq!(d.signs[crossing], sign);
        Ok((d, info))
    }

    /// Identify a kink at the given crossing: an arc occupying two
    /// cyclically adjacent slots.
    pub fn kink_at(&self, crossing: usize) -> Result<KinkSite> {
        let x = self
            .crossings
            .get(crossing)
            .ok_or_else(|| Error::InapplicableMove(format!("no crossing {crossing}")))?;
        for i in 0..4usize {
            let j = (i + 1) % 4;
            if x[i] == x[j] {
                let loop_arc = x[i];
                let others: Vec<usize> = (0..4).filter(|k| *k != i && *k != j).collect();
                let (p, q) = (x[others[0]], x[others[1]]);
                let (main_in, main_out) = if self
                    .heads
                    .get(&p)
                    .map_or(false, |s| s.crossing == crossing && s.pos == others[0] as u8)
                {
                    (p, q)
                } else {
                    (q, p)
                };
                return Ok(KinkSite {
                    crossing,
                    loop_arc,
                    main_in,
                    main_out,
                    sign: self.signs[crossing],
                });
            }
        }
        Err(Error::InapplicableMove(format!("crossing {crossing} is not a kink")))
    }

    /// Remove a kink crossing, merging the two main strand pieces (the
    /// incoming piece keeps its id). Returns the new diagram and the id of
    /// the surviving arc or loop.
    pub fn remove_kink(&self, crossing: usize) -> Result<(PlanarDiagram, usize)> {
        let site = self.kink_at(crossing)?;
        let mut crossings = self.crossings.clone();
        let mut loops = self.free_loops.clone();
        crossings.remove(crossing);
        let survivor = site.main_in;
        if site.main_in == site.main_out {
            // standalone kinked circle becomes a free loop
            loops.push(survivor);
        } else {
            let out_head = self.heads[&site.main_out];
            debug_assert!(out_head.crossing != crossing);
            let mut slot = out_head;
            if slot.crossing > crossing {
                slot.crossing -= 1;
            }
            crossings[slot.crossing][slot.pos as usize] = survivor;
        }
        Ok((PlanarDiagram::from_parts(crossings, loops)?, survivor))
    }
}

/// Location data for a kink: the crossing, its detachable loop arc and the
/// two main-strand pieces around it.
#[derive(Clone, Copy, Debug)]
pub struct KinkSite {
    pub crossing: usize,
    pub loop_arc: usize,
    pub main_in: usize,
    pub main_out: usize,
    pub sign: Sign,
}

impl KinkSite {
    /// Cube coordinate of the kink crossing at which the loop detaches
    /// into its own circle: 0 for positive kinks, 1 for negative ones.
    pub fn detached_bit(&self) -> u8 {
        match self.sign {
            Sign::Positive => 0,
            Sign::Negative => 1,
        }
    }
}

fn infer_orientations(
    crossings: &[[usize; 4]],
    occ: &BTreeMap<usize, Vec<SlotRef>>,
) -> Result<(BTreeMap<usize, SlotRef>, BTreeMap<usize, SlotRef>)> {
    // is_head[slot]: the arc in this slot points into the crossing here.
    let mut assigned: BTreeMap<(usize, u8), bool> = BTreeMap::new();
    let mut queue: Vec<(usize, u8, bool)> = Vec::new();
    for ci in 0..crossings.len() {
        queue.push((ci, 0, true)); // incoming under-strand
        queue.push((ci, 2, false)); // outgoing under-strand
    }
    loop {
        while let Some((ci, pos, head)) = queue.pop() {
            match assigned.get(&(ci, pos)) {
                Some(&h) if h == head => continue,
                Some(_) => {
                    return Err(Error::Parse(format!(
                        "inconsistent orientation at crossing {ci} slot {pos}"
                    )))
                }
                None => {}
            }
            assigned.insert((ci, pos), head);
            let arc = crossings[ci][pos as usize];
            // the arc's other occurrence gets the opposite role
            for s in &occ[&arc] {
                if (s.crossing, s.pos) != (ci, pos) {
                    queue.push((s.crossing, s.pos, !head));
                }
            }
            // within a crossing, exactly one of slots 1 and 3 is a head
            if pos == 1 || pos == 3 {
                let other = 4 - pos;
                queue.push((ci, other, !head));
            }
        }
        // components that never pass under are not pinned by propagation;
        // orient the smallest undetermined arc deterministically
        let undetermined = occ
            .iter()
            .find(|(_, slots)| !assigned.contains_key(&(slots[0].crossing, slots[0].pos)));
        match undetermined {
            Some((_, slots)) => queue.push((slots[0].crossing, slots[0].pos, true)),
            None => break,
        }
    }
    let mut heads = BTreeMap::new();
    let mut tails = BTreeMap::new();
    for (arc, slots) in occ {
        for s in slots {
            if assigned[&(s.crossing, s.pos)] {
                if heads.insert(*arc, *s).is_some() {
                    return Err(Error::Parse(format!("arc {arc} has two heads")));
                }
            } else if tails.insert(*arc, *s).is_some() {
                return Err(Error::Parse(format!("arc {arc} has two tails")));
            }
        }
    }
    Ok((heads, tails))
}

impl fmt::Display for PlanarDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PD[")?;
        let mut first = true;
        for x in &self.crossings {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "X[{},{},{},{}]", x[0], x[1], x[2], x[3])?;
        }
        for l in &self.free_loops {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "O[{l}]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for PlanarDiagram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PlanarDiagram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        PlanarDiagram::parse_pd(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const TREFOIL_R: &str = "PD[X[1,3,4,2], X[3,5,6,4], X[5,1,2,6]]";
    pub(crate) const TREFOIL_L: &str = "PD[X[1,4,2,5], X[3,6,4,1], X[5,2,6,3]]";
    pub(crate) const FIG8: &str = "PD[X[4,2,5,1], X[8,6,1,5], X[6,3,7,4], X[2,7,3,8]]";

    /// Independent circle tracer: walks strand pairings as permutation
    /// cycles rather than via union-find.
    fn trace_circles(d: &PlanarDiagram, v: CubeVertex) -> usize {
        let mut glue: BTreeMap<(usize, SlotRef), (usize, SlotRef)> = BTreeMap::new();
        let mut seen: BTreeMap<usize, Vec<SlotRef>> = BTreeMap::new();
        for (ci, x) in d.crossings().iter().enumerate() {
            for (pos, &arc) in x.iter().enumerate() {
                seen.entry(arc).or_default().push(SlotRef { crossing: ci, pos: pos as u8 });
            }
        }
        for (ci, x) in d.crossings().iter().enumerate() {
            let pairs: [(usize, usize); 2] =
                if v.coordinate(ci) == 0 { [(0, 1), (2, 3)] } else { [(0, 3), (1, 2)] };
            for (i, j) in pairs {
                let si = SlotRef { crossing: ci, pos: i as u8 };
                let sj = SlotRef { crossing: ci, pos: j as u8 };
                glue.insert((x[i], si), (x[j], sj));
                glue.insert((x[j], sj), (x[i], si));
            }
        }
        let mut visited: BTreeSet<(usize, SlotRef)> = BTreeSet::new();
        let mut circles = 0;
        for (&arc, slots) in &seen {
            for &s in slots {
                if visited.contains(&(arc, s)) {
                    continue;
                }
                circles += 1;
                let (mut a, mut slot) = (arc, s);
                loop {
                    visited.insert((a, slot));
                    let other = *seen[&a].iter().find(|t| **t != slot).unwrap();
                    visited.insert((a, other));
                    let (na, ns) = glue[&(a, other)];
                    if visited.contains(&(na, ns)) {
                        break;
                    }
                    a = na;
                    slot = ns;
                }
            }
        }
        circles + d.free_loops().len()
    }

    #[test]
    fn parse_and_signs_hopf_variant() {
        let d = PlanarDiagram::parse_pd("PD[X[1,4,2,3], X[3,2,4,1]]").unwrap();
        assert_eq!(d.num_crossings(), 2);
        assert_eq!(d.components(), 2);
        assert_eq!((d.n_plus(), d.n_minus()), (0, 2));
    }

    #[test]
    fn parse_unknot_and_errors() {
        let u = PlanarDiagram::parse_pd("PD[O]").unwrap();
        assert_eq!(u.num_crossings(), 0);
        assert_eq!(u.components(), 1);
        assert!(PlanarDiagram::parse_pd("PD[X[1,2,3,1]]").is_err()); // arcs 2,3 occur once
        assert!(PlanarDiagram::parse_pd("PD(...)").is_err());
    }

    #[test]
    fn kink_signs() {
        let pos = PlanarDiagram::parse_pd("PD[X[1,1,2,2]]").unwrap();
        assert_eq!((pos.n_plus(), pos.n_minus()), (1, 0));
        let neg = PlanarDiagram::parse_pd("PD[X[1,2,2,1]]").unwrap();
        assert_eq!((neg.n_plus(), neg.n_minus()), (0, 1));
        assert_eq!(pos.components(), 1);
        assert_eq!(neg.components(), 1);
    }

    #[test]
    fn trefoil_circle_counts() {
        let d = PlanarDiagram::parse_pd(TREFOIL_R).unwrap();
        assert_eq!((d.n_plus(), d.n_minus()), (3, 0));
        assert!(d.is_knot());
        assert_eq!(d.resolve(CubeVertex::new(0b000, 3)).circle_count(), 2);
        assert_eq!(d.resolve(CubeVertex::new(0b111, 3)).circle_count(), 3);
        // counts by weight: (2; 1,1,1; 2,2,2; 3)
        let counts = d.all_circle_counts(1 << 20).unwrap();
        let mut by_weight: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (bits, p) in counts.iter().enumerate() {
            by_weight.entry((bits as u32).count_ones()).or_default().push(*p);
        }
        assert_eq!(by_weight[&0], vec![2]);
        assert_eq!(by_weight[&1], vec![1, 1, 1]);
        assert_eq!(by_weight[&2], vec![2, 2, 2]);
        assert_eq!(by_weight[&3], vec![3]);
        let total: u64 = counts.iter().map(|p| 1u64 << p).sum();
        assert_eq!(total, 30);
    }

    #[test]
    fn resolve_matches_independent_tracer() {
        for pd in [TREFOIL_R, TREFOIL_L, FIG8, "PD[X[1,1,2,2]]", "PD[X[1,2,2,1]]"] {
            let d = PlanarDiagram::parse_pd(pd).unwrap();
            let n = d.num_crossings() as u8;
            for bits in 0..1u32 << n {
                let v = CubeVertex::new(bits, n);
                assert_eq!(
                    d.resolve(v).circle_count(),
                    trace_circles(&d, v),
                    "{pd} at {bits:b}"
                );
            }
        }
    }

    #[test]
    fn saddle_edges_change_circle_count_by_one() {
        for pd in [TREFOIL_R, FIG8] {
            let d = PlanarDiagram::parse_pd(pd).unwrap();
            let n = d.num_crossings();
            for bits in 0..1u32 << n {
                let v = CubeVertex::new(bits, n as u8);
                for i in 0..n {
                    if v.coordinate(i) == 1 {
                        let u = v.with_bit(i, 0);
                        let pv = d.resolve(v).circle_count() as i64;
                        let pu = d.resolve(u).circle_count() as i64;
                        assert_eq!((pv - pu).abs(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn empty_diagram() {
        let d = PlanarDiagram::parse_pd("PD[]").unwrap();
        assert_eq!(d.components(), 0);
        assert_eq!(d.resolve(CubeVertex::new(0, 0)).circle_count(), 0);
    }

    #[test]
    fn mirror_involution_and_counts() {
        let t = PlanarDiagram::parse_pd(TREFOIL_R).unwrap();
        let m = t.mirror();
        assert_eq!((m.n_plus(), m.n_minus()), (0, 3));
        assert_eq!(m.mirror(), t);
        let f8 = PlanarDiagram::parse_pd(FIG8).unwrap();
        assert_eq!((f8.n_plus(), f8.n_minus()), (2, 2));
        assert_eq!((f8.mirror().n_plus(), f8.mirror().n_minus()), (2, 2));
        // mirror + complement preserves circle counts
        let n = t.num_crossings() as u8;
        for bits in 0..1u32 << n {
            let v = CubeVertex::new(bits, n);
            assert_eq!(
                m.resolve(v).circle_count(),
                t.resolve(v.complement()).circle_count()
            );
        }
    }

    #[test]
    fn saddle_split_and_merge() {
        let u = PlanarDiagram::parse_pd("PD[O[1]]").unwrap();
        let split = u.apply_saddle(1, 1, true).unwrap();
        assert_eq!(split.components(), 2);
        assert_eq!(split.num_crossings(), 0);
        let loops = split.free_loops().to_vec();
        let merged = split.apply_saddle(loops[0], loops[1], true).unwrap();
        assert_eq!(merged.components(), 1);
        assert!(u.apply_saddle(1, 1, false).is_err());
    }

    #[test]
    fn twisted_band_step_has_one_crossing() {
        // second band on a 2-circle unlink, with the half twist carried by
        // a kink before a plain band
        let unlink = PlanarDiagram::parse_pd("PD[O[1], O[2]]").unwrap();
        let (kinked, site) = unlink.insert_kink(2, Sign::Positive).unwrap();
        assert_eq!(kinked.num_crossings(), 1);
        assert_eq!(kinked.n_plus(), 1);
        let banded = kinked.apply_saddle(1, site.loop_arc, true).unwrap();
        assert_eq!(banded.num_crossings(), 1);
        assert_eq!(banded.components(), 1);
    }

    #[test]
    fn kink_roundtrip_on_arc() {
        let t = PlanarDiagram::parse_pd(TREFOIL_R).unwrap();
        for sign in [Sign::Positive, Sign::Negative] {
            let (k, site) = t.insert_kink(1, sign).unwrap();
            assert_eq!(k.num_crossings(), 4);
            assert_eq!(k.signs()[site.crossing], sign);
            assert!(k.is_knot());
            let (back, _) = k.remove_kink(site.crossing).unwrap();
            assert_eq!(back.num_crossings(), 3);
            assert!(back.is_knot());
            assert_eq!(back.n_plus(), 3);
        }
    }

    #[test]
    fn budget_enforced() {
        let d = PlanarDiagram::parse_pd(TREFOIL_R).unwrap();
        assert!(matches!(d.all_circle_counts(16), Err(Error::BudgetExceeded { .. })));
    }
}
