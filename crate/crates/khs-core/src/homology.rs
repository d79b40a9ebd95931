//! Homology of a graded complex over the DVR: free rank, homogeneous
//! degrees of free generators, λ-torsion exponents, and coordinates of
//! cycles in the computed decomposition. A unit-pivot Gaussian
//! pre-reduction shrinks the complex while tracking the homotopy
//! equivalence, then Smith reduction per homological degree reads off the
//! module structure.

use crate::cube::CubeComplex;
use crate::scalar::{DvrScalar, Valuation};
use crate::sparse::{
    chain_add_scaled, chain_insert, smith_reduce, Chain, SmithForm, SparseMatrix,
};
use crate::{Error, Result};
use serde::ser::SerializeSeq;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Grading data carried by one generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenGrading {
    pub h: i64,
    pub q: i64,
    pub gr: i64,
}

/// A chain complex presented by graded generators and a square sparse
/// differential of h-degree +1.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    pub gens: Vec<GenGrading>,
    pub d: SparseMatrix,
    /// When true, scalars in chains are q-graded monomials and reports
    /// carry exact q and mod-4 degrees.
    pub graded: bool,
}

impl ChainComplex {
    pub fn generators_at(&self, h: i64) -> Vec<usize> {
        self.gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.h == h)
            .map(|(i, _)| i)
            .collect()
    }

    /// The differential restricted to the block h → h+1.
    pub fn block(&self, src: &[usize], dst: &[usize]) -> SparseMatrix {
        let dst_pos: BTreeMap<usize, usize> =
            dst.iter().enumerate().map(|(p, i)| (*i, p)).collect();
        let mut m = SparseMatrix::zero(dst.len(), src.len());
        for (jl, j) in src.iter().enumerate() {
            for (i, v) in self.d.column(*j) {
                if let Some(p) = dst_pos.get(i) {
                    m.set(*p, jl, v.clone());
                }
            }
        }
        m
    }
}

impl CubeComplex {
    pub fn as_chain_complex(&self) -> ChainComplex {
        ChainComplex {
            gens: self
                .generators()
                .iter()
                .map(|g| GenGrading { h: g.h, q: g.q, gr: g.gr })
                .collect(),
            d: self.differential().clone(),
            graded: self.is_graded(),
        }
    }
}

/// One Gaussian cancellation: a unit pivot at (dst, src) with the
/// surrounding row and column recorded for transform replay.
#[derive(Clone, Debug)]
struct CancelStep {
    src: usize,
    dst: usize,
    pivot: DvrScalar,
    /// other targets of d(src): (w, α_w)
    row_of_src: Vec<(usize, DvrScalar)>,
    /// other sources hitting dst: (z, β_z)
    col_of_dst: Vec<(usize, DvrScalar)>,
}

/// A homotopy-equivalent shrinking of a complex, with replay data for the
/// inclusion of the reduced complex and the projection onto it.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// surviving original generator indices, ascending
    pub kept: Vec<usize>,
    pos: BTreeMap<usize, usize>,
    pub complex: ChainComplex,
    steps: Vec<CancelStep>,
}

/// Repeatedly cancel unit differential entries. Homology is preserved;
/// the result typically has far fewer generators.
pub fn pre_reduce(c: &ChainComplex) -> Reduction {
    let n = c.gens.len();
    let mut cols: Vec<Chain> = (0..n).map(|j| c.d.column(j).clone()).collect();
    let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (j, col) in cols.iter().enumerate() {
        for i in col.keys() {
            rows[*i].insert(j);
        }
    }
    let mut alive = vec![true; n];
    let mut steps = Vec::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col {
            if v.is_unit() {
                queue.push_back((*i, j));
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        if !alive[i] || !alive[j] {
            continue;
        }
        let Some(p) = cols[j].get(&i).cloned() else { continue };
        if !p.is_unit() {
            continue;
        }
        let p_inv = p.invert().expect("unit pivot");
        let row_of_src: Vec<(usize, DvrScalar)> = cols[j]
            .iter()
            .filter(|(w, _)| **w != i)
            .map(|(w, v)| (*w, v.clone()))
            .collect();
        let col_of_dst: Vec<(usize, DvrScalar)> = rows[i]
            .iter()
            .filter(|z| **z != j)
            .map(|z| (*z, cols[*z][&i].clone()))
            .collect();
        for (z, beta) in &col_of_dst {
            let factor = beta * &p_inv;
            for (w, alpha) in &row_of_src {
                let delta = -&(&factor * alpha);
                let before = cols[*z].contains_key(w);
                chain_insert(&mut cols[*z], *w, delta);
                match (before, cols[*z].contains_key(w)) {
                    (false, true) => {
                        rows[*w].insert(*z);
                    }
                    (true, false) => {
                        rows[*w].remove(z);
                    }
                    _ => {}
                }
                if cols[*z].get(w).map_or(false, DvrScalar::is_unit) {
                    queue.push_back((*w, *z));
                }
            }
        }
        for (z, _) in &col_of_dst {
            cols[*z].remove(&i);
        }
        for (w, _) in &row_of_src {
            rows[*w].remove(&j);
        }
        // components of lower differentials hitting the cancelled source
        // vanish in the reduced basis (forced by d² = 0)
        let lower: Vec<usize> = rows[j].iter().copied().collect();
        for z in lower {
            cols[z].remove(&j);
        }
        // the cancelled target's own outgoing column becomes d²(src)/p = 0
        let upper: Vec<usize> = cols[i].keys().copied().collect();
        for w in upper {
            rows[w].remove(&i);
        }
        rows[i].clear();
        rows[j].clear();
        cols[j].clear();
        cols[i].clear();
        alive[i] = false;
        alive[j] = false;
        steps.push(CancelStep { src: j, dst: i, pivot: p, row_of_src, col_of_dst });
    }

    let kept: Vec<usize> = (0..n).filter(|i| alive[*i]).collect();
    let pos: BTreeMap<usize, usize> =
        kept.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let mut d = SparseMatrix::zero(kept.len(), kept.len());
    for (local_j, &j) in kept.iter().enumerate() {
        for (i, v) in &cols[j] {
            d.set(pos[i], local_j, v.clone());
        }
    }
    let gens = kept.iter().map(|&i| c.gens[i]).collect();
    Reduction { kept, pos, complex: ChainComplex { gens, d, graded: c.graded }, steps }
}

impl Reduction {
    /// Project an original-basis chain onto the reduced basis.
    pub fn project(&self, chain: &Chain) -> Chain {
        let mut c = chain.clone();
        for step in &self.steps {
            c.remove(&step.src);
            if let Some(gamma) = c.remove(&step.dst) {
                let factor = -&gamma.divide_exact(&step.pivot).expect("unit pivot divides");
                for (w, alpha) in &step.row_of_src {
                    chain_insert(&mut c, *w, &factor * alpha);
                }
            }
        }
        c.into_iter().map(|(i, v)| (self.pos[&i], v)).collect()
    }

    /// Include a reduced-basis chain back into the original complex
    /// (a chain map, so cycles map to cycles).
    pub fn include(&self, chain: &Chain) -> Chain {
        let mut c: Chain =
            chain.iter().map(|(l, v)| (self.kept[*l], v.clone())).collect();
        for step in self.steps.iter().rev() {
            let mut gamma = DvrScalar::zero();
            for (z, beta) in &step.col_of_dst {
                if let Some(cz) = c.get(z) {
                    gamma = &gamma + &(cz * beta);
                }
            }
            if !gamma.is_zero() {
                let corr = -&gamma.divide_exact(&step.pivot).expect("unit pivot divides");
                chain_insert(&mut c, step.src, corr);
            }
        }
        c
    }
}

/// One free summand of the homology, with a representative cycle in the
/// original generator basis.
#[derive(Clone, Debug)]
pub struct FreeGenerator {
    pub h: i64,
    pub q: Option<i64>,
    pub gr_mod4: Option<i64>,
    pub chain: Chain,
}

/// One torsion summand Ring/λ^exponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorsionSummand {
    pub h: i64,
    pub exponent: u32,
    pub q: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HSummary {
    pub free_rank: usize,
    pub torsion_exponents: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct HomologyReport {
    pub free_rank: usize,
    pub free_generators: Vec<FreeGenerator>,
    pub torsion: Vec<TorsionSummand>,
    pub per_h: BTreeMap<i64, HSummary>,
    pub convention_note: &'static str,
}

impl HomologyReport {
    /// Largest λ-exponent annihilating the torsion (0 when torsion-free).
    pub fn torsion_annihilator_exponent(&self) -> u32 {
        self.torsion.iter().map(|t| t.exponent).max().unwrap_or(0)
    }

    /// Graded-module summary for equality comparisons across computation
    /// routes.
    pub fn summary(&self) -> BTreeMap<i64, HSummary> {
        self.per_h.clone()
    }
}

fn serialize_chain<S: serde::Serializer>(
    c: &Chain,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(c.len()))?;
    for (i, v) in c {
        seq.serialize_element(&(i, v.to_string()))?;
    }
    seq.end()
}

impl Serialize for FreeGenerator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Mirror<'a> {
            h: i64,
            q: Option<i64>,
            gr_mod4: Option<i64>,
            #[serde(serialize_with = "serialize_chain")]
            chain: &'a Chain,
        }
        Mirror { h: self.h, q: self.q, gr_mod4: self.gr_mod4, chain: &self.chain }
            .serialize(s)
    }
}

impl Serialize for HomologyReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Mirror<'a> {
            free_rank: usize,
            free_generators: &'a [FreeGenerator],
            torsion: &'a [TorsionSummand],
            per_h: &'a BTreeMap<i64, HSummary>,
            convention_note: &'a str,
        }
        Mirror {
            free_rank: self.free_rank,
            free_generators: &self.free_generators,
            torsion: &self.torsion,
            per_h: &self.per_h,
            convention_note: self.convention_note,
        }
        .serialize(s)
    }
}

/// Homogeneous (q, gr mod 4) of a graded chain; errors when a term is not
/// a monomial or degrees disagree across terms.
pub fn chain_degrees(c: &ChainComplex, chain: &Chain) -> Result<(i64, i64)> {
    let mut q: Option<i64> = None;
    let mut gr: Option<i64> = None;
    for (i, v) in chain {
        let k = v.monomial_degree().ok_or_else(|| {
            Error::InvariantViolation(format!("non-monomial coefficient {v} in chain"))
        })? as i64;
        if k % 2 != 0 {
            return Err(Error::InvariantViolation("odd λ-power in graded chain".into()));
        }
        let tq = c.gens[*i].q - 2 * k;
        let tgr = c.gens[*i].gr.rem_euclid(4);
        match q {
            None => {
                q = Some(tq);
                gr = Some(tgr);
            }
            Some(prev) if prev == tq && gr == Some(tgr) => {}
            _ => {
                return Err(Error::InvariantViolation("chain is not q-homogeneous".into()))
            }
        }
    }
    Ok((q.unwrap_or(0), gr.unwrap_or(0)))
}

struct HBlock {
    /// reduced-local generator indices at this h, ascending
    local: Vec<usize>,
    /// Smith form of the outgoing differential block d_h
    out_snf: SmithForm,
    /// Smith form of the incoming image expressed in kernel coordinates
    img_snf: SmithForm,
    ker_dim: usize,
}

/// Full homology computation retaining enough state to express arbitrary
/// cycles in homology coordinates.
pub struct HomologyComputation {
    pub reduction: Reduction,
    original_d: SparseMatrix,
    blocks: BTreeMap<i64, HBlock>,
    report: HomologyReport,
    /// per h: indices into report.free_generators for the block's free
    /// coordinates, in order
    free_slots: BTreeMap<i64, Vec<usize>>,
}

/// Options for the homology pipeline.
#[derive(Clone, Copy, Debug)]
pub struct HomologyOptions {
    pub pre_reduce: bool,
}

impl Default for HomologyOptions {
    fn default() -> Self {
        HomologyOptions { pre_reduce: true }
    }
}

pub fn homology(c: &CubeComplex) -> Result<HomologyComputation> {
    homology_of(&c.as_chain_complex(), HomologyOptions::default())
}

pub fn homology_of(c: &ChainComplex, opts: HomologyOptions) -> Result<HomologyComputation> {
    let reduction = if opts.pre_reduce { pre_reduce(c) } else { trivial_reduction(c) };
    let r = &reduction.complex;

    let mut by_h: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, g) in r.gens.iter().enumerate() {
        by_h.entry(g.h).or_default().push(i);
    }
    let levels: Vec<i64> = by_h.keys().copied().collect();
    let empty: Vec<usize> = Vec::new();

    let mut blocks = BTreeMap::new();
    let mut report = HomologyReport {
        free_rank: 0,
        free_generators: Vec::new(),
        torsion: Vec::new(),
        per_h: BTreeMap::new(),
        convention_note: crate::CONVENTION_NOTE,
    };
    let mut free_slots: BTreeMap<i64, Vec<usize>> = BTreeMap::new();

    for &h in &levels {
        let here = &by_h[&h];
        let above = by_h.get(&(h + 1)).unwrap_or(&empty);
        let below = by_h.get(&(h - 1)).unwrap_or(&empty);
        let b = r.block(here, above);
        let a = r.block(below, here);
        let out_snf = smith_reduce(&b);
        let ker_dim = here.len() - out_snf.rank;

        // incoming image in kernel coordinates
        let mut m = SparseMatrix::zero(ker_dim, below.len());
        for j in 0..below.len() {
            let w = out_snf.v_coords(a.column(j));
            for (i, v) in w {
                if i < out_snf.rank {
                    return Err(Error::InvariantViolation(
                        "image of d is not contained in the kernel (d² ≠ 0?)".into(),
                    ));
                }
                m.set(i - out_snf.rank, j, v);
            }
        }
        let img_snf = smith_reduce(&m);

        // kernel basis transformed so the image becomes diagonal:
        // K' = K · U⁻¹ with K = kernel columns of V
        let new_kernel_chain = |jnew: usize| -> Chain {
            let mut chain = Chain::new();
            for t in 0..ker_dim {
                let coeff = img_snf.u_inv.at(t, jnew);
                if coeff.is_zero() {
                    continue;
                }
                let col = out_snf.v.column_chain(out_snf.rank + t);
                chain_add_scaled(&mut chain, &col, coeff);
            }
            chain.into_iter().map(|(l, v)| (here[l], v)).collect()
        };

        let mut summary = HSummary::default();
        for (i, dentry) in img_snf.diag.iter().enumerate() {
            let k = dentry.valuation().finite().expect("diag nonzero");
            if k > 0 {
                let chain = reduction.include(&new_kernel_chain(i));
                let q = if c.graded { Some(chain_degrees(c, &chain)?.0) } else { None };
                summary.torsion_exponents.push(k);
                report.torsion.push(TorsionSummand { h, exponent: k, q });
            }
        }
        summary.torsion_exponents.sort_unstable();
        let mut slots = Vec::new();
        for i in img_snf.rank..ker_dim {
            let chain = reduction.include(&new_kernel_chain(i));
            if !c.d.apply(&chain).is_empty() {
                return Err(Error::InvariantViolation(
                    "reported free generator is not a cycle".into(),
                ));
            }
            let (q, gr) = if c.graded {
                let (q, gr) = chain_degrees(c, &chain)?;
                (Some(q), Some(gr))
            } else {
                (None, None)
            };
            slots.push(report.free_generators.len());
            report.free_generators.push(FreeGenerator { h, q, gr_mod4: gr, chain });
            summary.free_rank += 1;
        }
        report.free_rank += summary.free_rank;
        if summary.free_rank > 0 || !summary.torsion_exponents.is_empty() {
            report.per_h.insert(h, summary);
        }
        free_slots.insert(h, slots);
        blocks.insert(h, HBlock { local: here.clone(), out_snf, img_snf, ker_dim });
    }

    Ok(HomologyComputation {
        reduction,
        original_d: c.d.clone(),
        blocks,
        report,
        free_slots,
    })
}

fn trivial_reduction(c: &ChainComplex) -> Reduction {
    let kept: Vec<usize> = (0..c.gens.len()).collect();
    let pos = kept.iter().map(|&i| (i, i)).collect();
    Reduction { kept, pos, complex: c.clone(), steps: Vec::new() }
}

/// Coordinates of a cycle's homology class in the computed decomposition.
#[derive(Clone, Debug)]
pub struct ClassCoordinates {
    pub h: i64,
    /// (exponent k, coefficient mod λ^k) per torsion summand at this h
    pub torsion: Vec<(u32, DvrScalar)>,
    /// coefficient on each free generator at this h
    pub free: Vec<DvrScalar>,
    /// indices into `report().free_generators`, aligned with `free`
    pub free_generator_indices: Vec<usize>,
}

impl HomologyComputation {
    pub fn report(&self) -> &HomologyReport {
        &self.report
    }

    /// Express a cycle (original basis, h-homogeneous) in homology
    /// coordinates. Errors when the chain is not a cycle at this degree.
    pub fn class_coordinates(&self, h: i64, cycle: &Chain) -> Result<ClassCoordinates> {
        let block = self
            .blocks
            .get(&h)
            .ok_or_else(|| Error::InvariantViolation(format!("no generators at h={h}")))?;
        let reduced = self.reduction.project(cycle);
        let local_pos: BTreeMap<usize, usize> =
            block.local.iter().enumerate().map(|(p, i)| (*i, p)).collect();
        let mut local = Chain::new();
        for (i, v) in reduced {
            let p = local_pos.get(&i).ok_or_else(|| {
                Error::InvariantViolation(format!("chain has a component outside h={h}"))
            })?;
            local.insert(*p, v);
        }
        let w = block.out_snf.v_coords(&local);
        let mut ker = Chain::new();
        for (i, v) in w {
            if i < block.out_snf.rank {
                return Err(Error::InvariantViolation(
                    "chain is not a cycle: nonzero coordinate off the kernel".into(),
                ));
            }
            ker.insert(i - block.out_snf.rank, v);
        }
        let u = block.img_snf.u.apply(&ker);
        let mut torsion = Vec::new();
        for (i, dentry) in block.img_snf.diag.iter().enumerate() {
            let k = dentry.valuation().finite().expect("diag nonzero");
            if k > 0 {
                torsion.push((k, u.get(&i).cloned().unwrap_or_else(DvrScalar::zero)));
            }
        }
        let mut free = Vec::new();
        for i in block.img_snf.rank..block.ker_dim {
            free.push(u.get(&i).cloned().unwrap_or_else(DvrScalar::zero));
        }
        Ok(ClassCoordinates {
            h,
            torsion,
            free,
            free_generator_indices: self.free_slots[&h].clone(),
        })
    }

    /// Smallest l ≥ 0 with λ^l·[cycle] = 0 in homology, when the class is
    /// λ-power torsion; None when it has a nonzero free coordinate.
    pub fn torsion_order(&self, h: i64, cycle: &Chain) -> Result<Option<u32>> {
        let coords = self.class_coordinates(h, cycle)?;
        if coords.free.iter().any(|c| !c.is_zero()) {
            return Ok(None);
        }
        let mut l = 0u32;
        for (k, coeff) in &coords.torsion {
            let deficit = match coeff.valuation() {
                Valuation::Infinite => 0,
                Valuation::Finite(v) => k.saturating_sub(v),
            };
            l = l.max(deficit);
        }
        Ok(Some(l))
    }

    pub fn original_differential(&self) -> &SparseMatrix {
        &self.original_d
    }
}

/// Solve d·x = target in the given complex, where target is h-homogeneous
/// of degree `target_h`. Errors when the target is not a boundary.
pub fn solve_boundary(c: &ChainComplex, target_h: i64, target: &Chain) -> Result<Chain> {
    let below = c.generators_at(target_h - 1);
    let above = c.generators_at(target_h);
    let above_pos: BTreeMap<usize, usize> =
        above.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let m = c.block(&below, &above);
    let snf = smith_reduce(&m);
    let mut local_target = Chain::new();
    for (i, v) in target {
        let p = above_pos.get(i).ok_or_else(|| {
            Error::InvariantViolation("target not homogeneous of the stated degree".into())
        })?;
        local_target.insert(*p, v.clone());
    }
    let x = snf
        .solve(&local_target)
        .ok_or_else(|| Error::InvariantViolation("target is not a boundary".into()))?;
    Ok(x.into_iter().map(|(l, v)| (below[l], v)).collect())
}
