//! Sparse matrices and chains over the coefficient ring, plus Smith
//! reduction (diagonalization by invertible row/column transforms) over
//! the DVR. Pivots of minimal valuation keep every division exact and
//! produce a divisibility-ordered diagonal.

use crate::scalar::DvrScalar;
use std::collections::BTreeMap;

/// A sparse vector of ring elements, indexed by generator.
pub type Chain = BTreeMap<usize, DvrScalar>;

pub fn chain_insert(c: &mut Chain, idx: usize, val: DvrScalar) {
    if val.is_zero() {
        return;
    }
    match c.entry(idx) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(val);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let sum = &*e.get() + &val;
            if sum.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = sum;
            }
        }
    }
}

/// target += coeff · source
pub fn chain_add_scaled(target: &mut Chain, source: &Chain, coeff: &DvrScalar) {
    if coeff.is_zero() {
        return;
    }
    for (i, v) in source {
        chain_insert(target, *i, coeff * v);
    }
}

pub fn chain_scale(c: &Chain, coeff: &DvrScalar) -> Chain {
    let mut out = Chain::new();
    chain_add_scaled(&mut out, c, coeff);
    out
}

pub fn chain_from(entries: impl IntoIterator<Item = (usize, DvrScalar)>) -> Chain {
    let mut c = Chain::new();
    for (i, v) in entries {
        chain_insert(&mut c, i, v);
    }
    c
}

/// Column-major sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: Vec<Chain>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols: vec![Chain::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::zero(n, n);
        for i in 0..n {
            m.cols[i].insert(i, DvrScalar::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &Chain {
        &self.cols[j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: DvrScalar) {
        assert!(i < self.rows && j < self.cols.len());
        if v.is_zero() {
            self.cols[j].remove(&i);
        } else {
            self.cols[j].insert(i, v);
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: DvrScalar) {
        assert!(i < self.rows && j < self.cols.len());
        chain_insert(&mut self.cols[j], i, v);
    }

    pub fn get(&self, i: usize, j: usize) -> DvrScalar {
        self.cols[j].get(&i).cloned().unwrap_or_else(DvrScalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &DvrScalar)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, v)| (*i, j, v)))
    }

    /// Matrix · vector.
    pub fn apply(&self, x: &Chain) -> Chain {
        let mut out = Chain::new();
        for (j, c) in x {
            chain_add_scaled(&mut out, &self.cols[*j], c);
        }
        out
    }

    /// self ∘ other (self applied after other).
    pub fn compose(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols.len(), other.rows);
        let cols = other.cols.iter().map(|c| self.apply(c)).collect();
        SparseMatrix { rows: self.rows, cols }
    }

    pub fn scaled(&self, c: &DvrScalar) -> SparseMatrix {
        let cols = self.cols.iter().map(|col| chain_scale(col, c)).collect();
        SparseMatrix { rows: self.rows, cols }
    }

    pub fn sum(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols.len(), other.cols.len());
        let mut out = self.clone();
        for (j, col) in other.cols.iter().enumerate() {
            chain_add_scaled(&mut out.cols[j], col, &DvrScalar::one());
        }
        out
    }

    pub fn difference(&self, other: &SparseMatrix) -> SparseMatrix {
        self.sum(&other.scaled(&DvrScalar::from_int(-1)))
    }
}

/// Dense matrix used internally by the Smith reduction; fine for the small
/// blocks that remain after Gaussian pre-reduction.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    data: Vec<DvrScalar>,
}

impl Dense {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![DvrScalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = DvrScalar::one();
        }
        m
    }

    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let mut d = Dense::zero(m.rows(), m.ncols());
        for (i, j, v) in m.entries() {
            *d.at_mut(i, j) = v.clone();
        }
        d
    }

    pub fn at(&self, i: usize, j: usize) -> &DvrScalar {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut DvrScalar {
        &mut self.data[i * self.cols + j]
    }

    pub fn column_chain(&self, j: usize) -> Chain {
        let mut c = Chain::new();
        for i in 0..self.rows {
            let v = self.at(i, j);
            if !v.is_zero() {
                c.insert(i, v.clone());
            }
        }
        c
    }

    /// Dense · sparse chain.
    pub fn apply(&self, x: &Chain) -> Chain {
        let mut out = Chain::new();
        for (j, c) in x {
            for i in 0..self.rows {
                let v = self.at(i, *j);
                if !v.is_zero() {
                    chain_insert(&mut out, i, v * c);
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn scale_row(&mut self, i: usize, c: &DvrScalar) {
        for j in 0..self.cols {
            let v = self.at(i, j);
            if !v.is_zero() {
                *self.at_mut(i, j) = v * c;
            }
        }
    }

    fn scale_col(&mut self, j: usize, c: &DvrScalar) {
        for i in 0..self.rows {
            let v = self.at(i, j);
            if !v.is_zero() {
                *self.at_mut(i, j) = v * c;
            }
        }
    }

    /// row_i += c · row_j
    fn add_row(&mut self, i: usize, j: usize, c: &DvrScalar) {
        for k in 0..self.cols {
            let v = self.at(j, k);
            if !v.is_zero() {
                let sum = self.at(i, k) + &(v * c);
                *self.at_mut(i, k) = sum;
            }
        }
    }

    /// col_i += c · col_j
    fn add_col(&mut self, i: usize, j: usize, c: &DvrScalar) {
        for k in 0..self.rows {
            let v = self.at(k, j);
            if !v.is_zero() {
                let sum = self.at(k, i) + &(v * c);
                *self.at_mut(k, i) = sum;
            }
        }
    }
}

/// Result of Smith reduction: U·M·V = diag(λ^{k₁} | λ^{k₂} | ...).
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub rows: usize,
    pub cols: usize,
    /// Canonical diagonal entries λ^{kᵢ}, one per pivot.
    pub diag: Vec<DvrScalar>,
    pub rank: usize,
    pub u: Dense,
    pub u_inv: Dense,
    pub v: Dense,
    pub v_inv: Dense,
}

/// Diagonalize over the DVR. Pivot choice: minimal valuation, tie-broken
/// by a Markowitz fill estimate, then by position.
pub fn smith_reduce(m: &SparseMatrix) -> SmithForm {
    let mut a = Dense::from_sparse(m);
    let (rows, cols) = (a.rows, a.cols);
    let mut u = Dense::identity(rows);
    let mut u_inv = Dense::identity(rows);
    let mut v = Dense::identity(cols);
    let mut v_inv = Dense::identity(cols);
    let mut diag = Vec::new();

    let steps = rows.min(cols);
    for k in 0..steps {
        // pivot search over the remaining block
        let mut best: Option<(u32, usize, usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                let e = a.at(i, j);
                if e.is_zero() {
                    continue;
                }
                let val = e.valuation().finite().expect("nonzero");
                let row_nnz = (k..cols).filter(|&c| !a.at(i, c).is_zero()).count();
                let col_nnz = (k..rows).filter(|&r| !a.at(r, j).is_zero()).count();
                let fill = (row_nnz - 1) * (col_nnz - 1);
                let cand = (val, fill, i, j);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let Some((_, _, pi, pj)) = best else { break };
        a.swap_rows(k, pi);
        u.swap_rows(k, pi);
        u_inv.swap_cols(k, pi);
        a.swap_cols(k, pj);
        v.swap_cols(k, pj);
        v_inv.swap_rows(k, pj);

        // normalize the pivot to a pure power of λ
        let unit = a.at(k, k).unit_part().expect("pivot nonzero");
        if !unit.is_one() {
            let inv = unit.invert().expect("unit part invertible");
            a.scale_row(k, &inv);
            u.scale_row(k, &inv);
            u_inv.scale_col(k, &unit);
        }
        let pivot = a.at(k, k).clone();
        for i in k + 1..rows {
            let e = a.at(i, k);
            if e.is_zero() {
                continue;
            }
            let c = -&e.divide_exact(&pivot).expect("minimal-valuation pivot divides");
            a.add_row(i, k, &c);
            u.add_row(i, k, &c);
            // (E^{-1}) has entry -c at (i,k): col_k -= c · col_i on U^{-1}
            let neg = -&c;
            u_inv.add_col(k, i, &neg);
        }
        for j in k + 1..cols {
            let e = a.at(k, j);
            if e.is_zero() {
                continue;
            }
            let c = -&e.divide_exact(&pivot).expect("minimal-valuation pivot divides");
            a.add_col(j, k, &c);
            v.add_col(j, k, &c);
            let neg = -&c;
            v_inv.add_row(k, j, &neg);
        }
        diag.push(pivot);
    }
    let rank = diag.len();
    SmithForm { rows, cols, diag, rank, u, u_inv, v, v_inv }
}

impl SmithForm {
    /// Columns of V beyond the rank: a basis of ker(M).
    pub fn kernel_basis(&self) -> Vec<Chain> {
        (self.rank..self.cols).map(|j| self.v.column_chain(j)).collect()
    }

    /// Coordinates of a column vector in the V-basis: V^{-1}·z.
    pub fn v_coords(&self, z: &Chain) -> Chain {
        self.v_inv.apply(z)
    }

    /// Solve M·x = b exactly over the ring; None when no solution exists.
    pub fn solve(&self, b: &Chain) -> Option<Chain> {
        let w = self.u.apply(b);
        let mut y = Chain::new();
        for (i, c) in &w {
            if *i < self.rank {
                let q = c.divide_exact(&self.diag[*i]).ok()?;
                chain_insert(&mut y, *i, q);
            } else {
                return None; // component outside the image
            }
        }
        Some(self.v.apply(&y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> DvrScalar {
        DvrScalar::parse(text).unwrap()
    }

    fn from_rows(rows: &[&[&str]]) -> SparseMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = SparseMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, t) in row.iter().enumerate() {
                m.set(i, j, s(t));
            }
        }
        m
    }

    fn check_transforms(m: &SparseMatrix, f: &SmithForm) {
        // U·M·V is the stated diagonal
        let md = Dense::from_sparse(m);
        let mut umv = Dense::zero(f.rows, f.cols);
        for j in 0..f.cols {
            let col = f.u.apply(&md.apply(&f.v.column_chain(j)));
            for (i, val) in col {
                *umv.at_mut(i, j) = val;
            }
        }
        for i in 0..f.rows {
            for j in 0..f.cols {
                let expected = if i == j && i < f.rank {
                    f.diag[i].clone()
                } else {
                    DvrScalar::zero()
                };
                assert_eq!(*umv.at(i, j), expected, "at ({i},{j})");
            }
        }
        // U·U^{-1} = 1 and V·V^{-1} = 1
        for (p, pinv, n) in [(&f.u, &f.u_inv, f.rows), (&f.v, &f.v_inv, f.cols)] {
            for j in 0..n {
                let col = p.apply(&pinv.column_chain(j));
                for i in 0..n {
                    let expected =
                        if i == j { DvrScalar::one() } else { DvrScalar::zero() };
                    assert_eq!(
                        col.get(&i).cloned().unwrap_or_else(DvrScalar::zero),
                        expected
                    );
                }
            }
        }
    }

    #[test]
    fn single_lambda() {
        let m = from_rows(&[&["l"]]);
        let f = smith_reduce(&m);
        assert_eq!(f.diag, vec![s("l")]);
        check_transforms(&m, &f);
    }

    #[test]
    fn dependent_rows() {
        // second row is λ × first after column operations
        let m = from_rows(&[&["1", "l"], &["l", "l^2"]]);
        let f = smith_reduce(&m);
        assert_eq!(f.diag, vec![s("1")]);
        assert_eq!(f.rank, 1);
        assert_eq!(f.kernel_basis().len(), 1);
        check_transforms(&m, &f);
    }

    #[test]
    fn units_normalize() {
        let m = from_rows(&[&["2*l^2", "0"], &["0", "3"]]);
        let f = smith_reduce(&m);
        assert_eq!(f.diag, vec![s("1"), s("l^2")]);
        check_transforms(&m, &f);
    }

    #[test]
    fn divisibility_chain_and_solve() {
        let m = from_rows(&[
            &["l^3", "l", "1+l"],
            &["l^2", "l^4", "l"],
            &["0", "2*l^2", "l^3"],
        ]);
        let f = smith_reduce(&m);
        for w in f.diag.windows(2) {
            assert!(w[1].divide_exact(&w[0]).is_ok(), "diagonal divisibility");
        }
        check_transforms(&m, &f);
        // solve M x = first column exactly
        let b = m.column(0).clone();
        let x = f.solve(&b).expect("column is in the image");
        assert_eq!(m.apply(&x), b);
        // an unsolvable target: something of too-low valuation outside im
        let f2 = smith_reduce(&from_rows(&[&["l^2"]]));
        assert!(f2.solve(&chain_from([(0, s("l"))])).is_none());
    }

    #[test]
    fn compose_and_apply() {
        let a = from_rows(&[&["1", "l"], &["0", "2"]]);
        let b = from_rows(&[&["l", "0"], &["1", "1"]]);
        let ab = a.compose(&b);
        assert_eq!(ab.get(0, 0), s("2*l"));
        assert_eq!(ab.get(1, 0), s("2"));
        assert_eq!(ab.get(0, 1), s("l"));
        assert_eq!(ab.get(1, 1), s("2"));
    }
}
