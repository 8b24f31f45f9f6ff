//! Dense matrices over GF(2^L) and Gaussian elimination.
//!
//! [`GfMatrix`] is a row-major buffer meant to be reused: the simulator
//! clears and refills one per worker instead of allocating per trial.

use crate::finite_field::{FieldElement, GfContext};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfMatrix {
    cols: usize,
    data: Vec<FieldElement>,
    /// Pivot column of each echelon row, valid after [`GfMatrix::to_echelon`].
    pivots: Vec<usize>,
}

impl GfMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new(), pivots: Vec::new() }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self { cols, data: Vec::with_capacity(cols * rows), pivots: Vec::with_capacity(rows) }
    }

    pub fn from_rows<R: AsRef<[FieldElement]>>(cols: usize, rows: impl IntoIterator<Item = R>) -> Self {
        let mut m = Self::new(cols);
        for r in rows {
            m.push_row(r.as_ref());
        }
        m
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn clear(&mut self) {
        self.data.clear();
        self.pivots.clear();
    }

    pub fn push_row(&mut self, row: &[FieldElement]) {
        assert_eq!(row.len(), self.cols, "row length must match column count");
        self.data.extend_from_slice(row);
    }

    /// Pushes `row` with every column where `keep` is false set to zero.
    pub fn push_masked_row(&mut self, row: &[FieldElement], keep: impl Fn(usize) -> bool) {
        assert_eq!(row.len(), self.cols, "row length must match column count");
        self.data.extend(row.iter().enumerate().map(|(j, &v)| if keep(j) { v } else { FieldElement::ZERO }));
    }

    /// Reduces in place to row echelon form with unit pivots and returns the
    /// rank. Rows past the rank are left zero.
    pub fn to_echelon(&mut self, ctx: &GfContext) -> usize {
        let (rows, cols) = (self.rows(), self.cols);
        self.pivots.clear();
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&r| !self.data[r * cols + col].is_zero()) else {
                continue;
            };
            if p != rank {
                for j in 0..cols {
                    self.data.swap(p * cols + j, rank * cols + j);
                }
            }
            let inv = ctx.inv(self.data[rank * cols + col]).expect("pivot is nonzero");
            for j in col..cols {
                let v = &mut self.data[rank * cols + j];
                *v = ctx.mul(*v, inv);
            }
            for r in rank + 1..rows {
                let factor = self.data[r * cols + col];
                if factor.is_zero() {
                    continue;
                }
                for j in col..cols {
                    let sub = ctx.mul(factor, self.data[rank * cols + j]);
                    let v = &mut self.data[r * cols + j];
                    *v = ctx.add(*v, sub);
                }
            }
            self.pivots.push(col);
            rank += 1;
        }
        rank
    }

    /// Rank without disturbing `self`.
    pub fn rank(&self, ctx: &GfContext) -> usize {
        self.clone().to_echelon(ctx)
    }

    /// Whether `target` lies in the row space. Must be called after
    /// [`GfMatrix::to_echelon`]; `target` is consumed as scratch.
    pub fn echelon_spans(&self, ctx: &GfContext, target: &mut [FieldElement]) -> bool {
        debug_assert_eq!(target.len(), self.cols);
        for (r, &col) in self.pivots.iter().enumerate() {
            let factor = target[col];
            if factor.is_zero() {
                continue;
            }
            for (t, &a) in target.iter_mut().zip(self.row(r)).skip(col) {
                *t = ctx.add(*t, ctx.mul(factor, a));
            }
        }
        target.iter().all(|v| v.is_zero())
    }

    /// Whether the unit vector `e_index` lies in the row space.
    pub fn spans_unit_vector(&self, ctx: &GfContext, index: usize) -> bool {
        let mut m = self.clone();
        m.to_echelon(ctx);
        let mut target = vec![FieldElement::ZERO; self.cols];
        target[index] = FieldElement::ONE;
        m.echelon_spans(ctx, &mut target)
    }

    /// Solves `self * x = rhs` when the columns are independent. Returns
    /// `None` if the solution is not unique or the system is inconsistent.
    pub fn solve(&self, ctx: &GfContext, rhs: &[FieldElement]) -> Option<Vec<FieldElement>> {
        assert_eq!(rhs.len(), self.rows(), "one right-hand side per row");
        let n = self.cols;
        let mut aug = GfMatrix::new(n + 1);
        let mut row = Vec::with_capacity(n + 1);
        for (i, &b) in rhs.iter().enumerate() {
            row.clear();
            row.extend_from_slice(self.row(i));
            row.push(b);
            aug.push_row(&row);
        }
        let rank = aug.to_echelon(ctx);
        if rank != n || aug.pivots.contains(&n) {
            return None;
        }
        // Back substitution on unit-pivot echelon rows; pivot r sits in column r.
        let mut x = vec![FieldElement::ZERO; n];
        for r in (0..n).rev() {
            let row = aug.row(r);
            let mut acc = row[n];
            for j in r + 1..n {
                acc = ctx.add(acc, ctx.mul(row[j], x[j]));
            }
            x[r] = acc;
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> GfContext {
        GfContext::new(4).unwrap()
    }

    fn rows(ctx: &GfContext, raw: &[&[u32]]) -> GfMatrix {
        let cols = raw.first().map_or(0, |r| r.len());
        GfMatrix::from_rows(cols, raw.iter().map(|r| r.iter().map(|&v| ctx.element(v).unwrap()).collect::<Vec<_>>()))
    }

    #[test]
    fn rank_basic() {
        let c = ctx();
        assert_eq!(rows(&c, &[&[1, 0], &[0, 1]]).rank(&c), 2);
        assert_eq!(rows(&c, &[&[1, 2], &[2, 4]]).rank(&c), 1);
        assert_eq!(rows(&c, &[&[0, 0], &[0, 0]]).rank(&c), 0);
        assert_eq!(GfMatrix::new(3).rank(&c), 0);
        // 3 * (1, 2) = (3, 6) in GF(16)
        assert_eq!(rows(&c, &[&[1, 2], &[3, 6], &[0, 5]]).rank(&c), 2);
    }

    #[test]
    fn span_membership() {
        let c = ctx();
        let m = rows(&c, &[&[0, 1, 0]]);
        assert!(m.spans_unit_vector(&c, 1));
        assert!(!m.spans_unit_vector(&c, 0));
        let m = rows(&c, &[&[1, 1, 0], &[0, 1, 0]]);
        assert!(m.spans_unit_vector(&c, 0));
        assert!(!m.spans_unit_vector(&c, 2));
        assert!(!GfMatrix::new(2).spans_unit_vector(&c, 0));
    }

    #[test]
    fn solve_square_and_overdetermined() {
        let c = ctx();
        let m = rows(&c, &[&[1, 1], &[1, 2], &[0, 7]]);
        let x = [c.element(9).unwrap(), c.element(4).unwrap()];
        let rhs: Vec<_> =
            (0..m.rows()).map(|i| m.row(i).iter().zip(&x).fold(FieldElement::ZERO, |acc, (&a, &b)| c.add(acc, c.mul(a, b)))).collect();
        assert_eq!(m.solve(&c, &rhs).unwrap(), x.to_vec());
        let singular = rows(&c, &[&[1, 2], &[2, 4]]);
        assert!(singular.solve(&c, &[FieldElement::ONE, FieldElement::ZERO]).is_none());
    }
}
