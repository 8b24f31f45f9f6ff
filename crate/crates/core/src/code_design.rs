//! The `(N+M) x N` coding matrix: an identity block for the direct source
//! transmissions stacked on the relays' network-coding coefficients.
//!
//! [`build_mds_matrix`] fills the relay block with a Cauchy matrix, which
//! makes every `N` rows of the stacked matrix independent (row Kruskal rank
//! `N`), so any `N` received packets decode.

use std::fmt::Write as _;

use thiserror::Error;

use crate::finite_field::{min_degree_for, FieldElement, FieldError, GfContext};
use crate::linalg::GfMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("GF(2^{degree}) has {order} elements but N+M = {needed}; use L >= {min_degree}")]
    FieldTooSmall { degree: u32, order: u32, needed: usize, min_degree: u32 },
    #[error("need at least one source")]
    NoSources,
    #[error("cauchy points: {0}")]
    CauchyPoints(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("top {0}x{0} block is not the identity")]
    NotSystematic(usize),
    #[error("matrix file: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Evaluation points `{x_i}` (one per relay) and `{y_j}` (one per source)
/// of the Cauchy block `P[i][j] = 1 / (x_i + y_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauchyPoints {
    pub relay_points: Vec<u32>,
    pub source_points: Vec<u32>,
}

impl CauchyPoints {
    /// `x_i = i` for relays `0..M`, `y_j = M + j` for sources `0..N`.
    pub fn standard(n: usize, m: usize) -> Self {
        Self { relay_points: (0..m as u32).collect(), source_points: (m as u32..(m + n) as u32).collect() }
    }

    fn validate(&self, ctx: &GfContext) -> Result<(), DesignError> {
        let mut all: Vec<u32> = self.relay_points.iter().chain(&self.source_points).copied().collect();
        if let Some(&v) = all.iter().find(|&&v| v >= ctx.order()) {
            return Err(DesignError::CauchyPoints(format!("{v} is not in GF({})", ctx.order())));
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(DesignError::CauchyPoints("points must be pairwise distinct".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingMatrix {
    n: usize,
    m: usize,
    ctx: GfContext,
    /// `(N+M) * N` entries, row-major.
    entries: Vec<FieldElement>,
}

/// Outcome of an exhaustive row Kruskal rank search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KruskalReport {
    pub rank: usize,
    /// The first dependent row subset found at size `rank + 1`, if any.
    pub dependent_rows: Option<Vec<usize>>,
}

/// Builds `[I_N; P]` with `P` the `M x N` Cauchy block on the standard points.
pub fn build_mds_matrix(n: usize, m: usize, ctx: &GfContext) -> Result<CodingMatrix, DesignError> {
    build_mds_matrix_with_points(n, m, ctx, &CauchyPoints::standard(n, m))
}

pub fn build_mds_matrix_with_points(n: usize, m: usize, ctx: &GfContext, points: &CauchyPoints) -> Result<CodingMatrix, DesignError> {
    if n == 0 {
        return Err(DesignError::NoSources);
    }
    if (ctx.order() as usize) < n + m {
        return Err(DesignError::FieldTooSmall {
            degree: ctx.degree(),
            order: ctx.order(),
            needed: n + m,
            min_degree: min_degree_for(n + m),
        });
    }
    if points.relay_points.len() != m || points.source_points.len() != n {
        return Err(DesignError::CauchyPoints(format!(
            "expected {m} relay and {n} source points, got {} and {}",
            points.relay_points.len(),
            points.source_points.len()
        )));
    }
    points.validate(ctx)?;
    let mut relay_rows = Vec::with_capacity(m);
    for &x in &points.relay_points {
        let row = points.source_points.iter().map(|&y| ctx.inv(ctx.element(x ^ y)?)).collect::<Result<Vec<_>, _>>()?;
        relay_rows.push(row);
    }
    CodingMatrix::from_relay_rows(n, ctx, relay_rows)
}

impl CodingMatrix {
    /// Stacks the identity on caller-chosen relay coefficients. The result
    /// is not required to be MDS; check it with [`CodingMatrix::kruskal_rank`].
    pub fn from_relay_rows(n: usize, ctx: &GfContext, relay_rows: Vec<Vec<FieldElement>>) -> Result<Self, DesignError> {
        if n == 0 {
            return Err(DesignError::NoSources);
        }
        let m = relay_rows.len();
        let mut entries = Vec::with_capacity((n + m) * n);
        for i in 0..n {
            entries.extend((0..n).map(|j| if i == j { FieldElement::ONE } else { FieldElement::ZERO }));
        }
        for row in relay_rows {
            if row.len() != n {
                return Err(DesignError::LengthMismatch { expected: n, got: row.len() });
            }
            for &v in &row {
                ctx.element(u32::from(v.value()))?;
            }
            entries.extend(row);
        }
        Ok(Self { n, m, ctx: ctx.clone(), entries })
    }

    pub fn sources(&self) -> usize {
        self.n
    }

    pub fn relays(&self) -> usize {
        self.m
    }

    pub fn context(&self) -> &GfContext {
        &self.ctx
    }

    /// Row `i` of the full matrix; rows `N..N+M` belong to the relays.
    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Coefficients relay `k` applies to the source packets.
    pub fn relay_row(&self, k: usize) -> &[FieldElement] {
        self.row(self.n + k)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[FieldElement]> {
        self.entries.chunks_exact(self.n)
    }

    pub fn total_rows(&self) -> usize {
        self.n + self.m
    }

    /// `X = A * theta`: the packet each node would transmit.
    pub fn encode(&self, theta: &[FieldElement]) -> Result<Vec<FieldElement>, DesignError> {
        if theta.len() != self.n {
            return Err(DesignError::LengthMismatch { expected: self.n, got: theta.len() });
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(theta).fold(FieldElement::ZERO, |acc, (&a, &t)| self.ctx.add(acc, self.ctx.mul(a, t))))
            .collect())
    }

    /// Recovers `theta` from the packets carried by `row_indices`, or `None`
    /// if those rows do not determine it.
    pub fn decode(&self, row_indices: &[usize], packets: &[FieldElement]) -> Result<Option<Vec<FieldElement>>, DesignError> {
        if row_indices.len() != packets.len() {
            return Err(DesignError::LengthMismatch { expected: row_indices.len(), got: packets.len() });
        }
        let sub = GfMatrix::from_rows(self.n, row_indices.iter().map(|&i| self.row(i)));
        Ok(sub.solve(&self.ctx, packets))
    }

    /// Row Kruskal rank. See [`kruskal_report`].
    pub fn kruskal_rank(&self) -> usize {
        self.kruskal_report().rank
    }

    pub fn kruskal_report(&self) -> KruskalReport {
        kruskal_report(&self.ctx, self.n, &self.rows().collect::<Vec<_>>())
    }

    /// Plain-text form: `N M L poly`, then one row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.n, self.m, self.ctx.degree(), self.ctx.polynomial());
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DesignError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| DesignError::Parse("empty input".into()))?;
        let fields = parse_ints(header)?;
        let [n, m, degree, poly] = fields[..] else {
            return Err(DesignError::Parse(format!("header must be `N M L poly`, got `{header}`")));
        };
        let (n, m) = (n as usize, m as usize);
        let ctx = GfContext::with_polynomial(degree, poly)?;
        let mut rows = Vec::with_capacity(n + m);
        for line in lines {
            let vals = parse_ints(line)?;
            if vals.len() != n {
                return Err(DesignError::Parse(format!("row `{line}` has {} entries, expected {n}", vals.len())));
            }
            rows.push(vals.into_iter().map(|v| ctx.element(v)).collect::<Result<Vec<_>, _>>()?);
        }
        if rows.len() != n + m {
            return Err(DesignError::Parse(format!("expected {} rows, got {}", n + m, rows.len())));
        }
        let relay_rows = rows.split_off(n);
        for (i, row) in rows.iter().enumerate() {
            if row.iter().enumerate().any(|(j, v)| v.value() != u16::from(i == j)) {
                return Err(DesignError::NotSystematic(n));
            }
        }
        Self::from_relay_rows(n, &ctx, relay_rows)
    }
}

fn parse_ints(line: &str) -> Result<Vec<u32>, DesignError> {
    line.split_whitespace().map(|tok| tok.parse::<u32>().map_err(|e| DesignError::Parse(format!("`{tok}`: {e}")))).collect()
}

/// Largest `r` such that every `r` of `rows` are linearly independent, by
/// enumerating subsets in increasing size. Zero if any row is zero.
///
/// Cost is a sum of binomials in the row count, so this is for desk-scale
/// matrices (up to ~16 rows).
pub fn kruskal_report(ctx: &GfContext, cols: usize, rows: &[&[FieldElement]]) -> KruskalReport {
    let max_r = rows.len().min(cols);
    let mut scratch = GfMatrix::with_capacity(cols, max_r);
    for r in 1..=max_r {
        let mut subset: Vec<usize> = (0..r).collect();
        loop {
            scratch.clear();
            for &i in &subset {
                scratch.push_row(rows[i]);
            }
            if scratch.to_echelon(ctx) < r {
                return KruskalReport { rank: r - 1, dependent_rows: Some(subset) };
            }
            if !next_combination(&mut subset, rows.len()) {
                break;
            }
        }
    }
    // Every max_r-subset is independent; any larger set exceeds the column
    // count and is dependent.
    let dependent_rows = (rows.len() > max_r).then(|| (0..=max_r).collect());
    KruskalReport { rank: max_r, dependent_rows }
}

/// Advances `subset` (sorted, size r, drawn from `0..n`) to the next
/// combination in lexicographic order.
pub(crate) fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let r = subset.len();
    for i in (0..r).rev() {
        if subset[i] < n - r + i {
            subset[i] += 1;
            for j in i + 1..r {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(ctx: &GfContext, v: u32) -> FieldElement {
        ctx.element(v).unwrap()
    }

    #[test]
    fn identity_only_when_no_relays() {
        let ctx = GfContext::new(4).unwrap();
        let a = build_mds_matrix(2, 0, &ctx).unwrap();
        assert_eq!(a.total_rows(), 2);
        assert_eq!(a.kruskal_rank(), 2);
    }

    #[test]
    fn single_source_single_relay() {
        for degree in 1..=4 {
            let ctx = GfContext::new(degree).unwrap();
            let a = build_mds_matrix(1, 1, &ctx).unwrap();
            assert!(!a.relay_row(0)[0].is_zero());
            assert_eq!(a.kruskal_rank(), 1);
        }
    }

    #[test]
    fn n2_m2_gf16_every_pair_invertible() {
        let ctx = GfContext::with_polynomial(4, 0b10011).unwrap();
        let a = build_mds_matrix(2, 2, &ctx).unwrap();
        let mut count = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                let (r, s) = (a.row(i), a.row(j));
                let det = ctx.add(ctx.mul(r[0], s[1]), ctx.mul(r[1], s[0]));
                assert!(!det.is_zero(), "rows {i},{j}");
                count += 1;
            }
        }
        assert_eq!(count, 6);
        assert_eq!(a.kruskal_rank(), 2);
    }

    #[test]
    fn kruskal_examples() {
        let ctx = GfContext::new(2).unwrap();
        let raw = [[1u32, 0], [0, 1], [1, 1], [1, 2]];
        let rows: Vec<Vec<_>> = raw.iter().map(|r| r.iter().map(|&v| el(&ctx, v)).collect()).collect();
        let refs: Vec<&[FieldElement]> = rows.iter().map(Vec::as_slice).collect();
        assert_eq!(kruskal_report(&ctx, 2, &refs).rank, 2);

        let zero = CodingMatrix::from_relay_rows(2, &ctx, vec![vec![FieldElement::ZERO; 2]]).unwrap();
        let report = zero.kruskal_report();
        assert_eq!(report.rank, 0);
        assert_eq!(report.dependent_rows, Some(vec![2]));
    }

    #[test]
    fn field_too_small_names_min_degree() {
        let ctx = GfContext::new(2).unwrap();
        let err = build_mds_matrix(3, 2, &ctx).unwrap_err();
        assert_eq!(err, DesignError::FieldTooSmall { degree: 2, order: 4, needed: 5, min_degree: 3 });
    }

    #[test]
    fn encode_examples() {
        let ctx = GfContext::new(4).unwrap();
        let a = build_mds_matrix(2, 1, &ctx).unwrap();
        assert_eq!(a.encode(&[FieldElement::ZERO; 2]).unwrap(), vec![FieldElement::ZERO; 3]);
        let theta = [el(&ctx, 7), el(&ctx, 12)];
        let x = a.encode(&theta).unwrap();
        assert_eq!(&x[..2], &theta);
        let alpha = a.relay_row(0);
        assert_eq!(x[2], ctx.add(ctx.mul(alpha[0], theta[0]), ctx.mul(alpha[1], theta[1])));
        // Relay points {0}, source points {1, 2}: alpha = (1/1, 1/2) = (1, 9).
        assert_eq!(alpha, &[el(&ctx, 1), el(&ctx, 9)]);

        let id = build_mds_matrix(2, 0, &ctx).unwrap();
        assert_eq!(id.encode(&theta).unwrap(), theta.to_vec());
        assert!(matches!(a.encode(&theta[..1]), Err(DesignError::LengthMismatch { .. })));
    }

    #[test]
    fn text_round_trip_and_rejects_non_systematic() {
        let ctx = GfContext::new(4).unwrap();
        let a = build_mds_matrix(3, 2, &ctx).unwrap();
        let text = a.to_text();
        assert!(text.starts_with("3 2 4 19\n"));
        assert_eq!(CodingMatrix::from_text(&text).unwrap(), a);
        let bad = "2 0 4 19\n1 0\n1 1\n";
        assert_eq!(CodingMatrix::from_text(bad).unwrap_err(), DesignError::NotSystematic(2));
        assert!(matches!(CodingMatrix::from_text("2 0 4 19\n1 0\n"), Err(DesignError::Parse(_))));
    }

    #[test]
    fn combinations_enumerate_binomial_count() {
        let mut s = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut s, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
    }
}
