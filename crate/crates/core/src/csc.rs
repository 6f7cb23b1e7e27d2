//! Column-compressed output storage and its structural checks.

use std::fmt;

use crate::triplet::{Dimensions, TripletList};

/// Column-compressed sparse matrix with 0-based row indices.
///
/// Entries of column `c` occupy `col_ptr[c]..col_ptr[c + 1]` in both
/// `row_idx` and `values`. Explicitly stored zeros are kept.
#[derive(Clone, Debug)]
pub struct CscMatrix {
    dims: Dimensions,
    col_ptr: Vec<u32>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Wraps raw arrays without checking them; see [`csc_validate`].
    pub fn from_parts(
        dims: Dimensions,
        col_ptr: Vec<u32>,
        row_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Self {
        Self {
            dims,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn empty(dims: Dimensions) -> Self {
        Self::from_parts(dims, vec![0; dims.ncols + 1], Vec::new(), Vec::new())
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn nrows(&self) -> usize {
        self.dims.nrows
    }

    pub fn ncols(&self) -> usize {
        self.dims.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[u32] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[u32] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_parts(self) -> (Dimensions, Vec<u32>, Vec<u32>, Vec<f64>) {
        (self.dims, self.col_ptr, self.row_idx, self.values)
    }

    /// Stored entries in column-major, row-ascending order as 0-based
    /// `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.col_ptr.windows(2).enumerate().flat_map(move |(c, w)| {
            (w[0] as usize..w[1] as usize).map(move |k| (self.row_idx[k] as usize, c, self.values[k]))
        })
    }

    /// Expands the matrix back into unit-offset triplets.
    pub fn to_triplets(&self) -> TripletList {
        self.entries()
            .map(|(r, c, v)| (r as u32 + 1, c as u32 + 1, v))
            .collect()
    }

    /// Exact equality including value bit patterns, so NaN payloads and
    /// signed zeros must match too.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.first_difference(other).is_none()
    }

    /// Describes the first structural or bitwise value difference.
    pub fn first_difference(&self, other: &Self) -> Option<String> {
        if self.dims != other.dims {
            return Some(format!("dimensions {} vs {}", self.dims, other.dims));
        }
        if self.col_ptr.len() != other.col_ptr.len() {
            return Some(format!(
                "col_ptr length {} vs {}",
                self.col_ptr.len(),
                other.col_ptr.len()
            ));
        }
        if let Some(c) = (0..self.col_ptr.len()).find(|&c| self.col_ptr[c] != other.col_ptr[c]) {
            return Some(format!(
                "col_ptr[{c}] = {} vs {}",
                self.col_ptr[c], other.col_ptr[c]
            ));
        }
        if let Some(k) = (0..self.row_idx.len()).find(|&k| self.row_idx[k] != other.row_idx[k]) {
            return Some(format!(
                "row_idx[{k}] = {} vs {}",
                self.row_idx[k], other.row_idx[k]
            ));
        }
        if let Some(k) =
            (0..self.values.len()).find(|&k| self.values[k].to_bits() != other.values[k].to_bits())
        {
            return Some(format!(
                "values[{k}] = {:e} vs {:e}",
                self.values[k], other.values[k]
            ));
        }
        None
    }
}

/// A failed structural invariant of a [`CscMatrix`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ColPtrLength { expected: usize, found: usize },
    ColPtrStart { found: u32 },
    ColPtrEnd { expected: usize, found: u32 },
    ArrayLengths { row_idx: usize, values: usize },
    ColPtrDecreasing { col: usize },
    RowsNotIncreasing { col: usize, position: usize },
    RowOutOfRange { position: usize, row: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ColPtrLength { expected, found } => {
                write!(f, "jc length: expected {expected}, found {found}")
            }
            Violation::ColPtrStart { found } => write!(f, "jc[0] = 0: found {found}"),
            Violation::ColPtrEnd { expected, found } => {
                write!(f, "jc[N] = nnz: expected {expected}, found {found}")
            }
            Violation::ArrayLengths { row_idx, values } => {
                write!(f, "ir/pr length: {row_idx} row indices vs {values} values")
            }
            Violation::ColPtrDecreasing { col } => {
                write!(f, "non-decreasing jc: jc[{col}] > jc[{}]", col + 1)
            }
            Violation::RowsNotIncreasing { col, position } => write!(
                f,
                "strictly increasing rows: column {col} at position {position}"
            ),
            Violation::RowOutOfRange { position, row } => {
                write!(f, "row in range: ir[{position}] = {row}")
            }
        }
    }
}

/// Lists every violated invariant; empty iff the matrix is well formed.
pub fn csc_validate(m: &CscMatrix) -> Vec<Violation> {
    let mut out = Vec::new();
    let ncols = m.ncols();
    let nnz = m.row_idx.len();
    if m.values.len() != nnz {
        out.push(Violation::ArrayLengths {
            row_idx: nnz,
            values: m.values.len(),
        });
    }
    if m.col_ptr.len() != ncols + 1 {
        out.push(Violation::ColPtrLength {
            expected: ncols + 1,
            found: m.col_ptr.len(),
        });
    }
    if let Some(&first) = m.col_ptr.first() {
        if first != 0 {
            out.push(Violation::ColPtrStart { found: first });
        }
    }
    if let Some(&last) = m.col_ptr.last() {
        if last as usize != nnz {
            out.push(Violation::ColPtrEnd {
                expected: nnz,
                found: last,
            });
        }
    }
    for (position, &row) in m.row_idx.iter().enumerate() {
        if row as usize >= m.nrows() {
            out.push(Violation::RowOutOfRange { position, row });
        }
    }
    for (col, w) in m.col_ptr.windows(2).enumerate() {
        if w[0] > w[1] {
            out.push(Violation::ColPtrDecreasing { col });
            continue;
        }
        let (lo, hi) = (w[0] as usize, (w[1] as usize).min(nnz));
        for position in lo + 1..hi.max(lo + 1) {
            if m.row_idx[position - 1] >= m.row_idx[position] {
                out.push(Violation::RowsNotIncreasing { col, position });
            }
        }
    }
    out
}

/// Adds one duplicate into a running sum.
///
/// Plain `+` leaves the sign and payload of a NaN result unspecified, so a
/// NaN sum is pinned down here: the first NaN in summation order wins, and
/// a NaN created by the addition itself (`inf + -inf`) is `f64::NAN`.
#[inline]
pub fn accumulate(acc: f64, v: f64) -> f64 {
    let s = acc + v;
    if !s.is_nan() {
        s
    } else if acc.is_nan() {
        acc
    } else if v.is_nan() {
        v
    } else {
        f64::NAN
    }
}

/// Drops stored entries whose value is exactly zero (either sign).
pub fn prune_explicit_zeros(m: &CscMatrix) -> CscMatrix {
    let keep = m.values.iter().filter(|&&v| v != 0.0).count();
    let mut col_ptr = Vec::with_capacity(m.col_ptr.len());
    let mut row_idx = Vec::with_capacity(keep);
    let mut values = Vec::with_capacity(keep);
    col_ptr.push(0);
    for w in m.col_ptr.windows(2) {
        for k in w[0] as usize..w[1] as usize {
            if m.values[k] != 0.0 {
                row_idx.push(m.row_idx[k]);
                values.push(m.values[k]);
            }
        }
        col_ptr.push(row_idx.len() as u32);
    }
    CscMatrix::from_parts(m.dims, col_ptr, row_idx, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulate_pins_nan() {
        let neg = -f64::NAN;
        assert_eq!(accumulate(neg, f64::NAN).to_bits(), neg.to_bits());
        assert_eq!(accumulate(1.0, neg).to_bits(), neg.to_bits());
        assert_eq!(accumulate(f64::INFINITY, f64::NEG_INFINITY).to_bits(), f64::NAN.to_bits());
        assert_eq!(accumulate(0.0, -0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(accumulate(2.0, 3.0), 5.0);
    }

    fn eq1() -> CscMatrix {
        CscMatrix::from_parts(
            Dimensions::new(4, 4),
            vec![0, 3, 5, 7, 10],
            vec![0, 1, 3, 1, 2, 2, 3, 0, 2, 3],
            vec![10., 3., 3., 9., 7., 8., 8., -2., 7., 5.],
        )
    }

    #[test]
    fn accepts_example_matrix() {
        assert_eq!(csc_validate(&eq1()), vec![]);
    }

    #[test]
    fn flags_decreasing_col_ptr() {
        let m = CscMatrix::from_parts(Dimensions::new(3, 2), vec![0, 2, 1], vec![0], vec![1.]);
        let v = csc_validate(&m);
        assert!(v.contains(&Violation::ColPtrDecreasing { col: 1 }));
        assert!(v.iter().any(|x| x.to_string().contains("non-decreasing jc")));
    }

    #[test]
    fn flags_duplicate_row() {
        let m = CscMatrix::from_parts(Dimensions::new(4, 1), vec![0, 2], vec![3, 3], vec![1., 2.]);
        let v = csc_validate(&m);
        assert_eq!(v, vec![Violation::RowsNotIncreasing { col: 0, position: 1 }]);
        assert!(v[0].to_string().contains("strictly increasing rows"));
    }

    #[test]
    fn flags_bad_bounds() {
        let m = CscMatrix::from_parts(Dimensions::new(2, 1), vec![1, 3], vec![0, 5], vec![1.]);
        let v = csc_validate(&m);
        assert!(v.contains(&Violation::ColPtrStart { found: 1 }));
        assert!(v.contains(&Violation::ColPtrEnd { expected: 2, found: 3 }));
        assert!(v.contains(&Violation::RowOutOfRange { position: 1, row: 5 }));
        assert!(v.contains(&Violation::ArrayLengths { row_idx: 2, values: 1 }));
    }

    #[test]
    fn prune_without_zeros_is_identity() {
        let m = eq1();
        assert!(prune_explicit_zeros(&m).bit_eq(&m));
    }

    #[test]
    fn prune_single_zero() {
        let m = CscMatrix::from_parts(Dimensions::new(2, 3), vec![0, 0, 1, 1], vec![1], vec![0.0]);
        let p = prune_explicit_zeros(&m);
        assert_eq!(p.nnz(), 0);
        assert_eq!(p.col_ptr(), &[0, 0, 0, 0]);
        assert!(csc_validate(&p).is_empty());
    }

    #[test]
    fn prune_keeps_nan_and_drops_negative_zero() {
        let m = CscMatrix::from_parts(
            Dimensions::new(3, 2),
            vec![0, 2, 3],
            vec![0, 2, 1],
            vec![-0.0, f64::NAN, 4.0],
        );
        let p = prune_explicit_zeros(&m);
        assert_eq!(p.col_ptr(), &[0, 1, 2]);
        assert_eq!(p.row_idx(), &[2, 1]);
        assert!(p.values()[0].is_nan());
    }

    #[test]
    fn triplet_expansion_is_column_major() {
        let t = eq1().to_triplets();
        assert_eq!(t.cols(), &[1, 1, 1, 2, 2, 3, 3, 4, 4, 4]);
        assert_eq!(t.rows(), &[1, 2, 4, 2, 3, 3, 4, 1, 3, 4]);
    }

    #[test]
    fn first_difference_reports_value_bits() {
        let a = eq1();
        let (d, jc, ir, mut pr) = eq1().into_parts();
        pr[4] = 7.000000000000001;
        let b = CscMatrix::from_parts(d, jc, ir, pr);
        assert!(a.first_difference(&b).unwrap().starts_with("values[4]"));
    }
}
