//! Raw coordinate input and its validation.
//!
//! Indices arrive as unit-offset reals (the usual form of index vectors in
//! numerical environments) and are converted once to `u32`. All counts and
//! indices are limited to the 32-bit signed range, [`MAX_INDEX`].

use std::fmt;

use crate::error::{Error, Result};

/// Largest admissible index, element count, or nonzero count.
pub const MAX_INDEX: usize = i32::MAX as usize;

/// Matrix extent: `nrows` by `ncols`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Dimensions {
    pub nrows: usize,
    pub ncols: usize,
}

impl Dimensions {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols }
    }

    /// True when every index of `other` fits inside `self`.
    pub fn covers(&self, other: &Dimensions) -> bool {
        self.nrows >= other.nrows && self.ncols >= other.ncols
    }
}

impl fmt::Display for Dimensions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.nrows, self.ncols)
    }
}

/// Unordered unit-offset `(row, col, value)` triplets, duplicates allowed.
///
/// The three arrays always have the same length and every index is at
/// least 1. The smallest dimensions holding all indices are cached as the
/// list's extent.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletList {
    rows: Vec<u32>,
    cols: Vec<u32>,
    values: Vec<f64>,
    extent: Dimensions,
}

impl TripletList {
    pub fn new(rows: Vec<u32>, cols: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() != values.len() {
            return Err(Error::LengthMismatch {
                rows: rows.len(),
                cols: cols.len(),
                values: values.len(),
            });
        }
        check_len(rows.len())?;
        let nrows = max_unit_index(&rows)?;
        let ncols = max_unit_index(&cols)?;
        Ok(Self {
            rows,
            cols,
            values,
            extent: Dimensions::new(nrows, ncols),
        })
    }

    pub fn empty() -> Self {
        Self {
            rows: Vec::new(),
            cols: Vec::new(),
            values: Vec::new(),
            extent: Dimensions::default(),
        }
    }

    /// Unit-offset row indices.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Unit-offset column indices.
    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(max row, max col)`, or `0x0` for an empty list.
    pub fn extent(&self) -> Dimensions {
        self.extent
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.values)
            .map(|((&r, &c), &v)| (r, c, v))
    }

    pub fn into_parts(self) -> (Vec<u32>, Vec<u32>, Vec<f64>) {
        (self.rows, self.cols, self.values)
    }

    /// Builds a list from parts that are already known to be valid.
    pub(crate) fn from_validated(
        rows: Vec<u32>,
        cols: Vec<u32>,
        values: Vec<f64>,
        extent: Dimensions,
    ) -> Self {
        debug_assert_eq!(rows.len(), cols.len());
        debug_assert_eq!(rows.len(), values.len());
        Self {
            rows,
            cols,
            values,
            extent,
        }
    }
}

impl FromIterator<(u32, u32, f64)> for TripletList {
    /// Panics on a zero index; use [`TripletList::new`] for fallible construction.
    fn from_iter<I: IntoIterator<Item = (u32, u32, f64)>>(iter: I) -> Self {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for (r, c, v) in iter {
            rows.push(r);
            cols.push(c);
            values.push(v);
        }
        Self::new(rows, cols, values).expect("invalid triplet")
    }
}

fn check_len(len: usize) -> Result<()> {
    if len > MAX_INDEX {
        return Err(Error::LimitExceeded {
            what: "element count",
            value: len,
            limit: MAX_INDEX,
        });
    }
    Ok(())
}

fn max_unit_index(ix: &[u32]) -> Result<usize> {
    let mut max = 0;
    for (position, &v) in ix.iter().enumerate() {
        if v == 0 || v as usize > MAX_INDEX {
            return Err(Error::BadIndex {
                position,
                value: v as f64,
            });
        }
        max = max.max(v);
    }
    Ok(max as usize)
}

/// Converts one raw index, rejecting values below 1, non-integral values,
/// NaN, and values beyond [`MAX_INDEX`].
#[inline]
pub(crate) fn convert_index(value: f64) -> Option<u32> {
    // NaN fails the ceil comparison
    if value < 1.0 || value != value.ceil() || value > MAX_INDEX as f64 {
        None
    } else {
        Some(value as u32)
    }
}

/// Serial index conversion with max-reduction.
pub(crate) fn convert_indices(raw: &[f64]) -> Result<(Vec<u32>, usize)> {
    let mut ix = Vec::with_capacity(raw.len());
    let mut max = 0u32;
    for (position, &value) in raw.iter().enumerate() {
        let v = convert_index(value).ok_or(Error::BadIndex { position, value })?;
        ix.push(v);
        if v > max {
            max = v;
        }
    }
    Ok((ix, max as usize))
}

/// Checks the three raw arrays agree in length, allowing a length-1 value
/// array to broadcast. Returns the element count.
pub(crate) fn check_raw_lengths(raw_i: &[f64], raw_j: &[f64], raw_s: &[f64]) -> Result<usize> {
    let len = raw_i.len();
    let broadcast = raw_s.len() == 1 || (len == 0 && raw_s.is_empty());
    if raw_j.len() != len || (raw_s.len() != len && !broadcast) {
        return Err(Error::LengthMismatch {
            rows: raw_i.len(),
            cols: raw_j.len(),
            values: raw_s.len(),
        });
    }
    check_len(len)?;
    Ok(len)
}

pub(crate) fn expand_values(raw_s: &[f64], len: usize) -> Vec<f64> {
    if raw_s.len() == len {
        raw_s.to_vec()
    } else {
        vec![raw_s.first().copied().unwrap_or(0.0); len]
    }
}

/// Validates raw unit-offset index arrays and converts them to integers.
///
/// The dimensions are inferred as the largest row and column index. A value
/// array of length 1 is broadcast to every element.
pub fn validate_and_convert(
    raw_i: &[f64],
    raw_j: &[f64],
    raw_s: &[f64],
) -> Result<(TripletList, Dimensions)> {
    let len = check_raw_lengths(raw_i, raw_j, raw_s)?;
    let (rows, nrows) = convert_indices(raw_i)?;
    let (cols, ncols) = convert_indices(raw_j)?;
    let dims = Dimensions::new(nrows, ncols);
    let values = expand_values(raw_s, len);
    Ok((TripletList::from_validated(rows, cols, values, dims), dims))
}

/// Everything an assembly call needs: triplets, resolved dimensions, and
/// an optional output capacity hint.
#[derive(Clone, Debug)]
pub struct AssemblyRequest {
    triplets: TripletList,
    dims: Dimensions,
    capacity_hint: Option<usize>,
}

impl AssemblyRequest {
    /// Request with dimensions inferred from the largest indices.
    pub fn new(triplets: TripletList) -> Self {
        let dims = triplets.extent();
        Self {
            triplets,
            dims,
            capacity_hint: None,
        }
    }

    pub fn from_raw(raw_i: &[f64], raw_j: &[f64], raw_s: &[f64]) -> Result<Self> {
        let (triplets, _) = validate_and_convert(raw_i, raw_j, raw_s)?;
        Ok(Self::new(triplets))
    }

    /// Fixes explicit dimensions, which must hold every index.
    pub fn with_dims(mut self, dims: Dimensions) -> Result<Self> {
        let required = self.triplets.extent();
        if !dims.covers(&required) {
            return Err(Error::DimensionTooSmall {
                given: dims,
                required,
            });
        }
        for (what, value) in [("row count", dims.nrows), ("column count", dims.ncols)] {
            if value > MAX_INDEX {
                return Err(Error::LimitExceeded {
                    what,
                    value,
                    limit: MAX_INDEX,
                });
            }
        }
        self.dims = dims;
        Ok(self)
    }

    /// Output capacity hint (`nzmax`). It only reserves storage and never
    /// changes the assembled matrix.
    pub fn with_capacity_hint(mut self, nzmax: usize) -> Self {
        self.capacity_hint = Some(nzmax);
        self
    }

    pub fn triplets(&self) -> &TripletList {
        &self.triplets
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn capacity_hint(&self) -> Option<usize> {
        self.capacity_hint
    }

    pub fn into_triplets(self) -> TripletList {
        self.triplets
    }
}
