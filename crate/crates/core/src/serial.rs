//! Serial index-based assembly.
//!
//! The triplets are distributed by row with a counting sort (Parts 1 and 2),
//! traversed row by row to detect repeated `(row, col)` pairs with a
//! per-column cache of the last row seen (Part 3), and the resulting local
//! column slots are shifted by the accumulated column pointer (Part 4).
//! The scatter pass then writes row indices and sums values through the
//! inverse rank.

use crate::csc::{accumulate, CscMatrix};
use crate::instrument::{Buf, NoProbe, Phase, Probe};
use crate::triplet::{AssemblyRequest, Dimensions, TripletList};

/// Accumulated row counter of length `nrows + 1`.
///
/// Straight out of [`count_rows`], `counts()[r]` is the number of elements
/// with row `<= r`. [`build_rank`] advances it by one row, after which
/// `counts()[r - 1]` is the end of row `r` in rank order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowCounter {
    counts: Vec<u32>,
}

impl RowCounter {
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Stable row-sort permutation: `rank[k]` is the input position of the
/// `k`-th element in row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankArray {
    rank: Vec<u32>,
}

impl RankArray {
    pub fn as_slice(&self) -> &[u32] {
        &self.rank
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.rank
    }

    pub(crate) fn from_vec(rank: Vec<u32>) -> Self {
        Self { rank }
    }

    /// Bijective, row-non-decreasing, and order-preserving within a row.
    pub fn is_stable_row_sort(&self, rows: &[u32]) -> bool {
        if self.rank.len() != rows.len() {
            return false;
        }
        let mut seen = vec![false; rows.len()];
        for &k in &self.rank {
            match seen.get_mut(k as usize) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        self.rank.windows(2).all(|w| {
            let (a, b) = (w[0] as usize, w[1] as usize);
            rows[a] < rows[b] || (rows[a] == rows[b] && a < b)
        })
    }
}

/// Inverse rank and column pointer.
///
/// After [`compress_columns`] the plan is local: `col_ptr[c]` counts the
/// unique rows of unit-offset column `c` and `irank` holds slots within
/// each column. After [`accumulate_columns`] `col_ptr` is the final column
/// pointer and `irank[i]` the destination of input element `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SerialPlan {
    pub irank: Vec<u32>,
    pub col_ptr: Vec<u32>,
    dims: Dimensions,
}

impl SerialPlan {
    /// Stored entry count, `col_ptr[N]`; only meaningful once accumulated.
    pub fn nnz(&self) -> usize {
        self.col_ptr.last().copied().unwrap_or(0) as usize
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }
}

fn check_dims(t: &TripletList, dims: Dimensions) {
    assert!(
        dims.covers(&t.extent()),
        "dimensions {dims} do not hold indices up to {}",
        t.extent()
    );
}

/// Part 1: row histogram with collisions counted, prefix-summed.
pub fn count_rows(t: &TripletList, dims: Dimensions) -> RowCounter {
    check_dims(t, dims);
    count_rows_in(t, dims, &mut NoProbe)
}

pub(crate) fn count_rows_in<P: Probe>(t: &TripletList, dims: Dimensions, probe: &mut P) -> RowCounter {
    probe.phase(Phase::Part1);
    let m = dims.nrows;
    let mut jr = vec![0u32; m + 1];
    probe.alloc(m + 1);
    for &r in t.rows() {
        jr[r as usize] += 1;
        probe.direct(Buf::Rows);
        probe.indirect(Buf::RowPtr);
    }
    for r in 2..=m {
        jr[r] += jr[r - 1];
        probe.direct(Buf::RowPtr);
        probe.direct(Buf::RowPtr);
    }
    RowCounter { counts: jr }
}

/// Part 2: distributes input positions into row order, advancing `rc`.
pub fn build_rank(t: &TripletList, rc: &mut RowCounter) -> RankArray {
    build_rank_in(t, rc, &mut NoProbe)
}

pub(crate) fn build_rank_in<P: Probe>(t: &TripletList, rc: &mut RowCounter, probe: &mut P) -> RankArray {
    probe.phase(Phase::Part2);
    let len = t.len();
    let mut rank = vec![0u32; len];
    probe.alloc(len);
    let jr = &mut rc.counts;
    for (i, &r) in t.rows().iter().enumerate() {
        let slot = &mut jr[r as usize - 1];
        rank[*slot as usize] = i as u32;
        *slot += 1;
        probe.direct(Buf::Rows);
        probe.indirect(Buf::RowPtr);
        probe.indirect(Buf::Rank);
    }
    RankArray { rank }
}

/// Part 3: walks the input row by row and gives every distinct
/// `(row, col)` pair a slot within its column. Consumes and releases the
/// row counter and rank.
pub fn compress_columns(
    t: &TripletList,
    rc: RowCounter,
    rank: RankArray,
    dims: Dimensions,
) -> SerialPlan {
    check_dims(t, dims);
    compress_columns_in(t, rc, rank, dims, &mut NoProbe)
}

pub(crate) fn compress_columns_in<P: Probe>(
    t: &TripletList,
    rc: RowCounter,
    rank: RankArray,
    dims: Dimensions,
    probe: &mut P,
) -> SerialPlan {
    probe.phase(Phase::Part3);
    let (m, n, len) = (dims.nrows, dims.ncols, t.len());
    let cols = t.cols();
    let jr = rc.counts;
    let rank = rank.rank;

    let mut jc = vec![0u32; n + 1];
    let mut hcol = vec![0u32; n];
    let mut irank = vec![0u32; len];
    probe.alloc(n + 1);
    probe.alloc(n);
    probe.alloc(len);

    let mut i = 0;
    for row in 1..=m as u32 {
        let end = jr[row as usize - 1] as usize;
        probe.direct(Buf::RowPtr);
        while i < end {
            let k = rank[i] as usize;
            let col = cols[k] as usize;
            // 0 marks an empty cache entry since rows start at 1
            if hcol[col - 1] < row {
                hcol[col - 1] = row;
                jc[col] += 1;
            }
            irank[k] = jc[col] - 1;
            probe.direct(Buf::Rank);
            probe.indirect(Buf::Cols);
            probe.indirect(Buf::ColCache);
            probe.indirect(Buf::ColPtr);
            probe.indirect(Buf::InvRank);
            i += 1;
        }
    }

    drop(hcol);
    probe.free(n);
    drop(rank);
    probe.free(len);
    drop(jr);
    probe.free(m + 1);

    SerialPlan {
        irank,
        col_ptr: jc,
        dims,
    }
}

/// Part 4: prefix-sums the column counts and shifts each inverse rank to
/// its final slot.
pub fn accumulate_columns(plan: SerialPlan, t: &TripletList) -> SerialPlan {
    accumulate_columns_in(plan, t, &mut NoProbe)
}

pub(crate) fn accumulate_columns_in<P: Probe>(
    mut plan: SerialPlan,
    t: &TripletList,
    probe: &mut P,
) -> SerialPlan {
    probe.phase(Phase::Part4);
    let n = plan.dims.ncols;
    let jc = &mut plan.col_ptr;
    for c in 2..=n {
        jc[c] += jc[c - 1];
        probe.direct(Buf::ColPtr);
        probe.direct(Buf::ColPtr);
    }
    for (slot, &c) in plan.irank.iter_mut().zip(t.cols()) {
        *slot += jc[c as usize - 1];
        probe.direct(Buf::InvRank);
        probe.direct(Buf::Cols);
        probe.indirect(Buf::ColPtr);
    }
    plan
}

/// Writes row indices and sums values through the inverse rank, visiting
/// input elements in ascending order.
pub fn scatter_serial(plan: SerialPlan, t: &TripletList) -> CscMatrix {
    scatter_in(plan, t, None, &mut NoProbe)
}

pub(crate) fn scatter_in<P: Probe>(
    plan: SerialPlan,
    t: &TripletList,
    capacity_hint: Option<usize>,
    probe: &mut P,
) -> CscMatrix {
    probe.phase(Phase::Postprocess);
    let nnz = plan.nnz();
    let capacity = capacity_hint.map_or(nnz, |h| h.max(nnz));
    let mut ir = Vec::with_capacity(capacity);
    ir.resize(nnz, 0u32);
    let mut pr = Vec::with_capacity(capacity);
    pr.resize(nnz, 0.0f64);
    probe.alloc(3 * capacity);

    for ((&slot, &r), &v) in plan.irank.iter().zip(t.rows()).zip(t.values()) {
        let d = slot as usize;
        ir[d] = r - 1;
        pr[d] = accumulate(pr[d], v);
    }

    let SerialPlan { irank, col_ptr, dims } = plan;
    drop(irank);
    probe.free(t.len());
    CscMatrix::from_parts(dims, col_ptr, ir, pr)
}

/// Full serial assembly.
pub fn assemble_serial(req: &AssemblyRequest) -> CscMatrix {
    assemble_probed(req, &mut NoProbe)
}

pub(crate) fn assemble_probed<P: Probe>(req: &AssemblyRequest, probe: &mut P) -> CscMatrix {
    let t = req.triplets();
    let dims = req.dims();
    let mut rc = count_rows_in(t, dims, probe);
    let rank = build_rank_in(t, &mut rc, probe);
    let plan = compress_columns_in(t, rc, rank, dims, probe);
    let plan = accumulate_columns_in(plan, t, probe);
    scatter_in(plan, t, req.capacity_hint(), probe)
}
