//! Shared-memory parallel assembly.
//!
//! Every phase runs on a [`WorkerTeam`] and is followed by a full
//! synchronization point. Within a phase workers write disjoint data:
//!
//! * Part 1 gives each worker a private row histogram over its slice of the
//!   input, then turns the histograms into per-worker starting offsets so
//!   that inside every row worker `k`'s slots precede worker `k + 1`'s.
//! * Part 2 scatters each worker's slice through its private offsets; the
//!   resulting rank equals the serial one.
//! * Part 3 splits the rows among the workers. Each one detects unique
//!   `(row, col)` pairs in its rows and records local column slots by rank
//!   position (`irank_p[i]` belongs to `rank[i]`).
//! * Part 4 merges the per-worker column counts the same way as the row
//!   counts and shifts each local slot by its worker's column offset.
//! * The scatter pass reuses the row split, so every output slot has a
//!   single owner and duplicates are summed in input order.
//!
//! No per-element loop takes a lock or performs an atomic read-modify-write.

mod shared;
mod team;

use std::ops::Range;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

pub use team::WorkerTeam;

use crate::csc::{accumulate, CscMatrix};
use crate::error::{Error, Result};
use crate::serial::{self, RankArray};
use crate::triplet::{self, AssemblyRequest, Dimensions, TripletList};
use shared::SharedSlice;

/// Inputs shorter than this are assembled serially by default.
pub const DEFAULT_SERIAL_THRESHOLD: usize = 10_000;

/// Environment variable consulted for the default worker count.
pub const THREADS_ENV: &str = "SPARSE_ASM_THREADS";

/// Worker count to use: the explicit request if any, otherwise the
/// available hardware parallelism.
pub fn default_threads(requested: Option<usize>) -> usize {
    requested
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

#[inline]
fn split_point(total: usize, k: usize, p: usize) -> usize {
    (total as u64 * k as u64 / p as u64) as usize
}

/// Static work split among `workers`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkerPartition {
    workers: usize,
    len: usize,
    nrows: usize,
}

impl WorkerPartition {
    pub fn new(workers: usize, len: usize, nrows: usize) -> Self {
        assert!(workers >= 1);
        Self { workers, len, nrows }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Input elements `[L k / p, L (k + 1) / p)` of worker `k`.
    pub fn elements(&self, k: usize) -> Range<usize> {
        split_point(self.len, k, self.workers)..split_point(self.len, k + 1, self.workers)
    }

    /// Unit-offset rows `[1 + M k / p, M (k + 1) / p]` of worker `k`,
    /// returned as an inclusive `(start, end)` pair; empty when `end < start`.
    pub fn rows(&self, k: usize) -> (usize, usize) {
        (
            1 + split_point(self.nrows, k, self.workers),
            split_point(self.nrows, k + 1, self.workers),
        )
    }
}

/// Unit-offset index range `1..=n` split evenly, as a 1-based inclusive
/// pair per worker.
fn index_share(n: usize, k: usize, p: usize) -> Range<usize> {
    1 + split_point(n, k, p)..1 + split_point(n, k + 1, p)
}

/// `p + 1` unit-offset row counters of length `nrows + 1`.
///
/// `arrays()[k][r - 1]` stands for row `r` of counter `k`. After
/// [`count_rows_parallel`] counter `k < p` holds worker `k`'s first slot in
/// each row; after [`build_rank_parallel`] counter `p - 1` holds the end of
/// each row, i.e. the serial row pointer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowCounters {
    arrays: Vec<Vec<u32>>,
}

impl RowCounters {
    pub fn arrays(&self) -> &[Vec<u32>] {
        &self.arrays
    }

    pub fn workers(&self) -> usize {
        self.arrays.len() - 1
    }

    /// The counter every worker reads row boundaries from after Part 2.
    pub fn final_counter(&self) -> &[u32] {
        &self.arrays[self.workers() - 1]
    }

    /// Input span `[start, end)` in rank order for unit-offset rows
    /// `rstart..=rend`, from the final counter.
    fn span(&self, (rstart, rend): (usize, usize)) -> Range<usize> {
        if rend < rstart || rend == 0 {
            return 0..0;
        }
        let fin = self.final_counter();
        let start = if rstart > 1 { fin[rstart - 2] as usize } else { 0 };
        start..fin[rend - 1] as usize
    }
}

/// Intermediate result of the parallel path: rank, inverse rank by rank
/// position, the retained row counters, and the final column pointer.
#[derive(Clone, Debug)]
pub struct ParallelPlan {
    pub rank: RankArray,
    pub irank_p: Vec<u32>,
    pub row_counters: RowCounters,
    pub col_ptr: Vec<u32>,
    dims: Dimensions,
}

impl ParallelPlan {
    pub fn workers(&self) -> usize {
        self.row_counters.workers()
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.col_ptr.last().copied().unwrap_or(0) as usize
    }

    /// The serial inverse rank, `irank[rank[i]] = irank_p[i]`.
    pub fn inverse_rank(&self) -> Vec<u32> {
        let mut irank = vec![0; self.irank_p.len()];
        for (&k, &slot) in self.rank.as_slice().iter().zip(&self.irank_p) {
            irank[k as usize] = slot;
        }
        irank
    }

    /// Rank-order input span scattered by worker `k`.
    pub fn worker_span(&self, k: usize) -> Range<usize> {
        let part = WorkerPartition::new(self.workers(), self.irank_p.len(), self.dims.nrows);
        self.row_counters.span(part.rows(k))
    }
}

/// Parallel index conversion with max-reduction.
///
/// Each worker converts a contiguous chunk and keeps a local maximum; the
/// global maximum is only updated, under a lock, when a local one exceeds
/// it. On bad input the error for the lowest offending position is
/// returned, so the result matches the serial conversion.
pub fn find_max_parallel(raw: &[f64], team: &WorkerTeam) -> Result<(Vec<u32>, usize)> {
    let p = team.size();
    let len = raw.len();
    let mut ix = vec![0u32; len];
    let global = AtomicU32::new(0);
    let merge = Mutex::new(());
    let bad: Mutex<Option<(usize, f64)>> = Mutex::new(None);
    {
        let out = SharedSlice::new(&mut ix);
        team.run(|k| {
            let range = split_point(len, k, p)..split_point(len, k + 1, p);
            // SAFETY: element chunks are disjoint across workers
            let dst = unsafe { out.range_mut(range.clone()) };
            let mut local = 0u32;
            let mut first_bad = None;
            for ((d, &value), position) in dst.iter_mut().zip(&raw[range.clone()]).zip(range) {
                match triplet::convert_index(value) {
                    Some(v) => {
                        *d = v;
                        local = local.max(v);
                    }
                    None => {
                        first_bad.get_or_insert((position, value));
                    }
                }
            }
            if local > global.load(Ordering::Relaxed) {
                let _guard = merge.lock().unwrap();
                if local > global.load(Ordering::Relaxed) {
                    global.store(local, Ordering::Relaxed);
                }
            }
            if let Some(b) = first_bad {
                let mut slot = bad.lock().unwrap();
                if slot.is_none_or(|(pos, _)| b.0 < pos) {
                    *slot = Some(b);
                }
            }
        });
    }
    if let Some((position, value)) = bad.into_inner().unwrap() {
        return Err(Error::BadIndex { position, value });
    }
    Ok((ix, global.into_inner() as usize))
}

/// Parallel counterpart of [`triplet::validate_and_convert`].
pub fn validate_and_convert_parallel(
    raw_i: &[f64],
    raw_j: &[f64],
    raw_s: &[f64],
    team: &WorkerTeam,
) -> Result<(TripletList, Dimensions)> {
    let len = triplet::check_raw_lengths(raw_i, raw_j, raw_s)?;
    let (rows, nrows) = find_max_parallel(raw_i, team)?;
    let (cols, ncols) = find_max_parallel(raw_j, team)?;
    let dims = Dimensions::new(nrows, ncols);
    let values = triplet::expand_values(raw_s, len);
    Ok((TripletList::from_validated(rows, cols, values, dims), dims))
}

fn shared_all(arrays: &mut [Vec<u32>]) -> Vec<SharedSlice<'_, u32>> {
    arrays.iter_mut().map(|a| SharedSlice::new(a)).collect()
}

/// Part 1: per-worker row histograms turned into per-worker row offsets.
pub fn count_rows_parallel(t: &TripletList, dims: Dimensions, team: &WorkerTeam) -> RowCounters {
    assert!(dims.covers(&t.extent()));
    let p = team.size();
    let m = dims.nrows;
    let rows = t.rows();
    let part = WorkerPartition::new(p, t.len(), m);
    let mut jr: Vec<Vec<u32>> = (0..=p).map(|_| vec![0u32; m + 1]).collect();

    {
        let sh = shared_all(&mut jr);
        // histogram of worker k goes to counter k + 1
        team.run(|k| {
            // SAFETY: counter k + 1 belongs to worker k in this phase
            let hist = unsafe { sh[k + 1].range_mut(0..m + 1) };
            for &r in &rows[part.elements(k)] {
                hist[r as usize - 1] += 1;
            }
        });
        // counter k becomes the count over workers 0..k
        team.run(|k| {
            for r in index_share(m, k, p) {
                for w in 1..p {
                    // SAFETY: rows are split among workers
                    unsafe {
                        let below = sh[w].read(r - 1);
                        sh[w + 1].write(r - 1, sh[w + 1].read(r - 1) + below);
                    }
                }
            }
        });
    }

    // row starts, serially over the M rows
    {
        let (head, tail) = jr.split_at_mut(p);
        let (starts, totals) = (&mut head[0], &tail[0]);
        for r in 1..=m {
            starts[r] += starts[r - 1] + totals[r - 1];
        }
    }

    {
        let sh = shared_all(&mut jr);
        team.run(|k| {
            for r in index_share(m, k, p) {
                // SAFETY: rows are split among workers
                unsafe {
                    let start = sh[0].read(r - 1);
                    for w in &sh[1..p] {
                        w.write(r - 1, w.read(r - 1) + start);
                    }
                }
            }
        });
    }

    RowCounters { arrays: jr }
}

/// Part 2: each worker scatters its input slice through its own row offsets.
pub fn build_rank_parallel(t: &TripletList, counters: &mut RowCounters, team: &WorkerTeam) -> RankArray {
    let p = team.size();
    assert_eq!(counters.workers(), p);
    let rows = t.rows();
    let len = t.len();
    let m1 = counters.arrays[0].len();
    let mut rank = vec![0u32; len];
    {
        let out = SharedSlice::new(&mut rank);
        let sh = shared_all(&mut counters.arrays);
        team.run(|k| {
            // SAFETY: counter k belongs to worker k; the slots it hands out
            // are disjoint from every other worker's
            let jr = unsafe { sh[k].range_mut(0..m1) };
            for i in split_point(len, k, p)..split_point(len, k + 1, p) {
                let slot = &mut jr[rows[i] as usize - 1];
                unsafe { out.write(*slot as usize, i as u32) };
                *slot += 1;
            }
        });
    }
    RankArray::from_vec(rank.into_iter().collect::<Vec<_>>())
}

/// Parts 3 and 4: uniqueness by row ranges, merged column pointer, and the
/// final per-worker shift of the permuted inverse rank.
pub fn compress_and_accumulate_parallel(
    t: &TripletList,
    rank: RankArray,
    counters: RowCounters,
    dims: Dimensions,
    team: &WorkerTeam,
) -> ParallelPlan {
    compress_and_accumulate_marked(t, rank, counters, dims, team, || {})
}

/// As [`compress_and_accumulate_parallel`], calling `after_part3` between
/// the two parts.
pub(crate) fn compress_and_accumulate_marked(
    t: &TripletList,
    rank: RankArray,
    counters: RowCounters,
    dims: Dimensions,
    team: &WorkerTeam,
    mut after_part3: impl FnMut(),
) -> ParallelPlan {
    assert!(dims.covers(&t.extent()));
    let p = team.size();
    assert_eq!(counters.workers(), p);
    let (n, len) = (dims.ncols, t.len());
    let cols = t.cols();
    let part = WorkerPartition::new(p, len, dims.nrows);
    let fin = counters.final_counter();
    let ranks = rank.as_slice();

    let mut irank_p = vec![0u32; len];
    let mut jc: Vec<Vec<u32>> = (0..=p).map(|_| vec![0u32; n + 1]).collect();

    // Part 3
    {
        let irp = SharedSlice::new(&mut irank_p);
        let sh = shared_all(&mut jc);
        team.run(|k| {
            let (rstart, rend) = part.rows(k);
            let span = counters.span((rstart, rend));
            let mut hcol = vec![0u32; n];
            // SAFETY: counter k + 1 and the rank-order span of rows
            // rstart..=rend belong to worker k
            let counts = unsafe { sh[k + 1].range_mut(0..n + 1) };
            let dst = unsafe { irp.range_mut(span.clone()) };
            let mut i = span.start;
            for row in rstart..=rend {
                let end = fin[row - 1] as usize;
                let row = row as u32;
                while i < end {
                    let col = cols[ranks[i] as usize] as usize;
                    if hcol[col - 1] < row {
                        hcol[col - 1] = row;
                        counts[col] += 1;
                    }
                    dst[i - span.start] = counts[col] - 1;
                    i += 1;
                }
            }
        });
    }

    after_part3();

    // Part 4: counter k becomes the count over workers 0..k
    {
        let sh = shared_all(&mut jc);
        team.run(|k| {
            for c in index_share(n, k, p) {
                for w in 1..p {
                    // SAFETY: columns are split among workers
                    unsafe {
                        let below = sh[w].read(c);
                        sh[w + 1].write(c, sh[w + 1].read(c) + below);
                    }
                }
            }
        });
    }
    {
        let (head, tail) = jc.split_at_mut(p);
        let (ptr, totals) = (&mut head[0], &tail[0]);
        for c in 1..=n {
            ptr[c] += ptr[c - 1] + totals[c];
        }
    }
    {
        let sh = shared_all(&mut jc);
        team.run(|k| {
            for c in index_share(n, k, p) {
                // SAFETY: columns are split among workers
                unsafe {
                    let start = sh[0].read(c - 1);
                    for w in &sh[1..p] {
                        w.write(c, w.read(c) + start);
                    }
                }
            }
        });
    }
    {
        let irp = SharedSlice::new(&mut irank_p);
        let jc = &jc;
        team.run(|k| {
            let span = counters.span(part.rows(k));
            // SAFETY: same spans as in Part 3
            let dst = unsafe { irp.range_mut(span.clone()) };
            if k == 0 {
                let starts = &jc[0];
                for (slot, &r) in dst.iter_mut().zip(&ranks[span]) {
                    *slot += starts[cols[r as usize] as usize - 1];
                }
            } else {
                let offsets = &jc[k];
                for (slot, &r) in dst.iter_mut().zip(&ranks[span]) {
                    *slot += offsets[cols[r as usize] as usize];
                }
            }
        });
    }

    jc.truncate(1);
    let col_ptr = jc.pop().expect("column pointer");
    ParallelPlan {
        rank,
        irank_p,
        row_counters: counters,
        col_ptr,
        dims,
    }
}

/// Writes row indices and sums values, each worker over the rows it owned
/// in Part 3, in ascending rank position.
pub fn scatter_parallel(plan: ParallelPlan, t: &TripletList, team: &WorkerTeam) -> CscMatrix {
    scatter_with_capacity(plan, t, None, team)
}

pub(crate) fn scatter_with_capacity(
    plan: ParallelPlan,
    t: &TripletList,
    capacity_hint: Option<usize>,
    team: &WorkerTeam,
) -> CscMatrix {
    let p = team.size();
    assert_eq!(plan.workers(), p);
    let nnz = plan.nnz();
    let capacity = capacity_hint.map_or(nnz, |h| h.max(nnz));
    let mut ir = Vec::with_capacity(capacity);
    ir.resize(nnz, 0u32);
    let mut pr = Vec::with_capacity(capacity);
    pr.resize(nnz, 0.0f64);
    let (rows, values) = (t.rows(), t.values());
    {
        let ir_sh = SharedSlice::new(&mut ir);
        let pr_sh = SharedSlice::new(&mut pr);
        let plan = &plan;
        let ranks = plan.rank.as_slice();
        team.run(|k| {
            let span = plan.worker_span(k);
            let (slots, order) = (&plan.irank_p[span.clone()], &ranks[span]);
            // SAFETY: the slots reached from a worker's rows are owned by
            // that worker alone
            for (&d, &r) in slots.iter().zip(order) {
                let (d, r) = (d as usize, r as usize);
                unsafe {
                    ir_sh.write(d, rows[r] - 1);
                    pr_sh.write(d, accumulate(pr_sh.read(d), values[r]));
                }
            }
        });
    }
    let ParallelPlan {
        rank,
        irank_p,
        row_counters,
        col_ptr,
        dims,
    } = plan;
    drop((rank, irank_p, row_counters));
    CscMatrix::from_parts(dims, col_ptr, ir, pr)
}

/// Reusable parallel assembler owning its worker team.
#[derive(Debug)]
pub struct ParallelAssembler {
    team: WorkerTeam,
    serial_threshold: usize,
}

impl ParallelAssembler {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidThreadCount);
        }
        Ok(Self {
            team: WorkerTeam::new(threads),
            serial_threshold: DEFAULT_SERIAL_THRESHOLD,
        })
    }

    /// Inputs with fewer elements than `threshold` take the serial path;
    /// 0 forces the parallel path for every input.
    pub fn serial_threshold(mut self, threshold: usize) -> Self {
        self.serial_threshold = threshold;
        self
    }

    pub fn threads(&self) -> usize {
        self.team.size()
    }

    pub fn team(&self) -> &WorkerTeam {
        &self.team
    }

    pub fn assemble(&self, req: &AssemblyRequest) -> CscMatrix {
        let t = req.triplets();
        if t.len() < self.serial_threshold {
            return serial::assemble_serial(req);
        }
        let team = &self.team;
        let dims = req.dims();
        let mut counters = count_rows_parallel(t, dims, team);
        let rank = build_rank_parallel(t, &mut counters, team);
        let plan = compress_and_accumulate_parallel(t, rank, counters, dims, team);
        scatter_with_capacity(plan, t, req.capacity_hint(), team)
    }

    /// Plan without the scatter, for inspection.
    pub fn plan(&self, req: &AssemblyRequest) -> ParallelPlan {
        let (t, dims, team) = (req.triplets(), req.dims(), &self.team);
        let mut counters = count_rows_parallel(t, dims, team);
        let rank = build_rank_parallel(t, &mut counters, team);
        compress_and_accumulate_parallel(t, rank, counters, dims, team)
    }
}

/// One-shot parallel assembly with `threads` workers.
pub fn assemble_parallel(req: &AssemblyRequest, threads: usize) -> Result<CscMatrix> {
    Ok(ParallelAssembler::new(threads)?.assemble(req))
}
