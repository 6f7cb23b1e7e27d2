//! Memory-access and allocation accounting for the assembly algorithms.
//!
//! Counting rule used by the instrumented build: within one loop iteration,
//! each distinct array element touched counts as one access (a
//! read-modify-write of the same element is one access). An access is
//! *direct* when its subscript is a loop induction variable or a fixed
//! offset of one, *indirect* otherwise. Indirect accesses into arrays whose
//! length is the element count `L` are additionally tallied as
//! `indirect_l`. Allocation sizes are in integer words, with one `f64`
//! counting as two words.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

#[cfg(feature = "instrument")]
use crate::csc::CscMatrix;
use crate::error::Result;
use crate::triplet::AssemblyRequest;

/// Stages of an assembly run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Preprocess,
    Part1,
    Part2,
    Part3,
    Part4,
    Postprocess,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Preprocess,
        Phase::Part1,
        Phase::Part2,
        Phase::Part3,
        Phase::Part4,
        Phase::Postprocess,
    ];

    /// Parts 1 to 4, the span covered by the access-count tables.
    pub const PARTS: [Phase; 4] = [Phase::Part1, Phase::Part2, Phase::Part3, Phase::Part4];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Preprocess => "preprocess",
            Phase::Part1 => "part1",
            Phase::Part2 => "part2",
            Phase::Part3 => "part3",
            Phase::Part4 => "part4",
            Phase::Postprocess => "postprocess",
        }
    }
}

/// Named arrays touched by the assembly loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Buf {
    Rows,
    Cols,
    RowPtr,
    Rank,
    ColCache,
    ColPtr,
    InvRank,
}

impl Buf {
    #[cfg(feature = "instrument")]
    fn sized_by_len(self) -> bool {
        matches!(self, Buf::Rows | Buf::Cols | Buf::Rank | Buf::InvRank)
    }
}

/// Hooks compiled into the serial loops. Every method defaults to a no-op
/// so [`NoProbe`] vanishes after monomorphization.
pub(crate) trait Probe {
    #[inline(always)]
    fn phase(&mut self, _phase: Phase) {}
    #[inline(always)]
    fn direct(&mut self, _buf: Buf) {}
    #[inline(always)]
    fn indirect(&mut self, _buf: Buf) {}
    #[inline(always)]
    fn alloc(&mut self, _words: usize) {}
    #[inline(always)]
    fn free(&mut self, _words: usize) {}
}

pub(crate) struct NoProbe;

impl Probe for NoProbe {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AccessCounts {
    pub accesses: u64,
    pub indirect: u64,
    pub indirect_l: u64,
}

impl std::ops::AddAssign for AccessCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.accesses += rhs.accesses;
        self.indirect += rhs.indirect;
        self.indirect_l += rhs.indirect_l;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseCost {
    pub phase: Phase,
    #[serde(flatten)]
    pub counts: AccessCounts,
}

/// A labelled allocation high-water candidate, in integer words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AllocPoint {
    pub label: &'static str,
    pub words: u64,
}

/// Access and allocation figures for one assembly, predicted or measured.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub total_accesses: u64,
    pub indirect_accesses: u64,
    pub indirect_l_accesses: u64,
    /// Largest simultaneously live auxiliary allocation, in integer words.
    pub peak_aux_words: u64,
    pub alloc_points: Vec<AllocPoint>,
    pub phases: Vec<PhaseCost>,
}

impl CostReport {
    fn from_phases(phases: Vec<PhaseCost>, alloc_points: Vec<AllocPoint>, peak: u64) -> Self {
        let mut total = AccessCounts::default();
        for p in &phases {
            total += p.counts;
        }
        Self {
            total_accesses: total.accesses,
            indirect_accesses: total.indirect,
            indirect_l_accesses: total.indirect_l,
            peak_aux_words: peak,
            alloc_points,
            phases,
        }
    }

    pub fn phase(&self, phase: Phase) -> Option<&AccessCounts> {
        self.phases
            .iter()
            .find(|p| p.phase == phase)
            .map(|p| &p.counts)
    }

    pub fn alloc_point(&self, label: &str) -> Option<u64> {
        self.alloc_points
            .iter()
            .find(|a| a.label == label)
            .map(|a| a.words)
    }
}

fn phase_cost(phase: Phase, accesses: u64, indirect: u64, indirect_l: u64) -> PhaseCost {
    PhaseCost {
        phase,
        counts: AccessCounts {
            accesses,
            indirect,
            indirect_l,
        },
    }
}

/// Serial working set while Part 3 runs: row counter, rank, column pointer,
/// column cache and inverse rank.
pub fn serial_part3_words(len: u64, nrows: u64, ncols: u64) -> u64 {
    2 * ncols + 1 + nrows + 1 + 2 * len
}

/// Serial working set once the output exists: column pointer, row indices,
/// values (two words each) and the inverse rank.
pub fn serial_output_words(len: u64, ncols: u64, nnz: u64) -> u64 {
    ncols + 1 + 3 * nnz + len
}

/// Parallel working set once the output exists.
pub fn parallel_output_words(len: u64, nrows: u64, ncols: u64, nnz: u64, workers: u64) -> u64 {
    ncols + 1 + (nrows + 1) * (workers + 1) + 3 * nnz + 2 * len
}

/// Parallel working set during the merged uniqueness pass: rank, permuted
/// inverse rank, all row and column counters, and one column cache per
/// worker.
pub fn parallel_part3_words(len: u64, nrows: u64, ncols: u64, workers: u64) -> u64 {
    2 * len + (nrows + 1) * (workers + 1) + (ncols + 1) * (workers + 1) + workers * ncols
}

/// Closed-form access counts and allocation candidates of the serial
/// algorithm.
pub fn predict_serial_cost(len: u64, nrows: u64, ncols: u64, nnz: u64) -> CostReport {
    let (l, m, n) = (len, nrows, ncols);
    let phases = vec![
        phase_cost(Phase::Part1, 2 * l + m, l, 0),
        phase_cost(Phase::Part2, 3 * l, 2 * l, l),
        phase_cost(Phase::Part3, 5 * l + m, 4 * l, 2 * l),
        phase_cost(Phase::Part4, 3 * l + n, l, 0),
    ];
    let s1 = serial_part3_words(l, m, n);
    let s2 = serial_output_words(l, n, nnz);
    let alloc = vec![
        AllocPoint {
            label: "S1",
            words: s1,
        },
        AllocPoint {
            label: "S2",
            words: s2,
        },
    ];
    CostReport::from_phases(phases, alloc, s1.max(s2))
}

/// Closed-form access counts and allocation candidates of the parallel
/// algorithm with `workers` threads. Accesses to length-`workers` arrays
/// are ignored.
pub fn predict_parallel_cost(len: u64, nrows: u64, ncols: u64, nnz: u64, workers: u64) -> CostReport {
    let (l, m, n, p) = (len, nrows, ncols, workers);
    let phases = vec![
        phase_cost(Phase::Part1, 2 * l + 3 * m * p, l, 0),
        phase_cost(Phase::Part2, 3 * l, 2 * l, l),
        phase_cost(Phase::Part3, 5 * l + m, 3 * l, 2 * l),
        phase_cost(Phase::Part4, 4 * l + 3 * n * p, 2 * l, l),
    ];
    let s3 = parallel_output_words(l, m, n, nnz, p);
    let during = parallel_part3_words(l, m, n, p);
    let alloc = vec![
        AllocPoint {
            label: "S3",
            words: s3,
        },
        AllocPoint {
            label: "part3+4",
            words: during,
        },
    ];
    CostReport::from_phases(phases, alloc, s3.max(during))
}

#[cfg(feature = "instrument")]
pub(crate) struct CountingProbe {
    current: Option<usize>,
    phases: [AccessCounts; 6],
    live: u64,
    peak: u64,
}

#[cfg(feature = "instrument")]
impl CountingProbe {
    pub(crate) fn new() -> Self {
        Self {
            current: None,
            phases: [AccessCounts::default(); 6],
            live: 0,
            peak: 0,
        }
    }

    fn slot(&mut self) -> &mut AccessCounts {
        let k = self.current.expect("access recorded outside a phase");
        &mut self.phases[k]
    }

    pub(crate) fn into_report(self, dims_len_nnz: (u64, u64, u64, u64)) -> CostReport {
        let (l, m, n, nnz) = dims_len_nnz;
        let phases = Phase::PARTS
            .iter()
            .map(|&phase| PhaseCost {
                phase,
                counts: self.phases[phase as usize],
            })
            .collect();
        let alloc = predict_serial_cost(l, m, n, nnz).alloc_points;
        CostReport::from_phases(phases, alloc, self.peak)
    }
}

#[cfg(feature = "instrument")]
impl Probe for CountingProbe {
    fn phase(&mut self, phase: Phase) {
        self.current = Some(phase as usize);
    }

    fn direct(&mut self, _buf: Buf) {
        self.slot().accesses += 1;
    }

    fn indirect(&mut self, buf: Buf) {
        let s = self.slot();
        s.accesses += 1;
        s.indirect += 1;
        if buf.sized_by_len() {
            s.indirect_l += 1;
        }
    }

    fn alloc(&mut self, words: usize) {
        self.live += words as u64;
        self.peak = self.peak.max(self.live);
    }

    fn free(&mut self, words: usize) {
        self.live -= words as u64;
    }
}

/// Runs the serial assembly with access counting enabled.
///
/// Only Parts 1 to 4 contribute to the access totals; the peak allocation
/// figure covers the whole run including the output arrays.
#[cfg(feature = "instrument")]
pub fn measure_serial_cost(req: &AssemblyRequest) -> Result<CostReport> {
    measure_serial(req).map(|(_, report)| report)
}

#[cfg(not(feature = "instrument"))]
pub fn measure_serial_cost(_req: &AssemblyRequest) -> Result<CostReport> {
    Err(crate::error::Error::InstrumentationUnavailable)
}

/// Instrumented serial assembly returning the matrix alongside its report.
#[cfg(feature = "instrument")]
pub fn measure_serial(req: &AssemblyRequest) -> Result<(CscMatrix, CostReport)> {
    let mut probe = CountingProbe::new();
    let m = crate::serial::assemble_probed(req, &mut probe);
    let dims = req.dims();
    let report = probe.into_report((
        req.triplets().len() as u64,
        dims.nrows as u64,
        dims.ncols as u64,
        m.nnz() as u64,
    ));
    Ok((m, report))
}

/// A global allocator wrapper tracking live and peak heap bytes.
///
/// Install with `#[global_allocator]` in a binary or test target, call
/// [`reset_peak`](Self::reset_peak) before the region of interest and read
/// [`peak_above`](Self::peak_above) afterwards.
pub struct CountingAllocator<A = System> {
    inner: A,
    live: AtomicUsize,
    peak: AtomicUsize,
}

impl CountingAllocator<System> {
    pub const fn system() -> Self {
        Self::new(System)
    }
}

impl<A> CountingAllocator<A> {
    pub const fn new(inner: A) -> Self {
        Self {
            inner,
            live: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn live_bytes(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }

    pub fn peak_bytes(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    /// Restarts peak tracking from the current live size and returns it.
    pub fn reset_peak(&self) -> usize {
        let live = self.live.load(Ordering::SeqCst);
        self.peak.store(live, Ordering::SeqCst);
        live
    }

    /// Peak growth since `baseline` bytes, rounded up to 4-byte words.
    pub fn peak_above(&self, baseline: usize) -> u64 {
        (self.peak_bytes().saturating_sub(baseline) as u64).div_ceil(4)
    }

    fn grow(&self, bytes: usize) {
        let now = self.live.fetch_add(bytes, Ordering::SeqCst) + bytes;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    fn shrink(&self, bytes: usize) {
        self.live.fetch_sub(bytes, Ordering::SeqCst);
    }
}

unsafe impl<A: GlobalAlloc> GlobalAlloc for CountingAllocator<A> {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = self.inner.alloc(layout);
        if !ptr.is_null() {
            self.grow(layout.size());
        }
        ptr
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let ptr = self.inner.alloc_zeroed(layout);
        if !ptr.is_null() {
            self.grow(layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        self.inner.dealloc(ptr, layout);
        self.shrink(layout.size());
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = self.inner.realloc(ptr, layout, new_size);
        if !out.is_null() {
            if new_size > layout.size() {
                self.grow(new_size - layout.size());
            } else {
                self.shrink(layout.size() - new_size);
            }
        }
        out
    }
}
