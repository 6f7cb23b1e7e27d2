//! Benchmark data generator and timing harness.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::csc::CscMatrix;
use crate::error::{Error, Result};
use crate::instrument::Phase;
use crate::io::BenchRow;
use crate::oracle::assemble_oracle;
use crate::parallel::{self, WorkerTeam};
use crate::serial;
use crate::triplet::{validate_and_convert, AssemblyRequest, Dimensions, TripletList, MAX_INDEX};

/// Parameters of the random benchmark generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DatasetSpec {
    pub siz: usize,
    pub nnz_row: usize,
    pub nrep: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// Generated input length, `siz * nnz_row * nrep`.
    pub fn len(&self) -> usize {
        self.siz * self.nnz_row * self.nrep
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Expected distinct pairs, `siz^2 (1 - (1 - 1/siz)^nnz_row)`.
    pub fn expected_nnz(&self) -> f64 {
        let s = self.siz as f64;
        s * s * (1.0 - (1.0 - 1.0 / s).powi(self.nnz_row as i32))
    }

    fn validate(&self) -> Result<()> {
        if self.siz == 0 || self.nnz_row == 0 || self.nrep == 0 {
            return Err(Error::InvalidParameter(format!(
                "size, nnz per row and repetitions must be positive (got {}, {}, {})",
                self.siz, self.nnz_row, self.nrep
            )));
        }
        let len = (self.siz as u128) * (self.nnz_row as u128) * (self.nrep as u128);
        if self.siz > MAX_INDEX || len > MAX_INDEX as u128 {
            return Err(Error::LimitExceeded {
                what: "generated length",
                value: len.min(usize::MAX as u128) as usize,
                limit: MAX_INDEX,
            });
        }
        Ok(())
    }
}

/// The three standard data sets, with `siz` scaled by `scale` and rounded.
pub fn dataset_config(id: u32, scale: f64) -> Result<DatasetSpec> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidParameter(format!("scale {scale} is not in (0, 1]")));
    }
    let (siz, nnz_row, nrep) = match id {
        1 => (10_000, 50, 5),
        2 => (50_000, 50, 1),
        3 => (50_000, 10, 5),
        _ => return Err(Error::UnknownDataset(id)),
    };
    let siz = ((siz as f64 * scale).round() as usize).max(1);
    Ok(DatasetSpec {
        siz,
        nnz_row,
        nrep,
        seed: id as u64,
    })
}

/// Rows `1..=siz` repeated `nnz_row` times, uniform random columns, the
/// block repeated `nrep` times, then one global shuffle. Values are 1.
pub fn gen_ransparse(spec: &DatasetSpec) -> Result<TripletList> {
    spec.validate()?;
    let DatasetSpec { siz, nnz_row, nrep, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let block = siz * nnz_row;

    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(spec.len());
    for k in 0..block {
        let row = (k % siz) as u32 + 1;
        pairs.push((row, rng.gen_range(1..=siz as u32)));
    }
    for _ in 1..nrep {
        pairs.extend_from_within(..block);
    }
    pairs.shuffle(&mut rng);

    let (rows, cols): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
    let values = vec![1.0; rows.len()];
    let dims = Dimensions::new(siz, siz);
    Ok(TripletList::from_validated(rows, cols, values, dims))
}

/// Triplets in the raw floating-point form taken by the pre-processing step.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTriplets {
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub values: Vec<f64>,
}

impl RawTriplets {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl From<&TripletList> for RawTriplets {
    fn from(t: &TripletList) -> Self {
        Self {
            rows: t.rows().iter().map(|&r| r as f64).collect(),
            cols: t.cols().iter().map(|&c| c as f64).collect(),
            values: t.values().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Implementation {
    Serial,
    Parallel(usize),
    Oracle,
}

impl Implementation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Serial => "serial",
            Self::Parallel(_) => "parallel",
            Self::Oracle => "oracle",
        }
    }

    pub fn threads(&self) -> usize {
        match self {
            Self::Parallel(p) => *p,
            _ => 1,
        }
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parallel(p) => write!(f, "parallel(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Wall time per phase; the oracle only fills pre- and post-processing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub seconds: [f64; 6],
}

impl PhaseTimes {
    pub fn get(&self, phase: Phase) -> f64 {
        self.seconds[phase as usize]
    }

    pub fn total(&self) -> f64 {
        self.seconds.iter().sum()
    }

    /// Fraction of the total spent in `phase`.
    pub fn share(&self, phase: Phase) -> f64 {
        let t = self.total();
        if t > 0.0 {
            self.get(phase) / t
        } else {
            0.0
        }
    }

    fn add(&mut self, other: &PhaseTimes) {
        for (a, b) in self.seconds.iter_mut().zip(other.seconds) {
            *a += b;
        }
    }

    fn scale(&mut self, f: f64) {
        self.seconds.iter_mut().for_each(|s| *s *= f);
    }
}

struct Stopwatch {
    times: PhaseTimes,
    last: Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            times: PhaseTimes::default(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, phase: Phase) {
        let now = Instant::now();
        self.times.seconds[phase as usize] += (now - self.last).as_secs_f64();
        self.last = now;
    }
}

/// Timing statistics for one implementation.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub implementation: Implementation,
    pub reps: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub phases: PhaseTimes,
    pub len: usize,
    pub dims: Dimensions,
    pub nnz: usize,
    pub speedup_vs_serial: Option<f64>,
}

impl BenchResult {
    pub fn to_row(&self, dataset_id: u32) -> BenchRow {
        BenchRow {
            dataset_id,
            implementation: self.implementation.name().to_string(),
            threads: self.implementation.threads(),
            mean_seconds: self.mean_seconds,
            min_seconds: self.min_seconds,
            reps: self.reps,
            len: self.len,
            nrows: self.dims.nrows,
            ncols: self.dims.ncols,
            nnz: self.nnz,
            speedup_vs_serial: self.speedup_vs_serial,
        }
    }
}

fn run_serial(raw: &RawTriplets) -> Result<(CscMatrix, PhaseTimes)> {
    let mut sw = Stopwatch::start();
    let (t, dims) = validate_and_convert(&raw.rows, &raw.cols, &raw.values)?;
    sw.lap(Phase::Preprocess);
    let mut rc = serial::count_rows(&t, dims);
    sw.lap(Phase::Part1);
    let rank = serial::build_rank(&t, &mut rc);
    sw.lap(Phase::Part2);
    let plan = serial::compress_columns(&t, rc, rank, dims);
    sw.lap(Phase::Part3);
    let plan = serial::accumulate_columns(plan, &t);
    sw.lap(Phase::Part4);
    let m = serial::scatter_serial(plan, &t);
    sw.lap(Phase::Postprocess);
    Ok((m, sw.times))
}

fn run_parallel(raw: &RawTriplets, team: &WorkerTeam) -> Result<(CscMatrix, PhaseTimes)> {
    let mut sw = Stopwatch::start();
    let (t, dims) = parallel::validate_and_convert_parallel(&raw.rows, &raw.cols, &raw.values, team)?;
    sw.lap(Phase::Preprocess);
    let mut counters = parallel::count_rows_parallel(&t, dims, team);
    sw.lap(Phase::Part1);
    let rank = parallel::build_rank_parallel(&t, &mut counters, team);
    sw.lap(Phase::Part2);
    let plan = parallel::compress_and_accumulate_marked(&t, rank, counters, dims, team, || sw.lap(Phase::Part3));
    sw.lap(Phase::Part4);
    let m = parallel::scatter_with_capacity(plan, &t, None, team);
    sw.lap(Phase::Postprocess);
    Ok((m, sw.times))
}

fn run_oracle(raw: &RawTriplets) -> Result<(CscMatrix, PhaseTimes)> {
    let mut sw = Stopwatch::start();
    let (t, _) = validate_and_convert(&raw.rows, &raw.cols, &raw.values)?;
    sw.lap(Phase::Preprocess);
    let m = assemble_oracle(&AssemblyRequest::new(t));
    sw.lap(Phase::Postprocess);
    Ok((m, sw.times))
}

/// Times each implementation on `raw`.
///
/// Every implementation first runs once untimed; those outputs must be
/// bit-identical or [`Error::ResultMismatch`] is returned before any
/// timing. Then each implementation runs `reps` timed repetitions.
pub fn run_bench(raw: &RawTriplets, impls: &[Implementation], reps: usize) -> Result<Vec<BenchResult>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let mut teams = Vec::with_capacity(impls.len());
    for imp in impls {
        teams.push(match imp {
            Implementation::Parallel(0) => return Err(Error::InvalidThreadCount),
            Implementation::Parallel(p) => Some(WorkerTeam::new(*p)),
            _ => None,
        });
    }
    let run = |k: usize| match impls[k] {
        Implementation::Serial => run_serial(raw),
        Implementation::Parallel(_) => run_parallel(raw, teams[k].as_ref().unwrap()),
        Implementation::Oracle => run_oracle(raw),
    };

    let mut reference: Option<(Implementation, CscMatrix)> = None;
    for (k, &imp) in impls.iter().enumerate() {
        let (m, _) = run(k)?;
        match &reference {
            None => reference = Some((imp, m)),
            Some((first, r)) => {
                if let Some(detail) = r.first_difference(&m) {
                    return Err(Error::ResultMismatch {
                        left: first.to_string(),
                        right: imp.to_string(),
                        detail,
                    });
                }
            }
        }
    }
    let Some((_, reference)) = reference else {
        return Ok(Vec::new());
    };

    let mut results = Vec::with_capacity(impls.len());
    for (k, &imp) in impls.iter().enumerate() {
        let mut phases = PhaseTimes::default();
        let (mut sum, mut min) = (0.0, f64::INFINITY);
        for _ in 0..reps {
            let start = Instant::now();
            let (m, times) = run(k)?;
            let secs = start.elapsed().as_secs_f64();
            drop(m);
            sum += secs;
            min = min.min(secs);
            phases.add(&times);
        }
        phases.scale(1.0 / reps as f64);
        results.push(BenchResult {
            implementation: imp,
            reps,
            mean_seconds: sum / reps as f64,
            min_seconds: min,
            phases,
            len: raw.len(),
            dims: reference.dims(),
            nnz: reference.nnz(),
            speedup_vs_serial: None,
        });
    }
    if let Some(serial_mean) = results
        .iter()
        .find(|r| r.implementation == Implementation::Serial)
        .map(|r| r.mean_seconds)
    {
        for r in &mut results {
            r.speedup_vs_serial = Some(serial_mean / r.mean_seconds);
        }
    }
    Ok(results)
}

/// Best-of-`reps` time of `a[j] = b[j]` split over `team`.
fn copy_time(a: &mut [f64], b: &[f64], team: &WorkerTeam, reps: usize) -> Duration {
    let p = team.size();
    let n = b.len();
    let mut best = Duration::MAX;
    for _ in 0..reps {
        let chunks: Vec<_> = {
            let mut rest = &mut a[..];
            let mut out = Vec::with_capacity(p);
            for k in 0..p {
                let len = (n * (k + 1) / p) - (n * k / p);
                let (head, tail) = rest.split_at_mut(len);
                out.push(std::sync::Mutex::new(head));
                rest = tail;
            }
            out
        };
        let start = Instant::now();
        team.run(|k| {
            let mut dst = chunks[k].lock().unwrap();
            let lo = n * k / p;
            let src = &b[lo..lo + dst.len()];
            dst.copy_from_slice(src);
        });
        best = best.min(start.elapsed());
    }
    best
}

/// Speedup of a `p`-worker array copy of `n` doubles over a single worker.
pub fn stream_copy_bandwidth(n: usize, p: usize) -> f64 {
    assert!(p >= 1, "at least one worker");
    let b: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let mut a = vec![0.0f64; n];
    let reps = 5;
    let single = copy_time(&mut a, &b, &WorkerTeam::new(1), reps);
    assert!(a == b, "copy kernel produced a wrong result");
    a.iter_mut().for_each(|x| *x = 0.0);
    let multi = copy_time(&mut a, &b, &WorkerTeam::new(p), reps);
    assert!(a == b, "copy kernel produced a wrong result");
    single.as_secs_f64() / multi.as_secs_f64().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_lengths() {
        for id in 1..=3 {
            assert_eq!(dataset_config(id, 1.0).unwrap().len(), 2_500_000);
        }
        let d3 = dataset_config(3, 0.1).unwrap();
        assert_eq!((d3.siz, d3.len()), (5_000, 250_000));
        let d2 = dataset_config(2, 1.0).unwrap();
        assert_eq!((d2.siz, d2.nnz_row), (50_000, 50));
        assert!(matches!(dataset_config(4, 1.0), Err(Error::UnknownDataset(4))));
        assert!(dataset_config(1, 0.0).is_err());
        assert!(dataset_config(1, 1.5).is_err());
    }

    #[test]
    fn generator_shape() {
        let spec = DatasetSpec {
            siz: 40,
            nnz_row: 3,
            nrep: 2,
            seed: 7,
        };
        let t = gen_ransparse(&spec).unwrap();
        assert_eq!(t.len(), 240);
        assert!(t.values().iter().all(|&v| v == 1.0));
        let mut per_row = [0; 41];
        t.rows().iter().for_each(|&r| per_row[r as usize] += 1);
        assert!(per_row[1..].iter().all(|&c| c == 6));
        // every (row, col) pair occurs an even number of times
        let mut pairs: Vec<_> = t.rows().iter().zip(t.cols()).collect();
        pairs.sort();
        for run in pairs.chunk_by(|a, b| a == b) {
            assert_eq!(run.len() % 2, 0);
        }
        assert_eq!(gen_ransparse(&spec).unwrap(), t);
    }

    #[test]
    fn generator_rejects_zero() {
        let spec = DatasetSpec {
            siz: 0,
            nnz_row: 3,
            nrep: 1,
            seed: 0,
        };
        assert!(matches!(gen_ransparse(&spec), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn expected_nnz_data1() {
        let e = dataset_config(1, 1.0).unwrap().expected_nnz();
        assert!((e - 498_777.0).abs() < 1.0, "{e}");
    }

    #[test]
    fn copy_kernel() {
        let s = stream_copy_bandwidth(10_000, 3);
        assert!(s.is_finite() && s > 0.0);
    }
}
