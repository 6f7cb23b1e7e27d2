use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sparse_asm::bench::{self, DatasetSpec, Implementation, RawTriplets};
use sparse_asm::fuzz::{random_request, FuzzConfig};
use sparse_asm::instrument::{self, CostReport, Phase};
use sparse_asm::io;
use sparse_asm::parallel::THREADS_ENV;
use sparse_asm::{
    assemble_oracle, assemble_serial, default_threads, prune_explicit_zeros, AssemblyRequest, CscMatrix,
    Dimensions, ParallelAssembler,
};

#[derive(Parser)]
#[command(name = "sparse-asm", version, about = "Assemble sparse matrices from triplets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a MatrixMarket triplet file into a compressed matrix.
    Assemble {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Row count, overriding the file header.
        #[arg(long)]
        m: Option<usize>,
        /// Column count, overriding the file header.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        /// Use the serial path.
        #[arg(long)]
        serial: bool,
        /// Drop entries whose sum is zero.
        #[arg(long)]
        prune_zeros: bool,
    },
    /// Generate a random benchmark triplet file.
    Gen {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        nnz_row: usize,
        #[arg(long, default_value_t = 1)]
        nrep: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that the oracle, serial and parallel paths agree bit for bit.
    Verify {
        #[arg(long, required_unless_present = "random")]
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        /// Check this many seeded random instances instead of a file.
        #[arg(long)]
        random: Option<u64>,
    },
    /// Time the implementations on a standard data set.
    Bench {
        #[arg(long, default_value_t = 1)]
        dataset: u32,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 40)]
        reps: usize,
        #[arg(long, value_delimiter = ',', env = THREADS_ENV)]
        threads: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write instrumented access and allocation counts.
        #[arg(long)]
        cost_report: bool,
        /// Include the sorting oracle in the timings.
        #[arg(long)]
        oracle: bool,
        /// Also measure a parallel copy of this many doubles.
        #[arg(long)]
        stream: Option<usize>,
    },
}

/// A verification failure, reported with exit code 2.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Mismatch>() || matches!(e.downcast_ref(), Some(sparse_asm::Error::ResultMismatch { .. })) => {
            eprintln!("mismatch: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Assemble {
            input,
            output,
            m,
            n,
            threads,
            serial,
            prune_zeros,
        } => cmd_assemble(&input, &output, m, n, threads, serial, prune_zeros),
        Command::Gen {
            size,
            nnz_row,
            nrep,
            seed,
            out,
        } => cmd_gen(
            DatasetSpec {
                siz: size,
                nnz_row,
                nrep,
                seed,
            },
            &out,
        ),
        Command::Verify { input, threads, random } => cmd_verify(input.as_deref(), &threads, random),
        Command::Bench {
            dataset,
            scale,
            reps,
            threads,
            out,
            cost_report,
            oracle,
            stream,
        } => cmd_bench(dataset, scale, reps, &threads, &out, cost_report, oracle, stream),
    }
}

fn read_request(path: &Path, m: Option<usize>, n: Option<usize>) -> anyhow::Result<AssemblyRequest> {
    let (t, header) = io::read_triplets_matrixmarket(path)?;
    let dims = Dimensions::new(m.unwrap_or(header.nrows), n.unwrap_or(header.ncols));
    Ok(AssemblyRequest::new(t).with_dims(dims)?)
}

fn cmd_assemble(
    input: &Path,
    output: &Path,
    m: Option<usize>,
    n: Option<usize>,
    threads: Option<usize>,
    serial: bool,
    prune_zeros: bool,
) -> anyhow::Result<()> {
    let req = read_request(input, m, n)?;
    let start = Instant::now();
    let (mut matrix, mode) = if serial {
        (assemble_serial(&req), "serial".to_string())
    } else {
        let p = default_threads(threads);
        let asm = ParallelAssembler::new(p)?;
        (asm.assemble(&req), format!("parallel p={p}"))
    };
    if prune_zeros {
        matrix = prune_explicit_zeros(&matrix);
    }
    let elapsed = start.elapsed();
    io::write_csc_matrixmarket(&matrix, output).with_context(|| format!("writing {}", output.display()))?;
    let dims = req.dims();
    eprintln!(
        "L={} M={} N={} nnz={} elapsed={:.6}s ({mode})",
        req.triplets().len(),
        dims.nrows,
        dims.ncols,
        matrix.nnz(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn cmd_gen(spec: DatasetSpec, out: &Path) -> anyhow::Result<()> {
    let t = bench::gen_ransparse(&spec)?;
    io::write_triplets_matrixmarket(&t, Dimensions::new(spec.siz, spec.siz), out)?;
    eprintln!("wrote {} triplets to {}", t.len(), out.display());
    Ok(())
}

fn check_all(req: &AssemblyRequest, teams: &[ParallelAssembler], label: &str) -> anyhow::Result<CscMatrix> {
    let oracle = assemble_oracle(req);
    let serial = assemble_serial(req);
    if let Some(d) = oracle.first_difference(&serial) {
        bail!(Mismatch(format!("{label}: oracle vs serial: {d}")));
    }
    for asm in teams {
        let par = asm.assemble(req);
        if let Some(d) = serial.first_difference(&par) {
            bail!(Mismatch(format!("{label}: serial vs parallel(p={}): {d}", asm.threads())));
        }
    }
    Ok(serial)
}

fn cmd_verify(input: Option<&Path>, threads: &[usize], random: Option<u64>) -> anyhow::Result<()> {
    let teams = threads
        .iter()
        .map(|&p| Ok(ParallelAssembler::new(p)?.serial_threshold(0)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(path) = input {
        let req = read_request(path, None, None)?;
        let m = check_all(&req, &teams, &path.display().to_string())?;
        println!("3 implementations agree, nnz={}", m.nnz());
    }
    if let Some(count) = random {
        let cfg = FuzzConfig::default();
        for seed in 0..count {
            let (req, _) = random_request(seed, &cfg);
            check_all(&req, &teams, &format!("seed {seed}"))?;
        }
        println!("{count} random instances: 3 implementations agree");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    dataset: u32,
    scale: f64,
    reps: usize,
    threads: &[usize],
    out: &Path,
    cost_report: bool,
    oracle: bool,
    stream: Option<usize>,
) -> anyhow::Result<()> {
    let spec = bench::dataset_config(dataset, scale)?;
    let t = bench::gen_ransparse(&spec)?;
    let raw = RawTriplets::from(&t);
    let threads = if threads.is_empty() {
        vec![default_threads(None)]
    } else {
        threads.to_vec()
    };

    let mut impls = vec![Implementation::Serial];
    impls.extend(threads.iter().map(|&p| Implementation::Parallel(p)));
    if oracle {
        impls.push(Implementation::Oracle);
    }
    let results = bench::run_bench(&raw, &impls, reps)?;

    let rows: Vec<_> = results.iter().map(|r| r.to_row(dataset)).collect();
    io::write_bench_csv(&rows, out)?;
    let phase_rows: Vec<_> = results
        .iter()
        .flat_map(|r| {
            Phase::ALL.iter().map(move |&ph| {
                (
                    dataset,
                    r.implementation.name().to_string(),
                    r.implementation.threads(),
                    ph.name().to_string(),
                    r.phases.get(ph),
                )
            })
        })
        .collect();
    io::write_phase_csv(&phase_rows, out.with_extension("phases.csv"))?;

    for r in &results {
        eprintln!(
            "{:<18} mean={:.4}s min={:.4}s speedup={:.2}",
            r.implementation.to_string(),
            r.mean_seconds,
            r.min_seconds,
            r.speedup_vs_serial.unwrap_or(f64::NAN)
        );
    }

    if cost_report {
        let req = AssemblyRequest::new(t);
        let (l, d) = (req.triplets().len() as u64, req.dims());
        let measured = instrument::measure_serial_cost(&req)?;
        let nnz = results[0].nnz as u64;
        let (m, n) = (d.nrows as u64, d.ncols as u64);
        let mut reports: Vec<(u32, String, CostReport)> = vec![
            (dataset, "serial-measured".into(), measured),
            (dataset, "serial-predicted".into(), instrument::predict_serial_cost(l, m, n, nnz)),
        ];
        for &p in &threads {
            reports.push((
                dataset,
                format!("parallel-predicted-p{p}"),
                instrument::predict_parallel_cost(l, m, n, nnz, p as u64),
            ));
        }
        io::write_cost_csv(&reports, out.with_extension("cost.csv"))?;
    }

    if let Some(len) = stream {
        for &p in &threads {
            eprintln!("stream copy p={p}: speedup {:.2}", bench::stream_copy_bandwidth(len, p));
        }
    }
    Ok(())
}
