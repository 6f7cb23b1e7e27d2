//! MatrixMarket coordinate files and CSV reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::csc::CscMatrix;
use crate::error::{Error, Result};
use crate::instrument::CostReport;
use crate::triplet::{validate_and_convert, Dimensions, TripletList};

pub const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_num(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("invalid {what} {tok:?}")))
}

fn parse_size(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("invalid {what} {tok:?}")))
}

/// Reads a `coordinate real general` file. Indices stay 1-based, duplicates
/// are kept, and the size line becomes the returned dimensions.
pub fn read_triplets_matrixmarket(path: impl AsRef<Path>) -> Result<(TripletList, Dimensions)> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate().map(|(n, l)| (n + 1, l));

    let (n, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words != ["%%matrixmarket", "matrix", "coordinate", "real", "general"] {
        return Err(parse_err(path, n, format!("unsupported header {header:?}")));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let (mut ri, mut rj, mut rs) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        match size {
            None => {
                let m = parse_size(path, n, tok.next(), "row count")?;
                let c = parse_size(path, n, tok.next(), "column count")?;
                let e = parse_size(path, n, tok.next(), "entry count")?;
                if tok.next().is_some() {
                    return Err(parse_err(path, n, "trailing data on size line"));
                }
                ri.reserve(e);
                rj.reserve(e);
                rs.reserve(e);
                size = Some((m, c, e));
            }
            Some((m, c, e)) => {
                if ri.len() == e {
                    return Err(parse_err(path, n, format!("more than {e} entries")));
                }
                let i = parse_num(path, n, tok.next(), "row index")?;
                let j = parse_num(path, n, tok.next(), "column index")?;
                let v = parse_num(path, n, tok.next(), "value")?;
                if tok.next().is_some() {
                    return Err(parse_err(path, n, "trailing data on entry line"));
                }
                if i > m as f64 || j > c as f64 {
                    return Err(parse_err(path, n, format!("entry ({i}, {j}) outside {m}x{c}")));
                }
                ri.push(i);
                rj.push(j);
                rs.push(v);
            }
        }
    }
    let Some((m, c, e)) = size else {
        return Err(parse_err(path, 2, "missing size line"));
    };
    if ri.len() != e {
        return Err(parse_err(path, 0, format!("expected {e} entries, found {}", ri.len())));
    }
    let (t, _) = validate_and_convert(&ri, &rj, &rs)?;
    Ok((t, Dimensions::new(m, c)))
}

/// Shortest representation that parses back to the same bits.
fn format_value(v: f64) -> String {
    if v.is_nan() {
        return if v.is_sign_negative() { "-nan".into() } else { "nan".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_entries(
    path: &Path,
    dims: Dimensions,
    entries: impl ExactSizeIterator<Item = (u64, u64, f64)>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", dims.nrows, dims.ncols, entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{i} {j} {}", format_value(v))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes triplets in input order, 1-based.
pub fn write_triplets_matrixmarket(t: &TripletList, dims: Dimensions, path: impl AsRef<Path>) -> Result<()> {
    let entries = t.iter().map(|(i, j, v)| (i as u64, j as u64, v));
    write_entries(path.as_ref(), dims, entries.collect::<Vec<_>>().into_iter())
}

/// Writes the stored entries column by column, 1-based.
pub fn write_csc_matrixmarket(m: &CscMatrix, path: impl AsRef<Path>) -> Result<()> {
    let entries: Vec<_> = m.entries().map(|(i, j, v)| (i as u64 + 1, j as u64 + 1, v)).collect();
    write_entries(path.as_ref(), m.dims(), entries.into_iter())
}

/// One benchmark CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset_id: u32,
    #[serde(rename = "impl")]
    pub implementation: String,
    pub threads: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub reps: usize,
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub nrows: usize,
    #[serde(rename = "N")]
    pub ncols: usize,
    pub nnz: usize,
    pub speedup_vs_serial: Option<f64>,
}

pub const BENCH_COLUMNS: [&str; 11] = [
    "dataset_id",
    "impl",
    "threads",
    "mean_seconds",
    "min_seconds",
    "reps",
    "L",
    "M",
    "N",
    "nnz",
    "speedup_vs_serial",
];

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

/// Writes benchmark rows; the header is written even with no rows.
pub fn write_bench_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref(), &BENCH_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const COST_COLUMNS: [&str; 6] = ["dataset_id", "impl", "phase", "accesses", "indirect", "indirect_l"];

/// Writes one row per phase plus a `total` row and one `peak_words` row
/// per labelled report.
pub fn write_cost_csv(reports: &[(u32, String, CostReport)], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref(), &COST_COLUMNS)?;
    for (id, label, r) in reports {
        let id = id.to_string();
        for pc in &r.phases {
            let c = &pc.counts;
            w.write_record([
                id.as_str(),
                label,
                pc.phase.name(),
                &c.accesses.to_string(),
                &c.indirect.to_string(),
                &c.indirect_l.to_string(),
            ])?;
        }
        w.write_record([
            id.as_str(),
            label,
            "total",
            &r.total_accesses.to_string(),
            &r.indirect_accesses.to_string(),
            &r.indirect_l_accesses.to_string(),
        ])?;
        w.write_record([id.as_str(), label, "peak_words", &r.peak_aux_words.to_string(), "", ""])?;
    }
    w.flush()?;
    Ok(())
}

pub const PHASE_COLUMNS: [&str; 5] = ["dataset_id", "impl", "threads", "phase", "mean_seconds"];

/// Writes per-phase mean times: `(dataset, impl, threads, phase, seconds)`.
pub fn write_phase_csv(rows: &[(u32, String, usize, String, f64)], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref(), &PHASE_COLUMNS)?;
    for (id, label, p, phase, s) in rows {
        w.write_record([id.to_string(), label.clone(), p.to_string(), phase.clone(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
