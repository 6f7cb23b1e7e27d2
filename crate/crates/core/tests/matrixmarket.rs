use std::fs;
use std::path::Path;

use sparse_asm::bench::{self, Implementation, RawTriplets};
use sparse_asm::io::{self, BENCH_COLUMNS};
use sparse_asm::{assemble_oracle, assemble_serial, AssemblyRequest, Dimensions, Error, TripletList};

const RUNNING_EXAMPLE: &str = "%%MatrixMarket matrix coordinate real general
% running example
4 4 13
3 3 4
4 3 4
1 1 5
3 4 7
2 1 3
1 1 5
4 4 5
4 3 4
4 1 3
3 3 4
2 2 9
3 2 7
1 4 -2
";

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn reads_running_example() {
    let dir = tempfile::tempdir().unwrap();
    let (t, dims) = io::read_triplets_matrixmarket(write(dir.path(), "a.mtx", RUNNING_EXAMPLE)).unwrap();
    assert_eq!(t.len(), 13);
    assert_eq!(dims, Dimensions::new(4, 4));
    assert_eq!(t.rows()[..3], [3, 4, 1]);
    assert_eq!(t.values()[12], -2.0);
}

#[test]
fn empty_body() {
    let dir = tempfile::tempdir().unwrap();
    let body = "%%MatrixMarket matrix coordinate real general\n3 5 0\n";
    let (t, dims) = io::read_triplets_matrixmarket(write(dir.path(), "e.mtx", body)).unwrap();
    assert!(t.is_empty());
    assert_eq!(dims, Dimensions::new(3, 5));
}

#[test]
fn malformed_line_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let body = "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1\n1 x 3\n";
    match io::read_triplets_matrixmarket(write(dir.path(), "m.mtx", body)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn rejects_bad_header_count_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "%%MatrixMarket matrix array real general\n2 2\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 3 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 2\n",
    ];
    for (k, body) in cases.iter().enumerate() {
        let r = io::read_triplets_matrixmarket(write(dir.path(), &format!("{k}.mtx"), body));
        assert!(matches!(r, Err(Error::Parse { .. })), "case {k}: {r:?}");
    }
}

#[test]
fn non_integral_index_is_bad_index() {
    let dir = tempfile::tempdir().unwrap();
    let body = "%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1\n1.5 2 3\n";
    let r = io::read_triplets_matrixmarket(write(dir.path(), "b.mtx", body));
    assert!(matches!(r, Err(Error::BadIndex { position: 1, .. })), "{r:?}");
}

#[test]
fn writes_running_example_column_major() {
    let dir = tempfile::tempdir().unwrap();
    let (t, dims) = io::read_triplets_matrixmarket(write(dir.path(), "a.mtx", RUNNING_EXAMPLE)).unwrap();
    let m = assemble_serial(&AssemblyRequest::new(t).with_dims(dims).unwrap());
    let out = dir.path().join("out.mtx");
    io::write_csc_matrixmarket(&m, &out).unwrap();
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], io::MM_HEADER);
    assert_eq!(lines[1], "4 4 10");
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[2], "1 1 10");
    assert_eq!(lines[11], "4 4 5");
}

#[test]
fn empty_matrix_has_size_line_only() {
    let dir = tempfile::tempdir().unwrap();
    let req = AssemblyRequest::new(TripletList::empty()).with_dims(Dimensions::new(3, 2)).unwrap();
    let out = dir.path().join("e.mtx");
    io::write_csc_matrixmarket(&assemble_serial(&req), &out).unwrap();
    assert_eq!(fs::read_to_string(&out).unwrap(), format!("{}\n3 2 0\n", io::MM_HEADER));
}

#[test]
fn triplet_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t: TripletList = [(2, 1, 0.1), (2, 1, -1e-300), (1, 3, f64::NAN), (2, 1, 1.0 / 3.0)]
        .into_iter()
        .collect();
    let p = dir.path().join("t.mtx");
    io::write_triplets_matrixmarket(&t, Dimensions::new(5, 4), &p).unwrap();
    let (back, dims) = io::read_triplets_matrixmarket(&p).unwrap();
    assert_eq!(dims, Dimensions::new(5, 4));
    assert_eq!(back.rows(), t.rows());
    assert_eq!(back.cols(), t.cols());
    let bits = |t: &TripletList| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&t));

    // and the second write is byte-identical
    let p2 = dir.path().join("t2.mtx");
    io::write_triplets_matrixmarket(&back, dims, &p2).unwrap();
    assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
    let m = assemble_oracle(&AssemblyRequest::new(back).with_dims(dims).unwrap());
    assert_eq!(m.nnz(), 2);
}

#[test]
fn bench_csv_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.csv");
    io::write_bench_csv(&[], &p).unwrap();
    assert_eq!(fs::read_to_string(&p).unwrap().trim_end(), BENCH_COLUMNS.join(","));
}

#[test]
fn bench_csv_rows_and_speedup() {
    let spec = bench::dataset_config(1, 0.02).unwrap();
    let raw = RawTriplets::from(&bench::gen_ransparse(&spec).unwrap());
    let results = bench::run_bench(&raw, &[Implementation::Serial, Implementation::Parallel(2)], 3).unwrap();
    let rows: Vec<_> = results.iter().map(|r| r.to_row(1)).collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.csv");
    io::write_bench_csv(&rows, &p).unwrap();

    let mut rdr = csv::Reader::from_path(&p).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), BENCH_COLUMNS);
    let recs: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(recs.len(), 2);
    assert_eq!(&recs[0][1], "serial");
    assert_eq!(&recs[1][1], "parallel");
    assert_eq!(&recs[1][2], "2");
    assert_eq!(&recs[1][5], "3");
    let mean = |k: usize| recs[k][3].parse::<f64>().unwrap();
    let speedup: f64 = recs[1][10].parse().unwrap();
    assert!((speedup - mean(0) / mean(1)).abs() < 1e-9 * speedup.max(1.0));
    assert_eq!(recs[0][10].parse::<f64>().unwrap(), 1.0);
}
