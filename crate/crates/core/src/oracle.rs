//! Reference assembly by sorting, independent of the counting passes.

use crate::csc::{accumulate, CscMatrix};
use crate::triplet::AssemblyRequest;

/// Stable sort of the input by `(col, row)`, then one pass merging equal
/// keys. Sums start at `0.0` and follow input order.
pub fn assemble_oracle(req: &AssemblyRequest) -> CscMatrix {
    let t = req.triplets();
    let dims = req.dims();
    let (rows, cols, values) = (t.rows(), t.cols(), t.values());

    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by_key(|&i| (cols[i], rows[i]));

    let mut col_ptr = vec![0u32; dims.ncols + 1];
    let mut row_idx = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut last: Option<(u32, u32)> = None;
    for &i in &order {
        let key = (cols[i], rows[i]);
        if last != Some(key) {
            row_idx.push(rows[i] - 1);
            vals.push(0.0);
            col_ptr[cols[i] as usize] += 1;
            last = Some(key);
        }
        let last = vals.last_mut().unwrap();
        *last = accumulate(*last, values[i]);
    }
    for c in 1..=dims.ncols {
        col_ptr[c] += col_ptr[c - 1];
    }
    CscMatrix::from_parts(dims, col_ptr, row_idx, vals)
}
