//! Sparse matrix assembly from unit-offset `(row, col, value)` triplets
//! into compressed sparse column form, with duplicates summed.
//!
//! [`assemble_serial`] runs four counting passes followed by a scatter;
//! [`ParallelAssembler`] runs the same passes on a fixed worker team.
//! Both produce bit-identical output.

pub mod bench;
pub mod csc;
pub mod error;
pub mod fuzz;
pub mod instrument;
pub mod io;
pub mod oracle;
pub mod parallel;
pub mod serial;
pub mod triplet;

pub use csc::{accumulate, csc_validate, prune_explicit_zeros, CscMatrix, Violation};
pub use error::{Error, Result};
pub use oracle::assemble_oracle;
pub use parallel::{assemble_parallel, default_threads, ParallelAssembler, ParallelPlan, WorkerTeam};
pub use serial::{assemble_serial, SerialPlan};
pub use triplet::{validate_and_convert, AssemblyRequest, Dimensions, TripletList};
