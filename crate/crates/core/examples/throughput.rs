//! Filtering throughput per filter size; the same measurement as
//! `blade bench`.
//!
//!     cargo run --release --example throughput

use blade::pipeline::{bench, format_bench};

fn main() -> blade::Result<()> {
    let rows = bench(&[3, 5, 7, 9], &[0.25, 1.0], 0)?;
    print!("{}", format_bench(&rows));
    Ok(())
}
