//! Closed-form principal minors of the power-ratio kernel
//! `(s v t)^alpha / (s ^ t)^beta` and the PSD check with a witness.
//!
//! ```bash
//! cargo run -p ssgm --example positive_definiteness
//! ```

use ssgm::gram::{build_gram, leading_minors, lindstrom_minor, psd_check, MinorQuery, TimeGrid, DEFAULT_PSD_TOL};
use ssgm::kernels::{CovKernel, ProcessSpec};

fn main() -> ssgm::Result<()> {
    let grid = TimeGrid::new(vec![0.5, 0.8, 1.1, 1.7, 2.0])?;
    for (alpha, beta) in [(-0.5, -1.0), (1.0, -1.0), (0.5, 0.0)] {
        let q = MinorQuery::new(alpha, beta, grid.clone())?;
        let closed = lindstrom_minor(&q)?;
        let direct = *leading_minors(&q.gram()).last().expect("non-empty grid");
        let report = psd_check(&q.gram(), DEFAULT_PSD_TOL);
        println!(
            "alpha={alpha:>5} beta={beta:>5}  closed={closed:>12.5e}  direct={direct:>12.5e}  {:?}",
            report.verdict
        );
        if let (Some(w), Some(v)) = (&report.witness, report.witness_value) {
            println!("    witness {w:?} gives quadratic form {v:.4e}");
        }
    }

    let fbm = CovKernel::new(ProcessSpec::FBm { h: 0.75 })?;
    let report = psd_check(&build_gram(&fbm, &grid)?, DEFAULT_PSD_TOL);
    println!("\nfbm(0.75) Gram: {:?}, min eigenvalue {:.4e}", report.verdict, report.min_eigenvalue_bound);
    Ok(())
}
