//! Increment variances of the generalized Riemann-Liouville process
//! `Z^{H,beta,g}` by quadrature, and a Monte Carlo ergodic average.
//!
//! ```bash
//! cargo run --release -p ssgm --example volterra_limits
//! ```

use ssgm::kernels::{GFunction, ProcessSpec};
use ssgm::variation::{ergodic_average, increment_variance, int_limit_residual, IncrementFn};

fn main() -> ssgm::Result<()> {
    let g = GFunction::Const(1.0);
    for h in [0.25, 0.5] {
        println!("H = {h}, beta = 1, g = 1");
        for t in [10.0, 1e2, 1e3, 1e4] {
            let v = increment_variance(h, 1.0, g, t)?;
            println!(
                "    t={t:<8} E[(Z_(t+1) - Z_t)^2] = {:.6e}  (int F^2 = {:.6})",
                v.value.value, v.limit
            );
        }
    }
    println!("integral limit residual at t=1e4: {:.3e}", int_limit_residual(1.0, g, 1e4)?);

    let spec = ProcessSpec::VolterraG { h: 0.25, beta: 1.0, g };
    let r = ergodic_average(&spec, IncrementFn::Square, 500, 8, 5)?;
    println!(
        "ergodic average of squared increments, n=500: {:.5} +- {:.5}; quadrature {:.5}; target {:.5}",
        r.average, r.se, r.exact_mean_square, r.target
    );
    Ok(())
}
