//! Large-lag expansion `l(u) ~ const + a u^e` of l-form kernels and the
//! `R(sqrt t, t)` profile test for a second power.
//!
//! ```bash
//! cargo run -p ssgm --example asymptotics
//! ```

use ssgm::kernels::{CovKernel, ProcessSpec};
use ssgm::markov::{asym_coeff_estimate, asym_grid, profile_grid, sqrt_diag_profile};

fn main() -> ssgm::Result<()> {
    let u = asym_grid();
    for text in ["rl:H=0.25", "rl:H=0.4", "bfbm:Htilde=0.5,Ktilde=0.5", "sfbm:H=0.25", "fbm:H=0.75"] {
        let spec: ProcessSpec = text.parse()?;
        let r = asym_coeff_estimate(&spec, &u)?;
        println!(
            "{:<28} const={:>10.6} coef={:>10.6} exp={:>8.4}  predicted {:?}",
            text,
            r.constant,
            r.coefficient.unwrap_or(f64::NAN),
            r.exponent.unwrap_or(f64::NAN),
            r.predicted
        );
    }

    let t = profile_grid();
    for text in ["canonical:H=0.5,c=-1", "fbm:H=0.75", "sfbm:H=0.5"] {
        let kernel = CovKernel::new(text.parse()?)?;
        let r = sqrt_diag_profile(&kernel, &t)?;
        println!(
            "{:<24} one-power residual {:.2e}, two-power residual {:.2e}, flagged {}",
            text,
            r.fit_residual,
            r.two_power_residual.unwrap_or(f64::NAN),
            r.two_power_flag
        );
    }
    Ok(())
}
