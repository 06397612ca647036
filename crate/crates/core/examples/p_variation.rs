//! Quadratic variation over dyadic partitions: finite for Brownian motion,
//! vanishing for H > 1/2 and diverging for H < 1/2.
//!
//! ```bash
//! cargo run --release -p ssgm --example p_variation
//! ```

use ssgm::kernels::ProcessSpec;
use ssgm::variation::pvariation_trichotomy;

fn main() -> ssgm::Result<()> {
    let n_list: Vec<usize> = (6..=10).map(|k| 1 << k).collect();
    for spec in [
        ProcessSpec::brownian(),
        ProcessSpec::FBm { h: 0.75 },
        ProcessSpec::FBm { h: 0.25 },
        ProcessSpec::SubFBm { h: 0.75 },
    ] {
        let r = pvariation_trichotomy(&spec, 2.0, &n_list, 32, 11)?;
        println!(
            "{:<14} slope {:+.3} (1 - pH = {:+.3})  {:?}",
            spec.to_string(),
            r.slope_estimate,
            r.theoretical_slope,
            r.verdict
        );
        for s in &r.sums {
            println!("    n={:<6} E S_n = {:.5} +- {:.5}", s.n, s.mean, s.se);
        }
    }
    Ok(())
}
