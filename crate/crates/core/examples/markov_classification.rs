//! Classify a catalogue of kernels with the triple-product criterion.
//!
//! ```bash
//! cargo run -p ssgm --example markov_classification
//! ```

use ssgm::kernels::{CovKernel, ProcessSpec};
use ssgm::markov::{markov_test, standard_grid};

fn main() -> ssgm::Result<()> {
    let grid = standard_grid();
    for text in [
        "canonical:H=0.5,c=-1",
        "canonical:H=1.2,c=-3.6",
        "canonical:H=0.3,c=-0.3",
        "canonical:H=0.4,c=-inf",
        "fbm:H=0.25",
        "sfbm:H=0.75",
        "bfbm:Htilde=0.75,Ktilde=0.5",
        "rl:H=0.25",
    ] {
        let kernel = CovKernel::new(text.parse::<ProcessSpec>()?)?;
        let r = markov_test(&kernel, &grid)?;
        let fit = r
            .fit
            .as_ref()
            .map(|f| format!("c_hat={} r11={:.6}", f.c_hat, f.r11_hat))
            .unwrap_or_default();
        println!("{:<30} {:<16} doob={:.3e}  {fit}", text, format!("{:?}", r.verdict), r.doob.max);
    }
    Ok(())
}
