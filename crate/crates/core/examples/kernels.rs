//! Evaluate every kernel family on a few time pairs.
//!
//! ```bash
//! cargo run -p ssgm --example kernels
//! ```

use ssgm::kernels::{eval_l, CovKernel, Kernel, ProcessSpec};

fn main() -> ssgm::Result<()> {
    let specs = [
        "canonical:H=0.7,c=-1.5",
        "canonical:H=0.5,c=-inf",
        "fbm:H=0.75",
        "sfbm:H=0.25",
        "bfbm:Htilde=0.5,Ktilde=0.5",
        "rl:H=0.3",
        "volterra:H=0.25,beta=1,g=const(1)",
    ];
    let pairs = [(0.5, 1.0), (1.0, 1.0), (1.0, 3.0)];
    println!("{:<40} {:>14} {:>14} {:>14}", "kernel", "R(.5,1)", "R(1,1)", "R(1,3)");
    for text in specs {
        let spec: ProcessSpec = text.parse()?;
        let k = CovKernel::new(spec)?;
        let vals = pairs
            .iter()
            .map(|&(s, t)| k.eval(s, t))
            .collect::<ssgm::Result<Vec<_>>>()?;
        println!("{:<40} {:>14.8} {:>14.8} {:>14.8}", k.label(), vals[0], vals[1], vals[2]);
    }

    println!("\nl(u) for the l-form families");
    for text in ["fbm:H=0.75", "sfbm:H=0.25", "bfbm:Htilde=0.5,Ktilde=0.5", "rl:H=0.3"] {
        let spec: ProcessSpec = text.parse()?;
        let row = [0.0, 1.0, 10.0, 1e3]
            .iter()
            .map(|&u| eval_l(&spec, u).map(|v| format!("{v:>12.6}")))
            .collect::<ssgm::Result<Vec<_>>>()?;
        println!("{:<28} {}", text, row.join(" "));
    }
    Ok(())
}
