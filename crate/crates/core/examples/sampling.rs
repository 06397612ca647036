//! Sample canonical paths by time change, compare the empirical covariance
//! with the kernel and check self-similarity at scale 2.
//!
//! ```bash
//! cargo run --release -p ssgm --example sampling
//! ```

use ssgm::gram::TimeGrid;
use ssgm::kernels::{CovKernel, ProcessSpec};
use ssgm::samplers::{compare_to_kernel, empirical_cov, sample, selfsim_check};

fn main() -> ssgm::Result<()> {
    let spec = ProcessSpec::canonical(0.7, -1.5);
    let grid = TimeGrid::linear(0.1, 2.0, 8)?;
    let ens = sample(&spec, &grid, 20_000, 42, None)?;
    let cmp = compare_to_kernel(&empirical_cov(&ens)?, &CovKernel::new(spec)?, 4.0)?;
    println!(
        "{} paths via {:?}: max |z| = {:.2}, {} of {} entries beyond 4 se",
        ens.n_paths, ens.scheme, cmp.max_z, cmp.exceed, cmp.entries
    );

    let ss = selfsim_check(&spec, 2.0, &grid, 20_000, 42)?;
    println!("self-similarity at a=2: max deviation {:.2} (<= 1 is within 4 se)", ss.max_deviation);

    let fbm = ProcessSpec::FBm { h: 0.25 };
    let ens = sample(&fbm, &grid, 5_000, 7, None)?;
    let cmp = compare_to_kernel(&empirical_cov(&ens)?, &CovKernel::new(fbm)?, 4.0)?;
    println!("fbm(0.25) via {:?}: max |z| = {:.2}", ens.scheme, cmp.max_z);

    let stem = std::env::temp_dir().join("ssgm_example_paths");
    ens.write_binary(&stem)?;
    println!("wrote {}.bin and {}.json", stem.display(), stem.display());
    Ok(())
}
