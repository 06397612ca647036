//! Drive the command-line front end from a TOML configuration.
//!
//! ```bash
//! cargo run -p ssgm --example config_run
//! ```

use clap::Parser;
use ssgm::cli::{run, Cli, RunConfig};

const CONFIG: &str = r#"
[process]
family = "canonical"
H = 0.7
c = -1.5

[grid]
geometric = { start = 0.1, stop = 2.0, points = 6 }
"#;

fn main() -> ssgm::Result<()> {
    let cfg = RunConfig::from_toml(CONFIG)?;
    let dir = std::env::temp_dir();
    let path = dir.join("ssgm_example.toml");
    std::fs::write(&path, cfg.to_toml()?).expect("temp dir is writable");

    let cli = Cli::parse_from(["ssgm", "--config", path.to_str().unwrap(), "markov-test"]);
    println!("{}", run(&cli)?.summary);

    let csv = dir.join("ssgm_example_gram.csv");
    let cli = Cli::parse_from(["ssgm", "--config", path.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "kernel-eval"]);
    println!("{}", run(&cli)?.summary);
    print!("{}", std::fs::read_to_string(&csv).expect("csv was written"));
    Ok(())
}
