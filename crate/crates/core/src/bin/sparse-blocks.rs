use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sparse_blocks::harness::{run, write_outputs, ExperimentConfig, RunOptions};
use sparse_blocks::Error;

/// Sample sparse random block matrices and compare their spectra with the
/// limiting laws.
///
/// Settings come from the defaults, then `--config`, then the flags below.
/// Exit codes: 0 success, 2 configuration error, 3 resource limit,
/// 4 failed checks under `--check`, 1 anything else.
#[derive(Debug, Parser)]
#[command(name = "sparse-blocks", version)]
struct Cli {
    /// sample-spectrum | moments | theory | universality | words | convergence
    command: String,

    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0 = all cores). Does not change results.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Exit with status 4 if any acceptance check fails.
    #[arg(long)]
    check: bool,

    /// erdos-renyi | regular
    #[arg(long)]
    graph: Option<String>,
    /// Number of vertices.
    #[arg(long)]
    n: Option<String>,
    /// Mean (or exact, for regular graphs) degree.
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    /// Block dimension.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Comma-separated vector norms.
    #[arg(long)]
    radii: Option<String>,
    /// adjacency | laplacian
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long = "p-max")]
    p_max: Option<String>,
    /// Comma-separated block dimensions.
    #[arg(long = "d-list")]
    d_list: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long = "dense-limit")]
    dense_limit: Option<String>,
    #[arg(long = "ks-max")]
    ks_max: Option<String>,
    #[arg(long = "z-max")]
    z_max: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs = [
            ("seed", &self.seed),
            ("output", &self.out),
            ("format", &self.format),
            ("graph", &self.graph),
            ("n", &self.n),
            ("z", &self.z),
            ("measure", &self.measure),
            ("d", &self.d),
            ("rank", &self.rank),
            ("radius", &self.radius),
            ("radii", &self.radii),
            ("kind", &self.kind),
            ("realizations", &self.realizations),
            ("p_max", &self.p_max),
            ("d_list", &self.d_list),
            ("t", &self.t),
            ("samples", &self.samples),
            ("bins", &self.bins),
            ("dense_limit", &self.dense_limit),
            ("ks_max", &self.ks_max),
            ("z_max", &self.z_max),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::Parse(_)
        | Error::InvalidSpec(_)
        | Error::InvalidMeasure(_)
        | Error::InvalidArgument(_)
        | Error::InvalidWord(_) => 2,
        Error::Resource(_) => 3,
        Error::Check(_) => 4,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.set("command", &cli.command)?;
    for (key, value) in cli.overrides() {
        cfg.set(key, value)?;
    }
    let report = run(&cfg, &RunOptions { jobs: cli.jobs })?;
    let written = write_outputs(&report)?;
    for path in &written {
        println!("{}", path.display());
    }
    for c in &report.checks {
        eprintln!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if cli.check && !report.all_passed() {
        return Err(Error::Check(format!(
            "{} check(s) failed",
            report.checks.iter().filter(|c| !c.passed).count()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
