//! Command-line front end. Exit codes: 0 success, 1 bad invocation,
//! 2 bad input data, 3 numerical breakdown.

use clap::{Parser, Subcommand};

mod commands;
mod dataset;
mod errors;

use errors::CliError;

#[derive(Parser)]
#[command(name = "corrmanifold", version, about = "Geometry-aware analysis of correlation matrices")]
struct Cli {
    /// Worker threads; affects speed only, never results.
    #[arg(long, global = true, env = "CORRMANIFOLD_WORKERS", default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Estimate a correlation matrix from multichannel time series.
    Estimate(commands::EstimateArgs),
    /// Frechet mean of a dataset under a chosen geometry.
    Mean(commands::MeanArgs),
    /// Geometric median of a dataset under a chosen geometry.
    Median(commands::MedianArgs),
    /// Pairwise distance matrix of a dataset.
    Distmat(commands::DistmatArgs),
    /// Tune and fit a kernel regressor on a labeled dataset.
    Regress(commands::RegressArgs),
    /// Embed a dataset into low-dimensional coordinates.
    Embed(commands::EmbedArgs),
    /// Partition a dataset into clusters.
    Cluster(commands::ClusterArgs),
    /// Two-sample permutation test between the dataset's groups.
    Test2(commands::Test2Args),
    /// Match second-session matrices to first-session identities.
    Fingerprint(commands::FingerprintArgs),
    /// Draw correlation matrices from a simulation family.
    Simulate(commands::SimulateArgs),
    /// Time distance evaluations across dimensions and geometries.
    Benchmark(commands::BenchmarkArgs),
    /// Threshold a correlation matrix to a binary network.
    Binarize(commands::BinarizeArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|err| CliError::Usage(format!("worker pool: {err}")))?;
    match cli.verb {
        Verb::Estimate(args) => commands::estimate(args),
        Verb::Mean(args) => commands::mean(args),
        Verb::Median(args) => commands::median(args),
        Verb::Distmat(args) => commands::distmat(args),
        Verb::Regress(args) => commands::regress(args),
        Verb::Embed(args) => commands::embed(args),
        Verb::Cluster(args) => commands::cluster(args),
        Verb::Test2(args) => commands::test2(args),
        Verb::Fingerprint(args) => commands::fingerprint(args),
        Verb::Simulate(args) => commands::simulate(args),
        Verb::Benchmark(args) => commands::benchmark(args),
        Verb::Binarize(args) => commands::binarize(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; anything else is a
            // usage failure reported on the error stream.
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                std::process::exit(0);
            }
            eprint!("{err}");
            std::process::exit(1);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
