//! One function per verb. Every verb that writes files also writes a JSON
//! report embedding the resolved parameter set and the library version, so
//! any output directory is self-describing.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::json;

use corrmanifold::clustering::{self, ClusterMethod, ClusterOptions, ValidityKind};
use corrmanifold::dimred::{self, EmbedInput, EmbedOptions, EmbeddingMethod};
use corrmanifold::estimators::{
    self, EstimatorKind, TimeSeriesMatrix, estimate_correlation, reduce_blocks,
};
use corrmanifold::fingerprint::{self, Dissimilarity};
use corrmanifold::frechet::{frechet_mean, frechet_median};
use corrmanifold::geometry::pairwise_distances;
use corrmanifold::kernel::{self, RegressorParams, DEFAULT_THETA_GRID};
use corrmanifold::sim::{self, Generator, SimulationSpec};
use corrmanifold::timing::benchmark_distances;
use corrmanifold::twosample::{self, StatisticKind, TestOptions};
use corrmanifold::{binarize, CorrelationMatrix, FlatGeometry, GeometryKind, SampleSet};

use crate::dataset::{self, format_float};
use crate::errors::CliError;

pub(crate) const REPORT_SCHEMA_VERSION: u32 = 1;

fn provenance(command: &str, parameters: serde_json::Value) -> serde_json::Value {
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "library_version": env!("CARGO_PKG_VERSION"),
        "parameters": parameters,
    })
}

fn write_report(path: &Path, report: &serde_json::Value) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn ids_of(s: &SampleSet) -> Vec<String> {
    match s.ids() {
        Some(ids) => ids.to_vec(),
        None => (0..s.len()).map(|i| format!("s{i:04}")).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum GeometryArg {
    Ecm,
    Lec,
    Airm,
    Qam,
}

impl GeometryArg {
    fn to_kind(self) -> GeometryKind {
        match self {
            GeometryArg::Ecm => GeometryKind::Ecm,
            GeometryArg::Lec => GeometryKind::Lec,
            GeometryArg::Airm => GeometryKind::Airm,
            GeometryArg::Qam => GeometryKind::qam(),
        }
    }

    fn to_flat(self) -> Result<FlatGeometry, CliError> {
        match self {
            GeometryArg::Ecm => Ok(FlatGeometry::Ecm),
            GeometryArg::Lec => Ok(FlatGeometry::Lec),
            other => Err(CliError::Usage(format!(
                "this verb supports only the flat geometries ecm and lec, got {}",
                other.to_kind().name()
            ))),
        }
    }

    fn name(self) -> &'static str {
        self.to_kind().name()
    }
}

fn parse_grid(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let parsed: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse()).collect();
    match parsed {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Usage(format!(
            "--{flag} expects a comma-separated list of numbers, got {text:?}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum GeneratorArg {
    WishartIdentity,
    WishartAr1,
    Mixture,
}

#[derive(Args)]
pub(crate) struct SimulateArgs {
    /// Sampling family.
    #[arg(long, value_enum)]
    generator: GeneratorArg,
    /// Matrix dimension p.
    #[arg(long)]
    dim: usize,
    /// Number of matrices to draw.
    #[arg(long)]
    count: usize,
    /// Wishart degrees of freedom (default 2p).
    #[arg(long)]
    dof: Option<f64>,
    /// AR(1) decay for the wishart-ar1 and mixture generators.
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    /// Number of leading noise draws (mixture generator only).
    #[arg(long, default_value_t = 0)]
    contamination: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the matrix files and manifest.
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let generator = match args.generator {
        GeneratorArg::WishartIdentity => Generator::WishartIdentity,
        GeneratorArg::WishartAr1 => Generator::WishartAr1 { rho: args.rho },
        GeneratorArg::Mixture => Generator::Mixture {
            contamination: args.contamination,
            rho: args.rho,
        },
    };
    let spec = SimulationSpec {
        generator,
        dim: args.dim,
        count: args.count,
        dof: args.dof,
        seed: args.seed,
    };
    let s = sim::simulate(&spec)?;
    let groups: Option<Vec<String>> = s.labels().map(|labels| {
        labels
            .iter()
            .map(|&l| if l == 1.0 { "noise".into() } else { "signal".into() })
            .collect()
    });
    let manifest = dataset::write_dataset(
        &s,
        &args.output,
        groups.as_deref(),
        Some(serde_json::to_value(spec)?),
    )?;
    println!(
        "wrote {} matrices of dimension {} to {}",
        s.len(),
        s.dim(),
        manifest.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum EstimatorArg {
    Scm,
    Lw,
    Oas,
    Ridge,
}

#[derive(Args)]
pub(crate) struct EstimateArgs {
    /// Time-series CSV: one row per observation, one column per channel.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Scm)]
    estimator: EstimatorArg,
    /// Ridge regularization strength (ridge estimator only).
    #[arg(long, default_value_t = 1e-3)]
    tau: f64,
    /// Summarize this many contiguous channel blocks by their first
    /// principal component before estimating.
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let raw = dataset::read_matrix_csv(&args.input)?;
    let mut x = TimeSeriesMatrix::new(raw)?;
    if let Some(blocks) = args.blocks {
        x = reduce_blocks(&x, blocks)?;
    }
    let kind = match args.estimator {
        EstimatorArg::Scm => EstimatorKind::Sample,
        EstimatorArg::Lw => EstimatorKind::LedoitWolf,
        EstimatorArg::Oas => EstimatorKind::Oas,
        EstimatorArg::Ridge => EstimatorKind::Ridge { tau: args.tau },
    };
    let c = estimate_correlation(&x, kind)?;
    let intensity = match kind {
        EstimatorKind::LedoitWolf => Some(estimators::ledoit_wolf_intensity(&x)),
        EstimatorKind::Oas => Some(estimators::oas_intensity(&x)),
        _ => None,
    };
    ensure_dir(&args.output)?;
    let matrix_path = args.output.join("correlation.csv");
    dataset::write_matrix_csv(&matrix_path, c.matrix())?;
    write_report(
        &args.output.join("estimate.json"),
        &json!({
            "provenance": provenance("estimate", json!({
                "input": args.input.display().to_string(),
                "estimator": kind.name(),
                "tau": matches!(kind, EstimatorKind::Ridge { .. }).then_some(args.tau),
                "blocks": args.blocks,
            })),
            "observations": x.observations(),
            "channels": x.channels(),
            "shrinkage_intensity": intensity,
            "matrix": "correlation.csv",
        }),
    )?;
    println!("wrote {}", matrix_path.display());
    Ok(())
}

#[derive(Args)]
pub(crate) struct MeanArgs {
    /// Dataset manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn mean(args: MeanArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    let result = frechet_mean(&s, args.geometry.to_kind())?;
    ensure_dir(&args.output)?;
    dataset::write_matrix_csv(&args.output.join("mean.csv"), result.center.matrix())?;
    write_report(
        &args.output.join("mean.json"),
        &json!({
            "provenance": provenance("mean", json!({
                "input": args.input.display().to_string(),
                "geometry": args.geometry.name(),
            })),
            "variation": result.variation,
            "iterations": result.iterations,
            "converged": result.converged,
            "flags": result.flags,
            "matrix": "mean.csv",
        }),
    )?;
    println!("variation {}", format_float(result.variation));
    Ok(())
}

#[derive(Args)]
pub(crate) struct MedianArgs {
    /// Dataset manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn median(args: MedianArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    let result = frechet_median(
        &s,
        args.geometry.to_kind(),
        args.max_iterations,
        args.tolerance,
    )?;
    ensure_dir(&args.output)?;
    dataset::write_matrix_csv(&args.output.join("median.csv"), result.center.matrix())?;
    write_report(
        &args.output.join("median.json"),
        &json!({
            "provenance": provenance("median", json!({
                "input": args.input.display().to_string(),
                "geometry": args.geometry.name(),
                "max_iterations": args.max_iterations,
                "tolerance": args.tolerance,
            })),
            "variation": result.variation,
            "iterations": result.iterations,
            "converged": result.converged,
            "flags": result.flags,
            "matrix": "median.csv",
        }),
    )?;
    println!("variation {}", format_float(result.variation));
    Ok(())
}

#[derive(Args)]
pub(crate) struct DistmatArgs {
    /// Dataset manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn distmat(args: DistmatArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    let d = pairwise_distances(&s, args.geometry.to_kind())?;
    ensure_dir(&args.output)?;
    let matrix_path = args.output.join("distances.csv");
    dataset::write_matrix_csv(&matrix_path, &d)?;
    write_report(
        &args.output.join("distmat.json"),
        &json!({
            "provenance": provenance("distmat", json!({
                "input": args.input.display().to_string(),
                "geometry": args.geometry.name(),
            })),
            "ids": ids_of(&s),
            "matrix": "distances.csv",
        }),
    )?;
    println!("wrote {}", matrix_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum RegressorArg {
    Gp,
    Kern,
    Svr,
}

#[derive(Args)]
pub(crate) struct RegressArgs {
    /// Dataset manifest; every entry needs a label.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    regressor: RegressorArg,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bandwidth grid for cross-validation.
    #[arg(long, default_value = "0.01,0.1,1,10,100")]
    theta_grid: String,
    /// GP noise variance grid.
    #[arg(long, default_value = "1e-4,1e-3,1e-2,1e-1")]
    noise_grid: String,
    /// SVR tube width grid.
    #[arg(long, default_value = "0.01,0.1")]
    epsilon_grid: String,
    /// SVR box constraint grid.
    #[arg(long, default_value = "1,10,100")]
    box_grid: String,
    /// Score this manifest with the tuned model.
    #[arg(long)]
    predict: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn regress(args: RegressArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    if s.labels().is_none() {
        return Err(CliError::Data(format!(
            "{}: regress needs a label on every entry",
            args.input.display()
        )));
    }
    let geometry = args.geometry.to_flat()?;
    let theta_grid = if args.theta_grid == "0.01,0.1,1,10,100" {
        DEFAULT_THETA_GRID.to_vec()
    } else {
        parse_grid(&args.theta_grid, "theta-grid")?
    };
    let param_grid: Vec<RegressorParams> = match args.regressor {
        RegressorArg::Gp => parse_grid(&args.noise_grid, "noise-grid")?
            .into_iter()
            .map(|noise_variance| RegressorParams::Gp { noise_variance })
            .collect(),
        RegressorArg::Kern => vec![RegressorParams::Kern],
        RegressorArg::Svr => {
            let epsilons = parse_grid(&args.epsilon_grid, "epsilon-grid")?;
            let boxes = parse_grid(&args.box_grid, "box-grid")?;
            epsilons
                .iter()
                .flat_map(|&epsilon| {
                    boxes.iter().map(move |&box_constraint| RegressorParams::Svr {
                        epsilon,
                        box_constraint,
                    })
                })
                .collect()
        }
    };
    let tuned = kernel::tune(&s, &theta_grid, &param_grid, geometry, args.folds, args.seed)?;
    let model = kernel::fit(&s, tuned.spec, tuned.params)?;
    ensure_dir(&args.output)?;

    let mut report = json!({
        "provenance": provenance("regress", json!({
            "input": args.input.display().to_string(),
            "regressor": format!("{:?}", args.regressor).to_lowercase(),
            "geometry": args.geometry.name(),
            "folds": args.folds,
            "seed": args.seed,
            "theta_grid": theta_grid,
            "predict": args.predict.as_ref().map(|p| p.display().to_string()),
        })),
        "theta": tuned.spec.theta,
        "params": tuned.params,
        "cv_mse": tuned.cv_mse,
    });
    if let Some(predict_path) = &args.predict {
        let (queries, _) = dataset::read_dataset(predict_path)?;
        let with_variance = matches!(tuned.params, RegressorParams::Gp { .. });
        let mut text = String::from(if with_variance {
            "id,prediction,variance\n"
        } else {
            "id,prediction\n"
        });
        for (item, id) in queries.items().iter().zip(ids_of(&queries)) {
            let p = model.predict(item)?;
            text.push_str(&id);
            text.push(',');
            text.push_str(&format_float(p.value));
            if with_variance {
                text.push(',');
                text.push_str(&format_float(p.variance.unwrap_or(f64::NAN)));
            }
            text.push('\n');
        }
        fs::write(args.output.join("predictions.csv"), text)?;
        report["predictions"] = json!("predictions.csv");
    }
    write_report(&args.output.join("regress.json"), &report)?;
    println!(
        "tuned theta {} cv mse {}",
        format_float(tuned.spec.theta),
        format_float(tuned.cv_mse)
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum EmbedMethodArg {
    Pga,
    Cmds,
    Mmds,
    Tsne,
    Ae,
}

#[derive(Args)]
pub(crate) struct EmbedArgs {
    /// Dataset manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: EmbedMethodArg,
    /// Embedding dimension.
    #[arg(long, default_value_t = 2)]
    components: usize,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighborhood size target (t-SNE only).
    #[arg(long, default_value_t = 10.0)]
    perplexity: f64,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn embed(args: EmbedArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    let method = match args.method {
        EmbedMethodArg::Pga => EmbeddingMethod::Pga,
        EmbedMethodArg::Cmds => EmbeddingMethod::Cmds,
        EmbedMethodArg::Mmds => EmbeddingMethod::Mmds,
        EmbedMethodArg::Tsne => EmbeddingMethod::Tsne,
        EmbedMethodArg::Ae => EmbeddingMethod::Ae,
    };
    let options = EmbedOptions {
        seed: args.seed,
        perplexity: args.perplexity,
        ..EmbedOptions::default()
    };
    let result = dimred::embed(
        method,
        EmbedInput::Samples(&s),
        args.components,
        args.geometry.to_flat()?,
        &options,
    )?;
    ensure_dir(&args.output)?;
    let points_path = args.output.join("embedding.csv");
    dataset::write_matrix_csv(&points_path, &result.points)?;
    write_report(
        &args.output.join("embed.json"),
        &json!({
            "provenance": provenance("embed", json!({
                "input": args.input.display().to_string(),
                "method": result.method,
                "components": args.components,
                "geometry": args.geometry.name(),
                "seed": args.seed,
                "perplexity": args.perplexity,
            })),
            "ids": ids_of(&s),
            "stress_or_loss": result.stress_or_loss,
            "explained_variance": result.explained_variance,
            "flags": result.flags,
            "points": "embedding.csv",
        }),
    )?;
    println!("wrote {}", points_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum ClusterMethodArg {
    Kmeans,
    Kmedoids,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum ValidityArg {
    Silhouette,
    Ch,
}

#[derive(Args)]
pub(crate) struct ClusterArgs {
    /// Dataset manifest.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: ClusterMethodArg,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Also score the partition with a validity index.
    #[arg(long, value_enum)]
    validity: Option<ValidityArg>,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn cluster(args: ClusterArgs) -> Result<(), CliError> {
    let (s, _) = dataset::read_dataset(&args.input)?;
    let method = match args.method {
        ClusterMethodArg::Kmeans => ClusterMethod::Kmeans,
        ClusterMethodArg::Kmedoids => ClusterMethod::Kmedoids,
        ClusterMethodArg::Spectral => ClusterMethod::Spectral,
    };
    let geometry = args.geometry.to_flat()?;
    let options = ClusterOptions {
        restarts: args.restarts,
        ..ClusterOptions::default()
    };
    let result = clustering::cluster(method, &s, args.k, geometry, args.seed, &options)?;
    let ids = ids_of(&s);
    let validity = match args.validity {
        Some(kind) => {
            let kind = match kind {
                ValidityArg::Silhouette => ValidityKind::Silhouette,
                ValidityArg::Ch => ValidityKind::CalinskiHarabasz,
            };
            let score = clustering::validity(kind, &s, &result.labels, geometry)?;
            Some(json!({ "kind": kind, "value": score.value, "flags": score.flags }))
        }
        None => None,
    };
    ensure_dir(&args.output)?;
    write_report(
        &args.output.join("cluster.json"),
        &json!({
            "provenance": provenance("cluster", json!({
                "input": args.input.display().to_string(),
                "method": result.method,
                "k": args.k,
                "geometry": args.geometry.name(),
                "seed": args.seed,
                "restarts": args.restarts,
            })),
            "assignments": ids.iter().zip(&result.labels)
                .map(|(id, &c)| json!({ "id": id, "cluster": c }))
                .collect::<Vec<_>>(),
            "inertia": result.inertia,
            "converged": result.converged,
            "medoids": result.medoids.as_ref()
                .map(|ms| ms.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>()),
            "flags": result.flags,
            "validity": validity,
        }),
    )?;
    println!(
        "k {} inertia {} converged {}",
        result.k,
        format_float(result.inertia),
        result.converged
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum StatArg {
    Energy,
    Wasserstein,
    Bg,
    Mmd,
}

#[derive(Args)]
pub(crate) struct Test2Args {
    /// Dataset manifest; entries must carry exactly two distinct groups.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = StatArg::Energy)]
    stat: StatArg,
    #[arg(long, default_value_t = 999)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GeometryArg::Ecm)]
    geometry: GeometryArg,
    /// Heat-kernel bandwidth (mmd statistic only).
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Also write the report to <output>/test2.json.
    #[arg(long)]
    output: Option<PathBuf>,
}

pub(crate) fn test2(args: Test2Args) -> Result<(), CliError> {
    let (s, manifest) = dataset::read_dataset(&args.input)?;
    let mut groups = BTreeSet::new();
    for entry in &manifest.entries {
        match &entry.group {
            Some(g) => {
                groups.insert(g.clone());
            }
            None => {
                return Err(CliError::Data(format!(
                    "entry {} has no group; test2 needs a group on every entry",
                    entry.id
                )));
            }
        }
    }
    if groups.len() != 2 {
        return Err(CliError::Data(format!(
            "test2 needs exactly two groups, found {:?}",
            groups
        )));
    }
    let mut names = groups.into_iter();
    let (group_a, group_b) = (names.next().unwrap(), names.next().unwrap());
    let indices_of = |name: &str| -> Vec<usize> {
        manifest
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.group.as_deref() == Some(name))
            .map(|(i, _)| i)
            .collect()
    };
    let kind = match args.stat {
        StatArg::Energy => StatisticKind::Energy,
        StatArg::Wasserstein => StatisticKind::Wasserstein,
        StatArg::Bg => StatisticKind::BiswasGhosh,
        StatArg::Mmd => StatisticKind::Mmd,
    };
    let report = twosample::permutation_test(
        kind,
        &s.subset(&indices_of(&group_a)),
        &s.subset(&indices_of(&group_b)),
        args.geometry.to_kind(),
        args.permutations,
        args.seed,
        &TestOptions { theta: args.theta },
    )?;
    let out = json!({
        "provenance": provenance("test2", json!({
            "input": args.input.display().to_string(),
            "stat": report.statistic_kind,
            "permutations": args.permutations,
            "seed": args.seed,
            "geometry": args.geometry.name(),
            "theta": args.theta,
        })),
        "group_a": { "name": group_a, "size": indices_of(&group_a).len() },
        "group_b": { "name": group_b, "size": indices_of(&group_b).len() },
        "report": report,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(dir) = &args.output {
        ensure_dir(dir)?;
        write_report(&dir.join("test2.json"), &out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum DissimilarityArg {
    Ecm,
    Lec,
    Airm,
    Qam,
    Pearson,
    Euclidean,
}

#[derive(Args)]
pub(crate) struct FingerprintArgs {
    /// First-session dataset manifest.
    #[arg(long)]
    train: PathBuf,
    /// Second-session dataset manifest with the same ids.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum, default_value_t = DissimilarityArg::Ecm)]
    dissimilarity: DissimilarityArg,
    /// Also write the match table to <output>/fingerprint.json.
    #[arg(long)]
    output: Option<PathBuf>,
}

pub(crate) fn fingerprint(args: FingerprintArgs) -> Result<(), CliError> {
    let (train, _) = dataset::read_dataset(&args.train)?;
    let (test, _) = dataset::read_dataset(&args.test)?;
    let dissimilarity = match args.dissimilarity {
        DissimilarityArg::Ecm => Dissimilarity::Geometry(GeometryKind::Ecm),
        DissimilarityArg::Lec => Dissimilarity::Geometry(GeometryKind::Lec),
        DissimilarityArg::Airm => Dissimilarity::Geometry(GeometryKind::Airm),
        DissimilarityArg::Qam => Dissimilarity::Geometry(GeometryKind::qam()),
        DissimilarityArg::Pearson => Dissimilarity::PearsonBaseline,
        DissimilarityArg::Euclidean => Dissimilarity::EuclideanBaseline,
    };
    let report = fingerprint::fingerprint(&train, &test, dissimilarity)?;
    let correct = report.matches.iter().filter(|m| m.correct).count();
    println!(
        "accuracy {:.4} ({}/{} correct)",
        report.accuracy,
        correct,
        report.matches.len()
    );
    if let Some(dir) = &args.output {
        ensure_dir(dir)?;
        write_report(
            &dir.join("fingerprint.json"),
            &json!({
                "provenance": provenance("fingerprint", json!({
                    "train": args.train.display().to_string(),
                    "test": args.test.display().to_string(),
                    "dissimilarity": report.dissimilarity,
                })),
                "accuracy": report.accuracy,
                "matches": report.matches,
            }),
        )?;
    }
    Ok(())
}

#[derive(Args)]
pub(crate) struct BenchmarkArgs {
    /// Comma-separated matrix dimensions.
    #[arg(long, default_value = "10,50")]
    dims: String,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Comma-separated geometries (ecm, lec, airm, qam).
    #[arg(long, default_value = "ecm,lec")]
    geometries: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    let dims: Vec<usize> = args
        .dims
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::Usage(format!(
                "--dims expects a comma-separated list of integers, got {:?}",
                args.dims
            ))
        })?;
    let kinds: Vec<GeometryKind> = args
        .geometries
        .split(',')
        .map(|t| match t.trim() {
            "ecm" => Ok(GeometryKind::Ecm),
            "lec" => Ok(GeometryKind::Lec),
            "airm" => Ok(GeometryKind::Airm),
            "qam" => Ok(GeometryKind::qam()),
            other => Err(CliError::Usage(format!("unknown geometry {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    let rows = benchmark_distances(&dims, args.trials, &kinds, args.seed)?;
    ensure_dir(&args.output)?;
    let mut table = String::from("n,geometry,trials,mean_seconds,std_seconds\n");
    for row in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            row.n,
            row.geometry.name(),
            row.trials,
            format_float(row.mean_seconds),
            format_float(row.std_seconds)
        ));
    }
    let table_path = args.output.join("benchmark.csv");
    fs::write(&table_path, table)?;
    write_report(
        &args.output.join("benchmark.json"),
        &json!({
            "provenance": provenance("benchmark", json!({
                "dims": dims,
                "trials": args.trials,
                "geometries": args.geometries,
                "seed": args.seed,
            })),
            "rows": rows,
            "table": "benchmark.csv",
        }),
    )?;
    println!("wrote {}", table_path.display());
    Ok(())
}

#[derive(Args)]
pub(crate) struct BinarizeArgs {
    /// Correlation matrix CSV.
    #[arg(long)]
    input: PathBuf,
    /// Fraction of off-diagonal entries to keep, by absolute value.
    #[arg(long)]
    q: f64,
    #[arg(long)]
    output: PathBuf,
}

pub(crate) fn binarize(args: BinarizeArgs) -> Result<(), CliError> {
    let m = dataset::read_matrix_csv(&args.input)?;
    let c = CorrelationMatrix::new(m)
        .map_err(|err| CliError::Data(format!("{}: {err}", args.input.display())))?;
    let network = binarize::binarize_top_q(&c, args.q)?;
    ensure_dir(&args.output)?;
    let matrix_path = args.output.join("network.csv");
    dataset::write_integer_csv(&matrix_path, &network.adjacency)?;
    write_report(
        &args.output.join("binarize.json"),
        &json!({
            "provenance": provenance("binarize", json!({
                "input": args.input.display().to_string(),
                "q": args.q,
            })),
            "retained": network.retained,
            "tie_at_threshold": network.tie_at_threshold,
            "matrix": "network.csv",
        }),
    )?;
    println!("retained {} edges", network.retained);
    Ok(())
}
