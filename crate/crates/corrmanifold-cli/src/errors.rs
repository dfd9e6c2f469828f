use corrmanifold::binarize::BinarizeError;
use corrmanifold::clustering::ClusteringError;
use corrmanifold::dimred::DimredError;
use corrmanifold::estimators::EstimatorError;
use corrmanifold::fingerprint::FingerprintError;
use corrmanifold::frechet::FrechetError;
use corrmanifold::geometry::GeometryError;
use corrmanifold::kernel::KernelError;
use corrmanifold::sim::SimError;
use corrmanifold::timing::TimingError;
use corrmanifold::twosample::TwoSampleError;
use corrmanifold::ValidationError;

use crate::dataset::DatasetError;

/// Failure categories, one per nonzero exit code: bad invocation (1), bad
/// or missing input data (2), numerical breakdown during computation (3).
#[derive(Debug, thiserror::Error)]
pub(crate) enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub(crate) fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(err: DatasetError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(err: ValidationError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(err: GeometryError) -> Self {
        match err {
            GeometryError::UnsupportedGeometry { .. } | GeometryError::QamDimensionCap { .. } => {
                CliError::Usage(err.to_string())
            }
            GeometryError::DimensionMismatch { .. } | GeometryError::BadCoordinateLength { .. } => {
                CliError::Data(err.to_string())
            }
            GeometryError::CholeskyFailure | GeometryError::EigenvalueUnderflow { .. } => {
                CliError::Numerical(err.to_string())
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::DegenerateDraw(_) => CliError::Numerical(err.to_string()),
            _ => CliError::Usage(err.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(err: EstimatorError) -> Self {
        match err {
            EstimatorError::BadBlockCount { .. } => CliError::Usage(err.to_string()),
            EstimatorError::SingularResult { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<FrechetError> for CliError {
    fn from(err: FrechetError) -> Self {
        match err {
            FrechetError::Geometry(g) => g.into(),
            FrechetError::DimensionMismatch { .. } => CliError::Data(err.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(err: KernelError) -> Self {
        match err {
            KernelError::BadTheta { .. }
            | KernelError::BadNoiseVariance { .. }
            | KernelError::BadSvrParams { .. }
            | KernelError::EmptyGrid => CliError::Usage(err.to_string()),
            KernelError::MissingLabels
            | KernelError::DimensionMismatch { .. }
            | KernelError::InsufficientData { .. } => CliError::Data(err.to_string()),
            KernelError::SingularSystem { .. }
            | KernelError::NotConverged { .. }
            | KernelError::NumericalUnderflow => CliError::Numerical(err.to_string()),
            KernelError::Geometry(g) => g.into(),
        }
    }
}

impl From<ClusteringError> for CliError {
    fn from(err: ClusteringError) -> Self {
        match err {
            ClusteringError::BadK { .. } => CliError::Usage(err.to_string()),
            ClusteringError::Geometry(g) => g.into(),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<TwoSampleError> for CliError {
    fn from(err: TwoSampleError) -> Self {
        match err {
            TwoSampleError::NoPermutations => CliError::Usage(err.to_string()),
            TwoSampleError::Geometry(g) => g.into(),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<DimredError> for CliError {
    fn from(err: DimredError) -> Self {
        match err {
            DimredError::BadDimension { .. }
            | DimredError::BadPerplexity { .. }
            | DimredError::BadHiddenWidth { .. }
            | DimredError::NeedsSamples { .. } => CliError::Usage(err.to_string()),
            DimredError::Geometry(g) => g.into(),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<FingerprintError> for CliError {
    fn from(err: FingerprintError) -> Self {
        match err {
            FingerprintError::Geometry(g) => g.into(),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<BinarizeError> for CliError {
    fn from(err: BinarizeError) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<TimingError> for CliError {
    fn from(err: TimingError) -> Self {
        match err {
            TimingError::QamDimensionCap { .. } | TimingError::NoTrials => {
                CliError::Usage(err.to_string())
            }
            TimingError::Simulation(s) => s.into(),
            TimingError::Geometry(g) => g.into(),
        }
    }
}
