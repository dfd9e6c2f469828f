//! Subject identification across sessions by 1-nearest-neighbor matching.
//!
//! Each test item is assigned the id of its nearest training item under the
//! chosen dissimilarity. Geometry distances compete against two matrix-space
//! baselines: one minus the Pearson correlation of the half-vectorized upper
//! triangles, and the plain Frobenius distance.

use crate::geometry::{self, GeometryError, GeometryKind};
use crate::types::SampleSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FingerprintError {
    #[error("both sample sets need ids for identification")]
    MissingIds,
    #[error("train and test id sets differ (first unmatched: {id})")]
    IdMismatch { id: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dissimilarity {
    Geometry(GeometryKind),
    /// 1 - Pearson correlation of the strict upper triangles.
    PearsonBaseline,
    /// Frobenius distance between the raw matrices.
    EuclideanBaseline,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MatchRecord {
    pub test_id: String,
    pub matched_id: String,
    pub dissimilarity: f64,
    pub correct: bool,
    /// The minimum was attained by several train items; the lowest train
    /// index won.
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FingerprintReport {
    pub dissimilarity: Dissimilarity,
    /// Correctly identified fraction of the test set.
    pub accuracy: f64,
    pub matches: Vec<MatchRecord>,
}

fn require_matching_ids<'a>(
    train: &'a SampleSet,
    test: &'a SampleSet,
) -> Result<(&'a [String], &'a [String]), FingerprintError> {
    // id uniqueness within each set is already a SampleSet invariant
    let train_ids = train.ids().ok_or(FingerprintError::MissingIds)?;
    let test_ids = test.ids().ok_or(FingerprintError::MissingIds)?;
    let train_set: std::collections::HashSet<&String> = train_ids.iter().collect();
    let test_set: std::collections::HashSet<&String> = test_ids.iter().collect();
    if let Some(&id) = train_set
        .symmetric_difference(&test_set)
        .next()
    {
        return Err(FingerprintError::IdMismatch { id: id.clone() });
    }
    Ok((train_ids, test_ids))
}

fn strict_upper(values: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let n = values.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(values[(i, j)]);
        }
    }
    out
}

fn pearson_dissimilarity(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / m;
    let mean_b = b.iter().sum::<f64>() / m;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    let denom = (var_a * var_b).sqrt();
    if denom == 0.0 {
        // a constant half-vector correlates with nothing
        return 1.0;
    }
    1.0 - cov / denom
}

pub fn fingerprint(
    train: &SampleSet,
    test: &SampleSet,
    dissimilarity: Dissimilarity,
) -> Result<FingerprintReport, FingerprintError> {
    let (train_ids, test_ids) = require_matching_ids(train, test)?;
    let train_uppers: Option<Vec<Vec<f64>>> = match dissimilarity {
        Dissimilarity::PearsonBaseline => Some(
            train
                .items()
                .iter()
                .map(|c| strict_upper(c.matrix()))
                .collect(),
        ),
        _ => None,
    };
    let mut matches = Vec::with_capacity(test.len());
    let mut correct = 0usize;
    for (t, test_item) in test.items().iter().enumerate() {
        let test_upper = train_uppers
            .as_ref()
            .map(|_| strict_upper(test_item.matrix()));
        let mut best = f64::INFINITY;
        let mut best_index = 0usize;
        let mut tie = false;
        for (r, train_item) in train.items().iter().enumerate() {
            let d = match dissimilarity {
                Dissimilarity::Geometry(kind) => {
                    geometry::distance(kind, test_item, train_item)?
                }
                Dissimilarity::PearsonBaseline => pearson_dissimilarity(
                    test_upper.as_ref().expect("precomputed"),
                    &train_uppers.as_ref().expect("precomputed")[r],
                ),
                Dissimilarity::EuclideanBaseline => {
                    (test_item.matrix() - train_item.matrix()).norm()
                }
            };
            if d < best {
                best = d;
                best_index = r;
                tie = false;
            } else if d == best {
                tie = true;
            }
        }
        let matched_id = train_ids[best_index].clone();
        let is_correct = matched_id == test_ids[t];
        if is_correct {
            correct += 1;
        }
        matches.push(MatchRecord {
            test_id: test_ids[t].clone(),
            matched_id,
            dissimilarity: best,
            correct: is_correct,
            tie,
        });
    }
    Ok(FingerprintReport {
        dissimilarity,
        accuracy: correct as f64 / test.len() as f64,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{self, Generator, SimulationSpec};

    fn with_ids(s: SampleSet, ids: Vec<String>) -> SampleSet {
        s.with_ids(ids).unwrap()
    }

    fn subject_ids(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("subj{i:03}")).collect()
    }

    /// One normalized Wishart draw per subject, scale AR(1) with the
    /// subject's own decay; `session` just offsets the seed stream.
    fn session(rhos: &[f64], dim: usize, dof: f64, session: u64) -> SampleSet {
        let items: Vec<_> = rhos
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let one = sim::simulate(&SimulationSpec {
                    generator: Generator::WishartAr1 { rho },
                    dim,
                    count: 1,
                    dof: Some(dof),
                    seed: 1000 * session + i as u64,
                })
                .unwrap();
                one.items()[0].clone()
            })
            .collect();
        SampleSet::new(items)
            .unwrap()
            .with_ids(subject_ids(rhos.len()))
            .unwrap()
    }

    const ALL: [Dissimilarity; 3] = [
        Dissimilarity::Geometry(GeometryKind::Ecm),
        Dissimilarity::PearsonBaseline,
        Dissimilarity::EuclideanBaseline,
    ];

    #[test]
    fn identical_sessions_identify_perfectly() {
        let s = sim::simulate(&SimulationSpec {
            generator: Generator::WishartIdentity,
            dim: 6,
            count: 12,
            dof: None,
            seed: 71,
        })
        .unwrap();
        let s = with_ids(s, subject_ids(12));
        for dissimilarity in ALL {
            let report = fingerprint(&s, &s, dissimilarity).unwrap();
            assert_eq!(report.accuracy, 1.0, "{dissimilarity:?}");
            assert!(report.matches.iter().all(|m| m.correct));
        }
    }

    #[test]
    fn independent_samples_match_at_chance_level() {
        let m = 50;
        let mut mean_accuracy = 0.0;
        let trials = 20;
        for trial in 0..trials {
            let train = with_ids(
                sim::simulate(&SimulationSpec {
                    generator: Generator::WishartIdentity,
                    dim: 5,
                    count: m,
                    dof: None,
                    seed: 100 + 2 * trial,
                })
                .unwrap(),
                subject_ids(m),
            );
            let test = with_ids(
                sim::simulate(&SimulationSpec {
                    generator: Generator::WishartIdentity,
                    dim: 5,
                    count: m,
                    dof: None,
                    seed: 101 + 2 * trial,
                })
                .unwrap(),
                subject_ids(m),
            );
            let report =
                fingerprint(&train, &test, Dissimilarity::Geometry(GeometryKind::Ecm)).unwrap();
            mean_accuracy += report.accuracy;
        }
        mean_accuracy /= trials as f64;
        let chance = 1.0 / m as f64;
        assert!(
            (mean_accuracy - chance).abs() <= 3.0 / m as f64,
            "mean accuracy {mean_accuracy} vs chance {chance}"
        );
    }

    #[test]
    fn geometry_identification_dominates_the_baselines() {
        let rhos: Vec<f64> = (0..12).map(|i| 0.05 + 0.075 * i as f64).collect();
        let train = session(&rhos, 8, 800.0, 1);
        let test = session(&rhos, 8, 800.0, 2);
        let geometry_report =
            fingerprint(&train, &test, Dissimilarity::Geometry(GeometryKind::Ecm)).unwrap();
        let pearson_report = fingerprint(&train, &test, Dissimilarity::PearsonBaseline).unwrap();
        let chance = 1.0 / rhos.len() as f64;
        assert!(
            geometry_report.accuracy >= pearson_report.accuracy,
            "geometry {} < pearson {}",
            geometry_report.accuracy,
            pearson_report.accuracy
        );
        assert!(
            pearson_report.accuracy > chance,
            "pearson {} at chance",
            pearson_report.accuracy
        );
        assert!(geometry_report.accuracy >= 0.8);
    }

    #[test]
    fn id_contract_is_enforced() {
        let s = sim::simulate(&SimulationSpec {
            generator: Generator::WishartIdentity,
            dim: 4,
            count: 3,
            dof: None,
            seed: 72,
        })
        .unwrap();
        let anonymous = SampleSet::new(s.items().to_vec()).unwrap();
        let err = fingerprint(&anonymous, &anonymous, Dissimilarity::EuclideanBaseline);
        assert!(matches!(err, Err(FingerprintError::MissingIds)));

        let named = with_ids(s.clone(), subject_ids(3));
        let other = with_ids(
            s.clone(),
            vec!["a".into(), "b".into(), "c".into()],
        );
        let err = fingerprint(&named, &other, Dissimilarity::EuclideanBaseline);
        assert!(matches!(err, Err(FingerprintError::IdMismatch { .. })));
    }

    #[test]
    fn exact_ties_prefer_the_lowest_train_index() {
        // duplicate training item under two ids: the nearest match ties and
        // the earlier index wins
        let s = sim::simulate(&SimulationSpec {
            generator: Generator::WishartIdentity,
            dim: 4,
            count: 2,
            dof: None,
            seed: 73,
        })
        .unwrap();
        let duplicated = vec![
            s.items()[0].clone(),
            s.items()[0].clone(),
            s.items()[1].clone(),
        ];
        let train = SampleSet::new(duplicated.clone())
            .unwrap()
            .with_ids(vec!["x".into(), "y".into(), "z".into()])
            .unwrap();
        let test = SampleSet::new(duplicated)
            .unwrap()
            .with_ids(vec!["y".into(), "x".into(), "z".into()])
            .unwrap();
        let report = fingerprint(&train, &test, Dissimilarity::EuclideanBaseline).unwrap();
        // both copies of the duplicate match train index 0 ("x")
        assert_eq!(report.matches[0].matched_id, "x");
        assert!(report.matches[0].tie);
        assert!(!report.matches[0].correct);
        assert_eq!(report.matches[1].matched_id, "x");
        assert!(report.matches[1].correct);
        assert!(report.matches[2].correct);
    }
}
