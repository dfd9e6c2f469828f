//! Dataset manifests and matrix files.
//!
//! A dataset on disk is a JSON manifest plus one CSV file per matrix,
//! paths resolved relative to the manifest. Matrices are written as n rows
//! of comma-separated values: UTF-8, LF line endings, no header, 17
//! significant digits, so every f64 survives a write/read cycle bit for
//! bit.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use corrmanifold::{CorrelationMatrix, SampleSet, ValidationError};
use nalgebra::DMatrix;

pub(crate) const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub(crate) enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Manifest {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("entry {id}: {source}")]
    Entry {
        id: String,
        #[source]
        source: ValidationError,
    },
    #[error("entry {id}: matrix has dimension {found}, manifest declares {expected}")]
    WrongDimension {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate id {id}")]
    DuplicateId { id: String },
    #[error("manifest schema version {found} not supported (this build reads {supported})")]
    SchemaVersion { found: u32, supported: u32 },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub(crate) struct ManifestEntry {
    pub id: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub(crate) struct DatasetManifest {
    pub schema_version: u32,
    pub dimension: usize,
    pub entries: Vec<ManifestEntry>,
    /// Generator parameters and seed when the dataset was simulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creation: Option<serde_json::Value>,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// 17 significant digits; enough for f64 to roundtrip exactly through
/// `str::parse`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<(), DatasetError> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                text.push(',');
            }
            text.push_str(&format_float(m[(i, j)]));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: display(path),
        source,
    })
}

/// Same format with integer cells, for 0/1 adjacency matrices.
pub(crate) fn write_integer_csv(path: &Path, m: &DMatrix<f64>) -> Result<(), DatasetError> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                text.push(',');
            }
            text.push_str(&format!("{}", m[(i, j)] as i64));
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: display(path),
        source,
    })
}

/// Any rectangular numeric CSV; squareness is the caller's concern.
pub(crate) fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: display(path),
        source,
    })?;
    let parse = |detail: String| DatasetError::Parse {
        path: display(path),
        detail,
    };
    let mut values: Vec<f64> = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let mut count = 0;
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse(format!("line {}: non-numeric cell {cell:?}", lineno + 1)))?;
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(parse(format!(
                    "line {}: {count} columns, expected {c}",
                    lineno + 1
                )));
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse("file is empty".into()))?;
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

fn read_square_csv(path: &Path, id: &str, expected: usize) -> Result<DMatrix<f64>, DatasetError> {
    let m = read_matrix_csv(path)?;
    if m.nrows() != m.ncols() {
        return Err(DatasetError::Parse {
            path: display(path),
            detail: format!("{}x{} matrix is not square", m.nrows(), m.ncols()),
        });
    }
    if m.nrows() != expected {
        return Err(DatasetError::WrongDimension {
            id: id.to_string(),
            expected,
            found: m.nrows(),
        });
    }
    Ok(m)
}

/// Loads every referenced matrix; ids always attach to the set, labels only
/// when every entry carries one.
pub(crate) fn read_dataset(
    manifest_path: &Path,
) -> Result<(SampleSet, DatasetManifest), DatasetError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| DatasetError::Io {
        path: display(manifest_path),
        source,
    })?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|source| DatasetError::Manifest {
            path: display(manifest_path),
            source,
        })?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(DatasetError::SchemaVersion {
            found: manifest.schema_version,
            supported: MANIFEST_SCHEMA_VERSION,
        });
    }
    if manifest.entries.is_empty() {
        return Err(DatasetError::Parse {
            path: display(manifest_path),
            detail: "manifest has no entries".into(),
        });
    }
    let mut seen = HashSet::new();
    for entry in &manifest.entries {
        if !seen.insert(entry.id.as_str()) {
            return Err(DatasetError::DuplicateId {
                id: entry.id.clone(),
            });
        }
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut items = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let m = read_square_csv(&base.join(&entry.path), &entry.id, manifest.dimension)?;
        items.push(
            CorrelationMatrix::new(m).map_err(|source| DatasetError::Entry {
                id: entry.id.clone(),
                source,
            })?,
        );
    }
    let ids: Vec<String> = manifest.entries.iter().map(|e| e.id.clone()).collect();
    let mut set = SampleSet::new(items)?.with_ids(ids)?;
    if manifest.entries.iter().all(|e| e.label.is_some()) {
        let labels = manifest.entries.iter().map(|e| e.label.unwrap()).collect();
        set = set.with_labels(labels)?;
    }
    Ok((set, manifest))
}

/// Ids become file names after replacing anything outside [A-Za-z0-9._-];
/// collisions get a numeric suffix.
fn file_names(ids: &[String]) -> Vec<String> {
    let mut taken = HashSet::new();
    ids.iter()
        .map(|id| {
            let mut stem: String = id
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            if stem.is_empty() {
                stem.push('m');
            }
            let mut name = format!("{stem}.csv");
            let mut k = 1;
            while !taken.insert(name.clone()) {
                name = format!("{stem}_{k}.csv");
                k += 1;
            }
            name
        })
        .collect()
}

/// Writes one CSV per sample plus `manifest.json` into `dir` and returns the
/// manifest path. Ids are taken from the set or synthesized as s0000-style
/// ordinals; labels come from the set, groups from the caller.
pub(crate) fn write_dataset(
    s: &SampleSet,
    dir: &Path,
    groups: Option<&[String]>,
    creation: Option<serde_json::Value>,
) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: display(dir),
        source,
    })?;
    let ids: Vec<String> = match s.ids() {
        Some(ids) => ids.to_vec(),
        None => (0..s.len()).map(|i| format!("s{i:04}")).collect(),
    };
    let names = file_names(&ids);
    for (item, name) in s.items().iter().zip(&names) {
        write_matrix_csv(&dir.join(name), item.matrix())?;
    }
    let entries = ids
        .iter()
        .zip(&names)
        .enumerate()
        .map(|(i, (id, name))| ManifestEntry {
            id: id.clone(),
            path: name.clone(),
            label: s.labels().map(|ls| ls[i]),
            group: groups.map(|gs| gs[i].clone()),
        })
        .collect();
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        dimension: s.dim(),
        entries,
        creation,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|source| DatasetError::Io {
        path: display(&path),
        source,
    })?;
    Ok(path)
}
