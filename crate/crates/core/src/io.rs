//! File formats: CSV panels, JSON signatures, target sets, distance
//! matrices, cluster reports, and panel manifests.
//!
//! Floats are written with shortest round-trip formatting (both by `format!`
//! and by serde_json), so write-then-read reproduces every value bit for bit
//! and equal inputs always serialize to identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cluster::{DistanceMatrix, Merge};
use crate::copula::{
    default_pattern_sample_size, monotone_signature, signature_from_pattern, Panel, Signature,
};
use crate::dependence::{independence_reference, TargetSet};
use crate::error::{Error, Result};
use crate::synth::PatternKind;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::Io {
        path: path_str(path),
        source: e,
    })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
        path: path_str(path),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
        path: path_str(path),
        message: e.to_string(),
    })?;
    buf.push(b'\n');
    fs::write(path, buf).map_err(|e| Error::Io {
        path: path_str(path),
        source: e,
    })
}

/// Reads a panel from CSV: one header row of channel names, then one row
/// per time step. Returns the panel and the header names.
pub fn read_panel_csv(path: &Path) -> Result<(Panel, Vec<String>)> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path_str(path),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != headers.len() {
            return Err(Error::Csv {
                path: path_str(path),
                message: format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    record.len(),
                    headers.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                path: path_str(path),
                message: format!("row {}, column '{}': not a number: '{field}'", i + 1, headers[j]),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let panel = Panel::from_rows(&rows)?;
    Ok((panel, headers))
}

pub fn write_panel_csv(path: &Path, panel: &Panel, headers: &[String]) -> Result<()> {
    if headers.len() != panel.cols() {
        return Err(Error::LengthMismatch {
            left: headers.len(),
            right: panel.cols(),
        });
    }
    let csv_err = |e: csv::Error| Error::Csv {
        path: path_str(path),
        message: e.to_string(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(headers).map_err(csv_err)?;
    let mut record = Vec::with_capacity(panel.cols());
    for t in 0..panel.rows() {
        record.clear();
        record.extend(panel.row(t).iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path_str(path),
        source: e,
    })
}

/// JSON form of a [`Signature`]; atoms serialize as `[[coords...], weight]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureDoc {
    pub dimension: usize,
    pub resolution: usize,
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl SignatureDoc {
    pub fn from_signature(sig: &Signature) -> Self {
        SignatureDoc {
            dimension: sig.dimension(),
            resolution: sig.resolution(),
            atoms: sig
                .atoms()
                .iter()
                .map(|a| (a.position.clone(), a.weight))
                .collect(),
        }
    }

    /// Revalidates everything, so hand-edited files cannot smuggle in
    /// off-grid atoms or unnormalized weights.
    pub fn into_signature(self) -> Result<Signature> {
        Signature::new(self.dimension, self.resolution, self.atoms)
    }
}

pub fn read_signature_json(path: &Path) -> Result<Signature> {
    read_json::<SignatureDoc>(path)?.into_signature()
}

pub fn write_signature_json(path: &Path, sig: &Signature) -> Result<()> {
    write_json(path, &SignatureDoc::from_signature(sig))
}

/// One named target in a targets file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetDoc {
    /// Monotone grid copula; orientation entries are +1 or -1 per channel.
    Monotone { orientation: Vec<i8> },
    /// Noiseless sampled pattern copula (bivariate only).
    Pattern {
        pattern: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_size: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Atoms given outright, same layout as a signature file.
    Explicit {
        dimension: usize,
        resolution: usize,
        atoms: Vec<(Vec<f64>, f64)>,
    },
}

/// Targets file body. BTreeMap fixes the target order alphabetically by
/// name no matter how the file was written.
pub type TargetsDoc = BTreeMap<String, TargetDoc>;

pub fn read_targets_json(path: &Path) -> Result<TargetsDoc> {
    read_json(path)
}

pub fn write_targets_json(path: &Path, docs: &TargetsDoc) -> Result<()> {
    write_json(path, docs)
}

/// Builds the concrete target set a TDC run will use. `dimension` and
/// `resolution` come from the run configuration, not the file, so one
/// targets file can serve several resolutions.
pub fn materialize_targets(
    docs: &TargetsDoc,
    dimension: usize,
    resolution: usize,
    default_seed: u64,
) -> Result<TargetSet> {
    let mut entries = Vec::with_capacity(docs.len());
    for (name, doc) in docs {
        let sig = match doc {
            TargetDoc::Monotone { orientation } => {
                if orientation.len() != dimension {
                    return Err(Error::InvalidTargets(format!(
                        "target '{name}': orientation has {} entries, need {dimension}",
                        orientation.len()
                    )));
                }
                monotone_signature(dimension, resolution, orientation)?
            }
            TargetDoc::Pattern {
                pattern,
                sample_size,
                seed,
            } => {
                if dimension != 2 {
                    return Err(Error::InvalidTargets(format!(
                        "target '{name}': pattern targets are bivariate, run dimension is {dimension}"
                    )));
                }
                let kind: PatternKind = pattern.parse()?;
                if kind == PatternKind::Independence {
                    return Err(Error::InvalidTargets(format!(
                        "target '{name}': independence is the reference, not a target"
                    )));
                }
                let sample =
                    sample_size.unwrap_or_else(|| default_pattern_sample_size(resolution));
                signature_from_pattern(kind, resolution, sample, seed.unwrap_or(default_seed))?
            }
            TargetDoc::Explicit {
                dimension: d,
                resolution: m,
                atoms,
            } => Signature::new(*d, *m, atoms.clone())?,
        };
        entries.push((name.clone(), sig));
    }
    TargetSet::new(entries, independence_reference(dimension, resolution)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceMatrixDoc {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl DistanceMatrixDoc {
    pub fn from_matrix(m: &DistanceMatrix) -> Self {
        DistanceMatrixDoc {
            labels: m.labels().to_vec(),
            entries: m.rows(),
        }
    }

    pub fn into_matrix(self) -> Result<DistanceMatrix> {
        DistanceMatrix::new(self.labels, self.entries)
    }
}

pub fn read_matrix_json(path: &Path) -> Result<DistanceMatrix> {
    read_json::<DistanceMatrixDoc>(path)?.into_matrix()
}

pub fn write_matrix_json(path: &Path, m: &DistanceMatrix) -> Result<()> {
    write_json(path, &DistanceMatrixDoc::from_matrix(m))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeDoc {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

impl From<&Merge> for MergeDoc {
    fn from(m: &Merge) -> Self {
        MergeDoc {
            left: m.left,
            right: m.right,
            height: m.height,
            size: m.size,
        }
    }
}

/// Output of the cluster command: flat assignments plus the full merge
/// sequence for anyone who wants the dendrogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterDoc {
    pub linkage: String,
    pub k: usize,
    pub labels: Vec<String>,
    pub assignments: Vec<usize>,
    pub merges: Vec<MergeDoc>,
}

pub fn write_cluster_json(path: &Path, doc: &ClusterDoc) -> Result<()> {
    write_json(path, doc)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// CSV path, resolved relative to the manifest file's directory.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Defaults a manifest can carry; command-line flags win over these.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Only "exact" is valid here: matrix distances never use sinkhorn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
}

/// Lists the panels a matrix run operates on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub panels: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: ManifestOptions,
}

fn is_default_options(o: &ManifestOptions) -> bool {
    *o == ManifestOptions::default()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    read_json(path)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    write_json(path, manifest)
}

/// Loads every panel in a manifest, plus the manifest's option block.
/// Missing labels fall back to the CSV file stem.
pub fn load_manifest_panels(path: &Path) -> Result<(Vec<Panel>, ManifestOptions)> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut panels = Vec::with_capacity(manifest.panels.len());
    for entry in &manifest.panels {
        let csv_path = base.join(&entry.path);
        let (panel, _) = read_panel_csv(&csv_path)?;
        let label = entry.label.clone().unwrap_or_else(|| {
            csv_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| entry.path.clone())
        });
        panels.push(panel.with_series_id(label));
    }
    Ok((panels, manifest.options))
}
