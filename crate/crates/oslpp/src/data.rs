//! Dataset ingestion and the known/unknown label space.
//!
//! Feature files carry no class information; labels live in sibling files.
//! Two feature-file formats are supported:
//!
//! * **CSV** — one sample per line, comma-separated decimal values, no
//!   header.
//! * **f32 binary** — an 8-byte little-endian row count, an 8-byte
//!   little-endian column count, then row-major 4-byte little-endian
//!   IEEE-754 values.
//!
//! Label files are newline-separated integers, one per sample.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense matrix of sample feature vectors, one row per sample.
///
/// Construction validates that the matrix is non-empty and that every
/// value is finite; all downstream numerics rely on both.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    /// Wrap a dense matrix, checking the type invariants.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Shape(format!(
                "feature matrix must have at least one row and one column, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "non-finite value {v} at row {i}, column {j}"
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    /// Build from per-sample rows. All rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("no rows given".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_row_slice(rows.len(), cols, &flat))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// On-disk encoding of a [`FeatureMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Csv,
    F32Binary,
}

/// Load a feature matrix from `path` in the given format.
pub fn load_features(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix> {
    match format {
        FeatureFormat::Csv => load_features_csv(path),
        FeatureFormat::F32Binary => load_features_binary(path),
    }
}

fn load_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines: Vec<String> = Vec::new();
    for line in reader.lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    // A trailing newline produces one empty final entry; drop it.
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::Validation(format!(
            "feature file `{}` is empty",
            path.display()
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
    let mut cols = None;
    for (idx, line) in lines.iter().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            return Err(Error::parse(
                path,
                format!("line {lineno}"),
                "empty line inside feature data",
            ));
        }
        let mut row = Vec::new();
        for (fld, token) in line.split(',').enumerate() {
            let v: f64 = token.trim().parse().map_err(|_| {
                Error::parse(
                    path,
                    format!("line {lineno}"),
                    format!("field {} is not a decimal number: `{}`", fld + 1, token.trim()),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value `{}` at line {lineno}, field {} of `{}`",
                    token.trim(),
                    fld + 1,
                    path.display()
                )));
            }
            row.push(v);
        }
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Shape(format!(
                    "ragged row at line {lineno} of `{}`: {} values, expected {c}",
                    path.display(),
                    row.len()
                )));
            }
            _ => {}
        }
        rows.push(row);
    }
    FeatureMatrix::from_rows(&rows)
}

fn load_features_binary(path: &Path) -> Result<FeatureMatrix> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 16];
    file.read_exact(&mut header)
        .map_err(|_| Error::parse(path, "offset 0", "truncated header (need 16 bytes)"))?;
    let rows = u64::from_le_bytes(header[0..8].try_into().unwrap());
    let cols = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .filter(|&n| n <= (usize::MAX / 4) as u64)
        .ok_or_else(|| {
            Error::parse(path, "offset 0", format!("implausible dimensions {rows}x{cols}"))
        })?;

    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    let expected = count as usize * 4;
    if payload.len() != expected {
        return Err(Error::parse(
            path,
            "offset 16",
            format!(
                "payload holds {} bytes, expected {expected} for a {rows}x{cols} matrix",
                payload.len()
            ),
        ));
    }

    let mut values = Vec::with_capacity(count as usize);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite value at offset {} of `{}`",
                16 + i * 4,
                path.display()
            )));
        }
        values.push(v);
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Shape(format!(
            "feature matrix must have at least one row and one column, got {rows}x{cols}"
        )));
    }
    FeatureMatrix::from_matrix(DMatrix::from_row_slice(rows as usize, cols as usize, &values))
}

/// Write a feature matrix to `path`. CSV output uses the shortest decimal
/// representation that round-trips each `f64`; binary output truncates
/// values to `f32` as the format requires.
pub fn save_features(path: &Path, m: &FeatureMatrix, format: FeatureFormat) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    match format {
        FeatureFormat::Csv => {
            for i in 0..m.rows() {
                let mut line = String::new();
                for j in 0..m.cols() {
                    if j > 0 {
                        line.push(',');
                    }
                    line.push_str(&format!("{}", m.matrix()[(i, j)]));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
        }
        FeatureFormat::F32Binary => {
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    out.extend_from_slice(&(m.matrix()[(i, j)] as f32).to_le_bytes());
                }
            }
        }
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Load newline-separated integer class ids.
pub fn load_labels(path: &Path) -> Result<Vec<i64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let id: i64 = trimmed.parse().map_err(|_| {
            Error::parse(
                path,
                format!("line {}", idx + 1),
                format!("not an integer class id: `{trimmed}`"),
            )
        })?;
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(Error::Validation(format!(
            "label file `{}` is empty; datasets require at least one sample",
            path.display()
        )));
    }
    Ok(labels)
}

/// Write labels, one id per line.
pub fn save_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// The set of known class ids plus one reserved id for the unified
/// unknown class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    known: Vec<i64>,
    unknown_id: i64,
}

/// Derive the label space from source labels: known classes are the
/// sorted distinct ids and the unknown id is one past the largest.
pub fn build_label_space(source_labels: &[i64]) -> Result<LabelSpace> {
    if source_labels.is_empty() {
        return Err(Error::Validation("cannot build a label space from no labels".into()));
    }
    let known: Vec<i64> = source_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if known.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 known classes, got {}",
            known.len()
        )));
    }
    let unknown_id = known
        .last()
        .unwrap()
        .checked_add(1)
        .ok_or_else(|| Error::Validation("largest class id leaves no room for an unknown id".into()))?;
    Ok(LabelSpace { known, unknown_id })
}

impl LabelSpace {
    /// Sorted distinct known class ids.
    pub fn known_classes(&self) -> &[i64] {
        &self.known
    }

    pub fn unknown_id(&self) -> i64 {
        self.unknown_id
    }

    pub fn num_known(&self) -> usize {
        self.known.len()
    }

    pub fn is_known(&self, id: i64) -> bool {
        self.known.binary_search(&id).is_ok()
    }

    /// Position of `id` within [`Self::known_classes`].
    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.known.binary_search(&id).ok()
    }

    /// Map raw target ground-truth ids into this space: any id that is
    /// not a known class is folded into the unified unknown id.
    pub fn unify_target_labels(&self, raw: &[i64]) -> Vec<i64> {
        raw.iter()
            .map(|&id| if self.is_known(id) { id } else { self.unknown_id })
            .collect()
    }
}

/// Labelled source-domain samples.
#[derive(Debug, Clone)]
pub struct SourceDataset {
    features: FeatureMatrix,
    labels: Vec<i64>,
}

impl SourceDataset {
    /// Validates that labels align with the feature rows, that every
    /// label is a known class, and that every known class is populated.
    pub fn new(features: FeatureMatrix, labels: Vec<i64>, space: &LabelSpace) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        for (i, &l) in labels.iter().enumerate() {
            if !space.is_known(l) {
                return Err(Error::Validation(format!(
                    "source label {l} at row {i} is not a known class"
                )));
            }
        }
        for &c in space.known_classes() {
            if !labels.contains(&c) {
                return Err(Error::Validation(format!("known class {c} has no source samples")));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Unlabelled target-domain samples, optionally with ground truth for
/// evaluation. Ground-truth ids must already be unified (a known class
/// id or the space's unknown id); see [`LabelSpace::unify_target_labels`].
#[derive(Debug, Clone)]
pub struct TargetDataset {
    features: FeatureMatrix,
    ground_truth: Option<Vec<i64>>,
}

impl TargetDataset {
    pub fn new(
        features: FeatureMatrix,
        ground_truth: Option<Vec<i64>>,
        space: &LabelSpace,
    ) -> Result<Self> {
        if let Some(gt) = &ground_truth {
            if gt.len() != features.rows() {
                return Err(Error::Shape(format!(
                    "{} ground-truth labels for {} feature rows",
                    gt.len(),
                    features.rows()
                )));
            }
            for (i, &l) in gt.iter().enumerate() {
                if !space.is_known(l) && l != space.unknown_id() {
                    return Err(Error::Validation(format!(
                        "ground-truth id {l} at row {i} is neither a known class nor the unknown id; \
                         unify labels through the label space first"
                    )));
                }
            }
        }
        Ok(Self { features, ground_truth })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn ground_truth(&self) -> Option<&[i64]> {
        self.ground_truth.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(path: &Path, content: &[u8]) {
        std::fs::write(path, content).unwrap();
    }

    #[test]
    fn csv_parses_two_by_two() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write(&p, b"1.0,2.0\n3.0,4.0\n");
        let m = load_features(&p, FeatureFormat::Csv).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.matrix()[(0, 0)], 1.0);
        assert_eq!(m.matrix()[(0, 1)], 2.0);
        assert_eq!(m.matrix()[(1, 0)], 3.0);
        assert_eq!(m.matrix()[(1, 1)], 4.0);
    }

    #[test]
    fn csv_ragged_row_is_shape_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write(&p, b"1.0,2.0\n3.0\n");
        match load_features(&p, FeatureFormat::Csv) {
            Err(Error::Shape(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn csv_bad_token_reports_line() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write(&p, b"1.0,2.0\n3.0,oops\n");
        match load_features(&p, FeatureFormat::Csv) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "line 2"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_finite() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write(&p, b"1.0,inf\n");
        assert!(matches!(
            load_features(&p, FeatureFormat::Csv),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn binary_round_trip_2x3() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, -6.5]]).unwrap();
        save_features(&p, &m, FeatureFormat::F32Binary).unwrap();
        let back = load_features(&p, FeatureFormat::F32Binary).unwrap();
        assert_eq!((back.rows(), back.cols()), (2, 3));
        assert_eq!(m, back);
    }

    #[test]
    fn binary_hand_written_header() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&3u64.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        write(&p, &bytes);
        let m = load_features(&p, FeatureFormat::F32Binary).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.matrix()[(1, 2)], 6.0);
    }

    #[test]
    fn binary_truncated_payload_is_parse_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&3u64.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        write(&p, &bytes);
        assert!(matches!(
            load_features(&p, FeatureFormat::F32Binary),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn labels_parse_in_order() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("l.txt");
        write(&p, b"0\n0\n1\n");
        assert_eq!(load_labels(&p).unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn empty_label_file_is_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("l.txt");
        write(&p, b"");
        assert!(matches!(load_labels(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn bad_label_line_reports_position() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("l.txt");
        write(&p, b"2\nx\n");
        match load_labels(&p) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "line 2"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn label_space_from_contiguous_ids() {
        let space = build_label_space(&[0, 0, 1, 2]).unwrap();
        assert_eq!(space.known_classes(), &[0, 1, 2]);
        assert_eq!(space.unknown_id(), 3);
    }

    #[test]
    fn label_space_needs_two_classes() {
        assert!(matches!(build_label_space(&[5, 5]), Err(Error::Validation(_))));
    }

    #[test]
    fn label_space_from_sparse_ids() {
        let space = build_label_space(&[3, 1, 1, 3, 7]).unwrap();
        assert_eq!(space.known_classes(), &[1, 3, 7]);
        assert_eq!(space.unknown_id(), 8);
    }

    #[test]
    fn unknown_ground_truth_ids_unify() {
        let space = build_label_space(&[0, 1, 2]).unwrap();
        assert_eq!(space.unify_target_labels(&[0, 17, 2, -4]), vec![0, 3, 2, 3]);
    }

    #[test]
    fn source_dataset_rejects_foreign_label() {
        let space = build_label_space(&[0, 1]).unwrap();
        let f = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(SourceDataset::new(f, vec![0, 9], &space).is_err());
    }

    #[test]
    fn target_dataset_requires_unified_ids() {
        let space = build_label_space(&[0, 1]).unwrap();
        let f = FeatureMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(TargetDataset::new(f.clone(), Some(vec![9]), &space).is_err());
        assert!(TargetDataset::new(f, Some(vec![space.unknown_id()]), &space).is_ok());
    }
}
