//! Regression data: CSV ingestion, preprocessing and a synthetic stand-in.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

/// Targets and features, one row per round.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMatrix {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl DatasetMatrix {
    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn dimension(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Every feature in `[0, 1]` and every nonzero row of unit norm.
    pub fn check_preprocessed(&self) -> std::result::Result<(), String> {
        for (i, row) in self.features.iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(format!("row {i}: feature {v} outside [0, 1]"));
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm != 0.0 && (norm - 1.0).abs() > 1e-9 {
                return Err(format!("row {i}: norm {norm}"));
            }
        }
        Ok(())
    }
}

/// Column-wise min-max scaling to `[0, 1]` followed by row-wise L2
/// normalization. Constant columns become 0; zero rows stay zero.
pub fn preprocess(features: &mut [Vec<f64>]) {
    let Some(d) = features.first().map(Vec::len) else {
        return;
    };
    for j in 0..d {
        let (lo, hi) = features
            .iter()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        for row in features.iter_mut() {
            row[j] = if span > 0.0 { ((row[j] - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    for row in features.iter_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Reads a headerless numeric CSV whose first column is the target, keeping
/// at most `limit` rows, and preprocesses the features.
pub fn load_dataset_rows(path: &Path, limit: Option<usize>) -> Result<DatasetMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::io(path, io),
            other => HarnessError::Config(format!("{}: {other:?}", path.display())),
        })?;
    let parse_err = |row: usize, column: usize, message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        if limit.is_some_and(|n| i >= n) {
            break;
        }
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if record.len() < 2 {
            return Err(parse_err(row, record.len() + 1, "expected a target and at least one feature".into()));
        }
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(parse_err(
                row,
                record.len().min(width.unwrap()) + 1,
                format!("expected {} columns, found {}", width.unwrap(), record.len()),
            ));
        }
        let mut values = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, j + 1, format!("not a number: '{cell}'")))?;
            if !v.is_finite() {
                return Err(parse_err(row, j + 1, format!("not finite: '{cell}'")));
            }
            values.push(v);
        }
        targets.push(values[0]);
        values.remove(0);
        features.push(values);
    }
    if targets.is_empty() {
        return Err(HarnessError::Empty(path.to_path_buf()));
    }
    preprocess(&mut features);
    Ok(DatasetMatrix { features, targets })
}

pub fn load_dataset(path: &Path) -> Result<DatasetMatrix> {
    load_dataset_rows(path, None)
}

/// Uniform raw features in `[0,1]^d`, preprocessed, with targets
/// `⟨w, z_t⟩ + ξ_t` for a hidden positive `w` and `|ξ_t| ≤ 0.05`.
///
/// Targets are drawn after preprocessing so the hidden model is exactly
/// linear in the features the learners see.
pub fn synthetic_regression(seed: u64, rows: usize, dimension: usize) -> Result<DatasetMatrix> {
    if rows == 0 || dimension == 0 {
        return Err(HarnessError::Config("synthetic data needs T, d ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden: Vec<f64> = (0..dimension).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut features: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..dimension).map(|_| rng.gen::<f64>()).collect())
        .collect();
    preprocess(&mut features);
    let targets = features
        .iter()
        .map(|z| {
            let clean: f64 = z.iter().zip(&hidden).map(|(a, b)| a * b).sum();
            clean + rng.gen_range(-0.05..0.05)
        })
        .collect();
    Ok(DatasetMatrix { features, targets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_row_degenerates_to_zero() {
        let f = write_tmp("2001,3.5,-1\n");
        let data = load_dataset(f.path()).unwrap();
        assert_eq!(data.features, vec![vec![0.0, 0.0]]);
        assert_eq!(data.targets, vec![2001.0]);
        data.check_preprocessed().unwrap();
    }

    #[test]
    fn min_max_then_unit_rows() {
        let f = write_tmp("1,0,5\n2,10,5\n");
        let data = load_dataset(f.path()).unwrap();
        assert_eq!(data.features, vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let f = write_tmp("1,0,0\n2,10,4\n3,5,2\n");
        let data = load_dataset(f.path()).unwrap();
        let s = 0.5f64.sqrt();
        assert!((data.features[1][0] - s).abs() < 1e-15 && (data.features[2][1] - s).abs() < 1e-15);
        data.check_preprocessed().unwrap();
    }

    #[test]
    fn errors_carry_location() {
        let f = write_tmp("1,2,3\n4,x,6\n");
        match load_dataset(f.path()).unwrap_err() {
            HarnessError::Parse { row, column, .. } => assert_eq!((row, column), (2, 2)),
            e => panic!("{e}"),
        }
        let f = write_tmp("1,2,3\n4,5\n");
        assert!(matches!(
            load_dataset(f.path()).unwrap_err(),
            HarnessError::Parse { row: 2, .. }
        ));
        let f = write_tmp("");
        assert!(matches!(load_dataset(f.path()).unwrap_err(), HarnessError::Empty(_)));
        assert!(matches!(
            load_dataset(Path::new("/nonexistent/data.csv")).unwrap_err(),
            HarnessError::Io { .. }
        ));
    }

    #[test]
    fn row_limit() {
        let f = write_tmp("1,1\n2,2\n3,3\n");
        assert_eq!(load_dataset_rows(f.path(), Some(2)).unwrap().rows(), 2);
    }

    #[test]
    fn synthetic_is_seeded_and_preprocessed() {
        let a = synthetic_regression(4, 200, 7).unwrap();
        assert_eq!(a, synthetic_regression(4, 200, 7).unwrap());
        assert_ne!(a, synthetic_regression(5, 200, 7).unwrap());
        assert_eq!((a.rows(), a.dimension()), (200, 7));
        a.check_preprocessed().unwrap();
        assert!(a.targets.iter().all(|y| *y > 0.0));
    }
}
