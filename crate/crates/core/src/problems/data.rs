//! Binary classification datasets: LIBSVM reader, synthetic margin data, RBF features.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Environment variable naming the dataset cache directory.
pub const DATA_DIR_ENV: &str = "MIRROROPT_DATA_DIR";

#[derive(Clone, Debug)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
    pub name: String,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if features.iter().chain(labels.iter()).any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("dataset contains NaN".into()));
        }
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Resolves a relative dataset path against `$MIRROROPT_DATA_DIR` when it
/// does not exist as given.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

/// Reads a sparse LIBSVM file (`label idx:val …`, 1-based indices).
pub fn read_libsvm(path: &Path) -> Result<Dataset> {
    let path = resolve_data_path(path);
    let file = File::open(&path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_libsvm(BufReader::new(file), &name)
}

pub fn parse_libsvm<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        let mut tokens = line.split_whitespace();
        let label: f64 = tokens
            .next()
            .unwrap()
            .parse()
            .map_err(|e| err(format!("bad label: {e}")))?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|e| err(format!("bad index {idx:?}: {e}")))?;
            if idx == 0 {
                return Err(err("indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|e| err(format!("bad value {val:?}: {e}")))?;
            dim = dim.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
        rows.push(row);
    }
    let mut features = DMatrix::zeros(rows.len(), dim);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(i, j)] = v;
        }
    }
    Dataset::new(features, labels, name)
}

/// Linearly separable points on the unit sphere with y_i⟨u, x_i⟩ ≥ margin
/// for a random unit separator u. Deterministic per seed.
pub fn synth_margin_dataset(n: usize, d: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || d < 1 {
        return Err(Error::InvalidArgument("need n >= 2 and d >= 1".into()));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "margin must lie in (0, 1), got {margin}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    };
    let u = unit(&mut rng);
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let x = unit(&mut rng);
        let s = dot(&u, &x);
        if s.abs() < margin {
            continue;
        }
        for (j, v) in x.iter().enumerate() {
            features[(i, j)] = *v;
        }
        labels.push(s.signum());
        i += 1;
    }
    Dataset::new(features, labels, format!("synth-margin-{margin}"))
}

/// Replaces features by the kernel matrix K_ij = exp(−γ‖x_i − x_j‖²), γ = bandwidth.
pub fn rbf_features(data: &Dataset, bandwidth: f64) -> Result<Dataset> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    let n = data.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| data.features.row(i).iter().copied().collect())
        .collect();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let d2: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-bandwidth * d2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Dataset::new(k, data.labels.clone(), format!("{}-rbf", data.name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Cursor;

    #[test]
    fn libsvm_lines() {
        let d = parse_libsvm(Cursor::new("1 1:0.5 3:2\n0 2:1\n"), "t").unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.dim(), 3);
        assert_eq!(d.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, 2.0]);
        assert_eq!(d.features.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert_eq!(d.labels, vec![1.0, -1.0]);
    }

    #[test]
    fn libsvm_empty_and_errors() {
        let d = parse_libsvm(Cursor::new(""), "empty").unwrap();
        assert_eq!(d.n(), 0);
        match parse_libsvm(Cursor::new("1 1:0.5\n1 2-3\n"), "bad") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_libsvm(Cursor::new("+1 0:1\n"), "zero"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm(Cursor::new("x 1:1\n"), "label"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn libsvm_io_error() {
        assert!(matches!(
            read_libsvm(Path::new("/definitely/not/here.svm")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn synthetic_margin_and_determinism() {
        let a = synth_margin_dataset(1000, 20, 0.05, 7).unwrap();
        let b = synth_margin_dataset(1000, 20, 0.05, 7).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        for i in 0..a.n() {
            let row: Vec<f64> = a.features.row(i).iter().copied().collect();
            assert_relative_eq!(dot(&row, &row), 1.0, epsilon = 1e-12);
        }
        let c = synth_margin_dataset(100, 5, 0.01, 7).unwrap();
        assert_eq!(c.n(), 100);
        assert!(synth_margin_dataset(1, 5, 0.1, 0).is_err());
        assert!(synth_margin_dataset(10, 5, 1.5, 0).is_err());
    }

    #[test]
    fn rbf_kernel() {
        let f = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let d = Dataset::new(f, vec![1.0, -1.0, 1.0], "k").unwrap();
        let k = rbf_features(&d, 1.0).unwrap();
        for i in 0..3 {
            assert_eq!(k.features[(i, i)], 1.0);
        }
        assert_eq!(k.features.row(0), k.features.row(1));
        assert_relative_eq!(k.features[(0, 2)], (-1.0f64).exp());
        assert!(rbf_features(&d, 0.0).is_err());
    }
}
