//! Columnar predictor storage, the response vector, and the correlation scan.

use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SVM1_MAGIC: [u8; 4] = *b"SVM1";

/// Below this many columns the scan stays on the calling thread.
const PAR_SCAN_MIN: usize = 2048;

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn mean_and_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = compensated_sum(col.iter().copied()) / n;
    let first = col[0];
    if col.iter().all(|&v| v == first) {
        return (first, 0.0);
    }
    let ss = compensated_sum(col.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, (ss / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Svm1,
}

/// Dense `n x p` predictor matrix, stored column-major with cached moments.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
    col_mean: Vec<f64>,
    col_std: Vec<f64>,
    names: Option<Vec<String>>,
}

impl DataMatrix {
    /// Builds a matrix from column-major data of length `n * p`.
    pub fn from_column_major(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Format(format!("need at least 3 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::Format("need at least one column".into()));
        }
        if data.len() != n * p {
            return Err(Error::Format(format!(
                "payload has {} values, expected n*p = {}",
                data.len(),
                n * p
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { row: pos % n, col: pos / n });
        }
        let (col_mean, col_std): (Vec<f64>, Vec<f64>) = data
            .par_chunks(n)
            .map(mean_and_std)
            .collect::<Vec<_>>()
            .into_iter()
            .unzip();
        Ok(Self { n, p, data, col_mean, col_std, names: None })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::Format(format!(
                "column {j} has {} values, expected {n}",
                columns[j].len()
            )));
        }
        Self::from_column_major(n, p, columns.concat())
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::Format(format!(
                "{} column names for {} columns",
                names.len(),
                self.p
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn col_mean(&self) -> &[f64] {
        &self.col_mean
    }

    pub fn col_std(&self) -> &[f64] {
        &self.col_std
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.col_std[j] == 0.0
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.as_ref()?.iter().position(|c| c == name)
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    pub fn check_index(&self, j: usize) -> Result<()> {
        if j < self.p {
            Ok(())
        } else {
            Err(Error::Index { index: j, p: self.p })
        }
    }

    /// Removes column `j`, returning the remaining matrix and the removed values.
    pub fn take_column(&self, j: usize) -> Result<(DataMatrix, Vec<f64>)> {
        self.check_index(j)?;
        if self.p < 2 {
            return Err(Error::Format("no predictor columns left after removing the response".into()));
        }
        let taken = self.column(j).to_vec();
        let mut data = Vec::with_capacity(self.n * (self.p - 1));
        data.extend_from_slice(&self.data[..j * self.n]);
        data.extend_from_slice(&self.data[(j + 1) * self.n..]);
        let mut col_mean = self.col_mean.clone();
        let mut col_std = self.col_std.clone();
        col_mean.remove(j);
        col_std.remove(j);
        let names = self.names.as_ref().map(|names| {
            let mut names = names.clone();
            names.remove(j);
            names
        });
        let rest = DataMatrix { n: self.n, p: self.p - 1, data, col_mean, col_std, names };
        Ok((rest, taken))
    }

    pub fn load<R: Read>(source: R, format: MatrixFormat) -> Result<Self> {
        match format {
            MatrixFormat::Csv => read_csv(source),
            MatrixFormat::Svm1 => read_svm1(source),
        }
    }

    pub fn load_path(path: &std::path::Path, format: MatrixFormat) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(BufReader::new(file), format)
    }

    /// Writes the `SVM1` binary layout: magic, `u64` n, `u64` p, column-major `f64` payload.
    pub fn write_svm1<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(&SVM1_MAGIC)?;
        sink.write_all(&(self.n as u64).to_le_bytes())?;
        sink.write_all(&(self.p as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.n);
        for col in self.data.chunks(self.n) {
            buf.clear();
            for v in col {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            sink.write_all(&buf)?;
        }
        sink.flush()?;
        Ok(())
    }
}

fn read_csv<R: Read>(source: R) -> Result<DataMatrix> {
    let reader = BufReader::new(source);
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if line_no == 0 && header.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            width = Some(fields.len());
            continue;
        }
        let row = rows.len();
        match width {
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {w} fields, found {}", fields.len()),
                })
            }
            None => width = Some(fields.len()),
            _ => {}
        }
        let mut values = Vec::with_capacity(fields.len());
        for (col, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                message: format!("column {col}: cannot parse {f:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Data { row, col });
            }
            values.push(v);
        }
        rows.push(values);
    }

    let n = rows.len();
    let p = width.unwrap_or(0);
    let mut data = vec![0.0; n * p];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            data[j * n + i] = v;
        }
    }
    let m = DataMatrix::from_column_major(n, p, data)?;
    match header {
        Some(names) => m.with_names(names),
        None => Ok(m),
    }
}

fn read_svm1<R: Read>(mut source: R) -> Result<DataMatrix> {
    let mut head = [0u8; 20];
    source
        .read_exact(&mut head)
        .map_err(|_| Error::Format("truncated SVM1 header".into()))?;
    if head[..4] != SVM1_MAGIC {
        return Err(Error::Format("bad magic, expected SVM1".into()));
    }
    let n = u64::from_le_bytes(head[4..12].try_into().unwrap()) as usize;
    let p = u64::from_le_bytes(head[12..20].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(p)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Format(format!("header dimensions n={n}, p={p} overflow")))?;
    let mut payload = Vec::with_capacity(expected);
    source.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "header says n={n}, p={p} ({expected} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    DataMatrix::from_column_major(n, p, data)
}

/// Response vector with its centered copy cached for the scan.
#[derive(Debug, Clone)]
pub struct ResponseVector {
    values: Vec<f64>,
    mean: f64,
    centered: Vec<f64>,
    centered_norm: f64,
}

impl ResponseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Format("empty response".into()));
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { row, col: 0 });
        }
        let (mean, _) = mean_and_std(&values);
        let first = values[0];
        let constant = values.iter().all(|&v| v == first);
        let centered: Vec<f64> = if constant {
            vec![0.0; values.len()]
        } else {
            values.iter().map(|&v| v - mean).collect()
        };
        let centered_norm = if constant {
            0.0
        } else {
            compensated_sum(centered.iter().map(|v| v * v)).sqrt()
        };
        Ok(Self { values, mean, centered, centered_norm })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn centered(&self) -> &[f64] {
        &self.centered
    }

    pub fn centered_norm(&self) -> f64 {
        self.centered_norm
    }

    pub fn is_degenerate(&self) -> bool {
        self.centered_norm == 0.0
    }

    pub(crate) fn require_pairable(&self, x: &DataMatrix) -> Result<()> {
        if self.len() != x.n() {
            return Err(Error::Format(format!(
                "response has {} values but matrix has {} rows",
                self.len(),
                x.n()
            )));
        }
        if self.is_degenerate() {
            return Err(Error::DegenerateResponse);
        }
        Ok(())
    }
}

/// Sorted, duplicate-free set of column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictorSet(Vec<usize>);

impl PredictorSet {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn all(p: usize) -> Self {
        Self((0..p).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn union(&self, other: &PredictorSet) -> PredictorSet {
        PredictorSet::new(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &PredictorSet) -> PredictorSet {
        PredictorSet(self.iter().filter(|&j| !other.contains(j)).collect())
    }

    pub fn intersection_len(&self, other: &PredictorSet) -> usize {
        self.iter().filter(|&j| other.contains(j)).count()
    }

    pub fn extend(&mut self, other: &PredictorSet) {
        *self = self.union(other);
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&j) if j >= p => Err(Error::Index { index: j, p }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for PredictorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PredictorSet::new(iter)
    }
}

#[inline]
fn column_correlation(col: &[f64], mean: f64, std: f64, yc: &[f64], y_norm: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let cross: f64 = col.iter().zip(yc).map(|(&x, &y)| (x - mean) * y).sum();
    let scale = std * (col.len() as f64).sqrt() * y_norm;
    (cross / scale).clamp(-1.0, 1.0)
}

/// Pearson correlation of `y` with every column in `subset`, in subset order.
///
/// Constant columns report 0. Each index is computed independently, so the
/// parallel and sequential paths produce identical values.
pub fn correlation_scan(x: &DataMatrix, y: &ResponseVector, subset: &PredictorSet) -> Result<Vec<f64>> {
    y.require_pairable(x)?;
    subset.validate(x.p())?;
    let yc = y.centered();
    let y_norm = y.centered_norm();
    let corr = |j: usize| column_correlation(x.column(j), x.col_mean[j], x.col_std[j], yc, y_norm);
    Ok(if subset.len() >= PAR_SCAN_MIN {
        subset.as_slice().par_iter().map(|&j| corr(j)).collect()
    } else {
        subset.iter().map(corr).collect()
    })
}

/// Draws `n` values uniformly with replacement from column `j`.
pub fn resample_column<R: Rng + ?Sized>(x: &DataMatrix, j: usize, rng: &mut R) -> Result<Vec<f64>> {
    x.check_index(j)?;
    let col = x.column(j);
    let n = col.len();
    Ok((0..n).map(|_| col[rng.random_range(0..n)]).collect())
}

/// |corr(y, x*)| for one resample of `col`, reusing `buf` as scratch.
pub(crate) fn resampled_abs_correlation<R: Rng + ?Sized>(
    col: &[f64],
    yc: &[f64],
    y_norm: f64,
    buf: &mut Vec<f64>,
    rng: &mut R,
) -> f64 {
    let n = col.len();
    buf.clear();
    buf.extend((0..n).map(|_| col[rng.random_range(0..n)]));
    let mean = buf.iter().sum::<f64>() / n as f64;
    let first = buf[0];
    if buf.iter().all(|&v| v == first) {
        return 0.0;
    }
    let (mut ss, mut cross) = (0.0, 0.0);
    for (&v, &y) in buf.iter().zip(yc) {
        let d = v - mean;
        ss += d * d;
        cross += d * y;
    }
    if ss == 0.0 {
        return 0.0;
    }
    (cross / (ss.sqrt() * y_norm)).abs().min(1.0)
}
