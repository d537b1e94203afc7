use crate::error::{Error, Result};

/// An N×D matrix of feature activations, one row per sample.
///
/// Values are held as `f64` in row-major order. Every entry is finite and
/// both dimensions are at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    data: Vec<f64>,
    n_samples: usize,
    dim: usize,
    layer_tag: String,
    source_tag: String,
}

impl ActivationSet {
    pub fn new(
        data: Vec<f64>,
        n_samples: usize,
        dim: usize,
        layer_tag: impl Into<String>,
        source_tag: impl Into<String>,
    ) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Validation("activation set needs at least one sample".into()));
        }
        if dim == 0 {
            return Err(Error::Validation("activation set needs at least one dimension".into()));
        }
        if data.len() != n_samples * dim {
            return Err(Error::Validation(format!(
                "data length {} does not match {n_samples}x{dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            data,
            n_samples,
            dim,
            layer_tag: layer_tag.into(),
            source_tag: source_tag.into(),
        })
    }

    /// Builds a set from equal-length rows, tagged `unknown`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), dim, "unknown", "unknown")
    }

    pub fn with_tags(mut self, layer_tag: impl Into<String>, source_tag: impl Into<String>) -> Self {
        self.layer_tag = layer_tag.into();
        self.source_tag = source_tag.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer_tag(&self) -> &str {
        &self.layer_tag
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    /// Row-major view of all values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[col])
    }

    /// New set holding the given columns in the given order. Tags are kept.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.dim) {
            return Err(Error::Dim(bad, self.dim));
        }
        let mut data = Vec::with_capacity(self.n_samples * cols.len());
        for row in self.rows() {
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(
            data,
            self.n_samples,
            cols.len(),
            self.layer_tag.clone(),
            self.source_tag.clone(),
        )
    }
}
