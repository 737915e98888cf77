use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense `N x d` embedding table, row `i` belongs to entity `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> EmbeddingSet<T> {
    /// Rejects non-finite values.
    pub fn new(matrix: Array2<T>) -> Result<Self> {
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let d = matrix.ncols().max(1);
            return Err(Error::invalid(format!(
                "non-finite embedding value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            matrix: Array2::zeros((n, dim)),
        }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.matrix.row(i)
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<T> {
        self.matrix
    }

    /// Rows `ids` in the given order.
    pub fn select(&self, ids: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select(Axis(0), ids),
        }
    }

    /// Stack `self` on top of `other`.
    pub fn concat_rows(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let m = ndarray::concatenate(Axis(0), &[self.matrix.view(), other.matrix.view()]).expect("same width");
        Ok(Self { matrix: m })
    }

    /// Split at row `n` into `(rows ..n, rows n..)`.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let (a, b) = self.matrix.view().split_at(Axis(0), n);
        (Self { matrix: a.to_owned() }, Self { matrix: b.to_owned() })
    }

    /// Text format: header `N d`, then one `name v1 ... vd` line per row.
    pub fn write_text<W: Write, S: AsRef<str>>(&self, mut out: W, names: &[S]) -> Result<()> {
        if names.len() != self.len() {
            return Err(Error::DimMismatch {
                expected: self.len(),
                actual: names.len(),
            });
        }
        let io = |e| Error::io("<embedding output>", e);
        writeln!(out, "{} {}", self.len(), self.dim()).map_err(io)?;
        for (name, row) in names.iter().zip(self.matrix.rows()) {
            let name = name.as_ref();
            if name.is_empty() || name.trim() != name || name.contains(['\t', '\n', '\r']) || name.contains("  ") {
                return Err(Error::invalid(format!(
                    "embedding row name {name:?} is empty, padded, or has tabs, newlines or repeated spaces"
                )));
            }
            write!(out, "{name}").map_err(io)?;
            for v in row {
                write!(out, " {v}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        Ok(())
    }

    pub fn save_text<S: AsRef<str>>(&self, path: &Path, names: &[S]) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_text(&mut w, names)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_text<R: BufRead>(reader: R, source: &Path) -> Result<(Vec<String>, Self)> {
        let mut lines = reader.lines().enumerate();
        let (n, d) = loop {
            let Some((no, line)) = lines.next() else {
                return Err(Error::EmptyInput(source.display().to_string()));
            };
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [n, d] => n.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
                _ => None,
            };
            break parsed.ok_or_else(|| Error::parse(source, no + 1, "expected header `N d`"))?;
        };
        let mut names = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * d);
        for (no, line) in lines {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            // values are the last `d` tokens; the name is everything before them
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < d + 1 {
                return Err(Error::parse(
                    source,
                    no + 1,
                    format!("expected a name and {d} values, found {} tokens", tokens.len()),
                ));
            }
            for tok in &tokens[tokens.len() - d..] {
                let v = T::parse_text(tok)
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(source, no + 1, format!("bad number {tok:?}")))?;
                data.push(v);
            }
            let name = tokens[..tokens.len() - d].join(" ");
            names.push(name.to_string());
        }
        if names.len() != n {
            return Err(Error::parse(
                source,
                1,
                format!("header announces {n} rows, found {}", names.len()),
            ));
        }
        let matrix = Array2::from_shape_vec((n, d), data).expect("shape checked");
        Ok((names, Self { matrix }))
    }

    pub fn load_text(path: &Path) -> Result<(Vec<String>, Self)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file), path)
    }

    /// Reorder named rows to follow `order`; every name in `order` must be present.
    pub fn reorder_by_names<S: AsRef<str>>(names: &[String], set: &Self, order: &[S]) -> Result<Self> {
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let ids = order
            .iter()
            .map(|n| {
                index
                    .get(n.as_ref())
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("no embedding for entity {:?}", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(set.select(&ids))
    }
}
