//! Column-named sample tables and their CSV form.

use std::collections::HashSet;
use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    /// Values in {0, 1}.
    Binary,
    /// Continuous values in [0, 1].
    Unit,
}

impl ValueKind {
    fn admits(self, v: f64) -> bool {
        match self {
            ValueKind::Binary => v == 0.0 || v == 1.0,
            ValueKind::Unit => (0.0..=1.0).contains(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// An `n × p` table of samples. Rows are observations, columns are
/// named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    values: Array2<f64>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, values: Array2<f64>) -> Result<Self> {
        if columns.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: values.ncols(),
            });
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column name `{}`",
                    c.name
                )));
            }
        }
        for (j, c) in columns.iter().enumerate() {
            if let Some(bad) = values.column(j).iter().find(|v| !c.kind.admits(**v)) {
                return Err(Error::InvalidArgument(format!(
                    "column `{}` holds {bad}, not a valid {:?} value",
                    c.name, c.kind
                )));
            }
        }
        Ok(Self { columns, values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<ArrayView1<'_, f64>> {
        Ok(self.values.column(self.column_index(name)?))
    }

    /// Copies the named columns, in the given order, into a new matrix.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Array2<f64>> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select(Axis(1), &idx))
    }

    /// Reorders rows so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_rows() {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        Ok(Self {
            columns: self.columns.clone(),
            values: self.values.select(Axis(0), perm),
        })
    }

    /// FNV-1a over names and value bits; equal datasets hash equal.
    pub fn checksum(&self) -> u64 {
        const PRIME: u64 = 0x100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        for c in &self.columns {
            eat(c.name.as_bytes());
        }
        for v in self.values.iter() {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }

    /// Writes a header row then one line per sample. Binary columns are
    /// written as `0`/`1`, continuous ones with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut buf = Vec::with_capacity(self.n_cols());
        for row in self.values.rows() {
            buf.clear();
            for (v, c) in row.iter().zip(&self.columns) {
                buf.push(match c.kind {
                    ValueKind::Binary => {
                        if *v == 1.0 {
                            "1".to_string()
                        } else {
                            "0".to_string()
                        }
                    }
                    ValueKind::Unit => format_sig17(*v),
                });
            }
            w.write_record(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a dataset. Column kinds are inferred: a column whose values
    /// are all 0 or 1 is binary, otherwise it must lie in [0, 1].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if names.iter().any(|n| n.is_empty()) {
            return Err(Error::MalformedCsv {
                line: 1,
                detail: "empty column name".into(),
            });
        }
        let p = names.len();
        let mut data = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            for field in rec.iter() {
                let v: f64 = field.trim().parse().map_err(|_| Error::MalformedCsv {
                    line,
                    detail: format!("cannot parse `{field}` as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::MalformedCsv {
                        line,
                        detail: format!("non-finite value `{field}`"),
                    });
                }
                data.push(v);
            }
            lines.push(line);
        }
        if lines.is_empty() {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        }
        let values = Array2::from_shape_vec((lines.len(), p), data)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut columns = Vec::with_capacity(p);
        for (j, name) in names.into_iter().enumerate() {
            let col = values.column(j);
            let kind = if col.iter().all(|&v| ValueKind::Binary.admits(v)) {
                ValueKind::Binary
            } else if let Some(i) = col.iter().position(|&v| !ValueKind::Unit.admits(v)) {
                return Err(Error::MalformedCsv {
                    line: lines[i],
                    detail: format!("column `{name}` value {} outside [0, 1]", col[i]),
                });
            } else {
                ValueKind::Unit
            };
            columns.push(Column::new(name, kind));
        }
        Self::new(columns, values)
    }
}

/// Plain decimal rendering with 17 significant digits, enough to
/// round-trip any `f64`.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
