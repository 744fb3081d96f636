//! JSON file formats and atomic output.
//!
//! Matrices: `{"dim": n, "re": [[...]], "im": [[...]]}`, row-major, with `im`
//! optional. Algebras: one of
//!
//! ```text
//! {"kind": "generators", "dim": n, "generators": [matrix, ...]}
//! {"kind": "tensor_factor", "d1": 2, "d2": 3, "which": "second"}
//! {"kind": "diagonal", "dim": n}
//! {"kind": "full", "dim": n}
//! ```
//!
//! `tensor_factor` with `which = "second"` is 1 ⊗ M_{d2}; `"first"` is M_{d1} ⊗ 1.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::Subalgebra;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{from_parts, ComplexMatrix, Subsystem};
use crate::states::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let m = from_parts(&self.re, self.im.as_deref())?;
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    Generators { dim: usize, generators: Vec<MatrixJson> },
    TensorFactor { d1: usize, d2: usize, which: Which },
    Diagonal { dim: usize },
    Full { dim: usize },
}

impl AlgebraSpec {
    pub fn dim(&self) -> usize {
        match self {
            AlgebraSpec::Generators { dim, .. } | AlgebraSpec::Diagonal { dim } | AlgebraSpec::Full { dim } => *dim,
            AlgebraSpec::TensorFactor { d1, d2, .. } => d1 * d2,
        }
    }

    pub fn build(&self) -> Result<Subalgebra> {
        if self.dim() == 0 {
            return Err(Error::Parse("algebra dimension must be at least 1".into()));
        }
        match self {
            AlgebraSpec::Generators { dim, generators } => {
                let mats = generators.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
                Subalgebra::close_generators(*dim, &mats)
            }
            AlgebraSpec::TensorFactor { d1, d2, which } => {
                let factor = match which {
                    Which::First => Subsystem::First,
                    Which::Second => Subsystem::Second,
                };
                Ok(Subalgebra::tensor_factor(*d1, *d2, factor))
            }
            AlgebraSpec::Diagonal { dim } => Ok(Subalgebra::diagonal(*dim)),
            AlgebraSpec::Full { dim } => Ok(Subalgebra::full(*dim)),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    parse::<MatrixJson>(text, "matrix")?.to_matrix()
}

pub fn parse_algebra(text: &str) -> Result<Subalgebra> {
    parse::<AlgebraSpec>(text, "algebra")?.build()
}

pub fn parse_tolerances(text: &str) -> Result<Tolerances> {
    parse(text, "tolerance overrides")
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix(&read(path)?)
}

pub fn read_density(path: &Path, tol: &Tolerances) -> Result<DensityMatrix> {
    DensityMatrix::new(read_matrix(path)?, tol)
}

pub fn read_algebra(path: &Path) -> Result<Subalgebra> {
    parse_algebra(&read(path)?)
}

pub fn read_algebra_spec(path: &Path) -> Result<AlgebraSpec> {
    parse(&read(path)?, "algebra")
}

pub fn read_tolerances(path: &Path) -> Result<Tolerances> {
    parse_tolerances(&read(path)?)
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
