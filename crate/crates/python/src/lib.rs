//! Python bindings.
//!
//! Matrices are accepted as nested sequences of numbers (lists or NumPy
//! arrays, real or complex) and returned as nested lists of `complex`.
//! Algebras are given as the JSON objects understood by the CLI, either as a
//! `dict` or as JSON text. Reports come back as plain dicts.
//!
//! Invalid input raises `ValueError`; numerical failures raise `ArithmeticError`.
//! Both messages start with the error kind in brackets, e.g. `[non_faithful]`.

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;

use petzstab_core::harness::{
    run_oracle, run_ssa, run_sweep, AlgebraSource, InstanceReport, OracleConfig, Profile, RankPolicy, SsaConfig,
    SweepConfig,
};
use petzstab_core::io::{parse_tolerances, AlgebraSpec, MatrixJson};
use petzstab_core::recovery::{PairContext, RecoveryContext};
use petzstab_core::rng::CounterRng;
use petzstab_core::states::{self, DensityMatrix};
use petzstab_core::structure::build_structure;
use petzstab_core::{gns, ComplexMatrix, Error, Subalgebra, Tolerances};

fn py_err(e: Error) -> PyErr {
    let msg = format!("[{}] {e}", e.kind());
    if e.is_validation() {
        PyValueError::new_err(msg)
    } else {
        PyArithmeticError::new_err(msg)
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for petzstab_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("[dimension_mismatch] matrix must be square and nonempty"));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn extract_rows(obj: &Bound<'_, PyAny>) -> PyResult<Vec<Vec<Complex64>>> {
    if obj.hasattr("tolist")? {
        obj.call_method0("tolist")?.extract()
    } else {
        obj.extract()
    }
}

fn density(obj: &Bound<'_, PyAny>, tol: &Tolerances) -> PyResult<DensityMatrix> {
    DensityMatrix::new(to_matrix(extract_rows(obj)?)?, tol).py()
}

fn json_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(s.to_string());
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn algebra_spec(obj: &Bound<'_, PyAny>) -> PyResult<AlgebraSpec> {
    serde_json::from_str(&json_text(obj)?).map_err(|e| py_err(Error::Parse(format!("algebra: {e}"))))
}

fn algebra(obj: &Bound<'_, PyAny>) -> PyResult<Subalgebra> {
    algebra_spec(obj)?.build().py()
}

fn tolerances(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Tolerances> {
    match obj {
        None => Ok(Tolerances::DEFAULT),
        Some(o) => parse_tolerances(&json_text(o)?).py(),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| py_err(Error::Parse(e.to_string())))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// S(ρ‖σ) in nats; `inf` when the support condition fails.
#[pyfunction]
#[pyo3(signature = (rho, sigma, tolerances=None))]
fn relative_entropy(
    rho: &Bound<'_, PyAny>,
    sigma: &Bound<'_, PyAny>,
    tolerances: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let tol = self::tolerances(tolerances)?;
    let e = states::relative_entropy(&density(rho, &tol)?, &density(sigma, &tol)?, &tol).py()?;
    Ok(e.finite().unwrap_or(f64::INFINITY))
}

/// S(ρ‖σ) − S(ρ_𝒩‖σ_𝒩) for the trace-preserving conditional expectation onto the algebra.
#[pyfunction]
#[pyo3(signature = (rho, sigma, algebra, tolerances=None))]
fn dpi_gap(
    rho: &Bound<'_, PyAny>,
    sigma: &Bound<'_, PyAny>,
    algebra: &Bound<'_, PyAny>,
    tolerances: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let tol = self::tolerances(tolerances)?;
    let alg = self::algebra(algebra)?;
    petzstab_core::stability::dpi_gap(&density(rho, &tol)?, &density(sigma, &tol)?, &alg, &tol).py()
}

/// Full instance report: gap, every lower bound with its slack, and equality diagnostics.
#[pyfunction]
#[pyo3(signature = (rho, sigma, algebra, identities=false, seed=0, tolerances=None))]
fn check<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    sigma: &Bound<'py, PyAny>,
    algebra: &Bound<'py, PyAny>,
    identities: bool,
    seed: u64,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let tol = self::tolerances(tolerances)?;
    let alg = self::algebra(algebra)?;
    let report = InstanceReport::evaluate(0, seed, density(rho, &tol)?, density(sigma, &tol)?, &alg, identities, &tol)
        .py()?;
    let out = to_py(py, &report)?;
    out.set_item("violation", report.is_violation(&tol))?;
    Ok(out)
}

/// Fixed-point algebra of ρ and 𝒩, its block profile, and a sampled equality state.
#[pyfunction]
#[pyo3(signature = (rho, algebra, seed=0, tolerances=None))]
fn structure<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    algebra: &Bound<'py, PyAny>,
    seed: u64,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let tol = self::tolerances(tolerances)?;
    let alg = self::algebra(algebra)?;
    let ctx = RecoveryContext::new(density(rho, &tol)?, &alg, &tol).py()?;
    let mut rng = CounterRng::new(seed);
    let s = build_structure(&ctx, &mut rng).py()?;
    let sigma = s.sample_equality_state(&mut rng, &tol).py()?;
    let pair = PairContext::from_context(ctx, sigma.clone()).py()?;
    let blocks: Vec<serde_json::Value> = s
        .profile()
        .iter()
        .zip(&s.gammas)
        .map(|(b, g)| {
            serde_json::json!({
                "d_left": b.d_left,
                "d_right": b.d_right,
                "weight": b.weight,
                "gamma": MatrixJson::from_matrix(g.matrix()),
            })
        })
        .collect();
    let value = serde_json::json!({
        "n": s.dim(),
        "algebra_dim": alg.dim(),
        "fixed_point_dim": s.algebra.dim(),
        "blocks": blocks,
        "diagnostics": s.diagnostics,
        "equality_sample": {
            "gap": pair.gap().py()?,
            "residuals": pair.petz_residuals().py()?,
        },
    });
    let out = to_py(py, &value)?;
    out.get_item("equality_sample")?.set_item("sigma", from_matrix(sigma.matrix()))?;
    Ok(out)
}

/// Realness, Δ_ρ-invariance and conditional-expectation flags for the GNS projection onto 𝒩.
#[pyfunction]
#[pyo3(signature = (rho, algebra, seed=0, tolerances=None))]
fn takesaki<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    algebra: &Bound<'py, PyAny>,
    seed: u64,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let tol = self::tolerances(tolerances)?;
    let alg = self::algebra(algebra)?;
    let mut rng = CounterRng::new(seed);
    let report = gns::takesaki_check(&density(rho, &tol)?, &alg, &mut rng, &tol).py()?;
    let out = to_py(py, &report)?;
    out.set_item("flags_agree", report.flags_agree())?;
    Ok(out)
}

/// Seeded sweep; returns `(csv_text, summary)`. `algebra` is a profile name or an algebra
/// object; `rank` is `None`, `"full"` or an integer.
#[pyfunction]
#[pyo3(signature = (dim, algebra, samples, seed=0, rank=None, identities=false, threads=0, tolerances=None))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    dim: usize,
    algebra: &Bound<'py, PyAny>,
    samples: usize,
    seed: u64,
    rank: Option<&Bound<'py, PyAny>>,
    identities: bool,
    threads: usize,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let source = match algebra.cast::<PyString>().ok().map(|s| s.to_string()) {
        Some(name) if name.parse::<Profile>().is_ok() => AlgebraSource::Profile(name.parse().py()?),
        _ => AlgebraSource::Spec(algebra_spec(algebra)?),
    };
    let mut config = SweepConfig::new(dim, source, samples, seed);
    config.rank = match rank {
        None => RankPolicy::Full,
        Some(r) => match r.extract::<usize>() {
            Ok(k) => RankPolicy::Fixed(k),
            Err(_) => r.extract::<String>()?.parse::<RankPolicy>().py()?,
        },
    };
    config.identities = identities;
    config.tolerances = self::tolerances(tolerances)?;
    let outcome = py.detach(|| run_sweep(&config, threads)).py()?;
    Ok((outcome.to_csv(), to_py(py, &outcome.summary)?))
}

/// Strong subadditivity suite; returns `(csv_text, summary)`.
#[pyfunction]
#[pyo3(signature = (dims, samples, seed=0, threads=0, tolerances=None))]
fn ssa<'py>(
    py: Python<'py>,
    dims: [usize; 3],
    samples: usize,
    seed: u64,
    threads: usize,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let config = SsaConfig {
        dims,
        samples,
        seed,
        tolerances: self::tolerances(tolerances)?,
    };
    let outcome = py.detach(|| run_ssa(&config, threads)).py()?;
    Ok((outcome.to_csv(), to_py(py, &outcome.summary)?))
}

/// Diagonal-embedding oracle against the classical formulas; returns `(csv_text, summary)`.
#[pyfunction]
#[pyo3(signature = (omega_size, samples, seed=0, cells=None, threads=0, tolerances=None))]
fn oracle<'py>(
    py: Python<'py>,
    omega_size: usize,
    samples: usize,
    seed: u64,
    cells: Option<usize>,
    threads: usize,
    tolerances: Option<&Bound<'py, PyAny>>,
) -> PyResult<(String, Bound<'py, PyAny>)> {
    let config = OracleConfig {
        omega_size,
        cells,
        samples,
        seed,
        tolerances: self::tolerances(tolerances)?,
    };
    let outcome = py.detach(|| run_oracle(&config, threads)).py()?;
    Ok((outcome.to_csv(), to_py(py, &outcome.summary)?))
}

/// Wishart density matrix G G*/Tr[G G*] with an n × rank complex Ginibre G.
#[pyfunction]
#[pyo3(signature = (n, rank=None, seed=0))]
fn random_density(n: usize, rank: Option<usize>, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let mut rng = CounterRng::new(seed);
    let rho = states::random_density(n, rank.unwrap_or(n), &mut rng).py()?;
    Ok(from_matrix(rho.matrix()))
}

#[pymodule]
fn petzstab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(dpi_gap, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(structure, m)?)?;
    m.add_function(wrap_pyfunction!(takesaki, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(ssa, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(random_density, m)?)?;
    Ok(())
}
