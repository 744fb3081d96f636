//! Seeded ensemble sweeps and report emission.
//!
//! Instance `i` of a sweep with seed `s` draws everything from the stream with
//! key `s ^ mix64(i)`, so results do not depend on evaluation order or on the
//! number of worker threads. CSV output has a versioned `#` header line, one
//! column header row, one row per instance in index order, and a final
//! `# summary {json}` line. Wall-clock timings appear only in JSON reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_two_generator, Subalgebra};
use crate::classical::{classical_chain, classical_pinsker_gap, diagonal_oracle_check, ssa_suite, ClassicalModel, TripartiteState};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::io::AlgebraSpec;
use crate::linalg::{identity, Subsystem};
use crate::recovery::PairContext;
use crate::rng::{substream_key, CounterRng};
use crate::stability::{BoundId, BoundReport, EqualityDiagnostics};
use crate::states::{random_density, DensityMatrix};

pub const SWEEP_CSV_VERSION: &str = "# petzstab-sweep v1";
pub const SSA_CSV_VERSION: &str = "# petzstab-ssa v1";
pub const ORACLE_CSV_VERSION: &str = "# petzstab-oracle v1";

/// Weight of the maximally mixed state added to reduced-rank draws.
const RANK_REGULARIZATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Diagonal,
    TensorFactor,
    RandomTwoGenerator,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Diagonal, Profile::TensorFactor, Profile::RandomTwoGenerator];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Diagonal => "diagonal",
            Profile::TensorFactor => "tensor_factor",
            Profile::RandomTwoGenerator => "random_two_generator",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown algebra profile '{s}'")))
    }
}

/// (d₁, d₂) with d₁ the smallest prime factor of n; primes give (n, 1).
pub fn tensor_factor_dims(n: usize) -> (usize, usize) {
    let p = (2..=n).find(|&p| n.is_multiple_of(p)).unwrap_or(1);
    if p == n {
        (n, 1)
    } else {
        (p, n / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraSource {
    Profile(Profile),
    Spec(AlgebraSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankPolicy {
    Full,
    /// Rank-k Wishart draw mixed with weight 1e-3 of the maximally mixed state.
    Fixed(usize),
}

impl std::str::FromStr for RankPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(RankPolicy::Full);
        }
        s.parse::<usize>()
            .map(RankPolicy::Fixed)
            .map_err(|_| Error::Parse(format!("rank policy must be 'full' or an integer, got '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dim: usize,
    pub algebra: AlgebraSource,
    pub samples: usize,
    pub seed: u64,
    pub rank: RankPolicy,
    /// Evaluate the gap identity on the t-grid for every instance.
    pub identities: bool,
    pub tolerances: Tolerances,
}

impl SweepConfig {
    pub fn new(dim: usize, algebra: AlgebraSource, samples: usize, seed: u64) -> Self {
        Self {
            dim,
            algebra,
            samples,
            seed,
            rank: RankPolicy::Full,
            identities: false,
            tolerances: Tolerances::DEFAULT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Parse("samples must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Parse("dimension must be at least 1".into()));
        }
        if let RankPolicy::Fixed(r) = self.rank {
            if r == 0 || r > self.dim {
                return Err(Error::BadRank { rank: r, dim: self.dim });
            }
        }
        if let AlgebraSource::Spec(spec) = &self.algebra {
            if spec.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: spec.dim(),
                });
            }
        }
        Ok(())
    }

    fn draw_state(&self, rng: &mut CounterRng) -> Result<DensityMatrix> {
        let n = self.dim;
        match self.rank {
            RankPolicy::Full => random_density(n, n, rng),
            RankPolicy::Fixed(r) if r == n => random_density(n, n, rng),
            RankPolicy::Fixed(r) => {
                let low = random_density(n, r, rng)?;
                let m = low.matrix().scale(1.0 - RANK_REGULARIZATION)
                    + identity(n).scale(RANK_REGULARIZATION / n as f64);
                DensityMatrix::new(m, &self.tolerances)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub id: usize,
    pub seed: u64,
    pub n: usize,
    pub algebra_dim: usize,
    pub bounds: BoundReport,
    pub equality: EqualityDiagnostics,
    /// max_t |S_t gap − ⟨w_t, (t+Δ)w_t⟩| over the t-grid, when requested.
    pub identity_residual: Option<f64>,
    pub timing_ms: f64,
}

impl InstanceReport {
    pub fn evaluate(
        id: usize,
        seed: u64,
        rho: DensityMatrix,
        sigma: DensityMatrix,
        alg: &Subalgebra,
        identities: bool,
        tol: &Tolerances,
    ) -> Result<Self> {
        let start = Instant::now();
        let n = rho.dim();
        let pair = PairContext::new(rho, sigma, alg, tol)?;
        let bounds = pair.evaluate_bounds()?;
        let equality = pair.equality_from_report(&bounds, tol.equality_gap)?;
        let identity_residual = if identities {
            let mut worst = 0.0f64;
            for t in tol.t_grid() {
                let (lhs, rhs) = pair.gap_identity(t)?;
                worst = worst.max((lhs - rhs).abs());
            }
            Some(worst)
        } else {
            None
        };
        Ok(Self {
            id,
            seed,
            n,
            algebra_dim: alg.dim(),
            bounds,
            equality,
            identity_residual,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn is_violation(&self, tol: &Tolerances) -> bool {
        self.bounds.gap < tol.dpi_floor || self.bounds.min_slack() < tol.slack_floor
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

fn sweep_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "id",
        "seed",
        "n",
        "algebra_dim",
        "gap",
        "reverse_gap",
        "delta_norm",
        "rho_inv_norm",
        "rho_n_norm",
        "sigma_n_inv_norm",
        "recovery_fidelity",
        "petz_trace_residual",
        "symm_trace_residual",
        "eqcase_hs_residual",
        "eqcase_symm_hs_residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for id in BoundId::ALL {
        cols.push(format!("{}_value", id.name()));
    }
    for id in BoundId::ALL {
        cols.push(format!("{}_slack", id.name()));
    }
    cols.extend(["min_slack", "equality_case", "identity_residual"].map(String::from));
    cols
}

fn sweep_row(r: &InstanceReport) -> String {
    let b = &r.bounds;
    let i = &b.inputs;
    let res = &i.residuals;
    let mut cells = vec![
        r.id.to_string(),
        r.seed.to_string(),
        r.n.to_string(),
        r.algebra_dim.to_string(),
        fmt_f64(b.gap),
        fmt_f64(r.equality.reverse_gap),
        fmt_f64(i.delta_norm),
        fmt_f64(i.rho_inv_norm),
        fmt_f64(i.rho_n_norm),
        fmt_f64(i.sigma_n_inv_norm),
        fmt_f64(i.recovery_fidelity),
        fmt_f64(res.petz_trace_residual),
        fmt_f64(res.symm_trace_residual),
        fmt_f64(res.eqcase_hs_residual),
        fmt_f64(res.eqcase_symm_hs_residual),
    ];
    cells.extend(BoundId::ALL.iter().map(|&id| fmt_f64(b.get(id).value)));
    cells.extend(BoundId::ALL.iter().map(|&id| fmt_f64(b.get(id).slack)));
    cells.push(fmt_f64(b.min_slack()));
    cells.push(r.equality.is_equality_case.to_string());
    cells.push(r.identity_residual.map(fmt_f64).unwrap_or_default());
    cells.join(",")
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub instances: usize,
    pub violations: usize,
    pub dpi_violations: usize,
    pub min_gap: f64,
    pub min_slack: BTreeMap<&'static str, f64>,
    pub equality_cases: usize,
    pub max_identity_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<InstanceReport>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(SWEEP_CSV_VERSION);
        out.push('\n');
        out.push_str(&sweep_columns().join(","));
        out.push('\n');
        for r in &self.reports {
            out.push_str(&sweep_row(r));
            out.push('\n');
        }
        push_summary(&mut out, &self.summary);
        out
    }
}

fn push_summary<T: Serialize>(out: &mut String, summary: &T) {
    let json = serde_json::to_string(summary).expect("summary serializes");
    writeln!(out, "# summary {json}").expect("writing to a String");
}

/// Runs `f` over `0..samples` on a pool with `threads` workers (0 = rayon default),
/// returning results in index order.
pub fn run_indexed<T, F>(samples: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
    pool.install(|| (0..samples).into_par_iter().map(f).collect())
}

pub fn run_sweep(config: &SweepConfig, threads: usize) -> Result<SweepOutcome> {
    config.validate()?;
    let tol = config.tolerances;
    let n = config.dim;
    let shared = match &config.algebra {
        AlgebraSource::Spec(spec) => Some(spec.build()?),
        AlgebraSource::Profile(Profile::Diagonal) => Some(Subalgebra::diagonal(n)),
        AlgebraSource::Profile(Profile::TensorFactor) => {
            let (d1, d2) = tensor_factor_dims(n);
            Some(Subalgebra::tensor_factor(d1, d2, Subsystem::Second))
        }
        AlgebraSource::Profile(Profile::RandomTwoGenerator) => None,
    };
    let reports = run_indexed(config.samples, threads, |i| {
        let key = substream_key(config.seed, i as u64);
        let mut rng = CounterRng::new(key);
        let alg = match &shared {
            Some(a) => a.clone(),
            None => random_two_generator(n, &mut rng)?,
        };
        let rho = config.draw_state(&mut rng)?;
        let sigma = config.draw_state(&mut rng)?;
        InstanceReport::evaluate(i, key, rho, sigma, &alg, config.identities, &tol)
    })?;

    let mut min_slack: BTreeMap<&'static str, f64> = BoundId::ALL.iter().map(|id| (id.name(), f64::INFINITY)).collect();
    for r in &reports {
        for b in &r.bounds.bounds {
            let e = min_slack.get_mut(b.id.name()).expect("all bounds listed");
            *e = e.min(b.slack);
        }
    }
    let summary = SweepSummary {
        instances: reports.len(),
        violations: reports.iter().filter(|r| r.is_violation(&tol)).count(),
        dpi_violations: reports.iter().filter(|r| r.bounds.gap < tol.dpi_floor).count(),
        min_gap: reports.iter().map(|r| r.bounds.gap).fold(f64::INFINITY, f64::min),
        min_slack,
        equality_cases: reports.iter().filter(|r| r.equality.is_equality_case).count(),
        max_identity_residual: reports
            .iter()
            .filter_map(|r| r.identity_residual)
            .reduce(f64::max),
    };
    Ok(SweepOutcome { reports, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub dims: [usize; 3],
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct SsaRow {
    pub id: usize,
    pub seed: u64,
    pub ssa_gap: f64,
    pub mono_form_gap: f64,
    pub rewrite_residual: f64,
    pub improved_rhs: f64,
    pub improved_slack: f64,
}

impl SsaRow {
    pub fn is_violation(&self) -> bool {
        self.ssa_gap < -1e-9 || self.rewrite_residual > 1e-9 || self.improved_slack < -1e-8
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SsaSummary {
    pub instances: usize,
    pub violations: usize,
    pub min_ssa_gap: f64,
    pub max_rewrite_residual: f64,
    pub min_improved_slack: f64,
}

#[derive(Debug, Clone)]
pub struct SsaOutcome {
    pub rows: Vec<SsaRow>,
    pub summary: SsaSummary,
}

impl SsaOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{SSA_CSV_VERSION}\nid,seed,ssa_gap,mono_form_gap,rewrite_residual,improved_rhs,improved_slack\n"
        );
        for r in &self.rows {
            let nums = [r.ssa_gap, r.mono_form_gap, r.rewrite_residual, r.improved_rhs, r.improved_slack].map(fmt_f64);
            writeln!(out, "{},{},{}", r.id, r.seed, nums.join(",")).expect("writing to a String");
        }
        push_summary(&mut out, &self.summary);
        out
    }
}

pub fn run_ssa(config: &SsaConfig, threads: usize) -> Result<SsaOutcome> {
    if config.samples == 0 || config.dims.contains(&0) {
        return Err(Error::Parse("samples and dimensions must be at least 1".into()));
    }
    let total: usize = config.dims.iter().product();
    let rows = run_indexed(config.samples, threads, |i| {
        let key = substream_key(config.seed, i as u64);
        let mut rng = CounterRng::new(key);
        let ts = TripartiteState::new(config.dims, random_density(total, total, &mut rng)?)?;
        let s = ssa_suite(&ts, &config.tolerances)?;
        Ok(SsaRow {
            id: i,
            seed: key,
            ssa_gap: s.ssa_gap,
            mono_form_gap: s.mono_form_gap,
            rewrite_residual: s.rewrite_residual(),
            improved_rhs: s.improved_rhs,
            improved_slack: s.improved_slack(),
        })
    })?;
    let summary = SsaSummary {
        instances: rows.len(),
        violations: rows.iter().filter(|r| r.is_violation()).count(),
        min_ssa_gap: rows.iter().map(|r| r.ssa_gap).fold(f64::INFINITY, f64::min),
        max_rewrite_residual: rows.iter().map(|r| r.rewrite_residual).fold(0.0, f64::max),
        min_improved_slack: rows.iter().map(|r| r.improved_slack).fold(f64::INFINITY, f64::min),
    };
    Ok(SsaOutcome { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub omega_size: usize,
    /// Fixed number of cells; `None` draws it uniformly from 1..=omega_size.
    pub cells: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub id: usize,
    pub seed: u64,
    pub omega_size: usize,
    pub cells: usize,
    pub max_discrepancy: f64,
    pub quantum_gap: f64,
    pub classical_gap: f64,
    pub chain_residual: f64,
    pub pinsker_slack: f64,
}

impl OracleRow {
    pub fn is_violation(&self) -> bool {
        self.max_discrepancy >= 1e-9 || self.chain_residual > 1e-12 || self.pinsker_slack < -1e-12
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub violations: usize,
    pub max_discrepancy: f64,
    pub max_chain_residual: f64,
    pub min_pinsker_slack: f64,
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub rows: Vec<OracleRow>,
    pub summary: OracleSummary,
}

impl OracleOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{ORACLE_CSV_VERSION}\nid,seed,omega_size,cells,max_discrepancy,quantum_gap,classical_gap,chain_residual,pinsker_slack\n"
        );
        for r in &self.rows {
            let nums = [r.max_discrepancy, r.quantum_gap, r.classical_gap, r.chain_residual, r.pinsker_slack].map(fmt_f64);
            writeln!(out, "{},{},{},{},{}", r.id, r.seed, r.omega_size, r.cells, nums.join(",")).expect("writing to a String");
        }
        push_summary(&mut out, &self.summary);
        out
    }
}

pub fn run_oracle(config: &OracleConfig, threads: usize) -> Result<OracleOutcome> {
    if config.samples == 0 || config.omega_size == 0 {
        return Err(Error::Parse("samples and sample-space size must be at least 1".into()));
    }
    if let Some(c) = config.cells {
        if c == 0 || c > config.omega_size {
            return Err(Error::InvalidModel(format!(
                "cannot split {} points into {c} cells",
                config.omega_size
            )));
        }
    }
    let rows = run_indexed(config.samples, threads, |i| {
        let key = substream_key(config.seed, i as u64);
        let mut rng = CounterRng::new(key);
        let cells = config.cells.unwrap_or_else(|| 1 + rng.below(config.omega_size));
        let model = ClassicalModel::random(config.omega_size, cells, &mut rng)?;
        let oracle = diagonal_oracle_check(&model, &config.tolerances)?;
        let chain = classical_chain(&model);
        let pinsker = classical_pinsker_gap(&model);
        Ok(OracleRow {
            id: i,
            seed: key,
            omega_size: config.omega_size,
            cells,
            max_discrepancy: oracle.max_discrepancy,
            quantum_gap: oracle.quantum_gap,
            classical_gap: oracle.classical_gap,
            chain_residual: chain.chain_residual(),
            pinsker_slack: pinsker.gap - pinsker.pinsker_rhs,
        })
    })?;
    let summary = OracleSummary {
        instances: rows.len(),
        violations: rows.iter().filter(|r| r.is_violation()).count(),
        max_discrepancy: rows.iter().map(|r| r.max_discrepancy).fold(0.0, f64::max),
        max_chain_residual: rows.iter().map(|r| r.chain_residual).fold(0.0, f64::max),
        min_pinsker_slack: rows.iter().map(|r| r.pinsker_slack).fold(f64::INFINITY, f64::min),
    };
    Ok(OracleOutcome { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_dims() {
        assert_eq!(tensor_factor_dims(2), (2, 1));
        assert_eq!(tensor_factor_dims(3), (3, 1));
        assert_eq!(tensor_factor_dims(4), (2, 2));
        assert_eq!(tensor_factor_dims(6), (2, 3));
        assert_eq!(tensor_factor_dims(8), (2, 4));
    }

    #[test]
    fn sweep_is_thread_independent() {
        let mut cfg = SweepConfig::new(3, AlgebraSource::Profile(Profile::RandomTwoGenerator), 12, 99);
        cfg.identities = true;
        let a = run_sweep(&cfg, 1).unwrap().to_csv();
        let b = run_sweep(&cfg, 4).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(SWEEP_CSV_VERSION));
        assert!(a.lines().last().unwrap().starts_with("# summary {"));
        assert_eq!(a.lines().count(), 12 + 3);
    }

    #[test]
    fn reduced_rank_policy() {
        let mut cfg = SweepConfig::new(4, AlgebraSource::Profile(Profile::TensorFactor), 5, 1);
        cfg.rank = RankPolicy::Fixed(2);
        let out = run_sweep(&cfg, 1).unwrap();
        assert_eq!(out.summary.violations, 0);
        cfg.rank = RankPolicy::Fixed(5);
        assert!(matches!(run_sweep(&cfg, 1), Err(Error::BadRank { .. })));
    }

    #[test]
    fn small_ssa_and_oracle_runs() {
        let ssa = run_ssa(
            &SsaConfig {
                dims: [2, 2, 2],
                samples: 6,
                seed: 3,
                tolerances: Tolerances::DEFAULT,
            },
            2,
        )
        .unwrap();
        assert_eq!(ssa.summary.violations, 0);
        let oracle = run_oracle(
            &OracleConfig {
                omega_size: 6,
                cells: Some(6),
                samples: 4,
                seed: 5,
                tolerances: Tolerances::DEFAULT,
            },
            2,
        )
        .unwrap();
        assert_eq!(oracle.summary.violations, 0);
        assert!(oracle.rows.iter().all(|r| r.quantum_gap.abs() < 1e-12));
    }
}
