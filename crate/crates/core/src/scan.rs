//! Nuclear-charge scan across the critical charge.
//!
//! The scan runs from high to low `Z`. While the ion is bound every row is
//! a fresh variational optimum warm-started from the row before. Below the
//! critical charge the exponents are no longer optimized; they are frozen at
//! (or extrapolated from) the last bound rows and the state is followed by
//! overlap with the previous row.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::BasisSpec;
use crate::density::{shannon_entropy, EntropyResult};
use crate::operators::{expectation_r1, SystemSpec, Wavefunction};
use crate::precision::{PrecisionPolicy, Real};
use crate::spectral::{optimize_with_step, solve_system, track_coefficients, DEFAULT_SIMPLEX_STEP};

/// Nuclear charge below which the two-electron ion is unbound.
pub const Z_CRITICAL: f64 = 0.911028;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    Invalid(String),
    #[error("malformed table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BelowCriticalStrategy {
    /// Keep the exponents of the last bound row.
    Freeze,
    /// Continue the exponents linearly in `Z` from the last two bound rows.
    Extrapolate,
}

impl fmt::Display for BelowCriticalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Freeze => "freeze",
            Self::Extrapolate => "extrapolate",
        })
    }
}

impl FromStr for BelowCriticalStrategy {
    type Err = ScanError;
    fn from_str(s: &str) -> Result<Self, ScanError> {
        match s {
            "freeze" => Ok(Self::Freeze),
            "extrapolate" => Ok(Self::Extrapolate),
            _ => Err(ScanError::Invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Bound,
    QuasiBound,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bound => "bound",
            Self::QuasiBound => "quasi-bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub z_from: f64,
    pub z_to: f64,
    pub z_step: f64,
    pub omega: u32,
    pub z_critical: f64,
    pub strategy: BelowCriticalStrategy,
    /// Starting Gauss–Laguerre order for the entropy; `None` for the default.
    pub entropy_order: Option<usize>,
    pub entropy_scale: Option<f64>,
    /// Energy evaluations allowed per optimized row.
    pub budget: usize,
    /// Roots offered to state tracking below the critical charge.
    pub tracked_roots: usize,
    pub precision: PrecisionPolicy,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            z_from: 0.88,
            z_to: 1.00,
            z_step: 0.005,
            omega: 15,
            z_critical: Z_CRITICAL,
            strategy: BelowCriticalStrategy::Freeze,
            entropy_order: None,
            entropy_scale: None,
            budget: 300,
            tracked_roots: 4,
            precision: PrecisionPolicy::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.z_from > 0.0 && self.z_from < self.z_to) {
            return Err(ScanError::Invalid("need 0 < z_from < z_to".into()));
        }
        if !(self.z_step > 0.0) {
            return Err(ScanError::Invalid("z_step must be positive".into()));
        }
        if self.omega < 5 {
            return Err(ScanError::Invalid("omega must be at least 5".into()));
        }
        if self.budget == 0 || self.tracked_roots == 0 {
            return Err(ScanError::Invalid("budget and tracked_roots must be positive".into()));
        }
        self.precision
            .validate()
            .map_err(|e| ScanError::Invalid(e.to_string()))
    }

    /// Charges visited, in execution (descending) order. Each value is the
    /// nearest double to a 12-digit decimal so grids do not drift.
    pub fn grid(&self) -> Vec<f64> {
        let span = (self.z_to - self.z_from) / self.z_step;
        let count = (span + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let z = self.z_to - i as f64 * self.z_step;
                format!("{z:.12}").parse().unwrap()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "Z")]
    pub z: f64,
    pub energy: f64,
    #[serde(rename = "S_r")]
    pub s_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub regime: Regime,
    pub norm_residual: f64,
    /// `⟨r₁⟩` of the followed state.
    pub r1: f64,
    pub optimizer_converged: bool,
    pub solver_converged: bool,
    pub entropy_converged: bool,
}

impl ScanRow {
    pub fn converged(&self) -> bool {
        self.optimizer_converged && self.solver_converged && self.entropy_converged
    }

    /// Energies of bound rows are variational upper bounds; quasi-bound
    /// energies are not.
    pub fn is_upper_bound(&self) -> bool {
        self.regime == Regime::Bound
    }

    fn rounded(mut self) -> Self {
        for v in [
            &mut self.z,
            &mut self.energy,
            &mut self.s_r,
            &mut self.alpha,
            &mut self.beta,
            &mut self.norm_residual,
            &mut self.r1,
        ] {
            *v = parse_number(&format_number(*v)).unwrap();
        }
        self
    }

    fn failed(z: f64, regime: Regime, alpha: f64, beta: f64) -> Self {
        Self {
            z,
            energy: f64::NAN,
            s_r: f64::NAN,
            alpha,
            beta,
            regime,
            norm_residual: f64::NAN,
            r1: f64::NAN,
            optimizer_converged: false,
            solver_converged: false,
            entropy_converged: false,
        }
    }
}

#[derive(Clone)]
struct Followed<R> {
    z: f64,
    alpha: f64,
    beta: f64,
    energy: f64,
    coefficients: Vec<R>,
}

fn finish_row<R: Real>(
    config: &ScanConfig,
    wf: &Wavefunction<R>,
    regime: Regime,
    optimizer_converged: bool,
) -> ScanRow {
    let z = wf.system.z();
    let entropy = shannon_entropy(wf, config.entropy_order, config.entropy_scale);
    let r1 = expectation_r1(wf).map(|v| v.to_f64()).unwrap_or(f64::NAN);
    let (s_r, norm_residual, entropy_converged) = match entropy {
        Ok(EntropyResult {
            s_r,
            norm_residual,
            converged,
            ..
        }) => (s_r, norm_residual, converged),
        Err(_) => (f64::NAN, f64::NAN, false),
    };
    ScanRow {
        z,
        energy: wf.energy.to_f64(),
        s_r,
        alpha: wf.basis.alpha.to_f64(),
        beta: wf.basis.beta.to_f64(),
        regime,
        norm_residual,
        r1,
        optimizer_converged,
        solver_converged: true,
        entropy_converged,
    }
    .rounded()
}

/// Walk the charge grid from `z_to` down to `z_from`. Failures are recorded
/// in the row flags and the walk continues.
pub fn scan_z<R: Real>(config: &ScanConfig) -> Result<Vec<ScanRow>, ScanError> {
    scan_z_with::<R>(config, |_| {})
}

/// [`scan_z`] reporting each row as soon as it is finished.
pub fn scan_z_with<R: Real>(config: &ScanConfig, mut on_row: impl FnMut(&ScanRow)) -> Result<Vec<ScanRow>, ScanError> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut bound: Vec<Followed<R>> = Vec::new();
    let mut previous: Option<Followed<R>> = None;
    for z in config.grid() {
        let system = SystemSpec::nucleus(z);
        let row = if z >= config.z_critical {
            let (initial, step) = match &previous {
                Some(p) => ((p.alpha, p.beta), DEFAULT_SIMPLEX_STEP / 4.0),
                None => ((system.default_exponent(), system.default_exponent()), DEFAULT_SIMPLEX_STEP),
            };
            match optimize_with_step::<R>(&system, config.omega, initial, step, config.budget, &config.precision) {
                Ok(opt) => {
                    let wf = opt.wavefunction(&system);
                    let row = finish_row(config, &wf, Regime::Bound, opt.converged);
                    let f = Followed {
                        z,
                        alpha: opt.alpha.to_f64(),
                        beta: opt.beta.to_f64(),
                        energy: opt.energy.to_f64(),
                        coefficients: opt.solution.coefficients,
                    };
                    previous = Some(f.clone());
                    bound.push(f);
                    row
                }
                Err(_) => ScanRow::failed(z, Regime::Bound, initial.0, initial.1),
            }
        } else {
            quasi_bound_row(config, &system, &bound, &mut previous)
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

fn below_critical_exponents<R>(config: &ScanConfig, z: f64, bound: &[Followed<R>]) -> Option<(f64, f64)> {
    let last = bound.last()?;
    match config.strategy {
        BelowCriticalStrategy::Freeze => Some((last.alpha, last.beta)),
        BelowCriticalStrategy::Extrapolate => {
            if bound.len() < 2 {
                return Some((last.alpha, last.beta));
            }
            let prev = &bound[bound.len() - 2];
            let t = (z - last.z) / (last.z - prev.z);
            let a = last.alpha + t * (last.alpha - prev.alpha);
            let b = last.beta + t * (last.beta - prev.beta);
            (a > 0.0 && b > 0.0).then_some((a, b))
        }
    }
}

fn quasi_bound_row<R: Real>(
    config: &ScanConfig,
    system: &SystemSpec,
    bound: &[Followed<R>],
    previous: &mut Option<Followed<R>>,
) -> ScanRow {
    let z = system.z();
    let Some((alpha, beta)) = below_critical_exponents(config, z, bound) else {
        return ScanRow::failed(z, Regime::QuasiBound, f64::NAN, f64::NAN);
    };
    let Some(prev) = previous.as_ref() else {
        return ScanRow::failed(z, Regime::QuasiBound, alpha, beta);
    };
    let Ok(basis) = BasisSpec::new(config.omega, R::from_f64(alpha), R::from_f64(beta)) else {
        return ScanRow::failed(z, Regime::QuasiBound, alpha, beta);
    };
    let count = config.tracked_roots.min(basis.len());
    let hint = Some(prev.energy - 0.05 * prev.energy.abs().max(0.1));
    let Ok(sol) = solve_system(system, &basis, count, &config.precision, hint) else {
        return ScanRow::failed(z, Regime::QuasiBound, alpha, beta);
    };
    let Ok(chosen) = track_coefficients(&prev.coefficients, &sol.roots, &sol.overlap) else {
        return ScanRow::failed(z, Regime::QuasiBound, alpha, beta);
    };
    let wf = Wavefunction {
        system: *system,
        basis,
        coefficients: chosen.coefficients.clone(),
        energy: chosen.energy,
        metadata: Default::default(),
    };
    let row = finish_row(config, &wf, Regime::QuasiBound, true);
    *previous = Some(Followed {
        z,
        alpha,
        beta,
        energy: chosen.energy.to_f64(),
        coefficients: chosen.coefficients,
    });
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = ScanError;
    fn from_str(s: &str) -> Result<Self, ScanError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(ScanError::Invalid(format!("unknown table format {s:?}"))),
        }
    }
}

pub const TABLE_COLUMNS: [&str; 12] = [
    "Z",
    "energy",
    "S_r",
    "alpha",
    "beta",
    "regime",
    "norm_residual",
    "r1",
    "upper_bound",
    "optimizer_converged",
    "solver_converged",
    "entropy_converged",
];

/// Ten significant digits, positional where sensible.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        x.to_digits(10)
    }
}

fn parse_number(s: &str) -> Result<f64, ScanError> {
    s.parse::<f64>()
        .map_err(|_| ScanError::Table(format!("not a number: {s:?}")))
}

fn row_fields(r: &ScanRow) -> [String; 12] {
    [
        format_number(r.z),
        format_number(r.energy),
        format_number(r.s_r),
        format_number(r.alpha),
        format_number(r.beta),
        r.regime.to_string(),
        format_number(r.norm_residual),
        format_number(r.r1),
        r.is_upper_bound().to_string(),
        r.optimizer_converged.to_string(),
        r.solver_converged.to_string(),
        r.entropy_converged.to_string(),
    ]
}

/// Rows as CSV or JSON with a fixed column order. Every number is a
/// decimal string with ten significant digits.
pub fn emit_table(rows: &[ScanRow], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut out = TABLE_COLUMNS.join(",");
            out.push('\n');
            for r in rows {
                out.push_str(&row_fields(r).join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Json => {
            let records: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    TABLE_COLUMNS
                        .iter()
                        .zip(row_fields(r))
                        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                        .collect()
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&records).expect("string maps serialize");
            s.push('\n');
            s
        }
    }
}

fn row_from_fields(get: impl Fn(&str) -> Option<String>) -> Result<ScanRow, ScanError> {
    let field = |k: &str| get(k).ok_or_else(|| ScanError::Table(format!("missing column {k}")));
    let num = |k: &str| field(k).and_then(|v| parse_number(&v));
    let flag = |k: &str| {
        field(k).and_then(|v| {
            v.parse::<bool>()
                .map_err(|_| ScanError::Table(format!("{k}: not a boolean: {v:?}")))
        })
    };
    let regime = match field("regime")?.as_str() {
        "bound" => Regime::Bound,
        "quasi-bound" => Regime::QuasiBound,
        other => return Err(ScanError::Table(format!("unknown regime {other:?}"))),
    };
    Ok(ScanRow {
        z: num("Z")?,
        energy: num("energy")?,
        s_r: num("S_r")?,
        alpha: num("alpha")?,
        beta: num("beta")?,
        regime,
        norm_residual: num("norm_residual")?,
        r1: num("r1")?,
        optimizer_converged: flag("optimizer_converged")?,
        solver_converged: flag("solver_converged")?,
        entropy_converged: flag("entropy_converged")?,
    })
}

/// Inverse of [`emit_table`].
pub fn parse_table(text: &str, format: TableFormat) -> Result<Vec<ScanRow>, ScanError> {
    match format {
        TableFormat::Csv => {
            let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
            let header: Vec<&str> = lines
                .next()
                .ok_or_else(|| ScanError::Table("empty document".into()))?
                .split(',')
                .collect();
            lines
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|line| {
                    let cells: Vec<&str> = line.split(',').collect();
                    row_from_fields(|k| {
                        header
                            .iter()
                            .position(|h| *h == k)
                            .and_then(|i| cells.get(i))
                            .map(|s| s.to_string())
                    })
                })
                .collect()
        }
        TableFormat::Json => {
            let records: Vec<serde_json::Map<String, serde_json::Value>> =
                serde_json::from_str(text).map_err(|e| ScanError::Table(e.to_string()))?;
            records
                .iter()
                .map(|rec| row_from_fields(|k| rec.get(k).and_then(|v| v.as_str()).map(str::to_string)))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(z: f64, regime: Regime) -> ScanRow {
        ScanRow {
            z,
            energy: -0.527751015123,
            s_r: 5.8371731234,
            alpha: 1.234567890123,
            beta: 0.3,
            regime,
            norm_residual: 1.5e-14,
            r1: 2.7101771334,
            optimizer_converged: true,
            solver_converged: true,
            entropy_converged: true,
        }
        .rounded()
    }

    #[test]
    fn grid_is_descending_and_inclusive() {
        let c = ScanConfig {
            z_step: 0.01,
            ..ScanConfig::default()
        };
        let g = c.grid();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 0.88);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(ScanConfig::default().grid().len(), 25);
    }

    #[test]
    fn rejects_bad_config() {
        for c in [
            ScanConfig {
                z_from: 1.2,
                ..ScanConfig::default()
            },
            ScanConfig {
                z_step: 0.0,
                ..ScanConfig::default()
            },
            ScanConfig {
                omega: 4,
                ..ScanConfig::default()
            },
        ] {
            assert!(matches!(c.validate(), Err(ScanError::Invalid(_))));
        }
    }

    #[test]
    fn single_row_table() {
        let rows = [sample(1.0, Regime::Bound)];
        let csv = emit_table(&rows, TableFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("Z,energy,S_r,alpha,beta,regime,norm_residual"));
        assert!(lines[1].starts_with("1.000000000,-0.5277510151,5.837173123,1.234567890,0.3000000000,bound,"));
    }

    #[test]
    fn tables_round_trip() {
        let rows = vec![sample(1.0, Regime::Bound), sample(0.9, Regime::QuasiBound)];
        for format in [TableFormat::Csv, TableFormat::Json] {
            let text = emit_table(&rows, format);
            assert_eq!(parse_table(&text, format).unwrap(), rows);
        }
        assert!(!rows[1].is_upper_bound());
    }

    #[test]
    fn extrapolation_is_linear() {
        let f = |z: f64, a: f64, b: f64| Followed::<f64> {
            z,
            alpha: a,
            beta: b,
            energy: 0.0,
            coefficients: vec![],
        };
        let bound = [f(0.93, 1.0, 0.5), f(0.92, 0.9, 0.45)];
        let c = ScanConfig {
            strategy: BelowCriticalStrategy::Extrapolate,
            ..ScanConfig::default()
        };
        let (a, b) = below_critical_exponents(&c, 0.90, &bound).unwrap();
        assert!((a - 0.7).abs() < 1e-12 && (b - 0.35).abs() < 1e-12);
        let frozen = below_critical_exponents(&ScanConfig::default(), 0.90, &bound).unwrap();
        assert_eq!(frozen, (0.9, 0.45));
    }
}
