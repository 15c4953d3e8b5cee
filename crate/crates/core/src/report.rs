//! Verification reports and their JSON/CSV serializations.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resolution::MomentGrid;

/// Where the target value of a check comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// A closed form stated for the construction.
    ClosedForm,
    /// An independent numerical oracle.
    DerivedOracle,
    /// Follows directly from the definitions.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub target: f64,
    pub computed: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// `pass` is `residual ≤ tolerance`; NaN residuals fail.
    pub fn new(name: impl Into<String>, target: f64, computed: f64, residual: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self {
            name: name.into(),
            target,
            computed,
            residual,
            tolerance,
            pass: residual <= tolerance,
            provenance,
            detail: None,
        }
    }

    /// Relative residual `|computed − target|/|target|` (absolute when the target is 0).
    pub fn relative(name: impl Into<String>, target: f64, computed: f64, tolerance: f64, provenance: Provenance) -> Self {
        let residual = if target == 0.0 {
            if computed.is_nan() { f64::INFINITY } else { computed.abs() }
        } else {
            crate::resolution::relative_residual(computed, target)
        };
        Self::new(name, target, computed, residual, tolerance, provenance)
    }

    /// A residual that should vanish.
    pub fn zero(name: impl Into<String>, residual: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self::new(name, 0.0, residual, residual, tolerance, provenance)
    }

    /// A yes/no property: target 1, computed 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool, provenance: Provenance) -> Self {
        let computed = if ok { 1.0 } else { 0.0 };
        Self::new(name, 1.0, computed, 1.0 - computed, 0.0, provenance)
    }

    /// `computed` must be at least `bound`; the residual is the shortfall.
    pub fn at_least(name: impl Into<String>, bound: f64, computed: f64, provenance: Provenance) -> Self {
        let residual = if computed.is_nan() { f64::INFINITY } else { (bound - computed).max(0.0) };
        Self::new(name, bound, computed, residual, 0.0, provenance)
    }

    /// A moment grid summarized by its worst row.
    pub fn from_grid(grid: &MomentGrid, provenance: Provenance) -> Self {
        let (target, computed, detail) = match grid.worst() {
            Some(row) => (
                row.target,
                row.computed,
                Some(format!("worst moment at indices {:?}", row.indices)),
            ),
            None => (0.0, 0.0, None),
        };
        Self {
            name: grid.name.clone(),
            target,
            computed,
            residual: grid.max_residual,
            tolerance: grid.tol,
            pass: grid.pass,
            provenance,
            detail,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// One row of the spectrum table; `m` is empty for single-mode models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub model: String,
    pub n: u64,
    pub m: Option<u64>,
    pub e_plus: f64,
    pub e_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(config: serde_json::Value, checks: Vec<Check>, generated_unix: Option<u64>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { version: env!("CARGO_PKG_VERSION").to_string(), generated_unix, config, checks, pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Plain decimal in general, exponent notation for `|x| < 1e−3` or `|x| > 1e6`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..=1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// `grid,m,l,target,computed,relative_residual`; `l` is empty for one-index grids
/// and extra indices are joined with `;`.
pub fn write_moments_csv<W: Write>(grids: &[MomentGrid], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["grid", "m", "l", "target", "computed", "relative_residual"]).map_err(io_err)?;
    for grid in grids {
        for row in &grid.rows {
            let m = row.indices.first().map(|i| i.to_string()).unwrap_or_default();
            let l = row.indices.iter().skip(1).map(|i| i.to_string()).collect::<Vec<_>>().join(";");
            w.write_record([
                grid.name.clone(),
                m,
                l,
                format_number(row.target),
                format_number(row.computed),
                format_number(row.relative_residual),
            ])
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// `model,n,m,E_plus,E_minus`.
pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "n", "m", "E_plus", "E_minus"]).map_err(io_err)?;
    for row in rows {
        w.write_record([
            row.model.clone(),
            row.n.to_string(),
            row.m.map(|m| m.to_string()).unwrap_or_default(),
            format_number(row.e_plus),
            format_number(row.e_minus),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes `report.json`, `moments.csv` and `spectrum.csv` into `dir`.
pub fn write_outputs(dir: &Path, report: &VerificationReport, grids: &[MomentGrid], spectrum: &[SpectrumRow]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut json = report.to_json()?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json).map_err(io_err)?;
    write_moments_csv(grids, std::fs::File::create(dir.join("moments.csv")).map_err(io_err)?)?;
    write_spectrum_csv(spectrum, std::fs::File::create(dir.join("spectrum.csv")).map_err(io_err)?)
}
