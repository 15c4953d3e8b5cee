//! Command-line driver: `verify`, `list-presets` and `export-state`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::{find_preset, presets, RunSettings, DEFAULT_CUTOFF, IDENTITY_CUTOFF};
use crate::report::{write_outputs, SpectrumRow, VerificationReport};
use crate::resolution::{MomentGrid, QuadratureSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit status when every check passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status when a report was written with failing checks.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for invalid invocations or configs; no report is written.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mvcs", version, about = "Construct and verify multi-matrix vector coherent states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the check suites of a preset and write report.json, moments.csv and spectrum.csv.
    Verify(VerifyArgs),
    /// List the embedded presets.
    ListPresets,
    /// Print the states of a preset as JSON.
    ExportState(ExportArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["preset", "config"])))]
pub struct VerifyArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-factor cutoff of state builds and normalization series.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Radial quadrature nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Replaces every default tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value = "mvcs-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run independent suites in parallel.
    #[arg(long)]
    pub parallel: bool,
    /// Omit the generation time so reports are byte-identical across runs.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub preset: String,
    /// Parameter overrides as a JSON object.
    #[arg(long, default_value = "{}")]
    pub params: String,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A run configuration. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub preset: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub identity_cutoff: Option<usize>,
    #[serde(default)]
    pub radial_nodes: Option<usize>,
    #[serde(default)]
    pub angle_nodes: Option<usize>,
    #[serde(default)]
    pub polar_nodes: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub parallel: Option<bool>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl RunConfig {
    pub fn for_preset(preset: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            preset: preset.into(),
            params: empty_object(),
            cutoff: None,
            identity_cutoff: None,
            radial_nodes: None,
            angle_nodes: None,
            polar_nodes: None,
            tol: None,
            seed: None,
            parallel: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills every optional field with its default and validates the result.
    pub fn resolved(&self) -> Result<Self> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let preset = find_preset(&self.preset)?;
        if !self.params.is_object() {
            return Err(Error::Config("params must be a JSON object".into()));
        }
        preset.states(&self.params, 1).map_err(|e| Error::Config(format!("params: {e}")))?;
        let quad = QuadratureSpec::default();
        let out = Self {
            schema_version: SCHEMA_VERSION,
            preset: self.preset.clone(),
            params: self.params.clone(),
            cutoff: Some(self.cutoff.unwrap_or(DEFAULT_CUTOFF)),
            identity_cutoff: Some(self.identity_cutoff.unwrap_or(IDENTITY_CUTOFF)),
            radial_nodes: Some(self.radial_nodes.unwrap_or(quad.radial_nodes)),
            angle_nodes: Some(self.angle_nodes.unwrap_or(quad.angle_nodes)),
            polar_nodes: Some(self.polar_nodes.unwrap_or(quad.polar_nodes)),
            tol: self.tol,
            seed: Some(self.seed.unwrap_or(0)),
            parallel: Some(self.parallel.unwrap_or(false)),
        };
        if out.cutoff == Some(0) || out.identity_cutoff == Some(0) {
            return Err(Error::Config("cutoffs must be at least 1".into()));
        }
        if let Some(tol) = out.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
            }
        }
        out.settings().quad.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(out)
    }

    fn settings(&self) -> RunSettings {
        let d = RunSettings::default();
        RunSettings {
            cutoff: self.cutoff.unwrap_or(d.cutoff),
            identity_cutoff: self.identity_cutoff.unwrap_or(d.identity_cutoff),
            quad: QuadratureSpec {
                radial_nodes: self.radial_nodes.unwrap_or(d.quad.radial_nodes),
                angle_nodes: self.angle_nodes.unwrap_or(d.quad.angle_nodes),
                polar_nodes: self.polar_nodes.unwrap_or(d.quad.polar_nodes),
            },
            tol: self.tol,
            seed: self.seed.unwrap_or(d.seed),
            params: self.params.clone(),
        }
    }
}

/// Everything a verification run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub moments: Vec<MomentGrid>,
    pub spectrum: Vec<SpectrumRow>,
}

/// Runs the preset named in the config. `timestamp` adds the generation time.
pub fn run(config: &RunConfig, timestamp: bool) -> Result<RunOutput> {
    let config = config.resolved()?;
    let preset = find_preset(&config.preset)?;
    let out = preset.run(&config.settings(), config.parallel.unwrap_or(false));
    let echo = serde_json::to_value(&config).map_err(|e| Error::Config(e.to_string()))?;
    let generated = timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    Ok(RunOutput {
        report: VerificationReport::new(echo, out.checks, generated),
        moments: out.moments,
        spectrum: out.spectrum,
    })
}

fn verify_config(args: &VerifyArgs) -> Result<RunConfig> {
    let mut config = match (&args.preset, &args.config) {
        (_, Some(path)) => RunConfig::load(path)?,
        (Some(name), None) => RunConfig::for_preset(name),
        (None, None) => return Err(Error::Config("either --preset or --config is required".into())),
    };
    if let Some(c) = args.cutoff {
        config.cutoff = Some(c);
    }
    if let Some(n) = args.nodes {
        config.radial_nodes = Some(n);
    }
    if let Some(t) = args.tol {
        config.tol = Some(t);
    }
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    if args.parallel {
        config.parallel = Some(true);
    }
    config.resolved()
}

fn verify(args: &VerifyArgs) -> Result<i32> {
    let config = verify_config(args)?;
    let out = run(&config, !args.no_timestamp)?;
    write_outputs(&args.out, &out.report, &out.moments, &out.spectrum)?;
    for c in &out.report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("{status} {} residual={:e} tol={:e}", c.name, c.residual, c.tolerance);
        if !c.pass {
            if let Some(d) = &c.detail {
                println!("     {d}");
            }
        }
    }
    let failed = out.report.failures().count();
    println!(
        "{}: {} checks, {failed} failed; report written to {}",
        config.preset,
        out.report.checks.len(),
        args.out.join("report.json").display()
    );
    Ok(if out.report.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn export_state(args: &ExportArgs) -> Result<()> {
    let preset = find_preset(&args.preset)?;
    let params: serde_json::Value =
        serde_json::from_str(&args.params).map_err(|e| Error::Config(format!("--params: {e}")))?;
    if args.cutoff == 0 {
        return Err(Error::Config("cutoffs must be at least 1".into()));
    }
    let states = preset.states(&params, args.cutoff)?;
    let mut json = serde_json::to_string_pretty(&states).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, json).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

/// Executes a parsed command and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Verify(args) => verify(args),
        Command::ListPresets => {
            for p in presets() {
                println!("{:<40} {}", p.name, p.description);
            }
            Ok(EXIT_PASS)
        }
        Command::ExportState(args) => export_state(args).map(|_| EXIT_PASS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_validation() {
        let c: RunConfig = serde_json::from_str(r#"{"schema_version": 1, "preset": "oscillator-6", "cutoff": 12}"#).unwrap();
        let r = c.resolved().unwrap();
        assert_eq!(r.cutoff, Some(12));
        assert_eq!(r.radial_nodes, Some(64));
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);

        let bad_version = RunConfig { schema_version: 2, ..c.clone() };
        assert!(bad_version.resolved().is_err());
        assert!(RunConfig { tol: Some(-1.0), ..c.clone() }.resolved().is_err());
        assert!(RunConfig { cutoff: Some(0), ..c.clone() }.resolved().is_err());
        assert!(RunConfig::for_preset("unknown").resolved().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"schema_version": 1, "preset": "x", "extra": 1}"#).is_err());
    }

    #[test]
    fn missing_config_is_an_error() {
        assert!(matches!(RunConfig::load(Path::new("/nonexistent/missing.json")), Err(Error::Config(_))));
    }
}
