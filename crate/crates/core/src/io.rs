//! TOML experiment configuration and CSV result files.
//!
//! A config file has a `[scenario]` table (source powers in dB relative to
//! the per-element noise power) and optional `[plan]` and `[pipeline]`
//! tables:
//!
//! ```toml
//! [scenario]
//! noise_power = 1.0
//! seed = 0
//! mismatch = { kind = "look-direction", bound_deg = 5.0 }
//!
//! [scenario.array]
//! elements = 20
//! spacing_wavelengths = 0.5
//! grid_step_deg = 0.9
//!
//! [[scenario.sources]]
//! direction_deg = 10.0
//! power_db = 10.0
//! kind = "soi"
//!
//! [[scenario.sources]]
//! direction_deg = -50.0
//! power_db = 30.0
//! kind = "interferer"
//! drift_deg = 0.0
//!
//! [plan]
//! axis = "snr"
//! values = [-20.0, -10.0, 0.0, 10.0]
//! trials = 100
//! methods = ["optimal", "pseur", "ipn-cc"]
//! base_seed = 7
//! ```

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use csv::Error as CsvError;

use crate::array::{ArraySpec, Mismatch, Scenario, SourceKind, SourceSpec};
use crate::beamforming::{Beampattern, Method, DEFAULT_SPECTRAL_POINTS};
use crate::error::{Error, Result};
use crate::experiment::{
    ExperimentPlan, PipelineConfig, ResultRow, SweepAxis, DEFAULT_SNAPSHOTS, DEFAULT_SNR_DB, DEFAULT_TRIALS,
};

pub const SWEEP_HEADER: [&str; 7] = [
    "sweep_value",
    "method",
    "mean_sinr_db",
    "std_db",
    "mean_dev_db",
    "trials",
    "failures",
];
pub const BEAMPATTERN_HEADER: [&str; 2] = ["theta_deg", "gain_db"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub direction_deg: f64,
    /// Power in dB relative to `noise_power`.
    pub power_db: f64,
    pub kind: SourceKind,
    #[serde(default)]
    pub drift_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub array: ArraySpec,
    pub sources: Vec<SourceConfig>,
    #[serde(default = "unit_noise")]
    pub noise_power: f64,
    #[serde(default)]
    pub mismatch: Mismatch,
    #[serde(default)]
    pub seed: u64,
}

fn unit_noise() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn to_scenario(&self) -> Result<Scenario> {
        let scenario = Scenario {
            array: self.array,
            sources: self
                .sources
                .iter()
                .map(|s| SourceSpec {
                    direction_deg: s.direction_deg,
                    power: self.noise_power * 10f64.powf(s.power_db / 10.0),
                    kind: s.kind,
                    drift_deg: s.drift_deg,
                })
                .collect(),
            noise_power: self.noise_power,
            mismatch: self.mismatch,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    Snr,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub axis: Option<AxisKind>,
    pub values: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub base_seed: Option<u64>,
    pub snapshots: Option<usize>,
    pub snr_db: Option<f64>,
    pub smi_loading: Option<f64>,
    pub spectral_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

pub fn parse_methods<S: AsRef<str>>(names: &[S]) -> Result<Vec<Method>> {
    names.iter().map(|n| n.as_ref().parse()).collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Builds a plan sweeping `axis`. The file's `values` are used when the
    /// file names the same axis or none; otherwise the axis defaults apply.
    pub fn plan(&self, axis: AxisKind) -> Result<ExperimentPlan> {
        let p = &self.plan;
        let values = p.values.as_ref().filter(|_| p.axis.is_none_or(|a| a == axis));
        let axis = match (axis, values) {
            (AxisKind::Snr, Some(v)) => SweepAxis::Snr(v.clone()),
            (AxisKind::Snr, None) => SweepAxis::default_snr(),
            (AxisKind::Snapshots, Some(v)) => SweepAxis::Snapshots(
                v.iter()
                    .map(|&x| {
                        if x.fract() == 0.0 && x >= 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(Error::Config(format!("snapshot count {x} is not a whole number")))
                        }
                    })
                    .collect::<Result<_>>()?,
            ),
            (AxisKind::Snapshots, None) => SweepAxis::default_snapshots(),
        };
        let mut plan = ExperimentPlan::new(self.scenario.to_scenario()?, axis);
        plan.trials = p.trials.unwrap_or(DEFAULT_TRIALS);
        if let Some(m) = &p.methods {
            plan.methods = parse_methods(m)?;
        }
        plan.base_seed = p.base_seed.unwrap_or(self.scenario.seed);
        plan.snapshots = p.snapshots.unwrap_or(DEFAULT_SNAPSHOTS);
        plan.snr_db = p.snr_db.unwrap_or(DEFAULT_SNR_DB);
        plan.smi_loading = p.smi_loading.unwrap_or(0.0);
        plan.spectral_points = p.spectral_points.unwrap_or(DEFAULT_SPECTRAL_POINTS);
        plan.pipeline = self.pipeline.clone();
        plan.validate()?;
        Ok(plan)
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_sweep<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            fixed(r.sweep_value),
            r.method.tag().to_string(),
            fixed(r.mean_sinr_db),
            fixed(r.std_db),
            fixed(r.mean_dev_db),
            r.trials.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_beampattern<W: Write>(pattern: &Beampattern, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BEAMPATTERN_HEADER)?;
    for (t, g) in pattern.angles_deg.iter().zip(&pattern.gain_db) {
        w.write_record([fixed(*t), fixed(*g)])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn export_sweep_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_sweep(rows, create(path)?).map_err(csv_err(path))
}

pub fn export_beampattern_csv(pattern: &Beampattern, path: &Path) -> Result<()> {
    write_beampattern(pattern, create(path)?).map_err(csv_err(path))
}

#[derive(Debug, Deserialize)]
struct SweepRecord {
    sweep_value: f64,
    method: String,
    mean_sinr_db: f64,
    std_db: f64,
    mean_dev_db: f64,
    trials: usize,
    failures: usize,
}

#[derive(Debug, Deserialize)]
struct PatternRecord {
    theta_deg: f64,
    gain_db: f64,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_sweep_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut rows = Vec::new();
    for rec in r.deserialize::<SweepRecord>() {
        let rec = rec.map_err(csv_err(path))?;
        rows.push(ResultRow {
            sweep_value: rec.sweep_value,
            method: rec.method.parse()?,
            mean_sinr_db: rec.mean_sinr_db,
            std_db: rec.std_db,
            mean_dev_db: rec.mean_dev_db,
            trials: rec.trials,
            failures: rec.failures,
        });
    }
    Ok(rows)
}

/// Loads a beampattern file. Linear magnitudes are recovered from the dB
/// column relative to the 0 dB reference.
pub fn load_beampattern_csv(path: &Path) -> Result<Beampattern> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut pattern = Beampattern {
        angles_deg: vec![],
        magnitude: vec![],
        gain_db: vec![],
    };
    for rec in r.deserialize::<PatternRecord>() {
        let rec = rec.map_err(csv_err(path))?;
        pattern.angles_deg.push(rec.theta_deg);
        pattern.magnitude.push(10f64.powf(rec.gain_db / 20.0));
        pattern.gain_db.push(rec.gain_db);
    }
    Ok(pattern)
}
