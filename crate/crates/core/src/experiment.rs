//! End-to-end reconstruction pipeline and Monte-Carlo sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    steering_vector, synthesize, ArraySpec, Mismatch, Scenario, SourceKind, SourceSpec, DESIRED_SECTOR_HALF_WIDTH_DEG,
};
use crate::beamforming::{
    baseline_capon_ipn, baseline_meps_ipn, baseline_optimal, baseline_smi, mvdr_weights, output_sinr_db,
    BeamformerWeights, Method, DEFAULT_SPECTRAL_POINTS,
};
use crate::error::{Error, Result};
use crate::estimation::{
    estimate_noise_power, music_minima, partition_subspaces, refine_minimum, sample_covariance, snapshot_doas, uncertainty_width,
    AngularSector, NoiseEstimator, SectorScan, DEFAULT_CONDITIONING,
};
use crate::linalg::{hermitian_eig, CMatrix, DEFAULT_RANK_TOL};
use crate::reconstruction::{
    gamma_levels, interference_power, reconstruct, LevelMode, ReconstructionProduct, TwoLevelSpectrum, DEFAULT_Q_IN,
};

/// Which direction the distortionless constraint is imposed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LookDirection {
    /// Always the presumed direction.
    Presumed,
    /// The refined MUSIC minimum near the presumed direction, when the
    /// signal of interest is detected above the noise eigenvalue edge;
    /// the presumed direction otherwise.
    #[default]
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub scan: SectorScan,
    pub q_in: usize,
    pub noise_estimator: NoiseEstimator,
    pub rank_tol: f64,
    /// Fraction of `N` that `|2t − N|` must reach for a snapshot to enter
    /// the width estimate.
    pub conditioning: f64,
    pub level_mode: LevelMode,
    /// MUSIC minima this close to the presumed look direction are attributed
    /// to the signal of interest and never treated as interferers.
    pub soi_window_deg: f64,
    /// Lower bound on each sector's half-width.
    pub min_half_width_deg: f64,
    /// Refine MUSIC grid minima to this resolution; `None` keeps grid values.
    pub refine_tol_deg: Option<f64>,
    pub look_direction: LookDirection,
    /// Multiplies the `(1 + √(M/N))²` noise edge in the detection test.
    pub detection_margin: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scan: SectorScan::default(),
            q_in: DEFAULT_Q_IN,
            noise_estimator: NoiseEstimator::default(),
            rank_tol: DEFAULT_RANK_TOL,
            conditioning: DEFAULT_CONDITIONING,
            level_mode: LevelMode::default(),
            soi_window_deg: DESIRED_SECTOR_HALF_WIDTH_DEG,
            min_half_width_deg: 0.0,
            refine_tol_deg: Some(1e-3),
            look_direction: LookDirection::default(),
            detection_margin: 1.2,
        }
    }
}

/// Everything the pipeline estimated on the way to its weights.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub weights: BeamformerWeights,
    pub look_direction_deg: f64,
    pub interferer_estimates_deg: Vec<f64>,
    pub sectors: Vec<AngularSector>,
    pub noise_power: f64,
    pub interferer_powers: Vec<f64>,
    /// `None` when every interference power came out zero and the pipeline
    /// fell back to the conventional beamformer.
    pub reconstruction: Option<ReconstructionProduct>,
}

/// Runs the full reconstruction beamformer on one batch of snapshots
/// (`M × N`, snapshots as columns). `source_count` counts the signal of
/// interest plus interferers.
pub fn run_pseur_pipeline(
    data: &CMatrix,
    presumed_soi_deg: f64,
    source_count: usize,
    spec: &ArraySpec,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    spec.validate()?;
    if data.nrows() != spec.elements {
        return Err(Error::InvalidArgument(format!(
            "snapshots have {} rows, array has {} elements",
            data.nrows(),
            spec.elements
        )));
    }
    if source_count < 2 {
        return Err(Error::InvalidArgument(
            "source count must include at least one interferer".into(),
        ));
    }
    let r = sample_covariance(data)?;
    let eig = hermitian_eig(&r)?;
    let parts = partition_subspaces(&eig, source_count)?;
    let noise_power = estimate_noise_power(&parts, config.noise_estimator);
    if !(noise_power > 0.0) {
        return Err(Error::Singular(format!(
            "noise power estimate {noise_power} is not positive"
        )));
    }

    let grid = spec.grid();
    let minima = music_minima(&parts.noise_basis, spec, &grid);
    let in_window = |t: f64| (t - presumed_soi_deg).abs() <= config.soi_window_deg;
    let mut interferer_estimates_deg: Vec<f64> = minima
        .iter()
        .filter(|m| !in_window(m.angle_deg))
        .take(source_count - 1)
        .map(|m| match config.refine_tol_deg {
            Some(tol) => refine_minimum(&parts.noise_basis, spec, m.angle_deg, spec.grid_step_deg, tol).angle_deg,
            None => m.angle_deg,
        })
        .collect();
    if interferer_estimates_deg.len() < source_count - 1 {
        return Err(Error::UnderResolved {
            found: interferer_estimates_deg.len(),
            wanted: source_count - 1,
        });
    }
    interferer_estimates_deg.sort_by(f64::total_cmp);

    let edge = (1.0 + (spec.elements as f64 / data.ncols() as f64).sqrt()).powi(2);
    let detected = parts.signal_values[source_count - 1] > config.detection_margin * edge * noise_power;
    let look_direction_deg = match (config.look_direction, minima.iter().find(|m| in_window(m.angle_deg))) {
        (LookDirection::Estimated, Some(m)) if detected => {
            let tol = config.refine_tol_deg.unwrap_or(spec.grid_step_deg);
            refine_minimum(&parts.noise_basis, spec, m.angle_deg, spec.grid_step_deg, tol).angle_deg
        }
        _ => presumed_soi_deg,
    };

    let mut sectors = Vec::with_capacity(interferer_estimates_deg.len());
    let mut interferer_powers = Vec::with_capacity(interferer_estimates_deg.len());
    for &center in &interferer_estimates_deg {
        let doas = snapshot_doas(data, center, &config.scan, spec)?;
        let sector = uncertainty_width(
            &doas,
            center,
            config.scan.half_width_deg,
            config.min_half_width_deg,
            config.conditioning,
        )?;
        sectors.push(AngularSector::new(
            center,
            sector.half_width_deg.max(config.min_half_width_deg),
        ));
        let est = interference_power(data, &steering_vector(center, spec), noise_power)?;
        interferer_powers.push(est.power);
    }

    let steering = steering_vector(look_direction_deg, spec);
    let (gamma_low, gamma_high) = match gamma_levels(noise_power, &interferer_powers) {
        Ok(levels) => levels,
        Err(Error::NoInterference) => {
            log::warn!("no interference power detected; using the conventional beamformer");
            let m = spec.elements;
            let weights = mvdr_weights(&CMatrix::identity(m, m), &steering, Method::Pseur)?;
            return Ok(PipelineOutcome {
                weights,
                look_direction_deg,
                interferer_estimates_deg,
                sectors,
                noise_power,
                interferer_powers,
                reconstruction: None,
            });
        }
        Err(e) => return Err(e),
    };
    let mut spectrum = TwoLevelSpectrum::new(gamma_low, gamma_high, sectors.clone())?;
    if config.level_mode == LevelMode::PerSector {
        spectrum = spectrum.with_sector_powers(&interferer_powers)?;
    }
    let product = reconstruct(spectrum, spec, config.q_in, config.rank_tol)?;
    let weights = mvdr_weights(&product.inverse, &steering, Method::Pseur)?;
    debug_assert!((weights.response(&steering).re - 1.0).abs() < 1e-8);
    Ok(PipelineOutcome {
        weights,
        look_direction_deg,
        interferer_estimates_deg,
        sectors,
        noise_power,
        interferer_powers,
        reconstruction: Some(product),
    })
}

/// Default SNR for snapshot sweeps and single trials, in dB.
pub const DEFAULT_SNR_DB: f64 = 10.0;
/// Default interference-to-noise ratio, in dB.
pub const DEFAULT_INR_DB: f64 = 30.0;
pub const DEFAULT_SNAPSHOTS: usize = 30;
pub const DEFAULT_TRIALS: usize = 100;

/// The four reference scenarios: matched steering (1), look-direction error
/// (2), gain and phase errors (3) and coherent local scattering (4).
pub fn example_scenario(example: u8) -> Result<Scenario> {
    let mismatch = match example {
        1 => Mismatch::None,
        2 => Mismatch::LookDirection { bound_deg: 5.0 },
        3 => Mismatch::GainPhase {
            gain_std: 0.05,
            phase_std_rad: 0.025 * PI,
        },
        4 => Mismatch::CoherentScattering {
            paths: 4,
            spread_deg: 2.0,
        },
        _ => return Err(Error::Config(format!("unknown example {example}; expected 1 to 4"))),
    };
    let inr = 10f64.powf(DEFAULT_INR_DB / 10.0);
    let mut scenario = Scenario {
        array: ArraySpec::default(),
        sources: vec![
            SourceSpec {
                direction_deg: 10.0,
                power: 1.0,
                kind: SourceKind::Soi,
                drift_deg: 0.0,
            },
            SourceSpec {
                direction_deg: -50.0,
                power: inr,
                kind: SourceKind::Interferer,
                drift_deg: 0.0,
            },
            SourceSpec {
                direction_deg: 30.0,
                power: inr,
                kind: SourceKind::Interferer,
                drift_deg: 0.0,
            },
        ],
        noise_power: 1.0,
        mismatch,
        seed: 0,
    };
    scenario.set_snr_db(DEFAULT_SNR_DB);
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    Snr(Vec<f64>),
    Snapshots(Vec<usize>),
}

impl SweepAxis {
    /// `{−20, −15, …, 30}` dB.
    pub fn default_snr() -> Self {
        SweepAxis::Snr((0..=10).map(|i| -20.0 + 5.0 * i as f64).collect())
    }

    /// `{10, 20, …, 100}` snapshots.
    pub fn default_snapshots() -> Self {
        SweepAxis::Snapshots((1..=10).map(|i| 10 * i).collect())
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::Snr(v) => v.clone(),
            SweepAxis::Snapshots(v) => v.iter().map(|&n| n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    pub axis: SweepAxis,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
    /// Snapshot count on the SNR axis.
    pub snapshots: usize,
    /// SNR on the snapshot axis.
    pub snr_db: f64,
    pub smi_loading: f64,
    pub spectral_points: usize,
    pub pipeline: PipelineConfig,
}

impl ExperimentPlan {
    pub fn new(scenario: Scenario, axis: SweepAxis) -> Self {
        ExperimentPlan {
            scenario,
            axis,
            trials: DEFAULT_TRIALS,
            methods: vec![Method::Optimal, Method::Pseur, Method::IpnCc, Method::Meps, Method::Smi],
            base_seed: 0,
            snapshots: DEFAULT_SNAPSHOTS,
            snr_db: DEFAULT_SNR_DB,
            smi_loading: 0.0,
            spectral_points: DEFAULT_SPECTRAL_POINTS,
            pipeline: PipelineConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        let values = self.axis.values();
        if values.is_empty() {
            return bad("sweep has no values".into());
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sweep values must be finite and strictly increasing".into());
        }
        if let SweepAxis::Snapshots(v) = &self.axis {
            if v[0] < 2 {
                return bad("snapshot counts must be at least 2".into());
            }
        } else if self.snapshots < 2 {
            return bad("snapshot count must be at least 2".into());
        }
        if !(self.smi_loading >= 0.0) {
            return bad("SMI loading must be non-negative".into());
        }
        Ok(())
    }

    /// Scenario and snapshot count at one sweep point.
    pub fn point(&self, index: usize) -> (Scenario, usize) {
        let mut scenario = self.scenario.clone();
        match &self.axis {
            SweepAxis::Snr(v) => {
                scenario.set_snr_db(v[index]);
                (scenario, self.snapshots)
            }
            SweepAxis::Snapshots(v) => {
                scenario.set_snr_db(self.snr_db);
                (scenario, v[index])
            }
        }
    }
}

/// Per-trial seed.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed ^ trial as u64
}

/// Output SINR of each requested method on one realization, plus the
/// optimal SINR it is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub optimal_sinr_db: std::result::Result<f64, String>,
    pub sinr_db: Vec<(Method, std::result::Result<f64, String>)>,
}

fn method_weights(
    method: Method,
    plan: &ExperimentPlan,
    scenario: &Scenario,
    batch: &crate::array::SnapshotBatch,
) -> Result<BeamformerWeights> {
    let spec = &scenario.array;
    let presumed = scenario.presumed_soi_deg();
    let steering = steering_vector(presumed, spec);
    match method {
        Method::Optimal => baseline_optimal(&batch.truth),
        Method::Pseur => {
            run_pseur_pipeline(&batch.data, presumed, scenario.source_count(), spec, &plan.pipeline).map(|o| o.weights)
        }
        Method::IpnCc => baseline_capon_ipn(&batch.data, &steering, presumed, plan.spectral_points, spec),
        Method::Meps => baseline_meps_ipn(&batch.data, &steering, presumed, plan.spectral_points, spec),
        Method::Smi => baseline_smi(&batch.data, &steering, plan.smi_loading),
    }
}

/// Runs every method of `plan` on one seeded realization of `scenario`.
pub fn run_trial(plan: &ExperimentPlan, scenario: &Scenario, snapshots: usize, trial: usize) -> TrialOutcome {
    let scenario = scenario.with_seed(trial_seed(plan.base_seed, trial));
    let batch = match synthesize(&scenario, snapshots) {
        Ok(b) => b,
        Err(e) => {
            let msg = e.to_string();
            return TrialOutcome {
                optimal_sinr_db: Err(msg.clone()),
                sinr_db: plan.methods.iter().map(|&m| (m, Err(msg.clone()))).collect(),
            };
        }
    };
    let score = |m: Method| {
        method_weights(m, plan, &scenario, &batch)
            .map(|w| output_sinr_db(&w.w, &batch.truth))
            .map_err(|e| e.to_string())
    };
    TrialOutcome {
        optimal_sinr_db: score(Method::Optimal),
        sinr_db: plan.methods.iter().map(|&m| (m, score(m))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub method: Method,
    pub mean_sinr_db: f64,
    pub std_db: f64,
    pub mean_dev_db: f64,
    pub trials: usize,
    pub failures: usize,
}

/// Whether trials of a sweep point run on the rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Reduces trial outcomes (in trial order) into one row per method.
pub fn aggregate(sweep_value: f64, methods: &[Method], outcomes: &[TrialOutcome]) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = methods
        .iter()
        .map(|&method| {
            let mut sinrs = Vec::with_capacity(outcomes.len());
            let mut devs = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                let value = o.sinr_db.iter().find(|(m, _)| *m == method).map(|(_, v)| v);
                if let (Some(Ok(s)), Ok(opt)) = (value, &o.optimal_sinr_db) {
                    sinrs.push(*s);
                    devs.push(opt - s);
                }
            }
            let (mean_sinr_db, std_db) = mean_std(&sinrs);
            let (mean_dev_db, _) = mean_std(&devs);
            ResultRow {
                sweep_value,
                method,
                mean_sinr_db,
                std_db,
                mean_dev_db,
                trials: outcomes.len(),
                failures: outcomes.len() - sinrs.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.method.tag().cmp(b.method.tag()));
    rows
}

pub fn run_sweep(plan: &ExperimentPlan) -> Result<Vec<ResultRow>> {
    run_sweep_with(plan, Execution::Parallel)
}

/// Runs the full sweep. Rows are ordered by sweep value, then method tag.
pub fn run_sweep_with(plan: &ExperimentPlan, execution: Execution) -> Result<Vec<ResultRow>> {
    plan.validate()?;
    let mut methods = plan.methods.clone();
    methods.sort();
    methods.dedup();
    let values = plan.axis.values();
    let mut rows = Vec::with_capacity(values.len() * methods.len());
    for (i, &value) in values.iter().enumerate() {
        let (scenario, snapshots) = plan.point(i);
        let outcomes: Vec<TrialOutcome> = match execution {
            Execution::Parallel => (0..plan.trials)
                .into_par_iter()
                .map(|t| run_trial(plan, &scenario, snapshots, t))
                .collect(),
            Execution::Sequential => (0..plan.trials)
                .map(|t| run_trial(plan, &scenario, snapshots, t))
                .collect(),
        };
        let point_rows = aggregate(value, &methods, &outcomes);
        for row in &point_rows {
            if row.failures > 0 {
                log::warn!(
                    "{} failed on {} of {} trials at sweep value {value}",
                    row.method,
                    row.failures,
                    row.trials
                );
            }
        }
        rows.extend(point_rows);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::analytic_covariance;
    use num_complex::Complex64;

    fn small_plan(axis: SweepAxis, trials: usize) -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(example_scenario(1).unwrap(), axis);
        plan.trials = trials;
        plan
    }

    #[test]
    fn examples_are_valid() {
        for e in 1..=4 {
            example_scenario(e).unwrap().validate().unwrap();
        }
        assert!(example_scenario(5).is_err());
        let sc = example_scenario(1).unwrap();
        assert!((sc.soi().power - 10.0).abs() < 1e-12);
        assert!((sc.sources[1].power - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn default_axes() {
        assert_eq!(SweepAxis::default_snr().values().len(), 11);
        assert_eq!(SweepAxis::default_snapshots().values(), (1..=10).map(|i| 10.0 * i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn plan_validation() {
        let mut plan = small_plan(SweepAxis::Snr(vec![0.0, 5.0]), 1);
        plan.validate().unwrap();
        plan.trials = 0;
        assert!(plan.validate().unwrap_err().is_config_error());
        plan.trials = 1;
        plan.axis = SweepAxis::Snr(vec![5.0, 5.0]);
        assert!(plan.validate().is_err());
        plan.axis = SweepAxis::Snapshots(vec![20, 10]);
        assert!(plan.validate().is_err());
        plan.axis = SweepAxis::Snapshots(vec![10]);
        plan.methods.clear();
        assert!(plan.validate().is_err());
    }

    #[test]
    fn pipeline_on_noiseless_single_interferer() {
        let spec = ArraySpec::with_elements(12);
        let a_soi = steering_vector(0.0, &spec);
        let a_int = steering_vector(40.0, &spec);
        let n = 40;
        // deterministic distinct waveforms plus a weak white floor
        let data = CMatrix::from_fn(12, n, |i, t| {
            let s = Complex64::from_polar(1.0, 0.7 * t as f64);
            let j = Complex64::from_polar(30.0, 2.3 * (t * t) as f64);
            let e = Complex64::from_polar(1e-3, 1.1 * (i * 7 + t * 13) as f64 + 0.37 * (i * t) as f64);
            a_soi[i] * s + a_int[i] * j + e
        });
        let out = run_pseur_pipeline(&data, 0.0, 2, &spec, &PipelineConfig::default()).unwrap();
        let resp_soi = out.weights.response(&steering_vector(out.look_direction_deg, &spec));
        assert!((resp_soi - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((out.interferer_estimates_deg[0] - 40.0).abs() <= 0.9);
        assert!(out.weights.response(&a_int).norm() < 1e-2);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let sc = example_scenario(1).unwrap().with_seed(9);
        let batch = synthesize(&sc, 30).unwrap();
        let cfg = PipelineConfig::default();
        let a = run_pseur_pipeline(&batch.data, 10.0, 3, &sc.array, &cfg).unwrap();
        let b = run_pseur_pipeline(&batch.data, 10.0, 3, &sc.array, &cfg).unwrap();
        assert_eq!(a.weights.w, b.weights.w);
    }

    #[test]
    fn pipeline_on_analytic_square_root() {
        // snapshots whose sample covariance equals the analytic covariance
        let sc = example_scenario(1).unwrap();
        let r = analytic_covariance(&sc, &steering_vector(10.0, &sc.array));
        let eig = hermitian_eig(&r).unwrap();
        let m = sc.array.elements;
        let mut root = eig.vectors.clone();
        for (j, &v) in eig.values.iter().enumerate() {
            root.column_mut(j).scale_mut(v.sqrt() * (m as f64).sqrt());
        }
        let out = run_pseur_pipeline(&root, 10.0, 3, &sc.array, &PipelineConfig::default()).unwrap();
        assert_eq!(out.interferer_estimates_deg.len(), 2);
        assert!((out.interferer_estimates_deg[0] + 50.0).abs() <= 0.9);
        assert!((out.interferer_estimates_deg[1] - 30.0).abs() <= 0.9);
        assert!((out.noise_power - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_trial_optimal_has_zero_deviation() {
        let mut plan = small_plan(SweepAxis::Snr(vec![-10.0, 0.0, 10.0]), 1);
        plan.methods = vec![Method::Optimal];
        let rows = run_sweep(&plan).unwrap();
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.mean_dev_db, 0.0);
            assert_eq!(r.failures, 0);
            assert_eq!(r.std_db, 0.0);
        }
    }

    #[test]
    fn smi_failures_are_counted() {
        let mut plan = small_plan(SweepAxis::Snapshots(vec![10, 40]), 3);
        plan.methods = vec![Method::Smi, Method::Optimal];
        let rows = run_sweep(&plan).unwrap();
        let smi: Vec<_> = rows.iter().filter(|r| r.method == Method::Smi).collect();
        assert_eq!(smi[0].failures, 3);
        assert!(smi[0].mean_sinr_db.is_nan());
        assert_eq!(smi[1].failures, 0);
        assert_eq!(rows[0].method, Method::Optimal);
    }

    #[test]
    fn parallel_matches_sequential() {
        let plan = small_plan(SweepAxis::Snr(vec![0.0, 10.0]), 6);
        let a = run_sweep_with(&plan, Execution::Parallel).unwrap();
        let b = run_sweep_with(&plan, Execution::Sequential).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn aggregation_statistics() {
        let outcomes: Vec<TrialOutcome> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&s| TrialOutcome {
                optimal_sinr_db: Ok(5.0),
                sinr_db: vec![(Method::Smi, Ok(s)), (Method::Pseur, Err("x".into()))],
            })
            .collect();
        let rows = aggregate(0.0, &[Method::Smi, Method::Pseur], &outcomes);
        assert_eq!(rows[0].method, Method::Pseur);
        assert_eq!(rows[0].failures, 3);
        let smi = &rows[1];
        assert!((smi.mean_sinr_db - 2.0).abs() < 1e-15);
        assert!((smi.std_db - 1.0).abs() < 1e-15);
        assert!((smi.mean_dev_db - 3.0).abs() < 1e-15);
    }
}
