//! Uniform linear array model: steering vectors, signature mismatch models
//! and synthetic snapshot generation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, CMatrix, CVector};

/// Half-width of the sector around the presumed look direction that is
/// reserved for the signal of interest.
pub const DESIRED_SECTOR_HALF_WIDTH_DEG: f64 = 6.0;

/// Geometry of a uniform linear array and the angle grid used to scan it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub elements: usize,
    pub spacing_wavelengths: f64,
    pub grid_step_deg: f64,
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec {
            elements: 20,
            spacing_wavelengths: 0.5,
            grid_step_deg: 0.9,
        }
    }
}

impl ArraySpec {
    pub fn with_elements(elements: usize) -> Self {
        ArraySpec {
            elements,
            ..ArraySpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements < 2 {
            return Err(Error::InvalidScenario(format!(
                "array needs at least 2 elements, got {}",
                self.elements
            )));
        }
        if !(self.spacing_wavelengths > 0.0) || !self.spacing_wavelengths.is_finite() {
            return Err(Error::InvalidScenario("element spacing must be positive".into()));
        }
        if !(self.grid_step_deg > 0.0) || self.grid_step_deg > 180.0 {
            return Err(Error::InvalidScenario("grid step must lie in (0, 180] degrees".into()));
        }
        Ok(())
    }

    /// Scan grid over [−90°, 90°] at `grid_step_deg`, starting at −90°.
    pub fn grid(&self) -> Vec<f64> {
        let count = (180.0 / self.grid_step_deg + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| -90.0 + i as f64 * self.grid_step_deg)
            .collect()
    }

    /// Electrical phase step between adjacent elements for direction `theta_deg`.
    pub fn phase_step(&self, theta_deg: f64) -> f64 {
        2.0 * PI * self.spacing_wavelengths * theta_deg.to_radians().sin()
    }
}

/// Array response `a(θ)`, element `m` (zero based) equal to `exp(−j m 2π (d/λ) sin θ)`.
pub fn steering_vector(theta_deg: f64, spec: &ArraySpec) -> CVector {
    let u = spec.phase_step(theta_deg);
    CVector::from_fn(spec.elements, |m, _| Complex64::from_polar(1.0, -(m as f64) * u))
}

/// Steering vectors for a list of directions, one per column.
pub fn steering_matrix(thetas_deg: &[f64], spec: &ArraySpec) -> CMatrix {
    let mut out = CMatrix::zeros(spec.elements, thetas_deg.len());
    for (c, &t) in thetas_deg.iter().enumerate() {
        out.set_column(c, &steering_vector(t, spec));
    }
    out
}

/// Signature under per-element gain errors `gains` and phase errors `phases`.
///
/// Element `m` is `(1 + α_m) exp(−j(m 2π (d/λ) sin θ + β_m))`: the gain/phase
/// model written with the opposite phase sign, conjugated so that it shares
/// the convention of [`steering_vector`].
pub fn perturbed_signature(theta_deg: f64, gains: &[f64], phases: &[f64], spec: &ArraySpec) -> CVector {
    assert_eq!(gains.len(), spec.elements);
    assert_eq!(phases.len(), spec.elements);
    let u = spec.phase_step(theta_deg);
    CVector::from_fn(spec.elements, |m, _| {
        Complex64::from_polar(1.0 + gains[m], -((m as f64) * u + phases[m]))
    })
}

/// One coherently scattered path: direction and path phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPath {
    pub direction_deg: f64,
    pub phase_rad: f64,
}

/// Draws `count` scatter paths with directions `N(center, spread²)` and
/// phases uniform on `[0, 2π)`.
pub fn draw_scatter_paths<R: Rng>(center_deg: f64, count: usize, spread_deg: f64, rng: &mut R) -> Vec<ScatterPath> {
    (0..count)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            let phase_rad = rng.random_range(0.0..2.0 * PI);
            ScatterPath {
                direction_deg: center_deg + spread_deg * g,
                phase_rad,
            }
        })
        .collect()
}

/// Direct path plus coherently scattered copies: `a(θ̂) + Σ e^{jφ_i} a(θ_i)`.
pub fn scattered_signature(center_deg: f64, paths: &[ScatterPath], spec: &ArraySpec) -> CVector {
    let mut out = steering_vector(center_deg, spec);
    for p in paths {
        out += steering_vector(p.direction_deg, spec) * Complex64::from_polar(1.0, p.phase_rad);
    }
    out
}

/// Per-snapshot directions of a source drifting linearly through `total_deg`
/// over `n` snapshots: `θ(t) = center + (Δθ/N)(t − N/2)` at `t = 1..N`.
pub fn drift_directions(center_deg: f64, total_deg: f64, n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|t| center_deg + total_deg / nf * (t as f64 - nf / 2.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Soi,
    Interferer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub direction_deg: f64,
    /// Linear power σ².
    pub power: f64,
    pub kind: SourceKind,
    /// Total angular sweep over the observation interval (interferers only).
    #[serde(default)]
    pub drift_deg: f64,
}

/// Steering-vector mismatch model applied once per run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mismatch {
    #[default]
    None,
    /// Every source direction is offset by an independent draw from
    /// `U[−bound, bound]`.
    LookDirection { bound_deg: f64 },
    /// Per-element gain `N(0, gain_std²)` and phase `N(0, phase_std_rad²)`
    /// errors on the signal-of-interest signature.
    GainPhase { gain_std: f64, phase_std_rad: f64 },
    /// Signal of interest arrives with `paths` extra coherent copies spread
    /// `N(θ̂₁, spread_deg²)`.
    CoherentScattering { paths: usize, spread_deg: f64 },
}

/// Full description of a synthetic experiment. The first source is the
/// signal of interest; its `direction_deg` is also the presumed look
/// direction handed to the beamformers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub array: ArraySpec,
    pub sources: Vec<SourceSpec>,
    pub noise_power: f64,
    #[serde(default)]
    pub mismatch: Mismatch,
    pub seed: u64,
}

impl Scenario {
    pub fn soi(&self) -> &SourceSpec {
        &self.sources[0]
    }

    pub fn presumed_soi_deg(&self) -> f64 {
        self.sources[0].direction_deg
    }

    pub fn interferers(&self) -> impl Iterator<Item = &SourceSpec> {
        self.sources.iter().skip(1)
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// Sets the SOI power to `noise_power · 10^(snr_db/10)`.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.sources[0].power = self.noise_power * 10f64.powf(snr_db / 10.0);
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        Scenario {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.sources.is_empty() {
            return bad("at least one source is required".into());
        }
        if self.sources[0].kind != SourceKind::Soi {
            return bad("the first source must be the signal of interest".into());
        }
        if self.sources.iter().filter(|s| s.kind == SourceKind::Soi).count() != 1 {
            return bad("exactly one signal of interest is required".into());
        }
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            return bad("noise power must be non-negative".into());
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !(s.direction_deg > -90.0 && s.direction_deg < 90.0) {
                return bad(format!("source {i}: direction must lie in (-90, 90) degrees"));
            }
            if !(s.power > 0.0) || !s.power.is_finite() {
                return bad(format!("source {i}: power must be positive"));
            }
            if !s.drift_deg.is_finite() || (s.kind == SourceKind::Soi && s.drift_deg != 0.0) {
                return bad(format!("source {i}: only interferers may drift"));
            }
            for (j, t) in self.sources.iter().enumerate().skip(i + 1) {
                if s.direction_deg == t.direction_deg {
                    return bad(format!("sources {i} and {j} share a direction"));
                }
            }
        }
        let soi = self.presumed_soi_deg();
        for (i, s) in self.sources.iter().enumerate().skip(1) {
            if (s.direction_deg - soi).abs() <= DESIRED_SECTOR_HALF_WIDTH_DEG {
                return bad(format!(
                    "interferer {i} lies within {DESIRED_SECTOR_HALF_WIDTH_DEG} deg of the signal of interest"
                ));
            }
        }
        match self.mismatch {
            Mismatch::None => {}
            Mismatch::LookDirection { bound_deg } => {
                if !(bound_deg >= 0.0) {
                    return bad("look-direction bound must be non-negative".into());
                }
            }
            Mismatch::GainPhase {
                gain_std,
                phase_std_rad,
            } => {
                if !(gain_std >= 0.0) || !(phase_std_rad >= 0.0) {
                    return bad("gain/phase deviations must be non-negative".into());
                }
            }
            Mismatch::CoherentScattering { spread_deg, .. } => {
                if !(spread_deg >= 0.0) {
                    return bad("scattering spread must be non-negative".into());
                }
            }
        }
        Ok(())
    }
}

/// Ground truth attached to a synthetic batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTruth {
    /// `directions[n][k]`: direction of source `k` at snapshot `n`.
    pub directions: Vec<Vec<f64>>,
    pub soi_signature: CVector,
    pub soi_power: f64,
    pub noise_power: f64,
    /// Interference-plus-noise covariance, averaged over the snapshots when
    /// interferers drift.
    pub ipn_covariance: CMatrix,
    /// Interferer centre directions after any per-run look offset.
    pub interferer_centers_deg: Vec<f64>,
}

/// `N` snapshots stored as the columns of an `M x N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    pub data: CMatrix,
    pub truth: SnapshotTruth,
}

impl SnapshotBatch {
    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Circular complex Gaussian with the given power.
fn complex_gaussian<R: Rng>(power: f64, rng: &mut R) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Analytic received covariance `Σ σ_k² a_k a_k^H + σ_n² I` for static sources
/// with the SOI carried by `soi_signature`.
pub fn analytic_covariance(scenario: &Scenario, soi_signature: &CVector) -> CMatrix {
    let m = scenario.array.elements;
    let mut r = ipn_covariance_static(scenario, &interferer_dirs(scenario), m);
    r.ger(
        Complex64::new(scenario.soi().power, 0.0),
        soi_signature,
        &soi_signature.conjugate(),
        Complex64::new(1.0, 0.0),
    );
    hermitize(&mut r);
    r
}

fn interferer_dirs(scenario: &Scenario) -> Vec<f64> {
    scenario.interferers().map(|s| s.direction_deg).collect()
}

fn ipn_covariance_static(scenario: &Scenario, centers: &[f64], m: usize) -> CMatrix {
    let mut r = CMatrix::identity(m, m) * Complex64::new(scenario.noise_power, 0.0);
    for (src, &dir) in scenario.interferers().zip(centers) {
        let a = steering_vector(dir, &scenario.array);
        r.ger(Complex64::new(src.power, 0.0), &a, &a.conjugate(), Complex64::new(1.0, 0.0));
    }
    hermitize(&mut r);
    r
}

/// Generates `n` snapshots of `scenario`, deterministic in `scenario.seed`.
///
/// Draw order: mismatch realization, then per snapshot the source waveforms
/// in source order followed by the noise vector.
pub fn synthesize(scenario: &Scenario, n: usize) -> Result<SnapshotBatch> {
    scenario.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("snapshot count must be at least 1".into()));
    }
    let spec = &scenario.array;
    let m = spec.elements;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut centers: Vec<f64> = scenario.sources.iter().map(|s| s.direction_deg).collect();
    let soi_signature = match scenario.mismatch {
        Mismatch::None => steering_vector(centers[0], spec),
        Mismatch::LookDirection { bound_deg } => {
            for c in centers.iter_mut() {
                if bound_deg > 0.0 {
                    *c += rng.random_range(-bound_deg..=bound_deg);
                }
            }
            steering_vector(centers[0], spec)
        }
        Mismatch::GainPhase {
            gain_std,
            phase_std_rad,
        } => {
            let gains: Vec<f64> = (0..m)
                .map(|_| gain_std * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let phases: Vec<f64> = (0..m)
                .map(|_| phase_std_rad * rng.sample::<f64, _>(StandardNormal))
                .collect();
            perturbed_signature(centers[0], &gains, &phases, spec)
        }
        Mismatch::CoherentScattering { paths, spread_deg } => {
            let drawn = draw_scatter_paths(centers[0], paths, spread_deg, &mut rng);
            scattered_signature(centers[0], &drawn, spec)
        }
    };

    let interferer_centers: Vec<f64> = centers[1..].to_vec();
    let tracks: Vec<Vec<f64>> = scenario
        .interferers()
        .zip(&interferer_centers)
        .map(|(s, &c)| drift_directions(c, s.drift_deg, n))
        .collect();
    let drifting = scenario.interferers().any(|s| s.drift_deg != 0.0);

    let mut data = CMatrix::zeros(m, n);
    let mut directions = Vec::with_capacity(n);
    let mut ipn_acc = CMatrix::zeros(m, m);
    for t in 0..n {
        let mut x = CVector::zeros(m);
        let s1 = complex_gaussian(scenario.soi().power, &mut rng);
        x.axpy(s1, &soi_signature, Complex64::new(1.0, 0.0));
        let mut dirs = Vec::with_capacity(scenario.source_count());
        dirs.push(centers[0]);
        for (src, track) in scenario.interferers().zip(&tracks) {
            let dir = track[t];
            dirs.push(dir);
            let a = steering_vector(dir, spec);
            let s = complex_gaussian(src.power, &mut rng);
            x.axpy(s, &a, Complex64::new(1.0, 0.0));
            if drifting {
                ipn_acc.ger(Complex64::new(src.power, 0.0), &a, &a.conjugate(), Complex64::new(1.0, 0.0));
            }
        }
        if scenario.noise_power > 0.0 {
            for e in x.iter_mut() {
                *e += complex_gaussian(scenario.noise_power, &mut rng);
            }
        }
        data.set_column(t, &x);
        directions.push(dirs);
    }

    let ipn_covariance = if drifting {
        let mut r = ipn_acc / Complex64::new(n as f64, 0.0);
        for i in 0..m {
            r[(i, i)] += scenario.noise_power;
        }
        hermitize(&mut r);
        r
    } else {
        ipn_covariance_static(scenario, &interferer_centers, m)
    };

    Ok(SnapshotBatch {
        data,
        truth: SnapshotTruth {
            directions,
            soi_signature,
            soi_power: scenario.soi().power,
            noise_power: scenario.noise_power,
            ipn_covariance,
            interferer_centers_deg: interferer_centers,
        },
    })
}
