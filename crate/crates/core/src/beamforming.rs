//! Beamformer weights, output SINR, beampatterns and the reference
//! beamformers the reconstruction is compared against.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArraySpec, SnapshotTruth, DESIRED_SECTOR_HALF_WIDTH_DEG};
use crate::error::{Error, Result};
use crate::estimation::{sample_covariance, AngularSector};
use crate::linalg::{hermitian_inverse, hermitize, CMatrix, CVector, EigenSystem};
use crate::reconstruction::sector_sampling;

/// Default number of samples for the full-sector spectral baselines.
pub const DEFAULT_SPECTRAL_POINTS: usize = 188;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Known interference-plus-noise covariance and true SOI signature.
    Optimal,
    /// Two-level spectrum reconstruction over estimated uncertainty sectors.
    Pseur,
    /// Capon-spectrum reconstruction over the full interference region.
    IpnCc,
    /// Maximum-entropy-spectrum reconstruction over the full interference region.
    Meps,
    /// Sample matrix inversion on the raw (signal-contaminated) covariance.
    Smi,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Optimal, Method::Pseur, Method::IpnCc, Method::Meps, Method::Smi];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Pseur => "pseur",
            Method::IpnCc => "ipn-cc",
            Method::Meps => "meps",
            Method::Smi => "smi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub w: CVector,
    pub method: Method,
    /// Steering vector the distortionless constraint was imposed on.
    pub steering: CVector,
}

impl BeamformerWeights {
    /// `w^H a`.
    pub fn response(&self, a: &CVector) -> Complex64 {
        self.w.dotc(a)
    }
}

/// `w = R⁻¹ a / (a^H R⁻¹ a)`.
pub fn mvdr_weights(r_inv: &CMatrix, steering: &CVector, method: Method) -> Result<BeamformerWeights> {
    let ra = r_inv * steering;
    let denom = steering.dotc(&ra);
    if !(denom.re > 0.0) || !denom.re.is_finite() || !denom.im.is_finite() {
        return Err(Error::Singular(format!(
            "a^H R^-1 a = {denom} is not positive; inverse covariance is not positive definite"
        )));
    }
    Ok(BeamformerWeights {
        w: ra / Complex64::new(denom.re, 0.0),
        method,
        steering: steering.clone(),
    })
}

/// `10 log10(σ₁² |w^H ã₁|² / w^H R_{i+n} w)` in dB.
pub fn output_sinr_db(w: &CVector, truth: &SnapshotTruth) -> f64 {
    let signal = truth.soi_power * w.dotc(&truth.soi_signature).norm_sqr();
    let ipn = w.dotc(&(&truth.ipn_covariance * w)).re;
    10.0 * (signal / ipn).log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beampattern {
    pub angles_deg: Vec<f64>,
    /// `|w^H a(θ)|`.
    pub magnitude: Vec<f64>,
    /// Magnitude in dB relative to the response on the constrained steering vector.
    pub gain_db: Vec<f64>,
}

pub fn beampattern(weights: &BeamformerWeights, grid_deg: &[f64], spec: &ArraySpec) -> Beampattern {
    let reference = weights.response(&weights.steering).norm();
    let magnitude: Vec<f64> = grid_deg
        .iter()
        .map(|&t| weights.response(&steering_vector(t, spec)).norm())
        .collect();
    let gain_db = magnitude.iter().map(|&g| 20.0 * (g / reference).log10()).collect();
    Beampattern {
        angles_deg: grid_deg.to_vec(),
        magnitude,
        gain_db,
    }
}

/// Closed-form beampattern magnitude inside a notch.
///
/// With `b = E^H â₁` and `h(θ)` the least-squares coefficients of `a(θ)` on
/// the orthonormal columns of `E`, returns
/// `2πγ_L/‖â₁‖² · |Σ_r h_r* b_r / (2πγ_L + ξ_r(γ_H − γ_L))|`.
pub fn notch_prediction(
    partial_eig: &EigenSystem,
    gamma_low: f64,
    gamma_high: f64,
    steering: &CVector,
    theta_deg: f64,
    sectors: &[AngularSector],
    spec: &ArraySpec,
) -> Result<f64> {
    if !sectors.iter().any(|s| s.contains(theta_deg)) {
        return Err(Error::OutsideSector { angle_deg: theta_deg });
    }
    let floor = 2.0 * std::f64::consts::PI * gamma_low;
    let span = gamma_high - gamma_low;
    let e = &partial_eig.vectors;
    let b = e.adjoint() * steering;
    let h = e.adjoint() * steering_vector(theta_deg, spec);
    let sum: Complex64 = partial_eig
        .values
        .iter()
        .enumerate()
        .map(|(r, &xi)| h[r].conj() * b[r] / (floor + xi * span))
        .sum();
    Ok(floor / steering.norm_squared() * sum.norm())
}

/// MVDR weights with the true covariance and true SOI signature.
pub fn baseline_optimal(truth: &SnapshotTruth) -> Result<BeamformerWeights> {
    let inv = hermitian_inverse(&truth.ipn_covariance)?;
    mvdr_weights(&inv, &truth.soi_signature, Method::Optimal)
}

/// Sample-matrix-inversion beamformer on `R̂_xx + εI`.
pub fn baseline_smi(snapshots: &CMatrix, steering: &CVector, loading: f64) -> Result<BeamformerWeights> {
    let mut r = sample_covariance(snapshots)?;
    for i in 0..r.nrows() {
        r[(i, i)] += loading;
    }
    let inv = hermitian_inverse(&r).map_err(|_| {
        Error::Singular(format!(
            "sample covariance with loading {loading} is singular ({} snapshots, {} elements); set a positive loading",
            snapshots.ncols(),
            snapshots.nrows()
        ))
    })?;
    mvdr_weights(&inv, steering, Method::Smi)
}

/// The interference region `[−90°, θ₁ − w) ∪ (θ₁ + w, 90°]`, as sectors.
pub fn interference_region(presumed_soi_deg: f64, half_width_deg: f64) -> Vec<AngularSector> {
    let mut out = Vec::with_capacity(2);
    let left_hi = presumed_soi_deg - half_width_deg;
    if left_hi > -90.0 {
        out.push(AngularSector::new(0.5 * (-90.0 + left_hi), 0.5 * (left_hi + 90.0)));
    }
    let right_lo = presumed_soi_deg + half_width_deg;
    if right_lo < 90.0 {
        out.push(AngularSector::new(0.5 * (right_lo + 90.0), 0.5 * (90.0 - right_lo)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialSpectrum {
    /// `1 / (a^H R⁻¹ a)`.
    Capon,
    /// `(u₁^T R⁻¹ u₁) / |a^H R⁻¹ u₁|²`.
    MaxEntropy,
}

fn invert_loaded(r: &CMatrix) -> Result<CMatrix> {
    match hermitian_inverse(r) {
        Ok(inv) => Ok(inv),
        Err(_) => {
            let m = r.nrows();
            let trace: f64 = (0..m).map(|i| r[(i, i)].re).sum();
            let mut loaded = r.clone();
            for i in 0..m {
                loaded[(i, i)] += 1e-8 * trace / m as f64;
            }
            hermitian_inverse(&loaded)
        }
    }
}

/// Spatial spectrum of `r_inv` at `theta_deg`.
pub fn spatial_spectrum(kind: SpatialSpectrum, r_inv: &CMatrix, theta_deg: f64, spec: &ArraySpec) -> f64 {
    let a = steering_vector(theta_deg, spec);
    match kind {
        SpatialSpectrum::Capon => 1.0 / a.dotc(&(r_inv * &a)).re,
        SpatialSpectrum::MaxEntropy => {
            // R⁻¹ u₁ is the first column of R⁻¹
            let col = r_inv.column(0);
            let cross = a.dotc(&col).norm_sqr();
            r_inv[(0, 0)].re / cross
        }
    }
}

/// Interference-plus-noise covariance integrated from a spatial spectrum over
/// the full interference region, sampled at `points` angles.
pub fn spectral_ipn_covariance(
    snapshots: &CMatrix,
    presumed_soi_deg: f64,
    points: usize,
    kind: SpatialSpectrum,
    spec: &ArraySpec,
) -> Result<CMatrix> {
    let r = sample_covariance(snapshots)?;
    let r_inv = invert_loaded(&r)?;
    let region = interference_region(presumed_soi_deg, DESIRED_SECTOR_HALF_WIDTH_DEG);
    let ones = vec![1.0; region.len()];
    let samples = sector_sampling(&region, &ones, points, spec.grid_step_deg)?;
    let m = spec.elements;
    let mut acc = CMatrix::zeros(m, m);
    for &theta in &samples.angles_deg {
        let rho = spatial_spectrum(kind, &r_inv, theta, spec);
        let a = steering_vector(theta, spec);
        acc.ger(
            Complex64::new(rho * samples.delta_rad, 0.0),
            &a,
            &a.conjugate(),
            Complex64::new(1.0, 0.0),
        );
    }
    hermitize(&mut acc);
    Ok(acc)
}

fn spectral_baseline(
    snapshots: &CMatrix,
    steering: &CVector,
    presumed_soi_deg: f64,
    points: usize,
    kind: SpatialSpectrum,
    method: Method,
    spec: &ArraySpec,
) -> Result<BeamformerWeights> {
    let r_in = spectral_ipn_covariance(snapshots, presumed_soi_deg, points, kind, spec)?;
    let inv = invert_loaded(&r_in)?;
    mvdr_weights(&inv, steering, method)
}

/// Capon-spectrum reconstruction baseline.
pub fn baseline_capon_ipn(
    snapshots: &CMatrix,
    steering: &CVector,
    presumed_soi_deg: f64,
    points: usize,
    spec: &ArraySpec,
) -> Result<BeamformerWeights> {
    spectral_baseline(snapshots, steering, presumed_soi_deg, points, SpatialSpectrum::Capon, Method::IpnCc, spec)
}

/// Maximum-entropy-spectrum reconstruction baseline.
pub fn baseline_meps_ipn(
    snapshots: &CMatrix,
    steering: &CVector,
    presumed_soi_deg: f64,
    points: usize,
    spec: &ArraySpec,
) -> Result<BeamformerWeights> {
    spectral_baseline(
        snapshots,
        steering,
        presumed_soi_deg,
        points,
        SpatialSpectrum::MaxEntropy,
        Method::Meps,
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{synthesize, Mismatch, Scenario, SourceKind, SourceSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white_truth(m: usize, soi_deg: f64, snr: f64) -> SnapshotTruth {
        let spec = ArraySpec::with_elements(m);
        SnapshotTruth {
            directions: vec![],
            soi_signature: steering_vector(soi_deg, &spec),
            soi_power: snr,
            noise_power: 1.0,
            ipn_covariance: CMatrix::identity(m, m),
            interferer_centers_deg: vec![],
        }
    }

    fn random_pd(m: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let b = CMatrix::from_fn(m, m + 3, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut r = &b * b.adjoint() + CMatrix::identity(m, m) * Complex64::new(0.1, 0.0);
        hermitize(&mut r);
        r
    }

    fn scenario(snr_db: f64) -> Scenario {
        let mut sc = Scenario {
            array: ArraySpec::default(),
            sources: vec![
                SourceSpec { direction_deg: 10.0, power: 1.0, kind: SourceKind::Soi, drift_deg: 0.0 },
                SourceSpec { direction_deg: -50.0, power: 1000.0, kind: SourceKind::Interferer, drift_deg: 0.0 },
                SourceSpec { direction_deg: 30.0, power: 1000.0, kind: SourceKind::Interferer, drift_deg: 0.0 },
            ],
            noise_power: 1.0,
            mismatch: Mismatch::None,
            seed: 5,
        };
        sc.set_snr_db(snr_db);
        sc
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn mvdr_identity_is_matched_filter() {
        let spec = ArraySpec::with_elements(8);
        let a = steering_vector(20.0, &spec);
        let w = mvdr_weights(&CMatrix::identity(8, 8), &a, Method::Pseur).unwrap();
        assert!((&w.w - &a / Complex64::new(8.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mvdr_constraint_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = ArraySpec::with_elements(10);
        let a = steering_vector(-33.0, &spec);
        let inv = hermitian_inverse(&random_pd(10, &mut rng)).unwrap();
        let w = mvdr_weights(&inv, &a, Method::Pseur).unwrap();
        assert!((w.response(&a) - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
        let w2 = mvdr_weights(&(&inv * Complex64::new(37.0, 0.0)), &a, Method::Pseur).unwrap();
        assert!((&w.w - &w2.w).norm() <= 1e-12 * w.w.norm());
        let phase = Complex64::from_polar(1.0, 0.8);
        let w3 = mvdr_weights(&inv, &(&a * phase), Method::Pseur).unwrap();
        assert!((&w3.w - &w.w * phase).norm() <= 1e-12 * w.w.norm());
    }

    #[test]
    fn mvdr_rejects_indefinite() {
        let a = steering_vector(0.0, &ArraySpec::with_elements(3));
        let neg = CMatrix::identity(3, 3) * Complex64::new(-1.0, 0.0);
        assert!(matches!(mvdr_weights(&neg, &a, Method::Smi), Err(Error::Singular(_))));
    }

    #[test]
    fn sinr_matched_filter_white_noise() {
        let truth = white_truth(20, 10.0, 10.0);
        let w = &truth.soi_signature / Complex64::new(20.0, 0.0);
        let sinr = output_sinr_db(&w, &truth);
        assert!((sinr - (10.0 + 10.0 * 20f64.log10())).abs() < 1e-10);
        assert!((sinr - 23.0103).abs() < 1e-3);
    }

    #[test]
    fn optimal_sinr_is_rayleigh_maximum() {
        let batch = synthesize(&scenario(0.0), 10).unwrap();
        let truth = &batch.truth;
        let opt = baseline_optimal(truth).unwrap();
        let inv = hermitian_inverse(&truth.ipn_covariance).unwrap();
        let bound = truth.soi_power * truth.soi_signature.dotc(&(&inv * &truth.soi_signature)).re;
        assert!((output_sinr_db(&opt.w, truth) - 10.0 * bound.log10()).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let w = CVector::from_fn(20, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            assert!(output_sinr_db(&w, truth) <= output_sinr_db(&opt.w, truth) + 1e-9);
        }
        let white = white_truth(6, 0.0, 1.0);
        let w = baseline_optimal(&white).unwrap();
        assert!((&w.w - &white.soi_signature / Complex64::new(6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pattern_of_conventional_beam() {
        let spec = ArraySpec::default();
        let a = steering_vector(25.0, &spec);
        let w = mvdr_weights(&CMatrix::identity(20, 20), &a, Method::Pseur).unwrap();
        let grid: Vec<f64> = (0..=360).map(|i| -90.0 + 0.5 * i as f64).collect();
        let p = beampattern(&w, &grid, &spec);
        let (imax, _) = p
            .magnitude
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        assert_eq!(p.angles_deg[imax], 25.0);
        assert!((p.magnitude[imax] - 1.0).abs() < 1e-12);
        assert!(p.gain_db[imax].abs() < 1e-8);
        // depends on θ only through sin θ
        let mirror = beampattern(&w, &[180.0 - 25.0], &spec);
        assert!((mirror.magnitude[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn notch_prediction_limits() {
        let spec = ArraySpec::with_elements(8);
        let a1 = steering_vector(0.0, &spec);
        let full = EigenSystem {
            values: vec![1.0; 8],
            vectors: CMatrix::identity(8, 8),
        };
        let sectors = [AngularSector::new(40.0, 2.0)];
        let low = 1.0;
        let near = notch_prediction(&full, low, low * (1.0 + 1e-12), &a1, 41.0, &sectors, &spec).unwrap();
        let expect = a1.dotc(&steering_vector(41.0, &spec)).norm() / a1.norm_squared();
        assert!((near - expect).abs() <= 1e-9);
        let mut last = near;
        for high in [10.0, 100.0, 1000.0] {
            let d = notch_prediction(&full, low, high, &a1, 41.0, &sectors, &spec).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(matches!(
            notch_prediction(&full, low, 10.0, &a1, 10.0, &sectors, &spec),
            Err(Error::OutsideSector { .. })
        ));
    }

    #[test]
    fn smi_limits() {
        let spec = ArraySpec::with_elements(6);
        let a = steering_vector(5.0, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = CMatrix::from_fn(6, 4, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        assert!(matches!(baseline_smi(&x, &a, 0.0), Err(Error::Singular(_))));
        let heavy = baseline_smi(&x, &a, 1e12).unwrap();
        assert!((&heavy.w - &a / Complex64::new(6.0, 0.0)).norm() <= 1e-9);

        let mut sc = scenario(0.0);
        sc.sources.truncate(1);
        sc.sources[0].power = 1e-9;
        let batch = synthesize(&sc, 20_000).unwrap();
        let a = steering_vector(10.0, &sc.array);
        let w = baseline_smi(&batch.data, &a, 0.0).unwrap();
        assert!((&w.w - &a / Complex64::new(20.0, 0.0)).norm() <= 0.05 * a.norm() / 20.0);
    }

    #[test]
    fn region_splits_around_presumed() {
        let region = interference_region(10.0, 6.0);
        assert_eq!(region.len(), 2);
        assert!((region[0].lower() + 90.0).abs() < 1e-12 && (region[0].upper() - 4.0).abs() < 1e-12);
        assert!((region[1].lower() - 16.0).abs() < 1e-12 && (region[1].upper() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn spectra_flat_on_white_noise() {
        let spec = ArraySpec::default();
        let inv = CMatrix::identity(20, 20) / Complex64::new(2.0, 0.0);
        for theta in [-70.0, -20.0, 0.0, 45.0] {
            let capon = spatial_spectrum(SpatialSpectrum::Capon, &inv, theta, &spec);
            assert!((capon - 2.0 / 20.0).abs() < 1e-12);
            let meps = spatial_spectrum(SpatialSpectrum::MaxEntropy, &inv, theta, &spec);
            assert!((meps - 2.0).abs() < 1e-12);
        }
        // u₁ is the first standard basis vector
        let r = random_pd(5, &mut ChaCha8Rng::seed_from_u64(3));
        let rinv = hermitian_inverse(&r).unwrap();
        let mut u1 = CVector::zeros(5);
        u1[0] = Complex64::new(1.0, 0.0);
        assert!((rinv.column(0) - &rinv * &u1).norm() < 1e-15);
    }

    #[test]
    fn spectral_baselines_satisfy_constraint() {
        let batch = synthesize(&scenario(10.0), 30).unwrap();
        let spec = ArraySpec::default();
        let a = steering_vector(10.0, &spec);
        for w in [
            baseline_capon_ipn(&batch.data, &a, 10.0, 188, &spec).unwrap(),
            baseline_meps_ipn(&batch.data, &a, 10.0, 188, &spec).unwrap(),
            baseline_smi(&batch.data, &a, 0.0).unwrap(),
        ] {
            assert!((w.response(&a) - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
        }
        let few = synthesize(&scenario(10.0), 8).unwrap();
        assert!(baseline_capon_ipn(&few.data, &a, 10.0, 188, &spec).is_ok());
    }
}
