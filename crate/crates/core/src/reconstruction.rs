//! Interference-plus-noise covariance reconstruction from a two-level
//! angular power spectrum.
//!
//! The spectrum sits at `γ_L` everywhere and at `γ_H` inside the estimated
//! interferer sectors. Integrating it against `a(θ)a(θ)^H` gives
//! `2πγ_L I + (γ_H − γ_L) R_r`, where `R_r` is a short Riemann sum over the
//! sectors only; its low-rank eigensystem makes the inverse cheap.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArraySpec};
use crate::error::{Error, Result};
use crate::estimation::AngularSector;
use crate::linalg::{
    hermitian_eig, hermitian_inverse, hermitize, two_level_matrix, woodbury_inverse, CMatrix, CVector, EigenSystem,
};

/// Default number of sector samples.
pub const DEFAULT_Q_IN: usize = 14;

/// Minimum number of samples any sector receives.
pub const MIN_SAMPLES_PER_SECTOR: usize = 3;

/// Largest array for which the Woodbury inverse is cross-checked against a
/// dense inverse.
pub const DENSE_CHECK_MAX_DIM: usize = 64;

/// Output of [`interference_power`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// Clamped estimate, never negative.
    pub power: f64,
    /// Unclamped `(r̂ − σ̂_n² M) / M²`.
    pub raw: f64,
    pub clamped: bool,
}

/// Power of the source with steering vector `steering`, from the beamformed
/// sequence `z(t) = a^H x(t)`: `(mean |z|² − σ̂_n² M) / M²`, clamped at zero.
pub fn interference_power(snapshots: &CMatrix, steering: &CVector, noise_power: f64) -> Result<PowerEstimate> {
    let m = steering.len() as f64;
    if snapshots.ncols() == 0 {
        return Err(Error::InvalidArgument("interference power of an empty batch".into()));
    }
    if snapshots.nrows() != steering.len() {
        return Err(Error::InvalidArgument("steering vector and snapshot length differ".into()));
    }
    let z = snapshots.adjoint() * steering;
    let r = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / snapshots.ncols() as f64;
    let raw = (r - noise_power * m) / (m * m);
    Ok(PowerEstimate {
        power: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
    })
}

/// `γ_L = σ̂_n² / 2π` and `γ_H = max σ̂_k² + γ_L`.
pub fn gamma_levels(noise_power: f64, interferer_powers: &[f64]) -> Result<(f64, f64)> {
    if !(noise_power > 0.0) || !noise_power.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise power estimate must be positive, got {noise_power}"
        )));
    }
    if interferer_powers.is_empty() {
        return Err(Error::InvalidArgument("at least one interferer power is required".into()));
    }
    let max = interferer_powers.iter().copied().fold(0.0_f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::NoInterference);
    }
    let low = noise_power / (2.0 * PI);
    Ok((low, max + low))
}

/// How sector samples are weighted in the partial covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelMode {
    /// One global high level for every sector.
    #[default]
    Global,
    /// Each sector raised to its own interferer's power; the global `γ_H`
    /// stays the maximum and weaker sectors are scaled down.
    PerSector,
}

/// Piecewise-constant spectrum: `gamma_low` everywhere, `gamma_high` inside
/// the sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelSpectrum {
    pub gamma_low: f64,
    pub gamma_high: f64,
    pub sectors: Vec<AngularSector>,
    /// Relative level of each sector in `[0, 1]`; all ones in global mode.
    pub sector_levels: Vec<f64>,
}

impl TwoLevelSpectrum {
    pub fn new(gamma_low: f64, gamma_high: f64, sectors: Vec<AngularSector>) -> Result<Self> {
        if !(gamma_low > 0.0) || !(gamma_high > gamma_low) || !gamma_high.is_finite() {
            return Err(Error::InvalidLevels {
                low: gamma_low,
                high: gamma_high,
            });
        }
        let sector_levels = vec![1.0; sectors.len()];
        Ok(TwoLevelSpectrum {
            gamma_low,
            gamma_high,
            sectors,
            sector_levels,
        })
    }

    /// Per-sector levels from per-interferer power estimates.
    pub fn with_sector_powers(mut self, powers: &[f64]) -> Result<Self> {
        if powers.len() != self.sectors.len() {
            return Err(Error::InvalidArgument("one power per sector is required".into()));
        }
        let span = self.gamma_high - self.gamma_low;
        self.sector_levels = powers.iter().map(|&p| (p / span).clamp(0.0, 1.0)).collect();
        Ok(self)
    }
}

/// Merges overlapping or touching sectors into disjoint `(lo, hi)` intervals.
/// Each interval carries the largest level among the sectors it absorbed.
pub fn merge_sectors(sectors: &[AngularSector], levels: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut items: Vec<(f64, f64, f64)> = sectors
        .iter()
        .zip(levels.iter().copied().chain(std::iter::repeat(1.0)))
        .map(|(s, l)| (s.lower(), s.upper(), l))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(items.len());
    for (lo, hi, level) in items {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                last.1 = last.1.max(hi);
                last.2 = last.2.max(level);
            }
            _ => merged.push((lo, hi, level)),
        }
    }
    merged
}

/// Sample angles over a union of sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSamples {
    pub angles_deg: Vec<f64>,
    /// Relative weight of each sample (all ones unless per-sector levels are used).
    pub weights: Vec<f64>,
    /// Common integration step `|Θ|/Q` in radians.
    pub delta_rad: f64,
    /// Samples allocated to each merged interval, in ascending angle order.
    pub per_interval: Vec<usize>,
}

/// Splits `total` samples across `widths` proportionally, largest remainder
/// first, with at least `min_each` per interval.
pub fn allocate_samples(widths: &[f64], total: usize, min_each: usize) -> Vec<usize> {
    let n = widths.len();
    if n == 0 {
        return Vec::new();
    }
    let sum: f64 = widths.iter().sum();
    let mut alloc = vec![0usize; n];
    if sum > 0.0 {
        let ideal: Vec<f64> = widths.iter().map(|w| total as f64 * w / sum).collect();
        for (a, x) in alloc.iter_mut().zip(&ideal) {
            *a = x.floor() as usize;
        }
        let mut left = total - alloc.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let fi = ideal[i] - ideal[i].floor();
            let fj = ideal[j] - ideal[j].floor();
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            alloc[i] += 1;
            left -= 1;
        }
    } else {
        for i in 0..total {
            alloc[i % n] += 1;
        }
    }
    while let Some(short) = (0..n).find(|&i| alloc[i] < min_each) {
        let donor = (0..n)
            .filter(|&i| alloc[i] > min_each)
            .max_by(|&i, &j| alloc[i].cmp(&alloc[j]).then(j.cmp(&i)));
        match donor {
            Some(d) => {
                alloc[d] -= 1;
                alloc[short] += 1;
            }
            None => break,
        }
    }
    alloc
}

/// Uniform midpoint samples over the union of `sectors`.
///
/// Samples are split between the merged intervals in proportion to their
/// widths (at least [`MIN_SAMPLES_PER_SECTOR`] each). If the union has zero
/// width, each interval contributes its centre once and the step falls back
/// to `fallback_step_deg`.
pub fn sector_sampling(
    sectors: &[AngularSector],
    levels: &[f64],
    q_in: usize,
    fallback_step_deg: f64,
) -> Result<SectorSamples> {
    let merged = merge_sectors(sectors, levels);
    if merged.is_empty() {
        return Ok(SectorSamples {
            angles_deg: vec![],
            weights: vec![],
            delta_rad: 0.0,
            per_interval: vec![],
        });
    }
    if q_in < MIN_SAMPLES_PER_SECTOR * merged.len() {
        return Err(Error::InvalidArgument(format!(
            "Q_in = {q_in} is too small for {} sectors (need {} each)",
            merged.len(),
            MIN_SAMPLES_PER_SECTOR
        )));
    }
    let widths: Vec<f64> = merged.iter().map(|(lo, hi, _)| hi - lo).collect();
    let total_deg: f64 = widths.iter().sum();
    if !(total_deg > 0.0) {
        return Ok(SectorSamples {
            angles_deg: merged.iter().map(|(lo, hi, _)| 0.5 * (lo + hi)).collect(),
            weights: merged.iter().map(|m| m.2).collect(),
            delta_rad: fallback_step_deg.to_radians(),
            per_interval: vec![1; merged.len()],
        });
    }
    let alloc = allocate_samples(&widths, q_in, MIN_SAMPLES_PER_SECTOR);
    let mut angles_deg = Vec::with_capacity(q_in);
    let mut weights = Vec::with_capacity(q_in);
    for (&(lo, hi, level), &count) in merged.iter().zip(&alloc) {
        let step = (hi - lo) / count as f64;
        for j in 0..count {
            angles_deg.push(lo + (j as f64 + 0.5) * step);
            weights.push(level);
        }
    }
    Ok(SectorSamples {
        angles_deg,
        weights,
        delta_rad: total_deg.to_radians() / q_in as f64,
        per_interval: alloc,
    })
}

/// `Σ_i w_i a(θ_i) a(θ_i)^H Δθ`.
pub fn partial_covariance(samples: &SectorSamples, spec: &ArraySpec) -> CMatrix {
    let m = spec.elements;
    let mut r = CMatrix::zeros(m, m);
    for (&theta, &w) in samples.angles_deg.iter().zip(&samples.weights) {
        let a = steering_vector(theta, spec);
        r.ger(
            Complex64::new(w * samples.delta_rad, 0.0),
            &a,
            &a.conjugate(),
            Complex64::new(1.0, 0.0),
        );
    }
    hermitize(&mut r);
    r
}

/// Reconstructed interference-plus-noise covariance and everything used to
/// build it.
#[derive(Debug, Clone)]
pub struct ReconstructionProduct {
    pub spectrum: TwoLevelSpectrum,
    pub samples: SectorSamples,
    pub partial_cov: CMatrix,
    /// Eigensystem of `partial_cov` truncated to its numerical rank.
    pub partial_eig: EigenSystem,
    pub covariance: CMatrix,
    pub inverse: CMatrix,
    /// Relative Frobenius gap between the low-rank inverse and a dense
    /// inverse, when the array is small enough to check.
    pub dense_check: Option<f64>,
}

impl ReconstructionProduct {
    pub fn noise_floor(&self) -> f64 {
        2.0 * PI * self.spectrum.gamma_low
    }
}

/// Samples the spectrum's sectors, forms the partial covariance and returns
/// `R̂ = 2πγ_L I + (γ_H − γ_L) R_r` with its inverse.
pub fn reconstruct(
    spectrum: TwoLevelSpectrum,
    spec: &ArraySpec,
    q_in: usize,
    rank_tol: f64,
) -> Result<ReconstructionProduct> {
    let samples = sector_sampling(&spectrum.sectors, &spectrum.sector_levels, q_in, spec.grid_step_deg)?;
    let m = spec.elements;
    let partial_cov = partial_covariance(&samples, spec);
    let partial_eig = if samples.angles_deg.is_empty() {
        EigenSystem {
            values: vec![],
            vectors: CMatrix::zeros(m, 0),
        }
    } else {
        hermitian_eig(&partial_cov)?.truncated(rank_tol)
    };
    let covariance = two_level_matrix(spectrum.gamma_low, spectrum.gamma_high, &partial_eig, m);
    let inverse = woodbury_inverse(spectrum.gamma_low, spectrum.gamma_high, &partial_eig, m)?;
    let dense_check = if m <= DENSE_CHECK_MAX_DIM {
        let dense = hermitian_inverse(&covariance)?;
        let gap = (&inverse - &dense).norm() / dense.norm();
        if gap > 1e-8 {
            log::warn!("low-rank inverse deviates from dense inverse by {gap:e}");
        }
        Some(gap)
    } else {
        None
    };
    Ok(ReconstructionProduct {
        spectrum,
        samples,
        partial_cov,
        partial_eig,
        covariance,
        inverse,
        dense_check,
    })
}
