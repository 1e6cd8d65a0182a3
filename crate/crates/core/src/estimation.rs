//! Sample covariance, subspace partition, MUSIC and per-snapshot direction
//! finding, and interferer uncertainty-sector estimation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, ArraySpec};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, EigenSystem};

/// `(1/N) Σ x_n x_n^H` over the columns of `snapshots`.
///
/// Each entry is accumulated snapshot by snapshot in column order, so the
/// result is exactly Hermitian.
pub fn sample_covariance(snapshots: &CMatrix) -> Result<CMatrix> {
    let (m, n) = snapshots.shape();
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("sample covariance of an empty batch".into()));
    }
    let mut r = CMatrix::zeros(m, m);
    for col in snapshots.column_iter() {
        for j in 0..m {
            let cj = col[j].conj();
            for i in j..m {
                r[(i, j)] += col[i] * cj;
            }
        }
    }
    let scale = 1.0 / n as f64;
    for j in 0..m {
        r[(j, j)] = Complex64::new(r[(j, j)].re * scale, 0.0);
        for i in (j + 1)..m {
            let v = r[(i, j)] * scale;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
    Ok(r)
}

/// Signal/noise split of an eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePartition {
    pub signal_basis: CMatrix,
    pub noise_basis: CMatrix,
    pub signal_values: Vec<f64>,
    pub noise_values: Vec<f64>,
}

/// First `k` eigenpairs span the signal subspace, the rest the noise subspace.
pub fn partition_subspaces(eig: &EigenSystem, k: usize) -> Result<SubspacePartition> {
    let m = eig.rank();
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(format!(
            "source count {k} must satisfy 1 <= K < M = {m}"
        )));
    }
    Ok(SubspacePartition {
        signal_basis: eig.vectors.columns(0, k).into_owned(),
        noise_basis: eig.vectors.columns(k, m - k).into_owned(),
        signal_values: eig.values[..k].to_vec(),
        noise_values: eig.values[k..].to_vec(),
    })
}

/// How the noise power is estimated from the noise-subspace eigenvalues.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseEstimator {
    /// Average of the noise eigenvalues.
    #[default]
    Mean,
    /// Average of the squared noise eigenvalues. Only agrees with `Mean` at
    /// unit noise power.
    PaperSquared,
}

pub fn estimate_noise_power(partition: &SubspacePartition, mode: NoiseEstimator) -> f64 {
    let vals = &partition.noise_values;
    let count = vals.len() as f64;
    match mode {
        NoiseEstimator::Mean => vals.iter().sum::<f64>() / count,
        NoiseEstimator::PaperSquared => vals.iter().map(|v| v * v).sum::<f64>() / count,
    }
}

/// Number of eigenvalues exceeding `factor` times the median eigenvalue.
pub fn detect_source_count(values: &[f64], factor: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    values.iter().filter(|&&v| v > factor * median).count()
}

/// `‖a(θ)^H U_n‖²` for every grid angle (small where a source sits).
pub fn music_null_spectrum(noise_basis: &CMatrix, spec: &ArraySpec, grid_deg: &[f64]) -> Vec<f64> {
    grid_deg
        .iter()
        .map(|&t| {
            let a = steering_vector(t, spec);
            (noise_basis.adjoint() * a).norm_squared()
        })
        .collect()
}

/// A local minimum of the MUSIC null spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MusicMinimum {
    pub angle_deg: f64,
    pub null_value: f64,
}

/// All local minima of the null spectrum over `grid_deg`, deepest first.
/// The grid is sorted internally, so evaluation order does not matter.
pub fn music_minima(noise_basis: &CMatrix, spec: &ArraySpec, grid_deg: &[f64]) -> Vec<MusicMinimum> {
    let mut grid = grid_deg.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let f = music_null_spectrum(noise_basis, spec, &grid);
    let n = f.len();
    let mut minima = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || f[i] < f[i - 1];
        let right_ok = i + 1 == n || f[i] <= f[i + 1];
        if n > 1 && left_ok && right_ok {
            minima.push(MusicMinimum {
                angle_deg: grid[i],
                null_value: f[i],
            });
        }
    }
    minima.sort_by(|a, b| {
        a.null_value
            .total_cmp(&b.null_value)
            .then(a.angle_deg.total_cmp(&b.angle_deg))
    });
    minima
}

/// Golden-section refinement of a grid minimum within `±bracket_deg`.
pub fn refine_minimum(noise_basis: &CMatrix, spec: &ArraySpec, angle_deg: f64, bracket_deg: f64, tol_deg: f64) -> MusicMinimum {
    let f = |t: f64| (noise_basis.adjoint() * steering_vector(t, spec)).norm_squared();
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((angle_deg - bracket_deg).max(-90.0), (angle_deg + bracket_deg).min(90.0));
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol_deg {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let best = [(angle_deg, f(angle_deg)), (mid, f(mid))]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((angle_deg, f64::INFINITY));
    MusicMinimum {
        angle_deg: best.0,
        null_value: best.1,
    }
}

/// Directions of the `k` deepest MUSIC minima, sorted ascending.
pub fn music_doas(noise_basis: &CMatrix, spec: &ArraySpec, grid_deg: &[f64], k: usize) -> Result<Vec<f64>> {
    let minima = music_minima(noise_basis, spec, grid_deg);
    if minima.len() < k {
        return Err(Error::UnderResolved {
            found: minima.len(),
            wanted: k,
        });
    }
    let mut out: Vec<f64> = minima[..k].iter().map(|m| m.angle_deg).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Angular sector `(center − half_width, center + half_width)` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub center_deg: f64,
    pub half_width_deg: f64,
}

impl AngularSector {
    pub fn new(center_deg: f64, half_width_deg: f64) -> Self {
        AngularSector {
            center_deg,
            half_width_deg,
        }
    }

    pub fn lower(&self) -> f64 {
        self.center_deg - self.half_width_deg
    }

    pub fn upper(&self) -> f64 {
        self.center_deg + self.half_width_deg
    }

    pub fn width_deg(&self) -> f64 {
        2.0 * self.half_width_deg
    }

    pub fn contains(&self, theta_deg: f64) -> bool {
        theta_deg >= self.lower() && theta_deg <= self.upper()
    }
}

/// Search window `[center − half_width, center + half_width]` scanned at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorScan {
    pub half_width_deg: f64,
    pub step_deg: f64,
}

impl Default for SectorScan {
    fn default() -> Self {
        SectorScan {
            half_width_deg: 3.0,
            step_deg: 0.1,
        }
    }
}

/// Direction maximizing `|x^H a(θ)|` over the scan window around `center_deg`.
///
/// Candidates are visited in order of increasing distance from the centre
/// and only a strictly larger value replaces the incumbent, so ties resolve
/// toward the centre.
pub fn snapshot_doa(
    snapshot: &[Complex64],
    center_deg: f64,
    scan: &SectorScan,
    spec: &ArraySpec,
) -> Result<f64> {
    if !(scan.step_deg > 0.0) || !(scan.half_width_deg >= 0.0) {
        return Err(Error::InvalidArgument("sector scan needs a positive step".into()));
    }
    if snapshot.len() != spec.elements {
        return Err(Error::InvalidArgument(format!(
            "snapshot has {} entries, array has {}",
            snapshot.len(),
            spec.elements
        )));
    }
    let steps = (scan.half_width_deg / scan.step_deg + 1e-9).floor() as i64;
    let mut best_angle = center_deg;
    let mut best = f64::NEG_INFINITY;
    let mut evaluate = |offset: i64| {
        let theta = center_deg + offset as f64 * scan.step_deg;
        let u = spec.phase_step(theta);
        // x^H a(θ) = Σ conj(x_m) e^{−j m u}
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, x) in snapshot.iter().enumerate() {
            acc += x.conj() * Complex64::from_polar(1.0, -(m as f64) * u);
        }
        let mag = acc.norm();
        if mag > best {
            best = mag;
            best_angle = theta;
        }
    };
    evaluate(0);
    for i in 1..=steps {
        evaluate(-i);
        evaluate(i);
    }
    Ok(best_angle)
}

/// Per-snapshot direction estimates for every column of `snapshots`.
pub fn snapshot_doas(snapshots: &CMatrix, center_deg: f64, scan: &SectorScan, spec: &ArraySpec) -> Result<Vec<f64>> {
    snapshots
        .column_iter()
        .map(|col| {
            let x: Vec<Complex64> = col.iter().copied().collect();
            snapshot_doa(&x, center_deg, scan, spec)
        })
        .collect()
}

/// Default lower bound on `|2t − N| / N` for a snapshot to enter the width
/// estimate; keeps the amplification `2N/|2t − N|` at most 4.
pub const DEFAULT_CONDITIONING: f64 = 0.5;

/// Inverts the linear drift model per snapshot:
/// `Δθ(t) = 2N/(2t − N) · (θ(t) − center)` with `t = 1..N`.
///
/// Snapshots with `|2t − N| < conditioning · N` yield `None`.
pub fn snapshot_widths(doas_deg: &[f64], center_deg: f64, conditioning: f64) -> Vec<Option<f64>> {
    let n = doas_deg.len() as f64;
    doas_deg
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let t = (i + 1) as f64;
            let denom = 2.0 * t - n;
            if denom.abs() >= conditioning * n && denom != 0.0 {
                Some(2.0 * n / denom * (theta - center_deg))
            } else {
                None
            }
        })
        .collect()
}

/// Uncertainty sector around `center_deg` from per-snapshot directions.
///
/// Half-width is half the median of `|Δθ(t)|` over the well-conditioned
/// snapshots, capped at `max_half_width_deg`. Falls back to `fallback_deg`
/// when no snapshot qualifies.
pub fn uncertainty_width(
    doas_deg: &[f64],
    center_deg: f64,
    max_half_width_deg: f64,
    fallback_deg: f64,
    conditioning: f64,
) -> Result<AngularSector> {
    if doas_deg.len() < 2 {
        return Err(Error::InvalidArgument(
            "uncertainty width needs at least 2 snapshots".into(),
        ));
    }
    let mut widths: Vec<f64> = snapshot_widths(doas_deg, center_deg, conditioning)
        .into_iter()
        .flatten()
        .map(f64::abs)
        .collect();
    if widths.is_empty() {
        return Ok(AngularSector::new(center_deg, fallback_deg));
    }
    widths.sort_by(f64::total_cmp);
    let mid = widths.len() / 2;
    let median = if widths.len().is_multiple_of(2) {
        0.5 * (widths[mid - 1] + widths[mid])
    } else {
        widths[mid]
    };
    Ok(AngularSector::new(center_deg, (median / 2.0).min(max_half_width_deg)))
}
