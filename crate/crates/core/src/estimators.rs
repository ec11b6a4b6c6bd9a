//! Signal-subspace extraction, ESPRIT, and MUSIC.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64 as C64;

use crate::numerics::{eigenvalues, pseudo_inverse, singular_values, steering_vector, svd_top_subspace, ComplexMatrix, SubspaceBasis};
use crate::smoothing::{smoothed_stack, Smoothing};
use crate::{Error, Result};

/// Default MUSIC grid size.
pub const DEFAULT_MUSIC_GRID: usize = 8192;

/// Frequency extraction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    Esprit,
    Music,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Esprit => "esprit",
            Method::Music => "music",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "esprit" => Ok(Method::Esprit),
            "music" => Ok(Method::Music),
            _ => Err(Error::InvalidConfig("method must be esprit or music")),
        }
    }
}

/// An estimated `K`-dimensional signal subspace with its provenance.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    pub basis: SubspaceBasis,
    /// All singular values of the data (or stacked) matrix, descending.
    pub singular_values: Vec<f64>,
    pub smoothing: Smoothing,
    pub m: usize,
    pub p: usize,
    pub snapshots: usize,
}

impl SubspaceEstimate {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ambient_dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// Estimated frequencies in `[0, 1)`, ascending.
    pub freqs: Vec<f64>,
    /// Eigenvalues of `U₁⁺U₂` (ESPRIT only).
    pub raw_eigs: Vec<C64>,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicSpectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Top-`k` left singular subspace of a data matrix. The columns of `data`
/// must carry at least `k` directions, so `k ≤ n` is required along with
/// `k < M`.
pub fn signal_subspace(data: &ComplexMatrix, k: usize) -> Result<SubspaceEstimate> {
    let (m, n) = data.shape();
    subspace_with_provenance(data, k, Smoothing::None, m, 1, n)
}

fn subspace_with_provenance(
    data: &ComplexMatrix,
    k: usize,
    smoothing: Smoothing,
    m: usize,
    p: usize,
    snapshots: usize,
) -> Result<SubspaceEstimate> {
    let (rows, cols) = data.shape();
    if k == 0 || k >= rows || k > cols {
        return Err(Error::RankRequestTooLarge {
            requested: k,
            max: (rows.saturating_sub(1)).min(cols),
        });
    }
    let (basis, singular_values) = svd_top_subspace(data, k)?;
    Ok(SubspaceEstimate {
        basis,
        singular_values,
        smoothing,
        m,
        p,
        snapshots,
    })
}

/// Reduces a frequency to `[0, 1)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - libm::floor(f);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn sort_frequencies(freqs: &mut [f64]) {
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
}

/// Rotational-invariance estimate: eigenvalues of `U₁⁺U₂`, mapped to
/// frequencies through the angle of `ẑ/|ẑ|`.
pub fn esprit_frequencies(sub: &SubspaceEstimate) -> Result<EstimateResult> {
    let u = sub.basis.matrix();
    let (m, k) = u.shape();
    if m < k + 1 {
        return Err(Error::DimensionTooSmall { dim: m, needed: k + 1 });
    }
    let u1 = u.row_block(0, m - 1);
    let u2 = u.row_block(1, m);
    let sv = singular_values(&u1)?;
    let smin = sv.get(k - 1).copied().unwrap_or(0.0);
    if smin <= 1e-10 {
        return Err(Error::DegenerateSubspace { k });
    }
    let phi = pseudo_inverse(&u1)?.matmul(&u2);
    let raw = eigenvalues(&phi)?;
    let mut freqs: Vec<f64> = raw
        .iter()
        .map(|z| {
            let unit = z / z.norm();
            wrap_frequency(libm::atan2(unit.im, unit.re) / (2.0 * PI))
        })
        .collect();
    sort_frequencies(&mut freqs);
    let mut diagnostics = subspace_diagnostics(sub);
    diagnostics.insert("sigma_min_u1".into(), smin);
    let worst = raw.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    diagnostics.insert("max_unit_circle_deviation".into(), worst);
    Ok(EstimateResult {
        freqs,
        raw_eigs: raw,
        method: Method::Esprit,
        diagnostics,
    })
}

fn subspace_diagnostics(sub: &SubspaceEstimate) -> BTreeMap<String, f64> {
    let mut d = BTreeMap::new();
    let k = sub.dim();
    d.insert("m".into(), sub.m as f64);
    d.insert("p".into(), sub.p as f64);
    d.insert("snapshots".into(), sub.snapshots as f64);
    for (i, s) in sub.singular_values.iter().enumerate().take(k + 1) {
        d.insert(format!("singular_value_{}", i + 1), *s);
    }
    let norm = (sub.snapshots * sub.p) as f64;
    let eig = |i: usize| sub.singular_values.get(i).map_or(0.0, |s| s * s / norm);
    d.insert("lambda_k".into(), eig(k - 1));
    d.insert("lambda_k1".into(), eig(k));
    d
}

/// Noise-subspace correlation `‖(I - ÛÛᴴ) a(f)‖ / √M`.
pub fn music_correlation(sub: &SubspaceEstimate, f: f64) -> f64 {
    let m = sub.ambient_dim();
    let a = steering_vector(f, m);
    (sub.basis.residual_norm(&a) / libm::sqrt(m as f64)).min(1.0)
}

/// `music_correlation` on the uniform grid `{i / grid_size}`.
pub fn music_spectrum(sub: &SubspaceEstimate, grid_size: usize) -> MusicSpectrum {
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 / grid_size as f64).collect();
    let values = grid.iter().map(|&f| music_correlation(sub, f)).collect();
    MusicSpectrum { grid, values }
}

/// The `k` deepest local minima of the MUSIC spectrum, each refined by a
/// three-point parabola through the squared correlation.
pub fn music_frequencies(sub: &SubspaceEstimate, k: usize, grid_size: usize) -> Result<EstimateResult> {
    let min_grid = 16 * sub.ambient_dim();
    if grid_size < min_grid.max(3) {
        return Err(Error::GridTooCoarse {
            grid: grid_size,
            min: min_grid.max(3),
        });
    }
    let spectrum = music_spectrum(sub, grid_size);
    let sq: Vec<f64> = spectrum.values.iter().map(|v| v * v).collect();
    let g = grid_size;
    let h = 1.0 / g as f64;
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 0..g {
        let (l, c, r) = (sq[(i + g - 1) % g], sq[i], sq[(i + 1) % g]);
        if !(c < l && c <= r) {
            continue;
        }
        let curvature = l - 2.0 * c + r;
        let (offset, value) = if curvature > 0.0 {
            let d = (0.5 * (l - r) / curvature).clamp(-0.5, 0.5);
            (d, c - 0.25 * (l - r) * d)
        } else {
            (0.0, c)
        };
        minima.push((wrap_frequency(spectrum.grid[i] + offset * h), libm::sqrt(value.max(0.0))));
    }
    if minima.len() < k {
        return Err(Error::InsufficientMinima {
            found: minima.len(),
            wanted: k,
        });
    }
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
    let mut diagnostics = subspace_diagnostics(sub);
    diagnostics.insert("grid_size".into(), g as f64);
    diagnostics.insert("local_minima".into(), minima.len() as f64);
    diagnostics.insert("max_selected_minimum".into(), minima[k - 1].1);
    if let Some(next) = minima.get(k) {
        diagnostics.insert("first_rejected_minimum".into(), next.1);
    }
    let mut freqs: Vec<f64> = minima[..k].iter().map(|m| m.0).collect();
    sort_frequencies(&mut freqs);
    Ok(EstimateResult {
        freqs,
        raw_eigs: Vec::new(),
        method: Method::Music,
        diagnostics,
    })
}

/// Pipeline settings for [`estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub method: Method,
    pub smoothing: Smoothing,
    /// Subarray length; required with smoothing, must be absent without.
    pub subarray_m: Option<usize>,
    pub grid_size: usize,
}

impl EstimateOptions {
    pub fn new(method: Method, smoothing: Smoothing, subarray_m: Option<usize>) -> Self {
        Self {
            method,
            smoothing,
            subarray_m,
            grid_size: DEFAULT_MUSIC_GRID,
        }
    }

    pub fn esprit() -> Self {
        Self::new(Method::Esprit, Smoothing::None, None)
    }
}

/// Subspace for the chosen smoothing mode.
pub fn pipeline_subspace(y: &ComplexMatrix, smoothing: Smoothing, subarray_m: Option<usize>, k: usize) -> Result<SubspaceEstimate> {
    let m = match (smoothing, subarray_m) {
        (Smoothing::None, None) => y.rows(),
        (Smoothing::None, Some(m)) if m == y.rows() => m,
        (Smoothing::None, Some(_)) => return Err(Error::InvalidConfig("subarray length given without smoothing")),
        (_, Some(m)) => m,
        (_, None) => return Err(Error::InvalidConfig("smoothing requires a subarray length")),
    };
    let stack = smoothed_stack(y, smoothing, m)?;
    subspace_with_provenance(&stack.stack, k, smoothing, stack.m, stack.p, stack.snapshots)
}

/// Full estimation pipeline: optional smoothing, subspace, frequency rule.
pub fn estimate(y: &ComplexMatrix, opts: &EstimateOptions, k: usize) -> Result<EstimateResult> {
    let sub = pipeline_subspace(y, opts.smoothing, opts.subarray_m, k)?;
    match opts.method {
        Method::Esprit => esprit_frequencies(&sub),
        Method::Music => music_frequencies(&sub, k, opts.grid_size),
    }
}
