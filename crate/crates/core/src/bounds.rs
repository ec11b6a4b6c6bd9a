//! Closed-form error guarantees evaluated as numbers.
//!
//! Every evaluator returns the bound value together with the flag telling
//! whether the bound's own validity condition holds, the probability with
//! which it is guaranteed, and the scalar ingredients used.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{build_source_covariance, correlation_matrix_cp, smoothed_source_covariance, CoherenceStructure};
use crate::numerics::{hermitian_eig, singular_values, subspace_distance, svd, vandermonde, ComplexMatrix, SubspaceBasis};
use crate::smoothing::Smoothing;
use crate::{Error, Result};

/// Subspace bounds are informative only below this level.
pub const SUBSPACE_BOUND_LIMIT: f64 = 0.586;
/// Gap fraction required by the classical sin-theta theorems.
pub const SIN_THETA_GAP_FRACTION: f64 = 0.293;
/// Relative eigenvalue floor used as the positive-definiteness test.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Where the covariance ingredients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Route {
    /// Sample source covariance `Σ̂` of a realization.
    Empirical,
    /// Population source covariance `Σ`.
    Population,
    /// Raw inputs supplied directly.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub value: f64,
    pub applicable: bool,
    /// Clamped to `[0, 1]`; the unclamped value is `ingredients["probability_raw"]`.
    pub probability_floor: f64,
    pub route: Route,
    pub ingredients: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(value: f64, applicable: bool, probability_raw: f64, route: Route, mut ingredients: BTreeMap<String, f64>) -> Self {
        ingredients.insert("probability_raw".into(), probability_raw);
        Self {
            value,
            applicable,
            probability_floor: probability_raw.clamp(0.0, 1.0),
            route,
            ingredients,
        }
    }
}

/// Scalar ingredients shared by the subspace, frequency, and resolution
/// bounds. `dim` is `N` without smoothing and `M` with it; `lambda_k` and
/// `lambda_1` belong to the (smoothed, when applicable) source covariance
/// while `norm_sigma` is always the unsmoothed `‖Σ̂‖` or `‖Σ‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub variant: Smoothing,
    pub route: Route,
    pub k: usize,
    pub dim: usize,
    pub p: usize,
    pub snapshots: usize,
    pub noise_sigma: f64,
    pub norm_a: f64,
    pub sigma_k_a: f64,
    pub norm_sigma: f64,
    pub lambda_k: f64,
    pub lambda_1: f64,
    pub lambda_k_unsmoothed: f64,
    pub rank_sigma: usize,
}

impl BoundInputs {
    /// Derives every ingredient from frequencies and a source covariance.
    #[allow(clippy::too_many_arguments)]
    pub fn from_covariance(
        freqs: &[f64],
        sigma: &ComplexMatrix,
        noise_sigma: f64,
        n_sensors: usize,
        variant: Smoothing,
        subarray_m: Option<usize>,
        snapshots: usize,
        route: Route,
    ) -> Result<Self> {
        let k = freqs.len();
        if sigma.shape() != (k, k) {
            return Err(Error::DimensionMismatch("source covariance must be K x K"));
        }
        let (dim, p) = match variant {
            Smoothing::None => (n_sensors, 1),
            _ => {
                let m = subarray_m.ok_or(Error::InvalidConfig("smoothing requires a subarray length"))?;
                if m == 0 || m > n_sensors {
                    return Err(Error::SubarrayTooLarge { m, n: n_sensors });
                }
                (m, n_sensors + 1 - m)
            }
        };
        let a = vandermonde(freqs, dim)?;
        let sv = singular_values(&a)?;
        let base = hermitian_eig(sigma)?.values;
        let smoothed = smoothed_source_covariance(sigma, freqs, p, variant, dim)?;
        let eig = hermitian_eig(&smoothed)?.values;
        let lmax = base[0];
        let rank_sigma = base.iter().filter(|&&l| l > PD_TOLERANCE * lmax && l > 0.0).count();
        Ok(Self {
            variant,
            route,
            k,
            dim,
            p,
            snapshots,
            noise_sigma,
            norm_a: sv[0],
            sigma_k_a: if sv.len() >= k { sv[k - 1] } else { 0.0 },
            norm_sigma: lmax.max(0.0),
            lambda_k: eig[k - 1],
            lambda_1: eig[0],
            lambda_k_unsmoothed: base[k - 1],
            rank_sigma,
        })
    }

    fn ensure_positive_definite(&self) -> Result<()> {
        if !(self.lambda_k > 0.0 && self.lambda_k > PD_TOLERANCE * self.lambda_1) {
            return Err(Error::NotPositiveDefinite { lambda_k: self.lambda_k });
        }
        Ok(())
    }

    fn ensure_dimension(&self) -> Result<()> {
        if self.dim < self.k + 1 {
            return Err(Error::DimensionTooSmall {
                dim: self.dim,
                needed: self.k + 1,
            });
        }
        Ok(())
    }

    /// `12 σ ‖A‖ ‖Σ̂‖^{1/2} √(D/L) + 16 σ² max{√(D/L), D/L}`.
    fn noise_numerator(&self) -> f64 {
        let s = self.noise_sigma;
        let ratio = self.dim as f64 / self.snapshots as f64;
        12.0 * s * self.norm_a * libm::sqrt(self.norm_sigma) * libm::sqrt(ratio) + 16.0 * s * s * libm::sqrt(ratio).max(ratio)
    }

    /// `1 - 3e^{-N/2}` or `1 - 3P e^{-M/2}`.
    fn subspace_probability(&self) -> f64 {
        let tail = 3.0 * libm::exp(-(self.dim as f64) / 2.0);
        match self.variant {
            Smoothing::None => 1.0 - tail,
            _ => 1.0 - self.p as f64 * tail,
        }
    }

    fn snapshot_floor(&self) -> usize {
        match self.variant {
            Smoothing::None => self.dim.max(16 * self.k),
            _ => self.dim.max(16 * self.rank_sigma),
        }
    }

    fn lambda_key(&self) -> &'static str {
        match (self.variant, self.route) {
            (Smoothing::None, Route::Population) => "lambda_k_sigma",
            (Smoothing::None, _) => "lambda_k_sigma_hat",
            (Smoothing::Foss, Route::Population) => "lambda_k_sigma_ss",
            (Smoothing::Foss, _) => "lambda_k_sigma_hat_ss",
            (Smoothing::Fbss, Route::Population) => "lambda_k_sigma_fb",
            (Smoothing::Fbss, _) => "lambda_k_sigma_hat_fb",
        }
    }

    pub fn ingredients(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        let s = self.noise_sigma;
        m.insert("sigma_k_a".into(), self.sigma_k_a);
        m.insert("norm_a".into(), self.norm_a);
        m.insert("norm_sigma".into(), self.norm_sigma);
        m.insert(self.lambda_key().into(), self.lambda_k);
        m.insert("kappa_a".into(), self.norm_a / self.sigma_k_a);
        m.insert("kappa_sigma".into(), self.norm_sigma / self.lambda_k_unsmoothed);
        m.insert("snr_proxy".into(), self.sigma_k_a * self.sigma_k_a * self.lambda_k / (s * s));
        m.insert("noise_sigma".into(), s);
        m.insert("dim".into(), self.dim as f64);
        m.insert("p".into(), self.p as f64);
        m.insert("k".into(), self.k as f64);
        m.insert("snapshots".into(), self.snapshots as f64);
        m.insert("rank_sigma".into(), self.rank_sigma as f64);
        m
    }
}

/// Left-subspace perturbation bound for a `p x n` matrix under i.i.d.
/// complex Gaussian noise of level `sigma`.
pub fn gaussian_perturbation_bound(sigma: f64, sigma1: f64, sigma_r: f64, sigma_r1: f64, p: usize, n: usize) -> Result<BoundReport> {
    if !(sigma_r > sigma_r1) {
        return Err(Error::DegenerateGap);
    }
    let (pf, nf) = (p as f64, n as f64);
    let value = (12.0 * sigma * sigma1 * libm::sqrt(pf) + 16.0 * sigma * sigma * libm::sqrt(pf * nf).max(pf))
        / (sigma_r * sigma_r - sigma_r1 * sigma_r1);
    let mut ing = BTreeMap::new();
    ing.insert("sigma_1".into(), sigma1);
    ing.insert("sigma_r".into(), sigma_r);
    ing.insert("sigma_r1".into(), sigma_r1);
    ing.insert("noise_sigma".into(), sigma);
    Ok(BoundReport::new(
        value,
        value < SUBSPACE_BOUND_LIMIT,
        1.0 - 3.0 * libm::exp(-pf / 2.0),
        Route::Direct,
        ing,
    ))
}

/// `dist(Û, U)` bound for plain, forward-only, or forward-backward
/// subspace estimation.
pub fn subspace_error_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.ensure_positive_definite()?;
    let value = inp.noise_numerator() / (inp.sigma_k_a * inp.sigma_k_a * inp.lambda_k);
    Ok(BoundReport::new(
        value,
        value < SUBSPACE_BOUND_LIMIT,
        inp.subspace_probability(),
        inp.route,
        inp.ingredients(),
    ))
}

/// Matched-distance bound for ESPRIT at a fixed snapshot count.
pub fn md_error_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.ensure_dimension()?;
    inp.ensure_positive_definite()?;
    let sub = subspace_error_bound(inp)?;
    let k = inp.k as f64;
    let prefactor = libm::pow(2.0, 2.0 * k + 4.0) * libm::pow(k, 1.5) * libm::sqrt(inp.dim as f64);
    let raw = prefactor * inp.noise_numerator() / (libm::pow(inp.sigma_k_a, 3.0) * inp.lambda_k);
    let mut ing = inp.ingredients();
    ing.insert("uncapped".into(), raw);
    ing.insert("subspace_bound".into(), sub.value);
    ing.insert("subspace_applicable".into(), if sub.applicable { 1.0 } else { 0.0 });
    Ok(BoundReport::new(raw.min(1.0), true, inp.subspace_probability(), inp.route, ing))
}

/// Matched-distance bound exposing the `max{σ, σ²}/√L` scaling; meant for
/// population ingredients.
pub fn md_scaling_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.ensure_dimension()?;
    let required = inp.snapshot_floor();
    if inp.snapshots < required {
        return Err(Error::PreconditionL {
            l: inp.snapshots,
            required,
        });
    }
    inp.ensure_positive_definite()?;
    let raw = scaling_coefficient(inp) * scaling_noise_term(inp) / libm::sqrt(inp.snapshots as f64);
    let prob = inp.subspace_probability() - 2.0 * libm::exp(-(inp.snapshots as f64) / 32.0);
    let mut ing = inp.ingredients();
    ing.insert("uncapped".into(), raw);
    ing.insert("snapshot_floor".into(), required as f64);
    Ok(BoundReport::new(raw.min(1.0), true, prob, inp.route, ing))
}

/// `72 · 2^{2K+5} K^{3/2} D / (σ_K³ λ_K)`.
fn scaling_coefficient(inp: &BoundInputs) -> f64 {
    let k = inp.k as f64;
    72.0 * libm::pow(2.0, 2.0 * k + 5.0) * libm::pow(k, 1.5) * inp.dim as f64 / (libm::pow(inp.sigma_k_a, 3.0) * inp.lambda_k)
}

/// `max{σ ‖A‖ ‖Σ‖^{1/2}, σ²}`.
fn scaling_noise_term(inp: &BoundInputs) -> f64 {
    let s = inp.noise_sigma;
    (s * inp.norm_a * libm::sqrt(inp.norm_sigma)).max(s * s)
}

/// Snapshot count beyond which resolution `delta` is guaranteed; the
/// guarantee needs `L` strictly greater than the returned value.
pub fn resolution_snapshot_threshold(inp: &BoundInputs, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig("resolution must be positive"));
    }
    inp.ensure_positive_definite()?;
    let c = scaling_coefficient(inp) * scaling_noise_term(inp);
    let third = 4.0 * c * c / (delta * delta);
    Ok((inp.snapshot_floor() as f64).max(third))
}

/// Eigenvalue bounds for `Σ ⊙ C_P`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HadamardBoundReport {
    pub schur_lower: f64,
    pub schur_upper: f64,
    pub hplb1: f64,
    /// Present when `P ≥ K`.
    pub hplb2: Option<f64>,
    /// Present when a coherence structure is supplied.
    pub prop1: Option<f64>,
    pub exact_min_eig: f64,
    pub exact_max_eig: f64,
}

pub fn hadamard_eig_bounds(
    sigma: &ComplexMatrix,
    coherence: Option<&CoherenceStructure>,
    freqs: &[f64],
    p: usize,
) -> Result<HadamardBoundReport> {
    let k = freqs.len();
    if sigma.shape() != (k, k) {
        return Err(Error::StructureMismatch);
    }
    let c = correlation_matrix_cp(freqs, p)?;
    let base = hermitian_eig(sigma)?.values;
    let had = hermitian_eig(&sigma.hadamard(&c).hermitian_part())?.values;
    let diag: Vec<f64> = c.diagonal().iter().map(|z| z.re).collect();
    let cmax = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let (lmax, lmin) = (base[0], base[k - 1]);
    let hplb2 = if p >= k {
        let sv = singular_values(&vandermonde(freqs, p)?)?;
        let min_power = sigma.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        Some(sv[k - 1] * sv[k - 1] * min_power / p as f64)
    } else {
        None
    };
    let prop1 = match coherence {
        Some(s) => Some(grouped_lower_bound(sigma, s, freqs, p)?),
        None => None,
    };
    Ok(HadamardBoundReport {
        schur_lower: lmin * cmin,
        schur_upper: lmax * cmax,
        hplb1: lmin,
        hplb2,
        prop1,
        exact_min_eig: had[k - 1],
        exact_max_eig: had[0],
    })
}

/// `(1/P) λ_min(Σ̌) min_j σ_{g_j}²(A_P^{(j)}) min_l |v_{jl}|²`.
fn grouped_lower_bound(sigma: &ComplexMatrix, s: &CoherenceStructure, freqs: &[f64], p: usize) -> Result<f64> {
    if s.num_sources() != freqs.len() {
        return Err(Error::StructureMismatch);
    }
    let rebuilt = build_source_covariance(s)?.sigma_full;
    if rebuilt.sub(sigma).norm_max() > 1e-8 * (1.0 + sigma.norm_max()) {
        return Err(Error::StructureMismatch);
    }
    let core_min = *hermitian_eig(s.core_cov())?.values.last().unwrap_or(&0.0);
    let mut worst = f64::INFINITY;
    for ((start, end), v) in s.group_ranges().into_iter().zip(s.group_vectors()) {
        let g = end - start;
        let block_sv = if g > p {
            0.0
        } else {
            let sv = singular_values(&vandermonde(&freqs[start..end], p)?)?;
            sv[g - 1]
        };
        let vmin = v.iter().map(|z| z.norm_sqr()).fold(f64::INFINITY, f64::min);
        worst = worst.min(block_sv * block_sv * vmin);
    }
    Ok(core_min * worst / p as f64)
}

/// Which classical perturbation theorem to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinThetaKind {
    DavisKahan,
    Wedin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinThetaCheck {
    pub applicable: bool,
    pub bound: f64,
    pub observed: f64,
}

/// Evaluates the Davis-Kahan (eigenvectors of Hermitian `m`) or Wedin
/// (singular vectors of general `m`) bound `2‖E‖/gap` against the observed
/// distance between the top-`r` subspaces of `m` and `m + e`.
pub fn classical_sin_theta_check(kind: SinThetaKind, m: &ComplexMatrix, e: &ComplexMatrix, r: usize) -> Result<SinThetaCheck> {
    if m.shape() != e.shape() {
        return Err(Error::DimensionMismatch("perturbation shape differs from matrix"));
    }
    let (rows, cols) = m.shape();
    let max_r = rows.min(cols);
    if r == 0 || r >= max_r {
        return Err(Error::RankRequestTooLarge {
            requested: r,
            max: max_r.saturating_sub(1),
        });
    }
    let norm_e = e.norm_spectral();
    let perturbed = m.add(e);
    let (gap, observed) = match kind {
        SinThetaKind::DavisKahan => {
            let tol = 1e-8 * (1.0 + m.norm_max());
            if m.hermitian_defect() > tol {
                return Err(Error::NotHermitian {
                    asymmetry: m.hermitian_defect(),
                });
            }
            if perturbed.hermitian_defect() > tol {
                return Err(Error::NotHermitian {
                    asymmetry: perturbed.hermitian_defect(),
                });
            }
            let a = hermitian_eig(m)?;
            let b = hermitian_eig(&perturbed)?;
            let u = SubspaceBasis::new(a.vectors.col_block(0, r))?;
            let uh = SubspaceBasis::new(b.vectors.col_block(0, r))?;
            (a.values[r - 1] - a.values[r], subspace_distance(&u, &uh)?)
        }
        SinThetaKind::Wedin => {
            let a = svd(m)?;
            let b = svd(&perturbed)?;
            let u = SubspaceBasis::new(a.u.col_block(0, r))?;
            let uh = SubspaceBasis::new(b.u.col_block(0, r))?;
            let v = SubspaceBasis::new(a.v.col_block(0, r))?;
            let vh = SubspaceBasis::new(b.v.col_block(0, r))?;
            let dist = subspace_distance(&u, &uh)?.max(subspace_distance(&v, &vh)?);
            (a.singular_values[r - 1] - a.singular_values[r], dist)
        }
    };
    let applicable = gap > 0.0 && norm_e <= SIN_THETA_GAP_FRACTION * gap;
    let bound = if gap > 0.0 { 2.0 * norm_e / gap } else { f64::INFINITY };
    Ok(SinThetaCheck {
        applicable,
        bound,
        observed,
    })
}
