//! Scenario description and synthetic snapshot generation.
//!
//! Data follow `Y = A S + E` with `A` the `N x K` Vandermonde manifold of a
//! half-wavelength uniform linear array, source columns drawn i.i.d. from a
//! circular complex Gaussian with covariance `Σ`, and white circular Gaussian
//! noise of per-entry variance `σ²`, independent of the sources.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Deref;

use num_complex::Complex64 as C64;
use rand_core::RngCore;

use crate::numerics::{hermitian_eig, vandermonde, ComplexMatrix};
use crate::rng::{complex_gaussian_matrix, stream_rng, StreamRole};
use crate::smoothing::Smoothing;
use crate::{Error, Result};

/// Checks that every frequency lies in `[0, 1)` and no value repeats.
pub fn validate_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::EmptyFrequencySet);
    }
    for (i, &f) in freqs.iter().enumerate() {
        if !(0.0..1.0).contains(&f) {
            return Err(Error::FrequencyOutOfRange(f));
        }
        if freqs[..i].contains(&f) {
            return Err(Error::DuplicateFrequency(f));
        }
    }
    Ok(())
}

/// A non-empty set of distinct normalized frequencies in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct FrequencySet(Vec<f64>);

impl FrequencySet {
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        validate_frequencies(&freqs)?;
        Ok(Self(freqs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FrequencySet {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FrequencySet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencySet> for Vec<f64> {
    fn from(f: FrequencySet) -> Self {
        f.0
    }
}

/// Coherent-group description of the source covariance:
/// `Σ = diag(v_1, …, v_G) Σ̌ diagᴴ(v_1, …, v_G)`, sources indexed group by group.
#[derive(Debug, Clone)]
pub struct CoherenceStructure {
    groups: Vec<usize>,
    group_vectors: Vec<Vec<C64>>,
    core_cov: ComplexMatrix,
}

impl CoherenceStructure {
    pub fn new(groups: Vec<usize>, group_vectors: Vec<Vec<C64>>, core_cov: ComplexMatrix) -> Result<Self> {
        if groups.is_empty() || groups.contains(&0) {
            return Err(Error::InvalidConfig("group sizes must be positive"));
        }
        if groups.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("group sizes must be non-increasing"));
        }
        if group_vectors.len() != groups.len() {
            return Err(Error::InvalidGroupVector("one vector per group required"));
        }
        for (v, &g) in group_vectors.iter().zip(&groups) {
            if v.len() != g {
                return Err(Error::InvalidGroupVector("vector length differs from group size"));
            }
            if v.iter().any(|z| !(z.norm() > 0.0) || !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidGroupVector("entries must be finite and nonzero"));
            }
            let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidGroupVector("vector must have unit norm"));
            }
        }
        let g = groups.len();
        if core_cov.shape() != (g, g) {
            return Err(Error::InvalidConfig("core covariance must be G x G"));
        }
        let eig = hermitian_eig(&core_cov)?;
        let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let lmin = eig.values.last().copied().unwrap_or(0.0);
        if lmin < -1e-10 * (1.0 + lmax) {
            return Err(Error::NotPsd { min_eig: lmin });
        }
        Ok(Self {
            groups,
            group_vectors,
            core_cov,
        })
    }

    /// `G = K` singleton groups with the given source powers.
    pub fn diagonal(powers: &[f64]) -> Result<Self> {
        let k = powers.len();
        Self::new(
            vec![1; k],
            vec![vec![C64::new(1.0, 0.0)]; k],
            ComplexMatrix::from_real_diagonal(powers),
        )
    }

    /// Groups whose vectors have equal-modulus entries `1/√g_j` with i.i.d.
    /// uniform phases.
    pub fn random_phases<R: RngCore + ?Sized>(groups: Vec<usize>, core_cov: ComplexMatrix, rng: &mut R) -> Result<Self> {
        let vectors = groups
            .iter()
            .map(|&g| equal_modulus_vector(g, rng))
            .collect();
        Self::new(groups, vectors, core_cov)
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_vectors(&self) -> &[Vec<C64>] {
        &self.group_vectors
    }

    pub fn core_cov(&self) -> &ComplexMatrix {
        &self.core_cov
    }

    pub fn num_sources(&self) -> usize {
        self.groups.iter().sum()
    }

    /// `(start, end)` source index range of each group.
    pub fn group_ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.groups
            .iter()
            .map(|&g| {
                let r = (start, start + g);
                start += g;
                r
            })
            .collect()
    }

    /// The block-diagonal `K x G` matrix `diag(v_1, …, v_G)`.
    pub fn block_matrix(&self) -> ComplexMatrix {
        let mut d = ComplexMatrix::zeros(self.num_sources(), self.groups.len());
        for (j, ((s, _), v)) in self.group_ranges().iter().zip(&self.group_vectors).enumerate() {
            for (l, &z) in v.iter().enumerate() {
                d[(s + l, j)] = z;
            }
        }
        d
    }
}

fn equal_modulus_vector<R: RngCore + ?Sized>(g: usize, rng: &mut R) -> Vec<C64> {
    let modulus = 1.0 / libm::sqrt(g as f64);
    (0..g)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            C64::from_polar(modulus, 2.0 * PI * u)
        })
        .collect()
}

/// Hermitian PSD source covariance `Σ` and its numerical rank.
#[derive(Debug, Clone)]
pub struct SourceCovariance {
    pub sigma_full: ComplexMatrix,
    pub rank: usize,
}

fn numerical_rank(values: &[f64]) -> usize {
    let lmax = values.first().copied().unwrap_or(0.0);
    values.iter().filter(|&&l| l > 1e-10 * lmax && l > 0.0).count()
}

/// Assembles `Σ` from its coherent-group factorization.
pub fn build_source_covariance(c: &CoherenceStructure) -> Result<SourceCovariance> {
    let d = c.block_matrix();
    let sigma = d.matmul(&c.core_cov).matmul(&d.adjoint()).hermitian_part();
    let eig = hermitian_eig(&sigma)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.values.last().copied().unwrap_or(0.0);
    if lmin < -1e-10 * (1.0 + lmax) {
        return Err(Error::NotPsd { min_eig: lmin });
    }
    Ok(SourceCovariance {
        rank: numerical_rank(&eig.values),
        sigma_full: sigma,
    })
}

/// Full generative description of one scenario.
///
/// Serializes with the field names `freqs, groups, group_vectors, core_cov,
/// n_sensors, subarray_m, smoothing_p, snapshots, noise_sigma, seed`.
/// Omitting `groups` means `K` singleton groups; omitting `group_vectors`
/// draws equal-modulus random-phase vectors from the seed; omitting
/// `core_cov` means the identity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub freqs: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub groups: Option<Vec<usize>>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub group_vectors: Option<Vec<Vec<C64>>>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub core_cov: Option<ComplexMatrix>,
    pub n_sensors: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub subarray_m: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub smoothing_p: Option<usize>,
    pub snapshots: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Noncoherent unit-power sources, no smoothing.
    pub fn noncoherent(freqs: &[f64], n_sensors: usize, snapshots: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            freqs: freqs.to_vec(),
            groups: None,
            group_vectors: None,
            core_cov: None,
            n_sensors,
            subarray_m: None,
            smoothing_p: None,
            snapshots,
            noise_sigma,
            seed,
        }
    }

    /// Sets the subarray length `M` (and `P = N - M + 1`).
    pub fn with_subarray(mut self, m: usize) -> Self {
        self.subarray_m = Some(m);
        self.smoothing_p = Some((self.n_sensors + 1).saturating_sub(m));
        self
    }

    pub fn num_sources(&self) -> usize {
        self.freqs.len()
    }

    pub fn frequency_set(&self) -> Result<FrequencySet> {
        FrequencySet::new(self.freqs.clone())
    }

    /// `(M, P)` when smoothing parameters are present.
    pub fn subarray(&self) -> Result<Option<(usize, usize)>> {
        let n = self.n_sensors;
        match (self.subarray_m, self.smoothing_p) {
            (None, None) => Ok(None),
            (Some(m), p) => {
                if m == 0 || m > n {
                    return Err(Error::SubarrayTooLarge { m, n });
                }
                let derived = n + 1 - m;
                if p.is_some_and(|p| p != derived) {
                    return Err(Error::InvalidConfig("subarray_m + smoothing_p must equal n_sensors + 1"));
                }
                Ok(Some((m, derived)))
            }
            (None, Some(p)) => {
                if p == 0 || p > n {
                    return Err(Error::InvalidConfig("smoothing_p must be between 1 and n_sensors"));
                }
                Ok(Some((n + 1 - p, p)))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_frequencies(&self.freqs)?;
        if self.n_sensors == 0 {
            return Err(Error::InvalidConfig("n_sensors must be positive"));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidConfig("snapshots must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be finite and non-negative"));
        }
        let k = self.num_sources();
        match self.subarray()? {
            Some((m, _)) if m < k + 1 => Err(Error::InvalidConfig("subarray_m must be at least K + 1")),
            None if self.n_sensors < k + 1 => Err(Error::InvalidConfig("n_sensors must be at least K + 1")),
            _ => {
                self.coherence()?;
                Ok(())
            }
        }
    }

    /// Resolves the coherence fields (with defaults) into a validated structure.
    pub fn coherence(&self) -> Result<CoherenceStructure> {
        let k = self.num_sources();
        let groups = self.groups.clone().unwrap_or_else(|| vec![1; k]);
        if groups.iter().sum::<usize>() != k {
            return Err(Error::InvalidConfig("group sizes must sum to the number of frequencies"));
        }
        let core = match &self.core_cov {
            Some(c) => c.clone(),
            None => ComplexMatrix::identity(groups.len()),
        };
        match &self.group_vectors {
            Some(v) => CoherenceStructure::new(groups, v.clone(), core),
            None => {
                let mut rng = stream_rng(self.seed, u64::MAX, 0, StreamRole::Structure);
                CoherenceStructure::random_phases(groups, core, &mut rng)
            }
        }
    }

    pub fn source_covariance(&self) -> Result<SourceCovariance> {
        build_source_covariance(&self.coherence()?)
    }

    /// The `N x K` array manifold.
    pub fn manifold(&self) -> Result<ComplexMatrix> {
        vandermonde(&self.freqs, self.n_sensors)
    }
}

/// An `N x L` data block, optionally carrying the synthetic ground truth.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub y: ComplexMatrix,
    pub a: Option<ComplexMatrix>,
    pub s: Option<ComplexMatrix>,
    pub e: Option<ComplexMatrix>,
}

impl SnapshotMatrix {
    pub fn from_data(y: ComplexMatrix) -> Self {
        Self {
            y,
            a: None,
            s: None,
            e: None,
        }
    }

    pub fn sensors(&self) -> usize {
        self.y.rows()
    }

    pub fn snapshots(&self) -> usize {
        self.y.cols()
    }

    /// `Σ̂ = S Sᴴ / L` when the source block is known.
    pub fn sample_source_covariance(&self) -> Option<ComplexMatrix> {
        self.s.as_ref().map(|s| s.gram_rows().scale(1.0 / s.cols() as f64))
    }
}

/// `W` with `W Wᴴ = Σ`, one column per numerically nonzero eigenvalue.
fn covariance_factor(sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(sigma)?;
    let rank = numerical_rank(&eig.values);
    let mut w = ComplexMatrix::zeros(sigma.rows(), rank);
    for j in 0..rank {
        let root = libm::sqrt(eig.values[j]);
        for i in 0..sigma.rows() {
            w[(i, j)] = eig.vectors[(i, j)] * root;
        }
    }
    Ok(w)
}

/// Trial 0 of the scenario.
pub fn generate_snapshots(cfg: &ScenarioConfig) -> Result<SnapshotMatrix> {
    generate_trial(cfg, 0, 0)
}

/// Draws one realization; sources and noise come from separate streams keyed
/// by `(cfg.seed, sweep_index, trial_index)`.
pub fn generate_trial(cfg: &ScenarioConfig, sweep_index: u64, trial_index: u64) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let sigma = cfg.source_covariance()?;
    generate_with_covariance(cfg, &sigma.sigma_full, sweep_index, trial_index)
}

/// Like [`generate_trial`] with a precomputed source covariance, so Monte
/// Carlo loops do not refactor `Σ` for every trial.
pub fn generate_with_covariance(
    cfg: &ScenarioConfig,
    sigma: &ComplexMatrix,
    sweep_index: u64,
    trial_index: u64,
) -> Result<SnapshotMatrix> {
    let (n, l) = (cfg.n_sensors, cfg.snapshots);
    let a = vandermonde(&cfg.freqs, n)?;
    let w = covariance_factor(sigma)?;
    let mut src_rng = stream_rng(cfg.seed, sweep_index, trial_index, StreamRole::Source);
    let white = complex_gaussian_matrix(&mut src_rng, w.cols(), l, 1.0);
    let s = w.matmul(&white);
    let clean = a.matmul(&s);
    let e = if cfg.noise_sigma > 0.0 {
        let mut noise_rng = stream_rng(cfg.seed, sweep_index, trial_index, StreamRole::Noise);
        complex_gaussian_matrix(&mut noise_rng, n, l, cfg.noise_sigma * cfg.noise_sigma)
    } else {
        ComplexMatrix::zeros(n, l)
    };
    let y = clean.add(&e);
    Ok(SnapshotMatrix {
        y,
        a: Some(a),
        s: Some(s),
        e: Some(e),
    })
}

/// `C_P = (1/P) conj(A_Pᴴ A_P)`: unit-diagonal `K x K` correlation matrix
/// induced by averaging over `P` subarray shifts.
pub fn correlation_matrix_cp(freqs: &[f64], p: usize) -> Result<ComplexMatrix> {
    if p == 0 {
        return Err(Error::InvalidConfig("smoothing count P must be positive"));
    }
    let ap = vandermonde(freqs, p)?;
    let mut c = ap.adjoint().matmul(&ap).conj().scale(1.0 / p as f64);
    for k in 0..freqs.len() {
        c[(k, k)] = C64::new(1.0, 0.0);
    }
    Ok(c.hermitian_part())
}

/// Smoothed source covariance: `Σ ⊙ C_P` for forward-only smoothing and its
/// forward-backward symmetrization `½(Σ_SS + Z^{1-M} conj(Σ_SS) Z^{M-1})`.
/// Without smoothing `Σ` is returned unchanged.
pub fn smoothed_source_covariance(
    sigma: &ComplexMatrix,
    freqs: &[f64],
    p: usize,
    mode: Smoothing,
    m: usize,
) -> Result<ComplexMatrix> {
    let k = freqs.len();
    if sigma.shape() != (k, k) {
        return Err(Error::DimensionMismatch("source covariance must be K x K"));
    }
    if mode == Smoothing::None {
        return Ok(sigma.clone());
    }
    let foss = sigma.hadamard(&correlation_matrix_cp(freqs, p)?).hermitian_part();
    if mode == Smoothing::Foss {
        return Ok(foss);
    }
    if m == 0 {
        return Err(Error::InvalidConfig("forward-backward smoothing needs the subarray length M"));
    }
    let shift = (m - 1) as f64;
    let back = ComplexMatrix::from_fn(k, k, |i, j| {
        let x = shift * (freqs[j] - freqs[i]);
        let turns = x - libm::trunc(x);
        foss[(i, j)].conj() * C64::from_polar(1.0, 2.0 * PI * turns)
    });
    Ok(foss.add(&back).scale(0.5).hermitian_part())
}

/// Frequency to direction of arrival in degrees (half-wavelength spacing).
pub fn doa_from_frequency(f: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&f) {
        return Err(Error::FrequencyOutOfRange(f));
    }
    let x = if f < 0.5 { 2.0 * f } else { 2.0 * f - 2.0 };
    Ok(libm::asin(x).to_degrees())
}

/// Inverse of [`doa_from_frequency`] on `[-90°, 90°)`.
pub fn frequency_from_doa(theta_deg: f64) -> Result<f64> {
    if !(-90.0..90.0).contains(&theta_deg) {
        return Err(Error::AngleOutOfRange(theta_deg));
    }
    let half = 0.5 * libm::sin(theta_deg.to_radians());
    Ok(if half >= 0.0 { half } else { half + 1.0 })
}
