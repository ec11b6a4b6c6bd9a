use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use super::{svd_left, ComplexMatrix};
use crate::{Error, Result};

/// Orthonormal basis of an `r`-dimensional subspace of `C^p`.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: ComplexMatrix,
}

impl SubspaceBasis {
    /// Wraps a matrix with orthonormal columns; checks `bᴴb = I` to 1e-10.
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        let (p, r) = basis.shape();
        if r == 0 || r > p {
            return Err(Error::DimensionMismatch("subspace basis needs 1 <= r <= p"));
        }
        basis.ensure_finite()?;
        let gram = basis.adjoint().matmul(&basis);
        if gram.sub(&ComplexMatrix::identity(r)).norm_max() > 1e-10 {
            return Err(Error::DimensionMismatch("basis columns are not orthonormal"));
        }
        Ok(Self { basis })
    }

    pub(crate) fn new_unchecked(basis: ComplexMatrix) -> Self {
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.basis
    }

    /// Orthogonal projector `U Uᴴ`.
    pub fn projector(&self) -> ComplexMatrix {
        self.basis.matmul(&self.basis.adjoint())
    }

    /// `‖(I - U Uᴴ) x‖`.
    pub fn residual_norm(&self, x: &[C64]) -> f64 {
        let coeffs = self.basis.adjoint().mul_vec(x);
        let proj = self.basis.mul_vec(&coeffs);
        libm::sqrt(x.iter().zip(&proj).map(|(a, b)| (a - b).norm_sqr()).sum())
    }
}

/// Top-`r` left singular subspace of `m`, plus all singular values (descending).
pub fn svd_top_subspace(m: &ComplexMatrix, r: usize) -> Result<(SubspaceBasis, Vec<f64>)> {
    let max = m.rows().min(m.cols());
    if r == 0 || r > max {
        return Err(Error::RankRequestTooLarge { requested: r, max });
    }
    let (u, s) = svd_left(m)?;
    Ok((SubspaceBasis::new_unchecked(u.col_block(0, r)), s))
}

/// Orthonormal basis for the column span of a full-column-rank matrix.
pub fn orthonormal_basis(m: &ComplexMatrix) -> Result<SubspaceBasis> {
    svd_top_subspace(m, m.cols()).map(|(b, _)| b)
}

pub fn projector(u: &SubspaceBasis) -> ComplexMatrix {
    u.projector()
}

fn check_pair(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<()> {
    if u.ambient_dim() != v.ambient_dim() || u.dim() != v.dim() {
        return Err(Error::DimensionMismatch("subspaces differ in ambient dimension or rank"));
    }
    Ok(())
}

/// Canonical angles between two equal-dimension subspaces, ascending.
///
/// The cosines are the singular values of `vᴴu`, the sines those of
/// `(I - vvᴴ)u`; each angle is recovered with `atan2` so that both tiny and
/// near-right angles keep full relative accuracy.
pub fn canonical_angles(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<Vec<f64>> {
    check_pair(u, v)?;
    let cross = v.matrix().adjoint().matmul(u.matrix());
    let cosines = super::singular_values(&cross)?;
    let resid = u.matrix().sub(&v.matrix().matmul(&cross));
    let mut sines = super::singular_values(&resid)?;
    // descending cosines pair with ascending sines
    sines.reverse();
    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| libm::atan2(s, c.min(1.0)))
        .collect())
}

/// `‖sin Θ(u, v)‖`: the sine of the largest canonical angle, in `[0, 1]`.
pub fn subspace_distance(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64> {
    let angles = canonical_angles(u, v)?;
    let theta = angles.iter().copied().fold(0.0, f64::max);
    Ok(libm::sin(theta).clamp(0.0, 1.0))
}

/// `‖P_u - P_v‖`, the projection form of the same distance.
pub fn projection_distance(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64> {
    check_pair(u, v)?;
    Ok(u.projector().sub(&v.projector()).norm_spectral())
}

/// `a(f) = [1, e^{i2πf}, …, e^{i2π(n-1)f}]ᵀ`.
pub fn steering_vector(f: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            // reduce the phase before scaling to keep it accurate for large k
            let x = k as f64 * f;
            let turns = x - libm::trunc(x);
            C64::from_polar(1.0, 2.0 * core::f64::consts::PI * turns)
        })
        .collect()
}

/// `n x K` Vandermonde matrix with columns `a(f_k)`.
pub fn vandermonde(freqs: &[f64], n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::DimensionMismatch("vandermonde needs n >= 1"));
    }
    crate::model::validate_frequencies(freqs)?;
    let cols: Vec<Vec<C64>> = freqs.iter().map(|&f| steering_vector(f, n)).collect();
    Ok(ComplexMatrix::from_fn(n, freqs.len(), |i, j| cols[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eig;
    use crate::rng::TestRng;
    use alloc::vec;

    fn e(i: usize, p: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(p, 1, |r, _| C64::new(if r == i { 1.0 } else { 0.0 }, 0.0))
    }

    fn random_basis(rng: &mut TestRng, p: usize, r: usize) -> SubspaceBasis {
        orthonormal_basis(&rng.gaussian_matrix(p, r)).unwrap()
    }

    #[test]
    fn identical_and_orthogonal() {
        let mut rng = TestRng::new(2);
        let u = random_basis(&mut rng, 6, 2);
        assert!(subspace_distance(&u, &u).unwrap() < 1e-15);
        let a = SubspaceBasis::new(e(0, 2)).unwrap();
        let b = SubspaceBasis::new(e(1, 2)).unwrap();
        assert!((subspace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_forms_agree_and_symmetric() {
        let mut rng = TestRng::new(13);
        for _ in 0..50 {
            let u = random_basis(&mut rng, 10, 3);
            let v = random_basis(&mut rng, 10, 3);
            let d = subspace_distance(&u, &v).unwrap();
            assert!((d - projection_distance(&u, &v).unwrap()).abs() <= 1e-8);
            assert!((d - subspace_distance(&v, &u).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn small_angles_keep_accuracy() {
        let mut rng = TestRng::new(17);
        let u = random_basis(&mut rng, 8, 2);
        let tilt = rng.gaussian_matrix(8, 2).scale(1e-11);
        let v = orthonormal_basis(&u.matrix().add(&tilt)).unwrap();
        let d = subspace_distance(&u, &v).unwrap();
        let p = projection_distance(&u, &v).unwrap();
        assert!(d > 0.0 && d < 1e-10);
        assert!((d - p).abs() < 1e-14);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let mut rng = TestRng::new(1);
        let u = random_basis(&mut rng, 5, 2);
        let v = random_basis(&mut rng, 5, 3);
        assert!(matches!(subspace_distance(&u, &v), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn top_subspace_of_diagonal() {
        let m = ComplexMatrix::from_real_diagonal(&[5.0, 2.0]);
        let (b, s) = svd_top_subspace(&m, 1).unwrap();
        assert_eq!(s, vec![5.0, 2.0]);
        let e1 = SubspaceBasis::new(e(0, 2)).unwrap();
        assert!(subspace_distance(&b, &e1).unwrap() < 1e-15);
        assert!(matches!(
            svd_top_subspace(&m, 3),
            Err(Error::RankRequestTooLarge { requested: 3, max: 2 })
        ));
    }

    #[test]
    fn top_subspace_of_isometry_is_its_range() {
        let mut rng = TestRng::new(4);
        let q = random_basis(&mut rng, 7, 3);
        let (b, s) = svd_top_subspace(q.matrix(), 3).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!(subspace_distance(&b, &q).unwrap() < 1e-12);
    }

    #[test]
    fn top_subspace_matches_eigen_route() {
        let mut rng = TestRng::new(23);
        let m = rng.gaussian_matrix(8, 40);
        let (b, _) = svd_top_subspace(&m, 3).unwrap();
        let eig = hermitian_eig(&m.gram_rows()).unwrap();
        let oracle = SubspaceBasis::new(eig.vectors.col_block(0, 3)).unwrap();
        assert!(subspace_distance(&b, &oracle).unwrap() <= 1e-8);
    }

    #[test]
    fn vandermonde_columns() {
        let a = vandermonde(&[0.0], 4).unwrap();
        assert!(a.as_slice().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let a = vandermonde(&[0.5], 4).unwrap();
        for (k, z) in a.as_slice().iter().enumerate() {
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - C64::new(want, 0.0)).norm() < 1e-15);
        }
        let a = vandermonde(&[0.1, 0.5, 0.8], 10).unwrap();
        let g = a.adjoint().matmul(&a);
        for k in 0..3 {
            assert!((g[(k, k)].re - 10.0).abs() <= 1e-10 * 10.0);
        }
        assert!(matches!(vandermonde(&[0.2, 0.2], 3), Err(Error::DuplicateFrequency(_))));
        assert!(matches!(vandermonde(&[1.0], 3), Err(Error::FrequencyOutOfRange(_))));
    }
}
