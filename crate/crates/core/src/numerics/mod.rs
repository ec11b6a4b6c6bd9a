//! Dense complex linear algebra and subspace geometry.

mod decomp;
mod matrix;
mod subspace;

pub use decomp::{
    eigenvalues, hermitian_eig, pseudo_inverse, qr_thin, singular_values, svd, svd_left,
    EigDecomposition, Svd,
};
pub use matrix::ComplexMatrix;
pub use subspace::{
    canonical_angles, orthonormal_basis, projection_distance, projector, subspace_distance,
    svd_top_subspace, vandermonde, steering_vector, SubspaceBasis,
};

/// `a <= tol * (1 + scale)`: the mixed absolute/relative test used throughout.
#[inline]
pub fn within(a: f64, tol: f64, scale: f64) -> bool {
    a <= tol * (1.0 + scale)
}
