//! High-precision Gaussian-state toolkit for the vacuum entanglement of two
//! disjoint patches of the free lattice scalar field in one spatial
//! dimension.
//!
//! The crate builds the three patch-pair states that arise when the field
//! volume outside the patches is traced, measured in the field basis, or
//! measured in the conjugate-momentum basis; quantifies their logarithmic
//! negativities and separability radii; and decomposes them into two-body
//! entangled pairs through local Williamson and negativity-inspired
//! symplectic bases.
//!
//! Start with the runnable programs under `examples/`:
//!
//! ```bash
//! cargo run --release --example negativity_scan
//! cargo run --release --example separability_radius
//! cargo run --release --example williamson_two_body
//! ```

pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod observation;
pub mod precision;
pub mod quadrature;

pub use error::{Error, Result};
pub use gaussian::{
    check_physical, cm_from_gh, gh_from_cm, log_negativity, omega, partial_transpose,
    pt_symplectic_spectrum, CovarianceMatrix, GHPair, PTSpectrum, PhysicalityReport,
};
pub use lattice::{
    assemble_k_block, vacuum_gh, CorrelationKernel, KernelKind, LatticeSpec, Volume, MASSLESS,
};
pub use observation::{
    displacement_from_volume, mixture_reconstruction_check, noise_matrix, patch_state,
    MeasurementBasis, MixtureReport, NoiseMatrix, ObservationProtocol, PatchPair,
};
pub use precision::{
    determinant, eigen_reconstruction_residual, hp_inverse, inverse_residual,
    nonsym_eigen_similar, sym_eigen, sym_pd_roots, sym_pd_sqrt, HPMatrix, PrecisionContext,
};
