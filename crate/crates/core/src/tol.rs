//! Numerical tolerances used across the crate, collected in one place so
//! every threshold has a single authoritative value.

/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_REL: f64 = 1e-12;

/// Max-norm tolerance on `S * Omega * S^T - Omega` for square symplectic
/// transforms.
pub const SYMPLECTIC_FORM: f64 = 1e-12;

/// Physicality slack: symplectic eigenvalues and diagonal entries of a
/// covariance matrix must be at least `1 - PHYSICALITY`. Pure states sit
/// exactly on the boundary and round off in either direction.
pub const PHYSICALITY: f64 = 1e-9;

/// Relative singular-value cutoff deciding the numerical rank inside the
/// Moore-Penrose pseudoinverse.
pub const PSEUDO_RANK_REL: f64 = 1e-12;

/// Arguments to the Gaussian entropy function in `[-G_ENTROPY_CLAMP, 0]`
/// are clamped to zero; they come from pure states whose symplectic
/// eigenvalue is 1 up to roundoff.
pub const G_ENTROPY_CLAMP: f64 = 1e-12;

/// Agreement required between the general symplectic eigenvalue solver and
/// the two-mode closed form.
pub const SPECTRUM_CROSS_CHECK: f64 = 1e-8;

/// Key rates below this are treated as zero when searching for the maximum
/// transmission distance, avoiding sign flutter at the boundary.
pub const KEY_RATE_ZERO: f64 = 1e-12;

/// Minimum excess of the B1 variance over shot noise for the angular-error
/// estimator; below this the arcsine denominator is unusable.
pub const MIN_SIGNAL_VARIANCE: f64 = 1e-6;

/// Round-trip tolerance for the bias prediction / inversion pair.
pub const BIAS_ROUND_TRIP: f64 = 1e-12;
