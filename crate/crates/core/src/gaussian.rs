//! Phase-space linear algebra for Gaussian states: covariance matrices,
//! symplectic transforms and spectra, homodyne conditioning, and the
//! Gaussian entropy function.
//!
//! # Conventions
//!
//! Quadratures are ordered `(x1, p1, x2, p2, ...)` and normalized to
//! shot-noise units, so the vacuum covariance matrix is the identity. The
//! symplectic form is block diagonal with `[[0, 1], [-1, 0]]` per mode.
//! These conventions are an implementation choice; all constructors and
//! operations in the crate assume them.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tol;

/// Standard symplectic form for `n_modes` modes.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// Which quadrature a homodyne detector measures.
///
/// Doubles as the rank-one projector used in conditioning formulas:
/// `diag(1, 0)` for X and `diag(0, 1)` for P. The projector is idempotent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn projector(self) -> Matrix2<f64> {
        match self {
            Quadrature::X => Matrix2::new(1.0, 0.0, 0.0, 0.0),
            Quadrature::P => Matrix2::new(0.0, 0.0, 0.0, 1.0),
        }
    }
}

/// Linear quadrature map preserving the symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wraps a square matrix after checking `S * Omega * S^T = Omega`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim % 2 != 0 {
            return Err(Error::NonPhysicalMatrix {
                reason: format!("symplectic transform must be square 2n x 2n, got {dim}x{}", matrix.ncols()),
            });
        }
        let om = omega(dim / 2);
        let residual = &matrix * &om * matrix.transpose() - &om;
        let worst = residual.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if worst > tol::SYMPLECTIC_FORM {
            return Err(Error::NonPhysicalMatrix {
                reason: format!("symplectic form violated by {worst:.3e}"),
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Block-diagonal composition `self ⊕ other`.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> SymplecticTransform {
        let a = self.matrix.nrows();
        let b = other.matrix.nrows();
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        // Both summands already satisfy the form, so the sum does too.
        SymplecticTransform { matrix: m }
    }

    /// Composition `self * other` (apply `other` first).
    pub fn compose(&self, other: &SymplecticTransform) -> SymplecticTransform {
        SymplecticTransform {
            matrix: &self.matrix * &other.matrix,
        }
    }
}

/// Symmetric second-moment matrix of quadratures in shot-noise units.
///
/// Construction enforces symmetry, the shot-noise floor on the diagonal,
/// and the uncertainty bound (all symplectic eigenvalues at least 1, up to
/// [`tol::PHYSICALITY`]).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || dim % 2 != 0 || entries.ncols() != dim {
            return Err(Error::NonPhysicalMatrix {
                reason: format!("covariance matrix must be 2n x 2n, got {dim}x{}", entries.ncols()),
            });
        }
        let scale = entries.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (entries[(i, j)] - entries[(j, i)]).abs() > tol::SYMMETRY_REL * scale {
                    return Err(Error::NonPhysicalMatrix {
                        reason: format!(
                            "asymmetric at ({i},{j}): {} vs {}",
                            entries[(i, j)],
                            entries[(j, i)]
                        ),
                    });
                }
            }
        }
        for i in 0..dim {
            if entries[(i, i)] < 1.0 - tol::PHYSICALITY {
                return Err(Error::NonPhysicalMatrix {
                    reason: format!("diagonal entry {i} = {} below shot noise", entries[(i, i)]),
                });
            }
        }
        let spectrum = symplectic_spectrum_raw(&entries)?;
        if let Some(&nu_min) = spectrum.last() {
            if nu_min < 1.0 - tol::PHYSICALITY {
                return Err(Error::NonPhysicalMatrix {
                    reason: format!("symplectic eigenvalue {nu_min} below 1"),
                });
            }
        }
        Ok(Self {
            n_modes: dim / 2,
            entries,
        })
    }

    /// Vacuum state on `n_modes` modes (identity matrix).
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// 2x2 block coupling mode `i` to mode `j` (their covariance block for
    /// `i != j`, the mode's own covariance for `i == j`).
    pub fn mode_block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let b = self.entries.view((2 * i, 2 * j), (2, 2));
        Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)])
    }

    /// Congruence `S * gamma * S^T` by a symplectic transform on all modes.
    pub fn transform(&self, s: &SymplecticTransform) -> Result<CovarianceMatrix> {
        if s.n_modes() != self.n_modes {
            return Err(Error::NonPhysicalMatrix {
                reason: format!(
                    "transform acts on {} modes but state has {}",
                    s.n_modes(),
                    self.n_modes
                ),
            });
        }
        let m = s.matrix() * &self.entries * s.matrix().transpose();
        // Symmetrize to scrub roundoff before revalidating.
        let sym = (&m + m.transpose()) * 0.5;
        CovarianceMatrix::new(sym)
    }

    /// `self ⊕ other` on the combined mode set.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let a = self.entries.nrows();
        let b = other.entries.nrows();
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        CovarianceMatrix {
            n_modes: self.n_modes + other.n_modes,
            entries: m,
        }
    }
}

/// Moore-Penrose pseudoinverse of a real square matrix.
///
/// Singular values below [`tol::PSEUDO_RANK_REL`] times the largest one are
/// treated as zero, so rank-deficient inputs (including the zero matrix)
/// are handled without error.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let s_max = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
    if s_max == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let cutoff = s_max * tol::PSEUDO_RANK_REL;
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut s_inv = DMatrix::zeros(v_t.nrows(), u.ncols());
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff {
            s_inv[(k, k)] = 1.0 / sv;
        }
    }
    v_t.transpose() * s_inv * u.transpose()
}

/// Symplectic eigenvalues of a raw symmetric positive-definite matrix,
/// one per mode, in descending order.
///
/// The eigenvalues of the real matrix `(Omega * gamma)^2` are `-nu_i^2`,
/// each appearing twice; a real Schur-based solver avoids complex
/// arithmetic. Consecutive pairs of the sorted magnitudes are averaged to
/// cancel solver noise within each degenerate pair.
pub fn symplectic_spectrum_raw(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = gamma.nrows();
    let n_modes = dim / 2;
    let sym_eigen = gamma.clone().symmetric_eigen();
    let min_eig = sym_eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::NonPositiveMatrix {
            min_eigenvalue: min_eig,
        });
    }
    let og = omega(n_modes) * gamma;
    let og2 = &og * &og;
    let eigs = og2.complex_eigenvalues();
    let mut magnitudes: Vec<f64> = eigs.iter().map(|z| z.norm().sqrt()).collect();
    magnitudes.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let spectrum = (0..n_modes)
        .map(|k| 0.5 * (magnitudes[2 * k] + magnitudes[2 * k + 1]))
        .collect();
    Ok(spectrum)
}

/// Symplectic eigenvalues of a covariance matrix, descending.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<Vec<f64>> {
    symplectic_spectrum_raw(gamma.matrix())
}

/// Closed-form symplectic eigenvalues of the standard two-mode state with
/// diagonal blocks `a*I`, `b*I` and off-diagonal block `c*sigma_z`.
///
/// With `A = a^2 + b^2 - 2c^2` and `B = ab - c^2`, the eigenvalues are
/// `sqrt((A +- sqrt(A^2 - 4B^2)) / 2)`, returned largest first.
pub fn two_mode_symplectic_eigenvalues(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    let big_a = a * a + b * b - 2.0 * c * c;
    let big_b = a * b - c * c;
    let disc = big_a * big_a - 4.0 * big_b * big_b;
    if disc < -tol::PHYSICALITY || big_b <= 0.0 {
        return Err(Error::NonPhysicalInput { a, b, c });
    }
    let root = disc.max(0.0).sqrt();
    let lambda_1 = (0.5 * (big_a + root)).sqrt();
    let lambda_2 = (0.5 * (big_a - root)).max(0.0).sqrt();
    Ok((lambda_1, lambda_2))
}

/// Gaussian entropy function in bits: `G(x) = (x+1) log2(x+1) - x log2 x`,
/// with `G(0) = 0`.
///
/// Tiny negative arguments (within [`tol::G_ENTROPY_CLAMP`]) are clamped to
/// zero; anything more negative is a domain error.
pub fn g_entropy(x: f64) -> Result<f64> {
    if x < -tol::G_ENTROPY_CLAMP {
        return Err(Error::Domain {
            what: "g_entropy",
            value: x,
        });
    }
    let x = x.max(0.0);
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Conditional covariance matrix after an ideal homodyne measurement of one
/// quadrature of one mode.
///
/// Returns `gamma_rest - C * (X * gamma_mode * X)^+ * C^T` with the
/// measured mode removed from the result, where `X` projects onto the
/// measured quadrature and `+` is the Moore-Penrose pseudoinverse.
pub fn condition_on_homodyne(
    gamma: &CovarianceMatrix,
    mode_index: usize,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    let n = gamma.n_modes();
    if mode_index >= n {
        return Err(Error::BadModeIndex {
            index: mode_index,
            n_modes: n,
        });
    }
    let dim = 2 * n;
    let kept: Vec<usize> = (0..dim)
        .filter(|&r| r / 2 != mode_index)
        .collect();
    let meas = [2 * mode_index, 2 * mode_index + 1];

    let mut gamma_rest = DMatrix::zeros(dim - 2, dim - 2);
    for (i, &ri) in kept.iter().enumerate() {
        for (j, &rj) in kept.iter().enumerate() {
            gamma_rest[(i, j)] = gamma.matrix()[(ri, rj)];
        }
    }
    let mut cross = DMatrix::zeros(dim - 2, 2);
    for (i, &ri) in kept.iter().enumerate() {
        for (j, &rj) in meas.iter().enumerate() {
            cross[(i, j)] = gamma.matrix()[(ri, rj)];
        }
    }
    let gamma_mode = DMatrix::from_fn(2, 2, |i, j| gamma.matrix()[(meas[i], meas[j])]);
    let proj = {
        let p = quadrature.projector();
        DMatrix::from_fn(2, 2, |i, j| p[(i, j)])
    };
    let projected = &proj * gamma_mode * &proj;
    let reduced = &gamma_rest - &cross * pseudo_inverse(&projected) * cross.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    CovarianceMatrix::new(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pseudo_inverse_rank_one_diagonal() {
        let m = dmatrix![0.0, 0.0; 0.0, 2.0];
        let p = pseudo_inverse(&m);
        assert!(close(p[(0, 0)], 0.0, 1e-14));
        assert!(close(p[(1, 1)], 0.5, 1e-14));
    }

    #[test]
    fn pseudo_inverse_zero_matrix() {
        let m = DMatrix::zeros(2, 2);
        let p = pseudo_inverse(&m);
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pseudo_inverse_projected_block_satisfies_penrose() {
        // X_p * diag(3, 5) * X_p = diag(0, 5), whose pseudoinverse is diag(0, 0.2).
        let xp = Quadrature::P.projector();
        let m = xp * Matrix2::new(3.0, 0.0, 0.0, 5.0) * xp;
        let m = DMatrix::from_fn(2, 2, |i, j| m[(i, j)]);
        let p = pseudo_inverse(&m);
        assert!(close(p[(1, 1)], 0.2, 1e-14));
        assert!(close(p[(0, 0)], 0.0, 1e-14));

        // The four Penrose identities.
        let mpm = &m * &p * &m;
        let pmp = &p * &m * &p;
        let mp = &m * &p;
        let pm = &p * &m;
        assert!((&mpm - &m).norm() < 1e-10);
        assert!((&pmp - &p).norm() < 1e-10);
        assert!((&mp - mp.transpose()).norm() < 1e-10);
        assert!((&pm - pm.transpose()).norm() < 1e-10);
    }

    #[test]
    fn two_mode_spectrum_of_vacua_is_unit() {
        let (l1, l2) = two_mode_symplectic_eigenvalues(1.0, 1.0, 0.0).unwrap();
        assert!(close(l1, 1.0, 1e-12));
        assert!(close(l2, 1.0, 1e-12));
    }

    #[test]
    fn two_mode_spectrum_of_pure_epr_is_unit() {
        let c = 399.0f64.sqrt();
        let (l1, l2) = two_mode_symplectic_eigenvalues(20.0, 20.0, c).unwrap();
        assert!(close(l1, 1.0, 1e-6));
        assert!(close(l2, 1.0, 1e-6));
    }

    #[test]
    fn two_mode_spectrum_lossy_channel() {
        let (l1, l2) = two_mode_symplectic_eigenvalues(20.0, 10.505, 14.1245).unwrap();
        assert!(close(l1, 10.504, 1e-3));
        assert!(close(l2, 1.0092, 1e-3));
    }

    #[test]
    fn two_mode_spectrum_rejects_non_physical() {
        assert!(matches!(
            two_mode_symplectic_eigenvalues(1.0, 1.0, 1.5),
            Err(Error::NonPhysicalInput { .. })
        ));
    }

    #[test]
    fn g_entropy_known_values() {
        assert_eq!(g_entropy(0.0).unwrap(), 0.0);
        assert!(close(g_entropy(1.0).unwrap(), 2.0, 1e-12));
        assert!(close(g_entropy(0.5).unwrap(), 1.37744, 1e-5));
    }

    #[test]
    fn g_entropy_clamps_tiny_negative_and_rejects_large() {
        assert_eq!(g_entropy(-1e-13).unwrap(), 0.0);
        assert!(matches!(
            g_entropy(-0.1),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn general_spectrum_vacuum_and_thermal() {
        let vac = CovarianceMatrix::vacuum(1);
        let nus = symplectic_eigenvalues(&vac).unwrap();
        assert_eq!(nus.len(), 1);
        assert!(close(nus[0], 1.0, 1e-10));

        let thermal = CovarianceMatrix::new(DMatrix::identity(2, 2) * 3.0).unwrap();
        let nus = symplectic_eigenvalues(&thermal).unwrap();
        assert!(close(nus[0], 3.0, 1e-10));
    }

    #[test]
    fn spectrum_rejects_non_positive() {
        let m = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            symplectic_spectrum_raw(&m),
            Err(Error::NonPositiveMatrix { .. })
        ));
    }

    #[test]
    fn covariance_rejects_asymmetric_and_subvacuum() {
        let m = dmatrix![1.0, 0.5; 0.2, 1.0];
        assert!(CovarianceMatrix::new(m).is_err());

        let m = dmatrix![0.5, 0.0; 0.0, 0.5];
        assert!(CovarianceMatrix::new(m).is_err());
    }

    fn two_mode_epr_like(a: f64, b: f64, c: f64) -> CovarianceMatrix {
        let m = dmatrix![
            a, 0.0, c, 0.0;
            0.0, a, 0.0, -c;
            c, 0.0, b, 0.0;
            0.0, -c, 0.0, b
        ];
        CovarianceMatrix::new(m).unwrap()
    }

    #[test]
    fn conditioning_product_state_is_identity_on_rest() {
        let gamma = CovarianceMatrix::new(DMatrix::identity(4, 4) * 2.0).unwrap();
        let cond = condition_on_homodyne(&gamma, 1, Quadrature::X).unwrap();
        assert_eq!(cond.n_modes(), 1);
        assert!(close(cond.matrix()[(0, 0)], 2.0, 1e-12));
        assert!(close(cond.matrix()[(1, 1)], 2.0, 1e-12));
    }

    #[test]
    fn conditioning_matches_schur_complement() {
        let (a, b, c) = (20.0, 10.505, 14.1245);
        let gamma = two_mode_epr_like(a, b, c);
        let cond = condition_on_homodyne(&gamma, 1, Quadrature::X).unwrap();
        // Measuring x_B collapses Alice's x variance to a - c^2/b and leaves p alone.
        assert!(close(cond.matrix()[(0, 0)], a - c * c / b, 1e-10));
        assert!(close(cond.matrix()[(1, 1)], a, 1e-10));
        assert!(close(cond.matrix()[(0, 1)], 0.0, 1e-10));
    }

    #[test]
    fn conditioning_rejects_bad_mode() {
        let gamma = CovarianceMatrix::vacuum(2);
        assert!(matches!(
            condition_on_homodyne(&gamma, 2, Quadrature::X),
            Err(Error::BadModeIndex { .. })
        ));
    }

    #[test]
    fn symplectic_transform_rejects_non_symplectic() {
        let m = DMatrix::identity(2, 2) * 2.0;
        assert!(SymplecticTransform::new(m).is_err());
    }
}
