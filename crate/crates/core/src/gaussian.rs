//! Covariance-matrix calculus for zero-mean Gaussian states.
//!
//! Conventions: shot-noise units (vacuum quadrature variance 1) and the
//! interleaved quadrature ordering `(x1, p1, x2, p2, ...)`. The symplectic form
//! is block diagonal with `[[0, 1], [-1, 0]]` per mode.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Relative tolerance for the symmetry check on covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Absolute tolerance on `S Ω Sᵀ = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Symplectic eigenvalues in `[1 - EIGEN_CLAMP, 1)` are treated as exactly 1.
pub const EIGEN_CLAMP: f64 = 1e-9;
/// Measured-quadrature variances at or below this are pseudo-inverted to zero.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Which quadrature a homodyne detector (or an estimator) acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::X => Quadrature::P,
            Quadrature::P => Quadrature::X,
        }
    }
}

/// Real symmetric `2n × 2n` matrix of quadrature second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape and symmetry, then stores the exactly symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        if rows == 0 || rows % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: rows + rows % 2,
                actual: rows,
            });
        }
        let scale = matrix.amax().max(1.0);
        let deviation = (&matrix - matrix.transpose()).amax();
        if !deviation.is_finite() || deviation > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { deviation });
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix })
    }

    /// `n`-mode vacuum.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state `diag(v, v)`.
    pub fn thermal(v: f64) -> Result<Self> {
        check_range("v", v, 1.0, f64::INFINITY, "thermal variance must be >= 1")?;
        Ok(Self {
            matrix: DMatrix::from_diagonal_element(2, 2, v),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn variance(&self, mode: usize, q: Quadrature) -> f64 {
        let i = 2 * mode + q.offset();
        self.matrix[(i, i)]
    }

    /// `⟨q_a q_b⟩` for the given quadrature of two modes.
    pub fn covariance(&self, mode_a: usize, mode_b: usize, q: Quadrature) -> f64 {
        self.matrix[(2 * mode_a + q.offset(), 2 * mode_b + q.offset())]
    }

    /// Block-diagonal `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let (a, b) = (self.matrix.nrows(), other.matrix.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        CovarianceMatrix { matrix: m }
    }

    /// Marginal over `modes`, in the given order. Also serves as a mode permutation.
    pub fn select_modes(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        let n = self.n_modes();
        let mut idx = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            if m >= n {
                return Err(Error::InvalidMode {
                    index: m,
                    n_modes: n,
                });
            }
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let k = idx.len();
        let m = DMatrix::from_fn(k, k, |i, j| self.matrix[(idx[i], idx[j])]);
        Ok(CovarianceMatrix { matrix: m })
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(self)
    }

    /// Von Neumann entropy in bits, `Σ G(ν_i)`.
    pub fn entropy(&self) -> Result<f64> {
        self.symplectic_eigenvalues()?
            .into_iter()
            .map(g_entropy)
            .sum()
    }

    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|&v| v >= 1.0 - EIGEN_CLAMP))
            .unwrap_or(false)
    }
}

/// The standard symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// A real matrix `S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || rows % 2 != 0 || rows == 0 {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: cols,
            });
        }
        let s = Self { matrix };
        let dev = s.symplectic_deviation();
        if !(dev < SYMPLECTIC_TOL) {
            return Err(Error::InvalidParameter {
                name: "symplectic",
                value: dev,
                reason: "S Ω Sᵀ deviates from Ω",
            });
        }
        Ok(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `‖S Ω Sᵀ − Ω‖∞` (max-abs entry).
    pub fn symplectic_deviation(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    /// `self` applied after `first`.
    pub fn then(&self, first: &SymplecticTransform) -> Result<SymplecticTransform> {
        if self.matrix.nrows() != first.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                actual: first.matrix.nrows(),
            });
        }
        Ok(SymplecticTransform {
            matrix: &self.matrix * &first.matrix,
        })
    }
}

/// Entropy function `G(ν)` in bits.
pub fn g_entropy(nu: f64) -> Result<f64> {
    if !nu.is_finite() || nu < 1.0 - EIGEN_CLAMP {
        return Err(Error::UnphysicalEigenvalue { value: nu });
    }
    if nu <= 1.0 {
        return Ok(0.0);
    }
    let plus = (nu + 1.0) / 2.0;
    let minus = (nu - 1.0) / 2.0;
    Ok(plus * plus.log2() - minus * minus.log2())
}

/// Symplectic spectrum (moduli of the eigenvalues of `iΩγ`), descending, one per mode.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let n = gamma.n_modes();
    let omega = symplectic_form(n);
    // For γ = L Lᵀ the antisymmetric A = Lᵀ Ω L is similar to Ωγ, and AᵀA carries
    // each ν² twice. This keeps the eigenproblem symmetric.
    let mut squares: Vec<f64> = match gamma.matrix.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let a = l.transpose() * &omega * &l;
            let h = a.transpose() * &a;
            let h = (&h + h.transpose()) * 0.5;
            SymmetricEigen::new(h)
                .eigenvalues
                .iter()
                .map(|v| v.max(0.0))
                .collect()
        }
        None => (&omega * &gamma.matrix)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm_sqr())
            .collect(),
    };
    squares.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = squares
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).sqrt())
        .collect();
    for v in &mut out {
        if *v >= 1.0 - EIGEN_CLAMP && *v < 1.0 {
            *v = 1.0;
        }
    }
    Ok(out)
}

/// `γ → S γ Sᵀ`.
pub fn apply_symplectic(
    gamma: &CovarianceMatrix,
    s: &SymplecticTransform,
) -> Result<CovarianceMatrix> {
    if gamma.matrix.nrows() != s.matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: gamma.matrix.nrows(),
            actual: s.matrix.nrows(),
        });
    }
    let m = &s.matrix * &gamma.matrix * s.matrix.transpose();
    Ok(CovarianceMatrix {
        matrix: (&m + m.transpose()) * 0.5,
    })
}

fn check_mode(index: usize, n_modes: usize) -> Result<()> {
    if index < n_modes {
        Ok(())
    } else {
        Err(Error::InvalidMode { index, n_modes })
    }
}

/// Beam splitter of transmittance `t` mixing `mode_a` and `mode_b`:
/// `a' = √t a + √(1−t) b`, `b' = −√(1−t) a + √t b` on both quadratures.
pub fn beam_splitter_symplectic(
    t: f64,
    mode_a: usize,
    mode_b: usize,
    n_modes: usize,
) -> Result<SymplecticTransform> {
    check_range("t", t, 0.0, 1.0, "transmittance must lie in [0, 1]")?;
    check_mode(mode_a, n_modes)?;
    check_mode(mode_b, n_modes)?;
    if mode_a == mode_b {
        return Err(Error::InvalidMode {
            index: mode_b,
            n_modes,
        });
    }
    let (st, rt) = (t.sqrt(), (1.0 - t).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (i, j) = (2 * mode_a + q, 2 * mode_b + q);
        m[(i, i)] = st;
        m[(i, j)] = rt;
        m[(j, i)] = -rt;
        m[(j, j)] = st;
    }
    Ok(SymplecticTransform { matrix: m })
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})` on `mode`.
pub fn squeezer_symplectic(r: f64, mode: usize, n_modes: usize) -> Result<SymplecticTransform> {
    check_range("r", r, f64::MIN, f64::MAX, "squeezing must be finite")?;
    check_mode(mode, n_modes)?;
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * mode, 2 * mode)] = (-r).exp();
    m[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    Ok(SymplecticTransform { matrix: m })
}

/// Phase rotation by `theta` on `mode`.
pub fn phase_rotation_symplectic(
    theta: f64,
    mode: usize,
    n_modes: usize,
) -> Result<SymplecticTransform> {
    check_range("theta", theta, f64::MIN, f64::MAX, "angle must be finite")?;
    check_mode(mode, n_modes)?;
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let i = 2 * mode;
    m[(i, i)] = c;
    m[(i, i + 1)] = s;
    m[(i + 1, i)] = -s;
    m[(i + 1, i + 1)] = c;
    Ok(SymplecticTransform { matrix: m })
}

/// Two-mode covariance `[[a I, c σz], [c σz, b I]]`.
pub fn two_mode_symmetric(a: f64, c: f64, b: f64) -> CovarianceMatrix {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = a;
    m[(1, 1)] = a;
    m[(2, 2)] = b;
    m[(3, 3)] = b;
    m[(0, 2)] = c;
    m[(2, 0)] = c;
    m[(1, 3)] = -c;
    m[(3, 1)] = -c;
    CovarianceMatrix { matrix: m }
}

/// Two-mode squeezed vacuum of variance `v`.
pub fn tmsv_covariance(v: f64) -> Result<CovarianceMatrix> {
    check_range("v", v, 1.0, f64::INFINITY, "variance must be >= 1")?;
    Ok(two_mode_symmetric(v, (v * v - 1.0).sqrt(), v))
}

/// Conditional covariance of the other modes after homodyning `quadrature`
/// of `measured_mode`: `γ_rest − c cᵀ / v` with the scalar pseudo-inverse.
pub fn homodyne_condition(
    gamma: &CovarianceMatrix,
    measured_mode: usize,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    let n = gamma.n_modes();
    check_mode(measured_mode, n)?;
    if n < 2 {
        return Err(Error::InvalidMode {
            index: measured_mode,
            n_modes: n,
        });
    }
    let rest: Vec<usize> = (0..2 * n)
        .filter(|&i| i / 2 != measured_mode)
        .collect();
    let k = 2 * measured_mode + quadrature.offset();
    let v = gamma.matrix[(k, k)];
    let g = &gamma.matrix;
    let inv = if v > PINV_CUTOFF { 1.0 / v } else { 0.0 };
    let m = DMatrix::from_fn(rest.len(), rest.len(), |i, j| {
        let (a, b) = (rest[i], rest[j]);
        g[(a, b)] - g[(a, k)] * inv * g[(b, k)]
    });
    Ok(CovarianceMatrix {
        matrix: (&m + m.transpose()) * 0.5,
    })
}
