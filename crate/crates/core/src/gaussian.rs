//! Schrödinger-picture Gaussian states in shot-noise units.
//!
//! Quadratures are ordered `(X1, P1, X2, P2, ...)` and the vacuum has unit
//! variance on every quadrature, matching `[X, P] = 2i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for exact linear-algebra identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for spectral checks such as symplectic eigenvalues.
pub const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    /// Offset of this quadrature inside a mode's `(X, P)` pair.
    pub fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Outcome of a single homodyne detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneOutcome {
    pub mode: usize,
    pub quadrature: Quadrature,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from raw moments. The covariance must be square, match
    /// the mean, and describe an even number of quadratures.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::EmptyRegister);
        }
        if !dim.is_multiple_of(2) || cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                map_modes: cov.nrows() / 2,
                given: dim / 2,
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::EmptyRegister);
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    pub fn coherent(x: f64, p: f64) -> Self {
        Self {
            mean: DVector::from_column_slice(&[x, p]),
            cov: DMatrix::identity(2, 2),
        }
    }

    /// Two-mode squeezed vacuum with `Var(X1 + X2) = Var(P1 - P2) = 2 e^{-2r}`.
    pub fn epr(r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::NegativeSqueezing(r));
        }
        let c = (2.0 * r).cosh();
        let s = (2.0 * r).sinh();
        #[rustfmt::skip]
        let cov = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, -s, 0.0,
            0.0, c, 0.0, s,
            -s, 0.0, c, 0.0,
            0.0, s, 0.0, c,
        ]);
        Ok(Self {
            mean: DVector::zeros(4),
            cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Same state with the p-mean of every mode negated.
    pub fn conjugate(&self) -> Self {
        let mut out = self.clone();
        for k in 0..self.n_modes() {
            out.mean[2 * k + 1] = -out.mean[2 * k + 1];
            for j in 0..2 * self.n_modes() {
                // flip sign of correlations between P_k and every X
                if j % 2 == 0 {
                    out.cov[(2 * k + 1, j)] = -out.cov[(2 * k + 1, j)];
                    out.cov[(j, 2 * k + 1)] = -out.cov[(j, 2 * k + 1)];
                }
            }
        }
        out
    }

    /// Direct sum: `self` occupies the leading modes.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let a = self.mean.len();
        let b = other.mean.len();
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    fn quadrature_indices(&self, modes: &[usize]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.n_modes()];
        let mut idx = Vec::with_capacity(2 * modes.len());
        for &m in modes {
            self.check_mode(m)?;
            if seen[m] {
                return Err(Error::DuplicateMode(m));
            }
            seen[m] = true;
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        Ok(idx)
    }

    /// Applies `map` to the listed modes (in that order) and leaves the rest
    /// untouched.
    pub fn apply(&self, map: &SymplecticMap, modes: &[usize]) -> Result<GaussianState> {
        let k = map.n_modes();
        if k != modes.len() {
            return Err(Error::DimensionMismatch {
                map_modes: k,
                given: modes.len(),
            });
        }
        let idx = self.quadrature_indices(modes)?;
        let dim = self.mean.len();
        let s = &map.matrix;

        let mut mean = self.mean.clone();
        for (a, &i) in idx.iter().enumerate() {
            mean[i] = map.displacement[a] + idx.iter().enumerate().map(|(b, &j)| s[(a, b)] * self.mean[j]).sum::<f64>();
        }

        // rows first: C1 = S_full * C, only touched rows change
        let mut rows = self.cov.clone();
        for (a, &i) in idx.iter().enumerate() {
            for col in 0..dim {
                rows[(i, col)] = idx
                    .iter()
                    .enumerate()
                    .map(|(b, &j)| s[(a, b)] * self.cov[(j, col)])
                    .sum();
            }
        }
        // then columns: C2 = C1 * S_full^T
        let mut cov = rows.clone();
        for (a, &i) in idx.iter().enumerate() {
            for row in 0..dim {
                cov[(row, i)] = idx
                    .iter()
                    .enumerate()
                    .map(|(b, &j)| rows[(row, j)] * s[(a, b)])
                    .sum();
            }
        }
        symmetrize(&mut cov);
        Ok(GaussianState { mean, cov })
    }

    /// Marginal `(mean, variance)` of one quadrature.
    pub fn homodyne_distribution(&self, mode: usize, quadrature: Quadrature) -> Result<(f64, f64)> {
        self.check_mode(mode)?;
        let q = 2 * mode + quadrature.offset();
        Ok((self.mean[q], self.cov[(q, q)]))
    }

    /// Conditions on an ideal homodyne outcome and removes the measured mode.
    pub fn condition_on_homodyne(&self, outcome: HomodyneOutcome) -> Result<GaussianState> {
        Ok(self.homodyne_update(outcome.mode, outcome.quadrature, outcome.value)?.state)
    }

    /// Schur-complement update for a homodyne outcome, also returning how the
    /// conditional mean of the surviving quadratures moves per unit outcome.
    pub fn homodyne_update(
        &self,
        mode: usize,
        quadrature: Quadrature,
        value: f64,
    ) -> Result<HomodyneUpdate> {
        self.check_mode(mode)?;
        let q = 2 * mode + quadrature.offset();
        let variance = self.cov[(q, q)];
        if !(variance > 0.0) {
            return Err(Error::DegenerateConditioning { quadrature, variance });
        }
        let keep: Vec<usize> = (0..self.mean.len()).filter(|&i| i / 2 != mode).collect();
        let n = keep.len();
        if n == 0 {
            return Err(Error::EmptyRegister);
        }
        let gain = DVector::from_iterator(n, keep.iter().map(|&i| self.cov[(i, q)] / variance));
        let shift = value - self.mean[q];
        let mean = DVector::from_iterator(n, keep.iter().enumerate().map(|(a, &i)| self.mean[i] + gain[a] * shift));
        let mut cov = DMatrix::from_fn(n, n, |a, b| {
            self.cov[(keep[a], keep[b])] - self.cov[(keep[a], q)] * self.cov[(q, keep[b])] / variance
        });
        symmetrize(&mut cov);
        Ok(HomodyneUpdate {
            state: GaussianState { mean, cov },
            gain,
            outcome_mean: self.mean[q],
            outcome_variance: variance,
        })
    }

    /// Marginal state of the listed modes, in the order given.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        let idx = self.quadrature_indices(modes)?;
        let n = idx.len();
        Ok(GaussianState {
            mean: DVector::from_iterator(n, idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(n, n, |a, b| self.cov[(idx[a], idx[b])]),
        })
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    /// True when the covariance is symmetric and every symplectic eigenvalue
    /// is at least one (within tolerance).
    pub fn satisfies_uncertainty(&self) -> bool {
        is_symmetric(&self.cov, EXACT_TOL)
            && self
                .symplectic_eigenvalues()
                .iter()
                .all(|&nu| nu >= 1.0 - SPECTRAL_TOL)
    }
}

/// Result of [`GaussianState::homodyne_update`].
#[derive(Debug, Clone)]
pub struct HomodyneUpdate {
    pub state: GaussianState,
    /// `d mean / d outcome` over the surviving quadratures.
    pub gain: DVector<f64>,
    pub outcome_mean: f64,
    pub outcome_variance: f64,
}

/// Affine phase-space map `r -> S r + d` on a block of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    pub matrix: DMatrix<f64>,
    pub displacement: DVector<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || !d.is_multiple_of(2) || matrix.ncols() != d || displacement.len() != d {
            return Err(Error::DimensionMismatch {
                map_modes: d / 2,
                given: displacement.len() / 2,
            });
        }
        Ok(Self { matrix, displacement })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            displacement: DVector::zeros(2 * n_modes),
        }
    }

    /// Real beam splitter acting on `(a, b)`:
    /// `a' = sqrt(T) a + sqrt(1-T) b`, `b' = -sqrt(1-T) a + sqrt(T) b`.
    pub fn beam_splitter(transmittance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::Transmittance(transmittance));
        }
        let t = transmittance.sqrt();
        let r = (1.0 - transmittance).sqrt();
        let o = DMatrix::from_row_slice(2, 2, &[t, r, -r, t]);
        Ok(Self::passive(&o))
    }

    /// Lifts a real orthogonal mode-mixing matrix `O` to phase space,
    /// acting identically on the X and P quadratures.
    pub fn passive(mixing: &DMatrix<f64>) -> Self {
        let k = mixing.nrows();
        let mut matrix = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            for j in 0..k {
                matrix[(2 * i, 2 * j)] = mixing[(i, j)];
                matrix[(2 * i + 1, 2 * j + 1)] = mixing[(i, j)];
            }
        }
        Self {
            matrix,
            displacement: DVector::zeros(2 * k),
        }
    }

    pub fn displacement(x: f64, p: f64) -> Self {
        Self {
            matrix: DMatrix::identity(2, 2),
            displacement: DVector::from_column_slice(&[x, p]),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &SymplecticMap) -> SymplecticMap {
        SymplecticMap {
            matrix: &other.matrix * &self.matrix,
            displacement: &other.matrix * &self.displacement + &other.displacement,
        }
    }

    /// Largest elementwise deviation of `S Ω Sᵀ` from `Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }
}

/// Standard symplectic form for the `(X1, P1, ...)` ordering.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues of a positive-definite covariance, ascending.
///
/// Uses `A = V^{1/2} Ω V^{1/2}`: `-A²` is symmetric with each `ν²` appearing
/// twice.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        // not positive definite: report the offending spectrum as zeros
        return vec![0.0; n];
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let a = &root * symplectic_form(n) * &root;
    let mut b = -(&a * &a);
    symmetrize(&mut b);
    let mut squares: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    squares.sort_by(|x, y| x.total_cmp(y));
    squares.chunks(2).map(|pair| pair[0].max(0.0).sqrt()).collect()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    (m - m.transpose()).amax() <= tol
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}
