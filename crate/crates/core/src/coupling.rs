//! Scale-invariant vertex couplings and their momentum-independent
//! scattering matrices.
//!
//! A coupling on `n` edges is fixed by a block size `m` and a complex
//! `m x (n - m)` matrix `T`. The boundary values at the vertex obey
//!
//! ```text
//! [ I_m  T ] psi'  =  [   0    0     ] psi
//! [  0   0 ]          [ -T^dag I_n-m ]
//! ```
//!
//! and the scattering matrix is Hermitian, unitary and squares to the
//! identity, with `+1` eigenspace of dimension `m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingJson", into = "CouplingJson")]
pub struct ScaleInvariantCoupling {
    n: usize,
    m: usize,
    t: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct CouplingJson {
    n: usize,
    m: usize,
    #[serde(rename = "T")]
    t: ComplexMatrix,
}

impl TryFrom<CouplingJson> for ScaleInvariantCoupling {
    type Error = Error;

    fn try_from(raw: CouplingJson) -> Result<Self> {
        ScaleInvariantCoupling::new(raw.n, raw.m, raw.t)
    }
}

impl From<ScaleInvariantCoupling> for CouplingJson {
    fn from(c: ScaleInvariantCoupling) -> Self {
        CouplingJson {
            n: c.n,
            m: c.m,
            t: c.t,
        }
    }
}

impl ScaleInvariantCoupling {
    pub fn new(n: usize, m: usize, t: ComplexMatrix) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCoupling(format!(
                "need at least 2 edges, got {n}"
            )));
        }
        if m == 0 || m >= n {
            return Err(Error::InvalidCoupling(format!(
                "m = {m} must lie in 1..{}",
                n - 1
            )));
        }
        if t.shape() != (m, n - m) {
            return Err(Error::InvalidCoupling(format!(
                "T must be {m}x{}, got {}x{}",
                n - m,
                t.rows(),
                t.cols()
            )));
        }
        Ok(Self { n, m, t })
    }

    /// Infers `n` and `m` from the shape of `t`.
    pub fn from_t(t: ComplexMatrix) -> Result<Self> {
        Self::new(t.rows() + t.cols(), t.rows(), t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> &ComplexMatrix {
        &self.t
    }
}

/// A validated Hermitian unitary scattering matrix together with
/// `m = rank(S + I)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ScatteringMatrix {
    s: ComplexMatrix,
    #[serde(skip)]
    m: usize,
}

impl ScatteringMatrix {
    pub fn new(s: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        if !s.is_square() || s.is_empty() {
            return Err(Error::Dimension(format!(
                "scattering matrix must be square and nonempty, got {}x{}",
                s.rows(),
                s.cols()
            )));
        }
        let residual = s.hermitian_residual();
        if residual > tol.eq_tol {
            return Err(Error::NotHermitian { residual });
        }
        let residual = s.unitary_residual();
        if residual > tol.eq_tol {
            return Err(Error::NotUnitary { residual });
        }
        let m = plus_one_multiplicity(&s, tol)?;
        Ok(Self { s, m })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.s
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.s
    }

    pub fn n(&self) -> usize {
        self.s.rows()
    }

    /// Multiplicity of the eigenvalue `+1`.
    pub fn m(&self) -> usize {
        self.m
    }
}

fn plus_one_multiplicity(s: &ComplexMatrix, tol: &Tolerance) -> Result<usize> {
    let shifted = s + &ComplexMatrix::identity(s.rows());
    matrix::rank(&shifted, tol)
}

/// Residuals of the three defining properties of a scale-invariant
/// scattering matrix, for reporting without rejecting the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringReport {
    pub n: usize,
    pub hermitian_residual: f64,
    pub unitary_residual: f64,
    pub involution_residual: f64,
    pub hermitian: bool,
    pub unitary: bool,
    pub involutive: bool,
    /// `rank(S + I)`, present for square input.
    pub m: Option<usize>,
    /// `rank(S - I)`, present for square input.
    pub minus_multiplicity: Option<usize>,
}

impl ScatteringReport {
    pub fn is_valid(&self) -> bool {
        self.hermitian && self.unitary && self.involutive
    }
}

pub fn inspect(s: &ComplexMatrix, tol: &Tolerance) -> Result<ScatteringReport> {
    if s.is_empty() {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let square = s.is_square();
    let hermitian_residual = s.hermitian_residual();
    let unitary_residual = s.unitary_residual();
    let involution_residual = if square {
        (s * s).max_abs_diff(&ComplexMatrix::identity(s.rows()))
    } else {
        f64::INFINITY
    };
    let (m, minus_multiplicity) = if square {
        let id = ComplexMatrix::identity(s.rows());
        (
            Some(matrix::rank(&(s + &id), tol)?),
            Some(matrix::rank(&(s - &id), tol)?),
        )
    } else {
        (None, None)
    };
    Ok(ScatteringReport {
        n: s.rows(),
        hermitian_residual,
        unitary_residual,
        involution_residual,
        hermitian: hermitian_residual <= tol.eq_tol,
        unitary: unitary_residual <= tol.eq_tol,
        involutive: involution_residual <= tol.eq_tol,
        m,
        minus_multiplicity,
    })
}

fn checked(
    s: ComplexMatrix,
    c: &ScaleInvariantCoupling,
    tol: &Tolerance,
) -> Result<ScatteringMatrix> {
    let sm = ScatteringMatrix::new(s, tol)?;
    if sm.m() != c.m {
        return Err(Error::Internal(format!(
            "forward map produced rank(S + I) = {}, expected m = {}",
            sm.m(),
            c.m
        )));
    }
    Ok(sm)
}

/// `S = -I + 2 [I; T^dag] (I + T T^dag)^-1 [I, T]`.
pub fn scattering_closed_form(
    c: &ScaleInvariantCoupling,
    tol: &Tolerance,
) -> Result<ScatteringMatrix> {
    let (n, m) = (c.n, c.m);
    let t = &c.t;
    let t_adj = t.adjoint();
    let id_m = ComplexMatrix::identity(m);

    let left = ComplexMatrix::vstack(&id_m, &t_adj)?;
    let right = ComplexMatrix::hstack(&id_m, t)?;
    let gram = &id_m + &(t * &t_adj);
    let middle = matrix::solve(&gram, &right, tol)?;
    let s = &(&left * &middle).scale_real(2.0) - &ComplexMatrix::identity(n);
    checked(s, c, tol)
}

/// The diagonalizing pair `(X_m, Z_m)` with `S = X_m^-1 Z_m X_m`.
pub fn diagonalizing_pair(c: &ScaleInvariantCoupling) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n, m) = (c.n, c.m);
    let id_m = ComplexMatrix::identity(m);
    let neg_id = ComplexMatrix::identity(n - m).scale_real(-1.0);
    let x = ComplexMatrix::from_blocks(&id_m, &c.t, &c.t.adjoint(), &neg_id)?;
    let z = ComplexMatrix::from_blocks(
        &id_m,
        &ComplexMatrix::zeros(m, n - m),
        &ComplexMatrix::zeros(n - m, m),
        &neg_id,
    )?;
    Ok((x, z))
}

pub fn scattering_by_diagonalization(
    c: &ScaleInvariantCoupling,
    tol: &Tolerance,
) -> Result<ScatteringMatrix> {
    let (x, z) = diagonalizing_pair(c)?;
    let s = matrix::solve(&x, &(&z * &x), tol).map_err(|e| match e {
        Error::Singular { .. } => Error::Internal(format!("X_m reported singular: {e}")),
        other => other,
    })?;
    checked(s, c, tol)
}

/// Wavefunction values and outward derivatives at the vertex, one entry per
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub psi: Vec<Complex64>,
    pub dpsi: Vec<Complex64>,
}

impl BoundaryValues {
    pub fn new(psi: Vec<Complex64>, dpsi: Vec<Complex64>) -> Result<Self> {
        if psi.len() != dpsi.len() {
            return Err(Error::Dimension(format!(
                "psi has {} entries, dpsi has {}",
                psi.len(),
                dpsi.len()
            )));
        }
        Ok(Self { psi, dpsi })
    }

    /// Boundary values of the scattering solution for a wave `e^{-ikx}`
    /// incoming on edge `j`: `psi = (I + S) e_j`, `psi' = ik (S - I) e_j`.
    pub fn scattering_state(s: &ComplexMatrix, j: usize, k: f64) -> Self {
        let n = s.rows();
        let ik = Complex64::new(0.0, k);
        let delta = |i: usize| if i == j { 1.0 } else { 0.0 };
        let psi = (0..n).map(|i| s[(i, j)] + delta(i)).collect();
        let dpsi = (0..n).map(|i| ik * (s[(i, j)] - delta(i))).collect();
        Self { psi, dpsi }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// Residual of the vertex condition: the larger of
/// `max |psi'_top + T psi'_bottom|` and `max |psi_bottom - T^dag psi_top|`.
pub fn boundary_residual(c: &ScaleInvariantCoupling, bv: &BoundaryValues) -> Result<f64> {
    if bv.len() != c.n || bv.dpsi.len() != c.n {
        return Err(Error::Dimension(format!(
            "boundary values have length {}, coupling has {} edges",
            bv.len(),
            c.n
        )));
    }
    let m = c.m;
    let t = &c.t;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let mut acc = bv.dpsi[i];
        for j in 0..c.n - m {
            acc += t[(i, j)] * bv.dpsi[m + j];
        }
        worst = worst.max(acc.norm());
    }
    for j in 0..c.n - m {
        let mut acc = bv.psi[m + j];
        for i in 0..m {
            acc -= t[(i, j)].conj() * bv.psi[i];
        }
        worst = worst.max(acc.norm());
    }
    Ok(worst)
}

/// True when both block equations hold to `tol`, measured relative to the
/// size of the boundary data and of `T`.
pub fn check_boundary_condition(
    c: &ScaleInvariantCoupling,
    bv: &BoundaryValues,
    tol: f64,
) -> Result<bool> {
    let residual = boundary_residual(c, bv)?;
    let data_scale = bv
        .psi
        .iter()
        .chain(&bv.dpsi)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let scale = 1.0f64.max(data_scale * (1.0 + c.t.max_abs()));
    Ok(residual <= tol * scale)
}
