//! Recovery of the coupling matrix `T` from a scattering matrix.
//!
//! Three steps: read off `m = rank(S + I)`; renumber the edges so that the
//! leading `m x m` block of `I + S` is regular; then
//! `T = (I + S11)^-1 S12`, cross-checked against `T = S21^dag (I - S22)^-1`.

use serde::{Deserialize, Serialize};

use crate::coupling::{scattering_closed_form, ScaleInvariantCoupling, ScatteringMatrix};
use crate::error::{Error, Result};
use crate::matrix::{self, apply_permutation, invert_permutation, ComplexMatrix, Side, Tolerance};

/// Relative agreement required between the two expressions for `T`.
pub const FORMULA_AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseResult {
    /// `permutation[i]` is the original index of the edge placed at position `i`.
    pub permutation: Vec<usize>,
    pub coupling: ScaleInvariantCoupling,
}

impl InverseResult {
    pub fn is_identity_permutation(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Forward map of the recovered coupling, expressed in the original edge
    /// numbering.
    pub fn reconstruct(&self, tol: &Tolerance) -> Result<ComplexMatrix> {
        let s = scattering_closed_form(&self.coupling, tol)?;
        apply_permutation(
            s.matrix(),
            &invert_permutation(&self.permutation),
            Side::Both,
        )
    }
}

pub fn recover_m(s: &ScatteringMatrix) -> Result<usize> {
    let (m, n) = (s.m(), s.n());
    if m == 0 || m == n {
        return Err(Error::DegenerateCoupling { m, n });
    }
    Ok(m)
}

fn leading_block_regular(s: &ComplexMatrix, m: usize, tol: &Tolerance) -> Result<bool> {
    let block = &s.submatrix(0, 0, m, m) + &ComplexMatrix::identity(m);
    Ok(matrix::rank(&block, tol)? == m)
}

/// Edge renumbering that makes `I + S11` regular.
///
/// Returns the identity when it already works. Otherwise picks `m`
/// independent columns of `S + I` by complete pivoting; since `S + I` is
/// twice the projector onto the `+1` eigenspace, any such column set also
/// gives a regular principal block. Chosen indices come first in ascending
/// order, followed by the rest in ascending order.
pub fn select_ordering(s: &ScatteringMatrix, m: usize, tol: &Tolerance) -> Result<Vec<usize>> {
    let n = s.n();
    let identity: Vec<usize> = (0..n).collect();
    if leading_block_regular(s.matrix(), m, tol)? {
        return Ok(identity);
    }

    let shifted = s.matrix() + &ComplexMatrix::identity(n);
    let mut chosen = matrix::pivot_columns(&shifted, tol)?;
    if chosen.len() != m {
        return Err(Error::Internal(format!(
            "pivot search found {} independent columns of S + I, expected {m}",
            chosen.len()
        )));
    }
    chosen.sort_unstable();
    let mut perm = chosen.clone();
    perm.extend(identity.into_iter().filter(|i| !chosen.contains(i)));

    let permuted = apply_permutation(s.matrix(), &perm, Side::Both)?;
    if !leading_block_regular(&permuted, m, tol)? {
        return Err(Error::Internal(format!(
            "renumbering {perm:?} left I + S11 singular"
        )));
    }
    Ok(perm)
}

pub fn recover_t(s: &ScatteringMatrix, tol: &Tolerance) -> Result<InverseResult> {
    let n = s.n();
    let m = recover_m(s)?;
    let permutation = select_ordering(s, m, tol)?;
    let p = apply_permutation(s.matrix(), &permutation, Side::Both)?;

    let s11 = p.submatrix(0, 0, m, m);
    let s12 = p.submatrix(0, m, m, n - m);
    let s21 = p.submatrix(m, 0, n - m, m);
    let s22 = p.submatrix(m, m, n - m, n - m);

    let t = matrix::solve(&(&ComplexMatrix::identity(m) + &s11), &s12, tol)?;
    // (I - S22) is Hermitian, so S21^dag (I - S22)^-1 = ((I - S22)^-1 S21)^dag.
    let t_alt = matrix::solve(&(&ComplexMatrix::identity(n - m) - &s22), &s21, tol)?.adjoint();

    let residual = t.max_abs_diff(&t_alt);
    if residual > FORMULA_AGREEMENT_TOL * t.max_abs().max(1.0) {
        return Err(Error::FormulaDisagreement { residual });
    }

    Ok(InverseResult {
        permutation,
        coupling: ScaleInvariantCoupling::new(n, m, t)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::scattering_by_diagonalization;
    use crate::testing::{golden_t6, golden_t8, reference_s6, reference_s8};
    use num_complex::Complex64;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn sm(m: ComplexMatrix) -> ScatteringMatrix {
        ScatteringMatrix::new(m, &tol()).unwrap()
    }

    fn diag(values: &[f64]) -> ComplexMatrix {
        let n = values.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { values[i] } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn m_of_small_and_reference_matrices() {
        let swap = sm(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
        assert_eq!(recover_m(&swap).unwrap(), 1);
        // trace(S) = 2m - n
        let s6 = reference_s6();
        assert!((s6.trace().re - 0.0).abs() < 1e-14);
        assert_eq!(recover_m(&sm(s6)).unwrap(), 3);
        let s8 = reference_s8();
        assert!((s8.trace().re - 0.0).abs() < 1e-14);
        assert_eq!(recover_m(&sm(s8)).unwrap(), 4);
    }

    #[test]
    fn degenerate_plus_minus_identity() {
        for sign in [1.0, -1.0] {
            let s = sm(ComplexMatrix::identity(3).scale_real(sign));
            assert!(matches!(
                recover_m(&s),
                Err(Error::DegenerateCoupling { .. })
            ));
            assert!(matches!(
                recover_t(&s, &tol()),
                Err(Error::DegenerateCoupling { .. })
            ));
        }
    }

    #[test]
    fn natural_order_kept_when_regular() {
        // det(I + S11) for the n = 6 example, by cofactor expansion.
        let s = reference_s6();
        let a = |i: usize, j: usize| s[(i, j)].re + if i == j { 1.0 } else { 0.0 };
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        assert!(det.abs() > 0.1);
        assert_eq!(
            select_ordering(&sm(s), 3, &tol()).unwrap(),
            vec![0, 1, 2, 3, 4, 5]
        );

        let swap = sm(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap());
        assert_eq!(select_ordering(&swap, 1, &tol()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn renumbering_when_leading_block_is_minus_identity() {
        let s = sm(diag(&[-1.0, 1.0, -1.0, 1.0]));
        let perm = select_ordering(&s, 2, &tol()).unwrap();
        assert_eq!(perm, vec![1, 3, 0, 2]);
        let r = recover_t(&s, &tol()).unwrap();
        assert_eq!(r.permutation, perm);
        assert_eq!(r.coupling.t(), &ComplexMatrix::zeros(2, 2));
        assert!(r.reconstruct(&tol()).unwrap().approx_eq(s.matrix(), 1e-15));
    }

    #[test]
    fn renumbering_undoes_a_scrambled_coupling() {
        // Edge 0 is decoupled with S = +1, edge 2 decoupled with S = -1.
        // Putting edge 2 first makes the natural leading block singular.
        let t = ComplexMatrix::from_real(2, 3, &[0.0, 0.0, 0.0, 0.0, -1.0, 2.0]).unwrap();
        let c = ScaleInvariantCoupling::from_t(t).unwrap();
        let s = scattering_closed_form(&c, &tol()).unwrap();
        let scramble = [2, 3, 0, 1, 4];
        let scrambled = sm(apply_permutation(s.matrix(), &scramble, Side::Both).unwrap());
        assert!(!leading_block_regular(scrambled.matrix(), 2, &tol()).unwrap());
        let r = recover_t(&scrambled, &tol()).unwrap();
        assert!(!r.is_identity_permutation());
        assert!(
            r.reconstruct(&tol())
                .unwrap()
                .max_abs_diff(scrambled.matrix())
                < 1e-12
        );
    }

    #[test]
    fn golden_inverse_n6() {
        let r = recover_t(&sm(reference_s6()), &tol()).unwrap();
        assert!(r.is_identity_permutation());
        assert!(r.coupling.t().max_abs_diff(&golden_t6()) < 1e-12);
    }

    #[test]
    fn golden_inverse_n8() {
        let r = recover_t(&sm(reference_s8()), &tol()).unwrap();
        assert!(r.is_identity_permutation());
        assert!(r.coupling.t().max_abs_diff(&golden_t8()) < 1e-12);
    }

    #[test]
    fn block_diagonal_gives_zero_t() {
        let s = sm(diag(&[1.0, 1.0, -1.0, -1.0, -1.0]));
        let r = recover_t(&s, &tol()).unwrap();
        assert!(r.is_identity_permutation());
        assert_eq!(r.coupling.m(), 2);
        assert_eq!(r.coupling.t(), &ComplexMatrix::zeros(2, 3));
    }

    #[test]
    fn round_trip_through_diagonalization_route() {
        let t = ComplexMatrix::new(
            2,
            3,
            vec![
                Complex64::new(0.2, 1.1),
                Complex64::new(-0.4, 0.0),
                Complex64::new(0.9, -0.3),
                Complex64::new(0.0, 0.7),
                Complex64::new(1.5, 0.5),
                Complex64::new(-0.8, -0.2),
            ],
        )
        .unwrap();
        let c = ScaleInvariantCoupling::from_t(t.clone()).unwrap();
        let s = scattering_by_diagonalization(&c, &tol()).unwrap();
        let r = recover_t(&s, &tol()).unwrap();
        assert!(r.is_identity_permutation());
        assert!(r.coupling.t().max_abs_diff(&t) < 1e-12);
    }
}
