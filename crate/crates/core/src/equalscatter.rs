//! Equal-transmission scattering matrices.
//!
//! These have every off-diagonal entry of modulus `1/sqrt(d^2 + n - 1)` and
//! every diagonal entry of modulus `d/sqrt(d^2 + n - 1)`, so a particle
//! entering on any edge leaves on every other edge with the same
//! probability. `d = 0` is the reflectionless case (symmetric conference
//! matrices), `d = 1` the equal-scattering case (symmetric Hadamard
//! matrices).

use serde::Serialize;

use crate::coupling::ScatteringMatrix;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualTransmissionSpec {
    pub n: usize,
    /// Ratio of diagonal to off-diagonal modulus.
    pub d_param: f64,
}

impl EqualTransmissionSpec {
    pub fn new(n: usize, d_param: f64) -> Result<Self> {
        if !(d_param.is_finite() && d_param >= 0.0) {
            return Err(Error::InvalidCoupling(format!(
                "diagonal parameter must be finite and non-negative, got {d_param}"
            )));
        }
        Ok(Self { n, d_param })
    }

    /// `n/2 - 1`, or `None` for `n <= 2` where no bound applies.
    pub fn d_upper_bound(&self) -> Option<f64> {
        (self.n > 2).then(|| self.n as f64 / 2.0 - 1.0)
    }
}

pub fn check_d_bound(spec: &EqualTransmissionSpec, eq_tol: f64) -> bool {
    match spec.d_upper_bound() {
        None => true,
        Some(bound) => spec.d_param <= bound + eq_tol,
    }
}

/// Returns the equal-transmission parameters of `s`, or `None` when its
/// entries do not have the required uniform moduli. Diagonal signs and
/// off-diagonal phases are unconstrained.
pub fn classify_equal_transmission(
    s: &ScatteringMatrix,
    tol: &Tolerance,
) -> Option<EqualTransmissionSpec> {
    let m = s.matrix();
    let n = s.n();
    if n < 2 {
        return None;
    }
    let off: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].norm()).collect();

    let off_mod = off[0];
    let diag_mod = diag[0];
    if off_mod <= tol.eq_tol {
        return None;
    }
    let uniform =
        |values: &[f64], reference: f64| values.iter().all(|v| (v - reference).abs() <= tol.eq_tol);
    if !uniform(&off, off_mod) || !uniform(&diag, diag_mod) {
        return None;
    }

    let d_param = diag_mod / off_mod;
    let expected_off = 1.0 / (d_param * d_param + n as f64 - 1.0).sqrt();
    if (expected_off - off_mod).abs() > tol.eq_tol {
        return None;
    }
    EqualTransmissionSpec::new(n, d_param).ok()
}

fn validated(raw: ComplexMatrix, scale: f64) -> Result<ScatteringMatrix> {
    let s = raw.scale_real(1.0 / scale);
    ScatteringMatrix::new(s, &Tolerance::default())
}

/// Checks `C C^T = q I` and symmetry for an integer matrix built by one of
/// the constructions below.
fn multiply_back(c: &[Vec<i32>], q: i32) -> bool {
    let n = c.len();
    for i in 0..n {
        for j in 0..n {
            if c[i][j] != c[j][i] {
                return false;
            }
            let dot: i32 = (0..n).map(|k| c[i][k] * c[j][k]).sum();
            if dot != if i == j { q } else { 0 } {
                return false;
            }
        }
    }
    true
}

fn to_matrix(c: &[Vec<i32>]) -> ComplexMatrix {
    let n = c.len();
    let flat: Vec<f64> = c.iter().flatten().map(|&v| v as f64).collect();
    ComplexMatrix::from_real(n, n, &flat).expect("square integer matrix")
}

/// Integer form of the n = 6 reflectionless matrix: blocks
/// `[[I - J, -2I + J], [-2I + J, -I + J]]` with 3x3 blocks, scaled by `sqrt(5)`.
pub fn conference_six_integer() -> Vec<Vec<i32>> {
    block_pattern(3, [(1, -1), (-2, 1), (-2, 1), (-1, 1)])
}

/// Integer form of the n = 8 equal-scattering matrix: blocks
/// `[[2I - J, -2I + J], [-2I + J, -2I + J]]` with 4x4 blocks, scaled by `sqrt(8)`.
pub fn hadamard_eight_integer() -> Vec<Vec<i32>> {
    block_pattern(4, [(2, -1), (-2, 1), (-2, 1), (-2, 1)])
}

/// 2x2 block matrix whose blocks are `a I + b J` of size `k`.
fn block_pattern(k: usize, coeffs: [(i32, i32); 4]) -> Vec<Vec<i32>> {
    let n = 2 * k;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = coeffs[2 * (i / k) + j / k];
                    b + if i % k == j % k { a } else { 0 }
                })
                .collect()
        })
        .collect()
}

fn is_prime(q: usize) -> bool {
    q >= 2
        && (2..)
            .take_while(|d| d * d <= q)
            .all(|d| !q.is_multiple_of(d))
}

fn paley_primes_supported(n: usize) -> bool {
    n >= 2 && is_prime(n - 1) && (n - 1) % 4 == 1
}

/// Symmetric conference matrix of order `q + 1` from the quadratic residues
/// modulo a prime `q = 1 (mod 4)`.
pub fn paley_conference_integer(q: usize) -> Result<Vec<Vec<i32>>> {
    if !(is_prime(q) && q % 4 == 1) {
        return Err(Error::ConstructionUnavailable {
            family: "Paley conference",
            n: q + 1,
            supported: "q + 1 for primes q = 1 (mod 4)".into(),
        });
    }
    let mut residue = vec![false; q];
    for x in 1..q {
        residue[x * x % q] = true;
    }
    let chi = |a: usize| -> i32 {
        match a % q {
            0 => 0,
            r if residue[r] => 1,
            _ => -1,
        }
    };
    let n = q + 1;
    let mut c = vec![vec![0; n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = match (i, j) {
                (0, 0) => 0,
                (0, _) | (_, 0) => 1,
                _ => chi(j + q - i),
            };
        }
    }
    Ok(c)
}

const CONFERENCE_SUPPORTED: &str =
    "2, 6, and q + 1 for primes q = 1 (mod 4) (14, 18, 30, 38, 42, 54, ...)";
const HADAMARD_SUPPORTED: &str = "powers of two (2, 4, 8, 16, ...)";

/// Reflectionless equal-transmission matrix `C / sqrt(n - 1)`.
pub fn conference_scattering(n: usize) -> Result<ScatteringMatrix> {
    let c = match n {
        2 => vec![vec![0, 1], vec![1, 0]],
        6 => conference_six_integer(),
        _ if paley_primes_supported(n) => paley_conference_integer(n - 1)?,
        _ => {
            return Err(Error::ConstructionUnavailable {
                family: "conference",
                n,
                supported: CONFERENCE_SUPPORTED.into(),
            })
        }
    };
    let q = (n - 1) as i32;
    if !multiply_back(&c, q) || (0..n).any(|i| c[i][i] != 0) {
        return Err(Error::Internal(format!(
            "conference construction failed for n = {n}"
        )));
    }
    validated(to_matrix(&c), (q as f64).sqrt())
}

/// Symmetric Sylvester matrix `H_2^{(x) k}` for `n = 2^k`.
pub fn sylvester_integer(n: usize) -> Option<Vec<Vec<i32>>> {
    if n < 2 || !n.is_power_of_two() {
        return None;
    }
    Some(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if (i & j).count_ones() % 2 == 0 { 1 } else { -1 })
                    .collect()
            })
            .collect(),
    )
}

/// Equal-scattering matrix `H / sqrt(n)`.
pub fn hadamard_scattering(n: usize) -> Result<ScatteringMatrix> {
    let h = match n {
        8 => hadamard_eight_integer(),
        _ => sylvester_integer(n).ok_or_else(|| Error::ConstructionUnavailable {
            family: "Hadamard",
            n,
            supported: HADAMARD_SUPPORTED.into(),
        })?,
    };
    if !multiply_back(&h, n as i32) {
        return Err(Error::Internal(format!(
            "Hadamard construction failed for n = {n}"
        )));
    }
    validated(to_matrix(&h), (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{reference_s6, reference_s8};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn six_matches_reference() {
        let s = conference_scattering(6).unwrap();
        assert!(s.matrix().approx_eq(&reference_s6(), 1e-15));
        assert_eq!(s.m(), 3);
    }

    #[test]
    fn eight_matches_reference() {
        let s = hadamard_scattering(8).unwrap();
        assert!(s.matrix().approx_eq(&reference_s8(), 1e-15));
        assert_eq!(s.m(), 4);
    }

    #[test]
    fn smallest_cases() {
        let s = conference_scattering(2).unwrap();
        assert_eq!(
            s.matrix(),
            &ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
        );

        let h = hadamard_scattering(2).unwrap();
        let r = 0.5f64.sqrt();
        let expected = ComplexMatrix::from_real(2, 2, &[r, r, r, -r]).unwrap();
        assert!(h.matrix().approx_eq(&expected, 1e-15));
        let sq = h.matrix() * h.matrix();
        assert!(sq.approx_eq(&ComplexMatrix::identity(2), 1e-15));
    }

    #[test]
    fn paley_fourteen_multiplies_back() {
        let c = paley_conference_integer(13).unwrap();
        assert_eq!(c.len(), 14);
        for i in 0..14 {
            for j in 0..14 {
                let dot: i32 = (0..14).map(|k| c[i][k] * c[j][k]).sum();
                assert_eq!(dot, if i == j { 13 } else { 0 });
            }
        }
        assert!(paley_conference_integer(9).is_err());
        assert!(paley_conference_integer(7).is_err());
    }

    #[test]
    fn sylvester_four_multiplies_back() {
        let h = sylvester_integer(4).unwrap();
        assert!(multiply_back(&h, 4));
        assert!(sylvester_integer(6).is_none());
        assert!(sylvester_integer(1).is_none());
    }

    #[test]
    fn unsupported_sizes_are_reported() {
        for n in [3, 4, 10, 12] {
            match conference_scattering(n) {
                Err(Error::ConstructionUnavailable {
                    n: got, supported, ..
                }) => {
                    assert_eq!(got, n);
                    assert!(supported.contains("14"));
                }
                other => panic!("n = {n}: {other:?}"),
            }
        }
        for n in [0, 1, 6, 12, 20] {
            assert!(matches!(
                hadamard_scattering(n),
                Err(Error::ConstructionUnavailable { .. })
            ));
        }
    }

    #[test]
    fn classification_of_generated_families() {
        for n in [2, 6, 14, 18, 30] {
            let spec =
                classify_equal_transmission(&conference_scattering(n).unwrap(), &tol()).unwrap();
            assert_eq!(spec.n, n);
            assert!(spec.d_param.abs() < 1e-12);
            assert!(check_d_bound(&spec, tol().eq_tol));
        }
        for n in [2, 4, 8, 16] {
            let spec =
                classify_equal_transmission(&hadamard_scattering(n).unwrap(), &tol()).unwrap();
            assert!((spec.d_param - 1.0).abs() < 1e-12);
            assert!(check_d_bound(&spec, tol().eq_tol));
        }
    }

    #[test]
    fn non_transmitting_matrix_is_not_classified() {
        let s = ScatteringMatrix::new(
            ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap(),
            &tol(),
        )
        .unwrap();
        assert_eq!(classify_equal_transmission(&s, &tol()), None);
    }

    #[test]
    fn non_uniform_transmission_is_not_classified() {
        use crate::coupling::{scattering_closed_form, ScaleInvariantCoupling};
        let t = ComplexMatrix::from_real(1, 2, &[1.0, 2.0]).unwrap();
        let s =
            scattering_closed_form(&ScaleInvariantCoupling::from_t(t).unwrap(), &tol()).unwrap();
        assert_eq!(classify_equal_transmission(&s, &tol()), None);
    }

    #[test]
    fn d_bound_arithmetic() {
        let ok6 = EqualTransmissionSpec::new(6, 0.0).unwrap();
        let ok8 = EqualTransmissionSpec::new(8, 1.0).unwrap();
        let bad4 = EqualTransmissionSpec::new(4, 1.5).unwrap();
        assert!(check_d_bound(&ok6, 1e-9));
        assert!(check_d_bound(&ok8, 1e-9));
        assert_eq!(ok8.d_upper_bound(), Some(3.0));
        assert!(!check_d_bound(&bad4, 1e-9));
        assert!(check_d_bound(
            &EqualTransmissionSpec::new(2, 10.0).unwrap(),
            1e-9
        ));
        assert!(EqualTransmissionSpec::new(4, -0.1).is_err());
    }
}
