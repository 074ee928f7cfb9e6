//! Finite graph realizing a scale-invariant coupling.
//!
//! The `n` external edges end at `n` endpoints. Endpoints `i` and `j` are
//! joined by an internal edge of length `d / r_ij` carrying a magnetic
//! phase `chi_ij`, where `r_ij e^{i chi_ij} = Q_ij` and
//!
//! ```text
//! Q = [ -T T^dag   T ]
//!     [ -T^dag     I ]
//! ```
//!
//! Each endpoint carries a delta potential whose strength is the diagonal
//! of `V = (2I - J) R / d`, `R = |Q|` entrywise. As `d -> 0` the graph
//! scatters like the target vertex.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coupling::ScaleInvariantCoupling;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Tolerance};

/// `Q` together with its entrywise moduli `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrixQ {
    q: ComplexMatrix,
    moduli: Vec<f64>,
}

impl CouplingMatrixQ {
    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    /// `r_ij = |Q_ij|`.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.moduli[i * self.n() + j]
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli.iter().copied().fold(0.0, f64::max)
    }
}

pub fn build_q(c: &ScaleInvariantCoupling) -> CouplingMatrixQ {
    let t = c.t();
    let t_adj = t.adjoint();
    let top_left = (t * &t_adj).scale_real(-1.0);
    let bottom_left = t_adj.scale_real(-1.0);
    let q = ComplexMatrix::from_blocks(
        &top_left,
        t,
        &bottom_left,
        &ComplexMatrix::identity(c.n() - c.m()),
    )
    .expect("blocks of Q conform by construction");
    let moduli = q.data().iter().map(|z| z.norm()).collect();
    CouplingMatrixQ { q, moduli }
}

/// Maps an angle into `(-pi, pi]`.
pub fn normalize_phase(chi: f64) -> f64 {
    let mut x = chi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalEdge {
    pub i: usize,
    pub j: usize,
    /// Inverse length in units of the design's `length_unit`.
    pub r: f64,
    /// Phase picked up travelling from endpoint `i` to endpoint `j`.
    pub chi: f64,
}

impl InternalEdge {
    pub fn length(&self, length_unit: f64) -> f64 {
        length_unit / self.r
    }

    /// Phase for traversal `from -> to`; reversing the direction flips its sign.
    pub fn phase_from(&self, from: usize) -> f64 {
        if from == self.i {
            self.chi
        } else {
            -self.chi
        }
    }

    pub fn other(&self, endpoint: usize) -> usize {
        if endpoint == self.i {
            self.j
        } else {
            self.i
        }
    }
}

/// Depth-one graph: `n` endpoints, internal edges between them and a delta
/// potential at each endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignJson", into = "DesignJson")]
pub struct FiniteGraphDesign {
    n: usize,
    length_unit: f64,
    edges: Vec<InternalEdge>,
    deltas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DesignJson {
    n: usize,
    length_unit: f64,
    edges: Vec<InternalEdge>,
    deltas: Vec<f64>,
}

impl TryFrom<DesignJson> for FiniteGraphDesign {
    type Error = Error;

    fn try_from(raw: DesignJson) -> Result<Self> {
        FiniteGraphDesign::new(raw.n, raw.length_unit, raw.edges, raw.deltas)
    }
}

impl From<FiniteGraphDesign> for DesignJson {
    fn from(d: FiniteGraphDesign) -> Self {
        DesignJson {
            n: d.n,
            length_unit: d.length_unit,
            edges: d.edges,
            deltas: d.deltas,
        }
    }
}

impl FiniteGraphDesign {
    /// Validates the design. Edges are stored with `i < j` (an edge given as
    /// `j > i` is flipped, negating its phase), sorted by `(i, j)`, with
    /// phases normalized to `(-pi, pi]`.
    pub fn new(
        n: usize,
        length_unit: f64,
        edges: Vec<InternalEdge>,
        deltas: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDesign(
                "design needs at least one endpoint".into(),
            ));
        }
        if !(length_unit.is_finite() && length_unit > 0.0) {
            return Err(Error::InvalidDesign(format!(
                "length unit must be positive, got {length_unit}"
            )));
        }
        if deltas.len() != n {
            return Err(Error::InvalidDesign(format!(
                "expected {n} delta strengths, got {}",
                deltas.len()
            )));
        }
        if let Some(v) = deltas.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "non-finite delta strength {v}"
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i == e.j || e.i >= n || e.j >= n {
                return Err(Error::InvalidDesign(format!(
                    "edge ({}, {}) is not a pair of distinct endpoints in 0..{n}",
                    e.i, e.j
                )));
            }
            if !(e.r.is_finite() && e.r > 0.0) {
                return Err(Error::InvalidDesign(format!(
                    "edge ({}, {}) has non-positive ratio {}",
                    e.i, e.j, e.r
                )));
            }
            if !e.chi.is_finite() {
                return Err(Error::InvalidDesign(format!(
                    "edge ({}, {}) has non-finite phase",
                    e.i, e.j
                )));
            }
            let (i, j, chi) = if e.i < e.j {
                (e.i, e.j, e.chi)
            } else {
                (e.j, e.i, -e.chi)
            };
            normalized.push(InternalEdge {
                i,
                j,
                r: e.r,
                chi: normalize_phase(chi),
            });
        }
        normalized.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = normalized
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(Error::InvalidDesign(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].j
            )));
        }
        Ok(Self {
            n,
            length_unit,
            edges: normalized,
            deltas,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length_unit(&self) -> f64 {
        self.length_unit
    }

    pub fn edges(&self) -> &[InternalEdge] {
        &self.edges
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&InternalEdge> {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .ok()
            .map(|idx| &self.edges[idx])
    }

    /// Same graph with every length rescaled to a new unit. Ratios and
    /// phases are unchanged; delta strengths scale inversely.
    pub fn with_length_unit(&self, length_unit: f64) -> Result<Self> {
        let factor = self.length_unit / length_unit;
        Self::new(
            self.n,
            length_unit,
            self.edges.clone(),
            self.deltas.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Delta strengths as the diagonal of `V = (2I - J) R / d`.
pub fn delta_strengths_matrix(q: &CouplingMatrixQ, length_unit: f64) -> Vec<f64> {
    let n = q.n();
    (0..n)
        .map(|i| {
            let column: f64 = (0..n).map(|l| q.r(l, i)).sum();
            (2.0 * q.r(i, i) - column) / length_unit
        })
        .collect()
}

/// Delta strengths written out per endpoint:
///
/// * `i > m`: `(1 - sum_{l <= m} r_li) / d`
/// * `i <= m`: `(sum_{l > m} (r_il^2 - r_il) - sum_{l <= m, l != i} r_il) / d`
pub fn delta_strengths_textual(
    c: &ScaleInvariantCoupling,
    q: &CouplingMatrixQ,
    length_unit: f64,
) -> Vec<f64> {
    let (n, m) = (c.n(), c.m());
    (0..n)
        .map(|i| {
            let v = if i >= m {
                1.0 - (0..m).map(|l| q.r(l, i)).sum::<f64>()
            } else {
                let outer: f64 = (m..n).map(|l| q.r(i, l) * q.r(i, l) - q.r(i, l)).sum();
                let inner: f64 = (0..m).filter(|&l| l != i).map(|l| q.r(i, l)).sum();
                outer - inner
            };
            v / length_unit
        })
        .collect()
}

pub fn design_from_coupling(
    c: &ScaleInvariantCoupling,
    length_unit: f64,
    tol: &Tolerance,
) -> Result<FiniteGraphDesign> {
    if !(length_unit.is_finite() && length_unit > 0.0) {
        return Err(Error::InvalidDesign(format!(
            "length unit must be positive, got {length_unit}"
        )));
    }
    let q = build_q(c);
    let n = c.n();
    let threshold = tol.rank_tol * q.max_modulus();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = q.r(i, j);
            if r < threshold || r == 0.0 {
                continue;
            }
            let z = q.q()[(i, j)];
            edges.push(InternalEdge {
                i,
                j,
                r,
                chi: normalize_phase(z.im.atan2(z.re)),
            });
        }
    }
    let deltas = delta_strengths_matrix(&q, length_unit);
    FiniteGraphDesign::new(n, length_unit, edges, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{golden_t6, golden_t8, GOLDEN, SILVER};
    use num_complex::Complex64;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn coupling(t: ComplexMatrix) -> ScaleInvariantCoupling {
        ScaleInvariantCoupling::from_t(t).unwrap()
    }

    #[test]
    fn zero_coupling_has_no_edges() {
        let c = ScaleInvariantCoupling::new(5, 2, ComplexMatrix::zeros(2, 3)).unwrap();
        let q = build_q(&c);
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j && i >= 2 { 1.0 } else { 0.0 };
                assert_eq!(q.r(i, j), expected);
            }
        }
        let d = design_from_coupling(&c, 0.5, &tol()).unwrap();
        assert!(d.edges().is_empty());
        assert_eq!(d.deltas(), &[0.0, 0.0, 2.0, 2.0, 2.0]);
        assert_eq!(
            delta_strengths_textual(&c, &q, 0.5),
            vec![0.0, 0.0, 2.0, 2.0, 2.0]
        );
    }

    #[test]
    fn golden_mean_q_moduli() {
        let g = GOLDEN;
        // T T^dag = (1 + g)(3 + g) J + g^2 I, and g^2 = 1 - g.
        assert!(((1.0 + g) * (3.0 + g) - (4.0 + 3.0 * g)).abs() < 1e-14);
        let q = build_q(&coupling(golden_t6()));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((q.r(i, j) - (4.0 + 3.0 * g)).abs() < 1e-12);
            assert!((q.r(j, i) - q.r(i, j)).abs() == 0.0);
        }
        for i in 0..3 {
            for j in 3..6 {
                let expected = if j - 3 == i { 1.0 } else { 1.0 + g };
                assert!((q.r(i, j) - expected).abs() < 1e-12);
            }
        }
        for i in 3..6 {
            for j in 3..6 {
                if i != j {
                    assert_eq!(q.r(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn silver_mean_q_moduli() {
        let s = SILVER;
        let q = build_q(&coupling(golden_t8()));
        assert!((q.r(0, 1) - (1.0 + s)).abs() < 1e-12);
        assert!((q.r(0, 4) - s / (1.0 + s)).abs() < 1e-12);
        assert!((q.r(0, 5) - 1.0 / (1.0 + s)).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_design() {
        let g = GOLDEN;
        let d = 0.25;
        let design = design_from_coupling(&coupling(golden_t6()), d, &tol()).unwrap();
        for i in 0..3 {
            assert!((design.deltas()[i] + 6.0 * (g + 1.0) / d).abs() < 1e-9);
            assert!((design.deltas()[i + 3] + 2.0 * (g + 1.0) / d).abs() < 1e-9);
        }
        assert_eq!(design.edges().len(), 3 + 9);
        for e in design.edges() {
            let expected = if e.j < 3 { PI } else { 0.0 };
            assert_eq!(e.chi, expected, "edge ({}, {})", e.i, e.j);
            assert!((e.length(d) * e.r - d).abs() <= 1e-15 * d);
        }
    }

    #[test]
    fn silver_mean_design() {
        let s = SILVER;
        let design = design_from_coupling(&coupling(golden_t8()), 1.0, &tol()).unwrap();
        for i in 0..4 {
            assert!((design.deltas()[i] + (5.0 * s + 3.0)).abs() < 1e-9);
            assert!((design.deltas()[i + 4] + (s + 1.0)).abs() < 1e-9);
        }
        let pi_pairs: Vec<(usize, usize)> = design
            .edges()
            .iter()
            .filter(|e| (Complex64::from_polar(1.0, e.chi) + 1.0).norm() < 1e-9)
            .map(|e| (e.i, e.j))
            .collect();
        assert_eq!(
            pi_pairs,
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        );
    }

    #[test]
    fn delta_formulas_agree_on_complex_t() {
        let t = ComplexMatrix::new(
            3,
            3,
            (0..9)
                .map(|k| Complex64::new((k as f64 * 1.7).sin(), (k as f64 * 0.9).cos()))
                .collect(),
        )
        .unwrap();
        let c = coupling(t);
        let q = build_q(&c);
        let a = delta_strengths_matrix(&q, 0.3);
        let b = delta_strengths_textual(&c, &q, 0.3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn halving_length_unit_doubles_deltas() {
        let c = coupling(golden_t8());
        let full = design_from_coupling(&c, 1.0, &tol()).unwrap();
        let half = design_from_coupling(&c, 0.5, &tol()).unwrap();
        for (a, b) in full.deltas().iter().zip(half.deltas()) {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in full.edges().iter().zip(half.edges()) {
            assert_eq!((a.i, a.j, a.r, a.chi), (b.i, b.j, b.r, b.chi));
            assert_eq!(a.length(1.0) / 2.0, b.length(0.5));
        }
        assert_eq!(full.with_length_unit(0.5).unwrap(), half);
    }

    #[test]
    fn phase_normalization() {
        assert_eq!(normalize_phase(-PI), PI);
        assert_eq!(normalize_phase(PI), PI);
        assert!((normalize_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((normalize_phase(-0.25) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn design_validation() {
        let e = |i, j, r, chi| InternalEdge { i, j, r, chi };
        assert!(FiniteGraphDesign::new(2, 1.0, vec![e(0, 0, 1.0, 0.0)], vec![0.0; 2]).is_err());
        assert!(FiniteGraphDesign::new(2, 1.0, vec![e(0, 2, 1.0, 0.0)], vec![0.0; 2]).is_err());
        assert!(FiniteGraphDesign::new(2, 1.0, vec![e(0, 1, 0.0, 0.0)], vec![0.0; 2]).is_err());
        assert!(FiniteGraphDesign::new(2, 0.0, vec![], vec![0.0; 2]).is_err());
        assert!(FiniteGraphDesign::new(2, 1.0, vec![], vec![0.0; 3]).is_err());
        assert!(FiniteGraphDesign::new(
            3,
            1.0,
            vec![e(0, 1, 1.0, 0.0), e(1, 0, 2.0, 0.0)],
            vec![0.0; 3]
        )
        .is_err());

        let d = FiniteGraphDesign::new(3, 1.0, vec![e(2, 0, 1.0, 0.5)], vec![0.0; 3]).unwrap();
        let edge = d.edge(0, 2).unwrap();
        assert_eq!((edge.i, edge.j, edge.chi), (0, 2, -0.5));
        assert_eq!(edge.phase_from(2), 0.5);
        assert_eq!(edge.other(2), 0);
        assert!(d.edge(0, 1).is_none());
    }

    #[test]
    fn design_json_schema() {
        let d = FiniteGraphDesign::new(
            2,
            1.0,
            vec![InternalEdge {
                i: 0,
                j: 1,
                r: 2.0,
                chi: PI,
            }],
            vec![-1.0, 0.5],
        )
        .unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(
            s,
            r#"{"n":2,"length_unit":1.0,"edges":[{"i":0,"j":1,"r":2.0,"chi":3.141592653589793}],"deltas":[-1.0,0.5]}"#
        );
        assert_eq!(serde_json::from_str::<FiniteGraphDesign>(&s).unwrap(), d);
        assert!(serde_json::from_str::<FiniteGraphDesign>(
            r#"{"n":2,"length_unit":-1.0,"edges":[],"deltas":[0,0]}"#
        )
        .is_err());
    }
}
