//! Exact momentum-dependent scattering of a finite graph design.
//!
//! On an internal edge of length `L` the Helmholtz solution ties end
//! derivatives to end values through `F = kL cot kL` and `G = kL csc kL`.
//! Eliminating the internal edges leaves the endpoint relation
//! `d psi' = M psi` with
//!
//! ```text
//! M_ii = v_i d + sum_l r_il F_il
//! M_il = -e^{i chi_il} r_il G_il
//! ```
//!
//! Substituting `psi = I + S`, `psi' = ik (S - I)` gives the Cayley form
//! `(ikd - M) S = (ikd + M)`, unitary for Hermitian `M`.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::coupling::ScatteringMatrix;
use crate::error::{Error, Result};
use crate::matrix::{self, ComplexMatrix, Tolerance};
use crate::synthesis::FiniteGraphDesign;

/// Relative distance of `kL` from a multiple of pi below which an edge is
/// treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-12;

const SERIES_CUTOFF: f64 = 1e-4;

/// `(F, G) = (kL cot kL, kL csc kL)` for an edge of length `length`.
pub fn edge_functions(length: f64, k: f64) -> Result<(f64, f64)> {
    let x = k * length;
    let multiple = (x / PI).round();
    if multiple >= 1.0 && (x - multiple * PI).abs() < RESONANCE_TOL * x.max(1.0) {
        return Err(Error::Resonance {
            edge: None,
            kl: x,
            multiple: multiple as u64,
        });
    }
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        let f = 1.0 - x2 / 3.0 - x2 * x2 / 45.0;
        let g = 1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0;
        return Ok((f, g));
    }
    Ok((x / x.tan(), x / x.sin()))
}

pub fn vertex_matrix(design: &FiniteGraphDesign, k: f64) -> Result<ComplexMatrix> {
    let n = design.n();
    let d = design.length_unit();
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, v) in design.deltas().iter().enumerate() {
        m[(i, i)] = Complex64::new(v * d, 0.0);
    }
    for e in design.edges() {
        let (f, g) = edge_functions(e.length(d), k).map_err(|err| match err {
            Error::Resonance { kl, multiple, .. } => Error::Resonance {
                edge: Some((e.i, e.j)),
                kl,
                multiple,
            },
            other => other,
        })?;
        m[(e.i, e.i)] += e.r * f;
        m[(e.j, e.j)] += e.r * f;
        let hop = -Complex64::from_polar(e.r * g, e.chi);
        m[(e.i, e.j)] += hop;
        m[(e.j, e.i)] += hop.conj();
    }
    let residual = m.hermitian_residual();
    if residual > HERMITICITY_TOL * m.max_abs().max(1.0) {
        return Err(Error::Internal(format!(
            "vertex matrix not Hermitian (residual {residual:e})"
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPoint {
    pub k: f64,
    pub kd: f64,
    pub s: ComplexMatrix,
    /// `|S_ij|^2`, row-major.
    pub prob: Vec<f64>,
    /// `max_ij |S_ij(k) - S_target_ij|`.
    pub deviation: Option<f64>,
    /// `max_ij | |S_ij(k)|^2 - |S_target_ij|^2 |`.
    pub prob_deviation: Option<f64>,
}

impl SimulationPoint {
    pub fn n(&self) -> usize {
        self.s.rows()
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.prob[i * self.n() + j]
    }

    pub fn compare_to(&mut self, target: &ComplexMatrix) {
        self.deviation = Some(self.s.max_abs_diff(target));
        self.prob_deviation = Some(
            self.prob
                .iter()
                .zip(target.data())
                .map(|(p, t)| (p - t.norm_sqr()).abs())
                .fold(0.0, f64::max),
        );
    }

    /// Largest `|sum_j P_ij - 1|` over rows and columns.
    pub fn flux_residual(&self) -> f64 {
        let n = self.n();
        let rows = (0..n).map(|i| (0..n).map(|j| self.probability(i, j)).sum::<f64>());
        let cols = (0..n).map(|j| (0..n).map(|i| self.probability(i, j)).sum::<f64>());
        rows.chain(cols)
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn scattering_at(
    design: &FiniteGraphDesign,
    k: f64,
    tol: &Tolerance,
) -> Result<SimulationPoint> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidRange(format!(
            "momentum must be positive, got {k}"
        )));
    }
    let n = design.n();
    let kd = k * design.length_unit();
    let m = vertex_matrix(design, k)?;
    let ikd = ComplexMatrix::identity(n).scale(Complex64::new(0.0, kd));
    let s = matrix::solve(&(&ikd - &m), &(&ikd + &m), tol).map_err(|e| match e {
        Error::Singular { .. } => {
            Error::Internal(format!("Cayley system singular at k = {k}: {e}"))
        }
        other => other,
    })?;
    let residual = s.unitary_residual();
    if residual > UNITARITY_TOL {
        return Err(Error::Internal(format!(
            "finite-graph S not unitary at k = {k} (residual {residual:e})"
        )));
    }
    let prob = s.data().iter().map(|z| z.norm_sqr()).collect();
    Ok(SimulationPoint {
        k,
        kd,
        s,
        prob,
        deviation: None,
        prob_deviation: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub k: f64,
    pub edge: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub design_hash: String,
    pub points: Vec<SimulationPoint>,
    pub skipped: Vec<SkippedPoint>,
}

/// First 16 hex digits of the SHA-256 of the design's JSON form.
pub fn design_hash(design: &FiniteGraphDesign) -> String {
    let json = serde_json::to_vec(design).expect("design serializes");
    let digest = Sha256::digest(&json);
    hex::encode(&digest[..8])
}

/// `steps` equally spaced momenta from `k_min` to `k_max` inclusive.
pub fn momentum_grid(k_min: f64, k_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(k_min.is_finite() && k_max.is_finite() && k_min > 0.0 && k_min < k_max) {
        return Err(Error::InvalidRange(format!(
            "need 0 < k_min < k_max, got k_min = {k_min}, k_max = {k_max}"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidRange(format!(
            "need at least 2 steps, got {steps}"
        )));
    }
    let h = (k_max - k_min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                k_max
            } else {
                k_min + h * i as f64
            }
        })
        .collect())
}

/// Evaluates the design on a uniform momentum grid. Resonant momenta are
/// reported in `skipped`; grid points are independent and evaluated in
/// parallel, results keep grid order.
pub fn sweep(
    design: &FiniteGraphDesign,
    target: Option<&ScatteringMatrix>,
    k_min: f64,
    k_max: f64,
    steps: usize,
    tol: &Tolerance,
) -> Result<SweepResult> {
    let grid = momentum_grid(k_min, k_max, steps)?;
    if let Some(t) = target {
        if t.n() != design.n() {
            return Err(Error::Dimension(format!(
                "target is {0}x{0}, design has {1} endpoints",
                t.n(),
                design.n()
            )));
        }
    }

    let outcomes: Vec<Result<SimulationPoint>> = grid
        .par_iter()
        .map(|&k| {
            let mut point = scattering_at(design, k, tol)?;
            if let Some(t) = target {
                point.compare_to(t.matrix());
            }
            Ok(point)
        })
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for (k, outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(p) => points.push(p),
            Err(Error::Resonance {
                edge: Some((i, j)), ..
            }) => skipped.push(SkippedPoint {
                k: *k,
                edge: [i, j],
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(SweepResult {
        design_hash: design_hash(design),
        points,
        skipped,
    })
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepResult {
    pub fn csv_header(n: usize) -> Vec<String> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut cols = vec!["k".to_string(), "kd".to_string()];
        for (i, j) in &pairs {
            cols.push(format!("S_{i}_{j}_re"));
            cols.push(format!("S_{i}_{j}_im"));
        }
        cols.extend(pairs.iter().map(|(i, j)| format!("P_{i}_{j}")));
        cols.push("deviation".into());
        cols
    }

    /// One row per evaluated grid point; `deviation` is empty without a target.
    pub fn write_csv<W: Write>(&self, n: usize, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::csv_header(n).join(","))?;
        for p in &self.points {
            let mut row = vec![fmt_float(p.k), fmt_float(p.kd)];
            for i in 0..n {
                for j in i..n {
                    let z = p.s[(i, j)];
                    row.push(fmt_float(z.re));
                    row.push(fmt_float(z.im));
                }
            }
            for i in 0..n {
                for j in i..n {
                    row.push(fmt_float(p.probability(i, j)));
                }
            }
            row.push(p.deviation.map(fmt_float).unwrap_or_default());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn skipped_json(&self) -> serde_json::Value {
        serde_json::json!({ "skipped": self.skipped })
    }
}
