//! Vertex transmission matrix `T = −(AA′ + BB′)⁻¹ (AA″ + BB″)` and the bond
//! scattering matrix.
//!
//! Mode vectors at the vertex:
//!
//! ```text
//! outgoing = ( μ_α ; μ_β ; e^{−iκL} μ̂_α ; e^{−iκL} μ̂_β )
//! incoming = ( μ̂_α ; μ̂_β ; e^{iκL} μ_α ; e^{iκL} μ_β )
//! ```
//!
//! `ψ₁ = A′·outgoing + A″·incoming` and `ψ₂ = B′·outgoing + B″·incoming`, so the
//! vertex condition becomes `(AA′+BB′)·outgoing + (AA″+BB″)·incoming = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::boundary::{BoundaryConditionPair, BoundaryValues};
use crate::error::{Error, Result};
use crate::graph::{kappa, Branch, MetricStarGraph, ModeBasis, ModeCoefficients};
use crate::linalg::{self, from_blocks, re, CMatrix, CVector};

/// Largest accepted condition number of `AA′ + BB′`.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimedMatrices {
    pub a_prime: CMatrix,
    pub a_dprime: CMatrix,
    pub b_prime: CMatrix,
    pub b_dprime: CMatrix,
}

/// Primed matrices for a positive energy `E`.
pub fn build_primed(energy: f64, graph: &MetricStarGraph) -> PrimedMatrices {
    let n = graph.n_bonds();
    let d = graph.delta0();
    let k = kappa(energy, d);
    let e = linalg::scaled_identity(n, re(energy / d));
    let kk = linalg::scaled_identity(n, k / d);
    let id = linalg::identity(n);
    let z = CMatrix::zeros(n, n);
    let a_prime = from_blocks(
        n,
        [
            [id.clone(), z.clone(), z.clone(), z.clone()],
            [e.clone(), -&kk, z.clone(), z.clone()],
            [z.clone(), z.clone(), id.clone(), z.clone()],
            [z.clone(), z.clone(), e.clone(), kk.clone()],
        ],
    );
    let a_dprime = from_blocks(
        n,
        [
            [id.clone(), z.clone(), z.clone(), z.clone()],
            [e.clone(), kk.clone(), z.clone(), z.clone()],
            [z.clone(), z.clone(), id.clone(), z.clone()],
            [z.clone(), z.clone(), e.clone(), -&kk],
        ],
    );
    let b_prime = from_blocks(
        n,
        [
            [z.clone(), id.clone(), z.clone(), z.clone()],
            [kk.clone(), -&e, z.clone(), z.clone()],
            [z.clone(), z.clone(), z.clone(), -&id],
            [z.clone(), z.clone(), kk.clone(), e.clone()],
        ],
    );
    let b_dprime = from_blocks(
        n,
        [
            [z.clone(), id.clone(), z.clone(), z.clone()],
            [-&kk, -&e, z.clone(), z.clone()],
            [z.clone(), z.clone(), z.clone(), -&id],
            [z.clone(), z.clone(), -&kk, e.clone()],
        ],
    );
    PrimedMatrices { a_prime, a_dprime, b_prime, b_dprime }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransmissionMatrix {
    #[serde(serialize_with = "crate::export::ser_matrix")]
    pub t: CMatrix,
    pub energy: f64,
    pub kappa: Complex64,
    pub branch: Branch,
    /// 2-norm condition number of `AA′ + BB′`.
    pub condition_number: f64,
}

impl TransmissionMatrix {
    /// Outgoing amplitudes for the given incoming ones.
    pub fn apply(&self, incoming: &CVector) -> CVector {
        &self.t * incoming
    }
}

pub(crate) fn transmission_from_primed(
    bc: &BoundaryConditionPair,
    primed: &PrimedMatrices,
    energy: f64,
    kappa: Complex64,
    branch: Branch,
) -> Result<TransmissionMatrix> {
    let (lhs, rhs) = vertex_system(bc, primed);
    let condition = linalg::condition_number(&lhs);
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::SingularSystem { energy, condition });
    }
    let t = lhs
        .col_piv_qr()
        .solve(&(-rhs))
        .ok_or(Error::SingularSystem { energy, condition })?;
    Ok(TransmissionMatrix { t, energy, kappa, branch, condition_number: condition })
}

/// `(AA′ + BB′, AA″ + BB″)`.
pub fn vertex_system(bc: &BoundaryConditionPair, p: &PrimedMatrices) -> (CMatrix, CMatrix) {
    (
        bc.a() * &p.a_prime + bc.b() * &p.b_prime,
        bc.a() * &p.a_dprime + bc.b() * &p.b_dprime,
    )
}

/// `‖(AA′+BB′)T + (AA″+BB″)‖_F / ‖AA″+BB″‖_F`.
pub fn linear_system_residual(
    bc: &BoundaryConditionPair,
    primed: &PrimedMatrices,
    t: &TransmissionMatrix,
) -> f64 {
    let (lhs, rhs) = vertex_system(bc, primed);
    let scale = rhs.norm().max(f64::MIN_POSITIVE);
    (lhs * &t.t + &rhs).norm() / scale
}

pub fn transmission_matrix(
    energy: f64,
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
) -> Result<TransmissionMatrix> {
    if bc.n_bonds() != graph.n_bonds() {
        return Err(Error::DimensionMismatch { expected: graph.n_bonds(), actual: bc.n_bonds() });
    }
    let primed = build_primed(energy, graph);
    transmission_from_primed(bc, &primed, energy, kappa(energy, graph.delta0()), Branch::Positive)
}

/// `S = T · (I₄ ⊗ diag e^{iκL_l})`: every column block gets its bond phase.
pub fn scattering_matrix(t: &TransmissionMatrix, graph: &MetricStarGraph) -> CMatrix {
    let n = graph.n_bonds();
    let phases = graph.phases(t.kappa);
    let mut s = t.t.clone();
    for col in 0..s.ncols() {
        let mut column = s.column_mut(col);
        column *= phases[col % n];
    }
    s
}

/// Propagation factors `e^{s_k L_j}` of the first (μ) and last (μ̂) basis pairs.
fn end_factors(basis: &ModeBasis, graph: &MetricStarGraph) -> (Vec<Complex64>, Vec<Complex64>) {
    let fwd = graph.lengths().iter().map(|&l| (basis.rates[0] * l).exp()).collect();
    let bwd = graph.lengths().iter().map(|&l| (basis.rates[2] * l).exp()).collect();
    (fwd, bwd)
}

/// `(outgoing, incoming)` mode vectors of a coefficient set.
pub fn mode_vectors(
    coeffs: &ModeCoefficients,
    basis: &ModeBasis,
    graph: &MetricStarGraph,
) -> (CVector, CVector) {
    let n = graph.n_bonds();
    let (fwd, bwd) = end_factors(basis, graph);
    let mut out = CVector::zeros(4 * n);
    let mut inc = CVector::zeros(4 * n);
    for j in 0..n {
        out[j] = coeffs.mu_alpha[j];
        out[n + j] = coeffs.mu_beta[j];
        out[2 * n + j] = bwd[j] * coeffs.mu_hat_alpha[j];
        out[3 * n + j] = bwd[j] * coeffs.mu_hat_beta[j];
        inc[j] = coeffs.mu_hat_alpha[j];
        inc[n + j] = coeffs.mu_hat_beta[j];
        inc[2 * n + j] = fwd[j] * coeffs.mu_alpha[j];
        inc[3 * n + j] = fwd[j] * coeffs.mu_beta[j];
    }
    (out, inc)
}

/// Bond-end spinors built from independent outgoing and incoming amplitudes:
/// at the vertex the μ come from `outgoing` and the μ̂ from `incoming`; at the
/// far ends the propagated amplitudes swap roles.
pub fn reconstruct_boundary(
    basis: &ModeBasis,
    graph: &MetricStarGraph,
    outgoing: &CVector,
    incoming: &CVector,
) -> BoundaryValues {
    let n = graph.n_bonds();
    let u = &basis.columns;
    BoundaryValues {
        at_vertex: (0..n)
            .map(|j| u[0] * outgoing[j] + u[1] * outgoing[n + j] + u[2] * incoming[j] + u[3] * incoming[n + j])
            .collect(),
        at_end: (0..n)
            .map(|j| {
                u[0] * incoming[2 * n + j]
                    + u[1] * incoming[3 * n + j]
                    + u[2] * outgoing[2 * n + j]
                    + u[3] * outgoing[3 * n + j]
            })
            .collect(),
    }
}
