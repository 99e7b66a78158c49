//! Zero-energy solutions in the Nambu basis.
//!
//! At `E = 0` every bond carries the four columns
//!
//! ```text
//! (q*, 0, 0, −q) e^{−Δ₀x},  (0, q, q*, 0) e^{−Δ₀x},
//! (q, 0, 0, −q*) e^{+Δ₀x},  (0, q*, q, 0) e^{+Δ₀x},     q = 1 + i,
//! ```
//!
//! weighted by `(μ_α, μ_β, μ̂_α, μ̂_β)`.

use num_complex::Complex64;

use crate::boundary::{BoundaryConditionPair, BoundaryValues, trace_vectors};
use crate::eigen::{gram_matrix, normalize, AssembledState};
use crate::error::{Error, Result};
use crate::graph::{Branch, MetricStarGraph, ModeBasis, ModeCoefficients, Spinor};
use crate::linalg::{self, c, from_blocks, re, CMatrix, CVector, ZERO};
use crate::secular::DEFAULT_TOL;
use crate::transmission::{transmission_from_primed, PrimedMatrices, TransmissionMatrix};

/// `q = 1 + i`.
pub const Q: Complex64 = Complex64::new(1.0, 1.0);

/// Bonds with `L_j Δ₀` above this have their growing amplitudes rescaled by
/// `e^{−Δ₀L_j}` before the null-space solve.
pub const GROWTH_RESCALE: f64 = 30.0;

/// Zero-energy columns and their profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroModeBasis {
    pub q: Complex64,
    pub delta0: f64,
}

impl ZeroModeBasis {
    pub fn new(delta0: f64) -> Self {
        Self { q: Q, delta0 }
    }

    pub fn columns(&self) -> [Spinor; 4] {
        ModeBasis::zero(self.delta0).columns
    }

    pub fn as_mode_basis(&self) -> ModeBasis {
        ModeBasis::zero(self.delta0)
    }
}

pub fn zero_mode_evaluate(
    coeffs: &ModeCoefficients,
    bond: usize,
    x: f64,
    graph: &MetricStarGraph,
) -> Result<Spinor> {
    graph.check_position(bond, x)?;
    if coeffs.n_bonds() != graph.n_bonds() {
        return Err(Error::DimensionMismatch { expected: graph.n_bonds(), actual: coeffs.n_bonds() });
    }
    Ok(ModeBasis::zero(graph.delta0()).value(&coeffs.bond(bond), x))
}

/// The explicit three-bond zero mode with equal lengths `length`:
///
/// ```text
/// Ψ^{(1,2)}(x) = (q*, q, q*, −q) e^{Δ₀(L−x)} + (−q, q*, q, q*) e^{−Δ₀(L−x)}
/// Ψ^{(3)}(x)   = (q*, −2q, −2q*, −q) e^{Δ₀(L−x)} + (−q, −2q*, −2q, q*) e^{−Δ₀(L−x)}
/// ```
pub fn closed_form_y_junction(length: f64, delta0: f64) -> Result<AssembledState> {
    let graph = MetricStarGraph::equal(3, length, delta0)?;
    let grow = re((delta0 * length).exp());
    let decay = re((-delta0 * length).exp());
    let coefficients = ModeCoefficients {
        mu_alpha: vec![grow; 3],
        mu_beta: vec![grow, grow, -grow * 2.0],
        mu_hat_alpha: vec![-decay; 3],
        mu_hat_beta: vec![decay, decay, -decay * 2.0],
    };
    AssembledState::new(graph, 0.0, Branch::Zero, coefficients)
}

/// Primed matrices of the zero-energy decomposition, with outgoing
/// `(μ; e^{Δ₀L}μ̂)` and incoming `(μ̂; e^{−Δ₀L}μ)` amplitudes.
pub fn zero_mode_primed(graph: &MetricStarGraph) -> PrimedMatrices {
    let n = graph.n_bonds();
    let qs = Q.conj();
    let d = |z: Complex64| linalg::scaled_identity(n, z);
    let z = CMatrix::zeros(n, n);
    let diag4 = |a: Complex64, b: Complex64, c: Complex64, e: Complex64| {
        from_blocks(
            n,
            [
                [d(a), z.clone(), z.clone(), z.clone()],
                [z.clone(), d(b), z.clone(), z.clone()],
                [z.clone(), z.clone(), d(c), z.clone()],
                [z.clone(), z.clone(), z.clone(), d(e)],
            ],
        )
    };
    let cross = |p: Complex64, m: Complex64| {
        from_blocks(
            n,
            [
                [z.clone(), d(p), z.clone(), z.clone()],
                [d(p), z.clone(), z.clone(), z.clone()],
                [z.clone(), z.clone(), z.clone(), d(-m)],
                [z.clone(), z.clone(), d(-m), z.clone()],
            ],
        )
    };
    PrimedMatrices {
        a_prime: diag4(qs, qs, Q, Q),
        a_dprime: diag4(Q, Q, qs, qs),
        b_prime: cross(Q, qs),
        b_dprime: cross(qs, Q),
    }
}

pub fn zero_mode_transmission(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
) -> Result<TransmissionMatrix> {
    if bc.n_bonds() != graph.n_bonds() {
        return Err(Error::DimensionMismatch { expected: graph.n_bonds(), actual: bc.n_bonds() });
    }
    let kappa = c(0.0, graph.delta0());
    transmission_from_primed(bc, &zero_mode_primed(graph), 0.0, kappa, Branch::Zero)
}

/// Per-bond weights applied to the growing amplitudes in the solve.
fn growth_scales(graph: &MetricStarGraph) -> Vec<f64> {
    graph
        .lengths()
        .iter()
        .map(|&l| {
            let s = l * graph.delta0();
            if s > GROWTH_RESCALE {
                (-s).exp()
            } else {
                1.0
            }
        })
        .collect()
}

/// Matrix mapping stacked coefficients `(μ_α; μ_β; μ̂_α / w; μ̂_β / w)` to
/// the joint trace vector `(ψ₁; ψ₂)`, where `w` are the growth scales.
fn zero_trace_matrix(graph: &MetricStarGraph, scales: &[f64]) -> CMatrix {
    let n = graph.n_bonds();
    let basis = ModeBasis::zero(graph.delta0());
    let mut m = CMatrix::zeros(8 * n, 4 * n);
    for col in 0..4 * n {
        let mut coeffs = vec![ZERO; 4 * n];
        let j = col % n;
        coeffs[col] = if col >= 2 * n { re(scales[j]) } else { re(1.0) };
        let cf = ModeCoefficients::from_stacked(&coeffs).expect("length 4N");
        let values = BoundaryValues {
            at_vertex: (0..n).map(|b| basis.value(&cf.bond(b), 0.0)).collect(),
            at_end: (0..n).map(|b| basis.value(&cf.bond(b), graph.length(b))).collect(),
        };
        let t = trace_vectors(&values).expect("consistent bond count");
        m.view_mut((0, col), (4 * n, 1)).copy_from(&t.psi1);
        m.view_mut((4 * n, col), (4 * n, 1)).copy_from(&t.psi2);
    }
    m
}

/// Boundary system `A Z₁ + B Z₂` acting on rescaled zero-mode coefficients.
pub fn zero_mode_system(bc: &BoundaryConditionPair, graph: &MetricStarGraph) -> CMatrix {
    let n = graph.n_bonds();
    let z = zero_trace_matrix(graph, &growth_scales(graph));
    let z1 = z.rows(0, 4 * n).into_owned();
    let z2 = z.rows(4 * n, 4 * n).into_owned();
    bc.a() * z1 + bc.b() * z2
}

/// Normalised zero modes, one per null vector of the boundary system.
pub fn solve_zero_modes(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
) -> Result<Vec<AssembledState>> {
    solve_zero_modes_with_tol(bc, graph, DEFAULT_TOL)
}

pub fn solve_zero_modes_with_tol(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    tol: f64,
) -> Result<Vec<AssembledState>> {
    let n = graph.n_bonds();
    if bc.n_bonds() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: bc.n_bonds() });
    }
    let scales = growth_scales(graph);
    let system = zero_mode_system(bc, graph);
    let null = linalg::null_space(&system, tol);
    let mut states = Vec::with_capacity(null.ncols());
    for v in null.column_iter() {
        let coeffs: Vec<Complex64> = (0..4 * n)
            .map(|k| if k >= 2 * n { v[k] * scales[k % n] } else { v[k] })
            .collect();
        let cf = ModeCoefficients::from_stacked(&coeffs)?;
        let state = AssembledState::new(graph.clone(), 0.0, Branch::Zero, cf)?;
        states.push(normalize(&state)?);
    }
    Ok(states)
}

/// Largest deviation from `(Ψ₃, Ψ₄) = (Ψ₂*, −Ψ₁*)` over the sample grid,
/// relative to the largest spinor entry.
pub fn nambu_diagnostic(state: &AssembledState, points_per_bond: usize) -> f64 {
    let scale = state
        .sample(points_per_bond)
        .iter()
        .map(|s| s.value.camax())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    state.nambu_deviation(points_per_bond) / scale
}

/// `1 − ‖P f‖² / ‖f‖²` for the `L²`-orthogonal projection `P` of `target`
/// onto the span of `states`; all on the same graph and branch.
pub fn projection_deficit(target: &AssembledState, states: &[AssembledState]) -> f64 {
    if states.is_empty() {
        return 1.0;
    }
    let gram = gram_matrix(&target.graph, &target.basis());
    let f = CVector::from_vec(target.coefficients.stacked());
    let v = CMatrix::from_columns(
        &states
            .iter()
            .map(|s| CVector::from_vec(s.coefficients.stacked()))
            .collect::<Vec<_>>(),
    );
    let ff = f.dotc(&(&gram * &f)).re;
    let vgv = v.adjoint() * &gram * &v;
    let vgf = v.adjoint() * &gram * &f;
    let proj = match vgv.clone().cholesky() {
        Some(ch) => {
            let x = ch.solve(&vgf);
            vgf.dotc(&x).re
        }
        None => {
            let x = vgv.pseudo_inverse(1e-14).map(|p| p * &vgf).unwrap_or(vgf.clone() * ZERO);
            vgf.dotc(&x).re
        }
    };
    (1.0 - proj / ff).max(0.0)
}
