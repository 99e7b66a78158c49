//! Eigen-spinors assembled from mode coefficients, the current functional and
//! normalisation.

use num_complex::Complex64;

use crate::boundary::{trace_vectors, BoundaryConditionPair, BoundaryTraceVectors, BoundaryValues};
use crate::error::{Error, Result};
use crate::graph::{bdg_local, Branch, MetricStarGraph, ModeBasis, ModeCoefficients, Spinor, SpinorField, SpinorSample};
use crate::linalg::{re, CMatrix, CVector};

/// Panels per bond for the Simpson fallback of the norm integral.
pub const SIMPSON_PANELS: usize = 1 << 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledState {
    /// Signed eigenvalue of `H_BdG`.
    pub energy: f64,
    pub graph: MetricStarGraph,
    pub coefficients: ModeCoefficients,
    pub branch: Branch,
}

impl AssembledState {
    pub fn new(
        graph: MetricStarGraph,
        energy: f64,
        branch: Branch,
        coefficients: ModeCoefficients,
    ) -> Result<Self> {
        let n = graph.n_bonds();
        for len in [
            coefficients.mu_alpha.len(),
            coefficients.mu_beta.len(),
            coefficients.mu_hat_alpha.len(),
            coefficients.mu_hat_beta.len(),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, actual: len });
            }
        }
        let energy = if branch == Branch::Zero { 0.0 } else { energy };
        Ok(Self { energy, graph, coefficients, branch })
    }

    pub fn basis(&self) -> ModeBasis {
        ModeBasis::for_branch(self.branch, self.energy, self.graph.delta0())
    }

    pub fn evaluate(&self, bond: usize, x: f64) -> Result<Spinor> {
        self.graph.check_position(bond, x)?;
        Ok(self.basis().value(&self.coefficients.bond(bond), x))
    }

    pub fn derivative(&self, bond: usize, x: f64) -> Result<Spinor> {
        self.graph.check_position(bond, x)?;
        Ok(self.basis().derivative(&self.coefficients.bond(bond), x))
    }

    /// The field restricted to one bond, with analytic derivative.
    pub fn bond_field(&self, bond: usize) -> BondField {
        BondField { basis: self.basis(), amps: self.coefficients.bond(bond) }
    }

    /// `‖(H_BdG Ψ)(x) − E Ψ(x)‖`.
    pub fn ode_residual(&self, bond: usize, x: f64) -> Result<f64> {
        let v = self.evaluate(bond, x)?;
        let d = self.derivative(bond, x)?;
        Ok((bdg_local(&v, &d, self.graph.delta0()) - v * re(self.energy)).norm())
    }

    pub fn boundary_values(&self) -> BoundaryValues {
        let basis = self.basis();
        let n = self.graph.n_bonds();
        BoundaryValues {
            at_vertex: (0..n).map(|j| basis.value(&self.coefficients.bond(j), 0.0)).collect(),
            at_end: (0..n)
                .map(|j| basis.value(&self.coefficients.bond(j), self.graph.length(j)))
                .collect(),
        }
    }

    pub fn traces(&self) -> BoundaryTraceVectors {
        trace_vectors(&self.boundary_values()).expect("one value per bond end")
    }

    pub fn bc_residual(&self, bc: &BoundaryConditionPair) -> Result<f64> {
        bc.residual(&self.traces())
    }

    /// Current `J` at the far end `x = L_j` of every bond.
    pub fn end_currents(&self) -> Vec<f64> {
        self.boundary_values().at_end.iter().map(current).collect()
    }

    /// Current of each bond at the vertex, bonds oriented outward.
    pub fn vertex_currents(&self) -> Vec<f64> {
        self.boundary_values().at_vertex.iter().map(current).collect()
    }

    /// `Σ_j ∫ ‖Ψ^{(j)}‖² dx`, in closed form.
    pub fn norm_squared(&self) -> f64 {
        let g = gram_matrix(&self.graph, &self.basis());
        let v = CVector::from_vec(self.coefficients.stacked());
        v.dotc(&(g * &v)).re
    }

    /// Composite Simpson rule with `panels` (even) panels per bond.
    pub fn norm_squared_simpson(&self, panels: usize) -> f64 {
        let panels = panels + panels % 2;
        let basis = self.basis();
        (0..self.graph.n_bonds())
            .map(|j| {
                let amps = self.coefficients.bond(j);
                let h = self.graph.length(j) / panels as f64;
                let f = |i: usize| basis.value(&amps, i as f64 * h).norm_squared();
                let inner: f64 = (1..panels)
                    .map(|i| if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) })
                    .sum();
                h / 3.0 * (f(0) + inner + f(panels))
            })
            .sum()
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        Self { coefficients: self.coefficients.scale(z), ..self.clone() }
    }

    pub fn sample(&self, points_per_bond: usize) -> Vec<SpinorSample> {
        let basis = self.basis();
        let pts = points_per_bond.max(2);
        let mut out = Vec::with_capacity(pts * self.graph.n_bonds());
        for j in 0..self.graph.n_bonds() {
            let l = self.graph.length(j);
            let amps = self.coefficients.bond(j);
            for i in 0..pts {
                // exact end point; ratios keep shared points identical across resolutions
                let x = if i + 1 == pts { l } else { l * i as f64 / (pts - 1) as f64 };
                out.push(SpinorSample { bond: j, position: x, value: basis.value(&amps, x) });
            }
        }
        out
    }

    /// Largest deviation from `(Ψ₃, Ψ₄) = (Ψ₂*, −Ψ₁*)` over the samples.
    pub fn nambu_deviation(&self, points_per_bond: usize) -> f64 {
        self.sample(points_per_bond)
            .iter()
            .map(|s| {
                let v = s.value;
                (v[2] - v[1].conj()).norm().max((v[3] + v[0].conj()).norm())
            })
            .fold(0.0, f64::max)
    }
}

pub struct BondField {
    basis: ModeBasis,
    amps: [Complex64; 4],
}

impl SpinorField for BondField {
    fn value(&self, x: f64) -> Spinor {
        self.basis.value(&self.amps, x)
    }

    fn derivative(&self, x: f64) -> Spinor {
        self.basis.derivative(&self.amps, x)
    }
}

/// `J = Ψ† (σₓ ⊕ σₓ) Ψ = 2 Re(Ψ₁*Ψ₂) + 2 Re(Ψ₃*Ψ₄)`.
pub fn current(psi: &Spinor) -> f64 {
    2.0 * (psi[0].conj() * psi[1]).re + 2.0 * (psi[2].conj() * psi[3]).re
}

/// `|Σ_j J^{(j)}(0)|` with every bond pointing away from the vertex.
pub fn kirchhoff_residual(state: &AssembledState) -> f64 {
    state.vertex_currents().iter().sum::<f64>().abs()
}

/// Rescale to unit `L²` norm over the whole graph.
pub fn normalize(state: &AssembledState) -> Result<AssembledState> {
    let mut n2 = state.norm_squared();
    if !n2.is_finite() {
        n2 = state.norm_squared_simpson(SIMPSON_PANELS);
    }
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(state.scaled(re(1.0 / n2.sqrt())))
}

/// `∫₀^L e^{s x} dx`.
pub(crate) fn exp_integral(s: Complex64, length: f64) -> Complex64 {
    let z = s * length;
    if z.norm() < 1e-4 {
        re(length) * (re(1.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
    } else {
        (z.exp() - 1.0) / s
    }
}

/// Gram matrix of the `4N` basis functions in the graph `L²` product, in the
/// stacked coefficient ordering `(μ_α; μ_β; μ̂_α; μ̂_β)`.
pub fn gram_matrix(graph: &MetricStarGraph, basis: &ModeBasis) -> CMatrix {
    let n = graph.n_bonds();
    let mut g = CMatrix::zeros(4 * n, 4 * n);
    for j in 0..n {
        let l = graph.length(j);
        for k in 0..4 {
            for m in 0..4 {
                let overlap = basis.columns[k].dotc(&basis.columns[m]);
                g[(k * n + j, m * n + j)] =
                    overlap * exp_integral(basis.rates[k].conj() + basis.rates[m], l);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::build_kirchhoff_zero_mode_bc;
    use crate::graph::dispersion;
    use crate::linalg::{c, ONE, ZERO};
    use crate::secular::{find_spectrum, ScanOptions};

    fn single(branch: Branch, e: f64, slot: usize) -> AssembledState {
        let g = MetricStarGraph::equal(2, 1.0, 1.0).unwrap();
        let mut v = vec![ZERO; 8];
        v[slot] = ONE;
        AssembledState::new(g, e, branch, ModeCoefficients::from_stacked(&v).unwrap()).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let e = 1.6;
        let k = dispersion(e, &MetricStarGraph::equal(1, 1.0, 1.0).unwrap()).kappa;
        let s = single(Branch::Positive, e, 0);
        let v = s.evaluate(0, 0.0).unwrap();
        assert_eq!(v, Spinor::new(ONE, ZERO, re(e), -k));

        let s = single(Branch::Negative, -e, 2); // μ_β of bond 0
        let v = s.evaluate(0, 0.0).unwrap();
        assert!((v - Spinor::new(k, re(-e), ZERO, ONE)).norm() < 1e-15);

        let z = AssembledState::new(
            MetricStarGraph::equal(2, 1.0, 1.0).unwrap(),
            1.6,
            Branch::Positive,
            ModeCoefficients::zeros(2),
        )
        .unwrap();
        assert_eq!(z.evaluate(1, 0.5).unwrap(), Spinor::zeros());
        assert!(z.evaluate(1, 1.5).is_err());
        assert!(normalize(&z).is_err());
        assert_eq!(kirchhoff_residual(&z), 0.0);
    }

    #[test]
    fn current_examples() {
        let (e, d) = (2.5f64, 1.0f64);
        let k = (e * e - d * d).sqrt();
        let psi = Spinor::new(ONE, ZERO, re(e / d), re(-k / d));
        assert!((current(&psi) + 2.0 * e * k / (d * d)).abs() < 1e-13);
        assert_eq!(current(&Spinor::new(ONE, ZERO, ZERO, ZERO)), 0.0);
        let r = Spinor::new(re(1.5), re(-2.0), re(0.5), re(3.0));
        assert!((current(&r) - 2.0 * (1.5 * -2.0 + 0.5 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn analytic_norm_matches_trapezoid() {
        let g = MetricStarGraph::new(vec![0.8, 1.7], 1.2).unwrap();
        let coeffs = ModeCoefficients::from_stacked(
            &(0..8).map(|k| c(0.3 * k as f64 - 1.0, 0.2 + 0.1 * k as f64)).collect::<Vec<_>>(),
        )
        .unwrap();
        for (branch, e) in [(Branch::Positive, 2.3), (Branch::Positive, 0.4), (Branch::Negative, -3.1), (Branch::Zero, 0.0)] {
            let s = AssembledState::new(g.clone(), e, branch, coeffs.clone()).unwrap();
            let n_pts = 40_000;
            let trap: f64 = (0..2)
                .map(|j| {
                    let l = g.length(j);
                    let h = l / n_pts as f64;
                    let f = |i: usize| s.evaluate(j, (i as f64 * h).min(l)).unwrap().norm_squared();
                    h * (0.5 * f(0) + (1..n_pts).map(f).sum::<f64>() + 0.5 * f(n_pts))
                })
                .sum();
            let exact = s.norm_squared();
            assert!(((exact - trap) / exact).abs() < 1e-8, "{branch}: {exact} vs {trap}");
            assert!(((exact - s.norm_squared_simpson(SIMPSON_PANELS)) / exact).abs() < 1e-10);
        }
    }

    #[test]
    fn normalize_is_projective_and_idempotent() {
        let s = single(Branch::Positive, 2.0, 1).scaled(c(0.3, 0.4));
        let n1 = normalize(&s).unwrap();
        assert!((n1.norm_squared() - 1.0).abs() < 1e-12);
        let n2 = normalize(&n1).unwrap();
        assert!((n2.coefficients.norm() - n1.coefficients.norm()).abs() < 1e-12);
        let n5 = normalize(&s.scaled(re(5.0))).unwrap();
        for (a, b) in n5.coefficients.stacked().iter().zip(n1.coefficients.stacked()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sampling_resolution_refines_only() {
        let s = single(Branch::Positive, 2.0, 0);
        let coarse = s.sample(5);
        let fine = s.sample(9);
        for (i, c_) in coarse.iter().enumerate().filter(|(_, p)| p.bond == 0) {
            assert_eq!(c_.position, fine[2 * i].position);
            assert_eq!(c_.value, fine[2 * i].value);
        }
    }

    #[test]
    fn eigenstates_conserve_current() {
        let g = MetricStarGraph::new(vec![1.0, 1.4, 0.6], 1.0).unwrap();
        let bc = build_kirchhoff_zero_mode_bc(3).unwrap();
        let out = find_spectrum(&bc, &g, &ScanOptions::new(0.05, 4.0, 800)).unwrap();
        assert!(!out.roots.is_empty());
        for r in &out.roots {
            for cf in &r.coefficients {
                let s = normalize(&AssembledState::new(g.clone(), r.energy, r.branch, cf.clone()).unwrap()).unwrap();
                assert!(kirchhoff_residual(&s) < 1e-10);
                assert!(s.bc_residual(&bc).unwrap() < 1e-8);
                for j in 0..3 {
                    for i in 0..=20 {
                        let x = g.length(j) * i as f64 / 20.0;
                        assert!(s.ode_residual(j, x).unwrap() < 1e-9);
                    }
                }
            }
        }
    }
}
