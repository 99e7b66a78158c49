//! Graph geometry, dispersion and the local BdG operator.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, re, I, ZERO};

/// Four-component spinor `(Ψ₁, Ψ₂, Ψ₃, Ψ₄)`.
pub type Spinor = Vector4<Complex64>;

/// `N` bonds of finite length meeting at a single vertex, with a uniform gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStarGraph {
    lengths: Vec<f64>,
    delta0: f64,
}

impl MetricStarGraph {
    pub fn new(lengths: Vec<f64>, delta0: f64) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidGraph("at least one bond is required".into()));
        }
        if let Some((j, l)) = lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::InvalidGraph(format!(
                "bond {j} has non-positive length {l}"
            )));
        }
        if !(delta0.is_finite() && delta0 > 0.0) {
            return Err(Error::ZeroGap(delta0));
        }
        Ok(Self { lengths, delta0 })
    }

    /// `n` bonds of common length `length`.
    pub fn equal(n: usize, length: f64, delta0: f64) -> Result<Self> {
        Self::new(vec![length; n], delta0)
    }

    pub fn n_bonds(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, bond: usize) -> f64 {
        self.lengths[bond]
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn check_position(&self, bond: usize, x: f64) -> Result<()> {
        let n_bonds = self.n_bonds();
        let length = *self
            .lengths
            .get(bond)
            .ok_or(Error::BondIndex { bond, n_bonds })?;
        if !(0.0..=length).contains(&x) {
            return Err(Error::OutOfRange { bond, x, length });
        }
        Ok(())
    }

    /// Per-bond phases `e^{iκL_j}`.
    pub fn phases(&self, kappa: Complex64) -> Vec<Complex64> {
        self.lengths.iter().map(|&l| (I * kappa * l).exp()).collect()
    }
}

/// Energy together with its quasi-momentum `κ = √(E² − Δ₀²)`.
///
/// The principal branch is used: κ ≥ 0 outside the gap, κ = i|κ| inside it, so
/// that `e^{iκx}` decays for in-gap energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub energy: f64,
    pub kappa: Complex64,
}

impl Dispersion {
    pub fn in_gap(&self) -> bool {
        self.kappa.im > 0.0
    }
}

pub fn dispersion(energy: f64, graph: &MetricStarGraph) -> Dispersion {
    Dispersion {
        energy,
        kappa: kappa(energy, graph.delta0()),
    }
}

pub(crate) fn kappa(energy: f64, delta0: f64) -> Complex64 {
    // factored form keeps relative accuracy next to the branch point
    let d = (energy.abs() - delta0) * (energy.abs() + delta0);
    if d >= 0.0 {
        re(d.sqrt())
    } else {
        c(0.0, (-d).sqrt())
    }
}

/// Which family of plane-wave spinors spans the solutions on a bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `H Ψ = E Ψ`, E > 0 spinors.
    Positive,
    /// `H Ψ = −E Ψ` spinors parametrised by the magnitude E.
    Negative,
    /// `H Ψ = 0` with the `q = 1 + i` Nambu columns.
    Zero,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Positive => "positive",
            Branch::Negative => "negative",
            Branch::Zero => "zero",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-bond amplitudes of the four basis spinors, ordered
/// `(μ_α, μ_β, μ̂_α, μ̂_β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub mu_alpha: Vec<Complex64>,
    pub mu_beta: Vec<Complex64>,
    pub mu_hat_alpha: Vec<Complex64>,
    pub mu_hat_beta: Vec<Complex64>,
}

impl ModeCoefficients {
    pub fn zeros(n: usize) -> Self {
        Self {
            mu_alpha: vec![ZERO; n],
            mu_beta: vec![ZERO; n],
            mu_hat_alpha: vec![ZERO; n],
            mu_hat_beta: vec![ZERO; n],
        }
    }

    pub fn n_bonds(&self) -> usize {
        self.mu_alpha.len()
    }

    /// Unpack a `4N` vector laid out as `(μ_α; μ_β; μ̂_α; μ̂_β)`.
    pub fn from_stacked(v: &[Complex64]) -> Result<Self> {
        if v.len() % 4 != 0 || v.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 4 * (v.len() / 4).max(1),
                actual: v.len(),
            });
        }
        let n = v.len() / 4;
        Ok(Self {
            mu_alpha: v[..n].to_vec(),
            mu_beta: v[n..2 * n].to_vec(),
            mu_hat_alpha: v[2 * n..3 * n].to_vec(),
            mu_hat_beta: v[3 * n..].to_vec(),
        })
    }

    pub fn stacked(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(4 * self.n_bonds());
        v.extend_from_slice(&self.mu_alpha);
        v.extend_from_slice(&self.mu_beta);
        v.extend_from_slice(&self.mu_hat_alpha);
        v.extend_from_slice(&self.mu_hat_beta);
        v
    }

    /// The four amplitudes of one bond.
    pub fn bond(&self, j: usize) -> [Complex64; 4] {
        [
            self.mu_alpha[j],
            self.mu_beta[j],
            self.mu_hat_alpha[j],
            self.mu_hat_beta[j],
        ]
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let s = |v: &[Complex64]| v.iter().map(|a| a * z).collect();
        Self {
            mu_alpha: s(&self.mu_alpha),
            mu_beta: s(&self.mu_beta),
            mu_hat_alpha: s(&self.mu_hat_alpha),
            mu_hat_beta: s(&self.mu_hat_beta),
        }
    }

    pub fn norm(&self) -> f64 {
        self.stacked().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A spinor value sampled on a bond.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorSample {
    pub bond: usize,
    pub position: f64,
    pub value: Spinor,
}

/// Four basis spinors `u_k` with exponential profiles `e^{s_k x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    pub columns: [Spinor; 4],
    pub rates: [Complex64; 4],
}

impl ModeBasis {
    /// Positive-energy plane waves for eigenvalue `energy`.
    pub fn positive(energy: f64, kappa: Complex64, delta0: f64) -> Self {
        let e = re(energy / delta0);
        let k = kappa / delta0;
        let one = re(1.0);
        Self {
            columns: [
                Spinor::new(one, ZERO, e, -k),
                Spinor::new(ZERO, one, -k, e),
                Spinor::new(one, ZERO, e, k),
                Spinor::new(ZERO, one, k, e),
            ],
            rates: [I * kappa, I * kappa, -I * kappa, -I * kappa],
        }
    }

    /// Negative-energy plane waves; `magnitude` is |E| and the eigenvalue is −|E|.
    pub fn negative(magnitude: f64, kappa: Complex64, delta0: f64) -> Self {
        let e = re(magnitude / delta0);
        let k = kappa / delta0;
        let one = re(1.0);
        Self {
            columns: [
                Spinor::new(-e, k, one, ZERO),
                Spinor::new(k, -e, ZERO, one),
                Spinor::new(-e, -k, one, ZERO),
                Spinor::new(-k, -e, ZERO, one),
            ],
            rates: [I * kappa, I * kappa, -I * kappa, -I * kappa],
        }
    }

    /// Zero-energy Nambu columns with `q = 1 + i`: two decaying (`e^{−Δ₀x}`)
    /// and two growing (`e^{Δ₀x}`) solutions.
    pub fn zero(delta0: f64) -> Self {
        let q = c(1.0, 1.0);
        let qs = q.conj();
        Self {
            columns: [
                Spinor::new(qs, ZERO, ZERO, -q),
                Spinor::new(ZERO, q, qs, ZERO),
                Spinor::new(q, ZERO, ZERO, -qs),
                Spinor::new(ZERO, qs, q, ZERO),
            ],
            rates: [re(-delta0), re(-delta0), re(delta0), re(delta0)],
        }
    }

    /// Basis for the given branch and signed eigenvalue of `H_BdG`.
    pub fn for_branch(branch: Branch, energy: f64, delta0: f64) -> Self {
        match branch {
            Branch::Positive => Self::positive(energy, kappa(energy, delta0), delta0),
            Branch::Negative => {
                let m = energy.abs();
                Self::negative(m, kappa(m, delta0), delta0)
            }
            Branch::Zero => Self::zero(delta0),
        }
    }

    pub fn value(&self, amps: &[Complex64; 4], x: f64) -> Spinor {
        (0..4).fold(Spinor::zeros(), |acc, k| {
            acc + self.columns[k] * (amps[k] * (self.rates[k] * x).exp())
        })
    }

    pub fn derivative(&self, amps: &[Complex64; 4], x: f64) -> Spinor {
        (0..4).fold(Spinor::zeros(), |acc, k| {
            acc + self.columns[k] * (amps[k] * self.rates[k] * (self.rates[k] * x).exp())
        })
    }
}

/// A spinor-valued function on one bond.
pub trait SpinorField {
    fn value(&self, x: f64) -> Spinor;

    /// Defaults to a five-point central difference.
    fn derivative(&self, x: f64) -> Spinor {
        let h = 1e-3 * x.abs().max(1.0);
        (self.value(x - 2.0 * h) - self.value(x + 2.0 * h)
            + (self.value(x + h) - self.value(x - h)) * re(8.0))
            / re(12.0 * h)
    }
}

impl<F: Fn(f64) -> Spinor> SpinorField for F {
    fn value(&self, x: f64) -> Spinor {
        self(x)
    }
}

/// Local action of `H_BdG` given `Ψ(x)` and `Ψ'(x)`.
pub fn bdg_local(value: &Spinor, derivative: &Spinor, delta0: f64) -> Spinor {
    let d = re(delta0);
    Spinor::new(
        -I * derivative[1] + d * value[2],
        -I * derivative[0] + d * value[3],
        d * value[0] + I * derivative[3],
        d * value[1] + I * derivative[2],
    )
}

/// `(H_BdG Ψ)(x)` for a field on one bond of `graph`.
pub fn bdg_apply<F: SpinorField + ?Sized>(field: &F, x: f64, graph: &MetricStarGraph) -> Spinor {
    bdg_local(&field.value(x), &field.derivative(x), graph.delta0())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(delta0: f64) -> MetricStarGraph {
        MetricStarGraph::equal(3, 1.0, delta0).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(1.0, &g(1.0)).kappa, ZERO);
        let d = dispersion(1.25, &g(1.0));
        assert!((d.kappa - re(0.75)).norm() < 1e-15);
        let d = dispersion(0.6, &g(1.0));
        assert!((d.kappa - c(0.0, 0.8)).norm() < 1e-15);
        assert!(d.in_gap());
    }

    #[test]
    fn graph_invariants() {
        assert!(MetricStarGraph::new(vec![], 1.0).is_err());
        assert!(MetricStarGraph::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(MetricStarGraph::new(vec![1.0, f64::NAN], 1.0).is_err());
        assert!(matches!(
            MetricStarGraph::new(vec![1.0], 0.0),
            Err(Error::ZeroGap(_))
        ));
        let gr = MetricStarGraph::new(vec![1.0, 2.0], 1.0).unwrap();
        assert!(gr.check_position(1, 2.0).is_ok());
        assert!(gr.check_position(0, 1.5).is_err());
        assert!(gr.check_position(2, 0.0).is_err());
    }

    #[test]
    fn first_basis_spinor_is_eigenvector() {
        let graph = g(1.0);
        for &e in &[0.3, 1.7, 4.2] {
            let k = dispersion(e, &graph).kappa;
            let f = move |x: f64| {
                Spinor::new(re(1.0), ZERO, re(e), -k) * (I * k * x).exp()
            };
            for &x in &[0.0, 0.37, 1.0] {
                let r = bdg_apply(&f, x, &graph) - f(x) * re(e);
                assert!(r.norm() < 1e-9, "E={e} x={x} r={}", r.norm());
            }
        }
    }

    #[test]
    fn zero_field_and_zero_mode_column() {
        let graph = g(1.3);
        let zero = |_x: f64| Spinor::zeros();
        assert_eq!(bdg_apply(&zero, 0.5, &graph), Spinor::zeros());
        let q = c(1.0, 1.0);
        let d = graph.delta0();
        let col = move |x: f64| Spinor::new(q.conj(), ZERO, ZERO, -q) * re((-d * x).exp());
        assert!(bdg_apply(&col, 0.4, &graph).norm() < 1e-9);
    }

    #[test]
    fn analytic_bases_solve_the_equation() {
        let delta0 = 0.8;
        for (branch, e, eig) in [
            (Branch::Positive, 2.1, 2.1),
            (Branch::Positive, 0.5, 0.5),
            (Branch::Negative, -2.1, -2.1),
            (Branch::Negative, -0.3, -0.3),
            (Branch::Zero, 0.0, 0.0),
        ] {
            let basis = ModeBasis::for_branch(branch, e, delta0);
            for k in 0..4 {
                let mut amps = [ZERO; 4];
                amps[k] = re(1.0);
                for &x in &[0.0, 0.2, 0.9] {
                    let v = basis.value(&amps, x);
                    let r = bdg_local(&v, &basis.derivative(&amps, x), delta0) - v * re(eig);
                    assert!(r.norm() < 1e-12, "{branch} col {k}: {}", r.norm());
                }
            }
        }
    }

    #[test]
    fn coefficient_stacking() {
        let v: Vec<Complex64> = (0..8).map(|k| re(k as f64)).collect();
        let m = ModeCoefficients::from_stacked(&v).unwrap();
        assert_eq!(m.mu_hat_alpha, vec![re(4.0), re(5.0)]);
        assert_eq!(m.bond(1), [re(1.0), re(3.0), re(5.0), re(7.0)]);
        assert_eq!(m.stacked(), v);
        assert!(ModeCoefficients::from_stacked(&v[..7]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn dispersion_identity(e in -20.0f64..20.0, d in 0.05f64..5.0) {
            let graph = MetricStarGraph::equal(1, 1.0, d).unwrap();
            let k = dispersion(e, &graph).kappa;
            let r = (k * k + re(d * d) - re(e * e)).norm();
            proptest::prop_assert!(r < 1e-12 * (e * e).max(1.0));
            proptest::prop_assert!(k.im >= 0.0 && k.re >= 0.0);
        }
    }
}
