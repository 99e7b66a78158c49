//! Vertex boundary conditions `A ψ₁ + B ψ₂ = 0` and their self-adjointness test.
//!
//! Boundary traces are stacked bond by bond inside four blocks of length `N`:
//!
//! ```text
//! ψ₁ = ( Ψ₁(0) ;  Ψ₃(0) ;  Ψ₁(L) ; Ψ₃(L) )
//! ψ₂ = ( Ψ₂(0) ; −Ψ₄(0) ; −Ψ₂(L) ; Ψ₄(L) )
//! ```
//!
//! With this packing the boundary form of `H_BdG` is
//! `Ω(ψ, φ) = i (φ₁†ψ₂ + φ₂†ψ₁)`, and a pair `(A, B)` defines a self-adjoint
//! realisation iff `[A | B]` has rank `4N` and `AB† + BA† = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::Spinor;
use crate::linalg::{self, c, CMatrix, CVector, SortedSvd, I, ONE};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditionPair {
    n_bonds: usize,
    a: CMatrix,
    b: CMatrix,
}

impl BoundaryConditionPair {
    pub fn new(n_bonds: usize, a: CMatrix, b: CMatrix) -> Result<Self> {
        let dim = 4 * n_bonds;
        for m in [&a, &b] {
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: m.nrows() });
            }
            if m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: m.ncols() });
            }
        }
        if n_bonds == 0 {
            return Err(Error::TooFewBonds { min: 1, actual: 0 });
        }
        Ok(Self { n_bonds, a, b })
    }

    /// `A = U − I`, `B = U + I` for a unitary `U`; self-adjoint by construction.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let n = u.nrows();
        if n % 4 != 0 {
            return Err(Error::DimensionMismatch { expected: 4 * (n / 4 + 1), actual: n });
        }
        let id = linalg::identity(n);
        Self::new(n / 4, u - &id, u + &id)
    }

    pub fn n_bonds(&self) -> usize {
        self.n_bonds
    }

    pub fn dim(&self) -> usize {
        4 * self.n_bonds
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    /// `[A | B]`, acting on `(ψ₁; ψ₂)`.
    pub fn joint(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.a);
        m.view_mut((0, d), (d, d)).copy_from(&self.b);
        m
    }

    /// `C A`, `C B` for an invertible row mixing `C`; describes the same condition.
    pub fn mix_rows(&self, c: &CMatrix) -> Result<Self> {
        Self::new(self.n_bonds, c * &self.a, c * &self.b)
    }

    /// Relabel bonds: bond `j` becomes bond `perm[j]`, in both the rows and the
    /// trace slots.
    pub fn permute_bonds(&self, perm: &[usize]) -> Result<Self> {
        let p = bond_permutation(self.n_bonds, perm)?;
        Self::new(self.n_bonds, &p * &self.a * p.transpose(), &p * &self.b * p.transpose())
    }

    /// `‖A ψ₁ + B ψ₂‖₂`.
    pub fn residual(&self, traces: &BoundaryTraceVectors) -> Result<f64> {
        traces.check_dim(self.dim())?;
        Ok((&self.a * &traces.psi1 + &self.b * &traces.psi2).norm())
    }

    /// Orthonormal basis (columns, length `8N`) of the allowed traces
    /// `{(ψ₁; ψ₂) : A ψ₁ + B ψ₂ = 0}`.
    pub fn solution_space(&self, rel_tol: f64) -> CMatrix {
        linalg::null_space(&self.joint(), rel_tol)
    }
}

/// `P = I₄ ⊗ Π` for the bond relabelling `j ↦ perm[j]`.
pub fn bond_permutation(n: usize, perm: &[usize]) -> Result<CMatrix> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: perm.len() });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidGraph(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let mut m = CMatrix::zeros(4 * n, 4 * n);
    for blk in 0..4 {
        for (j, &p) in perm.iter().enumerate() {
            m[(blk * n + p, blk * n + j)] = ONE;
        }
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    n_bonds: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    b: Vec<Vec<[f64; 2]>>,
}

pub(crate) fn matrix_to_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format!("row {bad} has {} entries, expected {ncols}", rows[bad].len()));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

impl Serialize for BoundaryConditionPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PairJson {
            n_bonds: self.n_bonds,
            a: matrix_to_json(&self.a),
            b: matrix_to_json(&self.b),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryConditionPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PairJson::deserialize(d)?;
        let a = matrix_from_json(&raw.a).map_err(D::Error::custom)?;
        let b = matrix_from_json(&raw.b).map_err(D::Error::custom)?;
        Self::new(raw.n_bonds, a, b).map_err(D::Error::custom)
    }
}

/// Spinor values at both ends of every bond.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub at_vertex: Vec<Spinor>,
    pub at_end: Vec<Spinor>,
}

/// Stacked traces `ψ₁`, `ψ₂` (each of length `4N`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTraceVectors {
    pub psi1: CVector,
    pub psi2: CVector,
}

impl BoundaryTraceVectors {
    pub fn dim(&self) -> usize {
        self.psi1.len()
    }

    fn check_dim(&self, expected: usize) -> Result<()> {
        for v in [&self.psi1, &self.psi2] {
            if v.len() != expected {
                return Err(Error::DimensionMismatch { expected, actual: v.len() });
            }
        }
        Ok(())
    }

    /// Split an `8N` vector `(ψ₁; ψ₂)`.
    pub fn from_joint(v: &CVector) -> Self {
        let d = v.len() / 2;
        Self {
            psi1: v.rows(0, d).into_owned(),
            psi2: v.rows(d, d).into_owned(),
        }
    }

    /// Inverse of [`trace_vectors`].
    pub fn unpack(&self) -> BoundaryValues {
        let n = self.dim() / 4;
        let (p, q) = (&self.psi1, &self.psi2);
        BoundaryValues {
            at_vertex: (0..n)
                .map(|j| Spinor::new(p[j], q[j], p[n + j], -q[n + j]))
                .collect(),
            at_end: (0..n)
                .map(|j| Spinor::new(p[2 * n + j], -q[2 * n + j], p[3 * n + j], q[3 * n + j]))
                .collect(),
        }
    }
}

pub fn trace_vectors(values: &BoundaryValues) -> Result<BoundaryTraceVectors> {
    let n = values.at_vertex.len();
    if values.at_end.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: values.at_end.len() });
    }
    let mut psi1 = CVector::zeros(4 * n);
    let mut psi2 = CVector::zeros(4 * n);
    for j in 0..n {
        let v0 = &values.at_vertex[j];
        let vl = &values.at_end[j];
        psi1[j] = v0[0];
        psi1[n + j] = v0[2];
        psi1[2 * n + j] = vl[0];
        psi1[3 * n + j] = vl[2];
        psi2[j] = v0[1];
        psi2[n + j] = -v0[3];
        psi2[2 * n + j] = -vl[1];
        psi2[3 * n + j] = vl[3];
    }
    Ok(BoundaryTraceVectors { psi1, psi2 })
}

/// `Ω(ψ, φ) = i (φ₁†ψ₂ + φ₂†ψ₁)`.
pub fn skew_form(psi: &BoundaryTraceVectors, phi: &BoundaryTraceVectors) -> Result<Complex64> {
    psi.check_dim(phi.dim())?;
    phi.check_dim(psi.dim())?;
    Ok(I * (phi.psi1.dotc(&psi.psi2) + phi.psi2.dotc(&psi.psi1)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_bonds: usize,
    pub required_rank: usize,
    pub rank_a: usize,
    pub rank_b: usize,
    /// Rank of `[A | B]`.
    pub rank_joint: usize,
    /// `max |(AB† + BA†)_{ij}|`.
    pub skew_residual: f64,
    /// `skew_residual / (‖A‖_F ‖B‖_F)`.
    pub skew_residual_relative: f64,
    pub tol: f64,
    /// `rank(A) = rank(B) = 4N` and `AB† = −BA†`.
    pub strict_pass: bool,
    /// `rank[A|B] = 4N` and `AB† = −BA†`: the condition actually required.
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rank_joint < self.required_rank {
            out.push(format!(
                "rank[A|B] = {} < {}: too few independent conditions",
                self.rank_joint, self.required_rank
            ));
        }
        if self.skew_residual_relative > self.tol {
            out.push(format!(
                "AB† + BA† != 0 (max entry {:.3e}): boundary form does not vanish",
                self.skew_residual
            ));
        }
        out
    }

    /// Deviations from the stricter `rank(A) = rank(B) = 4N` requirement.
    pub fn strict_notes(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rank_a < self.required_rank {
            out.push(format!("rank(A) = {} < {}", self.rank_a, self.required_rank));
        }
        if self.rank_b < self.required_rank {
            out.push(format!("rank(B) = {} < {}", self.rank_b, self.required_rank));
        }
        out
    }
}

pub fn validate(bc: &BoundaryConditionPair, tol: f64) -> ValidationReport {
    let dim = bc.dim();
    let rank_a = linalg::numerical_rank(&bc.a, tol);
    let rank_b = linalg::numerical_rank(&bc.b, tol);
    let rank_joint = SortedSvd::new(&bc.joint().adjoint()).rank(tol);
    let skew = &bc.a * bc.b.adjoint() + &bc.b * bc.a.adjoint();
    let skew_residual = linalg::max_abs(&skew);
    let scale = bc.a.norm() * bc.b.norm();
    let skew_residual_relative = if scale > 0.0 { skew_residual / scale } else { skew_residual };
    let skew_ok = skew_residual_relative <= tol;
    ValidationReport {
        n_bonds: bc.n_bonds,
        required_rank: dim,
        rank_a,
        rank_b,
        rank_joint,
        skew_residual,
        skew_residual_relative,
        tol,
        strict_pass: rank_a == dim && rank_b == dim && skew_ok,
        passed: rank_joint == dim && skew_ok,
    }
}

/// Continuity of Ψ₁ and Ψ₄ at the vertex, `ΣΨ₂(0) = ΣΨ₃(0) = 0`, and
/// `Ψ₁(L_j) = Ψ₄(L_j)`, `Ψ₂(L_j) = Ψ₃(L_j)` on every bond end.
pub fn build_kirchhoff_zero_mode_bc(n_bonds: usize) -> Result<BoundaryConditionPair> {
    if n_bonds < 2 {
        return Err(Error::TooFewBonds { min: 2, actual: n_bonds });
    }
    let n = n_bonds;
    let d = 4 * n;
    let mut a = CMatrix::zeros(d, d);
    let mut b = CMatrix::zeros(d, d);
    let mut row = 0;
    // Ψ₁^{(j)}(0) = Ψ₁^{(j+1)}(0)
    for j in 0..n - 1 {
        a[(row, j)] = ONE;
        a[(row, j + 1)] = -ONE;
        row += 1;
    }
    // Σ Ψ₂(0) = 0
    for j in 0..n {
        b[(row, j)] = ONE;
    }
    row += 1;
    // Σ Ψ₃(0) = 0
    for j in 0..n {
        a[(row, n + j)] = ONE;
    }
    row += 1;
    // Ψ₄^{(j)}(0) = Ψ₄^{(j+1)}(0), with ψ₂ carrying −Ψ₄(0)
    for j in 0..n - 1 {
        b[(row, n + j)] = -ONE;
        b[(row, n + j + 1)] = ONE;
        row += 1;
    }
    // Ψ₁(L) − Ψ₄(L) = 0
    for j in 0..n {
        a[(row, 2 * n + j)] = ONE;
        b[(row, 3 * n + j)] = -ONE;
        row += 1;
    }
    // Ψ₃(L) − Ψ₂(L) = 0, with ψ₂ carrying −Ψ₂(L)
    for j in 0..n {
        a[(row, 3 * n + j)] = ONE;
        b[(row, 2 * n + j)] = ONE;
        row += 1;
    }
    debug_assert_eq!(row, d);
    BoundaryConditionPair::new(n, a, b)
}
