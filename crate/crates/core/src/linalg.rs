//! Dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Singular value decomposition with values sorted in descending order.
///
/// `right` holds the right singular vectors as columns, in the same order as
/// `values`.
pub struct SortedSvd {
    pub values: Vec<f64>,
    pub right: CMatrix,
}

impl SortedSvd {
    pub fn new(m: &CMatrix) -> Self {
        let svd = m.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let values = order.iter().map(|&k| svd.singular_values[k]).collect();
        let mut right = CMatrix::zeros(m.ncols(), order.len());
        for (col, &k) in order.iter().enumerate() {
            for r in 0..m.ncols() {
                right[(r, col)] = v_t[(k, r)].conj();
            }
        }
        Self { values, right }
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Smallest singular value. For wide matrices the "missing" values are zero.
    pub fn min(&self, ncols: usize) -> f64 {
        if self.values.len() < ncols {
            0.0
        } else {
            self.values.last().copied().unwrap_or(0.0)
        }
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max();
        self.values.iter().filter(|&&s| s > cut).count()
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let cut = rel_tol * s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > cut).count()
}

/// Orthonormal basis (columns) of the numerical null space of `m`: right
/// singular vectors with σ ≤ `rel_tol`·σ_max, plus the structural kernel of a
/// wide matrix.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = m.ncols();
    if m.nrows() < n {
        // pad to square so that the SVD returns a full set of right vectors
        let mut sq = CMatrix::zeros(n, n);
        sq.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        return null_space(&sq, rel_tol);
    }
    let svd = SortedSvd::new(m);
    let cut = rel_tol * svd.max();
    let keep: Vec<usize> = (0..n).filter(|&k| svd.values[k] <= cut).collect();
    let mut out = CMatrix::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        out.set_column(col, &svd.right.column(k));
    }
    out
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Condition number σ_max/σ_min in the 2-norm (∞ for singular matrices).
pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Block matrix assembled from a 4×4 grid of `n`×`n` blocks.
pub fn from_blocks(n: usize, blocks: [[CMatrix; 4]; 4]) -> CMatrix {
    let mut out = CMatrix::zeros(4 * n, 4 * n);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            out.view_mut((bi * n, bj * n), (n, n)).copy_from(blk);
        }
    }
    out
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn scaled_identity(n: usize, z: Complex64) -> CMatrix {
    CMatrix::identity(n, n) * z
}

/// Random unitary matrix from the QR factorisation of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal removed.
pub fn random_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> CMatrix {
    use rand::distributions::Distribution;
    let normal = rand::distributions::Uniform::new(-1.0, 1.0);
    let g = CMatrix::from_fn(n, n, |_, _| c(normal.sample(rng), normal.sample(rng)));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}
