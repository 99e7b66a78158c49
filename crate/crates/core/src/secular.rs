//! Secular determinants `det(AΘ₁ + BΘ₂)` / `det(AΘ₃ + BΘ₄)` and the energy scan.
//!
//! Roots are located with the scale-free indicator `d(E) = σ_min/σ_max` of the
//! combination matrix: it shares the zero set of the determinant without its
//! overflow for large `N`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryConditionPair;
use crate::error::{Error, Result};
use crate::graph::{kappa, Branch, MetricStarGraph, ModeCoefficients};
use crate::linalg::{self, from_blocks, re, CMatrix, SortedSvd};

/// Half-width (relative to Δ₀) of the excluded window around `|E| = Δ₀`,
/// where κ = 0 makes the basis degenerate.
pub const GUARD_BAND: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-8;
const GOLDEN_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSet {
    pub theta1: CMatrix,
    pub theta2: CMatrix,
    pub theta3: CMatrix,
    pub theta4: CMatrix,
}

impl ThetaSet {
    pub fn new(energy: f64, graph: &MetricStarGraph) -> Self {
        let (theta1, theta2) = build_theta_positive(energy, graph);
        let (theta3, theta4) = build_theta_negative(energy, graph);
        Self { theta1, theta2, theta3, theta4 }
    }
}

struct Blocks {
    n: usize,
    e: CMatrix,
    k: CMatrix,
    id: CMatrix,
    zero: CMatrix,
    ph: CMatrix,
    ph_inv: CMatrix,
}

impl Blocks {
    fn new(magnitude: f64, graph: &MetricStarGraph, kappa: Complex64) -> Self {
        let n = graph.n_bonds();
        let d = graph.delta0();
        let phases = graph.phases(kappa);
        let inv: Vec<Complex64> = graph.phases(-kappa);
        Self {
            n,
            e: linalg::scaled_identity(n, re(magnitude / d)),
            k: linalg::scaled_identity(n, kappa / d),
            id: linalg::identity(n),
            zero: CMatrix::zeros(n, n),
            ph: linalg::diag(&phases),
            ph_inv: linalg::diag(&inv),
        }
    }
}

/// `(Θ₁, Θ₂)` for positive energies. Columns are ordered
/// `(μ_α, μ_β, μ̂_α, μ̂_β)`; row blocks follow the trace packing of
/// [`crate::boundary`].
pub fn build_theta_positive(energy: f64, graph: &MetricStarGraph) -> (CMatrix, CMatrix) {
    let b = Blocks::new(energy, graph, kappa(energy, graph.delta0()));
    let (e, k, id, z) = (&b.e, &b.k, &b.id, &b.zero);
    let (p, pi) = (&b.ph, &b.ph_inv);
    let theta1 = from_blocks(
        b.n,
        [
            [id.clone(), z.clone(), id.clone(), z.clone()],
            [e.clone(), -k, e.clone(), k.clone()],
            [p.clone(), z.clone(), pi.clone(), z.clone()],
            [e * p, -(k * p), e * pi, k * pi],
        ],
    );
    let theta2 = from_blocks(
        b.n,
        [
            [z.clone(), id.clone(), z.clone(), id.clone()],
            [k.clone(), -e, -k, -e],
            [z.clone(), -p, z.clone(), -pi],
            [-(k * p), e * p, k * pi, e * pi],
        ],
    );
    (theta1, theta2)
}

/// `(Θ₃, Θ₄)` for negative energies; `energy` enters through its magnitude.
pub fn build_theta_negative(energy: f64, graph: &MetricStarGraph) -> (CMatrix, CMatrix) {
    let m = energy.abs();
    let b = Blocks::new(m, graph, kappa(m, graph.delta0()));
    let (e, k, id, z) = (&b.e, &b.k, &b.id, &b.zero);
    let (p, pi) = (&b.ph, &b.ph_inv);
    let theta3 = from_blocks(
        b.n,
        [
            [-e, k.clone(), -e, -k],
            [id.clone(), z.clone(), id.clone(), z.clone()],
            [-(e * p), k * p, -(e * pi), -(k * pi)],
            [p.clone(), z.clone(), pi.clone(), z.clone()],
        ],
    );
    let theta4 = from_blocks(
        b.n,
        [
            [k.clone(), -e, -k, -e],
            [z.clone(), -id, z.clone(), -id],
            [-(k * p), e * p, k * pi, e * pi],
            [z.clone(), p.clone(), z.clone(), pi.clone()],
        ],
    );
    (theta3, theta4)
}

/// `AΘ₁ + BΘ₂` (positive branch) or `AΘ₃ + BΘ₄` (negative branch).
pub fn combination(
    energy: f64,
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    branch: Branch,
) -> CMatrix {
    let (t1, t2) = match branch {
        Branch::Negative => build_theta_negative(energy, graph),
        _ => build_theta_positive(energy, graph),
    };
    bc.a() * t1 + bc.b() * t2
}

pub fn secular_det(
    energy: f64,
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    branch: Branch,
) -> Complex64 {
    combination(energy, bc, graph, branch).determinant()
}

/// `σ_min/σ_max` of the combination matrix.
pub fn root_indicator(
    energy: f64,
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    branch: Branch,
) -> f64 {
    let s = linalg::singular_values(&combination(energy, bc, graph, branch));
    let max = s[0];
    if max == 0.0 {
        return 0.0;
    }
    s[s.len() - 1] / max
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub e_min: f64,
    pub e_max: f64,
    pub grid_points: usize,
    pub tol: f64,
}

impl ScanOptions {
    pub fn new(e_min: f64, e_max: f64, grid_points: usize) -> Self {
        Self { e_min, e_max, grid_points, tol: DEFAULT_TOL }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.e_min < self.e_max) || !self.e_min.is_finite() || !self.e_max.is_finite() {
            return Err(Error::InvalidScan(format!(
                "need e_min < e_max, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidScan(format!(
                "grid_points must be >= 2, got {}",
                self.grid_points
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidScan(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    /// Signed eigenvalue of `H_BdG`.
    pub energy: f64,
    pub kappa: Complex64,
    pub branch: Branch,
    /// `|det(M)| / σ_max^{4N}` of the combination matrix `M`.
    pub det_residual: f64,
    /// `σ_min/σ_max` of the combination matrix.
    pub indicator: f64,
    pub multiplicity: usize,
    /// Orthonormal null-space basis, each of unit Euclidean norm.
    pub coefficients: Vec<ModeCoefficients>,
    /// `|E| < Δ₀`: evanescent solutions on every bond.
    pub in_gap: bool,
    #[serde(skip)]
    grid_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub roots: Vec<SpectralResult>,
    pub warnings: Vec<String>,
}

/// Scan `[e_min, e_max]` for eigenvalues.
///
/// Non-negative energies use the positive branch, negative energies the
/// negative branch with |E| in its blocks. Within each branch the indicator is
/// sampled on a uniform grid, local minima are refined by golden-section
/// search, and a minimum is accepted as a root when the indicator is below
/// `tol`.
pub fn find_spectrum(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    opts: &ScanOptions,
) -> Result<ScanOutcome> {
    opts.check()?;
    if bc.n_bonds() != graph.n_bonds() {
        return Err(Error::DimensionMismatch { expected: graph.n_bonds(), actual: bc.n_bonds() });
    }

    let mut outcome = ScanOutcome::default();
    if opts.e_max >= 0.0 {
        let lo = opts.e_min.max(0.0);
        scan_branch(bc, graph, opts, Branch::Positive, lo, opts.e_max, &mut outcome);
    }
    if opts.e_min < 0.0 {
        let lo = (-opts.e_max).max(0.0);
        let before = outcome.roots.len();
        scan_branch(bc, graph, opts, Branch::Negative, lo, -opts.e_min, &mut outcome);
        if opts.e_max >= 0.0 {
            // E = 0 already belongs to the positive branch
            let mut k = before;
            while k < outcome.roots.len() {
                if outcome.roots[k].energy.abs() < 1e-9 {
                    outcome.roots.remove(k);
                } else {
                    k += 1;
                }
            }
        }
    }

    outcome.roots.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    merge_duplicates(bc, graph, opts.tol, &mut outcome.roots);

    for pair in outcome.roots.windows(2) {
        if pair[0].branch == pair[1].branch && pair[0].grid_index.abs_diff(pair[1].grid_index) <= 1 {
            outcome.warnings.push(format!(
                "roots {:.12} and {:.12} fall in adjacent grid cells; grid may be too coarse",
                pair[0].energy, pair[1].energy
            ));
        }
    }
    Ok(outcome)
}

fn in_guard(m: f64, delta0: f64) -> bool {
    (m - delta0).abs() < GUARD_BAND * delta0
}

fn scan_branch(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    opts: &ScanOptions,
    branch: Branch,
    lo: f64,
    hi: f64,
    out: &mut ScanOutcome,
) {
    if !(hi > lo) {
        if hi == lo {
            // single point, e.g. [e_min, 0] with e_min < 0
            if let Some(r) = accept(bc, graph, branch, lo, 0, opts.tol) {
                out.roots.push(r);
            }
        }
        return;
    }
    let delta0 = graph.delta0();
    let n = opts.grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&m| {
            if in_guard(m, delta0) {
                f64::INFINITY
            } else {
                root_indicator(m, bc, graph, branch)
            }
        })
        .collect();

    let minima: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = values[i];
            v.is_finite()
                && (i == 0 || v < values[i - 1])
                && (i + 1 == n || v <= values[i + 1])
        })
        .collect();

    let refined: Vec<Option<SpectralResult>> = minima
        .par_iter()
        .map(|&i| {
            let mut a = grid[i.saturating_sub(1)];
            let mut b = grid[(i + 1).min(n - 1)];
            // stay on the side of the guard band that holds the grid minimum
            let band_lo = delta0 * (1.0 - GUARD_BAND);
            let band_hi = delta0 * (1.0 + GUARD_BAND);
            if grid[i] < band_lo {
                b = b.min(band_lo);
            } else if grid[i] > band_hi {
                a = a.max(band_hi);
            }
            let m = golden_section(|e| root_indicator(e, bc, graph, branch), a, b);
            // the grid point itself may beat the refined point on a flat floor
            let m = if root_indicator(m, bc, graph, branch) <= values[i] { m } else { grid[i] };
            accept(bc, graph, branch, m, i, opts.tol)
        })
        .collect();
    out.roots.extend(refined.into_iter().flatten());
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a) < 1e-12 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        x1
    } else {
        x2
    }
}

fn accept(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    branch: Branch,
    magnitude: f64,
    grid_index: usize,
    tol: f64,
) -> Option<SpectralResult> {
    let m = combination(magnitude, bc, graph, branch);
    let svd = SortedSvd::new(&m);
    let max = svd.max();
    if max == 0.0 {
        return None;
    }
    let indicator = svd.min(m.ncols()) / max;
    if !(indicator < tol) {
        return None;
    }
    let coefficients = null_vectors(&svd, tol);
    let energy = match branch {
        Branch::Negative => -magnitude,
        _ => magnitude,
    };
    let kappa = kappa(magnitude, graph.delta0());
    Some(SpectralResult {
        energy,
        kappa,
        branch,
        det_residual: svd.values.iter().map(|s| s / max).product(),
        indicator,
        multiplicity: coefficients.len(),
        coefficients,
        in_gap: magnitude < graph.delta0(),
        grid_index,
    })
}

fn null_vectors(svd: &SortedSvd, tol: f64) -> Vec<ModeCoefficients> {
    let cut = tol * svd.max();
    (0..svd.values.len())
        .filter(|&k| svd.values[k] <= cut)
        .map(|k| {
            let v: Vec<Complex64> = svd.right.column(k).iter().copied().collect();
            ModeCoefficients::from_stacked(&v).expect("4N column")
        })
        .collect()
}

/// Near-coincident minima are the same level; the better-resolved one is kept
/// and its multiplicity comes from its own null space.
fn merge_duplicates(
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    tol: f64,
    roots: &mut Vec<SpectralResult>,
) {
    let mut merged: Vec<SpectralResult> = Vec::with_capacity(roots.len());
    for r in roots.drain(..) {
        match merged.last_mut() {
            Some(last)
                if last.branch == r.branch
                    && (last.energy - r.energy).abs() <= 1e-9 * (r.energy.abs() + 1.0) =>
            {
                if r.indicator < last.indicator {
                    *last = r;
                }
            }
            _ => merged.push(r),
        }
    }
    for r in &mut merged {
        if let Ok(c) = null_space_coefficients(r.energy, bc, graph, r.branch, tol) {
            r.multiplicity = c.len();
            r.coefficients = c;
        }
    }
    *roots = merged;
}

/// Orthonormal null-space basis of the combination matrix at `energy`, with
/// singular values at or below `tol`·σ_max.
pub fn null_space_coefficients(
    energy: f64,
    bc: &BoundaryConditionPair,
    graph: &MetricStarGraph,
    branch: Branch,
    tol: f64,
) -> Result<Vec<ModeCoefficients>> {
    let m = combination(energy.abs(), bc, graph, branch);
    let svd = SortedSvd::new(&m);
    let out = null_vectors(&svd, tol);
    if out.is_empty() {
        return Err(Error::EmptyNullSpace {
            energy,
            sigma_ratio: svd.min(m.ncols()) / svd.max(),
        });
    }
    Ok(out)
}
