use std::fmt::Write;

use bdg_core::eigen::SIMPSON_PANELS;
use bdg_core::export::{fmt17, fmt6, samples_csv, spectrum_csv, transmission_json};
use bdg_core::fd::{discretize, oracle_spectrum, DEFAULT_GRID};
use bdg_core::majorana::nambu_diagnostic;
use bdg_core::{
    closed_form_y_junction, find_spectrum, kirchhoff_residual, normalize, scattering_matrix,
    solve_zero_modes, transmission_matrix, validate, zero_mode_transmission, AssembledState,
    DEFAULT_RANK_TOL,
};
use serde::Serialize;

use crate::config::Problem;
use crate::{CliError, Outcome};

pub fn cmd_validate(problem: &Problem) -> Outcome {
    let r = validate(&problem.bc, DEFAULT_RANK_TOL);
    let mut out = String::new();
    let _ = writeln!(out, "bonds               {}", r.n_bonds);
    let _ = writeln!(out, "required rank       {}", r.required_rank);
    let _ = writeln!(out, "rank(A)             {}", r.rank_a);
    let _ = writeln!(out, "rank(B)             {}", r.rank_b);
    let _ = writeln!(out, "rank[A|B]           {}", r.rank_joint);
    let _ = writeln!(out, "max|AB†+BA†|        {}", fmt6(r.skew_residual));
    let _ = writeln!(out, "relative residual   {}", fmt6(r.skew_residual_relative));
    let _ = writeln!(out, "strict ranks        {}", if r.strict_pass { "yes" } else { "no" });
    for note in r.strict_notes() {
        let _ = writeln!(out, "note                {note}");
    }
    for f in r.failures() {
        let _ = writeln!(out, "failure             {f}");
    }
    let _ = writeln!(out, "result              {}", if r.passed { "PASS" } else { "FAIL" });
    Outcome { machine: out, human: String::new(), exit: if r.passed { 0 } else { 1 } }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SpectrumRequest {
    pub require_roots: bool,
    /// Cross-check against the finite-difference oracle on this grid.
    pub oracle_grid: Option<usize>,
}

pub fn cmd_spectrum(problem: &Problem, req: SpectrumRequest) -> Result<Outcome, CliError> {
    let opts = problem.scan()?;
    let scan = find_spectrum(&problem.bc, &problem.graph, &opts)?;
    if req.require_roots && scan.roots.is_empty() {
        return Err(CliError::Domain(format!(
            "no roots in [{}, {}]",
            opts.e_min, opts.e_max
        )));
    }
    let mut out = Outcome::ok(spectrum_csv(&scan.roots));
    for w in &scan.warnings {
        out = out.note(format!("warning: {w}"));
    }
    if let Some(m) = req.oracle_grid {
        let levels: Vec<f64> = scan.roots.iter().map(|r| r.energy).collect();
        let count = (scan.roots.iter().map(|r| r.multiplicity).sum::<usize>() * 2 + 16).max(24);
        let spec = oracle_spectrum(&discretize(&problem.bc, &problem.graph, m)?, count)?;
        out = out.note(format!("oracle M={m}: {} real eigenvalues, {} rejected off-axis", spec.physical.len(), spec.spurious.len()));
        for (e, nearest) in levels.iter().map(|&e| {
            let near = spec
                .physical
                .iter()
                .copied()
                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()));
            (e, near)
        }) {
            match nearest {
                Some(f) => out = out.note(format!("  secular {}  oracle {}  diff {}", fmt6(e), fmt6(f), fmt6((f - e).abs()))),
                None => out = out.note(format!("  secular {}  oracle none", fmt6(e))),
            }
        }
        for z in &spec.spurious {
            out = out.note(format!("  spurious {} {:+}i", fmt6(z.re), fmt6(z.im)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EigenRequest {
    pub root_index: usize,
    /// Which null vector of a degenerate root.
    pub mode_index: usize,
    pub zero_mode: bool,
    /// The explicit three-bond zero mode instead of a solved one.
    pub fixture: bool,
}

pub fn cmd_eigenfunction(problem: &Problem, req: EigenRequest) -> Result<Outcome, CliError> {
    let state = if req.fixture {
        let lengths = problem.graph.lengths();
        if lengths.len() != 3 || lengths.iter().any(|&l| l != lengths[0]) {
            return Err(CliError::Domain("the fixture needs three bonds of equal length".into()));
        }
        closed_form_y_junction(lengths[0], problem.graph.delta0())?
    } else if req.zero_mode {
        let modes = solve_zero_modes(&problem.bc, &problem.graph)?;
        modes.into_iter().nth(req.root_index).ok_or_else(|| {
            CliError::Domain(format!("zero mode {} does not exist", req.root_index))
        })?
    } else {
        let opts = problem.scan()?;
        let roots = find_spectrum(&problem.bc, &problem.graph, &opts)?.roots;
        let n_roots = roots.len();
        let root = roots.into_iter().nth(req.root_index).ok_or_else(|| {
            CliError::Domain(format!("root index {} out of range ({n_roots} roots)", req.root_index))
        })?;
        let coeffs = root.coefficients.get(req.mode_index).cloned().ok_or_else(|| {
            CliError::Domain(format!(
                "mode index {} out of range (multiplicity {})",
                req.mode_index, root.multiplicity
            ))
        })?;
        normalize(&AssembledState::new(problem.graph.clone(), root.energy, root.branch, coeffs)?)?
    };
    let samples = state.sample(problem.points_per_bond());
    let r = residuals(&state, problem, problem.points_per_bond())?;
    Ok(Outcome::ok(samples_csv(&samples)).note(format!(
        "E={} ode={} bc={} kirchhoff={} norm={}",
        fmt6(state.energy),
        fmt6(r.ode),
        fmt6(r.bc),
        fmt6(r.kirchhoff),
        fmt6(r.norm_squared)
    )))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    pub ode: f64,
    pub bc: f64,
    pub kirchhoff: f64,
    pub norm_squared: f64,
    pub nambu: f64,
}

fn residuals(state: &AssembledState, problem: &Problem, points: usize) -> Result<Residuals, CliError> {
    let mut ode: f64 = 0.0;
    for s in state.sample(points) {
        ode = ode.max(state.ode_residual(s.bond, s.position)?);
    }
    let mut norm_squared = state.norm_squared();
    if !norm_squared.is_finite() {
        norm_squared = state.norm_squared_simpson(SIMPSON_PANELS);
    }
    Ok(Residuals {
        ode,
        bc: state.bc_residual(&problem.bc)?,
        kirchhoff: kirchhoff_residual(state),
        norm_squared,
        nambu: nambu_diagnostic(state, points),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TransmitRequest {
    pub energy: Option<f64>,
    pub zero_mode: bool,
    pub scattering: bool,
}

pub fn cmd_transmit(problem: &Problem, req: TransmitRequest) -> Result<Outcome, CliError> {
    let t = match (req.zero_mode, req.energy) {
        (true, None) => zero_mode_transmission(&problem.bc, &problem.graph)?,
        (false, Some(e)) => transmission_matrix(e, &problem.bc, &problem.graph)?,
        _ => return Err(CliError::Usage("give exactly one of --energy or --zero-mode".into())),
    };
    let s = req.scattering.then(|| scattering_matrix(&t, &problem.graph));
    Ok(Outcome::ok(transmission_json(&t, s.as_ref()))
        .note(format!("condition number {}", fmt6(t.condition_number))))
}

#[derive(Serialize)]
struct ZeroModeReport {
    n_bonds: usize,
    count: usize,
    states: Vec<Residuals>,
}

pub fn cmd_zero_mode(problem: &Problem) -> Result<Outcome, CliError> {
    let modes = solve_zero_modes(&problem.bc, &problem.graph)?;
    let points = problem.points_per_bond();
    let states = modes
        .iter()
        .map(|m| residuals(m, problem, points))
        .collect::<Result<Vec<_>, _>>()?;
    let report = ZeroModeReport { n_bonds: problem.graph.n_bonds(), count: modes.len(), states };
    let mut json = serde_json::to_string_pretty(&report).expect("plain data serialises");
    json.push('\n');
    Ok(Outcome::ok(json).note(format!("{} zero mode(s)", modes.len())))
}

#[derive(Debug, Clone, Copy)]
pub struct OracleRequest {
    pub grid: usize,
    pub count: usize,
}

impl Default for OracleRequest {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID, count: 24 }
    }
}

pub fn cmd_oracle(problem: &Problem, req: OracleRequest) -> Result<Outcome, CliError> {
    let problem_fd = discretize(&problem.bc, &problem.graph, req.grid)?;
    let spec = oracle_spectrum(&problem_fd, req.count)?;
    let mut csv = String::from("index,E_re,E_im,physical\n");
    let mut rows: Vec<(f64, f64, bool)> = spec.physical.iter().map(|&e| (e, 0.0, true)).collect();
    rows.extend(spec.spurious.iter().map(|z| (z.re, z.im, false)));
    for (k, (re, im, phys)) in rows.iter().enumerate() {
        let _ = writeln!(csv, "{k},{},{},{phys}", fmt17(*re), fmt17(*im));
    }
    Ok(Outcome::ok(csv).note(format!(
        "M={} dim={} krylov={} max residual {}",
        req.grid,
        problem_fd.dim(),
        spec.krylov_dim,
        fmt6(spec.max_residual)
    )))
}
