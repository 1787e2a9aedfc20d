//! Canonical conic-program representation and the solver contract: a linear
//! objective over free scalar variables subject to linear equality rows,
//! scalar nonnegativity rows, and PSD constraints on affine symmetric-matrix
//! maps. Solved through a pluggable [`ConicSolver`]; the default engine is
//! Clarabel. [`verify`] recomputes residuals independently of the solver.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{LinearExpr, MomentIndexMap};

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("solver setup failed: {0}")]
    Setup(String),
}

/// What produced a row or block, for diagnostics and dumps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    MomentBlock { clique: usize, degree: u32 },
    Localizing { bus: usize, what: &'static str },
    FlowLocalizing { branch: usize, dir: &'static str },
    EqualityRow { bus: usize, what: &'static str },
    SchurFlow { branch: usize, dir: &'static str },
    SchurCost { bus: usize },
    CostRow { bus: usize },
    AngleReference,
    Normalization,
}

/// An affine symmetric-matrix map `S(x) = C + sum_i x_i F_i`, stored as the
/// packed upper triangle (column-major) of linear expressions.
#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub dim: usize,
    /// Entry (i, j), i <= j, at index j*(j+1)/2 + i.
    pub entries: Vec<LinearExpr>,
    pub tag: Provenance,
}

impl PsdBlock {
    pub fn entry(&self, i: usize, j: usize) -> &LinearExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[j * (j + 1) / 2 + i]
    }

    /// Evaluate the block at a variable assignment.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.entries[j * (j + 1) / 2 + i].eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        let m = self.eval(x);
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// A tagged linear row.
#[derive(Debug, Clone)]
pub struct Row {
    pub expr: LinearExpr,
    pub tag: Provenance,
}

/// The assembled conic problem. Variables 0..n_moment are moment variables
/// (indexed by `index`); variables n_moment..n_vars are auxiliary scalars
/// (one epigraph variable per generator).
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    pub n_moment: usize,
    pub n_aux: usize,
    /// Minimized.
    pub objective: LinearExpr,
    /// Each expression constrained to equal zero.
    pub equalities: Vec<Row>,
    /// Each expression constrained nonnegative (1x1 localizing blocks).
    pub nonneg: Vec<Row>,
    /// PSD blocks of dimension >= 2.
    pub psd_blocks: Vec<PsdBlock>,
    pub index: MomentIndexMap,
}

impl ConicProblem {
    pub fn n_vars(&self) -> usize {
        self.n_moment + self.n_aux
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.n_vars() as u32;
        let check = |e: &LinearExpr, what: &str| -> Result<(), ConicError> {
            for &(i, c) in &e.terms {
                if i >= n {
                    return Err(ConicError::Malformed(format!(
                        "{what}: variable index {i} out of range {n}"
                    )));
                }
                if !c.is_finite() {
                    return Err(ConicError::Malformed(format!("{what}: non-finite coefficient")));
                }
            }
            if !e.constant.is_finite() {
                return Err(ConicError::Malformed(format!("{what}: non-finite constant")));
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for r in &self.equalities {
            check(&r.expr, "equality row")?;
        }
        for r in &self.nonneg {
            check(&r.expr, "nonneg row")?;
        }
        for b in &self.psd_blocks {
            if b.entries.len() != b.dim * (b.dim + 1) / 2 {
                return Err(ConicError::Malformed(format!(
                    "PSD block {:?}: triangle length {} does not match dim {}",
                    b.tag,
                    b.entries.len(),
                    b.dim
                )));
            }
            for e in &b.entries {
                check(e, "PSD entry")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings { feas_tol: 1e-8, gap_tol: 1e-8, max_iter: 200, verbose: false }
    }
}

impl SolveSettings {
    /// Loosened settings for the retry path after a numerical failure.
    pub fn relaxed(&self) -> SolveSettings {
        SolveSettings {
            feas_tol: (self.feas_tol * 100.0).min(1e-6),
            gap_tol: (self.gap_tol * 100.0).min(1e-6),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    /// Primal values for all variables (moments then auxiliaries).
    pub x: Vec<f64>,
    /// Objective value (including the constant term), meaningful when
    /// status is Optimal.
    pub objective: f64,
    /// Worst equality residual reported post-solve.
    pub eq_residual: f64,
    /// Most negative PSD-block eigenvalue post-solve (0 if no blocks).
    pub min_block_eig: f64,
    pub solve_time: Duration,
}

pub trait ConicSolver {
    fn solve(&self, p: &ConicProblem, s: &SolveSettings) -> Result<RawSolution, ConicError>;
}

/// Residual report recomputed from primal values, independent of the solver.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub eq_residual: f64,
    pub nonneg_violation: f64,
    /// Minimum eigenvalue per PSD block.
    pub block_min_eigs: Vec<f64>,
    pub objective: f64,
}

impl ResidualReport {
    pub fn min_block_eig(&self) -> f64 {
        self.block_min_eigs.iter().copied().fold(0.0, f64::min)
    }
}

/// Recompute equality residuals, nonnegativity violations, per-block minimum
/// eigenvalues, and the objective from primal values.
pub fn verify(p: &ConicProblem, x: &[f64]) -> ResidualReport {
    let eq_residual = p
        .equalities
        .iter()
        .map(|r| r.expr.eval(x).abs())
        .fold(0.0, f64::max);
    let nonneg_violation = p
        .nonneg
        .iter()
        .map(|r| (-r.expr.eval(x)).max(0.0))
        .fold(0.0, f64::max);
    let block_min_eigs = p.psd_blocks.iter().map(|b| b.min_eigenvalue(x)).collect();
    ResidualReport {
        eq_residual,
        nonneg_violation,
        block_min_eigs,
        objective: p.objective.eval(x),
    }
}

/// The default engine: Clarabel's primal-dual interior-point method.
#[derive(Debug, Clone, Default)]
pub struct ClarabelSolver;

impl ConicSolver for ClarabelSolver {
    fn solve(&self, p: &ConicProblem, s: &SolveSettings) -> Result<RawSolution, ConicError> {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        p.validate()?;
        let n = p.n_vars();

        // Rows: s = b - A x with s in (Zero, Nonneg, PSD-triangle...) cones.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut row = 0usize;

        if !p.equalities.is_empty() {
            for r in &p.equalities {
                for &(i, c) in &r.expr.terms {
                    triplets.push((row, i as usize, c));
                }
                b.push(-r.expr.constant);
                row += 1;
            }
            cones.push(SupportedConeT::ZeroConeT(p.equalities.len()));
        }
        if !p.nonneg.is_empty() {
            for r in &p.nonneg {
                for &(i, c) in &r.expr.terms {
                    triplets.push((row, i as usize, -c));
                }
                b.push(r.expr.constant);
                row += 1;
            }
            cones.push(SupportedConeT::NonnegativeConeT(p.nonneg.len()));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        for blk in &p.psd_blocks {
            for j in 0..blk.dim {
                for i in 0..=j {
                    let e = blk.entry(i, j);
                    let scale = if i == j { 1.0 } else { sqrt2 };
                    for &(v, c) in &e.terms {
                        triplets.push((row, v as usize, -scale * c));
                    }
                    b.push(scale * e.constant);
                    row += 1;
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(blk.dim));
        }
        let m = row;

        // Triplets to CSC.
        triplets.sort_by_key(|&(r, c, _)| (c, r));
        let mut colptr = vec![0usize; n + 1];
        let mut rowval = Vec::with_capacity(triplets.len());
        let mut nzval = Vec::with_capacity(triplets.len());
        {
            let mut k = 0usize;
            for col in 0..n {
                colptr[col] = rowval.len();
                while k < triplets.len() && triplets[k].1 == col {
                    // merge duplicates within a column
                    let (r, _, mut v) = triplets[k];
                    k += 1;
                    while k < triplets.len() && triplets[k].1 == col && triplets[k].0 == r {
                        v += triplets[k].2;
                        k += 1;
                    }
                    rowval.push(r);
                    nzval.push(v);
                }
            }
            colptr[n] = rowval.len();
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let pmat = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(i, c) in &p.objective.terms {
            q[i as usize] += c;
        }

        let settings = DefaultSettings {
            verbose: s.verbose,
            max_iter: s.max_iter,
            tol_feas: s.feas_tol,
            tol_gap_abs: s.gap_tol,
            tol_gap_rel: s.gap_tol,
            ..Default::default()
        };
        let start = Instant::now();
        let mut solver = DefaultSolver::new(&pmat, &q, &a, &b, &cones, settings)
            .map_err(|e| ConicError::Setup(format!("{e:?}")))?;
        solver.solve();
        let solve_time = start.elapsed();

        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::MaxIter,
            _ => SolveStatus::NumericalFailure,
        };
        let x = solver.solution.x.clone();
        let (eq_residual, min_block_eig, objective) = if status == SolveStatus::Optimal {
            let rep = verify(p, &x);
            (rep.eq_residual, rep.min_block_eig(), rep.objective)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        Ok(RawSolution { status, x, objective, eq_residual, min_block_eig, solve_time })
    }
}
