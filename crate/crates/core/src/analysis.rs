//! Recovery of a candidate voltage vector from the solved per-clique moment
//! blocks, power-injection mismatches, the three convergence metrics, and
//! the engineering feasibility check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::NetworkCase;
use crate::opf::OpfPolynomials;
use crate::poly::{Exponent, VarId};
use crate::relax::Relaxation;
use crate::sparsity::CliqueDecomposition;

/// Cap applied to eigenvalue ratios when the second eigenvalue is zero.
pub const EIG_RATIO_CAP: f64 = 1e16;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(
        "sign merge conflict: cliques disagree on shared voltage entries by {0:.3e} \
         (blocks are not rank one)"
    )]
    SignMergeConflict(f64),
}

/// Extracted voltage phasors plus per-clique spectral diagnostics.
#[derive(Debug, Clone)]
pub struct VoltageSolution {
    /// Complex phasor per bus, p.u.
    pub v: Vec<Complex64>,
    /// Per clique: (largest eigenvalue, second-largest magnitude eigenvalue).
    pub clique_eigs: Vec<(f64, f64)>,
    /// Worst disagreement on shared entries during the sign merge.
    pub merge_conflict: f64,
}

impl VoltageSolution {
    pub fn vd(&self) -> Vec<f64> {
        self.v.iter().map(|c| c.re).collect()
    }

    pub fn vq(&self) -> Vec<f64> {
        self.v.iter().map(|c| c.im).collect()
    }
}

/// Per-bus power-injection mismatches between the moment variables and the
/// extracted voltage vector, in physical units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MismatchReport {
    /// MW per bus.
    pub p_mis: Vec<f64>,
    /// MVAr per bus.
    pub q_mis: Vec<f64>,
    /// MVA per bus: sqrt(P^2 + Q^2).
    pub s_mis: Vec<f64>,
    pub max_s_mis: f64,
}

impl MismatchReport {
    /// (bus, S_mis) sorted ascending by mismatch, for plotting.
    pub fn sorted(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.s_mis.iter().copied().enumerate().collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }
}

/// The three convergence metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// Largest apparent-power injection mismatch, MVA.
    pub max_s_mis: f64,
    /// |C_mom - C_V| / C_mom.
    pub obj_val_diff: f64,
    /// Smallest, over cliques, ratio of the two largest-magnitude
    /// eigenvalues of the degree-two diagonal moment sub-block.
    pub min_eig_ratio: f64,
    /// Objective implied by the extracted voltages, $/h.
    pub cost_at_voltage: f64,
    /// Relaxation objective (lower bound), $/h.
    pub relaxation_objective: f64,
}

/// Worst violation per engineering-constraint family, evaluated at a voltage
/// vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// p.u. violation of voltage-magnitude bounds.
    pub voltage_pu: f64,
    /// MW violation of active generation bounds.
    pub active_mw: f64,
    /// MVAr violation of reactive generation bounds.
    pub reactive_mvar: f64,
    /// MVA violation of flow limits.
    pub flow_mva: f64,
}

impl FeasibilityReport {
    pub fn within(&self, vmag_tol: f64, ineq_tol: f64) -> bool {
        self.voltage_pu <= vmag_tol
            && self.active_mw <= ineq_tol
            && self.reactive_mvar <= ineq_tol
            && self.flow_mva <= ineq_tol
    }
}

/// Lift a voltage point to moment space: y_alpha = x^alpha for every
/// instantiated monomial, minimal epigraph values for the auxiliaries.
pub fn lift(relax: &Relaxation, polys: &OpfPolynomials, vd: &[f64], vq: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; relax.problem.n_vars()];
    for (i, e) in relax.problem.index.exponents().iter().enumerate() {
        x[i] = e.eval(&relax.space, vd, vq);
    }
    for (g, cost) in polys.costs.iter().enumerate() {
        x[relax.problem.n_moment + g] = cost.f_c.eval(&relax.space, vd, vq);
    }
    x
}

/// Degree-two diagonal moment sub-block of one clique, built from the moment
/// values: entry (a, b) = y[e_a + e_b] over the clique's variables.
pub fn clique_moment_block(relax: &Relaxation, y: &[f64], clique: usize) -> DMatrix<f64> {
    let vars = &relax.clique_vars[clique];
    let dim = vars.len();
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let e = Exponent::from_pairs(&[(vars[a], 1), (vars[b], 1)]);
            let idx = relax
                .problem
                .index
                .get(&e)
                .expect("degree-2 clique moments are always instantiated");
            m[(a, b)] = y[idx as usize];
            m[(b, a)] = y[idx as usize];
        }
    }
    m
}

/// Extract the voltage phasor vector: per clique, take the top eigenpair of
/// the degree-two moment sub-block; merge local vectors over the clique tree
/// fixing each clique's sign against its parent on shared buses; finally fix
/// the global sign so the reference bus has positive direct component.
///
/// `sign_tol` bounds the tolerated disagreement on shared entries; pass
/// `f64::INFINITY` to always obtain a candidate (mismatches then gate its
/// quality downstream).
pub fn extract_voltages(
    relax: &Relaxation,
    decomp: &CliqueDecomposition,
    y: &[f64],
    sign_tol: f64,
) -> Result<VoltageSolution, AnalysisError> {
    let space = &relax.space;
    let n = space.n_bus();
    let n_cliques = decomp.cliques.len();

    // Per-clique scaled top eigenvectors.
    let mut local: Vec<Vec<f64>> = Vec::with_capacity(n_cliques);
    let mut clique_eigs = Vec::with_capacity(n_cliques);
    for mu in 0..n_cliques {
        let m = clique_moment_block(relax, y, mu);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
        });
        let lead = order[0];
        let lambda = eig.eigenvalues[lead];
        let second = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i].abs());
        clique_eigs.push((lambda.abs(), second));
        let scale = lambda.max(0.0).sqrt();
        local.push(
            (0..m.nrows())
                .map(|i| scale * eig.eigenvectors[(i, lead)])
                .collect(),
        );
    }

    // Merge over the clique tree: children processed after parents, sign
    // chosen to minimize squared mismatch on already-assigned shared vars.
    let mut order: Vec<usize> = (0..n_cliques).collect();
    order.sort_by_key(|&c| tree_depth(&decomp.parent, c));
    let mut assigned: Vec<Option<f64>> = vec![None; 2 * n];
    let mut conflict: f64 = 0.0;
    for &mu in &order {
        let vars = &relax.clique_vars[mu];
        let vals = &local[mu];
        let mut dot = 0.0;
        let mut any = false;
        for (i, v) in vars.iter().enumerate() {
            if let Some(a) = assigned[v.0 as usize] {
                dot += a * vals[i];
                any = true;
            }
        }
        let sign = if !any || dot >= 0.0 { 1.0 } else { -1.0 };
        for (i, v) in vars.iter().enumerate() {
            let val = sign * vals[i];
            match assigned[v.0 as usize] {
                Some(a) => conflict = conflict.max((a - val).abs()),
                None => assigned[v.0 as usize] = Some(val),
            }
        }
    }
    if conflict > sign_tol {
        return Err(AnalysisError::SignMergeConflict(conflict));
    }

    let mut vd: Vec<f64> = (0..n)
        .map(|k| assigned[space.vd(k).0 as usize].unwrap_or(0.0))
        .collect();
    let mut vq: Vec<f64> = (0..n)
        .map(|k| assigned[space.vq(k).0 as usize].unwrap_or(0.0))
        .collect();
    if space.eliminates_ref() {
        vq[space.ref_bus()] = 0.0;
    }
    // Global sign: positive direct component at the reference bus.
    if vd[space.ref_bus()] < 0.0 {
        for v in vd.iter_mut().chain(vq.iter_mut()) {
            *v = -*v;
        }
    }
    Ok(VoltageSolution {
        v: (0..n).map(|k| Complex64::new(vd[k], vq[k])).collect(),
        clique_eigs,
        merge_conflict: conflict,
    })
}

fn tree_depth(parent: &[Option<usize>], mut c: usize) -> usize {
    let mut d = 0;
    while let Some(p) = parent[c] {
        d += 1;
        c = p;
    }
    d
}

/// P_mis = L_y{f_P} - f_P(V) and the reactive analogue, converted to MW /
/// MVAr; S_mis is the root-sum-square.
pub fn compute_mismatches(
    case: &NetworkCase,
    polys: &OpfPolynomials,
    relax: &Relaxation,
    y: &[f64],
    v: &VoltageSolution,
) -> MismatchReport {
    let vd = v.vd();
    let vq = v.vq();
    let space = &relax.space;
    let index = &relax.problem.index;
    let n = case.n();
    let mut p_mis = Vec::with_capacity(n);
    let mut q_mis = Vec::with_capacity(n);
    let mut s_mis = Vec::with_capacity(n);
    for k in 0..n {
        let lp = crate::poly::apply_l_ro(&polys.f_p[k], index, space)
            .expect("injection moments instantiated");
        let lq = crate::poly::apply_l_ro(&polys.f_q[k], index, space)
            .expect("injection moments instantiated");
        let dp = (lp.eval(y) - polys.f_p[k].eval(space, &vd, &vq)) * case.base_mva;
        let dq = (lq.eval(y) - polys.f_q[k].eval(space, &vd, &vq)) * case.base_mva;
        p_mis.push(dp);
        q_mis.push(dq);
        s_mis.push(dp.hypot(dq));
    }
    let max_s_mis = s_mis.iter().copied().fold(0.0, f64::max);
    MismatchReport { p_mis, q_mis, s_mis, max_s_mis }
}

/// The three convergence metrics of a solved relaxation.
pub fn compute_metrics(
    polys: &OpfPolynomials,
    relaxation_objective: f64,
    mismatches: &MismatchReport,
    v: &VoltageSolution,
) -> Metrics {
    let cost_at_voltage = polys.cost_at(&v.vd(), &v.vq());
    let denom = relaxation_objective.abs().max(f64::MIN_POSITIVE);
    let obj_val_diff = (relaxation_objective - cost_at_voltage).abs() / denom;
    let min_eig_ratio = v
        .clique_eigs
        .iter()
        .map(|&(l1, l2)| {
            if l2 <= l1 * 1e-16 {
                EIG_RATIO_CAP
            } else {
                (l1 / l2).min(EIG_RATIO_CAP)
            }
        })
        .fold(EIG_RATIO_CAP, f64::min);
    Metrics {
        max_s_mis: mismatches.max_s_mis,
        obj_val_diff,
        min_eig_ratio,
        cost_at_voltage,
        relaxation_objective,
    }
}

/// Evaluate the OPF inequality families at a voltage vector.
pub fn check_feasibility(
    case: &NetworkCase,
    polys: &OpfPolynomials,
    v: &VoltageSolution,
) -> FeasibilityReport {
    let vd = v.vd();
    let vq = v.vq();
    let space = &polys.space;
    let base = case.base_mva;
    let mut voltage_pu: f64 = 0.0;
    let mut active_mw: f64 = 0.0;
    let mut reactive_mvar: f64 = 0.0;
    let mut flow_mva: f64 = 0.0;
    for k in 0..case.n() {
        let vm = v.v[k].norm();
        voltage_pu = voltage_pu
            .max(case.buses[k].vmin - vm)
            .max(vm - case.buses[k].vmax);
        let p = polys.f_p[k].eval(space, &vd, &vq);
        let (plo, phi) = polys.bounds.p[k];
        active_mw = active_mw.max((plo - p) * base).max((p - phi) * base);
        let q = polys.f_q[k].eval(space, &vd, &vq);
        let (qlo, qhi) = polys.bounds.q[k];
        reactive_mvar = reactive_mvar.max((qlo - q) * base).max((q - qhi) * base);
    }
    for bf in &polys.flows {
        let Some(s2) = bf.s_max_sq else { continue };
        let smax = s2.sqrt();
        for fs in [&bf.f_slm, &bf.f_sml] {
            let s = fs.eval(space, &vd, &vq).max(0.0).sqrt();
            flow_mva = flow_mva.max((s - smax) * base);
        }
    }
    FeasibilityReport {
        voltage_pu: voltage_pu.max(0.0),
        active_mw: active_mw.max(0.0),
        reactive_mvar: reactive_mvar.max(0.0),
        flow_mva: flow_mva.max(0.0),
    }
}
