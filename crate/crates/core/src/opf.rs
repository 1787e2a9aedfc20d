//! Construction of the OPF polynomials over the rectangular voltage
//! components: bus injections, squared voltage magnitudes, branch flows, and
//! generation costs, together with the constraint bounds they are measured
//! against. Everything here is in per unit on the case base; cost
//! coefficients are rescaled so cost polynomials evaluate directly to $/h.

use crate::case::{AdmittanceMatrix, NetworkCase};
use crate::poly::{Exponent, Polynomial, VarId, VarSpace};

/// The six flow polynomials of one branch. `lm` is the from->to direction.
#[derive(Debug, Clone)]
pub struct BranchFlows {
    /// Index into `case.branches`.
    pub branch: usize,
    pub f_plm: Polynomial,
    pub f_pml: Polynomial,
    pub f_qlm: Polynomial,
    pub f_qml: Polynomial,
    pub f_slm: Polynomial,
    pub f_sml: Polynomial,
    /// Squared flow limit in p.u. (None when unlimited).
    pub s_max_sq: Option<f64>,
}

/// Per-generator cost data in $/h over per-unit injections.
#[derive(Debug, Clone)]
pub struct GenCost {
    /// Internal bus index.
    pub bus: usize,
    /// cost(p_pu) = c2 * p_pu^2 + c1 * p_pu + c0, in $/h.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    /// The cost as a polynomial in the voltage components (degree 4 when
    /// c2 > 0).
    pub f_c: Polynomial,
}

/// Bounds mirroring the OPF inequality constraints, per unit.
#[derive(Debug, Clone)]
pub struct OpfBounds {
    /// Per bus (p_min, p_max) on active injection.
    pub p: Vec<(f64, f64)>,
    pub q: Vec<(f64, f64)>,
    /// Per bus (vmin^2, vmax^2) on squared voltage magnitude.
    pub v_sq: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct OpfPolynomials {
    pub space: VarSpace,
    pub f_p: Vec<Polynomial>,
    pub f_q: Vec<Polynomial>,
    pub f_v: Vec<Polynomial>,
    pub flows: Vec<BranchFlows>,
    pub costs: Vec<GenCost>,
    pub bounds: OpfBounds,
}

impl OpfPolynomials {
    /// Total generation cost at a voltage point, $/h.
    pub fn cost_at(&self, vd: &[f64], vq: &[f64]) -> f64 {
        self.costs
            .iter()
            .map(|c| c.f_c.eval(&self.space, vd, vq))
            .sum()
    }

    /// The objective polynonial sum over generators.
    pub fn objective(&self) -> Polynomial {
        self.costs
            .iter()
            .fold(Polynomial::zero(), |acc, c| acc.add(&c.f_c))
    }
}

fn var_poly(v: VarId) -> Polynomial {
    Polynomial::var(v)
}

fn quad(v: VarId) -> Exponent {
    Exponent::from_pairs(&[(v, 2)])
}

fn cross(a: VarId, b: VarId) -> Exponent {
    Exponent::from_pairs(&[(a, 1), (b, 1)])
}

/// Active and reactive injection polynomials for every bus:
/// f_Pk includes the load so that it evaluates to the bus generation.
pub fn build_injections(
    case: &NetworkCase,
    y: &AdmittanceMatrix,
    space: &VarSpace,
) -> (Vec<Polynomial>, Vec<Polynomial>) {
    let n = case.n();
    let mut f_p = Vec::with_capacity(n);
    let mut f_q = Vec::with_capacity(n);
    let elim = |poly: Polynomial| -> Polynomial {
        if space.eliminates_ref() {
            poly.substitute_zero(space.vq(space.ref_bus()))
        } else {
            poly
        }
    };
    for k in 0..n {
        let (vdk, vqk) = (space.vd(k), space.vq(k));
        let mut p = Polynomial::zero();
        let mut q = Polynomial::zero();
        for i in y.row_pattern(k) {
            let (g, b) = (y.g(k, i), y.b(k, i));
            let (vdi, vqi) = (space.vd(i), space.vq(i));
            // Vdk*(G Vdi - B Vqi) + Vqk*(B Vdi + G Vqi)
            p.add_term(cross(vdk, vdi), g);
            p.add_term(cross(vdk, vqi), -b);
            p.add_term(cross(vqk, vdi), b);
            p.add_term(cross(vqk, vqi), g);
            // Vdk*(-B Vdi - G Vqi) + Vqk*(G Vdi - B Vqi)
            q.add_term(cross(vdk, vdi), -b);
            q.add_term(cross(vdk, vqi), -g);
            q.add_term(cross(vqk, vdi), g);
            q.add_term(cross(vqk, vqi), -b);
        }
        p.add_term(Exponent::one(), case.buses[k].pd / case.base_mva);
        q.add_term(Exponent::one(), case.buses[k].qd / case.base_mva);
        f_p.push(elim(p));
        f_q.push(elim(q));
    }
    (f_p, f_q)
}

/// Squared voltage magnitude polynomials.
pub fn build_voltage(case: &NetworkCase, space: &VarSpace) -> Vec<Polynomial> {
    (0..case.n())
        .map(|k| {
            let mut p = Polynomial::zero();
            p.add_term(quad(space.vd(k)), 1.0);
            if space.is_active(space.vq(k)) {
                p.add_term(quad(space.vq(k)), 1.0);
            }
            p
        })
        .collect()
}

/// Branch flow polynomials in both directions, plus the squared apparent
/// flows.
pub fn build_flows(case: &NetworkCase, space: &VarSpace) -> Vec<BranchFlows> {
    let index = case.bus_index();
    let elim = |poly: Polynomial| -> Polynomial {
        if space.eliminates_ref() {
            poly.substitute_zero(space.vq(space.ref_bus()))
        } else {
            poly
        }
    };
    case.branches
        .iter()
        .enumerate()
        .map(|(bi, br)| {
            let (l, m) = (index[&br.from], index[&br.to]);
            let denom = br.r * br.r + br.x * br.x;
            let (g, b) = (br.r / denom, -br.x / denom);
            let (gsh, bsh) = (br.g_sh, br.b_sh);
            let tau = br.ratio();
            let (sin_t, cos_t) = br.theta.sin_cos();

            let (vdl, vql) = (var_poly(space.vd(l)), var_poly(space.vq(l)));
            let (vdm, vqm) = (var_poly(space.vd(m)), var_poly(space.vq(m)));
            // |V_l|^2, |V_m|^2, Vdl Vdm + Vql Vqm, Vdl Vqm - Vql Vdm
            let vl2 = vdl.mul(&vdl).add(&vql.mul(&vql));
            let vm2 = vdm.mul(&vdm).add(&vqm.mul(&vqm));
            let dot = vdl.mul(&vdm).add(&vql.mul(&vqm));
            let det = vdl.mul(&vqm).sub(&vql.mul(&vdm));

            let f_plm = vl2
                .scale((g + gsh / 2.0) / (tau * tau))
                .add(&dot.scale((b * sin_t - g * cos_t) / tau))
                .add(&det.scale((g * sin_t + b * cos_t) / tau));
            let f_pml = vm2
                .scale(g + gsh / 2.0)
                .add(&dot.scale(-(g * cos_t + b * sin_t) / tau))
                .add(&det.scale((g * sin_t - b * cos_t) / tau));
            let f_qlm = vl2
                .scale(-(b + bsh / 2.0) / (tau * tau))
                .add(&dot.scale((b * cos_t + g * sin_t) / tau))
                .add(&det.scale((g * cos_t - b * sin_t) / tau));
            let f_qml = vm2
                .scale(-(b + bsh / 2.0))
                .add(&dot.scale((b * cos_t - g * sin_t) / tau))
                .add(&det.scale(-(g * cos_t + b * sin_t) / tau));

            let f_plm = elim(f_plm);
            let f_pml = elim(f_pml);
            let f_qlm = elim(f_qlm);
            let f_qml = elim(f_qml);
            let f_slm = f_plm.mul(&f_plm).add(&f_qlm.mul(&f_qlm));
            let f_sml = f_pml.mul(&f_pml).add(&f_qml.mul(&f_qml));
            BranchFlows {
                branch: bi,
                f_plm,
                f_pml,
                f_qlm,
                f_qml,
                f_slm,
                f_sml,
                s_max_sq: br.limit().map(|s| {
                    let s_pu = s / case.base_mva;
                    s_pu * s_pu
                }),
            }
        })
        .collect()
}

/// Generation cost polynomials, rescaled to per-unit injections, $/h values.
pub fn build_cost(case: &NetworkCase, f_p: &[Polynomial]) -> Vec<GenCost> {
    let index = case.bus_index();
    case.generators
        .iter()
        .map(|gen| {
            let k = index[&gen.bus];
            let c2 = gen.c2 * case.base_mva * case.base_mva;
            let c1 = gen.c1 * case.base_mva;
            let c0 = gen.c0;
            let fp = &f_p[k];
            let mut f_c = fp.mul(fp).scale(c2).add(&fp.scale(c1));
            f_c.add_term(Exponent::one(), c0);
            GenCost { bus: k, c2, c1, c0, f_c }
        })
        .collect()
}

/// Build every OPF polynomial of a case.
pub fn build(case: &NetworkCase, y: &AdmittanceMatrix, space: &VarSpace) -> OpfPolynomials {
    let (f_p, f_q) = build_injections(case, y, space);
    let f_v = build_voltage(case, space);
    let flows = build_flows(case, space);
    let costs = build_cost(case, &f_p);
    let bounds = OpfBounds {
        p: (0..case.n()).map(|k| case.p_bounds_pu(k)).collect(),
        q: (0..case.n()).map(|k| case.q_bounds_pu(k)).collect(),
        v_sq: case
            .buses
            .iter()
            .map(|b| (b.vmin * b.vmin, b.vmax * b.vmax))
            .collect(),
    };
    OpfPolynomials { space: space.clone(), f_p, f_q, f_v, flows, costs, bounds }
}

/// The standard variable space of a case (reference angle eliminated).
pub fn default_space(case: &NetworkCase) -> VarSpace {
    VarSpace::new(case.n(), case.slack(), true)
}
