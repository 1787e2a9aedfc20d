//! Assembly of the decomposed, selectively-ordered moment relaxation as a
//! [`ConicProblem`]: per-clique moment blocks, localizing blocks per
//! inequality, equality rows for equality-constrained polynomials,
//! Schur-complement cost and flow blocks, and the linear objective.
//!
//! Moment variables are global: cliques sharing a monomial reference the same
//! variable, so the matrix-completion linking constraints hold by
//! construction. The all-zeros moment is the constant 1 and never a variable.
//!
//! With even-block elimination (default), positive semidefiniteness is
//! enforced on the equal-degree diagonal sub-blocks of each moment and
//! localizing matrix; every OPF polynomial has only even-degree monomials,
//! so odd moments never arise anywhere in the problem.

use thiserror::Error;

use crate::case::NetworkCase;
use crate::conic::{ConicProblem, Provenance, PsdBlock, Row};
use crate::opf::OpfPolynomials;
use crate::poly::{
    apply_l, basis, basis_exact, Exponent, LinearExpr, MomentError, MomentIndexMap, Polynomial,
    VarId, VarSpace,
};
use crate::sparsity::{clique_orders, CliqueDecomposition};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("OPF is ill-posed: no generators")]
    NoGenerators,
    #[error("bus order vector has length {0}, case has {1} buses")]
    OrderLength(usize, usize),
    #[error("relaxation orders must be at least 1 (bus {0} has order 0)")]
    OrderTooLow(usize),
    #[error("angle-reference mode does not match the polynomial variable space")]
    SpaceMismatch,
    #[error(transparent)]
    Moment(#[from] MomentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleRef {
    /// Remove the reference bus' Vq variable from the problem.
    Eliminate,
    /// Keep the variable and pin its pure-power moments to zero.
    Constrain,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub even_block_elimination: bool,
    pub angle_ref: AngleRef,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { even_block_elimination: true, angle_ref: AngleRef::Eliminate }
    }
}

/// The assembled relaxation plus the metadata needed to interpret solutions.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub problem: ConicProblem,
    pub space: VarSpace,
    /// Active variables of each clique, sorted.
    pub clique_vars: Vec<Vec<VarId>>,
    /// Relaxation order per clique.
    pub orders: Vec<u32>,
    /// The per-bus orders the assembly was built from.
    pub bus_orders: Vec<u32>,
    /// Internal bus index of the generator behind each auxiliary variable.
    pub aux_buses: Vec<usize>,
    pub options: AssemblyOptions,
}

impl Relaxation {
    /// Index of a generator's epigraph variable in the flat variable vector.
    pub fn aux_var(&self, g: usize) -> u32 {
        (self.problem.n_moment + g) as u32
    }
}

/// Assemble the order-γ moment relaxation for per-bus orders `bus_orders`.
pub fn assemble(
    case: &NetworkCase,
    polys: &OpfPolynomials,
    decomp: &CliqueDecomposition,
    bus_orders: &[u32],
    opts: AssemblyOptions,
) -> Result<Relaxation, AssemblyError> {
    if case.generators.is_empty() {
        return Err(AssemblyError::NoGenerators);
    }
    if bus_orders.len() != case.n() {
        return Err(AssemblyError::OrderLength(bus_orders.len(), case.n()));
    }
    if let Some(k) = bus_orders.iter().position(|&g| g < 1) {
        return Err(AssemblyError::OrderTooLow(k));
    }
    let space = polys.space.clone();
    let eliminate = matches!(opts.angle_ref, AngleRef::Eliminate);
    if space.eliminates_ref() != eliminate {
        return Err(AssemblyError::SpaceMismatch);
    }

    let n_cliques = decomp.cliques.len();
    let orders = clique_orders(bus_orders, &decomp.covering, n_cliques);
    let clique_vars: Vec<Vec<VarId>> = decomp
        .cliques
        .iter()
        .map(|c| space.bus_vars(c))
        .collect();

    // Pass 1: instantiate the moment variables from the moment-block
    // structure. Everything downstream must find its monomials here.
    let mut index = MomentIndexMap::new();
    let mut moment_bases: Vec<Vec<(u32, Vec<Exponent>)>> = Vec::with_capacity(n_cliques);
    for mu in 0..n_cliques {
        let vars = &clique_vars[mu];
        let gamma = orders[mu];
        let mut blocks = Vec::new();
        if opts.even_block_elimination {
            for d in 1..=gamma {
                blocks.push((d, basis_exact(vars, d)));
            }
        } else {
            blocks.push((gamma, basis(vars, gamma)));
        }
        for (_, b) in &blocks {
            for j in 0..b.len() {
                for i in 0..=j {
                    let prod = b[i].mul(&b[j]);
                    if !prod.is_constant() {
                        index.register(&prod);
                    }
                }
            }
        }
        moment_bases.push(blocks);
    }
    let n_moment = index.len();

    let mut problem = ConicProblem {
        n_moment,
        n_aux: case.generators.len(),
        ..Default::default()
    };

    let mut ctx = Ctx { index, space: &space, problem: &mut problem };

    // Moment PSD blocks.
    for mu in 0..n_cliques {
        for (d, b) in &moment_bases[mu] {
            ctx.push_outer_block(
                b,
                &Polynomial::constant(1.0),
                Provenance::MomentBlock { clique: mu, degree: *d },
            )?;
        }
    }

    // Bus power-injection and voltage-magnitude constraints.
    for k in 0..case.n() {
        let gamma_k = bus_orders[k];
        let vars = &clique_vars[decomp.covering[k]];
        let quantities: [(&Polynomial, (f64, f64), &'static str); 3] = [
            (&polys.f_p[k], polys.bounds.p[k], "P"),
            (&polys.f_q[k], polys.bounds.q[k], "Q"),
            (&polys.f_v[k], polys.bounds.v_sq[k], "V"),
        ];
        for (poly, (lo, hi), what) in quantities {
            if lo == hi {
                // Equality-constrained polynomial: linear rows instead of a
                // localizing matrix.
                let mut g = poly.clone();
                g.add_term(Exponent::one(), -lo);
                ctx.push_equality_rows(&g, vars, gamma_k, opts.even_block_elimination, k, what)?;
            } else {
                let mut w_lo = poly.clone();
                w_lo.add_term(Exponent::one(), -lo);
                ctx.push_localizing(
                    &w_lo,
                    vars,
                    gamma_k - 1,
                    opts.even_block_elimination,
                    Provenance::Localizing { bus: k, what },
                )?;
                let mut w_hi = poly.scale(-1.0);
                w_hi.add_term(Exponent::one(), hi);
                ctx.push_localizing(
                    &w_hi,
                    vars,
                    gamma_k - 1,
                    opts.even_block_elimination,
                    Provenance::Localizing { bus: k, what },
                )?;
            }
        }
    }

    // Apparent-power flow constraints: Schur blocks at every order, direct
    // localizing blocks once the terminal order allows the degree-4 weight.
    let bus_index = case.bus_index();
    for bf in &polys.flows {
        let Some(s2) = bf.s_max_sq else { continue };
        let br = &case.branches[bf.branch];
        let (l, m) = (bus_index[&br.from], bus_index[&br.to]);
        let gamma_f = bus_orders[l].max(bus_orders[m]);
        let t_star = match bus_orders[l].cmp(&bus_orders[m]) {
            std::cmp::Ordering::Greater => l,
            std::cmp::Ordering::Less => m,
            std::cmp::Ordering::Equal => l.min(m),
        };
        let vars = &clique_vars[decomp.covering[t_star]];

        for (fp, fq, dir) in [(&bf.f_plm, &bf.f_qlm, "lm"), (&bf.f_pml, &bf.f_qml, "ml")] {
            ctx.push_schur_flow(fp, fq, s2, Provenance::SchurFlow { branch: bf.branch, dir })?;
            if gamma_f >= 2 {
                let fs = if dir == "lm" { &bf.f_slm } else { &bf.f_sml };
                let mut w = fs.scale(-1.0);
                w.add_term(Exponent::one(), s2);
                ctx.push_localizing(
                    &w,
                    vars,
                    gamma_f - 2,
                    opts.even_block_elimination,
                    Provenance::FlowLocalizing { branch: bf.branch, dir },
                )?;
            }
        }
    }

    // Cost: epigraph variables t_g, Schur blocks for quadratic costs, direct
    // degree-4 equality when the covering clique provides the moments.
    let mut objective = LinearExpr::default();
    let mut aux_buses = Vec::with_capacity(case.generators.len());
    for (g, cost) in polys.costs.iter().enumerate() {
        let k = cost.bus;
        aux_buses.push(k);
        let t = (n_moment + g) as u32;
        objective = objective.add(&LinearExpr::variable(t));
        let lp = ctx.apply(&polys.f_p[k])?;
        if cost.c2 > 0.0 {
            // [[t - c1 L{fP} - c0, -sqrt(c2) L{fP}], [., 1]] >= 0
            let e00 = LinearExpr::variable(t).add(&lp.scale(-cost.c1)).add(&LinearExpr::constant(-cost.c0));
            let e01 = lp.scale(-cost.c2.sqrt());
            let e11 = LinearExpr::constant(1.0);
            ctx.problem.psd_blocks.push(PsdBlock {
                dim: 2,
                entries: vec![e00, e01, e11],
                tag: Provenance::SchurCost { bus: k },
            });
            if orders[decomp.covering[k]] >= 2 {
                let lc = ctx.apply(&cost.f_c)?;
                let row = LinearExpr::variable(t).add(&lc.scale(-1.0));
                ctx.problem.equalities.push(Row { expr: row, tag: Provenance::CostRow { bus: k } });
            }
        } else {
            let row = LinearExpr::variable(t)
                .add(&lp.scale(-cost.c1))
                .add(&LinearExpr::constant(-cost.c0));
            ctx.problem.equalities.push(Row { expr: row, tag: Provenance::CostRow { bus: k } });
        }
    }
    ctx.problem.objective = objective;

    // Constraint-form angle reference: pin pure powers of the reference Vq.
    if matches!(opts.angle_ref, AngleRef::Constrain) {
        let vq_ref = space.vq(space.ref_bus());
        let max_gamma = orders.iter().copied().max().unwrap_or(1);
        for eta in 1..=(2 * max_gamma) {
            let e = Exponent::from_pairs(&[(vq_ref, eta as u8)]);
            if let Some(idx) = ctx.index.get(&e) {
                ctx.problem.equalities.push(Row {
                    expr: LinearExpr::variable(idx),
                    tag: Provenance::AngleReference,
                });
            }
        }
    }

    let index = ctx.index;
    problem.index = index;
    Ok(Relaxation {
        problem,
        space,
        clique_vars,
        orders,
        bus_orders: bus_orders.to_vec(),
        aux_buses,
        options: opts,
    })
}

/// Assembly context: the index map plus the problem under construction.
struct Ctx<'a> {
    index: MomentIndexMap,
    space: &'a VarSpace,
    problem: &'a mut ConicProblem,
}

impl<'a> Ctx<'a> {
    fn apply(&mut self, p: &Polynomial) -> Result<LinearExpr, MomentError> {
        apply_l(p, &mut self.index, self.space, false)
    }

    /// PSD block L{weight * b b^T} (scalar row when the basis is a single
    /// monomial).
    fn push_outer_block(
        &mut self,
        b: &[Exponent],
        weight: &Polynomial,
        tag: Provenance,
    ) -> Result<(), MomentError> {
        if b.len() == 1 {
            let p = weight.mul_monomial(&b[0].mul(&b[0]));
            let expr = self.apply(&p)?;
            self.problem.nonneg.push(Row { expr, tag });
            return Ok(());
        }
        let dim = b.len();
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for j in 0..dim {
            for i in 0..=j {
                let p = weight.mul_monomial(&b[i].mul(&b[j]));
                entries.push(self.apply(&p)?);
            }
        }
        self.problem.psd_blocks.push(PsdBlock { dim, entries, tag });
        Ok(())
    }

    /// Localizing constraint for `weight >= 0` at localizing order `ord`.
    fn push_localizing(
        &mut self,
        weight: &Polynomial,
        vars: &[VarId],
        ord: u32,
        even_elim: bool,
        tag: Provenance,
    ) -> Result<(), MomentError> {
        if even_elim {
            for d in 0..=ord {
                let b = basis_exact(vars, d);
                self.push_outer_block(&b, weight, tag.clone())?;
            }
        } else {
            let b = basis(vars, ord);
            self.push_outer_block(&b, weight, tag.clone())?;
        }
        Ok(())
    }

    /// Equality rows for an equality-constrained polynomial g = 0 at bus
    /// order γ: one row per distinct entry of the full localizing matrix,
    /// i.e. L{g x^β} = 0 for every monomial β of degree ≤ 2(γ-1) over the
    /// covering clique's variables. With even-block elimination, odd-degree
    /// β would reference moments that exist in no block and constrain
    /// nothing, so only even degrees are emitted.
    fn push_equality_rows(
        &mut self,
        g: &Polynomial,
        vars: &[VarId],
        gamma: u32,
        even_elim: bool,
        bus: usize,
        what: &'static str,
    ) -> Result<(), MomentError> {
        let max_deg = 2 * (gamma - 1);
        for beta in basis(vars, max_deg) {
            if even_elim && beta.degree() % 2 == 1 {
                continue;
            }
            let expr = self.apply(&g.mul_monomial(&beta))?;
            self.problem.equalities.push(Row {
                expr,
                tag: Provenance::EqualityRow { bus, what },
            });
        }
        Ok(())
    }

    /// Negated Schur 3x3 flow block:
    /// [[s2, -L{fp}, -L{fq}], [-L{fp}, 1, 0], [-L{fq}, 0, 1]] >= 0.
    fn push_schur_flow(
        &mut self,
        fp: &Polynomial,
        fq: &Polynomial,
        s2: f64,
        tag: Provenance,
    ) -> Result<(), MomentError> {
        let lp = self.apply(fp)?;
        let lq = self.apply(fq)?;
        let entries = vec![
            LinearExpr::constant(s2),
            lp.scale(-1.0),
            LinearExpr::constant(1.0),
            lq.scale(-1.0),
            LinearExpr::constant(0.0),
            LinearExpr::constant(1.0),
        ];
        self.problem.psd_blocks.push(PsdBlock { dim: 3, entries, tag });
        Ok(())
    }
}
