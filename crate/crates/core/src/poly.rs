//! Sparse multivariate polynomials over the rectangular voltage components,
//! monomial bases, and the linear functional that maps polynomials to linear
//! expressions in moment variables.
//!
//! Variables are the real and imaginary voltage parts of every bus. For an
//! `n`-bus system variable `k` is `Vd(k)` and variable `n + k` is `Vq(k)`
//! (0-based bus indices). The angle reference is normally handled by removing
//! the reference bus' `Vq` variable from the variable space entirely.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients below this magnitude are dropped during arithmetic.
pub const COEFF_TOL: f64 = 1e-12;

/// A voltage-component variable (`Vd` or `Vq` of some bus).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// The set of voltage variables of one case, with optional elimination of the
/// reference bus' quadrature component.
#[derive(Debug, Clone)]
pub struct VarSpace {
    n_bus: usize,
    ref_bus: usize,
    eliminate_ref: bool,
}

impl VarSpace {
    pub fn new(n_bus: usize, ref_bus: usize, eliminate_ref: bool) -> Self {
        assert!(ref_bus < n_bus);
        Self { n_bus, ref_bus, eliminate_ref }
    }

    pub fn n_bus(&self) -> usize {
        self.n_bus
    }

    pub fn ref_bus(&self) -> usize {
        self.ref_bus
    }

    pub fn eliminates_ref(&self) -> bool {
        self.eliminate_ref
    }

    pub fn vd(&self, bus: usize) -> VarId {
        VarId(bus as u32)
    }

    pub fn vq(&self, bus: usize) -> VarId {
        VarId((self.n_bus + bus) as u32)
    }

    /// Whether a variable participates in the optimization (false only for the
    /// eliminated reference `Vq`).
    pub fn is_active(&self, v: VarId) -> bool {
        !(self.eliminate_ref && v == self.vq(self.ref_bus))
    }

    /// Bus a variable belongs to.
    pub fn bus_of(&self, v: VarId) -> usize {
        (v.0 as usize) % self.n_bus
    }

    pub fn is_quadrature(&self, v: VarId) -> bool {
        (v.0 as usize) >= self.n_bus
    }

    /// All active variables, ascending.
    pub fn all_vars(&self) -> Vec<VarId> {
        (0..2 * self.n_bus)
            .map(|i| VarId(i as u32))
            .filter(|v| self.is_active(*v))
            .collect()
    }

    /// Active variables of a set of buses, ascending. Buses may be unsorted.
    pub fn bus_vars(&self, buses: &[usize]) -> Vec<VarId> {
        let mut out: Vec<VarId> = buses
            .iter()
            .flat_map(|&b| [self.vd(b), self.vq(b)])
            .filter(|v| self.is_active(*v))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn label(&self, v: VarId) -> String {
        let bus = self.bus_of(v);
        if self.is_quadrature(v) {
            format!("Vq{}", bus + 1)
        } else {
            format!("Vd{}", bus + 1)
        }
    }

    /// Evaluate a variable on a rectangular voltage vector `(vd, vq)`.
    pub fn value(&self, v: VarId, vd: &[f64], vq: &[f64]) -> f64 {
        let bus = self.bus_of(v);
        if self.is_quadrature(v) {
            vq[bus]
        } else {
            vd[bus]
        }
    }
}

/// A monomial exponent vector, stored sparsely as sorted `(variable, power)`
/// pairs with no explicit zeros.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exponent {
    terms: Vec<(VarId, u8)>,
}

impl Exponent {
    pub fn one() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1)] }
    }

    /// Build from unsorted pairs; powers of repeated variables accumulate.
    pub fn from_pairs(pairs: &[(VarId, u8)]) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for &(v, p) in pairs {
            if p > 0 {
                *map.entry(v).or_insert(0) += p as u32;
            }
        }
        Self {
            terms: map.into_iter().map(|(v, p)| (v, p as u8)).collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(_, p)| p as u32).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(VarId, u8)] {
        &self.terms
    }

    pub fn power_of(&self, v: VarId) -> u8 {
        self.terms
            .iter()
            .find(|&&(w, _)| w == v)
            .map_or(0, |&(_, p)| p)
    }

    /// Product of two monomials.
    pub fn mul(&self, other: &Exponent) -> Exponent {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (va, pa) = self.terms[i];
            let (vb, pb) = other.terms[j];
            match va.cmp(&vb) {
                Ordering::Less => {
                    terms.push((va, pa));
                    i += 1;
                }
                Ordering::Greater => {
                    terms.push((vb, pb));
                    j += 1;
                }
                Ordering::Equal => {
                    terms.push((va, pa + pb));
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&other.terms[j..]);
        Exponent { terms }
    }

    /// Whether every variable with nonzero power lies in `vars` (sorted).
    pub fn supported_on(&self, vars: &[VarId]) -> bool {
        self.terms.iter().all(|&(v, _)| vars.binary_search(&v).is_ok())
    }

    /// Numeric value on a rectangular voltage vector.
    pub fn eval(&self, space: &VarSpace, vd: &[f64], vq: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(v, p)| space.value(v, vd, vq).powi(p as i32))
            .product()
    }

    pub fn label(&self, space: &VarSpace) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        self.terms
            .iter()
            .map(|&(v, p)| {
                if p == 1 {
                    space.label(v)
                } else {
                    format!("{}^{}", space.label(v), p)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "1");
        }
        for (i, (v, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{v:?}^{p}")?;
        }
        Ok(())
    }
}

/// Graded lexicographic order: lower total degree first; within a degree the
/// monomial with the higher power on the earliest differing variable comes
/// first, matching the conventional printed basis ordering
/// (1, x1, x2, ..., x1^2, x1 x2, ...).
impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.terms.get(i), other.terms.get(j)) {
                (None, None) => return Ordering::Equal,
                // Exhausted side has power zero on the other's next variable,
                // so the other side orders first.
                (None, Some(_)) => return Ordering::Greater,
                (Some(_), None) => return Ordering::Less,
                (Some(&(va, pa)), Some(&(vb, pb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => match pa.cmp(&pb) {
                        Ordering::Less => return Ordering::Greater,
                        Ordering::Greater => return Ordering::Less,
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                    },
                },
            }
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials over `vars` with total degree exactly `degree`, in graded-lex
/// order.
pub fn basis_exact(vars: &[VarId], degree: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut stack: Vec<(VarId, u8)> = Vec::new();
    fn rec(vars: &[VarId], rem: u32, stack: &mut Vec<(VarId, u8)>, out: &mut Vec<Exponent>) {
        if rem == 0 {
            out.push(Exponent { terms: stack.clone() });
            return;
        }
        if vars.is_empty() {
            return;
        }
        // Highest power on the earliest variable first (descending lex).
        let v = vars[0];
        for p in (0..=rem.min(u8::MAX as u32)).rev() {
            if p > 0 {
                stack.push((v, p as u8));
            }
            rec(&vars[1..], rem - p, stack, out);
            if p > 0 {
                stack.pop();
            }
        }
    }
    rec(vars, degree, &mut stack, &mut out);
    out
}

/// All monomials over `vars` with total degree `<= order`, graded-lex ordered,
/// beginning with the constant monomial.
pub fn basis(vars: &[VarId], order: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for d in 0..=order {
        out.extend(basis_exact(vars, d));
    }
    out
}

/// Number of monomials of degree `<= order` in `n_vars` variables,
/// `C(n_vars + order, order)`.
pub fn basis_len(n_vars: usize, order: u32) -> usize {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..=order as u128 {
        num *= n_vars as u128 + i;
        den *= i;
    }
    (num / den) as usize
}

/// A sparse multivariate polynomial with real coefficients.
#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Exponent, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Exponent::one(), c);
        p
    }

    pub fn var(v: VarId) -> Self {
        let mut p = Self::zero();
        p.add_term(Exponent::var(v), 1.0);
        p
    }

    pub fn add_term(&mut self, e: Exponent, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().abs() < COEFF_TOL {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c.abs() >= COEFF_TOL {
                    v.insert(c);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Exponent::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, e: &Exponent) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Exponent::one())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e.clone(), c);
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero();
        }
        let mut out = Polynomial::zero();
        for (e, c) in self.terms() {
            out.add_term(e.clone(), c * s);
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                out.add_term(ea.mul(eb), ca * cb);
            }
        }
        out.prune();
        out
    }

    /// Multiply by a single monomial.
    pub fn mul_monomial(&self, e: &Exponent) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ea, c) in self.terms() {
            out.add_term(ea.mul(e), c);
        }
        out
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= COEFF_TOL);
    }

    /// The set of variables with nonzero power in some term.
    pub fn support(&self) -> Vec<VarId> {
        let mut vars: Vec<VarId> = self
            .terms
            .keys()
            .flat_map(|e| e.terms().iter().map(|&(v, _)| v))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn eval(&self, space: &VarSpace, vd: &[f64], vq: &[f64]) -> f64 {
        self.terms()
            .map(|(e, c)| c * e.eval(space, vd, vq))
            .sum()
    }

    /// Drop every term involving `v` (substitutes `v = 0`).
    pub fn substitute_zero(&self, v: VarId) -> Polynomial {
        let mut out = Polynomial::zero();
        for (e, c) in self.terms() {
            if e.power_of(v) == 0 {
                out.add_term(e.clone(), c);
            }
        }
        out
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{e:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MomentError {
    /// A polynomial referenced a monomial that was never instantiated by any
    /// moment block -- a clique or order bookkeeping bug upstream.
    #[error("unknown monomial {0} (not instantiated by any moment block)")]
    UnknownMonomial(String),
}

/// Bijection between instantiated monomials and dense moment-variable
/// indices. The all-zeros exponent is never stored: it is the constant 1.
#[derive(Debug, Clone, Default)]
pub struct MomentIndexMap {
    by_exp: HashMap<Exponent, u32>,
    exps: Vec<Exponent>,
}

impl MomentIndexMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Register a monomial, returning its variable index. The constant
    /// monomial is rejected -- it is y_{00...0} = 1, never a variable.
    pub fn register(&mut self, e: &Exponent) -> u32 {
        assert!(!e.is_constant(), "the constant monomial is not a moment variable");
        if let Some(&i) = self.by_exp.get(e) {
            return i;
        }
        let i = self.exps.len() as u32;
        self.by_exp.insert(e.clone(), i);
        self.exps.push(e.clone());
        i
    }

    pub fn get(&self, e: &Exponent) -> Option<u32> {
        self.by_exp.get(e).copied()
    }

    pub fn exponent(&self, idx: u32) -> &Exponent {
        &self.exps[idx as usize]
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }
}

/// A linear expression `constant + sum coeff * y_idx` over moment variables
/// (and, downstream, auxiliary scalars sharing the same index space).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub constant: f64,
    /// Sorted by variable index; no zero coefficients.
    pub terms: Vec<(u32, f64)>,
}

impl LinearExpr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn variable(idx: u32) -> Self {
        Self { constant: 0.0, terms: vec![(idx, 1.0)] }
    }

    pub fn from_map(constant: f64, map: BTreeMap<u32, f64>) -> Self {
        Self {
            constant,
            terms: map.into_iter().filter(|(_, c)| c.abs() >= COEFF_TOL).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(i, c)| c * x[i as usize])
                .sum::<f64>()
    }

    pub fn add(&self, other: &LinearExpr) -> LinearExpr {
        let mut map: BTreeMap<u32, f64> = self.terms.iter().copied().collect();
        for &(i, c) in &other.terms {
            *map.entry(i).or_insert(0.0) += c;
        }
        LinearExpr::from_map(self.constant + other.constant, map)
    }

    pub fn scale(&self, s: f64) -> LinearExpr {
        LinearExpr {
            constant: self.constant * s,
            terms: self
                .terms
                .iter()
                .map(|&(i, c)| (i, c * s))
                .filter(|(_, c)| c.abs() >= COEFF_TOL)
                .collect(),
        }
    }
}

/// Apply the linear functional: replace each monomial of `p` with its moment
/// variable. The constant monomial contributes to the constant term through
/// y_{00...0} = 1. With `auto_register` disabled, unknown monomials are an
/// error.
pub fn apply_l(
    p: &Polynomial,
    map: &mut MomentIndexMap,
    space: &VarSpace,
    auto_register: bool,
) -> Result<LinearExpr, MomentError> {
    let mut constant = 0.0;
    let mut terms: BTreeMap<u32, f64> = BTreeMap::new();
    for (e, c) in p.terms() {
        if e.is_constant() {
            constant += c;
            continue;
        }
        let idx = if auto_register {
            map.register(e)
        } else {
            map.get(e)
                .ok_or_else(|| MomentError::UnknownMonomial(e.label(space)))?
        };
        *terms.entry(idx).or_insert(0.0) += c;
    }
    Ok(LinearExpr::from_map(constant, terms))
}

/// Read-only variant of [`apply_l`]: every monomial must already be
/// registered.
pub fn apply_l_ro(
    p: &Polynomial,
    map: &MomentIndexMap,
    space: &VarSpace,
) -> Result<LinearExpr, MomentError> {
    let mut constant = 0.0;
    let mut terms: BTreeMap<u32, f64> = BTreeMap::new();
    for (e, c) in p.terms() {
        if e.is_constant() {
            constant += c;
            continue;
        }
        let idx = map
            .get(e)
            .ok_or_else(|| MomentError::UnknownMonomial(e.label(space)))?;
        *terms.entry(idx).or_insert(0.0) += c;
    }
    Ok(LinearExpr::from_map(constant, terms))
}

/// A symmetric matrix of polynomials, stored as the packed upper triangle.
#[derive(Debug, Clone)]
pub struct SymPolyMatrix {
    dim: usize,
    /// Column-major upper triangle: entry (i, j), i <= j, at j*(j+1)/2 + i.
    entries: Vec<Polynomial>,
}

impl SymPolyMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[j * (j + 1) / 2 + i]
    }

    pub fn upper_triangle(&self) -> &[Polynomial] {
        &self.entries
    }
}

/// Form the symmetric matrix `weight * b b^T` symbolically. With `weight = 1`
/// and `apply_l` this realizes moment matrices; with `weight = f - a` it
/// realizes localizing matrices.
pub fn symbolic_outer(b: &[Exponent], weight: &Polynomial) -> SymPolyMatrix {
    let dim = b.len();
    let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
    for j in 0..dim {
        for i in 0..=j {
            let prod = b[i].mul(&b[j]);
            entries.push(weight.mul_monomial(&prod));
        }
    }
    SymPolyMatrix { dim, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space3() -> VarSpace {
        // two-bus system with Vq1 eliminated: vars Vd1, Vd2, Vq2
        VarSpace::new(2, 0, true)
    }

    #[test]
    fn grlex_order_matches_printed_basis() {
        let sp = space3();
        let vars = sp.all_vars();
        assert_eq!(vars.len(), 3);
        let b = basis(&vars, 2);
        let labels: Vec<String> = b.iter().map(|e| e.label(&sp)).collect();
        assert_eq!(
            labels,
            vec![
                "1", "Vd1", "Vd2", "Vq2", "Vd1^2", "Vd1*Vd2", "Vd1*Vq2", "Vd2^2", "Vd2*Vq2",
                "Vq2^2"
            ]
        );
    }

    #[test]
    fn basis_order_zero_is_constant() {
        let sp = space3();
        let b = basis(&sp.all_vars(), 0);
        assert_eq!(b.len(), 1);
        assert!(b[0].is_constant());
    }

    #[test]
    fn basis_len_closed_form() {
        // 2n = 20 variables: sizes 21, 231, 1771 at orders 1, 2, 3
        let sp = VarSpace::new(10, 0, false);
        let vars = sp.all_vars();
        for (order, expect) in [(1u32, 21usize), (2, 231), (3, 1771)] {
            assert_eq!(basis(&vars, order).len(), expect);
            assert_eq!(basis_len(20, order), expect);
        }
        for nv in 1..=20usize {
            for order in 0..=3u32 {
                let vars: Vec<VarId> = (0..nv as u32).map(VarId).collect();
                assert_eq!(basis(&vars, order).len(), basis_len(nv, order));
            }
        }
    }

    #[test]
    fn monomial_product_and_annihilator() {
        let sp = space3();
        let vd1 = Polynomial::var(sp.vd(0));
        let sq = vd1.mul(&vd1);
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.coeff(&Exponent::from_pairs(&[(sp.vd(0), 2)])), 1.0);
        assert!(vd1.mul(&Polynomial::zero()).is_zero());
    }

    #[test]
    fn square_of_voltage_magnitude_expands() {
        let sp = space3();
        let fv2 = Polynomial::var(sp.vd(1))
            .mul(&Polynomial::var(sp.vd(1)))
            .add(&Polynomial::var(sp.vq(1)).mul(&Polynomial::var(sp.vq(1))));
        let sq = fv2.mul(&fv2);
        assert_eq!(sq.num_terms(), 3);
        assert_eq!(sq.degree(), 4);
        let cross = Exponent::from_pairs(&[(sp.vd(1), 2), (sp.vq(1), 2)]);
        assert_eq!(sq.coeff(&cross), 2.0);
    }

    #[test]
    fn apply_l_printed_example() {
        // g = -(0.95)^2 + Vd2^2 + Vq2^2  ->  -(0.95)^2 + y_020 + y_002
        let sp = space3();
        let mut g = Polynomial::constant(-(0.95f64 * 0.95));
        g.add_term(Exponent::from_pairs(&[(sp.vd(1), 2)]), 1.0);
        g.add_term(Exponent::from_pairs(&[(sp.vq(1), 2)]), 1.0);
        let mut map = MomentIndexMap::new();
        let le = apply_l(&g, &mut map, &sp, true).unwrap();
        assert_eq!(le.constant, -(0.95f64 * 0.95));
        assert_eq!(le.terms.len(), 2);
        assert!(le.terms.iter().all(|&(_, c)| c == 1.0));
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn apply_l_constant_polynomial() {
        let sp = space3();
        let mut map = MomentIndexMap::new();
        let le = apply_l(&Polynomial::constant(5.0), &mut map, &sp, false).unwrap();
        assert_eq!(le.constant, 5.0);
        assert!(le.is_constant());
    }

    #[test]
    fn apply_l_unknown_monomial_errors() {
        let sp = space3();
        let mut map = MomentIndexMap::new();
        let p = Polynomial::var(sp.vd(0));
        assert!(apply_l(&p, &mut map, &sp, false).is_err());
    }

    #[test]
    fn apply_l_is_linear_and_matches_pointwise_eval() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sp = VarSpace::new(3, 0, true);
        let vars = sp.all_vars();
        for _ in 0..50 {
            let mut p = Polynomial::zero();
            let mut q = Polynomial::zero();
            for _ in 0..6 {
                let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                    let d = rng.gen_range(0..=4u32);
                    let pairs: Vec<(VarId, u8)> = (0..d)
                        .map(|_| (vars[rng.gen_range(0..vars.len())], 1))
                        .collect();
                    Exponent::from_pairs(&pairs)
                };
                p.add_term(mk(&mut rng), rng.gen_range(-2.0..2.0));
                q.add_term(mk(&mut rng), rng.gen_range(-2.0..2.0));
            }
            let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let comb = p.scale(a).add(&q.scale(b));

            let mut map = MomentIndexMap::new();
            let lp = apply_l(&p, &mut map, &sp, true).unwrap();
            let lq = apply_l(&q, &mut map, &sp, true).unwrap();
            let lcomb = apply_l(&comb, &mut map, &sp, true).unwrap();
            let want = lp.scale(a).add(&lq.scale(b));
            assert!((lcomb.constant - want.constant).abs() < 1e-12);

            // lifted point: y_alpha = x^alpha for a concrete voltage vector
            let vd: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut vq: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            vq[0] = 0.0;
            let y: Vec<f64> = map
                .exponents()
                .iter()
                .map(|e| e.eval(&sp, &vd, &vq))
                .collect();
            let direct = p.eval(&sp, &vd, &vq);
            let lifted = lp.eval(&y);
            let scale = direct.abs().max(1.0);
            assert!(
                (direct - lifted).abs() <= 1e-12 * scale,
                "L_y disagrees with pointwise evaluation"
            );
        }
    }

    #[test]
    fn symbolic_outer_is_symmetric_and_trivial_case() {
        let sp = space3();
        let one = vec![Exponent::one()];
        let m = symbolic_outer(&one, &Polynomial::constant(1.0));
        assert_eq!(m.dim(), 1);
        assert_eq!(m.entry(0, 0).constant_term(), 1.0);

        let b = basis(&sp.all_vars(), 2);
        let mut w = Polynomial::constant(-0.9025);
        w.add_term(Exponent::from_pairs(&[(sp.vd(1), 2)]), 1.0);
        w.add_term(Exponent::from_pairs(&[(sp.vq(1), 2)]), 1.0);
        let m = symbolic_outer(&b, &w);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                assert_eq!(m.entry(i, j), m.entry(j, i));
            }
        }
    }

    #[test]
    fn moment_matrix_pattern_matches_printed_example() {
        // Second-order moment matrix of the two-bus system: spot-check entries
        // against the printed 10x10 pattern.
        let sp = space3();
        let b = basis(&sp.all_vars(), 2);
        let m = symbolic_outer(&b, &Polynomial::constant(1.0));
        let exp = |pairs: &[(VarId, u8)]| Exponent::from_pairs(pairs);
        let (vd1, vd2, vq2) = (sp.vd(0), sp.vd(1), sp.vq(1));
        // row 1 (basis Vd1) x col 4 (basis Vd1^2) = y_300
        assert_eq!(m.entry(1, 4).coeff(&exp(&[(vd1, 3)])), 1.0);
        // (0,0) = y_000
        assert_eq!(m.entry(0, 0).constant_term(), 1.0);
        // (2,3) = Vd2*Vq2 -> y_011
        assert_eq!(m.entry(2, 3).coeff(&exp(&[(vd2, 1), (vq2, 1)])), 1.0);
        // (9,9) = Vq2^2*Vq2^2 -> y_004
        assert_eq!(m.entry(9, 9).coeff(&exp(&[(vq2, 4)])), 1.0);
        // (4,7) = Vd1^2 * Vd2^2 -> y_220
        assert_eq!(m.entry(4, 7).coeff(&exp(&[(vd1, 2), (vd2, 2)])), 1.0);
    }

    #[test]
    fn localizing_matrix_matches_printed_example() {
        // M_1{(f_V2 - 0.95^2) y} of the two-bus system, printed 4x4.
        let sp = space3();
        let (vd1, vd2, vq2) = (sp.vd(0), sp.vd(1), sp.vq(1));
        let mut w = Polynomial::zero();
        w.add_term(Exponent::from_pairs(&[(vd2, 2)]), 1.0);
        w.add_term(Exponent::from_pairs(&[(vq2, 2)]), 1.0);
        w.add_term(Exponent::one(), -(0.95f64 * 0.95));
        let b = basis(&sp.all_vars(), 1);
        let m = symbolic_outer(&b, &w);
        assert_eq!(m.dim(), 4);
        let e = |pairs: &[(VarId, u8)]| Exponent::from_pairs(pairs);
        // (0,0) = y_020 + y_002 - 0.95^2 y_000
        let m00 = m.entry(0, 0);
        assert_eq!(m00.coeff(&e(&[(vd2, 2)])), 1.0);
        assert_eq!(m00.coeff(&e(&[(vq2, 2)])), 1.0);
        assert_eq!(m00.constant_term(), -(0.95f64 * 0.95));
        // (1,1) = y_220 + y_202 - 0.95^2 y_200
        let m11 = m.entry(1, 1);
        assert_eq!(m11.coeff(&e(&[(vd1, 2), (vd2, 2)])), 1.0);
        assert_eq!(m11.coeff(&e(&[(vd1, 2), (vq2, 2)])), 1.0);
        assert_eq!(m11.coeff(&e(&[(vd1, 2)])), -(0.95f64 * 0.95));
        // (2,3) = y_031 + y_013 - 0.95^2 y_011
        let m23 = m.entry(2, 3);
        assert_eq!(m23.coeff(&e(&[(vd2, 3), (vq2, 1)])), 1.0);
        assert_eq!(m23.coeff(&e(&[(vd2, 1), (vq2, 3)])), 1.0);
        assert_eq!(m23.coeff(&e(&[(vd2, 1), (vq2, 1)])), -(0.95f64 * 0.95));
    }
}
