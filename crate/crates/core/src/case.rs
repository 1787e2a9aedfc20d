//! Power-system case model: parsing, validation, per-unit normalization,
//! case modifiers, and the bus admittance matrix.
//!
//! Two input formats map onto the same [`NetworkCase`]: the de facto text
//! format of the public test-case archives (`baseMVA`/`bus`/`gen`/`branch`/
//! `gencost` tables) and a native JSON schema. Quantities are stored in the
//! units of the archive format (MW, MVAr, p.u. impedances) and converted to
//! per unit on `base_mva` where the model is consumed.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum branch resistance enforced on all branches, in per unit.
pub const MIN_BRANCH_RESISTANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("inconsistent override: {0}")]
    InconsistentOverride(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External bus number as it appears in the case file.
    pub id: usize,
    pub bus_type: BusType,
    /// Active load demand, MW.
    pub pd: f64,
    /// Reactive load demand, MVAr.
    pub qd: f64,
    /// Shunt conductance, MW consumed at V = 1 p.u.
    pub gs: f64,
    /// Shunt susceptance, MVAr injected at V = 1 p.u.
    pub bs: f64,
    /// Voltage magnitude bounds, p.u.
    pub vmin: f64,
    pub vmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// External bus number.
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    /// Quadratic cost coefficients: cost = c2*P^2 + c1*P + c0 with P in MW,
    /// cost in $/h.
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// External bus numbers.
    pub from: usize,
    pub to: usize,
    /// Series resistance/reactance, p.u.
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, p.u.
    #[serde(default)]
    pub b_sh: f64,
    /// Total shunt conductance, p.u. (generally absent in archive data).
    #[serde(default)]
    pub g_sh: f64,
    /// Turns ratio; 0 means no transformer (ratio 1).
    #[serde(default)]
    pub tau: f64,
    /// Phase shift, radians.
    #[serde(default)]
    pub theta: f64,
    /// Apparent-power flow limit, MVA; 0 means unlimited.
    #[serde(default)]
    pub s_max: f64,
}

impl Branch {
    /// Effective turns ratio (archive convention: 0 encodes 1.0).
    pub fn ratio(&self) -> f64 {
        if self.tau == 0.0 {
            1.0
        } else {
            self.tau
        }
    }

    pub fn limit(&self) -> Option<f64> {
        if self.s_max > 0.0 {
            Some(self.s_max)
        } else {
            None
        }
    }
}

/// A validated OPF instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
}

impl NetworkCase {
    pub fn n(&self) -> usize {
        self.buses.len()
    }

    /// Map external bus id -> internal index.
    pub fn bus_index(&self) -> HashMap<usize, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect()
    }

    /// Internal index of the slack bus.
    pub fn slack(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.bus_type == BusType::Slack)
            .expect("validated case has a slack bus")
    }

    /// Generator at internal bus index, if any (post-validation there is at
    /// most one per bus).
    pub fn generator_at(&self, bus: usize) -> Option<&Generator> {
        let id = self.buses[bus].id;
        self.generators.iter().find(|g| g.bus == id)
    }

    /// Internal bus indices that carry a generator, ascending.
    pub fn generator_buses(&self) -> Vec<usize> {
        let index = self.bus_index();
        let mut v: Vec<usize> = self.generators.iter().map(|g| index[&g.bus]).collect();
        v.sort_unstable();
        v
    }

    /// Active/reactive generation bounds of an internal bus in per unit.
    /// Buses without generators carry implicit limits of zero.
    pub fn p_bounds_pu(&self, bus: usize) -> (f64, f64) {
        match self.generator_at(bus) {
            Some(g) => (g.pmin / self.base_mva, g.pmax / self.base_mva),
            None => (0.0, 0.0),
        }
    }

    pub fn q_bounds_pu(&self, bus: usize) -> (f64, f64) {
        match self.generator_at(bus) {
            Some(g) => (g.qmin / self.base_mva, g.qmax / self.base_mva),
            None => (0.0, 0.0),
        }
    }

    /// Validate all invariants and normalize (minimum resistance, tau = 0 as
    /// 1.0 kept as stored, generator aggregation). Returns the normalized
    /// case.
    pub fn validated(mut self) -> Result<NetworkCase, CaseError> {
        if self.base_mva <= 0.0 {
            return Err(CaseError::Validation("base MVA must be positive".into()));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(CaseError::Validation(format!("duplicate bus id {}", b.id)));
            }
            if b.vmin > b.vmax {
                return Err(CaseError::Validation(format!(
                    "bus {}: V_min {} > V_max {}",
                    b.id, b.vmin, b.vmax
                )));
            }
            if b.vmin < 0.0 {
                return Err(CaseError::Validation(format!("bus {}: negative V_min", b.id)));
            }
        }
        let n_slack = self
            .buses
            .iter()
            .filter(|b| b.bus_type == BusType::Slack)
            .count();
        if n_slack != 1 {
            return Err(CaseError::Validation(format!(
                "expected exactly one slack bus, found {n_slack}"
            )));
        }
        let index = self.bus_index();
        for g in &self.generators {
            if !index.contains_key(&g.bus) {
                return Err(CaseError::Validation(format!(
                    "generator references unknown bus {}",
                    g.bus
                )));
            }
            if g.pmin > g.pmax || g.qmin > g.qmax {
                return Err(CaseError::Validation(format!(
                    "generator at bus {}: inverted limits",
                    g.bus
                )));
            }
            if g.c2 < 0.0 {
                return Err(CaseError::Validation(format!(
                    "generator at bus {}: negative quadratic cost coefficient",
                    g.bus
                )));
            }
        }
        for br in &self.branches {
            if !index.contains_key(&br.from) || !index.contains_key(&br.to) {
                return Err(CaseError::Validation(format!(
                    "branch {}-{} references unknown bus",
                    br.from, br.to
                )));
            }
            if br.from == br.to {
                return Err(CaseError::Validation(format!(
                    "branch {}-{} is a self-loop",
                    br.from, br.to
                )));
            }
            if br.r < 0.0 {
                return Err(CaseError::Validation(format!(
                    "branch {}-{} has negative resistance",
                    br.from, br.to
                )));
            }
        }

        // Minimum resistance; never decreases any branch resistance.
        for br in &mut self.branches {
            br.r = br.r.max(MIN_BRANCH_RESISTANCE);
        }

        self.aggregate_generators();
        self.check_connected()?;
        Ok(self)
    }

    /// Multiple generators at one bus collapse into one equivalent machine:
    /// limits and constant costs sum; under an equal-dispatch assumption the
    /// aggregate of m quadratics is c2' = sum(c2_i)/m^2, c1' = sum(c1_i)/m.
    fn aggregate_generators(&mut self) {
        let mut by_bus: HashMap<usize, Vec<Generator>> = HashMap::new();
        let mut order: Vec<usize> = Vec::new();
        for g in self.generators.drain(..) {
            if !by_bus.contains_key(&g.bus) {
                order.push(g.bus);
            }
            by_bus.entry(g.bus).or_default().push(g);
        }
        for bus in order {
            let gens = by_bus.remove(&bus).unwrap();
            if gens.len() == 1 {
                self.generators.push(gens.into_iter().next().unwrap());
                continue;
            }
            log::warn!(
                "aggregating {} generators at bus {} into one equivalent machine",
                gens.len(),
                bus
            );
            let m = gens.len() as f64;
            let agg = Generator {
                bus,
                pmin: gens.iter().map(|g| g.pmin).sum(),
                pmax: gens.iter().map(|g| g.pmax).sum(),
                qmin: gens.iter().map(|g| g.qmin).sum(),
                qmax: gens.iter().map(|g| g.qmax).sum(),
                c2: gens.iter().map(|g| g.c2).sum::<f64>() / (m * m),
                c1: gens.iter().map(|g| g.c1).sum::<f64>() / m,
                c0: gens.iter().map(|g| g.c0).sum(),
            };
            self.generators.push(agg);
        }
    }

    fn check_connected(&self) -> Result<(), CaseError> {
        let n = self.n();
        if n == 0 {
            return Err(CaseError::Validation("case has no buses".into()));
        }
        let index = self.bus_index();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (index[&br.from], index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for &j in &adj[k] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().all(|&s| s) || n == 1 {
            Ok(())
        } else {
            Err(CaseError::Validation(
                "network is not connected (multi-island input is rejected)".into(),
            ))
        }
    }

    /// Normalized JSON echo for debugging / round-trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serializes")
    }
}

/// Case modifiers used to construct test fixtures from base archive data.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CaseMods {
    /// Scale all active and reactive loads by this fraction.
    pub load_scale: Option<f64>,
    /// Lower every generator's reactive minimum to at most this value (MVAr).
    pub qmin_floor: Option<f64>,
    /// Apply this apparent-power limit (MVA) to every branch.
    pub uniform_flow_limit: Option<f64>,
    /// Scale existing branch flow limits by this fraction.
    pub flow_limit_scale: Option<f64>,
    /// Override all bus voltage bounds, p.u.
    pub vmin: Option<f64>,
    pub vmax: Option<f64>,
}

impl CaseMods {
    pub fn is_empty(&self) -> bool {
        self.load_scale.is_none()
            && self.qmin_floor.is_none()
            && self.uniform_flow_limit.is_none()
            && self.flow_limit_scale.is_none()
            && self.vmin.is_none()
            && self.vmax.is_none()
    }
}

/// Apply modifiers, returning a new validated case.
pub fn apply_modifiers(case: &NetworkCase, mods: &CaseMods) -> Result<NetworkCase, CaseError> {
    for (name, v) in [
        ("load_scale", mods.load_scale),
        ("uniform_flow_limit", mods.uniform_flow_limit),
        ("flow_limit_scale", mods.flow_limit_scale),
    ] {
        if let Some(v) = v {
            if v <= 0.0 {
                return Err(CaseError::InconsistentOverride(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (mods.vmin, mods.vmax) {
        if lo > hi {
            return Err(CaseError::InconsistentOverride(format!(
                "vmin override {lo} > vmax override {hi}"
            )));
        }
    }
    let mut out = case.clone();
    if let Some(s) = mods.load_scale {
        for b in &mut out.buses {
            b.pd *= s;
            b.qd *= s;
        }
    }
    if let Some(q) = mods.qmin_floor {
        for g in &mut out.generators {
            g.qmin = g.qmin.min(q);
        }
    }
    if let Some(s) = mods.uniform_flow_limit {
        for br in &mut out.branches {
            br.s_max = s;
        }
    }
    if let Some(s) = mods.flow_limit_scale {
        for br in &mut out.branches {
            if br.s_max > 0.0 {
                br.s_max *= s;
            }
        }
    }
    if let Some(v) = mods.vmin {
        for b in &mut out.buses {
            b.vmin = v;
        }
    }
    if let Some(v) = mods.vmax {
        for b in &mut out.buses {
            b.vmax = v;
        }
    }
    out.validated()
}

/// Bus admittance matrix Y = G + jB in per unit, dense storage with a
/// symmetric sparsity pattern (values asymmetric under phase shift).
#[derive(Debug, Clone)]
pub struct AdmittanceMatrix {
    pub n: usize,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl AdmittanceMatrix {
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.n + j]
    }

    pub fn y(&self, i: usize, j: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.g(i, j), self.b(i, j))
    }

    /// Indices j with a structurally nonzero (i, j) entry.
    pub fn row_pattern(&self, i: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| self.g(i, j) != 0.0 || self.b(i, j) != 0.0)
            .collect()
    }
}

/// Assemble Y from branch Pi-models behind ideal transformers 1 : tau e^{j
/// theta} on the `from` side, plus bus shunts on the diagonal.
pub fn build_admittance(case: &NetworkCase) -> AdmittanceMatrix {
    let n = case.n();
    let index = case.bus_index();
    let mut g = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    let mut add = |i: usize, j: usize, y: num_complex::Complex64| {
        g[i * n + j] += y.re;
        b[i * n + j] += y.im;
    };
    for br in &case.branches {
        let (f, t) = (index[&br.from], index[&br.to]);
        let ys = 1.0 / num_complex::Complex64::new(br.r, br.x);
        let ysh = num_complex::Complex64::new(br.g_sh, br.b_sh) / 2.0;
        let tau = br.ratio();
        let tap = num_complex::Complex64::from_polar(tau, br.theta);
        add(f, f, (ys + ysh) / (tau * tau));
        add(f, t, -ys / tap.conj());
        add(t, f, -ys / tap);
        add(t, t, ys + ysh);
    }
    for (k, bus) in case.buses.iter().enumerate() {
        add(
            k,
            k,
            num_complex::Complex64::new(bus.gs / case.base_mva, bus.bs / case.base_mva),
        );
    }
    AdmittanceMatrix { n, g, b }
}

// ---------------------------------------------------------------------------
// Archive text format
// ---------------------------------------------------------------------------

/// Parse a case in archive text format or in the native JSON schema
/// (detected by a leading '{').
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    if text.trim_start().starts_with('{') {
        let case: NetworkCase = serde_json::from_str(text)?;
        return case.validated();
    }
    parse_archive(text)
}

fn parse_archive(text: &str) -> Result<NetworkCase, CaseError> {
    let mut name = String::from("case");
    let mut base_mva: Option<f64> = None;
    let mut tables: HashMap<String, (usize, Vec<(usize, Vec<f64>)>)> = HashMap::new();

    let mut lines = text.lines().enumerate().peekable();
    while let Some((lno, raw)) = lines.next() {
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        if let Some(v) = capture_assign(&line, "baseMVA") {
            base_mva = Some(v.trim_end_matches(';').trim().parse().map_err(|_| {
                CaseError::Parse { line: lno + 1, msg: format!("bad baseMVA value '{v}'") }
            })?);
            continue;
        }
        for key in ["bus", "gencost", "gen", "branch"] {
            let field = format!("mpc.{key}");
            if let Some(rest) = line.strip_prefix(&field) {
                let rest = rest.trim_start();
                if !rest.starts_with('=') {
                    continue;
                }
                let mut rows = Vec::new();
                let mut buf = rest[1..].trim_start().to_string();
                let mut cur_line = lno;
                if let Some(stripped) = buf.strip_prefix('[') {
                    buf = stripped.to_string();
                }
                loop {
                    let done = buf.contains(']');
                    let content = buf.split(']').next().unwrap_or("");
                    for row in content.split(';') {
                        let row = row.trim();
                        if row.is_empty() {
                            continue;
                        }
                        let vals: Result<Vec<f64>, _> =
                            row.split_whitespace().map(str::parse::<f64>).collect();
                        match vals {
                            Ok(v) if !v.is_empty() => rows.push((cur_line + 1, v)),
                            Ok(_) => {}
                            Err(_) => {
                                return Err(CaseError::Parse {
                                    line: cur_line + 1,
                                    msg: format!("bad numeric row in {field}: '{row}'"),
                                })
                            }
                        }
                    }
                    if done {
                        break;
                    }
                    match lines.next() {
                        Some((l, raw)) => {
                            cur_line = l;
                            buf = strip_comment(raw).trim().to_string();
                        }
                        None => {
                            return Err(CaseError::Parse {
                                line: cur_line + 1,
                                msg: format!("unterminated {field} table"),
                            })
                        }
                    }
                }
                tables.insert(key.to_string(), (lno + 1, rows));
                break;
            }
        }
    }

    let base_mva = base_mva.ok_or(CaseError::Parse { line: 0, msg: "missing baseMVA".into() })?;
    let (bus_line, bus_rows) = tables
        .remove("bus")
        .ok_or(CaseError::Parse { line: 0, msg: "missing bus table".into() })?;
    let (_, gen_rows) = tables
        .remove("gen")
        .ok_or(CaseError::Parse { line: 0, msg: "missing gen table".into() })?;
    let (_, branch_rows) = tables
        .remove("branch")
        .ok_or(CaseError::Parse { line: 0, msg: "missing branch table".into() })?;
    let gencost_rows = tables.remove("gencost").map(|(_, r)| r);

    let mut buses = Vec::new();
    for (lno, row) in &bus_rows {
        if row.len() < 13 {
            return Err(CaseError::Parse {
                line: *lno,
                msg: format!("bus row needs 13 columns, got {}", row.len()),
            });
        }
        buses.push(Bus {
            id: row[0] as usize,
            bus_type: match row[1] as i64 {
                3 => BusType::Slack,
                2 => BusType::Pv,
                1 => BusType::Pq,
                t => {
                    return Err(CaseError::Parse {
                        line: *lno,
                        msg: format!("unsupported bus type {t}"),
                    })
                }
            },
            pd: row[2],
            qd: row[3],
            gs: row[4],
            bs: row[5],
            vmax: row[11],
            vmin: row[12],
        });
    }
    let _ = bus_line;

    let mut generators = Vec::new();
    for (i, (lno, row)) in gen_rows.iter().enumerate() {
        if row.len() < 10 {
            return Err(CaseError::Parse {
                line: *lno,
                msg: format!("gen row needs 10 columns, got {}", row.len()),
            });
        }
        let (mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0);
        if let Some(costs) = &gencost_rows {
            let (clno, crow) = costs.get(i).ok_or(CaseError::Parse {
                line: *lno,
                msg: format!("gencost row missing for generator {}", i + 1),
            })?;
            match crow.first().map(|m| *m as i64) {
                Some(2) => {
                    let ncoef = crow.get(3).map(|n| *n as usize).unwrap_or(0);
                    if crow.len() < 4 + ncoef {
                        return Err(CaseError::Parse {
                            line: *clno,
                            msg: "short polynomial gencost row".into(),
                        });
                    }
                    let coefs = &crow[4..4 + ncoef];
                    match ncoef {
                        0 => {}
                        1 => c0 = coefs[0],
                        2 => {
                            c1 = coefs[0];
                            c0 = coefs[1];
                        }
                        3 => {
                            c2 = coefs[0];
                            c1 = coefs[1];
                            c0 = coefs[2];
                        }
                        _ => {
                            return Err(CaseError::Parse {
                                line: *clno,
                                msg: format!(
                                    "polynomial cost of order {} not supported (max quadratic)",
                                    ncoef - 1
                                ),
                            })
                        }
                    }
                }
                Some(1) => {
                    return Err(CaseError::Parse {
                        line: *clno,
                        msg: "piecewise-linear generator costs are not supported".into(),
                    })
                }
                other => {
                    return Err(CaseError::Parse {
                        line: *clno,
                        msg: format!("unsupported gencost model {other:?}"),
                    })
                }
            }
        }
        generators.push(Generator {
            bus: row[0] as usize,
            pmax: row[8],
            pmin: row[9],
            qmax: row[3],
            qmin: row[4],
            c2,
            c1,
            c0,
        });
    }

    let mut branches = Vec::new();
    for (lno, row) in &branch_rows {
        if row.len() < 11 {
            return Err(CaseError::Parse {
                line: *lno,
                msg: format!("branch row needs 11 columns, got {}", row.len()),
            });
        }
        if row[10] == 0.0 {
            continue; // out-of-service branch
        }
        branches.push(Branch {
            from: row[0] as usize,
            to: row[1] as usize,
            r: row[2],
            x: row[3],
            b_sh: row[4],
            g_sh: 0.0,
            tau: row[8],
            theta: row[9].to_radians(),
            s_max: row[5],
        });
    }

    NetworkCase { name, base_mva, buses, generators, branches }.validated()
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn capture_assign<'a>(line: &'a str, field: &str) -> Option<&'a str> {
    let key = format!("mpc.{field}");
    let rest = line.strip_prefix(&key)?.trim_start();
    rest.strip_prefix('=').map(str::trim)
}

/// Bundled fixture cases.
pub mod fixtures {
    /// Two-bus system matching the published worked example (see README for
    /// provenance).
    pub const TWOBUS: &str = include_str!("../cases/twobus.case");
    /// IEEE 14-bus system.
    pub const CASE14: &str = include_str!("../cases/case14.case");
    /// IEEE 30-bus system.
    pub const CASE30: &str = include_str!("../cases/case30.case");
    /// IEEE 57-bus system.
    pub const CASE57: &str = include_str!("../cases/case57.case");
    /// Synthetic three-bus triangle with two quadratic generators.
    pub const CASE3_TRIANGLE: &str = include_str!("../cases/case3a.json");
    /// Synthetic three-bus path with a binding flow limit.
    pub const CASE3_PATH: &str = include_str!("../cases/case3b.json");
    /// Two-bus system loaded beyond deliverability: OPF infeasible.
    pub const INFEASIBLE2: &str = include_str!("../cases/infeasible2.json");

    use super::{parse_case, NetworkCase};

    pub fn twobus() -> NetworkCase {
        parse_case(TWOBUS).expect("bundled twobus parses")
    }

    pub fn case14() -> NetworkCase {
        parse_case(CASE14).expect("bundled case14 parses")
    }

    pub fn case30() -> NetworkCase {
        parse_case(CASE30).expect("bundled case30 parses")
    }

    pub fn case57() -> NetworkCase {
        parse_case(CASE57).expect("bundled case57 parses")
    }

    pub fn case3_triangle() -> NetworkCase {
        parse_case(CASE3_TRIANGLE).expect("bundled case3a parses")
    }

    pub fn case3_path() -> NetworkCase {
        parse_case(CASE3_PATH).expect("bundled case3b parses")
    }

    pub fn infeasible2() -> NetworkCase {
        parse_case(INFEASIBLE2).expect("bundled infeasible2 parses")
    }

    /// IEEE 14-bus with all loads halved (the "Q"-style fixture).
    pub fn case14q() -> NetworkCase {
        super::apply_modifiers(
            &case14(),
            &super::CaseMods { load_scale: Some(0.5), ..Default::default() },
        )
        .expect("case14q builds")
    }

    /// IEEE 14-bus with 25 MVA flow limits on every line.
    pub fn case14l() -> NetworkCase {
        super::apply_modifiers(
            &case14(),
            &super::CaseMods { uniform_flow_limit: Some(25.0), ..Default::default() },
        )
        .expect("case14l builds")
    }
}
