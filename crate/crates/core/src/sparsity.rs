//! Chordal sparsity machinery for the decomposed relaxation.
//!
//! Pipeline: build the constraint graph (network edges plus completion of
//! every bus' neighborhood), chordally extend it along an approximate
//! minimum-degree elimination order, enumerate maximal cliques, build a
//! clique tree by maximum-weight spanning tree on separator sizes, assign
//! each bus the smallest maximal clique covering its closed neighborhood, and
//! optionally merge adjacent cliques that overlap almost entirely.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::case::NetworkCase;

#[derive(Debug, Error)]
pub enum SparsityError {
    #[error("network is not connected")]
    Disconnected,
    #[error("internal: extension is not chordal")]
    NotChordal,
    #[error("AMD ordering failed: {0}")]
    Amd(String),
}

/// Simple undirected graph on 0..n with set-based adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub n: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { n, adj: vec![BTreeSet::new(); n] }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for a in 0..self.n {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Maximum cardinality search followed by a perfect-elimination check.
    /// Returns a perfect elimination ordering when the graph is chordal.
    pub fn perfect_elimination_ordering(&self) -> Option<Vec<usize>> {
        let n = self.n;
        // MCS produces a reverse PEO for chordal graphs.
        let mut weight = vec![0usize; n];
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| !visited[v])
                .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
                .unwrap();
            visited[v] = true;
            order.push(v);
            for &w in &self.adj[v] {
                if !visited[w] {
                    weight[w] += 1;
                }
            }
        }
        order.reverse(); // elimination order: first eliminated first
        let mut pos = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        // Check: for each v, its higher-ordered neighbors form a clique with
        // the least of them adjacent to the rest.
        for (i, &v) in order.iter().enumerate() {
            let later: Vec<usize> = self.adj[v].iter().copied().filter(|&w| pos[w] > i).collect();
            if let Some(&u) = later.iter().min_by_key(|&&w| pos[w]) {
                for &w in &later {
                    if w != u && !self.has_edge(u, w) {
                        return None;
                    }
                }
            }
        }
        Some(order)
    }
}

/// Constraint graph: the network topology plus an edge between every pair of
/// neighbors of each bus, so each bus lies in a clique with its whole
/// neighborhood.
pub fn build_constraint_graph(case: &NetworkCase) -> Result<Graph, SparsityError> {
    let n = case.n();
    let index = case.bus_index();
    let mut g = Graph::new(n);
    for br in &case.branches {
        g.add_edge(index[&br.from], index[&br.to]);
    }
    if n > 1 && !g.is_connected() {
        return Err(SparsityError::Disconnected);
    }
    let base = g.clone();
    for k in 0..n {
        let nbrs: Vec<usize> = base.neighbors(k).iter().copied().collect();
        for i in 0..nbrs.len() {
            for j in i + 1..nbrs.len() {
                g.add_edge(nbrs[i], nbrs[j]);
            }
        }
    }
    Ok(g)
}

/// Chordal extension: symbolic factorization fill along an approximate
/// minimum-degree permutation of the pattern.
pub fn chordal_extension(g: &Graph) -> Result<Graph, SparsityError> {
    let order = amd_order(g)?;
    Ok(elimination_fill(g, &order))
}

/// AMD ordering on the graph pattern (plus implicit diagonal).
fn amd_order(g: &Graph) -> Result<Vec<usize>, SparsityError> {
    let n = g.n;
    if n <= 2 {
        return Ok((0..n).collect());
    }
    // CSC pattern of the adjacency (off-diagonal only, as AMD expects).
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::new();
    ap.push(0i32);
    for col in 0..n {
        for &row in g.neighbors(col) {
            ai.push(row as i32);
        }
        ap.push(ai.len() as i32);
    }
    let control = amd::Control::default();
    let (p, _pinv, _info) = amd::order::<i32>(n as i32, &ap, &ai, &control)
        .map_err(|s| SparsityError::Amd(format!("{s:?}")))?;
    Ok(p.into_iter().map(|v| v as usize).collect())
}

/// The elimination game: process vertices in `order`, connecting the not yet
/// eliminated neighbors of each vertex. The result is chordal with `order`
/// as a perfect elimination ordering.
fn elimination_fill(g: &Graph, order: &[usize]) -> Graph {
    let n = g.n;
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut work = g.clone();
    let mut out = g.clone();
    for &v in order {
        let later: Vec<usize> = work.neighbors(v)
            .iter()
            .copied()
            .filter(|&w| pos[w] > pos[v])
            .collect();
        for i in 0..later.len() {
            for j in i + 1..later.len() {
                work.add_edge(later[i], later[j]);
                out.add_edge(later[i], later[j]);
            }
        }
    }
    out
}

/// Maximal cliques of a chordal graph via its elimination ordering, as sorted
/// bus lists with any clique contained in another removed.
pub fn maximal_cliques(chordal: &Graph) -> Result<Vec<Vec<usize>>, SparsityError> {
    let order = chordal
        .perfect_elimination_ordering()
        .ok_or(SparsityError::NotChordal)?;
    let mut pos = vec![0usize; chordal.n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
    for &v in &order {
        let mut c: BTreeSet<usize> = chordal.neighbors(v)
            .iter()
            .copied()
            .filter(|&w| pos[w] > pos[v])
            .collect();
        c.insert(v);
        candidates.push(c);
    }
    // Drop subsets (including duplicates).
    let mut keep = vec![true; candidates.len()];
    for i in 0..candidates.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..candidates.len() {
            if i != j && keep[i] && keep[j] && candidates[i].is_subset(&candidates[j]) {
                if candidates[i].len() == candidates[j].len() && i < j {
                    keep[j] = false;
                } else {
                    keep[i] = false;
                }
            }
        }
    }
    let mut cliques: Vec<Vec<usize>> = candidates
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(c, _)| c.into_iter().collect())
        .collect();
    cliques.sort();
    Ok(cliques)
}

/// Clique tree by maximum-weight spanning tree on pairwise separator sizes
/// (Prim from clique 0; deterministic lowest-index tie-break).
pub fn clique_tree(cliques: &[Vec<usize>]) -> (Vec<Option<usize>>, Vec<Vec<usize>>) {
    let m = cliques.len();
    let sets: Vec<BTreeSet<usize>> = cliques.iter().map(|c| c.iter().copied().collect()).collect();
    let mut parent: Vec<Option<usize>> = vec![None; m];
    let mut in_tree = vec![false; m];
    let mut best_w = vec![-1i64; m];
    let mut best_p = vec![0usize; m];
    in_tree[0] = true;
    for j in 1..m {
        best_w[j] = sets[0].intersection(&sets[j]).count() as i64;
        best_p[j] = 0;
    }
    for _ in 1..m {
        let mut pick = None;
        for j in 0..m {
            if !in_tree[j] && pick.is_none_or(|p: usize| best_w[j] > best_w[p]) {
                pick = Some(j);
            }
        }
        let j = pick.unwrap();
        in_tree[j] = true;
        parent[j] = Some(best_p[j]);
        for k in 0..m {
            if !in_tree[k] {
                let w = sets[j].intersection(&sets[k]).count() as i64;
                if w > best_w[k] {
                    best_w[k] = w;
                    best_p[k] = j;
                }
            }
        }
    }
    let separators: Vec<Vec<usize>> = (0..m)
        .map(|j| match parent[j] {
            Some(p) => sets[j].intersection(&sets[p]).copied().collect(),
            None => Vec::new(),
        })
        .collect();
    (parent, separators)
}

/// The clique decomposition consumed by the relaxation builder.
#[derive(Debug, Clone)]
pub struct CliqueDecomposition {
    pub n: usize,
    /// Neighbor-completed constraint graph.
    pub constraint_graph: Graph,
    /// Chordal extension (including merge fill when merging is enabled).
    pub chordal: Graph,
    /// Maximal cliques of `chordal`, each sorted, list sorted.
    pub cliques: Vec<Vec<usize>>,
    /// Clique-tree parent per clique (None for the root).
    pub parent: Vec<Option<usize>>,
    /// Separator with the parent clique.
    pub separators: Vec<Vec<usize>>,
    /// Smallest covering maximal clique per bus.
    pub covering: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct SparsityOptions {
    /// Merge adjacent cliques when the separator covers all but at most one
    /// vertex of the smaller clique.
    pub merge_cliques: bool,
}

impl Default for SparsityOptions {
    fn default() -> Self {
        SparsityOptions { merge_cliques: true }
    }
}

/// Smallest covering maximal clique of every bus: the least-cardinality
/// clique containing the bus and all its constraint-graph neighbors, ties
/// broken by lowest clique index.
pub fn covering_cliques(cliques: &[Vec<usize>], constraint: &Graph) -> Vec<usize> {
    let sets: Vec<BTreeSet<usize>> = cliques.iter().map(|c| c.iter().copied().collect()).collect();
    (0..constraint.n)
        .map(|k| {
            let mut closed: BTreeSet<usize> = constraint.neighbors(k).clone();
            closed.insert(k);
            let mut best: Option<usize> = None;
            for (i, s) in sets.iter().enumerate() {
                if closed.is_subset(s) && best.is_none_or(|b| s.len() < sets[b].len()) {
                    best = Some(i);
                }
            }
            best.expect("constraint-graph construction guarantees a covering clique")
        })
        .collect()
}

/// Relaxation order per clique: the highest order of any bus it covers
/// (cliques covering no bus get order 1).
pub fn clique_orders(bus_orders: &[u32], covering: &[usize], n_cliques: usize) -> Vec<u32> {
    let mut out = vec![1u32; n_cliques];
    for (bus, &m) in covering.iter().enumerate() {
        out[m] = out[m].max(bus_orders[bus]);
    }
    out
}

/// Build the full decomposition for a case.
pub fn decompose(case: &NetworkCase, opts: SparsityOptions) -> Result<CliqueDecomposition, SparsityError> {
    let constraint = build_constraint_graph(case)?;
    let mut chordal = chordal_extension(&constraint)?;
    if chordal.perfect_elimination_ordering().is_none() {
        return Err(SparsityError::NotChordal);
    }
    let mut cliques = maximal_cliques(&chordal)?;

    if opts.merge_cliques {
        // Merge pass: complete the union of near-identical adjacent cliques
        // and re-derive the decomposition from the augmented graph, so all
        // invariants (chordality, maximality, running intersection) hold by
        // construction.
        loop {
            let (parent, separators) = clique_tree(&cliques);
            let mut merged = false;
            for j in 0..cliques.len() {
                let Some(p) = parent[j] else { continue };
                let sep = separators[j].len();
                let small = cliques[j].len().min(cliques[p].len());
                if sep >= small.saturating_sub(1) {
                    let union: Vec<usize> = cliques[j]
                        .iter()
                        .chain(cliques[p].iter())
                        .copied()
                        .collect();
                    for a in 0..union.len() {
                        for b in a + 1..union.len() {
                            chordal.add_edge(union[a], union[b]);
                        }
                    }
                    merged = true;
                    break;
                }
            }
            if !merged {
                break;
            }
            cliques = maximal_cliques(&chordal)?;
        }
    }

    let (parent, separators) = clique_tree(&cliques);
    let covering = covering_cliques(&cliques, &constraint);
    Ok(CliqueDecomposition {
        n: case.n(),
        constraint_graph: constraint,
        chordal,
        cliques,
        parent,
        separators,
        covering,
    })
}

impl CliqueDecomposition {
    /// Verify the running-intersection property: for every clique, its
    /// separator with the parent is contained in every clique on the tree
    /// path to the root.
    pub fn running_intersection_holds(&self) -> bool {
        for j in 0..self.cliques.len() {
            let Some(p) = self.parent[j] else { continue };
            let sep: BTreeSet<usize> = self.separators[j].iter().copied().collect();
            let pset: BTreeSet<usize> = self.cliques[p].iter().copied().collect();
            if !sep.is_subset(&pset) {
                return false;
            }
        }
        // RIP for a clique tree is equivalent to: the cliques containing any
        // given vertex induce a subtree.
        for v in 0..self.n {
            let holding: Vec<usize> = (0..self.cliques.len())
                .filter(|&i| self.cliques[i].binary_search(&v).is_ok())
                .collect();
            if holding.is_empty() {
                return false;
            }
            // Count tree edges among holding cliques; a subtree on k nodes
            // has exactly k-1 internal edges.
            let hset: BTreeSet<usize> = holding.iter().copied().collect();
            let mut edges = 0;
            for &c in &holding {
                if let Some(p) = self.parent[c] {
                    if hset.contains(&p) {
                        edges += 1;
                    }
                }
            }
            if edges != holding.len() - 1 {
                return false;
            }
        }
        true
    }

    /// JSON debug dump of cliques, tree, and covering map.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            n: usize,
            cliques: &'a [Vec<usize>],
            parent: Vec<i64>,
            separators: &'a [Vec<usize>],
            covering: &'a [usize],
            extension_edges: Vec<(usize, usize)>,
        }
        let extension_edges: Vec<(usize, usize)> = self
            .chordal
            .edges()
            .into_iter()
            .filter(|&(a, b)| !self.constraint_graph.has_edge(a, b))
            .collect();
        serde_json::to_string_pretty(&Dump {
            n: self.n,
            cliques: &self.cliques,
            parent: self.parent.iter().map(|p| p.map_or(-1, |v| v as i64)).collect(),
            separators: &self.separators,
            covering: &self.covering,
            extension_edges,
        })
        .expect("dump serializes")
    }
}
