//! Canonical homology from the lift of a star graph.
//!
//! Straight spokes join the base point `x0` to every branch point. Their
//! preimage on `X` is a graph with vertices `(x0, s)` for every sheet `s` and
//! one vertex per ramification point, and edges `e(k, s)` running from
//! `(x0, s)` to the ramification point over `lambda_k` reached on sheet `s`.
//! Its complement is a union of `2^n` disks (lifts of the slit sphere), so
//! every cycle on `X` is homologous to a cycle on the graph, and intersection
//! numbers follow from the cyclic order of the spokes at `x0`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::continuation::segment_distance;
use super::monodromy::{angular_order, MonodromyRepresentation};
use crate::curve::{FiberProductCurve, C64};
use crate::error::{Error, Result};

/// Traversal of edge `edge` in (`forward`) or against its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dart {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    pub x0: C64,
    pub n: usize,
    pub branch_factor: Vec<usize>,
    /// Branch indices in counter-clockwise order of `arg(lambda_k - x0)`.
    pub order: Vec<usize>,
    position: Vec<usize>,
}

impl StarGraph {
    pub fn new(curve: &FiberProductCurve, x0: C64) -> Self {
        let order = angular_order(curve, x0);
        let mut position = vec![0; order.len()];
        for (p, &k) in order.iter().enumerate() {
            position[k] = p;
        }
        StarGraph {
            x0,
            n: curve.n(),
            branch_factor: (0..curve.branch_count()).map(|k| curve.branch_id(k).factor).collect(),
            order,
            position,
        }
    }

    pub fn sheets(&self) -> usize {
        1 << self.n
    }

    pub fn branches(&self) -> usize {
        self.branch_factor.len()
    }

    pub fn edge_count(&self) -> usize {
        self.branches() * self.sheets()
    }

    pub fn vertex_count(&self) -> usize {
        self.sheets() + self.branches() * self.sheets() / 2
    }

    pub fn edge(&self, k: usize, sheet: usize) -> usize {
        k * self.sheets() + sheet
    }

    /// `(branch, sheet)` of an edge.
    pub fn edge_data(&self, e: usize) -> (usize, usize) {
        (e / self.sheets(), e % self.sheets())
    }

    fn tail(&self, e: usize) -> usize {
        self.edge_data(e).1
    }

    fn head(&self, e: usize) -> usize {
        let (k, s) = self.edge_data(e);
        let j = self.branch_factor[k];
        let low = s & ((1 << j) - 1);
        let high = s >> (j + 1);
        self.sheets() + k * self.sheets() / 2 + (low | (high << j))
    }

    pub fn dart_tail(&self, d: Dart) -> usize {
        if d.forward {
            self.tail(d.edge)
        } else {
            self.head(d.edge)
        }
    }

    pub fn dart_head(&self, d: Dart) -> usize {
        if d.forward {
            self.head(d.edge)
        } else {
            self.tail(d.edge)
        }
    }

    /// Edges at a vertex in counter-clockwise order.
    pub fn rotation(&self, v: usize) -> Vec<usize> {
        if v < self.sheets() {
            self.order.iter().map(|&k| self.edge(k, v)).collect()
        } else {
            let half = self.sheets() / 2;
            let k = (v - self.sheets()) / half;
            let c = (v - self.sheets()) % half;
            let j = self.branch_factor[k];
            let s0 = (c & ((1 << j) - 1)) | ((c >> j) << (j + 1));
            vec![self.edge(k, s0), self.edge(k, s0 | 1 << j)]
        }
    }

    /// Position of branch `k` in the angular order.
    pub fn position(&self, k: usize) -> usize {
        self.position[k]
    }

    fn darts_out(&self, v: usize) -> Vec<Dart> {
        self.rotation(v)
            .into_iter()
            .map(|e| Dart { edge: e, forward: self.tail(e) == v })
            .collect()
    }

    /// Face count of the ribbon graph, following the counter-clockwise
    /// successor of each arriving dart.
    pub fn face_count(&self) -> usize {
        self.faces().len()
    }

    pub fn faces(&self) -> Vec<Vec<Dart>> {
        let m = self.edge_count();
        let index = |d: Dart| 2 * d.edge + usize::from(!d.forward);
        let mut seen = vec![false; 2 * m];
        let mut faces = Vec::new();
        for start in 0..2 * m {
            if seen[start] {
                continue;
            }
            let mut d = Dart { edge: start / 2, forward: start % 2 == 0 };
            let mut face = Vec::new();
            while !seen[index(d)] {
                seen[index(d)] = true;
                face.push(d);
                d = self.face_successor(d);
            }
            faces.push(face);
        }
        faces
    }

    fn face_successor(&self, d: Dart) -> Dart {
        let w = self.dart_head(d);
        let rot = self.rotation(w);
        let pos = rot.iter().position(|&e| e == d.edge).expect("edge at its head");
        let e = rot[(pos + 1) % rot.len()];
        Dart { edge: e, forward: self.tail(e) == w }
    }

    pub fn walk_chain(&self, walk: &[Dart]) -> Vec<i64> {
        let mut c = vec![0i64; self.edge_count()];
        for d in walk {
            c[d.edge] += if d.forward { 1 } else { -1 };
        }
        c
    }

    /// Intersection number of the chain `c` with the closed walk, pushing the
    /// walk off the graph to its left. A crossing counts `+1` when
    /// `cross(dc, dwalk) > 0`.
    pub fn intersection(&self, c: &[i64], walk: &[Dart]) -> i64 {
        let len = walk.len();
        let mut total = 0i64;
        for i in 0..len {
            let din = walk[i];
            let dout = walk[(i + 1) % len];
            let w = self.dart_head(din);
            debug_assert_eq!(w, self.dart_tail(dout));
            let rot = self.rotation(w);
            let p_out = rot.iter().position(|&e| e == dout.edge).expect("out edge");
            let p_in = rot.iter().position(|&e| e == din.edge).expect("in edge");
            let mut p = (p_out + 1) % rot.len();
            while p != p_in {
                let e = rot[p];
                let outward = if self.tail(e) == w { c[e] } else { -c[e] };
                total -= outward;
                p = (p + 1) % rot.len();
            }
        }
        total
    }

    /// Fundamental cycles of a breadth-first spanning tree rooted at `(x0, 0)`,
    /// as closed walks without backtracking.
    pub fn fundamental_cycles(&self) -> Vec<Vec<Dart>> {
        let nv = self.vertex_count();
        let mut parent: Vec<Option<Dart>> = vec![None; nv];
        let mut depth = vec![usize::MAX; nv];
        let mut tree_edge = vec![false; self.edge_count()];
        depth[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for d in self.darts_out(v) {
                let u = self.dart_head(d);
                if depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    parent[u] = Some(d);
                    tree_edge[d.edge] = true;
                    queue.push_back(u);
                }
            }
        }
        let path_up = |mut v: usize| {
            let mut p = Vec::new();
            while let Some(d) = parent[v] {
                p.push(d);
                v = self.dart_tail(d);
            }
            p.reverse();
            p
        };
        let mut cycles = Vec::new();
        for e in 0..self.edge_count() {
            if tree_edge[e] {
                continue;
            }
            let (u, v) = (self.tail(e), self.head(e));
            let pu = path_up(u);
            let pv = path_up(v);
            let common = pu.iter().zip(&pv).take_while(|(a, b)| a == b).count();
            let mut walk: Vec<Dart> = pu[common..].to_vec();
            walk.push(Dart { edge: e, forward: true });
            walk.extend(pv[common..].iter().rev().map(|d| Dart { edge: d.edge, forward: !d.forward }));
            cycles.push(walk);
        }
        cycles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomologyBasis {
    pub graph: StarGraph,
    pub fundamental: Vec<Vec<Dart>>,
    /// Coefficients over the fundamental cycles.
    pub a_coeffs: Vec<Vec<i64>>,
    pub b_coeffs: Vec<Vec<i64>>,
    /// Edge chains of the canonical cycles.
    pub a_cycles: Vec<Vec<i64>>,
    pub b_cycles: Vec<Vec<i64>>,
    /// `[a; b]` intersection matrix, recomputed from crossings.
    pub intersection: Vec<Vec<i64>>,
    pub fingerprint: String,
}

impl HomologyBasis {
    pub fn genus(&self) -> usize {
        self.a_cycles.len()
    }

    pub fn is_canonical(&self) -> bool {
        let g = self.genus();
        (0..2 * g).all(|r| {
            (0..2 * g).all(|c| {
                let expect = if c == r + g {
                    1
                } else if r == c + g {
                    -1
                } else {
                    0
                };
                self.intersection[r][c] == expect
            })
        })
    }
}

/// Checks that straight spokes from `x0` are usable: distinct directions and
/// clearance from the other branch points.
pub fn check_spokes(curve: &FiberProductCurve, x0: C64, clearance: f64) -> Result<()> {
    for k in 0..curve.branch_count() {
        let lk = curve.lambda(k);
        if (lk - x0).norm() < clearance {
            return Err(Error::ClearanceViolation { branch: k, distance: (lk - x0).norm(), clearance });
        }
        for i in 0..curve.branch_count() {
            if i != k {
                let d = segment_distance(x0, lk, curve.lambda(i));
                if d < clearance {
                    return Err(Error::ClearanceViolation { branch: i, distance: d, clearance });
                }
            }
        }
    }
    Ok(())
}

/// Deterministic base point: among candidates around the branch locus pick
/// the one maximizing the smallest spoke clearance relative to the
/// separation of the branch points.
pub fn choose_base_point(curve: &FiberProductCurve) -> C64 {
    let lambdas = curve.lambdas();
    let center = lambdas.iter().sum::<C64>() / lambdas.len() as f64;
    let spread = lambdas.iter().map(|l| (l - center).norm()).fold(0.0, f64::max).max(1e-3);
    let mut best = (f64::NEG_INFINITY, center + C64::new(0.0, 0.5 * spread));
    for ring in 1..=6 {
        let r = spread * ring as f64 / 6.0;
        for a in 0..24 {
            let x0 = center + C64::from_polar(r, std::f64::consts::TAU * (a as f64 + 0.37) / 24.0);
            let score = spoke_score(curve, x0);
            if score > best.0 + 1e-12 {
                best = (score, x0);
            }
        }
    }
    best.1
}

fn spoke_score(curve: &FiberProductCurve, x0: C64) -> f64 {
    let mut score = f64::INFINITY;
    let nb = curve.branch_count();
    for k in 0..nb {
        let lk = curve.lambda(k);
        score = score.min((lk - x0).norm());
        for i in 0..nb {
            if i != k {
                score = score.min(segment_distance(x0, lk, curve.lambda(i)));
            }
        }
    }
    score
}

fn add_row(p: &mut [Vec<i64>], m: &mut [Vec<i64>], k: usize, j: usize, q: i64) {
    if q == 0 {
        return;
    }
    let n = m.len();
    let pj = p[j].clone();
    for (a, b) in p[k].iter_mut().zip(&pj) {
        *a += q * b;
    }
    let mj = m[j].clone();
    for c in 0..n {
        m[k][c] += q * mj[c];
    }
    for r in 0..n {
        let v = m[r][j];
        m[r][k] += q * v;
    }
}

fn negate_row(p: &mut [Vec<i64>], m: &mut [Vec<i64>], k: usize) {
    for a in p[k].iter_mut() {
        *a = -*a;
    }
    for c in 0..m.len() {
        m[k][c] = -m[k][c];
        m[c][k] = -m[c][k];
    }
}

type IntRows = Vec<Vec<i64>>;

/// Integer symplectic reduction of a skew form: returns `(a, b)` coefficient
/// rows with `<a_i, b_j> = delta_ij` and `<a_i, a_j> = <b_i, b_j> = 0`.
pub fn symplectic_reduce(form: &[Vec<i64>]) -> Result<(IntRows, IntRows)> {
    let n = form.len();
    let mut m: Vec<Vec<i64>> = form.to_vec();
    let mut p: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let mut pool: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::new();
    loop {
        let Some(&i) = pool.iter().find(|&&i| pool.iter().any(|&j| m[i][j] != 0)) else { break };
        loop {
            let nz: Vec<usize> = pool.iter().copied().filter(|&j| j != i && m[i][j] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let j0 = *nz.iter().min_by_key(|&&j| (m[i][j].abs(), j)).expect("nonempty");
            for &j in &nz {
                if j != j0 {
                    let q = m[i][j] / m[i][j0];
                    add_row(&mut p, &mut m, j, j0, -q);
                }
            }
        }
        let j = *pool.iter().find(|&&j| j != i && m[i][j] != 0).expect("row is nonzero");
        if m[i][j].abs() != 1 {
            return Err(Error::RankDeficiency { rank: 2 * pairs.len(), expected: 0 });
        }
        if m[i][j] == -1 {
            negate_row(&mut p, &mut m, j);
        }
        for &k in &pool {
            if k == i || k == j {
                continue;
            }
            let x = m[k][j];
            let y = m[k][i];
            add_row(&mut p, &mut m, k, i, -x);
            add_row(&mut p, &mut m, k, j, y);
        }
        pool.retain(|&k| k != i && k != j);
        pairs.push((i, j));
    }
    let a = pairs.iter().map(|&(i, _)| p[i].clone()).collect();
    let b = pairs.iter().map(|&(_, j)| p[j].clone()).collect();
    Ok((a, b))
}

fn combine(coeffs: &[i64], chains: &[Vec<i64>]) -> Vec<i64> {
    let mut out = vec![0i64; chains[0].len()];
    for (c, z) in coeffs.iter().zip(chains) {
        for (o, v) in out.iter_mut().zip(z) {
            *o += c * v;
        }
    }
    out
}

pub fn homology_from_graph(curve: &FiberProductCurve, graph: StarGraph) -> Result<HomologyBasis> {
    let g = curve.genus();
    let faces = graph.face_count();
    if faces != graph.sheets() {
        return Err(Error::RankDeficiency { rank: faces, expected: graph.sheets() });
    }
    let fundamental = graph.fundamental_cycles();
    let chains: Vec<Vec<i64>> = fundamental.iter().map(|w| graph.walk_chain(w)).collect();
    let form: Vec<Vec<i64>> =
        chains.iter().map(|c| fundamental.iter().map(|w| graph.intersection(c, w)).collect()).collect();
    let (a_coeffs, b_coeffs) = symplectic_reduce(&form).map_err(|_| Error::RankDeficiency {
        rank: 0,
        expected: 2 * g,
    })?;
    if a_coeffs.len() != g {
        return Err(Error::RankDeficiency { rank: 2 * a_coeffs.len(), expected: 2 * g });
    }
    let (a_cycles, b_cycles): (Vec<_>, Vec<_>) = if g == 0 {
        (Vec::new(), Vec::new())
    } else {
        (
            a_coeffs.iter().map(|c| combine(c, &chains)).collect(),
            b_coeffs.iter().map(|c| combine(c, &chains)).collect(),
        )
    };
    let all_coeffs: Vec<&Vec<i64>> = a_coeffs.iter().chain(&b_coeffs).collect();
    let all_chains: Vec<&Vec<i64>> = a_cycles.iter().chain(&b_cycles).collect();
    let intersection = all_chains
        .iter()
        .map(|c| {
            all_coeffs
                .iter()
                .map(|d| d.iter().zip(&fundamental).map(|(&y, w)| y * graph.intersection(c, w)).sum())
                .collect()
        })
        .collect();
    let fingerprint = fingerprint(curve, &graph, &a_cycles, &b_cycles);
    Ok(HomologyBasis { graph, fundamental, a_coeffs, b_coeffs, a_cycles, b_cycles, intersection, fingerprint })
}

fn fingerprint(curve: &FiberProductCurve, graph: &StarGraph, a: &[Vec<i64>], b: &[Vec<i64>]) -> String {
    let mut h = Sha256::new();
    h.update((curve.n() as u64).to_le_bytes());
    h.update((curve.m() as u64).to_le_bytes());
    for &k in &graph.order {
        h.update((k as u64).to_le_bytes());
    }
    for c in a.iter().chain(b) {
        for &v in c {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Canonical basis for spokes from the monodromy base point. The monodromy
/// must agree with the fiber-product model: the loop around `lambda_k` flips
/// exactly the sign of its own factor.
pub fn homology_basis(curve: &FiberProductCurve, mono: &MonodromyRepresentation) -> Result<HomologyBasis> {
    for (k, gen) in mono.generators.iter().enumerate() {
        let j = curve.branch_id(k).factor;
        if gen.iter().enumerate().any(|(s, &t)| t != s ^ (1 << j)) {
            return Err(Error::Hypothesis(format!("monodromy around branch point {k} is not a flip of factor {j}")));
        }
    }
    let clearance = 1e-3 * curve.min_branch_separation();
    check_spokes(curve, mono.base_x, clearance)?;
    homology_from_graph(curve, StarGraph::new(curve, mono.base_x))
}
