//! Mauldin-Williams graphs: vertices with seed boxes, edges carrying
//! contractive similarities, optional condensation primitives, paths and
//! cycles.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Default upper bound on the number of paths any enumeration may produce.
pub const DEFAULT_PATH_CAP: usize = 100_000_000;

/// Absolute tolerance for seed-box containment checks.
pub const CONTAINMENT_TOL: f64 = 1e-9;

/// Per-entry tolerance on `QᵀQ = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Relative slack used when comparing composed ratios against a cutoff, so
/// that `(1/3)^3` and `3^-3` land on the same side.
pub const RATIO_REL_TOL: f64 = 1e-12;

/// Axis-aligned box `[min, max]` in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Self {
        Aabb { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn diam(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// All `2^d` corners.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { self.max[k] } else { self.min[k] }).collect())
            .collect()
    }

    pub fn contains_point(&self, p: &[f64], tol: f64) -> bool {
        p.iter().zip(self.min.iter().zip(&self.max)).all(|(x, (a, b))| *x >= a - tol && *x <= b + tol)
    }

    pub fn interiors_overlap(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|k| self.min[k] < other.max[k] && other.min[k] < self.max[k])
    }

    pub fn is_well_formed(&self) -> bool {
        self.min.len() == self.max.len() && self.min.iter().zip(&self.max).all(|(a, b)| a <= b)
    }
}

/// `x ↦ ratio · Q x + translation` with `Q` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub ratio: f64,
    pub isometry: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl Similarity {
    pub fn new(ratio: f64, isometry: DMatrix<f64>, translation: DVector<f64>) -> Self {
        Similarity { ratio, isometry, translation }
    }

    pub fn identity(d: usize) -> Self {
        Similarity::new(1.0, DMatrix::identity(d, d), DVector::zeros(d))
    }

    /// Counter-clockwise rotation of the plane by `angle` radians.
    pub fn rotation_2d(angle: f64) -> DMatrix<f64> {
        let (s, c) = angle.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        let y = &self.isometry * v * self.ratio + &self.translation;
        y.iter().copied().collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity {
            ratio: self.ratio * inner.ratio,
            isometry: &self.isometry * &inner.isometry,
            translation: &self.isometry * &inner.translation * self.ratio + &self.translation,
        }
    }

    /// Largest entry of `|QᵀQ − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        let g = self.isometry.transpose() * &self.isometry - DMatrix::<f64>::identity(d, d);
        g.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// True when `Q` is a signed permutation, i.e. boxes map to boxes.
    pub fn is_axis_aligned(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).filter(|&j| self.isometry[(i, j)].abs() > 1e-12).count() == 1)
    }

    /// Image of a box under the map, as the bounding box of its corners.
    pub fn image_bbox(&self, b: &Aabb) -> Aabb {
        let d = b.dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for c in b.corners() {
            let p = self.apply(&c);
            for k in 0..d {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        Aabb { min, max }
    }
}

/// Compact condensation piece attached to a vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Point(Vec<f64>),
    Segment(Vec<f64>, Vec<f64>),
    Box(Aabb),
}

impl Primitive {
    /// Minkowski dimension of the primitive.
    pub fn minkowski_dim(&self) -> usize {
        match self {
            Primitive::Point(_) => 0,
            Primitive::Segment(a, b) => usize::from(a != b),
            Primitive::Box(b) => b.min.iter().zip(&b.max).filter(|(lo, hi)| hi > lo).count(),
        }
    }

    fn defining_points(&self) -> Vec<Vec<f64>> {
        match self {
            Primitive::Point(p) => vec![p.clone()],
            Primitive::Segment(a, b) => vec![a.clone(), b.clone()],
            Primitive::Box(b) => b.corners(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Primitive::Point(p) => p.len(),
            Primitive::Segment(a, _) => a.len(),
            Primitive::Box(b) => b.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separation {
    Ssc,
    Sosc,
    Scosc,
    None,
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Separation::Ssc => "SSC",
            Separation::Sosc => "SOSC",
            Separation::Scosc => "SCOSC",
            Separation::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub seed: Aabb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub map: Similarity,
    /// Exact ratio `p/q`, when the spec file supplied one.
    pub ratio_rational: Option<(u64, u64)>,
}

impl Edge {
    pub fn ratio(&self) -> f64 {
        self.map.ratio
    }
}

/// A Mauldin-Williams graph with condensation.
///
/// Vertices and edges are addressed by their index; string ids are kept for
/// reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MwGraph {
    pub dimension: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub condensation: Vec<Vec<Primitive>>,
    pub separation: Separation,
    /// Open sets `U_i`; seed-box interiors unless given explicitly.
    pub open_sets: Vec<Aabb>,
    out_edges: Vec<Vec<usize>>,
}

impl MwGraph {
    pub fn new(
        dimension: usize,
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        condensation: Vec<Vec<Primitive>>,
        separation: Separation,
        open_sets: Option<Vec<Aabb>>,
    ) -> Self {
        let mut out_edges = vec![Vec::new(); vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.from < out_edges.len() {
                out_edges[e.from].push(k);
            }
        }
        let open_sets = open_sets.unwrap_or_else(|| vertices.iter().map(|v| v.seed.clone()).collect());
        let mut condensation = condensation;
        condensation.resize(vertices.len(), Vec::new());
        MwGraph { dimension, vertices, edges, condensation, separation, open_sets, out_edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Indices of the edges leaving `vertex` (the set `E_i`).
    pub fn edges_from(&self, vertex: usize) -> &[usize] {
        &self.out_edges[vertex]
    }

    pub fn min_ratio(&self) -> f64 {
        self.edges.iter().map(Edge::ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.edges.iter().map(Edge::ratio).fold(0.0, f64::max)
    }

    pub fn has_condensation(&self) -> bool {
        self.condensation.iter().any(|c| !c.is_empty())
    }

    /// True when every edge carries an exact rational ratio.
    pub fn all_ratios_rational(&self) -> bool {
        self.edges.iter().all(|e| e.ratio_rational.is_some())
    }
}

/// Outcome of a single structural check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Turns the first failure into a fatal error.
    pub fn into_result(self) -> Result<ValidationReport> {
        if let Some(c) = self.failures().next() {
            return Err(Error::Validation(format!("{}: {}", c.name, c.detail)));
        }
        Ok(self)
    }
}

/// Checks every structural invariant of the graph and reports each one.
pub fn validate(graph: &MwGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = graph.dimension;
    let n = graph.vertex_count();

    report.push("dimension", d > 0, format!("d = {d}"));
    report.push("vertices", n > 0, format!("{n} vertices"));

    for v in &graph.vertices {
        let ok = v.seed.dim() == d && v.seed.is_well_formed() && v.seed.diam() > 0.0;
        report.push(format!("seed box {}", v.id), ok, "min ≤ max, matching dimension, nonempty interior");
    }
    for a in 0..n {
        for b in a + 1..n {
            let (va, vb) = (&graph.vertices[a], &graph.vertices[b]);
            if va.seed.dim() == vb.seed.dim() && va.seed.interiors_overlap(&vb.seed) {
                report.push(format!("disjoint interiors {} {}", va.id, vb.id), false, "seed boxes overlap");
            }
        }
    }

    for e in &graph.edges {
        let known = e.from < n && e.to < n;
        let detail = if known { "both endpoints are declared vertices" } else { "unknown vertex id" };
        report.push(format!("edge {} endpoints", e.id), known, detail);
        if !known {
            continue;
        }
        let r = e.map.ratio;
        report.push(
            format!("edge {} ratio", e.id),
            r > 0.0 && r < 1.0,
            if r > 0.0 && r < 1.0 { format!("r = {r}") } else { format!("ratio outside (0,1): {r}") },
        );
        if let Some((p, q)) = e.ratio_rational {
            let ok = q != 0 && (p as f64 / q as f64 - r).abs() <= 1e-12 * r.max(1.0);
            report.push(format!("edge {} ratio_rational", e.id), ok, format!("{p}/{q} vs {r}"));
        }
        let shapes_ok = e.map.isometry.nrows() == d && e.map.isometry.ncols() == d && e.map.dim() == d;
        report.push(format!("edge {} shape", e.id), shapes_ok, "isometry and translation match dimension");
        if !shapes_ok {
            continue;
        }
        let defect = e.map.orthogonality_defect();
        report.push(
            format!("edge {} isometry", e.id),
            defect <= ORTHOGONALITY_TOL,
            if defect <= ORTHOGONALITY_TOL {
                "orthogonal".to_string()
            } else {
                format!("non-orthogonal isometry (|QᵀQ − I| = {defect:e})")
            },
        );
        let target = &graph.vertices[e.to].seed;
        let host = &graph.vertices[e.from].seed;
        if target.dim() == d && host.dim() == d {
            let worst = target.corners().iter().map(|c| excess(host, &e.map.apply(c))).fold(0.0f64, f64::max);
            report.push(
                format!("edge {} containment", e.id),
                worst <= CONTAINMENT_TOL,
                if worst <= CONTAINMENT_TOL {
                    "S_e(X_t(e)) ⊂ X_i(e)".to_string()
                } else {
                    format!("seed-box containment violated by {worst:e}")
                },
            );
        }
    }

    for v in 0..n {
        report.push(
            format!("vertex {} out-degree", graph.vertices[v].id),
            !graph.edges_from(v).is_empty(),
            format!("{} outgoing edges", graph.edges_from(v).len()),
        );
        for (k, prim) in graph.condensation[v].iter().enumerate() {
            let wf = prim.dim() == d && !matches!(prim, Primitive::Box(b) if !b.is_well_formed());
            let inside =
                wf && prim.defining_points().iter().all(|p| graph.vertices[v].seed.contains_point(p, CONTAINMENT_TOL));
            report.push(
                format!("condensation {}[{k}]", graph.vertices[v].id),
                inside,
                "primitive well formed and inside the seed box",
            );
        }
    }
    report
}

fn excess(b: &Aabb, p: &[f64]) -> f64 {
    p.iter().zip(b.min.iter().zip(&b.max)).map(|(x, (lo, hi))| (lo - x).max(x - hi).max(0.0)).fold(0.0, f64::max)
}

/// Boolean reachability closure over the support of an `n × n` relation.
pub(crate) fn reachability(n: usize, arcs: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<bool>> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in arcs {
        adj[a].push(b);
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut queue: VecDeque<usize> = adj[s].iter().copied().collect();
            while let Some(x) = queue.pop_front() {
                if !seen[x] {
                    seen[x] = true;
                    queue.extend(adj[x].iter().copied());
                }
            }
            seen
        })
        .collect()
}

/// True iff every ordered pair of vertices is joined by a directed path.
pub fn strongly_connected(graph: &MwGraph) -> bool {
    let n = graph.vertex_count();
    n > 0 && reachability(n, graph.edges.iter().map(|e| (e.from, e.to))).iter().all(|row| row.iter().all(|&b| b))
}

/// A finite sequence of consecutive edges, stored as edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Path {
    pub edges: Vec<usize>,
}

impl Path {
    pub fn new(edges: Vec<usize>) -> Self {
        Path { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_consecutive(&self, g: &MwGraph) -> bool {
        self.edges.windows(2).all(|w| g.edges[w[0]].to == g.edges[w[1]].from)
    }

    pub fn initial(&self, g: &MwGraph) -> Option<usize> {
        self.edges.first().map(|&e| g.edges[e].from)
    }

    pub fn terminal(&self, g: &MwGraph) -> Option<usize> {
        self.edges.last().map(|&e| g.edges[e].to)
    }

    /// `r_γ`, the product of the edge ratios; 1 for the empty path.
    pub fn ratio(&self, g: &MwGraph) -> f64 {
        self.edges.iter().map(|&e| g.edges[e].ratio()).product()
    }

    /// `S_γ = S_{e_1} ∘ … ∘ S_{e_n}`.
    pub fn similarity(&self, g: &MwGraph) -> Similarity {
        let mut s = Similarity::identity(g.dimension);
        for &e in &self.edges {
            s = s.compose(&g.edges[e].map);
        }
        s
    }

    /// `γ⁻`, the path with its last edge removed.
    pub fn parent(&self) -> Path {
        Path::new(self.edges[..self.edges.len().saturating_sub(1)].to_vec())
    }

    pub fn is_cycle(&self, g: &MwGraph) -> bool {
        !self.is_empty() && self.is_consecutive(g) && self.initial(g) == self.terminal(g)
    }

    pub fn ids(&self, g: &MwGraph) -> Vec<String> {
        self.edges.iter().map(|&e| g.edges[e].id.clone()).collect()
    }
}

/// Length of the longest common prefix, `|γ ∧ γ′|`.
pub fn common_prefix_len(a: &Path, b: &Path) -> usize {
    a.edges.iter().zip(&b.edges).take_while(|(x, y)| x == y).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathBound {
    /// All paths of exactly this many edges.
    Length(usize),
    /// The antichain `{γ : r_γ ≤ ρ < r_{γ⁻}}`.
    Ratio(f64),
}

/// Enumerates `Γ_start^n` or the ratio antichain from `start`.
pub fn enumerate_paths(graph: &MwGraph, start: usize, bound: PathBound, cap: usize) -> Result<Vec<Path>> {
    if start >= graph.vertex_count() {
        return Err(Error::InvalidInput(format!("no vertex with index {start}")));
    }
    if let PathBound::Ratio(rho) = bound {
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!("ratio bound must be positive, got {rho}")));
        }
        if rho >= 1.0 {
            // every nonempty path already satisfies r_γ ≤ ρ; the empty path is the antichain
            return Ok(vec![Path::default()]);
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<usize>::new(), start, 1.0f64)];
    while let Some((edges, at, ratio)) = stack.pop() {
        let done = match bound {
            PathBound::Length(n) => edges.len() == n,
            PathBound::Ratio(rho) => !edges.is_empty() && ratio <= rho * (1.0 + RATIO_REL_TOL),
        };
        if done {
            if out.len() == cap {
                return Err(Error::ResourceCap { what: "path enumeration", cap });
            }
            out.push(Path::new(edges));
            continue;
        }
        for &e in graph.edges_from(at).iter().rev() {
            let mut next = edges.clone();
            next.push(e);
            stack.push((next, graph.edges[e].to, ratio * graph.edges[e].ratio()));
        }
    }
    Ok(out)
}

/// All simple cycles (pairwise distinct initial vertices), one per rotation
/// class, each rotated to its lexicographically smallest edge-id sequence.
pub fn simple_cycles(graph: &MwGraph) -> Vec<Path> {
    let n = graph.vertex_count();
    let mut found = Vec::new();
    for s in 0..n {
        // cycles whose smallest vertex index is s
        let mut on_path = vec![false; n];
        on_path[s] = true;
        let mut stack: Vec<(usize, usize)> = vec![(s, 0)];
        let mut edges: Vec<usize> = Vec::new();
        while let Some(&mut (at, ref mut next)) = stack.last_mut() {
            let out = graph.edges_from(at);
            if *next == out.len() {
                stack.pop();
                on_path[at] = at == s;
                edges.pop();
                continue;
            }
            let e = out[*next];
            *next += 1;
            let to = graph.edges[e].to;
            if to == s {
                let mut cyc = edges.clone();
                cyc.push(e);
                found.push(canonical_rotation(graph, cyc));
            } else if to > s && !on_path[to] {
                on_path[to] = true;
                edges.push(e);
                stack.push((to, 0));
            }
        }
    }
    found.sort_by_cached_key(|c| c.ids(graph));
    found.dedup();
    found
}

fn canonical_rotation(graph: &MwGraph, cyc: Vec<usize>) -> Path {
    let k = cyc.len();
    (0..k)
        .map(|i| Path::new(cyc[i..].iter().chain(&cyc[..i]).copied().collect()))
        .min_by(|a, b| a.ids(graph).cmp(&b.ids(graph)))
        .expect("cycle is nonempty")
}

/// Draws a path from the ratio antichain at `stop_ratio`, starting at
/// `start`, with probability `r_γ^{s₀} u_{t(γ)} / u_start`.
///
/// This is the Markov measure `μ([γ]) = v_{i(γ)} r_γ^{s₀} u_{t(γ)}`
/// conditioned on the first vertex.
pub fn sample_path(graph: &MwGraph, spectral: &SpectralData, start: usize, stop_ratio: f64, seed: u64) -> Result<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_path_with(graph, spectral, start, stop_ratio, &mut rng)
}

pub fn sample_path_with<R: Rng>(
    graph: &MwGraph,
    spectral: &SpectralData,
    start: usize,
    stop_ratio: f64,
    rng: &mut R,
) -> Result<Path> {
    if start >= graph.vertex_count() {
        return Err(Error::InvalidInput(format!("no vertex with index {start}")));
    }
    let s0 = spectral.s0;
    let u = &spectral.u;
    let mut edges = Vec::new();
    if stop_ratio >= 1.0 {
        return Ok(Path::new(edges));
    }
    let mut at = start;
    let mut ratio = 1.0;
    while edges.is_empty() || ratio > stop_ratio * (1.0 + RATIO_REL_TOL) {
        let out = graph.edges_from(at);
        let weights: Vec<f64> = out.iter().map(|&e| graph.edges[e].ratio().powf(s0) * u[graph.edges[e].to]).collect();
        let mut x = rng.gen::<f64>() * weights.iter().sum::<f64>();
        let mut pick = out[out.len() - 1];
        for (&e, w) in out.iter().zip(&weights) {
            if x < *w {
                pick = e;
                break;
            }
            x -= w;
        }
        edges.push(pick);
        ratio *= graph.edges[pick].ratio();
        at = graph.edges[pick].to;
    }
    Ok(Path::new(edges))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn interval(a: f64, b: f64) -> Aabb {
        Aabb::new(vec![a], vec![b])
    }

    pub fn map1(ratio: f64, shift: f64) -> Similarity {
        Similarity::new(ratio, DMatrix::identity(1, 1), DVector::from_vec(vec![shift]))
    }

    pub fn edge(id: &str, from: usize, to: usize, map: Similarity) -> Edge {
        Edge { id: id.into(), from, to, map, ratio_rational: None }
    }

    /// One vertex on [0,1], maps x/3 and x/3 + 2/3.
    pub fn cantor() -> MwGraph {
        MwGraph::new(
            1,
            vec![Vertex { id: "K".into(), seed: interval(0.0, 1.0) }],
            vec![
                Edge { ratio_rational: Some((1, 3)), ..edge("a", 0, 0, map1(1.0 / 3.0, 0.0)) },
                Edge { ratio_rational: Some((1, 3)), ..edge("b", 0, 0, map1(1.0 / 3.0, 2.0 / 3.0)) },
            ],
            vec![vec![]],
            Separation::Ssc,
            None,
        )
    }

    /// One vertex on [0,1], maps x/2 and x/4 + 3/4.
    pub fn two_ratio_quarter() -> MwGraph {
        MwGraph::new(
            1,
            vec![Vertex { id: "K".into(), seed: interval(0.0, 1.0) }],
            vec![edge("h", 0, 0, map1(0.5, 0.0)), edge("q", 0, 0, map1(0.25, 0.75))],
            vec![vec![]],
            Separation::Ssc,
            None,
        )
    }

    /// Vertices on [0,1] and [2,3]; 1→1 ratio 1/2, 1→2 ratio 1/4, 2→1 ratio 1/2.
    pub fn two_vertex() -> MwGraph {
        MwGraph::new(
            1,
            vec![
                Vertex { id: "1".into(), seed: interval(0.0, 1.0) },
                Vertex { id: "2".into(), seed: interval(2.0, 3.0) },
            ],
            vec![edge("a", 0, 0, map1(0.5, 0.0)), edge("b", 0, 1, map1(0.25, 0.25)), edge("c", 1, 0, map1(0.5, 2.0))],
            vec![vec![], vec![]],
            Separation::Ssc,
            None,
        )
    }
}
