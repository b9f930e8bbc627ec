//! Resolution-`r` approximations of `K_i^C` and grid covering numbers `N̂_r`.
//!
//! `N̂_r` counts half-open cells `Π_k [o_k + m_k r, o_k + (m_k + 1) r)` met by
//! the generated union. Along an axis where an element has positive extent it
//! meets the cells whose interiors it overlaps; along a degenerate axis it
//! meets the cell containing it. Cell indices are snapped by
//! [`SNAP`] cell widths, plus [`COORD_EPS`] times the coordinate magnitude,
//! so that round-off never moves a boundary point.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use rustc_hash::FxHashSet as HashSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::graph::{Aabb, MwGraph, Path, Primitive, Similarity, DEFAULT_PATH_CAP, RATIO_REL_TOL};
use crate::renewal::StepFunction;

/// Snapping tolerance, in cell widths.
pub const SNAP: f64 = 1e-9;

/// Absolute snapping tolerance per unit of coordinate magnitude. Composed
/// similarities of depth ~20 carry errors of a few ulps of the coordinate,
/// which exceed `SNAP` cells once `r` drops below about `1e-7`.
pub const COORD_EPS: f64 = 1e-13;

fn tol(x: f64, origin: f64, r: f64) -> f64 {
    SNAP + COORD_EPS * (x.abs() + origin.abs() + 1.0) / r
}

/// Largest number of cells a single segment may be traversed through before
/// falling back to the closed-form count.
const SEGMENT_TRAVERSAL_CAP: usize = 10_000_000;

/// Above this many crossings a lone segment is counted by formula, ignoring
/// simultaneous crossings of several hyperplanes.
const EXACT_SEGMENT_COUNT: usize = 100_000;

/// Grid cell index, inline for `d ≤ 3`.
pub type Cell = SmallVec<[i64; 3]>;

/// Geometric shape of one element of a [`GeometrySet`].
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Axis-aligned box (exact image of a box under an axis-aligned map).
    Box(Aabb),
    /// Rotated box: a corner plus `d` edge vectors.
    Parallelotope {
        corner: Vec<f64>,
        edges: Vec<Vec<f64>>,
    },
    Segment(Vec<f64>, Vec<f64>),
    Point(Vec<f64>),
}

impl Shape {
    fn bbox(&self) -> Aabb {
        match self {
            Shape::Box(b) => b.clone(),
            Shape::Parallelotope { corner, edges } => {
                let d = corner.len();
                let mut min = corner.clone();
                let mut max = corner.clone();
                for mask in 0..1usize << edges.len() {
                    let p = parallelotope_point(corner, edges, mask);
                    for k in 0..d {
                        min[k] = min[k].min(p[k]);
                        max[k] = max[k].max(p[k]);
                    }
                }
                Aabb::new(min, max)
            }
            Shape::Segment(a, b) => Aabb::new(
                a.iter().zip(b).map(|(x, y)| x.min(*y)).collect(),
                a.iter().zip(b).map(|(x, y)| x.max(*y)).collect(),
            ),
            Shape::Point(p) => Aabb::new(p.clone(), p.clone()),
        }
    }

    /// Image under a similarity.
    pub fn map(&self, s: &Similarity) -> Shape {
        match self {
            Shape::Box(b) => image_of_box(s, b),
            Shape::Parallelotope { corner, edges } => {
                Shape::Parallelotope { corner: s.apply(corner), edges: edges.iter().map(|e| linear(s, e)).collect() }
            }
            Shape::Segment(a, b) => Shape::Segment(s.apply(a), s.apply(b)),
            Shape::Point(p) => Shape::Point(s.apply(p)),
        }
    }
}

fn linear(s: &Similarity, v: &[f64]) -> Vec<f64> {
    let y = &s.isometry * nalgebra::DVector::from_column_slice(v) * s.ratio;
    y.iter().copied().collect()
}

fn parallelotope_point(corner: &[f64], edges: &[Vec<f64>], mask: usize) -> Vec<f64> {
    let mut p = corner.to_vec();
    for (k, e) in edges.iter().enumerate() {
        if mask >> k & 1 == 1 {
            for (x, d) in p.iter_mut().zip(e) {
                *x += d;
            }
        }
    }
    p
}

fn image_of_box(s: &Similarity, b: &Aabb) -> Shape {
    if s.is_axis_aligned() {
        return Shape::Box(s.image_bbox(b));
    }
    let d = b.dim();
    let edges: Vec<Vec<f64>> = (0..d)
        .filter(|&k| b.max[k] > b.min[k])
        .map(|k| {
            let mut v = vec![0.0; d];
            v[k] = b.max[k] - b.min[k];
            linear(s, &v)
        })
        .collect();
    let corner = s.apply(&b.min);
    match edges.len() {
        0 => Shape::Point(corner),
        1 => {
            let end: Vec<f64> = corner.iter().zip(&edges[0]).map(|(a, e)| a + e).collect();
            Shape::Segment(corner, end)
        }
        _ => Shape::Parallelotope { corner, edges },
    }
}

fn primitive_shape(p: &Primitive) -> Shape {
    match p {
        Primitive::Point(x) => Shape::Point(x.clone()),
        Primitive::Segment(a, b) if a == b => Shape::Point(a.clone()),
        Primitive::Segment(a, b) => Shape::Segment(a.clone(), b.clone()),
        Primitive::Box(b) => Shape::Box(b.clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ElementKind {
    Cylinder,
    Condensation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub shape: Shape,
    pub kind: ElementKind,
    /// Generating path `γ`.
    pub path: Path,
}

/// A finite union covering `K_i^C` at resolution `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySet {
    pub vertex: usize,
    pub resolution: f64,
    pub elements: Vec<Element>,
}

impl GeometrySet {
    /// Image of every element under `s`.
    pub fn map(&self, s: &Similarity) -> GeometrySet {
        GeometrySet {
            vertex: self.vertex,
            resolution: self.resolution * s.ratio,
            elements: self
                .elements
                .iter()
                .map(|e| Element { shape: e.shape.map(s), kind: e.kind, path: e.path.clone() })
                .collect(),
        }
    }

    pub fn cylinders(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.kind == ElementKind::Cylinder)
    }
}

/// On-disk cache of cylinder antichains keyed by spec hash and resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AntichainCache {
    pub dir: PathBuf,
    pub spec_hash: String,
}

#[derive(Serialize, Deserialize)]
struct CachedAntichain {
    vertex: usize,
    resolution: f64,
    paths: Vec<Vec<usize>>,
}

impl AntichainCache {
    pub fn new(dir: impl Into<PathBuf>, spec_json: &str) -> Self {
        let digest = Sha256::digest(spec_json.as_bytes());
        let spec_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        AntichainCache { dir: dir.into(), spec_hash }
    }

    fn file(&self, vertex: usize, r: f64) -> PathBuf {
        self.dir.join(format!("{}-{vertex}-{:016x}.json", self.spec_hash, r.to_bits()))
    }

    fn load(&self, vertex: usize, r: f64) -> Option<Vec<Path>> {
        let text = fs::read_to_string(self.file(vertex, r)).ok()?;
        let c: CachedAntichain = serde_json::from_str(&text).ok()?;
        (c.vertex == vertex && c.resolution == r).then(|| c.paths.into_iter().map(Path::new).collect())
    }

    fn store(&self, vertex: usize, r: f64, paths: &[Path]) {
        let c = CachedAntichain { vertex, resolution: r, paths: paths.iter().map(|p| p.edges.clone()).collect() };
        // the cache is advisory; a failed write only costs a recomputation
        if fs::create_dir_all(&self.dir).is_ok() {
            if let Ok(text) = serde_json::to_string(&c) {
                let _ = fs::write(self.file(vertex, r), text);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverOptions {
    /// Grid origin; zeros by default.
    pub origin: Option<Vec<f64>>,
    /// Exact cell tests for rotated boxes; default on for `d ≤ 2`.
    pub tight: Option<bool>,
    pub include_condensation: bool,
    pub cap: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    pub cache: Option<AntichainCache>,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            origin: None,
            tight: None,
            include_condensation: true,
            cap: DEFAULT_PATH_CAP,
            jobs: 0,
            cache: None,
        }
    }
}

impl CoverOptions {
    pub fn origin_for(&self, d: usize) -> Vec<f64> {
        self.origin.clone().unwrap_or_else(|| vec![0.0; d])
    }

    pub fn tight_for(&self, d: usize) -> bool {
        self.tight.unwrap_or(d <= 2)
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        if self.jobs == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}

/// Cylinders `S_γ(X_{t(γ)})` with `r_γ · diam X_{t(γ)} ≤ r < r_{γ⁻} · diam X_{t(γ⁻)}`,
/// plus `S_γ(C_{t(γ)})` for every proper prefix `γ` of those cylinders.
pub fn generate(graph: &MwGraph, vertex: usize, r: f64, opts: &CoverOptions) -> Result<GeometrySet> {
    if vertex >= graph.vertex_count() {
        return Err(Error::InvalidInput(format!("no vertex with index {vertex}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("resolution must be positive, got {r}")));
    }
    if let Some(cache) = &opts.cache {
        if let Some(paths) = cache.load(vertex, r) {
            return Ok(from_cylinder_paths(graph, vertex, r, paths, opts.include_condensation));
        }
    }
    let stops = |ratio: f64, at: usize| ratio * graph.vertices[at].seed.diam() <= r * (1.0 + RATIO_REL_TOL);
    let mut elements = Vec::new();
    let mut stack = vec![(Path::default(), Similarity::identity(graph.dimension), vertex)];
    while let Some((path, sim, at)) = stack.pop() {
        if elements.len() >= opts.cap {
            return Err(Error::ResourceCap { what: "covering elements", cap: opts.cap });
        }
        if stops(sim.ratio, at) {
            elements.push(Element {
                shape: image_of_box(&sim, &graph.vertices[at].seed),
                kind: ElementKind::Cylinder,
                path,
            });
            continue;
        }
        if opts.include_condensation {
            for prim in &graph.condensation[at] {
                elements.push(Element {
                    shape: primitive_shape(prim).map(&sim),
                    kind: ElementKind::Condensation,
                    path: path.clone(),
                });
            }
        }
        for &e in graph.edges_from(at).iter().rev() {
            let mut next = path.edges.clone();
            next.push(e);
            stack.push((Path::new(next), sim.compose(&graph.edges[e].map), graph.edges[e].to));
        }
    }
    if let Some(cache) = &opts.cache {
        let paths: Vec<Path> =
            elements.iter().filter(|e| e.kind == ElementKind::Cylinder).map(|e| e.path.clone()).collect();
        cache.store(vertex, r, &paths);
    }
    Ok(GeometrySet { vertex, resolution: r, elements })
}

fn from_cylinder_paths(graph: &MwGraph, vertex: usize, r: f64, paths: Vec<Path>, condensation: bool) -> GeometrySet {
    let mut elements = Vec::new();
    let mut prefixes: HashSet<Vec<usize>> = HashSet::default();
    for p in &paths {
        for k in 0..p.len() {
            prefixes.insert(p.edges[..k].to_vec());
        }
    }
    if condensation {
        let mut sorted: Vec<_> = prefixes.into_iter().collect();
        sorted.sort();
        for pre in sorted {
            let path = Path::new(pre);
            let at = path.terminal(graph).unwrap_or(vertex);
            let sim = path.similarity(graph);
            for prim in &graph.condensation[at] {
                elements.push(Element {
                    shape: primitive_shape(prim).map(&sim),
                    kind: ElementKind::Condensation,
                    path: path.clone(),
                });
            }
        }
    }
    for p in paths {
        let at = p.terminal(graph).unwrap_or(vertex);
        let sim = p.similarity(graph);
        elements.push(Element {
            shape: image_of_box(&sim, &graph.vertices[at].seed),
            kind: ElementKind::Cylinder,
            path: p,
        });
    }
    GeometrySet { vertex, resolution: r, elements }
}

fn snap_floor(x: f64, origin: f64, r: f64) -> i64 {
    ((x - origin) / r + tol(x, origin, r)).floor() as i64
}

/// Cell range `[lo, hi]` met by the interval `[a, b]` along one axis.
pub fn interval_cells(a: f64, b: f64, origin: f64, r: f64) -> (i64, i64) {
    let (sa, sb) = ((a - origin) / r, (b - origin) / r);
    let lo = snap_floor(a, origin, r);
    let ta = tol(a.abs().max(b.abs()), origin, r);
    if sb - sa <= ta {
        return (lo, lo);
    }
    let hi = (sb - tol(b, origin, r)).ceil() as i64 - 1;
    (lo, hi.max(lo))
}

fn point_cell(p: &[f64], origin: &[f64], r: f64) -> Cell {
    p.iter().zip(origin).map(|(x, o)| snap_floor(*x, *o, r)).collect()
}

fn box_cells(b: &Aabb, origin: &[f64], r: f64, out: &mut HashSet<Cell>) {
    let ranges: SmallVec<[(i64, i64); 3]> =
        (0..b.dim()).map(|k| interval_cells(b.min[k], b.max[k], origin[k], r)).collect();
    insert_ranges(&ranges, out);
}

fn insert_ranges(ranges: &[(i64, i64)], out: &mut HashSet<Cell>) {
    let mut cur: Cell = ranges.iter().map(|x| x.0).collect();
    loop {
        out.insert(cur.clone());
        let mut k = 0;
        loop {
            if k == ranges.len() {
                return;
            }
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                break;
            }
            cur[k] = ranges[k].0;
            k += 1;
        }
    }
}

/// Parameters in `(0, 1)` where the segment crosses a grid hyperplane.
fn segment_crossings(a: &[f64], b: &[f64], origin: &[f64], r: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    for k in 0..a.len() {
        let (sa, sb) = ((a[k] - origin[k]) / r, (b[k] - origin[k]) / r);
        let eps = tol(a[k].abs().max(b[k].abs()), origin[k], r);
        if (sb - sa).abs() <= eps {
            continue;
        }
        let (lo, hi) = (sa.min(sb), sa.max(sb));
        let first = (lo + eps).floor() as i64 + 1;
        let last = (hi - eps).ceil() as i64 - 1;
        for m in first..=last {
            ts.push((m as f64 - sa) / (sb - sa));
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    ts
}

fn segment_cells(a: &[f64], b: &[f64], origin: &[f64], r: f64, out: &mut HashSet<Cell>) -> Result<()> {
    let ts = segment_crossings_capped(a, b, origin, r)?;
    let mut prev = 0.0;
    for t in ts.into_iter().chain(std::iter::once(1.0)) {
        let mid = 0.5 * (prev + t);
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + mid * (y - x)).collect();
        out.insert(point_cell(&p, origin, r));
        prev = t;
    }
    Ok(())
}

fn segment_crossings_capped(a: &[f64], b: &[f64], origin: &[f64], r: f64) -> Result<Vec<f64>> {
    let estimate: f64 = a.iter().zip(b).map(|(x, y)| ((x - y).abs() / r).ceil()).sum();
    if estimate > SEGMENT_TRAVERSAL_CAP as f64 {
        return Err(Error::ResourceCap { what: "segment traversal", cap: SEGMENT_TRAVERSAL_CAP });
    }
    Ok(segment_crossings(a, b, origin, r))
}

/// Positive-area overlap of a planar parallelotope with a square cell,
/// by separating axes.
fn parallelotope_meets_cell(corners: &[Vec<f64>], normals: &[[f64; 2]], lo: [f64; 2], r: f64) -> bool {
    let cell = [[lo[0], lo[1]], [lo[0] + r, lo[1]], [lo[0], lo[1] + r], [lo[0] + r, lo[1] + r]];
    normals.iter().all(|n| {
        let proj = |p: &[f64]| n[0] * p[0] + n[1] * p[1];
        let (pmin, pmax) = corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
            let x = proj(c);
            (a.min(x), b.max(x))
        });
        let (cmin, cmax) = cell.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
            let x = proj(c);
            (a.min(x), b.max(x))
        });
        let scale = lo[0].abs().max(lo[1].abs()) + r;
        let slack = (SNAP * r + COORD_EPS * (scale + 1.0)) * (n[0].abs() + n[1].abs());
        pmin < cmax - slack && cmin < pmax - slack
    })
}

fn parallelotope_cells(
    corner: &[f64],
    edges: &[Vec<f64>],
    origin: &[f64],
    r: f64,
    tight: bool,
    out: &mut HashSet<Cell>,
) {
    let bbox = Shape::Parallelotope { corner: corner.to_vec(), edges: edges.to_vec() }.bbox();
    if !(tight && corner.len() == 2 && edges.len() == 2) {
        box_cells(&bbox, origin, r, out);
        return;
    }
    let corners: Vec<Vec<f64>> = (0..4).map(|m| parallelotope_point(corner, edges, m)).collect();
    let normals: Vec<[f64; 2]> =
        [[1.0, 0.0], [0.0, 1.0]].into_iter().chain(edges.iter().map(|e| [-e[1], e[0]])).collect();
    let (x0, x1) = interval_cells(bbox.min[0], bbox.max[0], origin[0], r);
    let (y0, y1) = interval_cells(bbox.min[1], bbox.max[1], origin[1], r);
    for i in x0..=x1 {
        for j in y0..=y1 {
            let lo = [origin[0] + i as f64 * r, origin[1] + j as f64 * r];
            if parallelotope_meets_cell(&corners, &normals, lo, r) {
                out.insert(smallvec![i, j]);
            }
        }
    }
}

fn rasterize(shape: &Shape, origin: &[f64], r: f64, tight: bool, out: &mut HashSet<Cell>) -> Result<()> {
    match shape {
        Shape::Box(b) => box_cells(b, origin, r, out),
        Shape::Parallelotope { corner, edges } => parallelotope_cells(corner, edges, origin, r, tight, out),
        Shape::Segment(a, b) => segment_cells(a, b, origin, r, out)?,
        Shape::Point(p) => {
            out.insert(point_cell(p, origin, r));
        }
    }
    Ok(())
}

/// Cells of side `r` met by the union of the set.
pub fn cells(set: &GeometrySet, r: f64, origin: &[f64], tight: bool) -> Result<HashSet<Cell>> {
    set.elements
        .par_iter()
        .try_fold(HashSet::default, |mut acc, e| rasterize(&e.shape, origin, r, tight, &mut acc).map(|_| acc))
        .try_reduce(HashSet::default, |mut a, b| {
            if a.len() < b.len() {
                return Ok(b.into_iter().chain(a).collect());
            }
            a.extend(b);
            Ok(a)
        })
}

/// `N̂_r` of a single set.
pub fn count(set: &GeometrySet, r: f64, origin: &[f64], tight: bool) -> Result<u64> {
    Ok(cells(set, r, origin, tight)?.len() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub per_vertex: Vec<u64>,
    pub total: u64,
}

/// Per-vertex `N̂_r(K_i^C)` and the count of the union `K^C`.
pub fn count_all(graph: &MwGraph, r: f64, opts: &CoverOptions) -> Result<Counts> {
    let origin = opts.origin_for(graph.dimension);
    let tight = opts.tight_for(graph.dimension);
    opts.install(|| {
        let mut union: HashSet<Cell> = HashSet::default();
        let mut per_vertex = Vec::with_capacity(graph.vertex_count());
        for v in 0..graph.vertex_count() {
            let c = vertex_cells(graph, v, r, opts, &origin, tight)?;
            per_vertex.push(c.len() as u64);
            if union.is_empty() {
                union = c;
            } else {
                union.extend(c);
            }
        }
        Ok(Counts { per_vertex, total: union.len() as u64 })
    })
}

/// `N̂_r(K_i^C)` for one vertex.
pub fn count_vertex(graph: &MwGraph, vertex: usize, r: f64, opts: &CoverOptions) -> Result<u64> {
    let origin = opts.origin_for(graph.dimension);
    let tight = opts.tight_for(graph.dimension);
    opts.install(|| Ok(vertex_cells(graph, vertex, r, opts, &origin, tight)?.len() as u64))
}

/// Subtrees handed to the thread pool when streaming.
const STREAM_SPLIT: usize = 256;

/// Cells of `K_v^C` at resolution `r`. Without an antichain cache the path
/// tree is walked once and rasterized on the fly, so no element is stored.
fn vertex_cells(
    graph: &MwGraph,
    vertex: usize,
    r: f64,
    opts: &CoverOptions,
    origin: &[f64],
    tight: bool,
) -> Result<HashSet<Cell>> {
    if opts.cache.is_some() {
        let set = generate(graph, vertex, r, opts)?;
        return cells(&set, r, origin, tight);
    }
    if vertex >= graph.vertex_count() {
        return Err(Error::InvalidInput(format!("no vertex with index {vertex}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("resolution must be positive, got {r}")));
    }
    let emitted = AtomicUsize::new(0);
    let walk = Walk { graph, r, opts, origin, tight, emitted: &emitted };
    let mut base = HashSet::default();
    let mut frontier = vec![(Similarity::identity(graph.dimension), vertex)];
    while !frontier.is_empty() && frontier.len() < STREAM_SPLIT {
        let mut next = Vec::new();
        for (sim, at) in frontier {
            walk.visit(sim, at, &mut base, &mut next)?;
        }
        frontier = next;
    }
    let parts = frontier
        .into_par_iter()
        .try_fold(HashSet::default, |mut acc, (sim, at)| walk.subtree(sim, at, &mut acc).map(|_| acc))
        .try_reduce(HashSet::default, |mut a, b| {
            if a.len() < b.len() {
                return Ok(b.into_iter().chain(a).collect());
            }
            a.extend(b);
            Ok(a)
        })?;
    if base.len() < parts.len() {
        let mut parts = parts;
        parts.extend(base);
        return Ok(parts);
    }
    base.extend(parts);
    Ok(base)
}

struct Walk<'a> {
    graph: &'a MwGraph,
    r: f64,
    opts: &'a CoverOptions,
    origin: &'a [f64],
    tight: bool,
    emitted: &'a AtomicUsize,
}

impl Walk<'_> {
    fn emit(&self, shape: &Shape, out: &mut HashSet<Cell>) -> Result<()> {
        if self.emitted.fetch_add(1, Ordering::Relaxed) >= self.opts.cap {
            return Err(Error::ResourceCap { what: "covering elements", cap: self.opts.cap });
        }
        rasterize(shape, self.origin, self.r, self.tight, out)
    }

    /// [`Walk::emit`] for the image of a box under a signed permutation,
    /// without building the shape.
    fn emit_axis_box(&self, sim: &Similarity, seed: &Aabb, out: &mut HashSet<Cell>) -> Result<()> {
        if self.emitted.fetch_add(1, Ordering::Relaxed) >= self.opts.cap {
            return Err(Error::ResourceCap { what: "covering elements", cap: self.opts.cap });
        }
        let d = seed.dim();
        let mut ranges: SmallVec<[(i64, i64); 3]> = SmallVec::new();
        for i in 0..d {
            let j = (0..d).find(|&j| sim.isometry[(i, j)].abs() > 1e-12).unwrap_or(i);
            let q = sim.isometry[(i, j)];
            let a = q * seed.min[j] * sim.ratio + sim.translation[i];
            let b = q * seed.max[j] * sim.ratio + sim.translation[i];
            ranges.push(interval_cells(a.min(b), a.max(b), self.origin[i], self.r));
        }
        insert_ranges(&ranges, out);
        Ok(())
    }

    /// Rasterizes the node if it is a leaf or carries condensation, and
    /// queues its children otherwise.
    fn visit(
        &self,
        sim: Similarity,
        at: usize,
        out: &mut HashSet<Cell>,
        children: &mut Vec<(Similarity, usize)>,
    ) -> Result<()> {
        let seed = &self.graph.vertices[at].seed;
        if sim.ratio * seed.diam() <= self.r * (1.0 + RATIO_REL_TOL) {
            if sim.is_axis_aligned() {
                self.emit_axis_box(&sim, seed, out)?;
                return Ok(());
            }
            return self.emit(&image_of_box(&sim, seed), out);
        }
        if self.opts.include_condensation {
            for prim in &self.graph.condensation[at] {
                self.emit(&primitive_shape(prim).map(&sim), out)?;
            }
        }
        for &e in self.graph.edges_from(at).iter().rev() {
            children.push((sim.compose(&self.graph.edges[e].map), self.graph.edges[e].to));
        }
        Ok(())
    }

    fn subtree(&self, sim: Similarity, at: usize, out: &mut HashSet<Cell>) -> Result<()> {
        let mut stack = vec![(sim, at)];
        while let Some((sim, at)) = stack.pop() {
            self.visit(sim, at, out, &mut stack)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub r: f64,
    /// Period index `n` and phase `y` with `t = nτ + y`, in lattice mode.
    pub n: Option<i64>,
    pub y: Option<f64>,
    pub per_vertex: Vec<u64>,
    pub total: u64,
    /// `N̂_r(K_i^C) e^{-s₀t}` per vertex.
    pub vertex_ratios: Vec<f64>,
    /// `N̂_r(K^C) e^{-s₀t}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringProfile {
    pub s0: f64,
    pub samples: Vec<ProfileSample>,
    pub grid_origin: Vec<f64>,
    pub counting_mode: String,
    pub period: Option<f64>,
    pub y_grid: Option<Vec<f64>>,
}

impl CoveringProfile {
    /// True when `N̂` never increases as `r` increases.
    pub fn is_monotone(&self) -> bool {
        let mut s: Vec<&ProfileSample> = self.samples.iter().collect();
        s.sort_by(|a, b| a.r.total_cmp(&b.r));
        s.windows(2)
            .all(|w| w[1].total <= w[0].total && w[1].per_vertex.iter().zip(&w[0].per_vertex).all(|(a, b)| a <= b))
    }

    /// `max N̂_{r′} / N̂_r` over sample pairs with `r < r′`, per vertex and
    /// total; 1 exactly when the profile is monotone. Grid counts are not
    /// monotone in general (a cell boundary can split a set that a finer
    /// grid covers with one cell), but one `r`-cell meets at most `2^d`
    /// cells of side `r′ ≥ r`.
    pub fn monotonicity_defect(&self) -> f64 {
        let mut s: Vec<&ProfileSample> = self.samples.iter().collect();
        s.sort_by(|a, b| a.r.total_cmp(&b.r));
        let mut worst: f64 = 1.0;
        for (k, fine) in s.iter().enumerate() {
            for coarse in &s[k + 1..] {
                worst = worst.max(coarse.total as f64 / fine.total as f64);
                for (a, b) in coarse.per_vertex.iter().zip(&fine.per_vertex) {
                    worst = worst.max(*a as f64 / *b as f64);
                }
            }
        }
        worst
    }

    /// Samples with phase index `j` of the `y`-grid, ordered by `n`.
    pub fn phase(&self, j: usize) -> Vec<&ProfileSample> {
        let Some(y) = self.y_grid.as_ref().and_then(|g| g.get(j)) else {
            return Vec::new();
        };
        let mut out: Vec<&ProfileSample> = self.samples.iter().filter(|s| s.y == Some(*y)).collect();
        out.sort_by_key(|s| s.n);
        out
    }
}

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    pub t_min: f64,
    pub t_max: f64,
    /// Uniform mode: number of `t` samples. Lattice mode: `y`-samples per period.
    pub samples: usize,
    /// Lattice span `τ`; samples at `t = nτ + y` when given.
    pub period: Option<f64>,
    pub cover: CoverOptions,
}

/// Uniform `t`-grid, or `nτ + y` with `nτ ∈ [t_min, t_max]` in lattice mode.
pub fn sample_times(opts: &ProfileOptions) -> Result<Vec<(f64, Option<i64>, Option<f64>)>> {
    if !(opts.t_max >= opts.t_min) || opts.samples == 0 {
        return Err(Error::InvalidInput("need t_max ≥ t_min and at least one sample".into()));
    }
    Ok(match opts.period {
        None => {
            let m = opts.samples;
            (0..m)
                .map(|k| {
                    let t = if m == 1 {
                        opts.t_min
                    } else {
                        opts.t_min + (opts.t_max - opts.t_min) * k as f64 / (m - 1) as f64
                    };
                    (t, None, None)
                })
                .collect()
        }
        Some(tau) => {
            if !(tau > 0.0) {
                return Err(Error::InvalidInput("period must be positive".into()));
            }
            let n0 = (opts.t_min / tau - 1e-9).ceil() as i64;
            let n1 = (opts.t_max / tau + 1e-9).floor() as i64;
            let ys: Vec<f64> = (0..opts.samples).map(|j| j as f64 * tau / opts.samples as f64).collect();
            (n0..=n1).flat_map(|n| ys.iter().map(move |&y| (lattice_time(y, n, tau), Some(n), Some(y)))).collect()
        }
    })
}

/// `y + nτ`, computed identically wherever lattice times are formed.
pub fn lattice_time(y: f64, n: i64, tau: f64) -> f64 {
    y + n as f64 * tau
}

/// Covering profile of every vertex and of the union.
pub fn profile(graph: &MwGraph, s0: f64, opts: &ProfileOptions) -> Result<CoveringProfile> {
    let times = sample_times(opts)?;
    let mut samples = Vec::with_capacity(times.len());
    for (t, n, y) in times {
        let r = (-t).exp();
        let c = count_all(graph, r, &opts.cover)?;
        let w = (-s0 * t).exp();
        samples.push(ProfileSample {
            t,
            r,
            n,
            y,
            vertex_ratios: c.per_vertex.iter().map(|&k| k as f64 * w).collect(),
            ratio: c.total as f64 * w,
            per_vertex: c.per_vertex,
            total: c.total,
        });
    }
    let y_grid = opts.period.map(|tau| (0..opts.samples).map(|j| j as f64 * tau / opts.samples as f64).collect());
    Ok(CoveringProfile {
        s0,
        samples,
        grid_origin: opts.cover.origin_for(graph.dimension),
        counting_mode: "grid".into(),
        period: opts.period,
        y_grid,
    })
}

/// Exact grid count of one primitive at resolution `r`, as a float so that
/// very fine resolutions do not overflow.
pub fn primitive_count(p: &Primitive, r: f64, origin: &[f64]) -> f64 {
    match p {
        Primitive::Point(_) => 1.0,
        Primitive::Box(b) => (0..b.dim())
            .map(|k| {
                let (lo, hi) = interval_cells(b.min[k], b.max[k], origin[k], r);
                (hi - lo + 1) as f64
            })
            .product(),
        Primitive::Segment(a, b) => {
            let estimate: f64 = a.iter().zip(b).map(|(x, y)| ((x - y).abs() / r).ceil()).sum();
            if estimate <= EXACT_SEGMENT_COUNT as f64 {
                // a segment never re-enters a cell: one cell per distinct crossing, plus one
                segment_crossings(a, b, origin, r).len() as f64 + 1.0
            } else {
                // one cell plus one per hyperplane crossing; corner hits are negligible here
                1.0 + (0..a.len())
                    .map(|k| {
                        let (lo, hi) = interval_cells(a[k].min(b[k]), a[k].max(b[k]), origin[k], r);
                        (hi - lo) as f64
                    })
                    .sum::<f64>()
            }
        }
    }
}

/// Exact grid count of a primitive, saturating at `u64::MAX`.
pub fn condensation_covering(p: &Primitive, r: f64, origin: &[f64]) -> u64 {
    let c = primitive_count(p, r, origin);
    if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c as u64
    }
}

/// Grid count of the union of a vertex's condensation primitives: exact when
/// small, the sum of the per-primitive counts otherwise.
fn condensation_union_count(prims: &[Primitive], r: f64, origin: &[f64]) -> f64 {
    let sum: f64 = prims.iter().map(|p| primitive_count(p, r, origin)).sum();
    if prims.len() <= 1 || sum > 1e6 {
        return sum;
    }
    let mut out = HashSet::default();
    for p in prims {
        if rasterize(&primitive_shape(p), origin, r, true, &mut out).is_err() {
            return sum;
        }
    }
    out.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum CondensationIntegral {
    Finite(f64),
    Infinite,
    Inconclusive,
}

/// Mesh for the numerical condensation integral.
const INTEGRAL_MESH: f64 = 0.01;

/// `∫₀^∞ e^{-s₀t} N̂_{e^{-t}}(C_i) dt`, classified by comparing the largest
/// primitive dimension `k` with `s₀`.
pub fn condensation_integral(graph: &MwGraph, vertex: usize, s0: f64) -> CondensationIntegral {
    let prims = &graph.condensation[vertex];
    if prims.is_empty() {
        return CondensationIntegral::Finite(0.0);
    }
    let k = prims.iter().map(Primitive::minkowski_dim).max().unwrap_or(0) as f64;
    if (k - s0).abs() <= 1e-9 {
        return CondensationIntegral::Inconclusive;
    }
    if k > s0 {
        return CondensationIntegral::Infinite;
    }
    let origin = vec![0.0; graph.dimension];
    let gap = s0 - k;
    let horizon = (40.0 / gap).min(400.0);
    let steps = (horizon / INTEGRAL_MESH).ceil() as usize;
    let mut total = 0.0;
    for m in 0..steps {
        let (a, b) = (m as f64 * INTEGRAL_MESH, (m + 1) as f64 * INTEGRAL_MESH);
        let n = condensation_union_count(prims, (-(0.5 * (a + b))).exp(), &origin);
        total += n * ((-s0 * a).exp() - (-s0 * b).exp()) / s0;
    }
    let end = steps as f64 * INTEGRAL_MESH;
    let tail = condensation_union_count(prims, (-end).exp(), &origin) * (-s0 * end).exp() / gap;
    CondensationIntegral::Finite(total + tail)
}

/// Memoized `N̂_r(K_v^C)`, keyed by vertex and the exact bits of `r`.
pub struct CountCache<'a> {
    graph: &'a MwGraph,
    opts: &'a CoverOptions,
    memo: HashMap<(usize, u64), u64>,
}

impl<'a> CountCache<'a> {
    pub fn new(graph: &'a MwGraph, opts: &'a CoverOptions) -> Self {
        CountCache { graph, opts, memo: HashMap::new() }
    }

    pub fn get(&mut self, vertex: usize, r: f64) -> Result<u64> {
        if let Some(&c) = self.memo.get(&(vertex, r.to_bits())) {
            return Ok(c);
        }
        let c = count_vertex(self.graph, vertex, r, self.opts)?;
        self.memo.insert((vertex, r.to_bits()), c);
        Ok(c)
    }
}

/// `L*` and the corrected forcing term `L` sampled on a `t`-grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LStar {
    pub t: Vec<f64>,
    /// `L_i*(t)` per vertex, per grid point.
    pub l_star: Vec<Vec<f64>>,
    /// `L_i(t) = −L_i*(t) e^{-s₀t} + Σ_{e ∈ E_i, t < log r_e^{-1}} f*_{t(e)}(t − log r_e^{-1}) r_e^{s₀}`.
    pub l: Vec<Vec<f64>>,
    /// `f_i*(t) = N̂_{e^{-t}}(K_i^C) e^{-s₀t}`.
    pub f_star: Vec<Vec<f64>>,
}

impl LStar {
    /// `L_i` as step functions: value at grid point `k` holds until point `k+1`
    /// and the last value until `end`.
    pub fn forcing(&self, end: f64) -> Result<Vec<StepFunction>> {
        self.l.iter().map(|vals| StepFunction::from_grid(&self.t, vals, end)).collect()
    }
}

/// Measures `L*` from grid counts, using `N̂_r(S_e A) = N̂_{r/r_e}(A)`.
pub fn l_star(graph: &MwGraph, s0: f64, grid: &[f64], opts: &CoverOptions) -> Result<LStar> {
    let mut cache = CountCache::new(graph, opts);
    l_star_with(&mut cache, s0, grid)
}

pub fn l_star_with(cache: &mut CountCache<'_>, s0: f64, grid: &[f64]) -> Result<LStar> {
    let graph = cache.graph;
    let n = graph.vertex_count();
    let mut out =
        LStar { t: grid.to_vec(), l_star: vec![Vec::new(); n], l: vec![Vec::new(); n], f_star: vec![Vec::new(); n] };
    for &t in grid {
        let r = (-t).exp();
        let w = (-s0 * t).exp();
        for i in 0..n {
            let own = cache.get(i, r)?;
            out.f_star[i].push(own as f64 * w);
            if t < 0.0 {
                out.l_star[i].push(0.0);
                out.l[i].push(0.0);
                continue;
            }
            let mut children = 0u64;
            let mut small_t = 0.0;
            for &e in graph.edges_from(i) {
                let edge = &graph.edges[e];
                let c = cache.get(edge.to, r / edge.ratio())?;
                children += c;
                if t < -edge.ratio().ln() {
                    // f*_j(t − log r_e^{-1}) r_e^{s₀} = N̂_{r/r_e}(K_j^C) e^{-s₀t}
                    small_t += c as f64 * w;
                }
            }
            let ls = children as f64 - own as f64;
            out.l_star[i].push(ls);
            out.l[i].push(-ls * w + small_t);
        }
    }
    Ok(out)
}

/// Boundary-neighbourhood counts `e^{-s₀t} N̂_{e^{-t}}(K_i^C ∩ [∂U_i]_{e^{-t}})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryDiagnostic {
    pub t: Vec<f64>,
    pub counts: Vec<u64>,
    pub weighted: Vec<f64>,
    /// Trapezoid integral of `weighted` over the grid.
    pub partial_integral: f64,
}

fn cell_distance_to_boundary(cell: &[i64], origin: &[f64], r: f64, u: &Aabb) -> f64 {
    let d = cell.len();
    let lo: SmallVec<[f64; 3]> = (0..d).map(|k| origin[k] + cell[k] as f64 * r).collect();
    let hi: SmallVec<[f64; 3]> = lo.iter().map(|x| x + r).collect();
    let inside = (0..d).all(|k| lo[k] >= u.min[k] && hi[k] <= u.max[k]);
    if inside {
        (0..d).map(|k| (lo[k] - u.min[k]).min(u.max[k] - hi[k])).fold(f64::INFINITY, f64::min)
    } else {
        (0..d).map(|k| (u.min[k] - hi[k]).max(lo[k] - u.max[k]).max(0.0).powi(2)).sum::<f64>().sqrt()
    }
}

pub fn boundary_diagnostic(
    graph: &MwGraph,
    vertex: usize,
    s0: f64,
    grid: &[f64],
    opts: &CoverOptions,
) -> Result<BoundaryDiagnostic> {
    let origin = opts.origin_for(graph.dimension);
    let tight = opts.tight_for(graph.dimension);
    let u = &graph.open_sets[vertex];
    let mut counts = Vec::with_capacity(grid.len());
    let mut weighted = Vec::with_capacity(grid.len());
    for &t in grid {
        let r = (-t).exp();
        let cs = opts.install(|| vertex_cells(graph, vertex, r, opts, &origin, tight))?;
        let c = cs.iter().filter(|c| cell_distance_to_boundary(c, &origin, r, u) <= r * (1.0 + SNAP)).count() as u64;
        counts.push(c);
        weighted.push(c as f64 * (-s0 * t).exp());
    }
    let partial_integral =
        grid.windows(2).zip(weighted.windows(2)).map(|(t, w)| 0.5 * (t[1] - t[0]) * (w[0] + w[1])).sum();
    Ok(BoundaryDiagnostic { t: grid.to_vec(), counts, weighted, partial_integral })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::{Separation, Vertex};
    use crate::spectral::solve_s0;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn cantor_with(prims: Vec<Primitive>) -> MwGraph {
        let g = cantor();
        MwGraph::new(1, g.vertices, g.edges, vec![prims], Separation::Scosc, None)
    }

    fn opts() -> CoverOptions {
        CoverOptions::default()
    }

    #[test]
    fn cantor_cylinders_at_depth_three() {
        let r = 3f64.powi(-3);
        let set = generate(&cantor(), 0, r, &opts()).unwrap();
        assert_eq!(set.elements.len(), 8);
        for e in &set.elements {
            let Shape::Box(b) = &e.shape else { panic!() };
            assert!((b.max[0] - b.min[0] - r).abs() < 1e-15);
            assert_eq!(e.path.len(), 3);
        }
    }

    #[test]
    fn coarse_resolution_is_the_seed_box() {
        let set = generate(&cantor(), 0, 2.0, &opts()).unwrap();
        assert_eq!(set.elements.len(), 1);
        assert_eq!(set.elements[0].shape, Shape::Box(interval(0.0, 1.0)));
        assert!(set.elements[0].path.is_empty());
    }

    #[test]
    fn point_condensation_structure() {
        let g = cantor_with(vec![Primitive::Point(vec![0.5])]);
        let set = generate(&g, 0, 3f64.powi(-3), &opts()).unwrap();
        let points: Vec<_> = set.elements.iter().filter(|e| e.kind == ElementKind::Condensation).collect();
        // one per internal node at depths 0, 1, 2: 1 + 2 + 4
        assert_eq!(points.len(), 7);
        assert!(points.iter().any(|e| e.path.is_empty() && e.shape == Shape::Point(vec![0.5])));
    }

    #[test]
    fn exact_cantor_counts() {
        for n in 1..=6 {
            let r = 3f64.powi(-n);
            assert_eq!(count_vertex(&cantor(), 0, r, &opts()).unwrap(), 1 << n);
        }
    }

    #[test]
    fn segment_and_point_counts() {
        let seg = Primitive::Segment(vec![0.0], vec![1.0]);
        assert_eq!(condensation_covering(&seg, 0.1, &[0.0]), 10);
        let pt = Primitive::Point(vec![0.37]);
        for r in [1.0, 0.1, 1e-5] {
            assert_eq!(condensation_covering(&pt, r, &[0.0]), 1);
        }
        let b = Primitive::Box(Aabb::new(vec![0.0, 0.0], vec![1.0, 0.5]));
        assert_eq!(condensation_covering(&b, 0.25, &[0.0, 0.0]), 8);
        // segment in the plane along a grid line counts the row above it
        let s2 = Primitive::Segment(vec![0.0, 0.3], vec![1.0, 0.3]);
        assert_eq!(condensation_covering(&s2, 0.1, &[0.0, 0.0]), 10);
        // diagonal through grid corners: one cell per step
        let diag = Primitive::Segment(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(condensation_covering(&diag, 0.25, &[0.0, 0.0]), 4);
    }

    #[test]
    fn condensation_integrals() {
        let s_cantor = 2f64.ln() / 3f64.ln();
        let g = cantor_with(vec![Primitive::Point(vec![0.5])]);
        match condensation_integral(&g, 0, s_cantor) {
            CondensationIntegral::Finite(v) => assert!((v - 1.0 / s_cantor).abs() < 1e-9, "{v}"),
            other => panic!("{other:?}"),
        }
        let g = cantor_with(vec![Primitive::Segment(vec![1.0 / 3.0], vec![2.0 / 3.0])]);
        assert_eq!(condensation_integral(&g, 0, s_cantor), CondensationIntegral::Infinite);
        let s_big = 3f64.ln() / 2f64.ln();
        let seg = cantor_with(vec![Primitive::Segment(vec![0.0], vec![1.0])]);
        match condensation_integral(&seg, 0, s_big) {
            CondensationIntegral::Finite(v) => {
                // N̂ = ⌈e^t⌉ ≈ e^t: ∫ e^{(1−s)t} dt = 1/(s − 1) plus a bounded excess
                let lower = 1.0 / (s_big - 1.0);
                assert!(v >= lower - 1e-6 && v <= lower + 1.0 / s_big, "{v}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(condensation_integral(&cantor(), 0, s_cantor), CondensationIntegral::Finite(0.0));
        assert_eq!(condensation_integral(&seg, 0, 1.0), CondensationIntegral::Inconclusive);
    }

    #[test]
    fn cantor_profile_is_flat_on_the_lattice() {
        let g = cantor();
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let tau = 3f64.ln();
        let p = profile(
            &g,
            s0,
            &ProfileOptions { t_min: tau, t_max: 8.0 * tau, samples: 1, period: Some(tau), cover: opts() },
        )
        .unwrap();
        assert_eq!(p.samples.len(), 8);
        for s in &p.samples {
            assert!((s.ratio - 1.0).abs() < 1e-12, "{s:?}");
        }
        assert!(p.is_monotone());
    }

    #[test]
    fn consecutive_ratios_are_comparable() {
        let g = two_ratio_quarter();
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let p = profile(&g, s0, &ProfileOptions { t_min: 1.0, t_max: 9.0, samples: 33, period: None, cover: opts() })
            .unwrap();
        let dt = 8.0 / 32.0;
        for w in p.samples.windows(2) {
            let f = w[1].ratio / w[0].ratio;
            let bound = 3f64 * (s0 * dt).exp();
            assert!(f <= bound && 1.0 / f <= bound);
        }
    }

    #[test]
    fn l_star_vanishes_for_aligned_cantor() {
        let g = cantor();
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let tau = 3f64.ln();
        let grid: Vec<f64> = (1..8).map(|n| n as f64 * tau).collect();
        let ls = l_star(&g, s0, &grid, &opts()).unwrap();
        assert!(ls.l_star[0].iter().all(|&x| x == 0.0));
        let neg = l_star(&g, s0, &[-1.0], &opts()).unwrap();
        assert_eq!(neg.l_star[0], vec![0.0]);
    }

    #[test]
    fn l_star_bounded_by_single_point() {
        let g = cantor_with(vec![Primitive::Point(vec![0.5])]);
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let tau = 3f64.ln();
        let grid: Vec<f64> =
            (0..6).flat_map(|n| (0..8).map(move |j| lattice_time(j as f64 * tau / 8.0, n, tau))).collect();
        let ls = l_star(&g, s0, &grid, &opts()).unwrap();
        for (&t, &x) in grid.iter().zip(&ls.l_star[0]) {
            // at grid-aligned scales the halves contribute exactly and the point adds one cell
            if (t / tau - (t / tau).round()).abs() < 1e-12 && t > 0.0 {
                assert_eq!(x, -1.0, "t = {t}");
            }
        }
    }

    #[test]
    fn cantor_boundary_counts() {
        let g = cantor();
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let tau = 3f64.ln();
        let grid: Vec<f64> = (1..8).map(|n| n as f64 * tau).collect();
        let d = boundary_diagnostic(&g, 0, s0, &grid, &opts()).unwrap();
        assert!(d.counts.iter().all(|&c| c <= 2));
        assert!(d.partial_integral <= 2.0 / s0);
        let empty = boundary_diagnostic(&g, 0, s0, &[], &opts()).unwrap();
        assert!(empty.counts.is_empty() && empty.partial_integral == 0.0);
    }

    #[test]
    fn boundary_integral_saturates_for_points_and_grows_along_edges() {
        // in d = 1 the boundary is two points, so a filled segment only meets a few cells near it
        let g = cantor_with(vec![Primitive::Segment(vec![0.0], vec![1.0])]);
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let d = boundary_diagnostic(&g, 0, s0, &grid, &opts()).unwrap();
        assert!(d.counts.iter().all(|&c| c <= 4));

        // two maps of ratio 1/3 along the top of the unit square, segment along the bottom edge
        let id = DMatrix::identity(2, 2);
        let mk = |name: &str, tx: f64| crate::graph::Edge {
            id: name.into(),
            from: 0,
            to: 0,
            map: Similarity::new(1.0 / 3.0, id.clone(), DVector::from_vec(vec![tx, 2.0 / 3.0])),
            ratio_rational: Some((1, 3)),
        };
        let g = MwGraph::new(
            2,
            vec![Vertex { id: "Q".into(), seed: Aabb::new(vec![0.0, 0.0], vec![1.0, 1.0]) }],
            vec![mk("a", 0.0), mk("b", 2.0 / 3.0)],
            vec![vec![Primitive::Segment(vec![0.0, 0.0], vec![1.0, 0.0])]],
            Separation::Scosc,
            None,
        );
        let s0 = solve_s0(&g, 1e-12).unwrap().s0;
        let short: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let long: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let a = boundary_diagnostic(&g, 0, s0, &short, &opts()).unwrap();
        let b = boundary_diagnostic(&g, 0, s0, &long, &opts()).unwrap();
        // the integrand keeps growing: the second half adds more than the first
        assert!(b.partial_integral - a.partial_integral > a.partial_integral);
    }

    #[test]
    fn two_grid_counts_within_factor() {
        let g = two_vertex();
        for t in [2.0f64, 4.5, 7.0] {
            let r = (-t).exp();
            let a = count_all(&g, r, &opts()).unwrap().total as f64;
            let shifted = CoverOptions { origin: Some(vec![r / 2.0]), ..opts() };
            let b = count_all(&g, r, &shifted).unwrap().total as f64;
            assert!(a <= 3.0 * b && b <= 3.0 * a);
        }
    }

    #[test]
    fn job_count_does_not_change_counts() {
        let g = two_vertex();
        let r = (-6.0f64).exp();
        let one = count_all(&g, r, &CoverOptions { jobs: 1, ..opts() }).unwrap();
        let four = count_all(&g, r, &CoverOptions { jobs: 4, ..opts() }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = cantor_with(vec![Primitive::Point(vec![0.5])]);
        let cache = AntichainCache::new(dir.path(), "spec");
        let o = CoverOptions { cache: Some(cache), ..opts() };
        let r = 0.004;
        let first = count_vertex(&g, 0, r, &o).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        let second = count_vertex(&g, 0, r, &o).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, count_vertex(&g, 0, r, &opts()).unwrap());
    }

    fn rotated_square() -> MwGraph {
        // four corner maps of the unit square, each rotated by a quarter turn
        let rot = Similarity::rotation_2d(std::f64::consts::FRAC_PI_2);
        let mk = |id: &str, tx: f64, ty: f64| crate::graph::Edge {
            id: id.into(),
            from: 0,
            to: 0,
            map: Similarity::new(0.25, rot.clone(), DVector::from_vec(vec![tx, ty])),
            ratio_rational: Some((1, 4)),
        };
        MwGraph::new(
            2,
            vec![Vertex { id: "Q".into(), seed: Aabb::new(vec![0.0, 0.0], vec![1.0, 1.0]) }],
            vec![mk("a", 0.25, 0.0), mk("b", 1.0, 0.0), mk("c", 0.25, 0.75), mk("d", 1.0, 0.75)],
            vec![],
            Separation::Ssc,
            None,
        )
    }

    #[test]
    fn quarter_turns_count_like_axis_aligned() {
        let g = rotated_square();
        assert!(crate::graph::validate(&g).is_ok());
        for n in 1..=4 {
            let r = 4f64.powi(-n);
            assert_eq!(count_vertex(&g, 0, r, &opts()).unwrap(), 4u64.pow(n as u32));
        }
    }

    #[test]
    fn tight_mode_never_exceeds_bounding_boxes() {
        let rot = Similarity::rotation_2d(0.3);
        let s = Similarity::new(0.2, rot, DVector::from_vec(vec![0.4, 0.1]));
        let shape = Shape::Box(Aabb::new(vec![0.0, 0.0], vec![1.0, 1.0])).map(&s);
        let set = GeometrySet {
            vertex: 0,
            resolution: 0.01,
            elements: vec![Element { shape, kind: ElementKind::Cylinder, path: Path::default() }],
        };
        for r in [0.1, 0.03, 0.01] {
            let tight = count(&set, r, &[0.0, 0.0], true).unwrap();
            let loose = count(&set, r, &[0.0, 0.0], false).unwrap();
            assert!(tight <= loose && tight > 0);
            // area bound: a 0.2 square covers at least area/r² cells
            assert!(tight as f64 >= 0.04 / (r * r));
        }
    }

    #[test]
    fn nested_generation_contains_finer_union() {
        let g = two_vertex();
        let coarse = generate(&g, 0, 0.05, &opts()).unwrap();
        let fine = generate(&g, 0, 0.01, &opts()).unwrap();
        let inflate = 0.05;
        for e in fine.cylinders() {
            let b = e.shape.bbox();
            for x in [b.min[0], 0.5 * (b.min[0] + b.max[0]), b.max[0]] {
                assert!(coarse.cylinders().any(|c| {
                    let cb = c.shape.bbox();
                    x >= cb.min[0] - inflate && x <= cb.max[0] + inflate
                }));
            }
        }
    }

    proptest! {
        #[test]
        fn similarity_rescaling_is_exact(depth in 1usize..5, choice in proptest::collection::vec(0usize..2, 5), k in 2i32..6) {
            // S_γ(K) counted at r with the grid realigned at S_γ(0) equals K counted at r/r_γ
            let g = cantor();
            let path = Path::new(choice[..depth].to_vec());
            let s = path.similarity(&g);
            let r = 3f64.powi(-(depth as i32) - k) * 1.37;
            let base = generate(&g, 0, r / s.ratio, &opts()).unwrap();
            let image = base.map(&s);
            let direct = count(&base, r / s.ratio, &[0.0], true).unwrap();
            let realigned = count(&image, r, &[s.translation[0]], true).unwrap();
            prop_assert_eq!(direct, realigned);
        }

        #[test]
        fn interval_cells_contain_the_interval(a in -5.0f64..5.0, len in 0.0f64..3.0, r in 0.01f64..1.0) {
            let (lo, hi) = interval_cells(a, a + len, 0.0, r);
            prop_assert!(lo <= hi);
            prop_assert!(lo as f64 * r <= a + 1e-9 * r);
            prop_assert!((hi + 1) as f64 * r >= a + len - 1e-9 * r);
            prop_assert!(((hi - lo + 1) as f64) <= len / r + 2.0);
        }
    }

    #[test]
    fn mapped_set_is_a_set_of_cylinders() {
        let s = Similarity::new(0.5, DMatrix::identity(1, 1), DVector::from_vec(vec![0.25]));
        let set = generate(&cantor(), 0, 0.1, &opts()).unwrap().map(&s);
        assert_eq!(set.resolution, 0.05);
    }
}
