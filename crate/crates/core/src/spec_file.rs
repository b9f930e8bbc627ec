//! JSON spec files.

use std::collections::{BTreeMap, HashSet};
use std::path::Path as FsPath;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Aabb, Edge, MwGraph, Primitive, Separation, Similarity, Vertex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    #[serde(rename = "box")]
    pub seed: BoxSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_rational: Option<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<Vec<Vec<f64>>>,
    /// Rotation angle in radians, `d = 2` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PrimitiveSpec {
    Point { at: Vec<f64> },
    Segment { from: Vec<f64>, to: Vec<f64> },
    Box { min: Vec<f64>, max: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationSpec {
    #[serde(rename = "SSC")]
    Ssc,
    #[serde(rename = "SOSC")]
    Sosc,
    #[serde(rename = "SCOSC")]
    Scosc,
    #[serde(rename = "none")]
    None,
}

impl From<SeparationSpec> for Separation {
    fn from(s: SeparationSpec) -> Self {
        match s {
            SeparationSpec::Ssc => Separation::Ssc,
            SeparationSpec::Sosc => Separation::Sosc,
            SeparationSpec::Scosc => Separation::Scosc,
            SeparationSpec::None => Separation::None,
        }
    }
}

impl From<Separation> for SeparationSpec {
    fn from(s: Separation) -> Self {
        match s {
            Separation::Ssc => SeparationSpec::Ssc,
            Separation::Sosc => SeparationSpec::Sosc,
            Separation::Scosc => SeparationSpec::Scosc,
            Separation::None => SeparationSpec::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub condensation: BTreeMap<String, Vec<PrimitiveSpec>>,
    pub separation: SeparationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_sets: Option<BTreeMap<String, BoxSpec>>,
}

fn check_len(what: &str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::Validation(format!("{what} has {} coordinates, expected {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation(format!("{what} has a non-finite coordinate")));
    }
    Ok(())
}

fn to_aabb(what: &str, b: &BoxSpec, d: usize) -> Result<Aabb> {
    check_len(what, &b.min, d)?;
    check_len(what, &b.max, d)?;
    Ok(Aabb::new(b.min.clone(), b.max.clone()))
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Pretty JSON; field order is fixed so output is byte-stable.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the graph. Structural problems (unknown ids, wrong vector
    /// lengths, missing ratios) are validation errors; geometric invariants
    /// are left to [`crate::graph::validate`].
    pub fn to_graph(&self) -> Result<MwGraph> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        let mut seen = HashSet::new();
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            if !seen.insert(v.id.as_str()) {
                return Err(Error::Validation(format!("duplicate vertex id {:?}", v.id)));
            }
            vertices
                .push(Vertex { id: v.id.clone(), seed: to_aabb(&format!("box of vertex {:?}", v.id), &v.seed, d)? });
        }
        let index = |id: &str| -> Result<usize> {
            self.vertices
                .iter()
                .position(|v| v.id == id)
                .ok_or_else(|| Error::Validation(format!("unknown vertex id {id:?}")))
        };
        let mut edge_ids = HashSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if !edge_ids.insert(e.id.as_str()) {
                return Err(Error::Validation(format!("duplicate edge id {:?}", e.id)));
            }
            edges.push(self.edge(e, index(&e.from)?, index(&e.to)?)?);
        }
        let mut condensation = vec![Vec::new(); vertices.len()];
        for (id, prims) in &self.condensation {
            let i = index(id)?;
            for p in prims {
                let what = format!("condensation of vertex {id:?}");
                condensation[i].push(match p {
                    PrimitiveSpec::Point { at } => {
                        check_len(&what, at, d)?;
                        Primitive::Point(at.clone())
                    }
                    PrimitiveSpec::Segment { from, to } => {
                        check_len(&what, from, d)?;
                        check_len(&what, to, d)?;
                        Primitive::Segment(from.clone(), to.clone())
                    }
                    PrimitiveSpec::Box { min, max } => {
                        Primitive::Box(to_aabb(&what, &BoxSpec { min: min.clone(), max: max.clone() }, d)?)
                    }
                });
            }
        }
        let open_sets = match &self.open_sets {
            None => None,
            Some(map) => {
                let mut sets: Vec<Aabb> = vertices.iter().map(|v| v.seed.clone()).collect();
                for (id, b) in map {
                    sets[index(id)?] = to_aabb(&format!("open set of vertex {id:?}"), b, d)?;
                }
                Some(sets)
            }
        };
        Ok(MwGraph::new(d, vertices, edges, condensation, self.separation.into(), open_sets))
    }

    fn edge(&self, e: &EdgeSpec, from: usize, to: usize) -> Result<Edge> {
        let d = self.dimension;
        let what = format!("edge {:?}", e.id);
        let rational = match e.ratio_rational {
            Some([_, 0]) => return Err(Error::Validation(format!("{what}: ratio_rational has zero denominator"))),
            Some([p, q]) => Some((p, q)),
            None => None,
        };
        let ratio = match (e.ratio, rational) {
            (Some(r), Some((p, q))) => {
                let exact = p as f64 / q as f64;
                if (r - exact).abs() > 1e-12 * exact.max(1e-300) {
                    return Err(Error::Validation(format!("{what}: ratio {r} disagrees with ratio_rational {p}/{q}")));
                }
                r
            }
            (Some(r), None) => r,
            (None, Some((p, q))) => p as f64 / q as f64,
            (None, None) => return Err(Error::Validation(format!("{what}: missing ratio"))),
        };
        let isometry = match (&e.isometry, e.angle) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation(format!("{what}: give either isometry or angle, not both")))
            }
            (Some(rows), None) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Validation(format!("{what}: isometry must be {d}×{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
            (None, Some(a)) => {
                if d != 2 {
                    return Err(Error::Validation(format!("{what}: angle is only meaningful in dimension 2")));
                }
                Similarity::rotation_2d(a)
            }
            (None, None) => DMatrix::identity(d, d),
        };
        check_len(&format!("translation of {what}"), &e.translation, d)?;
        Ok(Edge {
            id: e.id.clone(),
            from,
            to,
            map: Similarity::new(ratio, isometry, DVector::from_column_slice(&e.translation)),
            ratio_rational: rational,
        })
    }

    /// Spec file describing `graph`, with isometries written out as matrices.
    pub fn from_graph(graph: &MwGraph, name: Option<String>) -> Self {
        let d = graph.dimension;
        let vid = |i: usize| graph.vertices[i].id.clone();
        let bx = |b: &Aabb| BoxSpec { min: b.min.clone(), max: b.max.clone() };
        let condensation = graph
            .condensation
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, c)| {
                let prims = c
                    .iter()
                    .map(|p| match p {
                        Primitive::Point(x) => PrimitiveSpec::Point { at: x.clone() },
                        Primitive::Segment(a, b) => PrimitiveSpec::Segment { from: a.clone(), to: b.clone() },
                        Primitive::Box(b) => PrimitiveSpec::Box { min: b.min.clone(), max: b.max.clone() },
                    })
                    .collect();
                (vid(i), prims)
            })
            .collect();
        let explicit_open = graph.open_sets.iter().zip(&graph.vertices).any(|(u, v)| *u != v.seed);
        SpecFile {
            name,
            dimension: d,
            vertices: graph.vertices.iter().map(|v| VertexSpec { id: v.id.clone(), seed: bx(&v.seed) }).collect(),
            edges: graph
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    from: vid(e.from),
                    to: vid(e.to),
                    ratio: Some(e.map.ratio),
                    ratio_rational: e.ratio_rational.map(|(p, q)| [p, q]),
                    isometry: Some((0..d).map(|i| (0..d).map(|j| e.map.isometry[(i, j)]).collect()).collect()),
                    angle: None,
                    translation: e.map.translation.iter().copied().collect(),
                })
                .collect(),
            condensation,
            separation: graph.separation.into(),
            open_sets: explicit_open
                .then(|| graph.open_sets.iter().enumerate().map(|(i, u)| (vid(i), bx(u))).collect()),
        }
    }
}

/// Reads and builds a graph from a spec file on disk.
pub fn load_graph(path: impl AsRef<FsPath>) -> Result<(SpecFile, MwGraph)> {
    let spec = SpecFile::load(path)?;
    let graph = spec.to_graph()?;
    Ok((spec, graph))
}
