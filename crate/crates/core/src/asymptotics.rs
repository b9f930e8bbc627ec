//! Regime classification, limit estimation and the renewal cross-check.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::covering::{
    boundary_diagnostic, condensation_integral, count_all, profile, BoundaryDiagnostic, CondensationIntegral,
    CountCache, CoverOptions, CoveringProfile, LStar, ProfileOptions,
};
use crate::error::{Error, Result};
use crate::graph::{common_prefix_len, sample_path_with, MwGraph, Primitive, Separation};
use crate::lattice::{classify_graph, LatticeResult};
use crate::renewal::{canonical_measure, limit_value, RenewalLimit, StepFunction};
use crate::spectral::{solve_s0, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    SmallCondensationDense,
    SmallCondensationLattice,
    LargeCondensation,
}

impl Regime {
    pub fn is_small(self) -> bool {
        self != Regime::LargeCondensation
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SmallCondensationDense => "SmallCondensation-Dense",
            Regime::SmallCondensationLattice => "SmallCondensation-Lattice",
            Regime::LargeCondensation => "LargeCondensation",
        })
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub integrals: Vec<CondensationIntegral>,
    pub warnings: Vec<String>,
}

/// Small condensation when every condensation integral is finite (split by
/// lattice kind), large when any diverges.
pub fn classify_regime(graph: &MwGraph, spectral: &SpectralData, lattice: &LatticeResult) -> Result<RegimeVerdict> {
    let integrals: Vec<CondensationIntegral> =
        (0..graph.vertex_count()).map(|i| condensation_integral(graph, i, spectral.s0)).collect();
    if let Some(i) = integrals.iter().position(|c| *c == CondensationIntegral::Inconclusive) {
        return Err(Error::Inconclusive(format!(
            "condensation dimension at vertex {:?} equals s₀ = {}",
            graph.vertices[i].id, spectral.s0
        )));
    }
    let mut warnings = Vec::new();
    let regime = if integrals.contains(&CondensationIntegral::Infinite) {
        if graph.separation != Separation::Scosc {
            warnings.push("Theorem 1.2 hypothesis not certified: SCOSC not declared".to_string());
        }
        Regime::LargeCondensation
    } else if lattice.is_lattice() {
        Regime::SmallCondensationLattice
    } else {
        Regime::SmallCondensationDense
    };
    Ok(RegimeVerdict { regime, integrals, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimate {
    /// Means over the last third of the `t`-range.
    Constant {
        h: Vec<f64>,
        total: f64,
        /// `(max − min) / mean` of each vertex ratio over the window.
        drift: Vec<f64>,
        total_drift: f64,
        /// Drift of the total ratio over each third of the range, in order.
        third_drifts: Vec<f64>,
    },
    /// Per-phase means over the last three periods.
    Periodic {
        tau: f64,
        y: Vec<f64>,
        /// `h[j][i]` is `ĥ_i(y_j)`.
        h: Vec<Vec<f64>>,
        total: Vec<f64>,
        /// Largest drift over vertices and the total, per phase.
        drift: Vec<f64>,
        /// `min_{i,y} ĥ_i(y)`.
        delta: f64,
    },
    /// Least-squares fit of `log(ratio)` against `t`.
    Growth {
        rate: f64,
        intercept: f64,
        /// Ratio of consecutive total ratios.
        step_factors: Vec<f64>,
        monotone: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub regime: Regime,
    pub estimate: Estimate,
}

impl AsymptoticReport {
    /// `ĥ_i` at phase index `j` (ignored for constant limits).
    pub fn h(&self, j: usize) -> Option<&[f64]> {
        match &self.estimate {
            Estimate::Constant { h, .. } => Some(h),
            Estimate::Periodic { h, .. } => h.get(j).map(Vec::as_slice),
            Estimate::Growth { .. } => None,
        }
    }
}

fn drift(xs: &[f64]) -> f64 {
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    (hi - lo) / mean(xs)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares line `y ≈ a + b x`, returned as `(b, a)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Minimum span for dense estimates: two decades of `r`.
pub fn dense_min_span() -> f64 {
    2.0 * 10f64.ln()
}

pub fn estimate_limit(profile: &CoveringProfile, regime: Regime) -> Result<AsymptoticReport> {
    let samples = &profile.samples;
    if samples.is_empty() {
        return Err(Error::InvalidInput("insufficient span: empty profile".into()));
    }
    let estimate = match regime {
        Regime::LargeCondensation => {
            if samples.len() < 4 {
                return Err(Error::InvalidInput("insufficient span: growth fit needs at least 4 samples".into()));
            }
            let mut s: Vec<_> = samples.iter().collect();
            s.sort_by(|a, b| a.t.total_cmp(&b.t));
            let t: Vec<f64> = s.iter().map(|p| p.t).collect();
            let logs: Vec<f64> = s.iter().map(|p| p.ratio.ln()).collect();
            let (rate, intercept) = linear_fit(&t, &logs);
            let step_factors: Vec<f64> = s.windows(2).map(|w| w[1].ratio / w[0].ratio).collect();
            let monotone = step_factors.iter().all(|&f| f > 1.0) && rate > 0.0;
            Estimate::Growth { rate, intercept, step_factors, monotone }
        }
        Regime::SmallCondensationLattice => {
            let (Some(tau), Some(y)) = (profile.period, profile.y_grid.clone()) else {
                return Err(Error::InvalidInput("lattice estimate needs a profile sampled per period".into()));
            };
            let mut h = Vec::with_capacity(y.len());
            let mut total = Vec::with_capacity(y.len());
            let mut drifts = Vec::with_capacity(y.len());
            for j in 0..y.len() {
                let phase = profile.phase(j);
                if phase.len() < 4 {
                    return Err(Error::InvalidInput(format!(
                        "insufficient span: {} periods sampled, need at least 4",
                        phase.len()
                    )));
                }
                let last = &phase[phase.len() - 3..];
                let nv = last[0].vertex_ratios.len();
                let per_vertex: Vec<Vec<f64>> =
                    (0..nv).map(|i| last.iter().map(|s| s.vertex_ratios[i]).collect()).collect();
                let totals: Vec<f64> = last.iter().map(|s| s.ratio).collect();
                let d = per_vertex.iter().map(|v| drift(v)).fold(drift(&totals), f64::max);
                h.push(per_vertex.iter().map(|v| mean(v)).collect::<Vec<_>>());
                total.push(mean(&totals));
                drifts.push(d);
            }
            let delta = h.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            Estimate::Periodic { tau, y, h, total, drift: drifts, delta }
        }
        Regime::SmallCondensationDense => {
            let t0 = samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
            let t1 = samples.iter().map(|s| s.t).fold(f64::NEG_INFINITY, f64::max);
            if t1 - t0 < dense_min_span() {
                return Err(Error::InvalidInput(format!(
                    "insufficient span: t-range {:.3} is shorter than two decades",
                    t1 - t0
                )));
            }
            let third = (t1 - t0) / 3.0;
            let window = |k: usize| -> Vec<&crate::covering::ProfileSample> {
                let (a, b) = (t0 + k as f64 * third, t0 + (k + 1) as f64 * third);
                samples.iter().filter(|s| s.t >= a - 1e-12 && (s.t < b || k == 2)).collect()
            };
            let third_drifts: Vec<f64> = (0..3)
                .map(|k| {
                    let w: Vec<f64> = window(k).iter().map(|s| s.ratio).collect();
                    if w.is_empty() {
                        f64::NAN
                    } else {
                        drift(&w)
                    }
                })
                .collect();
            let last = window(2);
            let nv = last[0].vertex_ratios.len();
            let per_vertex: Vec<Vec<f64>> =
                (0..nv).map(|i| last.iter().map(|s| s.vertex_ratios[i]).collect()).collect();
            let totals: Vec<f64> = last.iter().map(|s| s.ratio).collect();
            Estimate::Constant {
                h: per_vertex.iter().map(|v| mean(v)).collect(),
                total: mean(&totals),
                drift: per_vertex.iter().map(|v| drift(v)).collect(),
                total_drift: drift(&totals),
                third_drifts,
            }
        }
    };
    Ok(AsymptoticReport { regime, estimate })
}

/// Slope of `log N̂` against `t` on the profile (box-counting dimension).
pub fn box_count_slope(profile: &CoveringProfile) -> f64 {
    let t: Vec<f64> = profile.samples.iter().map(|s| s.t).collect();
    let logs: Vec<f64> = profile.samples.iter().map(|s| (s.total as f64).ln()).collect();
    linear_fit(&t, &logs).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub predicted: RenewalLimit,
    /// Relative discrepancy per phase (one entry for a constant limit),
    /// maximized over vertices.
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    /// Largest `|f − f*M − L|` over the sampled grid.
    pub residual: f64,
    /// `|Σ_i ĥ_i − ĥ_total| / ĥ_total`, maximized over phases.
    pub total_consistency: f64,
    pub forcing: LStar,
}

/// `t`-grid for the measured forcing term.
///
/// Lattice: `y_j + kτ` for the profile's phases and every `k` up to the last
/// sampled period. Dense: uniform mesh from 0 to the end of the profile.
fn forcing_grid(profile: &CoveringProfile, lattice: &LatticeResult, mesh: f64) -> Result<Vec<f64>> {
    let t_end = profile.samples.iter().map(|s| s.t).fold(0.0, f64::max);
    match (lattice.tau.filter(|_| lattice.is_lattice()), &profile.y_grid) {
        (Some(tau), Some(y)) => {
            let n_max = profile.samples.iter().filter_map(|s| s.n).max().unwrap_or(0);
            Ok((0..=n_max).flat_map(|k| y.iter().map(move |&y| crate::covering::lattice_time(y, k, tau))).collect())
        }
        (Some(_), None) => Err(Error::InvalidInput("lattice cross-check needs a per-period profile".into())),
        (None, _) => {
            let steps = (t_end / mesh).ceil() as usize;
            Ok((0..=steps).map(|k| k as f64 * mesh).collect())
        }
    }
}

/// Feeds the measured forcing term into the renewal limit and compares with
/// the measured estimate.
pub fn cross_check(
    graph: &MwGraph,
    spectral: &SpectralData,
    lattice: &LatticeResult,
    profile: &CoveringProfile,
    report: &AsymptoticReport,
    opts: &CoverOptions,
    dense_mesh: f64,
) -> Result<CrossCheck> {
    if !report.regime.is_small() {
        return Err(Error::InvalidInput("cross-check requires the small-condensation regime".into()));
    }
    let s0 = spectral.s0;
    let grid = forcing_grid(profile, lattice, dense_mesh)?;
    let mut cache = CountCache::new(graph, opts);
    let forcing = crate::covering::l_star_with(&mut cache, s0, &grid)?;
    let end = match lattice.tau.filter(|_| lattice.is_lattice()) {
        Some(tau) => grid.last().copied().unwrap_or(0.0) + tau,
        None => grid.last().copied().unwrap_or(0.0) + dense_mesh,
    };
    let l: Vec<StepFunction> = forcing.forcing(end)?;
    let m = canonical_measure(graph, s0);
    let predicted = limit_value(&m, &l, lattice, profile.y_grid.as_deref().filter(|_| lattice.is_lattice()))?;

    let mut discrepancy = Vec::new();
    let mut total_consistency: f64 = 0.0;
    match (&predicted, &report.estimate) {
        (RenewalLimit::Constant { value }, Estimate::Constant { h, total, .. }) => {
            discrepancy.push(rel_max(value, h));
            total_consistency = (h.iter().sum::<f64>() - total).abs() / total;
        }
        (RenewalLimit::Periodic { values, .. }, Estimate::Periodic { h, total, .. }) => {
            for ((p, m), tot) in values.iter().zip(h).zip(total) {
                discrepancy.push(rel_max(p, m));
                total_consistency = total_consistency.max((m.iter().sum::<f64>() - tot).abs() / tot);
            }
        }
        _ => return Err(Error::InvalidInput("regime mismatch between lattice data and estimate".into())),
    }
    let max_discrepancy = discrepancy.iter().copied().fold(0.0, f64::max);

    // f_i(t) − Σ_{e ∈ E_i, t ≥ ℓ_e} r_e^{s₀} f_{t(e)}(t − ℓ_e) − L_i(t), with
    // the shifted values counted afresh at e^{-(t − ℓ_e)}
    let mut residual: f64 = 0.0;
    for (k, &t) in forcing.t.iter().enumerate() {
        if t < 0.0 {
            continue;
        }
        for i in 0..graph.vertex_count() {
            let mut conv = 0.0;
            for &e in graph.edges_from(i) {
                let edge = &graph.edges[e];
                let ell = -edge.ratio().ln();
                if t >= ell {
                    let ts = t - ell;
                    let c = cache.get(edge.to, (-ts).exp())? as f64;
                    conv += edge.ratio().powf(s0) * c * (-s0 * ts).exp();
                }
            }
            residual = residual.max((forcing.f_star[i][k] - conv - forcing.l[i][k]).abs());
        }
    }
    Ok(CrossCheck { predicted, discrepancy, max_discrepancy, residual, total_consistency, forcing })
}

fn rel_max(predicted: &[f64], measured: &[f64]) -> f64 {
    predicted.iter().zip(measured).map(|(p, m)| (p - m).abs() / m.abs()).fold(0.0, f64::max)
}

/// Smallest observed `dist(S_γ(C), S_γ′(C)) / r_{γ∧γ′}` over sampled pairs of
/// distinct paths, measured between primitive defining points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationSpotCheck {
    pub pairs: usize,
    pub min_ratio: Option<f64>,
}

pub fn separation_spot_check(
    graph: &MwGraph,
    spectral: &SpectralData,
    stop_ratio: f64,
    pairs: usize,
    seed: u64,
) -> Result<SeparationSpotCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio: Option<f64> = None;
    let mut checked = 0;
    for _ in 0..pairs {
        for start in 0..graph.vertex_count() {
            let a = sample_path_with(graph, spectral, start, stop_ratio, &mut rng)?;
            let b = sample_path_with(graph, spectral, start, stop_ratio, &mut rng)?;
            let k = common_prefix_len(&a, &b);
            if k == a.len() || k == b.len() {
                continue;
            }
            let pts = |p: &crate::graph::Path| -> Vec<Vec<f64>> {
                let at = p.terminal(graph).unwrap_or(start);
                let s = p.similarity(graph);
                graph.condensation[at].iter().flat_map(defining_points).map(|x| s.apply(&x)).collect()
            };
            let (xa, xb) = (pts(&a), pts(&b));
            if xa.is_empty() || xb.is_empty() {
                continue;
            }
            let d = xa
                .iter()
                .flat_map(|x| xb.iter().map(move |y| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()))
                .fold(f64::INFINITY, f64::min);
            let prefix_ratio = crate::graph::Path::new(a.edges[..k].to_vec()).ratio(graph);
            let r = d / prefix_ratio;
            min_ratio = Some(min_ratio.map_or(r, |m| m.min(r)));
            checked += 1;
        }
    }
    Ok(SeparationSpotCheck { pairs: checked, min_ratio })
}

fn defining_points(p: &Primitive) -> Vec<Vec<f64>> {
    match p {
        Primitive::Point(x) => vec![x.clone()],
        Primitive::Segment(a, b) => vec![a.clone(), b.clone(), a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()],
        Primitive::Box(b) => b.corners(),
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    /// Dense profile samples.
    pub samples: usize,
    /// Phases per period in lattice mode.
    pub y_samples: usize,
    pub eps: f64,
    pub s0_tol: f64,
    pub cover: CoverOptions,
    pub dense_mesh: f64,
    pub seed: u64,
    /// Target cell count at the finest scale when choosing `t_max`.
    pub cell_budget: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            t_min: None,
            t_max: None,
            samples: 61,
            y_samples: 8,
            eps: crate::lattice::DEFAULT_EPS,
            s0_tol: 1e-12,
            cover: CoverOptions::default(),
            dense_mesh: 0.05,
            seed: 0,
            cell_budget: 2e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub monotone: bool,
    /// See [`CoveringProfile::monotonicity_defect`].
    pub monotonicity_defect: f64,
    /// Largest ratio between counts on the two grids (origins 0 and `r/2`).
    pub two_grid_factor: f64,
    pub boundary: Vec<BoundaryDiagnostic>,
    pub separation: Option<SeparationSpotCheck>,
    pub box_count_slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub name: Option<String>,
    pub regime: Regime,
    pub s0: f64,
    pub spectral: SpectralData,
    pub lattice: LatticeResult,
    pub condensation_integrals: Vec<CondensationIntegral>,
    pub estimate: Estimate,
    pub cross_check: Option<CrossCheck>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
    pub profile: CoveringProfile,
}

/// Default `t`-range: the finest scale is chosen so that about `budget` cells
/// are counted.
pub fn default_range(graph: &MwGraph, s0: f64, budget: f64) -> (f64, f64) {
    let k = graph.condensation.iter().flatten().map(Primitive::minkowski_dim).max().unwrap_or(0) as f64;
    let growth = s0.max(k).max(0.1);
    let t_max = budget.ln() / growth;
    (t_max / 6.0, t_max)
}

/// Runs the full pipeline.
pub fn analyze(graph: &MwGraph, name: Option<String>, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    crate::graph::validate(graph).into_result()?;
    let spectral = solve_s0(graph, opts.s0_tol)?;
    let lattice = classify_graph(graph, opts.eps)?;
    let verdict = classify_regime(graph, &spectral, &lattice)?;
    let s0 = spectral.s0;
    let (dt0, dt1) = default_range(graph, s0, opts.cell_budget);
    let (t_min, t_max) = (opts.t_min.unwrap_or(dt0), opts.t_max.unwrap_or(dt1));
    let period = lattice.tau.filter(|_| lattice.is_lattice());
    let popts = ProfileOptions {
        t_min,
        t_max,
        samples: if period.is_some() { opts.y_samples } else { opts.samples },
        period,
        cover: opts.cover.clone(),
    };
    let prof = profile(graph, s0, &popts)?;
    let report = estimate_limit(&prof, verdict.regime)?;
    let cross = if verdict.regime.is_small() {
        Some(cross_check(graph, &spectral, &lattice, &prof, &report, &opts.cover, opts.dense_mesh)?)
    } else {
        None
    };

    let mut two_grid_factor: f64 = 1.0;
    for s in &prof.samples {
        let shifted = CoverOptions { origin: Some(vec![s.r / 2.0; graph.dimension]), ..opts.cover.clone() };
        let other = count_all(graph, s.r, &shifted)?.total as f64;
        let a = s.total as f64;
        two_grid_factor = two_grid_factor.max(a / other).max(other / a);
    }
    let bgrid: Vec<f64> = prof.samples.iter().map(|s| s.t).collect();
    let boundary = (0..graph.vertex_count())
        .map(|i| boundary_diagnostic(graph, i, s0, &bgrid, &opts.cover))
        .collect::<Result<Vec<_>>>()?;
    let separation = if graph.has_condensation() {
        let stop = (-t_min).exp();
        Some(separation_spot_check(graph, &spectral, stop, 64, opts.seed)?)
    } else {
        None
    };
    let diagnostics = Diagnostics {
        monotone: prof.is_monotone(),
        monotonicity_defect: prof.monotonicity_defect(),
        two_grid_factor,
        boundary,
        separation,
        box_count_slope: box_count_slope(&prof),
    };
    Ok(AnalysisReport {
        name,
        regime: verdict.regime,
        s0,
        spectral,
        lattice,
        condensation_integrals: verdict.integrals,
        estimate: report.estimate,
        cross_check: cross,
        diagnostics,
        warnings: verdict.warnings,
        profile: prof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::ProfileSample;
    use crate::graph::fixtures::*;

    fn with_condensation(g: MwGraph, prims: Vec<Primitive>, sep: Separation) -> MwGraph {
        MwGraph::new(g.dimension, g.vertices, g.edges, vec![prims], sep, None)
    }

    fn setup(g: &MwGraph) -> (SpectralData, LatticeResult) {
        (solve_s0(g, 1e-12).unwrap(), classify_graph(g, 1e-9).unwrap())
    }

    #[test]
    fn regimes() {
        let g = cantor();
        let (s, l) = setup(&g);
        assert_eq!(classify_regime(&g, &s, &l).unwrap().regime, Regime::SmallCondensationLattice);
        let g = with_condensation(cantor(), vec![Primitive::Point(vec![0.5])], Separation::Scosc);
        assert_eq!(classify_regime(&g, &s, &l).unwrap().regime, Regime::SmallCondensationLattice);
        let seg = vec![Primitive::Segment(vec![1.0 / 3.0], vec![2.0 / 3.0])];
        let g = with_condensation(cantor(), seg.clone(), Separation::Scosc);
        let v = classify_regime(&g, &s, &l).unwrap();
        assert_eq!(v.regime, Regime::LargeCondensation);
        assert!(v.warnings.is_empty());
        let g = with_condensation(cantor(), seg, Separation::Ssc);
        let v = classify_regime(&g, &s, &l).unwrap();
        assert!(v.warnings[0].contains("Theorem 1.2 hypothesis not certified"));
        let g = two_ratio_quarter();
        let (s2, l2) = setup(&g);
        assert!(l2.is_lattice());
        assert_eq!(classify_regime(&g, &s2, &l2).unwrap().regime, Regime::SmallCondensationLattice);
    }

    #[test]
    fn boundary_case_is_inconclusive() {
        // two maps of ratio 1/2 give s₀ = 1, matching a segment
        let g = MwGraph::new(
            1,
            vec![crate::graph::Vertex { id: "I".into(), seed: interval(0.0, 1.0) }],
            vec![edge("a", 0, 0, map1(0.5, 0.0)), edge("b", 0, 0, map1(0.5, 0.5))],
            vec![vec![Primitive::Segment(vec![0.0], vec![1.0])]],
            Separation::Scosc,
            None,
        );
        let (s, l) = setup(&g);
        let err = classify_regime(&g, &s, &l).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    fn synthetic(ts: &[f64], ratios: &[f64]) -> CoveringProfile {
        CoveringProfile {
            s0: 1.0,
            samples: ts
                .iter()
                .zip(ratios)
                .map(|(&t, &q)| ProfileSample {
                    t,
                    r: (-t).exp(),
                    n: None,
                    y: None,
                    per_vertex: vec![1],
                    total: 1,
                    vertex_ratios: vec![q],
                    ratio: q,
                })
                .collect(),
            grid_origin: vec![0.0],
            counting_mode: "grid".into(),
            period: None,
            y_grid: None,
        }
    }

    #[test]
    fn dense_estimate_windows() {
        let ts: Vec<f64> = (0..=60).map(|k| k as f64 * 0.2).collect();
        let rs: Vec<f64> = ts.iter().map(|t| 2.0 + (-t).exp()).collect();
        let r = estimate_limit(&synthetic(&ts, &rs), Regime::SmallCondensationDense).unwrap();
        let Estimate::Constant { h, third_drifts, total_drift, .. } = r.estimate else { panic!() };
        assert!((h[0] - 2.0).abs() < 1e-3);
        assert!(third_drifts.windows(2).all(|w| w[1] < w[0]));
        assert!(total_drift < 1e-3);
        let short: Vec<f64> = ts.iter().map(|t| t / 10.0).collect();
        assert!(estimate_limit(&synthetic(&short, &rs), Regime::SmallCondensationDense).is_err());
        assert!(estimate_limit(&synthetic(&[], &[]), Regime::SmallCondensationDense).is_err());
    }

    #[test]
    fn growth_fit_recovers_rate() {
        let ts: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let rs: Vec<f64> = ts.iter().map(|t| 0.3 * (0.4 * t).exp()).collect();
        let r = estimate_limit(&synthetic(&ts, &rs), Regime::LargeCondensation).unwrap();
        let Estimate::Growth { rate, intercept, monotone, .. } = r.estimate else { panic!() };
        assert!((rate - 0.4).abs() < 1e-12 && (intercept - 0.3f64.ln()).abs() < 1e-12);
        assert!(monotone);
    }

    #[test]
    fn cantor_cross_check_closes() {
        let g = cantor();
        let (s, l) = setup(&g);
        let tau = l.tau.unwrap();
        let opts = ProfileOptions {
            t_min: tau,
            t_max: 8.0 * tau,
            samples: 4,
            period: Some(tau),
            cover: CoverOptions::default(),
        };
        let prof = profile(&g, s.s0, &opts).unwrap();
        let rep = estimate_limit(&prof, Regime::SmallCondensationLattice).unwrap();
        let Estimate::Periodic { h, .. } = &rep.estimate else { panic!() };
        assert!((h[0][0] - 1.0).abs() < 1e-12);
        let cc = cross_check(&g, &s, &l, &prof, &rep, &CoverOptions::default(), 0.05).unwrap();
        assert!(cc.max_discrepancy < 0.02, "{:?}", cc.discrepancy);
        assert!(cc.residual < 1e-12);
    }

    #[test]
    fn separation_spot_check_on_point_condensation() {
        let g = with_condensation(cantor(), vec![Primitive::Point(vec![0.5])], Separation::Scosc);
        let (s, _) = setup(&g);
        let sc = separation_spot_check(&g, &s, 1e-3, 32, 7).unwrap();
        assert!(sc.pairs > 0);
        assert!(sc.min_ratio.unwrap() > 0.1);
    }

    #[test]
    fn analyze_cantor() {
        let rep = analyze(&cantor(), Some("cantor".into()), &AnalyzeOptions::default()).unwrap();
        assert_eq!(rep.regime.to_string(), "SmallCondensation-Lattice");
        assert!((rep.lattice.tau.unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(rep.diagnostics.monotonicity_defect <= 2.0);
        assert!(rep.diagnostics.two_grid_factor <= 3.0);
    }
}
