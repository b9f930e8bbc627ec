//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 validation or input failure, 2 resource cap,
//! 3 numerical failure, 4 inconclusive regime.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{analyze, AnalysisReport, AnalyzeOptions, Estimate};
use crate::covering::{profile, AntichainCache, CoverOptions, CoveringProfile, ProfileOptions};
use crate::error::{Error, Result};
use crate::graph::{validate, Aabb, Edge, MwGraph, Separation, Similarity, Vertex};
use crate::lattice::{classify, classify_graph, cycle_log_ratios, DEFAULT_EPS};
use crate::renewal::{
    limit_value, renewal_solve, uniform_y_grid, AtomicMeasure, MatrixMeasure, RenewalLimit, StepFunction,
};
use crate::spec_file::SpecFile;
use crate::spectral::solve_s0;

pub const CACHE_ENV: &str = "GDCOVER_CACHE";

#[derive(Debug, Parser)]
#[command(name = "gdcover", version, about = "Covering asymptotics of graph-directed self-similar sets")]
pub struct Cli {
    /// Worker threads for cell counting (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Seed for sampled diagnostics.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every structural and geometric invariant of a spec file.
    Validate { spec: PathBuf },
    /// Critical exponent s₀ and Perron data as JSON.
    Dim {
        spec: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Lattice classification of the cycle log-ratios as JSON.
    Lattice {
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Covering profile as CSV.
    Profile {
        spec: PathBuf,
        #[arg(long)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 33)]
        samples: usize,
        /// Sample at t = nτ + y, with `samples` phases per period.
        #[arg(long)]
        period: Option<f64>,
        #[command(flatten)]
        cover: CoverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a renewal equation given directly by M and L.
    Renewal {
        input: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        /// Number of convolution powers; defaults to ⌈T/λ_min⌉.
        #[arg(long)]
        truncation: Option<usize>,
        /// Phases per period for a lattice limit profile.
        #[arg(long, default_value_t = 64)]
        samples_per_period: usize,
        /// Points of the output grid on [0, T].
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// CSV of f; the limit goes next to it with suffix `.limit.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Full pipeline; one JSON report.
    Analyze {
        spec: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Directory for companion CSVs.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Full pipeline written to a directory: report.json plus CSVs.
    Report {
        spec: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args, Clone)]
pub struct CoverArgs {
    /// Grid origin, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid_origin: Option<Vec<f64>>,
    /// Exact cell tests for rotated boxes (default: on in d ≤ 2).
    #[arg(long)]
    pub tight: Option<bool>,
    /// Count K_i only, without condensation images.
    #[arg(long)]
    pub no_condensation: bool,
}

#[derive(Debug, Args, Clone)]
pub struct AnalysisArgs {
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 61)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub y_samples: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Mesh of the measured forcing term in the dense cross-check.
    #[arg(long, default_value_t = 0.05)]
    pub mesh: f64,
    #[command(flatten)]
    pub cover: CoverArgs,
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn csv_row(cells: impl IntoIterator<Item = String>) -> String {
    let mut line = cells.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn load(spec: &FsPath) -> Result<(SpecFile, MwGraph)> {
    crate::spec_file::load_graph(spec)
}

fn load_valid(spec: &FsPath) -> Result<(SpecFile, MwGraph)> {
    let (s, g) = load(spec)?;
    validate(&g).into_result()?;
    Ok((s, g))
}

fn cover_options(args: &CoverArgs, jobs: usize, spec: &SpecFile) -> Result<CoverOptions> {
    let cache = match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => Some(AntichainCache::new(PathBuf::from(dir), &spec.to_json()?)),
        _ => None,
    };
    if let Some(o) = &args.grid_origin {
        if o.len() != spec.dimension {
            return Err(Error::InvalidInput(format!("grid origin needs {} coordinates", spec.dimension)));
        }
    }
    Ok(CoverOptions {
        origin: args.grid_origin.clone(),
        tight: args.tight,
        include_condensation: !args.no_condensation,
        jobs,
        cache,
        ..CoverOptions::default()
    })
}

fn write_out(path: Option<&FsPath>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io { path: p.display().to_string(), source }),
        None => out.write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn profile_csv(graph: &MwGraph, p: &CoveringProfile) -> String {
    let mut s = csv_row(
        ["t".to_string(), "r".to_string()]
            .into_iter()
            .chain(graph.vertices.iter().map(|v| format!("N_{}", v.id)))
            .chain(["N_total".to_string(), "ratio".to_string()]),
    );
    for x in &p.samples {
        s.push_str(&csv_row(
            [fmt_g12(x.t), fmt_g12(x.r)]
                .into_iter()
                .chain(x.per_vertex.iter().map(u64::to_string))
                .chain([x.total.to_string(), fmt_g12(x.ratio)]),
        ));
    }
    s
}

fn estimate_csv(graph: &MwGraph, e: &Estimate) -> String {
    let ids = || graph.vertices.iter().map(|v| format!("h_{}", v.id));
    match e {
        Estimate::Constant { h, total, .. } => {
            let mut s = csv_row(ids().chain(["total".to_string()]));
            s.push_str(&csv_row(h.iter().map(|x| fmt_g12(*x)).chain([fmt_g12(*total)])));
            s
        }
        Estimate::Periodic { y, h, total, drift, .. } => {
            let mut s =
                csv_row(["y".to_string()].into_iter().chain(ids()).chain(["total".to_string(), "drift".to_string()]));
            for j in 0..y.len() {
                s.push_str(&csv_row(
                    [fmt_g12(y[j])]
                        .into_iter()
                        .chain(h[j].iter().map(|x| fmt_g12(*x)))
                        .chain([fmt_g12(total[j]), fmt_g12(drift[j])]),
                ));
            }
            s
        }
        Estimate::Growth { step_factors, rate, .. } => {
            let mut s = csv_row(["step".to_string(), "factor".to_string(), "fitted_rate".to_string()]);
            for (k, f) in step_factors.iter().enumerate() {
                s.push_str(&csv_row([k.to_string(), fmt_g12(*f), fmt_g12(*rate)]));
            }
            s
        }
    }
}

fn limit_csv(limit: &RenewalLimit, n: usize) -> String {
    let cols = (1..=n).map(|i| format!("limit_{i}"));
    match limit {
        RenewalLimit::Constant { value } => {
            let mut s = csv_row(cols);
            s.push_str(&csv_row(value.iter().map(|x| fmt_g12(*x))));
            s
        }
        RenewalLimit::Periodic { y, values, .. } => {
            let mut s = csv_row(["y".to_string()].into_iter().chain(cols));
            for (y, v) in y.iter().zip(values) {
                s.push_str(&csv_row([fmt_g12(*y)].into_iter().chain(v.iter().map(|x| fmt_g12(*x)))));
            }
            s
        }
    }
}

fn report_csvs(graph: &MwGraph, rep: &AnalysisReport) -> Vec<(&'static str, String)> {
    let mut files =
        vec![("profile.csv", profile_csv(graph, &rep.profile)), ("estimate.csv", estimate_csv(graph, &rep.estimate))];
    if let Some(cc) = &rep.cross_check {
        let mut s = csv_row(
            ["t".to_string()]
                .into_iter()
                .chain(graph.vertices.iter().flat_map(|v| [format!("L_star_{}", v.id), format!("L_{}", v.id)])),
        );
        for (k, t) in cc.forcing.t.iter().enumerate() {
            s.push_str(&csv_row([fmt_g12(*t)].into_iter().chain(
                (0..graph.vertex_count()).flat_map(|i| [fmt_g12(cc.forcing.l_star[i][k]), fmt_g12(cc.forcing.l[i][k])]),
            )));
        }
        files.push(("forcing.csv", s));
        files.push(("predicted.csv", limit_csv(&cc.predicted, graph.vertex_count())));
    }
    let mut s = csv_row(["vertex".to_string(), "t".to_string(), "count".to_string(), "weighted".to_string()]);
    for (i, b) in rep.diagnostics.boundary.iter().enumerate() {
        for k in 0..b.t.len() {
            s.push_str(&csv_row([
                graph.vertices[i].id.clone(),
                fmt_g12(b.t[k]),
                b.counts[k].to_string(),
                fmt_g12(b.weighted[k]),
            ]));
        }
    }
    files.push(("boundary.csv", s));
    files
}

/// Reduced input for `renewal`: `M` as atoms per entry and `L` as step pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalInput {
    /// `M[i][j]` is a list of `[location, weight]` atoms.
    #[serde(rename = "M")]
    pub m: Vec<Vec<Vec<[f64; 2]>>>,
    /// One step function per component.
    #[serde(rename = "L")]
    pub l: Vec<StepSpec>,
    /// Lattice span; inferred from the cycles of `M` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl RenewalInput {
    pub fn measure(&self) -> Result<MatrixMeasure> {
        let n = self.m.len();
        if self.m.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInput("M must be square".into()));
        }
        let entries = self
            .m
            .iter()
            .flatten()
            .map(|atoms| AtomicMeasure::new(atoms.iter().map(|a| (a[0], a[1])).collect()))
            .collect::<Result<Vec<_>>>()?;
        MatrixMeasure::from_entries(n, entries)
    }

    pub fn forcing(&self) -> Result<Vec<StepFunction>> {
        self.l.iter().map(|s| StepFunction::new(s.breakpoints.clone(), s.values.clone())).collect()
    }

    /// Classifies the group generated by the cycle sums of `M`'s atoms.
    pub fn lattice(&self, m: &MatrixMeasure, eps: f64) -> Result<crate::lattice::LatticeResult> {
        if let Some(tau) = self.tau {
            let values: Vec<f64> = m.locations().collect();
            let mut r = classify(&values, None, eps)?;
            r.kind = crate::lattice::LatticeKind::Lattice;
            r.tau = Some(tau);
            r.label = format!("lattice with span {tau} (given)");
            return Ok(r);
        }
        let g = atom_graph(m)?;
        let values: Vec<f64> = cycle_log_ratios(&g).into_iter().map(|(_, v, _)| v).collect();
        classify(&values, None, eps)
    }
}

/// A graph with one edge per atom, so that its cycles are those of `M`.
fn atom_graph(m: &MatrixMeasure) -> Result<MwGraph> {
    let n = m.dim();
    let vertices = (0..n).map(|i| Vertex { id: format!("{}", i + 1), seed: Aabb::new(vec![0.0], vec![1.0]) }).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for &(loc, _) in m.get(i, j).atoms() {
                if !(loc > 0.0) {
                    return Err(Error::InvalidInput("atoms must lie at positive locations".into()));
                }
                edges.push(Edge {
                    id: format!("{}-{}-{}", i + 1, j + 1, edges.len()),
                    from: j,
                    to: i,
                    map: Similarity::new((-loc).exp(), nalgebra::DMatrix::identity(1, 1), nalgebra::DVector::zeros(1)),
                    ratio_rational: None,
                });
            }
        }
    }
    Ok(MwGraph::new(1, vertices, edges, vec![], Separation::None, None))
}

fn run_renewal(
    input: &FsPath,
    horizon: f64,
    truncation: Option<usize>,
    per_period: usize,
    samples: usize,
    eps: f64,
    output: Option<&FsPath>,
    out: &mut dyn Write,
) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|source| Error::Io { path: input.display().to_string(), source })?;
    let doc: RenewalInput = serde_json::from_str(&text)?;
    let m = doc.measure()?;
    let l = doc.forcing()?;
    let lambda =
        m.min_location().filter(|&x| x > 0.0).ok_or_else(|| Error::InvalidInput("M has no positive atoms".into()))?;
    let k = truncation.unwrap_or((horizon / lambda).ceil() as usize);
    let sol = renewal_solve(&m, &l, horizon, k)?;
    let lattice = doc.lattice(&m, eps)?;
    let y = lattice.tau.filter(|_| lattice.is_lattice()).map(|tau| uniform_y_grid(tau, per_period));
    let limit = limit_value(&m, &l, &lattice, y.as_deref())?;
    let n = m.dim();
    let mut csv = csv_row(["t".to_string()].into_iter().chain((1..=n).map(|i| format!("f_{i}"))));
    let samples = samples.max(2);
    for s in 0..samples {
        let t = horizon * s as f64 / (samples - 1) as f64;
        // the solution is defined on [0, T); report the left limit at T
        let te = if s == samples - 1 { t * (1.0 - 1e-15) } else { t };
        csv.push_str(&csv_row([fmt_g12(t)].into_iter().chain(sol.f.iter().map(|f| fmt_g12(f.eval(te))))));
    }
    let lim = limit_csv(&limit, n);
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    match output {
        Some(p) => {
            write_out(Some(p), &csv, out)?;
            let mut lp = p.as_os_str().to_owned();
            lp.push(".limit.csv");
            write_out(Some(FsPath::new(&lp)), &lim, out)
        }
        None => {
            let mut s = csv;
            s.push('\n');
            s.push_str(&lim);
            write_out(None, &s, out)
        }
    }
}

fn analysis_options(a: &AnalysisArgs, jobs: usize, seed: u64, spec: &SpecFile) -> Result<AnalyzeOptions> {
    Ok(AnalyzeOptions {
        t_min: a.tmin,
        t_max: a.tmax,
        samples: a.samples,
        y_samples: a.y_samples,
        eps: a.eps,
        cover: cover_options(&a.cover, jobs, spec)?,
        dense_mesh: a.mesh,
        seed,
        ..AnalyzeOptions::default()
    })
}

fn write_csvs(dir: &FsPath, files: Vec<(&'static str, String)>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    for (name, text) in files {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|source| Error::Io { path: p.display().to_string(), source })?;
    }
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Validate { spec } => {
            let (_, g) = load(spec)?;
            let report = validate(&g);
            let mut text = String::new();
            for c in &report.checks {
                let _ = writeln!(
                    text,
                    "{} {}{}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) }
                );
            }
            write_out(None, &text, out)?;
            report.into_result().map(|_| ())
        }
        Command::Dim { spec, tol } => {
            let (_, g) = load_valid(spec)?;
            write_out(None, &to_json(&solve_s0(&g, *tol)?)?, out)
        }
        Command::Lattice { spec, eps } => {
            let (_, g) = load_valid(spec)?;
            write_out(None, &to_json(&classify_graph(&g, *eps)?)?, out)
        }
        Command::Profile { spec, tmin, tmax, samples, period, cover, output } => {
            let (sf, g) = load_valid(spec)?;
            let s0 = solve_s0(&g, 1e-12)?.s0;
            let opts = ProfileOptions {
                t_min: *tmin,
                t_max: *tmax,
                samples: *samples,
                period: *period,
                cover: cover_options(cover, cli.jobs, &sf)?,
            };
            let p = profile(&g, s0, &opts)?;
            write_out(output.as_deref(), &profile_csv(&g, &p), out)
        }
        Command::Renewal { input, horizon, truncation, samples_per_period, samples, eps, output } => {
            run_renewal(input, *horizon, *truncation, *samples_per_period, *samples, *eps, output.as_deref(), out)
        }
        Command::Analyze { spec, analysis, output, csv_dir } => {
            let (sf, g) = load_valid(spec)?;
            let opts = analysis_options(analysis, cli.jobs, cli.seed, &sf)?;
            let rep = analyze(&g, sf.name.clone(), &opts)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(dir) = csv_dir {
                write_csvs(dir, report_csvs(&g, &rep))?;
            }
            write_out(output.as_deref(), &to_json(&rep)?, out)
        }
        Command::Report { spec, analysis, out_dir } => {
            let (sf, g) = load_valid(spec)?;
            let opts = analysis_options(analysis, cli.jobs, cli.seed, &sf)?;
            let rep = analyze(&g, sf.name.clone(), &opts)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            let mut files = report_csvs(&g, &rep);
            files.push(("report.json", to_json(&rep)?));
            write_csvs(out_dir, files)?;
            let _ = writeln!(out, "{}", out_dir.join("report.json").display());
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.7737056), "0.7737056");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(2f64.ln() / 3f64.ln()), "0.630929753571");
        assert_eq!(fmt_g12(1e-7), "1e-7");
        assert_eq!(fmt_g12(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_g12(-2.5), "-2.5");
    }

    #[test]
    fn renewal_input_lattice_inference() {
        let doc: RenewalInput = serde_json::from_str(
            r#"{"M": [[[[0.6931471805599453, 0.5], [1.0986122886681098, 0.5]]]], "L": [{"breakpoints": [0, 0.6931471805599453], "values": [1, 0]}]}"#,
        )
        .unwrap();
        let m = doc.measure().unwrap();
        assert!(!doc.lattice(&m, 1e-9).unwrap().is_lattice());
        let doc: RenewalInput = serde_json::from_str(r#"{"M": [[[[1.0986122886681098, 1.0]]]], "L": [{"breakpoints": [0, 1.0986122886681098], "values": [1, 0]}]}"#).unwrap();
        let m = doc.measure().unwrap();
        let l = doc.lattice(&m, 1e-9).unwrap();
        assert!((l.tau.unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["gdcover", "frobnicate"], &mut o, &mut e), 1);
        assert_eq!(run(["gdcover", "--help"], &mut o, &mut e), 0);
        assert_eq!(run(["gdcover", "dim", "/no/such/file.json"], &mut o, &mut e), 1);
    }
}
