//! The closed group generated by cycle log-contractions `−log r_γ`, either
//! all of `ℝ` or a lattice `τℤ`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{simple_cycles, MwGraph, Path};

pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LatticeKind {
    Dense,
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Exact,
    Floating,
}

/// A rational `p/q` in lowest terms is not required; factorization handles it.
pub type Rational = (u64, u64);

/// Exact description of `τ = multiplier · log(base)` when decided exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactTau {
    pub multiplier: u64,
    /// Prime exponents of `base`, with `base > 1`.
    pub base_factors: BTreeMap<u64, i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    /// Edge ids of the cycle, when the generator came from a graph.
    pub cycle: Vec<String>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeResult {
    pub kind: LatticeKind,
    pub tau: Option<f64>,
    pub mode: Mode,
    pub generators: Vec<Generator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_tau: Option<ExactTau>,
    /// Human-readable verdict; floating dense results read "numerically dense".
    pub label: String,
}

impl LatticeResult {
    pub fn is_lattice(&self) -> bool {
        self.kind == LatticeKind::Lattice
    }
}

/// One entry per canonical simple cycle: the cycle, `−log r_γ`, and its
/// exact ratio when every edge on it carries one.
pub fn cycle_log_ratios(graph: &MwGraph) -> Vec<(Path, f64, Option<Rational>)> {
    simple_cycles(graph)
        .into_iter()
        .map(|c| {
            let value = -c.ratio(graph).ln();
            let exact = c
                .edges
                .iter()
                .map(|&e| graph.edges[e].ratio_rational)
                .collect::<Option<Vec<_>>>()
                .and_then(|rs| product_of_rationals(&rs));
            (c, value, exact)
        })
        .collect()
}

fn product_of_rationals(rs: &[Rational]) -> Option<Rational> {
    rs.iter().try_fold((1u64, 1u64), |(p, q), &(a, b)| {
        let (p, q) = (p.checked_mul(a)?, q.checked_mul(b)?);
        let g = gcd(p, q);
        Some((p / g, q / g))
    })
}

/// Classifies the group generated by `values`.
///
/// With `exact` given (one rational per value, `value = −log(p/q)`), the
/// decision is made on prime-exponent vectors: the group is a lattice iff all
/// vectors are parallel. Otherwise a real Euclid runs with cutoff
/// `eps · max(values)`.
pub fn classify(values: &[f64], exact: Option<&[Rational]>, eps: f64) -> Result<LatticeResult> {
    if values.is_empty() {
        return Err(Error::InvalidInput("lattice classification needs at least one generator".into()));
    }
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("generators must be positive and finite".into()));
    }
    let generators = values.iter().map(|&value| Generator { cycle: Vec::new(), value }).collect();
    match exact {
        Some(rs) if rs.len() == values.len() => classify_exact(rs, generators),
        Some(_) => Err(Error::InvalidInput("one exact ratio per generator required".into())),
        None => Ok(classify_floating(values, eps, generators)),
    }
}

/// Runs [`cycle_log_ratios`] then [`classify`], in exact mode when every
/// edge ratio is rational.
pub fn classify_graph(graph: &MwGraph, eps: f64) -> Result<LatticeResult> {
    let cycles = cycle_log_ratios(graph);
    let values: Vec<f64> = cycles.iter().map(|c| c.1).collect();
    let exact: Option<Vec<Rational>> =
        if graph.all_ratios_rational() { cycles.iter().map(|c| c.2).collect() } else { None };
    let mut res = classify(&values, exact.as_deref(), eps)?;
    for (g, (c, _, _)) in res.generators.iter_mut().zip(&cycles) {
        g.cycle = c.ids(graph);
    }
    Ok(res)
}

fn classify_exact(rs: &[Rational], generators: Vec<Generator>) -> Result<LatticeResult> {
    // −log(p/q) = Σ_p (exp_q(p) − exp_p(p)) log p, so the exponent vector of q/p
    let vectors: Vec<BTreeMap<u64, i64>> = rs
        .iter()
        .map(|&(p, q)| {
            if p == 0 || q == 0 || p >= q {
                return Err(Error::InvalidInput(format!("exact ratio {p}/{q} not in (0,1)")));
            }
            let mut v = factorize(q);
            for (prime, e) in factorize(p) {
                *v.entry(prime).or_insert(0) -= e;
            }
            v.retain(|_, e| *e != 0);
            Ok(v)
        })
        .collect::<Result<_>>()?;

    // primitive direction of the first vector, oriented so log(base) > 0
    let first = &vectors[0];
    let g0 = first.values().fold(0u64, |g, &e| gcd(g, e.unsigned_abs()));
    let base: BTreeMap<u64, i64> = first.iter().map(|(&p, &e)| (p, e / g0 as i64)).collect();
    let log_base: f64 = base.iter().map(|(&p, &e)| e as f64 * (p as f64).ln()).sum();
    let mut multipliers = Vec::with_capacity(vectors.len());
    for v in &vectors {
        match parallel_multiple(v, &base) {
            Some(k) => multipliers.push(k),
            None => {
                return Ok(LatticeResult {
                    kind: LatticeKind::Dense,
                    tau: None,
                    mode: Mode::Exact,
                    generators,
                    exact_tau: None,
                    label: "dense (multiplicatively independent ratios)".into(),
                })
            }
        }
    }
    let m = multipliers.iter().fold(0u64, |g, &k| gcd(g, k.unsigned_abs()));
    let (base, log_base) =
        if log_base < 0.0 { (base.into_iter().map(|(p, e)| (p, -e)).collect(), -log_base) } else { (base, log_base) };
    let tau = m as f64 * log_base;
    Ok(LatticeResult {
        kind: LatticeKind::Lattice,
        tau: Some(tau),
        mode: Mode::Exact,
        generators,
        exact_tau: Some(ExactTau { multiplier: m, base_factors: base }),
        label: format!("lattice, tau = {tau}"),
    })
}

/// `Some(k)` with `v = k · base`, if any.
fn parallel_multiple(v: &BTreeMap<u64, i64>, base: &BTreeMap<u64, i64>) -> Option<i64> {
    if v.keys().ne(base.keys()) {
        return None;
    }
    let (&p0, &b0) = base.iter().next()?;
    let e0 = v[&p0];
    if e0 % b0 != 0 {
        return None;
    }
    let k = e0 / b0;
    base.iter().all(|(p, &b)| v[p] == k * b).then_some(k)
}

fn classify_floating(values: &[f64], eps: f64, generators: Vec<Generator>) -> LatticeResult {
    let max = values.iter().copied().fold(0.0, f64::max);
    let cutoff = eps * max;
    let mut g = values[0];
    for &v in &values[1..] {
        g = real_gcd(g, v, cutoff);
    }
    let max_multiplier = eps.powf(-0.5);
    let consistent = g > cutoff
        && values.iter().all(|&v| {
            let k = (v / g).round();
            k <= max_multiplier && (v - k * g).abs() <= cutoff
        });
    if consistent {
        // least-squares refinement of τ against the integer multipliers
        let (num, den) = values.iter().fold((0.0, 0.0), |(n, d), &v| {
            let k = (v / g).round();
            (n + k * v, d + k * k)
        });
        let tau = num / den;
        LatticeResult {
            kind: LatticeKind::Lattice,
            tau: Some(tau),
            mode: Mode::Floating,
            generators,
            exact_tau: None,
            label: format!("lattice, tau = {tau}"),
        }
    } else {
        LatticeResult {
            kind: LatticeKind::Dense,
            tau: None,
            mode: Mode::Floating,
            generators,
            exact_tau: None,
            label: "numerically dense".into(),
        }
    }
}

/// Euclid's algorithm on reals with symmetric remainders, stopping once the
/// remainder falls to `cutoff`.
pub fn real_gcd(a: f64, b: f64, cutoff: f64) -> f64 {
    let (mut x, mut y) = (a.max(b), a.min(b));
    while y > cutoff {
        let r = (x - y * (x / y).round()).abs();
        x = y;
        y = r;
    }
    x
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factorize(mut n: u64) -> BTreeMap<u64, i64> {
    let mut out = BTreeMap::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        while n.is_multiple_of(p) {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        *out.entry(n).or_insert(0) += 1;
    }
    out
}

/// True when every atom location lies within `tol` of `τℤ`.
pub fn on_lattice(locations: impl IntoIterator<Item = f64>, tau: f64, tol: f64) -> bool {
    locations.into_iter().all(|x| (x - tau * (x / tau).round()).abs() <= tol)
}
