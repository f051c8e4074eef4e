//! Forward propagation of singular points: time step from the speed bound,
//! ball scans for a nearby singular point, and the convex-hull quantity `α`
//! that decides whether a Lipschitz singular arc leaves a point.

use std::fmt;

use rayon::prelude::*;

use crate::characteristics::{reachable_gradients, GradientPair};
use crate::conjugate::ConjugateView;
use crate::error::{Error, Result};
use crate::hopf::{evaluate, locate_jump, MaximizerSet, SolveOptions};
use crate::numeric::{dist, golden_max, linspace, norm, product_grid};
use crate::problem::ProblemSpec;

/// Safety factor applied to the time step when tracing.
pub const DELTA_SHRINK: f64 = 1.1;

/// `δ = eps / sup_{|p| ≤ L} |H_p(p)|`; `+inf` when `H_p` vanishes on the ball.
pub fn delta_for(spec: &ProblemSpec, eps: f64) -> Result<f64> {
    delta_with_speed(spec.default_max_speed(), eps)
}

pub fn delta_with_speed(speed: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    Ok(if speed == 0.0 { f64::INFINITY } else { eps / speed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Scan nodes per axis across the ball diameter.
    pub nodes: usize,
    /// Rescan once around the best candidate with a grid one cell wide.
    pub refine: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { nodes: 21, refine: true }
    }
}

fn ball_grid(center: &[f64], radius: f64, nodes: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = center.iter().map(|&c| linspace(c - radius, c + radius, nodes)).collect();
    product_grid(&axes).into_iter().filter(|p| dist(p, center) <= radius * (1.0 + 1e-12)).collect()
}

fn scan(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    center: &[f64],
    radius: f64,
    nodes: usize,
    opts: &SolveOptions,
) -> Result<Option<MaximizerSet>> {
    let pts = ball_grid(center, radius, nodes);
    let sets = pts.par_iter().map(|x| evaluate(spec, view, t, x, opts)).collect::<Result<Vec<_>>>()?;
    let mut best: Option<MaximizerSet> = None;
    let mut consider = |m: MaximizerSet| {
        if !m.singleton && best.as_ref().is_none_or(|b| m.diameter > b.diameter) {
            best = Some(m);
        }
    };
    for m in &sets {
        consider(m.clone());
    }
    if spec.dim == 1 {
        // singular points strictly between nodes show up as maximizer jumps
        for w in sets.windows(2) {
            if w[0].singleton && w[1].singleton && dist(&w[0].representatives[0], &w[1].representatives[0]) > w[0].singleton_tol {
                if let Some(m) = locate_jump(spec, view, t, &w[0].x, &w[1].x, opts)? {
                    consider(m);
                }
            }
        }
    }
    Ok(best)
}

/// The point of `B'(center, eps)` at time `t1` with the widest `ℓ`, if any
/// point of the scan is singular.
pub fn find_singular_near(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t1: f64,
    center: &[f64],
    eps: f64,
    opts: &SolveOptions,
    scan_opts: &ScanOptions,
) -> Result<Option<MaximizerSet>> {
    if !(t1 > 0.0 && t1 < spec.horizon) {
        return Err(Error::Domain(format!("t1 = {t1} not in (0, {})", spec.horizon)));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    spec.check_point(center)?;
    let nodes = scan_opts.nodes.max(3);
    let Some(best) = scan(spec, view, t1, center, eps, nodes, opts)? else {
        return Ok(None);
    };
    if !scan_opts.refine {
        return Ok(Some(best));
    }
    let cell = 2.0 * eps / (nodes - 1) as f64;
    let mut fine = scan(spec, view, t1, &best.x, cell, nodes, opts)?.unwrap_or(best.clone());
    if dist(&fine.x, center) > eps || fine.diameter < best.diameter {
        fine = best;
    }
    Ok(Some(fine))
}

/// Polyline approximation of a forward singular arc.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPath {
    /// `(t_k, x_k)` with strictly increasing `t_k`.
    pub nodes: Vec<(f64, Vec<f64>)>,
    pub diameters: Vec<f64>,
    pub step_eps: f64,
    pub step_delta: f64,
    /// Steps that needed the widened rescan (radius `2·eps`, 4× grid).
    pub retries: usize,
    /// The scan found no singular point before `t_end`.
    pub lost: bool,
}

impl SingularPath {
    pub fn complete(&self, t_end: f64) -> bool {
        !self.lost && self.nodes.last().is_some_and(|(t, _)| (t - t_end).abs() <= 1e-12 * (1.0 + t_end.abs()))
    }
}

/// Follows a singular point forward: `t_{k+1} = t_k + δ` with
/// `δ = eps / (1.1·sup|H_p|)`, `x_{k+1}` = widest singular point in
/// `B'(x_k, eps)`. The last step is shortened to land on `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn trace(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t0: f64,
    x0: &[f64],
    eps: f64,
    t_end: f64,
    opts: &SolveOptions,
    scan_opts: &ScanOptions,
) -> Result<SingularPath> {
    let speed = spec.default_max_speed();
    let delta = delta_with_speed(speed * DELTA_SHRINK, eps)?;
    let start = evaluate(spec, view, t0, x0, opts)?;
    if start.singleton {
        return Err(Error::Precondition(format!("(t0={t0}, x0={x0:?}) is not singular (diameter {:e})", start.diameter)));
    }
    if t_end < t0 {
        return Err(Error::Precondition(format!("t_end = {t_end} precedes t0 = {t0}")));
    }
    if t_end >= spec.horizon {
        return Err(Error::Precondition(format!("t_end = {t_end} must stay below the horizon {}", spec.horizon)));
    }
    let mut path = SingularPath {
        nodes: vec![(t0, x0.to_vec())],
        diameters: vec![start.diameter],
        step_eps: eps,
        step_delta: delta,
        retries: 0,
        lost: false,
    };
    let wide = ScanOptions { nodes: 4 * (scan_opts.nodes.max(3) - 1) + 1, refine: scan_opts.refine };
    let mut t = t0;
    while t_end - t > 1e-12 * (1.0 + t_end.abs()) {
        let next = if delta.is_finite() { (t + delta).min(t_end) } else { t_end };
        let x = path.nodes.last().expect("nonempty").1.clone();
        let mut hit = find_singular_near(spec, view, next, &x, eps, opts, scan_opts)?;
        if hit.is_none() {
            hit = find_singular_near(spec, view, next, &x, 2.0 * eps, opts, &wide)?;
            if hit.is_some() {
                path.retries += 1;
            }
        }
        match hit {
            Some(m) => {
                path.nodes.push((next, m.x));
                path.diameters.push(m.diameter);
                t = next;
            }
            None => {
                path.lost = true;
                break;
            }
        }
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcVerdict {
    /// `α > 0`: a Lipschitz singular arc leaves the point.
    Strict,
    /// `α ≈ 0`: excluded when `σ*` is strictly convex.
    Degenerate,
    /// `α < 0`: the supersolution inequality fails on the hull.
    Negative,
}

impl fmt::Display for ArcVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcVerdict::Strict => "strict",
            ArcVerdict::Degenerate => "degenerate",
            ArcVerdict::Negative => "negative",
        })
    }
}

/// `p + H(q)` over sampled convex combinations of gradient pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct HullScan {
    /// `max (p + H(q))` over the hull sample, and where it is attained.
    pub alpha: f64,
    pub argmax: GradientPair,
    /// `min (p + H(q))` over the hull sample.
    pub min_margin: f64,
    /// `p_i + H(q_i)` at each pair.
    pub endpoint_values: Vec<f64>,
}

/// Samples every pairwise segment of the hull at 11 evenly spaced points plus
/// the centroid; on each segment the maximum is also polished by golden section.
pub fn hull_scan(pairs: &[GradientPair], hamiltonian: &dyn Fn(&[f64]) -> f64) -> Option<HullScan> {
    let first = pairs.first()?;
    let g = |pair: &GradientPair| pair.p + hamiltonian(&pair.q);
    let combo = |a: &GradientPair, b: &GradientPair, s: f64| GradientPair {
        p: (1.0 - s) * a.p + s * b.p,
        q: a.q.iter().zip(&b.q).map(|(x, y)| (1.0 - s) * x + s * y).collect(),
    };
    let endpoint_values: Vec<f64> = pairs.iter().map(g).collect();
    let mut best = (endpoint_values[0], first.clone());
    let mut min_margin = endpoint_values[0];
    let mut visit = |pair: GradientPair| {
        let v = g(&pair);
        min_margin = min_margin.min(v);
        if v > best.0 {
            best = (v, pair);
        }
    };
    for (i, a) in pairs.iter().enumerate() {
        visit(a.clone());
        for b in &pairs[i + 1..] {
            for k in 1..10 {
                visit(combo(a, b, k as f64 / 10.0));
            }
            let f = |s: f64| g(&combo(a, b, s));
            let (s, _) = golden_max(&f, 0.0, 1.0, 0.5, f(0.5), 1e-12);
            visit(combo(a, b, s));
        }
    }
    if pairs.len() > 2 {
        let m = pairs.len() as f64;
        let dim = first.q.len();
        visit(GradientPair {
            p: pairs.iter().map(|x| x.p).sum::<f64>() / m,
            q: (0..dim).map(|k| pairs.iter().map(|x| x.q[k]).sum::<f64>() / m).collect(),
        });
    }
    Some(HullScan { alpha: best.0, argmax: best.1, min_margin, endpoint_values })
}

pub fn verdict(alpha: f64, tol: f64) -> ArcVerdict {
    if alpha > tol {
        ArcVerdict::Strict
    } else if alpha >= -tol {
        ArcVerdict::Degenerate
    } else {
        ArcVerdict::Negative
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcHint {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub pairs: Vec<GradientPair>,
    pub scan: HullScan,
    pub verdict: ArcVerdict,
}

/// `α = max (p + H(q))` over the convex hull of the reachable gradients at a
/// singular point.
pub fn arc_direction_hint(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t0: f64,
    x0: &[f64],
    opts: &SolveOptions,
    tol: f64,
) -> Result<ArcHint> {
    let report = reachable_gradients(spec, view, t0, x0, opts, None)?;
    if report.pairs.len() < 2 {
        return Err(Error::Precondition(format!("(t0={t0}, x0={x0:?}) is not singular; no arc to describe")));
    }
    let scan = hull_scan(&report.pairs, &|q| spec.hamiltonian(q)).expect("nonempty pairs");
    Ok(ArcHint { t0, x0: x0.to_vec(), verdict: verdict(scan.alpha, tol), pairs: report.pairs, scan })
}

/// Drift bound `(m + 1)·eps` after `m` steps.
pub fn drift_bound(steps: usize, eps: f64) -> f64 {
    (steps as f64 + 1.0) * eps
}

/// Largest `|x_{k+1} − x_k| / (t_{k+1} − t_k)` along the path.
pub fn discrete_speed(path: &SingularPath) -> f64 {
    path.nodes
        .windows(2)
        .map(|w| dist(&w[1].1, &w[0].1) / (w[1].0 - w[0].0))
        .fold(0.0, f64::max)
}

/// `|x_k − x_0|` for the last node.
pub fn total_drift(path: &SingularPath) -> f64 {
    match (path.nodes.first(), path.nodes.last()) {
        (Some(a), Some(b)) => norm(&a.1.iter().zip(&b.1).map(|(x, y)| y - x).collect::<Vec<_>>()),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::catalog;

    fn setup(name: &str) -> (ProblemSpec, ConjugateView) {
        let s = catalog::lookup(name).unwrap();
        let v = ConjugateView::for_problem(&s).unwrap();
        (s, v)
    }

    #[test]
    fn delta_scales_with_eps() {
        let s = catalog::lookup("log-example").unwrap();
        assert!((delta_for(&s, 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert!((delta_for(&s, 0.05).unwrap() - 0.05).abs() < 1e-12);
        let z = catalog::lookup("zero-h").unwrap();
        assert_eq!(delta_for(&z, 0.3).unwrap(), f64::INFINITY);
        assert!(delta_for(&s, 0.0).is_err());
    }

    #[test]
    fn singular_point_found_near_segment() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let m = find_singular_near(&s, &v, 1.1, &[0.0], 0.1, &o, &ScanOptions::default()).unwrap().unwrap();
        assert!(m.x[0].abs() < 1e-9);
        assert!((m.diameter - 2.0 * (2.0f64 * 1.1 - 1.0).sqrt()).abs() < 1e-5);
        assert!(find_singular_near(&s, &v, 0.3, &[0.0], 0.1, &o, &ScanOptions::default()).unwrap().is_none());
        // off-centre: the segment sits between scan nodes
        let m = find_singular_near(&s, &v, 1.1, &[0.0137], 0.1, &o, &ScanOptions::default()).unwrap().unwrap();
        assert!(m.x[0].abs() < 1e-8, "{m:?}");
        let (l, lv) = setup("linear-sigma");
        assert!(find_singular_near(&l, &lv, 1.0, &[0.3], 0.5, &o, &ScanOptions::default()).unwrap().is_none());
    }

    #[test]
    fn trace_follows_the_segment() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let p = trace(&s, &v, 0.51, &[0.0], 0.1, 1.5, &o, &ScanOptions::default()).unwrap();
        assert!(p.complete(1.5), "{p:?}");
        assert!(p.nodes.iter().all(|(_, x)| x[0].abs() < 1e-9));
        assert!(p.nodes.windows(2).all(|w| w[1].0 > w[0].0));
        let single = trace(&s, &v, 0.8, &[0.0], 0.1, 0.8, &o, &ScanOptions::default()).unwrap();
        assert_eq!(single.nodes.len(), 1);
        assert!(matches!(trace(&s, &v, 0.3, &[0.0], 0.1, 1.0, &o, &ScanOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn alpha_on_worked_example_is_positive() {
        let (s, v) = setup("log-example");
        let h = arc_direction_hint(&s, &v, 1.0, &[0.0], &SolveOptions::default(), 1e-9).unwrap();
        assert!((h.scan.alpha - 2f64.ln()).abs() < 1e-7, "{h:?}");
        assert!(h.scan.argmax.q[0].abs() < 1e-6);
        assert!(h.scan.endpoint_values.iter().all(|e| e.abs() < 1e-6));
        assert!(h.scan.min_margin > -1e-6);
        assert_eq!(h.verdict, ArcVerdict::Strict);
    }

    #[test]
    fn constructed_strict_case() {
        let pairs = [GradientPair { p: 1.0, q: vec![1.0] }, GradientPair { p: 1.0, q: vec![-1.0] }];
        let h = hull_scan(&pairs, &|q| -q[0] * q[0]).unwrap();
        assert_eq!(h.alpha, 1.0);
        assert_eq!(verdict(h.alpha, 1e-9), ArcVerdict::Strict);
        assert_eq!(verdict(0.0, 1e-9), ArcVerdict::Degenerate);
        assert_eq!(verdict(-1.0, 1e-9), ArcVerdict::Negative);
    }

    #[test]
    fn no_arc_without_singularity() {
        let (l, lv) = setup("linear-sigma");
        assert!(matches!(
            arc_direction_hint(&l, &lv, 1.0, &[0.0], &SolveOptions::default(), 1e-9),
            Err(Error::Precondition(_))
        ));
    }
}
