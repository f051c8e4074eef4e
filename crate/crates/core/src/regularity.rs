//! Strips of `C¹` regularity: the a-priori strip bound, an empirical
//! estimate of the largest strip on a window, the sufficient conditions
//! (injective characteristic map, singleton plane, type (I) plane), a
//! no-crossing audit and a finite-difference viscosity audit.
//!
//! Everything here is sampled on a finite window; "for every x" means every
//! node of that window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::characteristics::{classify_against, reachable_gradients, through_point, CharOptions, CharType, Characteristic};
use crate::conjugate::ConjugateView;
use crate::error::{Error, Result};
use crate::hopf::{evaluate, locate_jump, MaximizerSet, SolveOptions};
use crate::numeric::{dist, linspace, product_grid};
use crate::problem::ProblemSpec;
use crate::singularity::{hull_scan, verdict, ArcVerdict};

/// `t* = min(T, μ/(2γ))` from the declared constants.
pub fn strip_bound(spec: &ProblemSpec) -> Result<f64> {
    let gamma = spec
        .semiconvexity_h
        .ok_or_else(|| Error::Config(format!("problem `{}` declares no semiconvexity constant for H", spec.name)))?;
    let inv_mu = spec
        .semiconcavity_sigma
        .ok_or_else(|| Error::Config(format!("problem `{}` declares no semiconcavity constant for σ", spec.name)))?;
    Ok(strip_bound_from(gamma, 1.0 / inv_mu, spec.horizon))
}

pub fn strip_bound_from(gamma: f64, mu: f64, horizon: f64) -> f64 {
    if gamma <= 0.0 {
        horizon
    } else {
        horizon.min(mu / (2.0 * gamma))
    }
}

fn window_grid(window: &[(f64, f64)], nodes: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = window.iter().map(|&(lo, hi)| linspace(lo, hi, nodes)).collect();
    product_grid(&axes)
}

fn check_window(spec: &ProblemSpec, window: &[(f64, f64)], nodes: usize) -> Result<()> {
    if window.len() != spec.dim {
        return Err(Error::Config(format!("window has {} axes, problem has dimension {}", window.len(), spec.dim)));
    }
    if nodes < 2 || window.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::Config(format!("window {window:?} with {nodes} nodes is not a usable grid")));
    }
    Ok(())
}

/// First singular point of the window at time `t`, if any. In 1-D, adjacent
/// nodes whose maximizers jump are bisected so singular points between
/// nodes are found too.
pub fn first_singular(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    window: &[(f64, f64)],
    nodes: usize,
    opts: &SolveOptions,
) -> Result<Option<MaximizerSet>> {
    let xs = window_grid(window, nodes);
    let sets = xs.par_iter().map(|x| evaluate(spec, view, t, x, opts)).collect::<Result<Vec<_>>>()?;
    if let Some(m) = sets.iter().find(|m| !m.singleton) {
        return Ok(Some(m.clone()));
    }
    if spec.dim == 1 {
        for w in sets.windows(2) {
            if dist(&w[0].representatives[0], &w[1].representatives[0]) > w[0].singleton_tol {
                if let Some(m) = locate_jump(spec, view, t, &w[0].x, &w[1].x, opts)? {
                    return Ok(Some(m));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub name: &'static str,
    pub t: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripReport {
    pub window: Vec<(f64, f64)>,
    pub nodes: usize,
    pub levels: usize,
    /// Window-relative estimate of the largest regular strip.
    pub theta_estimate: f64,
    /// Width of the final bisection bracket.
    pub resolution: f64,
    pub theoretical_bound: Option<f64>,
    /// Sufficient conditions tested at `t*` (or `θ/2` without constants).
    pub condition_results: Vec<ConditionResult>,
    /// Earliest failing level's singular point.
    pub witness: Option<MaximizerSet>,
}

impl StripReport {
    pub fn no_witness(&self) -> bool {
        self.witness.is_none()
    }
}

/// Bisects on `t ∈ (0, T)` for the largest level at which every window node
/// has a singleton `ℓ`. `levels` is the number of bisection steps.
pub fn estimate_theta(
    spec: &ProblemSpec,
    view: &ConjugateView,
    window: &[(f64, f64)],
    nodes: usize,
    levels: usize,
    opts: &SolveOptions,
) -> Result<StripReport> {
    check_window(spec, window, nodes)?;
    if levels < 4 {
        return Err(Error::Config(format!("levels must be at least 4, got {levels}")));
    }
    let horizon = spec.horizon;
    let top = horizon * (1.0 - 0.5f64.powi(levels as i32));
    let theoretical_bound = strip_bound(spec).ok();
    let mut witness = first_singular(spec, view, top, window, nodes, opts)?;
    let (theta, resolution) = if witness.is_none() {
        (horizon, horizon - top)
    } else {
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..levels {
            let mid = 0.5 * (lo + hi);
            match first_singular(spec, view, mid, window, nodes, opts)? {
                Some(w) => {
                    hi = mid;
                    witness = Some(w);
                }
                None => lo = mid,
            }
        }
        (0.5 * (lo + hi), hi - lo)
    };
    let probe_t = theoretical_bound.unwrap_or(0.5 * theta).clamp(f64::MIN_POSITIVE, top);
    let char_opts = CharOptions::with_max_speed(spec);
    let y_window: Vec<(f64, f64)> = {
        let reach = probe_t * char_opts.max_speed.unwrap_or(0.0) + 1.0;
        window.iter().map(|&(lo, hi)| (lo - reach, hi + reach)).collect()
    };
    let condition_results = vec![
        ConditionResult {
            name: "injective",
            t: probe_t,
            passed: injectivity_check(spec, probe_t, &y_window, nodes.max(401), 1e-12)?.injective,
        },
        ConditionResult {
            name: "singleton_plane",
            t: probe_t,
            passed: plane_singleton_check(spec, view, probe_t, window, nodes, opts)?.passed,
        },
        ConditionResult {
            name: "all_type_one",
            t: probe_t,
            passed: all_type_one_check(spec, view, probe_t, window, nodes, opts, &char_opts)?.passed,
        },
    ];
    Ok(StripReport {
        window: window.to_vec(),
        nodes,
        levels,
        theta_estimate: theta,
        resolution,
        theoretical_bound,
        condition_results,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectivityReport {
    pub t: f64,
    pub injective: bool,
    /// 1-D: smallest increment of the sorted-by-y images; n-D: smallest
    /// distance between distinct images.
    pub worst_gap: f64,
    pub at: Vec<f64>,
}

/// Checks that `y ↦ y + t·H_p(σ_y(y))` is injective on the sampled y-window:
/// strictly increasing in 1-D, pairwise distinct images otherwise (the n-D
/// result is necessary evidence only).
pub fn injectivity_check(spec: &ProblemSpec, t: f64, y_window: &[(f64, f64)], nodes: usize, tol: f64) -> Result<InjectivityReport> {
    check_window(spec, y_window, nodes)?;
    if !(t > 0.0 && t < spec.horizon) {
        return Err(Error::Domain(format!("t = {t} not in (0, {})", spec.horizon)));
    }
    let ys = window_grid(y_window, nodes);
    let images: Vec<Vec<f64>> = ys.iter().map(|y| Characteristic::new(spec, y).position(t)).collect();
    let (mut worst, mut at) = (f64::INFINITY, ys[0].clone());
    if spec.dim == 1 {
        for (i, w) in images.windows(2).enumerate() {
            let d = w[1][0] - w[0][0];
            if d < worst {
                worst = d;
                at = ys[i].clone();
            }
        }
        return Ok(InjectivityReport { t, injective: worst > -tol && worst != 0.0, worst_gap: worst, at });
    }
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            let d = dist(&images[i], &images[j]);
            if d < worst {
                worst = d;
                at = ys[i].clone();
            }
        }
    }
    Ok(InjectivityReport { t, injective: worst > tol, worst_gap: worst, at })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneReport {
    pub t: f64,
    pub passed: bool,
    pub tested: usize,
    pub witness: Option<MaximizerSet>,
}

/// `ℓ(t, x)` is a singleton at every window node (and between nodes, in 1-D).
pub fn plane_singleton_check(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    window: &[(f64, f64)],
    nodes: usize,
    opts: &SolveOptions,
) -> Result<PlaneReport> {
    check_window(spec, window, nodes)?;
    let witness = first_singular(spec, view, t, window, nodes, opts)?;
    Ok(PlaneReport { t, passed: witness.is_none(), tested: nodes.pow(spec.dim as u32), witness })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeOneReport {
    pub t: f64,
    pub passed: bool,
    pub tested: usize,
    pub curves: usize,
    /// First type (II) curve found, with the point it passes through.
    pub counterexample: Option<(Vec<f64>, Characteristic)>,
}

/// Every characteristic through every window node at time `t` is of type (I).
pub fn all_type_one_check(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    window: &[(f64, f64)],
    nodes: usize,
    opts: &SolveOptions,
    char_opts: &CharOptions,
) -> Result<TypeOneReport> {
    check_window(spec, window, nodes)?;
    let xs = window_grid(window, nodes);
    let per_node = xs
        .par_iter()
        .map(|x| {
            let curves = through_point(spec, t, x, char_opts)?;
            let set = evaluate(spec, view, t, x, opts)?;
            let bad = curves.iter().find(|c| classify_against(c, &set).tag == CharType::TypeII).cloned();
            Ok((curves.len(), bad.map(|c| (x.clone(), c))))
        })
        .collect::<Result<Vec<_>>>()?;
    let curves = per_node.iter().map(|r| r.0).sum();
    let counterexample = per_node.into_iter().find_map(|r| r.1);
    Ok(TypeOneReport { t, passed: counterexample.is_none(), tested: xs.len(), curves, counterexample })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub x: Vec<f64>,
    pub curves: Vec<Characteristic>,
    /// `ℓ(t, x)` was a singleton, so the point itself is regular.
    pub regular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub tested: usize,
    /// Every sampled point had a singleton `ℓ`.
    pub certified_regular: bool,
    pub crossings: Vec<Crossing>,
}

impl CrossingReport {
    pub fn no_crossings(&self) -> bool {
        self.crossings.is_empty()
    }
}

/// Samples `t_range × x_window` (`samples` nodes per axis) and reports every
/// point reached by more than one characteristic.
pub fn crossing_check(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t_range: (f64, f64),
    x_window: &[(f64, f64)],
    samples: usize,
    opts: &SolveOptions,
    char_opts: &CharOptions,
) -> Result<CrossingReport> {
    check_window(spec, x_window, samples)?;
    let (a, b) = t_range;
    if !(a > 0.0 && a <= b && b < spec.horizon) {
        return Err(Error::Domain(format!("t-range ({a}, {b}) not inside (0, {})", spec.horizon)));
    }
    let ts = linspace(a, b, samples);
    let xs = window_grid(x_window, samples);
    let jobs: Vec<(f64, &Vec<f64>)> = ts.iter().flat_map(|&t| xs.iter().map(move |x| (t, x))).collect();
    let results = jobs
        .par_iter()
        .map(|&(t, x)| {
            let curves = through_point(spec, t, x, char_opts)?;
            let regular = evaluate(spec, view, t, x, opts)?.singleton;
            Ok((t, x.clone(), curves, regular))
        })
        .collect::<Result<Vec<_>>>()?;
    let certified_regular = results.iter().all(|r| r.3);
    let crossings = results
        .into_iter()
        .filter(|r| r.2.len() > 1)
        .map(|(t, x, curves, regular)| Crossing { t, x, curves, regular })
        .collect();
    Ok(CrossingReport { tested: jobs.len(), certified_regular, crossings })
}

/// Residual bound constant: regular points pass when `|û_t + H(û_x)| ≤ C·h + tol`.
pub const RESIDUAL_SLOPE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Regular,
    Singular,
    /// Regular, but the difference stencil straddles a singular point.
    NearSingular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub kind: PointKind,
    /// `|û_t + H(û_x)|` at regular points.
    pub residual: Option<f64>,
    /// `min (p + H(q))` over the hull of reachable gradients at singular points.
    pub min_margin: Option<f64>,
    /// `max (p + H(q))` over the same hull.
    pub alpha: Option<f64>,
    pub arc: Option<ArcVerdict>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub h: f64,
    pub tol: f64,
    pub points: Vec<AuditPoint>,
}

impl ViscosityReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().filter_map(|p| p.residual).fold(0.0, f64::max)
    }

    pub fn count(&self, kind: PointKind) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }
}

/// Audits the given `(t, x)` points: the PDE residual by central differences
/// at regular points, and the supersolution inequality `p + H(q) ≥ 0` on the
/// convex hull of reachable gradients at singular points.
pub fn viscosity_audit_points(
    spec: &ProblemSpec,
    view: &ConjugateView,
    points: &[(f64, Vec<f64>)],
    h: f64,
    tol: f64,
    opts: &SolveOptions,
) -> Result<ViscosityReport> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("h must be positive, got {h}")));
    }
    let audited = points.par_iter().map(|(t, x)| audit_point(spec, view, *t, x, h, tol, opts)).collect::<Result<Vec<_>>>()?;
    Ok(ViscosityReport { h, tol, points: audited })
}

/// Draws `samples` points uniformly in `(2h, T − 2h) × window` with a seeded
/// generator and audits them.
#[allow(clippy::too_many_arguments)]
pub fn viscosity_audit(
    spec: &ProblemSpec,
    view: &ConjugateView,
    samples: usize,
    h: f64,
    window: &[(f64, f64)],
    tol: f64,
    seed: u64,
    opts: &SolveOptions,
) -> Result<ViscosityReport> {
    check_window(spec, window, 2)?;
    let points = sample_points(spec, samples, h, window, seed);
    viscosity_audit_points(spec, view, &points, h, tol, opts)
}

pub fn sample_points(spec: &ProblemSpec, samples: usize, h: f64, window: &[(f64, f64)], seed: u64) -> Vec<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let t = rng.gen_range(2.0 * h..spec.horizon - 2.0 * h);
            let x = window.iter().map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..hi) } else { lo }).collect();
            (t, x)
        })
        .collect()
}

fn audit_point(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    x: &[f64],
    h: f64,
    tol: f64,
    opts: &SolveOptions,
) -> Result<AuditPoint> {
    let centre = evaluate(spec, view, t, x, opts)?;
    if !centre.singleton {
        let report = reachable_gradients(spec, view, t, x, opts, None)?;
        let scan = hull_scan(&report.pairs, &|q| spec.hamiltonian(q)).expect("nonempty ℓ");
        return Ok(AuditPoint {
            t,
            x: x.to_vec(),
            kind: PointKind::Singular,
            residual: None,
            min_margin: Some(scan.min_margin),
            alpha: Some(scan.alpha),
            arc: Some(verdict(scan.alpha, tol)),
            passed: scan.min_margin >= -tol,
        });
    }
    let q0 = centre.representatives[0].clone();
    let mut stencil = Vec::with_capacity(2 + 2 * x.len());
    stencil.push(evaluate(spec, view, t + h, x, opts)?);
    stencil.push(evaluate(spec, view, t - h, x, opts)?);
    for i in 0..x.len() {
        for s in [1.0, -1.0] {
            let mut xs = x.to_vec();
            xs[i] += s * h;
            stencil.push(evaluate(spec, view, t, &xs, opts)?);
        }
    }
    let smooth = stencil.iter().all(|m| m.singleton && dist(&m.representatives[0], &q0) <= m.singleton_tol);
    if !smooth {
        return Ok(AuditPoint {
            t,
            x: x.to_vec(),
            kind: PointKind::NearSingular,
            residual: None,
            min_margin: None,
            alpha: None,
            arc: None,
            passed: true,
        });
    }
    let ut = (stencil[0].value - stencil[1].value) / (2.0 * h);
    let ux: Vec<f64> = (0..x.len()).map(|i| (stencil[2 + 2 * i].value - stencil[3 + 2 * i].value) / (2.0 * h)).collect();
    let residual = (ut + spec.hamiltonian(&ux)).abs();
    Ok(AuditPoint {
        t,
        x: x.to_vec(),
        kind: PointKind::Regular,
        residual: Some(residual),
        min_margin: None,
        alpha: None,
        arc: None,
        passed: residual <= RESIDUAL_SLOPE * h + tol,
    })
}
