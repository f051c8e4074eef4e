//! Straight-line characteristics `x(t,y) = y + t·H_p(σ_y(y))`, their type at
//! a point, persistence of type (I) curves, and reachable gradients.

use std::fmt;

use crate::conjugate::ConjugateView;
use crate::error::{Error, Result};
use crate::hopf::{evaluate, MaximizerSet, SolveOptions};
use crate::numeric::{axpy, dist, dot, linspace, norm, product_grid, roots_1d};
use crate::problem::ProblemSpec;

/// The characteristic emanating from `anchor_y` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub anchor_y: Vec<f64>,
    /// `p = σ_y(y)`, constant along the line.
    pub momentum: Vec<f64>,
    /// `H_p(p)`.
    pub velocity: Vec<f64>,
    /// `σ(y)`.
    pub v0: f64,
    /// `H(p)`.
    pub energy: f64,
}

impl Characteristic {
    pub fn new(spec: &ProblemSpec, y: &[f64]) -> Self {
        let momentum = spec.initial_grad(y);
        let velocity = spec.hamiltonian_grad(&momentum);
        let energy = spec.hamiltonian(&momentum);
        Self { anchor_y: y.to_vec(), v0: spec.initial(y), momentum, velocity, energy }
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        axpy(t, &self.velocity, &self.anchor_y)
    }

    /// The same line written through `(t0, x0)`: `x0 + (t − t0)·H_p(p)`.
    pub fn position_from(&self, t0: f64, x0: &[f64], t: f64) -> Vec<f64> {
        axpy(t - t0, &self.velocity, x0)
    }

    /// `v(t,y) = σ(y) + t(⟨p, H_p(p)⟩ − H(p))`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.v0 + t * (dot(&self.momentum, &self.velocity) - self.energy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharOptions {
    /// Half-width of the y-window; `None` means `(t0 + 1)·S + 1` with
    /// `S = sup|H_p|` over `B'(0, L)`.
    pub window: Option<f64>,
    /// Precomputed `S`; `None` samples it.
    pub max_speed: Option<f64>,
    /// Root-search samples (1-D) or nodes per axis (n-D).
    pub samples: Option<usize>,
    pub residual_tol: f64,
    pub dedup: f64,
}

impl Default for CharOptions {
    fn default() -> Self {
        Self { window: None, max_speed: None, samples: None, residual_tol: 1e-10, dedup: 1e-6 }
    }
}

impl CharOptions {
    pub fn with_max_speed(spec: &ProblemSpec) -> Self {
        Self { max_speed: Some(spec.default_max_speed()), ..Self::default() }
    }
}

/// All characteristics through `(t0, x0)`: roots `y` of
/// `y + t0·H_p(σ_y(y)) − x0` in the search window.
pub fn through_point(spec: &ProblemSpec, t0: f64, x0: &[f64], opts: &CharOptions) -> Result<Vec<Characteristic>> {
    if !(t0 > 0.0 && t0 < spec.horizon) {
        return Err(Error::Domain(format!("t0 = {t0} not in (0, {})", spec.horizon)));
    }
    spec.check_point(x0)?;
    let speed = opts.max_speed.unwrap_or_else(|| spec.default_max_speed());
    let w = opts.window.unwrap_or((t0 + 1.0) * speed + 1.0);
    let residual = |y: &[f64]| -> Vec<f64> {
        let p = spec.initial_grad(y);
        let v = spec.hamiltonian_grad(&p);
        y.iter().zip(&v).zip(x0).map(|((yi, vi), xi)| yi + t0 * vi - xi).collect()
    };
    let ys: Vec<Vec<f64>> = if spec.dim == 1 {
        let r = |y: f64| residual(&[y])[0];
        let samples = opts.samples.unwrap_or(20001);
        roots_1d(&r, x0[0] - w, x0[0] + w, samples, opts.residual_tol, opts.dedup)
            .into_iter()
            .map(|y| vec![y])
            .collect()
    } else {
        roots_nd(&residual, x0, w, opts.samples.unwrap_or(81), opts)
    };
    if ys.is_empty() {
        return Err(Error::SearchWindow { t: t0, x: x0.to_vec(), window: x0.iter().map(|&c| (c - w, c + w)).collect() });
    }
    Ok(ys.iter().map(|y| Characteristic::new(spec, y)).collect())
}

/// Local minima of `|r|` on a box grid, polished by damped Newton steps.
fn roots_nd(residual: &dyn Fn(&[f64]) -> Vec<f64>, centre: &[f64], w: f64, nodes: usize, opts: &CharOptions) -> Vec<Vec<f64>> {
    let n = centre.len();
    let axes: Vec<Vec<f64>> = centre.iter().map(|&c| linspace(c - w, c + w, nodes)).collect();
    let h = axes[0][1] - axes[0][0];
    let pts = product_grid(&axes);
    let mags: Vec<f64> = pts.iter().map(|p| norm(&residual(p))).collect();
    let strides: Vec<usize> = (0..n).map(|k| nodes.pow((n - 1 - k) as u32)).collect();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        // a root lies within one cell of its nearest node; |r| there is bounded by
        // the residual's local slope times the cell diagonal
        if mags[i] > 4.0 * h * (n as f64).sqrt() * (1.0 + w) {
            continue;
        }
        let idx: Vec<usize> = strides.iter().map(|s| (i / s) % nodes).collect();
        let is_min = (0..n).all(|k| {
            [-1isize, 1].iter().all(|&d| {
                let q = idx[k] as isize + d;
                q < 0 || q >= nodes as isize || mags[(i as isize + d * strides[k] as isize) as usize] >= mags[i]
            })
        });
        if !is_min {
            continue;
        }
        if let Some(y) = newton(residual, p, opts.residual_tol) {
            if found.iter().all(|f| dist(f, &y) > opts.dedup) {
                found.push(y);
            }
        }
    }
    found.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    found
}

fn newton(residual: &dyn Fn(&[f64]) -> Vec<f64>, start: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = start.len();
    let mut y = start.to_vec();
    let mut r = residual(&y);
    for _ in 0..60 {
        let rn = norm(&r);
        if rn <= tol {
            return Some(y);
        }
        let e = 1e-7 * (1.0 + norm(&y));
        // row-major finite-difference Jacobian
        let mut jac = vec![0.0; n * n];
        for k in 0..n {
            let mut yp = y.clone();
            yp[k] += e;
            let mut ym = y.clone();
            ym[k] -= e;
            let (rp, rm) = (residual(&yp), residual(&ym));
            for i in 0..n {
                jac[i * n + k] = (rp[i] - rm[i]) / (2.0 * e);
            }
        }
        let step = solve(&mut jac, &r, n)?;
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            let rc = residual(&cand);
            if norm(&rc) < rn || lambda < 1e-6 {
                y = cand;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
    }
    (norm(&r) <= tol.max(1e-9)).then_some(y)
}

/// Gaussian elimination with partial pivoting on a row-major `n×n` system.
fn solve(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut x = b.to_vec();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))?;
        if a[piv * n + c].abs() < 1e-300 {
            return None;
        }
        for k in 0..n {
            a.swap(c * n + k, piv * n + k);
        }
        x.swap(c, piv);
        for i in c + 1..n {
            let f = a[i * n + c] / a[c * n + c];
            for k in c..n {
                a[i * n + k] -= f * a[c * n + k];
            }
            x[i] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c * n + k] * x[k]).sum();
        x[c] = (x[c] - s) / a[c * n + c];
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharType {
    TypeI,
    TypeII,
}

impl fmt::Display for CharType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharType::TypeI => "I",
            CharType::TypeII => "II",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeTag {
    pub tag: CharType,
    pub t0: f64,
    pub x0: Vec<f64>,
    pub witness_q: Vec<f64>,
    /// Distance from `witness_q` to the nearest representative of `ℓ(t0, x0)`.
    pub distance: f64,
}

/// Type of `c` against an already computed `ℓ(t0, x0)`.
pub fn classify_against(c: &Characteristic, set: &MaximizerSet) -> TypeTag {
    let distance = set.distance_to(&c.momentum);
    TypeTag {
        tag: if distance <= set.cluster_tol { CharType::TypeI } else { CharType::TypeII },
        t0: set.t,
        x0: set.x.clone(),
        witness_q: c.momentum.clone(),
        distance,
    }
}

/// Type (I) iff the curve's momentum lies in `ℓ(t0, x0)` (within cluster_tol).
pub fn classify(
    spec: &ProblemSpec,
    view: &ConjugateView,
    c: &Characteristic,
    t0: f64,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<TypeTag> {
    let miss = dist(&c.position(t0), x0);
    if miss > 1e-6 * (1.0 + norm(x0)) {
        return Err(Error::Precondition(format!("curve from y = {:?} misses (t0={t0}, x0={x0:?}) by {miss:e}", c.anchor_y)));
    }
    let set = evaluate(spec, view, t0, x0, opts)?;
    Ok(classify_against(c, &set))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub contains_momentum: bool,
    pub singleton: bool,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceReport {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub samples: Vec<PersistenceSample>,
    /// Index into `samples` and a description of the first failed property.
    pub first_violation: Option<(usize, String)>,
}

impl PersistenceReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Along a type (I) curve, checks at `steps` interior times of `(0, t0)` that
/// `ℓ(t, x(t))` contains the curve's momentum, is a singleton, and lies in `ℓ(t0, x0)`.
pub fn persistence_check(
    spec: &ProblemSpec,
    view: &ConjugateView,
    c: &Characteristic,
    t0: f64,
    steps: usize,
    opts: &SolveOptions,
) -> Result<PersistenceReport> {
    let x0 = c.position(t0);
    let end = evaluate(spec, view, t0, &x0, opts)?;
    let tag = classify_against(c, &end);
    if tag.tag != CharType::TypeI {
        return Err(Error::Precondition(format!(
            "curve from y = {:?} is of type II at (t0={t0}, x0={x0:?})",
            c.anchor_y
        )));
    }
    let tol = end.cluster_tol;
    let mut samples = Vec::with_capacity(steps);
    let mut first_violation = None;
    for k in 1..=steps {
        let t = t0 * k as f64 / (steps + 1) as f64;
        let x = c.position(t);
        let set = evaluate(spec, view, t, &x, opts)?;
        let s = PersistenceSample {
            t,
            contains_momentum: set.contains(&c.momentum, tol),
            singleton: set.singleton,
            included: set.representatives.iter().all(|q| end.contains(q, tol)),
            x,
        };
        if first_violation.is_none() {
            let what = if !s.contains_momentum {
                Some("momentum not in ℓ(t, x(t))")
            } else if !s.singleton {
                Some("ℓ(t, x(t)) is not a singleton")
            } else if !s.included {
                Some("ℓ(t, x(t)) not contained in ℓ(t0, x0)")
            } else {
                None
            };
            if let Some(w) = what {
                first_violation = Some((samples.len(), format!("{w} at t = {t}")));
            }
        }
        samples.push(s);
    }
    Ok(PersistenceReport { t0, x0, samples, first_violation })
}

/// A reachable gradient `(u_t, u_x) = (−H(q), q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub p: f64,
    pub q: Vec<f64>,
}

impl GradientPair {
    fn distance(&self, p: f64, q: &[f64]) -> f64 {
        let dq2: f64 = self.q.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        ((self.p - p) * (self.p - p) + dq2).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    /// Radius of the sampling circle in the `(t, x₁)` plane.
    pub radius: f64,
    pub samples: usize,
    pub fd_step: f64,
    pub tol: f64,
}

impl Default for CrossValidation {
    fn default() -> Self {
        Self { radius: 1e-3, samples: 20, fd_step: 1e-6, tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGradient {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: f64,
    pub q: Vec<f64>,
    /// Distance to the nearest returned pair.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachableReport {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub pairs: Vec<GradientPair>,
    pub samples: Vec<SampledGradient>,
    /// Samples farther than `tol` from every pair.
    pub unmatched_samples: usize,
    /// Pairs farther than `tol` from every sample.
    pub unapproached_pairs: usize,
    pub cross_checked: bool,
}

impl ReachableReport {
    pub fn consistent(&self) -> bool {
        self.unmatched_samples == 0 && self.unapproached_pairs == 0
    }
}

/// `{(−H(q), q) : q ∈ ℓ(t0, x0)}`, optionally cross-checked against central
/// difference gradients of `u` at regular points on a small circle around `(t0, x0)`.
pub fn reachable_gradients(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t0: f64,
    x0: &[f64],
    opts: &SolveOptions,
    cross: Option<&CrossValidation>,
) -> Result<ReachableReport> {
    if !(t0 > 0.0 && t0 < spec.horizon) {
        return Err(Error::Domain(format!("t0 = {t0} not in (0, {})", spec.horizon)));
    }
    let set = evaluate(spec, view, t0, x0, opts)?;
    let pairs: Vec<GradientPair> =
        set.representatives.iter().map(|q| GradientPair { p: -spec.hamiltonian(q), q: q.clone() }).collect();
    let mut report = ReachableReport {
        t0,
        x0: x0.to_vec(),
        pairs,
        samples: Vec::new(),
        unmatched_samples: 0,
        unapproached_pairs: 0,
        cross_checked: false,
    };
    let Some(cv) = cross else {
        return Ok(report);
    };
    let u = |t: f64, x: &[f64]| evaluate(spec, view, t, x, opts).map(|m| m.value);
    for k in 0..cv.samples {
        let angle = std::f64::consts::TAU * (k as f64 + 0.5) / cv.samples as f64;
        let t = t0 + cv.radius * angle.cos();
        let mut x = x0.to_vec();
        x[0] += cv.radius * angle.sin();
        if !(t - cv.fd_step > 0.0 && t + cv.fd_step < spec.horizon) {
            continue;
        }
        if !evaluate(spec, view, t, &x, opts)?.singleton {
            continue;
        }
        let h = cv.fd_step;
        let p = (u(t + h, &x)? - u(t - h, &x)?) / (2.0 * h);
        let mut q = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            q.push((u(t, &xp)? - u(t, &xm)?) / (2.0 * h));
        }
        let distance = report.pairs.iter().map(|g| g.distance(p, &q)).fold(f64::INFINITY, f64::min);
        report.samples.push(SampledGradient { t, x, p, q, distance });
    }
    report.cross_checked = true;
    report.unmatched_samples = report.samples.iter().filter(|s| s.distance > cv.tol).count();
    report.unapproached_pairs = report
        .pairs
        .iter()
        .filter(|g| report.samples.iter().all(|s| g.distance(s.p, &s.q) > cv.tol))
        .count();
    Ok(report)
}

/// Time at which the characteristics from `y1` and `y2` meet, by bisection
/// on the first coordinate of `x(t,y1) − x(t,y2)` over `[t_lo, t_hi]`.
/// Returns `(t, x)`, or `None` without a sign change.
pub fn crossing_time(spec: &ProblemSpec, y1: &[f64], y2: &[f64], t_lo: f64, t_hi: f64) -> Option<(f64, Vec<f64>)> {
    let (c1, c2) = (Characteristic::new(spec, y1), Characteristic::new(spec, y2));
    let gap = |t: f64| c1.position(t)[0] - c2.position(t)[0];
    let (mut a, mut b) = (t_lo, t_hi);
    let (mut ga, gb) = (gap(a), gap(b));
    if ga == 0.0 {
        return Some((a, c1.position(a)));
    }
    if ga * gb > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = gap(m);
        if gm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    let t = 0.5 * (a + b);
    Some((t, c1.position(t)))
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

    fn worked_roots() -> [f64; 3] {
        [(-4.0 - 11f64.sqrt()) / 5.0, (-4.0 + 11f64.sqrt()) / 5.0, 2.0]
    }

    #[test]
    fn three_curves_through_two_two_fifths() {
        let (s, _) = setup("log-example");
        let cs = through_point(&s, 2.0, &[0.4], &CharOptions::default()).unwrap();
        assert_eq!(cs.len(), 3);
        for (c, y) in cs.iter().zip(worked_roots()) {
            assert!((c.anchor_y[0] - y).abs() < 1e-9, "{c:?}");
            assert!((c.position(2.0)[0] - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn single_curve_before_the_fold() {
        let (s, _) = setup("log-example");
        let cs = through_point(&s, 0.3, &[0.0], &CharOptions::default()).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].anchor_y[0].abs() < 1e-12);
    }

    #[test]
    fn zero_h_curves_are_vertical() {
        let (s, _) = setup("zero-h");
        let cs = through_point(&s, 1.2, &[0.37], &CharOptions::default()).unwrap();
        assert_eq!(cs.len(), 1);
        assert!((cs[0].anchor_y[0] - 0.37).abs() < 1e-12);
        assert_eq!(cs[0].velocity, vec![0.0]);
    }

    #[test]
    fn empty_window_is_an_error() {
        let (s, _) = setup("log-example");
        let opts = CharOptions { window: Some(0.01), ..CharOptions::default() };
        assert!(matches!(through_point(&s, 2.0, &[5.0], &opts), Err(Error::SearchWindow { .. })));
    }

    #[test]
    fn classification_at_two_two_fifths() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let cs = through_point(&s, 2.0, &[0.4], &CharOptions::default()).unwrap();
        let tags: Vec<CharType> = cs.iter().map(|c| classify(&s, &v, c, 2.0, &[0.4], &o).unwrap().tag).collect();
        assert_eq!(tags, vec![CharType::TypeII, CharType::TypeII, CharType::TypeI]);
    }

    #[test]
    fn classification_on_singular_segment() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let cs = through_point(&s, 1.0, &[0.0], &CharOptions::default()).unwrap();
        assert_eq!(cs.len(), 3);
        let tags: Vec<CharType> = cs.iter().map(|c| classify(&s, &v, c, 1.0, &[0.0], &o).unwrap().tag).collect();
        assert_eq!(tags, vec![CharType::TypeI, CharType::TypeII, CharType::TypeI]);
        let off = Characteristic::new(&s, &[0.5]);
        assert!(matches!(classify(&s, &v, &off, 1.0, &[0.0], &o), Err(Error::Precondition(_))));
    }

    #[test]
    fn persistence_along_type_one_curves() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let r = persistence_check(&s, &v, &Characteristic::new(&s, &[2.0]), 2.0, 16, &o).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = persistence_check(&s, &v, &Characteristic::new(&s, &[1.0]), 1.0, 8, &o).unwrap();
        assert!(r.passed(), "{r:?}");
        let bad = Characteristic::new(&s, &[0.0]);
        assert!(matches!(persistence_check(&s, &v, &bad, 1.0, 8, &o), Err(Error::Precondition(_))));
        let (z, zv) = setup("zero-h");
        let r = persistence_check(&z, &zv, &Characteristic::new(&z, &[0.4]), 1.5, 16, &o).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn reachable_gradient_pairs() {
        let (s, v) = setup("log-example");
        let o = SolveOptions::default();
        let ln2 = 2f64.ln();
        let r = reachable_gradients(&s, &v, 1.0, &[0.0], &o, Some(&CrossValidation::default())).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!((r.pairs[0].p - ln2).abs() < 1e-6 && (r.pairs[0].q[0] + 1.0).abs() < 1e-6, "{r:?}");
        assert!((r.pairs[1].p - ln2).abs() < 1e-6 && (r.pairs[1].q[0] - 1.0).abs() < 1e-6);
        assert!(r.consistent(), "{r:?}");
        let r = reachable_gradients(&s, &v, 2.0, &[0.4], &o, None).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert!((r.pairs[0].p - 5f64.ln()).abs() < 1e-9);
        let (l, lv) = setup("linear-sigma");
        let r = reachable_gradients(&l, &lv, 0.5, &[1.0], &o, None).unwrap();
        assert_eq!(r.pairs, vec![GradientPair { p: 5f64.ln(), q: vec![2.0] }]);
    }

    #[test]
    fn re_anchoring_is_exact() {
        let (s, _) = setup("log-example");
        for c in through_point(&s, 2.0, &[0.4], &CharOptions::default()).unwrap() {
            let x0 = c.position(2.0);
            for t in [0.0, 0.5, 1.0, 1.5, 2.5] {
                assert!((c.position(t)[0] - c.position_from(2.0, &x0, t)[0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn characteristic_value_matches_u_on_type_one() {
        let (s, v) = setup("log-example");
        let c = Characteristic::new(&s, &[2.0]);
        let m = evaluate(&s, &v, 2.0, &c.position(2.0), &SolveOptions::default()).unwrap();
        assert!((m.value - c.value_at(2.0)).abs() < 1e-9);
    }

    #[test]
    fn sqrt_example_crossing() {
        let s = catalog::lookup("sqrt-example").unwrap();
        let (t, x) = crossing_time(&s, &[1.0], &[2.0], 0.1, 7.9).unwrap();
        let d = 2.0 * 2f64.sqrt() - 5f64.sqrt();
        assert!((t - 10f64.sqrt() / d).abs() < 1e-9);
        assert!((x[0] - 2.0 * (2f64.sqrt() - 5f64.sqrt()) / d).abs() < 1e-9);
        assert!(crossing_time(&s, &[1.0], &[2.0], 0.1, 1.0).is_none());
    }

    #[test]
    fn two_dimensional_roots() {
        let (s, _) = setup("log-example-2d");
        let cs = through_point(&s, 0.3, &[0.2, -0.1], &CharOptions::default()).unwrap();
        assert_eq!(cs.len(), 1, "{cs:?}");
        assert!(dist(&cs[0].position(0.3), &[0.2, -0.1]) < 1e-9);
    }
}
