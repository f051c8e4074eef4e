//! The Fenchel conjugate `σ*`: closed-form or grid-based evaluation,
//! subdifferentials, affine-segment probing and the uniform-convexity check
//! dual to semiconcavity of `σ`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{dot, linspace, norm};
use crate::problem::{AnalyticConjugate, ProblemSpec};

/// Lower convex hull of sampled points `(x_k, f_k)` in 1-D. Evaluating the
/// discrete conjugate `max_k (q x_k − f_k)` only needs the hull vertices.
#[derive(Debug, Clone)]
pub struct DiscreteHull {
    xs: Vec<f64>,
    fs: Vec<f64>,
    /// slopes[k] is the slope between vertex k and k + 1 (nondecreasing)
    slopes: Vec<f64>,
}

impl DiscreteHull {
    /// `xs` must be sorted ascending. Non-finite values are dropped.
    pub fn new(xs: &[f64], fs: &[f64]) -> Option<Self> {
        let mut hx: Vec<f64> = Vec::with_capacity(xs.len());
        let mut hf: Vec<f64> = Vec::with_capacity(xs.len());
        for (&x, &f) in xs.iter().zip(fs) {
            if !f.is_finite() {
                continue;
            }
            while hx.len() >= 2 {
                let n = hx.len();
                let (x1, f1, x2, f2) = (hx[n - 2], hf[n - 2], hx[n - 1], hf[n - 1]);
                // drop the middle point when it lies on or above the chord
                if (f2 - f1) * (x - x1) >= (f - f1) * (x2 - x1) {
                    hx.pop();
                    hf.pop();
                } else {
                    break;
                }
            }
            hx.push(x);
            hf.push(f);
        }
        if hx.is_empty() {
            return None;
        }
        let slopes = hx.windows(2).zip(hf.windows(2)).map(|(x, f)| (f[1] - f[0]) / (x[1] - x[0])).collect();
        Some(Self { xs: hx, fs: hf, slopes })
    }

    pub fn vertices(&self) -> usize {
        self.xs.len()
    }

    /// `max_k (q x_k − f_k)` by binary search over hull slopes.
    pub fn eval(&self, q: f64) -> f64 {
        let k = self.slopes.partition_point(|&s| s < q);
        q * self.xs[k] - self.fs[k]
    }

    /// Linear-time transform for ascending `qs` (marches the hull once).
    pub fn transform_sorted(&self, qs: &[f64]) -> Vec<f64> {
        let mut k = 0;
        qs.iter()
            .map(|&q| {
                while k < self.slopes.len() && self.slopes[k] < q {
                    k += 1;
                }
                q * self.xs[k] - self.fs[k]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugateMode {
    Analytic,
    Numeric,
}

impl fmt::Display for ConjugateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConjugateMode::Analytic => "analytic",
            ConjugateMode::Numeric => "numeric",
        })
    }
}

#[derive(Clone)]
enum Repr {
    Analytic(AnalyticConjugate),
    Hull1d { hull: DiscreteHull, grid: Vec<f64>, values: Vec<f64> },
    Grid2d { axis: Vec<f64>, values: Vec<f64> },
}

/// Queryable `σ*`. `value` returns `+inf` outside the closed ball of radius
/// `domain_radius`; numeric views never extrapolate beyond their grid.
#[derive(Clone)]
pub struct ConjugateView {
    dim: usize,
    domain_radius: f64,
    repr: Repr,
}

impl fmt::Debug for ConjugateView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugateView")
            .field("dim", &self.dim)
            .field("domain_radius", &self.domain_radius)
            .field("mode", &self.mode())
            .finish()
    }
}

impl ConjugateView {
    pub fn analytic(dim: usize, domain_radius: f64, conj: AnalyticConjugate) -> Self {
        Self { dim, domain_radius, repr: Repr::Analytic(conj) }
    }

    /// The closed form when the problem carries one, else a numeric transform
    /// of `σ` over `B'(0, transform_radius)` with 4001 nodes (1-D) or 201 per axis.
    pub fn for_problem(spec: &ProblemSpec) -> Result<Self> {
        match spec.analytic_conjugate() {
            Some(c) => Ok(Self::analytic(spec.dim, spec.domain_radius(), c.clone())),
            None => {
                let nodes = if spec.dim == 1 { 4001 } else { 201 };
                conjugate_numeric(&|x| spec.initial(x), spec.dim, spec.transform_radius, spec.domain_radius(), nodes)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn mode(&self) -> ConjugateMode {
        match self.repr {
            Repr::Analytic(_) => ConjugateMode::Analytic,
            _ => ConjugateMode::Numeric,
        }
    }

    fn in_ball(&self, q: &[f64]) -> bool {
        norm(q) <= self.domain_radius * (1.0 + 1e-12)
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        if !self.in_ball(q) {
            return f64::INFINITY;
        }
        match &self.repr {
            Repr::Analytic(c) => (c.value)(q),
            Repr::Hull1d { hull, .. } => hull.eval(q[0]),
            Repr::Grid2d { axis, values } => bilinear(axis, values, q),
        }
    }

    /// Closed-form gradient, when available.
    pub fn gradient(&self, q: &[f64]) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Analytic(AnalyticConjugate { gradient: Some(g), .. }) if self.in_ball(q) => Some(g(q)),
            _ => None,
        }
    }

    /// Points of `dom σ*` that grid searches always include.
    pub fn anchors(&self) -> &[Vec<f64>] {
        match &self.repr {
            Repr::Analytic(c) => &c.anchors,
            _ => &[],
        }
    }

    /// Grid nodes and values of a numeric view (`None` in analytic mode).
    pub fn grid(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        match &self.repr {
            Repr::Analytic(_) => None,
            Repr::Hull1d { grid, values, .. } => Some((grid.iter().map(|&q| vec![q]).collect(), values.clone())),
            Repr::Grid2d { axis, values } => {
                let pts = axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect();
                Some((pts, values.clone()))
            }
        }
    }
}

fn bilinear(axis: &[f64], values: &[f64], q: &[f64]) -> f64 {
    let n = axis.len();
    let locate = |v: f64| {
        let k = axis.partition_point(|&a| a <= v).clamp(1, n - 1) - 1;
        let s = ((v - axis[k]) / (axis[k + 1] - axis[k])).clamp(0.0, 1.0);
        (k, s)
    };
    let (i, s) = locate(q[0]);
    let (j, r) = locate(q[1]);
    let at = |a: usize, b: usize| values[a * n + b];
    (1.0 - s) * ((1.0 - r) * at(i, j) + r * at(i, j + 1)) + s * ((1.0 - r) * at(i + 1, j) + r * at(i + 1, j + 1))
}

/// Discrete conjugate `g(q) = max over grid x in B'(0, radius_in) of ⟨x,q⟩ − f(x)`
/// tabulated on a grid over `[-radius_out, radius_out]^n`.
///
/// 1-D uses the linear-time hull transform. 2-D applies the 1-D transform
/// along each axis in turn (`sup_x2 [q2 x2 + sup_x1 (q1 x1 − f)]`), which is
/// exactly the brute-force grid maximum.
pub fn conjugate_numeric(
    f: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    radius_in: f64,
    radius_out: f64,
    nodes: usize,
) -> Result<ConjugateView> {
    if nodes < 3 {
        return Err(Error::Precondition(format!("need at least 3 nodes per axis, got {nodes}")));
    }
    if !(radius_in > 0.0 && radius_out > 0.0) {
        return Err(Error::Precondition("transform radii must be positive".into()));
    }
    let xs = linspace(-radius_in, radius_in, nodes);
    let qs = linspace(-radius_out, radius_out, nodes);
    match dim {
        1 => {
            let mut fs = Vec::with_capacity(nodes);
            for &x in &xs {
                let v = f(&[x]);
                if !v.is_finite() {
                    return Err(Error::Evaluation { what: "initial data σ", point: vec![x] });
                }
                fs.push(v);
            }
            let hull = DiscreteHull::new(&xs, &fs).expect("finite samples");
            let values = hull.transform_sorted(&qs);
            Ok(ConjugateView { dim, domain_radius: radius_out, repr: Repr::Hull1d { hull, grid: qs, values } })
        }
        2 => {
            // fx[i * n + j] = f(x_i, x_j), +inf outside the ball
            let n = nodes;
            let mut fx = vec![f64::INFINITY; n * n];
            for i in 0..n {
                for j in 0..n {
                    let p = [xs[i], xs[j]];
                    if norm(&p) <= radius_in * (1.0 + 1e-12) {
                        let v = f(&p);
                        if !v.is_finite() {
                            return Err(Error::Evaluation { what: "initial data σ", point: p.to_vec() });
                        }
                        fx[i * n + j] = v;
                    }
                }
            }
            // pass 1 over x_i for each fixed x_j: g[a * n + j] = sup_i q_a x_i − f(x_i, x_j)
            let mut g = vec![f64::NEG_INFINITY; n * n];
            for j in 0..n {
                let col: Vec<f64> = (0..n).map(|i| fx[i * n + j]).collect();
                if let Some(h) = DiscreteHull::new(&xs, &col) {
                    for (a, v) in h.transform_sorted(&qs).into_iter().enumerate() {
                        g[a * n + j] = v;
                    }
                }
            }
            // pass 2 over x_j: value[a * n + b] = sup_j q_b x_j + g(q_a; x_j)
            let mut values = vec![f64::INFINITY; n * n];
            for a in 0..n {
                let neg: Vec<f64> = (0..n).map(|j| -g[a * n + j]).collect();
                if let Some(h) = DiscreteHull::new(&xs, &neg) {
                    values[a * n..(a + 1) * n].copy_from_slice(&h.transform_sorted(&qs));
                }
            }
            Ok(ConjugateView { dim, domain_radius: radius_out, repr: Repr::Grid2d { axis: qs, values } })
        }
        _ => Err(Error::Domain(format!("numeric conjugates support n <= 2, got n = {dim}"))),
    }
}

/// `(σ*)*(x) = max over q-grid of ⟨x,q⟩ − σ*(q)` in 1-D, using `nodes`
/// samples of `[-M, M]` plus the view's anchors.
pub fn biconjugate_1d(view: &ConjugateView, xs: &[f64], nodes: usize) -> Vec<f64> {
    let m = view.domain_radius();
    let mut qs = linspace(-m, m, nodes);
    qs.extend(view.anchors().iter().map(|a| a[0]));
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let vals: Vec<f64> = qs.iter().map(|&q| view.value(&[q])).collect();
    match DiscreteHull::new(&qs, &vals) {
        Some(h) => xs.iter().map(|&x| h.eval(x)).collect(),
        None => vec![f64::NEG_INFINITY; xs.len()],
    }
}

/// One axis of a subdifferential box. Unbounded sides are clipped to the
/// query window and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub unbounded_below: bool,
    pub unbounded_above: bool,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v, unbounded_below: false, unbounded_above: false }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Finite approximation of `∂σ*(p0)` as a box (an interval in 1-D).
#[derive(Debug, Clone, PartialEq)]
pub struct Subdifferential {
    pub axes: Vec<Interval>,
}

impl Subdifferential {
    pub fn is_singleton(&self, tol: f64) -> bool {
        self.axes.iter().all(|a| a.width() <= tol && !a.unbounded_below && !a.unbounded_above)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.axes.iter().zip(y).all(|(a, &v)| a.contains(v, tol))
    }

    pub fn is_unbounded(&self) -> bool {
        self.axes.iter().any(|a| a.unbounded_below || a.unbounded_above)
    }

    /// Corner points of the box.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for a in &self.axes {
            let ends: Vec<f64> = if a.width() == 0.0 { vec![a.lo] } else { vec![a.lo, a.hi] };
            out = out
                .into_iter()
                .flat_map(|p| {
                    ends.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// `∂σ*(p0)` from one-sided difference quotients at step `step`, clipped to
/// `[-window, window]` per axis. An axis whose quotient gap shrinks with the
/// step is treated as differentiable and reported as a point (the closed-form
/// gradient in analytic mode); a gap that persists is reported as an interval.
pub fn subdifferential(view: &ConjugateView, p0: &[f64], step: f64, window: f64) -> Result<Subdifferential> {
    let v0 = view.value(p0);
    if p0.len() != view.dim() || !v0.is_finite() {
        return Err(Error::Domain(format!("p0 = {p0:?} is not in dom σ* (radius {})", view.domain_radius())));
    }
    let grad = view.gradient(p0);
    let quotients = |k: usize, h: f64| {
        let mut p = p0.to_vec();
        p[k] = p0[k] + h;
        let right = (view.value(&p) - v0) / h;
        p[k] = p0[k] - h;
        let left = (v0 - view.value(&p)) / h;
        (left, right)
    };
    let mut axes = Vec::with_capacity(p0.len());
    for k in 0..p0.len() {
        let (l1, r1) = quotients(k, step);
        let (l2, r2) = quotients(k, 0.5 * step);
        let unbounded_below = !l1.is_finite() || !l2.is_finite();
        let unbounded_above = !r1.is_finite() || !r2.is_finite();
        let axis = if !unbounded_below && !unbounded_above {
            let (g1, g2) = (r1 - l1, r2 - l2);
            let smooth = g2 <= 0.75 * g1 || g1 <= 1e-12 * (1.0 + r1.abs());
            if smooth {
                Interval::point(grad.as_ref().map_or(0.5 * (l2 + r2), |g| g[k]))
            } else {
                // Richardson extrapolation of the one-sided derivatives
                Interval { lo: 2.0 * l2 - l1, hi: 2.0 * r2 - r1, unbounded_below, unbounded_above }
            }
        } else {
            Interval {
                lo: if unbounded_below { -window } else { (2.0 * l2 - l1).max(-window) },
                hi: if unbounded_above { window } else { (2.0 * r2 - r1).min(window) },
                unbounded_below,
                unbounded_above,
            }
        };
        axes.push(axis);
    }
    Ok(Subdifferential { axes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentProbe {
    /// `⟨y, p − p0⟩ = σ*(p) − σ*(p0)` within tolerance.
    pub affine: bool,
    /// `σ*(p) − σ*(p0) − ⟨y, p − p0⟩`.
    pub gap: f64,
    /// Some interior point of `[p, p0]` broke the affine identity even though
    /// the endpoints satisfied it.
    pub inconsistent: bool,
    pub worst_interior: f64,
}

/// Tests whether `σ*` is affine with slope `y` along `[p0, p]`, given
/// `y ∈ ∂σ*(p0)`; when it is, also checks 8 interior points of the segment.
pub fn affine_segment_probe(view: &ConjugateView, p: &[f64], p0: &[f64], y: &[f64], tol: f64) -> Result<SegmentProbe> {
    let sub = subdifferential(view, p0, 1e-6, 1e6)?;
    if !sub.contains(y, tol.max(1e-6)) {
        return Err(Error::Precondition(format!("y = {y:?} is not a subgradient of σ* at p0 = {p0:?} ({sub:?})")));
    }
    let (vp, v0) = (view.value(p), view.value(p0));
    if !vp.is_finite() {
        return Err(Error::Domain(format!("p = {p:?} is not in dom σ*")));
    }
    let diff: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
    let gap = vp - v0 - dot(y, &diff);
    let affine = gap.abs() <= tol;
    let mut worst_interior: f64 = 0.0;
    if affine && norm(&diff) > 0.0 {
        for k in 1..=8 {
            let s = k as f64 / 9.0;
            let z: Vec<f64> = p0.iter().zip(&diff).map(|(a, d)| a + s * d).collect();
            let predicted = dot(y, &z) - dot(y, p0) + v0;
            worst_interior = worst_interior.max((view.value(&z) - predicted).abs());
        }
    }
    Ok(SegmentProbe { affine, gap, inconsistent: affine && worst_interior > tol, worst_interior })
}

/// `σ*(a) + σ*(b) − 2σ*((a+b)/2) − (μ/4)|a−b|²`.
pub fn duality_margin(view: &ConjugateView, mu: f64, a: &[f64], b: &[f64]) -> f64 {
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    view.value(a) + view.value(b) - 2.0 * view.value(&mid) - 0.25 * mu * d2
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub mu: f64,
    pub pairs_tested: usize,
    pub worst_margin: f64,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub passed: bool,
}

/// Samples the uniform-convexity inequality that semiconcavity of `σ` with
/// constant `1/μ` implies for `σ*`, on random pairs in `dom σ*`.
pub fn constant_duality_check(spec: &ProblemSpec, view: &ConjugateView, tol: f64) -> Result<DualityReport> {
    constant_duality_check_in(spec, view, tol, view.domain_radius(), 2000, 0x5eed_0002)
}

pub fn constant_duality_check_in(
    spec: &ProblemSpec,
    view: &ConjugateView,
    tol: f64,
    radius: f64,
    pairs: usize,
    seed: u64,
) -> Result<DualityReport> {
    let inv_mu = spec
        .semiconcavity_sigma
        .ok_or_else(|| Error::Precondition(format!("problem `{}` declares no semiconcavity constant for σ", spec.name)))?;
    let mu = 1.0 / inv_mu;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = || -> Vec<f64> {
        loop {
            let p: Vec<f64> = (0..view.dim()).map(|_| rng.gen_range(-radius..=radius)).collect();
            if norm(&p) <= radius {
                return p;
            }
        }
    };
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    let mut tested = 0;
    for _ in 0..pairs {
        let (a, b) = (sample(), sample());
        let m = duality_margin(view, mu, &a, &b);
        if !m.is_finite() {
            continue;
        }
        tested += 1;
        if m < worst {
            worst = m;
            worst_pair = Some((a, b));
        }
    }
    if tested == 0 {
        worst = 0.0;
    }
    Ok(DualityReport { mu, pairs_tested: tested, worst_margin: worst, worst_pair, passed: worst >= -tol })
}
