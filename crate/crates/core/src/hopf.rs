//! The Hopf formula `u(t,x) = max_q φ(t,x,q)` with
//! `φ(t,x,q) = ⟨x,q⟩ − σ*(q) − tH(q)`, and its maximizer set `ℓ(t,x)`.
//!
//! Maximization is restricted to `B'(0, L)`, which contains `dom σ*` for an
//! `L`-Lipschitz `σ`. The search is a uniform grid followed by local
//! refinement from every discrete local maximum in a near-max band.

use rayon::prelude::*;

use crate::conjugate::ConjugateView;
use crate::error::{Error, Result};
use crate::numeric::{dist, dot, golden_max, golden_min, linspace, product_grid, roots_1d, simplex_max};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Nodes per axis; `None` means 2001 in 1-D and 161 per axis otherwise.
    pub grid_nodes: Option<usize>,
    /// Keep refined points with `φ ≥ max − value_tol_rel·(1 + |max|)`.
    pub value_tol_rel: f64,
    /// Refine from grid maxima within `band_rel · (grid value range)` of the top.
    pub band_rel: f64,
    /// Merge radius; `None` means `1e-4 · L`.
    pub cluster_tol: Option<f64>,
    /// Diameter below which `ℓ` counts as a singleton; `None` means `1e-3 · L`.
    pub singleton_tol: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { grid_nodes: None, value_tol_rel: 1e-9, band_rel: 1e-4, cluster_tol: None, singleton_tol: None }
    }
}

impl SolveOptions {
    pub fn grid_nodes_for(&self, dim: usize) -> usize {
        self.grid_nodes.unwrap_or(if dim == 1 { 2001 } else { 161 })
    }

    pub fn cluster_tol_for(&self, radius: f64) -> f64 {
        self.cluster_tol.unwrap_or(1e-4 * radius)
    }

    pub fn singleton_tol_for(&self, radius: f64) -> f64 {
        self.singleton_tol.unwrap_or(1e-3 * radius)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_nodes.is_some_and(|n| n < 3) {
            return Err(Error::Config("grid_nodes must be at least 3".into()));
        }
        let positive = [
            ("value_tol_rel", Some(self.value_tol_rel)),
            ("band_rel", Some(self.band_rel)),
            ("cluster_tol", self.cluster_tol),
            ("singleton_tol", self.singleton_tol),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Numerical `ℓ(t,x)` together with `u(t,x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximizerSet {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    /// Cluster representatives, sorted lexicographically.
    pub representatives: Vec<Vec<f64>>,
    pub diameter: f64,
    pub value_tol: f64,
    pub cluster_tol: f64,
    pub singleton_tol: f64,
    pub singleton: bool,
}

impl MaximizerSet {
    /// Distance from `q` to the nearest representative.
    pub fn distance_to(&self, q: &[f64]) -> f64 {
        self.representatives.iter().map(|r| dist(r, q)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        self.distance_to(q) <= tol
    }
}

fn phi_raw(spec: &ProblemSpec, view: &ConjugateView, t: f64, x: &[f64], q: &[f64]) -> f64 {
    let s = view.value(q);
    if s == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let h = if t == 0.0 { 0.0 } else { t * spec.hamiltonian(q) };
    dot(x, q) - s - h
}

/// `φ(t,x,q)`; `-inf` where `σ*(q) = +inf`.
pub fn phi(spec: &ProblemSpec, view: &ConjugateView, t: f64, x: &[f64], q: &[f64]) -> Result<f64> {
    spec.check_time(t)?;
    spec.check_point(x)?;
    if view.value(q) < f64::INFINITY && !spec.hamiltonian(q).is_finite() {
        return Err(Error::Evaluation { what: "Hamiltonian H", point: q.to_vec() });
    }
    Ok(phi_raw(spec, view, t, x, q))
}

/// `u(t,x)` and `ℓ(t,x)`.
pub fn evaluate(spec: &ProblemSpec, view: &ConjugateView, t: f64, x: &[f64], opts: &SolveOptions) -> Result<MaximizerSet> {
    spec.check_time(t)?;
    spec.check_point(x)?;
    let m = view.domain_radius();
    let n = opts.grid_nodes_for(spec.dim);
    let f = |q: &[f64]| phi_raw(spec, view, t, x, q);

    let axis = linspace(-m, m, n);
    let h = axis[1] - axis[0];
    let (nodes, values) = if spec.dim == 1 {
        let v: Vec<f64> = axis.iter().map(|&q| f(&[q])).collect();
        (axis.iter().map(|&q| vec![q]).collect::<Vec<_>>(), v)
    } else {
        let pts = product_grid(&vec![axis.clone(); spec.dim]);
        let v: Vec<f64> = pts.iter().map(|q| f(q)).collect();
        (pts, v)
    };
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Evaluation { what: "Hamiltonian H", point: nodes[i].clone() });
    }

    let mut finite = values.iter().copied().filter(|v| v.is_finite());
    let first = finite.next();
    let anchors: Vec<(Vec<f64>, f64)> = view.anchors().iter().map(|a| (a.clone(), f(a))).filter(|(_, v)| v.is_finite()).collect();
    let (mut top, mut bottom) = match first {
        Some(v) => finite.fold((v, v), |(hi, lo), v| (hi.max(v), lo.min(v))),
        None if !anchors.is_empty() => (f64::NEG_INFINITY, f64::INFINITY),
        None => return Err(Error::Infeasible { radius: m }),
    };
    for (_, v) in &anchors {
        top = top.max(*v);
        bottom = bottom.min(*v);
    }
    let threshold = top - opts.band_rel * (top - bottom) - opts.value_tol_rel * (1.0 + top.abs());

    let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
    if spec.dim == 1 {
        let g = |q: f64| f(&[q]);
        for i in 0..n {
            let v = values[i];
            if !(v.is_finite() && v >= threshold) {
                continue;
            }
            let left_ok = i == 0 || !(values[i - 1] > v);
            let right_ok = i + 1 == n || !(values[i + 1] > v);
            if !(left_ok && right_ok) {
                continue;
            }
            let q = axis[i];
            let xtol = 1e-12 * (1.0 + m);
            // both half-brackets, so twin maxima straddling one node are both found
            if i > 0 {
                let (a, va) = golden_max(&g, (q - h).max(-m), q, q, v, xtol);
                refined.push((vec![a], va));
            }
            if i + 1 < n {
                let (b, vb) = golden_max(&g, q, (q + h).min(m), q, v, xtol);
                refined.push((vec![b], vb));
            }
        }
    } else {
        let strides: Vec<usize> = (0..spec.dim).map(|k| n.pow((spec.dim - 1 - k) as u32)).collect();
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= threshold) {
                continue;
            }
            if !is_grid_local_max(&values, i, n, &strides) {
                continue;
            }
            let (q, vq) = simplex_max(&f, &nodes[i], 0.5 * h, 1e-10 * (1.0 + m), 4000);
            refined.push(if vq >= v { (q, vq) } else { (nodes[i].clone(), v) });
        }
    }
    refined.extend(anchors);
    if refined.is_empty() {
        return Err(Error::Infeasible { radius: m });
    }

    let value = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let value_tol = opts.value_tol_rel * (1.0 + value.abs());
    let cluster_tol = opts.cluster_tol_for(m);
    let singleton_tol = opts.singleton_tol_for(m);
    refined.retain(|r| r.1 >= value - value_tol);
    refined.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for (q, _) in refined {
        if reps.iter().all(|r| dist(r, &q) > cluster_tol) {
            reps.push(q);
        }
    }
    reps.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut diameter: f64 = 0.0;
    for (i, a) in reps.iter().enumerate() {
        for b in &reps[i + 1..] {
            diameter = diameter.max(dist(a, b));
        }
    }
    Ok(MaximizerSet {
        t,
        x: x.to_vec(),
        value,
        representatives: reps,
        diameter,
        value_tol,
        cluster_tol,
        singleton_tol,
        singleton: diameter <= singleton_tol,
    })
}

fn is_grid_local_max(values: &[f64], i: usize, n: usize, strides: &[usize]) -> bool {
    let v = values[i];
    let idx: Vec<usize> = strides.iter().map(|s| (i / s) % n).collect();
    let dim = strides.len();
    // all 3^dim − 1 neighbours
    for code in 0..3usize.pow(dim as u32) {
        let mut j = 0usize;
        let mut c = code;
        let mut centre = true;
        let mut inside = true;
        for k in 0..dim {
            let d = (c % 3) as isize - 1;
            c /= 3;
            centre &= d == 0;
            let p = idx[k] as isize + d;
            if p < 0 || p >= n as isize {
                inside = false;
                break;
            }
            j += p as usize * strides[k];
        }
        if !centre && inside && values[j] > v {
            return false;
        }
    }
    true
}

/// Bisects the segment `[a, b]` at time `t`, whose end points have maximizers
/// more than `singleton_tol` apart, down to a singular point. Returns `None`
/// when the maximizer moves continuously (no jump is present).
pub fn locate_jump(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    a: &[f64],
    b: &[f64],
    opts: &SolveOptions,
) -> Result<Option<MaximizerSet>> {
    let mut ea = evaluate(spec, view, t, a, opts)?;
    let mut eb = evaluate(spec, view, t, b, opts)?;
    for e in [&ea, &eb] {
        if !e.singleton {
            return Ok(Some(e.clone()));
        }
    }
    let tol = ea.singleton_tol;
    if dist(&ea.representatives[0], &eb.representatives[0]) <= tol {
        return Ok(None);
    }
    for _ in 0..80 {
        let mid: Vec<f64> = ea.x.iter().zip(&eb.x).map(|(p, q)| 0.5 * (p + q)).collect();
        if mid == ea.x || mid == eb.x {
            break;
        }
        let em = evaluate(spec, view, t, &mid, opts)?;
        if !em.singleton {
            return Ok(Some(em));
        }
        let ja = dist(&ea.representatives[0], &em.representatives[0]);
        let jb = dist(&em.representatives[0], &eb.representatives[0]);
        if ja >= jb {
            eb = em;
        } else {
            ea = em;
        }
        if ja.max(jb) <= tol {
            return Ok(None);
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub diameter: f64,
    pub singleton: bool,
}

/// Rows sorted by `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub dim: usize,
    pub rows: Vec<FieldRow>,
}

/// Tabulates `u`, `diam ℓ` and the singleton flag over `t_values × grid`,
/// where the grid has `nodes` points per axis of `window`.
pub fn field(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t_values: &[f64],
    window: &[(f64, f64)],
    nodes: usize,
    opts: &SolveOptions,
) -> Result<FieldTable> {
    if window.len() != spec.dim {
        return Err(Error::Config(format!("window has {} axes, problem has dimension {}", window.len(), spec.dim)));
    }
    if window.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::Config(format!("window {window:?} must be finite with lo <= hi")));
    }
    let mut ts = t_values.to_vec();
    ts.sort_by(f64::total_cmp);
    let axes: Vec<Vec<f64>> = window.iter().map(|&(lo, hi)| linspace(lo, hi, nodes)).collect();
    let xs = product_grid(&axes);
    let jobs: Vec<(f64, &Vec<f64>)> = ts.iter().flat_map(|&t| xs.iter().map(move |x| (t, x))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(t, x)| {
            evaluate(spec, view, t, x, opts)
                .map(|m| FieldRow { t, x: x.clone(), value: m.value, diameter: m.diameter, singleton: m.singleton })
                .map_err(|e| e.at_node(t, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldTable { dim: spec.dim, rows })
}

/// Stationary points of `q ↦ φ(t,x,q)` in 1-D on `[lo, hi] ∩ [−L, L]`:
/// roots of `x − (σ*)'(q) − tH'(q)`, located by sign changes on `samples`
/// nodes and refined by bisection.
pub fn stationary_points(
    spec: &ProblemSpec,
    view: &ConjugateView,
    t: f64,
    x: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if spec.dim != 1 {
        return Err(Error::Domain("stationary_points is one-dimensional".into()));
    }
    spec.check_time(t)?;
    let m = view.domain_radius();
    let (lo, hi) = (lo.max(-m), hi.min(m));
    let dsigma = |q: f64| match view.gradient(&[q]) {
        Some(g) => g[0],
        None => {
            let e = 1e-6 * (1.0 + q.abs());
            (view.value(&[q + e]) - view.value(&[q - e])) / (2.0 * e)
        }
    };
    let r = |q: f64| x - dsigma(q) - t * spec.hamiltonian_grad(&[q])[0];
    Ok(roots_1d(&r, lo, hi, samples, 1e-10, 1e-6))
}

/// Brute-force Hopf–Lax value `min_y σ(y) + t·lagrangian((x−y)/t)` in 1-D,
/// for convex `H` with Legendre transform `lagrangian`. A cross-check oracle;
/// the minimizer satisfies `|x − y| ≤ tL`, which bounds the search.
pub fn hopf_lax_1d(spec: &ProblemSpec, lagrangian: &dyn Fn(f64) -> f64, t: f64, x: f64, nodes: usize) -> Result<f64> {
    if spec.dim != 1 {
        return Err(Error::Domain("hopf_lax_1d is one-dimensional".into()));
    }
    if t == 0.0 {
        return Ok(spec.initial(&[x]));
    }
    let reach = t * spec.lipschitz_bound * (1.0 + 1e-9) + 1e-12;
    let g = |y: f64| spec.initial(&[y]) + t * lagrangian((x - y) / t);
    let ys = linspace(x - reach, x + reach, nodes.max(3));
    let (i, _) = ys.iter().map(|&y| g(y)).enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty grid");
    let h = ys[1] - ys[0];
    let (a, b) = (ys[i] - h, ys[i] + h);
    let (_, v) = golden_min(&g, a.max(ys[0]), b.min(ys[ys.len() - 1]), 1e-14 * (1.0 + x.abs()));
    Ok(v.min(g(ys[i])))
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
    fn phi_at_two_two_fifths() {
        let (s, v) = setup("log-example");
        let got = phi(&s, &v, 2.0, &[0.4], &[2.0]).unwrap();
        assert!((got - (0.8 - 2.0 + 2.0 * 5f64.ln())).abs() < 1e-12);
        // against a brute-force grid conjugate of σ
        let brute = crate::conjugate::conjugate_numeric(&|x| s.initial(x), 1, 16.0, 8.0, 16001).unwrap();
        assert!((brute.value(&[2.0]) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn phi_without_time_term() {
        let (s, v) = setup("zero-h");
        let a = phi(&s, &v, 0.0, &[0.3], &[0.5]).unwrap();
        let b = phi(&s, &v, 1.7, &[0.3], &[0.5]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 0.15 - v.value(&[0.5]));
        let (l, lv) = setup("linear-sigma");
        assert_eq!(phi(&l, &lv, 1.0, &[0.0], &[1.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn singleton_at_two_two_fifths() {
        let (s, v) = setup("log-example");
        let m = evaluate(&s, &v, 2.0, &[0.4], &SolveOptions::default()).unwrap();
        assert!(m.singleton);
        assert!((m.representatives[0][0] - 2.0).abs() < 1e-6, "{m:?}");
        assert!((m.value - (0.8 - 2.0 + 2.0 * 5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn twin_maximizers_at_one_zero() {
        let (s, v) = setup("log-example");
        let m = evaluate(&s, &v, 1.0, &[0.0], &SolveOptions::default()).unwrap();
        assert_eq!(m.representatives.len(), 2, "{m:?}");
        assert!((m.representatives[0][0] + 1.0).abs() < 1e-6);
        assert!((m.representatives[1][0] - 1.0).abs() < 1e-6);
        assert!((m.diameter - 2.0).abs() < 1e-5 && !m.singleton);
    }

    #[test]
    fn linear_sigma_is_a_point() {
        let (s, v) = setup("linear-sigma");
        let m = evaluate(&s, &v, 1.3, &[0.7], &SolveOptions::default()).unwrap();
        assert_eq!(m.representatives, vec![vec![2.0]]);
        assert!((m.value - (1.4 + 1.3 * 5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn time_outside_horizon_is_rejected() {
        let (s, v) = setup("log-example");
        assert!(matches!(evaluate(&s, &v, 3.0, &[0.0], &SolveOptions::default()), Err(Error::Domain(_))));
        assert!(matches!(evaluate(&s, &v, -0.1, &[0.0], &SolveOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn initial_time_returns_sigma() {
        let (s, v) = setup("log-example-unit");
        for x in [-2.5, -0.4, 0.0, 0.9, 1.7] {
            let m = evaluate(&s, &v, 0.0, &[x], &SolveOptions::default()).unwrap();
            assert!((m.value - s.initial(&[x])).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn field_is_sorted_and_static_for_zero_h() {
        let (s, v) = setup("zero-h");
        let f = field(&s, &v, &[0.5], &[(-2.0, 2.0)], 21, &SolveOptions::default()).unwrap();
        assert_eq!(f.rows.len(), 21);
        for r in &f.rows {
            assert!((r.value - s.initial(&r.x)).abs() < 1e-8, "{r:?}");
        }
        let (s, v) = setup("log-example");
        let f = field(&s, &v, &[1.0, 0.25], &[(-2.0, 2.0)], 101, &SolveOptions::default()).unwrap();
        assert!(f.rows.windows(2).all(|w| (w[0].t, w[0].x[0]) < (w[1].t, w[1].x[0])));
        for r in &f.rows {
            let expect_singular = r.t == 1.0 && r.x[0] == 0.0;
            assert_eq!(r.singleton, !expect_singular, "{r:?}");
        }
    }

    #[test]
    fn field_errors_carry_node() {
        let (s, v) = setup("log-example");
        let e = field(&s, &v, &[5.0], &[(0.0, 1.0)], 3, &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::AtNode { t, .. } if t == 5.0));
    }

    #[test]
    fn stationary_points_of_worked_example() {
        let (s, v) = setup("log-example");
        let r = stationary_points(&s, &v, 2.0, 0.4, -8.0, 8.0, 20001).unwrap();
        let want = [(-4.0 - 11f64.sqrt()) / 5.0, (-4.0 + 11f64.sqrt()) / 5.0, 2.0];
        assert_eq!(r.len(), 3, "{r:?}");
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn jump_is_located() {
        let (s, v) = setup("log-example");
        let m = locate_jump(&s, &v, 1.0, &[-0.37], &[0.21], &SolveOptions::default()).unwrap().unwrap();
        assert!(m.x[0].abs() < 1e-9 && !m.singleton, "{m:?}");
        assert!(locate_jump(&s, &v, 0.3, &[-0.37], &[0.21], &SolveOptions::default()).unwrap().is_none());
    }

    #[test]
    fn two_dimensional_radial_example() {
        let (s, v) = setup("log-example-2d");
        let m = evaluate(&s, &v, 0.3, &[0.2, -0.1], &SolveOptions::default()).unwrap();
        assert!(m.singleton, "{m:?}");
        let m = evaluate(&s, &v, 1.0, &[0.0, 0.0], &SolveOptions::default()).unwrap();
        assert!(!m.singleton);
        for r in &m.representatives {
            assert!((crate::numeric::norm(r) - 1.0).abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn hopf_lax_agrees_on_quad_quad() {
        let (s, v) = setup("quad-quad");
        for (t, x) in [(0.3, 0.5), (0.9, -2.0), (0.5, 5.0)] {
            let hl = hopf_lax_1d(&s, &|w| 0.5 * w * w, t, x, 20001).unwrap();
            let hm = evaluate(&s, &v, t, &[x], &SolveOptions::default()).unwrap().value;
            assert!((hl - hm).abs() < 1e-9, "{t} {x}: {hl} vs {hm}");
        }
    }

    #[test]
    fn option_validation() {
        assert!(SolveOptions::default().validate().is_ok());
        let bad = SolveOptions { grid_nodes: Some(2), ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = SolveOptions { cluster_tol: Some(0.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
