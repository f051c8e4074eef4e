//! Small numerical kernels shared by the solver modules: grids, vector
//! helpers, bracketed 1-D maximization, simplex ascent, and dense root search.

/// `n` equally spaced nodes on `[lo, hi]`. The endpoints are reproduced
/// exactly and the grid is symmetric when `lo == -hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let m = (n - 1) as f64;
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        // symmetric about the midpoint
                        mid + half * ((2 * i) as f64 - m) / m
                    }
                })
                .collect()
        }
    }
}

/// Cartesian product grid over a box, one axis list per dimension,
/// first axis varying slowest.
pub fn product_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

pub fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`, seeded with a known
/// point `seed` (value `seed_val`). Values of `-inf` are allowed; the
/// returned pair is the best point seen, which is never worse than the seed.
pub fn golden_max(
    f: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    seed: f64,
    seed_val: f64,
    xtol: f64,
) -> (f64, f64) {
    let mut best = (seed, seed_val);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Golden-section minimization; thin wrapper around [`golden_max`].
pub fn golden_min(f: &dyn Fn(f64) -> f64, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let g = |x: f64| -f(x);
    let (x, v) = golden_max(&g, a, b, mid, g(mid), xtol);
    (x, -v)
}

/// Nelder–Mead ascent from `x0` with initial simplex edge `step`.
/// Points where `f` is `-inf` are treated as infeasible and never accepted.
pub fn simplex_max(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, xtol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        let mut v = f(&p);
        if v == f64::NEG_INFINITY {
            p[i] = x0[i] - step;
            v = f(&p);
        }
        simplex.push((p, v));
    }
    let by_value_desc = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| b.1.total_cmp(&a.1);
    for _ in 0..max_iter {
        simplex.sort_by(by_value_desc);
        let size = simplex[1..].iter().map(|(p, _)| dist(p, &simplex[0].0)).fold(0.0, f64::max);
        if size <= xtol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect = axpy(-1.0, &worst.0, &axpy(2.0, &centroid, &vec![0.0; n]));
        let fr = f(&reflect);
        if fr > simplex[0].1 {
            let expand = axpy(2.0, &axpy(-1.0, &centroid, &reflect), &centroid);
            let fe = f(&expand);
            simplex[n] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract = lerp(&centroid, &worst.0, 0.5);
            let fcn = f(&contract);
            if fcn > worst.1 {
                simplex[n] = (contract, fcn);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let p = lerp(&best, &item.0, 0.5);
                    let v = f(&p);
                    *item = (p, v);
                }
            }
        }
    }
    simplex.sort_by(by_value_desc);
    simplex.swap_remove(0)
}

/// Dense sign-change root search on `[lo, hi]` with bisection refinement,
/// plus a best-effort pass for tangential roots at local minima of `|f|`.
/// Roots closer than `dedup` are merged.
pub fn roots_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, samples: usize, residual_tol: f64, dedup: f64) -> Vec<f64> {
    let xs = linspace(lo, hi, samples.max(3));
    let rs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..xs.len() {
        if rs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i + 1 < xs.len() && rs[i].is_finite() && rs[i + 1].is_finite() && rs[i] * rs[i + 1] < 0.0 {
            if let Some(r) = bisect(f, xs[i], xs[i + 1], rs[i], residual_tol) {
                roots.push(r);
            }
        }
    }
    // tangential roots: |f| has a local minimum without a sign change
    for i in 1..xs.len().saturating_sub(1) {
        let (a, m, b) = (rs[i - 1].abs(), rs[i].abs(), rs[i + 1].abs());
        let same_sign = rs[i - 1] * rs[i] > 0.0 && rs[i] * rs[i + 1] > 0.0;
        if same_sign && m <= a && m <= b {
            let g = |x: f64| f(x).abs();
            let (x, v) = golden_min(&g, xs[i - 1], xs[i + 1], 1e-14 * (1.0 + xs[i].abs()));
            if v <= residual_tol {
                roots.push(x);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if out.last().is_none_or(|&last| r - last > dedup) {
            out.push(r);
        }
    }
    out
}

/// Bisection on a sign change. Returns `None` when the bracket collapses
/// onto a jump discontinuity instead of a root.
fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, residual_tol: f64) -> Option<f64> {
    let mut fb = f(b);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
        if (b - a) <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let (x, r) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    (r.abs() <= residual_tol.max(1e-8)).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_is_symmetric_and_exact_at_ends() {
        let g = linspace(-8.0, 8.0, 2001);
        assert_eq!(g[0], -8.0);
        assert_eq!(g[2000], 8.0);
        assert_eq!(g[1000], 0.0);
        for i in 0..2001 {
            assert_eq!(g[i], -g[2000 - i]);
        }
        let h = linspace(-0.1, 0.1, 21);
        assert_eq!(h[10], 0.0);
    }

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        let (x, _) = golden_max(&f, 0.0, 1.0, 0.0, f(0.0), 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
        let g = |x: f64| x;
        let (x, _) = golden_max(&g, 0.0, 1.0, 0.0, 0.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn golden_keeps_seed_on_infeasible_bracket() {
        let f = |x: f64| if x == 2.0 { 1.0 } else { f64::NEG_INFINITY };
        let (x, v) = golden_max(&f, 1.9, 2.0, 2.0, 1.0, 1e-12);
        assert_eq!((x, v), (2.0, 1.0));
    }

    #[test]
    fn simplex_ascends_to_quadratic_peak() {
        let f = |p: &[f64]| -((p[0] - 0.2).powi(2) + 2.0 * (p[1] + 0.4).powi(2));
        let (x, v) = simplex_max(&f, &[0.0, 0.0], 0.1, 1e-10, 2000);
        assert!((x[0] - 0.2).abs() < 1e-6 && (x[1] + 0.4).abs() < 1e-6, "{x:?}");
        assert!(v > -1e-10);
    }

    #[test]
    fn roots_of_cubic() {
        let f = |x: f64| (x - 1.0) * (x + 0.5) * (x - 2.0);
        let r = roots_1d(&f, -3.0, 3.0, 601, 1e-10, 1e-6);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-0.5, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_is_not_a_root_but_tangency_is() {
        let f = |x: f64| if x < 0.3 { -1.0 } else { 1.0 };
        assert!(roots_1d(&f, -1.0, 1.0, 101, 1e-10, 1e-6).is_empty());
        let g = |x: f64| (x - 0.123) * (x - 0.123);
        let r = roots_1d(&g, -1.0, 1.0, 101, 1e-10, 1e-6);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.123).abs() < 1e-5);
    }

    #[test]
    fn central_gradient_matches_analytic() {
        let f = |p: &[f64]| p[0].sin() * p[1];
        let g = central_gradient(&f, &[0.4, 2.0], 1e-5);
        assert!((g[0] - 0.4f64.cos() * 2.0).abs() < 1e-8);
        assert!((g[1] - 0.4f64.sin()).abs() < 1e-8);
    }
}
