//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test --test acceptance`.

use std::time::Instant;

use hopf_core::characteristics::{
    classify, crossing_time, persistence_check, reachable_gradients, Characteristic, CharType, CrossValidation,
};
use hopf_core::cli;
use hopf_core::config::DEFAULT_SEED;
use hopf_core::conjugate::{biconjugate_1d, conjugate_numeric, ConjugateView};
use hopf_core::hopf::{evaluate, hopf_lax_1d, stationary_points, SolveOptions};
use hopf_core::numeric::{linspace, product_grid};
use hopf_core::problem::{catalog, ProblemSpec};
use hopf_core::regularity::{
    estimate_theta, plane_singleton_check, sample_points, strip_bound, viscosity_audit_points, PointKind,
};
use hopf_core::singularity::{trace, ScanOptions};
use hopf_core::Result;

type Outcome = Result<(bool, String)>;

fn setup(name: &str) -> (ProblemSpec, ConjugateView) {
    let spec = catalog::lookup(name).expect("catalog entry");
    let view = ConjugateView::for_problem(&spec).expect("conjugate");
    (spec, view)
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn sqrt11() -> f64 {
    11f64.sqrt()
}

fn critical_points() -> Outcome {
    let (spec, view) = setup("log-example");
    let roots = stationary_points(&spec, &view, 2.0, 0.4, -8.0, 8.0, 20001)?;
    let want = [(-4.0 - sqrt11()) / 5.0, (-4.0 + sqrt11()) / 5.0, 2.0];
    let roots_ok = roots.len() == 3 && roots.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-6);
    let m = evaluate(&spec, &view, 2.0, &[0.4], &opts())?;
    let max_ok = m.singleton && (m.representatives[0][0] - 2.0).abs() <= 1e-6;
    Ok((roots_ok && max_ok, format!("roots {roots:?}, maximizers {:?}", m.representatives)))
}

fn singular_maximizers() -> Outcome {
    let (spec, view) = setup("log-example");
    let mut worst = 0.0f64;
    let mut ok = true;
    for t1 in [0.75, 1.0, 1.5] {
        let m = evaluate(&spec, &view, t1, &[0.0], &opts())?;
        let s = (2.0 * t1 - 1.0).sqrt();
        if m.representatives.len() != 2 {
            ok = false;
            continue;
        }
        worst = worst.max((m.representatives[0][0] + s).abs()).max((m.representatives[1][0] - s).abs());
    }
    Ok((ok && worst <= 1e-4, format!("worst deviation from ±sqrt(2t-1): {worst:.3e}")))
}

fn strip() -> Outcome {
    let (spec, view) = setup("log-example");
    let rep = estimate_theta(&spec, &view, &[(-3.0, 3.0)], 201, 12, &opts())?;
    let plane = plane_singleton_check(&spec, &view, 0.5, &[(-3.0, 3.0)], 201, &opts())?;
    let bound = strip_bound(&spec)?;
    let ok = (rep.theta_estimate - 0.5).abs() <= 0.01 && plane.passed && bound == 0.25 && bound <= rep.theta_estimate;
    Ok((ok, format!("theta {:.6}, plane(0.5) {}, t* {bound}", rep.theta_estimate, plane.passed)))
}

fn propagation() -> Outcome {
    let (spec, view) = setup("log-example");
    let path = trace(&spec, &view, 0.6, &[0.0], 0.05, 2.0, &opts(), &ScanOptions::default())?;
    let max_x = path.nodes.iter().map(|(_, x)| x[0].abs()).fold(0.0, f64::max);
    let diam_err = path
        .nodes
        .iter()
        .zip(&path.diameters)
        .map(|((t, _), d)| (d - 2.0 * (2.0 * t - 1.0).sqrt()).abs())
        .fold(0.0, f64::max);
    let ok = path.complete(2.0) && max_x <= 0.02 && diam_err <= 1e-2;
    Ok((ok, format!("{} nodes, max |x| {max_x:.2e}, diameter error {diam_err:.2e}", path.nodes.len())))
}

fn crossing() -> Outcome {
    let (spec, view) = setup("sqrt-example");
    let d = 2.0 * 2f64.sqrt() - 5f64.sqrt();
    let (t_want, x_want) = (10f64.sqrt() / d, 2.0 * (2f64.sqrt() - 5f64.sqrt()) / d);
    let Some((t, x)) = crossing_time(&spec, &[1.0], &[2.0], 0.1, spec.horizon - 0.1) else {
        return Ok((false, "curves from y=1 and y=2 do not meet".into()));
    };
    let located = (t - t_want).abs() <= 1e-6 && (x[0] - x_want).abs() <= 1e-6;
    let mut singleton = evaluate(&spec, &view, t, &x, &opts())?.singleton;
    for k in 0..8 {
        let a = std::f64::consts::TAU * k as f64 / 8.0;
        singleton &= evaluate(&spec, &view, t + 0.05 * a.cos(), &[x[0] + 0.05 * a.sin()], &opts())?.singleton;
    }
    Ok((located && singleton, format!("crossing ({t:.9}, {:.9}), singleton on the ring {singleton}", x[0])))
}

/// Curves and expected types at the two worked points.
fn typed_curves() -> Vec<(f64, f64, f64, CharType)> {
    let s = sqrt11();
    vec![
        (2.0, 0.4, 2.0, CharType::TypeI),
        (2.0, 0.4, (-4.0 + s) / 5.0, CharType::TypeII),
        (2.0, 0.4, (-4.0 - s) / 5.0, CharType::TypeII),
        (1.0, 0.0, 0.0, CharType::TypeII),
        (1.0, 0.0, 1.0, CharType::TypeI),
        (1.0, 0.0, -1.0, CharType::TypeI),
    ]
}

fn classification() -> Outcome {
    let (spec, view) = setup("log-example");
    let mut wrong = Vec::new();
    for (t0, x0, y, want) in typed_curves() {
        let c = Characteristic::new(&spec, &[y]);
        let got = classify(&spec, &view, &c, t0, &[x0], &opts())?.tag;
        if got != want {
            wrong.push(format!("y={y:.6} at ({t0}, {x0}) is {got}"));
        }
    }
    Ok((wrong.is_empty(), if wrong.is_empty() { "6 curves typed as expected".into() } else { wrong.join("; ") }))
}

fn persistence() -> Outcome {
    let (spec, view) = setup("log-example");
    let mut failures = Vec::new();
    let mut n = 0;
    for (t0, _, y, want) in typed_curves() {
        if want != CharType::TypeI {
            continue;
        }
        n += 1;
        let rep = persistence_check(&spec, &view, &Characteristic::new(&spec, &[y]), t0, 16, &opts())?;
        if let Some((k, why)) = rep.first_violation {
            failures.push(format!("y={y}: sample {k} {why}"));
        }
    }
    Ok((failures.is_empty(), if failures.is_empty() { format!("{n} curves, 16 samples each") } else { failures.join("; ") }))
}

fn reachable() -> Outcome {
    let (spec, view) = setup("log-example");
    let regular = [(0.3, 0.5), (1.0, 1.0), (2.0, 0.4), (1.5, -1.2), (2.5, 2.0)];
    let singular = [(0.75, 0.0), (1.0, 0.0), (1.5, 0.0), (2.0, 0.0), (2.5, 0.0)];
    let cross = CrossValidation::default();
    let mut bad = Vec::new();
    for (t, x) in regular.iter().chain(&singular) {
        let rep = reachable_gradients(&spec, &view, *t, &[*x], &opts(), Some(&cross))?;
        if !rep.consistent() {
            bad.push(format!("({t}, {x}): {} unmatched, {} unapproached", rep.unmatched_samples, rep.unapproached_pairs));
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "10 points consistent with 20 samples each".into() } else { bad.join("; ") }))
}

fn involution_error(spec: &ProblemSpec, nodes: usize) -> Result<f64> {
    let m = spec.domain_radius();
    let reach = spec.transform_radius / 2.0;
    let conj = conjugate_numeric(&|x| spec.initial(x), spec.dim, spec.transform_radius, m, nodes)?;
    match spec.dim {
        1 => {
            let xs = linspace(-reach, reach, 401);
            let back = biconjugate_1d(&conj, &xs, nodes);
            Ok(xs.iter().zip(back).map(|(x, b)| (b - spec.initial(&[*x])).abs()).fold(0.0, f64::max))
        }
        _ => {
            let back = conjugate_numeric(&|q| conj.value(q), spec.dim, m, reach, nodes)?;
            let axis = linspace(-reach / 2.0, reach / 2.0, 21);
            let pts = product_grid(&vec![axis; spec.dim]);
            Ok(pts.iter().map(|x| (back.value(x) - spec.initial(x)).abs()).fold(0.0, f64::max))
        }
    }
}

fn involution() -> Outcome {
    let mut worst = (0.0f64, "");
    for name in catalog::names() {
        let spec = catalog::lookup(name)?;
        let e = involution_error(&spec, 4001)?;
        if e >= worst.0 {
            worst = (e, name);
        }
    }
    Ok((worst.0 <= 1e-4, format!("worst |σ** − σ| {:.3e} ({})", worst.0, worst.1)))
}

fn hopf_vs_lax() -> Outcome {
    let (spec, view) = setup("quad-quad");
    let lagrangian = |v: f64| 0.5 * v * v;
    let mut worst = 0.0f64;
    for t in linspace(0.05, 0.95, 20) {
        for x in linspace(-3.0, 3.0, 20) {
            let max_form = evaluate(&spec, &view, t, &[x], &opts())?.value;
            let min_form = hopf_lax_1d(&spec, &lagrangian, t, x, 20001)?;
            worst = worst.max((max_form - min_form).abs());
        }
    }
    Ok((worst <= 1e-5, format!("max gap over 400 points {worst:.3e}")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn viscosity() -> Outcome {
    let (spec, view) = setup("log-example");
    let candidates = sample_points(&spec, 200, 1e-3, &[(-3.0, 3.0)], DEFAULT_SEED);
    let fine = viscosity_audit_points(&spec, &view, &candidates, 1e-4, 1e-9, &opts())?;
    let points: Vec<(f64, Vec<f64>)> = fine
        .points
        .iter()
        .filter(|p| p.kind == PointKind::Regular)
        .take(50)
        .map(|p| (p.t, p.x.clone()))
        .collect();
    if points.len() < 50 {
        return Ok((false, format!("only {} regular points among 200 draws", points.len())));
    }
    let fine = viscosity_audit_points(&spec, &view, &points, 1e-4, 1e-9, &opts())?;
    let coarse = viscosity_audit_points(&spec, &view, &points, 1e-3, 1e-9, &opts())?;
    let r_fine: Vec<f64> = fine.points.iter().map(|p| p.residual.unwrap_or(f64::INFINITY)).collect();
    let r_coarse: Vec<f64> = coarse.points.iter().map(|p| p.residual.unwrap_or(f64::INFINITY)).collect();
    let max_fine = r_fine.iter().copied().fold(0.0, f64::max);
    let ratio = median(r_coarse) / median(r_fine.clone());
    let ok = max_fine <= 1e-3 && ratio >= 3.0;
    Ok((ok, format!("max residual at h=1e-4 {max_fine:.3e}, median ratio h=1e-3 / h=1e-4 {ratio:.1}")))
}

fn determinism() -> Outcome {
    let run = || {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli::run(["hopf", "repro", "--case", "sect5"], &mut out, &mut err);
        (code, out)
    };
    let (c1, a) = run();
    let (c2, b) = run();
    Ok((c1 == 0 && c2 == 0 && a == b && !a.is_empty(), format!("exit codes {c1}/{c2}, {} bytes, identical {}", a.len(), a == b)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("critical points at (2, 2/5)", critical_points),
        ("singular maximizers on x = 0", singular_maximizers),
        ("regular strip", strip),
        ("singularity propagation", propagation),
        ("crossing characteristics stay regular", crossing),
        ("characteristic types", classification),
        ("type I persistence", persistence),
        ("reachable gradients", reachable),
        ("conjugate involution", involution),
        ("max formula vs min formula", hopf_vs_lax),
        ("viscosity residual", viscosity),
        ("repro determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {detail} [{:.2}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
