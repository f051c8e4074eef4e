//! Built-in problems.
//!
//! | name               | H(p)            | σ(x)                                   | L  | T |
//! |--------------------|-----------------|----------------------------------------|----|---|
//! | `log-example`      | −ln(1+p²)       | x²/2 on \|x\|≤8, 8\|x\|−32 beyond       | 8  | 3 |
//! | `log-example-unit` | −ln(1+p²)       | x²/2 on \|x\|≤1, \|x\|−1/2 beyond       | 1  | 3 |
//! | `log-example-2d`   | −ln(1+\|p\|²)   | radial x²/2 truncated at \|x\| = 4       | 4  | 3 |
//! | `sqrt-example`     | −(1+p²)^{1/2}   | x²/2 on \|x\|≤16, linear beyond          | 16 | 8 |
//! | `zero-h`           | 0               | (1+x²)^{1/2}                           | 1  | 2 |
//! | `linear-sigma`     | −ln(1+p²)       | 2x                                     | 2  | 2 |
//! | `quad-quad`        | p²/2            | x²/2 on \|x\|≤4, linear beyond           | 4  | 1 |
//!
//! `log-example` keeps the quadratic part of the initial data wide enough that
//! every maximizer met for t ≤ 3 and |x| ≤ 3 is an interior point of
//! `dom σ* = [−8, 8]`; `log-example-unit` is the same family cut at |x| = 1.

use std::sync::Arc;

use super::{AnalyticConjugate, ProblemSpec};
use crate::error::{Error, Result};
use crate::numeric::norm;

pub const NAMES: &[&str] = &[
    "log-example",
    "log-example-unit",
    "log-example-2d",
    "sqrt-example",
    "zero-h",
    "linear-sigma",
    "quad-quad",
];

pub fn names() -> &'static [&'static str] {
    NAMES
}

pub fn lookup(name: &str) -> Result<ProblemSpec> {
    match name {
        "log-example" => log_example("log-example", 8.0),
        "log-example-unit" => log_example("log-example-unit", 1.0),
        "log-example-2d" => log_example_2d(4.0),
        "sqrt-example" => sqrt_example(16.0),
        "zero-h" => zero_h(),
        "linear-sigma" => linear_sigma(2.0),
        "quad-quad" => quad_quad(4.0),
        _ => Err(Error::UnknownProblem { name: name.to_string(), available: NAMES.join(", ") }),
    }
}

/// Radially truncated square: `|x|²/2` for `|x| ≤ r`, `r|x| − r²/2` beyond.
fn huber(x: &[f64], r: f64) -> f64 {
    let n = norm(x);
    if n <= r {
        0.5 * n * n
    } else {
        r * n - 0.5 * r * r
    }
}

fn huber_grad(x: &[f64], r: f64) -> Vec<f64> {
    let n = norm(x);
    if n <= r {
        x.to_vec()
    } else {
        x.iter().map(|v| r * v / n).collect()
    }
}

/// Conjugate of [`huber`]: `|q|²/2` on the closed ball of radius `r`.
fn huber_conjugate(r: f64) -> AnalyticConjugate {
    let edge = r * (1.0 + 1e-12);
    AnalyticConjugate {
        value: Arc::new(move |q: &[f64]| {
            let n = norm(q);
            if n <= edge {
                0.5 * n * n
            } else {
                f64::INFINITY
            }
        }),
        gradient: Some(Arc::new(|q: &[f64]| q.to_vec())),
        anchors: Vec::new(),
    }
}

fn log_h(p: &[f64]) -> f64 {
    -(1.0 + p.iter().map(|v| v * v).sum::<f64>()).ln()
}

fn log_h_grad(p: &[f64]) -> Vec<f64> {
    let s = 1.0 + p.iter().map(|v| v * v).sum::<f64>();
    p.iter().map(|v| -2.0 * v / s).collect()
}

fn log_example(name: &str, r: f64) -> Result<ProblemSpec> {
    ProblemSpec::builder(name, 1)
        .horizon(3.0)
        .lipschitz(r)
        .semiconvexity_h(Some(2.0))
        .semiconcavity_sigma(Some(1.0))
        .transform_radius(2.0 * r)
        .hamiltonian(log_h)
        .hamiltonian_grad(log_h_grad)
        .initial(move |x| huber(x, r))
        .initial_grad(move |x| huber_grad(x, r))
        .conjugate(huber_conjugate(r))
        .build()
}

fn log_example_2d(r: f64) -> Result<ProblemSpec> {
    ProblemSpec::builder("log-example-2d", 2)
        .horizon(3.0)
        .lipschitz(r)
        .semiconvexity_h(Some(2.0))
        .semiconcavity_sigma(Some(1.0))
        .transform_radius(2.0 * r)
        .hamiltonian(log_h)
        .hamiltonian_grad(log_h_grad)
        .initial(move |x| huber(x, r))
        .initial_grad(move |x| huber_grad(x, r))
        .conjugate(huber_conjugate(r))
        .build()
}

fn sqrt_example(r: f64) -> Result<ProblemSpec> {
    ProblemSpec::builder("sqrt-example", 1)
        .horizon(8.0)
        .lipschitz(r)
        .semiconvexity_h(Some(1.0))
        .semiconcavity_sigma(Some(1.0))
        .transform_radius(2.0 * r)
        .hamiltonian(|p| -(1.0 + p[0] * p[0]).sqrt())
        .hamiltonian_grad(|p| vec![-p[0] / (1.0 + p[0] * p[0]).sqrt()])
        .initial(move |x| huber(x, r))
        .initial_grad(move |x| huber_grad(x, r))
        .conjugate(huber_conjugate(r))
        .build()
}

fn zero_h() -> Result<ProblemSpec> {
    ProblemSpec::builder("zero-h", 1)
        .horizon(2.0)
        .lipschitz(1.0)
        .semiconcavity_sigma(Some(1.0))
        .transform_radius(12.0)
        .hamiltonian(|_| 0.0)
        .hamiltonian_grad(|_| vec![0.0])
        .initial(|x| (1.0 + x[0] * x[0]).sqrt())
        .initial_grad(|x| vec![x[0] / (1.0 + x[0] * x[0]).sqrt()])
        .conjugate(AnalyticConjugate {
            value: Arc::new(|q: &[f64]| {
                let a = q[0].abs();
                if a <= 1.0 {
                    -(1.0 - a * a).sqrt()
                } else {
                    f64::INFINITY
                }
            }),
            gradient: Some(Arc::new(|q: &[f64]| vec![q[0] / (1.0 - q[0] * q[0]).sqrt()])),
            anchors: Vec::new(),
        })
        .build()
}

fn linear_sigma(a: f64) -> Result<ProblemSpec> {
    let slope = a;
    ProblemSpec::builder("linear-sigma", 1)
        .horizon(2.0)
        .lipschitz(a.abs())
        .transform_radius(4.0)
        .hamiltonian(log_h)
        .hamiltonian_grad(log_h_grad)
        .initial(move |x| slope * x[0])
        .initial_grad(move |_| vec![slope])
        .conjugate(AnalyticConjugate {
            value: Arc::new(move |q: &[f64]| {
                if (q[0] - slope).abs() <= 1e-12 * (1.0 + slope.abs()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }),
            gradient: None,
            anchors: vec![vec![a]],
        })
        .build()
}

fn quad_quad(r: f64) -> Result<ProblemSpec> {
    ProblemSpec::builder("quad-quad", 1)
        .horizon(1.0)
        .lipschitz(r)
        .semiconcavity_sigma(Some(1.0))
        .transform_radius(2.0 * r)
        .hamiltonian(|p| 0.5 * p[0] * p[0])
        .hamiltonian_grad(|p| vec![p[0]])
        .initial(move |x| huber(x, r))
        .initial_grad(move |x| huber_grad(x, r))
        .conjugate(huber_conjugate(r))
        .build()
}
