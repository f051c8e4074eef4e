//! Cauchy problems `u_t + H(Du) = 0`, `u(0, ·) = σ` with convex Lipschitz
//! initial data, and their numerical sanity checks.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{central_gradient, dist, linspace, product_grid};

pub mod catalog;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form Fenchel conjugate of the initial data, when known.
#[derive(Clone)]
pub struct AnalyticConjugate {
    /// `σ*(q)`, returning `+inf` outside `dom σ*`.
    pub value: ScalarFn,
    /// Gradient of `σ*` where it is differentiable.
    pub gradient: Option<VectorFn>,
    /// Points of `dom σ*` that a grid search must always include
    /// (needed when the domain is lower dimensional, e.g. a single point).
    pub anchors: Vec<Vec<f64>>,
}

/// A Cauchy problem `(H, σ)`. Immutable once built; all callbacks are pure.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub horizon: f64,
    pub lipschitz_bound: f64,
    /// Semiconvexity constant γ of `H`.
    pub semiconvexity_h: Option<f64>,
    /// Semiconcavity constant `1/μ` of `σ`.
    pub semiconcavity_sigma: Option<f64>,
    /// Half-width of the x-window used when `σ*` has to be computed numerically.
    pub transform_radius: f64,
    hamiltonian: ScalarFn,
    hamiltonian_grad: Option<VectorFn>,
    initial: ScalarFn,
    initial_grad: Option<VectorFn>,
    conjugate: Option<AnalyticConjugate>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("semiconvexity_h", &self.semiconvexity_h)
            .field("semiconcavity_sigma", &self.semiconcavity_sigma)
            .field("analytic_conjugate", &self.conjugate.is_some())
            .finish()
    }
}

const FD_STEP: f64 = 1e-6;

impl ProblemSpec {
    pub fn builder(name: impl Into<String>, dim: usize) -> ProblemBuilder {
        ProblemBuilder {
            name: name.into(),
            dim,
            horizon: 1.0,
            lipschitz_bound: 1.0,
            semiconvexity_h: None,
            semiconcavity_sigma: None,
            transform_radius: None,
            hamiltonian: None,
            hamiltonian_grad: None,
            initial: None,
            initial_grad: None,
            conjugate: None,
        }
    }

    pub fn hamiltonian(&self, p: &[f64]) -> f64 {
        (self.hamiltonian)(p)
    }

    /// `H_p(p)`: the analytic gradient when supplied, else central differences.
    pub fn hamiltonian_grad(&self, p: &[f64]) -> Vec<f64> {
        match &self.hamiltonian_grad {
            Some(g) => g(p),
            None => central_gradient(&|q| (self.hamiltonian)(q), p, FD_STEP),
        }
    }

    pub fn initial(&self, x: &[f64]) -> f64 {
        (self.initial)(x)
    }

    /// `σ_y(x)`: the analytic gradient when supplied, else central differences.
    pub fn initial_grad(&self, x: &[f64]) -> Vec<f64> {
        match &self.initial_grad {
            Some(g) => g(x),
            None => central_gradient(&|y| (self.initial)(y), x, FD_STEP),
        }
    }

    pub fn has_hamiltonian_grad(&self) -> bool {
        self.hamiltonian_grad.is_some()
    }

    pub fn has_initial_grad(&self) -> bool {
        self.initial_grad.is_some()
    }

    pub fn analytic_conjugate(&self) -> Option<&AnalyticConjugate> {
        self.conjugate.as_ref()
    }

    /// Radius `M` of the closed ball containing `dom σ*`.
    pub fn domain_radius(&self) -> f64 {
        self.lipschitz_bound
    }

    /// Sampled `sup_{|p| ≤ M} |H_p(p)|` on a grid of `nodes` per axis.
    pub fn max_speed(&self, nodes: usize) -> f64 {
        let m = self.domain_radius();
        let axis = linspace(-m, m, nodes.max(3));
        let speed = |p: &[f64]| {
            let g = self.hamiltonian_grad(p);
            g.iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        if self.dim == 1 {
            axis.iter().map(|&p| speed(&[p])).fold(0.0, f64::max)
        } else {
            let axes = vec![axis; self.dim];
            product_grid(&axes)
                .into_iter()
                .filter(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() <= m * (1.0 + 1e-12))
                .map(|p| speed(&p))
                .fold(0.0, f64::max)
        }
    }

    /// Default `sup|H_p|` sample: 4097 nodes per axis in 1-D, 513 in 2-D.
    pub fn default_max_speed(&self) -> f64 {
        self.max_speed(if self.dim == 1 { 4097 } else { 513 })
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..self.horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} not in [0, {})", self.horizon)));
        }
        Ok(())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!("point has {} coordinates, problem dimension is {}", x.len(), self.dim)));
        }
        Ok(())
    }
}

pub struct ProblemBuilder {
    name: String,
    dim: usize,
    horizon: f64,
    lipschitz_bound: f64,
    semiconvexity_h: Option<f64>,
    semiconcavity_sigma: Option<f64>,
    transform_radius: Option<f64>,
    hamiltonian: Option<ScalarFn>,
    hamiltonian_grad: Option<VectorFn>,
    initial: Option<ScalarFn>,
    initial_grad: Option<VectorFn>,
    conjugate: Option<AnalyticConjugate>,
}

impl ProblemBuilder {
    pub fn horizon(mut self, t: f64) -> Self {
        self.horizon = t;
        self
    }

    pub fn lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_bound = l;
        self
    }

    pub fn semiconvexity_h(mut self, gamma: Option<f64>) -> Self {
        self.semiconvexity_h = gamma;
        self
    }

    pub fn semiconcavity_sigma(mut self, inv_mu: Option<f64>) -> Self {
        self.semiconcavity_sigma = inv_mu;
        self
    }

    pub fn transform_radius(mut self, r: f64) -> Self {
        self.transform_radius = Some(r);
        self
    }

    pub fn hamiltonian(mut self, h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.hamiltonian = Some(Arc::new(h));
        self
    }

    pub fn hamiltonian_grad(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hamiltonian_grad = Some(Arc::new(g));
        self
    }

    pub fn initial(mut self, s: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Some(Arc::new(s));
        self
    }

    pub fn initial_grad(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.initial_grad = Some(Arc::new(g));
        self
    }

    pub fn conjugate(mut self, c: AnalyticConjugate) -> Self {
        self.conjugate = Some(c);
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.lipschitz_bound > 0.0 && self.lipschitz_bound.is_finite()) {
            return bad(format!("Lipschitz bound must be positive, got {}", self.lipschitz_bound));
        }
        if let Some(g) = self.semiconvexity_h {
            if !(g >= 0.0) {
                return bad(format!("semiconvexity constant must be >= 0, got {g}"));
            }
        }
        if let Some(c) = self.semiconcavity_sigma {
            if !(c > 0.0) {
                return bad(format!("semiconcavity constant must be > 0, got {c}"));
            }
        }
        let Some(hamiltonian) = self.hamiltonian else { return bad("missing Hamiltonian".into()) };
        let Some(initial) = self.initial else { return bad("missing initial data".into()) };
        let transform_radius = self.transform_radius.unwrap_or(4.0 * (1.0 + self.lipschitz_bound));
        Ok(ProblemSpec {
            name: self.name,
            dim: self.dim,
            horizon: self.horizon,
            lipschitz_bound: self.lipschitz_bound,
            semiconvexity_h: self.semiconvexity_h,
            semiconcavity_sigma: self.semiconcavity_sigma,
            transform_radius,
            hamiltonian,
            hamiltonian_grad: self.hamiltonian_grad,
            initial,
            initial_grad: self.initial_grad,
            conjugate: self.conjugate,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation observed (0 or negative when comfortably satisfied).
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub tol: f64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const VALIDATE_SEED: u64 = 0x5eed_0001;

/// Samples convexity, the Lipschitz bound and gradient consistency on
/// `[-3, 3]^n` (momenta on the ball `|p| ≤ L`).
pub fn validate(spec: &ProblemSpec, samples: usize, tol: f64) -> Result<ValidationReport> {
    validate_in(spec, samples, tol, 3.0)
}

pub fn validate_in(spec: &ProblemSpec, samples: usize, tol: f64, half_width: f64) -> Result<ValidationReport> {
    if samples < 8 {
        return Err(Error::Precondition(format!("validate needs at least 8 samples, got {samples}")));
    }
    let xs = sample_points(spec.dim, samples, half_width);
    let ps = sample_points(spec.dim, samples, spec.domain_radius());

    let mut sig = Vec::with_capacity(xs.len());
    for x in &xs {
        let v = spec.initial(x);
        if !v.is_finite() {
            return Err(Error::Evaluation { what: "initial data σ", point: x.clone() });
        }
        sig.push(v);
    }
    for p in &ps {
        if !spec.hamiltonian(p).is_finite() {
            return Err(Error::Evaluation { what: "Hamiltonian H", point: p.clone() });
        }
    }

    let pairs = sample_pairs(xs.len(), 20_000);
    let mut convex_worst = f64::NEG_INFINITY;
    let mut lip_worst = f64::NEG_INFINITY;
    for &(i, j) in &pairs {
        let mid: Vec<f64> = xs[i].iter().zip(&xs[j]).map(|(a, b)| 0.5 * (a + b)).collect();
        let sm = spec.initial(&mid);
        if !sm.is_finite() {
            return Err(Error::Evaluation { what: "initial data σ", point: mid });
        }
        convex_worst = convex_worst.max(sm - 0.5 * (sig[i] + sig[j]));
        lip_worst = lip_worst.max((sig[i] - sig[j]).abs() - spec.lipschitz_bound * dist(&xs[i], &xs[j]));
    }

    let grad_check = |name: &'static str,
                      f: &dyn Fn(&[f64]) -> f64,
                      g: &dyn Fn(&[f64]) -> Vec<f64>,
                      pts: &[Vec<f64>]|
     -> Result<CheckResult> {
        let mut worst: f64 = 0.0;
        let mut at = Vec::new();
        for x in pts {
            let analytic = g(x);
            if analytic.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation { what: name, point: x.clone() });
            }
            let h = FD_STEP * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let fd = central_gradient(f, x, h);
            for (a, d) in analytic.iter().zip(&fd) {
                let err = (a - d).abs() / (1.0 + a.abs());
                if err > worst {
                    worst = err;
                    at = x.clone();
                }
            }
        }
        Ok(CheckResult {
            name,
            passed: worst <= tol,
            worst,
            detail: format!("max relative central-difference mismatch {worst:.3e} at {at:?}"),
        })
    };

    let mut checks = vec![
        CheckResult {
            name: "sigma_convex",
            passed: convex_worst <= tol,
            worst: convex_worst,
            detail: format!("max of σ((a+b)/2) − (σ(a)+σ(b))/2 over {} pairs", pairs.len()),
        },
        CheckResult {
            name: "sigma_lipschitz",
            passed: lip_worst <= tol,
            worst: lip_worst,
            detail: format!("max of |σ(a)−σ(b)| − L|a−b| with L = {}", spec.lipschitz_bound),
        },
    ];
    checks.push(grad_check("hamiltonian_grad", &|p| spec.hamiltonian(p), &|p| spec.hamiltonian_grad(p), &ps)?);
    checks.push(grad_check("initial_grad", &|x| spec.initial(x), &|x| spec.initial_grad(x), &xs)?);
    Ok(ValidationReport { samples, tol, checks })
}

/// Uniform nodes on `[-r, r]` in 1-D; seeded uniform samples of the cube otherwise.
fn sample_points(dim: usize, samples: usize, r: f64) -> Vec<Vec<f64>> {
    if dim == 1 {
        linspace(-r, r, samples).into_iter().map(|v| vec![v]).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(VALIDATE_SEED);
        (0..samples).map(|_| (0..dim).map(|_| rng.gen_range(-r..=r)).collect()).collect()
    }
}

/// All index pairs when affordable, else a seeded random subset.
fn sample_pairs(n: usize, cap: usize) -> Vec<(usize, usize)> {
    if n * (n - 1) / 2 <= cap {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(VALIDATE_SEED ^ 0xff);
        (0..cap)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect()
    }
}
