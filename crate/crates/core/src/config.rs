//! TOML run configuration.
//!
//! ```toml
//! [problem]
//! catalog = "log-example"          # or the expression form below
//!
//! # hamiltonian = "-ln(1 + p^2)"   # variable p (p1..pn when dim > 1)
//! # initial = "sqrt(1 + x^2)"      # variable x (x1..xn when dim > 1)
//! # dim = 1
//! # horizon = 2.0
//! # lipschitz = 1.0                # L, with dom σ* inside B'(0, L)
//! # semiconvexity = 2.0            # γ of H (optional)
//! # semiconcavity = 1.0            # 1/μ of σ (optional)
//! # transform_radius = 8.0         # x-window of the numeric σ* (default 4(1 + L))
//!
//! [run]
//! seed = 1311768467               # default: DEFAULT_SEED
//! grid_nodes = 2001
//! value_tol_rel = 1e-9
//! band_rel = 1e-4
//! cluster_tol = 8e-4
//! singleton_tol = 8e-3
//! format = "csv"                  # csv | kv | text
//! output = "out.csv"
//! workers = 4
//! ```
//!
//! Command-line flags take precedence over the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hopf::SolveOptions;
use crate::problem::{catalog, validate, ProblemSpec};

/// Seed for every sampled audit unless overridden.
pub const DEFAULT_SEED: u64 = 0x4e2b_1a93;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub catalog: Option<String>,
    pub hamiltonian: Option<String>,
    pub initial: Option<String>,
    pub dim: Option<usize>,
    pub horizon: Option<f64>,
    pub lipschitz: Option<f64>,
    pub semiconvexity: Option<f64>,
    pub semiconcavity: Option<f64>,
    pub transform_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub grid_nodes: Option<usize>,
    pub value_tol_rel: Option<f64>,
    pub band_rel: Option<f64>,
    pub cluster_tol: Option<f64>,
    pub singleton_tol: Option<f64>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl ProblemSection {
    pub fn build(&self) -> Result<ProblemSpec> {
        let expression_fields = self.hamiltonian.is_some() || self.initial.is_some();
        if let Some(name) = &self.catalog {
            if expression_fields || self.dim.is_some() || self.lipschitz.is_some() {
                return Err(Error::Config("`catalog` cannot be combined with expression fields".into()));
            }
            let mut spec = catalog::lookup(name)?;
            if let Some(h) = self.horizon {
                if !(h > 0.0) {
                    return Err(Error::Config(format!("horizon must be positive, got {h}")));
                }
                spec.horizon = h;
            }
            return Ok(spec);
        }
        let (Some(h_src), Some(s_src)) = (&self.hamiltonian, &self.initial) else {
            return Err(Error::Config("[problem] needs `catalog`, or both `hamiltonian` and `initial`".into()));
        };
        let dim = self.dim.unwrap_or(1);
        let lipschitz = self.lipschitz.ok_or_else(|| Error::Config("expression problems need `lipschitz`".into()))?;
        let h = Arc::new(Expr::parse(h_src, 'p', dim)?);
        let s = Arc::new(Expr::parse(s_src, 'x', dim)?);
        let (h1, h2, s1, s2) = (h.clone(), h, s.clone(), s);
        let mut b = ProblemSpec::builder("config", dim)
            .horizon(self.horizon.unwrap_or(1.0))
            .lipschitz(lipschitz)
            .semiconvexity_h(self.semiconvexity)
            .semiconcavity_sigma(self.semiconcavity)
            .hamiltonian(move |p| h1.eval(p))
            .hamiltonian_grad(move |p| h2.gradient(p))
            .initial(move |x| s1.eval(x))
            .initial_grad(move |x| s2.gradient(x));
        if let Some(r) = self.transform_radius {
            b = b.transform_radius(r);
        }
        let spec = b.build()?;
        let report = validate(&spec, 256, 1e-6)?;
        if !report.passed() {
            let failed: Vec<String> =
                report.checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
            return Err(Error::Config(format!("problem fails validation: {}", failed.join("; "))));
        }
        Ok(spec)
    }
}

impl RunSection {
    pub fn solve_options(&self) -> Result<SolveOptions> {
        let d = SolveOptions::default();
        let opts = SolveOptions {
            grid_nodes: self.grid_nodes.or(d.grid_nodes),
            value_tol_rel: self.value_tol_rel.unwrap_or(d.value_tol_rel),
            band_rel: self.band_rel.unwrap_or(d.band_rel),
            cluster_tol: self.cluster_tol.or(d.cluster_tol),
            singleton_tol: self.singleton_tol.or(d.singleton_tol),
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}
