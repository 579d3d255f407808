//! Replicated simulation experiments and finite-`n` checks of the
//! trigonometric averages the asymptotic theory relies on.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{asym_variances, c_constant};
use crate::error::{Error, Result};
use crate::estimators::{fit, FitOptions, Method};
use crate::model::{linear_phase, quadratic_phase, synthesize, MultiParams, NoiseSpec};

/// Default number of replicates.
pub const DEFAULT_REPLICATES: usize = 500;

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

/// What to simulate and how to fit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub truth: MultiParams,
    pub n: usize,
    pub noise: NoiseSpec,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub method: Method,
    pub base_seed: u64,
    /// Keep every replicate's estimates in the report.
    #[serde(default)]
    pub keep_raw: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        let need = (6 * (self.truth.p() + self.truth.q())).max(1);
        if self.n < need {
            return Err(Error::Config(format!("n = {} is below the minimum {need}", self.n)));
        }
        self.truth
            .validate_frequencies()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.method == Method::Joint && (self.truth.p(), self.truth.q()) != (1, 1) {
            return Err(Error::Config("joint method needs p = q = 1".into()));
        }
        Ok(())
    }

    /// Parses and validates a JSON configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seed of replicate `r`: the first word of ChaCha stream `r` keyed by
/// `base_seed`, independent of execution order.
pub fn replicate_seed(base_seed: u64, r: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(r);
    rng.next_u64()
}

/// Summary of one parameter across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub name: String,
    pub truth: f64,
    pub average: f64,
    pub bias: f64,
    /// Mean squared deviation from the average (divisor = replicates).
    pub variance: f64,
    /// Mean squared deviation from the truth; equals `variance + bias^2`.
    pub mse: f64,
    /// `None` when the true component has zero power.
    pub asym_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub stats: Vec<ParamStats>,
    pub succeeded: usize,
    pub failures: usize,
    /// Per-replicate estimates, when `keep_raw` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<Vec<f64>>>,
    /// Wall-clock time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn stat(&self, name: &str) -> Option<&ParamStats> {
        self.stats.iter().find(|s| s.name == name)
    }
}

/// Pairwise summation; the tree shape depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn summarize(name: String, truth: f64, values: &[f64], asym_var: Option<f64>) -> ParamStats {
    let m = values.len() as f64;
    let average = pairwise_sum(values) / m;
    let dev: Vec<f64> = values.iter().map(|v| (v - average).powi(2)).collect();
    let err: Vec<f64> = values.iter().map(|v| (v - truth).powi(2)).collect();
    let variance = pairwise_sum(&dev) / m;
    // mse >= variance holds exactly in real arithmetic; keep it in floating point too
    let mse = (pairwise_sum(&err) / m).max(variance);
    ParamStats {
        name,
        truth,
        average,
        bias: average - truth,
        variance,
        mse,
        asym_var,
    }
}

/// Runs every replicate (in parallel) and aggregates in replicate order.
///
/// Replicates whose fit fails are skipped and counted in `failures`.
pub fn run_experiment(config: &ExperimentConfig, opts: &FitOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let (p, q) = (config.truth.p(), config.truth.q());
    let outcomes: Vec<Option<Vec<f64>>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.base_seed, r);
            let y = synthesize(&config.truth, config.n, Some(&config.noise), seed).ok()?;
            fit(&y, p, q, config.method, opts).ok().map(|f| f.params.to_vec())
        })
        .collect();
    let estimates: Vec<Vec<f64>> = outcomes.iter().flatten().cloned().collect();
    let failures = outcomes.len() - estimates.len();
    if estimates.is_empty() {
        return Err(Error::Config("every replicate failed to fit".into()));
    }

    let truth = config.truth.to_vec();
    let names = config.truth.param_names();
    let asym = asym_variances(&config.truth, config.noise.sigma2, c_constant(&config.noise), config.n)
        .ok()
        .map(|r| r.variances());
    let stats = (0..truth.len())
        .map(|i| {
            let column: Vec<f64> = estimates.iter().map(|e| e[i]).collect();
            summarize(names[i].clone(), truth[i], &column, asym.as_ref().map(|a| a[i]))
        })
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        stats,
        succeeded: estimates.len(),
        failures,
        raw: config.keep_raw.then_some(estimates),
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Plain trigonometric function of one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigFn {
    Cos,
    Sin,
}

/// Phase law of one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// `phi t`
    Linear,
    /// `phi t^2`
    Quadratic,
}

/// `f(phi t)` or `f(phi t^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub func: TrigFn,
    pub phi: f64,
    pub phase: Phase,
}

impl Factor {
    pub fn new(func: TrigFn, phi: f64, phase: Phase) -> Self {
        Factor { func, phi, phase }
    }

    fn eval(&self, t: usize) -> f64 {
        let angle = match self.phase {
            Phase::Linear => linear_phase(self.phi, t),
            Phase::Quadratic => quadratic_phase(self.phi, t),
        };
        match self.func {
            TrigFn::Cos => angle.cos(),
            TrigFn::Sin => angle.sin(),
        }
    }
}

/// The summand family: a single factor or the product of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrigTerm {
    Single(Factor),
    Product(Factor, Factor),
}

impl TrigTerm {
    pub fn cos_sq(phi: f64, phase: Phase) -> Self {
        let f = Factor::new(TrigFn::Cos, phi, phase);
        TrigTerm::Product(f, f)
    }

    pub fn sin_sq(phi: f64, phase: Phase) -> Self {
        let f = Factor::new(TrigFn::Sin, phi, phase);
        TrigTerm::Product(f, f)
    }

    pub fn sin_cos(phi: f64, phase: Phase) -> Self {
        TrigTerm::Product(
            Factor::new(TrigFn::Sin, phi, phase),
            Factor::new(TrigFn::Cos, phi, phase),
        )
    }

    fn eval(&self, t: usize) -> f64 {
        match self {
            TrigTerm::Single(f) => f.eval(t),
            TrigTerm::Product(f, g) => f.eval(t) * g.eval(t),
        }
    }

    /// True for `cos^2` and `sin^2` of the same argument.
    pub fn is_square(&self) -> bool {
        matches!(self, TrigTerm::Product(f, g) if f == g)
    }
}

/// Power of `n` the weighted sum is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `n^(k+1)`
    Full,
    /// `n^k sqrt(n)`
    RootN,
}

/// `(1 / n^e) sum_{t=1}^n t^k term(t)` with `e` set by `norm`.
pub fn empirical_trig_average(k: u32, term: TrigTerm, n: usize, norm: Normalization) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if k > 2 {
        return Err(Error::invalid("weight exponent k must be 0, 1 or 2"));
    }
    let phis: Vec<f64> = match term {
        TrigTerm::Single(f) => vec![f.phi],
        TrigTerm::Product(f, g) => vec![f.phi, g.phi],
    };
    if phis.iter().any(|&p| !(p > 0.0 && p < std::f64::consts::PI)) {
        return Err(Error::invalid("phi must lie in (0, pi)"));
    }
    let nf = n as f64;
    // scale t^k / n^k inside the sum to keep terms O(1)
    let terms: Vec<f64> = (1..=n).map(|t| (t as f64 / nf).powi(k as i32) * term.eval(t)).collect();
    let s = pairwise_sum(&terms);
    Ok(match norm {
        Normalization::Full => s / nf,
        Normalization::RootN => s / nf.sqrt(),
    })
}

/// Large-`n` value of [`empirical_trig_average`]: `1 / (2(k + 1))` for
/// squares under full normalization, zero otherwise.
pub fn trig_average_limit(k: u32, term: TrigTerm, norm: Normalization) -> f64 {
    if norm == Normalization::Full && term.is_square() {
        1.0 / (2.0 * (k as f64 + 1.0))
    } else {
        0.0
    }
}
