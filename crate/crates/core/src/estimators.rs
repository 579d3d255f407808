//! Joint and sequential least-squares estimators and BIC order selection.
//!
//! The sequential estimator extracts all `p` sinusoids first, each from the
//! residual of the previous stage, and then the `q` quadratic-phase
//! components the same way. Each stage is a one-dimensional problem:
//! periodogram grid maximum, Brent refinement of the profile criterion
//! within one grid step, amplitude solve at the refined frequency, and
//! subtraction of the fitted component.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::designmat::{build_full, profile_linear, projection_residual_lenient, DesignMatrix};
use crate::error::{Error, Result};
use crate::model::{Chirp, MultiParams, SignalSeries, Sinusoid};
use crate::optimize::{
    argmax_i1_grid, argmax_i2_grid, minimize_2d, minimize_scalar_with, Box2, Bracket, GridStrategy, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

/// Frequencies are kept inside `(EDGE, pi - EDGE)`.
pub const EDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Joint,
    Sequential,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Method::Joint),
            "sequential" => Ok(Method::Sequential),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Sinusoid,
    Chirp,
}

impl ComponentKind {
    fn label(self) -> &'static str {
        match self {
            ComponentKind::Sinusoid => "sinusoid",
            ComponentKind::Chirp => "chirp",
        }
    }
}

/// One extraction stage: where the grid search started and where the
/// refinement ended. `stage` counts from 0 in extraction order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub kind: ComponentKind,
    pub initial: f64,
    pub refined: f64,
}

/// Tuning knobs shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub grid: GridStrategy,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grid: GridStrategy::Auto,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Estimates together with their residual sum of squares and BIC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MultiParams,
    pub sse: f64,
    pub n: usize,
    pub bic: f64,
    /// Per-parameter asymptotic standard errors, in [`MultiParams::to_vec`]
    /// order. Filled in by [`crate::asymptotics`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asym_se: Option<Vec<f64>>,
    pub method: Method,
    pub trace: Vec<StageRecord>,
}

impl FitResult {
    /// Noise-free signal implied by the estimates.
    pub fn fitted(&self) -> SignalSeries {
        self.params.signal(self.n)
    }

    /// Keeps the first `p` sinusoid and first `q` chirp stages, recomputing
    /// `sse` and `bic` against `y`.
    ///
    /// For a sequential fit this equals refitting at `(p, q)` as long as `p`
    /// is the number of sinusoids the fit was run with: chirp stages only see
    /// the residual after all sinusoids and the earlier chirps.
    pub fn truncated(&self, y: &SignalSeries, p: usize, q: usize) -> FitResult {
        let params = self.params.truncated(p, q);
        let sse = residual(y, &params).energy();
        let trace = self
            .trace
            .iter()
            .filter(|r| match r.kind {
                ComponentKind::Sinusoid => r.stage < p,
                ComponentKind::Chirp => r.stage < self.params.p() + q,
            })
            .copied()
            .collect();
        FitResult {
            bic: bic(sse, y.n(), params.p(), params.q()),
            params,
            sse,
            n: y.n(),
            asym_se: None,
            method: self.method,
            trace,
        }
    }
}

/// `BIC(p, q) = n ln(SSE) + 2 (3p + 3q) ln(n)`.
pub fn bic(sse: f64, n: usize, p: usize, q: usize) -> f64 {
    let n = n as f64;
    n * sse.ln() + 2.0 * (3 * p + 3 * q) as f64 * n.ln()
}

fn residual(y: &SignalSeries, params: &MultiParams) -> SignalSeries {
    y.sub(&params.signal(y.n()))
}

fn clamp_frequency(x: f64) -> f64 {
    x.clamp(EDGE, PI - EDGE)
}

fn check_samples(n: usize, p: usize, q: usize) -> Result<()> {
    let need = (6 * (p + q)).max(1);
    if n < need {
        return Err(Error::invalid(format!(
            "{n} samples is too few for p = {p}, q = {q} (need at least {need})"
        )));
    }
    Ok(())
}

/// One sequential stage on the current residual.
fn extract_stage(
    r: &SignalSeries,
    kind: ComponentKind,
    stage: usize,
    opts: &FitOptions,
) -> Result<(f64, [f64; 2], StageRecord)> {
    let n = r.n();
    let (initial, half_width) = match kind {
        ComponentKind::Sinusoid => (argmax_i1_grid(r, opts.grid)?, PI / n as f64),
        ComponentKind::Chirp => (argmax_i2_grid(r, opts.grid)?, PI / (n * n) as f64),
    };
    let design = |w: f64| match kind {
        ComponentKind::Sinusoid => DesignMatrix::sinusoid(w, n),
        ComponentKind::Chirp => DesignMatrix::chirp(w, n),
    };
    let bracket = Bracket::around(initial, half_width, EDGE, PI - EDGE, opts.tol)?;
    let objective = |w: f64| match design(w) {
        Ok(z) => projection_residual_lenient(r, &z),
        Err(_) => f64::INFINITY,
    };
    let refined = clamp_frequency(minimize_scalar_with(objective, bracket, opts.max_iter)?.x);
    let mu = profile_linear(r, &design(refined)?)?;
    Ok((
        refined,
        [mu[0], mu[1]],
        StageRecord {
            stage,
            kind,
            initial,
            refined,
        },
    ))
}

/// Sequential least squares with `p` sinusoids then `q` chirps.
pub fn fit_sequential_multi(y: &SignalSeries, p: usize, q: usize, opts: &FitOptions) -> Result<FitResult> {
    check_samples(y.n(), p, q)?;
    let n = y.n();
    let mut r = y.clone();
    let mut params = MultiParams::default();
    let mut trace = Vec::with_capacity(p + q);
    let kinds = std::iter::repeat_n(ComponentKind::Sinusoid, p).chain(std::iter::repeat_n(ComponentKind::Chirp, q));
    for (stage, kind) in kinds.enumerate() {
        let (w, [u, v], record) = extract_stage(&r, kind, stage, opts).map_err(|e| Error::Stage {
            stage: stage + 1,
            kind: kind.label(),
            source: Box::new(e),
        })?;
        let component = match kind {
            ComponentKind::Sinusoid => {
                let s = Sinusoid::new(u, v, w);
                params.sinusoids.push(s);
                MultiParams::new(vec![s], vec![])
            }
            ComponentKind::Chirp => {
                let c = Chirp::new(u, v, w);
                params.chirps.push(c);
                MultiParams::new(vec![], vec![c])
            }
        };
        r = r.sub(&component.signal(n));
        trace.push(record);
    }
    let sse = r.energy();
    Ok(FitResult {
        bic: bic(sse, n, p, q),
        params,
        sse,
        n,
        asym_se: None,
        method: Method::Sequential,
        trace,
    })
}

/// Sequential estimator for the one-component model (`p = q = 1`).
pub fn fit_sequential_one(y: &SignalSeries, opts: &FitOptions) -> Result<FitResult> {
    fit_sequential_multi(y, 1, 1, opts)
}

/// Joint least squares for the one-component model: both grid maxima
/// computed on `y`, then coordinate descent of `R(alpha, beta)` within one
/// grid step of each.
pub fn fit_joint_one(y: &SignalSeries, opts: &FitOptions) -> Result<FitResult> {
    check_samples(y.n(), 1, 1)?;
    let n = y.n();
    let alpha0 = argmax_i1_grid(y, opts.grid)?;
    let beta0 = argmax_i2_grid(y, opts.grid)?;
    let da = PI / n as f64;
    let db = PI / (n * n) as f64;
    let bounds = Box2 {
        x: ((alpha0 - da).max(EDGE), (alpha0 + da).min(PI - EDGE)),
        y: ((beta0 - db).max(EDGE), (beta0 + db).min(PI - EDGE)),
    };
    let objective = |a: f64, b: f64| match build_full(a, b, n) {
        Ok(z) => projection_residual_lenient(y, &z),
        Err(_) => f64::INFINITY,
    };
    let m = minimize_2d(objective, (alpha0, beta0), bounds, opts.tol)?;
    let (alpha, beta) = (clamp_frequency(m.x), clamp_frequency(m.y));
    let mu = profile_linear(y, &build_full(alpha, beta, n)?)?;
    let params = MultiParams::new(
        vec![Sinusoid::new(mu[0], mu[1], alpha)],
        vec![Chirp::new(mu[2], mu[3], beta)],
    );
    let sse = residual(y, &params).energy();
    let trace = vec![
        StageRecord {
            stage: 0,
            kind: ComponentKind::Sinusoid,
            initial: alpha0,
            refined: alpha,
        },
        StageRecord {
            stage: 1,
            kind: ComponentKind::Chirp,
            initial: beta0,
            refined: beta,
        },
    ];
    Ok(FitResult {
        bic: bic(sse, n, 1, 1),
        params,
        sse,
        n,
        asym_se: None,
        method: Method::Joint,
        trace,
    })
}

/// Fits with the requested method. Joint fitting is only defined for
/// `p = q = 1`.
pub fn fit(y: &SignalSeries, p: usize, q: usize, method: Method, opts: &FitOptions) -> Result<FitResult> {
    match method {
        Method::Sequential => fit_sequential_multi(y, p, q, opts),
        Method::Joint if p == 1 && q == 1 => fit_joint_one(y, opts),
        Method::Joint => Err(Error::invalid("joint fitting supports p = q = 1 only")),
    }
}

/// One cell of the BIC table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicEntry {
    pub p: usize,
    pub q: usize,
    pub sse: f64,
    pub bic: f64,
}

/// Outcome of [`select_order_bic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub p: usize,
    pub q: usize,
    pub fit: FitResult,
    pub table: Vec<BicEntry>,
}

/// Chooses `(p, q)` in `[0, p_max] x [0, q_max]` by minimum BIC.
///
/// One sequential fit at `(p, q_max)` per `p`; every `q <= q_max` is read
/// off as a truncation of it. Ties go to the smaller `p + q`, then the
/// smaller `p`.
pub fn select_order_bic(y: &SignalSeries, p_max: usize, q_max: usize, opts: &FitOptions) -> Result<OrderSelection> {
    check_samples(y.n(), p_max, q_max)?;
    let mut table = Vec::with_capacity((p_max + 1) * (q_max + 1));
    let mut best: Option<(f64, usize, usize, FitResult)> = None;
    for p in 0..=p_max {
        let full = fit_sequential_multi(y, p, q_max, opts)?;
        for q in 0..=q_max {
            let fit = full.truncated(y, p, q);
            table.push(BicEntry {
                p,
                q,
                sse: fit.sse,
                bic: fit.bic,
            });
            let better = match &best {
                None => true,
                Some((b, bp, bq, _)) => fit.bic < *b || (fit.bic == *b && (p + q, p) < (bp + bq, *bp)),
            };
            if better {
                best = Some((fit.bic, p, q, fit));
            }
        }
    }
    let (_, p, q, fit) = best.expect("table has at least the (0, 0) entry");
    Ok(OrderSelection { p, q, fit, table })
}
