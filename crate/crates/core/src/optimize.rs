//! Periodogram initializers, Brent scalar minimization and the 2D
//! coordinate refinement used by the joint estimator.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{linear_phase, quadratic_phase, SignalSeries};

/// Golden section ratio `(3 - sqrt(5)) / 2`.
const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Default absolute tolerance on the argument.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default iteration budget of [`minimize_scalar`].
pub const DEFAULT_MAX_ITER: usize = 200;

/// Largest `n` for which the `t^2` periodogram grid is evaluated with one FFT
/// of length `2 n^2` (about 134 MB of complex buffer at the limit).
pub const FFT_QUADRATIC_MAX_N: usize = 2048;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// `I_1(alpha) = (1/n) |sum_t y(t) exp(-i alpha t)|^2`.
pub fn periodogram_i1(y: &SignalSeries, alpha: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (t, v) in y.iter_t() {
        let (s, c) = linear_phase(alpha, t).sin_cos();
        re += v * c;
        im += v * s;
    }
    (re * re + im * im) / y.n() as f64
}

/// `I_2(beta) = (1/n) |sum_t y(t) exp(-i beta t^2)|^2`.
pub fn periodogram_i2(y: &SignalSeries, beta: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (t, v) in y.iter_t() {
        let (s, c) = quadratic_phase(beta, t).sin_cos();
        re += v * c;
        im += v * s;
    }
    (re * re + im * im) / y.n() as f64
}

/// How the periodogram grids are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridStrategy {
    /// FFT where the buffer is affordable, direct summation otherwise.
    #[default]
    Auto,
    /// Direct summation at every grid point.
    Direct,
    /// One zero-padded FFT over the whole grid. Same values as `Direct` up
    /// to rounding.
    Fft,
    /// Direct summation at every `stride`-th grid point, then at every point
    /// within `stride` of the best coarse one. Only applies to the `t^2`
    /// grid; may miss a peak narrower than the stride.
    CoarseToFine { stride: usize },
}

/// First index of the maximum; `values[0]` corresponds to grid index 1.
fn first_argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn fft_magnitudes(buffer: &mut [Complex<f64>]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buffer.len());
        fft.process(buffer);
    });
}

/// `I_1` at the Fourier frequencies `pi j / n`, `j = 1..n-1`.
pub fn i1_grid(y: &SignalSeries, strategy: GridStrategy) -> Vec<f64> {
    let n = y.n();
    if n < 2 {
        return Vec::new();
    }
    match strategy {
        GridStrategy::Direct => (1..n)
            .into_par_iter()
            .map(|j| periodogram_i1(y, PI * j as f64 / n as f64))
            .collect(),
        _ => {
            // sum_t y(t) exp(-2 pi i j t / 2n) at bin j
            let mut buf = vec![Complex::new(0.0, 0.0); 2 * n];
            for (t, v) in y.iter_t() {
                buf[t % (2 * n)] = Complex::new(v, 0.0);
            }
            fft_magnitudes(&mut buf);
            buf[1..n].iter().map(|z| z.norm_sqr() / n as f64).collect()
        }
    }
}

/// `I_2` at `pi k / n^2`, `k = 1..n^2-1`.
pub fn i2_grid(y: &SignalSeries, strategy: GridStrategy) -> Vec<f64> {
    let n = y.n();
    if n < 2 {
        return Vec::new();
    }
    let nn = n * n;
    let direct = |k: usize| periodogram_i2(y, PI * k as f64 / nn as f64);
    match strategy {
        GridStrategy::Fft => i2_grid_fft(y),
        GridStrategy::Auto if n <= FFT_QUADRATIC_MAX_N => i2_grid_fft(y),
        GridStrategy::Auto | GridStrategy::Direct => (1..nn).into_par_iter().map(direct).collect(),
        GridStrategy::CoarseToFine { stride } => {
            let stride = stride.max(1);
            let mut values = vec![f64::NEG_INFINITY; nn - 1];
            let coarse: Vec<usize> = (1..nn).step_by(stride).collect();
            let coarse_vals: Vec<f64> = coarse.par_iter().map(|&k| direct(k)).collect();
            for (&k, &v) in coarse.iter().zip(&coarse_vals) {
                values[k - 1] = v;
            }
            let centre = coarse[first_argmax(coarse_vals.iter().copied())];
            let lo = centre.saturating_sub(stride).max(1);
            let hi = (centre + stride).min(nn - 1);
            let fine: Vec<f64> = (lo..=hi).into_par_iter().map(direct).collect();
            for (k, v) in (lo..=hi).zip(fine) {
                values[k - 1] = v;
            }
            values
        }
    }
}

fn i2_grid_fft(y: &SignalSeries) -> Vec<f64> {
    let n = y.n();
    let nn = n * n;
    // exp(-i pi k t^2 / n^2) = exp(-2 pi i k t^2 / 2n^2): place y(t) at t^2
    let mut buf = vec![Complex::new(0.0, 0.0); 2 * nn];
    for (t, v) in y.iter_t() {
        buf[(t * t) % (2 * nn)] = Complex::new(v, 0.0);
    }
    fft_magnitudes(&mut buf);
    buf[1..nn].iter().map(|z| z.norm_sqr() / n as f64).collect()
}

/// Fourier frequency maximizing `I_1`; ties go to the smaller frequency.
pub fn argmax_i1_grid(y: &SignalSeries, strategy: GridStrategy) -> Result<f64> {
    let n = y.n();
    if n < 2 {
        return Err(Error::invalid("periodogram grid needs n >= 2"));
    }
    let j = first_argmax(i1_grid(y, strategy).into_iter()) + 1;
    Ok(PI * j as f64 / n as f64)
}

/// Grid point `pi k / n^2` maximizing `I_2`; ties go to the smaller rate.
pub fn argmax_i2_grid(y: &SignalSeries, strategy: GridStrategy) -> Result<f64> {
    let n = y.n();
    if n < 2 {
        return Err(Error::invalid("periodogram grid needs n >= 2"));
    }
    let k = first_argmax(i2_grid(y, strategy).into_iter()) + 1;
    Ok(PI * k as f64 / (n * n) as f64)
}

/// Search interval for [`minimize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if !(lo < hi) || !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("bad bracket [{lo}, {hi}] with tol {tol}")));
        }
        Ok(Bracket { lo, hi, tol })
    }

    /// `[centre - half_width, centre + half_width]` intersected with `[lo, hi]`.
    pub fn around(centre: f64, half_width: f64, lo: f64, hi: f64, tol: f64) -> Result<Self> {
        Bracket::new((centre - half_width).max(lo), (centre + half_width).min(hi), tol)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Brent's method (golden section with parabolic steps) on a bracket, with
/// the default iteration budget.
pub fn minimize_scalar<F>(f: F, bracket: Bracket) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> f64,
{
    minimize_scalar_with(f, bracket, DEFAULT_MAX_ITER)
}

/// Brent's method with an explicit iteration budget.
///
/// The returned point is never worse than either endpoint of the bracket:
/// the endpoints are evaluated too and win if the interior search found
/// nothing lower.
pub fn minimize_scalar_with<F>(mut f: F, bracket: Bracket, max_iter: usize) -> Result<ScalarMinimum>
where
    F: FnMut(f64) -> f64,
{
    let Bracket { lo, hi, tol } = bracket;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let mut fx = f(x);
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = tol / 3.0 + 2.0 * f64::EPSILON * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.is_finite()
                && q.is_finite()
                && p.abs() < (0.5 * q * e_prev).abs()
                && p > q * (a - x)
                && p < q * (b - x)
            {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < mid { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);

        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations });
    }

    let mut best = ScalarMinimum {
        x,
        value: fx,
        iterations,
    };
    for end in [lo, hi] {
        let fe = f(end);
        if fe < best.value {
            best = ScalarMinimum {
                x: end,
                value: fe,
                iterations,
            };
        }
    }
    Ok(best)
}

/// Axis-aligned box for [`minimize_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Box2 {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.x.0 <= p.0 && p.0 <= self.x.1 && self.y.0 <= p.1 && p.1 <= self.y.1
    }
}

/// Result of [`minimize_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum2 {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub sweeps: usize,
}

/// Sweep budget of [`minimize_2d`].
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Coordinate descent: alternate Brent minimizations along each axis of the
/// box until a full sweep moves the point by less than `tol` (max norm).
pub fn minimize_2d<F>(mut f: F, start: (f64, f64), bounds: Box2, tol: f64) -> Result<Minimum2>
where
    F: FnMut(f64, f64) -> f64,
{
    if !bounds.contains(start) {
        return Err(Error::invalid("start point outside the search box"));
    }
    let (mut x, mut y) = start;
    let mut value = f(x, y);
    for sweep in 1..=DEFAULT_MAX_SWEEPS {
        let (x0, y0) = (x, y);
        let mx = minimize_scalar(|s| f(s, y), Bracket::new(bounds.x.0, bounds.x.1, tol)?)?;
        if mx.value <= value {
            x = mx.x;
            value = mx.value;
        }
        let my = minimize_scalar(|s| f(x, s), Bracket::new(bounds.y.0, bounds.y.1, tol)?)?;
        if my.value <= value {
            y = my.x;
            value = my.value;
        }
        if (x - x0).abs().max((y - y0).abs()) < tol {
            return Ok(Minimum2 {
                x,
                y,
                value,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: DEFAULT_MAX_SWEEPS,
    })
}
