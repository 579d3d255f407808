//! Parameter and signal types, and synthetic data under the chirp-like model
//!
//! ```text
//! y(t) = sum_j A_j cos(a_j t) + B_j sin(a_j t)
//!      + sum_k C_k cos(b_k t^2) + D_k sin(b_k t^2) + X(t),   t = 1..n
//! ```
//!
//! with `X(t) = sum_j a(j) e(t - j)` a finite linear process driven by
//! i.i.d. Gaussian innovations.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase of `a t`, wrapped to `[0, 2pi)`.
#[inline]
pub(crate) fn linear_phase(alpha: f64, t: usize) -> f64 {
    (alpha * t as f64).rem_euclid(TAU)
}

/// Phase of `b t^2`, wrapped to `[0, 2pi)`. `t^2` is formed exactly in
/// integer arithmetic before the single rounding of the product.
#[inline]
pub(crate) fn quadratic_phase(beta: f64, t: usize) -> f64 {
    let t2 = (t as u64) * (t as u64);
    (beta * t2 as f64).rem_euclid(TAU)
}

fn check_frequency(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < PI {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {value} is outside (0, pi)")))
    }
}

/// One sinusoid: `A cos(alpha t) + B sin(alpha t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

/// One quadratic-phase component: `C cos(beta t^2) + D sin(beta t^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chirp {
    pub c: f64,
    pub d: f64,
    pub beta: f64,
}

impl Sinusoid {
    pub fn new(a: f64, b: f64, alpha: f64) -> Self {
        Sinusoid { a, b, alpha }
    }

    pub fn power(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    #[inline]
    pub fn eval(&self, t: usize) -> f64 {
        let (s, c) = linear_phase(self.alpha, t).sin_cos();
        self.a * c + self.b * s
    }
}

impl Chirp {
    pub fn new(c: f64, d: f64, beta: f64) -> Self {
        Chirp { c, d, beta }
    }

    pub fn power(&self) -> f64 {
        self.c * self.c + self.d * self.d
    }

    #[inline]
    pub fn eval(&self, t: usize) -> f64 {
        let (s, c) = quadratic_phase(self.beta, t).sin_cos();
        self.c * c + self.d * s
    }
}

/// Parameters of the one-component model, `(A, B, alpha, C, D, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpLikeParams {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub c: f64,
    pub d: f64,
    pub beta: f64,
}

impl ChirpLikeParams {
    pub fn new(a: f64, b: f64, alpha: f64, c: f64, d: f64, beta: f64) -> Self {
        ChirpLikeParams {
            a,
            b,
            alpha,
            c,
            d,
            beta,
        }
    }

    pub fn sinusoid(&self) -> Sinusoid {
        Sinusoid::new(self.a, self.b, self.alpha)
    }

    pub fn chirp(&self) -> Chirp {
        Chirp::new(self.c, self.d, self.beta)
    }

    /// Checks the interior-point and non-zero-signal conditions required of a
    /// true parameter set.
    pub fn validate_truth(&self) -> Result<()> {
        check_frequency("alpha", self.alpha)?;
        check_frequency("beta", self.beta)?;
        if self.sinusoid().power() + self.chirp().power() > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("all amplitudes are zero"))
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.a, self.b, self.alpha, self.c, self.d, self.beta]
    }
}

impl From<ChirpLikeParams> for MultiParams {
    fn from(p: ChirpLikeParams) -> Self {
        MultiParams {
            sinusoids: vec![p.sinusoid()],
            chirps: vec![p.chirp()],
        }
    }
}

/// `p` sinusoids followed by `q` quadratic-phase components.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiParams {
    pub sinusoids: Vec<Sinusoid>,
    pub chirps: Vec<Chirp>,
}

impl MultiParams {
    pub fn new(sinusoids: Vec<Sinusoid>, chirps: Vec<Chirp>) -> Self {
        MultiParams { sinusoids, chirps }
    }

    pub fn p(&self) -> usize {
        self.sinusoids.len()
    }

    pub fn q(&self) -> usize {
        self.chirps.len()
    }

    /// Number of real parameters, `3(p + q)`.
    pub fn n_params(&self) -> usize {
        3 * (self.p() + self.q())
    }

    /// The one-component view, when `p = q = 1`.
    pub fn as_one_component(&self) -> Option<ChirpLikeParams> {
        match (self.sinusoids.as_slice(), self.chirps.as_slice()) {
            ([s], [c]) => Some(ChirpLikeParams::new(s.a, s.b, s.alpha, c.c, c.d, c.beta)),
            _ => None,
        }
    }

    /// Keeps the first `p` sinusoids and the first `q` chirps.
    pub fn truncated(&self, p: usize, q: usize) -> MultiParams {
        MultiParams {
            sinusoids: self.sinusoids[..p.min(self.p())].to_vec(),
            chirps: self.chirps[..q.min(self.q())].to_vec(),
        }
    }

    /// Flattened parameter vector in the order
    /// `(A_1, B_1, alpha_1, ..., A_p, B_p, alpha_p, C_1, D_1, beta_1, ...)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for s in &self.sinusoids {
            v.extend([s.a, s.b, s.alpha]);
        }
        for c in &self.chirps {
            v.extend([c.c, c.d, c.beta]);
        }
        v
    }

    /// Names matching [`MultiParams::to_vec`], e.g. `A1, B1, alpha1, C1, ...`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        for j in 1..=self.p() {
            names.extend([format!("A{j}"), format!("B{j}"), format!("alpha{j}")]);
        }
        for k in 1..=self.q() {
            names.extend([format!("C{k}"), format!("D{k}"), format!("beta{k}")]);
        }
        names
    }

    /// Every frequency and frequency rate lies in `(0, pi)`.
    pub fn validate_frequencies(&self) -> Result<()> {
        for (j, s) in self.sinusoids.iter().enumerate() {
            check_frequency(&format!("alpha{}", j + 1), s.alpha)?;
            if !(s.a.is_finite() && s.b.is_finite()) {
                return Err(Error::invalid(format!("sinusoid {} has a non-finite amplitude", j + 1)));
            }
        }
        for (k, c) in self.chirps.iter().enumerate() {
            check_frequency(&format!("beta{}", k + 1), c.beta)?;
            if !(c.c.is_finite() && c.d.is_finite()) {
                return Err(Error::invalid(format!("chirp {} has a non-finite amplitude", k + 1)));
            }
        }
        Ok(())
    }

    /// Full identifiability check for a true parameter set: valid
    /// frequencies, distinct frequencies within each family, and strictly
    /// decreasing positive powers within each family.
    pub fn validate_truth(&self) -> Result<()> {
        self.validate_frequencies()?;
        fn check_family(name: &str, items: &[(f64, f64)]) -> Result<()> {
            for (i, &(freq, power)) in items.iter().enumerate() {
                if power <= 0.0 {
                    return Err(Error::invalid(format!("{name} {} has zero power", i + 1)));
                }
                for &(other, _) in &items[..i] {
                    if other == freq {
                        return Err(Error::invalid(format!("{name} frequencies are not distinct")));
                    }
                }
            }
            for w in items.windows(2) {
                if w[0].1 <= w[1].1 {
                    return Err(Error::invalid(format!("{name} powers must be strictly decreasing")));
                }
            }
            Ok(())
        }
        let sins: Vec<_> = self.sinusoids.iter().map(|s| (s.alpha, s.power())).collect();
        let chirps: Vec<_> = self.chirps.iter().map(|c| (c.beta, c.power())).collect();
        check_family("sinusoid", &sins)?;
        check_family("chirp", &chirps)
    }

    /// Noise-free model value at time `t` (1-based).
    pub fn eval(&self, t: usize) -> f64 {
        self.sinusoids.iter().map(|s| s.eval(t)).sum::<f64>() + self.chirps.iter().map(|c| c.eval(t)).sum::<f64>()
    }

    /// Noise-free signal of length `n`.
    pub fn signal(&self, n: usize) -> SignalSeries {
        SignalSeries::new((1..=n).map(|t| self.eval(t)).collect())
    }
}

/// Real samples `y(1), ..., y(n)`. Index 0 of the backing vector holds `y(1)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalSeries {
    samples: Vec<f64>,
}

impl SignalSeries {
    pub fn new(samples: Vec<f64>) -> Self {
        SignalSeries { samples }
    }

    pub fn zeros(n: usize) -> Self {
        SignalSeries::new(vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `y(t)` for `t` in `1..=n`.
    pub fn at(&self, t: usize) -> f64 {
        self.samples[t - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.samples
    }

    /// `(t, y(t))` pairs with `t` starting at 1.
    pub fn iter_t(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.samples.iter().enumerate().map(|(i, &y)| (i + 1, y))
    }

    /// `Y^T Y`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|y| y * y).sum()
    }

    pub fn scaled(&self, s: f64) -> SignalSeries {
        SignalSeries::new(self.samples.iter().map(|y| s * y).collect())
    }

    pub fn sub(&self, other: &SignalSeries) -> SignalSeries {
        assert_eq!(self.n(), other.n(), "series lengths differ");
        SignalSeries::new(self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &SignalSeries) -> SignalSeries {
        assert_eq!(self.n(), other.n(), "series lengths differ");
        SignalSeries::new(self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect())
    }
}

impl From<Vec<f64>> for SignalSeries {
    fn from(samples: Vec<f64>) -> Self {
        SignalSeries::new(samples)
    }
}

/// One coefficient `a(j)` of the linear process, at integer lag `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCoefficient {
    pub lag: i32,
    pub value: f64,
}

/// Linear-process noise `X(t) = sum_j a(j) e(t - j)`, `e ~ N(0, sigma2)` i.i.d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub coefficients: Vec<LagCoefficient>,
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn new(coefficients: Vec<LagCoefficient>, sigma2: f64) -> Self {
        NoiseSpec { coefficients, sigma2 }
    }

    /// `X(t) = e(t)`.
    pub fn iid(sigma2: f64) -> Self {
        NoiseSpec::new(vec![LagCoefficient { lag: 0, value: 1.0 }], sigma2)
    }

    /// `X(t) = e(t) + rho e(t - 1)`.
    pub fn ma1(rho: f64, sigma2: f64) -> Self {
        NoiseSpec::new(
            vec![
                LagCoefficient { lag: 0, value: 1.0 },
                LagCoefficient { lag: 1, value: rho },
            ],
            sigma2,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::invalid(format!("sigma2 = {} must be >= 0", self.sigma2)));
        }
        if self.coefficients.iter().any(|c| !c.value.is_finite()) {
            return Err(Error::invalid("non-finite noise coefficient"));
        }
        if self.sigma2 > 0.0 && self.coefficients.iter().all(|c| c.value == 0.0) {
            return Err(Error::invalid("noise with sigma2 > 0 needs a nonzero coefficient"));
        }
        Ok(())
    }
}

/// Draws `X(1), ..., X(n)`.
///
/// Innovations are drawn for every index `t - j` the sum touches, from the
/// most negative one upwards, so each `X(t)` is fully formed.
pub fn gen_noise(spec: &NoiseSpec, n: usize, seed: u64) -> Result<SignalSeries> {
    spec.validate()?;
    if spec.sigma2 == 0.0 || spec.coefficients.is_empty() || n == 0 {
        return Ok(SignalSeries::zeros(n));
    }
    let max_lag = spec.coefficients.iter().map(|c| c.lag).max().unwrap_or(0) as i64;
    let min_lag = spec.coefficients.iter().map(|c| c.lag).min().unwrap_or(0) as i64;
    // innovation index e(s) for s in first..=last
    let first = 1 - max_lag;
    let last = n as i64 - min_lag;
    let normal =
        Normal::new(0.0, spec.sigma2.sqrt()).map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let innovations: Vec<f64> = (first..=last).map(|_| normal.sample(&mut rng)).collect();

    let samples = (1..=n as i64)
        .map(|t| {
            spec.coefficients
                .iter()
                .map(|c| c.value * innovations[(t - c.lag as i64 - first) as usize])
                .sum()
        })
        .collect();
    Ok(SignalSeries::new(samples))
}

/// Model signal plus optional linear-process noise.
pub fn synthesize(params: &MultiParams, n: usize, noise: Option<&NoiseSpec>, seed: u64) -> Result<SignalSeries> {
    if n < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    params.validate_frequencies()?;
    let clean = params.signal(n);
    match noise {
        Some(spec) => Ok(clean.add(&gen_noise(spec, n, seed)?)),
        None => Ok(clean),
    }
}
