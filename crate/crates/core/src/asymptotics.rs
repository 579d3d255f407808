//! Closed-form asymptotic covariances of the least-squares and sequential
//! estimators.
//!
//! Each component contributes an independent 3x3 block. With
//! `Sigma_s(A, B)` and `Sigma_c(C, D)` the blocks below, the limiting
//! covariance of the scaled errors is `sigma^2 c Sigma^{-1}` where
//! `c = sum_j a(j)^2`. Finite-`n` variances follow by undoing the scaling
//! `D_1 = diag(n^-1/2, n^-1/2, n^-3/2)` (sinusoids) and
//! `D_2 = diag(n^-1/2, n^-1/2, n^-5/2)` (chirps).
//!
//! The inverse is computed numerically from `Sigma`; see the tests for the
//! closed-form entries it reproduces.

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ComponentKind, FitResult};
use crate::model::{MultiParams, NoiseSpec, SignalSeries};
use crate::optimize::{i1_grid, GridStrategy};

/// `c = sum_j a(j)^2`.
pub fn c_constant(spec: &NoiseSpec) -> f64 {
    spec.coefficients.iter().map(|c| c.value * c.value).sum()
}

/// `Sigma^(1)` for a sinusoid with amplitudes `(A, B)`.
pub fn sigma_block_sin(a: f64, b: f64) -> Result<Matrix3<f64>> {
    let power = a * a + b * b;
    if !(power > 0.0) {
        return Err(Error::invalid("sinusoid block needs A^2 + B^2 > 0"));
    }
    Ok(Matrix3::new(
        0.5,
        0.0,
        b / 4.0,
        0.0,
        0.5,
        -a / 4.0,
        b / 4.0,
        -a / 4.0,
        power / 6.0,
    ))
}

/// `Sigma^(2)` for a chirp with amplitudes `(C, D)`.
pub fn sigma_block_chirp(c: f64, d: f64) -> Result<Matrix3<f64>> {
    let power = c * c + d * d;
    if !(power > 0.0) {
        return Err(Error::invalid("chirp block needs C^2 + D^2 > 0"));
    }
    Ok(Matrix3::new(
        0.5,
        0.0,
        d / 6.0,
        0.0,
        0.5,
        -c / 6.0,
        d / 6.0,
        -c / 6.0,
        power / 10.0,
    ))
}

/// Numeric inverse of a `Sigma` block (Cholesky; the blocks are SPD).
pub fn invert_block(sigma: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    sigma
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| Error::invalid("Sigma block is not positive definite"))
}

/// One component's share of an [`AsymReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentAsym {
    pub kind: ComponentKind,
    /// 1-based index within its family.
    pub index: usize,
    /// `sigma^2 c Sigma^{-1}`, the covariance of the scaled errors.
    pub block_covariance: [[f64; 3]; 3],
    /// Finite-`n` variances of (amplitude, amplitude, frequency).
    pub variances: [f64; 3],
}

/// Asymptotic variances for every parameter of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymReport {
    pub sigma2: f64,
    pub c: f64,
    pub n: usize,
    pub components: Vec<ComponentAsym>,
}

impl AsymReport {
    /// Variances in [`MultiParams::to_vec`] order.
    pub fn variances(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.variances).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.variances().into_iter().map(f64::sqrt).collect()
    }

    /// Full finite-`n` covariance, block diagonal in component order.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = 3 * self.components.len();
        let mut cov = DMatrix::zeros(m, m);
        for (k, comp) in self.components.iter().enumerate() {
            let scale = scaling(comp.kind, self.n);
            for i in 0..3 {
                for j in 0..3 {
                    cov[(3 * k + i, 3 * k + j)] = comp.block_covariance[i][j] * scale[i] * scale[j];
                }
            }
        }
        cov
    }
}

/// Diagonal of `D_1` or `D_2`.
fn scaling(kind: ComponentKind, n: usize) -> [f64; 3] {
    let n = n as f64;
    let root = n.sqrt().recip();
    match kind {
        ComponentKind::Sinusoid => [root, root, root / n],
        ComponentKind::Chirp => [root, root, root / (n * n)],
    }
}

fn component(kind: ComponentKind, index: usize, sigma: Matrix3<f64>, s2c: f64, n: usize) -> Result<ComponentAsym> {
    let inv = invert_block(&sigma)? * s2c;
    let scale = scaling(kind, n);
    let mut block = [[0.0; 3]; 3];
    for (i, row) in block.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = inv[(i, j)];
        }
    }
    let variances = [0, 1, 2].map(|i| inv[(i, i)] * scale[i] * scale[i]);
    Ok(ComponentAsym {
        kind,
        index,
        block_covariance: block,
        variances,
    })
}

/// Asymptotic variances of every parameter at sample size `n`.
pub fn asym_variances(params: &MultiParams, sigma2: f64, c: f64, n: usize) -> Result<AsymReport> {
    if n < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if !(sigma2 >= 0.0 && c >= 0.0) {
        return Err(Error::invalid("sigma2 and c must be non-negative"));
    }
    let s2c = sigma2 * c;
    let mut components = Vec::with_capacity(params.p() + params.q());
    for (j, s) in params.sinusoids.iter().enumerate() {
        components.push(component(
            ComponentKind::Sinusoid,
            j + 1,
            sigma_block_sin(s.a, s.b)?,
            s2c,
            n,
        )?);
    }
    for (k, ch) in params.chirps.iter().enumerate() {
        components.push(component(
            ComponentKind::Chirp,
            k + 1,
            sigma_block_chirp(ch.c, ch.d)?,
            s2c,
            n,
        )?);
    }
    Ok(AsymReport {
        sigma2,
        c,
        n,
        components,
    })
}

/// Plug-in estimate of `sigma^2 c` from a residual series: the mean of its
/// periodogram over the Fourier frequencies.
///
/// This is an addition on top of the closed-form results, which take
/// `sigma^2` and `c` as known.
pub fn plugin_noise_level(residual: &SignalSeries) -> Result<f64> {
    if residual.n() < 2 {
        return Err(Error::invalid("plug-in noise level needs n >= 2"));
    }
    let grid = i1_grid(residual, GridStrategy::Fft);
    Ok(grid.iter().sum::<f64>() / grid.len() as f64)
}

/// Attaches asymptotic standard errors, evaluated at the estimates, to a fit.
pub fn attach_standard_errors(fit: &mut FitResult, sigma2: f64, c: f64) -> Result<AsymReport> {
    let report = asym_variances(&fit.params, sigma2, c, fit.n)?;
    fit.asym_se = Some(report.std_errors());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Chirp, ChirpLikeParams, LagCoefficient, Sinusoid};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn c_for_standard_noises() {
        assert_eq!(c_constant(&NoiseSpec::iid(0.3)), 1.0);
        assert_eq!(c_constant(&NoiseSpec::ma1(0.5, 0.3)), 1.25);
        assert_eq!(c_constant(&NoiseSpec::new(Vec::<LagCoefficient>::new(), 0.0)), 0.0);
    }

    #[test]
    fn block_entries() {
        let s = sigma_block_sin(10.0, 10.0).unwrap();
        assert!(rel(s[(2, 2)], 200.0 / 6.0) < 1e-15);
        let s = sigma_block_sin(1.0, 0.0).unwrap();
        let want = Matrix3::new(0.5, 0.0, 0.0, 0.0, 0.5, -0.25, 0.0, -0.25, 1.0 / 6.0);
        assert_eq!(s, want);
        let c = sigma_block_chirp(10.0, 10.0).unwrap();
        assert_eq!(c[(2, 2)], 20.0);
        let c = sigma_block_chirp(1.0, 0.0).unwrap();
        let want = Matrix3::new(0.5, 0.0, 0.0, 0.0, 0.5, -1.0 / 6.0, 0.0, -1.0 / 6.0, 0.1);
        assert_eq!(c, want);
        assert!(sigma_block_sin(0.0, 0.0).is_err());
        assert!(sigma_block_chirp(0.0, 0.0).is_err());
    }

    #[test]
    fn frequency_entry_of_inverse() {
        for (a, b) in [(10.0, 10.0), (3.0, -1.0), (0.2, 5.0)] {
            let inv = invert_block(&sigma_block_sin(a, b).unwrap()).unwrap();
            let p: f64 = a * a + b * b;
            assert!(rel(inv[(2, 2)], 24.0 / p) < 1e-12);
            // rows 1 and 2 of the closed form
            assert!(rel(inv[(0, 0)], 2.0 * (a * a + 4.0 * b * b) / p) < 1e-12);
            assert!(rel(inv[(0, 2)], -12.0 * b / p) < 1e-12);
            assert!(rel(inv[(1, 2)], 12.0 * a / p) < 1e-12);
        }
    }

    #[test]
    fn one_component_table_values() {
        let truth: MultiParams = ChirpLikeParams::new(10.0, 10.0, 1.5, 10.0, 10.0, 0.1).into();
        let r = asym_variances(&truth, 0.1, 1.0, 100).unwrap();
        let v = r.variances();
        assert!(rel(v[2], 1.20e-8) < 1e-2);
        assert!(rel(v[5], 1.12e-12) < 1e-2);
        let r = asym_variances(&truth, 0.1, 1.25, 100).unwrap();
        let v = r.variances();
        assert!(rel(v[2], 1.50e-8) < 1e-2);
        assert!(rel(v[5], 1.41e-12) < 1e-2);
    }

    #[test]
    fn two_component_second_blocks() {
        let truth = MultiParams::new(
            vec![Sinusoid::new(10.0, 10.0, 1.5), Sinusoid::new(8.0, 8.0, 2.5)],
            vec![Chirp::new(10.0, 10.0, 0.1), Chirp::new(8.0, 8.0, 0.2)],
        );
        let v = asym_variances(&truth, 0.1, 1.0, 100).unwrap().variances();
        assert!(rel(v[5], 1.88e-8) < 1e-2);
        assert!(rel(v[11], 1.76e-12) < 1e-2);
    }

    #[test]
    fn block_diagonal_and_scaling_laws() {
        let truth = MultiParams::new(
            vec![Sinusoid::new(2.0, 1.0, 1.0), Sinusoid::new(1.0, 1.0, 2.0)],
            vec![Chirp::new(1.0, -3.0, 0.4)],
        );
        let r100 = asym_variances(&truth, 0.5, 1.25, 100).unwrap();
        let cov = r100.covariance();
        for i in 0..9 {
            for j in 0..9 {
                if i / 3 != j / 3 {
                    assert_eq!(cov[(i, j)], 0.0);
                }
            }
        }
        let r200 = asym_variances(&truth, 0.5, 1.25, 200).unwrap();
        let (a, b) = (r100.variances(), r200.variances());
        assert!((a[2] / b[2] - 8.0).abs() < 1e-9);
        assert!((a[8] / b[8] - 32.0).abs() < 1e-9);
        assert!((a[0] / b[0] - 2.0).abs() < 1e-9);
        assert!(r100.variances().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn frequency_variance_depends_only_on_power() {
        let a = asym_variances(
            &MultiParams::new(vec![Sinusoid::new(10.0, 10.0, 1.0)], vec![]),
            1.0,
            1.0,
            50,
        )
        .unwrap();
        let b = asym_variances(
            &MultiParams::new(vec![Sinusoid::new(200f64.sqrt(), 0.0, 1.0)], vec![]),
            1.0,
            1.0,
            50,
        )
        .unwrap();
        assert!(rel(a.variances()[2], b.variances()[2]) < 1e-12);
    }

    #[test]
    fn plugin_recovers_white_noise_level() {
        let x = crate::model::gen_noise(&NoiseSpec::iid(2.0), 4000, 1).unwrap();
        let s = plugin_noise_level(&x).unwrap();
        assert!((s - 2.0).abs() < 0.15, "{s}");
    }
}
