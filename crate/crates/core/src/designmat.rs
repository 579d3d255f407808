//! Regression design matrices and separable least-squares profiles.
//!
//! For fixed nonlinear parameters the amplitudes enter linearly, so they are
//! profiled out with an orthogonal (SVD) least-squares solve and the
//! optimizers only ever see the residual sum of squares as a function of the
//! frequencies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{linear_phase, quadratic_phase, SignalSeries};

/// `Z^T Z` is declared singular above this condition estimate.
pub const MAX_CONDITION: f64 = 1e12;

/// Phase law of a column pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// `cos(alpha t)`, `sin(alpha t)`.
    Linear,
    /// `cos(beta t^2)`, `sin(beta t^2)`.
    Quadratic,
}

/// An `n x m` design whose columns come in (cos, sin) pairs.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    column_kinds: Vec<ColumnKind>,
}

impl DesignMatrix {
    /// Stacks one (cos, sin) column pair per `(kind, frequency)` block.
    pub fn from_blocks(n: usize, blocks: &[(ColumnKind, f64)]) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("design needs at least one row"));
        }
        let m = 2 * blocks.len();
        let mut entries = DMatrix::zeros(n, m);
        let mut column_kinds = Vec::with_capacity(m);
        for (b, &(kind, freq)) in blocks.iter().enumerate() {
            for t in 1..=n {
                let phase = match kind {
                    ColumnKind::Linear => linear_phase(freq, t),
                    ColumnKind::Quadratic => quadratic_phase(freq, t),
                };
                let (s, c) = phase.sin_cos();
                entries[(t - 1, 2 * b)] = c;
                entries[(t - 1, 2 * b + 1)] = s;
            }
            column_kinds.extend([kind, kind]);
        }
        Ok(DesignMatrix { entries, column_kinds })
    }

    /// `Z^(1)(alpha)`: rows `(cos(alpha t), sin(alpha t))`.
    pub fn sinusoid(alpha: f64, n: usize) -> Result<Self> {
        Self::from_blocks(n, &[(ColumnKind::Linear, alpha)])
    }

    /// `Z^(2)(beta)`: rows `(cos(beta t^2), sin(beta t^2))`.
    pub fn chirp(beta: f64, n: usize) -> Result<Self> {
        Self::from_blocks(n, &[(ColumnKind::Quadratic, beta)])
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    /// `Z mu`.
    pub fn apply(&self, mu: &[f64]) -> SignalSeries {
        let v = &self.entries * DVector::from_column_slice(mu);
        SignalSeries::new(v.iter().copied().collect())
    }
}

/// Full one-component design `Z(alpha, beta) = (Z^(1)(alpha) | Z^(2)(beta))`.
pub fn build_full(alpha: f64, beta: f64, n: usize) -> Result<DesignMatrix> {
    DesignMatrix::from_blocks(n, &[(ColumnKind::Linear, alpha), (ColumnKind::Quadratic, beta)])
}

fn check_len(y: &SignalSeries, z: &DesignMatrix) -> Result<()> {
    if y.n() != z.nrows() {
        return Err(Error::invalid(format!(
            "series has {} samples but design has {} rows",
            y.n(),
            z.nrows()
        )));
    }
    Ok(())
}

/// Least-squares amplitudes `[Z^T Z]^{-1} Z^T Y`, solved through the SVD of
/// `Z`.
pub fn profile_linear(y: &SignalSeries, z: &DesignMatrix) -> Result<Vec<f64>> {
    check_len(y, z)?;
    if z.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = z.entries.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    // condition of Z^T Z is the square of that of Z
    let condition = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateDesign { condition });
    }
    let rhs = DVector::from_column_slice(y.as_slice());
    let mu = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::invalid(format!("svd solve: {e}")))?;
    Ok(mu.iter().copied().collect())
}

fn rss(y: &SignalSeries, z: &DesignMatrix, mu: &[f64]) -> f64 {
    let fitted = z.apply(mu);
    let r: f64 = y
        .as_slice()
        .iter()
        .zip(fitted.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    r.clamp(0.0, y.energy())
}

/// Residual sum of squares of `y` after projecting onto the columns of `z`.
pub fn projection_residual(y: &SignalSeries, z: &DesignMatrix) -> Result<f64> {
    let mu = profile_linear(y, z)?;
    Ok(rss(y, z, &mu))
}

/// Same projection, but never fails: near-collinear columns are handled by
/// a rank-truncated pseudo-inverse. Objective functions inside the
/// optimizers use this so a probe close to `0` or `pi` cannot abort a fit.
pub(crate) fn projection_residual_lenient(y: &SignalSeries, z: &DesignMatrix) -> f64 {
    if z.ncols() == 0 {
        return y.energy();
    }
    let svd = z.entries.clone().svd(true, false);
    let u = svd.u.as_ref().expect("U requested");
    let smax = svd.singular_values.max();
    let cutoff = smax * MAX_CONDITION.sqrt().recip();
    let rhs = DVector::from_column_slice(y.as_slice());
    let mut explained = 0.0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let proj = u.column(i).dot(&rhs);
            explained += proj * proj;
        }
    }
    (y.energy() - explained).max(0.0)
}

/// `R(alpha, beta) = Y^T (I - P_Z) Y` for the full one-component design.
pub fn criterion_r(y: &SignalSeries, alpha: f64, beta: f64) -> Result<f64> {
    projection_residual(y, &build_full(alpha, beta, y.n())?)
}

/// `R_1(alpha)`: residual after removing the best sinusoid at `alpha`.
pub fn criterion_r1(y: &SignalSeries, alpha: f64) -> Result<f64> {
    projection_residual(y, &DesignMatrix::sinusoid(alpha, y.n())?)
}

/// `R_2(beta)`: residual after removing the best chirp at `beta`.
pub fn criterion_r2(y: &SignalSeries, beta: f64) -> Result<f64> {
    projection_residual(y, &DesignMatrix::chirp(beta, y.n())?)
}

/// Full error sum of squares `Q(A, B, alpha, C, D, beta)` of the one-component
/// model, evaluated directly from its definition.
pub fn criterion_q(y: &SignalSeries, params: &crate::model::ChirpLikeParams) -> f64 {
    let s = params.sinusoid();
    let c = params.chirp();
    y.iter_t()
        .map(|(t, v)| {
            let e = v - s.eval(t) - c.eval(t);
            e * e
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Chirp, ChirpLikeParams, MultiParams, Sinusoid};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn row(z: &DesignMatrix, t: usize) -> Vec<f64> {
        z.entries().row(t - 1).iter().copied().collect()
    }

    #[test]
    fn zero_angles_row() {
        let z = build_full(0.0, 0.0, 1).unwrap();
        assert_eq!(row(&z, 1), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(
            z.column_kinds(),
            &[
                ColumnKind::Linear,
                ColumnKind::Linear,
                ColumnKind::Quadratic,
                ColumnKind::Quadratic
            ]
        );
    }

    #[test]
    fn quarter_turn_rows() {
        let z = build_full(PI / 2.0, PI / 2.0, 2).unwrap();
        // t = 2: beta t^2 = 2 pi
        let expected = [[0.0, 1.0, 0.0, 1.0], [-1.0, 0.0, 1.0, 0.0]];
        for t in 1..=2 {
            for (got, want) in row(&z, t).iter().zip(expected[t - 1]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn entries_bounded_and_column_norms_near_half_n() {
        let n = 2000;
        let z = build_full(0.77, 0.31, n).unwrap();
        assert!(z.entries().iter().all(|v| v.abs() <= 1.0));
        let slack = (n as f64).sqrt() * (n as f64).ln();
        for col in z.entries().column_iter() {
            assert!((col.norm_squared() - n as f64 / 2.0).abs() <= slack);
        }
    }

    #[test]
    fn rejects_empty_rows() {
        assert!(build_full(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn zero_response_profiles_to_zero() {
        let y = SignalSeries::zeros(50);
        let z = build_full(1.0, 0.2, 50).unwrap();
        assert!(profile_linear(&y, &z).unwrap().iter().all(|&m| m.abs() < 1e-300));
        assert_eq!(criterion_r(&y, 1.0, 0.2).unwrap(), 0.0);
        assert_eq!(criterion_r1(&y, 1.0).unwrap(), 0.0);
        assert_eq!(criterion_r2(&y, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn exact_amplitudes_at_truth() {
        let truth = ChirpLikeParams::new(3.0, -2.0, 1.5, 1.0, 4.0, 0.1);
        let y = MultiParams::from(truth).signal(200);
        let z = build_full(1.5, 0.1, 200).unwrap();
        let mu = profile_linear(&y, &z).unwrap();
        for (got, want) in mu.iter().zip([3.0, -2.0, 1.0, 4.0]) {
            assert!((got - want).abs() <= 1e-8 * want.abs());
        }
        assert!(criterion_r(&y, 1.5, 0.1).unwrap() <= 1e-12 * y.energy());
        assert!(criterion_r(&y, 2.0, 0.6).unwrap() >= 0.5 * y.energy());
    }

    #[test]
    fn paper_design_noise_free_amplitudes() {
        let truth = ChirpLikeParams::new(10.0, 10.0, 1.5, 10.0, 10.0, 0.1);
        let y = MultiParams::from(truth).signal(100);
        let mu = profile_linear(&y, &build_full(1.5, 0.1, 100).unwrap()).unwrap();
        for m in mu {
            assert_abs_diff_eq!(m, 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn collinear_design_is_degenerate() {
        let y = SignalSeries::new(vec![1.0; 10]);
        let err = criterion_r(&y, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDesign { .. }));
        // the lenient projection still answers
        let z = build_full(0.0, 0.0, 10).unwrap();
        assert_abs_diff_eq!(projection_residual_lenient(&y, &z), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn single_block_criteria() {
        let n = 500;
        let sin = MultiParams::new(vec![Sinusoid::new(2.0, 1.0, 0.9)], vec![]).signal(n);
        assert!(criterion_r1(&sin, 0.9).unwrap() <= 1e-12 * sin.energy());
        let chirp = MultiParams::new(vec![], vec![Chirp::new(2.0, 1.0, 0.05)]).signal(n);
        assert!(criterion_r2(&chirp, 0.05).unwrap() <= 1e-12 * chirp.energy());

        // each family is nearly invisible to the other's design
        for j in 1..n {
            let alpha = PI * j as f64 / n as f64;
            assert!(criterion_r1(&chirp, alpha).unwrap() >= 0.9 * chirp.energy());
        }
        for k in (1..n * n).step_by(97) {
            let beta = PI * k as f64 / (n * n) as f64;
            assert!(criterion_r2(&sin, beta).unwrap() >= 0.9 * sin.energy());
        }
    }

    #[test]
    fn near_orthogonality_of_scaled_gram() {
        let n = 10_000;
        for &(alpha, beta) in &[(0.4, 0.9), (1.7, 0.23), (2.9, 2.2)] {
            let z = build_full(alpha, beta, n).unwrap();
            let g = z.entries().transpose() * z.entries() * (2.0 / n as f64);
            for i in 0..4 {
                for j in 0..4 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - target).abs() <= 0.05, "({i},{j}) = {}", g[(i, j)]);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn profile_equals_full_criterion(
                ys in proptest::collection::vec(-10.0..10.0f64, 40),
                alpha in 0.2..2.9f64, beta in 0.05..2.9f64,
            ) {
                let y = SignalSeries::new(ys);
                let z = build_full(alpha, beta, y.n()).unwrap();
                let mu = profile_linear(&y, &z).unwrap();
                let p = ChirpLikeParams::new(mu[0], mu[1], alpha, mu[2], mu[3], beta);
                let r = criterion_r(&y, alpha, beta).unwrap();
                let q = criterion_q(&y, &p);
                prop_assert!((r - q).abs() <= 1e-10 * q.max(1e-12));
                prop_assert!(r >= 0.0 && r <= y.energy());
            }

            #[test]
            fn more_columns_never_raise_rss(
                ys in proptest::collection::vec(-10.0..10.0f64, 40),
                alpha in 0.2..2.9f64, beta in 0.05..2.9f64,
            ) {
                let y = SignalSeries::new(ys);
                let r = criterion_r(&y, alpha, beta).unwrap();
                prop_assert!(r <= criterion_r1(&y, alpha).unwrap() * (1.0 + 1e-12) + 1e-12);
                prop_assert!(r <= criterion_r2(&y, beta).unwrap() * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
