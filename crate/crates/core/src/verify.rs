//! Monte Carlo checks of the conditional drift of `Y(t) = V(X(t))·e^{±rt}`.
//!
//! By Ito's lemma, with `dX = μ dt + σ dW`,
//!
//! `E[dY | F_t] = e^{±rt}·(±r V + μ V' + (σ²/2) V'') dt`.
//!
//! The conditional expectation is realized as a one-step simulation from a
//! fixed state `x0` at time `t`, which is exact for the constant-coefficient
//! dynamics. Reports carry a z statistic; classification against zero drift
//! is left to [`classify`] with a caller-chosen threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::ode::{delta_gamma, Evaluate};
use crate::payoff::DiscountSign;
use crate::rng::standard_normal;
use crate::scalar::Scalar;
use crate::stats::sample_moments;

pub const DEFAULT_DT: f64 = 1e-3;
pub const MAX_DT: f64 = 1e-2;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 1_000;
pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;

/// Finite-difference step used for analytic drifts: `1e-4·max(1, |x|)`.
pub fn fd_step<T: Scalar>(x: T) -> T {
    T::lit(1e-4) * x.abs().max(T::one())
}

/// Ito drift rate of `Y = V(X)e^{±rt}` for price drift `mu`.
fn ito_drift<T: Scalar, V: Evaluate<T> + ?Sized>(
    v: &V,
    mu: T,
    r: T,
    sigma: T,
    x: T,
    t: T,
    sign: DiscountSign,
) -> Result<T> {
    let dg = delta_gamma(v, x, fd_step(x))?;
    let s: T = sign.exponent_sign();
    let half = T::lit(0.5);
    let bracket = s * r * v.eval(x) + mu * dg.delta + half * sigma * sigma * dg.gamma;
    Ok(sign.factor(r, t) * bracket)
}

/// `e^{±rt}·(±r V(x) + r V'(x) + (σ²/2) V''(x))` under risk-neutral drift `μ = r`.
pub fn analytic_drift<T: Scalar, V: Evaluate<T> + ?Sized>(
    v: &V,
    r: T,
    sigma: T,
    x: T,
    t: T,
    sign: DiscountSign,
) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    ito_drift(v, r, r, sigma, x, t, sign)
}

/// The drift term removed by delta hedging, `e^{±rt}·μ·V'(x)`.
///
/// For a solution of the hedged equation under the plus convention this is
/// the entire Ito drift.
pub fn hedging_gap<T: Scalar, V: Evaluate<T> + ?Sized>(
    v: &V,
    p: &ModelParams<T>,
    x: T,
    t: T,
    sign: DiscountSign,
) -> Result<T> {
    let dg = delta_gamma(v, x, fd_step(x))?;
    Ok(sign.factor(p.r, t) * p.drift * dg.delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport<T> {
    pub x0: T,
    pub t: T,
    pub dt: T,
    pub n_samples: usize,
    pub seed: u64,
    /// Mean of `ΔY/dt`.
    pub estimated_drift: T,
    pub standard_error: T,
    pub analytic_drift: T,
    /// `(estimated − analytic)/standard_error`; absent when the standard
    /// error is zero (no noise, e.g. `σ = 0`).
    pub z_score: Option<T>,
    pub sign_convention: DiscountSign,
}

impl<T: Scalar> DriftReport<T> {
    pub fn degenerate_noise(&self) -> bool {
        self.standard_error == T::zero()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn drift_estimate<T: Scalar, V: Evaluate<T> + Sync + ?Sized>(
    v: &V,
    p: &ModelParams<T>,
    x0: T,
    t: T,
    dt: T,
    n_samples: usize,
    seed: u64,
    sign: DiscountSign,
) -> Result<DriftReport<T>> {
    let p = validate_params(*p)?;
    if !(dt > T::zero()) || dt > T::lit(MAX_DT) {
        return Err(Error::invalid("dt", format!("must lie in (0, {MAX_DT}], got {dt}")));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "n_samples",
            format!("must be >= {MIN_SAMPLES}, got {n_samples}"),
        ));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    if !x0.is_finite() {
        return Err(Error::invalid("x0", "must be finite"));
    }

    let y0 = v.eval(x0) * sign.factor(p.r, t);
    let growth = sign.factor(p.r, t + dt);
    let shift = p.drift * dt;
    let scale = p.sigma * dt.sqrt();
    let moments = sample_moments(n_samples, seed, |rng, i| {
        let x1 = x0 + shift + scale * standard_normal::<T>(rng);
        let y1 = v.eval(x1) * growth;
        let q = (y1 - y0) / dt;
        if q.is_finite() {
            Ok(q)
        } else {
            Err(Error::NonFiniteSample {
                index: i,
                x: x1.as_f64(),
                value: y1.as_f64(),
            })
        }
    })?;
    let estimated = moments.mean;
    let se = moments.std_error();
    let analytic = ito_drift(v, p.drift, p.r, p.sigma, x0, t, sign)?;
    Ok(DriftReport {
        x0,
        t,
        dt,
        n_samples,
        seed,
        estimated_drift: estimated,
        standard_error: se,
        analytic_drift: analytic,
        z_score: (se > T::zero()).then(|| (estimated - analytic) / se),
        sign_convention: sign,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `|drift| ≤ z·SE`
    ConsistentWithMartingale,
    /// `drift < −z·SE`
    SupermartingaleStrict,
    /// `drift > +z·SE`
    ViolatesSupermartingale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleVerdict<T> {
    pub classification: Classification,
    pub confidence_multiplier: T,
}

/// Tests the estimated drift against zero at `z_threshold` standard errors.
pub fn classify<T: Scalar>(report: &DriftReport<T>, z_threshold: T) -> Result<MartingaleVerdict<T>> {
    if !(z_threshold > T::zero()) {
        return Err(Error::invalid("z_threshold", "must be positive"));
    }
    let band = z_threshold * report.standard_error;
    let est = report.estimated_drift;
    let classification = if est.abs() <= band {
        Classification::ConsistentWithMartingale
    } else if est < T::zero() {
        Classification::SupermartingaleStrict
    } else {
        Classification::ViolatesSupermartingale
    };
    Ok(MartingaleVerdict {
        classification,
        confidence_multiplier: z_threshold,
    })
}

/// Evidence that `E|Y(t)|` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityWitness<T> {
    pub t: T,
    pub n_samples: usize,
    pub mean: T,
    pub mean_abs: T,
    pub standard_error_abs: T,
    /// `sup|V|·e^{|r|t}` when `V` is known to be bounded.
    pub analytic_bound: Option<T>,
}

/// Samples `Y(t) = V(X(t))e^{±rt}` and aborts on the first non-finite value.
pub fn integrability_check<T: Scalar, V: Evaluate<T> + Sync + ?Sized>(
    v: &V,
    p: &ModelParams<T>,
    t: T,
    n_samples: usize,
    seed: u64,
    sign: DiscountSign,
) -> Result<IntegrabilityWitness<T>> {
    let p = validate_params(*p)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "n_samples",
            format!("must be >= {MIN_SAMPLES}, got {n_samples}"),
        ));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    let growth = sign.factor(p.r, t);
    let mean_x = p.x0 + p.drift * t;
    let scale = p.sigma * t.sqrt();
    let draw = |rng: &mut crate::rng::StreamRng, i: usize| -> Result<T> {
        let x = mean_x + scale * standard_normal::<T>(rng);
        let y = v.eval(x) * growth;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteSample {
                index: i,
                x: x.as_f64(),
                value: y.as_f64(),
            })
        }
    };
    // Same seed for both passes: identical samples, two statistics.
    let signed = sample_moments(n_samples, seed, draw)?;
    let absolute = sample_moments(n_samples, seed, |rng, i| draw(rng, i).map(|y| y.abs()))?;
    Ok(IntegrabilityWitness {
        t,
        n_samples,
        mean: signed.mean,
        mean_abs: absolute.mean,
        standard_error_abs: absolute.std_error(),
        analytic_bound: v.sup_bound().map(|b| b * (p.r.abs() * t).exp()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{characteristic_roots_full, general_solution, sine_solution};
    use num_complex::Complex;
    use std::f64::consts::PI;

    const R1: f64 = 0.197392088021787172;

    fn report(est: f64, se: f64) -> DriftReport<f64> {
        DriftReport {
            x0: 0.0,
            t: 0.0,
            dt: 1e-3,
            n_samples: 1000,
            seed: 0,
            estimated_drift: est,
            standard_error: se,
            analytic_drift: 0.0,
            z_score: Some(est / se),
            sign_convention: DiscountSign::PaperLiteralPlus,
        }
    }

    #[test]
    fn classify_examples() {
        let c = |e, s| classify(&report(e, s), 3.0).unwrap().classification;
        assert_eq!(c(1e-4, 1e-3), Classification::ConsistentWithMartingale);
        assert_eq!(c(-1e-2, 1e-3), Classification::SupermartingaleStrict);
        assert_eq!(c(1e-2, 1e-3), Classification::ViolatesSupermartingale);
        assert!(classify(&report(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn analytic_drift_examples() {
        let plus = DiscountSign::PaperLiteralPlus;
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        let d = analytic_drift(&v, R1, 0.2, 0.0, 0.0, plus).unwrap();
        assert!((d - R1 * PI).abs() < 1e-5);
        assert!((d - 0.6201255).abs() < 1e-5);
        let d = analytic_drift(&v, R1, 0.2, 0.5, 0.0, plus).unwrap();
        assert!(d.abs() < 1e-5);

        let roots = characteristic_roots_full(0.02, 0.2).unwrap();
        let g = general_solution(roots, Complex::new(0.5, 0.2), Complex::new(0.5, -0.2));
        for (x, t) in [(0.0_f64, 0.0_f64), (0.5, 1.0), (-2.0, 3.0)] {
            assert!(analytic_drift(&g, 0.02, 0.2, x, t, plus).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn minus_convention_formula() {
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        let (x, t) = (0.3, 0.7);
        let d = analytic_drift(&v, R1, 0.2, x, t, DiscountSign::StandardMinus).unwrap();
        let dv = PI * (PI * x).cos();
        let expected = (-R1 * t).exp() * (R1 * dv - 2.0 * R1 * (PI * x).sin());
        assert!((d - expected).abs() < 1e-6);
    }

    #[test]
    fn zero_volatility_is_a_difference_quotient() {
        let p = ModelParams::risk_neutral(0.0, 0.05, 0.0).unwrap();
        let v = |x: f64| x * x + 1.0;
        let rep = drift_estimate(&v, &p, 0.4, 0.2, 1e-3, 5000, 3, DiscountSign::StandardMinus).unwrap();
        let x1 = 0.4 + 0.05 * 1e-3;
        let y0 = v(0.4) * (-0.05_f64 * 0.2).exp();
        let y1 = v(x1) * (-0.05_f64 * (0.2 + 1e-3)).exp();
        assert_eq!(rep.estimated_drift, (y1 - y0) / 1e-3);
        assert_eq!(rep.standard_error, 0.0);
        assert!(rep.degenerate_noise());
        assert_eq!(rep.z_score, None);
    }

    #[test]
    fn drift_estimate_validation() {
        let p = ModelParams::risk_neutral(0.0, 0.05, 0.2).unwrap();
        let v = |x: f64| x;
        let s = DiscountSign::StandardMinus;
        assert!(drift_estimate(&v, &p, 0.0, 0.0, 0.02, 1000, 0, s).is_err());
        assert!(drift_estimate(&v, &p, 0.0, 0.0, 1e-3, 999, 0, s).is_err());
        assert!(drift_estimate(&v, &p, 0.0, -1.0, 1e-3, 1000, 0, s).is_err());
    }

    #[test]
    fn drift_estimate_is_deterministic() {
        let p = ModelParams::risk_neutral(0.0, R1, 0.2).unwrap();
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        let s = DiscountSign::PaperLiteralPlus;
        let a = drift_estimate(&v, &p, 0.2, 0.0, 1e-3, 20_000, 8, s).unwrap();
        let b = drift_estimate(&v, &p, 0.2, 0.0, 1e-3, 20_000, 8, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integrability_examples() {
        let s = DiscountSign::PaperLiteralPlus;
        let v = sine_solution(1.5, R1, 0.2).unwrap();
        let p = ModelParams::risk_neutral(0.3, R1, 0.2).unwrap();
        let w = integrability_check(&v, &p, 2.0, 2000, 1, s).unwrap();
        let bound = w.analytic_bound.unwrap();
        assert!((bound - 1.5 * (2.0 * R1).exp()).abs() < 1e-12);
        assert!(w.mean_abs <= bound);

        let p = ModelParams::risk_neutral(100.0, 0.05, 0.2).unwrap();
        let id = |x: f64| x;
        let w = integrability_check(&id, &p, 1.0, 20_000, 2, DiscountSign::StandardMinus).unwrap();
        let expected = 100.05 * (-0.05_f64).exp();
        assert!((w.mean - expected).abs() < 4.0 * 0.2 * (-0.05_f64).exp() / (20_000f64).sqrt());
        assert!(w.analytic_bound.is_none());

        let poisoned = |x: f64| if x > 100.3 { f64::NAN } else { x };
        match integrability_check(&poisoned, &p, 1.0, 2000, 2, s) {
            Err(Error::NonFiniteSample { x, .. }) => assert!(x > 100.3),
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
    }
}
