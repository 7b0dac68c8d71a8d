//! Quantized at-the-money rates.
//!
//! Imposing `V(K) = 0` on the sine solution `A·sin(√(r/D)·x)` forces
//! `√(r/D)·K = nπ`, i.e. `r_n = (σ²/(2K²))·n²π²`. This module builds the
//! spectrum, inverts it, checks the boundary condition, normalizes the
//! amplitude on `[0, K]` and tabulates `Y(x, t) = A·sin(a_n x)·e^{±r_n t}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{diffusion, SolutionEvaluator};
use crate::payoff::DiscountSign;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Scalar;

/// Absolute tolerance of the quadrature cross-check.
pub const QUADRATURE_ABS_TOL: f64 = 1e-10;

fn check_positive<T: Scalar>(field: &'static str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::invalid(field, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantizedRate<T> {
    pub value: T,
    /// `n = 0` yields `r = 0` and the identically zero payoff.
    pub degenerate: bool,
}

/// `r_n = (σ²/(2K²))·n²·π²`.
///
/// Evaluated as a pure product/quotient chain, so scaling σ by 2 scales the
/// result by exactly 4.
pub fn quantized_rate<T: Scalar>(n: u64, sigma: T, strike: T) -> Result<QuantizedRate<T>> {
    check_positive("sigma", sigma)?;
    check_positive("strike", strike)?;
    let nf = T::from_u64(n).ok_or_else(|| Error::invalid("n", "not representable"))?;
    let pi = T::PI();
    let value = sigma * sigma / (T::lit(2.0) * strike * strike) * (nf * nf) * pi * pi;
    Ok(QuantizedRate {
        value,
        degenerate: n == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSpec<T> {
    pub n: u64,
    pub sigma: T,
    pub strike: T,
    pub rate: T,
    pub diffusion: T,
    /// `nπ/K`.
    pub wavenumber: T,
}

impl<T: Scalar> ModeSpec<T> {
    pub fn new(n: u64, sigma: T, strike: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "mode index must be >= 1 (n = 0 is the zero payoff)"));
        }
        let rate = quantized_rate(n, sigma, strike)?.value;
        Ok(Self {
            n,
            sigma,
            strike,
            rate,
            diffusion: diffusion(sigma),
            wavenumber: T::from_u64(n).expect("n representable") * T::PI() / strike,
        })
    }

    /// Wavenumber recomputed from the rate, `√(r_n/D)`.
    pub fn wavenumber_from_rate(&self) -> T {
        (self.rate / self.diffusion).sqrt()
    }

    pub fn solution(&self, amplitude: T) -> SolutionEvaluator<T> {
        SolutionEvaluator::Sine {
            amplitude,
            wavenumber: self.wavenumber,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSpectrum<T> {
    pub sigma: T,
    pub strike: T,
    pub modes: Vec<ModeSpec<T>>,
}

/// Modes `n = 1..=n_max`.
pub fn rate_spectrum<T: Scalar>(n_max: u64, sigma: T, strike: T) -> Result<RateSpectrum<T>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be >= 1"));
    }
    let modes = (1..=n_max)
        .map(|n| ModeSpec::new(n, sigma, strike))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSpectrum {
        sigma,
        strike,
        modes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModeIndex {
    pub n: u64,
    pub admissible: bool,
}

/// Nearest mode to a given rate: `n* = round(√(2rK²/σ²)/π)`, at least 1.
/// Admissible when `|r_{n*} − r| ≤ rel_tol·r`.
pub fn mode_index<T: Scalar>(r: T, sigma: T, strike: T, rel_tol: T) -> Result<ModeIndex> {
    check_positive("r", r)?;
    check_positive("sigma", sigma)?;
    check_positive("strike", strike)?;
    if !(rel_tol > T::zero()) {
        return Err(Error::invalid("rel_tol", "must be positive"));
    }
    let continuous = (T::lit(2.0) * r * strike * strike / (sigma * sigma)).sqrt() / T::PI();
    let n = continuous
        .round()
        .to_u64()
        .ok_or_else(|| Error::invalid("r", "mode index out of range"))?
        .max(1);
    let rn = quantized_rate(n, sigma, strike)?.value;
    Ok(ModeIndex {
        n,
        admissible: (rn - r).abs() <= rel_tol * r,
    })
}

/// `|sin(√(r_n/D)·K)|`, which the boundary condition requires to vanish.
pub fn boundary_residual<T: Scalar>(n: u64, sigma: T, strike: T) -> Result<T> {
    let mode = ModeSpec::new(n, sigma, strike)?;
    Ok((mode.wavenumber_from_rate() * strike).sin().abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationResult<T> {
    #[serde(rename = "A")]
    pub amplitude: T,
    pub integral: T,
    pub method: NormalizationMethod,
    /// `|closed form − quadrature|`.
    pub estimated_error: T,
    /// The integral from the other method, kept for reporting.
    pub cross_check: T,
}

/// `∫₀^K sin²(a x) dx = K/2 − sin(2aK)/(4a)`.
pub fn sine_square_integral<T: Scalar>(wavenumber: T, strike: T) -> T {
    let two = T::lit(2.0);
    strike / two - (two * wavenumber * strike).sin() / (T::lit(4.0) * wavenumber)
}

/// Same integral by adaptive quadrature, pre-split at every half period.
pub fn sine_square_quadrature<T: Scalar>(wavenumber: T, strike: T) -> Result<T> {
    let half_periods = (wavenumber * strike / T::PI()).ceil().to_usize().unwrap_or(1);
    let opts = QuadratureOptions {
        abs_tol: T::lit(QUADRATURE_ABS_TOL),
        initial_pieces: half_periods.clamp(1, 1_000_000),
        ..Default::default()
    };
    let q = integrate(|x| (wavenumber * x).sin().powi(2), T::zero(), strike, opts)?;
    Ok(q.value)
}

/// Amplitude `A = (∫₀^K sin²(√(r/D)x) dx)^{-1/2}` via the closed form, with
/// the quadrature result as cross-check.
pub fn normalization_constant<T: Scalar>(r: T, sigma: T, strike: T) -> Result<NormalizationResult<T>> {
    normalization_with(r, sigma, strike, NormalizationMethod::ClosedForm)
}

pub fn normalization_with<T: Scalar>(
    r: T,
    sigma: T,
    strike: T,
    method: NormalizationMethod,
) -> Result<NormalizationResult<T>> {
    check_positive("r", r)?;
    check_positive("sigma", sigma)?;
    check_positive("strike", strike)?;
    let a = (r / diffusion(sigma)).sqrt();
    let closed = sine_square_integral(a, strike);
    let quad = sine_square_quadrature(a, strike)?;
    let (integral, cross_check) = match method {
        NormalizationMethod::ClosedForm => (closed, quad),
        NormalizationMethod::Quadrature => (quad, closed),
    };
    if !(integral > T::zero()) || !integral.is_finite() {
        return Err(Error::Numerical(format!("normalization integral {integral} is not positive")));
    }
    Ok(NormalizationResult {
        amplitude: integral.sqrt().recip(),
        integral,
        method,
        estimated_error: (closed - quad).abs(),
        cross_check,
    })
}

/// `Y(x, t)` on a rectangular grid, rows indexed by `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffSurface<T> {
    pub mode: ModeSpec<T>,
    #[serde(rename = "A")]
    pub amplitude: T,
    pub sign: DiscountSign,
    pub x: Vec<T>,
    pub t: Vec<T>,
    pub values: Vec<Vec<T>>,
    /// `true` where `x` lies outside `[0, K]`, the normalization domain.
    pub out_of_domain: Vec<bool>,
}

pub fn payoff_surface<T: Scalar>(
    mode: &ModeSpec<T>,
    amplitude: T,
    x_grid: &[T],
    t_grid: &[T],
    sign: DiscountSign,
) -> Result<PayoffSurface<T>> {
    if let Some(t) = t_grid.iter().find(|t| !(**t >= T::zero()) || !t.is_finite()) {
        return Err(Error::invalid("t", format!("times must be finite and >= 0, got {t}")));
    }
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("x", "prices must be finite"));
    }
    let growth: Vec<T> = t_grid.iter().map(|&t| sign.factor(mode.rate, t)).collect();
    let values = x_grid
        .par_iter()
        .map(|&x| {
            let v = amplitude * (mode.wavenumber * x).sin();
            growth.iter().map(|&g| v * g).collect()
        })
        .collect();
    let out_of_domain = x_grid
        .iter()
        .map(|&x| x < T::zero() || x > mode.strike)
        .collect();
    Ok(PayoffSurface {
        mode: *mode,
        amplitude,
        sign,
        x: x_grid.to_vec(),
        t: t_grid.to_vec(),
        values,
        out_of_domain,
    })
}
