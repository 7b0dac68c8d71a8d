//! Expected-payoff ODE in full and delta-hedged form.
//!
//! Full form:   `r V + r V' + (σ²/2) V'' = 0`
//! Hedged form: `r V + D V'' = 0`, `D = σ²/2`
//!
//! Both have constant coefficients, so solutions are exponentials of the
//! characteristic roots. Derivatives used for residual checks are central
//! finite differences with a caller-chosen step.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that maps a price `x` to a payoff value `V(x)`.
pub trait Evaluate<T> {
    fn eval(&self, x: T) -> T;

    /// An upper bound on `|V(x)|` over all `x`, if one is known analytically.
    fn sup_bound(&self) -> Option<T> {
        None
    }
}

impl<T, F: Fn(T) -> T> Evaluate<T> for F {
    fn eval(&self, x: T) -> T {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeForm {
    /// `rV + rΔ + (σ²/2)Γ = 0`
    Full,
    /// `rV + DΓ = 0` (the `rΔ` term dropped)
    Hedged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeProblem<T> {
    pub r: T,
    pub sigma: T,
    pub form: OdeForm,
}

impl<T: Scalar> OdeProblem<T> {
    pub fn new(r: T, sigma: T, form: OdeForm) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::invalid("r", "must be finite"));
        }
        check_sigma(sigma)?;
        Ok(Self { r, sigma, form })
    }

    /// Diffusion constant `D = σ²/2`.
    pub fn diffusion(&self) -> T {
        diffusion(self.sigma)
    }

    pub fn roots(&self) -> Result<CharacteristicRoots<T>> {
        match self.form {
            OdeForm::Full => characteristic_roots_full(self.r, self.sigma),
            OdeForm::Hedged => characteristic_roots_hedged(self.r, self.sigma),
        }
    }

    /// Characteristic polynomial evaluated at `lambda`.
    pub fn characteristic(&self, lambda: Complex<T>) -> Complex<T> {
        let d = self.diffusion();
        match self.form {
            OdeForm::Full => lambda * lambda * d + lambda * self.r + self.r,
            OdeForm::Hedged => lambda * lambda * d + self.r,
        }
    }
}

#[inline]
pub fn diffusion<T: Scalar>(sigma: T) -> T {
    sigma * sigma / T::lit(2.0)
}

fn check_sigma<T: Scalar>(sigma: T) -> Result<()> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", format!("must be positive and finite, got {sigma}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootCase {
    ComplexConjugate,
    DistinctReal,
    RepeatedReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicRoots<T> {
    pub case: RootCase,
    /// Larger real root, or the root with positive imaginary part.
    pub root1: Complex<T>,
    pub root2: Complex<T>,
}

/// Discriminants within this many ulps of zero (relative to the larger of
/// `b²` and `|4ac|`) are treated as a double root.
const REPEATED_ROOT_ULPS: f64 = 8.0;

/// Roots of `(σ²/2)λ² + rλ + r = 0`.
///
/// Thresholds: complex for `0 < r < 2σ²`, repeated at `r = 0` and `r = 2σ²`,
/// distinct real otherwise.
pub fn characteristic_roots_full<T: Scalar>(r: T, sigma: T) -> Result<CharacteristicRoots<T>> {
    check_sigma(sigma)?;
    if !r.is_finite() {
        return Err(Error::invalid("r", "must be finite"));
    }
    let a = diffusion(sigma);
    let b = r;
    let c = r;
    let four_ac = T::lit(4.0) * a * c;
    let disc = b * b - four_ac;
    let scale = (b * b).max(four_ac.abs());
    let two_a = a + a;

    if disc.abs() <= T::lit(REPEATED_ROOT_ULPS) * T::epsilon() * scale {
        // +0 keeps r = 0 from producing a signed zero root
        let root = Complex::new(-b / two_a + T::zero(), T::zero());
        return Ok(CharacteristicRoots {
            case: RootCase::RepeatedReal,
            root1: root,
            root2: root,
        });
    }
    if disc < T::zero() {
        let re = -b / two_a;
        let im = (-disc).sqrt() / two_a;
        return Ok(CharacteristicRoots {
            case: RootCase::ComplexConjugate,
            root1: Complex::new(re, im),
            root2: Complex::new(re, -im),
        });
    }
    // Cancellation-free form: q = −(b + sign(b)√disc)/2, roots q/a and c/q.
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq) / T::lit(2.0);
    let (l1, l2) = (q / a, c / q);
    let (hi, lo) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
    Ok(CharacteristicRoots {
        case: RootCase::DistinctReal,
        root1: Complex::new(hi, T::zero()),
        root2: Complex::new(lo, T::zero()),
    })
}

/// Roots `±i√(r/D)` of `r + Dλ² = 0`.
pub fn characteristic_roots_hedged<T: Scalar>(r: T, sigma: T) -> Result<CharacteristicRoots<T>> {
    check_sigma(sigma)?;
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(Error::invalid("r", format!("hedged form requires r >= 0, got {r}")));
    }
    if r == T::zero() {
        let zero = Complex::new(T::zero(), T::zero());
        return Ok(CharacteristicRoots {
            case: RootCase::RepeatedReal,
            root1: zero,
            root2: zero,
        });
    }
    let k = (r / diffusion(sigma)).sqrt();
    Ok(CharacteristicRoots {
        case: RootCase::ComplexConjugate,
        root1: Complex::new(T::zero(), k),
        root2: Complex::new(T::zero(), -k),
    })
}

/// Closed-form solution of either ODE form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionEvaluator<T> {
    /// `A·sin(a x)` with `a = √(r/D)`.
    Sine { amplitude: T, wavenumber: T },
    /// `Re[A e^{λ₁x} + B e^{λ₂x}]`, or `Re[(A + Bx) e^{λx}]` for a double root.
    Exponential {
        roots: CharacteristicRoots<T>,
        a: Complex<T>,
        b: Complex<T>,
    },
}

impl<T: Scalar> SolutionEvaluator<T> {
    /// Sup of `|V|` over the real line, when finite.
    pub fn sup_norm(&self) -> Option<T> {
        match *self {
            SolutionEvaluator::Sine { amplitude, .. } => Some(amplitude.abs()),
            SolutionEvaluator::Exponential { roots, a, b } => {
                let bounded = roots.case == RootCase::ComplexConjugate
                    && roots.root1.re == T::zero()
                    && roots.root2.re == T::zero();
                bounded.then(|| a.norm() + b.norm())
            }
        }
    }
}

impl<T: Scalar> Evaluate<T> for SolutionEvaluator<T> {
    fn eval(&self, x: T) -> T {
        match *self {
            SolutionEvaluator::Sine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).sin(),
            SolutionEvaluator::Exponential { roots, a, b } => {
                let xc = Complex::new(x, T::zero());
                let v = match roots.case {
                    RootCase::RepeatedReal => (a + b * xc) * (roots.root1 * xc).exp(),
                    _ => a * (roots.root1 * xc).exp() + b * (roots.root2 * xc).exp(),
                };
                v.re
            }
        }
    }

    fn sup_bound(&self) -> Option<T> {
        self.sup_norm()
    }
}

/// `V(x) = A·sin(√(r/D)·x)`, the solution of the hedged form with `V(0) = 0`.
pub fn sine_solution<T: Scalar>(amplitude: T, r: T, sigma: T) -> Result<SolutionEvaluator<T>> {
    check_sigma(sigma)?;
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    Ok(SolutionEvaluator::Sine {
        amplitude,
        wavenumber: (r / diffusion(sigma)).sqrt(),
    })
}

pub fn general_solution<T: Scalar>(
    roots: CharacteristicRoots<T>,
    a: Complex<T>,
    b: Complex<T>,
) -> SolutionEvaluator<T> {
    SolutionEvaluator::Exponential { roots, a, b }
}

/// The sine branch written in exponential form: hedged roots `±ia` with
/// `A = amplitude/(2i)` and `B = −A`.
pub fn sine_as_general<T: Scalar>(amplitude: T, r: T, sigma: T) -> Result<SolutionEvaluator<T>> {
    let roots = characteristic_roots_hedged(r, sigma)?;
    let a = Complex::new(T::zero(), -amplitude / T::lit(2.0));
    Ok(general_solution(roots, a, -a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaGamma<T> {
    pub delta: T,
    pub gamma: T,
    pub h: T,
}

/// Central-difference Δ and Γ with step `h`.
///
/// Steps below `1e-8·max(1, |x|)` are rejected: rounding error then swamps
/// the second difference.
pub fn delta_gamma<T: Scalar, E: Evaluate<T> + ?Sized>(v: &E, x: T, h: T) -> Result<DeltaGamma<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::invalid("h", format!("must be positive, got {h}")));
    }
    let floor = T::lit(1e-8) * x.abs().max(T::one());
    if h < floor {
        return Err(Error::invalid(
            "h",
            format!("step {h} below cancellation floor {floor}"),
        ));
    }
    let (up, mid, down) = (v.eval(x + h), v.eval(x), v.eval(x - h));
    let delta = (up - down) / (h + h);
    let gamma = (up - mid - mid + down) / (h * h);
    if !delta.is_finite() || !gamma.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite finite difference at x = {x} (delta {delta}, gamma {gamma})"
        )));
    }
    Ok(DeltaGamma { delta, gamma, h })
}

/// ODE residual of `v` at `x` using finite-difference derivatives.
pub fn residual<T: Scalar, E: Evaluate<T> + ?Sized>(
    v: &E,
    problem: &OdeProblem<T>,
    x: T,
    h: T,
) -> Result<T> {
    let dg = delta_gamma(v, x, h)?;
    let r = problem.r;
    let d = problem.diffusion();
    let value = v.eval(x);
    Ok(match problem.form {
        OdeForm::Full => r * value + r * dg.delta + d * dg.gamma,
        OdeForm::Hedged => r * value + d * dg.gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const R1: f64 = 0.197392088021787172; // σ = 0.2, K = 1, n = 1

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn full_roots_complex() {
        let roots = characteristic_roots_full(0.02, 0.2).unwrap();
        assert_eq!(roots.case, RootCase::ComplexConjugate);
        assert!((roots.root1 - c(-0.5, 0.866025403784439)).norm() < 1e-12);
        assert_eq!(roots.root2, roots.root1.conj());
    }

    #[test]
    fn full_roots_distinct() {
        let roots = characteristic_roots_full(0.18_f64, 0.2).unwrap();
        assert_eq!(roots.case, RootCase::DistinctReal);
        assert!((roots.root1.re - -1.14589803375032).abs() < 1e-12);
        assert!((roots.root2.re - -7.85410196624968).abs() < 1e-12);
        let neg = characteristic_roots_full(-0.02_f64, 0.2).unwrap();
        assert_eq!(neg.case, RootCase::DistinctReal);
        assert!((neg.root1.re - 1.61803398874989).abs() < 1e-12);
    }

    #[test]
    fn full_roots_repeated() {
        let roots = characteristic_roots_full(0.08_f64, 0.2).unwrap();
        assert_eq!(roots.case, RootCase::RepeatedReal);
        assert!((roots.root1.re - -2.0).abs() < 1e-12);
        let zero = characteristic_roots_full(0.0, 0.7).unwrap();
        assert_eq!(zero.case, RootCase::RepeatedReal);
        assert_eq!(zero.root1, c(0.0, 0.0));
        assert!(zero.root1.re.is_sign_positive());
    }

    #[test]
    fn roots_satisfy_polynomial() {
        for (r, s) in [(0.02_f64, 0.2_f64), (0.18, 0.2), (0.08, 0.2), (-0.3, 0.5), (5.0, 0.1), (1e-6, 2.0)] {
            let p = OdeProblem::new(r, s, OdeForm::Full).unwrap();
            let roots = p.roots().unwrap();
            let scale = p.diffusion().max(r.abs());
            for l in [roots.root1, roots.root2] {
                assert!(p.characteristic(l).norm() <= 1e-12 * scale, "{r} {s} {l}");
            }
        }
    }

    #[test]
    fn sigma_zero_rejected() {
        assert!(characteristic_roots_full(0.1, 0.0).is_err());
        assert!(characteristic_roots_hedged(0.1, 0.0).is_err());
    }

    #[test]
    fn hedged_roots() {
        let roots = characteristic_roots_hedged(0.02, 0.2).unwrap();
        assert!((roots.root1 - c(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(roots.root2, roots.root1.conj());
        let roots = characteristic_roots_hedged(R1, 0.2).unwrap();
        assert!((roots.root1.im - PI).abs() < 1e-12);
        let roots = characteristic_roots_hedged(0.0, 0.2).unwrap();
        assert_eq!(roots.case, RootCase::RepeatedReal);
        assert!(characteristic_roots_hedged(-0.01, 0.2).is_err());
    }

    #[test]
    fn sine_solution_values() {
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        assert_eq!(v.eval(0.0), 0.0);
        assert!((v.eval(0.5) - 1.0).abs() < 1e-12);
        assert!(v.eval(1.0).abs() < 1e-9);
        assert!(sine_solution(1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn general_solution_values() {
        let roots = characteristic_roots_full(0.02, 0.2).unwrap();
        let v = general_solution(roots, c(0.5, 0.0), c(0.5, 0.0));
        assert!((v.eval(0.0) - 1.0).abs() < 1e-15);
        let z = general_solution(roots, c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(z.eval(0.7), 0.0);
    }

    #[test]
    fn euler_reduction_matches_sine() {
        let sine = sine_solution(1.3, R1, 0.2).unwrap();
        let expo = sine_as_general(1.3, R1, 0.2).unwrap();
        for i in 0..1000 {
            let x = i as f64 / 999.0;
            assert!((sine.eval(x) - expo.eval(x)).abs() <= 1e-12 * 1.3);
        }
    }

    #[test]
    fn differences_exact_on_quadratic() {
        let sq = |x: f64| x * x;
        let dg = delta_gamma(&sq, 0.75, 0.25).unwrap();
        assert_eq!((dg.delta, dg.gamma), (1.5, 2.0));
        let dg = delta_gamma(&sq, -3.0, 0.5).unwrap();
        assert_eq!((dg.delta, dg.gamma), (-6.0, 2.0));
        let dg = delta_gamma(&sq, 0.3, 1e-3).unwrap();
        assert!((dg.delta - 0.6).abs() < 1e-12 && (dg.gamma - 2.0).abs() < 1e-6);
    }

    #[test]
    fn differences_on_sine() {
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        let dg = delta_gamma(&v, 0.5, 1e-3).unwrap();
        assert!(dg.delta.abs() < 1e-5);
        assert!((dg.gamma + PI * PI).abs() < 1e-3);
        let dg = delta_gamma(&v, 0.0, 1e-3).unwrap();
        assert!((dg.delta - PI).abs() < 1e-5);
    }

    #[test]
    fn step_validation() {
        let v = |x: f64| x;
        assert!(delta_gamma(&v, 0.0, 0.0).is_err());
        assert!(delta_gamma(&v, 0.0, -1e-3).is_err());
        assert!(delta_gamma(&v, 0.0, 5e-9).is_err());
        assert!(delta_gamma(&v, 1e3, 5e-6).is_err());
        assert!(delta_gamma(&v, 1e3, 2e-5).is_ok());
        let nan = |_: f64| f64::NAN;
        assert!(matches!(delta_gamma(&nan, 0.0, 1e-3), Err(Error::Numerical(_))));
    }

    #[test]
    fn residual_examples() {
        let hedged = OdeProblem::new(R1, 0.2, OdeForm::Hedged).unwrap();
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        assert!(residual(&v, &hedged, 0.3, 1e-3).unwrap().abs() < 1e-6);

        let zero = |_: f64| 0.0;
        let full = OdeProblem::new(0.02, 0.2, OdeForm::Full).unwrap();
        assert_eq!(residual(&zero, &full, 0.4, 1e-3).unwrap(), 0.0);
        assert_eq!(residual(&zero, &hedged, 0.4, 1e-3).unwrap(), 0.0);

        let roots = full.roots().unwrap();
        for (a, b) in [(c(1.0, 0.0), c(1.0, 0.0)), (c(0.3, -2.0), c(0.3, 2.0)), (c(5.0, 1.0), c(-2.0, 0.5))] {
            let g = general_solution(roots, a, b);
            let res = residual(&g, &full, 0.5, 1e-3).unwrap();
            assert!(res.abs() < 1e-5 * (a.norm() + b.norm()));
        }
    }

    #[test]
    fn hedging_gap_is_r_delta() {
        let full = OdeProblem::new(R1, 0.2, OdeForm::Full).unwrap();
        let v = sine_solution(1.0, R1, 0.2).unwrap();
        for i in 1..10 {
            let x = i as f64 / 10.0;
            let dg = delta_gamma(&v, x, 1e-3).unwrap();
            let gap = residual(&v, &full, x, 1e-3).unwrap() - R1 * dg.delta;
            assert!(gap.abs() < 1e-6, "x = {x}: {gap}");
        }
    }

    #[test]
    fn single_precision_roots() {
        let roots = characteristic_roots_full(0.02_f32, 0.2).unwrap();
        assert_eq!(roots.case, RootCase::ComplexConjugate);
        assert!((roots.root1.im - 0.866_025_4).abs() < 1e-5);
    }
}
