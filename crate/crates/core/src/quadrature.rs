//! Adaptive Gauss–Kronrod (7/15) quadrature.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// Kronrod abscissae (non-negative half) and weights; Gauss weights apply to
// the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult<T> {
    pub value: T,
    /// Sum of `|K15 − G7|` over accepted intervals.
    pub error_estimate: T,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions<T> {
    pub abs_tol: T,
    /// Uniform pieces the domain is split into before adapting.
    pub initial_pieces: usize,
    pub max_intervals: usize,
}

impl<T: Scalar> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            initial_pieces: 1,
            max_intervals: 100_000,
        }
    }
}

/// One 15-point Kronrod rule with embedded 7-point Gauss estimate.
fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half_len, (kronrod - gauss).abs() * half_len)
}

/// Integrates `f` over `[a, b]` until each interval's error estimate is below
/// its length-proportional share of `abs_tol`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    opts: QuadratureOptions<T>,
) -> Result<QuadratureResult<T>> {
    if !a.is_finite() || !b.is_finite() || !(b > a) {
        return Err(Error::invalid("bounds", format!("need finite a < b, got [{a}, {b}]")));
    }
    if !(opts.abs_tol > T::zero()) {
        return Err(Error::invalid("abs_tol", "must be positive"));
    }
    let width = b - a;
    let pieces = opts.initial_pieces.max(1);
    let mut stack: Vec<(T, T)> = (0..pieces)
        .rev()
        .map(|i| {
            let lo = a + width * T::from_count(i) / T::from_count(pieces);
            let hi = if i + 1 == pieces {
                b
            } else {
                a + width * T::from_count(i + 1) / T::from_count(pieces)
            };
            (lo, hi)
        })
        .collect();

    let mut value = T::zero();
    let mut error = T::zero();
    let mut intervals = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let (v, e) = gk15(&f, lo, hi);
        if !v.is_finite() {
            return Err(Error::Numerical(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        let budget = opts.abs_tol * (hi - lo) / width;
        let mid = (lo + hi) * T::lit(0.5);
        let splittable = mid > lo && mid < hi;
        if e <= budget || !splittable {
            value = value + v;
            error = error + e;
            intervals += 1;
            continue;
        }
        if intervals + stack.len() + 2 > opts.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge within {} intervals",
                opts.max_intervals
            )));
        }
        stack.push((mid, hi));
        stack.push((lo, mid));
    }
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        intervals,
    })
}
