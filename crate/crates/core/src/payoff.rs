//! Call/put payoffs, moneyness states and the discounted payoff process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

/// Sign of the exponent applied to payoffs when forming `Y = V·e^{±rt}`.
///
/// `PaperLiteralPlus` multiplies by `e^{+rt}`; `StandardMinus` by `e^{-rt}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountSign {
    PaperLiteralPlus,
    #[default]
    StandardMinus,
}

impl DiscountSign {
    /// +1 or −1.
    pub fn exponent_sign<T: Scalar>(self) -> T {
        match self {
            DiscountSign::PaperLiteralPlus => T::one(),
            DiscountSign::StandardMinus => -T::one(),
        }
    }

    /// `e^{±rt}`.
    pub fn factor<T: Scalar>(self, r: T, t: T) -> T {
        (self.exponent_sign::<T>() * r * t).exp()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DiscountSign::PaperLiteralPlus => "paper_literal_plus",
            DiscountSign::StandardMinus => "standard_minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffSpec<T> {
    pub strike: T,
    pub kind: OptionKind,
    pub discount_sign: DiscountSign,
}

impl<T: Scalar> PayoffSpec<T> {
    pub fn new(strike: T, kind: OptionKind) -> Result<Self> {
        if !(strike > T::zero()) || !strike.is_finite() {
            return Err(Error::invalid("strike", format!("must be positive, got {strike}")));
        }
        Ok(Self {
            strike,
            kind,
            discount_sign: DiscountSign::default(),
        })
    }

    pub fn with_discount_sign(mut self, sign: DiscountSign) -> Self {
        self.discount_sign = sign;
        self
    }

    pub fn payoff(&self, x: T) -> T {
        match self.kind {
            OptionKind::Call => call_payoff(x, self.strike),
            OptionKind::Put => put_payoff(x, self.strike),
        }
    }

    /// Discounted payoff `Y(t) = V(x)·e^{±rt}` under this spec's sign.
    pub fn discounted(&self, x: T, r: T, t: T) -> T {
        discounted_value(self.payoff(x), r, t, self.discount_sign)
    }
}

/// `max(x − K, 0)`.
#[inline]
pub fn call_payoff<T: Scalar>(x: T, strike: T) -> T {
    (x - strike).max(T::zero())
}

/// `max(K − x, 0)`; the put is reported as a non-negative magnitude.
#[inline]
pub fn put_payoff<T: Scalar>(x: T, strike: T) -> T {
    (strike - x).max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoneynessState {
    /// State a: `x > K + tol`.
    DeepInTheMoney,
    /// State b: `|x − K| ≤ tol`.
    AtTheMoney,
    /// State c: `x < K − tol`.
    DeepOutOfTheMoney,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moneyness<T> {
    pub state: MoneynessState,
    pub tolerance: T,
}

pub fn moneyness<T: Scalar>(x: T, strike: T, tol: T) -> Result<Moneyness<T>> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("tolerance", format!("must be positive, got {tol}")));
    }
    let state = if (x - strike).abs() <= tol {
        MoneynessState::AtTheMoney
    } else if x > strike {
        MoneynessState::DeepInTheMoney
    } else {
        MoneynessState::DeepOutOfTheMoney
    };
    Ok(Moneyness {
        state,
        tolerance: tol,
    })
}

/// `v·e^{+rt}` or `v·e^{−rt}` depending on `sign`.
pub fn discounted_value<T: Scalar>(v: T, r: T, t: T, sign: DiscountSign) -> T {
    v * sign.factor(r, t)
}
