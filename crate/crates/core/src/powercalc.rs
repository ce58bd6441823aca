//! Closed-form Riemann–Liouville calculus on finite power sums.
//!
//! On a single power the fractional operators act by Γ ratios,
//!
//! ```text
//! I^μ t^λ = Γ(λ+1)/Γ(λ+μ+1) · t^{λ+μ},     D^μ t^λ = Γ(λ+1)/Γ(λ−μ+1) · t^{λ−μ},   λ > −1,
//! ```
//!
//! so a [`PowerSum`] is closed under both and serves as the exact oracle for
//! the quadrature-based modules. Kernel powers (`t^{μ−1}`, `t^{μ−2}` under
//! `D^μ`) hit a pole of the denominator and drop out exactly.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::specfun::{gamma, reciprocal_gamma};

/// Fractional order `α ∈ (1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Order(f64);

impl Order {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 1.0 && alpha <= 2.0 {
            Ok(Order(alpha))
        } else {
            Err(Error::InvalidOrder(alpha))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rounds an exponent to 12 decimal places. Exponents in this domain are
/// short decimal literals, so this maps `0.2 - 1.5` and `-1.3` to the same
/// double and makes term merging a bit comparison.
pub fn canonical_exponent(e: f64) -> f64 {
    let r = (e * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One term `coefficient · t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Finite linear combination `Σ cᵢ t^{λᵢ}` in canonical form: ascending
/// distinct exponents, no zero coefficients.
///
/// Exponents are unrestricted here; the Riemann–Liouville operators check
/// their own `λ > −1` requirement on input.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSum {
    terms: Vec<Term>,
}

impl PowerSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0.0)
    }

    pub fn monomial(coefficient: f64, exponent: f64) -> Self {
        Self::from_terms([(coefficient, exponent)])
    }

    /// Builds a canonical sum from `(coefficient, exponent)` pairs.
    pub fn from_terms<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut raw: Vec<Term> = pairs
            .into_iter()
            .map(|(c, e)| Term {
                coefficient: c,
                exponent: canonical_exponent(e),
            })
            .collect();
        raw.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        let mut terms: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match terms.last_mut() {
                Some(last) if last.exponent.to_bits() == t.exponent.to_bits() => {
                    last.coefficient += t.coefficient;
                }
                _ => terms.push(t),
            }
        }
        terms.retain(|t| t.coefficient != 0.0);
        PowerSum { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.exponent)
    }

    /// Coefficient of `t^exponent`, zero if absent.
    pub fn coefficient_of(&self, exponent: f64) -> f64 {
        let e = canonical_exponent(exponent);
        self.terms
            .iter()
            .find(|t| t.exponent.to_bits() == e.to_bits())
            .map_or(0.0, |t| t.coefficient)
    }

    /// Multiplies by `t^shift`.
    pub fn shift(&self, shift: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| (t.coefficient, t.exponent + shift)),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| (k * t.coefficient, t.exponent)))
    }

    fn require_rl_domain(&self) -> Result<()> {
        match self.terms.iter().find(|t| t.exponent <= -1.0) {
            Some(t) => Err(Error::ExponentOutOfRange {
                exponent: t.exponent,
                reason: "Riemann-Liouville operators need exponents > -1",
            }),
            None => Ok(()),
        }
    }

    /// `Σ cᵢ t^{λᵢ}`. At `t = 0` only nonnegative exponents are allowed.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power sum evaluated at t = {t}"
            )));
        }
        if t == 0.0 {
            let mut acc = 0.0;
            for term in &self.terms {
                if term.exponent < 0.0 {
                    return Err(Error::SingularEvaluation {
                        exponent: term.exponent,
                    });
                }
                if term.exponent == 0.0 {
                    acc += term.coefficient;
                }
            }
            return Ok(acc);
        }
        Ok(self.eval_positive(t))
    }

    /// Evaluation for `t > 0` without checks.
    #[inline]
    pub fn eval_positive(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                if term.exponent == 0.0 {
                    term.coefficient
                } else {
                    term.coefficient * t.powf(term.exponent)
                }
            })
            .sum()
    }

    /// Riemann–Liouville derivative `D^μ`, `0 < μ ≤ 2`, by the power rule.
    /// Terms whose denominator Γ(λ−μ+1) has a pole vanish exactly.
    pub fn frac_derivative(&self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "derivative order {mu} outside (0, 2]"
            )));
        }
        self.require_rl_domain()?;
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let target = canonical_exponent(t.exponent - mu);
            let rg = reciprocal_gamma(target + 1.0);
            if rg == 0.0 {
                continue;
            }
            out.push((t.coefficient * gamma(t.exponent + 1.0)? * rg, target));
        }
        Ok(Self::from_terms(out))
    }

    /// Riemann–Liouville integral `I^μ`, `μ > 0`.
    pub fn frac_integral(&self, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "integral order {mu} must be positive"
            )));
        }
        self.require_rl_domain()?;
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let coef = t.coefficient
                * gamma(t.exponent + 1.0)?
                * reciprocal_gamma(t.exponent + mu + 1.0);
            out.push((coef, t.exponent + mu));
        }
        Ok(Self::from_terms(out))
    }

    /// Ordinary derivative `d/dt`. Constants drop; a result exponent at or
    /// below −1 is rejected.
    pub fn classical_derivative(&self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.exponent == 0.0 {
                continue;
            }
            let e = t.exponent - 1.0;
            if e <= -1.0 {
                return Err(Error::ExponentOutOfRange {
                    exponent: e,
                    reason: "classical derivative leaves exponents > -1",
                });
            }
            out.push((t.coefficient * t.exponent, e));
        }
        Ok(Self::from_terms(out))
    }
}

impl Add for &PowerSum {
    type Output = PowerSum;
    fn add(self, rhs: &PowerSum) -> PowerSum {
        PowerSum::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|t| (t.coefficient, t.exponent)),
        )
    }
}

impl Sub for &PowerSum {
    type Output = PowerSum;
    fn sub(self, rhs: &PowerSum) -> PowerSum {
        self + &(-rhs)
    }
}

impl Neg for &PowerSum {
    type Output = PowerSum;
    fn neg(self) -> PowerSum {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &PowerSum {
    type Output = PowerSum;
    fn mul(self, k: f64) -> PowerSum {
        self.scale(k)
    }
}

impl fmt::Display for PowerSum {
    /// Canonical text form `c1*t^l1 + c2*t^l2 - ...`; `0` for the empty sum.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let c = t.coefficient;
            if i == 0 {
                write!(f, "{c}*t^{}", t.exponent)?;
            } else if c < 0.0 {
                write!(f, " - {}*t^{}", -c, t.exponent)?;
            } else {
                write!(f, " + {c}*t^{}", t.exponent)?;
            }
        }
        Ok(())
    }
}

impl FromStr for PowerSum {
    type Err = Error;

    /// Parses `c1*t^l1 + c2*t^l2 + ...`. Also accepted: bare constants,
    /// bare `t` / `t^l`, a leading sign, and parenthesised exponents
    /// (`t^(-1.3)`).
    fn from_str(s: &str) -> Result<Self> {
        PowerSumParser::new(s).parse()
    }
}

struct PowerSumParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> PowerSumParser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        if end < bytes.len() && (bytes[end] == b'-' || bytes[end] == b'+') {
            end += 1;
        }
        while end < bytes.len() {
            let b = bytes[end];
            let exp_sign = (b == b'-' || b == b'+')
                && end > start
                && matches!(bytes[end - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        match self.src[start..end].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(v)
            }
            _ => self.err("expected a decimal number"),
        }
    }

    fn exponent(&mut self) -> Result<f64> {
        if self.eat('(') {
            let e = self.number()?;
            if !self.eat(')') {
                return self.err("expected ')'");
            }
            Ok(e)
        } else {
            self.number()
        }
    }

    /// `coef [* t [^ exp]] | t [^ exp]`
    fn term(&mut self, sign: f64) -> Result<(f64, f64)> {
        self.skip_ws();
        let coefficient = if self.peek() == Some('t') {
            1.0
        } else {
            let c = self.number()?;
            if !self.eat('*') {
                return Ok((sign * c, 0.0));
            }
            self.skip_ws();
            if self.peek() != Some('t') {
                return self.err("expected 't'");
            }
            c
        };
        self.pos += 1; // 't'
        let exponent = if self.eat('^') { self.exponent()? } else { 1.0 };
        Ok((sign * coefficient, exponent))
    }

    fn parse(mut self) -> Result<PowerSum> {
        let mut pairs = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            pairs.push(self.term(sign)?);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some('-') => {
                    self.pos += 1;
                    sign = -1.0;
                }
                Some(_) => return self.err("expected '+', '-' or end of input"),
            }
        }
        Ok(PowerSum::from_terms(pairs))
    }
}
