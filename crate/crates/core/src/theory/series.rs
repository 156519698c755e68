//! Truncated power series and the non-crossing moment transform.
//!
//! With `a(y) = sum_k A_k y^k` the generating function of single-block
//! contributions `<tr X^{2k}>` (already weighted by `Z/d`), the moment
//! generating function `f(x) = sum_k mu_{2k} x^{2k}` solves
//! `f(x) = 1 + a(x^2 f(x)^2)`. For blocks built from vectors of norms `R_a`,
//! `a(y) = (Z/d) sum_a R_a^4 y / (1 - R_a^4 y)`.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{Map, Value};

/// Coefficient ring for series arithmetic.
pub trait Coeff: Clone {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
}

/// Polynomial in `t` with integer coefficients, lowest power first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_u64(coeffs: &[u64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The monomial `c t^k`.
    pub fn monomial(c: i64, k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::from(c);
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + c.to_f64().unwrap_or(f64::INFINITY))
    }

    /// `{"<power>": coefficient}` for nonzero coefficients. Coefficients that do
    /// not fit in a `u64` are written as decimal strings.
    pub fn to_json_map(&self) -> Value {
        let mut m = Map::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = match c.to_u64() {
                Some(x) => Value::from(x),
                None => Value::from(c.to_string()),
            };
            m.insert(k.to_string(), v);
        }
        Value::Object(m)
    }
}

impl Coeff for IntPoly {
    fn zero() -> Self {
        IntPoly::default()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;

    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;

    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::default();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl fmt::Display for IntPoly {
    /// Highest power first, e.g. `14t^4 + 28t^3 + 12t^2 + t`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let show_coeff = k == 0 || !c.is_one();
            if show_coeff {
                write!(f, "{c}")?;
            }
            match k {
                0 => {}
                1 => f.write_str("t")?,
                _ => write!(f, "t^{k}")?,
            }
        }
        Ok(())
    }
}

/// Truncated series `sum_{k < len} c_k y^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<C> {
    coeffs: Vec<C>,
}

impl<C: Coeff> Series<C> {
    pub fn from_coeffs(coeffs: Vec<C>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Product truncated to the shorter length.
    pub fn mul_truncated(&self, other: &Self) -> Self {
        let n = self.len().min(other.len());
        let coeffs = (0..n)
            .map(|k| {
                (0..=k).fold(C::zero(), |acc, i| {
                    acc.add(&self.coeffs[i].mul(&other.coeffs[k - i]))
                })
            })
            .collect();
        Self { coeffs }
    }
}

/// One geometric component `weight * c y / (1 - c y)` of `a(y)`.
#[derive(Debug, Clone)]
pub struct GeometricTerm<C> {
    pub weight: C,
    pub ratio: C,
}

/// Solves `f = 1 + a(y f^2)` for `a(y) = sum_terms weight * ratio * y / (1 - ratio * y)`
/// through order `y^k_max`.
///
/// The fixed point is resolved order by order: the coefficient of `y^k` in
/// `a(y f^2)` only involves coefficients of `f` below `k`, so one sweep gives
/// the exact truncated solution. With `u = y f^2` and `w = ratio u / (1 - ratio u)`
/// the recursion is `w_k = ratio (u_k + sum_{0<i<k} u_i w_{k-i})`.
pub fn nc_fixed_point<C: Coeff>(terms: &[GeometricTerm<C>], one: C, k_max: usize) -> Series<C> {
    let n = k_max + 1;
    let mut f: Vec<C> = vec![one];
    let mut u: Vec<C> = vec![C::zero()];
    let mut w: Vec<Vec<C>> = vec![vec![C::zero()]; terms.len()];
    for k in 1..n {
        // u_k = sum_{i + j = k - 1} f_i f_j
        let uk = (0..k).fold(C::zero(), |acc, i| acc.add(&f[i].mul(&f[k - 1 - i])));
        u.push(uk);
        let mut fk = C::zero();
        for (term, wt) in terms.iter().zip(w.iter_mut()) {
            let mut inner = u[k].clone();
            for i in 1..k {
                inner = inner.add(&u[i].mul(&wt[k - i]));
            }
            let wk = term.ratio.mul(&inner);
            fk = fk.add(&term.weight.mul(&wk));
            wt.push(wk);
        }
        f.push(fk);
    }
    Series::from_coeffs(f)
}
