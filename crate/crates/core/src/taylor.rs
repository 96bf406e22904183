//! Truncated univariate Taylor series and Taylor-mode expansion of
//! [`CoeffExpr`] trees.
//!
//! Expansion never differentiates numerically: every node is propagated as a
//! series with the usual coefficient recurrences (Cauchy products, quotient
//! back-substitution, the joint sin/cos recurrence, the exponential recurrence
//! and the square-root recurrence).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::CoeffExpr;

/// `Σ coeffs[i] (x - center)^i` truncated at degree `order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniSeries {
    center: f64,
    coeffs: Vec<f64>,
}

impl UniSeries {
    /// Builds a series from its coefficients. `coeffs` must be nonempty.
    pub fn new(center: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Order("a series needs at least one coefficient".into()));
        }
        Ok(UniSeries { center, coeffs })
    }

    pub fn constant(value: f64, center: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        UniSeries { center, coeffs }
    }

    /// The identity function `x` expanded about `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = center;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        UniSeries { center, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of degree `i`; zero beyond the truncation order.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Horner evaluation at the global coordinate `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Result<UniSeries> {
        if self.order() == 0 {
            return Err(Error::Order(
                "derivative of an order-0 series is not representable".into(),
            ));
        }
        let coeffs = (1..self.coeffs.len())
            .map(|i| i as f64 * self.coeffs[i])
            .collect();
        Ok(UniSeries {
            center: self.center,
            coeffs,
        })
    }

    /// Antiderivative vanishing at `lower`, where `lower` is given in the
    /// series' own shifted coordinate `t = x - center`.
    pub fn antiderivative(&self, lower: f64) -> UniSeries {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c / (i + 1) as f64),
        );
        let at_lower = coeffs.iter().rev().fold(0.0, |acc, &c| acc * lower + c);
        coeffs[0] = -at_lower;
        UniSeries {
            center: self.center,
            coeffs,
        }
    }

    pub fn truncate(&self, order: usize) -> UniSeries {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        UniSeries {
            center: self.center,
            coeffs,
        }
    }

    /// Re-expands the truncated polynomial about `new_center`. Exact for the
    /// polynomial itself; the order is preserved.
    pub fn shift_to(&self, new_center: f64) -> UniSeries {
        let d = new_center - self.center;
        let n = self.coeffs.len();
        // Repeated synthetic division (Taylor shift).
        let mut c = self.coeffs.clone();
        for k in 0..n {
            for i in (k..n - 1).rev() {
                c[i] += d * c[i + 1];
            }
        }
        UniSeries {
            center: new_center,
            coeffs: c,
        }
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> UniSeries {
        UniSeries {
            center: self.center,
            coeffs,
        }
    }
}

fn check_center(a: &UniSeries, b: &UniSeries) -> Result<()> {
    if a.center != b.center {
        return Err(Error::CenterMismatch {
            left: a.center,
            right: b.center,
        });
    }
    Ok(())
}

pub fn series_add(a: &UniSeries, b: &UniSeries) -> Result<UniSeries> {
    check_center(a, b)?;
    let n = a.order().min(b.order()) + 1;
    Ok(a.with_coeffs((0..n).map(|i| a.coeffs[i] + b.coeffs[i]).collect()))
}

pub fn series_sub(a: &UniSeries, b: &UniSeries) -> Result<UniSeries> {
    check_center(a, b)?;
    let n = a.order().min(b.order()) + 1;
    Ok(a.with_coeffs((0..n).map(|i| a.coeffs[i] - b.coeffs[i]).collect()))
}

/// Cauchy product truncated to the shared order.
pub fn series_mul(a: &UniSeries, b: &UniSeries) -> Result<UniSeries> {
    check_center(a, b)?;
    let n = a.order().min(b.order()) + 1;
    let coeffs = (0..n)
        .map(|k| (0..=k).map(|j| a.coeffs[j] * b.coeffs[k - j]).sum())
        .collect();
    Ok(a.with_coeffs(coeffs))
}

pub fn series_div(a: &UniSeries, b: &UniSeries) -> Result<UniSeries> {
    check_center(a, b)?;
    let b0 = b.coeffs[0];
    if b0 == 0.0 {
        return Err(Error::DivisionByZeroSeries);
    }
    let n = a.order().min(b.order()) + 1;
    let mut q = vec![0.0; n];
    for k in 0..n {
        let acc: f64 = (1..=k).map(|j| b.coeffs[j] * q[k - j]).sum();
        q[k] = (a.coeffs[k] - acc) / b0;
    }
    Ok(a.with_coeffs(q))
}

pub fn series_scale(a: &UniSeries, s: f64) -> UniSeries {
    a.with_coeffs(a.coeffs.iter().map(|c| c * s).collect())
}

fn series_exp(a: &UniSeries) -> UniSeries {
    let n = a.coeffs.len();
    let mut e = vec![0.0; n];
    e[0] = a.coeffs[0].exp();
    for k in 1..n {
        let acc: f64 = (1..=k).map(|j| j as f64 * a.coeffs[j] * e[k - j]).sum();
        e[k] = acc / k as f64;
    }
    a.with_coeffs(e)
}

fn series_sin_cos(a: &UniSeries) -> (UniSeries, UniSeries) {
    let n = a.coeffs.len();
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    s[0] = a.coeffs[0].sin();
    c[0] = a.coeffs[0].cos();
    for k in 1..n {
        let mut ds = 0.0;
        let mut dc = 0.0;
        for j in 1..=k {
            let w = j as f64 * a.coeffs[j];
            ds += w * c[k - j];
            dc -= w * s[k - j];
        }
        s[k] = ds / k as f64;
        c[k] = dc / k as f64;
    }
    (a.with_coeffs(s), a.with_coeffs(c))
}

fn series_sqrt(a: &UniSeries) -> Result<UniSeries> {
    let a0 = a.coeffs[0];
    if !(a0 > 0.0) {
        return Err(Error::Domain(format!(
            "sqrt radicand {a0} is not positive at x = {}",
            a.center
        )));
    }
    let n = a.coeffs.len();
    let mut r = vec![0.0; n];
    r[0] = a0.sqrt();
    for k in 1..n {
        let acc: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
        r[k] = (a.coeffs[k] - acc) / (2.0 * r[0]);
    }
    Ok(a.with_coeffs(r))
}

fn series_powi(a: &UniSeries, n: i32) -> Result<UniSeries> {
    let mut result = UniSeries::constant(1.0, a.center, a.order());
    let mut base = a.clone();
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result = series_mul(&result, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = series_mul(&base, &base)?;
        }
    }
    if n < 0 {
        if result.coeffs[0] == 0.0 {
            return Err(Error::Domain(format!(
                "negative power of a quantity vanishing at x = {}",
                a.center
            )));
        }
        result = series_div(&UniSeries::constant(1.0, a.center, a.order()), &result)?;
    }
    Ok(result)
}

/// Taylor coefficients of `expr` about `center`, up to degree `order`.
pub fn expand(expr: &CoeffExpr, center: f64, order: usize) -> Result<UniSeries> {
    let var = UniSeries::variable(center, order);
    expand_with(expr, &var)
}

/// Expands `expr` with the variable replaced by the series `var`.
fn expand_with(expr: &CoeffExpr, var: &UniSeries) -> Result<UniSeries> {
    let order = var.order();
    let center = var.center;
    Ok(match expr {
        CoeffExpr::Const(c) => UniSeries::constant(*c, center, order),
        CoeffExpr::Var => var.clone(),
        CoeffExpr::Add(args) => {
            let mut acc = UniSeries::constant(0.0, center, order);
            for a in args {
                acc = series_add(&acc, &expand_with(a, var)?)?;
            }
            acc
        }
        CoeffExpr::Mul(args) => {
            let mut acc = UniSeries::constant(1.0, center, order);
            for a in args {
                acc = series_mul(&acc, &expand_with(a, var)?)?;
            }
            acc
        }
        CoeffExpr::Sub(a, b) => series_sub(&expand_with(a, var)?, &expand_with(b, var)?)?,
        CoeffExpr::Div(a, b) => {
            let den = expand_with(b, var)?;
            if den.coeffs[0] == 0.0 {
                return Err(Error::Domain(format!(
                    "denominator {b} vanishes at x = {center}"
                )));
            }
            series_div(&expand_with(a, var)?, &den)?
        }
        CoeffExpr::Sin(a) => series_sin_cos(&expand_with(a, var)?).0,
        CoeffExpr::Cos(a) => series_sin_cos(&expand_with(a, var)?).1,
        CoeffExpr::Exp(a) => series_exp(&expand_with(a, var)?),
        CoeffExpr::Sqrt(a) => series_sqrt(&expand_with(a, var)?)?,
        CoeffExpr::Pow(a, n) => series_powi(&expand_with(a, var)?, *n)?,
    })
}
