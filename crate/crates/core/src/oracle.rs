//! Reference computations that do not go through the estimator: built-in test
//! functions, Euler's cosine product, log-series components, the
//! unconsolidated multi-index product, and the truncated closed form for
//! `exp(c x^k)`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::accum::NeumaierSum;
use crate::combinatorics::IndexSet;
use crate::error::{Error, Result};
use crate::source::FunctionSource;

/// Built-in analytic functions, each with `f(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BuiltinFunction {
    One,
    Cos,
    /// `exp(c x)`
    ExpScaled(f64),
    /// `1 + sin(x) / 2`
    HalfSinShifted,
    /// `exp(c x^k)`
    MonomialExp {
        c: f64,
        k: u32,
    },
}

impl BuiltinFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BuiltinFunction::One => 1.0,
            BuiltinFunction::Cos => x.abs().cos(),
            BuiltinFunction::ExpScaled(c) => (c * x).exp(),
            BuiltinFunction::HalfSinShifted => 1.0 + 0.5 * x.sin(),
            BuiltinFunction::MonomialExp { c, k } => (c * self.monomial(x, k)).exp(),
        }
    }

    fn monomial(&self, x: f64, k: u32) -> f64 {
        let x = if k.is_multiple_of(2) { x.abs() } else { x };
        x.powi(k as i32)
    }
}

impl FunctionSource for BuiltinFunction {
    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x))
    }

    fn ln_value(&self, x: f64) -> Result<f64> {
        match *self {
            BuiltinFunction::One => Ok(0.0),
            BuiltinFunction::ExpScaled(c) => Ok(c * x),
            BuiltinFunction::MonomialExp { c, k } => Ok(c * self.monomial(x, k)),
            BuiltinFunction::HalfSinShifted => Ok((0.5 * x.sin()).ln_1p()),
            BuiltinFunction::Cos => {
                let v = self.eval(x);
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::NonPositiveSample {
                        abscissa: x,
                        value: v,
                        subset: None,
                    })
                }
            }
        }
    }

    fn is_even(&self) -> bool {
        match *self {
            BuiltinFunction::One | BuiltinFunction::Cos => true,
            BuiltinFunction::MonomialExp { k, .. } => k % 2 == 0,
            BuiltinFunction::ExpScaled(c) => c == 0.0,
            BuiltinFunction::HalfSinShifted => false,
        }
    }
}

impl fmt::Display for BuiltinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinFunction::One => f.write_str("one"),
            BuiltinFunction::Cos => f.write_str("cos"),
            BuiltinFunction::ExpScaled(c) => write!(f, "exp:{c}"),
            BuiltinFunction::HalfSinShifted => f.write_str("half-sin"),
            BuiltinFunction::MonomialExp { c, k } => write!(f, "monomial-exp:{c}:{k}"),
        }
    }
}

impl FromStr for BuiltinFunction {
    type Err = Error;

    /// Accepts `one`, `cos`, `exp`, `exp:C`, `half-sin`, `monomial-exp:C:K`.
    /// Underscored spellings are accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('_', "-");
        let mut parts = norm.split(':');
        let head = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = || Error::InvalidConfig(format!("unknown function {s:?}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let f = match (head, args.as_slice()) {
            ("one", []) => BuiltinFunction::One,
            ("cos", []) => BuiltinFunction::Cos,
            ("exp" | "exp-scaled", []) => BuiltinFunction::ExpScaled(1.0),
            ("exp" | "exp-scaled", [c]) => BuiltinFunction::ExpScaled(num(c)?),
            ("half-sin" | "half-sin-shifted", []) => BuiltinFunction::HalfSinShifted,
            ("monomial-exp", [c, k]) => BuiltinFunction::MonomialExp {
                c: num(c)?,
                k: k.parse().ok().filter(|k| *k >= 1).ok_or_else(bad)?,
            },
            _ => return Err(bad()),
        };
        if let BuiltinFunction::ExpScaled(c) | BuiltinFunction::MonomialExp { c, .. } = f {
            if !c.is_finite() {
                return Err(bad());
            }
        }
        Ok(f)
    }
}

/// `prod_{n=1}^{N} cos(x / 2^n)`.
pub fn euler_partial_product(x: f64, n: u32) -> f64 {
    let mut scale = 1.0;
    let mut p = 1.0;
    for _ in 0..n {
        scale *= 0.5;
        p *= (x * scale).cos();
    }
    p
}

/// `sin(x) / x`, with the series near the removable singularity.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Exact log of the `N`-truncated order-`k` product of `exp(c x^k)`:
/// `c x^k (1 - r^{-kN})`.
pub fn truncated_invariance_closed_form(c: f64, k: u32, r: f64, x: f64, n: u32) -> f64 {
    let tail = -(-(f64::from(k) * f64::from(n)) * r.ln()).exp_m1();
    c * x.powi(k as i32) * tail
}

/// Log of the product over every tuple `(n_j)_{j in S}`, `n_j >= 1`,
/// `sum n_j <= N`, of `f(prod_j (r^j - 1)^{1/j} / r^{n_j} * x)`.
///
/// This is the unconsolidated form: one factor per tuple, no binomial
/// weights.
pub fn multiindex_bruteforce<F: FunctionSource + ?Sized>(
    f: &F,
    s: &IndexSet,
    r: f64,
    x: f64,
    n: u32,
) -> Result<f64> {
    if s.cardinality() > 3 || n > 10 {
        return Err(Error::OracleScale(format!(
            "multi-index oracle limited to |S| <= 3, N <= 10 (got |S| = {}, N = {n})",
            s.cardinality()
        )));
    }
    if !(r > 1.0) {
        return Err(Error::RatioNotAboveOne(r));
    }
    let orders = s.elements();
    let mut acc = NeumaierSum::new();
    let mut tuple = vec![0u32; orders.len()];
    visit(f, orders, r, x, n, 0, &mut tuple, &mut acc)?;
    Ok(acc.value())
}

#[allow(clippy::too_many_arguments)]
fn visit<F: FunctionSource + ?Sized>(
    f: &F,
    orders: &[u32],
    r: f64,
    x: f64,
    budget: u32,
    depth: usize,
    tuple: &mut [u32],
    acc: &mut NeumaierSum,
) -> Result<()> {
    if depth == orders.len() {
        let mut p = x;
        for (&j, &nj) in orders.iter().zip(tuple.iter()) {
            let rj = r.powi(j as i32) - 1.0;
            p *= rj.powf(1.0 / f64::from(j)) / r.powi(nj as i32);
        }
        *acc += f.ln_value(p)?;
        return Ok(());
    }
    let later = (orders.len() - depth - 1) as u32;
    for nj in 1..=budget.saturating_sub(later) {
        tuple[depth] = nj;
        visit(f, orders, r, x, budget - nj, depth + 1, tuple, acc)?;
    }
    Ok(())
}

/// Power-series coefficients `c_1..c_K` of `ln f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSeries {
    pub function: BuiltinFunction,
    /// `coefficients[i]` is `c_{i+1}`.
    pub coefficients: Vec<f64>,
}

impl ComponentSeries {
    pub fn c(&self, k: usize) -> f64 {
        self.coefficients.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `sum_k c_k x^k`
    pub fn log_at(&self, x: f64) -> f64 {
        // Horner, highest order first
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| (acc + c) * x)
    }
}

pub fn log_series_components(function: BuiltinFunction, k_max: usize) -> Result<ComponentSeries> {
    if k_max == 0 || k_max > 12 {
        return Err(Error::OracleScale(format!(
            "component series limited to 1 <= K <= 12, got {k_max}"
        )));
    }
    let coefficients = match function {
        BuiltinFunction::One => vec![0.0; k_max],
        BuiltinFunction::ExpScaled(c) => {
            let mut v = vec![0.0; k_max];
            v[0] = c;
            v
        }
        BuiltinFunction::MonomialExp { c, k } => {
            let mut v = vec![0.0; k_max];
            if let Some(slot) = v.get_mut(k as usize - 1) {
                *slot = c;
            }
            v
        }
        BuiltinFunction::Cos => {
            // cos x - 1
            let u = series::from_fn(k_max, |n| {
                if n >= 2 && n % 2 == 0 {
                    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    sign / series::factorial(n)
                } else {
                    0.0
                }
            });
            series::log1p_compose(&u)[1..].to_vec()
        }
        BuiltinFunction::HalfSinShifted => {
            // sin(x) / 2
            let u = series::from_fn(k_max, |n| {
                if n % 2 == 1 {
                    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    0.5 * sign / series::factorial(n)
                } else {
                    0.0
                }
            });
            series::log1p_compose(&u)[1..].to_vec()
        }
    };
    Ok(ComponentSeries {
        function,
        coefficients,
    })
}

/// Truncated power series arithmetic, coefficient `i` multiplies `x^i`.
mod series {
    pub fn from_fn(k_max: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..=k_max).map(f).collect()
    }

    pub fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let len = a.len();
        let mut out = vec![0.0; len];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate().take(len - i) {
                out[i + j] += ai * bj;
            }
        }
        out
    }

    /// `ln(1 + u)` for `u` with zero constant term, by composing
    /// `sum_j (-1)^{j+1} u^j / j`.
    pub fn log1p_compose(u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u[0], 0.0);
        let len = u.len();
        let mut out = vec![0.0; len];
        let mut power = u.to_vec();
        for j in 1..len {
            let w = if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64;
            for (o, p) in out.iter_mut().zip(&power) {
                *o += w * p;
            }
            power = mul(&power, u);
        }
        out
    }
}
