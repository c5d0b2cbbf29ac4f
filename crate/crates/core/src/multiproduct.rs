//! Geometric multiproduct estimator.
//!
//! For each index set `S` the function is sampled on the geometric sequence
//!
//! ```text
//! x_n = prod_{k in S} (r^k - 1)^{1/k} * x / r^n,    n >= |S|
//! ```
//!
//! and the factors are combined with weights `C(n-1, |S|-1)`. Products over
//! odd-cardinality sets are divided by products over even-cardinality sets.
//! Everything is accumulated as a compensated sum of `weight * ln f` and
//! exponentiated once.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::accum::NeumaierSum;
use crate::combinatorics::{enumerate_subsets, family_factor_count, IndexSet, Weight};
use crate::error::{Error, Result};
use crate::source::FunctionSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    All,
    Even,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::All => "all",
            Parity::Even => "even",
        })
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Parity::All),
            "even" | "even-only" => Ok(Parity::Even),
            other => Err(Error::InvalidConfig(format!(
                "parity must be `all` or `even`, got {other:?}"
            ))),
        }
    }
}

/// Validated estimator parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmpConfig {
    r: f64,
    n_max: u32,
    base: IndexSet,
    parity: Parity,
}

impl GmpConfig {
    pub fn new(r: f64, n_max: u32, base: IndexSet, parity: Parity) -> Result<Self> {
        check_ratio(r)?;
        if (n_max as usize) < base.cardinality() {
            return Err(Error::InvalidConfig(format!(
                "n_max = {n_max} must be at least |base| = {}",
                base.cardinality()
            )));
        }
        if parity == Parity::Even && !base.all_even() {
            return Err(Error::InvalidConfig(format!(
                "even parity requires an all-even base, got {base}"
            )));
        }
        Ok(GmpConfig {
            r,
            n_max,
            base,
            parity,
        })
    }

    /// Couples truncation to the ratio so that `r^n_max` is about `cutoff`.
    pub fn with_cutoff(r: f64, cutoff: f64, base: IndexSet, parity: Parity) -> Result<Self> {
        let n_max = cutoff_n_max(r, cutoff, base.cardinality() as u32)?;
        Self::new(r, n_max, base, parity)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn base(&self) -> &IndexSet {
        &self.base
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }
}

/// `ceil(ln K / ln r)`, at least `min`.
///
/// A relative slack of 1e-9 is removed before rounding up so that, e.g.,
/// `r = sqrt(2)` and `K = 32` give 10 rather than 11.
pub fn cutoff_n_max(r: f64, cutoff: f64, min: u32) -> Result<u32> {
    check_ratio(r)?;
    if !(cutoff >= 2.0) || !cutoff.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "cutoff K must be a finite number >= 2, got {cutoff}"
        )));
    }
    let exact = cutoff.ln() / (r - 1.0).ln_1p();
    let n = (exact * (1.0 - 1e-9)).ceil();
    if n > u32::MAX as f64 {
        return Err(Error::InvalidConfig(format!(
            "cutoff coupling gives n_max = {n}, too large"
        )));
    }
    Ok((n as u32).max(min).max(1))
}

/// A truncated weighted product, held as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogProduct {
    pub log_value: f64,
    pub term_count: u32,
    /// Sample abscissa at `n = n_max`, the one closest to the origin.
    pub min_point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub log_value: f64,
    pub config: GmpConfig,
    pub x: f64,
    pub factor_count: u128,
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::RatioNotAboveOne(r))
    }
}

/// `r^k - 1` without cancellation near `r = 1`.
fn pow_minus_one(r: f64, k: u32) -> f64 {
    (f64::from(k) * (r - 1.0).ln_1p()).exp_m1()
}

/// `prod_{k in S} (r^k - 1)^{1/k}`.
pub fn coefficient(s: &IndexSet, r: f64) -> Result<f64> {
    check_ratio(r)?;
    Ok(s.elements()
        .iter()
        .map(|&k| pow_minus_one(r, k).powf(1.0 / f64::from(k)))
        .product())
}

pub fn sequence_point(s: &IndexSet, r: f64, x: f64, n: u32) -> Result<f64> {
    let c = coefficient(s, r)?;
    Ok(point(c, r, x, n))
}

#[inline]
fn point(coef: f64, r: f64, x: f64, n: u32) -> f64 {
    coef * x / r.powi(n as i32)
}

/// `sum_{n=|S|}^{n_max} C(n-1, |S|-1) ln f(x_n)`.
pub fn log_partial_product<F: FunctionSource + ?Sized>(
    f: &F,
    s: &IndexSet,
    r: f64,
    x: f64,
    n_max: u32,
) -> Result<LogProduct> {
    let m = s.cardinality() as u32;
    if n_max < m {
        return Err(Error::InvalidConfig(format!(
            "n_max = {n_max} is below |S| = {m} for S = {s}"
        )));
    }
    let coef = coefficient(s, r)?;
    let mut acc = NeumaierSum::new();
    for n in m..=n_max {
        let p = point(coef, r, x, n);
        let ln_f = f.ln_value(p)?;
        acc += Weight::for_term(u64::from(n), u64::from(m))?.scale(ln_f);
    }
    let log_value = acc.value();
    if !log_value.is_finite() {
        return Err(Error::NonFinite { subset: None });
    }
    Ok(LogProduct {
        log_value,
        term_count: n_max - m + 1,
        min_point: point(coef, r, x, n_max),
    })
}

fn signed_sum<'a, F: FunctionSource + ?Sized>(
    f: &F,
    subsets: impl Iterator<Item = &'a IndexSet>,
    r: f64,
    x: f64,
    n_max: u32,
) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for s in subsets {
        let lp = log_partial_product(f, s, r, x, n_max).map_err(|e| e.in_subset(s))?;
        if s.is_odd() {
            acc += lp.log_value;
        } else {
            acc += -lp.log_value;
        }
    }
    Ok(acc.value())
}

fn finish(log_value: f64, config: GmpConfig, x: f64, factor_count: u128) -> Result<Estimate> {
    if !log_value.is_finite() {
        return Err(Error::NonFinite { subset: None });
    }
    let value = log_value.exp();
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::ValueOutOfRange(log_value));
    }
    Ok(Estimate {
        value,
        log_value,
        config,
        x,
        factor_count,
    })
}

/// Estimates `f(x)` from the odd/even quotient over every non-empty subset of
/// the configured base. `x = 0` returns exactly 1 without evaluating `f`.
pub fn estimate<F: FunctionSource + ?Sized>(f: &F, x: f64, cfg: &GmpConfig) -> Result<Estimate> {
    let family = enumerate_subsets(&cfg.base);
    let count = family_factor_count(family.members(), u64::from(cfg.n_max))?;
    if x == 0.0 {
        return finish(0.0, cfg.clone(), x, count);
    }
    let log_value = signed_sum(f, family.members().iter(), cfg.r, x, cfg.n_max)?;
    finish(log_value, cfg.clone(), x, count)
}

/// Estimates the single component `f_k(x) = exp(c_k x^k)`: the same quotient
/// restricted to subsets of `base` whose largest element is `k`.
pub fn component_estimate<F: FunctionSource + ?Sized>(
    f: &F,
    k: u32,
    x: f64,
    r: f64,
    n_max: u32,
    base: &IndexSet,
) -> Result<Estimate> {
    if !base.contains(k) {
        return Err(Error::OrderNotInBase {
            k,
            base: base.clone(),
        });
    }
    let cfg = GmpConfig::new(r, n_max, base.clone(), Parity::All)?;
    let family = enumerate_subsets(base);
    let count = family_factor_count(family.with_max(k), u64::from(n_max))?;
    if x == 0.0 {
        return finish(0.0, cfg, x, count);
    }
    let log_value = signed_sum(f, family.with_max(k), r, x, n_max)?;
    finish(log_value, cfg, x, count)
}

/// Product of the component estimates for every order in the base. The
/// subsets partition by their largest element, so this regroups exactly the
/// factors of [`estimate`].
pub fn reconstruct_from_components<F: FunctionSource + ?Sized>(
    f: &F,
    x: f64,
    cfg: &GmpConfig,
) -> Result<Estimate> {
    let mut acc = NeumaierSum::new();
    let mut count: u128 = 0;
    for &k in cfg.base.elements() {
        let c = component_estimate(f, k, x, cfg.r, cfg.n_max, &cfg.base)?;
        acc += c.log_value;
        count += c.factor_count;
    }
    finish(acc.value(), cfg.clone(), x, count)
}

/// Factor multiplying `c_j x^j` when the component `exp(c_j x^j)` is
/// multiplied over the full order-`k` sequence: `(r^k - 1)^{j/k} / (r^j - 1)`.
pub fn pollution_exponent(j: u32, k: u32, r: f64) -> Result<f64> {
    check_ratio(r)?;
    if j == 0 || k == 0 {
        return Err(Error::InvalidConfig("orders must be >= 1".into()));
    }
    let num = pow_minus_one(r, k).powf(f64::from(j) / f64::from(k));
    Ok(num / pow_minus_one(r, j))
}
