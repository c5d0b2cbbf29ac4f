//! The thing being extrapolated.

use crate::error::{Error, Result};

/// A real function normalized so that `f(0) = 1`, evaluated at geometric
/// sample points.
///
/// Implementations must be shareable across threads and must not mutate
/// during evaluation.
pub trait FunctionSource: Send + Sync {
    fn value(&self, x: f64) -> Result<f64>;

    /// `ln f(x)`. Errors with [`Error::NonPositiveSample`] when `f(x) <= 0`.
    /// Sources with a closed-form logarithm should override this.
    fn ln_value(&self, x: f64) -> Result<f64> {
        let v = self.value(x)?;
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

    /// True when `f(-x) = f(x)`.
    fn is_even(&self) -> bool {
        false
    }
}

impl<T: FunctionSource + ?Sized> FunctionSource for &T {
    fn value(&self, x: f64) -> Result<f64> {
        (**self).value(x)
    }

    fn ln_value(&self, x: f64) -> Result<f64> {
        (**self).ln_value(x)
    }

    fn is_even(&self) -> bool {
        (**self).is_even()
    }
}

/// Adapts a plain closure.
pub struct FnSource<F>(pub F);

impl<F> FunctionSource for FnSource<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> Result<f64> {
        Ok((self.0)(x))
    }
}
