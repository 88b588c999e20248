use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `c` of the parameter plane of `f_c(z) = z^2 + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexParam {
    pub re: f64,
    pub im: f64,
}

impl ComplexParam {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "parameter must be finite, got ({re}, {im})"
            )));
        }
        Ok(Self { re, im })
    }

    /// Real parameter `c = re`. Panics on non-finite input.
    pub fn real(re: f64) -> Self {
        Self::new(re, 0.0).expect("finite real parameter")
    }

    pub fn from_complex(c: Complex64) -> Result<Self> {
        Self::new(c.re, c.im)
    }

    #[inline]
    pub fn value(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl fmt::Display for ComplexParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(ComplexParam::new(f64::NAN, 0.0).is_err());
        assert!(ComplexParam::new(0.0, f64::INFINITY).is_err());
        assert_eq!(ComplexParam::real(-2.0).value(), Complex64::new(-2.0, 0.0));
    }
}
