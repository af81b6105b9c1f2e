//! Log-gamma helpers.

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `ln C(n, r)`; `-inf` when `r > n`.
pub fn ln_choose(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
}

/// `x ln y` with `0 ln 0 = 0`.
#[inline]
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_choose(5, 2) - 10f64.ln()).abs() < 1e-13);
        assert_eq!(ln_choose(2, 3), f64::NEG_INFINITY);
        // no overflow far beyond f64 factorial range
        assert!(ln_factorial(1_000_000).is_finite());
    }

    #[test]
    fn xlny_convention() {
        assert_eq!(xlny(0.0, 0.0), 0.0);
        assert_eq!(xlny(2.0, 0.0), f64::NEG_INFINITY);
    }
}
