//! Plain bracketing bisection.
//!
//! Runs until the bracket collapses to adjacent floating-point values, which
//! takes ~60 halvings for any finite bracket, so the iteration cap is only hit
//! on NaN-producing inputs.

use crate::error::SolveError;

pub const MAX_ITERATIONS: usize = 200;

/// Bracket around a sign change of `f`, with `neg`/`pos` the ends where `f < 0`
/// and `f >= 0`. The ends may be in either numeric order.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub neg: f64,
    pub pos: f64,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.neg + self.pos)
    }
}

pub fn bisect<F>(f: F, mut bracket: Bracket, what: &'static str) -> Result<Bracket, SolveError>
where
    F: Fn(f64) -> f64,
{
    for _ in 0..MAX_ITERATIONS {
        let mid = bracket.midpoint();
        if mid == bracket.neg || mid == bracket.pos {
            return Ok(bracket);
        }
        let v = f(mid);
        if v.is_nan() {
            break;
        }
        if v < 0.0 {
            bracket.neg = mid;
        } else {
            bracket.pos = mid;
        }
    }
    Err(SolveError::NotConverged {
        what,
        iterations: MAX_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let b = bisect(|x| x * x - 2.0, Bracket { neg: 0.0, pos: 2.0 }, "sqrt").unwrap();
        assert!((b.midpoint() - 2f64.sqrt()).abs() < 1e-15);
        assert!(b.neg * b.neg - 2.0 < 0.0);
        assert!(b.pos * b.pos - 2.0 >= 0.0);
    }

    #[test]
    fn reversed_orientation() {
        let b = bisect(|x| 1.0 - x, Bracket { neg: 3.0, pos: 0.0 }, "line").unwrap();
        assert!((b.midpoint() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nan_is_reported() {
        let r = bisect(|_| f64::NAN, Bracket { neg: 0.0, pos: 1.0 }, "nan");
        assert!(matches!(r, Err(SolveError::NotConverged { .. })));
    }
}
