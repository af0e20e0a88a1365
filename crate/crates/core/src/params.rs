use crate::error::{Error, Result};

/// Exponent `p`, dimension `n` and the normalization `c > 0` of the
/// fundamental solution `w` with `v'(r) = -c r^{(1-n)/(p-1)}`.
///
/// `c` defaults to 1. Every sign statement in this crate is invariant under
/// `c > 0`; the distributional constant making `Δ_p w + δ = 0` is left to
/// callers who need it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    p: f64,
    n: usize,
    c: f64,
}

impl Params {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        Self::with_normalization(p, n, 1.0)
    }

    pub fn with_normalization(p: f64, n: usize, c: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::Domain("p must be finite"));
        }
        if p == 1.0 {
            return Err(Error::Domain(
                "p = 1 admits no non-constant radial solution",
            ));
        }
        if n == 0 {
            return Err(Error::Domain("dimension n must be at least 1"));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain("normalization c must be positive and finite"));
        }
        Ok(Params { p, n, c })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    /// Exact `p == n`; no tolerance, so the logarithmic branch is only
    /// selected when asked for.
    pub fn is_critical(&self) -> bool {
        self.p == self.n as f64
    }

    /// `C_{n,p} = c (p-2)(p+n-2)/(p-1)`, the prefactor of the sign identity.
    pub fn big_c(&self) -> f64 {
        let n = self.n_f64();
        self.c * (self.p - 2.0) * (self.p + n - 2.0) / (self.p - 1.0)
    }

    /// `(p+n-2)/(p-1)`, the distance exponent of the sign identity.
    pub(crate) fn sign_exponent(&self) -> f64 {
        (self.p + self.n_f64() - 2.0) / (self.p - 1.0)
    }

    /// True when the fundamental solution tends to `+∞` at its pole.
    pub fn singular_at_pole(&self) -> bool {
        self.p > 1.0 && self.p < self.n_f64()
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                found: len,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid() {
        assert!(Params::new(1.0, 3).is_err());
        assert!(Params::new(3.0, 0).is_err());
        assert!(Params::with_normalization(3.0, 2, 0.0).is_err());
        assert!(Params::new(f64::NAN, 2).is_err());
    }

    #[test]
    fn big_c_tracks_inputs() {
        let p = Params::with_normalization(3.0, 2, 2.0).unwrap();
        assert_eq!(p.big_c(), 2.0 * 1.0 * 3.0 / 2.0);
        assert_eq!(Params::new(2.0, 5).unwrap().big_c(), 0.0);
    }
}
