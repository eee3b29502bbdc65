//! Dimension-indexed radial kernels and Green functions of concentric
//! discs with pole at the origin.
//!
//! The kernel is `h(t) = log t` in complex dimension 1 and
//! `h(t) = -t^(2-2n)` for `n > 1`; it is strictly increasing on `t > 0`
//! and tends to `-inf` at the pole. Green functions here are the closed
//! forms for discs centered at the origin, extended by zero outside (the
//! zero-extension stays subharmonic off the pole).

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Radial kernel indexed by the complex dimension `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    n: u32,
}

impl Kernel {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("kernel dimension n >= 1 violated"));
        }
        Ok(Kernel { n })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    /// `h(t)`: `log t` for n = 1, `-t^(2-2n)` for n > 1.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::invalid("kernel argument t > 0 violated (pole)"));
        }
        Ok(if self.n == 1 {
            t.ln()
        } else {
            -t.powi(2 - 2 * self.n as i32)
        })
    }
}

/// Green function of the disc `|z| < rho` with pole at 0, extended by
/// zero outside: `log(rho/|z|)` inside, `0` on `|z| >= rho`.
pub fn green_disc(rho: f64, z: Point) -> Result<f64> {
    let r = z.abs();
    if r == 0.0 {
        return Err(Error::invalid("green_disc evaluated at the pole z = 0"));
    }
    if rho <= 0.0 {
        return Err(Error::invalid("green_disc requires rho > 0"));
    }
    Ok(if r < rho { (rho / r).ln() } else { 0.0 })
}

/// Radial form of [`green_disc`].
pub fn green_disc_radial(rho: f64, r: f64) -> f64 {
    if r < rho {
        (rho / r).ln()
    } else {
        0.0
    }
}

/// Infimum of `g_U(., 0)` over the circle `|z| = r_circle` for
/// `U = {|z| < rho}`; closed form `log(rho / r_circle)`.
pub fn inf_green_on_circle(rho: f64, r_circle: f64) -> Result<f64> {
    if !(r_circle > 0.0 && r_circle < rho) {
        return Err(Error::invalid(
            "inf_green_on_circle requires 0 < r_circle < rho (g_U vanishes outside U)",
        ));
    }
    Ok((rho / r_circle).ln())
}
