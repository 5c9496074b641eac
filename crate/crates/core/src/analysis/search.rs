//! One-dimensional searches used by the optimizers.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation of `f` on `[lo, hi]` until the bracket is below `tol`.
/// Returns the best abscissa visited and its value.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Result of a sign-change bisection: `f(inside) ≥ threshold > f(outside)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub inside: f64,
    pub outside: f64,
    pub f_inside: f64,
    pub f_outside: f64,
}

/// Bisects between `inside` (where `accept` holds) and `outside` (where it fails)
/// until `|outside − inside| ≤ tol` or `stop` reports the midpoint as converged.
pub fn bisect_boundary<F, A>(
    mut f: F,
    accept: A,
    mut inside: (f64, f64),
    mut outside: (f64, f64),
    tol: f64,
    stop: impl Fn(f64) -> bool,
) -> Result<Boundary>
where
    F: FnMut(f64) -> Result<f64>,
    A: Fn(f64) -> bool,
{
    while (outside.0 - inside.0).abs() > tol {
        let mid = 0.5 * (inside.0 + outside.0);
        let fm = f(mid)?;
        if accept(fm) {
            inside = (mid, fm);
            if stop(fm) {
                break;
            }
        } else {
            outside = (mid, fm);
        }
    }
    Ok(Boundary {
        inside: inside.0,
        outside: outside.0,
        f_inside: inside.1,
        f_outside: outside.1,
    })
}
