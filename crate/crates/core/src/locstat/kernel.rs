//! Compactly supported symmetric kernels for time localization.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Symmetric kernel supported on `[-1, 1]` and integrating to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `0.75 (1 - v^2)`
    #[default]
    Epanechnikov,
    /// `1 - |v|`
    Triangular,
    /// `(15/16) (1 - v^2)^2`
    Quartic,
    /// `1/2`; flat over the whole support.
    Uniform,
}

impl Kernel {
    pub fn eval<T: Scalar>(self, v: T) -> T {
        let a = v.abs();
        if a > T::one() {
            return T::zero();
        }
        match self {
            Kernel::Epanechnikov => T::lit(0.75) * (T::one() - v * v),
            Kernel::Triangular => T::one() - a,
            Kernel::Quartic => {
                let s = T::one() - v * v;
                T::lit(15.0 / 16.0) * s * s
            }
            Kernel::Uniform => T::lit(0.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Triangular => "triangular",
            Kernel::Quartic => "quartic",
            Kernel::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "epanechnikov" => Some(Kernel::Epanechnikov),
            "triangular" => Some(Kernel::Triangular),
            "quartic" => Some(Kernel::Quartic),
            "uniform" => Some(Kernel::Uniform),
            _ => None,
        }
    }

    /// `int v^r K(v) dv` by adaptive quadrature.
    pub fn moment(self, r: u32) -> f64 {
        integrate(|v| v.powi(r as i32) * self.eval(v), -1.0, 1.0, 1e-12)
    }

    /// `kappa_2 = int K(v)^2 dv` by adaptive quadrature.
    pub fn kappa2(self) -> f64 {
        integrate(|v| self.eval(v).powi(2), -1.0, 1.0, 1e-12)
    }
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
///
/// The kernels here are polynomial on `[-1, 0]` and `[0, 1]`, so the
/// integral is split at the origin where the triangular kernel has a kink.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a < 0.0 && b > 0.0 {
        return integrate_piece(&f, a, 0.0, tol / 2.0) + integrate_piece(&f, 0.0, b, tol / 2.0);
    }
    integrate_piece(&f, a, b, tol)
}

fn integrate_piece(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        left + right + diff / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Kernel; 4] = [Kernel::Epanechnikov, Kernel::Triangular, Kernel::Quartic, Kernel::Uniform];

    #[test]
    fn kernels_are_densities_on_the_unit_interval() {
        for k in ALL {
            assert!((k.moment(0) - 1.0).abs() <= 1e-10, "{k:?}");
            assert!(k.moment(1).abs() <= 1e-12, "{k:?}");
            assert!(k.moment(3).abs() <= 1e-12, "{k:?}");
            assert_eq!(k.eval(1.5f64), 0.0);
            assert_eq!(k.eval(-1.0001f64), 0.0);
            assert_eq!(k.eval(0.3f64), k.eval(-0.3f64));
        }
    }

    #[test]
    fn epanechnikov_closed_forms() {
        let k = Kernel::Epanechnikov;
        assert!((k.kappa2() - 0.6).abs() < 1e-10);
        assert!((k.moment(2) - 0.2).abs() < 1e-10);
    }

    #[test]
    fn other_closed_forms() {
        assert!((Kernel::Triangular.kappa2() - 2.0 / 3.0).abs() < 1e-10);
        assert!((Kernel::Triangular.moment(2) - 1.0 / 6.0).abs() < 1e-10);
        assert!((Kernel::Quartic.kappa2() - 5.0 / 7.0).abs() < 1e-10);
        assert!((Kernel::Quartic.moment(2) - 1.0 / 7.0).abs() < 1e-10);
        assert!((Kernel::Uniform.kappa2() - 0.5).abs() < 1e-10);
    }
}
