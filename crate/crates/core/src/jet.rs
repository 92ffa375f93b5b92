//! Truncated bivariate Taylor arithmetic ("jets") in the two phase-space
//! variables (x, ξ).
//!
//! A [`Jet`] stores the Taylor coefficients of a function around a base point
//! up to a rectangular truncation order, so one evaluation of a composite
//! expression yields every mixed partial derivative up to that order at once.
//! All symbol combinators chain their derivative suppliers through this type,
//! which keeps high-order derivatives exact to roundoff instead of stacking
//! finite-difference noise.

use num_complex::Complex64;

/// Taylor coefficients c[i][j] = ∂_x^i ∂_ξ^j f / (i! j!) around a base point,
/// truncated rectangularly at orders (nx, nxi).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    nx: usize,
    nxi: usize,
    c: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Jet {
    /// Jet of the constant function `v`.
    pub fn constant(v: Complex64, nx: usize, nxi: usize) -> Self {
        let mut j = Self::zero(nx, nxi);
        j.c[0] = v;
        j
    }

    /// Jet of the zero function.
    pub fn zero(nx: usize, nxi: usize) -> Self {
        Jet { nx, nxi, c: vec![ZERO; (nx + 1) * (nxi + 1)] }
    }

    /// Jet of the coordinate function x at base point x0.
    pub fn var_x(x0: f64, nx: usize, nxi: usize) -> Self {
        let mut j = Self::constant(Complex64::new(x0, 0.0), nx, nxi);
        if nx >= 1 {
            j.c[j.idx(1, 0)] = ONE;
        }
        j
    }

    /// Jet of the coordinate function ξ at base point xi0.
    pub fn var_xi(xi0: f64, nx: usize, nxi: usize) -> Self {
        let mut j = Self::constant(Complex64::new(xi0, 0.0), nx, nxi);
        if nxi >= 1 {
            j.c[j.idx(0, 1)] = ONE;
        }
        j
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.nxi + 1) + j
    }

    /// Truncation order in x.
    pub fn order_x(&self) -> usize {
        self.nx
    }

    /// Truncation order in ξ.
    pub fn order_xi(&self) -> usize {
        self.nxi
    }

    /// Value of the function at the base point.
    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// Raw Taylor coefficient of (x−x0)^i (ξ−ξ0)^j.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.c[self.idx(i, j)]
    }

    /// The mixed partial derivative ∂_x^i ∂_ξ^j f at the base point.
    pub fn partial(&self, i: usize, j: usize) -> Complex64 {
        assert!(i <= self.nx && j <= self.nxi, "partial ({i},{j}) beyond truncation ({},{})", self.nx, self.nxi);
        self.c[self.idx(i, j)] * (factorial(i) * factorial(j))
    }

    /// Jet of ∂_x^a ∂_ξ^b f, truncated at the correspondingly reduced orders.
    pub fn derivative(&self, a: usize, b: usize) -> Jet {
        assert!(a <= self.nx && b <= self.nxi);
        let nx = self.nx - a;
        let nxi = self.nxi - b;
        let mut out = Jet::zero(nx, nxi);
        for i in 0..=nx {
            for j in 0..=nxi {
                let num = binom_ff(i + a, a) * factorial(a) * binom_ff(j + b, b) * factorial(b);
                out.c[out.idx(i, j)] = self.c[self.idx(i + a, j + b)] * num;
            }
        }
        out
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            self.nx == other.nx && self.nxi == other.nxi,
            "jet truncation mismatch: ({},{}) vs ({},{})",
            self.nx,
            self.nxi,
            other.nx,
            other.nxi
        );
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a -= b;
        }
        out
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a = -*a;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Truncated product of two jets around the same base point.
    pub fn mul(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut out = Jet::zero(self.nx, self.nxi);
        for i1 in 0..=self.nx {
            for j1 in 0..=self.nxi {
                let a = self.c[self.idx(i1, j1)];
                if a == ZERO {
                    continue;
                }
                for i2 in 0..=(self.nx - i1) {
                    for j2 in 0..=(self.nxi - j1) {
                        let k = out.idx(i1 + i2, j1 + j2);
                        out.c[k] += a * other.c[other.idx(i2, j2)];
                    }
                }
            }
        }
        out
    }

    /// Compose a univariate analytic function onto this jet.
    ///
    /// `series[n]` must hold f^{(n)}(u0)/n! where u0 is this jet's value; the
    /// slice must have at least nx+nxi+1 entries. Horner evaluation in the
    /// deviation δ = self − u0, which is nilpotent at order nx+nxi+1.
    pub fn apply_series(&self, series: &[Complex64]) -> Jet {
        let deg = self.nx + self.nxi;
        assert!(series.len() > deg, "series too short: need {} coefficients", deg + 1);
        let mut delta = self.clone();
        delta.c[0] = ZERO;
        let mut out = Jet::constant(series[deg], self.nx, self.nxi);
        for n in (0..deg).rev() {
            out = out.mul(&delta);
            out.c[0] += series[n];
        }
        out
    }

    /// Multiplicative inverse 1/f.
    pub fn recip(&self) -> Jet {
        let u0 = self.value();
        let deg = self.nx + self.nxi;
        let mut series = Vec::with_capacity(deg + 1);
        let inv = ONE / u0;
        let mut cur = inv;
        for _ in 0..=deg {
            series.push(cur);
            cur *= -inv;
        }
        self.apply_series(&series)
    }

    /// Principal-branch complex power f^w.
    pub fn powc(&self, w: Complex64) -> Jet {
        let u0 = self.value();
        let deg = self.nx + self.nxi;
        let mut series = Vec::with_capacity(deg + 1);
        // f^{(n)}(u0)/n! = u0^{w-n} * w(w-1)...(w-n+1)/n!
        let mut falling = ONE;
        for n in 0..=deg {
            let nf = n as f64;
            if n > 0 {
                falling *= w - Complex64::new(nf - 1.0, 0.0);
            }
            series.push(u0.powc(w - Complex64::new(nf, 0.0)) * falling / factorial(n));
        }
        self.apply_series(&series)
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Jet {
        self.powc(Complex64::new(0.5, 0.0))
    }

    pub fn exp(&self) -> Jet {
        let deg = self.nx + self.nxi;
        let e0 = self.value().exp();
        let series: Vec<_> = (0..=deg).map(|n| e0 / factorial(n)).collect();
        self.apply_series(&series)
    }

    /// Principal-branch natural logarithm.
    pub fn ln(&self) -> Jet {
        let u0 = self.value();
        let deg = self.nx + self.nxi;
        let mut series = Vec::with_capacity(deg + 1);
        series.push(u0.ln());
        let inv = ONE / u0;
        let mut p = inv;
        for n in 1..=deg {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            series.push(p * Complex64::new(sign / n as f64, 0.0));
            p *= inv;
        }
        self.apply_series(&series)
    }

    pub fn sin(&self) -> Jet {
        let deg = self.nx + self.nxi;
        let (s0, c0) = (self.value().sin(), self.value().cos());
        let series: Vec<_> = (0..=deg)
            .map(|n| {
                let d = match n % 4 {
                    0 => s0,
                    1 => c0,
                    2 => -s0,
                    _ => -c0,
                };
                d / factorial(n)
            })
            .collect();
        self.apply_series(&series)
    }

    pub fn cos(&self) -> Jet {
        let deg = self.nx + self.nxi;
        let (s0, c0) = (self.value().sin(), self.value().cos());
        let series: Vec<_> = (0..=deg)
            .map(|n| {
                let d = match n % 4 {
                    0 => c0,
                    1 => -s0,
                    2 => -c0,
                    _ => s0,
                };
                d / factorial(n)
            })
            .collect();
        self.apply_series(&series)
    }

    /// True if any coefficient is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binom_ff(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// ⟨ξ⟩(2+sin x) built on jets; closed-form partials for comparison.
    fn sample_jet(x: f64, xi: f64, nx: usize, nxi: usize) -> Jet {
        let jx = Jet::var_x(x, nx, nxi);
        let jxi = Jet::var_xi(xi, nx, nxi);
        let bracket = jxi.mul(&jxi).add(&Jet::constant(ONE, nx, nxi)).sqrt();
        let amp = jx.sin().add(&Jet::constant(c(2.0, 0.0), nx, nxi));
        bracket.mul(&amp)
    }

    #[test]
    fn partials_match_closed_forms() {
        let (x, xi) = (0.7, 1.3);
        let j = sample_jet(x, xi, 2, 2);
        let br = (1.0 + xi * xi).sqrt();
        assert_abs_diff_eq!(j.partial(0, 0).re, br * (2.0 + x.sin()), epsilon = 1e-12);
        assert_abs_diff_eq!(j.partial(1, 0).re, br * x.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(j.partial(0, 1).re, xi / br * (2.0 + x.sin()), epsilon = 1e-12);
        // ∂_ξ² ⟨ξ⟩ = 1/⟨ξ⟩³
        assert_abs_diff_eq!(j.partial(0, 2).re, (2.0 + x.sin()) / (br * br * br), epsilon = 1e-12);
        // mixed
        assert_abs_diff_eq!(j.partial(1, 1).re, x.cos() * xi / br, epsilon = 1e-12);
    }

    #[test]
    fn recip_is_inverse() {
        let j = sample_jet(-1.1, 0.4, 3, 3);
        let prod = j.mul(&j.recip());
        for i in 0..=3 {
            for k in 0..=3 {
                let expect = if i == 0 && k == 0 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod.coeff(i, k).re, expect, epsilon = 1e-13);
                assert_abs_diff_eq!(prod.coeff(i, k).im, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ln_exp_roundtrip() {
        let j = sample_jet(0.3, -2.0, 2, 3);
        let back = j.ln().exp();
        for i in 0..=2 {
            for k in 0..=3 {
                assert_abs_diff_eq!(back.coeff(i, k).re, j.coeff(i, k).re, epsilon = 1e-12);
                assert_abs_diff_eq!(back.coeff(i, k).im, j.coeff(i, k).im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn power_group_law() {
        let j = sample_jet(1.9, 0.8, 2, 2);
        let z = c(-0.5, 0.7);
        let w = c(0.3, -0.2);
        let lhs = j.powc(z).mul(&j.powc(w));
        let rhs = j.powc(z + w);
        for i in 0..=2 {
            for k in 0..=2 {
                assert_abs_diff_eq!(lhs.coeff(i, k).re, rhs.coeff(i, k).re, epsilon = 1e-12);
                assert_abs_diff_eq!(lhs.coeff(i, k).im, rhs.coeff(i, k).im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn trig_identity() {
        let j = Jet::var_x(0.33, 3, 1);
        let one = j.sin().mul(&j.sin()).add(&j.cos().mul(&j.cos()));
        assert_abs_diff_eq!(one.coeff(0, 0).re, 1.0, epsilon = 1e-14);
        for i in 1..=3 {
            assert_abs_diff_eq!(one.coeff(i, 0).re, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_jet_consistent_with_partials() {
        let j = sample_jet(0.2, 1.7, 3, 3);
        let dj = j.derivative(1, 2);
        assert_abs_diff_eq!(dj.value().re, j.partial(1, 2).re, epsilon = 1e-12);
        assert_abs_diff_eq!(dj.partial(1, 0).re, j.partial(2, 2).re, epsilon = 1e-11);
        assert_abs_diff_eq!(dj.partial(0, 1).re, j.partial(1, 3).re, epsilon = 1e-11);
    }
}
