//! Phase-space symbols a(x, ξ) with declared order, derivative suppliers,
//! seminorm estimation, ellipticity tests, and the combinators used by the
//! rest of the crate: scalar composition, pointwise power families, and
//! excision-based asymptotic summation.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CalcError, Result};
use crate::jet::Jet;

/// Pointwise evaluation closure.
pub type ValueFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
/// Analytic derivative supplier: (α, β) ↦ evaluable for ∂_x^α ∂_ξ^β a.
pub type DerivSupplier = Arc<dyn Fn(usize, usize) -> ValueFn + Send + Sync>;
/// Jet supplier: all mixed partials up to a rectangular truncation in one call.
pub type JetFn = Arc<dyn Fn(f64, f64, usize, usize) -> Jet + Send + Sync>;

/// ⟨ξ⟩ = (1 + ξ²)^{1/2}, the Japanese bracket used by every seminorm weight.
pub fn angle(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c_re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

// ---------------------------------------------------------------------------
// Excision cutoff
// ---------------------------------------------------------------------------

fn ramp(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// Smooth monotone step: 0 for s ≤ 0, 1 for s ≥ 1, C^∞-flat at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let a = ramp(s);
    let b = ramp(1.0 - s);
    if a + b == 0.0 {
        if s >= 0.5 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}

/// Excision cutoff χ: identically 0 on [−1, 1], identically 1 outside [−2, 2],
/// smooth and monotone in |ξ| in between (exp(−1/x) mollifier construction).
pub fn cutoff_chi(xi: f64) -> f64 {
    smoothstep(xi.abs() - 1.0)
}

/// Jet of χ(ξ/t) at a base point, matching [`cutoff_chi`] exactly.
pub fn cutoff_chi_jet(xi0: f64, t: f64, nx: usize, nxi: usize) -> Jet {
    let u0 = xi0 / t;
    if u0.abs() <= 1.0 {
        return Jet::zero(nx, nxi);
    }
    if u0.abs() >= 2.0 {
        return Jet::constant(C_ONE, nx, nxi);
    }
    // strictly inside the transition ring: |u| is smooth (sign fixed)
    let sign = u0.signum();
    let u = Jet::var_xi(xi0, nx, nxi).scale(c_re(sign / t));
    let s = u.sub(&Jet::constant(C_ONE, nx, nxi)); // s = |ξ|/t − 1 ∈ (0,1)
    let one_minus_s = Jet::constant(C_ONE, nx, nxi).sub(&s);
    let a = s.recip().neg().exp();
    let b = one_minus_s.recip().neg().exp();
    a.mul(&a.add(&b).recip())
}

// ---------------------------------------------------------------------------
// Symbol
// ---------------------------------------------------------------------------

/// One homogeneous component of a classical expansion.
#[derive(Clone)]
pub struct HomogTerm {
    /// Homogeneity degree of this component.
    pub degree: Complex64,
    /// Evaluation of the component (meaningful away from ξ = 0).
    pub eval: ValueFn,
}

#[derive(Clone)]
enum DerivBackend {
    /// Exact derivatives through truncated Taylor arithmetic.
    Jets(JetFn),
    /// Caller-supplied analytic derivative table.
    Table(DerivSupplier),
    /// Central finite differences with one Richardson step.
    FiniteDifference,
}

/// An evaluable phase-space function with a declared complex order,
/// optional analytic derivatives, and an optional homogeneous expansion.
#[derive(Clone)]
pub struct Symbol {
    order: Complex64,
    eval: ValueFn,
    backend: DerivBackend,
    homog: Option<Arc<Vec<HomogTerm>>>,
}

/// Base finite-difference step (x direction; the ξ step scales with 1+|ξ|).
pub const FD_BASE_STEP: f64 = 1e-4;

impl Symbol {
    /// General constructor: order, evaluation, optional derivative supplier,
    /// optional homogeneous expansion terms.
    pub fn new(
        order: Complex64,
        eval: ValueFn,
        deriv: Option<DerivSupplier>,
        homog_terms: Option<Vec<HomogTerm>>,
    ) -> Symbol {
        Symbol {
            order,
            eval,
            backend: match deriv {
                Some(d) => DerivBackend::Table(d),
                None => DerivBackend::FiniteDifference,
            },
            homog: homog_terms.map(|h| Arc::new(h)),
        }
    }

    /// Constructor from a jet supplier; evaluation falls out of the jets.
    pub fn from_jets(order: Complex64, jet: JetFn) -> Symbol {
        let j = jet.clone();
        Symbol {
            order,
            eval: Arc::new(move |x, xi| j(x, xi, 0, 0).value()),
            backend: DerivBackend::Jets(jet),
            homog: None,
        }
    }

    /// Same, with a separate fast value closure.
    pub fn from_jets_with_eval(order: Complex64, eval: ValueFn, jet: JetFn) -> Symbol {
        Symbol { order, eval, backend: DerivBackend::Jets(jet), homog: None }
    }

    /// Attach homogeneous expansion terms, marking the symbol classical.
    pub fn with_homog(mut self, terms: Vec<HomogTerm>) -> Symbol {
        self.homog = Some(Arc::new(terms));
        self
    }

    /// Declared complex order μ.
    pub fn order(&self) -> Complex64 {
        self.order
    }

    /// Re μ, the growth order used in seminorm weights.
    pub fn real_order(&self) -> f64 {
        self.order.re
    }

    /// True when a homogeneous expansion is attached.
    pub fn is_classical(&self) -> bool {
        self.homog.is_some()
    }

    /// Homogeneous expansion terms, if any.
    pub fn homog_terms(&self) -> Option<&[HomogTerm]> {
        self.homog.as_deref().map(|v| v.as_slice())
    }

    /// True when derivatives come from an analytic source (jets or table).
    pub fn has_analytic_derivs(&self) -> bool {
        !matches!(self.backend, DerivBackend::FiniteDifference)
    }

    /// Pointwise value a(x, ξ).
    pub fn value(&self, x: f64, xi: f64) -> Complex64 {
        (self.eval)(x, xi)
    }

    /// Evaluation closure (shared).
    pub fn eval_fn(&self) -> ValueFn {
        self.eval.clone()
    }

    /// All mixed partials up to (nx, nxi) at one point.
    ///
    /// Jet-backed symbols produce them exactly; table- and difference-backed
    /// symbols assemble the jet entry by entry.
    pub fn jet(&self, x: f64, xi: f64, nx: usize, nxi: usize) -> Jet {
        match &self.backend {
            DerivBackend::Jets(f) => f(x, xi, nx, nxi),
            DerivBackend::Table(_) | DerivBackend::FiniteDifference => {
                let mut out = Jet::zero(nx, nxi);
                for i in 0..=nx {
                    for j in 0..=nxi {
                        let d = self.partial(i, j, x, xi);
                        let fact: f64 = (1..=i).map(|k| k as f64).product::<f64>()
                            * (1..=j).map(|k| k as f64).product::<f64>();
                        out = out.with_coeff(i, j, d / fact);
                    }
                }
                out
            }
        }
    }

    /// ∂_x^α ∂_ξ^β a at a point.
    pub fn partial(&self, alpha: usize, beta: usize, x: f64, xi: f64) -> Complex64 {
        match &self.backend {
            DerivBackend::Jets(f) => f(x, xi, alpha, beta).partial(alpha, beta),
            DerivBackend::Table(t) => t(alpha, beta)(x, xi),
            DerivBackend::FiniteDifference => fd_partial(&self.eval, alpha, beta, x, xi),
        }
    }

    /// Derivative supplier view: (α, β) ↦ evaluable.
    pub fn deriv(&self, alpha: usize, beta: usize) -> ValueFn {
        match &self.backend {
            DerivBackend::Table(t) => t(alpha, beta),
            _ => {
                let s = self.clone();
                Arc::new(move |x, xi| s.partial(alpha, beta, x, xi))
            }
        }
    }

    // -- combinators --------------------------------------------------------

    /// Sum; declared order is the max of the two real orders.
    pub fn add(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        let order = if self.order.re >= other.order.re { self.order } else { other.order };
        Symbol {
            order,
            eval: Arc::new(move |x, xi| a.value(x, xi) + b.value(x, xi)),
            backend: DerivBackend::Jets(Arc::new(move |x, xi, nx, nxi| {
                a2.jet(x, xi, nx, nxi).add(&b2.jet(x, xi, nx, nxi))
            })),
            homog: None,
        }
    }

    /// Pointwise product; orders add.
    pub fn mul(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        Symbol {
            order: self.order + other.order,
            eval: Arc::new(move |x, xi| a.value(x, xi) * b.value(x, xi)),
            backend: DerivBackend::Jets(Arc::new(move |x, xi, nx, nxi| {
                a2.jet(x, xi, nx, nxi).mul(&b2.jet(x, xi, nx, nxi))
            })),
            homog: None,
        }
    }

    /// Scalar multiple; order unchanged.
    pub fn scale(&self, s: Complex64) -> Symbol {
        let a = self.clone();
        let a2 = self.clone();
        Symbol {
            order: self.order,
            eval: Arc::new(move |x, xi| s * a.value(x, xi)),
            backend: DerivBackend::Jets(Arc::new(move |x, xi, nx, nxi| {
                a2.jet(x, xi, nx, nxi).scale(s)
            })),
            homog: None,
        }
    }

    /// Add a complex constant; order is max(order, 0).
    pub fn add_constant(&self, s: Complex64) -> Symbol {
        let a = self.clone();
        let a2 = self.clone();
        let order = if self.order.re >= 0.0 { self.order } else { Complex64::new(0.0, 0.0) };
        Symbol {
            order,
            eval: Arc::new(move |x, xi| s + a.value(x, xi)),
            backend: DerivBackend::Jets(Arc::new(move |x, xi, nx, nxi| {
                a2.jet(x, xi, nx, nxi).add(&Jet::constant(s, nx, nxi))
            })),
            homog: None,
        }
    }

    /// Complex conjugate symbol; order gets a conjugated imaginary part.
    pub fn conj(&self) -> Symbol {
        let a = self.clone();
        let a2 = self.clone();
        Symbol {
            order: self.order.conj(),
            eval: Arc::new(move |x, xi| a.value(x, xi).conj()),
            backend: DerivBackend::Jets(Arc::new(move |x, xi, nx, nxi| {
                a2.jet(x, xi, nx, nxi).conj_coeffs()
            })),
            homog: None,
        }
    }

    /// The constant symbol of order 0.
    pub fn constant(v: Complex64) -> Symbol {
        Symbol::from_jets_with_eval(
            Complex64::new(0.0, 0.0),
            Arc::new(move |_, _| v),
            Arc::new(move |_, _, nx, nxi| Jet::constant(v, nx, nxi)),
        )
    }

    /// The coordinate symbol ξ (order 1).
    pub fn coordinate_xi() -> Symbol {
        Symbol::from_jets_with_eval(
            C_ONE,
            Arc::new(|_, xi| c_re(xi)),
            Arc::new(|_, xi, nx, nxi| Jet::var_xi(xi, nx, nxi)),
        )
    }

    /// The coordinate symbol x (order 0 on the periodic cell).
    pub fn coordinate_x() -> Symbol {
        Symbol::from_jets_with_eval(
            Complex64::new(0.0, 0.0),
            Arc::new(|x, _| c_re(x)),
            Arc::new(|x, _, nx, nxi| Jet::var_x(x, nx, nxi)),
        )
    }

    /// ⟨ξ⟩^m with the leading homogeneous term |ξ|^m attached.
    pub fn bracket_power(m: f64) -> Symbol {
        let order = c_re(m);
        let sym = Symbol::from_jets_with_eval(
            order,
            Arc::new(move |_, xi| c_re(angle(xi).powf(m))),
            Arc::new(move |_, xi, nx, nxi| {
                let j = Jet::var_xi(xi, nx, nxi);
                j.mul(&j).add(&Jet::constant(C_ONE, nx, nxi)).powc(c_re(m / 2.0))
            }),
        );
        sym.with_homog(vec![HomogTerm {
            degree: order,
            eval: Arc::new(move |_, xi| c_re(xi.abs().powf(m))),
        }])
    }

    /// A real trigonometric multiplier in x alone: amp0 + amp·sin(freq·x + phase).
    pub fn trig_x(amp0: f64, amp: f64, freq: f64, phase: f64) -> Symbol {
        Symbol::from_jets_with_eval(
            Complex64::new(0.0, 0.0),
            Arc::new(move |x, _| c_re(amp0 + amp * (freq * x + phase).sin())),
            Arc::new(move |x, _, nx, nxi| {
                Jet::var_x(x, nx, nxi)
                    .scale(c_re(freq))
                    .add(&Jet::constant(c_re(phase), nx, nxi))
                    .sin()
                    .scale(c_re(amp))
                    .add(&Jet::constant(c_re(amp0), nx, nxi))
            }),
        )
    }
}

/// Smooth reference weight r: r ≥ 1 everywhere, r(ξ) = |ξ| for |ξ| ≥ 2,
/// classical of order 1 with leading homogeneous term |ξ|.
pub fn r_symbol() -> Symbol {
    let eval: ValueFn = Arc::new(|_x, xi| {
        let chi = cutoff_chi(xi);
        c_re(chi * xi.abs() + (1.0 - chi))
    });
    let jet: JetFn = Arc::new(|_x, xi, nx, nxi| {
        if xi.abs() <= 1.0 {
            return Jet::constant(C_ONE, nx, nxi);
        }
        let chi = cutoff_chi_jet(xi, 1.0, nx, nxi);
        // |ξ| is smooth here (|ξ| > 1)
        let abs_xi = Jet::var_xi(xi, nx, nxi).scale(c_re(xi.signum()));
        let one = Jet::constant(C_ONE, nx, nxi);
        chi.mul(&abs_xi).add(&one.sub(&chi))
    });
    Symbol::from_jets_with_eval(C_ONE, eval, jet).with_homog(vec![HomogTerm {
        degree: C_ONE,
        eval: Arc::new(|_x, xi| c_re(xi.abs())),
    }])
}

// ---------------------------------------------------------------------------
// Finite differences (fallback when no analytic derivatives exist)
// ---------------------------------------------------------------------------

/// Compact central stencil (offset, weight) pairs for the n-th derivative,
/// unit step. Orders 0..=3 are hardcoded; beyond that first-derivative
/// stencils are convolved.
fn stencil(n: usize) -> Vec<(i64, f64)> {
    match n {
        0 => vec![(0, 1.0)],
        1 => vec![(-1, -0.5), (1, 0.5)],
        2 => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => {
            let prev = stencil(n - 1);
            let d1 = stencil(1);
            let mut acc: std::collections::BTreeMap<i64, f64> = Default::default();
            for (o1, w1) in &prev {
                for (o2, w2) in &d1 {
                    *acc.entry(o1 + o2).or_insert(0.0) += w1 * w2;
                }
            }
            acc.into_iter().filter(|(_, w)| w.abs() > 1e-300).collect()
        }
    }
}

fn fd_once(eval: &ValueFn, alpha: usize, beta: usize, x: f64, xi: f64, hx: f64, hxi: f64) -> Complex64 {
    let sx = stencil(alpha);
    let sxi = stencil(beta);
    let mut acc = Complex64::new(0.0, 0.0);
    for (ox, wx) in &sx {
        for (oxi, wxi) in &sxi {
            acc += eval(x + *ox as f64 * hx, xi + *oxi as f64 * hxi) * (wx * wxi);
        }
    }
    acc / (hx.powi(alpha as i32) * hxi.powi(beta as i32))
}

/// Central difference for ∂_x^α ∂_ξ^β with one Richardson extrapolation step.
/// Step: 1e−4 in x, 1e−4·(1+|ξ|) in ξ.
pub fn fd_partial(eval: &ValueFn, alpha: usize, beta: usize, x: f64, xi: f64) -> Complex64 {
    let hx = FD_BASE_STEP;
    let hxi = FD_BASE_STEP * (1.0 + xi.abs());
    if alpha == 0 && beta == 0 {
        return eval(x, xi);
    }
    let d1 = fd_once(eval, alpha, beta, x, xi, hx, hxi);
    let d2 = fd_once(eval, alpha, beta, x, xi, 2.0 * hx, 2.0 * hxi);
    (d1 * 4.0 - d2) / 3.0
}

// ---------------------------------------------------------------------------
// Sample regions and seminorm reports
// ---------------------------------------------------------------------------

/// Rectangular phase-space sampling lattice (inclusive endpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub x_samples: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_samples: usize,
}

impl SampleRegion {
    pub fn new(x_min: f64, x_max: f64, x_samples: usize, xi_min: f64, xi_max: f64, xi_samples: usize) -> Self {
        assert!(x_samples >= 2 && xi_samples >= 2 && x_max > x_min && xi_max > xi_min);
        SampleRegion { x_min, x_max, x_samples, xi_min, xi_max, xi_samples }
    }

    /// Default estimation region for a grid of period `period` and frequency
    /// cutoff `big_xi`: x over the full period, ξ ∈ [−Ξ, Ξ].
    pub fn standard(period: f64, big_xi: f64) -> Self {
        SampleRegion::new(-period / 2.0, period / 2.0, 49, -big_xi, big_xi, 97)
    }

    pub fn x_points(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.x_samples)
    }

    pub fn xi_points(&self) -> Vec<f64> {
        linspace(self.xi_min, self.xi_max, self.xi_samples)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Estimated seminorms p_{α,β}(a) = sup |∂_x^α ∂_ξ^β a|·⟨ξ⟩^{|β|−m} over a
/// region, for all (α, β) up to a rectangular maximum.
#[derive(Debug, Clone)]
pub struct SeminormReport {
    /// Order m the weights were computed against.
    pub order: f64,
    /// (α, β) ↦ estimated seminorm.
    pub entries: std::collections::BTreeMap<(usize, usize), f64>,
    /// The sampled region.
    pub region: SampleRegion,
    /// Finite-difference step when no analytic derivatives were available.
    pub fd_step: Option<f64>,
}

impl SeminormReport {
    pub fn get(&self, alpha: usize, beta: usize) -> f64 {
        self.entries[&(alpha, beta)]
    }

    /// Largest entry in the report.
    pub fn max_entry(&self) -> f64 {
        self.entries.values().cloned().fold(0.0, f64::max)
    }
}

/// Estimate seminorms of `a` at its own declared order over `region`.
pub fn estimate_seminorms(a: &Symbol, max_order: (usize, usize), region: &SampleRegion) -> Result<SeminormReport> {
    estimate_seminorms_at_order(a, a.real_order(), max_order, region)
}

/// Estimate seminorms of `a` against an arbitrary reference order.
pub fn estimate_seminorms_at_order(
    a: &Symbol,
    order: f64,
    max_order: (usize, usize),
    region: &SampleRegion,
) -> Result<SeminormReport> {
    let (amax, bmax) = max_order;
    let xs = region.x_points();
    let xis = region.xi_points();
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| xis.iter().map(move |&xi| (x, xi))).collect();

    let per_point: Result<Vec<Vec<f64>>> = points
        .par_iter()
        .map(|&(x, xi)| {
            let jet = a.jet(x, xi, amax, bmax);
            if jet.has_non_finite() {
                return Err(CalcError::NonFiniteValue { x, xi });
            }
            let mut vals = Vec::with_capacity((amax + 1) * (bmax + 1));
            for al in 0..=amax {
                for be in 0..=bmax {
                    let w = angle(xi).powf(be as f64 - order);
                    vals.push(jet.partial(al, be).norm() * w);
                }
            }
            Ok(vals)
        })
        .collect();
    let per_point = per_point?;

    let mut entries = std::collections::BTreeMap::new();
    let mut idx = 0;
    for al in 0..=amax {
        for be in 0..=bmax {
            let m = per_point.iter().map(|v| v[idx]).fold(0.0, f64::max);
            entries.insert((al, be), m);
            idx += 1;
        }
    }
    Ok(SeminormReport {
        order,
        entries,
        region: region.clone(),
        fd_step: if a.has_analytic_derivs() { None } else { Some(FD_BASE_STEP) },
    })
}

/// Ellipticity test: |a(x,ξ)| ≥ μ^{-1}·⟨ξ⟩^m on every sampled point with |ξ| ≥ μ.
pub fn is_elliptic(a: &Symbol, mu_param: f64, region: &SampleRegion) -> bool {
    assert!(mu_param > 0.0);
    let m = a.real_order();
    for x in region.x_points() {
        for xi in region.xi_points() {
            if xi.abs() < mu_param {
                continue;
            }
            if a.value(x, xi).norm() < angle(xi).powf(m) / mu_param {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Scalar functions and composition
// ---------------------------------------------------------------------------

/// Domain of a scalar function used for composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarDomain {
    /// All of ℝ.
    AllReals,
    /// The ray [min, ∞).
    Ray { min: f64 },
}

/// A scalar function f(t) with declared order, domain, and full Taylor data.
#[derive(Clone)]
pub struct ScalarSymbol {
    order: f64,
    domain: ScalarDomain,
    /// t0 ↦ Taylor coefficients f^{(n)}(t0)/n! for n = 0..=deg.
    series: Arc<dyn Fn(Complex64, usize) -> Vec<Complex64> + Send + Sync>,
}

impl ScalarSymbol {
    pub fn new(
        order: f64,
        domain: ScalarDomain,
        series: Arc<dyn Fn(Complex64, usize) -> Vec<Complex64> + Send + Sync>,
    ) -> Self {
        ScalarSymbol { order, domain, series }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn domain(&self) -> ScalarDomain {
        self.domain
    }

    pub fn value(&self, t: Complex64) -> Complex64 {
        (self.series)(t, 0)[0]
    }

    /// The identity t ↦ t (order 1, all reals).
    pub fn identity() -> Self {
        ScalarSymbol::new(
            1.0,
            ScalarDomain::AllReals,
            Arc::new(|t0, deg| {
                let mut v = vec![Complex64::new(0.0, 0.0); deg + 1];
                v[0] = t0;
                if deg >= 1 {
                    v[1] = C_ONE;
                }
                v
            }),
        )
    }

    /// t ↦ t^{-1} on [min, ∞) (order −1).
    pub fn reciprocal(min: f64) -> Self {
        ScalarSymbol::new(
            -1.0,
            ScalarDomain::Ray { min },
            Arc::new(|t0, deg| {
                let inv = C_ONE / t0;
                let mut v = Vec::with_capacity(deg + 1);
                let mut cur = inv;
                for _ in 0..=deg {
                    v.push(cur);
                    cur *= -inv;
                }
                v
            }),
        )
    }

    /// t ↦ log t on [min, ∞); every declared order ε > 0 is valid, the caller
    /// picks one.
    pub fn log(declared_order: f64, min: f64) -> Self {
        ScalarSymbol::new(
            declared_order,
            ScalarDomain::Ray { min },
            Arc::new(|t0, deg| {
                let mut v = Vec::with_capacity(deg + 1);
                v.push(t0.ln());
                let inv = C_ONE / t0;
                let mut p = inv;
                for n in 1..=deg {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    v.push(p * c_re(sign / n as f64));
                    p *= inv;
                }
                v
            }),
        )
    }

    /// t ↦ t^w (principal branch) on [min, ∞), declared order Re(w).
    pub fn power(w: Complex64, min: f64) -> Self {
        ScalarSymbol::new(
            w.re,
            ScalarDomain::Ray { min },
            Arc::new(move |t0, deg| {
                let mut v = Vec::with_capacity(deg + 1);
                let mut falling = C_ONE;
                for n in 0..=deg {
                    if n > 0 {
                        falling *= w - c_re(n as f64 - 1.0);
                    }
                    let fact: f64 = (1..=n).map(|k| k as f64).product();
                    v.push(t0.powc(w - c_re(n as f64)) * falling / fact);
                }
                v
            }),
        )
    }
}

/// Region used for domain validation when composing symbols.
pub fn validation_region() -> SampleRegion {
    SampleRegion::new(-8.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI, 33, -64.0, 64.0, 129)
}

/// f ∘ a with chained derivatives; declared order is m·k.
pub fn compose_scalar(f: &ScalarSymbol, a: &Symbol, mu_param: f64) -> Result<Symbol> {
    let region = validation_region();
    if f.order() < 0.0 && !is_elliptic(a, mu_param, &region) {
        return Err(CalcError::NotElliptic(format!("inner symbol fails the μ = {mu_param} lower bound")));
    }
    if let ScalarDomain::Ray { min } = f.domain() {
        for x in region.x_points() {
            for xi in region.xi_points() {
                let v = a.value(x, xi);
                if v.im.abs() > 1e-9 || v.re < min {
                    return Err(CalcError::DomainViolation(format!(
                        "inner symbol value {v} at ({x:.3}, {xi:.3}) leaves the ray [{min}, ∞)"
                    )));
                }
            }
        }
    }
    let order = a.order() * f.order();
    let (fa, aa) = (f.clone(), a.clone());
    let (fb, ab) = (f.clone(), a.clone());
    Ok(Symbol::from_jets_with_eval(
        order,
        Arc::new(move |x, xi| fa.value(aa.value(x, xi))),
        Arc::new(move |x, xi, nx, nxi| {
            let inner = ab.jet(x, xi, nx, nxi);
            let coeffs = (fb.series)(inner.value(), nx + nxi);
            inner.apply_series(&coeffs)
        }),
    ))
}

/// Pointwise power a^z for positive elliptic a; declared order μ·z.
pub fn power_family(a: &Symbol, z: Complex64) -> Result<Symbol> {
    let region = validation_region();
    for x in region.x_points() {
        for xi in region.xi_points() {
            let v = a.value(x, xi);
            if v.im.abs() > 1e-9 || v.re <= 0.0 {
                return Err(CalcError::DomainViolation(format!(
                    "power base must be positive; found {v} at ({x:.3}, {xi:.3})"
                )));
            }
        }
    }
    let order = a.order() * z;
    let (a1, a2) = (a.clone(), a.clone());
    let mut out = Symbol::from_jets_with_eval(
        order,
        Arc::new(move |x, xi| a1.value(x, xi).powc(z)),
        Arc::new(move |x, xi, nx, nxi| a2.jet(x, xi, nx, nxi).powc(z)),
    );
    if let Some(terms) = a.homog_terms() {
        if terms.len() == 1 {
            let lead = terms[0].eval.clone();
            let degree = terms[0].degree * z;
            out = out.with_homog(vec![HomogTerm {
                degree,
                eval: Arc::new(move |x, xi| lead(x, xi).powc(z)),
            }]);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Asymptotic (excision) summation
// ---------------------------------------------------------------------------

/// Σ_j χ(ξ/t_j)·a_j for terms of orders μ, μ−1, μ−2, …; thresholds grown so
/// that term j, measured one order above its own (where it must shrink as the
/// threshold grows), contributes at most 2^{−j}.
pub fn asymptotic_sum(terms: &[Symbol], thresholds: &[f64]) -> Result<Symbol> {
    if terms.is_empty() {
        return Ok(Symbol::constant(Complex64::new(0.0, 0.0)));
    }
    let mu = terms[0].order();
    for (j, t) in terms.iter().enumerate() {
        let expect = mu.re - j as f64;
        if (t.order().re - expect).abs() > 1e-9 {
            return Err(CalcError::OrderMismatch(format!(
                "term {j} has order {}, expected {expect}",
                t.order().re
            )));
        }
    }

    const T_START: f64 = 4.0;
    const T_CAP: f64 = (1 << 20) as f64;
    let mut ts = Vec::with_capacity(terms.len());
    for (j, term) in terms.iter().enumerate() {
        let mut t = thresholds.get(j).copied().unwrap_or(T_START).max(T_START);
        if j > 0 {
            let prev: f64 = ts[j - 1];
            t = t.max(prev);
            let target = 0.5f64.powi(j as i32);
            // measured one order above the term's own order, over a window
            // that sees past the cutoff shoulder
            loop {
                let cut = excise(term, t);
                let region = SampleRegion::new(-8.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI, 17, -4.0 * t, 4.0 * t, 65);
                let rep = estimate_seminorms_at_order(&cut, term.real_order() + 1.0, (j.min(3), j.min(3)), &region)?;
                if rep.max_entry() <= target || t >= T_CAP {
                    break;
                }
                t *= 2.0;
            }
        }
        ts.push(t);
    }

    let parts: Vec<Symbol> = terms.iter().zip(&ts).map(|(term, &t)| excise(term, t)).collect();
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = acc.add(p);
    }
    // order of the sum is the leading order
    let (e, b) = (acc.eval_fn(), acc);
    let jet_backend: JetFn = Arc::new(move |x, xi, nx, nxi| b.jet(x, xi, nx, nxi));
    Ok(Symbol::from_jets_with_eval(mu, e, jet_backend))
}

/// χ(ξ/t)·a — the excision of a symbol outside |ξ| ≥ t.
pub fn excise(a: &Symbol, t: f64) -> Symbol {
    let (a1, a2) = (a.clone(), a.clone());
    Symbol::from_jets_with_eval(
        a.order(),
        Arc::new(move |x, xi| a1.value(x, xi) * cutoff_chi(xi / t)),
        Arc::new(move |x, xi, nx, nxi| a2.jet(x, xi, nx, nxi).mul(&cutoff_chi_jet(xi, t, nx, nxi))),
    )
}

// ---------------------------------------------------------------------------
// Holomorphic families of symbols
// ---------------------------------------------------------------------------

/// A symbol family z ↦ a_z with a claimed z-derivative family.
#[derive(Clone)]
pub struct SymbolFamily {
    pub at: Arc<dyn Fn(Complex64) -> Symbol + Send + Sync>,
    pub derivative_at: Arc<dyn Fn(Complex64) -> Symbol + Send + Sync>,
}

impl SymbolFamily {
    /// The family z ↦ r^z with derivative r^z·log r.
    pub fn r_power() -> Self {
        let r = r_symbol();
        let r2 = r.clone();
        SymbolFamily {
            at: Arc::new(move |z| power_family(&r, z).expect("r is positive")),
            derivative_at: Arc::new(move |z| {
                let rz = power_family(&r2, z).expect("r is positive");
                let logr = compose_scalar(&ScalarSymbol::log(0.0, 0.9), &r2, 2.0).expect("r ≥ 1");
                rz.mul(&logr)
            }),
        }
    }

    /// A constant family (derivative zero).
    pub fn constant(sym: Symbol) -> Self {
        SymbolFamily {
            at: Arc::new(move |_| sym.clone()),
            derivative_at: Arc::new(|_| Symbol::constant(Complex64::new(0.0, 0.0))),
        }
    }
}

/// p_{0,0} seminorm of the difference-quotient defect at each |w| in `ws`
/// (max over the four axis directions), measured at the declared order of
/// the family at z0 plus `order_window`.
pub fn holo_defect_profile(
    family: &SymbolFamily,
    z0: Complex64,
    order_window: f64,
    ws: &[f64],
    region: &SampleRegion,
) -> Result<Vec<f64>> {
    let f0 = (family.at)(z0);
    let d0 = (family.derivative_at)(z0);
    let base_order = f0.real_order() + order_window;
    let mut out = Vec::with_capacity(ws.len());
    for &w in ws {
        let mut worst: f64 = 0.0;
        for dir in [c_re(1.0), Complex64::new(0.0, 1.0), c_re(-1.0), Complex64::new(0.0, -1.0)] {
            let step = dir * w;
            let fw = (family.at)(z0 + step);
            let defect = fw.sub_sym(&f0).scale(C_ONE / step).sub_sym(&d0);
            let rep = estimate_seminorms_at_order(&defect, base_order, (0, 0), region)?;
            worst = worst.max(rep.get(0, 0));
        }
        out.push(worst);
    }
    Ok(out)
}

/// First-order holomorphy certificate: sup over |w| ∈ {1e−2, 1e−3} of the
/// defect seminorm divided by |w|; finite values certify the O(|w|) regime.
pub fn holo_derivative_check(
    family: &SymbolFamily,
    z0: Complex64,
    order_window: f64,
    region: &SampleRegion,
) -> Result<f64> {
    let ws = [1e-2, 1e-3];
    let profile = holo_defect_profile(family, z0, order_window, &ws, region)?;
    Ok(profile.iter().zip(&ws).map(|(p, w)| p / w).fold(0.0, f64::max))
}

impl Symbol {
    /// Difference of symbols (same backend rules as [`Symbol::add`]).
    pub fn sub_sym(&self, other: &Symbol) -> Symbol {
        self.add(&other.scale(c_re(-1.0)))
    }
}
