//! Normal-coordinate charts, Christoffel symbols, and parallel transport
//! by numerical integration.
//!
//! A [`NormalChart`] maps a neighbourhood of a base point to `ℝᵈ` by taking
//! coefficients of the logarithm in the deterministic tangent basis; its
//! inverse follows the exponential.  [`ChristoffelField`] evaluates the
//! connection coefficients of that chart analytically (they vanish at the
//! origin by construction), and [`parallel_transport_ode`] integrates the
//! transport equations with a classical Runge–Kutta scheme.  The integrator
//! exists to cross-validate the closed-form transport formulas: its global
//! error is `O(h⁴)` in the step size, which tests confirm by Richardson
//! extrapolation.

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;

use super::{sphere, Basis, Manifold, Point, Tangent};
use crate::error::{Error, Result};

/// Truncation order of `dexp` operator series on Lie algebras.  The terms
/// carry `1/(k+1)!`, so this is far past double precision for the algebra
/// elements handled here.
const DEXP_TERMS: usize = 30;

/// Truncation order of the Bernoulli-series Christoffel evaluation on Lie
/// groups.  The series converges like `(‖ad_Z‖ / 2π)^k`; arguments stay
/// well inside the injectivity radius, where 44 terms reach round-off.
const BERNOULLI_TERMS: usize = 44;

/// Below this radius the sphere coefficient functions switch to series
/// expansions to avoid cancellation in `1 − sin²r/r²`.
const SPHERE_SERIES_RADIUS: f64 = 1e-3;

/// A normal-coordinate chart centred at a base point.
///
/// Coordinates of a point `q` are `x = c(log_p q)` where `c` takes
/// coefficients in the basis returned by [`Manifold::basis_at`]; the
/// inverse is `x ↦ exp_p(ĉ x)`.  On tangent bundles the retraction pair
/// plays the role of `exp`/`log`.
#[derive(Debug, Clone)]
pub struct NormalChart {
    manifold: Manifold,
    basis: Basis,
}

impl NormalChart {
    /// Builds the chart centred at `base`.
    pub fn new(manifold: &Manifold, base: &Point) -> Result<Self> {
        manifold.check_point(base)?;
        let basis = manifold.basis_at(base)?;
        Ok(NormalChart {
            manifold: manifold.clone(),
            basis,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn base(&self) -> &Point {
        &self.basis.base
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Chart dimension (the manifold dimension).
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn expect_dim(&self, v: &DVector<f64>, what: &'static str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Coordinates of `q`; fails when `q` is outside the chart domain
    /// (past the cut locus of the base point).
    pub fn to_coords(&self, q: &Point) -> Result<DVector<f64>> {
        let x = self.manifold.log(self.base(), q)?;
        Ok(self.basis.to_coeffs(&x))
    }

    /// Point with coordinates `x`.
    pub fn from_coords(&self, x: &DVector<f64>) -> Result<Point> {
        self.expect_dim(x, "chart coordinates")?;
        self.manifold.exp(self.base(), &self.basis.from_coeffs(x))
    }

    /// Ambient tangent vector at `from_coords(x)` whose components in the
    /// coordinate frame `∂/∂xᵢ` are `v`; this is the differential of
    /// [`NormalChart::from_coords`] applied to `v`, evaluated analytically.
    pub fn vector_from_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<Tangent> {
        self.expect_dim(x, "chart coordinates")?;
        self.expect_dim(v, "frame components")?;
        match &self.manifold {
            Manifold::Euclidean { .. } => Ok(self.basis.from_coeffs(v)),
            Manifold::Sphere { .. } => {
                let ax = self.basis.from_coeffs(x);
                let av = self.basis.from_coeffs(v);
                Ok(Tangent::new(sphere::dexp(
                    &self.base().coords,
                    &ax.coords,
                    &av.coords,
                )))
            }
            Manifold::Rotations { .. }
            | Manifold::UnitQuaternions
            | Manifold::SpecialEuclidean { .. } => {
                // Left-trivialised representation: the stored tangent at
                // p·exp(Z) along t ↦ p·exp(Z + tW) is dexp_Z(W).
                let z = self.basis.from_coeffs(x);
                let w = self.basis.from_coeffs(v);
                dexp_left(&self.manifold, &z, &w)
            }
            Manifold::TangentBundle(_) => Err(Error::unsupported(
                self.manifold.to_string(),
                "vector_from_coords",
            )),
        }
    }

    /// Components in the coordinate frame at `from_coords(x)` of an
    /// ambient tangent vector `w` there; inverse of
    /// [`NormalChart::vector_from_coords`].
    pub fn vector_to_coords(&self, x: &DVector<f64>, w: &Tangent) -> Result<DVector<f64>> {
        self.expect_dim(x, "chart coordinates")?;
        let d = self.dim();
        let amb = self.manifold.ambient_len();
        let mut frame = DMatrix::zeros(amb, d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            frame.set_column(i, &self.vector_from_coords(x, &e)?.coords);
        }
        let svd = frame.svd(true, true);
        svd.solve(&w.coords, 1e-13)
            .map_err(|_| Error::out_of_domain("degenerate coordinate frame"))
    }
}

/// Left-trivialised differential of the group exponential:
/// `dexp_Z(W) = Σ_{k≥0} (−1)ᵏ/(k+1)! · ad_Zᵏ(W)`.
fn dexp_left(m: &Manifold, z: &Tangent, w: &Tangent) -> Result<Tangent> {
    let mut acc = w.coords.clone();
    let mut term = w.clone();
    let mut coeff = 1.0; // (−1)ᵏ / (k+1)!
    for k in 1..=DEXP_TERMS {
        term = m.bracket(z, &term)?;
        coeff *= -1.0 / (k as f64 + 1.0);
        acc += coeff * &term.coords;
        if term.coords.norm() * coeff.abs() < 1e-19 * (acc.norm() + 1.0) {
            break;
        }
    }
    Ok(Tangent::new(acc))
}

/// Coefficients `b_k / k!` of `z / (1 − e^{−z}) = Σ b_k zᵏ/k!` — Bernoulli
/// numbers with `b₁ = +1/2` — divided by `k!`.
fn bernoulli_over_factorial() -> &'static [f64; BERNOULLI_TERMS + 1] {
    static TABLE: OnceLock<[f64; BERNOULLI_TERMS + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut c = [0.0_f64; BERNOULLI_TERMS + 1];
        c[0] = 1.0;
        c[1] = 0.5;
        // (numerator, denominator) of the Bernoulli numbers B₂ₖ.
        let bern: [(f64, f64); 22] = [
            (1.0, 6.0),
            (-1.0, 30.0),
            (1.0, 42.0),
            (-1.0, 30.0),
            (5.0, 66.0),
            (-691.0, 2730.0),
            (7.0, 6.0),
            (-3617.0, 510.0),
            (43867.0, 798.0),
            (-174611.0, 330.0),
            (854513.0, 138.0),
            (-236364091.0, 2730.0),
            (8553103.0, 6.0),
            (-23749461029.0, 870.0),
            (8615841276005.0, 14322.0),
            (-7709321041217.0, 510.0),
            (2577687858367.0, 6.0),
            (-26315271553053477373.0, 1919190.0),
            (2929993913841559.0, 6.0),
            (-261082718496449122051.0, 13530.0),
            (1520097643918070802691.0, 1806.0),
            (-27833269579301024235023.0, 690.0),
        ];
        let mut factorial = 1.0_f64;
        for (k, (num, den)) in (1usize..).zip(bern) {
            // advance factorial to (2k)!
            factorial *= (2 * k - 1) as f64;
            factorial *= (2 * k) as f64;
            if 2 * k <= BERNOULLI_TERMS {
                c[2 * k] = num / den / factorial;
            }
        }
        c
    })
}

type GammaFn = dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;

enum FieldKind {
    /// Identically zero (flat space in canonical coordinates).
    Zero,
    /// Round sphere of any dimension in normal coordinates.
    Sphere,
    /// Lie group with the torsion-free Cartan–Schouten connection, in
    /// normal coordinates through the stored identity basis.
    LieGroup { manifold: Manifold, basis: Basis },
    /// User-supplied symmetric bilinear evaluation `Γ(x)(u, v)`.
    Custom(Box<GammaFn>),
}

impl std::fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldKind::Zero => write!(f, "Zero"),
            FieldKind::Sphere => write!(f, "Sphere"),
            FieldKind::LieGroup { manifold, .. } => write!(f, "LieGroup({manifold})"),
            FieldKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Christoffel symbols of a normal-coordinate chart, evaluated as the
/// symmetric bilinear map `(u, v) ↦ Γ(x)(u, v)` with components
/// `Γ(x)(u,v)ᵐ = Γᵐᵢⱼ(x) uⁱ vʲ`.
///
/// The built-in fields are analytic (no finite differencing), so
/// integrators built on them retain their full order of accuracy.  By the
/// symmetry of normal coordinates the evaluation at the origin is zero.
#[derive(Debug)]
pub struct ChristoffelField {
    dim: usize,
    kind: FieldKind,
}

impl ChristoffelField {
    /// The zero field on `ℝᵈ`.
    pub fn zero(dim: usize) -> Self {
        ChristoffelField {
            dim,
            kind: FieldKind::Zero,
        }
    }

    /// The round sphere `Sⁿ` in normal coordinates (any base point; the
    /// symbols depend only on inner products of the arguments).
    pub fn sphere(n: usize) -> Self {
        ChristoffelField {
            dim: n,
            kind: FieldKind::Sphere,
        }
    }

    /// A Lie group with the torsion-free Cartan–Schouten connection in
    /// normal coordinates (any base point; the symbols are invariant under
    /// left translation).
    pub fn lie_group(manifold: &Manifold) -> Result<Self> {
        if !manifold.has_group() {
            return Err(Error::unsupported(manifold.to_string(), "lie_group field"));
        }
        let id = manifold.identity()?;
        let basis = manifold.basis_at(&id)?;
        Ok(ChristoffelField {
            dim: manifold.dim(),
            kind: FieldKind::LieGroup {
                manifold: manifold.clone(),
                basis,
            },
        })
    }

    /// A user-supplied field; `f(x, u, v)` must be symmetric bilinear in
    /// `(u, v)`.
    pub fn custom<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        ChristoffelField {
            dim,
            kind: FieldKind::Custom(Box::new(f)),
        }
    }

    /// The analytic field matching `manifold`'s connection in its normal
    /// charts.  Tangent bundles carry no Christoffel field here (their
    /// retraction is not induced by a connection on the bundle).
    pub fn for_manifold(manifold: &Manifold) -> Result<Self> {
        match manifold {
            Manifold::Euclidean { n } => Ok(Self::zero(*n)),
            Manifold::Sphere { n } => Ok(Self::sphere(*n)),
            Manifold::Rotations { .. }
            | Manifold::UnitQuaternions
            | Manifold::SpecialEuclidean { .. } => Self::lie_group(manifold),
            Manifold::TangentBundle(_) => Err(Error::unsupported(
                manifold.to_string(),
                "christoffel field",
            )),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates `Γ(x)(u, v)`.
    pub fn gamma(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(u.len(), self.dim);
        debug_assert_eq!(v.len(), self.dim);
        match &self.kind {
            FieldKind::Zero => DVector::zeros(self.dim),
            FieldKind::Sphere => sphere_gamma(x, u, v),
            FieldKind::LieGroup { manifold, basis } => {
                if u == v {
                    lie_gamma_quadratic(manifold, basis, x, u)
                } else {
                    // Polarisation of the quadratic form.
                    let sum = lie_gamma_quadratic(manifold, basis, x, &(u + v));
                    let diff = lie_gamma_quadratic(manifold, basis, x, &(u - v));
                    0.25 * (sum - diff)
                }
            }
            FieldKind::Custom(f) => f(x, u, v),
        }
    }
}

/// Coefficient functions of the sphere field at radius `r`:
/// `Γ(x)(u,v) = A(r)⟨u, Πv⟩ω + B(r)(⟨ω,u⟩Πv + ⟨ω,v⟩Πu)` with `ω = x/r`
/// and `Π` the projector onto `ω⊥`, where `A = (1−h)/r − h′/2`,
/// `B = h′/(2h)`, `h(r) = sin²r/r²`.
fn sphere_gamma_coeffs(r: f64) -> (f64, f64) {
    if r < SPHERE_SERIES_RADIUS {
        let r2 = r * r;
        (
            r * (2.0 / 3.0 - r2 * (2.0 / 15.0)),
            -r * (1.0 / 3.0 + r2 * (1.0 / 45.0)),
        )
    } else {
        let s = sphere::sinc(r);
        let h = s * s;
        let hp = 2.0 * s * r * sphere::dsinc_over_t(r);
        (((1.0 - h) / r) - 0.5 * hp, 0.5 * hp / h)
    }
}

fn sphere_gamma(x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let r = x.norm();
    if r < 1e-14 {
        return DVector::zeros(x.len());
    }
    let omega = x / r;
    let ou = omega.dot(u);
    let ov = omega.dot(v);
    let pu = u - ou * &omega;
    let pv = v - ov * &omega;
    let (a, b) = sphere_gamma_coeffs(r);
    let radial = a * u.dot(&pv);
    radial * omega + b * (ou * pv + ov * pu)
}

/// `Γ(x)(w, w)` for the Cartan–Schouten connection in normal coordinates.
///
/// With `Z = ĉx`, `W = ĉw` and `η = dexp_Z(W)`, differentiating the
/// geodesic identity `ẋ = dexp⁻¹` twice gives
/// `Γ(x)(w,w) = −ĉ⁻¹ Σ_{k≥1} (b_k/k!) Σ_{j=0}^{k−1} ad_Zʲ [W, ad_Z^{k−1−j} η]`
/// with the Bernoulli numbers of [`bernoulli_over_factorial`].
fn lie_gamma_quadratic(
    manifold: &Manifold,
    basis: &Basis,
    x: &DVector<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let z = basis.from_coeffs(x);
    let wt = basis.from_coeffs(w);
    let eta = dexp_left(manifold, &z, &wt).expect("constructed on a group");

    let coeffs = bernoulli_over_factorial();
    let terms = BERNOULLI_TERMS;

    // s[m] = [W, ad_Z^m(η)], m = 0..terms
    let mut s: Vec<Tangent> = Vec::with_capacity(terms);
    let mut ad_pow = eta;
    for m in 0..terms {
        s.push(manifold.bracket(&wt, &ad_pow).expect("group bracket"));
        if m + 1 < terms {
            ad_pow = manifold.bracket(&z, &ad_pow).expect("group bracket");
        }
    }

    // Σ_{k≥1} c_k Σ_{j=0}^{k−1} ad_Z^j(s[k−1−j])  =  Σ_j ad_Z^j(T_j),
    // T_j = Σ_m c_{j+m+1} s[m]; evaluated by a Horner sweep in ad_Z.
    let amb = manifold.ambient_len();
    let mut acc = Tangent::zeros(amb);
    for j in (0..terms).rev() {
        let mut t_j = DVector::zeros(amb);
        for (m, s_m) in s.iter().enumerate().take(terms - j) {
            let idx = j + m + 1;
            if idx <= terms {
                let c = coeffs[idx];
                if c != 0.0 {
                    t_j += c * &s_m.coords;
                }
            }
        }
        acc = manifold.bracket(&z, &acc).expect("group bracket");
        acc = Tangent::new(acc.coords + t_j);
    }
    -basis.to_coeffs(&acc)
}

/// Parallel transport computed by integrating the transport equations in a
/// normal chart at `p` with the classical fourth-order Runge–Kutta scheme.
///
/// The state is `(x, ξ, ψ)`: geodesic coordinates, geodesic velocity, and
/// the transported frame components, with
/// `ẋ = ξ`, `ξ̇ = −Γ(x)(ξ, ξ)`, `ψ̇ = −Γ(x)(ξ, ψ)`, integrated over unit
/// time from `x(0) = 0`, `ξ(0) = c(d)`, `ψ(0) = c(X)`.  The returned
/// tangent lives at `exp_p(d)`.
///
/// This is a validation tool: the closed-form
/// [`Manifold::parallel_transport`] is what the filters use.
pub fn parallel_transport_ode(
    manifold: &Manifold,
    p: &Point,
    d: &Tangent,
    x: &Tangent,
    steps: usize,
) -> Result<Tangent> {
    if steps == 0 {
        return Err(Error::invalid_input("transport integration needs at least one step"));
    }
    let chart = NormalChart::new(manifold, p)?;
    let field = ChristoffelField::for_manifold(manifold)?;
    let dim = chart.dim();

    let mut pos = DVector::zeros(dim);
    let mut vel = chart.basis().to_coeffs(d);
    let mut psi = chart.basis().to_coeffs(x);
    let h = 1.0 / steps as f64;

    let deriv = |pos: &DVector<f64>, vel: &DVector<f64>, psi: &DVector<f64>| {
        (
            vel.clone(),
            -field.gamma(pos, vel, vel),
            -field.gamma(pos, vel, psi),
        )
    };

    for _ in 0..steps {
        let (k1p, k1v, k1s) = deriv(&pos, &vel, &psi);
        let (k2p, k2v, k2s) = deriv(
            &(&pos + 0.5 * h * &k1p),
            &(&vel + 0.5 * h * &k1v),
            &(&psi + 0.5 * h * &k1s),
        );
        let (k3p, k3v, k3s) = deriv(
            &(&pos + 0.5 * h * &k2p),
            &(&vel + 0.5 * h * &k2v),
            &(&psi + 0.5 * h * &k2s),
        );
        let (k4p, k4v, k4s) = deriv(
            &(&pos + h * &k3p),
            &(&vel + h * &k3v),
            &(&psi + h * &k3s),
        );
        pos += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        vel += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        psi += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    }

    chart.vector_from_coords(&pos, &psi)
}
