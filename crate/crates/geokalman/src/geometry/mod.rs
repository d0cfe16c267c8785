//! Manifold handles and the geometric operations the filters are built on.
//!
//! A [`Manifold`] value names a geometry and fixes the numeric
//! representation of its points and tangent vectors, all stored as flat
//! `f64` vectors:
//!
//! | manifold            | point representation                  | tangent representation            |
//! |---------------------|---------------------------------------|-----------------------------------|
//! | `Euclidean(n)`      | `x ∈ ℝⁿ`                              | `ℝⁿ`                              |
//! | `Sphere(n)`         | unit vector in `ℝⁿ⁺¹`                 | ambient vector ⟂ point            |
//! | `Rotations(n)`      | column-major `n×n` rotation matrix    | skew `n×n` matrix (left-trivial.) |
//! | `UnitQuaternions`   | `(w, x, y, z)` unit quaternion        | pure quaternion (left-trivial.)   |
//! | `SpecialEuclidean(n)`| `[t, R]`, translation then rotation  | `[v, A]`, `A` skew (left-trivial.)|
//! | `TangentBundle(M)`  | `[p, X]`, point and tangent of `M`    | `[ξ_p, ξ_X]`, both tangent at `p` |
//!
//! On all representations the manifold inner product coincides with the
//! flat dot product of the stored coordinates, so orthonormal tangent bases
//! can convert between ambient tangents and coefficient vectors by plain
//! matrix multiplication.
//!
//! Lie groups (`Euclidean`, `Rotations`, `UnitQuaternions`,
//! `SpecialEuclidean`) carry the torsion-free Cartan–Schouten connection:
//! geodesics are left translates of one-parameter subgroups and parallel
//! transport is the algebra conjugation `X ↦ exp(−Y/2) X exp(Y/2)`.  The
//! sphere carries the Levi-Civita connection of the round metric.  The
//! tangent bundle uses a first-order retraction built from the base
//! manifold's exponential and parallel transport; its `exp`/`log` *are*
//! that retraction pair.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub mod chart;
pub mod quaternion;
pub mod rotations;
pub mod special_euclidean;
pub mod sphere;

pub use chart::{parallel_transport_ode, ChristoffelField, NormalChart};

/// Tolerance for point-membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance for tangency checks.
pub const TANGENCY_TOL: f64 = 1e-9;

/// A point on a manifold, stored as a flat coordinate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: DVector<f64>) -> Self {
        Point { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point {
            coords: DVector::from_row_slice(coords),
        }
    }
}

/// A tangent vector, stored in the same flat representation as points.
///
/// The base point is not stored; operations take it explicitly and tangency
/// can be verified with [`Manifold::check_tangent`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub coords: DVector<f64>,
}

impl Tangent {
    pub fn new(coords: DVector<f64>) -> Self {
        Tangent { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Tangent {
            coords: DVector::from_row_slice(coords),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Tangent {
            coords: DVector::zeros(len),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

/// An orthonormal basis of a tangent space, stored as the
/// `ambient_len × dim` matrix whose columns are the basis vectors.
#[derive(Debug, Clone)]
pub struct Basis {
    pub base: Point,
    mat: DMatrix<f64>,
}

impl Basis {
    /// Number of basis vectors (the manifold dimension).
    pub fn dim(&self) -> usize {
        self.mat.ncols()
    }

    /// The `i`-th basis vector.
    pub fn vector(&self, i: usize) -> Tangent {
        Tangent::new(self.mat.column(i).into_owned())
    }

    /// Coefficients of a tangent vector in this basis.
    pub fn to_coeffs(&self, x: &Tangent) -> DVector<f64> {
        self.mat.transpose() * &x.coords
    }

    /// Tangent vector with the given coefficients.
    pub fn from_coeffs(&self, c: &DVector<f64>) -> Tangent {
        Tangent::new(&self.mat * c)
    }

    /// Gram matrix `BᵀB`; the identity for an orthonormal basis.
    pub fn gram(&self) -> DMatrix<f64> {
        self.mat.transpose() * &self.mat
    }
}

/// A named geometry together with its connection and, where present, its
/// group structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    /// Flat space `ℝⁿ` (also the translation group).
    Euclidean { n: usize },
    /// The unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
    Sphere { n: usize },
    /// The rotation group SO(n), `n ∈ {2, 3}`.
    Rotations { n: usize },
    /// The group of unit quaternions (double cover of SO(3)).
    UnitQuaternions,
    /// The special Euclidean group SE(n), `n ∈ {2, 3}`.
    SpecialEuclidean { n: usize },
    /// The tangent bundle of another manifold, with a first-order
    /// retraction in place of a true exponential map.
    TangentBundle(Box<Manifold>),
}

impl std::fmt::Display for Manifold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Manifold::Euclidean { n } => write!(f, "R^{n}"),
            Manifold::Sphere { n } => write!(f, "S^{n}"),
            Manifold::Rotations { n } => write!(f, "SO({n})"),
            Manifold::UnitQuaternions => write!(f, "unit quaternions"),
            Manifold::SpecialEuclidean { n } => write!(f, "SE({n})"),
            Manifold::TangentBundle(m) => write!(f, "tangent bundle of {m}"),
        }
    }
}

impl Manifold {
    /// Euclidean space `ℝⁿ`.
    pub fn euclidean(n: usize) -> Self {
        Manifold::Euclidean { n }
    }

    /// The sphere `Sⁿ` (unit vectors in `ℝⁿ⁺¹`).
    pub fn sphere(n: usize) -> Self {
        Manifold::Sphere { n }
    }

    /// The rotation group SO(n) for `n ∈ {2, 3}`.
    pub fn rotations(n: usize) -> Result<Self> {
        if n == 2 || n == 3 {
            Ok(Manifold::Rotations { n })
        } else {
            Err(Error::InvalidConfig {
                context: format!("SO({n}) is not supported; use n = 2 or 3"),
            })
        }
    }

    /// The group of unit quaternions.
    pub fn unit_quaternions() -> Self {
        Manifold::UnitQuaternions
    }

    /// The special Euclidean group SE(n) for `n ∈ {2, 3}`.
    pub fn special_euclidean(n: usize) -> Result<Self> {
        if n == 2 || n == 3 {
            Ok(Manifold::SpecialEuclidean { n })
        } else {
            Err(Error::InvalidConfig {
                context: format!("SE({n}) is not supported; use n = 2 or 3"),
            })
        }
    }

    /// The tangent bundle of `base`.
    pub fn tangent_bundle(base: Manifold) -> Self {
        Manifold::TangentBundle(Box::new(base))
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean { n } => *n,
            Manifold::Sphere { n } => *n,
            Manifold::Rotations { n } => n * (n - 1) / 2,
            Manifold::UnitQuaternions => 3,
            Manifold::SpecialEuclidean { n } => n + n * (n - 1) / 2,
            Manifold::TangentBundle(m) => 2 * m.dim(),
        }
    }

    /// Length of the flat coordinate vectors for points and tangents.
    pub fn ambient_len(&self) -> usize {
        match self {
            Manifold::Euclidean { n } => *n,
            Manifold::Sphere { n } => n + 1,
            Manifold::Rotations { n } => n * n,
            Manifold::UnitQuaternions => 4,
            Manifold::SpecialEuclidean { n } => n + n * n,
            Manifold::TangentBundle(m) => 2 * m.ambient_len(),
        }
    }

    /// Human-readable description of the point/tangent representation.
    pub fn ambient_shape(&self) -> String {
        match self {
            Manifold::Euclidean { n } => format!("vector of length {n}"),
            Manifold::Sphere { n } => format!("unit vector of length {}", n + 1),
            Manifold::Rotations { n } => {
                format!("column-major {n}x{n} rotation matrix; skew tangents in the Lie algebra")
            }
            Manifold::UnitQuaternions => {
                "unit quaternion (w, x, y, z); pure-quaternion tangents".to_string()
            }
            Manifold::SpecialEuclidean { n } => format!(
                "translation of length {n} followed by a column-major {n}x{n} rotation; \
                 tangents pair a velocity with a skew matrix"
            ),
            Manifold::TangentBundle(m) => {
                format!("pair [p, X] of a point and tangent of {m}, concatenated")
            }
        }
    }

    /// Whether the manifold carries a group structure.
    pub fn has_group(&self) -> bool {
        matches!(
            self,
            Manifold::Euclidean { .. }
                | Manifold::Rotations { .. }
                | Manifold::UnitQuaternions
                | Manifold::SpecialEuclidean { .. }
        )
    }

    /// Short description of the affine connection in use.
    pub fn connection_kind(&self) -> &'static str {
        match self {
            Manifold::Euclidean { .. } => "flat",
            Manifold::Sphere { .. } => "levi-civita (round metric)",
            Manifold::Rotations { .. } | Manifold::UnitQuaternions => {
                "cartan-schouten torsion-free (= levi-civita of the bi-invariant metric)"
            }
            Manifold::SpecialEuclidean { .. } => "cartan-schouten torsion-free",
            Manifold::TangentBundle(_) => "first-order retraction with block transport",
        }
    }

    /// Whether parallel transport is an isometry of the stored inner
    /// product (true for Levi-Civita connections).
    pub fn transport_is_isometric(&self) -> bool {
        match self {
            Manifold::Euclidean { .. }
            | Manifold::Sphere { .. }
            | Manifold::Rotations { .. }
            | Manifold::UnitQuaternions => true,
            Manifold::SpecialEuclidean { .. } => false,
            Manifold::TangentBundle(m) => m.transport_is_isometric(),
        }
    }

    fn expect_len(&self, v: &DVector<f64>, what: &'static str) -> Result<()> {
        if v.len() != self.ambient_len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.ambient_len(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Checks that `p` satisfies the membership conditions within
    /// [`MEMBERSHIP_TOL`].
    pub fn check_point(&self, p: &Point) -> Result<()> {
        self.expect_len(&p.coords, "point")?;
        let defect = self.membership_defect(p);
        if defect > MEMBERSHIP_TOL {
            return Err(Error::invalid_input(format!(
                "point violates {self} membership by {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// Largest violation of the membership conditions (0 for Euclidean).
    pub fn membership_defect(&self, p: &Point) -> f64 {
        match self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere { .. } => (p.coords.norm() - 1.0).abs(),
            Manifold::Rotations { n } => {
                rotations::orthogonality_defect(&rotations::unflatten(&p.coords, *n))
            }
            Manifold::UnitQuaternions => (p.coords.norm() - 1.0).abs(),
            Manifold::SpecialEuclidean { n } => {
                let (_, r) = special_euclidean::split_point(&p.coords, *n);
                rotations::orthogonality_defect(&r)
            }
            Manifold::TangentBundle(m) => {
                let (base, fiber) = split_bundle(&p.coords);
                let pb = Point::new(base);
                let d1 = m.membership_defect(&pb);
                let d2 = m.tangency_defect(&pb, &Tangent::new(fiber));
                d1.max(d2)
            }
        }
    }

    /// Checks that `x` is tangent at `p` within [`TANGENCY_TOL`].
    pub fn check_tangent(&self, p: &Point, x: &Tangent) -> Result<()> {
        self.expect_len(&p.coords, "point")?;
        self.expect_len(&x.coords, "tangent")?;
        let defect = self.tangency_defect(p, x);
        if defect > TANGENCY_TOL {
            return Err(Error::invalid_input(format!(
                "vector violates tangency on {self} by {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// Largest violation of the tangency conditions (0 for Euclidean).
    pub fn tangency_defect(&self, p: &Point, x: &Tangent) -> f64 {
        match self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere { .. } => p.coords.dot(&x.coords).abs(),
            Manifold::Rotations { n } => {
                let a = rotations::unflatten(&x.coords, *n);
                (&a + a.transpose()).abs().max()
            }
            Manifold::UnitQuaternions => x.coords[0].abs(),
            Manifold::SpecialEuclidean { n } => {
                let (_, a) = special_euclidean::split_point(&x.coords, *n);
                (&a + a.transpose()).abs().max()
            }
            Manifold::TangentBundle(m) => {
                let (base, _) = split_bundle(&p.coords);
                let (xp, xx) = split_bundle(&x.coords);
                let pb = Point::new(base);
                m.tangency_defect(&pb, &Tangent::new(xp))
                    .max(m.tangency_defect(&pb, &Tangent::new(xx)))
            }
        }
    }

    /// Exponential map: follows the geodesic from `p` with initial velocity
    /// `x` for unit time.  On tangent bundles this is the first-order
    /// retraction.
    pub fn exp(&self, p: &Point, x: &Tangent) -> Result<Point> {
        self.expect_len(&p.coords, "point")?;
        self.expect_len(&x.coords, "tangent")?;
        match self {
            Manifold::Euclidean { .. } => Ok(Point::new(&p.coords + &x.coords)),
            Manifold::Sphere { .. } => Ok(Point::new(sphere::exp(&p.coords, &x.coords))),
            Manifold::Rotations { n } => {
                let r = rotations::unflatten(&p.coords, *n);
                let a = rotations::unflatten(&x.coords, *n);
                let e = rotations::expm_skew(&a)?;
                Ok(Point::new(rotations::flatten(&(r * e))))
            }
            Manifold::UnitQuaternions => {
                let q = quaternion::mul(&p.coords, &quaternion::exp_pure(&x.coords));
                Ok(Point::new(q))
            }
            Manifold::SpecialEuclidean { n } => {
                let (t, r) = special_euclidean::split_point(&p.coords, *n);
                let (v, a) = special_euclidean::split_point(&x.coords, *n);
                let (et, er) = special_euclidean::group_exp(&v, &a)?;
                let (ct, cr) = special_euclidean::compose(&t, &r, &et, &er);
                Ok(Point::new(special_euclidean::join_point(&ct, &cr)))
            }
            Manifold::TangentBundle(m) => {
                let (pb, fiber) = split_bundle(&p.coords);
                let (xi_p, xi_x) = split_bundle(&x.coords);
                let pb = Point::new(pb);
                let xi_p = Tangent::new(xi_p);
                let p2 = m.exp(&pb, &xi_p)?;
                let moved = m.parallel_transport(&pb, &xi_p, &Tangent::new(fiber + xi_x))?;
                Ok(Point::new(join_bundle(&p2.coords, &moved.coords)))
            }
        }
    }

    /// Logarithmic map: the initial velocity of the geodesic from `p`
    /// reaching `q` at unit time.  Inverse of [`Manifold::exp`]; fails at
    /// the cut locus.  On tangent bundles this is the inverse retraction.
    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.expect_len(&p.coords, "point")?;
        self.expect_len(&q.coords, "point")?;
        match self {
            Manifold::Euclidean { .. } => Ok(Tangent::new(&q.coords - &p.coords)),
            Manifold::Sphere { .. } => Ok(Tangent::new(sphere::log(&p.coords, &q.coords)?)),
            Manifold::Rotations { n } => {
                let rp = rotations::unflatten(&p.coords, *n);
                let rq = rotations::unflatten(&q.coords, *n);
                let rel = rp.transpose() * rq;
                Ok(Tangent::new(rotations::flatten(&rotations::logm_rotation(
                    &rel,
                )?)))
            }
            Manifold::UnitQuaternions => {
                let rel = quaternion::mul(&quaternion::conjugate(&p.coords), &q.coords);
                Ok(Tangent::new(quaternion::log_unit(&rel)?))
            }
            Manifold::SpecialEuclidean { n } => {
                let (tp, rp) = special_euclidean::split_point(&p.coords, *n);
                let (tq, rq) = special_euclidean::split_point(&q.coords, *n);
                let (ti, ri) = special_euclidean::inverse(&tp, &rp);
                let (tr, rr) = special_euclidean::compose(&ti, &ri, &tq, &rq);
                let (v, a) = special_euclidean::group_log(&tr, &rr)?;
                Ok(Tangent::new(special_euclidean::join_point(&v, &a)))
            }
            Manifold::TangentBundle(m) => {
                let (pb, fiber) = split_bundle(&p.coords);
                let (qb, qfiber) = split_bundle(&q.coords);
                let pb = Point::new(pb);
                let qb = Point::new(qb);
                let xi_p = m.log(&pb, &qb)?;
                let back_dir = m.log(&qb, &pb)?;
                let back = m.parallel_transport(&qb, &back_dir, &Tangent::new(qfiber))?;
                let xi_x = back.coords - fiber;
                Ok(Tangent::new(join_bundle(&xi_p.coords, &xi_x)))
            }
        }
    }

    /// Retraction; identical to [`Manifold::exp`] for every handle (the
    /// tangent bundle's exponential already *is* its first-order
    /// retraction).
    pub fn retract(&self, p: &Point, x: &Tangent) -> Result<Point> {
        self.exp(p, x)
    }

    /// Inverse retraction; identical to [`Manifold::log`].
    pub fn inverse_retract(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.log(p, q)
    }

    /// Parallel transport of `x` along the geodesic from `p` with initial
    /// velocity `d`, landing at `exp_p(d)`.
    pub fn parallel_transport(&self, p: &Point, d: &Tangent, x: &Tangent) -> Result<Tangent> {
        self.expect_len(&p.coords, "point")?;
        self.expect_len(&d.coords, "tangent")?;
        self.expect_len(&x.coords, "tangent")?;
        match self {
            Manifold::Euclidean { .. } => Ok(x.clone()),
            Manifold::Sphere { .. } => Ok(Tangent::new(sphere::parallel_transport(
                &p.coords, &d.coords, &x.coords,
            ))),
            Manifold::Rotations { n } => {
                let xd = rotations::unflatten(&x.coords, *n);
                let dd = rotations::unflatten(&d.coords, *n);
                let gm = rotations::expm_skew(&(-0.5 * &dd))?;
                let gp = rotations::expm_skew(&(0.5 * dd))?;
                Ok(Tangent::new(rotations::flatten(&(gm * xd * gp))))
            }
            Manifold::UnitQuaternions => {
                let half = DVector::from_iterator(4, d.coords.iter().map(|v| -0.5 * v));
                let g = quaternion::exp_pure(&half);
                let out = quaternion::mul(&quaternion::mul(&g, &x.coords), &quaternion::conjugate(&g));
                Ok(Tangent::new(out))
            }
            Manifold::SpecialEuclidean { n } => {
                let (vx, ax) = special_euclidean::split_point(&x.coords, *n);
                let (vy, ay) = special_euclidean::split_point(&d.coords, *n);
                let (vt, at) = special_euclidean::parallel_transport(&vx, &ax, &vy, &ay)?;
                Ok(Tangent::new(special_euclidean::join_point(&vt, &at)))
            }
            Manifold::TangentBundle(m) => {
                let (pb, _) = split_bundle(&p.coords);
                let (dp, _) = split_bundle(&d.coords);
                let (xp, xx) = split_bundle(&x.coords);
                let pb = Point::new(pb);
                let dp = Tangent::new(dp);
                let tp = m.parallel_transport(&pb, &dp, &Tangent::new(xp))?;
                let tx = m.parallel_transport(&pb, &dp, &Tangent::new(xx))?;
                Ok(Tangent::new(join_bundle(&tp.coords, &tx.coords)))
            }
        }
    }

    /// Inner product of tangent vectors at `p`.  On every representation in
    /// this crate it reduces to the flat dot product.
    pub fn inner(&self, _p: &Point, x: &Tangent, y: &Tangent) -> f64 {
        x.coords.dot(&y.coords)
    }

    /// Norm induced by [`Manifold::inner`].
    pub fn norm(&self, p: &Point, x: &Tangent) -> f64 {
        self.inner(p, x, x).sqrt()
    }

    /// Geodesic distance `‖log_p(q)‖`.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.log(p, q)?.norm())
    }

    /// Deterministic orthonormal basis of the tangent space at `p`.
    ///
    /// * Euclidean: the canonical axes.
    /// * Sphere: Gram–Schmidt of the `n` canonical ambient axes least
    ///   aligned with `p`, ordered by axis index (ties favour the smaller
    ///   index).
    /// * Groups: a fixed orthonormal algebra basis (constant in the
    ///   left-trivialised representation): lexicographic skew generators
    ///   `(Eᵢⱼ − Eⱼᵢ)/√2` for rotations, the imaginary units for
    ///   quaternions, translations before rotation generators for SE(n).
    /// * Tangent bundle: the base-point basis on the base block followed by
    ///   the same basis on the fiber block.
    pub fn basis_at(&self, p: &Point) -> Result<Basis> {
        self.expect_len(&p.coords, "point")?;
        let mat = match self {
            Manifold::Euclidean { n } => DMatrix::identity(*n, *n),
            Manifold::Sphere { n } => sphere_basis(&p.coords, *n)?,
            Manifold::Rotations { n } => so_basis(*n),
            Manifold::UnitQuaternions => {
                let mut m = DMatrix::zeros(4, 3);
                m[(1, 0)] = 1.0;
                m[(2, 1)] = 1.0;
                m[(3, 2)] = 1.0;
                m
            }
            Manifold::SpecialEuclidean { n } => {
                let rot = so_basis(*n);
                let d = self.dim();
                let amb = self.ambient_len();
                let mut m = DMatrix::zeros(amb, d);
                for i in 0..*n {
                    m[(i, i)] = 1.0;
                }
                m.view_mut((*n, *n), (n * n, d - n)).copy_from(&rot);
                m
            }
            Manifold::TangentBundle(m) => {
                let (pb, _) = split_bundle(&p.coords);
                let base = m.basis_at(&Point::new(pb))?;
                let (amb, d) = (m.ambient_len(), m.dim());
                let mut out = DMatrix::zeros(2 * amb, 2 * d);
                out.view_mut((0, 0), (amb, d)).copy_from(&base.mat);
                out.view_mut((amb, d), (amb, d)).copy_from(&base.mat);
                out
            }
        };
        Ok(Basis {
            base: p.clone(),
            mat,
        })
    }

    /// Group identity element.
    pub fn identity(&self) -> Result<Point> {
        match self {
            Manifold::Euclidean { n } => Ok(Point::new(DVector::zeros(*n))),
            Manifold::Rotations { n } => {
                Ok(Point::new(rotations::flatten(&DMatrix::identity(*n, *n))))
            }
            Manifold::UnitQuaternions => Ok(Point::from_slice(&[1.0, 0.0, 0.0, 0.0])),
            Manifold::SpecialEuclidean { n } => Ok(Point::new(special_euclidean::join_point(
                &DVector::zeros(*n),
                &DMatrix::identity(*n, *n),
            ))),
            _ => Err(Error::unsupported(self.to_string(), "identity")),
        }
    }

    /// Group composition `a ∘ b`.
    pub fn compose(&self, a: &Point, b: &Point) -> Result<Point> {
        self.expect_len(&a.coords, "point")?;
        self.expect_len(&b.coords, "point")?;
        match self {
            Manifold::Euclidean { .. } => Ok(Point::new(&a.coords + &b.coords)),
            Manifold::Rotations { n } => {
                let ra = rotations::unflatten(&a.coords, *n);
                let rb = rotations::unflatten(&b.coords, *n);
                Ok(Point::new(rotations::flatten(&(ra * rb))))
            }
            Manifold::UnitQuaternions => Ok(Point::new(quaternion::mul(&a.coords, &b.coords))),
            Manifold::SpecialEuclidean { n } => {
                let (ta, ra) = special_euclidean::split_point(&a.coords, *n);
                let (tb, rb) = special_euclidean::split_point(&b.coords, *n);
                let (tc, rc) = special_euclidean::compose(&ta, &ra, &tb, &rb);
                Ok(Point::new(special_euclidean::join_point(&tc, &rc)))
            }
            _ => Err(Error::unsupported(self.to_string(), "compose")),
        }
    }

    /// Group inverse.
    pub fn group_inverse(&self, a: &Point) -> Result<Point> {
        self.expect_len(&a.coords, "point")?;
        match self {
            Manifold::Euclidean { .. } => Ok(Point::new(-&a.coords)),
            Manifold::Rotations { n } => {
                let r = rotations::unflatten(&a.coords, *n);
                Ok(Point::new(rotations::flatten(&r.transpose())))
            }
            Manifold::UnitQuaternions => Ok(Point::new(quaternion::conjugate(&a.coords))),
            Manifold::SpecialEuclidean { n } => {
                let (t, r) = special_euclidean::split_point(&a.coords, *n);
                let (ti, ri) = special_euclidean::inverse(&t, &r);
                Ok(Point::new(special_euclidean::join_point(&ti, &ri)))
            }
            _ => Err(Error::unsupported(self.to_string(), "group_inverse")),
        }
    }

    /// Lie bracket `[u, v]` of algebra elements, in the left-trivialised
    /// tangent representation.  Only defined on groups.
    pub fn bracket(&self, u: &Tangent, v: &Tangent) -> Result<Tangent> {
        match self {
            Manifold::Euclidean { n } => Ok(Tangent::zeros(*n)),
            Manifold::Rotations { n } => {
                let a = rotations::unflatten(&u.coords, *n);
                let b = rotations::unflatten(&v.coords, *n);
                Ok(Tangent::new(rotations::flatten(&(&a * &b - b * a))))
            }
            Manifold::UnitQuaternions => {
                let ab = quaternion::mul(&u.coords, &v.coords);
                let ba = quaternion::mul(&v.coords, &u.coords);
                Ok(Tangent::new(ab - ba))
            }
            Manifold::SpecialEuclidean { n } => {
                let (v1, a1) = special_euclidean::split_point(&u.coords, *n);
                let (v2, a2) = special_euclidean::split_point(&v.coords, *n);
                let vout = &a1 * &v2 - &a2 * &v1;
                let aout = &a1 * &a2 - a2 * a1;
                Ok(Tangent::new(special_euclidean::join_point(&vout, &aout)))
            }
            _ => Err(Error::unsupported(self.to_string(), "bracket")),
        }
    }

    /// Draws a pseudo-random point (seeded through `rng`).
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Point {
        match self {
            Manifold::Euclidean { n } => Point::new(standard_normal_vector(rng, *n)),
            Manifold::Sphere { n } => {
                let mut v = standard_normal_vector(rng, n + 1);
                while v.norm() < 1e-6 {
                    v = standard_normal_vector(rng, n + 1);
                }
                Point::new(v.normalize())
            }
            Manifold::Rotations { .. }
            | Manifold::UnitQuaternions
            | Manifold::SpecialEuclidean { .. } => {
                let id = self.identity().expect("groups have an identity");
                let x = self.random_tangent(rng, &id, 0.8);
                let p = self.exp(&id, &x).expect("bounded tangents stay in range");
                match self {
                    Manifold::SpecialEuclidean { n } => {
                        // Give the translation an unconstrained spread.
                        let mut coords = p.coords;
                        let t = standard_normal_vector(rng, *n);
                        coords.rows_mut(0, *n).copy_from(&t);
                        Point::new(coords)
                    }
                    _ => p,
                }
            }
            Manifold::TangentBundle(m) => {
                let p = m.random_point(rng);
                let x = m.random_tangent(rng, &p, 1.0);
                Point::new(join_bundle(&p.coords, &x.coords))
            }
        }
    }

    /// Draws a pseudo-random tangent vector at `p` with coefficients
    /// `N(0, scale²)` in the deterministic basis.
    pub fn random_tangent<R: Rng>(&self, rng: &mut R, p: &Point, scale: f64) -> Tangent {
        let basis = self
            .basis_at(p)
            .expect("basis exists at every valid point");
        let c = scale * standard_normal_vector(rng, self.dim());
        basis.from_coeffs(&c)
    }
}

fn standard_normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Splits a tangent-bundle vector `[a, b]` into its halves.
pub(crate) fn split_bundle(v: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let half = v.len() / 2;
    (
        DVector::from_column_slice(&v.as_slice()[..half]),
        DVector::from_column_slice(&v.as_slice()[half..]),
    )
}

/// Concatenates two halves into a tangent-bundle vector.
pub(crate) fn join_bundle(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Orthonormal basis of `T_p Sⁿ` from the least-aligned canonical axes.
fn sphere_basis(p: &DVector<f64>, n: usize) -> Result<DMatrix<f64>> {
    let amb = n + 1;
    // Axes sorted by |p_i| ascending, ties by index; keep the n least
    // aligned, then restore index order for the Gram–Schmidt sweep.
    let mut order: Vec<usize> = (0..amb).collect();
    order.sort_by(|&i, &j| {
        p[i].abs()
            .partial_cmp(&p[j].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut selected: Vec<usize> = order[..n].to_vec();
    selected.sort_unstable();

    let mut mat = DMatrix::zeros(amb, n);
    let mut built: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (k, &axis) in selected.iter().enumerate() {
        let mut v = DVector::zeros(amb);
        v[axis] = 1.0;
        v -= p.dot(&v) * p;
        for b in &built {
            let proj = b.dot(&v);
            v -= proj * b;
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::invalid_input(
                "degenerate sphere basis; point is not a unit vector",
            ));
        }
        v /= norm;
        mat.set_column(k, &v);
        built.push(v);
    }
    Ok(mat)
}

/// Orthonormal basis of so(n): generators `(Eᵢⱼ − Eⱼᵢ)/√2` in lexicographic
/// order of `(i, j)`, `i < j`, flattened column-major.
fn so_basis(n: usize) -> DMatrix<f64> {
    let d = n * (n - 1) / 2;
    let mut mat = DMatrix::zeros(n * n, d);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut col = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut g = DMatrix::zeros(n, n);
            g[(i, j)] = inv_sqrt2;
            g[(j, i)] = -inv_sqrt2;
            mat.set_column(col, &rotations::flatten(&g));
            col += 1;
        }
    }
    mat
}
