//! Closed-form Bergman geometry of the three model domains.
//!
//! Every domain here is a minimal domain with center at the origin: the
//! Bergman kernel satisfies `K(z, 0) = 1 / Vol` for all interior `z`. The
//! Bergman metric is the complex Hessian of `log K`, so on the disk the line
//! element is `sqrt(2) |dz| / (1 - |z|^2)`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ONE: C64 = C64::new(1.0, 0.0);

/// A point of `C^n`, stored as its complex coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<C64>);

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point(coords)
    }

    pub fn scalar(z: C64) -> Self {
        Point(vec![z])
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![C64::new(0.0, 0.0); n])
    }

    /// Builds a point from interleaved `[re0, im0, re1, im1, ...]` values.
    pub fn from_reals(values: &[f64]) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "a point needs an even, nonzero number of reals, got {}",
                values.len()
            )));
        }
        Ok(Point(
            values.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
        ))
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }
}

impl Deref for Point {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl From<C64> for Point {
    fn from(z: C64) -> Self {
        Point::scalar(z)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

/// The model domains. `Ball(1)` and `Polydisk(1)` are both the unit disk;
/// `Disk` is kept as its own variant because it is the reference case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Domain {
    Disk,
    Ball(usize),
    Polydisk(usize),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Disk => write!(f, "disk"),
            Domain::Ball(n) => write!(f, "ball({n})"),
            Domain::Polydisk(2) => write!(f, "bidisk"),
            Domain::Polydisk(n) => write!(f, "polydisk({n})"),
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parse_dim = |rest: &str| -> Result<usize> {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .unwrap_or(rest);
            let n: usize = inner
                .parse()
                .map_err(|_| Error::InvalidDomain(format!("bad dimension in {s:?}")))?;
            if n == 0 {
                return Err(Error::InvalidDomain("dimension must be positive".into()));
            }
            Ok(n)
        };
        match s.as_str() {
            "disk" | "unit_disk" => Ok(Domain::Disk),
            "bidisk" => Ok(Domain::Polydisk(2)),
            _ => {
                if let Some(rest) = s.strip_prefix("ball") {
                    Ok(Domain::Ball(parse_dim(rest)?))
                } else if let Some(rest) = s.strip_prefix("polydisk") {
                    Ok(Domain::Polydisk(parse_dim(rest)?))
                } else {
                    Err(Error::InvalidDomain(format!(
                        "unknown domain {s:?}; expected disk, ball(n), bidisk or polydisk(n)"
                    )))
                }
            }
        }
    }
}

impl TryFrom<String> for Domain {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Domain> for String {
    fn from(d: Domain) -> String {
        d.to_string()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[inline]
fn inner(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

#[inline]
fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// `artanh(rho)` given `rho` and `1 - rho^2`, accurate near both ends.
#[inline]
fn artanh_split(rho: f64, one_minus_sq: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    0.5 * (2.0 * rho * (1.0 + rho) / one_minus_sq).ln_1p()
}

#[inline]
fn disk_kernel(z: C64, w: C64) -> C64 {
    let d = ONE - z * w.conj();
    (d * d * PI).inv()
}

/// Pseudo-hyperbolic distance on the disk and `1 - rho^2`.
#[inline]
fn disk_pseudo(z: C64, w: C64) -> (f64, f64) {
    let den = (ONE - z * w.conj()).norm_sqr();
    let rho = ((z - w).norm_sqr() / den).sqrt();
    let q = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / den;
    (rho.min(1.0), q)
}

#[inline]
fn disk_distance(z: C64, w: C64) -> f64 {
    let (rho, q) = disk_pseudo(z, w);
    std::f64::consts::SQRT_2 * artanh_split(rho, q)
}

impl Domain {
    pub fn disk() -> Self {
        Domain::Disk
    }

    pub fn ball(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain(
                "ball dimension must be positive".into(),
            ));
        }
        Ok(Domain::Ball(n))
    }

    pub fn polydisk(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDomain(
                "polydisk dimension must be positive".into(),
            ));
        }
        Ok(Domain::Polydisk(n))
    }

    pub fn dimension(&self) -> usize {
        match *self {
            Domain::Disk => 1,
            Domain::Ball(n) | Domain::Polydisk(n) => n,
        }
    }

    pub fn center(&self) -> Point {
        Point::origin(self.dimension())
    }

    /// Lebesgue volume in `R^{2n}`.
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Disk => PI,
            Domain::Ball(n) => PI.powi(n as i32) / factorial(n),
            Domain::Polydisk(n) => PI.powi(n as i32),
        }
    }

    /// Ball and disk are unitarily invariant; the polydisk only torus-invariant.
    pub fn is_ball_like(&self) -> bool {
        matches!(self, Domain::Disk | Domain::Ball(_))
    }

    /// The norm whose unit sphere is the boundary: Euclidean for the
    /// ball, max-modulus for the polydisk.
    pub fn gauge(&self, z: &[C64]) -> f64 {
        match self {
            Domain::Polydisk(_) => z.iter().map(|c| c.norm()).fold(0.0, f64::max),
            _ => norm_sqr(z).sqrt(),
        }
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        z.len() == self.dimension()
            && z.iter().all(|c| c.re.is_finite() && c.im.is_finite())
            && match self {
                Domain::Polydisk(_) => z.iter().all(|c| c.norm_sqr() < 1.0),
                _ => norm_sqr(z) < 1.0,
            }
    }

    pub fn check(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: z.len(),
            });
        }
        if !self.contains(z) {
            return Err(Error::OutsideDomain {
                domain: self.to_string(),
                point: Point(z.to_vec()).to_string(),
            });
        }
        Ok(())
    }

    /// Bergman kernel `K(z, w)`.
    pub fn kernel(&self, z: &[C64], w: &[C64]) -> Result<C64> {
        self.check(z)?;
        self.check(w)?;
        Ok(self.kernel_unchecked(z, w))
    }

    /// Kernel without membership checks; callers guarantee interiority.
    #[inline]
    pub fn kernel_unchecked(&self, z: &[C64], w: &[C64]) -> C64 {
        match *self {
            Domain::Disk => disk_kernel(z[0], w[0]),
            Domain::Ball(n) => {
                let d = ONE - inner(z, w);
                (d.powi(n as i32 + 1) * (PI.powi(n as i32) / factorial(n))).inv()
            }
            Domain::Polydisk(_) => z
                .iter()
                .zip(w)
                .map(|(&a, &b)| disk_kernel(a, b))
                .fold(ONE, |acc, k| acc * k),
        }
    }

    /// `K(z, z)`, real and positive.
    #[inline]
    pub fn diagonal_kernel_unchecked(&self, z: &[C64]) -> f64 {
        match *self {
            Domain::Disk => {
                let d = 1.0 - z[0].norm_sqr();
                1.0 / (PI * d * d)
            }
            Domain::Ball(n) => {
                let d = 1.0 - norm_sqr(z);
                factorial(n) / (PI.powi(n as i32) * d.powi(n as i32 + 1))
            }
            Domain::Polydisk(_) => z
                .iter()
                .map(|c| {
                    let d = 1.0 - c.norm_sqr();
                    1.0 / (PI * d * d)
                })
                .product(),
        }
    }

    /// Normalized kernel `k_a(z) = K(z, a) / sqrt(K(a, a))`.
    pub fn normalized_kernel(&self, a: &[C64], z: &[C64]) -> Result<C64> {
        self.check(a)?;
        self.check(z)?;
        Ok(self.normalized_kernel_unchecked(a, z))
    }

    #[inline]
    pub fn normalized_kernel_unchecked(&self, a: &[C64], z: &[C64]) -> C64 {
        self.kernel_unchecked(z, a) / self.diagonal_kernel_unchecked(a).sqrt()
    }

    /// Bergman distance.
    pub fn distance(&self, z: &[C64], w: &[C64]) -> Result<f64> {
        self.check(z)?;
        self.check(w)?;
        Ok(self.distance_unchecked(z, w))
    }

    #[inline]
    pub fn distance_unchecked(&self, z: &[C64], w: &[C64]) -> f64 {
        match *self {
            Domain::Disk => disk_distance(z[0], w[0]),
            Domain::Ball(n) => {
                let ip = inner(z, w);
                let den = (ONE - ip).norm_sqr();
                let zz = norm_sqr(z);
                let ww = norm_sqr(w);
                let diff: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
                let num = (diff + ip.norm_sqr() - zz * ww).max(0.0);
                let rho = (num / den).sqrt().min(1.0);
                let q = (1.0 - zz) * (1.0 - ww) / den;
                ((n + 1) as f64).sqrt() * artanh_split(rho, q)
            }
            Domain::Polydisk(_) => z
                .iter()
                .zip(w)
                .map(|(&a, &b)| disk_distance(a, b).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Distance from the center; cheaper than the general formula.
    #[inline]
    pub fn radial_distance(&self, z: &[C64]) -> f64 {
        match *self {
            Domain::Disk => {
                let t = z[0].norm();
                std::f64::consts::SQRT_2 * t.atanh()
            }
            Domain::Ball(n) => ((n + 1) as f64).sqrt() * norm_sqr(z).sqrt().atanh(),
            Domain::Polydisk(_) => z
                .iter()
                .map(|c| 2.0 * c.norm().atanh().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Euclidean radius `t` of a point on a ray at Bergman distance `big_r`
    /// from the center (disk and ball), or of one polydisk factor.
    pub fn radius_for_distance(&self, big_r: f64) -> f64 {
        match *self {
            Domain::Disk | Domain::Polydisk(_) => (big_r / std::f64::consts::SQRT_2).tanh(),
            Domain::Ball(n) => (big_r / ((n + 1) as f64).sqrt()).tanh(),
        }
    }

    /// Inverse of [`Domain::radius_for_distance`].
    pub fn distance_for_radius(&self, t: f64) -> f64 {
        match *self {
            Domain::Disk | Domain::Polydisk(_) => std::f64::consts::SQRT_2 * t.atanh(),
            Domain::Ball(n) => ((n + 1) as f64).sqrt() * t.atanh(),
        }
    }

    /// Euclidean distance to the topological boundary.
    pub fn boundary_distance(&self, z: &[C64]) -> Result<f64> {
        self.check(z)?;
        Ok(self.boundary_distance_unchecked(z))
    }

    #[inline]
    pub fn boundary_distance_unchecked(&self, z: &[C64]) -> f64 {
        1.0 - self.gauge(z)
    }

    /// Lebesgue volume of the metric ball `B(a, r)` in closed form. Available
    /// for the disk only; other domains go through quadrature.
    pub fn disk_metric_ball_volume(a: C64, r: f64) -> f64 {
        let rho = (r / std::f64::consts::SQRT_2).tanh();
        let aa = a.norm_sqr();
        PI * rho * rho * (1.0 - aa).powi(2) / (1.0 - rho * rho * aa).powi(2)
    }

    /// Limit of `sup |K(z,a)| / K(a,a)` over `beta(z,a) <= r` as `a` runs to
    /// the boundary, where a closed form exists (disk and ball).
    pub fn kernel_ratio_limit(&self, r: f64) -> Option<f64> {
        match *self {
            Domain::Disk | Domain::Ball(_) => {
                let n = self.dimension();
                let tau = self.radius_for_distance(r);
                Some((1.0 + tau).powi(n as i32 + 1))
            }
            Domain::Polydisk(_) => None,
        }
    }

    pub fn automorphism(&self, a: &[C64]) -> Result<AutomorphismChart> {
        self.check(a)?;
        Ok(AutomorphismChart::new(*self, Point(a.to_vec())))
    }

    /// Default boundary-approach directions, normalized so that `s * dir`
    /// sits at boundary distance `1 - s`. The polydisk gets the distinguished
    /// boundary direction and a face direction.
    pub fn default_directions(&self) -> Vec<Point> {
        let n = self.dimension();
        match self {
            Domain::Disk => vec![
                Point::scalar(C64::new(1.0, 0.0)),
                Point::scalar(C64::from_polar(1.0, 2.0)),
            ],
            Domain::Ball(_) => {
                let mut e1 = Point::origin(n);
                e1.0[0] = ONE;
                let mut dirs = vec![e1];
                if n > 1 {
                    let c = 1.0 / (n as f64).sqrt();
                    dirs.push(Point(
                        (0..n).map(|k| C64::from_polar(c, 0.7 * k as f64)).collect(),
                    ));
                }
                dirs
            }
            Domain::Polydisk(_) => {
                let mut face = Point::origin(n);
                face.0[0] = ONE;
                let distinguished = Point(vec![ONE; n]);
                vec![distinguished, face]
            }
        }
    }

    /// Normalizes a direction so the ray `s * dir` leaves the domain at `s = 1`.
    pub fn normalize_direction(&self, dir: &[C64]) -> Result<Point> {
        if dir.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: dir.len(),
            });
        }
        let g = self.gauge(dir);
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(
                "ray direction must be nonzero".into(),
            ));
        }
        Ok(Point(dir.iter().map(|c| c / g).collect()))
    }

    /// Sampling directions on the unit sphere of `C^n` (real-rotated
    /// coordinate vectors and a few mixed ones). The set is closed under
    /// negation.
    pub fn sphere_directions(&self, per_plane: usize) -> Vec<Point> {
        let n = self.dimension();
        let m = per_plane.max(2) & !1;
        let mut out = Vec::new();
        for k in 0..n {
            for j in 0..m {
                let mut p = Point::origin(n);
                p.0[k] = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
                out.push(p);
            }
        }
        if n > 1 {
            let c = 1.0 / (n as f64).sqrt();
            for j in 0..m {
                let phase = 2.0 * PI * j as f64 / m as f64;
                out.push(Point(
                    (0..n)
                        .map(|k| C64::from_polar(c, phase + k as f64 * 0.9))
                        .collect(),
                ));
            }
        }
        out
    }
}

/// The standard involutive automorphism exchanging `base` and the center.
#[derive(Clone, Debug)]
pub struct AutomorphismChart {
    domain: Domain,
    base: Point,
    base_sq: f64,
    scale: f64,
}

impl AutomorphismChart {
    fn new(domain: Domain, base: Point) -> Self {
        let base_sq = norm_sqr(&base);
        let scale = (1.0 - base_sq).sqrt();
        AutomorphismChart {
            domain,
            base,
            base_sq,
            scale,
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn forward(&self, z: &[C64]) -> Point {
        let mut out = vec![C64::new(0.0, 0.0); z.len()];
        self.forward_into(z, &mut out);
        Point(out)
    }

    /// The maps are involutions, so the inverse is the forward map.
    pub fn inverse(&self, z: &[C64]) -> Point {
        self.forward(z)
    }

    #[inline]
    pub fn forward_into(&self, z: &[C64], out: &mut [C64]) {
        let a = &self.base;
        match self.domain {
            Domain::Disk => {
                out[0] = (a[0] - z[0]) / (ONE - a[0].conj() * z[0]);
            }
            Domain::Polydisk(_) => {
                for i in 0..z.len() {
                    out[i] = (a[i] - z[i]) / (ONE - a[i].conj() * z[i]);
                }
            }
            Domain::Ball(_) => {
                let za = inner(z, a);
                let den = ONE - za;
                if self.base_sq == 0.0 {
                    for i in 0..z.len() {
                        out[i] = -z[i];
                    }
                    return;
                }
                let coef = za / self.base_sq;
                for i in 0..z.len() {
                    let p = a[i] * coef;
                    let q = z[i] - p;
                    out[i] = (a[i] - p - q * self.scale) / den;
                }
            }
        }
    }

    /// Complex Jacobian determinant `det J(phi_a, z)`.
    #[inline]
    pub fn jacobian_det(&self, z: &[C64]) -> C64 {
        let a = &self.base;
        match self.domain {
            Domain::Disk => {
                let d = ONE - a[0].conj() * z[0];
                C64::from(self.base_sq - 1.0) / (d * d)
            }
            Domain::Polydisk(_) => a
                .iter()
                .zip(z)
                .map(|(ai, zi)| {
                    let d = ONE - ai.conj() * zi;
                    C64::from(ai.norm_sqr() - 1.0) / (d * d)
                })
                .fold(ONE, |acc, x| acc * x),
            Domain::Ball(n) => {
                let d = ONE - inner(z, a);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                C64::from(sign * self.scale.powi(n as i32 + 1)) / d.powi(n as i32 + 1)
            }
        }
    }

    /// `|det J(phi_a, z)|^2`, the real Jacobian of the map.
    #[inline]
    pub fn jacobian_abs_sq(&self, z: &[C64]) -> f64 {
        let a = &self.base;
        match self.domain {
            Domain::Disk => {
                let d = (ONE - a[0].conj() * z[0]).norm_sqr();
                (1.0 - self.base_sq).powi(2) / (d * d)
            }
            Domain::Polydisk(_) => a
                .iter()
                .zip(z)
                .map(|(ai, zi)| {
                    let d = (ONE - ai.conj() * zi).norm_sqr();
                    (1.0 - ai.norm_sqr()).powi(2) / (d * d)
                })
                .product(),
            Domain::Ball(n) => {
                let d = (ONE - inner(z, a)).norm_sqr();
                ((1.0 - self.base_sq) / d).powi(n as i32 + 1)
            }
        }
    }

    /// `1 - |phi_a(v)_i|^2` for one coordinate of a polydisk chart, without
    /// the cancellation of subtracting from one.
    #[inline]
    pub fn coordinate_defect(&self, i: usize, vi: C64) -> f64 {
        let ai = self.base[i];
        (1.0 - ai.norm_sqr()) * (1.0 - vi.norm_sqr()) / (ONE - ai.conj() * vi).norm_sqr()
    }

    /// `1 - |phi_a(v)|^2`, computed from the identity
    /// `(1 - |a|^2)(1 - |v|^2) / |1 - <v, a>|^2` so it stays accurate near the
    /// boundary. On the polydisk this is the product of coordinate defects.
    #[inline]
    pub fn boundary_defect(&self, v: &[C64]) -> f64 {
        match self.domain {
            Domain::Polydisk(_) => (0..v.len())
                .map(|i| self.coordinate_defect(i, v[i]))
                .product(),
            _ => {
                (1.0 - self.base_sq) * (1.0 - norm_sqr(v)) / (ONE - inner(v, &self.base)).norm_sqr()
            }
        }
    }

    pub fn inverse_jacobian_det(&self, z: &[C64]) -> C64 {
        self.jacobian_det(z)
    }
}

/// Where the Jacobian determinant in an identity check comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianSource {
    ClosedForm,
    FiniteDifference,
}

/// Complex Jacobian determinant of `map` at `z` from a fourth-order central
/// difference along the real coordinate axes (valid for holomorphic maps).
pub fn finite_difference_jacobian_det<F>(map: F, z: &[C64], h: f64) -> C64
where
    F: Fn(&[C64]) -> Point,
{
    let n = z.len();
    let mut jac = DMatrix::<C64>::zeros(n, n);
    let mut probe = z.to_vec();
    for j in 0..n {
        let eval = |probe: &mut Vec<C64>, step: f64| {
            probe[j] = z[j] + step;
            let v = map(probe);
            probe[j] = z[j];
            v
        };
        let p1 = eval(&mut probe, h);
        let m1 = eval(&mut probe, -h);
        let p2 = eval(&mut probe, 2.0 * h);
        let m2 = eval(&mut probe, -2.0 * h);
        for i in 0..n {
            jac[(i, j)] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h);
        }
    }
    jac.determinant()
}

/// Relative residuals of the two Jacobian identities linking automorphisms
/// to the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JacobianResiduals {
    pub forward: f64,
    pub inverse: f64,
}

impl JacobianResiduals {
    pub fn max(&self) -> f64 {
        self.forward.max(self.inverse)
    }
}

/// Checks `|det J(phi_a, z)|^2 = |K(z,a)|^2 / (K(t,t) K(a,a))` and
/// `|det J(phi_a^{-1}, z)|^2 = K(t,t) K(a,a) / |K(phi_a^{-1}(z), a)|^2`.
pub fn verify_jacobian_identity(
    domain: Domain,
    a: &[C64],
    z: &[C64],
    source: JacobianSource,
) -> Result<JacobianResiduals> {
    domain.check(z)?;
    let chart = domain.automorphism(a)?;
    let t = domain.center();
    let ktt = domain.diagonal_kernel_unchecked(&t);
    let kaa = domain.diagonal_kernel_unchecked(a);
    let (det_fwd, det_inv) = match source {
        JacobianSource::ClosedForm => (chart.jacobian_det(z), chart.inverse_jacobian_det(z)),
        JacobianSource::FiniteDifference => {
            let h = 1e-4 * domain.boundary_distance_unchecked(z).clamp(1e-3, 0.5);
            (
                finite_difference_jacobian_det(|p| chart.forward(p), z, h),
                finite_difference_jacobian_det(|p| chart.inverse(p), z, h),
            )
        }
    };
    let lhs1 = det_fwd.norm_sqr();
    let rhs1 = domain.kernel_unchecked(z, a).norm_sqr() / (ktt * kaa);
    let pre = chart.inverse(z);
    let lhs2 = det_inv.norm_sqr();
    let rhs2 = ktt * kaa / domain.kernel_unchecked(&pre, a).norm_sqr();
    Ok(JacobianResiduals {
        forward: (lhs1 - rhs1).abs() / rhs1,
        inverse: (lhs2 - rhs2).abs() / rhs2,
    })
}

/// `|det J(phi_a, phi_a^{-1}(z)) det J(phi_a^{-1}, z) - 1|`.
pub fn chain_rule_residual(domain: Domain, a: &[C64], z: &[C64]) -> Result<f64> {
    domain.check(z)?;
    let chart = domain.automorphism(a)?;
    let pre = chart.inverse(z);
    Ok((chart.jacobian_det(&pre) * chart.inverse_jacobian_det(z) - ONE).norm())
}
