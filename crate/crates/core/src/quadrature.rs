//! Quadrature rules over the model domains, their metric balls and their
//! boundary truncations.
//!
//! All rules use the coordinates `s_i = |z_i|^2` and phases `theta_i`, in
//! which Lebesgue measure is `2^{-n} prod ds_i dtheta_i`. The ball is the
//! simplex `sum s_i <= 1` and the polydisk the unit cube, so polynomials in
//! `(z, conj z)` become polynomials in `s` after the exact phase average.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{AutomorphismChart, Domain, Point, C64};
use crate::error::{Error, Result};

pub const MIN_RESOLUTION: usize = 4;

const CHUNK: usize = 2048;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
        .collect()
}

/// How radial nodes are placed in the squared-radius variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialScheme {
    /// Gauss-Legendre in `s = |z|^2`.
    Polar,
    /// Gauss-Legendre in `x` with `s = 1 - (1 - x)^exponent`, clustering
    /// nodes at the boundary so that `(1 - s)^{-t}` and `(1 - s)^t` become
    /// smooth.
    Graded { exponent: u32 },
}

impl RadialScheme {
    pub const DEFAULT_GRADED: RadialScheme = RadialScheme::Graded { exponent: 4 };
}

/// The region a rule integrates over.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Domain,
    /// Points with boundary distance at least `margin`.
    Truncated {
        margin: f64,
    },
    MetricBall {
        center: Point,
        radius: f64,
    },
    /// A rule restricted by a predicate; atoms are not tied to it.
    Subset,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    domain: Domain,
    dim: usize,
    nodes: Vec<C64>,
    weights: Vec<f64>,
    region: Region,
}

impl QuadratureRule {
    fn empty(domain: Domain, region: Region) -> Self {
        QuadratureRule {
            domain,
            dim: domain.dimension(),
            nodes: Vec::new(),
            weights: Vec::new(),
            region,
        }
    }

    fn push(&mut self, z: &[C64], w: f64) {
        debug_assert_eq!(z.len(), self.dim);
        self.nodes.extend_from_slice(z);
        self.weights.push(w);
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[C64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[C64], f64)> + '_ {
        self.nodes
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.sum_real(|_, w| w)
    }

    /// Whether a point (an atom, say) lies in the region this rule covers.
    pub fn region_contains(&self, z: &[C64]) -> bool {
        match &self.region {
            Region::Domain | Region::Subset => self.domain.contains(z),
            Region::Truncated { margin } => {
                self.domain.contains(z) && self.domain.boundary_distance_unchecked(z) >= *margin
            }
            Region::MetricBall { center, radius } => {
                self.domain.contains(z) && self.domain.distance_unchecked(center, z) <= *radius
            }
        }
    }

    /// Keeps the nodes satisfying `keep`.
    pub fn restrict<F: Fn(&[C64]) -> bool>(&self, keep: F) -> QuadratureRule {
        let mut out = QuadratureRule::empty(self.domain, Region::Subset);
        for (z, w) in self.iter() {
            if keep(z) {
                out.push(z, w);
            }
        }
        out
    }

    /// Sum of `f(node, weight)` over all nodes with a fixed-order reduction,
    /// so results do not depend on the thread count.
    pub fn sum_complex<F>(&self, f: F) -> C64
    where
        F: Fn(&[C64], f64) -> C64 + Sync,
    {
        let n = self.len();
        let partials: Vec<C64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = C64::new(0.0, 0.0);
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    acc += f(self.node(i), self.weights[i]);
                }
                acc
            })
            .collect();
        partials.into_iter().sum()
    }

    pub fn sum_real<F>(&self, f: F) -> f64
    where
        F: Fn(&[C64], f64) -> f64 + Sync,
    {
        let n = self.len();
        let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = 0.0;
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    acc += f(self.node(i), self.weights[i]);
                }
                acc
            })
            .collect();
        partials.into_iter().sum()
    }

    /// The image of this rule under the chart: nodes `phi(u)`, weights scaled
    /// by `|det J(phi, u)|^2`.
    pub fn push_forward(&self, chart: &AutomorphismChart, region: Region) -> QuadratureRule {
        let mut out = QuadratureRule::empty(self.domain, region);
        out.nodes.reserve(self.nodes.len());
        out.weights.reserve(self.len());
        let mut buf = vec![C64::new(0.0, 0.0); self.dim];
        for (u, w) in self.iter() {
            chart.forward_into(u, &mut buf);
            out.nodes.extend_from_slice(&buf);
            out.weights.push(w * chart.jacobian_abs_sq(u));
        }
        out
    }
}

/// Nodes and weights for `int_0^upper g(s) ds`.
fn radial_nodes(n: usize, scheme: RadialScheme, upper: f64) -> Vec<(f64, f64)> {
    match scheme {
        RadialScheme::Polar => gauss_legendre_on(n, 0.0, upper),
        RadialScheme::Graded { exponent } => {
            let q = exponent.max(1) as i32;
            gauss_legendre_on(n, 0.0, 1.0)
                .into_iter()
                .map(|(x, w)| {
                    let y = 1.0 - x;
                    let s = 1.0 - y.powi(q);
                    (upper * s, upper * w * q as f64 * y.powi(q - 1))
                })
                .collect()
        }
    }
}

/// Rule for the standard simplex `{sigma >= 0, sum sigma = 1}` in `n`
/// barycentric coordinates, collapsed onto a cube; weights sum to `1/(n-1)!`.
fn simplex_nodes(n: usize, per_axis: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(n), 1.0, 1.0)];
    let gl = gauss_legendre_on(per_axis, 0.0, 1.0);
    for k in 0..n.saturating_sub(1) {
        let power = (n - 2 - k) as i32;
        let mut next = Vec::with_capacity(out.len() * per_axis);
        for (sig, w, rest) in &out {
            for &(x, wx) in &gl {
                let mut s: Vec<f64> = sig.clone();
                s.push(rest * x);
                next.push((s, w * wx * (1.0 - x).powi(power), rest * (1.0 - x)));
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|(mut s, w, rest)| {
            s.push(rest);
            (s, w)
        })
        .collect()
}

fn angle_count(resolution: usize) -> usize {
    2 * resolution + 2
}

/// Appends `z_i = sqrt(s_i) e^{i theta}` over all phase combinations.
fn push_with_phases(rule: &mut QuadratureRule, s: &[f64], base_weight: f64, n_theta: usize) {
    let n = s.len();
    let dtheta = 2.0 * PI / n_theta as f64;
    let w = base_weight * dtheta.powi(n as i32) * 0.5f64.powi(n as i32);
    let radii: Vec<f64> = s.iter().map(|v| v.max(0.0).sqrt()).collect();
    let total = n_theta.pow(n as u32);
    let mut z = vec![C64::new(0.0, 0.0); n];
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..n {
            let j = rem % n_theta;
            rem /= n_theta;
            z[i] = C64::from_polar(radii[i], dtheta * j as f64);
        }
        rule.push(&z, w);
    }
}

/// Ball-shaped rule (`sum s_i <= upper`) on the ball or disk.
fn ball_rule(
    domain: Domain,
    n: usize,
    resolution: usize,
    scheme: RadialScheme,
    upper: f64,
    region: Region,
) -> QuadratureRule {
    let mut rule = QuadratureRule::empty(domain, region);
    let n_theta = angle_count(resolution);
    let radial = radial_nodes(resolution, scheme, upper);
    let simplex = simplex_nodes(n, resolution);
    let mut s = vec![0.0; n];
    for &(big_s, ws) in &radial {
        let jac = big_s.powi(n as i32 - 1);
        for (sigma, wsig) in &simplex {
            for i in 0..n {
                s[i] = big_s * sigma[i];
            }
            push_with_phases(&mut rule, &s, ws * jac * wsig, n_theta);
        }
    }
    rule
}

/// Tensor product over polydisk factors of one-factor `(z, w)` lists.
fn tensor_rule(domain: Domain, factor: &[(C64, f64)], n: usize, region: Region) -> QuadratureRule {
    let mut rule = QuadratureRule::empty(domain, region);
    let m = factor.len();
    let total = m.pow(n as u32);
    let mut z = vec![C64::new(0.0, 0.0); n];
    for idx in 0..total {
        let mut rem = idx;
        let mut w = 1.0;
        for zi in z.iter_mut() {
            let (p, pw) = factor[rem % m];
            rem /= m;
            *zi = p;
            w *= pw;
        }
        rule.push(&z, w);
    }
    rule
}

fn disk_factor(resolution: usize, scheme: RadialScheme) -> Vec<(C64, f64)> {
    let n_theta = angle_count(resolution);
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut out = Vec::with_capacity(resolution * n_theta);
    for (s, ws) in radial_nodes(resolution, scheme, 1.0) {
        let r = s.sqrt();
        for j in 0..n_theta {
            out.push((C64::from_polar(r, dtheta * j as f64), 0.5 * ws * dtheta));
        }
    }
    out
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall {
            min: MIN_RESOLUTION,
            got: resolution,
        });
    }
    Ok(())
}

/// Polar tensor rule over the whole domain: `resolution` Gauss-Legendre
/// radial nodes and `2 * resolution + 2` uniform phases per coordinate.
pub fn build_quadrature(domain: Domain, resolution: usize) -> Result<QuadratureRule> {
    build_rule(domain, resolution, RadialScheme::Polar)
}

/// Same layout with nodes graded toward the boundary.
pub fn build_graded_quadrature(domain: Domain, resolution: usize) -> Result<QuadratureRule> {
    build_rule(domain, resolution, RadialScheme::DEFAULT_GRADED)
}

pub fn build_rule(
    domain: Domain,
    resolution: usize,
    scheme: RadialScheme,
) -> Result<QuadratureRule> {
    check_resolution(resolution)?;
    Ok(match domain {
        Domain::Disk | Domain::Ball(_) => ball_rule(
            domain,
            domain.dimension(),
            resolution,
            scheme,
            1.0,
            Region::Domain,
        ),
        Domain::Polydisk(n) => {
            tensor_rule(domain, &disk_factor(resolution, scheme), n, Region::Domain)
        }
    })
}

/// Rule over the metric ball `B(center, r)` of the center: a Euclidean ball
/// for disk and ball, the set `sum beta_i^2 <= r^2` for the polydisk.
pub fn build_centered_ball_quadrature(
    domain: Domain,
    r: f64,
    resolution: usize,
) -> Result<QuadratureRule> {
    check_resolution(resolution)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let region = Region::MetricBall {
        center: domain.center(),
        radius: r,
    };
    Ok(match domain {
        Domain::Disk | Domain::Ball(_) => {
            let tau = domain.radius_for_distance(r);
            ball_rule(
                domain,
                domain.dimension(),
                resolution,
                RadialScheme::Polar,
                tau * tau,
                region,
            )
        }
        Domain::Polydisk(n) => polydisk_centered_ball(domain, n, r, resolution, region),
    })
}

/// Hyperbolic radii `b_i` of the factors range over the positive orthant of
/// the Euclidean ball of radius `r`, written in spherical coordinates.
fn polydisk_centered_ball(
    domain: Domain,
    n: usize,
    r: f64,
    resolution: usize,
    region: Region,
) -> QuadratureRule {
    let mut rule = QuadratureRule::empty(domain, region);
    let n_theta = angle_count(resolution);
    let dtheta = 2.0 * PI / n_theta as f64;
    let radial = gauss_legendre_on(resolution, 0.0, r);
    let angular = gauss_legendre_on(resolution, 0.0, 0.5 * PI);
    // orthant directions with their spherical Jacobian
    let mut dirs: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    let mut sin_prod: Vec<f64> = vec![1.0];
    for k in 0..n.saturating_sub(1) {
        let power = (n - 2 - k) as i32;
        let mut next = Vec::new();
        let mut next_sin = Vec::new();
        for ((d, w), sp) in dirs.iter().zip(&sin_prod) {
            for &(psi, wpsi) in &angular {
                let mut v = d.clone();
                v.push(sp * psi.cos());
                next.push((v, w * wpsi * psi.sin().powi(power)));
                next_sin.push(sp * psi.sin());
            }
        }
        dirs = next;
        sin_prod = next_sin;
    }
    for ((d, _), sp) in dirs.iter_mut().zip(&sin_prod) {
        d.push(*sp);
    }
    let mut z = vec![C64::new(0.0, 0.0); n];
    for &(big_r, wr) in &radial {
        let jr = big_r.powi(n as i32 - 1);
        for (omega, wo) in &dirs {
            let mut base = wr * jr * wo;
            let mut moduli = Vec::with_capacity(n);
            for &o in omega {
                let b = big_r * o;
                let t = (b / SQRT_2).tanh();
                let dt = (1.0 - t * t) / SQRT_2;
                base *= t * dt;
                moduli.push(t);
            }
            let total = n_theta.pow(n as u32);
            let w = base * dtheta.powi(n as i32);
            for idx in 0..total {
                let mut rem = idx;
                for i in 0..n {
                    z[i] = C64::from_polar(moduli[i], dtheta * (rem % n_theta) as f64);
                    rem /= n_theta;
                }
                rule.push(&z, w);
            }
        }
    }
    rule
}

/// Rule over `B(a, r)`: the centered ball rule pushed through the
/// involutive automorphism exchanging `a` and the center.
pub fn build_metric_ball_quadrature(
    domain: Domain,
    a: &[C64],
    r: f64,
    resolution: usize,
) -> Result<QuadratureRule> {
    let chart = domain.automorphism(a)?;
    Ok(MetricBallTemplate::new(domain, r, resolution)?.at_chart(&chart))
}

/// A centered ball rule kept around so that many metric balls of the same
/// radius can be produced without rebuilding it.
#[derive(Clone, Debug)]
pub struct MetricBallTemplate {
    centered: QuadratureRule,
    radius: f64,
}

impl MetricBallTemplate {
    pub fn new(domain: Domain, r: f64, resolution: usize) -> Result<Self> {
        Ok(MetricBallTemplate {
            centered: build_centered_ball_quadrature(domain, r, resolution)?,
            radius: r,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centered(&self) -> &QuadratureRule {
        &self.centered
    }

    pub fn at(&self, a: &[C64]) -> Result<QuadratureRule> {
        let chart = self.centered.domain.automorphism(a)?;
        Ok(self.at_chart(&chart))
    }

    pub fn at_chart(&self, chart: &AutomorphismChart) -> QuadratureRule {
        self.centered.push_forward(
            chart,
            Region::MetricBall {
                center: chart.base().clone(),
                radius: self.radius,
            },
        )
    }

    /// Volume of `B(a, r)` without materializing the pushed rule.
    pub fn volume_at(&self, chart: &AutomorphismChart) -> f64 {
        self.centered.sum_real(|u, w| w * chart.jacobian_abs_sq(u))
    }
}

/// Node placement for rules on the truncated domain `{dist >= margin}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncatedScheme {
    /// Gauss-Legendre panels in `s = |z|^2`, geometric in `1 - s`.
    Geometric,
    /// Gauss-Legendre panels of unit width in Bergman distance from the center.
    Hyperbolic,
}

/// Rule on `{boundary distance >= margin}` whose cells have Bergman size of
/// roughly `spacing`: the ring at squared radius `s` gets a phase count
/// proportional to its metric circumference.
pub fn build_truncated_quadrature(
    domain: Domain,
    margin: f64,
    spacing: f64,
    scheme: TruncatedScheme,
) -> Result<QuadratureRule> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "boundary margin must lie in (0, 1), got {margin}"
        )));
    }
    if !(spacing > 0.0 && spacing <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cell spacing must lie in (0, 2], got {spacing}"
        )));
    }
    let region = Region::Truncated { margin };
    let n = domain.dimension();
    let t_max = 1.0 - margin;
    let curv = match domain {
        Domain::Ball(n) => ((n + 1) as f64).sqrt(),
        _ => SQRT_2,
    };
    // (t, weight for int g(S) S^{n-1} dS) with S = t^2
    let radial: Vec<(f64, f64)> = match scheme {
        TruncatedScheme::Geometric => {
            let s_max = t_max * t_max;
            let mut edges = vec![0.0];
            let mut gap = 0.5;
            while 1.0 - gap < s_max {
                edges.push(1.0 - gap);
                gap *= 0.5;
            }
            edges.push(s_max);
            let per = ((1.0 / spacing).ceil() as usize).max(4);
            edges
                .windows(2)
                .flat_map(|e| gauss_legendre_on(per, e[0], e[1]))
                .map(|(s, w)| (s.sqrt(), w * s.powi(n as i32 - 1)))
                .collect()
        }
        TruncatedScheme::Hyperbolic => {
            let r_max = curv * t_max.atanh();
            let panels = r_max.ceil().max(1.0) as usize;
            let per = ((2.0 / spacing).ceil() as usize).max(4);
            (0..panels)
                .flat_map(|p| {
                    let a = r_max * p as f64 / panels as f64;
                    let b = r_max * (p + 1) as f64 / panels as f64;
                    gauss_legendre_on(per, a, b)
                })
                .map(|(big_r, w)| {
                    let t = (big_r / curv).tanh();
                    let dt = (1.0 - t * t) / curv;
                    // S^{n-1} dS = 2 t^{2n-1} dt
                    (t, 2.0 * w * dt * t.powi(2 * n as i32 - 1))
                })
                .collect()
        }
    };
    Ok(match domain {
        Domain::Disk => {
            let mut rule = QuadratureRule::empty(domain, region);
            for (k, &(t, w)) in radial.iter().enumerate() {
                // a full ring carries dV = pi dS
                let w = PI * w;
                let circ = curv * 2.0 * PI * t / (1.0 - t * t);
                let m = ((circ / spacing).ceil() as usize).max(8);
                let offset = if k % 2 == 1 { 0.5 } else { 0.0 };
                for j in 0..m {
                    let theta = 2.0 * PI * (j as f64 + offset) / m as f64;
                    rule.push(&[C64::from_polar(t, theta)], w / m as f64);
                }
            }
            rule
        }
        Domain::Polydisk(n) => {
            let factor = build_truncated_quadrature(Domain::Disk, margin, spacing, scheme)?;
            let pairs: Vec<(C64, f64)> = factor.iter().map(|(z, w)| (z[0], w)).collect();
            tensor_rule(domain, &pairs, n, region)
        }
        Domain::Ball(_) => {
            // the sphere rule is sized by the largest metric stretch (the
            // complex normal direction at the outermost shell)
            let stretch = curv * t_max / (1.0 - t_max * t_max);
            let res = ((stretch * PI / spacing).ceil() as usize).max(MIN_RESOLUTION);
            let n_theta = angle_count(res);
            let simplex = simplex_nodes(n, res);
            let mut rule = QuadratureRule::empty(domain, region);
            let mut s = vec![0.0; n];
            for &(t, w) in &radial {
                for (sigma, wsig) in &simplex {
                    for i in 0..n {
                        s[i] = t * t * sigma[i];
                    }
                    push_with_phases(&mut rule, &s, w * wsig, n_theta);
                }
            }
            rule
        }
    })
}

/// Volume of `B(a, r)` from a pushed-forward metric ball rule, with the
/// relative change under one refinement of the resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallVolume {
    pub value: f64,
    pub refined: f64,
    pub relative_change: f64,
    /// Set when the two resolutions disagree by more than 0.1%.
    pub coarse: bool,
}

pub const VOLUME_REFINEMENT_TOLERANCE: f64 = 1e-3;

pub fn metric_ball_volume(
    domain: Domain,
    a: &[C64],
    r: f64,
    resolution: usize,
) -> Result<BallVolume> {
    let chart = domain.automorphism(a)?;
    let coarse = MetricBallTemplate::new(domain, r, resolution)?.volume_at(&chart);
    let fine = MetricBallTemplate::new(domain, r, 2 * resolution)?.volume_at(&chart);
    let rel = (fine - coarse).abs() / fine;
    Ok(BallVolume {
        value: fine,
        refined: coarse,
        relative_change: rel,
        coarse: rel > VOLUME_REFINEMENT_TOLERANCE,
    })
}

/// Volume of `B(a, r)` as the rule-weighted indicator of `beta(a, .) <= r`;
/// converges slowly, kept as an independent route for cross-checks.
pub fn metric_ball_volume_indicator(
    domain: Domain,
    a: &[C64],
    r: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    domain.check(a)?;
    Ok(rule.sum_real(|z, w| {
        if domain.distance_unchecked(a, z) <= r {
            w
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k} q={q}");
            }
        }
    }

    #[test]
    fn simplex_weights() {
        for n in 1..=4usize {
            let total: f64 = simplex_nodes(n, 6).iter().map(|(_, w)| w).sum();
            let fact: f64 = (1..n).map(|k| k as f64).product();
            assert_relative_eq!(total, 1.0 / fact, epsilon = 1e-13);
            for (s, _) in simplex_nodes(n, 3) {
                assert_relative_eq!(s.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn volumes_are_exact() {
        let r = build_quadrature(Domain::Disk, 32).unwrap();
        assert!((r.total_weight() - PI).abs() < 1e-10);
        let r = build_quadrature(Domain::Polydisk(2), 16).unwrap();
        assert!((r.total_weight() - PI * PI).abs() < 1e-8);
        let r = build_quadrature(Domain::Ball(2), 8).unwrap();
        assert!((r.total_weight() - PI * PI / 2.0).abs() < 1e-10);
        let r = build_quadrature(Domain::Ball(3), 5).unwrap();
        assert!((r.total_weight() - PI.powi(3) / 6.0).abs() < 1e-10);
        let g = build_graded_quadrature(Domain::Disk, 32).unwrap();
        assert!((g.total_weight() - PI).abs() < 1e-10);
    }

    #[test]
    fn disk_second_moment() {
        let r = build_quadrature(Domain::Disk, 32).unwrap();
        let m = r.sum_real(|z, w| w * z[0].norm_sqr());
        assert!((m - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn refuses_low_resolution() {
        assert!(matches!(
            build_quadrature(Domain::Disk, 3),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn ball_monomial_moments() {
        // int_B |z1|^2 |z2|^4 dV = pi^2 1! 2! / (2 + 3)!
        let r = build_quadrature(Domain::Ball(2), 8).unwrap();
        let m = r.sum_real(|z, w| w * z[0].norm_sqr() * z[1].norm_sqr().powi(2));
        assert_relative_eq!(m, PI * PI * 2.0 / 120.0, epsilon = 1e-12);
        let off = r.sum_complex(|z, w| z[0] * z[1].conj() * w);
        assert!(off.norm() < 1e-13);
    }

    #[test]
    fn metric_ball_volumes() {
        let v = metric_ball_volume(Domain::Disk, &[C64::new(0.0, 0.0)], 1.0, 16).unwrap();
        assert_relative_eq!(
            v.value,
            Domain::disk_metric_ball_volume(C64::new(0.0, 0.0), 1.0),
            epsilon = 1e-12
        );
        assert!(!v.coarse);
        let a = C64::new(0.5, 0.0);
        let v = metric_ball_volume(Domain::Disk, &[a], 1.0, 16).unwrap();
        assert_relative_eq!(
            v.value,
            Domain::disk_metric_ball_volume(a, 1.0),
            epsilon = 1e-10
        );
        let v = metric_ball_volume(Domain::Disk, &[C64::new(0.0, 0.0)], 20.0, 16).unwrap();
        assert!((v.value - PI).abs() < 1e-6);
    }

    #[test]
    fn polydisk_ball_matches_indicator_route() {
        let d = Domain::Polydisk(2);
        let a = [C64::new(0.3, 0.1), C64::new(-0.2, 0.0)];
        let exact = metric_ball_volume(d, &a, 1.0, 12).unwrap();
        assert!(!exact.coarse, "{exact:?}");
        let rule = build_quadrature(d, 40).unwrap();
        let ind = metric_ball_volume_indicator(d, &a, 1.0, &rule).unwrap();
        assert!(
            (ind - exact.value).abs() / exact.value < 0.02,
            "{ind} vs {}",
            exact.value
        );
    }

    #[test]
    fn ball_metric_ball_matches_indicator_route() {
        let d = Domain::Ball(2);
        let a = [C64::new(0.3, 0.1), C64::new(-0.2, 0.0)];
        let exact = metric_ball_volume(d, &a, 1.0, 8).unwrap();
        let rule = build_quadrature(d, 24).unwrap();
        let ind = metric_ball_volume_indicator(d, &a, 1.0, &rule).unwrap();
        assert!(
            (ind - exact.value).abs() / exact.value < 0.03,
            "{ind} vs {}",
            exact.value
        );
    }

    #[test]
    fn truncated_rules_cover_truncated_volume() {
        for scheme in [TruncatedScheme::Geometric, TruncatedScheme::Hyperbolic] {
            let r = build_truncated_quadrature(Domain::Disk, 0.05, 0.6, scheme).unwrap();
            assert_relative_eq!(r.total_weight(), PI * 0.95 * 0.95, epsilon = 1e-6);
            let r = build_truncated_quadrature(Domain::Ball(2), 0.3, 1.0, scheme).unwrap();
            assert_relative_eq!(
                r.total_weight(),
                PI * PI / 2.0 * 0.7f64.powi(4),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn pushed_rule_weights_sum_to_ball_volume() {
        let t = MetricBallTemplate::new(Domain::Disk, 1.0, 16).unwrap();
        let a = [C64::new(0.2, -0.6)];
        let rule = t.at(&a).unwrap();
        assert_relative_eq!(
            rule.total_weight(),
            Domain::disk_metric_ball_volume(a[0], 1.0),
            epsilon = 1e-10
        );
        for (z, _) in rule.iter() {
            assert!(Domain::Disk.distance_unchecked(&a, z) <= 1.0 + 1e-12);
        }
    }
}
