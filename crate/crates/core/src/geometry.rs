//! Verification suites for the kernel geometry of a domain.

use serde::Serialize;

use crate::domains::{
    chain_rule_residual, verify_jacobian_identity, Domain, JacobianSource, Point, C64,
};
use crate::error::{Error, Result};
use crate::functionals::{
    estimate_constants_profile, kernel_volume_product, test_points, EmpiricalConstants,
    SamplerConfig,
};
use crate::quadrature::build_quadrature;
use crate::sampling::{streams, Sampler};
use crate::toeplitz::BasisSpec;

// Index blocks inside the geometry stream, one per suite.
const MINIMALITY_BLOCK: u64 = 0;
const JACOBIAN_BLOCK: u64 = 1 << 40;
const DISTANCE_BLOCK: u64 = 2 << 40;

/// `K(z, t) Vol` should be `1` everywhere; `K(z, z) Vol >= 1` with equality
/// only at the center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalityCheck {
    pub samples: usize,
    pub max_deviation: f64,
    pub worst_point: Point,
    pub min_diagonal: f64,
}

pub fn minimality_check(domain: Domain, samples: usize, seed: u64) -> Result<MinimalityCheck> {
    if samples == 0 {
        return Err(Error::EmptySample("minimality check needs samples".into()));
    }
    let s = Sampler::new(seed, streams::GEOMETRY_PAIRS);
    let t = domain.center();
    let vol = domain.volume();
    let mut out = MinimalityCheck {
        samples,
        max_deviation: 0.0,
        worst_point: t.clone(),
        min_diagonal: f64::INFINITY,
    };
    for i in 0..samples {
        let z = s.truncated_point(domain, 1e-3, MINIMALITY_BLOCK + i as u64);
        let dev = (domain.kernel_unchecked(&z, &t) * vol - 1.0).norm();
        if dev > out.max_deviation {
            out.max_deviation = dev;
            out.worst_point = z.clone();
        }
        out.min_diagonal = out
            .min_diagonal
            .min(domain.diagonal_kernel_unchecked(&z) * vol);
    }
    Ok(out)
}

/// Reproducing-property error of the quadrature kernel integral against the
/// orthonormal monomials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproducingCheck {
    pub degree: u32,
    pub resolution: usize,
    pub nodes: usize,
    pub functions: usize,
    pub max_error: f64,
    pub worst_point: Point,
    pub worst_index: Vec<u32>,
    /// Largest error over the basis at each test point.
    pub point_errors: Vec<f64>,
}

/// Points for the reproducing check: away from the boundary so that the
/// kernel integrand stays resolvable (gauge at most 0.75 on the disk, 0.5
/// elsewhere).
pub fn reproducing_points(domain: Domain, count: usize, seed: u64) -> Vec<Point> {
    let margin = if domain == Domain::Disk { 0.25 } else { 0.5 };
    test_points(domain, count, margin, seed)
}

/// Compares `sum_i w_i K(z, x_i) f(x_i)` with `f(z)` for every basis monomial
/// of degree at most `degree` and every point.
pub fn reproducing_check(
    domain: Domain,
    resolution: usize,
    degree: u32,
    points: &[Point],
) -> Result<ReproducingCheck> {
    if points.is_empty() {
        return Err(Error::EmptySample(
            "reproducing check needs test points".into(),
        ));
    }
    for p in points {
        domain.check(p)?;
    }
    let rule = build_quadrature(domain, resolution)?;
    let basis = BasisSpec::new(domain, degree);
    let m = basis.len();
    let mut acc = vec![C64::new(0.0, 0.0); points.len() * m];
    let mut e = vec![C64::new(0.0, 0.0); m];
    for (x, w) in rule.iter() {
        basis.eval_into(x, &mut e);
        for (p, z) in points.iter().enumerate() {
            let k = domain.kernel_unchecked(z, x) * w;
            for (a, ej) in acc[p * m..(p + 1) * m].iter_mut().zip(&e) {
                *a += k * ej;
            }
        }
    }
    let mut out = ReproducingCheck {
        degree,
        resolution,
        nodes: rule.len(),
        functions: m,
        max_error: 0.0,
        worst_point: points[0].clone(),
        worst_index: basis.indices()[0].clone(),
        point_errors: Vec::with_capacity(points.len()),
    };
    for (p, z) in points.iter().enumerate() {
        let exact = basis.eval(z);
        let mut worst = 0.0f64;
        for (j, ex) in exact.iter().enumerate() {
            let err = (acc[p * m + j] - ex).norm();
            if err > out.max_error {
                out.max_error = err;
                out.worst_point = z.clone();
                out.worst_index = basis.indices()[j].clone();
            }
            worst = worst.max(err);
        }
        out.point_errors.push(worst);
    }
    Ok(out)
}

/// Residuals of the Jacobian-kernel identities over random pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianCheck {
    pub pairs: usize,
    pub closed_form: f64,
    pub finite_difference: f64,
    pub chain_rule: f64,
    pub worst_pair: (Point, Point),
}

/// Pair points keep this boundary distance so finite differences stay
/// meaningful.
const JACOBIAN_MARGIN: f64 = 0.05;

pub fn jacobian_check(domain: Domain, pairs: usize, seed: u64) -> Result<JacobianCheck> {
    if pairs == 0 {
        return Err(Error::EmptySample("jacobian check needs pairs".into()));
    }
    let s = Sampler::new(seed, streams::GEOMETRY_PAIRS);
    let t = domain.center();
    let mut out = JacobianCheck {
        pairs,
        closed_form: 0.0,
        finite_difference: 0.0,
        chain_rule: 0.0,
        worst_pair: (t.clone(), t),
    };
    for i in 0..pairs as u64 {
        let a = s.truncated_point(domain, JACOBIAN_MARGIN, JACOBIAN_BLOCK + 2 * i);
        let z = s.truncated_point(domain, JACOBIAN_MARGIN, JACOBIAN_BLOCK + 2 * i + 1);
        let closed = verify_jacobian_identity(domain, &a, &z, JacobianSource::ClosedForm)?.max();
        let fd = verify_jacobian_identity(domain, &a, &z, JacobianSource::FiniteDifference)?.max();
        if closed > out.closed_form {
            out.worst_pair = (a.clone(), z.clone());
        }
        out.closed_form = out.closed_form.max(closed);
        out.finite_difference = out.finite_difference.max(fd);
        out.chain_rule = out.chain_rule.max(chain_rule_residual(domain, &a, &z)?);
    }
    Ok(out)
}

/// Metric axioms of the Bergman distance on random triples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceAxiomCheck {
    pub triples: usize,
    /// Max `|beta(x,y) - beta(y,x)|`.
    pub symmetry: f64,
    /// Max `beta(x,x)`.
    pub identity: f64,
    /// Max of `beta(x,z) - beta(x,y) - beta(y,z)`, relative to `1 + beta(x,z)`;
    /// nonpositive when the triangle inequality holds.
    pub triangle: f64,
    /// Min `beta(x,y)` over the distinct sampled pairs.
    pub min_distinct: f64,
}

pub fn distance_axiom_check(
    domain: Domain,
    triples: usize,
    seed: u64,
) -> Result<DistanceAxiomCheck> {
    if triples == 0 {
        return Err(Error::EmptySample("distance check needs triples".into()));
    }
    let s = Sampler::new(seed, streams::GEOMETRY_PAIRS);
    let mut out = DistanceAxiomCheck {
        triples,
        symmetry: 0.0,
        identity: 0.0,
        triangle: f64::NEG_INFINITY,
        min_distinct: f64::INFINITY,
    };
    for i in 0..triples as u64 {
        let [x, y, z] =
            [0, 1, 2].map(|k| s.truncated_point(domain, 0.01, DISTANCE_BLOCK + 3 * i + k));
        let xy = domain.distance_unchecked(&x, &y);
        let yx = domain.distance_unchecked(&y, &x);
        let yz = domain.distance_unchecked(&y, &z);
        let xz = domain.distance_unchecked(&x, &z);
        out.symmetry = out.symmetry.max((xy - yx).abs());
        out.identity = out.identity.max(domain.distance_unchecked(&x, &x));
        out.triangle = out.triangle.max((xz - xy - yz) / (1.0 + xz));
        out.min_distinct = out.min_distinct.min(xy);
    }
    Ok(out)
}

/// Kernel comparability constants over shrinking boundary margins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityCheck {
    pub radius: f64,
    pub rows: Vec<EmpiricalConstants>,
    /// Boundary limit of the sup of `|K(z,a)| / K(a,a)`, when known.
    pub limit: Option<f64>,
    /// Whether the sup is nondecreasing as the margin shrinks.
    pub monotone: bool,
    /// Disk only: `|k_a(a)|^2 Vol(B(a,r))` at `a = 0.5`, quadrature and closed form.
    pub spot: Option<(f64, f64)>,
}

pub fn comparability_check(
    domain: Domain,
    r: f64,
    deltas: &[f64],
    seed: u64,
) -> Result<ComparabilityCheck> {
    let cfg = SamplerConfig {
        seed,
        ..SamplerConfig::for_domain(domain)
    };
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    let rows = estimate_constants_profile(domain, r, &cfg, &ds)?;
    let monotone = rows.windows(2).all(|w| w[1].c_r_upper >= w[0].c_r_upper);
    let spot = if domain == Domain::Disk {
        let a = [C64::new(0.5, 0.0)];
        let measured = kernel_volume_product(domain, &a, &a, r, cfg.volume_resolution)?;
        let exact = domain.diagonal_kernel_unchecked(&a) * Domain::disk_metric_ball_volume(a[0], r);
        Some((measured, exact))
    } else {
        None
    };
    Ok(ComparabilityCheck {
        radius: r,
        rows,
        limit: domain.kernel_ratio_limit(r),
        monotone,
        spot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimality_holds_on_every_model() {
        for d in [Domain::Disk, Domain::Ball(2), Domain::Polydisk(2)] {
            let m = minimality_check(d, 200, 1).unwrap();
            assert!(m.max_deviation <= 1e-12, "{d}: {}", m.max_deviation);
            assert!(m.min_diagonal >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn reproducing_fails_when_coarse() {
        let pts = reproducing_points(Domain::Disk, 5, 0);
        let fine = reproducing_check(Domain::Disk, 64, 10, &pts).unwrap();
        assert!(fine.max_error <= 1e-8, "{}", fine.max_error);
        let coarse = reproducing_check(Domain::Disk, 4, 10, &pts).unwrap();
        assert!(coarse.max_error > 1e-3);
    }

    #[test]
    fn jacobian_and_distance_axioms() {
        let j = jacobian_check(Domain::Ball(2), 50, 3).unwrap();
        assert!(
            j.closed_form <= 1e-10 && j.finite_difference <= 1e-6,
            "{j:?}"
        );
        let dist = distance_axiom_check(Domain::Polydisk(2), 200, 3).unwrap();
        assert!(dist.symmetry <= 1e-10 && dist.identity <= 1e-10 && dist.triangle <= 1e-10);
        assert!(dist.min_distinct > 0.0);
    }

    #[test]
    fn disk_spot_value() {
        let c = comparability_check(Domain::Disk, 1.0, &[0.1], 0).unwrap();
        let (m, e) = c.spot.unwrap();
        assert!(
            (m - e).abs() < 1e-6 && (e - 0.450309).abs() < 1e-5,
            "{m} {e}"
        );
        assert!(c.rows[0].c_r_upper <= c.limit.unwrap());
    }
}
