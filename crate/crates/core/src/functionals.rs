//! Scalar functionals of a measure and empirical geometric constants.
//!
//! The Berezin transform is computed by pulling back through the involution
//! exchanging `z` and the center: `|k_z(phi_z(v))|^2 |det J(phi_z, v)|^2 =
//! 1 / Vol`, so `mu~(z) = Vol^{-1} int u(phi_z(v)) dV(v)` plus exact atom
//! terms. The averaging function integrates over pushed-forward metric ball
//! rules.

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{Domain, Point, C64};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::measures::Measure;
use crate::quadrature::{MetricBallTemplate, QuadratureRule, Region};
use crate::sampling::{streams, Sampler};

/// `mu~(z) = int |k_z|^2 d mu`, by the pullback route. `rule` must cover the
/// whole domain.
pub fn berezin_transform(mu: &Measure, z: &[C64], rule: &QuadratureRule) -> Result<f64> {
    let domain = rule.domain();
    if *rule.region() != Region::Domain {
        return Err(Error::InvalidParameter(
            "the Berezin transform needs a rule over the whole domain".into(),
        ));
    }
    let chart = domain.automorphism(z)?;
    let mut total = 0.0;
    if mu.has_density() {
        let s = rule.sum_real(|v, w| w * mu.density_at_image(domain, &chart, v));
        if !s.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                index: usize::MAX,
                point: Point(z.to_vec()).to_string(),
            });
        }
        total += s / domain.volume();
    }
    total += atom_berezin(mu, domain, z);
    Ok(total)
}

fn atom_berezin(mu: &Measure, domain: Domain, z: &[C64]) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| a.mass * domain.normalized_kernel_unchecked(z, &a.point).norm_sqr())
        .sum()
}

/// `mu~(z)` by integrating `|k_z|^2` directly against `mu`; accurate only
/// while `k_z` is resolved by the rule, kept as a cross-check.
pub fn berezin_transform_direct(mu: &Measure, z: &[C64], rule: &QuadratureRule) -> Result<f64> {
    let domain = rule.domain();
    domain.check(z)?;
    mu.integrate_real(
        |w| domain.normalized_kernel_unchecked(z, w).norm_sqr(),
        rule,
    )
}

/// `mu^(z) = mu(B(z, r)) / Vol(B(z, r))` with `r` the template radius.
pub fn averaging_function(mu: &Measure, z: &[C64], template: &MetricBallTemplate) -> Result<f64> {
    let domain = template.centered().domain();
    let chart = domain.automorphism(z)?;
    let vol = template.volume_at(&chart);
    Ok(mu.measure_of_ball(z, template)? / vol)
}

/// Sampling plan for [`estimate_constants`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub anchors: usize,
    pub offsets_per_anchor: usize,
    /// Anchors keep at least this boundary distance.
    pub margin: f64,
    pub seed: u64,
    /// Resolution of the metric ball rule used for `Vol(B(a, r))`.
    pub volume_resolution: usize,
}

impl SamplerConfig {
    pub fn for_domain(domain: Domain) -> Self {
        let (anchors, volume_resolution) = match domain {
            Domain::Disk => (4000, 16),
            Domain::Ball(_) => (800, 6),
            Domain::Polydisk(_) => (800, 6),
        };
        SamplerConfig {
            anchors,
            offsets_per_anchor: 32,
            margin: 0.01,
            seed: 0,
            volume_resolution,
        }
    }
}

/// Empirical extremes of `|K(z,a)| / K(a,a)` and `|k_a(z)|^2 Vol(B(a,r))`
/// over sampled pairs with `beta(z, a) <= r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalConstants {
    pub r: f64,
    pub c_r_upper: f64,
    pub c_r_lower: f64,
    pub k_r_upper: f64,
    pub k_r_lower: f64,
    pub margin: f64,
    pub anchors: usize,
    pub pairs: usize,
    pub seed: u64,
}

impl EmpiricalConstants {
    /// The constant `K_r` of the two-sided bound, `max(upper, 1 / lower)`.
    pub fn k_r(&self) -> f64 {
        self.k_r_upper.max(1.0 / self.k_r_lower)
    }

    /// `C_r` of the two-sided bound, `max(upper, 1 / lower)`.
    pub fn c_r(&self) -> f64 {
        self.c_r_upper.max(1.0 / self.c_r_lower)
    }
}

struct AnchorExtremes {
    boundary_distance: f64,
    c: (f64, f64),
    k: (f64, f64),
    pairs: usize,
}

fn anchor_extremes(
    domain: Domain,
    r: f64,
    cfg: &SamplerConfig,
    template: &MetricBallTemplate,
    i: usize,
) -> Result<AnchorExtremes> {
    let anchors = Sampler::new(cfg.seed, streams::ANCHORS);
    let offsets = Sampler::new(cfg.seed, streams::BALL_OFFSETS);
    let a = if i == 0 {
        domain.center()
    } else {
        anchors.truncated_point(domain, cfg.margin, i as u64)
    };
    let chart = domain.automorphism(&a)?;
    let vol = template.volume_at(&chart);
    let kaa = domain.diagonal_kernel_unchecked(&a);
    let mut c = (f64::INFINITY, f64::NEG_INFINITY);
    let mut k = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..cfg.offsets_per_anchor.max(1) {
        let z = if j == 0 {
            a.clone()
        } else {
            offsets.metric_ball_point(&chart, r, ((i as u64) << 24) | j as u64)
        };
        let kza = domain.kernel_unchecked(&z, &a).norm();
        let cr = kza / kaa;
        let kr = kza * kza / kaa * vol;
        c = (c.0.min(cr), c.1.max(cr));
        k = (k.0.min(kr), k.1.max(kr));
    }
    Ok(AnchorExtremes {
        boundary_distance: domain.boundary_distance_unchecked(&a),
        c,
        k,
        pairs: cfg.offsets_per_anchor.max(1),
    })
}

/// Samples anchors `a` with boundary distance at least `cfg.margin` (the
/// first anchor is the center) and points `z` in `B(a, r)` (the first is
/// `a` itself), and records the extremes of both bracketed quantities.
pub fn estimate_constants(
    domain: Domain,
    r: f64,
    cfg: &SamplerConfig,
) -> Result<EmpiricalConstants> {
    Ok(estimate_constants_profile(domain, r, cfg, &[cfg.margin])?.remove(0))
}

/// Constants restricted to anchors with boundary distance at least each
/// `delta`; one shared sample drawn at the smallest margin, so the profile is
/// monotone in `delta` by construction.
pub fn estimate_constants_profile(
    domain: Domain,
    r: f64,
    cfg: &SamplerConfig,
    deltas: &[f64],
) -> Result<Vec<EmpiricalConstants>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if cfg.anchors == 0 || deltas.is_empty() {
        return Err(Error::EmptySample("no anchors requested".into()));
    }
    let margin = deltas.iter().copied().fold(cfg.margin, f64::min);
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "margin must lie in (0, 1), got {margin}"
        )));
    }
    let cfg = SamplerConfig {
        margin,
        ..cfg.clone()
    };
    let template = MetricBallTemplate::new(domain, r, cfg.volume_resolution)?;
    let per_anchor: Vec<AnchorExtremes> = (0..cfg.anchors)
        .into_par_iter()
        .map(|i| anchor_extremes(domain, r, &cfg, &template, i))
        .collect::<Result<_>>()?;
    deltas
        .iter()
        .map(|&delta| {
            let mut out = EmpiricalConstants {
                r,
                c_r_upper: f64::NEG_INFINITY,
                c_r_lower: f64::INFINITY,
                k_r_upper: f64::NEG_INFINITY,
                k_r_lower: f64::INFINITY,
                margin: delta,
                anchors: 0,
                pairs: 0,
                seed: cfg.seed,
            };
            for e in per_anchor.iter().filter(|e| e.boundary_distance >= delta) {
                out.c_r_lower = out.c_r_lower.min(e.c.0);
                out.c_r_upper = out.c_r_upper.max(e.c.1);
                out.k_r_lower = out.k_r_lower.min(e.k.0);
                out.k_r_upper = out.k_r_upper.max(e.k.1);
                out.anchors += 1;
                out.pairs += e.pairs;
            }
            if out.anchors == 0 {
                return Err(Error::EmptySample(format!(
                    "no anchor has boundary distance >= {delta}"
                )));
            }
            Ok(out)
        })
        .collect()
}

/// `|k_a(z)|^2 Vol(B(a, r))` at one pair.
pub fn kernel_volume_product(
    domain: Domain,
    a: &[C64],
    z: &[C64],
    r: f64,
    resolution: usize,
) -> Result<f64> {
    domain.check(z)?;
    let chart = domain.automorphism(a)?;
    let vol = MetricBallTemplate::new(domain, r, resolution)?.volume_at(&chart);
    Ok(domain.normalized_kernel_unchecked(a, z).norm_sqr() * vol)
}

/// Values of both functionals at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationSample {
    pub point: Point,
    pub averaging: f64,
    pub berezin: f64,
    /// `K_r mu~(z) - mu^(z)`.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    pub k_r: f64,
    pub worst_slack: f64,
    pub worst_point: Point,
    pub samples: Vec<DominationSample>,
}

/// Checks `mu^(z) <= K_r mu~(z)` at each point; the worst slack should be
/// at least minus the quadrature tolerance.
pub fn check_pointwise_domination(
    mu: &Measure,
    k_r: f64,
    points: &[Point],
    rule: &QuadratureRule,
    template: &MetricBallTemplate,
) -> Result<DominationReport> {
    if points.is_empty() {
        return Err(Error::EmptySample(
            "no test points for the domination check".into(),
        ));
    }
    let samples: Vec<DominationSample> = points
        .iter()
        .map(|z| {
            let averaging = averaging_function(mu, z, template)?;
            let berezin = berezin_transform(mu, z, rule)?;
            Ok(DominationSample {
                point: z.clone(),
                averaging,
                berezin,
                slack: k_r * berezin - averaging,
            })
        })
        .collect::<Result<_>>()?;
    let worst = samples
        .iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .expect("nonempty");
    Ok(DominationReport {
        k_r,
        worst_slack: worst.slack,
        worst_point: worst.point.clone(),
        samples,
    })
}

/// Deterministic test points with boundary distance at least `margin`; the
/// first is the center.
pub fn test_points(domain: Domain, count: usize, margin: f64, seed: u64) -> Vec<Point> {
    let s = Sampler::new(seed, streams::TEST_POINTS);
    (0..count)
        .map(|i| {
            if i == 0 {
                domain.center()
            } else {
                s.truncated_point(domain, margin, i as u64)
            }
        })
        .collect()
}

/// Holomorphic test functions: polynomials and kernel sections `K(., b)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolomorphicFn {
    /// `sum c_alpha z^alpha` as (multi-index, coefficient) pairs.
    Polynomial {
        terms: Vec<(Vec<u32>, C64)>,
    },
    KernelSection {
        at: Point,
    },
}

impl HolomorphicFn {
    pub fn constant(domain: Domain, c: f64) -> Self {
        HolomorphicFn::Polynomial {
            terms: vec![(vec![0; domain.dimension()], C64::new(c, 0.0))],
        }
    }

    pub fn monomial(alpha: Vec<u32>) -> Self {
        HolomorphicFn::Polynomial {
            terms: vec![(alpha, C64::new(1.0, 0.0))],
        }
    }

    /// `z_1`, the first coordinate.
    pub fn coordinate(domain: Domain) -> Self {
        let mut alpha = vec![0; domain.dimension()];
        alpha[0] = 1;
        HolomorphicFn::monomial(alpha)
    }

    pub fn kernel_section(at: Point) -> Self {
        HolomorphicFn::KernelSection { at }
    }

    pub fn zero(domain: Domain) -> Self {
        HolomorphicFn::constant(domain, 0.0)
    }

    pub fn eval(&self, domain: Domain, z: &[C64]) -> C64 {
        match self {
            HolomorphicFn::Polynomial { terms } => terms
                .iter()
                .map(|(alpha, c)| {
                    alpha
                        .iter()
                        .zip(z)
                        .fold(*c, |acc, (&k, zi)| acc * zi.powu(k))
                })
                .sum(),
            HolomorphicFn::KernelSection { at } => domain.kernel_unchecked(z, at),
        }
    }

    pub fn label(&self) -> String {
        match self {
            HolomorphicFn::Polynomial { terms } => terms
                .iter()
                .map(|(alpha, c)| format!("({})z^{:?}", c, alpha))
                .collect::<Vec<_>>()
                .join(" + "),
            HolomorphicFn::KernelSection { at } => format!("K(., {at})"),
        }
    }

    /// The fixed sweep catalog: monomials up to degree 6 in the first
    /// coordinate, a mixed polynomial and two kernel sections.
    pub fn catalog(domain: Domain) -> Vec<HolomorphicFn> {
        let n = domain.dimension();
        let mut out = vec![HolomorphicFn::constant(domain, 1.0)];
        for k in [1u32, 2, 3, 6] {
            let mut alpha = vec![0; n];
            alpha[0] = k;
            out.push(HolomorphicFn::monomial(alpha));
        }
        let mut mixed = vec![
            (vec![0; n], C64::new(1.0, 0.0)),
            (
                {
                    let mut a = vec![0; n];
                    a[0] = 1;
                    a
                },
                C64::new(-2.0, 0.5),
            ),
            (
                {
                    let mut a = vec![0; n];
                    a[0] = 3;
                    a
                },
                C64::new(0.0, 1.5),
            ),
        ];
        if n > 1 {
            let mut a = vec![0; n];
            a[0] = 2;
            a[n - 1] += 2;
            mixed.push((a, C64::new(0.75, 0.0)));
        }
        out.push(HolomorphicFn::Polynomial { terms: mixed });
        for x in [0.5, 0.8] {
            let mut b = Point::origin(n);
            b.0[0] = C64::new(x, 0.0);
            out.push(HolomorphicFn::kernel_section(b));
        }
        out
    }
}

/// `|f(a)|^p Vol(B(a,r)) / int_{B(a,r)} |f|^p dV`.
pub fn submean_value_check(
    f: &HolomorphicFn,
    p: f64,
    a: &[C64],
    template: &MetricBallTemplate,
) -> Result<f64> {
    let domain = template.centered().domain();
    let chart = domain.automorphism(a)?;
    let rule = template.at_chart(&chart);
    let integral = rule.sum_real(|z, w| w * f.eval(domain, z).norm().powf(p));
    if !(integral > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "{} vanishes on B({}, {})",
            f.label(),
            chart.base(),
            template.radius()
        )));
    }
    Ok(f.eval(domain, a).norm().powf(p) * rule.total_weight() / integral)
}

/// `sup_{B(a,r)} |f|^p Vol(B(a,r)) / int_{B(a,2r)} |f|^p dV`, the supremum
/// taken over the nodes of the ball rule (including its center).
pub fn submean_sup_check(
    f: &HolomorphicFn,
    p: f64,
    a: &[C64],
    inner: &MetricBallTemplate,
    outer: &MetricBallTemplate,
) -> Result<f64> {
    let domain = inner.centered().domain();
    let chart = domain.automorphism(a)?;
    let ball = inner.at_chart(&chart);
    let big = outer.at_chart(&chart);
    let integral = big.sum_real(|z, w| w * f.eval(domain, z).norm().powf(p));
    if !(integral > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "{} vanishes on B({}, {})",
            f.label(),
            chart.base(),
            outer.radius()
        )));
    }
    let sup = ball
        .iter()
        .map(|(z, _)| f.eval(domain, z).norm().powf(p))
        .fold(f.eval(domain, a).norm().powf(p), f64::max);
    Ok(sup * ball.total_weight() / integral)
}

/// A supremum restricted to nodes with boundary distance at least `delta`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub delta: f64,
    pub nodes: usize,
    pub sup: f64,
}

/// Sup of a per-point functional over point sets shrinking away from the
/// boundary, with a divergence verdict.
///
/// Between consecutive margins the sup grows like `delta^{-p}` with a local
/// exponent `p`; the profile diverges when the last two exponents (the last
/// one, if there is only one step) reach the threshold. A single jump, such
/// as an atom entering the averaging balls, does not count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaProfile {
    pub rows: Vec<ProfileRow>,
    /// `sup` at the smallest `delta` over `sup` at the largest.
    pub growth: f64,
    /// Local exponent of each step between consecutive rows.
    pub exponents: Vec<f64>,
    /// Smaller of the last two exponents.
    pub trend: f64,
    pub divergence_exponent: f64,
    pub bounded: bool,
}

/// Default local growth exponent at which a profile counts as divergent.
pub const DEFAULT_DIVERGENCE_EXPONENT: f64 = 0.2;

fn growth_ratio(from: f64, to: f64) -> f64 {
    if from > 0.0 {
        to / from
    } else if to > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

impl DeltaProfile {
    /// Builds the profile from `(boundary distance, value)` pairs. Needs at
    /// least two distinct margins.
    pub fn from_values(
        values: &[(f64, f64)],
        deltas: &[f64],
        divergence_exponent: f64,
    ) -> Result<Self> {
        let mut ds = deltas.to_vec();
        ds.sort_by(|a, b| b.total_cmp(a));
        ds.dedup();
        if ds.len() < 2 {
            return Err(Error::InvalidParameter(
                "a delta profile needs two distinct margins".into(),
            ));
        }
        let rows: Vec<ProfileRow> = ds
            .iter()
            .map(|&delta| {
                let mut sup = f64::NEG_INFINITY;
                let mut nodes = 0;
                for &(d, v) in values {
                    if at_least(d, delta) {
                        sup = sup.max(v);
                        nodes += 1;
                    }
                }
                ProfileRow { delta, nodes, sup }
            })
            .collect();
        if rows.iter().any(|r| r.nodes == 0) {
            return Err(Error::EmptySample(
                "a profile margin keeps no points; use larger deltas or a finer point set".into(),
            ));
        }
        let exponents: Vec<f64> = rows
            .windows(2)
            .map(|w| growth_ratio(w[0].sup, w[1].sup).ln() / (w[0].delta / w[1].delta).ln())
            .collect();
        let trend = exponents
            .iter()
            .rev()
            .take(2)
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(DeltaProfile {
            growth: growth_ratio(rows[0].sup, rows[rows.len() - 1].sup),
            rows,
            exponents,
            trend,
            divergence_exponent,
            bounded: trend < divergence_exponent,
        })
    }

    pub fn sup(&self) -> f64 {
        self.rows.last().map(|r| r.sup).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlesonCertificate {
    pub radius: f64,
    pub sup: f64,
    pub argsup: Point,
    pub profile: DeltaProfile,
    pub bounded: bool,
    /// `mu^(w_j)` in lattice order.
    pub node_values: Vec<f64>,
}

/// `mu^` on every lattice node, in lattice order.
pub fn averaging_on_nodes(
    mu: &Measure,
    lattice: &Lattice,
    template: &MetricBallTemplate,
) -> Result<Vec<f64>> {
    lattice
        .nodes()
        .par_iter()
        .map(|w| averaging_function(mu, w, template))
        .collect()
}

/// Sup of `mu^` over the lattice with the profile over decreasing `delta`.
pub fn carleson_certificate(
    mu: &Measure,
    lattice: &Lattice,
    template: &MetricBallTemplate,
    deltas: &[f64],
    divergence_exponent: f64,
) -> Result<CarlesonCertificate> {
    let values = averaging_on_nodes(mu, lattice, template)?;
    carleson_from_values(
        lattice,
        template.radius(),
        values,
        deltas,
        divergence_exponent,
    )
}

pub fn carleson_from_values(
    lattice: &Lattice,
    radius: f64,
    values: Vec<f64>,
    deltas: &[f64],
    divergence_exponent: f64,
) -> Result<CarlesonCertificate> {
    let domain = lattice.domain();
    let pairs: Vec<(f64, f64)> = lattice
        .nodes()
        .iter()
        .zip(&values)
        .map(|(w, &v)| (domain.boundary_distance_unchecked(w), v))
        .collect();
    let profile = DeltaProfile::from_values(&pairs, deltas, divergence_exponent)?;
    let (imax, &sup) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::EmptySample("lattice has no nodes".into()))?;
    Ok(CarlesonCertificate {
        radius,
        sup,
        argsup: lattice.nodes()[imax].clone(),
        bounded: profile.bounded,
        profile,
        node_values: values,
    })
}

/// Boundary margins for suprema profiles: the standard ladder down to
/// `margin`, with `margin` itself last.
pub fn profile_deltas(margin: f64) -> Vec<f64> {
    let mut out: Vec<f64> = PROFILE_LADDER
        .iter()
        .copied()
        .filter(|&d| d > margin * (1.0 + 1e-9))
        .collect();
    out.push(margin);
    out
}

const PROFILE_LADDER: [f64; 8] = [0.3, 0.2, 0.15, 0.1, 0.03, 0.01, 0.003, 0.001];

/// Boundary-distance buckets for the vanishing certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingSchedule {
    /// Decreasing bucket edges; bucket `i` is `[edges[i+1], edges[i])`,
    /// the first bucket closed above.
    pub edges: Vec<f64>,
    /// The outermost bucket's maximum may be at most this fraction of the
    /// peak bucket maximum.
    pub decay: f64,
}

/// Default tail-to-peak ratio.
pub const DEFAULT_DECAY: f64 = 0.85;

impl VanishingSchedule {
    pub fn for_margin(margin: f64) -> Self {
        let mut edges = vec![1.0];
        edges.extend(profile_deltas(margin));
        VanishingSchedule {
            edges,
            decay: DEFAULT_DECAY,
        }
    }
}

impl Default for VanishingSchedule {
    fn default() -> Self {
        VanishingSchedule::for_margin(0.001)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub upper: f64,
    pub lower: f64,
    pub nodes: usize,
    pub max: f64,
}

/// Passes when the bucket maxima never rise again after their peak and the
/// outermost bucket has fallen to `decay` times the peak. Bumps before the
/// peak (atoms leaving the metric balls) are allowed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VanishingCertificate {
    pub buckets: Vec<Bucket>,
    /// Index of the first bucket attaining the largest maximum.
    pub peak: usize,
    /// Outermost bucket maximum over the peak (`0` when both vanish).
    pub tail_ratio: f64,
    pub nonincreasing: bool,
    pub decay: f64,
    pub passed: bool,
}

/// Relative slack on boundary-distance comparisons, so nodes placed exactly
/// on a margin are not lost to rounding.
const EDGE_SLACK: f64 = 1e-9;

fn at_least(d: f64, edge: f64) -> bool {
    d >= edge * (1.0 - EDGE_SLACK)
}

/// Buckets `(boundary distance, value)` pairs by the schedule and applies
/// the decay rule. Needs two nonempty buckets.
pub fn vanishing_from_values(
    values: &[(f64, f64)],
    schedule: &VanishingSchedule,
) -> Result<VanishingCertificate> {
    if schedule.edges.len() < 2 || !(schedule.decay > 0.0 && schedule.decay < 1.0) {
        return Err(Error::InvalidParameter(
            "a vanishing schedule needs two edges and a decay in (0, 1)".into(),
        ));
    }
    let mut buckets: Vec<Bucket> = Vec::new();
    for (i, e) in schedule.edges.windows(2).enumerate() {
        let (upper, lower) = (e[0], e[1]);
        let mut max = f64::NEG_INFINITY;
        let mut nodes = 0;
        for &(d, v) in values {
            if at_least(d, lower) && (i == 0 || !at_least(d, upper)) {
                max = max.max(v);
                nodes += 1;
            }
        }
        if nodes > 0 {
            buckets.push(Bucket {
                upper,
                lower,
                nodes,
                max,
            });
        }
    }
    if buckets.is_empty() {
        return Err(Error::EmptySample(
            "no lattice node falls in a vanishing bucket".into(),
        ));
    }
    let peak = buckets.iter().enumerate().fold(
        0,
        |best, (i, b)| if b.max > buckets[best].max { i } else { best },
    );
    let peak_max = buckets[peak].max;
    let last = buckets.last().expect("nonempty").max;
    let tail_ratio = if peak_max > 0.0 { last / peak_max } else { 0.0 };
    let nonincreasing = buckets[peak..]
        .windows(2)
        .all(|w| w[1].max <= w[0].max * (1.0 + 1e-12));
    let passed = buckets.len() > 1
        && peak + 1 < buckets.len()
        && nonincreasing
        && tail_ratio <= schedule.decay;
    Ok(VanishingCertificate {
        buckets,
        peak,
        tail_ratio,
        nonincreasing,
        decay: schedule.decay,
        passed,
    })
}

/// Vanishing-Carleson certificate on a lattice.
pub fn vanishing_certificate(
    mu: &Measure,
    lattice: &Lattice,
    template: &MetricBallTemplate,
    schedule: &VanishingSchedule,
) -> Result<VanishingCertificate> {
    let values = averaging_on_nodes(mu, lattice, template)?;
    vanishing_on_lattice(lattice, &values, schedule)
}

pub fn vanishing_on_lattice(
    lattice: &Lattice,
    values: &[f64],
    schedule: &VanishingSchedule,
) -> Result<VanishingCertificate> {
    let domain = lattice.domain();
    let pairs: Vec<(f64, f64)> = lattice
        .nodes()
        .iter()
        .zip(values)
        .map(|(w, &v)| (domain.boundary_distance_unchecked(w), v))
        .collect();
    vanishing_from_values(&pairs, schedule)
}

/// Values of a functional along the ray `s * direction`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryProfile {
    pub direction: Point,
    pub parameters: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundaryProfile {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Whether the values strictly decrease over parameters `>= from`.
    pub fn decreasing_from(&self, from: f64) -> bool {
        let tail: Vec<f64> = self
            .parameters
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s >= from)
            .map(|(_, v)| *v)
            .collect();
        tail.windows(2).all(|w| w[1] < w[0])
    }

    /// Whether the value at the outermost parameter is at most `fraction`
    /// of the profile maximum.
    pub fn decays(&self, fraction: f64) -> bool {
        self.last() <= fraction * self.max()
    }
}

/// Ray parameters: `0`, then `1 - 10^{-k/per_decade}` down to boundary
/// distance `margin` (included).
pub fn ray_parameters(margin: f64, per_decade: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let per = per_decade.max(1) as f64;
    let mut k = 1;
    loop {
        let d = 10f64.powf(-(k as f64) / per);
        if d <= margin * (1.0 + 1e-12) {
            break;
        }
        out.push(1.0 - d);
        k += 1;
    }
    out.push(1.0 - margin);
    out
}

/// Evaluates `f` along the ray `s * direction`; the direction is normalized
/// so that the ray leaves the domain at `s = 1`.
pub fn ray_profile<F>(
    domain: Domain,
    direction: &[C64],
    parameters: &[f64],
    f: F,
) -> Result<BoundaryProfile>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let dir = domain.normalize_direction(direction)?;
    if parameters.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "ray parameters must increase strictly".into(),
        ));
    }
    let values = parameters
        .par_iter()
        .map(|&s| {
            let z = dir.scaled(s);
            domain.check(&z)?;
            let v = f(&z)?;
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    index: 0,
                    point: z.to_string(),
                });
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundaryProfile {
        direction: dir,
        parameters: parameters.to_vec(),
        values,
    })
}

/// `|<f, k_a>| = |f(a)| / sqrt(K(a,a))` along a ray.
pub fn boundary_weak_convergence_check(
    domain: Domain,
    f: &HolomorphicFn,
    direction: &[C64],
    parameters: &[f64],
) -> Result<BoundaryProfile> {
    ray_profile(domain, direction, parameters, |a| {
        Ok(f.eval(domain, a).norm() / domain.diagonal_kernel_unchecked(a).sqrt())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_graded_quadrature, build_quadrature};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, SQRT_2};

    fn c(x: f64, y: f64) -> C64 {
        C64::new(x, y)
    }

    #[test]
    fn berezin_examples() {
        let rule = build_graded_quadrature(Domain::Disk, 32).unwrap();
        for z in [c(0.0, 0.0), c(0.3, -0.5), c(0.95, 0.0)] {
            let v = berezin_transform(&Measure::lebesgue(), &[z], &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
        let v = berezin_transform(&Measure::power_vanishing(1.0), &[c(0.0, 0.0)], &rule).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
        let atom = Measure::atomic([(Point::origin(1), 1.0)]);
        let v = berezin_transform(&atom, &[c(0.5, 0.0)], &rule).unwrap();
        assert_relative_eq!(v, 0.75f64.powi(2) / PI, epsilon = 1e-14);
    }

    #[test]
    fn berezin_routes_agree_in_the_interior() {
        let rule = build_graded_quadrature(Domain::Disk, 48).unwrap();
        let mu = Measure::power_vanishing(0.5);
        for z in [c(0.2, 0.1), c(-0.4, 0.3)] {
            let a = berezin_transform(&mu, &[z], &rule).unwrap();
            let b = berezin_transform_direct(&mu, &[z], &rule).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }

    #[test]
    fn berezin_on_ball_and_bidisk() {
        for d in [Domain::Ball(2), Domain::Polydisk(2)] {
            let rule = build_graded_quadrature(d, 12).unwrap();
            let z = [c(0.3, 0.1), c(-0.2, 0.4)];
            let v = berezin_transform(&Measure::lebesgue(), &z, &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
            let mu = Measure::power_vanishing(1.0);
            let a = berezin_transform(&mu, &z, &rule).unwrap();
            let b = berezin_transform_direct(&mu, &z, &build_quadrature(d, 16).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-6, "{d}: {a} {b}");
        }
    }

    #[test]
    fn averaging_examples() {
        let t = MetricBallTemplate::new(Domain::Disk, 1.0, 16).unwrap();
        let zero = [c(0.0, 0.0)];
        assert_eq!(
            averaging_function(&Measure::lebesgue(), &[c(0.7, 0.2)], &t).unwrap(),
            1.0
        );
        let rho2 = (1.0 / SQRT_2).tanh().powi(2);
        let v = averaging_function(&Measure::power_vanishing(1.0), &zero, &t).unwrap();
        assert_relative_eq!(v, 1.0 - rho2 / 2.0, epsilon = 1e-12);
        let v = averaging_function(&Measure::atomic([(Point::origin(1), 1.0)]), &zero, &t).unwrap();
        assert_relative_eq!(
            v,
            1.0 / Domain::disk_metric_ball_volume(zero[0], 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn scaling_and_linearity() {
        let rule = build_graded_quadrature(Domain::Disk, 24).unwrap();
        let t = MetricBallTemplate::new(Domain::Disk, 1.0, 12).unwrap();
        let a = Measure::power_vanishing(0.5);
        let b = Measure::atomic([(Point::scalar(c(0.2, 0.3)), 0.7)]);
        let z = [c(0.4, -0.1)];
        let sum = Measure::Sum(vec![a.clone(), b.clone()]);
        let lin = berezin_transform(&sum, &z, &rule).unwrap()
            - berezin_transform(&a, &z, &rule).unwrap()
            - berezin_transform(&b, &z, &rule).unwrap();
        assert!(lin.abs() < 1e-12);
        let hat = averaging_function(&sum, &z, &t).unwrap()
            - averaging_function(&a, &z, &t).unwrap()
            - averaging_function(&b, &z, &t).unwrap();
        assert!(hat.abs() < 1e-12);
        let s = averaging_function(&a.scaled(3.0), &z, &t).unwrap()
            / averaging_function(&a, &z, &t).unwrap();
        assert_relative_eq!(s, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_volume_spot_value() {
        let a = [c(0.5, 0.0)];
        let v = kernel_volume_product(Domain::Disk, &a, &a, 1.0, 16).unwrap();
        let rho2 = (1.0 / SQRT_2).tanh().powi(2);
        let exact = rho2 / (1.0 - rho2 * 0.25).powi(2);
        assert_relative_eq!(v, exact, epsilon = 1e-12);
        assert!((v - 0.45031).abs() < 1e-3);
    }

    #[test]
    fn disk_constants_respect_the_closed_form() {
        let cfg = SamplerConfig {
            anchors: 800,
            ..SamplerConfig::for_domain(Domain::Disk)
        };
        let e = estimate_constants(Domain::Disk, 1.0, &cfg).unwrap();
        let limit = Domain::Disk.kernel_ratio_limit(1.0).unwrap();
        assert!(e.c_r_upper <= limit + 1e-9);
        assert!(e.c_r_lower <= 1.0 && e.c_r_upper >= 1.0);
        assert!(e.c_r_upper > 2.2, "{e:?}");
        assert!(e.k_r_lower > 0.0 && e.k_r_lower <= e.k_r_upper);
    }

    #[test]
    fn larger_samples_widen_brackets() {
        let d = Domain::Ball(2);
        let small = SamplerConfig {
            anchors: 50,
            offsets_per_anchor: 8,
            ..SamplerConfig::for_domain(d)
        };
        let big = SamplerConfig {
            anchors: 120,
            ..small.clone()
        };
        let a = estimate_constants(d, 1.0, &small).unwrap();
        let b = estimate_constants(d, 1.0, &big).unwrap();
        assert!(b.c_r_upper >= a.c_r_upper && b.c_r_lower <= a.c_r_lower);
        assert!(b.k_r_upper >= a.k_r_upper && b.k_r_lower <= a.k_r_lower);
    }

    #[test]
    fn submean_examples() {
        let d = Domain::Disk;
        let t1 = MetricBallTemplate::new(d, 1.0, 16).unwrap();
        let t2 = MetricBallTemplate::new(d, 2.0, 16).unwrap();
        let one = HolomorphicFn::constant(d, 1.0);
        let z = HolomorphicFn::coordinate(d);
        let a = [c(0.5, 0.0)];
        assert_relative_eq!(
            submean_value_check(&one, 2.0, &a, &t1).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            submean_value_check(&z, 2.0, &[c(0.0, 0.0)], &t1).unwrap(),
            0.0
        );
        let ratio = submean_value_check(&z, 2.0, &a, &t1).unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
        assert!(matches!(
            submean_value_check(&HolomorphicFn::zero(d), 1.0, &a, &t1),
            Err(Error::UndefinedRatio(_))
        ));
        let v = submean_sup_check(&one, 1.0, &a, &t1, &t2).unwrap();
        let expect =
            Domain::disk_metric_ball_volume(a[0], 1.0) / Domain::disk_metric_ball_volume(a[0], 2.0);
        assert_relative_eq!(v, expect, epsilon = 1e-10);
        let k = HolomorphicFn::kernel_section(Point::scalar(c(0.8, 0.0)));
        let coarse = submean_sup_check(&k, 1.0, &a, &t1, &t2).unwrap();
        let fine = submean_sup_check(
            &k,
            1.0,
            &a,
            &MetricBallTemplate::new(d, 1.0, 32).unwrap(),
            &MetricBallTemplate::new(d, 2.0, 32).unwrap(),
        )
        .unwrap();
        assert!((coarse - fine).abs() / fine < 0.02);
    }

    #[test]
    fn weak_convergence_profile() {
        let d = Domain::Disk;
        let s = ray_parameters(0.01, 4);
        let prof =
            boundary_weak_convergence_check(d, &HolomorphicFn::coordinate(d), &[c(1.0, 0.0)], &s)
                .unwrap();
        let last = prof.last();
        assert_relative_eq!(
            last,
            0.99 * PI.sqrt() * (1.0 - 0.99f64.powi(2)),
            epsilon = 1e-12
        );
        assert!((last - 0.03492).abs() < 1e-5);
        assert!(prof.decreasing_from(0.8));
        let zero = boundary_weak_convergence_check(d, &HolomorphicFn::zero(d), &[c(1.0, 0.0)], &s)
            .unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vanishing_schedule_verdicts() {
        let sched = VanishingSchedule::default();
        let flat: Vec<(f64, f64)> = [0.5, 0.05, 0.02].iter().map(|&d| (d, 1.0)).collect();
        assert!(!vanishing_from_values(&flat, &sched).unwrap().passed);
        let decaying: Vec<(f64, f64)> = [0.5, 0.05, 0.02].iter().map(|&d| (d, d)).collect();
        assert!(vanishing_from_values(&decaying, &sched).unwrap().passed);
        let single: Vec<(f64, f64)> = vec![(0.5, 1.0), (0.6, 0.0)];
        assert!(!vanishing_from_values(&single, &sched).unwrap().passed);
        let slow: Vec<(f64, f64)> = [0.5, 0.25, 0.05]
            .iter()
            .map(|&d| (d, 1.0 + 0.1 * d))
            .collect();
        let cert = vanishing_from_values(&slow, &sched).unwrap();
        assert!(!cert.passed && cert.nonincreasing && cert.tail_ratio > 0.85);
        // a bump before the peak, then nothing: atoms leaving the balls
        let bump: Vec<(f64, f64)> = [(0.5, 2.0), (0.25, 5.0), (0.12, 0.0), (0.02, 0.0)].to_vec();
        let cert = vanishing_from_values(&bump, &sched).unwrap();
        assert!(cert.passed && cert.peak == 1 && cert.tail_ratio == 0.0);
        let rising: Vec<(f64, f64)> = [(0.5, 2.0), (0.25, 1.0), (0.12, 1.5), (0.02, 0.1)].to_vec();
        assert!(!vanishing_from_values(&rising, &sched).unwrap().passed);
        assert_eq!(profile_deltas(0.01), vec![0.3, 0.2, 0.15, 0.1, 0.03, 0.01]);
        assert_eq!(profile_deltas(0.12), vec![0.3, 0.2, 0.15, 0.12]);
    }

    #[test]
    fn delta_profiles() {
        let vals: Vec<(f64, f64)> = [0.5f64, 0.05, 0.005, 0.001]
            .iter()
            .map(|&d| (d, 1.0 / d.sqrt()))
            .collect();
        let p = DeltaProfile::from_values(&vals, &[0.1, 0.01, 0.001], 0.2).unwrap();
        assert!(!p.bounded);
        assert!((p.trend - 0.5).abs() < 0.2, "{p:?}");
        let flat: Vec<(f64, f64)> = vals.iter().map(|&(d, _)| (d, 1.0)).collect();
        assert!(
            DeltaProfile::from_values(&flat, &[0.1, 0.01, 0.001], 0.2)
                .unwrap()
                .bounded
        );
        // one jump, then saturation
        let jump: Vec<(f64, f64)> = [(0.5, 1.0), (0.05, 4.0), (0.005, 4.0), (0.001, 4.0)].to_vec();
        let p = DeltaProfile::from_values(&jump, &[0.1, 0.01, 0.001], 0.2).unwrap();
        assert!(p.bounded && p.growth == 4.0);
    }
}
