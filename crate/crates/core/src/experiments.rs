//! The four batch experiments behind the command-line tool. Each turns
//! resolved [`Settings`] into a [`Report`] plus CSV tables.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, Settings};
use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::functionals::{
    averaging_function, averaging_on_nodes, berezin_transform, carleson_from_values,
    check_pointwise_domination, estimate_constants, profile_deltas, ray_parameters, ray_profile,
    test_points, vanishing_on_lattice, BoundaryProfile, CarlesonCertificate, DeltaProfile,
    SamplerConfig, VanishingCertificate, VanishingSchedule, DEFAULT_DIVERGENCE_EXPONENT,
};
use crate::geometry::{
    comparability_check, distance_axiom_check, jacobian_check, minimality_check, reproducing_check,
    reproducing_points,
};
use crate::lattice::{build_lattice, certify_lattice, Lattice, LatticeCertificate, LatticeOptions};
use crate::measures::{catalog, DensityFamily, Measure};
use crate::quadrature::{build_graded_quadrature, MetricBallTemplate, QuadratureRule};
use crate::report::{Classification, Report, Table, Verdict};
use crate::toeplitz::{
    atomic_factor_spectrum, positive_bergman_norm_estimate, toeplitz_default, toeplitz_matrix,
    toeplitz_rule, BasisSpec, PPlusOptions, SpectrumReport, ToeplitzTruncation,
};

/// Decision thresholds shared by the reports.
pub mod rules {
    /// Operator norms growing by this factor over the degree range count as
    /// unbounded.
    pub const NORM_GROWTH: f64 = 1.05;
    /// A tail norm at or below this floor at the top degree counts as decayed.
    pub const TAIL_FLOOR: f64 = 1e-2;
    /// Tail norm at the top degree over the bottom degree; at or below counts
    /// as decaying.
    pub const TAIL_DECAY: f64 = 0.85;
    /// A boundary profile vanishes when its outermost value is at most this
    /// fraction of its maximum.
    pub const RAY_DECAY: f64 = 0.25;
    /// Rays stop at this boundary distance.
    pub const RAY_MARGIN: f64 = 1e-3;
    pub const RAY_PER_DECADE: usize = 4;
    /// Boundary distance of the pointwise-domination test points.
    pub const DOMINATION_MARGIN: f64 = 0.1;
    pub const DOMINATION_SLACK: f64 = -1e-6;
    /// Boundary distance of the points where operator and transform Berezin
    /// symbols are compared.
    pub const BEREZIN_POINT_MARGIN: f64 = 0.5;
    pub const BEREZIN_AGREEMENT: f64 = 1e-3;
    pub const RANK_TOLERANCE: f64 = 1e-8;
}

/// A report with its tables.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn new(settings: &Settings) -> Result<Self> {
        Ok(Outcome {
            report: Report::new(settings.experiment.id(), serde_json::to_value(settings)?),
            tables: Vec::new(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.report.save(dir)?;
        for t in &self.tables {
            t.save(dir)?;
        }
        Ok(())
    }
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    match settings.experiment {
        Experiment::VerifyGeometry => verify_geometry(settings),
        Experiment::CarlesonReport => carleson_report(settings),
        Experiment::EquivalenceReport => equivalence_report(settings),
        Experiment::ToeplitzSpectrum => toeplitz_spectrum(settings),
    }
}

fn coord_columns(domain: Domain) -> Vec<String> {
    (1..=domain.dimension())
        .flat_map(|i| [format!("re_{i}"), format!("im_{i}")])
        .collect()
}

fn table_with_coords(name: &str, domain: Domain, before: &[&str], after: &[&str]) -> Table {
    let mut t = Table::new(name, before);
    t.columns.extend(coord_columns(domain));
    t.columns.extend(after.iter().map(|s| s.to_string()));
    t
}

fn point_cells(p: &Point) -> impl Iterator<Item = String> + '_ {
    p.to_reals().into_iter().map(|x| x.to_string())
}

// ---------------------------------------------------------------- geometry

pub fn verify_geometry(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::new(s)?;
    let d = s.domain;
    let degree = *s.degrees.last().expect("validated");

    let m = minimality_check(d, s.samples, s.seed)?;
    out.report.verdict(Verdict::at_most(
        "minimality.kernel_at_center",
        m.max_deviation,
        1e-12,
        format!(
            "max |K(z,t) Vol - 1| over {} samples, worst at {}",
            m.samples, m.worst_point
        ),
    ));
    out.report.verdict(Verdict::at_least(
        "minimality.diagonal",
        m.min_diagonal,
        1.0 - 1e-12,
        "min K(z,z) Vol; the center minimizes the diagonal",
    ));
    out.report.result("minimality", &m)?;

    let pts = reproducing_points(d, s.test_points, s.seed);
    let rep = reproducing_check(d, s.resolution, degree, &pts)?;
    out.report.verdict(Verdict::at_most(
        "reproducing.max_error",
        rep.max_error,
        1e-8,
        format!(
            "{} monomials up to degree {}, {} points, resolution {} ({} nodes); worst at {} for index {:?}",
            rep.functions, rep.degree, pts.len(), rep.resolution, rep.nodes, rep.worst_point, rep.worst_index
        ),
    ));
    let mut t = table_with_coords("reproducing", d, &["point"], &["max_error"]);
    for (i, (p, e)) in pts.iter().zip(&rep.point_errors).enumerate() {
        t.push(
            std::iter::once(i.to_string())
                .chain(point_cells(p))
                .chain([e.to_string()]),
        );
    }
    out.tables.push(t);
    out.report.result(
        "reproducing",
        &json!({
            "degree": rep.degree,
            "resolution": rep.resolution,
            "nodes": rep.nodes,
            "functions": rep.functions,
            "max_error": rep.max_error,
            "worst_point": rep.worst_point,
            "worst_index": rep.worst_index,
        }),
    )?;

    let j = jacobian_check(d, s.samples, s.seed)?;
    out.report.verdict(Verdict::at_most(
        "jacobian.closed_form",
        j.closed_form,
        1e-10,
        format!(
            "relative residual of both identities over {} pairs",
            j.pairs
        ),
    ));
    out.report.verdict(Verdict::at_most(
        "jacobian.finite_difference",
        j.finite_difference,
        1e-6,
        "identities with a finite-difference Jacobian",
    ));
    out.report.verdict(Verdict::at_most(
        "jacobian.chain_rule",
        j.chain_rule,
        1e-10,
        "det J(phi_a, phi_a^-1 z) det J(phi_a^-1, z) = 1",
    ));
    out.report.result("jacobian", &j)?;

    let dist = distance_axiom_check(d, s.samples, s.seed)?;
    out.report.verdict(Verdict::at_most(
        "distance.symmetry",
        dist.symmetry,
        1e-10,
        "max |b(x,y) - b(y,x)|",
    ));
    out.report.verdict(Verdict::at_most(
        "distance.identity",
        dist.identity,
        1e-10,
        "max b(x,x)",
    ));
    out.report.verdict(Verdict::at_most(
        "distance.triangle",
        dist.triangle,
        1e-10,
        "max (b(x,z) - b(x,y) - b(y,z)) / (1 + b(x,z))",
    ));
    out.report.result("distance", &dist)?;

    let deltas = profile_deltas(s.margin);
    let c = comparability_check(d, s.radius, &deltas, s.seed)?;
    let finest = c.rows.last().expect("nonempty");
    if let Some(limit) = c.limit {
        out.report.verdict(Verdict::at_most(
            "comparability.upper",
            finest.c_r_upper,
            limit + 1e-3,
            format!(
                "sup |K(z,a)|/K(a,a) at margin {} against the boundary limit {limit}",
                finest.margin
            ),
        ));
    }
    out.report.verdict(Verdict::at_least(
        "comparability.lower",
        finest.c_r_upper,
        1.0 - 1e-12,
        "the pair z = a gives ratio 1",
    ));
    out.report.verdict(Verdict::holds(
        "comparability.monotone",
        c.monotone,
        "sup nondecreasing as the margin shrinks",
    ));
    if d == Domain::Disk && s.radius == 1.0 && s.margin <= 0.01 {
        out.report.verdict(Verdict::within(
            "comparability.disk_reference",
            finest.c_r_upper,
            2.40,
            c.limit.expect("disk") + 1e-3,
            "disk, r = 1: the sup at margin 0.01 is close to its limit",
        ));
    }
    if let Some((measured, exact)) = c.spot {
        out.report.verdict(Verdict::at_most(
            "comparability.spot",
            (measured - exact).abs(),
            1e-3,
            format!(
                "|k_a(a)|^2 Vol(B(a,r)) at a = 0.5: quadrature {measured}, closed form {exact}"
            ),
        ));
    }
    let mut t = Table::new(
        "comparability",
        &[
            "delta",
            "anchors",
            "pairs",
            "c_r_upper",
            "c_r_lower",
            "k_r_upper",
            "k_r_lower",
        ],
    );
    for r in &c.rows {
        t.push([
            r.margin.to_string(),
            r.anchors.to_string(),
            r.pairs.to_string(),
            r.c_r_upper.to_string(),
            r.c_r_lower.to_string(),
            r.k_r_upper.to_string(),
            r.k_r_lower.to_string(),
        ]);
    }
    out.tables.push(t);
    out.report.result("comparability", &c)?;
    Ok(out)
}

// ---------------------------------------------------------------- shared probes

/// Everything the Carleson and equivalence reports evaluate measures on.
struct Probe {
    domain: Domain,
    lattice: Lattice,
    template: MetricBallTemplate,
    rule: QuadratureRule,
    /// Random points and ray points down to the margin.
    samples: Vec<Point>,
    directions: Vec<Point>,
    ray_params: Vec<f64>,
}

impl Probe {
    fn build(s: &Settings, out: &mut Outcome) -> Result<Option<Probe>> {
        let d = s.domain;
        let lattice = build_lattice(d, s.radius, s.margin, &LatticeOptions::default())?;
        let cert = certify_lattice(&lattice, s.samples, s.seed)?;
        record_lattice(out, &lattice, &cert);
        if !cert.passed {
            return Ok(None);
        }
        let template =
            MetricBallTemplate::new(d, s.radius, SamplerConfig::for_domain(d).volume_resolution)?;
        let rule = build_graded_quadrature(d, s.resolution)?;
        let mut samples = test_points(d, s.test_points, s.margin, s.seed);
        let along = ray_parameters(s.margin, rules::RAY_PER_DECADE);
        for dir in &s.directions {
            samples.extend(along.iter().skip(1).map(|&t| dir.scaled(t)));
        }
        Ok(Some(Probe {
            domain: d,
            lattice,
            template,
            rule,
            samples,
            directions: s.directions.clone(),
            ray_params: ray_parameters(rules::RAY_MARGIN, rules::RAY_PER_DECADE),
        }))
    }

    fn sample_profile<F>(&self, margin: f64, f: F) -> Result<DeltaProfile>
    where
        F: Fn(&Point) -> Result<f64> + Sync,
    {
        let values: Vec<(f64, f64)> = self
            .samples
            .par_iter()
            .map(|z| Ok((self.domain.boundary_distance_unchecked(z), f(z)?)))
            .collect::<Result<_>>()?;
        DeltaProfile::from_values(
            &values,
            &profile_deltas(margin),
            DEFAULT_DIVERGENCE_EXPONENT,
        )
    }

    fn rays<F>(&self, f: F) -> Result<Vec<BoundaryProfile>>
    where
        F: Fn(&Point) -> Result<f64> + Sync,
    {
        self.directions
            .iter()
            .map(|dir| ray_profile(self.domain, dir, &self.ray_params, &f))
            .collect()
    }
}

fn record_lattice(out: &mut Outcome, lattice: &Lattice, cert: &LatticeCertificate) {
    let r = lattice.radius();
    out.report.verdict(Verdict::at_most(
        "lattice.coverage",
        cert.coverage,
        r,
        format!(
            "max distance from {} samples to the nearest node; witness {}",
            cert.samples, cert.coverage_witness
        ),
    ));
    out.report.verdict(Verdict::at_least(
        "lattice.separation",
        cert.separation,
        r / 2.0 - 1e-12,
        format!(
            "min distance between nodes; pair {:?}",
            cert.separation_pair
        ),
    ));
    out.report.verdict(Verdict::within(
        "lattice.overlap_stability",
        cert.multiplicity_doubled as f64 - cert.multiplicity as f64,
        -1.0,
        1.0,
        format!(
            "overlap N = {} at {} samples, {} at twice as many; witness {}",
            cert.multiplicity, cert.samples, cert.multiplicity_doubled, cert.multiplicity_witness
        ),
    ));
    let summary = json!({
        "nodes": lattice.len(),
        "candidates": lattice.candidates(),
        "spacing": lattice.spacing(),
        "radius": r,
        "margin": lattice.margin(),
        "certificate": cert,
    });
    out.report.results.insert("lattice".into(), summary);
    let mut t = table_with_coords(
        "lattice",
        lattice.domain(),
        &["index"],
        &["boundary_distance"],
    );
    for (i, w) in lattice.nodes().iter().enumerate() {
        t.push(
            std::iter::once(i.to_string())
                .chain(point_cells(w))
                .chain([lattice.domain().boundary_distance_unchecked(w).to_string()]),
        );
    }
    out.tables.push(t);
}

fn rays_vanish(rays: &[BoundaryProfile]) -> (bool, f64) {
    let worst = rays
        .iter()
        .map(|p| {
            let m = p.max();
            if m > 0.0 {
                p.last() / m
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    (worst <= rules::RAY_DECAY, worst)
}

fn ray_rows(
    t: &mut Table,
    label: &str,
    probe: &Probe,
    berezin: &[BoundaryProfile],
    averaging: &[BoundaryProfile],
) {
    for (k, (b, a)) in berezin.iter().zip(averaging).enumerate() {
        for (i, s) in b.parameters.iter().enumerate() {
            t.push([
                label.to_string(),
                k.to_string(),
                s.to_string(),
                probe
                    .domain
                    .boundary_distance_unchecked(&b.direction.scaled(*s))
                    .to_string(),
                b.values[i].to_string(),
                a.values[i].to_string(),
            ]);
        }
    }
}

fn bucket_rows(t: &mut Table, label: &str, v: &VanishingCertificate) {
    for b in &v.buckets {
        t.push([
            label.to_string(),
            b.upper.to_string(),
            b.lower.to_string(),
            b.nodes.to_string(),
            b.max.to_string(),
        ]);
    }
}

fn profile_rows(t: &mut Table, label: &str, functional: &str, p: &DeltaProfile) {
    for r in &p.rows {
        t.push([
            label.to_string(),
            functional.to_string(),
            r.delta.to_string(),
            r.nodes.to_string(),
            r.sup.to_string(),
        ]);
    }
}

/// One yes/no reading of a measure property by one diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub holds: bool,
    pub measured: f64,
    pub threshold: f64,
    pub rule: String,
}

impl Diagnostic {
    fn new(name: &str, holds: bool, measured: f64, threshold: f64, rule: &str) -> Self {
        Diagnostic {
            name: name.into(),
            holds,
            measured,
            threshold,
            rule: rule.into(),
        }
    }

    fn classification(&self, subject: &str, property: &str) -> Classification {
        Classification {
            subject: subject.into(),
            diagnostic: self.name.clone(),
            property: property.into(),
            holds: self.holds,
            measured: self.measured,
            threshold: self.threshold,
            rule: self.rule.clone(),
        }
    }
}

/// The first pair of diagnostics that disagree, if any.
pub fn disagreement(ds: &[Diagnostic]) -> Option<(&Diagnostic, &Diagnostic)> {
    let first = ds.first()?;
    ds.iter()
        .find(|d| d.holds != first.holds)
        .map(|d| (first, d))
}

fn agreement_verdict(name: String, subject: &str, property: &str, ds: &[Diagnostic]) -> Verdict {
    match disagreement(ds) {
        None => Verdict::holds(
            name,
            true,
            format!(
                "{subject}: all {} diagnostics say {property} = {}",
                ds.len(),
                ds.first().map(|d| d.holds).unwrap_or(false)
            ),
        ),
        Some((a, b)) => Verdict::holds(
            name,
            false,
            format!(
                "{subject}: {} says {property} = {} but {} says {property} = {}",
                a.name, a.holds, b.name, b.holds
            ),
        ),
    }
}

fn delta_diagnostic(name: &str, p: &DeltaProfile) -> Diagnostic {
    Diagnostic::new(
        name,
        p.bounded,
        p.trend,
        p.divergence_exponent,
        "bounded iff the local growth exponent of the sup over the last two margin steps stays below the threshold",
    )
}

fn ray_diagnostic(name: &str, rays: &[BoundaryProfile]) -> Diagnostic {
    let (holds, worst) = rays_vanish(rays);
    Diagnostic::new(
        name,
        holds,
        worst,
        rules::RAY_DECAY,
        "vanishing iff on every ray the outermost value is at most the threshold times the ray maximum",
    )
}

fn vanishing_diagnostic(v: &VanishingCertificate) -> Diagnostic {
    Diagnostic::new(
        "vanishing_certificate",
        v.passed,
        v.tail_ratio,
        v.decay,
        "vanishing iff bucket maxima do not rise after their peak and the outermost is at most the threshold times the peak",
    )
}

// ---------------------------------------------------------------- carleson

/// Carleson and vanishing readings of one measure on a probe.
struct CarlesonReadings {
    carleson: CarlesonCertificate,
    vanishing: VanishingCertificate,
    berezin_profile: DeltaProfile,
    averaging_profile: DeltaProfile,
    berezin_rays: Vec<BoundaryProfile>,
    averaging_rays: Vec<BoundaryProfile>,
}

fn carleson_readings(mu: &Measure, probe: &Probe, margin: f64) -> Result<CarlesonReadings> {
    let values = averaging_on_nodes(mu, &probe.lattice, &probe.template)?;
    let vanishing = vanishing_on_lattice(
        &probe.lattice,
        &values,
        &VanishingSchedule::for_margin(margin),
    )?;
    let carleson = carleson_from_values(
        &probe.lattice,
        probe.template.radius(),
        values,
        &profile_deltas(margin),
        DEFAULT_DIVERGENCE_EXPONENT,
    )?;
    let berezin = |z: &Point| berezin_transform(mu, z, &probe.rule);
    let averaging = |z: &Point| averaging_function(mu, z, &probe.template);
    Ok(CarlesonReadings {
        carleson,
        vanishing,
        berezin_profile: probe.sample_profile(margin, berezin)?,
        averaging_profile: probe.sample_profile(margin, averaging)?,
        berezin_rays: probe.rays(berezin)?,
        averaging_rays: probe.rays(averaging)?,
    })
}

fn carleson_summary(c: &CarlesonCertificate) -> serde_json::Value {
    json!({
        "radius": c.radius,
        "sup": c.sup,
        "argsup": c.argsup,
        "profile": c.profile,
        "bounded": c.bounded,
    })
}

pub fn carleson_report(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::new(s)?;
    let Some(probe) = Probe::build(s, &mut out)? else {
        return Ok(out);
    };
    let label = s.measure_label.as_str();
    let mu = &s.measure;
    let r = carleson_readings(mu, &probe, s.margin)?;

    let bounded = [
        Diagnostic::new(
            "carleson_certificate",
            r.carleson.bounded,
            r.carleson.profile.trend,
            r.carleson.profile.divergence_exponent,
            "bounded iff the local growth exponent of the lattice sup of the averaging function stays below the threshold",
        ),
        delta_diagnostic("berezin_sup", &r.berezin_profile),
        delta_diagnostic("averaging_sup", &r.averaging_profile),
    ];
    let vanishing = [
        vanishing_diagnostic(&r.vanishing),
        ray_diagnostic("berezin_rays", &r.berezin_rays),
        ray_diagnostic("averaging_rays", &r.averaging_rays),
    ];
    for d in &bounded {
        out.report.classify(d.classification(label, "carleson"));
    }
    for d in &vanishing {
        out.report.classify(d.classification(label, "vanishing"));
    }
    out.report.verdict(agreement_verdict(
        "carleson.agreement".into(),
        label,
        "carleson",
        &bounded,
    ));
    out.report.verdict(agreement_verdict(
        "vanishing.agreement".into(),
        label,
        "vanishing",
        &vanishing,
    ));

    let constants = estimate_constants(
        s.domain,
        s.radius,
        &SamplerConfig {
            seed: s.seed,
            ..SamplerConfig::for_domain(s.domain)
        },
    )?;
    let k_r = constants.k_r();
    let pts = test_points(s.domain, s.test_points, rules::DOMINATION_MARGIN, s.seed);
    let dom = check_pointwise_domination(mu, k_r, &pts, &probe.rule, &probe.template)?;
    out.report.verdict(Verdict::at_least(
        "domination.slack",
        dom.worst_slack,
        rules::DOMINATION_SLACK,
        format!(
            "min K_r mu~ - mu^ over {} points with K_r = {k_r}; worst at {}",
            pts.len(),
            dom.worst_point
        ),
    ));

    out.report
        .result("carleson", &carleson_summary(&r.carleson))?;
    out.report.result("vanishing", &r.vanishing)?;
    out.report.result("berezin_profile", &r.berezin_profile)?;
    out.report
        .result("averaging_profile", &r.averaging_profile)?;
    out.report.result("constants", &constants)?;
    out.report.result(
        "domination",
        &json!({"k_r": dom.k_r, "worst_slack": dom.worst_slack, "worst_point": dom.worst_point}),
    )?;

    let mut t = Table::new(
        "profiles",
        &["measure", "functional", "delta", "nodes", "sup"],
    );
    profile_rows(&mut t, label, "lattice_averaging", &r.carleson.profile);
    profile_rows(&mut t, label, "berezin", &r.berezin_profile);
    profile_rows(&mut t, label, "averaging", &r.averaging_profile);
    out.tables.push(t);
    let mut t = Table::new("buckets", &["measure", "upper", "lower", "nodes", "max"]);
    bucket_rows(&mut t, label, &r.vanishing);
    out.tables.push(t);
    let mut t = Table::new(
        "rays",
        &[
            "measure",
            "direction",
            "s",
            "boundary_distance",
            "berezin",
            "averaging",
        ],
    );
    ray_rows(&mut t, label, &probe, &r.berezin_rays, &r.averaging_rays);
    out.tables.push(t);
    let mut t = table_with_coords(
        "node_values",
        s.domain,
        &["index"],
        &["boundary_distance", "averaging"],
    );
    for (i, (w, v)) in probe
        .lattice
        .nodes()
        .iter()
        .zip(&r.carleson.node_values)
        .enumerate()
    {
        t.push(std::iter::once(i.to_string()).chain(point_cells(w)).chain([
            s.domain.boundary_distance_unchecked(w).to_string(),
            v.to_string(),
        ]));
    }
    out.tables.push(t);
    let mut t = table_with_coords(
        "domination",
        s.domain,
        &["point"],
        &["averaging", "berezin", "slack"],
    );
    for (i, x) in dom.samples.iter().enumerate() {
        t.push(
            std::iter::once(i.to_string())
                .chain(point_cells(&x.point))
                .chain([
                    x.averaging.to_string(),
                    x.berezin.to_string(),
                    x.slack.to_string(),
                ]),
        );
    }
    out.tables.push(t);
    Ok(out)
}

// ---------------------------------------------------------------- equivalence

/// Boundedness and compactness readings of one measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureDiagnostics {
    pub measure: String,
    pub bounded: Vec<Diagnostic>,
    pub compact: Vec<Diagnostic>,
}

impl MeasureDiagnostics {
    pub fn bounded_verdict(&self) -> Option<bool> {
        disagreement(&self.bounded)
            .is_none()
            .then(|| self.bounded[0].holds)
    }

    pub fn compact_verdict(&self) -> Option<bool> {
        disagreement(&self.compact)
            .is_none()
            .then(|| self.compact[0].holds)
    }
}

fn operator_diagnostics(t: &ToeplitzTruncation, degrees: &[u32]) -> (Diagnostic, Diagnostic) {
    let norms = t.norm_profile(degrees);
    let tails = t.tail_profile(degrees);
    let first = norms.first().expect("nonempty").norm;
    let last = norms.last().expect("nonempty").norm;
    let growth = if first > 0.0 { last / first } else { 1.0 };
    let bounded = Diagnostic::new(
        "operator_norm",
        growth < rules::NORM_GROWTH,
        growth,
        rules::NORM_GROWTH,
        "bounded iff the truncated norm grows by less than the threshold factor over the degree range",
    );
    let t0 = tails.first().expect("nonempty").norm;
    let t1 = tails.last().expect("nonempty").norm;
    let ratio = if t0 > 0.0 { t1 / t0 } else { 0.0 };
    let compact = Diagnostic::new(
        "tail_norms",
        t1 <= rules::TAIL_FLOOR || ratio <= rules::TAIL_DECAY,
        ratio,
        rules::TAIL_DECAY,
        "compact iff the top-degree tail norm is below 1e-2 or at most the threshold times the bottom-degree tail norm",
    );
    (bounded, compact)
}

pub fn equivalence_report(s: &Settings) -> Result<Outcome> {
    Ok(equivalence(s)?.0)
}

/// The per-measure readings behind [`equivalence_report`]; fails when the
/// lattice does not certify.
pub fn equivalence_diagnostics(s: &Settings) -> Result<Vec<MeasureDiagnostics>> {
    let (out, diags) = equivalence(s)?;
    if diags.is_empty() {
        let failed: Vec<String> = out.report.failures().map(|v| v.detail.clone()).collect();
        return Err(Error::EmptySample(format!(
            "lattice certification failed: {}",
            failed.join("; ")
        )));
    }
    Ok(diags)
}

fn equivalence(s: &Settings) -> Result<(Outcome, Vec<MeasureDiagnostics>)> {
    let mut out = Outcome::new(s)?;
    let Some(probe) = Probe::build(s, &mut out)? else {
        return Ok((out, Vec::new()));
    };
    let mut all = Vec::new();
    let top = *s.degrees.last().expect("validated");
    let mut summary = Vec::new();
    let mut t_eq = Table::new(
        "equivalence",
        &[
            "measure",
            "property",
            "diagnostic",
            "holds",
            "measured",
            "threshold",
        ],
    );
    let mut t_norms = Table::new("norms", &["measure", "degree", "size", "norm", "tail_norm"]);
    let mut t_prof = Table::new(
        "profiles",
        &["measure", "functional", "delta", "nodes", "sup"],
    );
    let mut t_buckets = Table::new("buckets", &["measure", "upper", "lower", "nodes", "max"]);
    let mut t_rays = Table::new(
        "rays",
        &[
            "measure",
            "direction",
            "s",
            "boundary_distance",
            "berezin",
            "averaging",
        ],
    );
    for (label, mu) in catalog(s.domain) {
        let t = toeplitz_default(&mu, s.domain, top)?;
        let (op_bounded, op_compact) = operator_diagnostics(&t, &s.degrees);
        for (n, tail) in t
            .norm_profile(&s.degrees)
            .iter()
            .zip(t.tail_profile(&s.degrees))
        {
            t_norms.push([
                label.clone(),
                n.degree.to_string(),
                n.size.to_string(),
                n.norm.to_string(),
                tail.norm.to_string(),
            ]);
        }
        let r = carleson_readings(&mu, &probe, s.margin)?;
        let diag = MeasureDiagnostics {
            measure: label.clone(),
            bounded: vec![
                op_bounded,
                delta_diagnostic("berezin_sup", &r.berezin_profile),
                Diagnostic::new(
                    "carleson_certificate",
                    r.carleson.bounded,
                    r.carleson.profile.trend,
                    r.carleson.profile.divergence_exponent,
                    "bounded iff the local growth exponent of the lattice sup of the averaging function stays below the threshold",
                ),
                delta_diagnostic("averaging_sup", &r.averaging_profile),
            ],
            compact: vec![
                op_compact,
                ray_diagnostic("berezin_rays", &r.berezin_rays),
                vanishing_diagnostic(&r.vanishing),
                ray_diagnostic("averaging_rays", &r.averaging_rays),
            ],
        };
        for (prop, ds) in [("bounded", &diag.bounded), ("compact", &diag.compact)] {
            for d in ds.iter() {
                out.report.classify(d.classification(&label, prop));
                t_eq.push([
                    label.clone(),
                    prop.to_string(),
                    d.name.clone(),
                    d.holds.to_string(),
                    d.measured.to_string(),
                    d.threshold.to_string(),
                ]);
            }
            out.report.verdict(agreement_verdict(
                format!("{prop}.{label}"),
                &label,
                prop,
                ds,
            ));
        }
        profile_rows(
            &mut t_prof,
            &label,
            "lattice_averaging",
            &r.carleson.profile,
        );
        profile_rows(&mut t_prof, &label, "berezin", &r.berezin_profile);
        profile_rows(&mut t_prof, &label, "averaging", &r.averaging_profile);
        bucket_rows(&mut t_buckets, &label, &r.vanishing);
        ray_rows(
            &mut t_rays,
            &label,
            &probe,
            &r.berezin_rays,
            &r.averaging_rays,
        );
        summary.push(json!({
            "measure": label,
            "bounded": diag.bounded_verdict(),
            "compact": diag.compact_verdict(),
            "diagnostics": diag,
        }));
        all.push(diag);
    }
    out.report.result("measures", &summary)?;
    out.tables
        .extend([t_eq, t_norms, t_prof, t_buckets, t_rays]);
    Ok((out, all))
}

// ---------------------------------------------------------------- toeplitz

/// `prod_{j=1}^{m} j / (j + t) = Gamma(m+1) Gamma(t+1) / Gamma(m+t+1)`.
fn beta_ratio(m: u32, t: f64) -> f64 {
    (1..=m).map(|j| j as f64 / (j as f64 + t)).product()
}

/// Closed-form diagonal of a radial density truncation, when available.
/// Radial densities give diagonal matrices in the monomial basis.
pub fn radial_diagonal(mu: &Measure, basis: &BasisSpec) -> Option<Vec<f64>> {
    let Measure::Density { family, scale } = mu else {
        return None;
    };
    let t = match *family {
        DensityFamily::Constant { c } => return Some(vec![scale * c; basis.len()]),
        DensityFamily::PowerVanishing { t } => t,
        DensityFamily::PowerBlowup { t } => -t,
        DensityFamily::AnnulusIndicator { .. } => return None,
    };
    let d = basis.domain();
    Some(
        basis
            .indices()
            .iter()
            .map(|alpha| {
                scale
                    * match d {
                        Domain::Polydisk(_) => {
                            alpha.iter().map(|&a| beta_ratio(a + 1, t)).product()
                        }
                        _ => beta_ratio(d.dimension() as u32 + alpha.iter().sum::<u32>(), t),
                    }
            })
            .collect(),
    )
}

pub fn toeplitz_spectrum(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::new(s)?;
    let d = s.domain;
    let mu = &s.measure;
    let label = s.measure_label.as_str();
    let top = *s.degrees.last().expect("validated");
    let rule = toeplitz_rule(d, mu, top)?;
    let basis = crate::toeplitz::build_basis(d, top, &rule)?;
    let t = toeplitz_matrix(mu, &basis, &rule)?;
    let spec = SpectrumReport::new(label.to_string(), &t, &s.degrees, rules::RANK_TOLERANCE);

    out.report.verdict(Verdict::at_most(
        "toeplitz.hermitian",
        t.hermitian_defect(),
        1e-10,
        "max |M - M*|",
    ));
    let min_ev = spec.spectrum.last().copied().unwrap_or(0.0);
    out.report.verdict(Verdict::at_least(
        "toeplitz.positive_semidefinite",
        min_ev,
        -1e-8,
        "smallest eigenvalue of the largest truncation",
    ));
    let mut nested = 0.0f64;
    for &deg in &s.degrees[..s.degrees.len() - 1] {
        let small = toeplitz_matrix(mu, &BasisSpec::new(d, deg), &rule)?;
        nested = nested.max(
            (small.matrix() - t.leading(deg))
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max),
        );
    }
    out.report.verdict(Verdict::at_most(
        "toeplitz.nested",
        nested,
        0.0,
        "leading blocks of the largest truncation equal the smaller truncations on the same rule",
    ));
    let monotone = spec
        .norms
        .windows(2)
        .all(|w| w[1].norm >= w[0].norm * (1.0 - 1e-12));
    out.report.verdict(Verdict::holds(
        "toeplitz.norm_monotone",
        monotone,
        "norms of nested truncations are nondecreasing",
    ));
    if let Some(sup) = mu.density_sup() {
        let norm = spec.norms.last().expect("nonempty").norm;
        out.report.verdict(Verdict::at_most(
            "toeplitz.norm_bound",
            norm,
            sup + 1e-6,
            format!("norm at most the density sup {sup}"),
        ));
    }
    if let Some(diag) = radial_diagonal(mu, &basis) {
        let m = t.matrix();
        let mut dev = 0.0f64;
        for j in 0..m.nrows() {
            for k in 0..m.ncols() {
                let exact = if j == k { diag[j] } else { 0.0 };
                dev = dev.max((m[(j, k)] - exact).norm() / exact.abs().max(1.0));
            }
        }
        out.report.verdict(Verdict::at_most(
            "toeplitz.radial_oracle",
            dev,
            1e-6,
            "entries against the closed-form diagonal of a radial density",
        ));
        let mut tab = Table::new("diagonal", &["index", "multi_index", "entry", "oracle"]);
        for (j, alpha) in basis.indices().iter().enumerate() {
            let a: Vec<String> = alpha.iter().map(|x| x.to_string()).collect();
            tab.push([
                j.to_string(),
                a.join(" "),
                m[(j, j)].re.to_string(),
                diag[j].to_string(),
            ]);
        }
        out.tables.push(tab);
    }
    if !mu.has_density() && !mu.atoms().is_empty() {
        let factor = atomic_factor_spectrum(mu, &basis);
        let dev = spec
            .spectrum
            .iter()
            .zip(factor.iter().chain(std::iter::repeat(&0.0)))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.report.verdict(Verdict::at_most(
            "toeplitz.atomic_factor",
            dev,
            1e-10,
            "spectrum against the squared singular values of the rank-m factor",
        ));
        let atoms = mu.atoms().len();
        out.report.verdict(Verdict::within(
            "toeplitz.atomic_rank",
            spec.rank as f64,
            atoms as f64,
            atoms as f64,
            format!("eigenvalues above {}; {atoms} atoms", rules::RANK_TOLERANCE),
        ));
    }

    let berezin_rule = build_graded_quadrature(d, s.resolution)?;
    let pts = test_points(d, s.test_points, rules::BEREZIN_POINT_MARGIN, s.seed);
    let rows: Vec<(f64, f64, f64, bool)> = pts
        .par_iter()
        .map(|z| {
            let op = t.berezin(z)?;
            let tr = berezin_transform(mu, z, &berezin_rule)?;
            Ok((op.value, tr, op.capture, op.warning))
        })
        .collect::<Result<_>>()?;
    let compared: Vec<f64> = rows
        .iter()
        .filter(|r| !r.3)
        .map(|r| (r.0 - r.1).abs())
        .collect();
    let warnings = rows.len() - compared.len();
    if compared.is_empty() {
        out.report.verdict(Verdict::holds(
            "toeplitz.berezin_identity",
            false,
            "no test point reaches the capture threshold; raise the degree",
        ));
    } else {
        out.report.verdict(Verdict::at_most(
            "toeplitz.berezin_identity",
            compared.iter().copied().fold(0.0, f64::max),
            rules::BEREZIN_AGREEMENT,
            format!(
                "|<T k_z, k_z> - mu~(z)| at {} points; {warnings} skipped below capture {}",
                compared.len(),
                crate::toeplitz::CAPTURE_THRESHOLD
            ),
        ));
        let norm = spec.norms.last().expect("nonempty").norm;
        let excess = rows
            .iter()
            .filter(|r| !r.3)
            .map(|r| r.1 - norm)
            .fold(f64::NEG_INFINITY, f64::max);
        out.report.verdict(Verdict::at_most(
            "toeplitz.berezin_below_norm",
            excess,
            rules::BEREZIN_AGREEMENT,
            format!("max of mu~(z) - ||T_N|| over the compared points; ||T_N|| = {norm:e}"),
        ));
    }
    let mut tab = table_with_coords(
        "berezin",
        d,
        &["point"],
        &["operator", "transform", "capture", "warning"],
    );
    for (i, (z, r)) in pts.iter().zip(&rows).enumerate() {
        tab.push(std::iter::once(i.to_string()).chain(point_cells(z)).chain([
            r.0.to_string(),
            r.1.to_string(),
            r.2.to_string(),
            r.3.to_string(),
        ]));
    }
    out.tables.push(tab);

    let mut tab = Table::new("spectrum", &["index", "eigenvalue"]);
    for (i, x) in spec.spectrum.iter().enumerate() {
        tab.push([i.to_string(), x.to_string()]);
    }
    out.tables.push(tab);
    let mut tab = Table::new(
        "norms",
        &["degree", "size", "norm", "min_eigenvalue", "tail_norm"],
    );
    for (n, tail) in spec.norms.iter().zip(&spec.tails) {
        tab.push([
            n.degree.to_string(),
            n.size.to_string(),
            n.norm.to_string(),
            n.min_eigenvalue.to_string(),
            tail.norm.to_string(),
        ]);
    }
    out.tables.push(tab);
    let mut tab = Table::new("matrix", &["row", "col", "re", "im"]);
    let m = t.matrix();
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            tab.push([
                j.to_string(),
                k.to_string(),
                m[(j, k)].re.to_string(),
                m[(j, k)].im.to_string(),
            ]);
        }
    }
    out.tables.push(tab);

    if d == Domain::Disk {
        let p = positive_bergman_norm_estimate(d, &PPlusOptions::default())?;
        out.report.result("positive_bergman", &p)?;
    }
    out.report.result("spectrum", &spec)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn settings(experiment: Experiment, json: &str) -> Settings {
        ExperimentConfig::from_json(json)
            .unwrap()
            .resolve(experiment)
            .unwrap()
    }

    #[test]
    fn radial_oracle_matches_beta_integrals() {
        let b = BasisSpec::new(Domain::Disk, 5);
        let d = radial_diagonal(&Measure::power_vanishing(1.0), &b).unwrap();
        for (k, x) in d.iter().enumerate() {
            assert!((x - 1.0 / (k as f64 + 2.0)).abs() < 1e-15);
        }
        assert!(radial_diagonal(&Measure::atomic([(Point::origin(1), 1.0)]), &b).is_none());
    }

    #[test]
    fn spectrum_report_for_three_atoms() {
        let s = settings(
            Experiment::ToeplitzSpectrum,
            r#"{"measure": "atomic(3)", "domain": "bidisk", "degrees": [3, 6]}"#,
        );
        let out = run(&s).unwrap();
        assert!(
            out.report.passed,
            "{:?}",
            out.report.failures().collect::<Vec<_>>()
        );
        assert_eq!(out.report.results["spectrum"]["rank"], 3);
    }

    #[test]
    fn disagreement_names_both_sides() {
        let a = Diagnostic::new("x", true, 0.0, 0.0, "");
        let b = Diagnostic::new("y", false, 0.0, 0.0, "");
        let v = agreement_verdict("bounded.m".into(), "m", "bounded", &[a.clone(), b]);
        assert!(!v.passed && v.detail.contains("x says") && v.detail.contains("y says"));
        assert!(agreement_verdict("bounded.m".into(), "m", "bounded", &[a.clone(), a]).passed);
    }
}
