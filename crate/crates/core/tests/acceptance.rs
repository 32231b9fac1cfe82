//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use bergtoep::config::{Experiment, ExperimentConfig};
use bergtoep::experiments::equivalence_diagnostics;
use bergtoep::functionals::{
    averaging_function, berezin_transform, boundary_weak_convergence_check,
    check_pointwise_domination, estimate_constants, ray_parameters, test_points, HolomorphicFn,
    SamplerConfig,
};
use bergtoep::geometry::{
    comparability_check, jacobian_check, minimality_check, reproducing_check, reproducing_points,
};
use bergtoep::lattice::{build_lattice, certify_lattice, LatticeOptions};
use bergtoep::measures::catalog;
use bergtoep::quadrature::{build_graded_quadrature, MetricBallTemplate, TruncatedScheme};
use bergtoep::toeplitz::{
    compactness_profile, positive_bergman_norm_estimate, toeplitz_default, PPlusOptions,
};
use bergtoep::{Domain, Measure, Result, C64};

const MODELS: [Domain; 3] = [Domain::Disk, Domain::Ball(2), Domain::Polydisk(2)];

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        summary: summary.into(),
    })
}

fn reproducing() -> Result<Outcome> {
    let pts = reproducing_points(Domain::Disk, 20, 0);
    let c = reproducing_check(Domain::Disk, 64, 10, &pts)?;
    outcome(
        c.max_error <= 1e-8,
        format!("max error {:.2e} (<= 1e-8)", c.max_error),
    )
}

fn minimality() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for d in MODELS {
        worst = worst.max(minimality_check(d, 1000, 0)?.max_deviation);
    }
    outcome(
        worst <= 1e-12,
        format!("max |K(z,0) Vol - 1| {worst:.2e} (<= 1e-12)"),
    )
}

fn jacobians() -> Result<Outcome> {
    let disk = jacobian_check(Domain::Disk, 1000, 0)?;
    let bidisk = jacobian_check(Domain::Polydisk(2), 1000, 0)?;
    let ball = jacobian_check(Domain::Ball(2), 1000, 0)?;
    let closed = disk.closed_form.max(bidisk.closed_form);
    outcome(
        closed <= 1e-10 && ball.finite_difference <= 1e-6,
        format!(
            "closed forms {closed:.2e} (<= 1e-10), ball(2) finite difference {:.2e} (<= 1e-6)",
            ball.finite_difference
        ),
    )
}

fn comparability() -> Result<Outcome> {
    let c = comparability_check(Domain::Disk, 1.0, &[0.3, 0.1, 0.03, 0.01], 0)?;
    let limit = c.limit.expect("disk limit");
    let at = c
        .rows
        .iter()
        .find(|r| r.margin == 0.01)
        .expect("row at 0.01")
        .c_r_upper;
    let ok = (2.40..=limit + 1e-3).contains(&at) && c.monotone;
    outcome(
        ok,
        format!(
            "sup at delta 0.01 = {at:.5} in [2.40, {:.5}], monotone {}",
            limit + 1e-3,
            c.monotone
        ),
    )
}

fn spot_value() -> Result<Outcome> {
    let c = comparability_check(Domain::Disk, 1.0, &[0.1], 0)?;
    let (measured, exact) = c.spot.expect("disk spot");
    let err = (measured - exact).abs().max((measured - 0.45031).abs());
    outcome(
        err <= 1e-3,
        format!("{measured:.6} against {exact:.6} (+- 1e-3)"),
    )
}

fn domination() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut at = String::new();
    for d in MODELS {
        let cfg = SamplerConfig::for_domain(d);
        let k_r = estimate_constants(d, 1.0, &cfg)?.k_r();
        let template = MetricBallTemplate::new(d, 1.0, cfg.volume_resolution)?;
        let rule = build_graded_quadrature(d, if d == Domain::Disk { 48 } else { 12 })?;
        let pts = test_points(d, 50, 0.1, 0);
        for (name, mu) in catalog(d) {
            let rep = check_pointwise_domination(&mu, k_r, &pts, &rule, &template)?;
            if rep.worst_slack < worst {
                worst = rep.worst_slack;
                at = format!("{name} on {d}");
            }
        }
    }
    outcome(
        worst >= -1e-6,
        format!("worst slack {worst:.3e} ({at}) (>= -1e-6)"),
    )
}

fn lattice() -> Result<Outcome> {
    let l = build_lattice(Domain::Disk, 1.0, 0.01, &LatticeOptions::default())?;
    let c = certify_lattice(&l, 100_000, 0)?;
    outcome(
        c.covered && c.separated && c.stable,
        format!(
            "{} nodes, coverage {:.3} (<= 1), separation {:.3} (>= 0.5), N {} / {} doubled",
            l.len(),
            c.coverage,
            c.separation,
            c.multiplicity,
            c.multiplicity_doubled
        ),
    )
}

fn berezin_identity() -> Result<Outcome> {
    let d = Domain::Disk;
    let rule = build_graded_quadrature(d, 48)?;
    let pts = test_points(d, 50, 0.5, 0);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for mu in [
        Measure::constant(3.0),
        Measure::power_vanishing(1.0),
        Measure::power_vanishing(0.5),
    ] {
        let t = toeplitz_default(&mu, d, 20)?;
        for z in &pts {
            let op = t.berezin(z)?;
            if op.warning {
                continue;
            }
            worst = worst.max((op.value - berezin_transform(&mu, z, &rule)?).abs());
            compared += 1;
        }
    }
    outcome(
        compared == 150 && worst <= 1e-3,
        format!("{compared}/150 points captured, max gap {worst:.2e} (<= 1e-3)"),
    )
}

fn lebesgue_fixed_points() -> Result<Outcome> {
    let d = Domain::Disk;
    let mu = Measure::lebesgue();
    let rule = build_graded_quadrature(d, 48)?;
    let template = MetricBallTemplate::new(d, 1.0, SamplerConfig::for_domain(d).volume_resolution)?;
    let mut tilde = 0.0f64;
    let mut hat = 0.0f64;
    for z in test_points(d, 50, 0.01, 0) {
        tilde = tilde.max((berezin_transform(&mu, &z, &rule)? - 1.0).abs());
        hat = hat.max((averaging_function(&mu, &z, &template)? - 1.0).abs());
    }
    let t = toeplitz_default(&mu, d, 20)?;
    let m = t.matrix();
    let mut eye = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            eye = eye.max((m[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    outcome(
        tilde <= 1e-6 && hat <= 1e-6 && eye <= 1e-8,
        format!("mu~ {tilde:.1e}, mu^ {hat:.1e} (<= 1e-6), T - I {eye:.1e} (<= 1e-8)"),
    )
}

fn equivalence() -> Result<Outcome> {
    let s = ExperimentConfig::default().resolve(Experiment::EquivalenceReport)?;
    let mut wrong = Vec::new();
    for m in equivalence_diagnostics(&s)? {
        let bounded = m.measure != "power_blowup(0.5)";
        let compact = m.measure.starts_with("power_vanishing") || m.measure.starts_with("atomic");
        if m.bounded_verdict() != Some(bounded) {
            wrong.push(format!("{} bounded", m.measure));
        }
        if m.compact_verdict() != Some(compact) {
            wrong.push(format!("{} compact", m.measure));
        }
    }
    if wrong.is_empty() {
        outcome(
            true,
            "all diagnostics agree and match the expected verdicts",
        )
    } else {
        outcome(
            false,
            format!("disagreeing or unexpected: {}", wrong.join(", ")),
        )
    }
}

fn compactness_profiles() -> Result<Outcome> {
    let cutoffs = [0, 5, 10, 15, 19];
    let rows = compactness_profile(&Measure::power_vanishing(1.0), Domain::Disk, &cutoffs)?;
    let tail = rows
        .iter()
        .map(|r| (r.norm * (r.degree as f64 + 2.0) - 1.0).abs())
        .fold(0.0f64, f64::max);
    let mut rank_ok = true;
    let mut ranks = Vec::new();
    for (name, mu) in catalog(Domain::Disk)
        .into_iter()
        .filter(|(n, _)| n.starts_with("atomic"))
    {
        let t = toeplitz_default(&mu, Domain::Disk, 20)?;
        let atoms = mu.atoms().len();
        let spec = t.spectrum();
        let trailing = spec.iter().skip(atoms).fold(0.0f64, |m, x| m.max(x.abs()));
        rank_ok &= t.numerical_rank(1e-8) == atoms && trailing < 1e-8;
        ranks.push(format!(
            "{name} rank {} trailing {trailing:.1e}",
            t.numerical_rank(1e-8)
        ));
    }
    outcome(
        tail <= 0.01 && rank_ok,
        format!(
            "tail vs 1/(d+2) rel {tail:.1e} (<= 1%); {}",
            ranks.join("; ")
        ),
    )
}

fn positive_bergman() -> Result<Outcome> {
    let hyp = positive_bergman_norm_estimate(Domain::Disk, &PPlusOptions::default())?;
    let geo = positive_bergman_norm_estimate(
        Domain::Disk,
        &PPlusOptions {
            scheme: TruncatedScheme::Geometric,
            ..PPlusOptions::default()
        },
    )?;
    let across = (hyp.refined_value - geo.refined_value).abs() / hyp.refined_value;
    let refine = hyp.refinement_change.max(geo.refinement_change);
    outcome(
        refine <= 0.05 && across <= 0.05,
        format!(
            "hyperbolic {:.4} -> {:.4}, geometric {:.4} -> {:.4}; refinement {refine:.3}, schemes {across:.3} (<= 0.05)",
            hyp.value, hyp.refined_value, geo.value, geo.refined_value
        ),
    )
}

fn weak_convergence() -> Result<Outcome> {
    let d = Domain::Disk;
    let s = ray_parameters(0.01, 4);
    let p = boundary_weak_convergence_check(
        d,
        &HolomorphicFn::coordinate(d),
        &[C64::new(1.0, 0.0)],
        &s,
    )?;
    let exact = 0.99 * std::f64::consts::PI.sqrt() * (1.0 - 0.99f64 * 0.99);
    let err = (p.last() - exact).abs();
    let mono = p.decreasing_from(0.8);
    outcome(
        err <= 1e-6 && (exact - 0.03492).abs() <= 1e-5 && mono,
        format!(
            "value at 0.99 {:.6} against {exact:.6}, monotone from 0.8 {mono}",
            p.last()
        ),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check); 13] = [
        ("reproducing_property", reproducing),
        ("minimality", minimality),
        ("jacobian_identities", jacobians),
        ("kernel_comparability", comparability),
        ("spot_value", spot_value),
        ("pointwise_domination", domination),
        ("lattice_certificate", lattice),
        ("berezin_identity", berezin_identity),
        ("lebesgue_fixed_points", lebesgue_fixed_points),
        ("equivalence_verdicts", equivalence),
        ("compactness_profiles", compactness_profiles),
        ("positive_bergman_operator", positive_bergman),
        ("weak_convergence", weak_convergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, summary) = match check() {
            Ok(o) => (o.passed, o.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} {:>2} {name}: {summary} [{secs:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        failed += usize::from(!ok);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
