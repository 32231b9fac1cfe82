//! Positive measures on the model domains and integration against them.
//!
//! A measure is a finite sum of parametric Lebesgue densities and point
//! masses. Densities are integrated through a [`QuadratureRule`]; atoms are
//! summed exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domains::{AutomorphismChart, Domain, Point, C64};
use crate::error::{Error, Result};
use crate::quadrature::{MetricBallTemplate, QuadratureRule};

/// Parametric densities with respect to Lebesgue measure.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityFamily {
    /// `c` everywhere.
    Constant { c: f64 },
    /// `prod (1 - |z_i|^2)^t` on disk and polydisk, `(1 - |z|^2)^t` on the ball.
    PowerVanishing { t: f64 },
    /// `(1 - |z|^2)^{-t}` with `0 < t < 1`; disk only.
    PowerBlowup { t: f64 },
    /// Indicator of `s0 <= gauge(z) < s1`.
    AnnulusIndicator { s0: f64, s1: f64 },
}

impl DensityFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DensityFamily::Constant { .. } => "constant",
            DensityFamily::PowerVanishing { .. } => "power_vanishing",
            DensityFamily::PowerBlowup { .. } => "power_blowup",
            DensityFamily::AnnulusIndicator { .. } => "annulus_indicator",
        }
    }

    fn validate(&self, domain: Domain) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        match *self {
            DensityFamily::Constant { c } if !(c >= 0.0 && c.is_finite()) => bad(format!(
                "constant density must be finite and nonnegative, got {c}"
            )),
            DensityFamily::PowerVanishing { t } if !(t > 0.0 && t.is_finite()) => bad(format!(
                "power_vanishing exponent must be positive, got {t}"
            )),
            DensityFamily::PowerBlowup { t } => {
                if domain != Domain::Disk {
                    bad(format!(
                        "power_blowup is defined on the disk only, not on {domain}"
                    ))
                } else if !(t > 0.0 && t < 1.0) {
                    bad(format!("power_blowup exponent must lie in (0, 1), got {t}"))
                } else {
                    Ok(())
                }
            }
            DensityFamily::AnnulusIndicator { s0, s1 } if !(0.0 <= s0 && s0 < s1 && s1 <= 1.0) => {
                bad(format!(
                    "annulus needs 0 <= s0 < s1 <= 1, got s0 = {s0}, s1 = {s1}"
                ))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn eval(&self, domain: Domain, z: &[C64]) -> f64 {
        match *self {
            DensityFamily::Constant { c } => c,
            DensityFamily::PowerVanishing { t } => match domain {
                Domain::Polydisk(_) => z.iter().map(|c| (1.0 - c.norm_sqr()).powf(t)).product(),
                _ => (1.0 - z.iter().map(|c| c.norm_sqr()).sum::<f64>()).powf(t),
            },
            DensityFamily::PowerBlowup { t } => (1.0 - z[0].norm_sqr()).powf(-t),
            DensityFamily::AnnulusIndicator { s0, s1 } => {
                let g = domain.gauge(z);
                if s0 <= g && g < s1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The density at `chart.forward(v)`, using exact boundary defects where
    /// the family depends on them.
    #[inline]
    fn eval_image(&self, domain: Domain, chart: &AutomorphismChart, v: &[C64]) -> f64 {
        match *self {
            DensityFamily::Constant { c } => c,
            DensityFamily::PowerVanishing { t } => match domain {
                Domain::Polydisk(_) => v
                    .iter()
                    .enumerate()
                    .map(|(i, &vi)| chart.coordinate_defect(i, vi).powf(t))
                    .product(),
                _ => chart.boundary_defect(v).powf(t),
            },
            DensityFamily::PowerBlowup { t } => chart.boundary_defect(v).powf(-t),
            DensityFamily::AnnulusIndicator { .. } => self.eval(domain, &chart.forward(v)),
        }
    }

    fn sup(&self) -> Option<f64> {
        match *self {
            DensityFamily::Constant { c } => Some(c),
            DensityFamily::PowerVanishing { .. } | DensityFamily::AnnulusIndicator { .. } => {
                Some(1.0)
            }
            DensityFamily::PowerBlowup { .. } => None,
        }
    }

    fn is_smooth_polynomial(&self) -> bool {
        match *self {
            DensityFamily::Constant { .. } => true,
            DensityFamily::PowerVanishing { t } => t.fract() == 0.0,
            _ => false,
        }
    }
}

/// A point mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// The symbol of a Toeplitz operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    Density { family: DensityFamily, scale: f64 },
    Atomic(Vec<Atom>),
    Sum(Vec<Measure>),
}

impl Measure {
    pub fn lebesgue() -> Self {
        Measure::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Measure::density(DensityFamily::Constant { c })
    }

    pub fn power_vanishing(t: f64) -> Self {
        Measure::density(DensityFamily::PowerVanishing { t })
    }

    pub fn power_blowup(t: f64) -> Self {
        Measure::density(DensityFamily::PowerBlowup { t })
    }

    pub fn density(family: DensityFamily) -> Self {
        Measure::Density { family, scale: 1.0 }
    }

    pub fn atomic<I: IntoIterator<Item = (Point, f64)>>(atoms: I) -> Self {
        Measure::Atomic(
            atoms
                .into_iter()
                .map(|(point, mass)| Atom { point, mass })
                .collect(),
        )
    }

    pub fn zero() -> Self {
        Measure::Atomic(Vec::new())
    }

    /// `c * mu`.
    pub fn scaled(&self, c: f64) -> Measure {
        match self {
            Measure::Density { family, scale } => Measure::Density {
                family: family.clone(),
                scale: scale * c,
            },
            Measure::Atomic(atoms) => Measure::Atomic(
                atoms
                    .iter()
                    .map(|a| Atom {
                        point: a.point.clone(),
                        mass: a.mass * c,
                    })
                    .collect(),
            ),
            Measure::Sum(parts) => Measure::Sum(parts.iter().map(|p| p.scaled(c)).collect()),
        }
    }

    pub fn validate(&self, domain: Domain) -> Result<()> {
        match self {
            Measure::Density { family, scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidMeasure(format!(
                        "density scale must be finite and nonnegative, got {scale}"
                    )));
                }
                family.validate(domain)
            }
            Measure::Atomic(atoms) => {
                for a in atoms {
                    if !(a.mass > 0.0 && a.mass.is_finite()) {
                        return Err(Error::InvalidMeasure(format!(
                            "atom masses must be positive, got {} at {}",
                            a.mass, a.point
                        )));
                    }
                    domain.check(&a.point).map_err(|e| {
                        Error::InvalidMeasure(format!("atom at {} is not interior: {e}", a.point))
                    })?;
                }
                Ok(())
            }
            Measure::Sum(parts) => parts.iter().try_for_each(|p| p.validate(domain)),
        }
    }

    /// Lebesgue density of the absolutely continuous part at `z`.
    #[inline]
    pub fn density_at(&self, domain: Domain, z: &[C64]) -> f64 {
        match self {
            Measure::Density { family, scale } => scale * family.eval(domain, z),
            Measure::Atomic(_) => 0.0,
            Measure::Sum(parts) => parts.iter().map(|p| p.density_at(domain, z)).sum(),
        }
    }

    /// `density_at(domain, chart.forward(v))`, accurate when the image is
    /// close to the boundary.
    #[inline]
    pub fn density_at_image(&self, domain: Domain, chart: &AutomorphismChart, v: &[C64]) -> f64 {
        match self {
            Measure::Density { family, scale } => scale * family.eval_image(domain, chart, v),
            Measure::Atomic(_) => 0.0,
            Measure::Sum(parts) => parts
                .iter()
                .map(|p| p.density_at_image(domain, chart, v))
                .sum(),
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            Measure::Density { .. } => true,
            Measure::Atomic(_) => false,
            Measure::Sum(parts) => parts.iter().any(Measure::has_density),
        }
    }

    /// All point masses, flattened.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Measure::Density { .. } => {}
            Measure::Atomic(atoms) => out.extend(atoms.iter()),
            Measure::Sum(parts) => parts.iter().for_each(|p| p.collect_atoms(out)),
        }
    }

    /// `sup u` for `d mu = u dV`; `None` when the measure has atoms or an
    /// unbounded density.
    pub fn density_sup(&self) -> Option<f64> {
        match self {
            Measure::Density { family, scale } => family.sup().map(|s| s * scale),
            Measure::Atomic(atoms) if atoms.is_empty() => Some(0.0),
            Measure::Atomic(_) => None,
            Measure::Sum(parts) => parts.iter().map(Measure::density_sup).sum(),
        }
    }

    /// Whether the density is singular or non-polynomial at the boundary, so
    /// that a boundary-graded rule should be used.
    pub fn needs_graded(&self) -> bool {
        match self {
            Measure::Density { family, .. } => !family.is_smooth_polynomial(),
            Measure::Atomic(_) => false,
            Measure::Sum(parts) => parts.iter().any(Measure::needs_graded),
        }
    }

    /// `int f d mu`: the density part over the rule's nodes, the atoms lying
    /// in the rule's region exactly.
    pub fn integrate<F>(&self, f: F, rule: &QuadratureRule) -> Result<C64>
    where
        F: Fn(&[C64]) -> C64 + Sync,
    {
        let domain = rule.domain();
        let mut total = C64::new(0.0, 0.0);
        if self.has_density() {
            total += rule.sum_complex(|z, w| {
                let u = self.density_at(domain, z);
                if u == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    f(z) * (u * w)
                }
            });
            if !(total.re.is_finite() && total.im.is_finite()) {
                return Err(locate_non_finite(self, &f, rule));
            }
        }
        for (k, atom) in self.atoms().into_iter().enumerate() {
            if rule.region_contains(&atom.point) {
                let v = f(&atom.point);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        index: rule.len() + k,
                        point: atom.point.to_string(),
                    });
                }
                total += v * atom.mass;
            }
        }
        Ok(total)
    }

    pub fn integrate_real<F>(&self, f: F, rule: &QuadratureRule) -> Result<f64>
    where
        F: Fn(&[C64]) -> f64 + Sync,
    {
        Ok(self.integrate(|z| C64::new(f(z), 0.0), rule)?.re)
    }

    /// Mass of the rule's region.
    pub fn mass(&self, rule: &QuadratureRule) -> Result<f64> {
        self.integrate_real(|_| 1.0, rule)
    }

    /// `mu(B(a, r))` for the radius of `template`. The density part is
    /// integrated over the pushed-forward ball rule; atoms count when
    /// `beta(a, p) <= r`.
    pub fn measure_of_ball(&self, a: &[C64], template: &MetricBallTemplate) -> Result<f64> {
        let domain = template.centered().domain();
        let chart = domain.automorphism(a)?;
        let mut total = 0.0;
        if self.has_density() {
            total += template.centered().sum_real(|u, w| {
                let z = chart.forward(u);
                w * chart.jacobian_abs_sq(u) * self.density_at(domain, &z)
            });
        }
        let r = template.radius();
        for atom in self.atoms() {
            if domain.distance_unchecked(a, &atom.point) <= r {
                total += atom.mass;
            }
        }
        Ok(total)
    }
}

/// Finds the first node where the integrand is not finite.
fn locate_non_finite<F>(mu: &Measure, f: &F, rule: &QuadratureRule) -> Error
where
    F: Fn(&[C64]) -> C64,
{
    let domain = rule.domain();
    for (i, (z, w)) in rule.iter().enumerate() {
        let u = mu.density_at(domain, z);
        let v = if u == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            f(z) * (u * w)
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Error::NonFiniteIntegrand {
                index: i,
                point: Point(z.to_vec()).to_string(),
            };
        }
    }
    Error::NonFiniteIntegrand {
        index: usize::MAX,
        point: "overflow in the reduction".into(),
    }
}

/// Wire format of a measure: `{"type": "density", "family": ..., params}`,
/// `{"type": "atomic", "atoms": [[[re, im, ...], mass], ...]}`,
/// `{"type": "sum", "parts": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawMeasure {
    Density {
        family: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
    Lebesgue {},
    Atomic {
        atoms: Vec<(Vec<f64>, f64)>,
    },
    Sum {
        parts: Vec<RawMeasure>,
    },
}

impl TryFrom<RawMeasure> for Measure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Measure> {
        Ok(match raw {
            RawMeasure::Lebesgue {} => Measure::lebesgue(),
            RawMeasure::Density {
                family,
                c,
                t,
                s0,
                s1,
                scale,
            } => {
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| {
                        Error::InvalidMeasure(format!(
                            "density family {family:?} needs parameter {name:?}"
                        ))
                    })
                };
                let reject = |v: Option<f64>, name: &str| match v {
                    Some(_) => Err(Error::InvalidMeasure(format!(
                        "density family {family:?} takes no parameter {name:?}"
                    ))),
                    None => Ok(()),
                };
                let fam = match family.as_str() {
                    "constant" => {
                        reject(t, "t")?;
                        reject(s0, "s0")?;
                        reject(s1, "s1")?;
                        DensityFamily::Constant { c: need(c, "c")? }
                    }
                    "lebesgue" => {
                        reject(c, "c")?;
                        reject(t, "t")?;
                        reject(s0, "s0")?;
                        reject(s1, "s1")?;
                        DensityFamily::Constant { c: 1.0 }
                    }
                    "power_vanishing" | "power_blowup" => {
                        reject(c, "c")?;
                        reject(s0, "s0")?;
                        reject(s1, "s1")?;
                        let t = need(t, "t")?;
                        if family == "power_vanishing" {
                            DensityFamily::PowerVanishing { t }
                        } else {
                            DensityFamily::PowerBlowup { t }
                        }
                    }
                    "annulus_indicator" => {
                        reject(c, "c")?;
                        reject(t, "t")?;
                        DensityFamily::AnnulusIndicator {
                            s0: need(s0, "s0")?,
                            s1: need(s1, "s1")?,
                        }
                    }
                    other => {
                        return Err(Error::InvalidMeasure(format!(
                            "unknown density family {other:?}; expected constant, lebesgue, \
                             power_vanishing, power_blowup or annulus_indicator"
                        )))
                    }
                };
                Measure::Density {
                    family: fam,
                    scale: scale.unwrap_or(1.0),
                }
            }
            RawMeasure::Atomic { atoms } => Measure::Atomic(
                atoms
                    .into_iter()
                    .map(|(coords, mass)| {
                        Ok(Atom {
                            point: Point::from_reals(&coords)?,
                            mass,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            RawMeasure::Sum { parts } => Measure::Sum(
                parts
                    .into_iter()
                    .map(Measure::try_from)
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

impl From<&Measure> for RawMeasure {
    fn from(m: &Measure) -> RawMeasure {
        match m {
            Measure::Density { family, scale } => {
                let (mut c, mut t, mut s0, mut s1) = (None, None, None, None);
                match *family {
                    DensityFamily::Constant { c: v } => c = Some(v),
                    DensityFamily::PowerVanishing { t: v }
                    | DensityFamily::PowerBlowup { t: v } => t = Some(v),
                    DensityFamily::AnnulusIndicator { s0: a, s1: b } => {
                        s0 = Some(a);
                        s1 = Some(b);
                    }
                }
                RawMeasure::Density {
                    family: family.name().to_string(),
                    c,
                    t,
                    s0,
                    s1,
                    scale: (*scale != 1.0).then_some(*scale),
                }
            }
            Measure::Atomic(atoms) => RawMeasure::Atomic {
                atoms: atoms.iter().map(|a| (a.point.to_reals(), a.mass)).collect(),
            },
            Measure::Sum(parts) => RawMeasure::Sum {
                parts: parts.iter().map(RawMeasure::from).collect(),
            },
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMeasure::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        Measure::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Measure> {
        let raw: RawMeasure = serde_json::from_str(s)
            .map_err(|e| Error::InvalidMeasure(format!("bad measure spec: {e}")))?;
        Measure::try_from(raw)
    }
}

impl Measure {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measures always serialize")
    }
}

/// The named test measures used by the verdict sweeps.
pub fn catalog(domain: Domain) -> Vec<(String, Measure)> {
    let n = domain.dimension();
    let along = |x: C64| {
        let mut p = Point::origin(n);
        p.0[0] = x;
        p
    };
    let mut out = vec![
        ("lebesgue".to_string(), Measure::lebesgue()),
        ("constant(3)".to_string(), Measure::constant(3.0)),
        (
            "power_vanishing(1)".to_string(),
            Measure::power_vanishing(1.0),
        ),
        (
            "power_vanishing(0.5)".to_string(),
            Measure::power_vanishing(0.5),
        ),
    ];
    if domain == Domain::Disk {
        out.push(("power_blowup(0.5)".to_string(), Measure::power_blowup(0.5)));
    }
    out.push((
        "atomic(1)".to_string(),
        Measure::atomic([(domain.center(), 1.0)]),
    ));
    out.push((
        "atomic(3)".to_string(),
        Measure::atomic([
            (domain.center(), 1.0),
            (along(C64::new(0.5, 0.0)), 0.5),
            (along(C64::new(-0.3, 0.4)), 2.0),
        ]),
    ));
    out
}

/// `int (1 - |w|^2)^t dV` over the disk, for oracle checks.
pub fn disk_power_mass(t: f64) -> f64 {
    PI / (t + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{build_graded_quadrature, build_quadrature};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn origin() -> Point {
        Point::origin(1)
    }

    #[test]
    fn image_density_matches_direct_and_stays_finite() {
        for (d, a, v) in [
            (
                Domain::Disk,
                vec![C64::new(0.3, -0.2)],
                vec![C64::new(-0.4, 0.1)],
            ),
            (
                Domain::Ball(2),
                vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.4)],
                vec![C64::new(0.1, 0.5), C64::new(0.2, 0.0)],
            ),
            (
                Domain::Polydisk(2),
                vec![C64::new(0.5, 0.0), C64::new(0.0, -0.6)],
                vec![C64::new(0.2, 0.2), C64::new(-0.7, 0.1)],
            ),
        ] {
            let chart = d.automorphism(&a).unwrap();
            let mu = Measure::power_vanishing(1.5);
            let direct = mu.density_at(d, &chart.forward(&v));
            assert_relative_eq!(
                mu.density_at_image(d, &chart, &v),
                direct,
                max_relative = 1e-12
            );
        }
        let chart = Domain::Disk.automorphism(&[C64::new(0.9999, 0.0)]).unwrap();
        let v = [C64::new(-(1.0 - 1e-13), 0.0)];
        let u = Measure::power_blowup(0.5).density_at_image(Domain::Disk, &chart, &v);
        assert!(u.is_finite() && u > 1.0);
    }

    #[test]
    fn parses_the_wire_grammar() {
        let m: Measure = r#"{"type":"density","family":"power_vanishing","t":1.0}"#
            .parse()
            .unwrap();
        assert_eq!(m, Measure::power_vanishing(1.0));
        let m: Measure = r#"{"type":"atomic","atoms":[[[0.0,0.0],1.0]]}"#.parse().unwrap();
        assert_eq!(m, Measure::atomic([(origin(), 1.0)]));
        let m: Measure = r#"{"type":"sum","parts":[{"type":"lebesgue"},{"type":"density","family":"constant","c":2.0,"scale":0.5}]}"#
            .parse()
            .unwrap();
        assert_eq!(
            m,
            Measure::Sum(vec![
                Measure::lebesgue(),
                Measure::Density {
                    family: DensityFamily::Constant { c: 2.0 },
                    scale: 0.5
                }
            ])
        );
        let back: Measure = m.to_json().parse().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            r#"{"type":"density","family":"power_vanishing"}"#,
            r#"{"type":"density","family":"power_vanishing","t":1.0,"c":2.0}"#,
            r#"{"type":"density","family":"weird","t":1.0}"#,
            r#"{"type":"atomic","atoms":[[[0.0],1.0]]}"#,
            r#"{"type":"atomic","atoms":[],"extra":1}"#,
            r#"{"type":"nope"}"#,
        ] {
            assert!(bad.parse::<Measure>().is_err(), "{bad}");
        }
        assert!(Measure::power_blowup(1.0).validate(Domain::Disk).is_err());
        assert!(Measure::power_blowup(0.5)
            .validate(Domain::Ball(2))
            .is_err());
        assert!(Measure::atomic([(Point::scalar(C64::new(1.0, 0.0)), 1.0)])
            .validate(Domain::Disk)
            .is_err());
        assert!(Measure::atomic([(origin(), -1.0)])
            .validate(Domain::Disk)
            .is_err());
        assert!(Measure::atomic([(origin(), 1.0)])
            .validate(Domain::Ball(2))
            .is_err());
    }

    #[test]
    fn integrates_catalog_examples() {
        let rule = build_quadrature(Domain::Disk, 32).unwrap();
        let v = Measure::lebesgue().integrate_real(|_| 1.0, &rule).unwrap();
        assert_relative_eq!(v, PI, epsilon = 1e-12);
        let v = Measure::power_vanishing(1.0).mass(&rule).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-8);
        let v = Measure::atomic([(origin(), 2.5)])
            .integrate_real(|z| z[0].norm_sqr() + 1.0, &rule)
            .unwrap();
        assert_relative_eq!(v, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn blowup_mass_is_finite_and_stable() {
        for t in [0.25, 0.5, 0.75] {
            let mu = Measure::power_blowup(t);
            let coarse = mu
                .mass(&build_graded_quadrature(Domain::Disk, 24).unwrap())
                .unwrap();
            let fine = mu
                .mass(&build_graded_quadrature(Domain::Disk, 48).unwrap())
                .unwrap();
            assert!((fine - coarse).abs() / fine < 1e-3, "t={t}");
            assert_relative_eq!(fine, PI / (1.0 - t), max_relative = 1e-6);
        }
    }

    #[test]
    fn refinement_changes_density_integrals_little() {
        let families = [
            Measure::lebesgue(),
            Measure::power_vanishing(1.0),
            Measure::power_vanishing(0.5),
            Measure::power_blowup(0.5),
        ];
        for mu in families {
            let coarse = mu
                .integrate_real(
                    |z| 1.0 + z[0].re,
                    &build_graded_quadrature(Domain::Disk, 16).unwrap(),
                )
                .unwrap();
            let fine = mu
                .integrate_real(
                    |z| 1.0 + z[0].re,
                    &build_graded_quadrature(Domain::Disk, 32).unwrap(),
                )
                .unwrap();
            assert!((fine - coarse).abs() / fine < 1e-3, "{mu:?}");
        }
    }

    #[test]
    fn reports_non_finite_integrands() {
        let rule = build_quadrature(Domain::Disk, 8).unwrap();
        let err = Measure::lebesgue()
            .integrate(|_| C64::new(f64::NAN, 0.0), &rule)
            .unwrap_err();
        assert!(
            matches!(err, Error::NonFiniteIntegrand { index: 0, .. }),
            "{err}"
        );
    }

    #[test]
    fn measure_of_ball_examples() {
        let d = Domain::Disk;
        let tpl = MetricBallTemplate::new(d, 1.0, 16).unwrap();
        let zero = [C64::new(0.0, 0.0)];
        let v = Measure::lebesgue().measure_of_ball(&zero, &tpl).unwrap();
        assert_relative_eq!(
            v,
            Domain::disk_metric_ball_volume(zero[0], 1.0),
            epsilon = 1e-12
        );
        let v = Measure::atomic([(origin(), 1.0)])
            .measure_of_ball(&[C64::new(0.5, 0.0)], &tpl)
            .unwrap();
        assert_eq!(v, 1.0);
        let rho2 = (1.0 / std::f64::consts::SQRT_2).tanh().powi(2);
        let v = Measure::power_vanishing(1.0)
            .measure_of_ball(&zero, &tpl)
            .unwrap();
        assert_relative_eq!(v, PI * (rho2 - rho2 * rho2 / 2.0), epsilon = 1e-10);
    }

    #[test]
    fn atom_on_the_sphere_counts_as_inside() {
        let d = Domain::Disk;
        let p = Point::scalar(C64::new(0.5, 0.0));
        let r = d.distance(&[C64::new(0.0, 0.0)], &p).unwrap();
        let tpl = MetricBallTemplate::new(d, r, 8).unwrap();
        let v = Measure::atomic([(p, 1.0)])
            .measure_of_ball(&[C64::new(0.0, 0.0)], &tpl)
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn catalog_is_valid_everywhere() {
        for d in [Domain::Disk, Domain::Ball(2), Domain::Polydisk(2)] {
            for (name, mu) in catalog(d) {
                mu.validate(d)
                    .unwrap_or_else(|e| panic!("{name} on {d}: {e}"));
            }
        }
    }

    fn measure_strategy() -> impl Strategy<Value = Measure> {
        let density = prop_oneof![
            (0.0f64..5.0).prop_map(Measure::constant),
            (0.1f64..3.0).prop_map(Measure::power_vanishing),
            (0.05f64..0.95).prop_map(Measure::power_blowup),
        ];
        let atoms = prop::collection::vec(((0.0f64..0.95), (0.0f64..6.3), (0.01f64..3.0)), 0..4)
            .prop_map(|v| {
                Measure::atomic(
                    v.into_iter()
                        .map(|(r, th, m)| (Point::scalar(C64::from_polar(r, th)), m)),
                )
            });
        prop_oneof![density, atoms]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sum_is_additive(a in measure_strategy(), b in measure_strategy()) {
            let rule = build_graded_quadrature(Domain::Disk, 12).unwrap();
            let f = |z: &[C64]| C64::new(1.0, 0.0) + z[0] * 0.5;
            let sa = a.integrate(f, &rule).unwrap();
            let sb = b.integrate(f, &rule).unwrap();
            let sum = Measure::Sum(vec![a, b]).integrate(f, &rule).unwrap();
            prop_assert!((sum - sa - sb).norm() <= 1e-12 * (1.0 + sum.norm()));
        }

        #[test]
        fn ball_measure_is_monotone_in_radius(
            mu in measure_strategy(),
            r1 in 0.1f64..2.0,
            dr in 0.0f64..1.5,
            x in -0.9f64..0.9,
        ) {
            let a = [C64::new(x, 0.0)];
            let small = MetricBallTemplate::new(Domain::Disk, r1, 12).unwrap();
            let big = MetricBallTemplate::new(Domain::Disk, r1 + dr, 12).unwrap();
            let m1 = mu.measure_of_ball(&a, &small).unwrap();
            let m2 = mu.measure_of_ball(&a, &big).unwrap();
            prop_assert!(m1 <= m2 * (1.0 + 1e-9) + 1e-12, "{m1} > {m2}");
        }

        #[test]
        fn scaling_is_exact(mu in measure_strategy(), c in 0.1f64..10.0) {
            let rule = build_graded_quadrature(Domain::Disk, 8).unwrap();
            let m = mu.mass(&rule).unwrap();
            let mc = mu.scaled(c).mass(&rule).unwrap();
            prop_assert!((mc - c * m).abs() <= 1e-12 * (1.0 + mc.abs()));
        }
    }
}
