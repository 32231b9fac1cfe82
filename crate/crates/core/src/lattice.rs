//! Separated nets for the Bergman metric on a truncated domain.
//!
//! Nodes are picked greedily from a candidate grid of spacing `h < r/2`: a
//! candidate is accepted when its distance to every accepted node exceeds
//! `s = r - h`. Every candidate then lies within `s` of a node and every
//! point within about `0.7 h` of a candidate, so the net covers at radius
//! `r`, while distinct nodes stay more than `s > r/2` apart.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{Domain, Point, C64};
use crate::error::{Error, Result};
use crate::sampling::{streams, Sampler};

/// Candidate grid settings for [`build_lattice`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeOptions {
    /// Grid spacing in Bergman distance; defaults to `r/6` on the disk and
    /// `r/3` otherwise.
    pub spacing: Option<f64>,
    pub candidate_budget: usize,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            spacing: None,
            candidate_budget: 2_000_000,
        }
    }
}

pub fn default_spacing(domain: Domain, r: f64) -> f64 {
    match domain {
        Domain::Disk => r / 6.0,
        _ => r / 3.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lattice {
    domain: Domain,
    radius: f64,
    margin: f64,
    spacing: f64,
    candidates: usize,
    /// Max number of balls `B(w_j, 2r)` containing a node.
    multiplicity: usize,
    nodes: Vec<Point>,
}

impl Lattice {
    /// Wraps an externally produced node set.
    pub fn from_nodes(domain: Domain, radius: f64, margin: f64, nodes: Vec<Point>) -> Result<Self> {
        for w in &nodes {
            domain.check(w)?;
        }
        let index = NodeIndex::from_nodes(domain, &nodes);
        let multiplicity = nodes
            .par_iter()
            .map(|w| index.count_within(w, 2.0 * radius))
            .max()
            .unwrap_or(0);
        Ok(Lattice {
            domain,
            radius,
            margin,
            spacing: 0.0,
            candidates: nodes.len(),
            multiplicity,
            nodes,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Table with one row per node: index, interleaved coordinates and the
    /// boundary distance, preceded by `#` lines carrying `r`, `delta`, `N`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# domain={}", self.domain)?;
        writeln!(out, "# radius={}", self.radius)?;
        writeln!(out, "# margin={}", self.margin)?;
        writeln!(out, "# multiplicity={}", self.multiplicity)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for k in 0..self.domain.dimension() {
            header.push(format!("re{k}"));
            header.push(format!("im{k}"));
        }
        header.push("boundary_distance".into());
        w.write_record(&header).map_err(csv_error)?;
        for (i, p) in self.nodes.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.to_reals().iter().map(|x| x.to_string()));
            row.push(self.domain.boundary_distance_unchecked(p).to_string());
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Bergman radii `0, h, 2h, ...` up to `r_max`, with `r_max` itself as the
/// last shell.
fn shells(r_max: f64, h: f64) -> Vec<f64> {
    let k_max = (r_max / h).floor() as usize;
    let mut out: Vec<f64> = (0..=k_max).map(|k| k as f64 * h).collect();
    if r_max - k_max as f64 * h > 1e-6 * h {
        out.push(r_max);
    }
    out
}

fn disk_candidates(curv: f64, t_max: f64, h: f64, budget: usize) -> Result<Vec<C64>> {
    let r_max = curv * t_max.atanh();
    let mut out = Vec::new();
    for (k, big_r) in shells(r_max, h).into_iter().enumerate() {
        if big_r == 0.0 {
            out.push(C64::new(0.0, 0.0));
            continue;
        }
        let t = (big_r / curv).tanh().min(t_max);
        // size the ring by the circumference one shell further out
        let outer = ((big_r + h) / curv).tanh();
        let circ = curv * TAU * outer / (1.0 - outer * outer);
        let m = ((circ / h).ceil() as usize).max(6);
        if out.len() + m > budget {
            return Err(Error::CandidateBudget {
                count: out.len() + m,
                budget,
            });
        }
        let offset = if k % 2 == 1 { 0.5 } else { 0.0 };
        out.extend((0..m).map(|j| C64::from_polar(t, TAU * (j as f64 + offset) / m as f64)));
    }
    Ok(out)
}

/// Points of the real orthant sphere in `n` coordinates, with angular steps
/// scaled by `scale` (the metric length of a unit angle).
fn orthant_grid(n: usize, scale: f64, h: f64) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    let steps = ((scale * PI / 2.0 / h).ceil() as usize).max(1);
    let mut out = Vec::new();
    for i in 0..=steps {
        let alpha = PI / 2.0 * i as f64 / steps as f64;
        let (s, c) = alpha.sin_cos();
        if s < 1e-15 {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            out.push(x);
            continue;
        }
        for rest in orthant_grid(n - 1, scale * s, h) {
            let mut x = Vec::with_capacity(n);
            x.push(c);
            x.extend(rest.iter().map(|r| r * s));
            out.push(x);
        }
    }
    out
}

fn ball_candidates(n: usize, t_max: f64, h: f64, budget: usize) -> Result<Vec<Point>> {
    let curv = ((n + 1) as f64).sqrt();
    let r_max = curv * t_max.atanh();
    let h1 = h / SQRT_2;
    let mut out: Vec<Point> = Vec::new();
    for big_r in shells(r_max, h) {
        if big_r == 0.0 {
            out.push(Point::origin(n));
            continue;
        }
        let t = (big_r / curv).tanh().min(t_max);
        let outer = ((big_r + 0.5 * h) / curv).tanh();
        let tangential = curv * outer / (1.0 - outer * outer).sqrt();
        let normal = curv * outer / (1.0 - outer * outer);
        for x in orthant_grid(n, tangential, h1) {
            let counts: Vec<usize> = x
                .iter()
                .map(|xi| {
                    if *xi < 1e-12 {
                        1
                    } else {
                        ((TAU * normal * xi / h1).ceil() as usize).max(1)
                    }
                })
                .collect();
            let total: usize = counts.iter().product();
            if out.len() + total > budget {
                return Err(Error::CandidateBudget {
                    count: out.len() + total,
                    budget,
                });
            }
            let mut idx = vec![0usize; n];
            loop {
                out.push(Point(
                    (0..n)
                        .map(|i| C64::from_polar(t * x[i], TAU * idx[i] as f64 / counts[i] as f64))
                        .collect(),
                ));
                let mut k = n;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < counts[k] {
                        break;
                    }
                    idx[k] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn candidate_grid(domain: Domain, margin: f64, h: f64, budget: usize) -> Result<Vec<Point>> {
    let t_max = 1.0 - margin;
    match domain {
        Domain::Disk => Ok(disk_candidates(SQRT_2, t_max, h, budget)?
            .into_iter()
            .map(Point::scalar)
            .collect()),
        Domain::Polydisk(n) => {
            let factor = disk_candidates(SQRT_2, t_max, h / (n as f64).sqrt(), budget)?;
            let total = (factor.len() as f64).powi(n as i32);
            if total > budget as f64 {
                return Err(Error::CandidateBudget {
                    count: total.min(usize::MAX as f64) as usize,
                    budget,
                });
            }
            let mut out = vec![Vec::new()];
            for _ in 0..n {
                out = out
                    .into_iter()
                    .flat_map(|p: Vec<C64>| {
                        factor.iter().map(move |z| {
                            let mut q = p.clone();
                            q.push(*z);
                            q
                        })
                    })
                    .collect();
            }
            Ok(out.into_iter().map(Point).collect())
        }
        Domain::Ball(n) => ball_candidates(n, t_max, h, budget),
    }
}

/// Greedy `(r - h)`-separated net of `{boundary distance >= margin}`.
pub fn build_lattice(
    domain: Domain,
    r: f64,
    margin: f64,
    opts: &LatticeOptions,
) -> Result<Lattice> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "boundary margin must lie in (0, 1), got {margin}"
        )));
    }
    let h = opts.spacing.unwrap_or_else(|| default_spacing(domain, r));
    if !(h > 0.0) || h >= r / 2.0 {
        return Err(Error::GridTooCoarse {
            spacing: h,
            radius: r,
            limit: r / 2.0,
        });
    }
    let candidates = candidate_grid(domain, margin, h, opts.candidate_budget)?;
    let mut index = NodeIndex::new(domain);
    for c in &candidates {
        if !index.any_within(c, r - h) {
            index.insert(c.clone());
        }
    }
    let multiplicity = index
        .points
        .par_iter()
        .map(|w| index.count_within(w, 2.0 * r))
        .max()
        .unwrap_or(0);
    Ok(Lattice {
        domain,
        radius: r,
        margin,
        spacing: h,
        candidates: candidates.len(),
        multiplicity,
        nodes: index.points,
    })
}

/// Spatial index over nodes, keyed on the first coordinate: nodes are
/// grouped by its modulus and sorted by its argument.
///
/// The projection onto one coordinate does not increase pseudo-hyperbolic
/// distance (Schwarz-Pick on the ball, the product structure on the
/// polydisk), so `beta(z, w) <= rho` forces the first coordinates into a
/// disk of pseudo-hyperbolic radius `sigma(rho)`.
struct NodeIndex {
    domain: Domain,
    points: Vec<Point>,
    rings: Vec<Ring>,
}

struct Ring {
    t: f64,
    big_r: f64,
    entries: Vec<(f64, usize)>,
}

const RING_TOL: f64 = 1e-12;

/// Pseudo-hyperbolic disk radius containing every coordinate of
/// `B(z, rho)`.
fn coordinate_sigma(domain: Domain, rho: f64) -> f64 {
    match domain {
        Domain::Ball(n) => (rho / ((n + 1) as f64).sqrt()).tanh(),
        _ => (rho / SQRT_2).tanh(),
    }
}

fn disk_pseudo_sq(z: C64, w: C64) -> f64 {
    (z - w).norm_sqr() / (C64::new(1.0, 0.0) - z * w.conj()).norm_sqr()
}

impl NodeIndex {
    fn new(domain: Domain) -> Self {
        NodeIndex {
            domain,
            points: Vec::new(),
            rings: Vec::new(),
        }
    }

    fn from_nodes(domain: Domain, nodes: &[Point]) -> Self {
        let mut index = NodeIndex::new(domain);
        for w in nodes {
            index.insert(w.clone());
        }
        index
    }

    fn insert(&mut self, p: Point) {
        let id = self.points.len();
        let z = p[0];
        let t = z.norm();
        let theta = z.arg().rem_euclid(TAU);
        let pos = self.rings.partition_point(|g| g.t < t - RING_TOL);
        if pos == self.rings.len() || (self.rings[pos].t - t).abs() > RING_TOL {
            self.rings.insert(
                pos,
                Ring {
                    t,
                    big_r: Domain::Disk.distance_for_radius(t),
                    entries: Vec::new(),
                },
            );
        }
        let ring = &mut self.rings[pos];
        let at = ring.entries.partition_point(|e| e.0 <= theta);
        ring.entries.insert(at, (theta, id));
        self.points.push(p);
    }

    /// Calls `f(id, distance)` for every node with `beta(z, node) <= rho`
    /// until `f` returns false.
    fn visit_within<F: FnMut(usize, f64) -> bool>(&self, z: &[C64], rho: f64, mut f: F) {
        let domain = self.domain;
        let sigma = coordinate_sigma(domain, rho);
        let sigma_sq = sigma * sigma * (1.0 + 1e-12) + 1e-300;
        let mut check = |id: usize| -> bool {
            let w = &self.points[id];
            if z.iter()
                .zip(w.iter())
                .skip(1)
                .any(|(a, b)| disk_pseudo_sq(*a, *b) > sigma_sq)
            {
                return true;
            }
            let d = domain.distance_unchecked(z, w);
            if d <= rho {
                f(id, d)
            } else {
                true
            }
        };
        let a = z[0].norm();
        let big_a = Domain::Disk.distance_for_radius(a);
        // disk distance between first coordinates
        let reach = SQRT_2 * sigma.atanh() + 1e-12;
        let theta_z = z[0].arg().rem_euclid(TAU);
        let lo = self.rings.partition_point(|g| g.big_r < big_a - reach);
        for ring in &self.rings[lo..] {
            if ring.big_r > big_a + reach {
                break;
            }
            let t = ring.t;
            let half = if a * t < 1e-14 {
                PI
            } else {
                let c = (a * a + t * t - sigma * sigma * (1.0 + a * a * t * t))
                    / (2.0 * a * t * (1.0 - sigma * sigma));
                if c <= -1.0 {
                    PI
                } else {
                    c.min(1.0).acos() + 1e-9
                }
            };
            if half >= PI {
                for &(_, id) in &ring.entries {
                    if !check(id) {
                        return;
                    }
                }
                continue;
            }
            let (lo_t, hi_t) = (theta_z - half, theta_z + half);
            let mut ranges = Vec::with_capacity(2);
            if lo_t < 0.0 {
                ranges.push((lo_t + TAU, TAU));
                ranges.push((0.0, hi_t));
            } else if hi_t >= TAU {
                ranges.push((lo_t, TAU));
                ranges.push((0.0, hi_t - TAU));
            } else {
                ranges.push((lo_t, hi_t));
            }
            for (from, to) in ranges {
                let start = ring.entries.partition_point(|e| e.0 < from);
                for &(th, id) in &ring.entries[start..] {
                    if th > to {
                        break;
                    }
                    if !check(id) {
                        return;
                    }
                }
            }
        }
    }

    fn any_within(&self, z: &[C64], rho: f64) -> bool {
        let mut found = false;
        self.visit_within(z, rho, |_, _| {
            found = true;
            false
        });
        found
    }

    fn count_within(&self, z: &[C64], rho: f64) -> usize {
        let mut n = 0;
        self.visit_within(z, rho, |_, _| {
            n += 1;
            true
        });
        n
    }

    /// Nearest node other than `skip` among those within `rho`.
    fn nearest_within(&self, z: &[C64], rho: f64, skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.visit_within(z, rho, |id, d| {
            if Some(id) != skip && best.is_none_or(|b| d < b.1) {
                best = Some((id, d));
            }
            true
        });
        best
    }
}

/// Sampled verification of the covering, separation and finite-overlap
/// properties of a lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeCertificate {
    pub samples: usize,
    /// Largest distance from a sample to its nearest node.
    pub coverage: f64,
    pub coverage_witness: Point,
    pub covered: bool,
    /// Smallest distance between two distinct nodes.
    pub separation: f64,
    pub separation_pair: Option<(usize, usize)>,
    pub separated: bool,
    /// Max number of balls `B(w_j, 2r)` containing a sample or a node.
    pub multiplicity: usize,
    pub multiplicity_witness: Point,
    /// The same maximum over twice as many samples.
    pub multiplicity_doubled: usize,
    pub stable: bool,
    pub passed: bool,
}

pub const DEFAULT_CERTIFICATION_SAMPLES: usize = 20_000;

struct SampleStats {
    nearest: f64,
    count: usize,
}

const ASCENT_STARTS: usize = 16;
const ASCENT_STEPS: usize = 200;

/// Local ascent of the overlap count from `z`: random moves of shrinking
/// Bergman length, kept when the count does not drop.
fn climb_overlap(
    index: &NodeIndex,
    lattice: &Lattice,
    mut z: Point,
    mut count: usize,
    sampler: &Sampler,
    start: u64,
) -> (usize, Point) {
    let domain = lattice.domain;
    let r = lattice.radius;
    for step in 0..ASCENT_STEPS {
        let scale = 0.5 * r * (1.0 - step as f64 / ASCENT_STEPS as f64) + 1e-3 * r;
        let chart = domain.automorphism(&z).expect("inside");
        let cand = sampler.metric_ball_point(&chart, scale, (start << 16) | step as u64);
        if domain.boundary_distance_unchecked(&cand) < lattice.margin {
            continue;
        }
        let c = index.count_within(&cand, 2.0 * r);
        if c >= count {
            count = c;
            z = cand;
        }
    }
    (count, z)
}

/// Checks covering at radius `r`, separation at `r/2` and the overlap count
/// `N` on the nodes plus `samples` points of the truncated region (the best
/// samples refined by local ascent), then recounts `N` with `2 * samples`
/// points: the certificate requires the two to differ by at most one.
pub fn certify_lattice(lattice: &Lattice, samples: usize, seed: u64) -> Result<LatticeCertificate> {
    if lattice.is_empty() {
        return Err(Error::EmptySample("lattice has no nodes".into()));
    }
    if samples == 0 {
        return Err(Error::EmptySample(
            "no certification samples requested".into(),
        ));
    }
    let domain = lattice.domain;
    let r = lattice.radius;
    let index = NodeIndex::from_nodes(domain, &lattice.nodes);
    let sampler = Sampler::new(seed, streams::CERTIFICATION);
    let sample = |i: usize| -> Point {
        if i == 0 {
            domain.center()
        } else {
            sampler.truncated_point(domain, lattice.margin, i as u64)
        }
    };
    let stats: Vec<SampleStats> = (0..2 * samples)
        .into_par_iter()
        .map(|i| {
            let z = sample(i);
            let nearest = if i < samples {
                match index.nearest_within(&z, r, None) {
                    Some((_, d)) => d,
                    None => lattice
                        .nodes
                        .iter()
                        .map(|w| domain.distance_unchecked(&z, w))
                        .fold(f64::INFINITY, f64::min),
                }
            } else {
                0.0
            };
            SampleStats {
                nearest,
                count: index.count_within(&z, 2.0 * r),
            }
        })
        .collect();
    let (icov, cov) = stats[..samples]
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.nearest))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    // the nodes themselves join the overlap sample: they are where balls
    // pile up, and they keep the maximum from hinging on random draws
    let (inode, node_max) = lattice
        .nodes
        .par_iter()
        .map(|w| index.count_within(w, 2.0 * r))
        .enumerate()
        .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
        .expect("nonempty");
    let ascent = Sampler::new(seed, streams::OVERLAP_ASCENT);
    let climb = |pool: usize| -> (usize, Point) {
        let mut order: Vec<usize> = (0..pool).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(stats[i].count), i));
        order
            .into_iter()
            .take(ASCENT_STARTS)
            .map(|i| {
                climb_overlap(
                    &index,
                    lattice,
                    sample(i),
                    stats[i].count,
                    &ascent,
                    i as u64,
                )
            })
            .max_by(|a, b| a.0.cmp(&b.0))
            .expect("nonempty")
    };
    let (sample_max, sample_witness) = climb(samples);
    let (mul, mul_witness) = if node_max >= sample_max {
        (node_max, lattice.nodes[inode].clone())
    } else {
        (sample_max, sample_witness)
    };
    let doubled = climb(2 * samples).0.max(node_max);
    let sep = lattice
        .nodes
        .par_iter()
        .enumerate()
        .filter_map(|(i, w)| {
            index
                .nearest_within(w, r, Some(i))
                .map(|(j, d)| (i.min(j), i.max(j), d))
        })
        .min_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let (separation, separation_pair) = match sep {
        Some((i, j, d)) => (d, Some((i, j))),
        None => (r, None),
    };
    let covered = cov <= r;
    let separated = separation >= r / 2.0 - 1e-12;
    let stable = doubled.abs_diff(mul) <= 1;
    Ok(LatticeCertificate {
        samples,
        coverage: cov,
        coverage_witness: sample(icov),
        covered,
        separation,
        separation_pair,
        separated,
        multiplicity: mul,
        multiplicity_witness: mul_witness,
        multiplicity_doubled: doubled,
        stable,
        passed: covered && separated && stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_lattice_is_the_center() {
        let l = build_lattice(Domain::Disk, 2.0, 0.5, &LatticeOptions::default()).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.nodes()[0], Point::origin(1));
        assert_eq!(l.multiplicity(), 1);
    }

    #[test]
    fn coarse_grids_are_refused() {
        let opts = LatticeOptions {
            spacing: Some(0.6),
            ..LatticeOptions::default()
        };
        assert!(matches!(
            build_lattice(Domain::Disk, 1.0, 0.1, &opts),
            Err(Error::GridTooCoarse { .. })
        ));
        let tight = LatticeOptions {
            candidate_budget: 100,
            ..LatticeOptions::default()
        };
        assert!(matches!(
            build_lattice(Domain::Disk, 1.0, 0.01, &tight),
            Err(Error::CandidateBudget { .. })
        ));
    }

    #[test]
    fn index_matches_brute_force() {
        for d in [Domain::Disk, Domain::Polydisk(2), Domain::Ball(2)] {
            let s = Sampler::new(3, 9);
            let pts: Vec<Point> = (0..300).map(|i| s.truncated_point(d, 0.05, i)).collect();
            let index = NodeIndex::from_nodes(d, &pts);
            for i in 300..340 {
                let z = s.truncated_point(d, 0.05, i);
                for rho in [0.3, 1.0, 2.5] {
                    let brute = pts
                        .iter()
                        .filter(|w| d.distance_unchecked(&z, w) <= rho)
                        .count();
                    assert_eq!(index.count_within(&z, rho), brute, "{d} rho={rho}");
                }
            }
        }
    }

    #[test]
    fn disk_lattice_certifies() {
        let l = build_lattice(Domain::Disk, 1.0, 0.05, &LatticeOptions::default()).unwrap();
        let c = certify_lattice(&l, 4000, 0).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(c.coverage <= 1.0 && c.separation > 0.5);
    }

    #[test]
    fn removing_nodes_breaks_coverage() {
        // a greedy net covers at about r/2 + spacing, so one missing node is
        // still covered at radius r; open a hole of radius 1.5 r instead
        let d = Domain::Disk;
        let l = build_lattice(d, 1.0, 0.2, &LatticeOptions::default()).unwrap();
        let hole = [C64::new(0.5, 0.0)];
        let nodes: Vec<Point> = l
            .nodes()
            .iter()
            .filter(|w| d.distance_unchecked(&hole, w) > 1.5)
            .cloned()
            .collect();
        assert!(nodes.len() < l.len());
        let holed = Lattice::from_nodes(d, 1.0, 0.2, nodes).unwrap();
        let c = certify_lattice(&holed, 20_000, 0).unwrap();
        assert!(!c.covered && !c.passed);
        assert!(d.distance_unchecked(&hole, &c.coverage_witness) < 1.0);
    }

    #[test]
    fn duplicated_node_breaks_separation() {
        let l = build_lattice(Domain::Disk, 1.0, 0.2, &LatticeOptions::default()).unwrap();
        let mut nodes = l.nodes().to_vec();
        nodes.push(nodes[1].scaled(1.0 + 1e-9));
        let dup = Lattice::from_nodes(Domain::Disk, 1.0, 0.2, nodes).unwrap();
        assert!(!certify_lattice(&dup, 1000, 0).unwrap().separated);
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let l = build_lattice(Domain::Disk, 1.0, 0.3, &LatticeOptions::default()).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows = text.lines().filter(|s| !s.starts_with('#')).count();
        assert_eq!(rows, l.len() + 1);
        assert!(text.contains("# multiplicity="));
    }
}
