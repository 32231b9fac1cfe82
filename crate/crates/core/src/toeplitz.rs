//! Truncated Toeplitz operators in orthonormal monomial bases, their
//! spectra, and the discretized positive Bergman operator.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{Domain, C64};
use crate::error::{Error, Result};
use crate::lattice::csv_error;
use crate::measures::{Atom, Measure};
use crate::quadrature::{
    build_rule, build_truncated_quadrature, QuadratureRule, RadialScheme, TruncatedScheme,
};

/// Largest tolerated Gram deviation before a basis is refused.
pub const GRAM_LIMIT: f64 = 1e-6;

/// Below this fraction of `||k_z||^2` captured by the basis, Berezin values
/// of a truncation are flagged.
pub const CAPTURE_THRESHOLD: f64 = 0.999;

/// Orthonormal monomials `e_alpha = c_alpha z^alpha` ordered by degree, then
/// lexicographically. The degree is the total degree, except on the
/// polydisk where it is the largest per-factor degree, so that every
/// truncation is a prefix of the next.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisSpec {
    domain: Domain,
    max_degree: u32,
    indices: Vec<Vec<u32>>,
    degrees: Vec<u32>,
    constants: Vec<f64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn multi_indices(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max_total {
        for rest in multi_indices(n - 1, max_total - first) {
            let mut a = vec![first];
            a.extend(rest);
            out.push(a);
        }
    }
    out
}

impl BasisSpec {
    /// The basis without a quadrature check; see [`build_basis`].
    pub fn new(domain: Domain, max_degree: u32) -> Self {
        let n = domain.dimension();
        let mut indices: Vec<(u32, u32, Vec<u32>)> = match domain {
            Domain::Polydisk(_) => multi_indices(n, max_degree * n as u32)
                .into_iter()
                .filter(|a| a.iter().all(|&k| k <= max_degree))
                .map(|a| (*a.iter().max().unwrap_or(&0), a.iter().sum(), a))
                .collect(),
            _ => multi_indices(n, max_degree)
                .into_iter()
                .map(|a| (a.iter().sum(), 0, a))
                .collect(),
        };
        indices.sort();
        let pi = std::f64::consts::PI;
        let constants = indices
            .iter()
            .map(|(_, _, a)| match domain {
                Domain::Polydisk(_) => a.iter().map(|&k| ((k + 1) as f64 / pi).sqrt()).product(),
                _ => {
                    let total: u32 = a.iter().sum();
                    let num = factorial(n as u32 + total);
                    let den: f64 = a.iter().map(|&k| factorial(k)).product();
                    (num / den / pi.powi(n as i32)).sqrt()
                }
            })
            .collect();
        BasisSpec {
            domain,
            max_degree,
            degrees: indices.iter().map(|t| t.0).collect(),
            indices: indices.into_iter().map(|t| t.2).collect(),
            constants,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// Number of elements of degree at most `degree`.
    pub fn prefix_len(&self, degree: u32) -> usize {
        self.degrees.partition_point(|&d| d <= degree)
    }

    /// Writes `e_j(z)` for every element into `out`.
    pub fn eval_into(&self, z: &[C64], out: &mut [C64]) {
        let max = self.max_degree as usize;
        let powers: Vec<Vec<C64>> = z
            .iter()
            .map(|&zi| {
                let mut p = Vec::with_capacity(max + 1);
                let mut acc = C64::new(1.0, 0.0);
                for _ in 0..=max {
                    p.push(acc);
                    acc *= zi;
                }
                p
            })
            .collect();
        for ((o, a), c) in out.iter_mut().zip(&self.indices).zip(&self.constants) {
            *o = a
                .iter()
                .zip(&powers)
                .fold(C64::new(*c, 0.0), |acc, (&k, p)| acc * p[k as usize]);
        }
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        self.eval_into(z, &mut out);
        out
    }

    /// `max |<e_j, e_k> - delta_jk|` under `rule`.
    pub fn gram_deviation(&self, rule: &QuadratureRule) -> f64 {
        let gram = assemble(self, rule, |_| 1.0).expect("unit weight is finite");
        let mut dev: f64 = 0.0;
        for j in 0..self.len() {
            for k in 0..self.len() {
                let target = if j == k { 1.0 } else { 0.0 };
                dev = dev.max((gram[(j, k)] - C64::new(target, 0.0)).norm());
            }
        }
        dev
    }
}

/// Basis of degree `max_degree` whose Gram matrix under `rule` is checked.
pub fn build_basis(domain: Domain, max_degree: u32, rule: &QuadratureRule) -> Result<BasisSpec> {
    if rule.domain() != domain {
        return Err(Error::InvalidParameter(format!(
            "rule is on {}, basis requested on {domain}",
            rule.domain()
        )));
    }
    let basis = BasisSpec::new(domain, max_degree);
    let deviation = basis.gram_deviation(rule);
    if deviation > GRAM_LIMIT {
        return Err(Error::GramDeviation {
            deviation,
            limit: GRAM_LIMIT,
        });
    }
    Ok(basis)
}

/// Default whole-domain rule for truncations of degree `degree`: exact on
/// the Gram matrix, graded when the density is singular at the boundary.
pub fn toeplitz_rule(domain: Domain, mu: &Measure, degree: u32) -> Result<QuadratureRule> {
    let d = degree as usize;
    let graded = mu.needs_graded();
    let resolution = match (domain, graded) {
        (Domain::Polydisk(_), true) => d + 6,
        (_, true) => 2 * d + 4,
        (_, false) => d + 4,
    };
    let scheme = if graded {
        RadialScheme::DEFAULT_GRADED
    } else {
        RadialScheme::Polar
    };
    build_rule(domain, resolution, scheme)
}

/// Node chunk for assembly; bounds the scratch matrix.
const ASSEMBLY_CHUNK: usize = 1024;

/// `M[j,k] = sum_i g(x_i) w_i e_k(x_i) conj(e_j(x_i))`, summed over nodes in
/// rule order so that every entry is independent of the basis size.
fn assemble<G>(basis: &BasisSpec, rule: &QuadratureRule, g: G) -> Result<DMatrix<C64>>
where
    G: Fn(&[C64]) -> f64 + Sync,
{
    let n = basis.len();
    let mut acc = vec![C64::new(0.0, 0.0); n * n];
    let mut e = vec![C64::new(0.0, 0.0); ASSEMBLY_CHUNK * n];
    let mut weights = Vec::with_capacity(ASSEMBLY_CHUNK);
    let total = rule.len();
    let mut start = 0;
    while start < total {
        let end = (start + ASSEMBLY_CHUNK).min(total);
        weights.clear();
        for i in start..end {
            let x = rule.node(i);
            let v = g(x);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    index: i,
                    point: crate::domains::Point(x.to_vec()).to_string(),
                });
            }
            weights.push(v * rule.weight(i));
        }
        let rows = end - start;
        e[..rows * n]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, out)| basis.eval_into(rule.node(start + r), out));
        let e = &e[..rows * n];
        let weights = &weights;
        acc.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (r, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let er = &e[r * n..(r + 1) * n];
                let cj = er[j].conj() * w;
                for k in j..n {
                    row[k] += cj * er[k];
                }
            }
        });
        start = end;
    }
    Ok(DMatrix::from_fn(n, n, |j, k| {
        if j <= k {
            acc[j * n + k]
        } else {
            acc[k * n + j].conj()
        }
    }))
}

fn add_atoms(m: &mut DMatrix<C64>, basis: &BasisSpec, atoms: &[&Atom]) {
    let n = basis.len();
    for a in atoms {
        let e = basis.eval(&a.point);
        for j in 0..n {
            let cj = e[j].conj() * a.mass;
            for k in j..n {
                m[(j, k)] += cj * e[k];
            }
        }
    }
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for k in j + 1..n {
            m[(k, j)] = m[(j, k)].conj();
        }
    }
}

/// The compression of `T_mu` to the span of a basis.
#[derive(Clone, Debug)]
pub struct ToeplitzTruncation {
    basis: BasisSpec,
    matrix: DMatrix<C64>,
}

/// `M[j,k] = int e_k conj(e_j) d mu`; the density part is integrated with
/// `rule`, atoms exactly.
pub fn toeplitz_matrix(
    mu: &Measure,
    basis: &BasisSpec,
    rule: &QuadratureRule,
) -> Result<ToeplitzTruncation> {
    let domain = basis.domain;
    if rule.domain() != domain {
        return Err(Error::InvalidParameter(format!(
            "rule is on {}, basis on {domain}",
            rule.domain()
        )));
    }
    mu.validate(domain)?;
    let mut matrix = if mu.has_density() {
        assemble(basis, rule, |x| mu.density_at(domain, x))?
    } else {
        DMatrix::zeros(basis.len(), basis.len())
    };
    add_atoms(&mut matrix, basis, &mu.atoms());
    Ok(ToeplitzTruncation {
        basis: basis.clone(),
        matrix,
    })
}

/// Builds the default rule and a checked basis of degree `degree`, then the
/// truncation.
pub fn toeplitz_default(mu: &Measure, domain: Domain, degree: u32) -> Result<ToeplitzTruncation> {
    let rule = toeplitz_rule(domain, mu, degree)?;
    let basis = build_basis(domain, degree, &rule)?;
    toeplitz_matrix(mu, &basis, &rule)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub degree: u32,
    pub size: usize,
    pub norm: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub degree: u32,
    pub size: usize,
    pub norm: f64,
}

/// The Berezin symbol of a truncation at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorBerezin {
    pub value: f64,
    /// `sum |c_j|^2` for the truncated expansion of `k_z`.
    pub capture: f64,
    /// Set when `capture` is below [`CAPTURE_THRESHOLD`].
    pub warning: bool,
}

fn eigenvalues(m: DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

impl ToeplitzTruncation {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// The truncation to elements of degree at most `degree`.
    pub fn leading(&self, degree: u32) -> DMatrix<C64> {
        let n = self.basis.prefix_len(degree);
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    /// `max |M - M^*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut d: f64 = 0.0;
        for j in 0..m.nrows() {
            for k in 0..m.ncols() {
                d = d.max((m[(j, k)] - m[(k, j)].conj()).norm());
            }
        }
        d
    }

    /// Eigenvalues in decreasing order.
    pub fn spectrum(&self) -> Vec<f64> {
        eigenvalues(self.matrix.clone())
    }

    /// Spectral norm and smallest eigenvalue of each leading truncation.
    pub fn norm_profile(&self, degrees: &[u32]) -> Vec<NormRow> {
        degrees
            .iter()
            .map(|&d| {
                let block = self.leading(d.min(self.basis.max_degree));
                let size = block.nrows();
                let ev = eigenvalues(block);
                NormRow {
                    degree: d,
                    size,
                    norm: ev
                        .first()
                        .map(|x| x.abs())
                        .unwrap_or(0.0)
                        .max(ev.last().map(|x| x.abs()).unwrap_or(0.0)),
                    min_eigenvalue: ev.last().copied().unwrap_or(0.0),
                }
            })
            .collect()
    }

    /// Spectral norm of the block on elements of degree at least `d`.
    pub fn tail_profile(&self, cutoffs: &[u32]) -> Vec<TailRow> {
        let n = self.size();
        cutoffs
            .iter()
            .map(|&d| {
                let from = if d == 0 {
                    0
                } else {
                    self.basis.prefix_len(d - 1)
                };
                let size = n - from;
                let block = self.matrix.view((from, from), (size, size)).into_owned();
                let ev = eigenvalues(block);
                TailRow {
                    degree: d,
                    size,
                    norm: ev.iter().fold(0.0f64, |m, x| m.max(x.abs())),
                }
            })
            .collect()
    }

    /// Eigenvalues above `tolerance`.
    pub fn numerical_rank(&self, tolerance: f64) -> usize {
        self.spectrum().iter().filter(|&&x| x > tolerance).count()
    }

    /// `<T k_z, k_z>` with `k_z` expanded as `sum conj(e_j(z)) e_j / sqrt(K(z,z))`.
    pub fn berezin(&self, z: &[C64]) -> Result<OperatorBerezin> {
        let domain = self.basis.domain;
        domain.check(z)?;
        let kzz = domain.diagonal_kernel_unchecked(z);
        let c: Vec<C64> = self
            .basis
            .eval(z)
            .iter()
            .map(|e| e.conj() / kzz.sqrt())
            .collect();
        let capture: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        let mut value = C64::new(0.0, 0.0);
        for j in 0..c.len() {
            let mut row = C64::new(0.0, 0.0);
            for k in 0..c.len() {
                row += self.matrix[(j, k)] * c[k];
            }
            value += c[j].conj() * row;
        }
        Ok(OperatorBerezin {
            value: value.re,
            capture,
            warning: capture < CAPTURE_THRESHOLD,
        })
    }

    /// Sparse-style CSV with one row per entry: `row,col,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "re", "im"])
            .map_err(csv_error)?;
        for j in 0..self.matrix.nrows() {
            for k in 0..self.matrix.ncols() {
                let v = self.matrix[(j, k)];
                w.serialize((j, k, v.re, v.im)).map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Norms of nested truncations of `T_mu` at the given degrees, from one
/// assembly at the largest degree.
pub fn operator_norm_profile(
    mu: &Measure,
    domain: Domain,
    degrees: &[u32],
) -> Result<Vec<NormRow>> {
    let max = check_degrees(degrees)?;
    Ok(toeplitz_default(mu, domain, max)?.norm_profile(degrees))
}

/// Tail-block norms of the truncation at the largest cutoff.
pub fn compactness_profile(mu: &Measure, domain: Domain, cutoffs: &[u32]) -> Result<Vec<TailRow>> {
    let max = check_degrees(cutoffs)?;
    Ok(toeplitz_default(mu, domain, max)?.tail_profile(cutoffs))
}

fn check_degrees(degrees: &[u32]) -> Result<u32> {
    if degrees.is_empty() || degrees.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "degrees must be nonempty and increasing".into(),
        ));
    }
    Ok(*degrees.last().expect("nonempty"))
}

/// Squared singular values of the rank-`m` factor `F[j,i] = sqrt(m_i)
/// conj(e_j(p_i))`, for which the atomic truncation is `F F^*`.
pub fn atomic_factor_spectrum(mu: &Measure, basis: &BasisSpec) -> Vec<f64> {
    let atoms = mu.atoms();
    if atoms.is_empty() || basis.is_empty() {
        return Vec::new();
    }
    let f = DMatrix::from_fn(basis.len(), atoms.len(), |j, i| {
        basis.eval(&atoms[i].point)[j].conj() * atoms[i].mass.sqrt()
    });
    let mut s: Vec<f64> = f.singular_values().iter().map(|x| x * x).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Degrees, norms, tails and ranks for one measure, as exported.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub measure: String,
    pub domain: Domain,
    pub norms: Vec<NormRow>,
    pub tails: Vec<TailRow>,
    pub rank: usize,
    pub rank_tolerance: f64,
    pub spectrum: Vec<f64>,
}

impl SpectrumReport {
    pub fn new(
        label: String,
        t: &ToeplitzTruncation,
        degrees: &[u32],
        rank_tolerance: f64,
    ) -> Self {
        let spectrum = t.spectrum();
        SpectrumReport {
            measure: label,
            domain: t.basis.domain,
            norms: t.norm_profile(degrees),
            tails: t.tail_profile(degrees),
            rank: spectrum.iter().filter(|&&x| x > rank_tolerance).count(),
            rank_tolerance,
            spectrum,
        }
    }
}

/// Power iteration settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerConfig {
    pub max_iterations: usize,
    /// Stop once `||A v - lambda v|| <= tolerance * lambda`.
    pub tolerance: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            max_iterations: 1000,
            tolerance: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Dominant eigenvalue of `A_ij = sqrt(w_i) scale |K(x_i, x_j)| sqrt(w_j)`,
/// applied without storing `A`.
pub fn positive_bergman_norm(
    rule: &QuadratureRule,
    kernel_scale: f64,
    cfg: &PowerConfig,
) -> Result<PowerResult> {
    if rule.is_empty() {
        return Err(Error::EmptySample(
            "empty rule for the positive Bergman operator".into(),
        ));
    }
    let domain = rule.domain();
    let sw: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..rule.len())
            .into_par_iter()
            .map(|i| {
                let x = rule.node(i);
                let s: f64 = (0..rule.len())
                    .map(|j| domain.kernel_unchecked(x, rule.node(j)).norm() * sw[j] * v[j])
                    .sum();
                kernel_scale * sw[i] * s
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // the Perron vector of a positive kernel is close to sqrt(w)
    let mut v: Vec<f64> = sw.clone();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut residual = f64::INFINITY;
    let mut lambda = 0.0;
    for it in 1..=cfg.max_iterations {
        let av = apply(&v);
        lambda = v.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>();
        residual = av
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / lambda.abs().max(f64::MIN_POSITIVE);
        if residual <= cfg.tolerance {
            return Ok(PowerResult {
                value: lambda,
                iterations: it,
                residual,
            });
        }
        let n = norm(&av);
        v = av.into_iter().map(|x| x / n).collect();
    }
    let _ = lambda;
    Err(Error::PowerIteration {
        iterations: cfg.max_iterations,
        residual,
    })
}

/// Settings for [`positive_bergman_norm_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PPlusOptions {
    /// Boundary distance of the truncated domain.
    pub margin: f64,
    /// Bergman size of the quadrature cells.
    pub spacing: f64,
    pub scheme: TruncatedScheme,
    pub kernel_scale: f64,
    pub power: PowerConfig,
}

impl Default for PPlusOptions {
    fn default() -> Self {
        PPlusOptions {
            margin: 0.01,
            spacing: 0.5,
            scheme: TruncatedScheme::Hyperbolic,
            kernel_scale: 1.0,
            power: PowerConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PPlusEstimate {
    pub margin: f64,
    pub scheme: TruncatedScheme,
    pub spacing: f64,
    pub nodes: usize,
    pub value: f64,
    pub iterations: usize,
    pub refined_spacing: f64,
    pub refined_nodes: usize,
    pub refined_value: f64,
    /// `|refined - value| / refined`.
    pub refinement_change: f64,
}

/// Norm of the discretized positive Bergman operator on the truncated
/// domain, at `spacing` and at `2/3` of it.
pub fn positive_bergman_norm_estimate(
    domain: Domain,
    opts: &PPlusOptions,
) -> Result<PPlusEstimate> {
    let coarse = build_truncated_quadrature(domain, opts.margin, opts.spacing, opts.scheme)?;
    let a = positive_bergman_norm(&coarse, opts.kernel_scale, &opts.power)?;
    let refined_spacing = opts.spacing * 2.0 / 3.0;
    let fine = build_truncated_quadrature(domain, opts.margin, refined_spacing, opts.scheme)?;
    let b = positive_bergman_norm(&fine, opts.kernel_scale, &opts.power)?;
    Ok(PPlusEstimate {
        margin: opts.margin,
        scheme: opts.scheme,
        spacing: opts.spacing,
        nodes: coarse.len(),
        value: a.value,
        iterations: a.iterations + b.iterations,
        refined_spacing,
        refined_nodes: fine.len(),
        refined_value: b.value,
        refinement_change: (b.value - a.value).abs() / b.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Point;
    use crate::functionals::berezin_transform;
    use crate::quadrature::{build_graded_quadrature, build_quadrature};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn basis_counts_and_constants() {
        assert_eq!(BasisSpec::new(Domain::Polydisk(2), 3).len(), 16);
        assert_eq!(BasisSpec::new(Domain::Ball(2), 3).len(), 10);
        let b = BasisSpec::new(Domain::Disk, 0);
        assert_relative_eq!(b.constants()[0], 1.0 / PI.sqrt(), epsilon = 1e-15);
        // ball(1) and the disk agree
        let a = BasisSpec::new(Domain::Ball(1), 6);
        let d = BasisSpec::new(Domain::Disk, 6);
        for (x, y) in a.constants().iter().zip(d.constants()) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
        let p = BasisSpec::new(Domain::Polydisk(2), 4);
        assert!(p.degrees().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(p.prefix_len(2), 9);
    }

    #[test]
    fn gram_is_identity() {
        let rule = build_quadrature(Domain::Disk, 14).unwrap();
        assert!(BasisSpec::new(Domain::Disk, 10).gram_deviation(&rule) < 1e-10);
        for d in [Domain::Ball(2), Domain::Polydisk(2)] {
            let rule = build_quadrature(d, 10).unwrap();
            assert!(BasisSpec::new(d, 6).gram_deviation(&rule) < 1e-10, "{d}");
        }
        let coarse = build_quadrature(Domain::Disk, 4).unwrap();
        assert!(matches!(
            build_basis(Domain::Disk, 20, &coarse),
            Err(Error::GramDeviation { .. })
        ));
    }

    #[test]
    fn matrix_examples() {
        let t = toeplitz_default(&Measure::lebesgue(), Domain::Disk, 12).unwrap();
        let id = DMatrix::<C64>::identity(13, 13);
        assert!((t.matrix() - id).iter().all(|x| x.norm() < 1e-10));
        let atom = Measure::atomic([(Point::origin(1), 1.0)]);
        let t = toeplitz_default(&atom, Domain::Disk, 8).unwrap();
        assert_relative_eq!(t.matrix()[(0, 0)].re, 1.0 / PI, epsilon = 1e-15);
        assert_eq!(t.matrix().iter().filter(|x| x.norm() > 0.0).count(), 1);
        let t = toeplitz_default(&Measure::power_vanishing(1.0), Domain::Disk, 10).unwrap();
        for k in 0..=10 {
            assert_relative_eq!(
                t.matrix()[(k, k)].re,
                1.0 / (k as f64 + 2.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn nested_truncations_agree_exactly() {
        let mu = Measure::Sum(vec![
            Measure::power_vanishing(0.5),
            Measure::atomic([(Point::scalar(C64::new(0.3, -0.2)), 0.4)]),
        ]);
        let rule = build_graded_quadrature(Domain::Disk, 24).unwrap();
        let small = toeplitz_matrix(&mu, &BasisSpec::new(Domain::Disk, 6), &rule).unwrap();
        let big = toeplitz_matrix(&mu, &BasisSpec::new(Domain::Disk, 10), &rule).unwrap();
        assert_eq!(big.leading(6), *small.matrix());
        assert!(big.hermitian_defect() == 0.0);
    }

    #[test]
    fn power_blowup_norms_grow() {
        let rows = operator_norm_profile(&Measure::power_blowup(0.5), Domain::Disk, &[10, 20, 40])
            .unwrap();
        assert!(rows[2].norm > 1.05 * rows[0].norm);
        assert!(rows.windows(2).all(|w| w[1].norm > w[0].norm));
    }

    #[test]
    fn atomic_rank_matches_factor() {
        let mu = crate::measures::catalog(Domain::Disk)
            .into_iter()
            .find(|(name, _)| name == "atomic(3)")
            .map(|(_, m)| m)
            .unwrap();
        let t = toeplitz_default(&mu, Domain::Disk, 20).unwrap();
        assert_eq!(t.numerical_rank(1e-8), 3);
        let f = atomic_factor_spectrum(&mu, t.basis());
        let s = t.spectrum();
        for i in 0..3 {
            assert_relative_eq!(s[i], f[i], max_relative = 1e-10);
        }
    }

    #[test]
    fn operator_berezin_matches_transform() {
        let rule = build_graded_quadrature(Domain::Disk, 40).unwrap();
        let mu = Measure::power_vanishing(1.0);
        let t = toeplitz_default(&mu, Domain::Disk, 30).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(0.3, 0.2)] {
            let b = t.berezin(&[z]).unwrap();
            assert!(!b.warning);
            let exact = berezin_transform(&mu, &[z], &rule).unwrap();
            assert!((b.value - exact).abs() < 1e-3, "{} {}", b.value, exact);
        }
        let atom = Measure::atomic([(Point::origin(1), 1.0)]);
        let t = toeplitz_default(&atom, Domain::Disk, 20).unwrap();
        assert!((t.berezin(&[C64::new(0.5, 0.0)]).unwrap().value - 0.17905).abs() < 1e-5);
        assert!(t.berezin(&[C64::new(0.95, 0.0)]).unwrap().warning);
    }

    #[test]
    fn positive_bergman_scaling_and_restriction() {
        let rule = build_truncated_quadrature(Domain::Disk, 0.1, 0.7, TruncatedScheme::Hyperbolic)
            .unwrap();
        let cfg = PowerConfig::default();
        let a = positive_bergman_norm(&rule, 1.0, &cfg).unwrap();
        let b = positive_bergman_norm(&rule, 2.0, &cfg).unwrap();
        assert_relative_eq!(b.value, 2.0 * a.value, max_relative = 1e-12);
        let inner = rule.restrict(|z| z[0].norm() <= 0.9);
        let c = positive_bergman_norm(&inner, 1.0, &cfg).unwrap();
        assert!(c.value <= a.value * (1.0 + 1e-9));
    }
}
