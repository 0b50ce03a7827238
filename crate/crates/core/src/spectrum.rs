//! Eigenvalue multisets, tolerance-aware matching and histograms.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{relative_residual, EigenDecomposition};
use crate::error::{Error, Result};
use crate::local::LocalOperator;
use crate::matrix::{CMatrix, C64};
use crate::zeta::trace_path_sum;

/// Options for [`eig_dense`].
#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Residual bound relative to `||A||_F`.
    pub tol: f64,
    /// Eigenvalues closer than `cluster_tol * max(1, rho)` are merged.
    pub cluster_tol: f64,
    /// Number of eigenpairs whose residual is checked.
    pub samples: usize,
    pub max_dim: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            cluster_tol: 1e-6,
            samples: 8,
            max_dim: 1 << 10,
        }
    }
}

/// Eigenvalues with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMultiset {
    entries: Vec<(C64, usize)>,
    source_dim: usize,
    worst_residual: Option<f64>,
}

impl SpectrumMultiset {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            source_dim: 0,
            worst_residual: None,
        }
    }

    /// Builds from `(value, multiplicity)` pairs; zero multiplicities are
    /// dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (C64, usize)>) -> Self {
        let entries: Vec<_> = pairs.into_iter().filter(|(_, m)| *m > 0).collect();
        let source_dim = entries.iter().map(|(_, m)| m).sum();
        Self {
            entries,
            source_dim,
            worst_residual: None,
        }
    }

    /// Each value with multiplicity one.
    pub fn from_values(values: impl IntoIterator<Item = C64>) -> Self {
        Self::from_pairs(values.into_iter().map(|v| (v, 1)))
    }

    /// Groups `values` by single linkage at distance `tol`; each group is
    /// represented by its mean.
    pub fn clustered(values: &[C64], tol: f64) -> Self {
        let n = values.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
        for (pos, &i) in order.iter().enumerate() {
            for &j in &order[pos + 1..] {
                if values[j].re - values[i].re > tol {
                    break;
                }
                if (values[i] - values[j]).norm() <= tol {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: Vec<(C64, usize, usize)> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push((values[i], 1, i));
            } else {
                let g = &mut groups[slot[root]];
                g.0 += values[i];
                g.1 += 1;
            }
        }
        Self {
            entries: groups
                .into_iter()
                .map(|(sum, m, _)| (sum / m as f64, m))
                .collect(),
            source_dim: n,
            worst_residual: None,
        }
    }

    pub fn entries(&self) -> &[(C64, usize)] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn worst_residual(&self) -> Option<f64> {
        self.worst_residual
    }

    /// Every eigenvalue repeated by its multiplicity.
    pub fn flatten(&self) -> Vec<C64> {
        self.entries
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    /// `sum_j m_j lambda_j^r`.
    pub fn power_sum(&self, r: u32) -> C64 {
        self.entries
            .iter()
            .map(|&(v, m)| v.powu(r) * m as f64)
            .sum()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.entries
            .iter()
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Multiplicity of the entry nearest to `value` within `tol`.
    pub fn multiplicity_near(&self, value: C64, tol: f64) -> usize {
        self.entries
            .iter()
            .filter(|(v, _)| (v - value).norm() <= tol)
            .map(|(_, m)| m)
            .sum()
    }

    /// Entries ordered by real part, then imaginary part.
    pub fn sorted(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        Self {
            entries,
            ..self.clone()
        }
    }
}

/// All eigenvalues of a square matrix, with multiplicities from
/// clustering and a residual check on sampled eigenpairs.
pub fn eig_dense(m: &CMatrix, opts: &EigOptions) -> Result<SpectrumMultiset> {
    if m.nrows() > opts.max_dim {
        return Err(Error::SizeCapExceeded {
            what: "dense eigensolve (dimension)",
            n: m.nrows(),
            cap: opts.max_dim,
        });
    }
    let dec = EigenDecomposition::new(m)?;
    let values = &dec.eigenvalues;
    let n = values.len();
    let worst = if n == 0 {
        0.0
    } else {
        let picks: Vec<usize> = if n <= opts.samples {
            (0..n).collect()
        } else {
            (0..opts.samples).map(|s| s * n / opts.samples).collect()
        };
        picks
            .par_iter()
            .map(|&i| {
                let v = dec.eigenvector(values[i]);
                relative_residual(m, values[i], &v)
            })
            .reduce(|| 0.0, f64::max)
    };
    if worst > opts.tol {
        return Err(Error::ResidualTooLarge {
            worst,
            tol: opts.tol,
        });
    }
    let rho = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut spec = SpectrumMultiset::clustered(values, opts.cluster_tol * rho.max(1.0));
    spec.worst_residual = Some(worst);
    Ok(spec)
}

/// Multiset union; entries of `b` within `tol` of an entry of `a` add to
/// its multiplicity, the rest are appended.
pub fn spec_union(a: &SpectrumMultiset, b: &SpectrumMultiset, tol: f64) -> SpectrumMultiset {
    let mut entries = a.entries.clone();
    for &(v, m) in &b.entries {
        let nearest = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (i, (w - v).norm()))
            .filter(|(_, d)| *d <= tol)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match nearest {
            Some((i, _)) => entries[i].1 += m,
            None => entries.push((v, m)),
        }
    }
    SpectrumMultiset {
        entries,
        source_dim: a.source_dim + b.source_dim,
        worst_residual: match (a.worst_residual, b.worst_residual) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
    }
}

/// Outcome of matching two multisets element by element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub equal: bool,
    /// Largest distance among matched pairs (infinite when sizes differ).
    pub worst_distance: f64,
    pub unmatched: usize,
}

/// Greedy nearest-neighbour matching of the flattened multisets: pairs
/// are taken in order of increasing distance. Equal when the sizes agree
/// and every matched pair is within `tol`.
pub fn match_multisets(a: &SpectrumMultiset, b: &SpectrumMultiset, tol: f64) -> MatchReport {
    let xs = a.flatten();
    let ys = b.flatten();
    if xs.len() != ys.len() {
        return MatchReport {
            equal: false,
            worst_distance: f64::INFINITY,
            unmatched: xs.len().abs_diff(ys.len()),
        };
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(xs.len() * ys.len());
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_x = vec![false; xs.len()];
    let mut used_y = vec![false; ys.len()];
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if used_x[i] || used_y[j] {
            continue;
        }
        used_x[i] = true;
        used_y[j] = true;
        worst = worst.max(d);
        matched += 1;
        if matched == xs.len() {
            break;
        }
    }
    let unmatched = xs.len() - matched;
    MatchReport {
        equal: unmatched == 0 && worst <= tol,
        worst_distance: worst,
        unmatched,
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `{ t^k with multiplicity 2 * C(n-1, k) : k = 0..n-1 }`.
pub fn t_case_spectrum(t: C64, n: usize) -> SpectrumMultiset {
    assert!(n >= 1, "n must be positive");
    let mut pairs: Vec<(C64, usize)> = Vec::with_capacity(n);
    for k in 0..n {
        let value = t.powu(k as u32);
        let mult = 2 * binomial(n as u64 - 1, k as u64) as usize;
        // exactly equal powers (t = 0, 1, -1, ...) share one entry
        match pairs.iter_mut().find(|(v, _)| *v == value) {
            Some(entry) => entry.1 += mult,
            None => pairs.push((value, mult)),
        }
    }
    SpectrumMultiset::from_pairs(pairs)
}

/// Binned eigenvalue counts on a square grid over `[-1, 1]^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramGrid {
    pub bin_size: f64,
    pub low: f64,
    pub high: f64,
    pub bins: usize,
    /// `counts[re_bin][im_bin]`.
    pub counts: Vec<Vec<u64>>,
    pub overflow: u64,
}

impl HistogramGrid {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.overflow
    }

    pub fn bin_low(&self, idx: usize) -> f64 {
        self.low + idx as f64 * self.bin_size
    }
}

/// Edges are snapped within this distance so values a few ulps past
/// +-1 still land in the closed final bin.
const EDGE_SLACK: f64 = 1e-9;

/// Half-open bins `[low, low + bin)`, except the last bin on each axis,
/// which is closed.
pub fn histogram(spec: &SpectrumMultiset, bin: f64) -> Result<HistogramGrid> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bin size must be positive, got {bin}"
        )));
    }
    let (low, high) = (-1.0, 1.0);
    let bins = ((high - low) / bin - 1e-9).ceil() as usize;
    let locate = |x: f64| -> Option<usize> {
        if x < low - EDGE_SLACK || x > high + EDGE_SLACK {
            return None;
        }
        let raw = ((x - low) / bin + 1e-9).floor();
        Some((raw.max(0.0) as usize).min(bins - 1))
    };
    let mut counts = vec![vec![0u64; bins]; bins];
    let mut overflow = 0u64;
    for &(v, m) in spec.entries() {
        match (locate(v.re), locate(v.im)) {
            (Some(i), Some(j)) => counts[i][j] += m as u64,
            _ => overflow += m as u64,
        }
    }
    Ok(HistogramGrid {
        bin_size: bin,
        low,
        high,
        bins,
        counts,
        overflow,
    })
}

/// Closed-form trace data: roots of `x^2 - (a00^00 + a11^11) x -
/// (a01^01 a10^10 - a00^00 a11^11) = 0` and the `Lambda` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormTrace {
    pub x_plus: C64,
    pub x_minus: C64,
    pub lambda_plus_cap: C64,
    pub lambda_minus_cap: C64,
    pub degenerate: bool,
}

const DEGENERACY_TOL: f64 = 1e-12;

impl ClosedFormTrace {
    pub fn new(local: &LocalOperator) -> Self {
        let a00 = local.a(0, 0, 0, 0);
        let a01 = local.a(0, 1, 0, 1);
        let a10 = local.a(1, 0, 1, 0);
        let a11 = local.a(1, 1, 1, 1);
        let disc = ((a00 - a11) * (a00 - a11) + a01 * a10 * 4.0).sqrt();
        let x_plus = (a00 + a11 + disc) * 0.5;
        let x_minus = (a00 + a11 - disc) * 0.5;
        let lambda_plus_cap = (a01 - a00 + x_plus) * (a00 + a01 - x_minus);
        let lambda_minus_cap = (a01 - a00 + x_minus) * (a00 + a01 - x_plus);
        let degenerate =
            a01.norm() <= DEGENERACY_TOL || (x_plus - x_minus).norm() <= DEGENERACY_TOL;
        Self {
            x_plus,
            x_minus,
            lambda_plus_cap,
            lambda_minus_cap,
            degenerate,
        }
    }

    /// Residual of the characteristic quadratic at both roots.
    pub fn root_residual(&self, local: &LocalOperator) -> f64 {
        let a00 = local.a(0, 0, 0, 0);
        let a01 = local.a(0, 1, 0, 1);
        let a10 = local.a(1, 0, 1, 0);
        let a11 = local.a(1, 1, 1, 1);
        let f = |x: C64| x * x - (a00 + a11) * x - (a01 * a10 - a00 * a11);
        f(self.x_plus).norm().max(f(self.x_minus).norm())
    }
}

/// Trace of the closed form, and whether the path-sum fallback was used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceValue {
    pub value: C64,
    pub degenerate: bool,
}

/// `tr(Q_n) = (x+^(n-1) L+ - x-^(n-1) L-) / (a01^01 (x+ - x-))`, falling
/// back to the diagonal path sum when the denominator degenerates.
pub fn trace_closed_form(local: &LocalOperator, n: usize) -> TraceValue {
    assert!(n >= 1, "n must be positive");
    let cf = ClosedFormTrace::new(local);
    if cf.degenerate {
        return TraceValue {
            value: trace_path_sum(local, n),
            degenerate: true,
        };
    }
    let e = (n - 1) as u32;
    let a01 = local.a(0, 1, 0, 1);
    let value = (cf.x_plus.powu(e) * cf.lambda_plus_cap - cf.x_minus.powu(e) * cf.lambda_minus_cap)
        / (a01 * (cf.x_plus - cf.x_minus));
    TraceValue {
        value,
        degenerate: false,
    }
}

/// Convenience: `t^k` values of the t-case for a local operator, if the
/// t condition holds.
pub fn t_case_for(local: &LocalOperator, n: usize, tol: f64) -> Option<SpectrumMultiset> {
    local.t_parameter(tol).map(|t| t_case_spectrum(t, n))
}
